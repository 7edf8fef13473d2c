//! The time-series table: one row per grid interval with the midpoint `t`,
//! every production, consumption, price and excess-demand coordinate.

use crate::economy::{Allocation, EconomyModel};
use crate::error::{Error, Result};
use crate::fnspace::Trajectory;

/// Header names in column order.
pub fn header(model: &EconomyModel) -> Vec<String> {
    let l = model.commodities;
    let mut cols = vec!["t".to_string()];
    for j in 0..model.producers() {
        cols.extend((0..l).map(|h| format!("a{j}_{h}")));
    }
    for i in 0..model.consumers() {
        cols.extend((0..l).map(|h| format!("b{i}_{h}")));
    }
    cols.extend((0..l).map(|h| format!("p_{h}")));
    cols.extend((0..l).map(|h| format!("z_{h}")));
    cols
}

/// 17 significant digits.
fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_table(model: &EconomyModel, alloc: &Allocation) -> Result<String> {
    let z = model.excess_demand(&alloc.production, &alloc.consumption)?;
    let mut out = header(model).join(",");
    out.push('\n');
    for k in 0..model.grid.intervals() {
        let mut row = vec![real(model.grid.node(k))];
        for t in alloc.production.iter().chain(&alloc.consumption).chain([&alloc.prices, &z]) {
            row.extend(t.row(k).iter().map(|v| real(*v)));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

fn bad<T>(line: usize, message: String) -> Result<T> {
    Err(Error::Parse { line, message })
}

/// Reads a table written by [`write_table`] back into an allocation. The
/// header and the `t` column must match the model.
pub fn read_table(model: &EconomyModel, text: &str) -> Result<Allocation> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let expected = header(model);
    let Some((_, head)) = lines.next() else {
        return bad(1, "empty time-series table".into());
    };
    let found: Vec<&str> = head.split(',').map(str::trim).collect();
    if found != expected {
        return bad(1, format!("header does not match the scenario: expected `{}`", expected.join(",")));
    }
    let (l, m) = (model.commodities, model.grid.intervals());
    let blocks = model.producers() + model.consumers() + 1;
    let mut cols = vec![Vec::with_capacity(m * l); blocks];
    let mut rows = 0;
    for (idx, text) in lines {
        let line = idx + 1;
        let cells = text
            .split(',')
            .map(|c| c.trim().parse::<f64>().or_else(|_| bad(line, format!("`{}` is not a real", c.trim()))))
            .collect::<Result<Vec<f64>>>()?;
        if cells.len() != expected.len() {
            return bad(line, format!("expected {} columns, found {}", expected.len(), cells.len()));
        }
        if rows >= m {
            return bad(line, format!("more than {m} rows"));
        }
        let t = model.grid.node(rows);
        if (cells[0] - t).abs() > 1e-12 * (1.0 + t.abs()) {
            return bad(line, format!("t = {} does not match the grid node {t}", cells[0]));
        }
        for (b, col) in cols.iter_mut().enumerate() {
            col.extend_from_slice(&cells[1 + b * l..1 + (b + 1) * l]);
        }
        rows += 1;
    }
    if rows != m {
        return bad(text.lines().count(), format!("expected {m} rows, found {rows}"));
    }
    let mut trajs = cols
        .into_iter()
        .map(|v| Trajectory::from_values(model.grid, l, v))
        .collect::<Result<Vec<_>>>()?;
    let prices = trajs.pop().expect("price block");
    let consumption = trajs.split_off(model.producers());
    Ok(Allocation { production: trajs, consumption, prices })
}
