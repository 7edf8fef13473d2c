//! Dense two-phase simplex for the small linear programs that show up as
//! linear best responses over polytopes and as Frank–Wolfe bounds.
//!
//! Problem form: maximize `c·x` subject to `lo ≤ x ≤ ub`, `A x ≤ b`,
//! `E x = e`. Bland's rule is used throughout, so degenerate vertices
//! (common for the price simplex) cannot cycle.

const PIVOT_EPS: f64 = 1e-12;

pub(crate) struct LinearProgram<'a> {
    pub lower: &'a [f64],
    pub upper: &'a [f64],
    pub inequalities: Vec<(&'a [f64], f64)>,
    pub equalities: Vec<(&'a [f64], f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible { residual: f64 },
}

struct Tableau {
    cols: usize,
    // rows x (cols + 1), last column is the right-hand side
    cells: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.cells[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let p = self.cells[pr * w + pc];
        for c in 0..w {
            self.cells[pr * w + c] /= p;
        }
        let pivot_row: Vec<f64> = self.cells[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows() {
            if r == pr {
                continue;
            }
            let f = self.cells[r * w + pc];
            if f != 0.0 {
                for (cell, pv) in self.cells[r * w..(r + 1) * w].iter_mut().zip(&pivot_row) {
                    *cell -= f * pv;
                }
                self.cells[r * w + pc] = 0.0;
            }
        }
        self.basis[pr] = pc;
    }

    /// Maximizes `cost·z` over the columns allowed to enter.
    fn optimize(&mut self, cost: &[f64], allowed: &dyn Fn(usize) -> bool) {
        loop {
            let mut entering = None;
            for c in 0..self.cols {
                if !allowed(c) || self.basis.contains(&c) {
                    continue;
                }
                let reduced = cost[c]
                    - (0..self.rows())
                        .map(|r| cost[self.basis[r]] * self.at(r, c))
                        .sum::<f64>();
                if reduced > 1e-11 {
                    entering = Some(c);
                    break;
                }
            }
            let Some(pc) = entering else { return };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows() {
                let a = self.at(r, pc);
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r) / a;
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((lr, best)) => {
                            if ratio < best - 1e-14
                                || (ratio <= best + 1e-14 && self.basis[r] < self.basis[lr])
                            {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            // every variable is boxed, so an unbounded ray cannot exist
            let Some((pr, _)) = leave else { return };
            self.pivot(pr, pc);
        }
    }

    fn value_of(&self, col: usize) -> f64 {
        self.basis
            .iter()
            .position(|&b| b == col)
            .map(|r| self.rhs(r))
            .unwrap_or(0.0)
    }
}

impl LinearProgram<'_> {
    pub fn maximize(&self, c: &[f64]) -> LpOutcome {
        let n = self.lower.len();
        let ni = self.inequalities.len();
        let ne = self.equalities.len();
        // y = x - lo; columns: y (n), box slacks (n), inequality slacks (ni), artificials
        let mut rows: Vec<(Vec<f64>, f64, Option<usize>)> = Vec::with_capacity(n + ni + ne);
        for i in 0..n {
            let mut row = vec![0.0; 2 * n + ni];
            row[i] = 1.0;
            row[n + i] = 1.0;
            rows.push((row, self.upper[i] - self.lower[i], Some(n + i)));
        }
        for (j, (a, b)) in self.inequalities.iter().enumerate() {
            let shift: f64 = a.iter().zip(self.lower).map(|(ai, li)| ai * li).sum();
            let mut row = vec![0.0; 2 * n + ni];
            row[..n].copy_from_slice(a);
            row[2 * n + j] = 1.0;
            let mut rhs = b - shift;
            let mut basic = Some(2 * n + j);
            if rhs < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
                rhs = -rhs;
                basic = None;
            }
            rows.push((row, rhs, basic));
        }
        for (a, e) in &self.equalities {
            let shift: f64 = a.iter().zip(self.lower).map(|(ai, li)| ai * li).sum();
            let mut row = vec![0.0; 2 * n + ni];
            row[..n].copy_from_slice(a);
            let mut rhs = e - shift;
            if rhs < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
                rhs = -rhs;
            }
            rows.push((row, rhs, None));
        }

        let structural = 2 * n + ni;
        let artificial_rows: Vec<usize> = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.2.is_none())
            .map(|(i, _)| i)
            .collect();
        let cols = structural + artificial_rows.len();
        let mut cells = Vec::with_capacity(rows.len() * (cols + 1));
        let mut basis = Vec::with_capacity(rows.len());
        let mut next_art = structural;
        for (row, rhs, basic) in &rows {
            cells.extend_from_slice(row);
            let mut art = vec![0.0; artificial_rows.len()];
            match basic {
                Some(b) => basis.push(*b),
                None => {
                    art[next_art - structural] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            cells.extend_from_slice(&art);
            cells.push(*rhs);
        }
        let mut tab = Tableau { cols, cells, basis };

        if !artificial_rows.is_empty() {
            let mut cost = vec![0.0; cols];
            cost[structural..].iter_mut().for_each(|v| *v = -1.0);
            tab.optimize(&cost, &|_| true);
            let residual: f64 = (structural..cols).map(|c| tab.value_of(c)).sum();
            let scale = 1.0 + rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
            if residual > 1e-9 * scale {
                return LpOutcome::Infeasible { residual };
            }
            // drive zero-level artificials out of the basis where possible
            for r in 0..tab.rows() {
                if tab.basis[r] >= structural {
                    if let Some(c) = (0..structural)
                        .find(|&c| !tab.basis.contains(&c) && tab.at(r, c).abs() > 1e-9)
                    {
                        tab.pivot(r, c);
                    }
                }
            }
        }

        let mut cost = vec![0.0; cols];
        cost[..n].copy_from_slice(c);
        tab.optimize(&cost, &|col| col < structural);

        let x: Vec<f64> = (0..n)
            .map(|i| (self.lower[i] + tab.value_of(i)).clamp(self.lower[i], self.upper[i]))
            .collect();
        let value = c.iter().zip(&x).map(|(a, b)| a * b).sum();
        LpOutcome::Optimal { x, value }
    }
}
