//! `key = value` run reports.

use crate::verify::{EquilibriumCertificate, Tolerances};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    lines: Vec<(String, String)>,
}

impl Report {
    pub fn text(&mut self, key: &str, value: &str) {
        // values stay on one line
        self.lines.push((key.into(), value.replace('\n', " ")));
    }

    pub fn real(&mut self, key: &str, value: f64) {
        self.lines.push((key.into(), format!("{value:.16e}")));
    }

    pub fn int(&mut self, key: &str, value: u64) {
        self.lines.push((key.into(), value.to_string()));
    }

    pub fn flag(&mut self, key: &str, value: bool) {
        self.lines.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn tolerances(&mut self, t: &Tolerances) {
        self.real("tolerance.producer", t.producer);
        self.real("tolerance.consumer", t.consumer);
        self.real("tolerance.price", t.price);
        self.real("tolerance.clearing", t.clearing);
        self.real("tolerance.walras", t.walras);
    }

    pub fn certificate(&mut self, c: &EquilibriumCertificate) {
        for (j, g) in c.producer_gaps.iter().enumerate() {
            self.real(&format!("producer_gap.{j}"), *g);
        }
        for (j, v) in c.producer_profits.iter().enumerate() {
            self.real(&format!("producer_profit.{j}"), *v);
        }
        for (i, g) in c.consumer_gaps.iter().enumerate() {
            self.real(&format!("consumer_gap.{i}"), *g);
        }
        self.real("price_gap", c.price_gap);
        for (h, v) in c.clearing_integrals.iter().enumerate() {
            self.real(&format!("clearing_integral.{h}"), *v);
        }
        self.real("walras_residual", c.walras.residual);
        self.flag("walras_applicable", c.walras.applicable);
        self.text("walras_reason", &c.walras.reason);
        self.tolerances(&c.tolerances);
        self.flag("accepted", c.accepted);
        for (n, f) in c.failures().iter().enumerate() {
            self.text(&format!("failure.{n}"), f);
        }
    }

    pub fn render(&self) -> String {
        self.lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Reads a rendered report back.
    pub fn parse(text: &str) -> Self {
        let lines = text
            .lines()
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self { lines }
    }
}
