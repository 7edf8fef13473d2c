//! Line-oriented scenario files.
//!
//! ```text
//! # comment
//! [grid]
//! horizon = 1
//! intervals = 8
//!
//! [model]
//! commodities = 2
//!
//! [producer]
//! lower = -0.4, -0.4
//! upper = 0.2, 0.4
//!
//! [consumer]
//! endowment = 1, 0.5
//! upper = 2, 2
//! utility = shifted-log
//! weights = 0.78, 0.6
//! offset = 0.1
//! shares = 1
//!
//! [solver]
//! seed = 7
//! ```
//!
//! A trajectory is given either by `l` reals (constant in time) or by
//! `l·m` reals listed interval by interval.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::economy::{AffineCut, Consumer, ConsumptionSet, EconomyModel, ProductionSet, Utility};
use crate::error::{Error, Result};
use crate::fnspace::{TimeGrid, Trajectory};
use crate::gnep::{Damping, InnerOptions, ResponseRule, SolverSchedule, UpdateOrder};
use crate::verify::Tolerances;

const SECTIONS: &[&str] = &["grid", "model", "producer", "consumer", "solver", "tolerances", "output"];
const REPEATED: &[&str] = &["producer", "consumer"];

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub schedule: SolverSchedule,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSettings {
    pub report: PathBuf,
    pub series: PathBuf,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self { report: "report.txt".into(), series: "series.csv".into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub model: EconomyModel,
    pub solver: SolverSettings,
    pub tolerances: Tolerances,
    pub output: OutputSettings,
}

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    /// 0 for entries set by an override.
    line: usize,
}

#[derive(Debug, Clone)]
struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

/// A parsed but uninterpreted scenario file.
#[derive(Debug, Clone, Default)]
pub struct Document {
    sections: Vec<Section>,
}

fn parse_err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, message: message.into() })
}

impl Document {
    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = Document::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    return parse_err(line, "unterminated section header");
                };
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    return parse_err(line, format!("unknown section [{name}]"));
                }
                if !REPEATED.contains(&name) {
                    if let Some(prev) = doc.sections.iter().find(|s| s.name == name) {
                        return parse_err(line, format!("duplicate section [{name}] (first on line {})", prev.line));
                    }
                }
                doc.sections.push(Section { name: name.to_string(), line, entries: Vec::new() });
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return parse_err(line, format!("expected `key = value`, found `{content}`"));
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return parse_err(line, format!("malformed key `{key}`"));
            }
            if value.is_empty() {
                return parse_err(line, format!("key `{key}` has no value"));
            }
            let Some(section) = doc.sections.last_mut() else {
                return parse_err(line, "key outside of any section");
            };
            if key != "cut" {
                if let Some(prev) = section.entries.iter().find(|e| e.key == key) {
                    return parse_err(line, format!("duplicate key `{key}` (first set on line {})", prev.line));
                }
            }
            section.entries.push(Entry { key: key.into(), value: value.into(), line });
        }
        Ok(doc)
    }

    /// Applies `section.key=value`, or `section.index.key=value` for
    /// producer and consumer sections.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(format!("override `{spec}`: {m}")));
        let Some((path, value)) = spec.split_once('=') else {
            return bad("expected key=value".into());
        };
        let (path, value) = (path.trim(), value.trim());
        let parts: Vec<&str> = path.split('.').collect();
        let (name, index, key) = match parts.as_slice() {
            [s, k] if !REPEATED.contains(s) => (*s, 0, *k),
            [s, i, k] if REPEATED.contains(s) => match i.parse::<usize>() {
                Ok(i) => (*s, i, *k),
                Err(_) => return bad(format!("`{i}` is not a section index")),
            },
            _ => return bad("expected section.key or producer|consumer.index.key".into()),
        };
        if !SECTIONS.contains(&name) {
            return bad(format!("unknown section `{name}`"));
        }
        if key == "cut" {
            return bad("cuts cannot be overridden".into());
        }
        let mut found = self.sections.iter_mut().filter(|s| s.name == name).nth(index);
        if found.is_none() && !REPEATED.contains(&name) {
            self.sections.push(Section { name: name.into(), line: 0, entries: Vec::new() });
            found = self.sections.last_mut();
        }
        let Some(section) = found else {
            return bad(format!("there is no [{name}] section number {index}"));
        };
        match section.entries.iter_mut().find(|e| e.key == key) {
            Some(e) => {
                e.value = value.into();
                e.line = 0;
            }
            None => section.entries.push(Entry { key: key.into(), value: value.into(), line: 0 }),
        }
        Ok(())
    }

    pub fn interpret(&self) -> Result<Scenario> {
        build(self)
    }
}

/// Parses and interprets a scenario file, then validates the model.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let scenario = Document::parse(text)?.interpret()?;
    scenario.model.validate_seeded(scenario.solver.seed).into_result()?;
    Ok(scenario)
}

struct Reader<'a> {
    section: &'a Section,
    allowed: &'static [&'static str],
}

impl<'a> Reader<'a> {
    fn new(section: &'a Section, allowed: &'static [&'static str]) -> Result<Self> {
        for e in &section.entries {
            if !allowed.contains(&e.key.as_str()) {
                return parse_err(e.line, format!("unknown key `{}` in [{}]", e.key, section.name));
            }
        }
        Ok(Self { section, allowed })
    }

    fn entry(&self, key: &str) -> Option<&'a Entry> {
        debug_assert!(self.allowed.contains(&key));
        self.section.entries.iter().find(|e| e.key == key)
    }

    fn required(&self, key: &str) -> Result<&'a Entry> {
        self.entry(key).map_or_else(
            || parse_err(self.section.line, format!("[{}] is missing `{key}`", self.section.name)),
            Ok,
        )
    }

    fn reject(&self, key: &str, why: &str) -> Result<()> {
        match self.entry(key) {
            Some(e) => parse_err(e.line, format!("`{key}` {why}")),
            None => Ok(()),
        }
    }
}

fn real(e: &Entry, text: &str) -> Result<f64> {
    match text.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => parse_err(e.line, format!("`{}`: `{}` is not a finite real", e.key, text.trim())),
    }
}

fn reals(e: &Entry) -> Result<Vec<f64>> {
    e.value.split(',').map(|t| real(e, t)).collect()
}

fn scalar(e: &Entry) -> Result<f64> {
    real(e, &e.value)
}

fn integer<T: std::str::FromStr>(e: &Entry) -> Result<T> {
    e.value
        .parse::<T>()
        .or_else(|_| parse_err(e.line, format!("`{}`: `{}` is not a nonnegative integer", e.key, e.value)))
}

fn boolean(e: &Entry) -> Result<bool> {
    match e.value.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => parse_err(e.line, format!("`{}`: expected true or false, found `{other}`", e.key)),
    }
}

fn trajectory(e: &Entry, grid: TimeGrid, l: usize) -> Result<Trajectory> {
    let v = reals(e)?;
    let m = grid.intervals();
    if v.len() == l {
        Trajectory::constant(grid, &v)
    } else if v.len() == l * m {
        Trajectory::from_values(grid, l, v)
    } else {
        parse_err(e.line, format!("`{}`: expected {l} or {} values, found {}", e.key, l * m, v.len()))
    }
}

fn single<'a>(doc: &'a Document, name: &str) -> Option<&'a Section> {
    doc.sections.iter().find(|s| s.name == name)
}

fn build(doc: &Document) -> Result<Scenario> {
    let Some(grid_section) = single(doc, "grid") else {
        return parse_err(1, "missing [grid] section");
    };
    let r = Reader::new(grid_section, &["horizon", "intervals"])?;
    let (he, me) = (r.required("horizon")?, r.required("intervals")?);
    let grid = TimeGrid::new(scalar(he)?, integer(me)?)
        .or_else(|err| parse_err(grid_section.line, err.to_string()))?;

    let Some(model_section) = single(doc, "model") else {
        return parse_err(grid_section.line, "missing [model] section");
    };
    let r = Reader::new(model_section, &["commodities", "truncation"])?;
    let ce = r.required("commodities")?;
    let l: usize = integer(ce)?;
    if l == 0 {
        return parse_err(ce.line, "at least one commodity is required");
    }
    let truncation = r.entry("truncation").map(boolean).transpose()?.unwrap_or(true);

    let mut producers = Vec::new();
    for sec in doc.sections.iter().filter(|s| s.name == "producer") {
        let r = Reader::new(sec, &["lower", "upper", "cut"])?;
        let lower = trajectory(r.required("lower")?, grid, l)?;
        let upper = trajectory(r.required("upper")?, grid, l)?;
        let mut cuts = Vec::new();
        for e in sec.entries.iter().filter(|e| e.key == "cut") {
            let v = reals(e)?;
            let coef = &v[1..];
            let coef = if coef.len() == l {
                Trajectory::constant(grid, coef)?
            } else if coef.len() == l * grid.intervals() {
                Trajectory::from_values(grid, l, coef.to_vec())?
            } else {
                return parse_err(e.line, format!("`cut`: expected rhs then {l} or {} coefficients", l * grid.intervals()));
            };
            cuts.push(AffineCut { coef, rhs: v[0] });
        }
        producers.push(ProductionSet { lower, upper, cuts });
    }
    let s = producers.len();

    let mut consumers = Vec::new();
    let mut shares = Vec::new();
    for sec in doc.sections.iter().filter(|s| s.name == "consumer") {
        let r = Reader::new(
            sec,
            &["endowment", "floor", "upper", "utility", "weights", "offset", "target", "curvature", "shares"],
        )?;
        let endowment = trajectory(r.required("endowment")?, grid, l)?;
        let floor = match r.entry("floor") {
            Some(e) => trajectory(e, grid, l)?,
            None => Trajectory::zeros(grid, l),
        };
        let upper = trajectory(r.required("upper")?, grid, l)?;
        let ue = r.required("utility")?;
        let utility = match ue.value.as_str() {
            "linear" => {
                r.reject("offset", "does not apply to a linear utility")?;
                r.reject("target", "does not apply to a linear utility")?;
                r.reject("curvature", "does not apply to a linear utility")?;
                Utility::Linear { weights: trajectory(r.required("weights")?, grid, l)? }
            }
            "shifted-log" => {
                r.reject("target", "does not apply to a shifted-log utility")?;
                r.reject("curvature", "does not apply to a shifted-log utility")?;
                Utility::ShiftedLog { weights: reals(r.required("weights")?)?, offset: scalar(r.required("offset")?)? }
            }
            "quadratic" => {
                r.reject("weights", "does not apply to a quadratic utility")?;
                r.reject("offset", "does not apply to a quadratic utility")?;
                Utility::Quadratic {
                    target: trajectory(r.required("target")?, grid, l)?,
                    curvature: scalar(r.required("curvature")?)?,
                }
            }
            other => {
                return parse_err(ue.line, format!("unknown utility `{other}` (linear, shifted-log, quadratic)"))
            }
        };
        shares.push(match r.entry("shares") {
            Some(e) => reals(e)?,
            None if s == 0 => Vec::new(),
            None => return parse_err(sec.line, "[consumer] is missing `shares`"),
        });
        consumers.push(Consumer { set: ConsumptionSet { floor, upper, utility }, endowment });
    }

    let Some(solver_section) = single(doc, "solver") else {
        return parse_err(model_section.line, "missing [solver] section (a seed is required)");
    };
    let solver = solver_settings(solver_section)?;

    let tolerances = match single(doc, "tolerances") {
        None => Tolerances::default(),
        Some(sec) => {
            let r = Reader::new(sec, &["producer", "consumer", "price", "clearing", "walras"])?;
            let mut t = Tolerances::default();
            for (key, slot) in [
                ("producer", &mut t.producer),
                ("consumer", &mut t.consumer),
                ("price", &mut t.price),
                ("clearing", &mut t.clearing),
                ("walras", &mut t.walras),
            ] {
                if let Some(e) = r.entry(key) {
                    let v = scalar(e)?;
                    if !(v > 0.0) {
                        return parse_err(e.line, format!("`{key}` tolerance must be positive"));
                    }
                    *slot = v;
                }
            }
            t
        }
    };

    let output = match single(doc, "output") {
        None => OutputSettings::default(),
        Some(sec) => {
            let r = Reader::new(sec, &["report", "series"])?;
            let mut o = OutputSettings::default();
            if let Some(e) = r.entry("report") {
                o.report = e.value.clone().into();
            }
            if let Some(e) = r.entry("series") {
                o.series = e.value.clone().into();
            }
            o
        }
    };

    let model = EconomyModel { grid, commodities: l, producers, consumers, shares, truncation };
    Ok(Scenario { model, solver, tolerances, output })
}

fn solver_settings(sec: &Section) -> Result<SolverSettings> {
    let r = Reader::new(
        sec,
        &[
            "seed",
            "max_iters",
            "gap_tolerance",
            "inner_tolerance",
            "inner_max_iterations",
            "damping",
            "lambda",
            "decay",
            "rule",
            "step",
            "order",
        ],
    )?;
    let seed = integer(r.required("seed")?)?;
    let mut sched = SolverSchedule::default();
    if let Some(e) = r.entry("max_iters") {
        sched.max_iters = integer(e)?;
    }
    if let Some(e) = r.entry("gap_tolerance") {
        sched.gap_tolerance = scalar(e)?;
    }
    let mut inner = InnerOptions::default();
    if let Some(e) = r.entry("inner_tolerance") {
        inner.tolerance = scalar(e)?;
    }
    if let Some(e) = r.entry("inner_max_iterations") {
        inner.max_iterations = integer(e)?;
    }
    sched.inner = inner;

    let lambda = r.entry("lambda").map(scalar).transpose()?;
    sched.damping = match r.entry("damping").map(|e| (e, e.value.as_str())) {
        None | Some((_, "fixed")) => {
            r.reject("decay", "applies only to diminishing damping")?;
            Damping::Fixed(lambda.unwrap_or(1.0))
        }
        Some((_, "diminishing")) => Damping::Diminishing {
            initial: lambda.unwrap_or(1.0),
            decay: scalar(r.required("decay")?)?,
        },
        Some((e, other)) => return parse_err(e.line, format!("unknown damping `{other}` (fixed, diminishing)")),
    };

    let step = r.entry("step").map(scalar).transpose()?;
    sched.rule = match r.entry("rule").map(|e| (e, e.value.as_str())) {
        None | Some((_, "extra-proximal")) => ResponseRule::ExtraProximal { step: step.unwrap_or(0.5) },
        Some((_, "proximal")) => ResponseRule::Proximal { step: step.unwrap_or(0.5) },
        Some((_, "exact")) => {
            r.reject("step", "does not apply to the exact rule")?;
            ResponseRule::Exact
        }
        Some((e, other)) => {
            return parse_err(e.line, format!("unknown rule `{other}` (extra-proximal, proximal, exact)"))
        }
    };
    sched.order = match r.entry("order").map(|e| (e, e.value.as_str())) {
        None | Some((_, "jacobi")) => UpdateOrder::Jacobi,
        Some((_, "gauss-seidel")) => UpdateOrder::GaussSeidel,
        Some((e, other)) => return parse_err(e.line, format!("unknown order `{other}` (jacobi, gauss-seidel)")),
    };
    sched.validate().or_else(|err| parse_err(sec.line, err.to_string()))?;
    Ok(SolverSettings { schedule: sched, seed })
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

fn traj(t: &Trajectory) -> String {
    let l = t.dim();
    let first = t.row(0);
    if (0..t.grid().intervals()).all(|k| t.row(k) == first) {
        list(&t.values()[..l])
    } else {
        list(t.values())
    }
}

/// Writes `scenario` in the file format; parsing the result gives back an
/// equal scenario.
pub fn serialize_scenario(sc: &Scenario) -> String {
    let m = &sc.model;
    let mut o = String::new();
    let _ = writeln!(o, "[grid]\nhorizon = {:?}\nintervals = {}\n", m.grid.horizon(), m.grid.intervals());
    let _ = writeln!(o, "[model]\ncommodities = {}\ntruncation = {}", m.commodities, m.truncation);
    for p in &m.producers {
        let _ = writeln!(o, "\n[producer]\nlower = {}\nupper = {}", traj(&p.lower), traj(&p.upper));
        for c in &p.cuts {
            let _ = writeln!(o, "cut = {:?}, {}", c.rhs, traj(&c.coef));
        }
    }
    for (i, c) in m.consumers.iter().enumerate() {
        let _ = writeln!(
            o,
            "\n[consumer]\nendowment = {}\nfloor = {}\nupper = {}\nutility = {}",
            traj(&c.endowment),
            traj(&c.set.floor),
            traj(&c.set.upper),
            c.set.utility.name()
        );
        match &c.set.utility {
            Utility::Linear { weights } => {
                let _ = writeln!(o, "weights = {}", traj(weights));
            }
            Utility::ShiftedLog { weights, offset } => {
                let _ = writeln!(o, "weights = {}\noffset = {offset:?}", list(weights));
            }
            Utility::Quadratic { target, curvature } => {
                let _ = writeln!(o, "target = {}\ncurvature = {curvature:?}", traj(target));
            }
        }
        if let Some(row) = m.shares.get(i).filter(|r| !r.is_empty()) {
            let _ = writeln!(o, "shares = {}", list(row));
        }
    }

    let s = &sc.solver.schedule;
    let _ = writeln!(o, "\n[solver]\nseed = {}\nmax_iters = {}", sc.solver.seed, s.max_iters);
    let _ = writeln!(o, "gap_tolerance = {:?}", s.gap_tolerance);
    let _ = writeln!(o, "inner_tolerance = {:?}", s.inner.tolerance);
    let _ = writeln!(o, "inner_max_iterations = {}", s.inner.max_iterations);
    match s.damping {
        Damping::Fixed(l) => {
            let _ = writeln!(o, "damping = fixed\nlambda = {l:?}");
        }
        Damping::Diminishing { initial, decay } => {
            let _ = writeln!(o, "damping = diminishing\nlambda = {initial:?}\ndecay = {decay:?}");
        }
    }
    match s.rule {
        ResponseRule::ExtraProximal { step } => {
            let _ = writeln!(o, "rule = extra-proximal\nstep = {step:?}");
        }
        ResponseRule::Proximal { step } => {
            let _ = writeln!(o, "rule = proximal\nstep = {step:?}");
        }
        ResponseRule::Exact => {
            let _ = writeln!(o, "rule = exact");
        }
    }
    let order = match s.order {
        UpdateOrder::Jacobi => "jacobi",
        UpdateOrder::GaussSeidel => "gauss-seidel",
    };
    let _ = writeln!(o, "order = {order}");

    let t = &sc.tolerances;
    let _ = writeln!(
        o,
        "\n[tolerances]\nproducer = {:?}\nconsumer = {:?}\nprice = {:?}\nclearing = {:?}\nwalras = {:?}",
        t.producer, t.consumer, t.price, t.clearing, t.walras
    );
    let _ = writeln!(
        o,
        "\n[output]\nreport = {}\nseries = {}",
        sc.output.report.display(),
        sc.output.series.display()
    );
    o
}
