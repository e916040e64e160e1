//! Experiment configuration files.
//!
//! The format is line oriented: `# comment`, `[section]` headers and
//! `key = value` pairs. There are three sections, `[family]`,
//! `[truncation]` and `[task]`; every key must be known for its section (and
//! for the chosen family kind and task), and each key may appear once.
//!
//! ```text
//! [family]
//! kind = photon_added
//! lambda = 0.5
//!
//! [truncation]
//! n_max = 60
//!
//! [task]
//! name = eval
//! z = 0+1i, 0.3-0.2i
//! ```
//!
//! Lists are comma separated; complex numbers are written `a`, `bi`, `a+bi`
//! or `a-bi`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::families::{EntireSeries, FamilyDescriptor, Prefactor, DEFAULT_EPSILON};
use crate::fock::TruncationPolicy;
use crate::nonlinearity::{NonlinearitySpec, TrappedIonVariant};

pub const DEFAULT_N_MAX: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}", self.render())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn new(line: Option<usize>, field: Option<&str>, message: impl Into<String>) -> Self {
        Self {
            line,
            field: field.map(str::to_owned),
            message: message.into(),
        }
    }

    fn render(&self) -> String {
        let mut out = String::from("config error");
        if let Some(l) = self.line {
            out.push_str(&format!(" at line {l}"));
        }
        if let Some(f) = &self.field {
            out.push_str(&format!(" (key `{f}`)"));
        }
        out.push_str(": ");
        out.push_str(&self.message);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Task {
    Eval,
    Verify,
    Moments,
    Scan,
    DualCompare,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::Eval, Task::Verify, Task::Moments, Task::Scan, Task::DualCompare];

    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Eval => "eval",
            Task::Verify => "verify",
            Task::Moments => "moments",
            Task::Scan => "scan",
            Task::DualCompare => "dual-compare",
        }
    }

    fn keys(&self) -> &'static [&'static str] {
        match self {
            Task::Eval | Task::DualCompare => &["name", "z"],
            Task::Verify => &["name", "z", "vectors"],
            Task::Moments => &["name", "max_n", "grid_nodes", "fit_tol", "frame_tol", "n_theta"],
            Task::Scan => &["name", "r_min", "r_max", "n_r", "n_theta"],
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown task `{s}` (expected eval, verify, moments, scan or dual-compare)"))
    }
}

/// Polar scan grid `r_min + (r_max - r_min) i/(n_r - 1)`, `θ = 2π j/n_theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    pub n_theta: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskParams {
    Eval { z: Vec<Complex64> },
    Verify { z: Option<Vec<Complex64>>, vectors: usize },
    Moments {
        max_n: usize,
        grid_nodes: usize,
        fit_tol: f64,
        frame_tol: f64,
        n_theta: Option<usize>,
    },
    Scan(ScanGrid),
    DualCompare { z: Vec<Complex64> },
}

impl TaskParams {
    pub fn task(&self) -> Task {
        match self {
            TaskParams::Eval { .. } => Task::Eval,
            TaskParams::Verify { .. } => Task::Verify,
            TaskParams::Moments { .. } => Task::Moments,
            TaskParams::Scan(_) => Task::Scan,
            TaskParams::DualCompare { .. } => Task::DualCompare,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub family: FamilyDescriptor,
    pub trunc: TruncationPolicy,
    pub epsilon: f64,
    pub params: TaskParams,
}

impl ExperimentConfig {
    pub fn task(&self) -> Task {
        self.params.task()
    }

    /// The same experiment with a different `n_max`.
    pub fn with_n_max(mut self, n_max: usize) -> Result<Self, ConfigError> {
        self.trunc = self
            .trunc
            .resized(n_max)
            .map_err(|e| ConfigError::new(None, Some("n_max"), e.to_string()))?;
        Ok(self)
    }
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Default)]
struct Section {
    line: usize,
    entries: BTreeMap<String, Entry>,
}

impl Section {
    fn check_keys(&self, name: &str, allowed: &[&str], context: &str) -> Result<(), ConfigError> {
        for (k, e) in &self.entries {
            if !allowed.contains(&k.as_str()) {
                return Err(ConfigError::new(
                    Some(e.line),
                    Some(k),
                    format!("unknown key in [{name}]{context}; allowed: {}", allowed.join(", ")),
                ));
            }
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn required(&self, section: &str, key: &str) -> Result<&Entry, ConfigError> {
        self.raw(key).ok_or_else(|| {
            ConfigError::new(Some(self.line), Some(key), format!("missing required key in [{section}]"))
        })
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|err| ConfigError::new(Some(e.line), Some(key), format!("cannot parse `{}`: {err}", e.value))),
        }
    }

    fn parse_required<T: FromStr>(&self, section: &str, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.required(section, key)?;
        Ok(self.parse(key)?.expect("present"))
    }

    fn list_f64(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => split_list(&e.value)
                .map(|s| s.parse::<f64>().map_err(|err| format!("`{s}`: {err}")))
                .collect::<Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|m| ConfigError::new(Some(e.line), Some(key), format!("cannot parse list: {m}"))),
        }
    }

    fn list_complex(&self, key: &str) -> Result<Option<Vec<Complex64>>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => {
                let zs = split_list(&e.value)
                    .map(parse_complex)
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|m| ConfigError::new(Some(e.line), Some(key), m))?;
                if zs.is_empty() {
                    return Err(ConfigError::new(Some(e.line), Some(key), "empty list"));
                }
                Ok(Some(zs))
            }
        }
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty())
}

/// Parses `a`, `bi`, `a+bi`, `a-bi` (also `i`, `-i`, `a+i`).
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("`{s}` is not a complex number");
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        let re = t.parse::<f64>().map_err(|_| bad())?;
        return finite(Complex64::new(re, 0.0)).ok_or_else(bad);
    };
    // split at the last sign that is not part of an exponent or the leading sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |part: &str| -> Result<f64, String> {
        match part {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            p => p.parse::<f64>().map_err(|_| bad()),
        }
    };
    let z = match split {
        Some(k) => Complex64::new(body[..k].parse::<f64>().map_err(|_| bad())?, imag(&body[k..])?),
        None => Complex64::new(0.0, imag(body)?),
    };
    finite(z).ok_or_else(bad)
}

fn finite(z: Complex64) -> Option<Complex64> {
    (z.re.is_finite() && z.im.is_finite()).then_some(z)
}

const SECTIONS: [&str; 3] = ["family", "truncation", "task"];

fn split_sections(text: &str) -> Result<BTreeMap<&'static str, Section>, ConfigError> {
    let mut sections: BTreeMap<&'static str, Section> = BTreeMap::new();
    let mut current: Option<&'static str> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::new(Some(line_no), None, "unterminated section header"))?
                .trim();
            let name = SECTIONS.into_iter().find(|s| *s == name).ok_or_else(|| {
                ConfigError::new(
                    Some(line_no),
                    None,
                    format!("unknown section [{name}]; expected [family], [truncation] or [task]"),
                )
            })?;
            if sections.contains_key(name) {
                return Err(ConfigError::new(Some(line_no), None, format!("duplicate section [{name}]")));
            }
            sections.insert(
                name,
                Section {
                    line: line_no,
                    entries: BTreeMap::new(),
                },
            );
            current = Some(name);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::new(Some(line_no), None, format!("expected `key = value`, found `{line}`")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::new(Some(line_no), None, "empty key"));
        }
        let section = current.ok_or_else(|| {
            ConfigError::new(Some(line_no), Some(key), "key appears before any section header")
        })?;
        let sec = sections.get_mut(section).expect("inserted with header");
        if sec.entries.contains_key(key) {
            return Err(ConfigError::new(Some(line_no), Some(key), "duplicate key"));
        }
        sec.entries.insert(
            key.to_owned(),
            Entry {
                value: value.trim().to_owned(),
                line: line_no,
            },
        );
    }
    Ok(sections)
}

/// Family kinds and the keys each accepts.
fn family_keys(kind: &str) -> Option<&'static [&'static str]> {
    Some(match kind {
        "canonical" | "sqrt_n" => &["kind"],
        "gp" | "bg" => &["kind", "kappa"],
        "q_osc" => &["kind", "q"],
        "trapped_ion" => &["kind", "eta", "variant"],
        "hypergeometric" => &["kind", "alpha", "beta"],
        "table" => &["kind", "values"],
        "rescaled" => &[
            "kind", "spec", "reciprocal", "kappa", "q", "eta", "variant", "alpha", "beta", "values",
        ],
        "photon_added" => &["kind", "lambda", "g", "prefactor"],
        "binomial" => &["kind", "mu"],
        "squeezed" => &["kind", "u", "v"],
        _ => return None,
    })
}

fn spec_keys(spec: &str) -> Option<&'static [&'static str]> {
    Some(match spec {
        "canonical" | "sqrt_n" => &[],
        "gp" | "bg" => &["kappa"],
        "q_osc" => &["q"],
        "trapped_ion" => &["eta", "variant"],
        "hypergeometric" => &["alpha", "beta"],
        "table" => &["values"],
        _ => return None,
    })
}

fn invalid(e: &Entry, key: &str, err: impl fmt::Display) -> ConfigError {
    ConfigError::new(Some(e.line), Some(key), err.to_string())
}

fn parse_spec(sec: &Section, name: &str, anchor: &Entry, anchor_key: &str) -> Result<NonlinearitySpec, ConfigError> {
    let wrap = |r: crate::Result<NonlinearitySpec>| r.map_err(|e| invalid(anchor, anchor_key, e));
    // single-parameter specs report their own key and line
    let scalar = |key: &str, build: fn(f64) -> crate::Result<NonlinearitySpec>| {
        let v = sec.parse_required("family", key)?;
        build(v).map_err(|e| invalid(sec.raw(key).expect("present"), key, e))
    };
    match name {
        "canonical" => Ok(NonlinearitySpec::Canonical),
        "sqrt_n" => Ok(NonlinearitySpec::SqrtN),
        "gp" => scalar("kappa", NonlinearitySpec::gp),
        "bg" => scalar("kappa", NonlinearitySpec::bg),
        "q_osc" => scalar("q", NonlinearitySpec::q_osc),
        "trapped_ion" => {
            let variant = match sec.raw("variant").map(|e| e.value.as_str()) {
                None | Some("standard") => TrappedIonVariant::Standard,
                Some("verbatim") => TrappedIonVariant::Verbatim,
                Some(other) => {
                    return Err(invalid(
                        sec.raw("variant").expect("present"),
                        "variant",
                        format!("`{other}` is not one of verbatim, standard"),
                    ))
                }
            };
            let eta = sec.parse_required("family", "eta")?;
            NonlinearitySpec::trapped_ion(eta, variant)
                .map_err(|e| invalid(sec.raw("eta").expect("present"), "eta", e))
        }
        "hypergeometric" => {
            let (alpha, beta) = hypergeometric_params(sec)?;
            wrap(NonlinearitySpec::hypergeometric(alpha, beta))
        }
        "table" => {
            sec.required("family", "values")?;
            wrap(NonlinearitySpec::table(sec.list_f64("values")?.expect("present")))
        }
        other => Err(invalid(anchor, anchor_key, format!("unknown nonlinearity `{other}`"))),
    }
}

fn hypergeometric_params(sec: &Section) -> Result<(Vec<f64>, Vec<f64>), ConfigError> {
    sec.required("family", "alpha")?;
    sec.required("family", "beta")?;
    let alpha = sec.list_f64("alpha")?.expect("present");
    let beta = sec.list_f64("beta")?.expect("present");
    let (p, q) = (alpha.len(), beta.len());
    if p + 1 < q || p > q + 1 {
        return Err(invalid(
            sec.raw("alpha").expect("present"),
            "alpha",
            format!("hypergeometric parameters need q - 1 <= p <= q + 1, got p = {p}, q = {q}"),
        ));
    }
    Ok((alpha, beta))
}

fn parse_family(sec: &Section) -> Result<FamilyDescriptor, ConfigError> {
    let kind_entry = sec.required("family", "kind")?;
    let kind = kind_entry.value.as_str();
    let allowed = family_keys(kind).ok_or_else(|| {
        invalid(
            kind_entry,
            "kind",
            format!(
                "unknown family kind `{kind}`; expected canonical, gp, bg, q_osc, trapped_ion, hypergeometric, \
                 sqrt_n, table, rescaled, photon_added, binomial or squeezed"
            ),
        )
    })?;
    sec.check_keys("family", allowed, &format!(" for kind `{kind}`"))?;
    let wrap = |r: crate::Result<FamilyDescriptor>| r.map_err(|e| invalid(kind_entry, "kind", e));
    let scalar = |key: &str, build: fn(f64) -> crate::Result<FamilyDescriptor>| {
        let v = sec.parse_required("family", key)?;
        build(v).map_err(|e| invalid(sec.raw(key).expect("present"), key, e))
    };
    match kind {
        "canonical" => Ok(FamilyDescriptor::Canonical),
        "gp" => scalar("kappa", FamilyDescriptor::gilmore_perelomov),
        "bg" => scalar("kappa", FamilyDescriptor::barut_girardello),
        "hypergeometric" => {
            let (alpha, beta) = hypergeometric_params(sec)?;
            wrap(FamilyDescriptor::hypergeometric(alpha, beta))
        }
        "q_osc" | "trapped_ion" | "sqrt_n" | "table" => {
            Ok(FamilyDescriptor::Rescaled(parse_spec(sec, kind, kind_entry, "kind")?))
        }
        "rescaled" => {
            let spec_entry = sec.required("family", "spec")?;
            let name = spec_entry.value.as_str();
            let keys = spec_keys(name)
                .ok_or_else(|| invalid(spec_entry, "spec", format!("unknown nonlinearity `{name}`")))?;
            let mut allowed = vec!["kind", "spec", "reciprocal"];
            allowed.extend_from_slice(keys);
            sec.check_keys("family", &allowed, &format!(" for spec `{name}`"))?;
            let spec = parse_spec(sec, name, spec_entry, "spec")?;
            let reciprocal: bool = sec.parse("reciprocal")?.unwrap_or(false);
            Ok(FamilyDescriptor::Rescaled(if reciprocal { spec.reciprocal() } else { spec }))
        }
        "photon_added" => {
            let g = match sec.list_f64("g")? {
                None => EntireSeries::one(),
                Some(c) => EntireSeries::new(c).map_err(|e| invalid(sec.raw("g").expect("present"), "g", e))?,
            };
            let prefactor = match sec.raw("prefactor").map(|e| e.value.as_str()) {
                None | Some("direct") => Prefactor::Direct(g),
                Some("inverse") => Prefactor::Inverse(g),
                Some(other) => {
                    return Err(invalid(
                        sec.raw("prefactor").expect("present"),
                        "prefactor",
                        format!("`{other}` is not one of direct, inverse"),
                    ))
                }
            };
            let fam = scalar("lambda", |l| FamilyDescriptor::photon_added(l, EntireSeries::one()))?;
            Ok(match fam {
                FamilyDescriptor::PhotonAdded { lambda, .. } => FamilyDescriptor::PhotonAdded { lambda, prefactor },
                other => other,
            })
        }
        "binomial" => scalar("mu", FamilyDescriptor::binomial),
        "squeezed" => wrap(FamilyDescriptor::squeezed(
            sec.parse_required("family", "u")?,
            sec.parse_required("family", "v")?,
        )),
        _ => unreachable!("kind validated above"),
    }
}

fn parse_truncation(sec: Option<&Section>) -> Result<(TruncationPolicy, f64), ConfigError> {
    let empty = Section::default();
    let sec = sec.unwrap_or(&empty);
    sec.check_keys("truncation", &["n_max", "tail_tol", "edge_margin", "epsilon"], "")?;
    let n_max = sec.parse("n_max")?.unwrap_or(DEFAULT_N_MAX);
    let tail_tol = sec.parse("tail_tol")?.unwrap_or(TruncationPolicy::DEFAULT_TAIL_TOL);
    let edge = sec.parse("edge_margin")?.unwrap_or(TruncationPolicy::DEFAULT_EDGE_MARGIN);
    let epsilon: f64 = sec.parse("epsilon")?.unwrap_or(DEFAULT_EPSILON);
    if !(0.0..1.0).contains(&epsilon) {
        let line = sec.raw("epsilon").map(|e| e.line);
        return Err(ConfigError::new(line, Some("epsilon"), "epsilon must lie in [0, 1)"));
    }
    let trunc = TruncationPolicy::new(n_max, tail_tol, edge)
        .map_err(|e| ConfigError::new(Some(sec.line), None, e.to_string()))?;
    Ok((trunc, epsilon))
}

fn positive<T: PartialOrd + Default + Copy>(sec: &Section, key: &str, v: T) -> Result<T, ConfigError> {
    if v > T::default() {
        Ok(v)
    } else {
        let line = sec.raw(key).map(|e| e.line);
        Err(ConfigError::new(line, Some(key), "must be positive"))
    }
}

fn parse_task(sec: &Section) -> Result<TaskParams, ConfigError> {
    let name_entry = sec.required("task", "name")?;
    let task: Task = name_entry
        .value
        .parse()
        .map_err(|m: String| invalid(name_entry, "name", m))?;
    sec.check_keys("task", task.keys(), &format!(" for task `{task}`"))?;
    Ok(match task {
        Task::Eval => TaskParams::Eval {
            z: sec.list_complex("z")?.unwrap_or_else(|| vec![Complex64::new(0.0, 0.0)]),
        },
        Task::DualCompare => TaskParams::DualCompare {
            z: sec.list_complex("z")?.unwrap_or_else(|| vec![Complex64::new(0.0, 0.0)]),
        },
        Task::Verify => TaskParams::Verify {
            z: sec.list_complex("z")?,
            vectors: positive(sec, "vectors", sec.parse("vectors")?.unwrap_or(100usize))?,
        },
        Task::Moments => TaskParams::Moments {
            max_n: sec.parse("max_n")?.unwrap_or(12),
            grid_nodes: positive(sec, "grid_nodes", sec.parse("grid_nodes")?.unwrap_or(crate::moments::DEFAULT_GRID_NODES))?,
            fit_tol: positive(sec, "fit_tol", sec.parse("fit_tol")?.unwrap_or(1e-6))?,
            frame_tol: positive(sec, "frame_tol", sec.parse("frame_tol")?.unwrap_or(1e-5))?,
            n_theta: sec.parse("n_theta")?,
        },
        Task::Scan => {
            let r_min: f64 = sec.parse("r_min")?.unwrap_or(0.0);
            let r_max: f64 = sec.parse_required("task", "r_max")?;
            let n_r: usize = positive(sec, "n_r", sec.parse_required("task", "n_r")?)?;
            let n_theta: usize = positive(sec, "n_theta", sec.parse_required("task", "n_theta")?)?;
            if !(0.0 <= r_min && r_min <= r_max && r_max.is_finite()) {
                return Err(invalid(
                    sec.raw("r_max").expect("present"),
                    "r_max",
                    "need 0 <= r_min <= r_max < inf",
                ));
            }
            TaskParams::Scan(ScanGrid {
                r_min,
                r_max,
                n_r,
                n_theta,
            })
        }
    })
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let sections = split_sections(text)?;
    let family_sec = sections
        .get("family")
        .ok_or_else(|| ConfigError::new(None, None, "missing [family] section"))?;
    let task_sec = sections
        .get("task")
        .ok_or_else(|| ConfigError::new(None, None, "missing [task] section"))?;
    let family = parse_family(family_sec)?;
    let (trunc, epsilon) = parse_truncation(sections.get("truncation"))?;
    let params = parse_task(task_sec)?;
    Ok(ExperimentConfig {
        family,
        trunc,
        epsilon,
        params,
    })
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

fn spec_lines(spec: &NonlinearitySpec) -> Option<Vec<String>> {
    Some(match spec {
        NonlinearitySpec::Canonical => vec!["spec = canonical".into()],
        NonlinearitySpec::SqrtN => vec!["spec = sqrt_n".into()],
        NonlinearitySpec::Gp { kappa } => vec!["spec = gp".into(), format!("kappa = {kappa}")],
        NonlinearitySpec::Bg { kappa } => vec!["spec = bg".into(), format!("kappa = {kappa}")],
        NonlinearitySpec::QOsc { q } => vec!["spec = q_osc".into(), format!("q = {q}")],
        NonlinearitySpec::TrappedIon { eta, variant } => vec![
            "spec = trapped_ion".into(),
            format!("eta = {eta}"),
            format!(
                "variant = {}",
                match variant {
                    TrappedIonVariant::Verbatim => "verbatim",
                    TrappedIonVariant::Standard => "standard",
                }
            ),
        ],
        NonlinearitySpec::Hypergeometric { alpha, beta } => vec![
            "spec = hypergeometric".into(),
            format!("alpha = {}", join(alpha)),
            format!("beta = {}", join(beta)),
        ],
        NonlinearitySpec::Table(values) => vec!["spec = table".into(), format!("values = {}", join(values))],
        NonlinearitySpec::Reciprocal(inner) => {
            let mut lines = spec_lines(inner)?;
            if matches!(**inner, NonlinearitySpec::Reciprocal(_)) {
                return None;
            }
            lines.push("reciprocal = true".into());
            lines
        }
    })
}

/// The `[family]` section that parses back to `fam`. Nested reciprocals
/// have no configuration form.
pub fn family_to_config(fam: &FamilyDescriptor) -> Option<String> {
    let lines: Vec<String> = match fam {
        FamilyDescriptor::Canonical => vec!["kind = canonical".into()],
        FamilyDescriptor::Rescaled(spec) => {
            let mut l = vec!["kind = rescaled".to_string()];
            l.extend(spec_lines(spec)?);
            l
        }
        FamilyDescriptor::PhotonAdded { lambda, prefactor } => {
            let (g, kind) = match prefactor {
                Prefactor::Direct(g) => (g, "direct"),
                Prefactor::Inverse(g) => (g, "inverse"),
            };
            vec![
                "kind = photon_added".into(),
                format!("lambda = {lambda}"),
                format!("g = {}", join(g.coeffs())),
                format!("prefactor = {kind}"),
            ]
        }
        FamilyDescriptor::Binomial { mu } => vec!["kind = binomial".into(), format!("mu = {mu}")],
        FamilyDescriptor::GilmorePerelomov { kappa } => vec!["kind = gp".into(), format!("kappa = {kappa}")],
        FamilyDescriptor::BarutGirardello { kappa } => vec!["kind = bg".into(), format!("kappa = {kappa}")],
        FamilyDescriptor::Hypergeometric { alpha, beta } => vec![
            "kind = hypergeometric".into(),
            format!("alpha = {}", join(alpha)),
            format!("beta = {}", join(beta)),
        ],
        FamilyDescriptor::Squeezed { u, v } => {
            vec!["kind = squeezed".into(), format!("u = {u}"), format!("v = {v}")]
        }
    };
    let mut out = String::from("[family]\n");
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[family]\nkind = canonical\n[task]\nname = verify\n";

    #[test]
    fn minimal_config_uses_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.family, FamilyDescriptor::Canonical);
        assert_eq!(c.trunc.n_max(), 64);
        assert_eq!(c.trunc.tail_tol(), 1e-10);
        assert_eq!(c.epsilon, 1e-3);
        assert_eq!(c.task(), Task::Verify);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config("[family]\nkind = canonical\nfmaily = gp\n[task]\nname = eval\n").unwrap_err();
        assert_eq!(err.field.as_deref(), Some("fmaily"));
        assert_eq!(err.line, Some(3));
        assert!(err.to_string().contains("fmaily"));
    }

    #[test]
    fn hypergeometric_pq_constraint() {
        let text = "[family]\nkind = hypergeometric\nalpha = 1, 2, 3\nbeta = 1\n[task]\nname = eval\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.message.contains("q - 1 <= p <= q + 1"), "{err}");
        let ok = "[family]\nkind = hypergeometric\nalpha = 1\nbeta = 2\n[task]\nname = eval\n";
        assert!(parse_config(ok).is_ok());
    }

    #[test]
    fn structural_errors() {
        for (text, line) in [
            ("kind = canonical\n", Some(1)),
            ("[family]\nkind = canonical\n[famly]\n", Some(3)),
            ("[family]\nkind canonical\n", Some(2)),
            ("[family]\nkind = canonical\nkind = gp\n", Some(3)),
            ("[family]\nkind = nope\n[task]\nname = eval\n", Some(2)),
            ("[family]\nkind = gp\n[task]\nname = eval\n", Some(1)),
            ("[family]\nkind = gp\nkappa = x\n[task]\nname = eval\n", Some(3)),
        ] {
            let err = parse_config(text).unwrap_err();
            assert_eq!(err.line, line, "{text:?}: {err}");
        }
        assert!(parse_config("[family]\nkind = canonical\n").is_err());
        assert!(parse_config("[family]\nkind = canonical\n[task]\nname = eval\nr_max = 1\n").is_err());
    }

    #[test]
    fn complex_literals() {
        let c = |s| parse_complex(s).unwrap();
        assert_eq!(c("1"), Complex64::new(1.0, 0.0));
        assert_eq!(c("i"), Complex64::new(0.0, 1.0));
        assert_eq!(c("-2.5i"), Complex64::new(0.0, -2.5));
        assert_eq!(c("0.3-0.2i"), Complex64::new(0.3, -0.2));
        assert_eq!(c("-1e-3+2E+1i"), Complex64::new(-1e-3, 20.0));
        assert_eq!(c("1 + i"), Complex64::new(1.0, 1.0));
        assert!(parse_complex("1+2j").is_err());
        assert!(parse_complex("nan").is_err());
    }

    #[test]
    fn tasks_and_grids() {
        let text = "[family]\nkind = q_osc\nq = 0.5\n[truncation]\nn_max = 30\n[task]\nname = scan\nr_max = 0.5\nn_r = 3\nn_theta = 4\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.family, FamilyDescriptor::Rescaled(NonlinearitySpec::q_osc(0.5).unwrap()));
        assert_eq!(
            c.params,
            TaskParams::Scan(ScanGrid {
                r_min: 0.0,
                r_max: 0.5,
                n_r: 3,
                n_theta: 4
            })
        );
    }

    #[test]
    fn family_round_trip() {
        let fams = vec![
            FamilyDescriptor::Canonical,
            FamilyDescriptor::Rescaled(NonlinearitySpec::q_osc(0.3).unwrap()),
            FamilyDescriptor::Rescaled(NonlinearitySpec::gp(1.5).unwrap().reciprocal()),
            FamilyDescriptor::Rescaled(NonlinearitySpec::q_osc(0.7).unwrap().reciprocal()),
            FamilyDescriptor::Rescaled(NonlinearitySpec::trapped_ion(0.1, TrappedIonVariant::Verbatim).unwrap()),
            FamilyDescriptor::Rescaled(NonlinearitySpec::table(vec![1.0, 0.5, 0.25]).unwrap()),
            FamilyDescriptor::photon_added(0.1, EntireSeries::new(vec![1.0, 0.3]).unwrap()).unwrap(),
            crate::families::dual(&FamilyDescriptor::photon_added(0.1, EntireSeries::new(vec![1.0, 0.3]).unwrap()).unwrap()),
            FamilyDescriptor::binomial(-0.4).unwrap(),
            FamilyDescriptor::gilmore_perelomov(2.0).unwrap(),
            FamilyDescriptor::barut_girardello(1.0).unwrap(),
            FamilyDescriptor::hypergeometric(vec![1.5], vec![2.0, 3.0]).unwrap(),
            FamilyDescriptor::squeezed(2.0, 0.3).unwrap(),
        ];
        for f in fams {
            let text = format!("{}[task]\nname = eval\n", family_to_config(&f).unwrap());
            assert_eq!(parse_config(&text).unwrap().family, f, "{text}");
        }
    }
}
