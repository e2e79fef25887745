//! Run configuration: a sectioned key–value file.
//!
//! ```ini
//! [beam]
//! rho = 1
//! lambda = 1
//! length = 1
//! tip_mass = 1
//! tip_inertia = exceptional:1
//!
//! [laws]
//! spring = linear_cubic
//! spring_coefficients = 1, 1
//! damper = linear
//! damper_coefficients = 1
//! k_bound = 0.5
//! delta = 0.5
//!
//! [initial]
//! modes = A:1:1:0, A:2:0.5:0
//! closed_form = poly:2:0.1:0
//! project = false
//!
//! [discretization]
//! n_elements = 32
//! dt = 1e-3
//! t_end = periods:50
//! stride = 10
//! snapshot_stride = 160
//!
//! [analysis]
//! decay_fraction = 0.01
//!
//! [output]
//! directory = runs/generic
//! ```
//!
//! Missing `[analysis]` keys take their defaults; everything else is required
//! except `closed_form`, `modes`, `project` and `snapshot_stride`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tipbeam::asymptotics::LimitThresholds;
use tipbeam::spectral::Operator;
use tipbeam::Law;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Tip inertia given directly or as a member of the exceptional set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InertiaSpec {
    Value(f64),
    Exceptional(u32),
}

impl fmt::Display for InertiaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InertiaSpec::Value(j) => write!(f, "{j:?}"),
            InertiaSpec::Exceptional(ell) => write!(f, "exceptional:{ell}"),
        }
    }
}

impl FromStr for InertiaSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.strip_prefix("exceptional:") {
            Some(ell) => ell
                .trim()
                .parse()
                .map(InertiaSpec::Exceptional)
                .map_err(|_| format!("bad exceptional index `{ell}`")),
            None => parse_f64(s).map(InertiaSpec::Value),
        }
    }
}

/// Simulated horizon in seconds or in periods of the slowest payload mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Seconds(f64),
    Periods(f64),
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Seconds(t) => write!(f, "{t:?}"),
            Horizon::Periods(n) => write!(f, "periods:{n:?}"),
        }
    }
}

impl FromStr for Horizon {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.strip_prefix("periods:") {
            Some(n) => parse_f64(n).map(Horizon::Periods),
            None => parse_f64(s).map(Horizon::Seconds),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamConfig {
    pub rho: f64,
    pub lambda: f64,
    pub length: f64,
    pub tip_mass: f64,
    pub tip_inertia: InertiaSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LawsConfig {
    pub spring: Law,
    pub damper: Law,
    pub k_bound: f64,
    pub delta: f64,
}

/// `op:index:u_amp:v_amp`, amplitudes against normalized modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModalTerm {
    pub op: Operator,
    pub index: usize,
    pub u_amp: f64,
    pub v_amp: f64,
}

/// `poly:k:u_amp:v_amp`, the profile `(x/L)^k` with `k ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormTerm {
    pub degree: u32,
    pub u_amp: f64,
    pub v_amp: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InitialConfig {
    pub modes: Vec<ModalTerm>,
    pub closed_form: Vec<ClosedFormTerm>,
    /// Replace the data by its projection onto the non-decaying subspace.
    pub project: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub n_elements: usize,
    pub dt: f64,
    pub t_end: Horizon,
    pub stride: usize,
    pub snapshot_stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub beam: BeamConfig,
    pub laws: LawsConfig,
    pub initial: InitialConfig,
    pub discretization: Discretization,
    pub analysis: LimitThresholds,
    pub output: PathBuf,
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(parse_f64)
        .collect()
}

fn parse_terms<T>(s: &str, f: impl Fn(&[&str]) -> Result<T, String>) -> Result<Vec<T>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|t| f(&t.split(':').map(str::trim).collect::<Vec<_>>()))
        .collect()
}

fn modal_term(parts: &[&str]) -> Result<ModalTerm, String> {
    let [op, index, u_amp, v_amp] = parts else {
        return Err(format!("modal term `{}` is not op:index:u_amp:v_amp", parts.join(":")));
    };
    let index: usize = index.parse().map_err(|_| format!("bad mode index `{index}`"))?;
    if index == 0 {
        return Err("mode indices start at 1".into());
    }
    Ok(ModalTerm {
        op: op.parse().map_err(|e| format!("{e}"))?,
        index,
        u_amp: parse_f64(u_amp)?,
        v_amp: parse_f64(v_amp)?,
    })
}

fn closed_form_term(parts: &[&str]) -> Result<ClosedFormTerm, String> {
    let ["poly", degree, u_amp, v_amp] = parts else {
        return Err(format!("closed form `{}` is not poly:k:u_amp:v_amp", parts.join(":")));
    };
    let degree: u32 = degree.parse().map_err(|_| format!("bad degree `{degree}`"))?;
    if degree < 2 {
        return Err(format!("poly:{degree} violates the clamp; degrees start at 2"));
    }
    Ok(ClosedFormTerm {
        degree,
        u_amp: parse_f64(u_amp)?,
        v_amp: parse_f64(v_amp)?,
    })
}

fn fmt_list(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(", ")
}

const SECTIONS: [(&str, &[&str]); 6] = [
    ("beam", &["rho", "lambda", "length", "tip_mass", "tip_inertia"]),
    (
        "laws",
        &["spring", "spring_coefficients", "damper", "damper_coefficients", "k_bound", "delta"],
    ),
    ("initial", &["modes", "closed_form", "project"]),
    ("discretization", &["n_elements", "dt", "t_end", "stride", "snapshot_stride"]),
    (
        "analysis",
        &[
            "decay_fraction",
            "tail_fraction",
            "stationary_slope",
            "orbit_tolerance",
            "exceptional_rel_tol",
            "ell_max",
            "min_periods",
        ],
    ),
    ("output", &["directory"]),
];

/// 1-based line of `key` inside `[section]`, or of the section header when `key` is empty.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            if key.is_empty() && current == section {
                return Some(i + 1);
            }
            continue;
        }
        if current == section && !key.is_empty() {
            if let Some((k, _)) = line.split_once(['=', ':']) {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

struct Reader<'a> {
    text: &'a str,
    ini: Ini,
}

impl Reader<'_> {
    fn err(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: locate(self.text, section, key).or_else(|| locate(self.text, section, "")),
            message: format!("[{section}] {}", message.into()),
        }
    }

    fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.ini.section(Some(section)).and_then(|p| p.get(key)).map(str::trim)
    }

    fn required(&self, section: &str, key: &str) -> Result<&str, ConfigError> {
        self.raw(section, key)
            .ok_or_else(|| self.err(section, key, format!("missing key `{key}`")))
    }

    fn parse<T>(&self, section: &str, key: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<T, ConfigError> {
        let raw = self.required(section, key)?;
        f(raw).map_err(|m| self.err(section, key, format!("{key}: {m}")))
    }

    fn parse_or<T>(
        &self,
        section: &str,
        key: &str,
        default: T,
        f: impl Fn(&str) -> Result<T, String>,
    ) -> Result<T, ConfigError> {
        match self.raw(section, key) {
            Some(_) => self.parse(section, key, f),
            None => Ok(default),
        }
    }

    fn number(&self, section: &str, key: &str) -> Result<f64, ConfigError> {
        self.parse(section, key, parse_f64)
    }

    fn positive(&self, section: &str, key: &str) -> Result<f64, ConfigError> {
        let v = self.number(section, key)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.err(section, key, format!("{key} must be positive")))
        }
    }

    fn count(&self, section: &str, key: &str) -> Result<usize, ConfigError> {
        let v = self.parse(section, key, |s| s.parse::<usize>().map_err(|_| format!("`{s}` is not a count")))?;
        if v == 0 {
            return Err(self.err(section, key, format!("{key} must be positive")));
        }
        Ok(v)
    }

    fn law(&self, prefix: &str) -> Result<Law, ConfigError> {
        let key = self.required("laws", prefix)?;
        let coeff_key = format!("{prefix}_coefficients");
        let coeffs = self.parse_or("laws", &coeff_key, vec![], parse_list)?;
        Law::from_key(key, &coeffs).ok_or_else(|| {
            self.err(
                "laws",
                prefix,
                format!("`{key}` with coefficients [{}] is not in the law catalogue", fmt_list(&coeffs)),
            )
        })
    }

    fn check_keys(&self) -> Result<(), ConfigError> {
        for (section, props) in self.ini.iter() {
            let Some(section) = section else {
                if let Some((key, _)) = props.iter().next() {
                    return Err(ConfigError {
                        line: locate(self.text, "", key),
                        message: format!("key `{key}` outside any section"),
                    });
                }
                continue;
            };
            let Some((_, known)) = SECTIONS.iter().find(|(name, _)| *name == section) else {
                return Err(self.err(section, "", format!("unknown section `{section}`")));
            };
            for (key, _) in props.iter() {
                if !known.contains(&key) {
                    return Err(self.err(section, key, format!("unknown key `{key}`")));
                }
            }
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let ini = Ini::load_from_str(text).map_err(|e| ConfigError {
            line: Some(e.line),
            message: e.msg.to_string(),
        })?;
        let r = Reader { text, ini };
        r.check_keys()?;

        let beam = BeamConfig {
            rho: r.number("beam", "rho")?,
            lambda: r.number("beam", "lambda")?,
            length: r.number("beam", "length")?,
            tip_mass: r.number("beam", "tip_mass")?,
            tip_inertia: r.parse("beam", "tip_inertia", InertiaSpec::from_str)?,
        };
        let laws = LawsConfig {
            spring: r.law("spring")?,
            damper: r.law("damper")?,
            k_bound: r.number("laws", "k_bound")?,
            delta: r.number("laws", "delta")?,
        };
        let initial = InitialConfig {
            modes: r.parse_or("initial", "modes", vec![], |s| parse_terms(s, modal_term))?,
            closed_form: r.parse_or("initial", "closed_form", vec![], |s| parse_terms(s, closed_form_term))?,
            project: r.parse_or("initial", "project", false, |s| {
                s.parse().map_err(|_| format!("`{s}` is not true/false"))
            })?,
        };
        let stride = r.count("discretization", "stride")?;
        let t_end = r.parse("discretization", "t_end", Horizon::from_str)?;
        if matches!(t_end, Horizon::Seconds(t) | Horizon::Periods(t) if t <= 0.0) {
            return Err(r.err("discretization", "t_end", "t_end must be positive"));
        }
        let discretization = Discretization {
            n_elements: r.count("discretization", "n_elements")?,
            dt: r.positive("discretization", "dt")?,
            t_end,
            stride,
            snapshot_stride: match r.raw("discretization", "snapshot_stride") {
                Some(_) => r.count("discretization", "snapshot_stride")?,
                None => 16 * stride,
            },
        };
        let d = LimitThresholds::default();
        let analysis = LimitThresholds {
            decay_fraction: r.parse_or("analysis", "decay_fraction", d.decay_fraction, parse_f64)?,
            tail_fraction: r.parse_or("analysis", "tail_fraction", d.tail_fraction, parse_f64)?,
            stationary_slope: r.parse_or("analysis", "stationary_slope", d.stationary_slope, parse_f64)?,
            orbit_tolerance: r.parse_or("analysis", "orbit_tolerance", d.orbit_tolerance, parse_f64)?,
            exceptional_rel_tol: r.parse_or("analysis", "exceptional_rel_tol", d.exceptional_rel_tol, parse_f64)?,
            ell_max: r.parse_or("analysis", "ell_max", d.ell_max, |s| {
                s.parse().map_err(|_| format!("`{s}` is not a count"))
            })?,
            min_periods: r.parse_or("analysis", "min_periods", d.min_periods, parse_f64)?,
        };
        if !(analysis.tail_fraction > 0.0 && analysis.tail_fraction <= 1.0) {
            return Err(r.err("analysis", "tail_fraction", "tail_fraction must lie in (0, 1]"));
        }
        let output = PathBuf::from(r.required("output", "directory")?);
        if output.as_os_str().is_empty() {
            return Err(r.err("output", "directory", "empty output directory"));
        }
        Ok(Self {
            beam,
            laws,
            initial,
            discretization,
            analysis,
            output,
        })
    }

    pub fn load(path: &Path) -> Result<(Self, String), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            message: format!("{}: {e}", path.display()),
        })?;
        Ok((Self::parse(&text)?, text))
    }

    /// Canonical text form; [`RunConfig::parse`] inverts it exactly.
    pub fn to_ini(&self) -> String {
        let b = &self.beam;
        let l = &self.laws;
        let i = &self.initial;
        let d = &self.discretization;
        let a = &self.analysis;
        let modes = i
            .modes
            .iter()
            .map(|m| format!("{}:{}:{:?}:{:?}", m.op, m.index, m.u_amp, m.v_amp))
            .collect::<Vec<_>>()
            .join(", ");
        let closed = i
            .closed_form
            .iter()
            .map(|c| format!("poly:{}:{:?}:{:?}", c.degree, c.u_amp, c.v_amp))
            .collect::<Vec<_>>()
            .join(", ");
        format!(
            "[beam]\nrho = {:?}\nlambda = {:?}\nlength = {:?}\ntip_mass = {:?}\ntip_inertia = {}\n\n\
             [laws]\nspring = {}\nspring_coefficients = {}\ndamper = {}\ndamper_coefficients = {}\n\
             k_bound = {:?}\ndelta = {:?}\n\n\
             [initial]\nmodes = {modes}\nclosed_form = {closed}\nproject = {}\n\n\
             [discretization]\nn_elements = {}\ndt = {:?}\nt_end = {}\nstride = {}\nsnapshot_stride = {}\n\n\
             [analysis]\ndecay_fraction = {:?}\ntail_fraction = {:?}\nstationary_slope = {:?}\n\
             orbit_tolerance = {:?}\nexceptional_rel_tol = {:?}\nell_max = {}\nmin_periods = {:?}\n\n\
             [output]\ndirectory = {}\n",
            b.rho,
            b.lambda,
            b.length,
            b.tip_mass,
            b.tip_inertia,
            l.spring.catalogue_key(),
            fmt_list(&l.spring.coefficients()),
            l.damper.catalogue_key(),
            fmt_list(&l.damper.coefficients()),
            l.k_bound,
            l.delta,
            i.project,
            d.n_elements,
            d.dt,
            d.t_end,
            d.stride,
            d.snapshot_stride,
            a.decay_fraction,
            a.tail_fraction,
            a.stationary_slope,
            a.orbit_tolerance,
            a.exceptional_rel_tol,
            a.ell_max,
            a.min_periods,
            self.output.display(),
        )
    }

    /// Hex SHA-256 of [`RunConfig::to_ini`].
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_ini().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
