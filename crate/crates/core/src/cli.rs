//! Command-line front end for parameter sweeps and audits.
//!
//! Every table row carries `grid_nodes` and `converged`; a row is converged
//! when the same quantity recomputed at twice the per-axis resolution agrees
//! to the requested relative tolerance (or to 1e-12 absolutely).
//!
//! Exit codes: 0 success, 1 some row failed to converge (output is still
//! written), 2 configuration error.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value};

use crate::channel::{channel_audit, BoostChannelSpec, ChannelAudit, DEFAULT_CONSISTENCY_BETA};
use crate::entangle::{entanglement_point, DEFAULT_NODES_PER_AXIS};
use crate::error::Error;
use crate::numeric::fmt_sig;
use crate::photon::{
    build_povm, doppler_error, effective_density, gaussian_beam, naive_density, photon_row, Helicity,
};
use crate::spin_half::{spin_point, DEFAULT_SMALL_DELTA_OVER_M, DEFAULT_SWEEP_DELTA_OVER_M};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Differences below this are treated as converged regardless of scale.
pub const ABSOLUTE_FLOOR: f64 = 1e-12;
const CSV_DIGITS: usize = 12;
const MIN_RESOLUTION: usize = 4;

/// A list of numbers given as `a,b,c` or `min:max:step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Values(pub Vec<f64>);

impl FromStr for Values {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number"));
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let [lo, hi, step] = parts[..] else {
                return Err(format!("range `{s}` must look like min:max:step"));
            };
            let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
            if !(step > 0.0) || !step.is_finite() {
                return Err(format!("range step must be positive, got {step}"));
            }
            if !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(format!("range `{s}` needs finite min <= max"));
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            if count > 1_000_000 {
                return Err(format!("range `{s}` has too many points"));
            }
            return Ok(Values((0..count).map(|i| lo + i as f64 * step).collect()));
        }
        let v = s.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err("values must be finite".into());
        }
        Ok(Values(v))
    }
}

impl Serialize for Values {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Values {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            One(f64),
            List(Vec<f64>),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::One(x) => Ok(Values(vec![x])),
            Raw::List(v) => Ok(Values(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "relqi", version, about = "Frame-dependent spin and polarization states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// JSON object whose keys override the subcommand's flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spin entropy and pair error of boosted Gaussian packets over (theta, gamma).
    SpinEntropy(SpinEntropyArgs),
    /// Pair error in the small-gamma regime.
    SpinDistinguish(SpinDistinguishArgs),
    /// Effective 3x3 polarization matrix of a Gaussian beam.
    PhotonDensity(PhotonDensityArgs),
    /// Opposite-helicity error over beam widths and observer speeds.
    PhotonDistinguish(PhotonDistinguishArgs),
    /// Recomputed error ratio for observers moving along the beam.
    Doppler(DopplerArgs),
    /// CP/TP audit of the decoherence channel.
    ChannelAudit(ChannelAuditArgs),
    /// Singlet concurrence over packet width and observer speed.
    EntangleSweep(EntangleArgs),
    /// Observables at resolutions n and 2n.
    Convergence(ConvergenceArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinEntropyArgs {
    /// Boost angles (radians).
    #[arg(long, allow_hyphen_values = true, default_value = "0:3.14159:0.1")]
    pub theta: Values,
    #[arg(long, default_value = "0,0.25,0.5")]
    pub gamma: Values,
    #[arg(long, default_value_t = DEFAULT_SWEEP_DELTA_OVER_M)]
    pub delta_over_m: f64,
    /// Quadrature nodes per axis.
    #[arg(long, default_value_t = 16)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinDistinguishArgs {
    #[arg(long, allow_hyphen_values = true, default_value = "1.5707963267948966")]
    pub theta: Values,
    #[arg(long, default_value = "0.001,0.002,0.005")]
    pub gamma: Values,
    #[arg(long, default_value_t = DEFAULT_SMALL_DELTA_OVER_M)]
    pub delta_over_m: f64,
    #[arg(long, default_value_t = 12)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HelicityArg {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonDensityArgs {
    #[arg(long = "kA", default_value_t = 1.0)]
    #[serde(rename = "kA")]
    pub k_a: f64,
    #[arg(long, default_value_t = 0.1)]
    pub dr: f64,
    #[arg(long, default_value_t = 0.05)]
    pub dz: f64,
    #[arg(long, value_enum, default_value = "plus")]
    pub helicity: HelicityArg,
    #[arg(long, default_value_t = 8)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonDistinguishArgs {
    #[arg(long = "kA", default_value_t = 1.0)]
    #[serde(rename = "kA")]
    pub k_a: f64,
    /// Transverse widths.
    #[arg(long, default_value = "0.03,0.01,0.003")]
    pub dr: Values,
    /// Longitudinal width; half of each transverse width when absent.
    #[arg(long)]
    pub dz: Option<f64>,
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    pub v: Values,
    #[arg(long, default_value_t = 8)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DopplerArgs {
    #[arg(long, allow_hyphen_values = true, default_value = "0.5")]
    pub v: Values,
    #[arg(long = "kA", default_value_t = 100.0)]
    #[serde(rename = "kA")]
    pub k_a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub dr: f64,
    #[arg(long, default_value_t = 0.1)]
    pub dz: f64,
    #[arg(long, default_value_t = 8)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelAuditArgs {
    #[arg(long, default_value = "0.2")]
    pub gamma: Values,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub theta: f64,
    /// Observer speed for the packet comparison.
    #[arg(long, default_value_t = DEFAULT_CONSISTENCY_BETA)]
    pub beta: f64,
    #[arg(long, default_value_t = 16)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntangleArgs {
    #[arg(long, default_value = "0.0001,0.5")]
    pub delta_over_m: Values,
    #[arg(long, default_value = "0,0.3,0.6,0.9")]
    pub beta: Values,
    #[arg(long, default_value_t = DEFAULT_NODES_PER_AXIS)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceArgs {
    #[arg(long, default_value_t = 16)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

/// Problems reported with exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid `{}`: {}", self.field, self.message)
    }
}

fn bad<T>(field: &str, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError { field: field.to_string(), message: message.into() })
}

fn require(ok: bool, field: &str, message: impl Into<String>) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        bad(field, message)
    }
}

fn check_common(nodes: usize, tol: f64) -> Result<(), ConfigError> {
    if nodes < MIN_RESOLUTION {
        return bad("nodes", format!("resolution must be at least {MIN_RESOLUTION}, got {nodes}"));
    }
    if !(tol > 0.0) || !tol.is_finite() {
        return bad("tol", format!("tolerance must be positive, got {tol}"));
    }
    Ok(())
}

fn check_list(field: &str, v: &Values) -> Result<(), ConfigError> {
    if v.0.is_empty() {
        return bad(field, "list is empty");
    }
    if v.0.iter().any(|x| !x.is_finite()) {
        return bad(field, "values must be finite");
    }
    Ok(())
}

fn check_positive(field: &str, x: f64) -> Result<(), ConfigError> {
    if !(x > 0.0) || !x.is_finite() {
        return bad(field, format!("must be positive, got {x}"));
    }
    Ok(())
}

fn check_speeds(field: &str, v: &Values, allow_negative: bool) -> Result<(), ConfigError> {
    for &x in &v.0 {
        let ok = if allow_negative { x.abs() < 1.0 } else { (0.0..1.0).contains(&x) };
        if !ok {
            return bad(field, format!("speed {x} outside the allowed range"));
        }
    }
    Ok(())
}

/// Overrides the fields of `args` with the keys of a JSON object.
pub fn apply_config<T: Serialize + DeserializeOwned>(args: T, config: &Value) -> Result<T, ConfigError> {
    let Value::Object(overrides) = config else {
        return bad("config", "the config file must hold a JSON object");
    };
    let Value::Object(mut base) = serde_json::to_value(&args).expect("arguments serialize") else {
        unreachable!("argument structs serialize to objects")
    };
    for key in overrides.keys() {
        if !base.contains_key(key) {
            return bad(key, "unknown field for this subcommand");
        }
    }
    // validate keys one at a time so the message names the culprit
    for (key, value) in overrides {
        let mut trial = base.clone();
        trial.insert(key.clone(), value.clone());
        if let Err(e) = serde_json::from_value::<T>(Value::Object(trial)) {
            return bad(key, e.to_string());
        }
        base.insert(key.clone(), value.clone());
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| ConfigError { field: "config".into(), message: e.to_string() })
}

fn load_config(path: &Path) -> Result<Value, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError { field: "config".into(), message: format!("{}: {e}", path.display()) })?;
    serde_json::from_str(&text).map_err(|e| ConfigError { field: "config".into(), message: format!("{}: {e}", path.display()) })
}

fn with_config<T: Serialize + DeserializeOwned>(args: &T, config: Option<&Value>) -> Result<T, ConfigError> {
    let copy: T = serde_json::from_value(serde_json::to_value(args).expect("arguments serialize")).expect("round trip");
    match config {
        Some(c) => apply_config(copy, c),
        None => Ok(copy),
    }
}

/// True when `a` and `b` agree to `tol` relatively or to [`ABSOLUTE_FLOOR`].
pub fn agrees(a: f64, b: f64, tol: f64) -> bool {
    let d = (a - b).abs();
    d < ABSOLUTE_FLOOR || d <= tol * a.abs().max(b.abs())
}

/// `|a - b| / max(|a|, |b|)`, 0 when both vanish.
pub fn relative_delta(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_sig(*x, CSV_DIGITS),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(t) => t.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(_) => Value::Null,
            Cell::Int(n) => json!(n),
            Cell::Bool(b) => json!(b),
            Cell::Text(t) => json!(t),
        }
    }
}

/// Rows with a fixed header. The `converged` column holds `true`, `false`
/// or `error` for rows whose parameters were rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }

    fn object(&self, row: &[Cell]) -> Value {
        let m: Map<String, Value> = self.header.iter().zip(row).map(|(k, c)| (k.to_string(), c.json())).collect();
        Value::Object(m)
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.rows.iter().map(|r| self.object(r)).collect())
    }

    /// Whether every row converged.
    pub fn all_converged(&self) -> bool {
        let Some(i) = self.header.iter().position(|h| *h == "converged") else {
            return true;
        };
        self.rows.iter().all(|r| !matches!(r[i], Cell::Bool(false)))
    }
}

fn error_row(params: Vec<Cell>, width: usize, err: &Error) -> Vec<Cell> {
    let mut row = params;
    while row.len() < width - 1 {
        row.push(Cell::Num(f64::NAN));
    }
    eprintln!("warning: row skipped: {err}");
    row.push(Cell::Text("error".into()));
    row
}

fn spin_table(thetas: &[f64], gammas: &[f64], delta_over_m: f64, nodes: usize, tol: f64) -> Table {
    let header = vec!["theta", "gamma", "beta", "delta_over_m", "entropy_bits", "p_error", "grid_nodes", "converged"];
    let cells: Vec<(f64, f64)> = thetas.iter().flat_map(|&t| gammas.iter().map(move |&g| (t, g))).collect();
    let rows = cells
        .par_iter()
        .map(|&(t, g)| {
            let result = spin_point(t, g, delta_over_m, nodes).and_then(|a| Ok((a, spin_point(t, g, delta_over_m, 2 * nodes)?)));
            match result {
                Ok((a, b)) => vec![
                    Cell::Num(t),
                    Cell::Num(g),
                    Cell::Num(a.beta),
                    Cell::Num(delta_over_m),
                    Cell::Num(a.entropy_bits),
                    Cell::Num(a.p_error),
                    Cell::Int(a.grid_nodes),
                    Cell::Bool(agrees(a.entropy_bits, b.entropy_bits, tol) && agrees(a.p_error, b.p_error, tol)),
                ],
                Err(e) => error_row(vec![Cell::Num(t), Cell::Num(g), Cell::Num(f64::NAN), Cell::Num(delta_over_m)], header.len(), &e),
            }
        })
        .collect();
    Table { header, rows }
}

fn photon_table(a: &PhotonDistinguishArgs) -> Table {
    let header = vec!["kA", "delta_r", "delta_z", "v", "p_error", "p_error_closed_form", "grid_nodes", "converged"];
    let cells: Vec<(f64, f64)> = a.dr.0.iter().flat_map(|&r| a.v.0.iter().map(move |&v| (r, v))).collect();
    let rows = cells
        .par_iter()
        .map(|&(dr, v)| {
            let dz = a.dz.unwrap_or(0.5 * dr);
            let result = photon_row(a.k_a, dz, dr, v, a.nodes).and_then(|x| Ok((x, photon_row(a.k_a, dz, dr, v, 2 * a.nodes)?)));
            match result {
                Ok((x, y)) => vec![
                    Cell::Num(a.k_a),
                    Cell::Num(dr),
                    Cell::Num(dz),
                    Cell::Num(v),
                    Cell::Num(x.p_error),
                    Cell::Num(x.p_error_closed_form),
                    Cell::Int(x.grid_nodes),
                    Cell::Bool(agrees(x.p_error, y.p_error, a.tol)),
                ],
                Err(e) => error_row(vec![Cell::Num(a.k_a), Cell::Num(dr), Cell::Num(dz), Cell::Num(v)], header.len(), &e),
            }
        })
        .collect();
    Table { header, rows }
}

fn doppler_table(a: &DopplerArgs) -> Result<Table, Error> {
    let header = vec![
        "kA", "delta_r", "delta_z", "v", "p_error", "p_error_boosted", "ratio", "closed_form_ratio", "grid_nodes", "converged",
    ];
    let rows = a
        .v
        .0
        .par_iter()
        .map(|&v| {
            let x = doppler_error(a.k_a, a.dz, a.dr, v, a.nodes)?;
            let y = doppler_error(a.k_a, a.dz, a.dr, v, 2 * a.nodes)?;
            Ok(vec![
                Cell::Num(a.k_a),
                Cell::Num(a.dr),
                Cell::Num(a.dz),
                Cell::Num(v),
                Cell::Num(x.p_error),
                Cell::Num(x.p_error_boosted),
                Cell::Num(x.ratio),
                Cell::Num(x.closed_form_ratio),
                Cell::Int(a.nodes.pow(3)),
                Cell::Bool(agrees(x.ratio, y.ratio, a.tol) && agrees(x.p_error, y.p_error, a.tol)),
            ])
        })
        .collect::<Result<_, Error>>()?;
    Ok(Table { header, rows })
}

fn audit_table(a: &ChannelAuditArgs) -> Result<(Table, bool), Error> {
    let header = vec![
        "gamma", "theta", "is_cp", "is_tp", "min_choi_eig", "trace_distance", "pe_before", "pe_after", "verdict", "grid_nodes",
        "converged",
    ];
    let audits = a
        .gamma
        .0
        .par_iter()
        .map(|&g| {
            let spec = BoostChannelSpec::new(g, a.theta)?;
            let x = channel_audit(&spec, a.beta, a.nodes)?;
            let y = channel_audit(&spec, a.beta, 2 * a.nodes)?;
            Ok((x.clone(), agrees(x.trace_distance, y.trace_distance, a.tol)))
        })
        .collect::<Result<Vec<(ChannelAudit, bool)>, Error>>()?;
    let converged = audits.iter().all(|(_, c)| *c);
    let rows = audits
        .into_iter()
        .map(|(x, ok)| {
            vec![
                Cell::Num(x.gamma),
                Cell::Num(x.theta),
                Cell::Bool(x.is_cp),
                Cell::Bool(x.is_tp),
                Cell::Num(x.min_choi_eig),
                Cell::Num(x.trace_distance),
                Cell::Num(x.pe_before),
                Cell::Num(x.pe_after),
                Cell::Text(x.verdict),
                Cell::Int(a.nodes.pow(3)),
                Cell::Bool(ok),
            ]
        })
        .collect();
    Ok((Table { header, rows }, converged))
}

fn entangle_table(a: &EntangleArgs) -> Table {
    let header = vec!["delta_over_m", "beta", "concurrence", "entropy_of_marginal_bits", "grid_nodes", "converged"];
    let cells: Vec<(f64, f64)> = a.delta_over_m.0.iter().flat_map(|&d| a.beta.0.iter().map(move |&b| (d, b))).collect();
    let rows = cells
        .par_iter()
        .map(|&(d, b)| {
            let result = entanglement_point(d, b, a.nodes).and_then(|x| Ok((x, entanglement_point(d, b, 2 * a.nodes)?)));
            match result {
                Ok((x, y)) => vec![
                    Cell::Num(d),
                    Cell::Num(b),
                    Cell::Num(x.concurrence),
                    Cell::Num(x.entropy_of_marginal_bits),
                    Cell::Int(x.grid_nodes),
                    Cell::Bool(
                        agrees(x.concurrence, y.concurrence, a.tol)
                            && agrees(x.entropy_of_marginal_bits, y.entropy_of_marginal_bits, a.tol),
                    ),
                ],
                Err(e) => error_row(vec![Cell::Num(d), Cell::Num(b)], header.len(), &e),
            }
        })
        .collect();
    Table { header, rows }
}

/// One observable at resolutions `n` and `2n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceEntry {
    pub observable: String,
    pub n: usize,
    pub value_n: f64,
    pub value_2n: f64,
    pub relative_delta: f64,
    pub converged: bool,
}

type Observable = (&'static str, fn(usize) -> Result<f64, Error>);

fn observables() -> [Observable; 4] {
    use std::f64::consts::FRAC_PI_2;
    [
        ("spin_entropy(theta=pi/2,gamma=0.5,delta_over_m=0.6)", |n| {
            Ok(spin_point(FRAC_PI_2, 0.5, DEFAULT_SWEEP_DELTA_OVER_M, n)?.entropy_bits)
        }),
        ("spin_p_error(theta=pi/2,gamma=0.005,delta_over_m=0.01)", |n| {
            Ok(spin_point(FRAC_PI_2, 0.005, DEFAULT_SMALL_DELTA_OVER_M, n)?.p_error)
        }),
        ("photon_p_error(kA=1,delta_r=0.01,delta_z=0.005)", |n| Ok(photon_row(1.0, 0.005, 0.01, 0.0, n)?.p_error)),
        ("concurrence(delta_over_m=0.5,beta=0.9)", |n| Ok(entanglement_point(0.5, 0.9, n)?.concurrence)),
    ]
}

/// Reference observables at `n` and `2n` nodes per axis.
pub fn convergence_report(n: usize, tol: f64) -> Result<Vec<ConvergenceEntry>, Error> {
    observables()
        .par_iter()
        .map(|(name, f)| {
            let (a, b) = (f(n)?, f(2 * n)?);
            Ok(ConvergenceEntry {
                observable: name.to_string(),
                n,
                value_n: a,
                value_2n: b,
                relative_delta: relative_delta(a, b),
                converged: agrees(a, b, tol),
            })
        })
        .collect()
}

fn convergence_table(entries: &[ConvergenceEntry]) -> Table {
    Table {
        header: vec!["observable", "n", "value_n", "value_2n", "relative_delta", "converged"],
        rows: entries
            .iter()
            .map(|e| {
                vec![
                    Cell::Text(e.observable.clone()),
                    Cell::Int(e.n),
                    Cell::Num(e.value_n),
                    Cell::Num(e.value_2n),
                    Cell::Num(e.relative_delta),
                    Cell::Bool(e.converged),
                ]
            })
            .collect(),
    }
}

fn photon_density_output(a: &PhotonDensityArgs, format: Format) -> Result<(String, bool), Error> {
    let helicity = match a.helicity {
        HelicityArg::Plus => Helicity::Plus,
        HelicityArg::Minus => Helicity::Minus,
    };
    let beam = gaussian_beam(a.k_a, a.dz, a.dr, helicity, a.nodes)?;
    let rho = effective_density(&beam)?;
    let fine = effective_density(&gaussian_beam(a.k_a, a.dz, a.dr, helicity, 2 * a.nodes)?)?;
    let povm = build_povm(beam.grid().clone())?;
    let residual = povm.completeness_residual(&beam)?;
    let gap = |x: &nalgebra::DMatrix<num_complex::Complex64>, y: &nalgebra::DMatrix<num_complex::Complex64>| {
        (x - y).iter().map(|z| z.norm()).fold(0.0, f64::max)
    };
    let route_gap = gap(&povm.density(&beam)?, &naive_density(&beam));
    let tomography_gap = gap(&povm.density(&beam)?, &povm.tomographic_density(&beam)?);
    let converged = rho.max_abs_diff(&fine) < a.tol.max(ABSOLUTE_FLOOR);
    let m = rho.matrix();
    let text = match format {
        Format::Json => {
            let part = |f: fn(&num_complex::Complex64) -> f64| -> Vec<Vec<f64>> {
                (0..3).map(|r| (0..3).map(|c| f(&m[(r, c)])).collect()).collect()
            };
            let v = json!({
                "kA": a.k_a,
                "delta_r": a.dr,
                "delta_z": a.dz,
                "helicity": a.helicity,
                "rho_re": part(|z| z.re),
                "rho_im": part(|z| z.im),
                "eigenvalues": rho.eigenvalues(),
                "completeness_residual": residual,
                "route_gap": route_gap,
                "tomography_gap": tomography_gap,
                "grid_nodes": beam.grid().len(),
                "converged": converged,
            });
            serde_json::to_string_pretty(&v).expect("json") + "\n"
        }
        Format::Csv => {
            let mut t = Table { header: vec!["m", "n", "re", "im"], rows: Vec::new() };
            for r in 0..3 {
                for c in 0..3 {
                    t.rows.push(vec![Cell::Int(r), Cell::Int(c), Cell::Num(m[(r, c)].re), Cell::Num(m[(r, c)].im)]);
                }
            }
            t.to_csv()
        }
    };
    Ok((text, converged))
}

enum Failure {
    Config(ConfigError),
    Numeric(Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numeric(e)
    }
}

fn render(table: &Table, format: Format, single_object: bool) -> String {
    match format {
        Format::Csv => table.to_csv(),
        Format::Json => {
            let v = if single_object && table.rows.len() == 1 { table.object(&table.rows[0]) } else { table.to_json() };
            serde_json::to_string_pretty(&v).expect("json") + "\n"
        }
    }
}

/// Runs one parsed command; returns the rendered output and whether every
/// quantity converged.
fn execute(cli: &Cli) -> Result<(String, bool), Failure> {
    let config = cli.config.as_deref().map(load_config).transpose()?;
    let config = config.as_ref();
    let fmt_or = |d: Format| cli.format.unwrap_or(d);
    let sweep = |t: Table, f: Format| {
        let ok = t.all_converged();
        (render(&t, f, false), ok)
    };
    Ok(match &cli.command {
        Command::SpinEntropy(a) => {
            let a = with_config(a, config)?;
            check_common(a.nodes, a.tol)?;
            check_list("theta", &a.theta)?;
            check_list("gamma", &a.gamma)?;
            check_positive("delta_over_m", a.delta_over_m)?;
            sweep(spin_table(&a.theta.0, &a.gamma.0, a.delta_over_m, a.nodes, a.tol), fmt_or(Format::Csv))
        }
        Command::SpinDistinguish(a) => {
            let a = with_config(a, config)?;
            check_common(a.nodes, a.tol)?;
            check_list("theta", &a.theta)?;
            check_list("gamma", &a.gamma)?;
            check_positive("delta_over_m", a.delta_over_m)?;
            sweep(spin_table(&a.theta.0, &a.gamma.0, a.delta_over_m, a.nodes, a.tol), fmt_or(Format::Csv))
        }
        Command::PhotonDensity(a) => {
            let a = with_config(a, config)?;
            check_common(a.nodes, a.tol)?;
            check_positive("kA", a.k_a)?;
            check_positive("dr", a.dr)?;
            check_positive("dz", a.dz)?;
            require(a.k_a > 5.0 * a.dz, "dz", "beams need kA > 5 dz")?;
            photon_density_output(&a, fmt_or(Format::Json))?
        }
        Command::PhotonDistinguish(a) => {
            let a = with_config(a, config)?;
            check_common(a.nodes, a.tol)?;
            check_positive("kA", a.k_a)?;
            check_list("dr", &a.dr)?;
            check_list("v", &a.v)?;
            check_speeds("v", &a.v, true)?;
            if let Some(dz) = a.dz {
                check_positive("dz", dz)?;
            }
            sweep(photon_table(&a), fmt_or(Format::Csv))
        }
        Command::Doppler(a) => {
            let a = with_config(a, config)?;
            check_common(a.nodes, a.tol)?;
            check_list("v", &a.v)?;
            check_speeds("v", &a.v, true)?;
            check_positive("kA", a.k_a)?;
            check_positive("dr", a.dr)?;
            check_positive("dz", a.dz)?;
            require(a.k_a > 5.0 * a.dz, "dz", "beams need kA > 5 dz")?;
            let t = doppler_table(&a)?;
            let ok = t.all_converged();
            (render(&t, fmt_or(Format::Json), true), ok)
        }
        Command::ChannelAudit(a) => {
            let a = with_config(a, config)?;
            check_common(a.nodes, a.tol)?;
            check_list("gamma", &a.gamma)?;
            require(a.gamma.0.iter().all(|g| (0.0..=2.0).contains(g)), "gamma", "gamma must lie in [0, 2]")?;
            require(a.beta > 0.0 && a.beta < 1.0, "beta", format!("need 0 < beta < 1, got {}", a.beta))?;
            let (t, ok) = audit_table(&a)?;
            (render(&t, fmt_or(Format::Json), true), ok)
        }
        Command::EntangleSweep(a) => {
            let a = with_config(a, config)?;
            check_common(a.nodes, a.tol)?;
            check_list("delta_over_m", &a.delta_over_m)?;
            check_list("beta", &a.beta)?;
            sweep(entangle_table(&a), fmt_or(Format::Csv))
        }
        Command::Convergence(a) => {
            let a = with_config(a, config)?;
            check_common(a.nodes, a.tol)?;
            sweep(convergence_table(&convergence_report(a.nodes, a.tol)?), fmt_or(Format::Csv))
        }
    })
}

fn thread_count() -> Result<Option<usize>, ConfigError> {
    match std::env::var("RELQI_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => bad("RELQI_THREADS", format!("expected a positive integer, got `{s}`")),
        },
        Err(_) => Ok(None),
    }
}

fn emit(out: Option<&Path>, text: &str) -> std::io::Result<()> {
    match out {
        Some(p) => fs::write(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let threads = match thread_count() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("config error: invalid `RELQI_THREADS`: {e}");
            return EXIT_CONFIG;
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok((text, converged)) => {
            if let Err(e) = emit(cli.out.as_deref(), &text) {
                eprintln!("config error: invalid `out`: {e}");
                return EXIT_CONFIG;
            }
            if converged {
                EXIT_OK
            } else {
                eprintln!("warning: some quantities did not converge at the requested resolution");
                EXIT_NOT_CONVERGED
            }
        }
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            EXIT_CONFIG
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}
