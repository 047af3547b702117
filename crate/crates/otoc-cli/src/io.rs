//! Gate and observable specifications, provenance and output plumbing.

use std::fmt;
use std::fs;
use std::io::Write;

use otoc_core::channel::Eigenoperators;
use otoc_core::gates::{self, GateSpec};
use otoc_core::markov::subleading_eigenoperators;
use otoc_core::{CMat, Gate, Observable, C64};
use serde::Deserialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::args::{ObsArgs, ObsMode};

/// Maps onto the process exit status.
#[derive(Debug)]
pub enum Failure {
    /// Numerical validation failed (exit 1).
    Numeric(String),
    /// Bad input, budget or I/O (exit 2).
    Input(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Numeric(_) => 1,
            Failure::Input(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Numeric(m) => write!(f, "validation failed: {m}"),
            Failure::Input(m) => f.write_str(m),
        }
    }
}

impl From<otoc_core::Error> for Failure {
    fn from(e: otoc_core::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Input(format!("json: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Input(format!("csv: {e}"))
    }
}

pub type CliResult<T> = Result<T, Failure>;

pub fn input_err<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Input(msg.into()))
}

/// Dense complex matrix on disk: `matrix` holds `[re, im]` pairs in
/// row-major order, either flat or grouped by row.
#[derive(Deserialize)]
struct MatrixFile {
    d_a: Option<usize>,
    d_c: Option<usize>,
    matrix: Value,
}

impl MatrixFile {
    fn read(path: &str) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{path}: {e}")))?;
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{path}: {e}")))
    }

    fn matrix(&self, path: &str) -> CliResult<CMat> {
        let bad = || Failure::Input(format!("{path}: matrix must be n² [re, im] pairs, flat or in n rows"));
        let Value::Array(rows) = &self.matrix else { return Err(bad()) };
        let flat: Vec<&Value> = if rows.first().is_some_and(|r| r.get(0).is_some_and(Value::is_array)) {
            rows.iter().flat_map(|r| r.as_array().map(|r| r.iter().collect::<Vec<_>>()).unwrap_or_default()).collect()
        } else {
            rows.iter().collect()
        };
        let n = (flat.len() as f64).sqrt().round() as usize;
        if n == 0 || n * n != flat.len() {
            return Err(bad());
        }
        let pairs = flat
            .iter()
            .map(|z| match z.as_array().map(|p| p.as_slice()) {
                Some([re, im]) => Some(C64::new(re.as_f64()?, im.as_f64()?)),
                _ => None,
            })
            .collect::<Option<Vec<C64>>>()
            .ok_or_else(bad)?;
        Ok(CMat::from_fn(n, n, |i, j| pairs[i * n + j]))
    }
}

fn parse_params(s: &str) -> CliResult<Vec<(String, String)>> {
    s.split([',', '&'])
        .filter(|p| !p.is_empty())
        .map(|p| match p.split_once('=') {
            Some((k, v)) => Ok((k.trim().to_string(), v.trim().to_string())),
            None => input_err(format!("gate parameter {p:?} is not key=value")),
        })
        .collect()
}

struct Params {
    name: String,
    kv: Vec<(String, String)>,
}

impl Params {
    fn get<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.kv.iter().find(|(k, _)| k == key) {
            None => Ok(None),
            Some((_, v)) => {
                v.parse().map(Some).map_err(|_| Failure::Input(format!("gate {}: bad value {v:?} for {key}", self.name)))
            }
        }
    }

    fn req<T: std::str::FromStr>(&self, key: &str) -> CliResult<T> {
        self.get(key)?.ok_or_else(|| Failure::Input(format!("gate {} needs {key}=", self.name)))
    }

    /// `d_a`/`d_c`, either given separately or as a common `d`.
    fn dims(&self) -> CliResult<(usize, usize)> {
        let d: Option<usize> = self.get("d")?;
        let d_a = self.get("d_a")?.or(d).ok_or_else(|| Failure::Input(format!("gate {} needs d= or d_a=", self.name)))?;
        let d_c = self.get("d_c")?.or(d).unwrap_or(d_a);
        Ok((d_a, d_c))
    }

    fn check_keys(&self, allowed: &[&str]) -> CliResult<()> {
        for (k, _) in &self.kv {
            if !allowed.contains(&k.as_str()) {
                return input_err(format!("gate {}: unknown parameter {k}", self.name));
            }
        }
        Ok(())
    }
}

const GATE_HELP: &str =
    "haar, swap, identity, cphase, cnot, dual-unitary, du-perturbed, weak (e.g. lib:haar?d=3&seed=7)";

/// `lib:NAME[:key=value,...]`, `lib:NAME?key=value&...` or `file:PATH`.
pub fn parse_gate(spec: &str) -> CliResult<Gate> {
    if let Some(path) = spec.strip_prefix("file:") {
        let f = MatrixFile::read(path)?;
        let m = f.matrix(path)?;
        let (d_a, d_c) = match (f.d_a, f.d_c) {
            (Some(a), Some(c)) => (a, c),
            (Some(a), None) => (a, m.nrows() / a.max(1)),
            (None, Some(c)) => (m.nrows() / c.max(1), c),
            (None, None) => {
                let d = (m.nrows() as f64).sqrt().round() as usize;
                (d, d)
            }
        };
        return Gate::new(d_a, d_c, m).map_err(|e| Failure::Input(format!("{path}: {e}")));
    }
    let Some(rest) = spec.strip_prefix("lib:") else {
        return input_err(format!("gate {spec:?}: expected lib:NAME[?params] or file:PATH"));
    };
    let (name, params) = rest.split_once([':', '?']).unwrap_or((rest, ""));
    let p = Params { name: name.to_string(), kv: parse_params(params)? };
    let gs = match name {
        "haar" => {
            p.check_keys(&["d", "d_a", "d_c", "seed"])?;
            let (d_a, d_c) = p.dims()?;
            GateSpec::HaarRandom { d_a, d_c, seed: p.get("seed")?.unwrap_or(0) }
        }
        "swap" => {
            p.check_keys(&["d"])?;
            GateSpec::Swap { d: p.req("d")? }
        }
        "identity" => {
            p.check_keys(&["d", "d_a", "d_c"])?;
            let (d_a, d_c) = p.dims()?;
            GateSpec::Identity { d_a, d_c }
        }
        "cphase" => {
            p.check_keys(&["d", "d_a", "d_c", "phi"])?;
            let (d_a, d_c) = p.dims()?;
            GateSpec::ControlledPhase { d_a, d_c, phi: p.req("phi")? }
        }
        "cnot" => {
            p.check_keys(&[])?;
            return Ok(gates::cnot());
        }
        "dual-unitary" => {
            p.check_keys(&["j", "seed"])?;
            GateSpec::DualUnitaryQubit { j: p.req("j")?, dressing_seed: p.get("seed")? }
        }
        "du-perturbed" => {
            p.check_keys(&["j", "eps", "seed"])?;
            GateSpec::DuPerturbed { j: p.req("j")?, eps: p.req("eps")?, seed: p.get("seed")?.unwrap_or(0) }
        }
        "weak" => {
            p.check_keys(&["d", "d_a", "d_c", "eps", "seed"])?;
            let (d_a, d_c) = p.dims()?;
            GateSpec::WeakCoupling { d_a, d_c, eps: p.req("eps")?, seed: p.get("seed")?.unwrap_or(0) }
        }
        other => return input_err(format!("unknown library gate {other:?}; known: {GATE_HELP}")),
    };
    Ok(gs.build()?)
}

pub fn read_observable(path: &str) -> CliResult<Observable> {
    let f = MatrixFile::read(path)?;
    let m = f.matrix(path)?;
    if f.d_a.is_some_and(|d| d != m.nrows()) {
        return input_err(format!("{path}: d_a does not match the {0}x{0} matrix", m.nrows()));
    }
    Observable::new(m).map_err(|e| Failure::Input(format!("{path}: {e}")))
}

fn expand(files: &[String], k: usize, side: &str) -> CliResult<Vec<Observable>> {
    let ops = files.iter().map(|f| read_observable(f)).collect::<CliResult<Vec<_>>>()?;
    match ops.len() {
        1 => Ok(vec![ops[0].clone(); k]),
        n if n == k => Ok(ops),
        n => input_err(format!("--obs-{side}: expected 1 or {k} files, got {n}")),
    }
}

/// Subleading eigenoperators as observables.
pub fn eigen_observables(e: &Eigenoperators) -> CliResult<(Observable, Observable)> {
    Ok((Observable::operator(e.a.clone())?, Observable::operator(e.b.clone())?))
}

pub fn random_tuple(d: usize, k: usize, seed: u64, traceless: bool) -> CliResult<Vec<Observable>> {
    (0..k as u64).map(|i| Ok(gates::random_observable(d, seed.wrapping_add(i), traceless)?)).collect()
}

/// The tuples `(a_1..a_k)` and `(b_1..b_k)`. Files take precedence; otherwise
/// the generation mode, defaulting to eigenoperators of `gate`.
pub fn observables(obs: &ObsArgs, gate: Option<&Gate>, d: usize, k: usize) -> CliResult<(Vec<Observable>, Vec<Observable>)> {
    if !obs.obs_a.is_empty() || !obs.obs_b.is_empty() {
        if obs.obs_a.is_empty() || obs.obs_b.is_empty() {
            return input_err("--obs-a and --obs-b must be given together");
        }
        let (a, b) = (expand(&obs.obs_a, k, "a")?, expand(&obs.obs_b, k, "b")?);
        if a.iter().chain(&b).any(|o| o.d() != d) {
            return input_err(format!("observables must be {d}x{d}"));
        }
        return Ok((a, b));
    }
    let mode = obs.obs_mode.unwrap_or(ObsMode::Eigen);
    let seed = obs.obs_seed;
    match mode {
        ObsMode::RandomTraceless | ObsMode::Random => {
            let tl = mode == ObsMode::RandomTraceless;
            Ok((random_tuple(d, k, seed, tl)?, random_tuple(d, k, seed.wrapping_add(k as u64), tl)?))
        }
        ObsMode::Eigen | ObsMode::EigenPlusIdentity => {
            let Some(g) = gate else {
                return input_err("eigenoperator observables need --gate");
            };
            let (a, b) = eigen_observables(&subleading_eigenoperators(g)?)?;
            let mut av = vec![a; k];
            if mode == ObsMode::EigenPlusIdentity {
                av[0] = shifted(&av[0], obs.eps)?;
            }
            Ok((av, vec![b; k]))
        }
    }
}

/// `a + ε·1`.
pub fn shifted(a: &Observable, eps: f64) -> CliResult<Observable> {
    let d = a.d();
    Ok(Observable::operator(a.matrix() + CMat::identity(d, d) * C64::new(eps, 0.0))?)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the dimensions and the little-endian matrix entries, row-major.
pub fn gate_hash(g: &Gate) -> String {
    let m = g.matrix();
    let mut buf = Vec::with_capacity(16 + 16 * m.len());
    buf.extend_from_slice(&(g.d_a() as u64).to_le_bytes());
    buf.extend_from_slice(&(g.d_c() as u64).to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            buf.extend_from_slice(&m[(i, j)].re.to_le_bytes());
            buf.extend_from_slice(&m[(i, j)].im.to_le_bytes());
        }
    }
    sha256_hex(&buf)
}

pub fn provenance(config: &Value, extra: Value) -> Value {
    let cfg = serde_json::to_string(config).expect("json value");
    let mut p = json!({
        "tool": "otoc",
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "config_hash": sha256_hex(cfg.as_bytes()),
    });
    if let (Value::Object(m), Value::Object(x)) = (&mut p, extra) {
        m.extend(x);
    }
    p
}

pub fn cjson(z: C64) -> Value {
    json!([z.re, z.im])
}

/// Shortest round-trip representation in exponent form.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn emit(out: Option<&str>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| Failure::Input(format!("{path}: {e}")))?,
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

pub fn emit_json(out: Option<&str>, v: &Value) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    emit(out, s.as_bytes())
}

/// CSV whose first line is `# <provenance json>`.
pub struct Table {
    prov: Value,
    w: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(prov: Value, header: &[&str]) -> CliResult<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        Ok(Self { prov, w })
    }

    pub fn row(&mut self, fields: &[String]) -> CliResult<()> {
        Ok(self.w.write_record(fields)?)
    }

    pub fn finish(self, out: Option<&str>) -> CliResult<()> {
        let body = self.w.into_inner().map_err(|e| Failure::Input(e.to_string()))?;
        let mut bytes = format!("# {}\n", serde_json::to_string(&self.prov)?).into_bytes();
        bytes.extend(body);
        emit(out, &bytes)
    }
}

/// The config block of a JSON config or of an output carrying provenance.
pub fn load_config(path: &str) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{path}: {e}")))?;
    let v: Value = match text.strip_prefix("# ") {
        Some(rest) => serde_json::from_str(rest.lines().next().unwrap_or(""))?,
        None => serde_json::from_str(&text)?,
    };
    Ok(match v.get("provenance").or(if v.get("config_hash").is_some() { Some(&v) } else { None }) {
        Some(p) => p.get("config").cloned().ok_or_else(|| Failure::Input(format!("{path}: provenance without config")))?,
        None => v,
    })
}

/// Command line equivalent to a config object: `command` names the
/// subcommand, `figure` is positional, every other key becomes `--key`.
pub fn config_argv(cfg: &Value) -> CliResult<Vec<String>> {
    let Value::Object(m) = cfg else {
        return input_err("config must be a JSON object");
    };
    let Some(Value::String(cmd)) = m.get("command") else {
        return input_err("config needs a \"command\" string");
    };
    if cmd == "run" {
        return input_err("a config cannot replay another run");
    }
    let mut argv = vec!["otoc".to_string(), cmd.clone()];
    if let Some(fig) = m.get("figure") {
        argv.push(scalar(fig)?);
    }
    for (k, v) in m {
        if k == "command" || k == "figure" {
            continue;
        }
        let flag = format!("--{}", k.replace('_', "-"));
        match v {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => argv.push(flag),
            Value::Array(xs) => {
                if !xs.is_empty() {
                    let parts = xs.iter().map(scalar).collect::<CliResult<Vec<_>>>()?;
                    argv.push(flag);
                    argv.push(parts.join(","));
                }
            }
            other => {
                argv.push(flag);
                argv.push(scalar(other)?);
            }
        }
    }
    Ok(argv)
}

fn scalar(v: &Value) -> CliResult<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => input_err(format!("config value {other} is not a scalar")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_to_argv() {
        let cfg = json!({"command": "recipe", "figure": "fig1", "t_max": 5, "d": null, "validate": true, "d_e_list": [8, 16]});
        assert_eq!(config_argv(&cfg).unwrap(), ["otoc", "recipe", "fig1", "--d-e-list", "8,16", "--t-max", "5", "--validate"]);
        assert!(config_argv(&json!({"k": 2})).is_err());
        assert!(config_argv(&json!({"command": "run"})).is_err());
    }

    #[test]
    fn matrix_layouts() {
        let dir = std::env::temp_dir().join(format!("otoc-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let (flat, rows) = (dir.join("flat.json"), dir.join("rows.json"));
        fs::write(&flat, r#"{"matrix": [[0,0],[0,-1],[0,1],[0,0]]}"#).unwrap();
        fs::write(&rows, r#"{"matrix": [[[0,0],[0,-1]],[[0,1],[0,0]]]}"#).unwrap();
        let y1 = read_observable(flat.to_str().unwrap()).unwrap();
        let y2 = read_observable(rows.to_str().unwrap()).unwrap();
        assert_eq!(y1, y2);
        assert_eq!(y1.matrix()[(0, 1)], C64::new(0.0, -1.0));
        fs::write(&flat, r#"{"matrix": [[0,1],[0,1],[0,1]]}"#).unwrap();
        assert!(read_observable(flat.to_str().unwrap()).is_err());
        fs::write(&flat, r#"{"matrix": [[1,0],[1,0],[0,0],[1,0]]}"#).unwrap();
        let e = read_observable(flat.to_str().unwrap()).unwrap_err().to_string();
        assert!(e.contains("not Hermitian (max violation"), "{e}");
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn gate_specs() {
        assert_eq!(parse_gate("lib:haar:d_a=2,d_c=3,seed=1").unwrap().d_c(), 3);
        assert_eq!(parse_gate("lib:cnot").unwrap().d_a(), 2);
        assert!(parse_gate("lib:swap").is_err());
        assert!(parse_gate("haar").is_err());
        assert!(parse_gate("lib:cphase:d=2,phi=x").is_err());
        assert_eq!(gate_hash(&parse_gate("lib:weak?d=2&eps=0.2&seed=3").unwrap()), gate_hash(&parse_gate("lib:weak:d=2,eps=0.2,seed=3").unwrap()));
        assert_eq!(gate_hash(&parse_gate("lib:haar:d=2,seed=4").unwrap()), gate_hash(&parse_gate("lib:haar:d=2,seed=4").unwrap()));
    }
}
