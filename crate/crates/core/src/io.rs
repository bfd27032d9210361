//! JSON file formats.
//!
//! Complex scalars are `[re, im]` pairs and matrices are arrays of rows.
//! Emission is canonical: keys sorted, floats printed with 17 significant
//! digits, arrays without nested objects kept on one line.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{Map, Number, Value};

use crate::channel::{Channel, ChoiMatrix, KrausSet};
use crate::design::{ConvexCombinationSpec, StochasticUnitarySpec};
use crate::error::{Error, Result};
use crate::majorization::ProbabilityVector;
use crate::operators::{c, ComplexMatrix, ComplexVector, DensityOperator, UnitaryOperator};
use crate::protocols::feedback::FbddConfig;
use crate::protocols::splitting::{split_build, SplitConfig};
use crate::transfer::ControlProblem;

#[derive(Debug, Clone)]
pub struct FbddFile {
    pub config: FbddConfig,
    /// Maximally mixed when absent from the file.
    pub rho_b: DensityOperator,
    pub force: bool,
}

#[derive(Debug, Clone)]
pub struct StochasticFile {
    pub spec: StochasticUnitarySpec,
    /// Cofactor dimension; `⌊d_E/m⌋` when absent.
    pub cofactor: Option<usize>,
}

#[derive(Debug, Clone)]
pub enum Document {
    Kraus(KrausSet),
    Choi(ChoiMatrix),
    State(DensityOperator),
    Unitary(UnitaryOperator),
    Problem(ControlProblem),
    SplitConfig(SplitConfig),
    FbddConfig(FbddFile),
    StochasticSpec(StochasticFile),
    ConvexSpec(ConvexCombinationSpec),
}

impl Document {
    pub fn kind(&self) -> &'static str {
        match self {
            Document::Kraus(_) => "kraus",
            Document::Choi(_) => "choi",
            Document::State(_) => "state",
            Document::Unitary(_) => "unitary",
            Document::Problem(_) => "problem",
            Document::SplitConfig(_) => "split-config",
            Document::FbddConfig(_) => "fbdd-config",
            Document::StochasticSpec(_) => "stochastic-spec",
            Document::ConvexSpec(_) => "convex-spec",
        }
    }
}

fn perr(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

pub fn float(x: f64) -> Value {
    Value::Number(Number::from_f64(x).unwrap_or_else(|| Number::from(0)))
}

pub fn complex_to_value(z: crate::operators::C64) -> Value {
    Value::Array(vec![float(z.re), float(z.im)])
}

pub fn matrix_to_value(m: &ComplexMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex_to_value(m[(i, j)])).collect()))
            .collect(),
    )
}

pub fn vector_to_value(v: &ComplexVector) -> Value {
    Value::Array(v.iter().map(|z| complex_to_value(*z)).collect())
}

pub fn reals_to_value(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| float(*x)).collect())
}

fn as_f64(v: &Value, what: &str) -> Result<f64> {
    let x = v.as_f64().ok_or_else(|| perr(format!("{what}: expected a number")))?;
    if !x.is_finite() {
        return Err(Error::NonFinite("file entry"));
    }
    Ok(x)
}

fn complex_from_value(v: &Value, what: &str) -> Result<crate::operators::C64> {
    match v {
        Value::Array(pair) if pair.len() == 2 => Ok(c(as_f64(&pair[0], what)?, as_f64(&pair[1], what)?)),
        Value::Number(_) => Ok(c(as_f64(v, what)?, 0.0)),
        _ => Err(perr(format!("{what}: complex entries are [re, im] pairs"))),
    }
}

pub fn matrix_from_value(v: &Value, what: &str) -> Result<ComplexMatrix> {
    let rows = v.as_array().ok_or_else(|| perr(format!("{what}: expected an array of rows")))?;
    if rows.is_empty() {
        return Err(perr(format!("{what}: empty matrix")));
    }
    let mut ncols = None;
    let mut data = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| perr(format!("{what}: row {i} is not an array")))?;
        match ncols {
            None => ncols = Some(row.len()),
            Some(n) if n != row.len() => return Err(perr(format!("{what}: ragged rows"))),
            _ => {}
        }
        for z in row {
            data.push(complex_from_value(z, what)?);
        }
    }
    let ncols = ncols.unwrap_or(0);
    if ncols == 0 {
        return Err(perr(format!("{what}: empty rows")));
    }
    Ok(ComplexMatrix::from_row_slice(rows.len(), ncols, &data))
}

pub fn vector_from_value(v: &Value, what: &str) -> Result<ComplexVector> {
    let items = v.as_array().ok_or_else(|| perr(format!("{what}: expected an array")))?;
    let data = items
        .iter()
        .map(|z| complex_from_value(z, what))
        .collect::<Result<Vec<_>>>()?;
    Ok(ComplexVector::from_vec(data))
}

fn reals_from_value(v: &Value, what: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| perr(format!("{what}: expected an array of numbers")))?
        .iter()
        .map(|x| as_f64(x, what))
        .collect()
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| perr(format!("missing field \"{key}\"")))
}

fn usize_field(obj: &Map<String, Value>, key: &str) -> Result<usize> {
    field(obj, key)?
        .as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| perr(format!("\"{key}\" must be a nonnegative integer")))
}

fn f64_field(obj: &Map<String, Value>, key: &str) -> Result<f64> {
    as_f64(field(obj, key)?, key)
}

fn check_square(m: &ComplexMatrix, d: usize, what: &str) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "{what} is {}x{}, expected {d}x{d}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn matrices_field(obj: &Map<String, Value>, key: &str, d: usize) -> Result<Vec<ComplexMatrix>> {
    let items = field(obj, key)?
        .as_array()
        .ok_or_else(|| perr(format!("\"{key}\" must be an array of matrices")))?;
    items
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let what = format!("{key}[{i}]");
            let m = matrix_from_value(m, &what)?;
            check_square(&m, d, &what)?;
            Ok(m)
        })
        .collect()
}

fn square_field(obj: &Map<String, Value>, key: &str, d: usize) -> Result<ComplexMatrix> {
    let m = matrix_from_value(field(obj, key)?, key)?;
    check_square(&m, d, key)?;
    Ok(m)
}

fn state_field(obj: &Map<String, Value>, key: &str) -> Result<DensityOperator> {
    let v = field(obj, key)?;
    let m = matrix_from_value(v, key)?;
    DensityOperator::new(m)
}

pub fn parse_document(text: &str) -> Result<Document> {
    let value: Value = serde_json::from_str(text).map_err(|e| perr(e.to_string()))?;
    document_from_value(&value)
}

pub fn document_from_value(value: &Value) -> Result<Document> {
    let obj = value.as_object().ok_or_else(|| perr("top level must be an object"))?;
    let kind = field(obj, "kind")?
        .as_str()
        .ok_or_else(|| perr("\"kind\" must be a string"))?;
    match kind {
        "kraus" => {
            let d = usize_field(obj, "dim")?;
            Ok(Document::Kraus(KrausSet::new(matrices_field(obj, "ops", d)?)?))
        }
        "choi" => {
            let d = usize_field(obj, "dim")?;
            Ok(Document::Choi(ChoiMatrix::new(d, square_field(obj, "matrix", d * d)?)?))
        }
        "state" => {
            let d = usize_field(obj, "dim")?;
            if let Some(v) = obj.get("vector") {
                let psi = vector_from_value(v, "vector")?;
                if psi.len() != d {
                    return Err(Error::DimensionMismatch("state vector length differs from dim".into()));
                }
                return Ok(Document::State(DensityOperator::from_pure(&psi)?));
            }
            Ok(Document::State(DensityOperator::new(square_field(obj, "matrix", d)?)?))
        }
        "unitary" => {
            let d = usize_field(obj, "dim")?;
            Ok(Document::Unitary(UnitaryOperator::new(square_field(obj, "matrix", d)?)?))
        }
        "problem" => parse_problem(obj).map(Document::Problem),
        "split-config" => {
            let d = usize_field(obj, "d_s")?;
            Ok(Document::SplitConfig(split_build(d, &square_field(obj, "pi_t", d)?)?))
        }
        "fbdd-config" => parse_fbdd(obj).map(Document::FbddConfig),
        "stochastic-spec" => {
            let d = usize_field(obj, "dim")?;
            let unitaries = matrices_field(obj, "unitaries", d)?
                .into_iter()
                .map(UnitaryOperator::new)
                .collect::<Result<Vec<_>>>()?;
            let weights = ProbabilityVector::new(reals_from_value(field(obj, "weights")?, "weights")?)?;
            let cofactor = match obj.get("cofactor") {
                Some(v) => Some(v.as_u64().ok_or_else(|| perr("\"cofactor\" must be an integer"))? as usize),
                None => None,
            };
            Ok(Document::StochasticSpec(StochasticFile {
                spec: StochasticUnitarySpec::new(unitaries, weights)?,
                cofactor,
            }))
        }
        "convex-spec" => {
            let d = usize_field(obj, "dim")?;
            let weights = ProbabilityVector::new(reals_from_value(field(obj, "weights")?, "weights")?)?;
            let comps = field(obj, "channels")?
                .as_array()
                .ok_or_else(|| perr("\"channels\" must be an array of Kraus lists"))?;
            let mut channels = Vec::new();
            for (i, ops) in comps.iter().enumerate() {
                let wrapper = Map::from_iter([("ops".to_string(), ops.clone())]);
                let ops = matrices_field(&wrapper, "ops", d).map_err(|e| match e {
                    Error::Parse(m) => perr(format!("channels[{i}]: {m}")),
                    other => other,
                })?;
                channels.push(Channel::from_kraus_ops(ops)?);
            }
            Ok(Document::ConvexSpec(ConvexCombinationSpec::new(weights, channels)?))
        }
        other => Err(perr(format!("unknown kind \"{other}\""))),
    }
}

fn parse_problem(obj: &Map<String, Value>) -> Result<ControlProblem> {
    let d_s = usize_field(obj, "d_s")?;
    let rho_e = state_field(obj, "rho_e")?;
    let n = d_s * rho_e.dim();
    let t = f64_field(obj, "t")?;
    let n_steps = usize_field(obj, "n_steps")?;
    let mut prob = match field(obj, "controls")? {
        Value::String(s) if s == "full" => {
            let mut p = ControlProblem::fully_controllable(d_s, t, n_steps, rho_e)?;
            if let Some(h0) = obj.get("h0") {
                let h0 = matrix_from_value(h0, "h0")?;
                check_square(&h0, n, "h0")?;
                p = ControlProblem::new(d_s, h0, p.controls, t, n_steps, p.rho_e)?;
            }
            p
        }
        Value::Array(_) => {
            let controls = matrices_field(obj, "controls", n)?;
            let h0 = match obj.get("h0") {
                Some(v) => {
                    let m = matrix_from_value(v, "h0")?;
                    check_square(&m, n, "h0")?;
                    m
                }
                None => ComplexMatrix::zeros(n, n),
            };
            ControlProblem::new(d_s, h0, controls, t, n_steps, rho_e)?
        }
        _ => return Err(perr("\"controls\" must be \"full\" or an array of matrices")),
    };
    if let Some(b) = obj.get("u_max") {
        prob = prob.with_amplitude_bound(as_f64(b, "u_max")?);
    }
    Ok(prob)
}

fn parse_fbdd(obj: &Map<String, Value>) -> Result<FbddFile> {
    let d_s = usize_field(obj, "d_s")?;
    let d_b = usize_field(obj, "d_b")?;
    let u_s = match obj.get("u_s") {
        Some(v) => {
            let m = matrix_from_value(v, "u_s")?;
            check_square(&m, d_s, "u_s")?;
            Some(UnitaryOperator::new(m)?)
        }
        None => None,
    };
    let config = FbddConfig::new(
        square_field(obj, "h_s", d_s)?,
        square_field(obj, "h_b", d_b)?,
        square_field(obj, "s0", d_s)?,
        square_field(obj, "b0", d_b)?,
        f64_field(obj, "t")?,
        u_s,
        vector_from_value(field(obj, "psi")?, "psi")?,
    )?;
    let rho_b = match obj.get("rho_b") {
        Some(_) => state_field(obj, "rho_b")?,
        None => DensityOperator::maximally_mixed(d_b),
    };
    if rho_b.dim() != d_b {
        return Err(Error::DimensionMismatch("rho_b does not match d_b".into()));
    }
    let force = obj.get("override").and_then(Value::as_bool).unwrap_or(false);
    Ok(FbddFile { config, rho_b, force })
}

fn object(entries: Vec<(&str, Value)>) -> Value {
    Value::Object(entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

fn int(n: usize) -> Value {
    Value::Number(Number::from(n as u64))
}

pub fn document_to_value(doc: &Document) -> Value {
    let kind = ("kind", Value::String(doc.kind().into()));
    match doc {
        Document::Kraus(ks) => object(vec![
            kind,
            ("dim", int(ks.dim())),
            ("ops", Value::Array(ks.ops().iter().map(matrix_to_value).collect())),
        ]),
        Document::Choi(ch) => object(vec![kind, ("dim", int(ch.dim())), ("matrix", matrix_to_value(ch.matrix()))]),
        Document::State(rho) => object(vec![kind, ("dim", int(rho.dim())), ("matrix", matrix_to_value(rho.matrix()))]),
        Document::Unitary(u) => object(vec![kind, ("dim", int(u.dim())), ("matrix", matrix_to_value(u.matrix()))]),
        Document::Problem(p) => {
            let mut entries = vec![
                kind,
                ("d_s", int(p.d_s)),
                ("h0", matrix_to_value(&p.h0)),
                ("controls", Value::Array(p.controls.iter().map(matrix_to_value).collect())),
                ("t", float(p.t)),
                ("n_steps", int(p.n_steps)),
                ("rho_e", matrix_to_value(p.rho_e.matrix())),
            ];
            if let Some(b) = p.u_max {
                entries.push(("u_max", float(b)));
            }
            object(entries)
        }
        Document::SplitConfig(cfg) => object(vec![kind, ("d_s", int(cfg.d_s)), ("pi_t", matrix_to_value(&cfg.pi_t))]),
        Document::FbddConfig(f) => {
            let cfg = &f.config;
            let mut entries = vec![
                kind,
                ("d_s", int(cfg.d_s)),
                ("d_b", int(cfg.d_b)),
                ("h_s", matrix_to_value(&cfg.h_s)),
                ("h_b", matrix_to_value(&cfg.h_b)),
                ("s0", matrix_to_value(&cfg.s0)),
                ("b0", matrix_to_value(&cfg.b0)),
                ("t", float(cfg.t)),
                ("psi", vector_to_value(&cfg.psi)),
                ("rho_b", matrix_to_value(f.rho_b.matrix())),
                ("override", Value::Bool(f.force)),
            ];
            if let Some(u) = &cfg.u_s {
                entries.push(("u_s", matrix_to_value(u.matrix())));
            }
            object(entries)
        }
        Document::StochasticSpec(s) => {
            let mut entries = vec![
                kind,
                ("dim", int(s.spec.dim())),
                ("weights", reals_to_value(s.spec.weights().as_slice())),
                (
                    "unitaries",
                    Value::Array(s.spec.unitaries().iter().map(|u| matrix_to_value(u.matrix())).collect()),
                ),
            ];
            if let Some(f) = s.cofactor {
                entries.push(("cofactor", int(f)));
            }
            object(entries)
        }
        Document::ConvexSpec(s) => object(vec![
            kind,
            ("dim", int(s.dim())),
            ("weights", reals_to_value(s.weights().as_slice())),
            (
                "channels",
                Value::Array(
                    s.channels()
                        .iter()
                        .map(|ch| Value::Array(ch.kraus().ops().iter().map(matrix_to_value).collect()))
                        .collect(),
                ),
            ),
        ]),
    }
}

pub fn emit_document(doc: &Document) -> String {
    to_canonical_string(&document_to_value(doc))
}

fn has_object(v: &Value) -> bool {
    match v {
        Value::Object(_) => true,
        Value::Array(items) => items.iter().any(has_object),
        _ => false,
    }
}

fn write_number(n: &Number, out: &mut String) {
    if let Some(i) = n.as_i64() {
        let _ = write!(out, "{i}");
    } else if let Some(u) = n.as_u64() {
        let _ = write!(out, "{u}");
    } else {
        let x = n.as_f64().unwrap_or(0.0);
        let _ = write!(out, "{x:.16e}");
    }
}

fn write_inline(v: &Value, out: &mut String) {
    match v {
        Value::Array(items) => {
            out.push('[');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_inline(x, out);
            }
            out.push(']');
        }
        Value::Number(n) => write_number(n, out),
        other => out.push_str(&other.to_string()),
    }
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| " ".repeat(n);
    match v {
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            for (i, k) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 2));
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_value(&map[*k], indent + 2, out);
                if i + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        Value::Array(items) if has_object(v) => {
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                out.push_str(&pad(indent + 2));
                write_value(x, indent + 2, out);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        other => write_inline(other, out),
    }
}

/// Canonical text of `v`, newline terminated.
pub fn to_canonical_string(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, 0, &mut out);
    out.push('\n');
    out
}

pub fn read_document(path: &Path) -> Result<Document> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_document(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Same as [`read_document`].
pub fn parse_matrix_file(path: &Path) -> Result<Document> {
    read_document(path)
}

pub fn read_channel(path: &Path) -> Result<Channel> {
    match read_document(path)? {
        Document::Kraus(ks) => Ok(Channel::from_kraus(ks)),
        Document::Choi(ch) => Ok(Channel::from_choi(ch)),
        Document::Unitary(u) => Ok(Channel::unitary(&u)),
        other => Err(perr(format!("{}: expected a channel, found kind \"{}\"", path.display(), other.kind()))),
    }
}

pub fn read_state(path: &Path) -> Result<DensityOperator> {
    match read_document(path)? {
        Document::State(rho) => Ok(rho),
        other => Err(perr(format!("{}: expected a state, found kind \"{}\"", path.display(), other.kind()))),
    }
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::Io(format!("{}: not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn write_document(path: &Path, doc: &Document) -> Result<()> {
    write_atomic(path, &emit_document(doc))
}
