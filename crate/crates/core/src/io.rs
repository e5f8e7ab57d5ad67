//! JSON interchange documents.
//!
//! Operators are `{dim, mode, factors, entries}` with exact entries written as
//! `["p/q", "r/s"]` and float entries as `[re, im]`. Exact documents round-trip
//! losslessly. State sets, certificates, verification reports and solver
//! results reuse the operator layout.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use num_rational::BigRational;
use serde_json::{json, Map, Value};

use crate::catalysis::ProtocolOutcome;
use crate::certificates::{DualCertificate, VerificationReport};
use crate::error::{Error, Result};
use crate::factorization::Factorization;
use crate::operator::{ExactOperator, FloatOperator, Operator};
use crate::scalar::{format_ratio, parse_ratio, ExactComplex, Mode, Scalar};
use crate::sdp::{Measurement, SolverResult};
use crate::states::{ExactStateSet, FloatStateSet, StateSet};

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn field<'a>(v: &'a Value, name: &str) -> Result<&'a Value> {
    v.get(name).ok_or_else(|| format_err(format!("missing field `{name}`")))
}

fn as_usize(v: &Value, name: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| format_err(format!("`{name}` must be a non-negative integer")))
}

fn as_array<'a>(v: &'a Value, name: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| format_err(format!("`{name}` must be an array")))
}

/// Scalars with a JSON encoding.
pub trait JsonScalar: Scalar {
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;
    fn real_to_json(r: &Self::Real) -> Value;
    fn real_from_json(v: &Value) -> Result<Self::Real>;
}

fn pair(v: &Value) -> Result<(&Value, &Value)> {
    match v.as_array().map(|a| a.as_slice()) {
        Some([re, im]) => Ok((re, im)),
        _ => Err(format_err("complex entry must be a two-element array")),
    }
}

impl JsonScalar for ExactComplex {
    fn to_json(&self) -> Value {
        json!([format_ratio(&self.re), format_ratio(&self.im)])
    }

    fn from_json(v: &Value) -> Result<Self> {
        let (re, im) = pair(v)?;
        Ok(ExactComplex::new(Self::real_from_json(re)?, Self::real_from_json(im)?))
    }

    fn real_to_json(r: &BigRational) -> Value {
        Value::String(format_ratio(r))
    }

    fn real_from_json(v: &Value) -> Result<BigRational> {
        match v {
            Value::String(s) => parse_ratio(s),
            Value::Number(_) => Err(Error::ModeMismatch),
            _ => Err(format_err("exact value must be a \"p/q\" string")),
        }
    }
}

impl JsonScalar for Complex64 {
    fn to_json(&self) -> Value {
        json!([self.re, self.im])
    }

    fn from_json(v: &Value) -> Result<Self> {
        let (re, im) = pair(v)?;
        Ok(Complex64::new(Self::real_from_json(re)?, Self::real_from_json(im)?))
    }

    fn real_to_json(r: &f64) -> Value {
        json!(r)
    }

    fn real_from_json(v: &Value) -> Result<f64> {
        match v {
            Value::Number(n) => n.as_f64().ok_or_else(|| format_err("non-finite float")),
            Value::String(_) => Err(Error::ModeMismatch),
            _ => Err(format_err("float value must be a number")),
        }
    }
}

pub fn operator_to_json<T: JsonScalar>(op: &Operator<T>) -> Value {
    let n = op.dim();
    let rows: Vec<Value> = (0..n)
        .map(|r| Value::Array((0..n).map(|c| op.entry(r, c).to_json()).collect()))
        .collect();
    json!({
        "dim": n,
        "mode": T::MODE,
        "factors": op.factors(),
        "entries": rows,
    })
}

fn document_mode(v: &Value) -> Result<Mode> {
    Ok(serde_json::from_value(field(v, "mode")?.clone())?)
}

pub fn operator_from_json<T: JsonScalar>(v: &Value) -> Result<Operator<T>> {
    if document_mode(v)? != T::MODE {
        return Err(Error::ModeMismatch);
    }
    let dim = as_usize(field(v, "dim")?, "dim")?;
    let factors: Factorization = serde_json::from_value(field(v, "factors")?.clone())?;
    if factors.total_dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: factors.total_dim() });
    }
    let rows = as_array(field(v, "entries")?, "entries")?;
    if rows.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: rows.len() });
    }
    let mut entries = Vec::with_capacity(dim * dim);
    for row in rows {
        let row = as_array(row, "entries row")?;
        if row.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
        }
        for x in row {
            entries.push(T::from_json(x)?);
        }
    }
    Operator::new(factors, entries)
}

/// Operator whose scalar mode is known only at run time.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyOperator {
    Exact(ExactOperator),
    Float(FloatOperator),
}

impl AnyOperator {
    pub fn from_json(v: &Value) -> Result<Self> {
        match document_mode(v)? {
            Mode::Exact => operator_from_json(v).map(Self::Exact),
            Mode::Float => operator_from_json(v).map(Self::Float),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Self::Exact(op) => operator_to_json(op),
            Self::Float(op) => operator_to_json(op),
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            Self::Exact(_) => Mode::Exact,
            Self::Float(_) => Mode::Float,
        }
    }

    pub fn factors(&self) -> &Factorization {
        match self {
            Self::Exact(op) => op.factors(),
            Self::Float(op) => op.factors(),
        }
    }

    pub fn kron(&self, other: &Self) -> Result<Self> {
        match (self, other) {
            (Self::Exact(a), Self::Exact(b)) => a.kron(b).map(Self::Exact),
            (Self::Float(a), Self::Float(b)) => a.kron(b).map(Self::Float),
            _ => Err(Error::ModeMismatch),
        }
    }

    pub fn to_float(&self) -> FloatOperator {
        match self {
            Self::Exact(op) => op.to_float(),
            Self::Float(op) => op.clone(),
        }
    }

    pub fn into_exact(self) -> Result<ExactOperator> {
        match self {
            Self::Exact(op) => Ok(op),
            Self::Float(_) => Err(Error::ExactModeRequired),
        }
    }
}

pub fn state_set_to_json<T: JsonScalar>(set: &StateSet<T>) -> Value {
    let mut doc = Map::new();
    doc.insert("t".into(), json!(set.t()));
    doc.insert("d".into(), json!(set.d()));
    doc.insert("k".into(), json!(set.k()));
    if let Some(idx) = set.indices() {
        doc.insert("indices".into(), json!(idx));
    }
    doc.insert("priors".into(), Value::Array(set.priors().iter().map(T::real_to_json).collect()));
    doc.insert("states".into(), Value::Array(set.states().iter().map(operator_to_json).collect()));
    Value::Object(doc)
}

pub fn state_set_from_json<T: JsonScalar>(v: &Value) -> Result<StateSet<T>> {
    let states = as_array(field(v, "states")?, "states")?
        .iter()
        .map(operator_from_json)
        .collect::<Result<Vec<Operator<T>>>>()?;
    let priors = as_array(field(v, "priors")?, "priors")?
        .iter()
        .map(T::real_from_json)
        .collect::<Result<Vec<_>>>()?;
    let set = StateSet::new(states, priors)?;
    let k = as_usize(field(v, "k")?, "k")?;
    if k != set.k() {
        return Err(Error::DimensionMismatch { expected: k, found: set.k() });
    }
    let d = as_usize(field(v, "d")?, "d")?;
    if d != set.d() {
        return Err(Error::DimensionMismatch { expected: d, found: set.d() });
    }
    let t = match v.get("t") {
        None | Some(Value::Null) => None,
        Some(x) => Some(as_usize(x, "t")? as u32),
    };
    let indices = match v.get("indices") {
        None | Some(Value::Null) => None,
        Some(x) => Some(serde_json::from_value::<Vec<usize>>(x.clone())?),
    };
    Ok(match (t, indices) {
        (Some(t), Some(idx)) if idx.len() == set.k() => set.with_origin(t, idx),
        (Some(t), None) => {
            let k = set.k();
            set.with_origin(t, (1..=k).collect())
        }
        (None, None) => set,
        _ => return Err(format_err("`indices` must list one index per state")),
    })
}

/// State set whose scalar mode is known only at run time.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyStateSet {
    Exact(ExactStateSet),
    Float(FloatStateSet),
}

impl AnyStateSet {
    pub fn from_json(v: &Value) -> Result<Self> {
        let first = as_array(field(v, "states")?, "states")?
            .first()
            .ok_or_else(|| Error::InvalidState("empty state set".into()))?;
        match document_mode(first)? {
            Mode::Exact => state_set_from_json(v).map(Self::Exact),
            Mode::Float => state_set_from_json(v).map(Self::Float),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Self::Exact(s) => state_set_to_json(s),
            Self::Float(s) => state_set_to_json(s),
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            Self::Exact(_) => Mode::Exact,
            Self::Float(_) => Mode::Float,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Self::Exact(s) => s.k(),
            Self::Float(s) => s.k(),
        }
    }

    pub fn to_float(&self) -> FloatStateSet {
        match self {
            Self::Exact(s) => s.to_float(),
            Self::Float(s) => s.clone(),
        }
    }

    pub fn into_exact(self) -> Result<ExactStateSet> {
        match self {
            Self::Exact(s) => Ok(s),
            Self::Float(_) => Err(Error::ExactModeRequired),
        }
    }
}

pub fn certificate_to_json(cert: &DualCertificate) -> Value {
    json!({
        "t": cert.t(),
        "k": cert.k(),
        "Y": operator_to_json(cert.y()),
        "Q": cert.q().iter().map(operator_to_json).collect::<Vec<_>>(),
    })
}

pub fn certificate_from_json(v: &Value) -> Result<DualCertificate> {
    let y = AnyOperator::from_json(field(v, "Y")?)?.into_exact()?;
    let q = as_array(field(v, "Q")?, "Q")?
        .iter()
        .map(|x| AnyOperator::from_json(x)?.into_exact())
        .collect::<Result<Vec<_>>>()?;
    let k = as_usize(field(v, "k")?, "k")?;
    if k != q.len() {
        return Err(Error::DimensionMismatch { expected: k, found: q.len() });
    }
    let t = match v.get("t") {
        None | Some(Value::Null) => None,
        Some(x) => Some(as_usize(x, "t")? as u32),
    };
    DualCertificate::new(y, q, t)
}

pub fn report_to_json(report: &VerificationReport) -> Value {
    let failures: Vec<Value> = report
        .failures
        .iter()
        .map(|f| {
            let mut m = Map::new();
            m.insert("index".into(), json!(f.index));
            m.insert("kind".into(), json!(f.kind));
            if let Some(w) = &f.witness {
                m.insert("witness".into(), Value::Array(w.iter().map(JsonScalar::to_json).collect()));
            }
            if let Some(x) = &f.value {
                m.insert("value".into(), Value::String(format_ratio(x)));
            }
            Value::Object(m)
        })
        .collect();
    json!({
        "feasible": report.feasible,
        "objective": format_ratio(&report.objective),
        "objective_decimal": report.objective_f64(),
        "y_hermitian": report.y_hermitian,
        "failures": failures,
    })
}

pub fn measurement_to_json(m: &Measurement) -> Value {
    Value::Array(m.operators().iter().map(operator_to_json).collect())
}

pub fn solver_result_to_json(r: &SolverResult, include_measurement: bool) -> Value {
    let mut doc = json!({
        "value": r.value,
        "dual_bound": r.dual_bound,
        "iterations": r.iterations,
        "residuals": r.residuals,
        "status": r.status,
    });
    if include_measurement {
        doc["measurement"] = measurement_to_json(&r.measurement);
    }
    doc
}

pub fn outcome_to_json(outcome: &ProtocolOutcome) -> Value {
    serde_json::to_value(outcome).expect("outcome serializes")
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    fs::write(path, text).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::{base_certificate, verify};
    use crate::scalar::rat;
    use crate::states::{bell_density, yu_set};

    #[test]
    fn exact_operator_round_trip() {
        let op = bell_density(2).unwrap();
        let v = operator_to_json(&op);
        assert_eq!(v["entries"][1][1], json!(["1/2", "0/1"]));
        assert_eq!(v["mode"], json!("exact"));
        let back: ExactOperator = operator_from_json(&v).unwrap();
        assert_eq!(back, op);
    }

    #[test]
    fn float_operator_round_trip() {
        let op = bell_density(1).unwrap().to_float().scale(&(1.0 / 3.0));
        let text = serde_json::to_string(&operator_to_json(&op)).unwrap();
        let back: FloatOperator = operator_from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, op);
    }

    #[test]
    fn mode_is_checked() {
        let v = operator_to_json(&bell_density(0).unwrap());
        assert!(matches!(operator_from_json::<Complex64>(&v), Err(Error::ModeMismatch)));
        let a = AnyOperator::from_json(&v).unwrap();
        let b = AnyOperator::Float(bell_density(0).unwrap().to_float());
        assert!(matches!(a.kron(&b), Err(Error::ModeMismatch)));
        assert_eq!(a.kron(&a).unwrap().mode(), Mode::Exact);
        let mut bad = v.clone();
        bad["entries"][0][0] = json!([0.5, 0.0]);
        assert!(matches!(AnyOperator::from_json(&bad), Err(Error::ModeMismatch)));
    }

    #[test]
    fn malformed_documents_are_rejected() {
        let v = operator_to_json(&bell_density(0).unwrap());
        let mut short = v.clone();
        short["dim"] = json!(3);
        assert!(AnyOperator::from_json(&short).is_err());
        let mut asym = v.clone();
        asym["entries"][0][3] = json!(["1/3", "0/1"]);
        assert!(matches!(AnyOperator::from_json(&asym), Err(Error::NotHermitian { .. })));
        assert!(AnyOperator::from_json(&json!({"mode": "exact"})).is_err());
    }

    #[test]
    fn state_set_and_certificate_round_trip() {
        let set = yu_set();
        let v = state_set_to_json(&set);
        assert_eq!(v["d"], json!(4));
        assert_eq!(v["priors"][0], json!("1/4"));
        let back = AnyStateSet::from_json(&v).unwrap().into_exact().unwrap();
        assert_eq!(back, set);
        let cert = base_certificate();
        let c2 = certificate_from_json(&certificate_to_json(&cert)).unwrap();
        assert_eq!(c2, cert);
        let report = report_to_json(&verify(&back, &c2).unwrap());
        assert_eq!(report["objective"], json!("7/8"));
        assert_eq!(report["feasible"], json!(true));
        assert_eq!(rat(7, 8), parse_ratio(report["objective"].as_str().unwrap()).unwrap());
    }
}
