//! Text interchange format for oriented Bell expressions.
//!
//! A document is a YAML mapping:
//!
//! ```yaml
//! scenario: "[(2 2) (2 2)]"
//! notation: probabilities        # or collins-gisin
//! coefficients: [1, -1, "1/2", ...]
//! bounds:
//!   local: 2
//!   quantum: { value: "2", provenance: "textbook" }
//! metadata:
//!   names: [CHSH]
//!   references: []
//!   notes: free text
//! ```
//!
//! Probability coefficients follow the library's enumeration order. In
//! Collins-Gisin notation each party contributes the index list `∅`, then
//! `(a, x)` for every setting `x` and every outcome `a` but the last, with
//! `a` fastest; the joint index runs over the parties with the first party
//! fastest, and the all-`∅` entry is the constant term.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, ToPrimitive, Zero};
use serde_yaml::{Mapping, Value};

use crate::error::{Error, Result};
use crate::expr::{
    format_rational, parse_rational, BellExpression, Bound, OrientedExpression, Rational,
};
use crate::scenario::Scenario;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Notation {
    Probabilities,
    CollinsGisin,
}

impl fmt::Display for Notation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Notation::Probabilities => "probabilities",
            Notation::CollinsGisin => "collins-gisin",
        })
    }
}

impl FromStr for Notation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "probabilities" => Ok(Notation::Probabilities),
            "collins-gisin" => Ok(Notation::CollinsGisin),
            other => Err(Error::Format(format!(
                "unknown notation '{other}' (expected 'probabilities' or 'collins-gisin')"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundEntry {
    pub value: Rational,
    pub provenance: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Metadata {
    pub names: Vec<String>,
    pub references: Vec<String>,
    pub notes: Option<String>,
}

impl Metadata {
    fn is_empty(&self) -> bool {
        self.names.is_empty() && self.references.is_empty() && self.notes.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterchangeDocument {
    pub scenario: Scenario,
    pub notation: Notation,
    /// Coefficients as written, in the document's notation.
    pub coefficients: Vec<Rational>,
    pub bounds: BTreeMap<String, BoundEntry>,
    pub metadata: Metadata,
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn rational_value(v: &Value, what: &str) -> Result<Rational> {
    match v {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Rational::from_integer(i.into()))
            } else if let Some(u) = n.as_u64() {
                Ok(Rational::from_integer(u.into()))
            } else {
                Err(format_err(format!(
                    "{what}: '{n}' is not rational; write fractions as \"p/q\""
                )))
            }
        }
        Value::String(s) => parse_rational(s.trim())
            .map_err(|_| format_err(format!("{what}: '{s}' is not a rational number"))),
        other => Err(format_err(format!(
            "{what}: expected a number, got {}",
            kind(other)
        ))),
    }
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "nothing",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Sequence(_) => "a sequence",
        Value::Mapping(_) => "a mapping",
        Value::Tagged(_) => "a tagged value",
    }
}

fn string_list(v: &Value, what: &str) -> Result<Vec<String>> {
    match v {
        Value::Null => Ok(Vec::new()),
        Value::Sequence(items) => items
            .iter()
            .map(|i| match i {
                Value::String(s) => Ok(s.clone()),
                other => Err(format_err(format!(
                    "{what}: expected strings, got {}",
                    kind(other)
                ))),
            })
            .collect(),
        Value::String(s) => Ok(vec![s.clone()]),
        other => Err(format_err(format!(
            "{what}: expected a list, got {}",
            kind(other)
        ))),
    }
}

fn rational_to_value(r: &Rational) -> Value {
    if r.is_integer() {
        if let Some(i) = r.numer().to_i64() {
            return Value::Number(i.into());
        }
    }
    Value::String(format_rational(r))
}

impl InterchangeDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let root: Value = serde_yaml::from_str(text).map_err(|e| {
            let (line, column) = e.location().map_or((0, 0), |l| (l.line(), l.column()));
            Error::Syntax {
                line,
                column,
                message: e.to_string(),
            }
        })?;
        let Value::Mapping(map) = root else {
            return Err(format_err(format!(
                "document must be a mapping, got {}",
                kind(&root)
            )));
        };
        for key in map.keys() {
            match key.as_str() {
                Some("scenario" | "notation" | "coefficients" | "bounds" | "metadata") => {}
                _ => return Err(format_err(format!("unknown top-level key {key:?}"))),
            }
        }
        let scenario = match map.get("scenario") {
            Some(Value::String(s)) => s.parse::<Scenario>()?,
            Some(other) => {
                return Err(format_err(format!(
                    "scenario: expected a string, got {}",
                    kind(other)
                )))
            }
            None => return Err(format_err("missing key 'scenario'")),
        };
        let notation = match map.get("notation") {
            None => Notation::Probabilities,
            Some(Value::String(s)) => s.parse()?,
            Some(other) => {
                return Err(format_err(format!(
                    "notation: expected a string, got {}",
                    kind(other)
                )))
            }
        };
        let coefficients = match map.get("coefficients") {
            Some(Value::Sequence(items)) => items
                .iter()
                .enumerate()
                .map(|(i, v)| rational_value(v, &format!("coefficient {}", i + 1)))
                .collect::<Result<Vec<_>>>()?,
            Some(Value::Null) => Vec::new(),
            Some(other) => {
                return Err(format_err(format!(
                    "coefficients: expected a sequence, got {}",
                    kind(other)
                )))
            }
            None => return Err(format_err("missing key 'coefficients'")),
        };
        let expected = expected_len(&scenario, notation);
        if coefficients.len() != expected {
            return Err(format_err(format!(
                "length mismatch: scenario {scenario} in {notation} notation needs {expected} coefficients, got {}",
                coefficients.len()
            )));
        }
        let mut bounds = BTreeMap::new();
        match map.get("bounds") {
            None | Some(Value::Null) => {}
            Some(Value::Mapping(b)) => {
                for (k, v) in b {
                    let name = k
                        .as_str()
                        .ok_or_else(|| format_err("bounds: set names must be strings"))?
                        .to_string();
                    let what = format!("bound '{name}'");
                    let entry = match v {
                        Value::Mapping(m) => {
                            for key in m.keys() {
                                if !matches!(key.as_str(), Some("value" | "provenance")) {
                                    return Err(format_err(format!("{what}: unknown key {key:?}")));
                                }
                            }
                            let value = m
                                .get("value")
                                .ok_or_else(|| format_err(format!("{what}: missing 'value'")))?;
                            BoundEntry {
                                value: rational_value(value, &what)?,
                                provenance: match m.get("provenance") {
                                    None | Some(Value::Null) => None,
                                    Some(Value::String(s)) => Some(s.clone()),
                                    Some(other) => {
                                        return Err(format_err(format!(
                                            "{what}: provenance must be a string, got {}",
                                            kind(other)
                                        )))
                                    }
                                },
                            }
                        }
                        v => BoundEntry {
                            value: rational_value(v, &what)?,
                            provenance: None,
                        },
                    };
                    bounds.insert(name, entry);
                }
            }
            Some(other) => {
                return Err(format_err(format!(
                    "bounds: expected a mapping, got {}",
                    kind(other)
                )))
            }
        }
        let metadata = match map.get("metadata") {
            None | Some(Value::Null) => Metadata::default(),
            Some(Value::Mapping(m)) => {
                for key in m.keys() {
                    if !matches!(key.as_str(), Some("names" | "references" | "notes")) {
                        return Err(format_err(format!("metadata: unknown key {key:?}")));
                    }
                }
                Metadata {
                    names: string_list(m.get("names").unwrap_or(&Value::Null), "metadata.names")?,
                    references: string_list(
                        m.get("references").unwrap_or(&Value::Null),
                        "metadata.references",
                    )?,
                    notes: match m.get("notes") {
                        None | Some(Value::Null) => None,
                        Some(Value::String(s)) => Some(s.clone()),
                        Some(other) => {
                            return Err(format_err(format!(
                                "metadata.notes: expected a string, got {}",
                                kind(other)
                            )))
                        }
                    },
                }
            }
            Some(other) => {
                return Err(format_err(format!(
                    "metadata: expected a mapping, got {}",
                    kind(other)
                )))
            }
        };
        Ok(InterchangeDocument {
            scenario,
            notation,
            coefficients,
            bounds,
            metadata,
        })
    }

    /// Normalized text; parsing it gives back `self`.
    pub fn to_text(&self) -> String {
        let mut root = Mapping::new();
        root.insert("scenario".into(), Value::String(self.scenario.to_string()));
        root.insert("notation".into(), Value::String(self.notation.to_string()));
        root.insert(
            "coefficients".into(),
            Value::Sequence(self.coefficients.iter().map(rational_to_value).collect()),
        );
        if !self.bounds.is_empty() {
            let mut b = Mapping::new();
            for (name, entry) in &self.bounds {
                let v = match &entry.provenance {
                    None => rational_to_value(&entry.value),
                    Some(p) => {
                        let mut m = Mapping::new();
                        m.insert("value".into(), rational_to_value(&entry.value));
                        m.insert("provenance".into(), Value::String(p.clone()));
                        Value::Mapping(m)
                    }
                };
                b.insert(Value::String(name.clone()), v);
            }
            root.insert("bounds".into(), Value::Mapping(b));
        }
        if !self.metadata.is_empty() {
            let mut m = Mapping::new();
            let list =
                |v: &[String]| Value::Sequence(v.iter().cloned().map(Value::String).collect());
            m.insert("names".into(), list(&self.metadata.names));
            m.insert("references".into(), list(&self.metadata.references));
            if let Some(n) = &self.metadata.notes {
                m.insert("notes".into(), Value::String(n.clone()));
            }
            root.insert("metadata".into(), Value::Mapping(m));
        }
        serde_yaml::to_string(&Value::Mapping(root)).expect("plain values serialize")
    }

    /// The expression in probability notation.
    pub fn expression(&self) -> Result<BellExpression> {
        match self.notation {
            Notation::Probabilities => {
                BellExpression::new(self.scenario.clone(), self.coefficients.clone())
            }
            Notation::CollinsGisin => {
                collins_gisin_to_probabilities(&self.scenario, &self.coefficients)
            }
        }
    }

    pub fn oriented(&self) -> Result<OrientedExpression> {
        let mut oe = OrientedExpression::new(self.expression()?);
        for (name, b) in &self.bounds {
            oe.bounds
                .insert(name.clone(), Bound::for_set(name, b.value.clone()));
        }
        Ok(oe)
    }

    /// Document for `oe`, written in `notation`.
    pub fn from_oriented(
        oe: &OrientedExpression,
        notation: Notation,
        provenance: &BTreeMap<String, String>,
        metadata: Metadata,
    ) -> Self {
        let e = &oe.expression;
        let coefficients = match notation {
            Notation::Probabilities => e.coefficients().to_vec(),
            Notation::CollinsGisin => probabilities_to_collins_gisin(e),
        };
        let bounds = oe
            .bounds
            .iter()
            .map(|(k, b)| {
                (
                    k.clone(),
                    BoundEntry {
                        value: b.value.clone(),
                        provenance: provenance.get(k).cloned(),
                    },
                )
            })
            .collect();
        InterchangeDocument {
            scenario: e.scenario().clone(),
            notation,
            coefficients,
            bounds,
            metadata,
        }
    }
}

fn expected_len(s: &Scenario, notation: Notation) -> usize {
    match notation {
        Notation::Probabilities => s.full_dimension(),
        Notation::CollinsGisin => s.ns_dimension() + 1,
    }
}

/// Per-party Collins-Gisin labels: `None` for `∅`, then zero-based `(a, x)`.
pub fn collins_gisin_labels(party: &[usize]) -> Vec<Option<(usize, usize)>> {
    let mut out = vec![None];
    for (x, &k) in party.iter().enumerate() {
        out.extend((0..k - 1).map(|a| Some((a, x))));
    }
    out
}

/// Applies `mats[i]` (rows: new index, columns: old index) along axis `i`.
fn transform(data: Vec<Rational>, dims_in: &[usize], mats: &[Vec<Vec<Rational>>]) -> Vec<Rational> {
    let mut dims = dims_in.to_vec();
    let mut data = data;
    for (axis, m) in mats.iter().enumerate() {
        let stride: usize = dims[..axis].iter().product();
        let len_in = dims[axis];
        let len_out = m.len();
        let outer = data.len() / (stride * len_in);
        let mut out = vec![Rational::zero(); outer * stride * len_out];
        for o in 0..outer {
            for s in 0..stride {
                for (r, row) in m.iter().enumerate() {
                    let mut acc = Rational::zero();
                    for (c, v) in row.iter().enumerate() {
                        if !v.is_zero() {
                            acc += v * &data[o * stride * len_in + c * stride + s];
                        }
                    }
                    out[o * stride * len_out + r * stride + s] = acc;
                }
            }
        }
        dims[axis] = len_out;
        data = out;
    }
    data
}

/// Full-probability coefficients of a Collins-Gisin table. A marginal term
/// is read with every uninvolved party on its first setting.
pub fn collins_gisin_to_probabilities(s: &Scenario, g: &[Rational]) -> Result<BellExpression> {
    let n = expected_len(s, Notation::CollinsGisin);
    if g.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: g.len(),
        });
    }
    let dims: Vec<usize> = s
        .parties()
        .iter()
        .map(|p| collins_gisin_labels(p).len())
        .collect();
    let mats: Vec<Vec<Vec<Rational>>> = (0..s.num_parties())
        .map(|i| {
            let labels = collins_gisin_labels(s.party(i));
            (0..s.party_size(i))
                .map(|l| {
                    let (a, x) = s.local_pair(i, l);
                    labels
                        .iter()
                        .map(|lab| match lab {
                            None if x == 0 => Rational::one(),
                            Some(p) if *p == (a, x) => Rational::one(),
                            _ => Rational::zero(),
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    BellExpression::new(s.clone(), transform(g.to_vec(), &dims, &mats))
}

/// Collins-Gisin table agreeing with `e` on every no-signalling point.
pub fn probabilities_to_collins_gisin(e: &BellExpression) -> Vec<Rational> {
    let s = e.scenario();
    let mats: Vec<Vec<Vec<Rational>>> = (0..s.num_parties())
        .map(|i| {
            let labels = collins_gisin_labels(s.party(i));
            let p = s.party(i);
            labels
                .iter()
                .map(|lab| {
                    (0..s.party_size(i))
                        .map(|l| {
                            let (a, x) = s.local_pair(i, l);
                            let last = a == p[x] - 1;
                            match lab {
                                None if last => Rational::one(),
                                Some((_, x2)) if *x2 == x && last => -Rational::one(),
                                Some(q) if *q == (a, x) => Rational::one(),
                                _ => Rational::zero(),
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect::<Vec<_>>();
    transform(e.coefficients().to_vec(), &s.party_sizes(), &mats)
}
