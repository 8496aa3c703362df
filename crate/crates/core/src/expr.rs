//! Bell expressions as dense exact-rational coefficient vectors.
//!
//! Coefficients are enumerated party-major with party 1 varying fastest;
//! within a party the outcome varies before the setting.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{ReorderMap, Scenario};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `n`, `-n` or `p/q` exactly.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let bad = || Error::Format(format!("not a rational number: '{t}'"));
    match t.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(Error::Format(format!("zero denominator in '{t}'")));
            }
            Ok(Rational::new(p, q))
        }
        None => Ok(Rational::from_integer(t.parse().map_err(|_| bad())?)),
    }
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Per-party `(outcome, setting)` labels, one-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IndexTuple {
    pub pairs: Vec<(usize, usize)>,
}

impl IndexTuple {
    pub fn new(pairs: Vec<(usize, usize)>) -> Self {
        IndexTuple { pairs }
    }
}

/// One-based position of `t` in the coefficient enumeration of `s`.
pub fn index_of(t: &IndexTuple, s: &Scenario) -> Result<usize> {
    if t.pairs.len() != s.num_parties() {
        return Err(Error::IndexOutOfRange(format!(
            "tuple has {} parties, scenario has {}",
            t.pairs.len(),
            s.num_parties()
        )));
    }
    let mut locals = Vec::with_capacity(t.pairs.len());
    for (i, &(a, x)) in t.pairs.iter().enumerate() {
        let p = s.party(i);
        if x < 1 || x > p.len() || a < 1 || a > p[x - 1] {
            return Err(Error::IndexOutOfRange(format!(
                "party {}: outcome {a}, setting {x}",
                i + 1
            )));
        }
        locals.push(s.setting_offset(i, x - 1) + a - 1);
    }
    Ok(s.join_position(&locals) + 1)
}

/// Inverse of [`index_of`].
pub fn tuple_of(index: usize, s: &Scenario) -> Result<IndexTuple> {
    if index < 1 || index > s.full_dimension() {
        return Err(Error::IndexOutOfRange(format!("index {index}")));
    }
    let locals = s.split_position(index - 1);
    Ok(IndexTuple {
        pairs: locals
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let (a, x) = s.local_pair(i, l);
                (a + 1, x + 1)
            })
            .collect(),
    })
}

/// Linear form `Σ c(a|x) P(a|x)` over a scenario.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BellExpression {
    scenario: Scenario,
    coefficients: Vec<Rational>,
}

impl BellExpression {
    pub fn new(scenario: Scenario, coefficients: Vec<Rational>) -> Result<Self> {
        let d = scenario.full_dimension();
        if coefficients.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: coefficients.len(),
            });
        }
        Ok(BellExpression {
            scenario,
            coefficients,
        })
    }

    pub fn from_integers(scenario: Scenario, coefficients: &[i64]) -> Result<Self> {
        BellExpression::new(scenario, coefficients.iter().map(|&c| int(c)).collect())
    }

    pub fn zero(scenario: Scenario) -> Self {
        let d = scenario.full_dimension();
        BellExpression {
            scenario,
            coefficients: vec![Rational::zero(); d],
        }
    }

    /// Builds coefficients from a function of the one-based index tuple.
    pub fn from_fn(scenario: Scenario, f: impl Fn(&IndexTuple) -> Rational) -> Self {
        let d = scenario.full_dimension();
        let coefficients = (1..=d)
            .map(|i| f(&tuple_of(i, &scenario).expect("index in range")))
            .collect();
        BellExpression {
            scenario,
            coefficients,
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn coefficients(&self) -> &[Rational] {
        &self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<Rational> {
        self.coefficients
    }

    pub fn coefficient(&self, t: &IndexTuple) -> Result<&Rational> {
        Ok(&self.coefficients[index_of(t, &self.scenario)? - 1])
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(Zero::is_zero)
    }

    pub fn is_integer(&self) -> bool {
        self.coefficients.iter().all(|c| c.is_integer())
    }

    pub fn evaluate(&self, p: &CorrelationPoint) -> Result<Rational> {
        if p.scenario != self.scenario {
            return Err(Error::ScenarioMismatch(format!(
                "{} vs {}",
                self.scenario, p.scenario
            )));
        }
        Ok(self
            .coefficients
            .iter()
            .zip(&p.values)
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, v)| c * v)
            .sum())
    }

    pub fn negate(&self) -> BellExpression {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, s: &Rational) -> BellExpression {
        BellExpression {
            scenario: self.scenario.clone(),
            coefficients: self.coefficients.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &BellExpression) -> Result<BellExpression> {
        if other.scenario != self.scenario {
            return Err(Error::ScenarioMismatch(format!(
                "{} vs {}",
                self.scenario, other.scenario
            )));
        }
        Ok(BellExpression {
            scenario: self.scenario.clone(),
            coefficients: self
                .coefficients
                .iter()
                .zip(&other.coefficients)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Tensor product; parties of `self` come first.
    pub fn tensor(&self, other: &BellExpression) -> BellExpression {
        let mut coefficients =
            Vec::with_capacity(self.coefficients.len() * other.coefficients.len());
        for b in &other.coefficients {
            for a in &self.coefficients {
                coefficients.push(a * b);
            }
        }
        BellExpression {
            scenario: self.scenario.concat(&other.scenario),
            coefficients,
        }
    }

    /// Applies a party/setting reordering.
    pub fn reorder(&self, map: &ReorderMap) -> BellExpression {
        let target = map.target(&self.scenario);
        let pm = map.position_map(&self.scenario);
        let mut coefficients = vec![Rational::zero(); self.coefficients.len()];
        for (old, c) in self.coefficients.iter().enumerate() {
            coefficients[pm[old]] = c.clone();
        }
        BellExpression {
            scenario: target,
            coefficients,
        }
    }

    /// Integer numerators after clearing denominators with the least common
    /// multiple; the coefficients are not divided by their gcd.
    pub fn integer_coefficients(&self) -> Option<Vec<BigInt>> {
        self.is_integer().then(|| {
            self.coefficients
                .iter()
                .map(|c| c.numer().clone())
                .collect()
        })
    }

    pub fn gcd(&self) -> BigInt {
        self.coefficients
            .iter()
            .fold(BigInt::zero(), |g, c| g.gcd(c.numer()))
    }
}

/// A named upper bound together with its conditionality flag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bound {
    pub value: Rational,
    pub conditional: bool,
}

impl Bound {
    /// Uses the library's default flag for `set`.
    pub fn for_set(set: &str, value: Rational) -> Self {
        Bound {
            value,
            conditional: default_conditionality(set),
        }
    }
}

/// Whether a named bound set may be inherited under composition.
/// Unknown sets are treated as not inheritable.
pub fn default_conditionality(set: &str) -> bool {
    matches!(set, "local" | "no-signaling" | "quantum")
}

/// A Bell expression read as `expression ≤ bound` for each named bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrientedExpression {
    pub expression: BellExpression,
    pub bounds: BTreeMap<String, Bound>,
}

impl OrientedExpression {
    pub fn new(expression: BellExpression) -> Self {
        OrientedExpression {
            expression,
            bounds: BTreeMap::new(),
        }
    }

    pub fn with_bound(mut self, set: &str, value: Rational) -> Self {
        self.bounds
            .insert(set.to_string(), Bound::for_set(set, value));
        self
    }

    pub fn bound(&self, set: &str) -> Option<&Rational> {
        self.bounds.get(set).map(|b| &b.value)
    }

    /// Negated expression with no bounds: upper bounds of `self` say nothing
    /// about the negation.
    pub fn negate(&self) -> OrientedExpression {
        OrientedExpression::new(self.expression.negate())
    }

    /// Turns `expression ≥ lower` into `−expression ≤ −lower`.
    pub fn from_lower_bound(expression: &BellExpression, set: &str, lower: &Rational) -> Self {
        OrientedExpression::new(expression.negate()).with_bound(set, -lower.clone())
    }
}

/// A vector of conditional probabilities in the coefficient enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrelationPoint {
    scenario: Scenario,
    values: Vec<Rational>,
}

impl CorrelationPoint {
    /// Validates range and per-setting normalization.
    pub fn new(scenario: Scenario, values: Vec<Rational>) -> Result<Self> {
        let d = scenario.full_dimension();
        if values.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: values.len(),
            });
        }
        if values
            .iter()
            .any(|v| v.is_negative() || *v > Rational::one())
        {
            return Err(Error::InvalidPoint("probability outside [0, 1]".into()));
        }
        let mut sums: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
        for (pos, v) in values.iter().enumerate() {
            let settings: Vec<usize> = scenario
                .split_position(pos)
                .iter()
                .enumerate()
                .map(|(i, &l)| scenario.local_pair(i, l).1)
                .collect();
            *sums.entry(settings).or_insert_with(Rational::zero) += v;
        }
        if sums.values().any(|s| !s.is_one()) {
            return Err(Error::InvalidPoint(
                "probabilities do not sum to one".into(),
            ));
        }
        Ok(CorrelationPoint { scenario, values })
    }

    /// Point of the deterministic strategy `outcomes[i][x]` (zero-based).
    pub fn deterministic(scenario: &Scenario, outcomes: &[Vec<usize>]) -> Self {
        let d = scenario.full_dimension();
        let values = (0..d)
            .map(|pos| {
                let hit = scenario
                    .split_position(pos)
                    .iter()
                    .enumerate()
                    .all(|(i, &l)| {
                        let (a, x) = scenario.local_pair(i, l);
                        outcomes[i][x] == a
                    });
                if hit {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            })
            .collect();
        CorrelationPoint {
            scenario: scenario.clone(),
            values,
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    /// Product point; parties of `self` come first.
    pub fn product(&self, other: &CorrelationPoint) -> CorrelationPoint {
        let mut values = Vec::with_capacity(self.values.len() * other.values.len());
        for b in &other.values {
            for a in &self.values {
                values.push(a * b);
            }
        }
        CorrelationPoint {
            scenario: self.scenario.concat(&other.scenario),
            values,
        }
    }
}

impl Serialize for BellExpression {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("BellExpression", 2)?;
        st.serialize_field("scenario", &self.scenario)?;
        let coeffs: Vec<String> = self.coefficients.iter().map(format_rational).collect();
        st.serialize_field("coefficients", &coeffs)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for BellExpression {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            scenario: Scenario,
            coefficients: Vec<String>,
        }
        let raw = Raw::deserialize(d)?;
        let coeffs = raw
            .coefficients
            .iter()
            .map(|c| parse_rational(c))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        BellExpression::new(raw.scenario, coeffs).map_err(serde::de::Error::custom)
    }
}
