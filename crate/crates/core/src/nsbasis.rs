//! Per-party basis adapted to normalization and no-signalling, and the
//! projection built on it.
//!
//! Each party's `(a, x)` space gets the basis `μ`, then `λ^{ζξ}` grouped by
//! setting `ξ` (and `ζ` within), then `ν^ξ`. Tensors of these basis vectors
//! span the coefficient space. Components that touch a `ν` vanish on every
//! no-signalling point, and the all-`μ` component is a constant.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::expr::{BellExpression, Rational};
use crate::linalg;
use crate::scenario::Scenario;

/// Role of one basis vector; labels are one-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisKind {
    Mu,
    Lambda { zeta: usize, xi: usize },
    Nu { xi: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartyBasis {
    party: Vec<usize>,
    kinds: Vec<BasisKind>,
    vectors: Vec<Vec<Rational>>,
    inverse: Vec<Vec<Rational>>,
}

impl PartyBasis {
    pub fn new(party: &[usize]) -> Self {
        let size: usize = party.iter().sum();
        let m = party.len();
        let offsets: Vec<usize> = party
            .iter()
            .scan(0, |acc, &k| {
                let o = *acc;
                *acc += k;
                Some(o)
            })
            .collect();
        let mut kinds = vec![BasisKind::Mu];
        let mut vectors = vec![vec![Rational::new(BigInt::one(), BigInt::from(m)); size]];
        for (xi, &k) in party.iter().enumerate() {
            for zeta in 0..k - 1 {
                let mut v = vec![Rational::zero(); size];
                v[offsets[xi] + zeta] = Rational::one();
                v[offsets[xi] + zeta + 1] = -Rational::one();
                kinds.push(BasisKind::Lambda {
                    zeta: zeta + 1,
                    xi: xi + 1,
                });
                vectors.push(v);
            }
        }
        for xi in 0..m - 1 {
            let mut v = vec![Rational::zero(); size];
            for a in 0..party[xi] {
                v[offsets[xi] + a] = Rational::one();
            }
            for a in 0..party[xi + 1] {
                v[offsets[xi + 1] + a] = -Rational::one();
            }
            kinds.push(BasisKind::Nu { xi: xi + 1 });
            vectors.push(v);
        }
        // Columns of the change-of-basis matrix are the basis vectors.
        let matrix: Vec<Vec<Rational>> = (0..size)
            .map(|pos| vectors.iter().map(|v| v[pos].clone()).collect())
            .collect();
        let inverse = linalg::inverse(&matrix).expect("party basis is linearly independent");
        PartyBasis {
            party: party.to_vec(),
            kinds,
            vectors,
            inverse,
        }
    }

    pub fn party(&self) -> &[usize] {
        &self.party
    }

    pub fn kinds(&self) -> &[BasisKind] {
        &self.kinds
    }

    pub fn vectors(&self) -> &[Vec<Rational>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Number of `μ` and `λ` vectors; indices at or beyond this are `ν`.
    pub fn ns_len(&self) -> usize {
        1 + self.party.iter().map(|k| k - 1).sum::<usize>()
    }

    fn basis_matrix(&self) -> Vec<Vec<Rational>> {
        (0..self.len())
            .map(|pos| self.vectors.iter().map(|v| v[pos].clone()).collect())
            .collect()
    }
}

pub fn party_basis(party: &[usize]) -> PartyBasis {
    PartyBasis::new(party)
}

/// Components of an expression in the tensor basis, laid out like the
/// coefficient vector (party 1 fastest).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetricTensor {
    scenario: Scenario,
    data: Vec<Rational>,
}

impl SymmetricTensor {
    pub fn new(scenario: Scenario, data: Vec<Rational>) -> Result<Self> {
        let d = scenario.full_dimension();
        if data.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: data.len(),
            });
        }
        Ok(SymmetricTensor { scenario, data })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn data(&self) -> &[Rational] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Rational> {
        self.data
    }

    /// Component for per-party basis indices (zero-based).
    pub fn get(&self, indices: &[usize]) -> &Rational {
        &self.data[self.scenario.join_position(indices)]
    }

    /// The all-`μ` component.
    pub fn constant(&self) -> &Rational {
        &self.data[0]
    }

    /// True when every nonzero component avoids `ν` and the all-`μ` slot.
    pub fn is_projected(&self) -> bool {
        let ns: Vec<usize> = (0..self.scenario.num_parties())
            .map(|i| 1 + self.scenario.party(i).iter().map(|k| k - 1).sum::<usize>())
            .collect();
        self.data[0].is_zero()
            && self.data.iter().enumerate().all(|(pos, v)| {
                v.is_zero()
                    || self
                        .scenario
                        .split_position(pos)
                        .iter()
                        .zip(&ns)
                        .all(|(l, n)| l < n)
            })
    }
}

/// Applies `matrix` along one axis of a tensor with the given axis lengths.
pub(crate) fn mode_product(
    data: &[Rational],
    dims: &[usize],
    axis: usize,
    matrix: &[Vec<Rational>],
) -> Vec<Rational> {
    let stride: usize = dims[..axis].iter().product();
    let len = dims[axis];
    let outer = data.len() / (stride * len);
    let mut out = vec![Rational::zero(); data.len()];
    for o in 0..outer {
        for s in 0..stride {
            let base = o * stride * len + s;
            for (r, row) in matrix.iter().enumerate() {
                let mut acc = Rational::zero();
                for (c, m) in row.iter().enumerate() {
                    if m.is_zero() {
                        continue;
                    }
                    let v = &data[base + c * stride];
                    if !v.is_zero() {
                        acc += m * v;
                    }
                }
                out[base + r * stride] = acc;
            }
        }
    }
    out
}

pub fn to_symmetric(e: &BellExpression) -> SymmetricTensor {
    let s = e.scenario();
    let dims = s.party_sizes();
    let mut data = e.coefficients().to_vec();
    for i in 0..s.num_parties() {
        data = mode_product(&data, &dims, i, &PartyBasis::new(s.party(i)).inverse);
    }
    SymmetricTensor {
        scenario: s.clone(),
        data,
    }
}

pub fn from_symmetric(t: &SymmetricTensor) -> BellExpression {
    let s = &t.scenario;
    let dims = s.party_sizes();
    let mut data = t.data.clone();
    for i in 0..s.num_parties() {
        data = mode_product(&data, &dims, i, &PartyBasis::new(s.party(i)).basis_matrix());
    }
    BellExpression::new(s.clone(), data).expect("dimension preserved")
}

/// Zeroes every `ν` component and the all-`μ` component, moving the latter
/// into the bound.
pub fn project(t: &SymmetricTensor, bound: &Rational) -> (SymmetricTensor, Rational) {
    let s = &t.scenario;
    let ns: Vec<usize> = (0..s.num_parties())
        .map(|i| PartyBasis::new(s.party(i)).ns_len())
        .collect();
    let mut data = t.data.clone();
    for (pos, v) in data.iter_mut().enumerate() {
        if pos == 0 || s.split_position(pos).iter().zip(&ns).any(|(l, n)| l >= n) {
            *v = Rational::zero();
        }
    }
    (
        SymmetricTensor {
            scenario: s.clone(),
            data,
        },
        bound - t.constant(),
    )
}

/// Coefficient vector of `μ ⊗ … ⊗ μ`, which evaluates to 1 on every
/// normalized point.
pub fn unit_constant(s: &Scenario) -> BellExpression {
    let v = s.parties().iter().fold(Rational::one(), |acc, p| {
        acc / Rational::from_integer(p.len().into())
    });
    BellExpression::new(s.clone(), vec![v; s.full_dimension()]).expect("length matches")
}

/// Splits `e` as `projected + shift · μ⊗…⊗μ + residual`, where the residual
/// vanishes on all no-signalling points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Projection {
    pub projected: BellExpression,
    pub shift: Rational,
    pub residual: BellExpression,
}

pub fn project_expression(e: &BellExpression) -> Projection {
    let t = to_symmetric(e);
    let shift = t.constant().clone();
    let (p, _) = project(&t, &Rational::zero());
    let projected = from_symmetric(&p);
    let constant = unit_constant(e.scenario()).scale(&shift);
    let residual = e
        .add(&projected.negate())
        .and_then(|r| r.add(&constant.negate()))
        .expect("same scenario");
    Projection {
        projected,
        shift,
        residual,
    }
}

/// Scales `e` by a positive factor so its coefficients are coprime integers.
pub fn normalize_integer(
    e: &BellExpression,
    bound: &Rational,
) -> Result<(BellExpression, Rational, Rational)> {
    if e.is_zero() {
        return Err(Error::Trivial);
    }
    let lcm = e
        .coefficients()
        .iter()
        .fold(BigInt::one(), |l, c| l.lcm(c.denom()));
    let gcd = e.coefficients().iter().fold(BigInt::zero(), |g, c| {
        g.gcd(&(c.numer() * &lcm / c.denom()))
    });
    let scale = Rational::new(lcm, gcd.abs());
    Ok((e.scale(&scale), bound * &scale, scale))
}
