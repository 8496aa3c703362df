//! Local bounds from deterministic strategies, facet certification, and
//! bounds of composite expressions.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::expr::{BellExpression, Rational};
use crate::nsbasis::unit_constant;
use crate::scenario::Scenario;

/// Default limit on the number of deterministic strategies enumerated.
pub const DEFAULT_STRATEGY_CAP: u64 = 1 << 24;

fn check_cap(s: &Scenario, cap: u64) -> Result<()> {
    let count = s.strategy_count();
    if count > BigUint::from(cap) {
        return Err(Error::StrategyCap {
            count: count.to_string(),
            cap,
        });
    }
    Ok(())
}

/// Coefficients over a common denominator.
fn integer_form(e: &BellExpression) -> (Vec<BigInt>, BigInt) {
    let den = e
        .coefficients()
        .iter()
        .fold(BigInt::one(), |l, c| l.lcm(c.denom()));
    let ints = e
        .coefficients()
        .iter()
        .map(|c| c.numer() * (&den / c.denom()))
        .collect();
    (ints, den)
}

/// Calls `f(strategy, value)` for every deterministic strategy, where
/// `strategy[i][x]` is party `i`'s zero-based outcome for setting `x` and
/// `value` is scaled by the common denominator returned.
fn for_each_strategy(
    e: &BellExpression,
    cap: u64,
    mut f: impl FnMut(&[Vec<usize>], &BigInt),
) -> Result<BigInt> {
    let s = e.scenario();
    check_cap(s, cap)?;
    let (data, den) = integer_form(e);
    let mut strategy: Vec<Vec<usize>> = s.parties().iter().map(|p| vec![0; p.len()]).collect();
    descend(s, s.num_parties(), &data, &mut strategy, &mut f);
    Ok(den)
}

/// Contracts the last of the first `n` parties with each of its strategies.
fn descend(
    s: &Scenario,
    n: usize,
    data: &[BigInt],
    strategy: &mut Vec<Vec<usize>>,
    f: &mut impl FnMut(&[Vec<usize>], &BigInt),
) {
    if n == 0 {
        f(strategy, &data[0]);
        return;
    }
    let p = n - 1;
    let party = s.party(p).to_vec();
    let size = s.party_size(p);
    let stride = data.len() / size;
    let offsets: Vec<usize> = (0..party.len()).map(|x| s.setting_offset(p, x)).collect();
    let mut choice = vec![0usize; party.len()];
    loop {
        let mut next = vec![BigInt::zero(); stride];
        for (x, &a) in choice.iter().enumerate() {
            let block = &data[(offsets[x] + a) * stride..(offsets[x] + a + 1) * stride];
            for (acc, v) in next.iter_mut().zip(block) {
                if !v.is_zero() {
                    *acc += v;
                }
            }
        }
        strategy[p].copy_from_slice(&choice);
        descend(s, p, &next, strategy, f);
        let mut x = 0;
        loop {
            if x == party.len() {
                return;
            }
            choice[x] += 1;
            if choice[x] < party[x] {
                break;
            }
            choice[x] = 0;
            x += 1;
        }
    }
}

/// Maximum of `e` over deterministic local strategies.
pub fn local_bound(e: &BellExpression, cap: u64) -> Result<Rational> {
    let mut best: Option<BigInt> = None;
    let den = for_each_strategy(e, cap, |_, v| {
        if best.as_ref().is_none_or(|b| v > b) {
            best = Some(v.clone());
        }
    })?;
    let best = best.ok_or_else(|| Error::Internal("no strategies".into()))?;
    Ok(Rational::new(best, den))
}

/// Minimum of `e` over deterministic local strategies.
pub fn local_lower_bound(e: &BellExpression, cap: u64) -> Result<Rational> {
    Ok(-local_bound(&e.negate(), cap)?)
}

/// Collins-Gisin coordinates of a deterministic point, without the constant.
fn cg_point(s: &Scenario, strategy: &[Vec<usize>]) -> Vec<i8> {
    let mut out = vec![1i8];
    for (i, p) in s.parties().iter().enumerate() {
        let mut local = vec![1i8];
        for (x, &k) in p.iter().enumerate() {
            for a in 0..k - 1 {
                local.push(i8::from(strategy[i][x] == a));
            }
        }
        out = local
            .iter()
            .flat_map(|l| out.iter().map(move |o| o * l))
            .collect();
    }
    out.remove(0);
    out
}

/// Incremental row echelon form over the rationals.
struct Echelon {
    rows: Vec<(usize, Vec<Rational>)>,
}

impl Echelon {
    fn insert(&mut self, mut v: Vec<Rational>) -> bool {
        for (pivot, row) in &self.rows {
            if !v[*pivot].is_zero() {
                let f = v[*pivot].clone() / &row[*pivot];
                for (a, b) in v.iter_mut().zip(row) {
                    if !b.is_zero() {
                        *a -= &f * b;
                    }
                }
            }
        }
        match v.iter().position(|x| !x.is_zero()) {
            Some(p) => {
                self.rows.push((p, v));
                true
            }
            None => false,
        }
    }
}

/// Whether `e ≤ β` defines a facet of the local polytope: `β` must be the
/// local bound, and the saturating deterministic points must span an affine
/// subspace of dimension one less than the no-signalling dimension.
pub fn facet_check(e: &BellExpression, beta: &Rational, cap: u64) -> Result<bool> {
    let s = e.scenario().clone();
    let local = local_bound(e, cap)?;
    if &local != beta {
        return Err(Error::NotTight {
            given: crate::expr::format_rational(beta),
            local: crate::expr::format_rational(&local),
        });
    }
    let (_, den) = integer_form(e);
    let target_value = (beta * Rational::from_integer(den)).to_integer();
    let target_rank = s.ns_dimension() - 1;
    let mut first: Option<Vec<i8>> = None;
    let mut ech = Echelon { rows: Vec::new() };
    for_each_strategy(e, cap, |strategy, v| {
        if *v != target_value || ech.rows.len() >= target_rank {
            return;
        }
        let p = cg_point(&s, strategy);
        match &first {
            None => first = Some(p),
            Some(f) => {
                let diff = p
                    .iter()
                    .zip(f)
                    .map(|(a, b)| Rational::from_integer(BigInt::from(a - b)))
                    .collect();
                ech.insert(diff);
            }
        }
    })?;
    Ok(ech.rows.len() == target_rank)
}

/// Bounds of one named set; a missing side is unknown.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedBounds {
    pub set: String,
    pub conditional: bool,
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

impl NamedBounds {
    pub fn new(set: &str, lower: Option<Rational>, upper: Option<Rational>) -> Self {
        NamedBounds {
            set: set.to_string(),
            conditional: crate::expr::default_conditionality(set),
            lower,
            upper,
        }
    }
}

/// Bounds of `κ + A ⊗ B` from those of `A` and `B`: the extreme products of
/// the factor bounds, shifted by `κ`.
pub fn compose_bounds(a: &NamedBounds, b: &NamedBounds, kappa: &Rational) -> Result<NamedBounds> {
    if a.set != b.set {
        return Err(Error::MissingBound(format!(
            "factors carry different bound sets '{}' and '{}'",
            a.set, b.set
        )));
    }
    if !a.conditional || !b.conditional {
        return Err(Error::NotInheritable(a.set.clone()));
    }
    let get = |x: &Option<Rational>, what: &str| {
        x.clone()
            .ok_or_else(|| Error::MissingBound(format!("{what} bound for '{}'", a.set)))
    };
    let (al, au) = (get(&a.lower, "lower")?, get(&a.upper, "upper")?);
    let (bl, bu) = (get(&b.lower, "lower")?, get(&b.upper, "upper")?);
    let products = [&al * &bl, &al * &bu, &au * &bl, &au * &bu];
    let max = products.iter().max().expect("four products").clone();
    let min = products.iter().min().expect("four products").clone();
    Ok(NamedBounds {
        set: a.set.clone(),
        conditional: true,
        lower: Some(kappa + min),
        upper: Some(kappa + max),
    })
}

/// `−(a − β_a) ⊗ (b − β_b)`, which is `≤ 0` whenever both inputs are valid
/// and a facet whenever both inputs are facets.
pub fn compose_facets(
    a: &BellExpression,
    beta_a: &Rational,
    b: &BellExpression,
    beta_b: &Rational,
) -> BellExpression {
    let shifted = |e: &BellExpression, beta: &Rational| {
        e.add(&unit_constant(e.scenario()).scale(&-beta.clone()))
            .expect("same scenario")
    };
    shifted(a, beta_a).tensor(&shifted(b, beta_b)).negate()
}
