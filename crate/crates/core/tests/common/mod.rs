#![allow(dead_code)]

use bellcanon::expr::{int, BellExpression, Rational};
use bellcanon::nsbasis::{from_symmetric, BasisKind, PartyBasis, SymmetricTensor};
use bellcanon::scenario::Scenario;
use num_bigint::BigInt;
use rand::Rng;

pub fn sc(s: &str) -> Scenario {
    s.parse().expect("valid scenario")
}

/// Scenarios with at most 36 coefficients, used by the random sweeps.
pub fn small_scenarios() -> Vec<Scenario> {
    [
        "[(2 2)]",
        "[(3 2)]",
        "[(3)(3)]",
        "[(3 2)(3)]",
        "(2,2,2)",
        "[(3 2)(2 2)]",
        "[(2 2 2)(2 2)]",
        "[(3 3)(2 2)]",
        "[(4 3)(3)]",
        "(2,3,2)",
        "[(2 2)(2)(2)]",
        "[(2)(2)(2)(2)]",
        "[(2 2)(2 2)(2)]",
    ]
    .iter()
    .map(|s| sc(s))
    .collect()
}

pub fn random_integers<R: Rng>(s: &Scenario, rng: &mut R, range: i64) -> BellExpression {
    let c: Vec<i64> = (0..s.full_dimension())
        .map(|_| rng.gen_range(-range..=range))
        .collect();
    BellExpression::from_integers(s.clone(), &c).unwrap()
}

pub fn random_rationals<R: Rng>(s: &Scenario, rng: &mut R) -> BellExpression {
    let c: Vec<Rational> = (0..s.full_dimension())
        .map(|_| {
            Rational::new(
                BigInt::from(rng.gen_range(-9i64..=9)),
                BigInt::from(rng.gen_range(1i64..=6)),
            )
        })
        .collect();
    BellExpression::new(s.clone(), c).unwrap()
}

/// Random combination of basis terms that vanish on no-signalling points,
/// plus a random constant.
pub fn random_null_shift<R: Rng>(s: &Scenario, rng: &mut R) -> BellExpression {
    let kinds: Vec<Vec<BasisKind>> = s
        .parties()
        .iter()
        .map(|p| PartyBasis::new(p).kinds().to_vec())
        .collect();
    let data: Vec<Rational> = (0..s.full_dimension())
        .map(|pos| {
            let locals = s.split_position(pos);
            let touches_nu = locals
                .iter()
                .enumerate()
                .any(|(i, &l)| matches!(kinds[i][l], BasisKind::Nu { .. }));
            if pos == 0 || touches_nu {
                int(rng.gen_range(-5..=5))
            } else {
                int(0)
            }
        })
        .collect();
    from_symmetric(&SymmetricTensor::new(s.clone(), data).unwrap())
}

/// `e` with outcome `a` of setting `x` of `party` split into two outcomes
/// carrying the same coefficients.
pub fn lift_outcome(e: &BellExpression, party: usize, x: usize, a: usize) -> BellExpression {
    let s = e.scenario();
    let mut parties = s.parties().to_vec();
    parties[party][x] += 1;
    let big = Scenario::new(parties).unwrap();
    let off = s.setting_offset(party, x);
    let c = (0..big.full_dimension())
        .map(|pos| {
            let mut l = big.split_position(pos);
            let local = l[party];
            l[party] = if local > off + a { local - 1 } else { local };
            e.coefficients()[s.join_position(&l)].clone()
        })
        .collect();
    BellExpression::new(big, c).unwrap()
}

/// `e` with an extra setting of `k` outcomes appended to `party`, carrying
/// zero coefficients.
pub fn lift_setting(e: &BellExpression, party: usize, k: usize) -> BellExpression {
    let s = e.scenario();
    let mut parties = s.parties().to_vec();
    parties[party].push(k);
    let big = Scenario::new(parties).unwrap();
    let size = s.party_size(party);
    let c = (0..big.full_dimension())
        .map(|pos| {
            let l = big.split_position(pos);
            if l[party] >= size {
                int(0)
            } else {
                e.coefficients()[s.join_position(&l)].clone()
            }
        })
        .collect();
    BellExpression::new(big, c).unwrap()
}

/// Rows are party 1's local index, columns party 2's (party 1 fastest).
pub fn table(rows: &[&[i64]]) -> Vec<Rational> {
    let (r, c) = (rows.len(), rows[0].len());
    let mut out = vec![int(0); r * c];
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), c);
        for (j, &x) in row.iter().enumerate() {
            out[i + r * j] = int(x);
        }
    }
    out
}

/// The [(2 3)(2 2 2)] inequality, `≥ 0`, in probability space. Alice's
/// marginal is read with Bob on setting 1, Bob's marginals with Alice on her
/// three-outcome setting.
pub fn pironio() -> BellExpression {
    let s = sc("[(2 3)(2 2 2)]");
    BellExpression::from_fn(s, |t| {
        let (a, x) = t.pairs[0];
        let (b, y) = t.pairs[1];
        let mut v = 0;
        if (a, x, y) == (1, 1, 1) {
            v += 1;
        }
        if x == 2 && (b, y) == (1, 1) {
            v += 1;
        }
        if x == 2 && (b, y) == (1, 2) {
            v += 1;
        }
        for (aa, bb, xx, yy, c) in [
            (1, 1, 1, 1, -1),
            (1, 1, 1, 2, -1),
            (1, 1, 2, 1, -1),
            (2, 1, 2, 2, -1),
            (1, 1, 1, 3, -1),
            (1, 1, 2, 3, 1),
            (2, 1, 2, 3, 1),
        ] {
            if (a, b, x, y) == (aa, bb, xx, yy) {
                v += c;
            }
        }
        int(v)
    })
}

/// Reordered to [(3 2)(2 2 2)], `≤ 0`.
pub fn pironio_reordered() -> Vec<Rational> {
    table(&[
        &[0, 0, -1, 0, -1, 0],
        &[-1, 0, 0, 0, -1, 0],
        &[-1, 0, -1, 0, 0, 0],
        &[0, -1, 1, 0, 1, 0],
        &[0, 0, 0, 0, 0, 0],
    ])
}

/// Tensor components (rows Alice's basis, columns Bob's), `≤ 18`. The
/// all-`μ` slot is left blank in the display; here it holds -18.
pub fn pironio_gamma() -> Vec<Rational> {
    table(&[
        &[-18, -2, -2, -2, -8, -4],
        &[0, 8, -4, -4, 8, 4],
        &[0, 4, 4, -8, 4, 8],
        &[6, 6, 6, 6, -8, -4],
        &[-15, -7, -7, -7, 4, 2],
    ])
}

/// Projected components, `≤ 9`.
pub fn pironio_gamma_projected() -> Vec<Rational> {
    table(&[
        &[0, -1, -1, -1, 0, 0],
        &[0, 4, -2, -2, 0, 0],
        &[0, 2, 2, -4, 0, 0],
        &[3, 3, 3, 3, 0, 0],
        &[0, 0, 0, 0, 0, 0],
    ])
}

/// Projected form back in probability space, `≤ 18`.
pub fn pironio_probabilities() -> Vec<Rational> {
    table(&[
        &[7, -7, -5, 5, -5, 5],
        &[-5, 5, 7, -7, -5, 5],
        &[-5, 5, -5, 5, 7, -7],
        &[7, -3, 7, -3, 7, -3],
        &[-9, 5, -9, 5, -9, 5],
    ])
}

/// Minimal lexicographic representative, `≤ 18`.
pub fn pironio_lexmin() -> Vec<Rational> {
    table(&[
        &[-7, 7, -5, 5, -5, 5],
        &[5, -5, -5, 5, 7, -7],
        &[5, -5, 7, -7, -5, 5],
        &[-3, 7, 7, -3, 7, -3],
        &[5, -9, -9, 5, -9, 5],
    ])
}
