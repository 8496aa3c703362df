//! Well-known expressions used in examples, tests and the CLI.

use crate::expr::{int, BellExpression, Rational};
use crate::scenario::Scenario;

fn s222() -> Scenario {
    Scenario::homogeneous(2, 2, 2).expect("valid scenario")
}

/// CHSH, `(-1)^(a+b+x(y+1))`; local bound 2.
pub fn chsh() -> BellExpression {
    BellExpression::from_fn(s222(), |t| {
        let (a, x) = t.pairs[0];
        let (b, y) = t.pairs[1];
        if (a + b + x * (y + 1)) % 2 == 0 {
            int(1)
        } else {
            int(-1)
        }
    })
}

/// Clauser-Horne, written with upper bound 0.
pub fn ch() -> BellExpression {
    let d = |p: usize, q: usize| if p == q { 1 } else { 0 };
    BellExpression::from_fn(s222(), |t| {
        let (a, x) = t.pairs[0];
        let (b, y) = t.pairs[1];
        let v = -d(a, 2) * d(b, 1) * d(x, 1) * d(y, 1)
            - d(a, 1) * d(b, 2) * d(x, 2) * d(y, 1)
            - d(a, 1) * d(b, 1) * d(x, 1) * d(y, 2)
            + d(a, 1) * d(b, 1) * d(x, 2) * d(y, 2);
        int(v)
    })
}

/// `-P(11|11) ≤ 0` in the two-party binary scenario.
pub fn positivity_222() -> BellExpression {
    BellExpression::from_fn(s222(), |t| {
        if t.pairs.iter().all(|&p| p == (1, 1)) {
            int(-1)
        } else {
            int(0)
        }
    })
}

/// Single-party `-P(1|1) ≤ 0` with `settings` binary settings.
pub fn positivity_single(settings: usize) -> BellExpression {
    let s = Scenario::new(vec![vec![2; settings]]).expect("valid scenario");
    BellExpression::from_fn(s, |t| {
        if t.pairs[0] == (1, 1) {
            int(-1)
        } else {
            int(0)
        }
    })
}

/// Single-party expression equal to one everywhere.
pub fn constant_party(party: &[usize]) -> BellExpression {
    let s = Scenario::new(vec![party.to_vec()]).expect("valid scenario");
    let d = s.full_dimension();
    BellExpression::new(s, vec![Rational::from_integer(1.into()); d]).expect("length matches")
}
