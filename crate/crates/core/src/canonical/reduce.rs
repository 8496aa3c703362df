//! Removal of superfluous parties, settings and outcome distinctions.
//!
//! Every step maps a projected expression to a projected expression in a
//! smaller scenario and keeps what is needed to undo it exactly.

use num_traits::Zero;

use crate::expr::{BellExpression, Rational};
use crate::nsbasis::{
    from_symmetric, project_expression, to_symmetric, unit_constant, BasisKind, PartyBasis,
    SymmetricTensor,
};
use crate::scenario::{ReorderMap, Scenario};

/// One reduction, with indices zero-based in the scenario it applies to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReductionStep {
    Reorder {
        before: Scenario,
        map: ReorderMap,
    },
    RemoveParty {
        before: Scenario,
        party: usize,
    },
    RemoveSetting {
        before: Scenario,
        party: usize,
        setting: usize,
    },
    /// Outcome `removed` is folded into `kept`. Undoing it first restores
    /// `shift · μ⊗…⊗μ + residual`, which re-projection had taken away.
    MergeOutcomes {
        before: Scenario,
        party: usize,
        setting: usize,
        kept: usize,
        removed: usize,
        shift: Rational,
        residual: BellExpression,
    },
}

impl ReductionStep {
    pub fn before(&self) -> &Scenario {
        match self {
            ReductionStep::Reorder { before, .. }
            | ReductionStep::RemoveParty { before, .. }
            | ReductionStep::RemoveSetting { before, .. }
            | ReductionStep::MergeOutcomes { before, .. } => before,
        }
    }

    /// Maps an expression of the reduced scenario back to the scenario the
    /// step was applied to.
    pub fn lift(&self, e: &BellExpression) -> BellExpression {
        match self {
            ReductionStep::Reorder { map, .. } => e.reorder(&map.inverse()),
            ReductionStep::RemoveParty { before, party } => {
                let m = Rational::from_integer(before.party(*party).len().into());
                let small = e.scenario();
                let coefficients = (0..before.full_dimension())
                    .map(|pos| {
                        let mut locals = before.split_position(pos);
                        locals.remove(*party);
                        &e.coefficients()[small.join_position(&locals)] / &m
                    })
                    .collect();
                BellExpression::new(before.clone(), coefficients).expect("dimension")
            }
            ReductionStep::RemoveSetting {
                before,
                party,
                setting,
            } => {
                let t = to_symmetric(e);
                let small_kinds = PartyBasis::new(e.scenario().party(*party)).kinds().to_vec();
                let big_kinds = PartyBasis::new(before.party(*party)).kinds().to_vec();
                let data = gather(e.scenario(), t.data(), before, *party, |l| {
                    let k = unshift_setting(big_kinds[l], *setting + 1)?;
                    small_kinds.iter().position(|&s| s == k)
                });
                from_symmetric(&SymmetricTensor::new(before.clone(), data).expect("dimension"))
            }
            ReductionStep::MergeOutcomes {
                before,
                party,
                setting,
                kept,
                removed,
                shift,
                residual,
            } => {
                let full = e
                    .add(&unit_constant(e.scenario()).scale(shift))
                    .and_then(|x| x.add(residual))
                    .expect("same scenario");
                let off = before.setting_offset(*party, *setting);
                let data = gather(e.scenario(), full.coefficients(), before, *party, |l| {
                    Some(if l == off + removed {
                        off + kept
                    } else if l > off + removed {
                        l - 1
                    } else {
                        l
                    })
                });
                BellExpression::new(before.clone(), data).expect("dimension")
            }
        }
    }
}

/// Big-scenario basis label to the label it had before setting `xi` (one-based)
/// was inserted; `None` for labels that belong to `xi` or are `ν`.
fn unshift_setting(k: BasisKind, xi: usize) -> Option<BasisKind> {
    match k {
        BasisKind::Mu => Some(BasisKind::Mu),
        BasisKind::Lambda { zeta, xi: x } if x != xi => Some(BasisKind::Lambda {
            zeta,
            xi: if x > xi { x - 1 } else { x },
        }),
        _ => None,
    }
}

/// Builds data on `dst` by reading `src_data` with party `party`'s local index
/// translated through `f`; untranslatable entries become zero.
fn gather(
    src: &Scenario,
    src_data: &[Rational],
    dst: &Scenario,
    party: usize,
    f: impl Fn(usize) -> Option<usize>,
) -> Vec<Rational> {
    let map: Vec<Option<usize>> = (0..dst.party_size(party)).map(&f).collect();
    (0..dst.full_dimension())
        .map(|pos| {
            let mut locals = dst.split_position(pos);
            match map[locals[party]] {
                Some(l) => {
                    locals[party] = l;
                    src_data[src.join_position(&locals)].clone()
                }
                None => Rational::zero(),
            }
        })
        .collect()
}

/// Record of the reductions applied, in order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StructureReport {
    pub steps: Vec<ReductionStep>,
}

impl StructureReport {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Undoes all steps, last first.
    pub fn lift(&self, e: &BellExpression) -> BellExpression {
        self.steps
            .iter()
            .rev()
            .fold(e.clone(), |acc, s| s.lift(&acc))
    }

    /// Value of the original minus value of the reduced expression, on any
    /// no-signalling point.
    pub fn value_offset(&self) -> Rational {
        self.steps
            .iter()
            .map(|s| match s {
                ReductionStep::MergeOutcomes { shift, .. } => shift.clone(),
                _ => Rational::zero(),
            })
            .sum()
    }

    /// Number of steps that remove structure (reorderings excluded).
    pub fn removals(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| !matches!(s, ReductionStep::Reorder { .. }))
            .count()
    }
}

fn superfluous_party(t: &SymmetricTensor) -> Option<usize> {
    let s = t.scenario();
    if s.num_parties() < 2 {
        return None;
    }
    (0..s.num_parties()).find(|&p| {
        t.data()
            .iter()
            .enumerate()
            .all(|(pos, v)| v.is_zero() || s.split_position(pos)[p] == 0)
    })
}

fn superfluous_setting(t: &SymmetricTensor) -> Option<(usize, usize)> {
    let s = t.scenario();
    for p in 0..s.num_parties() {
        if s.party(p).len() < 2 {
            continue;
        }
        let kinds = PartyBasis::new(s.party(p)).kinds().to_vec();
        for x in 0..s.party(p).len() {
            let touches =
                |l: usize| matches!(kinds[l], BasisKind::Lambda { xi, .. } if xi == x + 1);
            let dead = t
                .data()
                .iter()
                .enumerate()
                .all(|(pos, v)| v.is_zero() || !touches(s.split_position(pos)[p]));
            if dead {
                return Some((p, x));
            }
        }
    }
    None
}

fn duplicate_outcomes(e: &BellExpression) -> Option<(usize, usize, usize, usize)> {
    let s = e.scenario();
    let c = e.coefficients();
    for p in 0..s.num_parties() {
        for (x, &k) in s.party(p).iter().enumerate() {
            let off = s.setting_offset(p, x);
            for a1 in 0..k {
                for a2 in a1 + 1..k {
                    let same = (0..s.full_dimension()).all(|pos| {
                        let mut locals = s.split_position(pos);
                        if locals[p] != off + a1 {
                            return true;
                        }
                        locals[p] = off + a2;
                        c[pos] == c[s.join_position(&locals)]
                    });
                    if same {
                        return Some((p, x, a1, a2));
                    }
                }
            }
        }
    }
    None
}

fn remove_party(e: &BellExpression, party: usize) -> BellExpression {
    let s = e.scenario();
    let rest: Vec<usize> = (0..s.num_parties()).filter(|&i| i != party).collect();
    let small = s.sub_scenario(&rest);
    let m = Rational::from_integer(s.party(party).len().into());
    let coefficients = (0..small.full_dimension())
        .map(|pos| {
            let mut locals = small.split_position(pos);
            locals.insert(party, 0);
            &e.coefficients()[s.join_position(&locals)] * &m
        })
        .collect();
    BellExpression::new(small, coefficients).expect("dimension")
}

fn remove_setting(e: &BellExpression, party: usize, setting: usize) -> BellExpression {
    let s = e.scenario();
    let mut parties = s.parties().to_vec();
    parties[party].remove(setting);
    let small = Scenario::new(parties).expect("party keeps a setting");
    let t = to_symmetric(e);
    let small_kinds = PartyBasis::new(small.party(party)).kinds().to_vec();
    let big_kinds = PartyBasis::new(s.party(party)).kinds().to_vec();
    let data = gather(s, t.data(), &small, party, |l| {
        let k = small_kinds[l];
        big_kinds
            .iter()
            .position(|&b| unshift_setting(b, setting + 1) == Some(k))
    });
    from_symmetric(&SymmetricTensor::new(small, data).expect("dimension"))
}

fn merge_outcomes(
    e: &BellExpression,
    party: usize,
    setting: usize,
    kept: usize,
    removed: usize,
) -> (BellExpression, ReductionStep) {
    let s = e.scenario();
    let mut parties = s.parties().to_vec();
    parties[party][setting] -= 1;
    let small = Scenario::new(parties).expect("at least two outcomes before");
    let off = s.setting_offset(party, setting);
    let data = gather(s, e.coefficients(), &small, party, |l| {
        Some(if l >= off + removed { l + 1 } else { l })
    });
    let restricted = BellExpression::new(small, data).expect("dimension");
    let p = project_expression(&restricted);
    let step = ReductionStep::MergeOutcomes {
        before: s.clone(),
        party,
        setting,
        kept,
        removed,
        shift: p.shift,
        residual: p.residual,
    };
    (p.projected, step)
}

/// Reorders `e` into its canonical scenario, recording the step if needed.
pub(crate) fn canonical_order(e: BellExpression, report: &mut StructureReport) -> BellExpression {
    let (target, map) = e.scenario().canonical();
    if &target == e.scenario() {
        return e;
    }
    report.steps.push(ReductionStep::Reorder {
        before: e.scenario().clone(),
        map: map.clone(),
    });
    e.reorder(&map)
}

/// Removes superfluous parties, then settings, then outcome distinctions,
/// one at a time, until none is left; the result is in canonical scenario
/// order. `e` must be projected.
pub fn remove_superfluous(e: &BellExpression) -> (BellExpression, StructureReport) {
    let mut report = StructureReport::default();
    let mut cur = canonical_order(e.clone(), &mut report);
    if cur.is_zero() {
        return (cur, report);
    }
    loop {
        let t = to_symmetric(&cur);
        let before = cur.scenario().clone();
        let next = if let Some(party) = superfluous_party(&t) {
            report
                .steps
                .push(ReductionStep::RemoveParty { before, party });
            remove_party(&cur, party)
        } else if let Some((party, setting)) = superfluous_setting(&t) {
            report.steps.push(ReductionStep::RemoveSetting {
                before,
                party,
                setting,
            });
            remove_setting(&cur, party, setting)
        } else if let Some((party, setting, kept, removed)) = duplicate_outcomes(&cur) {
            let (next, step) = merge_outcomes(&cur, party, setting, kept, removed);
            report.steps.push(step);
            next
        } else {
            return (cur, report);
        };
        cur = canonical_order(next, &mut report);
    }
}
