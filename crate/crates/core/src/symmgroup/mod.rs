//! The relabeling group of a scenario acting on coefficient positions:
//! stabilizer chains, minimal images, orbit sizes and orbit ranks.

mod chain;
mod lexmin;
mod perm;
mod rank;
mod relabeling;

use std::sync::OnceLock;

use num_bigint::BigUint;

pub use chain::{build_chain, build_chain_randomized, orbit, Level, StabilizerChain};
pub use perm::{act, Permutation};
pub use relabeling::{group_order, relabeling_generators, relabeling_group, Relabeling};

use crate::error::{Error, Result};
use crate::expr::BellExpression;
use crate::scenario::Scenario;
use lexmin::{compress, expand, MatrixChains};

/// Relabeling group of a canonical scenario, with lazily built chains.
#[derive(Debug)]
pub struct RelabelingGroup {
    scenario: Scenario,
    generators: Vec<Permutation>,
    order: BigUint,
    chain: OnceLock<Result<StabilizerChain>>,
    matrix: OnceLock<Result<MatrixChains>>,
}

impl RelabelingGroup {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let (generators, order) = relabeling_group(scenario)?;
        Ok(RelabelingGroup {
            scenario: scenario.clone(),
            generators,
            order,
            chain: OnceLock::new(),
            matrix: OnceLock::new(),
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn generators(&self) -> &[Permutation] {
        &self.generators
    }

    pub fn order(&self) -> &BigUint {
        &self.order
    }

    /// Chain on all coefficient positions.
    pub fn chain(&self) -> Result<&StabilizerChain> {
        self.chain
            .get_or_init(|| {
                build_chain(
                    self.scenario.full_dimension(),
                    &self.generators,
                    &self.order,
                )
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn matrix(&self) -> Result<&MatrixChains> {
        self.matrix
            .get_or_init(|| matrix_chains(&self.scenario))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn check(&self, e: &BellExpression) -> Result<()> {
        if e.scenario() != &self.scenario {
            return Err(Error::ScenarioMismatch(format!(
                "{} vs {}",
                e.scenario(),
                self.scenario
            )));
        }
        Ok(())
    }

    /// Lexicographically smallest element of the orbit of `e`, and a witness
    /// `w` with `act(w, e)` equal to it. Uses the matrix search.
    pub fn lex_min(&self, e: &BellExpression) -> Result<(BellExpression, Permutation)> {
        self.check(e)?;
        let (v, values) = compress(e.coefficients());
        let (m, h) = lexmin::min_image_matrix(self.matrix()?, &v);
        Ok((self.rebuild(&m, &values), h.inverse()))
    }

    /// Same result as [`lex_min`](Self::lex_min), filtering over the full
    /// chain one base point at a time.
    pub fn lex_min_reference(&self, e: &BellExpression) -> Result<(BellExpression, Permutation)> {
        self.check(e)?;
        let (v, values) = compress(e.coefficients());
        let (m, h) = lexmin::min_image(self.chain()?, &v);
        Ok((self.rebuild(&m, &values), h.inverse()))
    }

    /// `|G| / |Stab(e)|`.
    pub fn orbit_size(&self, e: &BellExpression) -> Result<BigUint> {
        self.check(e)?;
        let (v, _) = compress(e.coefficients());
        let chain = self.chain()?;
        Ok(chain.order() / chain.stabilizer_order_from(0, &v))
    }

    /// Subgroup fixing `e`.
    pub fn stabilizer(&self, e: &BellExpression) -> Result<StabilizerChain> {
        self.check(e)?;
        let (v, _) = compress(e.coefficients());
        Ok(self.chain()?.stabilizer(&v))
    }

    /// One-based position of `e` in the sorted orbit of `rep`.
    pub fn rank_in_orbit(&self, rep: &BellExpression, e: &BellExpression) -> Result<BigUint> {
        Ok(self.rank_trace(rep, e)?.0)
    }

    /// One-based position of `e` in its own sorted orbit.
    pub fn rank_of(&self, e: &BellExpression) -> Result<BigUint> {
        self.rank_in_orbit(e, e)
    }

    /// Rank together with the number of orbit elements skipped per level.
    pub fn rank_trace(
        &self,
        rep: &BellExpression,
        e: &BellExpression,
    ) -> Result<(BigUint, Vec<BigUint>)> {
        self.check(rep)?;
        self.check(e)?;
        let (v, values) = compress(rep.coefficients());
        let w: Vec<u32> = e
            .coefficients()
            .iter()
            .map(|c| values.binary_search(c).map(|i| i as u32))
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::NotInOrbit)?;
        rank::rank_with_trace(self.chain()?, &v, &w)
    }

    /// Orbit element of rank `r` (one-based).
    pub fn unrank(&self, rep: &BellExpression, r: &BigUint) -> Result<BellExpression> {
        self.check(rep)?;
        let (v, values) = compress(rep.coefficients());
        let m = rank::unrank(self.chain()?, &v, r)?;
        Ok(self.rebuild(&m, &values))
    }

    fn rebuild(&self, ranks: &[u32], values: &[crate::expr::Rational]) -> BellExpression {
        BellExpression::new(self.scenario.clone(), expand(ranks, values)).expect("length preserved")
    }
}

fn matrix_chains(s: &Scenario) -> Result<MatrixChains> {
    let first = s.sub_scenario(&[0]);
    let (rg, ro) = relabeling_group(&first)?;
    let rows = first.full_dimension();
    let row_chain = build_chain(rows, &rg, &ro)?;
    let (cols, col_chain) = if s.num_parties() > 1 {
        let rest_idx: Vec<usize> = (1..s.num_parties()).collect();
        let rest = s.sub_scenario(&rest_idx);
        let (cg, co) = relabeling_group(&rest)?;
        let cols = rest.full_dimension();
        (cols, build_chain(cols, &cg, &co)?)
    } else {
        (1, StabilizerChain::trivial(1))
    };
    let mut first_party = vec![Permutation::identity(s.full_dimension())];
    for p in 1..s.num_parties() {
        if s.party(p) != s.party(0) {
            break;
        }
        let mut r = Relabeling::identity(s);
        r.parties.swap(0, p);
        first_party.push(r.to_permutation(s)?);
    }
    Ok(MatrixChains {
        rows,
        cols,
        row_chain,
        col_chain,
        first_party,
    })
}

/// Convenience wrapper building the group for `e`'s scenario.
pub fn lex_min(e: &BellExpression) -> Result<(BellExpression, Permutation)> {
    RelabelingGroup::new(e.scenario())?.lex_min(e)
}

pub fn orbit_size(e: &BellExpression) -> Result<BigUint> {
    RelabelingGroup::new(e.scenario())?.orbit_size(e)
}

pub fn rank_of(e: &BellExpression) -> Result<BigUint> {
    RelabelingGroup::new(e.scenario())?.rank_of(e)
}

pub fn unrank(min_rep: &BellExpression, r: &BigUint) -> Result<BellExpression> {
    RelabelingGroup::new(min_rep.scenario())?.unrank(min_rep, r)
}
