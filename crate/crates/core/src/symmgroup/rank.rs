//! Position of an element in the lexicographically sorted orbit, computed
//! level by level from block sizes rather than by listing the orbit.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::One;

use super::chain::StabilizerChain;
use super::lexmin::min_image_from;
use crate::error::{Error, Result};

/// Children of the current candidate set at level `k`, grouped by the values
/// they take on the level's point range. Each group holds distinct orbit
/// representatives under the next level's subgroup, with its total size.
fn blocks(
    chain: &StabilizerChain,
    k: usize,
    current: &[Vec<u32>],
) -> BTreeMap<Vec<u32>, (Vec<Vec<u32>>, BigUint)> {
    let level = &chain.levels()[k];
    let (b, end) = (level.base(), chain.range_end(k));
    let sub_order = chain.suborder(k + 1);
    let mut out: BTreeMap<Vec<u32>, (Vec<Vec<u32>>, BigUint)> = BTreeMap::new();
    for c in current {
        for u in level.transversal() {
            let z = u.pull(c);
            let key = z[b..end].to_vec();
            let (rep, _) = min_image_from(chain, k + 1, &z);
            let entry = out
                .entry(key)
                .or_insert_with(|| (Vec::new(), BigUint::default()));
            if !entry.0.contains(&rep) {
                let size = &sub_order / chain.stabilizer_order_from(k + 1, &rep);
                entry.1 += size;
                entry.0.push(rep);
            }
        }
    }
    out
}

/// One-based rank of `w` in the sorted orbit of `v`, with the number of
/// orbit elements skipped at each level.
pub(crate) fn rank_with_trace(
    chain: &StabilizerChain,
    v: &[u32],
    w: &[u32],
) -> Result<(BigUint, Vec<BigUint>)> {
    let start = chain.levels().first().map_or(chain.degree(), |l| l.base());
    if v.len() != w.len() || v[..start] != w[..start] {
        return Err(Error::NotInOrbit);
    }
    let mut current = vec![min_image_from(chain, 0, v).0];
    let mut rank = BigUint::one();
    let mut trace = Vec::with_capacity(chain.levels().len());
    for k in 0..chain.levels().len() {
        let (b, end) = (chain.levels()[k].base(), chain.range_end(k));
        let target = &w[b..end];
        let mut skipped = BigUint::default();
        let mut found = None;
        for (key, (reps, size)) in blocks(chain, k, &current) {
            if key.as_slice() < target {
                skipped += size;
            } else {
                if key.as_slice() == target {
                    found = Some(reps);
                }
                break;
            }
        }
        rank += &skipped;
        trace.push(skipped);
        current = found.ok_or(Error::NotInOrbit)?;
    }
    if !current.iter().any(|c| c.as_slice() == w) {
        return Err(Error::NotInOrbit);
    }
    Ok((rank, trace))
}

/// Orbit element of `v` with one-based rank `r`.
pub(crate) fn unrank(chain: &StabilizerChain, v: &[u32], r: &BigUint) -> Result<Vec<u32>> {
    let size = chain.order() / chain.stabilizer_order_from(0, v);
    if *r < BigUint::one() || *r > size {
        return Err(Error::RankOutOfRange(format!("{r} not in 1..={size}")));
    }
    let mut remaining = r - BigUint::one();
    let mut current = vec![min_image_from(chain, 0, v).0];
    for k in 0..chain.levels().len() {
        let mut chosen = None;
        for (_, (reps, size)) in blocks(chain, k, &current) {
            if remaining < size {
                chosen = Some(reps);
                break;
            }
            remaining -= size;
        }
        current = chosen.ok_or_else(|| Error::Internal("rank blocks exhausted".into()))?;
    }
    match current.as_slice() {
        [only] => Ok(only.clone()),
        _ => Err(Error::Internal(
            "rank blocks did not resolve to one element".into(),
        )),
    }
}
