//! Lexicographically minimal images under a group given by its chain.
//!
//! Vectors are compared through order-preserving `u32` ranks of their
//! values. A candidate is a pair `(h, w)` with `w[i] = v[h(i)]`; candidates
//! that materialize to the same vector are merged, keeping the first.

use std::collections::HashSet;

use num_traits::Zero;

use super::chain::StabilizerChain;
use super::perm::Permutation;
use crate::expr::Rational;

/// Ranks of the values of `c` and the sorted distinct values.
pub(crate) fn compress(c: &[Rational]) -> (Vec<u32>, Vec<Rational>) {
    let mut values: Vec<Rational> = c.to_vec();
    values.sort();
    values.dedup();
    let ranks = c
        .iter()
        .map(|x| values.binary_search(x).expect("value present") as u32)
        .collect();
    (ranks, values)
}

pub(crate) fn expand(ranks: &[u32], values: &[Rational]) -> Vec<Rational> {
    ranks
        .iter()
        .map(|&r| {
            values
                .get(r as usize)
                .cloned()
                .unwrap_or_else(Rational::zero)
        })
        .collect()
}

/// Minimum of `pull(g, v)` over the level-`from` subgroup of `chain`,
/// returned with the `h` achieving it.
pub(crate) fn min_image_from(
    chain: &StabilizerChain,
    from: usize,
    v: &[u32],
) -> (Vec<u32>, Permutation) {
    let mut cands: Vec<(Permutation, Vec<u32>)> =
        vec![(Permutation::identity(chain.degree()), v.to_vec())];
    let mut slice = Vec::new();
    for k in from..chain.levels().len() {
        let level = &chain.levels()[k];
        let b = level.base();
        let end = chain.range_end(k);
        let mut best: Option<Vec<u32>> = None;
        let mut next: Vec<(Permutation, Vec<u32>)> = Vec::new();
        let mut seen: HashSet<Vec<u32>> = HashSet::new();
        for (h, w) in &cands {
            for u in level.transversal() {
                slice.clear();
                slice.extend((b..end).map(|p| w[u.apply(p)]));
                match &best {
                    Some(m) if slice > *m => continue,
                    Some(m) if slice == *m => {}
                    _ => {
                        best = Some(slice.clone());
                        next.clear();
                        seen.clear();
                    }
                }
                let w2 = u.pull(w);
                if !seen.contains(&w2) {
                    seen.insert(w2.clone());
                    next.push((u.then(h), w2));
                }
            }
        }
        cands = next;
    }
    let (h, w) = cands.swap_remove(0);
    (w, h)
}

/// Filters level by level over the whole chain.
pub(crate) fn min_image(chain: &StabilizerChain, v: &[u32]) -> (Vec<u32>, Permutation) {
    min_image_from(chain, 0, v)
}

/// Chains for the matrix form: rows are party 1's `(a, x)` pairs, columns
/// the joint indices of the other parties.
#[derive(Clone, Debug)]
pub(crate) struct MatrixChains {
    pub rows: usize,
    pub cols: usize,
    pub row_chain: StabilizerChain,
    pub col_chain: StabilizerChain,
    /// Identity first, then the swaps of party 1 with each identical party.
    pub first_party: Vec<Permutation>,
}

/// Column-by-column filtering, run once per choice of first party.
pub(crate) fn min_image_matrix(mc: &MatrixChains, v: &[u32]) -> (Vec<u32>, Permutation) {
    let mut best: Option<(Vec<u32>, Permutation)> = None;
    for tau in &mc.first_party {
        let (m, h) = min_image_fixed_first(mc, &tau.pull(v));
        if best.as_ref().is_none_or(|(b, _)| m < *b) {
            best = Some((m, h.then(tau)));
        }
    }
    best.expect("at least the identity")
}

fn min_image_fixed_first(mc: &MatrixChains, v: &[u32]) -> (Vec<u32>, Permutation) {
    let (ni, nj) = (mc.rows, mc.cols);
    let identity_cols = Permutation::identity(nj);
    let mut cands: Vec<(Vec<u32>, Permutation)> =
        vec![(v.to_vec(), Permutation::identity(v.len()))];
    let mut rows = mc.row_chain.clone();
    let mut col_level = 0;
    let mut x = vec![0u32; ni];
    for gamma in 0..nj {
        let us: &[Permutation] = match mc.col_chain.levels().get(col_level) {
            Some(l) if l.base() == gamma => {
                col_level += 1;
                l.transversal()
            }
            _ => std::slice::from_ref(&identity_cols),
        };
        if cands.len() == 1 && us.len() == 1 && rows.levels().is_empty() {
            continue;
        }
        let mut best: Option<Vec<u32>> = None;
        let mut winners: Vec<(usize, usize, Permutation)> = Vec::new();
        for (ci, (w, _)) in cands.iter().enumerate() {
            for (ui, u) in us.iter().enumerate() {
                let src = u.apply(gamma) * ni;
                for (i, xi) in x.iter_mut().enumerate() {
                    *xi = w[src + i];
                }
                let (m, s) = min_image(&rows, &x);
                match &best {
                    Some(b) if m > *b => continue,
                    Some(b) if m == *b => {}
                    _ => {
                        best = Some(m);
                        winners.clear();
                    }
                }
                winners.push((ci, ui, s));
            }
        }
        let mut seen: HashSet<Vec<u32>> = HashSet::new();
        let mut next = Vec::new();
        for (ci, ui, s) in winners {
            let (w, h) = &cands[ci];
            let u = &us[ui];
            let sigma: Vec<u32> = (0..nj)
                .flat_map(|j| {
                    let uj = u.apply(j) * ni;
                    s.raw().iter().map(move |&si| (si as usize + uj) as u32)
                })
                .collect();
            let w2: Vec<u32> = sigma.iter().map(|&p| w[p as usize]).collect();
            if seen.insert(w2.clone()) {
                let h2 = Permutation::from_raw(sigma).then(h);
                next.push((w2, h2));
            }
        }
        cands = next;
        let col = best.expect("nonempty candidates");
        rows = rows.stabilizer(&col);
    }
    cands.swap_remove(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::int;

    #[test]
    fn compress_preserves_order() {
        let c = vec![int(3), int(-1), int(3), int(0)];
        let (r, v) = compress(&c);
        assert_eq!(r, vec![2, 0, 2, 1]);
        assert_eq!(expand(&r, &v), c);
    }
}
