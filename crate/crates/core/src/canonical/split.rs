//! Detection of composite expressions: a constant plus a tensor product
//! across a partition of the parties, read off the symmetric tensor.

use num_traits::Zero;

use crate::expr::Rational;
use crate::nsbasis::SymmetricTensor;
use crate::scenario::Scenario;

/// `data` of a tensor on `s`, viewed as a matrix whose rows are indexed by
/// the parties in `block` and columns by the others.
fn flatten(s: &Scenario, data: &[Rational], block: &[usize]) -> Vec<Vec<Rational>> {
    let rest: Vec<usize> = (0..s.num_parties())
        .filter(|i| !block.contains(i))
        .collect();
    let (sa, sb) = (s.sub_scenario(block), s.sub_scenario(&rest));
    let mut m = vec![vec![Rational::zero(); sb.full_dimension()]; sa.full_dimension()];
    for (pos, v) in data.iter().enumerate() {
        if v.is_zero() {
            continue;
        }
        let locals = s.split_position(pos);
        let la: Vec<usize> = block.iter().map(|&i| locals[i]).collect();
        let lb: Vec<usize> = rest.iter().map(|&i| locals[i]).collect();
        m[sa.join_position(&la)][sb.join_position(&lb)] = v.clone();
    }
    m
}

/// Writes `m[i][j] = x[i]·y[j]` given a pivot with `m[i][j] ≠ 0`, or `None`
/// when `m` has rank above one.
fn rank_one(m: &[Vec<Rational>], pi: usize, pj: usize) -> Option<(Vec<Rational>, Vec<Rational>)> {
    let p = &m[pi][pj];
    for (k, row) in m.iter().enumerate() {
        for (l, v) in row.iter().enumerate() {
            if v * p != &m[k][pj] * &m[pi][l] {
                return None;
            }
        }
    }
    let x = m.iter().map(|row| row[pj].clone()).collect();
    let y = m[pi].iter().map(|v| v / p).collect();
    Some((x, y))
}

fn first_nonzero(m: &[Vec<Rational>], skip_first: bool) -> Option<(usize, usize)> {
    let lo = usize::from(skip_first);
    m.iter().enumerate().skip(lo).find_map(|(i, row)| {
        row.iter()
            .enumerate()
            .skip(lo)
            .find(|(_, v)| !v.is_zero())
            .map(|(j, _)| (i, j))
    })
}

/// The value `t` making `m + t·E₀₀` of rank one, with its factors. Needs a
/// nonzero entry away from the first row and column; without one no
/// completion can mix both sides.
fn completion(m: &[Vec<Rational>]) -> Option<(Rational, Vec<Rational>, Vec<Rational>)> {
    let (i, j) = first_nonzero(m, true)?;
    let target = &m[0][j] * &m[i][0] / &m[i][j];
    let t = &target - &m[0][0];
    let mut filled = m.to_vec();
    filled[0][0] = target;
    let (x, y) = rank_one(&filled, i, j)?;
    Some((t, x, y))
}

/// Subsets of `0..n` containing `0`, proper, smallest first then
/// lexicographic.
fn anchored_subsets(n: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0u64..1 << (n - 1))
        .map(|mask| {
            let mut v = vec![0];
            v.extend((1..n).filter(|i| mask >> (i - 1) & 1 == 1));
            v
        })
        .filter(|v| v.len() < n)
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

fn tensor_on(s: &Scenario, parties: &[usize], data: Vec<Rational>) -> SymmetricTensor {
    SymmetricTensor::new(s.sub_scenario(parties), data).expect("factor dimension")
}

/// Finest factorization of a product tensor, as blocks of party indices
/// (increasing) with their factors.
fn finest(t: &SymmetricTensor) -> Vec<(Vec<usize>, SymmetricTensor)> {
    let s = t.scenario();
    let n = s.num_parties();
    if n > 1 {
        for block in anchored_subsets(n) {
            let m = flatten(s, t.data(), &block);
            let Some((pi, pj)) = first_nonzero(&m, false) else {
                continue;
            };
            if let Some((x, y)) = rank_one(&m, pi, pj) {
                let rest: Vec<usize> = (0..n).filter(|i| !block.contains(i)).collect();
                let mut out = vec![(block.clone(), tensor_on(s, &block, x))];
                for (sub, f) in finest(&tensor_on(s, &rest, y)) {
                    out.push((sub.iter().map(|&i| rest[i]).collect(), f));
                }
                return out;
            }
        }
    }
    vec![((0..n).collect(), t.clone())]
}

/// `γ = κ·E₀ + ⊗ factors`, factors in their finest form.
#[derive(Clone, Debug)]
pub(crate) struct ProductSplit {
    pub kappa: Rational,
    pub factors: Vec<(Vec<usize>, SymmetricTensor)>,
}

/// Searches bipartitions anchored at the first party, smallest first. The
/// constant is the same for every bipartition that works, so the first hit
/// fixes it and the completed tensor is then split as finely as possible.
pub(crate) fn find_product(t: &SymmetricTensor) -> Option<ProductSplit> {
    let s = t.scenario();
    let n = s.num_parties();
    if n < 2 {
        return None;
    }
    for block in anchored_subsets(n) {
        let m = flatten(s, t.data(), &block);
        if let Some((shift, _, _)) = completion(&m) {
            let mut data = t.data().to_vec();
            data[0] += &shift;
            let completed = SymmetricTensor::new(s.clone(), data).expect("same shape");
            return Some(ProductSplit {
                kappa: -shift,
                factors: finest(&completed),
            });
        }
    }
    None
}

/// `κ`, then each side's parties and factor.
pub(crate) type Bipartition = (
    Rational,
    Vec<usize>,
    SymmetricTensor,
    Vec<usize>,
    SymmetricTensor,
);

/// First bipartition found, as `γ = κ·E₀ + a ⊗ b`.
pub(crate) fn find_bipartition(t: &SymmetricTensor) -> Option<Bipartition> {
    let s = t.scenario();
    let n = s.num_parties();
    if n < 2 {
        return None;
    }
    for block in anchored_subsets(n) {
        let m = flatten(s, t.data(), &block);
        if let Some((shift, x, y)) = completion(&m) {
            let rest: Vec<usize> = (0..n).filter(|i| !block.contains(i)).collect();
            let a = tensor_on(s, &block, x);
            let b = tensor_on(s, &rest, y);
            return Some((-shift, block, a, rest, b));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_are_ordered() {
        assert_eq!(anchored_subsets(3), vec![vec![0], vec![0, 1], vec![0, 2]]);
        assert_eq!(anchored_subsets(2), vec![vec![0]]);
    }
}
