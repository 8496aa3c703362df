use std::collections::{BTreeMap, HashSet};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::perm::Permutation;
use crate::error::{Error, Result};

const ABSENT: u32 = u32::MAX;

/// One level of a stabilizer chain: the orbit of `base` under the level's
/// group, with a coset representative for every orbit point.
#[derive(Clone, Debug)]
pub struct Level {
    base: usize,
    orbit: Vec<u32>,
    transversal: Vec<Permutation>,
    inverses: Vec<Permutation>,
    position: Vec<u32>,
}

impl Level {
    fn new(base: usize, degree: usize) -> Self {
        let mut position = vec![ABSENT; degree];
        position[base] = 0;
        Level {
            base,
            orbit: vec![base as u32],
            transversal: vec![Permutation::identity(degree)],
            inverses: vec![Permutation::identity(degree)],
            position,
        }
    }

    /// Closes the orbit under `gens`, keeping existing representatives.
    fn extend<'a>(&mut self, gens: impl Iterator<Item = &'a Permutation> + Clone) {
        let mut i = 0;
        while i < self.orbit.len() {
            let p = self.orbit[i] as usize;
            for g in gens.clone() {
                let q = g.apply(p);
                if self.position[q] == ABSENT {
                    self.position[q] = self.orbit.len() as u32;
                    self.orbit.push(q as u32);
                    let u = self.transversal[i].then(g);
                    self.inverses.push(u.inverse());
                    self.transversal.push(u);
                }
            }
            i += 1;
        }
    }

    /// Sorts orbit points ascending; the base stays first since it is the
    /// smallest point its group can move.
    fn sort(&mut self) {
        let mut idx: Vec<usize> = (0..self.orbit.len()).collect();
        idx.sort_by_key(|&i| self.orbit[i]);
        self.orbit = idx.iter().map(|&i| self.orbit[i]).collect();
        self.transversal = idx.iter().map(|&i| self.transversal[i].clone()).collect();
        self.inverses = idx.iter().map(|&i| self.inverses[i].clone()).collect();
        for (i, &p) in self.orbit.iter().enumerate() {
            self.position[p as usize] = i as u32;
        }
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn orbit(&self) -> &[u32] {
        &self.orbit
    }

    pub fn transversal(&self) -> &[Permutation] {
        &self.transversal
    }

    pub fn len(&self) -> usize {
        self.orbit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbit.is_empty()
    }

    /// Representative mapping the base to `p`, if `p` is in the orbit.
    pub fn representative(&self, p: usize) -> Option<&Permutation> {
        match self.position[p] {
            ABSENT => None,
            i => Some(&self.transversal[i as usize]),
        }
    }
}

/// Stabilizer chain of a permutation group.
///
/// Levels have strictly increasing base points, and the group of level `k`
/// fixes every point below its base. Every element factors uniquely as
/// `g_{L-1}.then(…).then(g_0)` with `g_k` drawn from level `k`.
#[derive(Clone, Debug)]
pub struct StabilizerChain {
    degree: usize,
    levels: Vec<Level>,
    order: BigUint,
}

impl StabilizerChain {
    pub fn trivial(degree: usize) -> Self {
        StabilizerChain {
            degree,
            levels: Vec::new(),
            order: BigUint::from(1u32),
        }
    }

    fn from_levels(degree: usize, mut levels: Vec<Level>) -> Self {
        levels.retain(|l| l.len() > 1);
        levels.sort_by_key(|l| l.base);
        for l in &mut levels {
            l.sort();
        }
        let order = levels
            .iter()
            .fold(BigUint::from(1u32), |acc, l| acc * l.len());
        StabilizerChain {
            degree,
            levels,
            order,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn order(&self) -> &BigUint {
        &self.order
    }

    pub fn base(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.base).collect()
    }

    /// End of the point range decided at level `k`.
    pub fn range_end(&self, k: usize) -> usize {
        self.levels.get(k + 1).map_or(self.degree, |l| l.base)
    }

    /// Order of the subgroup at level `k` and below.
    pub fn suborder(&self, k: usize) -> BigUint {
        self.levels[k..]
            .iter()
            .fold(BigUint::from(1u32), |acc, l| acc * l.len())
    }

    /// Factors `g` through the chain; `None` if `g` is not a member.
    pub fn factor(&self, g: &Permutation) -> Option<Vec<usize>> {
        let mut h = g.clone();
        let mut idx = Vec::with_capacity(self.levels.len());
        for l in &self.levels {
            let q = h.apply(l.base);
            let i = l.position[q];
            if i == ABSENT {
                return None;
            }
            h = h.then(&l.inverses[i as usize]);
            idx.push(i as usize);
        }
        h.is_identity().then_some(idx)
    }

    pub fn contains(&self, g: &Permutation) -> bool {
        g.degree() == self.degree && self.factor(g).is_some()
    }

    /// Element with the given per-level transversal indices.
    pub fn element(&self, idx: &[usize]) -> Permutation {
        let mut g = Permutation::identity(self.degree);
        for (k, l) in self.levels.iter().enumerate().rev() {
            g = g.then(&l.transversal[idx[k]]);
        }
        g
    }

    /// All elements; only sensible for small groups.
    pub fn elements(&self) -> Vec<Permutation> {
        let mut out = vec![Permutation::identity(self.degree)];
        for l in self.levels.iter().rev() {
            let mut next = Vec::with_capacity(out.len() * l.len());
            for g in &out {
                for u in &l.transversal {
                    next.push(g.then(u));
                }
            }
            out = next;
        }
        out
    }

    /// Subgroup fixing the colouring `v`: all `g` with `v[g(i)] = v[i]`.
    pub fn stabilizer(&self, v: &[u32]) -> StabilizerChain {
        StabilizerChain::from_levels(self.degree, self.stabilizer_levels(0, v))
    }

    /// Order of the stabilizer of `v` inside the level-`from` subgroup.
    pub fn stabilizer_order_from(&self, from: usize, v: &[u32]) -> BigUint {
        self.stabilizer_levels(from, v)
            .iter()
            .fold(BigUint::from(1u32), |acc, l| acc * l.len())
    }

    /// Builds stabilizer levels bottom-up: at each level, an orbit point is
    /// added once some element of the stabilizer is found to reach it.
    fn stabilizer_levels(&self, from: usize, v: &[u32]) -> Vec<Level> {
        let mut search = Transporter::new(self, v);
        let mut gens: Vec<Permutation> = Vec::new();
        let mut levels = Vec::with_capacity(self.levels.len() - from);
        for k in (from..self.levels.len()).rev() {
            let level = &self.levels[k];
            let b = level.base;
            let mut sub = Level::new(b, self.degree);
            sub.extend(gens.iter());
            let end = self.range_end(k);
            for (i, &q) in level.orbit.iter().enumerate().skip(1) {
                let q = q as usize;
                if sub.position[q] != ABSENT || v[q] != v[b] {
                    continue;
                }
                let u = &level.transversal[i];
                if (b + 1..end).any(|p| v[u.apply(p)] != v[p]) {
                    continue;
                }
                if let Some(g) = search.run(k + 1, u.pull(v)) {
                    gens.push(g.then(u));
                    sub.extend(gens.iter());
                }
            }
            levels.push(sub);
        }
        levels
    }

    /// Some `g` with `v[g(i)] = w[i]` for all `i`, if one exists.
    pub fn transporter(&self, v: &[u32], w: &[u32]) -> Option<Permutation> {
        let start = self.levels.first().map_or(self.degree, |l| l.base);
        if v[..start] != w[..start] {
            return None;
        }
        Transporter::new(self, w).run(0, v.to_vec())
    }
}

/// Depth-first search for `g` in a level subgroup with `x ∘ g = target`,
/// remembering vectors already shown to fail at a level.
struct Transporter<'a> {
    chain: &'a StabilizerChain,
    target: &'a [u32],
    failed: HashSet<(usize, Vec<u32>)>,
}

impl<'a> Transporter<'a> {
    fn new(chain: &'a StabilizerChain, target: &'a [u32]) -> Self {
        Transporter {
            chain,
            target,
            failed: HashSet::new(),
        }
    }

    /// Requires `x` to agree with the target below the base of level `k`.
    fn run(&mut self, k: usize, x: Vec<u32>) -> Option<Permutation> {
        let chain = self.chain;
        if k == chain.levels.len() {
            let start = chain.levels.last().map_or(0, |l| l.base);
            return (x[start..] == self.target[start..])
                .then(|| Permutation::identity(chain.degree));
        }
        if self.failed.contains(&(k, x.clone())) {
            return None;
        }
        let level = &chain.levels[k];
        let b = level.base;
        let end = chain.range_end(k);
        for (i, &q) in level.orbit.iter().enumerate() {
            if x[q as usize] != self.target[b] {
                continue;
            }
            let u = &level.transversal[i];
            if (b + 1..end).any(|p| x[u.apply(p)] != self.target[p]) {
                continue;
            }
            let y = u.pull(&x);
            if let Some(g) = self.run(k + 1, y) {
                return Some(g.then(u));
            }
        }
        self.failed.insert((k, x));
        None
    }
}

/// Incremental builder over the complete base `0, 1, …, degree − 1`; only
/// levels whose orbit is nontrivial are materialized.
struct Builder {
    degree: usize,
    strong: Vec<Permutation>,
    first: Vec<usize>,
    levels: BTreeMap<usize, Level>,
    done: BTreeMap<usize, HashSet<(u32, u32)>>,
}

impl Builder {
    fn new(degree: usize) -> Self {
        Builder {
            degree,
            strong: Vec::new(),
            first: Vec::new(),
            levels: BTreeMap::new(),
            done: BTreeMap::new(),
        }
    }

    fn order(&self) -> BigUint {
        self.levels
            .values()
            .fold(BigUint::from(1u32), |acc, l| acc * l.len())
    }

    fn add(&mut self, g: Permutation) {
        let Some(f) = g.first_moved() else { return };
        self.strong.push(g);
        self.first.push(f);
        let degree = self.degree;
        self.levels
            .entry(f)
            .or_insert_with(|| Level::new(f, degree));
        let keys: Vec<usize> = self.levels.range(..=f).map(|(&p, _)| p).collect();
        for p in keys {
            let gens: Vec<&Permutation> = self
                .strong
                .iter()
                .zip(&self.first)
                .filter(|(_, &fm)| fm >= p)
                .map(|(g, _)| g)
                .collect();
            self.levels
                .get_mut(&p)
                .expect("level exists")
                .extend(gens.into_iter());
        }
    }

    /// Residue of `g` after dividing out the chain built so far.
    fn sift(&self, g: &Permutation) -> Permutation {
        let mut h = g.clone();
        while let Some(q) = h.first_moved() {
            let Some(level) = self.levels.get(&q) else {
                break;
            };
            let i = level.position[h.apply(q)];
            if i == ABSENT {
                break;
            }
            h = h.then(&level.inverses[i as usize]);
        }
        h
    }

    /// Checks Schreier generators deepest level first; returns after the
    /// first nontrivial residue is added, or `false` if none remain.
    fn step(&mut self) -> bool {
        let keys: Vec<usize> = self.levels.keys().rev().copied().collect();
        for p in keys {
            let gens: Vec<usize> = (0..self.strong.len())
                .filter(|&s| self.first[s] >= p)
                .collect();
            let n = self.levels[&p].len();
            for i in 0..n {
                for &s in &gens {
                    if !self.done.entry(p).or_default().insert((i as u32, s as u32)) {
                        continue;
                    }
                    let level = &self.levels[&p];
                    let q = self.strong[s].apply(level.orbit[i] as usize);
                    let j = level.position[q] as usize;
                    let sg = level.transversal[i]
                        .then(&self.strong[s])
                        .then(&level.inverses[j]);
                    if sg.is_identity() {
                        continue;
                    }
                    let r = self.sift(&sg);
                    if !r.is_identity() {
                        self.add(r);
                        return true;
                    }
                }
            }
        }
        false
    }

    fn finish(self, known_order: &BigUint) -> Result<StabilizerChain> {
        let chain = StabilizerChain::from_levels(self.degree, self.levels.into_values().collect());
        if &chain.order != known_order {
            return Err(Error::Internal(format!(
                "stabilizer chain order {} differs from group order {}",
                chain.order, known_order
            )));
        }
        Ok(chain)
    }
}

fn check_degrees(degree: usize, gens: &[Permutation]) -> Result<()> {
    if let Some(g) = gens.iter().find(|g| g.degree() != degree) {
        return Err(Error::DimensionMismatch {
            expected: degree,
            got: g.degree(),
        });
    }
    Ok(())
}

/// Deterministic Schreier–Sims, stopping as soon as the known order is
/// reached. A final order mismatch is reported as an internal error.
pub fn build_chain(
    degree: usize,
    generators: &[Permutation],
    known_order: &BigUint,
) -> Result<StabilizerChain> {
    check_degrees(degree, generators)?;
    let mut b = Builder::new(degree);
    for g in generators {
        let r = b.sift(g);
        b.add(r);
    }
    while &b.order() != known_order && b.step() {}
    b.finish(known_order)
}

/// Randomized Schreier–Sims: sifts random products until the known order
/// is reached.
pub fn build_chain_randomized(
    degree: usize,
    generators: &[Permutation],
    known_order: &BigUint,
    seed: u64,
) -> Result<StabilizerChain> {
    check_degrees(degree, generators)?;
    let mut b = Builder::new(degree);
    for g in generators {
        let r = b.sift(g);
        b.add(r);
    }
    let gens: Vec<&Permutation> = generators.iter().filter(|g| !g.is_identity()).collect();
    if gens.is_empty() {
        return b.finish(known_order);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Permutation::identity(degree);
    let mut misses = 0usize;
    while &b.order() < known_order {
        for _ in 0..8 {
            x = x.then(gens[rng.gen_range(0..gens.len())]);
        }
        let r = b.sift(&x);
        if r.is_identity() {
            misses += 1;
            // Fall back to the deterministic check if sampling stalls.
            if misses > 10_000 {
                while &b.order() != known_order && b.step() {}
                break;
            }
        } else {
            misses = 0;
            b.add(r);
        }
    }
    b.finish(known_order)
}

/// Orbit of `base` under `gens` with representatives (breadth-first).
pub fn orbit(degree: usize, base: usize, gens: &[Permutation]) -> Vec<usize> {
    let mut l = Level::new(base, degree);
    l.extend(gens.iter());
    l.orbit.iter().map(|&p| p as usize).collect()
}
