use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::Rng;

use super::perm::Permutation;
use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// A relabeling of parties, settings and outcomes, as old-to-new maps.
///
/// `settings[i]` and `outcomes[i][x]` are indexed by the old party `i` and
/// old setting `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relabeling {
    pub parties: Vec<usize>,
    pub settings: Vec<Vec<usize>>,
    pub outcomes: Vec<Vec<Vec<usize>>>,
}

fn is_bijection(v: &[usize]) -> bool {
    let mut seen = vec![false; v.len()];
    v.iter()
        .all(|&x| x < v.len() && !std::mem::replace(&mut seen[x], true))
}

impl Relabeling {
    pub fn identity(s: &Scenario) -> Self {
        Relabeling {
            parties: (0..s.num_parties()).collect(),
            settings: s.parties().iter().map(|p| (0..p.len()).collect()).collect(),
            outcomes: s
                .parties()
                .iter()
                .map(|p| p.iter().map(|&k| (0..k).collect()).collect())
                .collect(),
        }
    }

    /// Uniformly random element of the relabeling group of `s`.
    pub fn random<R: Rng + ?Sized>(s: &Scenario, rng: &mut R) -> Self {
        let n = s.num_parties();
        let mut parties: Vec<usize> = (0..n).collect();
        let mut i = 0;
        while i < n {
            let mut j = i + 1;
            while j < n && s.party(j) == s.party(i) {
                j += 1;
            }
            let mut block: Vec<usize> = (i..j).collect();
            block.shuffle(rng);
            parties[i..j].copy_from_slice(&block);
            i = j;
        }
        let mut settings = Vec::with_capacity(n);
        let mut outcomes = Vec::with_capacity(n);
        for p in s.parties() {
            let mut map: Vec<usize> = (0..p.len()).collect();
            for k in p.iter().copied().collect::<std::collections::BTreeSet<_>>() {
                let idx: Vec<usize> = (0..p.len()).filter(|&x| p[x] == k).collect();
                let mut shuffled = idx.clone();
                shuffled.shuffle(rng);
                for (a, b) in idx.iter().zip(&shuffled) {
                    map[*a] = *b;
                }
            }
            settings.push(map);
            outcomes.push(
                p.iter()
                    .map(|&k| {
                        let mut o: Vec<usize> = (0..k).collect();
                        o.shuffle(rng);
                        o
                    })
                    .collect(),
            );
        }
        Relabeling {
            parties,
            settings,
            outcomes,
        }
    }

    fn validate(&self, s: &Scenario) -> Result<()> {
        let bad = |m: &str| {
            Err(Error::InvalidScenario(format!(
                "incompatible relabeling: {m}"
            )))
        };
        let n = s.num_parties();
        if self.parties.len() != n || !is_bijection(&self.parties) {
            return bad("party map");
        }
        for i in 0..n {
            let p = s.party(i);
            if s.party(self.parties[i]) != p {
                return bad("party signatures differ");
            }
            let sm = &self.settings[i];
            if sm.len() != p.len() || !is_bijection(sm) {
                return bad("setting map");
            }
            for x in 0..p.len() {
                if p[sm[x]] != p[x] {
                    return bad("setting outcome counts differ");
                }
                let om = &self.outcomes[i][x];
                if om.len() != p[x] || !is_bijection(om) {
                    return bad("outcome map");
                }
            }
        }
        Ok(())
    }

    /// Point permutation on coefficient positions.
    pub fn to_permutation(&self, s: &Scenario) -> Result<Permutation> {
        self.validate(s)?;
        let n = s.num_parties();
        let local: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                (0..s.party_size(i))
                    .map(|l| {
                        let (a, x) = s.local_pair(i, l);
                        let nx = self.settings[i][x];
                        s.setting_offset(self.parties[i], nx) + self.outcomes[i][x][a]
                    })
                    .collect()
            })
            .collect();
        let mut images = Vec::with_capacity(s.full_dimension());
        let mut locals = vec![0; n];
        for pos in 0..s.full_dimension() {
            for (i, l) in s.split_position(pos).into_iter().enumerate() {
                locals[self.parties[i]] = local[i][l];
            }
            images.push(s.join_position(&locals));
        }
        Permutation::from_images(images)
    }
}

/// Lengths of maximal runs of equal consecutive items.
fn runs<T: PartialEq>(v: &[T]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < v.len() {
        let mut j = i + 1;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        out.push(j - i);
        i = j;
    }
    out
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::from(1u32), |acc, k| acc * k)
}

/// Order of the relabeling group of a canonical scenario.
pub fn group_order(s: &Scenario) -> BigUint {
    let mut order = BigUint::from(1u32);
    for r in runs(s.parties()) {
        order *= factorial(r);
    }
    for p in s.parties() {
        for r in runs(p) {
            order *= factorial(r);
        }
        for &k in p {
            order *= factorial(k);
        }
    }
    order
}

/// Adjacent transpositions of outcomes, of equal-size settings and of
/// identical parties.
pub fn relabeling_generators(s: &Scenario) -> Result<Vec<Permutation>> {
    if !s.is_canonical() {
        return Err(Error::NonCanonicalScenario(s.to_string()));
    }
    let n = s.num_parties();
    let mut gens = Vec::new();
    for i in 0..n.saturating_sub(1) {
        if s.party(i) == s.party(i + 1) {
            let mut r = Relabeling::identity(s);
            r.parties.swap(i, i + 1);
            gens.push(r.to_permutation(s)?);
        }
    }
    for i in 0..n {
        let p = s.party(i);
        for x in 0..p.len() - 1 {
            if p[x] == p[x + 1] {
                let mut r = Relabeling::identity(s);
                r.settings[i].swap(x, x + 1);
                gens.push(r.to_permutation(s)?);
            }
        }
    }
    for i in 0..n {
        for (x, &k) in s.party(i).iter().enumerate() {
            for a in 0..k - 1 {
                let mut r = Relabeling::identity(s);
                r.outcomes[i][x].swap(a, a + 1);
                gens.push(r.to_permutation(s)?);
            }
        }
    }
    Ok(gens)
}

pub fn relabeling_group(s: &Scenario) -> Result<(Vec<Permutation>, BigUint)> {
    Ok((relabeling_generators(s)?, group_order(s)))
}
