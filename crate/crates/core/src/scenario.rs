//! Bell scenarios: parties, their settings and per-setting outcome counts.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A Bell scenario. `parties[i][j]` is the number of outcomes of setting `j`
/// of party `i` (both zero-based here, one-based in labels).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Scenario {
    parties: Vec<Vec<usize>>,
}

/// Reordering of parties and settings, as old-to-new index maps.
///
/// `settings[i]` is indexed by the *old* party `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReorderMap {
    pub parties: Vec<usize>,
    pub settings: Vec<Vec<usize>>,
}

impl Scenario {
    pub fn new(parties: Vec<Vec<usize>>) -> Result<Self> {
        if parties.is_empty() {
            return Err(Error::InvalidScenario(
                "at least one party is required".into(),
            ));
        }
        for (i, p) in parties.iter().enumerate() {
            if p.is_empty() {
                return Err(Error::InvalidScenario(format!(
                    "party {} has no settings",
                    i + 1
                )));
            }
            if let Some(j) = p.iter().position(|&k| k < 2) {
                return Err(Error::InvalidScenario(format!(
                    "setting {} of party {} has fewer than two outcomes",
                    j + 1,
                    i + 1
                )));
            }
        }
        Ok(Scenario { parties })
    }

    /// Homogeneous scenario with `n` parties, `m` settings and `k` outcomes.
    pub fn homogeneous(n: usize, m: usize, k: usize) -> Result<Self> {
        Scenario::new(vec![vec![k; m]; n])
    }

    pub fn parties(&self) -> &[Vec<usize>] {
        &self.parties
    }

    pub fn num_parties(&self) -> usize {
        self.parties.len()
    }

    pub fn party(&self, i: usize) -> &[usize] {
        &self.parties[i]
    }

    /// Number of `(a, x)` pairs of party `i`.
    pub fn party_size(&self, i: usize) -> usize {
        self.parties[i].iter().sum()
    }

    pub fn party_sizes(&self) -> Vec<usize> {
        (0..self.parties.len())
            .map(|i| self.party_size(i))
            .collect()
    }

    /// Local index of the first outcome of setting `x` (zero-based) of party `i`.
    pub fn setting_offset(&self, i: usize, x: usize) -> usize {
        self.parties[i][..x].iter().sum()
    }

    /// Decodes a local index of party `i` into zero-based `(a, x)`.
    pub fn local_pair(&self, i: usize, mut local: usize) -> (usize, usize) {
        for (x, &k) in self.parties[i].iter().enumerate() {
            if local < k {
                return (local, x);
            }
            local -= k;
        }
        panic!("local index out of range for party {i}");
    }

    /// Strides of the party-major layout (party 1 fastest).
    pub fn strides(&self) -> Vec<usize> {
        let mut s = Vec::with_capacity(self.parties.len());
        let mut acc = 1;
        for i in 0..self.parties.len() {
            s.push(acc);
            acc *= self.party_size(i);
        }
        s
    }

    /// Splits a zero-based global position into per-party local indices.
    pub fn split_position(&self, mut pos: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.parties.len());
        for i in 0..self.parties.len() {
            let s = self.party_size(i);
            out.push(pos % s);
            pos /= s;
        }
        out
    }

    pub fn join_position(&self, locals: &[usize]) -> usize {
        let mut pos = 0;
        for i in (0..self.parties.len()).rev() {
            pos = pos * self.party_size(i) + locals[i];
        }
        pos
    }

    /// D = Π_i Σ_j k_ij.
    pub fn full_dimension(&self) -> usize {
        self.parties
            .iter()
            .map(|p| p.iter().sum::<usize>())
            .product()
    }

    /// Dimension of the no-signalling affine subspace.
    pub fn ns_dimension(&self) -> usize {
        self.parties
            .iter()
            .map(|p| 1 + p.iter().map(|k| k - 1).sum::<usize>())
            .product::<usize>()
            - 1
    }

    /// Number of deterministic local strategies, Π k_ij.
    pub fn strategy_count(&self) -> BigUint {
        self.parties
            .iter()
            .flatten()
            .fold(BigUint::from(1u32), |acc, &k| acc * k)
    }

    pub fn sub_scenario(&self, parties: &[usize]) -> Scenario {
        Scenario {
            parties: parties.iter().map(|&i| self.parties[i].clone()).collect(),
        }
    }

    pub fn concat(&self, other: &Scenario) -> Scenario {
        let mut parties = self.parties.clone();
        parties.extend(other.parties.iter().cloned());
        Scenario { parties }
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical().0 == *self
    }

    /// Canonical ordering: settings by nonincreasing outcome count, parties
    /// lexicographically larger-first. Ties keep their original order.
    pub fn canonical(&self) -> (Scenario, ReorderMap) {
        let mut setting_orders = Vec::with_capacity(self.parties.len());
        let mut sorted_parties = Vec::with_capacity(self.parties.len());
        for p in &self.parties {
            let mut order: Vec<usize> = (0..p.len()).collect();
            order.sort_by(|&a, &b| p[b].cmp(&p[a]));
            sorted_parties.push(order.iter().map(|&j| p[j]).collect::<Vec<_>>());
            setting_orders.push(order);
        }
        let mut party_order: Vec<usize> = (0..self.parties.len()).collect();
        party_order.sort_by(|&a, &b| padded_cmp(&sorted_parties[b], &sorted_parties[a]));

        let mut map = ReorderMap {
            parties: vec![0; self.parties.len()],
            settings: Vec::with_capacity(self.parties.len()),
        };
        for (new, &old) in party_order.iter().enumerate() {
            map.parties[old] = new;
        }
        for order in &setting_orders {
            let mut inv = vec![0; order.len()];
            for (new, &old) in order.iter().enumerate() {
                inv[old] = new;
            }
            map.settings.push(inv);
        }
        let parties = party_order
            .iter()
            .map(|&i| sorted_parties[i].clone())
            .collect();
        (Scenario { parties }, map)
    }

    /// Short form: `(n,m,k)` when homogeneous, otherwise the bracketed list.
    pub fn short_form(&self) -> String {
        let k = self.parties[0][0];
        let m = self.parties[0].len();
        if self
            .parties
            .iter()
            .all(|p| p.len() == m && p.iter().all(|&x| x == k))
        {
            format!("({},{},{})", self.parties.len(), m, k)
        } else {
            self.to_string()
        }
    }
}

fn padded_cmp(a: &[usize], b: &[usize]) -> Ordering {
    let n = a.len().max(b.len());
    for j in 0..n {
        let x = a.get(j).copied().unwrap_or(0);
        let y = b.get(j).copied().unwrap_or(0);
        match x.cmp(&y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

impl ReorderMap {
    pub fn identity(s: &Scenario) -> Self {
        ReorderMap {
            parties: (0..s.num_parties()).collect(),
            settings: s.parties().iter().map(|p| (0..p.len()).collect()).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.parties.iter().enumerate().all(|(i, &p)| i == p)
            && self
                .settings
                .iter()
                .all(|s| s.iter().enumerate().all(|(j, &x)| j == x))
    }

    /// Scenario obtained by applying the map to `from`.
    pub fn target(&self, from: &Scenario) -> Scenario {
        let n = from.num_parties();
        let mut parties = vec![Vec::new(); n];
        for i in 0..n {
            let p = from.party(i);
            let mut q = vec![0; p.len()];
            for (j, &k) in p.iter().enumerate() {
                q[self.settings[i][j]] = k;
            }
            parties[self.parties[i]] = q;
        }
        Scenario { parties }
    }

    /// Old-to-new map on zero-based coefficient positions of `from`.
    pub fn position_map(&self, from: &Scenario) -> Vec<usize> {
        let to = self.target(from);
        let n = from.num_parties();
        let local_maps: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let ni = self.parties[i];
                (0..from.party_size(i))
                    .map(|l| {
                        let (a, x) = from.local_pair(i, l);
                        to.setting_offset(ni, self.settings[i][x]) + a
                    })
                    .collect()
            })
            .collect();
        let mut out = Vec::with_capacity(from.full_dimension());
        let mut locals = vec![0; n];
        for pos in 0..from.full_dimension() {
            let old = from.split_position(pos);
            for i in 0..n {
                locals[self.parties[i]] = local_maps[i][old[i]];
            }
            out.push(to.join_position(&locals));
        }
        out
    }

    /// Inverse map, as a map on the target scenario.
    pub fn inverse(&self) -> ReorderMap {
        let n = self.parties.len();
        let mut parties = vec![0; n];
        let mut settings = vec![Vec::new(); n];
        for i in 0..n {
            parties[self.parties[i]] = i;
            let mut inv = vec![0; self.settings[i].len()];
            for (j, &x) in self.settings[i].iter().enumerate() {
                inv[x] = j;
            }
            settings[self.parties[i]] = inv;
        }
        ReorderMap { parties, settings }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, p) in self.parties.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "(")?;
            for (j, k) in p.iter().enumerate() {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{k}")?;
            }
            write!(f, ")")?;
        }
        write!(f, "]")
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = |msg: &str| Error::InvalidScenario(format!("{msg} in '{s}'"));
        let num = |x: &str| -> Result<usize> {
            x.trim()
                .parse::<usize>()
                .map_err(|_| bad(&format!("bad integer '{}'", x.trim())))
        };
        if let Some(rest) = t.strip_prefix('[') {
            let body = rest.strip_suffix(']').ok_or_else(|| bad("missing ']'"))?;
            let mut parties = Vec::new();
            let mut rest = body.trim();
            while !rest.is_empty() {
                let inner = rest.strip_prefix('(').ok_or_else(|| bad("expected '('"))?;
                let close = inner.find(')').ok_or_else(|| bad("missing ')'"))?;
                let party = inner[..close]
                    .split_whitespace()
                    .map(num)
                    .collect::<Result<Vec<_>>>()?;
                parties.push(party);
                rest = inner[close + 1..].trim_start();
            }
            Scenario::new(parties)
        } else if let Some(rest) = t.strip_prefix('(') {
            let body = rest.strip_suffix(')').ok_or_else(|| bad("missing ')'"))?;
            let parts: Vec<&str> = body.split(',').collect();
            if parts.len() != 3 {
                return Err(bad("expected (n,m,k)"));
            }
            Scenario::homogeneous(num(parts[0])?, num(parts[1])?, num(parts[2])?)
        } else {
            Err(bad("expected '(n,m,k)' or '[(k11 k12 ...) ...]'"))
        }
    }
}

impl Serialize for Scenario {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Scenario {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
