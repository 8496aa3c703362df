//! Canonical decomposition of Bell expressions.
//!
//! An expression is projected, stripped of superfluous structure, scaled to
//! coprime integers, split into tensor factors while it is composite, and
//! each remaining factor is replaced by the minimal element of its orbit.
//! Splitting happens before minimization; factors are minimized separately.

mod bounds;
mod reduce;
mod split;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_bigint::BigUint;
use num_traits::{One, Zero};

pub use bounds::{
    compose_bounds, compose_facets, facet_check, local_bound, local_lower_bound, NamedBounds,
    DEFAULT_STRATEGY_CAP,
};
pub use reduce::{remove_superfluous, ReductionStep, StructureReport};

use crate::error::{Error, Result};
use crate::expr::{BellExpression, Bound, OrientedExpression, Rational};
use crate::nsbasis::{
    from_symmetric, normalize_integer, project_expression, to_symmetric, unit_constant,
    SymmetricTensor,
};
use crate::scenario::Scenario;
use crate::symmgroup::{act, Permutation, RelabelingGroup};

/// A non-composite factor in canonical form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leaf {
    /// Lex-minimal, integer, coprime, projected; carries bounds when the
    /// whole input reduced to this single leaf.
    pub canonical: OrientedExpression,
    /// `act(witness, e) = canonical` for the factor `e` before minimization.
    pub witness: Permutation,
    /// One-based position of that factor in the sorted orbit.
    pub rank: BigUint,
}

/// `κ + ⊗ children`, where child `i` acts on the parties `partition[i]` of
/// the reduced scenario.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Product {
    pub kappa: Rational,
    pub children: Vec<DecompositionTree>,
    pub partition: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Leaf(Leaf),
    Product(Product),
}

/// One node of a decomposition. Its value is
/// `shift·μ⊗…⊗μ + residual + removed.lift(sign · inner / scale)`, where
/// `inner` is the leaf's relabeled canonical expression or the product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecompositionTree {
    pub scenario: Scenario,
    pub sign: i8,
    pub scale: Rational,
    pub shift: Rational,
    /// Part vanishing on every no-signalling point; zero below the root.
    pub residual: BellExpression,
    pub removed: StructureReport,
    pub node: Node,
}

impl DecompositionTree {
    /// Scenario left after superfluous structure is removed.
    pub fn reduced_scenario(&self) -> Scenario {
        match &self.node {
            Node::Leaf(l) => l.canonical.expression.scenario().clone(),
            Node::Product(p) => product_scenario(p),
        }
    }

    /// Integer expression the node's sign and scale apply to.
    pub fn inner(&self) -> BellExpression {
        match &self.node {
            Node::Leaf(l) => act(&l.witness.inverse(), &l.canonical.expression)
                .expect("witness matches scenario"),
            Node::Product(p) => {
                let s = product_scenario(p);
                let values: Vec<BellExpression> =
                    p.children.iter().map(|c| c.recompose()).collect();
                let mut out = place(&s, &p.partition, &values);
                out = out
                    .add(&unit_constant(&s).scale(&p.kappa))
                    .expect("same scenario");
                out
            }
        }
    }

    /// Rebuilds the expression the node stands for, exactly.
    pub fn recompose(&self) -> BellExpression {
        let factor = Rational::from_integer(self.sign.into()) / &self.scale;
        let lifted = self.removed.lift(&self.inner().scale(&factor));
        lifted
            .add(&unit_constant(&self.scenario).scale(&self.shift))
            .and_then(|e| e.add(&self.residual))
            .expect("same scenario")
    }

    /// Leaves in depth-first order.
    pub fn leaves(&self) -> Vec<&Leaf> {
        match &self.node {
            Node::Leaf(l) => vec![l],
            Node::Product(p) => p.children.iter().flat_map(|c| c.leaves()).collect(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.node, Node::Leaf(_))
    }
}

fn product_scenario(p: &Product) -> Scenario {
    let n: usize = p.partition.iter().map(Vec::len).sum();
    let mut parties = vec![Vec::new(); n];
    for (block, child) in p.partition.iter().zip(&p.children) {
        for (j, &i) in block.iter().enumerate() {
            parties[i] = child.scenario.party(j).to_vec();
        }
    }
    Scenario::new(parties).expect("children are valid")
}

/// Tensor product of `values`, each placed on its block of parties.
fn place(s: &Scenario, partition: &[Vec<usize>], values: &[BellExpression]) -> BellExpression {
    let coefficients = (0..s.full_dimension())
        .map(|pos| {
            let locals = s.split_position(pos);
            partition
                .iter()
                .zip(values)
                .fold(Rational::one(), |acc, (block, v)| {
                    let l: Vec<usize> = block.iter().map(|&i| locals[i]).collect();
                    acc * &v.coefficients()[v.scenario().join_position(&l)]
                })
        })
        .collect();
    BellExpression::new(s.clone(), coefficients).expect("dimension")
}

/// Result of [`split_composite`]: `e` agrees with
/// `kappa·μ⊗…⊗μ + scale · factor_a ⊗ factor_b` on every no-signalling point,
/// with the factors placed on `parties_a` and `parties_b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub kappa: Rational,
    pub scale: Rational,
    pub factor_a: BellExpression,
    pub factor_b: BellExpression,
    pub parties_a: Vec<usize>,
    pub parties_b: Vec<usize>,
}

/// Caches relabeling groups per scenario.
#[derive(Debug, Default)]
pub struct Canonicalizer {
    groups: Mutex<HashMap<Scenario, Arc<RelabelingGroup>>>,
}

impl Canonicalizer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn group(&self, s: &Scenario) -> Result<Arc<RelabelingGroup>> {
        let mut map = self.groups.lock().expect("group cache poisoned");
        if let Some(g) = map.get(s) {
            return Ok(g.clone());
        }
        let g = Arc::new(RelabelingGroup::new(s)?);
        map.insert(s.clone(), g.clone());
        Ok(g)
    }

    /// Lex-minimal form of `e` after moving it to its canonical scenario.
    fn orbit_key(&self, e: &BellExpression) -> Result<BellExpression> {
        let (target, map) = e.scenario().canonical();
        let e = if &target == e.scenario() {
            e.clone()
        } else {
            e.reorder(&map)
        };
        Ok(self.group(e.scenario())?.lex_min(&e)?.0)
    }

    /// `σ` in `{1, −1}` orienting `e` so its orbit minimum is below that of
    /// `−e`; ties keep `e`.
    fn orientation(&self, e: &BellExpression) -> Result<i8> {
        let pos = self.orbit_key(e)?;
        let neg = self.orbit_key(&e.negate())?;
        Ok(if neg.coefficients() < pos.coefficients() {
            -1
        } else {
            1
        })
    }

    /// Full decomposition of an oriented expression.
    pub fn decompose(&self, oe: &OrientedExpression) -> Result<DecompositionTree> {
        let e = &oe.expression;
        let p = project_expression(e);
        if p.projected.is_zero() {
            return Err(Error::Trivial);
        }
        let mut tree = self.node(&p.projected, 1)?;
        tree.shift = p.shift;
        tree.residual = p.residual;
        let offset = &tree.shift + tree.removed.value_offset();
        let scale = tree.scale.clone();
        if let Node::Leaf(leaf) = &mut tree.node {
            for (set, b) in &oe.bounds {
                leaf.canonical.bounds.insert(
                    set.clone(),
                    Bound {
                        value: (&b.value - &offset) * &scale,
                        conditional: b.conditional,
                    },
                );
            }
        }
        let check = tree.recompose();
        if &check != e {
            return Err(Error::Internal("recomposition differs from input".into()));
        }
        Ok(tree)
    }

    /// Node for a nonzero projected expression `x`, read as
    /// `sign · inner / scale` after reduction.
    fn node(&self, x: &BellExpression, sign: i8) -> Result<DecompositionTree> {
        let (reduced, removed) = remove_superfluous(x);
        let (int, _, scale) = normalize_integer(&reduced, &Rational::zero())?;
        let int = if sign < 0 { int.negate() } else { int };
        let node = match split::find_product(&to_symmetric(&int)) {
            Some(ps) => Node::Product(self.product(int.scenario(), ps)?),
            None => Node::Leaf(self.leaf(&int)?),
        };
        Ok(DecompositionTree {
            scenario: x.scenario().clone(),
            sign,
            scale,
            shift: Rational::zero(),
            residual: BellExpression::zero(x.scenario().clone()),
            removed,
            node,
        })
    }

    fn leaf(&self, e: &BellExpression) -> Result<Leaf> {
        let g = self.group(e.scenario())?;
        let (canonical, witness) = g.lex_min(e)?;
        let rank = g.rank_in_orbit(&canonical, e)?;
        Ok(Leaf {
            canonical: OrientedExpression::new(canonical),
            witness,
            rank,
        })
    }

    fn product(&self, s: &Scenario, ps: split::ProductSplit) -> Result<Product> {
        let mut children = Vec::new();
        for (block, f) in ps.factors {
            let t = f.constant().clone();
            let mut data = f.into_data();
            data[0] = Rational::zero();
            let body = from_symmetric(&SymmetricTensor::new(s.sub_scenario(&block), data)?);
            let sigma = self.orientation(&body)?;
            let mut child = self.node(&body, sigma)?;
            child.shift = t;
            let key = self.orbit_key(&child.inner())?;
            children.push((key, block, child));
        }
        children.sort_by(|a, b| {
            (a.0.scenario(), a.0.coefficients(), &a.1).cmp(&(
                b.0.scenario(),
                b.0.coefficients(),
                &b.1,
            ))
        });
        let (partition, children) = children.into_iter().map(|(_, b, c)| (b, c)).unzip();
        Ok(Product {
            kappa: ps.kappa,
            children,
            partition,
        })
    }

    /// Splits `e` once across the first working bipartition, if composite.
    pub fn split_composite(&self, e: &BellExpression) -> Result<Option<Split>> {
        let p = project_expression(e);
        let t = to_symmetric(&p.projected);
        let Some((kappa, pa, a, pb, b)) = split::find_bipartition(&t) else {
            return Ok(None);
        };
        let mut scale = Rational::one();
        let mut factor = |tensor: SymmetricTensor| -> Result<BellExpression> {
            let f = from_symmetric(&tensor);
            let (n, _, sc) = normalize_integer(&f, &Rational::zero())?;
            let mut body = tensor.clone().into_data();
            body[0] = Rational::zero();
            let body = from_symmetric(&SymmetricTensor::new(tensor.scenario().clone(), body)?);
            let sigma = self.orientation(&body)?;
            let sign = Rational::from_integer(sigma.into());
            scale = &scale / (&sc * &sign);
            Ok(n.scale(&sign))
        };
        let factor_a = factor(a)?;
        let factor_b = factor(b)?;
        Ok(Some(Split {
            kappa: kappa + p.shift,
            scale,
            factor_a,
            factor_b,
            parties_a: pa,
            parties_b: pb,
        }))
    }
}

/// Decomposes with a fresh group cache.
pub fn decompose(oe: &OrientedExpression) -> Result<DecompositionTree> {
    Canonicalizer::new().decompose(oe)
}

pub fn split_composite(e: &BellExpression) -> Result<Option<Split>> {
    Canonicalizer::new().split_composite(e)
}

/// Recomposes a tree; equal to the decomposed input.
pub fn recompose(tree: &DecompositionTree) -> BellExpression {
    tree.recompose()
}

/// Places `a` on `parties_a` and `b` on the remaining parties.
pub fn tensor_on(a: &BellExpression, parties_a: &[usize], b: &BellExpression) -> BellExpression {
    let n = a.scenario().num_parties() + b.scenario().num_parties();
    let parties_b: Vec<usize> = (0..n).filter(|i| !parties_a.contains(i)).collect();
    let mut parties = vec![Vec::new(); n];
    for (j, &i) in parties_a.iter().enumerate() {
        parties[i] = a.scenario().party(j).to_vec();
    }
    for (j, &i) in parties_b.iter().enumerate() {
        parties[i] = b.scenario().party(j).to_vec();
    }
    let s = Scenario::new(parties).expect("valid parts");
    place(
        &s,
        &[parties_a.to_vec(), parties_b],
        &[a.clone(), b.clone()],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{int, ratio};
    use crate::fixtures;

    fn sc(s: &str) -> Scenario {
        s.parse().unwrap()
    }

    fn projected(e: &BellExpression) -> BellExpression {
        project_expression(e).projected
    }

    #[test]
    fn single_party_lifted_positivity_reduces() {
        let e = BellExpression::from_integers(sc("[(2 2)]"), &[3, -1, 1, 1]).unwrap();
        let (r, report) = remove_superfluous(&projected(&e));
        assert_eq!(r.scenario(), &sc("[(2)]"));
        assert_eq!(r.coefficients(), &[int(2), int(-2)]);
        assert_eq!(report.removals(), 1);
        assert_eq!(report.lift(&r), projected(&e));
    }

    #[test]
    fn chsh_has_nothing_superfluous() {
        let (r, report) = remove_superfluous(&fixtures::chsh());
        assert!(report.is_empty());
        assert_eq!(r, fixtures::chsh());
    }

    #[test]
    fn constant_party_is_removed() {
        let e = fixtures::chsh().tensor(&fixtures::constant_party(&[3, 2]));
        let p = projected(&e);
        let (r, report) = remove_superfluous(&p);
        // The removed party sums to one per setting, two settings in all.
        assert_eq!(r, fixtures::chsh().scale(&int(2)));
        assert_eq!(report.removals(), 1);
        assert_eq!(report.lift(&r), p);
    }

    #[test]
    fn duplicate_outcome_is_merged_and_lifted_back() {
        // CHSH with Alice's second outcome of setting 1 split in two.
        let s = sc("[(3 2)(2 2)]");
        let e = BellExpression::from_fn(s, |t| {
            let (a, x) = t.pairs[0];
            let (b, y) = t.pairs[1];
            let a = if x == 1 && a == 3 { 2 } else { a };
            let v = if (a + b + x * (y + 1)) % 2 == 0 {
                1
            } else {
                -1
            };
            int(v)
        });
        let p = projected(&e);
        let (r, report) = remove_superfluous(&p);
        assert_eq!(r.scenario(), &sc("(2,2,2)"));
        assert_eq!(r, projected(&fixtures::chsh()));
        assert_eq!(report.lift(&r), p);
    }

    #[test]
    fn split_examples() {
        assert_eq!(split_composite(&fixtures::chsh()).unwrap(), None);

        let s = sc("(2,2,2)");
        let e = BellExpression::from_fn(s, |t| {
            let (a, x) = t.pairs[0];
            let (b, y) = t.pairs[1];
            let mut v = 0;
            if a == 1 && x == 1 && y == 1 {
                v += 1;
            }
            if b == 1 && y == 1 && x == 1 {
                v += 1;
            }
            if (a, b, x, y) == (1, 1, 1, 1) {
                v += 1;
            }
            int(v)
        });
        let split = split_composite(&e).unwrap().unwrap();
        assert_eq!(split.kappa, int(-1));
        let rebuilt = tensor_on(&split.factor_a, &split.parties_a, &split.factor_b)
            .scale(&split.scale)
            .add(&unit_constant(e.scenario()).scale(&split.kappa))
            .unwrap();
        assert_eq!(projected(&rebuilt), projected(&e));

        let cc = fixtures::chsh().tensor(&fixtures::chsh());
        let split = split_composite(&cc).unwrap().unwrap();
        assert_eq!(split.kappa, int(0));
        assert_eq!(split.parties_a, vec![0, 1]);
    }

    #[test]
    fn ch_decomposes_to_chsh() {
        let oe = OrientedExpression::new(fixtures::ch()).with_bound("local", int(0));
        let tree = decompose(&oe).unwrap();
        let Node::Leaf(leaf) = &tree.node else {
            panic!("expected a leaf")
        };
        let chsh = fixtures::chsh();
        let (min, _) = crate::symmgroup::lex_min(&chsh).unwrap();
        assert_eq!(leaf.canonical.expression, min);
        assert_eq!(leaf.canonical.bound("local"), Some(&int(2)));
        assert_eq!(tree.recompose(), fixtures::ch());
    }

    #[test]
    fn composition_decomposes_into_factors() {
        let pos = fixtures::positivity_single(2);
        let e = compose_facets(&pos, &int(0), &fixtures::chsh(), &int(2));
        let tree = decompose(&OrientedExpression::new(e.clone())).unwrap();
        let Node::Product(p) = &tree.node else {
            panic!("expected a product")
        };
        assert_eq!(p.children.len(), 2);
        let leaves = tree.leaves();
        let scen: Vec<String> = leaves
            .iter()
            .map(|l| l.canonical.expression.scenario().to_string())
            .collect();
        assert!(scen.contains(&"[(2)]".to_string()));
        assert!(scen.contains(&"[(2 2) (2 2)]".to_string()));
        assert_eq!(tree.recompose(), e);
    }

    #[test]
    fn bounds_examples() {
        let cap = DEFAULT_STRATEGY_CAP;
        assert_eq!(local_bound(&fixtures::chsh(), cap).unwrap(), int(2));
        assert_eq!(local_bound(&fixtures::ch(), cap).unwrap(), int(0));
        let cc = fixtures::chsh().tensor(&fixtures::chsh());
        assert_eq!(local_bound(&cc, cap).unwrap(), int(4));
        assert!(local_bound(&cc, 10).is_err());

        let chsh = NamedBounds::new("local", Some(int(-2)), Some(int(2)));
        let out = compose_bounds(&chsh, &chsh, &int(0)).unwrap();
        assert_eq!((out.lower, out.upper), (Some(int(-4)), Some(int(4))));
        let a = NamedBounds::new("local", Some(int(1)), Some(int(2)));
        let b = NamedBounds::new("local", Some(int(3)), Some(int(4)));
        let out = compose_bounds(&a, &b, &int(0)).unwrap();
        assert_eq!((out.lower, out.upper), (Some(int(3)), Some(int(8))));
        let out = compose_bounds(&a, &b, &int(5)).unwrap();
        assert_eq!((out.lower, out.upper), (Some(int(8)), Some(int(13))));
        let sv = NamedBounds::new("svetlichny", Some(int(1)), Some(int(2)));
        assert_eq!(
            compose_bounds(&sv, &sv, &int(0)),
            Err(Error::NotInheritable("svetlichny".into()))
        );
        let half = NamedBounds::new("local", None, Some(int(2)));
        assert!(matches!(
            compose_bounds(&half, &a, &int(0)),
            Err(Error::MissingBound(_))
        ));
        assert_eq!(
            local_bound(&fixtures::chsh().scale(&ratio(1, 3)), cap).unwrap(),
            ratio(2, 3)
        );
    }

    #[test]
    fn facet_examples() {
        let cap = DEFAULT_STRATEGY_CAP;
        assert!(facet_check(&fixtures::chsh(), &int(2), cap).unwrap());
        assert!(facet_check(&fixtures::positivity_222(), &int(0), cap).unwrap());
        assert!(matches!(
            facet_check(&fixtures::chsh(), &int(3), cap),
            Err(Error::NotTight { .. })
        ));
        // The sum of two distinct facets is valid but not a facet.
        let sum = fixtures::chsh()
            .add(&fixtures::positivity_222().scale(&int(4)))
            .unwrap();
        let b = local_bound(&sum, cap).unwrap();
        assert!(!facet_check(&sum, &b, cap).unwrap());
        let composed = compose_facets(
            &fixtures::chsh(),
            &int(2),
            &fixtures::positivity_single(2),
            &int(0),
        );
        assert_eq!(local_bound(&composed, cap).unwrap(), int(0));
        assert!(facet_check(&composed, &int(0), cap).unwrap());
    }
}
