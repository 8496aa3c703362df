//! Interchange documents, a content-addressed store of canonical oriented
//! expressions, and matching of decompositions against it.

mod format;
mod store;

use num_bigint::BigUint;

pub use format::{
    collins_gisin_labels, collins_gisin_to_probabilities, probabilities_to_collins_gisin,
    BoundEntry, InterchangeDocument, Metadata, Notation,
};
pub use store::{
    canonical_key, is_canonical, IndexEntry, Record, Store, StoreOutcome, DIGEST_ALGORITHM,
};

use crate::canonical::{Canonicalizer, DecompositionTree, Node};
use crate::error::Result;
use crate::expr::{BellExpression, OrientedExpression};
use crate::symmgroup::Permutation;

/// One leaf of a decomposition with its store record, if any.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafMatch {
    /// Child indices from the root to the leaf.
    pub path: Vec<usize>,
    pub key: String,
    pub canonical: BellExpression,
    pub witness: Permutation,
    pub rank: BigUint,
    pub record: Option<Record>,
}

#[derive(Clone, Debug)]
pub struct MatchReport {
    pub tree: DecompositionTree,
    pub leaves: Vec<LeafMatch>,
}

impl MatchReport {
    pub fn matched(&self) -> usize {
        self.leaves.iter().filter(|l| l.record.is_some()).count()
    }
}

/// Decomposes `oe` and looks every leaf up in `store`.
pub fn match_expression(
    c: &Canonicalizer,
    store: &Store,
    oe: &OrientedExpression,
) -> Result<MatchReport> {
    let tree = c.decompose(oe)?;
    let mut leaves = Vec::new();
    collect(store, &tree, &mut Vec::new(), &mut leaves)?;
    Ok(MatchReport { tree, leaves })
}

fn collect(
    store: &Store,
    t: &DecompositionTree,
    path: &mut Vec<usize>,
    out: &mut Vec<LeafMatch>,
) -> Result<()> {
    match &t.node {
        Node::Leaf(leaf) => {
            let key = canonical_key(&leaf.canonical.expression)?;
            out.push(LeafMatch {
                path: path.clone(),
                record: store.lookup(&key)?,
                key,
                canonical: leaf.canonical.expression.clone(),
                witness: leaf.witness.clone(),
                rank: leaf.rank.clone(),
            });
        }
        Node::Product(p) => {
            for (i, child) in p.children.iter().enumerate() {
                path.push(i);
                collect(store, child, path, out)?;
                path.pop();
            }
        }
    }
    Ok(())
}
