mod common;

use std::collections::{BTreeMap, BTreeSet};

use bellcanon::canonical::{compose_facets, Canonicalizer};
use bellcanon::compendium::{
    canonical_key, match_expression, probabilities_to_collins_gisin, InterchangeDocument, Metadata,
    Notation, Record, Store, StoreOutcome,
};
use bellcanon::expr::{int, ratio, BellExpression, OrientedExpression};
use bellcanon::fixtures;
use bellcanon::nsbasis::project_expression;
use bellcanon::symmgroup::{act, RelabelingGroup};
use bellcanon::Error;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CHSH_DOC: &str = r#"
scenario: "[(2 2) (2 2)]"
notation: probabilities
coefficients: [1, -1, 1, -1, -1, 1, -1, 1, -1, 1, 1, -1, 1, -1, -1, 1]
bounds:
  local: 2/1
  quantum: { value: "2", provenance: "placeholder" }
metadata:
  names: [CHSH]
  references: ["Phys. Rev. Lett. 23, 880"]
  notes: two parties, two settings, two outcomes
"#;

fn chsh_record(c: &Canonicalizer) -> Record {
    let oe = OrientedExpression::new(fixtures::chsh()).with_bound("local", int(2));
    let meta = Metadata {
        names: vec!["CHSH".into()],
        ..Metadata::default()
    };
    Record::canonicalize(c, &oe, BTreeMap::new(), meta).unwrap()
}

fn positivity_record(c: &Canonicalizer) -> Record {
    let oe = OrientedExpression::new(fixtures::positivity_single(1)).with_bound("local", int(0));
    let meta = Metadata {
        names: vec!["positivity".into()],
        ..Metadata::default()
    };
    Record::canonicalize(c, &oe, BTreeMap::new(), meta).unwrap()
}

#[test]
fn chsh_document_round_trips() {
    let doc = InterchangeDocument::parse(CHSH_DOC).unwrap();
    assert_eq!(doc.expression().unwrap(), fixtures::chsh());
    assert_eq!(doc.bounds["local"].value, int(2));
    assert_eq!(
        doc.bounds["quantum"].provenance.as_deref(),
        Some("placeholder")
    );
    assert_eq!(doc.metadata.names, vec!["CHSH".to_string()]);
    let text = doc.to_text();
    let again = InterchangeDocument::parse(&text).unwrap();
    assert_eq!(again, doc);
    assert_eq!(again.to_text(), text);
}

#[test]
fn format_errors_are_precise() {
    let empty = "scenario: \"(2,2,2)\"\ncoefficients: []\n";
    match InterchangeDocument::parse(empty) {
        Err(Error::Format(m)) => assert!(m.contains("length mismatch"), "{m}"),
        other => panic!("unexpected {other:?}"),
    }
    let bad_syntax = "scenario: \"(2,2,2)\"\ncoefficients: [1, 2\n";
    match InterchangeDocument::parse(bad_syntax) {
        Err(Error::Syntax { line, .. }) => assert!(line >= 2),
        other => panic!("unexpected {other:?}"),
    }
    let notation = "scenario: \"(2,2,2)\"\nnotation: cg\ncoefficients: []\n";
    match InterchangeDocument::parse(notation) {
        Err(Error::Format(m)) => assert!(m.contains("unknown notation 'cg'"), "{m}"),
        other => panic!("unexpected {other:?}"),
    }
    let float = "scenario: \"[(2)]\"\ncoefficients: [0.5, 1]\n";
    match InterchangeDocument::parse(float) {
        Err(Error::Format(m)) => assert!(
            m.contains("coefficient 1") && m.contains("not rational"),
            "{m}"
        ),
        other => panic!("unexpected {other:?}"),
    }
    let word = "scenario: \"[(2)]\"\ncoefficients: [a, 1]\n";
    assert!(matches!(
        InterchangeDocument::parse(word),
        Err(Error::Format(_))
    ));
    let unknown = "scenario: \"[(2)]\"\ncoefficients: [1, 1]\nextra: 1\n";
    assert!(matches!(
        InterchangeDocument::parse(unknown),
        Err(Error::Format(_))
    ));
}

#[test]
fn fractions_and_big_integers_survive() {
    let text = "scenario: \"[(3)]\"\ncoefficients: [\"1/2\", \"-4/6\", \"123456789012345678901234567890\"]\nbounds:\n  local: \"2/1\"\n";
    let doc = InterchangeDocument::parse(text).unwrap();
    assert_eq!(doc.coefficients[0], ratio(1, 2));
    assert_eq!(doc.coefficients[1], ratio(-2, 3));
    assert_eq!(doc.bounds["local"].value, int(2));
    assert_eq!(InterchangeDocument::parse(&doc.to_text()).unwrap(), doc);
}

#[test]
fn collins_gisin_ch_is_chsh() {
    let text = "scenario: \"(2,2,2)\"\nnotation: collins-gisin\ncoefficients: [0, -1, 0, -1, 1, 1, 0, 1, -1]\nbounds:\n  local: 0\n";
    let doc = InterchangeDocument::parse(text).unwrap();
    let c = Canonicalizer::new();
    let rec = Record::from_document(&c, &doc);
    assert!(matches!(rec, Err(Error::NotCanonical(_))));
    let rec = Record::canonicalize(
        &c,
        &doc.oriented().unwrap(),
        BTreeMap::new(),
        Metadata::default(),
    )
    .unwrap();
    assert_eq!(rec, chsh_record(&c).with_names_cleared());
    assert_eq!(rec.expression.bound("local"), Some(&int(2)));
}

trait ClearNames {
    fn with_names_cleared(self) -> Self;
}

impl ClearNames for Record {
    fn with_names_cleared(mut self) -> Self {
        self.metadata = Metadata::default();
        self
    }
}

#[test]
fn collins_gisin_conversion_is_no_signalling_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for s in small_scenarios() {
        let e = random_rationals(&s, &mut rng);
        let g = probabilities_to_collins_gisin(&e);
        assert_eq!(g.len(), s.ns_dimension() + 1);
        let back = bellcanon::compendium::collins_gisin_to_probabilities(&s, &g).unwrap();
        let (p, q) = (project_expression(&e), project_expression(&back));
        assert_eq!((p.projected, p.shift), (q.projected, q.shift));
        assert_eq!(probabilities_to_collins_gisin(&back), g);
        let doc = InterchangeDocument::from_oriented(
            &OrientedExpression::new(e),
            Notation::CollinsGisin,
            &BTreeMap::new(),
            Metadata::default(),
        );
        assert_eq!(InterchangeDocument::parse(&doc.to_text()).unwrap(), doc);
    }
}

#[test]
fn key_is_invariant_across_representations() {
    let c = Canonicalizer::new();
    let chsh = fixtures::chsh();
    let g = RelabelingGroup::new(chsh.scenario()).unwrap();
    let orbit: BTreeSet<Vec<_>> = g
        .chain()
        .unwrap()
        .elements()
        .iter()
        .map(|p| act(p, &chsh).unwrap().into_coefficients())
        .collect();
    assert_eq!(orbit.len(), 8);
    let mut keys = BTreeSet::new();
    let key_of = |e: &BellExpression| {
        let tree = c.decompose(&OrientedExpression::new(e.clone())).unwrap();
        canonical_key(&tree.leaves()[0].canonical.expression).unwrap()
    };
    for coeffs in &orbit {
        keys.insert(key_of(
            &BellExpression::new(chsh.scenario().clone(), coeffs.clone()).unwrap(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let reps: Vec<_> = orbit.iter().collect();
    for _ in 0..20 {
        let base = BellExpression::new(chsh.scenario().clone(), reps[rng.gen_range(0..8)].clone())
            .unwrap();
        let scale = ratio(rng.gen_range(1..9), rng.gen_range(1..9));
        let e = base
            .scale(&scale)
            .add(&random_null_shift(chsh.scenario(), &mut rng))
            .unwrap();
        keys.insert(key_of(&e));
    }
    keys.insert(key_of(&fixtures::ch()));
    assert_eq!(keys.len(), 1);
}

#[test]
fn store_lookup_and_find() {
    let dir = tempfile::tempdir().unwrap();
    let c = Canonicalizer::new();
    let mut store = Store::open(dir.path()).unwrap();
    let rec = chsh_record(&c);
    assert_eq!(
        store.store(&c, &rec, false).unwrap(),
        StoreOutcome::Inserted
    );
    assert_eq!(
        store.store(&c, &rec, false).unwrap(),
        StoreOutcome::Unchanged
    );
    assert_eq!(store.lookup(&rec.key).unwrap(), Some(rec.clone()));
    assert_eq!(store.lookup(&"0".repeat(64)).unwrap(), None);

    let ch = OrientedExpression::new(fixtures::ch()).with_bound("local", int(0));
    assert_eq!(
        store.find_by_expression(&c, &ch).unwrap(),
        Some(rec.clone())
    );
    let g = RelabelingGroup::new(fixtures::chsh().scenario()).unwrap();
    let (min, _) = g.lex_min(&fixtures::chsh()).unwrap();
    let eighth = g.unrank(&min, &8u32.into()).unwrap();
    assert_eq!(
        store
            .find_by_expression(&c, &OrientedExpression::new(eighth))
            .unwrap(),
        Some(rec.clone())
    );

    let raw = Record {
        key: canonical_key(&fixtures::chsh()).unwrap(),
        expression: OrientedExpression::new(fixtures::chsh()),
        provenance: BTreeMap::new(),
        metadata: Metadata::default(),
    };
    assert!(matches!(
        store.store(&c, &raw, false),
        Err(Error::NotCanonical(_))
    ));

    let mut other = rec.clone();
    other.metadata.names = vec!["Clauser-Horne-Shimony-Holt".into()];
    assert_eq!(
        store.store(&c, &other, false),
        Err(Error::Conflict(rec.key.clone()))
    );
    assert_eq!(store.store(&c, &other, true).unwrap(), StoreOutcome::Merged);
    let merged = store.lookup(&rec.key).unwrap().unwrap();
    assert_eq!(merged.metadata.names.len(), 2);

    let mut clash = rec.clone();
    clash.expression = clash.expression.with_bound("local", int(3));
    assert!(matches!(
        store.store(&c, &clash, true),
        Err(Error::Conflict(_))
    ));

    store.store(&c, &positivity_record(&c), false).unwrap();
    let index = store.index().clone();
    assert_eq!(index.len(), 2);
    let mut reopened = Store::open(dir.path()).unwrap();
    assert_eq!(reopened.index(), &index);
    std::fs::remove_file(dir.path().join("index.yaml")).unwrap();
    let mut rebuilt = Store::open(dir.path()).unwrap();
    assert_eq!(rebuilt.index(), &index);
    assert_eq!(rebuilt.rebuild_index().unwrap(), 2);
    assert_eq!(reopened.rebuild_index().unwrap(), 2);
    assert!(!dir.path().join(".lock").exists());
}

#[test]
fn held_lock_blocks_writers() {
    let dir = tempfile::tempdir().unwrap();
    let c = Canonicalizer::new();
    let mut store = Store::open(dir.path()).unwrap();
    std::fs::write(dir.path().join(".lock"), "other").unwrap();
    assert!(matches!(
        store.store(&c, &chsh_record(&c), false),
        Err(Error::Store(_))
    ));
    std::fs::remove_file(dir.path().join(".lock")).unwrap();
    assert!(store.store(&c, &chsh_record(&c), false).is_ok());
}

#[test]
fn tampered_record_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let c = Canonicalizer::new();
    let mut store = Store::open(dir.path()).unwrap();
    let rec = chsh_record(&c);
    store.store(&c, &rec, false).unwrap();
    let path = dir
        .path()
        .join("records")
        .join(&rec.key[..2])
        .join(format!("{}.yaml", rec.key));
    let text = std::fs::read_to_string(&path)
        .unwrap()
        .replacen("- -1", "- -2", 1);
    std::fs::write(&path, text).unwrap();
    assert!(matches!(store.lookup(&rec.key), Err(Error::Store(_))));
}

#[test]
fn matching_annotates_leaves() {
    let dir = tempfile::tempdir().unwrap();
    let c = Canonicalizer::new();
    let mut store = Store::open(dir.path()).unwrap();
    store.store(&c, &chsh_record(&c), false).unwrap();
    store.store(&c, &positivity_record(&c), false).unwrap();

    let sliwa = compose_facets(
        &fixtures::positivity_single(2),
        &int(0),
        &fixtures::chsh(),
        &int(2),
    );
    let report = match_expression(&c, &store, &OrientedExpression::new(sliwa)).unwrap();
    assert_eq!(report.leaves.len(), 2);
    assert_eq!(report.matched(), 2);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let unknown = random_integers(&sc("(2,2,2)"), &mut rng, 5);
    let report = match_expression(&c, &store, &OrientedExpression::new(unknown.clone())).unwrap();
    assert_eq!((report.leaves.len(), report.matched()), (1, 0));

    let mixed = fixtures::chsh().tensor(&random_integers(&sc("[(3 2)]"), &mut rng, 5));
    let report = match_expression(&c, &store, &OrientedExpression::new(mixed)).unwrap();
    assert_eq!((report.leaves.len(), report.matched()), (2, 1));
}
