mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rashomon::buffer::LogicalClock;
use rashomon::kgstore::{parse_turtle, parse_turtle_with, serialize_turtle, write_turtle, PrefixMap};
use rashomon::scenario::{run_scenario, ScenarioFile};

#[test]
fn random_graphs_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7417);
    for i in 0..1000 {
        let prefixes = common::random_prefixes(&mut rng);
        let triples = common::random_triples(&mut rng, 50);
        let text = write_turtle(&prefixes, &triples);
        let doc = parse_turtle(&text).unwrap_or_else(|e| panic!("case {i}: {e}\n{text}"));
        assert_eq!(doc.triples, triples, "case {i}:\n{text}");
        assert_eq!(doc.prefixes, prefixes, "case {i}");
        // Serialization is a fixed point.
        assert_eq!(write_turtle(&doc.prefixes, &doc.triples), text, "case {i}");
    }
}

#[test]
fn fixture_graphs_round_trip() {
    for name in ["meridian.json", "meridian_rules.json"] {
        let scenario = ScenarioFile::load(common::fixture(name)).unwrap();
        let run = run_scenario(&scenario, Arc::new(LogicalClock::default()), None).unwrap();
        for agent in run.arbiter.agents() {
            let graph = agent.graph();
            assert!(!graph.abox().is_empty());
            let doc = parse_turtle(&serialize_turtle(graph)).unwrap();
            assert_eq!(&doc.triples, graph.abox(), "{name}/{}", agent.id());
            let tbox = graph.tbox().to_triples();
            let doc = parse_turtle(&write_turtle(graph.prefixes(), &tbox)).unwrap();
            assert_eq!(doc.triples, tbox, "{name}/{} tbox", agent.id());
        }
    }
}

#[test]
fn abbreviations_expand_to_the_same_graph() {
    let long = "@prefix ex: <http://example.org/ex#> .\n\
                ex:s ex:p ex:o .\nex:s ex:p ex:o2 .\nex:s ex:q \"x\" .\n\
                ex:s <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> ex:C .";
    let short = "@prefix ex: <http://example.org/ex#> .\nex:s a ex:C ; ex:p ex:o , ex:o2 ; ex:q \"x\" ;\n.";
    assert_eq!(
        parse_turtle(long).unwrap().triples,
        parse_turtle(short).unwrap().triples
    );
    let mut pre = PrefixMap::new();
    pre.insert("ex", "http://example.org/ex#").unwrap();
    let bare = "ex:s a ex:C ; ex:p ex:o , ex:o2 ; ex:q \"x\" .";
    assert_eq!(
        parse_turtle_with(bare, &pre).unwrap().triples,
        parse_turtle(long).unwrap().triples
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn seeded_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prefixes = common::random_prefixes(&mut rng);
        let triples = common::random_triples(&mut rng, 50);
        let text = write_turtle(&prefixes, &triples);
        let doc = parse_turtle(&text);
        prop_assert!(doc.is_ok(), "{:?}\n{}", doc, text);
        prop_assert_eq!(doc.unwrap().triples, triples);
    }
}
