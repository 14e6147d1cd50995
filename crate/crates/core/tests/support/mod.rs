#![allow(dead_code)]

pub mod gen;
pub mod oracle_eval;
pub mod reference;
pub mod tcp;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use polyrv::monitor::{step, Directive, Engine, Event, Verdict};
use polyrv::spec::SpecAst;
use polyrv::{split_spec, validate_spec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> String {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn engine_for(ast: &SpecAst) -> Engine {
    let report = validate_spec(ast);
    assert!(report.is_empty(), "generated script is invalid:\n{report}\n{}", polyrv::pretty_print(ast));
    Engine::new(split_spec(ast).expect("split").0)
}

/// Verdicts from running `events` through `step`, with type-error detail
/// stripped so they compare against the reference interpreter.
pub fn engine_verdicts(engine: &mut Engine, events: &[Event], seed: u64) -> Vec<Verdict> {
    let mut respond = gen::responder(seed);
    events
        .iter()
        .flat_map(|e| step(engine, e.clone(), &mut respond))
        .filter_map(|d| match d {
            Directive::EmitVerdict(v) => Some(reference::normalise(&v)),
            _ => None,
        })
        .collect()
}
