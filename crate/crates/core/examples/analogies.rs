//! Stereotype analogies between subclass terms and attribute words.

use fairvec::metrics::{enumerate_analogies, nearest_neighbors};
use fairvec::synthetic::{planted_bias, PlantedBiasConfig};
use std::collections::HashSet;

fn main() -> fairvec::Result<()> {
    let corpus = planted_bias(&PlantedBiasConfig::default())?;
    let store = &corpus.store;
    let lex = corpus.lexicon.resolve(store)?;
    let words = |s: usize| lex.subclasses[s].targets.iter().map(|t| t.word.clone()).collect::<Vec<_>>();
    let attributes: Vec<String> = lex
        .attribute_sets
        .iter()
        .flat_map(|a| a.words.iter().map(|w| w.word.clone()))
        .collect();

    let found = enumerate_analogies(store, &words(0), &words(1), &attributes, 2.0, 0.15);
    println!("{} analogies above 0.15, top five:", found.len());
    for a in found.iter().take(5) {
        println!("  {} : {} :: {} : {}  ({:.3})", a.a, a.b, a.x, a.y, a.score);
    }

    let probe = &words(0)[0];
    println!("nearest to {probe}:");
    for (w, c) in nearest_neighbors(store, probe, 5, &HashSet::new())? {
        println!("  {w:<12} {c:.3}");
    }
    Ok(())
}
