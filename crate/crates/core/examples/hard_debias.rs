//! Remove the bias subspace from neutral words and equalize identity pairs.

use fairvec::debias::hard::hard_debias;
use fairvec::metrics::weat_all_pairs;
use fairvec::synthetic::{planted_bias, PlantedBiasConfig};

fn main() -> fairvec::Result<()> {
    let corpus = planted_bias(&PlantedBiasConfig::default())?;
    let lex = corpus.lexicon.resolve(&corpus.store)?;

    let out = hard_debias(&corpus.store, &lex, None)?;
    println!("subspace rank {} explaining {:?}", out.subspace.k(), out.subspace.explained_variance);
    println!(
        "neutralized {} words, equalized {} sets",
        out.neutralize.neutralized, out.equalize.sets
    );
    println!(
        "aggregate WEAT {:.4} -> {:.2e}",
        weat_all_pairs(&corpus.store, &lex)?.aggregate,
        weat_all_pairs(&out.store, &lex)?.aggregate
    );
    Ok(())
}
