//! Soft-project the identity directions out of every vector with a negated conceptor.

use fairvec::debias::conceptor::conceptor_debias;
use fairvec::metrics::weat_all_pairs;
use fairvec::synthetic::{planted_bias, PlantedBiasConfig};

fn main() -> fairvec::Result<()> {
    let corpus = planted_bias(&PlantedBiasConfig::default())?;
    let lex = corpus.lexicon.resolve(&corpus.store)?;
    let before = weat_all_pairs(&corpus.store, &lex)?.aggregate;

    for aperture in [0.1, 1.0, 10.0, 100.0] {
        let (out, c) = conceptor_debias(&corpus.store, &lex, aperture, false)?;
        let after = weat_all_pairs(&out, &lex)?.aggregate;
        let top: Vec<String> = c.eigenvalues.iter().take(3).map(|e| format!("{e:.3}")).collect();
        println!(
            "alpha {aperture:>5}: top eigenvalues [{}], WEAT {before:.3} -> {after:.3} ({:.1}% lower)",
            top.join(", "),
            100.0 * (1.0 - after / before)
        );
    }
    Ok(())
}
