//! WEAT and MAC on a store with planted subclass bias.

use fairvec::metrics::{mac_lexicon, weat_all_pairs};
use fairvec::synthetic::{planted_bias, PlantedBiasConfig};

fn main() -> fairvec::Result<()> {
    let corpus = planted_bias(&PlantedBiasConfig::default())?;
    let lexicon = corpus.lexicon.resolve(&corpus.store)?;

    let weat = weat_all_pairs(&corpus.store, &lexicon)?;
    for c in &weat.combinations {
        println!(
            "{:>6} vs {:<6} | {:>10} vs {:<10} d = {:+.3}",
            c.target_a, c.target_b, c.attribute_a, c.attribute_b, c.result.effect_size
        );
    }
    println!("aggregate WEAT: {:.4}", weat.aggregate);

    let mac = mac_lexicon(&corpus.store, &lexicon)?;
    println!("MAC: {:.4} (|1 - MAC| = {:.4})", mac.mac, mac.deviation());
    Ok(())
}
