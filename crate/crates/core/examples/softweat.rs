//! Translate each subclass's neighbourhood into the null space of its biased attributes.

use fairvec::debias::softweat::{softweat_debias, SoftWeatConfig};
use fairvec::metrics::weat_all_pairs;
use fairvec::synthetic::{planted_bias, PlantedBiasConfig};

fn main() -> fairvec::Result<()> {
    let corpus = planted_bias(&PlantedBiasConfig::default())?;
    let lex = corpus.lexicon.resolve(&corpus.store)?;
    let config = SoftWeatConfig { lambda: 1.0, ..SoftWeatConfig::default() };

    let out = softweat_debias(&corpus.store, &lex, &config)?;
    for plan in &out.plans {
        match plan.chosen {
            Some(best) => println!(
                "{:<6} moved {} words against {:?}; best of {} candidates scored {:.4}",
                plan.subclass,
                plan.expanded.len(),
                plan.selected_attributes,
                plan.candidates.len(),
                plan.candidates[best].score
            ),
            None => println!("{:<6} left unchanged", plan.subclass),
        }
    }
    println!(
        "aggregate WEAT {:.4} -> {:.4}",
        weat_all_pairs(&corpus.store, &lex)?.aggregate,
        weat_all_pairs(&out.store, &lex)?.aggregate
    );
    Ok(())
}
