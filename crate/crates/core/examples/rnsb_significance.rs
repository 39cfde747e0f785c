//! RNSB before and after debiasing, with a one-tailed Welch test over runs.

use fairvec::debias::conceptor::conceptor_debias;
use fairvec::rnsb::{one_tailed_t_test, rnsb, RnsbConfig};
use fairvec::synthetic::{planted_bias, PlantedBiasConfig};

fn main() -> fairvec::Result<()> {
    let corpus = planted_bias(&PlantedBiasConfig { sentiment_shift: 0.6, ..PlantedBiasConfig::default() })?;
    let lex = corpus.lexicon.resolve(&corpus.store)?;
    let config = RnsbConfig::default();

    let before = rnsb(&corpus.store, &lex, &corpus.sentiment, &config)?;
    let (debiased, _) = conceptor_debias(&corpus.store, &lex, 10.0, false)?;
    let after = rnsb(&debiased, &lex, &corpus.sentiment, &config)?;

    for (name, p) in &before.per_subclass_negative_prob {
        println!("P(negative | {name}) = {p:.3}");
    }
    println!("RNSB {:.4} ± {:.4} -> {:.4} ± {:.4}", before.kl, before.kl_std, after.kl, after.kl_std);
    let t = one_tailed_t_test(&before.per_run_kl(), &after.per_run_kl())?;
    println!("Welch t = {:.3}, df = {:.1}, one-tailed p = {:.2e}", t.t, t.df, t.p);
    Ok(())
}
