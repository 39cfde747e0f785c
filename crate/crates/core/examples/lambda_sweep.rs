//! SoftWEAT strength sweep: how the metrics move as λ grows.

use fairvec::cli::sweep_lambda;
use fairvec::debias::softweat::SoftWeatConfig;
use fairvec::rnsb::RnsbConfig;
use fairvec::synthetic::{planted_bias, PlantedBiasConfig};

fn main() -> fairvec::Result<()> {
    let corpus = planted_bias(&PlantedBiasConfig::default())?;
    let lex = corpus.lexicon.resolve(&corpus.store)?;
    let grid: Vec<f64> = (0..=5).map(|i| f64::from(i) * 0.2).collect();
    let rnsb = RnsbConfig { runs: 5, ..RnsbConfig::default() };

    let rows = sweep_lambda(&corpus.store, &lex, Some(&corpus.sentiment), &rnsb, &SoftWeatConfig::default(), &grid)?;
    println!("lambda    WEAT   |1-MAC|   RNSB");
    for r in rows {
        println!("{:>6.1} {:>7.4} {:>9.4} {:>6.4}", r.lambda, r.weat, r.mac_deviation, r.rnsb.unwrap_or(f64::NAN));
    }
    Ok(())
}
