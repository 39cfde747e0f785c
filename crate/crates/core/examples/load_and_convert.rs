//! Write a store in both on-disk formats, read it back, convert between them.

use fairvec::embedding::{load, save};
use fairvec::synthetic::random_store;
use fairvec::EmbeddingFormat;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("fairvec-example-convert");
    std::fs::create_dir_all(&dir)?;
    let store = random_store(1000, 25, 1);

    let bin = dir.join("vectors.bin");
    let txt = dir.join("vectors.txt");
    save(&store, &bin, EmbeddingFormat::Word2vecBinary)?;
    let from_bin = load(&bin, EmbeddingFormat::Word2vecBinary, None)?;
    save(&from_bin, &txt, EmbeddingFormat::GloveText)?;
    let from_txt = load(&txt, EmbeddingFormat::GloveText, Some(100))?;

    println!("binary:    {} words x {} dims", from_bin.len(), from_bin.dim());
    println!("text (100): {} words, first = {}", from_txt.len(), from_txt.word(0));
    let drift = (0..from_txt.len())
        .flat_map(|i| from_txt.row(i).iter().zip(from_bin.row(i)).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    println!("max text/binary difference: {drift:.2e}");
    Ok(())
}
