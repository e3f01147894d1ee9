//! Trains skip-gram embeddings on a corpus with planted synonym pairs and
//! shows that each pair ends up close together.

use travel_tweets::embed::{cosine, nearest_neighbors, train_embeddings, EmbedConfig};
use travel_tweets::synth::planted_synonym_corpus;

fn main() -> anyhow::Result<()> {
    let corpus = planted_synonym_corpus(8, 200, 7);
    let model = train_embeddings(&corpus.docs, &EmbedConfig::default())?;
    println!("{} terms, {} dims", model.vocab_len(), model.dims());
    for (a, b) in corpus.pairs.iter().take(4) {
        let (va, vb) = (model.input_vector(a).unwrap(), model.input_vector(b).unwrap());
        println!("cos({a}, {b}) = {:.3}", cosine(va, vb));
    }
    let (probe, _) = &corpus.pairs[0];
    for (t, c) in nearest_neighbors(probe, 5, &model)? {
        println!("  {probe} ~ {t} {c:.3}");
    }
    let bytes = model.to_bytes();
    println!("serialized model: {} bytes", bytes.len());
    Ok(())
}
