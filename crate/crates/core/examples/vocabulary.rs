//! Builds a capped vocabulary and bag-of-words vectors.

use travel_tweets::textprep::TokenizedDoc;
use travel_tweets::vocab::{bow_vector, build_vocabulary};

fn main() -> anyhow::Result<()> {
    let docs: Vec<TokenizedDoc> = [
        "peguei o ônibus cedo",
        "o metrô estava cheio",
        "o ônibus atrasou de novo",
        "assisti o jogo ontem",
    ]
    .iter()
    .enumerate()
    .map(|(i, t)| TokenizedDoc::from_text(i as u64, t))
    .collect();

    // "o" occurs in every doc and is dropped by the document-frequency cap.
    let vocab = build_vocabulary(&docs, 10, 0.6)?;
    for t in vocab.terms() {
        println!("{:?}", t);
    }
    println!("bow of doc 2: {:?}", bow_vector(&docs[2], &vocab).entries());
    println!("{}", vocab.to_json());
    Ok(())
}
