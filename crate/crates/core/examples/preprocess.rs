//! Normalization and tokenization of raw tweet text.

use travel_tweets::textprep::{normalize, tokenize, TokenizedDoc};

fn main() {
    for raw in [
        "Peguei o ÔNIBUS agora loooool http://t.co/x @amigo",
        "#Rio  metrô   lotado!!!!",
        "kkkkkkkk perdi o trem",
    ] {
        let n = normalize(raw);
        println!("{raw:?}\n  -> {n:?}\n  -> {:?}", tokenize(&n));
    }
    let doc = TokenizedDoc::from_text(42, "vou de bicicleta pro trabalho");
    println!("{}", serde_json::to_string(&doc).expect("doc serializes"));
}
