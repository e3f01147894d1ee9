//! Confusion counts, precision/recall/F1, ROC and AUC from raw scores.

use travel_tweets::classify::Label;
use travel_tweets::eval::{evaluate, f1_score, TermQuery};

fn main() -> anyhow::Result<()> {
    let scores = [0.9, 0.8, 0.8, 0.6, 0.4, 0.3, 0.2, 0.1];
    let golds = [
        Label::Travel,
        Label::Travel,
        Label::NonTravel,
        Label::Travel,
        Label::NonTravel,
        Label::Travel,
        Label::NonTravel,
        Label::NonTravel,
    ];
    let report = evaluate(&scores, &golds, 0.5)?;
    println!("{}", report.to_json());
    report.write_roc_csv(std::io::stdout())?;

    println!("F1 of P=1.0, R=0.7465: {:.4}", f1_score(1.0, 0.7465));

    let q = TermQuery::default();
    for text in ["Perdi o ônibus de novo", "vou de busão", "que dia lindo"] {
        println!("bootstrap match {:<24} {}", format!("{text:?}"), q.matches(text));
    }
    Ok(())
}
