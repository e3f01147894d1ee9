//! Resolves tweet locations against a city box and filters a small corpus.

use travel_tweets::corpus::{filter_corpus, parse_tweet_record, resolve_location, GeoBox};

const RECORDS: &[&str] = &[
    r#"{"id":1,"text":"peguei o metrô","lang":"pt","created_at":"2017-03-01T12:00:00Z","coordinates":{"lat":-22.91,"lon":-43.2}}"#,
    r#"{"id":2,"text":"na praia","lang":"pt","created_at":"2017-03-01T12:00:00Z","place":{"name":"Niterói","bounding_box":{"sw":{"lat":-22.98,"lon":-43.15},"ne":{"lat":-22.85,"lon":-43.0}}}}"#,
    r#"{"id":3,"text":"en la playa","lang":"es","created_at":"2017-03-01T12:00:00Z","coordinates":{"lat":-22.91,"lon":-43.2}}"#,
    r#"{"id":4,"text":"em sampa","lang":"pt","created_at":"2017-03-01T12:00:00Z","coordinates":{"lat":-23.55,"lon":-46.63}}"#,
    r#"{"id":5,"text":"sem lugar","lang":"pt","created_at":"2017-03-01T12:00:00Z"}"#,
];

fn main() -> anyhow::Result<()> {
    let rio = GeoBox::rio_de_janeiro();
    let tweets = RECORDS.iter().map(|r| parse_tweet_record(r)).collect::<Result<Vec<_>, _>>()?;
    for t in &tweets {
        let r = resolve_location(t, rio);
        println!("{:>2} {:<22} {:?}", t.id, format!("{:?}", r.kind), r.effective_point.map(|p| (p.lat(), p.lon())));
    }
    let (kept, stats) = filter_corpus(tweets, rio, "pt");
    println!("kept ids {:?}", kept.iter().map(|t| t.id).collect::<Vec<_>>());
    println!("{}", serde_json::to_string_pretty(&stats)?);
    Ok(())
}
