//! Day-of-week histogram, user activity bands, hashtags and a heatmap over
//! a synthetic corpus.

use travel_tweets::analytics::{
    day_of_week_histogram, heatmap_grid, top_hashtags, tweets_per_user_distribution, DEFAULT_UTC_OFFSET_MINUTES,
};
use travel_tweets::corpus::GeoBox;
use travel_tweets::synth::{generate, power_law_user_corpus, SynthConfig};

fn main() -> anyhow::Result<()> {
    let tweets: Vec<_> = generate(&SynthConfig::clean(5000, 3)).into_iter().map(|t| t.tweet).collect();

    println!("{}", day_of_week_histogram(&tweets, DEFAULT_UTC_OFFSET_MINUTES).to_json());
    println!("{:?}", top_hashtags(tweets.iter().map(|t| t.text.as_str()), 5));

    let grid = heatmap_grid(&tweets, GeoBox::rio_de_janeiro(), 40, 40)?;
    let (r, c) = grid.argmax().expect("non-empty grid");
    println!("hottest cell ({r},{c}) with {} tweets, {} dropped", grid.get(r, c), grid.dropped());

    let users = tweets_per_user_distribution(&power_law_user_corpus(2000, 0.9, 5));
    println!(
        "users {}: <10 tweets {} ({:.1}%), 10..100 {}, >100 {}",
        users.distinct_users,
        users.band_lt10,
        100.0 * users.band_lt10_fraction(),
        users.band_10_100,
        users.band_gt100
    );
    Ok(())
}
