use std::io::BufRead;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::geo::{GeoBox, GeoPoint};

/// Why a single JSON-lines record could not be turned into a [`Tweet`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RecordError {
    #[error("malformed record: {0}")]
    RecordMalformed(String),
    #[error("record is missing required field `{0}`")]
    RecordIncomplete(&'static str),
}

/// One archived geo-located post.
#[derive(Debug, Clone, PartialEq)]
pub struct Tweet {
    pub id: u64,
    pub text: String,
    pub lang: String,
    pub created_at: DateTime<Utc>,
    pub coordinates: Option<GeoPoint>,
    pub place_box: Option<GeoBox>,
    pub place_name: Option<String>,
    pub user_id: Option<u64>,
}

impl Tweet {
    /// The point used for spatial analytics: the precise coordinates, or the
    /// centre of the place box when only a place is attached.
    pub fn effective_point(&self) -> Option<GeoPoint> {
        self.coordinates
            .or_else(|| self.place_box.map(|b| b.centroid()))
    }
}

#[derive(Serialize, Deserialize)]
struct WirePlace {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    bounding_box: GeoBox,
}

#[derive(Serialize, Deserialize)]
struct WireTweet {
    id: u64,
    text: String,
    lang: String,
    created_at: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coordinates: Option<GeoPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    place: Option<WirePlace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    user_id: Option<u64>,
}

const REQUIRED: [&str; 4] = ["id", "text", "lang", "created_at"];

pub fn parse_tweet_record(line: &str) -> Result<Tweet, RecordError> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| RecordError::RecordMalformed(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| RecordError::RecordMalformed("record is not a JSON object".into()))?;
    for field in REQUIRED {
        if obj.get(field).is_none_or(Value::is_null) {
            return Err(RecordError::RecordIncomplete(field));
        }
    }
    let wire: WireTweet =
        serde_json::from_value(value).map_err(|e| RecordError::RecordMalformed(e.to_string()))?;
    if wire.text.trim().is_empty() {
        return Err(RecordError::RecordIncomplete("text"));
    }
    let created_at = DateTime::parse_from_rfc3339(&wire.created_at)
        .map_err(|e| RecordError::RecordMalformed(format!("created_at: {e}")))?
        .with_timezone(&Utc);

    let (place_box, place_name) = match wire.place {
        Some(p) => (Some(p.bounding_box), p.name),
        None => (None, None),
    };
    Ok(Tweet {
        id: wire.id,
        text: wire.text,
        lang: wire.lang,
        created_at,
        coordinates: wire.coordinates,
        place_box,
        place_name,
        user_id: wire.user_id,
    })
}

/// Serializes a tweet back to the JSON-lines schema it was read from.
pub fn format_tweet_record(tweet: &Tweet) -> String {
    let place = tweet.place_box.map(|bounding_box| WirePlace {
        name: tweet.place_name.clone(),
        bounding_box,
    });
    let wire = WireTweet {
        id: tweet.id,
        text: tweet.text.clone(),
        lang: tweet.lang.clone(),
        created_at: tweet.created_at.to_rfc3339_opts(SecondsFormat::Secs, true),
        coordinates: tweet.coordinates,
        place,
        user_id: tweet.user_id,
    };
    serde_json::to_string(&wire).expect("tweet serializes")
}

/// A parsed line together with its raw text and 1-based line number.
#[derive(Debug, Clone)]
pub struct RawRecord {
    pub line_no: usize,
    pub raw: String,
    pub tweet: Tweet,
}

/// A line that failed to parse, with its 1-based line number.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedRecord {
    pub line_no: usize,
    pub error: RecordError,
}

/// Streams JSON-lines records, yielding parse failures instead of stopping.
/// Blank lines are ignored.
pub fn read_records<R: BufRead>(
    reader: R,
) -> impl Iterator<Item = std::io::Result<Result<RawRecord, SkippedRecord>>> {
    reader
        .lines()
        .enumerate()
        .filter(|(_, line)| !matches!(line, Ok(l) if l.trim().is_empty()))
        .map(|(i, line)| {
            let line_no = i + 1;
            line.map(|raw| match parse_tweet_record(&raw) {
                Ok(tweet) => Ok(RawRecord {
                    line_no,
                    raw,
                    tweet,
                }),
                Err(error) => Err(SkippedRecord { line_no, error }),
            })
        })
}
