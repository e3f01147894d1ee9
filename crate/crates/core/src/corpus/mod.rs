//! Ingestion of archived tweet records and city-level geo filtering.
//!
//! A record is matched to a city box with two heuristics, in strict order:
//! precise coordinates are tested for containment; failing that, a place box
//! is tested for any overlap with the city. Records carrying neither are
//! unresolvable.

mod geo;
mod record;

use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

pub use geo::{box_centroid, boxes_overlap, point_in_box, GeoBox, GeoPoint};
pub use record::{
    format_tweet_record, parse_tweet_record, read_records, RawRecord, RecordError,
    SkippedRecord, Tweet,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorpusError {
    #[error("coordinate out of range: lat={lat}, lon={lon}")]
    InvalidPoint { lat: f64, lon: f64 },
    #[error("invalid bounding box: sw={sw:?} must be south-west of ne={ne:?}")]
    InvalidBox { sw: (f64, f64), ne: (f64, f64) },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResolutionKind {
    InsideByCoordinates,
    InsideByPlaceOverlap,
    Outside,
    Unresolvable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoResolution {
    pub kind: ResolutionKind,
    pub effective_point: Option<GeoPoint>,
}

impl GeoResolution {
    pub fn is_inside(&self) -> bool {
        matches!(
            self.kind,
            ResolutionKind::InsideByCoordinates | ResolutionKind::InsideByPlaceOverlap
        )
    }
}

pub fn resolve_location(tweet: &Tweet, city: GeoBox) -> GeoResolution {
    resolve(tweet.coordinates, tweet.place_box, city)
}

/// The decision table behind [`resolve_location`], on bare geometry.
pub fn resolve(coordinates: Option<GeoPoint>, place: Option<GeoBox>, city: GeoBox) -> GeoResolution {
    const OUTSIDE: GeoResolution = GeoResolution {
        kind: ResolutionKind::Outside,
        effective_point: None,
    };
    match (coordinates, place) {
        (Some(p), _) if point_in_box(p, city) => GeoResolution {
            kind: ResolutionKind::InsideByCoordinates,
            effective_point: Some(p),
        },
        (Some(_), _) => OUTSIDE,
        (None, Some(b)) if boxes_overlap(b, city) => GeoResolution {
            kind: ResolutionKind::InsideByPlaceOverlap,
            effective_point: Some(box_centroid(b)),
        },
        (None, Some(_)) => OUTSIDE,
        (None, None) => GeoResolution {
            kind: ResolutionKind::Unresolvable,
            effective_point: None,
        },
    }
}

/// True when `lang` names the same language as `wanted`, comparing the
/// primary subtag case-insensitively (`pt-BR` matches `pt`).
pub fn language_matches(lang: &str, wanted: &str) -> bool {
    fn primary(code: &str) -> &str {
        code.split(['-', '_']).next().unwrap_or(code)
    }
    primary(lang).eq_ignore_ascii_case(primary(wanted))
}

/// Dataset composition tallies. Unresolvable records count as outside the
/// box and are also tallied separately; malformed lines never reach `total`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total: u64,
    pub lang_match: u64,
    pub lang_other: u64,
    pub inside_box: u64,
    pub outside_box: u64,
    pub lang_and_inside: u64,
    pub unresolvable: u64,
    pub skipped_malformed: u64,
}

impl CorpusStats {
    pub fn merge(mut self, other: CorpusStats) -> CorpusStats {
        self += other;
        self
    }

    /// Checks the structural identities between the tallies.
    pub fn is_consistent(&self) -> bool {
        self.lang_match + self.lang_other == self.total
            && self.inside_box + self.outside_box <= self.total
            && self.lang_and_inside <= self.lang_match.min(self.inside_box)
            && self.unresolvable <= self.outside_box
    }
}

impl AddAssign for CorpusStats {
    fn add_assign(&mut self, o: CorpusStats) {
        self.total += o.total;
        self.lang_match += o.lang_match;
        self.lang_other += o.lang_other;
        self.inside_box += o.inside_box;
        self.outside_box += o.outside_box;
        self.lang_and_inside += o.lang_and_inside;
        self.unresolvable += o.unresolvable;
        self.skipped_malformed += o.skipped_malformed;
    }
}

/// Streaming city + language filter. Feed every record through
/// [`CorpusFilter::observe`]; the stats cover the full input.
#[derive(Debug, Clone)]
pub struct CorpusFilter {
    city: GeoBox,
    language: String,
    stats: CorpusStats,
}

impl CorpusFilter {
    pub fn new(city: GeoBox, language: impl Into<String>) -> Self {
        CorpusFilter {
            city,
            language: language.into(),
            stats: CorpusStats::default(),
        }
    }

    /// Tallies `tweet` and returns whether it is retained.
    pub fn observe(&mut self, tweet: &Tweet) -> bool {
        let res = resolve_location(tweet, self.city);
        let lang_ok = language_matches(&tweet.lang, &self.language);
        let s = &mut self.stats;
        s.total += 1;
        if lang_ok {
            s.lang_match += 1;
        } else {
            s.lang_other += 1;
        }
        if res.is_inside() {
            s.inside_box += 1;
        } else {
            s.outside_box += 1;
        }
        if res.kind == ResolutionKind::Unresolvable {
            s.unresolvable += 1;
        }
        let keep = lang_ok && res.is_inside();
        if keep {
            s.lang_and_inside += 1;
        }
        keep
    }

    pub fn skip_malformed(&mut self) {
        self.stats.skipped_malformed += 1;
    }

    pub fn stats(&self) -> CorpusStats {
        self.stats
    }
}

pub fn filter_corpus<I>(records: I, city: GeoBox, language: &str) -> (Vec<Tweet>, CorpusStats)
where
    I: IntoIterator<Item = Tweet>,
{
    let mut filter = CorpusFilter::new(city, language);
    let kept = records
        .into_iter()
        .filter(|t| filter.observe(t))
        .collect();
    (kept, filter.stats())
}
