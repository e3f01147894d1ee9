//! Latitude/longitude points and axis-aligned boxes.
//!
//! All comparisons are boundary-inclusive: a point on an edge is inside, and
//! two boxes that only touch at an edge or corner overlap.

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// A coordinate pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint", into = "RawPoint")]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPoint {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawPoint> for GeoPoint {
    type Error = CorpusError;

    fn try_from(raw: RawPoint) -> Result<Self, Self::Error> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl From<GeoPoint> for RawPoint {
    fn from(p: GeoPoint) -> Self {
        RawPoint { lat: p.lat, lon: p.lon }
    }
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, CorpusError> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(CorpusError::InvalidPoint { lat, lon });
        }
        Ok(GeoPoint { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

/// An axis-aligned rectangle given by its south-west and north-east corners.
///
/// Boxes crossing the antimeridian cannot be represented; construction fails
/// when the south-west corner is east of the north-east corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct GeoBox {
    south_west: GeoPoint,
    north_east: GeoPoint,
}

#[derive(Serialize, Deserialize)]
struct RawBox {
    sw: GeoPoint,
    ne: GeoPoint,
}

impl TryFrom<RawBox> for GeoBox {
    type Error = CorpusError;

    fn try_from(raw: RawBox) -> Result<Self, Self::Error> {
        GeoBox::new(raw.sw, raw.ne)
    }
}

impl From<GeoBox> for RawBox {
    fn from(b: GeoBox) -> Self {
        RawBox {
            sw: b.south_west,
            ne: b.north_east,
        }
    }
}

impl GeoBox {
    pub fn new(south_west: GeoPoint, north_east: GeoPoint) -> Result<Self, CorpusError> {
        if south_west.lat > north_east.lat || south_west.lon > north_east.lon {
            return Err(CorpusError::InvalidBox {
                sw: (south_west.lat, south_west.lon),
                ne: (north_east.lat, north_east.lon),
            });
        }
        Ok(GeoBox {
            south_west,
            north_east,
        })
    }

    /// Builds a box from `(sw_lat, sw_lon, ne_lat, ne_lon)`.
    pub fn from_corners(
        sw_lat: f64,
        sw_lon: f64,
        ne_lat: f64,
        ne_lon: f64,
    ) -> Result<Self, CorpusError> {
        GeoBox::new(GeoPoint::new(sw_lat, sw_lon)?, GeoPoint::new(ne_lat, ne_lon)?)
    }

    /// The platform's default place box for the city of Rio de Janeiro.
    pub fn rio_de_janeiro() -> Self {
        GeoBox::from_corners(-23.0827, -43.7955, -22.7460, -43.0990).expect("static box")
    }

    /// The platform's default place box for the city of São Paulo.
    pub fn sao_paulo() -> Self {
        GeoBox::from_corners(-24.0084, -46.8260, -23.3566, -46.3650).expect("static box")
    }

    pub fn south_west(&self) -> GeoPoint {
        self.south_west
    }

    pub fn north_east(&self) -> GeoPoint {
        self.north_east
    }

    pub fn lat_span(&self) -> f64 {
        self.north_east.lat - self.south_west.lat
    }

    pub fn lon_span(&self) -> f64 {
        self.north_east.lon - self.south_west.lon
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        point_in_box(p, *self)
    }

    pub fn centroid(&self) -> GeoPoint {
        box_centroid(*self)
    }
}

pub fn point_in_box(p: GeoPoint, b: GeoBox) -> bool {
    b.south_west.lat <= p.lat
        && p.lat <= b.north_east.lat
        && b.south_west.lon <= p.lon
        && p.lon <= b.north_east.lon
}

/// True when the two rectangles share at least one point.
pub fn boxes_overlap(a: GeoBox, b: GeoBox) -> bool {
    a.south_west.lat <= b.north_east.lat
        && b.south_west.lat <= a.north_east.lat
        && a.south_west.lon <= b.north_east.lon
        && b.south_west.lon <= a.north_east.lon
}

pub fn box_centroid(b: GeoBox) -> GeoPoint {
    // The midpoint of two in-range values is in range and between them.
    GeoPoint {
        lat: (b.south_west.lat + b.north_east.lat) / 2.0,
        lon: (b.south_west.lon + b.north_east.lon) / 2.0,
    }
}
