use std::io::Write;

use serde::Serialize;
use serde_json::json;

use super::AnalyticsError;
use crate::corpus::{GeoBox, GeoPoint, Tweet};

pub const DEFAULT_GRID: usize = 200;

/// Point counts on a regular lat/lon grid over `bounds`. Row 0 is the
/// southernmost band, column 0 the westernmost.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapGrid {
    bounds: GeoBox,
    rows: usize,
    cols: usize,
    cells: Vec<u64>,
    dropped: u64,
}

#[derive(Debug, Serialize)]
struct CellRow {
    row: usize,
    col: usize,
    lat_center: f64,
    lon_center: f64,
    count: u64,
}

fn band(offset: f64, span: f64, n: usize) -> usize {
    (((offset / span) * n as f64).floor() as usize).min(n - 1)
}

impl HeatmapGrid {
    pub fn new(bounds: GeoBox, rows: usize, cols: usize) -> Result<Self, AnalyticsError> {
        if rows == 0 || cols == 0 {
            return Err(AnalyticsError::InvalidGrid(format!("{rows}x{cols}")));
        }
        if bounds.lat_span() <= 0.0 || bounds.lon_span() <= 0.0 {
            return Err(AnalyticsError::InvalidGrid("bounds have zero area".into()));
        }
        Ok(HeatmapGrid {
            bounds,
            rows,
            cols,
            cells: vec![0; rows * cols],
            dropped: 0,
        })
    }

    pub fn bounds(&self) -> GeoBox {
        self.bounds
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.cells[row * self.cols + col]
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().sum()
    }

    /// Cell holding `p`, or `None` outside the bounds. Points on the north or
    /// east edge go to the last row or column.
    pub fn cell_of(&self, p: GeoPoint) -> Option<(usize, usize)> {
        if !self.bounds.contains(p) {
            return None;
        }
        let sw = self.bounds.south_west();
        Some((
            band(p.lat() - sw.lat(), self.bounds.lat_span(), self.rows),
            band(p.lon() - sw.lon(), self.bounds.lon_span(), self.cols),
        ))
    }

    /// South-west and north-east corners of a cell.
    pub fn cell_bounds(&self, row: usize, col: usize) -> (GeoPoint, GeoPoint) {
        let sw = self.bounds.south_west();
        let dlat = self.bounds.lat_span() / self.rows as f64;
        let dlon = self.bounds.lon_span() / self.cols as f64;
        let corner = |lat: f64, lon: f64| GeoPoint::new(lat, lon).expect("cell corner inside bounds");
        let ne = self.bounds.north_east();
        let top = if row + 1 == self.rows { ne.lat() } else { sw.lat() + dlat * (row + 1) as f64 };
        let right = if col + 1 == self.cols { ne.lon() } else { sw.lon() + dlon * (col + 1) as f64 };
        (
            corner(sw.lat() + dlat * row as f64, sw.lon() + dlon * col as f64),
            corner(top, right),
        )
    }

    pub fn add_point(&mut self, p: Option<GeoPoint>) {
        match p.and_then(|p| self.cell_of(p)) {
            Some((r, c)) => self.cells[r * self.cols + c] += 1,
            None => self.dropped += 1,
        }
    }

    pub fn add_tweet(&mut self, t: &Tweet) {
        self.add_point(t.effective_point());
    }

    pub fn merge(&mut self, other: &HeatmapGrid) -> Result<(), AnalyticsError> {
        if self.bounds != other.bounds || self.rows != other.rows || self.cols != other.cols {
            return Err(AnalyticsError::GridMismatch);
        }
        self.cells.iter_mut().zip(&other.cells).for_each(|(a, b)| *a += b);
        self.dropped += other.dropped;
        Ok(())
    }

    /// The most populated cell, ties going to the lowest (row, col).
    pub fn argmax(&self) -> Option<(usize, usize)> {
        let (mut best, mut at) = (0, None);
        for (i, &c) in self.cells.iter().enumerate() {
            if c > best {
                best = c;
                at = Some((i / self.cols, i % self.cols));
            }
        }
        at
    }

    fn center(&self, row: usize, col: usize) -> (f64, f64) {
        let (sw, ne) = self.cell_bounds(row, col);
        ((sw.lat() + ne.lat()) / 2.0, (sw.lon() + ne.lon()) / 2.0)
    }

    /// Every cell as `row,col,lat_center,lon_center,count`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), AnalyticsError> {
        let mut writer = csv::Writer::from_writer(w);
        for row in 0..self.rows {
            for col in 0..self.cols {
                let (lat_center, lon_center) = self.center(row, col);
                writer.serialize(CellRow {
                    row,
                    col,
                    lat_center,
                    lon_center,
                    count: self.get(row, col),
                })?;
            }
        }
        writer.flush()?;
        Ok(())
    }

    /// FeatureCollection with one polygon per non-empty cell.
    pub fn to_geojson(&self) -> serde_json::Value {
        let mut features = Vec::new();
        for row in 0..self.rows {
            for col in 0..self.cols {
                let count = self.get(row, col);
                if count == 0 {
                    continue;
                }
                let (sw, ne) = self.cell_bounds(row, col);
                let ring = [
                    [sw.lon(), sw.lat()],
                    [ne.lon(), sw.lat()],
                    [ne.lon(), ne.lat()],
                    [sw.lon(), ne.lat()],
                    [sw.lon(), sw.lat()],
                ];
                features.push(json!({
                    "type": "Feature",
                    "geometry": {"type": "Polygon", "coordinates": [ring]},
                    "properties": {"row": row, "col": col, "count": count},
                }));
            }
        }
        json!({"type": "FeatureCollection", "features": features})
    }
}

pub fn heatmap_grid<'a, I>(tweets: I, bounds: GeoBox, rows: usize, cols: usize) -> Result<HeatmapGrid, AnalyticsError>
where
    I: IntoIterator<Item = &'a Tweet>,
{
    let mut grid = HeatmapGrid::new(bounds, rows, cols)?;
    for t in tweets {
        grid.add_tweet(t);
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn single_cell_and_corner() {
        let b = GeoBox::rio_de_janeiro();
        let mut g = HeatmapGrid::new(b, 1, 1).unwrap();
        g.add_point(Some(b.centroid()));
        g.add_point(Some(b.north_east()));
        g.add_point(Some(b.south_west()));
        g.add_point(Some(pt(0.0, 0.0)));
        g.add_point(None);
        assert_eq!((g.get(0, 0), g.dropped()), (3, 2));

        let mut g = HeatmapGrid::new(b, 10, 10).unwrap();
        g.add_point(Some(b.north_east()));
        assert_eq!(g.get(9, 9), 1);
        assert_eq!(g.cell_of(b.south_west()), Some((0, 0)));
    }

    #[test]
    fn rejects_empty_grid() {
        assert!(HeatmapGrid::new(GeoBox::sao_paulo(), 0, 3).is_err());
    }

    #[test]
    fn csv_and_geojson() {
        let b = GeoBox::from_corners(0.0, 0.0, 2.0, 4.0).unwrap();
        let mut g = HeatmapGrid::new(b, 2, 2).unwrap();
        g.add_point(Some(pt(1.5, 3.0)));
        let mut out = Vec::new();
        g.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "row,col,lat_center,lon_center,count");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[4], "1,1,1.5,3.0,1");
        let gj = g.to_geojson();
        assert_eq!(gj["features"].as_array().unwrap().len(), 1);
        assert_eq!(gj["features"][0]["properties"]["count"], 1);
        assert_eq!(gj["features"][0]["geometry"]["coordinates"][0][0], json!([2.0, 1.0]));
    }

    #[test]
    fn merge_requires_same_geometry() {
        let b = GeoBox::sao_paulo();
        let mut a = HeatmapGrid::new(b, 4, 4).unwrap();
        let mut c = a.clone();
        a.add_point(Some(b.centroid()));
        c.add_point(None);
        a.merge(&c).unwrap();
        assert_eq!((a.total(), a.dropped()), (1, 1));
        assert!(a.merge(&HeatmapGrid::new(b, 4, 5).unwrap()).is_err());
    }
}
