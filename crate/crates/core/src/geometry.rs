//! Site geometry: lot and road polygons, mask footprints, and the
//! area-based parked/not-parked classification.
//!
//! Conventions used throughout:
//! - pixel `(x, y)` covers the unit square `[x, x+1) x [y, y+1)` and is
//!   represented by its center `(x + 0.5, y + 0.5)`;
//! - point-in-polygon uses the even-odd rule with boundary points counted
//!   as inside;
//! - mask rows are run-length encoded as half-open `[x_start, x_end)`
//!   intervals.

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::span::{union_length, Span};

/// A simple (non-self-intersecting) polygon in pixel coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct Polygon {
    vertices: Vec<[f64; 2]>,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    if cross(a, b, p) != 0.0 {
        return false;
    }
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

impl Polygon {
    pub fn new(vertices: Vec<[f64; 2]>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::InvalidPolygon(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(GeometryError::InvalidPolygon("non-finite vertex".into()));
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(GeometryError::InvalidPolygon(format!(
                    "repeated consecutive vertex at index {i}"
                )));
            }
        }
        // Reject spikes: an edge immediately folding back over its predecessor.
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            let ux = b[0] - a[0];
            let uy = b[1] - a[1];
            let vx = c[0] - b[0];
            let vy = c[1] - b[1];
            if ux * vy - uy * vx == 0.0 && ux * vx + uy * vy < 0.0 {
                return Err(GeometryError::InvalidPolygon(format!(
                    "degenerate spike at vertex index {}",
                    (i + 1) % n
                )));
            }
        }
        // Non-adjacent edge pairs must not touch.
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                if segments_intersect(
                    vertices[i],
                    vertices[(i + 1) % n],
                    vertices[j],
                    vertices[(j + 1) % n],
                ) {
                    return Err(GeometryError::InvalidPolygon(format!(
                        "self-intersection between edges {i} and {j}"
                    )));
                }
            }
        }
        Ok(Polygon { vertices })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    /// Axis-aligned bounding box `(x_min, y_min, x_max, y_max)`.
    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        let mut x_min = f64::INFINITY;
        let mut y_min = f64::INFINITY;
        let mut x_max = f64::NEG_INFINITY;
        let mut y_max = f64::NEG_INFINITY;
        for v in &self.vertices {
            x_min = x_min.min(v[0]);
            y_min = y_min.min(v[1]);
            x_max = x_max.max(v[0]);
            y_max = y_max.max(v[1]);
        }
        (x_min, y_min, x_max, y_max)
    }

    /// Even-odd point-in-polygon test; boundary points are inside.
    pub fn contains(&self, px: f64, py: f64) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            if on_segment(self.vertices[i], self.vertices[(i + 1) % n], [px, py]) {
                return true;
            }
        }
        let mut inside = false;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if (a[1] > py) != (b[1] > py) {
                let x_at = a[0] + (b[0] - a[0]) * (py - a[1]) / (b[1] - a[1]);
                if px < x_at {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Axis-aligned rectangle helper covering `[x_min, x_max] x [y_min, y_max]`.
    pub fn rectangle(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, GeometryError> {
        Polygon::new(vec![
            [x_min, y_min],
            [x_max, y_min],
            [x_max, y_max],
            [x_min, y_max],
        ])
    }
}

impl TryFrom<Vec<[f64; 2]>> for Polygon {
    type Error = GeometryError;

    fn try_from(vertices: Vec<[f64; 2]>) -> Result<Self, Self::Error> {
        Polygon::new(vertices)
    }
}

impl From<Polygon> for Vec<[f64; 2]> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

/// One run-length encoded mask row: half-open `[x_start, x_end)` runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskRow {
    pub y: u32,
    pub runs: Vec<(u32, u32)>,
}

/// Run-length encoded pixel footprint of one detected vehicle instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskFootprint {
    pub rows: Vec<MaskRow>,
}

impl MaskFootprint {
    pub fn new(rows: Vec<MaskRow>) -> Result<Self, GeometryError> {
        let mask = MaskFootprint { rows };
        mask.validate()?;
        Ok(mask)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let mut seen_rows = std::collections::BTreeSet::new();
        for row in &self.rows {
            if !seen_rows.insert(row.y) {
                return Err(GeometryError::InvalidMask(format!("duplicate row y={}", row.y)));
            }
            let mut prev_end: Option<u32> = None;
            for &(start, end) in &row.runs {
                if end <= start {
                    return Err(GeometryError::InvalidMask(format!(
                        "row y={}: empty or inverted run [{start}, {end})",
                        row.y
                    )));
                }
                if let Some(pe) = prev_end {
                    if start < pe {
                        return Err(GeometryError::InvalidMask(format!(
                            "row y={}: runs not sorted/disjoint at [{start}, {end})",
                            row.y
                        )));
                    }
                }
                prev_end = Some(end);
            }
        }
        Ok(())
    }

    /// Total number of pixels in the footprint.
    pub fn area(&self) -> u64 {
        self.rows
            .iter()
            .map(|r| r.runs.iter().map(|&(s, e)| (e - s) as u64).sum::<u64>())
            .sum()
    }

    /// Axis-aligned rectangular mask covering `[x0, x1) x [y0, y1)`.
    pub fn rectangle(x0: u32, x1: u32, y0: u32, y1: u32) -> Result<Self, GeometryError> {
        let rows = (y0..y1).map(|y| MaskRow { y, runs: vec![(x0, x1)] }).collect();
        MaskFootprint::new(rows)
    }
}

/// Parked/not-parked outcome of the area-based classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParkStatus {
    Parked(u32),
    NotParked,
}

/// A parking lot: identifying polygon plus its derived horizontal extent.
#[derive(Debug, Clone, PartialEq)]
pub struct LotRegion {
    pub id: u32,
    pub polygon: Polygon,
    pub x_min: f64,
    pub x_max: f64,
}

impl LotRegion {
    pub fn new(id: u32, polygon: Polygon) -> Result<Self, GeometryError> {
        let (x_min, _, x_max, _) = polygon.bbox();
        if x_max <= x_min {
            return Err(GeometryError::DegenerateLot { lot_id: id, x_min, x_max });
        }
        Ok(LotRegion { id, polygon, x_min, x_max })
    }

    pub fn horizontal_extent(&self) -> f64 {
        self.x_max - self.x_min
    }
}

#[derive(Serialize, Deserialize)]
struct RawLot {
    id: u32,
    polygon: Polygon,
}

#[derive(Serialize, Deserialize)]
struct RawRoadArea {
    polygon: Polygon,
}

#[derive(Serialize, Deserialize)]
struct RawGeometry {
    image_width: u32,
    image_height: u32,
    road_fraction_threshold: f64,
    lots: Vec<RawLot>,
    road_areas: Vec<RawRoadArea>,
}

/// Lot and road polygons for one camera view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeometry", into = "RawGeometry")]
pub struct SiteGeometry {
    pub image_width: u32,
    pub image_height: u32,
    /// Fraction of mask area in road polygons above which a detection is
    /// classified as not parked.
    pub road_fraction_threshold: f64,
    pub lots: Vec<LotRegion>,
    pub road_areas: Vec<Polygon>,
}

impl SiteGeometry {
    pub fn new(
        image_width: u32,
        image_height: u32,
        road_fraction_threshold: f64,
        lots: Vec<LotRegion>,
        road_areas: Vec<Polygon>,
    ) -> Result<Self, GeometryError> {
        if image_width == 0 || image_height == 0 {
            return Err(GeometryError::InvalidGeometry("zero image dimensions".into()));
        }
        if !(0.0..=1.0).contains(&road_fraction_threshold) {
            return Err(GeometryError::InvalidGeometry(format!(
                "road_fraction_threshold {road_fraction_threshold} outside [0, 1]"
            )));
        }
        let mut ids = std::collections::BTreeSet::new();
        for lot in &lots {
            if !ids.insert(lot.id) {
                return Err(GeometryError::InvalidGeometry(format!("duplicate lot id {}", lot.id)));
            }
        }
        let in_bounds = |poly: &Polygon| {
            poly.vertices().iter().all(|v| {
                v[0] >= 0.0 && v[0] <= image_width as f64 && v[1] >= 0.0 && v[1] <= image_height as f64
            })
        };
        for lot in &lots {
            if !in_bounds(&lot.polygon) {
                return Err(GeometryError::InvalidGeometry(format!(
                    "lot {} polygon outside image bounds",
                    lot.id
                )));
            }
        }
        if let Some(i) = road_areas.iter().position(|p| !in_bounds(p)) {
            return Err(GeometryError::InvalidGeometry(format!(
                "road area {i} polygon outside image bounds"
            )));
        }
        Ok(SiteGeometry {
            image_width,
            image_height,
            road_fraction_threshold,
            lots,
            road_areas,
        })
    }

    pub fn lot(&self, id: u32) -> Option<&LotRegion> {
        self.lots.iter().find(|l| l.id == id)
    }
}

impl TryFrom<RawGeometry> for SiteGeometry {
    type Error = GeometryError;

    fn try_from(raw: RawGeometry) -> Result<Self, Self::Error> {
        let lots = raw
            .lots
            .into_iter()
            .map(|l| LotRegion::new(l.id, l.polygon))
            .collect::<Result<Vec<_>, _>>()?;
        let road_areas = raw.road_areas.into_iter().map(|r| r.polygon).collect();
        SiteGeometry::new(
            raw.image_width,
            raw.image_height,
            raw.road_fraction_threshold,
            lots,
            road_areas,
        )
    }
}

impl From<SiteGeometry> for RawGeometry {
    fn from(g: SiteGeometry) -> Self {
        RawGeometry {
            image_width: g.image_width,
            image_height: g.image_height,
            road_fraction_threshold: g.road_fraction_threshold,
            lots: g
                .lots
                .into_iter()
                .map(|l| RawLot { id: l.id, polygon: l.polygon })
                .collect(),
            road_areas: g.road_areas.into_iter().map(|polygon| RawRoadArea { polygon }).collect(),
        }
    }
}

/// One smoothed utilization measurement for one lot at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilizationSample {
    pub lot_id: u32,
    pub time_s: f64,
    pub utilization: f64,
}

/// Fraction of the mask's pixels whose centers lie inside `region`.
pub fn region_fraction(mask: &MaskFootprint, region: &Polygon) -> Result<f64, GeometryError> {
    mask.validate()?;
    let total = mask.area();
    if total == 0 {
        return Err(GeometryError::EmptyMask);
    }
    let (x_min, y_min, x_max, y_max) = region.bbox();
    let mut inside: u64 = 0;
    for row in &mask.rows {
        let cy = row.y as f64 + 0.5;
        if cy < y_min || cy > y_max {
            continue;
        }
        for &(start, end) in &row.runs {
            for x in start..end {
                let cx = x as f64 + 0.5;
                if cx < x_min || cx > x_max {
                    continue;
                }
                if region.contains(cx, cy) {
                    inside += 1;
                }
            }
        }
    }
    Ok(inside as f64 / total as f64)
}

/// Area-threshold classification of one detection mask.
///
/// A mask whose summed road-area fraction exceeds the configured threshold
/// is not parked (vehicle in traffic or an obstruction). Otherwise it is
/// assigned to the lot with the largest overlap fraction, ties going to the
/// lower lot id; zero overlap with every lot also means not parked.
pub fn classify_parked(mask: &MaskFootprint, geom: &SiteGeometry) -> Result<ParkStatus, GeometryError> {
    let mut road_sum = 0.0;
    for road in &geom.road_areas {
        road_sum += region_fraction(mask, road)?;
    }
    if road_sum > geom.road_fraction_threshold {
        return Ok(ParkStatus::NotParked);
    }
    let mut best: Option<(f64, u32)> = None;
    for lot in &geom.lots {
        let frac = region_fraction(mask, &lot.polygon)?;
        best = match best {
            None => Some((frac, lot.id)),
            Some((bf, bid)) if frac > bf || (frac == bf && lot.id < bid) => Some((frac, lot.id)),
            keep => keep,
        };
    }
    match best {
        Some((frac, id)) if frac > 0.0 => Ok(ParkStatus::Parked(id)),
        _ => Ok(ParkStatus::NotParked),
    }
}

/// Occupied fraction of a lot's horizontal extent.
///
/// Spans are clipped to the lot extent and unioned so overlapping
/// detections are not double counted. The result is clamped to `[0, 1]`.
pub fn lot_utilization(lot: &LotRegion, parked_spans: &[Span]) -> Result<f64, GeometryError> {
    let extent = lot.x_max - lot.x_min;
    if extent <= 0.0 {
        return Err(GeometryError::DegenerateLot {
            lot_id: lot.id,
            x_min: lot.x_min,
            x_max: lot.x_max,
        });
    }
    let clipped: Vec<Span> = parked_spans
        .iter()
        .filter_map(|s| s.clip(lot.x_min, lot.x_max))
        .collect();
    Ok((union_length(&clipped) / extent).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn span(l: f64, r: f64) -> Span {
        Span::new(l, r).unwrap()
    }

    /// Textbook even-odd test written independently of `Polygon::contains`.
    fn oracle_point_in_polygon(vertices: &[[f64; 2]], px: f64, py: f64) -> bool {
        let n = vertices.len();
        // Boundary counts as inside.
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let cross = (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0]);
            if cross == 0.0
                && px >= a[0].min(b[0])
                && px <= a[0].max(b[0])
                && py >= a[1].min(b[1])
                && py <= a[1].max(b[1])
            {
                return true;
            }
        }
        let mut crossings = 0;
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            if (a[1] > py) != (b[1] > py) {
                let t = (py - a[1]) / (b[1] - a[1]);
                if px < a[0] + t * (b[0] - a[0]) {
                    crossings += 1;
                }
            }
        }
        crossings % 2 == 1
    }

    fn random_star_polygon(rng: &mut ChaCha8Rng) -> Polygon {
        loop {
            let cx = rng.gen_range(20.0..80.0f64);
            let cy = rng.gen_range(20.0..80.0f64);
            let k = rng.gen_range(3..9usize);
            let mut angles: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
            angles.sort_by(f64::total_cmp);
            let mut verts: Vec<[f64; 2]> = angles
                .iter()
                .map(|&a| {
                    let r = rng.gen_range(5.0..20.0f64);
                    [(cx + r * a.cos()).round(), (cy + r * a.sin()).round()]
                })
                .collect();
            verts.dedup();
            if verts.len() > 1 && verts.first() == verts.last() {
                verts.pop();
            }
            if verts.len() >= 3 {
                if let Ok(p) = Polygon::new(verts) {
                    return p;
                }
            }
        }
    }

    fn random_mask(rng: &mut ChaCha8Rng) -> MaskFootprint {
        let y0 = rng.gen_range(0..80u32);
        let h = rng.gen_range(1..12u32);
        let rows = (y0..y0 + h)
            .map(|y| {
                let x0 = rng.gen_range(0..80u32);
                let w = rng.gen_range(1..25u32);
                MaskRow { y, runs: vec![(x0, x0 + w)] }
            })
            .collect();
        MaskFootprint::new(rows).unwrap()
    }

    #[test]
    fn rejects_self_intersecting_polygon() {
        // Bowtie.
        let verts = vec![[0.0, 0.0], [10.0, 10.0], [10.0, 0.0], [0.0, 10.0]];
        assert!(Polygon::new(verts).is_err());
    }

    #[test]
    fn rejects_too_few_vertices() {
        assert!(Polygon::new(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
    }

    #[test]
    fn boundary_is_inside() {
        let poly = Polygon::rectangle(0.0, 0.0, 10.0, 10.0).unwrap();
        assert!(poly.contains(0.0, 5.0));
        assert!(poly.contains(10.0, 10.0));
        assert!(poly.contains(5.0, 5.0));
        assert!(!poly.contains(10.1, 5.0));
    }

    #[test]
    fn region_fraction_containment() {
        let mask = MaskFootprint::rectangle(10, 20, 10, 15).unwrap();
        let all = Polygon::rectangle(0.0, 0.0, 100.0, 100.0).unwrap();
        let none = Polygon::rectangle(50.0, 50.0, 100.0, 100.0).unwrap();
        assert_eq!(region_fraction(&mask, &all).unwrap(), 1.0);
        assert_eq!(region_fraction(&mask, &none).unwrap(), 0.0);
    }

    #[test]
    fn region_fraction_half() {
        // Mask rows y in [0,10) x [0,100); region covers x in [0,50).
        let mask = MaskFootprint::rectangle(0, 100, 0, 10).unwrap();
        let region = Polygon::rectangle(0.0, 0.0, 50.0, 10.0).unwrap();
        assert_eq!(region_fraction(&mask, &region).unwrap(), 0.5);
    }

    #[test]
    fn region_fraction_rejects_empty_mask() {
        let mask = MaskFootprint { rows: vec![] };
        let region = Polygon::rectangle(0.0, 0.0, 10.0, 10.0).unwrap();
        let err = region_fraction(&mask, &region).unwrap_err();
        assert!(err.to_string().contains("empty mask"));
    }

    #[test]
    fn region_fraction_matches_per_pixel_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9e3779b9);
        for _ in 0..1000 {
            let poly = random_star_polygon(&mut rng);
            let mask = random_mask(&mut rng);
            let got = region_fraction(&mask, &poly).unwrap();
            let mut inside = 0u64;
            let mut total = 0u64;
            for row in &mask.rows {
                for &(s, e) in &row.runs {
                    for x in s..e {
                        total += 1;
                        if oracle_point_in_polygon(poly.vertices(), x as f64 + 0.5, row.y as f64 + 0.5) {
                            inside += 1;
                        }
                    }
                }
            }
            let expected = inside as f64 / total as f64;
            assert_eq!(got, expected, "fraction mismatch for {poly:?}");
            assert!((0.0..=1.0).contains(&got));
        }
    }

    fn test_geometry() -> SiteGeometry {
        let lot0 = LotRegion::new(0, Polygon::rectangle(0.0, 0.0, 60.0, 40.0).unwrap()).unwrap();
        let lot1 = LotRegion::new(1, Polygon::rectangle(60.0, 0.0, 150.0, 40.0).unwrap()).unwrap();
        let lot2 = LotRegion::new(2, Polygon::rectangle(150.0, 0.0, 200.0, 40.0).unwrap()).unwrap();
        let road = Polygon::rectangle(0.0, 40.0, 200.0, 80.0).unwrap();
        SiteGeometry::new(200, 80, 0.5, vec![lot0, lot1, lot2], vec![road]).unwrap()
    }

    #[test]
    fn classify_fully_in_lot() {
        let geom = test_geometry();
        let mask = MaskFootprint::rectangle(160, 190, 5, 15).unwrap();
        assert_eq!(classify_parked(&mask, &geom).unwrap(), ParkStatus::Parked(2));
    }

    #[test]
    fn classify_mostly_on_road() {
        let geom = test_geometry();
        // 60% of rows inside the road band y >= 40.
        let mask = MaskFootprint::rectangle(10, 50, 34, 44).unwrap();
        let road_frac = region_fraction(&mask, &geom.road_areas[0]).unwrap();
        assert!(road_frac > 0.3);
        let mask = MaskFootprint::rectangle(10, 50, 36, 46).unwrap();
        assert_eq!(classify_parked(&mask, &geom).unwrap(), ParkStatus::NotParked);
    }

    #[test]
    fn classify_picks_max_overlap_lot() {
        let geom = test_geometry();
        // 100-pixel-wide single row: 30 px in lot 0, 45 px in lot 1, the
        // remainder past x=105 split between lot 1 and nothing; y stays off
        // the road.
        let mask = MaskFootprint {
            rows: vec![MaskRow { y: 10, runs: vec![(30, 130)] }],
        };
        // lot0 gets x in [30,60) = 30 px; lot1 gets [60,130) = 70 px.
        assert_eq!(classify_parked(&mask, &geom).unwrap(), ParkStatus::Parked(1));
    }

    #[test]
    fn classify_zero_overlap_is_not_parked() {
        let lot = LotRegion::new(7, Polygon::rectangle(0.0, 0.0, 50.0, 10.0).unwrap()).unwrap();
        let geom = SiteGeometry::new(300, 300, 0.5, vec![lot], vec![]).unwrap();
        let mask = MaskFootprint::rectangle(100, 120, 100, 110).unwrap();
        assert_eq!(classify_parked(&mask, &geom).unwrap(), ParkStatus::NotParked);
    }

    #[test]
    fn raising_threshold_never_unparks() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mask = random_mask(&mut rng);
            let lot = LotRegion::new(0, Polygon::rectangle(0.0, 0.0, 104.0, 92.0).unwrap()).unwrap();
            let road = Polygon::rectangle(0.0, 30.0, 104.0, 60.0).unwrap();
            let lo = SiteGeometry::new(104, 92, 0.2, vec![lot.clone()], vec![road.clone()]).unwrap();
            let hi = SiteGeometry::new(104, 92, 0.8, vec![lot], vec![road]).unwrap();
            let with_lo = classify_parked(&mask, &lo).unwrap();
            let with_hi = classify_parked(&mask, &hi).unwrap();
            if let ParkStatus::Parked(_) = with_lo {
                assert_eq!(with_lo, with_hi, "raising threshold flipped Parked -> NotParked");
            }
        }
    }

    #[test]
    fn utilization_examples() {
        let lot = LotRegion::new(0, Polygon::rectangle(100.0, 0.0, 300.0, 10.0).unwrap()).unwrap();
        assert_eq!(lot_utilization(&lot, &[span(150.0, 250.0)]).unwrap(), 0.5);
        assert_eq!(lot_utilization(&lot, &[]).unwrap(), 0.0);
        assert_eq!(
            lot_utilization(&lot, &[span(100.0, 200.0), span(150.0, 300.0)]).unwrap(),
            1.0
        );
    }

    #[test]
    fn utilization_ignores_out_of_lot_coverage() {
        let lot = LotRegion::new(0, Polygon::rectangle(100.0, 0.0, 300.0, 10.0).unwrap()).unwrap();
        let u = lot_utilization(&lot, &[span(0.0, 150.0), span(280.0, 900.0)]).unwrap();
        assert!((u - (50.0 + 20.0) / 200.0).abs() < 1e-12);
    }

    #[test]
    fn utilization_monotone_and_permutation_invariant() {
        let lot = LotRegion::new(0, Polygon::rectangle(0.0, 0.0, 500.0, 10.0).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let mut spans: Vec<Span> = (0..rng.gen_range(0..8))
                .map(|_| {
                    let l = rng.gen_range(0.0..450.0);
                    span(l, l + rng.gen_range(0.0..100.0))
                })
                .collect();
            let base = lot_utilization(&lot, &spans).unwrap();
            assert!((0.0..=1.0).contains(&base));
            let extra = span(10.0, 60.0);
            spans.push(extra);
            let more = lot_utilization(&lot, &spans).unwrap();
            assert!(more >= base - 1e-12);
            spans.reverse();
            let rev = lot_utilization(&lot, &spans).unwrap();
            assert!((more - rev).abs() < 1e-12);
        }
    }

    #[test]
    fn geometry_json_round_trip() {
        let geom = test_geometry();
        let js = serde_json::to_string(&geom).unwrap();
        let back: SiteGeometry = serde_json::from_str(&js).unwrap();
        assert_eq!(geom, back);
    }

    #[test]
    fn geometry_validation_rejects_bad_inputs() {
        let lot = LotRegion::new(0, Polygon::rectangle(0.0, 0.0, 10.0, 10.0).unwrap()).unwrap();
        assert!(SiteGeometry::new(100, 100, 1.5, vec![lot.clone()], vec![]).is_err());
        assert!(SiteGeometry::new(100, 100, 0.5, vec![lot.clone(), lot.clone()], vec![]).is_err());
        // Polygon reaching outside the image.
        let big = LotRegion::new(1, Polygon::rectangle(0.0, 0.0, 500.0, 10.0).unwrap()).unwrap();
        assert!(SiteGeometry::new(100, 100, 0.5, vec![big], vec![]).is_err());
    }
}
