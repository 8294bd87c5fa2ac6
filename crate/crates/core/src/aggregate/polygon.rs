use serde::{Deserialize, Serialize};

use super::{AggregateError, CityId};

/// A closed ring of `(lon, lat)` vertices; first vertex equals last.
pub type Ring = Vec<(f64, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UrbanBoundary {
    pub city_id: CityId,
    pub country: String,
    /// One entry per polygon; each polygon is an outer ring followed by holes.
    pub polygons: Vec<Vec<Ring>>,
    pub utc_offset_minutes: i32,
    pub population_2000: Option<f64>,
    pub population_2010: Option<f64>,
}

impl UrbanBoundary {
    pub fn validate(&self) -> Result<(), AggregateError> {
        let city = self.city_id;
        if self.polygons.iter().all(|p| p.is_empty()) {
            return Err(AggregateError::NoGeometry { city });
        }
        for (ring, r) in self.polygons.iter().flatten().enumerate() {
            if r.len() < 4 {
                return Err(AggregateError::ShortRing { city, ring });
            }
            if r.first() != r.last() {
                return Err(AggregateError::OpenRing { city, ring });
            }
        }
        for value in [self.population_2000, self.population_2010].into_iter().flatten() {
            if !(value > 0.0) {
                return Err(AggregateError::Population { city, value });
            }
        }
        if self.utc_offset_minutes.abs() > 14 * 60 {
            return Err(AggregateError::UtcOffset { city, minutes: self.utc_offset_minutes });
        }
        Ok(())
    }

    /// Axis-aligned bounding box `(min_lon, min_lat, max_lon, max_lat)`.
    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in self.polygons.iter().flatten().flatten() {
            b.0 = b.0.min(x);
            b.1 = b.1.min(y);
            b.2 = b.2.max(x);
            b.3 = b.3.max(y);
        }
        b
    }

    /// Latitude of the bounding-box centre, used as the city's latitude feature.
    pub fn latitude(&self) -> f64 {
        let (_, y0, _, y1) = self.bbox();
        0.5 * (y0 + y1)
    }

    /// Even-odd containment per polygon; points on any edge are inside.
    pub fn contains(&self, lon: f64, lat: f64) -> bool {
        self.polygons.iter().any(|rings| polygon_contains(rings, lon, lat))
    }
}

fn polygon_contains(rings: &[Ring], x: f64, y: f64) -> bool {
    let mut inside = false;
    for ring in rings {
        for w in ring.windows(2) {
            let ((xi, yi), (xj, yj)) = (w[0], w[1]);
            if on_segment((xi, yi), (xj, yj), (x, y)) {
                return true;
            }
            if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
                inside = !inside;
            }
        }
    }
    inside
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
    cross == 0.0 && p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

/// Validated boundaries ordered by city id, with bounding boxes for a cheap
/// pre-filter.
#[derive(Debug, Clone, Default)]
pub struct Boundaries {
    cities: Vec<UrbanBoundary>,
    bboxes: Vec<(f64, f64, f64, f64)>,
}

impl Boundaries {
    pub fn new(mut cities: Vec<UrbanBoundary>) -> Result<Self, AggregateError> {
        for c in &cities {
            c.validate()?;
        }
        cities.sort_by_key(|c| c.city_id);
        if let Some(w) = cities.windows(2).find(|w| w[0].city_id == w[1].city_id) {
            return Err(AggregateError::DuplicateCity(w[0].city_id));
        }
        let bboxes = cities.iter().map(UrbanBoundary::bbox).collect();
        Ok(Self { cities, bboxes })
    }

    pub fn cities(&self) -> &[UrbanBoundary] {
        &self.cities
    }

    pub fn get(&self, city: CityId) -> Option<&UrbanBoundary> {
        self.cities
            .binary_search_by_key(&city, |c| c.city_id)
            .ok()
            .map(|i| &self.cities[i])
    }

    /// Lowest city id whose boundary contains the point.
    pub fn city_at(&self, lon: f64, lat: f64) -> Option<CityId> {
        self.cities
            .iter()
            .zip(&self.bboxes)
            .find(|(c, b)| lon >= b.0 && lon <= b.2 && lat >= b.1 && lat <= b.3 && c.contains(lon, lat))
            .map(|(c, _)| c.city_id)
    }
}

pub fn point_in_city(lon: f64, lat: f64, boundaries: &Boundaries) -> Option<CityId> {
    boundaries.city_at(lon, lat)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn square(id: CityId, x0: f64, y0: f64, side: f64) -> UrbanBoundary {
        UrbanBoundary {
            city_id: id,
            country: "AAA".into(),
            polygons: vec![vec![vec![(x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side), (x0, y0)]]],
            utc_offset_minutes: 0,
            population_2000: Some(1000.0),
            population_2010: Some(2000.0),
        }
    }

    #[test]
    fn centroid_is_inside() {
        let b = Boundaries::new(vec![square(1, 0.0, 0.0, 1.0)]).unwrap();
        assert_eq!(point_in_city(0.5, 0.5, &b), Some(1));
    }

    #[test]
    fn outside_is_unassigned() {
        let b = Boundaries::new(vec![square(1, 0.0, 0.0, 1.0), square(2, 5.0, 5.0, 1.0)]).unwrap();
        assert_eq!(point_in_city(2.0, 2.0, &b), None);
        assert_eq!(point_in_city(-0.1, 0.5, &b), None);
    }

    #[test]
    fn overlap_prefers_lowest_id() {
        let squares = vec![square(7, 0.0, 0.0, 2.0), square(3, 1.0, 1.0, 2.0)];
        // Oracle: evaluate each polygon independently, apply the tie rule.
        let p = (1.5, 1.5);
        let mut containing: Vec<_> = squares.iter().filter(|s| s.contains(p.0, p.1)).map(|s| s.city_id).collect();
        containing.sort();
        assert_eq!(containing, vec![3, 7]);
        let b = Boundaries::new(squares).unwrap();
        assert_eq!(point_in_city(p.0, p.1, &b), Some(3));
        assert_eq!(point_in_city(0.5, 0.5, &b), Some(7));
    }

    #[test]
    fn edges_and_vertices_are_inside() {
        let b = Boundaries::new(vec![square(1, 0.0, 0.0, 1.0)]).unwrap();
        for p in [(0.0, 0.5), (1.0, 0.5), (0.5, 0.0), (0.5, 1.0), (0.0, 0.0), (1.0, 1.0)] {
            assert_eq!(point_in_city(p.0, p.1, &b), Some(1), "{p:?}");
        }
    }

    #[test]
    fn holes_are_outside() {
        let mut c = square(1, 0.0, 0.0, 4.0);
        c.polygons[0].push(vec![(1.0, 1.0), (3.0, 1.0), (3.0, 3.0), (1.0, 3.0), (1.0, 1.0)]);
        assert!(!c.contains(2.0, 2.0));
        assert!(c.contains(0.5, 2.0));
        assert!(c.contains(1.0, 2.0)); // on the hole's edge
    }

    #[test]
    fn validation_rejects_bad_boundaries() {
        let mut open = square(1, 0.0, 0.0, 1.0);
        open.polygons[0][0].pop();
        assert!(matches!(open.validate(), Err(AggregateError::OpenRing { .. }) | Err(AggregateError::ShortRing { .. })));
        let mut pop = square(2, 0.0, 0.0, 1.0);
        pop.population_2000 = Some(0.0);
        assert!(matches!(pop.validate(), Err(AggregateError::Population { .. })));
        let mut tz = square(3, 0.0, 0.0, 1.0);
        tz.utc_offset_minutes = 15 * 60;
        assert!(matches!(tz.validate(), Err(AggregateError::UtcOffset { .. })));
        assert!(matches!(
            Boundaries::new(vec![square(4, 0.0, 0.0, 1.0), square(4, 2.0, 0.0, 1.0)]),
            Err(AggregateError::DuplicateCity(4))
        ));
    }

    #[test]
    fn latitude_is_bbox_centre() {
        assert_eq!(square(1, 10.0, -40.0, 1.0).latitude(), -39.5);
    }
}
