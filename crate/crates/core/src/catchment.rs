//! Station catchment circles and the counties they touch.
//!
//! Edge proximity is measured on an equirectangular projection centred on
//! the station, which is accurate to well under a percent for radii up to
//! about 10 km.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::exec::Execution;

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Conventional bicycle catchment distance, 3 miles.
pub const DEFAULT_RADIUS_M: f64 = 4_828.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("polygon {0:?} has fewer than 3 distinct vertices")]
    DegeneratePolygon(String),
    #[error("polygon {0:?} has holes, which are not supported")]
    PolygonWithHoles(String),
    #[error("invalid coordinate: {0}")]
    InvalidCoordinate(String),
    #[error("radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("invalid GeoJSON: {0}")]
    GeoJson(String),
}

pub type Result<T> = std::result::Result<T, GeoError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::InvalidCoordinate(format!("({lat}, {lon})")));
        }
        Ok(Self { lat, lon })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub station_id: String,
    pub name: String,
    pub location: LatLon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatchmentCircle {
    pub center: Station,
    pub radius_m: f64,
}

impl CatchmentCircle {
    pub fn new(center: Station, radius_m: f64) -> Result<Self> {
        if !(radius_m > 0.0) || !radius_m.is_finite() {
            return Err(GeoError::InvalidRadius(radius_m));
        }
        Ok(Self { center, radius_m })
    }
}

/// Outer ring of a county boundary; closure is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct CountyPolygon {
    pub name: String,
    pub ring: Vec<LatLon>,
}

impl CountyPolygon {
    /// Drops an explicit closing vertex and rejects rings with fewer than
    /// three vertices.
    pub fn new(name: impl Into<String>, mut ring: Vec<LatLon>) -> Result<Self> {
        let name = name.into();
        if ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
        }
        if ring.len() < 3 {
            return Err(GeoError::DegeneratePolygon(name));
        }
        Ok(Self { name, ring })
    }
}

/// Great-circle distance in meters.
pub fn haversine(a: LatLon, b: LatLon) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Local planar coordinates in meters relative to `origin`.
fn project(origin: LatLon, p: LatLon) -> (f64, f64) {
    let mut dlon = p.lon - origin.lon;
    if dlon > 180.0 {
        dlon -= 360.0;
    } else if dlon < -180.0 {
        dlon += 360.0;
    }
    let x = dlon.to_radians() * origin.lat.to_radians().cos() * EARTH_RADIUS_M;
    let y = (p.lat - origin.lat).to_radians() * EARTH_RADIUS_M;
    (x, y)
}

/// Distance from the origin to the segment from `a` to `b`.
fn origin_segment_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let s = if len2 == 0.0 {
        0.0
    } else {
        (-(a.0 * dx + a.1 * dy) / len2).clamp(0.0, 1.0)
    };
    (a.0 + s * dx).hypot(a.1 + s * dy)
}

/// Even-odd test of the origin against a projected ring.
fn origin_inside(ring: &[(f64, f64)]) -> bool {
    let mut inside = false;
    let mut j = ring.len() - 1;
    for i in 0..ring.len() {
        let (xi, yi) = ring[i];
        let (xj, yj) = ring[j];
        if (yi > 0.0) != (yj > 0.0) {
            let x_cross = xi + (0.0 - yi) * (xj - xi) / (yj - yi);
            if x_cross > 0.0 {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// True when the station lies inside the polygon or any edge comes within
/// the circle's radius.
pub fn circle_touches_polygon(circle: &CatchmentCircle, polygon: &CountyPolygon) -> Result<bool> {
    if polygon.ring.len() < 3 {
        return Err(GeoError::DegeneratePolygon(polygon.name.clone()));
    }
    let origin = circle.center.location;
    let ring: Vec<(f64, f64)> = polygon.ring.iter().map(|p| project(origin, *p)).collect();
    if origin_inside(&ring) {
        return Ok(true);
    }
    let n = ring.len();
    Ok((0..n).any(|i| origin_segment_distance(ring[i], ring[(i + 1) % n]) <= circle.radius_m))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountyAssignment {
    pub counties: BTreeMap<String, BTreeSet<String>>,
    /// Stations whose catchment touches no county.
    pub unassigned: Vec<String>,
}

pub fn assign_counties(
    stations: &[Station],
    polygons: &[CountyPolygon],
    radius_m: f64,
    exec: Execution,
) -> Result<CountyAssignment> {
    if !(radius_m > 0.0) {
        return Err(GeoError::InvalidRadius(radius_m));
    }
    let per_station = exec.map(stations, |station| -> Result<(String, BTreeSet<String>)> {
        let circle = CatchmentCircle::new(station.clone(), radius_m)?;
        let mut set = BTreeSet::new();
        for polygon in polygons {
            if circle_touches_polygon(&circle, polygon)? {
                set.insert(polygon.name.clone());
            }
        }
        Ok((station.station_id.clone(), set))
    });
    let mut out = CountyAssignment::default();
    for item in per_station {
        let (id, set) = item?;
        if set.is_empty() {
            out.unassigned.push(id);
        } else {
            out.counties.insert(id, set);
        }
    }
    Ok(out)
}

/// Reads a FeatureCollection of Polygon features named by their `name`
/// property. Only outer rings are accepted; rings with holes are rejected.
pub fn parse_counties_geojson(text: &str) -> Result<Vec<CountyPolygon>> {
    let root: Value = serde_json::from_str(text).map_err(|e| GeoError::GeoJson(e.to_string()))?;
    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(GeoError::GeoJson("expected a FeatureCollection".into()));
    }
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| GeoError::GeoJson("missing features array".into()))?;
    features
        .iter()
        .enumerate()
        .map(|(i, feature)| {
            let name = feature
                .pointer("/properties/name")
                .and_then(Value::as_str)
                .ok_or_else(|| GeoError::GeoJson(format!("feature {i}: missing name property")))?;
            let geometry = feature
                .get("geometry")
                .ok_or_else(|| GeoError::GeoJson(format!("{name}: missing geometry")))?;
            if geometry.get("type").and_then(Value::as_str) != Some("Polygon") {
                return Err(GeoError::GeoJson(format!("{name}: geometry is not a Polygon")));
            }
            let rings = geometry
                .get("coordinates")
                .and_then(Value::as_array)
                .ok_or_else(|| GeoError::GeoJson(format!("{name}: missing coordinates")))?;
            if rings.len() > 1 {
                return Err(GeoError::PolygonWithHoles(name.to_string()));
            }
            let outer = rings
                .first()
                .and_then(Value::as_array)
                .ok_or_else(|| GeoError::GeoJson(format!("{name}: empty coordinates")))?;
            let ring = outer
                .iter()
                .map(|pos| {
                    let lon = pos.get(0).and_then(Value::as_f64);
                    let lat = pos.get(1).and_then(Value::as_f64);
                    match (lat, lon) {
                        (Some(lat), Some(lon)) => LatLon::new(lat, lon),
                        _ => Err(GeoError::GeoJson(format!("{name}: bad position {pos}"))),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            CountyPolygon::new(name, ring)
        })
        .collect()
}

pub const STATIONS_HEADER: [&str; 4] = ["station_id", "name", "latitude", "longitude"];

/// Reads `station_id,name,latitude,longitude` rows.
pub fn parse_stations_csv(text: &str) -> Result<Vec<Station>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| GeoError::InvalidCoordinate(e.to_string()))?;
    if header.iter().ne(STATIONS_HEADER) {
        return Err(GeoError::InvalidCoordinate(format!(
            "expected header {}",
            STATIONS_HEADER.join(",")
        )));
    }
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(|e| GeoError::InvalidCoordinate(e.to_string()))?;
            let num = |i: usize| {
                rec[i].parse::<f64>().map_err(|_| {
                    GeoError::InvalidCoordinate(format!("station {}: {:?}", &rec[0], &rec[i]))
                })
            };
            Ok(Station {
                station_id: rec[0].to_string(),
                name: rec[1].to_string(),
                location: LatLon::new(num(2)?, num(3)?)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ll(lat: f64, lon: f64) -> LatLon {
        LatLon::new(lat, lon).unwrap()
    }

    fn station(id: &str, lat: f64, lon: f64) -> Station {
        Station {
            station_id: id.into(),
            name: id.into(),
            location: ll(lat, lon),
        }
    }

    fn square(name: &str, lat0: f64, lon0: f64, lat1: f64, lon1: f64) -> CountyPolygon {
        CountyPolygon::new(
            name,
            vec![ll(lat0, lon0), ll(lat0, lon1), ll(lat1, lon1), ll(lat1, lon0)],
        )
        .unwrap()
    }

    /// Meters per degree of latitude on the sphere used here.
    const M_PER_DEG: f64 = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;

    #[test]
    fn haversine_reference_distances() {
        assert_eq!(haversine(ll(39.7392, -104.9903), ll(39.7392, -104.9903)), 0.0);
        // independent great-circle evaluation gives 38 887.06 m
        let d = haversine(ll(39.7392, -104.9903), ll(40.0150, -105.2705));
        assert!((d - 38_887.0).abs() < 200.0, "{d}");
        let eq = haversine(ll(0.0, 0.0), ll(0.0, 1.0));
        assert!((eq - 111_195.0).abs() < 50.0, "{eq}");
    }

    #[test]
    fn inside_outside_and_near_edge() {
        let big = square("big", 39.0, -106.0, 41.0, -104.0);
        let c = CatchmentCircle::new(station("s", 40.0, -105.0), 1_000.0).unwrap();
        assert!(circle_touches_polygon(&c, &big).unwrap());

        // 10 km south of the square's southern edge
        let lat = 39.0 - 10_000.0 / M_PER_DEG;
        let c = CatchmentCircle::new(station("s", lat, -105.0), 1_000.0).unwrap();
        assert!(!circle_touches_polygon(&c, &big).unwrap());

        // nearest edge at 0.9 × radius
        let lat = 39.0 - 900.0 / M_PER_DEG;
        let c = CatchmentCircle::new(station("s", lat, -105.0), 1_000.0).unwrap();
        assert!(circle_touches_polygon(&c, &big).unwrap());
        let c = CatchmentCircle::new(station("s", lat, -105.0), 850.0).unwrap();
        assert!(!circle_touches_polygon(&c, &big).unwrap());
    }

    #[test]
    fn degenerate_polygons() {
        let two = vec![ll(0.0, 0.0), ll(1.0, 1.0)];
        assert_eq!(
            CountyPolygon::new("x", two.clone()),
            Err(GeoError::DegeneratePolygon("x".into()))
        );
        let closed = vec![ll(0.0, 0.0), ll(1.0, 1.0), ll(0.0, 0.0)];
        assert!(CountyPolygon::new("x", closed).is_err());
        let raw = CountyPolygon {
            name: "raw".into(),
            ring: two,
        };
        let c = CatchmentCircle::new(station("s", 0.0, 0.0), 10.0).unwrap();
        assert!(circle_touches_polygon(&c, &raw).is_err());
    }

    #[test]
    fn assignment_examples() {
        let west = square("West", 39.0, -106.0, 40.0, -105.0);
        let east = square("East", 39.0, -105.0, 40.0, -104.0);
        let polygons = [west, east];

        let a = assign_counties(&[station("in", 39.5, -105.5)], &polygons, 100.0, Execution::Sequential).unwrap();
        assert_eq!(a.counties["in"], BTreeSet::from(["West".to_string()]));

        let a = assign_counties(&[station("border", 39.5, -105.0)], &polygons, 100.0, Execution::Sequential).unwrap();
        assert_eq!(a.counties["border"].len(), 2);

        // 2 km west of the shared line with a 3-mile radius
        let dlon = 2_000.0 / (M_PER_DEG * 39.5f64.to_radians().cos());
        let a = assign_counties(
            &[station("near", 39.5, -105.0 - dlon)],
            &polygons,
            DEFAULT_RADIUS_M,
            Execution::Parallel,
        )
        .unwrap();
        assert_eq!(a.counties["near"].len(), 2);

        let a = assign_counties(&[station("far", 10.0, 10.0)], &polygons, 100.0, Execution::Sequential).unwrap();
        assert_eq!(a.unassigned, vec!["far".to_string()]);
    }

    #[test]
    fn geojson_counties() {
        let text = r#"{"type": "FeatureCollection", "features": [
            {"type": "Feature", "properties": {"name": "Denver"},
             "geometry": {"type": "Polygon", "coordinates": [[[-105.1, 39.6], [-104.6, 39.6], [-104.6, 39.9], [-105.1, 39.9], [-105.1, 39.6]]]}}
        ]}"#;
        let polys = parse_counties_geojson(text).unwrap();
        assert_eq!(polys[0].name, "Denver");
        assert_eq!(polys[0].ring.len(), 4);
        assert_eq!(polys[0].ring[0], ll(39.6, -105.1));

        let holes = text.replace(
            "[-105.1, 39.6]]]",
            "[-105.1, 39.6]], [[-105.0, 39.7], [-104.9, 39.7], [-104.9, 39.8]]]",
        );
        assert_eq!(
            parse_counties_geojson(&holes),
            Err(GeoError::PolygonWithHoles("Denver".into()))
        );
        let multi = text.replace("\"Polygon\"", "\"MultiPolygon\"");
        assert!(parse_counties_geojson(&multi).is_err());
    }

    #[test]
    fn stations_csv() {
        let s = parse_stations_csv("station_id,name,latitude,longitude\n7,Cherry Creek,39.71,-104.95\n").unwrap();
        assert_eq!(s[0].location, ll(39.71, -104.95));
        assert!(parse_stations_csv("station_id,name,latitude,longitude\n7,x,95.0,0\n").is_err());
    }

    fn coord() -> impl Strategy<Value = LatLon> {
        (-80.0f64..80.0, -179.0f64..179.0).prop_map(|(lat, lon)| LatLon { lat, lon })
    }

    proptest! {
        #[test]
        fn haversine_symmetric_and_triangle(a in coord(), b in coord(), c in coord()) {
            prop_assert_eq!(haversine(a, b), haversine(b, a));
            let (ab, bc, ac) = (haversine(a, b), haversine(b, c), haversine(a, c));
            prop_assert!(ac <= (ab + bc) * (1.0 + 1e-6) + 1e-6);
        }

        #[test]
        fn rotation_invariant_and_radius_monotone(
            lat in 39.0f64..41.0, lon in -106.0f64..-104.0,
            r1 in 10.0f64..20_000.0, extra in 0.0f64..20_000.0, shift in 0usize..4,
        ) {
            let poly = square("sq", 39.8, -105.2, 40.2, -104.8);
            let mut rotated = poly.clone();
            rotated.ring.rotate_left(shift);
            let c1 = CatchmentCircle::new(station("s", lat, lon), r1).unwrap();
            let c2 = CatchmentCircle::new(station("s", lat, lon), r1 + extra).unwrap();
            let t1 = circle_touches_polygon(&c1, &poly).unwrap();
            prop_assert_eq!(t1, circle_touches_polygon(&c1, &rotated).unwrap());
            if t1 {
                prop_assert!(circle_touches_polygon(&c2, &poly).unwrap());
            }
        }
    }
}
