use bikeshift::catchment::{assign_counties, haversine, parse_counties_geojson, CountyPolygon, LatLon, Station};
use bikeshift::exec::Execution;
use proptest::prelude::*;

fn square(name: &str, lat0: f64, lon0: f64, size: f64) -> CountyPolygon {
    let ring = [(lat0, lon0), (lat0, lon0 + size), (lat0 + size, lon0 + size), (lat0 + size, lon0)]
        .iter()
        .map(|&(lat, lon)| LatLon::new(lat, lon).unwrap())
        .collect();
    CountyPolygon::new(name, ring).unwrap()
}

fn grid() -> Vec<CountyPolygon> {
    let mut out = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            out.push(square(&format!("c{i}{j}"), 39.0 + 0.2 * i as f64, -105.5 + 0.2 * j as f64, 0.2));
        }
    }
    out
}

fn station(id: usize, lat: f64, lon: f64) -> Station {
    Station {
        station_id: format!("s{id}"),
        name: String::new(),
        location: LatLon::new(lat, lon).unwrap(),
    }
}

#[test]
fn distance_between_denver_and_boulder() {
    // great-circle distance on a 6 371 km sphere, computed independently
    let d = haversine(LatLon::new(39.7392, -104.9903).unwrap(), LatLon::new(40.0150, -105.2705).unwrap());
    assert!((d - 38_887.0).abs() < 200.0, "{d}");
}

#[test]
fn grid_cell_center_and_corner() {
    let polygons = grid();
    let stations = [station(0, 39.1, -105.4), station(1, 39.2, -105.3)];
    let a = assign_counties(&stations, &polygons, 4_828.0, Execution::Sequential).unwrap();
    assert_eq!(a.counties["s0"].iter().collect::<Vec<_>>(), ["c00"]);
    assert_eq!(a.counties["s1"].iter().collect::<Vec<_>>(), ["c00", "c01", "c10", "c11"]);
}

#[test]
fn far_station_is_unassigned() {
    let a = assign_counties(&[station(0, 45.0, -100.0)], &grid(), 4_828.0, Execution::Sequential).unwrap();
    assert_eq!(a.unassigned, ["s0"]);
    assert!(a.counties.is_empty());
}

#[test]
fn geojson_with_holes_is_rejected() {
    let text = r#"{"type":"FeatureCollection","features":[{"type":"Feature","properties":{"name":"h"},
        "geometry":{"type":"Polygon","coordinates":[[[0,0],[0,1],[1,1],[0,0]],[[0.1,0.1],[0.1,0.2],[0.2,0.2],[0.1,0.1]]]}}]}"#;
    assert!(parse_counties_geojson(text).is_err());
}

proptest! {
    #[test]
    fn executions_agree(coords in proptest::collection::vec((39.0f64..39.8, -105.5f64..-104.7), 1..40)) {
        let stations: Vec<Station> = coords.iter().enumerate().map(|(i, &(lat, lon))| station(i, lat, lon)).collect();
        let polygons = grid();
        let seq = assign_counties(&stations, &polygons, 4_828.0, Execution::Sequential).unwrap();
        let par = assign_counties(&stations, &polygons, 4_828.0, Execution::Parallel).unwrap();
        prop_assert_eq!(seq, par);
    }

    #[test]
    fn larger_radius_never_drops_a_county(lat in 39.0f64..39.8, lon in -105.5f64..-104.7, r in 100.0f64..10_000.0) {
        let polygons = grid();
        let s = [station(0, lat, lon)];
        let small = assign_counties(&s, &polygons, r, Execution::Sequential).unwrap();
        let large = assign_counties(&s, &polygons, r * 2.0, Execution::Sequential).unwrap();
        prop_assert!(small.counties["s0"].is_subset(&large.counties["s0"]));
    }
}
