use std::io::{Read, Write};

use ndarray::{Array1, Array2};

use super::{
    AnalysisFrame, FrameError, Predictor, Result, SocioeconomicProfile, Transition,
    TransitionRow, TransitionTable,
};

pub const PROFILES_HEADER: [&str; 6] = [
    "station_id",
    "avg_income",
    "avg_education",
    "avg_age",
    "total_population",
    "male_female_ratio",
];

pub const TRANSITIONS_HEADER: [&str; 4] = [
    "station_id",
    "pre_pandemic_to_pandemic",
    "pandemic_to_transition",
    "transition_to_normalization",
];

/// Header of a combined table: the three dependent columns followed by the
/// five predictors, one row per station.
pub const FRAME_TABLE_HEADER: [&str; 9] = [
    "station_id",
    "pre_pandemic_to_pandemic",
    "pandemic_to_transition",
    "transition_to_normalization",
    "avg_income",
    "avg_education",
    "avg_age",
    "total_population",
    "male_female_ratio",
];

fn csv_err(e: csv::Error) -> FrameError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    FrameError::Csv {
        line,
        message: e.to_string(),
    }
}

/// Reads all records after checking the header; returns `(line, fields)`.
fn read_records<R: Read>(reader: R, header: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let found = rdr.headers().map_err(csv_err)?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(FrameError::Csv {
            line: 1,
            message: format!("expected header {:?}, found {:?}", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        out.push((line, rec));
    }
    Ok(out)
}

fn parse_f64(line: u64, field: &str, name: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| FrameError::Csv {
            line,
            message: format!("{name}: not a finite number: {field:?}"),
        })
}

pub fn read_profiles_csv<R: Read>(reader: R) -> Result<Vec<(String, SocioeconomicProfile)>> {
    let mut out = Vec::new();
    for (line, rec) in read_records(reader, &PROFILES_HEADER)? {
        let mut v = [0.0; 5];
        for (j, slot) in v.iter_mut().enumerate() {
            *slot = parse_f64(line, &rec[j + 1], PROFILES_HEADER[j + 1])?;
        }
        let profile = SocioeconomicProfile::from_values(v);
        profile.validate(&rec[0])?;
        out.push((rec[0].to_string(), profile));
    }
    Ok(out)
}

pub fn write_profiles_csv<W: Write>(writer: W, profiles: &[(String, SocioeconomicProfile)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PROFILES_HEADER).map_err(csv_err)?;
    for (id, p) in profiles {
        let mut row = vec![id.clone()];
        row.extend(p.values().iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| csv_err(e.into()))
}

pub fn read_transitions_csv<R: Read>(reader: R) -> Result<TransitionTable> {
    let mut rows = Vec::new();
    for (line, rec) in read_records(reader, &TRANSITIONS_HEADER)? {
        let mut rates = [0.0; 3];
        for (j, slot) in rates.iter_mut().enumerate() {
            *slot = parse_f64(line, &rec[j + 1], TRANSITIONS_HEADER[j + 1])?;
        }
        rows.push(TransitionRow {
            station_id: rec[0].to_string(),
            rates,
        });
    }
    TransitionTable::new(rows)
}

pub fn write_transitions_csv<W: Write>(writer: W, table: &TransitionTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRANSITIONS_HEADER).map_err(csv_err)?;
    for row in table.rows() {
        let mut rec = vec![row.station_id.clone()];
        rec.extend(row.rates.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| csv_err(e.into()))
}

/// Reads a combined table whose predictor columns are already standardized
/// and returns one frame per transition, dependent columns as given.
pub fn read_frame_table<R: Read>(reader: R) -> Result<Vec<(Transition, AnalysisFrame)>> {
    let records = read_records(reader, &FRAME_TABLE_HEADER)?;
    let n = records.len();
    let mut ids = Vec::with_capacity(n);
    let mut x = Array2::zeros((n, 5));
    let mut ys = Array2::zeros((n, 3));
    for (i, (line, rec)) in records.iter().enumerate() {
        ids.push(rec[0].to_string());
        for t in 0..3 {
            ys[[i, t]] = parse_f64(*line, &rec[t + 1], FRAME_TABLE_HEADER[t + 1])?;
        }
        for j in 0..5 {
            x[[i, j]] = parse_f64(*line, &rec[j + 4], FRAME_TABLE_HEADER[j + 4])?;
        }
    }
    if n < 2 {
        return Err(FrameError::TooFewStations(n));
    }
    let predictors: Vec<String> = Predictor::ALL.iter().map(|p| p.column().to_string()).collect();
    Transition::ALL
        .into_iter()
        .map(|t| {
            let y: Array1<f64> = ys.column(t.index()).to_owned();
            AnalysisFrame::new(x.clone(), y, ids.clone(), predictors.clone(), t.slug()).map(|f| (t, f))
        })
        .collect()
}

/// Writes frames sharing one predictor matrix (one per transition, in any
/// order) as a combined table readable by [`read_frame_table`].
pub fn write_frame_table<W: Write>(writer: W, frames: &[(Transition, AnalysisFrame)]) -> Result<()> {
    let by_transition: Vec<&AnalysisFrame> = Transition::ALL
        .iter()
        .map(|t| {
            frames
                .iter()
                .find(|(ft, _)| ft == t)
                .map(|(_, f)| f)
                .ok_or_else(|| FrameError::InvalidFrame(format!("no frame for {}", t.slug())))
        })
        .collect::<Result<_>>()?;
    let first = by_transition[0];
    if first.n_predictors() != Predictor::ALL.len() {
        return Err(FrameError::InvalidFrame(format!("expected 5 predictors, found {}", first.n_predictors())));
    }
    if by_transition.iter().any(|f| f.x != first.x || f.station_ids != first.station_ids) {
        return Err(FrameError::InvalidFrame("frames disagree on stations or predictors".into()));
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(FRAME_TABLE_HEADER).map_err(csv_err)?;
    for (i, id) in first.station_ids.iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend(by_transition.iter().map(|f| f.y[i].to_string()));
        rec.extend(first.x.row(i).iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| csv_err(e.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_table_round_trip() {
        let text = "station_id,pre_pandemic_to_pandemic,pandemic_to_transition,transition_to_normalization,avg_income,avg_education,avg_age,total_population,male_female_ratio\n\
                    a,0.5,1.25,-2,1,0,0.5,-1,2\n\
                    b,-0.5,0.75,2,-1,0,-0.5,1,-2\n";
        let frames = read_frame_table(text.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_frame_table(&mut buf, &frames).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), text);
        let mut mixed = frames.clone();
        mixed[1].1.y[0] = 9.0;
        mixed[2].1.x[[0, 0]] = 9.0;
        assert!(write_frame_table(Vec::new(), &mixed).is_err());
    }

    #[test]
    fn profiles_round_trip() {
        let profiles = vec![
            ("a".to_string(), SocioeconomicProfile::from_values([4.5, 3.25, 37.0, 1200.0, 0.97])),
            ("b".to_string(), SocioeconomicProfile::from_values([1.0 / 3.0, 8.0, 41.5, 98.0, 1.1])),
        ];
        let mut buf = Vec::new();
        write_profiles_csv(&mut buf, &profiles).unwrap();
        assert!(buf.starts_with(b"station_id,avg_income,avg_education,avg_age,total_population,male_female_ratio\n"));
        assert_eq!(read_profiles_csv(buf.as_slice()).unwrap(), profiles);
    }

    #[test]
    fn transitions_round_trip() {
        let table = TransitionTable::new(vec![TransitionRow {
            station_id: "x".into(),
            rates: [0.1, 2.0 / 3.0, 1e-7],
        }])
        .unwrap();
        let mut buf = Vec::new();
        write_transitions_csv(&mut buf, &table).unwrap();
        assert_eq!(read_transitions_csv(buf.as_slice()).unwrap(), table);
    }

    #[test]
    fn bad_header_and_bad_number() {
        let err = read_transitions_csv("id,a,b,c\n".as_bytes()).unwrap_err();
        assert!(matches!(err, FrameError::Csv { line: 1, .. }));
        let text = "station_id,pre_pandemic_to_pandemic,pandemic_to_transition,transition_to_normalization\ns,1,oops,2\n";
        match read_transitions_csv(text.as_bytes()).unwrap_err() {
            FrameError::Csv { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("pandemic_to_transition"));
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn frame_table_splits_into_three_frames() {
        let text = "station_id,pre_pandemic_to_pandemic,pandemic_to_transition,transition_to_normalization,avg_income,avg_education,avg_age,total_population,male_female_ratio\n\
                    0,1,2,3,0.1,0.2,0.3,0.4,0.5\n\
                    1,4,5,6,-0.1,-0.2,-0.3,-0.4,-0.5\n";
        let frames = read_frame_table(text.as_bytes()).unwrap();
        assert_eq!(frames.len(), 3);
        assert_eq!(frames[1].0, Transition::PandemicToTransition);
        assert_eq!(frames[1].1.y.to_vec(), vec![2.0, 5.0]);
        assert_eq!(frames[2].1.x[[1, 4]], -0.5);
    }
}
