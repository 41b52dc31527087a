use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use bikeshift::catchment::{assign_counties, parse_counties_geojson, parse_stations_csv};
use bikeshift::frames::{
    assemble_frame, read_frame_table, transition_rates, write_frame_table, write_profiles_csv,
    write_transitions_csv, AnalysisFrame, PeriodSchedule, SocioeconomicProfile, Transition, TransitionRow,
    TransitionTable,
};
use bikeshift::ingest::{
    catchment_profile, fetch_many, parse_counts_csv, AcsSchema, AcsTables, DateRange, FixtureTransport,
    HttpTransport, RawAcsTable, ResponseCache, Transport, COUNTS_HEADER,
};
use bikeshift::plsr::{fit, PlsModel};
use bikeshift::report::{
    export_figure_data, render_tables, write_documents, Document, ReportBundle, TableFormat,
};
use bikeshift::reproduce::{reproduce, GoldenTables, ReproduceInputs, ReproduceOptions};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{read_text, RunConfig, TransportMode};
use crate::error::CliError;

/// What a command prints: a human summary and the same facts as JSON.
pub struct Outcome {
    pub text: String,
    pub json: Value,
    pub exit_code: i32,
}

impl Outcome {
    fn ok(text: String, json: Value) -> Self {
        Self { text, json, exit_code: 0 }
    }
}

#[derive(Debug, Serialize)]
struct StationError {
    station_id: String,
    stage: &'static str,
    error: String,
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn write_errors(path: &Path, errors: &[StationError]) -> Result<(), CliError> {
    let mut text = String::new();
    for e in errors {
        text.push_str(&serde_json::to_string(e).expect("error line serializes"));
        text.push('\n');
    }
    write_file(path, text)
}

fn load_schedule(cfg: &RunConfig) -> Result<PeriodSchedule, CliError> {
    let path = cfg.require(&cfg.schedule, "schedule")?;
    let text = read_text(path)?;
    PeriodSchedule::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn year_range(schedule: &PeriodSchedule, year: i32) -> Result<DateRange, CliError> {
    let windows = schedule.windows();
    let (start, _) = windows[0].in_year(year);
    let (_, end) = windows[3].in_year(year);
    Ok(DateRange::new(start, end)?)
}

fn paths_json(paths: &[PathBuf]) -> Value {
    Value::from(paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>())
}

pub fn cmd_fetch(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let schedule = load_schedule(cfg)?;
    let stations = parse_stations_csv(&read_text(cfg.require(&cfg.stations, "stations")?)?)?;
    let source = cfg.source();
    let cache = ResponseCache::open(&source.cache_dir)?;
    let transport: Box<dyn Transport> = match cfg.transport {
        TransportMode::Live => Box::new(HttpTransport),
        TransportMode::Fixtures => {
            let dir = cfg.require(&cfg.fixtures_dir, "fixtures_dir")?;
            Box::new(FixtureTransport::from_dir(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?)
        }
    };

    let years = cfg.years();
    let mut requests = Vec::new();
    for station in &stations {
        for year in [years.base, years.target] {
            requests.push((station.station_id.clone(), year_range(&schedule, year)?));
        }
    }
    let results = fetch_many(&source, transport.as_ref(), &cache, &requests, cfg.execution());

    let mut rows: BTreeMap<(String, NaiveDate), u64> = BTreeMap::new();
    let mut errors = Vec::new();
    for ((station, _), result) in requests.iter().zip(results) {
        match result {
            Ok(series) => {
                for (date, count) in series.entries() {
                    rows.insert((station.clone(), *date), *count);
                }
            }
            Err(e) => errors.push(StationError {
                station_id: station.clone(),
                stage: "fetch",
                error: e.to_string(),
            }),
        }
    }

    let mut text = COUNTS_HEADER.join(",");
    text.push('\n');
    for ((station, date), count) in &rows {
        text.push_str(&format!("{station},{date},{count}\n"));
    }
    let counts_path = cfg.output_dir.join("counts.csv");
    let errors_path = cfg.output_dir.join("fetch_errors.jsonl");
    write_file(&counts_path, text)?;
    write_errors(&errors_path, &errors)?;

    let summary = format!(
        "fetched {} of {} requests, {} rows -> {}",
        requests.len() - errors.len(),
        requests.len(),
        rows.len(),
        counts_path.display()
    );
    let json = json!({
        "command": "fetch",
        "requests": requests.len(),
        "failed": errors.len(),
        "rows": rows.len(),
        "outputs": paths_json(&[counts_path, errors_path]),
    });
    Ok(Outcome {
        text: summary,
        json,
        exit_code: if errors.is_empty() { 0 } else { 1 },
    })
}

fn load_acs(dir: &Path) -> Result<AcsTables, CliError> {
    let read = |name: &str| -> Result<RawAcsTable, CliError> {
        let path = dir.join(format!("{name}.csv"));
        let bytes = fs::read(&path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        RawAcsTable::from_csv(name, &bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    };
    Ok(AcsTables {
        income: read("income")?,
        education: read("education")?,
        age: read("age")?,
        sex: read("sex")?,
    })
}

pub fn cmd_derive(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let schedule = load_schedule(cfg)?;
    let counts_path = cfg.require(&cfg.counts, "counts")?;
    let counts = parse_counts_csv(read_text(counts_path)?.as_bytes())
        .map_err(|e| CliError::Input(format!("{}: {e}", counts_path.display())))?;
    let stations = parse_stations_csv(&read_text(cfg.require(&cfg.stations, "stations")?)?)?;
    let polygons = parse_counties_geojson(&read_text(cfg.require(&cfg.counties, "counties")?)?)?;
    let tables = load_acs(cfg.require(&cfg.acs_dir, "acs_dir")?)?;
    let schema = AcsSchema::bundled();
    let assignment = assign_counties(&stations, &polygons, cfg.radius_m, cfg.execution())?;

    let mut profiles: Vec<(String, SocioeconomicProfile)> = Vec::new();
    let mut rates: Vec<TransitionRow> = Vec::new();
    let mut errors = Vec::new();
    for station in &stations {
        let id = &station.station_id;
        let fail = |stage, error: String| StationError {
            station_id: id.clone(),
            stage,
            error,
        };
        let Some(series) = counts.get(id) else {
            errors.push(fail("counts", "no counts for station".into()));
            continue;
        };
        let row = match transition_rates(series, series, &schedule, cfg.years(), cfg.rate_mode) {
            Ok(row) => row,
            Err(e) => {
                errors.push(fail("rates", e.to_string()));
                continue;
            }
        };
        let Some(counties) = assignment.counties.get(id) else {
            errors.push(fail("catchment", "catchment touches no county".into()));
            continue;
        };
        match catchment_profile(&tables, counties, &schema) {
            Ok(profile) => {
                profiles.push((id.clone(), profile));
                rates.push(row);
            }
            Err(e) => errors.push(fail("census", e.to_string())),
        }
    }

    let out = &cfg.output_dir;
    let mut outputs = Vec::new();
    let mut buf = Vec::new();
    write_profiles_csv(&mut buf, &profiles)?;
    outputs.push(out.join("profiles.csv"));
    write_file(&outputs[0], &buf)?;

    let table = TransitionTable::new(rates)?;
    let mut buf = Vec::new();
    write_transitions_csv(&mut buf, &table)?;
    outputs.push(out.join("transitions.csv"));
    write_file(&outputs[1], &buf)?;

    if profiles.len() >= 2 {
        let frames = Transition::ALL
            .into_iter()
            .map(|t| assemble_frame(&profiles, &table, t, cfg.standardize_y).map(|f| (t, f)))
            .collect::<Result<Vec<_>, _>>();
        match frames {
            Ok(frames) => {
                let mut buf = Vec::new();
                write_frame_table(&mut buf, &frames)?;
                let path = out.join("frame_table.csv");
                write_file(&path, &buf)?;
                outputs.push(path);
            }
            Err(e) => errors.push(StationError {
                station_id: "*".into(),
                stage: "assemble",
                error: e.to_string(),
            }),
        }
    }
    let errors_path = out.join("derive_errors.jsonl");
    write_errors(&errors_path, &errors)?;
    outputs.push(errors_path);

    let text = format!(
        "derived {} of {} stations ({} failed)",
        profiles.len(),
        stations.len(),
        errors.len()
    );
    let json = json!({
        "command": "derive",
        "stations": stations.len(),
        "derived": profiles.len(),
        "errors": errors,
        "outputs": paths_json(&outputs),
    });
    Ok(Outcome {
        text,
        json,
        exit_code: if errors.is_empty() { 0 } else { 2 },
    })
}

fn load_frames(cfg: &RunConfig) -> Result<Vec<(Transition, AnalysisFrame)>, CliError> {
    let path = cfg.require(&cfg.input, "input")?;
    read_frame_table(read_text(path)?.as_bytes()).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn bundle_documents(cfg: &RunConfig, frames: &[(Transition, AnalysisFrame)], models: &[PlsModel], formats: &[TableFormat]) -> Result<Vec<Document>, CliError> {
    let fits: Vec<(Transition, &AnalysisFrame, &PlsModel)> =
        frames.iter().zip(models).map(|((t, f), m)| (*t, f, m)).collect();
    let bundle = ReportBundle::build(&fits, cfg.vip_basis)?;
    let mut docs = Vec::new();
    for format in formats {
        docs.extend(render_tables(&bundle, *format)?);
    }
    let refs: Vec<(Transition, &AnalysisFrame)> = frames.iter().map(|(t, f)| (*t, f)).collect();
    docs.extend(export_figure_data(&refs));
    Ok(docs)
}

fn model_path(dir: &Path, t: Transition) -> PathBuf {
    dir.join(format!("{}.json", t.slug()))
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let frames = load_frames(cfg)?;
    let options = cfg.fit_options();
    let models = frames
        .iter()
        .map(|(_, f)| fit(f, &options))
        .collect::<Result<Vec<_>, _>>()?;

    let models_dir = cfg.models_dir();
    let mut outputs = Vec::new();
    for ((t, _), model) in frames.iter().zip(&models) {
        let path = model_path(&models_dir, *t);
        write_file(&path, model.to_json())?;
        outputs.push(path);
    }
    let docs = bundle_documents(cfg, &frames, &models, &[TableFormat::Csv, TableFormat::Markdown])?;
    write_documents(&cfg.output_dir, &docs)?;
    outputs.extend(docs.iter().map(|d| cfg.output_dir.join(&d.path)));

    let components: Vec<usize> = models.iter().map(PlsModel::components).collect();
    let text = format!(
        "fit {} transitions with {:?} factors, wrote {} files under {}",
        models.len(),
        components,
        outputs.len(),
        cfg.output_dir.display()
    );
    let json = json!({
        "command": "analyze",
        "components": components,
        "outputs": paths_json(&outputs),
    });
    Ok(Outcome::ok(text, json))
}

pub fn cmd_report(cfg: &RunConfig, formats: &[TableFormat]) -> Result<Outcome, CliError> {
    let frames = load_frames(cfg)?;
    let dir = cfg.models_dir();
    let models = frames
        .iter()
        .map(|(t, _)| {
            let path = model_path(&dir, *t);
            PlsModel::from_json(&read_text(&path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let docs = bundle_documents(cfg, &frames, &models, formats)?;
    write_documents(&cfg.output_dir, &docs)?;
    let outputs: Vec<PathBuf> = docs.iter().map(|d| cfg.output_dir.join(&d.path)).collect();
    let text = format!("wrote {} report files under {}", outputs.len(), cfg.output_dir.display());
    Ok(Outcome::ok(text, json!({"command": "report", "outputs": paths_json(&outputs)})))
}

pub struct ReproduceArgs {
    pub table1: Option<PathBuf>,
    pub golden: Option<PathBuf>,
    pub seed: Option<u64>,
    pub verbose: bool,
}

pub fn cmd_reproduce(cfg: &RunConfig, args: &ReproduceArgs) -> Result<Outcome, CliError> {
    let mut inputs = ReproduceInputs::bundled();
    if let Some(path) = &args.table1 {
        inputs.table1_csv = read_text(path)?;
    }
    if let Some(path) = &args.golden {
        inputs.golden = GoldenTables::from_json(&read_text(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    let mut options = ReproduceOptions {
        execution: cfg.execution(),
        ..ReproduceOptions::default()
    };
    if let Some(seed) = args.seed {
        options.seed = seed;
    }
    let result = reproduce(&inputs, &options)?;
    write_documents(&cfg.output_dir, &result.documents)?;
    let text = result.render_text(args.verbose);
    write_file(&cfg.output_dir.join("reproduce_summary.txt"), result.render_text(true))?;
    write_file(&cfg.output_dir.join("reproduce_summary.json"), result.to_json())?;
    let json: Value = serde_json::from_str(&result.to_json()).expect("summary is JSON");
    Ok(Outcome {
        text: text.trim_end().to_string(),
        json: json!({"command": "reproduce", "passed": result.passed(), "summary": json}),
        exit_code: if result.passed() { 0 } else { 1 },
    })
}
