use std::collections::BTreeMap;
use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{FrameError, Result};

/// Daily bicycle counts for one station, dates strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountSeries {
    station_id: String,
    entries: Vec<(NaiveDate, u64)>,
}

impl CountSeries {
    pub fn new(station_id: impl Into<String>, entries: Vec<(NaiveDate, u64)>) -> Result<Self> {
        let station_id = station_id.into();
        if let Some(w) = entries.windows(2).find(|w| w[0].0 >= w[1].0) {
            return Err(FrameError::InvalidSeries {
                station: station_id,
                reason: format!("dates not strictly increasing at {}", w[1].0),
            });
        }
        Ok(Self {
            station_id,
            entries,
        })
    }

    pub fn station_id(&self) -> &str {
        &self.station_id
    }

    pub fn entries(&self) -> &[(NaiveDate, u64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Period {
    PrePandemic,
    Pandemic,
    Transition,
    Normalization,
}

impl Period {
    pub const ALL: [Period; 4] = [
        Period::PrePandemic,
        Period::Pandemic,
        Period::Transition,
        Period::Normalization,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Period::PrePandemic => "Pre-Pandemic",
            Period::Pandemic => "Pandemic",
            Period::Transition => "Transition",
            Period::Normalization => "Normalization",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.label() == label)
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One of the three consecutive period changes used as a dependent variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Transition {
    PrePandemicToPandemic,
    PandemicToTransition,
    TransitionToNormalization,
}

impl Transition {
    pub const ALL: [Transition; 3] = [
        Transition::PrePandemicToPandemic,
        Transition::PandemicToTransition,
        Transition::TransitionToNormalization,
    ];

    pub fn from_to(self) -> (Period, Period) {
        match self {
            Transition::PrePandemicToPandemic => (Period::PrePandemic, Period::Pandemic),
            Transition::PandemicToTransition => (Period::Pandemic, Period::Transition),
            Transition::TransitionToNormalization => (Period::Transition, Period::Normalization),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Transition::PrePandemicToPandemic => "Pre-Pandemic to Pandemic",
            Transition::PandemicToTransition => "Pandemic to Transition",
            Transition::TransitionToNormalization => "Transition to Normalization",
        }
    }

    /// Column name in CSV files and directory name in report output.
    pub fn slug(self) -> &'static str {
        match self {
            Transition::PrePandemicToPandemic => "pre_pandemic_to_pandemic",
            Transition::PandemicToTransition => "pandemic_to_transition",
            Transition::TransitionToNormalization => "transition_to_normalization",
        }
    }

    pub fn from_slug(slug: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.slug() == slug)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodWindow {
    pub period: Period,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl PeriodWindow {
    /// The same month/day window moved onto `year`. Feb 29 maps to Feb 28 in
    /// non-leap years.
    pub fn in_year(&self, year: i32) -> (NaiveDate, NaiveDate) {
        (shift_year(self.start, year), shift_year(self.end, year))
    }
}

fn shift_year(date: NaiveDate, year: i32) -> NaiveDate {
    date.with_year(year)
        .or_else(|| NaiveDate::from_ymd_opt(year, date.month(), 28))
        .expect("month/day valid in every year after Feb 29 fallback")
}

/// The four analysis windows in their fixed order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PeriodSchedule {
    windows: [PeriodWindow; 4],
}

#[derive(Serialize, Deserialize)]
struct RawWindow {
    start: NaiveDate,
    end: NaiveDate,
}

impl PeriodSchedule {
    pub fn new(windows: [PeriodWindow; 4]) -> Result<Self> {
        for (w, expected) in windows.iter().zip(Period::ALL) {
            if w.period != expected {
                return Err(FrameError::InvalidSchedule(format!(
                    "expected {expected} in position {}, found {}",
                    expected.index(),
                    w.period
                )));
            }
            if w.start > w.end {
                return Err(FrameError::InvalidSchedule(format!(
                    "{}: start {} after end {}",
                    w.period, w.start, w.end
                )));
            }
        }
        for pair in windows.windows(2) {
            if pair[0].end >= pair[1].start {
                return Err(FrameError::InvalidSchedule(format!(
                    "{} overlaps {}",
                    pair[0].period, pair[1].period
                )));
            }
        }
        let year = windows[0].start.year();
        if windows.iter().any(|w| w.end.year() != year) {
            return Err(FrameError::InvalidSchedule(
                "all windows must fall in one calendar year".into(),
            ));
        }
        Ok(Self { windows })
    }

    /// Placeholder windows. The source analysis never published its period
    /// boundaries, so real runs should supply a schedule file.
    pub fn placeholder() -> Self {
        let d = |m, day| NaiveDate::from_ymd_opt(2020, m, day).unwrap();
        Self::new([
            PeriodWindow {
                period: Period::PrePandemic,
                start: d(1, 1),
                end: d(3, 15),
            },
            PeriodWindow {
                period: Period::Pandemic,
                start: d(3, 16),
                end: d(4, 26),
            },
            PeriodWindow {
                period: Period::Transition,
                start: d(4, 27),
                end: d(5, 31),
            },
            PeriodWindow {
                period: Period::Normalization,
                start: d(6, 1),
                end: d(6, 30),
            },
        ])
        .expect("placeholder schedule is valid")
    }

    pub fn windows(&self) -> &[PeriodWindow; 4] {
        &self.windows
    }

    pub fn window(&self, period: Period) -> &PeriodWindow {
        &self.windows[period.index()]
    }

    /// Parses `{"Pre-Pandemic": {"start": "...", "end": "..."}, ...}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, RawWindow> = serde_json::from_str(text)
            .map_err(|e| FrameError::InvalidSchedule(e.to_string()))?;
        if let Some(unknown) = raw.keys().find(|k| Period::from_label(k).is_none()) {
            return Err(FrameError::InvalidSchedule(format!(
                "unknown period label {unknown:?}"
            )));
        }
        let mut windows = Vec::with_capacity(4);
        for period in Period::ALL {
            let w = raw.get(period.label()).ok_or_else(|| {
                FrameError::InvalidSchedule(format!("missing period {period}"))
            })?;
            windows.push(PeriodWindow {
                period,
                start: w.start,
                end: w.end,
            });
        }
        Self::new(windows.try_into().expect("four windows"))
    }

    pub fn to_json(&self) -> String {
        let map: BTreeMap<&str, RawWindow> = self
            .windows
            .iter()
            .map(|w| {
                (
                    w.period.label(),
                    RawWindow {
                        start: w.start,
                        end: w.end,
                    },
                )
            })
            .collect();
        serde_json::to_string_pretty(&map).expect("schedule serializes")
    }
}

/// Ratio of usage between two periods.
pub fn change_rate(n_t: u64, n_prev: u64) -> Result<f64> {
    if n_prev == 0 {
        return Err(FrameError::ZeroBaseline);
    }
    Ok(n_t as f64 / n_prev as f64)
}

/// Per-period count sums with the schedule's windows moved onto `year`.
pub fn period_totals(series: &CountSeries, schedule: &PeriodSchedule, year: i32) -> Result<[u64; 4]> {
    if series.is_empty() {
        return Err(FrameError::EmptySeries(series.station_id.clone()));
    }
    let mut totals = [0u64; 4];
    for (slot, window) in totals.iter_mut().zip(schedule.windows()) {
        let (start, end) = window.in_year(year);
        let mut seen = false;
        for &(_, count) in series
            .entries
            .iter()
            .filter(|(date, _)| *date >= start && *date <= end)
        {
            seen = true;
            *slot += count;
        }
        if !seen {
            return Err(FrameError::EmptyPeriod {
                station: series.station_id.clone(),
                period: window.period,
                year,
            });
        }
    }
    Ok(totals)
}

/// How the dependent variable across a transition is formed from the
/// per-period year-over-year ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMode {
    /// yoy(to) / yoy(from)
    #[default]
    RatioOfRatios,
    /// yoy(to) alone
    YearOverYear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearPair {
    pub base: i32,
    pub target: i32,
}

impl Default for YearPair {
    fn default() -> Self {
        Self {
            base: 2018,
            target: 2020,
        }
    }
}

pub fn rates_from_yoy(yoy: [f64; 4], mode: RateMode) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for (slot, t) in out.iter_mut().zip(Transition::ALL) {
        let (from, to) = t.from_to();
        *slot = match mode {
            RateMode::YearOverYear => yoy[to.index()],
            RateMode::RatioOfRatios => {
                let base = yoy[from.index()];
                if base == 0.0 {
                    return Err(FrameError::ZeroBaseline);
                }
                yoy[to.index()] / base
            }
        };
    }
    Ok(out)
}

pub fn transition_rates(
    base: &CountSeries,
    target: &CountSeries,
    schedule: &PeriodSchedule,
    years: YearPair,
    mode: RateMode,
) -> Result<TransitionRow> {
    if base.station_id != target.station_id {
        return Err(FrameError::InvalidSeries {
            station: target.station_id.clone(),
            reason: format!("paired with series for {}", base.station_id),
        });
    }
    let before = period_totals(base, schedule, years.base)?;
    let after = period_totals(target, schedule, years.target)?;
    let mut yoy = [0.0; 4];
    for i in 0..4 {
        yoy[i] = change_rate(after[i], before[i])?;
    }
    Ok(TransitionRow {
        station_id: base.station_id.clone(),
        rates: rates_from_yoy(yoy, mode)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRow {
    pub station_id: String,
    /// Indexed by `Transition::index`.
    pub rates: [f64; 3],
}

impl TransitionRow {
    pub fn rate(&self, transition: Transition) -> f64 {
        self.rates[transition.index()]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransitionTable {
    rows: Vec<TransitionRow>,
}

impl TransitionTable {
    pub fn new(rows: Vec<TransitionRow>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for row in &rows {
            if !seen.insert(row.station_id.as_str()) {
                return Err(FrameError::InvalidFrame(format!(
                    "duplicate station {} in transition table",
                    row.station_id
                )));
            }
            if row.rates.iter().any(|r| !r.is_finite()) {
                return Err(FrameError::InvalidFrame(format!(
                    "non-finite rate for station {}",
                    row.station_id
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[TransitionRow] {
        &self.rows
    }

    pub fn get(&self, station_id: &str) -> Option<&TransitionRow> {
        self.rows.iter().find(|r| r.station_id == station_id)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}
