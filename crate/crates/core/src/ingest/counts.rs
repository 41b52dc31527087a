use std::collections::BTreeMap;

use chrono::NaiveDate;

use super::cache::ResponseCache;
use super::transport::Transport;
use super::{DateRange, IngestError, SourceConfig};
use crate::exec::Execution;
use crate::frames::CountSeries;

pub const COUNTS_HEADER: [&str; 3] = ["station_id", "date", "count"];

fn parse_error(line: u64, message: impl Into<String>) -> IngestError {
    IngestError::Parse {
        line,
        message: message.into(),
    }
}

/// Parses `station_id,date,count` rows into one date-sorted series per
/// station. Duplicate `(station, date)` rows are rejected, not summed.
pub fn parse_counts_csv(bytes: &[u8]) -> Result<BTreeMap<String, CountSeries>, IngestError> {
    let text = std::str::from_utf8(bytes).map_err(|e| parse_error(0, format!("not UTF-8: {e}")))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| parse_error(1, e.to_string()))?
        .clone();
    if header.iter().ne(COUNTS_HEADER) {
        return Err(parse_error(
            1,
            format!("expected header {}, found {}", COUNTS_HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }

    let mut by_station: BTreeMap<String, BTreeMap<NaiveDate, u64>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            parse_error(e.position().map(|p| p.line()).unwrap_or(0), e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let station = record[0].to_string();
        if station.is_empty() {
            return Err(parse_error(line, "empty station_id"));
        }
        let date = NaiveDate::parse_from_str(&record[1], "%Y-%m-%d")
            .map_err(|_| parse_error(line, format!("bad date {:?}", &record[1])))?;
        let count = record[2]
            .parse::<u64>()
            .map_err(|_| parse_error(line, format!("count {:?} is not a non-negative integer", &record[2])))?;
        let series = by_station.entry(station.clone()).or_default();
        if series.insert(date, count).is_some() {
            return Err(parse_error(
                line,
                format!("duplicate row for station {station} on {date}"),
            ));
        }
    }

    by_station
        .into_iter()
        .map(|(station, entries)| {
            let series = CountSeries::new(station.clone(), entries.into_iter().collect())
                .map_err(|e| parse_error(0, e.to_string()))?;
            Ok((station, series))
        })
        .collect()
}

pub fn cache_key(station_id: &str, range: DateRange) -> String {
    format!("counts|{station_id}|{}|{}", range.start, range.end)
}

fn fetch_with_retries(
    config: &SourceConfig,
    transport: &dyn Transport,
    url: &str,
) -> Result<Vec<u8>, IngestError> {
    let attempts = config.retries + 1;
    let mut last = String::new();
    for attempt in 1..=attempts {
        match transport.get(url, config.timeout()) {
            Ok(body) => return Ok(body),
            Err(e) => {
                log::warn!("GET {url} failed (attempt {attempt}/{attempts}): {e}");
                last = e.0;
            }
        }
    }
    Err(IngestError::Network {
        url: url.to_string(),
        attempts,
        message: last,
    })
}

/// Returns the station's counts for `range`, from the cache when an intact
/// entry exists and otherwise from the transport (caching the raw body).
pub fn fetch_counts(
    config: &SourceConfig,
    transport: &dyn Transport,
    cache: &ResponseCache,
    station_id: &str,
    range: DateRange,
) -> Result<CountSeries, IngestError> {
    let key = cache_key(station_id, range);
    let body = match cache.load(&key) {
        Ok(Some(body)) => body,
        Ok(None) => {
            let body = fetch_with_retries(config, transport, &config.counts_url(station_id, range))?;
            cache.store(&key, &body)?;
            body
        }
        Err(IngestError::CacheCorrupt { .. }) => {
            log::warn!("cache entry for {key} failed its checksum; refetching");
            let body = fetch_with_retries(config, transport, &config.counts_url(station_id, range))?;
            cache.store(&key, &body)?;
            body
        }
        Err(e) => return Err(e),
    };
    let mut parsed = parse_counts_csv(&body)?;
    Ok(parsed
        .remove(station_id)
        .unwrap_or_else(|| CountSeries::new(station_id, Vec::new()).expect("empty series is valid")))
}

/// Fetches several stations with at most `config.parallelism` requests in
/// flight. Results keep the request order.
pub fn fetch_many(
    config: &SourceConfig,
    transport: &dyn Transport,
    cache: &ResponseCache,
    requests: &[(String, DateRange)],
    exec: Execution,
) -> Vec<Result<CountSeries, IngestError>> {
    exec.map_bounded(config.parallelism, requests, |(station, range)| {
        fetch_counts(config, transport, cache, station, *range)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "station_id,date,count\n";

    #[test]
    fn interleaved_stations_are_split_and_sorted() {
        let text = format!("{HEADER}b,2020-01-02,5\na,2020-01-03,1\nb,2020-01-01,7\na,2020-01-01,2\n");
        let parsed = parse_counts_csv(text.as_bytes()).unwrap();
        assert_eq!(parsed.len(), 2);
        let b = parsed["b"].entries();
        assert_eq!(b[0], (NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), 7));
        assert_eq!(b[1].1, 5);
        assert_eq!(parsed["a"].len(), 2);
    }

    #[test]
    fn header_only_is_empty() {
        assert!(parse_counts_csv(HEADER.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn duplicates_and_bad_rows_name_their_line() {
        let dup = format!("{HEADER}a,2020-01-01,1\na,2020-01-01,3\n");
        match parse_counts_csv(dup.as_bytes()) {
            Err(IngestError::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("duplicate"));
            }
            other => panic!("{other:?}"),
        }
        let neg = format!("{HEADER}a,2020-01-01,1\na,2020-01-02,-4\n");
        assert!(matches!(
            parse_counts_csv(neg.as_bytes()),
            Err(IngestError::Parse { line: 3, .. })
        ));
        let date = format!("{HEADER}a,01/02/2020,1\n");
        assert!(matches!(
            parse_counts_csv(date.as_bytes()),
            Err(IngestError::Parse { line: 2, .. })
        ));
        let frac = format!("{HEADER}a,2020-01-02,1.5\n");
        assert!(parse_counts_csv(frac.as_bytes()).is_err());
        assert!(matches!(
            parse_counts_csv(b"station,date,count\n"),
            Err(IngestError::Parse { line: 1, .. })
        ));
    }
}
