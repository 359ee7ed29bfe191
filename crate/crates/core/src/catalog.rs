//! Earthquake catalogues reduced to (time, magnitude) pairs.
//!
//! Times are in days since the catalogue epoch. A [`Catalog`] owns its
//! observation window `[start, end]` and the completeness magnitude `m0`;
//! construction sorts the events and rejects anything outside the window or
//! below the cutoff.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single event: occurrence time (days) and magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub magnitude: f64,
}

impl Event {
    pub fn new(time: f64, magnitude: f64) -> Self {
        Self { time, magnitude }
    }
}

/// Ordering used everywhere events are sorted: time ascending, then larger
/// magnitude first. Combined with a stable sort, input order breaks the
/// remaining ties.
pub(crate) fn event_order(a: &Event, b: &Event) -> Ordering {
    a.time
        .total_cmp(&b.time)
        .then_with(|| b.magnitude.total_cmp(&a.magnitude))
}

/// An ordered catalogue of events observed over `[start, end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    events: Vec<Event>,
    start: f64,
    end: f64,
    m0: f64,
}

impl Catalog {
    /// Builds a catalogue, sorting the events. Every event must be finite,
    /// lie in `[start, end]` and have magnitude `>= m0`.
    pub fn new(mut events: Vec<Event>, start: f64, end: f64, m0: f64) -> Result<Self> {
        check_window(start, end)?;
        for e in &events {
            if !e.time.is_finite() || !e.magnitude.is_finite() {
                return Err(Error::Precondition(format!("non-finite event {e:?}")));
            }
            if e.time < start || e.time > end {
                return Err(Error::Precondition(format!(
                    "event at t = {} outside window [{start}, {end}]",
                    e.time
                )));
            }
            if e.magnitude < m0 {
                return Err(Error::Precondition(format!(
                    "event magnitude {} below cutoff {m0}",
                    e.magnitude
                )));
            }
        }
        events.sort_by(event_order);
        Ok(Self {
            events,
            start,
            end,
            m0,
        })
    }

    /// Builds a catalogue keeping only events inside the window and at or
    /// above the cutoff.
    pub fn filtered(events: Vec<Event>, start: f64, end: f64, m0: f64) -> Result<Self> {
        check_window(start, end)?;
        let kept = events
            .into_iter()
            .filter(|e| e.magnitude >= m0 && e.time >= start && e.time <= end)
            .collect();
        Self::new(kept, start, end, m0)
    }

    pub fn empty(start: f64, end: f64, m0: f64) -> Result<Self> {
        Self::new(Vec::new(), start, end, m0)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn m0(&self) -> f64 {
        self.m0
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().map(|e| e.time)
    }

    pub fn magnitudes(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().map(|e| e.magnitude)
    }

    /// Events with `start <= time < end`, as a new catalogue over that window.
    pub fn restrict(&self, start: f64, end: f64) -> Result<Self> {
        check_window(start, end)?;
        let events = self
            .events
            .iter()
            .copied()
            .filter(|e| e.time >= start && e.time < end)
            .collect();
        Self::new(events, start, end, self.m0)
    }

    /// Union of two catalogues over the hull of their windows.
    pub fn merge(&self, other: &Catalog) -> Result<Self> {
        let mut events = self.events.clone();
        events.extend_from_slice(&other.events);
        Self::new(
            events,
            self.start.min(other.start),
            self.end.max(other.end),
            self.m0.min(other.m0),
        )
    }

    /// Number of events whose magnitude is at least `threshold`.
    pub fn count_at_least(&self, threshold: f64) -> usize {
        self.events.iter().filter(|e| e.magnitude >= threshold).count()
    }

    /// Serializes as `time,magnitude` CSV. Values use the shortest decimal
    /// text that parses back to the same `f64`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,magnitude\n");
        for e in &self.events {
            let _ = writeln!(out, "{},{}", e.time, e.magnitude);
        }
        out
    }
}

fn check_window(start: f64, end: f64) -> Result<()> {
    if !(start.is_finite() && end.is_finite() && start < end) {
        return Err(Error::InvalidWindow { start, end });
    }
    Ok(())
}

/// Parses `time,magnitude` CSV, keeping events with magnitude `>= m0` and
/// time in `[t1, t2]`.
pub fn parse_catalog(text: &str, m0: f64, t1: f64, t2: f64) -> Result<Catalog> {
    check_window(t1, t2)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if headers.len() != 2 || &headers[0] != "time" || &headers[1] != "magnitude" {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `time,magnitude`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }

    let mut events = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let field = |i: usize, name: &str| -> Result<f64> {
            let v: f64 = record[i].parse().map_err(|_| Error::Parse {
                line,
                message: format!("invalid {name} `{}`", &record[i]),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("non-finite {name}"),
                });
            }
            Ok(v)
        };
        let time = field(0, "time")?;
        let magnitude = field(1, "magnitude")?;
        events.push(Event::new(time, magnitude));
    }
    Catalog::filtered(events, t1, t2, m0)
}

/// A catalogue split at a mainshock.
///
/// `training` holds the events strictly before the mainshock; `history`
/// additionally contains the mainshock itself and is what forecasts condition
/// on.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogSplit {
    pub training: Catalog,
    pub history: Catalog,
    pub mainshock: Event,
    pub forecast_window: (f64, f64),
}

/// Splits at the `k`-th (1-based) event with magnitude `>= threshold`.
pub fn split_at_mainshock(cat: &Catalog, threshold: f64, k: usize) -> Result<CatalogSplit> {
    let candidates: Vec<&Event> = cat.events.iter().filter(|e| e.magnitude >= threshold).collect();
    if k == 0 || k > candidates.len() {
        return Err(Error::MainshockOutOfRange {
            requested: k,
            available: candidates.len(),
        });
    }
    let mainshock = *candidates[k - 1];
    let before: Vec<Event> = cat
        .events
        .iter()
        .copied()
        .filter(|e| e.time < mainshock.time)
        .collect();
    let training = Catalog::new(before.clone(), cat.start, mainshock.time, cat.m0)?;
    let mut with_main = before;
    with_main.push(mainshock);
    let history = Catalog::new(with_main, cat.start, mainshock.time, cat.m0)?;
    Ok(CatalogSplit {
        training,
        history,
        mainshock,
        forecast_window: (mainshock.time, cat.end),
    })
}

/// Gaps between consecutive events. Tied times yield zero gaps.
pub fn inter_event_times(cat: &Catalog) -> Result<Vec<f64>> {
    if cat.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: cat.len(),
        });
    }
    Ok(cat.events.windows(2).map(|w| w[1].time - w[0].time).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat_from(times: &[f64], mags: &[f64]) -> Catalog {
        let events = times.iter().zip(mags).map(|(&t, &m)| Event::new(t, m)).collect();
        Catalog::new(events, 0.0, 10.0, 2.5).unwrap()
    }

    #[test]
    fn parse_sorts_and_filters() {
        let text = "time,magnitude\n1.0,3.2\n0.5,4.0";
        let cat = parse_catalog(text, 3.0, 0.0, 10.0).unwrap();
        assert_eq!(cat.events(), &[Event::new(0.5, 4.0), Event::new(1.0, 3.2)]);

        let cat = parse_catalog(text, 3.5, 0.0, 10.0).unwrap();
        assert_eq!(cat.events(), &[Event::new(0.5, 4.0)]);
    }

    #[test]
    fn parse_reports_line_number() {
        match parse_catalog("time,magnitude\nabc,3.2", 3.0, 0.0, 10.0) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_catalog("time,magnitude\n1,3\n2,x\n", 3.0, 0.0, 10.0) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_accepts_crlf_and_rejects_bad_header() {
        let cat = parse_catalog("time,magnitude\r\n1,3\r\n2,4\r\n", 3.0, 0.0, 10.0).unwrap();
        assert_eq!(cat.len(), 2);
        assert!(matches!(
            parse_catalog("t,m\n1,3\n", 3.0, 0.0, 10.0),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn parse_rejects_bad_window() {
        assert!(matches!(
            parse_catalog("time,magnitude\n", 3.0, 5.0, 5.0),
            Err(Error::InvalidWindow { .. })
        ));
    }

    #[test]
    fn ties_break_by_magnitude_then_input_order() {
        let events = vec![
            Event::new(1.0, 3.0),
            Event::new(1.0, 4.0),
            Event::new(0.5, 3.0),
            Event::new(1.0, 3.0),
        ];
        let cat = Catalog::new(events, 0.0, 2.0, 2.5).unwrap();
        let mags: Vec<f64> = cat.magnitudes().collect();
        assert_eq!(mags, vec![3.0, 4.0, 3.0, 3.0]);
    }

    #[test]
    fn split_examples() {
        let cat = cat_from(&[1.0, 2.0, 3.0], &[3.0, 6.0, 3.0]);
        let split = split_at_mainshock(&cat, 5.0, 1).unwrap();
        assert_eq!(split.training.times().collect::<Vec<_>>(), vec![1.0]);
        assert_eq!(split.history.times().collect::<Vec<_>>(), vec![1.0, 2.0]);
        assert_eq!(split.forecast_window, (2.0, 10.0));

        match split_at_mainshock(&cat, 7.0, 1) {
            Err(e @ Error::MainshockOutOfRange { available: 0, .. }) => {
                assert!(e.to_string().contains("0 mainshocks available"))
            }
            other => panic!("unexpected {other:?}"),
        }

        let split = split_at_mainshock(&cat, 2.5, 1).unwrap();
        assert!(split.training.is_empty());
        assert_eq!(split.history.times().collect::<Vec<_>>(), vec![1.0]);
    }

    #[test]
    fn inter_event_examples() {
        let cat = cat_from(&[0.0, 1.0, 3.0, 7.0], &[3.0; 4]);
        assert_eq!(inter_event_times(&cat).unwrap(), vec![1.0, 2.0, 4.0]);
        let cat = cat_from(&[0.0, 5.0], &[3.0; 2]);
        assert_eq!(inter_event_times(&cat).unwrap(), vec![5.0]);
        let cat = cat_from(&[0.0], &[3.0]);
        assert!(matches!(
            inter_event_times(&cat),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        ));
    }
}
