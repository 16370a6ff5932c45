//! Table and JSON emitters for the command-line front end.
//!
//! Floats are written in Rust's shortest round-trip form, so parsing a
//! CSV cell gives back the exact `f64` that was computed.

use std::fmt::Write;

use serde::Serialize;

use crate::analysis::{pcont_bound, AnalysisError, BoundInputs, ControlCurve, ThresholdSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}' (expected csv or json)")),
        }
    }
}

/// One row of the asymptotic control table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    #[serde(rename = "I")]
    pub violation: f64,
    pub control: f64,
}

pub fn curve_points(points: usize) -> Vec<CurvePoint> {
    ControlCurve::<f64>::sample(points)
        .rows()
        .iter()
        .map(|r| CurvePoint { violation: r.violation, control: r.control })
        .collect()
}

/// One row of the finite-N bound table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRow {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "I_th")]
    pub i_threshold: f64,
    pub bound: f64,
    pub epsilon_star: f64,
}

pub fn bound_rows(ns: &[u64], schedule: ThresholdSchedule) -> Result<Vec<BoundRow>, AnalysisError> {
    ns.iter()
        .map(|&n| {
            let inputs = BoundInputs::scheduled(n, schedule);
            let r = pcont_bound(&inputs)?;
            Ok(BoundRow {
                n,
                i_threshold: inputs.i_threshold,
                bound: r.bound,
                epsilon_star: r.epsilon_star,
            })
        })
        .collect()
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("I,control\n");
    for p in points {
        writeln!(out, "{},{}", p.violation, p.control).expect("writing to a String");
    }
    out
}

pub fn bound_csv(rows: &[BoundRow]) -> String {
    let mut out = String::from("N,I_th,bound,epsilon_star\n");
    for r in rows {
        writeln!(out, "{},{},{},{}", r.n, r.i_threshold, r.bound, r.epsilon_star).expect("writing to a String");
    }
    out
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String, serde_json::Error> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_csv_round_trips_values() {
        let pts = curve_points(5);
        let csv = curve_csv(&pts);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("I,control"));
        for (line, p) in lines.zip(&pts) {
            let (a, b) = line.split_once(',').unwrap();
            assert_eq!(a.parse::<f64>().unwrap(), p.violation);
            assert_eq!(b.parse::<f64>().unwrap(), p.control);
        }
    }

    #[test]
    fn bound_table_header_and_clamp() {
        let rows = bound_rows(&[2, 1000], ThresholdSchedule::Caption).unwrap();
        let csv = bound_csv(&rows);
        assert!(csv.starts_with("N,I_th,bound,epsilon_star\n2,"));
        assert_eq!(rows[0].bound, 1.0);
        assert!(rows[1].bound < 1.0);
    }

    #[test]
    fn format_parsing() {
        assert_eq!("json".parse::<Format>().unwrap(), Format::Json);
        assert!("xml".parse::<Format>().is_err());
    }
}
