//! CSV serialization of solution sets.
//!
//! Header: `pfr,sod,lambda,cv,tgf,<objective labels...>,rank,crowding`.
//! Objectives are written in natural units. Numbers carry 9 significant
//! digits; infinite crowding is written as `inf`, missing metadata as an
//! empty field.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::pareto::{Candidate, Direction, ObjectiveVector, SolutionSet};
use crate::space::{ParameterVector, N_PARAMS, PARAM_NAMES};

/// Significant digits used for every number in CSV output.
pub const SIGNIFICANT_DIGITS: usize = 9;

/// Formats `v` with [`SIGNIFICANT_DIGITS`] significant digits, `%g` style.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Parses a number written by [`format_number`] (also accepts `inf`).
pub fn parse_number(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" | "Infinity" => Some(f64::INFINITY),
        "-inf" | "-Infinity" => Some(f64::NEG_INFINITY),
        t => t.parse().ok(),
    }
}

pub fn header(labels: &[String]) -> Vec<String> {
    PARAM_NAMES
        .iter()
        .map(|s| s.to_string())
        .chain(labels.iter().cloned())
        .chain(["rank".to_string(), "crowding".to_string()])
        .collect()
}

pub fn write_solution_set<W: Write>(set: &SolutionSet, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header(set.labels()))?;
    for c in set.candidates() {
        let mut row: Vec<String> = c.decision.to_array().iter().map(|v| format_number(*v)).collect();
        row.extend(c.objectives.raw_values().iter().map(|v| format_number(*v)));
        row.push(c.rank.map(|r| r.to_string()).unwrap_or_default());
        row.push(c.crowding.map(format_number).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

pub fn solution_set_to_string(set: &SolutionSet) -> Result<String> {
    let mut buf = Vec::new();
    write_solution_set(set, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Csv(e.to_string()))
}

/// Reads a set written by [`write_solution_set`]. Objective columns are the
/// ones between `tgf` and `rank`; `directions` gives their senses in order.
pub fn read_solution_set<R: Read>(reader: R, directions: &[Direction]) -> Result<SolutionSet> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let head: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
    if head.len() < N_PARAMS + 2 || head[..N_PARAMS] != PARAM_NAMES.map(String::from) {
        return Err(Error::Csv(format!(
            "header must start with {}",
            PARAM_NAMES.join(",")
        )));
    }
    if head[head.len() - 2..] != ["rank".to_string(), "crowding".to_string()] {
        return Err(Error::Csv("header must end with rank,crowding".into()));
    }
    let labels = head[N_PARAMS..head.len() - 2].to_vec();
    let k = labels.len();
    let mut set = SolutionSet::new(labels, directions.to_vec())?;
    let mut bad_lines = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        let field = |j: usize| rec.get(j).unwrap_or("").trim();
        let nums: Option<Vec<f64>> = (0..N_PARAMS + k).map(|j| parse_number(field(j))).collect();
        let rank = match field(N_PARAMS + k) {
            "" => Some(None),
            s => s.parse::<usize>().ok().filter(|r| *r >= 1).map(Some),
        };
        let crowding = match field(N_PARAMS + k + 1) {
            "" => Some(None),
            s => parse_number(s).filter(|c| *c >= 0.0).map(Some),
        };
        match (nums, rank, crowding) {
            (Some(nums), Some(rank), Some(crowding)) if rec.len() == head.len() => {
                let mut decision = [0.0; N_PARAMS];
                decision.copy_from_slice(&nums[..N_PARAMS]);
                let ov = ObjectiveVector::from_raw(&nums[N_PARAMS..], directions)?;
                let mut c = Candidate::new(ParameterVector::from_array(decision), ov);
                c.rank = rank;
                c.crowding = crowding;
                set.push(c)?;
            }
            _ => bad_lines.push(line),
        }
    }
    if !bad_lines.is_empty() {
        return Err(Error::Csv(format!("malformed rows at lines {bad_lines:?}")));
    }
    Ok(set)
}
