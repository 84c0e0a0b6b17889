//! Number formatting and CSV writers for the output files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use devine_core::sim::{ArrivalRecord, Epoch, SimReport};
use serde_json::Value;

/// `x` to six significant digits, trailing zeros dropped. Very large or
/// very small magnitudes switch to exponent form.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // rounding can carry into a seventh digit (999999.5 -> 1000000)
        if s.trim_start_matches('-').split('.').next().unwrap().len() <= 6 {
            return trim(s);
        }
    }
    let s = format!("{x:.5e}");
    let (mantissa, e) = s.split_once('e').unwrap();
    format!("{}e{e}", trim(mantissa.to_string()))
}

fn trim(s: String) -> String {
    if s.contains('.') && !s.contains('e') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Rounds every float in a JSON tree to six significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap();
            sig6(x).parse::<f64>().ok().and_then(serde_json::Number::from_f64).map_or(Value::Null, Value::Number)
        }
        Value::Array(xs) => Value::Array(xs.into_iter().map(round_json).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

pub fn write_json(path: &Path, value: &Value) -> std::io::Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()
}

pub const SERIES_COLUMNS: [&str; 11] = [
    "time",
    "arrivals",
    "accepted",
    "acceptance_ratio",
    "revenue",
    "cost",
    "revenue_to_cost",
    "cpu_utilization",
    "link_utilization",
    "live_requests",
    "mean_messages",
];

pub fn series_row(e: &Epoch) -> Vec<String> {
    vec![
        sig6(e.time),
        e.arrivals.to_string(),
        e.accepted.to_string(),
        sig6(e.acceptance_ratio),
        sig6(e.revenue),
        sig6(e.cost),
        sig6(e.revenue_to_cost),
        sig6(e.cpu_utilization),
        sig6(e.link_utilization),
        e.live_requests.to_string(),
        sig6(e.mean_messages),
    ]
}

pub const ARRIVAL_COLUMNS: [&str; 13] = [
    "index",
    "request_id",
    "time",
    "primary",
    "virtual_nodes",
    "virtual_links",
    "vnr_hash",
    "accepted",
    "revenue",
    "cost",
    "embedding_messages",
    "embedded_messages",
    "acceptance_ratio",
];

pub fn arrival_row(a: &ArrivalRecord) -> Vec<String> {
    vec![
        a.index.to_string(),
        a.request_id.to_string(),
        sig6(a.time),
        a.primary.to_string(),
        a.virtual_nodes.to_string(),
        a.virtual_links.to_string(),
        a.vnr_hash.clone(),
        u8::from(a.accepted).to_string(),
        sig6(a.revenue),
        sig6(a.cost),
        a.embedding_messages.to_string(),
        a.embedded_messages.to_string(),
        sig6(a.acceptance_ratio),
    ]
}

pub fn write_series(path: &Path, report: &SimReport) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SERIES_COLUMNS)?;
    for e in &report.series.epochs {
        w.write_record(series_row(e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_arrivals(path: &Path, report: &SimReport) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(ARRIVAL_COLUMNS)?;
    for a in &report.arrivals {
        w.write_record(arrival_row(a))?;
    }
    w.flush()?;
    Ok(())
}
