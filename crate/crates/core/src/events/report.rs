//! Report renderings: one CSV row per event or cycle, and an SVG line plot
//! with event onsets marked.

use std::fmt::Write as _;

use chrono::{DateTime, Utc};
use serde::Serialize;

use super::cycles::{CondensationReport, CycleCount};
use crate::ingest::TimeSeries;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRow {
    pub sensor_id: String,
    pub kind: String,
    pub onset: String,
    pub end: String,
    pub min_margin: Option<f64>,
    pub parameters: String,
}

fn params(pairs: &[(&str, f64)]) -> String {
    pairs
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

fn ts(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn condensation_rows(sensor_id: &str, report: &CondensationReport) -> Vec<EventRow> {
    let p = params(&[
        ("hysteresis", report.hysteresis),
        ("magnus_a", report.coefficients.a),
        ("magnus_b", report.coefficients.b),
    ]);
    report
        .events
        .iter()
        .map(|e| EventRow {
            sensor_id: sensor_id.to_string(),
            kind: "condensation".into(),
            onset: ts(e.onset),
            end: e.end.map(ts).unwrap_or_default(),
            min_margin: Some(e.min_margin),
            parameters: p.clone(),
        })
        .collect()
}

pub fn cycle_rows(sensor_id: &str, count: &CycleCount) -> Vec<EventRow> {
    let pairs: Vec<(&str, f64)> = count.parameters.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let p = params(&pairs);
    count
        .cycles
        .iter()
        .map(|c| EventRow {
            sensor_id: sensor_id.to_string(),
            kind: count.kind.label().to_string(),
            onset: ts(c.start),
            end: ts(c.end),
            min_margin: None,
            parameters: p.clone(),
        })
        .collect()
}

pub fn write_events_csv(rows: &[EventRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(["sensor_id", "kind", "onset", "end", "min_margin", "parameters"])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io("<memory>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

/// Minimal SVG line plot of a series' ok readings with vertical markers at
/// each `onset`.
pub fn render_svg(series: &TimeSeries, onsets: &[DateTime<Utc>], title: &str) -> String {
    const W: f64 = 900.0;
    const H: f64 = 300.0;
    const PAD: f64 = 40.0;
    let pts: Vec<(i64, f64)> = series
        .ok_readings()
        .map(|r| (r.timestamp.timestamp(), r.value))
        .collect();
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{PAD}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n",
        escape(title)
    );
    if let (Some(first), Some(last)) = (pts.first(), pts.last()) {
        let (t0, t1) = (first.0 as f64, (last.0 as f64).max(first.0 as f64 + 1.0));
        let lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let hi = if hi > lo { hi } else { lo + 1.0 };
        let x = |t: f64| PAD + (t - t0) / (t1 - t0) * (W - 2.0 * PAD);
        let y = |v: f64| H - PAD - (v - lo) / (hi - lo) * (H - 2.0 * PAD);
        for t in onsets {
            let xt = x(t.timestamp() as f64);
            if (PAD..=W - PAD).contains(&xt) {
                let _ = writeln!(
                    svg,
                    "<line x1=\"{xt:.1}\" y1=\"{PAD}\" x2=\"{xt:.1}\" y2=\"{:.1}\" stroke=\"#d62728\" stroke-width=\"0.5\"/>",
                    H - PAD
                );
            }
        }
        svg.push_str("<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\" points=\"");
        for (i, (t, v)) in pts.iter().enumerate() {
            if i > 0 {
                svg.push(' ');
            }
            let _ = write!(svg, "{:.1},{:.1}", x(*t as f64), y(*v));
        }
        svg.push_str("\"/>\n");
        let _ = writeln!(
            svg,
            "<text x=\"4\" y=\"{:.1}\" font-size=\"10\">{lo:.1}</text>\n<text x=\"4\" y=\"{:.1}\" font-size=\"10\">{hi:.1}</text>",
            y(lo),
            y(hi) + 10.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::cycles::count_freeze_thaw_cycles;
    use crate::ingest::Quantity;
    use chrono::{Duration, TimeZone};

    #[test]
    fn cycle_rows_carry_parameters() {
        let t0 = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
        let s = TimeSeries::from_points(
            "TH-SW",
            Quantity::AirTemp,
            [5.0, -2.0, 4.0].iter().enumerate().map(|(i, v)| (t0 + Duration::hours(i as i64), *v)),
        );
        let c = count_freeze_thaw_cycles(&s, 0.0, 0.5).unwrap();
        let csv = write_events_csv(&cycle_rows("TH-SW", &c)).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "sensor_id,kind,onset,end,min_margin,parameters");
        assert_eq!(
            lines[1],
            "TH-SW,freeze_thaw,2024-01-01T01:00:00Z,2024-01-01T02:00:00Z,,hysteresis=0.5;threshold=0"
        );
        let svg = render_svg(&s, &[c.cycles[0].start], "T <SW>");
        assert!(svg.starts_with("<svg") && svg.contains("polyline") && svg.contains("&lt;SW&gt;"));
        assert_eq!(svg.matches("<line").count(), 1);
    }

    #[test]
    fn empty_report_still_has_header() {
        let csv = write_events_csv(&[]).unwrap();
        assert_eq!(csv.trim(), "sensor_id,kind,onset,end,min_margin,parameters");
    }
}
