use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use chrono::{DateTime, NaiveDate};

const SITE: &str = "strasbourg";

fn wm(data: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_weathermatrix"));
    cmd.env_clear().arg("--data-dir").arg(data).args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn site(data: &Path, args: &[&str]) -> Output {
    let mut full = vec!["--site", SITE];
    full.extend_from_slice(args);
    wm(data, &full, &[])
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[track_caller]
fn ok(o: Output) -> String {
    assert_eq!(code(&o), 0, "stdout:\n{}\nstderr:\n{}", stdout(&o), stderr(&o));
    stdout(&o)
}

/// Fixture written, logs ingested, both campaigns stored.
fn prepared(days: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(wm(d, &["fixture", "--seed", "11", "--days", days], &[]));
    ok(site(d, &["ingest", "strasbourg/inputs/logs"]));
    let mut campaigns: Vec<_> = std::fs::read_dir(d.join("strasbourg/inputs/campaigns"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    campaigns.sort();
    for c in campaigns {
        ok(site(d, &["campaign", "add", c.to_str().unwrap()]));
    }
    dir
}

fn content_hash(out: &str) -> String {
    out.split("content ").nth(1).unwrap().split([',', '\n']).next().unwrap().to_string()
}

#[test]
fn full_pipeline_and_idempotence() {
    let dir = prepared("40");
    let d = dir.path();
    let again = ok(wm(d, &["fixture", "--seed", "11", "--days", "40"], &[]));
    assert!(again.contains("0 file(s) written"), "{again}");
    let campaign = d.join("strasbourg/inputs/campaigns/STR-2024-04.json");
    assert!(ok(site(d, &["campaign", "add", campaign.to_str().unwrap()])).contains("unchanged"));

    let events = ok(site(d, &["events", "--faces", "NE,SW"]));
    assert!(events.contains("face comparison SW - NE"));
    let summary = std::fs::read_to_string(d.join("strasbourg/reports/events_2024-04-16_2024-05-25/summary.json")).unwrap();
    assert!(summary.contains("\"face_comparison\""));

    ok(site(d, &["index"]));
    assert!(d.join("strasbourg/reports/index_STR-2024-05.csv").exists());

    ok(site(d, &["matrix", "build", "--campaign", "STR-2024-04"]));
    let first = ok(site(d, &["matrix", "build"]));
    assert!(first.contains("78 rows x 46 columns"), "{first}");
    let rebuilt = ok(site(d, &["matrix", "build"]));
    assert!(rebuilt.contains("unchanged"));
    assert_eq!(content_hash(&first), content_hash(&rebuilt));

    let csv = d.join("export.csv");
    let exported = ok(site(d, &["matrix", "export", "--out", csv.to_str().unwrap()]));
    let imported = ok(site(d, &["matrix", "import", csv.to_str().unwrap()]));
    assert_eq!(content_hash(&exported), content_hash(&first));
    assert_eq!(content_hash(&imported), content_hash(&first));
    let bytes = std::fs::read(&csv).unwrap();
    ok(site(d, &["matrix", "export", "--out", csv.to_str().unwrap()]));
    assert_eq!(std::fs::read(&csv).unwrap(), bytes);

    let json = d.join("export.json");
    ok(site(d, &["--format", "json", "matrix", "export", "--out", json.to_str().unwrap()]));
    let imported = ok(site(d, &["matrix", "import", json.to_str().unwrap(), "--store"]));
    assert!(imported.contains("identical to the stored version"));

    let self_diff = ok(site(d, &["matrix", "diff", "STR-2024-05", "STR-2024-05"]));
    assert!(self_diff.contains("0 block(s) with nonzero delta i"));
    let rows: Vec<&str> = self_diff.lines().skip(2).filter(|l| !l.contains("block(s)")).collect();
    assert_eq!(rows.len(), 78);
    assert!(rows.iter().all(|l| l.ends_with("+0.000")));
    let diff = ok(site(d, &["matrix", "diff"]));
    assert!(diff.contains("STR-2024-04 -> STR-2024-05"));

    let report = ok(site(d, &["report"]));
    assert!(report.contains("# strasbourg / STR-2024-05"));
    assert!(report.contains("Change since STR-2024-04"));
}

/// Local days with at least one RH > 90 % sample, read straight from the
/// logger file.
fn oracle_rh_days(log: &str) -> (usize, usize) {
    let mut any = BTreeSet::new();
    let mut high = BTreeSet::new();
    let mut lines = log.lines();
    let header: Vec<&str> = lines.next().unwrap().split(';').collect();
    let rh = header.iter().position(|h| *h == "rel_humidity").unwrap();
    for line in lines {
        let f: Vec<&str> = line.split(';').collect();
        let t = DateTime::parse_from_str(f[0], "%Y-%m-%d %H:%M:%S%:z").unwrap();
        let day: NaiveDate = t.date_naive();
        let v: f64 = f[rh].replace(',', ".").parse().unwrap();
        any.insert(day);
        if v > 90.0 {
            high.insert(day);
        }
    }
    (high.len(), any.len())
}

#[test]
fn events_counts_match_oracle() {
    let dir = prepared("40");
    let d = dir.path();
    let out = ok(site(d, &["events"]));
    for sensor in ["TH-NE", "TH-SW"] {
        let log = std::fs::read_to_string(d.join(format!("strasbourg/inputs/logs/{sensor}.csv"))).unwrap();
        let (q, e) = oracle_rh_days(&log);
        let line = out.lines().find(|l| l.starts_with(sensor)).unwrap();
        assert!(line.contains(&format!(" {q}/{e} ")), "{line} vs {q}/{e}");
    }
}

#[test]
fn ingest_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(wm(d, &["fixture", "--days", "3"], &[]));
    let logs = d.join("strasbourg/inputs/logs");
    let bad_dir = d.join("bad");
    std::fs::create_dir_all(&bad_dir).unwrap();
    let bad = "timestamp;air_temp;rel_humidity\n2024-04-16 10:00:00;12,0;80\n2024-04-16 09:40:00;12,1;81\n";
    std::fs::write(bad_dir.join("TH-NE.csv"), bad).unwrap();

    let o = site(d, &["ingest", "bad/TH-NE.csv"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("TH-NE.csv") && stdout(&o).contains("row 3"), "{}", stdout(&o));

    std::fs::copy(logs.join("TH-SW.csv"), bad_dir.join("TH-SW.csv")).unwrap();
    let o = site(d, &["ingest", "bad"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("1 of 2 file(s) ingested"));
    assert!(d.join("strasbourg/series/TH-SW__air_temp.csv").exists());
    assert!(!d.join("strasbourg/series/TH-NE__air_temp.csv").exists());

    assert_eq!(code(&site(d, &["ingest", "nowhere"])), 2);
    ok(site(d, &["ingest", "strasbourg/inputs/logs"]));
}

#[test]
fn events_empty_period_and_bad_faces() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(wm(d, &["fixture", "--days", "3"], &[]));
    assert_eq!(code(&site(d, &["events"])), 2, "no series stored yet");
    ok(site(d, &["ingest", "strasbourg/inputs/logs"]));
    let o = site(d, &["events", "--from", "2030-01-01", "--to", "2030-01-02"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no readings"));
    assert_eq!(code(&site(d, &["events", "--faces", "NE"])), 2);
}

#[test]
fn campaign_findings() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(wm(d, &["fixture", "--days", "40"], &[]));
    let path = d.join("strasbourg/inputs/campaigns/STR-2024-04.json");
    let raw = std::fs::read_to_string(&path).unwrap();
    ok(site(d, &["campaign", "validate", path.to_str().unwrap()]));
    assert!(!d.join("strasbourg/campaigns/STR-2024-04.json").exists(), "validate must not store");

    let unknown = d.join("unknown.json");
    std::fs::write(&unknown, raw.replacen("\"NE-01\"", "\"XX-99\"", 1)).unwrap();
    let o = site(d, &["campaign", "add", unknown.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("unknown block XX-99"));
    assert!(!d.join("strasbourg/campaigns/STR-2024-04.json").exists());

    ok(site(d, &["campaign", "add", path.to_str().unwrap()]));
    let dup = d.join("dup.json");
    std::fs::write(&dup, raw.replace("STR-2024-04", "STR-2024-04b")).unwrap();
    let o = site(d, &["campaign", "add", dup.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("already has campaign STR-2024-04"));

    let broken = d.join("broken.json");
    std::fs::write(&broken, &raw[..raw.len() / 2]).unwrap();
    assert_eq!(code(&site(d, &["campaign", "validate", broken.to_str().unwrap()])), 2);
}

#[test]
fn matrix_prerequisites() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(wm(d, &["fixture", "--days", "3"], &[]));
    assert_eq!(code(&site(d, &["matrix", "build"])), 2, "no campaign");
    assert_eq!(code(&site(d, &["matrix", "export"])), 2, "no matrix");
    assert_eq!(code(&site(d, &["matrix", "diff"])), 2);
    assert_eq!(code(&site(d, &["report"])), 2);

    let c = d.join("strasbourg/inputs/campaigns/STR-2024-04.json");
    ok(site(d, &["campaign", "add", c.to_str().unwrap()]));
    // a schema without a column the campaign fills is a mismatch
    let mut schema = weathermatrix::matrix::MatrixSchema::default();
    schema.columns.retain(|c| c.name != "sulfate_pct");
    let schema_path = d.join("schema.json");
    std::fs::write(&schema_path, serde_json::to_string(&schema).unwrap()).unwrap();
    let o = site(d, &["matrix", "build", "--schema", schema_path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("schema mismatch"), "{}", stderr(&o));
    let o = ok(site(d, &["matrix", "build"]));
    assert!(o.contains("78 rows"));
}

#[test]
fn configuration_precedence_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(wm(d, &["fixture", "--days", "3"], &[]));
    ok(wm(d, &["--site", SITE, "ingest", "strasbourg/inputs/logs"], &[]));

    let env = [("WEATHERMATRIX_SITE", SITE), ("WEATHERMATRIX_CONDENSATION_HYSTERESIS", "0.4")];
    let o = wm(d, &["-v", "events"], &env);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let echo = stderr(&o);
    assert!(echo.contains("site = \"strasbourg\" (env)"), "{echo}");
    assert!(echo.contains("condensation_hysteresis = 0.4 (env)"));
    assert!(echo.contains("timezone = Europe/Paris (config)"));
    assert!(echo.contains("freeze_threshold = 0.0 (default)"));
    let o = wm(d, &["-v", "events", "--condensation-hysteresis", "0.3"], &env);
    assert!(stderr(&o).contains("condensation_hysteresis = 0.3 (flag)"));

    assert_eq!(code(&wm(d, &["events"], &[])), 2, "no site");
    assert_eq!(code(&wm(d, &["events"], &[("WEATHERMATRIX_SITE", "elsewhere")])), 2);
    assert_eq!(code(&wm(d, &["-v", "events"], &[("WEATHERMATRIX_SITE", SITE), ("WEATHERMATRIX_RH_DAY_THRESHOLD", "abc")])), 2);
    assert_eq!(code(&wm(d, &["frobnicate"], &[])), 2);
    assert_eq!(code(&wm(d, &["--help"], &[])), 0);

    // a leftover lock blocks the store
    std::fs::write(d.join("strasbourg/.lock"), "").unwrap();
    let o = site(d, &["events"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("lock"));
}
