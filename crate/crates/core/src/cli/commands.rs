use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate};
use chrono_tz::Tz;
use serde::Serialize;

use super::config::{Resolved, SiteConfig, ThresholdFlags};
use super::store::{read, write, Store};
use super::{CampaignCmd, Cli, Command, Format, MatrixCmd, Outcome, ThresholdArgs};
use crate::assessment::{validate_campaign, BlockKind, Campaign, Family, ValidatedCampaign};
use crate::events::{render_svg, write_events_csv, FaceComparison, PeriodSummary};
use crate::fixtures;
use crate::index::campaign_indices;
use crate::ingest::{Face, Quantity, SensorRegistry, TimeSeries};
use crate::matrix::{
    build_matrix, diff_matrices, export, import_csv, import_json, sensor_block_map, AlterationMatrix, CsvSidecar,
    MatrixFormat, MatrixInputs, MatrixSchema,
};
use crate::pipeline::{
    compare_sensor_faces, face_summaries, ingest_files, merge_series, sensor_climates, sensor_events_all, SensorClimate,
};
use crate::time::{local_midnight, Period};
use crate::{Error, Result};

type Env<'a> = &'a dyn Fn(&str) -> Option<String>;

struct Ctx<'a> {
    data_dir: PathBuf,
    store: Store,
    cfg: SiteConfig,
    settings: Resolved,
    format: Format,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn path(&self, p: &Path) -> PathBuf {
        resolve_path(&self.data_dir, p)
    }

    fn tz(&self) -> Tz {
        self.settings.timezone.value
    }
}

fn resolve_path(root: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        root.join(p)
    }
}

// Output to the command's streams is best effort: a closed pipe must not
// turn a finished command into a failure.
macro_rules! say {
    ($w:expr, $($arg:tt)*) => {{
        let _ = writeln!($w, $($arg)*);
    }};
}

fn parse_tz(raw: &str) -> Result<Tz> {
    raw.parse()
        .map_err(|_| Error::Config(format!("unknown timezone {raw:?}")))
}

pub(super) fn dispatch(cli: &Cli, env: Env<'_>, out: &mut dyn Write, err: &mut dyn Write) -> Result<Outcome> {
    let data_dir = cli
        .data_dir
        .clone()
        .or_else(|| env("WEATHERMATRIX_DATA_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let format = match (cli.format, env("WEATHERMATRIX_FORMAT")) {
        (Some(f), _) => f,
        (None, Some(raw)) => match raw.to_ascii_lowercase().as_str() {
            "csv" => Format::Csv,
            "json" => Format::Json,
            _ => return Err(Error::Config(format!("WEATHERMATRIX_FORMAT={raw:?} is not csv or json"))),
        },
        (None, None) => Format::Csv,
    };
    let tz_flag = cli.timezone.as_deref().map(parse_tz).transpose()?;
    let site_hint = cli.site.clone().or_else(|| env("WEATHERMATRIX_SITE"));

    if let Command::Fixture { seed, days, start, all_20min, force } = &cli.command {
        let site = site_hint.unwrap_or_else(|| fixtures::STRASBOURG.to_string());
        let store = Store::new(&data_dir, &site)?;
        let _lock = store.lock()?;
        return fixture(&store, *seed, *days, *start, *all_20min, *force, out);
    }

    let explicit = cli
        .config
        .clone()
        .or_else(|| env("WEATHERMATRIX_CONFIG").map(PathBuf::from))
        .map(|p| resolve_path(&data_dir, &p));
    let config_path = match (explicit, &site_hint) {
        (Some(p), _) => p,
        (None, Some(site)) => Store::new(&data_dir, site)?.default_config_path(),
        (None, None) => {
            return Err(Error::Config(
                "no site given: use --site, WEATHERMATRIX_SITE or --config".into(),
            ))
        }
    };
    if !config_path.exists() {
        return Err(Error::Config(format!(
            "no site config at {}; write one or run `weathermatrix fixture`",
            config_path.display()
        )));
    }
    let cfg = SiteConfig::load(&config_path)?;
    let thresholds = match &cli.command {
        Command::Events { thresholds, .. } | Command::Matrix(MatrixCmd::Build { thresholds, .. }) => thresholds.flags(),
        _ => ThresholdFlags::default(),
    };
    let settings = Resolved::new(cli.site.clone(), tz_flag, &thresholds, Some(&cfg), env)?;
    if settings.site_id.value != cfg.site_id {
        return Err(Error::SiteMismatch(settings.site_id.value.clone(), cfg.site_id.clone()));
    }
    let store = Store::new(&data_dir, &settings.site_id.value)?;
    if cli.verbose {
        say!(err, "data_dir = {:?}", data_dir.display().to_string());
        say!(err, "config = {:?}", config_path.display().to_string());
        say!(err, "format = {:?}", format);
        for line in settings.echo() {
            say!(err, "{line}");
        }
    }
    let _lock = store.lock()?;
    let mut ctx = Ctx {
        data_dir,
        store,
        cfg,
        settings,
        format,
        out,
        err,
    };
    match &cli.command {
        Command::Fixture { .. } => unreachable!("handled above"),
        Command::Ingest { paths } => ingest(&mut ctx, paths),
        Command::Events { from, to, faces, svg, thresholds: ThresholdArgs { .. } } => {
            events(&mut ctx, *from, *to, faces.as_deref(), *svg)
        }
        Command::Campaign(CampaignCmd::Validate { file }) => campaign(&mut ctx, file, false),
        Command::Campaign(CampaignCmd::Add { file }) => campaign(&mut ctx, file, true),
        Command::Index { campaign } => index(&mut ctx, campaign.as_deref()),
        Command::Matrix(MatrixCmd::Build { campaign, lookback_days, schema, .. }) => {
            matrix_build(&mut ctx, campaign.as_deref(), *lookback_days, schema.as_deref())
        }
        Command::Matrix(MatrixCmd::Export { campaign, out }) => matrix_export(&mut ctx, campaign.as_deref(), out.as_deref()),
        Command::Matrix(MatrixCmd::Import { file, sidecar, store }) => {
            matrix_import(&mut ctx, file, sidecar.as_deref(), *store)
        }
        Command::Matrix(MatrixCmd::Diff { older, newer }) => matrix_diff(&mut ctx, older.as_deref(), newer.as_deref()),
        Command::Report { campaign } => report(&mut ctx, campaign.as_deref()),
    }
}

// ---------------------------------------------------------------- fixture

/// Writes `content` unless an identical file is already there. A differing
/// file is only replaced with `force`.
fn write_if_changed(path: &Path, content: &str, force: bool) -> Result<bool> {
    if path.exists() {
        if read(path)? == content {
            return Ok(false);
        }
        if !force {
            return Err(Error::Config(format!(
                "{} exists with different content; pass --force to overwrite",
                path.display()
            )));
        }
    }
    write(path, content)?;
    Ok(true)
}

fn fixture(
    store: &Store,
    seed: u64,
    days: u32,
    start: NaiveDate,
    all_20min: bool,
    force: bool,
    out: &mut dyn Write,
) -> Result<Outcome> {
    if days == 0 {
        return Err(Error::InvalidParameter("--days must be at least 1".into()));
    }
    let site = store.site_id.clone();
    let tz = fixtures::STRASBOURG_TZ;
    let mut blocks = fixtures::strasbourg_blocks();
    blocks.site_id = site.clone();
    let mut sensors = fixtures::strasbourg_sensors();
    sensors.site_id = site.clone();
    if all_20min {
        for s in &mut sensors.sensors {
            s.expected_interval_minutes = 20;
        }
    }
    let mut cfg = SiteConfig::new(site.clone());
    cfg.timezone = Some(tz.name().to_string());
    cfg.thresholds.soaking_wet = Some(6.0);
    cfg.thresholds.soaking_dry = Some(4.5);

    let mut first = fixtures::initial_campaign(&blocks, seed);
    first.site_id = site.clone();
    first.date = start;
    first.campaign_id = format!("STR-{}", start.format("%Y-%m"));
    let end = start + Duration::days(i64::from(days));
    let mut second = fixtures::follow_up_campaign(&first, end, seed.wrapping_add(1));
    if first.campaign_id == second.campaign_id {
        second.campaign_id = format!("STR-{}", end.format("%Y-%m-%d"));
    }

    let mut written = 0usize;
    let mut file = |rel: &str, content: &str| -> Result<()> {
        written += usize::from(write_if_changed(&store.root.join(rel), content, force)?);
        Ok(())
    };
    file("site.json", &cfg.to_json())?;
    file("sensors.json", &sensors.to_json())?;
    file("blocks.json", &blocks.to_json())?;
    for c in [&first, &second] {
        file(&format!("inputs/campaigns/{}.json", c.campaign_id), &c.to_json())?;
    }
    let site_logs = fixtures::synthetic_site(&sensors, local_midnight(start, tz)?, days, seed);
    let mut rows = 0usize;
    for (spec, series) in &site_logs {
        rows += series.first().map_or(0, TimeSeries::len);
        file(&format!("inputs/logs/{}.csv", spec.sensor_id), &fixtures::logger_csv(series, tz))?;
    }
    say!(
        out,
        "fixture {site} (seed {seed}) in {}: {} blocks, {} sensors, {rows} log rows over {days} days, campaigns {} and {}; {written} file(s) written",
        store.root.display(),
        blocks.len(),
        sensors.sensors.len(),
        first.campaign_id,
        second.campaign_id
    );
    Ok(Outcome::Ok)
}

// ----------------------------------------------------------------- ingest

fn csv_files(path: &Path) -> std::result::Result<Vec<PathBuf>, std::io::Error> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
            .collect();
        files.sort();
        Ok(files)
    } else {
        std::fs::metadata(path).map(|_| vec![path.to_path_buf()])
    }
}

fn ingest(ctx: &mut Ctx<'_>, paths: &[PathBuf]) -> Result<Outcome> {
    let registry = ctx.store.sensors(&ctx.cfg)?;
    let mut failures: Vec<(String, String)> = Vec::new();
    let mut inputs: Vec<(String, String)> = Vec::new();
    for p in paths {
        let full = ctx.path(p);
        match csv_files(&full) {
            Ok(files) => {
                for f in files {
                    match std::fs::read_to_string(&f) {
                        Ok(raw) => inputs.push((f.display().to_string(), raw)),
                        Err(e) => failures.push((f.display().to_string(), e.to_string())),
                    }
                }
            }
            Err(e) => failures.push((full.display().to_string(), e.to_string())),
        }
    }
    if inputs.is_empty() && failures.is_empty() {
        return Err(Error::NoData("no .csv files found".into()));
    }

    let mut stored = ctx.store.load_series(&registry)?;
    let mut touched = std::collections::BTreeSet::new();
    let mut rejected_total = 0usize;
    let n_files = inputs.len() + failures.len();
    for file in ingest_files(&registry, &inputs, ctx.tz()) {
        match file.result {
            Err(e) => failures.push((file.name, e.to_string())),
            Ok((series, rejected)) => {
                let sensor = file.sensor_id.unwrap_or_default();
                let interval = registry.get(&sensor).map_or(Duration::minutes(20), |s| s.expected_interval());
                let n = series.first().map_or(0, TimeSeries::len);
                say!(
                    ctx.out,
                    "ok    {}  sensor {sensor}  {} channel(s) x {n} readings  {} rejected row(s)",
                    file.name,
                    series.len(),
                    rejected.len()
                );
                for r in rejected.iter().take(10) {
                    say!(ctx.out, "        row {}: {}", r.row, r.reason);
                }
                if rejected.len() > 10 {
                    say!(ctx.out, "        ... {} more", rejected.len() - 10);
                }
                rejected_total += rejected.len();
                for s in series {
                    let key = (s.sensor_id.clone(), s.quantity);
                    let merged = match stored.get(&key) {
                        Some(old) => merge_series(old, &s, interval),
                        None => s,
                    };
                    stored.insert(key.clone(), merged);
                    touched.insert(key);
                }
            }
        }
    }
    for (name, e) in &failures {
        say!(ctx.out, "FAIL  {name}  {e}");
    }
    for key in &touched {
        let s = &stored[key];
        ctx.store.save_series(s)?;
        let longest = s.gaps.iter().map(|g| g.duration()).max();
        say!(
            ctx.out,
            "series {}/{}: {} readings{}, {} gap(s){}",
            key.0,
            key.1.label(),
            s.len(),
            s.span().map_or(String::new(), |(a, b)| format!(
                " from {} to {}",
                a.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                b.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
            )),
            s.gaps.len(),
            longest.map_or(String::new(), |d| format!(", longest {} min", d.num_minutes()))
        );
    }
    say!(
        ctx.out,
        "{} of {n_files} file(s) ingested, {} series updated",
        n_files - failures.len(),
        touched.len()
    );
    if failures.len() == n_files {
        return Err(Error::MalformedPayload("no file could be ingested".into()));
    }
    Ok(if failures.is_empty() && rejected_total == 0 {
        Outcome::Ok
    } else {
        Outcome::Findings
    })
}

// ----------------------------------------------------------------- events

#[derive(Serialize)]
struct EventsReport<'a> {
    site_id: &'a str,
    timezone: String,
    first_day: NaiveDate,
    last_day: NaiveDate,
    period: Period,
    parameters: BTreeMap<String, String>,
    faces: &'a BTreeMap<Face, PeriodSummary>,
    sensors: Vec<&'a SensorClimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    face_comparison: Option<FaceComparison>,
}

fn stored_days(series: &crate::pipeline::SeriesSet, tz: Tz) -> Option<(NaiveDate, NaiveDate)> {
    let spans: Vec<_> = series.values().filter_map(TimeSeries::span).collect();
    let first = spans.iter().map(|s| s.0).min()?;
    let last = spans.iter().map(|s| s.1).max()?;
    Some((first.with_timezone(&tz).date_naive(), last.with_timezone(&tz).date_naive()))
}

fn parse_faces(raw: &str) -> Result<(Face, Face)> {
    let parts: Vec<&str> = raw.split(',').collect();
    match parts.as_slice() {
        [a, b] => match (Face::parse(a), Face::parse(b)) {
            (Some(a), Some(b)) if a != b => Ok((a, b)),
            _ => Err(Error::InvalidParameter(format!("--faces {raw:?}: expected two different faces like NE,SW"))),
        },
        _ => Err(Error::InvalidParameter(format!("--faces {raw:?}: expected two faces like NE,SW"))),
    }
}

fn climate_parameters(ctx: &Ctx<'_>) -> BTreeMap<String, String> {
    let s = &ctx.settings;
    let mut p = BTreeMap::from([
        ("timezone".to_string(), s.timezone.value.name().to_string()),
        ("freeze_threshold".to_string(), s.freeze_threshold.value.to_string()),
        ("freeze_hysteresis".to_string(), s.freeze_hysteresis.value.to_string()),
        ("condensation_hysteresis".to_string(), s.condensation_hysteresis.value.to_string()),
        ("rh_day_threshold".to_string(), s.rh_day_threshold.value.to_string()),
    ]);
    if let (Some(w), Some(d)) = (s.soaking_wet.value, s.soaking_dry.value) {
        p.insert("soaking_wet".into(), w.to_string());
        p.insert("soaking_dry".into(), d.to_string());
    }
    p
}

fn has_data(c: &SensorClimate) -> bool {
    c.air_temp.is_some()
        || c.surface_temp.is_some()
        || c.rel_humidity.is_some()
        || c.water_content.is_some()
        || c.crack_width.is_some()
}

fn events(ctx: &mut Ctx<'_>, from: Option<NaiveDate>, to: Option<NaiveDate>, faces: Option<&str>, svg: bool) -> Result<Outcome> {
    let pair = faces.map(parse_faces).transpose()?;
    let registry = ctx.store.sensors(&ctx.cfg)?;
    let series = ctx.store.load_series(&registry)?;
    let tz = ctx.tz();
    let (first, last) = stored_days(&series, tz).ok_or_else(|| Error::NoData("no stored series; run ingest first".into()))?;
    let (from, to) = (from.unwrap_or(first), to.unwrap_or(last));
    if to < from {
        return Err(Error::InvalidParameter(format!("--to {to} is before --from {from}")));
    }
    let period = Period::local_days(from, to, tz)?;
    let opts = ctx.settings.climate_options(period)?;
    let all = sensor_events_all(&registry, &series, &opts)?;
    if !all.iter().any(|e| has_data(&e.climate)) {
        return Err(Error::NoData(format!("no readings between {from} and {to}")));
    }
    let summaries = face_summaries(&registry, &series, &period);
    let comparison = pair
        .map(|(a, b)| compare_sensor_faces(&registry, &series, a, b, &period))
        .transpose()?;

    let report = EventsReport {
        site_id: &ctx.store.site_id,
        timezone: tz.name().to_string(),
        first_day: from,
        last_day: to,
        period,
        parameters: climate_parameters(ctx),
        faces: &summaries,
        sensors: all.iter().map(|e| &e.climate).collect(),
        face_comparison: comparison.clone(),
    };
    let dir = ctx.store.reports_dir().join(format!("events_{from}_{to}"));
    write(&dir.join("summary.json"), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    let rows: Vec<_> = all.iter().flat_map(|e| e.rows()).collect();
    write(&dir.join("events.csv"), &write_events_csv(&rows)?)?;

    let mut plots = 0;
    if svg {
        for e in &all {
            let id = &e.climate.sensor_id;
            let windowed = |q: Quantity| series.get(&(id.clone(), q)).map(|s| s.within(&period));
            if let (Some(c), Some(ts)) = (&e.condensation, windowed(Quantity::SurfaceTemp)) {
                let onsets: Vec<_> = c.events.iter().map(|ev| ev.onset).collect();
                let svg = render_svg(&ts, &onsets, &format!("{id} surface temperature, condensation onsets"));
                write(&dir.join(format!("{id}_condensation.svg")), &svg)?;
                plots += 1;
            }
            if let (Some(c), Some(t)) = (&e.freeze_thaw, windowed(Quantity::AirTemp)) {
                let onsets: Vec<_> = c.cycles.iter().map(|cy| cy.start).collect();
                write(&dir.join(format!("{id}_freeze_thaw.svg")), &render_svg(&t, &onsets, &format!("{id} air temperature, freeze-thaw cycles")))?;
                plots += 1;
            }
            if let (Some(c), Some(w)) = (&e.soaking_drying, windowed(Quantity::WaterContent)) {
                let onsets: Vec<_> = c.cycles.iter().map(|cy| cy.start).collect();
                write(&dir.join(format!("{id}_soaking_drying.svg")), &render_svg(&w, &onsets, &format!("{id} water content, soaking/drying cycles")))?;
                plots += 1;
            }
        }
    }

    let o = &mut *ctx.out;
    say!(o, "site {} from {from} to {to} ({})", ctx.store.site_id, tz.name());
    say!(o, "face   avg T / avg Ts / avg RH / T max / T min / RH max / RH min");
    for (face, s) in &summaries {
        say!(o, "{:<6} {}", face.label(), s.table_row());
    }
    let opt = |v: Option<usize>| v.map_or_else(|| "-".to_string(), |n| n.to_string());
    say!(o, "sensor       condensation  freeze-thaw  rh>{}-days  soaking/drying", ctx.settings.rh_day_threshold.value);
    for e in &all {
        let c = &e.climate;
        say!(
            o,
            "{:<12} {:>12}  {:>11}  {:>10}  {:>14}",
            c.sensor_id,
            opt(c.condensation_events),
            opt(c.freeze_thaw_cycles),
            c.rh_days.map_or_else(|| "-".to_string(), |d| format!("{}/{}", d.qualifying_days, d.evaluable_days)),
            opt(c.soaking_drying_cycles)
        );
    }
    if let Some(c) = &comparison {
        say!(
            o,
            "face comparison {} - {}: delta avg T {:+.2} °C over {} paired samples{}",
            c.face_b,
            c.face_a,
            c.delta_avg_t,
            c.n_t,
            c.delta_avg_rh.map_or(String::new(), |d| format!(", delta avg RH {d:+.2} % over {} samples", c.n_rh))
        );
    }
    say!(o, "wrote {} (summary.json, events.csv, {plots} plot(s))", dir.display());
    Ok(Outcome::Ok)
}

// --------------------------------------------------------------- campaign

fn campaign(ctx: &mut Ctx<'_>, file: &Path, add: bool) -> Result<Outcome> {
    let blocks = ctx.store.blocks(&ctx.cfg)?;
    let path = ctx.path(file);
    let c = Campaign::from_json(&read(&path)?).map_err(|e| Error::MalformedPayload(format!("{}: {e}", path.display())))?;
    let report = validate_campaign(&c, &blocks);
    let mut findings: Vec<String> = report.findings.iter().map(ToString::to_string).collect();
    let mut already_stored = false;
    for stored in ctx.store.campaigns()? {
        if stored.campaign_id == c.campaign_id {
            if stored == c {
                already_stored = true;
            } else {
                findings.push(format!("campaign id {} is already stored with different content", c.campaign_id));
            }
        } else if stored.site_id == c.site_id && stored.date == c.date {
            findings.push(format!(
                "site {} already has campaign {} on {}",
                c.site_id, stored.campaign_id, c.date
            ));
        }
    }
    let o = &mut *ctx.out;
    say!(o, "campaign {} ({}, {}): {} finding(s)", c.campaign_id, c.site_id, c.date, findings.len());
    for f in &findings {
        say!(o, "  - {f}");
    }
    if !findings.is_empty() {
        if add {
            say!(o, "not stored");
        }
        return Ok(Outcome::Findings);
    }
    if add {
        if already_stored {
            say!(o, "already stored, unchanged");
        } else {
            let p = ctx.store.save_campaign(&c)?;
            say!(o, "stored {}", p.display());
        }
    }
    Ok(Outcome::Ok)
}

/// The requested campaign (default: latest) and the one before it.
fn pick_campaign(store: &Store, id: Option<&str>) -> Result<(Campaign, Option<Campaign>)> {
    let all = store.campaigns()?;
    let i = match id {
        Some(id) => all
            .iter()
            .position(|c| c.campaign_id == id)
            .ok_or_else(|| Error::NoData(format!("campaign {id} is not stored")))?,
        None => all
            .len()
            .checked_sub(1)
            .ok_or_else(|| Error::NoData("no campaign stored; run `campaign add` first".into()))?,
    };
    let previous = i.checked_sub(1).map(|j| all[j].clone());
    Ok((all[i].clone(), previous))
}

// ------------------------------------------------------------------ index

#[derive(Serialize)]
struct IndexRow<'a> {
    block_id: &'a str,
    i_structure: Option<f64>,
    cracks_deformation: Option<f64>,
    detachment: Option<f64>,
    material_loss: Option<f64>,
    chromatic_deposit: Option<f64>,
    biological_colonization: Option<f64>,
    i_alteration: Option<f64>,
    i: f64,
    policy_hash: &'a str,
}

fn index(ctx: &mut Ctx<'_>, id: Option<&str>) -> Result<Outcome> {
    let blocks = ctx.store.blocks(&ctx.cfg)?;
    let policy = ctx.store.policy(&ctx.cfg)?;
    let (campaign, previous) = pick_campaign(&ctx.store, id)?;
    let cid = campaign.campaign_id.clone();
    let validated = ValidatedCampaign::new(campaign, &blocks)?;
    let results = campaign_indices(&blocks, &validated, &policy, previous.as_ref())?;
    let rows: Vec<IndexRow<'_>> = results
        .iter()
        .map(|(s, w)| IndexRow {
            block_id: &s.block_id,
            i_structure: s.i_structure,
            cracks_deformation: s.family(Family::CracksDeformation),
            detachment: s.family(Family::Detachment),
            material_loss: s.family(Family::MaterialLoss),
            chromatic_deposit: s.family(Family::ChromaticDeposit),
            biological_colonization: s.family(Family::BiologicalColonization),
            i_alteration: w.i_alteration,
            i: w.i,
            policy_hash: &w.policy_hash,
        })
        .collect();
    let (ext, body) = match ctx.format {
        Format::Json => ("json", serde_json::to_string_pretty(&rows)? + "\n"),
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            for r in &rows {
                w.serialize(r)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::io("<memory>", e.into_error()))?;
            ("csv", String::from_utf8(bytes).expect("utf-8"))
        }
    };
    let path = ctx.store.reports_dir().join(format!("index_{cid}.{ext}"));
    write(&path, &body)?;
    let o = &mut *ctx.out;
    let f = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
    say!(o, "campaign {cid}, policy {}", &policy.hash()[..12]);
    say!(o, "{:<10} {:>11} {:>12} {:>7}", "block", "i_structure", "i_alteration", "i");
    for r in &rows {
        say!(o, "{:<10} {:>11} {:>12} {:>7.3}", r.block_id, f(r.i_structure), f(r.i_alteration), r.i);
    }
    say!(o, "wrote {}", path.display());
    Ok(Outcome::Ok)
}

// ----------------------------------------------------------------- matrix

fn matrix_build(ctx: &mut Ctx<'_>, id: Option<&str>, lookback_days: Option<u32>, schema: Option<&Path>) -> Result<Outcome> {
    let blocks = ctx.store.blocks(&ctx.cfg)?;
    let sensors: SensorRegistry = ctx.store.sensors(&ctx.cfg)?;
    let policy = ctx.store.policy(&ctx.cfg)?;
    let schema = match schema {
        Some(p) => {
            let path = ctx.path(p);
            let s: MatrixSchema = serde_json::from_str(&read(&path)?)
                .map_err(|e| Error::SchemaMismatch(format!("{}: {e}", path.display())))?;
            s.validate().map_err(|e| Error::SchemaMismatch(e.to_string()))?;
            s
        }
        None => MatrixSchema::default(),
    };
    let (campaign, previous) = pick_campaign(&ctx.store, id)?;
    let tz = ctx.tz();
    let window_start = match (lookback_days, &previous) {
        (Some(d), _) => campaign.date - Duration::days(i64::from(d)),
        (None, Some(p)) => p.date,
        (None, None) => campaign.date - Duration::days(182),
    };
    let lookback = Period::new(local_midnight(window_start, tz)?, local_midnight(campaign.date, tz)?)?;
    let validated = ValidatedCampaign::new(campaign, &blocks)?;
    let indices = campaign_indices(&blocks, &validated, &policy, previous.as_ref())?;
    let series = ctx.store.load_series(&sensors)?;
    let climate = sensor_climates(&sensors, &series, &ctx.settings.climate_options(lookback)?)?;
    if !climate.values().any(has_data) {
        say!(ctx.err, "warning: no sensor data between {window_start} and {}; climate cells stay missing", validated.date);
    }
    let salt_thresholds = ctx.cfg.salt_thresholds.unwrap_or_default();
    let mut parameters = climate_parameters(ctx);
    parameters.insert("lookback_start".into(), window_start.to_string());
    parameters.insert("lookback_end".into(), validated.date.to_string());
    parameters.insert("salt_thresholds".into(), serde_json::to_string(&salt_thresholds)?);
    let sensor_blocks = sensor_block_map(&sensors);
    let m = build_matrix(
        &MatrixInputs {
            registry: &blocks,
            campaign: &validated,
            previous: previous.as_ref(),
            indices: &indices,
            climate: &climate,
            sensor_blocks: &sensor_blocks,
            salt_thresholds,
            policy_hash: policy.hash(),
            lookback: Some(lookback),
            parameters,
        },
        &schema,
    )?;
    let changed = ctx.store.save_matrix(&m)?;
    say!(
        ctx.out,
        "matrix {}: {} rows x {} columns, content {}, policy {}{}",
        m.meta.campaign_id,
        m.n_rows(),
        m.n_columns(),
        m.content_hash(),
        &m.meta.policy_hash[..12],
        if changed { ", stored" } else { ", unchanged" }
    );
    Ok(Outcome::Ok)
}

fn latest_matrix_id(store: &Store) -> Result<String> {
    store
        .manifest()?
        .latest()
        .map(|e| e.campaign_id.clone())
        .ok_or_else(|| Error::NoData("no matrix stored; run `matrix build` first".into()))
}

fn matrix_export(ctx: &mut Ctx<'_>, id: Option<&str>, out: Option<&Path>) -> Result<Outcome> {
    let id = match id {
        Some(id) => id.to_string(),
        None => latest_matrix_id(&ctx.store)?,
    };
    let m = ctx.store.load_matrix(&id)?;
    let format = match ctx.format {
        Format::Csv => MatrixFormat::Csv,
        Format::Json => MatrixFormat::Json,
    };
    let ext = if format == MatrixFormat::Csv { "csv" } else { "json" };
    let path = match out {
        Some(p) => ctx.path(p),
        None => ctx.store.reports_dir().join(format!("matrix_{id}.{ext}")),
    };
    write(&path, &export(&m, format))?;
    if format == MatrixFormat::Csv {
        let sidecar = sidecar_path(&path);
        write(&sidecar, &(serde_json::to_string_pretty(&CsvSidecar::of(&m))? + "\n"))?;
        say!(ctx.out, "wrote {} and {}", path.display(), sidecar.display());
    } else {
        say!(ctx.out, "wrote {}", path.display());
    }
    say!(ctx.out, "content {}", m.content_hash());
    Ok(Outcome::Ok)
}

fn sidecar_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn matrix_import(ctx: &mut Ctx<'_>, file: &Path, sidecar: Option<&Path>, store_it: bool) -> Result<Outcome> {
    let path = ctx.path(file);
    let raw = read(&path)?;
    let is_csv = path.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv"));
    let m: AlterationMatrix = if is_csv {
        let side = sidecar.map_or_else(|| sidecar_path(&path), |p| ctx.path(p));
        let meta: CsvSidecar = serde_json::from_str(&read(&side)?)
            .map_err(|e| Error::MalformedPayload(format!("{}: {e}", side.display())))?;
        import_csv(&raw, &meta.schema, meta.meta)?
    } else {
        import_json(&raw)?
    };
    if m.meta.site_id != ctx.store.site_id {
        return Err(Error::SiteMismatch(ctx.store.site_id.clone(), m.meta.site_id.clone()));
    }
    say!(
        ctx.out,
        "matrix {}: {} rows x {} columns, content {}",
        m.meta.campaign_id,
        m.n_rows(),
        m.n_columns(),
        m.content_hash()
    );
    if store_it {
        let changed = ctx.store.save_matrix(&m)?;
        say!(ctx.out, "{}", if changed { "stored" } else { "identical to the stored version" });
    }
    Ok(Outcome::Ok)
}

fn matrix_diff(ctx: &mut Ctx<'_>, older: Option<&str>, newer: Option<&str>) -> Result<Outcome> {
    let manifest = ctx.store.manifest()?;
    let (a, b) = match (older, newer) {
        (Some(a), Some(b)) => (a.to_string(), b.to_string()),
        (Some(a), None) => (a.to_string(), latest_matrix_id(&ctx.store)?),
        (None, _) => {
            let n = manifest.versions.len();
            if n < 2 {
                return Err(Error::NoData("fewer than two stored matrices; name the versions to compare".into()));
            }
            (manifest.versions[n - 2].campaign_id.clone(), manifest.versions[n - 1].campaign_id.clone())
        }
    };
    let d = diff_matrices(&ctx.store.load_matrix(&a)?, &ctx.store.load_matrix(&b)?)?;
    let json = serde_json::to_string_pretty(&d)? + "\n";
    write(&ctx.store.reports_dir().join(format!("diff_{a}_{b}.json")), &json)?;
    match ctx.format {
        Format::Json => {
            let _ = ctx.out.write_all(json.as_bytes());
        }
        Format::Csv => {
            let _ = ctx.out.write_all(d.table().as_bytes());
            say!(ctx.out, "{} block(s) with nonzero delta i", d.nonzero_delta_i().len());
        }
    }
    Ok(Outcome::Ok)
}

// ----------------------------------------------------------------- report

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn report(ctx: &mut Ctx<'_>, id: Option<&str>) -> Result<Outcome> {
    let id = match id {
        Some(id) => id.to_string(),
        None => latest_matrix_id(&ctx.store)?,
    };
    let m = ctx.store.load_matrix(&id)?;
    let manifest = ctx.store.manifest()?;
    let num = |block: &str, col: &str| m.get(block, col).and_then(|c| c.as_f64());
    let text = |block: &str, col: &str| m.get(block, col).and_then(|c| c.as_str()).unwrap_or("").to_string();

    let mut s = String::new();
    let _ = writeln!(s, "# {} / {}\n", m.meta.site_id, m.meta.campaign_id);
    let _ = writeln!(s, "- as of: {}", m.meta.as_of);
    let _ = writeln!(s, "- blocks: {} ({} columns)", m.n_rows(), m.n_columns());
    let _ = writeln!(s, "- policy: {}", m.meta.policy_hash);
    let _ = writeln!(s, "- content: {}", m.content_hash());
    if let Some(p) = m.meta.lookback {
        let _ = writeln!(s, "- climate window: {p}");
    }

    let _ = writeln!(s, "\n## Weathering index by face\n");
    let _ = writeln!(s, "| face | kind | blocks | mean i | max i | mean avg T | mean avg RH | condensation events |");
    let _ = writeln!(s, "|---|---|---|---|---|---|---|---|");
    let mut groups: BTreeMap<(String, String), Vec<&str>> = BTreeMap::new();
    for b in m.rows.keys() {
        groups.entry((text(b, "face"), text(b, "kind"))).or_default().push(b);
    }
    let f = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
    for ((face, kind), ids) in &groups {
        let col = |c: &str| ids.iter().filter_map(|b| num(b, c)).collect::<Vec<_>>();
        let i = col("i");
        let cond = col("condensation_events");
        let _ = writeln!(
            s,
            "| {face} | {kind} | {} | {} | {} | {} | {} | {} |",
            ids.len(),
            f(mean(&i)),
            f(i.iter().copied().reduce(f64::max)),
            f(mean(&col("avg_t"))),
            f(mean(&col("avg_rh"))),
            f(mean(&cond)),
        );
    }

    let mut ranked: Vec<(&str, f64)> = m.rows.keys().filter_map(|b| num(b, "i").map(|i| (b.as_str(), i))).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    let _ = writeln!(s, "\n## Most weathered blocks\n");
    for (b, i) in ranked.iter().take(5) {
        let _ = writeln!(s, "- {b}: i = {i:.3} ({}, {})", text(b, "material"), text(b, "configuration"));
    }

    let salted: Vec<&str> = m
        .rows
        .keys()
        .filter(|b| num(b, "sulfate_flag").is_some())
        .map(String::as_str)
        .collect();
    if !salted.is_empty() {
        let _ = writeln!(s, "\n## Salt analyses\n");
        for b in salted {
            let flags: Vec<&str> = ["chloride", "nitrate", "sulfate"]
                .into_iter()
                .filter(|ion| num(b, &format!("{ion}_flag")) == Some(1.0))
                .collect();
            let _ = writeln!(
                s,
                "- {b}: contaminated by {}{}",
                if flags.is_empty() { "none".to_string() } else { flags.join(", ") },
                if num(b, "hygroscopic_salt_suspected") == Some(1.0) { "; hygroscopic salt suspected" } else { "" }
            );
        }
    }

    if let Some(prev) = manifest.previous(&id) {
        let older = ctx.store.load_matrix(&prev.campaign_id)?;
        let d = diff_matrices(&older, &m)?;
        let mut changes = d.nonzero_delta_i();
        changes.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(b.0)));
        let _ = writeln!(s, "\n## Change since {}\n", prev.campaign_id);
        let _ = writeln!(s, "{} block(s) changed index.", changes.len());
        for (b, di) in changes.iter().take(5) {
            let _ = writeln!(s, "- {b}: {di:+.3}");
        }
    }
    let n_batch = m.rows.keys().filter(|b| text(b, "kind") == BlockKind::ControlBatch.label()).count();
    let _ = writeln!(s, "\n{n_batch} control-batch block(s) included.");

    let path = ctx.store.reports_dir().join(format!("report_{id}.md"));
    write(&path, &s)?;
    let _ = ctx.out.write_all(s.as_bytes());
    say!(ctx.out, "\nwrote {}", path.display());
    Ok(Outcome::Ok)
}
