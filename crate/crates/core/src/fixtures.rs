//! Seeded fixtures: the Strasbourg spire registry (70 in-situ blocks plus 8
//! control batches), its sensor layout, a reference salt drilling, campaign
//! generators and a synthetic microclimate.
//!
//! Every generator takes an explicit seed; nothing here reads the clock or
//! the OS entropy pool.

use std::f64::consts::PI;
use std::fmt::Write as _;

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Timelike, Utc};
use chrono_tz::Tz;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assessment::{
    AlterationRecord, Block, BlockKind, BlockRef, BlockRegistry, Campaign, Family, Lab, Material, SaltAnalysis,
    SurfaceMeasurement, CAMPAIGN_SCHEMA_VERSION,
};
use crate::ingest::{Face, Quantity, Reading, SensorKind, SensorRegistry, SensorSpec, TimeSeries};

pub const STRASBOURG: &str = "strasbourg";
pub const STRASBOURG_TZ: Tz = chrono_tz::Europe::Paris;

/// Blocks per face and blocks per course on each face.
const BLOCKS_PER_FACE: usize = 35;
const COURSE_LEN: usize = 7;

fn in_situ(face: Face, n: usize) -> Block {
    let course = (n - 1) / COURSE_LEN;
    Block {
        block_id: format!("{}-{n:02}", face.label()),
        site_id: STRASBOURG.into(),
        face,
        // courses counted from the top of the octagon base downwards
        height_band_m: 103.0 - 0.6 * course as f64,
        material: Material::VosgesSandstone,
        kind: BlockKind::InSitu,
        configuration: if course == 0 { "under_cornice" } else { "exposed" }.into(),
        notes: String::new(),
        geometry_ref: Some(format!("maps/{}.svg#{}-{n:02}", face.label(), face.label())),
        placement_date: None,
    }
}

/// 35 blocks on each face, ids `NE-01`..`NE-35` and `SW-01`..`SW-35`, and
/// eight control batches `BATCH-01`..`BATCH-08`.
pub fn strasbourg_blocks() -> BlockRegistry {
    let mut blocks = Vec::with_capacity(78);
    for face in [Face::Ne, Face::Sw] {
        blocks.extend((1..=BLOCKS_PER_FACE).map(|n| in_situ(face, n)));
    }
    let batches = [
        Material::Granite,
        Material::VosgesSandstone,
        Material::BitburgSandstone,
        Material::StaubSandstone,
        Material::BarutelLimestone,
        Material::EstailladeLimestone,
        Material::VosgesSandstone,
        Material::Granite,
    ];
    for (i, material) in batches.into_iter().enumerate() {
        blocks.push(Block {
            block_id: format!("BATCH-{:02}", i + 1),
            site_id: STRASBOURG.into(),
            face: if i < 4 { Face::Ne } else { Face::Sw },
            height_band_m: 100.0,
            material,
            kind: BlockKind::ControlBatch,
            configuration: "control_rack".into(),
            notes: "5 cm cubes".into(),
            geometry_ref: None,
            placement_date: NaiveDate::from_ymd_opt(2024, 4, 16),
        });
    }
    BlockRegistry::new(STRASBOURG, blocks).expect("fixture registry is valid")
}

fn face_blocks(reg: &BlockRegistry, face: Face, courses: std::ops::Range<usize>, in_situ_only: bool) -> Vec<String> {
    reg.blocks
        .iter()
        .filter(|b| b.face == face && (!in_situ_only || b.kind == BlockKind::InSitu))
        .filter(|b| {
            b.kind == BlockKind::ControlBatch || {
                let n: usize = b.block_id[3..].parse().unwrap_or(0);
                courses.contains(&((n - 1) / COURSE_LEN))
            }
        })
        .map(|b| b.block_id.clone())
        .collect()
}

/// Eight loggers: a thermo-hygrometer and a surface probe per face, three
/// TDR moisture probes and the gallery fissurometer.
pub fn strasbourg_sensors() -> SensorRegistry {
    let reg = strasbourg_blocks();
    let sensor = |id: &str, kind, face, interval, position: &str, blocks: Vec<String>| {
        let mut s = SensorSpec::with_defaults(id, kind, face, interval).expect("fixture sensor");
        s.position = position.into();
        s.associated_block_ids = blocks;
        s
    };
    let sensors = vec![
        sensor("TH-NE", SensorKind::ThermoHygrometer, Face::Ne, 20, "mid-face", face_blocks(&reg, Face::Ne, 0..5, false)),
        sensor("TH-SW", SensorKind::ThermoHygrometer, Face::Sw, 20, "mid-face", face_blocks(&reg, Face::Sw, 0..5, false)),
        sensor("ST-NE", SensorKind::SurfaceProbe, Face::Ne, 20, "mid-face", face_blocks(&reg, Face::Ne, 0..5, true)),
        sensor("ST-SW", SensorKind::SurfaceProbe, Face::Sw, 20, "mid-face", face_blocks(&reg, Face::Sw, 0..5, true)),
        sensor("TDR1-SW", SensorKind::TdrMoisture, Face::Sw, 20, "top, 10 cm deep", face_blocks(&reg, Face::Sw, 0..2, true)),
        sensor("TDR2-SW", SensorKind::TdrMoisture, Face::Sw, 20, "bottom, 10 cm deep", face_blocks(&reg, Face::Sw, 3..5, true)),
        sensor("TDR3-NE", SensorKind::TdrMoisture, Face::Ne, 20, "top, 10 cm deep", face_blocks(&reg, Face::Ne, 0..2, true)),
        sensor("FISS-01", SensorKind::Fissurometer, Face::Other, 60, "gallery at the base of the spire", vec![]),
    ];
    SensorRegistry::new(STRASBOURG, sensors).expect("fixture sensors are valid")
}

fn layer(depth: [f64; 2], ions: [f64; 6], w: f64, w_h: f64) -> SaltAnalysis {
    SaltAnalysis {
        drilling_id: "S1".into(),
        block_id: Some("SW-18".into()),
        depth_cm: depth,
        chloride: ions[0],
        nitrate: ions[1],
        sulfate: ions[2],
        sodium: ions[3],
        magnesium: ions[4],
        calcium: ions[5],
        w,
        w_h,
        identified_phases: vec![],
    }
}

/// Drilling S1 in the middle of the south-west face, three depths.
pub fn reference_drilling() -> Vec<SaltAnalysis> {
    vec![
        layer([0.0, 1.0], [0.01, 0.09, 1.86, 0.04, 0.01, 0.97], 1.2, 5.4),
        layer([1.0, 4.0], [0.02, 0.1, 5.51, 0.09, 0.02, 2.31], 4.7, 10.0),
        layer([4.0, 6.0], [0.01, 0.06, 0.47, 0.08, 0.0, 0.38], 9.2, 13.2),
    ]
}

const PATTERNS: [(Family, &[&str]); 5] = [
    (Family::CracksDeformation, &["fracture", "craquele", "deformation"]),
    (Family::Detachment, &["scaling", "flaking", "blistering", "granular_disintegration"]),
    (Family::MaterialLoss, &["erosion", "alveolization", "missing_part"]),
    (Family::ChromaticDeposit, &["black_crust", "efflorescence", "soiling", "discoloration"]),
    (Family::BiologicalColonization, &["lichen", "moss", "algae"]),
];

fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// An initial damage assessment over every registered block. The south-west
/// face is more altered than the north-east one and the top course wetter.
pub fn initial_campaign(reg: &BlockRegistry, seed: u64) -> Campaign {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let date = NaiveDate::from_ymd_opt(2024, 4, 16).expect("date");
    let mut alterations = Vec::new();
    let mut surface_measurements = Vec::new();

    for b in &reg.blocks {
        let severity = match (b.kind, b.face) {
            (BlockKind::ControlBatch, _) => 0.0,
            (_, Face::Sw) => 1.0,
            _ => 0.5,
        };
        if severity > 0.0 {
            for (family, patterns) in PATTERNS {
                let p_present = match family {
                    Family::BiologicalColonization => 0.15 * severity,
                    Family::CracksDeformation => 0.4 * severity,
                    _ => 0.8 * severity,
                };
                if !rng.gen_bool(p_present) {
                    continue;
                }
                let n = rng.gen_range(1..=2usize.min(patterns.len()));
                let start = rng.gen_range(0..patterns.len());
                for k in 0..n {
                    let pattern = patterns[(start + k) % patterns.len()];
                    let coverage = round1(rng.gen_range(0.5..60.0) * severity);
                    alterations.push(AlterationRecord {
                        block_id: b.block_id.clone(),
                        family,
                        pattern: pattern.into(),
                        coverage_pct: coverage.max(0.1),
                        notes: String::new(),
                    });
                }
            }
        }
        let top = b.configuration == "under_cornice";
        surface_measurements.push(SurfaceMeasurement {
            block_id: b.block_id.clone(),
            colorimetry: Some(Lab {
                l: round2(rng.gen_range(52.0..68.0) - 6.0 * severity),
                a: round2(rng.gen_range(5.0..11.0)),
                b: round2(rng.gen_range(14.0..22.0)),
            }),
            surface_humidity: (b.kind == BlockKind::InSitu)
                .then(|| round1(rng.gen_range(20.0..60.0) + if top { 40.0 } else { 0.0 })),
            instrument_ids: vec!["colorcatch-nano".into(), "bm31".into()],
            timestamp: Some(Utc.from_utc_datetime(&date.and_hms_opt(9, 0, 0).expect("time"))),
        });
    }

    let mut salt_analyses = reference_drilling();
    for (k, block) in ["SW-04", "SW-32", "NE-11", "NE-25"].into_iter().enumerate() {
        let mut w = rng.gen_range(0.5..2.5);
        for (i, depth) in [[0.0, 1.0], [1.0, 4.0], [4.0, 6.0]].into_iter().enumerate() {
            w += rng.gen_range(0.5..3.5);
            salt_analyses.push(SaltAnalysis {
                drilling_id: format!("S{}", k + 2),
                block_id: Some(block.into()),
                depth_cm: depth,
                chloride: round2(rng.gen_range(0.0..0.15)),
                nitrate: round2(rng.gen_range(0.0..0.6)),
                sulfate: round2(rng.gen_range(0.05..4.0)),
                sodium: round2(rng.gen_range(0.0..0.1)),
                magnesium: round2(rng.gen_range(0.0..0.03)),
                calcium: round2(rng.gen_range(0.2..2.0)),
                w: round1(w),
                w_h: round1(rng.gen_range(2.0..12.0) + i as f64),
                identified_phases: if i == 0 { vec!["gypsum".into()] } else { vec![] },
            });
        }
    }
    salt_analyses[0].identified_phases = vec!["gypsum".into(), "thenardite".into(), "niter".into()];

    Campaign {
        schema_version: CAMPAIGN_SCHEMA_VERSION,
        campaign_id: "STR-2024-04".into(),
        site_id: reg.site_id.clone(),
        date,
        block_refs: reg
            .blocks
            .iter()
            .map(|b| BlockRef {
                block_id: b.block_id.clone(),
                surveyed_families: None,
            })
            .collect(),
        alterations,
        surface_measurements,
        salt_analyses,
        notes: "initial damage assessment".into(),
    }
}

/// A later campaign: every recorded coverage grows a little, colours drift
/// and no new drillings are taken.
pub fn follow_up_campaign(previous: &Campaign, date: NaiveDate, seed: u64) -> Campaign {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next = previous.clone();
    next.campaign_id = format!("STR-{}", date.format("%Y-%m"));
    next.date = date;
    next.notes = "follow-up campaign".into();
    next.salt_analyses.clear();
    for a in &mut next.alterations {
        a.coverage_pct = round1((a.coverage_pct + rng.gen_range(0.0..4.0)).min(100.0));
    }
    for m in &mut next.surface_measurements {
        if let Some(lab) = &mut m.colorimetry {
            lab.l = round2((lab.l - rng.gen_range(0.0..1.5)).clamp(0.0, 100.0));
            lab.b = round2(lab.b + rng.gen_range(-0.5..0.8));
        }
        m.timestamp = Some(Utc.from_utc_datetime(&date.and_hms_opt(9, 0, 0).expect("time")));
    }
    next
}

fn mix(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, folded into the seed
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    seed ^ h
}

/// Shared site weather on a 20-minute step: air temperature, relative
/// humidity, a cloud-cover fraction and rainfall intensity.
#[derive(Debug, Clone)]
pub struct SiteWeather {
    pub start: DateTime<Utc>,
    pub step: Duration,
    pub air_temp: Vec<f64>,
    pub rel_humidity: Vec<f64>,
    pub cloud: Vec<f64>,
    pub rain: Vec<f64>,
}

impl SiteWeather {
    pub fn generate(start: DateTime<Utc>, days: u32, seed: u64) -> Self {
        let step = Duration::minutes(20);
        let n = days as usize * 72;
        let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, "weather"));
        let (mut anomaly, mut cloud_state, mut wet) = (0.0f64, 0.5f64, 0.0f64);
        let mut out = SiteWeather {
            start,
            step,
            air_temp: Vec::with_capacity(n),
            rel_humidity: Vec::with_capacity(n),
            cloud: Vec::with_capacity(n),
            rain: Vec::with_capacity(n),
        };
        let mut raining = 0usize;
        for i in 0..n {
            let t = start + step * i as i32;
            let doy = f64::from(t.format("%j").to_string().parse::<u16>().unwrap_or(1));
            let hour = f64::from(t.hour()) + f64::from(t.minute()) / 60.0;
            // seasonal mean, coldest mid-January
            let seasonal = 10.5 - 10.5 * (2.0 * PI * (doy - 15.0) / 365.25).cos();
            cloud_state = (cloud_state + rng.gen_range(-0.04..0.04) + 0.01 * (0.55 - cloud_state)).clamp(0.0, 1.0);
            if raining == 0 && rng.gen_bool(0.004 * (0.5 + cloud_state)) {
                raining = rng.gen_range(3..30);
            }
            let rain = if raining > 0 {
                raining -= 1;
                rng.gen_range(0.2..4.0)
            } else {
                0.0
            };
            wet = (wet * 0.985 + rain * 0.05).min(1.0);
            let amplitude = 7.5 * (1.0 - 0.6 * cloud_state);
            // diurnal peak around 13:00 UTC
            let diurnal = amplitude * (2.0 * PI * (hour - 7.0) / 24.0).sin();
            anomaly = 0.995 * anomaly + rng.gen_range(-0.25..0.25);
            let temp = seasonal + diurnal + anomaly;
            let rh = 72.0 - 3.0 * diurnal + 20.0 * wet + 10.0 * (cloud_state - 0.5) + rng.gen_range(-2.0..2.0);
            out.air_temp.push(temp);
            out.rel_humidity.push(rh.clamp(15.0, 100.0));
            out.cloud.push(cloud_state);
            out.rain.push(rain);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.air_temp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.air_temp.is_empty()
    }

    fn time(&self, i: usize) -> DateTime<Utc> {
        self.start + self.step * i as i32
    }
}

fn quantize(v: f64, resolution: f64) -> f64 {
    let q = (v / resolution).round() * resolution;
    // keep one more decimal than the resolution to avoid 0.30000000000000004
    (q * 1000.0).round() / 1000.0
}

/// Series for one sensor, one per declared channel, sampled from `weather`
/// at the sensor's expected interval.
pub fn synthetic_sensor_series(spec: &SensorSpec, weather: &SiteWeather, seed: u64) -> Vec<TimeSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, &spec.sensor_id));
    let stride = (spec.expected_interval_minutes as usize / 20).max(1);
    let sw = spec.face == Face::Sw;
    let top = spec.position.starts_with("top");
    let mut series: Vec<TimeSeries> = spec
        .channels
        .iter()
        .map(|c| TimeSeries {
            unit: c.unit.clone(),
            ..TimeSeries::new(spec.sensor_id.clone(), c.quantity)
        })
        .collect();
    let mut water = if top { 6.0 } else { 4.0 };
    let mut crack = 0.42;
    let mut lagged_rh = weather.rel_humidity.first().copied().unwrap_or(70.0);

    for i in 0..weather.len() {
        let t = weather.time(i);
        let hour = f64::from(t.hour()) + f64::from(t.minute()) / 60.0;
        let air = weather.air_temp[i] + if sw { 1.0 } else { 0.0 } + rng.gen_range(-0.15..0.15);
        let rh = (weather.rel_humidity[i] - if sw { 3.0 } else { 0.0 } + rng.gen_range(-1.0..1.0)).clamp(10.0, 100.0);
        // sun on the south-west face in the afternoon, north-east early morning
        let sun_peak = if sw { 15.0 } else { 7.0 };
        let sun = (1.0 - weather.cloud[i]) * (-(hour - sun_peak).powi(2) / 6.0).exp() * if sw { 12.0 } else { 4.0 };
        let night = !(5.0..20.0).contains(&hour);
        let radiative = if night { 2.2 * (1.0 - weather.cloud[i]) } else { 0.0 };
        let surface = air + sun - radiative + rng.gen_range(-0.1..0.1);
        water += 0.06 * weather.rain[i] * if top { 1.5 } else { 1.0 } - 0.0025 * (water - 3.0) * if sw && !top { 1.6 } else { 1.0 };
        lagged_rh += (rh - lagged_rh) * 0.15;
        crack += 0.000_002 + rng.gen_range(-0.0004..0.0004);

        if i % stride != 0 {
            continue;
        }
        for s in &mut series {
            let res = spec.channel(s.quantity).map_or(0.1, |c| c.resolution);
            let value = match s.quantity {
                Quantity::AirTemp => quantize(air, 0.1),
                Quantity::RelHumidity => quantize(rh, 0.1),
                Quantity::SurfaceTemp => quantize(surface, 0.1),
                Quantity::WaterContent => quantize(water.clamp(0.0, 100.0), 0.1),
                Quantity::CrackWidth => quantize(crack + 0.0015 * (lagged_rh - 70.0), res.min(0.01)),
            };
            s.readings.push(Reading::ok(t, value));
        }
    }
    series
}

/// Synthetic logs for every sensor in `sensors` over `days` days.
pub fn synthetic_site(sensors: &SensorRegistry, start: DateTime<Utc>, days: u32, seed: u64) -> Vec<(SensorSpec, Vec<TimeSeries>)> {
    let weather = SiteWeather::generate(start, days, seed);
    sensors
        .sensors
        .iter()
        .map(|s| (s.clone(), synthetic_sensor_series(s, &weather, seed)))
        .collect()
}

/// Renders channels of one sensor the way a field logger exports them:
/// semicolon-separated, decimal commas, local timestamps with offset.
pub fn logger_csv(series: &[TimeSeries], tz: Tz) -> String {
    let mut out = String::from("timestamp");
    for s in series {
        let _ = write!(out, ";{}", s.quantity.label());
    }
    out.push('\n');
    let n = series.first().map_or(0, TimeSeries::len);
    for i in 0..n {
        let t = series[0].readings[i].timestamp.with_timezone(&tz);
        let _ = write!(out, "{}", t.format("%Y-%m-%d %H:%M:%S%:z"));
        for s in series {
            let _ = write!(out, ";{}", s.readings[i].value.to_string().replace('.', ","));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_sensor_csv, ParseOptions};

    #[test]
    fn registry_shape() {
        let reg = strasbourg_blocks();
        assert_eq!(reg.len(), 78);
        assert_eq!(reg.blocks.iter().filter(|b| b.kind == BlockKind::ControlBatch).count(), 8);
        assert!(reg.get("SW-01").is_some() && reg.get("NE-35").is_some());
        let sensors = strasbourg_sensors();
        assert_eq!(sensors.sensors.len(), 8);
        assert!(sensors.get("TH-SW").unwrap().associated_block_ids.contains(&"SW-18".to_string()));
    }

    #[test]
    fn campaigns_are_seeded() {
        let reg = strasbourg_blocks();
        assert_eq!(initial_campaign(&reg, 3), initial_campaign(&reg, 3));
        assert_ne!(initial_campaign(&reg, 3), initial_campaign(&reg, 4));
        let c = initial_campaign(&reg, 3);
        let next = follow_up_campaign(&c, NaiveDate::from_ymd_opt(2024, 10, 15).unwrap(), 3);
        assert_eq!(next.alterations.len(), c.alterations.len());
        assert!(next.alterations.iter().zip(&c.alterations).all(|(n, o)| n.coverage_pct >= o.coverage_pct));
    }

    #[test]
    fn synthetic_logs_parse_back() {
        let sensors = strasbourg_sensors();
        let start = Utc.with_ymd_and_hms(2024, 4, 16, 0, 0, 0).unwrap();
        let site = synthetic_site(&sensors, start, 3, 9);
        for (spec, series) in &site {
            let raw = logger_csv(series, STRASBOURG_TZ);
            let parsed = parse_sensor_csv(&raw, spec, &ParseOptions { timezone: STRASBOURG_TZ }).unwrap();
            assert!(parsed.rejected.is_empty());
            assert_eq!(&parsed.series, series, "{}", spec.sensor_id);
        }
        let fiss = &site.iter().find(|(s, _)| s.sensor_id == "FISS-01").unwrap().1;
        assert_eq!(fiss[0].len(), 72);
    }
}
