//! On-disk artifact store: one directory per site.
//!
//! ```text
//! <data-dir>/<site>/
//!   site.json  sensors.json  blocks.json  [policy.json]
//!   series/<sensor>__<quantity>.csv
//!   campaigns/<campaign_id>.json
//!   matrices/<campaign_id>.json
//!   reports/
//!   manifest.json
//!   .lock
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use crate::assessment::{BlockRegistry, Campaign};
use crate::index::IndexPolicy;
use crate::ingest::{parse_sensor_csv, write_series_csv, ParseOptions, Quantity, SensorRegistry, TimeSeries};
use crate::matrix::{export_json, import_json, AlterationMatrix, VersionManifest};
use crate::pipeline::SeriesSet;
use crate::{Error, Result};

use super::config::SiteConfig;

pub struct Store {
    pub root: PathBuf,
    pub site_id: String,
}

/// Held while a command runs. Removing the file releases the lock.
pub struct StoreLock {
    path: PathBuf,
}

impl Drop for StoreLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

pub(crate) fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes through a temporary file and a rename so readers never see a
/// half-written artifact.
pub(crate) fn write(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, content).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    out.sort();
    Ok(out)
}

fn safe_name(id: &str) -> Result<&str> {
    if id.is_empty() || id.contains(['/', '\\']) || id.starts_with('.') {
        return Err(Error::InvalidParameter(format!("{id:?} cannot be used as a file name")));
    }
    Ok(id)
}

impl Store {
    pub fn new(data_dir: &Path, site_id: &str) -> Result<Self> {
        Ok(Store {
            root: data_dir.join(safe_name(site_id)?),
            site_id: site_id.to_string(),
        })
    }

    pub fn lock(&self) -> Result<StoreLock> {
        fs::create_dir_all(&self.root).map_err(|e| Error::io(&self.root, e))?;
        let path = self.root.join(".lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(StoreLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::io(
                &path,
                std::io::Error::new(
                    e.kind(),
                    "another command holds the store lock; delete the file if no command is running",
                ),
            )),
            Err(e) => Err(Error::io(&path, e)),
        }
    }

    pub fn default_config_path(&self) -> PathBuf {
        self.root.join("site.json")
    }

    pub fn series_dir(&self) -> PathBuf {
        self.root.join("series")
    }

    pub fn campaigns_dir(&self) -> PathBuf {
        self.root.join("campaigns")
    }

    pub fn matrices_dir(&self) -> PathBuf {
        self.root.join("matrices")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.root.join("reports")
    }

    fn manifest_path(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn sensors(&self, cfg: &SiteConfig) -> Result<SensorRegistry> {
        let path = self.root.join(&cfg.sensor_registry);
        let reg = SensorRegistry::from_json(&read(&path)?)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if reg.site_id != self.site_id {
            return Err(Error::SiteMismatch(self.site_id.clone(), reg.site_id));
        }
        Ok(reg)
    }

    pub fn blocks(&self, cfg: &SiteConfig) -> Result<BlockRegistry> {
        let path = self.root.join(&cfg.block_registry);
        let reg = BlockRegistry::from_json(&read(&path)?)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if reg.site_id != self.site_id {
            return Err(Error::SiteMismatch(self.site_id.clone(), reg.site_id));
        }
        Ok(reg)
    }

    pub fn policy(&self, cfg: &SiteConfig) -> Result<IndexPolicy> {
        match &cfg.policy {
            None => Ok(IndexPolicy::default()),
            Some(p) => {
                let path = self.root.join(p);
                IndexPolicy::from_json(&read(&path)?).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
            }
        }
    }

    fn series_path(&self, sensor_id: &str, q: Quantity) -> Result<PathBuf> {
        Ok(self.series_dir().join(format!("{}__{}.csv", safe_name(sensor_id)?, q.label())))
    }

    pub fn save_series(&self, series: &TimeSeries) -> Result<()> {
        write(&self.series_path(&series.sensor_id, series.quantity)?, &write_series_csv(series))
    }

    /// Every stored series whose sensor is still registered.
    pub fn load_series(&self, registry: &SensorRegistry) -> Result<SeriesSet> {
        let mut set = SeriesSet::new();
        for spec in &registry.sensors {
            for ch in &spec.channels {
                let path = self.series_path(&spec.sensor_id, ch.quantity)?;
                if !path.exists() {
                    continue;
                }
                let log = parse_sensor_csv(&read(&path)?, &spec.restricted_to(&[ch.quantity]), &ParseOptions::default())
                    .map_err(|e| Error::MalformedPayload(format!("{}: {e}", path.display())))?;
                if let Some(s) = log.series.into_iter().next() {
                    let s = crate::ingest::detect_gaps(s, spec.expected_interval(), crate::ingest::DEFAULT_GAP_FACTOR);
                    set.insert((spec.sensor_id.clone(), ch.quantity), s);
                }
            }
        }
        Ok(set)
    }

    /// Stored campaigns ordered by date, then id.
    pub fn campaigns(&self) -> Result<Vec<Campaign>> {
        let mut out = Vec::new();
        for path in json_files(&self.campaigns_dir())? {
            let c = Campaign::from_json(&read(&path)?)
                .map_err(|e| Error::MalformedPayload(format!("{}: {e}", path.display())))?;
            out.push(c);
        }
        out.sort_by(|a, b| (a.date, &a.campaign_id).cmp(&(b.date, &b.campaign_id)));
        Ok(out)
    }

    pub fn save_campaign(&self, c: &Campaign) -> Result<PathBuf> {
        let path = self.campaigns_dir().join(format!("{}.json", safe_name(&c.campaign_id)?));
        write(&path, &c.to_json())?;
        Ok(path)
    }

    pub fn matrix_rel_path(campaign_id: &str) -> Result<String> {
        Ok(format!("matrices/{}.json", safe_name(campaign_id)?))
    }

    pub fn load_matrix(&self, campaign_id: &str) -> Result<AlterationMatrix> {
        let path = self.root.join(Self::matrix_rel_path(campaign_id)?);
        if !path.exists() {
            return Err(Error::NoData(format!(
                "no matrix for campaign {campaign_id}; run `matrix build` first"
            )));
        }
        import_json(&read(&path)?)
    }

    /// Stores the matrix and records it in the manifest. Returns whether
    /// anything changed.
    pub fn save_matrix(&self, m: &AlterationMatrix) -> Result<bool> {
        let rel = Self::matrix_rel_path(&m.meta.campaign_id)?;
        let mut manifest = self.manifest()?;
        let changed = manifest.record(m, rel.clone())?;
        let path = self.root.join(&rel);
        if changed || !path.exists() {
            write(&path, &export_json(m))?;
            write(&self.manifest_path(), &manifest.to_json())?;
        }
        Ok(changed)
    }

    pub fn manifest(&self) -> Result<VersionManifest> {
        let path = self.manifest_path();
        if !path.exists() {
            return Ok(VersionManifest::new(self.site_id.clone()));
        }
        let m = VersionManifest::from_json(&read(&path)?)?;
        if m.site_id != self.site_id {
            return Err(Error::SiteMismatch(self.site_id.clone(), m.site_id));
        }
        Ok(m)
    }
}
