use serde::{Deserialize, Serialize};

use chrono::NaiveDate;

use super::table::AlterationMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub campaign_id: String,
    pub as_of: NaiveDate,
    /// Relative to the site directory.
    pub path: String,
    pub content_hash: String,
    pub policy_hash: String,
    pub schema_version: u32,
}

/// Matrix versions of one site, ordered by `as_of` then campaign id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionManifest {
    pub site_id: String,
    pub versions: Vec<ManifestEntry>,
}

impl VersionManifest {
    pub fn new(site_id: impl Into<String>) -> Self {
        VersionManifest {
            site_id: site_id.into(),
            versions: Vec::new(),
        }
    }

    /// Records a matrix. Re-adding identical content is a no-op; a rebuilt
    /// matrix for the same campaign replaces the old entry. Returns whether
    /// the manifest changed.
    pub fn record(&mut self, matrix: &AlterationMatrix, path: impl Into<String>) -> Result<bool> {
        if matrix.meta.site_id != self.site_id {
            return Err(Error::SiteMismatch(self.site_id.clone(), matrix.meta.site_id.clone()));
        }
        let entry = ManifestEntry {
            campaign_id: matrix.meta.campaign_id.clone(),
            as_of: matrix.meta.as_of,
            path: path.into(),
            content_hash: matrix.content_hash(),
            policy_hash: matrix.meta.policy_hash.clone(),
            schema_version: matrix.schema.version,
        };
        if let Some(existing) = self.versions.iter_mut().find(|e| e.campaign_id == entry.campaign_id) {
            if *existing == entry {
                return Ok(false);
            }
            *existing = entry;
        } else {
            self.versions.push(entry);
        }
        self.versions
            .sort_by(|a, b| (a.as_of, &a.campaign_id).cmp(&(b.as_of, &b.campaign_id)));
        Ok(true)
    }

    pub fn get(&self, campaign_id: &str) -> Option<&ManifestEntry> {
        self.versions.iter().find(|e| e.campaign_id == campaign_id)
    }

    pub fn latest(&self) -> Option<&ManifestEntry> {
        self.versions.last()
    }

    /// The version immediately before `campaign_id`.
    pub fn previous(&self, campaign_id: &str) -> Option<&ManifestEntry> {
        let i = self.versions.iter().position(|e| e.campaign_id == campaign_id)?;
        i.checked_sub(1).map(|j| &self.versions[j])
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serialises");
        s.push('\n');
        s
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        serde_json::from_str(raw).map_err(|e| Error::MalformedPayload(format!("manifest: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::test_support::strasbourg_matrix;

    #[test]
    fn record_is_idempotent() {
        let m = strasbourg_matrix(3);
        let mut man = VersionManifest::new("strasbourg");
        assert!(man.record(&m, "matrices/a.json").unwrap());
        assert!(!man.record(&m, "matrices/a.json").unwrap());
        assert_eq!(man.versions.len(), 1);
        let mut later = m.clone();
        later.meta.campaign_id = "STR-2024-10".into();
        later.meta.as_of = NaiveDate::from_ymd_opt(2024, 10, 15).unwrap();
        assert!(man.record(&later, "matrices/b.json").unwrap());
        assert_eq!(man.latest().unwrap().campaign_id, "STR-2024-10");
        assert_eq!(man.previous("STR-2024-10").unwrap().campaign_id, m.meta.campaign_id);
        assert_eq!(VersionManifest::from_json(&man.to_json()).unwrap(), man);
        let mut elsewhere = m.clone();
        elsewhere.meta.site_id = "bibracte".into();
        assert!(matches!(man.record(&elsewhere, "x"), Err(Error::SiteMismatch(..))));
    }
}
