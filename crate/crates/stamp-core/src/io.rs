//! File ingestion: per-study summary TSVs, correlation matrices, and the
//! run manifest.
//!
//! Study files are tab-separated with a required header carrying `snp_id`,
//! `beta` and `se` columns. `NA`, `NaN` and empty cells parse as NaN and the
//! SNP is dropped with a warning before the correlation matrix is subset.
//! Correlation files are square TSVs whose header row and first column both
//! carry the SNP ids.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::study::StudyRegionData;

/// Where each study's mixing matrix comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OmegaSource {
    /// Use the per-study correlation file named in the manifest.
    Internal,
    /// Use one shared reference-panel correlation file for every study.
    External(PathBuf),
}

/// Parsed manifest entry.
#[derive(Debug, Clone, Deserialize)]
pub struct ManifestStudy {
    pub id: String,
    pub stats: PathBuf,
    #[serde(default)]
    pub correlation: Option<PathBuf>,
    #[serde(default)]
    pub control: bool,
}

/// The manifest document: studies plus an optional shared panel path.
#[derive(Debug, Clone, Deserialize)]
pub struct Manifest {
    pub studies: Vec<ManifestStudy>,
    #[serde(default)]
    pub panel: Option<PathBuf>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let manifest: Manifest = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if manifest.studies.is_empty() {
            return Err(Error::Validation(format!(
                "manifest {} lists no studies",
                path.display()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for s in &manifest.studies {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::Validation(format!(
                    "manifest lists study id '{}' twice",
                    s.id
                )));
            }
        }
        Ok(manifest)
    }
}

/// Read a per-study summary TSV into parallel vectors.
pub fn read_study_tsv(path: &Path) -> Result<(Vec<String>, Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(path, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| parse_err(path, e.to_string()))?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(path, format!("missing required column '{name}'")))
    };
    let (snp_col, beta_col, se_col) = (col("snp_id")?, col("beta")?, col("se")?);

    let mut ids = Vec::new();
    let mut betas = Vec::new();
    let mut ses = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(path, e.to_string()))?;
        let id = record
            .get(snp_col)
            .ok_or_else(|| parse_err(path, format!("row {}: short record", line + 2)))?
            .to_string();
        if !seen.insert(id.clone()) {
            return Err(parse_err(path, format!("duplicate snp_id '{id}'")));
        }
        betas.push(parse_cell(record.get(beta_col), path, line)?);
        ses.push(parse_cell(record.get(se_col), path, line)?);
        ids.push(id);
    }
    if ids.is_empty() {
        return Err(parse_err(path, "no data rows".into()));
    }
    Ok((ids, betas, ses))
}

fn parse_cell(cell: Option<&str>, path: &Path, line: usize) -> Result<f64> {
    let text = cell.ok_or_else(|| parse_err(path, format!("row {}: short record", line + 2)))?;
    if text.is_empty() || text.eq_ignore_ascii_case("na") || text.eq_ignore_ascii_case("nan") {
        return Ok(f64::NAN);
    }
    text.parse::<f64>()
        .map_err(|_| parse_err(path, format!("row {}: '{text}' is not a number", line + 2)))
}

/// Read a square correlation TSV: header row of SNP ids, rows led by the id.
pub fn read_correlation_tsv(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(path, e.to_string()))?;
    let header_ids: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(path, e.to_string()))?
        .iter()
        .skip(1)
        .map(|s| s.to_string())
        .collect();
    let p = header_ids.len();
    if p == 0 {
        return Err(parse_err(path, "correlation header lists no SNPs".into()));
    }
    let mut values = Vec::with_capacity(p * p);
    let mut row_ids = Vec::with_capacity(p);
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(path, e.to_string()))?;
        if record.len() != p + 1 {
            return Err(parse_err(
                path,
                format!("row {}: expected {} columns, found {}", line + 2, p + 1, record.len()),
            ));
        }
        row_ids.push(record.get(0).unwrap().to_string());
        for j in 0..p {
            values.push(parse_cell(record.get(j + 1), path, line)?);
        }
    }
    if row_ids != header_ids {
        return Err(parse_err(
            path,
            "correlation row ids do not match the header ids".into(),
        ));
    }
    Ok((header_ids, DMatrix::from_row_slice(p, p, &values)))
}

/// Subset a correlation matrix to `wanted` SNPs, in order.
pub fn subset_correlation(
    ids: &[String],
    matrix: &DMatrix<f64>,
    wanted: &[String],
) -> Result<DMatrix<f64>> {
    let index: HashMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut positions = Vec::with_capacity(wanted.len());
    let mut missing = Vec::new();
    for id in wanted {
        match index.get(id.as_str()) {
            Some(&i) => positions.push(i),
            None => missing.push(id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Validation(format!(
            "correlation matrix is missing SNPs: {}",
            missing.join(", ")
        )));
    }
    Ok(DMatrix::from_fn(wanted.len(), wanted.len(), |i, j| {
        matrix[(positions[i], positions[j])]
    }))
}

/// Load every study named in the manifest and assemble validated inputs.
pub fn load_studies(manifest_path: &Path, source: &OmegaSource) -> Result<Vec<StudyRegionData>> {
    let manifest = Manifest::load(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let resolve = |p: &Path| -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };

    let shared = match source {
        OmegaSource::External(path) => Some(read_correlation_tsv(&resolve(path))?),
        OmegaSource::Internal => None,
    };

    let mut out = Vec::with_capacity(manifest.studies.len());
    for entry in &manifest.studies {
        let (ids, betas, ses) = read_study_tsv(&resolve(&entry.stats))?;
        let (ids, betas, ses, _) = StudyRegionData::drop_nonfinite(&entry.id, ids, betas, ses);
        if ids.is_empty() {
            return Err(Error::Validation(format!(
                "study '{}': no usable SNPs after dropping non-finite rows",
                entry.id
            )));
        }
        let upsilon = match (&shared, &entry.correlation, &manifest.panel) {
            (Some((panel_ids, panel)), _, _) => subset_correlation(panel_ids, panel, &ids)?,
            (None, Some(path), _) => {
                let (cids, m) = read_correlation_tsv(&resolve(path))?;
                subset_correlation(&cids, &m, &ids)?
            }
            (None, None, Some(panel_path)) => {
                let (cids, m) = read_correlation_tsv(&resolve(panel_path))?;
                subset_correlation(&cids, &m, &ids)?
            }
            (None, None, None) => {
                return Err(Error::Validation(format!(
                    "study '{}' has no correlation file and the manifest names no panel",
                    entry.id
                )))
            }
        };
        let mut study = StudyRegionData::from_summary(&entry.id, ids, betas, ses, upsilon)?;
        study.set_control(entry.control);
        out.push(study);
    }
    Ok(out)
}

fn parse_err(path: &Path, message: String) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        message,
    }
}
