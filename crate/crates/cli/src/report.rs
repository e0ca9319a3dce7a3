//! Machine-readable reports. The CSV schema is one flat row per entry with
//! a frozen column order; JSON carries the same rows plus full witnesses.
//! Report bytes are a pure function of the config (seeds included), so a
//! rerun reproduces them exactly; wall-clock timings go to stderr only.

use lamplighter_core::tsp::LamplighterPoint;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Frozen CSV column order.
pub const CSV_COLUMNS: &[&str] = &[
    "schema_version",
    "name",
    "kind",
    "family",
    "n",
    "d",
    "k",
    "level",
    "embedder",
    "samples",
    "seed",
    "pair_policy",
    "tsp_cap",
    "tolerance",
    "points",
    "pairs",
    "d_measured",
    "expansion",
    "contraction",
    "distortion",
    "distortion_bound",
    "domination_violations",
    "lifting_violations",
    "freespace_violations",
    "fold_violations",
    "status",
];

#[derive(Debug, Clone, Serialize)]
pub struct WitnessPair {
    pub u: LamplighterPoint,
    pub v: LamplighterPoint,
    pub source: f64,
    pub target: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FreespaceSummary {
    pub molecules: usize,
    /// Largest |lf_norm_tree − lf_norm| over per-component lifted checks.
    pub max_tree_vs_flow_gap: f64,
    pub domination_violations: usize,
    pub averaged_violations: usize,
    /// Worst dipole stretch of the ℓ₁ image.
    pub dipole_distortion: f64,
    /// |dipole distortion − metric stochastic stretch|; ~0 by construction.
    pub dipole_vs_stretch_gap: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoarseLevelSummary {
    pub k: u32,
    pub side: i64,
    pub translates: usize,
    pub subsampled: bool,
    pub ensemble_stretch: f64,
    pub distortion_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoarseSummary {
    pub levels: Vec<CoarseLevelSummary>,
    pub lipschitz_constant: f64,
    pub upper_pairs: usize,
    pub upper_violations: usize,
    pub lower_pairs: usize,
    pub lower_violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldSummary {
    pub cell_pairs: usize,
    pub cell_isometry_violations: usize,
    pub lipschitz_pairs: usize,
    pub lipschitz_violations: usize,
    pub sigma_identity_violations: usize,
    pub containment_violations: usize,
    pub walk_shortening_violations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coarse: Option<CoarseSummary>,
    pub violations: usize,
}

/// One line of a report. Experiment rows fill the distortion fields; fold
/// rows fill the fold summary. Seeds, caps, and tolerances always ride
/// along.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub schema_version: u32,
    pub name: String,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedder: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_policy: Option<String>,
    pub tsp_cap: usize,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_measured: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stretch_witness: Option<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expansion: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distortion: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distortion_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expansion_witness: Option<WitnessPair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contraction_witness: Option<WitnessPair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domination_violations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lifting_violations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freespace: Option<FreespaceSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fold: Option<FoldSummary>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub failures: Vec<String>,
}

impl ReportRow {
    fn csv_fields(&self) -> Vec<String> {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(|x| x.to_string()).unwrap_or_default()
        }
        vec![
            self.schema_version.to_string(),
            self.name.clone(),
            self.kind.clone(),
            opt(&self.family),
            opt(&self.n),
            opt(&self.d),
            opt(&self.k),
            opt(&self.level),
            opt(&self.embedder),
            opt(&self.samples),
            self.seed.to_string(),
            opt(&self.pair_policy),
            self.tsp_cap.to_string(),
            self.tolerance.to_string(),
            opt(&self.points),
            opt(&self.pairs),
            opt(&self.d_measured),
            opt(&self.expansion),
            opt(&self.contraction),
            opt(&self.distortion),
            opt(&self.distortion_bound),
            opt(&self.domination_violations),
            opt(&self.lifting_violations),
            opt(&self.freespace.as_ref().map(|f| f.violations)),
            opt(&self.fold.as_ref().map(|f| f.violations)),
            if self.passed { "pass".into() } else { "fail".into() },
        ]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub rows: Vec<ReportRow>,
    pub all_passed: bool,
}

impl Report {
    pub fn new(rows: Vec<ReportRow>) -> Self {
        let all_passed = rows.iter().all(|r| r.passed);
        Report { schema_version: SCHEMA_VERSION, rows, all_passed }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&CSV_COLUMNS.join(","));
        out.push('\n');
        for row in &self.rows {
            let fields = row.csv_fields();
            debug_assert_eq!(fields.len(), CSV_COLUMNS.len());
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blank_row() -> ReportRow {
        ReportRow {
            schema_version: SCHEMA_VERSION,
            name: "t".into(),
            kind: "experiment".into(),
            family: Some("cycle".into()),
            n: Some(8),
            d: None,
            k: None,
            level: None,
            embedder: Some("karp".into()),
            samples: Some(1),
            seed: 7,
            pair_policy: Some("exhaustive".into()),
            tsp_cap: 20,
            tolerance: 1e-9,
            points: Some(8),
            pairs: Some(10),
            d_measured: Some(1.75),
            stretch_witness: Some((0, 1)),
            expansion: Some(2.0),
            contraction: Some(1.5),
            distortion: Some(3.0),
            distortion_bound: Some(10.5),
            expansion_witness: None,
            contraction_witness: None,
            domination_violations: Some(0),
            lifting_violations: Some(0),
            freespace: None,
            fold: None,
            passed: true,
            failures: Vec::new(),
        }
    }

    #[test]
    fn csv_has_all_columns() {
        let report = Report::new(vec![blank_row()]);
        let csv = report.to_csv();
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert_eq!(header.split(',').count(), CSV_COLUMNS.len());
        let row = lines.next().unwrap();
        assert_eq!(row.split(',').count(), CSV_COLUMNS.len());
        assert!(row.ends_with("pass"));
    }

    #[test]
    fn json_is_stable() {
        let report = Report::new(vec![blank_row()]);
        assert_eq!(report.to_json(), report.to_json());
        assert!(report.to_json().contains("\"d_measured\": 1.75"));
    }
}
