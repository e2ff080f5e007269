use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::svg::{self, Point};
use super::{ExperimentReport, SCHEMA_VERSION};
use crate::dataset::LabeledDataset;
use crate::error::{invalid, Error, Result};
use crate::linalg::{centroid_cost, SolverOptions};
use crate::reducer::LinearReducer;
use crate::slce::{self, count_positive};

/// Every CSV written here starts with this comment line.
pub fn schema_line() -> String {
    format!("# schema_version={SCHEMA_VERSION}\n")
}

fn csv_string(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(schema_line().into_bytes());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Train,
    Test,
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Partition::Train => "train",
            Partition::Test => "test",
        })
    }
}

/// Low-dimensional coordinates of labeled points; one column per point.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub method: String,
    pub dim: usize,
    /// `dim × m`.
    pub coordinates: DMatrix<f64>,
    pub labels: Vec<String>,
    pub partition: Vec<Partition>,
}

impl EmbeddingTable {
    /// Projects `train` (and `test`, if given) onto the first `dim` model coordinates.
    pub fn build(
        model: &LinearReducer,
        train: &LabeledDataset,
        test: Option<&LabeledDataset>,
        dim: usize,
    ) -> Result<Self> {
        if dim == 0 || dim > model.k() {
            return invalid(format!("embedding dim {dim} must lie in 1..={}", model.k()));
        }
        let parts: Vec<(&LabeledDataset, Partition)> = std::iter::once((train, Partition::Train))
            .chain(test.map(|t| (t, Partition::Test)))
            .collect();
        let m: usize = parts.iter().map(|(d, _)| d.n_samples()).sum();
        let mut coordinates = DMatrix::zeros(dim, m);
        let mut labels = Vec::with_capacity(m);
        let mut partition = Vec::with_capacity(m);
        let mut offset = 0;
        for (ds, tag) in parts {
            let emb = model.transform_dim(ds.data(), dim)?;
            coordinates.columns_mut(offset, ds.n_samples()).copy_from(&emb);
            offset += ds.n_samples();
            labels.extend(ds.labels().iter().map(|&l| ds.class_name(l).to_string()));
            partition.extend(std::iter::repeat_n(tag, ds.n_samples()));
        }
        Ok(Self {
            method: model.method.to_string(),
            dim,
            coordinates,
            labels,
            partition,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Columns `coord_1..coord_dim,label,partition`.
    pub fn to_csv(&self) -> Result<String> {
        let mut header: Vec<String> = (1..=self.dim).map(|i| format!("coord_{i}")).collect();
        header.push("label".into());
        header.push("partition".into());
        let rows = (0..self.len()).map(|i| {
            let mut row: Vec<String> = self.coordinates.column(i).iter().map(f64::to_string).collect();
            row.push(self.labels[i].clone());
            row.push(self.partition[i].to_string());
            row
        });
        csv_string(&header, rows)
    }

    fn class_ids(&self) -> (Vec<String>, Vec<usize>) {
        let mut names: Vec<String> = Vec::new();
        let ids = self
            .labels
            .iter()
            .map(|l| match names.iter().position(|n| n == l) {
                Some(j) => j,
                None => {
                    names.push(l.clone());
                    names.len() - 1
                }
            })
            .collect();
        (names, ids)
    }

    /// Scatter of the first two coordinates; a third becomes a color ramp.
    /// `None` unless `dim ∈ {2, 3}`.
    pub fn to_svg(&self) -> Option<String> {
        if !(2..=3).contains(&self.dim) {
            return None;
        }
        let (names, ids) = self.class_ids();
        let points: Vec<Point> = (0..self.len())
            .map(|i| Point {
                x: self.coordinates[(0, i)],
                y: self.coordinates[(1, i)],
                class: ids[i],
                hollow: self.partition[i] == Partition::Test,
                depth: (self.dim == 3).then(|| self.coordinates[(2, i)]),
            })
            .collect();
        let title = format!("{} embedding (solid: train, hollow: test)", self.method);
        Some(svg::scatter(&points, &names, &title))
    }

    /// Smallest distance between class centroids divided by the mean distance
    /// of points to their own class centroid, over points in `partition`
    /// (all points if `None`).
    pub fn centroid_separation(&self, partition: Option<Partition>) -> Result<f64> {
        let (names, ids) = self.class_ids();
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| partition.is_none_or(|p| self.partition[i] == p))
            .collect();
        let mut sums = DMatrix::<f64>::zeros(self.dim, names.len());
        let mut counts = vec![0usize; names.len()];
        for &i in &keep {
            let mut col = sums.column_mut(ids[i]);
            col += self.coordinates.column(i);
            counts[ids[i]] += 1;
        }
        let present: Vec<usize> = (0..names.len()).filter(|&j| counts[j] > 0).collect();
        if present.len() < 2 {
            return invalid("centroid separation needs at least two classes");
        }
        for &j in &present {
            let mut col = sums.column_mut(j);
            col /= counts[j] as f64;
        }
        let spread = keep
            .iter()
            .map(|&i| (self.coordinates.column(i) - sums.column(ids[i])).norm())
            .sum::<f64>()
            / keep.len() as f64;
        let mut min_gap = f64::INFINITY;
        for (a, &ja) in present.iter().enumerate() {
            for &jb in &present[a + 1..] {
                min_gap = min_gap.min((sums.column(ja) - sums.column(jb)).norm());
            }
        }
        Ok(min_gap / spread)
    }
}

/// Writes the embedding CSV to `csv_path` and, for `dim ∈ {2, 3}`, the SVG
/// scatter to `svg_path`.
pub fn emit_embedding(
    model: &LinearReducer,
    train: &LabeledDataset,
    test: Option<&LabeledDataset>,
    dim: usize,
    csv_path: impl AsRef<Path>,
    svg_path: Option<&Path>,
) -> Result<EmbeddingTable> {
    let table = EmbeddingTable::build(model, train, test, dim)?;
    std::fs::write(csv_path, table.to_csv()?)?;
    if let Some(p) = svg_path {
        match table.to_svg() {
            Some(svg) => std::fs::write(p, svg)?,
            None => log::warn!("no SVG scatter for a {dim}-dimensional embedding"),
        }
    }
    Ok(table)
}

/// Long-format accuracy table, one row per `(method, dim)` cell.
pub fn accuracy_curves_csv(report: &ExperimentReport) -> Result<String> {
    let header: Vec<String> = [
        "method",
        "dim",
        "effective_dim",
        "mean",
        "std",
        "n_ok",
        "n_failed",
        "status",
    ]
    .map(String::from)
    .to_vec();
    let rows = report.cells.iter().map(|c| {
        vec![
            c.method.to_string(),
            c.dim.to_string(),
            c.effective_dim.to_string(),
            opt(c.mean),
            opt(c.std),
            c.n_ok.to_string(),
            c.n_failed.to_string(),
            c.status.as_str().to_string(),
        ]
    });
    csv_string(&header, rows)
}

pub fn emit_accuracy_curves(
    report: &ExperimentReport,
    csv_path: impl AsRef<Path>,
    svg_path: Option<&Path>,
) -> Result<()> {
    if report.cells.is_empty() {
        return invalid("report has no cells");
    }
    std::fs::write(csv_path, accuracy_curves_csv(report)?)?;
    if let Some(p) = svg_path {
        let series: Vec<svg::Series> = report
            .methods
            .iter()
            .map(|&m| {
                let pts = report
                    .cells
                    .iter()
                    .filter(|c| c.method == m)
                    .map(|c| (c.dim as f64, c.mean))
                    .collect();
                (m.to_string(), pts)
            })
            .collect();
        std::fs::write(
            p,
            svg::line_chart(&series, "k-NN accuracy", "embedding dimension", "mean accuracy"),
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    /// 1-based rank.
    pub index: usize,
    /// Eigenvalue of `X C̃ᵀ + C̃ Xᵀ`.
    pub cross_eigenvalue: f64,
    /// Eigenvalue `μ_i` of the system matrix.
    pub system_eigenvalue: f64,
    /// `‖C̃ − a_i a_iᵀ X‖_F²` for the `i`-th system eigenvector, computed directly.
    pub cost_1d: f64,
    /// `Tr(C̃ᵀC̃) − μ_i`.
    pub predicted_cost_1d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumDiagnostics {
    pub n_classes: usize,
    pub trace_ctc: f64,
    /// Positive system eigenvalues over the full spectrum.
    pub positive_count: usize,
    pub rows: Vec<SpectrumRow>,
}

impl SpectrumDiagnostics {
    pub fn to_csv(&self) -> Result<String> {
        let header: Vec<String> = [
            "index",
            "cross_eigenvalue",
            "system_eigenvalue",
            "cost_1d",
            "predicted_cost_1d",
            "trace_ctc",
        ]
        .map(String::from)
        .to_vec();
        let rows = self.rows.iter().map(|r| {
            vec![
                r.index.to_string(),
                r.cross_eigenvalue.to_string(),
                r.system_eigenvalue.to_string(),
                r.cost_1d.to_string(),
                r.predicted_cost_1d.to_string(),
                self.trace_ctc.to_string(),
            ]
        });
        csv_string(&header, rows)
    }
}

/// Leading eigenvalues of both matrices with per-eigenvector costs. `count`
/// defaults to `min(d, 2M + 5)`.
pub fn spectrum_diagnostics(
    train: &LabeledDataset,
    count: Option<usize>,
    opts: &SolverOptions,
) -> Result<SpectrumDiagnostics> {
    let d = train.n_features();
    let count = count.unwrap_or(2 * train.n_classes() + 5).min(d);
    if count == 0 {
        return invalid("spectrum diagnostics need at least one row");
    }
    let dec = slce::decompose(train, count, opts)?;
    let cross = slce::cross_spectrum(train, opts)?;
    let rows = (0..count)
        .map(|i| {
            let a = dec.basis.columns(i, 1).into_owned();
            Ok(SpectrumRow {
                index: i + 1,
                cross_eigenvalue: cross[i],
                system_eigenvalue: dec.spectrum[i],
                cost_1d: centroid_cost(&dec.ctilde, &a, &dec.centered)?,
                predicted_cost_1d: dec.trace_ctc - dec.spectrum[i],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumDiagnostics {
        n_classes: train.n_classes(),
        trace_ctc: dec.trace_ctc,
        positive_count: count_positive(&dec.spectrum),
        rows,
    })
}

pub fn emit_spectrum_diagnostics(
    train: &LabeledDataset,
    path: impl AsRef<Path>,
    count: Option<usize>,
    opts: &SolverOptions,
) -> Result<SpectrumDiagnostics> {
    let diag = spectrum_diagnostics(train, count, opts)?;
    std::fs::write(path, diag.to_csv()?)?;
    Ok(diag)
}
