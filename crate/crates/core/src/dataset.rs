//! Labeled data in column-sample layout, stratified splitting, centering and
//! the per-sample centroid matrix.
//!
//! Data is stored as a `d × n` matrix: each column is one sample. CSV files
//! use the usual row-per-sample layout and are transposed on load.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};

/// Samples as columns of a real matrix, with dense integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    data: DMatrix<f64>,
    labels: Vec<usize>,
    class_indices: Vec<Vec<usize>>,
    class_names: Vec<String>,
}

impl LabeledDataset {
    /// Builds a dataset whose classes are `0..=max(labels)`; every class must
    /// have at least one sample.
    pub fn new(data: DMatrix<f64>, labels: Vec<usize>) -> Result<Self> {
        let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
        let ds = Self::with_label_space(data, labels, n_classes)?;
        ds.ensure_populated()?;
        Ok(ds)
    }

    /// Builds a dataset over a fixed label space `0..n_classes`. Classes may be
    /// empty; this is what subsets of a larger dataset (e.g. a test split) use.
    pub fn with_label_space(data: DMatrix<f64>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if data.ncols() != labels.len() {
            return Err(Error::Shape(format!(
                "data has {} columns but {} labels were given",
                data.ncols(),
                labels.len()
            )));
        }
        if labels.is_empty() {
            return Err(Error::Empty("dataset has no samples".into()));
        }
        if n_classes == 0 {
            return invalid("dataset needs at least one class");
        }
        if let Some((pos, _)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            let (row, col) = (pos % data.nrows(), pos / data.nrows());
            return invalid(format!("non-finite value in feature {row} of sample {col}"));
        }
        let mut class_indices = vec![Vec::new(); n_classes];
        for (i, &l) in labels.iter().enumerate() {
            if l >= n_classes {
                return invalid(format!("label {l} of sample {i} is outside 0..{n_classes}"));
            }
            class_indices[l].push(i);
        }
        let class_names = (0..n_classes).map(|j| j.to_string()).collect();
        Ok(Self {
            data,
            labels,
            class_indices,
            class_names,
        })
    }

    /// Replaces the class tokens used for reporting.
    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_classes() {
            return Err(Error::Shape(format!(
                "{} class names for {} classes",
                names.len(),
                self.n_classes()
            )));
        }
        self.class_names = names;
        Ok(self)
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_features(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_indices.len()
    }

    /// Ordered column indices of class `j`.
    pub fn class_indices(&self, j: usize) -> &[usize] {
        &self.class_indices[j]
    }

    pub fn all_class_indices(&self) -> &[Vec<usize>] {
        &self.class_indices
    }

    pub fn class_counts(&self) -> Vec<usize> {
        self.class_indices.iter().map(Vec::len).collect()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn class_name(&self, j: usize) -> &str {
        &self.class_names[j]
    }

    /// Number of classes that actually have samples.
    pub fn populated_classes(&self) -> usize {
        self.class_indices.iter().filter(|c| !c.is_empty()).count()
    }

    /// Errors unless every class in the label space has a sample.
    pub fn ensure_populated(&self) -> Result<()> {
        match self.class_indices.iter().position(Vec::is_empty) {
            Some(j) => invalid(format!("class {} ({}) has no samples", j, self.class_names[j])),
            None => Ok(()),
        }
    }

    /// Columns `indices` (in the given order), keeping the label space and names.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n_samples()) {
            return invalid(format!("sample index {bad} out of range"));
        }
        let data = self.data.select_columns(indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        let mut ds = Self::with_label_space(data, labels, self.n_classes())?;
        ds.class_names = self.class_names.clone();
        Ok(ds)
    }

    /// Same labels, new data matrix with the same number of columns.
    pub fn with_data(&self, data: DMatrix<f64>) -> Result<Self> {
        let mut ds = Self::with_label_space(data, self.labels.clone(), self.n_classes())?;
        ds.class_names = self.class_names.clone();
        Ok(ds)
    }

    /// Features `rows` only.
    pub fn select_features(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_features()) {
            return invalid(format!("feature index {bad} out of range"));
        }
        self.with_data(self.data.select_rows(rows))
    }

    /// Re-encodes labels into the label space of `class_names` by token, so a
    /// separately loaded file shares another dataset's encoding.
    pub fn aligned_to(&self, class_names: &[String]) -> Result<Self> {
        let mapping: Vec<usize> = self
            .class_names
            .iter()
            .map(|name| {
                class_names.iter().position(|c| c == name).ok_or_else(|| {
                    Error::InvalidInput(format!("class {name:?} does not occur in the reference label set"))
                })
            })
            .collect::<Result<_>>()?;
        let labels = self.labels.iter().map(|&l| mapping[l]).collect();
        Self::with_label_space(self.data.clone(), labels, class_names.len())?.with_class_names(class_names.to_vec())
    }
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    Index(usize),
    Name(String),
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(if s == "last" {
            LabelColumn::Last
        } else if let Ok(i) = s.parse() {
            LabelColumn::Index(i)
        } else {
            LabelColumn::Name(s.to_string())
        })
    }
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelColumn::Last => f.write_str("last"),
            LabelColumn::Index(i) => write!(f, "{i}"),
            LabelColumn::Name(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvOptions {
    pub has_header: bool,
    pub label_column: LabelColumn,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            has_header: true,
            label_column: LabelColumn::Last,
        }
    }
}

/// Loads a row-per-sample CSV file. Labels are re-encoded as `0..M` in order
/// of first appearance; the original tokens become the class names. Lines
/// starting with `#` are skipped.
pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<LabeledDataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, opts)
}

pub fn read_csv<R: Read>(reader: R, opts: &CsvOptions) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header: Option<Vec<String>> = if opts.has_header {
        Some(rdr.headers()?.iter().map(str::to_string).collect())
    } else {
        None
    };
    // Line numbers in messages are 1-based file lines.
    let first_line = if opts.has_header { 2 } else { 1 };

    let mut width: Option<usize> = header.as_ref().map(Vec::len).filter(|&w| w > 0);
    let mut label_idx: Option<usize> = None;
    let mut values: Vec<f64> = Vec::new();
    let mut tokens: Vec<String> = Vec::new();
    let mut n_rows = 0usize;

    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let line = first_line + r;
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::Ragged {
                row: line,
                found: record.len(),
                expected: w,
            });
        }
        if w < 2 {
            return invalid("CSV needs a label column and at least one feature column");
        }
        let li = match label_idx {
            Some(li) => li,
            None => *label_idx.insert(resolve_label_column(&opts.label_column, header.as_deref(), w)?),
        };
        for (c, field) in record.iter().enumerate() {
            if c == li {
                if field.is_empty() {
                    return Err(Error::Parse {
                        row: line,
                        column: c + 1,
                        message: "empty label".into(),
                    });
                }
                tokens.push(field.to_string());
                continue;
            }
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row: line,
                column: c + 1,
                message: format!("{field:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: line,
                    column: c + 1,
                    message: format!("{field:?} is not finite"),
                });
            }
            values.push(v);
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(Error::Empty("CSV contains no data rows".into()));
    }
    let d = width.unwrap_or(0) - 1;

    let mut codes: HashMap<&str, usize> = HashMap::new();
    let mut names: Vec<String> = Vec::new();
    let labels: Vec<usize> = tokens
        .iter()
        .map(|t| {
            *codes.entry(t.as_str()).or_insert_with(|| {
                names.push(t.clone());
                names.len() - 1
            })
        })
        .collect();

    // Row-major samples become columns.
    let data = DMatrix::from_vec(d, n_rows, values);
    let ds = LabeledDataset::new(data, labels)?;
    debug_assert!(ds.class_counts().iter().all(|&c| c > 0));
    ds.with_class_names(names)
}

fn resolve_label_column(col: &LabelColumn, header: Option<&[String]>, width: usize) -> Result<usize> {
    match col {
        LabelColumn::Last => Ok(width - 1),
        LabelColumn::Index(i) if *i < width => Ok(*i),
        LabelColumn::Index(i) => invalid(format!("label column {i} out of range (width {width})")),
        LabelColumn::Name(name) => header
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| Error::InvalidInput(format!("no column named {name:?}"))),
    }
}

/// A stratified train/test partition of one source dataset.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    /// Source column indices, ascending.
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
    pub ratio: f64,
}

/// Per class, `ceil(ratio · |C_j|)` samples go to train after a seeded shuffle.
pub fn split(ds: &LabeledDataset, ratio: f64, seed: u64) -> Result<SplitPair> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return invalid(format!("split ratio {ratio} must lie strictly between 0 and 1"));
    }
    for (j, idx) in ds.all_class_indices().iter().enumerate() {
        if idx.len() == 1 {
            return invalid(format!(
                "class {} has a single sample and cannot be stratified",
                ds.class_name(j)
            ));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_indices = Vec::with_capacity(ds.n_samples());
    let mut test_indices = Vec::new();
    for idx in ds.all_class_indices() {
        if idx.is_empty() {
            continue;
        }
        let mut shuffled = idx.clone();
        shuffled.shuffle(&mut rng);
        let n_train = stratum_train_count(ratio, idx.len());
        train_indices.extend_from_slice(&shuffled[..n_train]);
        test_indices.extend_from_slice(&shuffled[n_train..]);
    }
    train_indices.sort_unstable();
    test_indices.sort_unstable();
    Ok(SplitPair {
        train: ds.select(&train_indices)?,
        test: ds.select(&test_indices)?,
        train_indices,
        test_indices,
        seed,
        ratio,
    })
}

/// `ceil(ratio · n)`, robust to products like `0.8 · 50` landing a hair above
/// an integer.
pub fn stratum_train_count(ratio: f64, n: usize) -> usize {
    let exact = ratio * n as f64;
    let nearest = exact.round();
    let c = if (exact - nearest).abs() <= 1e-9 * n.max(1) as f64 {
        nearest
    } else {
        exact.ceil()
    };
    (c as usize).clamp(1, n)
}

/// Row means of a `d × n` matrix.
pub fn column_mean(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.ncols().max(1) as f64;
    x.column_sum() / n
}

/// Subtracts `mean` from every column.
pub fn subtract_mean(x: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    for mut col in out.column_iter_mut() {
        col -= mean;
    }
    out
}

/// Returns the globally mean-centered dataset and the mean that was removed.
pub fn center(ds: &LabeledDataset) -> (LabeledDataset, DVector<f64>) {
    let mean = column_mean(ds.data());
    let centered = subtract_mean(ds.data(), &mean);
    let out = ds
        .with_data(centered)
        .expect("centering preserves shape and finiteness");
    (out, mean)
}

/// Per-feature z-scoring: returns the standardized dataset, the mean, and the
/// population standard deviation used as scale (constant features keep scale 1).
pub fn standardize(ds: &LabeledDataset) -> (LabeledDataset, DVector<f64>, DVector<f64>) {
    let (centered, mean) = center(ds);
    let n = ds.n_samples() as f64;
    let scale = DVector::from_iterator(
        ds.n_features(),
        centered.data().row_iter().map(|r| {
            let sd = (r.norm_squared() / n).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        }),
    );
    let mut data = centered.data().clone();
    for mut col in data.column_iter_mut() {
        col.component_div_assign(&scale);
    }
    let out = ds.with_data(data).expect("scaling preserves shape");
    (out, mean, scale)
}

/// The `d × n` matrix whose column `i` is the centroid of sample `i`'s class,
/// together with the `d × M` matrix of distinct centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidMatrix {
    pub data: DMatrix<f64>,
    pub centroids: DMatrix<f64>,
}

/// Class means of the columns of `x`; empty classes get a zero column.
pub fn class_centroids(x: &DMatrix<f64>, class_indices: &[Vec<usize>]) -> DMatrix<f64> {
    let mut centroids = DMatrix::zeros(x.nrows(), class_indices.len());
    for (j, idx) in class_indices.iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let mut c = centroids.column_mut(j);
        for &i in idx {
            c += x.column(i);
        }
        c /= idx.len() as f64;
    }
    centroids
}

/// Expands per-class centroids into one column per sample.
pub fn expand_centroids(centroids: &DMatrix<f64>, labels: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(centroids.nrows(), labels.len(), |r, i| centroids[(r, labels[i])])
}

pub fn centroid_matrix(ds: &LabeledDataset) -> CentroidMatrix {
    let centroids = class_centroids(ds.data(), ds.all_class_indices());
    CentroidMatrix {
        data: expand_centroids(&centroids, ds.labels()),
        centroids,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> LabeledDataset {
        // Five 2-D samples, classes {0,2,4} and {1,3}.
        let x = DMatrix::from_column_slice(2, 5, &[1., 2., 10., 20., 3., 4., 30., 40., 5., 6.]);
        LabeledDataset::new(x, vec![0, 1, 0, 1, 0]).unwrap()
    }

    #[test]
    fn first_appearance_encoding() {
        let csv = "f1,f2,label\n1,2,a\n3,4,b\n5,6,a\n";
        let ds = read_csv(csv.as_bytes(), &CsvOptions::default()).unwrap();
        assert_eq!(ds.n_samples(), 3);
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.n_classes(), 2);
        assert_eq!(ds.class_indices(0), &[0, 2]);
        assert_eq!(ds.class_indices(1), &[1]);
        assert_eq!(ds.class_names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(ds.data().column(1).as_slice(), &[3.0, 4.0]);
    }

    #[test]
    fn comment_lines_are_skipped() {
        let text = "# schema_version=1\na,b,label\n1,2,x\n# note\n3,4,y\n";
        let ds = read_csv(text.as_bytes(), &CsvOptions::default()).unwrap();
        assert_eq!(ds.n_samples(), 2);
        assert_eq!(ds.class_names(), ["x", "y"]);
    }

    #[test]
    fn label_column_by_name_and_index() {
        let csv = "cls,x,y\nq,1,2\np,3,4\n";
        let by_name = CsvOptions {
            has_header: true,
            label_column: "cls".parse().unwrap(),
        };
        let ds = read_csv(csv.as_bytes(), &by_name).unwrap();
        assert_eq!(ds.class_names(), &["q".to_string(), "p".to_string()]);
        assert_eq!(ds.data().column(0).as_slice(), &[1.0, 2.0]);

        let by_index = CsvOptions {
            has_header: true,
            label_column: LabelColumn::Index(0),
        };
        assert_eq!(read_csv(csv.as_bytes(), &by_index).unwrap(), ds);
    }

    #[test]
    fn headerless_csv() {
        let opts = CsvOptions {
            has_header: false,
            label_column: LabelColumn::Last,
        };
        let ds = read_csv("1,2,x\n3,4,y\n".as_bytes(), &opts).unwrap();
        assert_eq!(ds.n_samples(), 2);
    }

    #[test]
    fn parse_error_names_row_and_column() {
        let csv = "f1,f2,label\n1,2,a\n3,oops,b\n";
        match read_csv(csv.as_bytes(), &CsvOptions::default()) {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column), (3, 2)),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_and_ragged_inputs() {
        assert!(matches!(
            read_csv("a,b,label\n".as_bytes(), &CsvOptions::default()),
            Err(Error::Empty(_))
        ));
        assert!(matches!(
            read_csv("a,b,label\n1,2,x\n1,x\n".as_bytes(), &CsvOptions::default()),
            Err(Error::Ragged {
                row: 3,
                found: 2,
                expected: 3
            })
        ));
        assert!(read_csv("a,b,label\n1,inf,x\n".as_bytes(), &CsvOptions::default()).is_err());
    }

    #[test]
    fn missing_class_rejected() {
        let x = DMatrix::zeros(2, 3);
        assert!(LabeledDataset::new(x, vec![0, 2, 0]).is_err());
    }

    #[test]
    fn split_two_classes_of_ten() {
        let x = DMatrix::from_fn(3, 20, |r, c| (r * 20 + c) as f64);
        let labels = (0..20).map(|i| i % 2).collect();
        let ds = LabeledDataset::new(x, labels).unwrap();
        let s = split(&ds, 0.8, 7).unwrap();
        assert_eq!(s.train.class_counts(), vec![8, 8]);
        assert_eq!(s.test.class_counts(), vec![2, 2]);
        let again = split(&ds, 0.8, 7).unwrap();
        assert_eq!(s.train, again.train);
        assert_eq!(s.test, again.test);
        assert_eq!(s.train_indices, again.train_indices);
    }

    #[test]
    fn split_rejects_bad_inputs() {
        let ds = toy();
        assert!(split(&ds, 0.0, 1).is_err());
        assert!(split(&ds, 1.0, 1).is_err());
        let single = LabeledDataset::new(DMatrix::zeros(1, 3), vec![0, 0, 1]).unwrap();
        assert!(split(&single, 0.5, 1).is_err());
    }

    #[test]
    fn train_count_rounding() {
        assert_eq!(stratum_train_count(0.8, 50), 40);
        assert_eq!(stratum_train_count(0.8, 10), 8);
        assert_eq!(stratum_train_count(0.5, 5), 3);
        assert_eq!(stratum_train_count(0.8, 2), 2);
        assert_eq!(stratum_train_count(0.7, 10), 7);
        assert_eq!(stratum_train_count(0.1, 3), 1);
    }

    #[test]
    fn center_single_column() {
        let ds = LabeledDataset::new(DMatrix::from_column_slice(3, 1, &[1., -2., 5.]), vec![0]).unwrap();
        let (c, mean) = center(&ds);
        assert_eq!(mean.as_slice(), &[1., -2., 5.]);
        assert!(c.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn center_is_idempotent() {
        let (once, _) = center(&toy());
        let (twice, mean) = center(&once);
        assert!(mean.amax() < 1e-12);
        assert!((once.data() - twice.data()).amax() < 1e-12);
        assert_eq!(once.labels(), toy().labels());
    }

    #[test]
    fn centroid_matrix_worked_pattern() {
        let cm = centroid_matrix(&toy());
        let c1 = [3.0, 4.0];
        let c2 = [20.0, 30.0];
        assert_eq!(cm.centroids.column(0).as_slice(), &c1);
        assert_eq!(cm.centroids.column(1).as_slice(), &c2);
        let expected = [c1, c2, c1, c2, c1];
        for (i, col) in expected.iter().enumerate() {
            assert_eq!(cm.data.column(i).as_slice(), col);
        }
    }

    #[test]
    fn singleton_classes_reproduce_data() {
        let x = DMatrix::from_fn(3, 4, |r, c| (r as f64 + 1.3) * (c as f64 - 0.7));
        let ds = LabeledDataset::new(x.clone(), vec![0, 1, 2, 3]).unwrap();
        assert_eq!(centroid_matrix(&ds).data, x);
    }

    #[test]
    fn identical_points_share_centroid() {
        let p = [0.25, -1.5, 3.0];
        let x = DMatrix::from_fn(3, 4, |r, _| p[r]);
        let ds = LabeledDataset::new(x, vec![0; 4]).unwrap();
        let cm = centroid_matrix(&ds);
        for col in cm.data.column_iter() {
            assert_eq!(col.as_slice(), &p);
        }
    }

    #[test]
    fn standardize_unit_scale() {
        let (z, _, scale) = standardize(&toy());
        assert!(scale.iter().all(|&s| s > 0.0));
        for row in z.data().row_iter() {
            let n = row.len() as f64;
            assert!((row.norm_squared() / n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn subset_keeps_label_space() {
        let ds = toy();
        let sub = ds.select(&[0, 2]).unwrap();
        assert_eq!(sub.n_classes(), 2);
        assert_eq!(sub.populated_classes(), 1);
        assert!(sub.ensure_populated().is_err());
    }

    #[test]
    fn alignment_by_token() {
        let csv = "f,label\n1.0,b\n2.0,a\n";
        let test = read_csv(csv.as_bytes(), &CsvOptions::default()).unwrap();
        let names = vec!["a".to_string(), "c".to_string(), "b".to_string()];
        let aligned = test.aligned_to(&names).unwrap();
        assert_eq!(aligned.labels(), &[2, 0]);
        assert_eq!(aligned.n_classes(), 3);
        assert!(test.aligned_to(&names[..2]).is_err());
    }
}
