//! Binary matrices, observation masks and train/validation/test splitting.
//!
//! Both [`BinaryMatrix`] and [`ObservationMask`] share one plain-text
//! coordinate format:
//!
//! ```text
//! # comment lines start with '#'
//! M N
//! row col
//! row col
//! ```
//!
//! Indices are 0-based, the header is mandatory, blank lines and `#` lines
//! are skipped and CRLF line endings are accepted. For a matrix the listed
//! cells are the 1-entries; every unlisted cell is an observed 0. For a mask
//! the listed cells are the visible ones.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::SeededRng;

pub type Cell = (usize, usize);

/// An `n_rows x n_cols` matrix with entries in {0, 1}, stored as the sorted
/// coordinates of its ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    n_rows: usize,
    n_cols: usize,
    ones: Vec<Cell>,
}

/// Set of cells visible to one phase (train, validation or test).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ObservationMask {
    n_rows: usize,
    n_cols: usize,
    cells: Vec<Cell>,
}

/// Fractions of cells assigned to each split, plus the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
}

/// The three disjoint masks produced by [`split_observations`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: ObservationMask,
    pub val: ObservationMask,
    pub test: ObservationMask,
}

fn check_cells(
    n_rows: usize,
    n_cols: usize,
    cells: impl IntoIterator<Item = (usize, Cell)>,
) -> Result<Vec<Cell>> {
    let mut out: Vec<(Cell, usize)> = Vec::new();
    for (line, (row, col)) in cells {
        if row >= n_rows || col >= n_cols {
            return Err(Error::OutOfBounds {
                line,
                row,
                col,
                n_rows,
                n_cols,
            });
        }
        out.push(((row, col), line));
    }
    // stable, so for a duplicate the reported line is the later occurrence
    out.sort_by_key(|&(cell, _)| cell);
    for pair in out.windows(2) {
        if pair[0].0 == pair[1].0 {
            let (row, col) = pair[1].0;
            return Err(Error::Duplicate {
                line: pair[0].1.max(pair[1].1),
                row,
                col,
            });
        }
    }
    Ok(out.into_iter().map(|(cell, _)| cell).collect())
}

impl BinaryMatrix {
    /// Builds a matrix from the coordinates of its ones. Coordinates must be
    /// in bounds and unique.
    pub fn new(n_rows: usize, n_cols: usize, ones: impl IntoIterator<Item = Cell>) -> Result<Self> {
        let ones = check_cells(n_rows, n_cols, ones.into_iter().map(|c| (0, c)))?;
        Ok(BinaryMatrix {
            n_rows,
            n_cols,
            ones,
        })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        BinaryMatrix {
            n_rows,
            n_cols,
            ones: Vec::new(),
        }
    }

    pub fn ones_like(n_rows: usize, n_cols: usize) -> Self {
        let ones = (0..n_rows)
            .flat_map(|r| (0..n_cols).map(move |c| (r, c)))
            .collect();
        BinaryMatrix {
            n_rows,
            n_cols,
            ones,
        }
    }

    /// Builds a matrix from dense rows; any nonzero entry counts as a one.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut ones = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n_cols {
                return Err(Error::Dimension(format!(
                    "row {r} has {} entries, expected {n_cols}",
                    row.len()
                )));
            }
            ones.extend(row.iter().enumerate().filter(|(_, &v)| v != 0).map(|(c, _)| (r, c)));
        }
        Ok(BinaryMatrix {
            n_rows,
            n_cols,
            ones,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    /// Sorted coordinates of the 1-entries.
    pub fn ones(&self) -> &[Cell] {
        &self.ones
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.ones.binary_search(&(row, col)).is_ok()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<bool> {
        let mut dense = vec![false; self.n_rows * self.n_cols];
        for &(r, c) in &self.ones {
            dense[r * self.n_cols + c] = true;
        }
        dense
    }

    pub fn parse_coordinates(text: &str) -> Result<Self> {
        let (n_rows, n_cols, cells) = parse_coordinate_text(text)?;
        let ones = check_cells(n_rows, n_cols, cells)?;
        Ok(BinaryMatrix {
            n_rows,
            n_cols,
            ones,
        })
    }

    pub fn to_coordinate_string(&self) -> String {
        coordinate_string(self.n_rows, self.n_cols, &self.ones)
    }

    pub fn write_coordinate_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_coordinate_string()).map_err(|e| Error::io(path, e))
    }

    /// Returns a copy with rows reordered so that new row `i` is old row `perm[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        let inverse = invert_permutation(perm, self.n_rows)?;
        BinaryMatrix::new(
            self.n_rows,
            self.n_cols,
            self.ones.iter().map(|&(r, c)| (inverse[r], c)),
        )
    }
}

impl ObservationMask {
    pub fn new(n_rows: usize, n_cols: usize, cells: impl IntoIterator<Item = Cell>) -> Result<Self> {
        let cells = check_cells(n_rows, n_cols, cells.into_iter().map(|c| (0, c)))?;
        Ok(ObservationMask {
            n_rows,
            n_cols,
            cells,
        })
    }

    /// Every cell of the grid.
    pub fn full(n_rows: usize, n_cols: usize) -> Self {
        let cells = (0..n_rows)
            .flat_map(|r| (0..n_cols).map(move |c| (r, c)))
            .collect();
        ObservationMask {
            n_rows,
            n_cols,
            cells,
        }
    }

    pub fn empty(n_rows: usize, n_cols: usize) -> Self {
        ObservationMask {
            n_rows,
            n_cols,
            cells: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    /// Sorted (row-major) visible cells.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.cells.binary_search(&(row, col)).is_ok()
    }

    pub fn is_disjoint(&self, other: &ObservationMask) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.cells.len() && j < other.cells.len() {
            match self.cells[i].cmp(&other.cells[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    /// Union of two masks over the same grid.
    pub fn union(&self, other: &ObservationMask) -> Result<ObservationMask> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "cannot unite masks of shape {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let mut cells: Vec<Cell> = self.cells.iter().chain(&other.cells).copied().collect();
        cells.sort_unstable();
        cells.dedup();
        Ok(ObservationMask {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            cells,
        })
    }

    pub fn parse_coordinates(text: &str) -> Result<Self> {
        let (n_rows, n_cols, cells) = parse_coordinate_text(text)?;
        let cells = check_cells(n_rows, n_cols, cells)?;
        Ok(ObservationMask {
            n_rows,
            n_cols,
            cells,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_coordinates(&text)
    }

    pub fn to_coordinate_string(&self) -> String {
        coordinate_string(self.n_rows, self.n_cols, &self.cells)
    }

    pub fn write_coordinate_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_coordinate_string()).map_err(|e| Error::io(path, e))
    }

    /// Same reordering as [`BinaryMatrix::permute_rows`].
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        let inverse = invert_permutation(perm, self.n_rows)?;
        ObservationMask::new(
            self.n_rows,
            self.n_cols,
            self.cells.iter().map(|&(r, c)| (inverse[r], c)),
        )
    }
}

fn invert_permutation(perm: &[usize], n: usize) -> Result<Vec<usize>> {
    if perm.len() != n {
        return Err(Error::Dimension(format!(
            "permutation has length {}, expected {n}",
            perm.len()
        )));
    }
    let mut inverse = vec![usize::MAX; n];
    for (new, &old) in perm.iter().enumerate() {
        if old >= n || inverse[old] != usize::MAX {
            return Err(Error::Dimension("not a permutation".into()));
        }
        inverse[old] = new;
    }
    Ok(inverse)
}

fn coordinate_string(n_rows: usize, n_cols: usize, cells: &[Cell]) -> String {
    use std::fmt::Write;
    let mut out = String::with_capacity(16 + cells.len() * 10);
    writeln!(out, "{n_rows} {n_cols}").unwrap();
    for &(r, c) in cells {
        writeln!(out, "{r} {c}").unwrap();
    }
    out
}

type ParsedCells = (usize, usize, Vec<(usize, Cell)>);

fn parse_pair(line_no: usize, line: &str, what: &str) -> Result<(usize, usize)> {
    let mut fields = line.split_whitespace();
    let parse = |s: Option<&str>| -> Result<usize> {
        let s = s.ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("expected two integers ({what}), got {line:?}"),
        })?;
        s.parse::<usize>().map_err(|e| Error::Parse {
            line: line_no,
            message: format!("invalid integer {s:?}: {e}"),
        })
    };
    let a = parse(fields.next())?;
    let b = parse(fields.next())?;
    if fields.next().is_some() {
        return Err(Error::Parse {
            line: line_no,
            message: format!("trailing fields in {line:?}"),
        });
    }
    Ok((a, b))
}

fn parse_coordinate_text(text: &str) -> Result<ParsedCells> {
    let mut header = None;
    let mut cells = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if header.is_none() {
            header = Some(parse_pair(line_no, line, "M N header")?);
        } else {
            cells.push((line_no, parse_pair(line_no, line, "row col")?));
        }
    }
    let (n_rows, n_cols) = header.ok_or_else(|| Error::Parse {
        line: 1,
        message: "missing \"M N\" header".into(),
    })?;
    Ok((n_rows, n_cols, cells))
}

/// Reads a coordinate file (see the module docs for the format).
pub fn load_coordinate_file(path: impl AsRef<Path>) -> Result<BinaryMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    BinaryMatrix::parse_coordinates(&text)
}

/// Fraction of ones in the matrix.
pub fn density(matrix: &BinaryMatrix) -> Result<f64> {
    let total = matrix.n_rows * matrix.n_cols;
    if total == 0 {
        return Err(Error::Dimension("density of an empty matrix".into()));
    }
    Ok(matrix.ones.len() as f64 / total as f64)
}

impl SplitSpec {
    pub fn new(train_frac: f64, val_frac: f64, test_frac: f64, seed: u64) -> Result<Self> {
        let spec = SplitSpec {
            train_frac,
            val_frac,
            test_frac,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("train", self.train_frac),
            ("validation", self.val_frac),
            ("test", self.test_frac),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Spec(format!("{name} fraction {f} is not in (0, 1)")));
            }
        }
        let sum = self.train_frac + self.val_frac + self.test_frac;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Spec(format!("fractions sum to {sum}, not 1")));
        }
        Ok(())
    }

    /// Number of (train, validation, test) cells for a grid of `total`
    /// cells: train and validation take the floor of their share, test
    /// takes the remainder.
    pub fn sizes(&self, total: usize) -> (usize, usize, usize) {
        // absorbs representation error such as 0.7 * 4250 = 2974.9999...
        let share = |f: f64| ((f * total as f64) + 1e-9).floor() as usize;
        let n_train = share(self.train_frac).min(total);
        let n_val = share(self.val_frac).min(total - n_train);
        (n_train, n_val, total - n_train - n_val)
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_frac: 0.7,
            val_frac: 0.15,
            test_frac: 0.15,
            seed: 0,
        }
    }
}

/// Shuffles every cell of the grid with the seeded generator and cuts the
/// permutation into train, validation and test masks.
///
/// Only the matrix shape is used; the split does not depend on the values.
pub fn split_observations(matrix: &BinaryMatrix, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let (n_rows, n_cols) = matrix.shape();
    let total = n_rows * n_cols;
    let mut order: Vec<usize> = (0..total).collect();
    SeededRng::new(spec.seed).shuffle(&mut order);

    let (n_train, n_val, _) = spec.sizes(total);
    let to_mask = |idx: &[usize]| {
        let mut cells: Vec<Cell> = idx.iter().map(|&i| (i / n_cols, i % n_cols)).collect();
        cells.sort_unstable();
        ObservationMask {
            n_rows,
            n_cols,
            cells,
        }
    };
    Ok(Split {
        train: to_mask(&order[..n_train]),
        val: to_mask(&order[n_train..n_train + n_val]),
        test: to_mask(&order[n_train + n_val..]),
    })
}
