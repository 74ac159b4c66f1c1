//! Sparse 0-1 matrices stored in both CSR and CSC form.

use std::fmt::Write as _;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A sparse {0,1} matrix. Row and column adjacency are both kept because
/// in- and out-degree queries are equally hot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
}

impl BinaryMatrix {
    /// Builds a matrix from (row, col) pairs. Duplicates and out-of-range
    /// indices are rejected.
    pub fn from_entries(rows: usize, cols: usize, entries: &[(usize, usize)]) -> Result<Self> {
        let mut e = entries.to_vec();
        e.sort_unstable();
        for w in e.windows(2) {
            if w[0] == w[1] {
                return invalid(format!("duplicate entry {:?}", w[0]));
            }
        }
        if let Some(&(i, j)) = e.iter().find(|&&(i, j)| i >= rows || j >= cols) {
            return invalid(format!("entry ({i},{j}) outside {rows}x{cols}"));
        }
        Ok(Self::from_sorted_unchecked(rows, cols, &e))
    }

    /// `entries` must be sorted, unique and in range.
    pub(crate) fn from_sorted_unchecked(rows: usize, cols: usize, entries: &[(usize, usize)]) -> Self {
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_ptr = vec![0usize; cols + 1];
        for &(i, j) in entries {
            row_ptr[i + 1] += 1;
            col_ptr[j + 1] += 1;
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        for j in 0..cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let col_idx: Vec<usize> = entries.iter().map(|&(_, j)| j).collect();
        let mut row_idx = vec![0usize; entries.len()];
        let mut fill = col_ptr.clone();
        // entries are row-major sorted, so each column receives rows in order
        for &(i, j) in entries {
            row_idx[fill[j]] = i;
            fill[j] += 1;
        }
        Self { rows, cols, row_ptr, col_idx, col_ptr, row_idx }
    }

    /// Builds from per-row sorted column lists.
    pub(crate) fn from_rows(cols: usize, row_lists: Vec<Vec<usize>>) -> Self {
        let rows = row_lists.len();
        let entries: Vec<(usize, usize)> = row_lists
            .into_iter()
            .enumerate()
            .flat_map(|(i, r)| r.into_iter().map(move |j| (i, j)))
            .collect();
        Self::from_sorted_unchecked(rows, cols, &entries)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_sorted_unchecked(rows, cols, &[])
    }

    pub fn identity(n: usize) -> Self {
        let e: Vec<_> = (0..n).map(|i| (i, i)).collect();
        Self::from_sorted_unchecked(n, n, &e)
    }

    pub fn from_dense(rows: &[Vec<u8>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut e = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return invalid("ragged dense matrix");
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => e.push((i, j)),
                    _ => return invalid("entries must be 0 or 1"),
                }
            }
        }
        Ok(Self::from_sorted_unchecked(r, c, &e))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Column indices of the ones in row `i`, ascending.
    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Row indices of the ones in column `j`, ascending.
    pub fn col(&self, j: usize) -> &[usize] {
        &self.row_idx[self.col_ptr[j]..self.col_ptr[j + 1]]
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.row(i).binary_search(&j).is_ok()
    }

    pub fn row_sum(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn col_sum(&self, j: usize) -> usize {
        self.col_ptr[j + 1] - self.col_ptr[j]
    }

    pub fn trace(&self) -> usize {
        (0..self.rows.min(self.cols)).filter(|&i| self.get(i, i)).count()
    }

    /// All ones in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows).flat_map(move |i| self.row(i).iter().map(move |&j| (i, j)))
    }

    pub fn degree_sequence(&self) -> DegreeSequence {
        DegreeSequence {
            out: (0..self.cols).map(|j| self.col_sum(j)).collect(),
            inn: (0..self.rows).map(|i| self.row_sum(i)).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut e: Vec<_> = self.entries().map(|(i, j)| (j, i)).collect();
        e.sort_unstable();
        Self::from_sorted_unchecked(self.cols, self.rows, &e)
    }

    /// `M[rows, cols]` with the given index orders; result entry (a, b) is
    /// `M[rows[a], cols[b]]`.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut pos = vec![usize::MAX; self.cols];
        for (b, &j) in cols.iter().enumerate() {
            pos[j] = b;
        }
        let lists = rows
            .iter()
            .map(|&i| {
                let mut r: Vec<usize> = self
                    .row(i)
                    .iter()
                    .filter_map(|&j| (pos[j] != usize::MAX).then_some(pos[j]))
                    .collect();
                r.sort_unstable();
                r
            })
            .collect();
        Self::from_rows(cols.len(), lists)
    }

    /// Leading principal `k x k` block.
    pub fn leading(&self, k: usize) -> Self {
        let idx: Vec<usize> = (0..k).collect();
        self.submatrix(&idx, &idx)
    }

    /// Conjugation by a permutation: entry (a, b) of the result is
    /// `M[perm[a], perm[b]]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        self.submatrix(perm, perm)
    }

    /// Dense `M - z I_{rows x cols}`.
    pub fn shifted_dense(&self, z: Complex64) -> Mat<Complex64> {
        let mut m = Mat::<Complex64>::zeros(self.rows, self.cols);
        for (i, j) in self.entries() {
            m[(i, j)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..self.rows.min(self.cols) {
            m[(i, i)] -= z;
        }
        m
    }

    pub fn to_dense_real(&self) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.rows, self.cols);
        for (i, j) in self.entries() {
            m[(i, j)] = 1.0;
        }
        m
    }

    /// Text form: header `rows cols nnz`, then one `i j` line per entry in
    /// lexicographic order.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(16 * (self.nnz() + 1));
        writeln!(s, "{} {} {}", self.rows, self.cols, self.nnz()).unwrap();
        for (i, j) in self.entries() {
            writeln!(s, "{i} {j}").unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty input".into()))?;
        let nums = parse_ints(header, 3, 1)?;
        let (rows, cols, nnz) = (nums[0], nums[1], nums[2]);
        let mut e = Vec::with_capacity(nnz);
        for (k, line) in lines.enumerate() {
            let p = parse_ints(line, 2, k + 2)?;
            e.push((p[0], p[1]));
        }
        if e.len() != nnz {
            return Err(Error::Parse(format!("header says {nnz} entries, found {}", e.len())));
        }
        if e.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parse("entries not strictly sorted".into()));
        }
        Self::from_entries(rows, cols, &e)
    }
}

fn parse_ints(line: &str, count: usize, lineno: usize) -> Result<Vec<usize>> {
    let v: std::result::Result<Vec<usize>, _> = line.split_whitespace().map(str::parse).collect();
    match v {
        Ok(v) if v.len() == count => Ok(v),
        _ => Err(Error::Parse(format!("line {lineno}: expected {count} integers"))),
    }
}

/// Column sums (`out`, the d_i) and row sums (`inn`, the d_i').
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeSequence {
    pub out: Vec<usize>,
    #[serde(rename = "in")]
    pub inn: Vec<usize>,
}

impl DegreeSequence {
    pub fn new(out: Vec<usize>, inn: Vec<usize>) -> Self {
        Self { out, inn }
    }

    pub fn is_balanced(&self) -> bool {
        self.out.iter().sum::<usize>() == self.inn.iter().sum::<usize>()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("degree sequence serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}
