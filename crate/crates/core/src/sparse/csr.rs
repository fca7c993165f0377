use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{GfdmError, Result};
use crate::stencils::StencilSet;

const PARALLEL_ROWS: usize = 4096;

/// Compressed sparse row matrix with sorted, unique column indices per row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for &(r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(GfdmError::invalid(format!(
                    "entry ({r}, {c}) outside a {nrows}x{ncols} matrix"
                )));
            }
            rows[r].push((c, v));
        }
        Self::from_row_lists(nrows, ncols, rows)
    }

    fn from_row_lists(nrows: usize, ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let start = col_idx.len();
            for (c, v) in row {
                if !v.is_finite() {
                    return Err(GfdmError::invalid(format!(
                        "non-finite matrix entry in column {c}"
                    )));
                }
                if col_idx.len() > start && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Square matrix whose rows are the stencil rows.
    pub fn from_stencil(set: &StencilSet) -> Result<Self> {
        let n = set.len();
        let rows = (0..n)
            .map(|i| {
                let (c, v) = set.row(i);
                c.iter().copied().zip(v.iter().copied()).collect()
            })
            .collect();
        Self::from_row_lists(n, n, rows)
    }

    /// `sum_t s_t A_t` over matrices of equal shape.
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> Result<Self> {
        let Some((_, first)) = terms.first() else {
            return Err(GfdmError::invalid("empty linear combination"));
        };
        let (nr, nc) = first.shape();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nr];
        for (s, m) in terms {
            if m.shape() != (nr, nc) {
                return Err(GfdmError::ShapeMismatch {
                    expected: nr,
                    found: m.nrows,
                });
            }
            for (r, row) in rows.iter_mut().enumerate() {
                let (c, v) = m.row(r);
                row.extend(c.iter().zip(v).map(|(&c, &v)| (c, s * v)));
            }
        }
        Self::from_row_lists(nr, nc, rows)
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &CsrMatrix) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(GfdmError::ShapeMismatch {
                expected: self.ncols,
                found: other.nrows,
            });
        }
        let rows = (0..self.nrows)
            .map(|r| {
                let (c, v) = self.row(r);
                c.iter()
                    .zip(v)
                    .flat_map(|(&k, &a)| {
                        let (c2, v2) = other.row(k);
                        c2.iter().zip(v2).map(move |(&j, &b)| (j, a * b))
                    })
                    .collect()
            })
            .collect();
        Self::from_row_lists(self.nrows, other.ncols, rows)
    }

    /// Block matrix from a grid of optional blocks (`None` is a zero block).
    pub fn block(blocks: &[Vec<Option<&CsrMatrix>>]) -> Result<Self> {
        let row_sizes: Vec<usize> = blocks
            .iter()
            .map(|br| br.iter().flatten().map(|m| m.nrows).next().unwrap_or(0))
            .collect();
        let ncb = blocks.first().map_or(0, |b| b.len());
        let col_sizes: Vec<usize> = (0..ncb)
            .map(|c| {
                blocks
                    .iter()
                    .filter_map(|br| br[c])
                    .map(|m| m.ncols)
                    .next()
                    .unwrap_or(0)
            })
            .collect();
        let (nr, nc) = (row_sizes.iter().sum(), col_sizes.iter().sum());
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nr];
        let mut r0 = 0;
        for (bi, br) in blocks.iter().enumerate() {
            let mut c0 = 0;
            for (bj, blk) in br.iter().enumerate() {
                if let Some(m) = blk {
                    if m.nrows != row_sizes[bi] || m.ncols != col_sizes[bj] {
                        return Err(GfdmError::ShapeMismatch {
                            expected: row_sizes[bi],
                            found: m.nrows,
                        });
                    }
                    for r in 0..m.nrows {
                        let (c, v) = m.row(r);
                        rows[r0 + r].extend(c.iter().zip(v).map(|(&c, &v)| (c0 + c, v)));
                    }
                }
                c0 += col_sizes[bj];
            }
            r0 += row_sizes[bi];
        }
        Self::from_row_lists(nr, nc, rows)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map_or(0.0, |k| vals[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn scale_rows(&mut self, s: &[f64]) {
        for r in 0..self.nrows {
            for v in &mut self.values[self.row_ptr[r]..self.row_ptr[r + 1]] {
                *v *= s[r];
            }
        }
    }

    fn row_dot(&self, r: usize, x: &[f64]) -> f64 {
        let (c, v) = self.row(r);
        c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum()
    }

    /// `y = A x`.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "matvec input length");
        assert_eq!(y.len(), self.nrows, "matvec output length");
        if self.nrows >= PARALLEL_ROWS {
            y.par_iter_mut()
                .enumerate()
                .for_each(|(r, out)| *out = self.row_dot(r, x));
        } else {
            for (r, out) in y.iter_mut().enumerate() {
                *out = self.row_dot(r, x);
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, row) in d.iter_mut().enumerate() {
            let (c, v) = self.row(r);
            for (&j, &a) in c.iter().zip(v) {
                row[j] = a;
            }
        }
        d
    }

    /// Writes the matrix in Matrix Market coordinate format.
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for r in 0..self.nrows {
            let (c, v) = self.row(r);
            for (&j, &a) in c.iter().zip(v) {
                writeln!(out, "{} {} {a:e}", r + 1, j + 1)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_matrix_market<R: BufRead>(input: R) -> Result<Self> {
        let mut shape = None;
        let mut triplets = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            let bad = || GfdmError::Parse {
                line: idx + 1,
                message: format!("malformed line {t:?}"),
            };
            let f: Vec<&str> = t.split_whitespace().collect();
            if shape.is_none() {
                let dims: Vec<usize> = f
                    .iter()
                    .map(|s| s.parse().map_err(|_| bad()))
                    .collect::<Result<_>>()?;
                if dims.len() != 3 {
                    return Err(bad());
                }
                shape = Some((dims[0], dims[1]));
                continue;
            }
            if f.len() != 3 {
                return Err(bad());
            }
            let r: usize = f[0].parse().map_err(|_| bad())?;
            let c: usize = f[1].parse().map_err(|_| bad())?;
            let v: f64 = f[2].parse().map_err(|_| bad())?;
            if r == 0 || c == 0 {
                return Err(bad());
            }
            triplets.push((r - 1, c - 1, v));
        }
        let (nr, nc) = shape.ok_or(GfdmError::Parse {
            line: 1,
            message: "missing size line".into(),
        })?;
        Self::from_triplets(nr, nc, &triplets)
    }
}
