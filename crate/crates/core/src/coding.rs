//! Random linear network coding over GF(2^p): coding matrices, encoding,
//! rank / exact solution by Gaussian elimination, and the row-reduction
//! that turns a received batch into a sparser equivalent system.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use rand::Rng;
use thiserror::Error;

use crate::gf::{FieldSpec, GfError};

#[derive(Debug, Error)]
pub enum CodingError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("value {value} is not an element of GF({q})")]
    OutOfField { value: u32, q: usize },
    #[error("rank-deficient system: rank {rank} < {sources} unknowns")]
    RankDeficient { rank: usize, sources: usize },
    #[error("inconsistent system: equation {row} reduces to 0 = nonzero")]
    Inconsistent { row: usize },
    #[error("malformed trace: {0}")]
    Trace(String),
    #[error(transparent)]
    Field(#[from] GfError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// L x N matrix of global coding coefficients, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingMatrix {
    rows: usize,
    cols: usize,
    field: FieldSpec,
    entries: Vec<u8>,
}

impl CodingMatrix {
    pub fn new(rows: usize, cols: usize, field: FieldSpec, entries: Vec<u8>) -> Result<Self, CodingError> {
        if entries.len() != rows * cols {
            return Err(CodingError::DimensionMismatch {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        let q = field.order();
        if let Some(&bad) = entries.iter().find(|&&v| v as usize >= q) {
            return Err(CodingError::OutOfField { value: bad as u32, q });
        }
        Ok(CodingMatrix {
            rows,
            cols,
            field,
            entries,
        })
    }

    pub fn from_rows(rows: &[Vec<u8>], cols: usize, field: FieldSpec) -> Result<Self, CodingError> {
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(CodingError::DimensionMismatch {
                expected: cols,
                found: bad.len(),
            });
        }
        Self::new(rows.len(), cols, field, rows.concat())
    }

    pub fn identity(n: usize, field: FieldSpec) -> Self {
        let mut entries = vec![0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1;
        }
        CodingMatrix {
            rows: n,
            cols: n,
            field,
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.entries[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[u8] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    /// The first `rows` rows, e.g. the symbols received so far.
    pub fn prefix(&self, rows: usize) -> CodingMatrix {
        let rows = rows.min(self.rows);
        CodingMatrix {
            rows,
            cols: self.cols,
            field: self.field.clone(),
            entries: self.entries[..rows * self.cols].to_vec(),
        }
    }

    /// Nonzero count of each row (the check-node degrees).
    pub fn row_degrees(&self) -> Vec<usize> {
        (0..self.rows)
            .map(|r| self.row(r).iter().filter(|&&v| v != 0).count())
            .collect()
    }

    pub fn mean_row_degree(&self) -> f64 {
        if self.rows == 0 {
            return 0.0;
        }
        self.row_degrees().iter().sum::<usize>() as f64 / self.rows as f64
    }
}

/// Matrix with i.i.d. uniform entries over the field.
pub fn random_coding_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, field: &FieldSpec, rng: &mut R) -> CodingMatrix {
    let q = field.order();
    let entries = (0..rows * cols).map(|_| rng.random_range(0..q) as u8).collect();
    CodingMatrix {
        rows,
        cols,
        field: field.clone(),
        entries,
    }
}

/// y = A x over the field.
pub fn encode(a: &CodingMatrix, x: &[u8]) -> Result<Vec<u8>, CodingError> {
    if x.len() != a.cols {
        return Err(CodingError::DimensionMismatch {
            expected: a.cols,
            found: x.len(),
        });
    }
    let q = a.field.order();
    if let Some(&bad) = x.iter().find(|&&v| v as usize >= q) {
        return Err(CodingError::OutOfField { value: bad as u32, q });
    }
    Ok((0..a.rows)
        .map(|r| {
            a.row(r)
                .iter()
                .zip(x)
                .fold(0u8, |acc, (&c, &v)| acc ^ a.field.mul_raw(c, v))
        })
        .collect())
}

/// Received coded symbols together with their coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedBatch {
    pub matrix: CodingMatrix,
    pub y: Vec<u8>,
}

impl CodedBatch {
    pub fn new(matrix: CodingMatrix, y: Vec<u8>) -> Result<Self, CodingError> {
        if y.len() != matrix.rows {
            return Err(CodingError::DimensionMismatch {
                expected: matrix.rows,
                found: y.len(),
            });
        }
        Ok(CodedBatch { matrix, y })
    }

    pub fn encode(matrix: CodingMatrix, x: &[u8]) -> Result<Self, CodingError> {
        let y = encode(&matrix, x)?;
        Ok(CodedBatch { matrix, y })
    }

    pub fn sources(&self) -> usize {
        self.matrix.cols
    }

    /// Whether `x` satisfies every equation.
    pub fn is_satisfied_by(&self, x: &[u8]) -> bool {
        encode(&self.matrix, x).is_ok_and(|y| y == self.y)
    }
}

/// Row-reduced batch with the same solution set as the batch it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreprocessedBatch {
    pub matrix: CodingMatrix,
    pub y: Vec<u8>,
    /// Received equations that turned out to be linear combinations of
    /// others and were dropped.
    pub non_innovative: usize,
}

impl PreprocessedBatch {
    pub fn rank(&self) -> usize {
        self.matrix.rows
    }

    pub fn sources(&self) -> usize {
        self.matrix.cols
    }

    pub fn is_satisfied_by(&self, x: &[u8]) -> bool {
        encode(&self.matrix, x).is_ok_and(|y| y == self.y)
    }

    pub fn as_batch(&self) -> CodedBatch {
        CodedBatch {
            matrix: self.matrix.clone(),
            y: self.y.clone(),
        }
    }
}

/// Working copy of an augmented system [A | y].
struct Augmented<'f> {
    field: &'f FieldSpec,
    cols: usize,
    rows: Vec<Vec<u8>>,
    rhs: Vec<u8>,
}

impl<'f> Augmented<'f> {
    fn new(a: &'f CodingMatrix, y: &[u8]) -> Self {
        Augmented {
            field: &a.field,
            cols: a.cols,
            rows: (0..a.rows).map(|r| a.row(r).to_vec()).collect(),
            rhs: y.to_vec(),
        }
    }

    /// row[target] += factor * row[source].
    fn axpy(&mut self, target: usize, source: usize, factor: u8) {
        if factor == 0 {
            return;
        }
        let f = self.field;
        let (t, s) = if target < source {
            let (lo, hi) = self.rows.split_at_mut(source);
            (&mut lo[target], &hi[0])
        } else {
            let (lo, hi) = self.rows.split_at_mut(target);
            (&mut hi[0], &lo[source])
        };
        for (tv, &sv) in t.iter_mut().zip(s.iter()) {
            *tv ^= f.mul_raw(factor, sv);
        }
        self.rhs[target] ^= f.mul_raw(factor, self.rhs[source]);
    }

    /// Forward elimination to row-echelon form with unit pivots. Returns the
    /// pivot columns; rows past the rank are left all-zero.
    fn forward(&mut self) -> Vec<usize> {
        let f = self.field;
        let mut pivots = Vec::new();
        let mut next = 0;
        for c in 0..self.cols {
            if next == self.rows.len() {
                break;
            }
            let Some(p) = (next..self.rows.len()).find(|&r| self.rows[r][c] != 0) else {
                continue;
            };
            self.rows.swap(next, p);
            self.rhs.swap(next, p);
            let inv = f.inv_raw(self.rows[next][c]).expect("pivot is nonzero");
            for v in self.rows[next].iter_mut() {
                *v = f.mul_raw(inv, *v);
            }
            self.rhs[next] = f.mul_raw(inv, self.rhs[next]);
            for r in next + 1..self.rows.len() {
                let factor = self.rows[r][c];
                self.axpy(r, next, factor);
            }
            pivots.push(c);
            next += 1;
        }
        pivots
    }

    /// Errors on a zero row with a nonzero right-hand side.
    fn check_consistent(&self, rank: usize) -> Result<(), CodingError> {
        match (rank..self.rows.len()).find(|&r| self.rhs[r] != 0) {
            Some(row) => Err(CodingError::Inconsistent { row }),
            None => Ok(()),
        }
    }
}

pub fn rank(a: &CodingMatrix) -> usize {
    Augmented::new(a, &vec![0; a.rows]).forward().len()
}

/// The unique solution of A x = y; fails unless rank(A) = N.
pub fn exact_solve(a: &CodingMatrix, y: &[u8]) -> Result<Vec<u8>, CodingError> {
    if y.len() != a.rows {
        return Err(CodingError::DimensionMismatch {
            expected: a.rows,
            found: y.len(),
        });
    }
    let mut sys = Augmented::new(a, y);
    let pivots = sys.forward();
    sys.check_consistent(pivots.len())?;
    if pivots.len() < a.cols {
        return Err(CodingError::RankDeficient {
            rank: pivots.len(),
            sources: a.cols,
        });
    }
    // Square upper-triangular with unit diagonal: back substitution.
    let n = a.cols;
    let mut x = vec![0u8; n];
    for r in (0..n).rev() {
        let mut acc = sys.rhs[r];
        for c in r + 1..n {
            acc ^= a.field.mul_raw(sys.rows[r][c], x[c]);
        }
        x[r] = acc;
    }
    Ok(x)
}

/// Row-reduces a batch: forward elimination drops the non-innovative
/// equations, then, working from the last column backwards, each remaining
/// row clears the entries above it in column N-1-j (row L'-1-j for
/// j = 0..L'-2). A full-rank square system comes out as the identity.
pub fn preprocess(batch: &CodedBatch) -> Result<PreprocessedBatch, CodingError> {
    let a = &batch.matrix;
    let mut sys = Augmented::new(a, &batch.y);
    let rank = sys.forward().len();
    sys.check_consistent(rank)?;
    let non_innovative = a.rows - rank;
    sys.rows.truncate(rank);
    sys.rhs.truncate(rank);

    let f = &a.field;
    for j in 0..rank.saturating_sub(1) {
        let (r, c) = (rank - 1 - j, a.cols - 1 - j);
        let Some(inv) = f.inv_raw(sys.rows[r][c]) else {
            continue;
        };
        for above in 0..r {
            let factor = f.mul_raw(sys.rows[above][c], inv);
            sys.axpy(above, r, factor);
        }
    }
    Ok(PreprocessedBatch {
        matrix: CodingMatrix {
            rows: rank,
            cols: a.cols,
            field: f.clone(),
            entries: sys.rows.concat(),
        },
        y: sys.rhs,
        non_innovative,
    })
}

/// Writes a batch as integer CSV: a `q,L,N` header line, then one line per
/// equation holding its N coefficients followed by the coded symbol.
pub fn write_trace<W: Write>(batch: &CodedBatch, mut out: W) -> Result<(), CodingError> {
    let a = &batch.matrix;
    writeln!(out, "{},{},{}", a.field.order(), a.rows, a.cols)?;
    let mut line = String::new();
    for r in 0..a.rows {
        line.clear();
        for &v in a.row(r) {
            write!(line, "{v},").expect("writing to a String");
        }
        writeln!(out, "{line}{}", batch.y[r])?;
    }
    Ok(())
}

pub fn read_trace<R: BufRead>(input: R) -> Result<CodedBatch, CodingError> {
    fn ints(line: &str) -> Result<Vec<u32>, CodingError> {
        line.split(',')
            .map(|t| t.trim().parse::<u32>().map_err(|e| CodingError::Trace(format!("{t:?}: {e}"))))
            .collect()
    }
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| CodingError::Trace("empty input".into()))??;
    let [q, rows, cols] = ints(&header)?[..] else {
        return Err(CodingError::Trace("header must be q,L,N".into()));
    };
    let field = FieldSpec::with_order(q as usize)?;
    let mut entries = Vec::with_capacity((rows * cols) as usize);
    let mut y = Vec::with_capacity(rows as usize);
    for r in 0..rows {
        let line = lines
            .next()
            .ok_or_else(|| CodingError::Trace(format!("missing equation {r}")))??;
        let values = ints(&line)?;
        if values.len() != cols as usize + 1 {
            return Err(CodingError::Trace(format!("equation {r} has {} fields", values.len())));
        }
        if let Some(&bad) = values.iter().find(|&&v| v >= q) {
            return Err(CodingError::OutOfField { value: bad, q: q as usize });
        }
        entries.extend(values[..cols as usize].iter().map(|&v| v as u8));
        y.push(values[cols as usize] as u8);
    }
    CodedBatch::new(CodingMatrix::new(rows as usize, cols as usize, field, entries)?, y)
}
