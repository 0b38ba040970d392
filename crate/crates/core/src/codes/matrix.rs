use std::fmt;
use std::str::FromStr;

use super::{CodeError, DefectiveVector, Gf2Poly, SyndromeVector, MAX_PRIVACY_ROWS};

/// Groups are tracked as bits of a `u64` column mask.
pub const MAX_GROUPS: usize = 64;

/// `m x n` binary matrix assigning `n` clients to `m` test groups.
///
/// Rows are bit-packed (64 clients per word). Every column is also cached as
/// an `m`-bit mask so a client's contribution to a syndrome is one OR.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentMatrix {
    m: usize,
    n: usize,
    rows: Vec<Vec<u64>>,
    columns: Vec<u64>,
}

impl AssignmentMatrix {
    /// Builds a matrix from dense 0/1 rows, rejecting empty groups and
    /// unassigned clients.
    pub fn from_dense<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self, CodeError> {
        let m = rows.len();
        if m == 0 {
            return Err(CodeError::NoRows);
        }
        if m > MAX_GROUPS {
            return Err(CodeError::TooManyGroups(m));
        }
        let n = rows[0].as_ref().len();
        if n == 0 {
            return Err(CodeError::NoColumns);
        }
        let words = n.div_ceil(64);
        let mut packed = vec![vec![0u64; words]; m];
        let mut columns = vec![0u64; n];
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(CodeError::RaggedInput { row: i, len: row.len(), expected: n });
            }
            for (j, &a) in row.iter().enumerate() {
                match a {
                    0 => {}
                    1 => {
                        packed[i][j / 64] |= 1 << (j % 64);
                        columns[j] |= 1 << i;
                    }
                    v => {
                        return Err(CodeError::NonBinaryEntry { row: i, col: j, value: v.to_string() })
                    }
                }
            }
        }
        if let Some(i) = packed.iter().position(|r| r.iter().all(|&w| w == 0)) {
            return Err(CodeError::EmptyRow(i));
        }
        if let Some(j) = columns.iter().position(|&c| c == 0) {
            return Err(CodeError::EmptyColumn(j));
        }
        Ok(Self { m, n, rows: packed, columns })
    }

    /// `n x n` identity: every client tested on its own (no aggregation).
    pub fn identity(n: usize) -> Result<Self, CodeError> {
        let rows: Vec<Vec<u8>> = (0..n).map(|i| (0..n).map(|j| u8::from(i == j)).collect()).collect();
        Self::from_dense(&rows)
    }

    /// Single group holding every client (full secure aggregation).
    pub fn all_ones(n: usize) -> Result<Self, CodeError> {
        Self::from_dense(&[vec![1u8; n]])
    }

    /// Number of test groups `m`.
    pub fn groups(&self) -> usize {
        self.m
    }

    /// Number of clients `n`.
    pub fn clients(&self) -> usize {
        self.n
    }

    pub fn get(&self, group: usize, client: usize) -> bool {
        self.rows[group][client / 64] >> (client % 64) & 1 == 1
    }

    /// Groups containing `client`, as an `m`-bit mask.
    pub fn column_mask(&self, client: usize) -> u64 {
        self.columns[client]
    }

    pub fn column_masks(&self) -> &[u64] {
        &self.columns
    }

    /// Clients in group `i`, ascending.
    pub fn group(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.get(i, j)).collect()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|w| w.count_ones() as usize).sum())
            .collect()
    }

    pub fn max_group_size(&self) -> usize {
        self.group_sizes().into_iter().max().unwrap_or(0)
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        (0..self.m)
            .map(|i| (0..self.n).map(|j| u8::from(self.get(i, j))).collect())
            .collect()
    }

    /// Same matrix with clients reordered: column `j` of the result is column
    /// `perm[j]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self, CodeError> {
        if perm.len() != self.n {
            return Err(CodeError::DimensionMismatch { expected: self.n, actual: perm.len() });
        }
        let dense = self.to_dense();
        let rows: Vec<Vec<u8>> = dense.iter().map(|r| perm.iter().map(|&p| r[p]).collect()).collect();
        Self::from_dense(&rows)
    }
}

impl fmt::Display for AssignmentMatrix {
    /// Plain-text format: `m n` on the first line, then one row of
    /// space-separated digits per group.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.m, self.n)?;
        for row in self.to_dense() {
            let line: Vec<String> = row.iter().map(u8::to_string).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

impl FromStr for AssignmentMatrix {
    type Err = CodeError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| CodeError::Parse("empty input".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| CodeError::Parse(format!("bad header `{header}`"))))
            .collect::<Result<_, _>>()?;
        let [m, n] = dims[..] else {
            return Err(CodeError::Parse(format!("header must be `m n`, got `{header}`")));
        };
        let mut rows = Vec::with_capacity(m);
        for (i, line) in lines.enumerate() {
            let row: Vec<u8> = line
                .split_whitespace()
                .enumerate()
                .map(|(j, tok)| match tok {
                    "0" => Ok(0),
                    "1" => Ok(1),
                    _ => Err(CodeError::NonBinaryEntry { row: i, col: j, value: tok.to_string() }),
                })
                .collect::<Result<_, _>>()?;
            if row.len() != n {
                return Err(CodeError::RaggedInput { row: i, len: row.len(), expected: n });
            }
            rows.push(row);
        }
        if rows.len() != m {
            return Err(CodeError::Parse(format!("header declares {m} rows, found {}", rows.len())));
        }
        Self::from_dense(&rows)
    }
}

/// Noiseless test outcome: group `i` is positive iff it holds a defective client.
pub fn syndrome(d: &DefectiveVector, a: &AssignmentMatrix) -> Result<SyndromeVector, CodeError> {
    if d.len() != a.clients() {
        return Err(CodeError::DimensionMismatch { expected: a.clients(), actual: d.len() });
    }
    let mask = d
        .bits()
        .iter()
        .zip(a.column_masks())
        .filter(|(&defective, _)| defective)
        .fold(0u64, |acc, (_, &col)| acc | col);
    SyndromeVector::from_mask(a.groups(), mask)
}

/// Smallest nonzero Hamming weight in the GF(2) row span of `a`.
///
/// The server can recover no combination of fewer than this many client
/// models from the group aggregates. Enumerates all `2^m - 1` nonzero row
/// combinations in Gray-code order, so `m` is capped at [`MAX_PRIVACY_ROWS`].
pub fn privacy_level(a: &AssignmentMatrix) -> Result<usize, CodeError> {
    let m = a.groups();
    if m > MAX_PRIVACY_ROWS {
        return Err(CodeError::RowSpanTooLarge(m));
    }
    let mut acc = vec![0u64; a.rows[0].len()];
    let mut best = a.clients();
    for step in 1u64..(1 << m) {
        let row = &a.rows[step.trailing_zeros() as usize];
        for (w, r) in acc.iter_mut().zip(row) {
            *w ^= r;
        }
        let weight: usize = acc.iter().map(|w| w.count_ones() as usize).sum();
        if weight > 0 && weight < best {
            best = weight;
        }
    }
    Ok(best)
}

/// Parity-check matrix of the cyclic code of length `n` generated by `g`.
///
/// With `h(x) = (x^n + 1) / g(x)` of degree `k`, row `i` holds the
/// coefficients `h_k, ..., h_0` starting at column `i`, giving `n - k` groups
/// that all have `weight(h)` clients.
pub fn cyclic_parity_check(n: usize, generator: &Gf2Poly) -> Result<AssignmentMatrix, CodeError> {
    let degree = generator.degree().ok_or(CodeError::NotADivisor(n))?;
    if degree == 0 || degree >= n {
        return Err(CodeError::DegenerateCode { n, degree });
    }
    let (check, rem) = Gf2Poly::x_n_plus_one(n).div_rem(generator);
    if !rem.is_zero() {
        return Err(CodeError::NotADivisor(n));
    }
    let k = n - degree;
    debug_assert_eq!(check.degree(), Some(k));
    let rows: Vec<Vec<u8>> = (0..degree)
        .map(|i| {
            let mut row = vec![0u8; n];
            for j in 0..=k {
                row[i + j] = u8::from(check.coeff(k - j));
            }
            row
        })
        .collect();
    let a = AssignmentMatrix::from_dense(&rows)?;
    debug_assert!(a.group_sizes().iter().all(|&s| s == check.weight()));
    Ok(a)
}
