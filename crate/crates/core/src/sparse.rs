use crate::scalar::Scalar;

/// Column-compressed `rows × cols` matrix. Columns hold `(row, value)` pairs
/// sorted by row with no explicit zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseColumns<S> {
    rows: usize,
    columns: Vec<Vec<(usize, S)>>,
}

impl<S: Scalar> SparseColumns<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            columns: vec![Vec::new(); cols],
        }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, S)>,
    ) -> Result<Self, String> {
        let mut columns: Vec<Vec<(usize, S)>> = vec![Vec::new(); cols];
        for (r, c, v) in triplets {
            if r >= rows {
                return Err(format!("row index {r} out of range (rows = {rows})"));
            }
            if c >= cols {
                return Err(format!("column index {c} out of range (cols = {cols})"));
            }
            let col = &mut columns[c];
            match col.binary_search_by_key(&r, |(row, _)| *row) {
                Ok(pos) => col[pos].1 = col[pos].1.clone() + v,
                Err(pos) => col.insert(pos, (r, v)),
            }
        }
        for col in &mut columns {
            col.retain(|(_, v)| !v.is_zero());
        }
        Ok(Self { rows, columns })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, c: usize) -> &[(usize, S)] {
        &self.columns[c]
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, &S)> + '_ {
        self.columns
            .iter()
            .enumerate()
            .flat_map(|(c, col)| col.iter().map(move |(r, v)| (*r, c, v)))
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    /// `out += sign · M x` for a 0/1 vector `x`.
    pub fn add_binary_product(&self, x: &[bool], out: &mut [S], negate: bool) {
        for (c, _) in x.iter().enumerate().filter(|(_, &on)| on) {
            for (r, v) in &self.columns[c] {
                out[*r] = if negate {
                    out[*r].clone() - v.clone()
                } else {
                    out[*r].clone() + v.clone()
                };
            }
        }
    }

    /// `M x` for a 0/1 vector `x`.
    pub fn binary_product(&self, x: &[bool]) -> Vec<S> {
        let mut out = vec![S::zero(); self.rows];
        self.add_binary_product(x, &mut out, false);
        out
    }

    /// Sparse `M x` as sorted `(row, value)` pairs.
    pub fn binary_product_sparse(&self, x: &[bool]) -> Vec<(usize, S)> {
        let mut acc: Vec<(usize, S)> = Vec::new();
        for (c, _) in x.iter().enumerate().filter(|(_, &on)| on) {
            for (r, v) in &self.columns[c] {
                match acc.binary_search_by_key(r, |(row, _)| *row) {
                    Ok(pos) => acc[pos].1 = acc[pos].1.clone() + v.clone(),
                    Err(pos) => acc.insert(pos, (*r, v.clone())),
                }
            }
        }
        acc.retain(|(_, v)| !v.is_zero());
        acc
    }

    /// `Mᵀ y`.
    pub fn transpose_product(&self, y: &[S]) -> Vec<S> {
        self.columns
            .iter()
            .map(|col| {
                col.iter()
                    .fold(S::zero(), |acc, (r, v)| acc + v.clone() * y[*r].clone())
            })
            .collect()
    }

    /// `M v` for a real vector.
    pub fn product(&self, v: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.rows];
        for (c, col) in self.columns.iter().enumerate() {
            for (r, a) in col {
                out[*r] = out[*r].clone() + a.clone() * v[c].clone();
            }
        }
        out
    }

    /// Dense `M v` for a real vector, in `f64`.
    pub fn product_f64(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (c, col) in self.columns.iter().enumerate() {
            if v[c] == 0.0 {
                continue;
            }
            for (r, a) in col {
                out[*r] += a.to_f64_lossy() * v[c];
            }
        }
        out
    }

    /// Dense `Mᵀ y` in `f64`.
    pub fn transpose_product_f64(&self, y: &[f64]) -> Vec<f64> {
        self.columns
            .iter()
            .map(|col| col.iter().map(|(r, a)| a.to_f64_lossy() * y[*r]).sum())
            .collect()
    }

    pub fn column_is_zero(&self, c: usize) -> bool {
        self.columns[c].is_empty()
    }
}
