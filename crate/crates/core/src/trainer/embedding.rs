use rand::Rng;

use crate::error::{Error, Result};
use crate::sampling::StreamRng;

/// Row-major `n x d` matrix of single-precision embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn zeros(rows: usize, dim: usize) -> Result<Self> {
        let len = rows
            .checked_mul(dim)
            .filter(|&l| l <= isize::MAX as usize / std::mem::size_of::<f32>())
            .ok_or_else(|| Error::Capacity(format!("{rows} x {dim} embedding matrix")))?;
        Ok(EmbeddingMatrix {
            rows,
            dim,
            data: vec![0.0; len],
        })
    }

    pub fn from_vec(rows: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if rows.checked_mul(dim) != Some(data.len()) {
            return Err(Error::Consistency(format!(
                "{} values cannot form a {rows} x {dim} matrix",
                data.len()
            )));
        }
        Ok(EmbeddingMatrix { rows, dim, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, u: usize) -> &[f32] {
        &self.data[u * self.dim..(u + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, u: usize) -> &mut [f32] {
        &mut self.data[u * self.dim..(u + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn row_f64(&self, u: usize) -> Vec<f64> {
        self.row(u).iter().map(|&x| x as f64).collect()
    }

    /// First row containing NaN or infinity, if any.
    pub fn first_non_finite_row(&self) -> Option<usize> {
        self.data
            .chunks(self.dim.max(1))
            .position(|r| r.iter().any(|x| !x.is_finite()))
    }
}

/// Entries drawn i.i.d. from `U[-0.5/d, 0.5/d]`.
pub fn init_embedding(n: usize, d: usize, rng: &mut StreamRng) -> Result<EmbeddingMatrix> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument(
            "embedding needs n >= 1 and d >= 1".into(),
        ));
    }
    let mut z = EmbeddingMatrix::zeros(n, d)?;
    let half = 0.5 / d as f32;
    for x in z.as_mut_slice() {
        *x = rng.random_range(-half..=half);
    }
    Ok(z)
}
