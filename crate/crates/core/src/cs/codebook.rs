use ndarray::{Array2, ArrayView1, Axis};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{config_err, Error, Result};

/// Common codebook shared by all users: `L_p x 2^J`, unit-norm columns.
#[derive(Debug, Clone)]
pub struct Codebook {
    a: Array2<Complex64>,
    a_h: Array2<Complex64>,
    seed: u64,
}

pub fn generate_codebook(l_p: usize, j: usize, seed: u64) -> Result<Codebook> {
    if l_p == 0 || j == 0 || j > crate::tree_code::MAX_BLOCK_BITS {
        return Err(config_err(format!(
            "codebook needs L_p >= 1 and 1 <= J <= 30 (got {l_p}, {j})"
        )));
    }
    let n = 1usize << j;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Array2::from_shape_simple_fn((l_p, n), || complex_normal(&mut rng, 1.0));
    for mut col in a.axis_iter_mut(Axis(1)) {
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        col.mapv_inplace(|z| z / norm);
    }
    Ok(Codebook::from_matrix(a, seed))
}

impl Codebook {
    /// Wraps an explicit matrix; columns are used as given.
    pub fn from_matrix(a: Array2<Complex64>, seed: u64) -> Self {
        let a_h = a.t().mapv(|z| z.conj());
        Self { a, a_h, seed }
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.a
    }

    /// Conjugate transpose, `N x L_p`.
    pub fn adjoint(&self) -> &Array2<Complex64> {
        &self.a_h
    }

    pub fn column(&self, index: u32) -> ArrayView1<'_, Complex64> {
        self.a.column(index as usize)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn length(&self) -> usize {
        self.a.nrows()
    }

    pub fn size(&self) -> usize {
        self.a.ncols()
    }
}

/// Circular complex Gaussian sample with `E|z|^2 = var`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// Received sub-slot signal `Y = sum_k a_{i_k} h_k^T + Z`.
///
/// `indices[k]` is the codeword sent by user `k`, whose beam-domain channel
/// is row `k` of `channels`.
pub fn synthesize_slot<R: Rng + ?Sized>(
    indices: &[u32],
    channels: &Array2<Complex64>,
    codebook: &Codebook,
    noise_var: f64,
    rng: &mut R,
) -> Result<Array2<Complex64>> {
    if channels.nrows() != indices.len() {
        return Err(Error::Length {
            what: "channel rows",
            expected: indices.len(),
            got: channels.nrows(),
        });
    }
    if noise_var < 0.0 || !noise_var.is_finite() {
        return Err(Error::Domain(format!("noise variance {noise_var}")));
    }
    let n_rf = channels.ncols();
    let mut y = if noise_var > 0.0 {
        Array2::from_shape_simple_fn((codebook.length(), n_rf), || complex_normal(rng, noise_var))
    } else {
        Array2::zeros((codebook.length(), n_rf))
    };
    for (&idx, h) in indices.iter().zip(channels.axis_iter(Axis(0))) {
        if idx as usize >= codebook.size() {
            return Err(Error::Domain(format!("codeword index {idx} outside codebook")));
        }
        add_outer(&mut y, codebook.column(idx), h, 1.0);
    }
    Ok(y)
}

/// `y += scale * a h^T`.
pub fn add_outer(y: &mut Array2<Complex64>, a: ArrayView1<'_, Complex64>, h: ArrayView1<'_, Complex64>, scale: f64) {
    for (mut row, &ai) in y.axis_iter_mut(Axis(0)).zip(a.iter()) {
        let s = ai * scale;
        for (y, &hm) in row.iter_mut().zip(h.iter()) {
            *y += s * hm;
        }
    }
}

/// Frobenius-norm energy.
pub fn energy<'a, I: IntoIterator<Item = &'a Complex64>>(values: I) -> f64 {
    values.into_iter().map(|z| z.norm_sqr()).sum()
}
