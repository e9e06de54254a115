//! Reproducible random inputs.
//!
//! Every coefficient is drawn from its own generator, seeded from the run
//! seed, a stream label and the multi-index. Enlarging the window therefore
//! extends the same vector instead of redrawing it, which is what the
//! window-doubling stability checks compare.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::forms::{tuples, LeafwiseForm};
use crate::repn::{basis_norms_sq, IndexWindow, C64};
use crate::tensor::{for_each_index, kernel_project, MultiParam, TensorCoeffs};

/// SplitMix64 finaliser, used to fold indices into a seed.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn index_seed(seed: u64, stream: u64, k: &[i64]) -> u64 {
    k.iter().fold(mix(seed ^ mix(stream)), |acc, &ki| mix(acc ^ ki as u64))
}

/// Derives a stream label from a parent label and a counter.
pub fn substream(stream: u64, i: u64) -> u64 {
    mix(stream.wrapping_mul(31).wrapping_add(i))
}

/// `z(k)·(1 + Σμ + 2|k|²)^{-p} / ∏_j ‖u(k_j)‖` with `z(k)` standard complex
/// Gaussian, i.e. decaying Gaussian coefficients in an orthonormal frame.
pub fn random_tensor(params: &MultiParam, windows: &[IndexWindow], seed: u64, stream: u64, decay_p: f64) -> Result<TensorCoeffs> {
    let norms: Vec<Vec<f64>> = params.factors().iter().zip(windows).map(|(p, w)| basis_norms_sq(p, *w)).collect();
    let base = 1.0 + params.mu_sum();
    let mut data = Vec::with_capacity(windows.iter().map(IndexWindow::len).product());
    for_each_index(windows, |_, k| {
        let mut rng = ChaCha8Rng::seed_from_u64(index_seed(seed, stream, k));
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        let mut q = base;
        let mut nsq = 1.0;
        for (a, (&ka, w)) in k.iter().zip(windows).enumerate() {
            q += 2.0 * (ka as f64) * (ka as f64);
            nsq *= norms[a][w.offset(ka)];
        }
        let scale = std::f64::consts::FRAC_1_SQRT_2 * q.powf(-decay_p) / nsq.sqrt();
        data.push(C64::new(re, im) * scale);
    });
    TensorCoeffs::new(params.clone(), windows.to_vec(), data)
}

/// A random element of the joint kernel of the product distributions.
pub fn random_kernel_tensor(params: &MultiParam, k_trunc: usize, seed: u64, stream: u64, decay_p: f64) -> Result<TensorCoeffs> {
    kernel_project(&random_tensor(params, &params.default_windows(k_trunc), seed, stream, decay_p)?)
}

/// A random form of the given degree, one substream per component.
pub fn random_form(params: &MultiParam, degree: usize, k_trunc: usize, seed: u64, stream: u64, decay_p: f64) -> Result<LeafwiseForm> {
    let w = params.default_windows(k_trunc);
    let comps = tuples(params.dim(), degree)
        .into_iter()
        .enumerate()
        .map(|(i, t)| Ok((t, random_tensor(params, &w, seed, substream(stream, i as u64), decay_p)?)))
        .collect::<Result<_>>()?;
    LeafwiseForm::new(degree, params.clone(), comps)
}
