//! Compressed-sensing estimation of cascaded channels.
//!
//! Cascaded channels are sparse in the angular domain: `h = D^H h_a` with
//! `D` the unitary angular transform and `h_a` mostly zero. Training slots
//! apply random sign codewords `theta_p in {-1, +1}^N` to the surface, so
//! after direct-path removal each slot measures
//!
//! ```text
//! y_p = theta_p^T h + n_p = (M h_a)_p,    M = Theta^T D^H
//! ```
//!
//! and recovery is a sparse linear inverse problem solved here with
//! generalized approximate message passing under a Bernoulli-Gaussian
//! prior. Prior sparsity, prior variance, and the noise level are all
//! learned online with expectation-maximization updates, so callers only
//! provide a rough initial noise guess.

use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64;
use rand_core::RngCore;

use crate::channel::uniform_f64;
use crate::geometry::{angular_transform, RisGeometry};
use crate::linalg::{self, CMat};
use crate::math;

/// Lower bound kept on learned noise and message variances.
const VARIANCE_FLOOR: f64 = 1e-12;
/// Relative residual treated as divergence when sustained.
const DIVERGENCE_FACTOR: f64 = 10.0;
/// Consecutive diverged iterations tolerated before giving up.
const DIVERGENCE_PATIENCE: usize = 10;

/// Training-phase description: random sign codewords, pilot symbols, and
/// the sensing operator they induce on angular coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SensingPlan {
    /// `N x P` sign matrix; column `p` is the surface codeword of slot `p`.
    pub theta: CMat,
    /// Unit-modulus pilot symbols, one per slot.
    pub pilots: Vec<Complex64>,
    /// `P x N` sensing matrix `theta^T D^H` acting on angular coefficients.
    pub m: CMat,
}

impl SensingPlan {
    pub fn num_slots(&self) -> usize {
        self.pilots.len()
    }

    pub fn n_elements(&self) -> usize {
        self.theta.rows()
    }

    /// Surface codeword applied during slot `p` (column `p` of the sign
    /// matrix).
    pub fn codeword(&self, p: usize) -> Vec<Complex64> {
        (0..self.theta.rows()).map(|i| self.theta.get(i, p)).collect()
    }
}

/// Draw a training plan of `num_slots` slots for the given surface: i.i.d.
/// uniform signs, all-ones pilots, and the induced sensing matrix.
///
/// # Panics
///
/// Panics if `num_slots` is zero.
pub fn generate_sensing_plan(
    geom: &RisGeometry,
    num_slots: usize,
    rng: &mut impl RngCore,
) -> SensingPlan {
    assert!(num_slots >= 1, "need at least one training slot");
    let transform = angular_transform(geom);
    let n = transform.dimension();
    let mut theta = CMat::zeros(n, num_slots);
    let mut m = CMat::zeros(num_slots, n);
    let mut column = alloc::vec![Complex64::ZERO; n];
    for p in 0..num_slots {
        for (i, slot) in column.iter_mut().enumerate() {
            let sign = if uniform_f64(rng) < 0.5 { -1.0 } else { 1.0 };
            *slot = Complex64::new(sign, 0.0);
            theta.set(i, p, *slot);
        }
        // Row p of the sensing matrix is theta_p^T D^H; for real codewords
        // that is the entrywise conjugate of D theta_p.
        let forward = transform.apply(&column);
        for (col, v) in forward.iter().enumerate() {
            m.set(p, col, v.conj());
        }
    }
    let pilots = alloc::vec![Complex64::ONE; num_slots];
    SensingPlan { theta, pilots, m }
}

/// Least-squares fit of the direct link from surface-off samples
/// `y_p = h_d s_p + n_p`: returns `(sum s_p^* y_p) / (sum |s_p|^2)`.
///
/// # Panics
///
/// Panics if the slices differ in length.
pub fn estimate_direct_ls(
    pilots: &[Complex64],
    y_off: &[Complex64],
) -> Result<Complex64, EstimationError> {
    assert_eq!(pilots.len(), y_off.len(), "pilot and sample counts differ");
    let energy = linalg::norm_sq(pilots);
    if energy <= 0.0 {
        return Err(EstimationError::ZeroPilots);
    }
    let acc: Complex64 = pilots.iter().zip(y_off).map(|(s, y)| s.conj() * y).sum();
    Ok(acc / energy)
}

/// Subtract the direct-link contribution from training slots:
/// `y'_p = y_p - h_d * s_p`.
///
/// # Panics
///
/// Panics if the slices differ in length.
pub fn remove_direct(y: &[Complex64], h_d: Complex64, pilots: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(y.len(), pilots.len(), "pilot and sample counts differ");
    y.iter().zip(pilots).map(|(yp, s)| yp - h_d * s).collect()
}

/// Tuning knobs for the message-passing solver. The initial noise guess is
/// a separate argument of [`em_gamp_recover`] because it normally comes
/// from a measured noise floor rather than a constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GampOptions {
    pub max_iter: usize,
    /// Stop when the relative change of the estimate drops below this.
    pub tol: f64,
    /// Weight on the newly computed messages, in `(0, 1]`; `1` disables
    /// damping.
    pub damping: f64,
    /// Initial guess for the active-coefficient fraction.
    pub init_sparsity: f64,
}

impl Default for GampOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-6,
            damping: 0.7,
            init_sparsity: 0.1,
        }
    }
}

impl GampOptions {
    fn validate(&self) -> Result<(), EstimationError> {
        let ok = self.max_iter >= 1
            && self.tol > 0.0
            && self.tol.is_finite()
            && self.damping > 0.0
            && self.damping <= 1.0
            && self.init_sparsity > 0.0
            && self.init_sparsity < 1.0;
        if ok {
            Ok(())
        } else {
            Err(EstimationError::InvalidConfig)
        }
    }
}

/// Estimation failures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimationError {
    /// Solver options or the initial noise guess are out of range.
    InvalidConfig,
    /// The residual grew without bound or stopped being finite.
    Diverged,
    /// Pilot symbols carry no energy, so no least-squares fit exists.
    ZeroPilots,
    /// A reference vector has zero norm, so no relative error exists.
    ZeroTruth,
}

impl fmt::Display for EstimationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidConfig => write!(f, "solver configuration out of range"),
            Self::Diverged => write!(f, "message passing diverged"),
            Self::ZeroPilots => write!(f, "pilot symbols carry no energy"),
            Self::ZeroTruth => write!(f, "reference vector has zero norm"),
        }
    }
}

impl core::error::Error for EstimationError {}

/// Posterior summary of one recovered angular channel.
#[derive(Clone, Debug, PartialEq)]
pub struct AngularChannelEstimate {
    /// Posterior-mean estimate of the angular coefficient vector.
    pub h_a: Vec<Complex64>,
    /// Per-entry posterior variances, same length as `h_a`.
    pub variances: Vec<f64>,
    /// Learned active-coefficient fraction, in `(0, 1)`.
    pub sparsity_rate: f64,
    /// Learned variance of active coefficients.
    pub active_variance: f64,
    /// Learned measurement noise power.
    pub noise_variance: f64,
    /// Iterations actually run.
    pub iterations: usize,
    /// Final data misfit `|y - M h_a|_2`.
    pub residual: f64,
}

/// Sparse recovery of `h_a` from `y = M h_a + n` by sum-product message
/// passing with scalar variances, under an i.i.d. Bernoulli-Gaussian
/// prior whose parameters are re-fit each iteration starting from
/// `init_noise` for the noise power.
///
/// # Panics
///
/// Panics if `y.len() != m.rows()`.
pub fn em_gamp_recover(
    m: &CMat,
    y: &[Complex64],
    init_noise: f64,
    opts: &GampOptions,
) -> Result<AngularChannelEstimate, EstimationError> {
    opts.validate()?;
    if !(init_noise > 0.0 && init_noise.is_finite()) {
        return Err(EstimationError::InvalidConfig);
    }
    assert_eq!(y.len(), m.rows(), "measurement count differs from matrix rows");
    let p = m.rows();
    let n = m.cols();
    let beta = opts.damping;
    let frob_sq = m.frob_norm_sq().max(VARIANCE_FLOOR);
    let y_norm = math::sqrt(linalg::norm_sq(y));

    // Prior and noise initialization.
    let mut rho = opts.init_sparsity;
    let mut signal_var = (linalg::norm_sq(y) / (p as f64 * rho)).max(VARIANCE_FLOOR);
    let mut noise_var = init_noise;

    let mut x = alloc::vec![Complex64::ZERO; n];
    let mut variances = alloc::vec![0.0f64; n];
    let mut tau_x = rho * signal_var;
    let mut s = alloc::vec![Complex64::ZERO; p];

    let mut pi = alloc::vec![0.0f64; n];
    let mut gamma = alloc::vec![Complex64::ZERO; n];

    let mut iterations = 0;
    let mut residual = y_norm;
    let mut diverged_streak = 0;

    for iter in 1..=opts.max_iter {
        iterations = iter;

        // Output side: pull the current estimate through the operator and
        // denoise against the observed slots.
        let tau_p = ((frob_sq / p as f64) * tau_x).max(VARIANCE_FLOOR);
        let mx = m.mul_vec(&x);
        let mut z = alloc::vec![Complex64::ZERO; p];
        for i in 0..p {
            let p_hat = mx[i] - s[i] * tau_p;
            let z_hat = (y[i] * tau_p + p_hat * noise_var) / (tau_p + noise_var);
            z[i] = z_hat;
            let s_new = (z_hat - p_hat) / tau_p;
            s[i] = s_new * beta + s[i] * (1.0 - beta);
        }
        let tau_z = tau_p * noise_var / (tau_p + noise_var);
        let tau_s = ((tau_p - tau_z) / (tau_p * tau_p)).max(VARIANCE_FLOOR);

        // Input side: form pseudo-observations of each coefficient and
        // apply the sparse posterior-mean denoiser.
        let tau_r = (n as f64 / (frob_sq * tau_s)).max(VARIANCE_FLOOR);
        let corr = m.adjoint_mul_vec(&s);
        let nu = signal_var * tau_r / (signal_var + tau_r);
        let shrink = signal_var / (signal_var + tau_r);
        let log_prior = math::ln((1.0 - rho) / rho) + math::ln((tau_r + signal_var) / tau_r);
        let curvature = 1.0 / tau_r - 1.0 / (tau_r + signal_var);

        let mut var_sum = 0.0;
        let mut diff_sq = 0.0;
        let mut x_norm_sq = 0.0;
        for j in 0..n {
            let r = x[j] + corr[j] * tau_r;
            let ell = (log_prior - r.norm_sqr() * curvature).clamp(-500.0, 500.0);
            let prob = 1.0 / (1.0 + math::exp(ell));
            let g = r * shrink;
            pi[j] = prob;
            gamma[j] = g;
            let mean = g * prob;
            let var = (prob * (nu + g.norm_sqr()) - mean.norm_sqr()).max(0.0);
            variances[j] = var;
            var_sum += var;
            let x_new = mean * beta + x[j] * (1.0 - beta);
            diff_sq += (x_new - x[j]).norm_sqr();
            x[j] = x_new;
            x_norm_sq += x_new.norm_sqr();
        }
        tau_x = ((var_sum / n as f64) * beta + tau_x * (1.0 - beta)).max(VARIANCE_FLOOR);

        // Expectation-maximization refits of the prior and noise level.
        let pi_sum: f64 = pi.iter().sum();
        rho = (pi_sum / n as f64).clamp(1e-6, 1.0 - 1e-6);
        if pi_sum > 1e-12 {
            let second_moment: f64 = (0..n).map(|j| pi[j] * (nu + gamma[j].norm_sqr())).sum();
            signal_var = (second_moment / pi_sum).max(VARIANCE_FLOOR);
        }
        let fit: f64 = (0..p).map(|i| (y[i] - z[i]).norm_sqr()).sum();
        noise_var = (fit / p as f64 + tau_z).max(VARIANCE_FLOOR);

        // Track the data residual for divergence detection.
        let rx = m.mul_vec(&x);
        residual = math::sqrt((0..p).map(|i| (y[i] - rx[i]).norm_sqr()).sum::<f64>());
        let rel_residual = residual / y_norm.max(1e-300);
        if !rel_residual.is_finite() || !tau_x.is_finite() {
            return Err(EstimationError::Diverged);
        }
        if rel_residual > DIVERGENCE_FACTOR {
            diverged_streak += 1;
            if diverged_streak >= DIVERGENCE_PATIENCE {
                return Err(EstimationError::Diverged);
            }
        } else {
            diverged_streak = 0;
        }

        let change = math::sqrt(diff_sq) / math::sqrt(x_norm_sq).max(1e-30);
        if change < opts.tol {
            break;
        }
    }

    Ok(AngularChannelEstimate {
        h_a: x,
        variances,
        sparsity_rate: rho,
        active_variance: signal_var,
        noise_variance: noise_var,
        iterations,
        residual,
    })
}

/// Map angular coefficients back to the element domain: `h = D^H h_a`.
///
/// # Panics
///
/// Panics if the vector length differs from the geometry's element count.
pub fn to_element_domain(h_a: &[Complex64], geom: &RisGeometry) -> Vec<Complex64> {
    angular_transform(geom).apply_adjoint(h_a)
}

/// Normalized mean squared error over users:
/// `(1/K) sum_k |h_k - est_k|^2 / |h_k|^2`.
///
/// # Panics
///
/// Panics if the lists or any paired vectors differ in length.
pub fn nmse(truth: &[Vec<Complex64>], estimates: &[Vec<Complex64>]) -> Result<f64, EstimationError> {
    assert_eq!(truth.len(), estimates.len(), "user counts differ");
    assert!(!truth.is_empty(), "need at least one user");
    let mut acc = 0.0;
    for (h, est) in truth.iter().zip(estimates) {
        assert_eq!(h.len(), est.len(), "vector lengths differ");
        let denom = linalg::norm_sq(h);
        if denom <= 0.0 {
            return Err(EstimationError::ZeroTruth);
        }
        let err: f64 = h.iter().zip(est).map(|(a, b)| (a - b).norm_sqr()).sum();
        acc += err / denom;
    }
    Ok(acc / truth.len() as f64)
}
