//! Discrete-phase multi-user beamforming.
//!
//! Given per-user direct paths `h_d[k]`, cascaded channels `h[k]`, and noise
//! power `sigma2`, the beamformer picks one phase per surface element from
//! a quantized alphabet to maximize the sum rate
//!
//! ```text
//! f1(theta) = sum_k log2(1 + |h_d[k] + theta^T h[k]|^2 / sigma2)
//! ```
//!
//! The search alternates two closed-form steps. Rate weights `alpha` and
//! ratio auxiliaries `epsilon` turn `f1` into a concave quadratic
//! surrogate `f2b` that is tight at the current codeword; the surrogate is
//! then maximized through a rank-`K` eigenbasis and snapped back to the
//! alphabet. A candidate is kept only if it strictly improves the
//! surrogate, which guarantees the accepted sum rates never decrease.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64;
use rand_core::RngCore;

use crate::channel::uniform_f64;
use crate::geometry::PhaseAlphabet;
use crate::linalg::{self, hermitian_eigen, orthonormal_complement, CMat};
use crate::math;

/// Default iteration cap per start.
pub const DEFAULT_T_MAX: usize = 50;
/// Default relative eigenvalue cutoff for the numerical rank of the
/// surrogate's quadratic part.
pub const DEFAULT_EIG_ZERO_TOL: f64 = 1e-10;
/// Relative threshold below which a component of the linear term is
/// treated as zero.
const NULL_TOL: f64 = 1e-8;
/// Tolerance for checking that a starting codeword lies in the alphabet.
const ALPHABET_TOL: f64 = 1e-9;
/// Search-space cap for the exhaustive reference: `N * tau` bits.
const ORACLE_MAX_BITS: u64 = 20;

/// Beamformer failures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BeamError {
    NoUsers,
    EmptyChannel,
    /// Vector lengths disagree.
    DimensionMismatch,
    /// Noise power must be positive and finite.
    InvalidNoise,
    /// Restart count or eigenvalue threshold is out of range.
    InvalidConfig,
    /// A starting codeword entry is not an alphabet value.
    NotInAlphabet,
    /// The exhaustive search space exceeds the hard cap.
    TooLarge,
    /// Matched-filter phases are undefined for an all-zero channel.
    ZeroChannel,
}

impl fmt::Display for BeamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoUsers => write!(f, "at least one user is required"),
            Self::EmptyChannel => write!(f, "channels need at least one element"),
            Self::DimensionMismatch => write!(f, "vector lengths disagree"),
            Self::InvalidNoise => write!(f, "noise power must be positive and finite"),
            Self::InvalidConfig => write!(f, "restart count and eigenvalue threshold must be positive"),
            Self::NotInAlphabet => write!(f, "starting codeword entry is not an alphabet value"),
            Self::TooLarge => write!(f, "exhaustive search space exceeds the cap"),
            Self::ZeroChannel => write!(f, "matched filter undefined for an all-zero channel"),
        }
    }
}

impl core::error::Error for BeamError {}

/// A multi-user beamforming instance: channels, noise power, the phase
/// alphabet, and solver knobs.
#[derive(Clone, Debug)]
pub struct BeamformingProblem {
    /// Direct BS-user path per user.
    pub h_d: Vec<Complex64>,
    /// Cascaded channel per user, each of length `N`.
    pub h: Vec<Vec<Complex64>>,
    /// Receiver noise power in watts.
    pub sigma2: f64,
    /// Discrete phase alphabet for the surface elements.
    pub alphabet: PhaseAlphabet,
    /// Surrogate rounds per start; zero returns the start unchanged.
    pub t_max: usize,
    /// Relative eigenvalue threshold below which a quadratic direction is
    /// treated as null.
    pub eig_zero_tol: f64,
    /// Independent starts; the first uses the caller's codeword, the rest
    /// draw random codewords. The best final sum rate wins.
    pub multi_start: usize,
}

impl BeamformingProblem {
    /// Bundle an instance with default solver knobs.
    pub fn new(
        h_d: Vec<Complex64>,
        h: Vec<Vec<Complex64>>,
        sigma2: f64,
        alphabet: PhaseAlphabet,
    ) -> Result<Self, BeamError> {
        let problem = Self {
            h_d,
            h,
            sigma2,
            alphabet,
            t_max: DEFAULT_T_MAX,
            eig_zero_tol: DEFAULT_EIG_ZERO_TOL,
            multi_start: 1,
        };
        problem.validate()?;
        Ok(problem)
    }

    /// User count `K`.
    pub fn n_users(&self) -> usize {
        self.h.len()
    }

    /// Element count `N`.
    pub fn n_elements(&self) -> usize {
        self.h.first().map_or(0, Vec::len)
    }

    /// Check the structural invariants.
    pub fn validate(&self) -> Result<(), BeamError> {
        if self.h.is_empty() {
            return Err(BeamError::NoUsers);
        }
        if self.h_d.len() != self.h.len() {
            return Err(BeamError::DimensionMismatch);
        }
        let n = self.h[0].len();
        if n == 0 {
            return Err(BeamError::EmptyChannel);
        }
        if self.h.iter().any(|hk| hk.len() != n) {
            return Err(BeamError::DimensionMismatch);
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(BeamError::InvalidNoise);
        }
        if self.multi_start == 0 || !(self.eig_zero_tol > 0.0 && self.eig_zero_tol.is_finite()) {
            return Err(BeamError::InvalidConfig);
        }
        Ok(())
    }
}

/// Concave quadratic surrogate in factored form:
/// `f2b(theta) = -sum_k |theta^T factor_k|^2 + 2 Re(theta^T v) + constant`.
///
/// The full quadratic matrix is never formed; its rank is at most the
/// number of factor columns.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm {
    /// One scaled channel column `|epsilon_k| h_k` per user.
    pub factor: Vec<Vec<Complex64>>,
    /// Linear coefficient vector.
    pub v: Vec<Complex64>,
    /// Codeword-independent offset.
    pub constant: f64,
}

/// Solver trace: the best and most recent iterates with their auxiliaries
/// and objective histories.
#[derive(Clone, Debug, PartialEq)]
pub struct QtlmState {
    /// Best accepted codeword; every entry is an alphabet value.
    pub theta_best: Vec<Complex64>,
    /// Most recent relaxed (pre-projection) solution of the surrogate.
    /// Before any round has run this is the starting codeword.
    pub theta_current: Vec<Complex64>,
    /// Rate weights from the last round.
    pub alpha: Vec<f64>,
    /// Ratio auxiliaries from the last round.
    pub epsilon: Vec<Complex64>,
    /// Sum rate of each accepted codeword, starting with the initial one.
    /// Non-decreasing by construction.
    pub objective_history: Vec<f64>,
    /// Surrogate value of each candidate examined, in round order. The
    /// last entry belongs to the rejected candidate when the run stopped
    /// early.
    pub f2b_history: Vec<f64>,
}

/// Per-user receive SNRs `|h_d[k] + theta^T h[k]|^2 / sigma2`.
///
/// # Panics
///
/// Panics if `theta` does not match the channel length.
pub fn snr_per_user(theta: &[Complex64], problem: &BeamformingProblem) -> Vec<f64> {
    problem
        .h_d
        .iter()
        .zip(&problem.h)
        .map(|(&d, hk)| (d + linalg::dot(theta, hk)).norm_sqr() / problem.sigma2)
        .collect()
}

/// Optimal rate weights for fixed SNRs: the identity map `alpha = gamma`.
pub fn update_alpha(gamma: &[f64]) -> Vec<f64> {
    gamma.to_vec()
}

/// Optimal ratio auxiliaries for fixed `theta` and `alpha`:
/// `epsilon_k = sqrt(1 + alpha_k) b_k / (sigma2 + |b_k|^2)` with
/// `b_k = h_d[k] + theta^T h[k]`.
pub fn update_epsilon(
    theta: &[Complex64],
    alpha: &[f64],
    problem: &BeamformingProblem,
) -> Vec<Complex64> {
    problem
        .h_d
        .iter()
        .zip(&problem.h)
        .zip(alpha)
        .map(|((&d, hk), &a)| {
            let b = d + linalg::dot(theta, hk);
            b * (math::sqrt(1.0 + a) / (problem.sigma2 + b.norm_sqr()))
        })
        .collect()
}

/// Expand the surrogate at fixed auxiliaries into factored quadratic form.
///
/// Expanding `|b_k|^2 = |h_d[k] + theta^T h[k]|^2` splits each user's term
/// into a rank-one quadratic in `theta` with column `|epsilon_k| h_k`, a
/// linear part with coefficient
/// `sqrt(1 + alpha_k) conj(epsilon_k) - |epsilon_k|^2 conj(h_d[k])`, and a
/// codeword-independent constant.
pub fn assemble_quadratic(
    alpha: &[f64],
    epsilon: &[Complex64],
    problem: &BeamformingProblem,
) -> QuadraticForm {
    let k = problem.n_users();
    assert!(alpha.len() == k && epsilon.len() == k, "auxiliary lengths disagree");
    let n = problem.n_elements();
    let mut factor = Vec::with_capacity(k);
    let mut v = vec![Complex64::ZERO; n];
    let mut constant = 0.0;
    for i in 0..k {
        let e = epsilon[i];
        let weight = math::sqrt(1.0 + alpha[i]);
        factor.push(problem.h[i].iter().map(|&x| x * e.norm()).collect());
        let coeff = e.conj() * weight - problem.h_d[i].conj() * e.norm_sqr();
        for (l, &x) in v.iter_mut().zip(&problem.h[i]) {
            *l += x * coeff;
        }
        constant += 2.0 * weight * (e.conj() * problem.h_d[i]).re
            - e.norm_sqr() * (problem.sigma2 + problem.h_d[i].norm_sqr());
    }
    QuadraticForm {
        factor,
        v,
        constant,
    }
}

/// Sum rate `sum_k log2(1 + gamma_k)` in bits per channel use.
pub fn objective_f1(theta: &[Complex64], problem: &BeamformingProblem) -> f64 {
    snr_per_user(theta, problem)
        .iter()
        .map(|&g| math::log2(1.0 + g))
        .sum()
}

/// Rate-weight relaxation of the sum rate:
/// `sum_k log2(1 + alpha_k) + (-alpha_k + (1 + alpha_k) gamma_k / (1 + gamma_k)) / ln 2`.
///
/// For every nonnegative `alpha` this lower-bounds the sum rate, with
/// equality at `alpha = gamma(theta)`.
pub fn objective_f1a(theta: &[Complex64], alpha: &[f64], problem: &BeamformingProblem) -> f64 {
    let ln2 = core::f64::consts::LN_2;
    snr_per_user(theta, problem)
        .iter()
        .zip(alpha)
        .map(|(&g, &a)| math::log2(1.0 + a) + (-a + (1.0 + a) * g / (1.0 + g)) / ln2)
        .sum()
}

/// Ratio-auxiliary surrogate in its defining per-user form: for each user,
/// `2 sqrt(1 + alpha_k) Re(conj(epsilon_k) b_k) - |epsilon_k|^2 (sigma2 + |b_k|^2)`.
///
/// Maximizing over `epsilon` recovers the ratio term of [`objective_f1a`]
/// scaled out of the logarithm; at fixed `epsilon` the expression is the
/// unfactored form of [`objective_f2b`].
pub fn objective_f2a(
    theta: &[Complex64],
    alpha: &[f64],
    epsilon: &[Complex64],
    problem: &BeamformingProblem,
) -> f64 {
    let mut acc = 0.0;
    for i in 0..problem.n_users() {
        let b = problem.h_d[i] + linalg::dot(theta, &problem.h[i]);
        acc += 2.0 * math::sqrt(1.0 + alpha[i]) * (epsilon[i].conj() * b).re
            - epsilon[i].norm_sqr() * (problem.sigma2 + b.norm_sqr());
    }
    acc
}

/// Evaluate the factored quadratic surrogate at a codeword in `O(N K)`.
pub fn objective_f2b(theta: &[Complex64], qf: &QuadraticForm) -> f64 {
    let quad: f64 = qf
        .factor
        .iter()
        .map(|col| linalg::dot(theta, col).norm_sqr())
        .sum();
    -quad + 2.0 * linalg::dot(theta, &qf.v).re + qf.constant
}

/// Maximize the surrogate quadratic over the unit polydisc
/// `|theta_n| <= 1`, exploiting that its rank is at most the number of
/// factor columns.
///
/// The substitution `phi = conj(theta)` turns the surrogate into a
/// Hermitian quadratic `-phi^H U phi + 2 Re(phi^H v)` with
/// `U = sum_k a_k a_k^H`. The factor's Gram eigenbasis gives an
/// orthonormal basis of `range(U)` where the quadratic separates: each
/// range coordinate takes its unconstrained stationary value
/// `omega_i = b_i / lambda_i` with `b_i = q_i^H v`. Directions outside the
/// range cost nothing quadratically, so when `v` has meaningful energy
/// there an orthonormal completion is materialized and coordinates with
/// signal take unit magnitude at the matching phase; coordinates where the
/// objective is flat are left at zero, which is equally optimal and keeps
/// the result independent of the basis completion. The assembled vector is
/// conjugated back and clamped entrywise into the polydisc.
///
/// The entrywise clamp, rather than a per-eigencoordinate cap, preserves
/// each element's phase at full amplitude: in the low-SNR regime the
/// stationary amplitudes exceed one everywhere and the clamped result is
/// the per-element phase-aligned vector, which a cap inside the eigenbasis
/// could never produce. Feasibility of the final iterate is enforced by
/// the alphabet projection and the acceptance test in [`qtlm`].
///
/// `eig_zero_tol` is the relative eigenvalue threshold, normally
/// [`BeamformingProblem::eig_zero_tol`].
///
/// # Panics
///
/// Panics if factor column lengths disagree with `v`.
pub fn solve_lowrank(qf: &QuadraticForm, eig_zero_tol: f64) -> Vec<Complex64> {
    let n = qf.v.len();
    for c in &qf.factor {
        assert_eq!(c.len(), n, "factor column length differs from linear term");
    }
    let k = qf.factor.len();

    // Eigendecomposition of the small Gram matrix G = A^H A, which shares
    // its nonzero eigenvalues with U = A A^H.
    let mut lam: Vec<f64> = Vec::new();
    let mut q: Vec<Vec<Complex64>> = Vec::new();
    if k > 0 {
        let gram = CMat::from_fn(k, k, |i, j| linalg::dot_conj(&qf.factor[i], &qf.factor[j]));
        let (evals, evecs) = hermitian_eigen(&gram);
        let lam_max = evals.first().copied().unwrap_or(0.0);
        if lam_max > 1e-300 {
            for i in 0..k {
                if evals[i] > eig_zero_tol * lam_max {
                    // Lift the Gram eigenvector: q_i = A w_i / sqrt(lambda_i).
                    let mut qi = vec![Complex64::ZERO; n];
                    for c in 0..k {
                        let w = evecs.get(c, i);
                        for (dst, &src) in qi.iter_mut().zip(&qf.factor[c]) {
                            *dst += src * w;
                        }
                    }
                    let scale = 1.0 / math::sqrt(evals[i]);
                    for x in &mut qi {
                        *x *= scale;
                    }
                    lam.push(evals[i]);
                    q.push(qi);
                }
            }
        }
    }

    let v_norm = math::sqrt(linalg::norm_sq(&qf.v));
    let mut phi = vec![Complex64::ZERO; n];
    let mut v_perp: Vec<Complex64> = qf.v.clone();
    for (qi, &li) in q.iter().zip(&lam) {
        let b = linalg::dot_conj(qi, &qf.v);
        for (p, &qv) in v_perp.iter_mut().zip(qi) {
            *p -= qv * b;
        }
        if b.norm() > 0.0 {
            let omega = b / li;
            for (p, &qv) in phi.iter_mut().zip(qi) {
                *p += qv * omega;
            }
        }
    }

    let perp_norm = math::sqrt(linalg::norm_sq(&v_perp));
    if perp_norm > NULL_TOL * v_norm.max(1e-300) {
        for u in orthonormal_complement(&q, n) {
            let b = linalg::dot_conj(&u, &qf.v);
            if b.norm() > NULL_TOL * v_norm {
                let omega = Complex64::from_polar(1.0, b.arg());
                for (p, &uv) in phi.iter_mut().zip(&u) {
                    *p += uv * omega;
                }
            }
        }
    }

    phi.iter()
        .map(|p| {
            let t = p.conj();
            t / t.norm().max(1.0)
        })
        .collect()
}

/// Snap each entry to the nearest alphabet value; exact ties keep the
/// lowest alphabet index, and zero entries map to the first value.
pub fn project_alphabet(theta_c: &[Complex64], alphabet: &PhaseAlphabet) -> Vec<Complex64> {
    theta_c
        .iter()
        .map(|&x| alphabet.value(alphabet.nearest_index(x)))
        .collect()
}

/// Alphabet index of each codeword entry, for serialization.
pub fn codeword_indices(theta: &[Complex64], alphabet: &PhaseAlphabet) -> Vec<usize> {
    theta.iter().map(|&x| alphabet.nearest_index(x)).collect()
}

/// Materialize alphabet indices into a codeword.
///
/// # Panics
///
/// Panics if an index is out of range.
pub fn codeword_from_indices(indices: &[usize], alphabet: &PhaseAlphabet) -> Vec<Complex64> {
    indices.iter().map(|&i| alphabet.value(i)).collect()
}

/// Draw a uniformly random length-`n` codeword over the alphabet.
pub fn random_codeword(
    alphabet: &PhaseAlphabet,
    n: usize,
    rng: &mut impl RngCore,
) -> Vec<Complex64> {
    let len = alphabet.len();
    (0..n)
        .map(|_| alphabet.value(((uniform_f64(rng) * len as f64) as usize).min(len - 1)))
        .collect()
}

/// Quantized discrete-phase beamformer.
///
/// Starting from `theta0`, repeats: refresh the auxiliaries at the current
/// codeword, maximize the resulting surrogate over the polydisc, snap to
/// the alphabet, and keep the candidate only if it strictly improves the
/// surrogate. Because the surrogate is tight at the current codeword, each
/// accepted candidate strictly increases the sum rate. A run stops at the
/// first rejected candidate or after `t_max` rounds; `t_max = 0` returns
/// `theta0` unchanged.
///
/// When `multi_start > 1`, additional runs start from random codewords
/// drawn from `rng` and the state of the best run is returned.
pub fn qtlm(
    problem: &BeamformingProblem,
    theta0: &[Complex64],
    rng: &mut impl RngCore,
) -> Result<(Vec<Complex64>, QtlmState), BeamError> {
    problem.validate()?;
    let n = problem.n_elements();
    if theta0.len() != n {
        return Err(BeamError::DimensionMismatch);
    }
    for &t in theta0 {
        let nearest = problem.alphabet.value(problem.alphabet.nearest_index(t));
        if (t - nearest).norm() > ALPHABET_TOL {
            return Err(BeamError::NotInAlphabet);
        }
    }

    let mut best: Option<(f64, QtlmState)> = None;
    for start in 0..problem.multi_start {
        let init = if start == 0 {
            theta0.to_vec()
        } else {
            random_codeword(&problem.alphabet, n, rng)
        };
        let state = qtlm_single_start(problem, init);
        let rate = *state
            .objective_history
            .last()
            .expect("history holds the initial rate");
        if best.as_ref().map_or(true, |(b, _)| rate > *b) {
            best = Some((rate, state));
        }
    }
    let (_, state) = best.expect("multi_start is validated positive");
    Ok((state.theta_best.clone(), state))
}

fn qtlm_single_start(problem: &BeamformingProblem, theta0: Vec<Complex64>) -> QtlmState {
    let mut theta_star = theta0;
    let mut theta_current = theta_star.clone();
    let mut alpha = update_alpha(&snr_per_user(&theta_star, problem));
    let mut epsilon = update_epsilon(&theta_star, &alpha, problem);
    let mut objective_history = vec![objective_f1(&theta_star, problem)];
    let mut f2b_history = Vec::new();

    for _ in 0..problem.t_max {
        alpha = update_alpha(&snr_per_user(&theta_star, problem));
        epsilon = update_epsilon(&theta_star, &alpha, problem);
        let qf = assemble_quadratic(&alpha, &epsilon, problem);
        theta_current = solve_lowrank(&qf, problem.eig_zero_tol);
        let candidate = project_alphabet(&theta_current, &problem.alphabet);
        let candidate_value = objective_f2b(&candidate, &qf);
        f2b_history.push(candidate_value);
        if candidate_value > objective_f2b(&theta_star, &qf) {
            theta_star = candidate;
            objective_history.push(objective_f1(&theta_star, problem));
        } else {
            break;
        }
    }

    QtlmState {
        theta_best: theta_star,
        theta_current,
        alpha,
        epsilon,
        objective_history,
        f2b_history,
    }
}

/// Continuous matched-filter vector for a single user:
/// `theta = (h_d / |h_d|) * conj(h) / ||h||`, so every element's reflected
/// phase lines up with the direct path and
/// `theta^T h = (h_d / |h_d|) ||h||`. A zero direct path uses a unit
/// leading factor, since a global phase does not change the SNR.
pub fn single_user_mrt(h_d: Complex64, h_r: &[Complex64]) -> Result<Vec<Complex64>, BeamError> {
    if h_r.is_empty() {
        return Err(BeamError::EmptyChannel);
    }
    let norm = math::sqrt(linalg::norm_sq(h_r));
    if norm == 0.0 {
        return Err(BeamError::ZeroChannel);
    }
    let reference = if h_d == Complex64::ZERO {
        Complex64::ONE
    } else {
        h_d / h_d.norm()
    };
    Ok(h_r.iter().map(|&x| reference * x.conj() / norm).collect())
}

/// Exhaustive sum-rate maximization over every codeword, for small
/// instances only (`N * tau <= 20` bits). Candidates are scanned in
/// lexicographic index order and ties keep the earliest, so the result is
/// the lexicographically smallest maximizer.
pub fn exhaustive_oracle(problem: &BeamformingProblem) -> Result<(Vec<Complex64>, f64), BeamError> {
    problem.validate()?;
    let n = problem.n_elements();
    if n as u64 * problem.alphabet.tau() as u64 > ORACLE_MAX_BITS {
        return Err(BeamError::TooLarge);
    }

    let len = problem.alphabet.len();
    let total = len.pow(n as u32);
    let mut indices = vec![0usize; n];
    let mut best_indices = indices.clone();
    let mut best_rate = f64::NEG_INFINITY;
    for code in 0..total {
        let mut rem = code;
        // Most significant digit first gives lexicographic order.
        for i in (0..n).rev() {
            indices[i] = rem % len;
            rem /= len;
        }
        let theta = codeword_from_indices(&indices, &problem.alphabet);
        let rate = objective_f1(&theta, problem);
        if rate > best_rate {
            best_rate = rate;
            best_indices.copy_from_slice(&indices);
        }
    }
    Ok((
        codeword_from_indices(&best_indices, &problem.alphabet),
        best_rate,
    ))
}
