//! The experiment pipeline: draw a channel, measure with the surface off,
//! estimate the direct link and its noise floor, sense with random sign
//! codewords, recover cascaded channels, pick a beamforming codeword, and
//! score the result against ground truth.
//!
//! Every record is reproducible from the configuration and its derived
//! seed: random draws happen in a fixed documented order (scenario, then
//! surface-off frames user by user, then the sensing plan, then sensing
//! slots user by user, then beamformer starts), so sweeps may run on any
//! number of threads without changing results.

use anyhow::{bail, Context, Result};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use risbeam_core::beamforming::{qtlm, BeamformingProblem};
use risbeam_core::channel::{draw_scenario, received_signal};
use risbeam_core::estimation::{
    em_gamp_recover, estimate_direct_ls, generate_sensing_plan, nmse, remove_direct,
    to_element_domain, EstimationError,
};
use risbeam_core::geometry::phase_alphabet;
use risbeam_core::linalg;
use risbeam_core::metrics::{corrected_noise, power_gain_db, received_power, rxmer,
    spectral_efficiency, RxMer};
use risbeam_core::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use crate::config::ExperimentConfig;

/// Samples collected per user with the surface absorbing.
const OFF_FRAME_LEN: usize = 256;
/// Noise floor used when a corrected noise estimate is zero or when the
/// configured noise power vanishes, keeping SNRs and solver inputs finite.
const SIGMA_FLOOR: f64 = 1e-30;
/// Power floor for decibel ratios of physically zero powers.
const POWER_FLOOR: f64 = 1e-300;
/// Noise-guess floor handed to the sparse solver.
const INIT_NOISE_FLOOR: f64 = 1e-12;

/// Everything measured at one sweep point for one trial.
///
/// Serialized forms (CSV and JSON) exclude the wall clock so equal seeds
/// produce byte-identical output; equality ignores it for the same reason.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultRecord {
    /// Training slot count of this sweep point.
    pub pilot_count: usize,
    /// Transmit power level of this sweep point, dB.
    pub tx_power_db: f64,
    /// Trial index within the sweep point.
    pub trial: usize,
    /// Seed this record derives from.
    pub seed: u64,
    /// Per-user expected received power with the surface absorbing, watts.
    pub power_off_w: Vec<f64>,
    /// Per-user expected received power with the chosen codeword, watts.
    pub power_on_w: Vec<f64>,
    /// Per-user power gain on over off, dB.
    pub gain_db: Vec<f64>,
    /// Sum spectral efficiency with the surface absorbing, bits/s/Hz.
    pub se_off: f64,
    /// Sum spectral efficiency with the chosen codeword, bits/s/Hz.
    pub se_on: f64,
    /// Cascaded-channel estimation error over users with nonzero truth;
    /// absent when no user has a nonzero cascaded channel.
    pub nmse: Option<f64>,
    /// Sparse-solver iterations per user.
    pub gamp_iterations: Vec<usize>,
    /// Per-user flag: solver diverged and a zero channel was substituted.
    pub gamp_diverged: Vec<bool>,
    /// Pipeline wall clock, seconds. Not serialized, not compared.
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

impl PartialEq for ResultRecord {
    fn eq(&self, other: &Self) -> bool {
        self.pilot_count == other.pilot_count
            && self.tx_power_db == other.tx_power_db
            && self.trial == other.trial
            && self.seed == other.seed
            && self.power_off_w == other.power_off_w
            && self.power_on_w == other.power_on_w
            && self.gain_db == other.gain_db
            && self.se_off == other.se_off
            && self.se_on == other.se_on
            && self.nmse == other.nmse
            && self.gamp_iterations == other.gamp_iterations
            && self.gamp_diverged == other.gamp_diverged
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one record: a splitmix64 chain over the master seed and the
/// sweep coordinates, stable across runs and platforms.
pub fn derive_seed(master: u64, pilot_count: usize, tx_power_db: f64, trial: usize) -> u64 {
    let mut state = master;
    let mut out = splitmix64(&mut state);
    for coordinate in [pilot_count as u64, tx_power_db.to_bits(), trial as u64] {
        state ^= coordinate;
        out = splitmix64(&mut state);
    }
    out
}

/// Corrected noise estimate of one user from surface-off samples: the
/// error ratio against the fitted direct link turns raw received power
/// into a noise floor. A vanished direct link means the samples are pure
/// noise, so their power is the estimate; an error-free frame means no
/// measurable noise.
fn off_frame_noise(y_off: &[Complex64], h_d_fit: Complex64) -> f64 {
    let reference = vec![h_d_fit; y_off.len()];
    let p_r = received_power(y_off).expect("off frames are nonempty");
    match rxmer(y_off, &reference) {
        RxMer::Unbounded => 0.0,
        RxMer::Ratio(r) => corrected_noise(p_r, r).unwrap_or(p_r),
    }
}

fn gain_db_or_zero(p_on: f64, p_off: f64) -> f64 {
    if p_on == p_off {
        return 0.0;
    }
    power_gain_db(p_on.max(POWER_FLOOR), p_off.max(POWER_FLOOR))
        .expect("floored powers are positive")
}

/// Run the five pipeline stages at one sweep point with one seed.
///
/// The transmit power level scales measurement SNR: every pilot and
/// sensing sample is observed at noise `sigma^2 / 10^(tx_db/10)`.
/// Evaluation against ground truth uses the configured noise power.
/// Solver divergence is recorded per user (with a zero channel standing
/// in), never returned as an error.
pub fn run_pipeline(
    config: &ExperimentConfig,
    pilot_count: usize,
    tx_power_db: f64,
    trial: usize,
    seed: u64,
) -> Result<ResultRecord> {
    let started = Instant::now();
    let scenario = &config.scenario;
    let geom = &scenario.geometry;
    let n = geom.n_elements();
    let k_users = scenario.users.len();
    let sigma2 = scenario.noise_power;
    let sigma2_meas = sigma2 * 10f64.powf(-tx_power_db / 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Stage 1: draw the channel realization.
    let real = draw_scenario(scenario, &mut rng)
        .map_err(|e| anyhow::anyhow!("drawing scenario: {e}"))?;

    // Stage 2: surface-off frames, direct-link fits, noise correction.
    let theta_off = vec![Complex64::ZERO; n];
    let pilot = Complex64::ONE;
    let off_pilots = vec![pilot; OFF_FRAME_LEN];
    let mut h_d_fit = Vec::with_capacity(k_users);
    let mut noise_fit = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let y_off: Vec<Complex64> = (0..OFF_FRAME_LEN)
            .map(|_| {
                received_signal(&theta_off, real.h_d[k], &real.h[k], pilot, sigma2_meas, &mut rng)
            })
            .collect();
        let fit = estimate_direct_ls(&off_pilots, &y_off)
            .map_err(|e| anyhow::anyhow!("direct fit: {e}"))?;
        h_d_fit.push(fit);
        noise_fit.push(off_frame_noise(&y_off, fit));
    }

    // Stage 3: sensing plan and per-user slot measurements.
    let plan = generate_sensing_plan(geom, pilot_count, &mut rng);
    let codewords: Vec<Vec<Complex64>> = (0..pilot_count).map(|p| plan.codeword(p)).collect();
    let mut slot_frames = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let y: Vec<Complex64> = codewords
            .iter()
            .map(|cw| received_signal(cw, real.h_d[k], &real.h[k], pilot, sigma2_meas, &mut rng))
            .collect();
        slot_frames.push(y);
    }

    // Stage 4: sparse recovery of each cascaded channel.
    let mut h_est = Vec::with_capacity(k_users);
    let mut gamp_iterations = Vec::with_capacity(k_users);
    let mut gamp_diverged = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let stripped = remove_direct(&slot_frames[k], h_d_fit[k], &plan.pilots);
        let init_noise = noise_fit[k].max(INIT_NOISE_FLOOR);
        match em_gamp_recover(&plan.m, &stripped, init_noise, &config.algorithm.gamp) {
            Ok(est) => {
                h_est.push(to_element_domain(&est.h_a, geom));
                gamp_iterations.push(est.iterations);
                gamp_diverged.push(false);
            }
            Err(EstimationError::Diverged) => {
                h_est.push(vec![Complex64::ZERO; n]);
                gamp_iterations.push(0);
                gamp_diverged.push(true);
            }
            Err(e) => bail!("sparse recovery: {e}"),
        }
    }

    let mut truth_nonzero = Vec::new();
    let mut est_nonzero = Vec::new();
    for k in 0..k_users {
        if linalg::norm_sq(&real.h[k]) > 0.0 {
            truth_nonzero.push(real.h[k].clone());
            est_nonzero.push(h_est[k].clone());
        }
    }
    let nmse_value = if truth_nonzero.is_empty() {
        None
    } else {
        Some(nmse(&truth_nonzero, &est_nonzero).expect("zero-norm users were filtered"))
    };

    // Stage 5: codeword selection on estimated state, scored on truth.
    let alphabet =
        phase_alphabet(geom.tau).map_err(|e| anyhow::anyhow!("phase alphabet: {e}"))?;
    let sigma2_bf = (noise_fit.iter().sum::<f64>() / k_users as f64).max(SIGMA_FLOOR);
    let problem = BeamformingProblem {
        h_d: h_d_fit.clone(),
        h: h_est,
        sigma2: sigma2_bf,
        alphabet: alphabet.clone(),
        t_max: config.algorithm.t_max,
        eig_zero_tol: config.algorithm.eig_zero_tol,
        multi_start: config.algorithm.multi_start,
    };
    let theta0 = vec![alphabet.value(0); n];
    let (theta, _state) =
        qtlm(&problem, &theta0, &mut rng).map_err(|e| anyhow::anyhow!("beamformer: {e}"))?;

    let sigma2_eval = sigma2.max(SIGMA_FLOOR);
    let mut power_off_w = Vec::with_capacity(k_users);
    let mut power_on_w = Vec::with_capacity(k_users);
    let mut gain_db = Vec::with_capacity(k_users);
    let mut snr_off = Vec::with_capacity(k_users);
    let mut snr_on = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let sig_off = real.h_d[k].norm_sqr();
        let response = real.h_d[k] + linalg::dot(&theta, &real.h[k]);
        let sig_on = response.norm_sqr();
        let p_off = sig_off + sigma2;
        let p_on = sig_on + sigma2;
        power_off_w.push(p_off);
        power_on_w.push(p_on);
        gain_db.push(gain_db_or_zero(p_on, p_off));
        snr_off.push(sig_off / sigma2_eval);
        snr_on.push(sig_on / sigma2_eval);
    }

    Ok(ResultRecord {
        pilot_count,
        tx_power_db,
        trial,
        seed,
        power_off_w,
        power_on_w,
        gain_db,
        se_off: spectral_efficiency(&snr_off),
        se_on: spectral_efficiency(&snr_on),
        nmse: nmse_value,
        gamp_iterations,
        gamp_diverged,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}

/// Run the full Cartesian sweep (pilot counts x power levels x trials) on
/// `threads` worker threads. Records come back in sweep order regardless
/// of scheduling because every record depends only on its own derived
/// seed.
pub fn run_sweep(config: &ExperimentConfig, threads: usize) -> Result<Vec<ResultRecord>> {
    config.validate()?;
    let mut jobs = Vec::new();
    for &pilot_count in &config.pilot_counts {
        for &tx_power_db in &config.tx_power_db {
            for trial in 0..config.trials {
                let seed = derive_seed(config.seed, pilot_count, tx_power_db, trial);
                jobs.push((pilot_count, tx_power_db, trial, seed));
            }
        }
    }
    let threads = threads.max(1).min(jobs.len());

    if threads <= 1 {
        return jobs
            .into_iter()
            .map(|(p, tx, trial, seed)| run_pipeline(config, p, tx, trial, seed))
            .collect();
    }

    let mut results: Vec<Option<Result<ResultRecord>>> = Vec::new();
    results.resize_with(jobs.len(), || None);
    std::thread::scope(|scope| {
        let jobs = &jobs;
        let mut workers = Vec::with_capacity(threads);
        for t in 0..threads {
            workers.push(scope.spawn(move || {
                jobs.iter()
                    .enumerate()
                    .skip(t)
                    .step_by(threads)
                    .map(|(i, &(p, tx, trial, seed))| {
                        (i, run_pipeline(config, p, tx, trial, seed))
                    })
                    .collect::<Vec<_>>()
            }));
        }
        for worker in workers {
            for (i, r) in worker.join().expect("sweep worker panicked") {
                results[i] = Some(r);
            }
        }
    });
    results
        .into_iter()
        .map(|slot| slot.expect("every job index was filled"))
        .collect()
}

/// Serialization format of result files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// CSV schema, one row per record. Per-user columns pack values with `;`.
pub const CSV_HEADER: &str = "pilot_count,tx_power_db,trial,seed,power_off_w,power_on_w,\
gain_db,se_off,se_on,nmse,gamp_iterations,gamp_diverged";

fn fmt_f64(x: f64) -> String {
    format!("{x:.11e}")
}

fn round12(x: f64) -> f64 {
    if x.is_finite() {
        fmt_f64(x).parse().expect("formatted float parses back")
    } else {
        x
    }
}

fn fmt_f64_list(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(";")
}

impl ResultRecord {
    /// Copy with every float rounded to 12 significant digits, the
    /// precision of the serialized forms.
    fn rounded(&self) -> Self {
        Self {
            tx_power_db: round12(self.tx_power_db),
            power_off_w: self.power_off_w.iter().map(|&x| round12(x)).collect(),
            power_on_w: self.power_on_w.iter().map(|&x| round12(x)).collect(),
            gain_db: self.gain_db.iter().map(|&x| round12(x)).collect(),
            se_off: round12(self.se_off),
            se_on: round12(self.se_on),
            nmse: self.nmse.map(round12),
            ..self.clone()
        }
    }

    fn csv_row(&self) -> String {
        let iterations = self
            .gamp_iterations
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(";");
        let diverged = self
            .gamp_diverged
            .iter()
            .map(|&d| if d { "1" } else { "0" })
            .collect::<Vec<_>>()
            .join(";");
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.pilot_count,
            fmt_f64(self.tx_power_db),
            self.trial,
            self.seed,
            fmt_f64_list(&self.power_off_w),
            fmt_f64_list(&self.power_on_w),
            fmt_f64_list(&self.gain_db),
            fmt_f64(self.se_off),
            fmt_f64(self.se_on),
            self.nmse.map_or_else(|| "NaN".to_string(), fmt_f64),
            iterations,
            diverged,
        )
    }
}

/// Render records to the requested format; numbers carry 12 significant
/// digits in both.
pub fn render_results(records: &[ResultRecord], format: OutputFormat) -> Result<String> {
    if records.is_empty() {
        bail!("no records to serialize");
    }
    match format {
        OutputFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for r in records {
                out.push_str(&r.csv_row());
                out.push('\n');
            }
            Ok(out)
        }
        OutputFormat::Json => {
            let rounded: Vec<ResultRecord> = records.iter().map(ResultRecord::rounded).collect();
            let mut out = serde_json::to_string_pretty(&rounded).context("encoding records")?;
            out.push('\n');
            Ok(out)
        }
    }
}

/// Write records to a file, creating parent directories as needed.
pub fn emit_results(records: &[ResultRecord], format: OutputFormat, path: &Path) -> Result<()> {
    let text = render_results(records, format)?;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    let mut file = std::fs::File::create(path)
        .with_context(|| format!("creating {}", path.display()))?;
    file.write_all(text.as_bytes())
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Parse records back from a JSON results file.
pub fn parse_json_results(text: &str) -> Result<Vec<ResultRecord>> {
    serde_json::from_str(text).context("decoding records")
}
