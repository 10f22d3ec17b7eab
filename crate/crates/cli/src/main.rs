use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use risbeam_cli::codeword::{load_codeword, save_indices};
use risbeam_cli::config::{load_config, ExperimentConfig};
use risbeam_cli::harness::{emit_results, run_sweep, OutputFormat};
use risbeam_core::beamforming::{
    codeword_indices, exhaustive_oracle, objective_f1, qtlm, snr_per_user, BeamformingProblem,
};
use risbeam_core::channel::draw_scenario;
use risbeam_core::geometry::phase_alphabet;
use risbeam_core::metrics::{
    dominant_lobes, half_power_beamwidth, linspace, radiation_pattern, spectral_efficiency,
    PatternSample,
};
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Simulation experiments for surface-aided multi-user links.
#[derive(Parser)]
#[command(name = "risbeam", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured sweep and write result records.
    Sweep {
        /// Experiment description (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Override the master seed from the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Result file; defaults to the config's `output`, then
        /// `results.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
        /// Worker threads; results are identical for any value.
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Compute the azimuth radiation pattern of a stored codeword.
    Pattern {
        /// Experiment description (TOML); supplies geometry and alphabet.
        #[arg(long)]
        config: PathBuf,
        /// Alphabet indices, one per line or a JSON array.
        #[arg(long)]
        codeword: PathBuf,
        /// Incident wave azimuth, degrees.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        incident_azimuth: f64,
        /// Incident wave elevation, degrees (90 = horizon).
        #[arg(long, default_value_t = 90.0, allow_negative_numbers = true)]
        incident_elevation: f64,
        #[arg(long, default_value_t = -90.0, allow_negative_numbers = true)]
        grid_start: f64,
        #[arg(long, default_value_t = 90.0, allow_negative_numbers = true)]
        grid_end: f64,
        #[arg(long, default_value_t = 721)]
        grid_points: usize,
        /// Pattern file; omitted means standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
    /// Compare the beamformer against exhaustive search on a small
    /// instance drawn from the configured scenario with true channel
    /// knowledge.
    Oracle {
        /// Experiment description (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Override the master seed from the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Save the beamformer codeword indices here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Sweep {
            config,
            seed,
            out,
            format,
            threads,
        } => sweep(&config, seed, out, format, threads),
        Command::Pattern {
            config,
            codeword,
            incident_azimuth,
            incident_elevation,
            grid_start,
            grid_end,
            grid_points,
            out,
            format,
        } => pattern(
            &config,
            &codeword,
            incident_azimuth,
            incident_elevation,
            (grid_start, grid_end, grid_points),
            out,
            format,
        ),
        Command::Oracle { config, seed, out } => oracle(&config, seed, out),
    }
}

fn load_with_seed(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut config = load_config(path)?;
    if let Some(seed) = seed {
        config.seed = seed;
        config.scenario.seed = seed;
    }
    Ok(config)
}

fn sweep(
    config_path: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: OutputFormat,
    threads: usize,
) -> Result<()> {
    let config = load_with_seed(config_path, seed)?;
    let out = out
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("results.csv"));
    let started = std::time::Instant::now();
    let records = run_sweep(&config, threads)?;
    emit_results(&records, format, &out)?;
    println!(
        "wrote {} records to {} in {:.2} s",
        records.len(),
        out.display(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

#[derive(Serialize)]
struct PatternRow {
    azimuth_deg: f64,
    gain_db: f64,
}

fn render_pattern(samples: &[PatternSample], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => {
            let mut out = String::from("azimuth_deg,gain_db\n");
            for s in samples {
                out.push_str(&format!("{:.11e},{:.11e}\n", s.azimuth_deg, s.gain_db));
            }
            Ok(out)
        }
        OutputFormat::Json => {
            let rows: Vec<PatternRow> = samples
                .iter()
                .map(|s| PatternRow {
                    azimuth_deg: s.azimuth_deg,
                    gain_db: s.gain_db,
                })
                .collect();
            let mut out = serde_json::to_string_pretty(&rows).context("encoding pattern")?;
            out.push('\n');
            Ok(out)
        }
    }
}

fn pattern(
    config_path: &Path,
    codeword_path: &Path,
    incident_azimuth: f64,
    incident_elevation: f64,
    (grid_start, grid_end, grid_points): (f64, f64, usize),
    out: Option<PathBuf>,
    format: OutputFormat,
) -> Result<()> {
    let config = load_config(config_path)?;
    let geom = &config.scenario.geometry;
    let alphabet =
        phase_alphabet(geom.tau).map_err(|e| anyhow::anyhow!("phase alphabet: {e}"))?;
    let codeword = load_codeword(codeword_path, &alphabet, geom.n_elements())?;
    if grid_points < 2 || !(grid_end > grid_start) {
        bail!("pattern grid needs at least two ordered points");
    }
    let grid = linspace(grid_start, grid_end, grid_points);
    let samples = radiation_pattern(
        geom,
        &codeword,
        incident_azimuth,
        incident_elevation,
        &grid,
    );
    let text = render_pattern(&samples, format)?;
    match out {
        Some(path) => {
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {} samples to {}", samples.len(), path.display());
        }
        None => print!("{text}"),
    }

    let lobes = dominant_lobes(&samples, -10.0);
    eprintln!("dominant lobes (>= -10 dB): {lobes:?} deg");
    if let Some(&strongest) = lobes.first() {
        match half_power_beamwidth(&samples, strongest) {
            Some(width) => eprintln!("half-power beamwidth at {strongest} deg: {width:.3} deg"),
            None => eprintln!("half-power beamwidth unresolved on this grid"),
        }
    }
    Ok(())
}

fn oracle(config_path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    let config = load_with_seed(config_path, seed)?;
    let scenario = &config.scenario;
    let geom = &scenario.geometry;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let real =
        draw_scenario(scenario, &mut rng).map_err(|e| anyhow::anyhow!("drawing scenario: {e}"))?;
    let alphabet =
        phase_alphabet(geom.tau).map_err(|e| anyhow::anyhow!("phase alphabet: {e}"))?;
    let sigma2 = scenario.noise_power.max(1e-30);
    let problem = BeamformingProblem {
        h_d: real.h_d.clone(),
        h: real.h.clone(),
        sigma2,
        alphabet: alphabet.clone(),
        t_max: config.algorithm.t_max,
        eig_zero_tol: config.algorithm.eig_zero_tol,
        multi_start: config.algorithm.multi_start,
    };
    let (best, best_rate) =
        exhaustive_oracle(&problem).map_err(|e| anyhow::anyhow!("exhaustive search: {e}"))?;
    let theta0 = vec![alphabet.value(0); geom.n_elements()];
    let (theta, _state) =
        qtlm(&problem, &theta0, &mut rng).map_err(|e| anyhow::anyhow!("beamformer: {e}"))?;
    let rate = objective_f1(&theta, &problem);
    let se = spectral_efficiency(&snr_per_user(&theta, &problem));
    println!("exhaustive optimum: {best_rate:.6} bits/s/Hz");
    println!(
        "beamformer result:  {rate:.6} bits/s/Hz ({:.1}% of optimum)",
        100.0 * rate / best_rate.max(f64::MIN_POSITIVE)
    );
    debug_assert!((se - rate).abs() < 1e-9);
    println!("exhaustive indices: {:?}", codeword_indices(&best, &alphabet));
    if let Some(path) = out {
        save_indices(&path, &codeword_indices(&theta, &alphabet))?;
        println!("saved beamformer codeword to {}", path.display());
    }
    Ok(())
}
