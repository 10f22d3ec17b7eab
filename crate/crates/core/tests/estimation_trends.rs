//! Recovery quality trends of the sparse channel estimator: more
//! training slots and more signal power must not make the median
//! estimate worse.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use risbeam_core::channel::complex_normal;
use risbeam_core::estimation::{
    em_gamp_recover, generate_sensing_plan, nmse, to_element_domain, GampOptions,
};
use risbeam_core::geometry::RisGeometry;
use risbeam_core::Complex64;

fn geom() -> RisGeometry {
    RisGeometry {
        n_y: 8,
        n_z: 16,
        d_y: 0.025,
        d_z: 0.025,
        wavelength: 0.05,
        tau: 1,
    }
}

fn sparse_angular(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let mut x = vec![Complex64::ZERO; n];
    let mut placed = 0;
    while placed < k {
        let idx = (rng.next_u64() % n as u64) as usize;
        if x[idx] == Complex64::ZERO {
            x[idx] = complex_normal(rng);
            placed += 1;
        }
    }
    x
}

/// Median error over seeds at one operating point, in dB.
fn median_nmse_db(num_slots: usize, snr_db: f64, seeds: u64) -> f64 {
    let geom = geom();
    let n = geom.n_elements();
    let opts = GampOptions::default();
    let mut errors = Vec::new();
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
        let h_a = sparse_angular(n, 4, &mut rng);
        let plan = generate_sensing_plan(&geom, num_slots, &mut rng);
        let signal: f64 = h_a.iter().map(|v| v.norm_sqr()).sum();
        let sigma2 = signal * 10f64.powf(-snr_db / 10.0);
        let y: Vec<Complex64> = (0..num_slots)
            .map(|p| {
                let mut acc = Complex64::ZERO;
                for col in 0..n {
                    acc += plan.m.get(p, col) * h_a[col];
                }
                acc + complex_normal(&mut rng) * sigma2.sqrt()
            })
            .collect();
        let est = em_gamp_recover(&plan.m, &y, sigma2.max(1e-12), &opts).unwrap();
        let truth = to_element_domain(&h_a, &geom);
        let recovered = to_element_domain(&est.h_a, &geom);
        errors.push(nmse(&[truth], &[recovered]).unwrap());
    }
    errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    10.0 * errors[errors.len() / 2].max(1e-300).log10()
}

// 1. At fixed noise, the median error is non-increasing in the number
//    of training slots.
#[test]
fn error_improves_with_more_slots() {
    let p40 = median_nmse_db(40, 30.0, 30);
    let p80 = median_nmse_db(80, 30.0, 30);
    let p160 = median_nmse_db(160, 30.0, 30);
    assert!(p80 <= p40 + 1e-9, "40 slots {p40} dB, 80 slots {p80} dB");
    assert!(p160 <= p80 + 1e-9, "80 slots {p80} dB, 160 slots {p160} dB");
    assert!(p160 < -25.0, "160 slots should estimate well, got {p160} dB");
}

// 2. At a fixed budget, thirty more decibels of signal cut the median
//    error by an order of magnitude or better.
#[test]
fn error_improves_with_signal_power() {
    let low = median_nmse_db(80, 0.0, 30);
    let high = median_nmse_db(80, 30.0, 30);
    assert!(
        high <= low - 10.0,
        "0 dB gives {low} dB error, 30 dB gives {high} dB"
    );
}
