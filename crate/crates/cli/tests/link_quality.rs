//! Physical sanity of full pipeline runs: the surface should help, and
//! estimation quality should track the geometry it relies on.

use risbeam_cli::config::parse_config;
use risbeam_cli::harness::run_sweep;

fn median(values: &mut Vec<f64>) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values[values.len() / 2]
}

// 1. With line-of-sight dominant links and a generous training budget,
//    the chosen codeword beats the absorbing surface: median sum
//    spectral efficiency over 30 trials is strictly higher, and no
//    trial loses much.
#[test]
fn surface_on_beats_surface_off() {
    let config = parse_config(
        r#"
seed = 17
trials = 30
pilot_counts = [100]

[geometry]
n_y = 8
n_z = 8
d_y = 0.025
d_z = 0.025
wavelength = 0.05
tau = 2

[scenario]
noise_power = 0.01

[scenario.bs_link]
azimuth_deg = 10.0
elevation_deg = 90.0
distance = 30.0
num_paths = 3
power_scale = 1.0
k_factor = 10.0
angle_spread_deg = 5.0

[[scenario.users]]
direct_power = 0.01

[scenario.users.link]
azimuth_deg = -28.0
elevation_deg = 90.0
distance = 20.0
num_paths = 3
power_scale = 1.0
k_factor = 10.0
angle_spread_deg = 5.0

[[scenario.users]]
direct_power = 0.01

[scenario.users.link]
azimuth_deg = 21.0
elevation_deg = 95.0
distance = 25.0
num_paths = 3
power_scale = 1.0
k_factor = 10.0
angle_spread_deg = 5.0

[algorithm]
multi_start = 2
"#,
    )
    .unwrap();
    let records = run_sweep(&config, 4).unwrap();
    assert_eq!(records.len(), 30);
    let mut on: Vec<f64> = records.iter().map(|r| r.se_on).collect();
    let mut off: Vec<f64> = records.iter().map(|r| r.se_off).collect();
    let median_on = median(&mut on);
    let median_off = median(&mut off);
    assert!(
        median_on > median_off,
        "median on {median_on} <= median off {median_off}"
    );
    for r in &records {
        assert!(r.se_on > r.se_off - 1e-9, "trial {} lost rate", r.trial);
    }
}

// 2. Sparse recovery leans on far-field structure. A user past the
//    near-field boundary (about 2.9 m for this board) estimates better
//    and ends up with more beamforming gain than one well inside it,
//    at the same training budget and the same link power.
#[test]
fn far_user_beats_near_user_inside_boundary() {
    let template = |distance: f64| {
        format!(
            r#"
seed = 29
trials = 20
pilot_counts = [120]

[geometry]
n_y = 16
n_z = 32
d_y = 0.0143
d_z = 0.01027
wavelength = 0.0516883
tau = 2

[scenario]
noise_power = 0.01

[scenario.bs_link]
azimuth_deg = 10.0
elevation_deg = 90.0
distance = 30.0
num_paths = 1
power_scale = 1.0
k_factor = 100.0

[[scenario.users]]
direct_power = 0.01

[scenario.users.link]
azimuth_deg = -28.0
elevation_deg = 90.0
distance = {distance}
num_paths = 1
power_scale = 1.0
k_factor = 100.0
wavefront = "spherical"

[algorithm]
multi_start = 2
"#
        )
    };
    let far = parse_config(&template(10.0)).unwrap();
    let near = parse_config(&template(0.4)).unwrap();
    let far_records = run_sweep(&far, 4).unwrap();
    let near_records = run_sweep(&near, 4).unwrap();

    let mut far_gain: Vec<f64> = far_records.iter().map(|r| r.gain_db[0]).collect();
    let mut near_gain: Vec<f64> = near_records.iter().map(|r| r.gain_db[0]).collect();
    let far_median = median(&mut far_gain);
    let near_median = median(&mut near_gain);
    assert!(
        far_median > near_median,
        "far user {far_median} dB <= near user {near_median} dB"
    );

    let mut far_err: Vec<f64> = far_records.iter().map(|r| r.nmse.unwrap()).collect();
    let mut near_err: Vec<f64> = near_records.iter().map(|r| r.nmse.unwrap()).collect();
    assert!(median(&mut far_err) < median(&mut near_err));
}
