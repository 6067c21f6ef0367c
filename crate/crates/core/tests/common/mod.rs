#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use satcap::scenario::{
    build_beam_grid, build_channel_matrix, linear_traffic, AntennaModel, BeamGrid, ChannelMatrix, DemandVector,
    PayloadConfig,
};
use satcap::sinr::ResourceMask;
use satcap::Domain;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

pub struct SmallScenario {
    pub grid: BeamGrid,
    pub channel: ChannelMatrix,
    pub payload: PayloadConfig,
    pub demand: DemandVector,
}

/// Hexagonal layout with K in `1..=k_max`, boresight SNR between 5 and 25 dB,
/// linear traffic whose largest demand spans 0.2 to 8 carriers.
pub fn small_scenario(rng: &mut impl Rng, k_max: usize, n_range: (usize, usize)) -> SmallScenario {
    let k = rng.random_range(1..=k_max);
    let n = rng.random_range(n_range.0..=n_range.1);
    let grid = build_beam_grid(k, 0.05).unwrap();
    let antenna = AntennaModel::new(47.14, -rng.random_range(15.0..30.0)).unwrap();
    let alpha: Vec<f64> = (0..k).map(|_| log_uniform(rng, 0.5e-4, 2e-4)).collect();
    let channel = build_channel_matrix(&grid, &antenna, &alpha).unwrap();
    let p_sat = 4.0;
    let snr_db = rng.random_range(5.0..25.0);
    let g_max = 10f64.powf(4.714);
    let sigma2 = 1e-8 * g_max * p_sat / 10f64.powf(snr_db / 10.0);
    let b_tot = 500e6;
    let carrier = b_tot / n as f64 * (1.0 + 10f64.powf(snr_db / 10.0)).log2();
    let beta = carrier * rng.random_range(0.2..8.0) / k as f64;
    let p_tot = p_sat * rng.random_range(1..=(k * n)) as f64;
    SmallScenario {
        grid,
        channel,
        payload: PayloadConfig {
            b_tot_hz: b_tot,
            n_slots: n,
            p_tot_w: p_tot,
            p_sat_w: p_sat,
            sigma2_w: sigma2,
            domain: Domain::Frequency,
            n_re_max: None,
        },
        demand: linear_traffic(k, beta).unwrap(),
    }
}

/// BPA mask with each entry active with probability `p`.
pub fn random_mask(rng: &mut impl Rng, n: usize, k: usize, p: f64, p_sat: f64) -> ResourceMask {
    let mut m = ResourceMask::zeros(n, k, Domain::Frequency, p_sat);
    for j in 0..n {
        for i in 0..k {
            if rng.random_bool(p) {
                m.activate(j, i);
            }
        }
    }
    m
}
