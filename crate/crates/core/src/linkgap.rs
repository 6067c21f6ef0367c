//! Forward-link budget and the spectral-efficiency gap between a
//! beam-hopping payload (one carrier, low output backoff `x_2`) and a
//! multicarrier payload (higher backoff `x_1`).
//!
//! Budget arithmetic is in dB; linear ratios appear only where uplink,
//! interference and noise contributions are combined. `y` and `z` may be
//! `f64::INFINITY`, which drops their term.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBudgetParams {
    pub p_sat_dbw: f64,
    pub obo_db: f64,
    pub l_repeater_db: f64,
    pub l_antenna_db: f64,
    pub l_propagation_db: f64,
    pub g_tx_dbi: f64,
    /// Ground terminal G/T, dB/K.
    pub gt_ground_dbk: f64,
    pub b_c_hz: f64,
    /// Downlink signal to co-channel interference, linear.
    pub sir_y: f64,
    /// Uplink SINR, linear.
    pub uplink_sinr_z: f64,
}

impl LinkBudgetParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("P_sat_dbw", self.p_sat_dbw),
            ("obo_db", self.obo_db),
            ("L_repeater_db", self.l_repeater_db),
            ("L_antenna_db", self.l_antenna_db),
            ("L_propagation_db", self.l_propagation_db),
            ("G_tx_dbi", self.g_tx_dbi),
            ("GT_ground_dbK", self.gt_ground_dbk),
        ];
        if let Some((name, _)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid(format!("{name} must be finite")));
        }
        for (name, v) in [
            ("L_repeater_db", self.l_repeater_db),
            ("L_antenna_db", self.l_antenna_db),
            ("L_propagation_db", self.l_propagation_db),
        ] {
            if v < 0.0 {
                return Err(Error::invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.b_c_hz > 0.0) || !self.b_c_hz.is_finite() {
            return Err(Error::invalid("B_c must be positive"));
        }
        if !(self.sir_y > 0.0) {
            return Err(Error::invalid(format!("y must be > 0, got {}", self.sir_y)));
        }
        if !(self.uplink_sinr_z > 0.0) {
            return Err(Error::invalid(format!("z must be > 0, got {}", self.uplink_sinr_z)));
        }
        Ok(())
    }

    pub fn with_obo(self, obo_db: f64) -> Self {
        LinkBudgetParams { obo_db, ..self }
    }

    pub fn with_sir(self, sir_y: f64) -> Self {
        LinkBudgetParams { sir_y, ..self }
    }

    /// Same as `other` in every field but `obo_db`.
    fn matches_except_obo(&self, other: &Self) -> bool {
        self.with_obo(0.0) == other.with_obo(0.0)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// EIRP in dBW.
pub fn eirp(p: &LinkBudgetParams) -> f64 {
    p.p_sat_dbw - p.obo_db - p.l_repeater_db - p.l_antenna_db + p.g_tx_dbi
}

/// Carrier to noise density, dBHz.
pub fn carrier_to_noise_density(p: &LinkBudgetParams) -> f64 {
    eirp(p) - p.l_propagation_db + p.gt_ground_dbk - linear_to_db(BOLTZMANN)
}

/// Downlink SNR over one carrier, dB.
pub fn downlink_snr(p: &LinkBudgetParams) -> f64 {
    carrier_to_noise_density(p) - linear_to_db(p.b_c_hz)
}

/// Backoff-free part of the SNR, `a = SNR + OBO`, so that `SNR = a - x`.
pub fn aggregate_constant(p: &LinkBudgetParams) -> f64 {
    downlink_snr(p) + p.obo_db
}

fn inverse(v: f64) -> f64 {
    if v.is_infinite() { 0.0 } else { 1.0 / v }
}

/// Sum of the inverse SINR contributions at backoff `x`.
fn inverse_sinr_sum(p: &LinkBudgetParams, a: f64, x: f64) -> f64 {
    inverse(p.uplink_sinr_z) + inverse(p.sir_y) + db_to_linear(x - a)
}

/// End-to-end SINR (linear) combining uplink, interference and noise.
pub fn total_sinr(p: &LinkBudgetParams) -> f64 {
    1.0 / inverse_sinr_sum(p, aggregate_constant(p), p.obo_db)
}

/// Spectral-efficiency advantage, bits/s/Hz, of the `bh` configuration over
/// `nofr` in the high-SINR regime. The two must differ only in `obo_db`.
pub fn spectral_efficiency_gap(nofr: &LinkBudgetParams, bh: &LinkBudgetParams) -> Result<f64> {
    nofr.validate()?;
    bh.validate()?;
    if !nofr.matches_except_obo(bh) {
        return Err(Error::invalid(
            "gap configurations may differ only in output backoff",
        ));
    }
    let a = aggregate_constant(nofr);
    Ok((inverse_sinr_sum(nofr, a, nofr.obo_db) / inverse_sinr_sum(bh, a, bh.obo_db)).log2())
}

/// Interference-free limit (`y -> infinity`) of the gap for backoffs
/// `x1` (multicarrier) and `x2` (single carrier). As `z` grows this tends to
/// `(x1 - x2) log2(10) / 10`.
pub fn gap_upper_bound(p: &LinkBudgetParams, x1: f64, x2: f64) -> Result<f64> {
    p.validate()?;
    if !x1.is_finite() || !x2.is_finite() {
        return Err(Error::invalid("backoffs must be finite"));
    }
    let a = aggregate_constant(p);
    // (1 + z 10^{(x-a)/10}) / z, written to stay finite for z = inf
    let term = |x: f64| inverse(p.uplink_sinr_z) + db_to_linear(x - a);
    Ok((term(x1) / term(x2)).log2())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapBoundPoint {
    pub delta_obo_db: f64,
    pub x2_db: f64,
    pub gap_bound_bits: f64,
}

/// Grid of bound values over `x1 = x2 + delta` for each `x2`, `x2`-major.
pub fn gap_bound_sweep(p: &LinkBudgetParams, deltas: &[f64], x2s: &[f64]) -> Result<Vec<GapBoundPoint>> {
    let mut out = Vec::with_capacity(deltas.len() * x2s.len());
    for &x2 in x2s {
        for &delta in deltas {
            out.push(GapBoundPoint {
                delta_obo_db: delta,
                x2_db: x2,
                gap_bound_bits: gap_upper_bound(p, x2 + delta, x2)?,
            });
        }
    }
    Ok(out)
}

pub fn write_gap_bound_csv(writer: impl Write, points: &[GapBoundPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for pt in points {
        w.serialize(pt)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapPoint {
    pub y: f64,
    pub gap_bits: f64,
}

/// Gap as a function of the interference ratio `y`.
pub fn gap_vs_sir(p: &LinkBudgetParams, x1: f64, x2: f64, ys: &[f64]) -> Result<Vec<GapPoint>> {
    ys.iter()
        .map(|&y| {
            let base = p.with_sir(y);
            Ok(GapPoint {
                y,
                gap_bits: spectral_efficiency_gap(&base.with_obo(x1), &base.with_obo(x2))?,
            })
        })
        .collect()
}

/// `n` points log-spaced over `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
                .collect()
        }
    }
}
