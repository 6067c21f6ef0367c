//! Signal, interference and SINR per beam and slot.
//!
//! One formulation serves both domains: a [`ResourceMask`] holds amplitudes
//! `w_ij` (carriers) or `t_ij` (time slots), row `j` = slot, column `i` =
//! beam. For beam `i` on slot `j`:
//!
//! ```text
//! S_i[j] = |h_ii|^2 |w_ij|^2
//! U_i[j] = sum_{k != i} |h_ik|^2 |w_kj|^2
//! gamma_ij = S_i[j] / (U_i[j] + sigma^2)
//! ```
//!
//! The matrices `S_i`, `U_i`, `V_i = U_i + sigma^2 I` and `Gamma_i = S_i V_i^-1`
//! are all diagonal, so only their diagonals are stored.

use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phy::{all_throughputs, EfficiencyModel};
use crate::scenario::{ChannelMatrix, Domain, PayloadConfig};

/// Tolerance for the binary-power check on squared amplitudes.
const BPA_RTOL: f64 = 1e-12;

/// Slot-by-beam amplitude matrix (`W` or `T`).
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceMask {
    entries: Array2<f64>,
    domain: Domain,
    p_sat_w: f64,
}

impl ResourceMask {
    pub fn zeros(n_slots: usize, k: usize, domain: Domain, p_sat_w: f64) -> Self {
        Self {
            entries: Array2::zeros((n_slots, k)),
            domain,
            p_sat_w,
        }
    }

    /// Wrap an `N x K` amplitude matrix. Amplitudes must be finite and `>= 0`;
    /// use [`is_bpa`](Self::is_bpa) to check the binary-power condition.
    pub fn from_entries(entries: Array2<f64>, domain: Domain, p_sat_w: f64) -> Result<Self> {
        if let Some(v) = entries.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid(format!("mask amplitude must be >= 0, got {v}")));
        }
        if !(p_sat_w > 0.0) {
            return Err(Error::invalid("P_sat must be positive"));
        }
        Ok(Self {
            entries,
            domain,
            p_sat_w,
        })
    }

    pub fn n_slots(&self) -> usize {
        self.entries.nrows()
    }

    pub fn k(&self) -> usize {
        self.entries.ncols()
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn p_sat_w(&self) -> f64 {
        self.p_sat_w
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn amplitude(&self, slot: usize, beam: usize) -> f64 {
        self.entries[[slot, beam]]
    }

    pub fn is_active(&self, slot: usize, beam: usize) -> bool {
        self.entries[[slot, beam]] > 0.0
    }

    /// Put beam on slot at full saturation amplitude `sqrt(P_sat)`.
    pub fn activate(&mut self, slot: usize, beam: usize) {
        self.entries[[slot, beam]] = self.p_sat_w.sqrt();
    }

    pub fn set_amplitude(&mut self, slot: usize, beam: usize, amplitude: f64) -> Result<()> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(Error::invalid(format!("mask amplitude must be >= 0, got {amplitude}")));
        }
        self.entries[[slot, beam]] = amplitude;
        Ok(())
    }

    /// Same matrix viewed in the other domain.
    pub fn with_domain(&self, domain: Domain) -> Self {
        Self {
            domain,
            ..self.clone()
        }
    }

    /// Every `|w_ij|^2` is 0 or `P_sat`.
    pub fn is_bpa(&self) -> bool {
        self.entries.iter().all(|&w| {
            let p = w * w;
            p == 0.0 || (p - self.p_sat_w).abs() <= BPA_RTOL * self.p_sat_w
        })
    }

    /// `sum_i w_i^H w_i`.
    pub fn power_used(&self) -> f64 {
        self.entries.iter().map(|w| w * w).sum()
    }

    pub fn beam_power(&self, beam: usize) -> f64 {
        self.entries.column(beam).iter().map(|w| w * w).sum()
    }

    pub fn slots_held(&self, beam: usize) -> usize {
        self.entries.column(beam).iter().filter(|w| **w > 0.0).count()
    }

    pub fn beams_on_slot(&self, slot: usize) -> usize {
        self.entries.row(slot).iter().filter(|w| **w > 0.0).count()
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        write_beam_slot_csv(writer, self.k(), self.n_slots(), |i, j| self.entries[[j, i]])
    }

    pub fn read_csv(
        reader: impl Read,
        n_slots: usize,
        k: usize,
        domain: Domain,
        p_sat_w: f64,
    ) -> Result<Self> {
        let mut entries = Array2::zeros((n_slots, k));
        for (i, j, v) in read_beam_slot_csv(reader, k, n_slots)? {
            entries[[j, i]] = v;
        }
        Self::from_entries(entries, domain, p_sat_w)
    }
}

/// Linear SINR per beam (row) and slot (column).
#[derive(Debug, Clone, PartialEq)]
pub struct SinrTable {
    gamma: Array2<f64>,
    domain: Domain,
}

impl SinrTable {
    pub fn new(gamma: Array2<f64>, domain: Domain) -> Self {
        Self { gamma, domain }
    }

    pub fn k(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn n_slots(&self) -> usize {
        self.gamma.ncols()
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn gamma(&self) -> &Array2<f64> {
        &self.gamma
    }

    pub fn get(&self, beam: usize, slot: usize) -> f64 {
        self.gamma[[beam, slot]]
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        write_beam_slot_csv(writer, self.k(), self.n_slots(), |i, j| self.gamma[[i, j]])
    }

    pub fn read_csv(reader: impl Read, k: usize, n_slots: usize, domain: Domain) -> Result<Self> {
        let mut gamma = Array2::zeros((k, n_slots));
        for (i, j, v) in read_beam_slot_csv(reader, k, n_slots)? {
            gamma[[i, j]] = v;
        }
        Ok(Self { gamma, domain })
    }
}

#[derive(Serialize, Deserialize)]
struct BeamSlotRow {
    beam: usize,
    slot: usize,
    value: f64,
}

/// Rows are 1-based `(beam, slot, value)`, beam-major.
fn write_beam_slot_csv(
    writer: impl Write,
    k: usize,
    n: usize,
    value: impl Fn(usize, usize) -> f64,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for i in 0..k {
        for j in 0..n {
            w.serialize(BeamSlotRow {
                beam: i + 1,
                slot: j + 1,
                value: value(i, j),
            })?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

fn read_beam_slot_csv(reader: impl Read, k: usize, n: usize) -> Result<Vec<(usize, usize, f64)>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let BeamSlotRow { beam, slot, value } = row?;
        if beam == 0 || beam > k || slot == 0 || slot > n {
            return Err(Error::invalid(format!(
                "csv row (beam {beam}, slot {slot}) outside {k} beams x {n} slots"
            )));
        }
        out.push((beam - 1, slot - 1, value));
    }
    Ok(out)
}

fn check_shapes(h: &ChannelMatrix, mask: &ResourceMask) -> Result<()> {
    if h.k() != mask.k() {
        return Err(Error::invalid(format!(
            "channel has {} beams, mask has {}",
            h.k(),
            mask.k()
        )));
    }
    Ok(())
}

fn check_beam(h: &ChannelMatrix, i: usize) -> Result<()> {
    if i >= h.k() {
        return Err(Error::invalid(format!("beam {i} out of range (K = {})", h.k())));
    }
    Ok(())
}

/// Diagonal of `S_i = |h_ii|^2 W_i W_i^H`.
pub fn signal_power(h: &ChannelMatrix, mask: &ResourceMask, i: usize) -> Result<Vec<f64>> {
    check_shapes(h, mask)?;
    check_beam(h, i)?;
    let hii = h.power(i, i);
    Ok(mask
        .entries
        .column(i)
        .iter()
        .map(|w| hii * w * w)
        .collect())
}

/// Diagonal of `U_i`: co-channel power from every other beam on each slot.
pub fn interference_power(h: &ChannelMatrix, mask: &ResourceMask, i: usize) -> Result<Vec<f64>> {
    check_shapes(h, mask)?;
    check_beam(h, i)?;
    Ok(interference_unchecked(h, mask, i))
}

pub(crate) fn interference_unchecked(h: &ChannelMatrix, mask: &ResourceMask, i: usize) -> Vec<f64> {
    (0..mask.n_slots())
        .map(|j| slot_interference(h, mask, i, j))
        .collect()
}

/// `U_i[j]`, summed in beam-index order.
pub(crate) fn slot_interference(h: &ChannelMatrix, mask: &ResourceMask, i: usize, j: usize) -> f64 {
    mask.entries
        .row(j)
        .iter()
        .enumerate()
        .filter(|&(k, w)| k != i && *w > 0.0)
        .map(|(k, w)| h.power(i, k) * w * w)
        .sum()
}

/// `gamma_ij` for every beam and slot. Unallocated slots have `gamma = 0`.
pub fn per_slot_sinr(h: &ChannelMatrix, mask: &ResourceMask, sigma2: f64) -> Result<SinrTable> {
    check_shapes(h, mask)?;
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::invalid(format!("noise power must be positive, got {sigma2}")));
    }
    let (n, k) = mask.entries.dim();
    let mut gamma = Array2::zeros((k, n));
    for i in 0..k {
        let hii = h.power(i, i);
        let interference = interference_unchecked(h, mask, i);
        for j in 0..n {
            let w = mask.entries[[j, i]];
            if w > 0.0 {
                gamma[[i, j]] = hii * w * w / (interference[j] + sigma2);
            }
        }
    }
    Ok(SinrTable {
        gamma,
        domain: mask.domain,
    })
}

/// One side of a duality comparison.
#[derive(Debug, Clone, Copy)]
pub struct DualityInput<'a> {
    pub payload: &'a PayloadConfig,
    pub mask: &'a ResourceMask,
    pub model: &'a EfficiencyModel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityReport {
    /// `N_c == N_t`.
    pub granularity_match: bool,
    /// `w_ij == t_ij` for every entry.
    pub mask_match: bool,
    /// Same SINR-to-efficiency mapping on both sides.
    pub model_match: bool,
    pub rates_frequency: Vec<f64>,
    pub rates_time: Vec<f64>,
    /// `max_i |R_i^f - R_i^t|`.
    pub max_abs_rate_diff: f64,
}

impl DualityReport {
    pub fn is_dual(&self) -> bool {
        self.granularity_match && self.mask_match && self.model_match
    }

    /// Per-beam throughputs agree bit for bit.
    pub fn throughputs_equal(&self) -> bool {
        self.rates_frequency == self.rates_time
    }
}

/// Compare a frequency-domain and a time-domain configuration over the same
/// channel. Mismatched conditions are report content, not errors.
pub fn check_duality(
    channel: &ChannelMatrix,
    frequency: DualityInput<'_>,
    time: DualityInput<'_>,
) -> Result<DualityReport> {
    let rates = |side: DualityInput<'_>| -> Result<Vec<f64>> {
        if side.mask.n_slots() != side.payload.n_slots {
            return Err(Error::invalid(format!(
                "mask has {} slots, payload declares {}",
                side.mask.n_slots(),
                side.payload.n_slots
            )));
        }
        let table = per_slot_sinr(channel, side.mask, side.payload.sigma2_w)?;
        Ok(all_throughputs(&table, side.model, side.payload.b_tot_hz))
    };
    let rates_frequency = rates(frequency)?;
    let rates_time = rates(time)?;
    let granularity_match = frequency.payload.n_slots == time.payload.n_slots;
    let mask_match = frequency.mask.entries == time.mask.entries;
    let model_match = frequency.model == time.model;
    let max_abs_rate_diff = rates_frequency
        .iter()
        .zip(&rates_time)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(DualityReport {
        granularity_match,
        mask_match,
        model_match,
        rates_frequency,
        rates_time,
        max_abs_rate_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn channel(values: &[f64], k: usize) -> ChannelMatrix {
        let g = Array2::from_shape_vec((k, k), values.iter().map(|v| Complex64::new(*v, 0.0)).collect())
            .unwrap();
        ChannelMatrix::from_parts(vec![1.0; k], g).unwrap()
    }

    fn mask(n: usize, k: usize, active: &[(usize, usize)]) -> ResourceMask {
        let mut m = ResourceMask::zeros(n, k, Domain::Frequency, 4.0);
        for &(j, i) in active {
            m.activate(j, i);
        }
        m
    }

    #[test]
    fn signal_power_cases() {
        let h = channel(&[2.0, 0.1, 0.1, 2.0], 2);
        let empty = mask(3, 2, &[]);
        assert_eq!(signal_power(&h, &empty, 0).unwrap(), vec![0.0; 3]);
        let one = mask(3, 2, &[(1, 0)]);
        assert_eq!(signal_power(&h, &one, 0).unwrap(), vec![0.0, 16.0, 0.0]);
        // mixed: beam 1 on slots 0 and 2
        let mixed = mask(3, 2, &[(0, 0), (0, 1), (2, 1)]);
        assert_eq!(signal_power(&h, &mixed, 1).unwrap(), vec![16.0, 0.0, 16.0]);
        assert!(signal_power(&h, &mixed, 2).is_err());
        assert!(signal_power(&channel(&[1.0], 1), &mixed, 0).is_err());
    }

    #[test]
    fn interference_power_cases() {
        let h = channel(&[2.0, 0.1, 0.3, 0.1, 2.0, 0.2, 0.3, 0.2, 2.0], 3);
        let lone = mask(2, 3, &[(0, 0), (1, 0)]);
        assert_eq!(interference_power(&h, &lone, 0).unwrap(), vec![0.0, 0.0]);
        let pair = mask(2, 3, &[(0, 0), (0, 1)]);
        assert_relative_eq!(interference_power(&h, &pair, 0).unwrap()[0], 0.01 * 4.0, epsilon = 1e-15);
        let all = mask(1, 3, &[(0, 0), (0, 1), (0, 2)]);
        // beam 0 hears beam 1 at 0.1 and beam 2 at 0.3
        let expect = (0.01 + 0.09) * 4.0;
        assert_relative_eq!(interference_power(&h, &all, 0).unwrap()[0], expect, epsilon = 1e-15);
    }

    #[test]
    fn sinr_cases() {
        let sigma2 = 0.4;
        // |h|^2 P_sat = 10 sigma^2
        let h = channel(&[1.0], 1);
        let m = mask(1, 1, &[(0, 0)]);
        let t = per_slot_sinr(&h, &m, sigma2).unwrap();
        assert_relative_eq!(t.get(0, 0), 10.0, epsilon = 1e-12);

        let h2 = channel(&[2.0, 0.1, 0.1, 2.0], 2);
        let zero = per_slot_sinr(&h2, &mask(3, 2, &[]), 1.0).unwrap();
        assert!(zero.gamma().iter().all(|g| *g == 0.0));

        let (a, b, p, s2) = (2.0, 0.1, 4.0, 1.0);
        let shared = per_slot_sinr(&h2, &mask(1, 2, &[(0, 0), (0, 1)]), s2).unwrap();
        let expect = a * a * p / (b * b * p + s2);
        assert_relative_eq!(shared.get(0, 0), expect, epsilon = 1e-14);
        assert_relative_eq!(shared.get(1, 0), expect, epsilon = 1e-14);

        assert!(per_slot_sinr(&h2, &mask(1, 2, &[]), 0.0).is_err());
        assert!(per_slot_sinr(&h2, &mask(1, 2, &[]), -1.0).is_err());
    }

    #[test]
    fn zero_interference_limit() {
        let h = channel(&[3.0, 0.0, 0.0, 1.5], 2);
        let m = mask(2, 2, &[(0, 0), (0, 1), (1, 1)]);
        let t = per_slot_sinr(&h, &m, 0.5).unwrap();
        assert_eq!(t.get(0, 0), 9.0 * 4.0 / 0.5);
        assert_eq!(t.get(1, 0), 2.25 * 4.0 / 0.5);
        assert_eq!(t.get(1, 1), 2.25 * 4.0 / 0.5);
    }

    #[test]
    fn bpa_and_power() {
        let mut m = mask(4, 2, &[(0, 0), (3, 1)]);
        assert!(m.is_bpa());
        assert_eq!(m.power_used(), 8.0);
        assert_eq!(m.slots_held(0), 1);
        m.set_amplitude(1, 1, 1.0).unwrap();
        assert!(!m.is_bpa());
        assert!(m.set_amplitude(1, 1, -1.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let h = channel(&[2.0, 0.1, 0.1, 2.0], 2);
        let m = mask(3, 2, &[(0, 0), (0, 1), (2, 1)]);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("beam,slot,value\n1,1,2.0\n"));
        let back = ResourceMask::read_csv(buf.as_slice(), 3, 2, Domain::Frequency, 4.0).unwrap();
        assert_eq!(back, m);

        let t = per_slot_sinr(&h, &m, 0.7).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = SinrTable::read_csv(buf.as_slice(), 2, 3, Domain::Frequency).unwrap();
        assert_eq!(back, t);
        assert!(SinrTable::read_csv("beam,slot,value\n3,1,1.0\n".as_bytes(), 2, 3, Domain::Time).is_err());
    }

    fn payload(n: usize, domain: Domain) -> PayloadConfig {
        PayloadConfig {
            b_tot_hz: 500e6,
            n_slots: n,
            p_tot_w: 400.0,
            p_sat_w: 4.0,
            sigma2_w: 0.3,
            domain,
            n_re_max: Some(2),
        }
    }

    #[test]
    fn duality_holds_for_swapped_domains() {
        let h = channel(&[2.0, 0.3, 0.3, 2.0], 2);
        let w = mask(4, 2, &[(0, 0), (1, 0), (1, 1), (3, 1)]);
        let t = w.with_domain(Domain::Time);
        let (pf, pt) = (payload(4, Domain::Frequency), payload(4, Domain::Time));
        let model = EfficiencyModel::Shannon;
        let r = check_duality(
            &h,
            DualityInput { payload: &pf, mask: &w, model: &model },
            DualityInput { payload: &pt, mask: &t, model: &model },
        )
        .unwrap();
        assert!(r.is_dual());
        assert!(r.throughputs_equal());
        assert_eq!(r.max_abs_rate_diff, 0.0);
    }

    #[test]
    fn duality_conditions_can_fail() {
        let h = channel(&[2.0, 0.3, 0.3, 2.0], 2);
        let shannon = EfficiencyModel::Shannon;
        let dvb = EfficiencyModel::dvbs2();

        let w112 = mask(112, 2, &[(0, 0)]);
        let t64 = mask(64, 2, &[(0, 0)]).with_domain(Domain::Time);
        let (pf, pt) = (payload(112, Domain::Frequency), payload(64, Domain::Time));
        let r = check_duality(
            &h,
            DualityInput { payload: &pf, mask: &w112, model: &shannon },
            DualityInput { payload: &pt, mask: &t64, model: &shannon },
        )
        .unwrap();
        assert!(!r.granularity_match);

        let w = mask(4, 2, &[(0, 0), (1, 1)]);
        let t = w.with_domain(Domain::Time);
        let (pf, pt) = (payload(4, Domain::Frequency), payload(4, Domain::Time));
        let r = check_duality(
            &h,
            DualityInput { payload: &pf, mask: &w, model: &shannon },
            DualityInput { payload: &pt, mask: &t, model: &dvb },
        )
        .unwrap();
        assert!(r.granularity_match && r.mask_match);
        assert!(!r.model_match);
        assert!(!r.throughputs_equal());
        // same SINR table through both mappings
        let table = per_slot_sinr(&h, &w, 0.3).unwrap();
        let gamma = table.get(0, 0);
        let expect = 125e6 * (shannon.efficiency(gamma).unwrap() - dvb.efficiency(gamma).unwrap());
        assert_relative_eq!(r.rates_frequency[0] - r.rates_time[0], expect, max_relative = 1e-12);
    }
}
