//! Iterative joint power and carrier allocation with co-channel interference,
//! and the regular 7-color uniform baseline.
//!
//! Every allocated (slot, beam) pair is driven at saturation, `|w_ij|^2 = P_sat`
//! (binary power allocation). Each outer iteration:
//!
//! 1. collects the unsatisfied beams `A_s`, least satisfied first;
//! 2. gives each of them, in order, the one slot that maximizes its prospective
//!    SINR against the interference currently on the air. Later beams in the
//!    same sweep see the carriers granted earlier;
//! 3. recomputes all SINRs and rates.
//!
//! It stops when every beam is satisfied, the power budget cannot fund
//! another carrier, no unsatisfied beam can take another slot, or the
//! iteration cap is reached.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::phy::{all_throughputs, EfficiencyModel};
use crate::scenario::{BeamGrid, ChannelMatrix, DemandVector, Domain, PayloadConfig, REUSE_COLORS};
use crate::sinr::{per_slot_sinr, slot_interference, ResourceMask, SinrTable};

/// Relative slack on the power budget comparison.
const BUDGET_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct P1Problem<'a> {
    pub channel: &'a ChannelMatrix,
    pub payload: &'a PayloadConfig,
    pub demand: &'a DemandVector,
    pub model: &'a EfficiencyModel,
    pub max_outer_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    AllSatisfied,
    PowerBudget,
    SlotsSaturated,
    IterationLimit,
    /// Non-iterative allocation (baseline).
    SinglePass,
}

impl Termination {
    /// True when the run was cut short by the iteration cap.
    pub fn is_flagged(self) -> bool {
        self == Termination::IterationLimit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Assignment {
    pub beam: usize,
    pub slot: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    /// 1-based outer iteration `n_it`.
    pub iteration: usize,
    pub active_set: Vec<usize>,
    pub assignments: Vec<Assignment>,
    /// Power on the air after this iteration.
    pub power_used: f64,
    pub total_rate: f64,
    pub credited_rate: f64,
    /// Credited total dropped below the previous iteration's.
    pub credited_decreased: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationOutcome {
    #[serde(skip)]
    pub mask: ResourceMask,
    pub per_beam_rate: Vec<f64>,
    /// Rates capped at demand, `min(R_i, R_hat_i)`.
    pub credited_rate: Vec<f64>,
    #[serde(skip)]
    pub sinr: SinrTable,
    pub power_used: f64,
    pub trace: Vec<IterationRecord>,
    pub termination: Termination,
}

impl AllocationOutcome {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn total_rate(&self) -> f64 {
        self.per_beam_rate.iter().sum()
    }

    pub fn total_credited(&self) -> f64 {
        self.credited_rate.iter().sum()
    }

    /// Re-cap credited rates against `demand`.
    pub fn credit(&mut self, demand: &DemandVector) -> Result<()> {
        if demand.len() != self.per_beam_rate.len() {
            return Err(Error::invalid("demand length does not match beam count"));
        }
        self.credited_rate = credited(&self.per_beam_rate, demand);
        Ok(())
    }

    /// Bandwidth held by each beam (`slots * B_c`).
    pub fn beam_bandwidth(&self, b_tot_hz: f64) -> Vec<f64> {
        let bc = b_tot_hz / self.mask.n_slots() as f64;
        (0..self.mask.k())
            .map(|i| self.mask.slots_held(i) as f64 * bc)
            .collect()
    }

    /// One row per assignment: `iteration, beam, slot, power_used, total_rate`.
    /// `power_used` is cumulative after the assignment; `total_rate` is the
    /// iteration's end-of-sweep total.
    pub fn write_trace_csv(&self, writer: impl Write, p_sat_w: f64) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            iteration: usize,
            beam: usize,
            slot: usize,
            power_used: f64,
            total_rate: f64,
        }
        let mut w = csv::Writer::from_writer(writer);
        let mut count = 0usize;
        for rec in &self.trace {
            for a in &rec.assignments {
                count += 1;
                w.serialize(Row {
                    iteration: rec.iteration,
                    beam: a.beam + 1,
                    slot: a.slot + 1,
                    power_used: count as f64 * p_sat_w,
                    total_rate: rec.total_rate,
                })?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

pub(crate) fn credited(rates: &[f64], demand: &DemandVector) -> Vec<f64> {
    rates
        .iter()
        .zip(demand.as_slice())
        .map(|(r, d)| r.min(*d))
        .collect()
}

/// Beams with `R_k / R_hat_k < 1`, ascending by that ratio, ties by index.
/// Beams requesting nothing are never included.
pub fn unsatisfied_set(rates: &[f64], demand: &DemandVector) -> Vec<usize> {
    let mut set: Vec<(f64, usize)> = rates
        .iter()
        .zip(demand.as_slice())
        .enumerate()
        .filter(|(_, (_, d))| **d > 0.0)
        .map(|(i, (r, d))| (r / d, i))
        .filter(|(ratio, _)| *ratio < 1.0)
        .collect();
    set.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    set.into_iter().map(|(_, i)| i).collect()
}

/// Slot maximizing the generalized Rayleigh quotient
/// `e_j^T S_i e_j / e_j^T V_i e_j` over standard basis vectors, with `S_i`
/// evaluated as if beam `i` transmitted at `sqrt(P_sat)` on every candidate
/// slot. Both matrices are diagonal, so the quotient is the diagonal of
/// `Gamma_i` and its maximizing eigenvector is `e_j` for the largest entry.
/// Slots already held by `i` are skipped; ties go to the lowest slot.
pub fn best_carrier(
    channel: &ChannelMatrix,
    mask: &ResourceMask,
    sigma2: f64,
    i: usize,
) -> Result<usize> {
    if channel.k() != mask.k() {
        return Err(Error::invalid("channel and mask disagree on beam count"));
    }
    if i >= mask.k() {
        return Err(Error::invalid(format!("beam {i} out of range")));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::invalid("noise power must be positive"));
    }
    let signal = channel.power(i, i) * mask.p_sat_w();
    pick_slot(mask, i, |j| {
        signal / (slot_interference(channel, mask, i, j) + sigma2)
    }, |_| true)
    .ok_or(Error::BeamSaturated { beam: i })
}

fn pick_slot(
    mask: &ResourceMask,
    i: usize,
    quotient: impl Fn(usize) -> f64,
    allowed: impl Fn(usize) -> bool,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for j in 0..mask.n_slots() {
        if mask.is_active(j, i) || !allowed(j) {
            continue;
        }
        let q = quotient(j);
        if best.is_none_or(|(_, b)| q > b) {
            best = Some((j, q));
        }
    }
    best.map(|(j, _)| j)
}

/// Run the iterative allocator.
pub fn allocate_p1(problem: &P1Problem<'_>) -> Result<AllocationOutcome> {
    let P1Problem {
        channel,
        payload,
        demand,
        model,
        max_outer_iterations,
    } = *problem;
    let k = channel.k();
    if demand.len() != k {
        return Err(Error::invalid(format!(
            "demand has {} beams, channel has {k}",
            demand.len()
        )));
    }
    payload.validate(k)?;
    let n = payload.n_slots;
    let p_sat = payload.p_sat_w;
    let budget = payload.p_tot_w * (1.0 + BUDGET_RTOL);
    // the time domain can illuminate at most N_re_max cells per slot
    let per_slot_cap = match payload.domain {
        Domain::Time => payload.n_re_max.unwrap_or(k),
        Domain::Frequency => k,
    };

    let mut mask = ResourceMask::zeros(n, k, payload.domain, p_sat);
    // interference[i][j] = U_i[j] for the current mask
    let mut interference = vec![vec![0.0; n]; k];
    let mut slot_load = vec![0usize; n];
    let mut carriers = 0usize;
    let mut sinr = per_slot_sinr(channel, &mask, payload.sigma2_w)?;
    let mut rates = vec![0.0; k];
    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut last_credited = 0.0;

    let termination = loop {
        let active = unsatisfied_set(&rates, demand);
        if active.is_empty() {
            break Termination::AllSatisfied;
        }
        if (carriers + 1) as f64 * p_sat > budget {
            break Termination::PowerBudget;
        }
        if trace.len() >= max_outer_iterations {
            break Termination::IterationLimit;
        }

        let mut assignments = Vec::new();
        for &beam in &active {
            if (carriers + 1) as f64 * p_sat > budget {
                break;
            }
            let signal = channel.power(beam, beam) * p_sat;
            let row = &interference[beam];
            let choice = pick_slot(
                &mask,
                beam,
                |j| signal / (row[j] + payload.sigma2_w),
                |j| slot_load[j] < per_slot_cap,
            );
            let Some(slot) = choice else { continue };
            mask.activate(slot, beam);
            slot_load[slot] += 1;
            carriers += 1;
            for (i, row) in interference.iter_mut().enumerate() {
                row[slot] = slot_interference(channel, &mask, i, slot);
            }
            assignments.push(Assignment { beam, slot });
        }

        if assignments.is_empty() {
            break Termination::SlotsSaturated;
        }

        sinr = per_slot_sinr(channel, &mask, payload.sigma2_w)?;
        rates = all_throughputs(&sinr, model, payload.b_tot_hz);
        let credited_total: f64 = credited(&rates, demand).iter().sum();
        trace.push(IterationRecord {
            iteration: trace.len() + 1,
            active_set: active,
            assignments,
            power_used: carriers as f64 * p_sat,
            total_rate: rates.iter().sum(),
            credited_rate: credited_total,
            credited_decreased: credited_total < last_credited,
        });
        last_credited = credited_total;
    };

    Ok(AllocationOutcome {
        power_used: mask.power_used(),
        credited_rate: credited(&rates, demand),
        per_beam_rate: rates,
        sinr,
        mask,
        trace,
        termination,
    })
}

/// Slot range `[start, end)` of reuse band `color`. The last band absorbs
/// the remainder when `N` is not a multiple of 7.
pub fn reuse_band(color: usize, n_slots: usize) -> (usize, usize) {
    let width = n_slots / REUSE_COLORS;
    let start = color * width;
    let end = if color == REUSE_COLORS - 1 {
        n_slots
    } else {
        start + width
    };
    (start, end)
}

/// Conventional design: 7-color regular reuse, every slot of a beam's band
/// at `sqrt(P_sat)`.
pub fn allocate_uniform_baseline(
    channel: &ChannelMatrix,
    grid: &BeamGrid,
    payload: &PayloadConfig,
    model: &EfficiencyModel,
) -> Result<AllocationOutcome> {
    baseline_allocation(channel, grid, payload, model, None)
}

/// Baseline with every beam radiating `per_beam_power` watts spread evenly
/// over its band. Amplitudes are continuous, not binary.
pub fn uniform_baseline_with_power(
    channel: &ChannelMatrix,
    grid: &BeamGrid,
    payload: &PayloadConfig,
    model: &EfficiencyModel,
    per_beam_power: f64,
) -> Result<AllocationOutcome> {
    if !(per_beam_power >= 0.0) || !per_beam_power.is_finite() {
        return Err(Error::invalid(format!(
            "per-beam power must be >= 0, got {per_beam_power}"
        )));
    }
    baseline_allocation(channel, grid, payload, model, Some(per_beam_power))
}

fn baseline_allocation(
    channel: &ChannelMatrix,
    grid: &BeamGrid,
    payload: &PayloadConfig,
    model: &EfficiencyModel,
    per_beam_power: Option<f64>,
) -> Result<AllocationOutcome> {
    let k = channel.k();
    if grid.k() != k {
        return Err(Error::invalid("grid and channel disagree on beam count"));
    }
    payload.validate(k)?;
    let n = payload.n_slots;
    if n < REUSE_COLORS {
        return Err(Error::invalid(format!(
            "regular 7-color reuse needs at least 7 slots, got {n}"
        )));
    }
    let mut mask = ResourceMask::zeros(n, k, payload.domain, payload.p_sat_w);
    for beam in 0..k {
        let (start, end) = reuse_band(grid.color(beam), n);
        let amplitude = match per_beam_power {
            Some(p) => (p / (end - start) as f64).sqrt(),
            None => payload.amplitude(),
        };
        for slot in start..end {
            mask.set_amplitude(slot, beam, amplitude)?;
        }
    }
    let sinr = per_slot_sinr(channel, &mask, payload.sigma2_w)?;
    let rates = all_throughputs(&sinr, model, payload.b_tot_hz);
    Ok(AllocationOutcome {
        power_used: mask.power_used(),
        credited_rate: rates.clone(),
        per_beam_rate: rates,
        sinr,
        mask,
        trace: Vec::new(),
        termination: Termination::SinglePass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{build_beam_grid, build_channel_matrix, linear_traffic, AntennaModel};
    use crate::sinr::interference_power;
    use ndarray::Array2;
    use num_complex::Complex64;

    fn demand(v: &[f64]) -> DemandVector {
        DemandVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn unsatisfied_set_cases() {
        let d = demand(&[10.0, 10.0, 10.0]);
        assert!(unsatisfied_set(&[10.0, 10.0, 10.0], &d).is_empty());
        assert_eq!(unsatisfied_set(&[0.0; 3], &d), vec![0, 1, 2]);
        assert_eq!(unsatisfied_set(&[5.0, 2.0, 10.0], &d), vec![1, 0]);
        let with_zero = demand(&[0.0, 4.0]);
        assert_eq!(unsatisfied_set(&[0.0, 0.0], &with_zero), vec![1]);
    }

    fn flat_channel(k: usize, cross: f64) -> ChannelMatrix {
        let g = Array2::from_shape_fn((k, k), |(i, j)| {
            Complex64::new(if i == j { 1.0 } else { cross }, 0.0)
        });
        ChannelMatrix::from_parts(vec![1.0; k], g).unwrap()
    }

    #[test]
    fn best_carrier_cases() {
        let h = flat_channel(2, 0.1);
        let empty = ResourceMask::zeros(3, 2, Domain::Frequency, 4.0);
        assert_eq!(best_carrier(&h, &empty, 1.0, 0).unwrap(), 0);

        let mut m = ResourceMask::zeros(3, 2, Domain::Frequency, 4.0);
        m.activate(0, 1);
        // slot 0: 4 / (0.04 + 1), slots 1, 2: 4 / 1
        assert_eq!(best_carrier(&h, &m, 1.0, 0).unwrap(), 1);

        let mut m = ResourceMask::zeros(3, 2, Domain::Frequency, 4.0);
        for j in 0..3 {
            m.activate(j, 1);
        }
        assert_eq!(best_carrier(&h, &m, 1.0, 0).unwrap(), 0);

        // held slots are skipped, and a full beam is saturated
        let mut m = ResourceMask::zeros(2, 2, Domain::Frequency, 4.0);
        m.activate(0, 0);
        assert_eq!(best_carrier(&h, &m, 1.0, 0).unwrap(), 1);
        m.activate(1, 0);
        assert!(matches!(best_carrier(&h, &m, 1.0, 0), Err(Error::BeamSaturated { beam: 0 })));
    }

    fn payload(n: usize, p_tot: f64) -> PayloadConfig {
        PayloadConfig {
            b_tot_hz: 500e6,
            n_slots: n,
            p_tot_w: p_tot,
            p_sat_w: 4.0,
            sigma2_w: 0.04,
            domain: Domain::Frequency,
            n_re_max: None,
        }
    }

    #[test]
    fn single_beam_takes_one_carrier() {
        let h = flat_channel(1, 0.0);
        let pl = payload(112, 400.0);
        // one carrier at gamma = 100: B_c log2(101) ~ 29.7 Mbps
        let d = demand(&[20e6]);
        let out = allocate_p1(&P1Problem {
            channel: &h,
            payload: &pl,
            demand: &d,
            model: &EfficiencyModel::Shannon,
            max_outer_iterations: 100,
        })
        .unwrap();
        assert_eq!(out.iterations(), 1);
        assert_eq!(out.mask.slots_held(0), 1);
        assert_eq!(out.termination, Termination::AllSatisfied);
        assert!(out.per_beam_rate[0] >= 20e6);
        assert_eq!(out.credited_rate[0], 20e6);
    }

    #[test]
    fn budget_of_one_carrier() {
        let h = flat_channel(2, 0.1);
        let pl = payload(8, 4.0);
        let d = demand(&[1e9, 1e9]);
        let out = allocate_p1(&P1Problem {
            channel: &h,
            payload: &pl,
            demand: &d,
            model: &EfficiencyModel::Shannon,
            max_outer_iterations: 100,
        })
        .unwrap();
        assert_eq!(out.power_used, 4.0);
        assert_eq!(out.mask.slots_held(0), 1);
        assert_eq!(out.mask.slots_held(1), 0);
        assert_eq!(out.termination, Termination::PowerBudget);
    }

    #[test]
    fn single_cluster_spreads_before_reusing() {
        let grid = build_beam_grid(7, 0.05).unwrap();
        let ant = AntennaModel::new(47.14, -20.0).unwrap();
        let h = build_channel_matrix(&grid, &ant, &[1e-4; 7]).unwrap();
        let pl = PayloadConfig {
            sigma2_w: 1e-3,
            ..payload(28, 1e6)
        };
        let d = demand(&[400e6; 7]);
        let out = allocate_p1(&P1Problem {
            channel: &h,
            payload: &pl,
            demand: &d,
            model: &EfficiencyModel::Shannon,
            max_outer_iterations: 1000,
        })
        .unwrap();
        // replay the trace: a shared slot is only picked once nothing is free
        let mut used = vec![false; 28];
        let mut shared_seen = false;
        for rec in &out.trace {
            for a in &rec.assignments {
                if used[a.slot] {
                    assert!(used.iter().all(|u| *u), "slot reused while free slots remain");
                    shared_seen = true;
                }
                used[a.slot] = true;
            }
        }
        assert!(shared_seen);
    }

    #[test]
    fn slot_saturation_terminates() {
        let h = flat_channel(2, 0.5);
        let pl = payload(2, 1e6);
        let d = demand(&[1e12, 1e12]);
        let out = allocate_p1(&P1Problem {
            channel: &h,
            payload: &pl,
            demand: &d,
            model: &EfficiencyModel::Shannon,
            max_outer_iterations: 100,
        })
        .unwrap();
        assert_eq!(out.termination, Termination::SlotsSaturated);
        assert_eq!(out.mask.power_used(), 16.0);
    }

    #[test]
    fn iteration_cap_is_flagged() {
        let h = flat_channel(2, 0.01);
        let pl = payload(50, 1e6);
        let d = demand(&[1e12, 1e12]);
        let out = allocate_p1(&P1Problem {
            channel: &h,
            payload: &pl,
            demand: &d,
            model: &EfficiencyModel::Shannon,
            max_outer_iterations: 3,
        })
        .unwrap();
        assert_eq!(out.iterations(), 3);
        assert!(out.termination.is_flagged());
    }

    #[test]
    fn time_domain_respects_illumination_cap() {
        let h = flat_channel(4, 0.01);
        let pl = PayloadConfig {
            domain: Domain::Time,
            n_re_max: Some(2),
            ..payload(4, 1e6)
        };
        let d = demand(&[1e12; 4]);
        let out = allocate_p1(&P1Problem {
            channel: &h,
            payload: &pl,
            demand: &d,
            model: &EfficiencyModel::Shannon,
            max_outer_iterations: 100,
        })
        .unwrap();
        for j in 0..4 {
            assert!(out.mask.beams_on_slot(j) <= 2);
        }
        assert_eq!(out.mask.power_used(), 8.0 * 4.0);
    }

    #[test]
    fn rates_are_recomputable_from_mask() {
        let grid = build_beam_grid(19, 0.05).unwrap();
        let ant = AntennaModel::new(47.14, -20.0).unwrap();
        let h = build_channel_matrix(&grid, &ant, &[1e-4; 19]).unwrap();
        let pl = PayloadConfig {
            sigma2_w: 1e-2,
            ..payload(28, 200.0)
        };
        let d = linear_traffic(19, 5e6).unwrap();
        let model = EfficiencyModel::dvbs2();
        let out = allocate_p1(&P1Problem {
            channel: &h,
            payload: &pl,
            demand: &d,
            model: &model,
            max_outer_iterations: 100,
        })
        .unwrap();
        let table = per_slot_sinr(&h, &out.mask, pl.sigma2_w).unwrap();
        assert_eq!(table, out.sinr);
        assert_eq!(all_throughputs(&table, &model, pl.b_tot_hz), out.per_beam_rate);
        assert!(out.mask.is_bpa());
        assert!(out.power_used <= pl.p_tot_w);
    }

    #[test]
    fn baseline_single_cluster_is_orthogonal() {
        let grid = build_beam_grid(7, 0.05).unwrap();
        let ant = AntennaModel::new(47.14, -20.0).unwrap();
        let h = build_channel_matrix(&grid, &ant, &[1e-4; 7]).unwrap();
        let pl = payload(112, 1e6);
        let out = allocate_uniform_baseline(&h, &grid, &pl, &EfficiencyModel::Shannon).unwrap();
        for i in 0..7 {
            assert_eq!(out.mask.slots_held(i), 16);
            let u = interference_power(&h, &out.mask, i).unwrap();
            assert!((0..112).filter(|&j| out.mask.is_active(j, i)).all(|j| u[j] == 0.0));
        }
        assert!(out.mask.is_bpa());
    }

    #[test]
    fn baseline_single_beam_uses_one_band() {
        let grid = build_beam_grid(1, 0.05).unwrap();
        let ant = AntennaModel::new(47.14, -20.0).unwrap();
        let h = build_channel_matrix(&grid, &ant, &[1e-4]).unwrap();
        let out = allocate_uniform_baseline(&h, &grid, &payload(112, 1e6), &EfficiencyModel::Shannon)
            .unwrap();
        assert_eq!(out.mask.slots_held(0), 16);
        assert!((0..16).all(|j| out.mask.is_active(j, 0)));
    }

    #[test]
    fn baseline_same_color_beams_share_slots() {
        let grid = build_beam_grid(61, 0.05).unwrap();
        let ant = AntennaModel::new(47.14, -20.0).unwrap();
        let h = build_channel_matrix(&grid, &ant, &[1e-4; 61]).unwrap();
        let out = allocate_uniform_baseline(&h, &grid, &payload(115, 1e6), &EfficiencyModel::Shannon)
            .unwrap();
        let (a, b) = (0..61)
            .flat_map(|a| (0..a).map(move |b| (a, b)))
            .find(|&(a, b)| grid.color(a) == grid.color(b))
            .unwrap();
        assert_eq!(out.mask.entries().column(a), out.mask.entries().column(b));
        // 115 = 7 * 16 + 3: the last band is 19 slots wide
        assert_eq!(reuse_band(6, 115), (96, 115));
        assert!(allocate_uniform_baseline(&h, &grid, &payload(6, 1e6), &EfficiencyModel::Shannon).is_err());
    }

    #[test]
    fn scaled_baseline_is_monotone_in_power() {
        let grid = build_beam_grid(19, 0.05).unwrap();
        let ant = AntennaModel::new(47.14, -20.0).unwrap();
        let h = build_channel_matrix(&grid, &ant, &[1e-4; 19]).unwrap();
        let pl = payload(112, 1e6);
        let mut prev = 0.0;
        for p in [1.0, 4.0, 16.0, 64.0, 256.0] {
            let out = uniform_baseline_with_power(&h, &grid, &pl, &EfficiencyModel::Shannon, p).unwrap();
            assert!((out.power_used - 19.0 * p).abs() < 1e-9 * p * 19.0);
            assert!(out.total_rate() > prev);
            prev = out.total_rate();
        }
    }

    #[test]
    fn trace_csv_has_one_row_per_assignment() {
        let h = flat_channel(3, 0.05);
        let pl = payload(6, 1e6);
        let d = demand(&[5e7, 1e8, 1.5e8]);
        let out = allocate_p1(&P1Problem {
            channel: &h,
            payload: &pl,
            demand: &d,
            model: &EfficiencyModel::Shannon,
            max_outer_iterations: 100,
        })
        .unwrap();
        let mut buf = Vec::new();
        out.write_trace_csv(&mut buf, pl.p_sat_w).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "iteration,beam,slot,power_used,total_rate");
        let n: usize = out.trace.iter().map(|r| r.assignments.len()).sum();
        assert_eq!(lines.len(), n + 1);
        assert!(lines[1].starts_with("1,1,1,4.0,"));
    }
}
