//! Power gain, spectral efficiency and traffic matching ratio.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::p1::{uniform_baseline_with_power, AllocationOutcome};
use crate::p2::SlotAllocation;
use crate::phy::EfficiencyModel;
use crate::scenario::{BeamGrid, ChannelMatrix, DemandVector, PayloadConfig};

/// Relative credited-throughput tolerance for a baseline to count as
/// matched.
pub const MATCH_TOLERANCE: f64 = 0.005;
/// Upper end of the per-beam power search, in units of `P_sat`.
pub const MAX_POWER_FACTOR: f64 = 100.0;

fn relative_gap(a: f64, b: f64) -> f64 {
    if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) }
}

/// `K P_uni / power_used(optimized)` where the baseline radiates `P_uni`
/// per beam. Both outcomes must carry the same credited total within
/// [`MATCH_TOLERANCE`].
pub fn power_gain(optimized: &AllocationOutcome, baseline: &AllocationOutcome) -> Result<f64> {
    let (a, b) = (optimized.total_credited(), baseline.total_credited());
    if relative_gap(a, b) > MATCH_TOLERANCE {
        return Err(Error::Undefined(format!(
            "credited throughputs differ by more than {MATCH_TOLERANCE}: {a} vs {b}"
        )));
    }
    if !(optimized.power_used > 0.0) {
        return Err(Error::Undefined("optimized allocation radiates no power".into()));
    }
    Ok(baseline.power_used / optimized.power_used)
}

pub fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineMatch {
    pub per_beam_power: f64,
    pub outcome: AllocationOutcome,
}

/// Find the uniform per-beam power at which the 7-color baseline carries
/// `target` credited bits/s, by bisection over `[0, 100 P_sat]`.
pub fn match_baseline_power(
    channel: &ChannelMatrix,
    grid: &BeamGrid,
    payload: &PayloadConfig,
    model: &EfficiencyModel,
    demand: &DemandVector,
    target: f64,
) -> Result<BaselineMatch> {
    if !(target > 0.0) {
        return Err(Error::Undefined("target throughput must be positive".into()));
    }
    let eval = |p: f64| -> Result<AllocationOutcome> {
        let mut out = uniform_baseline_with_power(channel, grid, payload, model, p)?;
        out.credit(demand)?;
        Ok(out)
    };
    let mut hi = MAX_POWER_FACTOR * payload.p_sat_w;
    let top = eval(hi)?;
    if top.total_credited() < target * (1.0 - MATCH_TOLERANCE) {
        return Err(Error::Undefined(format!(
            "baseline reaches only {} of {target} bits/s at the search bound",
            top.total_credited()
        )));
    }
    if relative_gap(top.total_credited(), target) <= MATCH_TOLERANCE
        && top.total_credited() <= target
    {
        return Ok(BaselineMatch { per_beam_power: hi, outcome: top });
    }
    let mut lo = 0.0;
    let mut best = top;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let out = eval(mid)?;
        let got = out.total_credited();
        if relative_gap(got, target) <= MATCH_TOLERANCE {
            return Ok(BaselineMatch { per_beam_power: mid, outcome: out });
        }
        if got < target {
            lo = mid;
        } else {
            hi = mid;
            best = out;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    if relative_gap(best.total_credited(), target) <= MATCH_TOLERANCE {
        return Ok(BaselineMatch { per_beam_power: hi, outcome: best });
    }
    Err(Error::Undefined(format!(
        "no baseline power matches {target} bits/s within {MATCH_TOLERANCE}"
    )))
}

/// `sum R_k / sum B_k` with credited rates, over beams that hold at least
/// one slot.
pub fn spectral_efficiency(outcome: &AllocationOutcome, b_tot_hz: f64) -> Result<f64> {
    let bandwidth = outcome.beam_bandwidth(b_tot_hz);
    let (rate, band) = outcome
        .credited_rate
        .iter()
        .zip(&bandwidth)
        .filter(|(_, b)| **b > 0.0)
        .fold((0.0, 0.0), |(r, b), (ri, bi)| (r + ri, b + bi));
    if band <= 0.0 {
        return Err(Error::Undefined("no bandwidth allocated".into()));
    }
    Ok(rate / band)
}

/// `sum min(R_k, R_hat_k) / sum R_hat_k`.
pub fn matching_ratio(outcome: &AllocationOutcome, demand: &DemandVector) -> Result<f64> {
    ratio_of_credited(&outcome.per_beam_rate, demand)
}

fn ratio_of_credited(rates: &[f64], demand: &DemandVector) -> Result<f64> {
    if rates.len() != demand.len() {
        return Err(Error::invalid("rates and demand disagree on beam count"));
    }
    let total = demand.total();
    if !(total > 0.0) {
        return Err(Error::Undefined("total demand is zero".into()));
    }
    let credited: f64 = rates
        .iter()
        .zip(demand.as_slice())
        .map(|(r, d)| r.min(*d))
        .sum();
    Ok(credited / total)
}

/// Spectral efficiency of a slot allocation, each slot spanning `B_tot`
/// for `1 / N_t` of the frame.
pub fn slot_spectral_efficiency(alloc: &SlotAllocation, demand: &DemandVector, b_tot_hz: f64, n_t: usize) -> Result<f64> {
    let band: f64 = alloc.slots.iter().map(|n| n / n_t as f64 * b_tot_hz).sum();
    if band <= 0.0 {
        return Err(Error::Undefined("no slots allocated".into()));
    }
    let credited: f64 = alloc
        .rates
        .iter()
        .zip(demand.as_slice())
        .map(|(r, d)| r.min(*d))
        .sum();
    Ok(credited / band)
}

pub fn slot_matching_ratio(alloc: &SlotAllocation, demand: &DemandVector) -> Result<f64> {
    ratio_of_credited(&alloc.rates, demand)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub k: usize,
    pub beta: f64,
    pub model: String,
    pub domain: String,
    pub allocator: String,
    pub power_gain_db: Option<f64>,
    /// Baseline per-beam power at matched throughput.
    pub matched_power_per_beam_w: Option<f64>,
    /// Why no power gain was emitted.
    pub power_gain_note: Option<String>,
    pub spectral_efficiency: Option<f64>,
    pub matching_ratio: f64,
    pub total_rate: f64,
    pub total_credited: f64,
    pub total_demand: f64,
    pub power_used_w: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::p1::Termination;
    use crate::scenario::Domain;
    use crate::sinr::{ResourceMask, SinrTable};
    use approx::assert_relative_eq;
    use ndarray::Array2;

    fn outcome(slots: &[(usize, usize)], rates: Vec<f64>, n: usize, power: f64) -> AllocationOutcome {
        let k = rates.len();
        let mut mask = ResourceMask::zeros(n, k, Domain::Frequency, 1.0);
        for &(j, i) in slots {
            mask.activate(j, i);
        }
        AllocationOutcome {
            mask,
            credited_rate: rates.clone(),
            per_beam_rate: rates,
            sinr: SinrTable::new(Array2::zeros((k, n)), Domain::Frequency),
            power_used: power,
            trace: Vec::new(),
            termination: Termination::SinglePass,
        }
    }

    #[test]
    fn gain_definition() {
        let a = outcome(&[(0, 0)], vec![10.0], 4, 2.0);
        assert_eq!(power_gain(&a, &a).unwrap(), 1.0);
        let b = outcome(&[(0, 0)], vec![10.02], 4, 4.0);
        assert_relative_eq!(to_db(power_gain(&a, &b).unwrap()), 3.0103, epsilon = 1e-4);
        let far = outcome(&[(0, 0)], vec![11.0], 4, 4.0);
        assert!(power_gain(&a, &far).is_err());
    }

    #[test]
    fn efficiency_examples() {
        // one slot of 1 Hz at gamma = 15
        let one = outcome(&[(0, 0)], vec![4.0], 1, 1.0);
        assert_relative_eq!(spectral_efficiency(&one, 1.0).unwrap(), 4.0);
        // two beams: 1 slot at 2 b/s/Hz, 3 slots at 4 b/s/Hz, plus an idle beam
        let mixed = outcome(&[(0, 0), (1, 1), (2, 1), (3, 1)], vec![2.0, 12.0, 0.0], 4, 4.0);
        assert_relative_eq!(spectral_efficiency(&mixed, 4.0).unwrap(), 14.0 / 4.0);
        let none = outcome(&[], vec![0.0], 4, 0.0);
        assert!(spectral_efficiency(&none, 4.0).is_err());
    }

    #[test]
    fn ratio_examples() {
        let d = DemandVector::new(vec![5.0, 5.0]).unwrap();
        let met = outcome(&[], vec![5.0, 7.0], 2, 0.0);
        assert_eq!(matching_ratio(&met, &d).unwrap(), 1.0);
        let none = outcome(&[], vec![0.0, 0.0], 2, 0.0);
        assert_eq!(matching_ratio(&none, &d).unwrap(), 0.0);
        let part = outcome(&[], vec![2.0, 9.0], 2, 0.0);
        assert_eq!(matching_ratio(&part, &d).unwrap(), 0.7);
        let zero = DemandVector::new(vec![0.0, 0.0]).unwrap();
        assert!(matching_ratio(&none, &zero).is_err());
    }
}
