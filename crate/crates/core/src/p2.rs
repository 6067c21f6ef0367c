//! Interference-free time-slot allocation in closed form.
//!
//! With no co-channel interference every beam has a fixed rate per slot,
//! `B_tot * log2(1 + gamma_i) / N_t`, and the slot counts `N_i` are chosen
//! against a budget of `N_re_max * N_t` beam-slots. Two costs are solved:
//! an n-th order deviation `sum |R_i - R_hat_i|^n` and a weighted proportional
//! fairness. Slot counts are continuous.
//!
//! [`oracle_numeric`] solves the same problems by projected gradient and is
//! only meant for verification.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scenario::{ChannelMatrix, DemandVector, PayloadConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct P2Problem {
    pub demand: DemandVector,
    /// Linear interference-free SINR per beam.
    pub gamma: Vec<f64>,
    /// Priority weights, used by the fairness cost only.
    pub weights: Vec<f64>,
    pub b_tot_hz: f64,
    pub n_t: usize,
    pub n_re_max: usize,
    /// Exponent of the deviation cost, `>= 2`.
    pub order_n: u32,
}

impl P2Problem {
    /// Problem with unit weights and `n = 2`.
    pub fn new(
        demand: DemandVector,
        gamma: Vec<f64>,
        b_tot_hz: f64,
        n_t: usize,
        n_re_max: usize,
    ) -> Result<Self> {
        let k = demand.len();
        let p = P2Problem {
            demand,
            gamma,
            weights: vec![1.0; k],
            b_tot_hz,
            n_t,
            n_re_max,
            order_n: 2,
        };
        p.validate()?;
        Ok(p)
    }

    /// Build from a scenario's channel; `gamma_i = |h_ii|^2 P_sat / sigma^2`.
    pub fn from_channel(
        channel: &ChannelMatrix,
        payload: &PayloadConfig,
        demand: &DemandVector,
    ) -> Result<Self> {
        let k = channel.k();
        payload.validate(k)?;
        let n_re_max = payload
            .n_re_max
            .ok_or_else(|| Error::invalid("slot allocation needs N_re_max"))?;
        Self::new(
            demand.clone(),
            interference_free_gamma(channel, payload),
            payload.b_tot_hz,
            payload.n_slots,
            n_re_max,
        )
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        self.weights = weights;
        self.validate()?;
        Ok(self)
    }

    pub fn with_order(mut self, order_n: u32) -> Result<Self> {
        self.order_n = order_n;
        self.validate()?;
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.demand.len()
    }

    /// Beam-slot budget `N_re_max * N_t`.
    pub fn budget(&self) -> f64 {
        (self.n_re_max * self.n_t) as f64
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 {
            return Err(Error::invalid("no beams"));
        }
        if self.gamma.len() != k || self.weights.len() != k {
            return Err(Error::invalid("gamma, weights and demand must have equal length"));
        }
        if let Some(g) = self.gamma.iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
            return Err(Error::invalid(format!("gamma must be positive, got {g}")));
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::invalid(format!("weights must be positive, got {w}")));
        }
        if !(self.b_tot_hz > 0.0) || !self.b_tot_hz.is_finite() {
            return Err(Error::invalid("B_tot must be positive"));
        }
        if self.n_t == 0 || self.n_re_max == 0 {
            return Err(Error::invalid("N_t and N_re_max must be positive"));
        }
        if self.order_n < 2 {
            return Err(Error::invalid(format!("order n must be >= 2, got {}", self.order_n)));
        }
        Ok(())
    }

    /// Slots per bit/s for each beam, `N_t / (B_tot log2(1 + gamma_i))`.
    fn slot_cost(&self) -> Vec<f64> {
        self.gamma
            .iter()
            .map(|g| self.n_t as f64 / (self.b_tot_hz * (1.0 + g).log2()))
            .collect()
    }

    /// Slot count that exactly meets each beam's demand.
    pub fn demand_exact(&self) -> Vec<f64> {
        self.slot_cost()
            .iter()
            .zip(self.demand.as_slice())
            .map(|(c, r)| c * r)
            .collect()
    }
}

/// `|h_ii|^2 P_sat / sigma^2` for every beam.
pub fn interference_free_gamma(channel: &ChannelMatrix, payload: &PayloadConfig) -> Vec<f64> {
    (0..channel.k())
        .map(|i| channel.power(i, i) * payload.p_sat_w / payload.sigma2_w)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotAllocation {
    pub slots: Vec<f64>,
    pub rates: Vec<f64>,
    /// Beams forced to zero slots.
    pub clamped: Vec<usize>,
    /// Beams held at their demand-exact slot count.
    pub capped: Vec<usize>,
    pub lambda: f64,
    /// Budget left unused because every beam's demand is met.
    pub leftover: f64,
    /// False only for an oracle run that hit its step budget.
    pub converged: bool,
}

impl SlotAllocation {
    fn finish(problem: &P2Problem, slots: Vec<f64>) -> Self {
        let rates = slots_to_throughput_raw(problem, &slots);
        let leftover = (problem.budget() - slots.iter().sum::<f64>()).max(0.0);
        SlotAllocation {
            slots,
            rates,
            clamped: Vec::new(),
            capped: Vec::new(),
            lambda: 0.0,
            leftover,
            converged: true,
        }
    }

    pub fn total_slots(&self) -> f64 {
        self.slots.iter().sum()
    }

    /// CSV with columns `beam,demand,N_slots,rate`, beams 1-based.
    pub fn write_csv(&self, writer: impl Write, demand: &DemandVector) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            beam: usize,
            demand: f64,
            #[serde(rename = "N_slots")]
            n_slots: f64,
            rate: f64,
        }
        let mut w = csv::Writer::from_writer(writer);
        for (i, ((n, r), d)) in self
            .slots
            .iter()
            .zip(&self.rates)
            .zip(demand.as_slice())
            .enumerate()
        {
            w.serialize(Row {
                beam: i + 1,
                demand: *d,
                n_slots: *n,
                rate: *r,
            })?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

fn slots_to_throughput_raw(problem: &P2Problem, slots: &[f64]) -> Vec<f64> {
    slots
        .iter()
        .zip(&problem.gamma)
        .map(|(n, g)| n / problem.n_t as f64 * problem.b_tot_hz * (1.0 + g).log2())
        .collect()
}

/// `R_i = (N_i / N_t) B_tot log2(1 + gamma_i)`.
pub fn slots_to_throughput(alloc: &SlotAllocation, problem: &P2Problem) -> Result<Vec<f64>> {
    problem.validate()?;
    if alloc.slots.len() != problem.k() {
        return Err(Error::invalid("allocation length does not match beam count"));
    }
    if alloc.slots.iter().any(|n| !(*n >= 0.0)) {
        return Err(Error::invalid("slot counts must be non-negative"));
    }
    Ok(slots_to_throughput_raw(problem, &alloc.slots))
}

/// Minimize `sum |R_i - R_hat_i|^n` subject to the slot budget, `N_i >= 0`
/// and `R_i <= R_hat_i`.
///
/// Stationarity gives `N_i = d_i - mu * c_i^p` with `p = n / (n - 1)`, `c_i`
/// the slot cost and `d_i` the demand-exact count. Beams driven negative are
/// pinned to zero and `mu` is re-solved over the rest until none is negative.
/// When the budget exceeds total demand every beam is capped at `d_i`.
pub fn solve_nth_order(problem: &P2Problem) -> Result<SlotAllocation> {
    problem.validate()?;
    let k = problem.k();
    let cost = problem.slot_cost();
    let exact = problem.demand_exact();
    let budget = problem.budget();
    let n = problem.order_n as f64;
    let p = n / (n - 1.0);
    let weight: Vec<f64> = cost.iter().map(|c| c.powf(p)).collect();

    let total_exact: f64 = exact.iter().sum();
    if total_exact <= budget {
        let mut alloc = SlotAllocation::finish(problem, exact);
        alloc.capped = (0..k).filter(|&i| problem.demand.as_slice()[i] > 0.0).collect();
        return Ok(alloc);
    }

    let mut active: Vec<bool> = vec![true; k];
    let mut slots = vec![0.0; k];
    let mu = loop {
        let (num, den) = (0..k).filter(|&i| active[i]).fold((0.0, 0.0), |(a, b), i| {
            (a + exact[i], b + weight[i])
        });
        let mu = (num - budget) / den;
        let mut dropped = false;
        for i in 0..k {
            if active[i] {
                let v = exact[i] - mu * weight[i];
                if v < 0.0 {
                    active[i] = false;
                    dropped = true;
                } else {
                    slots[i] = v;
                }
            }
        }
        if !dropped {
            break mu;
        }
    };
    for i in 0..k {
        if !active[i] {
            slots[i] = 0.0;
        }
    }
    let mut alloc = SlotAllocation::finish(problem, slots);
    alloc.clamped = (0..k).filter(|&i| !active[i]).collect();
    alloc.lambda = n * mu.powf(n - 1.0);
    alloc.leftover = 0.0;
    Ok(alloc)
}

/// Maximize `sum u_i ln(N_i)` with `u_i = w_i d_i`, which yields slot counts
/// proportional to `w_i R_hat_i / log2(1 + gamma_i)`. Beams whose share
/// would exceed `d_i` are capped there and the released budget is shared
/// over the remaining beams in the same proportion.
pub fn solve_fairness(problem: &P2Problem) -> Result<SlotAllocation> {
    problem.validate()?;
    let k = problem.k();
    let exact = problem.demand_exact();
    let score: Vec<f64> = exact
        .iter()
        .zip(&problem.weights)
        .map(|(d, w)| w * d)
        .collect();
    let budget = problem.budget();

    let mut capped = vec![false; k];
    let mut slots = vec![0.0; k];
    let mut lambda = 0.0;
    loop {
        let spare = budget - (0..k).filter(|&i| capped[i]).map(|i| exact[i]).sum::<f64>();
        let mass: f64 = (0..k).filter(|&i| !capped[i]).map(|i| score[i]).sum();
        if mass <= 0.0 {
            break;
        }
        let mut newly = false;
        for i in 0..k {
            if capped[i] {
                continue;
            }
            let v = score[i] * spare / mass;
            if v > exact[i] {
                capped[i] = true;
                newly = true;
            }
        }
        if !newly {
            for i in 0..k {
                slots[i] = if capped[i] { exact[i] } else { score[i] * spare / mass };
            }
            lambda = mass / (spare * std::f64::consts::LN_2);
            break;
        }
    }
    if capped.iter().all(|c| *c) || score.iter().all(|s| *s == 0.0) {
        slots = exact;
    }
    let mut alloc = SlotAllocation::finish(problem, slots);
    alloc.capped = (0..k).filter(|&i| capped[i]).collect();
    alloc.clamped = (0..k).filter(|&i| alloc.slots[i] == 0.0).collect();
    alloc.lambda = lambda;
    Ok(alloc)
}

/// Round to whole slots with the largest-remainder method. The rounded total
/// equals the rounded continuous total; ties go to the lower beam index.
pub fn round_largest_remainder(alloc: &SlotAllocation, problem: &P2Problem) -> Result<SlotAllocation> {
    let target = alloc.total_slots().round() as i64;
    let mut floors: Vec<f64> = alloc.slots.iter().map(|n| n.floor()).collect();
    let mut remaining = target - floors.iter().sum::<f64>() as i64;
    let mut order: Vec<usize> = (0..floors.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = alloc.slots[a] - floors[a];
        let rb = alloc.slots[b] - floors[b];
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(order.len() * 2) {
        if remaining <= 0 {
            break;
        }
        floors[i] += 1.0;
        remaining -= 1;
    }
    let mut out = alloc.clone();
    out.rates = slots_to_throughput(&SlotAllocation { slots: floors.clone(), ..alloc.clone() }, problem)?;
    out.slots = floors;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    NthOrder,
    Fairness,
}

/// Cost minimized by each solver at slot vector `slots`. For the n-th order
/// cost this is `sum |R_i - R_hat_i|^n`; for fairness it is
/// `-sum u_i ln(N_i / d_i)` with `u_i = w_i d_i`.
pub fn objective_value(problem: &P2Problem, objective: Objective, slots: &[f64]) -> f64 {
    let rates = slots_to_throughput_raw(problem, slots);
    match objective {
        Objective::NthOrder => rates
            .iter()
            .zip(problem.demand.as_slice())
            .map(|(r, d)| (r - d).abs().powi(problem.order_n as i32))
            .sum(),
        Objective::Fairness => problem
            .demand_exact()
            .iter()
            .zip(&problem.weights)
            .zip(slots)
            .filter(|((d, _), _)| **d > 0.0)
            .map(|((d, w), n)| -w * d * (n / d).ln())
            .sum(),
    }
}

const ORACLE_STARTS: usize = 10;
const ORACLE_MAX_STEPS: usize = 20_000;
const ORACLE_FTOL: f64 = 1e-9;

/// Scaled copy of the problem over `x = N / budget`.
struct Scaled {
    objective: Objective,
    order: i32,
    /// Upper bounds `d_i / budget`.
    upper: Vec<f64>,
    lower: Vec<f64>,
    /// Per-beam factor turning slot shortfall into a normalized rate gap,
    /// or fairness weight normalized to sum 1.
    factor: Vec<f64>,
}

impl Scaled {
    fn new(problem: &P2Problem, objective: Objective) -> Self {
        let budget = problem.budget();
        let exact = problem.demand_exact();
        let upper: Vec<f64> = exact.iter().map(|d| d / budget).collect();
        let factor = match objective {
            Objective::NthOrder => {
                let rate_scale = problem
                    .demand
                    .as_slice()
                    .iter()
                    .fold(0.0f64, |a, b| a.max(*b))
                    .max(f64::MIN_POSITIVE);
                problem
                    .slot_cost()
                    .iter()
                    .map(|c| budget / (c * rate_scale))
                    .collect()
            }
            Objective::Fairness => {
                let u: Vec<f64> = exact.iter().zip(&problem.weights).map(|(d, w)| w * d).collect();
                let total: f64 = u.iter().sum::<f64>().max(f64::MIN_POSITIVE);
                u.iter().map(|v| v / total).collect()
            }
        };
        let lower = match objective {
            Objective::NthOrder => vec![0.0; upper.len()],
            // keep logarithms finite
            Objective::Fairness => upper.iter().map(|u| u * 1e-12).collect(),
        };
        Scaled {
            objective,
            order: problem.order_n as i32,
            upper,
            lower,
            factor,
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self.objective {
            Objective::NthOrder => x
                .iter()
                .zip(&self.upper)
                .zip(&self.factor)
                .map(|((x, u), f)| ((u - x) * f).abs().powi(self.order))
                .sum(),
            Objective::Fairness => x
                .iter()
                .zip(&self.upper)
                .zip(&self.factor)
                .filter(|((_, u), _)| **u > 0.0)
                .map(|((x, u), f)| -f * (x / u).ln())
                .sum(),
        }
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..x.len() {
            out[i] = match self.objective {
                Objective::NthOrder => {
                    let gap = (self.upper[i] - x[i]) * self.factor[i];
                    -(self.order as f64) * gap.abs().powi(self.order - 1) * gap.signum() * self.factor[i]
                }
                Objective::Fairness if self.upper[i] > 0.0 => -self.factor[i] / x[i],
                Objective::Fairness => 0.0,
            };
        }
    }

    /// Euclidean projection onto `{lower <= x <= upper, sum x <= 1}`.
    fn project(&self, y: &[f64], out: &mut [f64]) {
        let clip = |t: f64, out: &mut [f64]| -> f64 {
            let mut s = 0.0;
            for i in 0..y.len() {
                out[i] = (y[i] - t).clamp(self.lower[i], self.upper[i]);
                s += out[i];
            }
            s
        };
        if clip(0.0, out) <= 1.0 {
            return;
        }
        let mut lo = 0.0;
        let mut hi = y
            .iter()
            .zip(&self.lower)
            .fold(0.0f64, |a, (y, l)| a.max(y - l));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if clip(mid, out) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
                break;
            }
        }
        clip(hi, out);
    }
}

/// Spectral projected gradient from one start. Returns `(x, value, converged)`.
fn spg(s: &Scaled, start: &[f64]) -> (Vec<f64>, f64, bool) {
    let k = start.len();
    let mut x = vec![0.0; k];
    s.project(start, &mut x);
    let mut f = s.value(&x);
    let mut g = vec![0.0; k];
    s.gradient(&x, &mut g);
    let mut step = 1.0;
    let mut trial = vec![0.0; k];
    let mut cand = vec![0.0; k];
    let mut g_new = vec![0.0; k];
    let mut quiet = 0;
    for _ in 0..ORACLE_MAX_STEPS {
        for i in 0..k {
            trial[i] = x[i] - step * g[i];
        }
        s.project(&trial, &mut cand);
        let dir: Vec<f64> = cand.iter().zip(&x).map(|(c, x)| c - x).collect();
        let slope: f64 = dir.iter().zip(&g).map(|(d, g)| d * g).sum();
        if dir.iter().all(|d| d.abs() <= 1e-15) || slope >= 0.0 {
            return (x, f, true);
        }
        let mut t = 1.0;
        let mut f_new;
        loop {
            for i in 0..k {
                cand[i] = x[i] + t * dir[i];
            }
            f_new = s.value(&cand);
            if f_new <= f + 1e-4 * t * slope || t < 1e-20 {
                break;
            }
            t *= 0.5;
        }
        s.gradient(&cand, &mut g_new);
        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..k {
            let si = cand[i] - x[i];
            ss += si * si;
            sy += si * (g_new[i] - g[i]);
        }
        step = if sy > 0.0 { (ss / sy).clamp(1e-30, 1e30) } else { 1e6 };
        let change = (f - f_new).abs();
        std::mem::swap(&mut x, &mut cand);
        std::mem::swap(&mut g, &mut g_new);
        f = f_new;
        if change <= ORACLE_FTOL * f.abs().max(1e-300) || change == 0.0 {
            quiet += 1;
            if quiet >= 5 {
                return (x, f, true);
            }
        } else {
            quiet = 0;
        }
    }
    (x, f, false)
}

/// Numeric solution of either slot problem by projected gradient over
/// `{0 <= N_i <= d_i, sum N_i <= N_re_max N_t}`, from
/// several seeded random starts. The best result is returned;
/// `converged` is false if every start ran out of steps.
pub fn oracle_numeric(problem: &P2Problem, objective: Objective, seed: u64) -> Result<SlotAllocation> {
    problem.validate()?;
    if problem.k() > 64 {
        return Err(Error::invalid("oracle is limited to 64 beams"));
    }
    let scaled = Scaled::new(problem, objective);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    let mut any_converged = false;
    for _ in 0..ORACLE_STARTS {
        let start: Vec<f64> = scaled
            .upper
            .iter()
            .map(|u| rng.random::<f64>() * u)
            .collect();
        let run = spg(&scaled, &start);
        any_converged |= run.2;
        if best.as_ref().is_none_or(|b| run.1 < b.1) {
            best = Some(run);
        }
    }
    let (x, _, _) = best.expect("at least one start");
    let budget = problem.budget();
    let slots: Vec<f64> = x.iter().map(|v| v * budget).collect();
    let mut alloc = SlotAllocation::finish(problem, slots);
    alloc.converged = any_converged;
    Ok(alloc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::linear_traffic;
    use approx::assert_relative_eq;

    fn problem(demand: Vec<f64>, gamma: Vec<f64>) -> P2Problem {
        P2Problem::new(DemandVector::new(demand).unwrap(), gamma, 500e6, 32, 8).unwrap()
    }

    #[test]
    fn throughput_examples() {
        let p = problem(vec![1e9, 1e9], vec![15.0, 1.0]);
        let alloc = SlotAllocation::finish(&p, vec![8.0, 32.0]);
        let r = slots_to_throughput(&alloc, &p).unwrap();
        assert_relative_eq!(r[0], 500e6, max_relative = 1e-15);
        assert_relative_eq!(r[1], 500e6, max_relative = 1e-15);
        let zero = SlotAllocation::finish(&p, vec![0.0, 0.0]);
        assert_eq!(slots_to_throughput(&zero, &p).unwrap(), vec![0.0, 0.0]);
        assert_eq!(zero.rates, vec![0.0, 0.0]);
    }

    #[test]
    fn symmetric_split() {
        let p = problem(vec![1e10; 4], vec![10.0; 4]);
        for alloc in [solve_nth_order(&p).unwrap(), solve_fairness(&p).unwrap()] {
            for n in &alloc.slots {
                assert_relative_eq!(*n, 64.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn exact_budget_gives_demand_exact() {
        let gamma = vec![3.0, 7.0, 15.0, 31.0];
        let base = problem(vec![1.0; 4], gamma.clone());
        let cost = base.slot_cost();
        // demands chosen so that demand-exact counts sum to 256
        let shares = [40.0, 56.0, 72.0, 88.0];
        let demand: Vec<f64> = shares.iter().zip(&cost).map(|(s, c)| s / c).collect();
        let p = problem(demand, gamma);
        let alloc = solve_nth_order(&p).unwrap();
        for (n, s) in alloc.slots.iter().zip(shares) {
            assert_relative_eq!(*n, s, max_relative = 1e-12);
        }
        assert!(alloc.lambda.abs() < 1e-9);
    }

    #[test]
    fn nth_order_clamps_low_demand_first() {
        let p = P2Problem::new(linear_traffic(4, 3e7).unwrap(), vec![1.0; 4], 500e6, 32, 1).unwrap();
        // demand-exact slots 1.92 * i, budget 32: no clamping
        let alloc = solve_nth_order(&p).unwrap();
        assert!(alloc.clamped.is_empty());
        let tight = P2Problem { n_re_max: 1, b_tot_hz: 40e6, ..p.clone() };
        let alloc = solve_nth_order(&tight).unwrap();
        assert_eq!(alloc.clamped, vec![0, 1]);
        assert_relative_eq!(alloc.slots[2], 4.0, max_relative = 1e-12);
        assert_relative_eq!(alloc.total_slots(), 32.0, max_relative = 1e-12);
        let oracle = oracle_numeric(&tight, Objective::NthOrder, 7).unwrap();
        let a = objective_value(&tight, Objective::NthOrder, &alloc.slots);
        let b = objective_value(&tight, Objective::NthOrder, &oracle.slots);
        assert_relative_eq!(a, b, max_relative = 1e-6);
    }

    #[test]
    fn fairness_weight_scale_cancels() {
        let p = problem(vec![2e10, 5e10, 1e10], vec![5.0, 9.0, 20.0])
            .with_weights(vec![1.0, 2.0, 3.0])
            .unwrap();
        let doubled = p.clone().with_weights(vec![2.0, 4.0, 6.0]).unwrap();
        let a = solve_fairness(&p).unwrap();
        let b = solve_fairness(&doubled).unwrap();
        for (x, y) in a.slots.iter().zip(&b.slots) {
            assert_relative_eq!(*x, *y, max_relative = 1e-12);
        }
        assert_relative_eq!(a.total_slots(), 256.0, max_relative = 1e-12);
    }

    #[test]
    fn fairness_caps_release_budget() {
        let p = problem(vec![1e7, 5e10, 5e10], vec![15.0; 3]);
        let alloc = solve_fairness(&p).unwrap();
        assert_eq!(alloc.capped, Vec::<usize>::new());
        let generous = problem(vec![1e8, 2e10, 2e10], vec![15.0; 3])
            .with_weights(vec![100.0, 1.0, 1.0])
            .unwrap();
        let alloc = solve_fairness(&generous).unwrap();
        assert_eq!(alloc.capped, vec![0]);
        assert!(alloc.rates[0] <= 1e8 * (1.0 + 1e-12));
        assert_relative_eq!(alloc.slots[1], alloc.slots[2], max_relative = 1e-12);
        assert_relative_eq!(alloc.total_slots(), 256.0, max_relative = 1e-12);
    }

    #[test]
    fn oversized_budget_flags_leftover() {
        let p = problem(vec![1e7, 2e7], vec![15.0; 2]);
        for alloc in [solve_nth_order(&p).unwrap(), solve_fairness(&p).unwrap()] {
            assert!(alloc.leftover > 0.0);
            assert_relative_eq!(alloc.rates[0], 1e7, max_relative = 1e-12);
            assert_relative_eq!(alloc.rates[1], 2e7, max_relative = 1e-12);
        }
    }

    #[test]
    fn oracle_tiny_weight_starves_beam() {
        let p = problem(vec![5e10; 3], vec![15.0; 3])
            .with_weights(vec![1e-12, 1.0, 1.0])
            .unwrap();
        let alloc = oracle_numeric(&p, Objective::Fairness, 1).unwrap();
        assert!(alloc.slots[0] < 1e-6 * alloc.slots[1]);
        let closed = solve_fairness(&p).unwrap();
        assert!(closed.slots[0] < 1e-9);
    }

    #[test]
    fn rounding_keeps_budget() {
        let p = problem(vec![9e9, 12e9, 15e9], vec![7.0, 11.0, 13.0]);
        let alloc = solve_nth_order(&p).unwrap();
        let r = round_largest_remainder(&alloc, &p).unwrap();
        assert_eq!(r.total_slots(), 256.0);
        assert!(r.slots.iter().all(|n| n.fract() == 0.0));
        for (a, b) in r.slots.iter().zip(&alloc.slots) {
            assert!((a - b).abs() < 1.0);
        }
    }

    #[test]
    fn invalid_problems() {
        let d = DemandVector::new(vec![1.0, 2.0]).unwrap();
        assert!(P2Problem::new(d.clone(), vec![1.0, 0.0], 1e6, 32, 8).is_err());
        assert!(P2Problem::new(d.clone(), vec![1.0], 1e6, 32, 8).is_err());
        assert!(P2Problem::new(d.clone(), vec![1.0, 1.0], 1e6, 0, 8).is_err());
        let p = P2Problem::new(d, vec![1.0, 1.0], 1e6, 32, 8).unwrap();
        assert!(p.clone().with_order(1).is_err());
        assert!(p.with_weights(vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn csv_layout() {
        let p = problem(vec![1e9, 2e9], vec![15.0; 2]);
        let alloc = solve_fairness(&p).unwrap();
        let mut buf = Vec::new();
        alloc.write_csv(&mut buf, &p.demand).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("beam,demand,N_slots,rate\n1,1000000000.0,"));
        assert_eq!(text.lines().count(), 3);
    }
}
