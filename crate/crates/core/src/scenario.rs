//! Beam layout, antenna pattern, channel matrix and traffic model.
//!
//! Beams sit on a hexagonal lattice inside a fixed circular coverage. The
//! lattice is filled nearest-first from the origin, so `K = 7` is one cluster
//! and `K = 19, 37, 61, ...` are complete hexagonal rings. Every beam carries
//! one representative user at its center, so the channel is a `K x K` matrix
//! `H = diag(alpha) * G` where `G[i][k]` is the gain of feed `k` toward the
//! user of beam `i`.

use std::f64::consts::PI;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of colors in the conventional regular reuse pattern.
pub const REUSE_COLORS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Non-orthogonal frequency reuse: slots are carriers of width `B_tot / N_c`.
    Frequency,
    /// Beam hopping: slots are time slots of a window split in `N_t`.
    Time,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Frequency => "frequency",
            Domain::Time => "time",
        }
    }
}

/// Hexagonal beam layout over a fixed circular coverage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeamGrid {
    /// Beam centers in radians off the nadir axes, nearest-first order.
    pub centers: Vec<[f64; 2]>,
    /// Axial lattice coordinates `(q, r)` of each center.
    pub lattice: Vec<(i64, i64)>,
    /// Distance between adjacent centers, radians.
    pub spacing: f64,
    pub beamwidth_3db: f64,
    pub cluster_size: usize,
    pub coverage_radius: f64,
}

impl BeamGrid {
    pub fn k(&self) -> usize {
        self.centers.len()
    }

    /// Angular distance between the centers of two beams.
    pub fn separation(&self, a: usize, b: usize) -> f64 {
        let [xa, ya] = self.centers[a];
        let [xb, yb] = self.centers[b];
        (xa - xb).hypot(ya - yb)
    }

    /// Reuse color in `0..7`. Adjacent beams always differ and every 7-beam
    /// cluster holds all colors once.
    pub fn color(&self, beam: usize) -> usize {
        let (q, r) = self.lattice[beam];
        (q + 3 * r).rem_euclid(REUSE_COLORS as i64) as usize
    }
}

/// Build a `K`-beam hexagonal layout inside `coverage_radius`.
///
/// Lattice points are taken in increasing distance from the origin (ties by
/// polar angle). The spacing is `2 r / sqrt(K)`, shrunk further when needed so
/// the outermost center stays inside the coverage. The 3 dB beamwidth equals
/// the spacing, which puts adjacent beams' -3 dB contours at their midpoint.
pub fn build_beam_grid(k: usize, coverage_radius: f64) -> Result<BeamGrid> {
    if k == 0 {
        return Err(Error::invalid("beam count K must be positive"));
    }
    if !(coverage_radius > 0.0) || !coverage_radius.is_finite() {
        return Err(Error::invalid(format!(
            "coverage radius must be positive and finite, got {coverage_radius}"
        )));
    }

    let rings = hex_rings_for(k) as i64;
    let bound = 2 * rings + 2;
    let mut points = Vec::new();
    for q in -bound..=bound {
        for r in -bound..=bound {
            let (x, y) = axial_to_unit(q, r);
            let mut angle = y.atan2(x);
            if angle < 0.0 {
                angle += 2.0 * PI;
            }
            points.push((q * q + q * r + r * r, angle, q, r));
        }
    }
    points.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    points.truncate(k);

    let outer = (points[k - 1].0 as f64).sqrt();
    let mut spacing = 2.0 * coverage_radius / (k as f64).sqrt();
    if outer > 0.0 {
        spacing = spacing.min(coverage_radius / outer);
    }

    let lattice: Vec<(i64, i64)> = points.iter().map(|p| (p.2, p.3)).collect();
    let centers = lattice
        .iter()
        .map(|&(q, r)| {
            let (x, y) = axial_to_unit(q, r);
            [x * spacing, y * spacing]
        })
        .collect();

    Ok(BeamGrid {
        centers,
        lattice,
        spacing,
        beamwidth_3db: spacing,
        cluster_size: REUSE_COLORS,
        coverage_radius,
    })
}

fn axial_to_unit(q: i64, r: i64) -> (f64, f64) {
    let (q, r) = (q as f64, r as f64);
    (q + 0.5 * r, r * 3f64.sqrt() / 2.0)
}

/// Smallest `n` with `1 + 3 n (n + 1) >= k`.
fn hex_rings_for(k: usize) -> usize {
    let mut n = 0;
    while 1 + 3 * n * (n + 1) < k {
        n += 1;
    }
    n
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TaperProfile {
    /// `G(theta) = G_max - rolloff_db * (theta / theta_3dB)^2` in dB.
    Parabolic { rolloff_db: f64 },
}

impl Default for TaperProfile {
    fn default() -> Self {
        TaperProfile::Parabolic { rolloff_db: 12.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaModel {
    pub g_max_dbi: f64,
    /// Sidelobe floor relative to the peak, dB (negative).
    pub sidelobe_floor_db: f64,
    pub taper: TaperProfile,
}

impl AntennaModel {
    pub fn new(g_max_dbi: f64, sidelobe_floor_db: f64) -> Result<Self> {
        if !g_max_dbi.is_finite() {
            return Err(Error::invalid("g_max_dbi must be finite"));
        }
        if !(sidelobe_floor_db <= 0.0) {
            return Err(Error::invalid(format!(
                "sidelobe floor must be <= 0 dB relative to peak, got {sidelobe_floor_db}"
            )));
        }
        Ok(Self {
            g_max_dbi,
            sidelobe_floor_db,
            taper: TaperProfile::default(),
        })
    }

    /// Gain in dBi at `theta` off boresight for a beam of the given 3 dB width.
    pub fn gain_dbi(&self, theta: f64, beamwidth_3db: f64) -> f64 {
        let TaperProfile::Parabolic { rolloff_db } = self.taper;
        let u = theta / beamwidth_3db;
        let main_lobe = if u.is_finite() {
            self.g_max_dbi - rolloff_db * u * u
        } else {
            f64::NEG_INFINITY
        };
        main_lobe.max(self.g_max_dbi + self.sidelobe_floor_db)
    }
}

/// Amplitude gain `|g_ij|` of `feed`'s beam toward the user at `target`'s center.
pub fn antenna_gain(
    model: &AntennaModel,
    grid: &BeamGrid,
    feed: usize,
    target: usize,
) -> Result<f64> {
    let k = grid.k();
    if feed >= k || target >= k {
        return Err(Error::invalid(format!(
            "beam index out of range: feed {feed}, target {target}, K = {k}"
        )));
    }
    let theta = grid.separation(feed, target);
    Ok(db_to_amplitude(model.gain_dbi(theta, grid.beamwidth_3db)))
}

pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Overall channel `H = diag(alpha) G`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    h: Array2<Complex64>,
    alpha: Vec<f64>,
    g: Array2<Complex64>,
}

impl ChannelMatrix {
    /// Compose `H` from per-beam attenuation amplitudes and the antenna
    /// gain matrix. Row `i` of `G` holds the gains toward user beam `i`.
    pub fn from_parts(alpha: Vec<f64>, g: Array2<Complex64>) -> Result<Self> {
        let k = alpha.len();
        if g.dim() != (k, k) {
            return Err(Error::invalid(format!(
                "gain matrix is {:?}, expected {k}x{k}",
                g.dim()
            )));
        }
        if let Some(a) = alpha.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(Error::invalid(format!(
                "attenuation factors must be positive, got {a}"
            )));
        }
        let mut h = g.clone();
        for (mut row, &a) in h.rows_mut().into_iter().zip(&alpha) {
            row.mapv_inplace(|v| v * a);
        }
        Ok(Self { h, alpha, g })
    }

    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    pub fn h(&self) -> &Array2<Complex64> {
        &self.h
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn g(&self) -> &Array2<Complex64> {
        &self.g
    }

    /// `|h_ik|^2`.
    pub fn power(&self, i: usize, k: usize) -> f64 {
        self.h[[i, k]].norm_sqr()
    }
}

pub fn build_channel_matrix(
    grid: &BeamGrid,
    antenna: &AntennaModel,
    alpha: &[f64],
) -> Result<ChannelMatrix> {
    let k = grid.k();
    if alpha.len() != k {
        return Err(Error::invalid(format!(
            "alpha has {} entries, grid has {k} beams",
            alpha.len()
        )));
    }
    let mut g = Array2::zeros((k, k));
    for i in 0..k {
        for feed in 0..k {
            g[[i, feed]] = Complex64::new(antenna_gain(antenna, grid, feed, i)?, 0.0);
        }
    }
    ChannelMatrix::from_parts(alpha.to_vec(), g)
}

/// Requested traffic per beam, bits/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DemandVector(Vec<f64>);

impl DemandVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid(format!("demand must be >= 0, got {v}")));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Linear traffic: beam `k` (1-based) requests `k * beta`.
pub fn linear_traffic(k: usize, beta: f64) -> Result<DemandVector> {
    if k == 0 {
        return Err(Error::invalid("beam count K must be positive"));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::invalid(format!("slope beta must be >= 0, got {beta}")));
    }
    DemandVector::new((1..=k).map(|n| n as f64 * beta).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PayloadConfig {
    pub b_tot_hz: f64,
    /// `N_c` carriers or `N_t` time slots.
    pub n_slots: usize,
    pub p_tot_w: f64,
    /// Saturation power of one carrier / slot.
    pub p_sat_w: f64,
    /// Noise power per slot.
    pub sigma2_w: f64,
    pub domain: Domain,
    /// Cells illuminated simultaneously (time domain).
    pub n_re_max: Option<usize>,
}

impl PayloadConfig {
    pub fn validate(&self, k: usize) -> Result<()> {
        if self.n_slots == 0 {
            return Err(Error::invalid("N_slots must be positive"));
        }
        if !(self.b_tot_hz > 0.0) {
            return Err(Error::invalid("B_tot must be positive"));
        }
        if !(self.p_sat_w > 0.0) {
            return Err(Error::invalid("P_sat must be positive"));
        }
        if !(self.p_sat_w <= self.p_tot_w) {
            return Err(Error::invalid(format!(
                "P_sat ({}) exceeds P_tot ({})",
                self.p_sat_w, self.p_tot_w
            )));
        }
        if !(self.sigma2_w > 0.0) {
            return Err(Error::invalid("noise power sigma2 must be positive"));
        }
        if self.domain == Domain::Time {
            match self.n_re_max {
                Some(n) if n >= 1 && n <= k => {}
                Some(n) => {
                    return Err(Error::invalid(format!(
                        "N_re_max = {n} must lie in 1..={k} in the time domain"
                    )))
                }
                None => return Err(Error::invalid("time domain requires N_re_max")),
            }
        }
        Ok(())
    }

    /// Carrier bandwidth `B_c = B_tot / N_c` (or the slot share in time).
    pub fn slot_bandwidth(&self) -> f64 {
        self.b_tot_hz / self.n_slots as f64
    }

    pub fn amplitude(&self) -> f64 {
        self.p_sat_w.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    Uniform(f64),
    PerBeam(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficModel {
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSpec {
    pub model: TrafficModel,
    pub beta: f64,
}

/// On-disk scenario description (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(rename = "K")]
    pub k: usize,
    pub coverage_radius: f64,
    pub g_max_dbi: f64,
    pub sidelobe_floor_db: f64,
    pub alpha: AlphaSpec,
    #[serde(rename = "B_tot_hz")]
    pub b_tot_hz: f64,
    #[serde(rename = "N_slots")]
    pub n_slots: usize,
    #[serde(rename = "P_tot_w")]
    pub p_tot_w: f64,
    #[serde(rename = "P_sat_w")]
    pub p_sat_w: f64,
    pub sigma2_w: f64,
    pub domain: Domain,
    #[serde(rename = "N_re_max", default, skip_serializing_if = "Option::is_none")]
    pub n_re_max: Option<usize>,
    pub traffic: TrafficSpec,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config {
            path: "<inline>".into(),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config is always representable in TOML")
    }

    pub fn payload(&self) -> PayloadConfig {
        PayloadConfig {
            b_tot_hz: self.b_tot_hz,
            n_slots: self.n_slots,
            p_tot_w: self.p_tot_w,
            p_sat_w: self.p_sat_w,
            sigma2_w: self.sigma2_w,
            domain: self.domain,
            n_re_max: self.n_re_max,
        }
    }

    pub fn alpha_vector(&self) -> Result<Vec<f64>> {
        match &self.alpha {
            AlphaSpec::Uniform(a) => Ok(vec![*a; self.k]),
            AlphaSpec::PerBeam(v) if v.len() == self.k => Ok(v.clone()),
            AlphaSpec::PerBeam(v) => Err(Error::invalid(format!(
                "alpha lists {} values for K = {}",
                v.len(),
                self.k
            ))),
        }
    }

    pub fn build(&self) -> Result<Scenario> {
        let grid = build_beam_grid(self.k, self.coverage_radius)?;
        let antenna = AntennaModel::new(self.g_max_dbi, self.sidelobe_floor_db)?;
        let channel = build_channel_matrix(&grid, &antenna, &self.alpha_vector()?)?;
        let payload = self.payload();
        payload.validate(self.k)?;
        let demand = match self.traffic.model {
            TrafficModel::Linear => linear_traffic(self.k, self.traffic.beta)?,
        };
        Ok(Scenario {
            grid,
            antenna,
            channel,
            payload,
            demand,
        })
    }
}

/// A fully built scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub grid: BeamGrid,
    pub antenna: AntennaModel,
    pub channel: ChannelMatrix,
    pub payload: PayloadConfig,
    pub demand: DemandVector,
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ScenarioConfig::load(path)?.build()
    }
}
