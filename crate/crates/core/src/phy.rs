//! SINR to spectral efficiency, and per-beam throughput.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sinr::SinrTable;

const EMBEDDED_DVBS2: &str = include_str!("../data/dvbs2_modcods_v1.csv");

/// Version of the embedded ModCod table.
pub const DVBS2_TABLE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Modcod {
    pub name: String,
    pub es_n0_db: f64,
    pub efficiency: f64,
}

/// ModCods usable under ideal ACM, sorted by threshold.
///
/// Only the efficient frontier is kept: a ModCod whose efficiency does not
/// exceed that of some ModCod with a lower or equal threshold is never the
/// best choice, so thresholds and efficiencies are both strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModcodTable {
    entries: Vec<Modcod>,
    margin_db: f64,
}

impl ModcodTable {
    pub fn new(mut candidates: Vec<Modcod>, margin_db: f64) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::invalid("ModCod table is empty"));
        }
        if let Some(m) = candidates
            .iter()
            .find(|m| !m.es_n0_db.is_finite() || !(m.efficiency > 0.0) || !m.efficiency.is_finite())
        {
            return Err(Error::invalid(format!("bad ModCod row {:?}", m.name)));
        }
        if !margin_db.is_finite() {
            return Err(Error::invalid("ModCod margin must be finite"));
        }
        candidates.sort_by(|a, b| {
            a.es_n0_db
                .total_cmp(&b.es_n0_db)
                .then(b.efficiency.total_cmp(&a.efficiency))
        });
        let mut entries: Vec<Modcod> = Vec::with_capacity(candidates.len());
        for m in candidates {
            match entries.last() {
                Some(last) if m.efficiency <= last.efficiency => continue,
                Some(last) if m.es_n0_db == last.es_n0_db => continue,
                _ => entries.push(m),
            }
        }
        Ok(Self { entries, margin_db })
    }

    /// The embedded DVB-S2 normal-frame table.
    pub fn dvbs2() -> Self {
        Self::from_reader(EMBEDDED_DVBS2.as_bytes(), 0.0).expect("embedded ModCod table is valid")
    }

    /// Parse a CSV with columns `name, es_n0_db, efficiency`; `#` lines are comments.
    pub fn from_reader(reader: impl Read, margin_db: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<Modcod>, _>>()?;
        Self::new(rows, margin_db)
    }

    pub fn from_csv_path(path: impl AsRef<Path>, margin_db: f64) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file, margin_db)
    }

    pub fn with_margin(mut self, margin_db: f64) -> Self {
        self.margin_db = margin_db;
        self
    }

    pub fn entries(&self) -> &[Modcod] {
        &self.entries
    }

    pub fn margin_db(&self) -> f64 {
        self.margin_db
    }

    /// Highest ModCod closing at `sinr_db`, if any.
    pub fn select(&self, sinr_db: f64) -> Option<&Modcod> {
        let idx = self
            .entries
            .partition_point(|m| m.es_n0_db + self.margin_db <= sinr_db);
        idx.checked_sub(1).map(|i| &self.entries[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EfficiencyModel {
    /// `log2(1 + gamma)`.
    Shannon,
    /// Step function over a ModCod table.
    Dvbs2(ModcodTable),
}

impl EfficiencyModel {
    pub fn dvbs2() -> Self {
        EfficiencyModel::Dvbs2(ModcodTable::dvbs2())
    }

    pub fn name(&self) -> &'static str {
        match self {
            EfficiencyModel::Shannon => "shannon",
            EfficiencyModel::Dvbs2(_) => "dvbs2",
        }
    }

    /// Spectral efficiency in bits/s/Hz at linear SINR `gamma`.
    pub fn efficiency(&self, gamma: f64) -> Result<f64> {
        if !(gamma >= 0.0) {
            return Err(Error::invalid(format!("SINR must be >= 0, got {gamma}")));
        }
        Ok(self.eta(gamma))
    }

    /// Unchecked variant for tables whose entries are already known to be valid.
    pub(crate) fn eta(&self, gamma: f64) -> f64 {
        match self {
            EfficiencyModel::Shannon => (1.0 + gamma).log2(),
            EfficiencyModel::Dvbs2(table) => {
                if gamma <= 0.0 {
                    return 0.0;
                }
                table
                    .select(10.0 * gamma.log10())
                    .map_or(0.0, |m| m.efficiency)
            }
        }
    }
}

impl fmt::Display for EfficiencyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EfficiencyModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shannon" => Ok(EfficiencyModel::Shannon),
            "dvbs2" | "dvb-s2" => Ok(EfficiencyModel::dvbs2()),
            other => Err(Error::invalid(format!(
                "unknown efficiency model {other:?} (expected shannon or dvbs2)"
            ))),
        }
    }
}

/// `R_i = (B_tot / N) * sum_j f(gamma_ij)`.
pub fn beam_throughput(
    table: &SinrTable,
    model: &EfficiencyModel,
    b_tot_hz: f64,
    n: usize,
    i: usize,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("slot count N must be positive"));
    }
    if table.n_slots() != n {
        return Err(Error::invalid(format!(
            "SINR table has {} slots, expected {n}",
            table.n_slots()
        )));
    }
    if i >= table.k() {
        return Err(Error::invalid(format!("beam {i} out of range")));
    }
    Ok(beam_throughput_unchecked(table, model, b_tot_hz / n as f64, i))
}

pub(crate) fn beam_throughput_unchecked(
    table: &SinrTable,
    model: &EfficiencyModel,
    slot_bandwidth: f64,
    i: usize,
) -> f64 {
    slot_bandwidth
        * table
            .gamma()
            .row(i)
            .iter()
            .map(|&g| if g > 0.0 { model.eta(g) } else { 0.0 })
            .sum::<f64>()
}

/// Throughput of every beam in one pass.
pub fn all_throughputs(table: &SinrTable, model: &EfficiencyModel, b_tot_hz: f64) -> Vec<f64> {
    let bc = b_tot_hz / table.n_slots() as f64;
    (0..table.k())
        .map(|i| beam_throughput_unchecked(table, model, bc, i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Domain;
    use ndarray::Array2;
    use proptest::prelude::*;

    #[test]
    fn shannon_values() {
        let m = EfficiencyModel::Shannon;
        assert_eq!(m.efficiency(1.0).unwrap(), 1.0);
        assert_eq!(m.efficiency(0.0).unwrap(), 0.0);
        assert_eq!(m.efficiency(15.0).unwrap(), 4.0);
        assert!(m.efficiency(-0.1).is_err());
        assert!(m.efficiency(f64::NAN).is_err());
    }

    #[test]
    fn dvbs2_outage_and_steps() {
        let m = EfficiencyModel::dvbs2();
        assert_eq!(m.efficiency(0.0).unwrap(), 0.0);
        assert_eq!(m.efficiency(10f64.powf(-0.3)).unwrap(), 0.0);
        // just above the QPSK 1/2 threshold
        assert_eq!(m.efficiency(10f64.powf(0.1001)).unwrap(), 0.988858);
        assert_eq!(m.efficiency(10f64.powf(0.0999)).unwrap(), 0.789412);
        assert_eq!(m.efficiency(1e6).unwrap(), 4.453027);
    }

    #[test]
    fn embedded_table_is_a_strict_frontier() {
        let t = ModcodTable::dvbs2();
        assert!(t.entries().len() < 28);
        for w in t.entries().windows(2) {
            assert!(w[0].es_n0_db < w[1].es_n0_db);
            assert!(w[0].efficiency < w[1].efficiency);
        }
        // 8PSK 3/5 outperforms QPSK 8/9 at lower SNR, so QPSK 8/9 is dropped
        assert!(t.entries().iter().all(|m| m.name != "QPSK 8/9"));
    }

    #[test]
    fn margin_shifts_thresholds() {
        let m = EfficiencyModel::Dvbs2(ModcodTable::dvbs2().with_margin(1.0));
        assert_eq!(m.efficiency(10f64.powf(0.1001)).unwrap(), 0.789412);
    }

    #[test]
    fn csv_override() {
        let csv = "name,es_n0_db,efficiency\nA,0.0,1.0\nB,10.0,3.0\n";
        let t = ModcodTable::from_reader(csv.as_bytes(), 0.0).unwrap();
        let m = EfficiencyModel::Dvbs2(t);
        assert_eq!(m.efficiency(5.0).unwrap(), 1.0);
        assert_eq!(m.efficiency(10.0).unwrap(), 3.0);
        assert!(ModcodTable::from_reader("name,es_n0_db,efficiency\n".as_bytes(), 0.0).is_err());
    }

    #[test]
    fn model_parsing() {
        assert_eq!("shannon".parse::<EfficiencyModel>().unwrap(), EfficiencyModel::Shannon);
        assert_eq!("dvbs2".parse::<EfficiencyModel>().unwrap().name(), "dvbs2");
        assert!("qam".parse::<EfficiencyModel>().is_err());
    }

    fn table(values: Vec<f64>, k: usize, n: usize) -> SinrTable {
        SinrTable::new(Array2::from_shape_vec((k, n), values).unwrap(), Domain::Frequency)
    }

    #[test]
    fn throughput_examples() {
        let m = EfficiencyModel::Shannon;
        let zeros = table(vec![0.0; 112], 1, 112);
        assert_eq!(beam_throughput(&zeros, &m, 500e6, 112, 0).unwrap(), 0.0);

        let mut v = vec![0.0; 112];
        v[5] = 15.0;
        let one = table(v, 1, 112);
        let r = beam_throughput(&one, &m, 500e6, 112, 0).unwrap();
        assert!((r - 500e6 / 112.0 * 4.0).abs() < 1e-6);
        assert!((r / 1e6 - 17.857).abs() < 1e-3);

        let full = table(vec![3.0; 32], 1, 32);
        let r = beam_throughput(&full, &m, 500e6, 32, 0).unwrap();
        assert!((r - 500e6 * 2.0).abs() < 1e-3);

        assert!(beam_throughput(&full, &m, 500e6, 0, 0).is_err());
        assert!(beam_throughput(&full, &m, 500e6, 31, 0).is_err());
    }

    proptest! {
        #[test]
        fn efficiency_is_monotone(a in 0.0f64..1e5, b in 0.0f64..1e5) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for m in [EfficiencyModel::Shannon, EfficiencyModel::dvbs2()] {
                prop_assert!(m.efficiency(lo).unwrap() <= m.efficiency(hi).unwrap());
            }
        }

        #[test]
        fn shannon_dominates_dvbs2(db in -10.0f64..30.0) {
            let g = 10f64.powf(db / 10.0);
            let s = EfficiencyModel::Shannon.efficiency(g).unwrap();
            let d = EfficiencyModel::dvbs2().efficiency(g).unwrap();
            prop_assert!(s >= d);
        }

        #[test]
        fn throughput_is_additive(gammas in proptest::collection::vec(0.0f64..100.0, 1..16),
                                  split in 0usize..16) {
            let n = gammas.len();
            let split = split.min(n);
            let m = EfficiencyModel::dvbs2();
            let whole = table(gammas.clone(), 1, n);
            let mut left = gammas.clone();
            let mut right = gammas;
            for v in &mut left[split..] { *v = 0.0; }
            for v in &mut right[..split] { *v = 0.0; }
            let r = beam_throughput(&whole, &m, 1e8, n, 0).unwrap();
            let rl = beam_throughput(&table(left, 1, n), &m, 1e8, n, 0).unwrap();
            let rr = beam_throughput(&table(right, 1, n), &m, 1e8, n, 0).unwrap();
            prop_assert!((r - (rl + rr)).abs() <= 1e-6 * r.max(1.0));
        }
    }
}
