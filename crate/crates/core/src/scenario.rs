//! Convoy topologies, large-scale channel gains, ACIR profiles and
//! intended-receiver sets.
//!
//! All power quantities are linear (mW) and all gains/ratios are linear
//! power ratios. Decibel values only appear in [`RadioParams`] fields that
//! are specified in dB and in the conversion helpers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Serialization format version for scenario documents.
pub const SCENARIO_FORMAT_VERSION: u32 = 1;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// dBm to mW.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    linear_to_db(mw)
}

/// Radio and propagation parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    /// Linear SINR threshold.
    pub gamma_t: f64,
    /// Noise power per RB (mW).
    pub sigma2: f64,
    /// Maximum transmit power per VUE and timeslot (mW).
    pub p_max: f64,
    /// Pathloss at the reference distance (dB).
    pub pl0_db: f64,
    pub pl_exp: f64,
    /// Reference distance (m).
    pub d0: f64,
    /// Shadowing standard deviation (dB).
    pub shadow_std_db: f64,
    /// Penetration loss per obstructing VUE (dB).
    pub pen_loss_db: f64,
    /// Mean inter-vehicle spacing (m).
    pub d_avg: f64,
    /// Minimum inter-vehicle spacing (m).
    pub d_min: f64,
    /// One shadowing draw per unordered pair when true; one per direction otherwise.
    #[serde(default = "default_true")]
    pub reciprocal_shadowing: bool,
}

fn default_true() -> bool {
    true
}

impl RadioParams {
    /// Highway convoy defaults: 5 dB threshold, -95.2 dBm noise, 24 dBm
    /// maximum power, PL0 = 63.3 dB at 10 m with exponent 1.77, 3.1 dB
    /// shadowing, 10 dB per obstructing vehicle, spacing 48.6 m mean / 10 m min.
    pub fn table_ii() -> Self {
        Self {
            gamma_t: db_to_linear(5.0),
            sigma2: dbm_to_mw(-95.2),
            p_max: dbm_to_mw(24.0),
            pl0_db: 63.3,
            pl_exp: 1.77,
            d0: 10.0,
            shadow_std_db: 3.1,
            pen_loss_db: 10.0,
            d_avg: 48.6,
            d_min: 10.0,
            reciprocal_shadowing: true,
        }
    }

    pub fn without_shadowing(mut self) -> Self {
        self.shadow_std_db = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma_t", self.gamma_t),
            ("sigma2", self.sigma2),
            ("p_max", self.p_max),
            ("pl_exp", self.pl_exp),
            ("d0", self.d0),
            ("d_min", self.d_min),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.d_avg.is_finite() && self.d_avg > self.d_min) {
            return Err(Error::InvalidParams(format!(
                "d_avg ({}) must exceed d_min ({})",
                self.d_avg, self.d_min
            )));
        }
        if !(self.shadow_std_db.is_finite() && self.shadow_std_db >= 0.0) {
            return Err(Error::InvalidParams("shadow_std_db must be non-negative".into()));
        }
        if !self.pl0_db.is_finite() || !self.pen_loss_db.is_finite() {
            return Err(Error::InvalidParams("pathloss terms must be finite".into()));
        }
        Ok(())
    }
}

impl Default for RadioParams {
    fn default() -> Self {
        Self::table_ii()
    }
}

/// Adjacent channel interference ratio per frequency-slot gap.
///
/// `values[r]` is the ratio for gap `r`; gaps at or beyond `values.len()`
/// use `tail_value`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcirProfile {
    pub values: Vec<f64>,
    pub tail_value: f64,
}

impl AcirProfile {
    pub fn new(values: Vec<f64>, tail_value: f64) -> Result<Self> {
        let profile = Self { values, tail_value };
        profile.validate()?;
        Ok(profile)
    }

    /// 1 for the same slot, 10^-3 for gaps 1..=4, 10^-4.5 beyond.
    pub fn three_gpp() -> Self {
        Self {
            values: vec![1.0, 1e-3, 1e-3, 1e-3, 1e-3],
            tail_value: 10f64.powf(-4.5),
        }
    }

    /// Co-channel interference only; adjacent slots are perfectly isolated.
    pub fn co_channel_only() -> Self {
        Self { values: vec![1.0], tail_value: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.first() != Some(&1.0) {
            return Err(Error::InvalidParams("ACIR profile must start with lambda_0 = 1".into()));
        }
        let in_range = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        if !self.values.iter().copied().all(in_range) || !in_range(self.tail_value) {
            return Err(Error::InvalidParams("ACIR values must lie in [0, 1]".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn lookup(&self, gap: usize) -> f64 {
        self.values.get(gap).copied().unwrap_or(self.tail_value)
    }

    /// True when the ratio never increases with the gap.
    pub fn is_non_increasing(&self, f: usize) -> bool {
        (1..f.max(2)).all(|r| self.lookup(r) <= self.lookup(r - 1))
    }
}

impl Default for AcirProfile {
    fn default() -> Self {
        Self::three_gpp()
    }
}

pub fn acir_lookup(profile: &AcirProfile, gap: usize) -> f64 {
    profile.lookup(gap)
}

/// Convoy positions: `positions[0] = 0` and successive gaps follow a
/// shifted exponential with minimum `d_min` and mean `d_avg`.
pub fn generate_positions(n: usize, params: &RadioParams, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exp = Exp::new(1.0 / (params.d_avg - params.d_min)).expect("validated spacing");
    let mut positions = Vec::with_capacity(n);
    let mut x = 0.0;
    for k in 0..n {
        if k > 0 {
            x += params.d_min + exp.sample(&mut rng);
        }
        positions.push(x);
    }
    positions
}

/// Linear channel power gain for a link of length `dist` metres.
pub fn channel_gain(dist: f64, obstructions: usize, params: &RadioParams, shadow_db: f64) -> Result<f64> {
    if !(dist > 0.0) {
        return Err(Error::InvalidGeometry(dist));
    }
    let pl = params.pl0_db
        + 10.0 * params.pl_exp * (dist / params.d0).log10()
        + shadow_db
        + obstructions as f64 * params.pen_loss_db;
    Ok(10f64.powf(-pl / 10.0))
}

/// A problem instance: topology, gains, ACIR profile and intended receivers.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub n: usize,
    pub f: usize,
    pub t: usize,
    pub positions: Vec<f64>,
    /// `gains[i][j]` is the gain from transmitter `i` to receiver `j`; the
    /// diagonal is unused and stored as zero.
    pub gains: Vec<Vec<f64>>,
    pub acir: AcirProfile,
    /// Intended receivers of each VUE, ascending.
    pub receivers: Vec<Vec<usize>>,
    pub params: RadioParams,
    pub seed: u64,
}

/// Number of intended receivers per VUE: `min(N-1, F*T-1)`.
pub fn receiver_count(n: usize, f: usize, t: usize) -> usize {
    (n.saturating_sub(1)).min((f * t).saturating_sub(1))
}

pub fn build_scenario(
    n: usize,
    f: usize,
    t: usize,
    params: &RadioParams,
    acir: &AcirProfile,
    seed: u64,
) -> Result<Scenario> {
    if n < 2 || f < 1 || t < 1 {
        return Err(Error::InvalidParams(format!("need n >= 2, f >= 1, t >= 1 (got {n}, {f}, {t})")));
    }
    params.validate()?;
    acir.validate()?;

    let positions = generate_positions(n, params, seed);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let shadow = Normal::new(0.0, params.shadow_std_db)
        .map_err(|e| Error::InvalidParams(format!("shadowing: {e}")))?;
    let draw = |rng: &mut ChaCha8Rng| {
        if params.shadow_std_db > 0.0 {
            shadow.sample(rng)
        } else {
            0.0
        }
    };

    let mut gains = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = (positions[j] - positions[i]).abs();
            let obstructions = j - i - 1;
            let s_ij = draw(&mut rng);
            let s_ji = if params.reciprocal_shadowing { s_ij } else { draw(&mut rng) };
            gains[i][j] = channel_gain(dist, obstructions, params, s_ij)?;
            gains[j][i] = channel_gain(dist, obstructions, params, s_ji)?;
        }
    }

    let receivers = nearest_receivers(&positions, receiver_count(n, f, t));

    Ok(Scenario {
        n,
        f,
        t,
        positions,
        gains,
        acir: acir.clone(),
        receivers,
        params: params.clone(),
        seed,
    })
}

/// For each VUE, the `count` nearest other VUEs (ties by lower index),
/// returned in ascending index order.
pub fn nearest_receivers(positions: &[f64], count: usize) -> Vec<Vec<usize>> {
    let n = positions.len();
    (0..n)
        .map(|i| {
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            others.sort_by(|&a, &b| {
                let da = (positions[a] - positions[i]).abs();
                let db = (positions[b] - positions[i]).abs();
                da.total_cmp(&db).then(a.cmp(&b))
            });
            others.truncate(count);
            others.sort_unstable();
            others
        })
        .collect()
}

impl Scenario {
    /// Assemble a scenario from explicit parts (hand-crafted instances).
    pub fn from_parts(
        f: usize,
        t: usize,
        positions: Vec<f64>,
        gains: Vec<Vec<f64>>,
        acir: AcirProfile,
        receivers: Vec<Vec<usize>>,
        params: RadioParams,
    ) -> Result<Self> {
        let scenario = Self {
            n: positions.len(),
            f,
            t,
            positions,
            gains,
            acir,
            receivers,
            params,
            seed: 0,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.acir.validate()?;
        let n = self.n;
        if n < 1 || self.f < 1 || self.t < 1 {
            return Err(Error::InvalidParams("empty scenario dimensions".into()));
        }
        if self.positions.len() != n || self.gains.len() != n || self.receivers.len() != n {
            return Err(Error::InvalidParams("scenario arrays disagree with n".into()));
        }
        for (i, row) in self.gains.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidParams(format!("gain row {i} has wrong length")));
            }
            for (j, &g) in row.iter().enumerate() {
                if i != j && !(g.is_finite() && g > 0.0) {
                    return Err(Error::InvalidParams(format!("gain ({i},{j}) must be positive")));
                }
            }
        }
        for (i, rx) in self.receivers.iter().enumerate() {
            if rx.iter().any(|&j| j >= n || j == i) {
                return Err(Error::InvalidParams(format!("receiver set of VUE {i} is invalid")));
            }
            if rx.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParams(format!("receiver set of VUE {i} must be strictly ascending")));
            }
        }
        Ok(())
    }

    /// Intended links `(i, j)` with `j` in `R_i`, ordered by `i` then `j`.
    pub fn links(&self) -> Vec<(usize, usize)> {
        self.receivers
            .iter()
            .enumerate()
            .flat_map(|(i, rx)| rx.iter().map(move |&j| (i, j)))
            .collect()
    }

    pub fn num_links(&self) -> usize {
        self.receivers.iter().map(Vec::len).sum()
    }

    pub fn is_link(&self, i: usize, j: usize) -> bool {
        self.receivers[i].binary_search(&j).is_ok()
    }

    #[inline]
    pub fn gain(&self, from: usize, to: usize) -> f64 {
        self.gains[from][to]
    }

    #[inline]
    pub fn lambda(&self, gap: usize) -> f64 {
        self.acir.lookup(gap)
    }

    /// Same instance with a different number of timeslots. Receiver sets are
    /// kept as they are.
    pub fn with_timeslots(&self, t: usize) -> Self {
        Self { t, ..self.clone() }
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ScenarioDocument {
            version: SCENARIO_FORMAT_VERSION,
            n: self.n,
            f: self.f,
            t: self.t,
            seed: self.seed,
            params: self.params.clone(),
            positions: self.positions.clone(),
            gains: self.gains.clone(),
            acir: self.acir.clone(),
            receivers: self.receivers.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ScenarioDocument = serde_json::from_str(text)?;
        if doc.version != SCENARIO_FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported scenario version {}", doc.version)));
        }
        let scenario = Self {
            n: doc.n,
            f: doc.f,
            t: doc.t,
            positions: doc.positions,
            gains: doc.gains,
            acir: doc.acir,
            receivers: doc.receivers,
            params: doc.params,
            seed: doc.seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

#[derive(Serialize, Deserialize)]
struct ScenarioDocument {
    version: u32,
    n: usize,
    f: usize,
    t: usize,
    seed: u64,
    params: RadioParams,
    positions: Vec<f64>,
    gains: Vec<Vec<f64>>,
    acir: AcirProfile,
    receivers: Vec<Vec<usize>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
    }

    #[test]
    fn unit_conversions() {
        assert!(close(dbm_to_mw(24.0), 251.188_643_150_958));
        assert!(close(dbm_to_mw(-95.2), 10f64.powf(-9.52)));
        assert!(close(mw_to_dbm(dbm_to_mw(17.3)), 17.3));
    }

    #[test]
    fn single_position_is_origin() {
        assert_eq!(generate_positions(1, &RadioParams::table_ii(), 9), vec![0.0]);
    }

    #[test]
    fn positions_are_deterministic() {
        let p = RadioParams::table_ii();
        let a = generate_positions(5, &p, 42);
        let b = generate_positions(5, &p, 42);
        assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        assert_ne!(a, generate_positions(5, &p, 43));
    }

    #[test]
    fn gap_distribution_matches_spacing_parameters() {
        let p = RadioParams::table_ii();
        let n = 100_001;
        let pos = generate_positions(n, &p, 7);
        let gaps: Vec<f64> = pos.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(gaps.iter().all(|&g| g >= 10.0));
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        assert!((mean - 48.6).abs() / 48.6 < 0.01, "mean gap {mean}");
    }

    #[test]
    fn pathloss_reference_values() {
        let p = RadioParams::table_ii();
        assert!(close(channel_gain(10.0, 0, &p, 0.0).unwrap(), 10f64.powf(-6.33)));
        assert!(close(channel_gain(100.0, 0, &p, 0.0).unwrap(), 10f64.powf(-(63.3 + 17.7) / 10.0)));
        assert!(close(channel_gain(10.0, 2, &p, 0.0).unwrap(), 10f64.powf(-8.33)));
        assert!(matches!(channel_gain(0.0, 0, &p, 0.0), Err(Error::InvalidGeometry(_))));
        assert!(matches!(channel_gain(-3.0, 0, &p, 0.0), Err(Error::InvalidGeometry(_))));
    }

    #[test]
    fn three_gpp_mask_lookup() {
        let m = AcirProfile::three_gpp();
        assert_eq!(acir_lookup(&m, 0), 1.0);
        assert_eq!(acir_lookup(&m, 3), 1e-3);
        assert_eq!(acir_lookup(&m, 7), 10f64.powf(-4.5));
        assert!(m.is_non_increasing(20));
    }

    #[test]
    fn acir_profile_rejects_bad_values() {
        assert!(AcirProfile::new(vec![0.5, 0.1], 0.0).is_err());
        assert!(AcirProfile::new(vec![1.0, 1.5], 0.0).is_err());
        assert!(AcirProfile::new(vec![1.0, 0.1], -0.1).is_err());
        assert!(AcirProfile::new(vec![1.0, 0.0], 0.0).is_ok());
    }

    #[test]
    fn params_validation() {
        let mut p = RadioParams::table_ii();
        p.d_avg = 5.0;
        assert!(p.validate().is_err());
        let mut p = RadioParams::table_ii();
        p.sigma2 = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn receiver_set_sizes() {
        let p = RadioParams::table_ii();
        let a = AcirProfile::three_gpp();
        let s = build_scenario(3, 20, 1, &p, &a, 1).unwrap();
        assert!(s.receivers.iter().all(|r| r.len() == 2));
        let s = build_scenario(20, 6, 1, &p, &a, 1).unwrap();
        assert!(s.receivers.iter().all(|r| r.len() == 5));
        for (i, r) in s.receivers.iter().enumerate() {
            assert!(!r.contains(&i));
        }
    }

    #[test]
    fn middle_vues_have_closer_receivers() {
        let s = build_scenario(4, 4, 1, &RadioParams::table_ii(), &AcirProfile::three_gpp(), 11).unwrap();
        let mean_dist = |i: usize| {
            s.receivers[i].iter().map(|&j| (s.positions[j] - s.positions[i]).abs()).sum::<f64>()
                / s.receivers[i].len() as f64
        };
        for edge in [0, 3] {
            for mid in [1, 2] {
                assert!(mean_dist(mid) < mean_dist(edge));
            }
        }
    }

    #[test]
    fn gains_decrease_with_distance_without_shadowing() {
        let p = RadioParams::table_ii().without_shadowing();
        let s = build_scenario(8, 4, 2, &p, &AcirProfile::three_gpp(), 5).unwrap();
        for i in 0..s.n {
            for j in 0..s.n {
                for k in 0..s.n {
                    // Obstruction counts only order links on the same side.
                    let same_side = (j > i) == (k > i);
                    if i == j || i == k || !same_side {
                        continue;
                    }
                    let dj = (s.positions[j] - s.positions[i]).abs();
                    let dk = (s.positions[k] - s.positions[i]).abs();
                    if dj < dk {
                        assert!(s.gains[i][j] >= s.gains[i][k]);
                    }
                }
            }
        }
    }

    #[test]
    fn shadowing_symmetry_follows_flag() {
        let mut p = RadioParams::table_ii();
        let a = AcirProfile::three_gpp();
        let s = build_scenario(6, 3, 1, &p, &a, 3).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(s.gains[i][j], s.gains[j][i]);
            }
        }
        p.reciprocal_shadowing = false;
        let s = build_scenario(6, 3, 1, &p, &a, 3).unwrap();
        assert!(s.gains[0][1] != s.gains[1][0]);
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let s = build_scenario(7, 5, 2, &RadioParams::table_ii(), &AcirProfile::three_gpp(), 99).unwrap();
        let text = s.to_json().unwrap();
        let back = Scenario::from_json(&text).unwrap();
        assert_eq!(s, back);
        assert_eq!(text, back.to_json().unwrap());
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(build_scenario(1, 2, 1, &RadioParams::table_ii(), &AcirProfile::three_gpp(), 0).is_err());
        assert!(build_scenario(3, 0, 1, &RadioParams::table_ii(), &AcirProfile::three_gpp(), 0).is_err());
    }
}
