//! Random multistatic geometries and bistatic range measurement synthesis.
//!
//! NLoS conditions are modeled as nonnegative excess path lengths. Under the
//! per-link placement each gNB -> target and target -> UE link carries its
//! own excess, which then appears in every bistatic measurement that uses the
//! link. Under the per-measurement placement excesses are attached to
//! individual (gNB, UE) measurements instead.

use std::io::Write;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_channel, bistatic_delay, ChannelPath, NoiseSpec};
use crate::error::{Error, Result};
use crate::geometry::{bistatic_range, Point2};
use crate::prs::{allocate_transmitters, build_grid, OfdmConfig, ResourceGrid};
use crate::ranging::{estimate_range, extract_and_divide, Periodogram};

/// Attempts made by [`sample_scenario`] before giving up on its constraints.
pub const MAX_SAMPLING_ATTEMPTS: usize = 100_000;

/// Default PRS seed base; transmitter `s` uses `base + s`.
pub const DEFAULT_PRS_SEED: u32 = 0x1d2c;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutlierPlacement {
    /// Excess on whole gNB-target or target-UE links (shared by all pairs using them).
    #[default]
    PerLink,
    /// Excess on individual (gNB, UE) measurements.
    PerMeasurement,
}

/// Sampling parameters for [`sample_scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    pub num_gnbs: usize,
    pub num_ues: usize,
    /// Side lengths of the co-centered square regions, meters.
    pub gnb_region: f64,
    pub ue_region: f64,
    pub target_region: f64,
    pub center: Point2,
    /// Upper bound of the uniform NLoS excess, meters.
    pub outlier_max: f64,
    pub outlier_placement: OutlierPlacement,
    /// Minimum target-to-node distance, meters.
    pub min_separation: f64,
    /// Reject geometries whose bistatic range (with excess) reaches this bound.
    pub max_bistatic_range: Option<f64>,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            num_gnbs: 6,
            num_ues: 6,
            gnb_region: 400.0,
            ue_region: 200.0,
            target_region: 150.0,
            center: Point2::ORIGIN,
            outlier_max: 10.0,
            outlier_placement: OutlierPlacement::PerLink,
            min_separation: 1.0,
            max_bistatic_range: None,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_gnbs == 0 || self.num_ues == 0 {
            return Err(Error::Config(format!(
                "need at least one gNB and one UE, got S={} K={}",
                self.num_gnbs, self.num_ues
            )));
        }
        for (name, side) in [
            ("gNB", self.gnb_region),
            ("UE", self.ue_region),
            ("target", self.target_region),
        ] {
            if !(side.is_finite() && side > 0.0) {
                return Err(Error::Config(format!(
                    "{name} region side must be positive, got {side}"
                )));
            }
        }
        if !(self.outlier_max.is_finite() && self.outlier_max >= 0.0) {
            return Err(Error::Config(format!(
                "outlier_max must be >= 0, got {}",
                self.outlier_max
            )));
        }
        if !(self.min_separation.is_finite() && self.min_separation >= 0.0) {
            return Err(Error::Config("min_separation must be >= 0".into()));
        }
        if let Some(b) = self.max_bistatic_range {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::Config(format!("max_bistatic_range must be positive, got {b}")));
            }
        }
        if !self.center.is_finite() {
            return Err(Error::Config("region center must be finite".into()));
        }
        Ok(())
    }
}

/// Known node positions used by the solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nodes {
    pub gnbs: Vec<Point2>,
    pub ues: Vec<Point2>,
}

impl Nodes {
    pub fn centroid(&self) -> Point2 {
        Point2::centroid(self.gnbs.iter().chain(&self.ues)).unwrap_or(Point2::ORIGIN)
    }

    pub fn translated(&self, v: Point2) -> Nodes {
        Nodes {
            gnbs: self.gnbs.iter().map(|p| *p + v).collect(),
            ues: self.ues.iter().map(|p| *p + v).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub gnbs: Vec<Point2>,
    pub ues: Vec<Point2>,
    pub target: Point2,
    /// Excess on each gNB -> target link, meters.
    pub gnb_excess: Vec<f64>,
    /// Excess on each target -> UE link, meters.
    pub ue_excess: Vec<f64>,
    /// Excess on each (gNB, UE) measurement, gNB-major; zero under per-link placement.
    pub pair_excess: Vec<f64>,
    pub rng_seed: u64,
}

impl Scenario {
    /// All-LoS scenario with the given positions.
    pub fn line_of_sight(gnbs: Vec<Point2>, ues: Vec<Point2>, target: Point2) -> Self {
        let (s, k) = (gnbs.len(), ues.len());
        Self {
            gnbs,
            ues,
            target,
            gnb_excess: vec![0.0; s],
            ue_excess: vec![0.0; k],
            pair_excess: vec![0.0; s * k],
            rng_seed: 0,
        }
    }

    pub fn num_gnbs(&self) -> usize {
        self.gnbs.len()
    }

    pub fn num_ues(&self) -> usize {
        self.ues.len()
    }

    pub fn nodes(&self) -> Nodes {
        Nodes {
            gnbs: self.gnbs.clone(),
            ues: self.ues.clone(),
        }
    }

    /// Total NLoS excess seen by the (s, k) measurement.
    pub fn excess(&self, s: usize, k: usize) -> f64 {
        self.gnb_excess[s] + self.ue_excess[k] + self.pair_excess[s * self.num_ues() + k]
    }

    pub fn line_of_sight_range(&self, s: usize, k: usize) -> f64 {
        bistatic_range(self.target, self.gnbs[s], self.ues[k])
    }

    pub fn validate(&self) -> Result<()> {
        let (s, k) = (self.num_gnbs(), self.num_ues());
        if s == 0 || k == 0 {
            return Err(Error::Scenario("scenario needs at least one gNB and one UE".into()));
        }
        if self.gnb_excess.len() != s || self.ue_excess.len() != k || self.pair_excess.len() != s * k {
            return Err(Error::Scenario("excess vectors do not match node counts".into()));
        }
        let finite = self.gnbs.iter().chain(&self.ues).all(|p| p.is_finite()) && self.target.is_finite();
        if !finite {
            return Err(Error::Scenario("non-finite position".into()));
        }
        if self
            .gnb_excess
            .iter()
            .chain(&self.ue_excess)
            .chain(&self.pair_excess)
            .any(|z| !(z.is_finite() && *z >= 0.0))
        {
            return Err(Error::Scenario("excess path lengths must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn uniform_in_square(rng: &mut impl Rng, center: Point2, side: f64) -> Point2 {
    let x = center.x + (rng.random::<f64>() - 0.5) * side;
    let y = center.y + (rng.random::<f64>() - 0.5) * side;
    Point2::new(x, y)
}

/// Draws node and target positions uniformly in their regions, then marks a
/// uniformly distributed number (0 to S + K) of distinct links or
/// measurements as NLoS with excess `U(0, outlier_max)`.
pub fn sample_scenario(params: &ScenarioParams, rng_seed: u64) -> Result<Scenario> {
    params.validate()?;
    let (s_count, k_count) = (params.num_gnbs, params.num_ues);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for _ in 0..MAX_SAMPLING_ATTEMPTS {
        let gnbs: Vec<Point2> = (0..s_count)
            .map(|_| uniform_in_square(&mut rng, params.center, params.gnb_region))
            .collect();
        let ues: Vec<Point2> = (0..k_count)
            .map(|_| uniform_in_square(&mut rng, params.center, params.ue_region))
            .collect();
        let target = uniform_in_square(&mut rng, params.center, params.target_region);

        let mut sc = Scenario::line_of_sight(gnbs, ues, target);
        sc.rng_seed = rng_seed;
        let links = s_count + k_count;
        match params.outlier_placement {
            OutlierPlacement::PerLink => {
                let n = rng.random_range(0..=links);
                for link in index::sample(&mut rng, links, n) {
                    let z = rng.random::<f64>() * params.outlier_max;
                    if link < s_count {
                        sc.gnb_excess[link] = z;
                    } else {
                        sc.ue_excess[link - s_count] = z;
                    }
                }
            }
            OutlierPlacement::PerMeasurement => {
                let pairs = s_count * k_count;
                let n = rng.random_range(0..=links.min(pairs));
                for pair in index::sample(&mut rng, pairs, n) {
                    sc.pair_excess[pair] = rng.random::<f64>() * params.outlier_max;
                }
            }
        }

        let separated = sc
            .gnbs
            .iter()
            .chain(&sc.ues)
            .all(|p| p.distance(sc.target) >= params.min_separation);
        let in_window = params.max_bistatic_range.is_none_or(|bound| {
            (0..s_count).all(|s| (0..k_count).all(|k| sc.line_of_sight_range(s, k) + sc.excess(s, k) < bound))
        });
        if separated && in_window {
            return Ok(sc);
        }
    }
    Err(Error::Scenario(format!(
        "no geometry satisfied the sampling constraints after {MAX_SAMPLING_ATTEMPTS} attempts"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementMode {
    /// Geometric ranges plus NLoS excess, no estimation error.
    Exact,
    /// Measurement-level model with uniform quantization error.
    Model,
    /// Full PRS / channel / periodogram pipeline.
    Phy,
}

/// Bistatic range estimates for every (gNB, UE) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub num_gnbs: usize,
    pub num_ues: usize,
    /// Estimated ranges, gNB-major, meters.
    pub ranges: Vec<f64>,
    /// Line-of-sight geometric ranges, gNB-major, meters.
    pub true_ranges: Vec<f64>,
    pub mode: MeasurementMode,
    pub true_target: Point2,
    pub config: Option<OfdmConfig>,
}

impl MeasurementSet {
    /// Builds a set from explicit range values, gNB-major.
    pub fn from_ranges(num_gnbs: usize, num_ues: usize, ranges: Vec<f64>) -> Result<Self> {
        if ranges.len() != num_gnbs * num_ues {
            return Err(Error::Config(format!(
                "{} ranges given for S={num_gnbs}, K={num_ues}",
                ranges.len()
            )));
        }
        Ok(Self {
            num_gnbs,
            num_ues,
            true_ranges: vec![f64::NAN; ranges.len()],
            ranges,
            mode: MeasurementMode::Exact,
            true_target: Point2::new(f64::NAN, f64::NAN),
            config: None,
        })
    }

    pub fn get(&self, s: usize, k: usize) -> f64 {
        self.ranges[s * self.num_ues + k]
    }

    pub fn set(&mut self, s: usize, k: usize, value: f64) {
        self.ranges[s * self.num_ues + k] = value;
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    /// Writes `s,k,r_hat,r_true` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "s,k,r_hat,r_true")?;
        for s in 0..self.num_gnbs {
            for k in 0..self.num_ues {
                let i = s * self.num_ues + k;
                writeln!(out, "{s},{k},{},{}", self.ranges[i], self.true_ranges[i])?;
            }
        }
        Ok(())
    }
}

fn geometric_set(sc: &Scenario, mode: MeasurementMode, config: Option<&OfdmConfig>) -> MeasurementSet {
    let (s_count, k_count) = (sc.num_gnbs(), sc.num_ues());
    let true_ranges: Vec<f64> = (0..s_count)
        .flat_map(|s| (0..k_count).map(move |k| (s, k)))
        .map(|(s, k)| sc.line_of_sight_range(s, k))
        .collect();
    MeasurementSet {
        num_gnbs: s_count,
        num_ues: k_count,
        ranges: true_ranges.clone(),
        true_ranges,
        mode,
        true_target: sc.target,
        config: config.cloned(),
    }
}

/// Noise-free bistatic ranges including NLoS excess.
pub fn true_bistatic_ranges(sc: &Scenario) -> MeasurementSet {
    let mut ms = geometric_set(sc, MeasurementMode::Exact, None);
    for s in 0..sc.num_gnbs() {
        for k in 0..sc.num_ues() {
            let r = ms.get(s, k) + sc.excess(s, k);
            ms.set(s, k, r);
        }
    }
    ms
}

/// Measurement-level synthesis: true range plus excess plus, when
/// `quantization` is set, an error uniform on `(-dr/2, dr/2)`.
pub fn synthesize_measurements_model(
    sc: &Scenario,
    config: &OfdmConfig,
    rng: &mut impl Rng,
    quantization: bool,
) -> MeasurementSet {
    let half = 0.5 * config.range_resolution();
    let mut ms = true_bistatic_ranges(sc);
    ms.mode = MeasurementMode::Model;
    ms.config = Some(config.clone());
    if quantization {
        for r in ms.ranges.iter_mut() {
            *r += rng.random_range(-half..half);
        }
    }
    ms
}

/// Runs PRS grid synthesis, the echo channel and periodogram ranging for
/// every (gNB, UE) pair.
pub fn synthesize_measurements_phy(
    sc: &Scenario,
    config: &OfdmConfig,
    noise: &NoiseSpec,
    prs_seed: u32,
) -> Result<MeasurementSet> {
    sc.validate()?;
    config.validate()?;
    let (s_count, k_count) = (sc.num_gnbs(), sc.num_ues());
    let bound = config.max_unwrapped_range();
    let mut paths = Vec::with_capacity(s_count * k_count);
    for s in 0..s_count {
        for k in 0..k_count {
            let excess = sc.excess(s, k);
            let r = sc.line_of_sight_range(s, k) + excess;
            if r >= bound {
                return Err(Error::Scenario(format!(
                    "bistatic range {r:.2} m of gNB {s} / UE {k} exceeds the unambiguous window {bound:.2} m"
                )));
            }
            let tau = bistatic_delay(sc.target, sc.gnbs[s], sc.ues[k], excess);
            paths.push(ChannelPath::static_echo(s, k, tau));
        }
    }
    let grids: Vec<ResourceGrid> = allocate_transmitters(s_count, config, prs_seed)?
        .iter()
        .map(|a| build_grid(config, a))
        .collect::<Result<_>>()?;
    let received = apply_channel(&grids, &paths, config, noise)?;

    let periodogram = Periodogram::new(config.num_subcarriers);
    let mut ms = geometric_set(sc, MeasurementMode::Phy, Some(config));
    for rx in &received {
        for grid in &grids {
            let g = extract_and_divide(rx, grid)?;
            let profile = periodogram.profile(&g, config.range_resolution())?;
            let est = estimate_range(&profile, config, grid.allocation.transmitter_id, rx.receiver_id)?;
            ms.set(est.transmitter_id, est.receiver_id, est.range);
        }
    }
    Ok(ms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclid(a: Point2, b: Point2) -> f64 {
        ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
    }

    #[test]
    fn three_four_five_range() {
        let mut sc = Scenario::line_of_sight(vec![Point2::new(3.0, 4.0)], vec![Point2::new(0.0, 5.0)], Point2::ORIGIN);
        assert_eq!(true_bistatic_ranges(&sc).get(0, 0), 10.0);
        sc.ue_excess[0] = 2.0;
        assert_eq!(true_bistatic_ranges(&sc).get(0, 0), 12.0);
    }

    #[test]
    fn random_ranges_match_direct_distances() {
        let sc = sample_scenario(&ScenarioParams::default(), 5).unwrap();
        let ms = true_bistatic_ranges(&sc);
        for s in 0..6 {
            for k in 0..6 {
                let expect = euclid(sc.target, sc.gnbs[s]) + euclid(sc.target, sc.ues[k]) + sc.excess(s, k);
                assert!((ms.get(s, k) - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_and_in_regions() {
        let p = ScenarioParams::default();
        let a = sample_scenario(&p, 17).unwrap();
        assert_eq!(a, sample_scenario(&p, 17).unwrap());
        assert_ne!(a, sample_scenario(&p, 18).unwrap());
        assert!(a.gnbs.iter().all(|g| g.x.abs() <= 200.0 && g.y.abs() <= 200.0));
        assert!(a.ues.iter().all(|u| u.x.abs() <= 100.0 && u.y.abs() <= 100.0));
        assert!(a.target.x.abs() <= 75.0 && a.target.y.abs() <= 75.0);
    }

    #[test]
    fn outlier_counts_cover_zero_to_all_links() {
        let p = ScenarioParams::default();
        let mut seen = [false; 13];
        for seed in 0..2000 {
            let sc = sample_scenario(&p, seed).unwrap();
            let n = sc.gnb_excess.iter().chain(&sc.ue_excess).filter(|z| **z > 0.0).count();
            assert!(n <= 12);
            seen[n] = true;
            assert!(sc
                .gnb_excess
                .iter()
                .chain(&sc.ue_excess)
                .all(|z| (0.0..10.0).contains(z)));
            assert!(sc.pair_excess.iter().all(|z| *z == 0.0));
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn per_measurement_placement() {
        let p = ScenarioParams {
            outlier_placement: OutlierPlacement::PerMeasurement,
            ..ScenarioParams::default()
        };
        for seed in 0..200 {
            let sc = sample_scenario(&p, seed).unwrap();
            assert!(sc.gnb_excess.iter().chain(&sc.ue_excess).all(|z| *z == 0.0));
            assert!(sc.pair_excess.iter().filter(|z| **z > 0.0).count() <= 12);
        }
    }

    #[test]
    fn zero_outlier_max_is_pure_los() {
        let p = ScenarioParams {
            outlier_max: 0.0,
            ..ScenarioParams::default()
        };
        for seed in 0..50 {
            let sc = sample_scenario(&p, seed).unwrap();
            assert!(sc.gnb_excess.iter().chain(&sc.ue_excess).all(|z| *z == 0.0));
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let bad = [
            ScenarioParams {
                num_gnbs: 0,
                ..ScenarioParams::default()
            },
            ScenarioParams {
                ue_region: -1.0,
                ..ScenarioParams::default()
            },
            ScenarioParams {
                outlier_max: f64::NAN,
                ..ScenarioParams::default()
            },
        ];
        for p in bad {
            assert!(matches!(sample_scenario(&p, 0), Err(Error::Config(_))));
        }
    }

    #[test]
    fn model_without_quantization_is_exact() {
        let sc = sample_scenario(
            &ScenarioParams {
                outlier_max: 0.0,
                ..ScenarioParams::default()
            },
            3,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ms = synthesize_measurements_model(&sc, &OfdmConfig::default(), &mut rng, false);
        assert_eq!(ms.ranges, ms.true_ranges);
        assert_eq!(ms.len(), 36);
    }

    #[test]
    fn model_quantization_bounds() {
        let cfg = OfdmConfig::default();
        let half = cfg.range_resolution() / 2.0;
        let sc = sample_scenario(&ScenarioParams::default(), 9).unwrap();
        let exact = true_bistatic_ranges(&sc);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let ms = synthesize_measurements_model(&sc, &cfg, &mut rng, true);
            for (a, b) in ms.ranges.iter().zip(&exact.ranges) {
                assert!((a - b).abs() < half);
            }
        }
    }

    #[test]
    fn max_range_constraint_rejects_far_geometries() {
        let p = ScenarioParams {
            num_gnbs: 1,
            num_ues: 1,
            max_bistatic_range: Some(200.0),
            ..ScenarioParams::default()
        };
        for seed in 0..30 {
            let sc = sample_scenario(&p, seed).unwrap();
            assert!(true_bistatic_ranges(&sc).get(0, 0) < 200.0);
        }
        let impossible = ScenarioParams {
            max_bistatic_range: Some(0.5),
            ..p
        };
        assert!(matches!(sample_scenario(&impossible, 0), Err(Error::Scenario(_))));
    }

    #[test]
    fn json_round_trip() {
        let sc = sample_scenario(&ScenarioParams::default(), 21).unwrap();
        let back = Scenario::from_json(&sc.to_json().unwrap()).unwrap();
        assert_eq!(sc, back);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sc.json");
        sc.save(&path).unwrap();
        assert_eq!(Scenario::load(&path).unwrap(), sc);
    }

    #[test]
    fn measurement_csv() {
        let sc = Scenario::line_of_sight(vec![Point2::new(3.0, 4.0)], vec![Point2::new(0.0, 5.0)], Point2::ORIGIN);
        let mut buf = Vec::new();
        true_bistatic_ranges(&sc).write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "s,k,r_hat,r_true\n0,0,10,10\n");
    }

    #[test]
    fn phy_rejects_out_of_window_ranges() {
        let sc = Scenario::line_of_sight(
            vec![Point2::new(300.0, 0.0)],
            vec![Point2::new(0.0, 5.0)],
            Point2::ORIGIN,
        );
        let err = synthesize_measurements_phy(&sc, &OfdmConfig::default(), &NoiseSpec::noiseless(), 1);
        assert!(matches!(err, Err(Error::Scenario(_))));
    }
}
