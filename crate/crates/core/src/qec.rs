//! Error budgets, code-distance selection and physical footprints.

use serde::{Deserialize, Serialize};

use crate::circuit::ParallelismProfile;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QecError {
    #[error("total logical ops must be at least 1")]
    ZeroOps,
    #[error("success target {0} must lie strictly between 0 and 1")]
    DegenerateTarget(f64),
    #[error("uncorrectable technology: p_P = {p_p:e} is not below threshold {p_th:e}")]
    Uncorrectable { p_p: f64, p_th: f64 },
    #[error("rate {0:e} must lie strictly between 0 and 1")]
    BadRate(f64),
    #[error("code distance {0} must be odd and at least 3")]
    BadDistance(u32),
    #[error("no code distance up to {max} reaches p_L = {p_l:e}")]
    DistanceLimit { p_l: f64, max: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Encoding {
    Planar,
    DoubleDefect,
}

impl Encoding {
    pub fn name(self) -> &'static str {
        match self {
            Encoding::Planar => "planar",
            Encoding::DoubleDefect => "double_defect",
        }
    }
}

/// A ratio `num:den`, e.g. one ancilla tile per four data tiles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub const fn new(num: u64, den: u64) -> Self {
        Ratio { num, den }
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Planar tile side length `slope * d + offset` physical qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileFormula {
    pub slope: i64,
    pub offset: i64,
}

impl Default for TileFormula {
    fn default() -> Self {
        TileFormula { slope: 2, offset: -1 }
    }
}

/// Tunable constants for the surface-code cost model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QecConfig {
    /// Prefactor of the logical error fit.
    #[serde(rename = "A")]
    pub a: f64,
    pub p_th: f64,
    pub planar_tile_formula: TileFormula,
    pub dd_tile_multiplier: u64,
    pub syndrome_cycle_seconds: f64,
    pub ancilla_ratio: Ratio,
    pub factory_size_tiles: u64,
    pub success_target: f64,
}

impl Default for QecConfig {
    fn default() -> Self {
        QecConfig {
            a: 0.03,
            p_th: 1e-2,
            planar_tile_formula: TileFormula::default(),
            dd_tile_multiplier: 2,
            syndrome_cycle_seconds: 1e-6,
            ancilla_ratio: Ratio::new(1, 4),
            factory_size_tiles: 12,
            success_target: 0.5,
        }
    }
}

impl QecConfig {
    /// Per-operation logical error rate at distance `d`:
    /// `A * (p_P / p_th)^ceil(d / 2)`.
    pub fn model_logical_rate(&self, p_p: f64, d: u32) -> f64 {
        self.a * (p_p / self.p_th).powi(d.div_ceil(2) as i32)
    }

    /// Smallest odd `d >= 3` whose modelled rate does not exceed `p_l`.
    pub fn choose_distance(&self, p_p: f64, p_l: f64) -> Result<u32, QecError> {
        choose_distance_with(self, p_p, p_l)
    }

    pub fn tile_footprint(&self, encoding: Encoding, d: u32) -> u64 {
        let side = self.planar_tile_formula.slope * i64::from(d) + self.planar_tile_formula.offset;
        let planar = (side.max(1) as u64).pow(2);
        match encoding {
            Encoding::Planar => planar,
            Encoding::DoubleDefect => planar * self.dd_tile_multiplier,
        }
    }
}

/// `(1 - success_target) / total_logical_ops`.
pub fn required_logical_rate(total_logical_ops: u64, success_target: f64) -> Result<f64, QecError> {
    if total_logical_ops == 0 {
        return Err(QecError::ZeroOps);
    }
    if !(success_target > 0.0 && success_target < 1.0) {
        return Err(QecError::DegenerateTarget(success_target));
    }
    Ok((1.0 - success_target) / total_logical_ops as f64)
}

const MAX_DISTANCE: u32 = 100_001;

fn choose_distance_with(cfg: &QecConfig, p_p: f64, p_l: f64) -> Result<u32, QecError> {
    if !(p_p > 0.0 && p_p < 1.0) {
        return Err(QecError::BadRate(p_p));
    }
    if p_p >= cfg.p_th {
        return Err(QecError::Uncorrectable {
            p_p,
            p_th: cfg.p_th,
        });
    }
    if !(p_l > 0.0 && p_l < 1.0) {
        return Err(QecError::BadRate(p_l));
    }
    let ok = |d: u32| cfg.model_logical_rate(p_p, d) <= p_l;
    if ok(3) {
        return Ok(3);
    }
    // Gallop over odd distances, then bisect the bracket.
    let mut lo = 3u32;
    let mut hi = 5u32;
    while !ok(hi) {
        lo = hi;
        hi = 2 * hi + 1;
        if hi > MAX_DISTANCE {
            return Err(QecError::DistanceLimit {
                p_l,
                max: MAX_DISTANCE,
            });
        }
    }
    // Invariant: !ok(lo), ok(hi), both odd.
    while hi - lo > 2 {
        let mid = lo + ((hi - lo) / 2 & !1);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Probability budget for one application run on one technology.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub total_logical_ops: u64,
    pub success_target: f64,
    pub p_l: f64,
    pub p_p: f64,
}

impl ErrorBudget {
    pub fn new(total_logical_ops: u64, success_target: f64, p_p: f64) -> Result<Self, QecError> {
        if !(p_p > 0.0 && p_p < 1.0) {
            return Err(QecError::BadRate(p_p));
        }
        let p_l = required_logical_rate(total_logical_ops, success_target)?;
        Ok(ErrorBudget {
            total_logical_ops,
            success_target,
            p_l,
            p_p,
        })
    }
}

/// Resolved physical parameters for one encoding at one distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeParams {
    pub encoding: Encoding,
    pub d: u32,
    pub physical_qubits_per_tile: u64,
    pub syndrome_cycle_seconds: f64,
    /// Tiles occupied by one magic-state factory.
    pub factory_tiles_magic: u64,
    /// Tiles occupied by one EPR factory; zero for double-defect.
    pub factory_tiles_epr: u64,
    pub ancilla_to_data_ratio: Ratio,
}

impl CodeParams {
    pub fn new(encoding: Encoding, d: u32, cfg: &QecConfig) -> Result<Self, QecError> {
        if d < 3 || d % 2 == 0 {
            return Err(QecError::BadDistance(d));
        }
        Ok(CodeParams {
            encoding,
            d,
            physical_qubits_per_tile: cfg.tile_footprint(encoding, d),
            syndrome_cycle_seconds: cfg.syndrome_cycle_seconds,
            factory_tiles_magic: cfg.factory_size_tiles,
            factory_tiles_epr: match encoding {
                Encoding::Planar => cfg.factory_size_tiles,
                Encoding::DoubleDefect => 0,
            },
            ancilla_to_data_ratio: cfg.ancilla_ratio,
        })
    }
}

/// Factory counts for a program with `data_tiles` logical qubits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactoryPlan {
    pub data_tiles: u64,
    pub magic_factories: u64,
    pub epr_factories: u64,
    pub tiles_per_factory: u64,
}

impl FactoryPlan {
    pub fn magic_tiles(&self) -> u64 {
        self.magic_factories * self.tiles_per_factory
    }

    pub fn epr_tiles(&self) -> u64 {
        self.epr_factories * self.tiles_per_factory
    }

    pub fn total_tiles(&self) -> u64 {
        self.magic_tiles() + self.epr_tiles()
    }
}

/// Size factories by the ancilla-to-data ratio.
///
/// The ancilla budget is `data_tiles * ratio` tiles, packed into factories of
/// `factory_tiles_magic` tiles each, with at least one factory. Programs
/// without T gates get no magic-state factory. EPR factories exist only for
/// the planar encoding and follow the same sizing.
pub fn factory_plan(data_tiles: u64, profile: &ParallelismProfile, params: &CodeParams) -> FactoryPlan {
    let size = params.factory_tiles_magic.max(1);
    let ratio = params.ancilla_to_data_ratio;
    let by_ratio = (data_tiles * ratio.num).div_ceil(ratio.den * size).max(1);
    let magic = if profile.t_count == 0 { 0 } else { by_ratio };
    let epr = match params.encoding {
        Encoding::Planar => by_ratio,
        Encoding::DoubleDefect => 0,
    };
    FactoryPlan {
        data_tiles,
        magic_factories: magic,
        epr_factories: epr,
        tiles_per_factory: size,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(t_count: usize) -> ParallelismProfile {
        ParallelismProfile {
            parallelism_factor: 1.0,
            total_ops: 10,
            t_count,
            twoq_count: 0,
            num_levels: 10,
        }
    }

    #[test]
    fn required_rate_examples() {
        assert_eq!(required_logical_rate(1_000_000_000_000, 0.5).unwrap(), 0.5e-12);
        assert_eq!(required_logical_rate(1, 0.5).unwrap(), 0.5);
        let r = required_logical_rate(1_000_000, 0.9).unwrap();
        assert!((r - 1e-7).abs() < 1e-20);
        assert_eq!(required_logical_rate(0, 0.5), Err(QecError::ZeroOps));
        assert!(matches!(required_logical_rate(5, 1.0), Err(QecError::DegenerateTarget(_))));
        assert!(matches!(required_logical_rate(5, 0.0), Err(QecError::DegenerateTarget(_))));
    }

    fn linear_scan(cfg: &QecConfig, p_p: f64, p_l: f64) -> u32 {
        let mut d = 3;
        loop {
            let rate = cfg.a * (p_p / cfg.p_th).powi(((d + 1) / 2) as i32);
            if rate <= p_l {
                return d;
            }
            d += 2;
        }
    }

    #[test]
    fn distance_fixed_point() {
        let cfg = QecConfig::default();
        let p = cfg.p_th / 10.0;
        let p_l = cfg.model_logical_rate(p, 5);
        assert_eq!(cfg.choose_distance(p, p_l).unwrap(), 5);
    }

    #[test]
    fn distance_matches_scan() {
        let cfg = QecConfig::default();
        let d = cfg.choose_distance(1e-8, 0.5e-12).unwrap();
        assert_eq!(d, linear_scan(&cfg, 1e-8, 0.5e-12));
        assert_eq!(d, 3);
        for (p, l) in [(1e-3, 0.5e-12), (5e-3, 1e-15), (9.9e-3, 1e-9), (1e-4, 1e-20)] {
            assert_eq!(cfg.choose_distance(p, l).unwrap(), linear_scan(&cfg, p, l), "{p} {l}");
        }
    }

    #[test]
    fn tighter_target_never_lowers_distance() {
        let cfg = QecConfig::default();
        let a = cfg.choose_distance(1e-3, 1e-6).unwrap();
        let b = cfg.choose_distance(1e-3, 1e-12).unwrap();
        assert!(b >= a);
    }

    #[test]
    fn threshold_is_uncorrectable() {
        let cfg = QecConfig::default();
        assert!(matches!(cfg.choose_distance(1e-2, 1e-6), Err(QecError::Uncorrectable { .. })));
        assert!(matches!(cfg.choose_distance(0.5, 1e-6), Err(QecError::Uncorrectable { .. })));
    }

    #[test]
    fn model_is_strictly_decreasing_in_odd_steps() {
        let cfg = QecConfig::default();
        for d in (3..41).step_by(2) {
            assert!(cfg.model_logical_rate(1e-3, d + 2) < cfg.model_logical_rate(1e-3, d));
        }
    }

    #[test]
    fn tile_footprints() {
        let cfg = QecConfig::default();
        assert_eq!(cfg.tile_footprint(Encoding::Planar, 3), 25);
        assert_eq!(cfg.tile_footprint(Encoding::Planar, 5), 81);
        for d in (3..30).step_by(2) {
            assert_eq!(
                cfg.tile_footprint(Encoding::DoubleDefect, d),
                2 * cfg.tile_footprint(Encoding::Planar, d)
            );
        }
    }

    #[test]
    fn factory_counts() {
        let cfg = QecConfig::default();
        let dd = CodeParams::new(Encoding::DoubleDefect, 3, &cfg).unwrap();
        assert_eq!(factory_plan(48, &profile(1), &dd).magic_factories, 1);
        assert_eq!(factory_plan(1, &profile(1), &dd).magic_factories, 1);
        assert_eq!(factory_plan(480, &profile(1), &dd).magic_factories, 10);
        assert_eq!(factory_plan(49, &profile(1), &dd).magic_factories, 2);
        assert_eq!(factory_plan(480, &profile(0), &dd).magic_factories, 0);
        assert_eq!(factory_plan(480, &profile(1), &dd).epr_factories, 0);
        let pl = CodeParams::new(Encoding::Planar, 3, &cfg).unwrap();
        let plan = factory_plan(96, &profile(3), &pl);
        assert_eq!((plan.magic_factories, plan.epr_factories), (2, 2));
        assert_eq!(plan.total_tiles(), 48);
    }

    #[test]
    fn code_params_validation() {
        let cfg = QecConfig::default();
        assert!(CodeParams::new(Encoding::Planar, 4, &cfg).is_err());
        assert!(CodeParams::new(Encoding::Planar, 1, &cfg).is_err());
        let p = CodeParams::new(Encoding::DoubleDefect, 5, &cfg).unwrap();
        assert_eq!(p.physical_qubits_per_tile, 162);
        assert_eq!(p.ancilla_to_data_ratio, Ratio::new(1, 4));
    }

    #[test]
    fn budget() {
        let b = ErrorBudget::new(1_000_000_000_000, 0.5, 1e-3).unwrap();
        assert_eq!(b.p_l, 0.5e-12);
        assert!(ErrorBudget::new(10, 0.5, 1.5).is_err());
    }
}
