//! Named verification suites: each runs a fixed experiment, collects one or
//! more [`DecayReport`]s and writes them as JSON with a CSV mirror.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dyadic::{bernstein_uniformity, reverse_bernstein, weierstrass, DyadicSystem};
use crate::error::{Error, Result};
use crate::paracomp::{verify_conjugation, verify_linearization, verify_smoothing, Diffeomorphism, Paracomposer};
use crate::paradiff::{
    apply_t, bony_remainder, paraproduct, quadrature_oracle, unit_mode, verify_composition, CutoffPair, SeparableSymbol,
    SymbolTerm,
};
use crate::report::{fit_slope, DecayReport, Environment, ScalePoint};
use crate::spectral::{signed_index, FrequencyProfile, GridFunction, NormKind, C64};
use crate::waterwave::{conjugate_gamma, demonstrate_reduction, SurfaceState};
use crate::wkb::{measure_dispersion, measure_strichartz, measure_wkb_defect, SweepConfig, DEFAULT_PERIOD};

/// Suites runnable by name; `all` runs every one in this order.
pub const SUITES: &[&str] = &[
    "dyadic",
    "bony",
    "paradiff-oracle",
    "composition",
    "paracomp-id",
    "linearization",
    "conjugation",
    "reduction",
    "dispersion",
    "strichartz",
    "wkb-defect",
];

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PARASPEC_OUT";

pub const DEFAULT_OUT_DIR: &str = "reports";

pub const DEFAULT_SEED: u64 = 42;

/// Overrides for the per-suite defaults.
#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub grid_exp: Option<u32>,
    pub period: Option<f64>,
    pub seed: u64,
    pub jmin: Option<i32>,
    pub jmax: Option<i32>,
    pub hmin_exp: Option<i32>,
    pub hmax_exp: Option<i32>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { grid_exp: None, period: None, seed: DEFAULT_SEED, jmin: None, jmax: None, hmin_exp: None, hmax_exp: None }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.grid_exp {
            if !(4..=20).contains(&e) {
                return Err(Error::Config(format!("grid exponent {e} outside 4..=20")));
            }
        }
        if let Some(l) = self.period {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::Config(format!("period must be positive, got {l}")));
            }
        }
        if let (Some(a), Some(b)) = (self.jmin, self.jmax) {
            if a > b {
                return Err(Error::Config(format!("jmin {a} exceeds jmax {b}")));
            }
        }
        if let (Some(a), Some(b)) = (self.hmin_exp, self.hmax_exp) {
            if a > b {
                return Err(Error::Config(format!("hmin-exp {a} exceeds hmax-exp {b}")));
            }
        }
        if self.hmin_exp.is_some_and(|a| a < 1) {
            return Err(Error::Config("hmin-exp must be at least 1".into()));
        }
        Ok(())
    }

    fn grid(&self, default_exp: u32) -> usize {
        1usize << self.grid_exp.unwrap_or(default_exp)
    }

    fn period(&self) -> f64 {
        self.period.unwrap_or(2.0 * PI)
    }

    fn scales(&self, lo: i32, hi: i32) -> Vec<i32> {
        (self.jmin.unwrap_or(lo)..=self.jmax.unwrap_or(hi)).collect()
    }

    fn h_scales(&self) -> Vec<i32> {
        (self.hmin_exp.unwrap_or(5)..=self.hmax_exp.unwrap_or(9)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct SuiteOutcome {
    pub name: String,
    pub reports: Vec<DecayReport>,
}

impl SuiteOutcome {
    pub fn pass(&self) -> bool {
        !self.reports.is_empty() && self.reports.iter().all(|r| r.pass)
    }
}

/// Report for an exact identity or a fixed threshold: passes when every
/// point is at most `threshold`. The slope is fitted when meaningful.
fn threshold_report(id: &str, points: Vec<ScalePoint>, threshold: f64, env: Environment, fit: bool) -> DecayReport {
    let worst = points.iter().map(|p| p.norm).fold(0.0, f64::max);
    let (slope, r2) = if fit { fit_slope(&points).map(|f| (f.slope, f.r_squared)).unwrap_or((0.0, 0.0)) } else { (0.0, 0.0) };
    let mut env = env.note("bound_kind", "threshold").note("max_point", worst);
    if !fit {
        env = env.note("points_index", "trial");
    }
    DecayReport {
        suite_id: id.to_string(),
        points,
        fitted_slope: slope,
        r_squared: r2,
        expected_bound: threshold,
        tolerance: 0.0,
        pass: worst.is_finite() && worst <= threshold,
        environment: env,
    }
}

fn random_band(rng: &mut ChaCha8Rng, period: f64, n: usize, kmax: i64) -> GridFunction {
    let spec = (0..n)
        .map(|i| {
            if signed_index(i, n).abs() <= kmax {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    GridFunction::from_spectrum(period, spec).expect("finite spectrum")
}

fn dyadic(cfg: &SuiteConfig) -> Result<Vec<DecayReport>> {
    let (l, n) = (cfg.period(), cfg.grid(12));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points = Vec::new();
    for size in 0..=4u32 {
        let sys = DyadicSystem::new(size, l, n)?;
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let u = random_band(&mut rng, l, n, n as i64 / 2);
            let mut acc = GridFunction::zeros(l, n)?;
            for block in sys.decompose(&u) {
                acc = &acc + &block;
            }
            worst = worst.max(acc.max_abs_diff(&u));
        }
        points.push(ScalePoint { j: size as i32, norm: worst });
    }
    let env = Environment::new(n, l, cfg.seed).note("points_index", "size_n").note("trials_per_size", 20);
    let partition = threshold_report("dyadic-partition", points, 1e-12, env, false);

    let scales = cfg.scales(6, 10);
    let sizes = [0, 1, 2, 3, 4];
    let b0 = bernstein_uniformity(l, n, 0, &sizes, &scales, 20, cfg.seed)?;
    let b1 = bernstein_uniformity(l, n, 1, &sizes, &scales, 20, cfg.seed)?;
    let spread_points: Vec<ScalePoint> = scales
        .iter()
        .enumerate()
        .map(|(k, &j)| {
            let vals: Vec<f64> = b0.per_size.iter().map(|m| m.ratios[k].1).collect();
            let hi = vals.iter().cloned().fold(0.0, f64::max);
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            ScalePoint { j, norm: hi / lo }
        })
        .collect();
    let c1_max = b1.per_size.iter().flat_map(|m| m.ratios.iter().map(|r| r.1)).fold(0.0, f64::max);
    let c1_n0 = b1.per_size[0].ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    let mut env = Environment::new(n, l, cfg.seed)
        .note("alpha", 0)
        .note("max_growth_slope", b0.max_growth_slope)
        .note("alpha1_spread_across_n", b1.spread_across_n)
        .note("alpha1_max_constant", c1_max)
        .note("alpha1_size0_constant", c1_n0);
    for size in sizes {
        let sys = DyadicSystem::new(size, l, n)?;
        env = env.note(&format!("reverse_bernstein_n{size}"), reverse_bernstein(&sys, &scales, 5, cfg.seed));
    }
    let mut bern = threshold_report("dyadic-bernstein", spread_points, 2.0, env, false);
    bern.environment.notes.insert("points_index".into(), "j".into());
    if b0.max_growth_slope > 0.15 {
        bern.fail_with("Bernstein constant grows with j");
    }
    Ok(vec![partition, bern])
}

fn bony(cfg: &SuiteConfig) -> Result<Vec<DecayReport>> {
    let (l, n) = (cfg.period(), cfg.grid(12));
    let sys = DyadicSystem::new(0, l, n)?;
    let pair = CutoffPair::default_for(&sys)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let points: Vec<ScalePoint> = (0..100)
        .map(|t| {
            let a = random_band(&mut rng, l, n, n as i64 / 2);
            let u = random_band(&mut rng, l, n, n as i64 / 2);
            let prod = &a * &u;
            let sum = &(&paraproduct(&a, &u, &sys, &pair) + &paraproduct(&u, &a, &sys, &pair)) + &bony_remainder(&a, &u, &sys, &pair);
            ScalePoint { j: t, norm: sum.max_abs_diff(&prod) / prod.sup_norm().max(1.0) }
        })
        .collect();
    let mut env = Environment::new(n, l, cfg.seed);
    env.n_trunc = Some(pair.n_trunc());
    let identity = threshold_report("bony-identity", points, 1e-12, env.clone(), false);

    let (alpha, beta) = (0.6, 0.4);
    let a = weierstrass(l, n, alpha, 10)?;
    let za = a.norm(NormKind::Zygmund(alpha, &sys))?;
    let scales = cfg.scales(4, 9);
    let ratios: Vec<ScalePoint> = scales
        .iter()
        .map(|&j| -> Result<ScalePoint> {
            let u = unit_mode(l, n, j)?;
            let r = bony_remainder(&a, &u, &sys, &pair);
            let top = (0..=sys.p_max())
                .map(|q| 2f64.powf(q as f64 * (alpha + beta)) * sys.delta(&r, q).sup_norm())
                .fold(0.0, f64::max);
            let zu = u.norm(NormKind::Zygmund(beta, &sys))?;
            Ok(ScalePoint { j, norm: top / (za * zu) })
        })
        .collect::<Result<_>>()?;
    let hi = ratios.iter().map(|p| p.norm).fold(0.0, f64::max);
    let lo = ratios.iter().map(|p| p.norm).fold(f64::INFINITY, f64::min);
    let drift = hi / lo;
    let fit = fit_slope(&ratios)?;
    let env = env.note("bound_kind", "drift").note("drift", drift).note("alpha", alpha).note("beta", beta);
    let remainder = DecayReport {
        suite_id: "bony-remainder".into(),
        points: ratios,
        fitted_slope: fit.slope,
        r_squared: fit.r_squared,
        expected_bound: 3.0,
        tolerance: 0.0,
        pass: drift <= 3.0,
        environment: env,
    };
    Ok(vec![identity, remainder])
}

fn paradiff_oracle(cfg: &SuiteConfig) -> Result<Vec<DecayReport>> {
    let (l, n) = (cfg.period(), cfg.grid(8));
    let sys = DyadicSystem::new(0, l, n)?;
    let pair = CutoffPair::default_for(&sys)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let profiles = [
        FrequencyProfile::abs_pow(1.5),
        FrequencyProfile::i_xi(),
        FrequencyProfile::abs_pow(0.5),
        FrequencyProfile::one(),
    ];
    let half = n as i64 / 2 - 1;
    let points: Vec<ScalePoint> = (0..25)
        .map(|t| -> Result<ScalePoint> {
            let u = random_band(&mut rng, l, n, half);
            let k1 = rng.gen_range(0..profiles.len());
            let k2 = (k1 + 1 + rng.gen_range(0..profiles.len() - 1)) % profiles.len();
            let kc1 = rng.gen_range(1..=n as i64 / 8);
            let c1 = random_band(&mut rng, l, n, kc1);
            let kc2 = rng.gen_range(1..=n as i64 / 8);
            let c2 = random_band(&mut rng, l, n, kc2);
            let a = SeparableSymbol::new(
                vec![SymbolTerm::new(c1, profiles[k1].clone())?, SymbolTerm::new(c2, profiles[k2].clone())?],
                1.0,
            )?;
            let fast = apply_t(&a, &u, &sys, &pair)?;
            let slow = quadrature_oracle(&a, &u, &sys, &pair)?;
            Ok(ScalePoint { j: t, norm: fast.rel_l2_diff(&slow) })
        })
        .collect::<Result<_>>()?;
    let mut env = Environment::new(n, l, cfg.seed);
    env.n_trunc = Some(pair.n_trunc());
    Ok(vec![threshold_report("paradiff-oracle", points, 1e-8, env, false)])
}

fn composition(cfg: &SuiteConfig) -> Result<Vec<DecayReport>> {
    let (l, n) = (cfg.period(), cfg.grid(12));
    let k0 = 2.0 * PI / l;
    let sys = DyadicSystem::new(0, l, n)?;
    let pair = CutoffPair::new(&sys, 3)?;
    let ca = GridFunction::from_real_fn(l, n, |x| (1.0 + (k0 * x).sin().powi(2)).powf(-0.75))?;
    let v = GridFunction::from_real_fn(l, n, |x| 1.0 + 0.5 * (k0 * x).cos() + 0.2 * (2.0 * k0 * x).sin())?;
    let a = SeparableSymbol::single(ca, FrequencyProfile::abs_pow(1.5), 1.0)?;
    let b = SeparableSymbol::single(v, FrequencyProfile::i_xi(), 1.0)?;
    let mut r = verify_composition(&a, &b, &sys, &pair, &cfg.scales(4, 9), 0.3)?;
    r.environment.seed = cfg.seed;
    Ok(vec![r])
}

fn paracomp_id(cfg: &SuiteConfig) -> Result<Vec<DecayReport>> {
    let (l, n) = (cfg.period(), cfg.grid(12));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pc = Paracomposer::new(Diffeomorphism::identity(l, n)?)?;
    let mut points = Vec::new();
    for t in 0..5 {
        let u = random_band(&mut rng, l, n, n as i64 / 4);
        let scale = u.l2_norm();
        let g = pc.global(&u)?.rel_l2_diff(&u);
        let s = (&pc.smoothed(&u)? - &u).l2_norm() / scale;
        points.push(ScalePoint { j: t, norm: g.max(s) });
    }
    let mut env = Environment::new(n, l, cfg.seed);
    env.n0 = Some(pc.kappa().n0());
    env.n_trunc = Some(pc.source_pair().n_trunc());
    env.n_tilde = Some(pc.n_tilde());
    let identity = threshold_report("paracomp-id", points, 1e-10, env, false);

    let kappa = Diffeomorphism::manufactured(l, n, 1.0, 0.3, 0.05, cfg.seed)?;
    let pc = Paracomposer::new(kappa)?;
    let mut points = Vec::new();
    for t in 0..5 {
        let u = random_band(&mut rng, l, n, n as i64 / 4);
        let v = random_band(&mut rng, l, n, n as i64 / 4);
        let (a, b) = (C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)), C64::new(rng.gen_range(-2.0..2.0), 0.0));
        let lhs = pc.global(&(&u.scale(a) + &v.scale(b)))?;
        let rhs = &pc.global(&u)?.scale(a) + &pc.global(&v)?.scale(b);
        points.push(ScalePoint { j: t, norm: lhs.rel_l2_diff(&rhs) });
    }
    let mut env = Environment::new(n, l, cfg.seed);
    env.n0 = Some(pc.kappa().n0());
    env.n_trunc = Some(pc.source_pair().n_trunc());
    env.n_tilde = Some(pc.n_tilde());
    let linear = threshold_report("paracomp-linearity", points, 1e-12, env, false);
    Ok(vec![identity, linear])
}

/// Manufactured `κ` with `ρ = 1` and truncations `N = n + 3` on both sides.
fn manufactured_composer(cfg: &SuiteConfig) -> Result<Paracomposer> {
    let kappa = Diffeomorphism::manufactured(cfg.period(), cfg.grid(16), 1.0, 0.3, 0.05, cfg.seed)?;
    let n0 = kappa.n0() as i32;
    Paracomposer::with_truncation(kappa, 3, n0 + 3, 2 * (n0 + 1) + 8)
}

fn linearization(cfg: &SuiteConfig) -> Result<Vec<DecayReport>> {
    let pc = manufactured_composer(cfg)?;
    let scales = cfg.scales(9, 14);
    let line = verify_linearization(&pc, &scales, 0.5, 0.3, cfg.seed)?;
    let smooth = verify_smoothing(&pc, &scales, 0.3, cfg.seed)?;
    Ok(vec![line, smooth])
}

fn surface(cfg: &SuiteConfig, amplitude: f64) -> Result<SurfaceState> {
    let l = cfg.period();
    let k0 = 2.0 * PI / l;
    SurfaceState::from_fns(l, cfg.grid(16), |x| amplitude * (k0 * x).cos(), |x| (k0 * x).sin(), None)
}

fn conjugation(cfg: &SuiteConfig) -> Result<Vec<DecayReport>> {
    let pc = manufactured_composer(cfg)?;
    let scales = cfg.scales(9, 14);
    let l = cfg.period();
    let k0 = 2.0 * PI / l;
    let v = GridFunction::from_real_fn(l, cfg.grid(16), |y| 1.0 + 0.5 * (k0 * y).cos() + 0.2 * (2.0 * k0 * y).sin())?;
    let h = SeparableSymbol::single(v, FrequencyProfile::i_xi(), f64::INFINITY)?;
    let mut transport = verify_conjugation(&pc, &h, &scales, 0.3, cfg.seed)?;
    transport.suite_id = "conjugation-transport".into();
    let mut gamma = conjugate_gamma(&surface(cfg, 0.3)?, &scales, 0.3, cfg.seed)?;
    gamma.suite_id = "conjugation-gamma".into();
    Ok(vec![transport, gamma])
}

fn reduction(cfg: &SuiteConfig) -> Result<Vec<DecayReport>> {
    let scales = cfg.scales(9, 14);
    let wavy = demonstrate_reduction(&surface(cfg, 0.3)?, &scales, 0.3, cfg.seed)?;
    let flat = demonstrate_reduction(&surface(cfg, 0.0)?, &scales, 0.3, cfg.seed)?;
    let rel: Vec<f64> = flat
        .environment
        .notes
        .get("relative_residuals")
        .and_then(|v| serde_json::from_value(v.clone()).ok())
        .ok_or_else(|| Error::Numerical("flat reduction lacks relative residuals".into()))?;
    let points = scales.iter().zip(rel).map(|(&j, norm)| ScalePoint { j, norm }).collect();
    let floor = threshold_report("reduction-flat", points, 1e-12, flat.environment.clone(), false);
    let mut floor = floor;
    floor.environment.notes.insert("points_index".into(), "j".into());
    floor.environment.notes.insert("relative".into(), true.into());
    Ok(vec![wavy, floor])
}

fn sweep(cfg: &SuiteConfig, amplitude: f64) -> SweepConfig {
    let mut s = SweepConfig::new(cfg.h_scales(), amplitude);
    if let Some(l) = cfg.period {
        s.period = l;
        s.x0 = l / 4.0;
    } else {
        s.period = DEFAULT_PERIOD;
    }
    s
}

fn tag(mut r: DecayReport, id: &str, seed: u64) -> DecayReport {
    r.suite_id = id.to_string();
    r.environment.seed = seed;
    r
}

fn dispersion(cfg: &SuiteConfig) -> Result<Vec<DecayReport>> {
    let free = measure_dispersion(&sweep(cfg, 0.0))?.1;
    let driven = measure_dispersion(&sweep(cfg, 0.4))?.1;
    Ok(vec![tag(free, "dispersion-free", cfg.seed), tag(driven, "dispersion-transport", cfg.seed)])
}

fn strichartz(cfg: &SuiteConfig) -> Result<Vec<DecayReport>> {
    let free = measure_strichartz(&sweep(cfg, 0.0))?.0;
    let driven = measure_strichartz(&sweep(cfg, 0.4))?.0;
    Ok(vec![tag(free, "strichartz-free", cfg.seed), tag(driven, "strichartz-transport", cfg.seed)])
}

fn wkb_defect(cfg: &SuiteConfig) -> Result<Vec<DecayReport>> {
    let r = measure_wkb_defect(&sweep(cfg, 0.4), 1.0)?.0;
    Ok(vec![tag(r, "wkb-defect", cfg.seed)])
}

/// Runs one named suite (not `all`).
pub fn run_suite(name: &str, cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    cfg.validate()?;
    let reports = match name {
        "dyadic" => dyadic(cfg)?,
        "bony" => bony(cfg)?,
        "paradiff-oracle" => paradiff_oracle(cfg)?,
        "composition" => composition(cfg)?,
        "paracomp-id" => paracomp_id(cfg)?,
        "linearization" => linearization(cfg)?,
        "conjugation" => conjugation(cfg)?,
        "reduction" => reduction(cfg)?,
        "dispersion" => dispersion(cfg)?,
        "strichartz" => strichartz(cfg)?,
        "wkb-defect" => wkb_defect(cfg)?,
        other => return Err(Error::Config(format!("unknown suite `{other}`; expected one of {} or all", SUITES.join(", ")))),
    };
    Ok(SuiteOutcome { name: name.to_string(), reports })
}

/// Expands `all` and runs each suite in order.
pub fn run_suites(name: &str, cfg: &SuiteConfig) -> Result<Vec<SuiteOutcome>> {
    if name == "all" {
        SUITES.iter().map(|s| run_suite(s, cfg)).collect()
    } else {
        Ok(vec![run_suite(name, cfg)?])
    }
}

/// Writes `<id>.json` and `<id>.csv` for every report.
pub fn write_outcome(outcome: &SuiteOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for r in &outcome.reports {
        for csv in [false, true] {
            let path = dir.join(format!("{}.{}", r.suite_id, if csv { "csv" } else { "json" }));
            r.write(&path, csv).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Output directory from the environment, or [`DEFAULT_OUT_DIR`].
pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_config_error() {
        assert!(matches!(run_suite("nope", &SuiteConfig::default()), Err(Error::Config(_))));
    }

    #[test]
    fn bad_ranges_rejected() {
        let cfg = SuiteConfig { jmin: Some(8), jmax: Some(4), ..Default::default() };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let cfg = SuiteConfig { period: Some(-1.0), ..Default::default() };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn threshold_report_passes_on_small_points() {
        let pts = vec![ScalePoint { j: 0, norm: 1e-14 }, ScalePoint { j: 1, norm: 2e-13 }];
        let r = threshold_report("t", pts.clone(), 1e-12, Environment::default(), false);
        assert!(r.pass);
        let r = threshold_report("t", pts, 1e-13, Environment::default(), false);
        assert!(!r.pass);
    }

    #[test]
    fn oracle_suite_on_small_grid() {
        let cfg = SuiteConfig { grid_exp: Some(6), ..Default::default() };
        let out = run_suite("paradiff-oracle", &cfg).unwrap();
        assert!(out.pass(), "{:?}", out.reports[0].points);
    }
}
