//! Global paracomposition `κ*_g u = Σ_p [u_p ∘ κ]_p` by a diffeomorphism
//! `κ(x) = c·x + P(x)` with `P` periodic, and its remainders.
//!
//! The target side (functions `u` of `y = κ(x)`) is decomposed with the size-0
//! partition; the source side uses the adapted size `n0`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicSystem;
use crate::error::{invalid, Error, Result};
use crate::paradiff::{apply_t, tdot_function, unit_mode, CutoffPair, SeparableSymbol, SymbolTerm};
use crate::report::{DecayReport, Environment, ScalePoint};
use crate::spectral::{signed_index, GridFunction, NormKind, C64};

pub const DEFAULT_EPS0: f64 = 0.1;

/// Coefficients below this fraction of the largest one are skipped in off-grid sums.
const SPARSE_REL_TOL: f64 = 1e-16;

/// Largest sup-norm bound of `S_p` over partition sizes `0..=4`, measured as
/// the ℓ¹ norm of the discrete kernel.
pub fn measured_m1() -> f64 {
    static M1: OnceLock<f64> = OnceLock::new();
    *M1.get_or_init(|| {
        let mut best: f64 = 1.0;
        for n in 0..=4 {
            let sys = DyadicSystem::new(n, 2.0 * PI, 2048).expect("reference system");
            for j in 3..=7 {
                best = best.max(sys.s_kernel_l1(j));
            }
        }
        best
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionChoice {
    pub n0: u32,
    pub p0: i32,
    pub m1: f64,
    pub m2: f64,
    pub k: f64,
    pub eps0: f64,
    /// `‖κ′‖_{C^{ε0}}` measured with the size-`n0` partition.
    pub holder_norm: f64,
}

/// Picks the partition size `n0` and threshold `p0` for a derivative `κ′ ≥ m0`.
pub fn select_partition_size(deriv: &GridFunction, m0: f64, eps0: f64) -> Result<PartitionChoice> {
    if !(m0 > 0.0) {
        return invalid(format!("κ′ must be bounded below by a positive constant, got {m0}"));
    }
    if !(eps0 > 0.0 && eps0 < 1.0) {
        return invalid(format!("ε0 must lie in (0, 1), got {eps0}"));
    }
    let m1 = measured_m1();
    let k = 2.0 / m0;
    let sup = deriv.sup_norm();
    let n0 = (m1 * sup + 1.0).log2().floor() + (1.0 + k.ln()).floor() + 1.0;
    if n0 > 8.0 {
        return Err(Error::Config(format!("partition size {n0} exceeds the supported maximum 8")));
    }
    let n0 = n0 as u32;
    let sys = DyadicSystem::new(n0, deriv.period(), deriv.len())?;
    let holder_norm = deriv.norm(NormKind::Zygmund(eps0, &sys))?;
    let m2 = (0..=sys.p_max())
        .map(|p| 2f64.powf(p as f64 * eps0) * (deriv - &sys.s(deriv, p)).sup_norm() / holder_norm)
        .fold(0.0, f64::max);
    let arg = 2.0 * m2 * holder_norm / m0;
    let p0 = if arg > 1.0 { (arg.ln().floor() / eps0).ceil() as i32 + 1 } else { 1 };
    Ok(PartitionChoice { n0, p0, m1, m2, k, eps0, holder_norm })
}

/// Serialized form of a diffeomorphism.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffeoRecord {
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    pub c: f64,
    pub perturbation_spectrum: Vec<[f64; 2]>,
    pub m0: f64,
    pub rho: f64,
    pub n0: u32,
    pub p0: i32,
}

/// `κ(x) = c·x + P(x)` with `κ(x + L1) = κ(x) + L2` and `κ′ ≥ m0 > 0`.
#[derive(Clone, Debug)]
pub struct Diffeomorphism {
    target_period: f64,
    c: f64,
    pert: GridFunction,
    deriv: GridFunction,
    m0: f64,
    rho: f64,
    choice: PartitionChoice,
}

impl Diffeomorphism {
    /// `pert` is the periodic part on the source grid; `rho` the declared
    /// Hölder regularity of `κ′`.
    pub fn new(pert: GridFunction, target_period: f64, rho: f64) -> Result<Self> {
        if !pert.is_real(1e-10) {
            return invalid("perturbation must be real");
        }
        if !(target_period > 0.0 && target_period.is_finite()) {
            return invalid(format!("target period must be positive, got {target_period}"));
        }
        if !(rho > 0.0) {
            return invalid(format!("regularity must be positive, got {rho}"));
        }
        let pert = pert.re();
        let c = target_period / pert.period();
        let deriv = pert.derivative().map(|z| C64::new(z.re + c, 0.0));
        let m0 = deriv.samples().iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        if !(m0 > 0.0) {
            return invalid(format!("κ′ must stay positive, minimum is {m0}"));
        }
        let choice = select_partition_size(&deriv, m0, DEFAULT_EPS0)?;
        Ok(Self { target_period, c, pert, deriv, m0, rho, choice })
    }

    pub fn identity(period: f64, n: usize) -> Result<Self> {
        Self::new(GridFunction::zeros(period, n)?, period, f64::INFINITY)
    }

    /// `κ(x) = factor·x`.
    pub fn dilation(period: f64, n: usize, factor: f64) -> Result<Self> {
        Self::new(GridFunction::zeros(period, n)?, factor * period, f64::INFINITY)
    }

    /// From samples of `κ` at the source grid points.
    pub fn from_values(source_period: f64, values: &[f64], target_period: f64, rho: f64) -> Result<Self> {
        let n = values.len();
        let c = target_period / source_period;
        let dx = source_period / n as f64;
        let pert: Vec<f64> = values.iter().enumerate().map(|(i, v)| v - c * i as f64 * dx).collect();
        Self::new(GridFunction::from_real(source_period, &pert)?, target_period, rho)
    }

    /// `κ′ = 1 + a cos(2πx/L) + r(x)` where the rough part `r` has per-mode
    /// amplitude `|ξ|^{−(ρ+1/2)}` with random phases, rescaled to sup norm
    /// `rough_amp`. Its Zygmund `C^ρ` norm is flat across scales.
    pub fn manufactured(period: f64, n: usize, rho: f64, smooth_amp: f64, rough_amp: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = n / 2;
        let mut rough = vec![C64::new(0.0, 0.0); n];
        for k in 2..half {
            let xi = 2.0 * PI * k as f64 / period;
            let amp = xi.powf(-(rho + 0.5));
            let z = C64::from_polar(0.5 * amp, rng.gen_range(0.0..2.0 * PI));
            rough[k] = z;
            rough[n - k] = z.conj();
        }
        let rough_fn = GridFunction::from_spectrum(period, rough)?;
        let scale = if rough_amp > 0.0 { rough_amp / rough_fn.sup_norm() } else { 0.0 };
        let mut spec: Vec<C64> = rough_fn.spectrum().iter().map(|z| z * scale).collect();
        spec[1] += C64::new(0.5 * smooth_amp, 0.0);
        spec[n - 1] += C64::new(0.5 * smooth_amp, 0.0);
        // antiderivative of the zero-mean part
        for (i, z) in spec.iter_mut().enumerate() {
            let k = signed_index(i, n);
            *z = if k == 0 { C64::new(0.0, 0.0) } else { *z / C64::new(0.0, 2.0 * PI * k as f64 / period) };
        }
        Self::new(GridFunction::from_spectrum(period, spec)?, period, rho)
    }

    pub fn source_period(&self) -> f64 {
        self.pert.period()
    }

    pub fn target_period(&self) -> f64 {
        self.target_period
    }

    pub fn n_points(&self) -> usize {
        self.pert.len()
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn m0(&self) -> f64 {
        self.m0
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn n0(&self) -> u32 {
        self.choice.n0
    }

    pub fn p0(&self) -> i32 {
        self.choice.p0
    }

    pub fn choice(&self) -> &PartitionChoice {
        &self.choice
    }

    /// Periodic part `κ − c·x`.
    pub fn perturbation(&self) -> &GridFunction {
        &self.pert
    }

    pub fn derivative(&self) -> &GridFunction {
        &self.deriv
    }

    pub fn second_derivative(&self) -> GridFunction {
        self.pert.derivative_n(2).re()
    }

    /// `κ(x_i)` at the source grid points.
    pub fn values_on_grid(&self) -> Vec<f64> {
        let dx = self.pert.dx();
        self.pert.samples().iter().enumerate().map(|(i, p)| self.c * i as f64 * dx + p.re).collect()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.c * x + self.pert.trig_sum(0.0).eval(x).re
    }

    fn eval_deriv(&self, x: f64) -> f64 {
        self.deriv.trig_sum(0.0).eval(x).re
    }

    /// `κ^{-1}(y)` by bisection on the bracket `(y ∓ ‖P‖_∞)/c`, polished by Newton.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        let bound = 1.05 * self.pert.sup_norm() + 1e-9;
        let (mut lo, mut hi) = ((y - bound) / self.c, (y + bound) / self.c);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..3 {
            x -= (self.eval(x) - y) / self.eval_deriv(x);
        }
        if !x.is_finite() || (self.eval(x) - y).abs() > 1e-9 * (1.0 + y.abs()) {
            return Err(Error::Numerical(format!("inversion failed at y = {y}")));
        }
        Ok(x)
    }

    /// `S_p κ = c·x + S_p P` at the source grid points.
    pub fn smoothed_values(&self, system: &DyadicSystem, p: i32) -> Vec<f64> {
        let sp = system.s(&self.pert, p);
        let dx = self.pert.dx();
        sp.samples().iter().enumerate().map(|(i, v)| self.c * i as f64 * dx + v.re).collect()
    }

    pub fn to_record(&self) -> DiffeoRecord {
        DiffeoRecord {
            l1: self.source_period(),
            l2: self.target_period,
            c: self.c,
            perturbation_spectrum: self.pert.spectrum().iter().map(|z| [z.re, z.im]).collect(),
            m0: self.m0,
            rho: self.rho,
            n0: self.choice.n0,
            p0: self.choice.p0,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_record())?)
    }

    pub fn from_record(r: &DiffeoRecord) -> Result<Self> {
        let spec: Vec<C64> = r.perturbation_spectrum.iter().map(|v| C64::new(v[0], v[1])).collect();
        Self::new(GridFunction::from_spectrum(r.l1, spec)?, r.l2, r.rho)
    }
}

/// Smallest gaps `|S_pκ′(y)η − ξ|` found on the audit lattice.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LatticeAudit {
    pub min_gap_high: f64,
    pub min_gap_low: f64,
    pub pass: bool,
}

fn interval_gap(a: (f64, f64), b: (f64, f64)) -> f64 {
    (b.0 - a.1).max(a.0 - b.1).max(0.0)
}

/// Checks the separation conditions behind the choice of `n0` and `p0`:
/// `|S_pκ′(y)η − ξ| ≥ 1` for `η ∈ C_q(1)` and either `ξ ∈ C_j(n0)`, `j ≥ q + N0 + 1`,
/// or `|ξ| ≤ 2^{j+n0+1}`, `j ≤ q − N0 − 1`, `p ≥ p0`.
pub fn lattice_audit(kappa: &Diffeomorphism, system: &DyadicSystem) -> LatticeAudit {
    let n0 = kappa.n0() as i32;
    let big_n0 = 2 * (n0 + 1);
    let p_max = system.p_max();
    let range = |p: i32| {
        let v = system.s(kappa.derivative(), p).real_parts();
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let scaled = |(lo, hi): (f64, f64), eta: (f64, f64)| {
        let c = [lo * eta.0, lo * eta.1, hi * eta.0, hi * eta.1];
        (c.iter().copied().fold(f64::INFINITY, f64::min), c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    };
    let mut high = f64::INFINITY;
    let mut low = f64::INFINITY;
    for p in 0..=p_max {
        let s = range(p);
        for q in 0..=8 {
            let eta = (2f64.powi(q - 2), 2f64.powi(q + 2));
            let a = scaled(s, eta);
            for j in q + big_n0 + 1..=q + big_n0 + 3 {
                let xi = (2f64.powi(j - n0 - 1), 2f64.powi(j + n0 + 1));
                high = high.min(interval_gap(a, xi)).min(interval_gap(a, (-xi.1, -xi.0)));
            }
            if p >= kappa.p0().min(p_max) {
                for qq in big_n0 + 1..=big_n0 + 8 {
                    let eta = (2f64.powi(qq - 2), 2f64.powi(qq + 2));
                    let a = scaled(s, eta);
                    for j in 0..=qq - big_n0 - 1 {
                        let r = 2f64.powi(j + n0 + 1);
                        low = low.min(interval_gap(a, (-r, r)));
                    }
                }
            }
        }
    }
    LatticeAudit { min_gap_high: high, min_gap_low: low, pass: high >= 1.0 && low >= 1.0 }
}

/// Operator bundle for one diffeomorphism: both partitions, truncations and
/// the recoupe window `Ñ`.
#[derive(Clone, Debug)]
pub struct Paracomposer {
    kappa: Diffeomorphism,
    target: DyadicSystem,
    source: DyadicSystem,
    target_pair: CutoffPair,
    source_pair: CutoffPair,
    n_tilde: i32,
    nodes: Vec<f64>,
    /// `κ` is exactly the identity map.
    trivial: bool,
}

impl Paracomposer {
    /// Defaults: `N = n + 6` on both sides and `Ñ = N0 + 8`.
    pub fn new(kappa: Diffeomorphism) -> Result<Self> {
        let n0 = kappa.n0() as i32;
        Self::with_truncation(kappa, 6, n0 + 6, 2 * (n0 + 1) + 8)
    }

    pub fn with_truncation(kappa: Diffeomorphism, target_n: i32, source_n: i32, n_tilde: i32) -> Result<Self> {
        let n = kappa.n_points();
        let target = DyadicSystem::new(0, kappa.target_period(), n)?;
        let source = DyadicSystem::new(kappa.n0(), kappa.source_period(), n)?;
        let target_pair = CutoffPair::new(&target, target_n)?;
        let source_pair = CutoffPair::new(&source, source_n)?;
        if n_tilde < 0 {
            return invalid(format!("recoupe window must be nonnegative, got {n_tilde}"));
        }
        let nodes = kappa.values_on_grid();
        let trivial = kappa.c() == 1.0 && kappa.perturbation().samples().iter().all(|z| z.re == 0.0);
        Ok(Self { kappa, target, source, target_pair, source_pair, n_tilde, nodes, trivial })
    }

    pub fn kappa(&self) -> &Diffeomorphism {
        &self.kappa
    }

    pub fn target(&self) -> &DyadicSystem {
        &self.target
    }

    pub fn source(&self) -> &DyadicSystem {
        &self.source
    }

    pub fn target_pair(&self) -> &CutoffPair {
        &self.target_pair
    }

    pub fn source_pair(&self) -> &CutoffPair {
        &self.source_pair
    }

    pub fn n_tilde(&self) -> i32 {
        self.n_tilde
    }

    fn check_target(&self, u: &GridFunction) -> Result<()> {
        if u.len() != self.kappa.n_points() || (u.period() - self.kappa.target_period()).abs() > 1e-12 * u.period() {
            return invalid("function does not live on the target grid");
        }
        Ok(())
    }

    /// `u` at the given nodes, or at `κ(x_i)` when `nodes` is `None`.
    fn compose_at(&self, u: &GridFunction, nodes: Option<&[f64]>, tol: f64) -> GridFunction {
        let nodes = match nodes {
            None if self.trivial => return u.clone(),
            None => &self.nodes[..],
            Some(n) => n,
        };
        let vals = u.evaluate_offgrid_sparse(nodes, tol);
        GridFunction::new(self.kappa.source_period(), vals).expect("finite composition")
    }

    /// `[v]_p = Σ_{|j−p|≤Ñ} Δ_j v` on the source partition.
    pub fn recoupe(&self, v: &GridFunction, p: i32) -> GridFunction {
        let upper = self.source.s(v, p + self.n_tilde);
        let k = p - self.n_tilde - 1;
        if k >= 0 {
            &upper - &self.source.s(v, k)
        } else {
            upper
        }
    }

    /// `u ∘ κ` sampled on the source grid.
    pub fn compose(&self, u: &GridFunction) -> Result<GridFunction> {
        self.check_target(u)?;
        Ok(self.compose_at(u, None, SPARSE_REL_TOL * u.max_coefficient()))
    }

    fn blockwise(&self, u: &GridFunction, f: impl Fn(i32, &GridFunction, f64) -> GridFunction + Sync) -> Result<GridFunction> {
        self.check_target(u)?;
        let tol = SPARSE_REL_TOL * u.max_coefficient();
        let pieces: Vec<GridFunction> = (0..=self.target.p_max())
            .into_par_iter()
            .filter_map(|p| {
                let up = self.target.delta(u, p);
                (up.max_coefficient() > tol).then(|| f(p, &up, tol))
            })
            .collect();
        let mut acc = GridFunction::zeros(self.kappa.source_period(), self.kappa.n_points())?;
        for piece in pieces {
            acc = &acc + &piece;
        }
        Ok(acc)
    }

    /// `κ*_g u = Σ_p [u_p ∘ κ]_p`.
    pub fn global(&self, u: &GridFunction) -> Result<GridFunction> {
        self.blockwise(u, |p, up, tol| self.recoupe(&self.compose_at(up, None, tol), p))
    }

    /// `Σ_p [u_p ∘ S_pκ]_p`.
    pub fn smoothed(&self, u: &GridFunction) -> Result<GridFunction> {
        self.blockwise(u, |p, up, tol| {
            let nodes = self.kappa.smoothed_values(&self.source, p);
            self.recoupe(&self.compose_at(up, Some(&nodes), tol), p)
        })
    }

    /// `R_g u = κ*_g u − Σ_p [u_p ∘ S_pκ]_p`.
    pub fn remainder_g(&self, u: &GridFunction) -> Result<GridFunction> {
        Ok(&self.global(u)? - &self.smoothed(u)?)
    }

    /// `[u_p ∘ S_pκ]_p − u_p ∘ S_pκ` for one block.
    pub fn local_remainder(&self, u: &GridFunction, p: i32) -> Result<GridFunction> {
        self.check_target(u)?;
        let up = self.target.delta(u, p);
        let nodes = self.kappa.smoothed_values(&self.source, p);
        let w = self.compose_at(&up, Some(&nodes), SPARSE_REL_TOL * u.max_coefficient());
        Ok(&self.recoupe(&w, p) - &w)
    }

    /// `Φ ∘ κ − Ṫ_{Φ′∘κ}(κ − c·x)`.
    pub fn linearized(&self, phi: &GridFunction) -> Result<GridFunction> {
        let outer = self.compose(phi)?;
        let dphi = self.compose(&phi.derivative())?;
        let t = tdot_function(&dphi, self.kappa.perturbation(), &self.source, &self.source_pair);
        Ok(&outer - &t)
    }

    /// `R_line u = u ∘ κ − κ*_g u − Ṫ_{u′∘κ}(κ − c·x)`.
    pub fn remainder_line(&self, u: &GridFunction) -> Result<GridFunction> {
        Ok(&self.linearized(u)? - &self.global(u)?)
    }

    /// `h* = h*_0 + h*_1` with `h*_0 = h(κ(x), ξ/κ′(x))` and, when `ρ ≥ 1`,
    /// `h*_1 = −i (1 − m)/2 · c(κ) κ″ κ′^{−m−1} ∂_ξ M` for each term `c(y) M(ξ)`.
    pub fn conjugated_symbol(&self, h: &SeparableSymbol) -> Result<SeparableSymbol> {
        let k1 = self.kappa.derivative();
        let k2 = self.kappa.second_derivative();
        let rho = h.rho().min(self.kappa.rho());
        let mut terms = Vec::new();
        for t in h.terms() {
            self.check_target(&t.coeff)?;
            let m = t.profile.homogeneity_degree().ok_or_else(|| {
                Error::InvalidInput("conjugation needs homogeneous profiles".into())
            })?;
            let ck = self.compose(&t.coeff)?;
            let c0 = GridFunction::new(
                self.kappa.source_period(),
                ck.samples().iter().zip(k1.samples()).map(|(c, d)| c * d.re.powf(-m)).collect(),
            )?;
            terms.push(SymbolTerm::with_order(c0, t.profile.clone(), m)?);
            if rho >= 1.0 && (1.0 - m).abs() > 1e-15 {
                let dm = t.profile.derivative()?;
                let factor = C64::new(0.0, -(1.0 - m) / 2.0);
                let c1 = GridFunction::new(
                    self.kappa.source_period(),
                    ck.samples()
                        .iter()
                        .zip(k1.samples())
                        .zip(k2.samples())
                        .map(|((c, d1), d2)| factor * c * d2.re * d1.re.powf(-m - 1.0))
                        .collect(),
                )?;
                terms.push(SymbolTerm::with_order(c1, dm, m - 1.0)?);
            }
        }
        SeparableSymbol::new(terms, rho)
    }

    /// `κ*_g T_h u − T_{h*} κ*_g u`.
    pub fn remainder_conj(&self, h: &SeparableSymbol, hstar: &SeparableSymbol, u: &GridFunction) -> Result<GridFunction> {
        let lhs = self.global(&apply_t(h, u, &self.target, &self.target_pair)?)?;
        let rhs = apply_t(hstar, &self.global(u)?, &self.source, &self.source_pair)?;
        Ok(&lhs - &rhs)
    }

    fn environment(&self, seed: u64) -> Environment {
        let mut env = Environment::new(self.kappa.n_points(), self.kappa.source_period(), seed);
        env.n0 = Some(self.kappa.n0());
        env.n_trunc = Some(self.source_pair.n_trunc());
        env.n_tilde = Some(self.n_tilde);
        env.note("p0", self.kappa.p0())
            .note("rho", self.kappa.rho())
            .note("target_N", self.target_pair.n_trunc())
            .note("m0", self.kappa.m0())
    }

    fn target_mode(&self, j: i32) -> Result<GridFunction> {
        unit_mode(self.kappa.target_period(), self.kappa.n_points(), j)
    }
}

/// Slope of `‖R_line u_j‖_{H^s}` for `u_j` unit in `H^s`, against `−ρ`.
pub fn verify_linearization(pc: &Paracomposer, scales: &[i32], s: f64, tolerance: f64, seed: u64) -> Result<DecayReport> {
    let points: Vec<ScalePoint> = scales
        .iter()
        .map(|&j| -> Result<ScalePoint> {
            let u = pc.target_mode(j)?;
            let u = u.scale_re(1.0 / u.norm(NormKind::Sobolev(s))?);
            let r = pc.remainder_line(&u)?;
            Ok(ScalePoint { j, norm: r.norm(NormKind::Sobolev(s))? })
        })
        .collect::<Result<_>>()?;
    let env = pc.environment(seed).note("sobolev_index", s);
    DecayReport::upper("linearization", points, -pc.kappa().rho(), tolerance, env)
}

/// Slope of `‖R_g u_j‖_{L²}` for unit `u_j`, against `−ρ`.
pub fn verify_smoothing(pc: &Paracomposer, scales: &[i32], tolerance: f64, seed: u64) -> Result<DecayReport> {
    let points: Vec<ScalePoint> = scales
        .iter()
        .map(|&j| -> Result<ScalePoint> {
            let r = pc.remainder_g(&pc.target_mode(j)?)?;
            Ok(ScalePoint { j, norm: r.l2_norm() })
        })
        .collect::<Result<_>>()?;
    DecayReport::upper("smoothing", points, -pc.kappa().rho(), tolerance, pc.environment(seed))
}

/// Local recoupe defect `‖[u_p∘S_pκ]_p − u_p∘S_pκ‖ / ‖u_p‖` for `p ≥ p0`
/// against the rate `2^{−pρ}`; the worst constant is recorded.
pub fn audit_local(pc: &Paracomposer, scales: &[i32], tolerance: f64, seed: u64) -> Result<DecayReport> {
    let rho = pc.kappa().rho();
    let mut worst: f64 = 0.0;
    let mut points = Vec::new();
    for &p in scales {
        let u = pc.target_mode(p)?;
        let up = pc.target().delta(&u, p).l2_norm();
        let r = pc.local_remainder(&u, p)?.l2_norm() / up.max(f64::MIN_POSITIVE);
        if rho.is_finite() {
            worst = worst.max(r * 2f64.powf(p as f64 * rho));
        }
        points.push(ScalePoint { j: p, norm: r });
    }
    let env = pc.environment(seed).note("constant", worst);
    DecayReport::upper("local_recoupe", points, -rho.min(1e6), tolerance, env)
}

/// Slope of `‖κ*_g T_h u_j − T_{h*} κ*_g u_j‖_{L²}` for unit `u_j` against
/// `m − min(τ, ρ)`.
pub fn verify_conjugation(pc: &Paracomposer, h: &SeparableSymbol, scales: &[i32], tolerance: f64, seed: u64) -> Result<DecayReport> {
    let hstar = pc.conjugated_symbol(h)?;
    let eps = h.rho().min(pc.kappa().rho());
    let points: Vec<ScalePoint> = scales
        .iter()
        .map(|&j| -> Result<ScalePoint> {
            let r = pc.remainder_conj(h, &hstar, &pc.target_mode(j)?)?;
            Ok(ScalePoint { j, norm: r.l2_norm() })
        })
        .collect::<Result<_>>()?;
    DecayReport::upper("conjugation", points, h.order() - eps, tolerance, pc.environment(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::FrequencyProfile;

    const L: f64 = 2.0 * PI;

    fn band(n: usize, kmax: i64, seed: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = (0..n)
            .map(|i| {
                let k = signed_index(i, n);
                if k.abs() <= kmax && k != 0 {
                    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
        GridFunction::from_spectrum(L, spec).unwrap()
    }

    #[test]
    fn partition_size_for_identity() {
        let k = Diffeomorphism::identity(L, 256).unwrap();
        let m1 = measured_m1();
        let expected = (m1 + 1.0).log2().floor() + (1.0 + 2f64.ln()).floor() + 1.0;
        assert_eq!(k.n0(), expected as u32);
        assert!(m1 > 1.0 && m1 < 2.0);
    }

    #[test]
    fn identity_is_exact() {
        let pc = Paracomposer::new(Diffeomorphism::identity(L, 512).unwrap()).unwrap();
        let u = band(512, 200, 3);
        assert!(pc.global(&u).unwrap().max_abs_diff(&u) < 1e-10);
        assert!(pc.remainder_line(&u).unwrap().sup_norm() < 1e-10);
    }

    #[test]
    fn dilation_composes_exactly() {
        let k = Diffeomorphism::dilation(L, 512, 2.0).unwrap();
        let pc = Paracomposer::new(k).unwrap();
        let target = pc.target();
        let u = GridFunction::from_fn(2.0 * L, 512, |y| C64::from_polar(1.0, 3.0 * y)).unwrap();
        let v = pc.global(&u).unwrap();
        let expect = GridFunction::from_fn(L, 512, |x| C64::from_polar(1.0, 6.0 * x)).unwrap();
        assert!(v.max_abs_diff(&expect) < 1e-10);
        assert_eq!(target.size_n(), 0);
    }

    #[test]
    fn global_is_linear() {
        let k = Diffeomorphism::manufactured(L, 512, 1.0, 0.2, 0.05, 7).unwrap();
        let pc = Paracomposer::new(k).unwrap();
        let (u, v) = (band(512, 60, 1), band(512, 60, 2));
        let a = C64::new(0.3, -1.2);
        let lhs = pc.global(&(&u.scale(a) + &v)).unwrap();
        let rhs = &pc.global(&u).unwrap().scale(a) + &pc.global(&v).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-12 * (1.0 + lhs.sup_norm()));
    }

    #[test]
    fn inverse_round_trips() {
        let k = Diffeomorphism::manufactured(L, 256, 1.0, 0.3, 0.1, 11).unwrap();
        for &y in &[-3.0, 0.0, 0.4, 5.9, 13.1] {
            let x = k.inverse(y).unwrap();
            assert!((k.eval(x) - y).abs() < 1e-10);
        }
        let vals = k.values_on_grid();
        let back = Diffeomorphism::from_values(L, &vals, L, 1.0).unwrap();
        assert!(back.perturbation().max_abs_diff(k.perturbation()) < 1e-12);
    }

    #[test]
    fn record_round_trip() {
        let k = Diffeomorphism::manufactured(L, 128, 1.0, 0.3, 0.1, 5).unwrap();
        let r: DiffeoRecord = serde_json::from_str(&k.to_json().unwrap()).unwrap();
        let k2 = Diffeomorphism::from_record(&r).unwrap();
        assert_eq!(k2.n0(), k.n0());
        assert!(k2.perturbation().max_abs_diff(k.perturbation()) < 1e-14);
        let v: serde_json::Value = serde_json::from_str(&k.to_json().unwrap()).unwrap();
        for key in ["L1", "L2", "c", "perturbation_spectrum", "m0", "rho", "n0", "p0"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn rejects_folding_map() {
        let pert = GridFunction::from_real_fn(L, 64, |x| 2.0 * x.sin()).unwrap();
        assert!(Diffeomorphism::new(pert, L, 1.0).is_err());
    }

    #[test]
    fn conjugated_symbol_examples() {
        let k = Diffeomorphism::dilation(L, 64, 2.0).unwrap();
        let pc = Paracomposer::new(k).unwrap();
        let h = SeparableSymbol::multiplier(FrequencyProfile::abs_pow(1.5), 2.0 * L, 64).unwrap().with_rho(2.0);
        let hs = pc.conjugated_symbol(&h).unwrap();
        assert_eq!(hs.terms().len(), 2);
        assert!((hs.eval(5, 3.0) - C64::new(2f64.powf(-1.5) * 3f64.powf(1.5), 0.0)).norm() < 1e-12);
        assert!(hs.terms()[1].coeff.sup_norm() < 1e-12);

        let km = Diffeomorphism::manufactured(L, 128, 1.0, 0.3, 0.0, 1).unwrap();
        let pc = Paracomposer::new(km.clone()).unwrap();
        let v = GridFunction::from_real_fn(L, 128, |y| 1.0 + 0.5 * y.cos()).unwrap();
        let h = SeparableSymbol::single(v, FrequencyProfile::i_xi(), 1.0).unwrap();
        let hs = pc.conjugated_symbol(&h).unwrap();
        assert_eq!(hs.terms().len(), 1);
        let nodes = km.values_on_grid();
        for i in [0, 17, 90] {
            let expect = C64::new(0.0, (1.0 + 0.5 * nodes[i].cos()) * 2.0 / km.derivative().samples()[i].re);
            assert!((hs.eval(i, 2.0) - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn lattice_audit_holds() {
        let k = Diffeomorphism::manufactured(L, 512, 1.0, 0.3, 0.05, 3).unwrap();
        let sys = DyadicSystem::new(k.n0(), L, 512).unwrap();
        let a = lattice_audit(&k, &sys);
        assert!(a.pass, "{a:?}");
    }
}
