//! Symbols, flattening and reduction checks for the gravity-capillary water
//! wave system in one space dimension, on a single time slice.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::paracomp::{verify_conjugation, Diffeomorphism, Paracomposer};
use crate::paradiff::{apply_t, unit_mode, SeparableSymbol, SymbolTerm};
use crate::report::{DecayReport, Environment, ScalePoint};
use crate::spectral::{FrequencyProfile, GridFunction, C64};

/// Regularity declared for the symbols and the flattening on smooth surfaces.
pub const SURFACE_RHO: f64 = 1.0;

#[derive(Clone, Debug)]
pub struct SurfaceState {
    pub eta: GridFunction,
    pub psi: GridFunction,
    /// `G(η)ψ`, user-supplied or from [`compute_dn`].
    pub g_eta_psi: Option<GridFunction>,
    /// `None` means infinite depth.
    pub depth: Option<f64>,
}

/// On-disk fixture format.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurfaceRecord {
    pub period: f64,
    pub samples_eta: Vec<f64>,
    pub samples_psi: Vec<f64>,
    pub depth: Option<f64>,
}

impl SurfaceState {
    pub fn new(eta: GridFunction, psi: GridFunction, depth: Option<f64>) -> Result<Self> {
        if !eta.same_grid(&psi) {
            return invalid("η and ψ must share a grid");
        }
        if !eta.is_real(1e-12) || !psi.is_real(1e-12) {
            return invalid("η and ψ must be real");
        }
        let eta = eta.re();
        let psi = psi.re();
        if let Some(h) = depth {
            if !(h > 0.0 && h.is_finite()) {
                return invalid(format!("depth must be positive, got {h}"));
            }
            let lowest = eta.samples().iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
            if lowest + h <= 0.0 {
                return invalid("surface touches the bottom");
            }
        }
        Ok(Self { eta, psi, g_eta_psi: None, depth })
    }

    pub fn from_fns(period: f64, n: usize, eta: impl Fn(f64) -> f64, psi: impl Fn(f64) -> f64, depth: Option<f64>) -> Result<Self> {
        Self::new(GridFunction::from_real_fn(period, n, eta)?, GridFunction::from_real_fn(period, n, psi)?, depth)
    }

    pub fn with_dn(mut self, g: GridFunction) -> Result<Self> {
        if !g.same_grid(&self.eta) {
            return invalid("G(η)ψ must share the surface grid");
        }
        self.g_eta_psi = Some(g.re());
        Ok(self)
    }

    pub fn period(&self) -> f64 {
        self.eta.period()
    }

    pub fn n_points(&self) -> usize {
        self.eta.len()
    }

    pub fn slope(&self) -> GridFunction {
        self.eta.derivative().re()
    }

    /// `‖∂_x η‖_∞`.
    pub fn max_slope(&self) -> f64 {
        self.slope().sup_norm()
    }

    pub fn from_record(r: &SurfaceRecord) -> Result<Self> {
        if r.samples_eta.len() != r.samples_psi.len() {
            return invalid("η and ψ sample counts differ");
        }
        Self::new(GridFunction::from_real(r.period, &r.samples_eta)?, GridFunction::from_real(r.period, &r.samples_psi)?, r.depth)
    }

    pub fn to_record(&self) -> SurfaceRecord {
        SurfaceRecord {
            period: self.period(),
            samples_eta: self.eta.real_parts(),
            samples_psi: self.psi.real_parts(),
            depth: self.depth,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let r: SurfaceRecord = serde_json::from_str(&fs::read_to_string(path)?)?;
        Self::from_record(&r)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(&self.to_record())?)?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ReductionSymbols {
    pub gamma: SeparableSymbol,
    pub omega: SeparableSymbol,
    pub q: SeparableSymbol,
    /// Principal part only; the order −1/2 correction is not built.
    pub p: SeparableSymbol,
    pub p_subprincipal_omitted: bool,
}

fn slope_power(state: &SurfaceState, e: f64) -> Result<GridFunction> {
    let s = state.slope();
    GridFunction::from_real(state.period(), &s.samples().iter().map(|z| (1.0 + z.re * z.re).powf(e)).collect::<Vec<_>>())
}

/// `γ = (1+η′²)^{−3/4}|ξ|^{3/2}`, `ω = −(i/2)∂_x∂_ξγ`, `q = (1+η′²)^{−1/2}`,
/// `p = (1+η′²)^{−5/4}|ξ|^{1/2}`.
pub fn build_symbols(state: &SurfaceState) -> Result<ReductionSymbols> {
    let gamma_c = slope_power(state, -0.75)?;
    let gamma_prof = FrequencyProfile::abs_pow(1.5);
    let gamma = SeparableSymbol::single(gamma_c.clone(), gamma_prof.clone(), SURFACE_RHO)?;
    let omega_c = gamma_c.derivative().scale(C64::new(0.0, -0.5));
    let omega = SeparableSymbol::new(vec![SymbolTerm::new(omega_c, gamma_prof.derivative()?)?], SURFACE_RHO)?;
    let q = SeparableSymbol::function(slope_power(state, -0.5)?, SURFACE_RHO)?;
    let p = SeparableSymbol::single(slope_power(state, -1.25)?, FrequencyProfile::abs_pow(0.5), SURFACE_RHO)?;
    Ok(ReductionSymbols { gamma, omega, q, p, p_subprincipal_omitted: true })
}

/// `χ(x) = ∫₀ˣ √(1+η′²)` and its inverse `κ`, as a diffeomorphism from the
/// flattened coordinate (period `χ(L)`) to the physical one (period `L`).
#[derive(Clone, Debug)]
pub struct Flattening {
    /// Slope `L₂/L₁ ≥ 1` of the ramp part of `χ`.
    pub chi_ramp: f64,
    /// Periodic part of `χ` on the physical grid.
    pub chi_periodic: GridFunction,
    pub kappa: Diffeomorphism,
    /// `(1+‖η′‖_∞²)^{−1/2}`.
    pub m0_formula: f64,
}

impl Flattening {
    pub fn chi(&self, x: f64) -> f64 {
        self.chi_ramp * x + self.chi_periodic.evaluate_offgrid(&[x])[0].re
    }

    /// `∂_xχ = √(1+η′²)` on the physical grid.
    pub fn chi_prime(&self) -> GridFunction {
        self.chi_periodic.derivative().map(|z| C64::new(z.re + self.chi_ramp, 0.0))
    }
}

/// Splits `f = mean·x′ + ∂_x P` and returns `(mean, P)` with `P` periodic of zero mean.
fn antiderivative(f: &GridFunction) -> Result<(f64, GridFunction)> {
    let n = f.len();
    let mean = f.spectrum()[0].re;
    let spec: Vec<C64> = f
        .spectrum()
        .iter()
        .enumerate()
        .map(|(i, z)| if i == 0 { C64::new(0.0, 0.0) } else { z / C64::new(0.0, f.frequency(i)) })
        .collect();
    debug_assert_eq!(spec.len(), n);
    Ok((mean, GridFunction::from_spectrum(f.period(), spec)?.re()))
}

/// Solves `f(x) = y` for increasing `f` on `[lo, hi]`: Newton steps, falling
/// back to bisection whenever a step leaves the bracket.
fn invert_monotone(y: f64, mut lo: f64, mut hi: f64, f: &impl Fn(f64) -> f64, df: &impl Fn(f64) -> f64) -> Option<f64> {
    let mut x = 0.5 * (lo + hi);
    let mut best = (f64::INFINITY, x);
    for _ in 0..200 {
        let r = f(x) - y;
        if r.abs() < best.0 {
            best = (r.abs(), x);
        }
        if r == 0.0 || hi - lo <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
            break;
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = x - r / df(x);
        if (step - x).abs() <= 2.0 * f64::EPSILON * (1.0 + x.abs()) {
            let rs = f(step) - y;
            if rs.abs() < best.0 {
                best = (rs.abs(), step);
            }
            break;
        }
        x = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
    }
    (best.0 <= 1e-12 * (1.0 + y.abs())).then_some(best.1)
}

pub fn build_flattening(state: &SurfaceState) -> Result<Flattening> {
    let period = state.period();
    let n = state.n_points();
    let dchi = slope_power(state, 0.5)?;
    let (ramp, periodic) = antiderivative(&dchi)?;
    let l2 = ramp * period;
    // the off-grid maximum may exceed the sampled one
    let bound = 1.05 * periodic.sup_norm() + 1e-9;
    // spectral differentiation of η lifts FFT roundoff to about 1e-13 at high modes
    let tol = 1e-13 * periodic.max_coefficient().max(dchi.max_coefficient());
    let (p_sum, d_sum) = (periodic.trig_sum(tol), dchi.trig_sum(tol));
    let chi = |x: f64| ramp * x + p_sum.eval(x).re;
    let dchi_at = |x: f64| d_sum.eval(x).re;
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let y = l2 * i as f64 / n as f64;
            invert_monotone(y, (y - bound) / ramp, (y + bound) / ramp, &chi, &dchi_at)
                .ok_or_else(|| Error::Numerical(format!("flattening inversion failed at y = {y}")))
        })
        .collect::<Result<_>>()?;
    let kappa = Diffeomorphism::from_values(l2, &values, period, SURFACE_RHO)?;
    let m0_formula = (1.0 + state.max_slope().powi(2)).powf(-0.5);
    Ok(Flattening { chi_ramp: ramp, chi_periodic: periodic, kappa, m0_formula })
}

/// `B = (η′ψ′ + G(η)ψ)/(1+η′²)` and `V = ψ′ − Bη′`.
pub fn velocities(state: &SurfaceState) -> Result<(GridFunction, GridFunction)> {
    let g = state.g_eta_psi.as_ref().ok_or_else(|| Error::InvalidInput("G(η)ψ is missing".into()))?;
    let d_eta = state.slope();
    let d_psi = state.psi.derivative().re();
    let b = GridFunction::from_real(
        state.period(),
        &(0..state.n_points())
            .map(|i| {
                let (e, p) = (d_eta.samples()[i].re, d_psi.samples()[i].re);
                (e * p + g.samples()[i].re) / (1.0 + e * e)
            })
            .collect::<Vec<_>>(),
    )?;
    let v = &d_psi - &(&b * &d_eta);
    Ok((b, v))
}

/// `∂_tχ(x) = ∫₀ˣ ∂_t∂_yη ∂_yη (1+(∂_yη)²)^{−1/2} dy` with `∂_tη = G(η)ψ`,
/// as `ramp·x + periodic(x)`.
#[derive(Clone, Debug)]
pub struct ChiRate {
    pub ramp: f64,
    pub periodic: GridFunction,
}

impl ChiRate {
    pub fn zero(period: f64, n: usize) -> Result<Self> {
        Ok(Self { ramp: 0.0, periodic: GridFunction::zeros(period, n)? })
    }

    pub fn at(&self, points: &[f64]) -> Vec<f64> {
        let p = self.periodic.evaluate_offgrid_sparse(points, 1e-16 * self.periodic.max_coefficient());
        points.iter().zip(p).map(|(x, v)| self.ramp * x + v.re).collect()
    }
}

pub fn compute_dt_chi(state: &SurfaceState) -> Result<ChiRate> {
    let g = state.g_eta_psi.as_ref().ok_or_else(|| Error::InvalidInput("G(η)ψ is missing".into()))?;
    let d_eta = state.slope();
    let dt_d_eta = g.derivative().re();
    let integrand = GridFunction::from_real(
        state.period(),
        &(0..state.n_points())
            .map(|i| {
                let e = d_eta.samples()[i].re;
                dt_d_eta.samples()[i].re * e / (1.0 + e * e).sqrt()
            })
            .collect::<Vec<_>>(),
    )?;
    let (ramp, periodic) = antiderivative(&integrand)?;
    Ok(ChiRate { ramp, periodic })
}

/// `W = (V∘κ)(∂_xχ∘κ) + ∂_tχ∘κ` on the flattened grid.
pub fn build_w(flat: &Flattening, v: &GridFunction, dt_chi: &ChiRate) -> Result<GridFunction> {
    let nodes = flat.kappa.values_on_grid();
    let cp = flat.chi_prime();
    let vk = v.evaluate_offgrid_sparse(&nodes, 1e-16 * v.max_coefficient());
    let ck = cp.evaluate_offgrid_sparse(&nodes, 1e-16 * cp.max_coefficient());
    let tk = dt_chi.at(&nodes);
    let w: Vec<f64> = (0..nodes.len()).map(|i| vk[i].re * ck[i].re + tk[i]).collect();
    GridFunction::from_real(flat.kappa.source_period(), &w)
}

#[derive(Clone, Debug)]
pub struct DnApproximation {
    pub value: GridFunction,
    pub order: usize,
    /// `‖G_{J+1} − G_J‖ / ‖G_J‖` in L².
    pub relative_gap: f64,
}

fn multiplier(f: &GridFunction, sym: impl Fn(f64) -> f64) -> GridFunction {
    f.map_spectrum(|xi| C64::new(sym(xi), 0.0))
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|k| k as f64).product()
}

/// Terms of the Dirichlet–Neumann expansion up to homogeneity `order` in `η`,
/// flat bottom at depth `h` (or infinite depth).
fn dn_series(eta: &GridFunction, psi: &GridFunction, depth: Option<f64>, order: usize) -> GridFunction {
    let t = move |k: f64| match depth {
        Some(h) => (h * k).tanh(),
        None => k.signum(),
    };
    // surface trace ψ = Σ_m η^m/m! D^m C_m ψ̃ with C_m = 1 (even m) or T (odd m);
    // G(η)ψ = D Σ_m η^m/m! D^m S_m ψ̃ with S_m = T (even m) or 1 (odd m).
    let a = |m: usize, k: f64| k.powi(m as i32) * if m % 2 == 0 { 1.0 } else { t(k) };
    let b = |m: usize, k: f64| k.powi(m as i32) * if m % 2 == 0 { t(k) } else { 1.0 };
    let mut eta_pow = vec![GridFunction::constant(eta.period(), eta.len(), C64::new(1.0, 0.0)).expect("grid")];
    for m in 1..=order {
        eta_pow.push(&eta_pow[m - 1] * eta);
    }
    let mut trace: Vec<GridFunction> = vec![psi.clone()];
    for j in 1..=order {
        let mut acc = GridFunction::zeros(eta.period(), eta.len()).expect("grid");
        for m in 1..=j {
            let term = &eta_pow[m] * &multiplier(&trace[j - m], |k| a(m, k));
            acc = &acc - &term.scale_re(1.0 / factorial(m));
        }
        trace.push(acc);
    }
    let mut inner = GridFunction::zeros(eta.period(), eta.len()).expect("grid");
    for j in 0..=order {
        for m in 0..=j {
            let term = &eta_pow[m] * &multiplier(&trace[j - m], |k| b(m, k));
            inner = &inner + &term.scale_re(1.0 / factorial(m));
        }
    }
    multiplier(&inner, |k| k).re()
}

/// Truncated expansion of `G(η)ψ` about the flat surface. Refuses when the
/// orders `J` and `J+1` differ by 10% or more in L².
pub fn compute_dn(state: &SurfaceState, order: usize) -> Result<DnApproximation> {
    dn_apply(state, &state.psi, order)
}

pub fn dn_apply(state: &SurfaceState, psi: &GridFunction, order: usize) -> Result<DnApproximation> {
    let g = dn_series(&state.eta, psi, state.depth, order);
    let g_next = dn_series(&state.eta, psi, state.depth, order + 1);
    let norm = g.l2_norm();
    let relative_gap = if norm > 0.0 { (&g_next - &g).l2_norm() / norm } else { 0.0 };
    if !(relative_gap < 0.1) {
        return Err(Error::Numerical(format!(
            "Dirichlet–Neumann expansion not converged: order {order} vs {} differ by {relative_gap:.3}",
            order + 1
        )));
    }
    Ok(DnApproximation { value: g, order, relative_gap })
}

/// Paracomposer for a flattening with truncations `N = n + 3` on both sides.
pub fn reduction_paracomposer(flat: &Flattening) -> Result<Paracomposer> {
    let n0 = flat.kappa.n0() as i32;
    Paracomposer::with_truncation(flat.kappa.clone(), 3, n0 + 3, 2 * (n0 + 1) + 8)
}

/// `‖κ*T_γΦ_j − |D|^{3/2}κ*Φ_j‖_{L²}` for unit `Φ_j`; bound `3/2 − 1/2` on the slope.
pub fn demonstrate_reduction(state: &SurfaceState, scales: &[i32], tolerance: f64, seed: u64) -> Result<DecayReport> {
    let symbols = build_symbols(state)?;
    let flat = build_flattening(state)?;
    let pc = reduction_paracomposer(&flat)?;
    let mut relative = Vec::with_capacity(scales.len());
    let mut points = Vec::with_capacity(scales.len());
    for &j in scales {
        let phi = unit_mode(state.period(), state.n_points(), j)?;
        let lhs = pc.global(&apply_t(&symbols.gamma, &phi, pc.target(), pc.target_pair())?)?;
        let rhs = multiplier(&pc.global(&phi)?, |k| k.abs().powf(1.5));
        let norm = (&lhs - &rhs).l2_norm();
        relative.push(norm / rhs.l2_norm());
        points.push(ScalePoint { j, norm });
    }
    let mut env = Environment::new(state.n_points(), state.period(), seed);
    env.n0 = Some(flat.kappa.n0());
    env.n_trunc = Some(pc.source_pair().n_trunc());
    env.n_tilde = Some(pc.n_tilde());
    let env = env
        .note("max_slope", state.max_slope())
        .note("max_relative_residual", relative.iter().cloned().fold(0.0, f64::max))
        .note("relative_residuals", relative)
        .note("m0", flat.kappa.m0())
        .note("m0_formula", flat.m0_formula)
        .note("p_subprincipal_omitted", symbols.p_subprincipal_omitted);
    DecayReport::upper("reduction", points, 1.0, tolerance, env)
}

/// Transport step: `κ*T_{iVξ}Φ_j` against `T_{iWξ}κ*Φ_j` with `W = (V∘κ)(∂_xχ∘κ)`
/// (stationary slice), bound `0`.
pub fn demonstrate_transport(state: &SurfaceState, v: &GridFunction, scales: &[i32], tolerance: f64, seed: u64) -> Result<DecayReport> {
    let flat = build_flattening(state)?;
    let pc = reduction_paracomposer(&flat)?;
    let h = SeparableSymbol::single(v.clone(), FrequencyProfile::i_xi(), SURFACE_RHO)?;
    let w = build_w(&flat, v, &ChiRate::zero(state.period(), state.n_points())?)?;
    let hstar = pc.conjugated_symbol(&h)?;
    let predicted = SeparableSymbol::single(w, FrequencyProfile::i_xi(), SURFACE_RHO)?;
    let points: Vec<ScalePoint> = scales
        .iter()
        .map(|&j| -> Result<ScalePoint> {
            let phi = unit_mode(state.period(), state.n_points(), j)?;
            let r = pc.remainder_conj(&h, &predicted, &phi)?;
            Ok(ScalePoint { j, norm: r.l2_norm() })
        })
        .collect::<Result<_>>()?;
    let mismatch = (&hstar.terms()[0].coeff - &predicted.terms()[0].coeff).sup_norm();
    let mut env = Environment::new(state.n_points(), state.period(), seed);
    env.n0 = Some(flat.kappa.n0());
    env.n_trunc = Some(pc.source_pair().n_trunc());
    env.n_tilde = Some(pc.n_tilde());
    let env = env.note("symbol_mismatch", mismatch);
    DecayReport::upper("transport", points, 0.0, tolerance, env)
}

/// Conjugation of `γ` by the flattening itself.
pub fn conjugate_gamma(state: &SurfaceState, scales: &[i32], tolerance: f64, seed: u64) -> Result<DecayReport> {
    let symbols = build_symbols(state)?;
    let flat = build_flattening(state)?;
    let pc = reduction_paracomposer(&flat)?;
    verify_conjugation(&pc, &symbols.gamma, scales, tolerance, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const L: f64 = 2.0 * PI;

    fn wave(a: f64, n: usize) -> SurfaceState {
        SurfaceState::from_fns(L, n, |x| a * x.cos(), |x| (2.0 * x).sin() + 0.3 * x.cos(), None).unwrap()
    }

    #[test]
    fn flat_surface_symbols() {
        let s = wave(0.0, 64);
        let sym = build_symbols(&s).unwrap();
        assert!((sym.gamma.eval(3, 4.0).re - 8.0).abs() < 1e-12);
        assert!((sym.q.eval(5, 1.0).re - 1.0).abs() < 1e-12);
        assert!((sym.p.eval(5, 4.0).re - 2.0).abs() < 1e-12);
        assert!(sym.omega.eval(7, 4.0).norm() < 1e-12);
        assert!(sym.p_subprincipal_omitted);
    }

    #[test]
    fn omega_matches_finite_differences() {
        let a = 0.4;
        let s = wave(a, 128);
        let sym = build_symbols(&s).unwrap();
        let gamma = |x: f64, xi: f64| (1.0 + a * a * x.sin().powi(2)).powf(-0.75) * xi.abs().powf(1.5);
        let (hx, hxi) = (1e-4, 1e-4);
        for (i, xi) in [(5usize, 3.0), (40, -2.5), (77, 7.0)] {
            let x = s.eta.grid_points()[i];
            let mixed = (gamma(x + hx, xi + hxi) - gamma(x + hx, xi - hxi) - gamma(x - hx, xi + hxi) + gamma(x - hx, xi - hxi))
                / (4.0 * hx * hxi);
            let expect = C64::new(0.0, -0.5 * mixed);
            assert!((sym.omega.eval(i, xi) - expect).norm() < 1e-6, "{i}");
            let c = sym.gamma.terms()[0].coeff.samples()[i].re;
            assert!((c - (1.0 + a * a * x.sin().powi(2)).powf(-0.75)).abs() < 1e-12);
        }
    }

    #[test]
    fn flattening_inverts() {
        let s = wave(0.5, 256);
        let f = build_flattening(&s).unwrap();
        assert!(f.kappa.target_period() < f.kappa.source_period());
        let vals = f.kappa.values_on_grid();
        let dy = f.kappa.source_period() / 256.0;
        for i in (0..256).step_by(2) {
            assert!((f.chi(vals[i]) - i as f64 * dy).abs() < 1e-10);
        }
        let d = f.kappa.derivative();
        for z in d.samples() {
            assert!(z.re >= f.m0_formula - 1e-8 && z.re <= 1.0 + 1e-8);
        }
        let flat = build_flattening(&wave(0.0, 64)).unwrap();
        assert!((flat.kappa.source_period() - L).abs() < 1e-12);
        assert!((flat.m0_formula - 1.0).abs() < 1e-15);
    }

    #[test]
    fn flat_deep_water_velocity() {
        let s = SurfaceState::from_fns(L, 128, |_| 0.0, f64::cos, None).unwrap();
        let g = compute_dn(&s, 3).unwrap();
        let expect = GridFunction::from_real_fn(L, 128, f64::cos).unwrap();
        assert!(g.value.max_abs_diff(&expect) < 1e-12);
        let s = s.with_dn(g.value).unwrap();
        let (b, v) = velocities(&s).unwrap();
        assert!(b.max_abs_diff(&expect) < 1e-12);
        let flat = build_flattening(&s).unwrap();
        let w = build_w(&flat, &v, &compute_dt_chi(&s).unwrap()).unwrap();
        let minus_sin = GridFunction::from_real_fn(L, 128, |x| -x.sin()).unwrap();
        assert!(w.max_abs_diff(&minus_sin) < 1e-10);
    }

    #[test]
    fn finite_depth_flat_multiplier() {
        let s = SurfaceState::from_fns(L, 64, |_| 0.0, |x| (3.0 * x).cos(), Some(0.5)).unwrap();
        let g = compute_dn(&s, 2).unwrap();
        let expect = GridFunction::from_real_fn(L, 64, |x| 3.0 * (1.5f64).tanh() * (3.0 * x).cos()).unwrap();
        assert!(g.value.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn dn_is_symmetric_and_converges() {
        for depth in [None, Some(2.0)] {
            let s = SurfaceState::from_fns(L, 256, |x| 0.1 * x.cos() + 0.05 * (2.0 * x).sin(), |x| x.sin(), depth).unwrap();
            let p1 = GridFunction::from_real_fn(L, 256, |x| (2.0 * x).cos() + 0.5 * x.sin()).unwrap();
            let p2 = GridFunction::from_real_fn(L, 256, |x| (3.0 * x).sin() - 0.2 * x.cos()).unwrap();
            let g1 = dn_apply(&s, &p1, 3).unwrap().value;
            let g2 = dn_apply(&s, &p2, 3).unwrap().value;
            let (a, b) = (g1.inner(&p2).re, p1.inner(&g2).re);
            assert!((a - b).abs() <= 0.01 * a.abs().max(b.abs()));
            let gaps: Vec<f64> = (1..5).map(|j| dn_apply(&s, &p1, j).unwrap().relative_gap).collect();
            assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        }
    }

    #[test]
    fn zero_velocity_gives_zero_w() {
        let s = wave(0.3, 64);
        let flat = build_flattening(&s).unwrap();
        let w = build_w(&flat, &GridFunction::zeros(L, 64).unwrap(), &ChiRate::zero(L, 64).unwrap()).unwrap();
        assert_eq!(w.sup_norm(), 0.0);
    }

    #[test]
    fn record_round_trip() {
        let s = SurfaceState::from_fns(L, 32, |x| 0.2 * x.sin(), f64::cos, Some(3.0)).unwrap();
        let r: SurfaceRecord = serde_json::from_str(&serde_json::to_string(&s.to_record()).unwrap()).unwrap();
        let back = SurfaceState::from_record(&r).unwrap();
        assert!(back.eta.max_abs_diff(&s.eta) < 1e-15);
        assert_eq!(back.depth, Some(3.0));
    }
}
