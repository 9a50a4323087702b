//! Frequency-localized dispersive analysis of
//! `∂_t u + ½(W∂_x + ∂_x W)u + iχ₀(hD)|D|^{3/2} u = 0` at `h = 2^{−j}`:
//! smoothed coefficients, the localized equation, a Strang-split propagator,
//! the leading-order WKB parametrix and dispersive/Strichartz measurements.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{CutoffProfile, DyadicSystem};
use crate::error::{invalid, Error, Result};
use crate::paradiff::{apply_t, smooth_step, CutoffPair, SeparableSymbol};
use crate::report::{fit_slope_raw, BoundKind, DecayReport, Environment, ScalePoint};
use crate::spectral::{GridFunction, C64};

/// Annular cutoff: supported in `[1/4, 4]`, equal to 1 on `[1/2, 2]`.
pub fn chi0(xi: f64) -> f64 {
    let r = xi.abs();
    smooth_step((r - 0.25) / 0.25) * (1.0 - smooth_step((r - 2.0) / 2.0))
}

fn smooth_step_deriv(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        let a = (-1.0 / s).exp();
        let b = (-1.0 / (1.0 - s)).exp();
        a * b * (1.0 / (s * s) + 1.0 / ((1.0 - s) * (1.0 - s))) / ((a + b) * (a + b))
    }
}

fn chi0_deriv_abs(r: f64) -> f64 {
    let up = smooth_step((r - 0.25) / 0.25);
    let down = 1.0 - smooth_step((r - 2.0) / 2.0);
    smooth_step_deriv((r - 0.25) / 0.25) / 0.25 * down - up * smooth_step_deriv((r - 2.0) / 2.0) / 2.0
}

/// `a(ξ) = χ₀(ξ)|ξ|^{3/2}`.
pub fn symbol_a(xi: f64) -> f64 {
    chi0(xi) * xi.abs().powf(1.5)
}

pub fn symbol_a_prime(xi: f64) -> f64 {
    let r = xi.abs();
    xi.signum() * (chi0_deriv_abs(r) * r.powf(1.5) + chi0(r) * 1.5 * r.sqrt())
}

pub fn symbol_a_second(xi: f64) -> f64 {
    let e = 1e-5;
    (symbol_a_prime(xi + e) - symbol_a_prime(xi - e)) / (2.0 * e)
}

/// Spectral window of the initial datum in semiclassical frequency: supported
/// in `[1, 2]`, equal to 1 on `[5/4, 7/4]`.
pub fn datum_window(xi: f64) -> f64 {
    let r = xi.abs();
    smooth_step((r - 1.0) / 0.25) * (1.0 - smooth_step((r - 1.75) / 0.25))
}

/// `ζ`: 1 on `[−1, 1]`, 0 outside `[−2, 2]`.
pub fn zeta(s: f64) -> f64 {
    1.0 - smooth_step(s.abs() - 1.0)
}

fn low_pass_profile() -> &'static CutoffProfile {
    static P: OnceLock<CutoffProfile> = OnceLock::new();
    P.get_or_init(|| CutoffProfile::build(0).expect("size-0 cutoff"))
}

/// `S_{δj}W = φ(2^{−δj}D)W` with the size-0 low-pass profile.
pub fn smooth_coefficient(w: &GridFunction, j: i32, delta: f64) -> GridFunction {
    let scale = 2f64.powf(-delta * j as f64);
    let p = low_pass_profile();
    w.map_spectrum(|xi| C64::new(p.eval(xi * scale), 0.0))
}

/// `‖W‖_∞ + ‖∂_x W‖_∞`.
pub fn w1_inf_norm(w: &GridFunction) -> f64 {
    w.sup_norm() + w.derivative().sup_norm()
}

/// `2^{jδ}‖S_jW − S_{jδ}W‖_∞ / ‖W‖_{W^{1,∞}}` for each `j`.
pub fn smoothing_gap(w: &GridFunction, scales: &[i32], delta: f64) -> Result<Vec<(i32, f64)>> {
    let system = DyadicSystem::new(0, w.period(), w.len())?;
    let norm = w1_inf_norm(w);
    Ok(scales
        .iter()
        .map(|&j| {
            let gap = (&system.s(w, j) - &smooth_coefficient(w, j, delta)).sup_norm();
            (j, gap * 2f64.powf(j as f64 * delta) / norm)
        })
        .collect())
}

pub type CoefficientFamily = Arc<dyn Fn(f64) -> GridFunction + Send + Sync>;

/// Data of the localized problem at `h = 2^{−j}`.
#[derive(Clone)]
pub struct SemiclassicalSetup {
    j: i32,
    delta: f64,
    n_trunc: i32,
    w: CoefficientFamily,
    stationary: bool,
    period: f64,
    n_points: usize,
}

impl std::fmt::Debug for SemiclassicalSetup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SemiclassicalSetup")
            .field("j", &self.j)
            .field("delta", &self.delta)
            .field("n_trunc", &self.n_trunc)
            .field("stationary", &self.stationary)
            .field("period", &self.period)
            .field("n_points", &self.n_points)
            .finish()
    }
}

/// Default truncation offset in `S_{δ(j−N)}`.
pub const DEFAULT_N: i32 = 3;

/// Default torus period; at least eight times the largest group speed.
pub const DEFAULT_PERIOD: f64 = 8.0 * PI;

/// Smallest power-of-two grid resolving `|ξ| ≤ 3/h` on the given period.
pub fn grid_for(j: i32, period: f64) -> usize {
    let need = 3.0 * 2f64.powi(j) * period / PI;
    (need.ceil() as usize).next_power_of_two().max(64)
}

impl SemiclassicalSetup {
    pub fn new(j: i32, delta: f64, w: CoefficientFamily, stationary: bool, period: f64, n_points: usize) -> Result<Self> {
        if !(delta > 0.0 && delta < 0.5) {
            return invalid(format!("δ must lie in (0, 1/2), got {delta}"));
        }
        if j < 1 {
            return invalid(format!("need h = 2^-j ≤ 1/2, got j = {j}"));
        }
        let probe = w(0.0);
        if probe.len() != n_points || (probe.period() - period).abs() > 1e-12 * period || !probe.is_real(1e-12) {
            return invalid("coefficient must be real and live on the setup grid");
        }
        Ok(Self { j, delta, n_trunc: DEFAULT_N, w, stationary, period, n_points })
    }

    /// Time-independent coefficient; the grid is taken from `w`.
    pub fn frozen(j: i32, delta: f64, w: GridFunction) -> Result<Self> {
        let (period, n) = (w.period(), w.len());
        let w = w.re();
        Self::new(j, delta, Arc::new(move |_| w.clone()), true, period, n)
    }

    pub fn with_truncation(mut self, n: i32) -> Self {
        self.n_trunc = n;
        self
    }

    pub fn j(&self) -> i32 {
        self.j
    }

    pub fn h(&self) -> f64 {
        2f64.powi(-self.j)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    /// `S_{δ(j−N)}W(t)`.
    pub fn smoothed_w(&self, t: f64) -> GridFunction {
        smooth_coefficient(&(self.w)(t), self.j - self.n_trunc, self.delta).re()
    }

    /// `W_h(σ, ·) = S_{δ(j−N)}W(σ h^{1/2}, ·)`.
    pub fn w_h(&self, sigma: f64) -> GridFunction {
        self.smoothed_w(sigma * self.h().sqrt())
    }

    /// Dispersive multiplier `χ₀(hξ)|ξ|^{3/2}`.
    pub fn dispersion(&self, xi: f64) -> f64 {
        chi0(self.h() * xi) * xi.abs().powf(1.5)
    }

    /// Datum `ϑ(hD)δ_{x0}` with `ϑ` the window of [`datum_window`].
    pub fn datum(&self, x0: f64) -> Result<GridFunction> {
        let h = self.h();
        let n = self.n_points;
        let proto = GridFunction::zeros(self.period, n)?;
        let spec = (0..n)
            .map(|i| {
                let xi = proto.frequency(i);
                C64::from_polar(datum_window(h * xi) / self.period, -xi * x0)
            })
            .collect();
        GridFunction::from_spectrum(self.period, spec)
    }
}

/// Pieces of the localized right-hand side.
#[derive(Clone, Debug)]
pub struct LocalizedPieces {
    pub delta_f: GridFunction,
    pub tw_prime: GridFunction,
    pub commutators: GridFunction,
    pub r_j: GridFunction,
    pub r_prime_j: GridFunction,
    pub swap: GridFunction,
}

#[derive(Clone, Debug)]
pub struct Localized {
    pub f_j: GridFunction,
    /// `𝓛_δ Δ_j u`, with `∂_t u` read off the equation.
    pub lhs: GridFunction,
    pub pieces: LocalizedPieces,
    /// `‖𝓛_δΔ_ju − F_j‖ / ‖F_j‖`.
    pub identity_residual: f64,
    /// Spectral extent of `R_j u` and `R′_j u` divided by `2^j`.
    pub annulus: (f64, f64),
}

fn spectral_band(f: &GridFunction, rel: f64) -> Option<(f64, f64)> {
    let peak = f.max_coefficient();
    if peak == 0.0 {
        return None;
    }
    let mut band: Option<(f64, f64)> = None;
    for i in 0..f.len() {
        if f.spectrum()[i].norm() > rel * peak {
            let xi = f.frequency(i).abs();
            band = Some(band.map_or((xi, xi), |(a, b)| (a.min(xi), b.max(xi))));
        }
    }
    band
}

/// Assembles `F_j` for `(∂_t + T_W∂_x + i|D|^{3/2})u = f` localized by `Δ_j`,
/// and audits `𝓛_δΔ_ju = F_j`.
pub fn localize_equation(
    u: &GridFunction,
    w: &GridFunction,
    f: &GridFunction,
    j: i32,
    system: &DyadicSystem,
    pair: &CutoffPair,
    delta: f64,
) -> Result<Localized> {
    if !u.same_grid(w) || !u.same_grid(f) {
        return invalid("u, W and f must share a grid");
    }
    if j < 1 {
        return invalid("localization needs j ≥ 1");
    }
    let n_tr = pair.n_trunc();
    let h = 2f64.powi(-j);
    let tw = |v: &GridFunction| -> Result<GridFunction> { apply_t(&SeparableSymbol::function(w.clone(), 1.0)?, v, system, pair) };
    let d32 = |v: &GridFunction| v.map_spectrum(|xi| C64::new(0.0, xi.abs().powf(1.5)));
    let du = u.derivative();
    let dt_u = &(f - &tw(&du)?) - &d32(u);
    let dj = |v: &GridFunction| system.delta(v, j);
    let dju = dj(u);
    let d_dju = dju.derivative();
    let s_w = system.s(w, j - n_tr);
    let sd_w = smooth_coefficient(w, j - n_tr, delta);

    let disp = dju.map_spectrum(|xi| C64::new(0.0, chi0(h * xi) * xi.abs().powf(1.5)));
    let transport = (&(&sd_w * &d_dju) + &(&sd_w * &dju).derivative()).scale_re(0.5);
    let lhs = &(&dj(&dt_u) + &transport) + &disp;

    let delta_f = dj(f);
    let tw_prime = dj(&apply_t(&SeparableSymbol::function(w.derivative(), 1.0)?, u, system, pair)?).scale_re(0.5);
    let comm1 = &tw(&dj(&du))? - &dj(&tw(&du)?);
    let comm2 = (&tw(&dju)? - &dj(&tw(u)?)).derivative();
    let commutators = (&comm1 + &comm2).scale_re(0.5);
    let r_j = &tw(&d_dju)? - &(&s_w * &d_dju);
    let r_prime_j = &tw(&dju)?.derivative() - &(&s_w * &dju).derivative();
    let diff = &sd_w - &s_w;
    let swap = (&(&diff * &d_dju) + &(&diff * &dju).derivative()).scale_re(0.5);
    let f_j = &(&(&(&delta_f + &tw_prime) + &commutators) - &(&r_j + &r_prime_j).scale_re(0.5)) + &swap;

    let identity_residual = (&lhs - &f_j).l2_norm() / f_j.l2_norm().max(f64::MIN_POSITIVE);
    let scale = 2f64.powi(j);
    let mut annulus = (f64::INFINITY, 0.0f64);
    for r in [&r_j, &r_prime_j] {
        if let Some((a, b)) = spectral_band(r, 1e-10) {
            annulus = (annulus.0.min(a / scale), annulus.1.max(b / scale));
        }
    }
    Ok(Localized {
        f_j,
        lhs,
        pieces: LocalizedPieces { delta_f, tw_prime, commutators, r_j, r_prime_j, swap },
        identity_residual,
        annulus,
    })
}

/// `u(x − d(x))` by a Taylor series in `d`, exact for trigonometric polynomials
/// up to the truncation tolerance.
fn shift_by(u: &GridFunction, d: &[f64]) -> Vec<C64> {
    let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let reach = dmax * u.max_frequency();
    let mut out: Vec<C64> = u.samples().to_vec();
    if reach == 0.0 {
        return out;
    }
    let mut term_bound = 1.0;
    let mut k = 0u32;
    let mut deriv = u.clone();
    let mut pow: Vec<f64> = vec![1.0; d.len()];
    let mut fact = 1.0;
    loop {
        k += 1;
        term_bound *= reach / k as f64;
        deriv = deriv.derivative();
        fact *= k as f64;
        for (p, di) in pow.iter_mut().zip(d) {
            *p *= -di;
        }
        for ((o, dv), p) in out.iter_mut().zip(deriv.samples()).zip(&pow) {
            *o += dv * (*p / fact);
        }
        if term_bound < 1e-16 || k > 60 {
            break;
        }
    }
    out
}

/// Exact flow of `∂_t u + W∂_x u + ½(∂_xW)u = 0` along midpoint-rule
/// characteristics: `u ↦ u(X)·√X′`, an isometry of `L²`.
fn transport_step(u: &GridFunction, w: &GridFunction, dt: f64) -> GridFunction {
    let ws = w.trig_sum(1e-16 * w.max_coefficient());
    let xs = u.grid_points();
    let wx: Vec<f64> = w.samples().iter().map(|z| z.re).collect();
    let mids: Vec<f64> = xs.iter().zip(&wx).map(|(x, v)| x - 0.5 * dt * v).collect();
    let d: Vec<f64> = ws.eval_many(&mids).iter().map(|z| dt * z.re).collect();
    let dfun = GridFunction::from_real(u.period(), &d).expect("finite displacement");
    let dprime = dfun.derivative();
    let shifted = shift_by(u, &d);
    let samples: Vec<C64> = shifted
        .iter()
        .zip(dprime.samples())
        .map(|(v, dp)| v * (1.0 - dp.re).sqrt())
        .collect();
    GridFunction::new(u.period(), samples).expect("finite transport")
}

fn dispersive_step(setup: &SemiclassicalSetup, u: &GridFunction, dt: f64) -> GridFunction {
    u.map_spectrum(|xi| C64::from_polar(1.0, -dt * setup.dispersion(xi)))
}

/// Strang splitting over `[t0, t1]` in `steps` equal steps.
pub fn propagate(setup: &SemiclassicalSetup, u0: &GridFunction, t0: f64, t1: f64, steps: usize) -> Result<GridFunction> {
    if steps == 0 {
        return invalid("need at least one step");
    }
    if u0.len() != setup.n_points || (u0.period() - setup.period).abs() > 1e-12 * setup.period {
        return invalid("datum does not live on the setup grid");
    }
    let dt = (t1 - t0) / steps as f64;
    let frozen = setup.stationary.then(|| setup.smoothed_w(t0));
    let silent = frozen.as_ref().is_some_and(|w| w.sup_norm() == 0.0);
    if silent {
        return Ok(dispersive_step(setup, u0, t1 - t0));
    }
    let mut u = dispersive_step(setup, u0, 0.5 * dt);
    for s in 0..steps {
        let tm = t0 + (s as f64 + 0.5) * dt;
        let w = match &frozen {
            Some(w) => w.clone(),
            None => setup.smoothed_w(tm),
        };
        u = transport_step(&u, &w, dt);
        let next = if s + 1 == steps { 0.5 * dt } else { dt };
        u = dispersive_step(setup, &u, next);
    }
    Ok(u)
}

/// Propagates through increasing checkpoint times with step size at most `dt`.
pub fn propagate_schedule(setup: &SemiclassicalSetup, u0: &GridFunction, t0: f64, times: &[f64], dt: f64) -> Result<Vec<GridFunction>> {
    let mut out = Vec::with_capacity(times.len());
    let mut u = u0.clone();
    let mut t = t0;
    for &tn in times {
        if tn < t {
            return invalid("checkpoint times must increase");
        }
        if tn > t {
            let steps = ((tn - t) / dt).ceil().max(1.0) as usize;
            u = propagate(setup, &u, t, tn, steps)?;
        }
        t = tn;
        out.push(u.clone());
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PropagationAudit {
    /// Largest `|‖u(t)‖ − ‖u0‖| / ‖u0‖` over the checkpoints.
    pub l2_drift: f64,
    /// `‖u_S − u_{2S}‖ / ‖u_{2S} − u_{4S}‖` at the last checkpoint; `None` when the
    /// flow is exact (no transport).
    pub richardson_ratio: Option<f64>,
    /// Estimated relative error of the returned (finest) solution.
    pub error_estimate: f64,
    pub dt: f64,
}

impl PropagationAudit {
    pub fn conserved(&self) -> bool {
        self.l2_drift <= 1e-8
    }

    pub fn second_order(&self) -> bool {
        self.richardson_ratio.map_or(true, |r| (3.4..=4.6).contains(&r))
    }
}

/// Runs the schedule at `dt`, `dt/2` and `dt/4`; returns the finest states and
/// the audit. Refuses when the estimated splitting error exceeds `1e−6`.
pub fn propagate_audited(
    setup: &SemiclassicalSetup,
    u0: &GridFunction,
    t0: f64,
    times: &[f64],
    dt: f64,
) -> Result<(Vec<GridFunction>, PropagationAudit)> {
    let runs: Vec<Vec<GridFunction>> = [dt, dt / 2.0, dt / 4.0]
        .par_iter()
        .map(|&d| propagate_schedule(setup, u0, t0, times, d))
        .collect::<Result<_>>()?;
    let n0 = u0.l2_norm();
    let last = times.len() - 1;
    let d1 = (&runs[0][last] - &runs[1][last]).l2_norm() / n0;
    let d2 = (&runs[1][last] - &runs[2][last]).l2_norm() / n0;
    let exact = d1 < 1e-12 && d2 < 1e-12;
    let richardson_ratio = (!exact).then(|| d1 / d2);
    let error_estimate = d2 / 3.0;
    let l2_drift = runs[2].iter().map(|u| ((u.l2_norm() - n0) / n0).abs()).fold(0.0, f64::max);
    if error_estimate > 1e-6 {
        let factor = (error_estimate / 1e-6).sqrt().ceil();
        return Err(Error::Numerical(format!(
            "splitting error estimate {error_estimate:.2e} exceeds 1e-6; reduce the step by a factor of at least {factor}"
        )));
    }
    let fine = runs.into_iter().nth(2).expect("three runs");
    Ok((fine, PropagationAudit { l2_drift, richardson_ratio, error_estimate, dt: dt / 4.0 }))
}

/// Base step for the audited propagator. The Strang error behaves like
/// `Δt² h^{−3/2}‖W‖_{W^{1,∞}}`; the constant is calibrated to an estimate near `2.5e−7`.
pub fn default_step(setup: &SemiclassicalSetup) -> f64 {
    let h = setup.h();
    let w1 = w1_inf_norm(&setup.smoothed_w(0.0)).max(1e-3);
    (0.0084 * h.powf(0.75) / w1.sqrt()).min(h.sqrt() / 8.0)
}

/// Composite Simpson with panel doubling until successive values agree to `tol`.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut n = 8usize;
    let mut prev = f64::NAN;
    while n <= 1 << 16 {
        let hstep = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * hstep) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let val = s * hstep / 3.0;
        if (val - prev).abs() <= tol * (1.0 + val.abs()) {
            return Ok(val);
        }
        prev = val;
        n *= 2;
    }
    Err(Error::Numerical(format!("Simpson quadrature on [{a}, {b}] did not reach {tol}")))
}

/// `∫₀^σ g(s) ds` after `s = σv⁴`, which tames integrable singularities at
/// `s = 0` such as those of coefficients bounded in `L⁴` in time.
fn singular_simpson(g: impl Fn(f64) -> f64, sigma: f64, tol: f64) -> Result<f64> {
    simpson(|v| 4.0 * sigma * v.powi(3) * g(sigma * v.powi(4)), 0.0, 1.0, tol)
}

fn eval_at(f: &GridFunction, x: f64) -> f64 {
    f.trig_sum(0.0).eval(x).re
}

/// `ψ(σ, x, ξ) = −ξ ∫₀^σ W_h(s, x + a′(ξ)(s − σ)) ds` by quadrature.
pub fn wkb_phase(setup: &SemiclassicalSetup, sigma: f64, x: f64, xi: f64) -> Result<f64> {
    let ap = symbol_a_prime(xi);
    if setup.stationary {
        let ws = setup.w_h(0.0).trig_sum(0.0);
        Ok(-xi * simpson(|s| ws.eval(x + ap * (s - sigma)).re, 0.0, sigma, 1e-12)?)
    } else {
        Ok(-xi * singular_simpson(|s| eval_at(&setup.w_h(s), x + ap * (s - sigma)), sigma, 1e-10)?)
    }
}

/// `∂_xψ(σ, x, ξ) = −ξ ∫₀^σ ∂_xW_h(s, x + a′(ξ)(s − σ)) ds`.
pub fn wkb_phase_dx(setup: &SemiclassicalSetup, sigma: f64, x: f64, xi: f64) -> Result<f64> {
    let ap = symbol_a_prime(xi);
    if setup.stationary {
        let ws = setup.w_h(0.0).derivative().trig_sum(0.0);
        Ok(-xi * simpson(|s| ws.eval(x + ap * (s - sigma)).re, 0.0, sigma, 1e-12)?)
    } else {
        Ok(-xi * singular_simpson(|s| eval_at(&setup.w_h(s).derivative(), x + ap * (s - sigma)), sigma, 1e-10)?)
    }
}

/// `f = W_h ∂_xψ + ½ a″(ξ)(∂_xψ)²`.
pub fn wkb_f(w_h: f64, psi_x: f64, xi: f64) -> f64 {
    w_h * psi_x + 0.5 * symbol_a_second(xi) * psi_x * psi_x
}

/// `b₀ = χ₁(ξ) exp(−i ∫₀^σ f(s, x + a′(ξ)(s − σ), ξ) ds)` with `χ₁ = χ₀`.
pub fn wkb_amplitude(setup: &SemiclassicalSetup, sigma: f64, x: f64, xi: f64) -> Result<C64> {
    let ap = symbol_a_prime(xi);
    let integrand = |s: f64| -> f64 {
        let y = x + ap * (s - sigma);
        let psi_x = wkb_phase_dx(setup, s, y, xi).unwrap_or(f64::NAN);
        let w = if setup.stationary { eval_at(&setup.w_h(0.0), y) } else { eval_at(&setup.w_h(s), y) };
        wkb_f(w, psi_x, xi)
    };
    let phase = simpson(integrand, 0.0, sigma, 1e-9)?;
    if !phase.is_finite() {
        return Err(Error::Numerical("amplitude phase is not finite".into()));
    }
    Ok(C64::from_polar(chi0(xi), -phase))
}

/// Fitted exponent of `σ ↦ sup_x |∂_xψ(σ, x, ξ)|`.
pub fn phase_growth_exponent(setup: &SemiclassicalSetup, sigmas: &[f64], xi: f64, samples: usize) -> Result<f64> {
    let xs: Vec<f64> = (0..samples).map(|i| setup.period * i as f64 / samples as f64).collect();
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for &s in sigmas {
        let m = xs
            .iter()
            .map(|&x| wkb_phase_dx(setup, s, x, xi).map(f64::abs))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        lx.push(s.ln());
        ly.push(m.ln());
    }
    Ok(fit_slope_raw(&lx, &ly)?.0)
}

/// Stationary-coefficient closed forms along characteristics:
/// `ψ = −ξ Σ_m w_m e^{iθ_m x}(1 − e^{−iθ_m a′σ})/(iθ_m a′)` and
/// `∂_xψ(s, y) = −(ξ/a′)(W(y) − W(y − a′s))`.
struct StationaryPhase {
    modes: Vec<(f64, C64)>,
    w: crate::spectral::TrigSum,
}

impl StationaryPhase {
    fn new(w: &GridFunction) -> Self {
        let tol = 1e-15 * w.max_coefficient();
        let modes = (0..w.len())
            .filter(|&i| w.spectrum()[i].norm() > tol)
            .map(|i| (w.frequency(i), w.spectrum()[i]))
            .collect();
        Self { modes, w: w.trig_sum(tol) }
    }

    fn psi(&self, sigma: f64, x: f64, xi: f64) -> f64 {
        let ap = symbol_a_prime(xi);
        let mut acc = C64::new(0.0, 0.0);
        for &(theta, c) in &self.modes {
            let lam = theta * ap;
            let g = if lam.abs() * sigma < 1e-12 {
                C64::new(sigma, 0.0)
            } else {
                (C64::new(1.0, 0.0) - C64::from_polar(1.0, -lam * sigma)) / C64::new(0.0, lam)
            };
            acc += c * C64::from_polar(1.0, theta * x) * g;
        }
        -xi * acc.re
    }

    fn w(&self, y: f64) -> f64 {
        self.w.eval(y).re
    }

    fn psi_x(&self, s: f64, y: f64, xi: f64) -> f64 {
        let ap = symbol_a_prime(xi);
        -(xi / ap) * (self.w(y) - self.w(y - ap * s))
    }

    /// `∫₀^σ f(s, x + a′(s − σ), ξ) ds` by composite Simpson on `panels` panels.
    fn amplitude_phase(&self, sigma: f64, x: f64, xi: f64, panels: usize) -> f64 {
        let ap = symbol_a_prime(xi);
        let hstep = sigma / panels as f64;
        let mut acc = 0.0;
        for i in 0..=panels {
            let s = i as f64 * hstep;
            let y = x + ap * (s - sigma);
            let v = wkb_f(self.w(y), self.psi_x(s, y, xi), xi);
            let wgt = if i == 0 || i == panels { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += wgt * v;
        }
        acc * hstep / 3.0
    }
}

/// Leading-order parametrix at time `σ` for the datum of [`SemiclassicalSetup::datum`]
/// centred at `x0`, for a time-independent coefficient. Phase and amplitude
/// are tabulated on `nodes` semiclassical frequencies per sign and
/// interpolated cubically.
pub fn parametrix(setup: &SemiclassicalSetup, u0: &GridFunction, x0: f64, sigma: f64, nodes: usize) -> Result<GridFunction> {
    if !setup.stationary {
        return invalid("the parametrix is built for time-independent coefficients");
    }
    let h = setup.h();
    let sp = StationaryPhase::new(&setup.w_h(0.0));
    let n = setup.n_points;
    let period = setup.period;
    let active: Vec<(f64, C64)> = (0..n)
        .filter(|&i| u0.spectrum()[i].norm() > 0.0)
        .map(|i| (u0.frequency(i), u0.spectrum()[i]))
        .collect();
    let (lo, hi) = (1.0, 2.0);
    let node_xi: Vec<f64> = (0..nodes).map(|i| lo + (hi - lo) * i as f64 / (nodes - 1) as f64).collect();
    let xs = u0.grid_points();
    let wrap = |d: f64| d - period * (d / period).round();
    let speeds = (symbol_a_prime(lo), symbol_a_prime(hi));
    let values: Vec<C64> = xs
        .par_iter()
        .map(|&x| {
            let near = |sgn: f64| {
                let dpos = wrap(x - x0 - sgn * sigma * speeds.0);
                let dpos2 = wrap(x - x0 - sgn * sigma * speeds.1);
                dpos.abs() < 2.0 + (speeds.1 - speeds.0) * sigma || dpos2.abs() < 2.0 + (speeds.1 - speeds.0) * sigma
            };
            let mut acc = C64::new(0.0, 0.0);
            for sgn in [1.0, -1.0] {
                if !near(sgn) {
                    continue;
                }
                let table: Vec<(f64, f64)> = node_xi
                    .iter()
                    .map(|&r| {
                        let xi = sgn * r;
                        (sp.psi(sigma, x, xi), sp.amplitude_phase(sigma, x, xi, 64))
                    })
                    .collect();
                for &(k, c) in &active {
                    let xi = h * k;
                    if xi * sgn <= 0.0 {
                        continue;
                    }
                    let z = zeta(wrap(x - x0 - sigma * symbol_a_prime(xi)));
                    if z == 0.0 {
                        continue;
                    }
                    let (psi, phase_b) = interpolate(&node_xi, &table, xi.abs());
                    let phase = k * x - sigma * symbol_a(xi) / h + psi / h.sqrt() - phase_b;
                    acc += c * C64::from_polar(chi0(xi) * z, phase);
                }
            }
            acc
        })
        .collect();
    GridFunction::new(period, values)
}

/// Cubic Lagrange interpolation on a uniform table.
fn interpolate(nodes: &[f64], table: &[(f64, f64)], x: f64) -> (f64, f64) {
    let n = nodes.len();
    let step = nodes[1] - nodes[0];
    let pos = ((x - nodes[0]) / step).clamp(0.0, (n - 1) as f64);
    let i0 = (pos.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let mut out = (0.0, 0.0);
    for a in 0..4 {
        let mut w = 1.0;
        for b in 0..4 {
            if a != b {
                w *= (x - nodes[i0 + b]) / (nodes[i0 + a] - nodes[i0 + b]);
            }
        }
        out.0 += w * table[i0 + a].0;
        out.1 += w * table[i0 + a].1;
    }
    out
}

fn oversampled(u: &GridFunction, factor: usize) -> Result<GridFunction> {
    let n = u.len();
    let m = n * factor;
    let mut spec = vec![C64::new(0.0, 0.0); m];
    for i in 0..n {
        let k = crate::spectral::signed_index(i, n);
        if 2 * k.unsigned_abs() as usize == n {
            continue;
        }
        spec[k.rem_euclid(m as i64) as usize] = u.spectrum()[i];
    }
    GridFunction::from_spectrum(u.period(), spec)
}

fn fine_sup(u: &GridFunction) -> Result<f64> {
    Ok(oversampled(u, 4)?.sup_norm())
}

fn fine_l1(u: &GridFunction) -> Result<f64> {
    let f = oversampled(u, 4)?;
    Ok(f.samples().iter().map(|z| z.norm()).sum::<f64>() * f.dx())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DispersionEntry {
    pub j: i32,
    pub h: f64,
    pub t: f64,
    pub sup: f64,
    pub normalized: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DispersionReport {
    pub entries: Vec<DispersionEntry>,
    pub max_min_ratio: f64,
    pub h_slope: f64,
    pub audits: Vec<(i32, PropagationAudit)>,
    pub pass: bool,
}

/// A family of setups indexed by `j`, sharing the coefficient shape and `δ`.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub scales: Vec<i32>,
    pub delta: f64,
    pub period: f64,
    pub x0: f64,
    /// Coefficient as a function of `x`, frozen in time.
    pub w_amplitude: f64,
    pub w_mode: f64,
    pub t_samples: usize,
}

impl SweepConfig {
    pub fn new(scales: Vec<i32>, w_amplitude: f64) -> Self {
        Self { scales, delta: 0.25, period: DEFAULT_PERIOD, x0: DEFAULT_PERIOD / 4.0, w_amplitude, w_mode: 1.0, t_samples: 10 }
    }

    pub fn setup(&self, j: i32) -> Result<SemiclassicalSetup> {
        let n = grid_for(j, self.period);
        let (a, m) = (self.w_amplitude, self.w_mode);
        let w = GridFunction::from_real_fn(self.period, n, |x| a * (m * x).cos())?;
        SemiclassicalSetup::frozen(j, self.delta, w)
    }
}

struct Run {
    j: i32,
    times: Vec<f64>,
    states: Vec<GridFunction>,
    u0: GridFunction,
    audit: PropagationAudit,
}

fn run_case(cfg: &SweepConfig, j: i32, times_of: impl Fn(f64) -> Vec<f64>) -> Result<Run> {
    let setup = cfg.setup(j)?;
    let u0 = setup.datum(cfg.x0)?;
    let times = times_of(setup.h());
    let mut dt = default_step(&setup);
    for _ in 0..3 {
        match propagate_audited(&setup, &u0, 0.0, &times, dt) {
            Ok((states, audit)) => return Ok(Run { j, times, states, u0, audit }),
            Err(Error::Numerical(msg)) if msg.starts_with("splitting error") => dt /= 2.0,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Numerical(format!("no step reached the splitting tolerance at j = {j}")))
}

fn with_audit_notes(env: Environment, audits: &[(i32, PropagationAudit)]) -> Environment {
    let drift = audits.iter().map(|a| a.1.l2_drift).fold(0.0, f64::max);
    let err = audits.iter().map(|a| a.1.error_estimate).fold(0.0, f64::max);
    let ratios: Vec<f64> = audits.iter().filter_map(|a| a.1.richardson_ratio).collect();
    let env = env.note("max_l2_drift", drift).note("max_error_estimate", err);
    if ratios.is_empty() {
        env.note("richardson", "exact")
    } else {
        env.note("richardson_min", ratios.iter().cloned().fold(f64::INFINITY, f64::min))
            .note("richardson_max", ratios.iter().cloned().fold(0.0, f64::max))
    }
}

fn audit_failure(audits: &[(i32, PropagationAudit)]) -> Option<String> {
    audits.iter().find_map(|(j, a)| {
        if !a.conserved() {
            Some(format!("L2 drift {:.2e} at j = {j}", a.l2_drift))
        } else if !a.second_order() {
            Some(format!("Richardson ratio {:?} at j = {j}", a.richardson_ratio))
        } else {
            None
        }
    })
}

/// Tabulates `sup|u(t)|·h^{1/4}|t|^{1/2}/‖u0‖_{L¹}` over `t ∈ [0.05h^{1/2}, h^{1/2}]`.
pub fn measure_dispersion(cfg: &SweepConfig) -> Result<(DispersionReport, DecayReport)> {
    let k = cfg.t_samples;
    let runs: Vec<Run> = cfg
        .scales
        .iter()
        .map(|&j| {
            run_case(cfg, j, |h| {
                let (a, b) = (0.05 * h.sqrt(), h.sqrt());
                (0..k).map(|i| a * (b / a).powf(i as f64 / (k - 1) as f64)).collect()
            })
        })
        .collect::<Result<_>>()?;
    let mut entries = Vec::new();
    let mut points = Vec::new();
    let mut audits = Vec::new();
    for r in &runs {
        let h = 2f64.powi(-r.j);
        let l1 = fine_l1(&r.u0)?;
        let mut best: f64 = 0.0;
        for (t, u) in r.times.iter().zip(&r.states) {
            let sup = fine_sup(u)?;
            let normalized = sup * h.powf(0.25) * t.sqrt() / l1;
            best = best.max(normalized);
            entries.push(DispersionEntry { j: r.j, h, t: *t, sup, normalized });
        }
        points.push(ScalePoint { j: r.j, norm: best });
        audits.push((r.j, r.audit));
    }
    let hi = entries.iter().map(|e| e.normalized).fold(0.0, f64::max);
    let lo = entries.iter().map(|e| e.normalized).fold(f64::INFINITY, f64::min);
    let max_min_ratio = hi / lo;
    let mut env = Environment::new(grid_for(*cfg.scales.iter().max().unwrap_or(&1), cfg.period), cfg.period, 0)
        .note("delta", cfg.delta)
        .note("w_amplitude", cfg.w_amplitude)
        .note("max_min_ratio", max_min_ratio);
    env = with_audit_notes(env, &audits);
    env.n_trunc = Some(DEFAULT_N);
    let mut report = DecayReport::build("dispersion", points, 0.0, 0.15, BoundKind::Flat, env)?;
    if max_min_ratio > 3.0 {
        report.fail_with("normalized sup varies by more than a factor 3");
    }
    if let Some(msg) = audit_failure(&audits) {
        report.fail_with(&msg);
    }
    let disp = DispersionReport { entries, max_min_ratio, h_slope: -report.fitted_slope, audits, pass: report.pass };
    Ok((disp, report))
}

/// `h^{1/8}‖u‖_{L⁴(I_h; L^∞)}/‖u0‖_{L²}` over `I_h = [0, h^{1/2}]`, flat in `h`.
pub fn measure_strichartz(cfg: &SweepConfig) -> Result<(DecayReport, Vec<(i32, PropagationAudit)>)> {
    let k = 4 * cfg.t_samples;
    let runs: Vec<Run> = cfg
        .scales
        .iter()
        .map(|&j| {
            run_case(cfg, j, |h| {
                let (a, b) = (h.powf(1.5) / 16.0, h.sqrt());
                (0..k).map(|i| a * (b / a).powf(i as f64 / (k - 1) as f64)).collect()
            })
        })
        .collect::<Result<_>>()?;
    let mut points = Vec::new();
    let mut audits = Vec::new();
    for r in &runs {
        let h = 2f64.powi(-r.j);
        let s0 = fine_sup(&r.u0)?;
        let sups: Vec<f64> = r.states.iter().map(fine_sup).collect::<Result<_>>()?;
        // trapezoid in t, with the initial segment [0, t_1] at the datum value
        let mut integral = r.times[0] * 0.5 * (s0.powi(4) + sups[0].powi(4));
        for i in 1..sups.len() {
            integral += (r.times[i] - r.times[i - 1]) * 0.5 * (sups[i].powi(4) + sups[i - 1].powi(4));
        }
        let q = h.powf(0.125) * integral.powf(0.25) / r.u0.l2_norm();
        points.push(ScalePoint { j: r.j, norm: q });
        audits.push((r.j, r.audit));
    }
    let mut env = Environment::new(grid_for(*cfg.scales.iter().max().unwrap_or(&1), cfg.period), cfg.period, 0)
        .note("delta", cfg.delta)
        .note("w_amplitude", cfg.w_amplitude);
    env = with_audit_notes(env, &audits);
    env.n_trunc = Some(DEFAULT_N);
    let mut report = DecayReport::build("strichartz", points, 0.0, 0.15, BoundKind::Flat, env)?;
    if let Some(msg) = audit_failure(&audits) {
        report.fail_with(&msg);
    }
    Ok((report, audits))
}

/// `‖propagate(u0, σ) − U₀(σ)‖_{L²}/‖u0‖_{L²}` against `h`; passes when the
/// slope in `log₂h` is at least `μ₀ − 0.15`, `μ₀ = ½(½ − δ)`.
pub fn measure_wkb_defect(cfg: &SweepConfig, sigma: f64) -> Result<(DecayReport, Vec<(i32, PropagationAudit)>)> {
    let mu0 = 0.5 * (0.5 - cfg.delta);
    let mut points = Vec::new();
    let mut audits = Vec::new();
    for &j in &cfg.scales {
        let run = run_case(cfg, j, |h| vec![sigma * h.sqrt()])?;
        let setup = cfg.setup(j)?;
        let approx = parametrix(&setup, &run.u0, cfg.x0, sigma, 48)?;
        let defect = (&run.states[0] - &approx).l2_norm() / run.u0.l2_norm();
        points.push(ScalePoint { j, norm: defect });
        audits.push((j, run.audit));
    }
    let mut env = Environment::new(grid_for(*cfg.scales.iter().max().unwrap_or(&1), cfg.period), cfg.period, 0)
        .note("delta", cfg.delta)
        .note("mu0", mu0)
        .note("sigma", sigma);
    env = with_audit_notes(env, &audits);
    env.n_trunc = Some(DEFAULT_N);
    // slope in j is minus the slope in log₂h
    let mut report = DecayReport::upper("wkb_defect", points, -mu0, 0.15, env)?;
    if let Some(msg) = audit_failure(&audits) {
        report.fail_with(&msg);
    }
    Ok((report, audits))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine(period: f64, n: usize, a: f64) -> GridFunction {
        GridFunction::from_real_fn(period, n, |x| a * x.cos()).unwrap()
    }

    #[test]
    fn cutoff_shapes() {
        assert_eq!(chi0(0.2), 0.0);
        assert_eq!(chi0(4.5), 0.0);
        for r in [0.5, 1.0, 1.7, 2.0] {
            assert_eq!(chi0(r), 1.0);
            assert_eq!(chi0(-r), 1.0);
        }
        assert!((symbol_a_prime(1.3) - 1.5 * 1.3f64.sqrt()).abs() < 1e-14);
        assert!((symbol_a_second(1.3) - 0.75 / 1.3f64.sqrt()).abs() < 1e-8);
        let fd = (symbol_a(2.6 + 1e-6) - symbol_a(2.6 - 1e-6)) / 2e-6;
        assert!((symbol_a_prime(2.6) - fd).abs() < 1e-6);
    }

    #[test]
    fn smoothing_fixes_low_modes() {
        let n = 256;
        let c = GridFunction::constant(2.0 * PI, n, C64::new(0.7, 0.0)).unwrap();
        assert!(smooth_coefficient(&c, 5, 0.25).max_abs_diff(&c) < 1e-15);
        let w = cosine(2.0 * PI, n, 1.0);
        assert!(smooth_coefficient(&w, 4, 0.25).max_abs_diff(&w) < 1e-15);
        let weier = crate::dyadic::weierstrass(2.0 * PI, 4096, 1.0, 10).unwrap();
        let gaps = smoothing_gap(&weier, &(4..=10).collect::<Vec<_>>(), 0.25).unwrap();
        let hi = gaps.iter().map(|g| g.1).fold(0.0, f64::max);
        let lo = gaps.iter().map(|g| g.1).fold(f64::INFINITY, f64::min);
        assert!(hi.is_finite() && hi / lo < 10.0, "{gaps:?}");
    }

    #[test]
    fn localized_identity() {
        use rand::{Rng, SeedableRng};
        let n = 512;
        let l = 2.0 * PI;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut rand_fn = |kmax: i64| {
            let spec = (0..n)
                .map(|i| {
                    let k = crate::spectral::signed_index(i, n);
                    if k.abs() <= kmax && k != 0 {
                        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) / (1.0 + k.abs() as f64)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
                .collect();
            GridFunction::from_spectrum(l, spec).unwrap().re()
        };
        let u = rand_fn(200);
        let w = &rand_fn(6) + &GridFunction::constant(l, n, C64::new(1.0, 0.0)).unwrap();
        let f = rand_fn(200);
        let sys = DyadicSystem::new(0, l, n).unwrap();
        let pair = CutoffPair::new(&sys, 3).unwrap();
        for j in [4, 5, 6] {
            let loc = localize_equation(&u, &w, &f, j, &sys, &pair, 0.25).unwrap();
            assert!(loc.identity_residual < 1e-10, "{}", loc.identity_residual);
            assert!(loc.annulus.0 > 0.0 && loc.annulus.1 < 8.0, "{:?}", loc.annulus);
        }
        let wc = GridFunction::constant(l, n, C64::new(0.8, 0.0)).unwrap();
        let loc = localize_equation(&u, &wc, &f, 5, &sys, &pair, 0.25).unwrap();
        assert!((&loc.f_j - &sys.delta(&f, 5)).l2_norm() < 1e-12);
    }

    #[test]
    fn free_flow_is_exact() {
        let w = GridFunction::zeros(DEFAULT_PERIOD, 1024).unwrap();
        let setup = SemiclassicalSetup::frozen(5, 0.25, w).unwrap();
        let u0 = setup.datum(3.0).unwrap();
        let t = 0.1;
        let u = propagate(&setup, &u0, 0.0, t, 7).unwrap();
        let exact = u0.map_spectrum(|xi| C64::from_polar(1.0, -t * xi.abs().powf(1.5)));
        assert!(u.max_abs_diff(&exact) < 1e-10 * exact.sup_norm());
    }

    #[test]
    fn transport_conserves_and_converges() {
        let j = 5;
        let n = grid_for(j, DEFAULT_PERIOD);
        let setup = SemiclassicalSetup::frozen(j, 0.25, cosine(DEFAULT_PERIOD, n, 0.4)).unwrap();
        let u0 = setup.datum(6.0).unwrap();
        let t1 = setup.h().sqrt();
        let (states, audit) = propagate_audited(&setup, &u0, 0.0, &[t1 / 2.0, t1], default_step(&setup)).unwrap();
        assert_eq!(states.len(), 2);
        assert!(audit.conserved(), "{audit:?}");
        assert!(audit.second_order(), "{audit:?}");
    }

    #[test]
    fn phase_closed_form() {
        let n = 256;
        let setup = SemiclassicalSetup::frozen(5, 0.25, cosine(DEFAULT_PERIOD, n, 1.0)).unwrap();
        let sp = StationaryPhase::new(&setup.w_h(0.0));
        for (sigma, x, xi) in [(0.5f64, 1.0f64, 1.3f64), (1.0, -2.0, -1.8), (0.2, 4.0, 2.5)] {
            let ap = symbol_a_prime(xi);
            let closed = -xi * (x.sin() - (x - ap * sigma).sin()) / ap;
            let quad = wkb_phase(&setup, sigma, x, xi).unwrap();
            assert!((quad - closed).abs() < 1e-8);
            assert!((sp.psi(sigma, x, xi) - closed).abs() < 1e-10);
            let dq = wkb_phase_dx(&setup, sigma, x, xi).unwrap();
            assert!((sp.psi_x(sigma, x, xi) - dq).abs() < 1e-8);
            let b = wkb_amplitude(&setup, sigma, x, xi).unwrap();
            assert!((b.norm() - chi0(xi)).abs() < 1e-14);
            let phase_b = sp.amplitude_phase(sigma, x, xi, 64);
            assert!((b - C64::from_polar(chi0(xi), -phase_b)).norm() < 1e-7);
        }
        let c = GridFunction::constant(DEFAULT_PERIOD, n, C64::new(0.3, 0.0)).unwrap();
        let flat = SemiclassicalSetup::frozen(5, 0.25, c).unwrap();
        assert!((wkb_phase(&flat, 0.7, 1.0, 1.5).unwrap() + 1.5 * 0.3 * 0.7).abs() < 1e-12);
        assert!(wkb_phase_dx(&flat, 0.7, 1.0, 1.5).unwrap().abs() < 1e-12);
        assert!((wkb_amplitude(&flat, 0.7, 1.0, 1.5).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn phase_growth_shape() {
        let n = 256;
        let setup = SemiclassicalSetup::frozen(5, 0.25, cosine(DEFAULT_PERIOD, n, 0.4)).unwrap();
        let e = phase_growth_exponent(&setup, &[0.05, 0.1, 0.2, 0.4], 1.5, 64).unwrap();
        assert!((0.6..=1.05).contains(&e), "{e}");
        let base = cosine(DEFAULT_PERIOD, n, 0.4);
        let h = 2f64.powi(-5);
        let fam: CoefficientFamily = Arc::new(move |t: f64| base.scale_re((t.abs() / h.sqrt() + 1e-9).powf(-0.2)));
        let timed = SemiclassicalSetup::new(5, 0.25, fam, false, DEFAULT_PERIOD, n).unwrap();
        let e = phase_growth_exponent(&timed, &[0.05, 0.1, 0.2, 0.4], 1.5, 16).unwrap();
        assert!((0.6..=1.05).contains(&e), "{e}");
    }

    #[test]
    fn rejects_bad_delta() {
        let w = GridFunction::zeros(DEFAULT_PERIOD, 64).unwrap();
        assert!(SemiclassicalSetup::frozen(5, 0.5, w.clone()).is_err());
        assert!(SemiclassicalSetup::frozen(5, 0.0, w).is_err());
    }
}
