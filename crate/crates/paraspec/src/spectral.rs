//! Periodic grid functions, Fourier multipliers, off-grid evaluation and norms.
//!
//! A [`GridFunction`] holds `n` samples of a function on a torus of length
//! `period` together with its Fourier coefficients, normalized so that
//! `f(x) = Σ_k c_k exp(i ξ_k x)` with `ξ_k = 2πk / period` and
//! `k ∈ [−n/2, n/2)`. Spectra are stored in FFT order.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::dyadic::DyadicSystem;
use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_forward(buf: &mut [C64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    plan.process(buf);
}

fn fft_inverse(buf: &mut [C64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    plan.process(buf);
}

/// Signed wavenumber of FFT slot `i` on an `n`-point grid.
#[inline]
pub fn signed_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

#[derive(Clone, Debug)]
pub struct GridFunction {
    period: f64,
    samples: Vec<C64>,
    spectrum: Vec<C64>,
}

impl GridFunction {
    pub fn new(period: f64, samples: Vec<C64>) -> Result<Self> {
        check_grid(period, samples.len())?;
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return invalid("non-finite sample");
        }
        let mut spectrum = samples.clone();
        fft_forward(&mut spectrum);
        let scale = 1.0 / samples.len() as f64;
        spectrum.iter_mut().for_each(|c| *c *= scale);
        Ok(Self { period, samples, spectrum })
    }

    pub fn from_real(period: f64, samples: &[f64]) -> Result<Self> {
        Self::new(period, samples.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_fn(period: f64, n: usize, f: impl Fn(f64) -> C64) -> Result<Self> {
        check_grid(period, n)?;
        let dx = period / n as f64;
        Self::new(period, (0..n).map(|j| f(j as f64 * dx)).collect())
    }

    pub fn from_real_fn(period: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(period, n, |x| C64::new(f(x), 0.0))
    }

    /// Builds a function from Fourier coefficients in FFT order.
    pub fn from_spectrum(period: f64, spectrum: Vec<C64>) -> Result<Self> {
        check_grid(period, spectrum.len())?;
        if spectrum.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return invalid("non-finite spectral coefficient");
        }
        let mut samples = spectrum.clone();
        fft_inverse(&mut samples);
        Ok(Self { period, samples, spectrum })
    }

    pub fn zeros(period: f64, n: usize) -> Result<Self> {
        check_grid(period, n)?;
        Ok(Self { period, samples: vec![C64::new(0.0, 0.0); n], spectrum: vec![C64::new(0.0, 0.0); n] })
    }

    pub fn constant(period: f64, n: usize, c: C64) -> Result<Self> {
        check_grid(period, n)?;
        let mut spectrum = vec![C64::new(0.0, 0.0); n];
        spectrum[0] = c;
        Ok(Self { period, samples: vec![c; n], spectrum })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn spectrum(&self) -> &[C64] {
        &self.spectrum
    }

    pub fn dx(&self) -> f64 {
        self.period / self.len() as f64
    }

    pub fn grid_points(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.len()).map(|j| j as f64 * dx).collect()
    }

    /// Angular frequency carried by FFT slot `i`.
    pub fn frequency(&self, i: usize) -> f64 {
        2.0 * PI * signed_index(i, self.len()) as f64 / self.period
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.frequency(i)).collect()
    }

    /// Largest |ξ| present on the grid.
    pub fn max_frequency(&self) -> f64 {
        PI * self.len() as f64 / self.period
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.len() == other.len() && (self.period - other.period).abs() <= 1e-12 * self.period
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.re).collect()
    }

    pub fn re(&self) -> GridFunction {
        self.map(|z| C64::new(z.re, 0.0))
    }

    pub fn conj(&self) -> GridFunction {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> GridFunction {
        GridFunction::new(self.period, self.samples.iter().map(|&z| f(z)).collect())
            .expect("pointwise map produced non-finite values")
    }

    pub fn scale(&self, c: C64) -> GridFunction {
        GridFunction {
            period: self.period,
            samples: self.samples.iter().map(|&z| z * c).collect(),
            spectrum: self.spectrum.iter().map(|&z| z * c).collect(),
        }
    }

    pub fn scale_re(&self, c: f64) -> GridFunction {
        self.scale(C64::new(c, 0.0))
    }

    /// Multiplies the spectrum entrywise by `f(ξ_k)` without validation.
    pub(crate) fn map_spectrum(&self, f: impl Fn(f64) -> C64) -> GridFunction {
        let n = self.len();
        let spectrum: Vec<C64> = (0..n)
            .map(|i| {
                let c = self.spectrum[i];
                if c == C64::new(0.0, 0.0) {
                    c
                } else {
                    c * f(self.frequency(i))
                }
            })
            .collect();
        let mut samples = spectrum.clone();
        fft_inverse(&mut samples);
        GridFunction { period: self.period, samples, spectrum }
    }

    /// Multiplies the spectrum entrywise by real weights given in FFT order.
    pub(crate) fn apply_weights(&self, w: &[f64]) -> GridFunction {
        debug_assert_eq!(w.len(), self.len());
        let spectrum: Vec<C64> = self.spectrum.iter().zip(w).map(|(&c, &m)| c * m).collect();
        let mut samples = spectrum.clone();
        fft_inverse(&mut samples);
        GridFunction { period: self.period, samples, spectrum }
    }

    pub fn apply_multiplier(&self, m: &FrequencyProfile) -> Result<GridFunction> {
        let n = self.len();
        let mut spectrum = Vec::with_capacity(n);
        for i in 0..n {
            let c = self.spectrum[i];
            if c == C64::new(0.0, 0.0) {
                spectrum.push(c);
                continue;
            }
            let xi = self.frequency(i);
            let v = m.eval(xi);
            if !v.re.is_finite() || !v.im.is_finite() {
                return invalid(format!("multiplier is not finite at populated frequency {xi}"));
            }
            spectrum.push(c * v);
        }
        let mut samples = spectrum.clone();
        fft_inverse(&mut samples);
        Ok(GridFunction { period: self.period, samples, spectrum })
    }

    /// Spectral derivative ∂_x.
    pub fn derivative(&self) -> GridFunction {
        self.map_spectrum(|xi| C64::new(0.0, xi))
    }

    pub fn derivative_n(&self, k: u32) -> GridFunction {
        self.map_spectrum(|xi| C64::new(0.0, xi).powu(k))
    }

    /// Trigonometric-polynomial value at arbitrary points, wrapped modulo the period.
    pub fn evaluate_offgrid(&self, points: &[f64]) -> Vec<C64> {
        self.evaluate_offgrid_sparse(points, 0.0)
    }

    /// Direct Fourier summation restricted to coefficients with modulus above `abs_tol`.
    pub fn evaluate_offgrid_sparse(&self, points: &[f64], abs_tol: f64) -> Vec<C64> {
        self.trig_sum(abs_tol).eval_many(points)
    }

    /// The trigonometric polynomial with coefficients above `abs_tol`, ready
    /// for repeated off-grid evaluation.
    pub fn trig_sum(&self, abs_tol: f64) -> TrigSum {
        let n = self.len();
        let mut modes: Vec<(i64, C64)> = (0..n)
            .filter(|&i| self.spectrum[i].norm() > abs_tol)
            .map(|i| (signed_index(i, n), self.spectrum[i]))
            .collect();
        modes.sort_by_key(|m| m.0);
        TrigSum { period: self.period, modes }
    }

    /// Largest spectral coefficient modulus.
    pub fn max_coefficient(&self) -> f64 {
        self.spectrum.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.samples.iter().map(|z| z.norm_sqr()).sum();
        (s * self.dx()).sqrt()
    }

    /// ℓ² norm of the spectrum scaled to match `l2_norm` (Parseval).
    pub fn spectral_l2_norm(&self) -> f64 {
        let s: f64 = self.spectrum.iter().map(|z| z.norm_sqr()).sum();
        (s * self.period).sqrt()
    }

    pub fn inner(&self, other: &GridFunction) -> C64 {
        assert_same_grid(self, other);
        let s: C64 = self.samples.iter().zip(&other.samples).map(|(a, b)| a * b.conj()).sum();
        s * self.dx()
    }

    pub fn norm(&self, kind: NormKind<'_>) -> Result<f64> {
        match kind {
            NormKind::Lp(p) => {
                if p.is_infinite() && p > 0.0 {
                    return Ok(self.sup_norm());
                }
                if !(p >= 1.0) {
                    return invalid(format!("L^p exponent must be ≥ 1, got {p}"));
                }
                let mean: f64 =
                    self.samples.iter().map(|z| z.norm().powf(p)).sum::<f64>() / self.len() as f64;
                Ok(mean.powf(1.0 / p) * self.period.powf(1.0 / p))
            }
            NormKind::Sobolev(s) => {
                let mut acc = 0.0;
                for i in 0..self.len() {
                    let xi = self.frequency(i);
                    acc += (1.0 + xi * xi).powf(s) * self.spectrum[i].norm_sqr();
                }
                Ok((acc * self.period).sqrt())
            }
            NormKind::Zygmund(s, system) => {
                let mut best: f64 = 0.0;
                for q in 0..=system.p_max() {
                    let block = system.delta(self, q);
                    best = best.max(2f64.powf(q as f64 * s) * block.sup_norm());
                }
                Ok(best)
            }
        }
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        assert_same_grid(self, other);
        self.samples.iter().zip(&other.samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Relative L² distance ‖self − other‖ / ‖other‖.
    pub fn rel_l2_diff(&self, other: &GridFunction) -> f64 {
        let d = (self - other).l2_norm();
        let r = other.l2_norm();
        if r == 0.0 {
            d
        } else {
            d / r
        }
    }

    pub fn is_real(&self, tol: f64) -> bool {
        let scale = self.sup_norm().max(1.0);
        self.samples.iter().all(|z| z.im.abs() <= tol * scale)
    }

    /// Largest |ξ| carrying a coefficient above `rel_tol` times the peak coefficient.
    pub fn spectral_extent(&self, rel_tol: f64) -> f64 {
        let peak = self.spectrum.iter().map(|c| c.norm()).fold(0.0, f64::max);
        (0..self.len())
            .filter(|&i| self.spectrum[i].norm() > rel_tol * peak)
            .map(|i| self.frequency(i).abs())
            .fold(0.0, f64::max)
    }

    /// Restricts the spectrum to frequencies with `keep(ξ)` true.
    pub fn filter(&self, keep: impl Fn(f64) -> bool) -> GridFunction {
        self.map_spectrum(|xi| if keep(xi) { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }
}

fn check_grid(period: f64, n: usize) -> Result<()> {
    if !(period.is_finite() && period > 0.0) {
        return invalid(format!("period must be positive and finite, got {period}"));
    }
    if n < 2 || !n.is_power_of_two() {
        return invalid(format!("grid size must be a power of two ≥ 2, got {n}"));
    }
    Ok(())
}

pub(crate) fn assert_same_grid(a: &GridFunction, b: &GridFunction) {
    assert!(a.same_grid(b), "grid mismatch: ({}, {}) vs ({}, {})", a.period, a.len(), b.period, b.len());
}

macro_rules! binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr<&GridFunction> for &GridFunction {
            type Output = GridFunction;
            fn $method(self, rhs: &GridFunction) -> GridFunction {
                assert_same_grid(self, rhs);
                linear_combine(self, rhs, |a, b| a $op b)
            }
        }
        impl $tr<GridFunction> for GridFunction {
            type Output = GridFunction;
            fn $method(self, rhs: GridFunction) -> GridFunction {
                (&self).$method(&rhs)
            }
        }
    };
}

fn linear_combine(a: &GridFunction, b: &GridFunction, f: impl Fn(C64, C64) -> C64) -> GridFunction {
    GridFunction {
        period: a.period,
        samples: a.samples.iter().zip(&b.samples).map(|(&x, &y)| f(x, y)).collect(),
        spectrum: a.spectrum.iter().zip(&b.spectrum).map(|(&x, &y)| f(x, y)).collect(),
    }
}

binop!(Add, add, +);
binop!(Sub, sub, -);

impl Mul<&GridFunction> for &GridFunction {
    type Output = GridFunction;
    fn mul(self, rhs: &GridFunction) -> GridFunction {
        assert_same_grid(self, rhs);
        GridFunction::new(self.period, self.samples.iter().zip(&rhs.samples).map(|(a, b)| a * b).collect())
            .expect("product of finite samples is finite")
    }
}

impl Mul<GridFunction> for GridFunction {
    type Output = GridFunction;
    fn mul(self, rhs: GridFunction) -> GridFunction {
        &self * &rhs
    }
}

impl Neg for &GridFunction {
    type Output = GridFunction;
    fn neg(self) -> GridFunction {
        self.scale_re(-1.0)
    }
}

/// Sparse trigonometric sum `Σ c_k e^{iξ_k x}` evaluated by direct summation.
#[derive(Clone, Debug)]
pub struct TrigSum {
    period: f64,
    modes: Vec<(i64, C64)>,
}

impl TrigSum {
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Value at `x`, wrapped modulo the period. Powers of `e^{i2πx/L}` are
    /// resynchronized every 64 terms and across gaps.
    pub fn eval(&self, x: f64) -> C64 {
        let theta = 2.0 * PI / self.period * x.rem_euclid(self.period);
        let step = C64::from_polar(1.0, theta);
        let mut acc = C64::new(0.0, 0.0);
        let mut w = C64::new(0.0, 0.0);
        let mut prev = 0;
        for (idx, &(k, c)) in self.modes.iter().enumerate() {
            if idx % 64 == 0 || k - prev > 4 {
                w = C64::from_polar(1.0, theta * k as f64);
            } else {
                for _ in prev..k {
                    w *= step;
                }
            }
            prev = k;
            acc += c * w;
        }
        acc
    }

    pub fn eval_many(&self, points: &[f64]) -> Vec<C64> {
        if self.modes.is_empty() {
            return vec![C64::new(0.0, 0.0); points.len()];
        }
        if points.len() * self.modes.len() > 1 << 15 {
            points.par_iter().map(|&x| self.eval(x)).collect()
        } else {
            points.iter().map(|&x| self.eval(x)).collect()
        }
    }
}

/// Norms available on grid functions.
#[derive(Clone, Copy)]
pub enum NormKind<'a> {
    /// Discrete p-mean times `period^{1/p}`; `f64::INFINITY` gives the sup norm.
    Lp(f64),
    /// ℓ² of `(1+|ξ|²)^{s/2} c_k`, scaled so that `f ≡ 1` has norm `period^{1/2}`.
    Sobolev(f64),
    /// `sup_q 2^{qs} ‖Δ_q f‖_∞` over the blocks of the given system.
    Zygmund(f64, &'a DyadicSystem),
}

type ProfileFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

#[derive(Clone)]
enum ProfileKind {
    /// `coeff · sgn(ξ)^sign_power · |ξ|^exponent`
    Monomial { coeff: C64, sign_power: u8, exponent: f64 },
    Custom { eval: ProfileFn, deriv: Option<ProfileFn> },
}

/// A function of the frequency variable, optionally homogeneous.
#[derive(Clone)]
pub struct FrequencyProfile {
    kind: ProfileKind,
    homogeneity: Option<f64>,
    zero_value: Option<C64>,
}

impl fmt::Debug for FrequencyProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ProfileKind::Monomial { coeff, sign_power, exponent } => write!(
                f,
                "Monomial({coeff} sgn^{sign_power} |ξ|^{exponent}, zero={:?})",
                self.zero_value
            ),
            ProfileKind::Custom { deriv, .. } => {
                write!(f, "Custom(homogeneity={:?}, deriv={})", self.homogeneity, deriv.is_some())
            }
        }
    }
}

impl FrequencyProfile {
    pub fn constant(c: C64) -> Self {
        Self::monomial(c, 0, 0.0)
    }

    pub fn one() -> Self {
        Self::constant(C64::new(1.0, 0.0))
    }

    pub fn monomial(coeff: C64, sign_power: u8, exponent: f64) -> Self {
        Self {
            kind: ProfileKind::Monomial { coeff, sign_power: sign_power % 2, exponent },
            homogeneity: Some(exponent),
            zero_value: None,
        }
    }

    /// `|ξ|^e`
    pub fn abs_pow(e: f64) -> Self {
        Self::monomial(C64::new(1.0, 0.0), 0, e)
    }

    /// `iξ`, the symbol of ∂_x.
    pub fn i_xi() -> Self {
        Self::monomial(C64::new(0.0, 1.0), 1, 1.0)
    }

    pub fn custom(f: impl Fn(f64) -> C64 + Send + Sync + 'static) -> Self {
        Self { kind: ProfileKind::Custom { eval: Arc::new(f), deriv: None }, homogeneity: None, zero_value: None }
    }

    pub fn custom_with_derivative(
        f: impl Fn(f64) -> C64 + Send + Sync + 'static,
        df: impl Fn(f64) -> C64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            kind: ProfileKind::Custom { eval: Arc::new(f), deriv: Some(Arc::new(df)) },
            homogeneity: None,
            zero_value: None,
        }
    }

    pub fn with_homogeneity(mut self, m: f64) -> Self {
        self.homogeneity = Some(m);
        self
    }

    /// Overrides the value at ξ = 0.
    pub fn with_zero_value(mut self, v: C64) -> Self {
        self.zero_value = Some(v);
        self
    }

    pub fn homogeneity_degree(&self) -> Option<f64> {
        self.homogeneity
    }

    pub fn zero_value(&self) -> Option<C64> {
        self.zero_value
    }

    /// `(coeff, sign_power, exponent)` for monomial profiles.
    pub fn as_monomial(&self) -> Option<(C64, u8, f64)> {
        match self.kind {
            ProfileKind::Monomial { coeff, sign_power, exponent } => Some((coeff, sign_power, exponent)),
            ProfileKind::Custom { .. } => None,
        }
    }

    pub fn eval(&self, xi: f64) -> C64 {
        if xi == 0.0 {
            if let Some(v) = self.zero_value {
                return v;
            }
        }
        match &self.kind {
            ProfileKind::Monomial { coeff, sign_power, exponent } => {
                if xi == 0.0 {
                    if *exponent > 0.0 || (*exponent == 0.0 && *sign_power == 1) {
                        C64::new(0.0, 0.0)
                    } else if *exponent == 0.0 {
                        *coeff
                    } else {
                        C64::new(f64::INFINITY, 0.0)
                    }
                } else {
                    let s = if *sign_power == 1 { xi.signum() } else { 1.0 };
                    coeff * (s * xi.abs().powf(*exponent))
                }
            }
            ProfileKind::Custom { eval, .. } => eval(xi),
        }
    }

    pub fn has_derivative(&self) -> bool {
        match &self.kind {
            ProfileKind::Monomial { .. } => true,
            ProfileKind::Custom { deriv, .. } => deriv.is_some(),
        }
    }

    /// ∂_ξ of the profile. The result is set to 0 at ξ = 0 when it would be singular there.
    pub fn derivative(&self) -> Result<FrequencyProfile> {
        match &self.kind {
            ProfileKind::Monomial { coeff, sign_power, exponent } => {
                if *exponent == 0.0 {
                    return Ok(Self::constant(C64::new(0.0, 0.0)));
                }
                let mut d = Self::monomial(coeff * *exponent, sign_power + 1, exponent - 1.0);
                if exponent - 1.0 < 0.0 {
                    d.zero_value = Some(C64::new(0.0, 0.0));
                }
                Ok(d)
            }
            ProfileKind::Custom { deriv: Some(df), .. } => Ok(FrequencyProfile {
                kind: ProfileKind::Custom { eval: df.clone(), deriv: None },
                homogeneity: self.homogeneity.map(|m| m - 1.0),
                zero_value: None,
            }),
            ProfileKind::Custom { deriv: None, .. } => {
                Err(Error::InvalidInput("profile has no closed-form ξ-derivative".into()))
            }
        }
    }

    pub fn scaled(&self, c: C64) -> FrequencyProfile {
        match &self.kind {
            ProfileKind::Monomial { coeff, sign_power, exponent } => {
                let mut p = Self::monomial(coeff * c, *sign_power, *exponent);
                p.zero_value = self.zero_value.map(|v| v * c);
                p
            }
            ProfileKind::Custom { eval, deriv } => {
                let e = eval.clone();
                let zero = self.zero_value;
                let ev: ProfileFn = Arc::new(move |xi| match zero {
                    Some(v) if xi == 0.0 => v * c,
                    _ => e(xi) * c,
                });
                let dv: Option<ProfileFn> = deriv.clone().map(|d| -> ProfileFn { Arc::new(move |xi| d(xi) * c) });
                FrequencyProfile {
                    kind: ProfileKind::Custom { eval: ev, deriv: dv },
                    homogeneity: self.homogeneity,
                    zero_value: self.zero_value.map(|v| v * c),
                }
            }
        }
    }

    /// Pointwise product of two profiles.
    pub fn product(&self, other: &FrequencyProfile) -> FrequencyProfile {
        if let (Some((c1, s1, e1)), Some((c2, s2, e2))) = (self.as_monomial(), other.as_monomial()) {
            let mut p = Self::monomial(c1 * c2, s1 + s2, e1 + e2);
            // sgn² = 1 away from 0, but the product must still vanish at 0 when either factor does.
            if let (Some(z1), Some(z2)) = (self.zero_value, other.zero_value) {
                p.zero_value = Some(z1 * z2);
            } else if self.zero_value.is_some() || other.zero_value.is_some() || e1 + e2 < 0.0 {
                p.zero_value = Some(self.eval(0.0) * other.eval(0.0));
                if !p.zero_value.unwrap().re.is_finite() {
                    p.zero_value = None;
                }
            } else if s1 + s2 == 2 && e1 + e2 == 0.0 {
                p.zero_value = Some(C64::new(0.0, 0.0));
            }
            return p;
        }
        let a = self.clone();
        let b = other.clone();
        let homogeneity = match (self.homogeneity, other.homogeneity) {
            (Some(m1), Some(m2)) => Some(m1 + m2),
            _ => None,
        };
        let (a1, b1) = (a.clone(), b.clone());
        let eval: ProfileFn = Arc::new(move |xi| a1.eval(xi) * b1.eval(xi));
        let deriv: Option<ProfileFn> = match (a.derivative(), b.derivative()) {
            (Ok(da), Ok(db)) => Some(Arc::new(move |xi| da.eval(xi) * b.eval(xi) + a.eval(xi) * db.eval(xi))),
            _ => None,
        };
        FrequencyProfile { kind: ProfileKind::Custom { eval, deriv }, homogeneity, zero_value: None }
    }

    /// Sampled homogeneity check for λ ∈ {2, 4} at |ξ| ≥ 1.
    pub fn check_homogeneity(&self, tol: f64) -> bool {
        let Some(m) = self.homogeneity else { return true };
        let probes = [1.0, 1.37, 2.5, 3.9, 7.3, 16.0];
        for &x in &probes {
            for sign in [-1.0, 1.0] {
                let xi = sign * x;
                let base = self.eval(xi);
                for lambda in [2.0f64, 4.0] {
                    let lhs = self.eval(lambda * xi);
                    let rhs = base * lambda.powf(m);
                    if (lhs - rhs).norm() > tol * rhs.norm().max(1.0) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_fn(rng: &mut ChaCha8Rng, period: f64, n: usize) -> GridFunction {
        let s = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        GridFunction::new(period, s).unwrap()
    }

    #[test]
    fn round_trip_and_cache() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let f = random_fn(&mut rng, 2.0 * PI * 32.0, 256);
            let g = GridFunction::from_spectrum(f.period(), f.spectrum().to_vec()).unwrap();
            let scale = f.sup_norm();
            assert!(g.max_abs_diff(&f) <= 1e-12 * scale);
            let h = GridFunction::new(g.period(), g.samples().to_vec()).unwrap();
            for (a, b) in h.spectrum().iter().zip(f.spectrum()) {
                assert!((a - b).norm() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn real_input_has_hermitian_spectrum() {
        let f = GridFunction::from_real_fn(2.0 * PI, 64, |x| (3.0 * x).cos() + 0.2 * (x * 5.0).sin() + 0.7).unwrap();
        let n = f.len();
        for k in 1..n {
            assert!((f.spectrum()[k] - f.spectrum()[n - k].conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn multiplier_examples() {
        let l = 2.0 * PI;
        let f = GridFunction::from_real_fn(l, 64, |x| x.sin()).unwrap();
        let g = f.apply_multiplier(&FrequencyProfile::i_xi()).unwrap();
        let cos = GridFunction::from_real_fn(l, 64, |x| x.cos()).unwrap();
        assert!(g.max_abs_diff(&cos) < 1e-12);
        assert!(f.apply_multiplier(&FrequencyProfile::one()).unwrap().max_abs_diff(&f) < 1e-15);

        let e2 = GridFunction::from_fn(l, 64, |x| C64::from_polar(1.0, 2.0 * x)).unwrap();
        let h = e2.apply_multiplier(&FrequencyProfile::abs_pow(1.5)).unwrap();
        assert!((h.spectrum()[2].re - 2.828_427_124_746_19).abs() < 1e-12);
    }

    #[test]
    fn negative_degree_needs_zero_value() {
        let l = 2.0 * PI;
        let f = GridFunction::from_real_fn(l, 32, |x| 1.0 + x.cos()).unwrap();
        assert!(f.apply_multiplier(&FrequencyProfile::abs_pow(-0.5)).is_err());
        let ok = f.apply_multiplier(&FrequencyProfile::abs_pow(-0.5).with_zero_value(C64::new(0.0, 0.0)));
        assert!(ok.is_ok());
        let nonfinite = FrequencyProfile::custom(|xi| C64::new(if xi > 0.5 { f64::NAN } else { 1.0 }, 0.0));
        assert!(f.apply_multiplier(&nonfinite).is_err());
    }

    #[test]
    fn offgrid_single_mode_and_nodes() {
        let l = 2.0 * PI;
        let f = GridFunction::from_fn(l, 32, |x| C64::from_polar(1.0, x)).unwrap();
        let v = f.evaluate_offgrid(&[PI / 3.0, PI / 3.0 + 5.0 * l]);
        for z in v {
            assert!((z - C64::from_polar(1.0, PI / 3.0)).norm() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = random_fn(&mut rng, 3.0, 128);
        let vals = g.evaluate_offgrid(&g.grid_points());
        for (a, b) in vals.iter().zip(g.samples()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn offgrid_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let l = 5.0;
        let n = 128;
        let mut spec = vec![C64::new(0.0, 0.0); n];
        for k in 0..n {
            let j = signed_index(k, n);
            if j.abs() < 40 {
                spec[k] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let f = GridFunction::from_spectrum(l, spec.clone()).unwrap();
        let pts: Vec<f64> = (0..64).map(|_| rng.gen_range(-20.0..20.0)).collect();
        let fast = f.evaluate_offgrid(&pts);
        for (p, v) in pts.iter().zip(fast) {
            let mut direct = C64::new(0.0, 0.0);
            for k in 0..n {
                let xi = 2.0 * PI * signed_index(k, n) as f64 / l;
                direct += spec[k] * C64::from_polar(1.0, xi * p);
            }
            assert!((direct - v).norm() < 1e-10);
        }
    }

    #[test]
    fn norm_examples() {
        let l = 2.0 * PI;
        let one = GridFunction::constant(l, 16, C64::new(1.0, 0.0)).unwrap();
        for s in [-1.0, 0.0, 0.5, 3.0] {
            assert!((one.norm(NormKind::Sobolev(s)).unwrap() - l.sqrt()).abs() < 1e-12);
        }
        let e4 = GridFunction::from_fn(l, 32, |x| C64::from_polar(1.0, 4.0 * x)).unwrap();
        let s1 = e4.norm(NormKind::Sobolev(1.0)).unwrap();
        assert!((s1 - (2.0 * PI).sqrt() * 17f64.sqrt()).abs() < 1e-12);
        assert!((e4.norm(NormKind::Lp(2.0)).unwrap() - l.sqrt()).abs() < 1e-12);
        assert!((e4.norm(NormKind::Lp(f64::INFINITY)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn profile_derivative_and_product() {
        let g = FrequencyProfile::abs_pow(1.5);
        let d = g.derivative().unwrap();
        assert!((d.eval(4.0).re - 3.0).abs() < 1e-14);
        assert!((d.eval(-4.0).re + 3.0).abs() < 1e-14);
        let p = g.product(&FrequencyProfile::i_xi());
        assert!((p.eval(-4.0) - C64::new(0.0, -32.0)).norm() < 1e-12);
        assert!(p.check_homogeneity(1e-10));
        assert_eq!(p.homogeneity_degree(), Some(2.5));
        let dd = d.derivative().unwrap();
        assert_eq!(dd.eval(0.0), C64::new(0.0, 0.0));
        assert!(FrequencyProfile::custom(|_| C64::new(1.0, 0.0)).derivative().is_err());
    }
}
