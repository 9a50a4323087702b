//! Size-n Littlewood–Paley cutoffs and the block operators S_j, Δ_j.
//!
//! The cutoff of size `n` is the convolution of the piecewise affine plateau
//! function `f_n` (1 on `|t| ≤ 2^{-n} + 1/4`, 0 beyond `2^{-n} + 1/2`, affine
//! in between) with the normalized bump `g(t) ∝ exp(−1/(1 − 16t²))` on
//! `|t| < 1/4`. The result equals 1 on `|ξ| ≤ 2^{-n}` and vanishes for
//! `|ξ| ≥ 2^{-n} + 3/4`, which lies inside `|ξ| ≤ 2^{n+1}`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::report::fit_slope_raw;
use crate::spectral::{signed_index, GridFunction, C64};

const GL5_NODES: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
const GL5_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

/// Unnormalized mollifier `exp(−1/(1 − 16t²))` on `|t| < 1/4`.
pub fn bump(t: f64) -> f64 {
    let s = 1.0 - 16.0 * t * t;
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// Cumulative integrals `G0(t) = ∫_{-1/4}^t g` and `G1(t) = ∫_{-1/4}^t y g(y) dy`
/// of the normalized mollifier, tabulated at `t = −1/4 + i·step`.
struct MollifierTables {
    g0: Vec<f64>,
    g1: Vec<f64>,
}

impl MollifierTables {
    fn new(step: f64) -> Self {
        let m = (0.5 / step).round() as usize;
        let mut g0 = vec![0.0; m + 1];
        let mut g1 = vec![0.0; m + 1];
        for i in 0..m {
            let a = -0.25 + i as f64 * step;
            let mid = a + 0.5 * step;
            let (mut s0, mut s1) = (0.0, 0.0);
            for (x, w) in GL5_NODES.iter().zip(GL5_WEIGHTS) {
                let t = mid + 0.5 * step * x;
                let v = bump(t) * w * 0.5 * step;
                s0 += v;
                s1 += t * v;
            }
            g0[i + 1] = g0[i] + s0;
            g1[i + 1] = g1[i] + s1;
        }
        let z = g0[m];
        g0.iter_mut().for_each(|v| *v /= z);
        g1.iter_mut().for_each(|v| *v /= z);
        g0[m] = 1.0;
        Self { g0, g1 }
    }

    /// Values at table offset `i` (t = −1/4 + i·step), clamped outside the support.
    fn at(&self, i: i64) -> (f64, f64) {
        if i <= 0 {
            (0.0, 0.0)
        } else if i as usize >= self.g0.len() - 1 {
            (1.0, *self.g1.last().unwrap())
        } else {
            (self.g0[i as usize], self.g1[i as usize])
        }
    }
}

/// The size-n cutoff φ_(n), sampled with its exact derivative and evaluated by
/// cubic Hermite interpolation.
#[derive(Clone, Debug)]
pub struct CutoffProfile {
    size_n: u32,
    step: f64,
    values: Vec<f64>,
    derivs: Vec<f64>,
    plateau_inner: f64,
    support_edge: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CutoffRecord {
    pub size_n: u32,
    pub xi_grid: Vec<f64>,
    pub values: Vec<f64>,
}

pub const DEFAULT_RESOLUTION_EXP: u32 = 12;

impl CutoffProfile {
    pub fn build(n: u32) -> Result<Self> {
        Self::build_with_resolution(n, DEFAULT_RESOLUTION_EXP)
    }

    /// Builds φ_(n) on a ξ-grid of step `2^{-resolution_exp}`.
    pub fn build_with_resolution(n: u32, resolution_exp: u32) -> Result<Self> {
        if n > 8 {
            return invalid(format!("cutoff size {n} exceeds the supported maximum 8"));
        }
        if resolution_exp < 6 {
            return invalid(format!("resolution 2^-{resolution_exp} is coarser than 1/64"));
        }
        if resolution_exp < n + 2 || resolution_exp > 20 {
            return invalid(format!("resolution exponent {resolution_exp} incompatible with size {n}"));
        }
        let step = 2f64.powi(-(resolution_exp as i32));
        let tables = MollifierTables::new(step);
        let inv = 1.0 / step;
        let plateau_inner = 2f64.powi(-(n as i32));
        let support_edge = plateau_inner + 0.75;
        let a_idx = ((plateau_inner + 0.25) * inv).round() as i64;
        let quarter = (0.25 * inv).round() as i64;
        let count = (support_edge * inv).round() as usize + 2;
        let mut values = Vec::with_capacity(count);
        let mut derivs = Vec::with_capacity(count);
        for i in 0..count {
            // t = ξ − a sits at table offset (i − a_idx) + quarter.
            let xi = i as f64 * step;
            let a = a_idx as f64 * step;
            let k = i as i64 - a_idx + quarter;
            let (g0_hi, g1_hi) = tables.at(k);
            let (g0_lo, g1_lo) = tables.at(k - quarter);
            let mass = g0_hi - g0_lo;
            let v = 1.0 - g0_hi + (1.0 - 4.0 * (xi - a)) * mass + 4.0 * (g1_hi - g1_lo);
            let v = if xi <= plateau_inner {
                1.0
            } else if xi >= support_edge {
                0.0
            } else {
                v.clamp(0.0, 1.0)
            };
            values.push(v);
            derivs.push(if xi <= plateau_inner || xi >= support_edge { 0.0 } else { -4.0 * mass });
        }
        Ok(Self { size_n: n, step, values, derivs, plateau_inner, support_edge })
    }

    pub fn size_n(&self) -> u32 {
        self.size_n
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// 2^{-n}: φ = 1 on `|ξ| ≤` this value.
    pub fn plateau_inner(&self) -> f64 {
        self.plateau_inner
    }

    /// 2^{n+1}: φ = 0 beyond this value.
    pub fn support_outer(&self) -> f64 {
        2f64.powi(self.size_n as i32 + 1)
    }

    /// 2^{-n} + 3/4: the actual edge of the support.
    pub fn support_edge(&self) -> f64 {
        self.support_edge
    }

    pub fn eval(&self, xi: f64) -> f64 {
        let x = xi.abs();
        if x <= self.plateau_inner {
            return 1.0;
        }
        if x >= self.support_edge {
            return 0.0;
        }
        let s = x / self.step;
        let i = (s.floor() as usize).min(self.values.len() - 2);
        let t = s - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.derivs[i] * self.step, self.derivs[i + 1] * self.step);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1;
        v.clamp(0.0, 1.0)
    }

    /// Symmetric sampled representation `{size_n, xi_grid, values}`.
    pub fn to_record(&self) -> CutoffRecord {
        let m = self.values.len();
        let mut xi_grid = Vec::with_capacity(2 * m - 1);
        let mut values = Vec::with_capacity(2 * m - 1);
        for i in (1..m).rev() {
            xi_grid.push(-(i as f64) * self.step);
            values.push(self.values[i]);
        }
        for i in 0..m {
            xi_grid.push(i as f64 * self.step);
            values.push(self.values[i]);
        }
        CutoffRecord { size_n: self.size_n, xi_grid, values }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_record())?)
    }

    /// L¹ norms of `x^β ∂^α φ̌` for `α, β ≤ 3`, indexed `[α][β]`, by direct
    /// quadrature of the inverse transform over `x ∈ [−200, 200]`.
    pub fn seminorm_proxies(&self) -> [[f64; 4]; 4] {
        let xmax: f64 = 200.0;
        let dx: f64 = 0.1;
        let nx = (xmax / dx).round() as usize;
        let m = self.values.len();
        let xs: Vec<f64> = (0..m).map(|i| i as f64 * self.step).collect();
        // trapezoid weights on [0, edge]
        let w: Vec<f64> = (0..m).map(|i| if i == 0 || i == m - 1 { 0.5 * self.step } else { self.step }).collect();
        let rows: Vec<[[f64; 4]; 4]> = (0..=nx)
            .into_par_iter()
            .map(|ix| {
                let x = ix as f64 * dx;
                let mut integrals = [0.0f64; 4];
                for i in 0..m {
                    let v = self.values[i];
                    if v == 0.0 {
                        continue;
                    }
                    let xi = xs[i];
                    let (s, c) = (x * xi).sin_cos();
                    let base = v * w[i];
                    integrals[0] += base * c;
                    integrals[1] += base * xi * s;
                    integrals[2] += base * xi * xi * c;
                    integrals[3] += base * xi * xi * xi * s;
                }
                let weight = if ix == 0 || ix == nx { 0.5 * dx } else { dx };
                let mut out = [[0.0; 4]; 4];
                for (alpha, row) in out.iter_mut().enumerate() {
                    let d = integrals[alpha].abs() / PI;
                    for (beta, cell) in row.iter_mut().enumerate() {
                        *cell = 2.0 * weight * x.powi(beta as i32) * d;
                    }
                }
                out
            })
            .collect();
        let mut total = [[0.0; 4]; 4];
        for r in rows {
            for a in 0..4 {
                for b in 0..4 {
                    total[a][b] += r[a][b];
                }
            }
        }
        total
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    S,
    Delta,
}

/// A dyadic partition of size `n` bound to a periodic grid.
#[derive(Clone, Debug)]
pub struct DyadicSystem {
    cutoff: Arc<CutoffProfile>,
    period: f64,
    n_points: usize,
    p_max: i32,
}

impl DyadicSystem {
    pub fn new(size_n: u32, period: f64, n_points: usize) -> Result<Self> {
        Ok(Self::from_cutoff(Arc::new(CutoffProfile::build(size_n)?), period, n_points)?)
    }

    pub fn from_cutoff(cutoff: Arc<CutoffProfile>, period: f64, n_points: usize) -> Result<Self> {
        GridFunction::zeros(period, n_points)?;
        let xi_max = PI * n_points as f64 / period;
        let n = cutoff.size_n() as i32;
        let mut p = 0;
        while 2f64.powi(p - n) < xi_max {
            p += 1;
        }
        Ok(Self { cutoff, period, n_points, p_max: p })
    }

    /// The same cutoff on a different grid.
    pub fn rebind(&self, period: f64, n_points: usize) -> Result<Self> {
        Self::from_cutoff(self.cutoff.clone(), period, n_points)
    }

    pub fn size_n(&self) -> u32 {
        self.cutoff.size_n()
    }

    pub fn cutoff(&self) -> &CutoffProfile {
        &self.cutoff
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Index of the top block; `S_{p_max}` is the identity on the grid.
    pub fn p_max(&self) -> i32 {
        self.p_max
    }

    /// `N0 = 2(n+1)`: `Δ_j Δ_k = 0` once `|j − k| ≥ N0`.
    pub fn n0(&self) -> i32 {
        2 * (self.size_n() as i32 + 1)
    }

    /// `φ_j(ξ) = φ(ξ / 2^j)`, any integer `j`.
    pub fn phi_j(&self, j: i32, xi: f64) -> f64 {
        self.cutoff.eval(xi * 2f64.powi(-j))
    }

    pub fn delta_symbol(&self, j: i32, xi: f64) -> f64 {
        if j < 0 || j > self.p_max {
            0.0
        } else if j == 0 {
            self.phi_j(0, xi)
        } else {
            self.phi_j(j, xi) - self.phi_j(j - 1, xi)
        }
    }

    fn check(&self, f: &GridFunction) {
        assert!(
            f.len() == self.n_points && (f.period() - self.period).abs() <= 1e-12 * self.period,
            "function grid does not match the dyadic system"
        );
    }

    fn weights(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let scale = 2.0 * PI / self.period;
        (0..self.n_points).map(|i| f(scale * signed_index(i, self.n_points) as f64)).collect()
    }

    pub fn s_weights(&self, j: i32) -> Vec<f64> {
        if j >= self.p_max {
            return vec![1.0; self.n_points];
        }
        self.weights(|xi| self.phi_j(j, xi))
    }

    pub fn delta_weights(&self, j: i32) -> Vec<f64> {
        self.weights(|xi| self.delta_symbol(j, xi))
    }

    /// `S_j f`; equals `f` for `j ≥ p_max`.
    pub fn s(&self, f: &GridFunction, j: i32) -> GridFunction {
        self.check(f);
        if j >= self.p_max {
            return f.clone();
        }
        f.apply_weights(&self.s_weights(j))
    }

    /// `Δ_j f` with `Δ_0 = S_0`; zero outside `[0, p_max]`.
    pub fn delta(&self, f: &GridFunction, j: i32) -> GridFunction {
        self.check(f);
        f.apply_weights(&self.delta_weights(j))
    }

    pub fn block(&self, f: &GridFunction, j: i32, kind: BlockKind) -> GridFunction {
        match kind {
            BlockKind::S => self.s(f, j),
            BlockKind::Delta => self.delta(f, j),
        }
    }

    /// All blocks `Δ_0 … Δ_{p_max}`.
    pub fn decompose(&self, f: &GridFunction) -> Vec<GridFunction> {
        (0..=self.p_max).map(|j| self.delta(f, j)).collect()
    }

    /// Open annulus containing the support of `Δ_p`, `p ≥ 1`.
    pub fn block_annulus(&self, p: i32) -> (f64, f64) {
        let n = self.size_n() as i32;
        (2f64.powi(p - 1 - n), 2f64.powi(p) * self.cutoff.support_edge())
    }

    /// Discrete ℓ¹ norm of the kernel of `2^{-jα} ∂^α Δ_j`: the exact
    /// sup-norm operator bound on the grid.
    pub fn block_kernel_l1(&self, j: i32, alpha: u32) -> f64 {
        let kernel = self.block_kernel(j, alpha);
        kernel.samples().iter().map(|z| z.norm()).sum()
    }

    /// Discrete ℓ¹ norm of the kernel of `S_j`: its sup-norm operator bound.
    pub fn s_kernel_l1(&self, j: i32) -> f64 {
        let w = self.s_weights(j);
        let spec: Vec<C64> = w.iter().map(|&v| C64::new(v / self.n_points as f64, 0.0)).collect();
        let kernel = GridFunction::from_spectrum(self.period, spec).expect("finite kernel");
        kernel.samples().iter().map(|z| z.norm()).sum()
    }

    fn block_kernel(&self, j: i32, alpha: u32) -> GridFunction {
        let scale = 2f64.powi(-(j * alpha as i32));
        let w = self.delta_weights(j);
        let spec: Vec<C64> = (0..self.n_points)
            .map(|i| {
                let xi = 2.0 * PI * signed_index(i, self.n_points) as f64 / self.period;
                C64::new(0.0, xi).powu(alpha) * w[i] * scale / self.n_points as f64
            })
            .collect();
        GridFunction::from_spectrum(self.period, spec).expect("finite kernel")
    }
}

/// Maximal Bernstein ratios `‖∂^α Δ_j u‖_∞ / (2^{jα}‖u‖_∞)` per scale.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BernsteinMeasurement {
    pub size_n: u32,
    pub alpha: u32,
    pub ratios: Vec<(i32, f64)>,
}

/// Measures Bernstein ratios on `trials` test functions per scale. The first
/// trial is the kernel-sign extremizer, which attains the grid operator norm;
/// the rest are complex white noise.
pub fn measure_bernstein(
    system: &DyadicSystem,
    alpha: u32,
    trials: usize,
    scales: &[i32],
    seed: u64,
) -> BernsteinMeasurement {
    let n = system.n_points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((system.size_n() as u64) << 32) ^ alpha as u64);
    let mut ratios = Vec::new();
    for &j in scales {
        let kernel = system.block_kernel(j, alpha);
        let mut best: f64 = 0.0;
        for t in 0..trials.max(1) {
            let u = if t == 0 {
                // Δu(0) = Σ_m k(−x_m) u(x_m); align u with conj(k(−x_m)).
                let k = kernel.samples();
                let s = (0..n)
                    .map(|m| {
                        let z = k[(n - m) % n];
                        if z.norm() == 0.0 {
                            C64::new(1.0, 0.0)
                        } else {
                            z.conj() / z.norm()
                        }
                    })
                    .collect();
                GridFunction::new(system.period(), s).unwrap()
            } else {
                let s = (0..n)
                    .map(|_| C64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI)) * rng.gen_range(0.0..1.0))
                    .collect();
                GridFunction::new(system.period(), s).unwrap()
            };
            let scale = 2f64.powi(-(j * alpha as i32));
            let d = system.delta(&u, j).derivative_n(alpha).scale_re(scale);
            best = best.max(d.sup_norm() / u.sup_norm());
        }
        ratios.push((j, best));
    }
    BernsteinMeasurement { size_n: system.size_n(), alpha, ratios }
}

/// Bernstein constants across several sizes on one grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BernsteinUniformity {
    pub alpha: u32,
    pub per_size: Vec<BernsteinMeasurement>,
    /// `max_j (max_n C / min_n C)`.
    pub spread_across_n: f64,
    /// Largest fitted log₂-slope of the constant against `j`.
    pub max_growth_slope: f64,
    pub pass: bool,
}

pub fn bernstein_uniformity(
    period: f64,
    n_points: usize,
    alpha: u32,
    sizes: &[u32],
    scales: &[i32],
    trials: usize,
    seed: u64,
) -> Result<BernsteinUniformity> {
    let mut per_size = Vec::new();
    for &n in sizes {
        let sys = DyadicSystem::new(n, period, n_points)?;
        per_size.push(measure_bernstein(&sys, alpha, trials, scales, seed));
    }
    let mut spread: f64 = 1.0;
    for (k, _) in scales.iter().enumerate() {
        let vals: Vec<f64> = per_size.iter().map(|m| m.ratios[k].1).collect();
        let hi = vals.iter().cloned().fold(0.0, f64::max);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        spread = spread.max(hi / lo);
    }
    let mut growth = f64::NEG_INFINITY;
    for m in &per_size {
        let js: Vec<f64> = m.ratios.iter().map(|r| r.0 as f64).collect();
        let ls: Vec<f64> = m.ratios.iter().map(|r| r.1.log2()).collect();
        let (slope, _) = fit_slope_raw(&js, &ls)?;
        growth = growth.max(slope);
    }
    Ok(BernsteinUniformity { alpha, pass: spread <= 2.0 && growth <= 0.15, per_size, spread_across_n: spread, max_growth_slope: growth })
}

/// Measured `C(n)` in `‖Δ_j u‖_∞ ≤ C(n) 2^{-j} ‖∂Δ_j u‖_∞` over random inputs.
pub fn reverse_bernstein(system: &DyadicSystem, scales: &[i32], trials: usize, seed: u64) -> f64 {
    let n = system.n_points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for &j in scales {
        for _ in 0..trials {
            let s = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let u = GridFunction::new(system.period(), s).unwrap();
            let d = system.delta(&u, j);
            let dd = d.derivative();
            let den = dd.sup_norm();
            if den > 0.0 {
                best = best.max(d.sup_norm() * 2f64.powi(j) / den);
            }
        }
    }
    best
}

/// Lacunary Weierstrass-type series `Σ_{k ≥ 0} 2^{-kμ} cos(2^k x)` up to the grid limit.
pub fn weierstrass(period: f64, n_points: usize, mu: f64, k_max: i32) -> Result<GridFunction> {
    let base = 2.0 * PI / period;
    GridFunction::from_real_fn(period, n_points, |x| {
        (0..=k_max).map(|k| 2f64.powf(-(k as f64) * mu) * (2f64.powi(k) * base * x).cos()).sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent evaluation of (f_n * g)(ξ) by composite Simpson on the
    /// mollifier window, without using the G0/G1 tables.
    fn phi_oracle(n: u32, xi: f64) -> f64 {
        let a = 2f64.powi(-(n as i32)) + 0.25;
        let f = |t: f64| {
            let t = t.abs();
            if t <= a {
                1.0
            } else if t <= a + 0.25 {
                1.0 - 4.0 * (t - a)
            } else {
                0.0
            }
        };
        let m = 20000;
        let h = 0.5 / m as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..=m {
            let y = -0.25 + i as f64 * h;
            let w = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            num += w * f(xi - y) * bump(y);
            den += w * bump(y);
        }
        num / den
    }

    #[test]
    fn plateau_and_support() {
        let c0 = CutoffProfile::build(0).unwrap();
        assert_eq!(c0.eval(0.5), 1.0);
        assert_eq!(c0.eval(3.0), 0.0);
        let c1 = CutoffProfile::build(1).unwrap();
        assert_eq!(c1.eval(0.5), 1.0);
        // the mollifier window around 0.7 crosses the plateau edge 0.75
        let v = c1.eval(0.7);
        assert!(v < 1.0);
        assert!((v - phi_oracle(1, 0.7)).abs() < 1e-9);
    }

    #[test]
    fn matches_quadrature_oracle() {
        for n in 0..=4 {
            let c = CutoffProfile::build(n).unwrap();
            for k in 0..60 {
                let xi = 0.013 + k as f64 * 0.0297;
                let got = c.eval(xi);
                let want = phi_oracle(n, xi);
                assert!((got - want).abs() < 1e-8, "n={n} xi={xi} got={got} want={want}");
            }
        }
    }

    #[test]
    fn shape_invariants() {
        for n in 0..=4 {
            let c = CutoffProfile::build(n).unwrap();
            let mut prev = 1.0;
            for k in 0..4000 {
                let xi = k as f64 * 0.0007;
                let v = c.eval(xi);
                assert!((0.0..=1.0).contains(&v));
                assert_eq!(v, c.eval(-xi));
                assert!(v <= prev + 1e-15);
                prev = v;
            }
            assert_eq!(c.eval(c.support_outer() + 1e-9), 0.0);
        }
    }

    #[test]
    fn coarse_resolution_rejected() {
        assert!(CutoffProfile::build_with_resolution(0, 5).is_err());
        assert!(CutoffProfile::build(9).is_err());
    }

    #[test]
    fn json_record_round_trip() {
        let c = CutoffProfile::build_with_resolution(2, 8).unwrap();
        let s = c.to_json().unwrap();
        let r: CutoffRecord = serde_json::from_str(&s).unwrap();
        assert_eq!(r, c.to_record());
        assert_eq!(r.xi_grid.len(), r.values.len());
    }

    #[test]
    fn partition_and_top_block() {
        let sys = DyadicSystem::new(1, 2.0 * PI, 256).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = (0..256).map(|_| C64::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
        let u = GridFunction::new(2.0 * PI, s).unwrap();
        let mut sum = GridFunction::zeros(2.0 * PI, 256).unwrap();
        for b in sys.decompose(&u) {
            sum = &sum + &b;
        }
        assert!(sum.max_abs_diff(&u) < 1e-12);
        assert!(sys.s(&u, sys.p_max()).max_abs_diff(&u) < 1e-12);
        assert_eq!(sys.s_weights(sys.p_max() - 1).iter().filter(|&&w| w < 1.0).count() > 0, true);
    }

    #[test]
    fn single_mode_block() {
        let sys = DyadicSystem::new(0, 2.0 * PI, 1024).unwrap();
        for j in 3..=8 {
            let f = GridFunction::from_fn(2.0 * PI, 1024, |x| C64::from_polar(1.0, 2f64.powi(j) * x)).unwrap();
            assert!(sys.delta(&f, j).max_abs_diff(&f) < 1e-12);
            assert!(sys.delta(&f, j + 1).sup_norm() < 1e-12);
            assert!(sys.delta(&f, j - 1).sup_norm() < 1e-12);
        }
    }

    #[test]
    fn extremizer_attains_kernel_norm() {
        let sys = DyadicSystem::new(2, 2.0 * PI, 512).unwrap();
        let m = measure_bernstein(&sys, 0, 1, &[5], 1);
        assert!((m.ratios[0].1 - sys.block_kernel_l1(5, 0)).abs() < 1e-10);
    }
}
