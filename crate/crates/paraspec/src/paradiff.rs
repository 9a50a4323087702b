//! Paradifferential operators, paraproducts and symbolic calculus for
//! separable symbols `a(x, ξ) = Σ_i c_i(x) m_i(ξ)`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::dyadic::DyadicSystem;
use crate::error::{invalid, Error, Result};
use crate::report::{DecayReport, Environment, ScalePoint};
use crate::spectral::{assert_same_grid, signed_index, FrequencyProfile, GridFunction, NormKind, C64};

#[derive(Clone, Debug)]
pub struct SymbolTerm {
    pub coeff: GridFunction,
    pub profile: FrequencyProfile,
    pub order: f64,
}

impl SymbolTerm {
    /// A term whose order is the homogeneity degree of its profile.
    pub fn new(coeff: GridFunction, profile: FrequencyProfile) -> Result<Self> {
        match profile.homogeneity_degree() {
            Some(m) => Ok(Self { coeff, profile, order: m }),
            None => invalid("profile without homogeneity degree needs an explicit order"),
        }
    }

    pub fn with_order(coeff: GridFunction, profile: FrequencyProfile, order: f64) -> Result<Self> {
        if let Some(m) = profile.homogeneity_degree() {
            if (m - order).abs() > 1e-12 {
                return invalid(format!("declared order {order} differs from homogeneity degree {m}"));
            }
        }
        Ok(Self { coeff, profile, order })
    }
}

/// Finite sum of coefficient × profile terms with order and regularity metadata.
#[derive(Clone, Debug)]
pub struct SeparableSymbol {
    terms: Vec<SymbolTerm>,
    rho: f64,
}

impl SeparableSymbol {
    pub fn new(terms: Vec<SymbolTerm>, rho: f64) -> Result<Self> {
        if terms.is_empty() {
            return invalid("symbol needs at least one term");
        }
        if !(rho >= 0.0) {
            return invalid(format!("regularity must be nonnegative, got {rho}"));
        }
        for t in &terms[1..] {
            if !t.coeff.same_grid(&terms[0].coeff) {
                return invalid("symbol coefficients live on different grids");
            }
        }
        Ok(Self { terms, rho })
    }

    /// `c(x) m(ξ)` with order taken from the profile.
    pub fn single(coeff: GridFunction, profile: FrequencyProfile, rho: f64) -> Result<Self> {
        Self::new(vec![SymbolTerm::new(coeff, profile)?], rho)
    }

    /// Constant-coefficient Fourier multiplier.
    pub fn multiplier(profile: FrequencyProfile, period: f64, n: usize) -> Result<Self> {
        let one = GridFunction::constant(period, n, C64::new(1.0, 0.0))?;
        Self::single(one, profile, f64::INFINITY)
    }

    /// Symbol of order 0 with no ξ-dependence: `T_a` becomes a paraproduct.
    pub fn function(coeff: GridFunction, rho: f64) -> Result<Self> {
        Self::single(coeff, FrequencyProfile::one(), rho)
    }

    pub fn terms(&self) -> &[SymbolTerm] {
        &self.terms
    }

    pub fn order(&self) -> f64 {
        self.terms.iter().map(|t| t.order).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn period(&self) -> f64 {
        self.terms[0].coeff.period()
    }

    pub fn n_points(&self) -> usize {
        self.terms[0].coeff.len()
    }

    pub fn plus(&self, other: &SeparableSymbol) -> Result<SeparableSymbol> {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::new(terms, self.rho.min(other.rho))
    }

    /// Value at grid node `k` and frequency `ξ`.
    pub fn eval(&self, k: usize, xi: f64) -> C64 {
        self.terms.iter().map(|t| t.coeff.samples()[k] * t.profile.eval(xi)).sum()
    }

    /// `ā(x, ξ)`.
    pub fn conj(&self) -> SeparableSymbol {
        let terms = self
            .terms
            .iter()
            .map(|t| SymbolTerm { coeff: t.coeff.conj(), profile: conj_profile(&t.profile), order: t.order })
            .collect();
        SeparableSymbol { terms, rho: self.rho }
    }

    /// Seminorm estimate `M^m_ρ(a; k)`: Zygmund `C^ρ` norms of the coefficients
    /// times `sup (1+|ξ|)^{α−m} |∂_ξ^α m_i(ξ)|` over dyadic ξ samples with `|ξ| ≥ 1/2`.
    pub fn seminorm(&self, k: u32, system: &DyadicSystem) -> Result<f64> {
        let m = self.order();
        let rho = if self.rho.is_finite() { self.rho.min(8.0) } else { 8.0 };
        let samples: Vec<f64> = (-1..=14).flat_map(|e| {
            let x = 2f64.powi(e);
            [x, 1.5 * x, -x, -1.5 * x]
        }).collect();
        let mut total = 0.0;
        for t in &self.terms {
            let zyg = t.coeff.norm(NormKind::Zygmund(rho, system))?;
            let mut sup: f64 = 0.0;
            let mut prof = t.profile.clone();
            for alpha in 0..=k {
                if alpha > 0 {
                    prof = prof.derivative()?;
                }
                for &xi in &samples {
                    let w = (1.0 + xi.abs()).powf(alpha as f64 - m);
                    sup = sup.max(w * prof.eval(xi).norm());
                }
            }
            total += zyg * sup;
        }
        Ok(total)
    }
}

fn conj_profile(p: &FrequencyProfile) -> FrequencyProfile {
    if let Some((c, s, e)) = p.as_monomial() {
        let mut q = FrequencyProfile::monomial(c.conj(), s, e);
        if let Some(z) = p.zero_value() {
            q = q.with_zero_value(z.conj());
        }
        return q;
    }
    let a = p.clone();
    let mut q = if p.has_derivative() {
        let d = p.derivative().expect("derivative available");
        FrequencyProfile::custom_with_derivative(move |xi| a.eval(xi).conj(), move |xi| d.eval(xi).conj())
    } else {
        FrequencyProfile::custom(move |xi| a.eval(xi).conj())
    };
    if let Some(m) = p.homogeneity_degree() {
        q = q.with_homogeneity(m);
    }
    q
}

/// Smooth monotone step from 0 at `s ≤ 0` to 1 at `s ≥ 1`.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / s).exp();
        let b = (-1.0 / (1.0 - s)).exp();
        a / (a + b)
    }
}

/// The truncation offset `N` and the low-frequency cutoff ψ of `T_a`.
#[derive(Clone, Debug)]
pub struct CutoffPair {
    n_trunc: i32,
    size_n: u32,
    eps1: f64,
    eps2: f64,
}

impl CutoffPair {
    /// Default `N = n + 6`.
    pub fn default_for(system: &DyadicSystem) -> Result<Self> {
        Self::new(system, system.size_n() as i32 + 6)
    }

    /// Validates `N > n` and spot-checks the support of
    /// `χ(θ, η) = Σ_p φ_{p−N}(θ) Δ_p(η)` on a sample grid.
    pub fn new(system: &DyadicSystem, n_trunc: i32) -> Result<Self> {
        let n = system.size_n() as i32;
        if n_trunc <= n {
            return Err(Error::Config(format!("truncation N = {n_trunc} must exceed the size n = {n}")));
        }
        let edge = system.cutoff().support_edge();
        let eps2 = edge * 2f64.powi(1 + n - n_trunc);
        let eps1 = 2f64.powi(-n_trunc - n) / edge;
        if eps2 >= 0.5 {
            return Err(Error::Config(format!("N = {n_trunc} too small: χ support ratio {eps2} ≥ 1/2")));
        }
        let pair = Self { n_trunc, size_n: system.size_n(), eps1, eps2 };
        let inner = 2f64.powi(-n);
        for ie in 0..40 {
            let eta = inner * 1.31f64.powi(ie);
            for it in 0..40 {
                let theta = eta * 1.5 * it as f64 / 40.0;
                let c = pair.chi(system, theta, eta);
                if theta >= eps2 * eta && c.abs() > 1e-14 {
                    return Err(Error::Config(format!("χ({theta}, {eta}) = {c} outside the admissible cone")));
                }
                if theta <= eps1 * eta && (c - 1.0).abs() > 1e-12 && eta < 2f64.powi(system.p_max() - n - 1) {
                    return Err(Error::Config(format!("χ({theta}, {eta}) = {c} should equal 1")));
                }
            }
        }
        Ok(pair)
    }

    pub fn n_trunc(&self) -> i32 {
        self.n_trunc
    }

    pub fn size_n(&self) -> u32 {
        self.size_n
    }

    /// `(ε₁, ε₂)`: χ = 1 for `|θ| ≤ ε₁|η|`, χ = 0 for `|θ| ≥ ε₂|η|`.
    pub fn cone(&self) -> (f64, f64) {
        (self.eps1, self.eps2)
    }

    /// ψ(η): 0 for `|η| ≤ 2^{−n−1}`, 1 for `|η| ≥ 2^{−n}`.
    pub fn psi(&self, eta: f64) -> f64 {
        let lo = 2f64.powi(-(self.size_n as i32) - 1);
        smooth_step((eta.abs() - lo) / lo)
    }

    pub fn chi(&self, system: &DyadicSystem, theta: f64, eta: f64) -> f64 {
        (0..=system.p_max()).map(|p| system.phi_j(p - self.n_trunc, theta) * system.delta_symbol(p, eta)).sum()
    }
}

fn check_profiles(a: &SeparableSymbol) -> Result<()> {
    for t in a.terms() {
        let singular = match t.profile.as_monomial() {
            Some((_, _, e)) => e < 0.0,
            None => t.profile.homogeneity_degree().is_some_and(|m| m < 0.0),
        };
        if singular && t.profile.zero_value().is_none() {
            return invalid("homogeneous profile of negative degree needs an explicit value at ξ = 0");
        }
    }
    Ok(())
}

fn spectral_product(f: &GridFunction, w: &[C64]) -> Vec<C64> {
    f.spectrum().iter().zip(w).map(|(a, b)| a * b).collect()
}

fn to_samples(period: f64, spec: Vec<C64>) -> Vec<C64> {
    GridFunction::from_spectrum(period, spec).expect("finite spectrum").samples().to_vec()
}

/// Profile values on the grid frequencies, with the ξ = 0 slot taken from the
/// profile only when it is finite.
fn profile_values(profile: &FrequencyProfile, period: f64, n: usize) -> Vec<C64> {
    (0..n)
        .map(|i| {
            let xi = 2.0 * PI * signed_index(i, n) as f64 / period;
            let v = profile.eval(xi);
            if v.re.is_finite() && v.im.is_finite() {
                v
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect()
}

fn apply_blocks(a: &SeparableSymbol, u: &GridFunction, system: &DyadicSystem, pair: &CutoffPair, tail: bool) -> Result<GridFunction> {
    check_profiles(a)?;
    assert_same_grid(&a.terms()[0].coeff, u);
    let (period, n) = (u.period(), u.len());
    let big_n = pair.n_trunc();
    let p_max = system.p_max();
    let mut acc = vec![C64::new(0.0, 0.0); n];
    let freqs = u.frequencies();
    for t in a.terms() {
        let m = profile_values(&t.profile, period, n);
        let pieces: Vec<Vec<C64>> = (1..=p_max)
            .into_par_iter()
            .map(|p| {
                let dw = system.delta_weights(p);
                let w: Vec<C64> = m.iter().zip(&dw).map(|(mv, d)| mv * *d).collect();
                let block = to_samples(period, spectral_product(u, &w));
                let c = system.s(&t.coeff, p - big_n);
                c.samples().iter().zip(block).map(|(x, y)| x * y).collect()
            })
            .collect();
        for piece in pieces {
            for (a, b) in acc.iter_mut().zip(piece) {
                *a += b;
            }
        }
        if tail {
            let s0 = system.s_weights(0);
            let w: Vec<C64> = (0..n).map(|i| m[i] * (pair.psi(freqs[i]) * s0[i])).collect();
            let block = to_samples(period, spectral_product(u, &w));
            let c = system.s(&t.coeff, -big_n);
            for ((a, x), y) in acc.iter_mut().zip(c.samples()).zip(block) {
                *a += x * y;
            }
        }
    }
    GridFunction::new(period, acc)
}

/// `T_a u = Σ_{p≥1} S_{p−N}a(x, D) Δ_p u + S_{−N}(a)(ψφ_0)(D) u`.
pub fn apply_t(a: &SeparableSymbol, u: &GridFunction, system: &DyadicSystem, pair: &CutoffPair) -> Result<GridFunction> {
    apply_blocks(a, u, system, pair, true)
}

/// `Ṫ_a u = Σ_{p≥1} S_{p−N}a(x, D) Δ_p u`, without the low-frequency tail.
pub fn apply_tdot(a: &SeparableSymbol, u: &GridFunction, system: &DyadicSystem, pair: &CutoffPair) -> Result<GridFunction> {
    apply_blocks(a, u, system, pair, false)
}

/// Ṫ for a plain coefficient function.
pub fn tdot_function(a: &GridFunction, u: &GridFunction, system: &DyadicSystem, pair: &CutoffPair) -> GridFunction {
    sum_low_high(a, u, system, pair.n_trunc(), 1)
}

fn sum_low_high(a: &GridFunction, u: &GridFunction, system: &DyadicSystem, big_n: i32, p_start: i32) -> GridFunction {
    assert_same_grid(a, u);
    let n = u.len();
    let pieces: Vec<Vec<C64>> = (p_start..=system.p_max())
        .into_par_iter()
        .map(|p| {
            let low = system.s(a, p - big_n);
            let high = system.delta(u, p);
            low.samples().iter().zip(high.samples()).map(|(x, y)| x * y).collect()
        })
        .collect();
    let mut acc = vec![C64::new(0.0, 0.0); n];
    for piece in pieces {
        for (a, b) in acc.iter_mut().zip(piece) {
            *a += b;
        }
    }
    GridFunction::new(u.period(), acc).expect("finite paraproduct")
}

/// `TP_a u = Σ_{p≥N} S_{p−N}a Δ_p u`.
///
/// The sum starts at `p = N` so that `au = TP_a u + TP_u a + R(a, u)` holds
/// exactly with `R` collecting the pairs `|j − k| ≤ N − 1`.
pub fn paraproduct(a: &GridFunction, u: &GridFunction, system: &DyadicSystem, pair: &CutoffPair) -> GridFunction {
    sum_low_high(a, u, system, pair.n_trunc(), pair.n_trunc())
}

/// `R(a, u) = Σ_{|j−k| ≤ N−1} Δ_j a Δ_k u`.
pub fn bony_remainder(a: &GridFunction, u: &GridFunction, system: &DyadicSystem, pair: &CutoffPair) -> GridFunction {
    assert_same_grid(a, u);
    let big_n = pair.n_trunc();
    let da = system.decompose(a);
    let du = system.decompose(u);
    let p_max = system.p_max();
    let mut acc = vec![C64::new(0.0, 0.0); u.len()];
    for j in 0..=p_max {
        let lo = (j - big_n + 1).max(0);
        let hi = (j + big_n - 1).min(p_max);
        // Σ_{k=lo}^{hi} Δ_k u, accumulated in sample space
        let mut band = vec![C64::new(0.0, 0.0); u.len()];
        for k in lo..=hi {
            for (b, v) in band.iter_mut().zip(du[k as usize].samples()) {
                *b += v;
            }
        }
        for ((acc, x), y) in acc.iter_mut().zip(da[j as usize].samples()).zip(band) {
            *acc += x * y;
        }
    }
    GridFunction::new(u.period(), acc).expect("finite remainder")
}

/// `Ṙ(v, w) = vw − Ṫ_v w − Ṫ_w v`.
pub fn truncated_remainder(v: &GridFunction, w: &GridFunction, system: &DyadicSystem, pair: &CutoffPair) -> GridFunction {
    let prod = v * w;
    &(&prod - &tdot_function(v, w, system, pair)) - &tdot_function(w, v, system, pair)
}

/// `Σ_{k=1}^{N−1} (S_{k−N}v Δ_k w + S_{k−N}w Δ_k v)`, the gap between `R` and `Ṙ`.
pub fn low_block_correction(v: &GridFunction, w: &GridFunction, system: &DyadicSystem, pair: &CutoffPair) -> GridFunction {
    let big_n = pair.n_trunc();
    let mut acc = GridFunction::zeros(v.period(), v.len()).expect("grid");
    for k in 1..big_n.min(system.p_max() + 1) {
        let t1 = &system.s(v, k - big_n) * &system.delta(w, k);
        let t2 = &system.s(w, k - big_n) * &system.delta(v, k);
        acc = &(&acc + &t1) + &t2;
    }
    acc
}

/// `a♯b = Σ_{α<ρ} ((−i)^α/α!) ∂_ξ^α a ∂_x^α b` with `ρ = min(ρ_a, ρ_b) ≤ 2`.
pub fn compose_symbols(a: &SeparableSymbol, b: &SeparableSymbol) -> Result<SeparableSymbol> {
    let rho = a.rho().min(b.rho());
    if !(rho > 0.0) {
        return invalid("composition needs ρ > 0");
    }
    let mut terms = Vec::new();
    for ta in a.terms() {
        for tb in b.terms() {
            terms.push(SymbolTerm {
                coeff: &ta.coeff * &tb.coeff,
                profile: ta.profile.product(&tb.profile),
                order: ta.order + tb.order,
            });
            if rho > 1.0 {
                let dprof = ta.profile.derivative()?;
                let dcoef = tb.coeff.derivative();
                terms.push(SymbolTerm {
                    coeff: (&ta.coeff * &dcoef).scale(C64::new(0.0, -1.0)),
                    profile: dprof.product(&tb.profile),
                    order: ta.order + tb.order - 1.0,
                });
            }
        }
    }
    SeparableSymbol::new(terms, rho)
}

/// `a* = Σ_{α<ρ} (1/(i^α α!)) ∂_ξ^α ∂_x^α ā`.
pub fn adjoint_symbol(a: &SeparableSymbol) -> Result<SeparableSymbol> {
    let abar = a.conj();
    let mut terms = abar.terms().to_vec();
    if a.rho() > 1.0 {
        for t in abar.terms() {
            terms.push(SymbolTerm {
                coeff: t.coeff.derivative().scale(C64::new(0.0, -1.0)),
                profile: t.profile.derivative()?,
                order: t.order - 1.0,
            });
        }
    }
    SeparableSymbol::new(terms, a.rho())
}

/// Brute-force evaluation of `T_a u` as the double sum over grid frequencies
/// `Σ_{θ,η} χ(θ, η) ĉ_i(θ) m_i(η) ψ(η) û(η) e^{i(θ+η)x}`, where
/// `χ(θ, η) = Σ_{p≥0} φ_{p−N}(θ) Δ_p(η)`. Output frequencies are wrapped
/// modulo the grid exactly as pointwise products alias.
pub fn quadrature_oracle(a: &SeparableSymbol, u: &GridFunction, system: &DyadicSystem, pair: &CutoffPair) -> Result<GridFunction> {
    check_profiles(a)?;
    let n = u.len();
    let period = u.period();
    let k0 = 2.0 * PI / period;
    let big_n = pair.n_trunc();
    let p_max = system.p_max();
    let mut out = vec![C64::new(0.0, 0.0); n];
    let phi_low: Vec<Vec<f64>> = (0..=p_max)
        .map(|p| (0..n).map(|i| system.phi_j(p - big_n, k0 * signed_index(i, n) as f64)).collect())
        .collect();
    let delta: Vec<Vec<f64>> = (0..=p_max)
        .map(|p| (0..n).map(|i| system.delta_symbol(p, k0 * signed_index(i, n) as f64)).collect())
        .collect();
    for t in a.terms() {
        let chat = t.coeff.spectrum();
        for ie in 0..n {
            let eta = k0 * signed_index(ie, n) as f64;
            let ue = u.spectrum()[ie];
            if ue == C64::new(0.0, 0.0) {
                continue;
            }
            let psi = pair.psi(eta);
            if psi == 0.0 {
                continue;
            }
            let me = t.profile.eval(eta);
            for it in 0..n {
                let mut chi = 0.0;
                for p in 0..=p_max as usize {
                    let d = delta[p][ie];
                    if d != 0.0 {
                        chi += phi_low[p][it] * d;
                    }
                }
                if chi == 0.0 {
                    continue;
                }
                let slot = (it + ie) % n;
                out[slot] += chat[it] * me * (chi * psi) * ue;
            }
        }
    }
    GridFunction::from_spectrum(period, out)
}

/// Unit-L² single mode `e^{i 2^j x}` on a period-2π-compatible grid.
pub fn unit_mode(period: f64, n: usize, j: i32) -> Result<GridFunction> {
    let k = (2f64.powi(j) * period / (2.0 * PI)).round();
    let k = k as i64;
    if k.unsigned_abs() as usize >= n / 2 {
        return invalid(format!("mode 2^{j} is not resolved on {n} points"));
    }
    let mut spec = vec![C64::new(0.0, 0.0); n];
    spec[k.rem_euclid(n as i64) as usize] = C64::new(1.0 / period.sqrt(), 0.0);
    GridFunction::from_spectrum(period, spec)
}

/// Fits the log₂-norm of `(T_a T_b − T_{a♯b}) u_j` against `j` and compares
/// with the order `m + m′ − ρ`.
pub fn verify_composition(
    a: &SeparableSymbol,
    b: &SeparableSymbol,
    system: &DyadicSystem,
    pair: &CutoffPair,
    scales: &[i32],
    tolerance: f64,
) -> Result<DecayReport> {
    let ab = compose_symbols(a, b)?;
    let rho = a.rho().min(b.rho());
    let (period, n) = (a.period(), a.n_points());
    let points: Vec<ScalePoint> = scales
        .par_iter()
        .map(|&j| -> Result<ScalePoint> {
            let u = unit_mode(period, n, j)?;
            let lhs = apply_t(a, &apply_t(b, &u, system, pair)?, system, pair)?;
            let rhs = apply_t(&ab, &u, system, pair)?;
            Ok(ScalePoint { j, norm: (&lhs - &rhs).l2_norm() })
        })
        .collect::<Result<_>>()?;
    let bound = a.order() + b.order() - rho;
    let mut env = Environment::new(n, period, 0);
    env.n0 = Some(system.size_n());
    env.n_trunc = Some(pair.n_trunc());
    DecayReport::upper("composition", points, bound, tolerance, env)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const L: f64 = 2.0 * PI;

    fn random_band(rng: &mut ChaCha8Rng, n: usize, kmax: i64) -> GridFunction {
        let spec = (0..n)
            .map(|i| {
                if signed_index(i, n).abs() <= kmax {
                    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
        GridFunction::from_spectrum(L, spec).unwrap()
    }

    fn setup(n: u32, pts: usize) -> (DyadicSystem, CutoffPair) {
        let sys = DyadicSystem::new(n, L, pts).unwrap();
        let pair = CutoffPair::default_for(&sys).unwrap();
        (sys, pair)
    }

    #[test]
    fn identity_symbol() {
        let (sys, pair) = setup(0, 256);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_band(&mut rng, 256, 100);
        let one = SeparableSymbol::multiplier(FrequencyProfile::one(), L, 256).unwrap();
        let tu = apply_t(&one, &u, &sys, &pair).unwrap();
        // ψ removes the zero mode
        let expect = u.filter(|xi| xi != 0.0);
        assert!(tu.max_abs_diff(&expect) < 1e-12);
        let td = apply_tdot(&one, &u, &sys, &pair).unwrap();
        assert!(td.max_abs_diff(&(&u - &sys.delta(&u, 0))) < 1e-12);
    }

    #[test]
    fn low_coefficient_acts_as_product() {
        let (sys, pair) = setup(0, 1024);
        let j = 9;
        let c = GridFunction::from_real_fn(L, 1024, |x| 1.0 + 0.3 * x.cos()).unwrap();
        let a = SeparableSymbol::single(c.clone(), FrequencyProfile::i_xi(), 1.0).unwrap();
        let u = GridFunction::from_fn(L, 1024, |x| C64::from_polar(1.0, 2f64.powi(j) * x)).unwrap();
        let got = apply_t(&a, &u, &sys, &pair).unwrap();
        let want = &c * &u.derivative();
        assert!(got.max_abs_diff(&want) < 1e-10);
    }

    #[test]
    fn tail_is_low_frequency() {
        let (sys, pair) = setup(1, 256);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_band(&mut rng, 256, 120);
        let c = random_band(&mut rng, 256, 30);
        let a = SeparableSymbol::single(c, FrequencyProfile::abs_pow(0.5), 1.0).unwrap();
        let d = &apply_t(&a, &u, &sys, &pair).unwrap() - &apply_tdot(&a, &u, &sys, &pair).unwrap();
        assert!(d.spectral_extent(1e-13) <= 2f64.powi(sys.n0() + 1));
    }

    #[test]
    fn matches_oracle() {
        let (sys, pair) = setup(0, 128);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_band(&mut rng, 128, 63);
        let c1 = random_band(&mut rng, 128, 20);
        let c2 = random_band(&mut rng, 128, 5);
        let a = SeparableSymbol::new(
            vec![
                SymbolTerm::new(c1, FrequencyProfile::abs_pow(1.5)).unwrap(),
                SymbolTerm::new(c2, FrequencyProfile::i_xi()).unwrap(),
            ],
            1.0,
        )
        .unwrap();
        let fast = apply_t(&a, &u, &sys, &pair).unwrap();
        let slow = quadrature_oracle(&a, &u, &sys, &pair).unwrap();
        assert!(fast.rel_l2_diff(&slow) < 1e-10);
    }

    #[test]
    fn bony_identity_and_paralinearization() {
        let (sys, pair) = setup(1, 256);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let a = random_band(&mut rng, 256, 128);
            let u = random_band(&mut rng, 256, 128);
            let sum = &(&paraproduct(&a, &u, &sys, &pair) + &paraproduct(&u, &a, &sys, &pair)) + &bony_remainder(&a, &u, &sys, &pair);
            assert!(sum.max_abs_diff(&(&a * &u)) <= 1e-12 * (&a * &u).sup_norm().max(1.0));
        }
        let u = random_band(&mut rng, 256, 128);
        let lhs = &(&u * &u) - &paraproduct(&u, &u, &sys, &pair).scale_re(2.0);
        assert!(lhs.max_abs_diff(&bony_remainder(&u, &u, &sys, &pair)) < 1e-11);
    }

    #[test]
    fn truncated_remainder_relation() {
        let (sys, pair) = setup(0, 256);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = random_band(&mut rng, 256, 128);
        let w = random_band(&mut rng, 256, 128);
        let rdot = truncated_remainder(&v, &w, &sys, &pair);
        let r = bony_remainder(&v, &w, &sys, &pair);
        let corr = low_block_correction(&v, &w, &sys, &pair);
        assert!((&r - &corr).max_abs_diff(&rdot) < 1e-11);
    }

    #[test]
    fn constant_multipliers_compose_exactly() {
        let (sys, pair) = setup(0, 256);
        let a = SeparableSymbol::multiplier(FrequencyProfile::abs_pow(1.5), L, 256).unwrap();
        let b = SeparableSymbol::multiplier(FrequencyProfile::i_xi(), L, 256).unwrap();
        let ab = compose_symbols(&a, &b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u = random_band(&mut rng, 256, 100);
        let lhs = apply_t(&a, &apply_t(&b, &u, &sys, &pair).unwrap(), &sys, &pair).unwrap();
        let rhs = apply_t(&ab, &u, &sys, &pair).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-9 * rhs.sup_norm());
    }

    #[test]
    fn real_multiplier_is_self_adjoint() {
        let (sys, pair) = setup(0, 256);
        let a = SeparableSymbol::multiplier(FrequencyProfile::abs_pow(1.5), L, 256).unwrap();
        let astar = adjoint_symbol(&a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = random_band(&mut rng, 256, 100);
        let v = random_band(&mut rng, 256, 100);
        let tu = apply_t(&a, &u, &sys, &pair).unwrap();
        let tv = apply_t(&astar, &v, &sys, &pair).unwrap();
        let scale = tu.l2_norm() * v.l2_norm();
        assert!((tu.inner(&v) - u.inner(&tv)).norm() < 1e-12 * scale);
    }

    #[test]
    fn negative_degree_without_zero_value_rejected() {
        let (sys, pair) = setup(0, 64);
        let a = SeparableSymbol::multiplier(FrequencyProfile::abs_pow(-0.5), L, 64).unwrap();
        let u = GridFunction::from_real_fn(L, 64, |x| x.cos()).unwrap();
        assert!(apply_t(&a, &u, &sys, &pair).is_err());
    }

    #[test]
    fn pair_needs_large_truncation() {
        let sys = DyadicSystem::new(2, L, 256).unwrap();
        assert!(CutoffPair::new(&sys, 2).is_err());
        assert!(CutoffPair::new(&sys, 3).is_err());
        let p = CutoffPair::default_for(&sys).unwrap();
        assert_eq!(p.n_trunc(), 8);
    }
}
