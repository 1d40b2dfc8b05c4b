//! Extension problems in one extra variable, represented semi-analytically as
//! eigenmode sums with Bessel profiles.
//!
//! The divergence form lives in `y` with weight `y^a`, `a = 1 − 2s`; the
//! nondivergence form lives in `z = (y/2s)^{2s}`. Per mode `k` the `y`-profile
//! is `c_k(y) = (2^{1−s}/Γ(s)) (√λ_k y)^s K_s(√λ_k y)`.

use rayon::prelude::*;

use crate::discrete_ops::{DiscreteOperators, SpectralBasis};
use crate::fractional::{FracField, Provenance};
use crate::linalg::sup_norm;
use crate::potentials::Point;
use crate::quadrature::GaussLegendre;
use crate::sections::Section;
use crate::special_fn::{bessel_k, gamma, FracParams};
use crate::{Error, Result};

// K_s(r) is below 1e-300 here
const PROFILE_CUTOFF: f64 = 690.0;

/// Which extension variable a field is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variable {
    /// Divergence form, `−div(y^a B ∇U) = 0`.
    Y,
    /// Nondivergence form, `−L_φV + z^{2−1/s} V_zz = 0`.
    Z,
}

/// `y = 2s z^{1/(2s)}`.
pub fn y_of_z(s: f64, z: f64) -> f64 {
    2.0 * s * z.powf(1.0 / (2.0 * s))
}

/// `z = (y/2s)^{2s}`.
pub fn z_of_y(s: f64, y: f64) -> f64 {
    (y / (2.0 * s)).powf(2.0 * s)
}

/// Normalized profile `(2^{1−s}/Γ(s)) r^s K_s(r)` with value 1 at `r = 0`.
pub fn bessel_profile(s: f64, r: f64) -> Result<f64> {
    if r == 0.0 {
        return Ok(1.0);
    }
    if r > PROFILE_CUTOFF {
        return Ok(0.0);
    }
    Ok(2f64.powf(1.0 - s) / gamma(s)? * r.powf(s) * bessel_k(s, r)?)
}

/// `d/dr` of [`bessel_profile`], `−(2^{1−s}/Γ(s)) r^s K_{1−s}(r)`.
pub fn bessel_profile_derivative(s: f64, r: f64) -> Result<f64> {
    if r > PROFILE_CUTOFF {
        return Ok(0.0);
    }
    if r == 0.0 {
        return if s > 0.5 { Ok(0.0) } else { Err(Error::Domain(format!("profile derivative is singular at 0 for s = {s}"))) };
    }
    Ok(-(2f64.powf(1.0 - s)) / gamma(s)? * r.powf(s) * bessel_k(1.0 - s, r)?)
}

/// `c(y)` for eigenvalue `λ`.
pub fn mode_profile(s: f64, lambda: f64, y: f64) -> Result<f64> {
    bessel_profile(s, lambda.sqrt() * y)
}

/// `c'(y)` for eigenvalue `λ`.
pub fn mode_profile_dy(s: f64, lambda: f64, y: f64) -> Result<f64> {
    let q = lambda.sqrt();
    Ok(q * bessel_profile_derivative(s, q * y)?)
}

/// `g(z) = c(2s z^{1/(2s)})`.
pub fn mode_profile_z(s: f64, lambda: f64, z: f64) -> Result<f64> {
    mode_profile(s, lambda, y_of_z(s, z))
}

/// `g'(z) = c'(y) z^{1/(2s)−1}`.
pub fn mode_profile_dz(s: f64, lambda: f64, z: f64) -> Result<f64> {
    let y = y_of_z(s, z);
    Ok(mode_profile_dy(s, lambda, y)? * z.powf(1.0 / (2.0 * s) - 1.0))
}

/// Geometric grid `lo, lo·ratio, …` ending exactly at `hi`.
pub fn graded_grid(lo: f64, hi: f64, ratio: f64) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && ratio > 1.0) {
        return Err(Error::Domain(format!("graded grid needs 0 < lo < hi and ratio > 1, got {lo}, {hi}, {ratio}")));
    }
    let mut g = vec![lo];
    while g.last().unwrap() * ratio < hi {
        let next = g.last().unwrap() * ratio;
        g.push(next);
    }
    g.push(hi);
    Ok(g)
}

/// Default extension grid: ratio 1.15 from `1e−10` to `40/√λ_1` in `y`.
pub fn default_y_grid(basis: &SpectralBasis) -> Result<Vec<f64>> {
    graded_grid(1e-10, 40.0 / basis.values[0].sqrt(), 1.15)
}

/// Extension of a nodal field as a sum over eigenmodes.
#[derive(Clone, Debug)]
pub struct ExtensionField<'a> {
    pub basis: &'a SpectralBasis,
    pub params: FracParams,
    /// Coefficients `u_k` of the trace in the basis.
    pub coeffs: Vec<f64>,
    pub variable: Variable,
    /// Evaluation grid in the field's own variable.
    pub grid: Vec<f64>,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid[0] <= 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("extension grid must be positive and increasing".into()));
    }
    Ok(())
}

/// `U(x, y) = Σ c_k(y) u_k e_k(x)`, the divergence-form extension of `u`.
pub fn solve_extension_div<'a>(basis: &'a SpectralBasis, s: f64, u: &[f64], y_grid: &[f64]) -> Result<ExtensionField<'a>> {
    let params = FracParams::new(s)?;
    if u.len() != basis.nodes() {
        return Err(Error::Dimension { expected: basis.nodes(), got: u.len() });
    }
    check_grid(y_grid)?;
    Ok(ExtensionField { basis, params, coeffs: basis.coefficients(u), variable: Variable::Y, grid: y_grid.to_vec() })
}

/// `V(x, z) := U(x, 2s z^{1/(2s)})`; the grid is mapped with the field.
pub fn change_variables<'a>(field: &ExtensionField<'a>) -> ExtensionField<'a> {
    let s = field.params.s;
    let (variable, grid) = match field.variable {
        Variable::Y => (Variable::Z, field.grid.iter().map(|&y| z_of_y(s, y)).collect()),
        Variable::Z => (Variable::Y, field.grid.iter().map(|&z| y_of_z(s, z)).collect()),
    };
    ExtensionField { variable, grid, ..field.clone() }
}

impl<'a> ExtensionField<'a> {
    pub fn s(&self) -> f64 {
        self.params.s
    }

    /// Per-mode profile values at `t` in the field's variable.
    pub fn profiles(&self, t: f64) -> Result<Vec<f64>> {
        if t < 0.0 {
            return Err(Error::Domain(format!("extension variable must be nonnegative, got {t}")));
        }
        let s = self.s();
        let y = match self.variable {
            Variable::Y => t,
            Variable::Z => y_of_z(s, t),
        };
        self.basis.values.iter().map(|&l| mode_profile(s, l, y)).collect()
    }

    /// Per-mode derivatives in the field's variable.
    pub fn profile_derivatives(&self, t: f64) -> Result<Vec<f64>> {
        let s = self.s();
        self.basis
            .values
            .iter()
            .map(|&l| match self.variable {
                Variable::Y => mode_profile_dy(s, l, t),
                Variable::Z => mode_profile_dz(s, l, t),
            })
            .collect()
    }

    /// Nodal values of the field at extension level `t`.
    pub fn at(&self, t: f64) -> Result<Vec<f64>> {
        let p = self.profiles(t)?;
        let c: Vec<f64> = self.coeffs.iter().zip(&p).map(|(a, b)| a * b).collect();
        Ok(self.basis.synthesize(&c))
    }

    /// Nodal derivative in the extension variable at `t > 0`.
    pub fn derivative_at(&self, t: f64) -> Result<Vec<f64>> {
        let p = self.profile_derivatives(t)?;
        let c: Vec<f64> = self.coeffs.iter().zip(&p).map(|(a, b)| a * b).collect();
        Ok(self.basis.synthesize(&c))
    }

    /// The trace `u = Σ u_k e_k`.
    pub fn trace(&self) -> Vec<f64> {
        self.basis.synthesize(&self.coeffs)
    }

    /// Values on every grid level, one nodal vector per level.
    pub fn on_grid(&self) -> Result<Vec<Vec<f64>>> {
        self.grid.par_iter().map(|&t| self.at(t)).collect()
    }
}

/// How [`neumann_trace`] extracts the conormal derivative at 0.
#[derive(Clone, Debug, PartialEq)]
pub enum TraceMethod {
    /// Per-mode limits from the small-argument behavior of `K_s`.
    Analytic,
    /// `(V(x,0) − V(x,z_j))/z_j` over the given decreasing levels, then
    /// Richardson extrapolation.
    DifferenceQuotient { z_levels: Vec<f64> },
}

impl TraceMethod {
    /// `z_j = 2^{−j}` for `j = 10..=20`.
    pub fn dyadic() -> Self {
        Self::DifferenceQuotient { z_levels: (10..=20).map(|j| 0.5f64.powi(j)).collect() }
    }
}

/// Trace with its extrapolation diagnostics.
#[derive(Clone, Debug)]
pub struct NeumannTrace {
    pub field: FracField,
    /// Observed order of the difference-quotient error, if estimated.
    pub order: Option<f64>,
    /// `M`-norms of successive quotient differences.
    pub increments: Vec<f64>,
}

/// `−lim_{z→0⁺} V_z = d_s L^s v` for the `z`-form, `−lim y^a U_y = c_s L^s u`
/// for the `y`-form. The difference-quotient method always works in `z`, so a
/// `y`-form field then yields `d_s L^s u`.
pub fn neumann_trace(field: &ExtensionField<'_>, method: &TraceMethod) -> Result<NeumannTrace> {
    let s = field.s();
    match method {
        TraceMethod::Analytic => {
            let k = match field.variable {
                Variable::Y => field.params.c_s,
                Variable::Z => field.params.d_s,
            };
            let c: Vec<f64> = field.coeffs.iter().zip(&field.basis.values).map(|(u, l)| k * l.powf(s) * u).collect();
            Ok(NeumannTrace {
                field: FracField { s, values: field.basis.synthesize(&c), provenance: Provenance::ExtensionTrace },
                order: None,
                increments: Vec::new(),
            })
        }
        TraceMethod::DifferenceQuotient { z_levels } => {
            if z_levels.len() < 2 || z_levels.iter().any(|z| *z <= 0.0) || z_levels.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::Domain("trace levels must be positive and strictly decreasing".into()));
            }
            let zf = match field.variable {
                Variable::Z => field.clone(),
                Variable::Y => change_variables(field),
            };
            let mass = &field.basis.mass;
            // 1 − g_k(z) per mode, formed before synthesis
            let quotients: Vec<Vec<f64>> = z_levels
                .par_iter()
                .map(|&z| {
                    let p = zf.profiles(z)?;
                    let c: Vec<f64> = zf.coeffs.iter().zip(&p).map(|(u, g)| u * (1.0 - g) / z).collect();
                    Ok(zf.basis.synthesize(&c))
                })
                .collect::<Result<_>>()?;
            let increments: Vec<f64> = quotients
                .windows(2)
                .map(|w| {
                    let d: Vec<f64> = w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect();
                    crate::linalg::weighted_norm(mass, &d)
                })
                .collect();
            let j = quotients.len() - 1;
            let last = &quotients[j];
            let scale = crate::linalg::weighted_norm(mass, last).max(f64::MIN_POSITIVE);
            // 1 − g(z) loses about ε/z of relative accuracy
            let noise = 1e3 * f64::EPSILON / z_levels[j] * scale;
            if increments.len() >= 2 {
                let (a, b) = (increments[increments.len() - 2], increments[increments.len() - 1]);
                if b > a && b > noise {
                    return Err(Error::Extrapolation(b / scale));
                }
            }
            let mut order = None;
            let mut values = last.clone();
            if increments.len() >= 2 {
                let (a, b) = (increments[increments.len() - 2], increments[increments.len() - 1]);
                let ratio = z_levels[j - 1] / z_levels[j];
                if b > noise && a > 0.0 {
                    let p = (a / b).ln() / ratio.ln();
                    // outside this window the quotients are roundoff-dominated
                    if (0.2..=4.0).contains(&p) {
                        order = Some(p);
                        let f = 1.0 / (ratio.powf(p) - 1.0);
                        for (v, prev) in values.iter_mut().zip(&quotients[j - 1]) {
                            *v += (*v - prev) * f;
                        }
                    }
                }
            }
            Ok(NeumannTrace { field: FracField { s, values, provenance: Provenance::ExtensionTrace }, order, increments })
        }
    }
}

/// Closed-form extension of `v_φ = R − δ_φ(x0, ·)` on a section:
/// `V(x, z) = v_φ(x) g(z)` with `α = n / v_φ(x)`.
#[derive(Clone, Debug)]
pub struct ClosedFormExample<'a> {
    pub section: &'a Section,
    pub params: FracParams,
}

pub fn closed_form_example(sec: &Section, s: f64) -> Result<ClosedFormExample<'_>> {
    Ok(ClosedFormExample { section: sec, params: FracParams::new(s)? })
}

impl ClosedFormExample<'_> {
    fn n(&self) -> f64 {
        self.section.dim() as f64
    }

    pub fn v(&self, x: &[f64]) -> f64 {
        self.section.height_deficit(x)
    }

    pub fn alpha(&self, x: &[f64]) -> Result<f64> {
        let v = self.v(x);
        if v <= 0.0 {
            return Err(Error::Domain(format!("closed form queried outside the open section at {x:?}")));
        }
        Ok(self.n() / v)
    }

    /// `g(z) = (2^{1−s}/Γ(s)) β^s K_s(β)`, `β = 2s√α z^{1/(2s)}`.
    pub fn g(&self, x: &[f64], z: f64) -> Result<f64> {
        mode_profile_z(self.params.s, self.alpha(x)?, z)
    }

    /// `dg/dz = −(2s^s/Γ(s)) α^{(s+1)/2} z^{1/(2s)−1/2} K_{1−s}(β)`.
    pub fn dg_dz(&self, x: &[f64], z: f64) -> Result<f64> {
        let s = self.params.s;
        let a = self.alpha(x)?;
        let beta = 2.0 * s * a.sqrt() * z.powf(1.0 / (2.0 * s));
        if beta > PROFILE_CUTOFF {
            return Ok(0.0);
        }
        Ok(-2.0 * s.powf(s) / gamma(s)? * a.powf((s + 1.0) / 2.0) * z.powf(1.0 / (2.0 * s) - 0.5) * bessel_k(1.0 - s, beta)?)
    }

    pub fn value(&self, x: &[f64], z: f64) -> Result<f64> {
        Ok(self.v(x) * self.g(x, z)?)
    }

    /// `d_s n^s v_φ(x)^{1−s}`.
    pub fn trace_exact(&self, x: &[f64]) -> f64 {
        let s = self.params.s;
        self.params.d_s * self.n().powf(s) * self.v(x).max(0.0).powf(1.0 - s)
    }

    /// `n^s v_φ^{1−s}` on the interior nodes, the claimed value of `L^s v_φ`.
    pub fn claimed_power(&self, nodes: &[Point]) -> FracField {
        let s = self.params.s;
        let values = nodes.iter().map(|x| self.n().powf(s) * self.v(x).max(0.0).powf(1.0 - s)).collect();
        FracField { s, values, provenance: Provenance::ClosedForm }
    }
}

/// Discrepancy between the spectral `L^s v_φ` and the closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedFormDefect {
    pub s: f64,
    /// `max |L^s v_φ − n^s v_φ^{1−s}| / max n^s v_φ^{1−s}` over compared nodes.
    pub relative_sup_error: f64,
    /// Node where the largest difference occurs.
    pub worst_node: Point,
    pub compared_nodes: usize,
}

/// Compares on nodes with `δ_φ(x0, x) ≤ inner·R`.
pub fn closed_form_defect(ops: &DiscreteOperators, basis: &SpectralBasis, s: f64, inner: f64) -> Result<ClosedFormDefect> {
    let sec = &ops.section;
    let ex = closed_form_example(sec, s)?;
    let v: Vec<f64> = ops.nodes.iter().map(|x| ex.v(x)).collect();
    let num = crate::fractional::frac_apply_spectral(basis, s, &v)?;
    let claimed = ex.claimed_power(&ops.nodes);
    let mut worst = (0.0, ops.nodes[0]);
    let mut peak = 0.0f64;
    let mut count = 0;
    for ((x, a), b) in ops.nodes.iter().zip(&num.values).zip(&claimed.values) {
        if sec.delta_from_center(x) > inner * sec.height {
            continue;
        }
        count += 1;
        peak = peak.max(b.abs());
        let d = (a - b).abs();
        if d > worst.0 {
            worst = (d, *x);
        }
    }
    if count == 0 {
        return Err(Error::InsufficientNodes { found: 0, required: 1 });
    }
    Ok(ClosedFormDefect { s, relative_sup_error: worst.0 / peak, worst_node: worst.1, compared_nodes: count })
}

/// Per-mode and total energies of an extension.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport {
    pub s: f64,
    pub variable: Variable,
    /// Quadrature of the per-mode energy integral, one entry per mode.
    pub mode_energies: Vec<f64>,
    /// `Σ u_k² E_k`.
    pub lhs: f64,
    /// `const · Σ λ_k^s u_k²` with `c_s` (y-form) or `(2s)^{2s−1} c_s` (z-form).
    pub rhs: f64,
    pub relative_gap: f64,
}

fn energy_quadrature<F>(grid: &[f64], f: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let rule = GaussLegendre::new(8);
    let parts: Vec<f64> = grid
        .par_windows(2)
        .map(|w| rule.mapped(w[0], w[1]).map(|(t, wt)| Ok(wt * f(t)?)).sum::<Result<f64>>())
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum())
}

/// `∫₀^∞ y^a (λ c² + c'²) dy` on a graded grid; the piece below the first grid
/// point uses the leading terms `c ≈ 1`, `y^a c' ≈ −c_s λ^s`.
pub fn mode_energy_y(p: &FracParams, lambda: f64, grid: &[f64]) -> Result<f64> {
    let (s, a) = (p.s, p.a);
    let body = energy_quadrature(grid, |y| {
        let c = mode_profile(s, lambda, y)?;
        let d = mode_profile_dy(s, lambda, y)?;
        Ok(y.powf(a) * (lambda * c * c + d * d))
    })?;
    let y0 = grid[0];
    let k = p.c_s * lambda.powf(s);
    let head = lambda * y0.powf(a + 1.0) / (a + 1.0) + k * k * y0.powf(1.0 - a) / (1.0 - a);
    Ok(body + head)
}

/// `∫₀^∞ (λ g² z^{1/s−2} + g'²) dz`; near 0, `g ≈ 1` and `g' ≈ −d_s λ^s`.
pub fn mode_energy_z(p: &FracParams, lambda: f64, grid: &[f64]) -> Result<f64> {
    let s = p.s;
    let e = 1.0 / s - 2.0;
    let body = energy_quadrature(grid, |z| {
        let g = mode_profile_z(s, lambda, z)?;
        let d = mode_profile_dz(s, lambda, z)?;
        Ok(lambda * g * g * z.powf(e) + d * d)
    })?;
    let z0 = grid[0];
    let k = p.d_s * lambda.powf(s);
    let head = lambda * z0.powf(e + 1.0) / (e + 1.0) + k * k * z0;
    Ok(body + head)
}

fn energy_report(
    basis: &SpectralBasis,
    s: f64,
    u: &[f64],
    modes: Option<usize>,
    grid: &[f64],
    variable: Variable,
) -> Result<EnergyReport> {
    let p = FracParams::new(s)?;
    check_grid(grid)?;
    let coeffs = basis.coefficients(u);
    let m = modes.unwrap_or(basis.len()).min(basis.len());
    let mut mode_energies = Vec::with_capacity(m);
    let (mut lhs, mut sum) = (0.0, 0.0);
    for k in 0..m {
        let (l, c) = (basis.values[k], coeffs[k]);
        let e = match variable {
            Variable::Y => mode_energy_y(&p, l, grid)?,
            Variable::Z => mode_energy_z(&p, l, grid)?,
        };
        mode_energies.push(e);
        lhs += c * c * e;
        sum += c * c * l.powf(s);
    }
    let factor = match variable {
        Variable::Y => p.c_s,
        Variable::Z => p.z_to_y_factor() * p.c_s,
    };
    let rhs = factor * sum;
    let relative_gap = if rhs == 0.0 { lhs.abs() } else { ((lhs - rhs) / rhs).abs() };
    Ok(EnergyReport { s, variable, mode_energies, lhs, rhs, relative_gap })
}

/// Energy identity of the divergence form, summed over the first `modes`
/// modes (all when `None`).
pub fn energy_identity_check(basis: &SpectralBasis, s: f64, u: &[f64], modes: Option<usize>, y_grid: &[f64]) -> Result<EnergyReport> {
    energy_report(basis, s, u, modes, y_grid, Variable::Y)
}

/// Finite-energy identity of the nondivergence form.
pub fn finite_energy_check(basis: &SpectralBasis, s: f64, u: &[f64], modes: Option<usize>, z_grid: &[f64]) -> Result<EnergyReport> {
    energy_report(basis, s, u, modes, z_grid, Variable::Z)
}

/// `‖−L V + z^{2−1/s} V_zz‖_M / ‖L V‖_M` at level `z` with the `z`-derivative
/// replaced by a centered difference of step `h < z`.
pub fn pde_residual(ops: &DiscreteOperators, field: &ExtensionField<'_>, z: f64, h: f64) -> Result<f64> {
    if field.variable != Variable::Z {
        return Err(Error::Domain("the residual is defined for the z-form".into()));
    }
    if !(h > 0.0 && h < z.abs()) {
        return Err(Error::Domain(format!("need 0 < h < |z|, got h = {h}, z = {z}")));
    }
    // the even reflection V(x, |z|) makes negative levels meaningful
    let at = |t: f64| field.at(t.abs());
    let (vm, v0, vp) = (at(z - h)?, at(z)?, at(z + h)?);
    let lv = ops.apply_l(&v0);
    let w = z.abs().powf(2.0 - 1.0 / field.s());
    let r: Vec<f64> = (0..v0.len()).map(|i| -lv[i] + w * (vp[i] - 2.0 * v0[i] + vm[i]) / (h * h)).collect();
    Ok(ops.m_norm(&r) / ops.m_norm(&lv).max(f64::MIN_POSITIVE))
}

/// Least-squares slope of `log residual` against `log h`.
pub fn pde_residual_slope(ops: &DiscreteOperators, field: &ExtensionField<'_>, z: f64, steps: &[f64]) -> Result<(f64, Vec<f64>)> {
    if steps.len() < 2 {
        return Err(Error::Domain("need at least two step sizes".into()));
    }
    let res: Vec<f64> = steps.iter().map(|&h| pde_residual(ops, field, z, h)).collect::<Result<_>>()?;
    let xs: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = res.iter().map(|r| r.ln()).collect();
    Ok((least_squares_slope(&xs, &ys), res))
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `sup_x |V(x, z) − v(x)|` for each level.
pub fn continuity_at_zero(field: &ExtensionField<'_>, levels: &[f64]) -> Result<Vec<f64>> {
    let v = field.trace();
    levels
        .iter()
        .map(|&t| {
            let w = field.at(t)?;
            Ok(w.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        })
        .collect()
}

/// `‖V(·, t)‖_∞`.
pub fn sup_at(field: &ExtensionField<'_>, t: f64) -> Result<f64> {
    Ok(sup_norm(&field.at(t)?))
}
