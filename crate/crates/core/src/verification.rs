//! Empirical checks of inequality-type statements: Harnack, Hölder continuity
//! in the quasi-distance, the weighted Poincaré and Fabes inequalities on
//! tensor sections, and the log-gradient energy bound.
//!
//! The constants in these statements are existential, so every check reports
//! the instance constant it observes rather than comparing to a target.

use std::sync::atomic::{AtomicBool, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discrete_ops::{DiscreteOperators, SpectralBasis};
use crate::extension::{least_squares_slope, mode_profile_dz, mode_profile_z, ExtensionField, Variable};
use crate::fractional::frac_solve_spectral;
use crate::potentials::Point;
use crate::sections::{ray_root, Section, TPoint, TensorQuad, TensorSection};
use crate::{Error, Result};

/// Inner sections must hold at least this many mesh nodes.
pub const MIN_INNER_NODES: usize = 50;

/// One inner section of a Harnack study.
#[derive(Clone, Debug, PartialEq)]
pub struct HarnackEntry {
    pub kappa: f64,
    pub inner_nodes: usize,
    pub sup: f64,
    pub inf: f64,
    /// `sup/inf`; 1 by convention when `v` vanishes identically.
    pub quotient: f64,
    /// `‖f‖_∞` over the nodes of `S_φ(x0, K9·R)`.
    pub f_sup: f64,
    /// Smallest `C_H` with `sup ≤ C_H(inf + R^s ‖f‖)`.
    pub constant: f64,
    /// `σ`-mean of `v` over the outer section, `σ = 1/2`.
    pub sigma_mean: f64,
    /// Smallest `K₆` with `σ`-mean `≤ K₆ (inf + R^s ‖f‖)`.
    pub weak_constant: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HarnackReport {
    pub s: f64,
    pub nodes: usize,
    pub x0: Point,
    pub radius: f64,
    pub k9: f64,
    pub entries: Vec<HarnackEntry>,
}

fn section_inside(sec0: &Section, x0: &[f64], r: f64) -> Result<bool> {
    let phi = &sec0.potential;
    let dirs: Vec<Vec<f64>> = if phi.dim() == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        (0..64)
            .map(|j| {
                let th = std::f64::consts::TAU * j as f64 / 64.0;
                vec![th.cos(), th.sin()]
            })
            .collect()
    };
    for u in dirs {
        let t = ray_root(phi, x0, &u, r)?;
        let p: Vec<f64> = x0.iter().zip(&u).map(|(a, b)| a + t * b).collect();
        if !sec0.contains(&p) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Solves `L^s v = f` spectrally on the section of `ops` and measures the
/// Harnack quotient on `S_φ(x0, κR)` for each `κ`.
pub fn harnack_quotient(
    ops: &DiscreteOperators,
    basis: &SpectralBasis,
    s: f64,
    f: &[f64],
    x0: &[f64],
    radius: f64,
    kappas: &[f64],
    k9: f64,
) -> Result<HarnackReport> {
    if f.iter().any(|v| *v < 0.0) {
        return Err(Error::Domain("harnack_quotient needs f >= 0".into()));
    }
    let sec0 = &ops.section;
    let phi = &sec0.potential;
    if !section_inside(sec0, x0, k9 * radius)? {
        return Err(Error::Domain(format!("S(x0, {}) is not inside the computational section", k9 * radius)));
    }
    let v = frac_solve_spectral(basis, s, f)?.values;
    let delta: Vec<f64> = ops.nodes.iter().map(|x| phi.delta(x0, &x[..phi.dim()])).collect();
    let outer: Vec<usize> = (0..v.len()).filter(|&i| delta[i] < k9 * radius).collect();
    let f_sup = outer.iter().map(|&i| f[i].abs()).fold(0.0, f64::max);
    let mass: f64 = outer.iter().map(|&i| ops.m[i]).sum();
    let root_mean = outer.iter().map(|&i| ops.m[i] * v[i].max(0.0).sqrt()).sum::<f64>() / mass;
    let sigma_mean = root_mean * root_mean;
    let rs = radius.powf(s);
    let mut entries = Vec::with_capacity(kappas.len());
    for &kappa in kappas {
        let inner: Vec<usize> = (0..v.len()).filter(|&i| delta[i] < kappa * radius).collect();
        if inner.len() < MIN_INNER_NODES {
            return Err(Error::InsufficientNodes { found: inner.len(), required: MIN_INNER_NODES });
        }
        let sup = inner.iter().map(|&i| v[i]).fold(f64::NEG_INFINITY, f64::max);
        let inf = inner.iter().map(|&i| v[i]).fold(f64::INFINITY, f64::min);
        let quotient = if sup == 0.0 && inf == 0.0 { 1.0 } else { sup / inf };
        let denom = inf + rs * f_sup;
        let constant = if sup == 0.0 { 0.0 } else { sup / denom };
        let weak_constant = if sigma_mean == 0.0 { 0.0 } else { sigma_mean / denom };
        entries.push(HarnackEntry {
            kappa,
            inner_nodes: inner.len(),
            sup,
            inf,
            quotient,
            f_sup,
            constant,
            sigma_mean,
            weak_constant,
        });
    }
    let mut xp = [0.0; 2];
    xp[..x0.len()].copy_from_slice(x0);
    Ok(HarnackReport { s, nodes: v.len(), x0: xp, radius, k9, entries })
}

/// Regression `log|v(x0) − v(x)| ≈ log C + ϱ log δ_φ(x0, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HolderFit {
    /// `None` when `v` is constant on the section.
    pub exponent: Option<f64>,
    /// Smallest `C` with `|v(x0) − v(x)| ≤ C δ^ϱ` over the pairs.
    pub coefficient: f64,
    pub r_squared: f64,
    pub pairs: usize,
}

/// Fits over the nodes of `S_φ(x0, R)`; `x0` must be a node.
pub fn holder_seminorm(ops: &DiscreteOperators, v: &[f64], x0_node: usize, radius: f64) -> Result<HolderFit> {
    let phi = &ops.section.potential;
    let n = phi.dim();
    let x0 = &ops.nodes[x0_node][..n];
    let v0 = v[x0_node];
    let mut pairs = Vec::new();
    let mut any = false;
    for (i, x) in ops.nodes.iter().enumerate() {
        let d = phi.delta(x0, &x[..n]);
        if i == x0_node || d >= radius || d <= 0.0 {
            continue;
        }
        let diff = (v[i] - v0).abs();
        any |= diff > 0.0;
        // differences at roundoff level carry no information
        if diff > 1e-13 * v0.abs().max(1e-300) {
            pairs.push((d, diff));
        }
    }
    if !any {
        return Ok(HolderFit { exponent: None, coefficient: 0.0, r_squared: 1.0, pairs: 0 });
    }
    if pairs.len() < 30 {
        return Err(Error::InsufficientNodes { found: pairs.len(), required: 30 });
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let icpt = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let coefficient = pairs.iter().map(|(d, e)| e / d.powf(slope)).fold(0.0, f64::max);
    Ok(HolderFit { exponent: Some(slope), coefficient, r_squared, pairs: pairs.len() })
}

/// A function on the tensor space with its gradient split into `x` and `z`.
pub trait TensorField: Sync {
    fn value(&self, p: &TPoint) -> f64;
    fn grad_x(&self, p: &TPoint) -> Point;
    fn d_z(&self, p: &TPoint) -> f64;
}

/// `c0 + c·x + cz z + ½xᵀAx + z b·x + ½czz z²`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticField {
    pub c0: f64,
    pub cx: Point,
    pub cz: f64,
    /// `(A11, A12, A22)`.
    pub cxx: [f64; 3],
    pub cxz: Point,
    pub czz: f64,
}

impl QuadraticField {
    pub fn constant(c: f64) -> Self {
        Self { c0: c, cx: [0.0; 2], cz: 0.0, cxx: [0.0; 3], cxz: [0.0; 2], czz: 0.0 }
    }

    /// `G(x, z) = z`.
    pub fn linear_z() -> Self {
        Self { cz: 1.0, ..Self::constant(0.0) }
    }

    /// Coefficients uniform in `[−1, 1]`.
    pub fn random(rng: &mut impl Rng) -> Self {
        let mut u = || rng.gen_range(-1.0..1.0);
        Self { c0: u(), cx: [u(), u()], cz: u(), cxx: [u(), u(), u()], cxz: [u(), u()], czz: u() }
    }

    pub fn random_family(count: usize, seed: u64) -> Vec<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| Self::random(&mut rng)).collect()
    }
}

impl TensorField for QuadraticField {
    fn value(&self, p: &TPoint) -> f64 {
        let [x, y] = p.x;
        let z = p.z;
        self.c0
            + self.cx[0] * x
            + self.cx[1] * y
            + self.cz * z
            + 0.5 * (self.cxx[0] * x * x + 2.0 * self.cxx[1] * x * y + self.cxx[2] * y * y)
            + z * (self.cxz[0] * x + self.cxz[1] * y)
            + 0.5 * self.czz * z * z
    }

    fn grad_x(&self, p: &TPoint) -> Point {
        let [x, y] = p.x;
        [
            self.cx[0] + self.cxx[0] * x + self.cxx[1] * y + self.cxz[0] * p.z,
            self.cx[1] + self.cxx[1] * x + self.cxx[2] * y + self.cxz[1] * p.z,
        ]
    }

    fn d_z(&self, p: &TPoint) -> f64 {
        self.cz + self.cxz[0] * p.x[0] + self.cxz[1] * p.x[1] + self.czz * p.z
    }
}

/// `max(0, z − z_c)`: vanishes on the part of a section below `z_c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RampZ {
    pub z_c: f64,
}

impl TensorField for RampZ {
    fn value(&self, p: &TPoint) -> f64 {
        (p.z - self.z_c).max(0.0)
    }

    fn grad_x(&self, _: &TPoint) -> Point {
        [0.0; 2]
    }

    fn d_z(&self, p: &TPoint) -> f64 {
        if p.z > self.z_c {
            1.0
        } else {
            0.0
        }
    }
}

/// `Ṽ(x, z) + τ` where `Ṽ(x, z) = V(x, |z|)` is the even reflection of a
/// one-dimensional `z`-form extension, linearly interpolated in `x` between
/// mesh nodes (zero on the section boundary).
#[derive(Clone, Debug)]
pub struct ModeSumField {
    s: f64,
    /// Mesh coordinates including both boundary points, increasing.
    xs: Vec<f64>,
    /// Retained modes: eigenvalue, coefficient, nodal values padded with the
    /// boundary zeros.
    modes: Vec<(f64, f64, Vec<f64>)>,
    pub tau: f64,
}

impl ModeSumField {
    pub fn new(ops: &DiscreteOperators, field: &ExtensionField<'_>, tau: f64) -> Result<Self> {
        if ops.dim() != 1 {
            return Err(Error::Domain("mode-sum fields are evaluated in one dimension".into()));
        }
        if field.variable != Variable::Z {
            return Err(Error::Domain("mode-sum fields take the z-form".into()));
        }
        let (xl, xr) = match ops.section.boundary {
            crate::sections::Boundary::Interval { xl, xr } => (xl, xr),
            _ => return Err(Error::Domain("expected an interval section".into())),
        };
        let mut xs = vec![xl];
        xs.extend(ops.nodes.iter().map(|p| p[0]));
        xs.push(xr);
        let peak = field.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let modes = field
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.abs() > 1e-14 * peak)
            .map(|(k, &c)| {
                let mut e = vec![0.0];
                e.extend_from_slice(&field.basis.vectors[k]);
                e.push(0.0);
                (field.basis.values[k], c, e)
            })
            .collect();
        Ok(Self { s: field.s(), xs, modes, tau })
    }

    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        if x < self.xs[0] || x > *self.xs.last().unwrap() {
            return None;
        }
        let j = self.xs.partition_point(|&t| t <= x).clamp(1, self.xs.len() - 1) - 1;
        let h = self.xs[j + 1] - self.xs[j];
        Some((j, (x - self.xs[j]) / h))
    }

    fn eval(&self, p: &TPoint) -> (f64, f64, f64) {
        let Some((j, t)) = self.locate(p.x[0]) else {
            return (self.tau, 0.0, 0.0);
        };
        let h = self.xs[j + 1] - self.xs[j];
        let z = p.z.abs();
        let (mut v, mut vx, mut vz) = (0.0, 0.0, 0.0);
        for (l, c, e) in &self.modes {
            let ex = e[j] * (1.0 - t) + e[j + 1] * t;
            let dx = (e[j + 1] - e[j]) / h;
            let g = mode_profile_z(self.s, *l, z).unwrap_or(0.0);
            let dg = if z > 0.0 { mode_profile_dz(self.s, *l, z).unwrap_or(0.0) } else { 0.0 };
            v += c * g * ex;
            vx += c * g * dx;
            vz += c * dg * ex * p.z.signum();
        }
        (v + self.tau, vx, vz)
    }
}

impl TensorField for ModeSumField {
    fn value(&self, p: &TPoint) -> f64 {
        self.eval(p).0
    }

    fn grad_x(&self, p: &TPoint) -> Point {
        [self.eval(p).1, 0.0]
    }

    fn d_z(&self, p: &TPoint) -> f64 {
        self.eval(p).2
    }
}

fn grad_sq(sec: &TensorSection, g: &dyn TensorField, p: &TPoint) -> f64 {
    sec.potential.ma_gradient_sq(p, &g.grad_x(p), g.d_z(p)).unwrap_or(f64::NAN)
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{what} is not finite")))
    }
}

/// Left side and kernel of the weighted Poincaré inequality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoincareReport {
    /// `⨍_{S_Φ} |G − G_S| dμ_Φ`.
    pub lhs: f64,
    /// `R^{1/2} (⨍_{K₂S_Φ} |∇^Φ G|² dμ_Φ)^{1/2}`.
    pub kernel: f64,
    /// `lhs / kernel`, a lower bound for `K_P`.
    pub ratio: f64,
}

fn dilate(sec: &TensorSection, k: f64) -> Result<TensorSection> {
    TensorSection::new(sec.potential.clone(), sec.center, k * sec.height)
}

fn poincare_kernel(sec: &TensorSection, k2: f64, g: &dyn TensorField, q: &TensorQuad) -> Result<f64> {
    let big = dilate(sec, k2)?;
    let energy = finite(big.average_mu(q, |p| grad_sq(sec, g, p))?, "gradient energy")?;
    Ok(sec.height.sqrt() * energy.sqrt())
}

pub fn poincare_check(sec: &TensorSection, k2: f64, g: &dyn TensorField, q: &TensorQuad) -> Result<PoincareReport> {
    if !(k2 > 1.0) {
        return Err(Error::Domain(format!("dilation K2 must exceed 1, got {k2}")));
    }
    let mean = sec.average_mu(q, |p| g.value(p))?;
    let lhs = sec.average_mu(q, |p| (g.value(p) - mean).abs())?;
    let kernel = poincare_kernel(sec, k2, g, q)?;
    let ratio = if kernel > 0.0 { lhs / kernel } else { 0.0 };
    Ok(PoincareReport { lhs, kernel, ratio })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FabesReport {
    /// `⨍_{S_Φ} |G| dμ_Φ`.
    pub lhs: f64,
    /// Measured `μ_Φ`-fraction of the zero set.
    pub zero_fraction: f64,
    pub epsilon: f64,
    /// `(1 + 1/ε) · 1.1 K_P · kernel`.
    pub bound: f64,
    pub passed: bool,
    /// `bound / lhs`; infinite when `lhs = 0`.
    pub margin: f64,
}

/// Safety factor applied to the empirical Poincaré ratio.
pub const FABES_SAFETY: f64 = 1.1;

pub fn fabes_check(
    sec: &TensorSection,
    k2: f64,
    g: &dyn TensorField,
    epsilon: f64,
    k_p: f64,
    q: &TensorQuad,
) -> Result<FabesReport> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Domain(format!("zero fraction must lie in (0, 1], got {epsilon}")));
    }
    let zero_fraction = sec.average_mu(q, |p| if g.value(p) == 0.0 { 1.0 } else { 0.0 })?;
    // quadrature of an indicator is only accurate to the grid
    if zero_fraction < epsilon - 1e-6 {
        return Err(Error::Domain(format!("zero set fraction {zero_fraction} is below ε = {epsilon}")));
    }
    let lhs = sec.average_mu(q, |p| g.value(p).abs())?;
    let kernel = poincare_kernel(sec, k2, g, q)?;
    let bound = (1.0 + 1.0 / epsilon) * FABES_SAFETY * k_p * kernel;
    let margin = if lhs > 0.0 { bound / lhs } else { f64::INFINITY };
    Ok(FabesReport { lhs, zero_fraction, epsilon, bound, passed: lhs <= bound, margin })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogEnergyReport {
    /// `⨍_{S_Φ} |∇^Φ log H|² dμ_Φ`.
    pub lhs: f64,
    /// `32(n+2) K_d² / R`.
    pub bound: f64,
    pub passed: bool,
}

pub fn log_energy_check(sec: &TensorSection, h: &dyn TensorField, k_d: f64, q: &TensorQuad) -> Result<LogEnergyReport> {
    let bad = AtomicBool::new(false);
    let lhs = sec.average_mu(q, |p| {
        let v = h.value(p);
        if !(v > 0.0) {
            bad.store(true, Ordering::Relaxed);
            return 0.0;
        }
        grad_sq(sec, h, p) / (v * v)
    })?;
    if bad.load(Ordering::Relaxed) {
        return Err(Error::Domain("H is not positive on the section".into()));
    }
    let lhs = finite(lhs, "log-gradient energy")?;
    let n = sec.potential.base.dim() as f64;
    let bound = 32.0 * (n + 2.0) * k_d * k_d / sec.height;
    Ok(LogEnergyReport { lhs, bound, passed: lhs <= bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete_ops::{assemble, eig};
    use crate::potentials::Potential;
    use crate::sections::{build_section, TensorPotential};

    #[test]
    fn harnack_on_ground_state() {
        let phi = Potential::quad(0.5, 1).unwrap();
        let sec = build_section(&phi, &[0.0], 1.0, 600).unwrap();
        let ops = assemble(&sec).unwrap();
        let b = eig(&ops, 600).unwrap();
        let s = 0.5;
        let f: Vec<f64> = b.vectors[0].iter().map(|e| b.values[0].powf(s) * e).collect();
        let rep = harnack_quotient(&ops, &b, s, &f, &[0.0], 0.2, &[1.0], 2.0).unwrap();
        let a = 0.4f64.sqrt();
        // nodes nearest to the inner boundary ±√0.4
        let edge = ops.nodes.iter().map(|x| x[0].abs()).filter(|x| *x < a).fold(0.0, f64::max);
        let want = 1.0 / (std::f64::consts::PI * edge / (2.0 * 2f64.sqrt())).cos();
        assert!((rep.entries[0].quotient - want).abs() < 1e-4, "{} vs {want}", rep.entries[0].quotient);

        let zero = vec![0.0; ops.len()];
        let rep = harnack_quotient(&ops, &b, s, &zero, &[0.0], 0.2, &[1.0], 2.0).unwrap();
        assert_eq!(rep.entries[0].quotient, 1.0);
        assert_eq!(rep.entries[0].constant, 0.0);
    }

    #[test]
    fn holder_fit_of_height_deficit() {
        let phi = Potential::quad(1.0, 1).unwrap();
        let sec = build_section(&phi, &[0.0], 1.0, 401).unwrap();
        let ops = assemble(&sec).unwrap();
        let v = ops.sample(|x| 1.0 - x[0] * x[0]);
        let center = ops.nodes.iter().position(|x| x[0].abs() < 1e-12).unwrap();
        let fit = holder_seminorm(&ops, &v, center, 0.5).unwrap();
        assert!((fit.exponent.unwrap() - 1.0).abs() < 1e-9 && fit.r_squared > 0.999999);
        let c = vec![2.0; ops.len()];
        let fit = holder_seminorm(&ops, &c, center, 0.5).unwrap();
        assert_eq!(fit.coefficient, 0.0);
    }

    #[test]
    fn poincare_trivial_and_fabes_half() {
        let t = TensorPotential::new(Potential::quad(1.0, 1).unwrap(), 0.5).unwrap();
        let sec = TensorSection::new(t, TPoint::new([0.0, 0.0], 0.0), 0.3).unwrap();
        let q = TensorQuad::default();
        let r = poincare_check(&sec, 2.0, &QuadraticField::constant(3.0), &q).unwrap();
        assert!(r.lhs.abs() < 1e-12 && r.ratio == 0.0);
        let g = RampZ { z_c: 0.0 };
        let p = poincare_check(&sec, 2.0, &g, &q).unwrap();
        let f = fabes_check(&sec, 2.0, &g, 0.5, p.ratio, &q).unwrap();
        assert!((f.zero_fraction - 0.5).abs() < 1e-9);
        assert!(f.passed, "{f:?}");
    }
}
