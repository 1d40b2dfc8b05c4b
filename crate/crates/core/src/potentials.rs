//! Convex potentials `φ`, their derivatives, the Monge–Ampère density
//! `μ_φ = det D²φ`, and the quasi-distance `δ_φ`.

use std::fmt;

use crate::{Error, Result};

/// Points are stored in a fixed two-slot array; only the first `dim` entries
/// are meaningful.
pub type Point = [f64; 2];

/// Symmetric `dim × dim` matrix with `dim ∈ {1, 2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sym {
    pub dim: usize,
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Sym {
    pub fn scalar(a: f64) -> Self {
        Self { dim: 1, a11: a, a12: 0.0, a22: 0.0 }
    }

    pub fn new2(a11: f64, a12: f64, a22: f64) -> Self {
        Self { dim: 2, a11, a12, a22 }
    }

    pub fn det(&self) -> f64 {
        match self.dim {
            1 => self.a11,
            _ => self.a11 * self.a22 - self.a12 * self.a12,
        }
    }

    pub fn trace(&self) -> f64 {
        match self.dim {
            1 => self.a11,
            _ => self.a11 + self.a22,
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match self.dim {
            1 => self.a11,
            _ => {
                let m = 0.5 * (self.a11 + self.a22);
                let r = (0.25 * (self.a11 - self.a22).powi(2) + self.a12 * self.a12).sqrt();
                m - r
            }
        }
    }

    /// Cofactor matrix, `det(A)·A⁻¹`; equals 1 in one dimension.
    pub fn cofactor(&self) -> Self {
        match self.dim {
            1 => Self::scalar(1.0),
            _ => Self::new2(self.a22, -self.a12, self.a11),
        }
    }

    pub fn inverse(&self) -> Self {
        let d = self.det();
        match self.dim {
            1 => Self::scalar(1.0 / d),
            _ => Self::new2(self.a22 / d, -self.a12 / d, self.a11 / d),
        }
    }

    pub fn apply(&self, v: &Point) -> Point {
        match self.dim {
            1 => [self.a11 * v[0], 0.0],
            _ => [self.a11 * v[0] + self.a12 * v[1], self.a12 * v[0] + self.a22 * v[1]],
        }
    }

    /// `⟨A v, v⟩`.
    pub fn quad_form(&self, v: &Point) -> f64 {
        let w = self.apply(v);
        dot(self.dim, &w, v)
    }
}

pub fn dot(dim: usize, a: &Point, b: &Point) -> f64 {
    (0..dim).map(|i| a[i] * b[i]).sum()
}

pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn norm2(dim: usize, a: &Point) -> f64 {
    dot(dim, a, a)
}

/// Anything carrying a Bregman-type quasi-distance.
pub trait QuasiDistance: Sync {
    fn dim(&self) -> usize;
    fn delta(&self, x0: &[f64], x: &[f64]) -> f64;
}

/// Preset convex potentials.
#[derive(Clone, Debug, PartialEq)]
pub enum Preset {
    /// `c|x|²`
    Quad { c: f64 },
    /// `½⟨Ax, x⟩` with `A` symmetric positive definite.
    Aniso { a: Sym },
    /// `|x|^p / p` in one dimension, `p > 2`.
    Power1d { p: f64 },
    /// `|x|²/2 + ε|x|⁴`
    PerturbedQuad { eps: f64 },
}

/// A convex potential on `ℝⁿ`, `n ∈ {1, 2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    dim: usize,
    preset: Preset,
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.preset {
            Preset::Quad { c } => write!(f, "quad(c={c}, n={})", self.dim),
            Preset::Aniso { a } if a.dim == 1 => write!(f, "aniso(A={})", a.a11),
            Preset::Aniso { a } => write!(f, "aniso(A=[[{}, {}], [{}, {}]])", a.a11, a.a12, a.a12, a.a22),
            Preset::Power1d { p } => write!(f, "power1d(p={p})"),
            Preset::PerturbedQuad { eps } => write!(f, "perturbed_quad(eps={eps}, n={})", self.dim),
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::Domain(format!("dimension must be 1 or 2, got {dim}")))
    }
}

impl Potential {
    pub fn quad(c: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Domain(format!("quad requires c > 0, got {c}")));
        }
        Ok(Self { dim, preset: Preset::Quad { c } })
    }

    /// `A` given as a symmetric matrix; its dimension fixes `n`.
    pub fn aniso(a: Sym) -> Result<Self> {
        check_dim(a.dim)?;
        if a.dim == 2 && !(a.a11 > 0.0 && a.det() > 0.0) || a.dim == 1 && !(a.a11 > 0.0) {
            return Err(Error::Domain("aniso requires a positive definite matrix".into()));
        }
        Ok(Self { dim: a.dim, preset: Preset::Aniso { a } })
    }

    pub fn power1d(p: f64) -> Result<Self> {
        if !(p > 2.0 && p.is_finite()) {
            return Err(Error::Domain(format!("power1d requires p > 2, got {p}")));
        }
        Ok(Self { dim: 1, preset: Preset::Power1d { p } })
    }

    pub fn perturbed_quad(eps: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::Domain(format!("perturbed_quad requires eps >= 0, got {eps}")));
        }
        Ok(Self { dim, preset: Preset::PerturbedQuad { eps } })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn preset(&self) -> &Preset {
        &self.preset
    }

    /// True when `D²φ` is constant, so `δ_φ(x0, ·)` is a quadratic form.
    pub fn is_quadratic(&self) -> bool {
        matches!(self.preset, Preset::Quad { .. } | Preset::Aniso { .. })
            || matches!(self.preset, Preset::PerturbedQuad { eps } if eps == 0.0)
    }

    /// True when the Hessian is diagonal everywhere (no mixed second-order
    /// terms), the regime in which the discrete maximum principle holds.
    pub fn has_diagonal_hessian(&self) -> bool {
        match &self.preset {
            _ if self.dim == 1 => true,
            Preset::Quad { .. } => true,
            Preset::Aniso { a } => a.a12 == 0.0,
            Preset::PerturbedQuad { eps } => *eps == 0.0,
            Preset::Power1d { .. } => true,
        }
    }

    fn r2(&self, x: &[f64]) -> f64 {
        x[..self.dim].iter().map(|v| v * v).sum()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.preset {
            Preset::Quad { c } => c * self.r2(x),
            Preset::Aniso { a } => 0.5 * a.quad_form(&to_point(self.dim, x)),
            Preset::Power1d { p } => x[0].abs().powf(*p) / p,
            Preset::PerturbedQuad { eps } => {
                let r2 = self.r2(x);
                0.5 * r2 + eps * r2 * r2
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Point {
        let xp = to_point(self.dim, x);
        match &self.preset {
            Preset::Quad { c } => [2.0 * c * xp[0], 2.0 * c * xp[1]],
            Preset::Aniso { a } => a.apply(&xp),
            Preset::Power1d { p } => [x[0].signum() * x[0].abs().powf(p - 1.0), 0.0],
            Preset::PerturbedQuad { eps } => {
                let f = 1.0 + 4.0 * eps * self.r2(x);
                [f * xp[0], f * xp[1]]
            }
        }
    }

    /// `D²φ(x)`; errors where it fails to be positive definite.
    pub fn hessian(&self, x: &[f64]) -> Result<Sym> {
        let h = self.hessian_unchecked(x);
        let m = h.min_eigenvalue();
        if !(m > 0.0) {
            return Err(Error::NotPositiveDefinite { point: x[..self.dim].to_vec(), min_eig: m });
        }
        Ok(h)
    }

    pub(crate) fn hessian_unchecked(&self, x: &[f64]) -> Sym {
        match &self.preset {
            Preset::Quad { c } => {
                if self.dim == 1 {
                    Sym::scalar(2.0 * c)
                } else {
                    Sym::new2(2.0 * c, 0.0, 2.0 * c)
                }
            }
            Preset::Aniso { a } => *a,
            Preset::Power1d { p } => Sym::scalar((p - 1.0) * x[0].abs().powf(p - 2.0)),
            Preset::PerturbedQuad { eps } => {
                let r2 = self.r2(x);
                let d = 1.0 + 4.0 * eps * r2;
                if self.dim == 1 {
                    Sym::scalar(d + 8.0 * eps * x[0] * x[0])
                } else {
                    let e8 = 8.0 * eps;
                    Sym::new2(d + e8 * x[0] * x[0], e8 * x[0] * x[1], d + e8 * x[1] * x[1])
                }
            }
        }
    }

    /// `μ_φ(x) = det D²φ(x)`.
    pub fn mu_density(&self, x: &[f64]) -> Result<f64> {
        Ok(self.hessian(x)?.det())
    }

    /// `δ_φ(x0, x) = φ(x) − φ(x0) − ⟨∇φ(x0), x − x0⟩`.
    pub fn delta(&self, x0: &[f64], x: &[f64]) -> f64 {
        match &self.preset {
            // exact forms avoid cancellation for the quadratic presets
            Preset::Quad { c } => c * (0..self.dim).map(|i| (x[i] - x0[i]).powi(2)).sum::<f64>(),
            Preset::Aniso { a } => {
                let d = sub(&to_point(self.dim, x), &to_point(self.dim, x0));
                0.5 * a.quad_form(&d)
            }
            _ => {
                let g = self.gradient(x0);
                let lin: f64 = (0..self.dim).map(|i| g[i] * (x[i] - x0[i])).sum();
                (self.value(x) - self.value(x0) - lin).max(0.0)
            }
        }
    }

    /// Cofactor matrix `A_φ = μ_φ (D²φ)⁻¹`.
    pub fn cofactor(&self, x: &[f64]) -> Result<Sym> {
        Ok(self.hessian(x)?.cofactor())
    }

    /// `|∇^φ f|² = ⟨(D²φ)⁻¹ ∇f, ∇f⟩`.
    pub fn ma_gradient_sq(&self, x: &[f64], grad_f: &Point) -> Result<f64> {
        Ok(self.hessian(x)?.inverse().quad_form(grad_f))
    }
}

impl QuasiDistance for Potential {
    fn dim(&self) -> usize {
        self.dim
    }

    fn delta(&self, x0: &[f64], x: &[f64]) -> f64 {
        Potential::delta(self, x0, x)
    }
}

pub(crate) fn to_point(dim: usize, x: &[f64]) -> Point {
    if dim == 1 {
        [x[0], 0.0]
    } else {
        [x[0], x[1]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn presets() -> Vec<Potential> {
        vec![
            Potential::quad(1.0, 1).unwrap(),
            Potential::quad(0.5, 2).unwrap(),
            Potential::quad(3.0, 2).unwrap(),
            Potential::aniso(Sym::new2(2.0, 0.5, 3.0)).unwrap(),
            Potential::aniso(Sym::scalar(4.0)).unwrap(),
            Potential::power1d(4.0).unwrap(),
            Potential::power1d(3.0).unwrap(),
            Potential::perturbed_quad(0.3, 1).unwrap(),
            Potential::perturbed_quad(0.3, 2).unwrap(),
        ]
    }

    fn random_point(rng: &mut ChaCha8Rng) -> Point {
        loop {
            let p: Point = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            // power1d is only admissible away from the origin
            if p[0].abs() > 0.1 {
                return p;
            }
        }
    }

    #[test]
    fn delta_examples() {
        let q = Potential::quad(1.0, 2).unwrap();
        assert_eq!(q.delta(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert!((q.delta(&[0.0, 0.0], &[1.0, 1.0]) - 2.0).abs() < 1e-15);
        let a = Potential::aniso(Sym::new2(2.0, 0.0, 8.0)).unwrap();
        assert!((a.delta(&[0.0, 0.0], &[1.0, 1.0]) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn mu_density_examples() {
        assert_eq!(Potential::quad(1.0, 2).unwrap().mu_density(&[0.3, -0.2]).unwrap(), 4.0);
        assert_eq!(Potential::quad(0.5, 1).unwrap().mu_density(&[7.0]).unwrap(), 1.0);
        let p = Potential::power1d(4.0).unwrap();
        assert!((p.mu_density(&[2.0]).unwrap() - 12.0).abs() < 1e-13);
    }

    #[test]
    fn power1d_hessian_rejected_at_origin() {
        let p = Potential::power1d(4.0).unwrap();
        assert!(matches!(p.hessian(&[0.0]), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn constructors_validate() {
        assert!(Potential::quad(0.0, 1).is_err());
        assert!(Potential::quad(1.0, 3).is_err());
        assert!(Potential::power1d(2.0).is_err());
        assert!(Potential::perturbed_quad(-1.0, 2).is_err());
        assert!(Potential::aniso(Sym::new2(1.0, 2.0, 1.0)).is_err());
    }

    #[test]
    fn quad_delta_is_scaled_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for c in [0.5, 1.0, 2.5] {
            let q = Potential::quad(c, 2).unwrap();
            for _ in 0..1000 {
                let x0 = random_point(&mut rng);
                let x = random_point(&mut rng);
                let want = c * norm2(2, &sub(&x, &x0));
                let got = q.delta(&x0, &x);
                assert!((got - want).abs() <= 1e-14 * want.max(1.0));
            }
        }
    }

    #[test]
    fn delta_nonnegative_and_vanishes_only_on_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for phi in presets() {
            for _ in 0..500 {
                let x0 = random_point(&mut rng);
                let x = random_point(&mut rng);
                let d = phi.delta(&x0, &x);
                assert!(d >= 0.0);
                if d == 0.0 {
                    assert!(norm2(phi.dim(), &sub(&x, &x0)).sqrt() < 1e-12);
                }
                assert_eq!(phi.delta(&x0, &x0), 0.0);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for phi in presets() {
            let n = phi.dim();
            for _ in 0..200 {
                let x = random_point(&mut rng);
                let g = phi.gradient(&x);
                let hs = phi.hessian(&x).unwrap();
                for i in 0..n {
                    let mut xp = x;
                    let mut xm = x;
                    xp[i] += h;
                    xm[i] -= h;
                    let fd = (phi.value(&xp) - phi.value(&xm)) / (2.0 * h);
                    let scale = g[i].abs().max(1.0);
                    assert!((fd - g[i]).abs() / scale < 1e-6, "{phi} grad at {x:?}");
                    let gp = phi.gradient(&xp);
                    let gm = phi.gradient(&xm);
                    let row = if i == 0 { [hs.a11, hs.a12] } else { [hs.a12, hs.a22] };
                    for j in 0..n {
                        let fd = (gp[j] - gm[j]) / (2.0 * h);
                        let scale = row[j].abs().max(1.0);
                        assert!((fd - row[j]).abs() / scale < 1e-6, "{phi} hess at {x:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn cofactor_identity() {
        let phi = Potential::perturbed_quad(0.2, 2).unwrap();
        let x = [0.4, -0.7];
        let h = phi.hessian(&x).unwrap();
        let a = phi.cofactor(&x).unwrap();
        // A_φ D²φ = μ_φ I
        let p = h.apply(&a.apply(&[1.0, 0.0]));
        assert!((p[0] - h.det()).abs() < 1e-13 && p[1].abs() < 1e-13);
    }

    #[test]
    fn hessians_positive_definite_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for phi in presets() {
            for _ in 0..100 {
                let x = random_point(&mut rng);
                assert!(phi.hessian(&x).unwrap().min_eigenvalue() > 0.0);
            }
        }
    }
}
