//! Discrete `L_φ` (nondivergence) and `ℒ_φ` (divergence) operators with
//! homogeneous Dirichlet data on a section, the generalized eigenbasis of
//! `K e = λ M e`, and heat-semigroup stepping.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::linalg::{dense_sym_eig, tridiagonal_eig, weighted_dot, weighted_norm, BandLu, Csr};
use crate::potentials::{Point, Potential, Sym};
use crate::quadrature::GaussLegendre;
use crate::sections::Section;
use crate::{Error, Result};

/// Paired discrete operators on the interior nodes of one section.
///
/// `K` discretizes `v ↦ −div(A_φ∇v)` by P1 elements, `M` is the lumped mass
/// matrix weighted by `μ_φ`, so `M⁻¹K` discretizes `L_φ`. In one dimension
/// `L` additionally holds the direct finite-difference stencil of
/// `−(φ'')⁻¹ v''`.
#[derive(Clone, Debug)]
pub struct DiscreteOperators {
    pub section: Section,
    /// Global mesh indices of the interior nodes, in unknown order.
    pub interior: Vec<usize>,
    /// Interior node coordinates.
    pub nodes: Vec<Point>,
    pub k: Csr,
    /// Diagonal of the lumped mass matrix.
    pub m: Vec<f64>,
    pub l: Option<Csr>,
    /// Whether the discrete maximum principle is guaranteed: `K` has no
    /// positive off-diagonal entries and the Hessian has no mixed terms.
    pub monotone: bool,
}

// three-point symmetric rule on the reference triangle, exact for quadratics
const TRI_QP: [[f64; 3]; 3] = [
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
];

/// Assembles `K`, `M` (and `L` for `n = 1`) on the section mesh.
pub fn assemble(sec: &Section) -> Result<DiscreteOperators> {
    let phi = &sec.potential;
    let mesh = &sec.mesh;
    let interior = mesh.interior();
    let nodes: Vec<Point> = interior.iter().map(|&i| mesh.nodes[i]).collect();
    let n = interior.len();
    if n == 0 {
        return Err(Error::DegenerateMesh("section mesh has no interior nodes".into()));
    }
    match phi.dim() {
        1 => {
            let h = mesh.h.ok_or_else(|| Error::DegenerateMesh("1D mesh without spacing".into()))?;
            let rule = GaussLegendre::new(6);
            let mut m = vec![0.0; n];
            let mut kt = Vec::with_capacity(3 * n);
            let mut lt = Vec::with_capacity(3 * n);
            for i in 0..n {
                let xi = nodes[i][0];
                // ∫ φ'' ψ_i over the two elements adjacent to node i
                let mut acc = 0.0;
                for (a, b, up) in [(xi - h, xi, true), (xi, xi + h, false)] {
                    for (x, w) in rule.mapped(a, b) {
                        let psi = if up { (x - a) / h } else { (b - x) / h };
                        acc += w * psi * phi.mu_density(&[x])?;
                    }
                }
                m[i] = acc;
                let phipp = phi.mu_density(&[xi])?;
                kt.push((i, i, 2.0 / h));
                lt.push((i, i, 2.0 / (h * h * phipp)));
                if i > 0 {
                    kt.push((i, i - 1, -1.0 / h));
                    lt.push((i, i - 1, -1.0 / (h * h * phipp)));
                }
                if i + 1 < n {
                    kt.push((i, i + 1, -1.0 / h));
                    lt.push((i, i + 1, -1.0 / (h * h * phipp)));
                }
            }
            Ok(DiscreteOperators {
                section: sec.clone(),
                interior,
                nodes,
                k: Csr::from_triplets(n, n, kt),
                m,
                l: Some(Csr::from_triplets(n, n, lt)),
                monotone: true,
            })
        }
        _ => {
            let mut map = vec![usize::MAX; mesh.nodes.len()];
            for (k, &g) in interior.iter().enumerate() {
                map[g] = k;
            }
            let locals: Vec<Result<(Vec<(usize, usize, f64)>, Vec<(usize, f64)>)>> = mesh
                .elements
                .par_iter()
                .map(|el| element_contributions(phi, mesh.nodes.as_slice(), el, &map))
                .collect();
            let mut kt = Vec::with_capacity(9 * mesh.elements.len());
            let mut m = vec![0.0; n];
            for loc in locals {
                let (k_loc, m_loc) = loc?;
                kt.extend(k_loc);
                for (i, v) in m_loc {
                    m[i] += v;
                }
            }
            let k = Csr::from_triplets(n, n, kt);
            let kmax = k.max_abs();
            let off_ok = (0..n).all(|i| k.row(i).all(|(j, v)| j == i || v <= 1e-12 * kmax));
            Ok(DiscreteOperators {
                section: sec.clone(),
                interior,
                nodes,
                k,
                m,
                l: None,
                monotone: off_ok && phi.has_diagonal_hessian(),
            })
        }
    }
}

type ElementParts = (Vec<(usize, usize, f64)>, Vec<(usize, f64)>);

fn element_contributions(phi: &Potential, pts: &[Point], el: &[usize; 3], map: &[usize]) -> Result<ElementParts> {
    let p = [pts[el[0]], pts[el[1]], pts[el[2]]];
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let area = 0.5 * det.abs();
    if !(area > 0.0) {
        return Err(Error::DegenerateMesh(format!("zero-area element {el:?}")));
    }
    // ∇ψ_a = (y_b − y_c, x_c − x_b) / det for (a, b, c) cyclic
    let mut grads = [[0.0; 2]; 3];
    for a in 0..3 {
        let b = (a + 1) % 3;
        let c = (a + 2) % 3;
        grads[a] = [(p[b][1] - p[c][1]) / det, (p[c][0] - p[b][0]) / det];
    }
    let mut acof = Sym::new2(0.0, 0.0, 0.0);
    let mut mass = [0.0; 3];
    for bary in TRI_QP {
        let x = [
            bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0],
            bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1],
        ];
        let h = phi.hessian(&x)?;
        let c = h.cofactor();
        acof.a11 += c.a11 / 3.0;
        acof.a12 += c.a12 / 3.0;
        acof.a22 += c.a22 / 3.0;
        let mu = h.det();
        for a in 0..3 {
            mass[a] += area / 3.0 * mu * bary[a];
        }
    }
    let mut kt = Vec::with_capacity(9);
    let mut mt = Vec::with_capacity(3);
    for a in 0..3 {
        let ia = map[el[a]];
        if ia == usize::MAX {
            continue;
        }
        mt.push((ia, mass[a]));
        let ag = acof.apply(&grads[a]);
        for b in 0..3 {
            let ib = map[el[b]];
            if ib == usize::MAX {
                continue;
            }
            let v = area * (ag[0] * grads[b][0] + ag[1] * grads[b][1]);
            kt.push((ia, ib, v));
        }
    }
    Ok((kt, mt))
}

impl DiscreteOperators {
    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.section.dim()
    }

    /// `M⁻¹K v`.
    pub fn apply_l(&self, v: &[f64]) -> Vec<f64> {
        let kv = self.k.matvec(v);
        kv.iter().zip(&self.m).map(|(a, m)| a / m).collect()
    }

    /// Nondivergence stencil `L v` when available, else `M⁻¹K v`.
    pub fn apply_nondivergence(&self, v: &[f64]) -> Vec<f64> {
        match &self.l {
            Some(l) => l.matvec(v),
            None => self.apply_l(v),
        }
    }

    pub fn m_norm(&self, v: &[f64]) -> f64 {
        weighted_norm(&self.m, v)
    }

    pub fn m_dot(&self, a: &[f64], b: &[f64]) -> f64 {
        weighted_dot(&self.m, a, b)
    }

    /// Samples a function at the interior nodes.
    pub fn sample<F: Fn(&Point) -> f64>(&self, f: F) -> Vec<f64> {
        self.nodes.iter().map(f).collect()
    }

    /// Gershgorin upper bound on the spectrum of `M⁻¹K`.
    pub fn lambda_max_bound(&self) -> f64 {
        (0..self.len())
            .map(|i| self.k.row(i).map(|(_, v)| v.abs()).sum::<f64>() / self.m[i])
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of `K e = λ M e` by inverse iteration, without
    /// forming the eigenbasis.
    pub fn lowest_eigenvalue(&self, tol: f64) -> Result<f64> {
        let n = self.len();
        let lu = BandLu::factor(&self.k, 1.0, 0.0, &self.m)?;
        let mut x: Vec<f64> = vec![1.0; n];
        let mut lam = f64::INFINITY;
        for _ in 0..500 {
            let mut y: Vec<f64> = x.iter().zip(&self.m).map(|(a, m)| a * m).collect();
            lu.solve_in_place(&mut y);
            let nrm = self.m_norm(&y);
            y.iter_mut().for_each(|v| *v /= nrm);
            let ky = self.k.matvec(&y);
            let next = crate::linalg::dot(&ky, &y);
            x = y;
            if (next - lam).abs() <= tol * next {
                return Ok(next);
            }
            lam = next;
        }
        Err(Error::Eigen(format!("inverse iteration for the lowest eigenvalue stalled at {lam}")))
    }

    /// `(Kv − M·Lv)` measured relative to `M·Lv` in the `M⁻¹`-weighted norm,
    /// with `Lv` given pointwise. In one dimension `None` uses the direct
    /// finite-difference stencil.
    pub fn consistency_residual(&self, v: &[f64], lv: Option<&[f64]>) -> Result<f64> {
        let own;
        let lv = match lv {
            Some(lv) => lv,
            None => {
                let l = self.l.as_ref().ok_or_else(|| Error::Domain("no direct nondivergence stencil in 2D".into()))?;
                own = l.matvec(v);
                &own
            }
        };
        let kv = self.k.matvec(v);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..self.len() {
            let r = kv[i] - self.m[i] * lv[i];
            num += r * r / self.m[i];
            den += self.m[i] * lv[i] * lv[i];
        }
        Ok((num / den).sqrt())
    }
}

/// Ascending eigenvalues of `K e = λ M e` with `M`-orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct SpectralBasis {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// Diagonal mass matrix defining the inner product.
    pub mass: Vec<f64>,
}

/// Solves `K e = λ M e` through `M^{−1/2} K M^{−1/2}` and keeps the `m`
/// smallest pairs. One-dimensional operators are tridiagonal and use a
/// bisection/inverse-iteration solver; two-dimensional ones a dense solve.
pub fn eig(ops: &DiscreteOperators, m: usize) -> Result<SpectralBasis> {
    let n = ops.len();
    if m == 0 || m > n {
        return Err(Error::Domain(format!("requested {m} eigenpairs from {n} unknowns")));
    }
    let isq: Vec<f64> = ops.m.iter().map(|v| 1.0 / v.sqrt()).collect();
    let c = ops.k.scaled(&isq, &isq);
    let sym = match c.tridiagonal_parts() {
        Some((d, e)) => tridiagonal_eig(&d, &e)?,
        None => {
            let mut dense = c.to_dense();
            // symmetrize away rounding noise before the dense solve
            let t = dense.transpose();
            dense = (dense + t) * 0.5;
            dense_sym_eig(DMatrix::from(dense))?
        }
    };
    let mut values = Vec::with_capacity(m);
    let mut vectors = Vec::with_capacity(m);
    for k in 0..m {
        let mut e: Vec<f64> = sym.vectors[k].iter().zip(&isq).map(|(z, s)| z * s).collect();
        let sum: f64 = e.iter().zip(&ops.m).map(|(a, w)| a * w).sum();
        if sum < 0.0 {
            e.iter_mut().for_each(|v| *v = -*v);
        }
        values.push(sym.values[k]);
        vectors.push(e);
    }
    if !(values[0] > 0.0) {
        return Err(Error::Eigen(format!("smallest eigenvalue {} is not positive", values[0])));
    }
    Ok(SpectralBasis { values, vectors, mass: ops.m.clone() })
}

impl SpectralBasis {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn nodes(&self) -> usize {
        self.mass.len()
    }

    /// `v_k = e_kᵀ M v`.
    pub fn coefficients(&self, v: &[f64]) -> Vec<f64> {
        let mv: Vec<f64> = v.iter().zip(&self.mass).map(|(a, m)| a * m).collect();
        self.vectors.par_iter().map(|e| crate::linalg::dot(e, &mv)).collect()
    }

    /// `Σ c_k e_k`.
    pub fn synthesize(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nodes()];
        for (ck, e) in c.iter().zip(&self.vectors) {
            if *ck == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(e) {
                *o += ck * v;
            }
        }
        out
    }

    /// `Σ f(λ_k) v_k e_k`.
    pub fn apply_fn<F: Fn(f64) -> f64>(&self, v: &[f64], f: F) -> Vec<f64> {
        let c: Vec<f64> = self.coefficients(v).iter().zip(&self.values).map(|(c, l)| c * f(*l)).collect();
        self.synthesize(&c)
    }

    /// Rayleigh quotient `eᵀKe / eᵀMe`.
    pub fn rayleigh(&self, ops: &DiscreteOperators, e: &[f64]) -> f64 {
        crate::linalg::dot(&ops.k.matvec(e), e) / weighted_dot(&self.mass, e, e)
    }

    /// `max |EᵀME − I|` over the kept pairs.
    pub fn orthonormality_residual(&self) -> f64 {
        let m = self.len();
        let weighted: Vec<Vec<f64>> = self
            .vectors
            .iter()
            .map(|e| e.iter().zip(&self.mass).map(|(a, w)| a * w).collect())
            .collect();
        (0..m)
            .into_par_iter()
            .map(|j| {
                let mut worst = 0.0f64;
                for k in j..m {
                    let p = crate::linalg::dot(&weighted[j], &self.vectors[k]);
                    let want = if j == k { 1.0 } else { 0.0 };
                    worst = worst.max((p - want).abs());
                }
                worst
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// Time integrator for `e^{−tL_h}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HeatScheme {
    /// Exact per mode through the spectral basis.
    EigenExp,
    /// Crank–Nicolson with fixed step `dt`.
    CrankNicolson { dt: f64 },
}

/// Which discrete operator generates the semigroup.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeatOperator {
    /// `M⁻¹K`
    Divergence,
    /// The direct stencil `L` (one dimension only).
    Nondivergence,
}

/// Approximates `e^{−tL_h} v`.
pub fn heat_step(
    ops: &DiscreteOperators,
    basis: Option<&SpectralBasis>,
    v: &[f64],
    t: f64,
    scheme: HeatScheme,
    op: HeatOperator,
) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("heat_step needs t >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(v.to_vec());
    }
    match scheme {
        HeatScheme::EigenExp => {
            if op != HeatOperator::Divergence {
                return Err(Error::Domain("eigenexp stepping is defined for the divergence pair".into()));
            }
            let b = basis.ok_or_else(|| Error::Domain("eigenexp stepping needs a spectral basis".into()))?;
            Ok(b.apply_fn(v, |l| (-t * l).exp()))
        }
        HeatScheme::CrankNicolson { dt } => {
            if !(dt > 0.0) {
                return Err(Error::Domain(format!("Crank-Nicolson step must be positive, got {dt}")));
            }
            let steps = (t / dt).ceil().max(1.0) as usize;
            let dt = t / steps as f64;
            let mut stepper = CnStepper::new(ops, op, dt)?;
            let mut w = v.to_vec();
            for _ in 0..steps {
                stepper.step(&mut w);
            }
            Ok(w)
        }
    }
}

/// One factored Crank–Nicolson step of fixed size.
pub struct CnStepper<'a> {
    ops: &'a DiscreteOperators,
    op: HeatOperator,
    dt: f64,
    lu: BandLu,
}

impl<'a> CnStepper<'a> {
    pub fn new(ops: &'a DiscreteOperators, op: HeatOperator, dt: f64) -> Result<Self> {
        let lu = match op {
            HeatOperator::Divergence => BandLu::factor(&ops.k, 0.5 * dt, 1.0, &ops.m)?,
            HeatOperator::Nondivergence => {
                let l = ops.l.as_ref().ok_or_else(|| Error::Domain("no nondivergence stencil in 2D".into()))?;
                BandLu::factor(l, 0.5 * dt, 1.0, &vec![1.0; ops.len()])?
            }
        };
        Ok(Self { ops, op, dt, lu })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&mut self, w: &mut [f64]) {
        let h = 0.5 * self.dt;
        match self.op {
            HeatOperator::Divergence => {
                let kw = self.ops.k.matvec(w);
                for i in 0..w.len() {
                    w[i] = self.ops.m[i] * w[i] - h * kw[i];
                }
            }
            HeatOperator::Nondivergence => {
                let lw = self.ops.l.as_ref().expect("checked in new").matvec(w);
                for i in 0..w.len() {
                    w[i] -= h * lw[i];
                }
            }
        }
        self.lu.solve_in_place(w);
    }

    /// Advances the deviation `d = w − w₀` instead of `w`, where `gw0` is the
    /// stiffness (or nondivergence stencil) applied to `w₀`. Small deviations
    /// keep their relative accuracy.
    pub fn step_deviation(&mut self, d: &mut [f64], gw0: &[f64]) {
        let dt = self.dt;
        self.step(d);
        let mut c: Vec<f64> = gw0.iter().map(|g| -dt * g).collect();
        self.lu.solve_in_place(&mut c);
        for (di, ci) in d.iter_mut().zip(&c) {
            *di += ci;
        }
    }
}

/// Smooth test fields with analytic derivatives.
pub trait SmoothField: Sync {
    fn value(&self, x: &Point) -> f64;
    fn gradient(&self, x: &Point) -> Point;
    fn hessian(&self, x: &Point, dim: usize) -> Sym;
}

/// `(1 − |x − c|²/ρ²)⁴` inside the ball `B(c, ρ)`, zero outside: `C³` with
/// compact support.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub center: Point,
    pub radius: f64,
}

impl SmoothField for Bump {
    fn value(&self, x: &Point) -> f64 {
        let q = 1.0 - self.r2(x) / (self.radius * self.radius);
        if q <= 0.0 {
            0.0
        } else {
            q.powi(4)
        }
    }

    fn gradient(&self, x: &Point) -> Point {
        let rho2 = self.radius * self.radius;
        let q = 1.0 - self.r2(x) / rho2;
        if q <= 0.0 {
            return [0.0, 0.0];
        }
        let f = -8.0 * q.powi(3) / rho2;
        [f * (x[0] - self.center[0]), f * (x[1] - self.center[1])]
    }

    fn hessian(&self, x: &Point, dim: usize) -> Sym {
        let rho2 = self.radius * self.radius;
        let q = 1.0 - self.r2(x) / rho2;
        if q <= 0.0 {
            return if dim == 1 { Sym::scalar(0.0) } else { Sym::new2(0.0, 0.0, 0.0) };
        }
        // ∂_i∂_j q⁴ = 4q³ ∂_i∂_j q + 12 q² ∂_i q ∂_j q,  ∂_i q = −2 d_i/ρ², ∂_i∂_j q = −2δ_ij/ρ²
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        let a = -8.0 * q.powi(3) / rho2;
        let b = 48.0 * q * q / (rho2 * rho2);
        if dim == 1 {
            Sym::scalar(a + b * d[0] * d[0])
        } else {
            Sym::new2(a + b * d[0] * d[0], b * d[0] * d[1], a + b * d[1] * d[1])
        }
    }
}

impl Bump {
    fn r2(&self, x: &Point) -> f64 {
        (x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2)
    }
}

/// Pointwise `L_φ v = −tr((D²φ)⁻¹ D²v)` of a smooth field.
pub fn nondivergence_exact(phi: &Potential, f: &dyn SmoothField, x: &Point) -> Result<f64> {
    let n = phi.dim();
    let hinv = phi.hessian(&x[..n])?.inverse();
    let hv = f.hessian(x, n);
    let tr = match n {
        1 => hinv.a11 * hv.a11,
        _ => hinv.a11 * hv.a11 + 2.0 * hinv.a12 * hv.a12 + hinv.a22 * hv.a22,
    };
    Ok(-tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sections::build_section;
    use std::f64::consts::PI;

    #[test]
    fn one_dimensional_stencils() {
        let phi = Potential::quad(0.5, 1).unwrap();
        let sec = build_section(&phi, &[0.0], 0.5, 9).unwrap();
        let ops = assemble(&sec).unwrap();
        let h = 0.2;
        assert!((ops.l.as_ref().unwrap().get(3, 3) - 2.0 / (h * h)).abs() < 1e-9);
        assert!((ops.l.as_ref().unwrap().get(3, 4) + 1.0 / (h * h)).abs() < 1e-9);
        assert!((ops.m[3] - h).abs() < 1e-14);

        let phi = Potential::quad(1.0, 1).unwrap();
        let sec = build_section(&phi, &[0.0], 1.0, 9).unwrap();
        let ops = assemble(&sec).unwrap();
        assert!((ops.l.as_ref().unwrap().get(3, 3) - 1.0 / (h * h)).abs() < 1e-9);
    }

    #[test]
    fn constant_vector_only_sees_the_boundary() {
        let phi = Potential::perturbed_quad(0.2, 2).unwrap();
        let sec = build_section(&phi, &[0.1, 0.0], 0.6, 24).unwrap();
        let ops = assemble(&sec).unwrap();
        let kv = ops.k.matvec(&vec![1.0; ops.len()]);
        // rows of nodes not adjacent to the boundary sum to zero
        let (m, rings) = sec.mesh.polar.unwrap();
        let deep = 1 + m * (rings - 3);
        for i in 0..deep {
            assert!(kv[i].abs() < 1e-11 * ops.k.max_abs(), "row {i}: {}", kv[i]);
        }
        assert!(ops.k.asymmetry() <= 1e-12 * ops.k.max_abs());
    }

    #[test]
    fn first_eigenvalue_of_interval() {
        let phi = Potential::quad(0.5, 1).unwrap();
        let sec = build_section(&phi, &[0.0], 0.5, 400).unwrap();
        let ops = assemble(&sec).unwrap();
        let b = eig(&ops, 5).unwrap();
        let want = (PI / 2.0).powi(2);
        assert!((b.values[0] - want).abs() / want < 1e-4);
        assert!(b.vectors[0].iter().all(|v| *v > 0.0));
        assert!(b.orthonormality_residual() < 1e-11);
        let lam = ops.lowest_eigenvalue(1e-13).unwrap();
        assert!((lam - b.values[0]).abs() / lam < 1e-11);
    }

    #[test]
    fn heat_step_identity_and_mode_decay() {
        let phi = Potential::quad(1.0, 1).unwrap();
        let sec = build_section(&phi, &[0.0], 1.0, 200).unwrap();
        let ops = assemble(&sec).unwrap();
        let b = eig(&ops, 10).unwrap();
        let e1 = b.vectors[0].clone();
        let same = heat_step(&ops, Some(&b), &e1, 0.0, HeatScheme::EigenExp, HeatOperator::Divergence).unwrap();
        assert_eq!(same, e1);
        let t = 0.7;
        let w = heat_step(&ops, Some(&b), &e1, t, HeatScheme::EigenExp, HeatOperator::Divergence).unwrap();
        let f = (-b.values[0] * t).exp();
        for (a, c) in w.iter().zip(&e1) {
            assert!((a - f * c).abs() < 1e-12);
        }
        let cn = heat_step(&ops, None, &e1, t, HeatScheme::CrankNicolson { dt: 1e-3 }, HeatOperator::Divergence).unwrap();
        let gap: Vec<f64> = cn.iter().zip(&w).map(|(a, c)| a - c).collect();
        assert!(ops.m_norm(&gap) < 1e-6);
        assert!(heat_step(&ops, None, &e1, t, HeatScheme::CrankNicolson { dt: 0.0 }, HeatOperator::Divergence).is_err());
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let b = Bump { center: [0.1, -0.2], radius: 0.7 };
        let x = [0.3, 0.05];
        let h = 1e-5;
        let g = b.gradient(&x);
        let hs = b.hessian(&x, 2);
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            assert!(((b.value(&xp) - b.value(&xm)) / (2.0 * h) - g[i]).abs() < 1e-8);
            let gp = b.gradient(&xp);
            let gm = b.gradient(&xm);
            let row = if i == 0 { [hs.a11, hs.a12] } else { [hs.a12, hs.a22] };
            for j in 0..2 {
                assert!(((gp[j] - gm[j]) / (2.0 * h) - row[j]).abs() < 1e-7);
            }
        }
    }
}
