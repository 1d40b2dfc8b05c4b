//! Monge–Ampère sections `S_φ(x0, R)`, their meshes, the tensor potential
//! `Φ(x, z) = φ(x) + h_s(z)`, and empirical estimates of geometric constants.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::potentials::{to_point, Point, Potential, QuasiDistance};
use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

const MAX_EXPANSIONS: usize = 200;

/// Distance `t > 0` along the unit direction `u` at which
/// `δ(x0, x0 + t·u) = level`. Bracketed by doubling, then bisected.
pub fn ray_root(qd: &dyn QuasiDistance, x0: &[f64], u: &[f64], level: f64) -> Result<f64> {
    let n = qd.dim();
    let at = |t: f64| {
        let mut x = [0.0; 3];
        for i in 0..n {
            x[i] = x0[i] + t * u[i];
        }
        qd.delta(x0, &x[..n])
    };
    if level <= 0.0 {
        return Ok(0.0);
    }
    let mut hi = level.sqrt().max(1e-8);
    let mut lo = 0.0;
    let mut expansions = 0;
    while at(hi) < level {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > MAX_EXPANSIONS || !hi.is_finite() {
            return Err(Error::Bracket { direction: u[..n].to_vec(), expansions });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Resolution of quadrature over sections.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectionQuad {
    /// Trapezoid nodes in the angle (periodic, spectrally accurate).
    pub n_theta: usize,
    /// Gauss–Legendre nodes along each ray.
    pub n_r: usize,
    /// Gauss–Legendre panels across a one-dimensional section.
    pub panels_1d: usize,
}

impl Default for SectionQuad {
    fn default() -> Self {
        Self { n_theta: 96, n_r: 16, panels_1d: 8 }
    }
}

/// `∫_{S} f dx` over the sublevel set `{δ_φ(x0, ·) < R}` (Lebesgue measure).
pub fn integrate_sublevel<F>(phi: &Potential, x0: &[f64], r: f64, q: &SectionQuad, f: F) -> Result<f64>
where
    F: Fn(&Point) -> f64,
{
    if r <= 0.0 {
        return Ok(0.0);
    }
    match phi.dim() {
        1 => {
            let xr = x0[0] + ray_root(phi, x0, &[1.0], r)?;
            let xl = x0[0] - ray_root(phi, x0, &[-1.0], r)?;
            let rule = GaussLegendre::new(12);
            let h = (xr - xl) / q.panels_1d as f64;
            let mut acc = 0.0;
            for p in 0..q.panels_1d {
                let a = xl + p as f64 * h;
                acc += rule.integrate(a, a + h, |x| f(&[x, 0.0]));
            }
            Ok(acc)
        }
        _ => {
            let rule = GaussLegendre::new(q.n_r);
            let dtheta = 2.0 * PI / q.n_theta as f64;
            let mut acc = 0.0;
            for j in 0..q.n_theta {
                let th = j as f64 * dtheta;
                let u = [th.cos(), th.sin()];
                let rho = ray_root(phi, x0, &u, r)?;
                acc += rule.integrate(0.0, rho, |t| t * f(&[x0[0] + t * u[0], x0[1] + t * u[1]]));
            }
            Ok(acc * dtheta)
        }
    }
}

/// `μ_φ(S_φ(x0, R))`.
pub fn mu_measure(phi: &Potential, x0: &[f64], r: f64, q: &SectionQuad) -> Result<f64> {
    let err = RefCell::new(None);
    let v = integrate_sublevel(phi, x0, r, q, |x| match phi.mu_density(&x[..phi.dim()]) {
        Ok(m) => m,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            0.0
        }
    });
    // closures cannot return early; surface the first density failure here
    let v = v?;
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// Computational mesh of a section.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    pub boundary: Vec<bool>,
    /// Triangles (n = 2 only), counter-clockwise.
    pub elements: Vec<[usize; 3]>,
    /// Uniform spacing (n = 1 only).
    pub h: Option<f64>,
    /// Rays and rings of the polar mesh (n = 2 only).
    pub polar: Option<(usize, usize)>,
}

impl Mesh {
    pub fn interior(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| !self.boundary[i]).collect()
    }

    pub fn interior_count(&self) -> usize {
        self.boundary.iter().filter(|b| !**b).count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Boundary {
    Interval { xl: f64, xr: f64 },
    /// Boundary vertices along uniformly spaced rays.
    Polygon { vertices: Vec<Point> },
}

/// A Monge–Ampère section with its mesh.
#[derive(Clone, Debug)]
pub struct Section {
    pub potential: Potential,
    pub center: Point,
    pub height: f64,
    pub boundary: Boundary,
    pub mesh: Mesh,
}

/// Builds `S_φ(x0, R)`.
///
/// In one dimension `resolution` is the number of interior grid nodes. In two
/// dimensions it is the number of rays `M`; the ring count defaults to
/// `max(2, round(M / 2π))` so elements stay close to isotropic.
pub fn build_section(phi: &Potential, x0: &[f64], r: f64, resolution: usize) -> Result<Section> {
    let rings = ((resolution as f64) / (2.0 * PI)).round().max(2.0) as usize;
    build_section_with_rings(phi, x0, r, resolution, rings)
}

/// As [`build_section`] with an explicit ring count for `n = 2`.
pub fn build_section_with_rings(
    phi: &Potential,
    x0: &[f64],
    r: f64,
    resolution: usize,
    rings: usize,
) -> Result<Section> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("section height must be positive, got {r}")));
    }
    if resolution < 8 {
        return Err(Error::Domain(format!("section resolution must be at least 8, got {resolution}")));
    }
    let n = phi.dim();
    if x0.len() < n {
        return Err(Error::Dimension { expected: n, got: x0.len() });
    }
    let center = to_point(n, x0);
    if n == 1 {
        let xr = x0[0] + ray_root(phi, x0, &[1.0], r)?;
        let xl = x0[0] - ray_root(phi, x0, &[-1.0], r)?;
        let np = resolution;
        let h = (xr - xl) / (np + 1) as f64;
        let mut nodes = Vec::with_capacity(np + 2);
        nodes.push([xl, 0.0]);
        for i in 1..=np {
            nodes.push([xl + i as f64 * h, 0.0]);
        }
        nodes.push([xr, 0.0]);
        let mut boundary = vec![false; np + 2];
        boundary[0] = true;
        boundary[np + 1] = true;
        return Ok(Section {
            potential: phi.clone(),
            center,
            height: r,
            boundary: Boundary::Interval { xl, xr },
            mesh: Mesh { nodes, boundary, elements: vec![], h: Some(h), polar: None },
        });
    }

    let m = resolution;
    let rings = rings.max(2);
    let mut nodes = vec![center];
    let mut boundary = vec![false];
    let mut vertices = Vec::with_capacity(m);
    for i in 1..=rings {
        let level = r * (i as f64 / rings as f64).powi(2);
        for j in 0..m {
            let th = 2.0 * PI * j as f64 / m as f64;
            let u = [th.cos(), th.sin()];
            let t = ray_root(phi, x0, &u, level)?;
            let p = [center[0] + t * u[0], center[1] + t * u[1]];
            nodes.push(p);
            boundary.push(i == rings);
            if i == rings {
                vertices.push(p);
            }
        }
    }
    let idx = |i: usize, j: usize| 1 + (i - 1) * m + (j % m);
    let mut elements = Vec::with_capacity(m * (2 * rings - 1));
    for j in 0..m {
        elements.push([0, idx(1, j), idx(1, j + 1)]);
    }
    for i in 1..rings {
        for j in 0..m {
            let a = idx(i, j);
            let b = idx(i, j + 1);
            let c = idx(i + 1, j);
            let d = idx(i + 1, j + 1);
            elements.push([a, c, d]);
            elements.push([a, d, b]);
        }
    }
    Ok(Section {
        potential: phi.clone(),
        center,
        height: r,
        boundary: Boundary::Polygon { vertices },
        mesh: Mesh { nodes, boundary, elements, h: None, polar: Some((m, rings)) },
    })
}

impl Section {
    pub fn dim(&self) -> usize {
        self.potential.dim()
    }

    pub fn delta_from_center(&self, x: &[f64]) -> f64 {
        self.potential.delta(&self.center, x)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.delta_from_center(x) < self.height
    }

    /// `v_φ(x) = R − δ_φ(x0, x)`, positive inside, zero on the boundary.
    pub fn height_deficit(&self, x: &[f64]) -> f64 {
        self.height - self.delta_from_center(x)
    }

    /// `∫_S f dx`.
    pub fn integrate<F: Fn(&Point) -> f64>(&self, q: &SectionQuad, f: F) -> Result<f64> {
        integrate_sublevel(&self.potential, &self.center, self.height, q, f)
    }

    pub fn lebesgue_measure(&self, q: &SectionQuad) -> Result<f64> {
        self.integrate(q, |_| 1.0)
    }

    pub fn mu_measure(&self, q: &SectionQuad) -> Result<f64> {
        mu_measure(&self.potential, &self.center, self.height, q)
    }

    /// Lebesgue center of mass.
    pub fn centroid(&self, q: &SectionQuad) -> Result<Point> {
        let vol = self.lebesgue_measure(q)?;
        let cx = self.integrate(q, |x| x[0])? / vol;
        let cy = if self.dim() == 2 { self.integrate(q, |x| x[1])? / vol } else { 0.0 };
        Ok([cx, cy])
    }

    /// The ½-dilation of the section about its Lebesgue center of mass.
    pub fn half_contraction(&self, q: &SectionQuad) -> Result<HalfSection<'_>> {
        Ok(HalfSection { base: self, centroid: self.centroid(q)? })
    }

    /// Plain-text mesh dump: a header, one node per line
    /// (`index x [y] boundary`), then the elements.
    pub fn mesh_text(&self) -> String {
        let mut out = String::new();
        let n = self.dim();
        let _ = writeln!(out, "# section {} center {:?} height {}", self.potential, &self.center[..n], self.height);
        let _ = writeln!(out, "nodes {} dim {}", self.mesh.nodes.len(), n);
        for (i, p) in self.mesh.nodes.iter().enumerate() {
            let b = u8::from(self.mesh.boundary[i]);
            if n == 1 {
                let _ = writeln!(out, "{i} {:.17e} {b}", p[0]);
            } else {
                let _ = writeln!(out, "{i} {:.17e} {:.17e} {b}", p[0], p[1]);
            }
        }
        let _ = writeln!(out, "elements {}", self.mesh.elements.len());
        for e in &self.mesh.elements {
            let _ = writeln!(out, "{} {} {}", e[0], e[1], e[2]);
        }
        out
    }
}

/// `½S = c + (S − c)/2` for the Lebesgue centroid `c` of `S`.
#[derive(Clone, Debug)]
pub struct HalfSection<'a> {
    pub base: &'a Section,
    pub centroid: Point,
}

impl HalfSection<'_> {
    fn lift(&self, x: &[f64]) -> Point {
        let c = self.centroid;
        [c[0] + 2.0 * (x[0] - c[0]), c[1] + 2.0 * (x.get(1).copied().unwrap_or(0.0) - c[1])]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let y = self.lift(x);
        self.base.contains(&y[..self.base.dim()])
    }

    /// `∫_{½S} f dx = 2^{−n} ∫_S f(c + (y − c)/2) dy`.
    pub fn integrate<F: Fn(&Point) -> f64>(&self, q: &SectionQuad, f: F) -> Result<f64> {
        let c = self.centroid;
        let n = self.base.dim();
        let scale = 0.5f64.powi(n as i32);
        let v = self.base.integrate(q, |y| f(&[c[0] + 0.5 * (y[0] - c[0]), c[1] + 0.5 * (y[1] - c[1])]))?;
        Ok(scale * v)
    }

    pub fn mu_measure(&self, q: &SectionQuad) -> Result<f64> {
        let phi = &self.base.potential;
        let n = phi.dim();
        self.integrate(q, |x| phi.mu_density(&x[..n]).unwrap_or(f64::NAN))
            .and_then(|v| if v.is_finite() { Ok(v) } else { Err(Error::Domain("density undefined in half section".into())) })
    }

    /// For `n = 1` the contracted interval.
    pub fn interval(&self) -> Option<(f64, f64)> {
        match self.base.boundary {
            Boundary::Interval { xl, xr } => {
                let c = self.centroid[0];
                Some((c + 0.5 * (xl - c), c + 0.5 * (xr - c)))
            }
            _ => None,
        }
    }
}

/// Empirical doubling constant `max μ_φ(S) / μ_φ(½S)` over sampled sections.
pub fn doubling_estimate(phi: &Potential, samples: &[(Point, f64)], q: &SectionQuad) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Domain("doubling_estimate needs at least one sample".into()));
    }
    let ratios: Vec<Result<f64>> = samples
        .par_iter()
        .map(|(x0, r)| {
            let sec = build_section(phi, &x0[..phi.dim()], *r, 8)?;
            let half = sec.half_contraction(q)?;
            let full = sec.mu_measure(q)?;
            let part = half.mu_measure(q)?;
            if !(part > 0.0) {
                return Err(Error::DegenerateMesh(format!("half section at {x0:?} has no mass")));
            }
            Ok(full / part)
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    for r in ratios {
        best = best.max(r?);
    }
    Ok(best)
}

/// Empirical quasi-triangle constant: the largest
/// `δ(X,Y) / (min{δ(Z,X), δ(X,Z)} + min{δ(Z,Y), δ(Y,Z)})` over the triples,
/// skipping zero denominators. A lower bound for the true constant.
pub fn quasi_triangle_estimate(qd: &dyn QuasiDistance, triples: &[(Vec<f64>, Vec<f64>, Vec<f64>)]) -> Result<f64> {
    if triples.is_empty() {
        return Err(Error::Domain("quasi_triangle_estimate needs at least one triple".into()));
    }
    let mut best = 0.0f64;
    for (x, y, z) in triples {
        let num = qd.delta(x, y);
        let den = qd.delta(z, x).min(qd.delta(x, z)) + qd.delta(z, y).min(qd.delta(y, z));
        if den > 0.0 && num > 0.0 {
            best = best.max(num / den);
        }
    }
    Ok(best)
}

/// `h_s(z) = s²/(1−s)·|z|^{1/s}` as a one-dimensional potential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HPotential {
    pub s: f64,
}

impl HPotential {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!("fractional order s = {s} must lie in (0, 1)")));
        }
        Ok(Self { s })
    }

    pub fn value(&self, z: f64) -> f64 {
        let s = self.s;
        s * s / (1.0 - s) * z.abs().powf(1.0 / s)
    }

    pub fn derivative(&self, z: f64) -> f64 {
        let s = self.s;
        s / (1.0 - s) * z.abs().powf(1.0 / s - 1.0) * z.signum()
    }

    pub fn second_derivative(&self, z: f64) -> f64 {
        z.abs().powf(1.0 / self.s - 2.0)
    }

    pub fn delta(&self, z0: f64, z: f64) -> f64 {
        (self.value(z) - self.value(z0) - self.derivative(z0) * (z - z0)).max(0.0)
    }
}

impl QuasiDistance for HPotential {
    fn dim(&self) -> usize {
        1
    }

    fn delta(&self, x0: &[f64], x: &[f64]) -> f64 {
        HPotential::delta(self, x0[0], x[0])
    }
}

/// `Φ(x, z) = φ(x) + h_s(z)` on `ℝⁿ × ℝ`.
#[derive(Clone, Debug)]
pub struct TensorPotential {
    pub base: Potential,
    pub h: HPotential,
}

/// A point `(x, z)` of the tensor space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TPoint {
    pub x: Point,
    pub z: f64,
}

impl TPoint {
    pub fn new(x: Point, z: f64) -> Self {
        Self { x, z }
    }
}

impl TensorPotential {
    pub fn new(base: Potential, s: f64) -> Result<Self> {
        Ok(Self { base, h: HPotential::new(s)? })
    }

    pub fn s(&self) -> f64 {
        self.h.s
    }

    /// `a = 1 − 2s`.
    pub fn a(&self) -> f64 {
        1.0 - 2.0 * self.h.s
    }

    /// Exponent `1/s − 2` of the `z`-weight in `μ_Φ`.
    pub fn weight_exponent(&self) -> f64 {
        1.0 / self.h.s - 2.0
    }

    pub fn value(&self, p: &TPoint) -> f64 {
        self.base.value(&p.x[..self.base.dim()]) + self.h.value(p.z)
    }

    /// `δ_Φ = δ_φ + δ_{h_s}`.
    pub fn delta_t(&self, p0: &TPoint, p: &TPoint) -> f64 {
        let n = self.base.dim();
        self.base.delta(&p0.x[..n], &p.x[..n]) + self.h.delta(p0.z, p.z)
    }

    /// `μ_Φ(x, z) = μ_φ(x)|z|^{1/s−2}`.
    pub fn mu_density(&self, p: &TPoint) -> Result<f64> {
        Ok(self.base.mu_density(&p.x[..self.base.dim()])? * self.h.second_derivative(p.z))
    }

    /// `|∇^Φ G|² = |∇^φ G|² + |z|^{2−1/s} G_z²`.
    pub fn ma_gradient_sq(&self, p: &TPoint, grad_x: &Point, g_z: f64) -> Result<f64> {
        let gx = self.base.ma_gradient_sq(&p.x[..self.base.dim()], grad_x)?;
        Ok(gx + p.z.abs().powf(2.0 - 1.0 / self.h.s) * g_z * g_z)
    }

    /// `[z_l, z_r]`, the `z`-extent of `S_{h_s}(z0, R)`.
    pub fn z_extent(&self, z0: f64, r: f64) -> Result<(f64, f64)> {
        let up = ray_root(&self.h, &[z0], &[1.0], r)?;
        let down = ray_root(&self.h, &[z0], &[-1.0], r)?;
        Ok((z0 - down, z0 + up))
    }
}

impl QuasiDistance for TensorPotential {
    fn dim(&self) -> usize {
        self.base.dim() + 1
    }

    fn delta(&self, x0: &[f64], x: &[f64]) -> f64 {
        let n = self.base.dim();
        self.base.delta(&x0[..n], &x[..n]) + self.h.delta(x0[n], x[n])
    }
}

/// Resolution of quadrature over tensor sections.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TensorQuad {
    pub inner: SectionQuad,
    /// Gauss–Legendre nodes per `z`-panel.
    pub n_z: usize,
    /// Geometric grading levels toward each special point in `z`.
    pub levels: usize,
    /// Ratio of consecutive graded panels.
    pub ratio: f64,
}

impl Default for TensorQuad {
    fn default() -> Self {
        Self {
            inner: SectionQuad { n_theta: 48, n_r: 12, panels_1d: 4 },
            n_z: 10,
            levels: 24,
            ratio: 0.5,
        }
    }
}

/// A section `S_Φ(X0, R)` of the tensor potential.
#[derive(Clone, Debug)]
pub struct TensorSection {
    pub potential: TensorPotential,
    pub center: TPoint,
    pub height: f64,
}

impl TensorSection {
    pub fn new(potential: TensorPotential, center: TPoint, height: f64) -> Result<Self> {
        if !(height > 0.0) {
            return Err(Error::Domain(format!("section height must be positive, got {height}")));
        }
        Ok(Self { potential, center, height })
    }

    pub fn contains(&self, p: &TPoint) -> bool {
        self.potential.delta_t(&self.center, p) < self.height
    }

    /// `∫_{S_Φ} F dμ_Φ`, slicing in `z`: for each `z` the slice is
    /// `S_φ(x0, R − δ_{h_s}(z0, z))` and the `z`-weight `|z|^{1/s−2}` is
    /// integrated on geometrically graded panels, with the panel touching
    /// `z = 0` mapped by `z = b·u^{1/(β+1)}` to absorb the weight exactly.
    pub fn integrate_mu<F>(&self, q: &TensorQuad, f: F) -> Result<f64>
    where
        F: Fn(&TPoint) -> f64 + Sync,
    {
        let t = &self.potential;
        let phi = &t.base;
        let n = phi.dim();
        let beta = t.weight_exponent();
        let (zl, zr) = t.z_extent(self.center.z, self.height)?;
        let x0 = self.center.x;
        let inner = |z: f64| -> Result<f64> {
            let rho = self.height - t.h.delta(self.center.z, z);
            if rho <= 0.0 {
                return Ok(0.0);
            }
            let err = RefCell::new(None);
            let v = integrate_sublevel(phi, &x0[..n], rho, &q.inner, |x| {
                let p = TPoint::new(*x, z);
                match phi.mu_density(&x[..n]) {
                    Ok(m) => m * f(&p),
                    Err(e) => {
                        err.borrow_mut().get_or_insert(e);
                        0.0
                    }
                }
            })?;
            match err.into_inner() {
                Some(e) => Err(e),
                None => Ok(v),
            }
        };

        // pieces [a, b] with a flag telling which end (if any) touches z = 0
        let mut pieces: Vec<(f64, f64)> = Vec::new();
        if zl < 0.0 && zr > 0.0 {
            pieces.push((zl, 0.0));
            pieces.push((0.0, zr));
        } else {
            pieces.push((zl, zr));
        }
        let rule = GaussLegendre::new(q.n_z);
        let mut nodes: Vec<(f64, f64)> = Vec::new(); // (z, weight including |z|^β)
        for (a, b) in pieces {
            let zero_at_a = a == 0.0;
            let zero_at_b = b == 0.0;
            // panels graded toward both ends
            let edges = crate::quadrature::graded_edges_both(a, b, q.ratio, q.levels);
            for (k, w) in edges.windows(2).enumerate() {
                let (lo, hi) = (w[0], w[1]);
                let touches_zero = (k == 0 && zero_at_a) || (k + 2 == edges.len() && zero_at_b);
                if touches_zero {
                    // ∫ over [0, L] of |z|^β g(z) dz with z = L·u^{1/(β+1)}
                    let len = hi - lo;
                    let sign = if zero_at_a { 1.0 } else { -1.0 };
                    let origin = if zero_at_a { lo } else { hi };
                    let pw = 1.0 / (beta + 1.0);
                    let scale = len.powf(beta + 1.0) / (beta + 1.0);
                    for (u, wu) in rule.mapped(0.0, 1.0) {
                        let z = origin + sign * len * u.powf(pw);
                        nodes.push((z, wu * scale));
                    }
                } else {
                    for (z, wz) in rule.mapped(lo, hi) {
                        nodes.push((z, wz * z.abs().powf(beta)));
                    }
                }
            }
        }
        let vals: Vec<Result<f64>> = nodes.par_iter().map(|&(z, w)| inner(z).map(|v| v * w)).collect();
        let mut acc = 0.0;
        for v in vals {
            acc += v?;
        }
        Ok(acc)
    }

    pub fn mu_measure(&self, q: &TensorQuad) -> Result<f64> {
        self.integrate_mu(q, |_| 1.0)
    }

    /// `⨍_{S_Φ} F dμ_Φ`.
    pub fn average_mu<F>(&self, q: &TensorQuad, f: F) -> Result<f64>
    where
        F: Fn(&TPoint) -> f64 + Sync,
    {
        Ok(self.integrate_mu(q, f)? / self.mu_measure(q)?)
    }

    /// Lebesgue measure of the section in `ℝ^{n+1}`.
    pub fn lebesgue_measure(&self, q: &TensorQuad) -> Result<f64> {
        let t = &self.potential;
        let n = t.base.dim();
        let (zl, zr) = t.z_extent(self.center.z, self.height)?;
        let rule = GaussLegendre::new(q.n_z);
        let edges = crate::quadrature::graded_edges_both(zl, zr, q.ratio, q.levels);
        let mut acc = 0.0;
        for w in edges.windows(2) {
            for (z, wz) in rule.mapped(w[0], w[1]) {
                let rho = self.height - t.h.delta(self.center.z, z);
                acc += wz * integrate_sublevel(&t.base, &self.center.x[..n], rho, &q.inner, |_| 1.0)?;
            }
        }
        Ok(acc)
    }
}

/// Empirical height-doubling constant
/// `K_d ≥ max μ_Φ(S_Φ(X, 2R)) / μ_Φ(S_Φ(X, R))` over the samples.
pub fn tensor_doubling_estimate(t: &TensorPotential, samples: &[(TPoint, f64)], q: &TensorQuad) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Domain("tensor_doubling_estimate needs at least one sample".into()));
    }
    let mut best = f64::NEG_INFINITY;
    for (c, r) in samples {
        let big = TensorSection::new(t.clone(), *c, 2.0 * r)?.mu_measure(q)?;
        let small = TensorSection::new(t.clone(), *c, *r)?.mu_measure(q)?;
        best = best.max(big / small);
    }
    Ok(best)
}

/// A point violating one of the inclusions
/// `S_Φ(X0,R) ⊆ S_φ(x0,R) × S_{h_s}(z0,R) ⊆ S_Φ(X0,2R)`.
#[derive(Clone, Debug, PartialEq)]
pub struct InclusionViolation {
    pub point: TPoint,
    pub delta_phi: f64,
    pub delta_h: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InclusionReport {
    pub trials: usize,
    pub in_tensor_section: usize,
    pub in_product: usize,
    pub violations: Vec<InclusionViolation>,
}

/// Randomized membership test of the two inclusions. Points are drawn
/// uniformly from a box enclosing `S_φ(x0, 2R) × S_{h_s}(z0, 2R)`.
pub fn tensor_section_inclusions(
    t: &TensorPotential,
    center: &TPoint,
    r: f64,
    trials: usize,
    seed: u64,
) -> Result<InclusionReport> {
    let n = t.base.dim();
    let x0 = &center.x[..n];
    let mut lo = [0.0; 2];
    let mut hi = [0.0; 2];
    for i in 0..n {
        let mut u = [0.0; 2];
        u[i] = 1.0;
        hi[i] = x0[i] + 1.1 * ray_root(&t.base, x0, &u[..n], 2.0 * r)?;
        u[i] = -1.0;
        lo[i] = x0[i] - 1.1 * ray_root(&t.base, x0, &u[..n], 2.0 * r)?;
    }
    if n == 2 {
        // the extent along a coordinate axis is not the extent of the set;
        // widen to the largest ray length over a fan of directions
        let mut reach: f64 = 0.0;
        for j in 0..64 {
            let th = 2.0 * PI * j as f64 / 64.0;
            reach = reach.max(ray_root(&t.base, x0, &[th.cos(), th.sin()], 2.0 * r)?);
        }
        for i in 0..2 {
            lo[i] = x0[i] - 1.1 * reach;
            hi[i] = x0[i] + 1.1 * reach;
        }
    }
    let (zl, zr) = t.z_extent(center.z, 2.0 * r)?;
    let (zl, zr) = (center.z - 1.1 * (center.z - zl), center.z + 1.1 * (zr - center.z));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = InclusionReport { trials, in_tensor_section: 0, in_product: 0, violations: vec![] };
    for _ in 0..trials {
        let mut x = [0.0; 2];
        for i in 0..n {
            x[i] = rng.gen_range(lo[i]..hi[i]);
        }
        let z = rng.gen_range(zl..zr);
        let p = TPoint::new(x, z);
        let dphi = t.base.delta(x0, &x[..n]);
        let dh = t.h.delta(center.z, z);
        let dtot = t.delta_t(center, &p);
        let in_tensor = dtot < r;
        let in_product = dphi < r && dh < r;
        rep.in_tensor_section += usize::from(in_tensor);
        rep.in_product += usize::from(in_product);
        if (in_tensor && !in_product) || (in_product && dtot >= 2.0 * r) {
            rep.violations.push(InclusionViolation { point: p, delta_phi: dphi, delta_h: dh });
        }
    }
    Ok(rep)
}

/// `∫_S |∇^φ δ_φ(x0, ·)|² dμ_φ` together with `n·R·μ_φ(S)`.
pub fn phi_energy_bound(sec: &Section, q: &SectionQuad) -> Result<(f64, f64)> {
    let phi = &sec.potential;
    let n = phi.dim();
    let g0 = phi.gradient(&sec.center[..n]);
    let lhs = sec.integrate(q, |x| {
        let g = phi.gradient(&x[..n]);
        let d = [g[0] - g0[0], g[1] - g0[1]];
        let h = phi.hessian_unchecked(&x[..n]);
        h.inverse().quad_form(&d) * h.det()
    })?;
    let bound = n as f64 * sec.height * sec.mu_measure(q)?;
    Ok((lhs, bound))
}

/// `∫_{S_Φ} |∇^Φ δ_Φ(X0, ·)|² dμ_Φ` together with `(n+2)·K_d·R·μ_Φ(S_Φ)`.
pub fn tensor_energy_bound(sec: &TensorSection, k_d: f64, q: &TensorQuad) -> Result<(f64, f64)> {
    let t = &sec.potential;
    let phi = &t.base;
    let n = phi.dim();
    let g0 = phi.gradient(&sec.center.x[..n]);
    let hz0 = t.h.derivative(sec.center.z);
    let lhs = sec.integrate_mu(q, |p| {
        let g = phi.gradient(&p.x[..n]);
        let d = [g[0] - g0[0], g[1] - g0[1]];
        let gz = t.h.derivative(p.z) - hz0;
        t.ma_gradient_sq(p, &d, gz).unwrap_or(f64::NAN)
    })?;
    if !lhs.is_finite() {
        return Err(Error::Domain("energy integrand undefined inside the tensor section".into()));
    }
    let bound = (n as f64 + 2.0) * k_d * sec.height * sec.mu_measure(q)?;
    Ok((lhs, bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::Sym;

    #[test]
    fn interval_section_of_quadratic() {
        let phi = Potential::quad(1.0, 1).unwrap();
        let sec = build_section(&phi, &[0.0], 1.0, 100).unwrap();
        match sec.boundary {
            Boundary::Interval { xl, xr } => {
                assert!((xl + 1.0).abs() < 1e-12 && (xr - 1.0).abs() < 1e-12);
            }
            _ => panic!("expected interval"),
        }
        assert_eq!(sec.mesh.interior_count(), 100);
    }

    #[test]
    fn disk_section_radius() {
        let phi = Potential::quad(0.5, 2).unwrap();
        for r in [0.3, 1.0, 2.0] {
            let sec = build_section(&phi, &[0.2, -0.1], r, 32).unwrap();
            let Boundary::Polygon { vertices } = &sec.boundary else { panic!() };
            for v in vertices {
                let d = ((v[0] - 0.2).powi(2) + (v[1] + 0.1).powi(2)).sqrt();
                assert!((d - (2.0 * r).sqrt()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn boundary_vertices_on_level_set() {
        let phi = Potential::perturbed_quad(0.4, 2).unwrap();
        let sec = build_section(&phi, &[0.3, 0.1], 0.7, 40).unwrap();
        let Boundary::Polygon { vertices } = &sec.boundary else { panic!() };
        for v in vertices {
            assert!((phi.delta(&[0.3, 0.1], v) - 0.7).abs() <= 1e-10 * 0.7);
        }
        for (i, p) in sec.mesh.nodes.iter().enumerate() {
            if !sec.mesh.boundary[i] {
                assert!(phi.delta(&[0.3, 0.1], p) < 0.7);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let phi = Potential::quad(1.0, 1).unwrap();
        assert!(build_section(&phi, &[0.0], 0.0, 10).is_err());
        assert!(build_section(&phi, &[0.0], 1.0, 4).is_err());
    }

    #[test]
    fn half_contraction_symmetric_cases() {
        let q = SectionQuad::default();
        let phi = Potential::quad(1.0, 1).unwrap();
        let sec = build_section(&phi, &[0.0], 1.0, 10).unwrap();
        let half = sec.half_contraction(&q).unwrap();
        let (a, b) = half.interval().unwrap();
        assert!((a + 0.5).abs() < 1e-12 && (b - 0.5).abs() < 1e-12);

        let phi2 = Potential::quad(0.5, 2).unwrap();
        let sec2 = build_section(&phi2, &[1.0, 2.0], 0.5, 16).unwrap();
        let c = sec2.centroid(&q).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12 && (c[1] - 2.0).abs() < 1e-12);
        let half2 = sec2.half_contraction(&q).unwrap();
        assert!(half2.contains(&[1.0 + 0.49, 2.0]));
        assert!(!half2.contains(&[1.0 + 0.51, 2.0]));
    }

    #[test]
    fn doubling_of_quadratics() {
        let q = SectionQuad::default();
        let phi1 = Potential::quad(1.0, 1).unwrap();
        let k1 = doubling_estimate(&phi1, &[([0.0, 0.0], 1.0), ([0.5, 0.0], 0.2)], &q).unwrap();
        assert!((k1 - 2.0).abs() < 1e-10);
        let phi2 = Potential::quad(1.0, 2).unwrap();
        let k2 = doubling_estimate(&phi2, &[([0.0, 0.0], 1.0)], &q).unwrap();
        assert!((k2 - 4.0).abs() < 1e-10);
        let phia = Potential::aniso(Sym::new2(2.0, 0.7, 1.0)).unwrap();
        let ka = doubling_estimate(&phia, &[([0.3, -0.2], 0.5)], &q).unwrap();
        assert!((ka - 4.0).abs() < 1e-10);
    }

    #[test]
    fn quasi_triangle_of_squares_is_at_most_two() {
        let h = HPotential::new(0.5).unwrap();
        let k = quasi_triangle_estimate(&h, &[(vec![0.0], vec![2.0], vec![1.0]), (vec![0.0], vec![0.0], vec![1.0])]).unwrap();
        assert!((k - 2.0).abs() < 1e-14);
    }

    #[test]
    fn h_potential_basics() {
        for s in [0.2, 0.5, 0.8] {
            let h = HPotential::new(s).unwrap();
            assert_eq!(h.value(0.0), 0.0);
            assert_eq!(h.derivative(0.0), 0.0);
            let z = 0.7;
            let eps = 1e-6;
            let fd = (h.value(z + eps) - h.value(z - eps)) / (2.0 * eps);
            assert!((fd - h.derivative(z)).abs() < 1e-8);
            let fd2 = (h.derivative(z + eps) - h.derivative(z - eps)) / (2.0 * eps);
            assert!((fd2 - h.second_derivative(z)).abs() < 1e-7);
        }
        let h = HPotential::new(0.5).unwrap();
        assert!((h.delta(0.3, 1.1) - 0.5 * 0.8f64.powi(2)).abs() < 1e-15);
    }

    #[test]
    fn tensor_measure_of_product_quadratic() {
        // quad(1/2) in 1D with s = 1/2: μ_Φ = 1, δ_Φ = (x² + z²)/2, so S_Φ(0,R)
        // is the disk of radius √(2R)
        let t = TensorPotential::new(Potential::quad(0.5, 1).unwrap(), 0.5).unwrap();
        let sec = TensorSection::new(t, TPoint::new([0.0, 0.0], 0.0), 0.8).unwrap();
        let m = sec.mu_measure(&TensorQuad::default()).unwrap();
        assert!((m - PI * 1.6).abs() < 1e-8, "{m}");
    }
}
