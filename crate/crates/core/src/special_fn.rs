//! Gamma, modified Bessel functions of the second kind, and the trace
//! constants of the fractional extension problems.

use std::f64::consts::PI;

use crate::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Taylor coefficients of `1/Γ(z) = Σ_{k≥1} a_k z^k` (index = power of z).
const RGAMMA_TAYLOR: [f64; 29] = [
    0.0,
    1.0,
    0.577_215_664_901_532_860_61,
    -0.655_878_071_520_253_881_08,
    -0.042_002_635_034_095_235_529,
    0.166_538_611_382_291_489_5,
    -0.042_197_734_555_544_336_748,
    -0.009_621_971_527_876_973_562_1,
    0.007_218_943_246_663_099_542_4,
    -0.001_165_167_591_859_065_112_1,
    -0.000_215_241_674_114_950_972_82,
    0.000_128_050_282_388_116_186_15,
    -0.000_020_134_854_780_788_238_656,
    -1.250_493_482_142_670_657_3e-6,
    1.133_027_231_981_695_882_4e-6,
    -2.056_338_416_977_607_103_5e-7,
    6.116_095_104_481_415_817_9e-9,
    5.002_007_644_469_222_930_1e-9,
    -1.181_274_570_487_020_144_6e-9,
    1.043_426_711_691_100_510_5e-10,
    7.782_263_439_905_071_254e-12,
    -3.696_805_618_642_205_708_2e-12,
    5.100_370_287_454_475_979e-13,
    -2.058_326_053_566_506_783_2e-14,
    -5.348_122_539_423_017_982_4e-15,
    1.226_778_628_238_260_790_2e-15,
    -1.181_259_301_697_458_769_5e-16,
    1.186_692_254_751_600_332_6e-18,
    1.412_380_655_318_031_781_6e-18,
];

/// `sin(πx)` with exact argument reduction, so that zeros at the integers
/// are reproduced without cancellation.
fn sin_pi(x: f64) -> f64 {
    let n = x.round();
    let f = x - n;
    let s = (PI * f).sin();
    if (n as i64) % 2 == 0 {
        s
    } else {
        -s
    }
}

/// Euler's gamma function.
///
/// Lanczos approximation for `x ≥ 1/2`, reflection formula below.
pub fn gamma(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("gamma({x})")));
    }
    if x <= 0.0 && x == x.floor() {
        return Err(Error::Domain(format!("gamma has a pole at {x}")));
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        PI / (sin_pi(x) * gamma_unchecked(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS_COEFFS[0];
        for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// Temme's auxiliary functions for `|mu| ≤ 1/2`:
/// `(Γ₁, Γ₂, 1/Γ(1+mu), 1/Γ(1−mu))`.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    // Γ₁ = −Σ_{k even} a_k mu^{k−2},  Γ₂ = Σ_{k odd} a_k mu^{k−1}
    let mu2 = mu * mu;
    let mut gam1 = 0.0;
    let mut gam2 = 0.0;
    let mut pow = 1.0;
    for k in (1..RGAMMA_TAYLOR.len()).step_by(2) {
        gam2 += RGAMMA_TAYLOR[k] * pow;
        if k + 1 < RGAMMA_TAYLOR.len() {
            gam1 -= RGAMMA_TAYLOR[k + 1] * pow;
        }
        pow *= mu2;
    }
    let gampl = gam2 - mu * gam1;
    let gammi = gam2 + mu * gam1;
    (gam1, gam2, gampl, gammi)
}

const BESSEL_EPS: f64 = 1e-17;
const BESSEL_MAXIT: usize = 10_000;

/// Returns `(K_mu(x), K_{mu+1}(x))` for `|mu| ≤ 1/2`, `x > 0`.
fn bessel_k_temme(mu: f64, x: f64) -> (f64, f64) {
    let mu2 = mu * mu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    if x < 2.0 {
        let x2 = 0.5 * x;
        let pimu = PI * mu;
        let fact = if pimu.abs() < 1e-15 { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = mu * d;
        let fact2 = if e.abs() < 1e-8 {
            1.0 + e * e / 6.0
        } else {
            e.sinh() / e
        };
        let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dd = x2 * x2;
        let mut sum1 = p;
        for i in 1..=BESSEL_MAXIT {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - mu2);
            c *= dd / fi;
            p /= fi - mu;
            q /= fi + mu;
            let del = c * ff;
            sum += del;
            let del1 = c * p - fi * del;
            sum1 += del1;
            if del.abs() < sum.abs() * BESSEL_EPS {
                break;
            }
        }
        (sum, sum1 * xi2)
    } else {
        // Steed's continued fraction CF2 with Thompson–Barnett normalisation.
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut delh = d;
        let mut h = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - mu2;
        let mut c = a1;
        let mut q = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 2..=BESSEL_MAXIT {
            let fi = i as f64;
            a -= 2.0 * (fi - 1.0);
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < BESSEL_EPS {
                break;
            }
        }
        let h = a1 * h;
        let kmu = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
        let k1 = kmu * (mu + x + 0.5 - h) * xi;
        (kmu, k1)
    }
}

/// Modified Bessel function of the second kind `K_ν(r)`.
///
/// Accepts `|ν| ≤ 2` (using `K_{−ν} = K_ν`) and `r > 0`. Small arguments use
/// Temme's series, large ones Steed's continued fraction; orders above 1/2
/// are reached by upward recurrence, which is stable for `K`.
pub fn bessel_k(nu: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("bessel_k requires r > 0, got {r}")));
    }
    let nu = nu.abs();
    if !(nu <= 2.0) {
        return Err(Error::Domain(format!("bessel_k order {nu} outside [0, 2]")));
    }
    let steps = (nu + 0.5).floor() as usize;
    let mu = nu - steps as f64;
    let (mut k_mu, mut k_next) = bessel_k_temme(mu, r);
    let xi2 = 2.0 / r;
    for i in 1..=steps {
        let k = (mu + i as f64) * xi2 * k_next + k_mu;
        k_mu = k_next;
        k_next = k;
    }
    Ok(k_mu)
}

/// Constants of the fractional extension problems for a given `s ∈ (0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FracParams {
    pub s: f64,
    /// Weight exponent `a = 1 − 2s` of the divergence-form extension.
    pub a: f64,
    /// Neumann trace constant of the nondivergence extension,
    /// `d_s = s^{2s} Γ(1−s) / Γ(1+s)`.
    pub d_s: f64,
    /// Neumann trace constant of the divergence extension,
    /// `c_s = Γ(1−s) / (4^{s−1/2} Γ(s))`.
    pub c_s: f64,
}

impl FracParams {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!("fractional order s = {s} must lie in (0, 1)")));
        }
        let g1ms = gamma_unchecked(1.0 - s);
        let d_s = s.powf(2.0 * s) * g1ms / gamma_unchecked(1.0 + s);
        let c_s = g1ms / (4f64.powf(s - 0.5) * gamma_unchecked(s));
        let p = Self { s, a: 1.0 - 2.0 * s, d_s, c_s };
        debug_assert!(p.identity_residual() < 1e-12, "c_s/d_s identity broken at s = {s}");
        Ok(p)
    }

    /// `(2s)^{2s−1}`, the energy ratio between the `z`- and `y`-forms.
    pub fn z_to_y_factor(&self) -> f64 {
        (2.0 * self.s).powf(2.0 * self.s - 1.0)
    }

    /// Relative residual of `c_s = d_s / (2s)^{2s−1}`.
    pub fn identity_residual(&self) -> f64 {
        ((self.d_s / self.z_to_y_factor() - self.c_s) / self.c_s).abs()
    }
}

/// Convenience wrapper around [`FracParams::new`].
pub fn frac_params(s: f64) -> Result<FracParams> {
    FracParams::new(s)
}
