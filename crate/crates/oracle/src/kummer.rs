//! Confluent hypergeometric series and the analytic su(1,1) eigenfunction.

use crate::{OracleError, Result, C64};
use num_bigint::BigInt;
use num_traits::{Float, One, Signed, ToPrimitive, Zero};

/// Above this |x| the series terms are accumulated as complex logarithms.
const LOG_SPACE_THRESHOLD: f64 = 10.0;

/// Kummer's function M(a, b, x) = sum_n (a)_n x^n / ((b)_n n!).
///
/// Summation stops once two consecutive terms fall below 1e-16 of the
/// partial sum, after the terms have started to decrease.
pub fn kummer_series(a: C64, b: C64, x: C64, max_terms: usize) -> Result<C64> {
    if b.im == 0.0 && b.re <= 0.0 && b.re.fract() == 0.0 {
        return Err(OracleError::PoleInB(b));
    }
    if x == C64::new(0.0, 0.0) {
        return Ok(C64::new(1.0, 0.0));
    }
    let log_space = x.norm() > LOG_SPACE_THRESHOLD;
    let mut sum = C64::new(1.0, 0.0);
    let mut term = C64::new(1.0, 0.0);
    let mut log_term = C64::new(0.0, 0.0);
    let mut small_run = 0;
    let mut last = 1.0;
    for n in 0..max_terms {
        let nf = n as f64;
        let an = a + nf;
        if an == C64::new(0.0, 0.0) {
            // (a)_n vanishes from here on: the series terminates.
            return Ok(sum);
        }
        if log_space {
            log_term += an.ln() - (b + nf).ln() - (nf + 1.0).ln() + x.ln();
            term = log_term.exp();
        } else {
            term *= an / ((b + nf) * (nf + 1.0)) * x;
        }
        sum += term;
        last = term.norm();
        let past_peak = nf + 1.0 > x.norm() + a.norm();
        if past_peak && last <= 1e-16 * sum.norm() {
            small_run += 1;
            if small_run >= 2 {
                return Ok(sum);
            }
        } else {
            small_run = 0;
        }
    }
    Err(OracleError::NoConvergence { terms: max_terms, last_term: last })
}

/// Weight-basis coefficients of exp(c eta) M(a, 2k, c1 eta), the analytic
/// solution of (u K- + v K+ + w K3) psi = z psi in the Barut-Girardello
/// representation.
#[derive(Debug, Clone)]
pub struct KummerExpansion {
    /// Coefficients c_m on the discrete-series basis |m; k>, scaled so c_0 = 1.
    pub coefficients: Vec<C64>,
    /// Rounding bound for each coefficient from cancellation in the
    /// Cauchy product, in the same scale.
    pub rounding_bound: Vec<f64>,
    /// Square root of w^2 - 4uv on the branch with nonnegative real part.
    pub root: C64,
    pub a: C64,
    pub c: C64,
    pub c1: C64,
}

impl KummerExpansion {
    /// Coefficients divided by their Euclidean norm.
    pub fn normalized(&self) -> Vec<C64> {
        let norm = self.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        self.coefficients.iter().map(|c| c / norm).collect()
    }

    /// Largest rounding bound relative to the coefficient norm.
    pub fn worst_relative_rounding(&self) -> f64 {
        let norm = self.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        self.rounding_bound.iter().cloned().fold(0.0, f64::max) / norm
    }
}

/// Complex fixed-point number: (re + i im) * 2^-bits.
#[derive(Clone)]
struct Fixed {
    re: BigInt,
    im: BigInt,
}

fn big_of(x: f64, bits: u32) -> BigInt {
    if x == 0.0 {
        return BigInt::zero();
    }
    let (mantissa, exp, sign) = x.integer_decode();
    let m = BigInt::from(mantissa) * BigInt::from(sign);
    let shift = exp as i64 + bits as i64;
    if shift >= 0 {
        m << shift as usize
    } else {
        m >> (-shift) as usize
    }
}

/// (mantissa, binary exponent) with value mantissa * 2^exponent.
fn split(x: &BigInt) -> (f64, i64) {
    let len = x.bits() as i64;
    let drop = (len - 60).max(0);
    let top = (x >> drop as usize).to_f64().unwrap_or(0.0);
    (top, drop)
}

impl Fixed {
    fn from_c64(z: C64, bits: u32) -> Self {
        Fixed { re: big_of(z.re, bits), im: big_of(z.im, bits) }
    }

    fn mul(&self, o: &Fixed, bits: u32) -> Fixed {
        Fixed {
            re: (&self.re * &o.re - &self.im * &o.im) >> bits as usize,
            im: (&self.re * &o.im + &self.im * &o.re) >> bits as usize,
        }
    }

    fn div_int(&self, n: u64) -> Fixed {
        Fixed { re: &self.re / n, im: &self.im / n }
    }

    fn div_real(&self, d: &BigInt, bits: u32) -> Fixed {
        Fixed { re: (&self.re << bits as usize) / d, im: (&self.im << bits as usize) / d }
    }

    fn add(&mut self, o: &Fixed) {
        self.re += &o.re;
        self.im += &o.im;
    }

    fn abs_bound(&self) -> BigInt {
        self.re.abs() + self.im.abs()
    }

    /// Value times e^{log_scale}, evaluated without leaving f64 range.
    fn to_c64_scaled(&self, bits: u32, log_scale: f64) -> C64 {
        let part = |x: &BigInt| {
            if x.is_zero() {
                return 0.0;
            }
            let (top, e) = split(x);
            top * ((e - bits as i64) as f64 * std::f64::consts::LN_2 + log_scale).exp()
        };
        C64::new(part(&self.re), part(&self.im))
    }
}

/// Expands Phi(eta) = exp(c eta) M(a, b, c1 eta) with
/// a = k + z/s, b = 2k, c = -(w + s)/(2u), c1 = s/u, s = sqrt(w^2 - 4uv),
/// and converts the Taylor coefficients Phi_m to weight-basis amplitudes
/// c_m = Phi_m sqrt(m! (2k)_m).
///
/// The Cauchy product cancels heavily (terms grow like (|c| + |c1|)^m while
/// the sum decays), so both series and the product are carried in
/// big-integer fixed point with several thousand fractional bits. The
/// inputs a, c, c1 are the f64 values above, converted exactly.
pub fn su11_weight_coefficients(
    k: f64,
    u: C64,
    v: C64,
    w: C64,
    z: C64,
    terms: usize,
) -> Result<KummerExpansion> {
    if u.norm() == 0.0 {
        return Err(OracleError::Degenerate("u = 0".into()));
    }
    let mut s = (w * w - 4.0 * u * v).sqrt();
    if s.re < 0.0 {
        s = -s;
    }
    if s.norm() == 0.0 {
        return Err(OracleError::Degenerate("w^2 = 4uv".into()));
    }
    let a = k + z / s;
    let b = 2.0 * k;
    let c = -(w + s) / (2.0 * u);
    let c1 = s / u;

    // enough fractional bits that the smallest product term stays resolved
    let n = terms.max(2) as f64;
    let growth = (c.norm() + c1.norm() + a.norm() + 2.0).log2();
    let bits = (256.0 + n * (n.log2() + growth.max(1.0))) as u32;

    let one = Fixed { re: BigInt::one() << bits as usize, im: BigInt::zero() };
    let cf = Fixed::from_c64(c, bits);
    let c1f = Fixed::from_c64(c1, bits);
    let af = Fixed::from_c64(a, bits);
    let bf = big_of(b, bits);
    let mut exp_part = Vec::with_capacity(terms);
    let mut t = one.clone();
    for i in 0..terms {
        if i > 0 {
            t = t.mul(&cf, bits).div_int(i as u64);
        }
        exp_part.push(t.clone());
    }
    let mut m_part = Vec::with_capacity(terms);
    let mut t = one;
    for i in 0..terms {
        if i > 0 {
            // a + n and b + n formed exactly: rounding them would be
            // amplified by the cancellation
            let shift = BigInt::from(i - 1) << bits as usize;
            let mut an = af.clone();
            an.re += &shift;
            let bn = &bf + &shift;
            t = t.mul(&an, bits).mul(&c1f, bits).div_int(i as u64).div_real(&bn, bits);
        }
        m_part.push(t.clone());
    }

    let mut coefficients = Vec::with_capacity(terms);
    let mut rounding_bound = Vec::with_capacity(terms);
    let mut log_scale = 0.0;
    let ulp = 2f64.powi(-(bits as i32 - 64));
    for m in 0..terms {
        if m > 0 {
            let mf = m as f64;
            log_scale += 0.5 * (mf * (b + mf - 1.0)).ln();
        }
        let mut phi = Fixed { re: BigInt::zero(), im: BigInt::zero() };
        let mut abs_sum = BigInt::zero();
        for i in 0..=m {
            let prod = exp_part[m - i].mul(&m_part[i], bits);
            abs_sum += prod.abs_bound();
            phi.add(&prod);
        }
        coefficients.push(phi.to_c64_scaled(bits, log_scale));
        let bound = Fixed { re: abs_sum, im: BigInt::zero() }.to_c64_scaled(bits, log_scale).re;
        rounding_bound.push(4.0 * (m as f64 + 1.0) * (ulp * bound + f64::EPSILON * coefficients[m].norm()));
    }
    Ok(KummerExpansion { coefficients, rounding_bound, root: s, a, c, c1 })
}
