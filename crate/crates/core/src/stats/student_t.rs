//! Student's t distribution: CDF tails through the regularized incomplete
//! beta function and the quantile by safeguarded Newton iteration.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta I_x(a, b). `one_minus_x` must equal `1 - x`;
/// passing it separately keeps precision when x is close to 1.
pub fn reg_inc_beta(a: f64, b: f64, x: f64, one_minus_x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if one_minus_x <= 0.0 {
        return 1.0;
    }
    let front = (a * x.ln() + b * one_minus_x.ln() - ln_beta(a, b)).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, one_minus_x) / b
    }
}

/// Modified Lentz evaluation of the incomplete beta continued fraction.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    const MAX_ITER: usize = 100_000;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() <= EPS {
            break;
        }
    }
    h
}

/// Density of Student's t with `dof` degrees of freedom.
pub fn t_pdf(t: f64, dof: f64) -> f64 {
    let ln_norm = ln_gamma((dof + 1.0) / 2.0) - ln_gamma(dof / 2.0) - 0.5 * (dof * PI).ln();
    (ln_norm - (dof + 1.0) / 2.0 * (t * t / dof).ln_1p()).exp()
}

/// Upper tail P(T > t).
pub fn t_sf(t: f64, dof: f64) -> f64 {
    let t2 = t * t;
    let denom = dof + t2;
    let tail = 0.5 * reg_inc_beta(dof / 2.0, 0.5, dof / denom, t2 / denom);
    if t >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

pub fn t_cdf(t: f64, dof: f64) -> f64 {
    t_sf(-t, dof)
}

/// Inverse CDF of Student's t.
///
/// Both tails are solved as `P(T > t) = q` with `q <= 1/2`; for `prob > 1/2`
/// the complement `1 - prob` is exact in floating point, so quantiles far in
/// the upper tail keep full relative precision.
pub fn t_quantile(prob: f64, dof: u64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::param(format!("probability {prob} not in (0, 1)")));
    }
    if dof == 0 {
        return Err(Error::param("degrees of freedom must be at least 1"));
    }
    if prob == 0.5 {
        return Ok(0.0);
    }
    let dof = dof as f64;
    Ok(if prob > 0.5 {
        upper_quantile(1.0 - prob, dof)
    } else {
        -upper_quantile(prob, dof)
    })
}

/// Solves `P(T > t) = q` for `t > 0`, `0 < q < 1/2`.
fn upper_quantile(q: f64, dof: f64) -> f64 {
    let target = q.ln();
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while t_sf(hi, dof) > q {
        lo = hi;
        hi *= 2.0;
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..500 {
        let s = t_sf(t, dof);
        if s > q {
            lo = t;
        } else {
            hi = t;
        }
        // Newton on ln S(t), whose slope is -pdf / S
        let step = (s.ln() - target) * s / t_pdf(t, dof);
        let mut next = t + step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        }
        if (next - t).abs() <= 4.0 * f64::EPSILON * t || hi - lo <= 4.0 * f64::EPSILON * hi {
            return next;
        }
        t = next;
    }
    t
}
