//! Log survival probabilities `ln P(X >= n)` for the support distribution:
//! the exact Poisson-binomial, and its normal and Poisson approximations.
//!
//! Everything stays in log space so ranks far beyond the range of a double
//! (z-scores in the hundreds) are still finite.

use crate::num::Real;

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

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma<T: Real>(x: T) -> T {
    let pi = T::c(std::f64::consts::PI);
    if x < T::c(0.5) {
        return (pi / (pi * x).sin().abs()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut a = T::c(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a = a + T::c(c) / (x + T::c(i as f64));
    }
    let t = x + T::c(LANCZOS_G + 0.5);
    T::c(0.5) * (T::c(2.0) * pi).ln() + (x + T::c(0.5)) * t.ln() - t + a.ln()
}

/// `ln(1 - e^x)` for `x <= 0`.
pub fn ln_1m_exp<T: Real>(x: T) -> T {
    if x > -T::c(std::f64::consts::LN_2) {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `ln erfc(x)`, accurate for arbitrarily large positive `x`.
pub fn ln_erfc<T: Real>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    if x < T::zero() {
        let e = ln_erfc(-x).exp();
        return (T::c(2.0) - e).ln();
    }
    if x == T::infinity() {
        return T::neg_infinity();
    }
    let sqrt_pi = T::c(std::f64::consts::PI).sqrt();
    let eps = T::epsilon();
    if x < T::c(2.0) {
        // erf(x) = 2/√π e^{-x²} Σ 2^n x^{2n+1} / (1·3·…·(2n+1))
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        while term > eps * sum {
            n += 1.0;
            term = term * T::c(2.0) * x2 / T::c(2.0 * n + 1.0);
            sum = sum + term;
        }
        let erf = T::c(2.0) / sqrt_pi * (-x2).exp() * sum;
        return (T::one() - erf).ln();
    }
    // erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …)))), Lentz
    let tiny = T::min_positive_value();
    let mut f = x;
    let mut c = x;
    let mut d = T::zero();
    for n in 1..10_000 {
        let a = T::c(n as f64 * 0.5);
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let delta = c * d;
        f = f * delta;
        if (delta - T::one()).abs() < eps {
            break;
        }
    }
    -x * x - sqrt_pi.ln() - f.ln()
}

/// Continuity-corrected z-score `(n - 0.5 - μ) / σ`.
pub fn normal_z<T: Real>(mu: T, sigma2: T, n: u64) -> T {
    (T::count(n) - T::c(0.5) - mu) / sigma2.sqrt()
}

/// `ln(1 - Φ(z))`.
pub fn ln_normal_sf<T: Real>(z: T) -> T {
    ln_erfc(z / T::c(std::f64::consts::SQRT_2)) - T::c(std::f64::consts::LN_2)
}

/// Normal approximation with continuity correction. A degenerate variance
/// gives survival 1 if `n <= μ`, else 0.
pub fn log_survival_normal<T: Real>(mu: T, sigma2: T, n: u64) -> T {
    if n == 0 {
        return T::zero();
    }
    if !(sigma2 > T::zero()) {
        return if T::count(n) <= mu { T::zero() } else { T::neg_infinity() };
    }
    ln_normal_sf(normal_z(mu, sigma2, n))
}

/// `ln P(Pois(μ) >= n)`.
pub fn log_survival_poisson<T: Real>(mu: T, n: u64) -> T {
    if n == 0 {
        return T::zero();
    }
    if !(mu > T::zero()) {
        return T::neg_infinity();
    }
    let eps = T::epsilon() * T::c(0.1);
    let ln_term = |k: u64| -mu + T::count(k) * mu.ln() - ln_gamma(T::count(k) + T::one());
    if T::count(n) > mu {
        // Σ_{k>=n} t_k = t_n (1 + μ/(n+1) + μ²/((n+1)(n+2)) + …)
        let mut sum = T::one();
        let mut term = T::one();
        let mut k = n;
        loop {
            k += 1;
            term = term * mu / T::count(k);
            sum = sum + term;
            if term < eps * sum {
                break;
            }
        }
        ln_term(n) + sum.ln()
    } else {
        // 1 - Σ_{k<n} t_k, summed downwards from t_{n-1}
        let mut sum = T::one();
        let mut term = T::one();
        let mut k = n - 1;
        while k > 0 {
            term = term * T::count(k) / mu;
            sum = sum + term;
            k -= 1;
            if term < eps * sum {
                break;
            }
        }
        ln_1m_exp((ln_term(n - 1) + sum.ln()).min(T::zero()))
    }
}

/// `ln P(Σ Bernoulli(p_i) >= n)` by the count DP truncated at `n`, in log
/// space. O(n m).
pub fn log_survival_exact<T: Real>(probs: &[T], n: usize) -> T {
    if n == 0 {
        return T::zero();
    }
    if n > probs.len() {
        return T::neg_infinity();
    }
    let ninf = T::neg_infinity();
    // lf[j] = ln P(count = j) for j < n; top = ln P(count >= n)
    let mut lf = vec![ninf; n];
    lf[0] = T::zero();
    let mut top = ninf;
    for (i, &p) in probs.iter().enumerate() {
        let lp = p.ln();
        let lq = (-p).ln_1p();
        top = top.ln_add_exp(lf[n - 1] + lp);
        for j in (1..n.min(i + 2)).rev() {
            lf[j] = (lf[j] + lq).ln_add_exp(lf[j - 1] + lp);
        }
        lf[0] = lf[0] + lq;
    }
    top.min(T::zero())
}
