//! Special functions used by the closed-form bath kernels.

use std::f64::consts::PI;

/// Dawson integral F(x) = exp(-x^2) * int_0^x exp(t^2) dt.
pub fn dawson(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax < 1.0 {
        dawson_series(ax)
    } else if ax < 10.0 {
        dawson_rybicki(ax)
    } else {
        dawson_asymptotic(ax)
    };
    v.copysign(x)
}

fn dawson_series(x: f64) -> f64 {
    // F(x) = sum_k (-1)^k 2^k x^(2k+1) / (2k+1)!!
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for k in 1..60 {
        term *= -2.0 * x2 / (2 * k + 1) as f64;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

fn dawson_rybicki(x: f64) -> f64 {
    // Rybicki's sampling formula; aliasing error ~ exp(-(pi/2h)^2).
    const H: f64 = 0.2;
    const REACH: f64 = 9.0;
    let lo = ((x - REACH) / H).floor() as i64;
    let hi = ((x + REACH) / H).ceil() as i64;
    let mut sum = 0.0;
    for n in lo..=hi {
        if n % 2 == 0 {
            continue;
        }
        let d = x - n as f64 * H;
        sum += (-d * d).exp() / n as f64;
    }
    sum / PI.sqrt()
}

fn dawson_asymptotic(x: f64) -> f64 {
    // F(x) ~ sum_k (2k-1)!! / (2^(k+1) x^(2k+1))
    let inv2x2 = 1.0 / (2.0 * x * x);
    let mut term = 1.0 / (2.0 * x);
    let mut sum = term;
    for k in 1..200 {
        let next = term * (2 * k - 1) as f64 * inv2x2;
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// Gaussian-cutoff moments
/// C_n(t) = int_0^inf w^n exp(-a w^2) cos(w t) dw and
/// S_n(t) = int_0^inf w^n exp(-a w^2) sin(w t) dw, for n = 0..=nmax.
///
/// Small |t| uses the exact recurrence; large |t| uses the integration-by-parts
/// asymptotic series, which avoids the cancellation the recurrence suffers for
/// the power-law tails.
pub fn gaussian_moments(a: f64, t: f64, nmax: usize) -> (Vec<f64>, Vec<f64>) {
    let sign = if t < 0.0 { -1.0 } else { 1.0 };
    let t = t.abs();
    let x = t / (2.0 * a.sqrt());
    let (c, mut s) = if x > 6.0 + 0.5 * nmax as f64 {
        moments_asymptotic(a, t, nmax)
    } else {
        moments_recurrence(a, t, nmax)
    };
    for v in s.iter_mut() {
        *v *= sign;
    }
    (c, s)
}

fn moments_recurrence(a: f64, t: f64, nmax: usize) -> (Vec<f64>, Vec<f64>) {
    let ra = a.sqrt();
    let x = t / (2.0 * ra);
    let mut c = vec![0.0; nmax + 1];
    let mut s = vec![0.0; nmax + 1];
    c[0] = 0.5 * PI.sqrt() / ra * (-x * x).exp();
    s[0] = dawson(x) / ra;
    for n in 0..nmax {
        let nf = n as f64;
        let (cm, sm) = if n > 0 { (c[n - 1], s[n - 1]) } else { (0.0, 0.0) };
        let delta = if n == 0 { 1.0 } else { 0.0 };
        c[n + 1] = (delta + nf * cm - t * s[n]) / (2.0 * a);
        s[n + 1] = (nf * sm + t * c[n]) / (2.0 * a);
    }
    (c, s)
}

fn moments_asymptotic(a: f64, t: f64, nmax: usize) -> (Vec<f64>, Vec<f64>) {
    // f(w) = w^n exp(-a w^2) = sum_j (-a)^j w^(n+2j) / j!
    // int f sin(wt) ~ sum_k (-1)^k f^(2k)(0) / t^(2k+1)
    // int f cos(wt) ~ sum_k (-1)^(k+1) f^(2k+1)(0) / t^(2k+2)
    // f^(m)(0) = m! (-a)^j / j! when m = n + 2j.
    let mut c = vec![0.0; nmax + 1];
    let mut s = vec![0.0; nmax + 1];
    for n in 0..=nmax {
        // ln|term_j| evaluated incrementally to avoid factorial overflow.
        let mut sum = 0.0;
        let mut prev = f64::INFINITY;
        for j in 0..400usize {
            let m = n + 2 * j;
            let lg = ln_factorial(m) + j as f64 * a.ln() - ln_factorial(j) - (m + 1) as f64 * t.ln();
            let mag = lg.exp();
            if mag > prev {
                break;
            }
            prev = mag;
            // sign: (-a)^j gives (-1)^j; the k-dependent sign below.
            let sj = if j % 2 == 0 { 1.0 } else { -1.0 };
            let term = if m % 2 == 0 {
                let k = m / 2;
                let sk = if k % 2 == 0 { 1.0 } else { -1.0 };
                sk * sj * mag
            } else {
                let k = (m - 1) / 2;
                let sk = if k % 2 == 0 { -1.0 } else { 1.0 };
                sk * sj * mag
            };
            sum += term;
            if mag < 1e-18 * sum.abs() {
                break;
            }
        }
        if n % 2 == 0 {
            s[n] = sum;
        } else {
            c[n] = sum;
        }
    }
    // The complementary parts are Gaussian-small; evaluate them by recurrence
    // where no cancellation occurs.
    let ra = a.sqrt();
    let x = t / (2.0 * ra);
    let g = (-x * x).exp();
    if g > 0.0 {
        // C_even and S_odd are exp(-x^2) times polynomials in t.
        let mut ce = vec![0.0; nmax + 1];
        let mut so = vec![0.0; nmax + 1];
        ce[0] = 0.5 * PI.sqrt() / ra * g;
        for n in 0..nmax {
            let nf = n as f64;
            if n % 2 == 0 {
                // S_{n+1} = (n S_{n-1} + t C_n) / 2a, uses even C and odd S only.
                let sm = if n > 0 { so[n - 1] } else { 0.0 };
                so[n + 1] = (nf * sm + t * ce[n]) / (2.0 * a);
            } else {
                // C_{n+1} = (n C_{n-1} - t S_n) / 2a
                ce[n + 1] = (nf * ce[n - 1] - t * so[n]) / (2.0 * a);
            }
        }
        for n in 0..=nmax {
            if n % 2 == 0 {
                c[n] = ce[n];
            } else {
                s[n] = so[n];
            }
        }
    }
    (c, s)
}

fn ln_factorial(n: usize) -> f64 {
    statrs::function::factorial::ln_factorial(n as u64)
}

/// Gamma function.
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;

    fn dawson_quad(x: f64) -> f64 {
        let v = integrate(|t| (t * t - x * x).exp(), 0.0, x, 1e-15, 1e-14).unwrap();
        v
    }

    #[test]
    fn dawson_matches_quadrature() {
        for &x in &[0.01, 0.3, 0.99, 1.0, 1.5, 2.0, 3.7, 5.0, 7.5, 9.99, 10.0, 14.0, 25.0] {
            let a = dawson(x);
            let b = dawson_quad(x);
            assert!((a - b).abs() < 1e-13 * b.abs(), "x={x}: {a} vs {b}");
        }
        assert!((dawson(0.9241388730) - 0.5410442246).abs() < 1e-9);
        assert_eq!(dawson(-2.0), -dawson(2.0));
    }

    #[test]
    fn moments_match_quadrature() {
        let a = 1.0 / 400.0;
        for &t in &[0.0, 0.05, 0.3, 0.7, 1.3, 2.5, 5.0, 10.0] {
            let (c, s) = gaussian_moments(a, t, 4);
            for n in 0..=4 {
                let scale = 20f64.powi(n as i32 + 1);
                let fc = |w: f64| w.powi(n as i32) * (-a * w * w).exp() * (w * t).cos();
                let fs = |w: f64| w.powi(n as i32) * (-a * w * w).exp() * (w * t).sin();
                let qc = crate::quad::integrate_oscillatory(fc, 0.0, 200.0, t, 1e-13 * scale, 1e-12).unwrap();
                let qs = crate::quad::integrate_oscillatory(fs, 0.0, 200.0, t, 1e-13 * scale, 1e-12).unwrap();
                assert!((c[n] - qc).abs() < 1e-10 * scale.max(qc.abs()) , "C{n}({t}): {} vs {qc}", c[n]);
                assert!((s[n] - qs).abs() < 1e-10 * scale.max(qs.abs()), "S{n}({t}): {} vs {qs}", s[n]);
            }
        }
    }

    #[test]
    fn asymptotic_tails_are_relatively_accurate() {
        // Large-t tails: compare both branches in the overlap region.
        let a = 1.0 / 400.0;
        for &t in &[0.65, 0.8, 1.0] {
            let (c1, s1) = moments_recurrence(a, t, 3);
            let (c2, s2) = moments_asymptotic(a, t, 3);
            for n in 0..=3 {
                let (x, y) = if n % 2 == 0 { (s1[n], s2[n]) } else { (c1[n], c2[n]) };
                assert!((x - y).abs() < 1e-9 * y.abs(), "n={n} t={t}: {x} vs {y}");
            }
        }
    }
}
