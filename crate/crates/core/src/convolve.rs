//! Trapezoidal memory integrals on a uniform grid with truncated kernels.

/// Cumulative causal convolution out[n] ~ int_0^{t_n} K(t_n - s) f(s) ds by the
/// trapezoid rule. `kernel[d]` is K at lag d; lags >= kernel.len() are zero.
pub fn causal(kernel: &[f64], f: &[f64], dt: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate().skip(1) {
        *o = causal_at(kernel, f, dt, i);
    }
    out
}

/// Single value of [`causal`] at index `n`, using samples f[0..=n].
pub fn causal_at(kernel: &[f64], f: &[f64], dt: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let lo = (n + 1).saturating_sub(kernel.len());
    let mut acc = 0.0;
    for j in lo..=n {
        acc += kernel[n - j] * f[j];
    }
    let k_n = kernel.get(n).copied().unwrap_or(0.0);
    acc -= 0.5 * (k_n * f[0] + kernel.first().copied().unwrap_or(0.0) * f[n]);
    acc * dt
}

/// Cumulative 2-D trapezoid of N_ab(t) = int int_{[0,t]^2} k(v - u) a(u) b(v) du dv,
/// where k(d) = kernel[d] for d >= 0 and parity * kernel[-d] for d < 0.
/// Cost O(n * memory).
pub fn double(kernel: &[f64], parity: f64, a: &[f64], b: &[f64], dt: f64) -> Vec<f64> {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let mut out = vec![0.0; n];
    if n == 0 || kernel.is_empty() {
        return out;
    }
    let mem = kernel.len();
    let k = |d: isize| -> f64 {
        let i = d.unsigned_abs();
        if i >= mem {
            0.0
        } else if d < 0 {
            parity * kernel[i]
        } else {
            kernel[i]
        }
    };
    let k0 = kernel[0];
    let (a0, b0) = (a[0], b[0]);
    let mut u = a0 * b0 * k0;
    let mut r0 = a0 * k0 * b0;
    let mut c0 = b0 * k0 * a0;
    for m in 1..n {
        let lo = (m + 1).saturating_sub(mem);
        // r_m = sum_{j<=m} k(j-m) b_j ; c_m = sum_{i<=m} k(m-i) a_i
        let mut r = 0.0;
        let mut c = 0.0;
        for j in lo..=m {
            let kd = kernel[m - j];
            r += kd * b[j];
            c += kd * a[j];
        }
        r *= parity;
        // the j = m term has lag 0, which carries no parity factor
        r += (1.0 - parity) * k0 * b[m];
        u += a[m] * r + b[m] * c - a[m] * b[m] * k0;
        r0 += a0 * k(m as isize) * b[m];
        c0 += b0 * k(-(m as isize)) * a[m];
        let km = k(m as isize);
        let kmm = k(-(m as isize));
        let s = u - 0.5 * (r0 + a[m] * r + c0 + b[m] * c)
            + 0.25 * (k0 * a0 * b0 + km * a0 * b[m] + kmm * a[m] * b0 + k0 * a[m] * b[m]);
        out[m] = s * dt * dt;
    }
    out
}
