//! Log-factorials and generalized Laguerre polynomials.

use std::sync::OnceLock;

const TABLE: usize = 512;

fn table() -> &'static [f64] {
    static T: OnceLock<Vec<f64>> = OnceLock::new();
    T.get_or_init(|| {
        let mut t = vec![0.0; TABLE];
        for n in 1..TABLE {
            t[n] = t[n - 1] + (n as f64).ln();
        }
        t
    })
}

/// ln(n!)
pub fn ln_factorial(n: usize) -> f64 {
    if n < TABLE {
        table()[n]
    } else {
        let t = table();
        let mut acc = t[TABLE - 1];
        for k in TABLE..=n {
            acc += (k as f64).ln();
        }
        acc
    }
}

/// L_0^{(k)}(x) .. L_n^{(k)}(x) by the three-term recurrence.
pub fn laguerre_all(n: usize, k: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n == 0 {
        return out;
    }
    let k = k as f64;
    out.push(1.0 + k - x);
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + k - x) * out[j] - (jf + k) * out[j - 1]) / (jf + 1.0);
        out.push(next);
    }
    out
}

pub fn laguerre(n: usize, k: usize, x: f64) -> f64 {
    laguerre_all(n, k, x)[n]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorials() {
        assert_eq!(ln_factorial(0), 0.0);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-13);
        let big: f64 = (1..=600).map(|k| (k as f64).ln()).sum();
        assert!((ln_factorial(600) - big).abs() < 1e-9);
    }

    #[test]
    fn laguerre_low_orders() {
        let x = 0.7;
        assert!((laguerre(2, 0, x) - (x * x - 4.0 * x + 2.0) / 2.0).abs() < 1e-14);
        // L_2^{(1)} = (x^2 - 6x + 6)/2
        assert!((laguerre(2, 1, x) - (x * x - 6.0 * x + 6.0) / 2.0).abs() < 1e-14);
        assert!((laguerre(3, 2, 0.0) - 10.0).abs() < 1e-12);
    }
}
