//! Reference computations shared by the test targets.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use pnes::fock::PureState;
use pnes::measures::characteristic_fn;

/// Gauss-Laguerre nodes and weights (weight e^{-x}) from the Jacobi matrix.
fn gauss_laguerre(n: usize) -> Vec<(f64, f64)> {
    let j = DMatrix::<f64>::from_fn(n, n, |i, k| {
        if i == k {
            (2 * i + 1) as f64
        } else if i + 1 == k || k + 1 == i {
            i.max(k) as f64
        } else {
            0.0
        }
    });
    let e = j.symmetric_eigen();
    (0..n).map(|i| (e.eigenvalues[i], e.eigenvectors[(0, i)].powi(2))).collect()
}

/// (1/pi) int d^2 l e^{-|l|^2} C(l*, l) in polar form: C carries e^{-|l|^2}, so with
/// u = 2|l|^2 the radial integrand is a polynomial against e^{-u}.
pub fn teleport_by_quadrature(s: &PureState) -> f64 {
    let radial = gauss_laguerre(40);
    let m = 64;
    let mut acc = 0.0;
    for k in 0..m {
        let th = 2.0 * PI * k as f64 / m as f64;
        for &(u, w) in &radial {
            let l = C64::from_polar((u / 2.0).sqrt(), th);
            let ch = characteristic_fn(s, l.conj(), l).unwrap();
            acc += w * (u / 2.0).exp() * ch.re;
        }
    }
    // d^2 l = dx dth / 2 and dx = du / 2; e^{-x} e^{-x} = e^{-u}
    acc * (2.0 * PI / m as f64) / 4.0 / PI
}
