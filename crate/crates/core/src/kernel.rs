//! Radial Fourier kernel in odd dimensions.
//!
//! For radial `f` on `R^n`, `f^(xi) = int f(x) e^{-i x.xi} dx` depends only on
//! `rho = |xi|` and equals `int_0^inf f(r) K(rho r) |S^{n-1}| r^{n-1} dr`, where
//! `K` is the spherical average of a plane wave. With `n = 2m + 3`,
//!
//! ```text
//! K(x) = (2m+1)!! x^{-m} j_m(x),     K(0) = 1,
//! ```
//!
//! `j_m` being the spherical Bessel function of order `m`.

/// Normalized kernel `K` for a fixed odd dimension.
#[derive(Debug, Clone, Copy)]
pub struct RadialKernel {
    order: usize,
    double_factorial: f64,
}

impl RadialKernel {
    pub fn new(dimension: usize) -> Self {
        debug_assert!(dimension >= 3 && dimension % 2 == 1);
        let order = (dimension - 3) / 2;
        let double_factorial = (0..=order).map(|k| (2 * k + 1) as f64).product();
        Self {
            order,
            double_factorial,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = x.abs();
        let m = self.order;
        if x < m as f64 + 2.0 {
            self.series(x)
        } else {
            self.double_factorial * spherical_bessel(m, x) / x.powi(m as i32)
        }
    }

    /// `sum_k (-x^2/2)^k (2m+1)!! / (k! (2m+2k+1)!!)`.
    fn series(&self, x: f64) -> f64 {
        let h = -0.5 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..80 {
            term *= h / (k as f64 * (2 * (self.order + k) + 1) as f64);
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    }
}

/// `j_m(x)` by upward recurrence; accurate for `x` above the order.
fn spherical_bessel(m: usize, x: f64) -> f64 {
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    if m == 0 {
        return j0;
    }
    let mut prev = j0;
    let mut cur = s / (x * x) - c / x;
    for l in 1..m {
        let next = (2 * l + 1) as f64 / x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}
