//! Bessel functions of the first kind of integer order, by Miller's
//! downward recurrence normalized with J₀ + 2ΣJ₂ₖ = 1.

/// Start index for the downward recurrence covering orders up to `n` at `x`.
fn start_order(n: usize, x: f64) -> usize {
    let m = (n as f64).max(x);
    let start = m + 20.0 + (40.0 * m).sqrt();
    // Even start keeps the normalization sum aligned.
    let s = start as usize;
    s + (s & 1)
}

/// J₀(x), …, J_nmax(x) for x ≥ 0.
fn miller(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = start_order(nmax, x);
    let two_over_x = 2.0 / x;
    let (mut above, mut cur) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        // cur = J_k (unnormalized), above = J_{k+1}
        let below = k as f64 * two_over_x * cur - above;
        above = cur;
        cur = below;
        let idx = k - 1;
        if idx <= nmax {
            out[idx] = cur;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            let scale = 1e-250;
            cur *= scale;
            above *= scale;
            norm *= scale;
            for v in out.iter_mut() {
                *v *= scale;
            }
        }
    }
    norm += cur;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// J_n(x) for integer `n` and real `x`.
pub fn bessel_j(n: i64, x: f64) -> f64 {
    let order = n.unsigned_abs() as usize;
    let value = miller(order, x.abs())[order];
    let odd = order % 2 == 1;
    // J_{-n} = (-1)^n J_n and J_n(-x) = (-1)^n J_n(x).
    let flip = odd && ((n < 0) != (x < 0.0));
    if flip {
        -value
    } else {
        value
    }
}

/// J₀(x), …, J_nmax(x).
pub fn bessel_j_orders(nmax: usize, x: f64) -> Vec<f64> {
    let mut v = miller(nmax, x.abs());
    if x < 0.0 {
        for (k, val) in v.iter_mut().enumerate() {
            if k % 2 == 1 {
                *val = -*val;
            }
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// J_n(x) = (1/π) ∫₀^π cos(nτ − x sin τ) dτ, trapezoid rule on a periodic
    /// analytic integrand.
    fn integral_oracle(n: i64, x: f64) -> f64 {
        let m = 4000;
        let h = PI / m as f64;
        let f = |t: f64| (n as f64 * t - x * t.sin()).cos();
        let mut s = 0.5 * (f(0.0) + f(PI));
        for i in 1..m {
            s += f(i as f64 * h);
        }
        s * h / PI
    }

    #[test]
    fn zero_argument() {
        assert_eq!(bessel_j(0, 0.0), 1.0);
        for n in 1..10 {
            assert_eq!(bessel_j(n, 0.0), 0.0);
            assert_eq!(bessel_j(-n, 0.0), 0.0);
        }
    }

    #[test]
    fn matches_integral_representation() {
        for &x in &[1e-3, 0.1, 0.5, 1.8412, 3.0, 7.5, 12.0, 19.9] {
            for n in [0i64, 1, 2, 3, 5, 10, 25, 50] {
                let a = bessel_j(n, x);
                let b = integral_oracle(n, x);
                assert!((a - b).abs() < 1e-12, "J_{n}({x}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn first_maximum_of_j1() {
        let j1 = bessel_j(1, 1.8412);
        assert!((j1 - 0.5819).abs() < 1e-4);
        assert!((bessel_j(0, 1.8412) - integral_oracle(0, 1.8412)).abs() < 1e-13);
    }

    #[test]
    fn symmetries() {
        for &x in &[0.3, 2.2, 9.0] {
            for n in 0..8i64 {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert!((bessel_j(-n, x) - sign * bessel_j(n, x)).abs() < 1e-15);
                assert!((bessel_j(n, -x) - sign * bessel_j(n, x)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn orders_agree_with_single_evaluation() {
        let v = bessel_j_orders(30, 4.2);
        for (n, val) in v.iter().enumerate() {
            assert!((val - bessel_j(n as i64, 4.2)).abs() < 1e-15);
        }
    }

    #[test]
    fn completeness_sum() {
        for i in 0..=50 {
            let y = 5.0 * i as f64 / 50.0;
            let v = bessel_j_orders(40, y);
            let total = v[0] * v[0] + 2.0 * v[1..].iter().map(|j| j * j).sum::<f64>();
            assert!((total - 1.0).abs() < 1e-8, "y = {y}: {total}");
        }
    }
}
