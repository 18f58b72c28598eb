//! Adaptive Gauss-Kronrod quadrature with the substitutions used for
//! power-law endpoints.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod panel: `(estimate, error estimate)`.
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive bisection until the summed error estimate is below
/// `max(abs_tol, rel_tol * |I|)`.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (est, err) = gk15(&mut f, a, b);
    let mut panels = vec![(a, b, est, err)];
    let mut total = est;
    let mut total_err = err;
    for _ in 0..20_000 {
        if !total.is_finite() {
            return Err(Error::NonFinite { context: format!("quadrature on [{a}, {b}]") });
        }
        if total_err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (l, r, e0, r0) = panels.swap_remove(idx);
        let m = 0.5 * (l + r);
        if m <= l || m >= r {
            // Panel is at machine resolution; accept what we have.
            panels.push((l, r, e0, 0.0));
            total_err -= r0;
            continue;
        }
        let (e1, r1) = gk15(&mut f, l, m);
        let (e2, r2) = gk15(&mut f, m, r);
        total += e1 + e2 - e0;
        total_err += r1 + r2 - r0;
        panels.push((l, m, e1, r1));
        panels.push((m, r, e2, r2));
    }
    let total_err: f64 = panels.iter().map(|p| p.3).sum();
    if total_err <= 1e3 * abs_tol.max(rel_tol * total.abs()) {
        return Ok(panels.iter().map(|p| p.2).sum());
    }
    Err(Error::Quadrature { a, b, err: total_err })
}

/// `int_a^b f` with the default tolerance (1e-13 relative, 1e-15 absolute).
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    adaptive(f, a, b, 1e-15, 1e-13)
}

/// `int_a^b f(y) dy` through `s = y^p`, for integrands with a `y^(p-1)`
/// factor at zero. Requires `0 <= a <= b`.
pub fn integrate_pow<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, p: f64) -> Result<f64> {
    let q = 1.0 / p;
    integrate(
        |s: f64| {
            if s <= 0.0 {
                return 0.0;
            }
            let y = s.powf(q);
            f(y) * q * y / s
        },
        a.powf(p),
        b.powf(p),
    )
}

/// `int_a^inf f` for `f(x) ~ x^(-decay)` with `decay > 1` and `a > 0`.
///
/// Substitutes `x = a z^(-1/(decay - 1))`, which turns the leading power into
/// a constant on `(0, 1]`.
pub fn integrate_tail<F: FnMut(f64) -> f64>(mut f: F, a: f64, decay: f64) -> Result<f64> {
    if !(a > 0.0) || !(decay > 1.0) {
        return Err(Error::param("tail", format!("need a > 0 and decay > 1, got a = {a}, decay = {decay}")));
    }
    let q = 1.0 / (decay - 1.0);
    integrate(
        |z: f64| {
            if z <= 0.0 {
                return 0.0;
            }
            let x = a * z.powf(-q);
            if !x.is_finite() {
                return 0.0;
            }
            f(x) * q * x / z
        },
        0.0,
        1.0,
    )
}

/// Brent's method on a bracketing interval.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NotBracketed(format!("f({a}) = {fa}, f({b}) = {fb}")));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol * m.signum() };
        fb = f(b);
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_panel_is_exact_for_degree_22() {
        let mut f = |x: f64| x.powi(22) + 3.0 * x.powi(5);
        let (est, _) = gk15(&mut f, 0.0, 1.0);
        assert!((est - (1.0 / 23.0 + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn gauss_part_matches_degree_13() {
        // The embedded Gauss rule is exact to degree 13, so the error
        // estimate vanishes for such polynomials.
        let mut f = |x: f64| x.powi(13) - x.powi(12);
        let (_, err) = gk15(&mut f, -1.0, 2.0);
        assert!(err < 1e-11, "{err}");
    }

    #[test]
    fn power_tail_and_endpoint() {
        let v = integrate_tail(|x| 1.0 / (1.0 + x * x), 1.0, 2.0).unwrap();
        assert!((v - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        let w = integrate_pow(|y| y.powf(0.3), 0.0, 1.0, 1.3).unwrap();
        assert!((w - 1.0 / 1.3).abs() < 1e-12);
    }

    #[test]
    fn brent_finds_cube_root() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }
}
