//! Constant-curvature well geometry.

use crate::error::{Error, Result};

/// Largest inclination (degrees from horizontal) the geometry accepts.
pub const MAX_INCLINATION_DEG: f64 = 85.0;

/// TVD offsets of `n_sub` equally spaced sub-points along a circular arc.
///
/// The arc starts at `inclination_deg` (from horizontal, positive building
/// downward) and ends at `inclination_deg + delta_deg` after `n_sub * dx`
/// metres of horizontal departure. Entry `k` holds the cumulative TVD change
/// at sub-point `k + 1`. On a circular arc `sin(inc)` is linear in horizontal
/// departure, which gives the closed form
/// `dz = x (sin a + sin b) / (cos a + cos b)` between inclinations `a` and `b`.
pub fn min_curvature_segment(
    inclination_deg: f64,
    delta_deg: f64,
    n_sub: usize,
    dx: f64,
) -> Result<Vec<f64>> {
    let end_deg = inclination_deg + delta_deg;
    if inclination_deg.abs() >= MAX_INCLINATION_DEG || end_deg.abs() >= MAX_INCLINATION_DEG {
        return Err(Error::Geometry(format!(
            "inclination {inclination_deg:.3} -> {end_deg:.3} deg approaches vertical"
        )));
    }
    if n_sub == 0 || !(dx > 0.0) {
        return Err(Error::Geometry("segment needs n_sub >= 1 and dx > 0".into()));
    }
    let (s0, c0) = inclination_deg.to_radians().sin_cos();
    let s1 = end_deg.to_radians().sin();
    let length = n_sub as f64 * dx;
    Ok((1..=n_sub)
        .map(|k| {
            let x = k as f64 * dx;
            let sk = s0 + (s1 - s0) * x / length;
            let ck = (1.0 - sk * sk).sqrt();
            x * (s0 + sk) / (c0 + ck)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Integrates the arc in arc length with RK4 and reads TVD at each
    /// horizontal station by linear interpolation on a very fine grid.
    fn integrate_arc(inc_deg: f64, delta_deg: f64, n_sub: usize, dx: f64) -> Vec<f64> {
        let a = inc_deg.to_radians();
        let b = (inc_deg + delta_deg).to_radians();
        let length = n_sub as f64 * dx;
        // curvature from horizontal departure: L = (sin b - sin a) / kappa
        let (kappa, total_s) = if delta_deg == 0.0 {
            (0.0, length / a.cos())
        } else {
            let kappa = (b.sin() - a.sin()) / length;
            (kappa, (b - a) / kappa)
        };
        let steps = 200_000usize;
        let h = total_s * 1.0001 / steps as f64;
        let deriv = |s: f64| {
            let th = a + kappa * s;
            (th.cos(), th.sin())
        };
        let mut s = 0.0;
        let (mut x, mut z) = (0.0f64, 0.0f64);
        let mut out = Vec::new();
        let mut next = 1;
        while next <= n_sub {
            let (k1x, k1z) = deriv(s);
            let (k2x, k2z) = deriv(s + h / 2.0);
            let (k4x, k4z) = deriv(s + h);
            let nx = x + h / 6.0 * (k1x + 4.0 * k2x + k4x);
            let nz = z + h / 6.0 * (k1z + 4.0 * k2z + k4z);
            while next <= n_sub && nx >= next as f64 * dx {
                let t = (next as f64 * dx - x) / (nx - x);
                out.push(z + t * (nz - z));
                next += 1;
            }
            x = nx;
            z = nz;
            s += h;
        }
        out
    }

    #[test]
    fn straight_horizontal() {
        let off = min_curvature_segment(0.0, 0.0, 10, 10.0).unwrap();
        assert!(off.iter().all(|&z| z == 0.0));
    }

    #[test]
    fn constant_slope() {
        let off = min_curvature_segment(3.0, 0.0, 10, 10.0).unwrap();
        let step = 10.0 * 3f64.to_radians().tan();
        for (k, z) in off.iter().enumerate() {
            assert!((z - step * (k + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn arc_matches_fine_integration() {
        for &(inc, delta) in &[(0.0, 5.0), (-7.0, 5.0), (12.0, -5.0), (3.0, 0.0)] {
            let closed = min_curvature_segment(inc, delta, 10, 10.0).unwrap();
            let numeric = integrate_arc(inc, delta, 10, 10.0);
            assert_eq!(numeric.len(), 10);
            for (c, n) in closed.iter().zip(&numeric) {
                assert!((c - n).abs() < 1e-6, "inc {inc} delta {delta}: {c} vs {n}");
            }
        }
    }

    #[test]
    fn near_vertical_is_a_geometry_error() {
        assert!(matches!(
            min_curvature_segment(84.0, 5.0, 10, 10.0),
            Err(Error::Geometry(_))
        ));
    }
}
