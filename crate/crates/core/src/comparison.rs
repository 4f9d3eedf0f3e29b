//! Curvature-comparison primitives.
//!
//! Comparison angles are taken in the model plane `M^2_kappa` of constant
//! curvature `kappa`; they are evaluated through the half-angle form of the
//! law of cosines,
//!
//! `sin^2(A/2) = s_k((c+a-b)/2) s_k((c-a+b)/2) / (s_k(a) s_k(b))`,
//!
//! which is algebraically the usual `(c_k(c) - c_k(a) c_k(b)) / (k s_k(a) s_k(b))`
//! but does not cancel catastrophically for thin or small triangles.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::space::{distance, geodesic, log_map, SpacePoint};

/// Cosines may overshoot `[-1, 1]` by this much before being treated as an error.
pub const COSINE_REJECT_TOL: f64 = 1e-6;

/// A curvature bound `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct Kappa(f64);

impl Kappa {
    pub const FLAT: Kappa = Kappa(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() {
            Ok(Kappa(value))
        } else {
            Err(Error::InvalidConfig(format!("kappa must be finite, got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Diameter `D_kappa` of the model plane: `pi / sqrt(kappa)` or `+inf`.
    pub fn diameter(self) -> f64 {
        if self.0 > 0.0 {
            PI / self.0.sqrt()
        } else {
            f64::INFINITY
        }
    }
}

/// `s_kappa(r)`: `sin(r sqrt k)/sqrt k`, `r`, or `sinh(r sqrt -k)/sqrt -k`.
pub fn s_kappa(kappa: Kappa, r: f64) -> f64 {
    let k = kappa.0;
    if k > 0.0 {
        let q = k.sqrt();
        (r * q).sin() / q
    } else if k < 0.0 {
        let q = (-k).sqrt();
        (r * q).sinh() / q
    } else {
        r
    }
}

/// `c_kappa(r) = s_kappa'(r)`.
pub fn c_kappa(kappa: Kappa, r: f64) -> f64 {
    let k = kappa.0;
    if k > 0.0 {
        (r * k.sqrt()).cos()
    } else if k < 0.0 {
        (r * (-k).sqrt()).cosh()
    } else {
        1.0
    }
}

/// Side lengths of a triangle `{p, x, y}` seen from the vertex `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleSides {
    pub d_px: f64,
    pub d_py: f64,
    pub d_xy: f64,
}

impl TriangleSides {
    pub fn new(d_px: f64, d_py: f64, d_xy: f64) -> Result<Self> {
        let sides = [d_px, d_py, d_xy];
        if sides.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidTriangle(format!("sides must be finite and nonnegative: {sides:?}")));
        }
        let slack = COSINE_REJECT_TOL * sides.iter().fold(1.0_f64, |m, s| m.max(*s));
        if d_xy > d_px + d_py + slack || d_px > d_py + d_xy + slack || d_py > d_px + d_xy + slack {
            return Err(Error::InvalidTriangle(format!("triangle inequality fails: {sides:?}")));
        }
        Ok(Self { d_px, d_py, d_xy })
    }

    pub fn from_points(p: &SpacePoint, x: &SpacePoint, y: &SpacePoint) -> Result<Self> {
        Self::new(distance(p, x)?, distance(p, y)?, distance(x, y)?)
    }

    pub fn perimeter(&self) -> f64 {
        self.d_px + self.d_py + self.d_xy
    }
}

/// Comparison angle at `p` in `M^2_kappa`, in `[0, pi]`.
pub fn comparison_angle(kappa: Kappa, sides: TriangleSides) -> Result<f64> {
    let TriangleSides { d_px: a, d_py: b, d_xy: c } = sides;
    if a == 0.0 || b == 0.0 {
        return Err(Error::DegenerateTriangle);
    }
    let limit = 2.0 * kappa.diameter();
    if sides.perimeter() >= limit {
        return Err(Error::PerimeterTooLarge { perimeter: sides.perimeter(), limit });
    }
    let half = if kappa.0 == 0.0 {
        (c + a - b) * (c - a + b) / (4.0 * a * b)
    } else {
        s_kappa(kappa, 0.5 * (c + a - b)) * s_kappa(kappa, 0.5 * (c - a + b))
            / (s_kappa(kappa, a) * s_kappa(kappa, b))
    };
    let cos = 1.0 - 2.0 * half;
    if !cos.is_finite() || cos > 1.0 + COSINE_REJECT_TOL || cos < -1.0 - COSINE_REJECT_TOL {
        return Err(Error::CosineOutOfRange(cos));
    }
    Ok(2.0 * half.clamp(0.0, 1.0).sqrt().asin())
}

fn angle_at(kappa: Kappa, p: &SpacePoint, x: &SpacePoint, y: &SpacePoint) -> Result<f64> {
    comparison_angle(kappa, TriangleSides::from_points(p, x, y)?)
}

/// `2 pi - (angle(x,y) + angle(x,z) + angle(y,z))` at `p`; nonnegative values
/// certify the quadruple condition for `curv >= kappa` on this instance.
pub fn quadruple_defect(
    p: &SpacePoint,
    x: &SpacePoint,
    y: &SpacePoint,
    z: &SpacePoint,
    kappa: Kappa,
) -> Result<f64> {
    let sum = angle_at(kappa, p, x, y)? + angle_at(kappa, p, x, z)? + angle_at(kappa, p, y, z)?;
    Ok(2.0 * PI - sum)
}

/// Outcome of [`angle_monotonicity_probe`].
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    /// Largest increase of the comparison angle along increasing `s` or `t`
    /// (0 when the angle is non-increasing everywhere on the grid).
    pub max_violation: f64,
    /// `angles[i][j]` is the angle at `(grid[i], grid[j])`.
    pub angles: Vec<Vec<f64>>,
}

/// Samples `(s, t) -> angle_p(gamma_x(s), gamma_y(t))` on `grid x grid`, where
/// `gamma_x`, `gamma_y` are the geodesics from `p` to `x` and `y`.
pub fn angle_monotonicity_probe(
    p: &SpacePoint,
    x: &SpacePoint,
    y: &SpacePoint,
    kappa: Kappa,
    grid: &[f64],
) -> Result<MonotonicityReport> {
    if grid.is_empty() || grid.iter().any(|g| !(*g > 0.0 && *g <= 1.0)) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidConfig("grid must be sorted ascending within (0, 1]".into()));
    }
    let gx = geodesic(p, x)?;
    let gy = geodesic(p, y)?;
    let xs: Vec<_> = grid.iter().map(|&s| gx.at(s)).collect();
    let ys: Vec<_> = grid.iter().map(|&t| gy.at(t)).collect();
    let mut angles = vec![vec![0.0; grid.len()]; grid.len()];
    for (i, xi) in xs.iter().enumerate() {
        for (j, yj) in ys.iter().enumerate() {
            angles[i][j] = angle_at(kappa, p, xi, yj)?;
        }
    }
    let mut worst = 0.0_f64;
    for i in 0..grid.len() {
        for j in 0..grid.len() {
            if i + 1 < grid.len() {
                worst = worst.max(angles[i + 1][j] - angles[i][j]);
            }
            if j + 1 < grid.len() {
                worst = worst.max(angles[i][j + 1] - angles[i][j]);
            }
        }
    }
    Ok(MonotonicityReport { max_violation: worst, angles })
}

/// `<log_p(x), log_p(y)>_p`.
pub fn tangent_inner(p: &SpacePoint, x: &SpacePoint, y: &SpacePoint) -> Result<f64> {
    log_map(p, x)?.inner(&log_map(p, y)?)
}

/// Cone distance `||log_p(x) - log_p(y)||_p` via the polarization identity.
pub fn cone_distance(p: &SpacePoint, x: &SpacePoint, y: &SpacePoint) -> Result<f64> {
    let u = log_map(p, x)?;
    let v = log_map(p, y)?;
    let sq = u.inner(&u)? + v.inner(&v)? - 2.0 * u.inner(&v)?;
    Ok(sq.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(v: f64) -> Kappa {
        Kappa::new(v).unwrap()
    }

    fn sides(a: f64, b: f64, c: f64) -> TriangleSides {
        TriangleSides::new(a, b, c).unwrap()
    }

    #[test]
    fn trig_functions_at_reference_points() {
        assert!((s_kappa(k(1.0), PI / 2.0) - 1.0).abs() < 1e-15);
        assert_eq!(s_kappa(k(0.0), 2.5), 2.5);
        assert!((s_kappa(k(-1.0), 1.0) - 1.1752012).abs() < 1e-7);
        assert_eq!(c_kappa(k(1.0), 0.0), 1.0);
        assert_eq!(c_kappa(k(0.0), 7.0), 1.0);
        assert!((c_kappa(k(-1.0), 1.0) - 1.5430806).abs() < 1e-7);
    }

    #[test]
    fn pythagorean_identity() {
        for &kv in &[-4.0, -1.0, -1e-3, 0.0, 1e-3, 1.0, 2.5] {
            for i in 0..50 {
                let r = i as f64 * 0.05;
                let (s, c) = (s_kappa(k(kv), r), c_kappa(k(kv), r));
                assert!((c * c + kv * s * s - 1.0).abs() < 1e-12, "k={kv} r={r}");
            }
        }
    }

    #[test]
    fn diameter() {
        assert_eq!(k(4.0).diameter(), PI / 2.0);
        assert!(k(0.0).diameter().is_infinite());
        assert!(k(-1.0).diameter().is_infinite());
    }

    #[test]
    fn reference_angles() {
        let a = comparison_angle(k(0.0), sides(1.0, 1.0, 2f64.sqrt())).unwrap();
        assert!((a - PI / 2.0).abs() < 1e-12);
        let h = PI / 2.0;
        let a = comparison_angle(k(1.0), sides(h, h, h)).unwrap();
        assert!((a - PI / 2.0).abs() < 1e-12);
        // cos A = (cosh^2 1 - cosh 1) / sinh^2 1; 30-digit evaluation gives 0.918797872178027...
        let a = comparison_angle(k(-1.0), sides(1.0, 1.0, 1.0)).unwrap();
        assert!((a - 0.918_797_872_178_027_4).abs() < 1e-12, "{a}");
    }

    #[test]
    fn hyperbolic_equilateral_matches_law_of_cosines() {
        let ch = 1f64.cosh();
        let expected = ((ch * ch - ch) / 1f64.sinh().powi(2)).acos();
        let a = comparison_angle(k(-1.0), sides(1.0, 1.0, 1.0)).unwrap();
        assert!((a - expected).abs() < 1e-12);
    }

    #[test]
    fn degenerate_triangles() {
        for &kv in &[-1.0, 0.0, 1.0] {
            let straight = comparison_angle(k(kv), sides(0.4, 0.7, 1.1)).unwrap();
            assert!((straight - PI).abs() < 1e-7, "{straight}");
            let folded = comparison_angle(k(kv), sides(0.4, 0.7, 0.3)).unwrap();
            assert!(folded.abs() < 1e-7, "{folded}");
        }
    }

    #[test]
    fn small_kappa_limit() {
        let tri = sides(0.8, 1.3, 1.1);
        let flat = comparison_angle(k(0.0), tri).unwrap();
        for kv in [1e-6, -1e-6] {
            assert!((comparison_angle(k(kv), tri).unwrap() - flat).abs() < 1e-4);
            assert!((s_kappa(k(kv), 1.3) - 1.3).abs() < 1e-4);
        }
    }

    #[test]
    fn error_paths() {
        assert_eq!(comparison_angle(k(0.0), sides(0.0, 1.0, 1.0)), Err(Error::DegenerateTriangle));
        assert!(matches!(
            comparison_angle(k(1.0), sides(3.0, 3.0, 0.5)),
            Err(Error::PerimeterTooLarge { .. })
        ));
        assert!(TriangleSides::new(1.0, 1.0, 3.0).is_err());
        assert!(TriangleSides::new(-1.0, 1.0, 1.0).is_err());
        assert!(Kappa::new(f64::NAN).is_err());
    }
}
