//! The bifurcating two-valley loss surface.
//!
//! For `y >= 0` the loss is
//!
//! ```text
//! L(x, y) = L0(y) + x (x - g1(y)) / f1(y)    x >= 0   (flat valley)
//! L(x, y) = L0(y) + x (x + g2(y)) / f2(y)    x <  0   (sharp valley)
//! ```
//!
//! with `g_i = 2 x_i y / (y + y_b)`, `f_i = f0 (x_i/x0)^2 ((y + y_f)/(y + y_b))^2`
//! and the decaying drift `L0(y) = L_d exp(-y/y_d) + x0^2/f0`. Both valley floors
//! sit at the same depth `ΔL(y) = (x0^2/f0) y^2 / (y + y_f)^2` below the ridge.

use crate::error::{Error, Result};

/// Which side of the ridge `x = 0` a point belongs to. `x = 0` counts as flat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Valley {
    Flat,
    Sharp,
}

impl Valley {
    #[inline]
    pub fn of(x: f64) -> Valley {
        if x >= 0.0 {
            Valley::Flat
        } else {
            Valley::Sharp
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Valley::Flat => "flat",
            Valley::Sharp => "sharp",
        }
    }

    pub fn other(self) -> Valley {
        match self {
            Valley::Flat => Valley::Sharp,
            Valley::Sharp => Valley::Flat,
        }
    }
}

impl std::fmt::Display for Valley {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Valley {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(Valley::Flat),
            "sharp" => Ok(Valley::Sharp),
            other => Err(Error::Invalid(format!("unknown valley '{other}'"))),
        }
    }
}

/// The eight scalars defining the landscape, plus the derived flatness ratio.
///
/// Fields are private so that `gamma` cannot go stale; use [`LandscapeParams::new`]
/// or the `with_*` setters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandscapeParams {
    x1: f64,
    x2: f64,
    x0: f64,
    f0: f64,
    y_b: f64,
    y_f: f64,
    l_d: f64,
    y_d: f64,
    gamma: f64,
}

impl Default for LandscapeParams {
    /// `f0 = x0 = 1` and `x1 = 0.8` are the published values. The rest are
    /// calibration placeholders chosen so that `x1 > x2` (γ = 4) and the
    /// transverse/longitudinal timescales are well separated.
    fn default() -> Self {
        Self::new(0.8, 0.4, 1.0, 1.0, 2.5, 2.5, 0.05, 1.0).expect("default landscape is valid")
    }
}

impl LandscapeParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        x1: f64,
        x2: f64,
        x0: f64,
        f0: f64,
        y_b: f64,
        y_f: f64,
        l_d: f64,
        y_d: f64,
    ) -> Result<Self> {
        let all = [
            ("x1", x1),
            ("x2", x2),
            ("x0", x0),
            ("f0", f0),
            ("y_b", y_b),
            ("y_f", y_f),
            ("l_d", l_d),
            ("y_d", y_d),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                return Err(Error::Invalid(format!("{name} must be finite")));
            }
        }
        for (name, v) in [("x0", x0), ("f0", f0), ("y_b", y_b), ("y_f", y_f), ("y_d", y_d)] {
            if v <= 0.0 {
                return Err(Error::Invalid(format!("{name} > 0 required (got {v})")));
            }
        }
        if x2 <= 0.0 {
            return Err(Error::Invalid(format!("x2 > 0 required (got {x2})")));
        }
        if x1 < x2 {
            return Err(Error::Invalid(format!(
                "x1 > x2 required (got x1 = {x1}, x2 = {x2})"
            )));
        }
        if l_d < 0.0 {
            return Err(Error::Invalid(format!("l_d >= 0 required (got {l_d})")));
        }
        let r = x1 / x2;
        Ok(Self {
            x1,
            x2,
            x0,
            f0,
            y_b,
            y_f,
            l_d,
            y_d,
            gamma: r * r,
        })
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }
    pub fn x2(&self) -> f64 {
        self.x2
    }
    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn f0(&self) -> f64 {
        self.f0
    }
    pub fn y_b(&self) -> f64 {
        self.y_b
    }
    pub fn y_f(&self) -> f64 {
        self.y_f
    }
    pub fn l_d(&self) -> f64 {
        self.l_d
    }
    pub fn y_d(&self) -> f64 {
        self.y_d
    }

    /// Flatness ratio `f1/f2 = (x1/x2)^2`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Constant offset `x0^2/f0` keeping the loss non-negative.
    pub fn offset(&self) -> f64 {
        self.x0 * self.x0 / self.f0
    }

    /// Same landscape with `x2` chosen so that `(x1/x2)^2 = gamma`.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        if !(gamma >= 1.0) {
            return Err(Error::Invalid(format!("gamma >= 1 required (got {gamma})")));
        }
        self.with_x2(self.x1 / gamma.sqrt())
    }

    pub fn with_x1(&self, x1: f64) -> Result<Self> {
        Self::new(x1, self.x2, self.x0, self.f0, self.y_b, self.y_f, self.l_d, self.y_d)
    }
    pub fn with_x2(&self, x2: f64) -> Result<Self> {
        Self::new(self.x1, x2, self.x0, self.f0, self.y_b, self.y_f, self.l_d, self.y_d)
    }
    pub fn with_drift(&self, l_d: f64, y_d: f64) -> Result<Self> {
        Self::new(self.x1, self.x2, self.x0, self.f0, self.y_b, self.y_f, l_d, y_d)
    }
    pub fn with_scales(&self, y_b: f64, y_f: f64) -> Result<Self> {
        Self::new(self.x1, self.x2, self.x0, self.f0, y_b, y_f, self.l_d, self.y_d)
    }
    pub fn with_norm(&self, x0: f64, f0: f64) -> Result<Self> {
        Self::new(self.x1, self.x2, x0, f0, self.y_b, self.y_f, self.l_d, self.y_d)
    }

    /// Asymptotic flatness of a branch as `y -> ∞`.
    pub fn flatness_limit(&self, valley: Valley) -> f64 {
        let c = self.half_position(valley);
        self.f0 * (c / self.x0).powi(2)
    }

    /// Asymptotic barrier `x0^2/f0`.
    pub fn barrier_limit(&self) -> f64 {
        self.offset()
    }

    fn half_position(&self, valley: Valley) -> f64 {
        match valley {
            Valley::Flat => self.x1,
            Valley::Sharp => self.x2,
        }
    }
}

/// Valley positions and flatness at a given `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValleyGeometry {
    pub g1: f64,
    pub g2: f64,
    pub f1: f64,
    pub f2: f64,
    pub x1_star: f64,
    pub x2_star: f64,
}

impl ValleyGeometry {
    pub fn flatness(&self, valley: Valley) -> f64 {
        match valley {
            Valley::Flat => self.f1,
            Valley::Sharp => self.f2,
        }
    }

    pub fn minimum(&self, valley: Valley) -> f64 {
        match valley {
            Valley::Flat => self.x1_star,
            Valley::Sharp => self.x2_star,
        }
    }
}

/// Symmetric 2×2 matrix `[[a, b], [b, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2 {
    pub a: f64,
    pub b: f64,
    pub d: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 { a: 0.0, b: 0.0, d: 0.0 };

    pub fn new(a: f64, b: f64, d: f64) -> Self {
        Self { a, b, d }
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.a * s, self.b * s, self.d * s)
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.b
    }

    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.b * v[0] + self.d * v[1]]
    }

    /// Eigenvalues `(λ+, λ-)` with `λ+ >= λ-`.
    #[inline]
    pub fn eigenvalues(&self) -> (f64, f64) {
        let m = 0.5 * (self.a + self.d);
        let r = (0.5 * (self.a - self.d)).hypot(self.b);
        (m + r, m - r)
    }

    /// Eigen-decomposition: `(λ+, λ-, v+)` where `v+` is the unit eigenvector of
    /// `λ+`; the eigenvector of `λ-` is `v+` rotated by 90°.
    pub fn eigen(&self) -> (f64, f64, [f64; 2]) {
        let (lp, lm) = self.eigenvalues();
        let half_angle = 0.5 * (2.0 * self.b).atan2(self.a - self.d);
        (lp, lm, [half_angle.cos(), half_angle.sin()])
    }

    /// Projection onto the PSD cone: negative eigenvalues clamped to zero.
    pub fn psd_clamp(&self) -> Sym2 {
        let (lp, lm) = self.eigenvalues();
        if lm >= 0.0 {
            *self
        } else if lp <= 0.0 {
            Sym2::ZERO
        } else {
            // λ+ P+ with spectral projector P+ = (M - λ- I)/(λ+ - λ-)
            let s = lp / (lp - lm);
            Sym2::new((self.a - lm) * s, self.b * s, (self.d - lm) * s)
        }
    }

    /// Principal square root of the PSD part of the matrix.
    ///
    /// Built from the spectral decomposition: with both eigenvalues non-negative
    /// `sqrt(M) = (M + sqrt(det) I) / sqrt(tr + 2 sqrt(det))`; with `λ- < 0` the clamped
    /// root is `sqrt(λ+) P+`.
    #[inline]
    pub fn psd_sqrt(&self) -> Sym2 {
        let (lp, lm) = self.eigenvalues();
        if lp <= 0.0 {
            return Sym2::ZERO;
        }
        if lm >= 0.0 {
            let sd = (lp * lm).sqrt();
            let denom = (lp + lm + 2.0 * sd).sqrt();
            Sym2::new((self.a + sd) / denom, self.b / denom, (self.d + sd) / denom)
        } else {
            let s = lp.sqrt() / (lp - lm);
            Sym2::new((self.a - lm) * s, self.b * s, (self.d - lm) * s)
        }
    }
}

/// Loss, gradient and Hessian at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandscapeEval {
    pub loss: f64,
    pub grad: [f64; 2],
    pub hessian: Sym2,
}

#[inline]
fn check_y(y: f64) -> Result<()> {
    if y >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("y >= 0 required (got {y})")))
    }
}

pub fn valley_geometry(p: &LandscapeParams, y: f64) -> Result<ValleyGeometry> {
    check_y(y)?;
    Ok(geometry_unchecked(p, y))
}

#[inline]
fn geometry_unchecked(p: &LandscapeParams, y: f64) -> ValleyGeometry {
    let yb = y + p.y_b;
    let u = y / yb;
    let g1 = 2.0 * p.x1 * u;
    let g2 = 2.0 * p.x2 * u;
    let r = (y + p.y_f) / yb;
    let base = p.f0 * r * r / (p.x0 * p.x0);
    ValleyGeometry {
        g1,
        g2,
        f1: base * p.x1 * p.x1,
        f2: base * p.x2 * p.x2,
        x1_star: 0.5 * g1,
        x2_star: -0.5 * g2,
    }
}

/// Drift term `L0(y) = L_d exp(-y/y_d) + x0^2/f0`.
pub fn drift_loss(p: &LandscapeParams, y: f64) -> Result<f64> {
    check_y(y)?;
    Ok(p.l_d * (-y / p.y_d).exp() + p.offset())
}

pub fn loss(p: &LandscapeParams, x: f64, y: f64) -> Result<f64> {
    check_y(y)?;
    let geo = geometry_unchecked(p, y);
    let l0 = p.l_d * (-y / p.y_d).exp() + p.offset();
    let q = if x >= 0.0 {
        x * (x - geo.g1) / geo.f1
    } else {
        x * (x + geo.g2) / geo.f2
    };
    Ok(l0 + q)
}

pub fn gradient(p: &LandscapeParams, x: f64, y: f64) -> Result<[f64; 2]> {
    check_y(y)?;
    Ok(eval_unchecked(p, x, y).grad)
}

pub fn hessian(p: &LandscapeParams, x: f64, y: f64) -> Result<Sym2> {
    check_y(y)?;
    Ok(eval_unchecked(p, x, y).hessian)
}

/// Loss, gradient and Hessian in one pass.
pub fn eval(p: &LandscapeParams, x: f64, y: f64) -> Result<LandscapeEval> {
    check_y(y)?;
    Ok(eval_unchecked(p, x, y))
}

/// As [`eval`] without the domain check; callers guarantee `y >= 0`.
#[inline]
pub(crate) fn eval_unchecked(p: &LandscapeParams, x: f64, y: f64) -> LandscapeEval {
    // Branch writes as q = (x^2 - x G(y)) / F(y) with signed half-position c.
    let c = if x >= 0.0 { p.x1 } else { -p.x2 };
    let yb = y + p.y_b;
    let inv_yb = 1.0 / yb;
    let g = 2.0 * c * y * inv_yb;
    let g_y = 2.0 * c * p.y_b * inv_yb * inv_yb;
    let g_yy = -2.0 * g_y * inv_yb;

    let k = p.f0 * c * c / (p.x0 * p.x0);
    let r = (y + p.y_f) * inv_yb;
    let r_y = (p.y_b - p.y_f) * inv_yb * inv_yb;
    let r_yy = -2.0 * r_y * inv_yb;
    let f = k * r * r;
    let f_y = 2.0 * k * r * r_y;
    let f_yy = 2.0 * k * (r_y * r_y + r * r_yy);
    let inv_f = 1.0 / f;

    let n = x * (x - g);
    let n_x = 2.0 * x - g;
    let n_y = -x * g_y;
    let n_yy = -x * g_yy;
    let n_xy = -g_y;

    let decay = p.l_d * (-y / p.y_d).exp();
    let l0 = decay + p.offset();
    let l0_y = -decay / p.y_d;
    let l0_yy = decay / (p.y_d * p.y_d);

    let fy_f = f_y * inv_f;
    let q = n * inv_f;
    let q_x = n_x * inv_f;
    let q_y = (n_y - n * fy_f) * inv_f;
    let q_xx = 2.0 * inv_f;
    let q_xy = (n_xy - n_x * fy_f) * inv_f;
    let q_yy = (n_yy - 2.0 * n_y * fy_f - n * f_yy * inv_f + 2.0 * n * fy_f * fy_f) * inv_f;

    LandscapeEval {
        loss: l0 + q,
        grad: [q_x, l0_y + q_y],
        hessian: Sym2::new(q_xx, q_xy, l0_yy + q_yy),
    }
}

/// Barrier height `ΔL(y) = (x0^2/f0) y^2/(y + y_f)^2`.
pub fn barrier_height(p: &LandscapeParams, y: f64) -> Result<f64> {
    check_y(y)?;
    let u = y / (y + p.y_f);
    Ok(p.offset() * u * u)
}

/// Noise-induced effective potential `γ^{±1/2} L + (1 - γ^{±1/2}) L0` for the
/// given branch (`+` flat, `-` sharp).
pub fn effective_loss(p: &LandscapeParams, x: f64, y: f64, branch: Valley) -> Result<f64> {
    let l = loss(p, x, y)?;
    let l0 = drift_loss(p, y)?;
    let w = branch_weight(p, branch);
    Ok(w * l + (1.0 - w) * l0)
}

/// SGD correction `L_eff - L = (γ^{±1/2} - 1)(L - L0)`.
pub fn sgd_correction(p: &LandscapeParams, x: f64, y: f64, branch: Valley) -> Result<f64> {
    let l = loss(p, x, y)?;
    let l0 = drift_loss(p, y)?;
    Ok((branch_weight(p, branch) - 1.0) * (l - l0))
}

fn branch_weight(p: &LandscapeParams, branch: Valley) -> f64 {
    match branch {
        Valley::Flat => p.gamma.sqrt(),
        Valley::Sharp => 1.0 / p.gamma.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> LandscapeParams {
        LandscapeParams::new(0.8, 0.4, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn geometry_at_origin_and_asymptote() {
        let p = unit();
        let g = valley_geometry(&p, 0.0).unwrap();
        assert_eq!(g.g1, 0.0);
        assert_eq!(g.x1_star, 0.0);
        let g = valley_geometry(&p, 1e12).unwrap();
        assert!((g.x1_star - 0.8).abs() < 1e-11);
        assert!((g.f1 - 0.64).abs() < 1e-11);
        assert!((p.flatness_limit(Valley::Flat) - 0.64).abs() < 1e-15);
    }

    #[test]
    fn negative_y_rejected() {
        let p = unit();
        assert!(matches!(loss(&p, 0.1, -1e-9), Err(Error::Domain(_))));
        assert!(valley_geometry(&p, -1.0).is_err());
        assert!(gradient(&p, 0.1, -1.0).is_err());
        assert!(hessian(&p, 0.1, -1.0).is_err());
        assert!(barrier_height(&p, -1.0).is_err());
    }

    #[test]
    fn ridge_value_and_valley_depth() {
        let p = unit();
        assert_eq!(loss(&p, 0.0, 2.0).unwrap(), drift_loss(&p, 2.0).unwrap());
        for &y in &[0.3, 1.0, 2.0, 7.5] {
            let g = valley_geometry(&p, y).unwrap();
            let l0 = drift_loss(&p, y).unwrap();
            let dl = barrier_height(&p, y).unwrap();
            assert!((loss(&p, g.x1_star, y).unwrap() - (l0 - dl)).abs() < 1e-14);
            assert!((loss(&p, g.x2_star, y).unwrap() - (l0 - dl)).abs() < 1e-14);
        }
    }

    #[test]
    fn barrier_examples() {
        let p = unit();
        assert_eq!(barrier_height(&p, 0.0).unwrap(), 0.0);
        assert_eq!(barrier_height(&p, 1.0).unwrap(), 0.25);
        assert!((barrier_height(&p, 1e9).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn stationary_at_valley_floor_and_right_branch_at_ridge() {
        let p = unit();
        let y = 1.7;
        let geo = valley_geometry(&p, y).unwrap();
        assert!(gradient(&p, geo.x1_star, y).unwrap()[0].abs() < 1e-15);
        assert!(gradient(&p, geo.x2_star, y).unwrap()[0].abs() < 1e-15);
        let geo = valley_geometry(&p, 3.0).unwrap();
        let gx = gradient(&p, 0.0, 3.0).unwrap()[0];
        assert!((gx + geo.g1 / geo.f1).abs() < 1e-15);
    }

    #[test]
    fn curvature_jumps_across_ridge() {
        let p = unit();
        let y = 1.5;
        let geo = valley_geometry(&p, y).unwrap();
        let hp = hessian(&p, 1e-9, y).unwrap();
        let hm = hessian(&p, -1e-9, y).unwrap();
        assert!((hp.a - 2.0 / geo.f1).abs() < 1e-12);
        assert!((hm.a - 2.0 / geo.f2).abs() < 1e-12);
        assert!((hessian(&p, 0.0, y).unwrap().a - 2.0 / geo.f1).abs() < 1e-12);
    }

    #[test]
    fn h11_is_two_over_flatness() {
        // f1(y) = 0.5 gives H11 = 4
        let p = LandscapeParams::new(0.5_f64.sqrt(), 0.5, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0).unwrap();
        let g = valley_geometry(&p, 4.0).unwrap();
        assert!((g.f1 - 0.5).abs() < 1e-15);
        assert!((hessian(&p, 0.5, 4.0).unwrap().a - 4.0).abs() < 1e-13);
    }

    #[test]
    fn effective_loss_limits() {
        let p = unit();
        for &y in &[0.0, 0.5, 3.0] {
            for v in [Valley::Flat, Valley::Sharp] {
                assert_eq!(effective_loss(&p, 0.0, y, v).unwrap(), drift_loss(&p, y).unwrap());
            }
        }
        let iso = LandscapeParams::new(0.5, 0.5, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let l = loss(&iso, 0.2, 1.0).unwrap();
        assert!((effective_loss(&iso, 0.2, 1.0, Valley::Flat).unwrap() - l).abs() < 1e-15);
        // γ = 4: deeper flat well, raised sharp well
        let y = 2.0;
        let geo = valley_geometry(&p, y).unwrap();
        assert!(sgd_correction(&p, geo.x1_star, y, Valley::Flat).unwrap() < 0.0);
        assert!(sgd_correction(&p, geo.x2_star, y, Valley::Sharp).unwrap() > 0.0);
    }

    #[test]
    fn invalid_params_rejected() {
        let e = LandscapeParams::new(0.8, 0.9, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap_err();
        assert!(e.to_string().contains("x1 > x2 required"));
        assert!(LandscapeParams::new(0.8, 0.4, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(LandscapeParams::new(0.8, 0.4, 1.0, 1.0, 1.0, 1.0, -1.0, 1.0).is_err());
        assert!(LandscapeParams::new(0.8, 0.4, 1.0, 1.0, f64::NAN, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn psd_clamp_and_sqrt() {
        let m = Sym2::new(3.0, 1.0, 2.0);
        assert_eq!(m.psd_clamp(), m);
        let s = m.psd_sqrt();
        let sq = Sym2::new(s.a * s.a + s.b * s.b, s.a * s.b + s.b * s.d, s.b * s.b + s.d * s.d);
        assert!((sq.a - 3.0).abs() < 1e-14 && (sq.b - 1.0).abs() < 1e-14 && (sq.d - 2.0).abs() < 1e-14);

        let ind = Sym2::new(1.0, 2.0, -1.0);
        let (lp, lm) = ind.eigenvalues();
        assert!(lm < 0.0);
        let c = ind.psd_clamp();
        let (cp, cm) = c.eigenvalues();
        assert!((cp - lp).abs() < 1e-14);
        assert!(cm.abs() < 1e-14);
        assert_eq!(Sym2::new(-1.0, 0.0, -2.0).psd_sqrt(), Sym2::ZERO);
    }
}
