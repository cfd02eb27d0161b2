//! Closed-form quasi-steady-state and freezing theory for the two-valley model.
//!
//! Everything that involves an escape rate is carried in log space; the raw
//! rates are only exponentiated for reporting.

use crate::error::{Error, Result};
use crate::landscape::{self, LandscapeParams, Valley};
use crate::csvfmt::sci;
use crate::specialfn;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diffusion {
    pub d11_flat: f64,
    pub d11_sharp: f64,
    pub t_eff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timescales {
    pub tau_x_flat: f64,
    pub tau_x_sharp: f64,
    pub tau_y: f64,
}

impl Timescales {
    /// The slower (flatter-branch) transverse relaxation time.
    pub fn tau_x(&self) -> f64 {
        self.tau_x_flat.max(self.tau_x_sharp)
    }
}

/// Kramers mean first-passage times from each valley floor to the ridge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mfpt {
    pub log_flat_to_sharp: f64,
    pub log_sharp_to_flat: f64,
    /// `Δ_S < (x2 y/(y + y_b))^2 / 2`, the deep-barrier condition for the sharper valley.
    pub in_regime: bool,
}

impl Mfpt {
    pub fn flat_to_sharp(&self) -> f64 {
        self.log_flat_to_sharp.exp()
    }
    pub fn sharp_to_flat(&self) -> f64 {
        self.log_sharp_to_flat.exp()
    }
    /// `ln k+`, escape rate out of the flat valley.
    pub fn log_k_flat(&self) -> f64 {
        -self.log_flat_to_sharp
    }
    /// `ln k-`, escape rate out of the sharp valley.
    pub fn log_k_sharp(&self) -> f64 {
        -self.log_sharp_to_flat
    }
    pub fn k_flat(&self) -> f64 {
        self.log_k_flat().exp()
    }
    pub fn k_sharp(&self) -> f64 {
        self.log_k_sharp().exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub p_flat_eq: f64,
    pub p_flat_ss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreezingPoint {
    pub phi: f64,
    /// `+inf` when the system never freezes (non-positive denominator), `0` when
    /// the noise is already below the freezing threshold at `y = 0`.
    pub y_freeze: f64,
    pub in_regime: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transient {
    /// Closed power-law form.
    pub p_flat_tr: f64,
    /// Same quantity evaluated through `y_freeze`; `None` out of regime.
    pub p_flat_tr_via_y_freeze: Option<f64>,
    pub in_regime: bool,
}

/// Bundle of every closed-form quantity at one `(Δ_S, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryPrediction {
    pub y: f64,
    pub delta_s: f64,
    pub d11_flat: f64,
    pub d11_sharp: f64,
    pub t_eff: f64,
    pub tau_x: f64,
    pub tau_y: f64,
    pub mfpt_flat_to_sharp: f64,
    pub mfpt_sharp_to_flat: f64,
    pub log_k_flat: f64,
    pub log_k_sharp: f64,
    pub k_flat: f64,
    pub k_sharp: f64,
    pub kramers_in_regime: bool,
    pub p_flat_eq: f64,
    pub p_flat_ss: f64,
    pub p_flat_tr: f64,
    pub y_freeze: f64,
    pub phi: f64,
    pub epsilon: f64,
    pub freezing_in_regime: bool,
}

fn check_noise(delta_s: f64, strict: bool) -> Result<()> {
    let ok = if strict { delta_s > 0.0 } else { delta_s >= 0.0 };
    if ok && delta_s.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "effective noise Δ_S {} 0 required (got {delta_s})",
            if strict { ">" } else { ">=" }
        )))
    }
}

/// `1 / (1 + e^t)` without overflow.
#[inline]
pub(crate) fn logistic_neg(t: f64) -> f64 {
    if t > 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

pub fn diffusion_and_temperature(p: &LandscapeParams, delta_s: f64, y: f64) -> Result<Diffusion> {
    check_noise(delta_s, false)?;
    let geo = landscape::valley_geometry(p, y)?;
    if !(geo.f1 > 0.0 && geo.f2 > 0.0) {
        return Err(Error::Domain(format!("degenerate flatness at y = {y}")));
    }
    Ok(Diffusion {
        d11_flat: 2.0 * delta_s / geo.f1,
        d11_sharp: 2.0 * delta_s / geo.f2,
        t_eff: 2.0 * delta_s / (geo.f1 * geo.f2).sqrt(),
    })
}

/// Inverse slow-drift speed along the valley floor.
fn drift_speed(p: &LandscapeParams, y: f64) -> f64 {
    let yf = y + p.y_f();
    p.l_d() / p.y_d() * (-y / p.y_d()).exp() + 2.0 * p.offset() * p.y_f() * y / (yf * yf * yf)
}

pub fn timescales(p: &LandscapeParams, y: f64) -> Result<Timescales> {
    let geo = landscape::valley_geometry(p, y)?;
    Ok(Timescales {
        tau_x_flat: 0.5 * geo.f1,
        tau_x_sharp: 0.5 * geo.f2,
        tau_y: 1.0 / drift_speed(p, y),
    })
}

/// Supremum of `τ_x` over `y >= 0`. `f1` is monotone in `y`, so it sits at an end.
pub fn tau_x_max(p: &LandscapeParams) -> f64 {
    let at_zero = 0.5 * landscape::valley_geometry(p, 0.0).map(|g| g.f1).unwrap_or(f64::NAN);
    at_zero.max(0.5 * p.flatness_limit(Valley::Flat))
}

/// Minimum of `τ_y` over `y >= 0`, by a dense log-spaced scan refined with
/// golden-section search.
pub fn tau_y_min(p: &LandscapeParams) -> f64 {
    let scale = p.y_f().max(p.y_d()).max(p.y_b());
    let mut best_y = 0.0;
    let mut best = drift_speed(p, 0.0);
    let n = 4000;
    let (lo, hi) = ((scale * 1e-6).ln(), (scale * 1e4).ln());
    for i in 0..=n {
        let y = (lo + (hi - lo) * i as f64 / n as f64).exp();
        let v = drift_speed(p, y);
        if v > best {
            best = v;
            best_y = y;
        }
    }
    if best_y > 0.0 {
        let step = ((hi - lo) / n as f64).exp();
        let (mut a, mut b) = (best_y / step, best_y * step);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if drift_speed(p, c) > drift_speed(p, d) {
                b = d;
            } else {
                a = c;
            }
        }
        best = best.max(drift_speed(p, 0.5 * (a + b)));
    }
    1.0 / best
}

/// Adiabatic separation `max τ_x / min τ_y`.
pub fn timescale_separation(p: &LandscapeParams) -> f64 {
    tau_x_max(p) / tau_y_min(p)
}

/// Kramers exponent `ΔL f / (2Δ_S)` of a valley.
pub fn kramers_exponent(p: &LandscapeParams, delta_s: f64, y: f64, valley: Valley) -> Result<f64> {
    check_noise(delta_s, true)?;
    let geo = landscape::valley_geometry(p, y)?;
    let dl = landscape::barrier_height(p, y)?;
    Ok(dl * geo.flatness(valley) / (2.0 * delta_s))
}

pub fn kramers_mfpt(p: &LandscapeParams, delta_s: f64, y: f64) -> Result<Mfpt> {
    check_noise(delta_s, true)?;
    if !(y > 0.0) {
        return Err(Error::Domain(format!("kramers_mfpt needs y > 0 (got {y})")));
    }
    let geo = landscape::valley_geometry(p, y)?;
    let dl = landscape::barrier_height(p, y)?;
    let log_tau = |f: f64| -> Result<f64> {
        let z = (dl * f / (2.0 * delta_s)).sqrt();
        Ok((std::f64::consts::FRAC_PI_2 * f).ln() + specialfn::log_erfi(z)?)
    };
    let u = p.x2() * y / (y + p.y_b());
    Ok(Mfpt {
        log_flat_to_sharp: log_tau(geo.f1)?,
        log_sharp_to_flat: log_tau(geo.f2)?,
        in_regime: delta_s < 0.5 * u * u,
    })
}

/// Leading-order asymptotic escape rate `ln k` out of `valley`.
pub fn log_rate_asymptotic(p: &LandscapeParams, delta_s: f64, y: f64, valley: Valley) -> Result<f64> {
    check_noise(delta_s, true)?;
    let geo = landscape::valley_geometry(p, y)?;
    let f = geo.flatness(valley);
    let dl = landscape::barrier_height(p, y)?;
    Ok(0.5 * (2.0 * dl / (std::f64::consts::PI * delta_s * f)).ln() - dl * f / (2.0 * delta_s))
}

pub fn p_flat_equilibrium(p: &LandscapeParams) -> f64 {
    p.gamma() / (1.0 + p.gamma())
}

pub fn p_flat_steady(p: &LandscapeParams, delta_s: f64, y: f64) -> Result<SteadyState> {
    check_noise(delta_s, true)?;
    landscape::valley_geometry(p, y)?;
    let gamma = p.gamma();
    let p_flat_eq = p_flat_equilibrium(p);
    if y == 0.0 {
        return Ok(SteadyState {
            p_flat_eq,
            p_flat_ss: 1.0 / (1.0 + gamma.powf(-1.5)),
        });
    }
    let z_sharp = kramers_exponent(p, delta_s, y, Valley::Sharp)?.sqrt();
    let z_flat = kramers_exponent(p, delta_s, y, Valley::Flat)?.sqrt();
    let t = -gamma.ln() + specialfn::log_erfi_ratio(z_sharp, z_flat)?;
    Ok(SteadyState {
        p_flat_eq,
        p_flat_ss: logistic_neg(t),
    })
}

/// Exponential (deep-barrier) approximation of the steady-state flat probability.
pub fn p_flat_steady_asymptotic(p: &LandscapeParams, delta_s: f64, y: f64) -> Result<f64> {
    check_noise(delta_s, true)?;
    let geo = landscape::valley_geometry(p, y)?;
    let dl = landscape::barrier_height(p, y)?;
    let t = -0.5 * p.gamma().ln() + dl * (geo.f2 - geo.f1) / (2.0 * delta_s);
    Ok(logistic_neg(t))
}

/// Upper-bound freezing constant
/// `Φ = 2(x1² - x2²)/(27 y_b) · (L_d/y_d + 8 x0²/(27 y_f))`.
pub fn phi(p: &LandscapeParams) -> f64 {
    let x1 = p.x1();
    let x2 = p.x2();
    2.0 * (x1 * x1 - x2 * x2) / (27.0 * p.y_b())
        * (p.l_d() / p.y_d() + 8.0 * p.x0() * p.x0() / (27.0 * p.y_f()))
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("0 < epsilon < 1 required (got {epsilon})")))
    }
}

pub fn freezing_point(p: &LandscapeParams, delta_s: f64, epsilon: f64) -> Result<FreezingPoint> {
    check_noise(delta_s, true)?;
    check_epsilon(epsilon)?;
    let phi = phi(p);
    let ephi = epsilon * phi;
    let log_arg = (delta_s / (ephi * ephi)).ln();
    if log_arg <= 0.0 {
        return Ok(FreezingPoint { phi, y_freeze: 0.0, in_regime: false });
    }
    let s = (delta_s * log_arg).sqrt();
    let denom = p.x2() - s;
    if denom <= 0.0 {
        return Ok(FreezingPoint { phi, y_freeze: f64::INFINITY, in_regime: false });
    }
    Ok(FreezingPoint {
        phi,
        y_freeze: p.y_b() * s / denom,
        in_regime: true,
    })
}

pub fn p_flat_transient(p: &LandscapeParams, delta_s: f64, epsilon: f64) -> Result<Transient> {
    let fp = freezing_point(p, delta_s, epsilon)?;
    let gamma = p.gamma();
    let log_base = 0.5 * delta_s.ln() - (epsilon * fp.phi).ln();
    // γ = 1 makes Φ = 0 and the power law degenerate to a constant
    let t = if gamma == 1.0 {
        0.0
    } else {
        -0.5 * gamma.ln() + (1.0 - gamma) * log_base
    };
    let via = if fp.in_regime {
        let u = fp.y_freeze / (p.y_b() + fp.y_freeze);
        let x1 = p.x1();
        let x2 = p.x2();
        let expo = (x2 * x2 - x1 * x1) / (2.0 * delta_s) * u * u;
        Some(logistic_neg(-0.5 * gamma.ln() + expo))
    } else {
        None
    };
    Ok(Transient {
        p_flat_tr: logistic_neg(t),
        p_flat_tr_via_y_freeze: via,
        in_regime: fp.in_regime,
    })
}

pub fn predict(p: &LandscapeParams, delta_s: f64, y: f64, epsilon: f64) -> Result<TheoryPrediction> {
    let diff = diffusion_and_temperature(p, delta_s, y)?;
    let ts = timescales(p, y)?;
    let mfpt = kramers_mfpt(p, delta_s, y)?;
    let ss = p_flat_steady(p, delta_s, y)?;
    let fp = freezing_point(p, delta_s, epsilon)?;
    let tr = p_flat_transient(p, delta_s, epsilon)?;
    Ok(TheoryPrediction {
        y,
        delta_s,
        d11_flat: diff.d11_flat,
        d11_sharp: diff.d11_sharp,
        t_eff: diff.t_eff,
        tau_x: ts.tau_x(),
        tau_y: ts.tau_y,
        mfpt_flat_to_sharp: mfpt.flat_to_sharp(),
        mfpt_sharp_to_flat: mfpt.sharp_to_flat(),
        log_k_flat: mfpt.log_k_flat(),
        log_k_sharp: mfpt.log_k_sharp(),
        k_flat: mfpt.k_flat(),
        k_sharp: mfpt.k_sharp(),
        kramers_in_regime: mfpt.in_regime,
        p_flat_eq: ss.p_flat_eq,
        p_flat_ss: ss.p_flat_ss,
        p_flat_tr: tr.p_flat_tr,
        y_freeze: fp.y_freeze,
        phi: fp.phi,
        epsilon,
        freezing_in_regime: fp.in_regime,
    })
}

pub const THEORY_HEADER: &str =
    "y,delta_s,d11_flat,d11_sharp,t_eff,log_k_flat,log_k_sharp,p_flat_eq,p_flat_ss";
pub const FREEZING_HEADER: &str = "delta_s,epsilon,phi,y_freeze,p_flat_tr,in_regime";

/// One theory-table row per `y` (all `y > 0`) at fixed `Δ_S`.
pub fn write_theory_table<W: std::io::Write>(
    mut w: W,
    p: &LandscapeParams,
    delta_s: f64,
    ys: &[f64],
) -> Result<()> {
    writeln!(w, "{THEORY_HEADER}")?;
    for &y in ys {
        let d = diffusion_and_temperature(p, delta_s, y)?;
        let m = kramers_mfpt(p, delta_s, y)?;
        let ss = p_flat_steady(p, delta_s, y)?;
        let row = [y, delta_s, d.d11_flat, d.d11_sharp, d.t_eff, m.log_k_flat(), m.log_k_sharp(), ss.p_flat_eq, ss.p_flat_ss];
        writeln!(w, "{}", row.map(sci).join(","))?;
    }
    Ok(())
}

/// One freezing-table row per `Δ_S`.
pub fn write_freezing_table<W: std::io::Write>(
    mut w: W,
    p: &LandscapeParams,
    delta_s_values: &[f64],
    epsilon: f64,
) -> Result<()> {
    writeln!(w, "{FREEZING_HEADER}")?;
    for &ds in delta_s_values {
        let fp = freezing_point(p, ds, epsilon)?;
        let tr = p_flat_transient(p, ds, epsilon)?;
        writeln!(
            w,
            "{},{},{},{},{},{}",
            sci(ds),
            sci(epsilon),
            sci(fp.phi),
            sci(fp.y_freeze),
            sci(tr.p_flat_tr),
            fp.in_regime
        )?;
    }
    Ok(())
}
