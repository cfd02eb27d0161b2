//! Brute-force oracles for the closed forms in [`crate::theory`].
//!
//! Nothing here calls `erfi` or any Kramers approximation: first-passage times
//! are nested quadratures of the loss itself, steady states are normalised by
//! quadrature, and the master equation is integrated step by step.
//!
//! Integrands are always evaluated as `exp(E - E_peak)` with the peak exponent
//! factored out, since the raw exponents routinely exceed 700.

use std::collections::BinaryHeap;

use crate::csvfmt::sci;
use crate::error::{Error, Result};
use crate::landscape::{self, LandscapeParams, Valley, ValleyGeometry};
use crate::theory;

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1] (non-negative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Explicit truncation bounds; `None` derives them from `truncation`.
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of interval bisections per integral.
    pub max_refinements: usize,
    /// Natural-log units below the peak at which tails are cut.
    pub truncation: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            x_min: None,
            x_max: None,
            abs_tol: 0.0,
            rel_tol: 1e-10,
            max_refinements: 2000,
            truncation: 40.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod 7/15 on `[a, b]`, bisecting the interval
/// with the largest error estimate until the total error meets tolerance.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_refinements: usize,
) -> Result<Integral> {
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0 });
    }
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value: v, error: e });
    let (mut total, mut err) = (v, e);
    let mut refinements = 0;
    while !(err <= abs_tol.max(rel_tol * total.abs())) {
        if refinements >= max_refinements || !total.is_finite() {
            return Err(Error::Quadrature { estimate: total, error: err });
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
        refinements += 1;
    }
    // re-sum to shed accumulated rounding from the running totals
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    Ok(Integral { value, error })
}

fn check_inputs(delta_s: f64, y: f64) -> Result<()> {
    if !(delta_s > 0.0 && delta_s.is_finite()) {
        return Err(Error::Domain(format!("Δ_S > 0 required (got {delta_s})")));
    }
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::Domain(format!("y > 0 required (got {y})")));
    }
    Ok(())
}

/// Direction of a first passage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Passage {
    FlatToSharp,
    SharpToFlat,
}

impl Passage {
    fn origin(self) -> Valley {
        match self {
            Passage::FlatToSharp => Valley::Flat,
            Passage::SharpToFlat => Valley::Sharp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfptEstimate {
    pub log_value: f64,
    /// Relative error estimate of the double integral.
    pub rel_error: f64,
}

impl MfptEstimate {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

/// Mean first-passage time from a valley floor to the ridge by nested quadrature.
///
/// For the sharp valley
/// `τ = (1/D) ∫_{x*}^{0} dx' e^{L(x')/D} ∫_{-∞}^{x'} dx'' e^{-L(x'')/D}`, mirrored
/// for the flat valley, with `D = 2Δ_S/f` of the starting branch.
pub fn mfpt_quadrature(
    p: &LandscapeParams,
    delta_s: f64,
    y: f64,
    direction: Passage,
    spec: &QuadratureSpec,
) -> Result<MfptEstimate> {
    check_inputs(delta_s, y)?;
    let geo = landscape::valley_geometry(p, y)?;
    let valley = direction.origin();
    let f = geo.flatness(valley);
    let d = 2.0 * delta_s / f;
    let x_star = geo.minimum(valley);
    let l0 = landscape::drift_loss(p, y)?;
    let l_min = landscape::loss(p, x_star, y)?;
    let e_peak = (l0 - l_min) / d;
    // exponent falls by `truncation` at distance sqrt(truncation f D) from the minimum
    let reach = (spec.truncation * f * d).sqrt();
    let loss = |x: f64| landscape::loss(p, x, y).expect("y validated");
    // inner tolerance tighter than outer
    let inner_rel = (spec.rel_tol * 1e-2).max(1e-14);

    let outer_err = std::cell::Cell::new(0.0_f64);
    let inner_failed = std::cell::Cell::new(None::<Error>);
    let outer = |xp: f64| -> f64 {
        let w = ((loss(xp) - l0) / d).exp();
        let inner = match direction {
            Passage::SharpToFlat => {
                let lo = spec.x_min.unwrap_or(x_star - reach);
                integrate(|x| (-(loss(x) - l_min) / d).exp(), lo.min(xp), xp, 0.0, inner_rel, spec.max_refinements)
            }
            Passage::FlatToSharp => {
                let hi = spec.x_max.unwrap_or(x_star + reach);
                integrate(|x| (-(loss(x) - l_min) / d).exp(), xp, hi.max(xp), 0.0, inner_rel, spec.max_refinements)
            }
        };
        match inner {
            Ok(i) => {
                outer_err.set(outer_err.get().max(i.error / i.value.max(f64::MIN_POSITIVE)));
                w * i.value
            }
            Err(e) => {
                inner_failed.set(Some(e));
                f64::NAN
            }
        }
    };
    let (a, b) = match direction {
        Passage::SharpToFlat => (x_star, 0.0),
        Passage::FlatToSharp => (0.0, x_star),
    };
    let res = integrate(outer, a, b, spec.abs_tol, spec.rel_tol, spec.max_refinements);
    if let Some(e) = inner_failed.take() {
        return Err(e);
    }
    let res = res?;
    Ok(MfptEstimate {
        log_value: e_peak - d.ln() + res.value.ln(),
        rel_error: res.error / res.value + outer_err.get(),
    })
}

/// Quasi-steady conditional density in `x` at fixed `y`:
/// `P(x|y) ∝ exp(-(L(x, y) - L0(y)) / D11±)` on each side of the ridge, which
/// makes the density continuous at `x = 0`.
#[derive(Debug, Clone)]
pub struct BoltzmannConditional {
    params: LandscapeParams,
    y: f64,
    geo: ValleyGeometry,
    l0: f64,
    d_flat: f64,
    d_sharp: f64,
    /// Largest exponent over both branches, factored out of every evaluation.
    e_peak: f64,
    /// Scaled branch masses `∫ exp(-(L - L0)/D - e_peak)`.
    mass_flat: f64,
    mass_sharp: f64,
    bounds: (f64, f64),
}

impl BoltzmannConditional {
    fn exponent(&self, x: f64) -> f64 {
        let l = landscape::loss(&self.params, x, self.y).expect("y validated");
        let d = if x >= 0.0 { self.d_flat } else { self.d_sharp };
        -(l - self.l0) / d - self.e_peak
    }

    /// Glued density, normalised over the real line.
    pub fn density(&self, x: f64) -> f64 {
        self.exponent(x).exp() / (self.mass_flat + self.mass_sharp)
    }

    /// Density conditioned on one branch (zero on the other side).
    pub fn branch_density(&self, branch: Valley, x: f64) -> f64 {
        if Valley::of(x) != branch {
            return 0.0;
        }
        let m = match branch {
            Valley::Flat => self.mass_flat,
            Valley::Sharp => self.mass_sharp,
        };
        self.exponent(x).exp() / m
    }

    /// Probability mass on one side of the ridge.
    pub fn occupancy(&self, branch: Valley) -> f64 {
        let m = match branch {
            Valley::Flat => self.mass_flat,
            Valley::Sharp => self.mass_sharp,
        };
        m / (self.mass_flat + self.mass_sharp)
    }

    /// Integration support `[x_lo, x_hi]` outside which mass is below `e^{-40}`.
    pub fn support(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn peak(&self) -> f64 {
        if self.mass_flat >= self.mass_sharp {
            self.geo.x1_star
        } else {
            self.geo.x2_star
        }
    }

    /// Log-ratio of flat to sharp occupancy predicted from separately integrated
    /// unglued branches `∫ exp(-L/D±)` and the continuity condition on the
    /// normalisation constants.
    pub fn continuity_log_ratio(&self, spec: &QuadratureSpec) -> Result<f64> {
        let l_min = self.l0 - landscape::barrier_height(&self.params, self.y)?;
        let log_i = |d: f64, a: f64, b: f64| -> Result<f64> {
            let r = integrate(
                |x| {
                    (-(landscape::loss(&self.params, x, self.y).expect("y validated") - l_min) / d)
                        .exp()
                },
                a,
                b,
                0.0,
                spec.rel_tol,
                spec.max_refinements,
            )?;
            Ok(-l_min / d + r.value.ln())
        };
        let (lo, hi) = self.bounds;
        let log_flat = log_i(self.d_flat, 0.0, hi)?;
        let log_sharp = log_i(self.d_sharp, lo, 0.0)?;
        Ok(log_flat - log_sharp + self.l0 * (1.0 / self.d_flat - 1.0 / self.d_sharp))
    }

    /// Tabulated CDF on `n` Gauss–Kronrod panels per branch.
    pub fn cdf_table(&self, n: usize) -> CdfTable {
        let (lo, hi) = self.bounds;
        let total = self.mass_flat + self.mass_sharp;
        let f = |x: f64| self.exponent(x).exp() / total;
        let mut knots = Vec::with_capacity(2 * n + 1);
        let mut values = Vec::with_capacity(2 * n + 1);
        let mut acc = 0.0;
        knots.push(lo);
        values.push(0.0);
        for (a, b) in [(lo, 0.0), (0.0, hi)] {
            for i in 0..n {
                let x0 = a + (b - a) * i as f64 / n as f64;
                let x1 = a + (b - a) * (i + 1) as f64 / n as f64;
                acc += gk15(&f, x0, x1).0;
                knots.push(x1);
                values.push(acc);
            }
        }
        CdfTable { knots, values }
    }
}

/// Piecewise-linear CDF.
#[derive(Debug, Clone)]
pub struct CdfTable {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl CdfTable {
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.knots.len();
        if x <= self.knots[0] {
            return 0.0;
        }
        if x >= self.knots[n - 1] {
            return self.values[n - 1].min(1.0);
        }
        let i = self.knots.partition_point(|&k| k <= x);
        let (x0, x1) = (self.knots[i - 1], self.knots[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        v0 + (v1 - v0) * (x - x0) / (x1 - x0)
    }
}

/// Builds the two-branch conditional steady state at fixed `y`.
pub fn boltzmann_conditional(
    p: &LandscapeParams,
    delta_s: f64,
    y: f64,
    spec: &QuadratureSpec,
) -> Result<BoltzmannConditional> {
    check_inputs(delta_s, y)?;
    let geo = landscape::valley_geometry(p, y)?;
    let l0 = landscape::drift_loss(p, y)?;
    let dl = landscape::barrier_height(p, y)?;
    let d_flat = 2.0 * delta_s / geo.f1;
    let d_sharp = 2.0 * delta_s / geo.f2;
    let e_peak = (dl / d_flat).max(dl / d_sharp);
    // (x - x*)^2 / (f D) = truncation, and f D = 2 Δ_S on both sides
    let reach = (spec.truncation * 2.0 * delta_s).sqrt();
    let bounds = (
        spec.x_min.unwrap_or(geo.x2_star - reach).min(0.0),
        spec.x_max.unwrap_or(geo.x1_star + reach).max(0.0),
    );
    let mut out = BoltzmannConditional {
        params: *p,
        y,
        geo,
        l0,
        d_flat,
        d_sharp,
        e_peak,
        mass_flat: 1.0,
        mass_sharp: 1.0,
        bounds,
    };
    let probe = out.clone();
    let f = |x: f64| probe.exponent(x).exp();
    // split each branch at its minimum so both halves are monotone
    let mass = |a: f64, m: f64, b: f64| -> Result<f64> {
        Ok(integrate(f, a, m, spec.abs_tol, spec.rel_tol, spec.max_refinements)?.value
            + integrate(f, m, b, spec.abs_tol, spec.rel_tol, spec.max_refinements)?.value)
    };
    out.mass_sharp = mass(bounds.0, geo.x2_star.max(bounds.0), 0.0)?;
    out.mass_flat = mass(0.0, geo.x1_star.min(bounds.1), bounds.1)?;
    Ok(out)
}

/// Deterministic slow drift of `y` along the valley floor,
/// `dy/dt = (L_d/y_d) e^{-y/y_d} + 2 x0² y_f y / (f0 (y + y_f)³)`.
#[derive(Debug, Clone, Copy)]
pub struct SlowDrift {
    params: LandscapeParams,
    y0: f64,
}

impl SlowDrift {
    pub fn new(p: &LandscapeParams, y0: f64) -> Result<Self> {
        if !(y0 >= 0.0 && y0.is_finite()) {
            return Err(Error::Domain(format!("y0 >= 0 required (got {y0})")));
        }
        Ok(Self { params: *p, y0 })
    }

    fn speed(&self, y: f64) -> f64 {
        let tau = theory::timescales(&self.params, y.max(0.0)).expect("y >= 0").tau_y;
        1.0 / tau
    }

    fn rk4(&self, y: f64, h: f64) -> f64 {
        let k1 = self.speed(y);
        let k2 = self.speed(y + 0.5 * h * k1);
        let k3 = self.speed(y + 0.5 * h * k2);
        let k4 = self.speed(y + h * k3);
        y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    }

    /// `y(t)` by RK4 with steps of at most a fiftieth of the local drift time.
    pub fn y_at(&self, t: f64) -> f64 {
        let mut y = self.y0;
        let mut now = 0.0;
        while now < t {
            let v = self.speed(y);
            let h = if v > 0.0 { (0.02 * (y.max(1e-3)) / v).min(t - now) } else { t - now };
            let h = h.max(1e-12 * t).min(t - now);
            if v == 0.0 {
                break;
            }
            y = self.rk4(y, h);
            now += h;
        }
        y
    }

    /// `y` on the uniform time grid `0, dt, 2dt, ..., t_end`.
    pub fn path(&self, t_end: f64, dt: f64) -> DriftPath {
        let n = (t_end / dt).ceil() as usize;
        let mut ys = Vec::with_capacity(n + 1);
        let mut y = self.y0;
        ys.push(y);
        for _ in 0..n {
            y = self.rk4(y, dt);
            ys.push(y);
        }
        DriftPath { dt, ys }
    }
}

#[derive(Debug, Clone)]
pub struct DriftPath {
    dt: f64,
    ys: Vec<f64>,
}

impl DriftPath {
    pub fn y(&self, t: f64) -> f64 {
        let s = (t / self.dt).max(0.0);
        let i = s.floor() as usize;
        if i + 1 >= self.ys.len() {
            return *self.ys.last().expect("non-empty");
        }
        let w = s - i as f64;
        self.ys[i] * (1.0 - w) + self.ys[i + 1] * w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterSolution {
    pub times: Vec<f64>,
    pub p_flat: Vec<f64>,
}

impl MasterSolution {
    pub fn terminal(&self) -> f64 {
        *self.p_flat.last().expect("non-empty")
    }
}

/// Two-state master equation `dP/dt = k-(y)(1 - P) - k+(y) P` along `y(t)`,
/// integrated with classical RK4 at fixed `dt`; rates are the Kramers rates.
///
/// Fails with [`Error::Stability`] as soon as `dt (k+ + k-) >= 0.1`.
pub fn master_equation_pflat<Y: Fn(f64) -> f64>(
    p: &LandscapeParams,
    delta_s: f64,
    p0_flat: f64,
    y_path: Y,
    t_end: f64,
    dt: f64,
) -> Result<MasterSolution> {
    if !(0.0..=1.0).contains(&p0_flat) {
        return Err(Error::Domain(format!("p0_flat in [0, 1] required (got {p0_flat})")));
    }
    if !(dt > 0.0 && t_end >= 0.0) {
        return Err(Error::Domain("dt > 0 and t_end >= 0 required".into()));
    }
    let rates = |t: f64| -> Result<(f64, f64)> {
        let m = theory::kramers_mfpt(p, delta_s, y_path(t))?;
        Ok((m.k_flat(), m.k_sharp()))
    };
    let rhs = |t: f64, pf: f64| -> Result<(f64, f64)> {
        let (kp, km) = rates(t)?;
        Ok((km * (1.0 - pf) - kp * pf, kp + km))
    };
    let n = (t_end / dt).round() as usize;
    let mut times = Vec::with_capacity(n + 1);
    let mut p_flat = Vec::with_capacity(n + 1);
    let mut pf = p0_flat;
    times.push(0.0);
    p_flat.push(pf);
    for i in 0..n {
        let t = i as f64 * dt;
        let (k1, s1) = rhs(t, pf)?;
        let (k2, s2) = rhs(t + 0.5 * dt, pf + 0.5 * dt * k1)?;
        let (k3, _) = rhs(t + 0.5 * dt, pf + 0.5 * dt * k2)?;
        let (k4, s4) = rhs(t + dt, pf + dt * k3)?;
        let stiff = dt * s1.max(s2).max(s4);
        if stiff >= 0.1 {
            return Err(Error::Stability(stiff));
        }
        pf += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        times.push(t + dt);
        p_flat.push(pf);
    }
    Ok(MasterSolution { times, p_flat })
}

pub const COMPARISON_HEADER: &str = "quantity,closed_form,oracle,rel_err,in_regime";

/// A closed-form value paired with its oracle estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub quantity: String,
    pub closed_form: f64,
    pub oracle: f64,
    pub in_regime: bool,
}

impl Comparison {
    pub fn rel_err(&self) -> f64 {
        ((self.closed_form - self.oracle) / self.oracle).abs()
    }
}

/// Both MFPT directions at `(Δ_S, y)`, closed form against quadrature.
pub fn compare_mfpt(
    p: &LandscapeParams,
    delta_s: f64,
    y: f64,
    spec: &QuadratureSpec,
) -> Result<[Comparison; 2]> {
    let m = theory::kramers_mfpt(p, delta_s, y)?;
    let fs = mfpt_quadrature(p, delta_s, y, Passage::FlatToSharp, spec)?;
    let sf = mfpt_quadrature(p, delta_s, y, Passage::SharpToFlat, spec)?;
    let tag = |dir: &str| format!("mfpt_{dir}[y={y} delta_s={delta_s}]");
    Ok([
        Comparison {
            quantity: tag("flat_to_sharp"),
            closed_form: m.flat_to_sharp(),
            oracle: fs.value(),
            in_regime: m.in_regime,
        },
        Comparison {
            quantity: tag("sharp_to_flat"),
            closed_form: m.sharp_to_flat(),
            oracle: sf.value(),
            in_regime: m.in_regime,
        },
    ])
}

pub fn write_comparison_csv<W: std::io::Write>(mut w: W, rows: &[Comparison]) -> Result<()> {
    writeln!(w, "{COMPARISON_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.quantity,
            sci(r.closed_form),
            sci(r.oracle),
            sci(r.rel_err()),
            r.in_regime
        )?;
    }
    Ok(())
}
