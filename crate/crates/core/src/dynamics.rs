//! Discrete SGD-like Langevin dynamics with Hessian-shaped noise:
//! `θ' = θ - η (∇L(θ) + ξ)`, `ξ ~ N(0, 2σ PSD(H(θ)))`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::landscape::{self, LandscapeParams, Sym2, Valley};

/// Where trajectories start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    FlatSide,
    SharpSide,
    /// Even run indices start flat, odd ones sharp.
    Alternating,
}

impl InitMode {
    pub fn side_for_run(self, run_index: u64) -> Valley {
        match self {
            InitMode::FlatSide => Valley::Flat,
            InitMode::SharpSide => Valley::Sharp,
            InitMode::Alternating => {
                if run_index.is_multiple_of(2) {
                    Valley::Flat
                } else {
                    Valley::Sharp
                }
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InitMode::FlatSide => "flat_side",
            InitMode::SharpSide => "sharp_side",
            InitMode::Alternating => "alternating",
        }
    }
}

impl std::str::FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat_side" => Ok(InitMode::FlatSide),
            "sharp_side" => Ok(InitMode::SharpSide),
            "alternating" => Ok(InitMode::Alternating),
            other => Err(Error::Invalid(format!(
                "init_mode must be flat_side, sharp_side or alternating (got '{other}')"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsConfig {
    pub eta: f64,
    pub sigma: f64,
    pub t_max: u64,
    pub y0: f64,
    pub init_mode: InitMode,
    pub x_init_offset: f64,
    /// Discard the y-component of every update.
    pub clamp_y: bool,
    pub seed: u64,
    pub record_stride: u64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            eta: 0.01,
            sigma: 0.1,
            t_max: 200_000,
            y0: 0.1,
            init_mode: InitMode::Alternating,
            x_init_offset: 0.05,
            clamp_y: false,
            seed: 0,
            record_stride: 100,
        }
    }
}

impl DynamicsConfig {
    /// Effective noise `Δ_S = η σ`.
    pub fn delta_s(&self) -> f64 {
        self.eta * self.sigma
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Invalid(format!("eta > 0 required (got {})", self.eta)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Invalid(format!("sigma >= 0 required (got {})", self.sigma)));
        }
        if self.t_max < 1 {
            return Err(Error::Invalid("t_max >= 1 required".into()));
        }
        if !(self.y0 >= 0.0 && self.y0.is_finite()) {
            return Err(Error::Invalid(format!("y0 >= 0 required (got {})", self.y0)));
        }
        if !(self.x_init_offset >= 0.0 && self.x_init_offset.is_finite()) {
            return Err(Error::Invalid(format!(
                "x_init_offset >= 0 required (got {})",
                self.x_init_offset
            )));
        }
        if self.record_stride < 1 {
            return Err(Error::Invalid("record_stride >= 1 required".into()));
        }
        Ok(())
    }

    pub fn initial_state(&self, side: Valley) -> State {
        let x = match side {
            Valley::Flat => self.x_init_offset,
            Valley::Sharp => -self.x_init_offset,
        };
        State { x, y: self.y0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub x: f64,
    pub y: f64,
}

impl State {
    pub fn valley(&self) -> Valley {
        Valley::of(self.x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: u64,
    pub x: f64,
    pub y: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub states: Vec<TrajectoryPoint>,
    /// Iterations at which `sign(x)` changed (the index of the first iterate
    /// on the new side).
    pub switches: Vec<u64>,
    pub t_freeze: u64,
    pub final_valley: Valley,
    pub final_state: State,
    pub diverged: bool,
}

/// Per-run summary kept by ensembles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    pub run_index: u64,
    pub initial_valley: Valley,
    pub final_valley: Valley,
    pub final_state: State,
    pub t_freeze: u64,
    pub n_switches: u64,
    pub diverged: bool,
}

pub fn noise_covariance(p: &LandscapeParams, x: f64, y: f64, sigma: f64) -> Result<Sym2> {
    if !(sigma >= 0.0) {
        return Err(Error::Domain(format!("sigma >= 0 required (got {sigma})")));
    }
    Ok(landscape::hessian(p, x, y)?.psd_clamp().scale(2.0 * sigma))
}

#[inline]
fn is_diverged(p: &LandscapeParams, s: &State) -> bool {
    !(s.x.is_finite() && s.y.is_finite()) || s.x.abs() > 100.0 * p.x1()
}

/// One update. Callers guarantee `state.y >= 0`.
#[inline]
fn advance<R: Rng + ?Sized>(
    p: &LandscapeParams,
    eta: f64,
    noise_scale: f64,
    clamp_y: bool,
    s: State,
    rng: &mut R,
) -> State {
    let e = landscape::eval_unchecked(p, s.x, s.y);
    let (mut gx, mut gy) = (e.grad[0], e.grad[1]);
    if noise_scale > 0.0 {
        let root = e.hessian.psd_sqrt();
        let n0: f64 = rng.sample(StandardNormal);
        let n1: f64 = rng.sample(StandardNormal);
        let xi = root.mul_vec([n0, n1]);
        gx += noise_scale * xi[0];
        gy += noise_scale * xi[1];
    }
    let x = s.x - eta * gx;
    let y = if clamp_y { s.y } else { (s.y - eta * gy).abs() };
    State { x, y }
}

/// A single update from `state`, drawing noise from `rng`.
pub fn step<R: Rng + ?Sized>(
    p: &LandscapeParams,
    config: &DynamicsConfig,
    state: State,
    rng: &mut R,
) -> Result<State> {
    if !(state.y >= 0.0) {
        return Err(Error::Domain(format!("state y >= 0 required (got {})", state.y)));
    }
    let next = advance(p, config.eta, (2.0 * config.sigma).sqrt(), config.clamp_y, state, rng);
    let l = landscape::loss(p, next.x, next.y)?;
    if !l.is_finite() || is_diverged(p, &next) {
        return Err(Error::Domain(format!(
            "iterate diverged at (x, y) = ({}, {})",
            next.x, next.y
        )));
    }
    Ok(next)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Runs `config.t_max` steps from the side chosen for `run_index`, calling
/// `observe(t, state)` after every step. Returns the summary and the switch list.
pub fn run_with<F: FnMut(u64, State)>(
    p: &LandscapeParams,
    config: &DynamicsConfig,
    run_index: u64,
    seed: u64,
    keep_switches: bool,
    mut observe: F,
) -> Result<(RunOutcome, Vec<u64>)> {
    config.validate()?;
    let side = config.init_mode.side_for_run(run_index);
    let mut rng = rng_from_seed(seed);
    let noise_scale = (2.0 * config.sigma).sqrt();
    let mut s = config.initial_state(side);
    let mut valley = s.valley();
    let mut switches = Vec::new();
    let mut n_switches = 0u64;
    let mut t_freeze = 0u64;
    let mut diverged = is_diverged(p, &s);
    observe(0, s);
    if !diverged {
        for t in 1..=config.t_max {
            s = advance(p, config.eta, noise_scale, config.clamp_y, s, &mut rng);
            if is_diverged(p, &s) {
                diverged = true;
                break;
            }
            let v = s.valley();
            if v != valley {
                valley = v;
                n_switches += 1;
                t_freeze = t;
                if keep_switches {
                    switches.push(t);
                }
            }
            observe(t, s);
        }
    }
    if !diverged && !landscape::loss(p, s.x, s.y).map(f64::is_finite).unwrap_or(false) {
        diverged = true;
    }
    Ok((
        RunOutcome {
            run_index,
            initial_valley: side,
            final_valley: s.valley(),
            final_state: s,
            t_freeze,
            n_switches,
            diverged,
        },
        switches,
    ))
}

/// One trajectory for `config.seed`, recording every `record_stride`-th state
/// (and the last one).
pub fn simulate(p: &LandscapeParams, config: &DynamicsConfig) -> Result<TrajectoryRecord> {
    let stride = config.record_stride.max(1);
    let mut states = Vec::new();
    let mut last = None;
    let (outcome, switches) = run_with(p, config, 0, config.seed, true, |t, s| {
        if t % stride == 0 {
            let loss = landscape::eval_unchecked(p, s.x, s.y).loss;
            states.push(TrajectoryPoint { t, x: s.x, y: s.y, loss });
        }
        last = Some((t, s));
    })?;
    if let Some((t, s)) = last {
        if states.last().map(|pt| pt.t) != Some(t) {
            let loss = landscape::eval_unchecked(p, s.x, s.y).loss;
            states.push(TrajectoryPoint { t, x: s.x, y: s.y, loss });
        }
    }
    Ok(TrajectoryRecord {
        states,
        switches,
        t_freeze: outcome.t_freeze,
        final_valley: outcome.final_valley,
        final_state: outcome.final_state,
        diverged: outcome.diverged,
    })
}

impl TrajectoryRecord {
    /// `t,x,y,loss,valley` rows.
    pub fn write_states_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,x,y,loss,valley")?;
        for pt in &self.states {
            writeln!(
                w,
                "{},{},{},{},{}",
                pt.t,
                crate::csvfmt::sci(pt.x),
                crate::csvfmt::sci(pt.y),
                crate::csvfmt::sci(pt.loss),
                Valley::of(pt.x)
            )?;
        }
        Ok(())
    }

    /// `t_switch` rows.
    pub fn write_switches_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t_switch")?;
        for t in &self.switches {
            writeln!(w, "{t}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> DynamicsConfig {
        DynamicsConfig {
            t_max: 5_000,
            record_stride: 10,
            ..DynamicsConfig::default()
        }
    }

    #[test]
    fn zero_noise_covariance() {
        let p = LandscapeParams::default();
        assert_eq!(noise_covariance(&p, 0.3, 1.0, 0.0).unwrap(), Sym2::ZERO);
        assert!(noise_covariance(&p, 0.3, 1.0, -1.0).is_err());
    }

    #[test]
    fn psd_hessian_passes_through() {
        let p = LandscapeParams::default();
        let y = 3.0;
        let geo = landscape::valley_geometry(&p, y).unwrap();
        let h = landscape::hessian(&p, geo.x1_star, y).unwrap();
        let (_, lm) = h.eigenvalues();
        assert!(lm > 0.0);
        let s = noise_covariance(&p, geo.x1_star, y, 0.3).unwrap();
        assert!((s.a - 0.6 * h.a).abs() < 1e-15 && (s.b - 0.6 * h.b).abs() < 1e-15);
    }

    #[test]
    fn noiseless_runs_ignore_seed_and_stay_put() {
        let p = LandscapeParams::default();
        let c = DynamicsConfig { sigma: 0.0, init_mode: InitMode::FlatSide, ..cfg() };
        let a = simulate(&p, &c).unwrap();
        let b = simulate(&p, &DynamicsConfig { seed: 99, ..c.clone() }).unwrap();
        assert_eq!(a, b);
        assert!(a.switches.is_empty());
        assert_eq!(a.t_freeze, 0);
        assert_eq!(a.final_valley, Valley::Flat);
    }

    #[test]
    fn noiseless_step_at_valley_floor_moves_only_along_y() {
        let p = LandscapeParams::default().with_drift(0.0, 1.0).unwrap();
        let c = DynamicsConfig { sigma: 0.0, ..cfg() };
        let y = 50.0;
        let geo = landscape::valley_geometry(&p, y).unwrap();
        let s0 = State { x: geo.x1_star, y };
        let s1 = step(&p, &c, s0, &mut rng_from_seed(0)).unwrap();
        let gy = landscape::gradient(&p, s0.x, y).unwrap()[1];
        let moved = ((s1.x - s0.x).powi(2) + (s1.y - s0.y).powi(2)).sqrt();
        assert!(moved <= c.eta * gy.abs() * (1.0 + 1e-9));
        assert!((s1.x - s0.x).abs() < 1e-14);
    }

    #[test]
    fn clamp_and_reflection() {
        let p = LandscapeParams::default();
        let c = DynamicsConfig { clamp_y: true, sigma: 2.0, y0: 1.3, ..cfg() };
        let r = simulate(&p, &c).unwrap();
        assert!(r.states.iter().all(|s| s.y == 1.3));
        let c = DynamicsConfig { sigma: 5.0, y0: 0.0, ..cfg() };
        let r = simulate(&p, &c).unwrap();
        assert!(r.states.iter().all(|s| s.y >= 0.0));
    }

    #[test]
    fn step_rejects_negative_y() {
        let p = LandscapeParams::default();
        let bad = State { x: 0.1, y: -0.5 };
        assert!(step(&p, &cfg(), bad, &mut rng_from_seed(1)).is_err());
    }

    #[test]
    fn record_invariants() {
        let p = LandscapeParams::default();
        let c = DynamicsConfig { sigma: 1.0, eta: 0.01, clamp_y: true, y0: 0.5, ..cfg() };
        let r = simulate(&p, &c).unwrap();
        assert!(!r.switches.is_empty());
        assert_eq!(r.t_freeze, *r.switches.iter().max().unwrap());
        assert_eq!(Valley::of(r.states.last().unwrap().x), r.final_valley);
        assert_eq!(r.states.last().unwrap().t, c.t_max);
        assert!(r.switches.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn huge_steps_are_flagged_divergent() {
        let p = LandscapeParams::default();
        let c = DynamicsConfig { eta: 5.0, sigma: 0.0, ..cfg() };
        let r = simulate(&p, &c).unwrap();
        assert!(r.diverged);
    }

    #[test]
    fn config_validation() {
        assert!(DynamicsConfig { eta: 0.0, ..cfg() }.validate().is_err());
        assert!(DynamicsConfig { sigma: -1.0, ..cfg() }.validate().is_err());
        assert!(DynamicsConfig { t_max: 0, ..cfg() }.validate().is_err());
        assert!(DynamicsConfig { record_stride: 0, ..cfg() }.validate().is_err());
        assert!(cfg().validate().is_ok());
    }

    #[test]
    fn csv_layout() {
        let p = LandscapeParams::default();
        let c = DynamicsConfig { t_max: 20, record_stride: 10, ..cfg() };
        let r = simulate(&p, &c).unwrap();
        let mut buf = Vec::new();
        r.write_states_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,x,y,loss,valley");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,5.000000000e-2,1.000000000e-1,"));
        assert!(lines[1].ends_with(",flat"));
    }
}
