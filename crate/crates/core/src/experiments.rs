//! Seeded Monte Carlo ensembles over `(η, σ)` grids.
//!
//! Every run gets its own RNG stream, seeded by mixing the base seed with the
//! cell and run indices, so runs are independent work items and results never
//! depend on scheduling.

use rayon::prelude::*;

use crate::dynamics::{self, DynamicsConfig, InitMode, RunOutcome};
use crate::error::{Error, Result};
use crate::landscape::{LandscapeParams, Valley};
use crate::oracle;
use crate::theory::{self, TheoryPrediction};

/// SplitMix64 finaliser.
#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `run` in cell `(eta_index, sigma_index)`.
pub fn run_seed(base_seed: u64, eta_index: u64, sigma_index: u64, run: u64) -> u64 {
    let mut h = splitmix(base_seed);
    for v in [eta_index, sigma_index, run] {
        h = splitmix(h ^ v);
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub n_total: usize,
    pub n_diverged: usize,
    pub p_flat: f64,
    pub p_flat_se: f64,
    pub mean_t_freeze: f64,
    /// `η ⟨t_freeze⟩`.
    pub mean_t_freeze_norm: f64,
    pub switch_count_mean: f64,
    /// More than half of the runs diverged.
    pub divergent: bool,
}

impl EnsembleStats {
    /// Aggregates outcomes; `outcomes` must be sorted by run index.
    pub fn from_outcomes(eta: f64, outcomes: &[RunOutcome]) -> Self {
        let n_total = outcomes.len();
        let ok: Vec<&RunOutcome> = outcomes.iter().filter(|o| !o.diverged).collect();
        let n_diverged = n_total - ok.len();
        let n = ok.len() as f64;
        let (p_flat, p_flat_se, mean_t, mean_sw) = if ok.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
        } else {
            let flat = ok.iter().filter(|o| o.final_valley == Valley::Flat).count() as f64;
            let p = flat / n;
            let t = ok.iter().map(|o| o.t_freeze as f64).sum::<f64>() / n;
            let sw = ok.iter().map(|o| o.n_switches as f64).sum::<f64>() / n;
            (p, (p * (1.0 - p) / n).sqrt(), t, sw)
        };
        let divergent = n_total > 0 && 2 * n_diverged > n_total;
        Self {
            n_total,
            n_diverged,
            p_flat,
            p_flat_se,
            mean_t_freeze: mean_t,
            mean_t_freeze_norm: eta * mean_t,
            switch_count_mean: mean_sw,
            divergent,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub eta_values: Vec<f64>,
    pub sigma_values: Vec<f64>,
    pub runs_per_cell: usize,
    pub base_seed: u64,
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            eta_values: logspace(1e-3, 1e-1, 7),
            sigma_values: logspace(1e-2, 1.0, 7),
            runs_per_cell: 200,
            base_seed: 0,
        }
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eta_values", &self.eta_values), ("sigma_values", &self.sigma_values)] {
            if v.is_empty() {
                return Err(Error::Invalid(format!("grid.{name} must not be empty")));
            }
            if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(Error::Invalid(format!("grid.{name} must be positive")));
            }
            if v.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Invalid(format!("grid.{name} must be strictly increasing")));
            }
        }
        check_runs(self.runs_per_cell)
    }
}

fn check_runs(n_runs: usize) -> Result<()> {
    if n_runs == 0 || !n_runs.is_multiple_of(2) {
        return Err(Error::Invalid(format!(
            "runs per cell must be even and positive (got {n_runs})"
        )));
    }
    Ok(())
}

/// Runs the `n_runs` trajectories of cell `(eta_index, sigma_index)` with
/// alternating initial sides.
pub fn cell_outcomes(
    p: &LandscapeParams,
    config: &DynamicsConfig,
    n_runs: usize,
    base_seed: u64,
    eta_index: u64,
    sigma_index: u64,
) -> Result<Vec<RunOutcome>> {
    check_runs(n_runs)?;
    let cfg = DynamicsConfig {
        init_mode: InitMode::Alternating,
        ..config.clone()
    };
    cfg.validate()?;
    (0..n_runs as u64)
        .into_par_iter()
        .map(|run| {
            let seed = run_seed(base_seed, eta_index, sigma_index, run);
            dynamics::run_with(p, &cfg, run, seed, false, |_, _| {}).map(|(o, _)| o)
        })
        .collect()
}

pub fn run_ensemble(
    p: &LandscapeParams,
    config: &DynamicsConfig,
    n_runs: usize,
    base_seed: u64,
) -> Result<EnsembleStats> {
    let outcomes = cell_outcomes(p, config, n_runs, base_seed, 0, 0)?;
    let stats = EnsembleStats::from_outcomes(config.eta, &outcomes);
    warn_if_divergent(config.eta, config.sigma, &stats);
    Ok(stats)
}

fn warn_if_divergent(eta: f64, sigma: f64, stats: &EnsembleStats) {
    if stats.divergent {
        log::warn!(
            "cell eta = {eta:e}, sigma = {sigma:e}: {}/{} runs diverged",
            stats.n_diverged,
            stats.n_total
        );
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub eta_index: usize,
    pub sigma_index: usize,
    pub eta: f64,
    pub sigma: f64,
    pub stats: EnsembleStats,
    pub theory: TheoryPrediction,
    /// Per-run freezing iterations (non-diverged runs), by run index.
    pub t_freeze: Vec<u64>,
}

impl SweepCell {
    pub fn delta_s(&self) -> f64 {
        self.eta * self.sigma
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub cells: Vec<SweepCell>,
    pub n_eta: usize,
    pub n_sigma: usize,
}

impl SweepTable {
    pub fn cell(&self, eta_index: usize, sigma_index: usize) -> &SweepCell {
        &self.cells[eta_index * self.n_sigma + sigma_index]
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        use crate::csvfmt::sci;
        writeln!(
            w,
            "eta,sigma,delta_s,n_runs,n_diverged,p_flat,p_flat_se,mean_t_freeze,\
             mean_t_freeze_norm,p_flat_ss_theory,p_flat_tr_theory"
        )?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                sci(c.eta),
                sci(c.sigma),
                sci(c.delta_s()),
                c.stats.n_total,
                c.stats.n_diverged,
                sci(c.stats.p_flat),
                sci(c.stats.p_flat_se),
                sci(c.stats.mean_t_freeze),
                sci(c.stats.mean_t_freeze_norm),
                sci(c.theory.p_flat_ss),
                sci(c.theory.p_flat_tr),
            )?;
        }
        Ok(())
    }
}

/// Theory bundle for a sweep cell. The quasi-steady state is evaluated at the
/// freezing point, clamped to the range of `y` the slow drift covers during the
/// run (`y0` if frozen from the start, end-of-run `y` if it never freezes).
pub fn cell_theory(
    p: &LandscapeParams,
    config: &DynamicsConfig,
    epsilon: f64,
) -> Result<TheoryPrediction> {
    let delta_s = config.delta_s();
    let y_end = oracle::SlowDrift::new(p, config.y0)?.y_at(config.eta * config.t_max as f64);
    let y_lo = config.y0.max(1e-9);
    let fp = theory::freezing_point(p, delta_s.max(f64::MIN_POSITIVE), epsilon)?;
    let y_eval = fp.y_freeze.clamp(y_lo, y_end.max(y_lo));
    theory::predict(p, delta_s.max(f64::MIN_POSITIVE), y_eval, epsilon)
}

pub fn sweep(
    p: &LandscapeParams,
    grid: &SweepGrid,
    defaults: &DynamicsConfig,
    epsilon: f64,
) -> Result<SweepTable> {
    grid.validate()?;
    let base = DynamicsConfig {
        init_mode: InitMode::Alternating,
        ..defaults.clone()
    };
    base.validate()?;
    let (n_eta, n_sigma, n_runs) = (grid.eta_values.len(), grid.sigma_values.len(), grid.runs_per_cell);

    // one flat list of independent work items, reduced per cell afterwards
    let items: Vec<(usize, usize, u64)> = (0..n_eta)
        .flat_map(|i| (0..n_sigma).flat_map(move |j| (0..n_runs as u64).map(move |r| (i, j, r))))
        .collect();
    let outcomes: Vec<RunOutcome> = items
        .par_iter()
        .map(|&(i, j, run)| {
            let cfg = DynamicsConfig {
                eta: grid.eta_values[i],
                sigma: grid.sigma_values[j],
                ..base.clone()
            };
            let seed = run_seed(grid.base_seed, i as u64, j as u64, run);
            dynamics::run_with(p, &cfg, run, seed, false, |_, _| {}).map(|(o, _)| o)
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::with_capacity(n_eta * n_sigma);
    for (k, chunk) in outcomes.chunks(n_runs).enumerate() {
        let (i, j) = (k / n_sigma, k % n_sigma);
        let cfg = DynamicsConfig {
            eta: grid.eta_values[i],
            sigma: grid.sigma_values[j],
            ..base.clone()
        };
        let stats = EnsembleStats::from_outcomes(cfg.eta, chunk);
        warn_if_divergent(cfg.eta, cfg.sigma, &stats);
        cells.push(SweepCell {
            eta_index: i,
            sigma_index: j,
            eta: cfg.eta,
            sigma: cfg.sigma,
            theory: cell_theory(p, &cfg, epsilon)?,
            t_freeze: chunk.iter().filter(|o| !o.diverged).map(|o| o.t_freeze).collect(),
            stats,
        });
    }
    Ok(SweepTable { cells, n_eta, n_sigma })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> DynamicsConfig {
        DynamicsConfig {
            t_max: 2_000,
            ..DynamicsConfig::default()
        }
    }

    #[test]
    fn seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for i in 0..4 {
            for j in 0..4 {
                for r in 0..50 {
                    assert!(seen.insert(run_seed(7, i, j, r)));
                }
            }
        }
        assert_ne!(run_seed(1, 0, 0, 0), run_seed(2, 0, 0, 0));
    }

    #[test]
    fn noiseless_ensemble_keeps_initial_split() {
        let p = LandscapeParams::default();
        let c = DynamicsConfig { sigma: 0.0, ..quick() };
        let s = run_ensemble(&p, &c, 40, 3).unwrap();
        assert_eq!(s.p_flat, 0.5);
        assert_eq!(s.mean_t_freeze, 0.0);
        assert_eq!(s.n_diverged, 0);
        assert!((s.p_flat_se - (0.25f64 / 40.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn odd_run_count_rejected() {
        let p = LandscapeParams::default();
        assert!(run_ensemble(&p, &quick(), 7, 0).is_err());
    }

    #[test]
    fn initial_sides_balanced() {
        let p = LandscapeParams::default();
        let outs = cell_outcomes(&p, &quick(), 10, 0, 0, 0).unwrap();
        let flat = outs.iter().filter(|o| o.initial_valley == Valley::Flat).count();
        assert_eq!(flat, 5);
        assert!(outs.windows(2).all(|w| w[0].run_index < w[1].run_index));
    }

    #[test]
    fn degenerate_sweep_is_an_ensemble() {
        let p = LandscapeParams::default();
        let c = DynamicsConfig { eta: 0.02, sigma: 0.3, ..quick() };
        let grid = SweepGrid {
            eta_values: vec![0.02],
            sigma_values: vec![0.3],
            runs_per_cell: 20,
            base_seed: 11,
        };
        let t = sweep(&p, &grid, &c, 0.01).unwrap();
        let e = run_ensemble(&p, &c, 20, 11).unwrap();
        assert_eq!(t.cells.len(), 1);
        assert_eq!(t.cells[0].stats, e);
    }

    #[test]
    fn grid_validation() {
        let mut g = SweepGrid::default();
        assert!(g.validate().is_ok());
        g.eta_values = vec![0.1, 0.01];
        assert!(g.validate().is_err());
        let g = SweepGrid { runs_per_cell: 3, ..SweepGrid::default() };
        assert!(g.validate().is_err());
    }

    #[test]
    fn stats_skip_diverged_runs() {
        let s = |v, d| RunOutcome {
            run_index: 0,
            initial_valley: Valley::Flat,
            final_valley: v,
            final_state: dynamics::State { x: 0.0, y: 0.0 },
            t_freeze: 10,
            n_switches: 1,
            diverged: d,
        };
        let outs = [s(Valley::Flat, false), s(Valley::Sharp, false), s(Valley::Sharp, true)];
        let st = EnsembleStats::from_outcomes(0.1, &outs);
        assert_eq!(st.n_diverged, 1);
        assert_eq!(st.p_flat, 0.5);
        assert!((st.mean_t_freeze_norm - 1.0).abs() < 1e-15);
        assert!(!st.divergent);
    }
}
