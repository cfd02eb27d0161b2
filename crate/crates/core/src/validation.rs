//! End-to-end checks of the model against its oracles and its own theory.
//!
//! Each check returns a [`Check`] carrying a verdict and a one-line summary;
//! computational errors inside a check turn into a failed verdict rather
//! than aborting the suite.

use rand::Rng;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::dynamics::{self, DynamicsConfig, InitMode};
use crate::error::Result;
use crate::experiments::{self, SweepGrid, SweepTable};
use crate::landscape::{self, LandscapeParams, Valley};
use crate::oracle::{self, QuadratureSpec};
use crate::specialfn;
use crate::theory;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn from_result(id: u8, name: &'static str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Check { id, name, passed, detail },
            Err(e) => Check { id, name, passed: false, detail: format!("error: {e}") },
        }
    }

    /// `[PASS] 3 erfi correctness: ...`
    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("[{tag}] {} {}: {}", self.id, self.name, self.detail)
    }
}

/// Inputs shared by the checks.
#[derive(Debug, Clone)]
pub struct Suite {
    pub landscape: LandscapeParams,
    pub dynamics: DynamicsConfig,
    pub grid: SweepGrid,
    pub epsilon: f64,
    /// Seed for the random probes of the landscape and the permutation test.
    pub seed: u64,
}

impl Default for Suite {
    fn default() -> Self {
        Self::from_config(&RunConfig::default())
    }
}

impl Suite {
    pub fn from_config(c: &RunConfig) -> Self {
        Self {
            landscape: c.landscape,
            dynamics: c.dynamics.clone(),
            grid: c.grid_or_default(),
            epsilon: c.epsilon,
            seed: c.grid_or_default().base_seed,
        }
    }

    /// Checks 1 to 9 in order; see [`Suite::run_selected`].
    pub fn run_all(&self) -> (Vec<Check>, Option<SweepTable>) {
        self.run_selected(&[1, 2, 3, 4, 5, 6, 7, 8, 9])
    }

    /// Runs the listed checks in ascending order. Checks 7 and 8 share one
    /// `(η, σ)` sweep, which is returned when it was run.
    pub fn run_selected(&self, ids: &[u8]) -> (Vec<Check>, Option<SweepTable>) {
        let wanted = |id: u8| ids.contains(&id);
        let mut out = Vec::new();
        let cheap: [(u8, CheckFn); 6] = [
            (1, Suite::landscape_correctness),
            (2, Suite::timescale_separation),
            (3, Suite::erfi_correctness),
            (4, Suite::kramers_vs_quadrature),
            (5, Suite::ness_bias),
            (6, Suite::clamped_mc_vs_ness),
        ];
        for (id, f) in cheap {
            if wanted(id) {
                out.push(f(self));
            }
        }
        let mut table = None;
        if wanted(7) || wanted(8) {
            match experiments::sweep(&self.landscape, &self.grid, &self.dynamics, self.epsilon) {
                Ok(t) => {
                    if wanted(7) {
                        out.push(self.transient_selection(&t));
                    }
                    if wanted(8) {
                        out.push(self.freezing_delay(&t));
                    }
                    table = Some(t);
                }
                Err(e) => {
                    for (id, name) in [(7, TRANSIENT), (8, FREEZING)] {
                        if wanted(id) {
                            out.push(Check { id, name, passed: false, detail: format!("sweep failed: {e}") });
                        }
                    }
                }
            }
        }
        if wanted(9) {
            out.push(self.transient_theory());
        }
        (out, table)
    }

    pub fn landscape_correctness(&self) -> Check {
        Check::from_result(1, "landscape correctness", landscape_checks(&self.landscape, self.seed))
    }

    pub fn timescale_separation(&self) -> Check {
        Check::from_result(2, "timescale separation", separation_checks(&self.landscape))
    }

    pub fn erfi_correctness(&self) -> Check {
        Check::from_result(3, "erfi correctness", Ok(erfi_checks()))
    }

    pub fn kramers_vs_quadrature(&self) -> Check {
        Check::from_result(4, "Kramers vs quadrature", kramers_checks(&self.landscape))
    }

    pub fn ness_bias(&self) -> Check {
        Check::from_result(5, "NESS bias", ness_checks(&self.landscape))
    }

    pub fn clamped_mc_vs_ness(&self) -> Check {
        Check::from_result(6, "MC vs NESS", clamped_checks(&self.landscape, self.seed))
    }

    pub fn transient_selection(&self, table: &SweepTable) -> Check {
        Check::from_result(7, TRANSIENT, Ok(selection_checks(table)))
    }

    pub fn freezing_delay(&self, table: &SweepTable) -> Check {
        Check::from_result(8, FREEZING, delay_checks(&self.landscape, table, self.epsilon, self.seed))
    }

    pub fn transient_theory(&self) -> Check {
        Check::from_result(9, "transient-theory consistency", transient_checks(&self.landscape, &self.dynamics))
    }
}

type CheckFn = fn(&Suite) -> Check;

const TRANSIENT: &str = "transient selection";
const FREEZING: &str = "freezing delay";

fn landscape_checks(p: &LandscapeParams, seed: u64) -> Result<(bool, String)> {
    let mut rng = dynamics::rng_from_seed(seed ^ 0x1a4d);
    let (mut worst_g, mut worst_h) = (0.0_f64, 0.0_f64);
    let mut n = 0;
    while n < 1000 {
        let x: f64 = rng.random_range(-1.5..1.5);
        let y: f64 = rng.random_range(0.01..10.0);
        if x.abs() <= 1e-3 {
            continue;
        }
        n += 1;
        let e = landscape::eval(p, x, y)?;
        let h = 1e-5;
        let l = |x: f64, y: f64| landscape::loss(p, x, y);
        let fd_g = [
            (l(x + h, y)? - l(x - h, y)?) / (2.0 * h),
            (l(x, y + h)? - l(x, y - h)?) / (2.0 * h),
        ];
        let gn = e.grad[0].hypot(e.grad[1]).max(1e-8);
        worst_g = worst_g.max((e.grad[0] - fd_g[0]).hypot(e.grad[1] - fd_g[1]) / gn);

        let g = |x: f64, y: f64| landscape::gradient(p, x, y);
        let h = 1e-6;
        let (gxp, gxm) = (g(x + h, y)?, g(x - h, y)?);
        let (gyp, gym) = (g(x, y + h)?, g(x, y - h)?);
        let fd_a = (gxp[0] - gxm[0]) / (2.0 * h);
        let fd_b = (gyp[0] - gym[0]) / (2.0 * h);
        let fd_d = (gyp[1] - gym[1]) / (2.0 * h);
        let hs = e.hessian;
        let scale = hs.a.abs().max(hs.b.abs()).max(hs.d.abs());
        let err = (hs.a - fd_a).abs().max((hs.b - fd_b).abs()).max((hs.d - fd_d).abs());
        worst_h = worst_h.max(err / scale);
    }

    let (mut worst_depth, mut worst_barrier) = (0.0_f64, 0.0_f64);
    let mut over_limit = 0;
    for i in 0..=200 {
        let y = 0.05 * i as f64;
        let geo = landscape::valley_geometry(p, y)?;
        let l1 = landscape::loss(p, geo.x1_star, y)?;
        let l2 = landscape::loss(p, geo.x2_star, y)?;
        worst_depth = worst_depth.max((l1 - l2).abs());
        let dl = landscape::barrier_height(p, y)?;
        let direct = landscape::loss(p, 0.0, y)? - l1.min(l2);
        worst_barrier = worst_barrier.max((dl - direct).abs());
        if dl > p.barrier_limit() {
            over_limit += 1;
        }
    }
    for y in [1e2, 1e4, 1e8] {
        if landscape::barrier_height(p, y)? > p.barrier_limit() {
            over_limit += 1;
        }
    }
    let passed = worst_g <= 1e-6
        && worst_h <= 1e-5
        && worst_depth <= 1e-12
        && worst_barrier <= 1e-14
        && over_limit == 0;
    Ok((
        passed,
        format!(
            "grad rel err {worst_g:.1e}, Hessian rel err {worst_h:.1e} (1000 points); \
             depth gap {worst_depth:.1e}; barrier mismatch {worst_barrier:.1e}; \
             saturation violations {over_limit}"
        ),
    ))
}

fn separation_checks(p: &LandscapeParams) -> Result<(bool, String)> {
    let published = LandscapeParams::new(0.8, p.x2().min(0.79), 1.0, 1.0, 1.0, 1.0, p.l_d(), p.y_d())?;
    let tau_max = theory::tau_x_max(&published);
    let sep = theory::timescale_separation(p);
    let passed = (tau_max - 0.32).abs() <= 1e-12 && sep < 0.05;
    Ok((
        passed,
        format!(
            "tau_x^max = {tau_max:.12} (f0 = x0 = 1, x1 = 0.8); max tau_x / min tau_y = {sep:.4} \
             (tau_y^min = {:.3}); published-parameter comparison skipped, values unavailable",
            theory::tau_y_min(p)
        ),
    ))
}

fn erfi_checks() -> (bool, String) {
    let e1 = (specialfn::erfi(1.0).value - 1.650_425_758_797_543).abs();
    let gap = specialfn::branch_mismatch(specialfn::Z_SWITCH);
    let odd = [0.3, 1.0, 2.5, 5.9, 6.0, 6.1, 9.0]
        .iter()
        .all(|&z| specialfn::erfi(-z).value == -specialfn::erfi(z).value);
    (
        e1 <= 1e-12 && gap <= 1e-12 && odd,
        format!("|erfi(1) - ref| = {e1:.1e}; branch gap at z = {} is {gap:.1e}; odd symmetry {odd}", specialfn::Z_SWITCH),
    )
}

/// `Δ_S` at which the sharp-valley exponent `ΔL f2 / (2 Δ_S)` equals `z2sq`.
fn delta_s_for_exponent(p: &LandscapeParams, y: f64, z2sq: f64) -> Result<f64> {
    let geo = landscape::valley_geometry(p, y)?;
    Ok(landscape::barrier_height(p, y)? * geo.f2 / (2.0 * z2sq))
}

fn kramers_checks(p: &LandscapeParams) -> Result<(bool, String)> {
    let spec = QuadratureSpec::default();
    let mut worst = 0.0_f64;
    let mut n = 0;
    for &y in &[0.5, 1.0, 2.0, 5.0, 10.0] {
        for &z2sq in &[4.0, 6.0, 9.0, 16.0] {
            let ds = delta_s_for_exponent(p, y, z2sq)?;
            for c in oracle::compare_mfpt(p, ds, y, &spec)? {
                worst = worst.max(c.rel_err());
            }
            n += 1;
        }
    }
    let levels = [4.0, 8.0, 16.0];
    let mut errs = Vec::new();
    for &z2sq in &levels {
        let ds = delta_s_for_exponent(p, 2.0, z2sq)?;
        let [_, sharp] = oracle::compare_mfpt(p, ds, 2.0, &spec)?;
        errs.push(sharp.rel_err());
    }
    let improving = errs.windows(2).all(|w| w[1] < w[0]);
    Ok((
        worst <= 0.1 && improving,
        format!(
            "worst rel err {worst:.3} over {n} points; sharp-side rel err at exponents 4/8/16: \
             {:.1e}/{:.1e}/{:.1e}",
            errs[0], errs[1], errs[2]
        ),
    ))
}

fn ness_checks(p: &LandscapeParams) -> Result<(bool, String)> {
    let mut violations = 0;
    let mut n = 0;
    let mut min_gap = f64::INFINITY;
    for &gamma in &[1.5, 2.0, 4.0, 9.0] {
        let q = p.with_gamma(gamma)?;
        let eq = theory::p_flat_equilibrium(&q);
        for ds in experiments::logspace(1e-4, 1e-1, 13) {
            for i in 0..20 {
                let y = 0.5 + 9.5 * i as f64 / 19.0;
                let ss = theory::p_flat_steady(&q, ds, y)?.p_flat_ss;
                n += 1;
                min_gap = min_gap.min(ss - eq);
                if !(ss > eq) {
                    violations += 1;
                }
            }
        }
    }
    Ok((violations == 0, format!("{violations} violations of p_ss > p_eq over {n} points (min gap {min_gap:.2e})")))
}

/// Kolmogorov–Smirnov distance between sorted samples and a CDF.
pub fn ks_distance(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

fn clamped_checks(p: &LandscapeParams, seed: u64) -> Result<(bool, String)> {
    const RUNS: u64 = 200;
    const STEPS: u64 = 100_000;
    const BURN_IN: u64 = 20_000;
    const THIN: u64 = 10;
    let eta = 0.01;
    let mut passed = true;
    let mut parts = Vec::new();
    for (k, &y) in [1.0, 2.0].iter().enumerate() {
        let ds = delta_s_for_exponent(p, y, 4.0)?;
        let cfg = DynamicsConfig {
            eta,
            sigma: ds / eta,
            t_max: STEPS,
            y0: y,
            init_mode: InitMode::Alternating,
            clamp_y: true,
            ..DynamicsConfig::default()
        };
        let per_run: Vec<(bool, Vec<f64>)> = (0..RUNS)
            .into_par_iter()
            .map(|run| {
                let mut xs = Vec::with_capacity(((STEPS - BURN_IN) / THIN) as usize);
                let s = experiments::run_seed(seed ^ 0xc1a5, k as u64, 0, run);
                let (o, _) = dynamics::run_with(p, &cfg, run, s, false, |t, st| {
                    if t > BURN_IN && t % THIN == 0 {
                        xs.push(st.x);
                    }
                })?;
                Ok((o.final_valley == Valley::Flat && !o.diverged, xs))
            })
            .collect::<Result<_>>()?;
        let n = per_run.len() as f64;
        let p_mc = per_run.iter().filter(|r| r.0).count() as f64 / n;
        let se = (p_mc * (1.0 - p_mc) / n).sqrt();
        let p_ss = theory::p_flat_steady(p, ds, y)?.p_flat_ss;
        let occ_ok = (p_mc - p_ss).abs() <= (3.0 * se).max(0.05);

        let mut xs: Vec<f64> = per_run.into_iter().flat_map(|r| r.1).collect();
        xs.sort_by(f64::total_cmp);
        let b = oracle::boltzmann_conditional(p, ds, y, &QuadratureSpec::default())?;
        let table = b.cdf_table(4000);
        let ks = ks_distance(&xs, |x| table.eval(x));
        passed &= occ_ok && ks < 0.05;
        parts.push(format!(
            "y = {y}: p_MC = {p_mc:.4} vs p_ss = {p_ss:.4}, KS = {ks:.4} ({} samples)",
            xs.len()
        ));
    }
    Ok((passed, parts.join("; ")))
}

fn selection_checks(t: &SweepTable) -> (bool, String) {
    let ok = |i: usize, j: usize| !t.cell(i, j).stats.divergent;
    let mut violations = Vec::new();
    let mut pair = |a: (usize, usize), b: (usize, usize)| {
        if !(ok(a.0, a.1) && ok(b.0, b.1)) {
            return;
        }
        let (ca, cb) = (&t.cell(a.0, a.1).stats, &t.cell(b.0, b.1).stats);
        let tol = 2.0 * ca.p_flat_se.hypot(cb.p_flat_se);
        if cb.p_flat < ca.p_flat - tol {
            let (x, y) = (t.cell(b.0, b.1), &cb);
            violations.push(format!(
                "eta = {:.3e}, sigma = {:.3e}: {:.3} after {:.3}",
                x.eta, x.sigma, y.p_flat, ca.p_flat
            ));
        }
    };
    for i in 0..t.n_eta {
        for j in 1..t.n_sigma {
            pair((i, j - 1), (i, j));
        }
    }
    for j in 0..t.n_sigma {
        for i in 1..t.n_eta {
            pair((i - 1, j), (i, j));
        }
    }
    let low = &t.cell(0, 0).stats;
    let low_ok = !low.divergent && (low.p_flat - 0.5).abs() <= (3.0 * low.p_flat_se).max(0.05);
    let high = t
        .cells
        .iter()
        .filter(|c| !c.stats.divergent)
        .max_by(|a, b| a.delta_s().total_cmp(&b.delta_s()).then(a.eta.total_cmp(&b.eta)));
    let (high_ok, high_desc) = match high {
        Some(c) => (c.stats.p_flat >= 0.9, format!("{:.3} at Δ_S = {:.2e}", c.stats.p_flat, c.delta_s())),
        None => (false, "no non-divergent cell".into()),
    };
    let mut detail = format!(
        "lowest-noise p_flat {:.3}; highest non-divergent {high_desc}; {} monotonicity violations beyond 2 SE",
        low.p_flat,
        violations.len()
    );
    if !violations.is_empty() {
        detail.push_str(&format!(" [{}]", violations.join("; ")));
    }
    (low_ok && high_ok && violations.is_empty(), detail)
}

/// Average ranks (ties share the mean rank).
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = mean;
        }
        i = j + 1;
    }
    r
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&ranks(a), &ranks(b))
}

/// Rows of `(σ, η⟨t_freeze⟩)` for each `η`, skipping divergent cells.
fn delay_rows(t: &SweepTable) -> Vec<(f64, Vec<f64>, Vec<f64>)> {
    (0..t.n_eta)
        .map(|i| {
            let cells: Vec<&experiments::SweepCell> = (0..t.n_sigma).map(|j| t.cell(i, j)).filter(|c| !c.stats.divergent).collect();
            let sigmas: Vec<f64> = cells.iter().map(|c| c.sigma).collect();
            let delays: Vec<f64> = cells.iter().map(|c| c.stats.mean_t_freeze_norm).collect();
            (t.cell(i, 0).eta, sigmas, delays)
        })
        .filter(|r| r.1.len() >= 3)
        .collect()
}

fn delay_checks(p: &LandscapeParams, t: &SweepTable, epsilon: f64, seed: u64) -> Result<(bool, String)> {
    const PERMUTATIONS: usize = 20_000;
    let rows = delay_rows(t);
    let rhos: Vec<f64> = rows.iter().map(|r| spearman(&r.1, &r.2)).collect();
    let stat: f64 = rhos.iter().sum();
    // permute σ within each row, keeping every row's own values
    let mut rng = dynamics::rng_from_seed(seed ^ 0x5eed);
    let mut exceed = 0;
    let mut perm_rows: Vec<Vec<f64>> = rows.iter().map(|r| ranks(&r.2)).collect();
    for _ in 0..PERMUTATIONS {
        let mut s = 0.0;
        for (r, pr) in rows.iter().zip(perm_rows.iter_mut()) {
            for k in (1..pr.len()).rev() {
                pr.swap(k, rng.random_range(0..=k));
            }
            s += pearson(&ranks(&r.1), pr);
        }
        if s >= stat - 1e-12 {
            exceed += 1;
        }
    }
    let p_value = (exceed + 1) as f64 / (PERMUTATIONS + 1) as f64;

    let mut prev = 0.0;
    let mut y_freeze_monotone = true;
    let mut in_regime = 0;
    for ds in experiments::logspace(1e-6, 1.0, 121) {
        let fp = theory::freezing_point(p, ds, epsilon)?;
        if fp.in_regime {
            y_freeze_monotone &= fp.y_freeze > prev;
            prev = fp.y_freeze;
            in_regime += 1;
        }
    }
    let all_positive = !rhos.is_empty() && rhos.iter().all(|&r| r > 0.0);
    Ok((
        all_positive && p_value < 0.01 && y_freeze_monotone,
        format!(
            "per-eta Spearman rho {}; stratified permutation p = {p_value:.1e}; \
             y_freeze monotone over {in_regime} in-regime Δ_S values: {y_freeze_monotone}",
            rhos.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join("/")
        ),
    ))
}

/// Terminal `P_flat` of the drifting master equation and its change over the
/// final quarter of the run.
pub fn drifting_plateau(p: &LandscapeParams, delta_s: f64, y0: f64, y_freeze: f64) -> Result<(f64, f64)> {
    let drift = oracle::SlowDrift::new(p, y0)?;
    let y_target = 3.0 * y_freeze + 1.0;
    let coarse = 0.5;
    let mut t_end = coarse;
    while drift.y_at(t_end) < y_target {
        t_end *= 2.0;
    }
    let path = drift.path(t_end, coarse.min(t_end / 1000.0));
    // the fastest rates sit at the start of the path, where the barrier is lowest
    let k_max = (0..=200)
        .map(|i| {
            let y = path.y(t_end * i as f64 / 200.0).max(1e-9);
            theory::kramers_mfpt(p, delta_s, y).map(|m| m.k_flat() + m.k_sharp())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let dt = (0.05 / k_max).min(t_end / 1000.0);
    let sol = oracle::master_equation_pflat(p, delta_s, 0.5, |t| path.y(t).max(1e-9), t_end, dt)?;
    let n = sol.p_flat.len();
    let end = sol.terminal();
    let quarter = sol.p_flat[(3 * (n - 1)) / 4];
    Ok((end, (end - quarter).abs() / end))
}

/// Non-decreasing with a strict overall rise; probabilities saturate at 1 in
/// floating point, so neighbouring ties are allowed.
fn monotone_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0]) && v.last() > v.first()
}

fn transient_checks(p: &LandscapeParams, d: &DynamicsConfig) -> Result<(bool, String)> {
    let mut plateau_ok = true;
    let mut terminals = Vec::new();
    let mut worst_drift = 0.0_f64;
    let mut used = 0;
    for ds in [1e-4, 3e-4, 1e-3, 3e-3] {
        let fp = theory::freezing_point(p, ds, 0.01)?;
        if !fp.in_regime || fp.y_freeze <= d.y0 {
            continue;
        }
        let (end, drift) = drifting_plateau(p, ds, d.y0, fp.y_freeze)?;
        worst_drift = worst_drift.max(drift);
        plateau_ok &= drift < 0.01;
        terminals.push(end);
        used += 1;
    }
    plateau_ok &= used >= 2 && monotone_increasing(&terminals);

    let mut verdicts = Vec::new();
    for eps in [0.003, 0.01, 0.03] {
        let in_ds: Vec<f64> = experiments::logspace(1e-5, 1e-1, 41)
            .into_iter()
            .map(|ds| theory::p_flat_transient(p, ds, eps))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .filter(|t| t.in_regime)
            .map(|t| t.p_flat_tr)
            .collect();
        let mut in_gamma = true;
        for ds in [1e-4, 1e-3, 1e-2] {
            let v: Vec<f64> = [1.5, 2.0, 3.0, 4.0, 6.0, 9.0]
                .iter()
                .map(|&g| theory::p_flat_transient(&p.with_gamma(g)?, ds, eps))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .filter(|t| t.in_regime)
                .map(|t| t.p_flat_tr)
                .collect();
            in_gamma &= monotone_increasing(&v);
        }
        verdicts.push((in_ds.len() >= 2 && monotone_increasing(&in_ds), in_gamma));
    }
    let robust = verdicts.iter().all(|v| *v == verdicts[0]);
    let monotone = verdicts[0] == (true, true);
    Ok((
        plateau_ok && robust && monotone,
        format!(
            "master-equation terminal P_flat {} (worst final-quarter drift {:.1e}); \
             P_tr monotone in (Δ_S, γ) for ε = 0.003/0.01/0.03: {:?}",
            terminals.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join("/"),
            worst_drift,
            verdicts
        ),
    ))
}
