//! The four experiment commands. Each returns a report value; writing files
//! and choosing exit codes is left to the caller except where a command's
//! job is to write files.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{ExperimentConfig, Format};
use super::trajfile::TrajectoryFile;
use crate::engine::{
    evolve, optimal_iterations, prepare_initial, recurrence_period, run_search, search_report, Scheme, SearchReport,
    StateVector, TIE_TOL,
};
use crate::error::{Error, Result};
use crate::gates::{build_diffusion, build_m, build_p, build_p_conjugated, build_v, build_w, TargetIndex, MATRIX_TOL};
use crate::oracle::{dense_run, max_deviation, standard_closed_form, standard_grover_run};
use crate::physics::full::{extract_effective_rabi, simulate_sampled, transfer_time, FullSystemState, RabiFit};
use crate::physics::pair::{collective_dephase, free_evolution, logical_fidelity, PairLevel, PairState};
use crate::physics::{effective_rabi, BichromaticDrive, PulseParams};

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.display().to_string(), source })?;
    }
    std::fs::write(path, contents).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn render(file: &TrajectoryFile, format: Format) -> String {
    match format {
        Format::Csv => file.to_csv(),
        Format::Json => file.to_json(),
    }
}

/// Output of `search`.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub file: TrajectoryFile,
    pub report: SearchReport,
    pub optimal_iterations: u64,
}

impl fmt::Display for SearchOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = &self.file.header;
        let r = &self.report;
        writeln!(
            f,
            "q = {}, marked = |{}>, scheme = {}, iterations = {}",
            h.q,
            h.marked,
            h.scheme.as_str(),
            self.file.iterations().saturating_sub(1)
        )?;
        writeln!(f, "peak: n = {}, P(marked) = {:.12}", r.peak_iteration, r.peak_probability)?;
        let names: Vec<String> = r.co_maximal.iter().map(|&b| crate::gates::bitstring(b, h.q)).collect();
        writeln!(f, "co-maximal at peak: {}", names.join(", "))?;
        match r.recurrence_period {
            Some(p) => writeln!(f, "recurrence period: {p}")?,
            None => writeln!(f, "recurrence period: none")?,
        }
        writeln!(f, "textbook optimal iterations: {}", self.optimal_iterations)
    }
}

/// Runs one search and, if `out` is set, writes its trajectory file.
pub fn cmd_search(cfg: &ExperimentConfig) -> Result<SearchOutcome> {
    let traj = match cfg.scheme {
        Scheme::Paper => run_search(cfg.q, cfg.marked, cfg.iters)?,
        Scheme::Standard => standard_grover_run(cfg.q, cfg.marked, cfg.iters)?,
    };
    let file = TrajectoryFile::from_trajectory(&traj);
    if let Some(path) = &cfg.out {
        write_file(path, &render(&file, cfg.format))?;
    }
    Ok(SearchOutcome { report: search_report(&traj)?, optimal_iterations: optimal_iterations(1u64 << cfg.q, 1)?, file })
}

/// Iterations recorded per figure.
pub const FIGURE_ITERATIONS: usize = 18;

/// Writes the all-ones searches for q = 3, 4, 5 as `fig1`, `fig2`, `fig3`.
pub fn cmd_figures(dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let mut written = Vec::new();
    for (k, q) in (3u32..=5).enumerate() {
        let traj = run_search(q, TargetIndex::all_ones(q)?, FIGURE_ITERATIONS)?;
        let path = dir.join(format!("fig{}.{ext}", k + 1));
        write_file(&path, &render(&TrajectoryFile::from_trajectory(&traj), format))?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `measured <= tolerance`.
    fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Check { name: name.into(), measured, tolerance, passed: measured <= tolerance }
    }

    /// Passes when `measured >= tolerance`.
    fn at_least(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Check { name: name.into(), measured, tolerance, passed: measured >= tolerance }
    }

    fn flag(name: impl Into<String>, ok: bool) -> Self {
        Check { name: name.into(), measured: f64::from(u8::from(ok)), tolerance: 1.0, passed: ok }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<44} measured {:.3e}  tolerance {:.1e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.tolerance
            )?;
        }
        let failed = self.failures().count();
        writeln!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

fn unitarity_defect(m: &ndarray::Array2<C64>) -> f64 {
    let prod = m.dot(&crate::gates::adjoint(m));
    prod.indexed_iter()
        .map(|((r, c), z)| if r == c { (z - C64::new(1.0, 0.0)).norm() } else { z.norm() })
        .fold(0.0, f64::max)
}

fn sample_targets(q: u32) -> Vec<TargetIndex> {
    let n = 1usize << q;
    let picks: Vec<usize> = if q <= 4 { (0..n).collect() } else { vec![0, 1, n / 3, n / 2 + 1, n - 2, n - 1] };
    picks.into_iter().map(|b| TargetIndex::from_basis(q, b).expect("in range")).collect()
}

/// Runs the self-consistency suite over `cfg.q_range`.
pub fn cmd_validate(cfg: &ExperimentConfig) -> Result<ValidationReport> {
    let (q_lo, q_hi) = cfg.q_range;
    let mut checks = Vec::new();

    let mut unit = 0.0f64;
    let mut conj = 0.0f64;
    for q in q_lo..=q_hi.min(8) {
        let all_ones = TargetIndex::all_ones(q)?;
        for m in [build_w(q)?, build_v(q)?, build_m(all_ones)?, build_p(all_ones)?, build_diffusion(q)?] {
            unit = unit.max(unitarity_defect(m.as_array()));
        }
        for t in sample_targets(q).into_iter().take(8) {
            conj = conj.max(build_p_conjugated(t)?.max_deviation(build_p(t)?.as_array()));
        }
    }
    checks.push(Check::at_most(format!("unitarity q={q_lo}..{}", q_hi.min(8)), unit, MATRIX_TOL));
    checks.push(Check::at_most("inversion equals V^-1 M V", conj, MATRIX_TOL));

    let mut oracle = 0.0f64;
    for q in q_lo..=q_hi {
        for t in sample_targets(q) {
            oracle = oracle.max(max_deviation(&run_search(q, t, 18)?, &dense_run(q, t, 18)?)?);
        }
    }
    checks.push(Check::at_most(format!("engine vs dense oracle q={q_lo}..{q_hi}"), oracle, 1e-10));

    let two = run_search(2, TargetIndex::all_ones(2)?, 18)?;
    let exact = [1usize, 4, 7].iter().map(|&n| (two.marked_probability(n) - 1.0).abs()).fold(0.0, f64::max);
    checks.push(Check::at_most("2-qubit P(marked)=1 at n=1,4,7", exact, 1e-12));
    checks.push(Check::flag("2-qubit recurrence period 3", recurrence_period(&two, TIE_TOL) == Some(3)));

    let marked3 = TargetIndex::all_ones(3)?;
    let mut s = prepare_initial(3)?;
    let mut mirror = s.mirror_defect();
    let mut states = vec![s.clone()];
    for _ in 0..18 {
        s.invert_marked(marked3)?;
        if cfg.inject_fault {
            faulty_flip(&mut s);
        }
        s.apply_diffusion()?;
        mirror = mirror.max(s.mirror_defect());
        states.push(s.clone());
    }
    checks.push(Check::at_most("3-qubit |000>/|111> amplitude pairing", mirror, 1e-12));
    let traj3 = crate::engine::Trajectory::from_states(marked3, Scheme::Paper, &states);
    let report3 = search_report(&traj3)?;
    checks.push(Check::flag("3-qubit co-maximal {000, 111}", report3.co_maximal == vec![0, 7]));
    checks.push(Check::flag("3-qubit no period <= 9", recurrence_period(&traj3, TIE_TOL).is_none_or(|p| p > 9)));

    let mut closed = 0.0f64;
    for q in q_lo..=q_hi {
        let t = TargetIndex::all_ones(q)?;
        let traj = standard_grover_run(q, t, 18)?;
        for n in 0..=18 {
            closed = closed.max((traj.marked_probability(n) - standard_closed_form(q, n)).abs());
        }
    }
    checks.push(Check::at_most("textbook Grover closed form", closed, 1e-10));

    let mut drift = 0.0f64;
    for q in q_lo..=q_hi {
        for s in evolve(TargetIndex::all_ones(q)?, 100)? {
            drift = drift.max((s.norm_sqr() - 1.0).abs());
        }
    }
    checks.push(Check::at_most("norm drift over 100 iterations", drift, 1e-10));

    Ok(ValidationReport { checks })
}

// Fault injection for `validate`: a second sign flip on |0…0>.
fn faulty_flip(s: &mut StateVector) {
    let amps: Vec<C64> = s.amplitudes().iter().enumerate().map(|(k, a)| if k == 0 { -a } else { *a }).collect();
    *s = StateVector::from_amplitudes(s.q(), amps).expect("sign flip keeps norm");
}

#[derive(Debug, Clone, Serialize)]
pub struct PhysicsReport {
    pub params: PulseParams,
    pub warnings: Vec<String>,
    pub formula: Option<f64>,
    pub transfer_time: Option<f64>,
    pub fits: Vec<RabiFit>,
    pub checks: Vec<Check>,
}

impl PhysicsReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for PhysicsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.params;
        writeln!(
            f,
            "parameters (units of trap frequency): Omega = {}, eta = {}, delta = {}",
            p.rabi, p.lamb_dicke, p.detuning
        )?;
        if let Some(w) = self.formula {
            // twelve significant digits hide the last-place rounding
            let shown: f64 = format!("{w:.11e}").parse().map_err(|_| fmt::Error)?;
            writeln!(f, "effective Rabi frequency (formula): {shown:e}")?;
        }
        if let Some(t) = self.transfer_time {
            writeln!(f, "transfer time pi/|Omega~|: {t:.6e}")?;
        }
        if !self.warnings.is_empty() {
            writeln!(f, "warnings:")?;
            for w in &self.warnings {
                writeln!(f, "  - {w}")?;
            }
        }
        if !self.fits.is_empty() {
            writeln!(f, "{:>3}  {:>14}  {:>14}  {:>10}  {:>10}", "n", "fitted", "formula", "rel.err", "residual")?;
            for r in &self.fits {
                writeln!(
                    f,
                    "{:>3}  {:>14.6e}  {:>14.6e}  {:>10.3e}  {:>10.3e}",
                    r.phonon_number,
                    r.fitted,
                    r.formula,
                    r.relative_error(),
                    r.rms_residual
                )?;
            }
        }
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<44} measured {:.4e}  limit {:.1e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.tolerance
            )?;
        }
        Ok(())
    }
}

/// Summary of a transfer run from `|ge, n>` over `π/|Ω̃|`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TransferRun {
    pub final_transfer: f64,
    pub peak_transfer: f64,
    /// Largest population found outside phonon number `n` at any sample.
    pub max_sideband: f64,
}

/// Samples used for [`transfer_run`]; they include off-period offsets so fast
/// micromotion is not aliased away.
pub const TRANSFER_SAMPLES: usize = 200;

pub fn transfer_run(p: &PulseParams, n: usize, cutoff: usize, tol: f64) -> Result<TransferRun> {
    let total = transfer_time(p)?;
    let period = BichromaticDrive::new(*p, cutoff)?.period().unwrap_or(total / TRANSFER_SAMPLES as f64);
    let mut times: Vec<f64> = (1..=TRANSFER_SAMPLES)
        .map(|k| {
            let base = total * k as f64 / TRANSFER_SAMPLES as f64;
            (base - period * ((k % 5) as f64) / 5.0).max(0.0)
        })
        .collect();
    times.sort_by(f64::total_cmp);
    *times.last_mut().expect("samples") = total;
    let states = simulate_sampled(p, &FullSystemState::basis(PairLevel::GE, n, cutoff)?, &times, tol)?;
    let transfer = |s: &FullSystemState| s.population(PairLevel::EG, n);
    let sideband = |s: &FullSystemState| 1.0 - s.phonon_population(n);
    Ok(TransferRun {
        final_transfer: transfer(states.last().expect("samples")),
        peak_transfer: states.iter().map(transfer).fold(0.0, f64::max),
        max_sideband: states.iter().map(sideband).fold(0.0, f64::max),
    })
}

/// Largest deviation from unit logical fidelity, and of any logical
/// probability, over `count` random logical states under free evolution and
/// collective dephasing.
pub fn degeneracy_shield(count: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut fid_dev, mut prob_dev) = (0.0f64, 0.0f64);
    for _ in 0..count {
        let a = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        let b = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let s = PairState::logical(a / norm, b / norm)?;
        let t = rng.random::<f64>() * 1e3;
        let (e_e, e_g) = (rng.random::<f64>() * 10.0, rng.random::<f64>() * -10.0);
        let phi = rng.random::<f64>() * std::f64::consts::TAU;
        for out in [free_evolution(&s, t, e_e, e_g), collective_dephase(&s, phi)] {
            fid_dev = fid_dev.max((1.0 - logical_fidelity(&s, &out)?).abs());
            let (p0, p1) = (s.logical_probabilities(), out.logical_probabilities());
            prob_dev = prob_dev.max((p0[0] - p1[0]).abs()).max((p0[1] - p1[1]).abs());
        }
    }
    Ok((fid_dev, prob_dev))
}

/// Effective-vs-full comparison, n-independence and dephasing invariance.
pub fn cmd_physics(cfg: &ExperimentConfig) -> Result<PhysicsReport> {
    let p = cfg.pulse;
    let tol = cfg.ode_tol();
    let mut report = PhysicsReport {
        params: p,
        warnings: p.regime_warnings().iter().map(|w| w.to_string()).collect(),
        formula: None,
        transfer_time: None,
        fits: Vec::new(),
        checks: Vec::new(),
    };
    let forced = !report.warnings.is_empty();
    // out-of-regime failures become warnings instead of errors
    let soft = |report: &mut PhysicsReport, e: Error| -> Result<()> {
        if forced {
            report.warnings.push(e.to_string());
            Ok(())
        } else {
            Err(e)
        }
    };

    match effective_rabi(&p) {
        Ok(w) => report.formula = Some(w.value()),
        Err(e) => {
            soft(&mut report, e)?;
            return Ok(report);
        }
    }
    report.transfer_time = transfer_time(&p).ok();

    match transfer_run(&p, 0, cfg.fock_cutoff, tol) {
        Ok(run) => {
            report.checks.push(Check::at_least("peak |ge,0> -> |eg,0> transfer", run.peak_transfer, 0.98));
            report.checks.push(Check::at_most("population off n=0 during transfer", run.max_sideband, 0.02));
        }
        Err(e) => soft(&mut report, e)?,
    }
    for n in 0..=2 {
        match extract_effective_rabi(&p, n, cfg.fock_cutoff, tol) {
            Ok(fit) => report.fits.push(fit),
            Err(e) => soft(&mut report, e)?,
        }
    }
    if let Some(f0) = report.fits.iter().find(|f| f.phonon_number == 0).copied() {
        report.checks.push(Check::at_most("fitted |Omega~| vs formula (n=0)", f0.relative_error(), 0.05));
        let spread =
            report.fits.iter().map(|f| (f.fitted.abs() - f0.fitted.abs()).abs() / f0.fitted.abs()).fold(0.0, f64::max);
        if report.fits.len() == 3 {
            report.checks.push(Check::at_most("fitted |Omega~| spread over n=0..2", spread, 0.02));
        }
    }
    let (fid, prob) = degeneracy_shield(100, cfg.seed)?;
    report.checks.push(Check::at_most("logical fidelity under dephasing", fid, 1e-12));
    report.checks.push(Check::at_most("logical probabilities under dephasing", prob, 1e-12));
    if forced {
        for c in report.checks.iter().filter(|c| !c.passed) {
            let mut w = String::new();
            let _ = write!(w, "check '{}' outside its limit in the forced regime", c.name);
            report.warnings.push(w);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ConfigLayer;

    fn config(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_layer(ConfigLayer::parse(text).unwrap()).unwrap()
    }

    #[test]
    fn two_qubit_search_report() {
        let out = cmd_search(&config("mode = \"search\"\nq = 2\nmarked = \"11\"\niters = 18\n")).unwrap();
        assert_eq!(out.report.peak_iteration, 1);
        assert!((out.report.peak_probability - 1.0).abs() < 1e-12);
        assert_eq!(out.report.recurrence_period, Some(3));
        let text = out.to_string();
        assert!(text.contains("peak: n = 1"));
        assert!(text.contains("recurrence period: 3"));
    }

    #[test]
    fn three_qubit_search_lists_both_readouts() {
        let out = cmd_search(&config("mode = \"search\"\nq = 3\nmarked = \"111\"\n")).unwrap();
        assert!(out.to_string().contains("co-maximal at peak: 000, 111"));
    }

    #[test]
    fn standard_scheme_search() {
        let out = cmd_search(&config("mode = \"search\"\nq = 3\nmarked = \"111\"\nscheme = \"standard\"\n")).unwrap();
        assert_eq!(out.file.header.scheme, Scheme::Standard);
        // 13·asin(8^-1/2) lies closest to 3π/2 over 18 steps
        assert_eq!(out.report.peak_iteration, 6);
        assert!((out.file.to_trajectory().unwrap().marked_probability(2) - 0.9453).abs() < 1e-4);
    }

    #[test]
    fn validate_default_and_fault() {
        let ok = cmd_validate(&config("mode = \"validate\"\nq-max = 6\n")).unwrap();
        assert!(ok.passed(), "{ok}");
        let bad = cmd_validate(&config("mode = \"validate\"\nq-max = 4\ninject-fault = true\n")).unwrap();
        assert!(!bad.passed());
        assert!(bad.failures().any(|c| c.name.contains("pairing")));
    }

    #[test]
    fn shield_is_exact() {
        let (fid, prob) = degeneracy_shield(100, 5).unwrap();
        assert!(fid < 1e-12 && prob < 1e-12);
    }
}
