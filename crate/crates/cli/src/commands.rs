use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use ymgap_core::fock::{
    coherent_tail, moment_shift, number_shift_residual, ordering_equivalence, quantize_antiwick, weyl_relation_check,
    FockBasis, ModeBasis, OrderingReport, PolynomialSymbol,
};
use ymgap_core::helmholtz::{identity_suite, transversal, HelmholtzReport, SolverConfig};
use ymgap_core::lattice::{
    constraint_residual, dt_convergence, energy, evolve, evolve_observed, save_cauchy, CauchyData, DtConvergence,
    GaugeField, Grid,
};
use ymgap_core::lie::{algebra_from_id, check_algebra, LieCheck};
use ymgap_core::propagator::{
    convergence_study, exact_amplitude, free_mode_closed_form, propagate, ConvergenceTable, PropagationConfig,
};
use ymgap_core::spectrum::{build_energy_symbol, gap_scan, spectrum, ScanOutcome, ScanPoint, SpectrumSettings};
use ymgap_core::LieAlgebraSpec;

use crate::config::RunConfig;
use crate::output::{Csv, Outputs};

/// Every suite assertion with its measured value.
#[derive(Debug, Default, Serialize)]
pub struct Assertions {
    pub checks: Vec<Check>,
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub passed: bool,
}

impl Assertions {
    fn at_most(&mut self, name: &str, value: f64, tol: f64) {
        self.push(name, value, value <= tol);
    }

    fn within(&mut self, name: &str, value: f64, lo: f64, hi: f64) {
        self.push(name, value, (lo..=hi).contains(&value));
    }

    fn push(&mut self, name: &str, value: f64, passed: bool) {
        self.checks.push(Check { name: name.into(), value, passed });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    command: &'a str,
    config: &'a RunConfig,
    seed: Option<u64>,
    passed: bool,
    assertions: &'a Assertions,
    result: T,
}

fn write_report<T: Serialize>(
    out: &mut Outputs,
    command: &str,
    cfg: &RunConfig,
    checks: &Assertions,
    result: T,
) -> Result<()> {
    let name = format!("{}.json", command.replace('-', "_"));
    let report = Report { command, config: cfg, seed: cfg.seed, passed: checks.passed(), assertions: checks, result };
    out.json(&name, &report)
}

fn algebra(cfg: &RunConfig) -> Result<LieAlgebraSpec> {
    Ok(algebra_from_id(&cfg.gauge_group).context("config field `gauge_group`")?.with_coupling(cfg.coupling))
}

fn grid(cfg: &RunConfig) -> Result<Grid> {
    Grid::new(cfg.grid.n, cfg.grid.h).context("config field `grid`")
}

fn solver(cfg: &RunConfig, grid: &Grid, dim_g: usize) -> Result<SolverConfig> {
    let max_iter = cfg.solver.max_iter.unwrap_or(10 * grid.sites() * dim_g);
    SolverConfig::new(cfg.solver.tol, max_iter, cfg.solver.deflate_tol).context("config field `solver`")
}

fn seed(cfg: &RunConfig) -> Result<u64> {
    match cfg.seed {
        Some(s) => Ok(s),
        None => bail!("config field `seed`: required by this randomized suite (or pass --seed)"),
    }
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

pub fn lie_check(cfg: &RunConfig, out: &mut Outputs) -> Result<bool> {
    let g = algebra(cfg)?;
    let c: LieCheck = check_algebra(&g);
    let mut a = Assertions::default();
    a.at_most("jacobi_residual", c.jacobi_residual, 1e-12);
    a.at_most("total_antisymmetry_residual", c.total_antisymmetry_residual, 1e-12);
    a.at_most("metric_identity_residual", c.metric_identity_residual, 1e-12);
    a.at_most("casimir_identity_residual", c.casimir_identity_residual, 1e-12);
    a.push("metric_positive", c.metric_min_eigenvalue, c.metric_min_eigenvalue > 0.0);
    write_report(out, "lie-check", cfg, &a, &c)?;
    Ok(a.passed())
}

#[derive(Serialize)]
struct EvolveResult {
    initial_energy: f64,
    final_energy: f64,
    initial_constraint: f64,
    final_constraint: f64,
    reversibility: f64,
    convergence: DtConvergence,
}

pub fn classical_evolve(cfg: &RunConfig, out: &mut Outputs) -> Result<bool> {
    let g = algebra(cfg)?;
    let grid = grid(cfg)?;
    let d = g.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed(cfg)?);
    let amp = cfg.evolve.amplitude;
    let raw = CauchyData { a: GaugeField::random(&grid, d, amp, &mut rng), e: GaugeField::random(&grid, d, amp, &mut rng) };
    let c0 = transversal(&g, &grid, &raw, solver(cfg, &grid, d)?).context("projecting the initial data")?;
    let (dt, steps) = (cfg.evolve.dt, cfg.evolve.steps);

    let mut csv = Csv::new(&["t", "energy", "constraint_residual"]);
    let e0 = energy(&g, &grid, &c0)?;
    let r0 = constraint_residual(&g, &grid, &c0)?;
    csv.row(&[fmt(0.0), fmt(e0), fmt(r0)]);
    let mut failure = None;
    let fin = evolve_observed(&g, &grid, &c0, dt, steps, |step, c| {
        match (energy(&g, &grid, c), constraint_residual(&g, &grid, c)) {
            (Ok(e), Ok(r)) => csv.row(&[fmt(step as f64 * dt), fmt(e), fmt(r)]),
            (Err(err), _) | (_, Err(err)) => failure = Some(err),
        }
    })?;
    if let Some(err) = failure {
        return Err(err.into());
    }
    let back = evolve(&g, &grid, &fin, -dt, steps)?;
    let reversibility =
        back.a.sub(&c0.a).values().iter().chain(back.e.sub(&c0.e).values()).fold(0.0f64, |m, v| m.max(v.abs()));
    let conv = dt_convergence(&g, &grid, &c0, dt, steps)?;

    let mut a = Assertions::default();
    a.at_most("reversibility", reversibility, 1e-10);
    a.within("energy_order", conv.energy_order, 1.7, 2.3);
    a.within("constraint_order", conv.constraint_order, 1.7, 2.3);

    out.text("classical_evolve.csv", &csv.finish())?;
    for stem in ["initial", "final"] {
        let c = if stem == "initial" { &c0 } else { &fin };
        let (j, b) = save_cauchy(out.dir(), stem, &grid, &g, c)?;
        out.track(j);
        out.track(b);
    }
    let result = EvolveResult {
        initial_energy: e0,
        final_energy: energy(&g, &grid, &fin)?,
        initial_constraint: r0,
        final_constraint: constraint_residual(&g, &grid, &fin)?,
        reversibility,
        convergence: conv,
    };
    write_report(out, "classical-evolve", cfg, &a, &result)?;
    Ok(a.passed())
}

#[derive(Serialize)]
struct HelmholtzResult {
    identity: HelmholtzReport,
    samples: Vec<HelmholtzReport>,
}

pub fn helmholtz_check(cfg: &RunConfig, out: &mut Outputs) -> Result<bool> {
    let g = algebra(cfg)?;
    let grid = grid(cfg)?;
    let sc = solver(cfg, &grid, g.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed(cfg)?);
    let mut samples = Vec::with_capacity(cfg.helmholtz.samples);
    for _ in 0..cfg.helmholtz.samples.max(1) {
        samples.push(identity_suite(&g, &grid, cfg.helmholtz.amplitude, sc, &mut rng)?);
    }
    let mut worst = samples[0].clone();
    for s in &samples[1..] {
        worst.kernel_dim = worst.kernel_dim.max(s.kernel_dim);
        for (w, v) in [
            (&mut worst.adjointness, s.adjointness),
            (&mut worst.laplacian_symmetry, s.laplacian_symmetry),
            (&mut worst.idempotence, s.idempotence),
            (&mut worst.gradient_fixed, s.gradient_fixed),
            (&mut worst.divergence_free_complement, s.divergence_free_complement),
            (&mut worst.orthogonality, s.orthogonality),
            (&mut worst.transversal_constraint, s.transversal_constraint),
        ] {
            *w = w.max(v);
        }
    }
    let c = 10.0 * sc.tol;
    let mut a = Assertions::default();
    a.at_most("adjointness", worst.adjointness, 1e-12);
    a.at_most("laplacian_symmetry", worst.laplacian_symmetry, 1e-12);
    a.at_most("idempotence", worst.idempotence, c);
    a.at_most("gradient_fixed", worst.gradient_fixed, c);
    a.at_most("divergence_free_complement", worst.divergence_free_complement, c);
    a.at_most("orthogonality", worst.orthogonality, c);
    a.at_most("transversal_constraint", worst.transversal_constraint, c);
    write_report(out, "helmholtz-check", cfg, &a, HelmholtzResult { identity: worst, samples })?;
    Ok(a.passed())
}

#[derive(Serialize)]
struct FockResult {
    oracle_shift: f64,
    at_oracle_shift: OrderingReport,
    at_configured_shift: OrderingReport,
    half_shift_symbol_residual: f64,
    weyl_residual: f64,
}

/// Random symbols per ordering suite.
const ORDERING_SYMBOLS: usize = 50;

pub fn fock_check(cfg: &RunConfig, out: &mut Outputs) -> Result<bool> {
    let modes = cfg.modes.count.min(3);
    let basis = FockBasis::new(modes, cfg.fock.n_max);
    let max_degree = cfg.fock.n_max.min(4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed(cfg)?);
    let symbols: Vec<PolynomialSymbol> =
        (0..ORDERING_SYMBOLS).map(|_| PolynomialSymbol::random(modes, max_degree, 6, false, &mut rng)).collect();
    let s_star = moment_shift(&basis)?;
    let at_oracle = ordering_equivalence(&symbols, &basis, s_star)?;
    let at_cfg = ordering_equivalence(&symbols, &basis, cfg.fock.ordering_s)?;
    let half = number_shift_residual(0.5);
    // single mode, z = 0.5, n_max = 16, states up to grade 6
    let weyl = weyl_relation_check(&[Complex64::new(0.5, 0.0)], &FockBasis::new(1, 16), 6)?;

    let mut a = Assertions::default();
    a.at_most("ordering_equivalence", at_oracle.max_residual, 1e-10);
    a.at_most("half_shift_symbol_identity", half, 0.0);
    a.at_most("weyl_relation", weyl, 1e-8);

    let dump = quantize_antiwick(&symbols[0], &basis)?;
    let (j, t) = dump.dump(&basis, out.dir(), "fock_operator")?;
    out.track(j);
    out.track(t);
    let result = FockResult {
        oracle_shift: s_star,
        at_oracle_shift: at_oracle,
        at_configured_shift: at_cfg,
        half_shift_symbol_residual: half,
        weyl_residual: weyl,
    };
    write_report(out, "fock-check", cfg, &a, &result)?;
    Ok(a.passed())
}

fn settings(cfg: &RunConfig, seed: u64) -> SpectrumSettings {
    SpectrumSettings {
        n_max: cfg.fock.n_max,
        coupling: cfg.coupling,
        s: cfg.fock.ordering_s,
        minimax: cfg.spectrum.minimax,
        trials: cfg.spectrum.trials,
        seed,
    }
}

const GAP_HEADER: [&str; 8] = ["M", "n_max", "coupling", "k", "lambda0", "lambda1", "gap", "min_slack"];

fn gap_row(r: &ymgap_core::spectrum::SpectrumReport) -> Vec<String> {
    vec![
        r.modes.to_string(),
        r.n_max.to_string(),
        fmt(r.coupling),
        fmt(r.k),
        fmt(r.lambda0),
        fmt(r.lambda1),
        fmt(r.gap),
        fmt(r.bound.min_slack),
    ]
}

fn spectral_checks(a: &mut Assertions, prefix: &str, r: &ymgap_core::spectrum::SpectrumReport) {
    a.at_most(&format!("{prefix}hermiticity"), r.hermiticity, 1e-12);
    a.push(&format!("{prefix}min_slack"), r.bound.min_slack, r.bound.bound_holds(1e-10));
}

pub fn spectrum_cmd(cfg: &RunConfig, out: &mut Outputs) -> Result<bool> {
    let g = algebra_from_id(&cfg.gauge_group).context("config field `gauge_group`")?;
    let grid = grid(cfg)?;
    let modes = ModeBasis::new(&grid, g.dim(), cfg.modes.count, cfg.modes.k_max).context("config field `modes`")?;
    let r = spectrum(&g, &modes, &settings(cfg, seed(cfg)?))?;
    let mut a = Assertions::default();
    spectral_checks(&mut a, "", &r);
    let mut csv = Csv::new(&GAP_HEADER);
    csv.row(&gap_row(&r));
    out.text("spectrum.csv", &csv.finish())?;
    write_report(out, "spectrum", cfg, &a, &r)?;
    Ok(a.passed())
}

pub fn gap_scan_cmd(cfg: &RunConfig, out: &mut Outputs) -> Result<bool> {
    let g = algebra_from_id(&cfg.gauge_group).context("config field `gauge_group`")?;
    let grid = grid(cfg)?;
    let mut points = Vec::new();
    for &m in &cfg.modes_list() {
        for &n in &cfg.n_max_list() {
            for &c in &cfg.coupling_list() {
                points.push(ScanPoint { modes: m, n_max: n, coupling: c });
            }
        }
    }
    let outcomes = gap_scan(&g, &grid, cfg.modes.k_max, &points, &settings(cfg, seed(cfg)?))?;
    let mut a = Assertions::default();
    let mut csv = Csv::new(&GAP_HEADER);
    for (i, o) in outcomes.iter().enumerate() {
        match o {
            ScanOutcome::Done(r) => {
                spectral_checks(&mut a, &format!("point{i}."), r);
                csv.row(&gap_row(r));
            }
            ScanOutcome::Skipped { reason, .. } => eprintln!("gap-scan: point {i} skipped: {reason}"),
        }
    }
    out.text("gap_scan.csv", &csv.finish())?;
    write_report(out, "gap-scan", cfg, &a, &outcomes)?;
    Ok(a.passed())
}

#[derive(Serialize)]
struct PropagateResult {
    modes: usize,
    omegas: Vec<f64>,
    amplitude_re: f64,
    amplitude_im: f64,
    exact_re: f64,
    exact_im: f64,
    error_vs_exact: f64,
    /// Single free mode only: distance to the untruncated finite-`N` closed form.
    error_vs_closed_form: Option<f64>,
    coherent_tail: f64,
    convergence: ConvergenceTable,
}

pub fn propagate_cmd(cfg: &RunConfig, out: &mut Outputs) -> Result<bool> {
    let g = algebra_from_id(&cfg.gauge_group).context("config field `gauge_group`")?;
    let grid = grid(cfg)?;
    let p = &cfg.propagate;
    let to_c = |v: &[[f64; 2]]| v.iter().map(|z| Complex64::new(z[0], z[1])).collect::<Vec<_>>();
    let (z0, zt) = (to_c(&p.z0), to_c(&p.zt));
    let m = z0.len();
    let modes = ModeBasis::new(&grid, g.dim(), m, cfg.modes.k_max).context("config field `propagate.z0`")?;
    let es = build_energy_symbol(&g, &modes, cfg.coupling, cfg.fock.ordering_s)?;
    let basis = FockBasis::new(m, cfg.fock.n_max);
    let method = p.method();
    let pc = PropagationConfig::new(p.t, p.steps, method)?;
    let amp = propagate(&es.sym, &z0, &zt, &pc, &basis)?;
    let exact = exact_amplitude(&quantize_antiwick(&es.sym, &basis)?, &basis, &z0, &zt, p.t)?;
    let error = (amp.value() - exact).norm();
    let closed = (m == 1 && es.quartic.is_empty())
        .then(|| (amp.value() - free_mode_closed_form(modes.omega(0), z0[0], zt[0], p.t, Some(p.steps))).norm());

    let mut ns: Vec<usize> = [8, 4, 2, 1].iter().map(|d| p.steps / d).filter(|&n| n > 0).collect();
    ns.dedup();
    let table = convergence_study(&es.sym, &z0, &zt, p.t, &ns, method, &basis, exact)?;
    let tail = coherent_tail(&z0, basis.n_max()).max(coherent_tail(&zt, basis.n_max()));

    let mut a = Assertions::default();
    a.push("amplitude_finite", amp.re.hypot(amp.im), amp.re.is_finite() && amp.im.is_finite());
    a.at_most("coherent_tail", tail, 1e-6);
    let first = table.rows.first().map_or(0.0, |r| r.error);
    a.push("error_decreases", error - first, table.rows.len() < 2 || error <= first);

    out.text("propagate_convergence.csv", &table.to_csv())?;
    let result = PropagateResult {
        modes: m,
        omegas: modes.omegas(),
        amplitude_re: amp.re,
        amplitude_im: amp.im,
        exact_re: exact.re,
        exact_im: exact.im,
        error_vs_exact: error,
        error_vs_closed_form: closed,
        coherent_tail: tail,
        convergence: table,
    };
    write_report(out, "propagate", cfg, &a, &result)?;
    Ok(a.passed())
}
