use rayon::prelude::*;
use serde_json::json;

use frozen_mis::analytic::{
    alpha_star, phi_indep, phi_star_branch, q_of_alpha_branch, solve_q, threshold_summary, ModelRegime, D_MIN_CONFIG,
};
use frozen_mis::bethe::{bethe_free_energy, bp_residual, empirical_measure, symmetric_solution};
use frozen_mis::coarsen::{coarsen, validate_frozen, Spin, Violation};
use frozen_mis::forcing::{forcing_probability_enumerate, forcing_probability_exact, ForcingSpec, MAX_ENUMERATION};
use frozen_mis::graphgen::{sample_config_model, sample_simple};
use frozen_mis::hessian::{analyze, build_m, pair_gap, restricted_hessian_check};
use frozen_mis::isalg::{brute_force_mis, greedy_maximal, MAX_EXACT_N};

use crate::manifest::RunManifest;
use crate::table::{Cell, Table};
use crate::{
    BetheArgs, CliError, Command, CurveArgs, ForcingArgs, HessianArgs, Outcome, SetKind, SimulateArgs, ThresholdsArgs,
    THREADS_ENV,
};

pub fn dispatch(cmd: &Command, argv: Vec<String>) -> Result<Outcome, CliError> {
    match cmd {
        Command::Thresholds(a) => thresholds(a, argv),
        Command::Curve(a) => curve(a, argv),
        Command::Bethe(a) => bethe(a, argv),
        Command::Hessian(a) => hessian(a, argv),
        Command::Simulate(a) => simulate(a, argv),
        Command::Forcing(a) => forcing(a, argv),
        Command::Replay(_) => unreachable!("replay is resolved before dispatch"),
    }
}

fn regime(d: usize) -> Option<String> {
    (d < D_MIN_CONFIG).then(|| format!("d = {d} is below {D_MIN_CONFIG}; the asymptotic formulas are not validated there"))
}

fn outcome(name: &str, params: serde_json::Value, seed: Option<u64>, table: Table, argv: Vec<String>) -> Outcome {
    let manifest = RunManifest::new(name, params, seed, &table.columns, argv);
    Outcome { table, manifest, regime_warning: None, notes: Vec::new() }
}

fn thresholds(a: &ThresholdsArgs, argv: Vec<String>) -> Result<Outcome, CliError> {
    if a.d < 3 {
        return Err(CliError::Usage(format!("--d must be at least 3, got {}", a.d)));
    }
    let ns = if a.n.is_empty() { vec![1_000_000] } else { a.n.clone() };
    if ns.contains(&0) {
        return Err(CliError::Usage("--n values must be positive".into()));
    }
    let s = threshold_summary(a.d, &ns)?;
    let mut t = Table::new(&[
        "d",
        "n",
        "alpha_fm",
        "alpha_fm_tilde",
        "alpha_star",
        "lambda_star",
        "q_star",
        "x_star",
        "c_star",
        "mis_location",
        "in_proven_regime",
        "c_star_fd_rel_diff",
        "phi_star_residual",
    ]);
    for &(n, loc) in &s.mis_location {
        t.push(vec![
            a.d.into(),
            n.into(),
            s.alpha_fm.into(),
            s.alpha_fm_tilde.into(),
            s.alpha_star.into(),
            s.lambda_star.into(),
            s.q_star.into(),
            s.x_star.into(),
            s.c_star.into(),
            loc.into(),
            s.in_proven_regime.into(),
            (s.c_star / s.c_star_fd - 1.0).abs().into(),
            s.phi_star_residual.into(),
        ]);
    }
    let mut o = outcome("thresholds", json!({ "d": a.d, "n": ns }), None, t, argv);
    o.regime_warning = regime(a.d);
    if !s.in_proven_regime && o.regime_warning.is_none() {
        o.notes.push(format!(
            "alpha_star lies outside [alpha_lbd, alpha_ubd] at d = {}; it was located on the increasing branch",
            a.d
        ));
    }
    Ok(o)
}

fn curve(a: &CurveArgs, argv: Vec<String>) -> Result<Outcome, CliError> {
    if a.points == 0 {
        return Err(CliError::Usage("--points must be at least 1".into()));
    }
    if a.d < 3 {
        return Err(CliError::Usage(format!("--d must be at least 3, got {}", a.d)));
    }
    let ok = |x: f64| x > 0.0 && x < 0.5;
    if !ok(a.alpha_min) || !ok(a.alpha_max) || a.alpha_min > a.alpha_max || (a.points > 1 && a.alpha_min == a.alpha_max) {
        return Err(CliError::Usage("need 0 < --alpha-min < --alpha-max < 1/2".into()));
    }
    let r = ModelRegime::new(a.d);
    let mut t = Table::new(&[
        "d",
        "alpha",
        "phi_indep",
        "phi_star",
        "q",
        "x",
        "lambda",
        "ln_lambda",
        "in_proven_window",
        "alpha_residual",
    ]);
    let mut missing = 0;
    for i in 0..a.points {
        let alpha = if a.points == 1 {
            a.alpha_min
        } else {
            a.alpha_min + (a.alpha_max - a.alpha_min) * i as f64 / (a.points - 1) as f64
        };
        let fm = phi_indep(a.d, alpha)?;
        let row = match phi_star_branch(a.d, alpha) {
            Ok(p) => {
                let x = p.q * a.d as f64 / (a.d as f64).ln();
                vec![
                    p.phi.into(),
                    p.q.into(),
                    x.into(),
                    p.lambda.into(),
                    p.ln_lambda.into(),
                    (r.contains_alpha(alpha) && x >= r.x_lo && x <= r.x_hi).into(),
                    p.residual.into(),
                ]
            }
            Err(_) => {
                missing += 1;
                vec![Cell::Missing, Cell::Missing, Cell::Missing, Cell::Missing, Cell::Missing, false.into(), Cell::Missing]
            }
        };
        let mut full = vec![a.d.into(), alpha.into(), fm.into()];
        full.extend(row);
        t.push(full);
    }
    let params = json!({ "d": a.d, "alpha_min": a.alpha_min, "alpha_max": a.alpha_max, "points": a.points });
    let mut o = outcome("curve", params, None, t, argv);
    o.regime_warning = regime(a.d);
    if missing > 0 {
        o.notes.push(format!("{missing} intensities lie below the turning point of alpha(q); frozen columns left empty"));
    }
    Ok(o)
}

fn bethe(a: &BetheArgs, argv: Vec<String>) -> Result<Outcome, CliError> {
    let h = symmetric_solution(a.d, a.lambda)?;
    let fp = solve_q(a.d, a.lambda)?;
    let res = bp_residual(a.d, a.lambda, &h)?;
    let m = empirical_measure(a.d, a.lambda, &h)?;
    let fe = bethe_free_energy(a.d, &m, a.lambda)?;
    let mut t = Table::new(&[
        "d",
        "lambda",
        "q_one",
        "q_free",
        "q_zero",
        "alpha",
        "phi_lambda",
        "phi",
        "prob_one",
        "prob_free",
        "prob_susceptible",
        "prob_robust",
        "ln_z_dot",
        "z_hat",
        "bp_residual",
        "fixed_point_residual",
        "free_energy_route_diff",
    ]);
    t.push(vec![
        a.d.into(),
        a.lambda.into(),
        fp.q_one.into(),
        fp.q_free.into(),
        fp.q_zero.into(),
        m.intensity.into(),
        fe.long.into(),
        (fe.long - m.intensity * a.lambda.ln()).into(),
        m.prob_one.into(),
        m.prob_free.into(),
        m.prob_susceptible.into(),
        m.prob_robust.into(),
        h.ln_z_dot.into(),
        h.z_hat.into(),
        res.into(),
        fp.residual().into(),
        (fe.long - fe.shortcut).abs().into(),
    ]);
    let mut o = outcome("bethe", json!({ "d": a.d, "lambda": a.lambda }), None, t, argv);
    o.regime_warning = regime(a.d);
    Ok(o)
}

fn hessian(a: &HessianArgs, argv: Vec<String>) -> Result<Outcome, CliError> {
    if a.d < 3 {
        return Err(CliError::Usage(format!("--d must be at least 3, got {}", a.d)));
    }
    let alpha = match a.alpha {
        Some(x) => x,
        None => alpha_star(a.d)?.0,
    };
    let qs = q_of_alpha_branch(a.d, alpha)?;
    let fp = solve_q(a.d, qs.lambda)?;
    let m = build_m(a.d, &fp);
    let rep = analyze(a.d, &fp)?;
    let chk = restricted_hessian_check(a.d, &fp, None)?;
    let mut t = Table::new(&["d", "alpha", "lambda", "quantity", "index", "value"]);
    let mut add = |name: &str, i: usize, v: f64| {
        t.push(vec![a.d.into(), alpha.into(), qs.lambda.into(), name.into(), i.into(), v.into()]);
    };
    for (i, &e) in rep.eigenvalues.iter().enumerate() {
        add("eigenvalue", i, e);
    }
    add("lambda1", 0, rep.lambda1);
    add("lambda2", 0, rep.lambda2);
    add("lambda1_bound", 0, (a.d as f64).powf(-1.9));
    add("lambda2_gap", 0, (rep.lambda2 - 1.0 / (a.d as f64 - 1.0)).abs());
    for (i, &e) in rep.qdot_eigenvalues.iter().enumerate() {
        add("qdot", i, e);
    }
    for (i, &e) in chk.qdot_constructed.iter().enumerate() {
        add("qdot_constructed", i, e);
    }
    for (i, &e) in chk.restricted_eigenvalues.iter().enumerate() {
        add("restricted", i, e);
    }
    add("restricted_max", 0, chk.max_eigenvalue);
    add("pair_gap", 0, pair_gap(a.d, &rep.eigenvalues));
    add("zero_block_det", 0, m.zero_block_det());
    add("zero_block_det_closed", 0, m.zero_block_det_closed());
    add("row_sum_error", 0, m.row_sum_error());
    add("symmetrization_error", 0, rep.symmetrization_error);
    add("x_bar_residual", 0, m.x_bar_residual());
    let mut o = outcome("hessian", json!({ "d": a.d, "alpha": alpha }), None, t, argv);
    o.regime_warning = regime(a.d);
    Ok(o)
}

fn worker_threads() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a non-negative integer, got {v:?}"))),
        Err(_) => Ok(0),
    }
}

fn simulate(a: &SimulateArgs, argv: Vec<String>) -> Result<Outcome, CliError> {
    if a.n == 0 || a.d == 0 || a.trials == 0 {
        return Err(CliError::Usage("--n, --d and --trials must be positive".into()));
    }
    if a.n * a.d % 2 == 1 {
        return Err(CliError::Usage(format!("n d = {} must be even", a.n * a.d)));
    }
    let exact = a.n <= MAX_EXACT_N;
    let kind = a.set.unwrap_or(if exact { SetKind::Maximum } else { SetKind::Greedy });
    if kind == SetKind::Maximum && !exact {
        return Err(CliError::Usage(format!("--set maximum needs n <= {MAX_EXACT_N}")));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_threads()?)
        .build()
        .map_err(|e| CliError::Output(format!("worker pool: {e}")))?;
    let rows: Vec<Result<Vec<Cell>, CliError>> = pool.install(|| {
        (0..a.trials)
            .into_par_iter()
            .map(|trial| {
                let seed = a.seed.wrapping_add(trial as u64);
                let (g, attempts) = if a.simple {
                    let s = sample_simple(a.n, a.d, seed, a.max_attempts)?;
                    (s.graph, s.attempts)
                } else {
                    (sample_config_model(a.n, a.d, seed)?, 1)
                };
                let mis = if exact { Some(brute_force_mis(&g)?) } else { None };
                let x = match kind {
                    SetKind::Maximum => mis.as_ref().expect("exact solver ran").1.clone(),
                    SetKind::Greedy => greedy_maximal(&g, seed),
                };
                let c = coarsen(&g, &x)?;
                let v = validate_frozen(&g, &c.config, false);
                let trees = v.violations.iter().filter(|e| matches!(e, Violation::TreeWithoutPerfectMatching { .. })).count();
                let label = match kind {
                    SetKind::Maximum => "maximum",
                    SetKind::Greedy => "greedy",
                };
                Ok(vec![
                    trial.into(),
                    seed.into(),
                    a.n.into(),
                    a.d.into(),
                    a.simple.into(),
                    label.into(),
                    attempts.into(),
                    x.size().into(),
                    mis.as_ref().map(|m| m.0).into(),
                    c.config.count(Spin::One).into(),
                    c.config.count(Spin::Free).into(),
                    c.config.count(Spin::Zero).into(),
                    c.config.intensity().as_f64().into(),
                    c.step1_moves.len().into(),
                    c.step2_vertices.len().into(),
                    v.is_valid().into(),
                    v.violations.len().into(),
                    trees.into(),
                ])
            })
            .collect()
    });
    let mut t = Table::new(&[
        "trial",
        "seed",
        "n",
        "d",
        "simple",
        "set",
        "attempts",
        "set_size",
        "mis_size",
        "ones",
        "frees",
        "zeros",
        "intensity",
        "step1_moves",
        "step2_moves",
        "valid",
        "violations",
        "tree_violations",
    ]);
    let mut invalid = 0;
    for r in rows {
        let r = r?;
        if r[15] == Cell::Bool(false) {
            invalid += 1;
        }
        t.push(r);
    }
    let params = json!({
        "d": a.d, "n": a.n, "trials": a.trials, "seed": a.seed,
        "set": format!("{kind:?}").to_lowercase(), "simple": a.simple, "max_attempts": a.max_attempts,
    });
    let mut o = outcome("simulate", params, Some(a.seed), t, argv);
    if invalid > 0 {
        o.notes.push(format!("{invalid} of {} coarsened sets failed frozen validation", a.trials));
    }
    Ok(o)
}

fn forcing(a: &ForcingArgs, argv: Vec<String>) -> Result<Outcome, CliError> {
    let spec = match a.total.as_slice() {
        [e] => {
            let theta = match a.theta.as_slice() {
                [] => 0.5,
                [t] => *t,
                _ => return Err(CliError::Usage("a single --total takes a single --theta".into())),
            };
            ForcingSpec::scalar(a.n, a.d, a.k, *e, theta)
        }
        [e11, e10, e01] => {
            let theta = match a.theta.as_slice() {
                [] => [0.25; 3],
                [x, y, z] => [*x, *y, *z],
                _ => return Err(CliError::Usage("three totals take three --theta values".into())),
            };
            ForcingSpec::pair(a.n, a.d, a.k, [*e11, *e10, *e01], theta)
        }
        _ => return Err(CliError::Usage("--total takes one value or three comma-separated values".into())),
    };
    let p = forcing_probability_exact(&spec)?;
    let enumerated = if a.n * a.d <= MAX_ENUMERATION { Some(forcing_probability_enumerate(&spec)?) } else { None };
    let join = |v: &[String]| v.join(",");
    let total = join(&a.total.iter().map(|x| x.to_string()).collect::<Vec<_>>());
    let theta = join(&spec.theta.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>());
    let mut t = Table::new(&["n", "d", "k", "total", "theta", "probability", "enumerated", "abs_diff"]);
    t.push(vec![
        a.n.into(),
        a.d.into(),
        a.k.into(),
        Cell::Text(total),
        Cell::Text(theta),
        p.into(),
        enumerated.into(),
        enumerated.map(|e| (e - p).abs()).into(),
    ]);
    let params = json!({ "n": a.n, "d": a.d, "k": a.k, "total": a.total, "theta": spec.theta });
    Ok(outcome("forcing", params, None, t, argv))
}
