//! Synthetic recovery sweeps: relative MSE across grids of matrix size and
//! sampling density, with Bernoulli or two-block masks.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;

use bitmc::eval::relative_mse;
use bitmc::links::{LinkKind, LinkModel};
use bitmc::observe::{gen_ground_truth, sample_observations};
use bitmc::rng::child_seed;
use bitmc::sampling::{gen_bernoulli, gen_block_model};
use bitmc::solver::{fit, SolverConfig};

use crate::common;
use crate::config::{ConfigMap, NumList};

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Optional key=value config file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Rows (defaults to n, i.e. square matrices)
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated n grid (size sweep)
    #[arg(long)]
    n_grid: Option<NumList<usize>>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    /// Comma-separated p grid (density sweep)
    #[arg(long)]
    p_grid: Option<NumList<f64>>,
    /// Off-diagonal block probability; selects the two-block mask model
    #[arg(long)]
    q: Option<f64>,
    /// Two-block mask with q = pq-sum - p at every grid point
    #[arg(long)]
    pq_sum: Option<f64>,
    #[arg(long)]
    link: Option<LinkKind>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    halvings: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    /// Monte Carlo repeats per grid point
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output prefix: writes <out>.csv, <out>_agg.csv, <out>.gp
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Single-threaded execution; outputs are identical either way
    #[arg(long)]
    reproducible: bool,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    grad_tol: Option<f64>,
}

struct RunRow {
    run_id: String,
    m: usize,
    n: usize,
    r: usize,
    p: f64,
    sigma: f64,
    link: LinkKind,
    lambda_selected: f64,
    relative_mse: Option<f64>,
    wall_time_s: f64,
}

pub fn run(mut args: SynthArgs) -> Result<()> {
    if let Some(path) = &args.config {
        let cfg = ConfigMap::load(path)?;
        cfg.apply(&mut args.m, "m")?;
        cfg.apply(&mut args.n, "n")?;
        cfg.apply(&mut args.n_grid, "n-grid")?;
        cfg.apply(&mut args.r, "r")?;
        cfg.apply(&mut args.p, "p")?;
        cfg.apply(&mut args.p_grid, "p-grid")?;
        cfg.apply(&mut args.q, "q")?;
        cfg.apply(&mut args.pq_sum, "pq-sum")?;
        cfg.apply(&mut args.link, "link")?;
        cfg.apply(&mut args.sigma, "sigma")?;
        cfg.apply(&mut args.alpha, "alpha")?;
        cfg.apply(&mut args.lambda0, "lambda0")?;
        cfg.apply(&mut args.halvings, "halvings")?;
        cfg.apply(&mut args.folds, "folds")?;
        cfg.apply(&mut args.repeats, "repeats")?;
        cfg.apply(&mut args.seed, "seed")?;
        cfg.apply(&mut args.out, "out")?;
        cfg.apply(&mut args.threads, "threads")?;
        cfg.apply_flag(&mut args.reproducible, "reproducible")?;
        cfg.apply(&mut args.max_iters, "max-iters")?;
        cfg.apply(&mut args.grad_tol, "grad-tol")?;
    }
    common::init_threads(args.threads, args.reproducible)?;

    let n_default = args.n.unwrap_or(100);
    let n_grid: Vec<usize> = args.n_grid.as_ref().map_or(vec![n_default], |g| g.0.clone());
    let p_grid: Vec<f64> = args
        .p_grid
        .as_ref()
        .map_or(vec![args.p.unwrap_or(0.4)], |g| g.0.clone());
    let r = args.r.unwrap_or(5);
    let link_kind = args.link.unwrap_or(LinkKind::Probit);
    let sigma = args.sigma.unwrap_or(0.18);
    let alpha = args.alpha.unwrap_or(1.0);
    let repeats = args.repeats.unwrap_or(20);
    let seed = args.seed.unwrap_or(0);
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("synth"));
    if args.q.is_some() && args.pq_sum.is_some() {
        bail!("--q and --pq-sum are mutually exclusive");
    }
    let link = LinkModel::new(link_kind, sigma).context("invalid link")?;

    // Grid tasks; infeasible points are skipped with a warning.
    struct Task {
        n_idx: usize,
        p_idx: usize,
        rep: usize,
        m: usize,
        n: usize,
        p: f64,
        q: Option<f64>,
    }
    let mut tasks = Vec::new();
    for (n_idx, &n) in n_grid.iter().enumerate() {
        let m = args.m.unwrap_or(n);
        if r > m.min(n) {
            log::warn!("skipping n={n}: rank {r} exceeds min dimension");
            continue;
        }
        for (p_idx, &p) in p_grid.iter().enumerate() {
            let q = match (args.q, args.pq_sum) {
                (Some(q), _) => Some(q),
                (None, Some(sum)) => {
                    let q = sum - p;
                    if !(0.0..=1.0).contains(&q) {
                        log::warn!("skipping p={p}: q = {sum} - {p} outside [0, 1]");
                        continue;
                    }
                    Some(q)
                }
                (None, None) => None,
            };
            for rep in 0..repeats {
                tasks.push(Task {
                    n_idx,
                    p_idx,
                    rep,
                    m,
                    n,
                    p,
                    q,
                });
            }
        }
    }
    if tasks.is_empty() {
        bail!("no feasible grid points");
    }

    let solve_one = |task: &Task| -> Result<RunRow> {
        let t0 = Instant::now();
        // One seed per repeat, shared across grid points: masks are coupled
        // across p so Monte Carlo means are comparable along the sweep.
        let run_seed = child_seed(seed, task.rep as u64);
        let truth = gen_ground_truth(task.m, task.n, r, alpha, run_seed)?;
        let mask = match task.q {
            Some(q) => gen_block_model(task.m, task.n, task.p, q, run_seed)?,
            None => gen_bernoulli(task.m, task.n, task.p, run_seed)?,
        };
        let obs = sample_observations(&truth, &mask, &link, run_seed)?;
        let mut cfg = SolverConfig::new(r, alpha).with_seed(run_seed);
        cfg.lambda0 = args.lambda0;
        if let Some(h) = args.halvings {
            cfg.lambda_halvings = h;
        }
        if let Some(f) = args.folds {
            cfg.cv_folds = f;
        }
        if let Some(it) = args.max_iters {
            cfg.max_iters_per_lambda = it;
        }
        if let Some(tol) = args.grad_tol {
            cfg.grad_tol = tol;
        }
        let report = fit(&obs, &link, &cfg)?;
        let mse = relative_mse(&report.m_hat, &truth.m_star)?;
        let run_id = match task.q {
            Some(q) => format!("n{}_p{}_q{q}_rep{}", task.n, task.p, task.rep),
            None => format!("n{}_p{}_rep{}", task.n, task.p, task.rep),
        };
        Ok(RunRow {
            run_id,
            m: task.m,
            n: task.n,
            r,
            p: task.p,
            sigma,
            link: link_kind,
            lambda_selected: report.lambda_selected,
            relative_mse: Some(mse),
            wall_time_s: t0.elapsed().as_secs_f64(),
        })
    };

    let mut results: Vec<(usize, usize, usize, RunRow)> = tasks
        .par_iter()
        .map(|t| solve_one(t).map(|row| (t.n_idx, t.p_idx, t.rep, row)))
        .collect::<Result<_>>()?;
    results.sort_by_key(|(n_idx, p_idx, rep, _)| (*n_idx, *p_idx, *rep));

    let params = echo_params(&args, &n_grid, &p_grid, r, link_kind, sigma, alpha, repeats);

    // per-run rows
    let csv_path = out.with_extension("csv");
    let mut w = common::create_output(&csv_path)?;
    common::write_header(&mut w, "synth", &params, seed)?;
    use std::io::Write;
    writeln!(
        w,
        "run_id,m,n,r,p,sigma,link,lambda_selected,relative_mse,sign_accuracy,wall_time_s"
    )?;
    for (_, _, _, row) in &results {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{:.6e},{},{},{:.3}",
            row.run_id,
            row.m,
            row.n,
            row.r,
            row.p,
            row.sigma,
            row.link,
            row.lambda_selected,
            common::metric(row.relative_mse),
            common::metric(None),
            row.wall_time_s
        )?;
    }
    w.flush()?;

    // aggregates: mean and standard error per grid point
    let agg_path = agg_path(&out);
    let mut w = common::create_output(&agg_path)?;
    common::write_header(&mut w, "synth", &params, seed)?;
    writeln!(w, "m,n,r,p,q,sigma,link,n_runs,mse_mean,mse_stderr,ref_inv_n")?;
    for (n_idx, &n) in n_grid.iter().enumerate() {
        for (p_idx, &p) in p_grid.iter().enumerate() {
            let vals: Vec<f64> = results
                .iter()
                .filter(|(ni, pi, _, _)| *ni == n_idx && *pi == p_idx)
                .filter_map(|(_, _, _, row)| row.relative_mse)
                .collect();
            if vals.is_empty() {
                continue;
            }
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (vals.len().max(2) - 1) as f64;
            let stderr = (var / vals.len() as f64).sqrt();
            let q = match (args.q, args.pq_sum) {
                (Some(q), _) => format!("{q}"),
                (None, Some(sum)) => format!("{}", sum - p),
                (None, None) => "NA".into(),
            };
            let m = args.m.unwrap_or(n);
            writeln!(
                w,
                "{m},{n},{r},{p},{q},{sigma},{link_kind},{},{mean:.6e},{stderr:.6e},{:.6e}",
                vals.len(),
                1.0 / n as f64
            )?;
        }
    }
    w.flush()?;

    write_gnuplot(&out, &agg_path, n_grid.len() > 1)?;
    println!(
        "synth: {} runs -> {}, {}",
        results.len(),
        csv_path.display(),
        agg_path.display()
    );
    Ok(())
}

fn agg_path(out: &std::path::Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}_agg.csv"))
}

#[allow(clippy::too_many_arguments)]
fn echo_params(
    args: &SynthArgs,
    n_grid: &[usize],
    p_grid: &[f64],
    r: usize,
    link: LinkKind,
    sigma: f64,
    alpha: f64,
    repeats: usize,
) -> Vec<(&'static str, String)> {
    let fmt_ns = n_grid.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",");
    let fmt_ps = p_grid.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",");
    vec![
        ("n_grid", fmt_ns),
        ("p_grid", fmt_ps),
        ("m", args.m.map_or("=n".into(), |m| m.to_string())),
        ("r", r.to_string()),
        ("link", link.to_string()),
        ("sigma", sigma.to_string()),
        ("alpha", alpha.to_string()),
        ("q", args.q.map_or("NA".into(), |q| q.to_string())),
        ("pq_sum", args.pq_sum.map_or("NA".into(), |s| s.to_string())),
        ("lambda0", args.lambda0.map_or("auto".into(), |l| l.to_string())),
        ("halvings", args.halvings.map_or("12".into(), |h| h.to_string())),
        ("folds", args.folds.map_or("5".into(), |f| f.to_string())),
        ("repeats", repeats.to_string()),
        ("reproducible", args.reproducible.to_string()),
    ]
}

/// Gnuplot script referencing the aggregate file; log-log with the 1/n
/// reference line for size sweeps, linear in p otherwise.
fn write_gnuplot(out: &std::path::Path, agg: &std::path::Path, size_sweep: bool) -> Result<()> {
    let gp_path = out.with_extension("gp");
    let mut w = common::create_output(&gp_path)?;
    use std::io::Write;
    writeln!(w, "# gnuplot script emitted alongside {}", agg.display())?;
    writeln!(w, "set datafile separator ','")?;
    writeln!(w, "set ylabel 'relative MSE'")?;
    if size_sweep {
        writeln!(w, "set logscale xy")?;
        writeln!(w, "set xlabel 'n'")?;
        writeln!(
            w,
            "plot '{}' using 2:9:10 with yerrorlines title 'empirical', \\",
            agg.display()
        )?;
        writeln!(
            w,
            "     '{}' using 2:11 with lines title '1/n reference'",
            agg.display()
        )?;
    } else {
        writeln!(w, "set xlabel 'p'")?;
        writeln!(
            w,
            "plot '{}' using 4:9:10 with yerrorlines title 'empirical'",
            agg.display()
        )?;
    }
    w.flush()?;
    Ok(())
}
