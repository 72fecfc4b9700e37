//! Binary MovieLens benchmark: binarize ratings against the global mean,
//! split into train/test, grid-search (sigma, rank) with the logit model,
//! and report sign-prediction accuracy over split realizations.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;

use bitmc::eval::sign_accuracy;
use bitmc::links::LinkModel;
use bitmc::movielens::{binarize, load_movielens, split, DATASET_URL};
use bitmc::observe::BinaryObservations;
use bitmc::rng::child_seed;
use bitmc::solver::{fit, SolverConfig};

use crate::common;
use crate::config::{ConfigMap, NumList};

#[derive(Args, Debug)]
pub struct MovielensArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Path to the upstream u.data ratings file
    #[arg(long)]
    data: Option<PathBuf>,
    /// Training fractions, e.g. 0.95,0.10,0.05
    #[arg(long)]
    train_fractions: Option<NumList<f64>>,
    /// Random split realizations per fraction
    #[arg(long)]
    realizations: Option<usize>,
    /// Link scales to grid-search (logit model)
    #[arg(long)]
    sigma_grid: Option<NumList<f64>>,
    /// Ranks to grid-search
    #[arg(long)]
    r_grid: Option<NumList<usize>>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    halvings: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    reproducible: bool,
    /// Quick pipeline check: 5000-rating subsample, 2 realizations, tiny grid
    #[arg(long)]
    smoke: bool,
    /// Full-scale protocol (hours of compute); required without --smoke
    #[arg(long)]
    full: bool,
}

struct RunRow {
    run_id: String,
    fraction: f64,
    sigma: f64,
    r: usize,
    lambda_selected: f64,
    accuracy: f64,
    wall_time_s: f64,
}

pub fn run(mut args: MovielensArgs) -> Result<()> {
    if let Some(path) = &args.config {
        let cfg = ConfigMap::load(path)?;
        cfg.apply(&mut args.data, "data")?;
        cfg.apply(&mut args.train_fractions, "train-fractions")?;
        cfg.apply(&mut args.realizations, "realizations")?;
        cfg.apply(&mut args.sigma_grid, "sigma-grid")?;
        cfg.apply(&mut args.r_grid, "r-grid")?;
        cfg.apply(&mut args.alpha, "alpha")?;
        cfg.apply(&mut args.lambda0, "lambda0")?;
        cfg.apply(&mut args.halvings, "halvings")?;
        cfg.apply(&mut args.folds, "folds")?;
        cfg.apply(&mut args.max_iters, "max-iters")?;
        cfg.apply(&mut args.grad_tol, "grad-tol")?;
        cfg.apply(&mut args.seed, "seed")?;
        cfg.apply(&mut args.out, "out")?;
        cfg.apply(&mut args.threads, "threads")?;
        cfg.apply_flag(&mut args.reproducible, "reproducible")?;
        cfg.apply_flag(&mut args.smoke, "smoke")?;
        cfg.apply_flag(&mut args.full, "full")?;
    }
    common::init_threads(args.threads, args.reproducible)?;
    if !args.smoke && !args.full {
        bail!("the full protocol takes hours; pass --full to run it, or --smoke for a quick check");
    }

    let Some(data) = args.data.clone() else {
        bail!("--data is required; download the archive from {DATASET_URL} and point at u.data");
    };
    if !data.exists() {
        return Err(anyhow::Error::new(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!(
                "{} not found; download {DATASET_URL}, unzip, and pass --data <dir>/u.data",
                data.display()
            ),
        )));
    }

    let mut table = load_movielens(&data)?;
    if table.n_users == 943 && table.n_items == 1682 && table.triples.len() == 100_000 {
        println!("dataset verified: 943 users x 1682 items, 100000 ratings");
    } else {
        log::warn!(
            "dataset has {} users x {} items, {} ratings (official file has 943 x 1682, 100000)",
            table.n_users,
            table.n_items,
            table.triples.len()
        );
    }

    let seed = args.seed.unwrap_or(0);
    let (fractions, realizations, sigma_grid, r_grid, halvings, folds, max_iters) = if args.smoke {
        table = table.subsample(5000, seed);
        (
            args.train_fractions.as_ref().map_or(vec![0.95], |g| g.0.clone()),
            args.realizations.unwrap_or(2),
            args.sigma_grid.as_ref().map_or(vec![1.0], |g| g.0.clone()),
            args.r_grid.as_ref().map_or(vec![2], |g| g.0.clone()),
            args.halvings.unwrap_or(3),
            args.folds.unwrap_or(2),
            args.max_iters.unwrap_or(120),
        )
    } else {
        (
            args.train_fractions
                .as_ref()
                .map_or(vec![0.95, 0.10, 0.05], |g| g.0.clone()),
            args.realizations.unwrap_or(20),
            args.sigma_grid
                .as_ref()
                .map_or(vec![0.1, 0.25, 0.5, 1.0, 2.0], |g| g.0.clone()),
            args.r_grid.as_ref().map_or(vec![1, 2, 3, 5, 10], |g| g.0.clone()),
            args.halvings.unwrap_or(12),
            args.folds.unwrap_or(5),
            args.max_iters.unwrap_or(500),
        )
    };
    let alpha = args.alpha.unwrap_or(1.0);
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("movielens"));

    let obs = binarize(&table)?;
    let plus = obs.values().iter().filter(|&&y| y == 1).count() as f64 / obs.len() as f64;
    println!(
        "binarized: {} observations, +1 fraction {:.4} (mean rating {:.4})",
        obs.len(),
        plus,
        table.mean_rating()
    );
    if !(0.3..=0.7).contains(&plus) {
        log::warn!("+1 fraction {plus:.3} outside the expected (0.3, 0.7) band");
    }

    let fit_once = |train: &BinaryObservations,
                    test: &BinaryObservations,
                    sigma: f64,
                    r: usize,
                    run_seed: u64|
     -> Result<(f64, f64, f64)> {
        let link = LinkModel::logit(sigma)?;
        let mut cfg = SolverConfig::new(r, alpha).with_seed(run_seed);
        cfg.lambda0 = args.lambda0;
        cfg.lambda_halvings = halvings;
        cfg.cv_folds = folds;
        cfg.max_iters_per_lambda = max_iters;
        if let Some(tol) = args.grad_tol {
            cfg.grad_tol = tol;
        }
        let t0 = Instant::now();
        let report = fit(train, &link, &cfg)?;
        let acc = sign_accuracy(&report.m_hat, test)?;
        Ok((acc, report.lambda_selected, t0.elapsed().as_secs_f64()))
    };

    let mut rows: Vec<RunRow> = Vec::new();
    let mut summary: Vec<(f64, f64, usize, f64, f64, usize)> = Vec::new();

    for &fraction in &fractions {
        // Grid search on the first realization's split, unless the grid is
        // a single point.
        let (train0, test0) = split(&obs, fraction, child_seed(seed, 0))?;
        let combos: Vec<(f64, usize)> = sigma_grid
            .iter()
            .flat_map(|&s| r_grid.iter().map(move |&r| (s, r)))
            .collect();
        let (best_sigma, best_r) = if combos.len() == 1 {
            combos[0]
        } else {
            let grid_rows: Vec<(f64, usize, f64, f64, f64)> = combos
                .par_iter()
                .map(|&(s, r)| {
                    let (acc, lam, wall) = fit_once(&train0, &test0, s, r, child_seed(seed, 0))?;
                    Ok((s, r, acc, lam, wall))
                })
                .collect::<Result<_>>()?;
            let mut best = grid_rows[0];
            for row in &grid_rows {
                if row.2 > best.2 {
                    best = *row;
                }
            }
            for (s, r, acc, lam, wall) in &grid_rows {
                rows.push(RunRow {
                    run_id: format!("gridsearch_f{fraction}_s{s}_r{r}"),
                    fraction,
                    sigma: *s,
                    r: *r,
                    lambda_selected: *lam,
                    accuracy: *acc,
                    wall_time_s: *wall,
                });
            }
            println!(
                "fraction {fraction}: grid search picked sigma={} r={} (accuracy {:.4})",
                best.0, best.1, best.2
            );
            (best.0, best.1)
        };

        let real_rows: Vec<RunRow> = (0..realizations)
            .into_par_iter()
            .map(|i| {
                let run_seed = child_seed(seed, i as u64);
                let (train, test) = split(&obs, fraction, run_seed)?;
                let (acc, lam, wall) = fit_once(&train, &test, best_sigma, best_r, run_seed)?;
                Ok(RunRow {
                    run_id: format!("f{fraction}_s{best_sigma}_r{best_r}_real{i}"),
                    fraction,
                    sigma: best_sigma,
                    r: best_r,
                    lambda_selected: lam,
                    accuracy: acc,
                    wall_time_s: wall,
                })
            })
            .collect::<Result<_>>()?;
        let accs: Vec<f64> = real_rows.iter().map(|r| r.accuracy).collect();
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        let var = accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>()
            / (accs.len().max(2) - 1) as f64;
        println!(
            "fraction {fraction}: accuracy {:.2} +- {:.2} % over {} realizations",
            100.0 * mean,
            100.0 * var.sqrt(),
            realizations
        );
        summary.push((fraction, best_sigma, best_r, mean, var.sqrt(), realizations));
        rows.extend(real_rows);
    }

    let params = vec![
        ("data", data.display().to_string()),
        (
            "fractions",
            fractions.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(","),
        ),
        ("realizations", realizations.to_string()),
        (
            "sigma_grid",
            sigma_grid.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","),
        ),
        (
            "r_grid",
            r_grid.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(","),
        ),
        ("alpha", alpha.to_string()),
        ("halvings", halvings.to_string()),
        ("folds", folds.to_string()),
        ("max_iters", max_iters.to_string()),
        ("smoke", args.smoke.to_string()),
        ("link", "logit".to_string()),
    ];

    let csv_path = out.with_extension("csv");
    let mut w = common::create_output(&csv_path)?;
    common::write_header(&mut w, "movielens", &params, seed)?;
    use std::io::Write;
    writeln!(
        w,
        "run_id,m,n,r,p,sigma,link,lambda_selected,relative_mse,sign_accuracy,wall_time_s"
    )?;
    for row in &rows {
        writeln!(
            w,
            "{},{},{},{},{},{},logit,{:.6e},{},{},{:.3}",
            row.run_id,
            obs.mask().m(),
            obs.mask().n(),
            row.r,
            row.fraction,
            row.sigma,
            row.lambda_selected,
            common::metric(None),
            common::metric(Some(row.accuracy)),
            row.wall_time_s
        )?;
    }
    w.flush()?;

    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let agg = out.with_file_name(format!("{stem}_agg.csv"));
    let mut w = common::create_output(&agg)?;
    common::write_header(&mut w, "movielens", &params, seed)?;
    writeln!(w, "fraction,sigma,r,n_realizations,acc_mean,acc_std")?;
    for (fraction, s, r, mean, std, n) in &summary {
        writeln!(w, "{fraction},{s},{r},{n},{mean:.6},{std:.6}")?;
    }
    w.flush()?;

    println!("movielens: {} rows -> {}, {}", rows.len(), csv_path.display(), agg.display());
    Ok(())
}
