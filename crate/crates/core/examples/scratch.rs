use bitmc::eval::relative_mse;
use bitmc::links::LinkModel;
use bitmc::observe::{gen_ground_truth, sample_observations};
use bitmc::sampling::gen_bernoulli;
use bitmc::solver::{fit, init_factors, lambda_schedule, solve_path, SolverConfig};
use bitmc::linalg::singular_values;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "fit".into());
    match which.as_str() {
        "fit" => fit_probe(),
        "cert" => cert_probe(),
        "path" => path_probe(),
        "opt" => opt_probe(),
        "crit4" => crit4_probe(),
        _ => eprintln!("unknown probe"),
    }
}

fn fit_probe() {
    let n = 100;
    let r = 5;
    let link = LinkModel::probit(0.18).unwrap();
    for p in [0.2, 0.8] {
        let t0 = std::time::Instant::now();
        let seed = 1u64;
        let truth = gen_ground_truth(n, n, r, 1.0, seed).unwrap();
        let mask = gen_bernoulli(n, n, p, seed).unwrap();
        let obs = sample_observations(&truth, &mask, &link, seed).unwrap();
        let cfg = SolverConfig::new(r, 1.0).with_seed(seed);
        let report = fit(&obs, &link, &cfg).unwrap();
        let mse = relative_mse(&report.m_hat, &truth.m_star).unwrap();
        println!(
            "p={p}: mse={mse:.4} lambda*={:.3e} iters={:?} grad={:.2e} cert={:?} wall={:.1}s",
            report.lambda_selected,
            report.iterations,
            report.final_grad_norm,
            report.certificate,
            t0.elapsed().as_secs_f64()
        );
    }
}

fn cert_probe() {
    let n = 50;
    let r = 2;
    let link = LinkModel::probit(0.18).unwrap();
    for seed in 0..5u64 {
        let t0 = std::time::Instant::now();
        let truth = gen_ground_truth(n, n, r, 1.0, seed).unwrap();
        let mask = gen_bernoulli(n, n, 1.0, seed).unwrap();
        let obs = sample_observations(&truth, &mask, &link, seed).unwrap();
        let cfg = SolverConfig::new(r, 1.0).with_seed(seed);
        let fp0 = init_factors(n, n, &cfg).unwrap();
        let lambdas = lambda_schedule(1.0, cfg.lambda_halvings);
        let path = solve_path(&obs, &link, &fp0, 1.0, &lambdas, &cfg).unwrap();
        let su = singular_values(&path.factors.u);
        let sv = singular_values(&path.factors.v);
        println!(
            "seed {seed}: su_ratio={:.2e} sv_ratio={:.2e} iters={:?} wall={:.1}s",
            su.last().unwrap() / su[0].max(sv[0]),
            sv.last().unwrap() / su[0].max(sv[0]),
            path.per_lambda_iterations,
            t0.elapsed().as_secs_f64()
        );
    }
}

#[allow(dead_code)]
fn path_probe() {
    let n = 100;
    let r = 5;
    let link = LinkModel::probit(0.18).unwrap();
    let p = 0.8;
    let seed = 1u64;
    let truth = gen_ground_truth(n, n, r, 1.0, seed).unwrap();
    let mask = gen_bernoulli(n, n, p, seed).unwrap();
    let obs = sample_observations(&truth, &mask, &link, seed).unwrap();
    // random holdout: every fifth entry after a seeded shuffle
    use rand::seq::SliceRandom;
    let mut idx: Vec<usize> = (0..obs.len()).collect();
    let mut rng_s = bitmc::rng::stream_rng(seed, bitmc::rng::Stream::CvFolds);
    idx.shuffle(&mut rng_s);
    let cut = obs.len() * 8 / 10;
    let train = obs.select(&idx[..cut]).unwrap();
    let hold = obs.select(&idx[cut..]).unwrap();
    let cfg = SolverConfig::new(r, 1.0).with_seed(seed);
    let mut fp = init_factors(n, n, &cfg).unwrap();
    for lam in lambda_schedule(32.0, 14) {
        let t0 = std::time::Instant::now();
        let solve = bitmc::solver::minimize_at_lambda(&train, &link, &fp, 1.0, lam, &cfg).unwrap();
        fp = solve.factors;
        let m = fp.product();
        let mse = relative_mse(&m, &truth.m_star).unwrap();
        let hnll = bitmc::objective::nll(&hold, &link, &m).unwrap() / hold.len() as f64;
        let inf = m.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        println!(
            "lam={lam:.3e} iters={:<4} grad={:.2e} mse={mse:.4} holdout_nll={hnll:.4} inf={inf:.3} wall={:.1}s",
            solve.iterations, solve.final_grad_norm, t0.elapsed().as_secs_f64()
        );
    }
}

#[allow(dead_code)]
fn opt_probe() {
    use bitmc::objective::{factored_objective, nll};
    use bitmc::linalg::svd;
    use ndarray::Array2;
    let n = 100;
    let r = 5;
    let link = LinkModel::probit(0.18).unwrap();
    let p = 0.8;
    let seed = 1u64;
    let truth = gen_ground_truth(n, n, r, 1.0, seed).unwrap();
    let mask = gen_bernoulli(n, n, p, seed).unwrap();
    let obs = sample_observations(&truth, &mask, &link, seed).unwrap();

    // factor the (slightly shrunk) truth into rank-6 factors via SVD
    let shrunk = truth.m_star.mapv(|x| 0.999 * x);
    let (u, s, v) = svd(&shrunk);
    let k = r + 1;
    let mut uf = Array2::zeros((n, k));
    let mut vf = Array2::zeros((n, k));
    for c in 0..k {
        let sq = s[c].max(0.0).sqrt();
        for i in 0..n { uf[[i, c]] = u[[i, c]] * sq; }
        for j in 0..n { vf[[j, c]] = v[[j, c]] * sq; }
    }
    let fp_truth = bitmc::objective::FactorPair::new(uf, vf).unwrap();
    println!("check truth product inf: {:.4}", fp_truth.product_inf_norm());
    println!("nll(M*)={:.2}", nll(&obs, &link, &truth.m_star).unwrap());

    let cfg = SolverConfig::new(r, 1.0).with_seed(seed);
    let mut fp = init_factors(n, n, &cfg).unwrap();
    for lam in lambda_schedule(1.0, 12) {
        let solve = bitmc::solver::minimize_at_lambda(&obs, &link, &fp, 1.0, lam, &cfg).unwrap();
        fp = solve.factors;
        let ours = factored_objective(&obs, &link, &fp, 1.0, lam).unwrap();
        let at_truth = factored_objective(&obs, &link, &fp_truth, 1.0, lam).unwrap();
        let mse = relative_mse(&fp.product(), &truth.m_star).unwrap();
        println!(
            "lam={lam:.3e} iters={:<4} ours: nll={:.1} bar={:.1} tot={:.1} | truth: nll={:.1} bar={:.1} tot={:.1} | mse={mse:.3}",
            solve.iterations, ours.nll, ours.barrier, ours.total,
            at_truth.nll, at_truth.barrier, at_truth.total
        );
    }

    // descend starting FROM the truth factors at a small lambda
    let lam = 1e-3;
    let mut cfg2 = SolverConfig::new(r, 1.0).with_seed(seed);
    cfg2.max_iters_per_lambda = 2000;
    let solve = bitmc::solver::minimize_at_lambda(&obs, &link, &fp_truth, 1.0, lam, &cfg2).unwrap();
    let mse = relative_mse(&solve.factors.product(), &truth.m_star).unwrap();
    let v = solve.final_value;
    println!(
        "from truth @ lam=1e-3: iters={} grad={:.2e} nll={:.1} tot={:.1} mse={mse:.3}",
        solve.iterations, solve.final_grad_norm, v.nll, v.total
    );
}

#[allow(dead_code)]
fn crit4_probe() {
    let r = 5;
    let link = LinkModel::probit(0.18).unwrap();
    for n in [100usize, 200] {
        for p in [0.8] {
            let mut mses = Vec::new();
            for rep in 0..5u64 {
                let seed = bitmc::rng::child_seed(7, rep);
                let truth = gen_ground_truth(n, n, r, 1.0, seed).unwrap();
                let mask = gen_bernoulli(n, n, p, seed).unwrap();
                let obs = sample_observations(&truth, &mask, &link, seed).unwrap();
                let mut cfg = SolverConfig::new(r, 1.0).with_seed(seed);
                cfg.grad_tol = 1e-6;
                cfg.max_iters_per_lambda = 1500;
                let report = fit(&obs, &link, &cfg).unwrap();
                let mse = relative_mse(&report.m_hat, &truth.m_star).unwrap();
                println!("  n={n} p={p} rep={rep}: mse={mse:.4} lam*={:.3e}", report.lambda_selected);
                mses.push(mse);
            }
            let mean = mses.iter().sum::<f64>() / mses.len() as f64;
            println!("n={n} p={p}: MEAN MSE = {mean:.4}");
        }
    }
}
