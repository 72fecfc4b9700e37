//! Barrier-path gradient descent over thin factors.
//!
//! One barrier weight is solved by gradient descent with Armijo
//! backtracking; the full fit follows the central path `lambda0, lambda0/2,
//! lambda0/4, ...`, warm-starting each solve from the previous one, and
//! picks the stopping weight by k-fold cross-validation on held-out
//! negative log-likelihood. A converged solution whose factors are
//! numerically rank-deficient is a certified global minimum of the
//! rank-constrained problem; full-rank factors certify nothing.

use std::io::Write;

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::links::LinkModel;
use crate::objective::{nll, FactorPair, ObjectiveValue};
use crate::observe::BinaryObservations;
use crate::rng::{stream_rng, Stream};

/// Factors are rank-deficient when the smallest singular value of either
/// factor falls below this fraction of the largest across both.
const RANK_DEFICIENCY_RTOL: f64 = 1e-6;

/// Backtracking gives up below this step size.
const STEP_FLOOR: f64 = 1e-20;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub rank_r: usize,
    /// Factor width; the default `rank_r + 1` leaves one spare dimension so
    /// converged factors are typically rank-deficient.
    pub k: usize,
    pub alpha: f64,
    /// Initial barrier weight; `None` uses `max(1, nll(M0)/(m n))`.
    pub lambda0: Option<f64>,
    pub lambda_halvings: usize,
    pub max_iters_per_lambda: usize,
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub backtrack_beta: f64,
    pub cv_folds: usize,
    pub seed: u64,
    /// Record per-step objective values and product infinity norms.
    pub record_trace: bool,
    /// Run cross-validation folds sequentially instead of in parallel.
    /// Results are identical either way; sequential keeps the schedule of
    /// work single-threaded.
    pub sequential_cv: bool,
}

impl SolverConfig {
    pub fn new(rank_r: usize, alpha: f64) -> Self {
        SolverConfig {
            rank_r,
            k: rank_r + 1,
            alpha,
            lambda0: None,
            lambda_halvings: 12,
            max_iters_per_lambda: 500,
            grad_tol: 1e-5,
            armijo_c: 1e-4,
            backtrack_beta: 0.5,
            cv_folds: 5,
            seed: 0,
            record_trace: false,
            sequential_cv: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank_r == 0 {
            return Err(Error::invalid("rank_r must be positive"));
        }
        if self.k == 0 {
            return Err(Error::invalid("k must be positive"));
        }
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return Err(Error::invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        if let Some(l0) = self.lambda0 {
            if !l0.is_finite() || l0 <= 0.0 {
                return Err(Error::invalid(format!("lambda0 must be positive, got {l0}")));
            }
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(Error::invalid("armijo_c must be in (0, 1)"));
        }
        if !(self.backtrack_beta > 0.0 && self.backtrack_beta < 1.0) {
            return Err(Error::invalid("backtrack_beta must be in (0, 1)"));
        }
        if self.cv_folds < 2 {
            return Err(Error::invalid("cv_folds must be at least 2"));
        }
        if self.max_iters_per_lambda == 0 {
            return Err(Error::invalid("max_iters_per_lambda must be positive"));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::invalid("grad_tol must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certificate {
    /// A converged factor pair with rank-deficient factors: the product is
    /// the global minimum of the rank-constrained barrier problem.
    RankDeficientGlobalOpt,
    /// Full-rank factors; says nothing about optimality either way.
    FullRankNoCertificate,
}

impl std::fmt::Display for Certificate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Certificate::RankDeficientGlobalOpt => write!(f, "RankDeficient_GlobalOpt"),
            Certificate::FullRankNoCertificate => write!(f, "FullRank_NoCertificate"),
        }
    }
}

/// One accepted iterate in a solve trace.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub total: f64,
    pub product_inf_norm: f64,
}

/// Result of a single-barrier-weight solve.
#[derive(Debug, Clone)]
pub struct LambdaSolve {
    pub factors: FactorPair,
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub final_value: ObjectiveValue,
    /// Accepted iterates (including the starting point) when
    /// `record_trace` is set.
    pub trace: Vec<StepRecord>,
}

/// Result of a warm-started sweep down a barrier schedule.
#[derive(Debug, Clone)]
pub struct PathSolve {
    pub factors: FactorPair,
    pub per_lambda_iterations: Vec<usize>,
    pub final_grad_norm: f64,
    pub final_value: ObjectiveValue,
    pub stalled: bool,
    pub traces: Vec<Vec<StepRecord>>,
}

/// Full fit output.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub m_hat: Array2<f64>,
    pub factors: FactorPair,
    pub lambda_selected: f64,
    /// `(lambda, mean per-entry holdout nll)` for every schedule point.
    pub cv_errors: Vec<(f64, f64)>,
    /// Per-lambda iteration counts of the final refit.
    pub iterations: Vec<usize>,
    pub certificate: Certificate,
    pub final_grad_norm: f64,
    pub stalled: bool,
}

/// Random factors scaled so the product infinity norm is exactly
/// `0.95 * alpha`.
pub fn init_factors(m: usize, n: usize, cfg: &SolverConfig) -> Result<FactorPair> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, Stream::FactorInit);
    let u = Array2::from_shape_fn((m, cfg.k), |_| rng.sample::<f64, _>(StandardNormal));
    let v = Array2::from_shape_fn((n, cfg.k), |_| rng.sample::<f64, _>(StandardNormal));
    let fp = FactorPair::new(u, v)?;
    let inf = fp.product_inf_norm();
    if inf == 0.0 {
        return Err(Error::invalid("degenerate zero initialization"));
    }
    let scale = (0.95 * cfg.alpha / inf).sqrt();
    Ok(FactorPair {
        u: fp.u * scale,
        v: fp.v * scale,
    })
}

/// The halving schedule `lambda0 / 2^t` for `t = 0..=halvings`.
pub fn lambda_schedule(lambda0: f64, halvings: usize) -> Vec<f64> {
    (0..=halvings).map(|t| lambda0 / f64::powi(2.0, t as i32)).collect()
}

/// Product, objective value, and infinity norm at a candidate point;
/// infeasible candidates come back as the error carrying the first
/// offending entry.
struct EvalCache {
    m_hat: Array2<f64>,
    value: ObjectiveValue,
    inf_norm: f64,
}

fn eval_candidate(
    obs: &BinaryObservations,
    link: &LinkModel,
    u: &Array2<f64>,
    v: &Array2<f64>,
    alpha: f64,
    lambda: f64,
) -> Result<EvalCache> {
    let m_hat = u.dot(&v.t());
    let mut inf_norm = 0.0f64;
    let mut barrier = 0.0;
    for ((i, j), &x) in m_hat.indexed_iter() {
        let t = x / alpha;
        let arg = 1.0 - t * t;
        if arg <= 0.0 {
            return Err(Error::InfeasiblePoint {
                row: i,
                col: j,
                value: x,
                alpha,
            });
        }
        barrier -= arg.ln();
        inf_norm = inf_norm.max(x.abs());
    }
    let nll_value = nll(obs, link, &m_hat)?;
    Ok(EvalCache {
        m_hat,
        value: ObjectiveValue {
            nll: nll_value,
            barrier,
            total: nll_value + lambda * barrier,
            lambda,
        },
        inf_norm,
    })
}

/// Gradients with respect to the factors given the cached product.
fn grads_from_cache(
    obs: &BinaryObservations,
    link: &LinkModel,
    cache: &EvalCache,
    fp: &FactorPair,
    alpha: f64,
    lambda: f64,
) -> (Array2<f64>, Array2<f64>) {
    let mut w = cache
        .m_hat
        .mapv(|x| lambda * 2.0 * x / (alpha * alpha - x * x));
    for (i, j, y) in obs.iter() {
        let x = cache.m_hat[[i, j]];
        w[[i, j]] += if y == 1 {
            -link.score_plus(x)
        } else {
            link.score_minus(x)
        };
    }
    (w.dot(&fp.v), w.t().dot(&fp.u))
}

fn grad_norm(gu: &Array2<f64>, gv: &Array2<f64>) -> f64 {
    let s: f64 = gu.iter().map(|g| g * g).sum::<f64>() + gv.iter().map(|g| g * g).sum::<f64>();
    s.sqrt()
}

/// Gradient descent with backtracking at a fixed barrier weight.
///
/// Accepts a step only when the candidate is strictly feasible and
/// satisfies the Armijo condition
/// `total(new) <= total(old) - armijo_c * t * ||grad||_F^2`. Stops once the
/// joint gradient norm falls below `grad_tol * max(1, |total|)` or the
/// iteration cap is reached. A stalled line search returns the
/// [`Error::LineSearchStall`] error carrying the last feasible iterate.
pub fn minimize_at_lambda(
    obs: &BinaryObservations,
    link: &LinkModel,
    fp0: &FactorPair,
    alpha: f64,
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<LambdaSolve> {
    cfg.validate()?;
    let mut fp = fp0.clone();
    let mut cache = eval_candidate(obs, link, &fp.u, &fp.v, alpha, lambda)?;
    let (mut gu, mut gv) = grads_from_cache(obs, link, &cache, &fp, alpha, lambda);
    let mut trace = Vec::new();
    if cfg.record_trace {
        trace.push(StepRecord {
            total: cache.value.total,
            product_inf_norm: cache.inf_norm,
        });
    }

    let mut t_init = 1.0f64;
    let mut iterations = 0;
    let mut gnorm = grad_norm(&gu, &gv);
    while iterations < cfg.max_iters_per_lambda {
        if gnorm <= cfg.grad_tol * cache.value.total.abs().max(1.0) {
            break;
        }
        let gnorm2 = gnorm * gnorm;
        let mut t = t_init;
        let accepted = loop {
            let u_new = &fp.u - &(t * &gu);
            let v_new = &fp.v - &(t * &gv);
            match eval_candidate(obs, link, &u_new, &v_new, alpha, lambda) {
                Ok(cand) if cand.value.total <= cache.value.total - cfg.armijo_c * t * gnorm2 => {
                    break Some((FactorPair { u: u_new, v: v_new }, cand));
                }
                _ => {
                    t *= cfg.backtrack_beta;
                    if t < STEP_FLOOR {
                        break None;
                    }
                }
            }
        };
        let Some((fp_new, cand)) = accepted else {
            return Err(Error::LineSearchStall {
                lambda,
                iterations,
                last: Box::new(fp),
            });
        };
        fp = fp_new;
        cache = cand;
        iterations += 1;
        t_init = (2.0 * t).min(1.0);
        if cfg.record_trace {
            trace.push(StepRecord {
                total: cache.value.total,
                product_inf_norm: cache.inf_norm,
            });
        }
        let grads = grads_from_cache(obs, link, &cache, &fp, alpha, lambda);
        gu = grads.0;
        gv = grads.1;
        gnorm = grad_norm(&gu, &gv);
    }

    Ok(LambdaSolve {
        factors: fp,
        iterations,
        final_grad_norm: gnorm,
        final_value: cache.value,
        trace,
    })
}

/// Warm-started sweep down a barrier schedule. A stalled solve keeps its
/// last feasible iterate and moves on to the next weight.
pub fn solve_path(
    obs: &BinaryObservations,
    link: &LinkModel,
    fp0: &FactorPair,
    alpha: f64,
    lambdas: &[f64],
    cfg: &SolverConfig,
) -> Result<PathSolve> {
    if lambdas.is_empty() {
        return Err(Error::invalid("empty barrier schedule"));
    }
    let mut fp = fp0.clone();
    let mut per_lambda_iterations = Vec::with_capacity(lambdas.len());
    let mut traces = Vec::new();
    let mut stalled = false;
    let mut final_grad_norm = f64::NAN;
    let mut final_value = None;
    for &lambda in lambdas {
        match minimize_at_lambda(obs, link, &fp, alpha, lambda, cfg) {
            Ok(solve) => {
                fp = solve.factors;
                per_lambda_iterations.push(solve.iterations);
                final_grad_norm = solve.final_grad_norm;
                final_value = Some(solve.final_value);
                if cfg.record_trace {
                    traces.push(solve.trace);
                }
            }
            Err(Error::LineSearchStall { iterations, last, .. }) => {
                stalled = true;
                fp = *last;
                per_lambda_iterations.push(iterations);
                let cache = eval_candidate(obs, link, &fp.u, &fp.v, alpha, lambda)?;
                let grads = grads_from_cache(obs, link, &cache, &fp, alpha, lambda);
                final_grad_norm = grad_norm(&grads.0, &grads.1);
                final_value = Some(cache.value);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(PathSolve {
        factors: fp,
        per_lambda_iterations,
        final_grad_norm,
        final_value: final_value.expect("schedule nonempty"),
        stalled,
        traces,
    })
}

/// Rank-deficiency test on converged factors.
///
/// Deficiency certifies global optimality of the product for the
/// rank-constrained problem; full rank is inconclusive, not a negative
/// result.
pub fn certify(fp: &FactorPair) -> Certificate {
    let su = linalg::singular_values(&fp.u);
    let sv = linalg::singular_values(&fp.v);
    let smallest = su.last().copied().unwrap_or(0.0).min(sv.last().copied().unwrap_or(0.0));
    let largest = su.first().copied().unwrap_or(0.0).max(sv.first().copied().unwrap_or(0.0));
    if smallest <= RANK_DEFICIENCY_RTOL * largest {
        Certificate::RankDeficientGlobalOpt
    } else {
        Certificate::FullRankNoCertificate
    }
}

/// Round-robin fold assignment over shuffled entry positions.
fn cv_folds(len: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..len).collect();
    use rand::seq::SliceRandom;
    let mut rng = stream_rng(seed, Stream::CvFolds);
    order.shuffle(&mut rng);
    let mut out = vec![Vec::with_capacity(len / folds + 1); folds];
    for (pos, &idx) in order.iter().enumerate() {
        out[pos % folds].push(idx);
    }
    out
}

/// Holdout nll per schedule point for one fold; `None` if the fold is
/// degenerate (empty train or holdout side).
fn run_fold(
    obs: &BinaryObservations,
    link: &LinkModel,
    cfg: &SolverConfig,
    lambdas: &[f64],
    holdout_idx: &[usize],
) -> Result<Option<Vec<f64>>> {
    if holdout_idx.is_empty() || holdout_idx.len() == obs.len() {
        return Ok(None);
    }
    let holdout_set: std::collections::HashSet<usize> = holdout_idx.iter().copied().collect();
    let train_idx: Vec<usize> = (0..obs.len()).filter(|t| !holdout_set.contains(t)).collect();
    let train = obs.select(&train_idx)?;
    let holdout = obs.select(holdout_idx)?;

    let mut fp = init_factors(obs.mask().m(), obs.mask().n(), cfg)?;
    let mut errors = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        fp = match minimize_at_lambda(&train, link, &fp, cfg.alpha, lambda, cfg) {
            Ok(solve) => solve.factors,
            Err(Error::LineSearchStall { last, .. }) => *last,
            Err(e) => return Err(e),
        };
        let holdout_nll = nll(&holdout, link, &fp.product())?;
        errors.push(holdout_nll / holdout.len() as f64);
    }
    Ok(Some(errors))
}

/// Full fit: cross-validated barrier selection, then a refit on all
/// observations down the schedule to the selected weight.
pub fn fit(obs: &BinaryObservations, link: &LinkModel, cfg: &SolverConfig) -> Result<FitReport> {
    cfg.validate()?;
    if obs.is_empty() {
        return Err(Error::invalid("cannot fit on empty observations"));
    }
    let (m, n) = (obs.mask().m(), obs.mask().n());
    let fp0 = init_factors(m, n, cfg)?;
    let lambda0 = match cfg.lambda0 {
        Some(l0) => l0,
        None => {
            let initial_nll = nll(obs, link, &fp0.product())?;
            (initial_nll / (m * n) as f64).max(1.0)
        }
    };
    let lambdas = lambda_schedule(lambda0, cfg.lambda_halvings);

    let folds = cv_folds(obs.len(), cfg.cv_folds, cfg.seed);
    let fold_errors: Vec<Option<Vec<f64>>> = if cfg.sequential_cv {
        folds
            .iter()
            .map(|f| run_fold(obs, link, cfg, &lambdas, f))
            .collect::<Result<_>>()?
    } else {
        folds
            .par_iter()
            .map(|f| run_fold(obs, link, cfg, &lambdas, f))
            .collect::<Result<_>>()?
    };

    let usable: Vec<&Vec<f64>> = fold_errors.iter().flatten().collect();
    if usable.is_empty() {
        return Err(Error::CvDegenerate(format!(
            "{} folds over {} observations left no usable fold",
            cfg.cv_folds,
            obs.len()
        )));
    }
    let cv_errors: Vec<(f64, f64)> = lambdas
        .iter()
        .enumerate()
        .map(|(t, &lambda)| {
            let mean = usable.iter().map(|e| e[t]).sum::<f64>() / usable.len() as f64;
            (lambda, mean)
        })
        .collect();

    // Ties keep the earlier (larger) weight.
    let best = cv_errors
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.1.partial_cmp(&b.1).unwrap())
        .map(|(t, _)| t)
        .expect("schedule nonempty");

    let path = solve_path(obs, link, &fp0, cfg.alpha, &lambdas[..=best], cfg)?;
    let mut m_hat = path.factors.product();
    let alpha = cfg.alpha;
    m_hat.mapv_inplace(|x| x.clamp(-alpha, alpha));
    let certificate = certify(&path.factors);

    Ok(FitReport {
        m_hat,
        factors: path.factors,
        lambda_selected: lambdas[best],
        cv_errors,
        iterations: path.per_lambda_iterations,
        certificate,
        final_grad_norm: path.final_grad_norm,
        stalled: path.stalled,
    })
}

impl FitReport {
    /// Structured text serialization: key=value sections, then the
    /// recovered matrix as a `m n` header and one row per line with 17
    /// significant digits.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "[fit]")?;
        writeln!(w, "m={}", self.m_hat.nrows())?;
        writeln!(w, "n={}", self.m_hat.ncols())?;
        writeln!(w, "k={}", self.factors.k())?;
        writeln!(w, "lambda_selected={:.16e}", self.lambda_selected)?;
        writeln!(w, "final_grad_norm={:.16e}", self.final_grad_norm)?;
        writeln!(w, "certificate={}", self.certificate)?;
        writeln!(w, "stalled={}", self.stalled)?;
        writeln!(w, "[cv]")?;
        writeln!(w, "count={}", self.cv_errors.len())?;
        for (t, (lambda, err)) in self.cv_errors.iter().enumerate() {
            writeln!(w, "cv_{t}={lambda:.16e} {err:.16e}")?;
        }
        writeln!(w, "[iterations]")?;
        let iters: Vec<String> = self.iterations.iter().map(|i| i.to_string()).collect();
        writeln!(w, "per_lambda={}", iters.join(","))?;
        writeln!(w, "[matrix]")?;
        writeln!(w, "{} {}", self.m_hat.nrows(), self.m_hat.ncols())?;
        for row in self.m_hat.rows() {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(w, "{}", cells.join(" "))?;
        }
        Ok(())
    }

    pub fn to_string_report(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("string write cannot fail");
        String::from_utf8(buf).expect("report is utf-8")
    }
}

/// Reads a matrix in the dense text format written by
/// [`FitReport::write_to`]'s matrix section.
pub fn read_matrix<R: std::io::BufRead>(mut r: R) -> Result<Array2<f64>> {
    let mut header = String::new();
    r.read_line(&mut header)?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse {
            line: 1,
            message: format!("{e}"),
        })?;
    if dims.len() != 2 {
        return Err(Error::Parse {
            line: 1,
            message: "expected 'm n' header".into(),
        });
    }
    let (m, n) = (dims[0], dims[1]);
    let mut data = Vec::with_capacity(m * n);
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        for tok in line.split_whitespace() {
            data.push(tok.parse::<f64>().map_err(|e| Error::Parse {
                line: idx + 2,
                message: format!("{e}"),
            })?);
        }
    }
    Array2::from_shape_vec((m, n), data)
        .map_err(|e| Error::invalid(format!("matrix shape mismatch: {e}")))
}
