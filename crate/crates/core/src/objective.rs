//! Negative log-likelihood, its derivatives, and the barrier-augmented
//! factored objective.
//!
//! The likelihood part sums over observed entries only; the log-barrier
//! `-lambda * sum_ij log(1 - (M_ij/alpha)^2)` sums over every entry of the
//! matrix, enforcing the infinity-norm constraint from the interior on
//! observed and unobserved entries alike. The factored form evaluates both
//! at `M = U V^T` and propagates the entrywise gradient through the
//! factors by the chain rule.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::links::LinkModel;
use crate::observe::BinaryObservations;

/// Thin factors `U` (m x k) and `V` (n x k) representing `M = U V^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub u: Array2<f64>,
    pub v: Array2<f64>,
}

impl FactorPair {
    pub fn new(u: Array2<f64>, v: Array2<f64>) -> Result<Self> {
        if u.ncols() != v.ncols() {
            return Err(Error::invalid(format!(
                "factor widths differ: {} vs {}",
                u.ncols(),
                v.ncols()
            )));
        }
        if u.ncols() == 0 {
            return Err(Error::invalid("factor width k must be positive"));
        }
        Ok(FactorPair { u, v })
    }

    pub fn k(&self) -> usize {
        self.u.ncols()
    }

    pub fn m(&self) -> usize {
        self.u.nrows()
    }

    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    /// The represented matrix `U V^T`.
    pub fn product(&self) -> Array2<f64> {
        self.u.dot(&self.v.t())
    }

    /// Largest entry magnitude of the product.
    pub fn product_inf_norm(&self) -> f64 {
        self.product().iter().fold(0.0f64, |a, x| a.max(x.abs()))
    }

    /// Whether the product lies strictly inside the barrier box.
    pub fn is_strictly_feasible(&self, alpha: f64) -> bool {
        self.product_inf_norm() < alpha
    }
}

/// Value of the barrier-augmented objective, with its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    /// Negative log-likelihood over observed entries.
    pub nll: f64,
    /// Barrier sum `-sum_ij log(1 - (M_ij/alpha)^2)` over all entries.
    pub barrier: f64,
    /// `nll + lambda * barrier`.
    pub total: f64,
    pub lambda: f64,
}

fn check_shape(obs: &BinaryObservations, m_hat: &Array2<f64>) -> Result<()> {
    if m_hat.nrows() != obs.mask().m() || m_hat.ncols() != obs.mask().n() {
        return Err(Error::invalid(format!(
            "matrix is {} x {}, observations are on {} x {}",
            m_hat.nrows(),
            m_hat.ncols(),
            obs.mask().m(),
            obs.mask().n()
        )));
    }
    Ok(())
}

/// Negative log-likelihood of `m_hat` on the observed signs, computed with
/// tail-safe log-CDF evaluation.
pub fn nll(obs: &BinaryObservations, link: &LinkModel, m_hat: &Array2<f64>) -> Result<f64> {
    check_shape(obs, m_hat)?;
    let mut total = 0.0;
    for (i, j, y) in obs.iter() {
        let x = m_hat[[i, j]];
        total -= if y == 1 {
            link.log_f(x)
        } else {
            link.log_one_minus_f(x)
        };
    }
    Ok(total)
}

/// Entrywise gradient of the negative log-likelihood; zero off the mask.
pub fn nll_grad(
    obs: &BinaryObservations,
    link: &LinkModel,
    m_hat: &Array2<f64>,
) -> Result<Array2<f64>> {
    check_shape(obs, m_hat)?;
    let mut g = Array2::zeros(m_hat.raw_dim());
    for (i, j, y) in obs.iter() {
        let x = m_hat[[i, j]];
        g[[i, j]] = if y == 1 {
            -link.score_plus(x)
        } else {
            link.score_minus(x)
        };
    }
    Ok(g)
}

/// Entrywise second derivative of the negative log-likelihood; zero off the
/// mask. Cross-partials vanish, so this matrix is the whole Hessian in vec
/// coordinates.
pub fn nll_hess_diag(
    obs: &BinaryObservations,
    link: &LinkModel,
    m_hat: &Array2<f64>,
) -> Result<Array2<f64>> {
    check_shape(obs, m_hat)?;
    let mut h = Array2::zeros(m_hat.raw_dim());
    for (i, j, y) in obs.iter() {
        let x = m_hat[[i, j]];
        h[[i, j]] = if y == 1 {
            link.curvature_plus(x)
        } else {
            link.curvature_minus(x)
        };
    }
    Ok(h)
}

/// Barrier sum over all entries; errors with the offending index if any
/// entry touches or leaves the open box.
fn barrier_sum(m_hat: &Array2<f64>, alpha: f64) -> Result<f64> {
    let mut sum = 0.0;
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
        sum -= arg.ln();
    }
    Ok(sum)
}

/// Evaluates `nll + lambda * barrier` at a dense matrix.
pub fn barrier_objective(
    obs: &BinaryObservations,
    link: &LinkModel,
    m_hat: &Array2<f64>,
    alpha: f64,
    lambda: f64,
) -> Result<ObjectiveValue> {
    check_shape(obs, m_hat)?;
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda must be nonnegative, got {lambda}")));
    }
    let barrier = barrier_sum(m_hat, alpha)?;
    let nll_value = nll(obs, link, m_hat)?;
    Ok(ObjectiveValue {
        nll: nll_value,
        barrier,
        total: nll_value + lambda * barrier,
        lambda,
    })
}

/// Objective value at `M = U V^T`.
pub fn factored_objective(
    obs: &BinaryObservations,
    link: &LinkModel,
    fp: &FactorPair,
    alpha: f64,
    lambda: f64,
) -> Result<ObjectiveValue> {
    barrier_objective(obs, link, &fp.product(), alpha, lambda)
}

/// Objective value and gradients with respect to both factors.
///
/// With `W` the entrywise gradient of the barrier-augmented objective in
/// `M`, the chain rule through `M = U V^T` gives `grad_u = W V` and
/// `grad_v = W^T U`.
pub fn factored_objective_and_grad(
    obs: &BinaryObservations,
    link: &LinkModel,
    fp: &FactorPair,
    alpha: f64,
    lambda: f64,
) -> Result<(ObjectiveValue, Array2<f64>, Array2<f64>)> {
    let m_hat = fp.product();
    let value = barrier_objective(obs, link, &m_hat, alpha, lambda)?;

    // Barrier part of W: lambda * (2 M / alpha^2) / (1 - (M/alpha)^2),
    // defined on every entry.
    let mut w = m_hat.mapv(|x| lambda * 2.0 * x / (alpha * alpha - x * x));
    for (i, j, y) in obs.iter() {
        let x = m_hat[[i, j]];
        w[[i, j]] += if y == 1 {
            -link.score_plus(x)
        } else {
            link.score_minus(x)
        };
    }
    let grad_u = w.dot(&fp.v);
    let grad_v = w.t().dot(&fp.u);
    Ok((value, grad_u, grad_v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observe::{gen_ground_truth, sample_observations};
    use crate::sampling::{gen_bernoulli, Mask};
    use approx::assert_relative_eq;
    use ndarray::array;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn small_instance(
        m: usize,
        n: usize,
        seed: u64,
        link: &LinkModel,
    ) -> (BinaryObservations, Array2<f64>) {
        let truth = gen_ground_truth(m, n, 2.min(m).min(n), 0.9, seed).unwrap();
        let mask = gen_bernoulli(m, n, 0.7, seed + 1).unwrap();
        let obs = sample_observations(&truth, &mask, link, seed + 2).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed + 3);
        let m_hat = Array2::from_shape_fn((m, n), |_| 0.8 * (rng.random::<f64>() - 0.5));
        (obs, m_hat)
    }

    /// Straightforward per-entry reimplementation used as an oracle.
    fn nll_naive(obs: &BinaryObservations, link: &LinkModel, m_hat: &Array2<f64>) -> f64 {
        let mut total = 0.0;
        for (i, j, y) in obs.iter() {
            let f = link.eval(m_hat[[i, j]]).unwrap().f;
            total -= if y == 1 { f.ln() } else { (1.0 - f).ln() };
        }
        total
    }

    #[test]
    fn nll_at_zero_is_count_times_ln2() {
        for link in [LinkModel::logit(0.7).unwrap(), LinkModel::probit(1.3).unwrap()] {
            let mask = gen_bernoulli(20, 15, 0.5, 3).unwrap();
            let truth = gen_ground_truth(20, 15, 2, 1.0, 4).unwrap();
            let obs = sample_observations(&truth, &mask, &link, 5).unwrap();
            let value = nll(&obs, &link, &Array2::zeros((20, 15))).unwrap();
            assert_relative_eq!(
                value,
                obs.len() as f64 * std::f64::consts::LN_2,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn nll_single_entry_frozen_value() {
        let mask = Mask::from_entries(1, 1, vec![(0, 0)]).unwrap();
        let obs = BinaryObservations::new(mask, vec![1]).unwrap();
        let link = LinkModel::logit(1.0).unwrap();
        let value = nll(&obs, &link, &array![[1.0]]).unwrap();
        // -log(1/(1+e^-1)), frozen from an independent evaluation
        assert_relative_eq!(value, 0.31326168751822286, max_relative = 1e-14);
    }

    #[test]
    fn nll_matches_naive_oracle() {
        for (seed, link) in [
            (10, LinkModel::logit(0.4).unwrap()),
            (11, LinkModel::probit(0.6).unwrap()),
        ] {
            let (obs, m_hat) = small_instance(13, 9, seed, &link);
            let fast = nll(&obs, &link, &m_hat).unwrap();
            let slow = nll_naive(&obs, &link, &m_hat);
            assert_relative_eq!(fast, slow, max_relative = 1e-10);
        }
    }

    #[test]
    fn grad_single_entry_and_off_mask_zeros() {
        let mask = Mask::from_entries(2, 2, vec![(0, 0)]).unwrap();
        let obs = BinaryObservations::new(mask, vec![1]).unwrap();
        let link = LinkModel::logit(1.0).unwrap();
        let g = nll_grad(&obs, &link, &Array2::zeros((2, 2))).unwrap();
        // -fdot(0)/f(0) = -0.25/0.5
        assert_relative_eq!(g[[0, 0]], -0.5, max_relative = 1e-14);
        assert_eq!(g[[0, 1]], 0.0);
        assert_eq!(g[[1, 0]], 0.0);
        assert_eq!(g[[1, 1]], 0.0);
    }

    #[test]
    fn grad_matches_finite_differences() {
        for (seed, link) in [
            (21, LinkModel::logit(0.5).unwrap()),
            (22, LinkModel::probit(0.4).unwrap()),
        ] {
            let (obs, mut m_hat) = small_instance(8, 6, seed, &link);
            let g = nll_grad(&obs, &link, &m_hat).unwrap();
            for (i, j, _) in obs.iter() {
                let x = m_hat[[i, j]];
                let h = 1e-6 * x.abs().max(1.0);
                m_hat[[i, j]] = x + h;
                let fp = nll(&obs, &link, &m_hat).unwrap();
                m_hat[[i, j]] = x - h;
                let fm = nll(&obs, &link, &m_hat).unwrap();
                m_hat[[i, j]] = x;
                let fd = (fp - fm) / (2.0 * h);
                assert_relative_eq!(g[[i, j]], fd, max_relative = 1e-6, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn hess_diag_matches_finite_differences() {
        // Second-order central differences need a wider step than gradient
        // checks: h ~ eps^(1/4) balances truncation and round-off.
        for (seed, link) in [
            (31, LinkModel::logit(0.5).unwrap()),
            (32, LinkModel::probit(0.4).unwrap()),
        ] {
            let (obs, mut m_hat) = small_instance(8, 6, seed, &link);
            let hd = nll_hess_diag(&obs, &link, &m_hat).unwrap();
            for (i, j, _) in obs.iter() {
                let x = m_hat[[i, j]];
                let h = 1e-4 * x.abs().max(1.0);
                let f0 = nll(&obs, &link, &m_hat).unwrap();
                m_hat[[i, j]] = x + h;
                let fp = nll(&obs, &link, &m_hat).unwrap();
                m_hat[[i, j]] = x - h;
                let fm = nll(&obs, &link, &m_hat).unwrap();
                m_hat[[i, j]] = x;
                let fd = (fp - 2.0 * f0 + fm) / (h * h);
                assert_relative_eq!(hd[[i, j]], fd, max_relative = 1e-4);
            }
        }
    }

    #[test]
    fn hess_diag_dominates_gamma_and_vanishes_off_mask() {
        for link in [LinkModel::logit(0.5).unwrap(), LinkModel::probit(0.5).unwrap()] {
            let alpha = 1.0;
            let gamma = link.constants(alpha).unwrap().gamma_alpha;
            let mut rng = ChaCha20Rng::seed_from_u64(77);
            let mask = gen_bernoulli(30, 30, 0.5, 8).unwrap();
            let truth = gen_ground_truth(30, 30, 3, alpha, 9).unwrap();
            let obs = sample_observations(&truth, &mask, &link, 10).unwrap();
            let m_hat = Array2::from_shape_fn((30, 30), |_| alpha * (2.0 * rng.random::<f64>() - 1.0));
            let hd = nll_hess_diag(&obs, &link, &m_hat).unwrap();
            for i in 0..30 {
                for j in 0..30 {
                    if obs.mask().contains(i, j) {
                        assert!(
                            hd[[i, j]] >= gamma - 1e-9,
                            "curvature {} below gamma {gamma}",
                            hd[[i, j]]
                        );
                    } else {
                        assert_eq!(hd[[i, j]], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn gradient_is_bounded_by_l_alpha() {
        for link in [LinkModel::logit(0.3).unwrap(), LinkModel::probit(0.3).unwrap()] {
            let alpha = 1.0;
            let l_alpha = link.constants(alpha).unwrap().l_alpha;
            let truth = gen_ground_truth(20, 20, 2, alpha, 13).unwrap();
            let mask = gen_bernoulli(20, 20, 0.6, 14).unwrap();
            let obs = sample_observations(&truth, &mask, &link, 15).unwrap();
            let g = nll_grad(&obs, &link, &truth.m_star).unwrap();
            for v in g.iter() {
                assert!(v.abs() <= l_alpha + 1e-12, "|Z_ij| = {} > L = {l_alpha}", v.abs());
            }
        }
    }

    #[test]
    fn nll_is_convex_along_segments() {
        let link = LinkModel::probit(0.4).unwrap();
        let mask = gen_bernoulli(12, 10, 0.6, 50).unwrap();
        let truth = gen_ground_truth(12, 10, 2, 1.0, 51).unwrap();
        let obs = sample_observations(&truth, &mask, &link, 52).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(53);
        for _ in 0..100 {
            let a = Array2::from_shape_fn((12, 10), |_| 2.0 * rng.random::<f64>() - 1.0);
            let b = Array2::from_shape_fn((12, 10), |_| 2.0 * rng.random::<f64>() - 1.0);
            let mid = (&a + &b) / 2.0;
            let fa = nll(&obs, &link, &a).unwrap();
            let fb = nll(&obs, &link, &b).unwrap();
            let fmid = nll(&obs, &link, &mid).unwrap();
            assert!(fmid <= 0.5 * (fa + fb) + 1e-9);
        }
    }

    #[test]
    fn barrier_values_and_errors() {
        let mask = Mask::from_entries(1, 1, vec![(0, 0)]).unwrap();
        let obs = BinaryObservations::new(mask, vec![1]).unwrap();
        let link = LinkModel::logit(1.0).unwrap();
        let alpha = 0.8;

        let zero = barrier_objective(&obs, &link, &array![[0.0]], alpha, 2.0).unwrap();
        assert_eq!(zero.barrier, 0.0);

        // M = alpha / sqrt(2): barrier term is -log(1/2) = ln 2
        let v = barrier_objective(
            &obs,
            &link,
            &array![[alpha / 2.0f64.sqrt()]],
            alpha,
            1.0,
        )
        .unwrap();
        assert_relative_eq!(v.barrier, std::f64::consts::LN_2, max_relative = 1e-12);
        assert_relative_eq!(v.total, v.nll + v.barrier, max_relative = 1e-12);

        // lambda = 0: total equals nll
        let v0 = barrier_objective(&obs, &link, &array![[0.3]], alpha, 0.0).unwrap();
        assert_eq!(v0.total, v0.nll);

        // off-mask entries also feel the barrier
        let mask2 = Mask::from_entries(2, 2, vec![(0, 0)]).unwrap();
        let obs2 = BinaryObservations::new(mask2, vec![1]).unwrap();
        let err = barrier_objective(
            &obs2,
            &link,
            &array![[0.0, 0.0], [0.0, 0.85]],
            alpha,
            1.0,
        );
        match err {
            Err(Error::InfeasiblePoint { row, col, .. }) => {
                assert_eq!((row, col), (1, 1));
            }
            other => panic!("expected infeasible-point error, got {other:?}"),
        }
    }

    #[test]
    fn factored_gradients_match_finite_differences() {
        for (seed, link) in [
            (61u64, LinkModel::logit(0.5).unwrap()),
            (62, LinkModel::probit(0.4).unwrap()),
        ] {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let (m, n, k) = (7, 5, 3);
            let alpha = 1.0;
            let lambda = 0.2;
            let truth = gen_ground_truth(m, n, 2, alpha, seed + 1).unwrap();
            let mask = gen_bernoulli(m, n, 0.8, seed + 2).unwrap();
            let obs = sample_observations(&truth, &mask, &link, seed + 3).unwrap();

            // scale factors so the product is well inside the box
            let mut u = Array2::from_shape_fn((m, k), |_| rng.random::<f64>() - 0.5);
            let mut v = Array2::from_shape_fn((n, k), |_| rng.random::<f64>() - 0.5);
            let fp0 = FactorPair::new(u.clone(), v.clone()).unwrap();
            let scale = (0.8 * alpha / fp0.product_inf_norm()).sqrt();
            u.mapv_inplace(|x| x * scale);
            v.mapv_inplace(|x| x * scale);
            let fp = FactorPair::new(u, v).unwrap();

            let (_, gu, gv) = factored_objective_and_grad(&obs, &link, &fp, alpha, lambda).unwrap();
            let value_at = |fp: &FactorPair| {
                factored_objective(obs_ref(&obs), &link, fp, alpha, lambda)
                    .unwrap()
                    .total
            };
            for r in 0..m {
                for c in 0..k {
                    let mut fpp = fp.clone();
                    let x = fpp.u[[r, c]];
                    let h = 1e-6 * x.abs().max(1.0);
                    fpp.u[[r, c]] = x + h;
                    let plus = value_at(&fpp);
                    fpp.u[[r, c]] = x - h;
                    let minus = value_at(&fpp);
                    let fd = (plus - minus) / (2.0 * h);
                    assert_relative_eq!(gu[[r, c]], fd, max_relative = 1e-5, epsilon = 1e-8);
                }
            }
            for r in 0..n {
                for c in 0..k {
                    let mut fpp = fp.clone();
                    let x = fpp.v[[r, c]];
                    let h = 1e-6 * x.abs().max(1.0);
                    fpp.v[[r, c]] = x + h;
                    let plus = value_at(&fpp);
                    fpp.v[[r, c]] = x - h;
                    let minus = value_at(&fpp);
                    let fd = (plus - minus) / (2.0 * h);
                    assert_relative_eq!(gv[[r, c]], fd, max_relative = 1e-5, epsilon = 1e-8);
                }
            }
        }
    }

    fn obs_ref(o: &BinaryObservations) -> &BinaryObservations {
        o
    }

    #[test]
    fn zero_u_gives_zero_grad_v() {
        let link = LinkModel::logit(1.0).unwrap();
        let mask = gen_bernoulli(6, 4, 0.9, 70).unwrap();
        let truth = gen_ground_truth(6, 4, 1, 1.0, 71).unwrap();
        let obs = sample_observations(&truth, &mask, &link, 72).unwrap();
        let fp = FactorPair::new(Array2::zeros((6, 2)), Array2::from_elem((4, 2), 0.1)).unwrap();
        let (_, _, gv) = factored_objective_and_grad(&obs, &link, &fp, 1.0, 0.5).unwrap();
        assert!(gv.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn objective_invariant_under_gauge_transform() {
        let link = LinkModel::probit(0.5).unwrap();
        let mask = gen_bernoulli(9, 8, 0.7, 80).unwrap();
        let truth = gen_ground_truth(9, 8, 2, 1.0, 81).unwrap();
        let obs = sample_observations(&truth, &mask, &link, 82).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(83);
        let mut u = Array2::from_shape_fn((9, 2), |_| rng.random::<f64>() - 0.5);
        let mut v = Array2::from_shape_fn((8, 2), |_| rng.random::<f64>() - 0.5);
        let fp0 = FactorPair::new(u.clone(), v.clone()).unwrap();
        let scale = (0.7 / fp0.product_inf_norm()).sqrt();
        u.mapv_inplace(|x| x * scale);
        v.mapv_inplace(|x| x * scale);
        let fp = FactorPair::new(u.clone(), v.clone()).unwrap();

        // R and R^-T for a fixed well-conditioned 2x2
        let r = array![[1.2, 0.3], [-0.4, 0.9]];
        let det: f64 = 1.2 * 0.9 - 0.3 * (-0.4);
        let r_inv_t = array![[0.9 / det, 0.4 / det], [-0.3 / det, 1.2 / det]];
        let gauged = FactorPair::new(u.dot(&r), v.dot(&r_inv_t)).unwrap();

        let a = factored_objective(&obs, &link, &fp, 1.0, 0.3).unwrap();
        let b = factored_objective(&obs, &link, &gauged, 1.0, 0.3).unwrap();
        assert_relative_eq!(a.total, b.total, max_relative = 1e-10);
    }
}
