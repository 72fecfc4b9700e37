//! Theoretical estimation-error bounds for plotting against empirical
//! error.
//!
//! Two families are evaluated. The explicit-constant bound on
//! `||M_hat - M*||_F / sqrt(mn)` comes in a spectral form, in terms of the
//! mask's top two singular values, and an observation-count form, in terms
//! of `|Omega|` and the spectral-gap constant `C`. The asymptotic rates
//! (the fixed-sampling-fraction rate and the comparison rates against the
//! convex-relaxation approach) are reported with constant 1 and are
//! rate-only: only their scaling in `(n, r, p)` is meaningful.

use crate::error::{Error, Result};
use crate::links::LinkConstants;

/// Inputs to the bound calculator.
///
/// Construction normalizes the orientation so the row side is the long
/// one: the bound formulas assume `m >= n`, and singular values and
/// observation counts are transpose-invariant.
#[derive(Debug, Clone)]
pub struct BoundInputs {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub alpha: f64,
    pub link_constants: LinkConstants,
    pub sigma1: f64,
    pub sigma2: f64,
    pub omega_size: usize,
    /// Spectral-gap constant of the sampling assumption; no canonical
    /// value exists, 3 is the default.
    pub c_spectral: f64,
    /// Whether construction swapped the two sides.
    pub transposed: bool,
}

/// Default spectral-gap constant.
pub const DEFAULT_C_SPECTRAL: f64 = 3.0;

impl BoundInputs {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        m: usize,
        n: usize,
        r: usize,
        alpha: f64,
        link_constants: LinkConstants,
        sigma1: f64,
        sigma2: f64,
        omega_size: usize,
        c_spectral: f64,
    ) -> Result<Self> {
        if m == 0 || n == 0 || r == 0 {
            return Err(Error::invalid("dimensions and rank must be positive"));
        }
        if r > m.min(n) {
            return Err(Error::invalid(format!("rank {r} exceeds min({m}, {n})")));
        }
        if !(alpha > 0.0) || !(c_spectral > 0.0) {
            return Err(Error::invalid("alpha and c_spectral must be positive"));
        }
        if !(sigma1 >= sigma2 && sigma2 >= 0.0) {
            return Err(Error::invalid(format!(
                "need sigma1 >= sigma2 >= 0, got {sigma1}, {sigma2}"
            )));
        }
        if omega_size == 0 {
            return Err(Error::invalid("omega_size must be positive"));
        }
        let (m, n, transposed) = if m >= n { (m, n, false) } else { (n, m, true) };
        Ok(BoundInputs {
            m,
            n,
            r,
            alpha,
            link_constants,
            sigma1,
            sigma2,
            omega_size,
            c_spectral,
            transposed,
        })
    }

    fn constants(&self) -> Result<(f64, f64)> {
        let gamma = self.link_constants.gamma_alpha;
        if !(gamma > 0.0) {
            return Err(Error::BoundUndefined(format!(
                "curvature constant gamma_alpha = {gamma} is not positive"
            )));
        }
        let c1 = 4.0 * std::f64::consts::SQRT_2 * self.alpha;
        let c2 = 32.16 * std::f64::consts::SQRT_2 * self.link_constants.l_alpha / gamma;
        Ok((c1, c2))
    }
}

/// Explicit-constant bounds on `||M_hat - M*||_F / sqrt(mn)`.
///
/// Returns `(spectral_form, omega_form)`:
///
/// ```text
/// spectral_form = max( C1 r s2 / s1,  C2 m sqrt(r^3 n) / s1^2 )
/// omega_form    = max( C1 C r sqrt(m) / sqrt(|O|),  C2 m^3 sqrt(r^3 n) / |O|^2 )
/// ```
///
/// with `C1 = 4 sqrt(2) alpha` and `C2 = 32.16 sqrt(2) L / gamma`.
pub fn theorem_bound(b: &BoundInputs) -> Result<(f64, f64)> {
    let (c1, c2) = b.constants()?;
    if !(b.sigma1 > 0.0) {
        return Err(Error::BoundUndefined("sigma1 must be positive".into()));
    }
    let m = b.m as f64;
    let n = b.n as f64;
    let r = b.r as f64;
    let omega = b.omega_size as f64;
    let r3n = (r.powi(3) * n).sqrt();

    let spectral_form = f64::max(
        c1 * r * b.sigma2 / b.sigma1,
        c2 * m * r3n / (b.sigma1 * b.sigma1),
    );
    let omega_form = f64::max(
        c1 * b.c_spectral * r * m.sqrt() / omega.sqrt(),
        c2 * m.powi(3) * r3n / (omega * omega),
    );
    Ok((spectral_form, omega_form))
}

/// Fixed-sampling-fraction rate `(delta / p^2) sqrt(r^3 / n)` with
/// `delta = m/n >= 1`; constant 1, rate-only.
pub fn corollary_rate(b: &BoundInputs, p: f64, delta: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("p must be in (0, 1], got {p}")));
    }
    if !(delta >= 1.0) {
        return Err(Error::invalid(format!("delta must be at least 1, got {delta}")));
    }
    let n = b.n as f64;
    let r = b.r as f64;
    Ok(delta / (p * p) * (r.powi(3) / n).sqrt())
}

/// Squared-error rates for the square case `m = n`, constant 1:
/// `(prior_rate, ours_rate) = (sqrt(r/(p n)), r^3/(p^4 n))`.
///
/// The first is the convex-relaxation rate; the second is the exact-rank
/// rate, which wins for fixed `p` as `n` grows and loses when `p` shrinks
/// like `1/n`.
pub fn comparison_rates(n: usize, r: usize, p: f64) -> Result<(f64, f64)> {
    if n == 0 || r == 0 {
        return Err(Error::invalid("n and r must be positive"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("p must be in (0, 1], got {p}")));
    }
    let nf = n as f64;
    let rf = r as f64;
    let prior = (rf / (p * nf)).sqrt();
    let ours = rf.powi(3) / (p.powi(4) * nf);
    Ok((prior, ours))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::links::LinkModel;
    use approx::assert_relative_eq;

    fn inputs(
        m: usize,
        n: usize,
        r: usize,
        sigma1: f64,
        sigma2: f64,
        omega: usize,
    ) -> BoundInputs {
        let link = LinkModel::probit(0.18).unwrap();
        BoundInputs::new(
            m,
            n,
            r,
            1.0,
            link.constants(1.0).unwrap(),
            sigma1,
            sigma2,
            omega,
            DEFAULT_C_SPECTRAL,
        )
        .unwrap()
    }

    #[test]
    fn corollary_rate_frozen_value_and_scalings() {
        let b = inputs(200, 200, 5, 1.0, 0.5, 16_000);
        // delta = 1, r = 5, n = 200, p = 0.4, frozen independent evaluation
        assert_relative_eq!(
            corollary_rate(&b, 0.4, 1.0).unwrap(),
            4.941058844013093,
            max_relative = 1e-12
        );
        // quadrupling n halves the rate
        let b4 = inputs(800, 800, 5, 1.0, 0.5, 16_000);
        assert_relative_eq!(
            corollary_rate(&b4, 0.4, 1.0).unwrap(),
            corollary_rate(&b, 0.4, 1.0).unwrap() / 2.0,
            max_relative = 1e-12
        );
        // halving p quadruples the rate
        assert_relative_eq!(
            corollary_rate(&b, 0.2, 1.0).unwrap(),
            4.0 * corollary_rate(&b, 0.4, 1.0).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn comparison_rates_frozen_values_and_limits() {
        let (prior, ours) = comparison_rates(200, 5, 0.4).unwrap();
        assert_relative_eq!(prior, 0.25, max_relative = 1e-12);
        assert_relative_eq!(ours, 24.4140625, max_relative = 1e-12);

        // fixed r, p: ours/prior -> 0 as n grows
        let mut prev_ratio = f64::INFINITY;
        for n in [100, 1_000, 10_000, 100_000] {
            let (prior, ours) = comparison_rates(n, 3, 0.3).unwrap();
            let ratio = ours / prior;
            assert!(ratio < prev_ratio);
            prev_ratio = ratio;
        }

        // p ~ 1/n: prior stays bounded, ours grows like n^3
        let (prior_small, ours_small) = comparison_rates(100, 3, 3.0 / 100.0).unwrap();
        let (prior_big, ours_big) = comparison_rates(10_000, 3, 3.0 / 10_000.0).unwrap();
        assert!(prior_big < prior_small * 2.0);
        assert!(ours_big > ours_small * 1e4);
    }

    #[test]
    fn theorem_bound_complete_mask_reduces_to_second_term() {
        // sigma2 = 0 and a complete regular mask: sigma1 = sqrt(mn), so the
        // spectral form collapses to C2 sqrt(r^3/n).
        let (m, n, r) = (200, 200, 5);
        let s1 = ((m * n) as f64).sqrt();
        let b = inputs(m, n, r, s1, 0.0, m * n);
        let (spectral, _) = theorem_bound(&b).unwrap();
        let (_, c2) = b.constants().unwrap();
        let expected = c2 * ((r * r * r) as f64 / n as f64).sqrt();
        assert_relative_eq!(spectral, expected, max_relative = 1e-12);
    }

    #[test]
    fn theorem_bound_r_scaling_of_second_term() {
        // when the second term dominates, doubling r scales it by 2^(3/2)
        let b1 = inputs(200, 200, 4, 200.0, 1e-6, 16_000);
        let b2 = inputs(200, 200, 8, 200.0, 1e-6, 16_000);
        let (s1, _) = theorem_bound(&b1).unwrap();
        let (s2, _) = theorem_bound(&b2).unwrap();
        assert_relative_eq!(s2 / s1, 2.0f64.powf(1.5), max_relative = 1e-12);
    }

    #[test]
    fn theorem_bound_monotone_in_sigma2_and_r() {
        let mut prev = 0.0;
        for sigma2 in [0.0, 5.0, 20.0, 60.0] {
            let b = inputs(300, 200, 5, 120.0, sigma2, 24_000);
            let (spectral, omega) = theorem_bound(&b).unwrap();
            assert!(spectral >= prev);
            assert!(omega >= 0.0);
            prev = spectral;
        }
        let mut prev = 0.0;
        for r in [1, 2, 4, 8] {
            let b = inputs(300, 200, r, 120.0, 10.0, 24_000);
            let (spectral, _) = theorem_bound(&b).unwrap();
            assert!(spectral >= prev);
            prev = spectral;
        }
    }

    #[test]
    fn theorem_matches_corollary_up_to_constant_on_complete_masks() {
        // On complete square masks the spectral form divided by the
        // corollary rate is the constant C2, independent of (n, r).
        let mut ratio = None;
        for n in [100, 200, 400] {
            for r in [2, 5] {
                let s1 = (n as f64 * n as f64).sqrt();
                let b = inputs(n, n, r, s1, 0.0, n * n);
                let (spectral, _) = theorem_bound(&b).unwrap();
                let rate = corollary_rate(&b, 1.0, 1.0).unwrap();
                let this = spectral / rate;
                if let Some(prev) = ratio {
                    assert_relative_eq!(this, prev, max_relative = 1e-12);
                }
                ratio = Some(this);
            }
        }
    }

    #[test]
    fn transposed_inputs_are_normalized() {
        let link = LinkModel::logit(1.0).unwrap();
        let b = BoundInputs::new(
            50,
            80,
            3,
            1.0,
            link.constants(1.0).unwrap(),
            30.0,
            4.0,
            2_000,
            3.0,
        )
        .unwrap();
        assert!(b.transposed);
        assert_eq!((b.m, b.n), (80, 50));
    }

    #[test]
    fn zero_gamma_is_bound_undefined() {
        let link = LinkModel::probit(0.01).unwrap();
        // alpha/sigma = 100: the curvature lower bound underflows to zero
        let constants = link.constants(1.0).unwrap();
        assert_eq!(constants.gamma_alpha, 0.0);
        let b = BoundInputs::new(10, 10, 2, 1.0, constants, 10.0, 1.0, 100, 3.0).unwrap();
        match theorem_bound(&b) {
            Err(Error::BoundUndefined(_)) => {}
            other => panic!("expected bound-undefined, got {other:?}"),
        }
    }
}
