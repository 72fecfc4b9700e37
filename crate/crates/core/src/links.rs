//! Link functions mapping matrix entries to sign probabilities.
//!
//! A link is a smooth CDF-like map `f: R -> (0,1)`; an entry `x` of the
//! underlying matrix is observed as `+1` with probability `f(x)`. Two links
//! are supported: the logistic CDF (logit model) and the Gaussian CDF
//! (probit model), both with a scale parameter `sigma`.
//!
//! Besides `f` and its first two derivatives, this module computes the two
//! constants that drive the error bounds: `gamma_alpha`, a lower bound on
//! the curvature of the per-entry negative log-likelihood over
//! `|x| <= alpha`, and `l_alpha`, an upper bound on the magnitude of its
//! derivative over the same interval.

use crate::error::{Error, Result};

/// Number of uniform grid points on `[-alpha, alpha]` used to refine the
/// closed-form constants numerically.
const CONSTANT_GRID_POINTS: usize = 2001;

/// Probabilities are kept inside `[F_CLAMP_MIN, F_CLAMP_MAX]` so logarithms
/// of `f` and `1 - f` stay finite for every finite input.
const F_CLAMP_MIN: f64 = 1e-300;

/// Hazard ratio `phi(u)/Phi(u)` switches to its asymptotic form below this
/// point, where `Phi(u)` is no longer representable.
const HAZARD_ASYMPTOTIC_CUTOFF: f64 = -30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    Logit,
    Probit,
}

impl std::fmt::Display for LinkKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LinkKind::Logit => write!(f, "logit"),
            LinkKind::Probit => write!(f, "probit"),
        }
    }
}

impl std::str::FromStr for LinkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logit" | "logistic" => Ok(LinkKind::Logit),
            "probit" | "gaussian" => Ok(LinkKind::Probit),
            other => Err(Error::invalid(format!("unknown link kind '{other}'"))),
        }
    }
}

/// A link function `f` with scale `sigma > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkModel {
    kind: LinkKind,
    sigma: f64,
}

/// `f(x)` and its first two derivatives at a point.
#[derive(Debug, Clone, Copy)]
pub struct LinkEval {
    pub f: f64,
    pub fdot: f64,
    pub fddot: f64,
}

/// Curvature and gradient-magnitude constants of a link over `|x| <= alpha`.
///
/// `gamma_alpha` and `l_alpha` are the closed forms: exact for the logit
/// model, the published lower/upper bounds for the probit model. The
/// `*_grid` fields are numerically tightened values from grid optimization
/// over `[-alpha, alpha]`; the closed forms are the ones used in bound
/// calculations.
#[derive(Debug, Clone, Copy)]
pub struct LinkConstants {
    pub alpha: f64,
    pub gamma_alpha: f64,
    pub l_alpha: f64,
    pub gamma_alpha_grid: f64,
    pub l_alpha_grid: f64,
}

impl LinkModel {
    pub fn new(kind: LinkKind, sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::invalid(format!(
                "link scale sigma must be finite and positive, got {sigma}"
            )));
        }
        Ok(LinkModel { kind, sigma })
    }

    pub fn logit(sigma: f64) -> Result<Self> {
        Self::new(LinkKind::Logit, sigma)
    }

    pub fn probit(sigma: f64) -> Result<Self> {
        Self::new(LinkKind::Probit, sigma)
    }

    pub fn kind(&self) -> LinkKind {
        self.kind
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Evaluates `f(x)`, `f'(x)`, `f''(x)` analytically.
    ///
    /// `f` is clamped away from exact 0 and 1 only at the representable
    /// precision boundary.
    pub fn eval(&self, x: f64) -> Result<LinkEval> {
        if !x.is_finite() {
            return Err(Error::invalid(format!("link argument must be finite, got {x}")));
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: f64) -> LinkEval {
        let s = self.sigma;
        let u = x / s;
        match self.kind {
            LinkKind::Logit => {
                let f = logistic(u);
                let fdot = f * (1.0 - f) / s;
                let fddot = fdot * (1.0 - 2.0 * f) / s;
                LinkEval {
                    f: clamp_prob(f),
                    fdot,
                    fddot,
                }
            }
            LinkKind::Probit => {
                let f = std_normal_cdf(u);
                let pdf = std_normal_pdf(u);
                let fdot = pdf / s;
                let fddot = -u * pdf / (s * s);
                LinkEval {
                    f: clamp_prob(f),
                    fdot,
                    fddot,
                }
            }
        }
    }

    /// `+1` probability `f(x)`, clamped to the open unit interval.
    pub fn prob_plus(&self, x: f64) -> f64 {
        self.eval_unchecked(x).f
    }

    /// `log f(x)` without forming `f` first, accurate deep into the lower
    /// tail and free of `1 - f` cancellation in the upper tail.
    pub fn log_f(&self, x: f64) -> f64 {
        let u = x / self.sigma;
        match self.kind {
            LinkKind::Logit => -softplus(-u),
            LinkKind::Probit => {
                let c = std_normal_cdf(u);
                c.max(F_CLAMP_MIN).ln()
            }
        }
    }

    /// `log(1 - f(x))`; equals `log f(-x)` by the symmetry of both links.
    pub fn log_one_minus_f(&self, x: f64) -> f64 {
        self.log_f(-x)
    }

    /// `f'(x)/f(x)`: magnitude of the per-entry NLL gradient when the
    /// observation is `+1`.
    pub fn score_plus(&self, x: f64) -> f64 {
        let s = self.sigma;
        match self.kind {
            // fdot/f = (1 - f)/sigma
            LinkKind::Logit => logistic(-x / s) / s,
            LinkKind::Probit => normal_hazard(x / s) / s,
        }
    }

    /// `f'(x)/(1 - f(x))`: gradient magnitude for a `-1` observation.
    pub fn score_minus(&self, x: f64) -> f64 {
        self.score_plus(-x)
    }

    /// `f'(x)^2/f(x)^2 - f''(x)/f(x)`: per-entry NLL curvature for a `+1`
    /// observation.
    pub fn curvature_plus(&self, x: f64) -> f64 {
        let s = self.sigma;
        let u = x / s;
        match self.kind {
            // Simplifies to f(1-f)/sigma^2.
            LinkKind::Logit => {
                let f = logistic(u);
                f * (1.0 - f) / (s * s)
            }
            // h(u)(h(u) + u)/sigma^2 with h the hazard phi/Phi.
            LinkKind::Probit => {
                let h = normal_hazard(u);
                h * (h + u) / (s * s)
            }
        }
    }

    /// `f'(x)^2/(1-f(x))^2 + f''(x)/(1-f(x))`: curvature for a `-1`
    /// observation.
    pub fn curvature_minus(&self, x: f64) -> f64 {
        self.curvature_plus(-x)
    }

    /// `|f'(x)| / (f(x)(1 - f(x)))`, the expression whose supremum defines
    /// `l_alpha`.
    pub fn score_envelope(&self, x: f64) -> f64 {
        self.score_plus(x) + self.score_minus(x)
    }

    /// Computes `gamma_alpha` and `l_alpha` for the box `|x| <= alpha`.
    ///
    /// Returns the closed forms together with grid-refined values; see
    /// [`LinkConstants`].
    pub fn constants(&self, alpha: f64) -> Result<LinkConstants> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::invalid(format!(
                "alpha must be finite and positive, got {alpha}"
            )));
        }
        let s = self.sigma;
        let a = alpha / s;
        let (gamma_alpha, l_alpha) = match self.kind {
            LinkKind::Logit => {
                // exp(a) / (sigma^2 (1 + exp(a))^2) = (2 sigma cosh(a/2))^-2
                let g = 1.0 / (2.0 * s * (a / 2.0).cosh());
                (g * g, 1.0 / s)
            }
            LinkKind::Probit => {
                let g = alpha / ((2.0 * std::f64::consts::PI).sqrt() * s.powi(3))
                    * (-a * a / 2.0).exp();
                (g, 4.0 / s * (a + 1.0))
            }
        };

        let mut gamma_grid = f64::INFINITY;
        let mut l_grid = 0.0_f64;
        for i in 0..CONSTANT_GRID_POINTS {
            let x = -alpha + 2.0 * alpha * (i as f64) / ((CONSTANT_GRID_POINTS - 1) as f64);
            gamma_grid = gamma_grid
                .min(self.curvature_plus(x))
                .min(self.curvature_minus(x));
            l_grid = l_grid.max(self.score_envelope(x));
        }

        Ok(LinkConstants {
            alpha,
            gamma_alpha,
            l_alpha,
            gamma_alpha_grid: gamma_grid,
            l_alpha_grid: l_grid,
        })
    }
}

fn clamp_prob(f: f64) -> f64 {
    f.clamp(F_CLAMP_MIN, 1.0 - f64::EPSILON / 2.0)
}

/// Standard logistic CDF, stable on both tails.
fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn std_normal_pdf(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Gaussian CDF via the complementary error function, which keeps full
/// relative accuracy in the lower tail down to the underflow threshold.
fn std_normal_cdf(u: f64) -> f64 {
    0.5 * libm::erfc(-u / std::f64::consts::SQRT_2)
}

/// Hazard ratio `phi(u)/Phi(u)`.
///
/// Below the representability cutoff the direct quotient is 0/0; the
/// continued-fraction expansion of the Mills ratio gives
/// `h(u) ~ -u / (1 - 1/u^2 + 3/u^4)` there.
fn normal_hazard(u: f64) -> f64 {
    if u <= HAZARD_ASYMPTOTIC_CUTOFF {
        let u2 = u * u;
        -u / (1.0 - 1.0 / u2 + 3.0 / (u2 * u2))
    } else {
        std_normal_pdf(u) / std_normal_cdf(u)
    }
}
