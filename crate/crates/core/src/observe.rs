//! Ground-truth matrices and binary observations drawn from them.
//!
//! Observations follow the sign-probability model: for each revealed index,
//! `+1` is drawn with probability `f(M*_ij)`. The equivalent additive-noise
//! view draws `Y_ij = sign(M*_ij + Z_ij)` with `Z` i.i.d. from the link's
//! noise law (logistic or Gaussian with scale `sigma`); both samplers are
//! provided and are distributionally identical.

use std::io::{BufRead, Write};
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::links::{LinkKind, LinkModel};
use crate::rng::{stream_rng, Stream};
use crate::sampling::Mask;

/// A bounded, exactly-low-rank matrix with its certified parameters.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub m_star: Array2<f64>,
    pub rank_r: usize,
    pub alpha: f64,
}

/// Signs observed on a mask; `values[t]` belongs to `mask.entries()[t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryObservations {
    mask: Mask,
    values: Vec<i8>,
}

impl BinaryObservations {
    pub fn new(mask: Mask, values: Vec<i8>) -> Result<Self> {
        if values.len() != mask.len() {
            return Err(Error::invalid(format!(
                "{} values for {} mask entries",
                values.len(),
                mask.len()
            )));
        }
        if let Some(v) = values.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::invalid(format!("observation value {v} is not +1/-1")));
        }
        Ok(BinaryObservations { mask, values })
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Iterates `(row, col, sign)` triples in mask order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, i8)> + '_ {
        self.mask
            .entries()
            .iter()
            .zip(self.values.iter())
            .map(|(&(i, j), &y)| (i, j, y))
    }

    /// Observations restricted to a subset of entry positions (indices into
    /// `mask.entries()`); indices are sorted internally so entry order is
    /// preserved.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut order: Vec<usize> = indices.to_vec();
        order.sort_unstable();
        order.dedup();
        if order.len() != indices.len() {
            return Err(Error::invalid("duplicate indices in selection"));
        }
        let mut entries = Vec::with_capacity(order.len());
        let mut values = Vec::with_capacity(order.len());
        for &t in &order {
            if t >= self.len() {
                return Err(Error::invalid(format!("selection index {t} out of range")));
            }
            entries.push(self.mask.entries()[t]);
            values.push(self.values[t]);
        }
        let mask = Mask::from_entries(self.mask.m(), self.mask.n(), entries)?;
        BinaryObservations::new(mask, values)
    }

    /// Writes the observation format: the mask header line, then one
    /// `i j value` triple per line with value in {1, -1}.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.mask.m(), self.mask.n())?;
        for (i, j, y) in self.iter() {
            writeln!(w, "{i} {j} {y}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::invalid("empty observation file"))?;
        let header = header?;
        let mut head = header.split_whitespace();
        let parse_dim = |tok: Option<&str>| -> Result<usize> {
            tok.ok_or_else(|| Error::Parse {
                line: 1,
                message: "expected 'm n' header".into(),
            })?
            .parse()
            .map_err(|e| Error::Parse {
                line: 1,
                message: format!("{e}"),
            })
        };
        let m = parse_dim(head.next())?;
        let n = parse_dim(head.next())?;
        let mut entries = Vec::new();
        let mut values = Vec::new();
        for (idx, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(Error::Parse {
                    line: lineno,
                    message: "expected 'i j value'".into(),
                });
            }
            let i: usize = toks[0].parse().map_err(|e| Error::Parse {
                line: lineno,
                message: format!("{e}"),
            })?;
            let j: usize = toks[1].parse().map_err(|e| Error::Parse {
                line: lineno,
                message: format!("{e}"),
            })?;
            let y: i8 = toks[2].parse().map_err(|e| Error::Parse {
                line: lineno,
                message: format!("{e}"),
            })?;
            entries.push((i, j));
            values.push(y);
        }
        // Entries are written in sorted order and Mask::from_entries sorts
        // again, so positions stay aligned with values.
        let mask = Mask::from_entries(m, n, entries)?;
        BinaryObservations::new(mask, values)
    }

    pub fn write_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn read_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

/// Random rank-`r` ground truth: factor entries i.i.d. uniform on
/// `[-0.5, 0.5]`, the product rescaled by one global scalar so that
/// `max |M*_ij| = alpha` exactly.
pub fn gen_ground_truth(
    m: usize,
    n: usize,
    r: usize,
    alpha: f64,
    seed: u64,
) -> Result<GroundTruth> {
    if r == 0 || r > m.min(n) {
        return Err(Error::invalid(format!("rank {r} not in 1..=min({m}, {n})")));
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    let mut rng = stream_rng(seed, Stream::GroundTruth);
    let m1 = Array2::from_shape_fn((m, r), |_| rng.random::<f64>() - 0.5);
    let m2 = Array2::from_shape_fn((n, r), |_| rng.random::<f64>() - 0.5);
    let mut m_star = m1.dot(&m2.t());
    let max = m_star.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if max == 0.0 {
        return Err(Error::invalid("degenerate zero ground truth"));
    }
    m_star.mapv_inplace(|v| v * alpha / max);
    Ok(GroundTruth {
        m_star,
        rank_r: r,
        alpha,
    })
}

/// Draws `Y_ij = +1` with probability `f(M*_ij)` independently over the
/// mask.
pub fn sample_observations(
    truth: &GroundTruth,
    mask: &Mask,
    link: &LinkModel,
    seed: u64,
) -> Result<BinaryObservations> {
    check_dims(truth, mask)?;
    let mut rng = stream_rng(seed, Stream::Observations);
    let values = mask
        .entries()
        .iter()
        .map(|&(i, j)| {
            let p = link.prob_plus(truth.m_star[[i, j]]);
            if rng.random::<f64>() < p {
                1
            } else {
                -1
            }
        })
        .collect();
    BinaryObservations::new(mask.clone(), values)
}

/// Draws `Y_ij = sign(M*_ij + Z_ij)` with `Z` i.i.d. from the link's noise
/// law; distributionally equivalent to [`sample_observations`].
pub fn sample_via_noise(
    truth: &GroundTruth,
    mask: &Mask,
    link: &LinkModel,
    seed: u64,
) -> Result<BinaryObservations> {
    check_dims(truth, mask)?;
    let mut rng = stream_rng(seed, Stream::Observations);
    let sigma = link.sigma();
    let values = mask
        .entries()
        .iter()
        .map(|&(i, j)| {
            // Ties M* + Z = 0 are a measure-zero event; resample them.
            loop {
                let noise = match link.kind() {
                    LinkKind::Probit => sigma * rng.sample::<f64, _>(StandardNormal),
                    LinkKind::Logit => {
                        let u: f64 = rng.sample(rand::distr::Open01);
                        sigma * (u / (1.0 - u)).ln()
                    }
                };
                let s = truth.m_star[[i, j]] + noise;
                if s > 0.0 {
                    return 1;
                } else if s < 0.0 {
                    return -1;
                }
            }
        })
        .collect();
    BinaryObservations::new(mask.clone(), values)
}

fn check_dims(truth: &GroundTruth, mask: &Mask) -> Result<()> {
    if truth.m_star.nrows() != mask.m() || truth.m_star.ncols() != mask.n() {
        return Err(Error::invalid(format!(
            "ground truth is {} x {}, mask is {} x {}",
            truth.m_star.nrows(),
            truth.m_star.ncols(),
            mask.m(),
            mask.n()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::sampling::gen_bernoulli;
    use approx::assert_relative_eq;

    #[test]
    fn ground_truth_respects_alpha_and_rank() {
        let truth = gen_ground_truth(2, 2, 1, 0.7, 3).unwrap();
        let max = truth.m_star.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert_relative_eq!(max, 0.7, max_relative = 1e-14);

        let truth = gen_ground_truth(200, 200, 5, 1.0, 4).unwrap();
        let s = linalg::singular_values(&truth.m_star);
        assert!(s[4] > 1e-8 * s[0], "rank collapsed below 5");
        for v in &s[5..] {
            assert!(*v <= 1e-8 * s[0], "singular value {v} beyond rank 5");
        }
    }

    #[test]
    fn ground_truth_deterministic_and_validates() {
        let a = gen_ground_truth(10, 8, 2, 1.0, 11).unwrap();
        let b = gen_ground_truth(10, 8, 2, 1.0, 11).unwrap();
        assert_eq!(a.m_star, b.m_star);
        assert!(gen_ground_truth(4, 4, 5, 1.0, 0).is_err());
        assert!(gen_ground_truth(4, 4, 1, 0.0, 0).is_err());
    }

    #[test]
    fn zero_truth_gives_balanced_signs() {
        let truth = GroundTruth {
            m_star: Array2::zeros((1000, 1000)),
            rank_r: 1,
            alpha: 1.0,
        };
        let mask = Mask::complete(1000, 1000);
        let link = LinkModel::logit(1.0).unwrap();
        let obs = sample_observations(&truth, &mask, &link, 0).unwrap();
        let plus = obs.values().iter().filter(|&&y| y == 1).count() as f64;
        let frac = plus / obs.len() as f64;
        assert!((0.49..=0.51).contains(&frac), "plus fraction {frac}");
    }

    #[test]
    fn vanishing_noise_recovers_signs() {
        let truth = GroundTruth {
            m_star: Array2::from_elem((100, 100), 0.3),
            rank_r: 1,
            alpha: 1.0,
        };
        let mask = Mask::complete(100, 100);
        let link = LinkModel::logit(1e-6).unwrap();
        let obs = sample_observations(&truth, &mask, &link, 5).unwrap();
        let plus = obs.values().iter().filter(|&&y| y == 1).count();
        assert!(plus as f64 / obs.len() as f64 >= 0.9999);
        let noisy = sample_via_noise(&truth, &mask, &link, 6).unwrap();
        assert!(noisy.values().iter().all(|&y| y == 1));
    }

    #[test]
    fn probit_frequency_matches_gaussian_cdf() {
        // P(+1) at M* = 0.18 with sigma = 0.18 is Phi(1), frozen from an
        // independent evaluation.
        let m = 320;
        let n = 320; // ~1e5 draws
        let truth = GroundTruth {
            m_star: Array2::from_elem((m, n), 0.18),
            rank_r: 1,
            alpha: 1.0,
        };
        let mask = Mask::complete(m, n);
        let link = LinkModel::probit(0.18).unwrap();
        for seed in [1, 2] {
            let obs = sample_observations(&truth, &mask, &link, seed).unwrap();
            let plus = obs.values().iter().filter(|&&y| y == 1).count() as f64;
            let frac = plus / obs.len() as f64;
            assert!(
                (frac - 0.8413447460685429).abs() <= 0.01,
                "seed {seed}: frequency {frac}"
            );
        }
    }

    #[test]
    fn logistic_noise_law_matches_cdf() {
        // P(+1) = P(Z > -0.5) = P(Z <= 0.5) = 1/(1 + e^-0.5) by symmetry.
        let truth = GroundTruth {
            m_star: Array2::from_elem((300, 300), 0.5),
            rank_r: 1,
            alpha: 1.0,
        };
        let mask = Mask::complete(300, 300);
        let link = LinkModel::logit(1.0).unwrap();
        let obs = sample_via_noise(&truth, &mask, &link, 9).unwrap();
        let plus = obs.values().iter().filter(|&&y| y == 1).count() as f64;
        let frac = plus / obs.len() as f64;
        assert!(
            (frac - 0.6224593312018546).abs() <= 0.005,
            "frequency {frac}"
        );
    }

    /// The two sampling paths agree distributionally: +1 frequencies within
    /// three binomial standard deviations of each other.
    #[test]
    fn noise_and_probability_paths_are_equivalent() {
        for (link, label) in [
            (LinkModel::probit(0.18).unwrap(), "probit"),
            (LinkModel::logit(0.3).unwrap(), "logit"),
        ] {
            let m = 320;
            let n = 320;
            let truth = GroundTruth {
                m_star: Array2::from_elem((m, n), 0.1),
                rank_r: 1,
                alpha: 1.0,
            };
            let mask = Mask::complete(m, n);
            let direct = sample_observations(&truth, &mask, &link, 41).unwrap();
            let noise = sample_via_noise(&truth, &mask, &link, 42).unwrap();
            let count = |o: &BinaryObservations| {
                o.values().iter().filter(|&&y| y == 1).count() as f64 / o.len() as f64
            };
            let (fa, fb) = (count(&direct), count(&noise));
            let p = link.prob_plus(0.1);
            let tol = 3.0 * (2.0 * p * (1.0 - p) / (m * n) as f64).sqrt();
            assert!(
                (fa - fb).abs() <= tol.max(0.01),
                "{label}: {fa} vs {fb} (tol {tol})"
            );
        }
    }

    #[test]
    fn observation_roundtrip_and_select() {
        let truth = gen_ground_truth(9, 7, 2, 1.0, 1).unwrap();
        let mask = gen_bernoulli(9, 7, 0.6, 2).unwrap();
        let link = LinkModel::probit(0.5).unwrap();
        let obs = sample_observations(&truth, &mask, &link, 3).unwrap();

        let mut buf = Vec::new();
        obs.write_to(&mut buf).unwrap();
        let back = BinaryObservations::read_from(std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(obs, back);

        let subset = obs.select(&[0, 2, 4]).unwrap();
        assert_eq!(subset.len(), 3);
        assert_eq!(subset.values()[0], obs.values()[0]);
        assert!(obs.select(&[obs.len()]).is_err());
        assert!(obs.select(&[0, 0]).is_err());
    }

    #[test]
    fn observations_validate_values() {
        let mask = Mask::complete(2, 2);
        assert!(BinaryObservations::new(mask.clone(), vec![1, -1, 1]).is_err());
        assert!(BinaryObservations::new(mask, vec![1, -1, 0, 1]).is_err());
    }
}
