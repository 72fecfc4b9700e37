//! Observation masks and their bipartite spectral structure.
//!
//! The set of revealed indices is viewed as a bipartite graph between rows
//! and columns; its 0/1 bi-adjacency matrix drives the recovery guarantees
//! through two properties: the top singular vectors should align with the
//! all-ones directions, and the second singular value should be small
//! relative to `sqrt(mean degree)`. [`spectral_report`] quantifies both;
//! generators for Bernoulli, bi-regular, and two-block stochastic block
//! model masks are provided, along with the sampling operator that zeroes
//! entries outside the mask.

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{stream_rng, Stream};

/// Masks with the short side above this use power iteration instead of a
/// dense SVD for their spectral statistics.
const DENSE_SVD_LIMIT: usize = 512;

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 10_000;

/// A set of revealed `(row, col)` indices, kept sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    m: usize,
    n: usize,
    entries: Vec<(usize, usize)>,
    row_degrees: Vec<usize>,
    col_degrees: Vec<usize>,
}

/// Spectral statistics of a mask's bi-adjacency matrix.
///
/// `a1_residual` is the largest sine of the principal angles between the
/// computed top singular vectors and the normalized all-ones vectors;
/// `a2_ratio` is `sigma2 / sqrt(mean row degree)`.
#[derive(Debug, Clone, Copy)]
pub struct SpectralReport {
    pub sigma1: f64,
    pub sigma2: f64,
    pub d_mean: f64,
    pub a1_residual: f64,
    pub a2_ratio: f64,
}

impl Mask {
    /// Builds a mask from arbitrary index pairs; sorts them and rejects
    /// duplicates and out-of-range indices.
    pub fn from_entries(m: usize, n: usize, mut entries: Vec<(usize, usize)>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::invalid("mask dimensions must be positive"));
        }
        entries.sort_unstable();
        for w in entries.windows(2) {
            if w[0] == w[1] {
                return Err(Error::invalid(format!("duplicate mask entry {:?}", w[0])));
            }
        }
        let mut row_degrees = vec![0usize; m];
        let mut col_degrees = vec![0usize; n];
        for &(i, j) in &entries {
            if i >= m || j >= n {
                return Err(Error::invalid(format!(
                    "mask entry ({i}, {j}) out of range for {m} x {n}"
                )));
            }
            row_degrees[i] += 1;
            col_degrees[j] += 1;
        }
        Ok(Mask {
            m,
            n,
            entries,
            row_degrees,
            col_degrees,
        })
    }

    /// The complete mask over all `m * n` indices.
    pub fn complete(m: usize, n: usize) -> Self {
        let entries = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        Mask::from_entries(m, n, entries).expect("complete mask is valid")
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    pub fn row_degrees(&self) -> &[usize] {
        &self.row_degrees
    }

    pub fn col_degrees(&self) -> &[usize] {
        &self.col_degrees
    }

    /// Fraction of revealed entries.
    pub fn density(&self) -> f64 {
        self.entries.len() as f64 / (self.m * self.n) as f64
    }

    /// Orientation convention: analysis formulas assume the row side is the
    /// long one. Consumers transpose internally when this is false.
    pub fn is_tall(&self) -> bool {
        self.m >= self.n
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.entries.binary_search(&(i, j)).is_ok()
    }

    /// Dense 0/1 bi-adjacency matrix.
    pub fn to_dense(&self) -> Array2<f64> {
        let mut g = Array2::zeros((self.m, self.n));
        for &(i, j) in &self.entries {
            g[[i, j]] = 1.0;
        }
        g
    }

    /// Writes the plain-text format: a `m n` header line, then one `i j`
    /// pair per line in lexicographic order.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.m, self.n)?;
        for &(i, j) in &self.entries {
            writeln!(w, "{i} {j}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::invalid("empty mask file"))?;
        let header = header?;
        let (m, n) = parse_pair(&header, 1)?;
        let mut entries = Vec::new();
        for (idx, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(parse_pair(&line, idx + 1)?);
        }
        Mask::from_entries(m, n, entries)
    }

    pub fn write_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn read_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Mask::read_from(std::io::BufReader::new(f))
    }
}

fn parse_pair(line: &str, lineno: usize) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace();
    let mut parse = |tok: Option<&str>| -> Result<usize> {
        tok.ok_or_else(|| Error::Parse {
            line: lineno,
            message: "expected two integers".into(),
        })?
        .parse()
        .map_err(|e| Error::Parse {
            line: lineno,
            message: format!("{e}"),
        })
    };
    let a = parse(it.next())?;
    let b = parse(it.next())?;
    if it.next().is_some() {
        return Err(Error::Parse {
            line: lineno,
            message: "trailing tokens".into(),
        });
    }
    Ok((a, b))
}

/// Bernoulli mask: each index revealed independently with probability `p`.
pub fn gen_bernoulli(m: usize, n: usize, p: f64, seed: u64) -> Result<Mask> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("p must be in (0, 1], got {p}")));
    }
    if p * (m as f64) * (n as f64) < 1.0 {
        return Err(Error::invalid("expected mask size p*m*n is below one entry"));
    }
    let mut rng = stream_rng(seed, Stream::Mask);
    let mut entries = Vec::with_capacity((p * (m * n) as f64) as usize);
    for i in 0..m {
        for j in 0..n {
            if rng.random::<f64>() < p {
                entries.push((i, j));
            }
        }
    }
    Mask::from_entries(m, n, entries)
}

/// Two-block stochastic block model: rows and columns are each split into
/// equal halves; indices in the diagonal blocks are revealed with
/// probability `p`, off-diagonal with `q`.
pub fn gen_block_model(m: usize, n: usize, p: f64, q: f64, seed: u64) -> Result<Mask> {
    if m % 2 != 0 || n % 2 != 0 {
        return Err(Error::invalid(format!(
            "block model needs even dimensions, got {m} x {n}"
        )));
    }
    for (name, v) in [("p", p), ("q", q)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::invalid(format!("{name} must be in [0, 1], got {v}")));
        }
    }
    let mut rng = stream_rng(seed, Stream::Mask);
    let mut entries = Vec::new();
    for i in 0..m {
        for j in 0..n {
            let diag = (i < m / 2) == (j < n / 2);
            let prob = if diag { p } else { q };
            if rng.random::<f64>() < prob {
                entries.push((i, j));
            }
        }
    }
    Mask::from_entries(m, n, entries)
}

/// Bi-regular mask: every row has exactly `d` entries and every column
/// exactly `m d / n`, built by random stub matching with collision repair.
pub fn gen_regular(m: usize, n: usize, d: usize, seed: u64) -> Result<Mask> {
    if d == 0 || d > n {
        return Err(Error::invalid(format!("row degree {d} not in 1..={n}")));
    }
    if (m * d) % n != 0 {
        return Err(Error::invalid(format!(
            "m*d = {} not divisible by n = {n}; columns cannot have equal degree",
            m * d
        )));
    }
    if d == n {
        return Ok(Mask::complete(m, n));
    }
    let col_degree = m * d / n;
    let total = m * d;
    let mut rng = stream_rng(seed, Stream::Mask);

    let row_stubs: Vec<usize> = (0..m).flat_map(|i| std::iter::repeat_n(i, d)).collect();
    let mut col_stubs: Vec<usize> = (0..n)
        .flat_map(|j| std::iter::repeat_n(j, col_degree))
        .collect();

    for _restart in 0..200 {
        col_stubs.shuffle(&mut rng);
        let mut placed: HashSet<(usize, usize)> = HashSet::with_capacity(total);
        let mut conflicts: Vec<usize> = Vec::new();
        for (t, (&i, &j)) in row_stubs.iter().zip(col_stubs.iter()).enumerate() {
            if !placed.insert((i, j)) {
                conflicts.push(t);
            }
        }
        let mut attempts = 0usize;
        let budget = 50 * total.max(16);
        while let Some(&t) = conflicts.last() {
            if attempts >= budget {
                break;
            }
            attempts += 1;
            let t2 = rng.random_range(0..total);
            let (r1, c1) = (row_stubs[t], col_stubs[t]);
            let (r2, c2) = (row_stubs[t2], col_stubs[t2]);
            // Swap partners must be placed pairs; the swap must produce two
            // fresh pairs. (r1, c1) itself is not in `placed` -- it collided.
            if conflicts.contains(&t2)
                || placed.contains(&(r1, c2))
                || placed.contains(&(r2, c1))
                || (r1, c2) == (r2, c1)
            {
                continue;
            }
            placed.remove(&(r2, c2));
            placed.insert((r1, c2));
            placed.insert((r2, c1));
            col_stubs.swap(t, t2);
            conflicts.pop();
            let _ = c1;
        }
        if conflicts.is_empty() {
            let entries: Vec<(usize, usize)> = row_stubs
                .iter()
                .zip(col_stubs.iter())
                .map(|(&i, &j)| (i, j))
                .collect();
            return Mask::from_entries(m, n, entries);
        }
    }
    Err(Error::invalid(format!(
        "could not realize a {d}-regular {m} x {n} mask; degree constraints too tight"
    )))
}

/// Restriction of `z` to the mask: entries on the mask are kept, all others
/// are zero.
pub fn apply_sampling_op(mask: &Mask, z: &Array2<f64>) -> Result<Array2<f64>> {
    if z.nrows() != mask.m || z.ncols() != mask.n {
        return Err(Error::invalid(format!(
            "matrix is {} x {}, mask is {} x {}",
            z.nrows(),
            z.ncols(),
            mask.m,
            mask.n
        )));
    }
    let mut out = Array2::zeros((mask.m, mask.n));
    for &(i, j) in &mask.entries {
        out[[i, j]] = z[[i, j]];
    }
    Ok(out)
}

/// Computes `sigma1`, `sigma2`, and the alignment of the top singular pair
/// with the all-ones directions.
///
/// Dense SVD when the short side is at most 512; power iteration with one
/// deflation step otherwise.
pub fn spectral_report(mask: &Mask) -> Result<SpectralReport> {
    if mask.is_empty() {
        return Err(Error::invalid("spectral report of an empty mask"));
    }
    let (sigma1, u1, v1, sigma2) = if mask.m.min(mask.n) <= DENSE_SVD_LIMIT {
        let (u, s, v) = linalg::svd(&mask.to_dense());
        let u1: Vec<f64> = u.column(0).to_vec();
        let v1: Vec<f64> = v.column(0).to_vec();
        (s[0], u1, v1, if s.len() > 1 { s[1] } else { 0.0 })
    } else {
        top_two_singular_sparse(mask)
    };

    let m = mask.m as f64;
    let n = mask.n as f64;
    let dot_u: f64 = u1.iter().sum::<f64>() / m.sqrt();
    let dot_v: f64 = v1.iter().sum::<f64>() / n.sqrt();
    let sin_u = (1.0 - (dot_u * dot_u).min(1.0)).max(0.0).sqrt();
    let sin_v = (1.0 - (dot_v * dot_v).min(1.0)).max(0.0).sqrt();

    let d_mean = mask.len() as f64 / m;
    Ok(SpectralReport {
        sigma1,
        sigma2,
        d_mean,
        a1_residual: sin_u.max(sin_v),
        a2_ratio: sigma2 / d_mean.sqrt(),
    })
}

fn matvec(mask: &Mask, x: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for &(i, j) in mask.entries() {
        out[i] += x[j];
    }
}

fn matvec_t(mask: &Mask, y: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for &(i, j) in mask.entries() {
        out[j] += y[i];
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn normalize(x: &mut [f64]) -> f64 {
    let nrm = norm(x);
    if nrm > 0.0 {
        for v in x.iter_mut() {
            *v /= nrm;
        }
    }
    nrm
}

fn orthogonalize(x: &mut [f64], against: &[f64]) {
    let dot: f64 = x.iter().zip(against.iter()).map(|(a, b)| a * b).sum();
    for (xi, bi) in x.iter_mut().zip(against.iter()) {
        *xi -= dot * bi;
    }
}

/// Top two singular triplets of the implicit bi-adjacency matrix by power
/// iteration on `G^T G`, then one deflation step for `sigma2`.
fn top_two_singular_sparse(mask: &Mask) -> (f64, Vec<f64>, Vec<f64>, f64) {
    let (m, n) = (mask.m, mask.n);
    let mut rng = ChaCha20Rng::seed_from_u64(0x1b17_5bec);
    // Nonnegative start: the top singular vector of a 0/1 matrix can be
    // taken entrywise nonnegative.
    let mut v: Vec<f64> = (0..n).map(|_| 0.5 + rng.random::<f64>()).collect();
    normalize(&mut v);
    let mut gv = vec![0.0; m];
    let mut next = vec![0.0; n];
    for _ in 0..POWER_MAX_ITERS {
        matvec(mask, &v, &mut gv);
        matvec_t(mask, &gv, &mut next);
        normalize(&mut next);
        let delta: f64 = v
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        std::mem::swap(&mut v, &mut next);
        if delta <= POWER_TOL {
            break;
        }
    }
    matvec(mask, &v, &mut gv);
    let sigma1 = norm(&gv);
    if sigma1 == 0.0 {
        return (0.0, vec![0.0; m], v, 0.0);
    }
    let u1: Vec<f64> = gv.iter().map(|y| y / sigma1).collect();
    let v1 = v;

    // Power iteration on the deflated operator B = G - sigma1 u1 v1^T.
    let mut w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    orthogonalize(&mut w, &v1);
    if normalize(&mut w) == 0.0 {
        return (sigma1, u1, v1, 0.0);
    }
    let mut bw = vec![0.0; m];
    let mut btbw = vec![0.0; n];
    let mut sigma2 = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        matvec(mask, &w, &mut bw);
        let vw: f64 = v1.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
        for i in 0..m {
            bw[i] -= sigma1 * u1[i] * vw;
        }
        matvec_t(mask, &bw, &mut btbw);
        let ubw: f64 = u1.iter().zip(bw.iter()).map(|(a, b)| a * b).sum();
        for j in 0..n {
            btbw[j] -= sigma1 * v1[j] * ubw;
        }
        orthogonalize(&mut btbw, &v1);
        let lambda = normalize(&mut btbw);
        if lambda <= 1e-20 {
            return (sigma1, u1, v1, 0.0);
        }
        let delta: f64 = w
            .iter()
            .zip(btbw.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        std::mem::swap(&mut w, &mut btbw);
        sigma2 = lambda.sqrt();
        if delta <= POWER_TOL {
            break;
        }
    }
    (sigma1, u1, v1, sigma2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::Array2;
    use proptest::prelude::*;

    #[test]
    fn bernoulli_p_one_is_complete() {
        let mask = gen_bernoulli(2, 2, 1.0, 99).unwrap();
        assert_eq!(mask.len(), 4);
        assert_eq!(mask.entries(), Mask::complete(2, 2).entries());
    }

    #[test]
    fn bernoulli_is_deterministic_per_seed() {
        let a = gen_bernoulli(100, 100, 0.5, 7).unwrap();
        let b = gen_bernoulli(100, 100, 0.5, 7).unwrap();
        let c = gen_bernoulli(100, 100, 0.5, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn bernoulli_density_concentrates() {
        for seed in 0..100 {
            let mask = gen_bernoulli(200, 200, 0.4, seed).unwrap();
            let density = mask.density();
            assert!(
                (0.38..=0.42).contains(&density),
                "seed {seed}: density {density}"
            );
        }
    }

    #[test]
    fn bernoulli_rejects_bad_p() {
        assert!(gen_bernoulli(10, 10, 0.0, 0).is_err());
        assert!(gen_bernoulli(10, 10, 1.1, 0).is_err());
        assert!(gen_bernoulli(10, 10, -0.5, 0).is_err());
        // expected entries below one
        assert!(gen_bernoulli(3, 3, 0.05, 0).is_err());
    }

    #[test]
    fn block_model_densities() {
        let mask = gen_block_model(200, 200, 0.6, 0.1, 5).unwrap();
        let mut diag = 0usize;
        let mut off = 0usize;
        for &(i, j) in mask.entries() {
            if (i < 100) == (j < 100) {
                diag += 1;
            } else {
                off += 1;
            }
        }
        let diag_density = diag as f64 / 20_000.0;
        let off_density = off as f64 / 20_000.0;
        assert!((0.57..=0.63).contains(&diag_density), "diag {diag_density}");
        assert!((0.08..=0.12).contains(&off_density), "off {off_density}");
    }

    #[test]
    fn block_model_equal_probabilities_match_bernoulli_statistics() {
        let sbm = gen_block_model(200, 200, 0.35, 0.35, 11).unwrap();
        assert!((0.33..=0.37).contains(&sbm.density()));
    }

    #[test]
    fn block_model_rejects_odd_dims() {
        assert!(gen_block_model(5, 4, 0.5, 0.5, 0).is_err());
        assert!(gen_block_model(4, 5, 0.5, 0.5, 0).is_err());
    }

    #[test]
    fn balanced_block_model_has_larger_spectral_gap() {
        // With p + q fixed, the uniform case maximizes the gap sigma1/sigma2.
        let uniform = spectral_report(&gen_block_model(200, 200, 0.35, 0.35, 3).unwrap()).unwrap();
        let skewed = spectral_report(&gen_block_model(200, 200, 0.6, 0.1, 3).unwrap()).unwrap();
        assert!(
            uniform.sigma1 / uniform.sigma2 > skewed.sigma1 / skewed.sigma2,
            "uniform gap {} vs skewed gap {}",
            uniform.sigma1 / uniform.sigma2,
            skewed.sigma1 / skewed.sigma2
        );
    }

    #[test]
    fn regular_forced_complete_case() {
        let mask = gen_regular(4, 2, 2, 0).unwrap();
        assert_eq!(mask.len(), 8);
        assert!(mask.row_degrees().iter().all(|&d| d == 2));
        assert!(mask.col_degrees().iter().all(|&d| d == 4));
        let report = spectral_report(&mask).unwrap();
        assert_relative_eq!(report.sigma1, 8.0f64.sqrt(), max_relative = 1e-12);
        assert!(report.sigma2.abs() < 1e-10);
        assert!(report.a1_residual <= 1e-8);
    }

    #[test]
    fn regular_degrees_exact_and_a1_holds() {
        for (m, n, d, seed) in [(200, 100, 10, 0), (40, 20, 4, 1), (12, 6, 3, 2), (30, 30, 7, 3)] {
            let mask = gen_regular(m, n, d, seed).unwrap();
            assert!(mask.row_degrees().iter().all(|&deg| deg == d));
            let c = m * d / n;
            assert!(mask.col_degrees().iter().all(|&deg| deg == c));
            let report = spectral_report(&mask).unwrap();
            assert!(
                report.a1_residual <= 1e-6,
                "({m},{n},{d}): a1 residual {}",
                report.a1_residual
            );
            let predicted = d as f64 * ((m as f64) / (n as f64)).sqrt();
            assert!(
                (report.sigma1 - predicted).abs() / report.sigma1 <= 1e-8,
                "sigma1 {} vs predicted {predicted}",
                report.sigma1
            );
        }
    }

    #[test]
    fn regular_rejects_infeasible() {
        assert!(gen_regular(5, 3, 2, 0).is_err()); // 10 % 3 != 0
        assert!(gen_regular(4, 2, 3, 0).is_err()); // d > n
        assert!(gen_regular(4, 2, 0, 0).is_err());
    }

    #[test]
    fn bernoulli_spectral_gap_is_modest() {
        let mut worst: f64 = 0.0;
        for seed in 0..20 {
            let mask = gen_bernoulli(200, 200, 0.4, seed).unwrap();
            let report = spectral_report(&mask).unwrap();
            worst = worst.max(report.a2_ratio);
        }
        assert!(worst <= 3.0, "worst a2 ratio {worst}");
    }

    #[test]
    fn sampling_op_matches_bruteforce() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mask = gen_bernoulli(17, 9, 0.3, 21).unwrap();
        let z = Array2::from_shape_fn((17, 9), |_| rng.random::<f64>() - 0.5);
        let out = apply_sampling_op(&mask, &z).unwrap();
        for i in 0..17 {
            for j in 0..9 {
                let expected = if mask.contains(i, j) { z[[i, j]] } else { 0.0 };
                assert_eq!(out[[i, j]], expected);
            }
        }
    }

    #[test]
    fn sampling_op_identity_on_complete_mask() {
        let mask = Mask::complete(4, 3);
        let z = Array2::from_shape_fn((4, 3), |(i, j)| (i * 3 + j) as f64);
        assert_eq!(apply_sampling_op(&mask, &z).unwrap(), z);
        let wrong = Array2::<f64>::zeros((3, 4));
        assert!(apply_sampling_op(&mask, &wrong).is_err());
    }

    #[test]
    fn empty_mask_spectral_report_errors() {
        let mask = Mask::from_entries(3, 3, vec![]).unwrap();
        assert!(spectral_report(&mask).is_err());
    }

    #[test]
    fn power_iteration_agrees_with_dense_svd() {
        let mask = gen_bernoulli(90, 60, 0.35, 17).unwrap();
        let dense = spectral_report(&mask).unwrap();
        let (s1, _, _, s2) = top_two_singular_sparse(&mask);
        assert_relative_eq!(s1, dense.sigma1, max_relative = 1e-8);
        assert_relative_eq!(s2, dense.sigma2, max_relative = 1e-6);
    }

    /// Sampled-version closeness: for low-rank Z and a bi-regular mask,
    /// || (sqrt(mn)/s1) R(Z) - Z ||_2 <= sqrt(r m n) s2 / s1 * ||Z||_inf.
    #[test]
    fn sampled_version_closeness_inequality() {
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        for trial in 0..30 {
            let r = [1usize, 2, 5][trial % 3];
            let (m, n, d) = [(40, 20, 6), (30, 30, 8), (24, 12, 5)][trial % 3];
            let mask = gen_regular(m, n, d, trial as u64).unwrap();
            let report = spectral_report(&mask).unwrap();
            let a = Array2::from_shape_fn((m, r), |_| rng.random::<f64>() - 0.5);
            let b = Array2::from_shape_fn((n, r), |_| rng.random::<f64>() - 0.5);
            let mut z = a.dot(&b.t());
            let max = z.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            z.mapv_inplace(|v| v / max); // ||Z||_inf = 1
            let scale = ((m * n) as f64).sqrt() / report.sigma1;
            let diff = apply_sampling_op(&mask, &z).unwrap() * scale - &z;
            let lhs = linalg::spectral_norm(&diff);
            let rhs = ((r * m * n) as f64).sqrt() * report.sigma2 / report.sigma1;
            assert!(lhs <= rhs + 1e-8, "trial {trial}: lhs {lhs} > rhs {rhs}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        /// Text round-trip reproduces the mask exactly.
        #[test]
        fn mask_roundtrip(m in 1usize..12, n in 1usize..12, seed in 0u64..500, p in 0.2f64..1.0) {
            prop_assume!(p * (m * n) as f64 >= 1.0);
            let mask = gen_bernoulli(m, n, p, seed).unwrap();
            let mut buf = Vec::new();
            mask.write_to(&mut buf).unwrap();
            let back = Mask::read_from(std::io::Cursor::new(&buf)).unwrap();
            prop_assert_eq!(mask, back);
        }

        /// Degree sums always equal the entry count.
        #[test]
        fn degree_sums(m in 1usize..20, n in 1usize..20, seed in 0u64..100) {
            let mask = gen_bernoulli(m, n, 0.5, seed);
            prop_assume!(mask.is_ok());
            let mask = mask.unwrap();
            prop_assert_eq!(mask.row_degrees().iter().sum::<usize>(), mask.len());
            prop_assert_eq!(mask.col_degrees().iter().sum::<usize>(), mask.len());
        }
    }
}
