//! Spectral diagnostics of a sampling mask: singular values, alignment of
//! the top singular pair with the all-ones directions, and advisory
//! verdicts on the two sampling assumptions.

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;

use bitmc::sampling::{gen_bernoulli, gen_block_model, gen_regular, spectral_report, Mask};

use crate::config::ConfigMap;

/// Advisory thresholds: above these the mask deviates enough from the
/// assumptions to warrant a warning (not an error).
const A1_WARN: f64 = 0.05;
const A2_WARN: f64 = 5.0;

#[derive(Args, Debug)]
pub struct SpectralArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Read the mask from a file instead of generating one
    #[arg(long)]
    mask_file: Option<PathBuf>,
    /// Generator: bernoulli, regular, or block
    #[arg(long)]
    gen: Option<String>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Row degree for the regular generator
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

pub fn run(mut args: SpectralArgs) -> Result<()> {
    if let Some(path) = &args.config {
        let cfg = ConfigMap::load(path)?;
        cfg.apply(&mut args.mask_file, "mask-file")?;
        cfg.apply(&mut args.gen, "gen")?;
        cfg.apply(&mut args.m, "m")?;
        cfg.apply(&mut args.n, "n")?;
        cfg.apply(&mut args.p, "p")?;
        cfg.apply(&mut args.q, "q")?;
        cfg.apply(&mut args.d, "d")?;
        cfg.apply(&mut args.seed, "seed")?;
    }
    let mask = load_mask(&args)?;
    let report = spectral_report(&mask)?;

    println!("m={} n={} entries={}", mask.m(), mask.n(), mask.len());
    println!("sigma1={:.8e}", report.sigma1);
    println!("sigma2={:.8e}", report.sigma2);
    println!("d_mean={:.6}", report.d_mean);
    println!("a1_residual={:.8e}", report.a1_residual);
    println!("a2_ratio={:.6}", report.a2_ratio);
    if report.a1_residual <= A1_WARN {
        println!(
            "(A1): PASS (a1_residual = {:.2e} <= {A1_WARN})",
            report.a1_residual
        );
    } else {
        println!(
            "(A1): WARN (a1_residual = {:.2e} > {A1_WARN}; top singular vectors stray from the all-ones directions)",
            report.a1_residual
        );
    }
    if report.a2_ratio <= A2_WARN {
        println!("(A2): PASS (a2_ratio = {:.3} <= {A2_WARN})", report.a2_ratio);
    } else {
        println!(
            "(A2): WARN (a2_ratio = {:.3} > {A2_WARN}; spectral gap is small for this mask)",
            report.a2_ratio
        );
    }
    Ok(())
}

fn load_mask(args: &SpectralArgs) -> Result<Mask> {
    if let Some(path) = &args.mask_file {
        return Ok(Mask::read_path(path)?);
    }
    let gen = args.gen.as_deref().unwrap_or("bernoulli");
    let m = args.m.unwrap_or(200);
    let n = args.n.unwrap_or(m);
    let seed = args.seed.unwrap_or(0);
    let mask = match gen {
        "bernoulli" => gen_bernoulli(m, n, args.p.unwrap_or(0.4), seed)?,
        "regular" => {
            let Some(d) = args.d else {
                bail!("--d is required for the regular generator");
            };
            gen_regular(m, n, d, seed)?
        }
        "block" => {
            let p = args.p.unwrap_or(0.35);
            let q = args.q.unwrap_or(p);
            gen_block_model(m, n, p, q, seed)?
        }
        other => bail!("unknown generator '{other}' (expected bernoulli, regular, or block)"),
    };
    Ok(mask)
}
