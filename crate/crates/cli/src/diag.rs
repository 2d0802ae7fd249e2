//! Diagnostic subcommands: finite-difference gradient checks, the
//! structure-versus-noise capacity probe, and the time-permutation study.

use std::path::Path;

use rinst_core::corruption::{make_scenario, ScenarioSpec};
use rinst_core::data::{minmax_normalize, synth, Series, SynthKind, SynthParams};
use rinst_core::diagnostics::{run_gradchecks, FD_TOL};
use rinst_core::error::Result;
use rinst_core::metrics::rmse;
use rinst_core::net::fit_capacity_probe;
use rinst_core::rng::RngStream;
use rinst_core::solver::{solve, SolverConfig};
use rinst_core::tensor::TensorBuf;

use crate::plot::trace_svg;

/// Gradient oracle over all ops and the full network. Returns pass/fail.
pub fn gradcheck(seed: u64) -> Result<bool> {
    let reports = run_gradchecks(seed)?;
    let mut all_ok = true;
    for r in &reports {
        let ok = r.passed(FD_TOL);
        all_ok &= ok;
        println!(
            "gradcheck {:28} rel_err {:9.3e} over {:4} components  {}",
            r.name,
            r.max_rel_err,
            r.checked,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    Ok(all_ok)
}

/// Paired fit traces: a structured target versus a white-noise target,
/// same seed. Emits both traces and passes when structure fits faster.
pub fn biascheck(iters: usize, seed: u64, out_dir: Option<&Path>) -> Result<bool> {
    let n = 1024;
    let cfg = rinst_core::net::NetConfig { seed, ..Default::default() };
    let structured = synth(SynthKind::Sines, n, seed, &SynthParams::default())?.values;
    let mut rng = RngStream::seeded(seed).split("noise-target");
    let raw: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let (noise, _) = minmax_normalize(&Series::new("noise", TensorBuf::from_vec(raw))?)?;

    let trace_structured = fit_capacity_probe(&cfg, &structured, iters, 0.01)?;
    let trace_noise = fit_capacity_probe(&cfg, &noise.values, iters, 0.01)?;

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let mut text = String::from("iteration,loss_structured,loss_noise\n");
        for i in 0..iters {
            text.push_str(&format!("{i},{},{}\n", trace_structured[i], trace_noise[i]));
        }
        std::fs::write(dir.join("biascheck.csv"), text)?;
        trace_svg(&dir.join("biascheck_structured.svg"), "structured target", &trace_structured)?;
        trace_svg(&dir.join("biascheck_noise.svg"), "noise target", &trace_noise)?;
    }

    let (ls, ln) = match iters {
        0 => (0.0, 0.0),
        _ => (trace_structured[iters - 1], trace_noise[iters - 1]),
    };
    println!("biascheck at iter {iters}: structured {ls:.4e} vs noise {ln:.4e}");
    Ok(iters == 0 || ls < ln)
}

/// One permutation comparison: solve on the original observation and on a
/// time-permuted copy (ground truth permuted identically), same settings.
pub struct PermuteRow {
    pub seed: u64,
    pub rmse_original: f64,
    pub rmse_permuted: f64,
}

pub fn permute_study(
    solver: &SolverConfig,
    seeds: &[u64],
    out_dir: Option<&Path>,
) -> Result<(Vec<PermuteRow>, bool)> {
    let clean = synth(SynthKind::SeasonalTrend, 1024, 7, &SynthParams::default())?.values;
    let mut rows = Vec::new();
    for &seed in seeds {
        let spec = ScenarioSpec::from_id("d3", seed)?;
        let corrupted = make_scenario(&clean, &spec)?;

        let mut cfg = solver.clone();
        cfg.seed = RngStream::seeded(solver.seed).split(&format!("permute|{seed}")).seed();
        let original = solve(&corrupted.y, &corrupted.operator, &cfg)?;
        let rmse_original = rmse(corrupted.ground_truth.data(), original.x_hat.data())?;

        let perm = RngStream::seeded(seed).split("permutation").permutation(clean.length());
        let permute = |t: &TensorBuf| {
            let mut out = t.clone();
            out.clear_grad();
            for ch in 0..t.channels() {
                let row = t.channel(ch).to_vec();
                let dst = out.channel_mut(ch);
                for (i, &p) in perm.iter().enumerate() {
                    dst[i] = row[p];
                }
            }
            out
        };
        let y_perm = permute(&corrupted.y);
        let gt_perm = permute(&corrupted.ground_truth);
        let permuted = solve(&y_perm, &corrupted.operator, &cfg)?;
        let rmse_permuted = rmse(gt_perm.data(), permuted.x_hat.data())?;

        println!(
            "permute seed {seed}: rmse original {rmse_original:.4} vs permuted {rmse_permuted:.4}"
        );
        rows.push(PermuteRow { seed, rmse_original, rmse_permuted });
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let mut text = String::from("seed,rmse_original,rmse_permuted\n");
        for r in &rows {
            text.push_str(&format!("{},{},{}\n", r.seed, r.rmse_original, r.rmse_permuted));
        }
        std::fs::write(dir.join("permute.csv"), text)?;
    }
    let pass = rows.iter().all(|r| r.rmse_permuted > r.rmse_original);
    Ok((rows, pass))
}
