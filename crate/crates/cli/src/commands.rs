use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use spotvol::activity::{adaptive_thresholds, beta_second_diff_pv, beta_threshold_count, beta_two_scale_pv, BetaEstimate};
use spotvol::estimators::{
    estimate_all_blocks, estimate_fixed_k, estimate_fixed_k_diff, estimate_large_k, estimate_large_k_diff, SpotEstimate,
};
use spotvol::harness::{
    run_coverage_experiment, run_histogram_experiment, write_coverage, write_histograms, write_ks_table, write_manifest,
    CiMethod, ExperimentConfig, RunManifest, BETA_PV_POWER, FULL_REPLICATIONS, THRESHOLD_MULTIPLIERS,
};
use spotvol::inference::{
    beta_grid, ci_boundary_gauss, ci_fixed_k, ci_large_k_gauss, ci_large_k_stable, BoundMethod, ConfidenceInterval,
    CouplingKind, CouplingLaw, TableCache, Transform, CACHE_DIR_ENV, DEFAULT_TABLE_SEED,
};
use spotvol::io::{read_returns, write_path, InputKind};
use spotvol::path::{simulate_path_replicate, ModelConfig, ReturnSeries};

use crate::args::*;
use crate::Failure;

type Outcome = Result<(), Failure>;

pub fn run(cli: Cli) -> Outcome {
    if let Some(dir) = &cli.cache_dir {
        // read by every table cache created below, including the harness's own
        std::env::set_var(CACHE_DIR_ENV, dir);
    }
    let Cli { command, seed, threads, .. } = cli;
    if threads == Some(0) {
        return Err(Failure::usage("--threads must be at least 1"));
    }
    spotvol::par::with_threads(threads, move || match command {
        Command::Simulate(a) => simulate(a, seed),
        Command::Estimate(a) => estimate(a),
        Command::Beta(a) => beta(a),
        Command::Ci(a) => ci(a, seed),
        Command::Histogram(a) => histogram(a, seed),
        Command::Coverage(a) => coverage(a, seed),
        Command::QuantileCache(a) => quantile_cache(a, seed),
    })
}

fn check_input(path: &Path) -> Outcome {
    if !path.is_file() {
        return Err(Failure::usage(format!("input file {} does not exist", path.display())));
    }
    Ok(())
}

fn check_output_file(path: &Option<PathBuf>) -> Outcome {
    if let Some(p) = path {
        match p.parent() {
            Some(d) if !d.as_os_str().is_empty() && !d.is_dir() => {
                return Err(Failure::usage(format!("output directory {} does not exist", d.display())))
            }
            _ => {}
        }
    }
    Ok(())
}

fn prepare_dir(dir: &Path) -> Outcome {
    if dir.exists() && !dir.is_dir() {
        return Err(Failure::usage(format!("{} exists and is not a directory", dir.display())));
    }
    fs::create_dir_all(dir).map_err(|e| Failure::from(spotvol::Error::from(e)))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    check_input(path)?;
    let text = fs::read_to_string(path).map_err(spotvol::Error::from)?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_returns(a: &InputArgs) -> Result<ReturnSeries, Failure> {
    check_input(&a.input)?;
    let kind = match a.input_kind {
        InputKindArg::Auto => InputKind::Auto,
        InputKindArg::Price => InputKind::Price,
        InputKindArg::Increment => InputKind::Increment,
    };
    Ok(read_returns(&a.input, kind, a.delta_n)?)
}

/// Write to the file, or to stdout when none is given.
fn emit(path: &Option<PathBuf>, text: &str) -> Outcome {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| spotvol::Error::from(e).into()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| spotvol::Error::from(e).into())
        }
    }
}

fn table_cache(size: usize, seed: Option<u64>) -> TableCache {
    TableCache::new(size, seed.unwrap_or(DEFAULT_TABLE_SEED)).with_env_dir()
}

fn simulate(a: SimulateArgs, seed: Option<u64>) -> Outcome {
    let mut model = match &a.config {
        Some(p) => read_json::<ModelConfig>(p)?,
        None => ModelConfig::standard(a.beta, 0),
    };
    if let Some(s) = seed {
        model.seed = s;
    }
    model.validate()?;
    prepare_dir(&a.output)?;
    let path = simulate_path_replicate(&model, a.replicate)?;
    let sidecar = write_path(&a.output, &a.stem, &path)?;
    #[derive(Serialize)]
    struct Echo<'a> {
        model: &'a ModelConfig,
        replicate: u64,
        stem: &'a str,
    }
    let mut manifest =
        RunManifest::new("simulate", model.seed, &Echo { model: &model, replicate: a.replicate, stem: &a.stem })?;
    manifest.outputs.push(sidecar.file_name().unwrap_or_default().to_string_lossy().into_owned());
    write_manifest(&a.output.join("run_manifest.json"), &manifest)?;
    Ok(())
}

fn estimate_blocks(r: &ReturnSeries, method: EstimatorArg, k: usize, p: f64, beta: Option<f64>) -> Result<Vec<SpotEstimate>, Failure> {
    let need_beta = || beta.ok_or_else(|| Failure::usage("--beta is required by the large-k estimators"));
    Ok(match method {
        EstimatorArg::FixedK => estimate_all_blocks(r, k, |r, b| estimate_fixed_k(r, b, p))?,
        EstimatorArg::FixedKDiff => estimate_all_blocks(r, k, |r, b| estimate_fixed_k_diff(r, b, p))?,
        EstimatorArg::LargeK => {
            let beta = need_beta()?;
            estimate_all_blocks(r, k, |r, b| estimate_large_k(r, b, p, beta))?
        }
        EstimatorArg::LargeKDiff => {
            let beta = need_beta()?;
            estimate_all_blocks(r, k, |r, b| estimate_large_k_diff(r, b, p, beta))?
        }
    })
}

fn estimate(a: EstimateArgs) -> Outcome {
    check_output_file(&a.output)?;
    let r = load_returns(&a.input)?;
    let ests = estimate_blocks(&r, a.method, a.k, a.p, a.beta)?;
    let mut out = String::from("block,start_time,k,p,estimate\n");
    for e in &ests {
        out.push_str(&format!("{},{},{},{},{}\n", e.block.j, e.block.start_time(r.delta_n()), e.k(), e.p, e.value));
    }
    emit(&a.output, &out)
}

fn beta(a: BetaArgs) -> Outcome {
    check_output_file(&a.output)?;
    let r = load_returns(&a.input)?;
    let est: BetaEstimate = match a.method {
        BetaMethodArg::ThresholdCount => {
            let (eta, eta_prime) = match (a.eta, a.eta_prime) {
                (Some(e), Some(e2)) => (e, e2),
                _ => adaptive_thresholds(&r, a.varpi, THRESHOLD_MULTIPLIERS)?,
            };
            beta_threshold_count(&r, a.varpi, eta, eta_prime)?
        }
        BetaMethodArg::TwoScalePv => beta_two_scale_pv(&r, a.p)?,
        BetaMethodArg::SecondDiffPv => beta_second_diff_pv(&r, a.p)?,
    };
    let json = serde_json::json!({
        "beta_hat": est.value,
        "method": est.method,
        "tuning": est.tuning,
        "diagnostics": est.diagnostics,
        "clamped": est.clamped,
    });
    emit(&a.output, &format!("{}\n", serde_json::to_string_pretty(&json).map_err(spotvol::Error::from)?))
}

fn ci_method(m: CiMethodArg, bound: Option<BoundArg>) -> CiMethod {
    let pick = |default: BoundMethod| match bound {
        Some(BoundArg::Hdi) => BoundMethod::Hdi,
        Some(BoundArg::EqualTail) => BoundMethod::EqualTail,
        None => default,
    };
    match m {
        CiMethodArg::FixedK => CiMethod::FixedK { differenced: false, bound: pick(BoundMethod::Hdi) },
        CiMethodArg::FixedKDiff => CiMethod::FixedK { differenced: true, bound: pick(BoundMethod::Hdi) },
        CiMethodArg::LargeKGauss => CiMethod::LargeKGauss { differenced: false },
        CiMethodArg::LargeKGaussDiff => CiMethod::LargeKGauss { differenced: true },
        CiMethodArg::LargeKStable => CiMethod::LargeKStable { differenced: false, split: pick(BoundMethod::EqualTail) },
        CiMethodArg::LargeKStableDiff => {
            CiMethod::LargeKStable { differenced: true, split: pick(BoundMethod::EqualTail) }
        }
        CiMethodArg::Boundary => CiMethod::Boundary { differenced: false },
        CiMethodArg::BoundaryDiff => CiMethod::Boundary { differenced: true },
    }
}

fn ci(a: CiArgs, seed: Option<u64>) -> Outcome {
    check_output_file(&a.output)?;
    let r = load_returns(&a.input)?;
    // without a known β, plug in the second-difference estimate on the table grid
    let beta = match a.beta {
        Some(b) => b,
        None => beta_grid(beta_second_diff_pv(&r, BETA_PV_POWER)?.value),
    };
    let method = ci_method(a.method, a.bound);
    let transform = match a.transform {
        TransformArg::Log => Transform::Log,
        TransformArg::Identity => Transform::Power(1.0),
    };
    let cache = table_cache(a.table_size, seed);
    let (p, alpha) = (a.p, a.alpha);
    let intervals: Vec<ConfidenceInterval> = match method {
        CiMethod::FixedK { differenced, bound } => {
            let f = if differenced { estimate_fixed_k_diff } else { estimate_fixed_k };
            estimate_all_blocks(&r, a.k, |r, b| f(r, b, p))?
                .iter()
                .map(|e| ci_fixed_k(e, beta, alpha, bound, &cache))
                .collect::<Result<_, _>>()?
        }
        _ => {
            let diff = matches!(
                method,
                CiMethod::LargeKGauss { differenced: true }
                    | CiMethod::LargeKStable { differenced: true, .. }
                    | CiMethod::Boundary { differenced: true }
            );
            let f = if diff { estimate_large_k_diff } else { estimate_large_k };
            estimate_all_blocks(&r, a.k, |r, b| f(r, b, p, beta))?
                .iter()
                .map(|e| match method {
                    CiMethod::LargeKGauss { .. } => ci_large_k_gauss(e, transform, alpha),
                    CiMethod::Boundary { .. } => ci_boundary_gauss(e, transform, alpha),
                    CiMethod::LargeKStable { split, .. } => ci_large_k_stable(e, transform, alpha, split, &cache),
                    CiMethod::FixedK { .. } => unreachable!("handled above"),
                })
                .collect::<Result<_, _>>()?
        }
    };
    let ests = estimate_blocks(
        &r,
        match method {
            CiMethod::FixedK { differenced: false, .. } => EstimatorArg::FixedK,
            CiMethod::FixedK { differenced: true, .. } => EstimatorArg::FixedKDiff,
            _ if intervals.first().is_some_and(|c| c.method.is_differenced()) => EstimatorArg::LargeKDiff,
            _ => EstimatorArg::LargeK,
        },
        a.k,
        p,
        Some(beta),
    )?;
    let mut out = String::from("block,start_time,k,p,beta,estimate,lo,hi,sigma_lo,sigma_hi,level,method\n");
    for (e, c) in ests.iter().zip(&intervals) {
        let (slo, shi) = c.sigma_bounds();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            e.block.j,
            e.block.start_time(r.delta_n()),
            e.k(),
            p,
            beta,
            e.value,
            c.lo,
            c.hi,
            slo,
            shi,
            c.level,
            method.label()
        ));
    }
    emit(&a.output, &out)
}

fn experiment_config(a: &ExperimentArgs, seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &a.config {
        Some(p) => read_json::<ExperimentConfig>(p)?,
        None => ExperimentConfig::standard(seed.unwrap_or(0)),
    };
    if let Some(s) = seed {
        cfg.seed = s;
        cfg.model.seed = s;
    }
    if a.full {
        cfg.replications = FULL_REPLICATIONS;
    }
    if let Some(n) = a.replications {
        cfg.replications = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn histogram(a: ExperimentArgs, seed: Option<u64>) -> Outcome {
    let cfg = experiment_config(&a, seed)?;
    prepare_dir(&a.output)?;
    let hists = run_histogram_experiment(&cfg)?;
    let mut manifest = RunManifest::new("histogram", cfg.seed, &cfg)?;
    for f in write_histograms(&a.output, &hists)? {
        manifest.outputs.push(f.file_name().unwrap_or_default().to_string_lossy().into_owned());
    }
    write_ks_table(&a.output.join("ks_table.csv"), &hists)?;
    manifest.outputs.push("ks_table.csv".into());
    write_manifest(&a.output.join("run_manifest.json"), &manifest)?;
    Ok(())
}

fn coverage(a: ExperimentArgs, seed: Option<u64>) -> Outcome {
    let mut cfg = experiment_config(&a, seed)?;
    if cfg.methods.is_empty() {
        cfg.methods = vec![CiMethod::fixed_k()];
    }
    prepare_dir(&a.output)?;
    let reports = run_coverage_experiment(&cfg)?;
    write_coverage(&a.output.join("coverage.csv"), &reports)?;
    let mut manifest = RunManifest::new("coverage", cfg.seed, &cfg)?;
    manifest.outputs.push("coverage.csv".into());
    write_manifest(&a.output.join("run_manifest.json"), &manifest)?;
    Ok(())
}

fn quantile_cache(a: CacheArgs, seed: Option<u64>) -> Outcome {
    let cache = table_cache(a.table_size, seed);
    let Some(dir) = cache.dir().map(Path::to_path_buf) else {
        return Err(Failure::usage(format!("quantile-cache needs --cache-dir or {CACHE_DIR_ENV}")));
    };
    let kind = match a.method {
        CiMethodArg::FixedK => CouplingKind::FixedKFirst,
        CiMethodArg::FixedKDiff => CouplingKind::FixedKDiff,
        CiMethodArg::LargeKStable => CouplingKind::LargeKStable,
        CiMethodArg::LargeKStableDiff => CouplingKind::LargeKStableDiff,
        _ => return Err(Failure::usage("Gaussian limits need no table; choose a fixed-k or stable method")),
    };
    if kind.is_fixed_k() && a.k.is_none() {
        return Err(Failure::usage("--k is required for fixed-k tables"));
    }
    let mut out = String::new();
    for b in &a.beta {
        let law = CouplingLaw::new(kind, *b, a.p, a.k)?;
        let table = cache.get(&law)?;
        let split = if kind.is_fixed_k() { BoundMethod::Hdi } else { BoundMethod::EqualTail };
        let (lo, hi) = table.bounds(a.alpha, split)?;
        let line = serde_json::json!({
            "file": dir.join(cache.file_name(&law)),
            "kind": kind,
            "beta": b,
            "p": a.p,
            "k": law.k,
            "alpha": a.alpha,
            "lower": lo,
            "upper": hi,
        });
        out.push_str(&format!("{line}\n"));
    }
    emit(&None, &out)
}
