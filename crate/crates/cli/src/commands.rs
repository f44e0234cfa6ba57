use anyhow::{bail, ensure, Context, Result};
use clap::ValueEnum;
use volterra_core::cascade::{corrected_cascade_with, naive_cascade, order1, CascadeOptions};
use volterra_core::complexity::{a_matrix_with, reconcile};
use volterra_core::oracle::{auto_memory, eval_regular, eval_triangular};
use volterra_core::system::{extract_homogeneous, kernel_value, symmetric_epsilons};
use volterra_core::{ComplexityProfile, Convention, FactorChain64, IndexConvention, KernelIndex, OpCounter, Signal64};

use crate::config::{Loaded, Memory};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Rendered command output and whether a checked condition failed.
pub struct Output {
    pub body: Vec<u8>,
    pub failed: bool,
}

fn csv_output(header: &[&str], rows: Vec<Vec<String>>, failed: bool) -> Result<Output> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    Ok(Output { body: w.into_inner().context("flushing CSV")?, failed })
}

fn signal_output(y: &Signal64) -> Result<Output> {
    let rows = y.samples().iter().enumerate().map(|(n, v)| vec![n.to_string(), v.to_string()]).collect();
    csv_output(&["n", "value"], rows, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Corrected,
    Naive,
    Order1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Form {
    Regular,
    Triangular,
}

/// Anything `compare` can put on either side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Source {
    Corrected,
    Naive,
    Order1,
    #[value(alias = "oracle")]
    OracleRegular,
    OracleTriangular,
}

impl Source {
    fn name(self) -> &'static str {
        match self {
            Source::Corrected => "corrected",
            Source::Naive => "naive",
            Source::Order1 => "order1",
            Source::OracleRegular => "oracle-regular",
            Source::OracleTriangular => "oracle-triangular",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Scalar,
    Matrix,
    Both,
}

fn resolve_memory(chain: &FactorChain64, memory: Memory) -> Result<usize> {
    Ok(match memory {
        Memory::Auto => auto_memory(chain)?,
        Memory::Fixed(l) => l,
    })
}

fn realize(chain: &FactorChain64, u: &Signal64, source: Source, memory: Memory) -> Result<Signal64> {
    let p = chain.order();
    let linear = || -> Result<Signal64> { Ok(order1(&chain.factors()[0], u, chain.period())?) };
    Ok(match source {
        Source::Order1 => {
            ensure!(p == 1, "mode order1 realizes the linear kernel only; got order {p}");
            linear()?
        }
        // a single factor carries no multiplicity correction
        Source::Corrected | Source::Naive if p == 1 => linear()?,
        Source::Corrected => corrected_cascade_with(chain, u, &mut OpCounter::new(), CascadeOptions::default())?,
        Source::Naive => naive_cascade(chain, u, &mut OpCounter::new())?,
        Source::OracleRegular => eval_regular(chain, u, resolve_memory(chain, memory)?)?,
        Source::OracleTriangular => eval_triangular(chain, u, resolve_memory(chain, memory)?)?,
    })
}

fn report_seed(seed: Option<u64>) {
    if let Some(s) = seed {
        eprintln!("input seed: {s}");
    }
}

pub fn sample_kernel(cfg: &Loaded, p: usize, index: &[usize], form: Form) -> Result<Output> {
    let chain = cfg.chain(p)?;
    ensure!(index.len() == p, "order-{p} kernel needs {p} lags, got {}", index.len());
    let idx = match form {
        Form::Regular => KernelIndex::regular(index.to_vec()),
        Form::Triangular => KernelIndex::triangular(index.to_vec())?,
    };
    let m = idx.multiplicity()?;
    let v = idx.sample(&chain)?;
    let gaps: Vec<f64> = idx.to_regular().lags().iter().map(|&n| n as f64 * chain.period()).collect();
    let h = kernel_value(&chain, &gaps)?;
    let convention = match idx.convention() {
        IndexConvention::Regular => "regular",
        IndexConvention::Triangular => "triangular",
    };
    let lags = index.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
    let rows = vec![
        vec!["order".into(), p.to_string()],
        vec!["convention".into(), convention.into()],
        vec!["index".into(), lags],
        vec!["v".into(), v.to_string()],
        vec!["h".into(), h.to_string()],
        vec!["m".into(), m.to_string()],
    ];
    csv_output(&["quantity", "value"], rows, false)
}

pub fn simulate(cfg: &Loaded, p: usize, mode: Mode, seed: Option<u64>) -> Result<Output> {
    let chain = cfg.chain(p)?;
    let (u, used) = cfg.input(seed)?;
    report_seed(used);
    let source = match mode {
        Mode::Corrected => Source::Corrected,
        Mode::Naive => Source::Naive,
        Mode::Order1 => Source::Order1,
    };
    signal_output(&realize(&chain, &u, source, Memory::Auto)?)
}

pub fn oracle(cfg: &Loaded, p: usize, form: Form, memory: Memory, seed: Option<u64>) -> Result<Output> {
    let chain = cfg.chain(p)?;
    let (u, used) = cfg.input(seed)?;
    report_seed(used);
    let source = match form {
        Form::Regular => Source::OracleRegular,
        Form::Triangular => Source::OracleTriangular,
    };
    signal_output(&realize(&chain, &u, source, memory)?)
}

pub struct CompareArgs {
    pub order: usize,
    pub left: Source,
    pub right: Source,
    pub memory: Memory,
    pub tolerance: f64,
    pub seed: Option<u64>,
}

/// Max absolute and relative error of `left` against the reference `right`,
/// the first sample whose error exceeds `tolerance · max|right|`, and the
/// range of `left/right` over nonzero reference samples.
pub fn compare(cfg: &Loaded, args: &CompareArgs) -> Result<Output> {
    ensure!(args.tolerance >= 0.0, "tolerance must be nonnegative");
    let chain = cfg.chain(args.order)?;
    let (u, used) = cfg.input(args.seed)?;
    report_seed(used);
    let l = realize(&chain, &u, args.left, args.memory)?;
    let r = realize(&chain, &u, args.right, args.memory)?;

    let scale = r.max_abs();
    let errs: Vec<f64> = l.samples().iter().zip(r.samples()).map(|(a, b)| (a - b).abs()).collect();
    let max_abs = errs.iter().copied().fold(0.0, f64::max);
    let max_rel = if scale > 0.0 { max_abs / scale } else { max_abs };
    let bound = if scale > 0.0 { args.tolerance * scale } else { args.tolerance };
    let divergent = errs.iter().position(|&e| e > bound);
    let ratios: Vec<f64> =
        l.samples().iter().zip(r.samples()).filter(|(_, b)| **b != 0.0).map(|(a, b)| a / b).collect();
    let fmt_opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| x.to_string());
    let min_ratio = ratios.iter().copied().reduce(f64::min);
    let max_ratio = ratios.iter().copied().reduce(f64::max);
    let failed = max_rel > args.tolerance;

    let rows = vec![
        vec!["order".into(), args.order.to_string()],
        vec!["left".into(), args.left.name().into()],
        vec!["right".into(), args.right.name().into()],
        vec!["samples".into(), u.len().to_string()],
        vec!["max_abs_error".into(), max_abs.to_string()],
        vec!["max_rel_error".into(), max_rel.to_string()],
        vec!["first_divergent_sample".into(), divergent.map_or_else(|| "none".into(), |n| n.to_string())],
        vec!["min_ratio".into(), fmt_opt(min_ratio)],
        vec!["max_ratio".into(), fmt_opt(max_ratio)],
        vec!["tolerance".into(), args.tolerance.to_string()],
        vec!["status".into(), if failed { "fail" } else { "pass" }.into()],
    ];
    csv_output(&["metric", "value"], rows, failed)
}

/// `±k/K` for `k = 1..K`, enough amplitudes for `max_order` orders.
pub fn default_epsilons(max_order: usize) -> Vec<f64> {
    let k = (max_order + 1).div_ceil(2);
    symmetric_epsilons(&(1..=k).map(|i| i as f64 / k as f64).collect::<Vec<_>>())
}

pub fn ctsim(cfg: &Loaded, max_order: usize, epsilons: Option<Vec<f64>>, seed: Option<u64>) -> Result<Output> {
    let sys = cfg.bilinear()?;
    let (u, used) = cfg.input(seed)?;
    report_seed(used);
    let eps = epsilons.or_else(|| cfg.config.epsilons.clone()).unwrap_or_else(|| default_epsilons(max_order));
    let total = sys.impulse_train_response(&u)?;
    let fit = extract_homogeneous(&sys, &u, max_order, &eps)?;
    eprintln!("amplitude matrix condition: {:e}", fit.condition);
    if fit.ill_conditioned {
        eprintln!("warning: amplitude matrix is ill-conditioned; per-order sequences are unreliable");
    }

    let mut header = vec!["n".to_string(), "total".to_string()];
    header.extend((1..=max_order).map(|p| format!("order_{p}")));
    let rows = (0..u.len())
        .map(|n| {
            let mut row = vec![n.to_string(), total.samples()[n].to_string()];
            row.extend(fit.orders.iter().map(|y| y.samples()[n].to_string()));
            row
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_output(&header, rows, false)
}

/// Predicted versus measured extra multiplications per sample of the
/// corrected cascade over the naive one. The naive rows compare the naive
/// cascade with itself and must read zero.
pub fn complexity(cfg: &Loaded, p: usize, which: ConventionArg, seed: Option<u64>) -> Result<Output> {
    if p < 2 {
        bail!("complexity counts need order p >= 2");
    }
    let chain = cfg.chain(p)?;
    let profile = ComplexityProfile::from_chain(&chain)?;
    let u = match cfg.config.input {
        Some(_) => {
            let (u, used) = cfg.input(seed)?;
            report_seed(used);
            u
        }
        None => Signal64::impulse(64, chain.period())?,
    };
    ensure!(!u.is_empty(), "counting needs a nonempty input");

    let count = |options: Option<CascadeOptions>| -> Result<OpCounter> {
        let mut c = OpCounter::new();
        match options {
            Some(o) => corrected_cascade_with(&chain, &u, &mut c, o)?,
            None => naive_cascade(&chain, &u, &mut c)?,
        };
        Ok(c)
    };
    let naive = count(None)?;
    let conventions: &[Convention] = match which {
        ConventionArg::Scalar => &[Convention::Scalar],
        ConventionArg::Matrix => &[Convention::Matrix],
        ConventionArg::Both => &[Convention::Scalar, Convention::Matrix],
    };

    let mut rows = Vec::new();
    let mut failed = false;
    for &convention in conventions {
        let absorb_half = convention == Convention::Matrix;
        let corrected = count(Some(CascadeOptions { absorb_half }))?;
        let runs = [("corrected", corrected, a_matrix_with(&profile, convention)), ("naive", naive, 0)];
        for (run, measured, predicted) in runs {
            let r = reconcile(&measured, &naive, predicted, convention)?;
            failed |= !r.matches;
            rows.push(vec![
                convention.to_string(),
                p.to_string(),
                run.to_string(),
                r.samples.to_string(),
                predicted.to_string(),
                r.additional_per_sample.to_string(),
                if r.matches { "yes" } else { "no" }.to_string(),
            ]);
        }
    }
    csv_output(&["convention", "order", "run", "samples", "predicted", "measured", "match"], rows, failed)
}
