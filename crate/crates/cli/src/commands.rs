use std::fs::File;
use std::io::{self, Read, Write};

use serde::Serialize;
use serde_json::json;

use sampled_card_core::analysis::{optimal_split, rel_variance_alg1, rel_variance_alg2};
use sampled_card_core::sim::tables::{run_table, TableOptions, TableRow};
use sampled_card_core::{
    hash_element, Algorithm, BudgetSplit, Error, EstimateReport, Pipeline, PipelineConfig,
    PoissonMode,
};

use crate::args::{AnalyzeArgs, Cli, Command, EstimateArgs, OptimizeArgs, SimulateArgs};
use crate::exit;
use crate::input::for_each_element;

/// Runs one parsed invocation against the process's stdin/stdout and
/// returns the exit code.
pub fn run(cli: Cli) -> i32 {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let code = match cli.command {
        Command::Estimate(args) => estimate(&args, &mut out),
        Command::Simulate(args) => simulate(&args, &mut out),
        Command::Analyze(args) => analyze(&args, &mut out),
        Command::Optimize(args) => optimize(&args, &mut out),
    };
    let _ = out.flush();
    code
}

fn print_json<W: Write, T: Serialize>(out: &mut W, value: &T) -> i32 {
    let written = serde_json::to_writer(&mut *out, value)
        .map_err(io::Error::from)
        .and_then(|_| writeln!(out));
    match written {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit::IO
        }
    }
}

fn usage_error(message: impl std::fmt::Display) -> i32 {
    eprintln!("error: {message}");
    exit::USAGE
}

#[derive(Debug, Serialize)]
pub struct EstimateOutput {
    #[serde(flatten)]
    pub report: EstimateReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freq_model: Option<String>,
}

fn predicted_variance(
    args: &EstimateArgs,
    pipeline: &Pipeline,
    report: &EstimateReport,
) -> Option<f64> {
    let rate = args.sampling_rate?;
    let (p0, p1) = match args.freq_model {
        Some(model) => {
            let mom = model.moments(rate, PoissonMode::Limit);
            (mom.p0, mom.p1)
        }
        None => pipeline.plugin_moments()?,
    };
    if p0 >= 1.0 {
        return None;
    }
    let m = report.storage.m as f64;
    match report.algorithm {
        Algorithm::Alg1 => Some(rel_variance_alg1(p0, p1, report.sample_len as f64, m)),
        Algorithm::Alg2 => Some(rel_variance_alg2(
            p0,
            p1,
            report.observed as f64,
            m,
            args.are,
        )),
        Algorithm::Naive => None,
    }
}

pub fn estimate<W: Write>(args: &EstimateArgs, out: &mut W) -> i32 {
    let config = PipelineConfig::new(args.algorithm.into(), args.m, args.u, args.seed);
    let mut pipeline = match Pipeline::new(&config) {
        Ok(p) => p,
        Err(e) => return usage_error(e),
    };

    let source: Box<dyn Read> = match &args.input {
        Some(path) if path.as_os_str() != "-" => match File::open(path) {
            Ok(f) => Box::new(f),
            Err(e) => {
                eprintln!("error: cannot open {}: {e}", path.display());
                return exit::IO;
            }
        },
        _ => Box::new(io::stdin().lock()),
    };
    let seed = config.hash_seed;
    if let Err(e) = for_each_element(source, args.format, |element| {
        pipeline.offer(hash_element(element, seed))
    }) {
        eprintln!("error: reading input: {e}");
        return exit::IO;
    }

    match pipeline.finish() {
        Ok(mut report) => {
            report.predicted_rel_variance = predicted_variance(args, &pipeline, &report);
            let output = EstimateOutput {
                report,
                sampling_rate: args.sampling_rate,
                freq_model: args.freq_model.map(|m| m.to_string()),
            };
            print_json(out, &output)
        }
        Err(Error::EmptySample) => {
            print_json(
                out,
                &json!({"error": "empty_sample", "message": "input contained no elements"}),
            );
            exit::EMPTY
        }
        Err(
            e @ Error::DegenerateSample {
                observed,
                singletons,
            },
        ) => {
            print_json(
                out,
                &json!({
                    "error": "degenerate_sample",
                    "message": e.to_string(),
                    "observed": observed,
                    "singletons": singletons,
                }),
            );
            exit::DEGENERATE
        }
        Err(e) => usage_error(e),
    }
}

pub fn simulate<W: Write>(args: &SimulateArgs, out: &mut W) -> i32 {
    let mut opts = if args.fast {
        TableOptions::fast(args.seed)
    } else {
        TableOptions::full(args.seed)
    };
    if let Some(trials) = args.trials {
        opts.trials = trials;
    }
    opts.are = args.are;
    let rows: Vec<TableRow> = match run_table(args.table, &opts) {
        Ok(rows) => rows,
        Err(e) => return usage_error(e),
    };
    let mut write = || -> io::Result<()> {
        writeln!(out, "{}", TableRow::CSV_HEADER)?;
        for row in &rows {
            writeln!(out, "{}", row.to_csv())?;
        }
        Ok(())
    };
    match write() {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit::IO
        }
    }
}

#[derive(Debug, Serialize)]
pub struct AnalyzeOutput {
    pub freq_model: String,
    pub sampling_rate: f64,
    pub algorithm: Algorithm,
    pub p0: f64,
    pub p1: f64,
    pub m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    pub are: f64,
    pub rel_variance: f64,
}

pub fn analyze<W: Write>(args: &AnalyzeArgs, out: &mut W) -> i32 {
    let mode = if args.exact {
        PoissonMode::Exact
    } else {
        PoissonMode::Limit
    };
    let mom = args.freq_model.moments(args.sampling_rate, mode);
    if mom.p0 >= 1.0 {
        return usage_error("unseen fraction is 1 at this sampling rate");
    }
    let output = match args.u {
        Some(u) => AnalyzeOutput {
            freq_model: args.freq_model.to_string(),
            sampling_rate: args.sampling_rate,
            algorithm: Algorithm::Alg2,
            p0: mom.p0,
            p1: mom.p1,
            m: args.m,
            l: None,
            u: Some(u),
            are: args.are,
            rel_variance: rel_variance_alg2(mom.p0, mom.p1, u, args.m, args.are),
        },
        None => {
            let l = args.l.unwrap_or_else(|| {
                args.sampling_rate * args.n as f64 * args.freq_model.grid_mean()
            });
            AnalyzeOutput {
                freq_model: args.freq_model.to_string(),
                sampling_rate: args.sampling_rate,
                algorithm: Algorithm::Alg1,
                p0: mom.p0,
                p1: mom.p1,
                m: args.m,
                l: Some(l),
                u: None,
                are: args.are,
                rel_variance: rel_variance_alg1(mom.p0, mom.p1, l, args.m),
            }
        }
    };
    print_json(out, &output)
}

#[derive(Debug, Serialize)]
pub struct OptimizeOutput {
    #[serde(flatten)]
    pub split: BudgetSplit,
    pub p0: f64,
    pub p1: f64,
    pub are: f64,
}

pub fn optimize<W: Write>(args: &OptimizeArgs, out: &mut W) -> i32 {
    let mom = args
        .freq_model
        .moments(args.sampling_rate, PoissonMode::Limit);
    match optimal_split(args.budget, mom.p0, mom.p1, args.are) {
        Ok(split) => print_json(
            out,
            &OptimizeOutput {
                split,
                p0: mom.p0,
                p1: mom.p1,
                are: args.are,
            },
        ),
        Err(e) => usage_error(e),
    }
}
