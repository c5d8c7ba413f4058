//! Reproduction experiments: fixed parameter grids, each row pairing the
//! analytic relative variance with a Monte-Carlo estimate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{run_trials, FrequencyModel, TrialConfig};
use crate::analysis::{optimal_split, rel_variance_alg1, rel_variance_alg2, PoissonMode};
use crate::error::{Error, Result};
use crate::estimators::{Algorithm, MIN_RESERVOIR};
use crate::sketch::registers_for;

pub const UNIFORM_MODEL: FrequencyModel = FrequencyModel::Uniform {
    lo: 100,
    hi: 10_000,
};
pub const PARETO_MODEL: FrequencyModel = FrequencyModel::Pareto {
    alpha: 1.1,
    scale: 500.0,
};
// Without sampling only the distinct set matters to the sketch, so each
// element is streamed once.
const DISTINCT_ONLY: FrequencyModel = FrequencyModel::Uniform { lo: 1, hi: 1 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TableId {
    Intro,
    T1a,
    T1b,
    T2a,
    T2b,
    T3,
    T4a,
    T4b,
    /// Sketch alone on unsampled streams.
    Hll,
}

impl TableId {
    pub const ALL: [TableId; 9] = [
        TableId::Intro,
        TableId::T1a,
        TableId::T1b,
        TableId::T2a,
        TableId::T2b,
        TableId::T3,
        TableId::T4a,
        TableId::T4b,
        TableId::Hll,
    ];
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableId::Intro => "intro",
            TableId::T1a => "1a",
            TableId::T1b => "1b",
            TableId::T2a => "2a",
            TableId::T2b => "2b",
            TableId::T3 => "3",
            TableId::T4a => "4a",
            TableId::T4b => "4b",
            TableId::Hll => "hll",
        })
    }
}

impl FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TableId::ALL
            .into_iter()
            .find(|t| t.to_string() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown table {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableOptions {
    pub n: usize,
    pub trials: u32,
    pub seed: u64,
    /// ARE used in the analytic column and by the optimizer.
    pub are: f64,
}

impl TableOptions {
    pub fn full(seed: u64) -> Self {
        Self {
            n: 10_000,
            trials: 200,
            seed,
            are: 1.0,
        }
    }

    /// Smaller streams and fewer trials for a quick pass.
    pub fn fast(seed: u64) -> Self {
        Self {
            n: 1_000,
            trials: 50,
            ..Self::full(seed)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub table: String,
    pub algorithm: Algorithm,
    pub model: String,
    pub rate: f64,
    pub budget: Option<u64>,
    /// Requested sketch size, as in the analytic formula.
    pub m: u64,
    /// Registers actually used by the simulated sketch.
    pub registers: u64,
    pub u: Option<u64>,
    pub mean_n_hat: Option<f64>,
    pub bias: Option<f64>,
    pub analysis_variance: Option<f64>,
    pub simulation_variance: Option<f64>,
    pub trials: u32,
    pub degenerate: u32,
}

impl TableRow {
    pub const CSV_HEADER: &'static str = "table,algorithm,model,rate,budget,m,registers,u,\
mean_n_hat,bias,analysis_variance,simulation_variance,trials,degenerate";

    pub fn to_csv(&self) -> String {
        fn opt<T: fmt::Display>(v: Option<T>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        fn real(v: Option<f64>) -> String {
            v.map(|x| format!("{x:.6}")).unwrap_or_default()
        }
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.table,
            self.algorithm,
            self.model,
            self.rate,
            opt(self.budget),
            self.m,
            self.registers,
            opt(self.u),
            real(self.mean_n_hat),
            real(self.bias),
            real(self.analysis_variance),
            real(self.simulation_variance),
            self.trials,
            self.degenerate
        )
    }
}

struct RowSpec {
    algorithm: Algorithm,
    model: FrequencyModel,
    rate: f64,
    m: u64,
    u: Option<u64>,
    budget: Option<u64>,
}

impl RowSpec {
    fn alg1(model: FrequencyModel, rate: f64, m: u64) -> Self {
        Self {
            algorithm: Algorithm::Alg1,
            model,
            rate,
            m,
            u: None,
            budget: None,
        }
    }

    fn alg2(model: FrequencyModel, rate: f64, m: u64, u: u64) -> Self {
        Self {
            algorithm: Algorithm::Alg2,
            model,
            rate,
            m,
            u: Some(u),
            budget: None,
        }
    }

    fn sketch_only(m: u64) -> Self {
        Self {
            algorithm: Algorithm::Naive,
            model: DISTINCT_ONLY,
            rate: 1.0,
            m,
            u: None,
            budget: None,
        }
    }

    fn analysis(&self, n: usize, are: f64) -> Option<f64> {
        if self.rate >= 1.0 {
            return None;
        }
        let mom = self.model.moments(self.rate, PoissonMode::Limit);
        let m = self.m as f64;
        match self.algorithm {
            Algorithm::Alg1 => {
                let l = self.rate * n as f64 * self.model.grid_mean();
                Some(rel_variance_alg1(mom.p0, mom.p1, l, m))
            }
            Algorithm::Alg2 => Some(rel_variance_alg2(mom.p0, mom.p1, self.u? as f64, m, are)),
            Algorithm::Naive => None,
        }
    }

    fn run(&self, table: TableId, opts: &TableOptions) -> Result<TableRow> {
        let mut row = TableRow {
            table: table.to_string(),
            algorithm: self.algorithm,
            model: self.model.to_string(),
            rate: self.rate,
            budget: self.budget,
            m: self.m,
            registers: registers_for(self.m as usize) as u64,
            u: self.u,
            mean_n_hat: None,
            bias: None,
            analysis_variance: self.analysis(opts.n, opts.are),
            simulation_variance: None,
            trials: opts.trials,
            degenerate: 0,
        };
        if self.algorithm == Algorithm::Alg2 && self.u.unwrap_or(0) < MIN_RESERVOIR as u64 {
            return Ok(row);
        }
        let config = TrialConfig::new(
            opts.n,
            self.model,
            self.rate,
            self.algorithm,
            self.m as usize,
        )
        .with_u(self.u.unwrap_or(0) as usize)
        .with_trials(opts.trials)
        .with_seed(opts.seed);
        let result = run_trials(&config)?;
        row.mean_n_hat = Some(result.mean_n_hat);
        row.bias = Some(result.bias);
        row.simulation_variance = result.rel_variance;
        row.degenerate = result.degenerate_count;
        Ok(row)
    }
}

const SPLITS_200: [(u64, u64); 5] = [(10, 190), (50, 150), (100, 100), (150, 50), (190, 10)];
const SPLITS_2000: [(u64, u64); 5] = [
    (50, 1950),
    (100, 1900),
    (500, 1500),
    (1000, 1000),
    (1500, 500),
];
const TABLE4_RATES: [f64; 3] = [0.01, 0.002, 0.001];
const TABLE4_SIZES: [u64; 3] = [100, 500, 1000];

fn specs(table: TableId, opts: &TableOptions) -> Result<Vec<RowSpec>> {
    let u = UNIFORM_MODEL;
    Ok(match table {
        TableId::Intro => vec![
            RowSpec {
                algorithm: Algorithm::Naive,
                ..RowSpec::alg1(u, 0.001, 200)
            },
            RowSpec::alg1(u, 0.001, 200),
        ],
        TableId::T1a => [50, 100, 150].map(|m| RowSpec::alg1(u, 0.01, m)).into(),
        TableId::T1b => [50, 100, 150].map(|m| RowSpec::alg1(u, 0.001, m)).into(),
        TableId::T2a => SPLITS_200.map(|(m, s)| RowSpec::alg2(u, 0.01, m, s)).into(),
        TableId::T2b => SPLITS_200
            .map(|(m, s)| RowSpec::alg2(u, 0.001, m, s))
            .into(),
        TableId::T3 => SPLITS_2000
            .map(|(m, s)| RowSpec::alg2(PARETO_MODEL, 0.01, m, s))
            .into(),
        TableId::T4a => {
            let mut rows = Vec::new();
            for rate in TABLE4_RATES {
                rows.extend(TABLE4_SIZES.map(|m| RowSpec::alg1(u, rate, m)));
            }
            rows.extend(TABLE4_SIZES.map(RowSpec::sketch_only));
            rows
        }
        TableId::T4b => {
            let mut rows = Vec::new();
            for rate in TABLE4_RATES {
                let mom = u.moments(rate, PoissonMode::Limit);
                for budget in TABLE4_SIZES {
                    let split = optimal_split(budget, mom.p0, mom.p1, opts.are)?;
                    rows.push(RowSpec {
                        budget: Some(budget),
                        ..RowSpec::alg2(u, rate, split.m, split.u)
                    });
                }
            }
            rows.extend(TABLE4_SIZES.map(|b| RowSpec {
                budget: Some(b),
                ..RowSpec::sketch_only(b)
            }));
            rows
        }
        TableId::Hll => [256, 1024].map(RowSpec::sketch_only).into(),
    })
}

/// Runs every row of `table`, in table order.
pub fn run_table(table: TableId, opts: &TableOptions) -> Result<Vec<TableRow>> {
    specs(table, opts)?
        .iter()
        .map(|spec| spec.run(table, opts))
        .collect()
}
