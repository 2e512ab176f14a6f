//! Long-format delimited output of study tables.
//!
//! Columns (one row per cell):
//!
//! | column | meaning |
//! |---|---|
//! | scenario_id | position of the scenario in the grid |
//! | marginal | normal, exponential, laplace, asymmetric_laplace |
//! | al_kappa | asymmetry of the asymmetric Laplace, empty otherwise |
//! | sigma1_sq, sigma2_sq, rho | covariance of the pairs |
//! | n1, n2, n3 | complete pairs, first-only, second-only |
//! | mu1, delta | first-arm mean and shift of the second arm |
//! | method | Tp, T, T_LS, t3 |
//! | alpha, nsim, B | nominal level, simulated datasets, permutation replicates |
//! | rejections, rejection_rate, mc_stderr | empty for failed cells |
//! | status | `ok` or `failed: <reason>` |
//! | root | covariance square root used by the generator (always `symmetric`) |
//!
//! Wall-clock runtimes are written separately by [`emit_timing`] so that the
//! plot data is byte-identical across runs and thread counts.

use super::{CellOutcome, CellResult, Method, StudyTable};
use crate::error::{Error, Result};
use crate::lab::{CovarianceSpec, Marginal, ScenarioConfig};
use std::io::{Read, Write};

pub const PLOT_COLUMNS: [&str; 20] = [
    "scenario_id",
    "marginal",
    "al_kappa",
    "sigma1_sq",
    "sigma2_sq",
    "rho",
    "n1",
    "n2",
    "n3",
    "mu1",
    "delta",
    "method",
    "alpha",
    "nsim",
    "B",
    "rejections",
    "rejection_rate",
    "mc_stderr",
    "status",
    "root",
];

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
        other => Error::Parse(format!("{other:?}")),
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn emit_plot_data<W: Write>(table: &StudyTable, out: W) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::InvalidParameter("study table is empty".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PLOT_COLUMNS).map_err(csv_err)?;
    for c in table.cells() {
        let s = &c.scenario;
        let (family, kappa) = match s.marginal {
            Marginal::Normal => ("normal", None),
            Marginal::Exponential => ("exponential", None),
            Marginal::Laplace => ("laplace", None),
            Marginal::AsymmetricLaplace { kappa } => ("asymmetric_laplace", Some(kappa)),
        };
        let status = match &c.outcome {
            CellOutcome::Done { .. } => "ok".to_string(),
            CellOutcome::Failed { reason } => format!("failed: {reason}"),
        };
        w.write_record([
            c.scenario_id.to_string(),
            family.to_string(),
            opt(kappa),
            s.covariance.sigma1_sq.to_string(),
            s.covariance.sigma2_sq.to_string(),
            s.covariance.rho.to_string(),
            s.n1.to_string(),
            s.n2.to_string(),
            s.n3.to_string(),
            s.mu1.to_string(),
            s.delta.to_string(),
            c.method.label().to_string(),
            c.alpha.to_string(),
            c.nsim.to_string(),
            c.replicates.to_string(),
            opt(c.rejections()),
            opt(c.rejection_rate()),
            opt(c.mc_stderr()),
            status,
            "symmetric".to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-cell wall-clock runtimes: `scenario_id,method,runtime_ms`.
pub fn emit_timing<W: Write>(table: &StudyTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario_id", "method", "runtime_ms"])
        .map_err(csv_err)?;
    for row in &table.rows {
        w.write_record([
            row.cell.scenario_id.to_string(),
            row.cell.method.label().to_string(),
            format!("{:.3}", row.runtime.as_secs_f64() * 1e3),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Read back the cells written by [`emit_plot_data`].
pub fn parse_plot_data<R: Read>(input: R) -> Result<Vec<CellResult>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.iter().ne(PLOT_COLUMNS.iter().copied()) {
        return Err(Error::Parse(format!("unexpected header {headers:?}")));
    }
    let mut cells = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let num = |k: usize| -> Result<f64> {
            field(k)
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {line}, column {}: {e}", PLOT_COLUMNS[k])))
        };
        let count = |k: usize| -> Result<usize> {
            field(k)
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("line {line}, column {}: {e}", PLOT_COLUMNS[k])))
        };
        let marginal = match field(1) {
            "normal" => Marginal::Normal,
            "exponential" => Marginal::Exponential,
            "laplace" => Marginal::Laplace,
            "asymmetric_laplace" => Marginal::AsymmetricLaplace { kappa: num(2)? },
            other => return Err(Error::Parse(format!("line {line}: unknown marginal {other:?}"))),
        };
        let status = field(18);
        let outcome = if status == "ok" {
            CellOutcome::Done { rejections: count(15)? }
        } else if let Some(reason) = status.strip_prefix("failed: ") {
            CellOutcome::Failed {
                reason: reason.to_string(),
            }
        } else {
            return Err(Error::Parse(format!("line {line}: bad status {status:?}")));
        };
        cells.push(CellResult {
            scenario_id: count(0)?,
            scenario: ScenarioConfig {
                marginal,
                covariance: CovarianceSpec {
                    sigma1_sq: num(3)?,
                    sigma2_sq: num(4)?,
                    rho: num(5)?,
                },
                n1: count(6)?,
                n2: count(7)?,
                n3: count(8)?,
                mu1: num(9)?,
                delta: num(10)?,
            },
            method: field(11).parse::<Method>()?,
            alpha: num(12)?,
            nsim: count(13)?,
            replicates: count(14)?,
            outcome,
        });
    }
    Ok(cells)
}
