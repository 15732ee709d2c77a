//! CSV emission and ingestion for spikes, signals, iterate logs, and reports.
//!
//! Numbers are written with the shortest decimal representation that parses
//! back to the identical value, so write/read round trips are bit-exact.

use std::path::Path;

use crate::baselines::FwSolution;
use crate::duality::GapReport;
use crate::error::{Error, Result};
use crate::measures::{SparseMeasure, Spike};
use crate::operators::{Grid, GridSignal, MultiChannelSignal};
use crate::real::Real;
use crate::solver::IterateLog;

fn parse<R: Real>(field: &str, context: &str) -> Result<R> {
    field.trim().parse::<R>().map_err(|_| Error::Parse {
        context: context.to_string(),
        message: format!("cannot parse {field:?} as a number"),
    })
}

fn parse_usize(field: &str, context: &str) -> Result<usize> {
    field.trim().parse::<usize>().map_err(|_| Error::Parse {
        context: context.to_string(),
        message: format!("cannot parse {field:?} as an index"),
    })
}

/// Write spike trains as `channel,position,amplitude` rows.
pub fn write_spikes_csv<R: Real>(path: &Path, measures: &[SparseMeasure<R>]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["channel", "position", "amplitude"])?;
    for (channel, measure) in measures.iter().enumerate() {
        for spike in measure.spikes() {
            writer.write_record([
                channel.to_string(),
                spike.position.to_string(),
                spike.amplitude.to_string(),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Read spike trains; channels beyond the stated count are an error.
pub fn read_spikes_csv<R: Real>(path: &Path, n_channels: usize) -> Result<Vec<SparseMeasure<R>>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut raw: Vec<Vec<Spike<R>>> = vec![Vec::new(); n_channels];
    for record in reader.records() {
        let record = record?;
        if record.len() != 3 {
            return Err(Error::Parse {
                context: path.display().to_string(),
                message: format!("expected 3 fields per spike row, got {}", record.len()),
            });
        }
        let channel = parse_usize(&record[0], "spike channel")?;
        if channel >= n_channels {
            return Err(Error::Parse {
                context: path.display().to_string(),
                message: format!("channel {channel} out of range (n = {n_channels})"),
            });
        }
        raw[channel].push(Spike::new(
            parse(&record[1], "spike position")?,
            parse(&record[2], "spike amplitude")?,
        ));
    }
    raw.into_iter().map(SparseMeasure::new).collect()
}

/// Write a multichannel signal as `omega,ch0[,ch1,...]` rows.
pub fn write_channels_csv<R: Real>(path: &Path, x: &MultiChannelSignal<R>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["omega".to_string()];
    header.extend((0..x.n_channels()).map(|i| format!("ch{i}")));
    writer.write_record(&header)?;
    let grid = x.grid();
    for k in 0..grid.count() {
        let mut row = vec![grid.node(k).to_string()];
        row.extend(x.channels().iter().map(|c| c.values()[k].to_string()));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Read a multichannel signal written by [`write_channels_csv`].
pub fn read_channels_csv<R: Real>(path: &Path) -> Result<MultiChannelSignal<R>> {
    let mut reader = csv::Reader::from_path(path)?;
    let n = reader.headers()?.len().saturating_sub(1);
    if n == 0 {
        return Err(Error::Parse {
            context: path.display().to_string(),
            message: "expected an omega column plus at least one channel".into(),
        });
    }
    let mut omegas: Vec<R> = Vec::new();
    let mut columns: Vec<Vec<R>> = vec![Vec::new(); n];
    for record in reader.records() {
        let record = record?;
        if record.len() != n + 1 {
            return Err(Error::Parse {
                context: path.display().to_string(),
                message: format!("row has {} fields, expected {}", record.len(), n + 1),
            });
        }
        omegas.push(parse(&record[0], "omega")?);
        for (i, column) in columns.iter_mut().enumerate() {
            column.push(parse(&record[i + 1], "channel value")?);
        }
    }
    let grid = grid_from_omegas(&omegas, path)?;
    let channels = columns
        .into_iter()
        .map(|values| GridSignal::from_values(grid, values))
        .collect::<Result<Vec<_>>>()?;
    MultiChannelSignal::new(channels)
}

/// Write a single mixture-style signal as `omega,b` rows.
pub fn write_mixture_csv<R: Real>(path: &Path, b: &GridSignal<R>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["omega", "b"])?;
    let grid = b.grid();
    for k in 0..grid.count() {
        writer.write_record([grid.node(k).to_string(), b.values()[k].to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Read a single-column signal (any column name is accepted).
pub fn read_mixture_csv<R: Real>(path: &Path) -> Result<GridSignal<R>> {
    let x = read_channels_csv(path)?;
    if x.n_channels() != 1 {
        return Err(Error::Parse {
            context: path.display().to_string(),
            message: format!("expected one value column, found {}", x.n_channels()),
        });
    }
    Ok(x.channel(0).clone())
}

/// Reconstruct the uniform grid from the omega column.
fn grid_from_omegas<R: Real>(omegas: &[R], path: &Path) -> Result<Grid<R>> {
    if omegas.len() < 2 {
        return Err(Error::Parse {
            context: path.display().to_string(),
            message: "need at least two rows to infer the grid".into(),
        });
    }
    let start = omegas[0];
    let step = (omegas[omegas.len() - 1] - start) / R::cast((omegas.len() - 1) as f64);
    let grid = Grid::new(start, step, omegas.len())?;
    for (k, &omega) in omegas.iter().enumerate() {
        if (omega - grid.node(k)).abs() > step * R::cast(1e-9) {
            return Err(Error::Parse {
                context: path.display().to_string(),
                message: format!("omega column is not uniform at row {k}"),
            });
        }
    }
    Ok(grid)
}

/// Write the iterate log as
/// `iter,fp_residual,feas_violation,mix_residual,active_total`.
pub fn write_iterate_log_csv<R: Real>(path: &Path, log: &IterateLog<R>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "iter",
        "fp_residual",
        "feas_violation",
        "mix_residual",
        "active_total",
    ])?;
    for row in &log.rows {
        writer.write_record([
            row.iter.to_string(),
            row.fp_residual.to_string(),
            row.feas_violation.to_string(),
            row.mix_residual.to_string(),
            row.active_total.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Write a gap report as a single `primal,dual,gap,max_violation` row.
pub fn write_gap_report_csv<R: Real>(path: &Path, report: &GapReport<R>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["primal", "dual", "gap", "max_violation"])?;
    writer.write_record([
        report.primal_value.to_string(),
        report.dual_value.to_string(),
        report.gap.to_string(),
        report.max_violation.to_string(),
    ])?;
    writer.flush()?;
    Ok(())
}

/// Write the Frank-Wolfe fit report:
/// `channel,n_spikes,residual,tv,cert_sup` (one row per channel; `residual`
/// is the shared mixture misfit).
pub fn write_fit_report_csv<R: Real>(
    path: &Path,
    solution: &FwSolution<R>,
    mixture_residual: R,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["channel", "n_spikes", "residual", "tv", "cert_sup"])?;
    for (channel, measure) in solution.measures.iter().enumerate() {
        writer.write_record([
            channel.to_string(),
            measure.len().to_string(),
            mixture_residual.to_string(),
            measure.tv_norm().to_string(),
            solution.cert_sups[channel].to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
