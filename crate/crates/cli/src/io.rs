//! CSV formats. Every file has a header row, uses `.` as the decimal mark
//! and ends rows with `\n`. Reals are written with 17 significant digits,
//! which round-trips every `f64` exactly.

use std::fs::File;
use std::path::Path;

use nalgebra::DMatrix;
use sbbp_core::construct::{Atom, BetaProcessDraw, FeatureAllocation};
use sbbp_core::mcmc::SampleArchive;
use sbbp_core::model::{Dataset, FactorSnapshot};
use sbbp_core::truncation::{BoundCurve, GridPoint};
use sbbp_core::RoundIndex;

use crate::error::{CliError, Result};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    let file = File::create(path).map_err(CliError::io(path))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .flexible(false)
        .from_writer(file))
}

/// Writes a header and records.
pub fn write_rows<I, R>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(CliError::csv(path))?;
    for row in rows {
        w.write_record(row).map_err(CliError::csv(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

/// Header and records of a CSV file.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut r = csv::ReaderBuilder::new().from_path(path).map_err(CliError::csv(path))?;
    let header = r
        .headers()
        .map_err(CliError::csv(path))?
        .iter()
        .map(String::from)
        .collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
        .collect::<std::result::Result<_, _>>()
        .map_err(CliError::csv(path))?;
    Ok(Table { header, rows })
}

fn parse<T: std::str::FromStr>(path: &Path, row: usize, field: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| CliError::format(path, format!("row {}: cannot parse {field:?}", row + 1)))
}

fn expect_header(path: &Path, table: &Table, expected: &[&str]) -> Result<()> {
    if table.header.iter().map(String::as_str).ne(expected.iter().copied()) {
        return Err(CliError::format(
            path,
            format!(
                "expected header {}, found {}",
                expected.join(","),
                table.header.join(",")
            ),
        ));
    }
    Ok(())
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}{i}"))
}

/// One atom per row: `theta,pi,round`.
pub fn write_draw(path: &Path, draw: &BetaProcessDraw) -> Result<()> {
    let header = ["theta", "pi", "round"].map(String::from);
    write_rows(
        path,
        &header,
        draw.atoms
            .iter()
            .map(|a| [fmt_f64(a.theta), fmt_f64(a.pi), a.round.get().to_string()]),
    )
}

pub fn read_atoms(path: &Path) -> Result<Vec<Atom>> {
    let table = read_table(path)?;
    expect_header(path, &table, &["theta", "pi", "round"])?;
    table
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let round: u32 = parse(path, i, &row[2])?;
            Ok(Atom {
                theta: parse(path, i, &row[0])?,
                pi: parse(path, i, &row[1])?,
                round: RoundIndex::new(round).map_err(|e| CliError::format(path, format!("row {}: {e}", i + 1)))?,
            })
        })
        .collect()
}

/// One observation per row: `row`, then a 0/1 column `atom_<id>` per atom.
pub fn write_allocation(path: &Path, z: &FeatureAllocation) -> Result<()> {
    let header: Vec<String> = std::iter::once("row".to_string())
        .chain(z.atom_ids().iter().map(|id| format!("atom_{id}")))
        .collect();
    write_rows(
        path,
        &header,
        (0..z.num_rows()).map(|r| {
            std::iter::once(r.to_string()).chain(z.row(r).iter().map(|&b| if b { "1" } else { "0" }.to_string()))
        }),
    )
}

pub fn read_allocation(path: &Path) -> Result<FeatureAllocation> {
    let table = read_table(path)?;
    if table.header.first().map(String::as_str) != Some("row") {
        return Err(CliError::format(path, "first column must be `row`"));
    }
    let ids = table.header[1..]
        .iter()
        .map(|h| {
            h.strip_prefix("atom_")
                .and_then(|id| id.parse().ok())
                .ok_or_else(|| CliError::format(path, format!("bad atom column {h:?}")))
        })
        .collect::<Result<Vec<usize>>>()?;
    let mut z = FeatureAllocation::new(ids, table.rows.len());
    for (r, row) in table.rows.iter().enumerate() {
        for (k, v) in row[1..].iter().enumerate() {
            match v.as_str() {
                "0" => {}
                "1" => z.set(r, k, true),
                other => {
                    return Err(CliError::format(
                        path,
                        format!("row {}: expected 0 or 1, got {other:?}", r + 1),
                    ))
                }
            }
        }
    }
    Ok(z)
}

/// `R,theorem3,corollary1,legacy`.
pub fn write_bounds(path: &Path, curve: &BoundCurve) -> Result<()> {
    let header = ["R", "theorem3", "corollary1", "legacy"].map(String::from);
    write_rows(
        path,
        &header,
        curve.points.iter().map(|p| {
            [
                p.rounds_kept.to_string(),
                fmt_f64(p.theorem3),
                fmt_f64(p.corollary1),
                fmt_f64(p.legacy),
            ]
        }),
    )
}

/// `alpha,gamma,M,l1_gap`.
pub fn write_grid(path: &Path, grid: &[GridPoint]) -> Result<()> {
    let header = ["alpha", "gamma", "M", "l1_gap"].map(String::from);
    write_rows(
        path,
        &header,
        grid.iter().map(|g| {
            [
                fmt_f64(g.alpha),
                fmt_f64(g.gamma),
                g.draws.to_string(),
                fmt_f64(g.l1_gap),
            ]
        }),
    )
}

/// Writes each column of `m` as a row with columns `<prefix>0, <prefix>1, ...`.
pub fn write_columns(path: &Path, prefix: &str, m: &DMatrix<f64>) -> Result<()> {
    let header: Vec<String> = numbered(prefix, m.nrows()).collect();
    write_rows(
        path,
        &header,
        m.column_iter()
            .map(|c| c.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>()),
    )
}

/// Inverse of [`write_columns`]: rows of the file become columns.
pub fn read_columns(path: &Path, prefix: &str) -> Result<DMatrix<f64>> {
    let table = read_table(path)?;
    let dim = table.header.len();
    let expected: Vec<String> = numbered(prefix, dim).collect();
    expect_header(path, &table, &expected.iter().map(String::as_str).collect::<Vec<_>>())?;
    let mut m = DMatrix::zeros(dim, table.rows.len());
    for (n, row) in table.rows.iter().enumerate() {
        for (d, v) in row.iter().enumerate() {
            m[(d, n)] = parse(path, n, v)?;
        }
    }
    Ok(m)
}

/// Observations, one per row: `y_0, ..., y_{D-1}`.
pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    write_columns(path, "y_", data.y())
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let y = read_columns(path, "y_")?;
    Dataset::new(y).map_err(|e| CliError::format(path, e.to_string()))
}

/// Indicator matrix `Z` (`K × N`), one observation per row: `z_0, ..., z_{K-1}`.
pub fn write_indicators(path: &Path, z: &DMatrix<bool>) -> Result<()> {
    let header: Vec<String> = numbered("z_", z.nrows()).collect();
    write_rows(
        path,
        &header,
        z.column_iter().map(|c| {
            c.iter()
                .map(|&b| if b { "1" } else { "0" }.to_string())
                .collect::<Vec<_>>()
        }),
    )
}

/// One factor per row: `factor,pi,theta_0,...,theta_{D-1}`.
pub fn write_loadings(path: &Path, theta: &DMatrix<f64>, pis: &[f64]) -> Result<()> {
    let header: Vec<String> = ["factor".to_string(), "pi".to_string()]
        .into_iter()
        .chain(numbered("theta_", theta.nrows()))
        .collect();
    write_rows(
        path,
        &header,
        theta.column_iter().zip(pis).enumerate().map(|(k, (col, &pi))| {
            [k.to_string(), fmt_f64(pi)]
                .into_iter()
                .chain(col.iter().map(|&v| fmt_f64(v)))
                .collect::<Vec<_>>()
        }),
    )
}

/// Loadings (`D × K`) and factor weights from [`write_loadings`].
pub fn read_loadings(path: &Path) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let table = read_table(path)?;
    let dim = table.header.len().saturating_sub(2);
    let mut expected = vec!["factor".to_string(), "pi".to_string()];
    expected.extend(numbered("theta_", dim));
    expect_header(path, &table, &expected.iter().map(String::as_str).collect::<Vec<_>>())?;
    let mut theta = DMatrix::zeros(dim, table.rows.len());
    let mut pis = Vec::with_capacity(table.rows.len());
    for (k, row) in table.rows.iter().enumerate() {
        pis.push(parse(path, k, &row[1])?);
        for d in 0..dim {
            theta[(d, k)] = parse(path, k, &row[d + 2])?;
        }
    }
    Ok((theta, pis))
}

/// Sample archive: `iteration,alpha,gamma,T,noise_var,log_likelihood`, then
/// `pi_k,round_k` for each observed atom. Rows with fewer atoms leave the
/// trailing columns empty.
pub fn write_samples(path: &Path, archive: &SampleArchive<FactorSnapshot>) -> Result<()> {
    let widest = archive.records.iter().map(|r| r.num_observed()).max().unwrap_or(0);
    let mut header: Vec<String> = ["iteration", "alpha", "gamma", "T", "noise_var", "log_likelihood"]
        .map(String::from)
        .to_vec();
    for k in 0..widest {
        header.push(format!("pi_{k}"));
        header.push(format!("round_{k}"));
    }
    write_rows(
        path,
        &header,
        archive.records.iter().map(|r| {
            let (noise, ll) = r.model.as_ref().map_or((String::new(), String::new()), |m| {
                (fmt_f64(m.noise_var), fmt_f64(m.log_likelihood))
            });
            let mut row = vec![
                r.iteration.to_string(),
                fmt_f64(r.alpha),
                fmt_f64(r.gamma),
                r.num_observed().to_string(),
                noise,
                ll,
            ];
            for (pi, d) in r.pis.iter().zip(&r.rounds) {
                row.push(fmt_f64(*pi));
                row.push(d.to_string());
            }
            row.resize(header.len(), String::new());
            row
        }),
    )
}

/// Loadings of every observed factor in every retained sample:
/// `iteration,factor,theta_0,...,theta_{D-1}`.
pub fn write_loading_archive(path: &Path, archive: &SampleArchive<FactorSnapshot>, dim: usize) -> Result<()> {
    let header: Vec<String> = ["iteration".to_string(), "factor".to_string()]
        .into_iter()
        .chain(numbered("theta_", dim))
        .collect();
    let rows = archive.records.iter().flat_map(|r| {
        let loadings = r
            .model
            .as_ref()
            .map(|m| m.loadings.clone())
            .unwrap_or_else(|| DMatrix::zeros(dim, 0));
        (0..loadings.ncols())
            .map(|k| {
                [r.iteration.to_string(), k.to_string()]
                    .into_iter()
                    .chain(loadings.column(k).iter().map(|&v| fmt_f64(v)))
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    });
    write_rows(path, &header, rows)
}
