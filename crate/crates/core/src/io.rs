//! CSV and JSON serialization of amplitudes, cuts, scans and count records.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::{CountsMode, CountsRecord};
use crate::grid::UniformGrid;
use crate::metrology::{FisherScan, RatioCurve};
use crate::spectra::{Sampling, SpectralAmplitude};
use crate::wigner::WignerCut;

/// Relative spacing tolerance for ingested frequency grids.
pub const GRID_SPACING_TOL: f64 = 1e-6;

pub const AMPLITUDE_HEADER: [&str; 3] = ["omega_rad_per_ps", "re", "im"];
pub const CUT_HEADER: [&str; 4] = ["tau_ps", "w", "w1", "w2"];
pub const FISHER_HEADER: [&str; 2] = ["tau_ps", "fi"];
pub const PC_HEADER: [&str; 2] = ["tau_ps", "pc"];
pub const RATIO_HEADER: [&str; 2] = ["v", "ratio"];
pub const COUNTS_HEADER: [&str; 3] = ["tau_ps", "trials", "coincidences"];

fn columns<W: Write>(
    out: W,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn reader<R: Read>(input: R, header: &[&str]) -> Result<csv::Reader<R>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let got: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if got != header {
        return Err(Error::Parse(format!(
            "expected header {}, got {}",
            header.join(","),
            got.join(",")
        )));
    }
    Ok(r)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    let s = rec
        .get(i)
        .ok_or_else(|| Error::Parse(format!("row {line}: missing column {i}")))?;
    s.parse()
        .map_err(|_| Error::Parse(format!("row {line}: cannot parse {s:?}")))
}

pub fn write_amplitude_csv<W: Write>(out: W, amp: &SpectralAmplitude) -> Result<()> {
    let g = amp.grid();
    columns(
        out,
        &AMPLITUDE_HEADER,
        amp.values()
            .iter()
            .enumerate()
            .map(|(i, v)| vec![g.at(i).to_string(), v.re.to_string(), v.im.to_string()]),
    )
}

/// Uniform frequency grid and complex samples from `omega_rad_per_ps,re,im` rows.
pub fn read_amplitude_samples<R: Read>(input: R) -> Result<(UniformGrid, Vec<Complex64>)> {
    let mut r = reader(input, &AMPLITUDE_HEADER)?;
    let (mut omega, mut values) = (Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        omega.push(field::<f64>(&rec, 0, line + 2)?);
        values.push(Complex64::new(
            field(&rec, 1, line + 2)?,
            field(&rec, 2, line + 2)?,
        ));
    }
    let grid = UniformGrid::from_points(&omega, GRID_SPACING_TOL)?;
    Ok((grid, values))
}

/// Tabulated amplitude, normalized on ingest.
pub fn read_amplitude_csv<R: Read>(input: R) -> Result<SpectralAmplitude> {
    let (grid, values) = read_amplitude_samples(input)?;
    SpectralAmplitude::from_samples(grid, values, Sampling::Point)
}

pub fn write_cut_csv<W: Write>(out: W, cut: &WignerCut) -> Result<()> {
    columns(
        out,
        &CUT_HEADER,
        (0..cut.len()).map(|i| {
            vec![
                cut.tau_grid[i].to_string(),
                cut.w[i].to_string(),
                cut.w1[i].to_string(),
                cut.w2[i].to_string(),
            ]
        }),
    )
}

pub fn write_fisher_csv<W: Write>(out: W, scan: &FisherScan) -> Result<()> {
    columns(
        out,
        &FISHER_HEADER,
        scan.tau_grid
            .iter()
            .zip(&scan.f_values)
            .map(|(t, f)| vec![t.to_string(), f.to_string()]),
    )
}

pub fn write_pc_csv<W: Write>(out: W, tau: &[f64], pc: &[f64]) -> Result<()> {
    if tau.len() != pc.len() {
        return Err(Error::Grid(
            "delay and probability columns differ in length".into(),
        ));
    }
    columns(
        out,
        &PC_HEADER,
        tau.iter()
            .zip(pc)
            .map(|(t, p)| vec![t.to_string(), p.to_string()]),
    )
}

pub fn write_ratio_csv<W: Write>(out: W, curve: &RatioCurve) -> Result<()> {
    columns(
        out,
        &RATIO_HEADER,
        curve
            .v_grid
            .iter()
            .zip(&curve.ratios)
            .map(|(v, r)| vec![v.to_string(), r.to_string()]),
    )
}

pub fn write_counts_csv<W: Write>(out: W, rec: &CountsRecord) -> Result<()> {
    rec.validate()?;
    columns(
        out,
        &COUNTS_HEADER,
        (0..rec.tau_grid.len()).map(|i| {
            vec![
                rec.tau_grid[i].to_string(),
                rec.trials[i].to_string(),
                rec.coincidences[i].to_string(),
            ]
        }),
    )
}

/// Counts from `tau_ps,trials,coincidences` rows (lab data or a simulated record).
pub fn read_counts_csv<R: Read>(input: R) -> Result<CountsRecord> {
    let mut r = reader(input, &COUNTS_HEADER)?;
    let mut rec = CountsRecord {
        tau_grid: vec![],
        trials: vec![],
        coincidences: vec![],
        seed: None,
        mode: CountsMode::Binomial,
    };
    for (line, row) in r.records().enumerate() {
        let row = row?;
        rec.tau_grid.push(field(&row, 0, line + 2)?);
        rec.trials.push(field(&row, 1, line + 2)?);
        rec.coincidences.push(field(&row, 2, line + 2)?);
    }
    rec.validate()?;
    Ok(rec)
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}
