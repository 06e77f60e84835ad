//! CSV persistence for samples, chain traces, spatial panels and layouts.
//!
//! Writers take an optional `preamble` emitted as `# ...` lines ahead of the
//! header; the readers skip such lines. Floats are written in shortest
//! round-trip form, so equal inputs give byte-identical files.

use std::io::{Read, Write};

use crate::abc::{ChainOutput, PilotRow};
use crate::error::{Error, Result};
use crate::spatial::{FrechetPanel, SpatialLayout};
use crate::types::WeightedSample;

fn comment_lines<W: Write>(out: &mut W, preamble: Option<&str>) -> Result<()> {
    if let Some(text) = preamble {
        for line in text.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    Ok(())
}

fn reader<R: Read>(input: R, headers: bool) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(headers)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn parse_row(record: &csv::StringRecord, line: usize) -> Result<Vec<f64>> {
    record
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("row {line}: `{f}` is not a number")))
        })
        .collect()
}

/// Row-oriented writer for `iter, theta_1..theta_p, weight, rho, extras`.
pub struct SampleWriter<W: Write> {
    inner: csv::Writer<W>,
    p: usize,
    extras: usize,
}

impl<W: Write> SampleWriter<W> {
    pub fn new<S: AsRef<str>>(mut out: W, p: usize, extras: &[S], preamble: Option<&str>) -> Result<Self> {
        comment_lines(&mut out, preamble)?;
        let mut inner = csv::Writer::from_writer(out);
        let mut header = vec!["iter".to_string()];
        header.extend((1..=p).map(|k| format!("theta_{k}")));
        header.push("weight".into());
        header.push("rho".into());
        header.extend(extras.iter().map(|e| e.as_ref().to_string()));
        inner.write_record(&header)?;
        Ok(Self {
            inner,
            p,
            extras: extras.len(),
        })
    }

    pub fn row<S: AsRef<str>>(&mut self, iter: usize, theta: &[f64], weight: f64, rho: f64, extras: &[S]) -> Result<()> {
        crate::error::check_dim(self.p, theta.len())?;
        crate::error::check_dim(self.extras, extras.len())?;
        let mut rec = Vec::with_capacity(3 + self.p + self.extras);
        rec.push(iter.to_string());
        rec.extend(theta.iter().map(f64::to_string));
        rec.push(weight.to_string());
        rec.push(rho.to_string());
        rec.extend(extras.iter().map(|e| e.as_ref().to_string()));
        self.inner.write_record(&rec)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

/// Weighted samples, one row each, `iter` numbering them in order.
pub fn write_samples<W: Write>(out: W, samples: &[WeightedSample], preamble: Option<&str>) -> Result<W> {
    let p = samples.first().map_or(0, |s| s.theta.dim());
    let mut w = SampleWriter::new(out, p, &["seed_id"], preamble)?;
    for (i, s) in samples.iter().enumerate() {
        w.row(i, &s.theta.values, s.weight, s.discrepancy, &[s.seed_id.to_string()])?;
    }
    w.finish()
}

/// Full chain trace with the inflation factor, both discrepancies, the
/// acceptance flag, the branch taken and whether the row is burn-in.
pub fn write_trace<W: Write>(out: W, chain: &ChainOutput, preamble: Option<&str>) -> Result<W> {
    let p = chain.trace.first().map_or(0, |r| r.theta.len());
    let burn = chain.trace.len() - chain.samples.len();
    let mut w = SampleWriter::new(out, p, &["c", "rho_lazy", "accepted", "branch", "burn_in"], preamble)?;
    for (i, r) in chain.trace.iter().enumerate() {
        let branch = format!("{:?}", r.branch);
        let extras = [
            r.c.to_string(),
            r.rho_lazy.to_string(),
            (r.accepted as u8).to_string(),
            branch,
            ((i < burn) as u8).to_string(),
        ];
        w.row(r.iteration, &r.theta, 1.0 / r.c, r.rho, &extras)?;
    }
    w.finish()
}

/// Pilot-run table: every draw with its lazy value and gate outcome.
pub fn write_pilot<W: Write>(out: W, rows: &[PilotRow], preamble: Option<&str>) -> Result<W> {
    let p = rows.first().map_or(0, |r| r.theta.len());
    let mut w = SampleWriter::new(out, p, &["lazy_value", "accepted"], preamble)?;
    for (i, r) in rows.iter().enumerate() {
        w.row(i, &r.theta, 1.0, r.rho, &[r.lazy_value.to_string(), (r.accepted as u8).to_string()])?;
    }
    w.finish()
}

/// Named numeric columns of equal length.
pub fn write_columns<W: Write>(out: W, names: &[&str], columns: &[Vec<f64>], preamble: Option<&str>) -> Result<W> {
    crate::error::check_dim(names.len(), columns.len())?;
    let rows = columns.first().map_or(0, Vec::len);
    for c in columns {
        crate::error::check_dim(rows, c.len())?;
    }
    let mut out = out;
    comment_lines(&mut out, preamble)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(names)?;
    for r in 0..rows {
        w.write_record(columns.iter().map(|c| c[r].to_string()))?;
    }
    w.flush()?;
    w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

/// Replicates in rows, sites in columns `site_1..site_D`.
pub fn write_panel<W: Write>(out: W, panel: &FrechetPanel, preamble: Option<&str>) -> Result<W> {
    let names: Vec<String> = (1..=panel.sites()).map(|k| format!("site_{k}")).collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let columns: Vec<Vec<f64>> = (0..panel.sites()).map(|k| panel.column(k)).collect();
    write_columns(out, &names, &columns, preamble)
}

pub fn read_panel<R: Read>(input: R) -> Result<FrechetPanel> {
    let mut rows = Vec::new();
    for (i, rec) in reader(input, true).records().enumerate() {
        rows.push(parse_row(&rec?, i + 1)?);
    }
    FrechetPanel::new(rows)
}

/// One site per row, columns `x, y`.
pub fn write_layout<W: Write>(out: W, layout: &SpatialLayout, preamble: Option<&str>) -> Result<W> {
    let dim = layout.locations()[0].len();
    let names: Vec<String> = match dim {
        2 => vec!["x".into(), "y".into()],
        _ => (1..=dim).map(|k| format!("x_{k}")).collect(),
    };
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let columns: Vec<Vec<f64>> = (0..dim).map(|k| layout.locations().iter().map(|l| l[k]).collect()).collect();
    write_columns(out, &names, &columns, preamble)
}

pub fn read_layout<R: Read>(input: R) -> Result<SpatialLayout> {
    let mut locs = Vec::new();
    for (i, rec) in reader(input, true).records().enumerate() {
        locs.push(parse_row(&rec?, i + 1)?);
    }
    SpatialLayout::new(locs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::NoiseSeed;
    use crate::spatial::{simulate_maxstable, CorrelationParams};
    use crate::types::ParameterVector;

    #[test]
    fn panel_and_layout_round_trip() {
        let layout = SpatialLayout::uniform_square(5, 3.0, NoiseSeed::new(1, 0)).unwrap();
        let p = CorrelationParams::range_smoothness(1.5, 0.8).unwrap();
        let panel = simulate_maxstable(&layout, &p, 7, NoiseSeed::new(2, 0)).unwrap();
        let bytes = write_panel(Vec::new(), &panel, Some("config abc\nseed 2")).unwrap();
        assert!(bytes.starts_with(b"# config abc\n# seed 2\nsite_1,"));
        assert_eq!(read_panel(bytes.as_slice()).unwrap(), panel);
        let bytes = write_layout(Vec::new(), &layout, None).unwrap();
        assert_eq!(read_layout(bytes.as_slice()).unwrap(), layout);
    }

    #[test]
    fn sample_header_and_rows() {
        let s = WeightedSample {
            theta: ParameterVector::unnamed(vec![0.5, -1.25]),
            weight: 0.25,
            discrepancy: 3.0,
            seed_id: 9,
        };
        let bytes = write_samples(Vec::new(), &[s], None).unwrap();
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "iter,theta_1,theta_2,weight,rho,seed_id\n0,0.5,-1.25,0.25,3,9\n"
        );
    }

    #[test]
    fn bad_numbers_are_reported() {
        let err = read_panel("site_1,site_2\n1,x\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("row 1"));
    }

    #[test]
    fn extras_must_match_header() {
        let mut w = SampleWriter::new(Vec::new(), 1, &["a"], None).unwrap();
        assert!(w.row(0, &[1.0], 1.0, 0.0, &["1", "2"]).is_err());
    }
}
