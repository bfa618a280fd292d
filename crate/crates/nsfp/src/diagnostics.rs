//! diagnostics.csv: one row per step, floats in shortest round-trip form.

use std::io::{Read, Write};

use nsfp_core::scheme::StepRecord;
use serde::{Deserialize, Serialize};

pub const HEADER: [&str; 16] = [
    "step",
    "t",
    "kinetic",
    "internal",
    "entropy",
    "interaction",
    "dissipation",
    "work",
    "total",
    "residual",
    "pass",
    "mass_rho_err",
    "mass_psi_err",
    "min_rho",
    "min_psi",
    "picard_iters",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub step: usize,
    pub t: f64,
    pub kinetic: f64,
    pub internal: f64,
    pub entropy: f64,
    pub interaction: f64,
    pub dissipation: f64,
    pub work: f64,
    pub total: f64,
    pub residual: f64,
    pub pass: u8,
    pub mass_rho_err: f64,
    pub mass_psi_err: f64,
    pub min_rho: f64,
    pub min_psi: f64,
    pub picard_iters: usize,
}

impl From<&StepRecord> for Row {
    fn from(r: &StepRecord) -> Self {
        let e = &r.energy;
        let c = &r.conservation;
        Row {
            step: r.step,
            t: r.t,
            kinetic: e.kinetic,
            internal: e.internal,
            entropy: e.entropy,
            interaction: e.interaction,
            dissipation: e.dissipation,
            work: e.work,
            total: e.total,
            residual: e.residual,
            pass: u8::from(e.pass),
            mass_rho_err: c.mass_rho_err,
            mass_psi_err: c.mass_psi_err,
            min_rho: c.min_rho,
            min_psi: c.min_psi,
            picard_iters: r.picard_iters,
        }
    }
}

/// Streams rows to a CSV sink; the header is written on creation, so an
/// empty run leaves a header-only file.
pub struct DiagnosticsWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> DiagnosticsWriter<W> {
    pub fn new(sink: W) -> csv::Result<Self> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
        inner.write_record(HEADER)?;
        Ok(DiagnosticsWriter { inner })
    }

    pub fn write(&mut self, row: &Row) -> csv::Result<()> {
        self.inner.serialize(row)
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

pub fn write_diagnostics<W: Write>(sink: W, records: &[StepRecord]) -> csv::Result<()> {
    let mut w = DiagnosticsWriter::new(sink)?;
    for r in records {
        w.write(&Row::from(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows back; rejects a file whose header differs from [`HEADER`].
pub fn read_diagnostics<R: Read>(source: R) -> csv::Result<Vec<Row>> {
    let mut r = csv::Reader::from_reader(source);
    let header = r.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(csv::Error::from(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("unexpected diagnostics header: {}", header.iter().collect::<Vec<_>>().join(",")),
        )));
    }
    r.deserialize().collect()
}
