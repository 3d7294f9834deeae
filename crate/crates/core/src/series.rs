//! CSV traces and convergence tables, plus gnuplot scripts for them.
//!
//! Numbers are written with 17 significant digits (`{:.16e}`), which
//! round-trips every `f64`. Missing optional values are empty fields.

use std::fmt::Write as _;
use std::path::Path;

use crate::checkpoint::write_atomic;
use crate::error::{Error, Result};
use crate::experiments::{ConvergenceRow, FitKind, FitResult};
use crate::model::Observables;

pub const TRACE_HEADER: [&str; 7] = ["t", "energy", "modified_energy", "roughness", "slope", "char_length", "mass_mean"];
pub const CONVERGENCE_HEADER: [&str; 6] = ["N", "h", "dt", "err_l1", "err_l2", "err_linf"];

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn to_csv<const K: usize>(header: [&str; K], rows: impl Iterator<Item = [String; K]>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::invalid(format!("csv buffer: {e}")))
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Csv { line, message: e.to_string() }
}

pub fn trace_csv(rows: &[Observables]) -> Result<Vec<u8>> {
    to_csv(
        TRACE_HEADER,
        rows.iter().map(|o| {
            [
                num(o.t),
                num(o.energy),
                opt(o.modified_energy),
                num(o.roughness),
                num(o.slope),
                opt(o.char_length),
                num(o.mass_mean),
            ]
        }),
    )
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> Result<Vec<u8>> {
    to_csv(
        CONVERGENCE_HEADER,
        rows.iter().map(|r| [r.n.to_string(), num(r.h), num(r.dt), num(r.err_l1), num(r.err_l2), num(r.err_linf)]),
    )
}

pub fn write_trace(rows: &[Observables], path: &Path) -> Result<()> {
    write_atomic(path, &trace_csv(rows)?)
}

pub fn write_convergence(rows: &[ConvergenceRow], path: &Path) -> Result<()> {
    write_atomic(path, &convergence_csv(rows)?)
}

/// A parsed numeric CSV table; empty cells are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn parse(text: &[u8]) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text);
        let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let row = rec
                .iter()
                .map(|cell| {
                    let cell = cell.trim();
                    if cell.is_empty() {
                        Ok(None)
                    } else {
                        cell.parse::<f64>()
                            .map(Some)
                            .map_err(|e| Error::Csv { line, message: format!("bad number {cell:?}: {e}") })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read(path)?)
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Csv { line: 1, message: format!("no column named {name:?}") })
    }

    /// Rows where both columns are present.
    pub fn pairs(&self, x: &str, y: &str) -> Result<(Vec<f64>, Vec<f64>)> {
        let (ix, iy) = (self.column(x)?, self.column(y)?);
        Ok(self.rows.iter().filter_map(|r| Some((r[ix]?, r[iy]?))).unzip())
    }
}

fn require(row: &[Option<f64>], i: usize, line: usize) -> Result<f64> {
    row[i].ok_or_else(|| Error::Csv { line, message: format!("missing value in column {i}") })
}

pub fn read_trace(path: &Path) -> Result<Vec<Observables>> {
    parse_trace(&std::fs::read(path)?)
}

pub fn parse_trace(text: &[u8]) -> Result<Vec<Observables>> {
    let t = Table::parse(text)?;
    if t.header != TRACE_HEADER {
        return Err(Error::Csv { line: 1, message: format!("unexpected trace header {:?}", t.header) });
    }
    t.rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let line = i + 2;
            Ok(Observables {
                t: require(r, 0, line)?,
                energy: require(r, 1, line)?,
                modified_energy: r[2],
                roughness: require(r, 3, line)?,
                slope: require(r, 4, line)?,
                char_length: r[5],
                mass_mean: require(r, 6, line)?,
            })
        })
        .collect()
}

pub fn read_convergence(path: &Path) -> Result<Vec<ConvergenceRow>> {
    parse_convergence(&std::fs::read(path)?)
}

pub fn parse_convergence(text: &[u8]) -> Result<Vec<ConvergenceRow>> {
    let t = Table::parse(text)?;
    if t.header != CONVERGENCE_HEADER {
        return Err(Error::Csv { line: 1, message: format!("unexpected convergence header {:?}", t.header) });
    }
    t.rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let line = i + 2;
            Ok(ConvergenceRow {
                n: require(r, 0, line)? as usize,
                h: require(r, 1, line)?,
                dt: require(r, 2, line)?,
                err_l1: require(r, 3, line)?,
                err_l2: require(r, 4, line)?,
                err_linf: require(r, 5, line)?,
            })
        })
        .collect()
}

/// Gnuplot commands overlaying `fit` on column `column` of `data`.
pub fn fit_plot_script(data: &Path, column: &str, fit: &FitResult) -> String {
    let idx = TRACE_HEADER.iter().position(|h| *h == column).map_or(2, |i| i + 1);
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key top left");
    let _ = writeln!(s, "set xlabel 't'");
    let _ = writeln!(s, "set ylabel '{column}'");
    let _ = writeln!(s, "set logscale x");
    let formula = match fit.kind {
        FitKind::Energy => format!("{:.10e}*log(x) + {:.10e}", fit.a, fit.b),
        FitKind::Roughness | FitKind::Slope => {
            let _ = writeln!(s, "set logscale y");
            format!("{:.10e}*x**{:.10e}", fit.a, fit.b)
        }
    };
    let _ = writeln!(s, "f(x) = {formula}");
    let _ = writeln!(
        s,
        "plot '{}' using 1:{idx} skip 1 with points pt 7 ps 0.4 title '{column}', \\\n     [{}:{}] f(x) with lines lw 2 title 'fit'",
        data.display(),
        fit.window.0,
        fit.window.1,
    );
    s
}

/// Gnuplot commands for error against `N` on log-log axes.
pub fn convergence_plot_script(data: &Path) -> String {
    format!(
        "set datafile separator ','\nset logscale xy\nset xlabel 'N'\nset ylabel 'error'\n\
         plot '{d}' using 1:4 skip 1 with linespoints title 'L1', \\\n     \
         '{d}' using 1:5 skip 1 with linespoints title 'L2', \\\n     \
         '{d}' using 1:6 skip 1 with linespoints title 'Linf'\n",
        d = data.display()
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(t: f64) -> Observables {
        Observables {
            t,
            energy: -1.0 / 3.0 - t,
            modified_energy: (t > 1.0).then_some(std::f64::consts::PI),
            roughness: 0.1 * t.sqrt(),
            slope: 1e-300,
            char_length: None,
            mass_mean: -0.0,
        }
    }

    #[test]
    fn empty_trace_is_header_only() {
        let b = trace_csv(&[]).unwrap();
        assert_eq!(String::from_utf8(b.clone()).unwrap(), format!("{}\n", TRACE_HEADER.join(",")));
        assert!(parse_trace(&b).unwrap().is_empty());
    }

    #[test]
    fn trace_round_trips_exactly() {
        let rows: Vec<_> = [0.5, 2.0, 1e5].into_iter().map(obs).collect();
        let b = trace_csv(&rows).unwrap();
        let text = String::from_utf8(b.clone()).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().nth(1).unwrap().starts_with("5.0000000000000000e-1,"));
        let back = parse_trace(&b).unwrap();
        assert_eq!(back.len(), 3);
        for (a, r) in back.iter().zip(&rows) {
            assert_eq!(a.t.to_bits(), r.t.to_bits());
            assert_eq!(a.energy.to_bits(), r.energy.to_bits());
            assert_eq!(a.modified_energy, r.modified_energy);
            assert_eq!(a.char_length, None);
            assert_eq!(a.slope, 1e-300);
        }
        assert_eq!(trace_csv(&back).unwrap(), b);
    }

    #[test]
    fn one_row_trace_is_two_lines() {
        let b = trace_csv(&[obs(3.0)]).unwrap();
        assert_eq!(String::from_utf8(b.clone()).unwrap().lines().count(), 2);
        let t = Table::parse(&b).unwrap();
        let (x, y) = t.pairs("t", "energy").unwrap();
        assert_eq!(x, vec![3.0]);
        assert_eq!(y, vec![-1.0 / 3.0 - 3.0]);
    }

    #[test]
    fn bad_cells_report_lines() {
        let text = b"t,energy\n1.0,2.0\n3.0,abc\n";
        match Table::parse(text) {
            Err(Error::Csv { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(parse_trace(b"t,energy\n").is_err());
    }
}
