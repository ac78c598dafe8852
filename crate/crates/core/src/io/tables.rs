//! CSV tables of error norms, convergence rates and strain series.
//!
//! Numbers are written as `{:.16e}`, which round-trips every `f64`
//! exactly; absent values are empty fields.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::experiments::{ConvergenceRow, RateRow};

pub const ERROR_HEADER: [&str; 7] = ["m", "N", "err_u_h01", "err_u_l2", "err_v_h01", "err_v_l2", "err_p_l2"];
pub const RATE_HEADER: [&str; 7] = [
    "m_coarse",
    "m_fine",
    "rate_u_h01",
    "rate_u_l2",
    "rate_v_h01",
    "rate_v_l2",
    "rate_p_l2",
];

/// One parsed line of an error table; failed rows read back as NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorLine {
    pub m: u32,
    pub n_steps: usize,
    pub errors: [f64; 5],
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{other:?}"))),
    }
}

fn invalid(msg: String) -> Error {
    Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, msg))
}

pub fn write_error_csv(rows: &[ConvergenceRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ERROR_HEADER).map_err(csv_error)?;
    for row in rows {
        let errors = match &row.outcome {
            Ok(e) => e.as_array(),
            Err(_) => [f64::NAN; 5],
        };
        let mut rec = vec![row.m.to_string(), row.n_steps.to_string()];
        rec.extend(errors.iter().map(|&x| num(x)));
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_error_csv(input: impl Read) -> Result<Vec<ErrorLine>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_error)?;
    if header.iter().ne(ERROR_HEADER) {
        return Err(invalid(format!("unexpected header {header:?}")));
    }
    let mut lines = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_error)?;
        let field = |i: usize| rec.get(i).unwrap_or_default();
        let parse_err = |i: usize| invalid(format!("bad value `{}` in column {}", field(i), ERROR_HEADER[i]));
        let m = field(0).parse().map_err(|_| parse_err(0))?;
        let n_steps = field(1).parse().map_err(|_| parse_err(1))?;
        let mut errors = [0.0; 5];
        for (k, e) in errors.iter_mut().enumerate() {
            *e = field(k + 2).parse().map_err(|_| parse_err(k + 2))?;
        }
        lines.push(ErrorLine { m, n_steps, errors });
    }
    Ok(lines)
}

pub fn write_rates_csv(rates: &[RateRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RATE_HEADER).map_err(csv_error)?;
    for r in rates {
        let mut rec = vec![r.m_coarse.to_string(), r.m_fine.to_string()];
        rec.extend(r.rates.iter().map(|x| x.map(num).unwrap_or_default()));
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Strain series of a lambda sweep, laid out with one row per time level
/// and one column per lambda.
#[derive(Debug, Clone, PartialEq)]
pub struct StrainTable {
    pub lambdas: Vec<f64>,
    pub times: Vec<f64>,
    /// `values[i][j]`: time `i`, lambda `j`.
    pub values: Vec<Vec<f64>>,
}

impl StrainTable {
    /// Builds the table from per-lambda `(times, series)` sharing one time grid.
    pub fn from_series(runs: &[(f64, Vec<f64>, Vec<f64>)]) -> Result<Self> {
        let times = runs.first().map(|r| r.1.clone()).unwrap_or_default();
        if runs.iter().any(|r| r.1 != times || r.2.len() != times.len()) {
            return Err(Error::Parameter("strain series use different time grids".into()));
        }
        Ok(Self {
            lambdas: runs.iter().map(|r| r.0).collect(),
            values: (0..times.len()).map(|i| runs.iter().map(|r| r.2[i]).collect()).collect(),
            times,
        })
    }

    pub fn value(&self, t: f64, lambda: f64) -> Option<f64> {
        let i = self.times.iter().position(|&x| (x - t).abs() < 1e-9)?;
        let j = self.lambdas.iter().position(|&l| l == lambda)?;
        Some(self.values[i][j])
    }
}

pub fn write_strain_csv(table: &StrainTable, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(table.lambdas.iter().map(|l| format!("lambda_{l}")));
    w.write_record(&header).map_err(csv_error)?;
    for (t, row) in table.times.iter().zip(&table.values) {
        let mut rec = vec![num(*t)];
        rec.extend(row.iter().map(|&x| num(x)));
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_strain_csv(input: impl Read) -> Result<StrainTable> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_error)?.clone();
    if header.get(0) != Some("t") {
        return Err(invalid(format!("unexpected header {header:?}")));
    }
    let lambdas = header
        .iter()
        .skip(1)
        .map(|h| {
            h.strip_prefix("lambda_")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| invalid(format!("bad column `{h}`")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_error)?;
        let nums = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| invalid(format!("bad value `{s}`"))))
            .collect::<Result<Vec<f64>>>()?;
        times.push(nums[0]);
        values.push(nums[1..].to_vec());
    }
    Ok(StrainTable { lambdas, times, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::compute_rates;
    use crate::manufactured::ErrorNorms;

    fn rows() -> Vec<ConvergenceRow> {
        let mk = |m, n, s: f64| ConvergenceRow {
            m,
            n_steps: n,
            outcome: Ok(ErrorNorms {
                err_u_h01: 3.8349e-4 * s,
                err_u_l2: 4.3634e-5 * s,
                err_v_h01: 2.2632e-2 * s,
                err_v_l2: 1.0 / 3.0 * s,
                err_p_l2: 9.0339e-3 * s,
            }),
            max_abs_div_u: 0.0,
            max_residual: 0.0,
        };
        vec![mk(4, 10, 1.0), mk(5, 40, 0.25), mk(6, 160, 0.0625)]
    }

    #[test]
    fn error_table_round_trip() {
        let rows = rows();
        let mut buf = Vec::new();
        write_error_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("m,N,err_u_h01,err_u_l2,err_v_h01,err_v_l2,err_p_l2\n"));
        assert!(text.contains("3.8349000000000000e-4"));
        let back = read_error_csv(buf.as_slice()).unwrap();
        for (line, row) in back.iter().zip(&rows) {
            assert_eq!((line.m, line.n_steps), (row.m, row.n_steps));
            assert_eq!(line.errors, row.outcome.as_ref().unwrap().as_array());
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut buf = Vec::new();
        write_error_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "m,N,err_u_h01,err_u_l2,err_v_h01,err_v_l2,err_p_l2\n");
    }

    #[test]
    fn failed_rows_and_absent_rates() {
        let mut rows = rows();
        rows[1].outcome = Err("diverged".into());
        let mut buf = Vec::new();
        write_error_csv(&rows, &mut buf).unwrap();
        let back = read_error_csv(buf.as_slice()).unwrap();
        assert!(back[1].errors.iter().all(|e| e.is_nan()));

        let mut buf = Vec::new();
        write_rates_csv(&compute_rates(&rows), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "4,5,,,,,");
    }

    #[test]
    fn rates_are_two() {
        let mut buf = Vec::new();
        write_rates_csv(&compute_rates(&rows()), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(2).unwrap().starts_with("5,6,2.0000000000000000e0"));
    }

    #[test]
    fn strain_table_round_trip() {
        let table = StrainTable::from_series(&[
            (0.0, vec![0.1, 0.2], vec![1.15251, 1.10503]),
            (5.0, vec![0.1, 0.2], vec![1.15251, 1.07498]),
        ])
        .unwrap();
        let mut buf = Vec::new();
        write_strain_csv(&table, &mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("t,lambda_0,lambda_5\n"));
        let back = read_strain_csv(buf.as_slice()).unwrap();
        assert_eq!(back, table);
        assert_eq!(back.value(0.2, 5.0), Some(1.07498));
    }

    #[test]
    fn mismatched_time_grids_rejected() {
        assert!(StrainTable::from_series(&[(0.0, vec![0.1], vec![1.0]), (1.0, vec![0.2], vec![1.0])]).is_err());
    }
}
