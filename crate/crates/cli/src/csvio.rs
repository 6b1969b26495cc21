//! CSV formats emitted by the experiments, and their parsers.
//!
//! * run: `iteration,residual`
//! * fig1: `iteration,t,error`
//! * fig3: `algorithm,iteration,residual`
//! * lyapunov sweep: `scheme,h,lambda0` (empty `lambda0` on blow-up)
//! * iteration tables: header `algorithm,"Tf,nt",…`, one row per algorithm,
//!   cells are iteration counts, `-` (not converged) or `*` (diverged).

use std::fmt;
use std::str::FromStr;

use crate::{CliError, Result};

/// One cell of an iteration-count table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Iterations(usize),
    /// Did not reach the tolerance within the iteration limit, or stalled.
    NotConverged,
    /// Diverged due to numerical instability.
    Diverged,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Iterations(n) => write!(f, "{n}"),
            Cell::NotConverged => f.write_str("-"),
            Cell::Diverged => f.write_str("*"),
        }
    }
}

impl FromStr for Cell {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "-" => Ok(Cell::NotConverged),
            "*" => Ok(Cell::Diverged),
            t => t
                .parse()
                .map(Cell::Iterations)
                .map_err(|_| CliError::Parse(format!("bad table cell {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTable {
    /// `(T_f in Lyapunov times, n_t)` per column.
    pub columns: Vec<(f64, usize)>,
    pub rows: Vec<(String, Vec<Cell>)>,
}

impl IterationTable {
    pub fn row(&self, label: &str) -> Option<&[Cell]> {
        self.rows
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, c)| c.as_slice())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["algorithm".to_string()];
        header.extend(self.columns.iter().map(|(tf, nt)| format!("{tf},{nt}")));
        w.write_record(&header)?;
        for (label, cells) in &self.rows {
            let mut record = vec![label.clone()];
            record.extend(cells.iter().map(Cell::to_string));
            w.write_record(&record)?;
        }
        finish(w)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let header = r.headers()?.clone();
        if header.get(0) != Some("algorithm") {
            return Err(CliError::Parse(
                "table header must start with 'algorithm'".into(),
            ));
        }
        let columns = header
            .iter()
            .skip(1)
            .map(parse_column_label)
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record?;
            if record.len() != columns.len() + 1 {
                return Err(CliError::Parse(format!(
                    "row has {} fields, expected {}",
                    record.len(),
                    columns.len() + 1
                )));
            }
            let cells = record
                .iter()
                .skip(1)
                .map(str::parse)
                .collect::<Result<Vec<Cell>>>()?;
            rows.push((record[0].to_string(), cells));
        }
        Ok(Self { columns, rows })
    }
}

fn parse_column_label(s: &str) -> Result<(f64, usize)> {
    let (tf, nt) = s
        .split_once(',')
        .ok_or_else(|| CliError::Parse(format!("column label {s:?} is not 'Tf,nt'")))?;
    let tf: f64 = tf
        .trim()
        .parse()
        .map_err(|_| CliError::Parse(format!("bad Tf in {s:?}")))?;
    let nt: usize = nt
        .trim()
        .parse()
        .map_err(|_| CliError::Parse(format!("bad nt in {s:?}")))?;
    if !tf.is_finite() {
        return Err(CliError::Parse(format!("bad Tf in {s:?}")));
    }
    Ok((tf, nt))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Parse(e.to_string()))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Parse(format!("bad number {s:?}")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Parse(format!("bad integer {s:?}")))
}

/// `iteration,residual`, one row per entry of the residual history.
pub fn write_run_csv(residuals: &[f64]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iteration", "residual"])?;
    for (i, r) in residuals.iter().enumerate() {
        w.write_record([i.to_string(), format!("{r:e}")])?;
    }
    finish(w)
}

pub fn parse_run_csv(text: &str) -> Result<Vec<(usize, f64)>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    expect_header(&mut r, &["iteration", "residual"])?;
    r.records()
        .map(|rec| {
            let rec = rec?;
            expect_len(&rec, 2)?;
            Ok((parse_usize(&rec[0])?, parse_f64(&rec[1])?))
        })
        .collect()
}

/// `iteration,t,error`.
pub fn write_fig1_csv(rows: &[(usize, f64, f64)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iteration", "t", "error"])?;
    for (i, t, e) in rows {
        w.write_record([i.to_string(), format!("{t:e}"), format!("{e:e}")])?;
    }
    finish(w)
}

pub fn parse_fig1_csv(text: &str) -> Result<Vec<(usize, f64, f64)>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    expect_header(&mut r, &["iteration", "t", "error"])?;
    r.records()
        .map(|rec| {
            let rec = rec?;
            expect_len(&rec, 3)?;
            Ok((
                parse_usize(&rec[0])?,
                parse_f64(&rec[1])?,
                parse_f64(&rec[2])?,
            ))
        })
        .collect()
}

/// `algorithm,iteration,residual`.
pub fn write_fig3_csv(rows: &[(String, Vec<f64>)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["algorithm", "iteration", "residual"])?;
    for (label, history) in rows {
        for (i, r) in history.iter().enumerate() {
            w.write_record([label.clone(), i.to_string(), format!("{r:e}")])?;
        }
    }
    finish(w)
}

pub fn parse_fig3_csv(text: &str) -> Result<Vec<(String, usize, f64)>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    expect_header(&mut r, &["algorithm", "iteration", "residual"])?;
    r.records()
        .map(|rec| {
            let rec = rec?;
            expect_len(&rec, 3)?;
            Ok((
                rec[0].to_string(),
                parse_usize(&rec[1])?,
                parse_f64(&rec[2])?,
            ))
        })
        .collect()
}

/// `scheme,h,lambda0`; `None` exponents are written as empty cells.
pub fn write_sweep_csv(rows: &[(String, f64, Option<f64>)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scheme", "h", "lambda0"])?;
    for (scheme, h, l) in rows {
        let l = l.map(|l| format!("{l:e}")).unwrap_or_default();
        w.write_record([scheme.clone(), format!("{h:e}"), l])?;
    }
    finish(w)
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<(String, f64, Option<f64>)>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    expect_header(&mut r, &["scheme", "h", "lambda0"])?;
    r.records()
        .map(|rec| {
            let rec = rec?;
            expect_len(&rec, 3)?;
            let l = if rec[2].trim().is_empty() {
                None
            } else {
                Some(parse_f64(&rec[2])?)
            };
            Ok((rec[0].to_string(), parse_f64(&rec[1])?, l))
        })
        .collect()
}

fn expect_header(r: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<()> {
    let h = r.headers()?;
    if h.iter().ne(expected.iter().copied()) {
        return Err(CliError::Parse(format!(
            "expected header {expected:?}, got {h:?}"
        )));
    }
    Ok(())
}

fn expect_len(rec: &csv::StringRecord, n: usize) -> Result<()> {
    if rec.len() != n {
        return Err(CliError::Parse(format!(
            "expected {n} fields, got {}",
            rec.len()
        )));
    }
    Ok(())
}

/// Parses `x,y,z` into a state.
pub fn parse_u0(s: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::Parse(format!(
            "u0 needs three components, got {s:?}"
        )));
    }
    let mut u = [0.0; 3];
    for (dst, p) in u.iter_mut().zip(parts) {
        *dst = parse_f64(p)?;
        if !dst.is_finite() {
            return Err(CliError::Parse(format!("u0 component {p:?} is not finite")));
        }
    }
    Ok(u)
}

/// Parses a comma-separated list of positive step sizes.
pub fn parse_h_list(s: &str) -> Result<Vec<f64>> {
    let hs = s.split(',').map(parse_f64).collect::<Result<Vec<_>>>()?;
    if hs.is_empty() || hs.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
        return Err(CliError::Parse(format!(
            "step sizes must be positive: {s:?}"
        )));
    }
    Ok(hs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cells_mirror_table_sentinels() {
        assert_eq!(Cell::NotConverged.to_string(), "-");
        assert_eq!(Cell::Diverged.to_string(), "*");
        assert_eq!("12".parse::<Cell>().unwrap(), Cell::Iterations(12));
        assert!("x".parse::<Cell>().is_err());
    }

    #[test]
    fn table_layout() {
        let t = IterationTable {
            columns: vec![(2.0, 4096), (4.0, 8192)],
            rows: vec![(
                "MGRIT_2".into(),
                vec![Cell::Iterations(10), Cell::NotConverged],
            )],
        };
        let csv = t.to_csv().unwrap();
        assert_eq!(csv, "algorithm,\"2,4096\",\"4,8192\"\nMGRIT_2,10,-\n");
        assert_eq!(IterationTable::from_csv(&csv).unwrap(), t);
    }

    #[test]
    fn u0_parsing() {
        assert_eq!(parse_u0("1,2.5,-3").unwrap(), [1.0, 2.5, -3.0]);
        assert!(parse_u0("1,2").is_err());
        assert!(parse_u0("1,2,nan").is_err());
        assert!(parse_u0("a,b,c").is_err());
    }

    #[test]
    fn malformed_csv_is_rejected() {
        assert!(parse_run_csv("iter,res\n0,1\n").is_err());
        assert!(parse_run_csv("iteration,residual\n0\n").is_err());
        assert!(IterationTable::from_csv("algorithm,\"2;4096\"\nx,1\n").is_err());
        assert!(parse_sweep_csv("scheme,h,lambda0\nfe,0.1,zz\n").is_err());
    }

    fn cell() -> impl Strategy<Value = Cell> {
        prop_oneof![
            (0usize..1000).prop_map(Cell::Iterations),
            Just(Cell::NotConverged),
            Just(Cell::Diverged),
        ]
    }

    proptest! {
        #[test]
        fn table_round_trip(
            columns in prop::collection::vec((0.0..100.0f64, 2usize..100_000), 1..6),
            labels in prop::collection::vec("[A-Za-z_, ]{1,12}", 1..5),
            seed in prop::collection::vec(cell(), 30),
        ) {
            let rows = labels
                .into_iter()
                .enumerate()
                .map(|(i, l)| (l, (0..columns.len()).map(|j| seed[(i * 6 + j) % seed.len()]).collect()))
                .collect();
            let t = IterationTable { columns, rows };
            prop_assert_eq!(IterationTable::from_csv(&t.to_csv().unwrap()).unwrap(), t);
        }

        #[test]
        fn run_csv_round_trip(res in prop::collection::vec(prop::num::f64::POSITIVE | prop::num::f64::ZERO, 1..50)) {
            let parsed = parse_run_csv(&write_run_csv(&res).unwrap()).unwrap();
            prop_assert_eq!(parsed.len(), res.len());
            for ((i, r), (j, expected)) in parsed.into_iter().zip(res.into_iter().enumerate()) {
                prop_assert_eq!(i, j);
                prop_assert_eq!(r.to_bits(), expected.to_bits());
            }
        }
    }
}
