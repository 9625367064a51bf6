//! Dense trace CSV: `n,x,f_n_xn,F_xn_xn,S_n,step_norm`.
//!
//! `x` joins coordinates with `;`. Numbers use the shortest representation
//! that parses back to the same `f64`. `S_n` is empty at `n = 1` and
//! `step_norm` is empty when the following update was not completed.

use std::io::{self, BufRead, Write};

use crate::aggregation::RunTrace;
use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "n,x,f_n_xn,F_xn_xn,S_n,step_norm";

/// Shortest round-trip decimal for `v`.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        ryu::Buffer::new().format_finite(v).to_owned()
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub n: usize,
    pub x: Vec<f64>,
    pub f_n_xn: f64,
    pub self_value: f64,
    pub s_n: Option<f64>,
    pub step_norm: Option<f64>,
}

pub fn trace_rows(trace: &RunTrace) -> Vec<TraceRow> {
    trace
        .iterates
        .iter()
        .enumerate()
        .map(|(k, x)| TraceRow {
            n: k + 1,
            x: x.coords().to_vec(),
            f_n_xn: trace.per_round_values[k],
            self_value: trace.self_values[k],
            s_n: k.checked_sub(1).map(|i| trace.s_values[i]),
            step_norm: trace.step_norms.get(k).copied(),
        })
        .collect()
}

pub fn write_rows<W: Write>(rows: &[TraceRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in rows {
        let x: Vec<String> = r.x.iter().map(|v| format_f64(*v)).collect();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n,
            x.join(";"),
            format_f64(r.f_n_xn),
            format_f64(r.self_value),
            r.s_n.map(format_f64).unwrap_or_default(),
            r.step_norm.map(format_f64).unwrap_or_default(),
        )?;
    }
    out.flush()
}

pub fn write_trace_csv<W: Write>(trace: &RunTrace, out: W) -> io::Result<()> {
    write_rows(&trace_rows(trace), out)
}

fn parse_num(field: &str, name: &str, row: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::TraceParse {
        row,
        reason: format!("field `{name}` is not a number: {field:?}"),
    })
}

fn parse_opt(field: &str, name: &str, row: usize) -> Result<Option<f64>> {
    if field.trim().is_empty() {
        Ok(None)
    } else {
        parse_num(field, name, row).map(Some)
    }
}

/// Parse a trace CSV. Row numbers in errors count the header as row 1.
pub fn read_trace_csv<R: BufRead>(input: R) -> Result<Vec<TraceRow>> {
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => {
            return Err(Error::TraceParse {
                row: 1,
                reason: e.to_string(),
            })
        }
        None => {
            return Err(Error::TraceParse {
                row: 1,
                reason: "missing header".into(),
            })
        }
    };
    if header.trim_end() != TRACE_HEADER {
        return Err(Error::TraceParse {
            row: 1,
            reason: format!(
                "expected header `{TRACE_HEADER}`, found `{}`",
                header.trim_end()
            ),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 2;
        let line = line.map_err(|e| Error::TraceParse {
            row,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::TraceParse {
                row,
                reason: format!("expected 6 fields, found {}", fields.len()),
            });
        }
        let n = fields[0]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::TraceParse {
                row,
                reason: format!("field `n` is not an index: {:?}", fields[0]),
            })?;
        let x = fields[1]
            .split(';')
            .map(|c| parse_num(c, "x", row))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(TraceRow {
            n,
            x,
            f_n_xn: parse_num(fields[2], "f_n_xn", row)?,
            self_value: parse_num(fields[3], "F_xn_xn", row)?,
            s_n: parse_opt(fields[4], "S_n", row)?,
            step_norm: parse_opt(fields[5], "step_norm", row)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_round_trip() {
        for v in [
            0.1,
            1.0 / 3.0,
            220.0,
            -1e-300,
            6.02214076e23,
            f64::MIN_POSITIVE,
        ] {
            assert_eq!(format_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_f64(220.0), "220.0");
        assert_eq!(format_f64(f64::INFINITY), "inf");
    }

    #[test]
    fn rows_round_trip() {
        let rows = vec![
            TraceRow {
                n: 1,
                x: vec![1.0, -0.25],
                f_n_xn: 0.1 + 0.2,
                self_value: 81.0,
                s_n: None,
                step_norm: Some(9.0),
            },
            TraceRow {
                n: 2,
                x: vec![1.0 / 3.0, 2e-17],
                f_n_xn: 0.0,
                self_value: 1e300,
                s_n: Some(9.0),
                step_norm: None,
            },
        ];
        let mut buf = Vec::new();
        write_rows(&rows, &mut buf).unwrap();
        let back = read_trace_csv(&buf[..]).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn parse_errors_name_the_row() {
        let text = format!("{TRACE_HEADER}\n1,1.0,2.0,3.0,,0.5\n2,oops,2.0,3.0,1.0,\n");
        match read_trace_csv(text.as_bytes()) {
            Err(Error::TraceParse { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(read_trace_csv("n,x\n".as_bytes()).is_err());
        assert!(read_trace_csv("".as_bytes()).is_err());
    }
}
