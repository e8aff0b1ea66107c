//! CSV output for raw and aggregated benchmark records. Formatting is fixed
//! so that identical runs produce byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::bench::runner::{AggRecord, RawRecord};
use crate::error::{MtlError, Result};

pub const RAW_HEADER: &str = "sweep_axis,cell_value,estimator,d,r,m,T,sigma,seed,frob_normalized,sin_theta,per_task_mean_err,transfer_err,runtime_ms,iterations,converged";
pub const AGG_HEADER: &str = "sweep_axis,cell_value,estimator,metric,mean,std,n";

/// Fixed float formatting: integers print bare, everything else in
/// scientific notation with 13 significant digits (round-trips well past the
/// 12 digits we promise). NaN prints as an empty field.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.12e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_raw_csv<W: Write>(w: &mut W, records: &[RawRecord]) -> std::io::Result<()> {
    writeln!(w, "{RAW_HEADER}")?;
    for r in records {
        let m = &r.rec;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.sweep_axis,
            fmt_f64(r.cell_value),
            m.estimator,
            m.d,
            m.r,
            m.m,
            m.t,
            fmt_f64(m.sigma),
            m.seed,
            fmt_f64(m.frob_normalized),
            fmt_opt(m.sin_theta),
            fmt_f64(m.per_task_mean_err),
            fmt_opt(m.transfer_err),
            fmt_f64(m.runtime_ms),
            m.iterations,
            m.converged,
        )?;
    }
    Ok(())
}

pub fn write_agg_csv<W: Write>(w: &mut W, records: &[AggRecord]) -> std::io::Result<()> {
    writeln!(w, "{AGG_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.sweep_axis,
            fmt_f64(r.cell_value),
            r.estimator,
            r.metric,
            fmt_f64(r.mean),
            fmt_f64(r.std),
            r.n,
        )?;
    }
    Ok(())
}

/// Writes `{path}.raw.csv` and `{path}.agg.csv`. IO failures carry the
/// offending path.
pub fn write_csv(records: &[RawRecord], aggregates: &[AggRecord], path: &str) -> Result<()> {
    let emit = |suffix: &str, body: &dyn Fn(&mut BufWriter<File>) -> std::io::Result<()>| {
        let full = format!("{path}.{suffix}.csv");
        let io_err = |source| MtlError::Io { path: full.clone(), source };
        if let Some(parent) = Path::new(&full).parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(io_err)?;
            }
        }
        let mut w = BufWriter::new(File::create(&full).map_err(io_err)?);
        body(&mut w).map_err(io_err)?;
        w.flush().map_err(io_err)
    };
    emit("raw", &|w| write_raw_csv(w, records))?;
    emit("agg", &|w| write_agg_csv(w, aggregates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricRecord;

    fn row() -> RawRecord {
        RawRecord {
            sweep_axis: "T".into(),
            cell_value: 200.0,
            rec: MetricRecord {
                estimator: "nuc".into(),
                d: 100,
                r: 5,
                m: 10,
                t: 200,
                sigma: 1.0,
                seed: 42,
                frob_normalized: 0.123456789012345,
                sin_theta: Some(0.25),
                per_task_mean_err: 1.5,
                transfer_err: None,
                runtime_ms: 12.75,
                iterations: 314,
                converged: true,
            },
        }
    }

    #[test]
    fn raw_layout_and_empty_optionals() {
        let mut buf = Vec::new();
        write_raw_csv(&mut buf, &[row()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), RAW_HEADER);
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), 16);
        assert_eq!(fields[0], "T");
        assert_eq!(fields[1], "200");
        assert_eq!(fields[12], ""); // transfer_err absent
        assert_eq!(fields[15], "true");
    }

    #[test]
    fn floats_round_trip_to_twelve_digits() {
        for v in [0.123456789012345, 1e-17, -3.25, 97.0839, f64::MIN_POSITIVE] {
            let back: f64 = fmt_f64(v).parse().unwrap();
            assert!(
                (back - v).abs() <= v.abs() * 1e-12,
                "{v} -> {} -> {back}",
                fmt_f64(v)
            );
        }
        assert_eq!(fmt_f64(200.0), "200");
        assert_eq!(fmt_f64(f64::NAN), "");
    }

    #[test]
    fn output_is_byte_identical_across_calls() {
        let rows = vec![row(); 3];
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_raw_csv(&mut a, &rows).unwrap();
        write_raw_csv(&mut b, &rows).unwrap();
        assert_eq!(a, b);
    }
}
