use std::io::Write;
use std::path::Path;

use super::RunRecord;
use crate::error::Result;
use crate::report::fmt_ext;

/// Writes one trajectory as CSV with columns
/// `t, x_1..x_d, v_1..v_d, wTermLog, prodNormLog, yLog, uLog`.
/// Non-finite values are written as `inf`, `-inf` or `nan`.
pub fn write_trace<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let d = records.first().map_or(0, |r| r.x.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("x_{i}")));
    header.extend((1..=d).map(|i| format!("v_{i}")));
    header.extend(["wTermLog", "prodNormLog", "yLog", "uLog"].map(String::from));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.t.to_string()];
        row.extend(r.x.iter().map(|x| fmt_ext(*x)));
        row.extend(r.v_partial.iter().map(|x| fmt_ext(*x)));
        row.extend([r.w_term_log, r.prod_norm_log, r.y_log, r.u_log].map(fmt_ext));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(records: &[RunRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_trace(records, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_infinities() {
        let rec = RunRecord {
            t: 1,
            x: vec![1.0, -0.5],
            v_partial: vec![1.0, f64::INFINITY],
            w_term_log: 0.0,
            prod_norm_log: f64::NEG_INFINITY,
            y_log: f64::INFINITY,
            u_log: f64::INFINITY,
            x_overflow: false,
            v_overflow: true,
        };
        let mut buf = Vec::new();
        write_trace(&[rec], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "t,x_1,x_2,v_1,v_2,wTermLog,prodNormLog,yLog,uLog\n1,1,-0.5,1,inf,0,-inf,inf,inf\n"
        );
    }
}
