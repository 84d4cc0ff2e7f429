use super::ConvergenceRecord;
use std::io::{self, Write};
use std::path::Path;

pub const CSV_HEADER: &str = "iter,lb,ub,gap,t_ms,primal_ms,dual_ms";

/// Formats like C's `%.12g`: 12 significant digits, trailing zeros removed,
/// scientific notation for exponents below -4 or from 12 up.
pub fn format_sig12(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-4..12).contains(&exp) {
        trim(&format!("{:.*}", (11 - exp) as usize, v))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mantissa), sign, exp.abs())
    }
}

fn field(v: Option<f64>) -> String {
    v.map(format_sig12).unwrap_or_default()
}

pub fn write_convergence_csv<W: Write>(records: &[ConvergenceRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.iter,
            field(r.lb),
            field(r.ub),
            field(r.gap),
            field(r.t_ms),
            field(r.primal_ms),
            field(r.dual_ms)
        )?;
    }
    Ok(())
}

pub fn emit_convergence_csv(records: &[ConvergenceRecord], path: impl AsRef<Path>) -> io::Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = io::BufWriter::new(file);
    write_convergence_csv(records, &mut w)?;
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_sig12(3.0), "3");
        assert_eq!(format_sig12(-2.5), "-2.5");
        assert_eq!(format_sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_sig12(14647.632716422842), "14647.6327164");
        assert_eq!(format_sig12(1e-7), "1e-07");
        assert_eq!(format_sig12(2.0e15), "2e+15");
        assert_eq!(format_sig12(123456789012.0), "123456789012");
        assert_eq!(format_sig12(0.0001), "0.0001");
        assert_eq!(format_sig12(999999999999.9), "1e+12");
    }

    fn record(iter: usize) -> ConvergenceRecord {
        ConvergenceRecord {
            iter,
            lb: Some(1.0),
            ub: None,
            gap: None,
            t_ms: None,
            primal_ms: Some(0.5),
            dual_ms: None,
        }
    }

    #[test]
    fn header_only_when_empty() {
        let mut buf = Vec::new();
        write_convergence_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn one_line_per_record_with_blank_fields() {
        let mut buf = Vec::new();
        write_convergence_csv(&[record(0), record(1), record(2)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().nth(2).unwrap(), "1,1,,,,0.5,");
    }
}
