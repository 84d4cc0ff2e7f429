use super::{LinearProgram, RowSense, Sense};
use std::fmt::Write as _;
use std::io;

/// Renders `lp` in CPLEX LP text format, one constraint per line.
///
/// Numbers use Rust's shortest round-trip decimal rendering, so reading the
/// file back yields bit-identical coefficients.
pub fn write_lp_format<W: io::Write>(lp: &LinearProgram, mut out: W) -> io::Result<()> {
    let mut s = String::new();
    let name = |raw: &str| -> String {
        raw.chars()
            .map(|c| if c.is_ascii_alphanumeric() || "_.()".contains(c) { c } else { '_' })
            .collect()
    };
    let _ = writeln!(
        s,
        "{}",
        match lp.sense {
            Sense::Minimize => "Minimize",
            Sense::Maximize => "Maximize",
        }
    );
    s.push_str(" obj:");
    for v in &lp.vars {
        if v.cost != 0.0 {
            let _ = write!(s, " {} {} {}", sign(v.cost), v.cost.abs(), name(&v.name));
        }
    }
    s.push_str("\nSubject To\n");
    for r in &lp.rows {
        let _ = write!(s, " {}:", name(&r.name));
        if r.coeffs.is_empty() {
            s.push_str(" 0 ");
            s.push_str(&name(&lp.vars.first().map(|v| v.name.clone()).unwrap_or_default()));
        }
        for &(v, a) in &r.coeffs {
            let _ = write!(s, " {} {} {}", sign(a), a.abs(), name(&lp.vars[v.0].name));
        }
        let op = match r.sense {
            RowSense::Eq => "=",
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
        };
        let _ = writeln!(s, " {} {}", op, r.rhs);
    }
    s.push_str("Bounds\n");
    for v in &lp.vars {
        let n = name(&v.name);
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (false, false) => {
                let _ = writeln!(s, " {} free", n);
            }
            (true, true) => {
                let _ = writeln!(s, " {} <= {} <= {}", v.lower, n, v.upper);
            }
            (true, false) => {
                let _ = writeln!(s, " {} >= {}", n, v.lower);
            }
            (false, true) => {
                let _ = writeln!(s, " -inf <= {} <= {}", n, v.upper);
            }
        }
    }
    s.push_str("End\n");
    out.write_all(s.as_bytes())
}

fn sign(v: f64) -> char {
    if v < 0.0 {
        '-'
    } else {
        '+'
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_rows_and_bounds() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var("x", 0.0, 10.0, 1.0);
        let y = lp.add_var("y[0]", f64::NEG_INFINITY, f64::INFINITY, -0.1);
        lp.add_row("demand", [(x, 1.0), (y, -2.5)], RowSense::Ge, 1.0);
        let mut buf = Vec::new();
        write_lp_format(&lp, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "Minimize\n obj: + 1 x - 0.1 y_0_\nSubject To\n demand: + 1 x - 2.5 y_0_ >= 1\nBounds\n 0 <= x <= 10\n y_0_ free\nEnd\n"
        );
    }
}
