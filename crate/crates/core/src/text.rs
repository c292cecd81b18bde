//! Plain-text numeric helpers shared by the table, CSV and report writers.
//!
//! Numbers are parsed with `str::parse::<f64>` (locale independent); a cell
//! may also be written as a fraction `a/b` so tables such as a uniform prior
//! can be given exactly.

use crate::error::{Error, Result};

/// Parses a decimal or `numerator/denominator` literal.
pub fn parse_real(token: &str) -> std::result::Result<f64, String> {
    let token = token.trim();
    let value = match token.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num
                .trim()
                .parse()
                .map_err(|_| format!("invalid numerator in `{token}`"))?;
            let den: f64 = den
                .trim()
                .parse()
                .map_err(|_| format!("invalid denominator in `{token}`"))?;
            if den == 0.0 {
                return Err(format!("zero denominator in `{token}`"));
            }
            num / den
        }
        None => token
            .parse()
            .map_err(|_| format!("invalid number `{token}`"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("non-finite number `{token}`"))
    }
}

/// Parses a whitespace/comma separated matrix. Blank lines and lines starting
/// with `#` are skipped; every remaining line is one row.
pub fn parse_matrix(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    let mut width = None;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|tok| !tok.is_empty())
            .map(parse_real)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|message| Error::Parse {
                line: line_no,
                message,
            })?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {w} columns, found {}", row.len()),
                })
            }
            _ => {}
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Writes a matrix row by row using the shortest round-trip representation.
pub fn format_matrix(rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

/// Formats a real with 12 significant digits, following C's `%.12g`.
pub fn format_g12(x: f64) -> String {
    const PRECISION: i32 = 12;
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..PRECISION).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PRECISION - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_and_decimals() {
        assert_eq!(parse_real("0.25").unwrap(), 0.25);
        assert_eq!(parse_real("1/3").unwrap(), 1.0 / 3.0);
        assert!(parse_real("1/0").is_err());
        assert!(parse_real("abc").is_err());
        assert!(parse_real("inf").is_err());
    }

    #[test]
    fn matrix_reports_line_numbers() {
        let m = parse_matrix("# header\n1 2\n\n3, 4\n").unwrap();
        assert_eq!(m, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        match parse_matrix("1 2\n3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse_matrix("1 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn g12_matches_printf() {
        assert_eq!(format_g12(0.0), "0");
        assert_eq!(format_g12(1.0), "1");
        assert_eq!(format_g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_g12(2.0 / 3.0), "0.666666666667");
        assert_eq!(format_g12(1.5), "1.5");
        assert_eq!(format_g12(123456789012.0), "123456789012");
        assert_eq!(format_g12(1234567890123.0), "1.23456789012e+12");
        assert_eq!(format_g12(1e-9), "1e-09");
        assert_eq!(format_g12(0.0001), "0.0001");
        assert_eq!(format_g12(-0.5), "-0.5");
        assert_eq!(format_g12(0.99999999999999), "1");
    }
}
