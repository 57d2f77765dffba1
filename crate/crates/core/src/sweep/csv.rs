use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Marker for a value that could not be computed.
pub const SENTINEL: &str = "NA";

/// Formats `x` with 12 significant digits in `%g` style.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return SENTINEL.to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

pub fn format_optional(x: Option<f64>) -> String {
    x.map_or_else(|| SENTINEL.to_string(), format_number)
}

/// The value a number has after a round trip through [`format_number`].
pub fn quantize(x: f64) -> f64 {
    if x.is_finite() {
        format_number(x).parse().expect("formatted number parses")
    } else {
        x
    }
}

/// Parses a cell; the sentinel becomes `None`.
pub fn parse_cell(cell: &str) -> Result<Option<f64>> {
    let c = cell.trim();
    if c == SENTINEL {
        return Ok(None);
    }
    c.parse::<f64>().map(Some).map_err(|_| Error::Invalid(format!("bad numeric cell {cell:?}")))
}

/// A header plus rows of text cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric values of a column, `None` for sentinels.
    pub fn numeric_column(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let idx = self.column(name).ok_or_else(|| Error::Invalid(format!("missing column {name}")))?;
        self.rows.iter().map(|r| parse_cell(&r[idx])).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", self.header.join(",")).expect("write to string");
        for row in &self.rows {
            writeln!(out, "{}", row.join(",")).expect("write to string");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Table> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Invalid("empty CSV input".into()))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut table = Table { header, rows: Vec::new() };
        for (i, line) in lines.enumerate() {
            let row: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
            if row.len() != table.header.len() {
                return Err(Error::Parse {
                    line: i + 2,
                    message: format!("expected {} cells, found {}", table.header.len(), row.len()),
                });
            }
            table.rows.push(row);
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn number_formatting() {
        assert_eq!(format_number(0.5), "0.5");
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(1.0 / 0.99), "1.0101010101");
        assert_eq!(format_number(0.678071905112638), "0.678071905113");
        assert_eq!(format_number(1.5835098608520819e-8), "1.58350986085e-08");
        assert_eq!(format_number(-2.5e20), "-2.5e+20");
        assert_eq!(format_number(123456789012.0), "123456789012");
        assert_eq!(format_number(1234567890123.0), "1.23456789012e+12");
        assert_eq!(format_number(f64::NAN), "NA");
        assert_eq!(format_number(f64::INFINITY), "inf");
        assert_eq!(format_optional(None), "NA");
    }

    #[test]
    fn table_round_trip_and_errors() {
        let mut t = Table::new(["rho", "p_e_exact"]);
        t.push(vec!["0.5".into(), "NA".into()]);
        t.push(vec!["1".into(), "0.25".into()]);
        let text = t.to_csv();
        assert_eq!(text, "rho,p_e_exact\n0.5,NA\n1,0.25\n");
        let back = Table::parse(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.numeric_column("p_e_exact").unwrap(), vec![None, Some(0.25)]);
        assert!(back.numeric_column("delta").is_err());
        assert!(Table::parse("").is_err());
        assert!(matches!(Table::parse("a,b\n1\n"), Err(Error::Parse { line: 2, .. })));
    }

    proptest! {
        #[test]
        fn quantized_values_are_fixed_points(x in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
            let q = quantize(x);
            prop_assert_eq!(quantize(q), q);
            prop_assert_eq!(format_number(q), format_number(x));
            prop_assert!(((q - x) / x).abs() <= 5e-12 || x == 0.0);
        }
    }
}
