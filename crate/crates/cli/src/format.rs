//! CSV and JSON rendering of result tables.

use serde::Serialize;

use crate::config::{Format, RunConfig, SCHEMA_VERSION};

/// `x` with 9 significant digits, in the style of C's `%.9g`.
pub fn sig9(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mant), exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (DIGITS - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Numeric table with named columns, rows in grid order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| sig9(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn render(&self, config: &RunConfig) -> String {
        match config.format {
            Format::Csv => self.to_csv(),
            Format::Json => json_document(config, self),
        }
    }
}

#[derive(Serialize)]
struct Document<'a, B: Serialize> {
    schema_version: u32,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: B,
}

/// Pretty JSON with the schema version and config echo, then `body`'s fields.
pub fn json_document<B: Serialize>(config: &RunConfig, body: B) -> String {
    pretty(&Document { schema_version: SCHEMA_VERSION, config, body })
}

pub fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(sig9(2.0), "2");
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(-0.0), "0");
        assert_eq!(sig9(1.05), "1.05");
        assert_eq!(sig9(123456789.4), "123456789");
        assert_eq!(sig9(1234567890.0), "1.23456789e+09");
        assert_eq!(sig9(2.255641853e-2), "0.0225564185");
        assert_eq!(sig9(1.5e-7), "1.5e-07");
        assert_eq!(sig9(0.0001), "0.0001");
        assert_eq!(sig9(9.9999999999), "10");
        assert_eq!(sig9(-0.0666666667), "-0.0666666667");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["g", "q"]);
        t.rows.push(vec![2.0, 1.0 / 3.0]);
        t.rows.push(vec![3.0, 1e-10]);
        assert_eq!(t.to_csv(), "g,q\n2,0.333333333\n3,1e-10\n");
    }
}
