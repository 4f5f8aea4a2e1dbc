use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde_json::Value;

/// Decimal with 17 significant digits, which round-trips any `f64`.
/// Very large or small magnitudes fall back to scientific notation.
pub fn fmt17(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..17).contains(&exp) {
        format!("{:.*}", (16 - exp) as usize, x)
    } else {
        format!("{x:.16e}")
    }
}

pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write_to(&self, out: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| match c {
                Cell::Num(x) => fmt17(*x),
                Cell::Text(s) => s.clone(),
                Cell::Empty => String::new(),
            }))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub enum Payload {
    Csv(Table),
    Json(Value),
}

pub fn emit(payload: &Payload, path: Option<&Path>) -> io::Result<()> {
    let mut sink: Box<dyn Write> = match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    match payload {
        Payload::Csv(t) => t.write_to(&mut sink).map_err(io::Error::other)?,
        Payload::Json(v) => {
            serde_json::to_writer_pretty(&mut sink, v)?;
            writeln!(sink)?;
        }
    }
    sink.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.0440140630, 12.435176, -0.0085, 1.0 / 3.0, 2.0, 1e-12, 6.02e23, -7.5e-7, 123456.789] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt17(0.5), "0.50000000000000000");
        assert_eq!(fmt17(12.5), "12.500000000000000");
        assert_eq!(fmt17(0.0), "0");
    }

    #[test]
    fn csv_quoting() {
        let mut t = Table::new(&["verdict", "x"]);
        t.push(vec!["case II, stable".into(), 1.5.into()]);
        t.push(vec![Cell::Empty, None.into()]);
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "verdict,x\n\"case II, stable\",1.5000000000000000\n,\n"
        );
    }
}
