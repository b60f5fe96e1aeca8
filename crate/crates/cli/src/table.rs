//! Record tables and their CSV / JSON-lines rendering.

use std::cmp::Ordering;

use clap::ValueEnum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
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

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

/// 12 significant digits, read off the scientific form so that rounding happens once.
/// Plain decimal for exponents in [-5, 12), scientific otherwise.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let s = format!("{x:.11e}");
    let (mant, exp) = s.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mant.chars().filter(char::is_ascii_digit).collect();
    let body = if (0..12).contains(&exp) {
        let (int, frac) = digits.split_at(exp as usize + 1);
        format!("{int}.{frac}")
    } else if (-5..0).contains(&exp) {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    } else {
        format!("{}.{}e{exp}", &digits[..1], &digits[1..])
    };
    let body = body.strip_suffix('.').map(str::to_string).unwrap_or(body);
    if x < 0.0 {
        format!("-{body}")
    } else {
        body
    }
}

fn cmp_cell(a: &Cell, b: &Cell) -> Ordering {
    match (a, b) {
        (Cell::Num(x), Cell::Num(y)) => x.total_cmp(y),
        (Cell::Int(x), Cell::Int(y)) => x.cmp(y),
        (Cell::Text(x), Cell::Text(y)) => x.cmp(y),
        (Cell::Empty, Cell::Empty) => Ordering::Equal,
        _ => rank(a).cmp(&rank(b)),
    }
}

fn rank(c: &Cell) -> u8 {
    match c {
        Cell::Int(_) => 0,
        Cell::Num(_) => 1,
        Cell::Text(_) => 2,
        Cell::Empty => 3,
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    /// Comment lines written before the records.
    pub notes: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            notes: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    /// Stable sort on the first `keys` columns.
    pub fn sort_by_keys(&mut self, keys: usize) {
        self.rows.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .take(keys)
                .map(|(x, y)| cmp_cell(x, y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        });
    }

    /// Numeric values of one column, skipping empty cells.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let k = self.columns.iter().position(|c| c == name).expect("known column");
        self.rows
            .iter()
            .filter_map(|r| match r[k] {
                Cell::Num(x) => Some(x),
                Cell::Int(x) => Some(x as f64),
                _ => None,
            })
            .collect()
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.csv(),
            Format::Jsonl => self.jsonl(),
        }
    }

    fn csv(&self) -> String {
        let mut buf = Vec::new();
        for n in &self.notes {
            buf.extend_from_slice(format!("# {n}\n").as_bytes());
        }
        {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(&mut buf);
            w.write_record(&self.columns).expect("write to memory");
            for row in &self.rows {
                w.write_record(row.iter().map(|c| match c {
                    Cell::Num(x) => fmt_num(*x),
                    Cell::Int(x) => x.to_string(),
                    Cell::Text(s) => s.clone(),
                    Cell::Empty => String::new(),
                }))
                .expect("write to memory");
            }
            w.flush().expect("write to memory");
        }
        String::from_utf8(buf).expect("utf-8 output")
    }

    fn jsonl(&self) -> String {
        let mut out = String::new();
        if !self.notes.is_empty() {
            out += &format!("{{\"notes\":{}}}\n", serde_json::to_string(&self.notes).expect("strings serialize"));
        }
        for row in &self.rows {
            let fields: Vec<String> = self
                .columns
                .iter()
                .zip(row)
                .map(|(name, c)| {
                    let v = match c {
                        Cell::Num(x) if x.is_finite() => fmt_num(*x),
                        Cell::Int(x) => x.to_string(),
                        Cell::Text(s) => serde_json::to_string(s).expect("strings serialize"),
                        _ => "null".into(),
                    };
                    format!("{}:{v}", serde_json::to_string(name).expect("strings serialize"))
                })
                .collect();
            out += &format!("{{{}}}\n", fields.join(","));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt_num(0.7334), "0.733400000000");
        assert_eq!(fmt_num(-2.5), "-2.50000000000");
        assert_eq!(fmt_num(2.4e-6), "2.40000000000e-6");
        assert_eq!(fmt_num(2.4e-5), "0.0000240000000000");
        assert_eq!(fmt_num(1.0 / 3.0 * 1e-7), "3.33333333333e-8");
        assert_eq!(fmt_num(123456789012.0), "123456789012");
        assert_eq!(fmt_num(1e13), "1.00000000000e13");
        assert_eq!(fmt_num(-0.0), "0");
        // rounding that carries into the exponent
        assert_eq!(fmt_num(9.9999999999996), "10.0000000000");
    }

    #[test]
    fn renders_both_formats() {
        let mut t = Table::new(&["x", "name", "y"]);
        t.note("hello");
        t.push(vec![2.0.into(), "b".into(), Cell::Empty]);
        t.push(vec![1.0.into(), "a,c".into(), 0.5.into()]);
        t.sort_by_keys(1);
        assert_eq!(t.render(Format::Csv), "# hello\nx,name,y\n1.00000000000,\"a,c\",0.500000000000\n2.00000000000,b,\n");
        assert_eq!(
            t.render(Format::Jsonl),
            "{\"notes\":[\"hello\"]}\n{\"x\":1.00000000000,\"name\":\"a,c\",\"y\":0.500000000000}\n{\"x\":2.00000000000,\"name\":\"b\",\"y\":null}\n"
        );
        assert_eq!(t.column("y"), vec![0.5]);
    }
}
