//! Report tree and its JSON / CSV emission.
//!
//! Object keys are sorted; every float is written with six significant
//! digits (`0.947` becomes `0.947000`), so equal inputs give equal bytes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::config::OutputFormat;
use crate::error::Result;
use crate::formats::write_file;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<Node>),
    Obj(BTreeMap<String, Node>),
}

impl Node {
    pub fn obj<K: Into<String>>(fields: impl IntoIterator<Item = (K, Node)>) -> Node {
        Node::Obj(fields.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn arr<T: Into<Node>>(items: impl IntoIterator<Item = T>) -> Node {
        Node::Arr(items.into_iter().map(Into::into).collect())
    }

    pub fn get(&self, key: &str) -> Option<&Node> {
        match self {
            Node::Obj(m) => m.get(key),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Node::Num(x) => Some(x),
            Node::Int(i) => Some(i as f64),
            _ => None,
        }
    }

    fn cell(&self) -> String {
        match self {
            Node::Null => String::new(),
            Node::Bool(b) => b.to_string(),
            Node::Int(i) => i.to_string(),
            Node::Num(x) if x.is_finite() => format_float(*x),
            Node::Num(_) => String::new(),
            Node::Str(s) => s.clone(),
            Node::Arr(_) | Node::Obj(_) => render_compact(self),
        }
    }
}

impl From<f64> for Node {
    fn from(x: f64) -> Self {
        Node::Num(x)
    }
}

impl From<usize> for Node {
    fn from(x: usize) -> Self {
        Node::Int(x as i64)
    }
}

impl From<u32> for Node {
    fn from(x: u32) -> Self {
        Node::Int(i64::from(x))
    }
}

impl From<bool> for Node {
    fn from(b: bool) -> Self {
        Node::Bool(b)
    }
}

impl From<&str> for Node {
    fn from(s: &str) -> Self {
        Node::Str(s.to_owned())
    }
}

impl From<String> for Node {
    fn from(s: String) -> Self {
        Node::Str(s)
    }
}

impl From<&String> for Node {
    fn from(s: &String) -> Self {
        Node::Str(s.clone())
    }
}

impl<T: Into<Node>> From<Option<T>> for Node {
    fn from(o: Option<T>) -> Self {
        o.map_or(Node::Null, Into::into)
    }
}

/// Six significant digits with trailing zeros kept (C's `%#.6g`).
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        // also folds -0.0
        return "0.00000".to_owned();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        format!("{:.*}", (5 - exp) as usize, x)
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    }
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

fn render_compact(n: &Node) -> String {
    let mut out = String::new();
    write_node(n, None, 0, &mut out);
    out
}

fn write_node(n: &Node, indent: Option<usize>, depth: usize, out: &mut String) {
    let newline = |out: &mut String, d: usize| {
        if let Some(w) = indent {
            out.push('\n');
            out.extend(std::iter::repeat(' ').take(w * d));
        }
    };
    match n {
        Node::Null => out.push_str("null"),
        Node::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Node::Int(i) => out.push_str(&i.to_string()),
        Node::Num(x) if x.is_finite() => out.push_str(&format_float(*x)),
        Node::Num(_) => out.push_str("null"),
        Node::Str(s) => out.push_str(&json_string(s)),
        Node::Arr(items) if items.is_empty() => out.push_str("[]"),
        Node::Obj(m) if m.is_empty() => out.push_str("{}"),
        Node::Arr(items) => {
            // arrays of scalars stay on one line
            let flat = items.iter().all(|i| !matches!(i, Node::Arr(_) | Node::Obj(_)));
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                    if flat && indent.is_some() {
                        out.push(' ');
                    }
                }
                if !flat {
                    newline(out, depth + 1);
                }
                write_node(item, if flat { None } else { indent }, depth + 1, out);
            }
            if !flat {
                newline(out, depth);
            }
            out.push(']');
        }
        Node::Obj(m) => {
            out.push('{');
            for (i, (k, v)) in m.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, depth + 1);
                out.push_str(&json_string(k));
                out.push(':');
                if indent.is_some() {
                    out.push(' ');
                }
                write_node(v, indent, depth + 1, out);
            }
            newline(out, depth);
            out.push('}');
        }
    }
}

pub fn render_json(n: &Node) -> String {
    let mut out = String::new();
    write_node(n, Some(2), 0, &mut out);
    out.push('\n');
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Node>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_owned(),
            header: header.iter().map(|s| (*s).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Node>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Node::cell)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 cells")
    }
}

/// Output of one subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub data: Node,
    pub tables: Vec<Table>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub config: Node,
    /// `sha256:<hex>` by input role or manifest-relative path.
    pub inputs: BTreeMap<String, String>,
    pub stages: BTreeMap<String, Fragment>,
}

impl Report {
    pub fn new(config: Node) -> Self {
        Report {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            config,
            inputs: BTreeMap::new(),
            stages: BTreeMap::new(),
        }
    }

    pub fn to_node(&self) -> Node {
        Node::obj([
            (
                "tool",
                Node::obj([("name", Node::from(&self.tool)), ("version", Node::from(&self.version))]),
            ),
            ("config", self.config.clone()),
            (
                "inputs",
                Node::obj(self.inputs.iter().map(|(k, v)| (k.clone(), Node::from(v)))),
            ),
            (
                "stages",
                Node::obj(self.stages.iter().map(|(k, f)| (k.clone(), f.data.clone()))),
            ),
        ])
    }

    pub fn render_json(&self) -> String {
        render_json(&self.to_node())
    }

    /// Every CSV file as `(file name, contents)`, in name order.
    pub fn csv_files(&self) -> Vec<(String, String)> {
        let mut inputs = Table::new("inputs", &["input", "digest"]);
        for (k, v) in &self.inputs {
            inputs.push(vec![Node::from(k), Node::from(v)]);
        }
        let mut files = vec![("inputs.csv".to_owned(), inputs.render_csv())];
        for (stage, frag) in &self.stages {
            for t in &frag.tables {
                files.push((format!("{stage}_{}.csv", t.name), t.render_csv()));
            }
        }
        files.sort();
        files
    }
}

/// Writes `report.json` or one CSV per table into `dir`; returns the paths.
pub fn emit_report(report: &Report, format: OutputFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    let files = match format {
        OutputFormat::Json => vec![("report.json".to_owned(), report.render_json())],
        OutputFormat::Csv => report.csv_files(),
    };
    let mut written = Vec::with_capacity(files.len());
    for (name, body) in files {
        let p = dir.join(name);
        write_file(&p, body.as_bytes())?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_float(0.947), "0.947000");
        assert_eq!(format_float(99.77), "99.7700");
        assert_eq!(format_float(1.0), "1.00000");
        assert_eq!(format_float(100.0), "100.000");
        assert_eq!(format_float(-0.25), "-0.250000");
        assert_eq!(format_float(0.0), "0.00000");
        assert_eq!(format_float(-0.0), "0.00000");
        assert_eq!(format_float(1e-5), "1.00000e-05");
        assert_eq!(format_float(1234567.0), "1.23457e+06");
        assert_eq!(format_float(999999.6), "1.00000e+06");
        assert_eq!(format_float(0.00012345), "0.000123450");
        assert_eq!(format_float(9.999996), "10.0000");
    }

    #[test]
    fn json_is_sorted_and_parseable() {
        let n = Node::obj([
            ("b", Node::from(0.947)),
            ("a", Node::arr([1.0, 2.5])),
            ("c", Node::obj([("z", Node::Null), ("y", Node::from("q\"x"))])),
            ("d", Node::from(f64::NAN)),
        ]);
        let s = render_json(&n);
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.contains("\"b\": 0.947000"));
        assert!(s.contains("[1.00000, 2.50000]"));
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["c"]["y"], "q\"x");
        assert!(v["d"].is_null());
    }

    #[test]
    fn curve_table_csv() {
        let mut t = Table::new("curves", &["class_id", "curve", "x", "y"]);
        t.push(vec![0u32.into(), "pr".into(), 0.5.into(), 1.0.into()]);
        t.push(vec![0u32.into(), "pr".into(), 1.0.into(), 0.5.into()]);
        assert_eq!(
            t.render_csv(),
            "class_id,curve,x,y\n0,pr,0.500000,1.00000\n0,pr,1.00000,0.500000\n"
        );
    }

    #[test]
    fn emit_twice_is_identical() {
        let mut r = Report::new(Node::obj([("threshold", Node::from(0.85))]));
        r.inputs.insert("manifest".into(), "sha256:00".into());
        let mut t = Table::new("t", &["x"]);
        t.push(vec![Node::from(1.0)]);
        r.stages.insert(
            "rank".into(),
            Fragment {
                data: Node::obj([("map", Node::from(0.947))]),
                tables: vec![t],
            },
        );
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        for fmt in [OutputFormat::Json, OutputFormat::Csv] {
            let a = emit_report(&r, fmt, d1.path()).unwrap();
            let b = emit_report(&r, fmt, d2.path()).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
            }
        }
        assert!(d1.path().join("rank_t.csv").exists());
        assert!(d1.path().join("inputs.csv").exists());
        let text = std::fs::read_to_string(d1.path().join("report.json")).unwrap();
        assert!(text.contains("\"map\": 0.947000"));
    }
}
