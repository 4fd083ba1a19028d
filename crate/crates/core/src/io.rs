//! File formats: Matrix Market coordinate files, numeric CSV tables and JSON
//! reports with fixed 17-significant-digit floats.

use std::io::{self, BufRead, Write};

use serde::Serialize;

use crate::collision::{ConstraintMatrix, QuadrupleSet};
use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// Formats a float with 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON formatter that writes every float with 17 significant digits, so
/// identical inputs always produce byte-identical reports.
struct FixedFloatFormatter {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

impl serde_json::ser::Formatter for FixedFloatFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Pretty JSON with fixed-precision floats; non-finite floats become `null`.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let fmt = FixedFloatFormatter {
        inner: serde_json::ser::PrettyFormatter::new(),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Writes `rows × cols` coordinate entries, 1-based, as `real general`.
pub fn write_matrix_market<W: Write>(m: &ConstraintMatrix, mut out: W) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", m.rows(), m.cols(), m.nnz())?;
    for (r, c, v) in m.triplets() {
        writeln!(out, "{} {} {}", r + 1, c + 1, v)?;
    }
    Ok(())
}

/// Parsed coordinate-format matrix with 0-based triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

pub fn read_matrix_market<R: BufRead>(input: R) -> Result<CoordinateMatrix> {
    let bad = |msg: String| Error::InvalidArgument(format!("Matrix Market: {msg}"));
    let mut lines = input.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad("empty input".into()))?;
    let header = header?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if tokens.len() != 5
        || tokens[0] != "%%matrixmarket"
        || tokens[1] != "matrix"
        || tokens[2] != "coordinate"
        || tokens[3] != "real"
        || tokens[4] != "general"
    {
        return Err(bad(format!("unsupported header `{header}`")));
    }

    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries = Vec::new();
    for (lineno, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        let parse_usize = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| bad(format!("line {}: bad integer `{s}`", lineno + 1)))
        };
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(bad(format!(
                        "line {}: expected `rows cols nnz`",
                        lineno + 1
                    )));
                }
                size = Some((
                    parse_usize(fields[0])?,
                    parse_usize(fields[1])?,
                    parse_usize(fields[2])?,
                ));
                entries.reserve(size.unwrap().2);
            }
            Some((rows, cols, _)) => {
                if fields.len() != 3 {
                    return Err(bad(format!("line {}: expected `i j value`", lineno + 1)));
                }
                let (i, j) = (parse_usize(fields[0])?, parse_usize(fields[1])?);
                let v: f64 = fields[2]
                    .parse()
                    .map_err(|_| bad(format!("line {}: bad value `{}`", lineno + 1, fields[2])))?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(bad(format!(
                        "line {}: index ({i}, {j}) out of range",
                        lineno + 1
                    )));
                }
                entries.push((i - 1, j - 1, v));
            }
        }
    }
    let (rows, cols, nnz) = size.ok_or_else(|| bad("missing size line".into()))?;
    if entries.len() != nnz {
        return Err(bad(format!(
            "expected {nnz} entries, found {}",
            entries.len()
        )));
    }
    Ok(CoordinateMatrix {
        rows,
        cols,
        entries,
    })
}

impl CoordinateMatrix {
    pub fn to_constraint_matrix(&self) -> ConstraintMatrix {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.rows];
        for &(r, c, v) in &self.entries {
            rows[r].push((c, v));
        }
        for row in &mut rows {
            row.sort_by_key(|&(c, _)| c);
        }
        ConstraintMatrix::from_rows(self.cols, rows)
    }
}

/// CSV with header `i1,i2,i3,i4,energy_residual`.
pub fn write_quadruples_csv<W: Write>(qs: &QuadrupleSet, mut out: W) -> Result<()> {
    writeln!(out, "i1,i2,i3,i4,energy_residual")?;
    for q in &qs.quads {
        writeln!(
            out,
            "{},{},{},{},{}",
            q.i1,
            q.i2,
            q.i3,
            q.i4,
            fmt_f64(q.energy_residual)
        )?;
    }
    Ok(())
}

/// CSV with header `index,k1,…,kd,<value_name>` in row-major grid order.
pub fn write_grid_function_csv<W: Write>(
    f: &GridFunction,
    value_name: &str,
    mut out: W,
) -> Result<()> {
    let spec = f.spec();
    let axes: Vec<String> = (1..=spec.dim).map(|a| format!("k{a}")).collect();
    writeln!(out, "index,{},{value_name}", axes.join(","))?;
    for (i, v) in f.values().iter().enumerate() {
        let k: Vec<String> = spec.point(i).into_iter().map(fmt_f64).collect();
        writeln!(out, "{i},{},{}", k.join(","), fmt_f64(*v))?;
    }
    Ok(())
}

/// One column per vector (`v0`, `v1`, …), one row per grid point.
pub fn write_columns_csv<W: Write>(columns: &[Vec<f64>], len: usize, mut out: W) -> Result<()> {
    let header: Vec<String> = (0..columns.len()).map(|j| format!("v{j}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for i in 0..len {
        let row: Vec<String> = columns.iter().map(|c| fmt_f64(c[i])).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::collision::CollisionQuadruple;
    use crate::grid::GridSpec;

    #[test]
    fn json_floats_have_17_digits() {
        #[derive(Serialize)]
        struct R {
            a: f64,
            b: Vec<f64>,
            c: Option<f64>,
            n: usize,
        }
        let s = to_json_string(&R {
            a: 0.1,
            b: vec![3.0, -1e-300],
            c: Some(f64::INFINITY),
            n: 4,
        })
        .unwrap();
        assert!(s.contains("\"a\": 1.0000000000000001e-1"), "{s}");
        assert!(s.contains("3.0000000000000000e0"), "{s}");
        assert!(s.contains("\"c\": null"), "{s}");
        assert!(s.contains("\"n\": 4"), "{s}");
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["a"].as_f64(), Some(0.1));
    }

    #[test]
    fn matrix_market_layout() {
        let qs = QuadrupleSet {
            grid: GridSpec::centered(1, 6).unwrap(),
            epsilon_e: 1.0,
            quads: vec![CollisionQuadruple {
                i1: 0,
                i2: 5,
                i3: 2,
                i4: 3,
                energy_residual: 0.0,
            }],
        };
        let m = crate::collision::build_constraint_matrix(&qs);
        let mut buf = Vec::new();
        write_matrix_market(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "%%MatrixMarket matrix coordinate real general\n1 6 4\n1 1 1\n1 3 -1\n1 4 -1\n1 6 1\n"
        );
    }

    #[test]
    fn matrix_market_rejects_garbage() {
        let read = |s: &str| read_matrix_market(s.as_bytes());
        assert!(read("").is_err());
        assert!(read("%%MatrixMarket matrix array real general\n1 1\n1\n").is_err());
        assert!(read("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n").is_err());
        assert!(read("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n").is_err());
        let ok = read("%%MatrixMarket matrix coordinate real general\n% comment\n2 2 1\n2 1 -1\n")
            .unwrap();
        assert_eq!(ok.entries, vec![(1, 0, -1.0)]);
    }

    proptest! {
        #[test]
        fn matrix_market_roundtrip(rows in proptest::collection::vec(
            proptest::collection::btree_map(0usize..9, -3i32..=3, 0..5), 0..12)) {
            let rows: Vec<Vec<(usize, f64)>> = rows
                .into_iter()
                .map(|r| r.into_iter().filter(|&(_, v)| v != 0).map(|(c, v)| (c, v as f64)).collect())
                .collect();
            let m = ConstraintMatrix::from_rows(9, rows);
            let mut buf = Vec::new();
            write_matrix_market(&m, &mut buf).unwrap();
            let back = read_matrix_market(buf.as_slice()).unwrap().to_constraint_matrix();
            prop_assert_eq!(back, m);
        }
    }
}
