//! Long-format CSV panels: one record per observed cell (or per sample).
//!
//! Row and column labels are assigned indices in order of first
//! appearance. Writers emit records in an order that reproduces the same
//! indices on reload whenever such an order exists, which it always does
//! for panels that were themselves loaded from long CSV.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::matrix::{DistMatrix, MaskedMatrix, MASKED};

/// A panel plus the external labels of its rows and columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeled<M> {
    pub matrix: M,
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
}

impl<M> Labeled<M> {
    /// Labels rows and columns by their zero-based indices.
    pub fn indexed(matrix: M, n_rows: usize, n_cols: usize) -> Self {
        Self {
            matrix,
            row_ids: (0..n_rows).map(|i| i.to_string()).collect(),
            col_ids: (0..n_cols).map(|i| i.to_string()).collect(),
        }
    }
}

#[derive(Default)]
struct Interner {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl Interner {
    fn get(&mut self, id: &str) -> usize {
        if let Some(&k) = self.index.get(id) {
            return k;
        }
        self.ids.push(id.to_owned());
        self.index.insert(id.to_owned(), self.ids.len() - 1);
        self.ids.len() - 1
    }
}

struct Records<R: Read> {
    reader: csv::Reader<R>,
    width: usize,
}

impl<R: Read> Records<R> {
    fn open(input: R, header: &[&str]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut first = csv::StringRecord::new();
        let found = reader.read_record(&mut first).map_err(|e| csv_error(e, 1))?;
        if !found || first.iter().ne(header.iter().copied()) {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header '{}'", header.join(",")),
            });
        }
        Ok(Self {
            reader,
            width: header.len(),
        })
    }

    /// Next data record with its 1-based line number.
    fn next(&mut self) -> Result<Option<(usize, csv::StringRecord)>> {
        let mut rec = csv::StringRecord::new();
        let line_hint = self.reader.position().line() as usize + 1;
        if !self.reader.read_record(&mut rec).map_err(|e| csv_error(e, line_hint))? {
            return Ok(None);
        }
        let line = rec.position().map_or(line_hint, |p| p.line() as usize);
        if rec.len() != self.width {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", self.width, rec.len()),
            });
        }
        Ok(Some((line, rec)))
    }
}

fn csv_error(e: csv::Error, line: usize) -> Error {
    let line = e.position().map_or(line, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

fn parse_value(field: &str, line: usize) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            line,
            message: format!("'{field}' is not a finite number"),
        }),
    }
}

fn duplicate(rows: &Interner, cols: &Interner, key: (usize, usize), first_line: usize, second_line: usize) -> Error {
    Error::DuplicateEntry {
        row_id: rows.ids[key.0].clone(),
        col_id: cols.ids[key.1].clone(),
        first_line,
        second_line,
    }
}

/// Parses `row_id,col_id,value` records.
pub fn read_long_csv<R: Read>(input: R) -> Result<Labeled<MaskedMatrix>> {
    let mut records = Records::open(input, &["row_id", "col_id", "value"])?;
    let (mut rows, mut cols) = (Interner::default(), Interner::default());
    let mut cells: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    while let Some((line, rec)) = records.next()? {
        let key = (rows.get(&rec[0]), cols.get(&rec[1]));
        let value = parse_value(&rec[2], line)?;
        if let Some(&first) = seen.get(&key) {
            return Err(duplicate(&rows, &cols, key, first, line));
        }
        seen.insert(key, line);
        cells.push((key.0, key.1, value));
    }
    if cells.is_empty() {
        return Err(Error::AllMissing);
    }
    let shape = (rows.ids.len(), cols.ids.len());
    let mut values = Array2::from_elem(shape, MASKED);
    let mut mask = Array2::from_elem(shape, false);
    for (r, c, v) in cells {
        values[[r, c]] = v;
        mask[[r, c]] = true;
    }
    Ok(Labeled {
        matrix: MaskedMatrix::new(values, mask)?,
        row_ids: rows.ids,
        col_ids: cols.ids,
    })
}

pub fn load_long_csv(path: impl AsRef<Path>) -> Result<Labeled<MaskedMatrix>> {
    read_long_csv(BufReader::new(File::open(path)?))
}

/// Parses `row_id,col_id,sample_idx,value` records. Samples of a cell may
/// appear in any order; a repeated `(row_id, col_id, sample_idx)` is a
/// duplicate.
pub fn read_samples_csv<R: Read>(input: R) -> Result<Labeled<DistMatrix>> {
    let mut records = Records::open(input, &["row_id", "col_id", "sample_idx", "value"])?;
    let (mut rows, mut cols) = (Interner::default(), Interner::default());
    let mut cells: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    let mut seen: HashMap<(usize, usize, String), usize> = HashMap::new();
    while let Some((line, rec)) = records.next()? {
        let key = (rows.get(&rec[0]), cols.get(&rec[1]));
        let value = parse_value(&rec[3], line)?;
        if let Some(&first) = seen.get(&(key.0, key.1, rec[2].to_owned())) {
            return Err(duplicate(&rows, &cols, key, first, line));
        }
        seen.insert((key.0, key.1, rec[2].to_owned()), line);
        cells.entry(key).or_default().push(value);
    }
    if cells.is_empty() {
        return Err(Error::AllMissing);
    }
    let (n, t) = (rows.ids.len(), cols.ids.len());
    let mut grid: Vec<Option<Vec<f64>>> = vec![None; n * t];
    for ((r, c), xs) in cells {
        grid[r * t + c] = Some(xs);
    }
    Ok(Labeled {
        matrix: DistMatrix::new(n, t, grid)?,
        row_ids: rows.ids,
        col_ids: cols.ids,
    })
}

pub fn load_samples_csv(path: impl AsRef<Path>) -> Result<Labeled<DistMatrix>> {
    read_samples_csv(BufReader::new(File::open(path)?))
}

/// Observed cells ordered so that rows and columns first appear in index
/// order. Each step introduces the next row or column through a cell whose
/// other coordinate is already introduced (or both at once through their
/// shared cell); since introducing more never blocks a later step, this
/// finds an order whenever one exists. Otherwise the leftover cells follow
/// in row-major order.
fn first_appearance_order(mask: &Array2<bool>) -> Vec<(usize, usize)> {
    let (n, t) = mask.dim();
    let mut out = Vec::new();
    let (mut rows_in, mut cols_in) = (0, 0);
    while rows_in < n || cols_in < t {
        let row_ok = rows_in < n && (0..cols_in).any(|c| mask[[rows_in, c]]);
        let col_ok = cols_in < t && (0..rows_in).any(|r| mask[[r, cols_in]]);
        if row_ok {
            out.extend((0..cols_in).filter(|&c| mask[[rows_in, c]]).map(|c| (rows_in, c)));
            rows_in += 1;
        } else if col_ok {
            out.extend((0..rows_in).filter(|&r| mask[[r, cols_in]]).map(|r| (r, cols_in)));
            cols_in += 1;
        } else if rows_in < n && cols_in < t && mask[[rows_in, cols_in]] {
            let (r, c) = (rows_in, cols_in);
            out.push((r, c));
            out.extend((0..c).filter(|&k| mask[[r, k]]).map(|k| (r, k)));
            out.extend((0..r).filter(|&k| mask[[k, c]]).map(|k| (k, c)));
            rows_in += 1;
            cols_in += 1;
        } else {
            break;
        }
    }
    if rows_in < n || cols_in < t {
        out.extend(
            mask.indexed_iter()
                .filter(|&((r, c), &seen)| seen && (r >= rows_in || c >= cols_in))
                .map(|(idx, _)| idx),
        );
    }
    out
}

fn check_labels(shape: (usize, usize), row_ids: &[String], col_ids: &[String]) -> Result<()> {
    if (row_ids.len(), col_ids.len()) != shape {
        return Err(Error::DimensionMismatch {
            expected: shape,
            found: (row_ids.len(), col_ids.len()),
        });
    }
    Ok(())
}

pub fn write_long_csv<W: Write>(out: W, panel: &Labeled<MaskedMatrix>) -> Result<()> {
    let m = &panel.matrix;
    check_labels((m.n_rows(), m.n_cols()), &panel.row_ids, &panel.col_ids)?;
    let mut w = BufWriter::new(out);
    writeln!(w, "row_id,col_id,value")?;
    for (r, c) in first_appearance_order(m.mask()) {
        let v = m.get(r, c).expect("observed");
        writeln!(w, "{},{},{v}", quote(&panel.row_ids[r]), quote(&panel.col_ids[c]))?;
    }
    w.flush()?;
    Ok(())
}

/// Samples are written in stored (ascending) order with indices from 0.
pub fn write_samples_csv<W: Write>(out: W, panel: &Labeled<DistMatrix>) -> Result<()> {
    let m = &panel.matrix;
    check_labels((m.n_rows(), m.n_cols()), &panel.row_ids, &panel.col_ids)?;
    let mut w = BufWriter::new(out);
    writeln!(w, "row_id,col_id,sample_idx,value")?;
    for (r, c) in first_appearance_order(m.mask()) {
        let (rid, cid) = (quote(&panel.row_ids[r]), quote(&panel.col_ids[c]));
        for (k, x) in m.get(r, c).expect("observed").iter().enumerate() {
            writeln!(w, "{rid},{cid},{k},{x}")?;
        }
    }
    w.flush()?;
    Ok(())
}

fn quote(id: &str) -> String {
    if id.contains([',', '"', '\n', '\r']) || id.trim() != id {
        format!("\"{}\"", id.replace('"', "\"\""))
    } else {
        id.to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<Labeled<MaskedMatrix>> {
        read_long_csv(text.as_bytes())
    }

    fn round_trip(panel: &Labeled<MaskedMatrix>) -> Labeled<MaskedMatrix> {
        let mut buf = Vec::new();
        write_long_csv(&mut buf, panel).unwrap();
        read_long_csv(buf.as_slice()).unwrap()
    }

    #[test]
    fn three_of_four_cells() {
        let p = parse("row_id,col_id,value\na,x,1\na,y,2\nb,x,3\n").unwrap();
        assert_eq!(p.row_ids, ["a", "b"]);
        assert_eq!(p.col_ids, ["x", "y"]);
        assert_eq!(p.matrix.n_observed(), 3);
        assert_eq!(p.matrix.get(1, 1), None);
        assert_eq!(p.matrix.get(1, 0), Some(3.0));
    }

    #[test]
    fn duplicate_reports_both_lines() {
        let err = parse("row_id,col_id,value\na,x,1\nb,x,2\na,x,3\n").unwrap_err();
        match err {
            Error::DuplicateEntry {
                row_id,
                col_id,
                first_line,
                second_line,
            } => {
                assert_eq!((row_id.as_str(), col_id.as_str()), ("a", "x"));
                assert_eq!((first_line, second_line), (2, 4));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_records_carry_line_numbers() {
        assert!(matches!(
            parse("row_id,col_id,value\na,x,1\nb,y\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse("row_id,col_id,value\na,x,oops\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse("row_id,col_id,value\na,x,NaN\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(parse("r,c,v\na,x,1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse(""), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("row_id,col_id,value\n"), Err(Error::AllMissing)));
    }

    #[test]
    fn order_needing_a_column_first() {
        // b introduces y before row a's second cell; row-major would reorder
        let p = parse("row_id,col_id,value\na,x,1\nb,y,2\nb,x,3\na,z,4\n").unwrap();
        assert_eq!(round_trip(&p), p);
    }

    #[test]
    fn labels_with_commas_survive() {
        let p = parse("row_id,col_id,value\n\"Smith, J\",\" 2001\",1.5\n").unwrap();
        assert_eq!(p.row_ids, ["Smith, J"]);
        assert_eq!(round_trip(&p), p);
    }

    #[test]
    fn samples_round_trip() {
        let text = "row_id,col_id,sample_idx,value\nu,1,0,3\nu,1,1,1\nv,2,1,0.5\nv,2,0,0.25\nu,2,0,9\nu,2,1,8\n";
        let p = read_samples_csv(text.as_bytes()).unwrap();
        assert_eq!(p.matrix.get(0, 0).unwrap(), &[1.0, 3.0]);
        assert_eq!(p.matrix.get(1, 0), None);
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, &p).unwrap();
        assert_eq!(read_samples_csv(buf.as_slice()).unwrap(), p);
        let dup = "row_id,col_id,sample_idx,value\nu,1,0,3\nu,1,0,1\n";
        assert!(matches!(
            read_samples_csv(dup.as_bytes()),
            Err(Error::DuplicateEntry {
                first_line: 2,
                second_line: 3,
                ..
            })
        ));
    }

    proptest! {
        #[test]
        fn loaded_panels_round_trip(
            cells in proptest::collection::vec((0usize..6, 0usize..5, -1e3f64..1e3), 1..25),
        ) {
            let mut seen = std::collections::HashSet::new();
            let mut text = String::from("row_id,col_id,value\n");
            for (r, c, v) in cells {
                if seen.insert((r, c)) {
                    text.push_str(&format!("r{r},c{c},{v}\n"));
                }
            }
            let p = parse(&text).unwrap();
            prop_assert_eq!(round_trip(&p), p);
        }
    }
}
