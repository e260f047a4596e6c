//! Reading and writing kets, operators and superoperator matrices.
//!
//! JSON layout (all arrays row-major):
//!
//! ```text
//! ket:       {"dims": [n1, ..., np], "re": [...], "im": [...]}
//! operator:  {"dims": [rows, cols], "row_dims": [...], "col_dims": [...], "re": [...], "im": [...]}
//! superop:   {"kind": "superop" | "choi", "dims": [m, n], "re": [...], "im": [...]}
//! ```
//!
//! `im` may be omitted for real data. An operator file without `row_dims` and
//! `col_dims` is read as a square operator on `dims` when the entry count is
//! `prod(dims)^2`, and as a plain `dims[0] x dims[1]` matrix otherwise.
//!
//! The text layout is meant for hand-written fixtures: `#` starts a comment,
//! the first content line lists the dimensions (`2 2` for a ket or a square
//! operator, `2 2 | 2 2` for explicit row and column factors), and every
//! following line holds one `re im` pair (`im` optional).

use serde::{Deserialize, Serialize};

use super::{Ket, Opr, Shape};
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};
use crate::scalar::{Real, C};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KetFile {
    pub dims: Vec<usize>,
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OprFile {
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub col_dims: Option<Vec<usize>>,
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

/// Which matrix a superoperator file holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuperKind {
    Superop,
    Choi,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuperFile {
    pub kind: SuperKind,
    pub dims: Vec<usize>,
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

/// Raw superoperator data: a `(mn)^2 x (mn)^2` matrix and the factor dims `[m, n]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RawSuper<T: Real> {
    pub kind: SuperKind,
    pub dims: [usize; 2],
    pub mat: CMat<T>,
}

fn complex_entries<T: Real>(re: &[f64], im: Option<&[f64]>) -> Result<Vec<C<T>>> {
    if let Some(im) = im {
        if im.len() != re.len() {
            return Err(Error::format(
                "im",
                format!("has {} entries but re has {}", im.len(), re.len()),
            ));
        }
    }
    let mut out = Vec::with_capacity(re.len());
    for (i, &r) in re.iter().enumerate() {
        let m = im.map_or(0.0, |im| im[i]);
        if !r.is_finite() {
            return Err(Error::format("re", format!("entry {i} is not finite")));
        }
        if !m.is_finite() {
            return Err(Error::format("im", format!("entry {i} is not finite")));
        }
        out.push(C::new(T::lit(r), T::lit(m)));
    }
    Ok(out)
}

fn shape_field(field: &str, dims: &[usize]) -> Result<Shape> {
    Shape::new(dims.to_vec()).map_err(|e| Error::format(field, e.to_string()))
}

fn split<T: Real>(entries: impl Iterator<Item = C<T>>) -> (Vec<f64>, Option<Vec<f64>>) {
    let (re, im): (Vec<f64>, Vec<f64>) = entries.map(|z| (z.re.as_f64(), z.im.as_f64())).unzip();
    let im = if im.iter().all(|&x| x == 0.0) { None } else { Some(im) };
    (re, im)
}

fn row_major<T: Real>(m: &CMat<T>) -> impl Iterator<Item = C<T>> + '_ {
    (0..m.nrows()).flat_map(move |r| (0..m.ncols()).map(move |c| m[(r, c)]))
}

fn matrix_from_row_major<T: Real>(rows: usize, cols: usize, entries: &[C<T>]) -> CMat<T> {
    CMat::from_fn(rows, cols, |r, c| entries[r * cols + c])
}

impl KetFile {
    pub fn into_ket<T: Real>(self) -> Result<Ket<T>> {
        let shape = shape_field("dims", &self.dims)?;
        let entries = complex_entries::<T>(&self.re, self.im.as_deref())?;
        if entries.len() != shape.total() {
            return Err(Error::format(
                "re",
                format!("has {} entries but dims {} need {}", entries.len(), shape, shape.total()),
            ));
        }
        Ket::new(shape, CVec::from_vec(entries))
    }

    pub fn from_ket<T: Real>(v: &Ket<T>) -> Self {
        let (re, im) = split(v.amps().iter().copied());
        KetFile {
            dims: v.shape().dims().to_vec(),
            re,
            im,
        }
    }
}

impl OprFile {
    pub fn into_opr<T: Real>(self) -> Result<Opr<T>> {
        let entries = complex_entries::<T>(&self.re, self.im.as_deref())?;
        let (rows, cols) = match (&self.row_dims, &self.col_dims) {
            (Some(r), Some(c)) => (shape_field("row_dims", r)?, shape_field("col_dims", c)?),
            (Some(_), None) => return Err(Error::format("col_dims", "missing while row_dims is present")),
            (None, Some(_)) => return Err(Error::format("row_dims", "missing while col_dims is present")),
            (None, None) => {
                let s = shape_field("dims", &self.dims)?;
                if s.total() * s.total() == entries.len() {
                    (s.clone(), s)
                } else if self.dims.len() == 2 && self.dims[0] * self.dims[1] == entries.len() {
                    (Shape::flat(self.dims[0])?, Shape::flat(self.dims[1])?)
                } else {
                    return Err(Error::format(
                        "dims",
                        format!("{s} does not match {} entries", entries.len()),
                    ));
                }
            }
        };
        let (r, c) = (rows.total(), cols.total());
        if entries.len() != r * c {
            return Err(Error::format(
                "re",
                format!("has {} entries but the operator is {r}x{c}", entries.len()),
            ));
        }
        if self.row_dims.is_some() && self.dims.len() == 2 && (self.dims[0] != r || self.dims[1] != c) {
            return Err(Error::format(
                "dims",
                format!("[{}, {}] disagrees with row_dims/col_dims ({r}x{c})", self.dims[0], self.dims[1]),
            ));
        }
        Opr::new(matrix_from_row_major(r, c, &entries), rows, cols)
    }

    pub fn from_opr<T: Real>(a: &Opr<T>) -> Self {
        let (re, im) = split(row_major(a.mat()));
        OprFile {
            dims: vec![a.mat().nrows(), a.mat().ncols()],
            row_dims: Some(a.row_shape().dims().to_vec()),
            col_dims: Some(a.col_shape().dims().to_vec()),
            re,
            im,
        }
    }
}

impl SuperFile {
    pub fn into_raw<T: Real>(self) -> Result<RawSuper<T>> {
        if self.dims.len() != 2 || self.dims.contains(&0) {
            return Err(Error::format("dims", "must be [m, n] with positive entries"));
        }
        let side = (self.dims[0] * self.dims[1]).pow(2);
        let entries = complex_entries::<T>(&self.re, self.im.as_deref())?;
        if entries.len() != side * side {
            return Err(Error::format(
                "re",
                format!("has {} entries but a {side}x{side} matrix is required", entries.len()),
            ));
        }
        Ok(RawSuper {
            kind: self.kind,
            dims: [self.dims[0], self.dims[1]],
            mat: matrix_from_row_major(side, side, &entries),
        })
    }

    pub fn from_raw<T: Real>(raw: &RawSuper<T>) -> Self {
        let (re, im) = split(row_major(&raw.mat));
        SuperFile {
            kind: raw.kind,
            dims: raw.dims.to_vec(),
            re,
            im,
        }
    }
}

/// Parsed text fixture: header dimensions and the list of entries.
struct TextData {
    rows: Vec<usize>,
    cols: Option<Vec<usize>>,
    entries: Vec<(f64, f64)>,
}

fn parse_text(src: &str) -> Result<TextData> {
    let mut lines = src
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| Error::format("header", "file has no content"))?;
    let parse_dims = |part: &str| -> Result<Vec<usize>> {
        part.split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::format("header", format!("line {hline}: `{t}` is not a dimension")))
            })
            .collect()
    };
    let (rows, cols) = match header.split_once('|') {
        Some((r, c)) => (parse_dims(r)?, Some(parse_dims(c)?)),
        None => (parse_dims(header)?, None),
    };
    let mut entries = Vec::new();
    for (ln, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() > 2 {
            return Err(Error::format("entries", format!("line {ln}: expected `re im`")));
        }
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| Error::format("entries", format!("line {ln}: `{t}` is not a number")))
        };
        let re = num(toks[0])?;
        let im = if toks.len() == 2 { num(toks[1])? } else { 0.0 };
        entries.push((re, im));
    }
    Ok(TextData { rows, cols, entries })
}

impl TextData {
    fn split(self) -> (Vec<usize>, Option<Vec<usize>>, Vec<f64>, Vec<f64>) {
        let (re, im) = self.entries.into_iter().unzip();
        (self.rows, self.cols, re, im)
    }
}

fn is_json(src: &str) -> bool {
    src.trim_start().starts_with('{')
}

fn json_err(e: serde_json::Error) -> Error {
    let msg = e.to_string();
    // serde reports missing/unknown fields as "missing field `re`"
    let field = if msg.starts_with("unknown variant") {
        "kind".to_string()
    } else if msg.contains("field `") {
        msg.split('`').nth(1).unwrap_or("json").to_string()
    } else {
        "json".to_string()
    };
    Error::Format { field, message: msg }
}

/// Parses a ket from JSON or the text format.
pub fn parse_ket<T: Real>(src: &str) -> Result<Ket<T>> {
    if is_json(src) {
        let f: KetFile = serde_json::from_str(src).map_err(json_err)?;
        f.into_ket()
    } else {
        let (dims, cols, re, im) = parse_text(src)?.split();
        if cols.is_some() {
            return Err(Error::format("header", "a ket header lists a single group of dims"));
        }
        KetFile { dims, re, im: Some(im) }.into_ket()
    }
}

/// Parses an operator from JSON or the text format.
pub fn parse_opr<T: Real>(src: &str) -> Result<Opr<T>> {
    if is_json(src) {
        let f: OprFile = serde_json::from_str(src).map_err(json_err)?;
        f.into_opr()
    } else {
        let (dims, cols, re, im) = parse_text(src)?.split();
        let file = match cols {
            Some(c) => OprFile {
                dims: vec![dims.iter().product(), c.iter().product()],
                row_dims: Some(dims),
                col_dims: Some(c),
                re,
                im: Some(im),
            },
            None => OprFile {
                dims,
                row_dims: None,
                col_dims: None,
                re,
                im: Some(im),
            },
        };
        file.into_opr()
    }
}

/// Parses a superoperator or Choi matrix (JSON only).
pub fn parse_super<T: Real>(src: &str) -> Result<RawSuper<T>> {
    let f: SuperFile = serde_json::from_str(src).map_err(json_err)?;
    f.into_raw()
}

pub fn ket_to_json<T: Real>(v: &Ket<T>) -> String {
    serde_json::to_string(&KetFile::from_ket(v)).expect("plain data serializes")
}

pub fn opr_to_json<T: Real>(a: &Opr<T>) -> String {
    serde_json::to_string(&OprFile::from_opr(a)).expect("plain data serializes")
}

pub fn super_to_json<T: Real>(raw: &RawSuper<T>) -> String {
    serde_json::to_string(&SuperFile::from_raw(raw)).expect("plain data serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::sample::{gaussian_opr, haar_ket, rng};

    #[test]
    fn ket_json_round_trip() {
        let v: Ket<f64> = haar_ket(&Shape::new(vec![2, 3]).unwrap(), &mut rng(9));
        let back: Ket<f64> = parse_ket(&ket_to_json(&v)).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn opr_json_round_trip() {
        let s = Shape::new(vec![2, 2]).unwrap();
        let a: Opr<f64> = gaussian_opr(&s, &Shape::flat(3).unwrap(), &mut rng(4));
        let back: Opr<f64> = parse_opr(&opr_to_json(&a)).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn real_ket_without_im() {
        let v: Ket<f64> = parse_ket(r#"{"dims":[2,2],"re":[1,0,0,1]}"#).unwrap();
        assert_eq!(v.amps()[3], C::new(1.0, 0.0));
    }

    #[test]
    fn square_operator_inferred_from_dims() {
        let re: Vec<String> = (0..16).map(|i| i.to_string()).collect();
        let src = format!(r#"{{"dims":[2,2],"re":[{}]}}"#, re.join(","));
        let a: Opr<f64> = parse_opr(&src).unwrap();
        assert_eq!(a.row_shape().dims(), &[2, 2]);
        assert_eq!(a.mat()[(1, 0)], C::new(4.0, 0.0));
        let b: Opr<f64> = parse_opr(r#"{"dims":[2,3],"re":[1,2,3,4,5,6]}"#).unwrap();
        assert_eq!(b.mat().ncols(), 3);
        assert_eq!(b.mat()[(1, 2)], C::new(6.0, 0.0));
    }

    #[test]
    fn errors_name_the_field() {
        let e = parse_ket::<f64>(r#"{"dims":[2,2],"re":[1,0,0]}"#).unwrap_err();
        assert!(matches!(e, Error::Format { ref field, .. } if field == "re"), "{e}");
        let e = parse_ket::<f64>(r#"{"dims":[2,2],"re":[1,0,0,1],"im":[0]}"#).unwrap_err();
        assert!(matches!(e, Error::Format { ref field, .. } if field == "im"), "{e}");
        let e = parse_ket::<f64>(r#"{"re":[1]}"#).unwrap_err();
        assert!(matches!(e, Error::Format { ref field, .. } if field == "dims"), "{e}");
        let e = parse_ket::<f64>(r#"{"dims":[0],"re":[]}"#).unwrap_err();
        assert!(matches!(e, Error::Format { ref field, .. } if field == "dims"), "{e}");
    }

    #[test]
    fn text_formats() {
        let v: Ket<f64> = parse_ket("# bell\n2 2\n0.5 0\n0\n0 0\n0.5 0.5\n").unwrap();
        assert_eq!(v.amps()[3], C::new(0.5, 0.5));
        let mut src = String::from("2 | 1 2\n");
        for i in 0..4 {
            src.push_str(&format!("{i} 1\n"));
        }
        let a: Opr<f64> = parse_opr(&src).unwrap();
        assert_eq!(a.col_shape().dims(), &[1, 2]);
        assert_eq!(a.mat()[(1, 1)], C::new(3.0, 1.0));
        assert!(parse_ket::<f64>("2\n1 2 3\n").is_err());
    }

    #[test]
    fn super_round_trip() {
        let raw = RawSuper::<f64> {
            kind: SuperKind::Choi,
            dims: [1, 2],
            mat: CMat::from_fn(4, 4, |r, c| C::new(r as f64, c as f64)),
        };
        let back: RawSuper<f64> = parse_super(&super_to_json(&raw)).unwrap();
        assert_eq!(back, raw);
        assert!(parse_super::<f64>(r#"{"kind":"choi","dims":[2,2],"re":[1]}"#).is_err());
    }
}
