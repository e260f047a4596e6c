use std::io::Read;
use std::path::Path;

use sepkit::classify::SuperOp;
use sepkit::tensor::io::{parse_ket, parse_opr, parse_super, KetFile, OprFile};
use sepkit::{Error, Ket64, Opr64, Result};
use serde_json::Value;

use crate::Kind;

pub fn read_source(path: &Path) -> Result<String> {
    let mut s = String::new();
    let res = if path.as_os_str() == "-" {
        std::io::stdin().read_to_string(&mut s).map(|_| ())
    } else {
        std::fs::read_to_string(path).map(|t| s = t)
    };
    res.map_err(|e| Error::Format {
        field: "input".into(),
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    Ok(s)
}

pub fn ket(path: &Path) -> Result<Ket64> {
    parse_ket(&read_source(path)?)
}

pub fn opr(path: &Path) -> Result<Opr64> {
    parse_opr(&read_source(path)?)
}

pub fn superop(path: &Path) -> Result<SuperOp<f64>> {
    SuperOp::from_raw(&parse_super(&read_source(path)?)?)
}

pub enum Item {
    Ket(Ket64),
    Opr(Opr64),
}

/// A ket when the entry count matches the dims, an operator otherwise.
pub fn item(path: &Path, kind: Option<Kind>) -> Result<Item> {
    let src = read_source(path)?;
    match kind {
        Some(Kind::Ket) => parse_ket(&src).map(Item::Ket),
        Some(Kind::Operator) => parse_opr(&src).map(Item::Opr),
        None => match parse_ket(&src) {
            Ok(v) => Ok(Item::Ket(v)),
            Err(ket_err) => parse_opr(&src).map(Item::Opr).map_err(|opr_err| Error::Format {
                field: "re".into(),
                message: format!("input is neither a ket ({ket_err}) nor an operator ({opr_err})"),
            }),
        },
    }
}

pub fn ket_json(v: &Ket64) -> Value {
    serde_json::to_value(KetFile::from_ket(v)).expect("plain data")
}

pub fn opr_json(a: &Opr64) -> Value {
    serde_json::to_value(OprFile::from_opr(a)).expect("plain data")
}
