//! Plot-ready CSV of RD curves and their pairwise BD deltas.
//!
//! The first block lists `label,rate,psnr` rows; after a blank line, a
//! `reference,test,delta_rate_percent,delta_psnr_db` block holds one row per
//! curve pair (`i < j`). Pairs whose deltas cannot be computed show `n/a`.

use crate::bd::{bd_delta, RdPoint};
use crate::error::{Error, Result};

pub const CURVE_HEADER: [&str; 3] = ["label", "rate", "psnr"];
pub const BD_HEADER: [&str; 4] = ["reference", "test", "delta_rate_percent", "delta_psnr_db"];

#[derive(Debug, Clone, PartialEq)]
pub struct RdCurve {
  pub label: String,
  pub points: Vec<RdPoint>,
}

impl RdCurve {
  pub fn new(label: impl Into<String>, points: Vec<RdPoint>) -> Self {
    Self { label: label.into(), points }
  }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BdRow {
  pub reference: String,
  pub test: String,
  /// `(delta_rate_percent, delta_psnr_db)`.
  pub deltas: Option<(f64, f64)>,
}

fn to_csv_err(e: csv::Error) -> Error {
  Error::Parse(e.to_string())
}

fn fixed(v: f64) -> String {
  format!("{v:.4}")
}

pub fn emit_report(curves: &[RdCurve]) -> Result<String> {
  let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
  w.write_record(CURVE_HEADER).map_err(to_csv_err)?;
  for c in curves {
    for p in &c.points {
      w.write_record([c.label.clone(), fixed(p.rate), fixed(p.psnr)]).map_err(to_csv_err)?;
    }
  }
  let mut out = String::from_utf8(w.into_inner().map_err(|e| Error::Parse(e.to_string()))?)
    .expect("csv output is utf-8");
  if curves.len() < 2 {
    return Ok(out);
  }
  let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
  w.write_record(BD_HEADER).map_err(to_csv_err)?;
  for (i, a) in curves.iter().enumerate() {
    for b in &curves[i + 1..] {
      let (rate, psnr) = match bd_delta(&a.points, &b.points) {
        Ok(r) => (fixed(r.delta_rate), fixed(r.delta_psnr)),
        Err(_) => ("n/a".into(), "n/a".into()),
      };
      w.write_record([a.label.clone(), b.label.clone(), rate, psnr]).map_err(to_csv_err)?;
    }
  }
  out.push('\n');
  out.push_str(
    &String::from_utf8(w.into_inner().map_err(|e| Error::Parse(e.to_string()))?)
      .expect("csv output is utf-8"),
  );
  Ok(out)
}

fn number(s: &str) -> Result<f64> {
  s.trim().parse().map_err(|_| Error::Parse(format!("bad number `{s}`")))
}

/// Parses [`emit_report`] output back into curves (in first-seen label
/// order) and BD rows.
pub fn parse_report(text: &str) -> Result<(Vec<RdCurve>, Vec<BdRow>)> {
  let mut r =
    csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
  let mut curves: Vec<RdCurve> = Vec::new();
  let mut rows = Vec::new();
  let mut in_bd = false;
  for (i, rec) in r.records().enumerate() {
    let rec = rec.map_err(to_csv_err)?;
    let fields: Vec<&str> = rec.iter().collect();
    if i == 0 {
      if fields != CURVE_HEADER {
        return Err(Error::Parse("missing label,rate,psnr header".into()));
      }
      continue;
    }
    if fields == BD_HEADER {
      in_bd = true;
      continue;
    }
    if in_bd {
      let [reference, test, rate, psnr] = fields[..] else {
        return Err(Error::Parse(format!("bad bd row {fields:?}")));
      };
      let deltas = if rate == "n/a" { None } else { Some((number(rate)?, number(psnr)?)) };
      rows.push(BdRow { reference: reference.into(), test: test.into(), deltas });
    } else {
      let [label, rate, psnr] = fields[..] else {
        return Err(Error::Parse(format!("bad curve row {fields:?}")));
      };
      let p = RdPoint::new(number(rate)?, number(psnr)?);
      match curves.iter_mut().find(|c| c.label == label) {
        Some(c) => c.points.push(p),
        None => curves.push(RdCurve::new(label, vec![p])),
      }
    }
  }
  Ok((curves, rows))
}

#[cfg(test)]
mod tests {
  use super::*;

  fn two_curves() -> Vec<RdCurve> {
    let a = vec![
      RdPoint::new(12000.0, 30.125),
      RdPoint::new(20500.5, 33.5),
      RdPoint::new(41000.0, 36.75),
      RdPoint::new(80000.25, 39.0),
    ];
    let b = a.iter().map(|p| RdPoint::new(p.rate * 0.9, p.psnr + 0.2)).collect();
    vec![RdCurve::new("cuboid", a), RdCurve::new("fixed,block", b)]
  }

  #[test]
  fn empty_input_is_header_only() {
    assert_eq!(emit_report(&[]).unwrap(), "label,rate,psnr\n");
  }

  #[test]
  fn row_counts() {
    let text = emit_report(&two_curves()).unwrap();
    let (curves, rows) = parse_report(&text).unwrap();
    assert_eq!(curves.iter().map(|c| c.points.len()).sum::<usize>(), 8);
    assert_eq!(rows.len(), 1);
    assert!(rows[0].deltas.is_some());
    // 1 + 8 curve lines, blank, 1 + 1 bd lines
    assert_eq!(text.lines().count(), 12);
  }

  #[test]
  fn parse_back_to_six_significant_digits() {
    let input = two_curves();
    let (curves, _) = parse_report(&emit_report(&input).unwrap()).unwrap();
    assert_eq!(curves.len(), 2);
    for (a, b) in input.iter().zip(&curves) {
      assert_eq!(a.label, b.label);
      for (p, q) in a.points.iter().zip(&b.points) {
        assert!(((p.rate - q.rate) / p.rate).abs() < 5e-6);
        assert!(((p.psnr - q.psnr) / p.psnr).abs() < 5e-6);
      }
    }
  }

  #[test]
  fn failing_pairs_are_marked() {
    let mut c = two_curves();
    c[1].points.truncate(3);
    let (_, rows) = parse_report(&emit_report(&c).unwrap()).unwrap();
    assert_eq!(rows[0].deltas, None);
  }
}
