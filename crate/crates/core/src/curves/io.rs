use std::io::{Read, Write};

use crate::curves::{CurveFamily, DiscreteCurve, Provenance};
use crate::error::{Error, Result};

/// Writes `curve_id,vertex_index,x1..xn` rows.
pub fn write_family_csv<W: Write>(family: &CurveFamily, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["curve_id".to_string(), "vertex_index".to_string()];
    header.extend((1..=family.dim()).map(|k| format!("x{k}")));
    w.write_record(&header)?;
    for (id, c) in family.curves().iter().enumerate() {
        for (i, v) in c.vertices().enumerate() {
            let mut row = vec![id.to_string(), i.to_string()];
            row.extend(v.iter().map(|x| format!("{x:e}")));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a family written by [`write_family_csv`]. Rows must be grouped by
/// curve with consecutive vertex indices.
pub fn read_family_csv<R: Read>(input: R) -> Result<CurveFamily> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.len() < 4 || &header[0] != "curve_id" || &header[1] != "vertex_index" {
        return Err(Error::Config("curve CSV needs columns curve_id,vertex_index,x1..xn".into()));
    }
    let dim = header.len() - 2;
    let mut curves = Vec::new();
    let mut coords: Vec<f64> = Vec::new();
    let mut current: Option<u64> = None;
    let mut expected = 0u64;
    for rec in r.records() {
        let rec = rec?;
        let parse_u = |s: &str| s.trim().parse::<u64>().map_err(|e| Error::Config(format!("bad index `{s}`: {e}")));
        let id = parse_u(&rec[0])?;
        let vi = parse_u(&rec[1])?;
        if current != Some(id) {
            if current.is_some() {
                curves.push(DiscreteCurve::new(dim, std::mem::take(&mut coords))?);
            }
            current = Some(id);
            expected = 0;
        }
        if vi != expected {
            return Err(Error::Config(format!("curve {id}: vertex index {vi} out of order")));
        }
        expected += 1;
        for k in 0..dim {
            let s = &rec[2 + k];
            coords.push(s.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad coordinate `{s}`: {e}")))?);
        }
    }
    if current.is_some() {
        curves.push(DiscreteCurve::new(dim, coords)?);
    }
    let prov = vec![Provenance::Imported; curves.len()];
    CurveFamily::new(dim, curves, prov, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_is_exact() {
        let a = DiscreteCurve::from_points(&[[0.1, 0.2], [1.0 / 3.0, 2.0]]).unwrap();
        let b = DiscreteCurve::from_points(&[[5.0, -1e-17], [6.0, 7.0], [8.0, 9.0]]).unwrap();
        let fam = CurveFamily::new(2, vec![a, b], vec![Provenance::RadialBundle; 2], 9).unwrap();
        let mut buf = Vec::new();
        write_family_csv(&fam, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("curve_id,vertex_index,x1,x2\n"));
        let back = read_family_csv(&buf[..]).unwrap();
        assert_eq!(back.curves(), fam.curves());
    }

    #[test]
    fn rejects_out_of_order_vertices() {
        let text = "curve_id,vertex_index,x1,x2\n0,0,0,0\n0,2,1,1\n";
        assert!(read_family_csv(text.as_bytes()).is_err());
    }
}
