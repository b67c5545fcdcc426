//! Frame datasets and their on-disk formats.
//!
//! Binary layout (`ICAE`, version 1, little-endian):
//!
//! ```text
//! magic "ICAE" | u16 version | u16 flags | u32 d_x | u32 d_c | u64 N
//! N x ( d_x f32 | d_c f32 | [u32 true_s] [u32 proxy_s] [u32 cond_id] )
//! ```
//!
//! Flag bit 0 marks `true_s`, bit 1 `proxy_s`, bit 2 `cond_id`; optional
//! fields follow in that bit order. The CSV export always carries the header
//! `x0..x{d_x-1}, c0..c{d_c-1}, cond_id, true_s, proxy_s` and leaves absent
//! optional columns empty.

use std::io::{Read, Write};

use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};

pub const DATASET_MAGIC: &[u8; 4] = b"ICAE";
pub const DATASET_VERSION: u16 = 1;

pub const FLAG_TRUE_S: u16 = 1 << 0;
pub const FLAG_PROXY_S: u16 = 1 << 1;
pub const FLAG_COND_ID: u16 = 1 << 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub x: Vec<f64>,
    pub c: Vec<f64>,
    pub cond_id: Option<u32>,
    pub true_s: Option<u32>,
    pub proxy_s: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameDataset {
    pub d_x: usize,
    pub d_c: usize,
    pub records: Vec<Record>,
}

fn field_flags(r: &Record) -> u16 {
    let mut f = 0;
    if r.true_s.is_some() {
        f |= FLAG_TRUE_S;
    }
    if r.proxy_s.is_some() {
        f |= FLAG_PROXY_S;
    }
    if r.cond_id.is_some() {
        f |= FLAG_COND_ID;
    }
    f
}

impl FrameDataset {
    /// Validates dimensions, finiteness, and that each optional field is
    /// present on every record or on none.
    pub fn new(d_x: usize, d_c: usize, records: Vec<Record>) -> Result<Self> {
        let flags = records.first().map(field_flags).unwrap_or(0);
        for (i, r) in records.iter().enumerate() {
            if r.x.len() != d_x || r.c.len() != d_c {
                return Err(Error::Shape(format!(
                    "record {i}: expected x/c lengths {d_x}/{d_c}, got {}/{}",
                    r.x.len(),
                    r.c.len()
                )));
            }
            if r.x.iter().chain(&r.c).any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("record {i}: non-finite value")));
            }
            if field_flags(r) != flags {
                return Err(Error::Data(format!(
                    "record {i}: optional fields inconsistent with record 0"
                )));
            }
        }
        Ok(Self { d_x, d_c, records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn flags(&self) -> u16 {
        self.records.first().map(field_flags).unwrap_or(0)
    }

    pub fn has_cond_id(&self) -> bool {
        self.flags() & FLAG_COND_ID != 0
    }

    pub fn has_true_s(&self) -> bool {
        self.flags() & FLAG_TRUE_S != 0
    }

    pub fn has_proxy_s(&self) -> bool {
        self.flags() & FLAG_PROXY_S != 0
    }

    pub fn cond_ids(&self) -> Result<Vec<u32>> {
        self.records
            .iter()
            .map(|r| r.cond_id.ok_or_else(|| Error::Data("dataset has no cond_id".into())))
            .collect()
    }

    pub fn proxy_labels(&self) -> Result<Vec<u32>> {
        self.records
            .iter()
            .map(|r| r.proxy_s.ok_or_else(|| Error::Data("dataset has no proxy_s".into())))
            .collect()
    }

    /// Returns a copy with `proxy_s` replaced by `labels`.
    pub fn with_proxy(&self, labels: &[u32]) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::Shape(format!(
                "{} proxy labels for {} records",
                labels.len(),
                self.len()
            )));
        }
        let mut out = self.clone();
        for (r, &l) in out.records.iter_mut().zip(labels) {
            r.proxy_s = Some(l);
        }
        Ok(out)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let flags = self.flags();
        let mut w = ByteWriter::new();
        w.bytes(DATASET_MAGIC);
        w.u16(DATASET_VERSION);
        w.u16(flags);
        w.u32(self.d_x as u32);
        w.u32(self.d_c as u32);
        w.u64(self.records.len() as u64);
        for r in &self.records {
            w.f32_slice(&r.x);
            w.f32_slice(&r.c);
            for v in [r.true_s, r.proxy_s, r.cond_id].into_iter().flatten() {
                w.u32(v);
            }
        }
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        r.magic(DATASET_MAGIC)?;
        r.version(DATASET_VERSION)?;
        let at = r.offset();
        let flags = r.u16()?;
        if flags & !(FLAG_TRUE_S | FLAG_PROXY_S | FLAG_COND_ID) != 0 {
            return Err(Error::format(at, format!("unknown flag bits {flags:#06x}")));
        }
        let d_x = r.u32()? as usize;
        let d_c = r.u32()? as usize;
        let at = r.offset();
        let n = r.u64()?;
        let record_bytes = 4 * (d_x + d_c) as u64 + 4 * u64::from(flags.count_ones());
        let remaining = bytes.len() as u64 - r.offset();
        if record_bytes.checked_mul(n).is_none_or(|need| need > remaining) {
            return Err(Error::format(
                at,
                format!("header declares {n} records of {record_bytes} bytes, {remaining} bytes remain"),
            ));
        }
        let mut records = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let x = r.f32_vec(d_x)?;
            let c = r.f32_vec(d_c)?;
            let true_s = if flags & FLAG_TRUE_S != 0 { Some(r.u32()?) } else { None };
            let proxy_s = if flags & FLAG_PROXY_S != 0 { Some(r.u32()?) } else { None };
            let cond_id = if flags & FLAG_COND_ID != 0 { Some(r.u32()?) } else { None };
            records.push(Record {
                x,
                c,
                cond_id,
                true_s,
                proxy_s,
            });
        }
        r.finish()?;
        Ok(Self { d_x, d_c, records })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..self.d_x).map(|i| format!("x{i}")).collect();
        header.extend((0..self.d_c).map(|i| format!("c{i}")));
        header.extend(["cond_id", "true_s", "proxy_s"].map(String::from));
        w.write_record(&header).map_err(csv_err)?;
        let opt = |v: Option<u32>| v.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.records {
            let mut row: Vec<String> = r
                .x
                .iter()
                .chain(&r.c)
                .map(|&v| (v as f32).to_string())
                .collect();
            row.push(opt(r.cond_id));
            row.push(opt(r.true_s));
            row.push(opt(r.proxy_s));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV export. Rows are numbered from 1 for the first data row.
    pub fn read_csv<R: Read>(input: R, d_x: usize, d_c: usize) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = rdr
            .headers()
            .map_err(|e| Error::Row { row: 0, msg: e.to_string() })?
            .clone();
        let mut want: Vec<String> = (0..d_x).map(|i| format!("x{i}")).collect();
        want.extend((0..d_c).map(|i| format!("c{i}")));
        want.extend(["cond_id", "true_s", "proxy_s"].map(String::from));
        if header.iter().ne(want.iter().map(String::as_str)) {
            return Err(Error::Row {
                row: 0,
                msg: format!("unexpected header, want {}", want.join(",")),
            });
        }
        let mut records = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let row_no = i + 1;
            let row = row.map_err(|e| Error::Row { row: row_no, msg: e.to_string() })?;
            if row.len() != want.len() {
                return Err(Error::Row {
                    row: row_no,
                    msg: format!("expected {} cells, got {}", want.len(), row.len()),
                });
            }
            let mut vals = Vec::with_capacity(d_x + d_c);
            for (j, cell) in row.iter().take(d_x + d_c).enumerate() {
                let v: f32 = cell.trim().parse().map_err(|_| Error::Row {
                    row: row_no,
                    msg: format!("column {}: cannot parse {cell:?}", &want[j]),
                })?;
                if !v.is_finite() {
                    return Err(Error::Row {
                        row: row_no,
                        msg: format!("column {}: non-finite value", &want[j]),
                    });
                }
                vals.push(f64::from(v));
            }
            let opt = |j: usize| -> Result<Option<u32>> {
                let cell = row[j].trim();
                if cell.is_empty() {
                    return Ok(None);
                }
                cell.parse().map(Some).map_err(|_| Error::Row {
                    row: row_no,
                    msg: format!("column {}: cannot parse {cell:?}", &want[j]),
                })
            };
            let base = d_x + d_c;
            let cond_id = opt(base)?;
            let true_s = opt(base + 1)?;
            let proxy_s = opt(base + 2)?;
            let c = vals.split_off(d_x);
            records.push(Record {
                x: vals,
                c,
                cond_id,
                true_s,
                proxy_s,
            });
        }
        if let Some(first) = records.first().map(field_flags) {
            if let Some(i) = records.iter().position(|r| field_flags(r) != first) {
                return Err(Error::Row {
                    row: i + 1,
                    msg: "optional columns filled inconsistently".into(),
                });
            }
        }
        Self::new(d_x, d_c, records)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(x: Vec<f64>, c: Vec<f64>, cond: Option<u32>) -> Record {
        Record {
            x,
            c,
            cond_id: cond,
            true_s: None,
            proxy_s: None,
        }
    }

    fn small() -> FrameDataset {
        FrameDataset::new(
            2,
            1,
            vec![
                Record {
                    x: vec![0.5, -1.25],
                    c: vec![3.0],
                    cond_id: Some(1),
                    true_s: Some(0),
                    proxy_s: None,
                },
                Record {
                    x: vec![0.1f32 as f64, 2.0],
                    c: vec![-3.0],
                    cond_id: Some(0),
                    true_s: Some(2),
                    proxy_s: None,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn binary_layout_header() {
        let bytes = small().to_bytes();
        assert_eq!(&bytes[..4], b"ICAE");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(u16::from_le_bytes([bytes[6], bytes[7]]), FLAG_TRUE_S | FLAG_COND_ID);
        // header 24 bytes + 2 records * (3 f32 + 2 u32)
        assert_eq!(bytes.len(), 24 + 2 * 20);
    }

    #[test]
    fn binary_round_trip() {
        let ds = small();
        let bytes = ds.to_bytes();
        let back = FrameDataset::from_bytes(&bytes).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn corrupted_magic_reports_offset_zero() {
        let mut bytes = small().to_bytes();
        bytes[1] = b'Z';
        match FrameDataset::from_bytes(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_and_bad_version() {
        let bytes = small().to_bytes();
        assert!(matches!(
            FrameDataset::from_bytes(&bytes[..bytes.len() - 3]),
            Err(Error::Format { .. })
        ));
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(matches!(FrameDataset::from_bytes(&v2), Err(Error::Format { offset: 4, .. })));
    }

    #[test]
    fn non_finite_payload_rejected() {
        let mut bytes = small().to_bytes();
        bytes[24..28].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(FrameDataset::from_bytes(&bytes), Err(Error::Format { offset: 24, .. })));
    }

    #[test]
    fn inconsistent_optional_fields_rejected() {
        let r = FrameDataset::new(
            1,
            1,
            vec![record(vec![0.0], vec![0.0], Some(1)), record(vec![0.0], vec![0.0], None)],
        );
        assert!(matches!(r, Err(Error::Data(_))));
    }

    #[test]
    fn csv_round_trip() {
        let ds = small();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x0,x1,c0,cond_id,true_s,proxy_s\n"));
        let back = FrameDataset::read_csv(buf.as_slice(), 2, 1).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn csv_nan_names_the_row() {
        let text = "x0,c0,cond_id,true_s,proxy_s\n1.0,2.0,,,\n0.5,NaN,,,\n";
        match FrameDataset::read_csv(text.as_bytes(), 1, 1) {
            Err(Error::Row { row, msg }) => {
                assert_eq!(row, 2);
                assert!(msg.contains("c0"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_header_checked() {
        let text = "a,b,cond_id,true_s,proxy_s\n1,2,,,\n";
        assert!(matches!(
            FrameDataset::read_csv(text.as_bytes(), 1, 1),
            Err(Error::Row { row: 0, .. })
        ));
    }

    #[test]
    fn with_proxy_sets_flag() {
        let ds = small().with_proxy(&[4, 5]).unwrap();
        assert!(ds.has_proxy_s());
        assert_eq!(ds.proxy_labels().unwrap(), vec![4, 5]);
        assert!(small().proxy_labels().is_err());
    }
}
