//! Binary dataset and split files, and CSV export.
//!
//! Dataset layout (all little-endian):
//!
//! ```text
//! magic      8 bytes  "ADLDSET\0"
//! version    u32      1
//! n_points   u64
//! n_build    u64
//! d_t d_s d_st d_y    u32 x 4
//! buildings  n_build x 5 f64: id, latitude, longitude, region, archetype
//! points     n_points x (5 + d_x + d_y) f64:
//!            building_id, month, day, hour, quarter, features, label
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Building, Dataset, DatasetSplits, LabeledPoint, Schema, TimePoint};
use crate::{Error, Result};

const DATASET_MAGIC: &[u8; 8] = b"ADLDSET\0";
const SPLITS_MAGIC: &[u8; 8] = b"ADLSPLT\0";
const VERSION: u32 = 1;

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::Format(format!("truncated file while reading {what}"))
            } else {
                Error::Io(e)
            }
        })?;
        Ok(buf)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(what)?))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(what)?))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes(what)?))
    }

    fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64(what)).collect()
    }

    fn header(&mut self, magic: &[u8; 8]) -> Result<()> {
        let found: [u8; 8] = self.bytes("magic")?;
        if &found != magic {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&found),
                String::from_utf8_lossy(magic)
            )));
        }
        let version = self.u32("version")?;
        if version != VERSION {
            return Err(Error::Version {
                found: version,
                expected: VERSION,
            });
        }
        Ok(())
    }

    fn expect_eof(&mut self) -> Result<()> {
        let mut probe = [0u8; 1];
        match self.inner.read(&mut probe)? {
            0 => Ok(()),
            _ => Err(Error::Format("trailing bytes after last record".into())),
        }
    }
}

fn put_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn usize_from(v: u64, what: &str) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::Format(format!("{what} {v} does not fit in memory")))
}

fn ordinal(v: f64, what: &str) -> Result<u8> {
    if v.fract() != 0.0 || !(0.0..=255.0).contains(&v) {
        return Err(Error::Format(format!("{what} {v} is not a small integer")));
    }
    Ok(v as u8)
}

pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    dataset.validate()?;
    let mut w = BufWriter::new(File::create(path)?);
    let s = dataset.schema;
    w.write_all(DATASET_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(dataset.points.len() as u64).to_le_bytes())?;
    w.write_all(&(dataset.buildings.len() as u64).to_le_bytes())?;
    for d in [s.d_t, s.d_s, s.d_st, s.d_y] {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    for b in &dataset.buildings {
        for v in [f64::from(b.id), b.latitude, b.longitude, f64::from(b.region), f64::from(b.archetype)] {
            put_f64(&mut w, v)?;
        }
    }
    for p in &dataset.points {
        put_f64(&mut w, f64::from(p.building_id))?;
        for v in p.time.ordinals() {
            put_f64(&mut w, v)?;
        }
        for &v in p.features.iter().chain(&p.label) {
            put_f64(&mut w, v)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let mut r = Reader {
        inner: BufReader::new(File::open(path)?),
    };
    r.header(DATASET_MAGIC)?;
    let n_points = usize_from(r.u64("point count")?, "point count")?;
    let n_buildings = usize_from(r.u64("building count")?, "building count")?;
    let schema = Schema {
        d_t: r.u32("d_t")? as usize,
        d_s: r.u32("d_s")? as usize,
        d_st: r.u32("d_st")? as usize,
        d_y: r.u32("d_y")? as usize,
    };
    schema
        .validate()
        .map_err(|_| Error::Format(format!("invalid schema in header: {schema:?}")))?;

    let mut buildings = Vec::with_capacity(n_buildings.min(1 << 20));
    for _ in 0..n_buildings {
        let v = r.f64s(5, "building record")?;
        buildings.push(Building {
            id: v[0] as u32,
            latitude: v[1],
            longitude: v[2],
            region: v[3] as u32,
            archetype: v[4] as u32,
        });
    }
    let mut points = Vec::with_capacity(n_points.min(1 << 20));
    for _ in 0..n_points {
        let building_id = r.f64("point record")? as u32;
        let o = r.f64s(4, "point record")?;
        let time = TimePoint::new(
            ordinal(o[0], "month")?,
            ordinal(o[1], "day")?,
            ordinal(o[2], "hour")?,
            ordinal(o[3], "quarter")?,
        )
        .map_err(|e| Error::Format(e.to_string()))?;
        let features = r.f64s(schema.d_x(), "point features")?;
        let label = r.f64s(schema.d_y, "point label")?;
        points.push(LabeledPoint {
            building_id,
            time,
            features,
            label,
        });
    }
    r.expect_eof()?;
    Ok(Dataset {
        schema,
        buildings,
        points,
    })
}

pub fn save_splits(splits: &DatasetSplits, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(SPLITS_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for part in [
        &splits.avail,
        &splits.val,
        &splits.spatial,
        &splits.temporal,
        &splits.spatio_temporal,
    ] {
        w.write_all(&(part.len() as u64).to_le_bytes())?;
        for &i in part {
            w.write_all(&(i as u64).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_splits(path: &Path) -> Result<DatasetSplits> {
    let mut r = Reader {
        inner: BufReader::new(File::open(path)?),
    };
    r.header(SPLITS_MAGIC)?;
    let mut parts = Vec::with_capacity(5);
    for _ in 0..5 {
        let n = usize_from(r.u64("partition length")?, "partition length")?;
        let ids = (0..n)
            .map(|_| r.u64("partition index").and_then(|v| usize_from(v, "index")))
            .collect::<Result<Vec<_>>>()?;
        parts.push(ids);
    }
    r.expect_eof()?;
    let mut it = parts.into_iter();
    let mut next = || it.next().expect("five partitions");
    Ok(DatasetSplits {
        avail: next(),
        val: next(),
        spatial: next(),
        temporal: next(),
        spatio_temporal: next(),
    })
}

/// One row per point with named columns.
pub fn export_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let s = dataset.schema;
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ["building_id", "month", "day", "hour", "quarter"]
        .iter()
        .map(|h| h.to_string())
        .collect();
    header.extend((0..s.d_t).map(|i| format!("x_t_{i}")));
    header.extend((0..s.d_s).map(|i| format!("x_s_{i}")));
    header.extend((0..s.d_st).map(|i| format!("x_st_{i}")));
    header.extend((0..s.d_y).map(|i| format!("y_{i}")));
    w.write_record(&header)?;
    for p in &dataset.points {
        let mut row = Vec::with_capacity(header.len());
        row.push(p.building_id.to_string());
        row.extend(p.time.ordinals().iter().map(|v| format!("{v}")));
        row.extend(p.features.iter().chain(&p.label).map(|v| format!("{v}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
