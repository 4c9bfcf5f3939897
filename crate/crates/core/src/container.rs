//! Binary container for spectrogram tensors.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! "SPTN" | version: u32 = 1 | count: u32
//! count × { label_len: u32 | label: utf8 | t: f64 | freq: u32 | time: u32
//!           | real channel: freq·time f64 row-major | imag channel: same }
//! ```
//!
//! Used for trajectory dumps and training-batch fixtures.

use std::io::Write;

use crate::diffusion::TrainingExample;
use crate::error::{Error, Result};
use crate::schedule::Time;
use crate::tensor::SpectroTensor;

const MAGIC: &[u8; 4] = b"SPTN";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct TensorRecord {
    pub label: String,
    pub t: f64,
    pub tensor: SpectroTensor,
}

pub fn write_records<W: Write>(mut out: W, records: &[TensorRecord]) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(records.len() as u32).to_le_bytes())?;
    for r in records {
        let (f, n) = r.tensor.shape();
        out.write_all(&(r.label.len() as u32).to_le_bytes())?;
        out.write_all(r.label.as_bytes())?;
        out.write_all(&r.t.to_le_bytes())?;
        out.write_all(&(f as u32).to_le_bytes())?;
        out.write_all(&(n as u32).to_le_bytes())?;
        for v in r.tensor.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Container(format!(
                "truncated at offset {} ({n} bytes needed)",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn read_records(bytes: &[u8]) -> Result<Vec<TensorRecord>> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(Error::Container("bad magic".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Container(format!("unsupported version {version}")));
    }
    let count = c.u32()? as usize;
    let mut out = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let len = c.u32()? as usize;
        let label = std::str::from_utf8(c.take(len)?)
            .map_err(|e| Error::Container(format!("label is not utf-8: {e}")))?
            .to_string();
        let t = c.f64()?;
        let f = c.u32()? as usize;
        let n = c.u32()? as usize;
        let entries = f
            .checked_mul(n)
            .and_then(|v| v.checked_mul(2))
            .ok_or_else(|| Error::Container("tensor shape overflows".into()))?;
        let data = (0..entries).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
        out.push(TensorRecord {
            label,
            t,
            tensor: SpectroTensor::from_flat(f, n, &data)?,
        });
    }
    if c.pos != bytes.len() {
        return Err(Error::Container(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    Ok(out)
}

/// Flattens a batch into records labelled `b/x0`, `b/y`, `b/z`, `b/xt`.
pub fn batch_to_records(batch: &[TrainingExample]) -> Vec<TensorRecord> {
    batch
        .iter()
        .enumerate()
        .flat_map(|(b, ex)| {
            let t = ex.t.get();
            [("x0", &ex.x0), ("y", &ex.y), ("z", &ex.z), ("xt", &ex.xt)]
                .into_iter()
                .map(move |(name, tensor)| TensorRecord {
                    label: format!("{b}/{name}"),
                    t,
                    tensor: tensor.clone(),
                })
        })
        .collect()
}

pub fn records_to_batch(records: &[TensorRecord]) -> Result<Vec<TrainingExample>> {
    if !records.len().is_multiple_of(4) {
        return Err(Error::Container(format!(
            "{} records do not form whole training examples",
            records.len()
        )));
    }
    records
        .chunks_exact(4)
        .enumerate()
        .map(|(b, chunk)| {
            for (r, name) in chunk.iter().zip(["x0", "y", "z", "xt"]) {
                if r.label != format!("{b}/{name}") {
                    return Err(Error::Container(format!(
                        "expected record {b}/{name}, found {}",
                        r.label
                    )));
                }
            }
            Ok(TrainingExample {
                x0: chunk[0].tensor.clone(),
                y: chunk[1].tensor.clone(),
                t: Time::new(chunk[0].t)?,
                z: chunk[2].tensor.clone(),
                xt: chunk[3].tensor.clone(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::make_training_batch;
    use crate::schedule::VpSchedule;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn records_round_trip(
            f in 1usize..4,
            n in 1usize..4,
            seed in any::<u64>(),
            label in "[a-z0-9/]{0,12}",
            t in 0.0f64..1.0,
        ) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let tensor = SpectroTensor::standard_normal(f, n, &mut rng);
            let recs = vec![TensorRecord { label, t, tensor }];
            let mut buf = Vec::new();
            write_records(&mut buf, &recs).unwrap();
            prop_assert_eq!(read_records(&buf).unwrap(), recs);
        }
    }

    #[test]
    fn batch_round_trip() {
        let x0 = SpectroTensor::from_flat(1, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = SpectroTensor::from_elem(1, 2, 0.5);
        let batch = make_training_batch(&vec![(x0, y); 3], &VpSchedule::default(), 0.04, 2).unwrap();
        let mut buf = Vec::new();
        write_records(&mut buf, &batch_to_records(&batch)).unwrap();
        let back = records_to_batch(&read_records(&buf).unwrap()).unwrap();
        assert_eq!(back, batch);
        let json = serde_json::to_string(&batch).unwrap();
        let from_json: Vec<TrainingExample> = serde_json::from_str(&json).unwrap();
        assert_eq!(from_json, batch);
    }

    #[test]
    fn corrupt_input() {
        assert!(read_records(b"NOPE").is_err());
        let recs = vec![TensorRecord {
            label: "a".into(),
            t: 0.5,
            tensor: SpectroTensor::zeros(2, 2),
        }];
        let mut buf = Vec::new();
        write_records(&mut buf, &recs).unwrap();
        assert!(read_records(&buf[..buf.len() - 3]).is_err());
        buf.push(0);
        assert!(read_records(&buf).is_err());
    }
}
