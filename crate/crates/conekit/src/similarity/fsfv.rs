//! Binary feature-vector files (`.fsfv`).
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "FSFV" | u32 version = 1 | u32 count | u32 dim
//! then per record: u32 name_len | name (UTF-8) | dim x f32
//! ```
//!
//! Loading validates magic, version, dimensions and every vector (finite,
//! non-zero norm); errors carry the byte offset where reading failed.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::similarity::{FeatureVector, SimilarityError};

pub const MAGIC: [u8; 4] = *b"FSFV";
pub const VERSION: u32 = 1;

// Guards against allocating absurd buffers for corrupt headers.
const MAX_NAME_LEN: u32 = 1 << 16;
const MAX_DIM: u32 = 1 << 24;

pub fn save_features(features: &[FeatureVector], path: &Path) -> Result<(), SimilarityError> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    write_to(features, &mut writer)?;
    writer.flush()?;
    Ok(())
}

pub fn load_features(path: &Path) -> Result<Vec<FeatureVector>, SimilarityError> {
    let file = File::open(path)?;
    read_from(&mut BufReader::new(file))
}

pub(crate) fn write_to(
    features: &[FeatureVector],
    writer: &mut impl Write,
) -> Result<(), SimilarityError> {
    let dim = features.first().map(|f| f.dim()).unwrap_or(0);
    for f in features {
        if f.dim() != dim {
            return Err(SimilarityError::DimensionMismatch(dim, f.dim()));
        }
    }
    writer.write_all(&MAGIC)?;
    writer.write_all(&VERSION.to_le_bytes())?;
    writer.write_all(&(features.len() as u32).to_le_bytes())?;
    writer.write_all(&(dim as u32).to_le_bytes())?;
    for f in features {
        let name = f.image_ref().as_bytes();
        writer.write_all(&(name.len() as u32).to_le_bytes())?;
        writer.write_all(name)?;
        for v in f.values() {
            writer.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

struct Counter<'a, R> {
    inner: &'a mut R,
    offset: u64,
}

impl<R: Read> Counter<'_, R> {
    fn read_exact(&mut self, buf: &mut [u8], what: &str) -> Result<(), SimilarityError> {
        let at = self.offset;
        self.inner
            .read_exact(buf)
            .map_err(|e| SimilarityError::FileFormat {
                offset: at,
                message: format!("{what}: {e}"),
            })?;
        self.offset += buf.len() as u64;
        Ok(())
    }

    fn read_u32(&mut self, what: &str) -> Result<u32, SimilarityError> {
        let mut buf = [0u8; 4];
        self.read_exact(&mut buf, what)?;
        Ok(u32::from_le_bytes(buf))
    }
}

pub(crate) fn read_from(reader: &mut impl Read) -> Result<Vec<FeatureVector>, SimilarityError> {
    let mut r = Counter {
        inner: reader,
        offset: 0,
    };

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic, "magic")?;
    if magic != MAGIC {
        return Err(SimilarityError::FileFormat {
            offset: 0,
            message: format!("bad magic {magic:?}, expected \"FSFV\""),
        });
    }
    let version = r.read_u32("version")?;
    if version != VERSION {
        return Err(SimilarityError::FileFormat {
            offset: 4,
            message: format!("unsupported version {version}, expected {VERSION}"),
        });
    }
    let count = r.read_u32("record count")?;
    let dim = r.read_u32("dimension")?;
    if dim > MAX_DIM {
        return Err(SimilarityError::FileFormat {
            offset: 12,
            message: format!("dimension {dim} is implausibly large"),
        });
    }

    let mut features = Vec::with_capacity(count.min(1 << 20) as usize);
    for record in 0..count {
        let name_at = r.offset;
        let name_len = r.read_u32(&format!("record {record} name length"))?;
        if name_len > MAX_NAME_LEN {
            return Err(SimilarityError::FileFormat {
                offset: name_at,
                message: format!("record {record}: name length {name_len} is implausibly large"),
            });
        }
        let mut name_bytes = vec![0u8; name_len as usize];
        r.read_exact(&mut name_bytes, &format!("record {record} name"))?;
        let name = String::from_utf8(name_bytes).map_err(|e| SimilarityError::FileFormat {
            offset: name_at + 4,
            message: format!("record {record}: name is not UTF-8: {e}"),
        })?;
        let mut values = Vec::with_capacity(dim as usize);
        let mut buf = [0u8; 4];
        for _ in 0..dim {
            r.read_exact(&mut buf, &format!("record {record} (`{name}`) values"))?;
            values.push(f32::from_le_bytes(buf));
        }
        features.push(FeatureVector::new(name, values)?);
    }

    // Trailing bytes mean the header lied about the count.
    let mut extra = [0u8; 1];
    if r.inner.read(&mut extra).map_err(SimilarityError::Io)? != 0 {
        return Err(SimilarityError::FileFormat {
            offset: r.offset,
            message: "trailing bytes after the last record".into(),
        });
    }

    Ok(features)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(name: &str, values: &[f32]) -> FeatureVector {
        FeatureVector::new(name, values.to_vec()).unwrap()
    }

    #[test]
    fn round_trip_preserves_names_and_bits() {
        let features = vec![
            fv("team-a_00001.png", &[1.0, -2.5, 3.25]),
            fv("team-b_00002.jpg", &[0.001, 7.0, -0.0625]),
        ];
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("features.fsfv");
        save_features(&features, &path).unwrap();
        let loaded = load_features(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        for (a, b) in features.iter().zip(&loaded) {
            assert_eq!(a.image_ref(), b.image_ref());
            assert_eq!(a.values(), b.values());
        }
    }

    #[test]
    fn empty_list_round_trips() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("empty.fsfv");
        save_features(&[], &path).unwrap();
        assert!(load_features(&path).unwrap().is_empty());
    }

    #[test]
    fn bad_magic_is_rejected() {
        let mut bytes = b"NOPE".to_vec();
        bytes.extend_from_slice(&VERSION.to_le_bytes());
        let err = read_from(&mut bytes.as_slice()).unwrap_err();
        assert!(matches!(err, SimilarityError::FileFormat { offset: 0, .. }), "{err}");
    }

    #[test]
    fn truncation_reports_offset() {
        let features = vec![fv("a", &[1.0, 2.0, 3.0, 4.0])];
        let mut bytes = Vec::new();
        write_to(&features, &mut bytes).unwrap();
        bytes.truncate(bytes.len() - 3);
        let err = read_from(&mut bytes.as_slice()).unwrap_err();
        match err {
            SimilarityError::FileFormat { offset, message } => {
                assert!(offset > 0);
                assert!(message.contains("record 0"), "{message}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn zero_vector_records_are_rejected_by_name() {
        // Hand-build a file with a zero vector.
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&MAGIC);
        bytes.extend_from_slice(&VERSION.to_le_bytes());
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&4u32.to_le_bytes());
        bytes.extend_from_slice(b"dead");
        bytes.extend_from_slice(&0f32.to_le_bytes());
        bytes.extend_from_slice(&0f32.to_le_bytes());
        let err = read_from(&mut bytes.as_slice()).unwrap_err();
        match err {
            SimilarityError::ZeroVector(name) => assert_eq!(name, "dead"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&MAGIC);
        bytes.extend_from_slice(&9u32.to_le_bytes());
        bytes.extend_from_slice(&0u32.to_le_bytes());
        bytes.extend_from_slice(&0u32.to_le_bytes());
        let err = read_from(&mut bytes.as_slice()).unwrap_err();
        assert!(matches!(err, SimilarityError::FileFormat { offset: 4, .. }));
    }

    #[test]
    fn mixed_dimensions_refuse_to_save() {
        let features = vec![fv("a", &[1.0]), fv("b", &[1.0, 2.0])];
        let mut sink = Vec::new();
        assert!(matches!(
            write_to(&features, &mut sink),
            Err(SimilarityError::DimensionMismatch(1, 2))
        ));
    }
}
