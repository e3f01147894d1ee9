//! `BOEM` binary model files.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "BOEM" | version u32 | dims u32 | window u32 | epochs u32 | negatives u32
//! | min_count u32 | seed u64 | vocab_size u32 | learning_rate f32
//! | subsample f64 (0 = off)
//! vocab_size × (len u32 | UTF-8 bytes | count u64)
//! input matrix  vocab_size × dims f32, row per term in index order
//! output matrix vocab_size × dims f32
//! ```

use std::io::{self, Read, Write};

use super::{EmbedConfig, EmbedError, EmbeddingModel};
use crate::binio::*;

const MAGIC: &[u8; 4] = b"BOEM";
const VERSION: u32 = 1;
const MAX_TERM_BYTES: usize = 1 << 16;

fn invalid(msg: &str) -> EmbedError {
    EmbedError::Format(io::Error::new(io::ErrorKind::InvalidData, msg.to_string()))
}

impl EmbeddingModel {
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        let c = &self.config;
        w.write_all(MAGIC)?;
        write_u32(&mut w, VERSION)?;
        write_u32(&mut w, c.dims as u32)?;
        write_u32(&mut w, c.window as u32)?;
        write_u32(&mut w, c.epochs as u32)?;
        write_u32(&mut w, c.negatives as u32)?;
        write_u32(&mut w, c.min_count as u32)?;
        write_u64(&mut w, c.seed)?;
        write_u32(&mut w, self.terms.len() as u32)?;
        write_f32(&mut w, c.learning_rate)?;
        write_f64(&mut w, c.subsample.unwrap_or(0.0))?;
        for (term, count) in &self.terms {
            write_str(&mut w, term)?;
            write_u64(&mut w, *count)?;
        }
        write_f32s(&mut w, &self.input)?;
        write_f32s(&mut w, &self.output)?;
        w.flush()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, EmbedError> {
        expect_magic(&mut r, MAGIC)?;
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(invalid(&format!("unsupported BOEM version {version}")));
        }
        let dims = read_u32(&mut r)? as usize;
        let window = read_u32(&mut r)? as usize;
        let epochs = read_u32(&mut r)? as usize;
        let negatives = read_u32(&mut r)? as usize;
        let min_count = read_u32(&mut r)? as u64;
        let seed = read_u64(&mut r)?;
        let vocab_size = read_u32(&mut r)? as usize;
        let learning_rate = read_f32(&mut r)?;
        let subsample = read_f64(&mut r)?;
        if dims == 0 {
            return Err(invalid("dims is zero"));
        }
        let config = EmbedConfig {
            dims,
            window,
            epochs,
            negatives,
            min_count,
            learning_rate,
            subsample: (subsample > 0.0).then_some(subsample),
            seed,
            workers: 1,
        };
        let mut terms = Vec::with_capacity(vocab_size.min(1 << 20));
        for _ in 0..vocab_size {
            let term = read_str(&mut r, MAX_TERM_BYTES)?;
            let count = read_u64(&mut r)?;
            terms.push((term, count));
        }
        let input = read_f32s(&mut r, vocab_size * dims)?;
        let output = read_f32s(&mut r, vocab_size * dims)?;
        let model = EmbeddingModel::from_parts(config, terms, input, output);
        if model.index.len() != model.terms.len() {
            return Err(invalid("duplicate vocabulary terms"));
        }
        if !model.is_finite() {
            return Err(invalid("non-finite vector component"));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> EmbeddingModel {
        let config = EmbedConfig {
            dims: 3,
            subsample: Some(1e-3),
            seed: 42,
            ..EmbedConfig::default()
        };
        EmbeddingModel::from_parts(
            config,
            vec![("ônibus".into(), 10), ("busão".into(), 6)],
            vec![0.1, 0.2, 0.3, -0.1, -0.2, -0.3],
            vec![1.0, 0.0, 0.5, 0.25, -0.75, 2.0],
        )
    }

    #[test]
    fn roundtrip() {
        let m = model();
        let bytes = m.to_bytes();
        assert_eq!(&bytes[..4], b"BOEM");
        let back = EmbeddingModel::read_from(&bytes[..]).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn header_layout() {
        let bytes = model().to_bytes();
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[28..36].try_into().unwrap()), 42);
        assert_eq!(u32::from_le_bytes(bytes[36..40].try_into().unwrap()), 2);
    }

    #[test]
    fn rejects_bad_input() {
        let mut bytes = model().to_bytes();
        assert!(EmbeddingModel::read_from(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        assert!(EmbeddingModel::read_from(&bytes[..]).is_err());
    }
}
