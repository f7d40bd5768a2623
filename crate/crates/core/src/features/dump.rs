use std::fs;
use std::path::Path;

use super::{AcousticFrameFeatures, FEATURE_CHANNELS};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"LVCFEAT1";

/// Writes `LVCFEAT1 | u32 frames | u32 channels | f32 rows | 8 x f32 norm`.
pub fn write_features(path: impl AsRef<Path>, feats: &AcousticFrameFeatures) -> Result<()> {
    let mut buf = Vec::with_capacity(16 + 4 * (feats.len() * FEATURE_CHANNELS + 8));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(feats.len() as u32).to_le_bytes());
    buf.extend_from_slice(&(FEATURE_CHANNELS as u32).to_le_bytes());
    for v in feats.frames.iter().flatten().chain(&feats.normalization) {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_features(path: impl AsRef<Path>) -> Result<AcousticFrameFeatures> {
    let path = path.as_ref();
    let buf = fs::read(path)?;
    if buf.len() < 16 || &buf[..8] != MAGIC {
        return Err(Error::format(path, "missing LVCFEAT1 header"));
    }
    let frames = u32::from_le_bytes(buf[8..12].try_into().unwrap()) as usize;
    let channels = u32::from_le_bytes(buf[12..16].try_into().unwrap()) as usize;
    if channels != FEATURE_CHANNELS {
        return Err(Error::format(path, format!("expected {FEATURE_CHANNELS} channels, found {channels}")));
    }
    let expected = 16 + 4 * (frames * channels + 2 * FEATURE_CHANNELS);
    if buf.len() != expected {
        return Err(Error::format(path, format!("expected {expected} bytes, found {}", buf.len())));
    }
    let values: Vec<f64> = buf[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    let (rows, norm) = values.split_at(frames * channels);
    let frames = rows.chunks_exact(channels).map(|r| [r[0], r[1], r[2], r[3]]).collect();
    let mut normalization = [0.0; 2 * FEATURE_CHANNELS];
    normalization.copy_from_slice(norm);
    Ok(AcousticFrameFeatures { frames, normalization })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.feat");
        let f = AcousticFrameFeatures {
            frames: vec![[0.5, 1.0, -0.25, 2.0], [0.0, 0.0, 1.5, -1.0]],
            normalization: [5.0, 0.25, 0.0, 1.0, -3.0, 0.5, 0.75, 0.125],
        };
        write_features(&p, &f).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(&bytes[..8], b"LVCFEAT1");
        assert_eq!(bytes.len(), 16 + 4 * (8 + 8));
        assert_eq!(read_features(&p).unwrap(), f);
    }

    #[test]
    fn truncated_file_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.feat");
        fs::write(&p, b"LVCFEAT1\x02\0\0\0\x04\0\0\0").unwrap();
        assert!(matches!(read_features(&p), Err(Error::Format { .. })));
    }
}
