//! GPKM binary map files.
//!
//! Layout (little endian): magic `b"GPKM"`, `u32` version (1), `u32` height,
//! `u32` width, `u32` channels, `u8` mask flag, then `height * width *
//! channels` `f32` values in row-major pixel order with channels
//! interleaved, then, if flagged, the validity mask as row-major bits packed
//! LSB-first into `ceil(height * width / 8)` bytes with zero padding.

use std::io::Write;
use std::path::Path;

use super::{DenormMap, GroundDepthMap, MapError, Result};

pub const GPKM_MAGIC: [u8; 4] = *b"GPKM";
pub const GPKM_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 * 4 + 1;

#[derive(Debug, Clone, PartialEq)]
pub struct MapFile {
    pub height: u32,
    pub width: u32,
    pub channels: u32,
    pub data: Vec<f32>,
    pub mask: Option<Vec<bool>>,
}

impl MapFile {
    fn pixel_count(&self) -> usize {
        self.height as usize * self.width as usize
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.pixel_count();
        let mut out = Vec::with_capacity(HEADER_LEN + self.data.len() * 4 + n.div_ceil(8));
        out.extend_from_slice(&GPKM_MAGIC);
        for v in [GPKM_VERSION, self.height, self.width, self.channels] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.push(self.mask.is_some() as u8);
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        if let Some(mask) = &self.mask {
            let mut packed = vec![0u8; n.div_ceil(8)];
            for (i, _) in mask.iter().enumerate().filter(|(_, m)| **m) {
                packed[i / 8] |= 1 << (i % 8);
            }
            out.extend_from_slice(&packed);
        }
        out
    }

    /// Strict parse: any trailing byte, unknown version, non-boolean flag or
    /// set padding bit is rejected, so `to_bytes(from_bytes(b)) == b`.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(MapError::Format(format!("{} bytes is shorter than the header", bytes.len())));
        }
        if bytes[..4] != GPKM_MAGIC {
            return Err(MapError::Format("bad magic".into()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
        let (version, height, width, channels) = (word(0), word(1), word(2), word(3));
        if version != GPKM_VERSION {
            return Err(MapError::Format(format!("unsupported version {version}")));
        }
        let has_mask = match bytes[20] {
            0 => false,
            1 => true,
            f => return Err(MapError::Format(format!("mask flag {f} is not 0 or 1"))),
        };
        let n = (height as usize)
            .checked_mul(width as usize)
            .ok_or_else(|| MapError::Format("dimensions overflow".into()))?;
        let values = n
            .checked_mul(channels as usize)
            .ok_or_else(|| MapError::Format("dimensions overflow".into()))?;
        let mask_len = if has_mask { n.div_ceil(8) } else { 0 };
        let expected = values
            .checked_mul(4)
            .and_then(|v| v.checked_add(HEADER_LEN + mask_len))
            .ok_or_else(|| MapError::Format("dimensions overflow".into()))?;
        if bytes.len() != expected {
            return Err(MapError::Format(format!("expected {expected} bytes, found {}", bytes.len())));
        }
        let payload = &bytes[HEADER_LEN..HEADER_LEN + values * 4];
        let data = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        let mask = if has_mask {
            let packed = &bytes[HEADER_LEN + values * 4..];
            let mask: Vec<bool> = (0..n).map(|i| packed[i / 8] >> (i % 8) & 1 == 1).collect();
            if n % 8 != 0 && packed[packed.len() - 1] >> (n % 8) != 0 {
                return Err(MapError::Format("non-zero mask padding".into()));
            }
            Some(mask)
        } else {
            None
        };
        Ok(Self { height, width, channels, data, mask })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Writes to a temporary file next to `path` and renames it into place.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(&self.to_bytes())?;
        tmp.persist(path).map_err(|e| MapError::Io(e.error))?;
        Ok(())
    }
}

impl From<&GroundDepthMap> for MapFile {
    fn from(m: &GroundDepthMap) -> Self {
        Self {
            height: m.height() as u32,
            width: m.width() as u32,
            channels: 1,
            data: m.depths().iter().map(|&z| z as f32).collect(),
            mask: Some(m.mask().to_vec()),
        }
    }
}

impl From<&DenormMap> for MapFile {
    fn from(m: &DenormMap) -> Self {
        Self {
            height: m.height() as u32,
            width: m.width() as u32,
            channels: 4,
            data: m.data().iter().map(|&v| v as f32).collect(),
            mask: None,
        }
    }
}

impl TryFrom<MapFile> for GroundDepthMap {
    type Error = MapError;

    fn try_from(f: MapFile) -> Result<Self> {
        if f.channels != 1 {
            return Err(MapError::Format(format!("depth map needs 1 channel, file has {}", f.channels)));
        }
        let mask = f.mask.ok_or_else(|| MapError::Format("depth map file without validity mask".into()))?;
        let depth = f.data.iter().map(|&v| v as f64).collect();
        GroundDepthMap::from_parts(f.height as usize, f.width as usize, depth, mask)
    }
}

impl TryFrom<MapFile> for DenormMap {
    type Error = MapError;

    fn try_from(f: MapFile) -> Result<Self> {
        if f.channels != 4 {
            return Err(MapError::Format(format!("denorm map needs 4 channels, file has {}", f.channels)));
        }
        if f.mask.is_some() {
            return Err(MapError::Format("denorm map file carries a mask".into()));
        }
        DenormMap::from_raw(f.height as usize, f.width as usize, f.data.iter().map(|&v| v as f64).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CameraIntrinsics, GroundPlane};
    use crate::maps::{build_global_denorm_map, build_ground_depth_map};
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let f = MapFile { height: 1, width: 3, channels: 1, data: vec![1.0, 2.0, 0.0], mask: Some(vec![true, true, false]) };
        let b = f.to_bytes();
        assert_eq!(&b[..4], b"GPKM");
        assert_eq!(&b[4..8], &1u32.to_le_bytes());
        assert_eq!(&b[8..12], &1u32.to_le_bytes());
        assert_eq!(&b[12..16], &3u32.to_le_bytes());
        assert_eq!(&b[16..20], &1u32.to_le_bytes());
        assert_eq!(b[20], 1);
        assert_eq!(&b[21..25], &1f32.to_le_bytes());
        assert_eq!(b.len(), 21 + 12 + 1);
        assert_eq!(b[33], 0b011);
    }

    #[test]
    fn rejects_corruption() {
        let f = MapFile { height: 2, width: 2, channels: 1, data: vec![1.0; 4], mask: Some(vec![true; 4]) };
        let good = f.to_bytes();
        let mut bad = good.clone();
        bad.push(0);
        assert!(MapFile::from_bytes(&bad).is_err());
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(MapFile::from_bytes(&bad).is_err());
        let mut bad = good.clone();
        bad[20] = 2;
        assert!(MapFile::from_bytes(&bad).is_err());
        let mut bad = good.clone();
        *bad.last_mut().unwrap() |= 0x80;
        assert!(MapFile::from_bytes(&bad).is_err());
        let mut bad = good;
        bad[4] = 2;
        assert!(MapFile::from_bytes(&bad).is_err());
        assert!(MapFile::from_bytes(b"GPK").is_err());
    }

    #[test]
    fn typed_maps_survive_file_round_trip() {
        let g = GroundPlane::new(0.0, -1.0, 0.0, 1.5).unwrap();
        let k = CameraIntrinsics::new(40.0, 40.0, 10.0, 5.0).unwrap();
        let depth = build_ground_depth_map(&k, &g, 11, 20).unwrap();
        let bytes = MapFile::from(&depth).to_bytes();
        let back = GroundDepthMap::try_from(MapFile::from_bytes(&bytes).unwrap()).unwrap();
        assert_eq!(back.mask(), depth.mask());
        assert_eq!(MapFile::from(&back).to_bytes(), bytes);

        let denorm = build_global_denorm_map(&g, 3, 4).unwrap();
        let back = DenormMap::try_from(MapFile::from_bytes(&MapFile::from(&denorm).to_bytes()).unwrap()).unwrap();
        // all channel values here are exactly representable in f32
        assert_eq!(back.data().iter().map(|v| *v as f32).collect::<Vec<_>>(), denorm.data().iter().map(|v| *v as f32).collect::<Vec<_>>());
        assert!(GroundDepthMap::try_from(MapFile::from(&denorm)).is_err());
    }

    #[test]
    fn write_and_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.gpkm");
        let f = MapFile { height: 3, width: 3, channels: 4, data: (0..36).map(|i| i as f32 * 0.5).collect(), mask: None };
        f.write(&path).unwrap();
        assert_eq!(MapFile::read(&path).unwrap(), f);
    }

    proptest! {
        #[test]
        fn bytes_round_trip(h in 1u32..7, w in 1u32..7, c in 1u32..5, seed in any::<u64>(), masked in any::<bool>()) {
            let n = (h * w) as usize;
            let mut s = seed;
            let mut next = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); s };
            let data: Vec<f32> = (0..n * c as usize).map(|_| f32::from_bits((next() >> 32) as u32)).collect();
            let mask = masked.then(|| (0..n).map(|_| next() >> 63 == 1).collect());
            let f = MapFile { height: h, width: w, channels: c, data, mask };
            let bytes = f.to_bytes();
            let back = MapFile::from_bytes(&bytes).unwrap();
            prop_assert_eq!(back.to_bytes(), bytes);
        }
    }
}
