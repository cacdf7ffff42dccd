//! Binary dump of the per-pixel feature matrix and class labels.
//!
//! Layout, all little-endian:
//!
//! | field  | type              | count     |
//! |--------|-------------------|-----------|
//! | H      | u32               | 1         |
//! | W      | u32               | 1         |
//! | d      | u32               | 1         |
//! | n      | u32 (class count) | 1         |
//! | X      | f64, row-major    | H · W · d |
//! | labels | u32               | H · W     |
//!
//! Row `r · W + c` of `X` is the feature vector of pixel `(r, c)`.

use std::io::{Read, Write};
use std::path::Path;

use changechip_core::detection::Detection;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDump {
    pub height: u32,
    pub width: u32,
    pub dim: u32,
    pub classes: u32,
    pub features: Vec<f64>,
    pub labels: Vec<u32>,
}

impl FeatureDump {
    pub fn from_detection(det: &Detection) -> Self {
        let cm = &det.cluster_map;
        Self {
            height: cm.height as u32,
            width: cm.width as u32,
            dim: det.features.dim as u32,
            classes: cm.n as u32,
            features: det.features.data.clone(),
            labels: cm.labels.iter().map(|&l| l as u32).collect(),
        }
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        for v in [self.height, self.width, self.dim, self.classes] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.features {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.labels {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> std::io::Result<Self> {
        let mut u = [0u8; 4];
        let mut header = [0u32; 4];
        for h in header.iter_mut() {
            r.read_exact(&mut u)?;
            *h = u32::from_le_bytes(u);
        }
        let [height, width, dim, classes] = header;
        let pixels = height as usize * width as usize;
        let mut f = [0u8; 8];
        let mut features = Vec::with_capacity(pixels * dim as usize);
        for _ in 0..pixels * dim as usize {
            r.read_exact(&mut f)?;
            features.push(f64::from_le_bytes(f));
        }
        let mut labels = Vec::with_capacity(pixels);
        for _ in 0..pixels {
            r.read_exact(&mut u)?;
            labels.push(u32::from_le_bytes(u));
        }
        Ok(Self { height, width, dim, classes, features, labels })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(file)).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_round_trip() {
        let d = FeatureDump {
            height: 1,
            width: 2,
            dim: 2,
            classes: 3,
            features: vec![1.0, -2.5, 0.0, 1e-300],
            labels: vec![2, 0],
        };
        let mut buf = Vec::new();
        d.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 4 * 8 + 2 * 4);
        assert_eq!(&buf[..4], &[1, 0, 0, 0]);
        assert_eq!(&buf[12..16], &[3, 0, 0, 0]);
        assert_eq!(&buf[16..24], &1.0f64.to_le_bytes());
        assert_eq!(&buf[48..52], &[2, 0, 0, 0]);
        assert_eq!(FeatureDump::read_from(&buf[..]).unwrap(), d);
        assert!(FeatureDump::read_from(&buf[..buf.len() - 1]).is_err());
    }
}
