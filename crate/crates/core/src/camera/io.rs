//! Binary range-image files: `RNGI` magic, u32 width, u32 height, then row-major f32
//! little-endian ranges (NaN = hole). Pose and camera go to a JSON sidecar next to the file.

use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

use super::{CameraModel, RangeImage};
use crate::{Error, Pose2, Result};

const MAGIC: &[u8; 4] = b"RNGI";

#[derive(Serialize, Deserialize)]
struct Sidecar {
    camera_pose: Pose2,
    camera: CameraModel,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn encode(img: &RangeImage) -> Vec<u8> {
    let mut buf = Vec::with_capacity(12 + 4 * img.ranges.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(img.width as u32).to_le_bytes());
    buf.extend_from_slice(&(img.height as u32).to_le_bytes());
    for r in &img.ranges {
        buf.extend_from_slice(&r.to_le_bytes());
    }
    buf
}

pub fn decode(bytes: &[u8], camera_pose: Pose2, camera: CameraModel) -> Result<RangeImage> {
    let bad = |r: &str| Error::format("range image", r);
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(bad("missing RNGI header"));
    }
    let w = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let h = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[12..];
    if body.len() != 4 * w * h {
        return Err(bad("payload size does not match width*height"));
    }
    let ranges = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    RangeImage::new(w, h, ranges, camera_pose, camera)
}

pub fn write_range_image(img: &RangeImage, path: &Path) -> Result<()> {
    fs::write(path, encode(img)).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(&Sidecar {
        camera_pose: img.camera_pose,
        camera: img.camera.clone(),
    })?;
    fs::write(&side, json + "\n").map_err(|e| Error::io(&side, e))
}

pub fn read_range_image(path: &Path) -> Result<RangeImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: Sidecar = serde_json::from_str(&text)?;
    decode(&bytes, meta.camera_pose, meta.camera)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_layout_and_reload() {
        let img = RangeImage::new(
            2,
            1,
            vec![1.5, f32::NAN],
            Pose2::new(1.0, 2.0, 0.5),
            CameraModel::default(),
        )
        .unwrap();
        let bytes = encode(&img);
        assert_eq!(&bytes[..4], b"RNGI");
        assert_eq!(&bytes[4..12], &[2, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(&bytes[12..16], &1.5f32.to_le_bytes());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("img.rngi");
        write_range_image(&img, &p).unwrap();
        let back = read_range_image(&p).unwrap();
        assert_eq!(back.ranges[0], 1.5);
        assert!(back.ranges[1].is_nan());
        assert_eq!(back.camera_pose, img.camera_pose);
        assert!(decode(b"XXXX\0\0\0\0\0\0\0\0", img.camera_pose, img.camera.clone()).is_err());
    }
}
