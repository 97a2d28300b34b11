use serde::Serialize;
use std::fs;
use std::path::Path;

use super::RimDetection;
use crate::{Error, Result};

#[derive(Serialize)]
struct DetectionRecord<'a> {
    pixels: &'a [(u32, u32)],
    world_points_m: Vec<[f64; 2]>,
    mean_range_m: f64,
    est_width_m: f64,
    q_score: Option<f64>,
}

/// One JSON object per detection; `q_scores[i]` is the Q-Score of detection `i` on its own.
pub fn detections_to_jsonl(detections: &[RimDetection], q_scores: &[Option<f64>]) -> Result<String> {
    let mut out = String::new();
    for (i, d) in detections.iter().enumerate() {
        let rec = DetectionRecord {
            pixels: &d.contour_pixels,
            world_points_m: d.world_points.iter().map(|p| [p.x, p.y]).collect(),
            mean_range_m: d.mean_range,
            est_width_m: d.est_width,
            q_score: q_scores.get(i).copied().flatten(),
        };
        out.push_str(&serde_json::to_string(&rec)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_detections_jsonl(detections: &[RimDetection], q_scores: &[Option<f64>], path: &Path) -> Result<()> {
    let text = detections_to_jsonl(detections, q_scores)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;

    #[test]
    fn one_line_per_detection() {
        let d = RimDetection {
            contour_pixels: vec![(3, 4)],
            rover_points: vec![Vector2::new(1.0, 0.0)],
            world_points: vec![Vector2::new(1.5, -2.0)],
            mean_range: 9.5,
            est_width: 14.0,
        };
        let text = detections_to_jsonl(&[d.clone(), d], &[Some(0.5)]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let v: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(v["pixels"], serde_json::json!([[3, 4]]));
        assert_eq!(v["world_points_m"], serde_json::json!([[1.5, -2.0]]));
        assert_eq!(v["q_score"], 0.5);
        assert!(serde_json::from_str::<serde_json::Value>(lines[1]).unwrap()["q_score"].is_null());
    }
}
