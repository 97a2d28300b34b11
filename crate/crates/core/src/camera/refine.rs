use super::RangeImage;

/// Removes noisy far-range stereo above the row where the mean range peaks.
///
/// Row means (holes excluded) are scanned from the bottom row upward starting at the first
/// row whose mean exceeds `start_range`. When the mean falls for `consecutive_rows` rows in a
/// row, the peak row and every row above it become holes. Rows without valid pixels are skipped.
pub fn refine_stereo(img: &RangeImage, start_range: f64, consecutive_rows: usize) -> RangeImage {
    let consecutive_rows = consecutive_rows.max(1);
    let means: Vec<Option<f64>> = (0..img.height)
        .map(|v| {
            let (sum, n) = img
                .row(v)
                .iter()
                .filter(|r| !r.is_nan())
                .fold((0.0f64, 0usize), |(s, n), &r| (s + r as f64, n + 1));
            (n > 0).then(|| sum / n as f64)
        })
        .collect();

    let mut cut: Option<usize> = None;
    let mut started = false;
    let mut peak_row = 0;
    let mut prev = 0.0;
    let mut falling = 0;
    for v in (0..img.height).rev() {
        let Some(m) = means[v] else { continue };
        if !started {
            if m > start_range {
                started = true;
                peak_row = v;
                prev = m;
            }
            continue;
        }
        if m < prev {
            falling += 1;
            if falling >= consecutive_rows {
                cut = Some(peak_row);
                break;
            }
        } else {
            falling = 0;
            peak_row = v;
        }
        prev = m;
    }

    let mut out = img.clone();
    if let Some(peak) = cut {
        out.ranges[..(peak + 1) * img.width].fill(f32::NAN);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::CameraModel;
    use crate::Pose2;

    fn image_from_row_means(means: &[f32]) -> RangeImage {
        // means listed bottom row first
        let w = 4;
        let h = means.len();
        let mut ranges = vec![0.0; w * h];
        for (i, &m) in means.iter().enumerate() {
            let v = h - 1 - i;
            for u in 0..w {
                ranges[v * w + u] = m + (u as f32 - 1.5) * 0.1;
            }
        }
        RangeImage::new(w, h, ranges, Pose2::new(0.0, 0.0, 0.0), CameraModel::default()).unwrap()
    }

    #[test]
    fn monotone_rows_untouched() {
        let img = image_from_row_means(&[5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0]);
        assert_eq!(refine_stereo(&img, 20.0, 2), img);
    }

    #[test]
    fn falling_run_after_peak_is_removed() {
        let means = [5.0, 10.0, 18.0, 22.0, 28.0, 35.0, 33.0, 31.0, 30.0, 29.0, 27.0, 26.0];
        let img = image_from_row_means(&means);
        let out = refine_stereo(&img, 20.0, 5);
        let h = means.len();
        let peak_v = h - 1 - 5;
        for v in 0..h {
            let all_holes = out.row(v).iter().all(|r| r.is_nan());
            assert_eq!(all_holes, v <= peak_v, "row {v}");
        }
        assert_eq!(refine_stereo(&out, 20.0, 5), out);
    }

    #[test]
    fn short_dip_is_kept() {
        let img = image_from_row_means(&[5.0, 22.0, 25.0, 24.0, 23.0, 26.0, 30.0]);
        assert_eq!(refine_stereo(&img, 20.0, 3), img);
    }

    #[test]
    fn all_holes_stay_holes() {
        let img = RangeImage::new(3, 3, vec![f32::NAN; 9], Pose2::new(0.0, 0.0, 0.0), CameraModel::default()).unwrap();
        let out = refine_stereo(&img, 20.0, 2);
        assert_eq!(out.hole_count(), 9);
    }
}
