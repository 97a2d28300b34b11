//! Map (JSON) and DEM (ESRI ASCII grid) files.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Crater, CraterMap, DemRaster};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
struct MapFile {
    resolution_m: f64,
    craters: Vec<CraterRecord>,
}

#[derive(Serialize, Deserialize)]
struct CraterRecord {
    id: u32,
    x_m: f64,
    y_m: f64,
    diameter_m: f64,
    depth_m: f64,
    landmark: bool,
}

pub fn map_to_json(map: &CraterMap) -> String {
    let file = MapFile {
        resolution_m: map.rim_sample_spacing,
        craters: map
            .craters
            .iter()
            .map(|c| CraterRecord {
                id: c.id,
                x_m: c.center.x,
                y_m: c.center.y,
                diameter_m: c.diameter,
                depth_m: c.depth,
                landmark: c.is_landmark,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("map serializes")
}

pub fn map_from_json(text: &str) -> Result<CraterMap> {
    let file: MapFile = serde_json::from_str(text)?;
    let craters = file
        .craters
        .into_iter()
        .map(|r| Crater {
            id: r.id,
            center: Vector2::new(r.x_m, r.y_m),
            diameter: r.diameter_m,
            depth: r.depth_m,
            is_landmark: r.landmark,
        })
        .collect();
    CraterMap::new(craters, file.resolution_m)
}

pub fn write_map_json(map: &CraterMap, path: &Path) -> Result<()> {
    fs::write(path, map_to_json(map) + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_map_json(path: &Path) -> Result<CraterMap> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    map_from_json(&text)
}

const NODATA: f32 = -9999.0;

/// ESRI ASCII grid text, top (north) row first. Cell values are stored at cell centers, so the
/// lower-left corner sits half a cell below and left of the DEM origin.
pub fn dem_to_asc(dem: &DemRaster) -> String {
    let res = dem.resolution();
    let o = dem.origin();
    let mut s = String::with_capacity(dem.width() * dem.height() * 8 + 128);
    let _ = writeln!(s, "ncols {}", dem.width());
    let _ = writeln!(s, "nrows {}", dem.height());
    let _ = writeln!(s, "xllcorner {}", o.x - 0.5 * res);
    let _ = writeln!(s, "yllcorner {}", o.y - 0.5 * res);
    let _ = writeln!(s, "cellsize {res}");
    let _ = writeln!(s, "NODATA_value {NODATA}");
    for row in (0..dem.height()).rev() {
        let cells = &dem.cells()[row * dem.width()..(row + 1) * dem.width()];
        for (i, v) in cells.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{v}");
        }
        s.push('\n');
    }
    s
}

pub fn dem_from_asc(text: &str) -> Result<DemRaster> {
    let bad = |r: String| Error::format("ESRI ASCII grid", r);
    let mut tokens = text.split_ascii_whitespace().peekable();
    let mut ncols = None;
    let mut nrows = None;
    let mut xll = None;
    let mut yll = None;
    let mut center_ref = false;
    let mut cellsize = None;
    let mut nodata = None;
    while let Some(tok) = tokens.peek() {
        if tok.parse::<f64>().is_ok() {
            break;
        }
        let key = tokens.next().unwrap().to_ascii_lowercase();
        let val = tokens
            .next()
            .ok_or_else(|| bad(format!("header key {key} has no value")))?;
        let num: f64 = val
            .parse()
            .map_err(|_| bad(format!("header {key} has non-numeric value {val:?}")))?;
        match key.as_str() {
            "ncols" => ncols = Some(num as usize),
            "nrows" => nrows = Some(num as usize),
            "xllcorner" => xll = Some(num),
            "yllcorner" => yll = Some(num),
            "xllcenter" => {
                xll = Some(num);
                center_ref = true;
            }
            "yllcenter" => {
                yll = Some(num);
                center_ref = true;
            }
            "cellsize" => cellsize = Some(num),
            "nodata_value" => nodata = Some(num as f32),
            other => return Err(bad(format!("unknown header key {other:?}"))),
        }
    }
    let (w, h) = match (ncols, nrows) {
        (Some(w), Some(h)) => (w, h),
        _ => return Err(bad("missing ncols/nrows".into())),
    };
    let res = cellsize.ok_or_else(|| bad("missing cellsize".into()))?;
    let (x0, y0) = match (xll, yll) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(bad("missing lower-left reference".into())),
    };
    let shift = if center_ref { 0.0 } else { 0.5 * res };
    let mut cells = vec![0f32; w * h];
    for i in 0..w * h {
        let tok = tokens
            .next()
            .ok_or_else(|| bad(format!("expected {} values, found {i}", w * h)))?;
        let v: f32 = tok
            .parse()
            .map_err(|_| bad(format!("value {i} is not a number: {tok:?}")))?;
        if Some(v) == nodata {
            return Err(bad(format!("NODATA at value {i} is not supported")));
        }
        let (row_from_top, col) = (i / w, i % w);
        cells[(h - 1 - row_from_top) * w + col] = v;
    }
    if tokens.next().is_some() {
        return Err(bad("trailing values after grid".into()));
    }
    DemRaster::new(res, Vector2::new(x0 + shift, y0 + shift), w, h, cells)
}

pub fn write_dem_asc(dem: &DemRaster, path: &Path) -> Result<()> {
    fs::write(path, dem_to_asc(dem)).map_err(|e| Error::io(path, e))
}

pub fn read_dem_asc(path: &Path) -> Result<DemRaster> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    dem_from_asc(&text)
}
