//! Terrain along the planar ground track: a constant slope, a 1-D height
//! profile, or a 2-D heightmap crossed on a straight line.
//!
//! ASCII grid files start with `key value` header lines (`ncols`, `nrows`,
//! `cellsize`, optional `nodata_value`, `xllcorner`, `yllcorner`) followed by
//! `nrows` rows of `ncols` heights in meters. Row 0 is the northern edge.
//! CSV profiles hold `distance_m,height_m` rows with strictly increasing
//! distance; a header row is optional.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Lateral slope above which the heightmap warning fires, rad.
const LATERAL_WARN: f64 = 0.5 * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerrainFormat {
    AsciiGrid,
    CsvProfile,
}

/// Straight line across a heightmap. Track distance `s` maps to
/// `start + s (cos(heading), sin(heading))` in grid meters (x east, y north).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTrack {
    pub start: [f64; 2],
    /// rad from east
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightGrid {
    pub ncols: usize,
    pub nrows: usize,
    pub cellsize: f64,
    pub nodata: Option<f64>,
    /// Row-major, row 0 north.
    pub heights: Vec<f64>,
    /// Source line of the first value of each row.
    pub row_lines: Vec<usize>,
}

impl HeightGrid {
    fn node(&self, col: usize, row_from_south: usize) -> f64 {
        let row = self.nrows - 1 - row_from_south;
        self.heights[row * self.ncols + col]
    }

    fn is_nodata(&self, h: f64) -> bool {
        self.nodata.is_some_and(|nd| h == nd)
    }

    /// Cell corner indices `(col, row_from_south)` and fractions for a point.
    fn locate(&self, x: f64, y: f64) -> Option<(usize, usize, f64, f64)> {
        let (fx, fy) = (x / self.cellsize, y / self.cellsize);
        let (mx, my) = ((self.ncols - 1) as f64, (self.nrows - 1) as f64);
        if !(fx >= 0.0 && fy >= 0.0 && fx <= mx && fy <= my) {
            return None;
        }
        let i = (fx.floor() as usize).min(self.ncols.saturating_sub(2));
        let j = (fy.floor() as usize).min(self.nrows.saturating_sub(2));
        Some((i, j, fx - i as f64, fy - j as f64))
    }

    /// Bilinear height and gradient at grid coordinates.
    pub fn interpolate(&self, x: f64, y: f64) -> Option<(f64, [f64; 2])> {
        if self.ncols == 1 || self.nrows == 1 {
            // Degenerate strip: nearest row/column, flat across.
            return self.locate(x, y).map(|(i, j, _, _)| (self.node(i, j), [0.0, 0.0]));
        }
        let (i, j, tx, ty) = self.locate(x, y)?;
        let h00 = self.node(i, j);
        let h10 = self.node(i + 1, j);
        let h01 = self.node(i, j + 1);
        let h11 = self.node(i + 1, j + 1);
        let h = (1.0 - tx) * (1.0 - ty) * h00 + tx * (1.0 - ty) * h10 + (1.0 - tx) * ty * h01 + tx * ty * h11;
        let dx = ((1.0 - ty) * (h10 - h00) + ty * (h11 - h01)) / self.cellsize;
        let dy = ((1.0 - tx) * (h01 - h00) + tx * (h11 - h10)) / self.cellsize;
        Some((h, [dx, dy]))
    }

    /// First nodata node touched by the track, as `(row, line)`.
    fn nodata_on_track(&self, track: &GroundTrack) -> Option<(usize, usize)> {
        self.nodata?;
        let (c, s) = (track.heading.cos(), track.heading.sin());
        let step = 0.25 * self.cellsize;
        let mut k = 0usize;
        loop {
            let d = k as f64 * step;
            let (x, y) = (track.start[0] + d * c, track.start[1] + d * s);
            let (i, j, _, _) = self.locate(x, y)?;
            let cols = [i, (i + 1).min(self.ncols - 1)];
            let rows = [j, (j + 1).min(self.nrows - 1)];
            for &jj in &rows {
                for &ii in &cols {
                    if self.is_nodata(self.node(ii, jj)) {
                        let row = self.nrows - 1 - jj;
                        return Some((row, self.row_lines[row]));
                    }
                }
            }
            k += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TerrainKind {
    Flat { slope: f64 },
    Profile { distance: Vec<f64>, height: Vec<f64> },
    Heightmap { grid: HeightGrid, track: GroundTrack },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Terrain {
    pub kind: TerrainKind,
    pub rolling_resistance: f64,
}

/// Local terrain under track distance `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerrainSample {
    /// m
    pub height: f64,
    /// Along-track slope, rad.
    pub slope: f64,
    /// Cross-track slope, rad (heightmaps only).
    pub lateral_slope: f64,
}

impl TerrainSample {
    /// Upward unit normal of the local plane in the x-z plane.
    pub fn normal(&self) -> Vec3 {
        Vec3::new(-self.slope.sin(), 0.0, self.slope.cos())
    }
}

impl Terrain {
    pub fn flat(slope: f64, rolling_resistance: f64) -> Self {
        Terrain {
            kind: TerrainKind::Flat { slope },
            rolling_resistance,
        }
    }

    pub fn profile(distance: Vec<f64>, height: Vec<f64>, rolling_resistance: f64) -> Result<Self> {
        check_profile(&distance, &height)?;
        Ok(Terrain {
            kind: TerrainKind::Profile { distance, height },
            rolling_resistance,
        })
    }

    /// Heightmap crossed along `track`. Fails if the track touches nodata.
    pub fn heightmap(grid: HeightGrid, track: GroundTrack, rolling_resistance: f64) -> Result<Self> {
        if grid.locate(track.start[0], track.start[1]).is_none() {
            return Err(Error::OutOfTerrain { distance: 0.0 });
        }
        if let Some((row, line)) = grid.nodata_on_track(&track) {
            return Err(Error::NoData { row, line });
        }
        Ok(Terrain {
            kind: TerrainKind::Heightmap { grid, track },
            rolling_resistance,
        })
    }

    pub fn sample(&self, s: f64) -> Result<TerrainSample> {
        match &self.kind {
            TerrainKind::Flat { slope } => Ok(TerrainSample {
                height: s * slope.tan(),
                slope: *slope,
                lateral_slope: 0.0,
            }),
            TerrainKind::Profile { distance, height } => {
                let n = distance.len();
                if !(s >= distance[0] && s <= distance[n - 1]) {
                    return Err(Error::OutOfTerrain { distance: s });
                }
                let i = distance.partition_point(|&d| d <= s).clamp(1, n - 1) - 1;
                let grade = (height[i + 1] - height[i]) / (distance[i + 1] - distance[i]);
                Ok(TerrainSample {
                    height: height[i] + grade * (s - distance[i]),
                    slope: grade.atan(),
                    lateral_slope: 0.0,
                })
            }
            TerrainKind::Heightmap { grid, track } => {
                let (c, sn) = (track.heading.cos(), track.heading.sin());
                let (x, y) = (track.start[0] + s * c, track.start[1] + s * sn);
                let (h, g) = grid.interpolate(x, y).ok_or(Error::OutOfTerrain { distance: s })?;
                Ok(TerrainSample {
                    height: h,
                    slope: (g[0] * c + g[1] * sn).atan(),
                    lateral_slope: (-g[0] * sn + g[1] * c).atan(),
                })
            }
        }
    }

    /// Largest cross-track slope seen between track distances `a` and `b`,
    /// sampled at quarter-cell spacing. Zero for 1-D terrain.
    pub fn max_lateral_slope(&self, a: f64, b: f64) -> f64 {
        let TerrainKind::Heightmap { grid, .. } = &self.kind else {
            return 0.0;
        };
        let step = 0.25 * grid.cellsize;
        let n = ((b - a).abs() / step).ceil() as usize;
        (0..=n)
            .filter_map(|k| self.sample(a + (b - a) * k as f64 / n.max(1) as f64).ok())
            .fold(0.0, |m, t| m.max(t.lateral_slope.abs()))
    }

    /// Logs a warning when the heightmap tilts sideways along the traversed
    /// span; the planar model ignores it.
    pub fn warn_lateral(&self, a: f64, b: f64) {
        let lat = self.max_lateral_slope(a, b);
        if lat > LATERAL_WARN {
            log::warn!(
                "heightmap has up to {:.2} deg of cross-track slope; the planar model ignores it",
                lat.to_degrees()
            );
        }
    }
}

fn check_profile(distance: &[f64], height: &[f64]) -> Result<()> {
    if distance.len() != height.len() {
        return Err(Error::TerrainParse {
            line: 0,
            message: "distance and height lengths differ".into(),
        });
    }
    if distance.len() < 2 {
        return Err(Error::TerrainParse {
            line: 0,
            message: "profile needs at least two rows".into(),
        });
    }
    for (i, w) in distance.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::TerrainParse {
                line: i + 2,
                message: format!("distance must be strictly increasing ({} after {})", w[1], w[0]),
            });
        }
    }
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::TerrainParse {
        line,
        message: message.into(),
    }
}

/// Parses an ASCII grid. Line numbers in errors are 1-based.
pub fn parse_ascii_grid(text: &str) -> Result<HeightGrid> {
    let mut ncols = None;
    let mut nrows = None;
    let mut cellsize = None;
    let mut nodata = None;
    let mut lines = text.lines().enumerate().peekable();

    while let Some(&(idx, line)) = lines.peek() {
        let mut tokens = line.split_whitespace();
        let Some(key) = tokens.next() else {
            lines.next();
            continue;
        };
        if !key.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
            break;
        }
        let lineno = idx + 1;
        let value = tokens
            .next()
            .ok_or_else(|| parse_err(lineno, format!("header `{key}` has no value")))?;
        let number: f64 = value
            .parse()
            .map_err(|_| parse_err(lineno, format!("header `{key}` value `{value}` is not a number")))?;
        let as_count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(parse_err(lineno, format!("header `{key}` must be a positive integer")))
            }
        };
        match key.to_ascii_lowercase().as_str() {
            "ncols" => ncols = Some(as_count(number)?),
            "nrows" => nrows = Some(as_count(number)?),
            "cellsize" => {
                if !(number > 0.0 && number.is_finite()) {
                    return Err(parse_err(lineno, "`cellsize` must be positive"));
                }
                cellsize = Some(number)
            }
            "nodata_value" => nodata = Some(number),
            "xllcorner" | "yllcorner" | "xllcenter" | "yllcenter" => {}
            other => return Err(parse_err(lineno, format!("unknown header key `{other}`"))),
        }
        lines.next();
    }

    let header_end = lines.peek().map_or(text.lines().count() + 1, |(i, _)| i + 1);
    let missing = |k: &str| parse_err(header_end, format!("missing `{k}` header"));
    let ncols = ncols.ok_or_else(|| missing("ncols"))?;
    let nrows = nrows.ok_or_else(|| missing("nrows"))?;
    let cellsize = cellsize.ok_or_else(|| missing("cellsize"))?;

    let total = ncols * nrows;
    let mut heights = Vec::with_capacity(total);
    let mut row_lines = Vec::with_capacity(nrows);
    for (idx, line) in lines {
        for token in line.split_whitespace() {
            if heights.len() == total {
                return Err(parse_err(idx + 1, format!("more than {total} height values")));
            }
            let h: f64 = token
                .parse()
                .map_err(|_| parse_err(idx + 1, format!("height `{token}` is not a number")))?;
            if !h.is_finite() {
                return Err(parse_err(idx + 1, "height is not finite"));
            }
            if heights.len() % ncols == 0 {
                row_lines.push(idx + 1);
            }
            heights.push(h);
        }
    }
    if heights.len() != total {
        return Err(parse_err(
            text.lines().count(),
            format!(
                "expected {total} height values ({nrows} rows x {ncols} cols), found {}",
                heights.len()
            ),
        ));
    }
    Ok(HeightGrid {
        ncols,
        nrows,
        cellsize,
        nodata,
        heights,
        row_lines,
    })
}

/// Parses a `distance_m,height_m` profile.
pub fn parse_csv_profile(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut distance = Vec::new();
    let mut height = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(k + 1, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(parse_err(line, format!("expected 2 columns, found {}", record.len())));
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) if v.iter().all(|x| x.is_finite()) => {
                if let Some(&prev) = distance.last() {
                    if !(v[0] > prev) {
                        return Err(parse_err(
                            line,
                            format!("distance must be strictly increasing ({} after {prev})", v[0]),
                        ));
                    }
                }
                distance.push(v[0]);
                height.push(v[1]);
            }
            Ok(_) => return Err(parse_err(line, "non-finite value")),
            Err(_) if k == 0 => continue,
            Err(_) => return Err(parse_err(line, "values must be numbers")),
        }
    }
    check_profile(&distance, &height)?;
    Ok((distance, height))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Loads a terrain file. Heightmaps are crossed along `track`.
pub fn load_terrain(
    path: &Path,
    format: TerrainFormat,
    rolling_resistance: f64,
    track: GroundTrack,
) -> Result<Terrain> {
    let text = read(path)?;
    match format {
        TerrainFormat::AsciiGrid => Terrain::heightmap(parse_ascii_grid(&text)?, track, rolling_resistance),
        TerrainFormat::CsvProfile => {
            let (d, h) = parse_csv_profile(&text)?;
            Terrain::profile(d, h, rolling_resistance)
        }
    }
}
