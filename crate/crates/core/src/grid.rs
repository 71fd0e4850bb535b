//! Cell-centred scalar fields on a uniform rectangular grid.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Cell-centred samples on an `nx × ny` grid, stored row-major (`j * nx + i`,
/// `i` along x).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(nx: usize, ny: usize, hx: f64, hy: f64, values: Vec<f64>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::invalid(format!("grid must have at least one cell, got {nx}x{ny}")));
        }
        if !(hx > 0.0 && hx.is_finite() && hy > 0.0 && hy.is_finite()) {
            return Err(Error::invalid(format!("cell sizes must be positive, got hx={hx}, hy={hy}")));
        }
        if values.len() != nx * ny {
            return Err(Error::DimensionMismatch {
                expected: nx * ny,
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at cell {k}")));
        }
        Ok(Self {
            nx,
            ny,
            hx,
            hy,
            values,
        })
    }

    pub fn zeros(nx: usize, ny: usize, hx: f64, hy: f64) -> Result<Self> {
        Self::new(nx, ny, hx, hy, vec![0.0; nx * ny])
    }

    pub fn constant(nx: usize, ny: usize, hx: f64, hy: f64, c: f64) -> Result<Self> {
        Self::new(nx, ny, hx, hy, vec![c; nx * ny])
    }

    /// Grid covering `[0, lx] × [0, ly]`, sampled at cell centres.
    pub fn from_fn(
        nx: usize,
        ny: usize,
        lx: f64,
        ly: f64,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let hx = lx / nx as f64;
        let hy = ly / ny as f64;
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            let y = (j as f64 + 0.5) * hy;
            for i in 0..nx {
                values.push(f((i as f64 + 0.5) * hx, y));
            }
        }
        Self::new(nx, ny, hx, hy, values)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hy(&self) -> f64 {
        self.hy
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cell_measure(&self) -> f64 {
        self.hx * self.hy
    }

    pub fn domain_measure(&self) -> f64 {
        self.nx as f64 * self.ny as f64 * self.cell_measure()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.index(i, j)]
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.hx == other.hx && self.hy == other.hy
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{}x{} (h={},{}) vs {}x{} (h={},{})",
                self.nx, self.ny, self.hx, self.hy, other.nx, other.ny, other.hx, other.hy
            )))
        }
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.nx, self.ny, self.hx, self.hy, values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.with_values(self.values.iter().map(|v| f(*v)).collect())
    }

    /// `self + scale * other`, cellwise.
    pub fn add_scaled(&self, other: &GridFunction, scale: f64) -> Result<Self> {
        self.check_same_grid(other)?;
        self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + scale * b)
                .collect(),
        )
    }

    /// `Σ v · cell measure`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_measure()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.cell_measure()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.cell_measure()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Forward difference along `axis` (0 = x, 1 = y) over every face,
    /// including both boundary faces, with zero extension outside the grid.
    /// Along x there are `(nx + 1) * ny` faces; along y `nx * (ny + 1)`.
    pub fn forward_differences(&self, axis: usize) -> Vec<f64> {
        let (nx, ny) = (self.nx, self.ny);
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= nx as isize || j >= ny as isize {
                0.0
            } else {
                self.values[j as usize * nx + i as usize]
            }
        };
        let mut out = Vec::new();
        if axis == 0 {
            out.reserve((nx + 1) * ny);
            for j in 0..ny as isize {
                for i in -1..nx as isize {
                    out.push((at(i + 1, j) - at(i, j)) / self.hx);
                }
            }
        } else {
            out.reserve(nx * (ny + 1));
            for j in -1..ny as isize {
                for i in 0..nx as isize {
                    out.push((at(i, j + 1) - at(i, j)) / self.hy);
                }
            }
        }
        out
    }

    /// `Σ_faces |D u|^p · cell measure` along `axis`.
    pub fn gradient_power_sum(&self, axis: usize, p: f64) -> f64 {
        self.forward_differences(axis)
            .iter()
            .map(|d| d.abs().powf(p))
            .sum::<f64>()
            * self.cell_measure()
    }

    /// Rotate the grid by 90° (x' = y, y' = nx - 1 - x).
    pub fn rotated(&self) -> Self {
        let (nx, ny) = (self.nx, self.ny);
        let mut values = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                // new grid is ny × nx
                let ni = j;
                let nj = nx - 1 - i;
                values[nj * ny + ni] = self.values[j * nx + i];
            }
        }
        Self {
            nx: ny,
            ny: nx,
            hx: self.hy,
            hy: self.hx,
            values,
        }
    }

    /// Mirror along x.
    pub fn reflected_x(&self) -> Self {
        let mut values = self.values.clone();
        for row in values.chunks_mut(self.nx) {
            row.reverse();
        }
        Self {
            values,
            ..self.clone()
        }
    }

    /// CSV layout: a label row `nx,ny,hx,hy`, the four numbers, then `ny` rows
    /// of `nx` values.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().flexible(true).from_writer(w);
        wtr.write_record(["nx", "ny", "hx", "hy"])?;
        wtr.write_record([
            self.nx.to_string(),
            self.ny.to_string(),
            self.hx.to_string(),
            self.hy.to_string(),
        ])?;
        for row in self.values.chunks(self.nx) {
            wtr.write_record(row.iter().map(|v| v.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(BufWriter::new(File::create(path)?))
    }

    pub fn read_csv<R: Read>(r: R, source: &Path) -> Result<Self> {
        let parse_err = |message: String| Error::Parse {
            path: source.to_path_buf(),
            message,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(r);
        let header = rdr.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != ["nx", "ny", "hx", "hy"] {
            return Err(parse_err(format!("expected header nx,ny,hx,hy, got {header:?}")));
        }
        let mut records = rdr.records();
        let dims = records
            .next()
            .ok_or_else(|| parse_err("missing grid dimensions row".into()))??;
        if dims.len() != 4 {
            return Err(parse_err("grid dimensions row must have 4 fields".into()));
        }
        let field = |k: usize| dims[k].to_string();
        let nx: usize = field(0).parse().map_err(|e| parse_err(format!("nx: {e}")))?;
        let ny: usize = field(1).parse().map_err(|e| parse_err(format!("ny: {e}")))?;
        let hx: f64 = field(2).parse().map_err(|e| parse_err(format!("hx: {e}")))?;
        let hy: f64 = field(3).parse().map_err(|e| parse_err(format!("hy: {e}")))?;
        let mut values = Vec::with_capacity(nx * ny);
        for (row, rec) in records.enumerate() {
            let rec = rec?;
            if rec.len() != nx {
                return Err(parse_err(format!("row {row} has {} values, expected {nx}", rec.len())));
            }
            for v in rec.iter() {
                values.push(v.parse::<f64>().map_err(|e| parse_err(format!("row {row}: {e}")))?);
            }
        }
        if values.len() != nx * ny {
            return Err(parse_err(format!("expected {ny} value rows, got {}", values.len() / nx.max(1))));
        }
        Self::new(nx, ny, hx, hy, values)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::read_csv(File::open(path)?, path)
    }
}
