//! Flag plumbing shared by the subcommands.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::ValueEnum;
use mvxray_core::{defaults, io, ScannerGeometry, VoxelGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Voxel grid flags. The defaults are the built-in reconstruction grid that
/// matches the built-in scanner; override all three together when targeting
/// a custom geometry.
#[derive(Debug, clap::Args)]
pub struct GridArgs {
    /// Grid resolution as nx,ny,nz
    #[arg(long, value_parser = parse_dims3, default_value = "96,96,96")]
    pub grid_dims: [usize; 3],

    /// Grid minimum corner as x,y,z in mm
    #[arg(long, value_parser = parse_f64_3, default_value = "-288,18,0", allow_hyphen_values = true)]
    pub grid_origin: [f64; 3],

    /// Voxel edge lengths as x,y,z in mm
    #[arg(long, value_parser = parse_f64_3, default_value = "6,4,6")]
    pub grid_cell: [f64; 3],
}

impl GridArgs {
    pub fn build(&self) -> Result<VoxelGrid> {
        Ok(VoxelGrid::new(self.grid_origin, self.grid_cell, self.grid_dims)?)
    }
}

pub fn parse_dims3(s: &str) -> Result<[usize; 3], String> {
    let parts = split3(s)?;
    let mut out = [0usize; 3];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p.parse().map_err(|_| format!("'{p}' is not a valid dimension"))?;
    }
    Ok(out)
}

pub fn parse_f64_3(s: &str) -> Result<[f64; 3], String> {
    let parts = split3(s)?;
    let mut out = [0f64; 3];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p.parse().map_err(|_| format!("'{p}' is not a valid number"))?;
    }
    Ok(out)
}

pub fn parse_f64_6(s: &str) -> Result<[f64; 6], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        return Err(format!("expected 6 comma-separated values, got {}", parts.len()));
    }
    let mut out = [0f64; 6];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p.parse().map_err(|_| format!("'{p}' is not a valid number"))?;
    }
    Ok(out)
}

fn split3(s: &str) -> Result<[&str; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected 3 comma-separated values, got {}", parts.len()));
    }
    Ok([parts[0], parts[1], parts[2]])
}

/// Reads the geometry file, or falls back to the built-in scanner.
pub fn load_geometry(path: &Option<PathBuf>) -> Result<ScannerGeometry> {
    match path {
        Some(p) => {
            io::read_geometry(p).with_context(|| format!("reading geometry {}", p.display()))
        }
        None => Ok(defaults::default_geometry()),
    }
}

/// Writes `text` to the file if given, otherwise to stdout.
pub fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn to_json<V: serde::Serialize>(value: &V) -> Result<String> {
    Ok(format!("{}\n", serde_json::to_string_pretty(value)?))
}

pub fn read_json_file<V: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<V> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}
