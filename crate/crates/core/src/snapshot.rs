//! Snapshot files: raw little-endian `f64` values in storage order
//! (`<name>.bin`) with a sidecar text header (`<name>.txt`).
//!
//! Header lines are `key = value`; each axis adds
//! `axis = <label> <x_min> <x_max> <cells> <boundary>`, slowest axis first.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mesh::{Boundary, Grid1D};

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub axes: Vec<(String, Grid1D)>,
    pub time: f64,
    pub step: usize,
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn new(axes: Vec<(String, Grid1D)>, time: f64, step: usize, values: Vec<f64>) -> Result<Self> {
        let expected: usize = axes.iter().map(|(_, g)| g.n_cells()).product();
        if expected != values.len() {
            return Err(Error::LengthMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(Self {
            axes,
            time,
            step,
            values,
        })
    }

    pub fn header(&self) -> String {
        let mut h = String::new();
        h.push_str("format = f64-le\n");
        h.push_str("order = row-major, last axis fastest\n");
        h.push_str(&format!("time = {:e}\n", self.time));
        h.push_str(&format!("step = {}\n", self.step));
        for (label, g) in &self.axes {
            h.push_str(&format!(
                "axis = {} {:e} {:e} {} {}\n",
                label,
                g.x_min(),
                g.x_max(),
                g.n_cells(),
                g.boundary()
            ));
        }
        h
    }

    /// Writes `<dir>/<name>.bin` and `<dir>/<name>.txt`; returns the data path.
    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf> {
        let bin = dir.join(format!("{name}.bin"));
        let mut w = BufWriter::new(fs::File::create(&bin)?);
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        fs::write(dir.join(format!("{name}.txt")), self.header())?;
        Ok(bin)
    }

    pub fn read(dir: &Path, name: &str) -> Result<Self> {
        let header = fs::read_to_string(dir.join(format!("{name}.txt")))?;
        let bytes = fs::read(dir.join(format!("{name}.bin")))?;
        let bad = |what: &str| Error::Config(format!("snapshot header: bad {what}"));
        let mut time = None;
        let mut step = None;
        let mut axes = Vec::new();
        for line in header.lines() {
            let Some((k, v)) = line.split_once('=') else {
                continue;
            };
            let v = v.trim();
            match k.trim() {
                "time" => time = Some(v.parse::<f64>().map_err(|_| bad("time"))?),
                "step" => step = Some(v.parse::<usize>().map_err(|_| bad("step"))?),
                "axis" => {
                    let p: Vec<&str> = v.split_whitespace().collect();
                    if p.len() != 5 {
                        return Err(bad("axis"));
                    }
                    let x0 = p[1].parse::<f64>().map_err(|_| bad("axis"))?;
                    let x1 = p[2].parse::<f64>().map_err(|_| bad("axis"))?;
                    let n = p[3].parse::<usize>().map_err(|_| bad("axis"))?;
                    let b = p[4].parse::<Boundary>().map_err(|_| bad("axis"))?;
                    axes.push((p[0].to_string(), Grid1D::new(x0, x1, n, b)?));
                }
                _ => {}
            }
        }
        if bytes.len() % 8 != 0 {
            return Err(bad("data length"));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(axes, time.ok_or_else(|| bad("time"))?, step.ok_or_else(|| bad("step"))?, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let axes = vec![
            ("r".to_string(), Grid1D::new(0.1, 14.5, 5, Boundary::Natural).unwrap()),
            ("theta".to_string(), Grid1D::new(0.0, std::f64::consts::TAU, 4, Boundary::Periodic).unwrap()),
        ];
        let values: Vec<f64> = (0..20).map(|i| (i as f64).sqrt() - 1.0 / 3.0).collect();
        let s = Snapshot::new(axes, 0.125, 7, values).unwrap();
        s.write(dir.path(), "snap").unwrap();
        let back = Snapshot::read(dir.path(), "snap").unwrap();
        assert_eq!(back.values, s.values);
        assert_eq!(back.step, 7);
        assert_eq!(back.time, 0.125);
        assert_eq!(back.axes.len(), 2);
        assert_eq!(back.axes[1].1.boundary(), Boundary::Periodic);
        assert_eq!(back.axes[0].1.n_cells(), 5);
    }

    #[test]
    fn rejects_wrong_length() {
        let axes = vec![("x".to_string(), Grid1D::new(0.0, 1.0, 4, Boundary::Periodic).unwrap())];
        assert!(Snapshot::new(axes, 0.0, 0, vec![0.0; 3]).is_err());
    }
}
