//! Parameter bounds and Saltelli's cross-sampled design.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::sobol::sobol_points;
use crate::error::{Error, Result};
use crate::propagation::FmhConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    /// Round to the nearest integer after scaling.
    pub integer: bool,
}

impl Parameter {
    pub fn new(name: impl Into<String>, lower: f64, upper: f64, integer: bool) -> Self {
        Self {
            name: name.into(),
            lower,
            upper,
            integer,
        }
    }

    /// Maps a unit-interval coordinate affinely into `[lower, upper]`.
    pub fn scale(&self, unit: f64) -> f64 {
        let x = self.lower + unit * (self.upper - self.lower);
        if self.integer {
            x.round()
        } else {
            x
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// Axis-aligned box in parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmhBounds {
    pub parameters: Vec<Parameter>,
}

pub const PARAM_WAVELENGTH: &str = "wavelength";
pub const PARAM_PITCH: &str = "pixel_pitch";
pub const PARAM_RESOLUTION: &str = "slm_resolution";
pub const PARAM_DISTANCE: &str = "distance";

impl FmhBounds {
    pub fn new(parameters: Vec<Parameter>) -> Result<Self> {
        let b = Self { parameters };
        b.validate()?;
        Ok(b)
    }

    /// Forward-model bounds `(lambda, dx, M, d)` in meters / pixels.
    pub fn fmh(lambda: (f64, f64), pitch: (f64, f64), resolution: (f64, f64), distance: (f64, f64)) -> Result<Self> {
        Self::new(vec![
            Parameter::new(PARAM_WAVELENGTH, lambda.0, lambda.1, false),
            Parameter::new(PARAM_PITCH, pitch.0, pitch.1, false),
            Parameter::new(PARAM_RESOLUTION, resolution.0, resolution.1, true),
            Parameter::new(PARAM_DISTANCE, distance.0, distance.1, false),
        ])
    }

    /// The full hyperparameter box: lambda 200-1800 nm, pitch 4-80 um,
    /// M 128-4000 px, d 0-1.5 m.
    pub fn reference() -> Self {
        Self::fmh((200e-9, 1800e-9), (4e-6, 80e-6), (128.0, 4000.0), (0.0, 1.5))
            .expect("reference bounds are valid")
    }

    /// `k` anonymous parameters `x1..xk` on the unit interval.
    pub fn unit(k: usize) -> Self {
        Self {
            parameters: (1..=k)
                .map(|i| Parameter::new(format!("x{i}"), 0.0, 1.0, false))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.parameters.is_empty() {
            return Err(Error::InvalidArgument("bounds need at least one parameter".into()));
        }
        for p in &self.parameters {
            if !(p.lower.is_finite() && p.upper.is_finite() && p.lower < p.upper) {
                return Err(Error::InvalidArgument(format!(
                    "parameter {} has invalid bounds [{}, {}]",
                    p.name, p.lower, p.upper
                )));
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.parameters.len()
    }

    pub fn names(&self) -> Vec<String> {
        self.parameters.iter().map(|p| p.name.clone()).collect()
    }

    pub fn scale(&self, unit: &[f64]) -> Vec<f64> {
        self.parameters.iter().zip(unit).map(|(p, &u)| p.scale(u)).collect()
    }

    /// True for the 4-parameter `(lambda, dx, M, d)` layout.
    pub fn is_fmh(&self) -> bool {
        self.names() == [PARAM_WAVELENGTH, PARAM_PITCH, PARAM_RESOLUTION, PARAM_DISTANCE]
    }

    /// Interprets a scaled point as a forward-model configuration.
    pub fn to_fmh(&self, scaled: &[f64]) -> Result<FmhConfig> {
        if !self.is_fmh() {
            return Err(Error::InvalidArgument(format!(
                "bounds {:?} are not forward-model bounds",
                self.names()
            )));
        }
        FmhConfig::new(scaled[0], scaled[1], scaled[2].round() as usize, scaled[3])
    }
}

/// Which sub-matrix of the design a row belongs to. `AB(i)` / `BA(i)` carry
/// the 0-based substituted column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    A,
    AB(usize),
    BA(usize),
    B,
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Block::A => f.write_str("A"),
            Block::B => f.write_str("B"),
            Block::AB(i) => write!(f, "AB{}", i + 1),
            Block::BA(i) => write!(f, "BA{}", i + 1),
        }
    }
}

impl FromStr for Block {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::parse("design block", format!("unknown block label {s:?}"));
        let column = |rest: &str| -> Result<usize> {
            rest.parse::<usize>()
                .ok()
                .filter(|&i| i >= 1)
                .map(|i| i - 1)
                .ok_or_else(bad)
        };
        match s {
            "A" => Ok(Block::A),
            "B" => Ok(Block::B),
            _ if s.starts_with("AB") => Ok(Block::AB(column(&s[2..])?)),
            _ if s.starts_with("BA") => Ok(Block::BA(column(&s[2..])?)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Block {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Block {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRow {
    pub block: Block,
    pub base_index: usize,
    /// Coordinates in `[0, 1)`.
    pub unit: Vec<f64>,
    /// Coordinates mapped into the bounds.
    pub scaled: Vec<f64>,
}

/// `N (2k + 2)` rows (or `N (k + 2)` without second order), grouped per base
/// sample as `A, AB_1..AB_k, [BA_1..BA_k,] B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaltelliDesign {
    pub base_samples: usize,
    pub second_order: bool,
    pub bounds: FmhBounds,
    pub rows: Vec<DesignRow>,
}

impl SaltelliDesign {
    pub fn dimension(&self) -> usize {
        self.bounds.dimension()
    }

    /// Rows per base sample: `2k + 2` or `k + 2`.
    pub fn group_size(&self) -> usize {
        group_size(self.dimension(), self.second_order)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Position of `block` inside each base-sample group.
    pub fn offset(&self, block: Block) -> usize {
        let k = self.dimension();
        match block {
            Block::A => 0,
            Block::AB(i) => 1 + i,
            Block::BA(i) => 1 + k + i,
            Block::B => self.group_size() - 1,
        }
    }

    pub fn row_index(&self, base_index: usize, block: Block) -> usize {
        base_index * self.group_size() + self.offset(block)
    }

    /// Writes `block,base_index,<param...>` with scaled coordinates.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "block,base_index")?;
        for name in self.bounds.names() {
            write!(out, ",{name}")?;
        }
        writeln!(out)?;
        for row in &self.rows {
            write!(out, "{},{}", row.block, row.base_index)?;
            for v in &row.scaled {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// SHA-256 over the CSV serialization.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        hex::encode(Sha256::digest(&buf))
    }
}

pub fn group_size(k: usize, second_order: bool) -> usize {
    if second_order {
        2 * k + 2
    } else {
        k + 2
    }
}

/// Builds the design from the first `n` points of a `2k`-dimensional Sobol
/// sequence: columns `0..k` form A, columns `k..2k` form B.
pub fn saltelli_design(bounds: &FmhBounds, n: usize, second_order: bool) -> Result<SaltelliDesign> {
    bounds.validate()?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 base samples, got {n}")));
    }
    let k = bounds.dimension();
    let base = sobol_points(2 * k, n)?;
    let mut rows = Vec::with_capacity(n * group_size(k, second_order));
    let mut push = |block: Block, base_index: usize, unit: Vec<f64>| {
        let scaled = bounds.scale(&unit);
        rows.push(DesignRow {
            block,
            base_index,
            unit,
            scaled,
        });
    };
    for (j, point) in base.iter().enumerate() {
        let a = &point[..k];
        let b = &point[k..];
        push(Block::A, j, a.to_vec());
        for i in 0..k {
            let mut ab = a.to_vec();
            ab[i] = b[i];
            push(Block::AB(i), j, ab);
        }
        if second_order {
            for i in 0..k {
                let mut ba = b.to_vec();
                ba[i] = a[i];
                push(Block::BA(i), j, ba);
            }
        }
        push(Block::B, j, b.to_vec());
    }
    Ok(SaltelliDesign {
        base_samples: n,
        second_order,
        bounds: bounds.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_counts() {
        let b = FmhBounds::reference();
        assert_eq!(saltelli_design(&b, 2, true).unwrap().len(), 20);
        assert_eq!(saltelli_design(&b, 2, false).unwrap().len(), 12);
        assert_eq!(saltelli_design(&b, 1024, true).unwrap().len(), 10240);
        assert_eq!(saltelli_design(&b, 256, true).unwrap().len(), 2560);
    }

    #[test]
    fn cross_blocks_differ_in_one_column() {
        let b = FmhBounds::unit(3);
        let d = saltelli_design(&b, 16, true).unwrap();
        for j in 0..16 {
            let a = &d.rows[d.row_index(j, Block::A)].unit;
            let bb = &d.rows[d.row_index(j, Block::B)].unit;
            for i in 0..3 {
                let ab = &d.rows[d.row_index(j, Block::AB(i))];
                let ba = &d.rows[d.row_index(j, Block::BA(i))];
                assert_eq!(ab.block, Block::AB(i));
                assert_eq!(ba.block, Block::BA(i));
                for c in 0..3 {
                    assert_eq!(ab.unit[c], if c == i { bb[c] } else { a[c] });
                    assert_eq!(ba.unit[c], if c == i { a[c] } else { bb[c] });
                }
            }
        }
        assert!(d.rows.iter().all(|r| r.unit.iter().all(|u| (0.0..1.0).contains(u))));
    }

    #[test]
    fn integer_parameters_are_rounded() {
        let d = saltelli_design(&FmhBounds::reference(), 8, false).unwrap();
        for row in &d.rows {
            assert_eq!(row.scaled[2], row.scaled[2].round());
            assert!((128.0..=4000.0).contains(&row.scaled[2]));
            assert!(d.bounds.to_fmh(&row.scaled).is_ok());
        }
    }

    #[test]
    fn invalid_bounds_rejected() {
        let bad = FmhBounds {
            parameters: vec![Parameter::new("x", 1.0, 1.0, false)],
        };
        assert!(saltelli_design(&bad, 4, true).is_err());
        assert!(saltelli_design(&FmhBounds::unit(2), 1, true).is_err());
    }

    #[test]
    fn block_labels_round_trip() {
        for b in [Block::A, Block::B, Block::AB(0), Block::BA(11)] {
            assert_eq!(b.to_string().parse::<Block>().unwrap(), b);
        }
        assert!("AB0".parse::<Block>().is_err());
        assert!("C".parse::<Block>().is_err());
    }
}
