//! 2×2 binary images in, integers out.
//!
//! Pixel `k` (row-major) drives upstream DER `k`. A set pixel raises that
//! DER's reference by the encoding amplitude. The downstream current change
//! divided by the calibration constant is the rotated image read as a
//! 4-bit number.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::compiler::{Calibration, WeightTask};
use crate::{Error, Result};

/// Place values of the four pixel positions when an image is read as a number.
const POSITION_VALUES: [u8; 4] = [8, 4, 2, 1];

/// Largest distance from an integer a decoded quotient may have.
pub const DECODE_CONFIDENCE: f64 = 0.25;

/// Pixels in row-major order: top-left, top-right, bottom-left, bottom-right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Image2x2 {
    pub bits: [bool; 4],
}

impl Image2x2 {
    pub const fn new(bits: [bool; 4]) -> Self {
        Self { bits }
    }

    /// Image whose row-major bits spell `value` in binary, top-left most significant.
    pub fn from_index(value: u8) -> Self {
        assert!(value < 16, "2x2 image index out of range: {value}");
        Self::new(std::array::from_fn(|p| value & POSITION_VALUES[p] != 0))
    }

    /// All 16 images in ascending numeric order.
    pub fn all() -> impl Iterator<Item = Self> {
        (0..16).map(Self::from_index)
    }

    /// The image read as a 4-bit number, top-left most significant.
    pub fn decimal(&self) -> u8 {
        self.bits
            .iter()
            .zip(POSITION_VALUES)
            .filter(|(b, _)| **b)
            .map(|(_, v)| v)
            .sum()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// One single-pixel image for each set pixel.
    pub fn one_hot_parts(&self) -> impl Iterator<Item = Self> + '_ {
        (0..4).filter(|&p| self.bits[p]).map(|p| {
            let mut bits = [false; 4];
            bits[p] = true;
            Self::new(bits)
        })
    }

    pub fn rotate(&self, direction: Direction) -> Self {
        let targets = direction.targets();
        let mut bits = [false; 4];
        for (p, &b) in self.bits.iter().enumerate() {
            bits[targets[p]] = b;
        }
        Self::new(bits)
    }
}

impl fmt::Display for Image2x2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Image2x2 {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.trim().chars().collect();
        if chars.len() != 4 {
            return Err(Error::Image(s.to_string()));
        }
        let mut bits = [false; 4];
        for (bit, c) in bits.iter_mut().zip(chars) {
            *bit = match c {
                '0' => false,
                '1' => true,
                _ => return Err(Error::Image(s.to_string())),
            };
        }
        Ok(Self::new(bits))
    }
}

impl Serialize for Image2x2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Image2x2 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Clockwise,
    Counterclockwise,
}

impl Direction {
    pub const ALL: [Direction; 2] = [Direction::Clockwise, Direction::Counterclockwise];

    /// Destination position of each source pixel.
    fn targets(self) -> [usize; 4] {
        match self {
            Direction::Clockwise => [1, 3, 0, 2],
            Direction::Counterclockwise => [2, 0, 3, 1],
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Direction::Clockwise => "cw",
            Direction::Counterclockwise => "ccw",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Clockwise => "clockwise",
            Direction::Counterclockwise => "counterclockwise",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cw" | "clockwise" => Ok(Direction::Clockwise),
            "ccw" | "counterclockwise" | "anticlockwise" => Ok(Direction::Counterclockwise),
            other => Err(Error::Config(format!("unknown direction {other:?}"))),
        }
    }
}

/// Rotating a 2×2 image and reading it as a number is a weighted sum of
/// the source pixels; this holds those weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationTask {
    pub direction: Direction,
    pub weights: [u8; 4],
    /// Zero-based position of the unit weight.
    pub anchor: usize,
}

impl RotationTask {
    pub fn new(direction: Direction) -> Self {
        match direction {
            Direction::Clockwise => Self {
                direction,
                weights: [4, 1, 8, 2],
                anchor: 1,
            },
            Direction::Counterclockwise => Self {
                direction,
                weights: [2, 8, 1, 4],
                anchor: 2,
            },
        }
    }

    pub fn weight_task(&self) -> WeightTask {
        WeightTask {
            weights: self.weights.iter().map(|&w| f64::from(w)).collect(),
            anchor: self.anchor,
        }
    }

    /// `Σ w_k·b_k`.
    pub fn weighted_sum(&self, image: &Image2x2) -> u8 {
        image
            .bits
            .iter()
            .zip(self.weights)
            .filter(|(b, _)| **b)
            .map(|(_, w)| w)
            .sum()
    }
}

/// Reference voltage steps for an image.
pub fn encode(image: &Image2x2, amplitude: f64) -> Vec<f64> {
    image
        .bits
        .iter()
        .map(|&b| if b { amplitude } else { 0.0 })
        .collect()
}

/// Expected output computed digitally: rotate, then read the rotated image as a number.
pub fn digital_oracle(image: &Image2x2, task: &RotationTask) -> u8 {
    let value = image.rotate(task.direction).decimal();
    debug_assert_eq!(value, task.weighted_sum(image));
    value
}

/// A decoded output and how far its unrounded quotient was from an integer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decoded {
    pub value: i64,
    pub residual: f64,
}

/// Divides a downstream current change by the calibration constant and rounds.
///
/// Fails when the quotient is more than [`DECODE_CONFIDENCE`] from the
/// nearest integer.
pub fn decode(delta_i_down: f64, calibration: &Calibration) -> Result<Decoded> {
    if calibration.kappa == 0.0 || !calibration.kappa.is_finite() {
        return Err(Error::Calibration(format!(
            "unusable calibration constant {}",
            calibration.kappa
        )));
    }
    let quotient = delta_i_down / calibration.kappa;
    let rounded = quotient.round();
    let residual = (quotient - rounded).abs();
    if residual.is_nan() || residual > DECODE_CONFIDENCE {
        return Err(Error::DecodeConfidence { quotient, residual });
    }
    Ok(Decoded {
        value: rounded as i64,
        residual,
    })
}
