//! Bit-exact conversion between `f32` and the two 16-bit storage formats.
//!
//! Only storage is reduced. Every consumer widens back to `f32` before doing
//! arithmetic, so a [`QuantizedMatrix`] is a compact container and nothing
//! more.
//!
//! Both 16-bit formats are handled by one routine parameterised on the
//! exponent and mantissa widths. Rounding is round-to-nearest, ties-to-even,
//! subnormals are produced and consumed, and NaN collapses to a single quiet
//! pattern per format.

use std::fmt;
use std::io::{self, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Storage precision of a feature matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecisionKind {
    Single32,
    Half16,
    Brain16,
}

/// Field layout of a binary floating-point format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrecisionFormat {
    pub kind: PrecisionKind,
    pub sign_bits: u32,
    pub exponent_bits: u32,
    pub mantissa_bits: u32,
    pub bias: i32,
}

impl PrecisionFormat {
    pub const SINGLE32: PrecisionFormat = PrecisionFormat {
        kind: PrecisionKind::Single32,
        sign_bits: 1,
        exponent_bits: 8,
        mantissa_bits: 23,
        bias: 127,
    };
    /// IEEE 754 binary16.
    pub const HALF16: PrecisionFormat = PrecisionFormat {
        kind: PrecisionKind::Half16,
        sign_bits: 1,
        exponent_bits: 5,
        mantissa_bits: 10,
        bias: 15,
    };
    /// bfloat16: the top half of a binary32.
    pub const BRAIN16: PrecisionFormat = PrecisionFormat {
        kind: PrecisionKind::Brain16,
        sign_bits: 1,
        exponent_bits: 8,
        mantissa_bits: 7,
        bias: 127,
    };

    pub const fn of(kind: PrecisionKind) -> PrecisionFormat {
        match kind {
            PrecisionKind::Single32 => Self::SINGLE32,
            PrecisionKind::Half16 => Self::HALF16,
            PrecisionKind::Brain16 => Self::BRAIN16,
        }
    }

    pub const fn width(&self) -> u32 {
        self.sign_bits + self.exponent_bits + self.mantissa_bits
    }

    /// Bytes occupied by one stored cell.
    pub const fn cell_bytes(&self) -> usize {
        (self.width() / 8) as usize
    }

    pub fn as_16bit(&self) -> Option<Format16> {
        match self.kind {
            PrecisionKind::Single32 => None,
            PrecisionKind::Half16 => Some(Format16::Half16),
            PrecisionKind::Brain16 => Some(Format16::Brain16),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            PrecisionKind::Single32 => "single32",
            PrecisionKind::Half16 => "half16",
            PrecisionKind::Brain16 => "brain16",
        }
    }
}

impl From<PrecisionKind> for PrecisionFormat {
    fn from(kind: PrecisionKind) -> Self {
        PrecisionFormat::of(kind)
    }
}

impl fmt::Display for PrecisionFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for PrecisionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(PrecisionFormat::of(*self).name())
    }
}

impl FromStr for PrecisionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "single32" | "fp32" | "float32" | "f32" => Ok(PrecisionKind::Single32),
            "half16" | "fp16" | "float16" | "f16" | "binary16" => Ok(PrecisionKind::Half16),
            "brain16" | "bf16" | "bfloat16" => Ok(PrecisionKind::Brain16),
            _ => Err(Error::Config(format!("unknown precision `{s}`"))),
        }
    }
}

impl FromStr for PrecisionFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<PrecisionKind>().map(PrecisionFormat::of)
    }
}

/// One of the two 16-bit storage formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format16 {
    Half16,
    Brain16,
}

impl Format16 {
    pub const fn layout(self) -> PrecisionFormat {
        match self {
            Format16::Half16 => PrecisionFormat::HALF16,
            Format16::Brain16 => PrecisionFormat::BRAIN16,
        }
    }

    /// The quiet NaN every NaN input encodes to.
    pub const fn canonical_nan(self) -> u16 {
        match self {
            Format16::Half16 => 0x7E00,
            Format16::Brain16 => 0x7FC0,
        }
    }

    pub const fn infinity(self) -> u16 {
        let l = self.layout();
        (((1u32 << l.exponent_bits) - 1) << l.mantissa_bits) as u16
    }

    pub const fn max_finite_bits(self) -> u16 {
        self.infinity() - 1
    }

    pub fn max_finite(self) -> f32 {
        decode(Packed16::new(self.max_finite_bits(), self))
    }
}

impl From<Format16> for PrecisionFormat {
    fn from(f: Format16) -> Self {
        f.layout()
    }
}

/// Rounding applied when narrowing to 16 bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    #[default]
    NearestEven,
    /// Round toward zero. For bfloat16 this is plain truncation of the low
    /// half of the binary32 pattern.
    Truncate,
}

impl FromStr for Rounding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nearest" | "nearest-even" | "rne" => Ok(Rounding::NearestEven),
            "truncate" | "rtz" => Ok(Rounding::Truncate),
            _ => Err(Error::Config(format!("unknown rounding mode `{s}`"))),
        }
    }
}

/// A 16-bit pattern tagged with its format. Every pattern is a valid value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Packed16 {
    pub bits: u16,
    pub format: Format16,
}

impl Packed16 {
    pub const fn new(bits: u16, format: Format16) -> Self {
        Packed16 { bits, format }
    }

    pub fn is_nan(self) -> bool {
        let inf = self.format.infinity();
        (self.bits & 0x7FFF) > inf
    }

    pub fn to_f32(self) -> f32 {
        decode(self)
    }
}

/// Narrow `value` to `format` with round-to-nearest, ties-to-even.
pub fn encode(value: f32, format: Format16) -> Packed16 {
    encode_with(value, format, Rounding::NearestEven)
}

pub fn encode_with(value: f32, format: Format16, rounding: Rounding) -> Packed16 {
    let layout = format.layout();
    let man_bits = layout.mantissa_bits;
    let bias = layout.bias;
    let inf = format.infinity() as u32;

    let x = value.to_bits();
    let sign = ((x >> 16) & 0x8000) as u16;
    let abs = x & 0x7FFF_FFFF;
    if abs > 0x7F80_0000 {
        return Packed16::new(format.canonical_nan(), format);
    }
    if abs == 0x7F80_0000 {
        return Packed16::new(sign | inf as u16, format);
    }
    if abs == 0 {
        return Packed16::new(sign, format);
    }

    // value = sig * 2^exp2, normalised so the leading bit sits at position 23.
    let field = abs >> 23;
    let (mut sig, mut exp2) = if field == 0 {
        (abs & 0x7F_FFFF, -149i32)
    } else {
        ((abs & 0x7F_FFFF) | 0x80_0000, field as i32 - 150)
    };
    let lz = sig.leading_zeros() - 8;
    sig <<= lz;
    exp2 -= lz as i32;
    let lead = exp2 + 23;

    let emin = 1 - bias;
    let normal = lead >= emin;
    let quantum = if normal { lead } else { emin } - man_bits as i32;
    let shift = (quantum - exp2) as u32;
    // sig < 2^24, so anything shifted by 25 or more is below half a quantum.
    if shift >= 25 {
        return Packed16::new(sign, format);
    }

    let mut mant = sig >> shift;
    if rounding == Rounding::NearestEven {
        let rem = sig & ((1u32 << shift) - 1);
        let half = 1u32 << (shift - 1);
        if rem > half || (rem == half && mant & 1 == 1) {
            mant += 1;
        }
    }

    // A mantissa carry out of the hidden bit bumps the exponent through the add.
    let bits = if normal {
        (((lead + bias) as u32) << man_bits) + mant - (1u32 << man_bits)
    } else {
        mant
    };
    let bits = if bits >= inf {
        match rounding {
            Rounding::NearestEven => inf,
            Rounding::Truncate => inf - 1,
        }
    } else {
        bits
    };
    Packed16::new(sign | bits as u16, format)
}

/// Widen to `f32`. Exact for every finite value of both formats.
pub fn decode(p: Packed16) -> f32 {
    let layout = p.format.layout();
    let man_bits = layout.mantissa_bits;
    let exp_all = (1u32 << layout.exponent_bits) - 1;
    let bits = p.bits as u32;
    let sign = (bits & 0x8000) << 16;
    let exp = (bits >> man_bits) & exp_all;
    let man = bits & ((1u32 << man_bits) - 1);

    if exp == exp_all {
        let payload = if man == 0 {
            0
        } else {
            0x40_0000 | (man << (23 - man_bits))
        };
        return f32::from_bits(sign | 0x7F80_0000 | payload);
    }
    if exp == 0 {
        // man * 2^(emin - man_bits), built in f64 where it is exact.
        let scale_exp = (1 - layout.bias) - man_bits as i32;
        let scale = f64::from_bits(((1023 + scale_exp) as u64) << 52);
        let magnitude = (man as f64 * scale) as f32;
        return f32::from_bits(sign | magnitude.to_bits());
    }
    let exp32 = (exp as i32 - layout.bias + 127) as u32;
    f32::from_bits(sign | (exp32 << 23) | (man << (23 - man_bits)))
}

/// Row/column position of a matrix cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

#[derive(Clone, Debug)]
enum Storage {
    Single(Vec<f32>),
    Packed { format: Format16, bits: Vec<u16> },
}

// Bitwise: NaN equals itself and -0.0 differs from 0.0.
impl PartialEq for Storage {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Storage::Single(a), Storage::Single(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (
                Storage::Packed { format: f, bits: a },
                Storage::Packed { format: g, bits: b },
            ) => f == g && a == b,
            _ => false,
        }
    }
}

impl Eq for Storage {}

/// Row-major matrix stored at a fixed precision. Immutable once built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedMatrix {
    rows: usize,
    cols: usize,
    storage: Storage,
}

/// Result of narrowing a matrix. Overflow is reported, not fatal.
#[derive(Clone, Debug)]
pub struct QuantizeOutcome {
    pub matrix: QuantizedMatrix,
    /// Finite inputs that became infinite.
    pub overflow: Vec<Cell>,
}

impl QuantizeOutcome {
    pub fn overflow_error(&self) -> Option<Error> {
        if self.overflow.is_empty() {
            None
        } else {
            Some(Error::OverflowToInfinity {
                format: self.matrix.format().name(),
                cells: self.overflow.clone(),
            })
        }
    }
}

/// Narrow a row-major `rows × cols` matrix to `format`.
pub fn quantize_matrix(
    rows: usize,
    cols: usize,
    values: &[f32],
    format: PrecisionFormat,
) -> QuantizeOutcome {
    quantize_matrix_with(rows, cols, values, format, Rounding::NearestEven)
}

pub fn quantize_matrix_with(
    rows: usize,
    cols: usize,
    values: &[f32],
    format: PrecisionFormat,
    rounding: Rounding,
) -> QuantizeOutcome {
    assert_eq!(values.len(), rows * cols, "matrix data does not match its shape");
    let Some(f16) = format.as_16bit() else {
        return QuantizeOutcome {
            matrix: QuantizedMatrix {
                rows,
                cols,
                storage: Storage::Single(values.to_vec()),
            },
            overflow: Vec::new(),
        };
    };
    let inf = f16.infinity();
    let mut overflow = Vec::new();
    let bits = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let p = encode_with(v, f16, rounding);
            if v.is_finite() && p.bits & 0x7FFF == inf {
                overflow.push(Cell {
                    row: i / cols.max(1),
                    col: i % cols.max(1),
                });
            }
            p.bits
        })
        .collect();
    QuantizeOutcome {
        matrix: QuantizedMatrix {
            rows,
            cols,
            storage: Storage::Packed { format: f16, bits },
        },
        overflow,
    }
}

impl QuantizedMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn format(&self) -> PrecisionFormat {
        match &self.storage {
            Storage::Single(_) => PrecisionFormat::SINGLE32,
            Storage::Packed { format, .. } => format.layout(),
        }
    }

    /// Storage footprint of the cell data.
    pub fn bytes(&self) -> usize {
        self.rows * self.cols * self.format().cell_bytes()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        let i = row * self.cols + col;
        match &self.storage {
            Storage::Single(v) => v[i],
            Storage::Packed { format, bits } => decode(Packed16::new(bits[i], *format)),
        }
    }

    /// Widen one row into `out`.
    pub fn row_into(&self, row: usize, out: &mut [f32]) {
        let start = row * self.cols;
        match &self.storage {
            Storage::Single(v) => out.copy_from_slice(&v[start..start + self.cols]),
            Storage::Packed { format, bits } => {
                for (o, &b) in out.iter_mut().zip(&bits[start..start + self.cols]) {
                    *o = decode(Packed16::new(b, *format));
                }
            }
        }
    }

    pub fn row(&self, row: usize) -> Vec<f32> {
        let mut out = vec![0.0; self.cols];
        self.row_into(row, &mut out);
        out
    }

    /// Widened copy of the whole matrix, row-major.
    pub fn to_f32(&self) -> Vec<f32> {
        match &self.storage {
            Storage::Single(v) => v.clone(),
            Storage::Packed { format, bits } => {
                bits.iter().map(|&b| decode(Packed16::new(b, *format))).collect()
            }
        }
    }

    /// Widened copy, column-major.
    pub fn to_f32_columns(&self) -> Vec<f32> {
        let mut out = vec![0.0; self.rows * self.cols];
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[c * self.rows + r] = self.get(r, c);
            }
        }
        out
    }

    /// Raw stored patterns for a 16-bit matrix.
    pub fn packed_bits(&self) -> Option<&[u16]> {
        match &self.storage {
            Storage::Single(_) => None,
            Storage::Packed { bits, .. } => Some(bits),
        }
    }

    /// New matrix made of the given rows, in order, at the same precision.
    pub fn select_rows(&self, indices: &[usize]) -> QuantizedMatrix {
        let cols = self.cols;
        let storage = match &self.storage {
            Storage::Single(v) => Storage::Single(
                indices
                    .iter()
                    .flat_map(|&r| v[r * cols..(r + 1) * cols].iter().copied())
                    .collect(),
            ),
            Storage::Packed { format, bits } => Storage::Packed {
                format: *format,
                bits: indices
                    .iter()
                    .flat_map(|&r| bits[r * cols..(r + 1) * cols].iter().copied())
                    .collect(),
            },
        };
        QuantizedMatrix {
            rows: indices.len(),
            cols,
            storage,
        }
    }

    /// Append `extra` rows given as `f32`, narrowed to this matrix's precision.
    pub fn append_rows(&self, extra: &[f32]) -> QuantizedMatrix {
        assert_eq!(extra.len() % self.cols.max(1), 0);
        let added = if self.cols == 0 { 0 } else { extra.len() / self.cols };
        let tail = quantize_matrix(added, self.cols, extra, self.format()).matrix;
        let storage = match (&self.storage, tail.storage) {
            (Storage::Single(a), Storage::Single(b)) => {
                Storage::Single(a.iter().copied().chain(b).collect())
            }
            (Storage::Packed { format, bits: a }, Storage::Packed { bits: b, .. }) => {
                Storage::Packed {
                    format: *format,
                    bits: a.iter().copied().chain(b).collect(),
                }
            }
            _ => unreachable!("tail quantized at the same precision"),
        };
        QuantizedMatrix {
            rows: self.rows + added,
            cols: self.cols,
            storage,
        }
    }

    /// Re-store at another precision, going through the widened values.
    pub fn requantize(&self, format: PrecisionFormat, rounding: Rounding) -> QuantizeOutcome {
        quantize_matrix_with(self.rows, self.cols, &self.to_f32(), format, rounding)
    }

    /// Dump cells as little-endian, row-major, `cell_bytes` per cell.
    pub fn write_raw<W: Write>(&self, mut w: W) -> io::Result<()> {
        match &self.storage {
            Storage::Single(v) => {
                for x in v {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
            Storage::Packed { bits, .. } => {
                for b in bits {
                    w.write_all(&b.to_le_bytes())?;
                }
            }
        }
        w.flush()
    }

    /// Inverse of [`write_raw`](Self::write_raw).
    pub fn read_raw<R: Read>(
        mut r: R,
        rows: usize,
        cols: usize,
        format: PrecisionFormat,
    ) -> Result<QuantizedMatrix, Error> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        let expected = rows * cols * format.cell_bytes();
        if buf.len() != expected {
            return Err(Error::RawSize {
                expected,
                found: buf.len(),
            });
        }
        let storage = match format.as_16bit() {
            None => Storage::Single(
                buf.chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                    .collect(),
            ),
            Some(f16) => Storage::Packed {
                format: f16,
                bits: buf
                    .chunks_exact(2)
                    .map(|c| u16::from_le_bytes([c[0], c[1]]))
                    .collect(),
            },
        };
        Ok(QuantizedMatrix {
            rows,
            cols,
            storage,
        })
    }
}

/// Error introduced by storing a matrix at reduced precision.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QuantizationError {
    pub max_abs: f64,
    /// Over nonzero cells.
    pub max_rel: f64,
    /// Over nonzero cells.
    pub mean_rel: f64,
}

pub fn quantization_error(
    rows: usize,
    cols: usize,
    values: &[f32],
    format: PrecisionFormat,
) -> QuantizationError {
    let stored = quantize_matrix(rows, cols, values, format).matrix.to_f32();
    let mut report = QuantizationError::default();
    let mut rel_sum = 0.0;
    let mut nonzero = 0usize;
    for (&x, &q) in values.iter().zip(&stored) {
        let abs = (q as f64 - x as f64).abs();
        report.max_abs = report.max_abs.max(abs);
        if x != 0.0 {
            let rel = abs / (x as f64).abs();
            report.max_rel = report.max_rel.max(rel);
            rel_sum += rel;
            nonzero += 1;
        }
    }
    if nonzero > 0 {
        report.mean_rel = rel_sum / nonzero as f64;
    }
    report
}
