//! Binary PGM (`P5`) and PBM (`P4`) reading and writing.
//!
//! The writer emits exactly `P5\n<w> <h>\n<maxval>\n` followed by big-endian
//! samples (one byte per sample up to maxval 255, two above), so files
//! round-trip byte for byte. The reader additionally accepts `#` comments in
//! the header, which some tools emit.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{BinaryImage, GrayImage, Scale};

struct HeaderParser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderParser<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        HeaderParser { bytes, pos: 0 }
    }

    /// Skips whitespace and `#` comment lines between header tokens.
    fn skip_separators(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_separators();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self) -> Option<u64> {
        let tok = self.token()?;
        std::str::from_utf8(tok).ok()?.parse().ok()
    }

    /// Consumes the single whitespace byte that separates the header from the
    /// raster data.
    fn finish_header(&mut self) -> usize {
        self.pos += 1;
        self.pos
    }
}

/// Reads a binary PGM file. Samples are mapped to the raw `[0, 255]` scale:
/// a maxval of 255 is loaded verbatim, other maxvals (up to 65535) are
/// rescaled by `255 / maxval`.
pub fn read_pgm<T: Scalar>(path: impl AsRef<Path>) -> Result<GrayImage<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let malformed = |detail: &str| Error::MalformedImage {
        path: path.to_path_buf(),
        detail: detail.into(),
    };

    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            detail: "not a binary PGM (P5) file".into(),
        });
    }
    let mut parser = HeaderParser::new(&bytes[2..]);
    let width = parser.number().ok_or_else(|| malformed("missing width"))? as usize;
    let height = parser.number().ok_or_else(|| malformed("missing height"))? as usize;
    let maxval = parser.number().ok_or_else(|| malformed("missing maxval"))?;
    if width == 0 || height == 0 {
        return Err(Error::ZeroSized {
            path: path.to_path_buf(),
        });
    }
    if maxval == 0 || maxval > 65535 {
        return Err(malformed(&format!("maxval {maxval} outside 1..=65535")));
    }
    let data_start = 2 + parser.finish_header();
    let bytes_per_sample = if maxval <= 255 { 1 } else { 2 };
    let expected = width * height * bytes_per_sample;
    let raster = bytes
        .get(data_start..data_start + expected)
        .ok_or_else(|| malformed("truncated raster data"))?;

    let rescale = T::from_count(255) / T::from_u64(maxval).expect("maxval fits");
    let mut data = Array2::zeros((height, width));
    for (idx, px) in data.iter_mut().enumerate() {
        let sample = if bytes_per_sample == 1 {
            raster[idx] as u64
        } else {
            u16::from_be_bytes([raster[2 * idx], raster[2 * idx + 1]]) as u64
        };
        if sample > maxval {
            return Err(malformed(&format!("sample {sample} exceeds maxval {maxval}")));
        }
        *px = T::from_u64(sample).expect("sample fits") * rescale;
    }
    GrayImage::new(data, Scale::Raw)
}

/// Writes a binary PGM file with the given maxval (≤ 255 gives one byte per
/// sample, larger values two big-endian bytes). Pixels are mapped from the
/// image's declared scale onto `0..=maxval` with rounding.
pub fn write_pgm<T: Scalar>(img: &GrayImage<T>, path: impl AsRef<Path>, maxval: u16) -> Result<()> {
    let path = path.as_ref();
    assert!(maxval > 0, "maxval must be positive");
    let mut out = Vec::with_capacity(32 + img.rows() * img.cols() * 2);
    out.extend_from_slice(format!("P5\n{} {}\n{}\n", img.cols(), img.rows(), maxval).as_bytes());
    let scale_max = img.scale().max::<T>();
    let maxval_t = T::from_u16(maxval).expect("maxval fits");
    for &v in img.data().iter() {
        let clamped = v.max(T::zero()).min(scale_max);
        let sample = (clamped / scale_max * maxval_t).round();
        let sample = sample.to_u16().unwrap_or(maxval).min(maxval);
        if maxval <= 255 {
            out.push(sample as u8);
        } else {
            out.extend_from_slice(&sample.to_be_bytes());
        }
    }
    fs::write(path, out).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes a binary PBM (`P4`) mask; foreground pixels become black (bit 1),
/// rows padded to whole bytes.
pub fn write_pbm(mask: &BinaryImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (rows, cols) = (mask.rows(), mask.cols());
    let row_bytes = cols.div_ceil(8);
    let mut out = Vec::with_capacity(32 + rows * row_bytes);
    out.extend_from_slice(format!("P4\n{cols} {rows}\n").as_bytes());
    for i in 0..rows {
        let mut packed = vec![0u8; row_bytes];
        for j in 0..cols {
            if mask.get(i, j) {
                packed[j / 8] |= 0x80 >> (j % 8);
            }
        }
        out.extend_from_slice(&packed);
    }
    fs::write(path, out).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a binary PBM (`P4`) mask; black bits become foreground.
pub fn read_pbm(path: impl AsRef<Path>) -> Result<BinaryImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let malformed = |detail: &str| Error::MalformedImage {
        path: path.to_path_buf(),
        detail: detail.into(),
    };
    if bytes.len() < 2 || &bytes[..2] != b"P4" {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            detail: "not a binary PBM (P4) file".into(),
        });
    }
    let mut parser = HeaderParser::new(&bytes[2..]);
    let width = parser.number().ok_or_else(|| malformed("missing width"))? as usize;
    let height = parser.number().ok_or_else(|| malformed("missing height"))? as usize;
    if width == 0 || height == 0 {
        return Err(Error::ZeroSized {
            path: path.to_path_buf(),
        });
    }
    let data_start = 2 + parser.finish_header();
    let row_bytes = width.div_ceil(8);
    let raster = bytes
        .get(data_start..data_start + height * row_bytes)
        .ok_or_else(|| malformed("truncated raster data"))?;
    let mask = Array2::from_shape_fn((height, width), |(i, j)| {
        raster[i * row_bytes + j / 8] & (0x80 >> (j % 8)) != 0
    });
    BinaryImage::new(mask)
}
