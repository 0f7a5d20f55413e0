//! Grayscale and binary raster images: representation, file I/O and
//! synthetic test scenes.
//!
//! Pixels are stored in double (or `f32`) precision regardless of the input
//! bit depth; loaders map every source format onto the raw `[0, 255]` scale
//! and [`GrayImage::normalize`] moves to the unit scale the fitting code
//! expects.

mod png;
mod pnm;
mod synth;

use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use png::{read_png, write_png_gray, write_png_mask};
pub use pnm::{read_pbm, read_pgm, write_pbm, write_pgm};
pub use synth::{standard_suite, synth_image, Ellipse, PolyProduct, SceneSpec, SynthScene};

/// Declared value range of a [`GrayImage`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    /// Raw intensities in `[0, 255]`, the loaders' output scale.
    Raw,
    /// Normalized intensities in `[0, 1]`, the fitting scale.
    Unit,
}

impl Scale {
    pub fn max<T: Scalar>(self) -> T {
        match self {
            Scale::Raw => T::from_count(255),
            Scale::Unit => T::one(),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scale::Raw => write!(f, "raw [0, 255]"),
            Scale::Unit => write!(f, "unit [0, 1]"),
        }
    }
}

/// A dense grayscale image with a declared value range.
///
/// Immutable after construction; all operations return new images, so values
/// can be shared freely across threads.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage<T: Scalar = f64> {
    data: Array2<T>,
    scale: Scale,
}

impl<T: Scalar> GrayImage<T> {
    /// Wraps a pixel matrix, checking that it is non-empty and that every
    /// value lies inside the declared range.
    pub fn new(data: Array2<T>, scale: Scale) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::EmptyImage);
        }
        let max = scale.max::<T>();
        for ((i, j), &v) in data.indexed_iter() {
            if !(v >= T::zero() && v <= max) {
                return Err(Error::PixelOutOfRange {
                    detail: format!("pixel ({i}, {j}) = {v} outside {scale}"),
                });
            }
        }
        Ok(GrayImage { data, scale })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        scale: Scale,
        mut f: impl FnMut(usize, usize) -> T,
    ) -> Result<Self> {
        Self::new(Array2::from_shape_fn((rows, cols), |(i, j)| f(i, j)), scale)
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn data(&self) -> &Array2<T> {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[[row, col]]
    }

    /// Divides every pixel by 255 and marks the image as unit scale.
    pub fn normalize(&self) -> Result<GrayImage<T>> {
        if self.scale != Scale::Raw {
            return Err(Error::ScaleMismatch {
                expected: Scale::Raw.to_string(),
                got: self.scale.to_string(),
            });
        }
        let max = Scale::Raw.max::<T>();
        Ok(GrayImage {
            data: self.data.mapv(|v| v / max),
            scale: Scale::Unit,
        })
    }

    /// Multiplies every pixel by 255 and marks the image as raw scale; the
    /// inverse of [`GrayImage::normalize`] up to one rounding per pixel.
    pub fn to_raw(&self) -> Result<GrayImage<T>> {
        if self.scale != Scale::Unit {
            return Err(Error::ScaleMismatch {
                expected: Scale::Unit.to_string(),
                got: self.scale.to_string(),
            });
        }
        let max = Scale::Raw.max::<T>();
        Ok(GrayImage {
            data: self.data.mapv(|v| v * max),
            scale: Scale::Raw,
        })
    }

    /// Reflects intensities about the declared range: `max - pixel`.
    pub fn invert(&self) -> GrayImage<T> {
        let max = self.scale.max::<T>();
        GrayImage {
            data: self.data.mapv(|v| max - v),
            scale: self.scale,
        }
    }
}

/// A binary mask; `true` marks foreground pixels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryImage {
    mask: Array2<bool>,
}

impl BinaryImage {
    pub fn new(mask: Array2<bool>) -> Result<Self> {
        if mask.nrows() == 0 || mask.ncols() == 0 {
            return Err(Error::EmptyImage);
        }
        Ok(BinaryImage { mask })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        Self::new(Array2::from_shape_fn((rows, cols), |(i, j)| f(i, j)))
    }

    pub fn all_background(rows: usize, cols: usize) -> Result<Self> {
        Self::new(Array2::from_elem((rows, cols), false))
    }

    pub fn rows(&self) -> usize {
        self.mask.nrows()
    }

    pub fn cols(&self) -> usize {
        self.mask.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.mask[[row, col]]
    }

    pub fn mask(&self) -> &Array2<bool> {
        &self.mask
    }

    pub fn foreground_count(&self) -> usize {
        self.mask.iter().filter(|&&v| v).count()
    }

    pub fn foreground_fraction(&self) -> f64 {
        self.foreground_count() as f64 / (self.rows() * self.cols()) as f64
    }
}

/// Loads a grayscale image, dispatching on the file's magic bytes.
///
/// Binary PGM (`P5`) and PNG (8-bit gray, 16-bit gray, RGB/RGBA reduced to
/// luma with the 0.299/0.587/0.114 weights) are supported. The result is
/// always on the raw `[0, 255]` scale.
pub fn load_image<T: Scalar>(path: impl AsRef<Path>) -> Result<GrayImage<T>> {
    let path = path.as_ref();
    let mut magic = [0u8; 8];
    let mut file = File::open(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let n = file.read(&mut magic).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    drop(file);
    if n >= 2 && &magic[..2] == b"P5" {
        read_pgm(path)
    } else if n >= 8 && magic == [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a] {
        read_png(path)
    } else {
        Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            detail: "expected binary PGM (P5) or PNG".into(),
        })
    }
}

/// Loads a ground-truth mask: PBM (`P4`) directly, or any grayscale format
/// with dark pixels (below half the value range) taken as foreground.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryImage> {
    let path = path.as_ref();
    let mut magic = [0u8; 2];
    let mut file = File::open(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let n = file.read(&mut magic).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    drop(file);
    if n >= 2 && &magic == b"P4" {
        return read_pbm(path);
    }
    let gray: GrayImage<f64> = load_image(path)?;
    let half = Scale::Raw.max::<f64>() / 2.0;
    BinaryImage::new(gray.data().mapv(|v| v < half))
}
