//! PNG input and output via the `image` crate.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{BinaryImage, GrayImage, Scale};

const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Reads a PNG as a raw-scale grayscale image. 8-bit and 16-bit gray are
/// mapped onto `[0, 255]`; RGB and RGBA are reduced to luma with the
/// 0.299/0.587/0.114 weights (alpha is ignored).
pub fn read_png<T: Scalar>(path: impl AsRef<Path>) -> Result<GrayImage<T>> {
    let path = path.as_ref();
    let dynamic = ::image::ImageReader::open(path)
        .map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?
        .decode()
        .map_err(|e| Error::MalformedImage {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
    let (width, height) = (dynamic.width() as usize, dynamic.height() as usize);
    if width == 0 || height == 0 {
        return Err(Error::ZeroSized {
            path: path.to_path_buf(),
        });
    }

    let data: Array2<f64> = match dynamic {
        ::image::DynamicImage::ImageLuma8(buf) => {
            Array2::from_shape_fn((height, width), |(i, j)| {
                buf.get_pixel(j as u32, i as u32).0[0] as f64
            })
        }
        ::image::DynamicImage::ImageLuma16(buf) => {
            Array2::from_shape_fn((height, width), |(i, j)| {
                buf.get_pixel(j as u32, i as u32).0[0] as f64 * 255.0 / 65535.0
            })
        }
        ::image::DynamicImage::ImageRgb8(buf) => {
            Array2::from_shape_fn((height, width), |(i, j)| {
                luma(buf.get_pixel(j as u32, i as u32).0)
            })
        }
        ::image::DynamicImage::ImageRgba8(buf) => {
            Array2::from_shape_fn((height, width), |(i, j)| {
                let p = buf.get_pixel(j as u32, i as u32).0;
                luma([p[0], p[1], p[2]])
            })
        }
        other => {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
                detail: format!("unsupported PNG pixel layout {:?}", other.color()),
            })
        }
    };
    GrayImage::new(data.mapv(|v| T::from_f64(v).expect("pixel fits scalar")), Scale::Raw)
}

fn luma(rgb: [u8; 3]) -> f64 {
    let v = LUMA_WEIGHTS[0] * rgb[0] as f64
        + LUMA_WEIGHTS[1] * rgb[1] as f64
        + LUMA_WEIGHTS[2] * rgb[2] as f64;
    v.clamp(0.0, 255.0)
}

/// Writes an 8-bit grayscale PNG; pixels are mapped from the image's scale
/// onto `0..=255` with rounding.
pub fn write_png_gray<T: Scalar>(img: &GrayImage<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let max = img.scale().max::<T>();
    let two_five_five = T::from_count(255);
    let buf = ::image::GrayImage::from_fn(img.cols() as u32, img.rows() as u32, |x, y| {
        let v = img.get(y as usize, x as usize).max(T::zero()).min(max);
        let s = (v / max * two_five_five).round().to_u8().unwrap_or(255);
        ::image::Luma([s])
    });
    buf.save(path).map_err(|e| Error::Write {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    })
}

/// Writes a mask PNG with foreground pixels black.
pub fn write_png_mask(mask: &BinaryImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let buf = ::image::GrayImage::from_fn(mask.cols() as u32, mask.rows() as u32, |x, y| {
        ::image::Luma([if mask.get(y as usize, x as usize) { 0 } else { 255 }])
    });
    buf.save(path).map_err(|e| Error::Write {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    })
}
