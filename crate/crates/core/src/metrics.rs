//! Binarization quality measures over (prediction, ground truth) mask
//! pairs: F-measure, pseudo F-measure, PSNR, DRD and MPM.
//!
//! The distance-based measures use the exact Euclidean distance of each
//! pixel to the nearest ground-truth foreground contour pixel, computed with
//! the two-pass lower-envelope distance transform. A contour pixel is a
//! foreground pixel with a background 4-neighbor (pixels outside the image
//! count as background).

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::raster::BinaryImage;
use crate::scalar::Scalar;

/// Exactly-equal masks report this PSNR instead of +∞.
pub const PSNR_CAP_DB: f64 = 99.0;

/// Pixel-level confusion counts; foreground is the positive class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PixelCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl PixelCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Recall/precision breakdown of the F-measure.
#[derive(Clone, Copy, Debug)]
pub struct FMeasure<T: Scalar = f64> {
    pub fm: T,
    pub recall: T,
    pub precision: T,
}

/// All five measures for one mask pair.
#[derive(Clone, Copy, Debug)]
pub struct MetricsReport<T: Scalar = f64> {
    pub fm: T,
    pub pfm: T,
    pub psnr: T,
    pub drd: T,
    pub mpm: T,
    pub counts: PixelCounts,
}

fn check_dims(pred: &BinaryImage, gt: &BinaryImage) -> Result<()> {
    if pred.rows() != gt.rows() || pred.cols() != gt.cols() {
        return Err(Error::dim(format!(
            "prediction {}x{} vs ground truth {}x{}",
            pred.rows(),
            pred.cols(),
            gt.rows(),
            gt.cols()
        )));
    }
    Ok(())
}

/// Confusion counts for a mask pair.
pub fn counts(pred: &BinaryImage, gt: &BinaryImage) -> Result<PixelCounts> {
    check_dims(pred, gt)?;
    let mut c = PixelCounts {
        tp: 0,
        fp: 0,
        fn_: 0,
        tn: 0,
    };
    for (&p, &g) in pred.mask().iter().zip(gt.mask().iter()) {
        match (p, g) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// F-measure with its recall and precision. Undefined (an error) when the
/// ground truth has no foreground at all; zero when nothing was recalled.
pub fn f_measure<T: Scalar>(pred: &BinaryImage, gt: &BinaryImage) -> Result<FMeasure<T>> {
    let c = counts(pred, gt)?;
    if c.tp + c.fn_ == 0 {
        return Err(Error::UndefinedMetric {
            detail: "ground truth has no foreground pixels".into(),
        });
    }
    let recall = T::from_count(c.tp) / T::from_count(c.tp + c.fn_);
    let precision = if c.tp + c.fp == 0 {
        T::zero()
    } else {
        T::from_count(c.tp) / T::from_count(c.tp + c.fp)
    };
    let fm = if recall + precision == T::zero() {
        T::zero()
    } else {
        T::two() * recall * precision / (recall + precision)
    };
    Ok(FMeasure {
        fm,
        recall,
        precision,
    })
}

/// `10·log10(C²/MSE)` on {0,1} masks with C = 1, capped at 99 dB for exact
/// agreement.
pub fn psnr<T: Scalar>(pred: &BinaryImage, gt: &BinaryImage) -> Result<T> {
    let c = counts(pred, gt)?;
    let wrong = c.fp + c.fn_;
    if wrong == 0 {
        return Ok(T::from_f64(PSNR_CAP_DB).expect("cap fits scalar"));
    }
    let mse = T::from_count(wrong) / T::from_count(c.total());
    Ok(T::from_count(10) * (T::one() / mse).log10())
}

/// Foreground pixels with a background 4-neighbor; image borders count as
/// background.
fn gt_contour(gt: &BinaryImage) -> Array2<bool> {
    let (m, n) = (gt.rows(), gt.cols());
    Array2::from_shape_fn((m, n), |(i, j)| {
        if !gt.get(i, j) {
            return false;
        }
        i == 0
            || j == 0
            || i == m - 1
            || j == n - 1
            || !gt.get(i - 1, j)
            || !gt.get(i + 1, j)
            || !gt.get(i, j - 1)
            || !gt.get(i, j + 1)
    })
}

/// One-dimensional squared-distance transform (lower envelope of parabolas).
/// Sources with +∞ cost are skipped, so columns without any seed propagate
/// infinity until the row pass fills them in.
fn dt_1d<T: Scalar>(f: &[T], d: &mut [T], v: &mut [usize], z: &mut [T]) {
    let n = f.len();
    let Some(first) = f.iter().position(|x| x.is_finite()) else {
        d[..n].fill(T::infinity());
        return;
    };
    let mut k = 0usize;
    v[0] = first;
    z[0] = T::neg_infinity();
    z[1] = T::infinity();
    for q in first + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        let qf = T::from_count(q);
        loop {
            let p = v[k];
            let pf = T::from_count(p);
            let s = ((f[q] + qf * qf) - (f[p] + pf * pf)) / (T::two() * (qf - pf));
            if s <= z[k] {
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = T::infinity();
                break;
            }
        }
    }
    let mut k = 0usize;
    for q in 0..n {
        let qf = T::from_count(q);
        while z[k + 1] < qf {
            k += 1;
        }
        let p = v[k];
        let pf = T::from_count(p);
        d[q] = (qf - pf) * (qf - pf) + f[p];
    }
}

/// Exact Euclidean distance of every pixel to the nearest seed pixel.
fn distance_to_seeds<T: Scalar>(seeds: &Array2<bool>) -> Array2<T> {
    let (m, n) = seeds.dim();
    let mut g = Array2::from_shape_fn((m, n), |(i, j)| {
        if seeds[[i, j]] {
            T::zero()
        } else {
            T::infinity()
        }
    });
    let cap = m.max(n);
    let mut f = vec![T::zero(); cap];
    let mut d = vec![T::zero(); cap];
    let mut v = vec![0usize; cap];
    let mut z = vec![T::zero(); cap + 1];
    for j in 0..n {
        for i in 0..m {
            f[i] = g[[i, j]];
        }
        dt_1d(&f[..m], &mut d[..m], &mut v, &mut z);
        for i in 0..m {
            g[[i, j]] = d[i];
        }
    }
    for i in 0..m {
        for j in 0..n {
            f[j] = g[[i, j]];
        }
        dt_1d(&f[..n], &mut d[..n], &mut v, &mut z);
        for j in 0..n {
            g[[i, j]] = d[j];
        }
    }
    g.mapv(|sq| sq.sqrt())
}

/// Misclassification penalty metric: contour distances of the false
/// negatives and false positives, normalized by twice the sum of all pixels'
/// contour distances so the value is image-size stable.
pub fn mpm<T: Scalar>(pred: &BinaryImage, gt: &BinaryImage) -> Result<T> {
    check_dims(pred, gt)?;
    let contour = gt_contour(gt);
    if !contour.iter().any(|&c| c) {
        return Err(Error::UndefinedMetric {
            detail: "ground truth has no foreground contour".into(),
        });
    }
    let dist = distance_to_seeds::<T>(&contour);
    let mut num = T::zero();
    let mut denom = T::zero();
    for ((i, j), &d) in dist.indexed_iter() {
        denom = denom + d;
        if pred.get(i, j) != gt.get(i, j) {
            num = num + d;
        }
    }
    if num == T::zero() {
        return Ok(T::zero());
    }
    Ok(num / (T::two() * denom))
}

/// The 5×5 DRD weight mask: zero at the center, reciprocal distance
/// elsewhere, normalized to sum one.
fn drd_weights<T: Scalar>() -> [[T; 5]; 5] {
    let mut w = [[0.0f64; 5]; 5];
    let mut total = 0.0;
    for (i, row) in w.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if (i, j) != (2, 2) {
                let d = (((i as f64) - 2.0).powi(2) + ((j as f64) - 2.0).powi(2)).sqrt();
                *cell = 1.0 / (2.0 * d);
                total += *cell;
            }
        }
    }
    let mut out = [[T::zero(); 5]; 5];
    for i in 0..5 {
        for j in 0..5 {
            out[i][j] = T::from_f64(w[i][j] / total).expect("weight fits scalar");
        }
    }
    out
}

/// Count of non-uniform 8×8 ground-truth blocks (grid-aligned; partial edge
/// blocks included).
fn nubn(gt: &BinaryImage) -> usize {
    let (m, n) = (gt.rows(), gt.cols());
    let mut count = 0;
    for bi in (0..m).step_by(8) {
        for bj in (0..n).step_by(8) {
            let mut any_fg = false;
            let mut any_bg = false;
            'block: for i in bi..(bi + 8).min(m) {
                for j in bj..(bj + 8).min(n) {
                    if gt.get(i, j) {
                        any_fg = true;
                    } else {
                        any_bg = true;
                    }
                    if any_fg && any_bg {
                        break 'block;
                    }
                }
            }
            if any_fg && any_bg {
                count += 1;
            }
        }
    }
    count
}

/// Distance reciprocal distortion: each flipped pixel is charged the
/// weighted ground-truth disagreement over its 5×5 neighborhood, and the
/// total is normalized by the non-uniform block count. Undefined on a
/// uniform ground truth.
pub fn drd<T: Scalar>(pred: &BinaryImage, gt: &BinaryImage) -> Result<T> {
    check_dims(pred, gt)?;
    let blocks = nubn(gt);
    if blocks == 0 {
        return Err(Error::UndefinedMetric {
            detail: "ground truth is uniform; NUBN = 0".into(),
        });
    }
    let w = drd_weights::<T>();
    let (m, n) = (gt.rows(), gt.cols());
    let mut total = T::zero();
    for i in 0..m {
        for j in 0..n {
            if pred.get(i, j) == gt.get(i, j) {
                continue;
            }
            let pv = pred.get(i, j);
            let mut drd_k = T::zero();
            for (di, wrow) in w.iter().enumerate() {
                for (dj, &wv) in wrow.iter().enumerate() {
                    let ni = i as isize + di as isize - 2;
                    let nj = j as isize + dj as isize - 2;
                    if ni < 0 || nj < 0 || ni >= m as isize || nj >= n as isize {
                        continue;
                    }
                    if gt.get(ni as usize, nj as usize) != pv {
                        drd_k = drd_k + wv;
                    }
                }
            }
            total = total + drd_k;
        }
    }
    Ok(total / T::from_count(blocks))
}

/// Pseudo F-measure: recall and precision where an erroneous pixel still
/// earns the partial credit `w = 1/(1 + d)` of its distance `d` to the
/// ground-truth foreground contour. Errors hugging the contour are nearly
/// free (ground-truth contours are themselves uncertain); errors far from it
/// count fully.
pub fn pseudo_f_measure<T: Scalar>(pred: &BinaryImage, gt: &BinaryImage) -> Result<T> {
    check_dims(pred, gt)?;
    let contour = gt_contour(gt);
    if !contour.iter().any(|&c| c) {
        return Err(Error::UndefinedMetric {
            detail: "ground truth has no foreground contour".into(),
        });
    }
    let dist = distance_to_seeds::<T>(&contour);
    pseudo_f_from_distances(pred, gt, &dist)
}

fn pseudo_f_from_distances<T: Scalar>(
    pred: &BinaryImage,
    gt: &BinaryImage,
    dist: &Array2<T>,
) -> Result<T> {
    let mut tp = 0usize;
    let mut gt_fg = 0usize;
    let mut pred_fg = 0usize;
    let mut fn_credit = T::zero();
    let mut fp_credit = T::zero();
    for ((i, j), &d) in dist.indexed_iter() {
        let p = pred.get(i, j);
        let g = gt.get(i, j);
        let w = T::one() / (T::one() + d);
        if g {
            gt_fg += 1;
        }
        if p {
            pred_fg += 1;
        }
        match (p, g) {
            (true, true) => tp += 1,
            (false, true) => fn_credit = fn_credit + w,
            (true, false) => fp_credit = fp_credit + w,
            _ => {}
        }
    }
    if gt_fg == 0 {
        return Err(Error::UndefinedMetric {
            detail: "ground truth has no foreground pixels".into(),
        });
    }
    let recall = (T::from_count(tp) + fn_credit) / T::from_count(gt_fg);
    let precision = if pred_fg == 0 {
        T::zero()
    } else {
        (T::from_count(tp) + fp_credit) / T::from_count(pred_fg)
    };
    if recall + precision == T::zero() {
        return Ok(T::zero());
    }
    Ok(T::two() * recall * precision / (recall + precision))
}

/// All five measures for a pair, sharing one distance transform.
pub fn evaluate_pair<T: Scalar>(pred: &BinaryImage, gt: &BinaryImage) -> Result<MetricsReport<T>> {
    let f = f_measure::<T>(pred, gt)?;
    let psnr_db = psnr::<T>(pred, gt)?;
    let c = counts(pred, gt)?;
    let drd_val = drd::<T>(pred, gt)?;

    let contour = gt_contour(gt);
    if !contour.iter().any(|&x| x) {
        return Err(Error::UndefinedMetric {
            detail: "ground truth has no foreground contour".into(),
        });
    }
    let dist = distance_to_seeds::<T>(&contour);
    let pfm = pseudo_f_from_distances(pred, gt, &dist)?;
    let mut num = T::zero();
    let mut denom = T::zero();
    for ((i, j), &d) in dist.indexed_iter() {
        denom = denom + d;
        if pred.get(i, j) != gt.get(i, j) {
            num = num + d;
        }
    }
    let mpm_val = if num == T::zero() {
        T::zero()
    } else {
        num / (T::two() * denom)
    };

    Ok(MetricsReport {
        fm: f.fm,
        pfm,
        psnr: psnr_db,
        drd: drd_val,
        mpm: mpm_val,
        counts: c,
    })
}
