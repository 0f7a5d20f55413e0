//! Deterministic synthetic scenes: a smooth separable background, dark
//! elliptical foregrounds of known depth, and Gaussian noise. Used as the
//! test oracle for the whole pipeline, since the true background and the
//! true mask are known by construction.

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{BinaryImage, GrayImage, Scale};

/// One separable background term: a product of a polynomial in the
/// normalized row coordinate and one in the normalized column coordinate
/// (degree at most 3 each, coefficients in ascending order).
#[derive(Clone, Debug)]
pub struct PolyProduct<T: Scalar = f64> {
    pub row_coeffs: Vec<T>,
    pub col_coeffs: Vec<T>,
}

impl<T: Scalar> PolyProduct<T> {
    pub fn constant(c: T) -> Self {
        PolyProduct {
            row_coeffs: vec![c],
            col_coeffs: vec![T::one()],
        }
    }
}

/// A dark elliptical foreground: `center`/`radii` in pixel units (row, col),
/// `depth` subtracted from the background inside the ellipse.
#[derive(Clone, Debug)]
pub struct Ellipse<T: Scalar = f64> {
    pub center: (T, T),
    pub radii: (T, T),
    pub depth: T,
}

impl<T: Scalar> Ellipse<T> {
    pub fn disk(center: (T, T), radius: T, depth: T) -> Self {
        Ellipse {
            center,
            radii: (radius, radius),
            depth,
        }
    }

    fn contains(&self, i: usize, j: usize) -> bool {
        let di = (T::from_count(i) - self.center.0) / self.radii.0;
        let dj = (T::from_count(j) - self.center.1) / self.radii.1;
        di * di + dj * dj <= T::one()
    }
}

/// Full description of a synthetic scene on the unit intensity scale.
#[derive(Clone, Debug)]
pub struct SceneSpec<T: Scalar = f64> {
    pub rows: usize,
    pub cols: usize,
    /// At most three separable terms summed into the background.
    pub background: Vec<PolyProduct<T>>,
    pub foregrounds: Vec<Ellipse<T>>,
    pub noise_sigma: T,
    pub seed: u64,
}

/// Generated scene: the noisy observed image plus both ground truths.
#[derive(Clone, Debug)]
pub struct SynthScene<T: Scalar = f64> {
    pub image: GrayImage<T>,
    pub mask: BinaryImage,
    pub background: GrayImage<T>,
}

fn eval_poly<T: Scalar>(coeffs: &[T], x: T) -> T {
    coeffs
        .iter()
        .rev()
        .fold(T::zero(), |acc, &c| acc * x + c)
}

/// Renders a scene. Generation is deterministic given `spec.seed`; noise is
/// drawn pixel by pixel in row-major order and the result is clamped to the
/// unit range.
pub fn synth_image<T: Scalar>(spec: &SceneSpec<T>) -> Result<SynthScene<T>> {
    if spec.rows == 0 || spec.cols == 0 {
        return Err(Error::Synth {
            detail: "scene must have at least one pixel".into(),
        });
    }
    if spec.background.is_empty() || spec.background.len() > 3 {
        return Err(Error::Synth {
            detail: format!(
                "background must have 1..=3 separable terms, got {}",
                spec.background.len()
            ),
        });
    }
    for term in &spec.background {
        if term.row_coeffs.is_empty()
            || term.col_coeffs.is_empty()
            || term.row_coeffs.len() > 4
            || term.col_coeffs.len() > 4
        {
            return Err(Error::Synth {
                detail: "background polynomials must have degree 0..=3".into(),
            });
        }
    }
    let (m, n) = (spec.rows, spec.cols);
    for (idx, e) in spec.foregrounds.iter().enumerate() {
        let ok = e.radii.0 > T::zero()
            && e.radii.1 > T::zero()
            && e.center.0 - e.radii.0 >= T::zero()
            && e.center.1 - e.radii.1 >= T::zero()
            && e.center.0 + e.radii.0 <= T::from_count(m - 1)
            && e.center.1 + e.radii.1 <= T::from_count(n - 1);
        if !ok {
            return Err(Error::Synth {
                detail: format!("foreground {idx} extends outside the image"),
            });
        }
    }

    let row_denom = T::from_count(m.max(2) - 1);
    let col_denom = T::from_count(n.max(2) - 1);
    let background = Array2::from_shape_fn((m, n), |(i, j)| {
        let x = T::from_count(i) / row_denom;
        let y = T::from_count(j) / col_denom;
        spec.background
            .iter()
            .map(|t| eval_poly(&t.row_coeffs, x) * eval_poly(&t.col_coeffs, y))
            .fold(T::zero(), |a, b| a + b)
    });
    if background.iter().any(|&v| v < T::zero() || v > T::one()) {
        return Err(Error::Synth {
            detail: "background leaves the unit intensity range".into(),
        });
    }

    let mask = Array2::from_shape_fn((m, n), |(i, j)| {
        spec.foregrounds.iter().any(|e| e.contains(i, j))
    });

    let mut clean = background.clone();
    for ((i, j), inside) in mask.indexed_iter() {
        if *inside {
            let depth = spec
                .foregrounds
                .iter()
                .filter(|e| e.contains(i, j))
                .map(|e| e.depth)
                .fold(T::zero(), T::max);
            let v = clean[[i, j]] - depth;
            if v < T::zero() {
                return Err(Error::Synth {
                    detail: format!("foreground depth exceeds background range at ({i}, {j})"),
                });
            }
            clean[[i, j]] = v;
        }
    }

    let image = if spec.noise_sigma > T::zero() {
        let sigma = spec
            .noise_sigma
            .to_f64()
            .ok_or_else(|| Error::Synth {
                detail: "noise sigma not representable".into(),
            })?;
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::Synth {
            detail: format!("bad noise sigma: {e}"),
        })?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        clean.mapv(|v| {
            let noise = T::from_f64(rng.sample(normal)).expect("noise fits scalar");
            (v + noise).max(T::zero()).min(T::one())
        })
    } else {
        clean
    };

    Ok(SynthScene {
        image: GrayImage::new(image, Scale::Unit)?,
        mask: BinaryImage::new(mask)?,
        background: GrayImage::new(background, Scale::Unit)?,
    })
}

/// The ten-scene evaluation suite: flat, sloped and bowl backgrounds, a
/// high-noise scene, dense (25–35% coverage) and sparse (<1%) foregrounds,
/// and two blank scenes without any foreground. Scene seeds derive from
/// `seed` so the whole suite is reproducible from one number.
pub fn standard_suite<T: Scalar>(seed: u64) -> Vec<(String, SceneSpec<T>)> {
    let t = |v: f64| T::from_f64(v).expect("constant fits scalar");
    let slope = |base: f64, ri: f64, ci: f64| PolyProduct {
        row_coeffs: vec![t(base), t(ri)],
        col_coeffs: vec![t(1.0), t(ci / base.max(1e-9))],
    };
    // Separable bowl: (a + b(x - 1/2)^2) expanded in ascending powers.
    let bowl_poly = |a: f64, b: f64| vec![t(a + 0.25 * b), t(-b), t(b)];

    let scene_seed = |idx: u64| seed.wrapping_mul(1_000_003).wrapping_add(idx);
    let mut scenes = Vec::new();

    // 1: flat blank background, mild noise.
    scenes.push((
        "s01_flat_blank".to_string(),
        SceneSpec {
            rows: 128,
            cols: 160,
            background: vec![PolyProduct::constant(t(0.85))],
            foregrounds: vec![],
            noise_sigma: t(0.02),
            seed: scene_seed(1),
        },
    ));
    // 2: sloped blank background.
    scenes.push((
        "s02_slope_blank".to_string(),
        SceneSpec {
            rows: 128,
            cols: 160,
            background: vec![slope(0.6, 0.25, 0.1)],
            foregrounds: vec![],
            noise_sigma: t(0.02),
            seed: scene_seed(2),
        },
    ));
    // 3: flat background with a handful of disks.
    scenes.push((
        "s03_flat_disks".to_string(),
        SceneSpec {
            rows: 128,
            cols: 160,
            background: vec![PolyProduct::constant(t(0.8))],
            foregrounds: scatter_disks(scene_seed(3), 128, 160, 10, 7.0, 0.35),
            noise_sigma: t(0.03),
            seed: scene_seed(3),
        },
    ));
    // 4: mild slope with ditch-like disks.
    scenes.push((
        "s04_slope_disks".to_string(),
        SceneSpec {
            rows: 160,
            cols: 160,
            background: vec![slope(0.55, 0.28, 0.08)],
            foregrounds: scatter_disks(scene_seed(4), 160, 160, 12, 8.0, 0.4),
            noise_sigma: t(0.05),
            seed: scene_seed(4),
        },
    ));
    // 5: separable bowl background.
    scenes.push((
        "s05_bowl_disks".to_string(),
        SceneSpec {
            rows: 160,
            cols: 160,
            background: vec![PolyProduct {
                row_coeffs: bowl_poly(0.62, 0.25),
                col_coeffs: bowl_poly(1.0, 0.3),
            }],
            foregrounds: scatter_disks(scene_seed(5), 160, 160, 10, 8.0, 0.4),
            noise_sigma: t(0.05),
            seed: scene_seed(5),
        },
    ));
    // 6: high noise.
    scenes.push((
        "s06_high_noise".to_string(),
        SceneSpec {
            rows: 160,
            cols: 160,
            background: vec![slope(0.6, 0.2, 0.08)],
            foregrounds: scatter_disks(scene_seed(6), 160, 160, 9, 9.0, 0.5),
            noise_sigma: t(0.1),
            seed: scene_seed(6),
        },
    ));
    // 7: dense foregrounds, 25–35% coverage. Placement is Poisson (overlaps
    // allowed and merged) so the disk field carries no separable structure
    // the background model could latch onto.
    scenes.push((
        "s07_dense".to_string(),
        SceneSpec {
            rows: 160,
            cols: 160,
            background: vec![slope(0.7, 0.12, 0.05)],
            foregrounds: dense_random_disks(scene_seed(7), 160, 160, 97, 0.4),
            noise_sigma: t(0.03),
            seed: scene_seed(7),
        },
    ));
    // 8: sparse foregrounds, below 1% coverage.
    scenes.push((
        "s08_sparse".to_string(),
        SceneSpec {
            rows: 160,
            cols: 160,
            background: vec![slope(0.65, 0.2, 0.08)],
            foregrounds: vec![
                Ellipse::disk((t(40.0), t(48.0)), t(5.0), t(0.4)),
                Ellipse::disk((t(110.0), t(120.0)), t(6.0), t(0.4)),
            ],
            noise_sigma: t(0.03),
            seed: scene_seed(8),
        },
    ));
    // 9: mixed ellipses on a bowl.
    scenes.push((
        "s09_ellipses".to_string(),
        SceneSpec {
            rows: 160,
            cols: 192,
            background: vec![PolyProduct {
                row_coeffs: bowl_poly(0.66, 0.2),
                col_coeffs: bowl_poly(1.0, 0.25),
            }],
            foregrounds: vec![
                Ellipse {
                    center: (t(40.0), t(50.0)),
                    radii: (t(12.0), t(20.0)),
                    depth: t(0.4),
                },
                Ellipse {
                    center: (t(95.0), t(120.0)),
                    radii: (t(18.0), t(11.0)),
                    depth: t(0.45),
                },
                Ellipse {
                    center: (t(125.0), t(45.0)),
                    radii: (t(10.0), t(10.0)),
                    depth: t(0.35),
                },
                Ellipse {
                    center: (t(42.0), t(150.0)),
                    radii: (t(9.0), t(14.0)),
                    depth: t(0.4),
                },
                Ellipse {
                    center: (t(120.0), t(165.0)),
                    radii: (t(11.0), t(8.0)),
                    depth: t(0.4),
                },
            ],
            noise_sigma: t(0.05),
            seed: scene_seed(9),
        },
    ));
    // 10: strong bilinear slope with deep ditches.
    scenes.push((
        "s10_ditches".to_string(),
        SceneSpec {
            rows: 160,
            cols: 160,
            background: vec![PolyProduct {
                row_coeffs: vec![t(0.55), t(0.3)],
                col_coeffs: vec![t(1.0), t(0.15)],
            }],
            foregrounds: scatter_disks(scene_seed(10), 160, 160, 8, 10.0, 0.5),
            noise_sigma: t(0.05),
            seed: scene_seed(10),
        },
    ));
    scenes
}

/// Scatters non-overlapping disks uniformly over the interior.
fn scatter_disks<T: Scalar>(
    seed: u64,
    rows: usize,
    cols: usize,
    count: usize,
    radius: f64,
    depth: f64,
) -> Vec<Ellipse<T>> {
    let t = |v: f64| T::from_f64(v).expect("constant fits scalar");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_d15c);
    let mut centers: Vec<(f64, f64)> = Vec::new();
    let lo_r = radius + 2.0;
    let hi_r = rows as f64 - 1.0 - radius - 2.0;
    let hi_c = cols as f64 - 1.0 - radius - 2.0;
    let mut attempts = 0;
    while centers.len() < count && attempts < 10_000 {
        attempts += 1;
        let ci = rng.random_range(lo_r..hi_r);
        let cj = rng.random_range(lo_r..hi_c);
        let clear = centers
            .iter()
            .all(|&(a, b)| (a - ci).hypot(b - cj) > 2.0 * radius + 3.0);
        if clear {
            centers.push((ci, cj));
        }
    }
    centers
        .into_iter()
        .map(|(ci, cj)| Ellipse::disk((t(ci), t(cj)), t(radius), t(depth)))
        .collect()
}

/// Uniformly random disks with mixed radii; overlaps are allowed and merge
/// into larger blobs. With the defaults the union covers roughly 30% of the
/// image.
fn dense_random_disks<T: Scalar>(
    seed: u64,
    rows: usize,
    cols: usize,
    count: usize,
    depth: f64,
) -> Vec<Ellipse<T>> {
    let t = |v: f64| T::from_f64(v).expect("constant fits scalar");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd45e_617d);
    let mut out = Vec::new();
    for _ in 0..count {
        let radius = rng.random_range(4.5..6.5);
        let ci = rng.random_range(radius + 1.0..rows as f64 - 1.0 - radius - 1.0);
        let cj = rng.random_range(radius + 1.0..cols as f64 - 1.0 - radius - 1.0);
        out.push(Ellipse::disk((t(ci), t(cj)), t(radius), t(depth)));
    }
    out
}
