//! Binarization of grayscale images with nonuniform background and heavy noise.
//!
//! The pipeline has two stages. First the smooth background intensity surface
//! of an image is estimated as a sum of rank-one terms `u·vᵀ`, each fit to the
//! running residual under a Huber-weighted square loss with a curvature
//! penalty on both profiles ([`background::estimate_background`]). Second, the
//! background is subtracted and a single global threshold for the flattened
//! image is selected by minimizing a gMDL model-selection score over candidate
//! thresholds ([`threshold::select_threshold`]). Pixels at or below the
//! threshold are foreground.
//!
//! The crate also ships the classic Otsu/Niblack/Sauvola binarizers for
//! comparison runs, the standard document-binarization metric suite
//! (F-measure, pseudo F-measure, PSNR, DRD, MPM), PGM/PBM/PNG raster I/O and
//! a deterministic synthetic-scene generator used for testing and evaluation.
//!
//! All numeric code is generic over a floating [`Scalar`]; every public type
//! defaults to `f64`, so `GrayImage`, `HuberConfig` etc. without a type
//! argument are the double-precision versions.

pub mod background;
pub mod error;
pub mod metrics;
pub mod penalty;
pub mod raster;
mod scalar;
pub mod threshold;

// Surfaces and weights in the public API are ndarray types.
pub use ndarray;

pub use background::{
    estimate_background, fit_rank_one, huber_weights, objective_f, select_lambda,
    BackgroundEstimate, BackgroundModel, HuberConfig, IrlsStep, RankOneFit, RankOneTerm,
    RobustFitState, TolMode,
};
pub use error::{Error, Result};
pub use metrics::{
    counts, drd, evaluate_pair, f_measure, mpm, pseudo_f_measure, psnr, FMeasure, MetricsReport,
    PixelCounts, PSNR_CAP_DB,
};
pub use penalty::{
    build_penalties, conditional_penalty, solve_banded_spd, Banded2, BandedSpdSystem, PenaltyPair,
};
pub use raster::{
    load_image, load_mask, standard_suite, synth_image, BinaryImage, Ellipse, GrayImage,
    PolyProduct, Scale, SceneSpec, SynthScene,
};
pub use scalar::Scalar;
pub use threshold::{
    binarize, binarize_with_limits, gmdl_score, local_mean_sd, niblack, otsu, sauvola,
    select_threshold, select_threshold_with_limits, subtract_background, BinarizationResult,
    GmdlBranch, GmdlEvaluation, OtsuResult, SubtractedImage,
};
