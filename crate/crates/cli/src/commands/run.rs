//! Shared method dispatch used by `binarize` and `evaluate`.

use robin_core::ndarray::Array2;
use robin_core::threshold::{
    binarize_with_limits, niblack, otsu, sauvola, EXACT_CANDIDATE_LIMIT, QUANTILE_CANDIDATES,
};
use robin_core::{BinaryImage, GrayImage, HuberConfig, Scale, SubtractedImage};

use crate::error::CliError;
use crate::opts::{FitScale, Method, ProposedOpts, WindowOpts};
use crate::report::StageInfo;

pub const DEFAULT_WINDOW: usize = 25;
pub const DEFAULT_NIBLACK_K: f64 = -0.2;

/// Everything a method run can produce; fields that do not apply to the
/// method stay `None`.
pub struct MethodOutcome {
    pub mask: BinaryImage,
    pub tau: Option<f64>,
    pub stages: Vec<StageInfo>,
    pub fit_scale: Option<FitScale>,
    pub background: Option<Array2<f64>>,
    pub subtracted: Option<SubtractedImage>,
    pub degenerate: Option<bool>,
    pub window: Option<usize>,
    pub k: Option<f64>,
}

/// Rejects flags that none of the selected methods accept.
pub fn validate_method_flags(
    methods: &[Method],
    proposed: &ProposedOpts,
    windowed: &WindowOpts,
) -> Result<(), CliError> {
    let has = |m: Method| methods.contains(&m);
    let mut offending = Vec::new();
    if !has(Method::Proposed) {
        offending.extend(proposed.set_flags());
    }
    if !(has(Method::Niblack) || has(Method::Sauvola)) && windowed.window.is_some() {
        offending.push("--window");
    }
    if !has(Method::Niblack) && windowed.k.is_some() {
        offending.push("--k");
    }
    if offending.is_empty() {
        Ok(())
    } else {
        let list: Vec<String> = methods.iter().map(|m| m.to_string()).collect();
        Err(CliError::usage(format!(
            "{} not accepted for method(s) {}",
            offending.join(", "),
            list.join(",")
        )))
    }
}

/// Builds the fit configuration, defaulting the Huber cutoff to the variant
/// matching the fit scale.
pub fn build_config(proposed: &ProposedOpts) -> Result<(HuberConfig, usize), CliError> {
    let fit_scale = proposed.fit_scale.unwrap_or(FitScale::Unit);
    let mut cfg = match fit_scale {
        FitScale::Unit => HuberConfig::for_unit_scale(),
        FitScale::Raw => HuberConfig::default(),
    };
    cfg.fit_scale = match fit_scale {
        FitScale::Unit => Scale::Unit,
        FitScale::Raw => Scale::Raw,
    };
    if let Some(d) = proposed.delta {
        cfg.delta = d;
    }
    if let Some(grid) = &proposed.lambda_grid {
        cfg.lambda_grid = grid.clone();
    }
    if let Some(s) = proposed.max_stages {
        cfg.max_stages = s;
    }
    if let Some(n) = proposed.max_irls_iters {
        cfg.max_irls_iters = n;
    }
    if let Some(t) = proposed.tol_inner {
        cfg.tol_inner = t;
    }
    if let Some(t) = proposed.tol_stage {
        cfg.tol_stage = t;
    }
    cfg.validate()?;
    let cap = proposed.candidate_cap.unwrap_or(EXACT_CANDIDATE_LIMIT);
    Ok((cfg, cap))
}

/// Runs one method on a raw-scale image.
pub fn run_method(
    img_raw: &GrayImage,
    method: Method,
    proposed: &ProposedOpts,
    windowed: &WindowOpts,
) -> Result<MethodOutcome, CliError> {
    match method {
        Method::Proposed => {
            let (cfg, cap) = build_config(proposed)?;
            let work = match cfg.fit_scale {
                Scale::Unit => img_raw.normalize()?,
                Scale::Raw => img_raw.clone(),
            };
            let result = binarize_with_limits(&work, &cfg, cap, QUANTILE_CANDIDATES)?;
            let stages = result
                .model
                .terms()
                .iter()
                .map(|t| StageInfo {
                    lambda: t.lambda,
                    energy: t.energy(),
                    irls_iters: t.irls_iters,
                    objective: t.objective,
                })
                .collect();
            Ok(MethodOutcome {
                mask: result.mask,
                tau: Some(result.tau),
                stages,
                fit_scale: proposed.fit_scale.or(Some(FitScale::Unit)),
                background: Some(result.background),
                subtracted: Some(result.subtracted),
                degenerate: None,
                window: None,
                k: None,
            })
        }
        Method::Otsu => {
            let out = otsu(img_raw);
            Ok(MethodOutcome {
                mask: out.mask,
                tau: Some(out.tau),
                stages: Vec::new(),
                fit_scale: None,
                background: None,
                subtracted: None,
                degenerate: Some(out.degenerate),
                window: None,
                k: None,
            })
        }
        Method::Niblack => {
            let window = windowed.window.unwrap_or(DEFAULT_WINDOW);
            let k = windowed.k.unwrap_or(DEFAULT_NIBLACK_K);
            let mask = niblack(img_raw, window, k)?;
            Ok(MethodOutcome {
                mask,
                tau: None,
                stages: Vec::new(),
                fit_scale: None,
                background: None,
                subtracted: None,
                degenerate: None,
                window: Some(window),
                k: Some(k),
            })
        }
        Method::Sauvola => {
            let window = windowed.window.unwrap_or(DEFAULT_WINDOW);
            let mask = sauvola(img_raw, window)?;
            Ok(MethodOutcome {
                mask,
                tau: None,
                stages: Vec::new(),
                fit_scale: None,
                background: None,
                subtracted: None,
                degenerate: None,
                window: Some(window),
                k: None,
            })
        }
    }
}
