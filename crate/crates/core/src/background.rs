//! Robust background estimation: stagewise (boosted) fitting of smooth
//! rank-one terms under a Huber-weighted square loss.
//!
//! Each stage fits one term `u·vᵀ` to the current residual by iteratively
//! reweighted least squares: weights from the Huber rule, then a closed-form
//! solve for `u` with `v` fixed, then the symmetric solve for `v`. The
//! normal-equations operator `𝒱ᵀ𝒲𝒱` collapses to a diagonal because the
//! weight operator is diagonal, so each solve is a pentadiagonal SPD system:
//!
//! ```text
//! (diag(a) + λΩ_{u|v}) u = b,   a_i = Σ_j W(i,j) v_j²,   b_i = Σ_j W(i,j) v_j R(i,j)
//! ```
//!
//! and runs in O(mn) per iteration without ever forming a Kronecker product.
//! The roughness penalty λ is selected per stage over a fixed grid by the
//! final objective value, and stages stop once a term's energy `‖u‖²·‖v‖²`
//! falls below the stage tolerance.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::penalty::{
    build_penalties, conditional_penalty, solve_banded_spd, BandedSpdSystem, PenaltyPair,
};
use crate::raster::{GrayImage, Scale};
use crate::scalar::Scalar;

/// How the inner IRLS convergence tolerance is applied to
/// `‖u_old·v_oldᵀ − u·vᵀ‖_F²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TolMode {
    /// Relative to `‖R‖_F²` of the stage residual (scale-stable, default).
    Relative,
    /// Absolute, as printed in the stopping rule.
    Absolute,
}

/// Configuration of the robust fit.
#[derive(Clone, Debug)]
pub struct HuberConfig<T: Scalar = f64> {
    /// Huber cutoff δ: residuals within ±δ get weight 1, beyond it δ/|r|.
    ///
    /// The 1.346 default is the classical choice for unit-variance
    /// residuals. Note that on the unit intensity scale all residuals stay
    /// below it, which makes the fit effectively unweighted; pass a δ
    /// comparable to the noise level (e.g. `0.1`) to actually engage the
    /// downweighting, or fit on the raw scale.
    pub delta: T,
    pub max_irls_iters: usize,
    /// Inner tolerance ε on the change of the fitted surface.
    pub tol_inner: T,
    /// Stage tolerance ε on the energy `‖u‖²·‖v‖²` of the newest term.
    pub tol_stage: T,
    pub max_stages: usize,
    /// Candidate smoothness penalties tried at every stage.
    pub lambda_grid: Vec<T>,
    pub tol_mode: TolMode,
    /// Intensity scale the fit expects its input on.
    pub fit_scale: Scale,
}

impl<T: Scalar> Default for HuberConfig<T> {
    fn default() -> Self {
        let t = |v: f64| T::from_f64(v).expect("constant fits scalar");
        HuberConfig {
            delta: t(1.346),
            max_irls_iters: 100,
            tol_inner: t(1e-6),
            tol_stage: t(1e-6),
            max_stages: 20,
            lambda_grid: vec![t(1e-4), t(1e-2), t(1.0), t(1e2), t(1e4)],
            tol_mode: TolMode::Relative,
            fit_scale: Scale::Unit,
        }
    }
}

impl<T: Scalar> HuberConfig<T> {
    /// Defaults with the Huber cutoff mapped onto the unit intensity scale:
    /// δ = 1.346/255. The classical constant is calibrated against raw
    /// 0..255 residuals; dividing by 255 keeps the weighting behavior
    /// identical after normalization.
    pub fn for_unit_scale() -> Self {
        let mut cfg = Self::default();
        cfg.delta = T::from_f64(1.346 / 255.0).expect("constant fits scalar");
        cfg
    }

    /// Same settings with the Huber weighting disabled (every weight 1);
    /// used for plain penalized least-squares comparisons.
    pub fn unweighted(mut self) -> Self {
        self.delta = T::infinity();
        self
    }

    pub fn with_delta(mut self, delta: T) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > T::zero()) {
            return Err(Error::config("delta must be positive"));
        }
        if !(self.tol_inner > T::zero()) || !(self.tol_stage > T::zero()) {
            return Err(Error::config("tolerances must be positive"));
        }
        if self.max_stages == 0 {
            return Err(Error::config("max_stages must be at least 1"));
        }
        if self.max_irls_iters == 0 {
            return Err(Error::config("max_irls_iters must be at least 1"));
        }
        if self.lambda_grid.is_empty() {
            return Err(Error::config("lambda grid must not be empty"));
        }
        if self.lambda_grid.iter().any(|&l| !(l > T::zero()) || !l.is_finite()) {
            return Err(Error::config("lambda grid entries must be positive and finite"));
        }
        Ok(())
    }
}

/// One fitted rank-one background term.
#[derive(Clone, Debug)]
pub struct RankOneTerm<T: Scalar = f64> {
    pub u: Array1<T>,
    pub v: Array1<T>,
    /// Penalty the term was fit with.
    pub lambda: T,
    pub irls_iters: usize,
    /// Objective value at the final iterate (with weights recomputed there).
    pub objective: T,
}

impl<T: Scalar> RankOneTerm<T> {
    /// `‖u‖²·‖v‖²`, the stage-stopping statistic.
    pub fn energy(&self) -> T {
        dot(&self.u, &self.u) * dot(&self.v, &self.v)
    }

    /// The surface `u·vᵀ` this term contributes.
    pub fn surface(&self) -> Array2<T> {
        outer(&self.u, &self.v)
    }
}

/// Objective checkpoints of one IRLS iteration, all taken with the weights
/// fixed at their value for that iteration. Coordinate solves minimize the
/// objective exactly, so `after_u ≤ at_weights` and `after_v ≤ after_u` up
/// to roundoff.
#[derive(Clone, Copy, Debug)]
pub struct IrlsStep<T: Scalar = f64> {
    pub at_weights: T,
    pub after_u: T,
    pub after_v: T,
}

/// Final weights and per-iteration diagnostics of one rank-one fit.
#[derive(Clone, Debug)]
pub struct RobustFitState<T: Scalar = f64> {
    /// Huber weights at the returned iterate; every entry is in (0, 1].
    pub weights: Array2<T>,
    pub steps: Vec<IrlsStep<T>>,
}

/// A fitted term together with its fit state.
#[derive(Clone, Debug)]
pub struct RankOneFit<T: Scalar = f64> {
    pub term: RankOneTerm<T>,
    pub state: RobustFitState<T>,
}

/// The background model: an ordered sum of rank-one terms.
#[derive(Clone, Debug)]
pub struct BackgroundModel<T: Scalar = f64> {
    terms: Vec<RankOneTerm<T>>,
    rows: usize,
    cols: usize,
}

impl<T: Scalar> BackgroundModel<T> {
    pub fn new(terms: Vec<RankOneTerm<T>>, rows: usize, cols: usize) -> Self {
        BackgroundModel { terms, rows, cols }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn terms(&self) -> &[RankOneTerm<T>] {
        &self.terms
    }

    /// Reconstructs the full background surface `L = Σ u_k·v_kᵀ`.
    pub fn surface(&self) -> Array2<T> {
        let mut l = Array2::zeros((self.rows, self.cols));
        for term in &self.terms {
            for i in 0..self.rows {
                let ui = term.u[i];
                for j in 0..self.cols {
                    l[[i, j]] = l[[i, j]] + ui * term.v[j];
                }
            }
        }
        l
    }
}

/// Background model plus the per-stage IRLS traces.
#[derive(Clone, Debug)]
pub struct BackgroundEstimate<T: Scalar = f64> {
    pub model: BackgroundModel<T>,
    pub traces: Vec<Vec<IrlsStep<T>>>,
}

/// Elementwise Huber weights for a matrix of fit residuals: 1 within ±δ,
/// δ/|r| beyond. Output values are always in (0, 1].
pub fn huber_weights<T: Scalar>(residual_fit: &Array2<T>, delta: T) -> Array2<T> {
    residual_fit.mapv(|r| {
        let a = r.abs();
        if a <= delta {
            T::one()
        } else {
            delta / a
        }
    })
}

fn dot<T: Scalar>(a: &Array1<T>, b: &Array1<T>) -> T {
    a.iter().zip(b.iter()).map(|(&x, &y)| x * y).sum()
}

fn outer<T: Scalar>(u: &Array1<T>, v: &Array1<T>) -> Array2<T> {
    Array2::from_shape_fn((u.len(), v.len()), |(i, j)| u[i] * v[j])
}

/// `Σ_ij W(i,j) (R(i,j) - u_i v_j)²` accumulated per row and then summed, so
/// the value is stable enough for the tight monotonicity checks.
fn weighted_residual_sq<T: Scalar>(
    r: &Array2<T>,
    w: &Array2<T>,
    u: &Array1<T>,
    v: &Array1<T>,
) -> T {
    let (m, n) = r.dim();
    let mut total = T::zero();
    for i in 0..m {
        let ui = u[i];
        let mut row = T::zero();
        for j in 0..n {
            let d = r[[i, j]] - ui * v[j];
            row = row + w[[i, j]] * d * d;
        }
        total = total + row;
    }
    total
}

/// `‖R‖_F²` with row-wise accumulation.
fn frob_sq<T: Scalar>(r: &Array2<T>) -> T {
    let mut total = T::zero();
    for row in r.rows() {
        let mut acc = T::zero();
        for &x in row {
            acc = acc + x * x;
        }
        total = total + acc;
    }
    total
}

/// The fit objective
/// `f(u, v; λ) = ‖W^{1/2}∘(R − u·vᵀ)‖_F² + λ·uᵀΩu·vᵀv + λ·vᵀΩv·uᵀu + 2λ·uᵀΓu·vᵀΓv`.
pub fn objective_f<T: Scalar>(
    u: &Array1<T>,
    v: &Array1<T>,
    r: &Array2<T>,
    w: &Array2<T>,
    pen_u: &PenaltyPair<T>,
    pen_v: &PenaltyPair<T>,
    lambda: T,
) -> Result<T> {
    let (m, n) = r.dim();
    if w.dim() != (m, n) || u.len() != m || v.len() != n || pen_u.size() != m || pen_v.size() != n
    {
        return Err(Error::dim(format!(
            "objective on {m}x{n} residual with |u|={}, |v|={}, W {:?}, penalties {}/{}",
            u.len(),
            v.len(),
            w.dim(),
            pen_u.size(),
            pen_v.size()
        )));
    }
    let us = u.as_slice().expect("contiguous");
    let vs = v.as_slice().expect("contiguous");
    let loss = weighted_residual_sq(r, w, u, v);
    let smooth = lambda * pen_u.omega.quad_form(us) * dot(v, v)
        + lambda * pen_v.omega.quad_form(vs) * dot(u, u)
        + T::two() * lambda * pen_u.gamma.quad_form(us) * pen_v.gamma.quad_form(vs);
    Ok(loss + smooth)
}

/// Closed-form update of the row profile with the column profile fixed:
/// solves `(diag(a) + λΩ_{u|v}) u = b` with the collapsed diagonal data
/// terms.
pub fn update_u<T: Scalar>(
    r: &Array2<T>,
    w: &Array2<T>,
    v: &Array1<T>,
    pen_u: &PenaltyPair<T>,
    pen_v: &PenaltyPair<T>,
    lambda: T,
) -> Result<Array1<T>> {
    let (m, n) = r.dim();
    if w.dim() != (m, n) || v.len() != n {
        return Err(Error::dim("update_u operand shapes disagree".to_string()));
    }
    let mut matrix = conditional_penalty(pen_u, pen_v, v.as_slice().expect("contiguous"), lambda)?;
    let mut diag = vec![T::zero(); m];
    let mut rhs = vec![T::zero(); m];
    for i in 0..m {
        let mut a = T::zero();
        let mut b = T::zero();
        for j in 0..n {
            let wv = w[[i, j]] * v[j];
            a = a + wv * v[j];
            b = b + wv * r[[i, j]];
        }
        diag[i] = a;
        rhs[i] = b;
    }
    matrix.add_diag(&diag);
    let x = solve_banded_spd(&BandedSpdSystem::new(matrix, rhs)?)?;
    Ok(Array1::from(x))
}

/// Closed-form update of the column profile with the row profile fixed.
pub fn update_v<T: Scalar>(
    r: &Array2<T>,
    w: &Array2<T>,
    u: &Array1<T>,
    pen_u: &PenaltyPair<T>,
    pen_v: &PenaltyPair<T>,
    lambda: T,
) -> Result<Array1<T>> {
    let (m, n) = r.dim();
    if w.dim() != (m, n) || u.len() != m {
        return Err(Error::dim("update_v operand shapes disagree".to_string()));
    }
    let mut matrix = conditional_penalty(pen_v, pen_u, u.as_slice().expect("contiguous"), lambda)?;
    let mut diag = vec![T::zero(); n];
    let mut rhs = vec![T::zero(); n];
    for i in 0..m {
        let ui = u[i];
        for j in 0..n {
            let wu = w[[i, j]] * ui;
            diag[j] = diag[j] + wu * ui;
            rhs[j] = rhs[j] + wu * r[[i, j]];
        }
    }
    matrix.add_diag(&diag);
    let x = solve_banded_spd(&BandedSpdSystem::new(matrix, rhs)?)?;
    Ok(Array1::from(x))
}

/// Leading singular pair of `r` as unit vectors, computed by alternating
/// power iteration. The zero matrix yields zero vectors.
///
/// The iteration starts from these raw unit vectors, not from the scaled
/// best rank-one approximation `σ₁·u₁v₁ᵀ`. Starting at the least-squares
/// optimum would make the first weight update see near-zero residuals
/// everywhere, and the reweighted iteration then settles on that
/// non-robust fit; the norm-one initial surface anchors the first weights
/// at essentially the raw residual instead, which is what lets the
/// downweighting reject foreground-caused dips at all.
fn unit_leading_pair<T: Scalar>(r: &Array2<T>) -> (Array1<T>, Array1<T>) {
    let (m, n) = r.dim();
    let zeros = || (Array1::zeros(m), Array1::zeros(n));

    // Start from the column-norm profile, which cannot be orthogonal to the
    // leading right singular vector for typical image residuals.
    let mut v: Array1<T> = Array1::from_shape_fn(n, |j| {
        let mut acc = T::zero();
        for i in 0..m {
            acc = acc + r[[i, j]] * r[[i, j]];
        }
        acc.sqrt()
    });
    let norm = dot(&v, &v).sqrt();
    if norm == T::zero() || !norm.is_finite() {
        return zeros();
    }
    v = v / norm;

    let mut u = Array1::zeros(m);
    let mut sigma = T::zero();
    for _ in 0..300 {
        u = r.dot(&v);
        let su = dot(&u, &u).sqrt();
        if su == T::zero() {
            return zeros();
        }
        u = u / su;
        v = r.t().dot(&u);
        let sv = dot(&v, &v).sqrt();
        if sv == T::zero() {
            return zeros();
        }
        v = v / sv;
        let change = (sv - sigma).abs();
        sigma = sv;
        if change <= T::from_f64(1e-13).unwrap() * sigma {
            break;
        }
    }
    (u, v)
}

/// Fits one rank-one term to a residual matrix by Huber IRLS at a fixed
/// penalty λ.
///
/// Initialization is the leading unit singular pair; each iteration
/// recomputes the Huber weights at the current iterate and then performs the
/// exact `u` and `v` solves with those weights held fixed. Iteration stops
/// when the surface change `‖u_old·v_oldᵀ − u·vᵀ‖_F²` drops to the inner
/// tolerance (relative to `‖R‖_F²` by default) or after `max_irls_iters`.
pub fn fit_rank_one<T: Scalar>(
    r: &Array2<T>,
    cfg: &HuberConfig<T>,
    lambda: T,
) -> Result<RankOneFit<T>> {
    cfg.validate()?;
    let (m, n) = r.dim();
    if m < 3 || n < 3 {
        return Err(Error::TooSmall { rows: m, cols: n });
    }
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(Error::config(format!("lambda must be nonnegative, got {lambda}")));
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateFit {
            detail: "residual contains non-finite values".into(),
        });
    }
    let pen_u = build_penalties::<T>(m)?;
    let pen_v = build_penalties::<T>(n)?;

    let threshold = match cfg.tol_mode {
        TolMode::Relative => cfg.tol_inner * frob_sq(r),
        TolMode::Absolute => cfg.tol_inner,
    };

    let (mut u, mut v) = unit_leading_pair(r);
    let mut u_old: Array1<T> = Array1::zeros(m);
    let mut v_old: Array1<T> = Array1::zeros(n);
    let mut steps = Vec::new();
    let mut iters = 0;

    loop {
        // ‖u_old·v_oldᵀ − u·vᵀ‖_F² without forming either surface.
        let change = dot(&u_old, &u_old) * dot(&v_old, &v_old)
            - T::two() * dot(&u_old, &u) * dot(&v_old, &v)
            + dot(&u, &u) * dot(&v, &v);
        if change <= threshold || iters >= cfg.max_irls_iters {
            break;
        }

        let weights = huber_weights(&(r - &outer(&u, &v)), cfg.delta);
        let at_weights = objective_f(&u, &v, r, &weights, &pen_u, &pen_v, lambda)?;

        u_old = u.clone();
        v_old = v.clone();
        u = update_u(r, &weights, &v, &pen_u, &pen_v, lambda).map_err(degenerate(lambda))?;
        let after_u = objective_f(&u, &v, r, &weights, &pen_u, &pen_v, lambda)?;
        v = update_v(r, &weights, &u, &pen_u, &pen_v, lambda).map_err(degenerate(lambda))?;
        let after_v = objective_f(&u, &v, r, &weights, &pen_u, &pen_v, lambda)?;

        steps.push(IrlsStep {
            at_weights,
            after_u,
            after_v,
        });
        iters += 1;
    }

    // Report the objective with weights consistent with the final iterate.
    let weights_final = huber_weights(&(r - &outer(&u, &v)), cfg.delta);
    let objective = objective_f(&u, &v, r, &weights_final, &pen_u, &pen_v, lambda)?;
    Ok(RankOneFit {
        term: RankOneTerm {
            u,
            v,
            lambda,
            irls_iters: iters,
            objective,
        },
        state: RobustFitState {
            weights: weights_final,
            steps,
        },
    })
}

fn degenerate<T: Scalar>(lambda: T) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::SingularSystem { pivot } => Error::DegenerateFit {
            detail: format!("singular profile solve at row {pivot} (lambda = {lambda})"),
        },
        other => other,
    }
}

/// Fits a term for every λ in the grid and keeps the one with the smallest
/// final objective; ties go to the larger (smoother) λ.
pub fn select_lambda<T: Scalar>(r: &Array2<T>, cfg: &HuberConfig<T>) -> Result<RankOneFit<T>> {
    cfg.validate()?;
    let mut best: Option<RankOneFit<T>> = None;
    for &lambda in &cfg.lambda_grid {
        let fit = fit_rank_one(r, cfg, lambda)?;
        best = match best {
            None => Some(fit),
            Some(cur) => {
                let better = fit.term.objective < cur.term.objective
                    || (fit.term.objective == cur.term.objective
                        && fit.term.lambda > cur.term.lambda);
                Some(if better { fit } else { cur })
            }
        };
    }
    Ok(best.expect("grid validated non-empty"))
}

/// Boosted background estimation.
///
/// Starts from the image itself as the residual and repeatedly fits the
/// λ-selected rank-one term to the running residual, subtracting each term
/// as it is added. Stops early when the newest term's energy falls below the
/// stage tolerance; that final sub-threshold term is kept in the model.
pub fn estimate_background<T: Scalar>(
    y: &GrayImage<T>,
    cfg: &HuberConfig<T>,
) -> Result<BackgroundEstimate<T>> {
    cfg.validate()?;
    if y.scale() != cfg.fit_scale {
        return Err(Error::ScaleMismatch {
            expected: cfg.fit_scale.to_string(),
            got: y.scale().to_string(),
        });
    }
    let (m, n) = (y.rows(), y.cols());
    if m < 3 || n < 3 {
        return Err(Error::TooSmall { rows: m, cols: n });
    }

    let mut residual = y.data().clone();
    let mut terms = Vec::new();
    let mut traces = Vec::new();
    for _ in 0..cfg.max_stages {
        let fit = select_lambda(&residual, cfg)?;
        residual = &residual - &fit.term.surface();
        let energy = fit.term.energy();
        traces.push(fit.state.steps);
        terms.push(fit.term);
        if energy < cfg.tol_stage {
            break;
        }
    }
    Ok(BackgroundEstimate {
        model: BackgroundModel::new(terms, m, n),
        traces,
    })
}
