//! Convex, continuously differentiable objectives with analytic gradients,
//! their weighted sums, and centralized minimizers used as oracles.
//!
//! Coordinates are 0-based here; scenario files use 1-based indices.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Tolerance on `Σ w_i = 1` for a [`WeightedProblem`].
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

pub const BACKTRACK_INITIAL_STEP: f64 = 1.0;
pub const BACKTRACK_SHRINK: f64 = 0.5;
pub const BACKTRACK_SUFFICIENT_DECREASE: f64 = 1e-4;
pub const BACKTRACK_MAX_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectiveError {
    #[error("objective reads coordinate {needed} but the point has dimension {got}")]
    DimensionTooSmall { needed: usize, got: usize },
    #[error("objective is not convex: {0}")]
    NotConvex(String),
    #[error("malformed objective: {0}")]
    Malformed(String),
    #[error("invalid weights: {0}")]
    Weights(String),
    #[error("problem has {objectives} objectives but {weights} weights")]
    WeightCount { objectives: usize, weights: usize },
    #[error("problem is not quadratic: {0}")]
    NotQuadratic(String),
    #[error("quadratic aggregate is singular (positive semidefinite but not definite)")]
    Singular,
    #[error("descent stopped after {iterations} iterations with gradient norm {residual:e}")]
    NotConverged {
        best: DVector<f64>,
        residual: f64,
        iterations: usize,
    },
}

/// `scale · exp(rate · x_coord)`
#[derive(Debug, Clone, PartialEq)]
pub struct ExpTerm {
    pub coord: usize,
    pub scale: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveKind {
    /// `scale (x_coord − center)² + offset`
    AffineQuadratic {
        coord: usize,
        scale: f64,
        center: f64,
        offset: f64,
    },
    /// `x_Sᵀ Q x_S` over the listed coordinates `S`.
    QuadraticForm {
        coords: Vec<usize>,
        matrix: DMatrix<f64>,
    },
    /// `Σ a_p x_p + offset`
    Linear {
        coords: Vec<usize>,
        coeffs: Vec<f64>,
        offset: f64,
    },
    ExpSum { terms: Vec<ExpTerm> },
    /// `Σ_{p ∈ S} x_p²`
    SumOfSquares { coords: Vec<usize> },
    /// Nonnegative combination of other objectives.
    Composite { parts: Vec<(f64, Objective)> },
}

/// A validated convex objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    kind: ObjectiveKind,
    /// One past the largest coordinate read; 0 for constants.
    span: usize,
}

fn span_of(coords: &[usize]) -> usize {
    coords.iter().map(|&c| c + 1).max().unwrap_or(0)
}

fn finite(label: &str, v: f64) -> Result<(), ObjectiveError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ObjectiveError::Malformed(format!("{label} = {v} is not finite")))
    }
}

impl Objective {
    pub fn affine_quadratic(
        coord: usize,
        scale: f64,
        center: f64,
        offset: f64,
    ) -> Result<Self, ObjectiveError> {
        finite("scale", scale)?;
        finite("center", center)?;
        finite("offset", offset)?;
        if scale < 0.0 {
            return Err(ObjectiveError::NotConvex(format!(
                "quadratic scale {scale} is negative"
            )));
        }
        Ok(Objective {
            kind: ObjectiveKind::AffineQuadratic {
                coord,
                scale,
                center,
                offset,
            },
            span: coord + 1,
        })
    }

    /// `matrix` must be symmetric positive semidefinite and match `coords`.
    pub fn quadratic_form(coords: Vec<usize>, matrix: DMatrix<f64>) -> Result<Self, ObjectiveError> {
        let d = coords.len();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(ObjectiveError::Malformed(format!(
                "quadratic form over {d} coordinates needs a {d}x{d} matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(ObjectiveError::Malformed("non-finite matrix entry".into()));
        }
        let scale = matrix.amax().max(1.0);
        if (&matrix - matrix.transpose()).amax() > 1e-12 * scale {
            return Err(ObjectiveError::Malformed("quadratic form matrix is not symmetric".into()));
        }
        if d > 0 {
            let min_eig = matrix.clone().symmetric_eigenvalues().min();
            if min_eig < -1e-12 * scale {
                return Err(ObjectiveError::NotConvex(format!(
                    "quadratic form has eigenvalue {min_eig}"
                )));
            }
        }
        let span = span_of(&coords);
        Ok(Objective {
            kind: ObjectiveKind::QuadraticForm { coords, matrix },
            span,
        })
    }

    pub fn linear(coords: Vec<usize>, coeffs: Vec<f64>, offset: f64) -> Result<Self, ObjectiveError> {
        if coords.len() != coeffs.len() {
            return Err(ObjectiveError::Malformed(format!(
                "{} coordinates but {} coefficients",
                coords.len(),
                coeffs.len()
            )));
        }
        for &a in &coeffs {
            finite("coefficient", a)?;
        }
        finite("offset", offset)?;
        let span = span_of(&coords);
        Ok(Objective {
            kind: ObjectiveKind::Linear {
                coords,
                coeffs,
                offset,
            },
            span,
        })
    }

    pub fn exp_sum(terms: Vec<ExpTerm>) -> Result<Self, ObjectiveError> {
        for t in &terms {
            finite("scale", t.scale)?;
            finite("rate", t.rate)?;
            if t.scale < 0.0 {
                return Err(ObjectiveError::NotConvex(format!(
                    "exponential coefficient {} is negative",
                    t.scale
                )));
            }
        }
        let span = terms.iter().map(|t| t.coord + 1).max().unwrap_or(0);
        Ok(Objective {
            kind: ObjectiveKind::ExpSum { terms },
            span,
        })
    }

    pub fn sum_of_squares(coords: Vec<usize>) -> Self {
        let span = span_of(&coords);
        Objective {
            kind: ObjectiveKind::SumOfSquares { coords },
            span,
        }
    }

    pub fn composite(parts: Vec<(f64, Objective)>) -> Result<Self, ObjectiveError> {
        for (w, _) in &parts {
            finite("weight", *w)?;
            if *w < 0.0 {
                return Err(ObjectiveError::NotConvex(format!(
                    "composite weight {w} is negative"
                )));
            }
        }
        let span = parts.iter().map(|(_, o)| o.span).max().unwrap_or(0);
        Ok(Objective {
            kind: ObjectiveKind::Composite { parts },
            span,
        })
    }

    pub fn kind(&self) -> &ObjectiveKind {
        &self.kind
    }

    /// Smallest point dimension this objective accepts.
    pub fn min_dim(&self) -> usize {
        self.span
    }

    /// Sorted, deduplicated coordinates this objective reads.
    pub fn coords(&self) -> Vec<usize> {
        let mut out = match &self.kind {
            ObjectiveKind::AffineQuadratic { coord, .. } => vec![*coord],
            ObjectiveKind::QuadraticForm { coords, .. }
            | ObjectiveKind::Linear { coords, .. }
            | ObjectiveKind::SumOfSquares { coords } => coords.clone(),
            ObjectiveKind::ExpSum { terms } => terms.iter().map(|t| t.coord).collect(),
            ObjectiveKind::Composite { parts } => {
                parts.iter().flat_map(|(_, o)| o.coords()).collect()
            }
        };
        out.sort_unstable();
        out.dedup();
        out
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), ObjectiveError> {
        if x.len() < self.span {
            Err(ObjectiveError::DimensionTooSmall {
                needed: self.span,
                got: x.len(),
            })
        } else {
            Ok(())
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        self.check_dim(x)?;
        Ok(self.value_unchecked(x))
    }

    pub fn gradient(&self, x: &[f64]) -> Result<DVector<f64>, ObjectiveError> {
        let mut g = DVector::zeros(x.len());
        self.gradient_into(x, g.as_mut_slice())?;
        Ok(g)
    }

    /// Writes `∇f(x)` into `out`, which must have the same length as `x`.
    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) -> Result<(), ObjectiveError> {
        self.check_dim(x)?;
        out.iter_mut().for_each(|v| *v = 0.0);
        self.add_gradient(x, 1.0, out);
        Ok(())
    }

    fn value_unchecked(&self, x: &[f64]) -> f64 {
        match &self.kind {
            ObjectiveKind::AffineQuadratic {
                coord,
                scale,
                center,
                offset,
            } => {
                let d = x[*coord] - center;
                scale * d * d + offset
            }
            ObjectiveKind::QuadraticForm { coords, matrix } => {
                let mut total = 0.0;
                for (r, &p) in coords.iter().enumerate() {
                    let mut row = 0.0;
                    for (c, &q) in coords.iter().enumerate() {
                        row += matrix[(r, c)] * x[q];
                    }
                    total += x[p] * row;
                }
                total
            }
            ObjectiveKind::Linear {
                coords,
                coeffs,
                offset,
            } => coords.iter().zip(coeffs).map(|(&p, a)| a * x[p]).sum::<f64>() + offset,
            ObjectiveKind::ExpSum { terms } => terms
                .iter()
                .map(|t| t.scale * (t.rate * x[t.coord]).exp())
                .sum(),
            ObjectiveKind::SumOfSquares { coords } => coords.iter().map(|&p| x[p] * x[p]).sum(),
            ObjectiveKind::Composite { parts } => {
                parts.iter().map(|(w, o)| w * o.value_unchecked(x)).sum()
            }
        }
    }

    /// `out += weight · ∇f(x)`.
    fn add_gradient(&self, x: &[f64], weight: f64, out: &mut [f64]) {
        match &self.kind {
            ObjectiveKind::AffineQuadratic {
                coord,
                scale,
                center,
                ..
            } => out[*coord] += weight * 2.0 * scale * (x[*coord] - center),
            ObjectiveKind::QuadraticForm { coords, matrix } => {
                // ∇(xᵀQx) = (Q + Qᵀ)x = 2Qx for symmetric Q.
                for (r, &p) in coords.iter().enumerate() {
                    let mut row = 0.0;
                    for (c, &q) in coords.iter().enumerate() {
                        row += matrix[(r, c)] * x[q];
                    }
                    out[p] += weight * 2.0 * row;
                }
            }
            ObjectiveKind::Linear { coords, coeffs, .. } => {
                for (&p, a) in coords.iter().zip(coeffs) {
                    out[p] += weight * a;
                }
            }
            ObjectiveKind::ExpSum { terms } => {
                for t in terms {
                    out[t.coord] += weight * t.scale * t.rate * (t.rate * x[t.coord]).exp();
                }
            }
            ObjectiveKind::SumOfSquares { coords } => {
                for &p in coords {
                    out[p] += weight * 2.0 * x[p];
                }
            }
            ObjectiveKind::Composite { parts } => {
                for (w, o) in parts {
                    o.add_gradient(x, weight * w, out);
                }
            }
        }
    }

    /// `(H, b)` with `∇f(x) = Hx + b` on `dim` coordinates, if `f` is quadratic.
    fn quadratic_model(&self, dim: usize) -> Option<(DMatrix<f64>, DVector<f64>)> {
        let mut h = DMatrix::zeros(dim, dim);
        let mut b = DVector::zeros(dim);
        match &self.kind {
            ObjectiveKind::AffineQuadratic {
                coord,
                scale,
                center,
                ..
            } => {
                h[(*coord, *coord)] += 2.0 * scale;
                b[*coord] -= 2.0 * scale * center;
            }
            ObjectiveKind::QuadraticForm { coords, matrix } => {
                for (r, &p) in coords.iter().enumerate() {
                    for (c, &q) in coords.iter().enumerate() {
                        h[(p, q)] += 2.0 * matrix[(r, c)];
                    }
                }
            }
            ObjectiveKind::Linear { coords, coeffs, .. } => {
                for (&p, a) in coords.iter().zip(coeffs) {
                    b[p] += a;
                }
            }
            ObjectiveKind::SumOfSquares { coords } => {
                for &p in coords {
                    h[(p, p)] += 2.0;
                }
            }
            ObjectiveKind::ExpSum { .. } => return None,
            ObjectiveKind::Composite { parts } => {
                for (w, o) in parts {
                    let (hp, bp) = o.quadratic_model(dim)?;
                    h += hp * *w;
                    b += bp * *w;
                }
            }
        }
        Some((h, b))
    }
}

/// Central-difference check of the analytic gradient.
///
/// Returns `max_p |(f(x + h e_p) − f(x − h e_p)) / 2h − ∂_p f(x)| / (1 + |∂_p f(x)|)`.
pub fn fd_check(f: &Objective, x: &[f64], h: f64) -> Result<f64, ObjectiveError> {
    if !(h > 0.0) {
        return Err(ObjectiveError::Malformed(format!("step h = {h} must be positive")));
    }
    let analytic = f.gradient(x)?;
    let mut probe = x.to_vec();
    let mut worst = 0.0f64;
    for p in 0..x.len() {
        probe[p] = x[p] + h;
        let up = f.evaluate(&probe)?;
        probe[p] = x[p] - h;
        let down = f.evaluate(&probe)?;
        probe[p] = x[p];
        let numeric = (up - down) / (2.0 * h);
        worst = worst.max((numeric - analytic[p]).abs() / (1.0 + analytic[p].abs()));
    }
    Ok(worst)
}

/// `minimize Σ w_i f_i(x)` over `x ∈ R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedProblem {
    objectives: Vec<Objective>,
    weights: DVector<f64>,
    dim: usize,
}

impl WeightedProblem {
    /// Weights must be strictly positive and sum to 1.
    pub fn new(
        objectives: Vec<Objective>,
        weights: DVector<f64>,
        dim: usize,
    ) -> Result<Self, ObjectiveError> {
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(ObjectiveError::Weights(format!("weight {w} is not strictly positive")));
        }
        let sum = weights.sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(ObjectiveError::Weights(format!("weights sum to {sum}, expected 1")));
        }
        Self::with_any_weights(objectives, weights, dim)
    }

    /// No positivity or normalization checks; `e_i` weights isolate one objective.
    pub fn with_any_weights(
        objectives: Vec<Objective>,
        weights: DVector<f64>,
        dim: usize,
    ) -> Result<Self, ObjectiveError> {
        if objectives.len() != weights.len() {
            return Err(ObjectiveError::WeightCount {
                objectives: objectives.len(),
                weights: weights.len(),
            });
        }
        if let Some(o) = objectives.iter().find(|o| o.min_dim() > dim) {
            return Err(ObjectiveError::DimensionTooSmall {
                needed: o.min_dim(),
                got: dim,
            });
        }
        Ok(WeightedProblem {
            objectives,
            weights,
            dim,
        })
    }

    pub fn objectives(&self) -> &[Objective] {
        &self.objectives
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_point(&self, x: &[f64]) -> Result<(), ObjectiveError> {
        if x.len() != self.dim {
            return Err(ObjectiveError::DimensionTooSmall {
                needed: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        self.check_point(x)?;
        Ok(self
            .objectives
            .iter()
            .zip(self.weights.iter())
            .map(|(f, w)| w * f.value_unchecked(x))
            .sum())
    }

    /// `Σ w_i f_i(x)` and `Σ w_i ∇f_i(x)`.
    pub fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, DVector<f64>), ObjectiveError> {
        let value = self.value(x)?;
        let mut g = DVector::zeros(self.dim);
        for (f, w) in self.objectives.iter().zip(self.weights.iter()) {
            f.add_gradient(x, *w, g.as_mut_slice());
        }
        Ok((value, g))
    }
}

pub fn weighted_value_and_gradient(
    p: &WeightedProblem,
    x: &[f64],
) -> Result<(f64, DVector<f64>), ObjectiveError> {
    p.value_and_gradient(x)
}

/// Exact minimizer of a quadratic weighted problem.
///
/// A one-dimensional problem made only of `a (x − c)² + b` terms uses the
/// closed form `Σ w_i a_i c_i / Σ w_i a_i`; otherwise the aggregate Hessian
/// system is solved by Cholesky factorization.
pub fn quadratic_minimizer(p: &WeightedProblem) -> Result<DVector<f64>, ObjectiveError> {
    if p.dim == 1 {
        let mut num = 0.0;
        let mut den = 0.0;
        let all_scalar = p.objectives.iter().zip(p.weights.iter()).all(|(f, w)| {
            if let ObjectiveKind::AffineQuadratic { scale, center, .. } = f.kind {
                num += w * scale * center;
                den += w * scale;
                true
            } else {
                false
            }
        });
        if all_scalar {
            if !(den > 0.0) {
                return Err(ObjectiveError::Singular);
            }
            return Ok(DVector::from_element(1, num / den));
        }
    }
    let mut h = DMatrix::zeros(p.dim, p.dim);
    let mut b = DVector::zeros(p.dim);
    for (i, (f, w)) in p.objectives.iter().zip(p.weights.iter()).enumerate() {
        let (hf, bf) = f.quadratic_model(p.dim).ok_or_else(|| {
            ObjectiveError::NotQuadratic(format!("objective {} has exponential terms", i + 1))
        })?;
        h += hf * *w;
        b += bf * *w;
    }
    let chol = h.cholesky().ok_or(ObjectiveError::Singular)?;
    let x = chol.solve(&(-b));
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ObjectiveError::Singular);
    }
    Ok(x)
}

/// Result of [`centralized_minimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: DVector<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Gradient descent with backtracking until `‖∇(Σ w_i f_i)‖ ≤ tol`.
///
/// Each iteration starts from step 1 and halves it until the Armijo
/// condition holds. When the value change is below rounding, a step is
/// accepted instead if the new gradient still points along the old one.
pub fn centralized_minimize(
    p: &WeightedProblem,
    x0: &[f64],
    tol: f64,
) -> Result<Minimum, ObjectiveError> {
    if !(tol > 0.0) {
        return Err(ObjectiveError::Malformed(format!("tolerance {tol} must be positive")));
    }
    let mut x = DVector::from_column_slice(x0);
    let (mut value, mut grad) = p.value_and_gradient(x.as_slice())?;
    if !value.is_finite() {
        return Err(ObjectiveError::Malformed("objective is not finite at the start point".into()));
    }
    for it in 0..BACKTRACK_MAX_ITERATIONS {
        let g2 = grad.norm_squared();
        if g2.sqrt() <= tol {
            return Ok(Minimum {
                x,
                value,
                grad_norm: g2.sqrt(),
                iterations: it,
            });
        }
        let rounding = 1e-12 * value.abs().max(1.0);
        let mut step = BACKTRACK_INITIAL_STEP;
        let mut accepted = None;
        while step > f64::MIN_POSITIVE {
            let trial = &x - &grad * step;
            let (tv, tg) = p.value_and_gradient(trial.as_slice())?;
            if tv.is_finite() {
                let resolvable = (value - tv).abs() > rounding;
                let armijo = resolvable
                    && tv <= value - BACKTRACK_SUFFICIENT_DECREASE * step * g2;
                let flat = !resolvable && tg.dot(&grad) > 0.0;
                if armijo || flat {
                    accepted = Some((trial, tv, tg));
                    break;
                }
            }
            step *= BACKTRACK_SHRINK;
        }
        match accepted {
            Some((nx, nv, ng)) => {
                x = nx;
                value = nv;
                grad = ng;
            }
            None => {
                return Err(ObjectiveError::NotConverged {
                    residual: grad.norm(),
                    best: x,
                    iterations: it,
                })
            }
        }
    }
    Err(ObjectiveError::NotConverged {
        residual: grad.norm(),
        best: x,
        iterations: BACKTRACK_MAX_ITERATIONS,
    })
}

/// Gradient tolerance used when no closed form is available.
pub const ORACLE_TOLERANCE: f64 = 1e-8;

/// Closed-form minimizer when the problem is quadratic, otherwise descent
/// from `start` to gradient norm [`ORACLE_TOLERANCE`].
pub fn oracle_minimizer(p: &WeightedProblem, start: &[f64]) -> Result<DVector<f64>, ObjectiveError> {
    match quadratic_minimizer(p) {
        Err(ObjectiveError::NotQuadratic(_)) => Ok(centralized_minimize(p, start, ORACLE_TOLERANCE)?.x),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f1() -> Objective {
        Objective::affine_quadratic(0, 2.0, 15.0, 100.0).unwrap()
    }
    fn f2() -> Objective {
        Objective::affine_quadratic(0, 5.0, -275.0, 10_000.0).unwrap()
    }

    #[test]
    fn scenario1_vertex_values() {
        assert_eq!(f1().evaluate(&[15.0]).unwrap(), 100.0);
        assert_eq!(f2().evaluate(&[-275.0]).unwrap(), 10_000.0);
        let sos = Objective::sum_of_squares((0..10).collect());
        assert_eq!(sos.evaluate(&[0.0; 10]).unwrap(), 0.0);
    }

    #[test]
    fn gradients_by_hand() {
        assert_eq!(f1().gradient(&[485.0]).unwrap()[0], 1880.0);
        let lin = Objective::linear(vec![0, 2], vec![10.0, 20.0], 3.0).unwrap();
        for x in [[0.0, 0.0, 0.0], [5.0, -1.0, 7.0]] {
            assert_eq!(lin.gradient(&x).unwrap().as_slice(), &[10.0, 0.0, 20.0]);
        }
        let e = Objective::exp_sum(vec![ExpTerm {
            coord: 0,
            scale: 1.0,
            rate: 1.0,
        }])
        .unwrap();
        assert_eq!(e.gradient(&[0.0, 3.0]).unwrap().as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn dimension_checks() {
        let sos = Objective::sum_of_squares(vec![0, 4]);
        assert_eq!(
            sos.evaluate(&[1.0; 3]),
            Err(ObjectiveError::DimensionTooSmall { needed: 5, got: 3 })
        );
        assert!(sos.gradient(&[1.0; 4]).is_err());
    }

    #[test]
    fn convexity_enforced_at_construction() {
        assert!(Objective::affine_quadratic(0, -1.0, 0.0, 0.0).is_err());
        let indefinite = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 2.0]);
        assert!(matches!(
            Objective::quadratic_form(vec![0, 1], indefinite),
            Err(ObjectiveError::NotConvex(_))
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(Objective::quadratic_form(vec![0, 1], asym).is_err());
        assert!(Objective::exp_sum(vec![ExpTerm { coord: 0, scale: -1.0, rate: 1.0 }]).is_err());
        assert!(Objective::composite(vec![(-0.5, f1())]).is_err());
    }

    #[test]
    fn fd_check_examples() {
        assert!(fd_check(&f1(), &[485.0], 1e-5).unwrap() <= 1e-6);
        let lin = Objective::linear(vec![0, 1], vec![3.0, -7.0], 1.0).unwrap();
        // Steps and points exactly representable in binary.
        for h in [0.5, 2f64.powi(-10), 2f64.powi(-20)] {
            assert!(fd_check(&lin, &[2.0, -4.0], h).unwrap() <= 1e-12);
            assert!(fd_check(&lin, &[-384.25, 17.5], h).unwrap() <= 1e-12);
        }
        let f16 = Objective::exp_sum(vec![
            ExpTerm { coord: 0, scale: 1.0, rate: 2.0 },
            ExpTerm { coord: 1, scale: 1.0, rate: 3.0 },
            ExpTerm { coord: 2, scale: 1.0, rate: 3.0 },
            ExpTerm { coord: 3, scale: 1.0, rate: 3.0 },
        ])
        .unwrap();
        assert!(fd_check(&f16, &[0.0; 10], 1e-6).unwrap() <= 1e-5);
        assert!(fd_check(&f16, &[0.0; 10], 0.0).is_err());
    }

    #[test]
    fn composite_is_weighted_sum() {
        let c = Objective::composite(vec![(0.5, f1()), (2.0, f2())]).unwrap();
        let x = [3.0];
        let want = 0.5 * f1().evaluate(&x).unwrap() + 2.0 * f2().evaluate(&x).unwrap();
        assert!((c.evaluate(&x).unwrap() - want).abs() < 1e-9);
        assert!(fd_check(&c, &x, 1e-5).unwrap() < 1e-6);
    }

    #[test]
    fn weighted_problem_scenario1() {
        let p = WeightedProblem::new(vec![f1(), f2()], DVector::from_vec(vec![0.078, 0.922]), 1)
            .unwrap();
        let xs = quadratic_minimizer(&p).unwrap();
        assert!((xs[0] - (-265.51)).abs() <= 0.01, "{}", xs[0]);
        assert!((xs[0] - (-265.57)).abs() <= 0.15);
        let (value, g) = p.value_and_gradient(xs.as_slice()).unwrap();
        assert!(((value - 21_849.0) / 21_849.0).abs() <= 0.01);
        assert!(g.norm() <= 1e-9);

        let p = WeightedProblem::new(vec![f1(), f2()], DVector::from_vec(vec![0.96, 0.04]), 1)
            .unwrap();
        let xs = quadratic_minimizer(&p).unwrap();
        assert!((xs[0] - (-12.26)).abs() <= 0.15, "{}", xs[0]);
    }

    #[test]
    fn degenerate_weights_isolate_one_objective() {
        assert!(WeightedProblem::new(vec![f1(), f2()], DVector::from_vec(vec![1.0, 0.0]), 1).is_err());
        let p = WeightedProblem::with_any_weights(
            vec![f1(), f2()],
            DVector::from_vec(vec![1.0, 0.0]),
            1,
        )
        .unwrap();
        assert_eq!(quadratic_minimizer(&p).unwrap()[0], 15.0);
        let x = [42.0];
        assert_eq!(p.value(&x).unwrap(), f1().evaluate(&x).unwrap());
    }

    #[test]
    fn quadratic_minimizer_errors() {
        let e = Objective::exp_sum(vec![ExpTerm { coord: 0, scale: 1.0, rate: 1.0 }]).unwrap();
        let p = WeightedProblem::new(vec![e, f1()], DVector::from_vec(vec![0.5, 0.5]), 1).unwrap();
        assert!(matches!(quadratic_minimizer(&p), Err(ObjectiveError::NotQuadratic(_))));
        let p = WeightedProblem::new(
            vec![f1(), Objective::sum_of_squares(vec![0])],
            DVector::from_vec(vec![0.5, 0.5]),
            2,
        )
        .unwrap();
        assert_eq!(quadratic_minimizer(&p), Err(ObjectiveError::Singular));
    }

    #[test]
    fn descent_agrees_with_closed_form() {
        for w1 in [0.078, 0.3015, 0.5, 0.96] {
            let p = WeightedProblem::new(
                vec![f1(), f2()],
                DVector::from_vec(vec![w1, 1.0 - w1]),
                1,
            )
            .unwrap();
            let exact = quadratic_minimizer(&p).unwrap();
            let m = centralized_minimize(&p, &[485.0], 1e-9).unwrap();
            assert!((m.x[0] - exact[0]).abs() <= 1e-6, "{} vs {}", m.x[0], exact[0]);
        }
    }

    #[test]
    fn descent_on_sum_of_squares_reaches_origin() {
        let p = WeightedProblem::new(
            vec![Objective::sum_of_squares((0..4).collect())],
            DVector::from_vec(vec![1.0]),
            4,
        )
        .unwrap();
        let m = centralized_minimize(&p, &[3.0, -2.0, 1.0, 9.0], 1e-10).unwrap();
        assert!(m.x.amax() <= 1e-10);
        assert!(centralized_minimize(&p, &[0.0; 4], 0.0).is_err());
    }

    #[test]
    fn unbounded_problem_hits_the_cap_or_fails() {
        let p = WeightedProblem::new(
            vec![Objective::linear(vec![0], vec![1.0], 0.0).unwrap()],
            DVector::from_vec(vec![1.0]),
            1,
        )
        .unwrap();
        // Steps of length 1 along a constant gradient never settle; the value
        // eventually leaves the finite range and descent stops.
        assert!(matches!(
            centralized_minimize(&p, &[0.0], 1e-8),
            Err(ObjectiveError::NotConverged { .. })
        ));
    }
}
