//! Damped nonlinear least squares (Levenberg-Marquardt).
//!
//! Constrained parameters are mapped to an unconstrained space before the
//! iteration starts: positive parameters through `theta = exp(u)` and boxed
//! parameters through a logistic map. Models never see an infeasible value.
//! Covariances are reported in the constrained (model) coordinates.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Per-parameter reparameterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    Free,
    /// `theta > 0`, via `theta = exp(u)`.
    Positive,
    /// `min < theta < max`, via a logistic map.
    Boxed { min: f64, max: f64 },
}

impl Transform {
    fn to_internal(self, theta: f64) -> Option<f64> {
        match self {
            Transform::Free => Some(theta),
            Transform::Positive => (theta > 0.0).then(|| theta.ln()),
            Transform::Boxed { min, max } => {
                if theta <= min || theta >= max {
                    return None;
                }
                let s = (theta - min) / (max - min);
                Some((s / (1.0 - s)).ln())
            }
        }
    }

    fn to_model(self, u: f64) -> f64 {
        match self {
            Transform::Free => u,
            Transform::Positive => u.exp(),
            Transform::Boxed { min, max } => min + (max - min) / (1.0 + (-u).exp()),
        }
    }

    /// `d theta / d u` evaluated at model value `theta`.
    fn slope(self, theta: f64) -> f64 {
        match self {
            Transform::Free => 1.0,
            Transform::Positive => theta,
            Transform::Boxed { min, max } => (theta - min) * (max - theta) / (max - min),
        }
    }
}

/// A least-squares objective `sum_i r_i(theta)^2`.
///
/// Residuals are model minus data, optionally divided by per-point sigmas.
pub trait ResidualProblem {
    fn num_params(&self) -> usize;

    fn num_residuals(&self) -> usize;

    fn residuals(&self, theta: &[f64]) -> DVector<f64>;

    /// Analytic Jacobian `d r_i / d theta_j`. `None` selects central
    /// differences.
    fn jacobian(&self, _theta: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    fn transforms(&self) -> Vec<Transform> {
        vec![Transform::Free; self.num_params()]
    }
}

/// Stopping rules and damping schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_iterations: usize,
    /// Relative SSR change below which an accepted step ends the iteration.
    pub ftol: f64,
    /// Gradient infinity-norm threshold, scaled by `1 + SSR`.
    pub gtol: f64,
    /// The SSR rule only ends the iteration once the accepted step is also
    /// below `xtol * (1 + |u|)` in the unconstrained coordinates.
    pub xtol: f64,
    pub initial_damping_factor: f64,
    pub damping_decrease: f64,
    pub damping_increase: f64,
    pub max_damping: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            ftol: 1e-12,
            gtol: 1e-10,
            xtol: 1e-10,
            initial_damping_factor: 1e-3,
            damping_decrease: 3.0,
            damping_increase: 7.0,
            max_damping: 1e12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Relative SSR change on an accepted step fell below `ftol` and the step
    /// itself was below `xtol`.
    SsrConverged,
    /// Gradient norm fell below `gtol * (1 + SSR)`.
    GradientConverged,
    /// Damping hit its ceiling without finding a descent step.
    Stalled,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub theta: Vec<f64>,
    pub covariance: DMatrix<f64>,
    /// Set when `J^T J` was numerically singular at the optimum and the
    /// covariance was formed from the pseudo-inverse.
    pub covariance_rank_deficient: bool,
    pub ssr: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// Gradient infinity-norm in the unconstrained coordinates.
    pub gradient_norm: f64,
    /// SSR after the initial point and after every accepted step.
    pub ssr_history: Vec<f64>,
}

impl FitReport {
    pub fn std_errors(&self) -> Vec<f64> {
        (0..self.theta.len()).map(|i| self.covariance[(i, i)].max(0.0).sqrt()).collect()
    }
}

/// Central-difference Jacobian with step `1e-6 * (1 + |theta_i|)`.
pub fn jacobian_fd<P: ResidualProblem + ?Sized>(problem: &P, theta: &[f64]) -> Result<DMatrix<f64>> {
    let n = problem.num_residuals();
    let p = problem.num_params();
    let mut jac = DMatrix::zeros(n, p);
    let mut probe = theta.to_vec();
    for j in 0..p {
        let h = 1e-6 * (1.0 + theta[j].abs());
        probe[j] = theta[j] + h;
        let plus = problem.residuals(&probe);
        probe[j] = theta[j] - h;
        let minus = problem.residuals(&probe);
        probe[j] = theta[j];
        if plus.len() != n || minus.len() != n {
            return Err(Error::InvalidParameter("residual length changed between calls".into()));
        }
        if !plus.iter().chain(minus.iter()).all(|x| x.is_finite()) {
            return Err(Error::NonFiniteResidual);
        }
        let col = (plus - minus) / (2.0 * h);
        jac.set_column(j, &col);
    }
    Ok(jac)
}

/// Relative singular-value cutoff used to declare `J^T J` singular.
const RANK_RTOL: f64 = 1e-12;

/// `sigma^2 (J^T J)^-1` with `sigma^2 = ssr / (n - p)`.
///
/// `jac` must be taken in the coordinates the covariance is wanted in.
pub fn covariance(jac: &DMatrix<f64>, ssr: f64, n: usize, p: usize) -> Result<DMatrix<f64>> {
    let (cov, deficient) = covariance_inner(jac, ssr, n, p)?;
    if deficient {
        return Err(Error::SingularNormalMatrix);
    }
    Ok(cov)
}

/// Returns the covariance together with a rank-deficiency flag. Deficient
/// directions are dropped (pseudo-inverse).
fn covariance_inner(jac: &DMatrix<f64>, ssr: f64, n: usize, p: usize) -> Result<(DMatrix<f64>, bool)> {
    if n <= p {
        return Err(Error::InsufficientData(format!("covariance needs n > p (n = {n}, p = {p})")));
    }
    if jac.ncols() != p || jac.nrows() != n {
        return Err(Error::InvalidParameter("Jacobian shape does not match (n, p)".into()));
    }
    if !jac.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFiniteResidual);
    }
    let sigma2 = ssr / (n - p) as f64;
    let svd = jac.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let s_max = svd.singular_values.iter().fold(0.0_f64, |a, &b| a.max(b));
    let cutoff = RANK_RTOL * s_max;
    let mut deficient = s_max == 0.0;
    let mut cov = DMatrix::zeros(p, p);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            deficient = true;
            continue;
        }
        let v = v_t.row(k).transpose();
        cov += (&v * v.transpose()) * (1.0 / (s * s));
    }
    cov *= sigma2;
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok((cov, deficient))
}

struct Internal<'a, P: ResidualProblem + ?Sized> {
    problem: &'a P,
    transforms: Vec<Transform>,
}

impl<P: ResidualProblem + ?Sized> Internal<'_, P> {
    fn model(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.transforms).map(|(&x, t)| t.to_model(x)).collect()
    }

    fn model_jacobian(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        match self.problem.jacobian(theta) {
            Some(j) => {
                if j.nrows() != self.problem.num_residuals() || j.ncols() != self.problem.num_params() {
                    return Err(Error::InvalidParameter("analytic Jacobian has wrong shape".into()));
                }
                if !j.iter().all(|x| x.is_finite()) {
                    return Err(Error::NonFiniteResidual);
                }
                Ok(j)
            }
            None => jacobian_fd(self.problem, theta),
        }
    }

    fn internal_jacobian(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        let mut j = self.model_jacobian(theta)?;
        for (c, (t, &th)) in self.transforms.iter().zip(theta).enumerate() {
            let s = t.slope(th);
            if s != 1.0 {
                j.column_mut(c).scale_mut(s);
            }
        }
        Ok(j)
    }
}

fn ssr_of(r: &DVector<f64>) -> Option<f64> {
    let s = r.norm_squared();
    s.is_finite().then_some(s)
}

/// Minimizes the sum of squared residuals starting from `theta0`.
///
/// An exhausted iteration budget is not an error: the best point found is
/// returned with `converged = false` and `termination = MaxIterations`.
pub fn solve<P: ResidualProblem + ?Sized>(
    problem: &P,
    theta0: &[f64],
    options: &SolveOptions,
) -> Result<FitReport> {
    let p = problem.num_params();
    let n = problem.num_residuals();
    if theta0.len() != p {
        return Err(Error::InvalidParameter(format!("theta0 has {} entries, expected {p}", theta0.len())));
    }
    if n < p {
        return Err(Error::InsufficientData(format!("{n} residuals for {p} parameters")));
    }
    let transforms = problem.transforms();
    if transforms.len() != p {
        return Err(Error::InvalidParameter("one transform per parameter required".into()));
    }
    let mut u = DVector::zeros(p);
    for (i, (t, &th)) in transforms.iter().zip(theta0).enumerate() {
        if !th.is_finite() {
            return Err(Error::InvalidParameter(format!("theta0[{i}] is not finite")));
        }
        u[i] = t
            .to_internal(th)
            .ok_or_else(|| Error::InvalidParameter(format!("theta0[{i}] = {th} is infeasible")))?;
    }
    let ctx = Internal { problem, transforms };

    let mut theta = ctx.model(u.as_slice());
    let mut r = problem.residuals(&theta);
    if r.len() != n {
        return Err(Error::InvalidParameter("residual length does not match num_residuals".into()));
    }
    let mut ssr = ssr_of(&r).ok_or(Error::NonFiniteResidual)?;
    let mut jac = ctx.internal_jacobian(&theta)?;
    let mut jtj = jac.tr_mul(&jac);
    let mut grad = jac.tr_mul(&r);
    let mut ssr_history = vec![ssr];

    let max_diag = jtj.diagonal().iter().fold(0.0_f64, |a, &b| a.max(b));
    let mut lambda = options.initial_damping_factor * if max_diag > 0.0 { max_diag } else { 1.0 };

    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;
    let mut gradient_norm = grad.amax();

    while iterations < options.max_iterations {
        gradient_norm = grad.amax();
        if gradient_norm < options.gtol * (1.0 + ssr) {
            termination = Termination::GradientConverged;
            break;
        }
        iterations += 1;

        let mut a = jtj.clone();
        for i in 0..p {
            a[(i, i)] += lambda;
        }
        let step = match a.cholesky() {
            Some(ch) => ch.solve(&(-&grad)),
            None => {
                lambda *= options.damping_increase;
                if lambda > options.max_damping {
                    return Err(Error::SingularNormalMatrix);
                }
                continue;
            }
        };

        let u_trial = &u + &step;
        let theta_trial = ctx.model(u_trial.as_slice());
        let r_trial = problem.residuals(&theta_trial);
        let ssr_trial = if theta_trial.iter().all(|x| x.is_finite()) { ssr_of(&r_trial) } else { None };
        // sum(r^2 - r'^2) as sum((r - r')(r + r')) resolves decreases far
        // below the rounding of the SSR itself.
        let decrease = ssr_trial.map(|_| r.iter().zip(r_trial.iter()).map(|(a, b)| (a - b) * (a + b)).sum::<f64>());

        // Below the rounding floor of the SSR the quadratic model decides.
        let floor = n as f64 * f64::EPSILON * ssr;
        let jd = &jac * &step;
        let predicted = -(2.0 * grad.dot(&step) + jd.dot(&jd));

        match (ssr_trial, decrease) {
            (Some(s), Some(dec)) if dec > 0.0 || (predicted <= floor && dec >= -floor) => {
                let rel = if ssr > 0.0 { dec / ssr } else { 0.0 };
                u = u_trial;
                theta = theta_trial;
                r = r_trial;
                ssr = s.min(ssr);
                ssr_history.push(ssr);
                lambda = (lambda / options.damping_decrease).max(f64::MIN_POSITIVE);
                jac = ctx.internal_jacobian(&theta)?;
                jtj = jac.tr_mul(&jac);
                grad = jac.tr_mul(&r);
                gradient_norm = grad.amax();
                // Distance to the minimum predicted by the undamped step; a
                // heavily damped step is short without being converged.
                let gn_step = jtj.clone().cholesky().map(|ch| -ch.solve(&grad));
                let remaining = gn_step.as_ref().map_or(step.amax(), |d| d.amax());
                let small_step = remaining <= options.xtol * (1.0 + u.amax());
                // Nothing measurable left to gain: the full step's predicted
                // decrease is under the rounding floor.
                let exhausted = gn_step.as_ref().is_some_and(|d| -grad.dot(d) <= floor);
                if (rel < options.ftol && (small_step || exhausted)) || ssr == 0.0 {
                    if let (Some(d), true) = (gn_step, ssr > 0.0) {
                        // Final undamped correction, kept unless it measurably
                        // raises the SSR.
                        let u_last = &u + &d;
                        let theta_last = ctx.model(u_last.as_slice());
                        let r_last = problem.residuals(&theta_last);
                        if let Some(s) = theta_last.iter().all(|x| x.is_finite()).then(|| ssr_of(&r_last)).flatten() {
                            let dec: f64 = r.iter().zip(r_last.iter()).map(|(a, b)| (a - b) * (a + b)).sum();
                            if dec >= -floor {
                                theta = theta_last;
                                ssr = s.min(ssr);
                                ssr_history.push(ssr);
                            }
                        }
                    }
                    termination = Termination::SsrConverged;
                    break;
                }
            }
            _ => {
                lambda *= options.damping_increase;
                if lambda > options.max_damping {
                    termination = Termination::Stalled;
                    break;
                }
            }
        }
    }

    let converged = matches!(termination, Termination::SsrConverged | Termination::GradientConverged);
    let model_jac = ctx.model_jacobian(&theta)?;
    let (cov, deficient) = if n > p {
        covariance_inner(&model_jac, ssr, n, p)?
    } else {
        (DMatrix::from_element(p, p, f64::NAN), true)
    };

    Ok(FitReport {
        theta,
        covariance: cov,
        covariance_rank_deficient: deficient,
        ssr,
        iterations,
        converged,
        termination,
        gradient_norm,
        ssr_history,
    })
}
