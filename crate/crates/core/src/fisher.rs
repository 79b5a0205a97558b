//! Gaussian quantum Fisher information and homodyne precision.
//!
//! Quadrature sign convention: `⟨q⟩ = √2 Im⟨b⟩`, `⟨p⟩ = √2 Re⟨b⟩`. A homodyne
//! angle `θ` measures `X_θ = (b e^{-iθ} + b† e^{iθ})/√2 = cos θ·p + sin θ·q`,
//! so `θ = π/2` is the `q` quadrature.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build, p_index, q_index, to_quadrature, LinearSystem, ModelSpec, Topology, C64};
use crate::moments::{propagate_mean, steady_covariance, steady_mean, transient_covariance, MomentState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Numeric,
    ClosedForm,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport {
    /// Fisher information about `ξ`, in inverse squared amplitude units.
    pub qfi: f64,
    pub delta_xi: f64,
    /// Homodyne angle in radians.
    pub angle: f64,
    /// `δξ_nr/δξ_r` when both branches were evaluated.
    pub eta: Option<f64>,
    pub provenance: Provenance,
}

/// The three contributions to the single-mode Gaussian QFI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiTerms {
    /// `2d²/(4d²+1) Tr[(C⁻¹∂C)²]`
    pub covariance: f64,
    /// `8(∂d)²/(16d⁴-1)`
    pub purity: f64,
    /// `∂⟨X⟩ᵀ C⁻¹ ∂⟨X⟩`
    pub displacement: f64,
}

impl QfiTerms {
    pub fn total(&self) -> f64 {
        self.covariance + self.purity + self.displacement
    }

    /// Contributions that only appear when the covariance depends on `ξ`.
    pub fn extra(&self) -> f64 {
        self.covariance + self.purity
    }
}

fn check_covariance(c: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    if (c[(0, 1)] - c[(1, 0)]).abs() > 1e-12 * c.amax().max(1.0) {
        return Err(Error::InvalidSpec("covariance must be symmetric".into()));
    }
    if !(c[(0, 0)] > 0.0) || !(c.determinant() > 0.0) {
        return Err(Error::Singular("covariance is not positive definite".into()));
    }
    c.try_inverse()
        .ok_or_else(|| Error::Singular("covariance is singular".into()))
}

/// All terms of the Gaussian QFI for one mode; `mean_deriv` and `c` are in
/// `(q, p)` order.
pub fn gaussian_qfi_terms(mean_deriv: &Vector2<f64>, c: &Matrix2<f64>, c_deriv: &Matrix2<f64>) -> Result<QfiTerms> {
    let inv = check_covariance(c)?;
    let d = c.determinant().sqrt();
    let m = inv * c_deriv;
    let covariance = 2.0 * d * d / (4.0 * d * d + 1.0) * (m * m).trace();
    // ∂d = (d/2) Tr(C⁻¹∂C)
    let dd = 0.5 * d * m.trace();
    let purity = if dd == 0.0 {
        0.0
    } else {
        let denom = 16.0 * d.powi(4) - 1.0;
        if denom <= 0.0 {
            return Err(Error::Singular(
                "purity term diverges for a pure state with ξ-dependent covariance".into(),
            ));
        }
        8.0 * dd * dd / denom
    };
    let displacement = mean_deriv.dot(&(inv * mean_deriv));
    Ok(QfiTerms {
        covariance,
        purity,
        displacement,
    })
}

pub fn gaussian_qfi(mean_deriv: &Vector2<f64>, c: &Matrix2<f64>, c_deriv: &Matrix2<f64>) -> Result<f64> {
    Ok(gaussian_qfi_terms(mean_deriv, c, c_deriv)?.total())
}

/// Error propagation `δξ = sd(X)/|∂⟨X⟩/∂ξ|` for one observable.
pub fn error_propagation(_mean_of_x: f64, var_of_x: f64, dmean_dxi: f64) -> Result<f64> {
    if !(var_of_x >= 0.0) {
        return Err(Error::InvalidSpec(format!(
            "variance must be non-negative, got {var_of_x}"
        )));
    }
    if dmean_dxi == 0.0 || !dmean_dxi.is_finite() {
        return Err(Error::ZeroDerivative);
    }
    Ok(var_of_x.sqrt() / dmean_dxi.abs())
}

/// `(q, p)` weights of the homodyne quadrature at angle `θ`.
pub fn quadrature_weights(angle: f64) -> Vector2<f64> {
    Vector2::new(angle.sin(), angle.cos())
}

/// Gradient of `(⟨q⟩, ⟨p⟩)` from the gradient of the complex amplitude.
pub fn quadrature_gradient(mode_deriv: C64) -> Vector2<f64> {
    let (q, p) = crate::model::to_quadrature_pair(mode_deriv);
    Vector2::new(q, p)
}

/// Homodyne angle with the best error-propagation precision, and that
/// precision. With a `ξ`-independent covariance it saturates the QFI.
pub fn optimal_quadrature(mode_deriv: C64, c: &Matrix2<f64>) -> Result<(f64, f64)> {
    let g = quadrature_gradient(mode_deriv);
    if g.norm() == 0.0 {
        return Err(Error::ZeroDerivative);
    }
    let inv = check_covariance(c)?;
    let u = inv * g;
    let angle = u[0].atan2(u[1]);
    let w = quadrature_weights(angle);
    let delta_xi = error_propagation(0.0, w.dot(&(c * w)), w.dot(&g))?;
    Ok((angle, delta_xi))
}

/// Readout analysis of one mode: the report plus its ingredients.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeReadout {
    pub report: PrecisionReport,
    pub mean_derivative: C64,
    pub covariance: Matrix2<f64>,
    pub terms: QfiTerms,
    /// Error propagation along the returned angle.
    pub homodyne_delta_xi: f64,
}

fn mode_block(cov: &DMatrix<f64>, mode: usize) -> Matrix2<f64> {
    let (q, p) = (q_index(mode), p_index(mode));
    Matrix2::new(cov[(q, q)], cov[(q, p)], cov[(p, q)], cov[(p, p)])
}

fn readout(mode_deriv: C64, cov: Matrix2<f64>, cov_deriv: Matrix2<f64>) -> Result<ModeReadout> {
    let g = quadrature_gradient(mode_deriv);
    let terms = gaussian_qfi_terms(&g, &cov, &cov_deriv)?;
    let (angle, homodyne) = optimal_quadrature(mode_deriv, &cov)?;
    let qfi = terms.total();
    Ok(ModeReadout {
        report: PrecisionReport {
            qfi,
            delta_xi: 1.0 / qfi.sqrt(),
            angle,
            eta: None,
            provenance: Provenance::Numeric,
        },
        mean_derivative: mode_deriv,
        covariance: cov,
        terms,
        homodyne_delta_xi: homodyne,
    })
}

fn covariance_gradient<F>(spec: &ModelSpec, covariance_at: F) -> Result<DMatrix<f64>>
where
    F: Fn(&LinearSystem) -> Result<DMatrix<f64>>,
{
    // the drive never enters the covariance; a forward difference confirms it
    let h = 1e-3 * spec.xi.max(1.0);
    let lo = covariance_at(&build(spec)?)?;
    let hi = covariance_at(&build(&ModelSpec {
        xi: spec.xi + h,
        ..*spec
    })?)?;
    Ok((hi - lo) / h)
}

/// Steady-state readout precision of mode `b` in a pair network.
pub fn steady_readout(spec: &ModelSpec) -> Result<ModeReadout> {
    if spec.topology != Topology::Pair {
        return Err(Error::InvalidSpec("steady_readout needs pair topology".into()));
    }
    let sys = build(spec)?;
    let deriv = steady_mean(&sys.sensitivity_system())?;
    let cov_at = |s: &LinearSystem| steady_covariance(&to_quadrature(s));
    let cov = cov_at(&sys)?;
    let dcov = covariance_gradient(spec, cov_at)?;
    readout(deriv[1], mode_block(&cov, 1), mode_block(&dcov, 1))
}

/// Readout precision of mode `b` at time `t` after starting in the vacuum.
pub fn transient_readout(spec: &ModelSpec, t: f64) -> Result<ModeReadout> {
    if spec.topology != Topology::Pair {
        return Err(Error::InvalidSpec("transient_readout needs pair topology".into()));
    }
    let sys = build(spec)?;
    let deriv = propagate_mean(&sys.sensitivity_system(), &DVector::zeros(sys.modes()), t)?;
    let c0 = MomentState::vacuum(sys.modes()).covariance;
    let cov_at = |s: &LinearSystem| transient_covariance(&to_quadrature(s), &c0, t);
    let cov = cov_at(&sys)?;
    let dcov = covariance_gradient(spec, cov_at)?;
    readout(deriv[1], mode_block(&cov, 1), mode_block(&dcov, 1))
}

fn with_eta(nr: &mut PrecisionReport, r: &PrecisionReport) {
    nr.eta = Some(nr.delta_xi / r.delta_xi);
}

/// Both coupling branches for the same rates, with `η` filled in.
pub fn compare_steady(spec: &ModelSpec) -> Result<(PrecisionReport, PrecisionReport)> {
    let mut nr = steady_readout(&spec.with_coupling(crate::model::Coupling::Nonreciprocal))?.report;
    let r = steady_readout(&spec.with_coupling(crate::model::Coupling::Reciprocal))?.report;
    with_eta(&mut nr, &r);
    Ok((nr, r))
}

pub fn compare_transient(spec: &ModelSpec, t: f64) -> Result<(PrecisionReport, PrecisionReport)> {
    let mut nr = transient_readout(&spec.with_coupling(crate::model::Coupling::Nonreciprocal), t)?.report;
    let r = transient_readout(&spec.with_coupling(crate::model::Coupling::Reciprocal), t)?.report;
    with_eta(&mut nr, &r);
    Ok((nr, r))
}

/// Collective-quadrature precision for a star network.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveReport {
    /// Precision with `Var(Σ q_j) = N/2`, i.e. uncorrelated vacuum readouts.
    pub report: PrecisionReport,
    /// `∂⟨Σ_j q_j⟩/∂ξ`.
    pub signal_slope: f64,
    pub assumed_variance: f64,
    /// `Var(Σ q_j)` from the full steady covariance of the network.
    pub exact_variance: f64,
    pub exact_delta_xi: f64,
}

/// Precision of the collective quadrature `Σ_j q_j` over every readout mode.
pub fn collective_precision(sys: &LinearSystem) -> Result<CollectiveReport> {
    let readouts = sys.modes() - 1;
    if readouts == 0 {
        return Err(Error::InvalidSpec(
            "collective readout needs at least one b mode".into(),
        ));
    }
    let deriv = steady_mean(&sys.sensitivity_system())?;
    let slope: f64 = (1..=readouts).map(|j| quadrature_gradient(deriv[j])[0]).sum();
    let assumed = readouts as f64 / 2.0;
    let delta_xi = error_propagation(0.0, assumed, slope)?;

    let cov = steady_covariance(&to_quadrature(sys))?;
    let exact: f64 = (1..=readouts)
        .flat_map(|j| (1..=readouts).map(move |k| (j, k)))
        .map(|(j, k)| cov[(q_index(j), q_index(k))])
        .sum();
    Ok(CollectiveReport {
        report: PrecisionReport {
            qfi: slope * slope / assumed,
            delta_xi,
            angle: std::f64::consts::FRAC_PI_2,
            eta: None,
            provenance: Provenance::Numeric,
        },
        signal_slope: slope,
        assumed_variance: assumed,
        exact_variance: exact,
        exact_delta_xi: error_propagation(0.0, exact, slope)?,
    })
}

/// Slope of the collective signal only; skips the covariance solve.
pub fn collective_assumed_precision(sys: &LinearSystem) -> Result<f64> {
    let readouts = sys.modes() - 1;
    let deriv = steady_mean(&sys.sensitivity_system())?;
    let slope: f64 = (1..=readouts).map(|j| quadrature_gradient(deriv[j])[0]).sum();
    error_propagation(0.0, readouts as f64 / 2.0, slope)
}
