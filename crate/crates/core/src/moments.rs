//! First and second moments of the linear Langevin dynamics.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{quadrature_vector, real_spectral_abscissa, stability_margin, LinearSystem, QuadratureSystem, C64};

/// Systems whose stability margin is above this are treated as marginal and
/// have no steady state.
pub const STEADY_MARGIN: f64 = -1e-9;

const LYAPUNOV_RESIDUAL: f64 = 1e-10;

/// Mean and covariance in quadrature ordering at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    pub time: f64,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl MomentState {
    pub fn vacuum(modes: usize) -> Self {
        Self {
            time: 0.0,
            mean: DVector::zeros(2 * modes),
            covariance: DMatrix::identity(2 * modes, 2 * modes) * 0.5,
        }
    }

    pub fn modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mode_mean(&self, mode: usize) -> C64 {
        crate::model::mode_amplitude(self.mean[2 * mode], self.mean[2 * mode + 1])
    }

    /// 2×2 `(q, p)` covariance block of one mode.
    pub fn mode_covariance(&self, mode: usize) -> DMatrix<f64> {
        self.covariance.view((2 * mode, 2 * mode), (2, 2)).into_owned()
    }
}

// Padé(13) numerator coefficients for scaling and squaring.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn one_norm(m: &DMatrix<C64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(M t)` by scaling and squaring with a degree-13 Padé kernel.
///
/// No eigendecomposition is involved, so defective drifts (the nonreciprocal
/// Jordan block) are handled like any other matrix.
pub fn expm(m: &DMatrix<C64>, t: f64) -> Result<DMatrix<C64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Dimension(format!(
            "expm needs a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    if !t.is_finite() || m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("expm input is not finite".into()));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let a = m * C64::from(t);
    let norm = one_norm(&a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a * C64::from(0.5f64.powi(squarings));

    let id = DMatrix::<C64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| C64::from(PADE13[k]);

    let inner_u = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9));
    let u = &a * (inner_u + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1));
    let inner_v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8));
    let v = inner_v + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);

    let mut r = (&v - &u)
        .lu()
        .solve(&(&v + &u))
        .ok_or_else(|| Error::Numerical("Padé denominator is singular".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

pub fn expm_real(m: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    Ok(expm(&m.map(C64::from), t)?.map(|z| z.re))
}

/// Mean amplitudes at time `t` from `x0`, using one exponential of the
/// augmented generator `[[M, v], [0, 0]]` so no inverse of `M` is needed.
pub fn propagate_mean(sys: &LinearSystem, x0: &DVector<C64>, t: f64) -> Result<DVector<C64>> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let n = sys.modes();
    if x0.len() != n {
        return Err(Error::Dimension(format!(
            "initial mean has {} entries, expected {n}",
            x0.len()
        )));
    }
    let mut aug = DMatrix::<C64>::zeros(n + 1, n + 1);
    aug.view_mut((0, 0), (n, n)).copy_from(&sys.drift);
    aug.view_mut((0, n), (n, 1)).copy_from(&sys.drive);
    let e = expm(&aug, t)?;
    let prop = e.view((0, 0), (n, n));
    let forced = e.view((0, n), (n, 1));
    Ok(prop * x0 + forced)
}

fn require_stable(margin: f64) -> Result<()> {
    if margin.is_nan() || margin > STEADY_MARGIN {
        return Err(Error::Unstable { margin });
    }
    Ok(())
}

/// Fixed point of the mean dynamics, `M x = -v`.
pub fn steady_mean(sys: &LinearSystem) -> Result<DVector<C64>> {
    require_stable(stability_margin(sys))?;
    let rhs = -&sys.drive;
    let x = sys
        .drift
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("drift matrix is singular".into()))?;
    let residual = (&sys.drift * &x - &rhs).norm();
    let scale = sys.drift.norm() * x.norm() + rhs.norm();
    if residual > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Singular(format!("steady mean residual {residual:e} too large")));
    }
    Ok(x)
}

/// Solves `A X + X Aᵀ + D = 0` by Bartels–Stewart on the complex Schur form.
fn lyapunov_schur(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let ac = a.map(C64::from);
    let (q, t) = crate::model::complex_schur(&ac)?;
    let f = -(q.adjoint() * d.map(C64::from) * &q);

    // T Y + Y Tᴴ = F with T upper triangular; sweep from the bottom-right.
    let mut y = DMatrix::<C64>::zeros(n, n);
    for j in (0..n).rev() {
        for i in (0..n).rev() {
            let mut acc = f[(i, j)];
            for k in i + 1..n {
                acc -= t[(i, k)] * y[(k, j)];
            }
            for k in j + 1..n {
                acc -= y[(i, k)] * t[(j, k)].conj();
            }
            let denom = t[(i, i)] + t[(j, j)].conj();
            if denom.norm() == 0.0 {
                return Err(Error::Singular("Lyapunov operator is singular".into()));
            }
            y[(i, j)] = acc / denom;
        }
    }
    let x = (&q * y * q.adjoint()).map(|z| z.re);
    Ok((&x + x.transpose()) * 0.5)
}

pub fn lyapunov_residual(a: &DMatrix<f64>, x: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    (a * x + x * a.transpose() + d).amax()
}

/// Steady covariance: the solution of `A C + C Aᵀ + D = 0`, exactly symmetric.
pub fn steady_covariance(qsys: &QuadratureSystem) -> Result<DMatrix<f64>> {
    let a = &qsys.drift;
    let d = &qsys.diffusion;
    if a.nrows() != a.ncols() || d.shape() != a.shape() {
        return Err(Error::Dimension(
            "drift and diffusion must be square and equal-sized".into(),
        ));
    }
    require_stable(real_spectral_abscissa(a))?;
    let mut x = lyapunov_schur(a, d)?;
    // one refinement step on the residual equation
    let r = a * &x + &x * a.transpose() + d;
    x += lyapunov_schur(a, &r)?;
    let x = (&x + x.transpose()) * 0.5;

    let residual = lyapunov_residual(a, &x, d);
    let scale = 1.0f64.max(d.amax()).max(a.amax() * x.amax());
    if residual > LYAPUNOV_RESIDUAL * scale {
        return Err(Error::Numerical(format!(
            "Lyapunov residual {residual:e} exceeds tolerance"
        )));
    }
    Ok(x)
}

/// Covariance at time `t` from `c0`.
///
/// Stable systems use `C(t) = Σ + E (C0 - Σ) Eᵀ` with `Σ` the steady
/// covariance; marginal ones fall back to the Van Loan block exponential.
pub fn transient_covariance(qsys: &QuadratureSystem, c0: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let n = qsys.dim();
    if c0.shape() != (n, n) {
        return Err(Error::Dimension(format!("initial covariance must be {n}x{n}")));
    }
    let a = &qsys.drift;
    let c = if real_spectral_abscissa(a) < STEADY_MARGIN {
        let sigma = steady_covariance(qsys)?;
        let e = expm_real(a, t)?;
        &sigma + &e * (c0 - &sigma) * e.transpose()
    } else {
        let e = expm_real(a, t)?;
        &e * c0 * e.transpose() + van_loan_integral(a, &qsys.diffusion, t)?
    };
    Ok((&c + c.transpose()) * 0.5)
}

/// `∫₀ᵗ e^{As} D e^{Aᵀs} ds` from one block exponential.
pub fn van_loan_integral(a: &DMatrix<f64>, d: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut h = DMatrix::<f64>::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&(-a));
    h.view_mut((0, n), (n, n)).copy_from(d);
    h.view_mut((n, n), (n, n)).copy_from(&a.transpose());
    let f = expm_real(&h, t)?;
    let f12 = f.view((0, n), (n, n));
    let f22 = f.view((n, n), (n, n));
    Ok(f22.transpose() * f12)
}

/// Steady mean and covariance of a stable system, in quadrature form.
pub fn steady_state(sys: &LinearSystem, qsys: &QuadratureSystem) -> Result<MomentState> {
    let mean = steady_mean(sys)?;
    Ok(MomentState {
        time: f64::INFINITY,
        mean: quadrature_vector(&mean),
        covariance: steady_covariance(qsys)?,
    })
}

/// Moments at time `t` starting from the vacuum.
pub fn vacuum_evolution(sys: &LinearSystem, qsys: &QuadratureSystem, t: f64) -> Result<MomentState> {
    let start = MomentState::vacuum(sys.modes());
    let mean = propagate_mean(sys, &DVector::zeros(sys.modes()), t)?;
    Ok(MomentState {
        time: t,
        mean: quadrature_vector(&mean),
        covariance: transient_covariance(qsys, &start.covariance, t)?,
    })
}
