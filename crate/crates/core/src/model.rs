//! Declarative sensing-network models and their linear Langevin systems.
//!
//! Mode ordering is always `(a, b_1, ..., b_N)`: the driven probe mode first,
//! then the readout modes. In quadrature form every mode contributes the pair
//! `(q, p)` with `p = (b + b†)/√2` and `q = (b - b†)/(i√2)`, so a complex mode
//! amplitude maps to `⟨q⟩ = √2 Im⟨b⟩` and `⟨p⟩ = √2 Re⟨b⟩`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// One probe mode `a` and one readout mode `b`.
    Pair,
    /// One probe mode `a` coupled in parallel to `N` readout modes.
    Star(usize),
}

impl Topology {
    pub fn readout_modes(self) -> usize {
        match self {
            Topology::Pair => 1,
            Topology::Star(n) => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Coherent coupling tuned against the dissipative one so that `b` never
    /// acts back on `a`.
    Nonreciprocal,
    /// Purely coherent coupling with no shared reservoir.
    Reciprocal,
    /// Shared reservoir plus an arbitrary coherent coupling `J = re + i im`.
    Custom { re: f64, im: f64 },
}

/// Which coefficients a star network uses for the probe-row cross damping.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StarConvention {
    /// Probe row carries the aggregate cross damping `N·λ′` toward every
    /// readout mode; nonreciprocity sits at `J_p = iNλ′`. Every parallel
    /// closed form in [`crate::closedform`] follows from this choice. For
    /// `N > 1` no Lindblad generator produces these coefficients with the
    /// attached noise, and the steady covariance can violate the uncertainty
    /// relation; treat it as a signal model, not a physical state.
    #[default]
    Aggregate,
    /// Each readout mode shares its own reservoir `z_k = (a + b_k)/√2` with
    /// the probe, giving `λ′` cross damping per bath; nonreciprocity sits at
    /// `J_p = iλ′`. Always physical; no closed forms are tied to it.
    PerBath,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub topology: Topology,
    /// Local damping of every mode.
    pub kappa: f64,
    /// Effective dissipative coupling rate `λ′`.
    pub lambda_eff: f64,
    pub coupling: Coupling,
    /// Drive amplitude, the parameter to estimate.
    pub xi: f64,
    pub detuning_a: f64,
    pub detuning_b: f64,
    /// Thermal occupation of the probe's local bath.
    pub n_a: f64,
    /// Thermal occupation of each readout mode's local bath.
    pub n_b: f64,
    pub star_convention: StarConvention,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            topology: Topology::Pair,
            kappa: 1.0,
            lambda_eff: 1.0,
            coupling: Coupling::Nonreciprocal,
            xi: 1.0,
            detuning_a: 0.0,
            detuning_b: 0.0,
            n_a: 0.0,
            n_b: 0.0,
            star_convention: StarConvention::Aggregate,
        }
    }
}

impl ModelSpec {
    pub fn pair(kappa: f64, lambda_eff: f64, coupling: Coupling) -> Self {
        Self {
            kappa,
            lambda_eff,
            coupling,
            ..Self::default()
        }
    }

    pub fn star(n: usize, kappa: f64, lambda_eff: f64, coupling: Coupling) -> Self {
        Self {
            topology: Topology::Star(n),
            kappa,
            lambda_eff,
            coupling,
            ..Self::default()
        }
    }

    pub fn with_coupling(self, coupling: Coupling) -> Self {
        Self { coupling, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("kappa", self.kappa),
            ("lambda_eff", self.lambda_eff),
            ("xi", self.xi),
            ("n_a", self.n_a),
            ("n_b", self.n_b),
        ];
        for (name, value) in nonneg {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "{name} must be finite and non-negative, got {value}"
                )));
            }
        }
        for (name, value) in [("detuning_a", self.detuning_a), ("detuning_b", self.detuning_b)] {
            if !value.is_finite() {
                return Err(Error::InvalidSpec(format!("{name} must be finite, got {value}")));
            }
        }
        if let Coupling::Custom { re, im } = self.coupling {
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::InvalidSpec("custom coupling must be finite".into()));
            }
        }
        if let Topology::Star(0) = self.topology {
            return Err(Error::InvalidSpec(
                "star topology needs at least one readout mode".into(),
            ));
        }
        Ok(())
    }
}

/// Complex-mode Langevin system `dA/dt = M A + v + L c_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub drift: DMatrix<C64>,
    pub drive: DVector<C64>,
    /// `∂v/∂ξ`; the drive is affine in the estimated amplitude.
    pub drive_gradient: DVector<C64>,
    pub input_matrix: DMatrix<C64>,
    /// One occupation per column of `input_matrix`.
    pub bath_occupations: Vec<f64>,
}

impl LinearSystem {
    pub fn new(
        drift: DMatrix<C64>,
        drive: DVector<C64>,
        drive_gradient: DVector<C64>,
        input_matrix: DMatrix<C64>,
        bath_occupations: Vec<f64>,
    ) -> Result<Self> {
        let n = drift.nrows();
        if drift.ncols() != n {
            return Err(Error::Dimension("drift must be square".into()));
        }
        if drive.len() != n || drive_gradient.len() != n || input_matrix.nrows() != n {
            return Err(Error::Dimension(format!("expected {n} mode rows")));
        }
        if input_matrix.ncols() != bath_occupations.len() {
            return Err(Error::Dimension(
                "one occupation per bath input column is required".into(),
            ));
        }
        if bath_occupations.iter().any(|n| !n.is_finite() || *n < 0.0) {
            return Err(Error::InvalidSpec("bath occupations must be non-negative".into()));
        }
        Ok(Self {
            drift,
            drive,
            drive_gradient,
            input_matrix,
            bath_occupations,
        })
    }

    pub fn modes(&self) -> usize {
        self.drift.nrows()
    }

    /// Same dynamics with the drive replaced by its `ξ`-gradient. Means of this
    /// system are the derivatives of the original means with respect to `ξ`.
    pub fn sensitivity_system(&self) -> Self {
        Self {
            drive: self.drive_gradient.clone(),
            ..self.clone()
        }
    }
}

/// Real quadrature form, ordered `(q_a, p_a, q_b1, p_b1, ...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSystem {
    pub drift: DMatrix<f64>,
    pub diffusion: DMatrix<f64>,
    pub drive: DVector<f64>,
    pub drive_gradient: DVector<f64>,
}

impl QuadratureSystem {
    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }
}

pub fn q_index(mode: usize) -> usize {
    2 * mode
}

pub fn p_index(mode: usize) -> usize {
    2 * mode + 1
}

pub fn build(spec: &ModelSpec) -> Result<LinearSystem> {
    match spec.topology {
        Topology::Pair => build_pair(spec),
        Topology::Star(_) => build_star(spec),
    }
}

pub fn build_pair(spec: &ModelSpec) -> Result<LinearSystem> {
    if spec.topology != Topology::Pair {
        return Err(Error::InvalidSpec("build_pair needs pair topology".into()));
    }
    spec.validate()?;
    assemble(spec, 1)
}

pub fn build_star(spec: &ModelSpec) -> Result<LinearSystem> {
    let Topology::Star(n) = spec.topology else {
        return Err(Error::InvalidSpec("build_star needs star topology".into()));
    };
    spec.validate()?;
    assemble(spec, n)
}

fn assemble(spec: &ModelSpec, readouts: usize) -> Result<LinearSystem> {
    let dim = readouts + 1;
    let kappa = spec.kappa;
    let lam = spec.lambda_eff;
    let nf = readouts as f64;
    let det_a = C64::new(0.0, spec.detuning_a);
    let det_b = C64::new(0.0, spec.detuning_b);

    let mut drift = DMatrix::<C64>::zeros(dim, dim);
    let local = (2.0 * kappa).sqrt();

    let (input_matrix, occupations) = match spec.coupling {
        Coupling::Reciprocal => {
            let jp = match spec.star_convention {
                StarConvention::Aggregate => C64::new(0.0, nf * lam),
                StarConvention::PerBath => C64::new(0.0, lam),
            };
            drift[(0, 0)] = -kappa - det_a;
            for j in 1..dim {
                drift[(j, j)] = -kappa - det_b;
                drift[(0, j)] = -I * jp;
                drift[(j, 0)] = -I * jp.conj();
            }
            let mut l = DMatrix::<C64>::zeros(dim, dim);
            for j in 0..dim {
                l[(j, j)] = C64::from(local);
            }
            let mut occ = vec![spec.n_b; dim];
            occ[0] = spec.n_a;
            (l, occ)
        }
        Coupling::Nonreciprocal | Coupling::Custom { .. } => {
            let (jp, probe_cross) = match (spec.coupling, spec.star_convention) {
                (Coupling::Custom { re, im }, StarConvention::Aggregate) => (C64::new(re, im), nf * lam),
                (Coupling::Custom { re, im }, StarConvention::PerBath) => (C64::new(re, im), lam),
                (_, StarConvention::Aggregate) => (C64::new(0.0, nf * lam), nf * lam),
                (_, StarConvention::PerBath) => (C64::new(0.0, lam), lam),
            };
            drift[(0, 0)] = -(kappa + nf * lam) - det_a;
            for j in 1..dim {
                drift[(j, j)] = -(kappa + lam) - det_b;
                drift[(0, j)] = -(probe_cross + I * jp);
                drift[(j, 0)] = -(lam + I * jp.conj());
            }
            // columns: local a, local b_1..b_N, shared z_1..z_N
            let mut l = DMatrix::<C64>::zeros(dim, dim + readouts);
            for j in 0..dim {
                l[(j, j)] = C64::from(local);
            }
            let shared = C64::from((2.0 * lam).sqrt());
            for k in 0..readouts {
                l[(0, dim + k)] = shared;
                l[(k + 1, dim + k)] = shared;
            }
            let mut occ = vec![spec.n_b; dim + readouts];
            occ[0] = spec.n_a;
            for o in occ.iter_mut().skip(dim) {
                *o = 0.0;
            }
            (l, occ)
        }
    };

    let mut drive_gradient = DVector::<C64>::zeros(dim);
    drive_gradient[0] = -I;
    let drive = drive_gradient.map(|g| g * spec.xi);
    LinearSystem::new(drift, drive, drive_gradient, input_matrix, occupations)
}

/// Real 2×2 image of a complex coefficient acting on `(q, p)`.
fn real_block(m: C64) -> [[f64; 2]; 2] {
    [[m.re, m.im], [-m.im, m.re]]
}

/// Quadrature image `(q, p)` of a complex mode amplitude.
pub fn to_quadrature_pair(z: C64) -> (f64, f64) {
    (SQRT_2 * z.im, SQRT_2 * z.re)
}

pub fn mode_amplitude(q: f64, p: f64) -> C64 {
    C64::new(p, q) / SQRT_2
}

pub fn quadrature_vector(modes: &DVector<C64>) -> DVector<f64> {
    let mut out = DVector::zeros(2 * modes.len());
    for (j, z) in modes.iter().enumerate() {
        let (q, p) = to_quadrature_pair(*z);
        out[q_index(j)] = q;
        out[p_index(j)] = p;
    }
    out
}

pub fn mode_vector(quads: &DVector<f64>) -> DVector<C64> {
    DVector::from_iterator(
        quads.len() / 2,
        (0..quads.len() / 2).map(|j| mode_amplitude(quads[q_index(j)], quads[p_index(j)])),
    )
}

/// Real representation of a complex Langevin system.
///
/// Each bath input `c = (X_p + i X_q)/√2` carries symmetrized quadrature noise
/// of strength `n + 1/2`, so the diffusion is
/// `D = Σ_ℓ (n_ℓ + 1/2) B_ℓ B_ℓᵀ` with `B_ℓ` the real image of input column ℓ.
pub fn to_quadrature(sys: &LinearSystem) -> QuadratureSystem {
    let n = sys.modes();
    let dim = 2 * n;
    let mut drift = DMatrix::<f64>::zeros(dim, dim);
    for r in 0..n {
        for c in 0..n {
            let b = real_block(sys.drift[(r, c)]);
            for (i, row) in b.iter().enumerate() {
                for (k, v) in row.iter().enumerate() {
                    drift[(2 * r + i, 2 * c + k)] = *v;
                }
            }
        }
    }

    let mut diffusion = DMatrix::<f64>::zeros(dim, dim);
    for (col, occ) in sys.bath_occupations.iter().enumerate() {
        let mut image = DMatrix::<f64>::zeros(dim, 2);
        for r in 0..n {
            let b = real_block(sys.input_matrix[(r, col)]);
            for (i, row) in b.iter().enumerate() {
                for (k, v) in row.iter().enumerate() {
                    image[(2 * r + i, k)] = *v;
                }
            }
        }
        diffusion += (image.clone() * image.transpose()) * (occ + 0.5);
    }
    diffusion = (&diffusion + diffusion.transpose()) * 0.5;

    QuadratureSystem {
        drift,
        diffusion,
        drive: quadrature_vector(&sys.drive),
        drive_gradient: quadrature_vector(&sys.drive_gradient),
    }
}

/// Complex Schur form `(Q, T)` with `M = Q T Q†`.
///
/// Highly defective drifts (the star network is one Jordan chain away from
/// nilpotent) can stall deflation at machine precision, so the deflation
/// threshold is relaxed stepwise up to `1e-12`.
pub(crate) fn complex_schur(m: &DMatrix<C64>) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let mut eps = f64::EPSILON;
    while eps <= 1e-12 {
        if let Some(schur) = nalgebra::linalg::Schur::try_new(m.clone(), eps, 10_000) {
            return Ok(schur.unpack());
        }
        eps *= 8.0;
    }
    Err(Error::Numerical("Schur decomposition did not converge".into()))
}

/// Eigenvalues of a complex matrix via its Schur form.
pub fn eigenvalues(m: &DMatrix<C64>) -> Result<Vec<C64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension("eigenvalues need a square matrix".into()));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let (_, t) = complex_schur(m)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Largest real part of the drift spectrum; negative means stable.
pub fn stability_margin(sys: &LinearSystem) -> f64 {
    spectral_abscissa(&sys.drift)
}

pub fn spectral_abscissa(m: &DMatrix<C64>) -> f64 {
    match eigenvalues(m) {
        Ok(eigs) => eigs.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max),
        Err(_) => f64::NAN,
    }
}

pub fn real_spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    spectral_abscissa(&m.map(C64::from))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn nonreciprocal_pair_drift() {
        let sys = build_pair(&ModelSpec::pair(1.0, 1.0, Coupling::Nonreciprocal)).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[c(-2., 0.), c(0., 0.), c(-2., 0.), c(-2., 0.)]);
        assert_eq!(sys.drift, expected);
        assert_eq!(sys.drift[(0, 1)], c(0.0, 0.0));
        assert_eq!(sys.drive, DVector::from_vec(vec![c(0., -1.), c(0., 0.)]));
    }

    #[test]
    fn reciprocal_pair_drift() {
        let sys = build_pair(&ModelSpec::pair(1.0, 1.0, Coupling::Reciprocal)).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[c(-1., 0.), c(1., 0.), c(-1., 0.), c(-1., 0.)]);
        assert_eq!(sys.drift, expected);
        assert_eq!(sys.input_matrix.ncols(), 2);
    }

    #[test]
    fn detuned_nonreciprocal_pair() {
        let spec = ModelSpec {
            detuning_a: 0.5,
            detuning_b: 0.5,
            ..ModelSpec::pair(1.0, 2.0, Coupling::Nonreciprocal)
        };
        let sys = build_pair(&spec).unwrap();
        assert_eq!(sys.drift[(0, 0)], c(-3.0, -0.5));
        assert_eq!(sys.drift[(1, 1)], c(-3.0, -0.5));
        assert_eq!(sys.drift[(1, 0)], c(-4.0, 0.0));
        assert_eq!(sys.drift[(0, 1)], c(0.0, 0.0));
    }

    #[test]
    fn star_three_nonreciprocal() {
        let sys = build_star(&ModelSpec::star(3, 1.0, 1.0, Coupling::Nonreciprocal)).unwrap();
        assert_eq!(sys.drift[(0, 0)], c(-4.0, 0.0));
        for j in 1..4 {
            assert_eq!(sys.drift[(0, j)], c(0.0, 0.0));
            assert_eq!(sys.drift[(j, 0)], c(-4.0, 0.0));
            assert_eq!(sys.drift[(j, j)], c(-2.0, 0.0));
        }
    }

    #[test]
    fn star_two_reciprocal() {
        let sys = build_star(&ModelSpec::star(2, 1.0, 1.0, Coupling::Reciprocal)).unwrap();
        for j in 1..3 {
            assert_eq!(sys.drift[(0, j)], c(2.0, 0.0));
            assert_eq!(sys.drift[(j, 0)], c(-2.0, 0.0));
            assert_eq!(sys.drift[(j, j)], c(-1.0, 0.0));
        }
        assert_eq!(sys.drift[(0, 0)], c(-1.0, 0.0));
    }

    #[test]
    fn per_bath_star_is_nonreciprocal_at_single_rate() {
        let spec = ModelSpec {
            star_convention: StarConvention::PerBath,
            ..ModelSpec::star(3, 1.0, 1.0, Coupling::Nonreciprocal)
        };
        let sys = build_star(&spec).unwrap();
        assert_eq!(sys.drift[(0, 0)], c(-4.0, 0.0));
        for j in 1..4 {
            assert_eq!(sys.drift[(0, j)], c(0.0, 0.0));
            assert_eq!(sys.drift[(j, 0)], c(-2.0, 0.0));
        }
    }

    #[test]
    fn star_one_matches_pair() {
        for coupling in [
            Coupling::Nonreciprocal,
            Coupling::Reciprocal,
            Coupling::Custom { re: 0.3, im: -0.2 },
        ] {
            for conv in [StarConvention::Aggregate, StarConvention::PerBath] {
                let base = ModelSpec {
                    detuning_a: 0.3,
                    detuning_b: -0.7,
                    n_a: 0.4,
                    n_b: 1.1,
                    star_convention: conv,
                    ..ModelSpec::pair(0.8, 1.3, coupling)
                };
                let pair = build_pair(&base).unwrap();
                let star = build_star(&ModelSpec {
                    topology: Topology::Star(1),
                    ..base
                })
                .unwrap();
                assert_eq!(pair, star);
            }
        }
    }

    #[test]
    fn rejects_invalid_specs() {
        let bad = [
            ModelSpec {
                kappa: -1.0,
                ..ModelSpec::default()
            },
            ModelSpec {
                lambda_eff: -0.1,
                ..ModelSpec::default()
            },
            ModelSpec {
                xi: -2.0,
                ..ModelSpec::default()
            },
            ModelSpec {
                n_a: -1e-3,
                ..ModelSpec::default()
            },
            ModelSpec {
                n_b: f64::NAN,
                ..ModelSpec::default()
            },
            ModelSpec {
                topology: Topology::Star(0),
                ..ModelSpec::default()
            },
        ];
        for spec in bad {
            assert!(matches!(build(&spec), Err(Error::InvalidSpec(_))), "{spec:?}");
        }
        assert!(build_star(&ModelSpec::default()).is_err());
        assert!(build_pair(&ModelSpec::star(2, 1.0, 1.0, Coupling::Reciprocal)).is_err());
    }

    #[test]
    fn vacuum_pair_diffusion() {
        let sys = build_pair(&ModelSpec::pair(1.0, 1.0, Coupling::Nonreciprocal)).unwrap();
        let q = to_quadrature(&sys);
        for i in 0..4 {
            assert_abs_diff_eq!(q.diffusion[(i, i)], 2.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(q.diffusion[(0, 2)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.diffusion[(1, 3)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.diffusion[(0, 3)], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.diffusion[(0, 1)], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn quadrature_drift_blocks() {
        let spec = ModelSpec {
            detuning_a: 0.5,
            ..ModelSpec::pair(1.0, 1.0, Coupling::Reciprocal)
        };
        let q = to_quadrature(&build_pair(&spec).unwrap());
        // entry -1 - 0.5i on (a, a)
        assert_eq!(q.drift[(0, 0)], -1.0);
        assert_eq!(q.drift[(0, 1)], -0.5);
        assert_eq!(q.drift[(1, 0)], 0.5);
        assert_eq!(q.drift[(1, 1)], -1.0);
        // drive -iξ: ⟨q⟩ component -√2 ξ
        assert_abs_diff_eq!(q.drive[0], -SQRT_2, epsilon = 1e-15);
        assert_eq!(q.drive[1], 0.0);
    }

    #[test]
    fn quadrature_round_trip() {
        let z = DVector::from_vec(vec![c(0.3, -1.2), c(-2.0, 0.25)]);
        let back = mode_vector(&quadrature_vector(&z));
        for (a, b) in z.iter().zip(back.iter()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn stability_margins() {
        let nr = build_pair(&ModelSpec::pair(1.0, 1.0, Coupling::Nonreciprocal)).unwrap();
        assert_abs_diff_eq!(stability_margin(&nr), -2.0, epsilon = 1e-7);
        let r = build_pair(&ModelSpec::pair(1.0, 1.0, Coupling::Reciprocal)).unwrap();
        assert_abs_diff_eq!(stability_margin(&r), -1.0, epsilon = 1e-12);
        let zero = build_pair(&ModelSpec::pair(0.0, 0.0, Coupling::Nonreciprocal)).unwrap();
        assert_eq!(stability_margin(&zero), 0.0);
    }

    #[test]
    fn xi_only_moves_the_drive() {
        let a = build_pair(&ModelSpec {
            xi: 0.2,
            ..ModelSpec::default()
        })
        .unwrap();
        let b = build_pair(&ModelSpec {
            xi: 7.5,
            ..ModelSpec::default()
        })
        .unwrap();
        assert_eq!(a.drift, b.drift);
        assert_eq!(a.input_matrix, b.input_matrix);
        assert_eq!(a.bath_occupations, b.bath_occupations);
        assert_eq!(to_quadrature(&a).diffusion, to_quadrature(&b).diffusion);
        assert_ne!(a.drive, b.drive);
    }
}
