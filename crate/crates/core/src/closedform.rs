//! Analytic precision formulas for the resonant, transient, parallel, detuned
//! and thermal scenarios.
//!
//! These are comparison targets. They are kept exactly as published,
//! including their inconsistencies; the numeric pipeline in
//! [`crate::fisher`] is the reference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the bare dissipative rate `λ` in the thermal formulas relates to the
/// effective rate `λ′`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaReading {
    /// `λ = λ′`. The only reading under which the equal-temperature factor
    /// and its closed-form deviation from one agree algebraically.
    #[default]
    Effective,
    /// `λ = √2·λ′`, the literal relation between the two rates.
    Sqrt2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FormulaInputs {
    pub kappa: f64,
    pub lambda_eff: f64,
    pub xi: f64,
    pub t: f64,
    pub n: usize,
    /// Common detuning `Δ_a = Δ_b = Δ`.
    pub delta: f64,
    /// Opposite detuning `Δ_a = -Δ_b = Δ′`.
    pub delta_prime: f64,
    pub n_a: f64,
    pub n_b: f64,
    pub lambda_reading: LambdaReading,
}

impl Default for FormulaInputs {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            lambda_eff: 1.0,
            xi: 1.0,
            t: 0.0,
            n: 1,
            delta: 0.0,
            delta_prime: 0.0,
            n_a: 0.0,
            n_b: 0.0,
            lambda_reading: LambdaReading::Effective,
        }
    }
}

impl FormulaInputs {
    pub fn rates(kappa: f64, lambda_eff: f64) -> Self {
        Self {
            kappa,
            lambda_eff,
            ..Self::default()
        }
    }

    /// Fill `n_a`, `n_b` from bath temperatures at mode frequency `omega`.
    pub fn with_temperatures(self, omega: f64, temp_a: f64, temp_b: f64) -> Result<Self> {
        Ok(Self {
            n_a: bose_n(omega, temp_a)?,
            n_b: bose_n(omega, temp_b)?,
            ..self
        })
    }

    pub fn bare_lambda(&self) -> f64 {
        match self.lambda_reading {
            LambdaReading::Effective => self.lambda_eff,
            LambdaReading::Sqrt2 => std::f64::consts::SQRT_2 * self.lambda_eff,
        }
    }

    fn check(&self) -> Result<()> {
        for (name, v) in [
            ("kappa", self.kappa),
            ("lambda_eff", self.lambda_eff),
            ("n_a", self.n_a),
            ("n_b", self.n_b),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidSpec(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.n == 0 {
            return Err(Error::InvalidSpec("N must be at least 1".into()));
        }
        Ok(())
    }

    fn require_coupling(&self) -> Result<()> {
        self.check()?;
        if self.lambda_eff <= 0.0 {
            return Err(Error::UndefinedPrecision(
                "λ′ = 0 gives no signal at the readout".into(),
            ));
        }
        Ok(())
    }
}

/// Bose–Einstein occupation `1/(exp(ω/T) - 1)`.
pub fn bose_n(omega: f64, temp: f64) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "mode frequency must be positive, got {omega}"
        )));
    }
    if !(temp >= 0.0) {
        return Err(Error::InvalidSpec(format!(
            "temperature must be non-negative, got {temp}"
        )));
    }
    if temp == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (omega / temp).exp_m1())
}

/// Nonreciprocal and reciprocal precisions with their ratio `η = δξ_nr/δξ_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Precisions {
    pub nonreciprocal: f64,
    pub reciprocal: f64,
    pub eta: f64,
}

impl Precisions {
    fn new(nonreciprocal: f64, reciprocal: f64) -> Self {
        Self {
            nonreciprocal,
            reciprocal,
            eta: nonreciprocal / reciprocal,
        }
    }

    /// Precision gain of the nonreciprocal scheme, `1/η`.
    pub fn improvement(&self) -> f64 {
        1.0 / self.eta
    }
}

/// Resonant steady state of the two-mode network.
pub fn pair_steady(inp: &FormulaInputs) -> Result<Precisions> {
    inp.require_coupling()?;
    let (k, l) = (inp.kappa, inp.lambda_eff);
    Ok(Precisions::new(
        (k + l).powi(2) / (4.0 * l),
        (k * k + l * l) / (2.0 * l),
    ))
}

/// The steady ratio written directly, `(κ+λ′)² / 2(κ²+λ′²)`.
pub fn pair_eta(kappa: f64, lambda_eff: f64) -> f64 {
    (kappa + lambda_eff).powi(2) / (2.0 * (kappa * kappa + lambda_eff * lambda_eff))
}

/// Resonant precisions at time `t` after starting from the vacuum.
pub fn pair_transient(inp: &FormulaInputs) -> Result<Precisions> {
    inp.require_coupling()?;
    let (k, l, t) = (inp.kappa, inp.lambda_eff, inp.t);
    if !(t > 0.0) {
        return Err(Error::UndefinedPrecision(format!("no signal has built up at t = {t}")));
    }
    let s = (k + l) * t;
    // 1 - e^{-s}(1 + s), written to survive small s
    let nr_fill = -(-s).exp_m1() - s * (-s).exp();
    // e^{-κt}[e^{κt}λ′ - λ′cos λ′t - κ sin λ′t] with the exponentials combined
    let r_fill = l - (-k * t).exp() * (l * (l * t).cos() + k * (l * t).sin());
    if !(nr_fill > 0.0) || !(r_fill > 0.0) {
        return Err(Error::UndefinedPrecision(format!(
            "signal slope vanishes at t = {t} (nonreciprocal {nr_fill:e}, reciprocal {r_fill:e})"
        )));
    }
    Ok(Precisions::new(
        (k + l).powi(2) / (4.0 * l * nr_fill),
        (k * k + l * l) / (2.0 * r_fill),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParallelForms {
    pub precisions: Precisions,
    /// `(κ+λ′)/(N(N+1)λ′)`, the large-`N`, weak-damping form.
    pub eta_weak_damping: f64,
    /// `1/N²`.
    pub eta_large_n: f64,
    /// `2N/(N³+1)`, exact at `κ = λ′`.
    pub eta_equal_rates: f64,
    /// `N/(N+1)`, the strong-damping limit.
    pub eta_strong_damping: f64,
}

/// One probe read out through `N` parallel couplings with the collective
/// quadrature `Σ_j q_j`.
pub fn parallel(inp: &FormulaInputs) -> Result<ParallelForms> {
    inp.require_coupling()?;
    let (k, l) = (inp.kappa, inp.lambda_eff);
    let n = inp.n as f64;
    let sqrt_n = n.sqrt();
    let nr = (k + l) * (k + n * l) / (2.0 * sqrt_n * l * (n + 1.0));
    let r = (k * k + n.powi(3) * l * l) / (2.0 * sqrt_n * n * l);
    let eta = n * (k + l) * (k + n * l) / ((n + 1.0) * (k * k + n.powi(3) * l * l));
    Ok(ParallelForms {
        precisions: Precisions {
            nonreciprocal: nr,
            reciprocal: r,
            eta,
        },
        eta_weak_damping: (k + l) / (n * (n + 1.0) * l),
        eta_large_n: 1.0 / (n * n),
        eta_equal_rates: 2.0 * n / (n.powi(3) + 1.0),
        eta_strong_damping: n / (n + 1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetuningBranch {
    /// `Δ_a = Δ_b = Δ`, from [`FormulaInputs::delta`].
    Equal,
    /// `Δ_a = -Δ_b = Δ′`, from [`FormulaInputs::delta_prime`].
    Opposite,
}

/// Steady precisions for a drive detuned from both modes.
pub fn detuned(inp: &FormulaInputs, branch: DetuningBranch) -> Result<Precisions> {
    inp.require_coupling()?;
    let (k, l) = (inp.kappa, inp.lambda_eff);
    Ok(match branch {
        DetuningBranch::Equal => {
            let d = inp.delta;
            let nr = ((k + l).powi(2) + d * d) / (4.0 * l);
            let r = ((k * k + (l - d).powi(2)) * (k * k + (l + d).powi(2))).sqrt() / (2.0 * l);
            let eta =
                ((k + l).powi(2) + d * d) / (2.0 * ((k * k + (l - d).powi(2)) * (k * k + (l + d).powi(2))).sqrt());
            Precisions {
                nonreciprocal: nr,
                reciprocal: r,
                eta,
            }
        }
        DetuningBranch::Opposite => {
            let d = inp.delta_prime;
            let nr = ((k + l).powi(2) + d * d) / (4.0 * l);
            let r = (k * k + l * l + d * d) / (2.0 * l);
            let eta = ((k + l).powi(2) + d * d) / (2.0 * (k * k + l * l + d * d));
            Precisions {
                nonreciprocal: nr,
                reciprocal: r,
                eta,
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalForms {
    pub precisions: Precisions,
    /// Thermal factor `μ = η / η_vacuum` implied by the two precisions.
    pub mu: f64,
    /// Closed-form `μ` for equal bath temperatures; `None` when `n_a ≠ n_b`.
    pub mu_equal_temperature: Option<f64>,
    /// Closed-form `μ - 1` for equal bath temperatures.
    pub mu_minus_one: Option<f64>,
    /// Two-temperature `μ` as published. Its reciprocal bracket carries an
    /// extra factor 1/2 relative to the reciprocal precision, so it does not
    /// reduce to `mu`.
    pub mu_two_temperature: f64,
    /// Added readout excitation `⟨δb†δb⟩` claimed for the nonreciprocal branch.
    pub excess_nonreciprocal: f64,
    /// Added readout excitation claimed for the reciprocal branch.
    pub excess_reciprocal: f64,
}

/// Precisions with thermal local baths, verbatim under the selected
/// [`LambdaReading`].
pub fn thermal(inp: &FormulaInputs) -> Result<ThermalForms> {
    inp.require_coupling()?;
    let (k, lp) = (inp.kappa, inp.lambda_eff);
    let lam = inp.bare_lambda();
    let (na, nb) = (inp.n_a, inp.n_b);

    let cube = (k + lam).powi(3);
    let nr_bracket = (4.0 * na * k * lam * lam + 2.0 * nb * k * (k + lp).powi(2)) / cube;
    let r_bracket = (na * lam * lam + nb * (2.0 * k * k + lam * lam)) / (k * k + lp * lp);

    let nr = (k + lp).powi(2) / (4.0 * lp) * (1.0 + nr_bracket);
    let r = (k * k + lp * lp) / (2.0 * lp) * (1.0 + r_bracket);
    let precisions = Precisions::new(nr, r);
    let mu = precisions.eta / pair_eta(k, lp);

    let (mu_eq, mu_m1) = if na == nb {
        let n = na;
        let eq = (cube + 4.0 * n * k * lam * lam + 2.0 * n * k * (k + lp).powi(2)) / ((1.0 + 2.0 * n) * cube);
        let m1 = -2.0 * n * lam * (k * k + lam * lam) / ((1.0 + 2.0 * n) * cube);
        (Some(eq), Some(m1))
    } else {
        (None, None)
    };

    let two_temp =
        (1.0 + nr_bracket) / (1.0 + (na * lam * lam + nb * (2.0 * k * k + lam * lam)) / (2.0 * (k * k + lp * lp)));

    Ok(ThermalForms {
        precisions,
        mu,
        mu_equal_temperature: mu_eq,
        mu_minus_one: mu_m1,
        mu_two_temperature: two_temp,
        excess_nonreciprocal: (2.0 * na * k * lam * lam + nb * k * (k + lp).powi(2)) / cube,
        excess_reciprocal: (na * lam * lam + nb * (2.0 * k * k + lam * lam)) / (2.0 * (k * k + lp * lp)),
    })
}
