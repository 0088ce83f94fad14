//! Parameter records and the convention switches that resolve notational
//! ambiguities in the model equations.

use crate::error::{Error, Result};

/// Thermal state of the bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Thermal {
    /// Full quantum weight coth(beta*w/2).
    Quantum { beta: f64 },
    /// High-temperature weight 2/(beta*w) ("infinite temperature" mode).
    Classical { beta: f64 },
    /// beta -> infinity, weight 1.
    Zero,
}

impl Thermal {
    pub fn beta(&self) -> f64 {
        match *self {
            Thermal::Quantum { beta } | Thermal::Classical { beta } => beta,
            Thermal::Zero => f64::INFINITY,
        }
    }

    /// Thermal weight multiplying J(w) in the noise kernel.
    pub fn weight(&self, w: f64) -> f64 {
        match *self {
            Thermal::Quantum { beta } => {
                let x = 0.5 * beta * w;
                if x < 1e-4 {
                    (1.0 + x * x / 3.0) / x
                } else {
                    1.0 / x.tanh()
                }
            }
            Thermal::Classical { beta } => 2.0 / (beta * w),
            Thermal::Zero => 1.0,
        }
    }
}

/// Bath spectral family J(w) = (2 m gamma / pi) w (w/Omega)^(s-1) exp(-w^2/Omega^2)
/// together with the system mass and bare frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensityParams {
    pub s: f64,
    pub gamma: f64,
    pub cutoff: f64,
    pub m: f64,
    pub omega_s: f64,
    pub thermal: Thermal,
}

impl SpectralDensityParams {
    /// Ohmic-family bath in natural units (m = omega_S = 1).
    pub fn natural(s: f64, gamma: f64, cutoff: f64, thermal: Thermal) -> Self {
        Self { s, gamma, cutoff, m: 1.0, omega_s: 1.0, thermal }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| Err(Error::InvalidParameter { name, reason: reason.to_string() });
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(Error::NonIntegrableKernel { s: self.s });
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad("gamma", "must be finite and >= 0");
        }
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return bad("Omega", "must be finite and > 0");
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return bad("m", "must be finite and > 0");
        }
        if !(self.omega_s > 0.0 && self.omega_s.is_finite()) {
            return bad("omega_S", "must be finite and > 0");
        }
        match self.thermal {
            Thermal::Quantum { beta } | Thermal::Classical { beta } => {
                if !(beta > 0.0 && beta.is_finite()) {
                    return bad("beta", "must be finite and > 0 (use Zero for T = 0)");
                }
            }
            Thermal::Zero => {}
        }
        Ok(())
    }

    /// Integer Ohmicity, if s is one.
    pub(crate) fn integer_s(&self) -> Option<usize> {
        let r = self.s.round();
        ((self.s - r).abs() < 1e-12 && r >= 1.0).then_some(r as usize)
    }

    /// Upper frequency beyond which J is negligible (< e^-49 relative).
    pub(crate) fn omega_top(&self) -> f64 {
        self.cutoff * (6.5 + 0.5 * self.s)
    }
}

/// Which frequency the undecorated "omega" of the propagators, effective
/// mass and drift coefficients refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrequencyConvention {
    /// The renormalized omega_R that also enters the memory equation for G.
    #[default]
    Renormalized,
    /// The bare omega_S.
    Bare,
}

/// Sign of the dissipation kernel D^Im.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DissipationSign {
    /// D^Im(t) = -int J(w) sin(wt) dw.
    #[default]
    AsPrinted,
    /// D^Im(t) = +int J(w) sin(wt) dw.
    Flipped,
}

/// Kernel and weights of the bath double integrals g1, g2, g3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseKernel {
    /// Real, even D^Re with weights 1/2, 1/2, 1.
    #[default]
    Symmetrized,
    /// Odd D^Im with weights 1/4, 1/4, 1/2.
    AsPrinted,
}

/// Formulas used for the drift and diffusion functions K1..K5 and Theta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoefficientForm {
    /// Forms consistent with the exact Heisenberg propagators.
    #[default]
    Derived,
    /// Literal transcription of the published K1, K4 and Theta.
    AsPrinted,
}

/// Complete switch set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Switches {
    pub frequency: FrequencyConvention,
    pub sign: DissipationSign,
    pub noise: NoiseKernel,
    pub form: CoefficientForm,
}

macro_rules! impl_switch_names {
    ($t:ty, $($v:ident => $s:literal),+) => {
        impl $t {
            pub fn name(&self) -> &'static str {
                match self { $(Self::$v => $s),+ }
            }
            pub fn parse(s: &str) -> Option<Self> {
                match s { $($s => Some(Self::$v),)+ _ => None }
            }
            pub const ALL: &'static [Self] = &[$(Self::$v),+];
        }
        impl std::fmt::Display for $t {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

impl_switch_names!(FrequencyConvention, Renormalized => "omega_r", Bare => "omega_s");
impl_switch_names!(DissipationSign, AsPrinted => "minus", Flipped => "plus");
impl_switch_names!(NoiseKernel, Symmetrized => "dre", AsPrinted => "dim");
impl_switch_names!(CoefficientForm, Derived => "derived", AsPrinted => "printed");
