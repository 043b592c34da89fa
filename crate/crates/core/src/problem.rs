//! Problem description: dimension, angular potentials, static perturbation.

use alloc::format;

use crate::angular::AngularPotential;
use crate::{Error, Result};

/// Static radial perturbation h(x) = c₀ + c₁|x|^{−2+ε}, ε ∈ (0, 2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticPerturbation {
    pub c0: f64,
    pub c1: f64,
    pub epsilon: f64,
}

impl StaticPerturbation {
    pub fn new(c0: f64, c1: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 2.0) {
            return Err(Error::invalid("epsilon", format!("{epsilon} is outside (0, 2)")));
        }
        if !c0.is_finite() || !c1.is_finite() {
            return Err(Error::invalid("h", "coefficients must be finite"));
        }
        Ok(StaticPerturbation { c0, c1, epsilon })
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.c0 + self.c1 * libm::pow(r, self.epsilon - 2.0)
    }

    pub fn is_zero(&self) -> bool {
        self.c0 == 0.0 && self.c1 == 0.0
    }

    /// λ² h(λx), the perturbation seen by u(λx, λ²t).
    pub fn rescaled(&self, lambda: f64) -> Self {
        StaticPerturbation {
            c0: self.c0 * lambda * lambda,
            c1: self.c1 * libm::pow(lambda, self.epsilon),
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub dim: usize,
    pub potential: AngularPotential,
    pub perturbation: Option<StaticPerturbation>,
    pub horizon: f64,
}

impl ProblemSpec {
    pub fn new(potential: AngularPotential, perturbation: Option<StaticPerturbation>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::invalid("horizon", "time horizon must be positive"));
        }
        Ok(ProblemSpec {
            dim: potential.dim(),
            potential,
            perturbation,
            horizon,
        })
    }

    /// Unperturbed problem (h ≡ 0).
    pub fn free(potential: AngularPotential) -> Self {
        ProblemSpec {
            dim: potential.dim(),
            potential,
            perturbation: None,
            horizon: 1.0,
        }
    }

    pub fn h(&self, r: f64) -> f64 {
        self.perturbation.map_or(0.0, |p| p.eval(r))
    }

    pub fn is_unperturbed(&self) -> bool {
        self.perturbation.is_none_or(|p| p.is_zero())
    }
}
