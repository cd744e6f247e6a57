use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::basis::{Operator, Operators, Truncation};
use super::params::SystemParams;
use crate::error::{Error, Result};

/// Operator ordering inside the two Fano cross-dissipators.
///
/// With D_{X,Y}ρ = 2YρX − XYρ − ρXY, `AsWritten` uses
/// (γF/2)·D_{a,σ+} + (γF*/2)·D_{σ−,a†}; `ExcitationConserving` swaps the
/// subscripts to (γF/2)·D_{σ+,a} + (γF*/2)·D_{a†,σ−}, the cross term of a
/// single collapse operator √γ·σ− + √κ·a. Only the latter reproduces the
/// closed-form rate eigenvalues when η > 0, hence the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FanoOrdering {
    AsWritten,
    #[default]
    ExcitationConserving,
}

impl FanoOrdering {
    pub fn label(self) -> &'static str {
        match self {
            Self::AsWritten => "as_written",
            Self::ExcitationConserving => "excitation_conserving",
        }
    }
}

impl fmt::Display for FanoOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for FanoOrdering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "as_written" => Ok(Self::AsWritten),
            "excitation_conserving" => Ok(Self::ExcitationConserving),
            other => Err(Error::UnknownOrdering(other.to_string())),
        }
    }
}

/// Model options that are not physical constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModelOptions {
    pub truncation: Truncation,
    pub fano_ordering: FanoOrdering,
}

/// Column-stacked superoperator of the master equation and its
/// Hilbert–Schmidt adjoint.
#[derive(Debug, Clone)]
pub struct LiouvillianMatrix {
    pub params: SystemParams,
    pub l: DMatrix<C64>,
    pub l_adj: DMatrix<C64>,
    pub options: ModelOptions,
}

/// Column-stacking vectorization.
pub fn vectorize(m: &Operator) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &DVector<C64>, dim: usize) -> Operator {
    Operator::from_column_slice(dim, dim, v.as_slice())
}

/// Superoperator of ρ ↦ AρB.
fn sandwich(a: &Operator, b: &Operator) -> DMatrix<C64> {
    b.transpose().kronecker(a)
}

/// Superoperator of D_{X,Y}ρ = 2YρX − XYρ − ρXY.
fn cross_dissipator(x: &Operator, y: &Operator, id: &Operator) -> DMatrix<C64> {
    let xy = x * y;
    sandwich(y, x) * C64::new(2.0, 0.0) - sandwich(&xy, id) - sandwich(id, &xy)
}

pub fn hamiltonian(params: &SystemParams, ops: &Operators) -> Operator {
    let sigma_z = &ops.sigma_plus * &ops.sigma_minus - &ops.sigma_minus * &ops.sigma_plus;
    let g = params.g();
    sigma_z * C64::new(0.5 * params.omega_21, 0.0)
        + ops.number() * C64::new(params.omega_c, 0.0)
        + &ops.sigma_plus * &ops.a * g
        + &ops.a_dag * &ops.sigma_minus * g.conj()
}

pub fn build_liouvillian(params: &SystemParams, options: ModelOptions) -> Result<LiouvillianMatrix> {
    params.validate()?;
    let eta_gk = params.eta * params.gamma * params.kappa;
    if eta_gk < 0.0 {
        return Err(Error::InvalidParameter {
            name: "eta",
            value: eta_gk,
            reason: "η·γ·κ must be non-negative",
        });
    }
    let ops = Operators::new(options.truncation);
    let id = &ops.identity;
    let h = hamiltonian(params, &ops);

    let minus_i = C64::new(0.0, -1.0);
    let mut l = (sandwich(&h, id) - sandwich(id, &h)) * minus_i;

    let half = |x: f64| C64::new(0.5 * x, 0.0);
    l += cross_dissipator(&ops.sigma_plus, &ops.sigma_minus, id) * half(params.gamma);
    l += cross_dissipator(&ops.a_dag, &ops.a, id) * half(params.kappa);
    let p = ops.excited_projector();
    l += cross_dissipator(&p, &p, id) * C64::new(params.gamma_ph, 0.0);

    let gf = params.gamma_f();
    if gf.norm_sqr() > 0.0 {
        let (first, second) = match options.fano_ordering {
            FanoOrdering::AsWritten => (
                cross_dissipator(&ops.a, &ops.sigma_plus, id),
                cross_dissipator(&ops.sigma_minus, &ops.a_dag, id),
            ),
            FanoOrdering::ExcitationConserving => (
                cross_dissipator(&ops.sigma_plus, &ops.a, id),
                cross_dissipator(&ops.a_dag, &ops.sigma_minus, id),
            ),
        };
        l += first * (gf * 0.5) + second * (gf.conj() * 0.5);
    }

    let l_adj = l.adjoint();
    Ok(LiouvillianMatrix {
        params: *params,
        l,
        l_adj,
        options,
    })
}

impl LiouvillianMatrix {
    pub fn dim(&self) -> usize {
        self.options.truncation.dim()
    }

    pub fn apply(&self, rho: &Operator) -> Operator {
        unvectorize(&(&self.l * vectorize(rho)), self.dim())
    }

    pub fn apply_adjoint(&self, x: &Operator) -> Operator {
        unvectorize(&(&self.l_adj * vectorize(x)), self.dim())
    }

    /// exp(L·dt) as a dense superoperator.
    pub fn step_propagator(&self, dt: f64) -> DMatrix<C64> {
        (&self.l * C64::new(dt, 0.0)).exp()
    }

    /// exp(L†·dt) as a dense superoperator.
    pub fn adjoint_step_propagator(&self, dt: f64) -> DMatrix<C64> {
        (&self.l_adj * C64::new(dt, 0.0)).exp()
    }
}
