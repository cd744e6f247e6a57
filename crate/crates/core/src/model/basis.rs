use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::Error;

pub type Operator = DMatrix<C64>;

/// Photon-number cutoff of the product basis.
///
/// Basis order is |g,0⟩, |g,1⟩, |e,0⟩, |e,1⟩ for `OnePhoton`; `TwoPhoton`
/// appends |g,2⟩, |e,2⟩ so the first four indices mean the same thing in
/// both truncations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Truncation {
    #[default]
    OnePhoton,
    TwoPhoton,
}

impl Truncation {
    pub fn label(self) -> &'static str {
        match self {
            Self::OnePhoton => "n1",
            Self::TwoPhoton => "n2",
        }
    }

    pub fn states(self) -> &'static [BasisState] {
        use BasisState as B;
        const N1: [BasisState; 4] = [B::new(false, 0), B::new(false, 1), B::new(true, 0), B::new(true, 1)];
        const N2: [BasisState; 6] = [
            B::new(false, 0),
            B::new(false, 1),
            B::new(true, 0),
            B::new(true, 1),
            B::new(false, 2),
            B::new(true, 2),
        ];
        match self {
            Self::OnePhoton => &N1,
            Self::TwoPhoton => &N2,
        }
    }

    pub fn dim(self) -> usize {
        self.states().len()
    }

    /// Index of |excited, n⟩, if present in this truncation.
    pub fn index(self, excited: bool, n: u32) -> Option<usize> {
        self.states()
            .iter()
            .position(|s| s.excited == excited && s.photons == n)
    }
}

impl fmt::Display for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Truncation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "n1" => Ok(Self::OnePhoton),
            "n2" => Ok(Self::TwoPhoton),
            other => Err(Error::UnknownTruncation(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisState {
    pub excited: bool,
    pub photons: u32,
}

impl BasisState {
    pub const fn new(excited: bool, photons: u32) -> Self {
        Self { excited, photons }
    }
}

/// The fixed operator set on a truncated basis.
#[derive(Debug, Clone)]
pub struct Operators {
    pub truncation: Truncation,
    pub sigma_minus: Operator,
    pub sigma_plus: Operator,
    pub a: Operator,
    pub a_dag: Operator,
    pub identity: Operator,
}

impl Operators {
    pub fn new(truncation: Truncation) -> Self {
        let states = truncation.states();
        let d = states.len();
        let mut sigma_minus = Operator::zeros(d, d);
        let mut a = Operator::zeros(d, d);
        for (col, s) in states.iter().enumerate() {
            if s.excited {
                let row = truncation.index(false, s.photons).unwrap();
                sigma_minus[(row, col)] = C64::new(1.0, 0.0);
            }
            if s.photons > 0 {
                let row = truncation.index(s.excited, s.photons - 1).unwrap();
                a[(row, col)] = C64::new((s.photons as f64).sqrt(), 0.0);
            }
        }
        Self {
            truncation,
            sigma_plus: sigma_minus.adjoint(),
            a_dag: a.adjoint(),
            sigma_minus,
            a,
            identity: Operator::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.truncation.dim()
    }

    /// σ+σ−, the excited-state projector.
    pub fn excited_projector(&self) -> Operator {
        &self.sigma_plus * &self.sigma_minus
    }

    /// a†a, built diagonally so that photon numbers are exact.
    pub fn number(&self) -> Operator {
        let photons = self.truncation.states().iter().map(|s| C64::new(s.photons as f64, 0.0));
        Operator::from_diagonal(&nalgebra::DVector::from_iterator(self.dim(), photons))
    }

    /// |i⟩⟨j| on this basis.
    pub fn ket_bra(&self, i: usize, j: usize) -> Operator {
        let d = self.dim();
        let mut m = Operator::zeros(d, d);
        m[(i, j)] = C64::new(1.0, 0.0);
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        for t in [Truncation::OnePhoton, Truncation::TwoPhoton] {
            assert_eq!(t.label().parse::<Truncation>().unwrap(), t);
        }
        assert!(matches!(
            "n3".parse::<Truncation>(),
            Err(Error::UnknownTruncation(_))
        ));
    }

    #[test]
    fn ladder_operators_act_on_basis() {
        let ops = Operators::new(Truncation::TwoPhoton);
        let t = ops.truncation;
        let g1 = t.index(false, 1).unwrap();
        let g2 = t.index(false, 2).unwrap();
        let e0 = t.index(true, 0).unwrap();
        let g0 = t.index(false, 0).unwrap();
        assert_eq!(ops.a[(g1, g2)], C64::new(2f64.sqrt(), 0.0));
        assert_eq!(ops.sigma_minus[(g0, e0)], C64::new(1.0, 0.0));
        assert_eq!(ops.sigma_plus[(e0, g0)], C64::new(1.0, 0.0));
        let n = ops.number();
        assert_eq!(n[(g2, g2)], C64::new(2.0, 0.0));
    }

    #[test]
    fn first_four_states_agree_between_truncations() {
        let a = Truncation::OnePhoton.states();
        let b = Truncation::TwoPhoton.states();
        assert_eq!(a, &b[..4]);
    }
}
