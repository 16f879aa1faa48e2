//! Benchmark problems and their reference oracles.

mod bryson_denham;
mod cart_pole;
mod fixtures;
mod sine;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bryson_denham::{
    bryson_denham, bryson_denham_with_bound, bryson_denham_analytic_cost, bryson_denham_fine_reference,
    BRYSON_DENHAM_BOUND,
};
pub use cart_pole::{cart_pole, cart_pole_acceleration, cart_pole_energy, constants as cart_pole_constants};
pub use fixtures::appendix_a_polynomials;
pub use sine::{sine_approximation, SineApproximation, SineMesh, SINE_FLEXIBILITY, SINE_INTERVALS};

use crate::transcription::DopDefinition;

/// Problems known to the experiment runner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    BrysonDenham,
    CartPole,
    SineApprox,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 3] = [ProblemKind::BrysonDenham, ProblemKind::CartPole, ProblemKind::SineApprox];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::BrysonDenham => "bryson-denham",
            ProblemKind::CartPole => "cart-pole",
            ProblemKind::SineApprox => "sine-approx",
        }
    }

    /// The DOP behind this problem; `None` for the function-approximation problem.
    pub fn dop(self) -> Option<DopDefinition> {
        match self {
            ProblemKind::BrysonDenham => Some(bryson_denham()),
            ProblemKind::CartPole => Some(cart_pole()),
            ProblemKind::SineApprox => None,
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown problem '{0}' (expected one of bryson-denham, cart-pole, sine-approx)")]
pub struct UnknownProblem(pub String);

impl FromStr for ProblemKind {
    type Err = UnknownProblem;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProblemKind::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| UnknownProblem(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_round_trip() {
        for p in ProblemKind::ALL {
            assert_eq!(p.name().parse::<ProblemKind>().unwrap(), p);
        }
        assert!("brachistochrone".parse::<ProblemKind>().is_err());
        assert!(ProblemKind::SineApprox.dop().is_none());
    }
}
