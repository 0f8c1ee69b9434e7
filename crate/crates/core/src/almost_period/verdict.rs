use serde::{Deserialize, Serialize};

use crate::dynamics::{iterate, EscapeWitness, System};
use crate::error::{Error, Result};
use crate::metric_core::Point;

/// Tolerance used when a stored witness is re-evaluated.
pub const REPLAY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Certified,
    Refuted,
    Inconclusive,
}

impl Status {
    pub fn contradicts(self, other: Status) -> bool {
        matches!(
            (self, other),
            (Status::Certified, Status::Refuted) | (Status::Refuted, Status::Certified)
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub iterates: u64,
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    AlmostPeriod {
        epsilon: f64,
        window: u64,
        margin: f64,
        returns: usize,
    },
    Modulus {
        epsilon: f64,
        delta: f64,
        worst: f64,
    },
    CompactlyAlmostPeriodic {
        epsilon: f64,
        largest_point_closure: usize,
        compactum_closure: usize,
        smallest_delta: f64,
    },
    CompactClosure {
        epsilon: f64,
        snapshots: usize,
        scanned: u64,
    },
    InvariantIsometry {
        truncation: u64,
        residual: f64,
        forward_modulus: f64,
    },
}

/// One entry of an empty window: the sample point attaining the displacement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowEntry {
    pub n: i64,
    pub point: Point,
    pub displacement: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    /// Every iterate in the window displaces some sample point by at least ε.
    EmptyWindow {
        epsilon: f64,
        entries: Vec<WindowEntry>,
    },
    /// `d(x, y)` is at most the probe radius yet `d(h^n x, h^n y) >= ε`.
    Equicontinuity {
        epsilon: f64,
        x: Point,
        y: Point,
        n: i64,
        probe_distance: f64,
        distance: f64,
    },
    Escape(EscapeWitness),
}

impl Witness {
    /// Re-evaluate the witness on `sys`. Returns the largest discrepancy
    /// between stored and recomputed values, or an error when the violating
    /// inequality does not hold on replay.
    pub fn replay(&self, sys: &System) -> Result<f64> {
        let space = sys.space();
        match self {
            Witness::EmptyWindow { epsilon, entries } => {
                let mut worst: f64 = 0.0;
                for e in entries {
                    let d = space.distance(&iterate(sys, &e.point, e.n), &e.point)?;
                    if d < *epsilon {
                        return Err(Error::InvalidArgument(format!(
                            "iterate {} displaces by {d} < epsilon {epsilon}",
                            e.n
                        )));
                    }
                    worst = worst.max((d - e.displacement).abs());
                }
                Ok(worst)
            }
            Witness::Equicontinuity {
                epsilon,
                x,
                y,
                n,
                probe_distance,
                distance,
            } => {
                let d0 = space.distance(x, y)?;
                let d = space.distance(&iterate(sys, x, *n), &iterate(sys, y, *n))?;
                if d < *epsilon {
                    return Err(Error::InvalidArgument(format!(
                        "iterate {n} separates the probe pair by {d} < epsilon {epsilon}"
                    )));
                }
                Ok((d0 - probe_distance).abs().max((d - distance).abs()))
            }
            Witness::Escape(w) => w.replay(sys),
        }
    }
}

/// Three-valued outcome of a detector over an infinite quantifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub budget: BudgetReport,
}

impl Verdict {
    pub fn certified(certificate: Certificate, budget: BudgetReport) -> Self {
        Verdict {
            status: Status::Certified,
            certificate: Some(certificate),
            witness: None,
            budget,
        }
    }

    pub fn refuted(witness: Witness, budget: BudgetReport) -> Self {
        Verdict {
            status: Status::Refuted,
            certificate: None,
            witness: Some(witness),
            budget,
        }
    }

    pub fn inconclusive(budget: BudgetReport) -> Self {
        Verdict {
            status: Status::Inconclusive,
            certificate: None,
            witness: None,
            budget,
        }
    }

    pub fn is_certified(&self) -> bool {
        self.status == Status::Certified
    }

    pub fn is_refuted(&self) -> bool {
        self.status == Status::Refuted
    }

    /// Certified window length, if this is an almost-period certificate.
    pub fn window(&self) -> Option<u64> {
        match &self.certificate {
            Some(Certificate::AlmostPeriod { window, .. }) => Some(*window),
            _ => None,
        }
    }
}
