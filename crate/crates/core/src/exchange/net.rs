//! Desk-scale universal embezzling families.
//!
//! The family is, conceptually, the tensor product of one exchange
//! resource `|E_N⟩` per point of a deterministic ε-net over the shared
//! state space, with source `|φ⟩ = |0^m⟩`. Embezzling a target selects
//! the nearest net point and exchanges only that component, so only the
//! selected component's overlaps are ever evaluated (in closed form —
//! nothing of size `dim^(N+1)` is materialized).

use std::collections::HashSet;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exchange::resource::overlap_formula;
use crate::statevec::{PureState, SubsystemLayout};

/// Hard cap on enumerated grid candidates.
const CANDIDATE_BUDGET: u128 = 5_000_000;
/// Hard cap on surviving net points (desk scale).
const NET_BUDGET: usize = 100_000;

/// A deterministic ε-net of shared states plus the embezzling parameters.
#[derive(Debug, Clone)]
pub struct UniversalFamily {
    layout: SubsystemLayout,
    n: usize,
    epsilon: f64,
    grid_extent: i64,
    net: Vec<Vec<Complex64>>,
}

/// Report of embezzling one target from the family.
#[derive(Debug, Clone)]
pub struct EmbezzleOutcome {
    /// Index of the selected net point.
    pub net_index: usize,
    /// The selected net point `ψ*`.
    pub net_point: PureState,
    /// `|⟨target|ψ*⟩|`.
    pub target_overlap: f64,
    /// `⟨E'_N|E_N⟩` of the selected component.
    pub residual_overlap: f64,
    /// Achieved fidelity to the exact target: `target_overlap · residual_overlap`.
    pub fidelity: f64,
}

impl UniversalFamily {
    /// Build the net over `m` parties with the given local dimensions.
    ///
    /// Candidates are all states proportional to nonzero Gaussian-integer
    /// grid vectors with coordinates in {−G..G}+i{−G..G}, G = ⌈1/(2ε)⌉,
    /// canonicalized up to global phase and then greedily deduplicated
    /// whenever the pairwise overlap `|⟨x|y⟩|` exceeds `1 − ε²/4`.
    pub fn build(per_party_dims: &[usize], n: usize, epsilon: f64) -> Result<Self> {
        if per_party_dims.is_empty() || per_party_dims.iter().any(|&d| d < 2) {
            return Err(Error::DomainError("each party needs local dimension ≥ 2".into()));
        }
        if n == 0 {
            return Err(Error::DomainError("accuracy parameter N must be ≥ 1".into()));
        }
        if !(epsilon > 0.0 && epsilon < 2.0) {
            return Err(Error::DomainError(format!("epsilon {epsilon} out of range (0, 2)")));
        }
        let parts: Vec<_> = per_party_dims
            .iter()
            .enumerate()
            .map(|(i, &d)| (format!("P{}", i + 1), d))
            .collect();
        let layout = SubsystemLayout::new(parts)?;
        let dim = layout.total_dim();

        let g = (1.0 / (2.0 * epsilon)).ceil().max(1.0) as i64;
        let per_coord = (2 * g + 1) as u128 * (2 * g + 1) as u128;
        let mut count: u128 = 1;
        for _ in 0..dim {
            count = count.checked_mul(per_coord).unwrap_or(u128::MAX);
            if count > CANDIDATE_BUDGET {
                return Err(Error::NetTooLarge(count));
            }
        }

        let net = build_net(dim, g, epsilon);
        if net.len() > NET_BUDGET {
            return Err(Error::NetTooLarge(net.len() as u128));
        }
        if net.is_empty() {
            return Err(Error::EmptyNet);
        }
        Ok(UniversalFamily { layout, n, epsilon, grid_extent: g, net })
    }

    pub fn len(&self) -> usize {
        self.net.len()
    }

    pub fn is_empty(&self) -> bool {
        self.net.is_empty()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn accuracy(&self) -> usize {
        self.n
    }

    pub fn grid_extent(&self) -> i64 {
        self.grid_extent
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn net_point(&self, i: usize) -> Result<PureState> {
        PureState::new(self.layout.clone(), self.net[i].clone())
    }

    /// Source state `|0^m⟩`.
    pub fn source(&self) -> PureState {
        PureState::basis(self.layout.clone(), &vec![0; self.layout.len()]).unwrap()
    }

    /// Embezzle `target`: select the nearest net point, exchange that
    /// component, and report the achieved fidelity (evaluated in closed
    /// form over the component's Gram structure).
    pub fn embezzle(&self, target: &PureState) -> Result<EmbezzleOutcome> {
        if target.layout().dims() != self.layout.dims() {
            return Err(Error::DimensionMismatch);
        }
        if self.net.is_empty() {
            return Err(Error::EmptyNet);
        }
        let mut best = 0usize;
        let mut best_overlap = -1.0f64;
        for (i, p) in self.net.iter().enumerate() {
            let ip: Complex64 = p
                .iter()
                .zip(target.amplitudes())
                .map(|(a, b)| a.conj() * b)
                .sum();
            let ov = ip.norm();
            if ov > best_overlap + 1e-15 {
                best_overlap = ov;
                best = i;
            }
        }
        let net_point = self.net_point(best)?;
        // |⟨0^m|ψ*⟩| of the selected component's exchange resource
        let a = self.net[best][0].norm().min(1.0);
        let residual_overlap = if a >= 1.0 - 1e-9 {
            // ψ* coincides with the source: nothing to shift
            1.0
        } else {
            overlap_formula(self.n, a)?
        };
        Ok(EmbezzleOutcome {
            net_index: best,
            net_point,
            target_overlap: best_overlap,
            residual_overlap,
            fidelity: best_overlap * residual_overlap,
        })
    }
}

/// Enumerate grid candidates in lexicographic order, canonicalize the
/// global phase, drop exact projective duplicates, then greedily keep
/// points that are ε-separated in overlap.
fn build_net(dim: usize, g: i64, epsilon: f64) -> Vec<Vec<Complex64>> {
    let side = (2 * g + 1) as usize;
    let n_digits = 2 * dim;
    let total: u128 = (side as u128).pow(n_digits as u32);

    let mut seen: HashSet<Vec<(i64, i64)>> = HashSet::new();
    let mut kept: Vec<Vec<Complex64>> = Vec::new();
    let overlap_thr = 1.0 - epsilon * epsilon / 4.0;

    let mut digits = vec![0usize; n_digits];
    for counter in 0..total {
        let mut c = counter;
        for d in (0..n_digits).rev() {
            digits[d] = (c % side as u128) as usize;
            c /= side as u128;
        }
        let mut v: Vec<Complex64> = (0..dim)
            .map(|i| {
                Complex64::new(
                    (digits[2 * i] as i64 - g) as f64,
                    (digits[2 * i + 1] as i64 - g) as f64,
                )
            })
            .collect();
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        for c in &mut v {
            *c /= norm;
        }
        // canonical global phase: first nonzero coordinate real positive
        if let Some(first) = v.iter().find(|c| c.norm() > 1e-12) {
            let u = first.conj() / first.norm();
            for c in &mut v {
                *c *= u;
            }
        }
        let key: Vec<(i64, i64)> = v
            .iter()
            .map(|c| ((c.re * 1e9).round() as i64, (c.im * 1e9).round() as i64))
            .collect();
        if !seen.insert(key) {
            continue;
        }
        // greedy overlap dedup; scan newest-first so near-duplicates of a
        // recently kept point bail out quickly
        let mut close = false;
        for p in kept.iter().rev() {
            let ip: Complex64 = p.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            if ip.norm() > overlap_thr {
                close = true;
                break;
            }
        }
        if !close {
            kept.push(v);
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_net_rejects_impossible_epsilon() {
        // qutrit pair at epsilon 1e-6: candidate grid is astronomically large
        assert!(matches!(
            UniversalFamily::build(&[3, 3], 4, 1e-6).unwrap_err(),
            Error::NetTooLarge(_)
        ));
    }

    #[test]
    fn single_qubit_pair_net_contains_source() {
        let fam = UniversalFamily::build(&[2, 2], 10, 0.5).unwrap();
        assert!(!fam.is_empty());
        let source = fam.source();
        let out = fam.embezzle(&source).unwrap();
        assert!((out.target_overlap - 1.0).abs() < 1e-12);
        assert!((out.residual_overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn basis_target_is_a_net_point() {
        let fam = UniversalFamily::build(&[2, 2], 100, 0.5).unwrap();
        let layout = fam.layout().clone();
        let t = PureState::basis(layout, &[1, 1]).unwrap();
        let out = fam.embezzle(&t).unwrap();
        assert!((out.target_overlap - 1.0).abs() < 1e-12);
        assert!(out.fidelity >= 1.0 - 1.0 / 100.0 - 1e-9);
    }
}
