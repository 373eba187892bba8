use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single labelled tensor factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subsystem {
    pub label: String,
    pub dim: usize,
}

/// Ordered list of subsystem dimensions with unique labels.
///
/// The leftmost subsystem is the slowest-varying index of the flat
/// amplitude vector: a basis state with digits `(x_0, ..., x_{n-1})`
/// sits at flat index `((x_0 d_1 + x_1) d_2 + x_2) ...`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsystemLayout {
    subsystems: Vec<Subsystem>,
}

impl SubsystemLayout {
    pub fn new<L: Into<String>>(parts: Vec<(L, usize)>) -> Result<Self> {
        let subsystems: Vec<Subsystem> = parts
            .into_iter()
            .map(|(label, dim)| Subsystem { label: label.into(), dim })
            .collect();
        for s in &subsystems {
            if s.dim == 0 {
                return Err(Error::DomainError(format!(
                    "subsystem `{}` has dimension 0",
                    s.label
                )));
            }
        }
        for (i, s) in subsystems.iter().enumerate() {
            if subsystems[..i].iter().any(|t| t.label == s.label) {
                return Err(Error::LabelClash(s.label.clone()));
            }
        }
        Ok(SubsystemLayout { subsystems })
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.subsystems.iter().map(|s| s.dim).product()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(|s| s.dim).collect()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.subsystems.iter().map(|s| s.label.as_str()).collect()
    }

    pub fn dim_at(&self, i: usize) -> usize {
        self.subsystems[i].dim
    }

    pub fn label_at(&self, i: usize) -> &str {
        &self.subsystems[i].label
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.subsystems.iter().position(|s| s.label == label)
    }

    /// Positions of `labels` in this layout, in the order given.
    pub fn positions(&self, labels: &[&str]) -> Result<Vec<usize>> {
        labels
            .iter()
            .map(|l| {
                self.position(l)
                    .ok_or_else(|| Error::UnknownLabel((*l).to_string()))
            })
            .collect()
    }

    /// Concatenation; fails on a label collision.
    pub fn concat(&self, other: &SubsystemLayout) -> Result<SubsystemLayout> {
        let mut subsystems = self.subsystems.clone();
        for s in &other.subsystems {
            if subsystems.iter().any(|t| t.label == s.label) {
                return Err(Error::LabelClash(s.label.clone()));
            }
            subsystems.push(s.clone());
        }
        Ok(SubsystemLayout { subsystems })
    }

    /// New layout whose position `i` holds the old subsystem `order[i]`.
    pub fn reordered(&self, order: &[usize]) -> SubsystemLayout {
        assert_eq!(order.len(), self.subsystems.len());
        SubsystemLayout {
            subsystems: order.iter().map(|&i| self.subsystems[i].clone()).collect(),
        }
    }

    pub(crate) fn relabeled<F: Fn(&str) -> String>(&self, f: F) -> SubsystemLayout {
        SubsystemLayout {
            subsystems: self
                .subsystems
                .iter()
                .map(|s| Subsystem { label: f(&s.label), dim: s.dim })
                .collect(),
        }
    }

    /// Strides of each subsystem in the flat index (leftmost slowest).
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.subsystems.len()];
        for i in (0..self.subsystems.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.subsystems[i + 1].dim;
        }
        strides
    }

    /// Flat index of a digit tuple.
    pub fn flat_index(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.subsystems.len());
        let mut idx = 0;
        for (d, s) in digits.iter().zip(&self.subsystems) {
            debug_assert!(*d < s.dim);
            idx = idx * s.dim + d;
        }
        idx
    }

    /// Digit tuple of a flat index.
    pub fn digits(&self, mut idx: usize, out: &mut [usize]) {
        for i in (0..self.subsystems.len()).rev() {
            out[i] = idx % self.subsystems[i].dim;
            idx /= self.subsystems[i].dim;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_dim_is_product() {
        let l = SubsystemLayout::new(vec![("a", 2), ("b", 3), ("c", 3)]).unwrap();
        assert_eq!(l.total_dim(), 18);
        assert_eq!(l.strides(), vec![9, 3, 1]);
    }

    #[test]
    fn duplicate_labels_rejected() {
        assert_eq!(
            SubsystemLayout::new(vec![("a", 2), ("a", 3)]).unwrap_err(),
            Error::LabelClash("a".into())
        );
    }

    #[test]
    fn flat_index_round_trip() {
        let l = SubsystemLayout::new(vec![("a", 2), ("b", 3), ("c", 5)]).unwrap();
        let mut digits = [0usize; 3];
        for idx in 0..l.total_dim() {
            l.digits(idx, &mut digits);
            assert_eq!(l.flat_index(&digits), idx);
        }
    }
}
