use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::statevec::density::DensityOperator;
use crate::statevec::isometry::LocalIsometry;
use crate::statevec::layout::SubsystemLayout;

/// Norm tolerance accepted at construction.
pub const NORM_TOL: f64 = 1e-9;

/// Unit-norm complex amplitude vector over a [`SubsystemLayout`].
///
/// Amplitudes are stored flat with the leftmost subsystem slowest-varying.
/// Construction renormalizes, so the stored norm is 1 to machine precision.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    layout: SubsystemLayout,
    amps: Vec<Complex64>,
}

impl PureState {
    /// Build a state from raw amplitudes, checking length and normalization.
    pub fn new(layout: SubsystemLayout, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != layout.total_dim() {
            return Err(Error::LengthMismatch { got: amps.len(), want: layout.total_dim() });
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        let mut state = PureState { layout, amps };
        state.renormalize();
        Ok(state)
    }

    /// Computational basis state `|digits⟩`.
    pub fn basis(layout: SubsystemLayout, digits: &[usize]) -> Result<Self> {
        if digits.len() != layout.len() {
            return Err(Error::DimensionMismatch);
        }
        for (d, s) in digits.iter().zip(layout.subsystems()) {
            if *d >= s.dim {
                return Err(Error::DomainError(format!(
                    "basis digit {} out of range for `{}`",
                    d, s.label
                )));
            }
        }
        let idx = layout.flat_index(digits);
        let mut amps = vec![Complex64::ZERO; layout.total_dim()];
        amps[idx] = Complex64::ONE;
        Ok(PureState { layout, amps })
    }

    /// Seeded Haar-distributed random state (normalized complex Gaussian
    /// vector). Deterministic for fixed seed.
    pub fn random(layout: SubsystemLayout, seed: u64) -> PureState {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let gauss = |rng: &mut rand_chacha::ChaCha8Rng| {
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen::<f64>();
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        };
        let amps: Vec<Complex64> = (0..layout.total_dim())
            .map(|_| Complex64::new(gauss(&mut rng), gauss(&mut rng)))
            .collect();
        let mut state = PureState { layout, amps };
        state.renormalize();
        state
    }

    fn renormalize(&mut self) {
        let norm = self.norm();
        if norm > 0.0 {
            let inv = 1.0 / norm;
            for a in &mut self.amps {
                *a *= inv;
            }
        }
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Tensor product; layouts are concatenated.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let layout = self.layout.concat(&other.layout)?;
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(PureState { layout, amps })
    }

    /// Inner product `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Multiply by a global phase factor (unit modulus expected).
    pub fn phased(&self, phase: Complex64) -> PureState {
        PureState {
            layout: self.layout.clone(),
            amps: self.amps.iter().map(|a| a * phase).collect(),
        }
    }

    /// Reorder subsystems: position `i` of the result holds the old
    /// subsystem `order[i]`. Labels and dimensions move with the data.
    pub fn reordered(&self, order: &[usize]) -> PureState {
        assert_eq!(order.len(), self.layout.len());
        let new_layout = self.layout.reordered(order);
        let mut amps = vec![Complex64::ZERO; self.amps.len()];
        let n = order.len();
        let mut old_digits = vec![0usize; n];
        let mut new_digits = vec![0usize; n];
        for idx in 0..self.amps.len() {
            self.layout.digits(idx, &mut old_digits);
            for (i, &o) in order.iter().enumerate() {
                new_digits[i] = old_digits[o];
            }
            amps[new_layout.flat_index(&new_digits)] = self.amps[idx];
        }
        PureState { layout: new_layout, amps }
    }

    /// Move the contents of registers around while labels stay in place:
    /// the register at position `i` receives the old contents of register
    /// `sources[i]`. All moved registers must have equal dimensions.
    pub fn permute_contents(&self, sources: &[usize]) -> Result<PureState> {
        if sources.len() != self.layout.len() {
            return Err(Error::DimensionMismatch);
        }
        let mut seen = vec![false; sources.len()];
        for &s in sources {
            if s >= sources.len() || seen[s] {
                return Err(Error::DimensionMismatch);
            }
            seen[s] = true;
        }
        for (i, &s) in sources.iter().enumerate() {
            if self.layout.dim_at(i) != self.layout.dim_at(s) {
                return Err(Error::DimensionMismatch);
            }
        }
        let n = sources.len();
        let mut amps = vec![Complex64::ZERO; self.amps.len()];
        let mut old_digits = vec![0usize; n];
        let mut new_digits = vec![0usize; n];
        for idx in 0..self.amps.len() {
            self.layout.digits(idx, &mut old_digits);
            for i in 0..n {
                new_digits[i] = old_digits[sources[i]];
            }
            amps[self.layout.flat_index(&new_digits)] = self.amps[idx];
        }
        Ok(PureState { layout: self.layout.clone(), amps })
    }

    pub(crate) fn relabeled<F: Fn(&str) -> String>(&self, f: F) -> PureState {
        PureState { layout: self.layout.relabeled(f), amps: self.amps.clone() }
    }

    /// Merge consecutive runs of subsystems into single labelled factors.
    /// `groups` lists `(new_label, run_length)` covering the whole layout
    /// in order; amplitudes are unchanged.
    pub fn coalesced<L: Into<String> + Clone>(&self, groups: &[(L, usize)]) -> Result<PureState> {
        let total: usize = groups.iter().map(|(_, k)| *k).sum();
        if total != self.layout.len() {
            return Err(Error::DimensionMismatch);
        }
        let mut parts = Vec::with_capacity(groups.len());
        let mut pos = 0;
        for (label, k) in groups {
            let dim: usize = (pos..pos + k).map(|i| self.layout.dim_at(i)).product();
            parts.push((label.clone().into(), dim));
            pos += k;
        }
        let layout = SubsystemLayout::new(parts)?;
        Ok(PureState { layout, amps: self.amps.clone() })
    }

    /// Gather the listed subsystems to the front (in the order given),
    /// keeping the rest in their original relative order.
    pub(crate) fn gather_front(&self, labels: &[&str]) -> Result<(PureState, Vec<usize>)> {
        let front = self.layout.positions(labels)?;
        let mut order = front.clone();
        for i in 0..self.layout.len() {
            if !front.contains(&i) {
                order.push(i);
            }
        }
        Ok((self.reordered(&order), order))
    }

    /// Apply a local isometry. Untouched subsystems are unaffected; the
    /// output subsystems replace the input block at the position of its
    /// first (leftmost) input label.
    pub fn apply_local(&self, op: &LocalIsometry) -> Result<PureState> {
        let in_labels = op.input().labels();
        let positions = self.layout.positions(&in_labels)?;
        for (p, s) in positions.iter().zip(op.input().subsystems()) {
            if self.layout.dim_at(*p) != s.dim {
                return Err(Error::DimensionMismatch);
            }
        }
        let (front, _) = self.gather_front(&in_labels)?;
        let in_dim = op.input().total_dim();
        let rest_dim = front.dim() / in_dim;
        let out_dim = op.output().total_dim();

        // front amps are indexed amp[i_in * rest_dim + j_rest]
        let mut out = vec![Complex64::ZERO; out_dim * rest_dim];
        let m = op.matrix();
        for i in 0..in_dim {
            let col = m.column(i);
            let src = &front.amps[i * rest_dim..(i + 1) * rest_dim];
            for (o, c) in col.iter().enumerate() {
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                let dst = &mut out[o * rest_dim..(o + 1) * rest_dim];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += c * s;
                }
            }
        }

        // layout: outputs first, then the untouched rest.
        let rest_layout_parts: Vec<_> = front
            .layout
            .subsystems()
            .iter()
            .skip(op.input().len())
            .map(|s| (s.label.clone(), s.dim))
            .collect();
        let mut layout = op.output().clone();
        for (l, d) in rest_layout_parts {
            layout = layout.concat(&SubsystemLayout::new(vec![(l, d)])?)?;
        }
        let state = PureState { layout, amps: out };

        // move the output block to where the input block sat.
        let insert_at = positions.iter().min().copied().unwrap_or(0);
        let k_before = (0..insert_at).filter(|i| !positions.contains(i)).count();
        let n_out = op.output().len();
        let n_rest = state.layout.len() - n_out;
        let mut order = Vec::with_capacity(state.layout.len());
        for j in 0..k_before {
            order.push(n_out + j);
        }
        for o in 0..n_out {
            order.push(o);
        }
        for j in k_before..n_rest {
            order.push(n_out + j);
        }
        Ok(state.reordered(&order))
    }

    /// Partial trace down to the listed subsystems (in the order given).
    pub fn reduce(&self, keep_labels: &[&str]) -> Result<DensityOperator> {
        if keep_labels.is_empty() {
            return Err(Error::DomainError("keep_labels must be non-empty".into()));
        }
        let (front, _) = self.gather_front(keep_labels)?;
        let keep_dim: usize = (0..keep_labels.len()).map(|i| front.layout.dim_at(i)).product();
        let env_dim = front.dim() / keep_dim;
        let a = DMatrix::from_fn(keep_dim, env_dim, |k, e| front.amps[k * env_dim + e]);
        let rho = &a * a.adjoint();
        let keep_parts: Vec<_> = front
            .layout
            .subsystems()
            .iter()
            .take(keep_labels.len())
            .map(|s| (s.label.clone(), s.dim))
            .collect();
        DensityOperator::new(SubsystemLayout::new(keep_parts)?, rho)
    }

    /// Probability of projecting the listed subsystems onto `vector`:
    /// `‖(|v⟩⟨v| ⊗ I)|self⟩‖²`.
    pub fn projection_probability(&self, labels: &[&str], vector: &PureState) -> Result<f64> {
        let (front, _) = self.gather_front(labels)?;
        let v_dim = vector.dim();
        let front_dim: usize = (0..labels.len()).map(|i| front.layout.dim_at(i)).product();
        if front_dim != v_dim {
            return Err(Error::DimensionMismatch);
        }
        let rest_dim = front.dim() / v_dim;
        let mut p = 0.0;
        for e in 0..rest_dim {
            let mut amp = Complex64::ZERO;
            for k in 0..v_dim {
                amp += vector.amps[k].conj() * front.amps[k * rest_dim + e];
            }
            p += amp.norm_sqr();
        }
        Ok(p)
    }

    /// Project the listed subsystems onto `vector` and drop them, returning
    /// the renormalized residual state and the pre-normalization norm.
    pub fn project_out(&self, labels: &[&str], vector: &PureState) -> Result<(PureState, f64)> {
        let (front, _) = self.gather_front(labels)?;
        let v_dim = vector.dim();
        let front_dim: usize = (0..labels.len()).map(|i| front.layout.dim_at(i)).product();
        if front_dim != v_dim {
            return Err(Error::DimensionMismatch);
        }
        let rest_dim = front.dim() / v_dim;
        let mut residual = vec![Complex64::ZERO; rest_dim];
        for e in 0..rest_dim {
            for k in 0..v_dim {
                residual[e] += vector.amps[k].conj() * front.amps[k * rest_dim + e];
            }
        }
        let rest_parts: Vec<_> = front
            .layout
            .subsystems()
            .iter()
            .skip(labels.len())
            .map(|s| (s.label.clone(), s.dim))
            .collect();
        let norm = residual.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            let inv = 1.0 / norm;
            for a in &mut residual {
                *a *= inv;
            }
        }
        Ok((
            PureState { layout: SubsystemLayout::new(rest_parts)?, amps: residual },
            norm,
        ))
    }
}
