//! JSON form of pure states: the layout plus amplitudes as (re, im) pairs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevec::layout::SubsystemLayout;
use crate::statevec::pure::PureState;

#[derive(Serialize, Deserialize)]
struct PureStateRepr {
    layout: SubsystemLayout,
    amplitudes: Vec<(f64, f64)>,
}

impl PureState {
    pub fn to_json(&self) -> String {
        let repr = PureStateRepr {
            layout: self.layout().clone(),
            amplitudes: self.amplitudes().iter().map(|a| (a.re, a.im)).collect(),
        };
        serde_json::to_string(&repr).expect("state serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<PureState> {
        let repr: PureStateRepr = serde_json::from_str(text)
            .map_err(|e| Error::DomainError(format!("bad state JSON: {e}")))?;
        let amps = repr
            .amplitudes
            .into_iter()
            .map(|(re, im)| Complex64::new(re, im))
            .collect();
        PureState::new(repr.layout, amps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let layout = SubsystemLayout::new(vec![("a", 2), ("b", 2)]).unwrap();
        let mut amps = vec![Complex64::ZERO; 4];
        amps[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[3] = Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
        let s = PureState::new(layout, amps).unwrap();
        let back = PureState::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back);
    }
}
