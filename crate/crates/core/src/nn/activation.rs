use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Elu,
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    /// The four bottleneck activations, in grid order.
    pub const BOTTLENECK: [Activation; 4] = [Activation::Relu, Activation::Elu, Activation::Tanh, Activation::Sigmoid];

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Elu => "elu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "elu" => Ok(Activation::Elu),
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            "identity" | "linear" => Ok(Activation::Identity),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Largest f64 below 1.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// ELU uses alpha = 1. Saturating outputs are held one ulp inside their open
/// bounds, so tanh never returns exactly 1.0 for a large input.
#[inline]
pub fn activate(x: f64, kind: Activation) -> f64 {
    match kind {
        Activation::Relu => x.max(0.0),
        Activation::Elu => {
            if x > 0.0 {
                x
            } else {
                x.exp_m1().max(-BELOW_ONE)
            }
        }
        Activation::Tanh => x.tanh().clamp(-BELOW_ONE, BELOW_ONE),
        Activation::Sigmoid => sigmoid(x).clamp(f64::MIN_POSITIVE, BELOW_ONE),
        Activation::Identity => x,
    }
}

/// Exact derivative at `x` (pre-activation). relu'(0) is 0.
#[inline]
pub fn activate_grad(x: f64, kind: Activation) -> f64 {
    match kind {
        Activation::Relu => {
            if x > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Activation::Elu => {
            if x > 0.0 {
                1.0
            } else {
                x.exp()
            }
        }
        Activation::Tanh => {
            let t = x.tanh();
            1.0 - t * t
        }
        Activation::Sigmoid => {
            let s = sigmoid(x);
            s * (1.0 - s)
        }
        Activation::Identity => 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturated_outputs_stay_inside_open_bounds() {
        for x in [-1e3, -40.0, 40.0, 1e3] {
            for act in [Activation::Tanh, Activation::Sigmoid, Activation::Elu] {
                let y = activate(x, act);
                assert!(crate::encoders::in_codomain(y, act), "{act}({x}) = {y}");
            }
        }
    }

    #[test]
    fn reference_values() {
        assert_eq!(activate(-1.0, Activation::Relu), 0.0);
        assert_eq!(activate(2.0, Activation::Relu), 2.0);
        assert_eq!(activate(0.0, Activation::Sigmoid), 0.5);
        assert_eq!(activate(0.0, Activation::Tanh), 0.0);
        let elu = activate(-1.0, Activation::Elu);
        assert!((elu - ((-1.0f64).exp() - 1.0)).abs() < 1e-15);
        assert!((elu + 0.6321).abs() < 1e-4);
        assert_eq!(activate_grad(0.0, Activation::Relu), 0.0);
    }

    #[test]
    fn gradients_match_central_differences() {
        let h = 1e-6;
        for kind in [Activation::Elu, Activation::Tanh, Activation::Sigmoid, Activation::Identity, Activation::Relu] {
            for &x in &[-3.0, -0.7, 0.3, 2.5] {
                let fd = (activate(x + h, kind) - activate(x - h, kind)) / (2.0 * h);
                assert!((fd - activate_grad(x, kind)).abs() < 1e-8, "{kind} at {x}");
            }
        }
    }

    #[test]
    fn sigmoid_is_stable_for_large_inputs() {
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
    }

    #[test]
    fn names_round_trip() {
        for a in Activation::BOTTLENECK {
            assert_eq!(a.name().parse::<Activation>().unwrap(), a);
        }
        assert!("swish".parse::<Activation>().is_err());
    }
}
