//! Text-config form of coefficient functions.
//!
//! A coefficient is described by a tagged block, e.g. in TOML:
//!
//! ```toml
//! variant = "polynomial"
//! c0 = 1.0
//! c1 = 2.0
//! ```
//!
//! Variants and fields:
//!
//! | `variant`        | fields                                                    |
//! |------------------|-----------------------------------------------------------|
//! | `strong_pi`      | `a`, `c_p`                                                 |
//! | `polynomial`     | `c0`, `c1`                                                 |
//! | `stretched_exp`  | `eta0`, `eta1`, `eta2`                                     |
//! | `lognormal_tail` | `sigma`                                                    |
//! | `tabulated`      | `s`, `b` arrays; optional `tail_power` or `zero_tail`; optional `interp` (`log_log`/`linear`) |
//! | `scaled`         | `c1`, `c2`, nested `inner` block                           |
//!
//! Closure-backed and weak-composed coefficients have no finite text form and refuse to
//! serialize; unknown keys are rejected at parse time.

use serde::{Deserialize, Serialize};

use crate::beta::{BetaFn, Interp, Tail};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpConfig {
    #[default]
    LogLog,
    Linear,
}

impl From<InterpConfig> for Interp {
    fn from(i: InterpConfig) -> Interp {
        match i {
            InterpConfig::LogLog => Interp::LogLog,
            InterpConfig::Linear => Interp::Linear,
        }
    }
}

impl From<Interp> for InterpConfig {
    fn from(i: Interp) -> InterpConfig {
        match i {
            Interp::LogLog => InterpConfig::LogLog,
            Interp::Linear => InterpConfig::Linear,
        }
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Serializable description of a [`BetaFn`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaConfig {
    StrongPi {
        a: f64,
        c_p: f64,
    },
    Polynomial {
        c0: f64,
        c1: f64,
    },
    StretchedExp {
        eta0: f64,
        eta1: f64,
        eta2: f64,
    },
    LognormalTail {
        sigma: f64,
    },
    Tabulated {
        s: Vec<f64>,
        b: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail_power: Option<f64>,
        #[serde(default, skip_serializing_if = "is_false")]
        zero_tail: bool,
        #[serde(default)]
        interp: InterpConfig,
    },
    Scaled {
        c1: f64,
        c2: f64,
        inner: Box<BetaConfig>,
    },
}

impl BetaConfig {
    /// Builds the coefficient, running the constructors' validation.
    pub fn to_beta(&self) -> Result<BetaFn> {
        match self {
            BetaConfig::StrongPi { a, c_p } => BetaFn::strong_pi(*a, *c_p),
            BetaConfig::Polynomial { c0, c1 } => BetaFn::polynomial(*c0, *c1),
            BetaConfig::StretchedExp { eta0, eta1, eta2 } => BetaFn::stretched_exp(*eta0, *eta1, *eta2),
            BetaConfig::LognormalTail { sigma } => BetaFn::lognormal_tail(*sigma),
            BetaConfig::Tabulated { s, b, tail_power, zero_tail, interp } => {
                let tail = match (tail_power, zero_tail) {
                    (Some(_), true) => {
                        return Err(Error::validation(
                            "tabulated block sets both tail_power and zero_tail; pick one".to_string(),
                        ))
                    }
                    (Some(p), false) => Some(Tail::Power(*p)),
                    (None, true) => Some(Tail::Zero),
                    (None, false) => None,
                };
                BetaFn::tabulated(s.clone(), b.clone(), tail, (*interp).into())
            }
            BetaConfig::Scaled { c1, c2, inner } => inner.to_beta()?.scaled(*c1, *c2),
        }
    }

    /// Inverse of [`BetaConfig::to_beta`] for the representable variants. Closure-backed and
    /// weak-composed coefficients are refused.
    pub fn from_beta(beta: &BetaFn) -> Result<BetaConfig> {
        Ok(match beta {
            BetaFn::StrongPi { a, c_p } => BetaConfig::StrongPi { a: *a, c_p: *c_p },
            BetaFn::Polynomial { c0, c1 } => BetaConfig::Polynomial { c0: *c0, c1: *c1 },
            BetaFn::StretchedExp { eta0, eta1, eta2 } => {
                BetaConfig::StretchedExp { eta0: *eta0, eta1: *eta1, eta2: *eta2 }
            }
            BetaFn::LognormalTail { sigma } => BetaConfig::LognormalTail { sigma: *sigma },
            BetaFn::Tabulated(t) => {
                let (s, b) = t.knots();
                let (tail_power, zero_tail) = match t.tail() {
                    Some(Tail::Power(p)) => (Some(p), false),
                    Some(Tail::Zero) => (None, true),
                    None => (None, false),
                };
                BetaConfig::Tabulated {
                    s: s.to_vec(),
                    b: b.to_vec(),
                    tail_power,
                    zero_tail,
                    interp: t.interp().into(),
                }
            }
            BetaFn::Scaled { c1, c2, inner } => BetaConfig::Scaled {
                c1: *c1,
                c2: *c2,
                inner: Box::new(BetaConfig::from_beta(inner)?),
            },
            BetaFn::Callable(_) | BetaFn::WeakChain { .. } => {
                return Err(Error::unsupported(
                    "closure-backed and weak-composed coefficients have no finite text form".to_string(),
                ))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn round_trip(cfg: &BetaConfig) {
        let text = toml::to_string(cfg).expect("serializes");
        let back: BetaConfig = toml::from_str(&text).expect("parses");
        assert_eq!(*cfg, back);
        // And through the coefficient itself.
        let again = BetaConfig::from_beta(&cfg.to_beta().unwrap()).unwrap();
        assert_eq!(*cfg, again);
    }

    #[test]
    fn all_representable_variants_round_trip() {
        round_trip(&BetaConfig::StrongPi { a: 1.0, c_p: 0.4 });
        round_trip(&BetaConfig::Polynomial { c0: 1.0, c1: 2.0 });
        round_trip(&BetaConfig::StretchedExp { eta0: 2.0, eta1: 0.7, eta2: 0.5 });
        round_trip(&BetaConfig::LognormalTail { sigma: 1.3 });
        round_trip(&BetaConfig::Tabulated {
            s: vec![1.0, 10.0, 100.0],
            b: vec![0.5, 0.1, 0.01],
            tail_power: Some(1.5),
            zero_tail: false,
            interp: InterpConfig::LogLog,
        });
        round_trip(&BetaConfig::Scaled {
            c1: 2.0,
            c2: 0.5,
            inner: Box::new(BetaConfig::LognormalTail { sigma: 1.0 }),
        });
    }

    #[test]
    fn parses_the_documented_block() {
        let cfg: BetaConfig = toml::from_str("variant = \"polynomial\"\nc0 = 1.0\nc1 = 2.0\n").unwrap();
        let beta = cfg.to_beta().unwrap();
        assert_relative_eq!(beta.eval(10.0).unwrap(), 0.01, max_relative = 1e-15);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(toml::from_str::<BetaConfig>("variant = \"polynomial\"\nc0 = 1.0\nc1 = 2.0\nc3 = 1.0\n").is_err());
        assert!(toml::from_str::<BetaConfig>("variant = \"nope\"\n").is_err());
        // Validation runs on build, not parse.
        let cfg: BetaConfig = toml::from_str("variant = \"polynomial\"\nc0 = -1.0\nc1 = 2.0\n").unwrap();
        assert!(cfg.to_beta().is_err());
        let both = BetaConfig::Tabulated {
            s: vec![1.0, 2.0],
            b: vec![0.5, 0.25],
            tail_power: Some(1.0),
            zero_tail: true,
            interp: InterpConfig::default(),
        };
        assert!(both.to_beta().is_err());
    }

    #[test]
    fn composed_and_closure_coefficients_refuse_to_serialize() {
        let w = crate::comparison::chain_weak(
            &BetaFn::polynomial(1.0, 1.0).unwrap(),
            &BetaFn::polynomial(1.0, 1.0).unwrap(),
        );
        assert!(matches!(BetaConfig::from_beta(&w), Err(Error::Unsupported(_))));
        let c = BetaFn::callable(|s| s.recip());
        assert!(matches!(BetaConfig::from_beta(&c), Err(Error::Unsupported(_))));
    }
}
