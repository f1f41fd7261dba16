//! Commutative semirings and their scalar values.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Result, SpfError};

/// Relative tolerance used when comparing floating point values.
pub const REL_TOL: f64 = 1e-9;
/// Absolute floor for floating point comparisons near zero.
pub const ABS_TOL: f64 = 1e-12;

/// The eight semirings supported by the library.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Semiring {
    /// `({0,1}, ∨, ∧, 0, 1)`
    Boolean,
    /// `(ℕ, +, ×, 0, 1)` with arbitrary precision.
    Counting,
    /// `(ℝ≥0, +, ×, 0, 1)`
    SumProduct,
    /// `(ℝ≥0, max, ×, 0, 1)`
    MaxProduct,
    /// `(ℝ ∪ {-∞}, max, +, -∞, 0)`
    MaxSum,
    /// `(ℝ ∪ {∞}, min, +, ∞, 0)`
    MinSum,
    /// `([0,1], max, min, 0, 1)`
    Fuzzy,
    /// `(ℝ≥0 ∪ {∞}, min, +, ∞, 0)`
    WeightedCsp,
}

/// A scalar drawn from a semiring carrier.
#[derive(Clone, Debug)]
pub enum Value {
    Bool(bool),
    Nat(BigUint),
    Real(f64),
}

impl Value {
    pub fn nat(n: u64) -> Value {
        Value::Nat(BigUint::from(n))
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_nat(&self) -> Option<&BigUint> {
        match self {
            Value::Nat(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(x) => Some(*x),
            _ => None,
        }
    }

    /// Numeric view of any value: booleans map to 0/1 and naturals are rounded to f64.
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Bool(b) => f64::from(u8::from(*b)),
            Value::Nat(n) => n.to_f64().unwrap_or(f64::INFINITY),
            Value::Real(x) => *x,
        }
    }

    /// Equality with relative tolerance [`REL_TOL`] and absolute floor [`ABS_TOL`] for reals.
    pub fn approx_eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Real(a), Value::Real(b)) => approx_eq_f64(*a, *b),
            _ => self == other,
        }
    }
}

pub fn approx_eq_f64(a: f64, b: f64) -> bool {
    if a == b {
        return true;
    }
    if !a.is_finite() || !b.is_finite() {
        return false;
    }
    let diff = (a - b).abs();
    diff <= ABS_TOL || diff <= REL_TOL * a.abs().max(b.abs())
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Nat(a), Value::Nat(b)) => a == b,
            (Value::Real(a), Value::Real(b)) => a == b || (a.is_nan() && b.is_nan()),
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Value::Bool(b) => {
                0u8.hash(state);
                b.hash(state);
            }
            Value::Nat(n) => {
                1u8.hash(state);
                n.hash(state);
            }
            Value::Real(x) => {
                2u8.hash(state);
                let x = if *x == 0.0 { 0.0 } else { *x };
                x.to_bits().hash(state);
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{}", u8::from(*b)),
            Value::Nat(n) => write!(f, "{n}"),
            Value::Real(x) if x.is_infinite() => {
                write!(f, "{}", if *x > 0.0 { "inf" } else { "-inf" })
            }
            Value::Real(x) => write!(f, "{x}"),
        }
    }
}

impl Semiring {
    pub const ALL: [Semiring; 8] = [
        Semiring::Boolean,
        Semiring::Counting,
        Semiring::SumProduct,
        Semiring::MaxProduct,
        Semiring::MaxSum,
        Semiring::MinSum,
        Semiring::Fuzzy,
        Semiring::WeightedCsp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Semiring::Boolean => "boolean",
            Semiring::Counting => "counting",
            Semiring::SumProduct => "sum-product",
            Semiring::MaxProduct => "max-product",
            Semiring::MaxSum => "max-sum",
            Semiring::MinSum => "min-sum",
            Semiring::Fuzzy => "fuzzy",
            Semiring::WeightedCsp => "weighted-csp",
        }
    }

    pub fn zero(self) -> Value {
        match self {
            Semiring::Boolean => Value::Bool(false),
            Semiring::Counting => Value::Nat(BigUint::zero()),
            Semiring::SumProduct | Semiring::MaxProduct | Semiring::Fuzzy => Value::Real(0.0),
            Semiring::MaxSum => Value::Real(f64::NEG_INFINITY),
            Semiring::MinSum | Semiring::WeightedCsp => Value::Real(f64::INFINITY),
        }
    }

    pub fn one(self) -> Value {
        match self {
            Semiring::Boolean => Value::Bool(true),
            Semiring::Counting => Value::Nat(BigUint::one()),
            Semiring::SumProduct | Semiring::MaxProduct | Semiring::Fuzzy => Value::Real(1.0),
            Semiring::MaxSum | Semiring::MinSum | Semiring::WeightedCsp => Value::Real(0.0),
        }
    }

    pub fn is_idempotent(self) -> bool {
        !matches!(self, Semiring::Counting | Semiring::SumProduct)
    }

    pub fn is_zero(self, v: &Value) -> bool {
        *v == self.zero()
    }

    pub fn is_one(self, v: &Value) -> bool {
        *v == self.one()
    }

    /// True when `v ⊕ a = v` for every carrier value `a`.
    pub fn is_add_absorbing(self, v: &Value) -> bool {
        match (self, v) {
            (Semiring::Boolean, Value::Bool(b)) => *b,
            (Semiring::Fuzzy, Value::Real(x)) => *x == 1.0,
            (Semiring::MaxSum, Value::Real(x)) => *x == f64::INFINITY,
            (Semiring::MinSum, Value::Real(x)) => *x == f64::NEG_INFINITY,
            (Semiring::WeightedCsp, Value::Real(x)) => *x == 0.0,
            _ => false,
        }
    }

    pub fn contains(self, v: &Value) -> bool {
        match (self, v) {
            (Semiring::Boolean, Value::Bool(_)) => true,
            (Semiring::Counting, Value::Nat(_)) => true,
            (Semiring::SumProduct | Semiring::MaxProduct, Value::Real(x)) => {
                x.is_finite() && *x >= 0.0
            }
            (Semiring::MaxSum, Value::Real(x)) => !x.is_nan() && *x != f64::INFINITY,
            (Semiring::MinSum, Value::Real(x)) => !x.is_nan() && *x != f64::NEG_INFINITY,
            (Semiring::Fuzzy, Value::Real(x)) => (0.0..=1.0).contains(x),
            (Semiring::WeightedCsp, Value::Real(x)) => !x.is_nan() && *x >= 0.0,
            _ => false,
        }
    }

    pub fn check(self, v: &Value) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(SpfError::Carrier {
                semiring: self,
                value: v.to_string(),
            })
        }
    }

    /// Converts a real number into this semiring's carrier.
    pub fn from_f64(self, x: f64) -> Result<Value> {
        let v = match self {
            Semiring::Boolean => {
                if x == 0.0 {
                    Value::Bool(false)
                } else if x == 1.0 {
                    Value::Bool(true)
                } else {
                    return Err(self.carrier_error(x));
                }
            }
            Semiring::Counting => {
                if x >= 0.0 && x.fract() == 0.0 && x.is_finite() {
                    Value::Nat(BigUint::from(x as u128))
                } else {
                    return Err(self.carrier_error(x));
                }
            }
            _ => Value::Real(x),
        };
        self.check(&v)?;
        Ok(v)
    }

    fn carrier_error(self, x: f64) -> SpfError {
        SpfError::Carrier {
            semiring: self,
            value: x.to_string(),
        }
    }

    /// `a ⊕ b`.
    pub fn add(self, a: &Value, b: &Value) -> Result<Value> {
        self.check(a)?;
        self.check(b)?;
        Ok(match (self, a, b) {
            (Semiring::Boolean, Value::Bool(x), Value::Bool(y)) => Value::Bool(*x || *y),
            (Semiring::Counting, Value::Nat(x), Value::Nat(y)) => Value::Nat(x + y),
            (Semiring::SumProduct, Value::Real(x), Value::Real(y)) => {
                let s = x + y;
                if !s.is_finite() {
                    return Err(self.carrier_error(s));
                }
                Value::Real(s)
            }
            (
                Semiring::MaxProduct | Semiring::MaxSum | Semiring::Fuzzy,
                Value::Real(x),
                Value::Real(y),
            ) => Value::Real(x.max(*y)),
            (Semiring::MinSum | Semiring::WeightedCsp, Value::Real(x), Value::Real(y)) => {
                Value::Real(x.min(*y))
            }
            _ => unreachable!("carrier checked"),
        })
    }

    /// `a ⊗ b`.
    pub fn mul(self, a: &Value, b: &Value) -> Result<Value> {
        self.check(a)?;
        self.check(b)?;
        Ok(match (self, a, b) {
            (Semiring::Boolean, Value::Bool(x), Value::Bool(y)) => Value::Bool(*x && *y),
            (Semiring::Counting, Value::Nat(x), Value::Nat(y)) => Value::Nat(x * y),
            (Semiring::SumProduct | Semiring::MaxProduct, Value::Real(x), Value::Real(y)) => {
                let p = x * y;
                if !p.is_finite() {
                    return Err(self.carrier_error(p));
                }
                Value::Real(p)
            }
            (Semiring::MaxSum, Value::Real(x), Value::Real(y)) => {
                if *x == f64::NEG_INFINITY || *y == f64::NEG_INFINITY {
                    Value::Real(f64::NEG_INFINITY)
                } else {
                    Value::Real(x + y)
                }
            }
            (Semiring::MinSum | Semiring::WeightedCsp, Value::Real(x), Value::Real(y)) => {
                if *x == f64::INFINITY || *y == f64::INFINITY {
                    Value::Real(f64::INFINITY)
                } else {
                    Value::Real(x + y)
                }
            }
            (Semiring::Fuzzy, Value::Real(x), Value::Real(y)) => Value::Real(x.min(*y)),
            _ => unreachable!("carrier checked"),
        })
    }

    /// The `⊕` of `k ≥ 1` copies of `one`.
    pub fn sum_of_ones(self, k: &BigUint) -> Result<Value> {
        if k.is_zero() {
            return Err(SpfError::Precondition(
                "sum_of_ones requires k >= 1".to_string(),
            ));
        }
        Ok(match self {
            Semiring::Counting => Value::Nat(k.clone()),
            Semiring::SumProduct => {
                let x = k.to_f64().unwrap_or(f64::INFINITY);
                if !x.is_finite() {
                    return Err(SpfError::Carrier {
                        semiring: self,
                        value: k.to_string(),
                    });
                }
                Value::Real(x)
            }
            _ => self.one(),
        })
    }

    /// Folds `⊕` over `values`, starting from zero.
    pub fn sum_all<'a>(self, values: impl IntoIterator<Item = &'a Value>) -> Result<Value> {
        values
            .into_iter()
            .try_fold(self.zero(), |acc, v| self.add(&acc, v))
    }

    /// Folds `⊗` over `values`, starting from one.
    pub fn product_all<'a>(self, values: impl IntoIterator<Item = &'a Value>) -> Result<Value> {
        values
            .into_iter()
            .try_fold(self.one(), |acc, v| self.mul(&acc, v))
    }
}

impl fmt::Display for Semiring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Semiring {
    type Err = SpfError;

    fn from_str(s: &str) -> Result<Semiring> {
        Semiring::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| SpfError::UnknownSemiring(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(x: f64) -> Value {
        Value::Real(x)
    }

    #[test]
    fn operation_examples() {
        let b = Semiring::Boolean;
        assert_eq!(b.add(&Value::Bool(true), &Value::Bool(true)).unwrap(), Value::Bool(true));
        assert_eq!(b.mul(&Value::Bool(true), &Value::Bool(false)).unwrap(), Value::Bool(false));
        let c = Semiring::Counting;
        assert_eq!(c.add(&Value::nat(2), &Value::nat(3)).unwrap(), Value::nat(5));
        let m = Semiring::MinSum;
        assert_eq!(m.add(&r(f64::INFINITY), &r(4.0)).unwrap(), r(4.0));
        assert_eq!(m.mul(&r(3.0), &r(4.0)).unwrap(), r(7.0));
        assert_eq!(Semiring::Fuzzy.mul(&r(0.4), &r(0.7)).unwrap(), r(0.4));
    }

    #[test]
    fn sum_of_ones_examples() {
        let five = BigUint::from(5u8);
        assert_eq!(Semiring::Boolean.sum_of_ones(&five).unwrap(), Value::Bool(true));
        assert_eq!(Semiring::Counting.sum_of_ones(&five).unwrap(), Value::nat(5));
        assert_eq!(Semiring::MinSum.sum_of_ones(&BigUint::from(3u8)).unwrap(), r(0.0));
        assert!(Semiring::Counting.sum_of_ones(&BigUint::zero()).is_err());
    }

    #[test]
    fn carrier_mismatch_is_an_error() {
        assert!(matches!(
            Semiring::Counting.add(&Value::Bool(true), &Value::nat(1)),
            Err(SpfError::Carrier { .. })
        ));
        assert!(Semiring::Fuzzy.mul(&r(1.5), &r(0.2)).is_err());
        assert!(Semiring::SumProduct.add(&r(-1.0), &r(0.2)).is_err());
    }

    #[test]
    fn names_round_trip() {
        for s in Semiring::ALL {
            assert_eq!(s.name().parse::<Semiring>().unwrap(), s);
            assert_ne!(s.zero(), s.one());
        }
        assert!("tropical".parse::<Semiring>().is_err());
    }

    #[test]
    fn idempotence_flags() {
        let idem: Vec<_> = Semiring::ALL.into_iter().filter(|s| s.is_idempotent()).collect();
        assert_eq!(
            idem,
            vec![
                Semiring::Boolean,
                Semiring::MaxProduct,
                Semiring::MaxSum,
                Semiring::MinSum,
                Semiring::Fuzzy,
                Semiring::WeightedCsp
            ]
        );
    }
}
