//! Named parametric leaf functions over continuous variables.
//!
//! Built-in families:
//!
//! | name | scope | params |
//! |------|-------|--------|
//! | `polynomial` | 1 | `c0, c1, …` for `Σ c_k y^k` |
//! | `piecewise-polynomial` | 1 | `p, b0..bp`, then per piece `m, c0..c(m-1)`; zero outside `[b0, bp]` |
//! | `quadratic` | any | `offset`, then per variable `a_i, c_i` for `offset + Σ a_i (y_i - c_i)²` |
//! | `rastrigin-pair` | 2 | `xi, xj, c0, c1` |
//! | `rastrigin-restricted` | any | `c0, c1, n, k_0..k_(n/4-1), x_0..x_(n-1)` |

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use super::{VarId, VariableTable};
use crate::error::{Result, SpfError};

/// A parametric family of real-valued leaf functions.
pub trait LeafFamily: Send + Sync {
    fn name(&self) -> &str;

    /// Checks the parameter vector against the leaf's scope.
    fn validate(&self, params: &[f64], scope: &[VarId], vars: &VariableTable) -> Result<()>;

    /// Value at `y`, whose entries follow the leaf's scope order.
    fn eval(&self, params: &[f64], y: &[f64]) -> f64;

    /// Writes the gradient into `grad` and returns the value, when the family is differentiable.
    fn gradient(&self, _params: &[f64], _y: &[f64], _grad: &mut [f64]) -> Option<f64> {
        None
    }

    /// Exact integral over the box `bounds`, when available in closed form.
    fn integral(&self, _params: &[f64], _bounds: &[(f64, f64)]) -> Option<f64> {
        None
    }

    /// Points where the function may fail to be smooth along each scope variable.
    fn breakpoints(&self, _params: &[f64], _dim: usize) -> Vec<f64> {
        Vec::new()
    }
}

type Registry = RwLock<HashMap<String, Arc<dyn LeafFamily>>>;

fn registry() -> &'static Registry {
    static REGISTRY: OnceLock<Registry> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let mut m: HashMap<String, Arc<dyn LeafFamily>> = HashMap::new();
        let builtins: Vec<Arc<dyn LeafFamily>> = vec![
            Arc::new(Polynomial),
            Arc::new(PiecewisePolynomial),
            Arc::new(Quadratic),
            Arc::new(crate::bench::RastriginPairFamily),
            Arc::new(crate::bench::RastriginRestrictedFamily),
        ];
        for f in builtins {
            m.insert(f.name().to_string(), f);
        }
        RwLock::new(m)
    })
}

/// Adds or replaces a family under its name.
pub fn register(family: Arc<dyn LeafFamily>) {
    let mut m = registry().write().expect("registry lock");
    m.insert(family.name().to_string(), family);
}

pub fn lookup(name: &str) -> Result<Arc<dyn LeafFamily>> {
    registry()
        .read()
        .expect("registry lock")
        .get(name)
        .cloned()
        .ok_or_else(|| SpfError::UnknownFunction(name.to_string()))
}

pub fn names() -> Vec<String> {
    let mut v: Vec<String> = registry().read().expect("registry lock").keys().cloned().collect();
    v.sort();
    v
}

pub(crate) fn require_continuous(scope: &[VarId], vars: &VariableTable) -> Result<()> {
    for v in scope {
        if vars.domain(*v).is_finite() {
            return Err(SpfError::Precondition(format!(
                "registered leaf over finite variable `{}`",
                vars.name(*v)
            )));
        }
    }
    Ok(())
}

fn require_arity(scope: &[VarId], n: usize, name: &str) -> Result<()> {
    if scope.len() != n {
        return Err(SpfError::Precondition(format!(
            "{name} expects {n} variable(s), got {}",
            scope.len()
        )));
    }
    Ok(())
}

fn require_finite(params: &[f64]) -> Result<()> {
    if params.iter().any(|p| !p.is_finite()) {
        return Err(SpfError::Precondition("non-finite parameter".to_string()));
    }
    Ok(())
}

fn horner(c: &[f64], y: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * y + ck)
}

fn horner_derivative(c: &[f64], y: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, &ck)| acc * y + k as f64 * ck)
}

/// Antiderivative of `Σ c_k y^k` evaluated at `y`.
fn antiderivative(c: &[f64], y: f64) -> f64 {
    c.iter()
        .enumerate()
        .rev()
        .fold(0.0, |acc, (k, &ck)| acc * y + ck / (k + 1) as f64)
        * y
}

/// `Σ c_k y^k` in one variable.
pub struct Polynomial;

impl LeafFamily for Polynomial {
    fn name(&self) -> &str {
        "polynomial"
    }

    fn validate(&self, params: &[f64], scope: &[VarId], vars: &VariableTable) -> Result<()> {
        require_arity(scope, 1, self.name())?;
        require_continuous(scope, vars)?;
        require_finite(params)?;
        if params.is_empty() {
            return Err(SpfError::Precondition("polynomial needs coefficients".into()));
        }
        Ok(())
    }

    fn eval(&self, params: &[f64], y: &[f64]) -> f64 {
        horner(params, y[0])
    }

    fn gradient(&self, params: &[f64], y: &[f64], grad: &mut [f64]) -> Option<f64> {
        grad[0] = horner_derivative(params, y[0]);
        Some(horner(params, y[0]))
    }

    fn integral(&self, params: &[f64], bounds: &[(f64, f64)]) -> Option<f64> {
        let (a, b) = bounds[0];
        Some(antiderivative(params, b) - antiderivative(params, a))
    }
}

/// Piecewise polynomial in one variable, zero outside its breakpoints.
pub struct PiecewisePolynomial;

struct Pieces<'a> {
    breaks: &'a [f64],
    coeffs: Vec<&'a [f64]>,
}

impl PiecewisePolynomial {
    fn parse(params: &[f64]) -> Option<Pieces<'_>> {
        let p = *params.first()?;
        if !(p >= 1.0 && p.fract() == 0.0) {
            return None;
        }
        let p = p as usize;
        let breaks = params.get(1..p + 2)?;
        let mut at = p + 2;
        let mut coeffs = Vec::with_capacity(p);
        for _ in 0..p {
            let m = *params.get(at)?;
            if !(m >= 1.0 && m.fract() == 0.0) {
                return None;
            }
            let m = m as usize;
            coeffs.push(params.get(at + 1..at + 1 + m)?);
            at += 1 + m;
        }
        if at != params.len() || breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return None;
        }
        Some(Pieces { breaks, coeffs })
    }

    fn piece(pieces: &Pieces<'_>, y: f64) -> Option<usize> {
        let b = pieces.breaks;
        if y < b[0] || y > b[b.len() - 1] {
            return None;
        }
        let j = b.partition_point(|&t| t <= y).saturating_sub(1);
        Some(j.min(pieces.coeffs.len() - 1))
    }

    /// Encodes breakpoints and per-piece coefficients into a parameter vector.
    pub fn params(breaks: &[f64], coeffs: &[Vec<f64>]) -> Vec<f64> {
        let mut out = vec![coeffs.len() as f64];
        out.extend_from_slice(breaks);
        for c in coeffs {
            out.push(c.len() as f64);
            out.extend_from_slice(c);
        }
        out
    }
}

impl LeafFamily for PiecewisePolynomial {
    fn name(&self) -> &str {
        "piecewise-polynomial"
    }

    fn validate(&self, params: &[f64], scope: &[VarId], vars: &VariableTable) -> Result<()> {
        require_arity(scope, 1, self.name())?;
        require_continuous(scope, vars)?;
        require_finite(params)?;
        Self::parse(params)
            .map(|_| ())
            .ok_or_else(|| SpfError::Precondition("malformed piecewise-polynomial parameters".into()))
    }

    fn eval(&self, params: &[f64], y: &[f64]) -> f64 {
        let Some(pieces) = Self::parse(params) else {
            return f64::NAN;
        };
        match Self::piece(&pieces, y[0]) {
            Some(j) => horner(pieces.coeffs[j], y[0]),
            None => 0.0,
        }
    }

    fn gradient(&self, params: &[f64], y: &[f64], grad: &mut [f64]) -> Option<f64> {
        let pieces = Self::parse(params)?;
        match Self::piece(&pieces, y[0]) {
            Some(j) => {
                grad[0] = horner_derivative(pieces.coeffs[j], y[0]);
                Some(horner(pieces.coeffs[j], y[0]))
            }
            None => {
                grad[0] = 0.0;
                Some(0.0)
            }
        }
    }

    fn integral(&self, params: &[f64], bounds: &[(f64, f64)]) -> Option<f64> {
        let pieces = Self::parse(params)?;
        let (a, b) = bounds[0];
        let mut total = 0.0;
        for (j, c) in pieces.coeffs.iter().enumerate() {
            let lo = pieces.breaks[j].max(a);
            let hi = pieces.breaks[j + 1].min(b);
            if lo < hi {
                total += antiderivative(c, hi) - antiderivative(c, lo);
            }
        }
        Some(total)
    }

    fn breakpoints(&self, params: &[f64], _dim: usize) -> Vec<f64> {
        Self::parse(params).map(|p| p.breaks.to_vec()).unwrap_or_default()
    }
}

/// `offset + Σ a_i (y_i - c_i)²` over any number of variables.
pub struct Quadratic;

impl LeafFamily for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn validate(&self, params: &[f64], scope: &[VarId], vars: &VariableTable) -> Result<()> {
        require_continuous(scope, vars)?;
        require_finite(params)?;
        if params.len() != 1 + 2 * scope.len() {
            return Err(SpfError::Precondition(format!(
                "quadratic over {} variables needs {} parameters",
                scope.len(),
                1 + 2 * scope.len()
            )));
        }
        Ok(())
    }

    fn eval(&self, params: &[f64], y: &[f64]) -> f64 {
        let mut v = params[0];
        for (i, yi) in y.iter().enumerate() {
            let (a, c) = (params[1 + 2 * i], params[2 + 2 * i]);
            v += a * (yi - c) * (yi - c);
        }
        v
    }

    fn gradient(&self, params: &[f64], y: &[f64], grad: &mut [f64]) -> Option<f64> {
        for (i, yi) in y.iter().enumerate() {
            let (a, c) = (params[1 + 2 * i], params[2 + 2 * i]);
            grad[i] = 2.0 * a * (yi - c);
        }
        Some(self.eval(params, y))
    }

    fn integral(&self, params: &[f64], bounds: &[(f64, f64)]) -> Option<f64> {
        let volume: f64 = bounds.iter().map(|(lo, hi)| hi - lo).product();
        let mut total = params[0] * volume;
        for (i, (lo, hi)) in bounds.iter().enumerate() {
            let (a, c) = (params[1 + 2 * i], params[2 + 2 * i]);
            let w = hi - lo;
            let one_dim = ((hi - c).powi(3) - (lo - c).powi(3)) / 3.0;
            total += a * one_dim * volume / w;
        }
        Some(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_resolve() {
        for n in ["polynomial", "piecewise-polynomial", "quadratic", "rastrigin-pair", "rastrigin-restricted"] {
            assert_eq!(lookup(n).unwrap().name(), n);
        }
        assert!(matches!(lookup("nope"), Err(SpfError::UnknownFunction(_))));
    }

    #[test]
    fn polynomial_integral() {
        // ∫_0^2 (1 + 3y²) dy = 2 + 8
        let i = Polynomial.integral(&[1.0, 0.0, 3.0], &[(0.0, 2.0)]).unwrap();
        assert!((i - 10.0).abs() < 1e-12);
    }

    #[test]
    fn piecewise_eval_and_integral() {
        let p = PiecewisePolynomial::params(&[0.0, 1.0, 3.0], &[vec![1.0], vec![0.0, 1.0]]);
        let f = PiecewisePolynomial;
        assert_eq!(f.eval(&p, &[0.5]), 1.0);
        assert_eq!(f.eval(&p, &[2.0]), 2.0);
        assert_eq!(f.eval(&p, &[4.0]), 0.0);
        // 1 + ∫_1^3 y dy = 1 + 4
        let i = f.integral(&p, &[(-1.0, 5.0)]).unwrap();
        assert!((i - 5.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_integral_matches_one_dimension() {
        // 1 + (y0-1)² + 2 y1² over [0,2]×[0,1]
        let q = Quadratic;
        let params = [1.0, 1.0, 1.0, 2.0, 0.0];
        let i = q.integral(&params, &[(0.0, 2.0), (0.0, 1.0)]).unwrap();
        let expected = 2.0 + (2.0 / 3.0) * 1.0 + 2.0 * (1.0 / 3.0) * 2.0;
        assert!((i - expected).abs() < 1e-12);
    }
}
