use crate::error::{Result, SpfError};
use crate::graph::{Assignment, SpfGraph};
use crate::semiring::Semiring;
use crate::summation::{extract_argument, sum_decomposable_with, SumOptions};

fn require(g: &SpfGraph, s: Semiring) -> Result<()> {
    if g.semiring() != s {
        return Err(SpfError::Precondition(format!("expected a {s} graph, got {}", g.semiring())));
    }
    g.require_decomposable()
}

/// Definite integral of a decomposable sum-product graph over its box, using each leaf's closed form.
///
/// Finite variables are summed; a sum node whose children differ in a continuous variable is
/// rejected with [`SpfError::ContinuousSum`].
pub fn integrate(g: &SpfGraph) -> Result<f64> {
    require(g, Semiring::SumProduct)?;
    Ok(sum_decomposable_with(g, &SumOptions::default())?.value.to_f64())
}

#[derive(Clone, Debug)]
pub struct MsfMinimum {
    pub argmin: Assignment,
    /// The summed minimum.
    pub value: f64,
    /// The graph evaluated at `argmin`.
    pub evaluated: f64,
    pub restarts_used: usize,
}

/// Global minimum of a decomposable min-sum graph by minimizing each leaf over its own box.
pub fn minimize_msf(g: &SpfGraph, opts: &SumOptions) -> Result<MsfMinimum> {
    require(g, Semiring::MinSum)?;
    let r = sum_decomposable_with(g, opts)?;
    let argmin = extract_argument(g, &r)?;
    let evaluated = g.evaluate(&argmin)?.to_f64();
    Ok(MsfMinimum {
        argmin,
        value: r.value.to_f64(),
        evaluated,
        restarts_used: r.restarts_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphBuilder, VarId, VarValue, VariableTable};
    use crate::graph::registry::PiecewisePolynomial;

    fn unit_box(n: usize) -> VariableTable {
        let mut vars = VariableTable::new();
        for i in 0..n {
            vars.add_interval(&format!("y{}", i + 1), 0.0, 1.0).unwrap();
        }
        vars
    }

    #[test]
    fn separable_integral() {
        let mut b = GraphBuilder::new(Semiring::SumProduct, unit_box(2));
        let x = b.registered("polynomial", &[VarId(0)], vec![0.0, 1.0]).unwrap();
        let y = b.registered("polynomial", &[VarId(1)], vec![0.0, 1.0]).unwrap();
        let p = b.product(vec![x, y]);
        let g = b.build(p).unwrap();
        assert!((integrate(&g).unwrap() - 0.25).abs() < 1e-15);

        let mut b = GraphBuilder::new(Semiring::SumProduct, unit_box(2));
        let x = b.registered("polynomial", &[VarId(0)], vec![0.0, 1.0]).unwrap();
        let y = b.registered("polynomial", &[VarId(1)], vec![0.0, 1.0]).unwrap();
        let x2 = b.registered("polynomial", &[VarId(0)], vec![0.0, 0.0, 1.0]).unwrap();
        let p = b.product(vec![x, y]);
        let q = b.product(vec![x2, y]);
        let s = b.sum(vec![p, q]);
        let g = b.build(s).unwrap();
        assert!((integrate(&g).unwrap() - (0.25 + 1.0 / 6.0)).abs() < 1e-15);
    }

    #[test]
    fn mismatched_sum_scopes_are_rejected() {
        let mut b = GraphBuilder::new(Semiring::SumProduct, unit_box(2));
        let x = b.registered("polynomial", &[VarId(0)], vec![1.0]).unwrap();
        let y = b.registered("polynomial", &[VarId(1)], vec![1.0]).unwrap();
        let s = b.sum(vec![x, y]);
        let g = b.build(s).unwrap();
        assert!(matches!(integrate(&g), Err(SpfError::ContinuousSum { .. })));
    }

    #[test]
    fn piecewise_integral() {
        let mut b = GraphBuilder::new(Semiring::SumProduct, unit_box(1));
        let params = PiecewisePolynomial::params(&[0.0, 0.5, 1.0], &[vec![1.0], vec![0.0, 2.0]]);
        let l = b.registered("piecewise-polynomial", &[VarId(0)], params).unwrap();
        let g = b.build(l).unwrap();
        assert!((integrate(&g).unwrap() - 1.25).abs() < 1e-15);
    }

    #[test]
    fn two_parabolas() {
        let mut vars = VariableTable::new();
        vars.add_interval("a", -5.0, 5.0).unwrap();
        vars.add_interval("b", -5.0, 5.0).unwrap();
        let mut b = GraphBuilder::new(Semiring::MinSum, vars);
        let p = b.registered("quadratic", &[VarId(0)], vec![0.0, 1.0, 1.0]).unwrap();
        let q = b.registered("quadratic", &[VarId(1)], vec![0.0, 1.0, -2.0]).unwrap();
        let root = b.product(vec![p, q]);
        let g = b.build(root).unwrap();
        let m = minimize_msf(&g, &SumOptions::default()).unwrap();
        assert!(m.value.abs() < 1e-9);
        let VarValue::Real(a) = m.argmin.get(VarId(0)).unwrap() else { panic!() };
        let VarValue::Real(c) = m.argmin.get(VarId(1)).unwrap() else { panic!() };
        assert!((a - 1.0).abs() < 1e-4 && (c + 2.0).abs() < 1e-4);
        assert!((m.evaluated - m.value).abs() < 1e-9);
    }
}
