//! Pairwise Rastrigin test functions with randomly paired variables.
//!
//! Each block of four variables `Y_4i..Y_4i+3` is split into two pairs,
//! `(Y_4i, Y_4i+k)` and `(Y_4i+3, Y_4i+3-k)` with `k ∈ {1, 2}`, and every pair
//! contributes
//!
//! ```text
//! f(yi, yj) = c0 [(yi - xi)² + (yj - xj)²] + c1 - c1 cos(yi - xi) cos(yj - xj)
//! ```
//!
//! The squared terms are added, so `f ≥ 0` with its unique global minimum `0` at `(xi, xj)`.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Result, SpfError};
use crate::graph::{registry::require_continuous, LeafFamily, VarId, VariableTable};
use crate::optimize::Objective;

pub const C0: f64 = 0.1;
pub const C1: f64 = 20.0;
/// Per-coordinate search box.
pub const BOX: (f64, f64) = (-5.12, 5.12);
/// Standard deviation of the noise around the line `Y_i = Y_j`.
pub const NOISE: f64 = 0.1;

pub fn rastrigin_pair(yi: f64, yj: f64, xi: f64, xj: f64, c0: f64, c1: f64) -> f64 {
    let (di, dj) = (yi - xi, yj - xj);
    c0 * (di * di + dj * dj) + c1 - c1 * di.cos() * dj.cos()
}

/// Partial derivatives of [`rastrigin_pair`] with respect to `yi` and `yj`.
pub fn rastrigin_pair_grad(yi: f64, yj: f64, xi: f64, xj: f64, c0: f64, c1: f64) -> (f64, f64) {
    let (di, dj) = (yi - xi, yj - xj);
    (
        2.0 * c0 * di + c1 * di.sin() * dj.cos(),
        2.0 * c0 * dj + c1 * di.cos() * dj.sin(),
    )
}

/// One test function: optimum locations and the pairing pattern of every block.
#[derive(Clone, Debug, PartialEq)]
pub struct RastriginInstance {
    pub n: usize,
    pub x: Vec<f64>,
    pub k: Vec<u8>,
    pub c0: f64,
    pub c1: f64,
}

/// The two pairs of block `i` under pattern `k`.
pub fn block_pairs(i: usize, k: u8) -> [(usize, usize); 2] {
    let k = k as usize;
    [(4 * i, 4 * i + k), (4 * i + 3, 4 * i + 3 - k)]
}

impl RastriginInstance {
    pub fn new(x: Vec<f64>, k: Vec<u8>) -> Result<Self> {
        let n = x.len();
        if n == 0 || n % 4 != 0 {
            return Err(SpfError::Precondition(format!("n = {n} is not a positive multiple of 4")));
        }
        if k.len() != n / 4 || k.iter().any(|&ki| ki != 1 && ki != 2) {
            return Err(SpfError::Precondition("one pattern k ∈ {1, 2} per block".into()));
        }
        Ok(Self {
            n,
            x,
            k,
            c0: C0,
            c1: C1,
        })
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.k
            .iter()
            .enumerate()
            .flat_map(|(i, &k)| block_pairs(i, k))
            .collect()
    }

    /// Index of the variable paired with `i`.
    pub fn partner(&self, i: usize) -> usize {
        let k = self.k[i / 4] as usize;
        let base = i - i % 4;
        match i % 4 {
            0 => base + k,
            3 => base + 3 - k,
            1 if k == 1 => base,
            1 => base + 3,
            2 if k == 1 => base + 3,
            _ => base,
        }
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        self.pairs()
            .iter()
            .map(|&(a, b)| rastrigin_pair(y[a], y[b], self.x[a], self.x[b], self.c0, self.c1))
            .sum()
    }

    pub fn value_grad(&self, y: &[f64], grad: &mut [f64]) -> f64 {
        let mut f = 0.0;
        for (a, b) in self.pairs() {
            let (ga, gb) = rastrigin_pair_grad(y[a], y[b], self.x[a], self.x[b], self.c0, self.c1);
            grad[a] = ga;
            grad[b] = gb;
            f += rastrigin_pair(y[a], y[b], self.x[a], self.x[b], self.c0, self.c1);
        }
        f
    }

    /// Parameters of a `rastrigin-restricted` leaf over the given variable indices.
    pub fn restricted_params(&self, scope: &[usize]) -> Vec<f64> {
        let mut p = vec![self.c0, self.c1, self.n as f64, scope.len() as f64];
        p.extend(scope.iter().map(|&i| i as f64));
        p.extend(self.k.iter().map(|&k| f64::from(k)));
        p.extend_from_slice(&self.x);
        p
    }

    /// Flattened parameters: the optimum vector followed by the block patterns.
    pub fn features(&self) -> Vec<f64> {
        let mut f = self.x.clone();
        f.extend(self.k.iter().map(|&k| f64::from(k)));
        f
    }
}

/// Samples a pattern per block and optimum locations near the line `Y_i = Y_j` for every pair.
pub fn build_instance<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<RastriginInstance> {
    if n == 0 || n % 4 != 0 {
        return Err(SpfError::Precondition(format!("n = {n} is not a positive multiple of 4")));
    }
    let noise = Normal::new(0.0, NOISE).expect("valid normal");
    let mut x = vec![0.0; n];
    let mut k = Vec::with_capacity(n / 4);
    for i in 0..n / 4 {
        let ki = if rng.random_bool(0.5) { 1 } else { 2 };
        k.push(ki);
        for (a, b) in block_pairs(i, ki) {
            let s: f64 = rng.random_range(-1.0..1.0);
            x[a] = s + noise.sample(rng);
            x[b] = s + noise.sample(rng);
        }
    }
    RastriginInstance::new(x, k)
}

/// The full function `F_x` as an optimization objective.
pub struct FullFunction<'a> {
    pub instance: &'a RastriginInstance,
}

pub fn full_function(instance: &RastriginInstance) -> FullFunction<'_> {
    FullFunction { instance }
}

impl Objective for FullFunction<'_> {
    fn dim(&self) -> usize {
        self.instance.n
    }

    fn value(&self, y: &[f64]) -> f64 {
        self.instance.value(y)
    }

    fn value_grad(&self, y: &[f64], grad: &mut [f64]) -> f64 {
        self.instance.value_grad(y, grad)
    }
}

fn bad(msg: &str) -> SpfError {
    SpfError::Precondition(msg.to_string())
}

/// Registry family `rastrigin-pair` with parameters `xi, xj, c0, c1`.
pub struct RastriginPairFamily;

impl LeafFamily for RastriginPairFamily {
    fn name(&self) -> &str {
        "rastrigin-pair"
    }

    fn validate(&self, params: &[f64], scope: &[VarId], vars: &VariableTable) -> Result<()> {
        require_continuous(scope, vars)?;
        if scope.len() != 2 || params.len() != 4 || params.iter().any(|p| !p.is_finite()) {
            return Err(bad("rastrigin-pair takes 2 variables and parameters xi, xj, c0, c1"));
        }
        Ok(())
    }

    fn eval(&self, p: &[f64], y: &[f64]) -> f64 {
        rastrigin_pair(y[0], y[1], p[0], p[1], p[2], p[3])
    }

    fn gradient(&self, p: &[f64], y: &[f64], grad: &mut [f64]) -> Option<f64> {
        let (gi, gj) = rastrigin_pair_grad(y[0], y[1], p[0], p[1], p[2], p[3]);
        grad[0] = gi;
        grad[1] = gj;
        Some(self.eval(p, y))
    }
}

/// Registry family `rastrigin-restricted`: the pair terms of one instance that touch the leaf's
/// variables, with variables outside the leaf fixed at `0`.
///
/// Parameters: `c0, c1, n, s, idx_0..idx_(s-1), k_0..k_(n/4-1), x_0..x_(n-1)` where `idx` are the
/// instance indices of the scope variables in scope order.
pub struct RastriginRestrictedFamily;

struct Restricted<'a> {
    c0: f64,
    c1: f64,
    idx: Vec<usize>,
    k: &'a [f64],
    x: &'a [f64],
}

impl RastriginRestrictedFamily {
    fn parse(p: &[f64]) -> Option<Restricted<'_>> {
        let n = *p.get(2)? as usize;
        let s = *p.get(3)? as usize;
        if n == 0 || n % 4 != 0 || p.len() != 4 + s + n / 4 + n {
            return None;
        }
        let idx: Vec<usize> = p[4..4 + s].iter().map(|&i| i as usize).collect();
        if idx.iter().any(|&i| i >= n) {
            return None;
        }
        let k = &p[4 + s..4 + s + n / 4];
        if k.iter().any(|&ki| ki != 1.0 && ki != 2.0) {
            return None;
        }
        Some(Restricted {
            c0: p[0],
            c1: p[1],
            idx,
            k,
            x: &p[4 + s + n / 4..],
        })
    }

    fn terms(r: &Restricted<'_>) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, &k) in r.k.iter().enumerate() {
            for (a, b) in block_pairs(i, k as u8) {
                if r.idx.contains(&a) || r.idx.contains(&b) {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

impl LeafFamily for RastriginRestrictedFamily {
    fn name(&self) -> &str {
        "rastrigin-restricted"
    }

    fn validate(&self, params: &[f64], scope: &[VarId], vars: &VariableTable) -> Result<()> {
        require_continuous(scope, vars)?;
        match Self::parse(params) {
            Some(r) if r.idx.len() == scope.len() => Ok(()),
            _ => Err(bad("malformed rastrigin-restricted parameters")),
        }
    }

    fn eval(&self, p: &[f64], y: &[f64]) -> f64 {
        let Some(r) = Self::parse(p) else {
            return f64::NAN;
        };
        let at = |i: usize| r.idx.iter().position(|&j| j == i).map_or(0.0, |pos| y[pos]);
        Self::terms(&r)
            .into_iter()
            .map(|(a, b)| rastrigin_pair(at(a), at(b), r.x[a], r.x[b], r.c0, r.c1))
            .sum()
    }

    fn gradient(&self, p: &[f64], y: &[f64], grad: &mut [f64]) -> Option<f64> {
        let r = Self::parse(p)?;
        let pos = |i: usize| r.idx.iter().position(|&j| j == i);
        let at = |i: usize| pos(i).map_or(0.0, |q| y[q]);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut f = 0.0;
        for (a, b) in Self::terms(&r) {
            let (ya, yb) = (at(a), at(b));
            let (ga, gb) = rastrigin_pair_grad(ya, yb, r.x[a], r.x[b], r.c0, r.c1);
            if let Some(q) = pos(a) {
                grad[q] += ga;
            }
            if let Some(q) = pos(b) {
                grad[q] += gb;
            }
            f += rastrigin_pair(ya, yb, r.x[a], r.x[b], r.c0, r.c1);
        }
        Some(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn pair_examples() {
        assert_eq!(rastrigin_pair(0.3, -0.2, 0.3, -0.2, C0, C1), 0.0);
        let v = rastrigin_pair(PI, PI, 0.0, 0.0, C0, C1);
        assert!((v - 0.2 * PI * PI).abs() < 1e-12);
        assert!((v - 1.9739).abs() < 1e-4);
        assert_eq!(rastrigin_pair_grad(1.0, 2.0, 1.0, 2.0, C0, C1), (0.0, 0.0));
    }

    #[test]
    fn block_patterns() {
        assert_eq!(block_pairs(0, 1), [(0, 1), (3, 2)]);
        assert_eq!(block_pairs(0, 2), [(0, 2), (3, 1)]);
        let inst = RastriginInstance::new(vec![0.0; 8], vec![1, 2]).unwrap();
        for i in 0..8 {
            assert_eq!(inst.partner(inst.partner(i)), i);
            assert_ne!(inst.partner(i), i);
        }
        assert_eq!(inst.partner(5), 7);
    }

    #[test]
    fn instance_optimum_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inst = build_instance(12, &mut rng).unwrap();
        assert_eq!(inst.value(&inst.x), 0.0);
        assert!(build_instance(6, &mut rng).is_err());
    }

    #[test]
    fn restricted_true_pair_has_zero_minimum() {
        let inst = RastriginInstance::new(vec![0.5, -0.25, 0.75, 0.1], vec![1]).unwrap();
        let p = inst.restricted_params(&[0, 1]);
        let f = RastriginRestrictedFamily;
        assert_eq!(f.eval(&p, &[0.5, -0.25]), 0.0);
        // a scope splitting both pairs pays for the partners held at 0
        let q = inst.restricted_params(&[0, 2]);
        assert!(f.eval(&q, &[0.5, 0.75]) > 0.0);
    }

    #[test]
    fn sixteen_restarts_find_the_pair_minimum() {
        use crate::optimize::{multistart_descent, DescentConfig, FnObjective};
        let mut hits = 0;
        for seed in 0..200u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (xi, xj): (f64, f64) = (rng.random_range(-1.1..1.1), rng.random_range(-1.1..1.1));
            let obj = FnObjective {
                dim: 2,
                f: |y: &[f64]| rastrigin_pair(y[0], y[1], xi, xj, C0, C1),
                g: |y: &[f64], g: &mut [f64]| {
                    let (a, b) = rastrigin_pair_grad(y[0], y[1], xi, xj, C0, C1);
                    g[0] = a;
                    g[1] = b;
                    rastrigin_pair(y[0], y[1], xi, xj, C0, C1)
                },
            };
            let r = multistart_descent(&obj, &[BOX, BOX], 16, None, &DescentConfig::default(), &mut rng);
            if r.value.abs() < 1e-3 {
                hits += 1;
            }
        }
        eprintln!("16-restart pair minimum found for {hits}/200 seeds");
        assert!(hits >= 190, "{hits}/200");
    }
}
