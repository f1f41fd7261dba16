use std::collections::BTreeSet;

use num_bigint::BigUint;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::apps::{augment_selective, mpe};
use crate::bench::{build_instance, generate_dataset};
use crate::engine::{make_deterministic_decomposable, sum_spf, ChildOrder, EngineConfig, VariableHeuristic};
use crate::graph::{compatible, json, DEFAULT_ENUMERATION_LIMIT};
use crate::learn::{learn_spf, spearman, LearnConfig, LeafStrategy};
use crate::summation::{extract_argument, set_evidence, sum_decomposable, sum_decomposable_with, SumOptions};
use crate::translate::{translate, TranslateOptions};
use crate::{Assignment, GraphBuilder, NodeId, Semiring, SpfError, SpfGraph, Value, VarId, VarValue, VariableTable};

fn leaf_value(s: Semiring, r: &mut ChaCha8Rng) -> Value {
    match s {
        Semiring::Boolean => Value::Bool(r.random_bool(0.6)),
        Semiring::Counting => Value::nat(r.random_range(0..4)),
        Semiring::SumProduct | Semiring::MaxProduct => Value::Real(r.random_range(0.0..2.0)),
        Semiring::MaxSum | Semiring::MinSum => Value::Real(r.random_range(-3.0..3.0)),
        Semiring::Fuzzy => Value::Real(r.random_range(0.0..1.0)),
        Semiring::WeightedCsp => Value::Real(r.random_range(0.0..3.0)),
    }
}

/// Random DAG over `n` variables of cardinality 2 or 3, built bottom-up from a pool so that
/// subgraphs are shared. Products only combine disjoint scopes when `decomposable` is set.
fn random_graph(seed: u64, s: Semiring, n: usize, decomposable: bool) -> SpfGraph {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut vars = VariableTable::new();
    for i in 0..n {
        vars.add_finite(&format!("x{i}"), r.random_range(2..=3)).unwrap();
    }
    let cards: Vec<usize> = vars.iter().map(|(_, v)| v.domain.cardinality().unwrap()).collect();
    let mut b = GraphBuilder::new(s, vars);
    let mut pool: Vec<(NodeId, BTreeSet<usize>)> = Vec::new();
    for _ in 0..n + 2 {
        let v = r.random_range(0..n);
        let (id, scope) = if r.random_bool(0.3) {
            (b.indicator(VarId(v), r.random_range(0..cards[v])), BTreeSet::from([v]))
        } else if r.random_bool(0.5) || n == 1 {
            let t = (0..cards[v]).map(|_| leaf_value(s, &mut r)).collect();
            (b.table(&[VarId(v)], t), BTreeSet::from([v]))
        } else {
            let w = (v + 1 + r.random_range(0..n - 1)) % n;
            let (a, c) = (v.min(w), v.max(w));
            let t = (0..cards[a] * cards[c]).map(|_| leaf_value(s, &mut r)).collect();
            (b.table(&[VarId(a), VarId(c)], t), BTreeSet::from([a, c]))
        };
        pool.push((id, scope));
    }
    if r.random_bool(0.3) {
        let c = leaf_value(s, &mut r);
        pool.push((b.constant(c), BTreeSet::new()));
    }
    let mut last = pool.last().unwrap().0;
    for _ in 0..r.random_range(2..8) {
        let want = r.random_range(2..=3);
        let mut order: Vec<usize> = (0..pool.len()).collect();
        order.shuffle(&mut r);
        let is_sum = r.random_bool(0.5);
        let mut children = Vec::new();
        let mut scope = BTreeSet::new();
        for i in order {
            if children.len() == want {
                break;
            }
            let (id, sc) = &pool[i];
            if !is_sum && decomposable && !scope.is_disjoint(sc) {
                continue;
            }
            children.push(*id);
            scope.extend(sc.iter().copied());
        }
        if children.len() < 2 {
            continue;
        }
        last = if is_sum { b.sum(children) } else { b.product(children) };
        pool.push((last, scope));
    }
    b.build(last).unwrap()
}

fn cards(g: &SpfGraph) -> Vec<usize> {
    g.vars().iter().map(|(_, v)| v.domain.cardinality().unwrap()).collect()
}

fn for_each_full(cards: &[usize], mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0; cards.len()];
    loop {
        f(&idx);
        let mut k = 0;
        loop {
            if k == cards.len() {
                return;
            }
            idx[k] += 1;
            if idx[k] < cards[k] {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn brute_sum(g: &SpfGraph) -> Value {
    let s = g.semiring();
    let mut acc = s.zero();
    for_each_full(&cards(g), |idx| {
        acc = s.add(&acc, &g.evaluate(&Assignment::from_indices(idx)).unwrap()).unwrap();
    });
    acc
}

fn random_partial(seed: u64, g: &SpfGraph) -> Assignment {
    let mut r = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut a = Assignment::empty(g.vars().len());
    for (v, c) in g.vars().ids().zip(cards(g)) {
        if r.random_bool(0.4) {
            a.set(v, VarValue::Index(r.random_range(0..c)));
        }
    }
    a
}

fn agrees(a: &Assignment, idx: &[usize]) -> bool {
    a.assigned().all(|(v, x)| x.index() == Some(idx[v.0]))
}

fn semiring() -> impl Strategy<Value = Semiring> {
    proptest::sample::select(Semiring::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sum_of_ones_is_a_fold(s in semiring(), k in 1u64..100) {
        let mut acc = s.zero();
        for _ in 0..k {
            acc = s.add(&acc, &s.one()).unwrap();
        }
        prop_assert!(s.sum_of_ones(&BigUint::from(k)).unwrap().approx_eq(&acc));
    }

    #[test]
    fn evaluation_visits_every_node_once(seed: u64, s in semiring(), n in 1usize..6) {
        let g = random_graph(seed, s, n, false);
        let idx: Vec<usize> = cards(&g).iter().map(|c| (seed as usize) % c).collect();
        let (_, visits) = g.evaluate_counted(&Assignment::from_indices(&idx)).unwrap();
        prop_assert_eq!(visits, g.node_count());
    }

    #[test]
    fn simplify_agrees_with_evaluation(seed: u64, s in semiring(), n in 1usize..6) {
        let g = random_graph(seed, s, n, false);
        let empty = g.simplify(&Assignment::empty(n)).unwrap();
        prop_assert!(compatible(&g, &empty, DEFAULT_ENUMERATION_LIMIT).unwrap());
        let a = random_partial(seed, &g);
        let h = g.simplify(&a).unwrap();
        let mut ok = true;
        for_each_full(&cards(&g), |idx| {
            if agrees(&a, idx) {
                let x = Assignment::from_indices(idx);
                ok &= h.evaluate(&x).unwrap().approx_eq(&g.evaluate(&x).unwrap());
            }
        });
        prop_assert!(ok);
    }

    #[test]
    fn decomposable_sum_and_argument(seed: u64, s in semiring(), n in 1usize..7) {
        let g = random_graph(seed, s, n, true);
        prop_assert!(g.is_decomposable());
        let r = sum_decomposable(&g).unwrap();
        prop_assert!(r.value.approx_eq(&brute_sum(&g)));
        if s == Semiring::Boolean && s.is_zero(&r.root_value) {
            prop_assert!(matches!(extract_argument(&g, &r), Err(SpfError::NoWitness)));
        } else if s.is_idempotent() {
            let arg = extract_argument(&g, &r).unwrap();
            prop_assert!(g.evaluate(&arg).unwrap().approx_eq(&r.root_value));
        }
    }

    #[test]
    fn evidence_gives_the_marginal(seed: u64, n in 1usize..7, counting: bool) {
        let s = if counting { Semiring::Counting } else { Semiring::SumProduct };
        let g = random_graph(seed, s, n, true);
        let e = random_partial(seed, &g);
        let h = set_evidence(&g, &e).unwrap();
        let opts = SumOptions { fixed: e.assigned().map(|(v, _)| v).collect(), ..SumOptions::default() };
        let got = sum_decomposable_with(&h, &opts).unwrap().value;
        let mut want = s.zero();
        for_each_full(&cards(&g), |idx| {
            if agrees(&e, idx) {
                want = s.add(&want, &g.evaluate(&Assignment::from_indices(idx)).unwrap()).unwrap();
            }
        });
        prop_assert!(got.approx_eq(&want), "{} vs {}", got, want);
    }

    #[test]
    fn engine_ignores_heuristics(seed: u64, s in semiring(), n in 1usize..6) {
        let g = random_graph(seed, s, n, false);
        let want = brute_sum(&g);
        for variable_heuristic in [VariableHeuristic::MostShared, VariableHeuristic::FirstIndex] {
            for child_order in [ChildOrder::AbsorbingFirst, ChildOrder::Declaration] {
                let cfg = EngineConfig { variable_heuristic, child_order, ..EngineConfig::default() };
                let got = sum_spf(&g, &cfg).unwrap();
                prop_assert!(got.value.approx_eq(&want), "{:?}/{:?}: {} vs {}", variable_heuristic, child_order, got.value, want);
                prop_assert!(got.graph.is_decomposable());
            }
        }
    }

    #[test]
    fn deterministic_decomposable_form(seed: u64, n in 1usize..6) {
        let g = random_graph(seed, Semiring::Boolean, n, false);
        let dd = make_deterministic_decomposable(&g, &EngineConfig::default()).unwrap();
        prop_assert!(dd.is_decomposable());
        prop_assert!(dd.is_deterministic(DEFAULT_ENUMERATION_LIMIT).unwrap());
        prop_assert!(compatible(&g, &dd, DEFAULT_ENUMERATION_LIMIT).unwrap());
    }

    #[test]
    fn translation_only_relabels(seed: u64, n in 1usize..6) {
        let g = random_graph(seed, Semiring::Boolean, n, true);
        let h = translate(&g, Semiring::Counting, &TranslateOptions::unchecked()).unwrap();
        prop_assert_eq!(h.node_count(), g.node_count());
        prop_assert_eq!(h.size(), g.size());
        prop_assert_eq!(h.is_decomposable(), g.is_decomposable());
    }

    #[test]
    fn json_round_trip(seed: u64, s in semiring(), n in 1usize..6) {
        let g = random_graph(seed, s, n, false);
        let text = json::to_string(&g);
        let back = json::from_str(&text).unwrap();
        prop_assert_eq!(json::to_string(&back), text);
        prop_assert!(compatible(&g, &back, DEFAULT_ENUMERATION_LIMIT).unwrap());
    }

    #[test]
    fn mpe_never_exceeds_the_marginal(seed: u64, n in 1usize..6) {
        let spn = random_graph(seed, Semiring::SumProduct, n, true);
        let e = random_partial(seed, &spn);
        let m = mpe(&spn, &e).unwrap();
        let x = Assignment::from_indices(
            &(0..n).map(|i| m.state.index(VarId(i)).unwrap()).collect::<Vec<_>>(),
        );
        let p = spn.evaluate(&x).unwrap().to_f64();
        prop_assert!(m.value <= p * (1.0 + 1e-9) + 1e-12, "{} > {}", m.value, p);
        let aug = augment_selective(&spn).unwrap();
        prop_assert_eq!(aug.hidden.len(), spn.sum_count());
    }

    #[test]
    fn spearman_is_bounded_and_symmetric(a in proptest::collection::vec(-10.0f64..10.0, 3..30), seed: u64) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<f64> = a.iter().map(|x| if r.random_bool(0.5) { *x } else { r.random_range(-10.0..10.0) }).collect();
        let rho = spearman(&a, &b).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&rho));
        prop_assert!((rho - spearman(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn benchmark_functions_are_nonnegative(seed: u64, blocks in 1usize..5) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let inst = build_instance(4 * blocks, &mut r).unwrap();
        prop_assert_eq!(inst.value(&inst.x), 0.0);
        let y: Vec<f64> = (0..inst.n).map(|_| r.random_range(-5.12..5.12)).collect();
        prop_assert!(inst.value(&y) >= 0.0);
        let mut seen = vec![false; inst.n];
        for (a, b) in inst.pairs() {
            prop_assert!(!seen[a] && !seen[b]);
            seen[a] = true;
            seen[b] = true;
        }
        prop_assert!(seen.iter().all(|s| *s));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn learning_is_seeded_and_decomposable(seed: u64) {
        let (data, _) = generate_dataset(4, 80, seed, 0).unwrap();
        let cfg = LearnConfig { seed, ..LearnConfig::default() };
        let a = learn_spf(&data, &cfg, Semiring::MinSum, LeafStrategy::MeanQuadratic).unwrap();
        let b = learn_spf(&data, &cfg, Semiring::MinSum, LeafStrategy::MeanQuadratic).unwrap();
        prop_assert!(a.graph.is_decomposable());
        prop_assert_eq!(a.structure, b.structure);
        prop_assert_eq!(json::to_string(&a.graph), json::to_string(&b.graph));
    }
}
