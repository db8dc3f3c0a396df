use proptest::prelude::*;

use qnnae_core::dataio::{split_indices, Dataset, SplitSpec};
use qnnae_core::pqm::{retrieve_analytic, retrieve_exact_from_circuit, BitString, PatternMemory};
use qnnae_core::qnnae::{score, PerformanceVector};
use qnnae_core::qsim::StateVector;

fn bits(n: usize) -> impl Strategy<Value = Vec<bool>> {
    proptest::collection::vec(any::<bool>(), n)
}

/// (patterns, input) with n ∈ [1, 6] and p ∈ [1, 8].
fn memory_case() -> impl Strategy<Value = (Vec<Vec<bool>>, Vec<bool>)> {
    (1usize..=6).prop_flat_map(|n| (proptest::collection::vec(bits(n), 1..=8), bits(n)))
}

fn to_memory(patterns: &[Vec<bool>]) -> PatternMemory {
    PatternMemory::new(patterns.iter().map(|p| BitString::new(p.clone()).unwrap()).collect()).unwrap()
}

fn perf(bits: Vec<bool>) -> PerformanceVector {
    PerformanceVector {
        bits: BitString::new(bits).unwrap(),
        source_weight_index: 0,
    }
}

#[derive(Debug, Clone)]
enum Gate {
    H(usize),
    X(usize),
    Cnot(usize, usize),
    Toffoli(usize, usize, usize),
    Phase(usize, f64, bool),
}

fn gate(n: usize) -> impl Strategy<Value = Gate> {
    prop_oneof![
        (0..n).prop_map(Gate::H),
        (0..n).prop_map(Gate::X),
        (0..n, 0..n).prop_map(|(a, b)| Gate::Cnot(a, b)),
        (0..n, 0..n, 0..n).prop_map(|(a, b, c)| Gate::Toffoli(a, b, c)),
        (0..n, -3.2f64..3.2, any::<bool>()).prop_map(|(q, t, v)| Gate::Phase(q, t, v)),
    ]
}

fn apply(state: &mut StateVector, g: &Gate) {
    // repeated-index gates are rejected by the simulator; skip them
    let _ = match *g {
        Gate::H(q) => state.hadamard(q),
        Gate::X(q) => state.x(q),
        Gate::Cnot(a, b) => state.cnot(a, b),
        Gate::Toffoli(a, b, c) => state.toffoli(a, b, c),
        Gate::Phase(q, t, v) => state.phase(q, t, v, None),
    };
}

fn undo(state: &mut StateVector, g: &Gate) {
    match *g {
        Gate::Phase(q, t, v) => {
            let _ = state.phase(q, -t, v, None);
        }
        _ => apply(state, g),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn circuit_agrees_with_closed_form((patterns, input) in memory_case()) {
        let memory = to_memory(&patterns);
        let input = BitString::new(input).unwrap();
        let analytic = retrieve_analytic(&memory, &input).unwrap();
        let circuit = retrieve_exact_from_circuit(&memory, &input).unwrap();
        prop_assert!((analytic.p0 - circuit.p0).abs() <= 1e-9);
        prop_assert!((analytic.p1 - circuit.p1).abs() <= 1e-9);
    }

    #[test]
    fn outcome_probabilities_sum_to_one((patterns, input) in memory_case()) {
        let o = retrieve_analytic(&to_memory(&patterns), &BitString::new(input).unwrap()).unwrap();
        prop_assert!((o.p0 + o.p1 - 1.0).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&o.p0));
    }

    #[test]
    fn bit_permutation_leaves_outcome_unchanged(
        (patterns, input) in memory_case(),
        seed in any::<u64>(),
    ) {
        let n = input.len();
        let mut perm: Vec<usize> = (0..n).collect();
        // Fisher–Yates driven by a simple LCG so the permutation is a function of `seed`
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let permute = |b: &Vec<bool>| perm.iter().map(|&k| b[k]).collect::<Vec<bool>>();
        let before = retrieve_analytic(&to_memory(&patterns), &BitString::new(input.clone()).unwrap()).unwrap();
        let permuted: Vec<Vec<bool>> = patterns.iter().map(permute).collect();
        let after = retrieve_analytic(&to_memory(&permuted), &BitString::new(permute(&input)).unwrap()).unwrap();
        prop_assert!((before.p0 - after.p0).abs() <= 1e-12);
    }

    #[test]
    fn duplicating_every_pattern_changes_nothing((patterns, input) in memory_case()) {
        let input = BitString::new(input).unwrap();
        let once = retrieve_analytic(&to_memory(&patterns), &input).unwrap();
        let doubled: Vec<Vec<bool>> = patterns.iter().chain(patterns.iter()).cloned().collect();
        let twice = retrieve_analytic(&to_memory(&doubled), &input).unwrap();
        prop_assert!((once.p0 - twice.p0).abs() <= 1e-12);
        let c1 = retrieve_exact_from_circuit(&to_memory(&doubled), &input).unwrap();
        prop_assert!((c1.p0 - once.p0).abs() <= 1e-9);
    }

    #[test]
    fn gates_preserve_norm_and_invert(
        seed in any::<u64>(),
        gates in proptest::collection::vec(gate(4), 1..40),
    ) {
        let mut state = StateVector::zero(4).unwrap();
        // spread amplitude across the register first
        for q in 0..4 {
            state.hadamard(q).unwrap();
            state.phase(q, (seed >> (8 * q)) as u8 as f64 / 40.0, true, None).unwrap();
        }
        let start = state.clone();
        for g in &gates {
            apply(&mut state, g);
            prop_assert!((state.norm_sqr() - 1.0).abs() <= 1e-10);
        }
        for g in gates.iter().rev() {
            undo(&mut state, g);
        }
        for (a, b) in state.amplitudes().iter().zip(start.amplitudes()) {
            prop_assert!((a - b).norm() <= 1e-10);
        }
    }

    #[test]
    fn oracle_permutes_amplitudes(table in proptest::collection::vec(any::<bool>(), 8), seed in 0u64..1000) {
        let mut state = StateVector::zero(4).unwrap();
        for q in 0..4 {
            state.hadamard(q).unwrap();
            state.phase(q, seed as f64 * 0.001 * (q + 1) as f64, true, None).unwrap();
        }
        let mut before: Vec<(u64, u64)> = state.amplitudes().iter().map(|a| (a.re.to_bits(), a.im.to_bits())).collect();
        state.oracle(|x| table[x as usize], &[3, 0, 2], 1).unwrap();
        let mut after: Vec<(u64, u64)> = state.amplitudes().iter().map(|a| (a.re.to_bits(), a.im.to_bits())).collect();
        before.sort_unstable();
        after.sort_unstable();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn score_bounds(vectors in (1usize..12).prop_flat_map(|ts| proptest::collection::vec(bits(ts), 1..10))) {
        let perfs: Vec<PerformanceVector> = vectors.iter().cloned().map(perf).collect();
        let s = score(&perfs).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        let all_ones = vectors.iter().all(|v| v.iter().all(|&b| b));
        let all_zeros = vectors.iter().all(|v| v.iter().all(|&b| !b));
        prop_assert_eq!(s == 1.0, all_ones);
        prop_assert_eq!(s.abs() < 1e-15, all_zeros);
    }

    #[test]
    fn dominating_vector_never_lowers_score(
        vectors in (1usize..12).prop_flat_map(|ts| proptest::collection::vec(bits(ts), 1..10)),
        which in any::<prop::sample::Index>(),
        flips in any::<u64>(),
    ) {
        let mut perfs: Vec<PerformanceVector> = vectors.iter().cloned().map(perf).collect();
        let before = score(&perfs).unwrap();
        let k = which.index(perfs.len());
        let raised: Vec<bool> = vectors[k]
            .iter()
            .enumerate()
            .map(|(j, &b)| b || (flips >> (j % 64)) & 1 == 1)
            .collect();
        perfs[k] = perf(raised);
        prop_assert!(score(&perfs).unwrap() >= before);
    }

    #[test]
    fn split_is_an_order_stable_partition(
        labels in proptest::collection::vec(0usize..3, 12..80),
        fraction in 0.1f64..0.9,
        seed in any::<u64>(),
        stratified in any::<bool>(),
    ) {
        let rows: Vec<Vec<f64>> = (0..labels.len()).map(|i| vec![i as f64]).collect();
        let ds = Dataset::from_rows("p", &rows, labels.clone(), 3).unwrap();
        let spec = SplitSpec { train_fraction: fraction, seed, stratified };
        let Ok(idx) = split_indices(&ds, &spec) else { return Ok(()); };
        let n = labels.len();
        prop_assert_eq!(idx.train.len(), (fraction * n as f64).round() as usize);
        prop_assert!(idx.train.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(idx.validation.windows(2).all(|w| w[0] < w[1]));
        let mut all: Vec<usize> = idx.train.iter().chain(&idx.validation).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        if stratified {
            for c in 0..3 {
                let total = labels.iter().filter(|&&l| l == c).count();
                let picked = idx.train.iter().filter(|&&i| labels[i] == c).count();
                let expected = fraction * total as f64;
                prop_assert!((picked as f64 - expected).abs() <= 1.0 + 1e-9,
                    "class {} picked {} expected {}", c, picked, expected);
                if total > 0 {
                    prop_assert!(picked >= 1);
                }
            }
        }
    }
}
