//! Compatibility counts, posteriors and strategy optimality against an
//! independent enumeration written here.

use num_bigint::BigUint;
use num_rational::BigRational;
use orthosub::adversary::{
    best_answer, brute_force_compatible, count_compatible, exact_success_probability, factorial, posterior_success,
    query_budget, surviving_orthogonal, QueryTranscript, SpreadQueries, SuccessBoundChain,
};
use orthosub::experiment::trial_rng;
use orthosub::{Oracle, PromiseFunction};
use rand::seq::SliceRandom;
use rand::Rng;

fn parity(a: u32, b: u32) -> u32 {
    (a & b).count_ones() & 1
}

fn permutations(items: &mut Vec<u32>, k: usize, out: &mut Vec<Vec<u32>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

// Every promise function as (s, table), built by assigning distinct values
// to the pairs {x, x ^ s}.
fn all_functions(n: usize) -> Vec<(u32, Vec<u32>)> {
    let size = 1u32 << n;
    let mut perms = Vec::new();
    permutations(&mut (0..size / 2).collect(), 0, &mut perms);
    let mut out = Vec::new();
    for s in 1..size {
        let reps: Vec<u32> = (0..size).filter(|&x| x < (x ^ s)).collect();
        for perm in &perms {
            let mut table = vec![0; size as usize];
            for (&r, &v) in reps.iter().zip(perm) {
                table[r as usize] = v;
                table[(r ^ s) as usize] = v;
            }
            out.push((s, table));
        }
    }
    out
}

fn consistent<'a>(
    functions: &'a [(u32, Vec<u32>)],
    pairs: &'a [(u32, u32)],
) -> impl Iterator<Item = &'a (u32, Vec<u32>)> + 'a {
    functions
        .iter()
        .filter(move |(_, t)| pairs.iter().all(|&(x, y)| t[x as usize] == y))
}

// Ordered query tuples of length k with distinct points, up to order.
fn query_sets(n: usize, k: usize) -> Vec<Vec<u32>> {
    fn go(start: u32, size: u32, k: usize, acc: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if acc.len() == k {
            out.push(acc.clone());
            return;
        }
        for x in start..size {
            acc.push(x);
            go(x + 1, size, k, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    go(0, 1 << n, k, &mut Vec::new(), &mut out);
    out
}

// Distinct answer tuples (collision free).
fn answer_tuples(n: usize, k: usize) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::new();
        for prefix in &out {
            for y in 0..1u32 << (n - 1) {
                if !prefix.contains(&y) {
                    let mut t = prefix.clone();
                    t.push(y);
                    next.push(t);
                }
            }
        }
        out = next;
    }
    out
}

fn check_transcript(functions: &[(u32, Vec<u32>)], n: usize, pairs: &[(u32, u32)]) {
    let transcript = QueryTranscript::from_pairs(n, pairs).unwrap();
    let k = pairs.len() as u64;
    let mut w = std::collections::BTreeSet::new();
    for (i, a) in pairs.iter().enumerate() {
        for b in &pairs[i + 1..] {
            w.insert(a.0 ^ b.0);
        }
    }
    let m = w.len() as u64;
    assert_eq!(transcript.m() as u64, m);

    let mut per_shift = vec![0u64; 1 << n];
    for (s, _) in consistent(functions, pairs) {
        per_shift[*s as usize] += 1;
    }
    let total: u64 = per_shift.iter().sum();
    let report = count_compatible(&transcript).unwrap();
    let formula = BigUint::from((1u64 << n) - m - 1) * factorial((1u64 << (n - 1)) - k);
    assert_eq!(report.total_functions, formula);
    assert_eq!(report.total_functions, BigUint::from(total), "pairs {pairs:?}");

    let brute = brute_force_compatible(&transcript).unwrap();
    assert_eq!(brute.total, total);
    let per = factorial((1u64 << (n - 1)) - k);
    for s in 1..1u32 << n {
        let expected = if w.contains(&s) { BigUint::from(0u32) } else { per.clone() };
        assert_eq!(BigUint::from(per_shift[s as usize]), expected, "s = {s}");
        assert_eq!(brute.per_shift[&s], per_shift[s as usize]);
    }
    assert!(brute.is_flat());
}

#[test]
fn formula_matches_enumeration_exhaustively() {
    for n in 2..=3 {
        let functions = all_functions(n);
        for k in 0..=3 {
            for queries in query_sets(n, k) {
                for answers in answer_tuples(n, k) {
                    let pairs: Vec<(u32, u32)> = queries.iter().copied().zip(answers).collect();
                    check_transcript(&functions, n, &pairs);
                }
            }
        }
    }
}

#[test]
fn formula_matches_enumeration_on_random_four_bit_transcripts() {
    let functions = all_functions(4);
    assert_eq!(functions.len(), 15 * 40320);
    let mut rng = trial_rng(17, 0);
    let mut checked = 0;
    while checked < 100 {
        let f = PromiseFunction::sample_uniform(4, &mut rng).unwrap();
        let k = rng.gen_range(1..=5);
        let mut points: Vec<u32> = (0..16).collect();
        points.shuffle(&mut rng);
        let pairs: Vec<(u32, u32)> = points[..k].iter().map(|&x| (x, f.evaluate(x))).collect();
        let mut answers: Vec<u32> = pairs.iter().map(|p| p.1).collect();
        answers.sort_unstable();
        answers.dedup();
        if answers.len() < k {
            continue;
        }
        check_transcript(&functions, 4, &pairs);
        checked += 1;
    }
}

#[test]
fn random_transcripts_against_the_formula() {
    let mut rng = trial_rng(18, 0);
    for _ in 0..1000 {
        let n = rng.gen_range(2..=12);
        let f = PromiseFunction::sample_uniform(n, &mut rng).unwrap();
        let k = rng.gen_range(0..=(1usize << (n - 1)).min(12));
        let mut points: Vec<u32> = (0..1u32 << n).collect();
        points.shuffle(&mut rng);
        let t = QueryTranscript::from_queries(&f, &points[..k]).unwrap();
        if t.event_e() {
            assert!(count_compatible(&t).is_err());
            assert_eq!(t.revealed_shift(), Some(f.hidden_shift()));
            continue;
        }
        let report = count_compatible(&t).unwrap();
        let m = t.m() as u64;
        assert_eq!(report.compatible_shifts, BigUint::from((1u64 << n) - m - 1));
        assert_eq!(report.functions_per_shift, factorial((1u64 << (n - 1)) - k as u64));
        assert!(t.is_compatible(f.hidden_shift()));
    }
}

#[test]
fn posterior_matches_surviving_count() {
    let mut rng = trial_rng(19, 0);
    for n in 2..=3 {
        for _ in 0..40 {
            let f = PromiseFunction::sample_uniform(n, &mut rng).unwrap();
            let k = rng.gen_range(0..=3);
            let mut points: Vec<u32> = (0..1u32 << n).collect();
            points.shuffle(&mut rng);
            let t = QueryTranscript::from_queries(&f, &points[..k]).unwrap();
            if t.event_e() {
                continue;
            }
            let denom = (1u64 << n) - 1 - t.m() as u64;
            for z in 1..1u32 << n {
                let b = surviving_orthogonal(&t, z);
                let direct = (1..1u32 << n)
                    .filter(|&u| parity(u, z) == 0 && !t.differences().contains(&u))
                    .count() as u64;
                assert_eq!(b, direct);
                assert_eq!(
                    posterior_success(&t, z).unwrap(),
                    BigRational::new(b.into(), denom.into())
                );
            }
            let (z, b) = best_answer(&t);
            assert_eq!(b, (1..1u32 << n).map(|z| surviving_orthogonal(&t, z)).max().unwrap());
            assert_eq!(surviving_orthogonal(&t, z), b);
        }
    }
}

// Best achievable number of correctly answered functions from the set
// `live`, with `left` adaptive queries still allowed.
fn best_tree(n: usize, functions: &[(u32, Vec<u32>)], live: &[usize], asked: &[u32], left: usize) -> u64 {
    let answer_now = (1..1u32 << n)
        .map(|z| live.iter().filter(|&&i| parity(z, functions[i].0) == 0).count() as u64)
        .max()
        .unwrap();
    if left == 0 {
        return answer_now;
    }
    let mut best = answer_now;
    for x in 0..1u32 << n {
        if asked.contains(&x) {
            continue;
        }
        let mut split: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
        for &i in live {
            split.entry(functions[i].1[x as usize]).or_default().push(i);
        }
        let mut next = asked.to_vec();
        next.push(x);
        let value: u64 = split.values().map(|part| best_tree(n, functions, part, &next, left - 1)).sum();
        best = best.max(value);
    }
    best
}

#[test]
fn no_decision_tree_beats_the_spread_strategy() {
    for n in 2..=3 {
        let functions = all_functions(n);
        let everyone: Vec<usize> = (0..functions.len()).collect();
        for k in 0..=2 {
            let optimum = best_tree(n, &functions, &everyone, &[], k);
            let optimum = BigRational::new(optimum.into(), (functions.len() as u64).into());
            let spread = exact_success_probability(&SpreadQueries::new(n, k).unwrap(), n, k).unwrap();
            assert_eq!(spread, optimum, "n = {n}, k = {k}");
        }
    }
    let third = BigRational::new(1.into(), 3.into());
    for k in 0..=1 {
        assert_eq!(exact_success_probability(&SpreadQueries::new(2, k).unwrap(), 2, k).unwrap(), third);
    }
}

#[test]
fn success_bound_chain_holds_at_the_budget() {
    for n in 3..=15 {
        let k = query_budget(n);
        assert!(k.pow(3) <= 1 << n && (k + 1).pow(3) > 1 << n);
        let spread = SpreadQueries::new(n, k as usize).unwrap();
        let m_spread = QueryTranscript::from_pairs(
            n,
            &spread.queries().iter().enumerate().map(|(i, &x)| (x, i as u32)).collect::<Vec<_>>(),
        )
        .unwrap()
        .m() as u64;
        for m in [0, m_spread, k * (k - 1) / 2] {
            let chain = SuccessBoundChain::new(n, k, m);
            assert!(chain.holds, "n = {n}, k = {k}, m = {m}");
            assert!(chain.best_ratio < chain.quadratic);
            assert!(chain.quadratic <= chain.budget * (1.0 + 1e-12));
            assert!(chain.normalized <= chain.ceiling);
        }
    }
}
