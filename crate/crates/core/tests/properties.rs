use glbrown::free_process::{process_moment, ProcessEngine, TimedLetter, TimedWord};
use glbrown::harness::{fit_loglog, random_trace_polynomial};
use glbrown::linalg::random::{ginibre, random_unitary};
use glbrown::linalg::{build_basis, magic_project, magic_sandwich, ComplexMatrix, Sector, C64};
use glbrown::oracle::{nonnormality_witness, word_moment_recursive, EvalPoint};
use glbrown::sde::{path_rng, simulate_path, simulate_samples, Scheme, SimConfig, Stepper};
use glbrown::trace_poly::{
    build_intertwiner, finite_n_moment, generator_parts, limit_moment, semigroup_apply_with, Generator, Letter, Monomial,
    SemigroupOptions, Word,
};
use proptest::prelude::*;

fn stars(max_len: usize) -> impl Strategy<Value = Vec<bool>> {
    proptest::collection::vec(any::<bool>(), 1..=max_len)
}

fn letters(indices: u32, max_len: usize) -> impl Strategy<Value = Vec<Letter>> {
    proptest::collection::vec((1..=indices, any::<bool>()), 1..=max_len)
        .prop_map(|v| v.into_iter().map(|(j, s)| Letter::new(j, s)).collect())
}

fn timed(times: &'static [f64], max_len: usize) -> impl Strategy<Value = TimedWord> {
    proptest::collection::vec((0..times.len(), any::<bool>()), 1..=max_len).prop_map(move |v| TimedWord {
        letters: v.into_iter().map(|(k, star)| TimedLetter { time: times[k], star }).collect(),
    })
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * b.norm().max(1.0)
}

fn dense_in(gen: &Generator, order: &[Monomial]) -> Vec<Vec<C64>> {
    let d = order.len();
    let mut m = vec![vec![C64::new(0.0, 0.0); d]; d];
    let mut x = vec![C64::new(0.0, 0.0); d];
    let mut y = vec![C64::new(0.0, 0.0); d];
    for (k, mono) in order.iter().enumerate() {
        x.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        x[gen.position(mono).unwrap()] = C64::new(1.0, 0.0);
        gen.apply(&x, &mut y);
        for (i, row) in order.iter().enumerate() {
            m[i][k] = y[gen.position(row).unwrap()];
        }
    }
    m
}

fn matmul(a: &[Vec<C64>], b: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let d = a.len();
    (0..d).map(|i| (0..d).map(|k| (0..d).map(|l| a[i][l] * b[l][k]).sum()).collect()).collect()
}

#[test]
fn basis_is_orthonormal() {
    for n in 1..=16 {
        let gram = build_basis(n).unwrap().gram();
        for (i, row) in gram.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                let expect = if i == k { 1.0 } else { 0.0 };
                assert!((v - expect).norm() <= 1e-12, "N={n} ({i},{k}) = {v}");
            }
        }
    }
}

#[test]
fn finite_n_gap_scales_as_inverse_square() {
    let ns = [4usize, 8, 16, 32, 64];
    let cases = [("1 1", 1.0, 0.5), ("1 1 1* 1*", 0.5, 0.5), ("1 1* 1 1*", 2.0, 1.0), ("1 1 1", 2.0, 1.0), ("1 1 1*", 1.0, 0.5)];
    for (spec, r, s) in cases {
        let word = Word::parse(spec).unwrap();
        let limit = limit_moment(&word, &[1.0], r, s).unwrap();
        let gaps: Vec<f64> = ns.iter().map(|&n| (finite_n_moment(&word, &[1.0], r, s, n).unwrap() - limit).norm()).collect();
        let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        let fit = fit_loglog(&x, &gaps).unwrap();
        assert!(fit.within(-2.3, -1.7), "{spec} at ({r},{s}): slope {} gaps {gaps:?}", fit.slope);
    }
}

#[test]
fn increments_are_stationary() {
    let (t, h, paths) = (0.7, 0.4, 3000);
    let word = |m: &ComplexMatrix| m.matmul(m).tr_product(&m.adjoint());
    let late = SimConfig { r: 0.5, s: 1.0, n: 4, times: vec![t, t + h], dt: Some(1e-2), scheme: Scheme::Geometric, seed: 31, paths };
    let early = SimConfig { times: vec![h], seed: 32, ..late.clone() };
    let stats = |vals: Vec<C64>| {
        let m = vals.len() as f64;
        let mean: C64 = vals.iter().sum::<C64>() / m;
        let var = vals.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (m - 1.0);
        (mean, (var / m).sqrt())
    };
    let a = stats(
        (0..paths)
            .map(|i| {
                let p = simulate_path(&late, &mut path_rng(late.seed, i as u64)).unwrap();
                word(&p.increments.unwrap()[1].2)
            })
            .collect(),
    );
    let b = stats(
        (0..paths)
            .map(|i| word(&simulate_samples(&early, &mut path_rng(early.seed, i as u64)).unwrap().samples[0].1))
            .collect(),
    );
    let bound = 4.0 * (a.1 * a.1 + b.1 * b.1).sqrt();
    assert!((a.0 - b.0).norm() <= bound, "{} vs {} (bound {bound})", a.0, b.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn magic_formulas_are_basis_independent(seed in any::<u64>(), n in 2usize..=8) {
        let mut rng = path_rng(seed, 0);
        let basis = build_basis(n).unwrap();
        let rotated = basis.conjugated(&random_unitary(n, &mut rng)).unwrap();
        let a = ginibre(n, &mut rng);
        for sector in [Sector::Plus, Sector::Minus] {
            let d1 = magic_sandwich(&a, &basis, sector).unwrap().max_abs_diff(&magic_sandwich(&a, &rotated, sector).unwrap());
            let d2 = magic_project(&a, &basis, sector).unwrap().max_abs_diff(&magic_project(&a, &rotated, sector).unwrap());
            prop_assert!(d1 <= 1e-10 && d2 <= 1e-10, "{d1} {d2}");
        }
    }

    #[test]
    fn unitary_case_stays_unitary(seed in any::<u64>(), n in 2usize..=12, r in 0.1f64..3.0) {
        let mut stepper = Stepper::new(n, r, 0.0, Scheme::Geometric);
        let mut rng = path_rng(seed, 0);
        let mut b = ComplexMatrix::identity(n);
        for _ in 0..200 {
            stepper.advance(&mut b, 5e-3, &mut rng).unwrap();
        }
        prop_assert!(b.unitarity_defect() <= 1e-10);
    }

    #[test]
    fn witness_sign(r in 0.0f64..2.0, s in 0.0f64..2.0, t in 0.0f64..2.0) {
        let w = nonnormality_witness(&EvalPoint::new(r, s, t).unwrap()).unwrap();
        if s * t == 0.0 {
            prop_assert_eq!(w, 0.0);
        } else {
            prop_assert!(w > 0.0);
        }
    }

    #[test]
    fn intertwiner_preserves_degree(w in letters(2, 6), other in letters(2, 4), j in 1u32..=2) {
        let op = build_intertwiner(j, 0.7, 0.4).unwrap();
        let a = Word::new(w).unwrap();
        let b = Word::new(other).unwrap();
        for (m, _) in op.q(&a).terms() {
            prop_assert_eq!(m.degree(), a.len());
        }
        for (m, _) in op.r_pair(&a, &b).terms() {
            prop_assert_eq!(m.degree(), a.len() + b.len());
        }
    }

    #[test]
    fn intertwiners_commute(w in letters(2, 4), r in 0.0f64..2.0, s in 0.0f64..2.0) {
        let word = Word::new(w).unwrap();
        let seeds = [Monomial::single(word)];
        let parts = generator_parts(&[1.0, 1.0], r, s, None, 2, true).unwrap();
        let both = Generator::build(&seeds, &parts, 100_000).unwrap();
        let order = both.monomials().to_vec();
        let one = Generator::build(&order, &parts[..1], 100_000).unwrap();
        let two = Generator::build(&order, &parts[1..], 100_000).unwrap();
        prop_assert_eq!(one.dim(), order.len());
        prop_assert_eq!(two.dim(), order.len());
        let (d1, d2) = (dense_in(&one, &order), dense_in(&two, &order));
        let (ab, ba) = (matmul(&d1, &d2), matmul(&d2, &d1));
        let worst = ab.iter().flatten().zip(ba.iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(worst <= 1e-10, "{worst}");
    }

    #[test]
    fn limit_semigroup_is_multiplicative(seed in any::<u64>(), t1 in 0.1f64..1.5, t2 in 0.1f64..1.5) {
        let mut rng = path_rng(seed, 1);
        let p = random_trace_polynomial(&mut rng, 3, 2);
        let q = random_trace_polynomial(&mut rng, 3, 2);
        let opts = SemigroupOptions { factorize_limit: false, ..Default::default() };
        let times = [t1, t2];
        let pq = semigroup_apply_with(&p.mul(&q), &times, 0.6, 0.9, None, &opts).unwrap();
        let pv = semigroup_apply_with(&p, &times, 0.6, 0.9, None, &opts).unwrap();
        let qv = semigroup_apply_with(&q, &times, 0.6, 0.9, None, &opts).unwrap();
        prop_assert!(close(pq, pv * qv, 1e-9), "{pq} vs {}", pv * qv);
    }

    #[test]
    fn adjoint_word_gives_conjugate(w in letters(2, 6), r in 0.0f64..2.0, s in 0.0f64..2.0) {
        let word = Word::new(w).unwrap();
        let a = limit_moment(&word, &[0.8, 1.3], r, s).unwrap();
        let b = limit_moment(&word.adjoint(), &[0.8, 1.3], r, s).unwrap();
        prop_assert!(close(b, a.conj(), 1e-10));
        prop_assert!(a.im.abs() <= 1e-10);
    }

    #[test]
    fn single_time_matches_oracle(st in stars(6), t in 0.0f64..2.0, r in 0.0f64..2.0, s in 0.0f64..2.0) {
        let expect = word_moment_recursive(&st, &EvalPoint::new(r, s, t).unwrap()).unwrap();
        let mut engine = ProcessEngine::new(r, s).unwrap();
        prop_assert_eq!(engine.single_time(&st, t), expect);
        let m = process_moment(&TimedWord::single_time(t, &st).unwrap(), r, s).unwrap();
        prop_assert!((m.value.re - expect).abs() <= 1e-9 * expect.abs().max(1.0));
    }

    #[test]
    fn time_zero_letters_are_identity(w in timed(&[0.5, 1.2], 4), at in 0usize..5, star in any::<bool>()) {
        let base = process_moment(&w, 0.5, 1.5).unwrap().value;
        let mut letters = w.letters.clone();
        letters.insert(at.min(letters.len()), TimedLetter { time: 0.0, star });
        let padded = process_moment(&TimedWord { letters }, 0.5, 1.5).unwrap().value;
        prop_assert!(close(padded, base, 1e-10));
    }

    #[test]
    fn unitary_process_moments_are_bounded(w in timed(&[0.3, 1.0, 2.2], 5)) {
        let m = process_moment(&w, 1.0, 0.0).unwrap();
        prop_assert!(m.value.norm() <= 1.0 + 1e-12, "{}", m.value);
    }
}

#[test]
fn duplicated_letter_equals_squared_letter() {
    let mut engine = ProcessEngine::new(0.5, 0.5).unwrap();
    for (spec, stars) in [("1.0 1.0 1.0*", vec![false, false, true]), ("0.7* 0.7* 0.7 0.7", vec![true, true, false, false])] {
        let doubled = engine.moment(&TimedWord::parse(spec).unwrap()).unwrap().value.re;
        let t: f64 = spec.split(' ').next().unwrap().trim_end_matches('*').parse().unwrap();
        assert!((doubled - engine.single_time(&stars, t)).abs() <= 1e-9, "{spec}");
    }
}
