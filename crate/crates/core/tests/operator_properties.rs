use mesbound::io::{operator_from_json, operator_to_json};
use mesbound::linalg::eigenvalues;
use mesbound::psd::{is_psd_exact, is_psd_within};
use mesbound::scalar::rat;
use mesbound::{ExactComplex, ExactOperator, Factor, Factorization, Party, PartySelector};
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn layouts() -> Vec<Factorization> {
    let f = |v: &[(usize, Party)]| Factorization::new(v.iter().map(|&(d, p)| Factor::new(d, p)).collect()).unwrap();
    vec![
        Factorization::bipartite(2, 2),
        Factorization::bipartite(2, 3),
        Factorization::bipartite(3, 2),
        Factorization::interleaved_pairs(2, 2),
        f(&[(2, Party::A), (2, Party::A), (2, Party::B)]),
        f(&[(2, Party::B), (3, Party::A), (2, Party::A)]),
    ]
}

type Seed = (i64, i64, i64, i64);

fn hermitian(f: &Factorization, seeds: &[Seed]) -> ExactOperator {
    let n = f.total_dim();
    ExactOperator::from_fn(f.clone(), |r, c| {
        let (lo, hi) = (r.min(c), r.max(c));
        let (a, b, x, y) = seeds[lo * n + hi];
        let z = if r == c {
            ExactComplex::real(rat(a, b))
        } else {
            ExactComplex::new(rat(a, b), rat(x, y))
        };
        if r > c {
            z.conj()
        } else {
            z
        }
    })
    .unwrap()
}

fn operator() -> impl Strategy<Value = ExactOperator> {
    (0..layouts().len()).prop_flat_map(|i| {
        let f = layouts()[i].clone();
        let n = f.total_dim();
        prop::collection::vec((-4i64..=4, 1i64..=4, -4i64..=4, 1i64..=4), n * n)
            .prop_map(move |seeds| hermitian(&f, &seeds))
    })
}

fn is_hermitian(m: &ExactOperator) -> bool {
    let n = m.dim();
    (0..n).all(|r| (0..n).all(|c| *m.entry(r, c) == m.entry(c, r).conj()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_transpose_is_an_involution(m in operator()) {
        for sel in [PartySelector::Party(Party::A), PartySelector::Party(Party::B), PartySelector::Factors(vec![0])] {
            let once = m.partial_transpose(&sel).unwrap();
            prop_assert!(is_hermitian(&once));
            prop_assert_eq!(once.partial_transpose(&sel).unwrap(), m.clone());
            prop_assert_eq!(once.trace(), m.trace());
        }
    }

    #[test]
    fn partial_trace_preserves_trace(m in operator()) {
        for party in [Party::A, Party::B] {
            let r = m.partial_trace(party).unwrap();
            prop_assert!(is_hermitian(&r));
            prop_assert_eq!(r.trace(), m.trace());
        }
    }

    #[test]
    fn kron_multiplies_traces(a in operator(), b in operator()) {
        prop_assume!(a.dim() * b.dim() <= 144);
        let k = a.kron(&b).unwrap();
        prop_assert!(is_hermitian(&k));
        prop_assert_eq!(k.trace(), a.trace() * b.trace());
        prop_assert_eq!(k.factors().len(), a.factors().len() + b.factors().len());
    }

    #[test]
    fn cut_permutation_keeps_spectrum(m in operator()) {
        if let Ok(p) = m.permute_to_cut() {
            prop_assert!(is_hermitian(&p));
            let (x, y) = (eigenvalues(&m), eigenvalues(&p));
            for (u, v) in x.iter().zip(&y) {
                prop_assert!((u - v).abs() <= 1e-10, "{:?} vs {:?}", x, y);
            }
        } else {
            prop_assert!(!m.factors().is_interleaved());
        }
    }

    #[test]
    fn exact_json_round_trip_is_lossless(m in operator()) {
        let text = serde_json::to_string(&operator_to_json(&m)).unwrap();
        let back: ExactOperator = operator_from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(back, m);
    }
}

fn small(rng: &mut ChaCha8Rng) -> ExactComplex {
    let num = |rng: &mut ChaCha8Rng| rat(rng.random_range(-3..=3), rng.random_range(1..=3));
    ExactComplex::new(num(rng), num(rng))
}

/// `B B†` for a random `8 × rank` matrix `B`.
fn gram(rng: &mut ChaCha8Rng, rank: usize) -> ExactOperator {
    let b: Vec<Vec<ExactComplex>> = (0..8).map(|_| (0..rank).map(|_| small(rng)).collect()).collect();
    ExactOperator::from_fn(Factorization::bipartite(2, 4), |r, c| {
        (0..rank).fold(ExactComplex::zero(), |acc, i| acc + b[r][i].clone() * b[c][i].conj())
    })
    .unwrap()
}

fn random_hermitian(rng: &mut ChaCha8Rng, shift: i64) -> ExactOperator {
    let mut upper = vec![ExactComplex::zero(); 64];
    for r in 0..8 {
        for c in r..8 {
            upper[r * 8 + c] = if r == c {
                ExactComplex::real(small(rng).re + rat(shift, 1))
            } else {
                small(rng)
            };
        }
    }
    ExactOperator::from_fn(Factorization::bipartite(2, 4), |r, c| {
        if r <= c {
            upper[r * 8 + c].clone()
        } else {
            upper[c * 8 + r].conj()
        }
    })
    .unwrap()
}

#[test]
fn exact_and_float_psd_checks_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut psd, mut not_psd) = (0, 0);
    for i in 0..1000 {
        let m = if i % 2 == 0 {
            let rank = rng.random_range(1..=8);
            gram(&mut rng, rank)
        } else {
            let shift = rng.random_range(0..=5);
            random_hermitian(&mut rng, shift)
        };
        let exact = is_psd_exact(&m);
        let float = is_psd_within(&m.to_float(), 1e-9);
        assert_eq!(exact.psd, float.psd, "case {i}");
        if exact.psd {
            psd += 1;
        } else {
            not_psd += 1;
            let w = exact.witness.expect("witness for a negative direction");
            assert!(m.quadratic_form(&w).unwrap().re < rat(0, 1), "case {i}");
        }
    }
    assert!(psd >= 500 && not_psd >= 100, "{psd} PSD, {not_psd} not");
}
