use mesbound::psd::is_psd_exact;
use mesbound::scalar::rat;
use mesbound::states::*;
use mesbound::{ExactComplex, ExactOperator, Factorization};
use num_traits::One;

fn bell(i: usize) -> ExactOperator {
    bell_density(i).unwrap()
}

fn check_member(rho: &ExactOperator) {
    assert!(is_psd_exact(rho).psd);
    assert_eq!(rho.trace(), ExactComplex::one());
    assert_eq!(rho.purity(), ExactComplex::one());
    assert!(is_maximally_entangled(rho).unwrap());
}

#[test]
fn constructed_sets_are_orthonormal_and_maximally_entangled() {
    for t in 2..=4 {
        let set = recursive_set(t, 1 << t).unwrap();
        assert_eq!(set.d(), 1 << t);
        set.states().iter().for_each(check_member);
        assert!(check_orthonormal(&set), "t = {t}");
    }
}

#[test]
fn level_five_members_streamed() {
    let pure: Vec<_> = (1..=32).map(|j| recursive_pure_state(5, j).unwrap()).collect();
    assert!(check_orthonormal_pure(&pure));
    for (j, psi) in pure.iter().enumerate() {
        assert!(is_maximally_entangled_pure(psi).unwrap());
        if j % 8 == 0 {
            check_member(&recursive_state(5, j + 1).unwrap());
        }
    }
}

#[test]
fn recursion_prefixes() {
    for t in 3..=4 {
        let full = recursive_set(t, 1 << t).unwrap();
        let lower = recursive_set(t - 1, 1 << (t - 1)).unwrap();
        let half = 1 << (t - 1);
        for j in 0..half {
            assert_eq!(full.states()[j], bell(0).kron(&lower.states()[j]).unwrap());
            assert_eq!(full.states()[half + j], bell(1).kron(&lower.states()[j]).unwrap());
        }
    }
    assert_eq!(recursive_set(2, 4).unwrap().states(), yu_set().states());
    let s = recursive_set(3, 8).unwrap();
    assert_eq!(s.states()[4], bell(1).kron(&bell(0).kron(&bell(0)).unwrap()).unwrap());
    assert_eq!(yu_set().states()[2], bell(2).kron(&bell(1)).unwrap());
    assert_eq!(recursive_set(4, 15).unwrap().k(), 15);
}

#[test]
fn bell_partial_transposes() {
    let id = ExactOperator::identity(Factorization::bipartite(2, 2)).unwrap();
    let half_id = id.scale(&rat(1, 2));
    for (i, partner) in [(0, 2), (1, 3), (2, 0), (3, 1)] {
        assert_eq!(bell(i).transpose_a(), &half_id - &bell(partner), "ψ{i}");
    }
    let pair = &bell(0) + &bell(1);
    assert_eq!(pair.transpose_a(), pair);
    for i in 0..4 {
        for j in 0..4 {
            let want = if i == j { ExactComplex::one() } else { ExactComplex::ratio(0, 1) };
            assert_eq!(bell(i).inner_product(&bell(j)).unwrap(), want);
        }
    }
}

#[test]
fn generalized_bell_bases_are_orthonormal() {
    for d in [2, 3] {
        let states: Vec<_> = (0..d)
            .flat_map(|a| (0..d).map(move |b| generalized_bell(d, a, b).unwrap()))
            .collect();
        assert_eq!(states.len(), d * d);
        assert!(check_orthonormal_pure(&states));
        for s in &states {
            assert!(is_maximally_entangled_pure(s).unwrap());
        }
    }
}

#[test]
fn negative_examples() {
    let dup = StateSet::uniform(vec![bell(0), bell(0)]).unwrap();
    assert!(!check_orthonormal(&dup));
    let mixed = (&bell(0) + &bell(1)).scale(&rat(1, 2));
    assert!(!is_maximally_entangled(&mixed).unwrap());
    let f = Factorization::bipartite(2, 2);
    let mut e = vec![ExactComplex::ratio(0, 1); 16];
    e[0] = ExactComplex::one();
    assert!(!is_maximally_entangled(&ExactOperator::new(f, e).unwrap()).unwrap());
    assert!(recursive_set(1, 1).is_err());
    assert!(recursive_set(3, 9).is_err());
    assert!(recursive_set(3, 0).is_err());
}
