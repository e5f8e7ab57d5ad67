//! Acceptance suite: one PASS/FAIL line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use mesbound::catalysis::{check_locality, protocol_owners, simulate};
use mesbound::certificates::*;
use mesbound::psd::{is_psd_exact, is_psd_within};
use mesbound::scalar::{format_ratio, rat};
use mesbound::sdp::*;
use mesbound::states::*;
use mesbound::{ExactComplex, ExactOperator, Factorization, PartySelector};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

fn solve_set(set: &ExactStateSet) -> Result<SolverResult, String> {
    let inst = DiscriminationInstance::from_set(set).map_err(err)?;
    let r = solve(&inst, &SolverConfig::default()).map_err(err)?;
    ensure(r.status == Status::Converged, || format!("status {:?}", r.status))?;
    Ok(r)
}

fn exact_base_bound() -> Outcome {
    let cert = base_certificate();
    let report = verify(&yu_set(), &cert).map_err(err)?;
    ensure(report.feasible, || format!("failures {:?}", report.failures))?;
    ensure(report.objective == rat(7, 8), || format!("objective {}", report.objective))?;
    let tr = cert.y().trace();
    ensure(tr == ExactComplex::real(rat(7, 2)), || format!("Tr Y = {tr}"))?;
    Ok(format!("feasible, objective {}, Tr Y = {tr}", format_ratio(&report.objective)))
}

fn certificates_at_scale() -> Outcome {
    let mut count = 0;
    for t in 2..=4u32 {
        for k in 1..=1usize << t {
            let set = recursive_set(t, k).map_err(err)?;
            let report = verify(&set, &recursive_certificate(t, k).map_err(err)?).map_err(err)?;
            ensure(report.feasible, || format!("t={t} k={k} infeasible"))?;
            let want = rat(7 << t, 8 * k as i64);
            ensure(report.objective == want, || format!("t={t} k={k}: {} != {want}", report.objective))?;
            count += 1;
        }
    }
    Ok(format!("{count} (t, k) pairs feasible with objective 7d/(8k)"))
}

fn corollary_instance() -> Outcome {
    let report = verify(&recursive_set(4, 15).map_err(err)?, &recursive_certificate(4, 15).map_err(err)?).map_err(err)?;
    ensure(report.feasible, || "infeasible".into())?;
    ensure(report.objective == rat(14, 15), || format!("objective {}", report.objective))?;
    ensure(report.objective < rat(1, 1), || "bound not below 1".into())?;
    Ok("k = 15 < d = 16, bound 14/15".into())
}

fn solver_vs_certificate() -> Outcome {
    let set = yu_set();
    let r = solve_set(&set)?;
    let bound = verify(&set, &base_certificate()).map_err(err)?;
    ensure(bound.feasible && bound.objective == rat(7, 8), || "certificate check failed".into())?;
    ensure(r.value >= 0.875 - 1e-3 && r.value <= 0.875 + 1e-6, || format!("value {}", r.value))?;
    Ok(format!("value {:.10} <= 7/8, {} iterations", r.value, r.iterations))
}

fn distinguishable_cases() -> Outcome {
    let pair = StateSet::uniform(vec![bell_density(0).map_err(err)?, bell_density(1).map_err(err)?]).map_err(err)?;
    let v2 = solve_set(&pair)?.value;
    ensure((v2 - 1.0).abs() <= 1e-6, || format!("two Bell states: {v2}"))?;
    let states = [(0, 0), (1, 1), (2, 2)]
        .iter()
        .map(|&(a, b)| generalized_bell(3, a, b).and_then(|s| s.density()))
        .collect::<mesbound::Result<Vec<_>>>()
        .map_err(err)?;
    let inst = DiscriminationInstance::uniform(states).map_err(err)?;
    let r = solve(&inst, &SolverConfig::default()).map_err(err)?;
    ensure((r.value - 1.0).abs() <= 1e-3, || format!("three states in 3x3: {}", r.value))?;
    Ok(format!("two Bell states {v2:.9}, three 3x3 states {:.9}", r.value))
}

fn overcomplete_ensemble() -> Outcome {
    let states = (0..4).map(bell_density).collect::<mesbound::Result<Vec<_>>>().map_err(err)?;
    let set = StateSet::uniform(states).map_err(err)?;
    let r = solve_set(&set)?;
    ensure((r.value - 0.5).abs() <= 1e-4, || format!("value {}", r.value))?;
    let cert = [2, 3, 0, 1]
        .iter()
        .enumerate()
        .try_fold(
            scaled_identity_certificate(Factorization::bipartite(2, 2), &rat(1, 2), 4).map_err(err)?,
            |c, (j, &p)| c.with_q(j + 1, bell_density(p)?),
        )
        .map_err(err)?;
    let report = verify(&set, &cert).map_err(err)?;
    ensure(report.feasible && report.objective == rat(1, 2), || "dual cross-check failed".into())?;
    Ok(format!("value {:.9}, exact dual bound 1/2", r.value))
}

fn catalysis() -> Outcome {
    let mut runs = 0;
    let mut branches = 0;
    for t in 2..=4u32 {
        let owners = protocol_owners(t);
        for j in 1..=1usize << t {
            let out = simulate(t, j).map_err(err)?;
            ensure(out.correct && out.identified_index == j, || format!("t={t} j={j} misidentified"))?;
            for b in &out.branches {
                ensure(b.identified_index == j && b.catalyst_fidelity.is_one(), || format!("t={t} j={j} branch failed"))?;
                ensure(check_locality(&b.transcript, &owners), || format!("t={t} j={j} non-local"))?;
            }
            runs += 1;
            branches += out.branches.len();
        }
    }
    Ok(format!("{runs} runs, {branches} branches, all correct with fidelity 1"))
}

fn small(rng: &mut ChaCha8Rng) -> ExactComplex {
    let num = |rng: &mut ChaCha8Rng| rat(rng.random_range(-3..=3), rng.random_range(1..=3));
    ExactComplex::new(num(rng), num(rng))
}

fn random_case(rng: &mut ChaCha8Rng, i: usize) -> ExactOperator {
    let f = Factorization::bipartite(2, 4);
    if i % 2 == 0 {
        let rank = rng.random_range(1..=8);
        let b: Vec<Vec<ExactComplex>> = (0..8).map(|_| (0..rank).map(|_| small(rng)).collect()).collect();
        ExactOperator::from_fn(f, |r, c| {
            (0..rank).fold(ExactComplex::zero(), |acc, i| acc + b[r][i].clone() * b[c][i].conj())
        })
        .unwrap()
    } else {
        let shift = rat(rng.random_range(0..=5), 1);
        let mut upper = vec![ExactComplex::zero(); 64];
        for r in 0..8 {
            for c in r..8 {
                upper[r * 8 + c] = if r == c { ExactComplex::real(small(rng).re + &shift) } else { small(rng) };
            }
        }
        ExactOperator::from_fn(f, |r, c| if r <= c { upper[r * 8 + c].clone() } else { upper[c * 8 + r].conj() }).unwrap()
    }
}

fn property_suites() -> Outcome {
    let id = ExactOperator::identity(Factorization::bipartite(2, 2)).map_err(err)?;
    for (i, partner) in [(0, 2), (1, 3), (2, 0), (3, 1)] {
        let b = bell_density(i).map_err(err)?;
        let pt = b.transpose_a();
        ensure(pt == &id.scale(&rat(1, 2)) - &bell_density(partner).map_err(err)?, || format!("T_A(ψ{i})"))?;
        ensure(pt.transpose_a() == b, || format!("involution on ψ{i}"))?;
    }
    for t in 2..=4u32 {
        let set = recursive_set(t, 1 << t).map_err(err)?;
        let sel = PartySelector::default();
        for s in set.states() {
            ensure(s.partial_transpose(&sel).and_then(|p| p.partial_transpose(&sel)).map_err(err)? == *s, || "involution".into())?;
            ensure(is_maximally_entangled(s).map_err(err)?, || format!("t={t} member not MES"))?;
        }
        ensure(check_orthonormal(&set), || format!("t={t} not orthonormal"))?;
    }
    let level5: Vec<_> = (1..=32).map(|j| recursive_pure_state(5, j)).collect::<mesbound::Result<_>>().map_err(err)?;
    ensure(check_orthonormal_pure(&level5), || "t=5 not orthonormal".into())?;
    for psi in &level5 {
        ensure(is_maximally_entangled_pure(psi).map_err(err)?, || "t=5 member not MES".into())?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..1000 {
        let m = random_case(&mut rng, i);
        let (e, f) = (is_psd_exact(&m).psd, is_psd_within(&m.to_float(), 1e-9).psd);
        ensure(e == f, || format!("PSD disagreement on case {i}"))?;
    }

    let inst = DiscriminationInstance::from_set(&yu_set()).map_err(err)?;
    let a = solve(&inst, &SolverConfig::default()).map_err(err)?;
    let b = solve(&inst, &SolverConfig::default()).map_err(err)?;
    ensure(a.value.to_bits() == b.value.to_bits() && a.measurement == b.measurement, || "solver not deterministic".into())?;
    Ok("transpose identities, sets t=2..5, 1000 PSD cases, solver determinism".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 8] = [
        ("exact base bound", exact_base_bound, 1),
        ("closed-form certificates at scale", certificates_at_scale, 120),
        ("corollary instance", corollary_instance, 30),
        ("numeric solver vs certificate", solver_vs_certificate, 60),
        ("known distinguishable cases", distinguishable_cases, 60),
        ("over-complete ensemble", overcomplete_ensemble, 10),
        ("catalysis", catalysis, 60),
        ("property suites", property_suites, 120),
    ];
    let mut failed = 0;
    for (n, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = result.and_then(|msg| {
            if elapsed <= Duration::from_secs(*limit) {
                Ok(msg)
            } else {
                Err(format!("{msg}; took longer than {limit} s"))
            }
        });
        let secs = elapsed.as_secs_f64();
        match result {
            Ok(msg) => println!("criterion {}: PASS  {name}: {msg} ({secs:.2} s, limit {limit} s)", n + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {msg} ({secs:.2} s, limit {limit} s)", n + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
