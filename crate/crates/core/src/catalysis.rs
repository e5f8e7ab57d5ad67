//! Exact simulation of LOCC discrimination with one catalyst pair.
//!
//! Qubits are laid out as `[cA, cB, a₁, b₁, …, a_t, b_t]`; Alice holds the
//! `a` qubits and `cA`, Bob the `b` qubits and `cB`. Every measurement is
//! expanded into all of its branches, so the identification claim is checked
//! per branch rather than by sampling.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::factorization::Party;
use crate::operator::ExactOperator;
use crate::scalar::{format_ratio, ExactComplex};
use crate::states::{bell_vector, recursive_pure_state, ExactPureState, BELL_PATTERNS};

fn serialize_ratio<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_ratio(r))
}

fn pow2(e: i64) -> BigRational {
    let p = BigRational::from_integer(BigInt::one() << e.unsigned_abs());
    if e >= 0 {
        p
    } else {
        p.recip()
    }
}

/// Exact square root of a positive rational of the form `q² 2^e`, as `(q, e)`.
fn dyadic_sqrt(p: &BigRational) -> Option<(BigRational, i64)> {
    fn split(n: &BigInt) -> Option<(BigInt, i64)> {
        let twos = n.trailing_zeros()? as i64;
        let odd: BigInt = n >> twos as usize;
        let s = odd.sqrt();
        (&s * &s == odd).then_some((s, twos))
    }
    if !p.is_positive() {
        return None;
    }
    let (sn, en) = split(p.numer())?;
    let (sd, ed) = split(p.denom())?;
    Some((BigRational::new(sn, sd), en - ed))
}

/// Joint pure state `amplitudes / √2^sqrt2_power` of labelled qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Register {
    owners: Vec<Party>,
    amps: Vec<ExactComplex>,
    sqrt2_power: i64,
}

/// One outcome of a measurement together with the renormalized state.
#[derive(Clone, Debug)]
pub struct Branch {
    pub outcome: usize,
    pub probability: BigRational,
    pub state: Register,
}

impl Register {
    pub fn new(owners: Vec<Party>, amps: Vec<ExactComplex>, sqrt2_power: i64) -> Result<Self> {
        let n = owners.len();
        if n >= usize::BITS as usize || amps.len() != 1 << n {
            return Err(Error::DimensionMismatch { expected: 1usize.checked_shl(n as u32).unwrap_or(0), found: amps.len() });
        }
        let reg = Self { owners, amps, sqrt2_power };
        if !reg.norm_sqr().is_one() {
            return Err(Error::InvalidState(format!("squared norm {} is not 1", reg.norm_sqr())));
        }
        Ok(reg)
    }

    /// Register over the qubits of `psi`, which must all have dimension 2.
    pub fn from_pure(psi: &ExactPureState, owners: Vec<Party>) -> Result<Self> {
        if psi.factors().factors().iter().any(|f| f.dim != 2) {
            return Err(invalid("register factors must be qubits"));
        }
        if owners.len() != psi.factors().len() {
            return Err(Error::DimensionMismatch { expected: psi.factors().len(), found: owners.len() });
        }
        Self::new(owners, psi.amplitudes().to_vec(), psi.sqrt2_power() as i64)
    }

    pub fn qubits(&self) -> usize {
        self.owners.len()
    }

    pub fn owner(&self, q: usize) -> Party {
        self.owners[q]
    }

    pub fn owners(&self) -> &[Party] {
        &self.owners
    }

    pub fn amplitudes(&self) -> &[ExactComplex] {
        &self.amps
    }

    pub fn sqrt2_power(&self) -> i64 {
        self.sqrt2_power
    }

    pub fn norm_sqr(&self) -> BigRational {
        let s = self.amps.iter().fold(BigRational::zero(), |acc, a| acc + a.norm_sqr());
        s * pow2(-self.sqrt2_power)
    }

    fn shift(&self, q: usize) -> usize {
        self.qubits() - 1 - q
    }

    fn bit(&self, idx: usize, q: usize) -> usize {
        (idx >> self.shift(q)) & 1
    }

    /// Errors unless every qubit in `qubits` exists and belongs to `party`.
    pub fn check_owned(&self, party: Party, qubits: &[usize]) -> Result<()> {
        for &q in qubits {
            match self.owners.get(q) {
                None => return Err(invalid(format!("qubit {q} out of range"))),
                Some(&p) if p != party => {
                    return Err(Error::Protocol(format!("party {party} acted on qubit {q} held by {p}")))
                }
                _ => {}
            }
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(invalid("repeated qubit"));
        }
        Ok(())
    }

    pub fn apply_x(&mut self, q: usize, party: Party) -> Result<()> {
        self.check_owned(party, &[q])?;
        let m = 1 << self.shift(q);
        for idx in 0..self.amps.len() {
            if idx & m == 0 {
                self.amps.swap(idx, idx | m);
            }
        }
        Ok(())
    }

    pub fn apply_z(&mut self, q: usize, party: Party) -> Result<()> {
        self.check_owned(party, &[q])?;
        for idx in 0..self.amps.len() {
            if self.bit(idx, q) == 1 {
                self.amps[idx] = -self.amps[idx].clone();
            }
        }
        Ok(())
    }

    /// Renormalizes an unnormalized projection; `None` for zero-probability outcomes.
    fn collapse(&self, outcome: usize, amps: Vec<ExactComplex>, power: i64) -> Result<Option<Branch>> {
        let raw = Self { owners: self.owners.clone(), amps, sqrt2_power: power };
        let p = raw.norm_sqr();
        if p.is_zero() {
            return Ok(None);
        }
        let (root, e) = dyadic_sqrt(&p)
            .ok_or_else(|| Error::Protocol(format!("branch probability {p} leaves the dyadic ring")))?;
        let inv = root.recip();
        let mut state = raw;
        state.amps.iter_mut().for_each(|a| *a = a.scale(&inv));
        state.sqrt2_power += e;
        while state.sqrt2_power < 0 {
            let two = BigRational::from_integer(2.into());
            state.amps.iter_mut().for_each(|a| *a = a.scale(&two));
            state.sqrt2_power += 2;
        }
        Ok(Some(Branch { outcome, probability: p, state }))
    }

    /// Computational-basis measurement of qubit `q`.
    pub fn measure_z(&self, q: usize, party: Party) -> Result<Vec<Branch>> {
        self.check_owned(party, &[q])?;
        let mut out = Vec::new();
        for outcome in 0..2 {
            let amps = (0..self.amps.len())
                .map(|idx| if self.bit(idx, q) == outcome { self.amps[idx].clone() } else { ExactComplex::zero() })
                .collect();
            out.extend(self.collapse(outcome, amps, self.sqrt2_power)?);
        }
        Ok(out)
    }

    /// Bell-basis measurement of `(q1, q2)`; outcome `i` leaves the pair in `ψ_i`.
    pub fn bell_measure(&self, q1: usize, q2: usize, party: Party) -> Result<Vec<Branch>> {
        self.check_owned(party, &[q1, q2])?;
        let (m1, m2) = (1 << self.shift(q1), 1 << self.shift(q2));
        let mut out = Vec::new();
        for (i, pat) in BELL_PATTERNS.iter().enumerate() {
            let mut amps = vec![ExactComplex::zero(); self.amps.len()];
            for base in (0..self.amps.len()).filter(|idx| idx & (m1 | m2) == 0) {
                let slots = [base, base | m2, base | m1, base | m1 | m2];
                let coeff = slots
                    .iter()
                    .zip(pat)
                    .fold(ExactComplex::zero(), |acc, (&s, &w)| acc + self.amps[s].clone() * ExactComplex::from_integer(w));
                for (&s, &w) in slots.iter().zip(pat) {
                    amps[s] = coeff.clone() * ExactComplex::from_integer(w);
                }
            }
            out.extend(self.collapse(i, amps, self.sqrt2_power + 2)?);
        }
        Ok(out)
    }

    /// `⟨v|ρ_Q|v⟩` for the reduced state on `qubits` and `v = amps / √2^power`.
    pub fn overlap_sqr(&self, qubits: &[usize], v: &[ExactComplex], power: u32) -> Result<BigRational> {
        if v.len() != 1 << qubits.len() {
            return Err(Error::DimensionMismatch { expected: 1 << qubits.len(), found: v.len() });
        }
        if qubits.iter().any(|&q| q >= self.qubits()) {
            return Err(invalid("qubit out of range"));
        }
        let mask: usize = qubits.iter().map(|&q| 1 << self.shift(q)).sum();
        let mut acc = vec![ExactComplex::zero(); self.amps.len()];
        for (idx, a) in self.amps.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let x = qubits.iter().fold(0, |x, &q| (x << 1) | self.bit(idx, q));
            acc[idx & !mask] = &acc[idx & !mask] + &(v[x].conj() * a.clone());
        }
        let s = acc.iter().fold(BigRational::zero(), |s, c| s + c.norm_sqr());
        Ok(s * pow2(-(self.sqrt2_power + power as i64)))
    }

    /// Overlap of the pair `(q1, q2)` with `ψ_i`.
    pub fn bell_fidelity(&self, q1: usize, q2: usize, i: usize) -> Result<BigRational> {
        let v = bell_vector(i)?;
        self.overlap_sqr(&[q1, q2], v.amplitudes(), v.sqrt2_power())
    }
}

/// Outcome distribution `⟨ψ_i|ρ|ψ_i⟩` of a Bell measurement on a two-qubit state.
pub fn bell_measurement(rho: &ExactOperator) -> Result<[BigRational; 4]> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: rho.dim() });
    }
    let mut out: [BigRational; 4] = Default::default();
    for (i, pat) in BELL_PATTERNS.iter().enumerate() {
        let mut s = ExactComplex::zero();
        for r in 0..4 {
            for c in 0..4 {
                if pat[r] != 0 && pat[c] != 0 {
                    s = s + rho.entry(r, c).clone() * ExactComplex::from_integer(pat[r] * pat[c]);
                }
            }
        }
        out[i] = s.re / BigRational::from_integer(2.into());
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    MeasureZ,
    BellMeasure,
    PauliX,
    PauliZ,
    Announce,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TranscriptEntry {
    pub round: usize,
    pub party: Party,
    pub action: Action,
    pub qubits: Vec<usize>,
    pub outcome: Option<usize>,
    /// Conditional probability of the outcome; 1 for gates and messages.
    #[serde(serialize_with = "serialize_ratio")]
    pub probability: BigRational,
}

impl TranscriptEntry {
    fn new(round: usize, party: Party, action: Action, qubits: Vec<usize>, outcome: Option<usize>, probability: BigRational) -> Self {
        Self { round, party, action, qubits, outcome, probability }
    }

    fn gate(round: usize, party: Party, action: Action, q: usize) -> Self {
        Self::new(round, party, action, vec![q], None, BigRational::one())
    }

    fn announce(round: usize, party: Party, outcome: usize) -> Self {
        Self::new(round, party, Action::Announce, vec![], Some(outcome), BigRational::one())
    }
}

/// Every quantum action touches only qubits of the acting party.
pub fn check_locality(transcript: &[TranscriptEntry], owners: &[Party]) -> bool {
    transcript.iter().all(|e| e.qubits.iter().all(|&q| owners.get(q) == Some(&e.party)))
}

/// One teleportation branch after the receiver's correction.
#[derive(Clone, Debug)]
pub struct Teleported {
    pub outcome: usize,
    pub probability: BigRational,
    pub state: Register,
    pub entries: Vec<TranscriptEntry>,
}

/// Teleports `source` across the catalyst pair `(sender half, receiver half)`.
pub fn teleport(reg: &Register, source: usize, catalyst: (usize, usize), round: usize) -> Result<Vec<Teleported>> {
    let (ca, cb) = catalyst;
    if reg.bell_fidelity(ca, cb, 0)? != BigRational::one() {
        return Err(Error::Protocol("catalyst pair is not in ψ0".into()));
    }
    let sender = reg.owner(source);
    let receiver = reg.owner(cb);
    let mut out = Vec::new();
    for b in reg.bell_measure(source, ca, sender)? {
        let mut state = b.state;
        let mut entries = vec![
            TranscriptEntry::new(round, sender, Action::BellMeasure, vec![source, ca], Some(b.outcome), b.probability.clone()),
            TranscriptEntry::announce(round, sender, b.outcome),
        ];
        if matches!(b.outcome, 1 | 2) {
            state.apply_x(cb, receiver)?;
            entries.push(TranscriptEntry::gate(round, receiver, Action::PauliX, cb));
        }
        if matches!(b.outcome, 2 | 3) {
            state.apply_z(cb, receiver)?;
            entries.push(TranscriptEntry::gate(round, receiver, Action::PauliZ, cb));
        }
        out.push(Teleported { outcome: b.outcome, probability: b.probability, state, entries });
    }
    Ok(out)
}

/// Record of one complete measurement branch.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchRecord {
    pub transcript: Vec<TranscriptEntry>,
    #[serde(serialize_with = "serialize_ratio")]
    pub probability: BigRational,
    /// Bell labels inferred for the leading pairs, outermost first.
    pub prefix: Vec<usize>,
    pub identified_index: usize,
    #[serde(serialize_with = "serialize_ratio")]
    pub catalyst_fidelity: BigRational,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProtocolOutcome {
    pub t: u32,
    pub j: usize,
    /// Index reported on every branch (they agree whenever `correct`).
    pub identified_index: usize,
    pub correct: bool,
    /// Smallest returned-catalyst overlap with `ψ0` over all branches.
    #[serde(serialize_with = "serialize_ratio")]
    pub catalyst_fidelity: BigRational,
    pub rounds: usize,
    pub branches: Vec<BranchRecord>,
}

const CAT_A: usize = 0;
const CAT_B: usize = 1;

fn alice(i: usize) -> usize {
    2 * i
}

fn bob(i: usize) -> usize {
    2 * i + 1
}

/// Qubit owners for a catalyst pair followed by `t` pairs.
pub fn protocol_owners(t: u32) -> Vec<Party> {
    (0..=t).flat_map(|_| [Party::A, Party::B]).collect()
}

struct Path {
    state: Register,
    transcript: Vec<TranscriptEntry>,
    probability: BigRational,
    prefix: Vec<usize>,
    offset: usize,
}

/// Runs the catalysed protocol on `ρ_j^{(t)}` over every measurement branch.
pub fn simulate(t: u32, j: usize) -> Result<ProtocolOutcome> {
    let psi = bell_vector(0)?.kron(&recursive_pure_state(t, j)?)?;
    let start = Register::from_pure(&psi, protocol_owners(t))?;
    let t_us = t as usize;
    let mut paths = vec![Path { state: start, transcript: Vec::new(), probability: BigRational::one(), prefix: Vec::new(), offset: 0 }];
    let mut round = 0;

    // Leading pairs: ψ0 versus ψ1 by comparing computational-basis outcomes.
    for pair in 1..=t_us - 2 {
        round += 1;
        let level = t_us - pair + 1;
        let mut next = Vec::new();
        for path in paths {
            for x in path.state.measure_z(alice(pair), Party::A)? {
                for y in x.state.measure_z(bob(pair), Party::B)? {
                    let mut transcript = path.transcript.clone();
                    transcript.extend([
                        TranscriptEntry::new(round, Party::A, Action::MeasureZ, vec![alice(pair)], Some(x.outcome), x.probability.clone()),
                        TranscriptEntry::new(round, Party::B, Action::MeasureZ, vec![bob(pair)], Some(y.outcome), y.probability.clone()),
                        TranscriptEntry::announce(round, Party::A, x.outcome),
                        TranscriptEntry::announce(round, Party::B, y.outcome),
                    ]);
                    let unequal = x.outcome != y.outcome;
                    let offset = path.offset + if unequal { 1 << (level - 1) } else { 0 };
                    let mut prefix = path.prefix.clone();
                    prefix.push(unequal as usize);
                    next.push(Path {
                        state: y.state,
                        transcript,
                        probability: &path.probability * &x.probability * &y.probability,
                        prefix,
                        offset,
                    });
                }
            }
        }
        paths = next;
    }

    // Base pairs: teleport Alice's half of the first, then a Bell measurement by Bob.
    round += 1;
    let (first_a, first_b) = (alice(t_us - 1), bob(t_us - 1));
    let (last_a, last_b) = (alice(t_us), bob(t_us));
    let mut branches = Vec::new();
    for path in paths {
        for tel in teleport(&path.state, first_a, (CAT_A, CAT_B), round)? {
            for m in tel.state.bell_measure(CAT_B, first_b, Party::B)? {
                let mut transcript = path.transcript.clone();
                transcript.extend(tel.entries.iter().cloned());
                transcript.push(TranscriptEntry::new(
                    round,
                    Party::B,
                    Action::BellMeasure,
                    vec![CAT_B, first_b],
                    Some(m.outcome),
                    m.probability.clone(),
                ));
                let mut state = m.state;
                if m.outcome != 0 {
                    state.apply_x(last_b, Party::B)?;
                    transcript.push(TranscriptEntry::gate(round, Party::B, Action::PauliX, last_b));
                }
                if !check_locality(&transcript, state.owners()) {
                    return Err(Error::Protocol("non-local operation in transcript".into()));
                }
                branches.push(BranchRecord {
                    transcript,
                    probability: &path.probability * &tel.probability * &m.probability,
                    prefix: path.prefix.clone(),
                    identified_index: path.offset + m.outcome + 1,
                    catalyst_fidelity: state.bell_fidelity(last_a, last_b, 0)?,
                });
            }
        }
    }

    let total = branches.iter().fold(BigRational::zero(), |s, b| s + &b.probability);
    if !total.is_one() {
        return Err(Error::Protocol(format!("branch probabilities sum to {total}")));
    }
    let identified_index = branches[0].identified_index;
    let correct = branches.iter().all(|b| b.identified_index == j);
    let catalyst_fidelity = branches.iter().map(|b| b.catalyst_fidelity.clone()).min().expect("at least one branch");
    Ok(ProtocolOutcome { t, j, identified_index, correct, catalyst_fidelity, rounds: round, branches })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorization::Factorization;
    use crate::scalar::rat;
    use crate::states::bell_density;

    fn c(n: i64) -> ExactComplex {
        ExactComplex::from_integer(n)
    }

    /// `source ⊗ ψ0` with the source and `cA` on Alice's side.
    fn with_catalyst(src: Vec<ExactComplex>, power: i64) -> Register {
        let mut amps = Vec::new();
        for a in &src {
            for w in BELL_PATTERNS[0] {
                amps.push(a.clone() * c(w));
            }
        }
        Register::new(vec![Party::A, Party::A, Party::B], amps, power + 1).unwrap()
    }

    fn receiver_holds(src: &[ExactComplex], power: u32) {
        let reg = with_catalyst(src.to_vec(), power as i64);
        let branches = teleport(&reg, 0, (1, 2), 1).unwrap();
        assert_eq!(branches.len(), 4);
        let total = branches.iter().fold(BigRational::zero(), |s, b| s + &b.probability);
        assert!(total.is_one());
        for b in branches {
            assert_eq!(b.probability, rat(1, 4));
            assert!(b.state.overlap_sqr(&[2], src, power).unwrap().is_one(), "outcome {}", b.outcome);
        }
    }

    #[test]
    fn teleports_basis_and_superposition_states() {
        receiver_holds(&[c(1), c(0)], 0);
        receiver_holds(&[c(0), c(1)], 0);
        receiver_holds(&[c(1), c(1)], 1);
        receiver_holds(&[c(1), c(-1)], 1);
        receiver_holds(&[c(1), ExactComplex::new(rat(0, 1), rat(1, 1))], 1);
    }

    #[test]
    fn teleports_half_of_a_bell_pair() {
        // Qubits: a1 (Alice), b1 (Bob), cA (Alice), cB (Bob).
        let psi = bell_vector(0).unwrap().kron(&bell_vector(0).unwrap()).unwrap();
        let reg = Register::from_pure(&psi, vec![Party::A, Party::B, Party::A, Party::B]).unwrap();
        for b in teleport(&reg, 0, (2, 3), 1).unwrap() {
            assert!(b.state.bell_fidelity(3, 1, 0).unwrap().is_one());
            assert!(check_locality(&b.entries, reg.owners()));
        }
    }

    #[test]
    fn rejects_spent_catalyst() {
        let amps = vec![c(1), c(0), c(0), c(0), c(0), c(0), c(0), c(0)];
        let reg = Register::new(vec![Party::A, Party::A, Party::B], amps, 0).unwrap();
        assert!(matches!(teleport(&reg, 0, (1, 2), 1), Err(Error::Protocol(_))));
    }

    #[test]
    fn locality_is_enforced() {
        let reg = with_catalyst(vec![c(1), c(0)], 0);
        assert!(reg.measure_z(2, Party::A).is_err());
        assert!(reg.bell_measure(0, 2, Party::A).is_err());
        let mut r = reg.clone();
        assert!(r.apply_x(0, Party::B).is_err());
    }

    #[test]
    fn bell_measurement_distributions() {
        let one = BigRational::one();
        let z = BigRational::zero();
        assert_eq!(bell_measurement(&bell_density(2).unwrap()).unwrap(), [z.clone(), z.clone(), one, z.clone()]);
        let f = Factorization::bipartite(2, 2);
        let mut e = vec![ExactComplex::zero(); 16];
        e[0] = c(1);
        let zero_zero = ExactOperator::new(f.clone(), e).unwrap();
        assert_eq!(bell_measurement(&zero_zero).unwrap(), [rat(1, 2), z.clone(), z, rat(1, 2)]);
        let mixed = ExactOperator::identity(f).unwrap().scale(&rat(1, 4));
        assert_eq!(bell_measurement(&mixed).unwrap(), [rat(1, 4), rat(1, 4), rat(1, 4), rat(1, 4)]);
        assert!(bell_measurement(&ExactOperator::identity(Factorization::bipartite(2, 1)).unwrap()).is_err());
    }

    #[test]
    fn base_case_identifies_each_state() {
        for j in 1..=4 {
            let out = simulate(2, j).unwrap();
            assert!(out.correct);
            assert_eq!(out.identified_index, j);
            assert!(out.catalyst_fidelity.is_one());
            assert_eq!(out.rounds, 1);
            assert_eq!(out.branches.len(), 4);
        }
    }

    #[test]
    fn leading_psi1_pair_shows_unequal_outcomes() {
        let out = simulate(3, 5).unwrap();
        assert!(out.correct);
        assert_eq!(out.identified_index, 5);
        for b in &out.branches {
            let z: Vec<_> = b.transcript.iter().filter(|e| e.action == Action::MeasureZ).map(|e| e.outcome).collect();
            assert_ne!(z[0], z[1]);
            assert_eq!(b.prefix, vec![1]);
        }
    }

    #[test]
    fn dyadic_sqrt_cases() {
        assert_eq!(dyadic_sqrt(&rat(1, 2)), Some((BigRational::one(), -1)));
        assert_eq!(dyadic_sqrt(&rat(9, 8)), Some((rat(3, 1), -3)));
        assert_eq!(dyadic_sqrt(&rat(1, 3)), None);
        assert_eq!(dyadic_sqrt(&BigRational::zero()), None);
    }
}
