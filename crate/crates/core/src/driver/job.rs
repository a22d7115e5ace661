//! Per-function reconstruction state machine: shift scan and full
//! interpolation in the first prime, verification gates and partial solves
//! in later primes, the per-coefficient reconstruction race, and the feed
//! queue contract.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ffield::{nth_prime, prime, FieldElement};
use crate::polyint::{MultiIndex, SparsePolynomial};
use crate::ratint::{
    FirstPrimeOptions, FirstPrimeOutcome, ProbeOrder, RatError, RatInterpolator,
    RationalFunction, ThieleState,
};
use crate::ratrec::CoefficientRace;

use super::later::{CoefKey, LaterPrimeSolver, SolveMode, SupportEntry};
use super::state;
use super::{DriverError, DriverOptions, ReconstructionOutcome, Verbosity};

const RESTART_BUDGET: u32 = 3;
const SEED_STRIDE: u64 = 0x9e3779b97f4a7c15;
const ATTEMPT_STRIDE: u64 = 0x517cc1b727220a95;

/// Seed of the deterministic random stream a job uses for one purpose in
/// one prime. Keyed only by (base seed, prime, salt) so a resumed run draws
/// identical randomness regardless of history.
fn stream_seed(base: u64, prime_idx: usize, salt: u64) -> u64 {
    base.wrapping_add(SEED_STRIDE.wrapping_mul(4 * (prime_idx as u64 + 1) + salt))
}

/// Monomial support discovered in the first prime field; the denominator
/// list is sorted and starts with the normalization monomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Support {
    pub num: Vec<MultiIndex>,
    pub den: Vec<MultiIndex>,
}

impl Support {
    pub fn norm(&self) -> &MultiIndex {
        self.den.first().expect("denominator support non-empty")
    }
}

/// Feed-style shift scan: one continued-fraction run per candidate shift,
/// accepting the first candidate that preserves the all-shifted baseline
/// degrees and provides a constant term for normalization.
struct ScanPhase {
    prime_index: usize,
    n: usize,
    rng: ChaCha8Rng,
    anchors: Vec<FieldElement>,
    full_shift: Vec<FieldElement>,
    baseline: Option<(usize, usize)>,
    candidates: VecDeque<Vec<FieldElement>>,
    current: Vec<FieldElement>,
    thiele: ThieleState,
    used_ts: HashSet<u64>,
    attempts: u32,
    t_counter: u64,
    pending: Option<(ProbeOrder, Vec<FieldElement>, FieldElement)>,
    result: Option<Vec<FieldElement>>,
}

impl ScanPhase {
    fn new(n: usize, seed: u64, prime_index: usize) -> Self {
        let p = prime();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut anchors = vec![FieldElement::one()];
        let mut seen = HashSet::new();
        while anchors.len() < n {
            let v = rng.gen_range(2..p);
            if seen.insert(v) {
                anchors.push(FieldElement::new(v));
            }
        }
        let full_shift = crate::ratint::draw_shift(n, &mut rng);
        // candidate order: empty shift, then windows of width 1, 2, ...
        // each starting from the last variables
        let mut candidates = VecDeque::new();
        candidates.push_back(vec![FieldElement::ZERO; n]);
        for width in 1..n {
            for start in (0..=(n - width)).rev() {
                let mut c = vec![FieldElement::ZERO; n];
                c[start..start + width].copy_from_slice(&full_shift[start..start + width]);
                candidates.push_back(c);
            }
        }
        ScanPhase {
            prime_index,
            n,
            rng,
            anchors,
            current: full_shift.clone(),
            full_shift,
            baseline: None,
            candidates,
            thiele: ThieleState::new(),
            used_ts: HashSet::new(),
            attempts: 0,
            t_counter: 0,
            pending: None,
            result: None,
        }
    }

    fn next_probe(&mut self) -> (ProbeOrder, Vec<FieldElement>) {
        if let Some((order, point, _)) = &self.pending {
            return (order.clone(), point.clone());
        }
        let p = prime();
        let mut t = self.rng.gen_range(1..p);
        while !self.used_ts.insert(t) {
            t = self.rng.gen_range(1..p);
        }
        let t = FieldElement::new(t);
        let point: Vec<FieldElement> = (0..self.n)
            .map(|i| t * self.anchors[i] + self.current[i])
            .collect();
        let order = ProbeOrder {
            prime_index: self.prime_index,
            t_index: u64::MAX - 1 - self.t_counter,
            z_orders: Vec::new(),
        };
        self.t_counter += 1;
        self.pending = Some((order.clone(), point.clone(), t));
        (order, point)
    }

    fn feed(&mut self, value: FieldElement) -> Result<(), RatError> {
        let (_, _, t) = self.pending.take().expect("scan probe outstanding");
        match self.thiele.feed(t, value) {
            Ok(true) => {
                let (num_c, den_c) = self.thiele.to_rational();
                let has_const = num_c.first().map_or(false, |c| !c.is_zero())
                    || den_c.first().map_or(false, |c| !c.is_zero());
                self.finish_candidate(num_c.len(), den_c.len(), has_const);
                Ok(())
            }
            Ok(false) => Ok(()),
            Err(RatError::UnluckyZero) if self.attempts < RESTART_BUDGET => {
                self.attempts += 1;
                self.thiele = ThieleState::new();
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    fn finish_candidate(&mut self, nc: usize, dc: usize, has_const: bool) {
        self.attempts = 0;
        self.thiele = ThieleState::new();
        match self.baseline {
            None => self.baseline = Some((nc, dc)),
            Some((bn, bd)) => {
                if nc == bn && dc == bd && has_const {
                    self.result = Some(self.current.clone());
                    return;
                }
            }
        }
        match self.candidates.pop_front() {
            Some(next) => self.current = next,
            None => self.result = Some(self.full_shift.clone()),
        }
    }
}

enum Phase {
    /// No work pending in the current prime.
    Idle,
    Scan(Box<ScanPhase>),
    First {
        engine: Box<RatInterpolator>,
        attempts: u32,
    },
    Later {
        solver: Box<LaterPrimeSolver>,
        attempts: u32,
    },
    Verify {
        order: ProbeOrder,
        point: Vec<FieldElement>,
        expected: FieldElement,
    },
    Done,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhaseStatus {
    /// Another interpolate call is already draining this job's queue.
    Busy,
    /// Blocked until the outstanding probes are fed.
    NeedsProbes,
    /// All work for the current prime is complete.
    PrimeComplete,
    /// The job is done and verified.
    Finished,
}

pub(crate) struct JobInner {
    pub index: usize,
    pub tag: Option<String>,
    pub n: usize,
    pub base_seed: u64,
    pub safe: bool,
    pub verbosity: Verbosity,
    pub save_dir: Option<PathBuf>,
    pub shift: Option<Vec<FieldElement>>,
    pub support: Option<Support>,
    pub races: BTreeMap<CoefKey, CoefficientRace>,
    pub folded_primes: Vec<usize>,
    pub probes: usize,
    pub primes_touched: usize,
    pub stale_feeds: usize,
    pub current_prime: usize,
    phase: Phase,
    queue: HashMap<ProbeOrder, FieldElement>,
    outstanding: Vec<(ProbeOrder, Vec<FieldElement>)>,
    pending_guess: Option<RationalFunction<BigRational>>,
    pub result: Option<RationalFunction<BigRational>>,
    pub verified: bool,
}

pub struct ReconstructionJob {
    inner: Mutex<JobInner>,
    interpolating: AtomicBool,
}

impl ReconstructionJob {
    /// `index` is the position of this function in the black box's output
    /// vector; `n` the number of variables.
    pub fn new(index: usize, n: usize, tag: Option<String>) -> Self {
        ReconstructionJob {
            inner: Mutex::new(JobInner {
                index,
                tag,
                n,
                base_seed: 0,
                safe: false,
                verbosity: Verbosity::Silent,
                save_dir: None,
                shift: None,
                support: None,
                races: BTreeMap::new(),
                folded_primes: Vec::new(),
                probes: 0,
                primes_touched: 0,
                stale_feeds: 0,
                current_prime: 0,
                phase: Phase::Idle,
                queue: HashMap::new(),
                outstanding: Vec::new(),
                pending_guess: None,
                result: None,
                verified: false,
            }),
            interpolating: AtomicBool::new(false),
        }
    }

    pub(crate) fn from_inner(inner: JobInner) -> Self {
        ReconstructionJob {
            inner: Mutex::new(inner),
            interpolating: AtomicBool::new(false),
        }
    }

    /// Rebuilds a job from a saved state file; a resumed job skips the
    /// primes already folded in and continues deterministically.
    pub fn resume(path: &std::path::Path, index: usize) -> Result<Self, DriverError> {
        let st = state::load(path)?;
        let mut inner = JobInner {
            index,
            tag: Some(st.tag),
            n: st.n,
            base_seed: st.base_seed,
            safe: st.safe,
            verbosity: Verbosity::Silent,
            save_dir: None,
            shift: st
                .shift
                .map(|s| s.iter().map(|&v| FieldElement::new(v)).collect()),
            support: Some(st.support),
            races: st.races,
            folded_primes: st.folded_primes,
            probes: st.probes,
            primes_touched: st.primes_touched,
            stale_feeds: 0,
            current_prime: 0,
            phase: if st.done { Phase::Done } else { Phase::Idle },
            queue: HashMap::new(),
            outstanding: Vec::new(),
            pending_guess: None,
            result: None,
            verified: st.done,
        };
        if st.done {
            inner.result = inner.build_settled_guess();
        }
        Ok(Self::from_inner(inner))
    }

    /// The seed the job's random streams derive from (from the state file
    /// for resumed jobs).
    pub fn seed(&self) -> u64 {
        self.inner.lock().unwrap().base_seed
    }

    /// Disables post-first-prime shortcuts: every prime runs a complete
    /// fresh interpolation with new anchor points.
    pub fn set_safe_mode(&self) {
        self.inner.lock().unwrap().safe = true;
    }

    pub fn index(&self) -> usize {
        self.inner.lock().unwrap().index
    }

    pub fn is_done(&self) -> bool {
        matches!(self.inner.lock().unwrap().phase, Phase::Done)
    }

    pub fn probes(&self) -> usize {
        self.inner.lock().unwrap().probes
    }

    pub fn stale_feeds(&self) -> usize {
        self.inner.lock().unwrap().stale_feeds
    }

    pub fn outcome(&self) -> Option<ReconstructionOutcome> {
        let g = self.inner.lock().unwrap();
        g.result.as_ref().map(|f| ReconstructionOutcome {
            function: f.clone(),
            probes: g.probes,
            primes: g.primes_touched,
            verified: g.verified,
            tag: g.tag.clone(),
            seed: g.base_seed,
        })
    }

    /// Prepares the job for work in the given prime field (already ambient).
    pub fn begin_prime(
        &self,
        prime_idx: usize,
        options: &DriverOptions,
    ) -> Result<(), DriverError> {
        let mut g = self.inner.lock().unwrap();
        if g.support.is_none() && g.folded_primes.is_empty() {
            g.base_seed = options.seed;
        }
        g.verbosity = options.verbosity;
        g.save_dir = g.tag.as_ref().map(|_| options.save_dir.clone());
        if matches!(g.phase, Phase::Done) {
            return Ok(());
        }
        g.current_prime = prime_idx;
        g.queue.clear();
        g.outstanding.clear();
        if g.folded_primes.contains(&prime_idx) {
            // already folded in (resumed job): nothing to do here
            g.phase = Phase::Idle;
            return Ok(());
        }
        g.primes_touched = g.primes_touched.max(prime_idx + 1);
        if g.support.is_none() {
            if options.scan && g.shift.is_none() {
                g.phase = Phase::Scan(Box::new(ScanPhase::new(
                    g.n,
                    stream_seed(g.base_seed, prime_idx, 0),
                    prime_idx,
                )));
            } else {
                if g.shift.is_none() {
                    g.shift = Some(match &options.fixed_shift {
                        Some(s) => s.iter().map(|&v| FieldElement::new(v)).collect(),
                        None => {
                            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(
                                g.base_seed,
                                prime_idx,
                                0,
                            ));
                            crate::ratint::draw_shift(g.n, &mut rng)
                        }
                    });
                }
                let engine = g.new_engine(prime_idx, 0, options.fixed_anchors.as_deref());
                g.phase = Phase::First {
                    engine: Box::new(engine),
                    attempts: 0,
                };
            }
        } else {
            match g.build_settled_guess() {
                Some(guess) => {
                    g.enter_verify(prime_idx, guess);
                }
                None => {
                    let phase = g.make_interpolation_phase(prime_idx, 0)?;
                    g.phase = phase;
                }
            }
        }
        Ok(())
    }

    /// Enqueues one probe value. Stale primes and done jobs are discarded
    /// with a diagnostic count.
    pub fn feed(&self, order: &ProbeOrder, value: FieldElement) {
        let mut g = self.inner.lock().unwrap();
        if matches!(g.phase, Phase::Done) || order.prime_index != g.current_prime {
            g.stale_feeds += 1;
            if g.verbosity >= Verbosity::Chatty {
                eprintln!(
                    "[job {}] discarding stale feed for prime index {}",
                    g.index, order.prime_index
                );
            }
            return;
        }
        g.queue.insert(order.clone(), value);
    }

    /// Probe points the job is currently blocked on.
    pub fn pending_probes(&self) -> Vec<(ProbeOrder, Vec<FieldElement>)> {
        self.inner.lock().unwrap().outstanding.clone()
    }

    /// Accounts evaluated black-box invocations.
    pub fn add_probes(&self, count: usize) {
        self.inner.lock().unwrap().probes += count;
    }

    /// Drains the queue until empty or a missing probe order blocks.
    /// Re-entrant calls return immediately with `Busy`.
    pub fn interpolate(&self) -> Result<PhaseStatus, DriverError> {
        if self.interpolating.swap(true, Ordering::SeqCst) {
            return Ok(PhaseStatus::Busy);
        }
        let result = self.inner.lock().unwrap().advance();
        self.interpolating.store(false, Ordering::SeqCst);
        result
    }
}

impl JobInner {
    fn new_engine(
        &self,
        prime_idx: usize,
        attempts: u32,
        fixed_anchors: Option<&[u64]>,
    ) -> RatInterpolator {
        let opts = FirstPrimeOptions {
            shift: self
                .shift
                .clone()
                .unwrap_or_else(|| vec![FieldElement::ZERO; self.n]),
            anchors: fixed_anchors.map(|a| a.iter().map(|&v| FieldElement::new(v)).collect()),
            seed: stream_seed(self.base_seed, prime_idx, 1)
                .wrapping_add(ATTEMPT_STRIDE.wrapping_mul(attempts as u64)),
        };
        RatInterpolator::new(self.n, &opts)
    }

    /// Settled-coefficient images in the current prime for the partial
    /// solver; None when a coefficient's guess has a denominator divisible
    /// by the prime (unusable this round).
    fn accepted_image(race: &CoefficientRace) -> Option<FieldElement> {
        if !race.accepted {
            return None;
        }
        let q = race.guess.as_ref()?;
        let den = FieldElement::from_bigint(q.denom());
        if den.is_zero() {
            return None;
        }
        Some(FieldElement::from_bigint(q.numer()) / den)
    }

    /// Normalization selection for a partial solve: (a) a t-degree with a
    /// single contributing monomial, else (b) a t-degree whose coefficient
    /// is fully known over Q, else None (the caller reintroduces the shift
    /// and re-interpolates fully).
    fn choose_mode(&self) -> Option<SolveMode> {
        let support = self.support.as_ref()?;
        let norm = support.norm().clone();
        let mut per_degree: BTreeMap<(bool, u32), Vec<&MultiIndex>> = BTreeMap::new();
        for m in &support.den {
            per_degree.entry((false, m.degree())).or_default().push(m);
        }
        for m in &support.num {
            per_degree.entry((true, m.degree())).or_default().push(m);
        }
        // (a): denominator degrees first, ascending, then numerator
        for side in [false, true] {
            for ((is_num, _), monos) in per_degree.iter().filter(|((s, _), _)| *s == side) {
                if monos.len() == 1 {
                    return Some(SolveMode::SingleMonomial {
                        anchor: (*is_num, monos[0].clone()),
                    });
                }
            }
        }
        // (b): a fully accepted degree (the normalization monomial counts)
        for side in [false, true] {
            for ((is_num, _), monos) in per_degree.iter().filter(|((s, _), _)| *s == side) {
                let all_known = monos.iter().all(|m| {
                    let key = (*is_num, (*m).clone());
                    if key == (false, norm.clone()) {
                        return true;
                    }
                    self.races
                        .get(&key)
                        .map_or(false, |r| Self::accepted_image(r).is_some())
                });
                if all_known {
                    return Some(SolveMode::KnownDegree);
                }
            }
        }
        None
    }

    fn support_entries(&self, mode: &SolveMode) -> Vec<SupportEntry> {
        let support = self.support.as_ref().expect("support known");
        let norm = support.norm().clone();
        let mut entries = Vec::new();
        for (is_num, list) in [(true, &support.num), (false, &support.den)] {
            for m in list {
                let key = (is_num, m.clone());
                if key == (false, norm.clone()) {
                    continue;
                }
                let known_image = match mode {
                    SolveMode::SingleMonomial { .. } => None,
                    SolveMode::KnownDegree => {
                        self.races.get(&key).and_then(Self::accepted_image)
                    }
                };
                entries.push(SupportEntry { key, known_image });
            }
        }
        entries
    }

    fn make_interpolation_phase(
        &mut self,
        prime_idx: usize,
        attempts: u32,
    ) -> Result<Phase, DriverError> {
        if !self.safe {
            if let Some(mode) = self.choose_mode() {
                let entries = self.support_entries(&mode);
                let norm = self.support.as_ref().unwrap().norm().clone();
                let seed = stream_seed(self.base_seed, prime_idx, 1)
                    .wrapping_add(ATTEMPT_STRIDE.wrapping_mul(attempts as u64));
                match LaterPrimeSolver::new(&entries, norm, mode, self.n, prime_idx, seed) {
                    Ok(solver) => {
                        return Ok(Phase::Later {
                            solver: Box::new(solver),
                            attempts,
                        })
                    }
                    Err(e) => {
                        if self.verbosity >= Verbosity::Important {
                            eprintln!(
                                "[job {}] partial solve unavailable ({e}); falling back to full interpolation",
                                self.index
                            );
                        }
                    }
                }
            }
        }
        // safe mode, no usable normalization, or partial-solver failure:
        // full fresh interpolation with the stored shift and new anchors
        Ok(Phase::First {
            engine: Box::new(self.new_engine(prime_idx, attempts, None)),
            attempts,
        })
    }

    /// The current guess g over Q when every coefficient is settled.
    fn build_settled_guess(&self) -> Option<RationalFunction<BigRational>> {
        let support = self.support.as_ref()?;
        let norm = support.norm().clone();
        let mut num = SparsePolynomial::zero(self.n);
        let mut den = SparsePolynomial::zero(self.n);
        den.add_term(norm.clone(), BigRational::from_integer(1.into()));
        for (key, race) in &self.races {
            let value = race.settled_guess()?.clone();
            if key.0 {
                num.add_term(key.1.clone(), value);
            } else {
                den.add_term(key.1.clone(), value);
            }
        }
        Some(RationalFunction::new(num, den))
    }

    fn enter_verify(&mut self, prime_idx: usize, guess: RationalFunction<BigRational>) {
        let p = prime();
        let mut rng =
            ChaCha8Rng::seed_from_u64(stream_seed(self.base_seed, prime_idx, 2));
        let point: Vec<FieldElement> = (0..self.n)
            .map(|_| FieldElement::new(rng.gen_range(1..p)))
            .collect();
        let image = RationalFunction::new(
            SparsePolynomial::from_rational(&guess.numerator),
            SparsePolynomial::from_rational(&guess.denominator),
        );
        let expected = image.evaluate(&point);
        let order = ProbeOrder {
            prime_index: prime_idx,
            t_index: u64::MAX,
            z_orders: Vec::new(),
        };
        self.pending_guess = Some(guess);
        self.phase = Phase::Verify {
            order,
            point,
            expected,
        };
    }

    fn advance(&mut self) -> Result<PhaseStatus, DriverError> {
        loop {
            let phase = std::mem::replace(&mut self.phase, Phase::Idle);
            match phase {
                Phase::Done => {
                    self.phase = Phase::Done;
                    return Ok(PhaseStatus::Finished);
                }
                Phase::Idle => return Ok(PhaseStatus::PrimeComplete),
                Phase::Scan(mut scan) => {
                    if let Some(shift) = scan.result.take() {
                        if self.verbosity >= Verbosity::Important {
                            let touched = shift.iter().filter(|s| !s.is_zero()).count();
                            eprintln!(
                                "[job {}] scan selected a shift touching {} variable(s)",
                                self.index, touched
                            );
                        }
                        self.shift = Some(shift);
                        let engine = self.new_engine(scan.prime_index, 0, None);
                        self.phase = Phase::First {
                            engine: Box::new(engine),
                            attempts: 0,
                        };
                        continue;
                    }
                    let (order, point) = scan.next_probe();
                    if let Some(v) = self.queue.remove(&order) {
                        scan.feed(v).map_err(DriverError::Rat)?;
                        self.phase = Phase::Scan(scan);
                        continue;
                    }
                    self.outstanding = vec![(order, point)];
                    self.phase = Phase::Scan(scan);
                    return Ok(PhaseStatus::NeedsProbes);
                }
                Phase::First {
                    mut engine,
                    attempts,
                } => match self.pump_engine(&mut engine) {
                    Ok(EngineStep::Blocked) => {
                        self.phase = Phase::First { engine, attempts };
                        return Ok(PhaseStatus::NeedsProbes);
                    }
                    Ok(EngineStep::Progress) => {
                        self.phase = Phase::First { engine, attempts };
                        continue;
                    }
                    Ok(EngineStep::Finished) => {
                        let outcome = engine.take_outcome().expect("engine finished");
                        self.fold_outcome(outcome)?;
                        self.phase = Phase::Idle;
                        return Ok(PhaseStatus::PrimeComplete);
                    }
                    Err(e) => {
                        if attempts >= RESTART_BUDGET || e == RatError::NoNormalization {
                            return Err(DriverError::Rat(e));
                        }
                        if self.verbosity >= Verbosity::Chatty {
                            eprintln!(
                                "[job {}] interpolation restart after {e}",
                                self.index
                            );
                        }
                        self.queue.clear();
                        let engine =
                            self.new_engine(self.current_prime, attempts + 1, None);
                        self.phase = Phase::First {
                            engine: Box::new(engine),
                            attempts: attempts + 1,
                        };
                        continue;
                    }
                },
                Phase::Later {
                    mut solver,
                    attempts,
                } => match self.pump_solver(&mut solver) {
                    Ok(EngineStep::Blocked) => {
                        self.phase = Phase::Later { solver, attempts };
                        return Ok(PhaseStatus::NeedsProbes);
                    }
                    Ok(EngineStep::Progress) => {
                        self.phase = Phase::Later { solver, attempts };
                        continue;
                    }
                    Ok(EngineStep::Finished) => {
                        let images = solver.take_images().expect("solver finished");
                        self.fold_images(images);
                        self.phase = Phase::Idle;
                        return Ok(PhaseStatus::PrimeComplete);
                    }
                    Err(e) => {
                        self.queue.clear();
                        if attempts >= RESTART_BUDGET {
                            // partial solves out of luck (e.g. colliding
                            // anchors); fall back to a full interpolation
                            self.phase = Phase::First {
                                engine: Box::new(self.new_engine(
                                    self.current_prime,
                                    0,
                                    None,
                                )),
                                attempts: 0,
                            };
                            continue;
                        }
                        if self.verbosity >= Verbosity::Chatty {
                            eprintln!("[job {}] partial solve restart after {e}", self.index);
                        }
                        let phase =
                            self.make_interpolation_phase(self.current_prime, attempts + 1)?;
                        self.phase = phase;
                        continue;
                    }
                },
                Phase::Verify {
                    order,
                    point,
                    expected,
                } => {
                    let value = match self.queue.remove(&order) {
                        Some(v) => v,
                        None => {
                            self.outstanding = vec![(order.clone(), point.clone())];
                            self.phase = Phase::Verify {
                                order,
                                point,
                                expected,
                            };
                            return Ok(PhaseStatus::NeedsProbes);
                        }
                    };
                    if value == expected {
                        self.result = self.pending_guess.take();
                        self.verified = true;
                        self.phase = Phase::Done;
                        state::save(self)?;
                        if self.verbosity >= Verbosity::Important {
                            eprintln!(
                                "[job {}] verified after {} prime field(s), {} probes",
                                self.index, self.primes_touched, self.probes
                            );
                        }
                        return Ok(PhaseStatus::Finished);
                    }
                    if self.verbosity >= Verbosity::Important {
                        eprintln!(
                            "[job {}] verification failed in prime {}; interpolating",
                            self.index, self.current_prime
                        );
                    }
                    self.pending_guess = None;
                    let phase = self.make_interpolation_phase(self.current_prime, 0)?;
                    self.phase = phase;
                    continue;
                }
            }
        }
    }

    fn pump_engine(&mut self, engine: &mut RatInterpolator) -> Result<EngineStep, RatError> {
        match engine.next_request()? {
            None => Ok(EngineStep::Finished),
            Some(req) => {
                // engine orders are rewritten to the ambient prime index so
                // the queue can reject stale feeds
                let externals: Vec<(ProbeOrder, Vec<FieldElement>)> = req
                    .points
                    .iter()
                    .map(|(o, p)| {
                        let mut o = o.clone();
                        o.prime_index = self.current_prime;
                        (o, p.clone())
                    })
                    .collect();
                if externals.iter().all(|(o, _)| self.queue.contains_key(o)) {
                    let values: Vec<FieldElement> = externals
                        .iter()
                        .map(|(o, _)| self.queue.remove(o).unwrap())
                        .collect();
                    engine.feed(&values)?;
                    Ok(EngineStep::Progress)
                } else {
                    self.outstanding = externals;
                    Ok(EngineStep::Blocked)
                }
            }
        }
    }

    fn pump_solver(&mut self, solver: &mut LaterPrimeSolver) -> Result<EngineStep, RatError> {
        match solver.next_request()? {
            None => Ok(EngineStep::Finished),
            Some(req) => {
                if req
                    .points
                    .iter()
                    .all(|(o, _)| self.queue.contains_key(o))
                {
                    let values: Vec<FieldElement> = req
                        .points
                        .iter()
                        .map(|(o, _)| self.queue.remove(o).unwrap())
                        .collect();
                    solver.feed(&values)?;
                    Ok(EngineStep::Progress)
                } else {
                    self.outstanding = req.points;
                    Ok(EngineStep::Blocked)
                }
            }
        }
    }

    /// Folds a completed full interpolation into the cross-prime state:
    /// first prime establishes the support; later primes (safe mode or
    /// reintroduced shift) contribute images, extending the support if new
    /// monomials appear.
    fn fold_outcome(&mut self, outcome: FirstPrimeOutcome) -> Result<(), DriverError> {
        let p = nth_prime(self.current_prime);
        let function = outcome.function;
        let num_terms: Vec<(MultiIndex, FieldElement)> = function
            .numerator
            .terms
            .iter()
            .map(|(m, c)| (m.clone(), *c))
            .collect();
        let den_terms: Vec<(MultiIndex, FieldElement)> = function
            .denominator
            .terms
            .iter()
            .map(|(m, c)| (m.clone(), *c))
            .collect();
        let new_norm = den_terms
            .first()
            .map(|(m, _)| m.clone())
            .expect("denominator non-empty");
        let rebase = match &self.support {
            None => true,
            Some(s) => *s.norm() != new_norm,
        };
        if rebase {
            if self.support.is_some() && self.verbosity >= Verbosity::Important {
                eprintln!(
                    "[job {}] normalization monomial changed; discarding previous rings",
                    self.index
                );
            }
            self.races.clear();
            self.folded_primes.clear();
            self.support = Some(Support {
                num: num_terms.iter().map(|(m, _)| m.clone()).collect(),
                den: den_terms.iter().map(|(m, _)| m.clone()).collect(),
            });
            for (is_num, terms) in [(true, &num_terms), (false, &den_terms)] {
                for (m, c) in terms {
                    if !is_num && *m == new_norm {
                        continue;
                    }
                    let mut race = CoefficientRace::new();
                    race.add_prime(c.val(), p);
                    self.races.insert((is_num, m.clone()), race);
                }
            }
        } else {
            let mut images: HashMap<CoefKey, FieldElement> = HashMap::new();
            for (is_num, terms) in [(true, &num_terms), (false, &den_terms)] {
                for (m, c) in terms {
                    if !is_num && *m == new_norm {
                        continue;
                    }
                    images.insert((is_num, m.clone()), *c);
                }
            }
            // existing coefficients absent from this prime's image are zero
            // modulo p; brand-new monomials were zero in all earlier primes
            let known: Vec<CoefKey> = self.races.keys().cloned().collect();
            for key in &known {
                let residue = images.remove(key).map_or(0, |c| c.val());
                self.races.get_mut(key).unwrap().add_prime(residue, p);
            }
            for (key, c) in images {
                let mut race = CoefficientRace::new();
                for &idx in &self.folded_primes {
                    race.add_prime(0, nth_prime(idx));
                }
                race.add_prime(c.val(), p);
                let support = self.support.as_mut().unwrap();
                let list = if key.0 {
                    &mut support.num
                } else {
                    &mut support.den
                };
                list.push(key.1.clone());
                list.sort();
                self.races.insert(key, race);
            }
        }
        self.folded_primes.push(self.current_prime);
        state::save(self)?;
        Ok(())
    }

    fn fold_images(&mut self, images: Vec<(CoefKey, FieldElement)>) {
        let p = nth_prime(self.current_prime);
        for (key, c) in images {
            if let Some(race) = self.races.get_mut(&key) {
                race.add_prime(c.val(), p);
            }
        }
        self.folded_primes.push(self.current_prime);
        if let Err(e) = state::save(self) {
            if self.verbosity >= Verbosity::Important {
                eprintln!("[job {}] state save failed: {e}", self.index);
            }
        }
    }
}

enum EngineStep {
    Blocked,
    Progress,
    Finished,
}
