use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ffield::{prime, FieldElement};
use crate::polyint::{MultiIndex, SparsePolynomial, ZippelOptions, ZippelState};

use super::system::build_univariate_system;
use super::thiele::ThieleState;
use super::{RatError, RationalFunction};

const RETRY_BUDGET: u32 = 3;

/// Address of one black-box probe: which prime, which draw of the
/// homogenization variable, and the per-variable anchor orders of the
/// z-point it belongs to.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProbeOrder {
    pub prime_index: usize,
    pub t_index: u64,
    pub z_orders: Vec<u64>,
}

/// A batch of probe points the interpolator needs next. All points of one
/// batch share the same z-point (they differ only in the homogenization
/// variable t).
#[derive(Clone, Debug)]
pub struct Request {
    pub points: Vec<(ProbeOrder, Vec<FieldElement>)>,
}

#[derive(Clone, Debug)]
pub struct FirstPrimeOptions {
    /// Shift applied to every probe argument; zero entries leave the
    /// variable unshifted.
    pub shift: Vec<FieldElement>,
    /// Anchor points for z_2..z_n (entry 0 is ignored; z_1 is fixed to 1
    /// and recovered afterwards by homogenization). Drawn randomly when
    /// absent.
    pub anchors: Option<Vec<FieldElement>>,
    pub seed: u64,
}

/// Everything learned from a completed single-prime interpolation.
#[derive(Clone, Debug)]
pub struct FirstPrimeOutcome {
    pub function: RationalFunction<FieldElement>,
    pub probes: usize,
    /// Numerator/denominator coefficients over t from the continued-fraction
    /// stage, scaled so the normalization coefficient is one.
    pub thiele_num: Vec<FieldElement>,
    pub thiele_den: Vec<FieldElement>,
    /// The interpolated top-degree numerator coefficient before
    /// homogenization (a polynomial in z_2..z_n).
    pub top_num_unhomogenized: Option<SparsePolynomial<FieldElement>>,
    /// The shift-corrected constant coefficient of the numerator.
    pub corrected_num_constant: Option<FieldElement>,
    /// Per-t-degree homogenized polynomial parts in the engine's scale
    /// (the shifted constant of the normalization side is one).
    pub num_parts: BTreeMap<u32, SparsePolynomial<FieldElement>>,
    pub den_parts: BTreeMap<u32, SparsePolynomial<FieldElement>>,
    pub shift: Vec<FieldElement>,
    pub anchors: Vec<FieldElement>,
}

/// One side (numerator or denominator) of the homogenized function during
/// the tracking phase: per-t-degree interpolation states, raw value buffers,
/// and the accumulated shift contributions of the solved degrees.
struct SideState {
    /// Degree 0 of this side is the normalization anchor; its raw shifted
    /// value is 1 at every z-point.
    is_norm: bool,
    /// solved[r]: homogenized polynomial of t-degree r once interpolated.
    solved: Vec<Option<SparsePolynomial<FieldElement>>>,
    /// zero_raw[r]: the raw coefficient vanished at the random anchor
    /// tuple, so it vanishes identically with overwhelming probability
    /// (Zippel–Schwartz); its raw value is taken as zero at every z-point.
    zero_raw: Vec<bool>,
    /// Raw (shift-polluted) coefficient values keyed by z-order tuple.
    buffers: Vec<HashMap<Vec<u64>, FieldElement>>,
    /// Per-t-degree buckets of sum over solved r' of P_{r'}(z+s) - P_{r'}(z).
    h_buckets: BTreeMap<u32, SparsePolynomial<FieldElement>>,
    active_deg: Option<u32>,
    active: Option<ZippelState>,
    /// Fresh z-points granted to this side (arbitration fairness counter).
    new_tuples: usize,
}

impl SideState {
    /// Seeds the per-degree buffers at the anchor tuple with the
    /// continued-fraction coefficients (they were probed at z-orders all 1).
    fn new(is_norm: bool, coeffs: &[FieldElement], m: usize) -> Self {
        let anchor_tuple = vec![1u64; m];
        let mut buffers: Vec<HashMap<Vec<u64>, FieldElement>> =
            vec![HashMap::new(); coeffs.len()];
        for (r, &c) in coeffs.iter().enumerate() {
            buffers[r].insert(anchor_tuple.clone(), c);
        }
        let zero_raw: Vec<bool> = coeffs
            .iter()
            .enumerate()
            .map(|(r, c)| c.is_zero() && !(is_norm && r == 0))
            .collect();
        SideState {
            is_norm,
            solved: vec![None; coeffs.len()],
            zero_raw,
            buffers,
            h_buckets: BTreeMap::new(),
            active_deg: None,
            active: None,
            new_tuples: 0,
        }
    }

    fn complete(&self) -> bool {
        self.solved.iter().all(|p| p.is_some())
    }

    fn highest_unsolved(&self) -> Option<u32> {
        (0..self.solved.len())
            .rev()
            .find(|&r| self.solved[r].is_none())
            .map(|r| r as u32)
    }

    /// Degrees still needed as unknowns in univariate systems: everything
    /// unsolved except the normalization anchor (whose value is known) and
    /// the degrees whose raw coefficient is known to vanish.
    fn unsolved_degrees(&self) -> Vec<u32> {
        (0..self.solved.len())
            .filter(|&r| {
                self.solved[r].is_none() && !(self.is_norm && r == 0) && !self.zero_raw[r]
            })
            .map(|r| r as u32)
            .collect()
    }

    fn raw_value(&self, r: u32, tuple: &[u64]) -> Option<FieldElement> {
        if self.is_norm && r == 0 {
            return Some(FieldElement::one());
        }
        if self.zero_raw[r as usize] {
            return Some(FieldElement::ZERO);
        }
        self.buffers[r as usize].get(tuple).copied()
    }

    /// Shift contribution of the solved higher degrees at this z-point.
    fn h_value(&self, r: u32, point_hat: &[FieldElement]) -> FieldElement {
        self.h_buckets
            .get(&r)
            .map(|p| p.evaluate(point_hat))
            .unwrap_or(FieldElement::ZERO)
    }

    /// Values of the known degrees for a univariate system at this z-point:
    /// raw (shifted) values, i.e. solved polynomial plus shift contribution.
    fn solved_values(&self, point_hat: &[FieldElement]) -> Vec<(u32, FieldElement)> {
        let mut out = Vec::new();
        for r in 0..self.solved.len() {
            let r = r as u32;
            if self.is_norm && r == 0 {
                out.push((0, FieldElement::one()));
            } else if self.zero_raw[r as usize] {
                out.push((r, FieldElement::ZERO));
            } else if let Some(poly) = &self.solved[r as usize] {
                out.push((r, poly.evaluate(point_hat) + self.h_value(r, point_hat)));
            }
        }
        out
    }
}

struct PendingSystem {
    tuple: Vec<u64>,
    point_hat: Vec<FieldElement>,
    ts: Vec<FieldElement>,
    unknown_num: Vec<u32>,
    unknown_den: Vec<u32>,
    retries: u32,
}

struct TrackState {
    num: SideState,
    den: SideState,
    pending: Option<PendingSystem>,
}

enum Phase {
    Thiele {
        state: ThieleState,
        pending_t: Option<FieldElement>,
        retries: u32,
    },
    Track(Box<TrackState>),
    Done,
}

enum TrackStep {
    Progress,
    Requested,
    Finished,
}

/// Feed-style interpolation of a multivariate rational function over the
/// ambient prime field.
///
/// Workflow: z_1 is set to 1 (recovered afterwards by homogenization with
/// respect to the total degree in t); a Thiele continued fraction in t at
/// the anchor tuple determines the maximal degrees and the normalization;
/// all remaining coefficient values are obtained from univariate systems in
/// t at further anchor powers, feeding one staged sparse interpolation per
/// t-degree, from the highest degree downwards so the effect of the shift
/// can be subtracted analytically before lower degrees are interpolated.
pub struct RatInterpolator {
    n: usize,
    shift: Vec<FieldElement>,
    anchors: Vec<FieldElement>,
    rng: ChaCha8Rng,
    used_ts: HashSet<u64>,
    t_counter: u64,
    probes: usize,
    phase: Phase,
    request: Option<Request>,
    diag_thiele_num: Vec<FieldElement>,
    diag_thiele_den: Vec<FieldElement>,
    diag_top_num: Option<SparsePolynomial<FieldElement>>,
    diag_num_constant: Option<FieldElement>,
    outcome: Option<FirstPrimeOutcome>,
}

impl RatInterpolator {
    pub fn new(n: usize, opts: &FirstPrimeOptions) -> Self {
        assert!(n >= 1);
        assert_eq!(opts.shift.len(), n);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let anchors = match &opts.anchors {
            Some(a) => {
                assert_eq!(a.len(), n);
                let mut a = a.clone();
                a[0] = FieldElement::one();
                a
            }
            None => draw_anchors(n, &mut rng),
        };
        RatInterpolator {
            n,
            shift: opts.shift.clone(),
            anchors,
            rng,
            used_ts: HashSet::new(),
            t_counter: 0,
            probes: 0,
            phase: Phase::Thiele {
                state: ThieleState::new(),
                pending_t: None,
                retries: 0,
            },
            request: None,
            diag_thiele_num: Vec::new(),
            diag_thiele_den: Vec::new(),
            diag_top_num: None,
            diag_num_constant: None,
            outcome: None,
        }
    }

    pub fn is_done(&self) -> bool {
        matches!(self.phase, Phase::Done)
    }

    pub fn probes_used(&self) -> usize {
        self.probes
    }

    pub fn anchors(&self) -> &[FieldElement] {
        &self.anchors
    }

    pub fn outcome(&self) -> Option<&FirstPrimeOutcome> {
        self.outcome.as_ref()
    }

    pub fn take_outcome(&mut self) -> Option<FirstPrimeOutcome> {
        self.outcome.take()
    }

    fn draw_t(&mut self) -> FieldElement {
        let p = prime();
        loop {
            let v = self.rng.gen_range(1..p);
            if self.used_ts.insert(v) {
                return FieldElement::new(v);
            }
        }
    }

    /// z = t * y_hat + s componentwise.
    fn probe_point(&self, t: FieldElement, point_hat: &[FieldElement]) -> Vec<FieldElement> {
        (0..self.n)
            .map(|i| t * point_hat[i] + self.shift[i])
            .collect()
    }

    /// (1, y_2^{o_1}, ..., y_n^{o_{n-1}}) for an order tuple.
    fn point_hat(&self, tuple: &[u64]) -> Vec<FieldElement> {
        let mut p = Vec::with_capacity(self.n);
        p.push(FieldElement::one());
        for (k, &o) in tuple.iter().enumerate() {
            p.push(self.anchors[k + 1].pow(o));
        }
        p
    }

    /// Advances through all work that needs no new probes; afterwards either
    /// a request is outstanding (returned) or the interpolation is done
    /// (None).
    pub fn next_request(&mut self) -> Result<Option<Request>, RatError> {
        loop {
            if let Some(req) = &self.request {
                return Ok(Some(req.clone()));
            }
            match &self.phase {
                Phase::Done => return Ok(None),
                Phase::Thiele { .. } => {
                    let t = self.draw_t();
                    let point_hat = self.anchors.clone();
                    let point = self.probe_point(t, &point_hat);
                    let order = ProbeOrder {
                        prime_index: 0,
                        t_index: self.t_counter,
                        z_orders: vec![1; self.n - 1],
                    };
                    self.t_counter += 1;
                    if let Phase::Thiele { pending_t, .. } = &mut self.phase {
                        *pending_t = Some(t);
                    }
                    self.request = Some(Request {
                        points: vec![(order, point)],
                    });
                }
                Phase::Track(_) => self.pump_track()?,
            }
        }
    }

    /// One step of tracking-phase progress: feeds buffered values into the
    /// active per-degree interpolation, or installs a probe request, or
    /// finishes.
    fn pump_track(&mut self) -> Result<(), RatError> {
        let mut track = match std::mem::replace(&mut self.phase, Phase::Done) {
            Phase::Track(t) => t,
            _ => unreachable!("pump_track outside tracking phase"),
        };
        match self.pump_track_inner(&mut track) {
            Ok(TrackStep::Finished) => self.finish(&track),
            Ok(TrackStep::Progress) | Ok(TrackStep::Requested) => {
                self.phase = Phase::Track(track);
                Ok(())
            }
            Err(e) => {
                self.phase = Phase::Track(track);
                Err(e)
            }
        }
    }

    fn pump_track_inner(&mut self, track: &mut TrackState) -> Result<TrackStep, RatError> {
        if track.pending.is_some() {
            return Ok(TrackStep::Requested);
        }
        if track.num.complete() && track.den.complete() {
            return Ok(TrackStep::Finished);
        }
        // both sides keep an active tracker (top-down per side) so a side
        // with sparse true coefficients completes early and its raw values
        // drop out of the univariate systems as knowns
        for is_num in [true, false] {
            let side = if is_num { &mut track.num } else { &mut track.den };
            if side.complete() || side.active.is_some() {
                continue;
            }
            let r = side.highest_unsolved().expect("side incomplete");
            // A degree with identically-zero raw coefficient needs no
            // interpolation: its true part is exactly the negated shift
            // contribution of the higher degrees. This is what makes a
            // sparse shift cheap — the side it leaves untouched keeps its
            // zero gaps.
            if side.zero_raw[r as usize] {
                let part = side
                    .h_buckets
                    .get(&r)
                    .cloned()
                    .unwrap_or_else(|| SparsePolynomial::zero(self.n))
                    .scale(&-FieldElement::one());
                finalize_part(side, r, part, &self.shift);
                return Ok(TrackStep::Progress);
            }
            side.active_deg = Some(r);
            side.active = Some(ZippelState::new(
                self.n - 1,
                self.anchors[1..].to_vec(),
                ZippelOptions {
                    eta: 1,
                    temporary_pruning: true,
                    degree_bound: Some(r),
                },
            ));
        }
        // feed any side whose entire next batch is already buffered
        let mut blocked: Vec<(bool, Vec<u64>)> = Vec::new();
        for is_num in [true, false] {
            let side = if is_num { &mut track.num } else { &mut track.den };
            if side.complete() {
                continue;
            }
            let r = side.active_deg.expect("active degree set");
            let orders = side.active.as_ref().expect("active state").needed_orders();
            let mut batch = Vec::with_capacity(orders.len());
            let mut missing = None;
            for tuple in &orders {
                match side.raw_value(r, tuple) {
                    Some(raw) => {
                        let point_hat = self.point_hat(tuple);
                        batch.push(raw - side.h_value(r, &point_hat));
                    }
                    None => {
                        missing = Some(tuple.clone());
                        break;
                    }
                }
            }
            if let Some(tuple) = missing {
                blocked.push((is_num, tuple));
                continue;
            }
            if is_num && r == 0 && !batch.is_empty() {
                self.diag_num_constant = Some(batch[0]);
            }
            let zip = side.active.as_mut().expect("active state");
            zip.feed_values(&batch)?;
            if zip.is_done() {
                let poly_m = zip.result().expect("finished interpolation").clone();
                if is_num && r as usize + 1 == side.solved.len() {
                    self.diag_top_num = Some(poly_m.clone());
                }
                finalize_tracker(side, r, poly_m, self.n, &self.shift);
                side.active = None;
                side.active_deg = None;
            }
            return Ok(TrackStep::Progress);
        }
        // every incomplete side is blocked on a fresh z-point: grant it to
        // the side that has been granted fewer so far (tie: numerator), so
        // neither side's expensive trackers can starve the cheap ones that
        // would shrink the systems
        let (grant_num, tuple) = blocked
            .into_iter()
            .min_by_key(|(is_num, _)| {
                let side = if *is_num { &track.num } else { &track.den };
                (side.new_tuples, !*is_num)
            })
            .expect("an incomplete side is blocked");
        if grant_num {
            track.num.new_tuples += 1;
        } else {
            track.den.new_tuples += 1;
        }
        self.install_pending(track, tuple);
        Ok(TrackStep::Requested)
    }

    /// Prepares a univariate system in t at the given z-point: one fresh t
    /// per coefficient degree that is still unknown on either side.
    fn install_pending(&mut self, track: &mut TrackState, tuple: Vec<u64>) {
        let unknown_num = track.num.unsolved_degrees();
        let unknown_den = track.den.unsolved_degrees();
        let unknowns = unknown_num.len() + unknown_den.len();
        debug_assert!(unknowns > 0);
        let ts: Vec<FieldElement> = (0..unknowns).map(|_| self.draw_t()).collect();
        let point_hat = self.point_hat(&tuple);
        self.request = Some(self.system_request(&ts, &tuple, &point_hat));
        track.pending = Some(PendingSystem {
            tuple,
            point_hat,
            ts,
            unknown_num,
            unknown_den,
            retries: 0,
        });
    }

    fn system_request(
        &mut self,
        ts: &[FieldElement],
        tuple: &[u64],
        point_hat: &[FieldElement],
    ) -> Request {
        let points = ts
            .iter()
            .map(|&t| {
                let order = ProbeOrder {
                    prime_index: 0,
                    t_index: self.t_counter,
                    z_orders: tuple.to_vec(),
                };
                self.t_counter += 1;
                (order, self.probe_point(t, point_hat))
            })
            .collect();
        Request { points }
    }

    /// Supplies the black-box values for the outstanding request, in order.
    pub fn feed(&mut self, values: &[FieldElement]) -> Result<(), RatError> {
        let request = self.request.take().ok_or(RatError::NoRequest)?;
        assert_eq!(values.len(), request.points.len());
        self.probes += values.len();
        match std::mem::replace(&mut self.phase, Phase::Done) {
            Phase::Done => Err(RatError::NoRequest),
            Phase::Thiele {
                mut state,
                mut pending_t,
                mut retries,
            } => {
                let t = pending_t.take().expect("probe request was outstanding");
                match state.feed(t, values[0]) {
                    Ok(false) => {
                        self.phase = Phase::Thiele {
                            state,
                            pending_t: None,
                            retries,
                        };
                        Ok(())
                    }
                    Ok(true) => {
                        let (num_c, den_c) = state.to_rational();
                        self.enter_tracking(num_c, den_c)
                    }
                    Err(RatError::UnluckyZero) => {
                        retries += 1;
                        if retries > RETRY_BUDGET {
                            return Err(RatError::RetriesExhausted(
                                "unlucky zeros in continued-fraction stage".into(),
                            ));
                        }
                        self.phase = Phase::Thiele {
                            state: ThieleState::new(),
                            pending_t: None,
                            retries,
                        };
                        Ok(())
                    }
                    Err(e) => Err(e),
                }
            }
            Phase::Track(mut track) => {
                let result = self.feed_track(&mut track, values);
                self.phase = Phase::Track(track);
                result
            }
        }
    }

    fn feed_track(
        &mut self,
        track: &mut TrackState,
        values: &[FieldElement],
    ) -> Result<(), RatError> {
        let pending = track.pending.as_mut().expect("system request outstanding");
        let probes: Vec<(FieldElement, FieldElement)> = pending
            .ts
            .iter()
            .copied()
            .zip(values.iter().copied())
            .collect();
        let solved_num = track.num.solved_values(&pending.point_hat);
        let solved_den = track.den.solved_values(&pending.point_hat);
        match build_univariate_system(
            &probes,
            &pending.unknown_num,
            &pending.unknown_den,
            &solved_num,
            &solved_den,
        ) {
            Ok((num_vals, den_vals)) => {
                for (&r, &v) in pending.unknown_num.iter().zip(num_vals.iter()) {
                    track.num.buffers[r as usize].insert(pending.tuple.clone(), v);
                }
                for (&r, &v) in pending.unknown_den.iter().zip(den_vals.iter()) {
                    track.den.buffers[r as usize].insert(pending.tuple.clone(), v);
                }
                track.pending = None;
                Ok(())
            }
            Err(RatError::SingularSystem) => {
                pending.retries += 1;
                if pending.retries > RETRY_BUDGET {
                    return Err(RatError::RetriesExhausted(
                        "singular univariate systems".into(),
                    ));
                }
                // redraw the t values and re-request the same z-point
                let count = pending.ts.len();
                let tuple = pending.tuple.clone();
                let point_hat = pending.point_hat.clone();
                let ts: Vec<FieldElement> = (0..count).map(|_| self.draw_t()).collect();
                self.request = Some(self.system_request(&ts, &tuple, &point_hat));
                track.pending.as_mut().expect("still pending").ts = ts;
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    fn enter_tracking(
        &mut self,
        mut num_c: Vec<FieldElement>,
        mut den_c: Vec<FieldElement>,
    ) -> Result<(), RatError> {
        // pick the normalization anchor: denominator constant preferred
        // (the continued-fraction result is already scaled to it),
        // numerator constant otherwise
        let den_has_const = den_c.first().map_or(false, |c| !c.is_zero());
        let num_has_const = num_c.first().map_or(false, |c| !c.is_zero());
        let norm_is_den = if den_has_const {
            true
        } else if num_has_const {
            let scale = num_c[0].inv();
            for c in num_c.iter_mut().chain(den_c.iter_mut()) {
                *c *= scale;
            }
            false
        } else {
            return Err(RatError::NoNormalization);
        };
        self.diag_thiele_num = num_c.clone();
        self.diag_thiele_den = den_c.clone();
        let m = self.n - 1;
        let mut track = TrackState {
            num: SideState::new(!norm_is_den, &num_c, m),
            den: SideState::new(norm_is_den, &den_c, m),
            pending: None,
        };
        if self.n == 1 {
            // univariate: the t-coefficients are already the z_1
            // coefficients; nothing is left to interpolate
            for (side, coeffs) in [(&mut track.num, &num_c), (&mut track.den, &den_c)] {
                for (r, &c) in coeffs.iter().enumerate() {
                    let mut part = SparsePolynomial::zero(1);
                    if !c.is_zero() {
                        part.add_term(MultiIndex(vec![r as u32]), c);
                    }
                    side.solved[r] = Some(part);
                }
            }
            return self.finish(&track);
        }
        self.phase = Phase::Track(Box::new(track));
        Ok(())
    }

    fn finish(&mut self, track: &TrackState) -> Result<(), RatError> {
        let mut num_parts = BTreeMap::new();
        let mut den_parts = BTreeMap::new();
        let mut num = SparsePolynomial::zero(self.n);
        let mut den = SparsePolynomial::zero(self.n);
        for (r, part) in track.num.solved.iter().enumerate() {
            let part = part.as_ref().expect("all degrees solved").clone();
            if !part.is_zero() {
                num = num.add(&part);
                num_parts.insert(r as u32, part);
            }
        }
        for (r, part) in track.den.solved.iter().enumerate() {
            let part = part.as_ref().expect("all degrees solved").clone();
            if !part.is_zero() {
                den = den.add(&part);
                den_parts.insert(r as u32, part);
            }
        }
        if den.is_zero() {
            return Err(RatError::RetriesExhausted(
                "denominator vanished during interpolation".into(),
            ));
        }
        let function = RationalFunction::new(num, den).normalize();
        self.phase = Phase::Done;
        self.outcome = Some(FirstPrimeOutcome {
            function,
            probes: self.probes,
            thiele_num: self.diag_thiele_num.clone(),
            thiele_den: self.diag_thiele_den.clone(),
            top_num_unhomogenized: self.diag_top_num.clone(),
            corrected_num_constant: self.diag_num_constant,
            num_parts,
            den_parts,
            shift: self.shift.clone(),
            anchors: self.anchors.clone(),
        });
        Ok(())
    }
}

/// Embeds the interpolated coefficient (a polynomial in z_2..z_n) into the
/// full variable set, restores the z_1 power from the t-degree, stores it,
/// and accumulates the analytic shift contribution for the lower degrees.
fn finalize_tracker(
    side: &mut SideState,
    r: u32,
    poly_m: SparsePolynomial<FieldElement>,
    n: usize,
    shift: &[FieldElement],
) {
    let mut homogenized = SparsePolynomial::zero(n);
    for (m_idx, c) in &poly_m.terms {
        let d = m_idx.degree();
        debug_assert!(d <= r, "coefficient degree exceeds its t-degree");
        let mut idx = Vec::with_capacity(n);
        idx.push(r - d);
        idx.extend_from_slice(&m_idx.0);
        homogenized.add_term(MultiIndex(idx), *c);
    }
    finalize_part(side, r, homogenized, shift);
}

/// Stores an already-homogenized solved part and accumulates its analytic
/// shift contribution into the lower-degree buckets.
fn finalize_part(
    side: &mut SideState,
    r: u32,
    homogenized: SparsePolynomial<FieldElement>,
    shift: &[FieldElement],
) {
    let n = homogenized.n_vars;
    if !homogenized.is_zero() && r > 0 && shift.iter().any(|s| !s.is_zero()) {
        let diff = homogenized.shifted(shift).sub(&homogenized);
        for (d, bucket) in diff.split_total_degree() {
            // the top bucket cancels exactly; everything below pollutes the
            // lower t-degrees and is subtracted there before interpolation
            if d < r {
                let entry = side
                    .h_buckets
                    .entry(d)
                    .or_insert_with(|| SparsePolynomial::zero(n));
                *entry = entry.add(&bucket);
            }
        }
    }
    side.solved[r as usize] = Some(homogenized);
}

fn draw_anchors(n: usize, rng: &mut ChaCha8Rng) -> Vec<FieldElement> {
    let p = prime();
    let mut anchors = vec![FieldElement::one()];
    let mut seen = HashSet::new();
    while anchors.len() < n {
        let v = rng.gen_range(2..p);
        if seen.insert(v) {
            anchors.push(FieldElement::new(v));
        }
    }
    anchors
}

/// Random distinct nonzero shift components.
pub(crate) fn draw_shift(n: usize, rng: &mut ChaCha8Rng) -> Vec<FieldElement> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let v = rng.gen_range(1..1u64 << 16);
        if seen.insert(v) {
            out.push(FieldElement::new(v));
        }
    }
    out
}

/// Interpolates a rational function over the ambient prime by driving the
/// feed-style engine against a closure. On failures the whole interpolation
/// restarts with fresh randomness (and fresh anchors unless pinned); probes
/// accumulate across restarts.
pub fn interpolate_rational(
    mut black_box: impl FnMut(&[FieldElement]) -> FieldElement,
    n: usize,
    opts: &FirstPrimeOptions,
) -> Result<FirstPrimeOutcome, RatError> {
    let mut total_probes = 0usize;
    let mut attempt_opts = opts.clone();
    for attempt in 0..=RETRY_BUDGET {
        let mut engine = RatInterpolator::new(n, &attempt_opts);
        let result = loop {
            match engine.next_request() {
                Ok(None) => break Ok(()),
                Ok(Some(req)) => {
                    let values: Vec<FieldElement> =
                        req.points.iter().map(|(_, p)| black_box(p)).collect();
                    if let Err(e) = engine.feed(&values) {
                        break Err(e);
                    }
                }
                Err(e) => break Err(e),
            }
        };
        match result {
            Ok(()) => {
                let mut outcome = engine.take_outcome().expect("engine finished");
                outcome.probes += total_probes;
                return Ok(outcome);
            }
            Err(e) => {
                total_probes += engine.probes_used();
                if attempt == RETRY_BUDGET || e == RatError::NoNormalization {
                    // a missing constant cannot be fixed by new randomness
                    return Err(e);
                }
                attempt_opts.seed = attempt_opts.seed.wrapping_add(0x9e3779b97f4a7c15);
            }
        }
    }
    unreachable!()
}

/// Determines the maximal t-degrees of numerator and denominator under a
/// given shift via one continued-fraction interpolation. Returns (numerator
/// coefficient count, denominator coefficient count, has constant term,
/// probes used).
fn thiele_degrees(
    black_box: &mut impl FnMut(&[FieldElement]) -> FieldElement,
    n: usize,
    anchors: &[FieldElement],
    shift: &[FieldElement],
    rng: &mut ChaCha8Rng,
) -> Result<(usize, usize, bool, usize), RatError> {
    let p = prime();
    let mut probes = 0usize;
    'attempt: for attempt in 0..=RETRY_BUDGET {
        let mut st = ThieleState::new();
        let mut used = HashSet::new();
        loop {
            let mut t = rng.gen_range(1..p);
            while !used.insert(t) {
                t = rng.gen_range(1..p);
            }
            let t = FieldElement::new(t);
            let point: Vec<FieldElement> =
                (0..n).map(|i| t * anchors[i] + shift[i]).collect();
            let value = black_box(&point);
            probes += 1;
            match st.feed(t, value) {
                Ok(true) => {
                    let (num_c, den_c) = st.to_rational();
                    let has_const = num_c.first().map_or(false, |c| !c.is_zero())
                        || den_c.first().map_or(false, |c| !c.is_zero());
                    return Ok((num_c.len(), den_c.len(), has_const, probes));
                }
                Ok(false) => {}
                Err(RatError::UnluckyZero) if attempt < RETRY_BUDGET => continue 'attempt,
                Err(e) => return Err(e),
            }
        }
    }
    unreachable!()
}

/// Scans for a shift touching as few variables as possible: first no shift,
/// then single variables starting from the last, then windows of two, and
/// so on; the all-variable shift is the fallback. A candidate is accepted
/// when its maximal numerator/denominator t-degrees match the all-shifted
/// baseline (an insufficient shift loses degrees to a cancellation of a
/// power of t) and a constant term is available for normalization.
pub fn shift_scan(
    mut black_box: impl FnMut(&[FieldElement]) -> FieldElement,
    n: usize,
    seed: u64,
) -> Result<(Vec<FieldElement>, usize), RatError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let anchors = draw_anchors(n, &mut rng);
    let full_shift = draw_shift(n, &mut rng);
    let (rn, rd, _, mut probes) =
        thiele_degrees(&mut black_box, n, &anchors, &full_shift, &mut rng)?;
    for width in 0..n {
        for start in (0..=(n - width)).rev() {
            if width == 0 && start != 0 {
                continue; // the empty shift is a single candidate
            }
            let mut candidate = vec![FieldElement::ZERO; n];
            candidate[start..start + width].copy_from_slice(&full_shift[start..start + width]);
            let (rn_c, rd_c, has_const, used) =
                thiele_degrees(&mut black_box, n, &anchors, &candidate, &mut rng)?;
            probes += used;
            if rn_c == rn && rd_c == rd && has_const {
                return Ok((candidate, probes));
            }
        }
    }
    Ok((full_shift, probes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffield::prime_scope;

    fn fe(n: u64) -> FieldElement {
        FieldElement::new(n)
    }

    /// (3 z1 + 7 z2)/(z1 + z2 + 4 z1 z2)
    fn example_fn(z: &[FieldElement]) -> FieldElement {
        (fe(3) * z[0] + fe(7) * z[1]) / (z[0] + z[1] + fe(4) * z[0] * z[1])
    }

    #[test]
    fn example_stage_values_and_probe_count() {
        let _s = prime_scope(509);
        let opts = FirstPrimeOptions {
            shift: vec![fe(4), fe(1)],
            anchors: Some(vec![fe(1), fe(10)]),
            seed: 7,
        };
        let outcome = interpolate_rational(example_fn, 2, &opts).unwrap();
        assert_eq!(outcome.thiele_num, vec![fe(316), fe(464)]);
        assert_eq!(outcome.thiele_den, vec![fe(1), fe(178), fe(317)]);
        let top = outcome.top_num_unhomogenized.unwrap();
        assert_eq!(top.to_string_with(&[String::from("z2")]), "291+170*z2");
        assert_eq!(outcome.corrected_num_constant, Some(FieldElement::ZERO));
        assert_eq!(outcome.probes, 12);
        let vars = [String::from("z1"), String::from("z2")];
        assert_eq!(
            outcome.function.render(&vars),
            "(3*z1+7*z2)/(z1+z2+4*z1*z2)"
        );
    }

    #[test]
    fn univariate_function_without_shift() {
        let _s = prime_scope(9223372036854775783);
        let f = |z: &[FieldElement]| {
            (fe(5) + z[0]) / (FieldElement::one() + fe(2) * z[0] * z[0])
        };
        let opts = FirstPrimeOptions {
            shift: vec![FieldElement::ZERO],
            anchors: None,
            seed: 3,
        };
        let outcome = interpolate_rational(f, 1, &opts).unwrap();
        let vars = [String::from("z1")];
        assert_eq!(outcome.function.render(&vars), "(5+z1)/(1+2*z1^2)");
    }

    #[test]
    fn missing_shift_loses_degrees_and_yields_a_wrong_function() {
        let _s = prime_scope(9223372036854775783);
        // without a shift the homogenized probes share a factor of t, so
        // the interpolation silently sees the reduced (wrong) function —
        // the shift scan exists to rule this configuration out
        let opts = FirstPrimeOptions {
            shift: vec![FieldElement::ZERO, FieldElement::ZERO],
            anchors: None,
            seed: 3,
        };
        let outcome = interpolate_rational(example_fn, 2, &opts).unwrap();
        let point = [fe(2), fe(5)];
        assert_ne!(outcome.function.evaluate(&point), example_fn(&point));
    }

    #[test]
    fn scan_finds_single_variable_shift() {
        let _s = prime_scope(9223372036854775783);
        let (shift, _probes) = shift_scan(example_fn, 2, 5).unwrap();
        let touched = shift.iter().filter(|s| !s.is_zero()).count();
        assert_eq!(touched, 1);
        assert!(shift[0].is_zero());
    }

    #[test]
    fn scan_accepts_empty_shift_when_constant_exists() {
        let _s = prime_scope(9223372036854775783);
        let f = |z: &[FieldElement]| (fe(5) + z[1]) / (FieldElement::one() + z[0] * z[1]);
        let (shift, _probes) = shift_scan(f, 2, 11).unwrap();
        assert!(shift.iter().all(|s| s.is_zero()));
    }

    #[test]
    fn trivariate_function_round_trips() {
        let _s = prime_scope(9223372036854775783);
        // (1 + 3 z1 z3 + z2^2)/(7 z1 + z2 z3 + 2 z3^2)
        let f = |z: &[FieldElement]| {
            (FieldElement::one() + fe(3) * z[0] * z[2] + z[1] * z[1])
                / (fe(7) * z[0] + z[1] * z[2] + fe(2) * z[2] * z[2])
        };
        let opts = FirstPrimeOptions {
            shift: vec![FieldElement::ZERO; 3],
            anchors: None,
            seed: 17,
        };
        let outcome = interpolate_rational(f, 3, &opts).unwrap();
        for probe in [[2u64, 5, 9], [100, 3, 77], [812, 4441, 23]] {
            let point: Vec<FieldElement> = probe.iter().map(|&v| fe(v)).collect();
            assert_eq!(outcome.function.evaluate(&point), f(&point));
        }
    }

    #[test]
    fn shifted_trivariate_function_round_trips() {
        let _s = prime_scope(9223372036854775783);
        // no constant anywhere: (z1 z2 + z3^3)/(z1 + z2 z3 + z1 z2 z3)
        let f = |z: &[FieldElement]| {
            (z[0] * z[1] + z[2].pow(3)) / (z[0] + z[1] * z[2] + z[0] * z[1] * z[2])
        };
        let (shift, _) = shift_scan(f, 3, 23).unwrap();
        let opts = FirstPrimeOptions {
            shift,
            anchors: None,
            seed: 29,
        };
        let outcome = interpolate_rational(f, 3, &opts).unwrap();
        for probe in [[2u64, 5, 9], [100, 3, 77], [812, 4441, 23]] {
            let point: Vec<FieldElement> = probe.iter().map(|&v| fe(v)).collect();
            assert_eq!(outcome.function.evaluate(&point), f(&point));
        }
    }
}
