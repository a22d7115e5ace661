//! Partial interpolation in primes after the first: once the monomial
//! support of numerator and denominator is known, each new prime only has to
//! recover coefficient images. Univariate systems in the homogenization
//! variable produce per-t-degree values at anchor powers, and a shifted
//! transposed Vandermonde solve per degree recovers the unknown monomial
//! coefficients. Degrees whose coefficients are already known (accepted over
//! Q, or the normalization anchor) are moved to the right-hand side, so the
//! systems shrink as coefficients settle.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ffield::{prime, FieldElement};
use crate::polyint::{solve_shifted_vandermonde, MultiIndex};
use crate::ratint::{build_univariate_system, ProbeOrder, RatError, Request};

/// (is_numerator, monomial) — identifies one coefficient of the function.
pub type CoefKey = (bool, MultiIndex);

const T_RETRY_BUDGET: u32 = 3;

/// How the overall scale of this prime's images is fixed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveMode {
    /// A t-degree with a single contributing monomial: its coefficient is
    /// set to one, and all images are rescaled afterwards using the
    /// canonical normalization monomial (whose true image is one).
    SingleMonomial { anchor: CoefKey },
    /// A t-degree whose coefficient polynomial is fully known over Q fixes
    /// the scale directly; solved images are canonical as-is.
    KnownDegree,
}

/// One t-degree of one side during the partial solve.
struct DegreeState {
    is_num: bool,
    deg: u32,
    /// Known coefficients: (image, monomial value at the anchor tuple).
    known: Vec<(FieldElement, FieldElement)>,
    unknown_keys: Vec<MultiIndex>,
    unknown_v: Vec<FieldElement>,
    /// Unknown-part values at anchor powers j = 1, 2, ...
    values: Vec<FieldElement>,
    solved: Option<Vec<FieldElement>>,
}

impl DegreeState {
    fn active(&self) -> bool {
        !self.unknown_keys.is_empty() && self.solved.is_none()
    }

    /// Full value of this degree's coefficient polynomial at the j-th anchor
    /// power; only available once inactive.
    fn value_at(&self, j: u64) -> FieldElement {
        debug_assert!(!self.active());
        let mut out = FieldElement::ZERO;
        for &(c, v) in &self.known {
            out += c * v.pow(j);
        }
        if let Some(sol) = &self.solved {
            for (c, v) in sol.iter().zip(&self.unknown_v) {
                out += *c * v.pow(j);
            }
        }
        out
    }
}

struct PendingSystem {
    j: u64,
    ts: Vec<FieldElement>,
    unknown_num: Vec<u32>,
    unknown_den: Vec<u32>,
    request: Request,
}

/// Coefficient description handed in by the job: monomial plus its known
/// canonical image in the current prime, if the coefficient is settled.
pub struct SupportEntry {
    pub key: CoefKey,
    pub known_image: Option<FieldElement>,
}

pub struct LaterPrimeSolver {
    prime_index: usize,
    n: usize,
    rng: ChaCha8Rng,
    anchors: Vec<FieldElement>,
    mode: SolveMode,
    norm_monomial: MultiIndex,
    degrees: Vec<DegreeState>,
    j: u64,
    used_ts: HashSet<u64>,
    t_counter: u64,
    t_retries: u32,
    pending: Option<PendingSystem>,
    images: Option<Vec<(CoefKey, FieldElement)>>,
}

impl LaterPrimeSolver {
    /// `entries` lists every coefficient of the support except the
    /// normalization monomial. In `SingleMonomial` mode all `known_image`s
    /// are ignored and the anchor coefficient is pinned to one (lambda
    /// scale); in `KnownDegree` mode the anchor degree must be fully known.
    pub fn new(
        entries: &[SupportEntry],
        norm_monomial: MultiIndex,
        mode: SolveMode,
        n: usize,
        prime_index: usize,
        seed: u64,
    ) -> Result<Self, RatError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = prime();
        let mut anchors = vec![FieldElement::one()];
        let mut seen = HashSet::new();
        while anchors.len() < n {
            let v = rng.gen_range(2..p);
            if seen.insert(v) {
                anchors.push(FieldElement::new(v));
            }
        }

        let mono_val = |m: &MultiIndex| -> FieldElement {
            // z_1 is the homogenization variable, fixed to anchor one
            let mut v = FieldElement::one();
            for (i, &e) in m.0.iter().enumerate().skip(1) {
                if e > 0 {
                    v *= anchors[i].pow(e as u64);
                }
            }
            v
        };

        let norm_key: CoefKey = (false, norm_monomial.clone());
        let mut degrees: HashMap<(bool, u32), DegreeState> = HashMap::new();
        {
            let mut push = |key: &CoefKey, known: Option<FieldElement>| {
                let deg = key.1.degree();
                let st = degrees.entry((key.0, deg)).or_insert_with(|| DegreeState {
                    is_num: key.0,
                    deg,
                    known: Vec::new(),
                    unknown_keys: Vec::new(),
                    unknown_v: Vec::new(),
                    values: Vec::new(),
                    solved: None,
                });
                let v = mono_val(&key.1);
                match known {
                    Some(c) => st.known.push((c, v)),
                    None => {
                        st.unknown_keys.push(key.1.clone());
                        st.unknown_v.push(v);
                    }
                }
            };
            for entry in entries {
                let known = match &mode {
                    SolveMode::SingleMonomial { anchor } => {
                        (entry.key == *anchor).then(FieldElement::one)
                    }
                    SolveMode::KnownDegree => entry.known_image,
                };
                push(&entry.key, known);
            }
            let norm_known = match &mode {
                // pinning the normalization monomial to one IS the
                // canonical scale, so lambda is one in that case
                SolveMode::SingleMonomial { anchor } if *anchor == norm_key => {
                    Some(FieldElement::one())
                }
                SolveMode::SingleMonomial { .. } => None,
                SolveMode::KnownDegree => Some(FieldElement::one()),
            };
            push(&norm_key, norm_known);
        }
        if let SolveMode::SingleMonomial { anchor } = &mode {
            let st = degrees
                .get(&(anchor.0, anchor.1.degree()))
                .ok_or(RatError::SingularSystem)?;
            if st.known.len() != 1 || !st.unknown_keys.is_empty() {
                return Err(RatError::SingularSystem);
            }
        }

        let mut degrees: Vec<DegreeState> = degrees.into_values().collect();
        degrees.sort_by_key(|d| (!d.is_num, d.deg));
        // distinct nonzero monomial values per degree, else the Vandermonde
        // systems are singular — caller restarts with a fresh seed
        for d in &degrees {
            let mut seen = HashSet::new();
            for v in &d.unknown_v {
                if v.is_zero() || !seen.insert(v.val()) {
                    return Err(RatError::SingularSystem);
                }
            }
        }
        Ok(LaterPrimeSolver {
            prime_index,
            n,
            rng,
            anchors,
            mode,
            norm_monomial,
            degrees,
            j: 0,
            used_ts: HashSet::new(),
            t_counter: 0,
            t_retries: 0,
            pending: None,
            images: None,
        })
    }

    pub fn take_images(&mut self) -> Option<Vec<(CoefKey, FieldElement)>> {
        self.images.take()
    }

    fn draw_t(&mut self) -> FieldElement {
        let p = prime();
        let mut t = self.rng.gen_range(1..p);
        while !self.used_ts.insert(t) {
            t = self.rng.gen_range(1..p);
        }
        FieldElement::new(t)
    }

    fn build_pending(&mut self, j: u64) {
        let unknown_num: Vec<u32> = self
            .degrees
            .iter()
            .filter(|d| d.is_num && d.active())
            .map(|d| d.deg)
            .collect();
        let unknown_den: Vec<u32> = self
            .degrees
            .iter()
            .filter(|d| !d.is_num && d.active())
            .map(|d| d.deg)
            .collect();
        let unknowns = unknown_num.len() + unknown_den.len();
        let ts: Vec<FieldElement> = (0..unknowns).map(|_| self.draw_t()).collect();
        let point_hat: Vec<FieldElement> = self.anchors.iter().map(|a| a.pow(j)).collect();
        let points = ts
            .iter()
            .map(|&t| {
                let order = ProbeOrder {
                    prime_index: self.prime_index,
                    t_index: self.t_counter,
                    z_orders: vec![j; self.n.saturating_sub(1)],
                };
                self.t_counter += 1;
                let point: Vec<FieldElement> = point_hat.iter().map(|&y| t * y).collect();
                (order, point)
            })
            .collect();
        self.pending = Some(PendingSystem {
            j,
            ts,
            unknown_num,
            unknown_den,
            request: Request { points },
        });
    }

    /// The next batch of probes, or None once all images are assembled.
    pub fn next_request(&mut self) -> Result<Option<Request>, RatError> {
        if self.images.is_some() {
            return Ok(None);
        }
        if let Some(p) = &self.pending {
            return Ok(Some(p.request.clone()));
        }
        if self.degrees.iter().any(|d| d.active()) {
            let j = self.j + 1;
            self.j = j;
            self.build_pending(j);
            return Ok(Some(self.pending.as_ref().unwrap().request.clone()));
        }
        self.finalize()?;
        Ok(None)
    }

    /// Values for the outstanding request, in request order.
    pub fn feed(&mut self, values: &[FieldElement]) -> Result<(), RatError> {
        let pending = self.pending.take().ok_or(RatError::NoRequest)?;
        assert_eq!(values.len(), pending.ts.len());
        let probes: Vec<(FieldElement, FieldElement)> = pending
            .ts
            .iter()
            .copied()
            .zip(values.iter().copied())
            .collect();
        let j = pending.j;
        let solved_num: Vec<(u32, FieldElement)> = self
            .degrees
            .iter()
            .filter(|d| d.is_num && !d.active())
            .map(|d| (d.deg, d.value_at(j)))
            .collect();
        let solved_den: Vec<(u32, FieldElement)> = self
            .degrees
            .iter()
            .filter(|d| !d.is_num && !d.active())
            .map(|d| (d.deg, d.value_at(j)))
            .collect();
        let solution = build_univariate_system(
            &probes,
            &pending.unknown_num,
            &pending.unknown_den,
            &solved_num,
            &solved_den,
        );
        let (num_vals, den_vals) = match solution {
            Ok(v) => {
                self.t_retries = 0;
                v
            }
            Err(RatError::SingularSystem) if self.t_retries < T_RETRY_BUDGET => {
                // unlucky t draws; redo the same anchor power with fresh ones
                self.t_retries += 1;
                self.build_pending(j);
                return Ok(());
            }
            Err(e) => return Err(e),
        };
        let solved_degrees = pending
            .unknown_num
            .iter()
            .zip(num_vals)
            .map(|(&d, v)| ((true, d), v))
            .chain(
                pending
                    .unknown_den
                    .iter()
                    .zip(den_vals)
                    .map(|(&d, v)| ((false, d), v)),
            );
        for ((is_num, deg), val) in solved_degrees {
            let st = self
                .degrees
                .iter_mut()
                .find(|d| d.is_num == is_num && d.deg == deg)
                .expect("unknown degree tracked");
            // strip the known sub-polynomial: the Vandermonde solve only
            // covers the unknown monomials
            let mut unknown_part = val;
            for &(c, v) in &st.known {
                unknown_part -= c * v.pow(j);
            }
            st.values.push(unknown_part);
            if st.values.len() == st.unknown_keys.len() {
                st.solved = Some(solve_shifted_vandermonde(&st.unknown_v, &st.values)?);
            }
        }
        Ok(())
    }

    fn finalize(&mut self) -> Result<(), RatError> {
        let mut raw: Vec<(CoefKey, FieldElement)> = Vec::new();
        for d in &self.degrees {
            if let Some(sol) = &d.solved {
                for (m, c) in d.unknown_keys.iter().zip(sol) {
                    raw.push(((d.is_num, m.clone()), *c));
                }
            }
        }
        let norm_key: CoefKey = (false, self.norm_monomial.clone());
        let images = match &self.mode {
            SolveMode::KnownDegree => raw,
            SolveMode::SingleMonomial { anchor } if *anchor == norm_key => raw,
            SolveMode::SingleMonomial { anchor } => {
                // lambda is the solved image of the canonical normalization
                // monomial (true image one); divide everything by it and
                // recover the pinned anchor coefficient as its inverse
                let lambda = raw
                    .iter()
                    .find(|(k, _)| *k == norm_key)
                    .map(|(_, c)| *c)
                    .ok_or(RatError::SingularSystem)?;
                if lambda.is_zero() {
                    return Err(RatError::SingularSystem);
                }
                let inv = lambda.inv();
                let mut out: Vec<(CoefKey, FieldElement)> = raw
                    .into_iter()
                    .filter(|(k, _)| *k != norm_key)
                    .map(|(k, c)| (k, c * inv))
                    .collect();
                out.push((anchor.clone(), inv));
                out
            }
        };
        self.images = Some(images);
        Ok(())
    }
}
