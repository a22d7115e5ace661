use crate::ffield::FieldElement;

use super::newton::NewtonState;
use super::poly::{MultiIndex, SparsePolynomial};
use super::vandermonde::{monomial_evals, solve_shifted_vandermonde};
use super::PolyError;

/// Behavioral switches for the staged sparse interpolation.
#[derive(Clone, Copy, Debug)]
pub struct ZippelOptions {
    /// Consecutive zero Newton coefficients required for early termination.
    pub eta: u32,
    /// Remove coefficients whose univariate interpolation has terminated from
    /// subsequent systems of the same stage.
    pub temporary_pruning: bool,
    /// Known total-degree bound; enables permanent pruning (a coefficient's
    /// interpolation stops deterministically at degree D - d_i).
    pub degree_bound: Option<u32>,
}

impl Default for ZippelOptions {
    fn default() -> Self {
        ZippelOptions {
            eta: 1,
            temporary_pruning: true,
            degree_bound: None,
        }
    }
}

/// One stage beyond the first: interpolating variable `var` for every
/// monomial in the previously interpolated variables.
struct StageState {
    var: usize,
    /// Monomials of the previous stage, ascending colexicographically.
    monomials: Vec<MultiIndex>,
    /// Monomial evaluations at the row anchors (the Vandermonde nodes).
    v: Vec<FieldElement>,
    newtons: Vec<NewtonState>,
    /// z-order of the next value of the stage variable.
    next_order: u64,
}

/// Staged sparse multivariate interpolation: stage s recovers the dependence
/// on z_s, one univariate Newton interpolation per monomial surviving from
/// stage s-1, with the per-value coefficient evaluations obtained from a
/// shifted transposed Vandermonde system over the anchor powers.
///
/// Probe points are requested in batches via [`needed_points`]; the matching
/// black-box values are returned through [`feed_values`]. The first value of
/// each new stage variable is free: the previous stage's canonical
/// coefficients already are the coefficient values at the anchor itself.
///
/// [`needed_points`]: ZippelState::needed_points
/// [`feed_values`]: ZippelState::feed_values
pub struct ZippelState {
    n: usize,
    anchors: Vec<FieldElement>,
    opts: ZippelOptions,
    probes: usize,
    phase: Phase,
    result: Option<SparsePolynomial<FieldElement>>,
}

enum Phase {
    StageOne { newton: NewtonState, next_order: u64 },
    Later(StageState),
    Done,
}

impl ZippelState {
    pub fn new(n: usize, anchors: Vec<FieldElement>, opts: ZippelOptions) -> Self {
        assert!(n >= 1);
        assert_eq!(anchors.len(), n);
        assert!(
            anchors.iter().all(|a| !a.is_zero()),
            "anchor points must be nonzero"
        );
        ZippelState {
            n,
            anchors,
            opts,
            probes: 0,
            phase: Phase::StageOne {
                newton: NewtonState::new(opts.eta, opts.degree_bound),
                next_order: 1,
            },
            result: None,
        }
    }

    pub fn is_done(&self) -> bool {
        matches!(self.phase, Phase::Done)
    }

    pub fn probes_used(&self) -> usize {
        self.probes
    }

    /// Current stage (1-based); n+1 once finished.
    pub fn stage(&self) -> usize {
        match &self.phase {
            Phase::StageOne { .. } => 1,
            Phase::Later(st) => st.var + 1,
            Phase::Done => self.n + 1,
        }
    }

    pub fn result(&self) -> Option<&SparsePolynomial<FieldElement>> {
        self.result.as_ref()
    }

    /// The batch of probe points needed next; empty once done.
    pub fn needed_points(&self) -> Vec<Vec<FieldElement>> {
        match &self.phase {
            Phase::Done => Vec::new(),
            Phase::StageOne { next_order, .. } => {
                let mut point: Vec<FieldElement> = self.anchors.clone();
                point[0] = self.anchors[0].pow(*next_order);
                vec![point]
            }
            Phase::Later(st) => {
                let rows = self.system_size(st);
                let zs_val = self.anchors[st.var].pow(st.next_order);
                (1..=rows as u64)
                    .map(|r| {
                        let mut point: Vec<FieldElement> = self.anchors.clone();
                        for k in 0..st.var {
                            point[k] = self.anchors[k].pow(r);
                        }
                        point[st.var] = zs_val;
                        point
                    })
                    .collect()
            }
        }
    }

    /// The same batch as `needed_points`, expressed as per-variable z-order
    /// tuples: entry k means "the k-th variable at the k-th anchor raised to
    /// that order". Used when probes are addressed by order rather than value.
    pub fn needed_orders(&self) -> Vec<Vec<u64>> {
        match &self.phase {
            Phase::Done => Vec::new(),
            Phase::StageOne { next_order, .. } => {
                let mut o = vec![1u64; self.n];
                o[0] = *next_order;
                vec![o]
            }
            Phase::Later(st) => {
                let rows = self.system_size(st);
                (1..=rows as u64)
                    .map(|r| {
                        let mut o = vec![1u64; self.n];
                        for item in o.iter_mut().take(st.var) {
                            *item = r;
                        }
                        o[st.var] = st.next_order;
                        o
                    })
                    .collect()
            }
        }
    }

    fn system_size(&self, st: &StageState) -> usize {
        if self.opts.temporary_pruning {
            st.newtons.iter().filter(|nw| !nw.is_done()).count()
        } else {
            st.monomials.len()
        }
    }

    /// Feeds the black-box values for the batch returned by `needed_points`.
    pub fn feed_values(&mut self, values: &[FieldElement]) -> Result<(), PolyError> {
        match &mut self.phase {
            Phase::Done => return Err(PolyError::AlreadyDone),
            Phase::StageOne { newton, next_order } => {
                assert_eq!(values.len(), 1);
                self.probes += 1;
                let y = self.anchors[0].pow(*next_order);
                let done = newton.feed(y, values[0])?;
                *next_order += 1;
                if done {
                    let poly = stage_one_poly(newton, self.n);
                    self.finish_stage(poly)?;
                }
            }
            Phase::Later(st) => {
                let rows = if self.opts.temporary_pruning {
                    st.newtons.iter().filter(|nw| !nw.is_done()).count()
                } else {
                    st.monomials.len()
                };
                assert_eq!(values.len(), rows);
                self.probes += rows;
                let zs_val = self.anchors[st.var].pow(st.next_order);
                let solved = if self.opts.temporary_pruning {
                    // subtract the contribution of terminated coefficients,
                    // then solve the reduced system for the active ones
                    let active: Vec<usize> = (0..st.newtons.len())
                        .filter(|&i| !st.newtons[i].is_done())
                        .collect();
                    let v_sys: Vec<FieldElement> = active.iter().map(|&i| st.v[i]).collect();
                    let rhs: Vec<FieldElement> = values
                        .iter()
                        .enumerate()
                        .map(|(r, &val)| {
                            let mut adjusted = val;
                            for i in 0..st.newtons.len() {
                                if st.newtons[i].is_done() {
                                    adjusted -= st.newtons[i].evaluate(zs_val)
                                        * st.v[i].pow(r as u64 + 1);
                                }
                            }
                            adjusted
                        })
                        .collect();
                    let coeffs = solve_shifted_vandermonde(&v_sys, &rhs)?;
                    active.into_iter().zip(coeffs).collect::<Vec<_>>()
                } else {
                    let coeffs = solve_shifted_vandermonde(&st.v, values)?;
                    (0..st.newtons.len()).zip(coeffs).collect::<Vec<_>>()
                };
                for (i, value) in solved {
                    if !st.newtons[i].is_done() {
                        st.newtons[i].feed(zs_val, value)?;
                    }
                }
                st.next_order += 1;
                if st.newtons.iter().all(|nw| nw.is_done()) {
                    let poly = later_stage_poly(st, self.n);
                    self.finish_stage(poly)?;
                }
            }
        }
        Ok(())
    }

    /// Installs a finished stage's polynomial and opens the next stage,
    /// skipping through stages that complete without any probes.
    fn finish_stage(&mut self, mut poly: SparsePolynomial<FieldElement>) -> Result<(), PolyError> {
        let mut stage = self.stage();
        loop {
            if stage == self.n || poly.is_zero() {
                self.result = Some(poly);
                self.phase = Phase::Done;
                return Ok(());
            }
            let var = stage; // next stage's variable index (0-based)
            let st = self.open_stage(var, &poly)?;
            if st.newtons.iter().all(|nw| nw.is_done()) {
                poly = later_stage_poly(&st, self.n);
                stage += 1;
                continue;
            }
            self.phase = Phase::Later(st);
            return Ok(());
        }
    }

    fn open_stage(
        &self,
        var: usize,
        prev: &SparsePolynomial<FieldElement>,
    ) -> Result<StageState, PolyError> {
        let mut monomials: Vec<MultiIndex> = prev.terms.keys().cloned().collect();
        monomials.sort_by(|a, b| a.colex_cmp(b));
        let v = monomial_evals(&self.anchors[..var], &monomials);
        let mut newtons = Vec::with_capacity(monomials.len());
        for m in &monomials {
            let bound = self
                .opts
                .degree_bound
                .map(|d| d.saturating_sub(m.degree()));
            newtons.push(NewtonState::new(self.opts.eta, bound));
        }
        // free first value: the previous stage's canonical coefficients are
        // the coefficient values at the anchor itself
        let y = self.anchors[var];
        for (i, m) in monomials.iter().enumerate() {
            let c = prev.terms[m].clone();
            newtons[i].feed(y, c)?;
        }
        Ok(StageState {
            var,
            monomials,
            v,
            newtons,
            next_order: 2,
        })
    }
}

fn stage_one_poly(newton: &NewtonState, n: usize) -> SparsePolynomial<FieldElement> {
    let mut poly = SparsePolynomial::zero(n);
    for (e, c) in newton.canonical_coeffs().into_iter().enumerate() {
        let mut idx = MultiIndex::zeros(n);
        idx.0[0] = e as u32;
        poly.add_term(idx, c);
    }
    poly
}

fn later_stage_poly(st: &StageState, n: usize) -> SparsePolynomial<FieldElement> {
    let mut poly = SparsePolynomial::zero(n);
    for (i, m) in st.monomials.iter().enumerate() {
        for (e, c) in st.newtons[i].canonical_coeffs().into_iter().enumerate() {
            let mut idx = m.clone();
            idx.0[st.var] += e as u32;
            debug_assert_eq!(idx.0.len(), n);
            poly.add_term(idx, c);
        }
    }
    poly
}

/// Drives a [`ZippelState`] against a black-box closure. Returns the
/// interpolated polynomial and the number of probes consumed. A singular
/// Vandermonde system is reported to the caller, who should retry with a
/// fresh anchor tuple.
pub fn zippel_interpolate(
    mut black_box: impl FnMut(&[FieldElement]) -> FieldElement,
    n: usize,
    anchors: Vec<FieldElement>,
    opts: ZippelOptions,
) -> Result<(SparsePolynomial<FieldElement>, usize), PolyError> {
    let mut state = ZippelState::new(n, anchors, opts);
    while !state.is_done() {
        let points = state.needed_points();
        let values: Vec<FieldElement> = points.iter().map(|p| black_box(p)).collect();
        state.feed_values(&values)?;
    }
    let probes = state.probes_used();
    Ok((state.result.expect("done state has a result"), probes))
}
