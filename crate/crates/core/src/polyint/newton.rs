use crate::ffield::FieldElement;

use super::poly::{MultiIndex, SparsePolynomial};
use super::PolyError;

/// Feed-style univariate Newton interpolation with early termination.
///
/// Probes arrive one at a time; each probe at a fresh point y_k produces the
/// next Newton coefficient a_k by divided differences:
/// a_{i,j} = (a_{i,j-1} - a_{j-1}) / (y_{i+1} - y_j). Previously emitted
/// coefficients are never altered. Interpolation finishes when `eta`
/// consecutive coefficients vanish, or — if a degree bound is given —
/// deterministically once the coefficient at that degree is computed.
#[derive(Clone, Debug)]
pub struct NewtonState {
    points: Vec<FieldElement>,
    coeffs: Vec<FieldElement>,
    zero_run: u32,
    eta: u32,
    degree_bound: Option<u32>,
    done: bool,
}

impl NewtonState {
    pub fn new(eta: u32, degree_bound: Option<u32>) -> Self {
        assert!(eta >= 1, "termination threshold must be positive");
        NewtonState {
            points: Vec::new(),
            coeffs: Vec::new(),
            zero_run: 0,
            eta,
            degree_bound,
            done: false,
        }
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn probes_used(&self) -> usize {
        self.points.len()
    }

    /// Newton coefficients a_0..a_k emitted so far.
    pub fn coefficients(&self) -> &[FieldElement] {
        &self.coeffs
    }

    /// Feeds the probe f(y) at a fresh point. Returns the done flag.
    pub fn feed(&mut self, y: FieldElement, f: FieldElement) -> Result<bool, PolyError> {
        if self.done {
            return Err(PolyError::AlreadyDone);
        }
        let mut a = f;
        for (j, &yj) in self.points.iter().enumerate() {
            let denom = y - yj;
            if denom.is_zero() {
                return Err(PolyError::CoincidentPoints);
            }
            a = (a - self.coeffs[j]) / denom;
        }
        self.points.push(y);
        self.coeffs.push(a);
        if a.is_zero() {
            self.zero_run += 1;
        } else {
            self.zero_run = 0;
        }
        if let Some(bound) = self.degree_bound {
            if self.coeffs.len() as u32 >= bound + 1 {
                self.done = true;
            }
        }
        if self.zero_run >= self.eta {
            self.done = true;
        }
        Ok(self.done)
    }

    /// Evaluates the Newton form at z (valid mid-interpolation too).
    pub fn evaluate(&self, z: FieldElement) -> FieldElement {
        let k = self.coeffs.len();
        if k == 0 {
            return FieldElement::ZERO;
        }
        let mut acc = self.coeffs[k - 1];
        for i in (0..k - 1).rev() {
            acc = self.coeffs[i] + (z - self.points[i]) * acc;
        }
        acc
    }

    /// Dense canonical coefficients c_0..c_D, trailing zeros trimmed.
    pub fn canonical_coeffs(&self) -> Vec<FieldElement> {
        // Horner expansion: P = a_j + (z - y_j) * P, from the top down.
        let mut dense: Vec<FieldElement> = Vec::new();
        for i in (0..self.coeffs.len()).rev() {
            // dense <- dense * (z - y_i) + a_i
            let mut next = vec![FieldElement::ZERO; dense.len() + 1];
            for (k, &c) in dense.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * self.points[i];
            }
            if next.is_empty() {
                next.push(FieldElement::ZERO);
            }
            next[0] += self.coeffs[i];
            dense = next;
        }
        while dense.last().map_or(false, |c| c.is_zero()) {
            dense.pop();
        }
        dense
    }

    /// The interpolated polynomial as a canonical one-variable polynomial.
    pub fn to_canonical(&self) -> SparsePolynomial<FieldElement> {
        let mut p = SparsePolynomial::zero(1);
        for (k, c) in self.canonical_coeffs().into_iter().enumerate() {
            p.add_term(MultiIndex(vec![k as u32]), c);
        }
        p
    }
}
