use crate::ffield::FieldElement;

use super::RatError;

/// Feed-style Thiele continued-fraction interpolation of a univariate
/// rational function:
///
///   tau(t) = b_0 + (t - t_1)/(b_1 + (t - t_2)/(b_2 + ...))
///
/// Each probe at a fresh point t_k either extends the fraction with a new
/// coefficient via the inverse-difference recursion
/// b_{i,j} = (t_{i+1} - t_j)/(b_{i,j-1} - b_{j-1}), or — if the current
/// fraction already reproduces the probe — terminates the interpolation.
#[derive(Clone, Debug)]
pub struct ThieleState {
    points: Vec<FieldElement>,
    coeffs: Vec<FieldElement>,
    done: bool,
    probes: usize,
}

impl ThieleState {
    pub fn new() -> Self {
        ThieleState {
            points: Vec::new(),
            coeffs: Vec::new(),
            done: false,
            probes: 0,
        }
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn probes_used(&self) -> usize {
        self.probes
    }

    /// Feeds f(t_new); returns the done flag.
    pub fn feed(&mut self, t_new: FieldElement, f_val: FieldElement) -> Result<bool, RatError> {
        assert!(!self.done, "fed a finished interpolation");
        self.probes += 1;
        if !self.coeffs.is_empty() {
            if let Some(tau) = self.evaluate(t_new) {
                if tau == f_val {
                    self.done = true;
                    return Ok(true);
                }
            }
        }
        let mut b = f_val;
        for (&tj, &bj) in self.points.iter().zip(self.coeffs.iter()) {
            let denom = b - bj;
            if denom.is_zero() {
                return Err(RatError::UnluckyZero);
            }
            b = (t_new - tj) / denom;
        }
        self.points.push(t_new);
        self.coeffs.push(b);
        Ok(false)
    }

    /// Evaluates the fraction through its convergents
    /// A_k = b_k A_{k-1} + (t - t_k) A_{k-2} (same for B); None at a pole of
    /// the interpolant.
    pub fn evaluate(&self, t: FieldElement) -> Option<FieldElement> {
        let (mut a_prev, mut a) = (FieldElement::one(), self.coeffs[0]);
        let (mut b_prev, mut b) = (FieldElement::ZERO, FieldElement::one());
        for k in 1..self.coeffs.len() {
            let factor = t - self.points[k - 1];
            let a_next = self.coeffs[k] * a + factor * a_prev;
            let b_next = self.coeffs[k] * b + factor * b_prev;
            (a_prev, a) = (a, a_next);
            (b_prev, b) = (b, b_next);
        }
        if b.is_zero() {
            None
        } else {
            Some(a / b)
        }
    }

    /// Converts the fraction to a ratio of dense univariate polynomials,
    /// normalized so the lowest nonzero denominator coefficient is one.
    /// Returns (numerator coefficients, denominator coefficients) by
    /// ascending power of t, trailing zeros trimmed.
    pub fn to_rational(&self) -> (Vec<FieldElement>, Vec<FieldElement>) {
        assert!(!self.coeffs.is_empty(), "no probes fed");
        // polynomial convergents under the same recurrence
        let mut a_prev = vec![FieldElement::one()];
        let mut a = vec![self.coeffs[0]];
        let mut b_prev: Vec<FieldElement> = Vec::new();
        let mut b = vec![FieldElement::one()];
        for k in 1..self.coeffs.len() {
            let tk = self.points[k - 1];
            let a_next = poly_step(self.coeffs[k], &a, tk, &a_prev);
            let b_next = poly_step(self.coeffs[k], &b, tk, &b_prev);
            (a_prev, a) = (a, a_next);
            (b_prev, b) = (b, b_next);
        }
        trim(&mut a);
        trim(&mut b);
        let pivot = b
            .iter()
            .find(|c| !c.is_zero())
            .copied()
            .expect("denominator of the convergent is nonzero");
        let scale = pivot.inv();
        for c in a.iter_mut().chain(b.iter_mut()) {
            *c *= scale;
        }
        (a, b)
    }
}

impl Default for ThieleState {
    fn default() -> Self {
        Self::new()
    }
}

/// b_k * p + (t - t_k) * q as dense coefficient vectors.
fn poly_step(
    bk: FieldElement,
    p: &[FieldElement],
    tk: FieldElement,
    q: &[FieldElement],
) -> Vec<FieldElement> {
    let mut out = vec![FieldElement::ZERO; p.len().max(q.len() + 1)];
    for (i, &c) in p.iter().enumerate() {
        out[i] += bk * c;
    }
    for (i, &c) in q.iter().enumerate() {
        out[i + 1] += c;
        out[i] -= tk * c;
    }
    out
}

fn trim(v: &mut Vec<FieldElement>) {
    while v.last().map_or(false, |c| c.is_zero()) {
        v.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffield::prime_scope;

    fn fe(n: u64) -> FieldElement {
        FieldElement::new(n)
    }

    /// (316 + 464 t) / (1 + 178 t + 317 t^2) over Z_509 — the homogenized
    /// and shifted form of (3 z1 + 7 z2)/(z1 + z2 + 4 z1 z2) at y = (1, 10),
    /// s = (4, 1).
    fn worked_example(t: FieldElement) -> FieldElement {
        (fe(316) + fe(464) * t) / (fe(1) + fe(178) * t + fe(317) * t * t)
    }

    fn run(f: impl Fn(FieldElement) -> FieldElement) -> ThieleState {
        let mut st = ThieleState::new();
        let mut t = 1u64;
        while !st.feed(fe(t), f(fe(t))).unwrap() {
            t += 1;
        }
        st
    }

    #[test]
    fn constant_function_takes_two_probes() {
        let _s = prime_scope(509);
        let st = run(|_| fe(4));
        assert_eq!(st.probes_used(), 2);
        assert_eq!(st.to_rational(), (vec![fe(4)], vec![fe(1)]));
    }

    #[test]
    fn worked_example_coefficients_and_probe_count() {
        let _s = prime_scope(509);
        let st = run(worked_example);
        let (num, den) = st.to_rational();
        assert_eq!(num, vec![fe(316), fe(464)]);
        assert_eq!(den, vec![fe(1), fe(178), fe(317)]);
        // continued-fraction depth 2*max(1,2) = 4: five coefficients plus
        // one agreement probe
        assert_eq!(st.probes_used(), 6);
    }

    #[test]
    fn unshifted_worked_example_lacks_constants() {
        let _s = prime_scope(509);
        // 73 t / (11 t + 40 t^2) reduces to 73/(11 + 40 t): the common
        // factor t is invisible to the interpolation
        let f = |t: FieldElement| (fe(73) * t) / (fe(11) * t + fe(40) * t * t);
        let st = run(f);
        let (num, den) = st.to_rational();
        assert_eq!(den[0], fe(1));
        assert_eq!(num.len(), 1);
        assert_eq!(den.len(), 2);
        // 73/11 normalized: num = 73 * inv(11)
        assert_eq!(num[0], fe(73) / fe(11));
    }

    #[test]
    fn reproduces_black_box_at_fresh_points() {
        let _s = prime_scope(509);
        let st = run(worked_example);
        for t in 100u64..120 {
            assert_eq!(st.evaluate(fe(t)), Some(worked_example(fe(t))));
        }
    }
}
