use crate::ffield::FieldElement;

use super::poly::MultiIndex;
use super::PolyError;

/// Evaluates each monomial at the anchor tuple: v_i = prod_k y_k^{alpha_ik}.
pub fn monomial_evals(anchors: &[FieldElement], monomials: &[MultiIndex]) -> Vec<FieldElement> {
    monomials
        .iter()
        .map(|m| {
            let mut v = FieldElement::one();
            for (k, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    v *= anchors[k].pow(e as u64);
                }
            }
            v
        })
        .collect()
}

/// Solves the shifted transposed Vandermonde system
///
///   probes[k] = sum_i c_i * v_i^{k+1},   k = 0..T-1
///
/// in O(T^2) time and O(T) space. The probes must be taken at consecutive
/// anchor powers starting from power 1 (the shift by one power is what makes
/// an all-ones anchor row impossible). Master-polynomial method: with
/// B(z) = prod_m (z - v_m) and Q_j = B / (z - v_j) by synthetic division,
/// c_j = (sum_k q_{j,k-1} probes[k]) / (v_j * Q_j(v_j)).
pub fn solve_shifted_vandermonde(
    v: &[FieldElement],
    probes: &[FieldElement],
) -> Result<Vec<FieldElement>, PolyError> {
    let t = v.len();
    assert_eq!(probes.len(), t, "need exactly one probe per unknown");
    if t == 0 {
        return Ok(Vec::new());
    }
    if v.iter().any(|x| x.is_zero()) {
        return Err(PolyError::SingularVandermonde);
    }
    if t == 1 {
        return Ok(vec![probes[0] / v[0]]);
    }
    // d_0..d_t: coefficients of B(z) = prod (z - v_m), d_t = 1
    let mut d = vec![FieldElement::ZERO; t + 1];
    d[0] = FieldElement::one();
    for (m, &vm) in v.iter().enumerate() {
        d[m + 1] = FieldElement::one();
        for k in (1..=m).rev() {
            let lower = d[k - 1];
            d[k] = lower - vm * d[k];
        }
        d[0] = -(vm * d[0]);
    }
    let mut out = Vec::with_capacity(t);
    let mut q = vec![FieldElement::ZERO; t];
    for &vj in v {
        // synthetic division of B by (z - vj)
        q[t - 1] = FieldElement::one();
        for k in (0..t - 1).rev() {
            q[k] = d[k + 1] + vj * q[k + 1];
        }
        let mut num = FieldElement::ZERO;
        let mut qj_at_vj = FieldElement::ZERO;
        let mut vj_pow = FieldElement::one();
        for k in 0..t {
            num += q[k] * probes[k];
            qj_at_vj += q[k] * vj_pow;
            vj_pow *= vj;
        }
        let denom = vj * qj_at_vj;
        if denom.is_zero() {
            // duplicate v entries make Q_j vanish at v_j
            return Err(PolyError::SingularVandermonde);
        }
        out.push(num / denom);
    }
    Ok(out)
}
