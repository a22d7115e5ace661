use crate::ffield::FieldElement;

use super::newton::NewtonState;
use super::poly::SparsePolynomial;
use super::PolyError;

/// Dense recursive multivariate Newton interpolation, used as a reference
/// oracle. Variable i is interpolated by a Newton scheme whose "values" are
/// the recursively interpolated polynomials in the later variables. Without
/// degree bounds each variable costs D_i + 2 values (early termination with
/// `eta` = 1); with a per-variable bound exactly bound_i + 1.
pub fn dense_newton_interpolate(
    mut black_box: impl FnMut(&[FieldElement]) -> FieldElement,
    n: usize,
    bounds: &[Option<u32>],
    eta: u32,
) -> Result<(SparsePolynomial<FieldElement>, usize), PolyError> {
    assert!(n >= 1);
    assert_eq!(bounds.len(), n);
    let mut probes = 0usize;
    let mut prefix: Vec<FieldElement> = Vec::with_capacity(n);
    let poly = recurse(&mut black_box, &mut prefix, 0, n, bounds, eta, &mut probes)?;
    Ok((poly, probes))
}

fn recurse(
    black_box: &mut impl FnMut(&[FieldElement]) -> FieldElement,
    prefix: &mut Vec<FieldElement>,
    var: usize,
    n: usize,
    bounds: &[Option<u32>],
    eta: u32,
    probes: &mut usize,
) -> Result<SparsePolynomial<FieldElement>, PolyError> {
    if var == n - 1 {
        // innermost variable: ordinary univariate Newton on the black box
        let mut st = NewtonState::new(eta, bounds[var]);
        let mut x = 1u64;
        while !st.is_done() {
            let xv = FieldElement::new(x);
            prefix.push(xv);
            let val = black_box(prefix);
            prefix.pop();
            *probes += 1;
            st.feed(xv, val)?;
            x += 1;
        }
        let mut poly = SparsePolynomial::zero(n);
        for (e, c) in st.canonical_coeffs().into_iter().enumerate() {
            let mut idx = super::poly::MultiIndex::zeros(n);
            idx.0[var] = e as u32;
            poly.add_term(idx, c);
        }
        return Ok(poly);
    }
    // polynomial-valued Newton in z_var
    let mut points: Vec<FieldElement> = Vec::new();
    let mut coeffs: Vec<SparsePolynomial<FieldElement>> = Vec::new();
    let mut zero_run = 0u32;
    let mut x = 1u64;
    loop {
        let xv = FieldElement::new(x);
        prefix.push(xv);
        let sub = recurse(black_box, prefix, var + 1, n, bounds, eta, probes)?;
        prefix.pop();
        let mut a = sub;
        for (j, &yj) in points.iter().enumerate() {
            let denom = xv - yj;
            if denom.is_zero() {
                return Err(PolyError::CoincidentPoints);
            }
            a = a.sub(&coeffs[j]).scale(&denom.inv());
        }
        points.push(xv);
        if a.is_zero() {
            zero_run += 1;
        } else {
            zero_run = 0;
        }
        coeffs.push(a);
        if let Some(bound) = bounds[var] {
            if coeffs.len() as u32 >= bound + 1 {
                break;
            }
        }
        if zero_run >= eta {
            break;
        }
        x += 1;
    }
    // Horner expansion with polynomial coefficients
    let mut acc = SparsePolynomial::zero(n);
    for i in (0..coeffs.len()).rev() {
        acc = acc
            .mul_var_pow(var, 1)
            .sub(&acc.scale(&points[i]))
            .add(&coeffs[i]);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffield::prime_scope;
    use crate::polyint::poly::MultiIndex;

    fn fe(n: u64) -> FieldElement {
        FieldElement::new(n)
    }

    fn example(z: &[FieldElement]) -> FieldElement {
        fe(3) * z[0].pow(5)
            + fe(7) * z[0] * z[1].pow(4)
            + fe(11) * z[0] * z[1] * z[2].pow(3)
            + fe(13) * z[1].pow(5)
    }

    #[test]
    fn unbounded_probe_count_on_worked_example() {
        let _s = prime_scope(9223372036854775783);
        let (poly, probes) = dense_newton_interpolate(example, 3, &[None, None, None], 1).unwrap();
        assert_eq!(probes, 245); // (5+2)(5+2)(3+2)
        assert_eq!(poly.terms[&MultiIndex(vec![1, 1, 3])], fe(11));
        assert_eq!(poly.num_terms(), 4);
    }

    #[test]
    fn bounded_probe_count_on_worked_example() {
        let _s = prime_scope(9223372036854775783);
        let (poly, probes) =
            dense_newton_interpolate(example, 3, &[Some(5), Some(5), None], 1).unwrap();
        assert_eq!(probes, 180); // (5+1)(5+1)(3+2)
        assert_eq!(poly.num_terms(), 4);
    }

    #[test]
    fn univariate_matches_newton() {
        let _s = prime_scope(509);
        let (poly, probes) =
            dense_newton_interpolate(|z: &[FieldElement]| z[0].pow(2), 1, &[None], 1).unwrap();
        assert_eq!(probes, 4);
        let mut expect = SparsePolynomial::zero(1);
        expect.add_term(MultiIndex(vec![2]), fe(1));
        assert_eq!(poly, expect);
    }
}
