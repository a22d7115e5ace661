use crate::ffield::FieldElement;

use super::RatError;

/// Solves a square linear system over the ambient prime field by Gaussian
/// elimination with partial pivoting (any nonzero pivot works exactly).
pub fn solve_linear(
    mut a: Vec<Vec<FieldElement>>,
    mut rhs: Vec<FieldElement>,
) -> Result<Vec<FieldElement>, RatError> {
    let n = rhs.len();
    assert!(a.iter().all(|row| row.len() == n));
    assert_eq!(a.len(), n);
    for col in 0..n {
        let pivot_row = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or(RatError::SingularSystem)?;
        a.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        let inv = a[col][col].inv();
        for c in col..n {
            a[col][c] *= inv;
        }
        rhs[col] *= inv;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col];
                for c in col..n {
                    let sub = factor * a[col][c];
                    a[r][c] -= sub;
                }
                let sub = factor * rhs[col];
                rhs[r] -= sub;
            }
        }
    }
    Ok(rhs)
}

/// Builds and solves the univariate system in the homogenization variable:
/// for each probe (t, f) one equation
///
///   sum_u n_u t^r  -  f * sum_u d_u t^r  =  f * sum_s d_s t^r  -  sum_s n_s t^r
///
/// where u are the unsolved coefficient degrees and s the solved ones
/// (including the normalization coefficient), all evaluated at the same
/// z-point. Returns the values of the unsolved numerator and denominator
/// coefficients, in the degree order given.
pub fn build_univariate_system(
    probes: &[(FieldElement, FieldElement)],
    unknown_num: &[u32],
    unknown_den: &[u32],
    solved_num: &[(u32, FieldElement)],
    solved_den: &[(u32, FieldElement)],
) -> Result<(Vec<FieldElement>, Vec<FieldElement>), RatError> {
    let unknowns = unknown_num.len() + unknown_den.len();
    assert_eq!(
        probes.len(),
        unknowns,
        "need exactly one probe per unknown coefficient"
    );
    let mut a = Vec::with_capacity(unknowns);
    let mut rhs = Vec::with_capacity(unknowns);
    for &(t, f) in probes {
        let mut row = Vec::with_capacity(unknowns);
        for &r in unknown_num {
            row.push(t.pow(r as u64));
        }
        for &r in unknown_den {
            row.push(-(f * t.pow(r as u64)));
        }
        let mut b = FieldElement::ZERO;
        for &(r, v) in solved_den {
            b += f * v * t.pow(r as u64);
        }
        for &(r, v) in solved_num {
            b -= v * t.pow(r as u64);
        }
        a.push(row);
        rhs.push(b);
    }
    let solution = solve_linear(a, rhs)?;
    let (num_part, den_part) = solution.split_at(unknown_num.len());
    Ok((num_part.to_vec(), den_part.to_vec()))
}
