//! Arithmetic in prime fields Z_p for primes up to 63 bits.
//!
//! The defining prime is process-global state, mirroring the phase structure
//! of the multi-prime reconstruction: all concurrent interpolations share one
//! field, and switching the prime requires the exclusive guard returned by
//! [`prime_scope`].

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{LazyLock, Mutex, MutexGuard};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};

static PRIME: AtomicU64 = AtomicU64::new(0);
static PRIME_MUTEX: Mutex<()> = Mutex::new(());

/// Exclusive handle on the ambient prime. While a scope is alive no other
/// thread can switch fields.
pub struct PrimeScope {
    _guard: MutexGuard<'static, ()>,
}

/// Acquires the field lock and sets the ambient prime.
///
/// The prime stays in effect after the scope is dropped; the guard only
/// serializes switches against each other.
pub fn prime_scope(p: u64) -> PrimeScope {
    let guard = PRIME_MUTEX
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner());
    assert!(p < 1u64 << 63, "prime must fit in 63 bits");
    assert!(is_prime_u64(p), "{p} is not prime");
    PRIME.store(p, Ordering::SeqCst);
    PrimeScope { _guard: guard }
}

/// The currently ambient prime.
pub fn prime() -> u64 {
    let p = PRIME.load(Ordering::SeqCst);
    debug_assert!(p != 0, "no prime set; call prime_scope first");
    p
}

/// An element of Z_p for the ambient prime, always reduced to `[0, p)`.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct FieldElement(u64);

impl std::fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::fmt::Display for FieldElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);

    pub fn new(n: u64) -> Self {
        FieldElement(n % prime())
    }

    pub fn one() -> Self {
        FieldElement(1 % prime())
    }

    /// Reduces an arbitrary-precision integer modulo the ambient prime.
    pub fn from_bigint(n: &BigInt) -> Self {
        let p = BigInt::from(prime());
        let mut r = n.mod_floor(&p);
        if r.is_negative() {
            r += &p;
        }
        FieldElement(r.to_u64().expect("reduced residue fits u64"))
    }

    pub fn val(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// a^e mod p by square-and-multiply; e = 0 yields 1.
    pub fn pow(self, mut e: u64) -> Self {
        let p = prime();
        let mut base = self.0;
        let mut acc: u64 = 1 % p;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul_mod(acc, base, p);
            }
            base = mul_mod(base, base, p);
            e >>= 1;
        }
        FieldElement(acc)
    }

    /// Multiplicative inverse via the Extended Euclidean Algorithm.
    /// The inverse of 0 is defined as 0, matching the division convention.
    pub fn inv(self) -> Self {
        if self.0 == 0 {
            return FieldElement(0);
        }
        let p = prime();
        let (mut old_r, mut r) = (p as i128, self.0 as i128);
        let (mut old_t, mut t) = (0i128, 1i128);
        while r != 0 {
            let q = old_r / r;
            (old_r, r) = (r, old_r - q * r);
            (old_t, t) = (t, old_t - q * t);
        }
        debug_assert_eq!(old_r, 1, "element not invertible");
        let mut inv = old_t % p as i128;
        if inv < 0 {
            inv += p as i128;
        }
        FieldElement(inv as u64)
    }
}

#[inline]
fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

impl std::ops::Add for FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: Self) -> Self {
        let p = prime();
        let s = self.0 + rhs.0; // both < 2^63, no overflow
        FieldElement(if s >= p { s - p } else { s })
    }
}

impl std::ops::Sub for FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: Self) -> Self {
        let p = prime();
        FieldElement(if self.0 >= rhs.0 {
            self.0 - rhs.0
        } else {
            self.0 + p - rhs.0
        })
    }
}

impl std::ops::Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: Self) -> Self {
        FieldElement(mul_mod(self.0, rhs.0, prime()))
    }
}

/// Division by zero yields zero.
impl std::ops::Div for FieldElement {
    type Output = FieldElement;
    fn div(self, rhs: Self) -> Self {
        self * rhs.inv()
    }
}

impl std::ops::Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> Self {
        if self.0 == 0 {
            self
        } else {
            FieldElement(prime() - self.0)
        }
    }
}

impl std::ops::AddAssign for FieldElement {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl std::ops::SubAssign for FieldElement {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl std::ops::MulAssign for FieldElement {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

/// Deterministic Miller-Rabin, exact for all u64 inputs with this witness set.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pow_mod(mut base: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        e >>= 1;
    }
    acc
}

/// Number of primes in the table.
pub const PRIME_TABLE_SIZE: usize = 100;

static PRIME_TABLE: LazyLock<[u64; PRIME_TABLE_SIZE]> = LazyLock::new(|| {
    let mut table = [0u64; PRIME_TABLE_SIZE];
    let mut candidate = (1u64 << 63) - 1;
    let mut found = 0;
    while found < PRIME_TABLE_SIZE {
        if is_prime_u64(candidate) {
            table[found] = candidate;
            found += 1;
        }
        candidate -= 2;
    }
    table
});

/// The (i+1)-th largest prime below 2^63; the table holds 100 entries in
/// descending order.
pub fn nth_prime(i: usize) -> u64 {
    PRIME_TABLE[i]
}

/// The full descending prime table.
pub fn prime_table() -> &'static [u64; PRIME_TABLE_SIZE] {
    &PRIME_TABLE
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_arithmetic_509() {
        let _s = prime_scope(509);
        let a = FieldElement::new(10);
        let b = FieldElement::new(13);
        assert_eq!((a * b).val(), 130);
        let c = FieldElement::new(243);
        assert_eq!((c * c).val(), 5);
        // 3^10 = 5, a^b + 3/a = 355 with 3/10 = 153
        assert_eq!(FieldElement::new(3).pow(10).val(), 5);
        assert_eq!(a.pow(13).val(), 202);
        assert_eq!((FieldElement::new(3) / a).val(), 153);
        assert_eq!((a.pow(13) + FieldElement::new(3) / a).val(), 355);
        assert_eq!((FieldElement::new(5) / FieldElement::ZERO).val(), 0);
        assert_eq!((FieldElement::one() / FieldElement::one()).val(), 1);
        assert_eq!(FieldElement::new(7).pow(0).val(), 1);
    }

    #[test]
    fn wide_multiplication() {
        let _s = prime_scope(9223372036854775783);
        let a = FieldElement::new(1u64 << 62);
        let b = FieldElement::new(2);
        assert_eq!((a * b).val(), 25); // 2^63 mod (2^63 - 25)
    }

    #[test]
    fn prime_table_descending() {
        assert_eq!(nth_prime(0), 9223372036854775783);
        for i in 0..PRIME_TABLE_SIZE {
            assert!(is_prime_u64(nth_prime(i)));
            assert!(nth_prime(i) < 1u64 << 63);
            if i + 1 < PRIME_TABLE_SIZE {
                assert!(nth_prime(i) > nth_prime(i + 1));
            }
        }
    }

    #[test]
    fn field_axioms_sampled() {
        let _s = prime_scope(509);
        let p = 509u64;
        for a in (0..509).step_by(23) {
            for b in (0..509).step_by(31) {
                let fa = FieldElement::new(a);
                let fb = FieldElement::new(b);
                assert_eq!((fa + fb).val(), (a + b) % p);
                assert_eq!((fa * fb).val(), (a * b) % p);
                if b != 0 {
                    assert_eq!((fa * fb) / fb, fa);
                }
            }
        }
        for a in 1..509 {
            assert_eq!(FieldElement::new(a).pow(p - 1).val(), 1);
        }
    }

    #[test]
    fn bigint_reduction() {
        let _s = prime_scope(509);
        let n: BigInt = "123456789109898799879870980".parse().unwrap();
        let expect = (&n % BigInt::from(509)).to_u64().unwrap();
        assert_eq!(FieldElement::from_bigint(&n).val(), expect);
        let neg = BigInt::from(-1);
        assert_eq!(FieldElement::from_bigint(&neg).val(), 508);
    }
}
