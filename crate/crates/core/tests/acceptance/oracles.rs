//! Reference computations that share no code with the library.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

/// `d·Γ(n−d) / (Γ(1−d)·Γ(n+1))` evaluated exactly in rationals for the
/// binary value of `d`. `Γ(n−d)/Γ(1−d) = Π_{k=1}^{n−1} (k−d)` and
/// `Γ(n+1) = n!`, so the ratio needs no Gamma evaluation at all.
pub fn exact_weight(d: f64, n: u32) -> f64 {
    let d = BigRational::from_float(d).expect("finite d");
    let mut num = d.clone();
    let mut fact = BigRational::one();
    for k in 1..n {
        let k = BigRational::from_integer(BigInt::from(k));
        num *= &k - &d;
        fact *= k;
    }
    fact *= BigRational::from_integer(BigInt::from(n));
    (num / fact).to_f64().expect("representable")
}

/// Closed-form `|x|` autocorrelation of the infinite FIARCH process:
/// `Γ(1−d)Γ(n+d) / (Γ(d)Γ(n+1−d))`, via the product form
/// `Π_{k=0}^{n−1} (k+d)/(k+1−d)` evaluated in rationals.
pub fn fiarch_acf(d: f64, n: u32) -> f64 {
    let d = BigRational::from_float(d).expect("finite d");
    let mut r = BigRational::one();
    for k in 0..n {
        let k = BigRational::from_integer(BigInt::from(k));
        r *= (&k + &d) / (&k + BigRational::one() - &d);
    }
    r.to_f64().expect("representable")
}

/// Textbook SplitMix64 output function.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
