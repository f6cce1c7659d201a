//! Walsh functions in Paley order on `[0, 1]`.
//!
//! `W_n(l) = (-1)^{Σ n_i l_i}` where `n_i` are the binary digits of `n`
//! (least significant first) and `l_i` the binary digits of `l` after the
//! point. Dyadic rationals use their terminating expansion, so on a level-`L`
//! grid every half-open cell `[p/2^L, (p+1)/2^L)` carries one sign.

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::measure_space::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WalshIndex(pub u64);

impl WalshIndex {
    /// Number of binary digits; `0` for `n = 0`.
    pub fn bit_length(self) -> u32 {
        64 - self.0.leading_zeros()
    }

    /// Digits `n_0, n_1, ...`, least significant first; the last one is 1.
    pub fn bits(self) -> Vec<u8> {
        (0..self.bit_length()).map(|i| ((self.0 >> i) & 1) as u8).collect()
    }
}

impl From<u64> for WalshIndex {
    fn from(n: u64) -> Self {
        WalshIndex(n)
    }
}

/// Bit length needed to resolve `W_n` on dyadic cells.
pub fn required_level(n: u64) -> u32 {
    WalshIndex(n).bit_length()
}

/// `W_n(l)` for `l ∈ [0, 1]`.
pub fn walsh_eval(n: WalshIndex, l: f64) -> i8 {
    let mut parity = 0u32;
    let mut frac = l - l.floor();
    for i in 0..n.bit_length() {
        frac *= 2.0;
        let digit = if frac >= 1.0 {
            frac -= 1.0;
            1
        } else {
            0
        };
        parity ^= (((n.0 >> i) & 1) as u32) & digit;
    }
    if parity == 0 {
        1
    } else {
        -1
    }
}

/// Sign of `W_n` on level-`level` cell `p`.
///
/// The first binary digit of `l` is the top bit of `p`, so the exponent is
/// `popcount(n & reverse_level(p))`.
pub fn walsh_sign_cell(n: u64, cell: usize, level: u32) -> i8 {
    let rev = reverse_bits(cell as u64, level);
    if (n & rev).count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

fn reverse_bits(x: u64, width: u32) -> u64 {
    if width == 0 {
        return 0;
    }
    x.reverse_bits() >> (64 - width)
}

fn check_level(n: u64, level: u32) -> Result<()> {
    if required_level(n) > level {
        return Err(Error::LevelTooCoarse { index: n, level });
    }
    Ok(())
}

/// Exact `∫ W_n` over `[p/2^L, q/2^L]`.
pub fn walsh_integral(n: WalshIndex, p: usize, q: usize, level: u32) -> Result<Rational> {
    check_level(n.0, level)?;
    let cells = 1usize << level;
    if p > q || q > cells {
        return Err(Error::Misaligned { level });
    }
    let signed: i64 = (p..q).map(|c| walsh_sign_cell(n.0, c, level) as i64).sum();
    Ok(Rational::new(BigInt::from(signed), BigInt::from(1u64) << level))
}

/// Exact `∫ W_n` over the rational interval `[a, b] ⊆ [0, 1]`; the interval
/// must have endpoints on the level-`level` grid.
pub fn walsh_integral_rational(n: WalshIndex, a: &Rational, b: &Rational, level: u32) -> Result<Rational> {
    let scale = Rational::from_integer(BigInt::from(1u64) << level);
    let pa = a * &scale;
    let pb = b * &scale;
    if !pa.is_integer() || !pb.is_integer() {
        return Err(Error::Misaligned { level });
    }
    let to_usize = |r: &Rational| -> Result<usize> {
        use num_traits::ToPrimitive;
        r.to_integer().to_usize().ok_or(Error::Misaligned { level })
    };
    walsh_integral(n, to_usize(&pa)?, to_usize(&pb)?, level)
}

/// Cells of level `level` on which `W_n = +1`.
pub fn walsh_set(n: WalshIndex, level: u32) -> Result<Vec<usize>> {
    check_level(n.0, level)?;
    Ok((0..1usize << level).filter(|&c| walsh_sign_cell(n.0, c, level) == 1).collect())
}

fn log2_exact(len: usize) -> Result<u32> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    Ok(len.trailing_zeros())
}

/// In-place unnormalized Hadamard butterfly (natural order).
fn butterfly<T>(data: &mut [T])
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T>,
{
    let n = data.len();
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for i in start..start + h {
                let (a, b) = (data[i], data[i + h]);
                data[i] = a + b;
                data[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

fn bit_reverse_permute<T: Copy>(data: &[T], level: u32) -> Vec<T> {
    (0..data.len()).map(|p| data[reverse_bits(p as u64, level) as usize]).collect()
}

/// Coefficients `⟨f, W_n⟩ = 2^{-L} Σ_p f_p W_n(p)` for a step function given
/// by its `2^L` cell values.
pub fn walsh_transform(step_values: &[f64]) -> Result<Vec<f64>> {
    let level = log2_exact(step_values.len())?;
    let mut v = bit_reverse_permute(step_values, level);
    butterfly(&mut v);
    let scale = 1.0 / step_values.len() as f64;
    Ok(v.into_iter().map(|x| x * scale).collect())
}

/// Cell values `f_p = Σ_n c_n W_n(p)` from Walsh coefficients.
pub fn inverse_walsh_transform(coeffs: &[f64]) -> Result<Vec<f64>> {
    let level = log2_exact(coeffs.len())?;
    let mut v = coeffs.to_vec();
    butterfly(&mut v);
    Ok(bit_reverse_permute(&v, level))
}

/// Integer version: `Σ_p f_p W_n(p)` for every `n`, no scaling.
pub fn walsh_sums_i128(step_values: &[i128]) -> Result<Vec<i128>> {
    let level = log2_exact(step_values.len())?;
    let mut v = bit_reverse_permute(step_values, level);
    butterfly(&mut v);
    Ok(v)
}
