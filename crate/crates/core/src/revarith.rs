//! Exactly reversible fixed-point arithmetic.
//!
//! Multiplying an integer mantissa by a ratio n/d destroys information (the
//! remainder). Here every such multiplication banks the destroyed bits in an
//! arbitrary-precision information buffer, making the map
//! `(buffer, mantissa) → (buffer', mantissa')` a bijection that can be undone
//! exactly — the basis for invertible network dynamics.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Default number of fractional bits for the fixed-point grid.
pub const DEFAULT_FRAC_BITS: u32 = 32;

// ── Ratio ────────────────────────────────────────────────────────────────────

/// A rational mixing coefficient γ = n/d ∈ (0, 1], stored coprime.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ratio {
    n: u64,
    d: u64,
}

impl Ratio {
    /// Builds n/d, reducing by the gcd. Requires 0 < n ≤ d.
    pub fn new(n: u64, d: u64) -> Result<Ratio> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidArgument(format!("ratio {n}/{d}: parts must be positive")));
        }
        if n > d {
            return Err(Error::InvalidArgument(format!("ratio {n}/{d}: must not exceed 1")));
        }
        let g = gcd(n, d);
        Ok(Ratio { n: n / g, d: d / g })
    }

    pub fn numer(&self) -> u64 {
        self.n
    }

    pub fn denom(&self) -> u64 {
        self.d
    }

    pub fn as_f64(&self) -> f64 {
        self.n as f64 / self.d as f64
    }

    pub fn is_one(&self) -> bool {
        self.n == self.d
    }

    /// Bits shed per multiplication: log₂(d/n).
    pub fn bits_per_step(&self) -> f64 {
        (self.d as f64 / self.n as f64).log2()
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

// ── Fixed-point scalar ───────────────────────────────────────────────────────

/// A fixed-point scalar: value = mantissa · 2^(−frac_bits).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedPoint {
    pub mantissa: BigInt,
    pub frac_bits: u32,
}

impl FixedPoint {
    pub fn zero(frac_bits: u32) -> FixedPoint {
        FixedPoint { mantissa: BigInt::zero(), frac_bits }
    }
}

/// Rounds `x` to the nearest multiple of 2^(−frac_bits), ties to even.
///
/// Lossless round-trip is guaranteed while |x|·2^frac_bits stays within the
/// float's 53-bit significand.
pub fn encode(x: f64, frac_bits: u32) -> Result<FixedPoint> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("encode: non-finite input {x}")));
    }
    let scaled = (x * 2.0f64.powi(frac_bits as i32)).round_ties_even();
    let mantissa = BigInt::from_f64(scaled).expect("finite float converts exactly");
    Ok(FixedPoint { mantissa, frac_bits })
}

/// Exact float value of the fixed-point scalar (exact while the mantissa fits
/// in 53 bits; correctly rounded beyond).
pub fn decode(fp: &FixedPoint) -> f64 {
    decode_mantissa(&fp.mantissa, fp.frac_bits)
}

pub fn decode_mantissa(mantissa: &BigInt, frac_bits: u32) -> f64 {
    mantissa.to_f64().unwrap_or(f64::INFINITY) * 2.0f64.powi(-(frac_bits as i32))
}

// ── Information buffer ───────────────────────────────────────────────────────

/// Non-negative arbitrary-precision integer banking the bits destroyed by
/// reversible multiplications; `bit_len` is kept in sync with the value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InfoBuffer {
    value: BigUint,
    bit_len: u64,
}

impl InfoBuffer {
    pub fn new() -> InfoBuffer {
        InfoBuffer { value: BigUint::zero(), bit_len: 0 }
    }

    pub fn from_value(value: BigUint) -> InfoBuffer {
        let bit_len = value.bits();
        InfoBuffer { value, bit_len }
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    /// Position of the highest set bit (0 for an empty buffer).
    pub fn bits(&self) -> u64 {
        self.bit_len
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_zero()
    }

    fn set(&mut self, value: BigUint) {
        self.bit_len = value.bits();
        self.value = value;
    }
}

impl Default for InfoBuffer {
    fn default() -> Self {
        InfoBuffer::new()
    }
}

/// Number of bits currently banked in the buffer.
pub fn buffer_bits(buf: &InfoBuffer) -> u64 {
    buf.bits()
}

// ── Reversible multiplication by a ratio ─────────────────────────────────────

/// Multiplies the mantissa by n/d, exactly and reversibly.
///
/// The six steps (buffer i, mantissa c, ratio n/d):
/// i ← i·d;  i ← i + (c mod d);  c ← c ÷ d;  c ← c·n;  c ← c + (i mod n);  i ← i ÷ n.
/// Division and modulo use floor semantics, so negative mantissas keep the map
/// a bijection; the result satisfies |c′ − c·n/d| < n.
pub fn reversible_mul(buf: &mut InfoBuffer, c: &mut BigInt, r: Ratio) {
    let (q, rem) = c.div_mod_floor(&BigInt::from(r.d));
    // rem ∈ [0, d) by floor semantics, so the buffer stays non-negative.
    let grown = &buf.value * r.d + rem.to_biguint().expect("floor remainder is non-negative");
    let i_mod_n = &grown % r.n;
    *c = q * r.n + BigInt::from(i_mod_n);
    buf.set(grown / r.n);
}

/// Exact inverse of [`reversible_mul`] with the same ratio.
///
/// Steps: i ← i·n;  i ← i + (c mod n);  c ← c ÷ n;  c ← c·d;  c ← c + (i mod d);  i ← i ÷ d.
pub fn reversible_mul_inverse(buf: &mut InfoBuffer, c: &mut BigInt, r: Ratio) {
    let (q, rem) = c.div_mod_floor(&BigInt::from(r.n));
    let grown = &buf.value * r.n + rem.to_biguint().expect("floor remainder is non-negative");
    let i_mod_d = &grown % r.d;
    *c = q * r.d + BigInt::from(i_mod_d);
    buf.set(grown / r.d);
}

// ── Serialization: little-endian, length-prefixed ────────────────────────────

/// Appends one (mantissa, buffer) pair:
/// sign byte, u32-LE mantissa byte length, mantissa magnitude (LE),
/// u32-LE buffer byte length, buffer value (LE).
pub fn write_pair(out: &mut Vec<u8>, mantissa: &BigInt, buf: &InfoBuffer) {
    out.push(if mantissa.is_negative() { 1 } else { 0 });
    let mag = mantissa.magnitude().to_bytes_le();
    out.extend_from_slice(&(mag.len() as u32).to_le_bytes());
    out.extend_from_slice(&mag);
    let bb = buf.value.to_bytes_le();
    out.extend_from_slice(&(bb.len() as u32).to_le_bytes());
    out.extend_from_slice(&bb);
}

/// Reads one pair written by [`write_pair`]; returns it plus the bytes consumed.
pub fn read_pair(bytes: &[u8]) -> Result<((BigInt, InfoBuffer), usize)> {
    let mut pos = 0usize;
    let sign = *bytes.first().ok_or_else(|| Error::Malformed("pair: missing sign byte".into()))?;
    if sign > 1 {
        return Err(Error::Malformed(format!("pair: bad sign byte {sign}")));
    }
    pos += 1;
    let mag = read_len_prefixed(bytes, &mut pos)?;
    let bb = read_len_prefixed(bytes, &mut pos)?;
    let magnitude = BigUint::from_bytes_le(mag);
    let mantissa = if sign == 1 {
        -BigInt::from(magnitude)
    } else {
        BigInt::from(magnitude)
    };
    let buffer = InfoBuffer::from_value(BigUint::from_bytes_le(bb));
    Ok(((mantissa, buffer), pos))
}

fn read_len_prefixed<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    let end = *pos + 4;
    let len_bytes = bytes
        .get(*pos..end)
        .ok_or_else(|| Error::Malformed("pair: truncated length prefix".into()))?;
    let len = u32::from_le_bytes(len_bytes.try_into().unwrap()) as usize;
    let body = bytes
        .get(end..end + len)
        .ok_or_else(|| Error::Malformed("pair: truncated body".into()))?;
    *pos = end + len;
    Ok(body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ratio_reduces_and_validates() {
        let r = Ratio::new(18, 20).unwrap();
        assert_eq!((r.numer(), r.denom()), (9, 10));
        assert!(Ratio::new(0, 10).is_err());
        assert!(Ratio::new(11, 10).is_err());
        assert!(Ratio::new(5, 0).is_err());
        assert!(Ratio::new(7, 7).unwrap().is_one());
    }

    #[test]
    fn hand_traced_multiplication_by_nine_tenths() {
        let mut buf = InfoBuffer::new();
        let mut c = BigInt::from(123);
        reversible_mul(&mut buf, &mut c, Ratio::new(9, 10).unwrap());
        assert_eq!(c, BigInt::from(111));
        assert!(buf.is_empty());
        reversible_mul_inverse(&mut buf, &mut c, Ratio::new(9, 10).unwrap());
        assert_eq!(c, BigInt::from(123));
        assert!(buf.is_empty());
    }

    #[test]
    fn identity_ratio_changes_nothing() {
        let mut buf = InfoBuffer::from_value(BigUint::from(987_654u64));
        let mut c = BigInt::from(-55_555);
        reversible_mul(&mut buf, &mut c, Ratio::new(1, 1).unwrap());
        assert_eq!(c, BigInt::from(-55_555));
        assert_eq!(buf.value(), &BigUint::from(987_654u64));
    }

    #[test]
    fn negative_mantissa_hand_trace_with_floor_semantics() {
        // c = −7, ratio 1/2: floor(−7/2) = −4 with remainder 1.
        let mut buf = InfoBuffer::new();
        let mut c = BigInt::from(-7);
        reversible_mul(&mut buf, &mut c, Ratio::new(1, 2).unwrap());
        assert_eq!(c, BigInt::from(-4));
        assert_eq!(buf.value(), &BigUint::one());
        reversible_mul_inverse(&mut buf, &mut c, Ratio::new(1, 2).unwrap());
        assert_eq!(c, BigInt::from(-7));
        assert!(buf.is_empty());
    }

    #[test]
    fn round_trip_is_exact_over_many_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ratios = [(1, 2), (3, 4), (9, 10), (99, 100), (1, 1), (7, 13)];
        for step in 0..100_000 {
            let (n, d) = ratios[step % ratios.len()];
            let r = Ratio::new(n, d).unwrap();
            let c0 = BigInt::from(rng.gen_range(-(1i128 << 80)..(1i128 << 80)));
            let b0 = BigUint::from(rng.gen_range(0u128..(1u128 << 90)));
            let mut buf = InfoBuffer::from_value(b0.clone());
            let mut c = c0.clone();
            reversible_mul(&mut buf, &mut c, r);
            // |c′ − c·n/d| < n, checked in exact integer arithmetic: |d·c′ − n·c| < n·d.
            let lhs = (&c * d as i64 - &c0 * n as i64).magnitude().clone();
            assert!(lhs < BigUint::from(n as u128 * d as u128), "approximation bound violated");
            reversible_mul_inverse(&mut buf, &mut c, r);
            assert_eq!(c, c0, "mantissa round-trip failed at step {step}");
            assert_eq!(buf.value(), &b0, "buffer round-trip failed at step {step}");
        }
    }

    #[test]
    fn thousand_step_composition_inverts_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r = Ratio::new(9, 10).unwrap();
        let c0 = BigInt::from(rng.gen_range(-(1i64 << 42)..(1i64 << 42)));
        let mut buf = InfoBuffer::new();
        let mut c = c0.clone();
        for _ in 0..1000 {
            reversible_mul(&mut buf, &mut c, r);
        }
        for _ in 0..1000 {
            reversible_mul_inverse(&mut buf, &mut c, r);
        }
        assert_eq!(c, c0);
        assert!(buf.is_empty());
    }

    #[test]
    fn buffer_growth_tracks_the_information_rate() {
        // Amortized growth per step is log₂(d/n), within ±1 bit over long runs.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (n, d) in [(1u64, 2u64), (3, 4), (9, 10), (99, 100)] {
            let r = Ratio::new(n, d).unwrap();
            let k = 10_000u64;
            let mut buf = InfoBuffer::new();
            let mut c = BigInt::from(rng.gen_range(-(1i64 << 42)..(1i64 << 42)));
            for _ in 0..k {
                reversible_mul(&mut buf, &mut c, r);
                // Fresh mantissa each step, like a live network activation.
                c += BigInt::from(rng.gen_range(-(1i64 << 40)..(1i64 << 40)));
            }
            let per_step = buffer_bits(&buf) as f64 / k as f64;
            let rate = r.bits_per_step();
            assert!(
                (per_step - rate).abs() <= 1.0,
                "γ={n}/{d}: measured {per_step:.4} bits/step vs rate {rate:.4}"
            );
        }
    }

    #[test]
    fn gamma_half_sheds_one_bit_per_step() {
        let mut buf = InfoBuffer::new();
        let mut c = BigInt::from((1i64 << 40) + 12_345);
        let k = 1000;
        for _ in 0..k {
            reversible_mul(&mut buf, &mut c, Ratio::new(1, 2).unwrap());
            c += BigInt::from(1i64 << 39); // keep the mantissa wide
        }
        let bits = buffer_bits(&buf);
        assert!(bits >= k - 8 && bits <= k + 8, "got {bits} bits after {k} halvings");
    }

    #[test]
    fn encode_decode_trivial_cases() {
        assert_eq!(encode(0.0, 32).unwrap().mantissa, BigInt::zero());
        let fp = encode(1.5, 4).unwrap();
        assert_eq!(fp.mantissa, BigInt::from(24));
        assert_eq!(decode(&fp), 1.5);
        assert!(encode(f64::NAN, 32).is_err());
        assert!(encode(f64::INFINITY, 32).is_err());
    }

    #[test]
    fn encode_rounds_ties_to_even() {
        // 2.5 · 2⁰ is a tie between 2 and 3 → even mantissa 2.
        assert_eq!(encode(2.5, 0).unwrap().mantissa, BigInt::from(2));
        assert_eq!(encode(3.5, 0).unwrap().mantissa, BigInt::from(4));
        assert_eq!(encode(-2.5, 0).unwrap().mantissa, BigInt::from(-2));
    }

    #[test]
    fn quantization_error_is_within_half_a_grid_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let half_step = 2.0f64.powi(-33);
        for _ in 0..10_000 {
            let x = rng.gen_range(-10.0..10.0);
            let rt = decode(&encode(x, 32).unwrap());
            assert!((rt - x).abs() <= half_step, "x={x}, decoded {rt}");
        }
    }

    #[test]
    fn decode_is_exact_for_representable_floats() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10_000 {
            // Floats already on the 2⁻³² grid survive the codec bit-exactly.
            let grid = (rng.gen_range(-(1i64 << 45)..(1i64 << 45))) as f64;
            let x = grid * 2.0f64.powi(-32);
            assert_eq!(decode(&encode(x, 32).unwrap()), x);
        }
    }

    #[test]
    fn pair_serialization_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..1000 {
            let m = BigInt::from(rng.gen_range(i128::MIN / 2..i128::MAX / 2));
            let b = InfoBuffer::from_value(BigUint::from(rng.gen_range(0u128..u128::MAX)));
            let mut bytes = Vec::new();
            write_pair(&mut bytes, &m, &b);
            let ((m2, b2), used) = read_pair(&bytes).unwrap();
            assert_eq!(used, bytes.len());
            assert_eq!(m2, m);
            assert_eq!(b2.value(), b.value());
            assert_eq!(b2.bits(), b.bits());
        }
    }

    #[test]
    fn truncated_serialization_is_rejected() {
        let mut bytes = Vec::new();
        write_pair(&mut bytes, &BigInt::from(-12_345_678), &InfoBuffer::new());
        for cut in 0..bytes.len() {
            assert!(read_pair(&bytes[..cut]).is_err(), "cut at {cut} should fail");
        }
        assert!(read_pair(&[9]).is_err(), "bad sign byte should fail");
    }
}
