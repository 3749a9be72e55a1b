//! Gray-coded QPSK mapping on the unit circle.
//!
//! The alphabet is {(+1+j), (-1+j), (-1-j), (+1-j)} / sqrt(2), one point per
//! quadrant, with adjacent quadrants differing in a single bit. Every point
//! has unit modulus, so the symbol power is 1 and the constant-modulus
//! target is exactly the unit circle.

use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};

/// Constellation points indexed by `(b0 as usize) << 1 | b1 as usize`.
///
/// Mapping: 00 -> (+1+j)/sqrt(2), 01 -> (-1+j)/sqrt(2),
/// 11 -> (-1-j)/sqrt(2), 10 -> (+1-j)/sqrt(2).
pub const ALPHABET: [Complex64; 4] = [
    Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    Complex64::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    Complex64::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
];

/// Maps one bit pair to its constellation point.
pub fn map_pair(b0: bool, b1: bool) -> Complex64 {
    ALPHABET[(b0 as usize) << 1 | b1 as usize]
}

/// Maps a bit stream to symbols, two bits per symbol.
pub fn modulate(bits: &[bool]) -> Result<Vec<Complex64>> {
    if bits.len() % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "bit count must be even, got {}",
            bits.len()
        )));
    }
    Ok(bits.chunks_exact(2).map(|b| map_pair(b[0], b[1])).collect())
}

/// Nearest-point decision, returned as the bit pair `[b0, b1]`.
///
/// Boundary ties resolve toward the positive half-plane: a coordinate of
/// exactly zero decodes as if it were positive.
pub fn demodulate(symbol: Complex64) -> [bool; 2] {
    [symbol.im < 0.0, symbol.re < 0.0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn declared_mapping() {
        let s = FRAC_1_SQRT_2;
        assert_eq!(map_pair(false, false), Complex64::new(s, s));
        assert_eq!(map_pair(false, true), Complex64::new(-s, s));
        assert_eq!(map_pair(true, true), Complex64::new(-s, -s));
        assert_eq!(map_pair(true, false), Complex64::new(s, -s));
    }

    #[test]
    fn unit_modulus() {
        for point in ALPHABET {
            assert!((point.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        // Walk the circle counterclockwise starting in the first quadrant.
        let ring = [(false, false), (false, true), (true, true), (true, false)];
        for k in 0..4 {
            let (a0, a1) = ring[k];
            let (b0, b1) = ring[(k + 1) % 4];
            let flips = (a0 != b0) as u32 + (a1 != b1) as u32;
            assert_eq!(flips, 1);
        }
    }

    #[test]
    fn round_trip() {
        for &(b0, b1) in &[(false, false), (false, true), (true, false), (true, true)] {
            assert_eq!(demodulate(map_pair(b0, b1)), [b0, b1]);
        }
    }

    #[test]
    fn boundary_ties_go_positive() {
        assert_eq!(demodulate(Complex64::new(0.0, 0.0)), [false, false]);
        assert_eq!(demodulate(Complex64::new(0.0, -1.0)), [true, false]);
        assert_eq!(demodulate(Complex64::new(-1.0, 0.0)), [false, true]);
    }

    #[test]
    fn modulate_rejects_odd_length() {
        assert!(matches!(
            modulate(&[true, false, true]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn modulate_chunks_in_order() {
        let bits = [false, false, true, true, false, true];
        let symbols = modulate(&bits).unwrap();
        assert_eq!(symbols.len(), 3);
        assert_eq!(symbols[0], map_pair(false, false));
        assert_eq!(symbols[1], map_pair(true, true));
        assert_eq!(symbols[2], map_pair(false, true));
    }
}
