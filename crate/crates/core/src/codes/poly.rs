use std::fmt;

/// Polynomial over GF(2), coefficient of `x^i` at bit `i`.
///
/// Trailing zero words are trimmed so that equality is structural.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Gf2Poly {
    words: Vec<u64>,
}

impl Gf2Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_mask(1)
    }

    /// Coefficients packed in a single word (`0b1011` = `x^3 + x + 1`).
    pub fn from_mask(mask: u64) -> Self {
        Self::from_words(vec![mask])
    }

    pub fn from_exponents(exponents: &[usize]) -> Self {
        let mut p = Self::zero();
        for &e in exponents {
            p.flip(e);
        }
        p
    }

    /// `x^n + 1`.
    pub fn x_n_plus_one(n: usize) -> Self {
        Self::from_exponents(&[n, 0])
    }

    fn from_words(mut words: Vec<u64>) -> Self {
        while words.last() == Some(&0) {
            words.pop();
        }
        Self { words }
    }

    pub fn is_zero(&self) -> bool {
        self.words.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        let last = *self.words.last()?;
        Some((self.words.len() - 1) * 64 + 63 - last.leading_zeros() as usize)
    }

    pub fn coeff(&self, i: usize) -> bool {
        self.words.get(i / 64).is_some_and(|w| w >> (i % 64) & 1 == 1)
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Coefficients `c_0, c_1, ..., c_deg`.
    pub fn coefficients(&self) -> Vec<bool> {
        match self.degree() {
            None => Vec::new(),
            Some(d) => (0..=d).map(|i| self.coeff(i)).collect(),
        }
    }

    fn flip(&mut self, i: usize) {
        let w = i / 64;
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        self.words[w] ^= 1 << (i % 64);
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    fn xor_shifted(&mut self, other: &Self, shift: usize) {
        let Some(deg) = other.degree() else { return };
        let needed = (deg + shift) / 64 + 1;
        if self.words.len() < needed {
            self.words.resize(needed, 0);
        }
        let (ws, bs) = (shift / 64, shift % 64);
        for (i, &w) in other.words.iter().enumerate() {
            self.words[i + ws] ^= w << bs;
            if bs != 0 && i + ws + 1 < self.words.len() {
                self.words[i + ws + 1] ^= w >> (64 - bs);
            }
        }
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        if let Some(d) = self.degree() {
            for i in 0..=d {
                if self.coeff(i) {
                    out.xor_shifted(other, i);
                }
            }
        }
        out
    }

    /// Quotient and remainder of long division. Panics on division by zero.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let mut rem = self.clone();
        let mut quot = Self::zero();
        while let Some(rd) = rem.degree() {
            if rd < dd {
                break;
            }
            quot.flip(rd - dd);
            rem.xor_shifted(divisor, rd - dd);
        }
        (quot, rem)
    }

    /// `x^deg * p(1/x)`: the coefficient sequence read backwards.
    pub fn reciprocal(&self) -> Self {
        match self.degree() {
            None => Self::zero(),
            Some(d) => Self::from_exponents(
                &(0..=d).filter(|&i| self.coeff(i)).map(|i| d - i).collect::<Vec<_>>(),
            ),
        }
    }
}

impl fmt::Display for Gf2Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Some(d) = self.degree() else {
            return f.write_str("0");
        };
        let terms: Vec<String> = (0..=d)
            .rev()
            .filter(|&i| self.coeff(i))
            .map(|i| match i {
                0 => "1".to_string(),
                1 => "x".to_string(),
                _ => format!("x^{i}"),
            })
            .collect();
        f.write_str(&terms.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_sentinel_for_zero() {
        assert_eq!(Gf2Poly::zero().degree(), None);
        assert_eq!(Gf2Poly::one().degree(), Some(0));
        assert_eq!(Gf2Poly::x_n_plus_one(100).degree(), Some(100));
    }

    #[test]
    fn minimal_polynomials_multiply_to_bch_generator() {
        // (x^4 + x + 1)(x^4 + x^3 + x^2 + x + 1) = x^8 + x^7 + x^6 + x^4 + 1
        let m1 = Gf2Poly::from_mask(0b10011);
        let m3 = Gf2Poly::from_mask(0b11111);
        assert_eq!(m1.mul(&m3), Gf2Poly::from_mask(0b1_1101_0001));
    }

    #[test]
    fn division_of_x15_plus_one() {
        let g = Gf2Poly::from_mask(0b1_1101_0001);
        let (h, r) = Gf2Poly::x_n_plus_one(15).div_rem(&g);
        assert!(r.is_zero());
        assert_eq!(h, Gf2Poly::from_mask(0b1101_0001));
        assert_eq!(h.to_string(), "x^7 + x^6 + x^4 + 1");
    }

    #[test]
    fn reciprocal_reverses() {
        let p = Gf2Poly::from_mask(0b1101_0001);
        assert_eq!(p.reciprocal(), Gf2Poly::from_mask(0b1000_1011));
    }

    #[test]
    fn multi_word_arithmetic() {
        let a = Gf2Poly::from_exponents(&[70, 3, 0]);
        let b = Gf2Poly::from_exponents(&[64, 1]);
        let prod = a.mul(&b);
        let (q, r) = prod.div_rem(&b);
        assert!(r.is_zero());
        assert_eq!(q, a);
    }
}
