use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Quasi-isometry constants in either two-constant or single-constant form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QiConstants {
    Pair { a: BigRational, b: BigRational },
    Single(u64),
}

impl QiConstants {
    pub fn pair(a: BigRational, b: BigRational) -> Result<Self> {
        if a < BigRational::one() || b.is_negative() {
            return Err(Error::Domain(format!("need A >= 1 and B >= 0, got A={a}, B={b}")));
        }
        Ok(QiConstants::Pair { a, b })
    }

    pub fn single(c: u64) -> Result<Self> {
        if c < 1 {
            return Err(Error::Domain("C must be at least 1".into()));
        }
        Ok(QiConstants::Single(c))
    }

    /// The single constant, converting a pair with [`c_from_ab`].
    pub fn as_single(&self) -> Result<u64> {
        match self {
            QiConstants::Single(c) => Ok(*c),
            QiConstants::Pair { a, b } => c_from_ab(a, b),
        }
    }
}

/// Parses an integer, a decimal such as `0.5`, or a fraction such as `7/3`.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let bad = || Error::Parse {
        input: text.to_string(),
        reason: "expected an integer, decimal, or fraction".into(),
    };
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (int_part, frac_part) = t.split_once('.').unwrap_or((t, ""));
    if frac_part.chars().any(|c| !c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let n: BigInt = digits.parse().map_err(|_| bad())?;
    let d = BigInt::from(10u32).pow(frac_part.len() as u32);
    Ok(BigRational::new(n, d))
}

/// `ceil(A * (A + 2B))`: a single constant equivalent to the pair `(A, B)`.
pub fn c_from_ab(a: &BigRational, b: &BigRational) -> Result<u64> {
    if a < &BigRational::one() || b.is_negative() {
        return Err(Error::Domain(format!("need A >= 1 and B >= 0, got A={a}, B={b}")));
    }
    let two = BigRational::from_integer(BigInt::from(2));
    let value = a * (a + &two * b);
    value
        .ceil()
        .to_integer()
        .to_u64()
        .ok_or_else(|| Error::Domain(format!("C = {value} does not fit in 64 bits")))
}

/// `(C + 1, C^2 + 1)`: a pair of constants equivalent to `C`.
pub fn ab_from_c(c: u64) -> Result<(u64, u64)> {
    if c < 1 {
        return Err(Error::Domain("C must be at least 1".into()));
    }
    let a = c.checked_add(1).ok_or_else(|| Error::Domain("C too large".into()))?;
    let b = c
        .checked_mul(c)
        .and_then(|sq| sq.checked_add(1))
        .ok_or_else(|| Error::Domain("C too large".into()))?;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn conversion_examples() {
        assert_eq!(c_from_ab(&q("1"), &q("0")).unwrap(), 1);
        assert_eq!(c_from_ab(&q("2"), &q("1")).unwrap(), 8);
        assert_eq!(c_from_ab(&q("3"), &q("0.5")).unwrap(), 12);
        assert_eq!(c_from_ab(&q("3/2"), &q("0")).unwrap(), 3);
        assert_eq!(ab_from_c(1).unwrap(), (2, 2));
        assert_eq!(ab_from_c(2).unwrap(), (3, 5));
        assert_eq!(ab_from_c(10).unwrap(), (11, 101));
    }

    #[test]
    fn domain_errors() {
        assert!(c_from_ab(&q("0.5"), &q("0")).is_err());
        assert!(c_from_ab(&q("1"), &q("-1")).is_err());
        assert!(ab_from_c(0).is_err());
        assert!(QiConstants::single(0).is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn pair_converts() {
        let k = QiConstants::pair(q("2"), q("1")).unwrap();
        assert_eq!(k.as_single().unwrap(), 8);
    }

    proptest! {
        #[test]
        fn round_trip_never_loses(c in 1u64..1_000_000) {
            let (a, b) = ab_from_c(c).unwrap();
            let back = c_from_ab(&BigRational::from_integer(a.into()), &BigRational::from_integer(b.into())).unwrap();
            prop_assert!(back >= c);
        }

        #[test]
        fn ceiling_dominates_exact_value(an in 1u64..50, ad in 1u64..50, bn in 0u64..50, bd in 1u64..50) {
            let a = BigRational::new(an.into(), ad.into());
            prop_assume!(a >= BigRational::one());
            let b = BigRational::new(bn.into(), bd.into());
            let c = c_from_ab(&a, &b).unwrap();
            let exact = &a * (&a + BigRational::from_integer(2.into()) * &b);
            let cr = BigRational::from_integer(c.into());
            prop_assert!(cr >= exact);
            prop_assert!(cr - BigRational::one() < exact);
        }
    }
}
