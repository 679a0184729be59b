//! Arithmetic checks on local extension data: ramification index `e`,
//! residue field size `q`, tameness, and a kernel exponent `n`.

use crate::error::{invalid, Error, Result};
use crate::fp;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalExtensionDatum {
    pub e: u64,
    pub q: u64,
    pub tame: bool,
    #[serde(default = "one")]
    pub n: u64,
}

fn one() -> u64 {
    1
}

impl LocalExtensionDatum {
    pub fn new(e: u64, q: u64, tame: bool, n: u64) -> Result<Self> {
        let d = LocalExtensionDatum { e, q, tame, n };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let Some((p, _)) = fp::prime_power(self.q) else {
            return invalid(format!("q = {} is not a prime power", self.q));
        };
        if self.e == 0 || self.n == 0 {
            return invalid("e and n must be positive");
        }
        if self.e == 1 && !self.tame {
            return invalid("an unramified datum is tame");
        }
        if self.tame && self.e.is_multiple_of(p) {
            return invalid(format!("tame index {} is divisible by the residue characteristic {p}", self.e));
        }
        Ok(())
    }

    /// Residue characteristic.
    pub fn residue_char(&self) -> u64 {
        fp::prime_power(self.q).map_or(0, |(p, _)| p)
    }
}

/// Unramified, or tame with `e | q − 1`.
pub fn property_p(d: &LocalExtensionDatum) -> Result<bool> {
    d.validate()?;
    Ok(d.e == 1 || (d.tame && (d.q - 1).is_multiple_of(d.e)))
}

/// `n′ = ∏_{ℓ | e} ℓ^{v_ℓ(n)}`.
pub fn n_prime(e: u64, n: u64) -> u64 {
    fp::prime_divisors(e)
        .into_iter()
        .map(|l| l.pow(fp::valuation(n, l)))
        .product()
}

/// Tame solvability criterion: `n′e | q − 1`, always true when unramified.
/// Wild data get [`Error::NotApplicable`].
pub fn tame_solvability_criterion(d: &LocalExtensionDatum) -> Result<bool> {
    d.validate()?;
    if d.e == 1 {
        return Ok(true);
    }
    if !d.tame {
        return Err(Error::NotApplicable("wildly ramified datum".into()));
    }
    let m = n_prime(d.e, d.n)
        .checked_mul(d.e)
        .ok_or_else(|| Error::Invalid("n′e overflows".into()))?;
    Ok((d.q - 1).is_multiple_of(m))
}

/// Replaces `q` by `q^growth`, where the residue degree grows by `growth`,
/// either 1 or a prime (the degree of a cyclic layer).
pub fn property_p_base_change(d: &LocalExtensionDatum, growth: u64) -> Result<LocalExtensionDatum> {
    if !property_p(d)? {
        return Err(Error::Hypothesis("input datum fails property P".into()));
    }
    if growth != 1 && !fp::is_prime(growth) {
        return invalid(format!("residue degree growth {growth} is neither 1 nor prime"));
    }
    let q = d
        .q
        .checked_pow(growth as u32)
        .ok_or_else(|| Error::Invalid("residue field size overflows".into()))?;
    LocalExtensionDatum::new(d.e, q, d.tame, d.n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(e: u64, q: u64, n: u64) -> LocalExtensionDatum {
        LocalExtensionDatum::new(e, q, true, n).unwrap()
    }

    #[test]
    fn property_p_examples() {
        assert!(property_p(&d(1, 9, 1)).unwrap());
        assert!(property_p(&d(3, 7, 1)).unwrap());
        assert!(!property_p(&d(3, 5, 1)).unwrap());
        assert!(LocalExtensionDatum::new(2, 6, true, 1).is_err());
    }

    #[test]
    fn solvability_examples() {
        assert!(tame_solvability_criterion(&d(1, 5, 7)).unwrap());
        assert!(tame_solvability_criterion(&d(2, 17, 4)).unwrap());
        assert!(!tame_solvability_criterion(&d(2, 5, 4)).unwrap());
        let wild = LocalExtensionDatum::new(2, 4, false, 1).unwrap();
        assert!(matches!(tame_solvability_criterion(&wild), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn base_change_examples() {
        let out = property_p_base_change(&d(3, 7, 1), 2).unwrap();
        assert_eq!(out.q, 49);
        assert!(property_p(&out).unwrap());
        assert_eq!(property_p_base_change(&d(3, 7, 1), 1).unwrap(), d(3, 7, 1));
        assert!(property_p_base_change(&d(3, 5, 1), 1).is_err());
        assert!(property_p_base_change(&d(3, 7, 1), 4).is_err());
    }
}
