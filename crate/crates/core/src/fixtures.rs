//! Ring and group data shipped with the crate.
//!
//! Rings are stored in the JSON ring format. Residual images are integer
//! 2×2 matrices whose reductions mod `p` generate a group of order prime to
//! `p`; the integer entries are chosen so the relations also hold over the
//! shipped rings of characteristic `p²`.

use crate::error::{invalid, Error, Result};
use crate::groups::{mat2_mul, FiniteGroup};
use crate::localring::{gamma_tilde, quotient, FiniteLocalRing, Mat2, MatrixGroup, RingHom, RingJson};
use serde::Deserialize;
use std::sync::Arc;

const RINGS: &[(&str, &str)] = &[
    ("f2_y2", include_str!("../fixtures/rings/f2_y2.json")),
    ("f2_y3", include_str!("../fixtures/rings/f2_y3.json")),
    ("f3_y2", include_str!("../fixtures/rings/f3_y2.json")),
    ("f3_y3", include_str!("../fixtures/rings/f3_y3.json")),
    ("z9", include_str!("../fixtures/rings/z9.json")),
    ("z4_x", include_str!("../fixtures/rings/z4_x.json")),
];

const RESIDUAL: &[(u32, &str)] = &[
    (2, include_str!("../fixtures/groups/residual_p2.json")),
    (3, include_str!("../fixtures/groups/residual_p3.json")),
];

pub fn ring_names() -> Vec<&'static str> {
    RINGS.iter().map(|(n, _)| *n).collect()
}

pub fn ring_json(name: &str) -> Result<RingJson> {
    let text = RINGS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::Invalid(format!("no ring fixture named {name}")))?;
    serde_json::from_str(text).map_err(|e| Error::Invalid(format!("ring fixture {name}: {e}")))
}

pub fn ring(name: &str) -> Result<FiniteLocalRing> {
    FiniteLocalRing::from_json(&ring_json(name)?)
}

/// The projection `S ↠ S/J` for a ring file that names `kernel_gens`.
pub fn surjection_from_json(j: &RingJson) -> Result<RingHom> {
    let s = Arc::new(FiniteLocalRing::from_json(j)?);
    let gens = j
        .kernel_gens
        .as_ref()
        .ok_or_else(|| Error::Invalid("ring file has no kernel_gens".into()))?;
    if gens.iter().any(|g| g.len() != s.rank()) {
        return invalid("kernel generator has the wrong length");
    }
    let elems: Vec<usize> = gens.iter().map(|g| s.index(g)).collect();
    let kernel = s.ideal_generated(&elems);
    quotient(&s, &kernel)
}

#[derive(Deserialize)]
struct ResidualJson {
    p: u32,
    matrices: Vec<[i64; 4]>,
}

/// A finite subgroup of `GL₂(F_p)` of order prime to `p`, with its
/// generating matrices in generator order.
#[derive(Clone, Debug)]
pub struct ResidualImage {
    pub p: u32,
    pub group: FiniteGroup,
    /// Integer representatives, one per generator.
    pub matrices: Vec<[i64; 4]>,
}

pub fn residual_image(p: u32) -> Result<ResidualImage> {
    let text = RESIDUAL
        .iter()
        .find(|(q, _)| *q == p)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::Invalid(format!("no residual image fixture for p = {p}")))?;
    let j: ResidualJson = serde_json::from_str(text).map_err(|e| Error::Invalid(format!("residual fixture: {e}")))?;
    let reduced: Vec<[u32; 4]> = j.matrices.iter().map(|m| m.map(|c| c.rem_euclid(p as i64) as u32)).collect();
    let (group, _) = FiniteGroup::from_closure([1, 0, 0, 1], &reduced, |a, b| mat2_mul(a, b, j.p), 4096)?;
    if group.order() % p as usize == 0 {
        return invalid("residual image has order divisible by p");
    }
    Ok(ResidualImage {
        p: j.p,
        group,
        matrices: j.matrices,
    })
}

/// Entrywise `c ↦ c·1`.
pub fn constant_lift(r: &FiniteLocalRing, m: &[i64; 4]) -> Mat2 {
    m.map(|c| {
        let x = r.from_int(c.unsigned_abs());
        if c < 0 {
            r.neg(x)
        } else {
            x
        }
    })
}

/// `Γ̃` over `r` built from the shipped residual image for `r.p()`.
pub fn gamma_tilde_fixture(r: Arc<FiniteLocalRing>) -> Result<MatrixGroup> {
    let res = residual_image(r.p())?;
    let emb: Vec<Mat2> = res.matrices.iter().map(|m| constant_lift(&r, m)).collect();
    gamma_tilde(r, &res.group, &emb)
}
