//! Congruence subgroups `Γ_I = 1 + M₂(I)` of `GL₂(S)` and their Frattini
//! subgroups, enumerated as explicit matrix sets.

use super::ring::{AddSubgroup, FiniteLocalRing};
use crate::error::{guard, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// A 2×2 matrix over a ring, row-major, entries are element indices.
pub type Mat2 = [usize; 4];

/// Largest congruence subgroup we enumerate.
pub const MAX_CONGRUENCE_ORDER: u128 = 1 << 20;

pub fn mat_identity(r: &FiniteLocalRing) -> Mat2 {
    [r.one(), 0, 0, r.one()]
}

pub fn mat_mul(r: &FiniteLocalRing, a: &Mat2, b: &Mat2) -> Mat2 {
    let dot = |x: usize, y: usize, z: usize, w: usize| r.add(r.mul(x, y), r.mul(z, w));
    [
        dot(a[0], b[0], a[1], b[2]),
        dot(a[0], b[1], a[1], b[3]),
        dot(a[2], b[0], a[3], b[2]),
        dot(a[2], b[1], a[3], b[3]),
    ]
}

pub fn mat_det(r: &FiniteLocalRing, a: &Mat2) -> usize {
    r.sub(r.mul(a[0], a[3]), r.mul(a[1], a[2]))
}

pub fn mat_inverse(r: &FiniteLocalRing, a: &Mat2) -> Option<Mat2> {
    let d = r.inverse(mat_det(r, a))?;
    Some([r.mul(d, a[3]), r.neg(r.mul(d, a[1])), r.neg(r.mul(d, a[2])), r.mul(d, a[0])])
}

/// Multiplicative order, or `None` beyond `cap`.
pub fn mat_order(r: &FiniteLocalRing, a: &Mat2, cap: usize) -> Option<usize> {
    let id = mat_identity(r);
    let mut x = *a;
    for k in 1..=cap {
        if x == id {
            return Some(k);
        }
        x = mat_mul(r, &x, a);
    }
    None
}

/// `a ≡ 1 (mod ideal)` entrywise.
pub fn mat_is_congruent_to_one(r: &FiniteLocalRing, a: &Mat2, ideal: &AddSubgroup) -> bool {
    let id = mat_identity(r);
    (0..4).all(|k| ideal.contains(r.sub(a[k], id[k])))
}

/// `1 + t·E_kl` for `t` in the greedy additive basis of `ideal`.
pub fn congruence_generators(r: &FiniteLocalRing, ideal: &AddSubgroup) -> Vec<Mat2> {
    let mut out = Vec::new();
    for t in r.additive_basis(ideal) {
        for pos in 0..4 {
            let mut m = mat_identity(r);
            m[pos] = r.add(m[pos], t);
            out.push(m);
        }
    }
    out
}

fn key(m: &Mat2) -> u64 {
    // Ring sizes are capped at 2^16, so each entry fits in 16 bits.
    (m[0] as u64) | (m[1] as u64) << 16 | (m[2] as u64) << 32 | (m[3] as u64) << 48
}

/// A finite matrix group grown one generator at a time.
#[derive(Clone, Debug)]
pub struct MatrixClosure {
    set: HashSet<u64>,
    elems: Vec<Mat2>,
    gens: Vec<Mat2>,
}

impl MatrixClosure {
    pub fn trivial(r: &FiniteLocalRing) -> Self {
        let id = mat_identity(r);
        MatrixClosure {
            set: HashSet::from([key(&id)]),
            elems: vec![id],
            gens: Vec::new(),
        }
    }

    pub fn generated(r: &FiniteLocalRing, gens: &[Mat2]) -> Self {
        let mut c = Self::trivial(r);
        for g in gens {
            c.add_generator(r, *g);
        }
        c
    }

    // Always contains the identity.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.elems.len()
    }
    pub fn contains(&self, m: &Mat2) -> bool {
        self.set.contains(&key(m))
    }
    pub fn elements(&self) -> &[Mat2] {
        &self.elems
    }
    pub fn generators(&self) -> &[Mat2] {
        &self.gens
    }

    /// Adds `g` unless it is already a member. Existing elements are already
    /// closed under the old generators, so only products with `g` and the
    /// new elements need visiting.
    pub fn add_generator(&mut self, r: &FiniteLocalRing, g: Mat2) -> bool {
        if self.contains(&g) {
            return false;
        }
        self.gens.push(g);
        let old = self.elems.len();
        for i in 0..old {
            let y = mat_mul(r, &self.elems[i], &g);
            if self.set.insert(key(&y)) {
                self.elems.push(y);
            }
        }
        let mut head = old;
        while head < self.elems.len() {
            let x = self.elems[head];
            head += 1;
            for k in 0..self.gens.len() {
                let y = mat_mul(r, &x, &self.gens[k]);
                if self.set.insert(key(&y)) {
                    self.elems.push(y);
                }
            }
        }
        true
    }
}

fn congruence_guard(ideal: &AddSubgroup) -> Result<u128> {
    let order = (ideal.len() as u128).pow(4);
    guard("congruence subgroup order", order, MAX_CONGRUENCE_ORDER)?;
    Ok(order)
}

/// `Γ_I`, generated by the elementary matrices of [`congruence_generators`].
pub fn congruence_subgroup(r: &FiniteLocalRing, ideal: &AddSubgroup) -> Result<MatrixClosure> {
    let order = congruence_guard(ideal)?;
    let c = MatrixClosure::generated(r, &congruence_generators(r, ideal));
    if c.len() as u128 != order {
        return Err(crate::Error::Invalid(format!("elementary matrices generate {} of {order} elements", c.len())));
    }
    Ok(c)
}

/// Frattini subgroup of `Γ_I`: the normal closure of the p-th powers and
/// commutators of the elementary generators.
pub fn congruence_frattini(r: &FiniteLocalRing, ideal: &AddSubgroup) -> Result<MatrixClosure> {
    congruence_guard(ideal)?;
    let gens = congruence_generators(r, ideal);
    let inv: Vec<Mat2> = gens.iter().map(|g| mat_inverse(r, g).expect("unipotent")).collect();
    let mut seeds = Vec::new();
    for (i, g) in gens.iter().enumerate() {
        let mut gp = mat_identity(r);
        for _ in 0..r.p() {
            gp = mat_mul(r, &gp, g);
        }
        seeds.push(gp);
        for j in i + 1..gens.len() {
            let c = mat_mul(r, &mat_mul(r, g, &gens[j]), &mat_mul(r, &inv[i], &inv[j]));
            seeds.push(c);
        }
    }
    let mut n = MatrixClosure::generated(r, &seeds);
    loop {
        let mut grew = false;
        let current: Vec<Mat2> = n.generators().to_vec();
        for (g, gi) in gens.iter().zip(&inv) {
            for h in &current {
                let c = mat_mul(r, &mat_mul(r, g, h), gi);
                grew |= n.add_generator(r, c);
            }
        }
        if !grew {
            return Ok(n);
        }
    }
}

/// Comparison of `Φ(Γ_I)` with `Γ_{(I², pI)}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrattiniIdentityReport {
    pub ideal_order: u64,
    pub frattini_order: u64,
    pub congruence_order: u64,
    /// `Φ(Γ_I) ⊆ Γ_{(I², pI)}`.
    pub contained: bool,
    /// Equality of the two subgroups.
    pub holds: bool,
}

/// Checks `Φ(Γ_I) = Γ_{(I², pI)}` for an ideal `I` of `S`.
pub fn frattini_subgroup_identity(s: &FiniteLocalRing, ideal: &AddSubgroup) -> Result<FrattiniIdentityReport> {
    let phi = congruence_frattini(s, ideal)?;
    let k = s.frattini_ideal(ideal);
    let congruence_order = (k.len() as u64).pow(4);
    let contained = phi.elements().iter().all(|m| mat_is_congruent_to_one(s, m, &k));
    Ok(FrattiniIdentityReport {
        ideal_order: ideal.len() as u64,
        frattini_order: phi.len() as u64,
        congruence_order,
        contained,
        holds: contained && phi.len() as u64 == congruence_order,
    })
}

/// Whether `Γ_J ⊆ Φ(Γ_I)`, checked on the generators of `Γ_J`.
pub fn congruence_in_frattini(s: &FiniteLocalRing, ideal: &AddSubgroup, j: &AddSubgroup) -> Result<bool> {
    let phi = congruence_frattini(s, ideal)?;
    Ok(congruence_generators(s, j).iter().all(|g| phi.contains(g)))
}
