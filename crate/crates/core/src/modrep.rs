//! Modules over F_p[Γ] given by one matrix per generator.
//!
//! Matrices act on column vectors. Subspaces are stored as row bases in
//! reduced echelon form. For Γ = G ⋊ Φ with G a normal p-Sylow subgroup and
//! p ∤ |Φ|, the socle is the G-fixed space and projective indecomposables
//! are induced from simple Φ-modules.

use crate::error::{guard, invalid, Error, Result};
use crate::fp;
use crate::groups::{simple_submodules_by_enumeration, FiniteGroup, PStructure};
use crate::linalg::{solve_affine, Mat, Subspace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Limit on unknowns in a single intertwiner system.
pub const MAX_UNKNOWNS: usize = 6000;

/// Brute-force socle and simplicity checks are allowed below this many vectors.
pub const MAX_ENUMERATED_VECTORS: usize = 1 << 16;

#[derive(Clone, Debug)]
pub struct GroupModule {
    p: u32,
    dim: usize,
    group: Arc<FiniteGroup>,
    gens: Vec<Mat>,
    elems: Vec<Mat>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModuleJson {
    pub p: u32,
    pub dim: usize,
    pub action: Vec<Vec<Vec<u32>>>,
}

impl GroupModule {
    /// Checks that the generator matrices are invertible and satisfy every
    /// relation of the multiplication table.
    pub fn new(p: u32, group: Arc<FiniteGroup>, dim: usize, gens: Vec<Mat>) -> Result<Self> {
        if !fp::is_prime(p as u64) {
            return invalid(format!("{p} is not prime"));
        }
        if gens.len() != group.generators().len() {
            return invalid(format!(
                "{} matrices given for {} generators",
                gens.len(),
                group.generators().len()
            ));
        }
        for m in &gens {
            if m.p() != p || m.rows() != dim || m.cols() != dim {
                return invalid("generator matrices have inconsistent shapes");
            }
            if !m.is_invertible() {
                return invalid("generator matrix is not invertible");
            }
        }
        let elems = group
            .extend_generator_map(&gens, Mat::identity(p, dim), |a, b| a.mul(b))
            .ok_or_else(|| Error::Invalid("matrices do not satisfy the group relations".into()))?;
        Ok(GroupModule {
            p,
            dim,
            group,
            gens,
            elems,
        })
    }

    /// `dim` copies of the trivial module.
    pub fn trivial(p: u32, group: Arc<FiniteGroup>, dim: usize) -> Result<Self> {
        let id = Mat::identity(p, dim);
        Ok(GroupModule {
            p,
            dim,
            gens: vec![id.clone(); group.generators().len()],
            elems: vec![id; group.order()],
            group,
        })
    }

    /// Permutation module of the left regular action, basis indexed by elements.
    pub fn regular(p: u32, group: Arc<FiniteGroup>) -> Result<Self> {
        let n = group.order();
        let perm = |g: usize| {
            let mut m = Mat::zeros(p, n, n);
            for x in 0..n {
                m.set(group.mul(g, x), x, 1);
            }
            m
        };
        let gens = group.generators().iter().map(|&g| perm(g)).collect();
        Self::new(p, group.clone(), n, gens)
    }

    pub fn direct_sum(&self, other: &GroupModule) -> Result<Self> {
        self.check_same_group(other)?;
        let d = self.dim + other.dim;
        let block = |a: &Mat, b: &Mat| {
            let mut m = Mat::zeros(self.p, d, d);
            for i in 0..self.dim {
                for j in 0..self.dim {
                    m.set(i, j, a.get(i, j));
                }
            }
            for i in 0..other.dim {
                for j in 0..other.dim {
                    m.set(self.dim + i, self.dim + j, b.get(i, j));
                }
            }
            m
        };
        Ok(GroupModule {
            p: self.p,
            dim: d,
            group: self.group.clone(),
            gens: self.gens.iter().zip(&other.gens).map(|(a, b)| block(a, b)).collect(),
            elems: self.elems.iter().zip(&other.elems).map(|(a, b)| block(a, b)).collect(),
        })
    }

    pub fn power(&self, k: usize) -> Result<Self> {
        let mut out = Self::trivial(self.p, self.group.clone(), 0)?;
        for _ in 0..k {
            out = out.direct_sum(self)?;
        }
        Ok(out)
    }

    pub fn from_json(j: &ModuleJson, group: Arc<FiniteGroup>) -> Result<Self> {
        let gens = j
            .action
            .iter()
            .map(|rows| {
                if rows.len() != j.dim || rows.iter().any(|r| r.len() != j.dim) {
                    return invalid("action matrix has the wrong shape");
                }
                let reduced: Vec<Vec<u32>> = rows.iter().map(|r| r.iter().map(|&x| x % j.p).collect()).collect();
                Ok(Mat::from_rows(j.p, j.dim, &reduced))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(j.p, group, j.dim, gens)
    }

    pub fn to_json(&self) -> ModuleJson {
        ModuleJson {
            p: self.p,
            dim: self.dim,
            action: self.gens.iter().map(|m| m.row_vecs()).collect(),
        }
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }
    pub fn generator_matrices(&self) -> &[Mat] {
        &self.gens
    }
    pub fn element_matrix(&self, g: usize) -> &Mat {
        &self.elems[g]
    }
    pub fn element_matrices(&self) -> &[Mat] {
        &self.elems
    }

    fn check_same_group(&self, other: &GroupModule) -> Result<()> {
        if self.p != other.p || !(Arc::ptr_eq(&self.group, &other.group) || *self.group == *other.group) {
            return invalid("modules live over different groups or fields");
        }
        Ok(())
    }

    pub fn is_submodule(&self, s: &Subspace) -> bool {
        s.ambient_dim() == self.dim && self.gens.iter().all(|m| s.is_stable_under(m))
    }

    /// Smallest submodule containing `vs`.
    pub fn spin(&self, vs: &[Vec<u32>]) -> Subspace {
        let mut current = Subspace::span_vecs(self.p, self.dim, vs);
        loop {
            let mut rows = current.basis().clone();
            for m in &self.gens {
                rows = rows.vstack(&current.basis().mul(&m.transpose()));
            }
            let next = Subspace::span(&rows);
            if next.dim() == current.dim() {
                return current;
            }
            current = next;
        }
    }

    /// The action restricted to an invariant subspace, in its reduced basis.
    pub fn submodule(&self, s: &Subspace) -> Result<GroupModule> {
        if !self.is_submodule(s) {
            return invalid("subspace is not invariant");
        }
        Ok(GroupModule {
            p: self.p,
            dim: s.dim(),
            group: self.group.clone(),
            gens: self.gens.iter().map(|m| s.restrict(m)).collect(),
            elems: self.elems.iter().map(|m| s.restrict(m)).collect(),
        })
    }

    /// Fixed vectors of the subgroup generated by `gens` (indices into the group).
    pub fn fixed_space(&self, gens: &[usize]) -> Subspace {
        if gens.is_empty() || self.dim == 0 {
            return Subspace::full(self.p, self.dim);
        }
        let id = Mat::identity(self.p, self.dim);
        let mut stacked = Mat::zeros(self.p, 0, self.dim);
        for &g in gens {
            stacked = stacked.vstack(&self.elems[g].sub(&id));
        }
        Subspace::span(&stacked.kernel())
    }

    /// `Σ_{g ∈ elems} ρ(g)`.
    pub fn element_sum(&self, elems: &[usize]) -> Mat {
        let mut acc = Mat::zeros(self.p, self.dim, self.dim);
        for &g in elems {
            acc = acc.add(&self.elems[g]);
        }
        acc
    }

    /// Module over the complement Φ obtained by restricting along `Φ → Γ`.
    pub fn restrict_to_complement(&self, ps: &PStructure) -> Result<GroupModule> {
        let phi = Arc::new(ps.complement.clone());
        let gens = phi
            .generators()
            .iter()
            .map(|&f| self.elems[ps.complement_elems[f]].clone())
            .collect();
        GroupModule::new(self.p, phi, self.dim, gens)
    }

    /// Inflation of a Φ-module to Γ through `Γ → Φ`.
    pub fn inflate(s: &GroupModule, gamma: Arc<FiniteGroup>, ps: &PStructure) -> Result<GroupModule> {
        if *s.group != ps.complement {
            return invalid("module is not over the complement");
        }
        let gens: Vec<Mat> = gamma
            .generators()
            .iter()
            .map(|&g| s.elems[ps.split[g].1].clone())
            .collect();
        GroupModule::new(s.p, gamma, s.dim, gens)
    }
}

/// Basis of all `X` (`b.dim × a.dim`) with `X ρ_a(s) = ρ_b(s) X` for every generator.
pub fn hom_space(a: &GroupModule, b: &GroupModule) -> Result<Vec<Mat>> {
    a.check_same_group(b)?;
    let (da, db) = (a.dim, b.dim);
    let unknowns = da * db;
    guard("intertwiner unknowns", unknowns as u128, MAX_UNKNOWNS as u128)?;
    if unknowns == 0 {
        return Ok(Vec::new());
    }
    let p = a.p;
    let eqs = intertwiner_equations(a, b);
    let ker = eqs.kernel();
    Ok((0..ker.rows())
        .map(|k| Mat::from_flat(p, db, da, ker.row(k).to_vec()))
        .collect())
}

/// Rows encode `X ρ_a(s) − ρ_b(s) X = 0`, unknown `X[r][k]` at index `r·da + k`.
fn intertwiner_equations(a: &GroupModule, b: &GroupModule) -> Mat {
    let (da, db) = (a.dim, b.dim);
    let p = a.p;
    let unknowns = da * db;
    let mut rows = Vec::new();
    for (sa, sb) in a.gens.iter().zip(&b.gens) {
        for r in 0..db {
            for c in 0..da {
                let mut row = vec![0u32; unknowns];
                for k in 0..da {
                    let v = sa.get(k, c);
                    if v != 0 {
                        row[r * da + k] = fp::add(row[r * da + k], v, p);
                    }
                }
                for k in 0..db {
                    let v = sb.get(r, k);
                    if v != 0 {
                        row[k * da + c] = fp::sub(row[k * da + c], v, p);
                    }
                }
                rows.push(row);
            }
        }
    }
    Mat::from_rows(p, unknowns, &rows)
}

/// End_Γ(m) as a list of basis matrices.
pub fn commutant(m: &GroupModule) -> Result<Vec<Mat>> {
    hom_space(m, m)
}

fn flatten(ms: &[Mat], p: u32, n: usize) -> Subspace {
    let rows: Vec<Vec<u32>> = ms.iter().map(|m| m.data().to_vec()).collect();
    Subspace::span_vecs(p, n * n, &rows)
}

/// Whether the span of `basis` (a commutative-or-not matrix algebra) is a field.
/// Only meaningful for semisimple algebras, where it reduces to commutativity
/// plus a one-dimensional fixed space of the Frobenius `X ↦ X^p`.
fn algebra_is_field(basis: &[Mat], p: u32, n: usize) -> bool {
    if basis.is_empty() {
        return false;
    }
    for (i, x) in basis.iter().enumerate() {
        for y in &basis[i + 1..] {
            if x.mul(y) != y.mul(x) {
                return false;
            }
        }
    }
    let space = flatten(basis, p, n);
    let k = space.dim();
    let mut frob = Mat::zeros(p, k, k);
    for j in 0..k {
        let x = Mat::from_flat(p, n, n, space.basis().row(j).to_vec());
        let c = space
            .coords(x.pow(p as u64).data())
            .expect("algebra closed under powers");
        for (i, v) in c.into_iter().enumerate() {
            frob.set(i, j, v);
        }
    }
    frob.sub(&Mat::identity(p, k)).kernel().rows() == 1
}

/// Irreducibility test. Uses the commutant when `p ∤ |Γ|`, the normal Sylow
/// structure when available, and vector enumeration for small modules.
pub fn is_simple(m: &GroupModule) -> Result<bool> {
    if m.dim == 0 {
        return Ok(false);
    }
    let p = m.p as usize;
    if !m.group.order().is_multiple_of(p) {
        return Ok(algebra_is_field(&commutant(m)?, m.p, m.dim));
    }
    if let Ok(ps) = m.group.p_structure(p) {
        if m.fixed_space(&ps.normal_gens).dim() != m.dim {
            return Ok(false);
        }
        let r = m.restrict_to_complement(&ps)?;
        return Ok(algebra_is_field(&commutant(&r)?, r.p, r.dim));
    }
    let total = (m.p as u128).pow(m.dim as u32);
    guard("vectors enumerated for the simplicity test", total, MAX_ENUMERATED_VECTORS as u128)?;
    Ok(simple_submodules_by_enumeration(m.p, m.dim, &m.elems)
        .first()
        .is_some_and(|s| s.dim() == m.dim))
}

/// A proper nonzero submodule of a semisimple module, or `None` if simple.
fn proper_submodule(m: &GroupModule, rng: &mut ChaCha8Rng) -> Result<Option<Subspace>> {
    let basis = commutant(m)?;
    if algebra_is_field(&basis, m.p, m.dim) {
        return Ok(None);
    }
    for _ in 0..20_000 {
        let mut a = Mat::zeros(m.p, m.dim, m.dim);
        for b in &basis {
            a = a.add(&b.scale(rng.gen_range(0..m.p)));
        }
        if a.is_zero() || a.is_invertible() {
            continue;
        }
        return Ok(Some(Subspace::span(&a.kernel())));
    }
    Err(Error::Unsupported(
        "random search for a non-invertible endomorphism did not terminate".into(),
    ))
}

/// Complement of a submodule, found by averaging a linear projection over
/// the group. Requires `p ∤ |Γ|`.
pub fn semisimple_complement(m: &GroupModule, n: &Subspace) -> Result<Subspace> {
    let order = m.group.order();
    if order.is_multiple_of(m.p as usize) {
        return Err(Error::Hypothesis(format!("{} divides the group order {order}", m.p)));
    }
    let p = m.p;
    let d = m.dim;
    let mut cols = n.basis().row_vecs();
    for j in 0..d {
        if !n.pivots().contains(&j) {
            let mut e = vec![0u32; d];
            e[j] = 1;
            cols.push(e);
        }
    }
    let b = Mat::from_rows(p, d, &cols).transpose();
    let mut diag = Mat::zeros(p, d, d);
    for i in 0..n.dim() {
        diag.set(i, i, 1);
    }
    let proj = b.mul(&diag).mul(&b.inverse().expect("completed basis"));
    let mut avg = Mat::zeros(p, d, d);
    for g in 0..order {
        let gi = m.group.inv(g);
        avg = avg.add(&m.elems[g].mul(&proj).mul(&m.elems[gi]));
    }
    let avg = avg.scale(fp::inv((order % p as usize) as u32, p));
    Ok(Subspace::span(&avg.kernel()))
}

/// Splits a semisimple module into simple submodules whose direct sum is the
/// whole module. Each piece is a row basis in the module's coordinates.
pub fn split_semisimple(m: &GroupModule) -> Result<Vec<Subspace>> {
    if m.group.order().is_multiple_of(m.p as usize) {
        return Err(Error::Hypothesis(format!(
            "{} divides |Φ| = {}; the module need not be semisimple",
            m.p,
            m.group.order()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut out = Vec::new();
    split_rec(m, &Mat::identity(m.p, m.dim), &mut rng, &mut out)?;
    Ok(out)
}

fn split_rec(m: &GroupModule, embed: &Mat, rng: &mut ChaCha8Rng, out: &mut Vec<Subspace>) -> Result<()> {
    if m.dim == 0 {
        return Ok(());
    }
    match proper_submodule(m, rng)? {
        None => out.push(Subspace::span(embed)),
        Some(n) => {
            let c = semisimple_complement(m, &n)?;
            for piece in [n, c] {
                let sub = m.submodule(&piece)?;
                split_rec(&sub, &piece.basis().mul(embed), rng, out)?;
            }
        }
    }
    Ok(())
}

/// Simple modules `S, T` are isomorphic iff `Hom(S, T) ≠ 0`.
pub fn simples_isomorphic(s: &GroupModule, t: &GroupModule) -> Result<bool> {
    Ok(s.dim == t.dim && !hom_space(s, t)?.is_empty())
}

/// An isomorphism `s → t` between simple modules, if one exists.
pub fn simple_isomorphism(s: &GroupModule, t: &GroupModule) -> Result<Option<Mat>> {
    if s.dim != t.dim {
        return Ok(None);
    }
    Ok(hom_space(s, t)?.into_iter().next())
}

fn character(m: &GroupModule) -> Vec<u32> {
    m.elems.iter().map(|x| x.trace()).collect()
}

/// Representatives of the simple F_p[Φ]-modules, read off the regular module.
/// Sorted by dimension, then character values, then discovery order.
pub fn simple_modules(p: u32, phi: Arc<FiniteGroup>) -> Result<Vec<GroupModule>> {
    let reg = GroupModule::regular(p, phi)?;
    let pieces = split_semisimple(&reg)?;
    let mut reps: Vec<GroupModule> = Vec::new();
    for piece in pieces {
        let s = reg.submodule(&piece)?;
        let mut known = false;
        for r in &reps {
            if simples_isomorphic(r, &s)? {
                known = true;
                break;
            }
        }
        if !known {
            reps.push(s);
        }
    }
    let mut keyed: Vec<(usize, Vec<u32>, usize, GroupModule)> = reps
        .into_iter()
        .enumerate()
        .map(|(i, s)| (s.dim, character(&s), i, s))
        .collect();
    keyed.sort_by(|a, b| (a.0, &a.1, a.2).cmp(&(b.0, &b.1, b.2)));
    Ok(keyed.into_iter().map(|k| k.3).collect())
}

/// `dim_{F_p} End(W)`.
pub fn endomorphism_dim(w: &GroupModule) -> Result<usize> {
    Ok(commutant(w)?.len())
}

/// Multiplicities of the canonical simples in a semisimple Φ-module.
pub fn simple_decomposition(m: &GroupModule) -> Result<Vec<(GroupModule, usize)>> {
    if m.group.order().is_multiple_of(m.p as usize) {
        return Err(Error::Hypothesis(format!(
            "{} divides |Φ| = {}",
            m.p,
            m.group.order()
        )));
    }
    let mut out = Vec::new();
    let mut covered = 0;
    for s in simple_modules(m.p, m.group.clone())? {
        let hom = hom_space(&s, m)?.len();
        let end = endomorphism_dim(&s)?;
        let mult = hom / end;
        if mult > 0 {
            covered += mult * s.dim;
            out.push((s, mult));
        }
    }
    if covered != m.dim {
        return Err(Error::Invalid(format!(
            "multiplicities cover dimension {covered} of {}",
            m.dim
        )));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct IsotypicProjector {
    /// `n_{g,W}` for every group element `g`.
    pub coefficients: Vec<u32>,
    pub matrix: Mat,
}

/// `P_W = (dim W / (|Φ| dim End W)) Σ_g χ_W(g⁻¹) ρ(g)` with all arithmetic in F_p.
pub fn isotypic_projector(m: &GroupModule, w: &GroupModule) -> Result<IsotypicProjector> {
    m.check_same_group(w)?;
    let p = m.p;
    let order = m.group.order();
    if order.is_multiple_of(p as usize) {
        return Err(Error::Hypothesis(format!("{p} divides |Φ| = {order}")));
    }
    if !is_simple(w)? {
        return invalid("target module is not simple");
    }
    let end = endomorphism_dim(w)?;
    // dim W / dim End W is the dimension over the splitting field, an integer.
    let ratio = (w.dim / end) as u32 % p;
    let scale = fp::mul(ratio, fp::inv((order % p as usize) as u32, p), p);
    let coefficients: Vec<u32> = (0..order)
        .map(|g| fp::mul(scale, w.elems[m.group.inv(g)].trace(), p))
        .collect();
    let mut matrix = Mat::zeros(p, m.dim, m.dim);
    for (g, &c) in coefficients.iter().enumerate() {
        if c != 0 {
            matrix = matrix.add(&m.elems[g].scale(c));
        }
    }
    Ok(IsotypicProjector { coefficients, matrix })
}

/// Socle of a Γ-module: the G-fixed space when G is a normal p-Sylow,
/// otherwise the sum of simple submodules found by enumeration.
pub fn socle(m: &GroupModule) -> Result<Subspace> {
    if let Ok(ps) = m.group.p_structure(m.p as usize) {
        return Ok(m.fixed_space(&ps.normal_gens));
    }
    let total = (m.p as u128).pow(m.dim as u32);
    guard("vectors enumerated for the socle", total, MAX_ENUMERATED_VECTORS as u128)?;
    Ok(socle_by_enumeration(m))
}

/// Sum of all simple submodules, found by spinning every vector.
pub fn socle_by_enumeration(m: &GroupModule) -> Subspace {
    simple_submodules_by_enumeration(m.p, m.dim, &m.elems)
        .iter()
        .fold(Subspace::zero(m.p, m.dim), |acc, s| acc.sum(s))
}

/// `F_p[Γ] ⊗_{F_p[Φ]} S` with basis `g ⊗ s_j`, `g` running over the normal
/// p-Sylow subgroup G.
pub fn projective_indecomposable(gamma: Arc<FiniteGroup>, s: &GroupModule) -> Result<GroupModule> {
    let ps = gamma.p_structure(s.p as usize)?;
    if *s.group != ps.complement {
        return invalid("simple module is not over the complement of the p-Sylow subgroup");
    }
    let ng = ps.normal_order;
    let d = s.dim;
    let p = s.p;
    let block_matrix = |gamma_elem: usize| {
        let mut m = Mat::zeros(p, ng * d, ng * d);
        for g in 0..ng {
            let (g2, f2) = ps.split[gamma.mul(gamma_elem, ps.normal_elems[g])];
            let sm = &s.elems[f2];
            for i in 0..d {
                for j in 0..d {
                    m.set(g2 * d + i, g * d + j, sm.get(i, j));
                }
            }
        }
        m
    };
    let gens: Vec<Mat> = gamma.generators().iter().map(|&g| block_matrix(g)).collect();
    GroupModule::new(p, gamma, ng * d, gens)
}

/// Socle of `P_S`: vectors `N ⊗ v` with `N` the norm element of G.
fn pim_socle_vector(ng: usize, d: usize, v: &[u32]) -> Vec<u32> {
    let mut out = vec![0u32; ng * d];
    for g in 0..ng {
        out[g * d..(g + 1) * d].copy_from_slice(v);
    }
    out
}

#[derive(Clone, Debug)]
pub struct FreeCertificate {
    pub free: bool,
    pub rank: usize,
    /// Free generators, one per copy of F_p[Γ], when `free`.
    pub generators: Vec<Vec<u32>>,
    pub reason: String,
}

fn socle_multiplicities(m: &GroupModule, ps: &PStructure, simples: &[GroupModule]) -> Result<Vec<usize>> {
    let soc = socle(m)?;
    let sm = m.submodule(&soc)?.restrict_to_complement(ps)?;
    simples
        .iter()
        .map(|s| Ok(hom_space(s, &sm)?.len() / endomorphism_dim(s)?))
        .collect()
}

/// Decides whether `m ≅ F_p[Γ]^k`.
pub fn is_free(m: &GroupModule) -> Result<FreeCertificate> {
    let order = m.group.order();
    let not_free = |reason: String| FreeCertificate {
        free: false,
        rank: 0,
        generators: Vec::new(),
        reason,
    };
    if !m.dim.is_multiple_of(order) {
        return Ok(not_free(format!("dimension {} is not divisible by |Γ| = {order}", m.dim)));
    }
    let k = m.dim / order;
    let ps = m.group.p_structure(m.p as usize)?;
    let norm = m.element_sum(&ps.normal_elems);
    if norm.rank() * ps.normal_order != m.dim {
        return Ok(not_free("restriction to the p-Sylow subgroup is not free".into()));
    }
    let phi = Arc::new(ps.complement.clone());
    let simples = simple_modules(m.p, phi)?;
    let mults = socle_multiplicities(m, &ps, &simples)?;
    for (s, &a) in simples.iter().zip(&mults) {
        let expected = k * (s.dim / endomorphism_dim(s)?);
        if a != expected {
            return Ok(not_free(format!(
                "socle multiplicity {a} of a simple of dimension {} differs from {expected}",
                s.dim
            )));
        }
    }
    let ambient = Subspace::full(m.p, m.dim);
    let generators = free_generators(m, &ambient, k)?;
    Ok(FreeCertificate {
        free: true,
        rank: k,
        generators,
        reason: "projective with the socle multiplicities of a free module".into(),
    })
}

/// Greedily picks `k` vectors of `within` whose orbits span a free submodule
/// of rank `k`. Candidates: basis vectors, then small coordinate
/// combinations, then seeded random vectors.
pub fn free_generators(m: &GroupModule, within: &Subspace, k: usize) -> Result<Vec<Vec<u32>>> {
    let order = m.group.order();
    let p = m.p;
    let dw = within.dim();
    let mut chosen: Vec<Vec<u32>> = Vec::new();
    let mut span = Subspace::zero(p, m.dim);
    let lift = |c: &[u32]| -> Vec<u32> {
        let mut v = vec![0u32; m.dim];
        for (i, &ci) in c.iter().enumerate() {
            if ci == 0 {
                continue;
            }
            for (j, x) in v.iter_mut().enumerate() {
                *x = fp::add(*x, fp::mul(ci, within.basis().get(i, j), p), p);
            }
        }
        v
    };
    let try_vec = |v: Vec<u32>, chosen: &mut Vec<Vec<u32>>, span: &mut Subspace| {
        let orbit: Vec<Vec<u32>> = m.elems.iter().map(|g| g.apply(&v)).collect();
        let next = span.sum(&Subspace::span_vecs(p, m.dim, &orbit));
        if next.dim() == span.dim() + order {
            *span = next;
            chosen.push(v);
        }
    };
    for i in 0..dw {
        if chosen.len() == k {
            return Ok(chosen);
        }
        let mut c = vec![0u32; dw];
        c[i] = 1;
        try_vec(lift(&c), &mut chosen, &mut span);
    }
    let enum_limit = (p as u128).pow(dw as u32).min(4096) as usize;
    for code in 1..enum_limit {
        if chosen.len() == k {
            return Ok(chosen);
        }
        let c = crate::groups::decode(code, p, dw);
        try_vec(lift(&c), &mut chosen, &mut span);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..20_000 {
        if chosen.len() == k {
            return Ok(chosen);
        }
        let c: Vec<u32> = (0..dw).map(|_| rng.gen_range(0..p)).collect();
        try_vec(lift(&c), &mut chosen, &mut span);
    }
    if chosen.len() == k {
        return Ok(chosen);
    }
    Err(Error::Hypothesis(format!(
        "found only {} of {k} free generators",
        chosen.len()
    )))
}

#[derive(Clone, Debug)]
pub struct InjectiveHull {
    /// `⊕ P_{S_i}`, one summand per simple piece of the socle of E.
    pub hull: GroupModule,
    /// Index into `simple_modules(p, Φ)` for each summand.
    pub summands: Vec<usize>,
    /// `α_S` per canonical simple.
    pub multiplicities: Vec<usize>,
    /// `hull.dim × e.dim`: E (in its reduced basis) into the hull.
    pub from_submodule: Mat,
    /// `ambient.dim × hull.dim`: injective equivariant map extending E ⊆ ambient.
    pub into_ambient: Mat,
    /// Image of `into_ambient`.
    pub image: Subspace,
}

/// Solves for `X` (`rows_out × cols_in`) intertwining `a → b`, subject to
/// extra affine constraints `X · v_i = w_i`.
fn solve_intertwiner(a: &GroupModule, b: &GroupModule, constraints: &[(Vec<u32>, Vec<u32>)]) -> Result<Option<Mat>> {
    let (da, db) = (a.dim, b.dim);
    let unknowns = da * db;
    guard("intertwiner unknowns", unknowns as u128, MAX_UNKNOWNS as u128)?;
    let p = a.p;
    let mut eqs = intertwiner_equations(a, b);
    let mut rhs = vec![0u32; eqs.rows()];
    let mut extra = Vec::new();
    for (v, w) in constraints {
        for r in 0..db {
            let mut row = vec![0u32; unknowns];
            for k in 0..da {
                row[r * da + k] = v[k];
            }
            extra.push(row);
            rhs.push(w[r]);
        }
    }
    if !extra.is_empty() {
        eqs = eqs.vstack(&Mat::from_rows(p, unknowns, &extra));
    }
    Ok(solve_affine(p, unknowns, &eqs, &rhs).map(|(x, _)| Mat::from_flat(p, db, da, x)))
}

/// Injective hull of a submodule `e` of a free module, realized inside it.
pub fn injective_hull(ambient: &GroupModule, e: &Subspace) -> Result<InjectiveHull> {
    if !ambient.is_submodule(e) {
        return invalid("E is not a submodule of the ambient module");
    }
    if !is_free(ambient)?.free {
        return Err(Error::Hypothesis("ambient module is not free".into()));
    }
    let p = ambient.p;
    let gamma = ambient.group.clone();
    let ps = gamma.p_structure(p as usize)?;
    let simples = simple_modules(p, Arc::new(ps.complement.clone()))?;
    let soc_e = socle(ambient)?.intersect(e);

    // Split Soc(E) into simple Φ-pieces and match each with a canonical simple.
    let soc_mod = ambient.submodule(&soc_e)?.restrict_to_complement(&ps)?;
    let pieces = if soc_e.dim() == 0 { Vec::new() } else { split_semisimple(&soc_mod)? };
    let mut summands = Vec::new();
    let mut isos = Vec::new();
    for piece in &pieces {
        let t = soc_mod.submodule(piece)?;
        let mut found = None;
        for (k, s) in simples.iter().enumerate() {
            if let Some(f) = simple_isomorphism(s, &t)? {
                found = Some((k, f));
                break;
            }
        }
        let (k, f) = found.ok_or_else(|| Error::Invalid("socle piece matches no simple module".into()))?;
        summands.push(k);
        isos.push(f);
    }
    let mut multiplicities = vec![0; simples.len()];
    summands.iter().for_each(|&k| multiplicities[k] += 1);

    let mut hull = GroupModule::trivial(p, gamma.clone(), 0)?;
    let mut offsets = Vec::new();
    for &k in &summands {
        offsets.push(hull.dim);
        hull = hull.direct_sum(&projective_indecomposable(gamma.clone(), &simples[k])?)?;
    }
    let ng = ps.normal_order;

    // j : E → H, prescribed on Soc(E) by t ↦ N ⊗ f⁻¹(t).
    let e_mod = ambient.submodule(e)?;
    let mut constraints = Vec::new();
    for (idx, piece) in pieces.iter().enumerate() {
        let s = &simples[summands[idx]];
        let f_inv = isos[idx].inverse().expect("isomorphism");
        for r in 0..piece.dim() {
            let in_soc = soc_mod_vector(&soc_e, piece.basis().row(r));
            let c_e = e.coords(&in_soc).expect("socle of E lies in E");
            let mut t_coords = vec![0u32; piece.dim()];
            t_coords[r] = 1;
            let v = f_inv.apply(&t_coords);
            let mut target = vec![0u32; hull.dim];
            let block = pim_socle_vector(ng, s.dim, &v);
            target[offsets[idx]..offsets[idx] + block.len()].copy_from_slice(&block);
            constraints.push((c_e, target));
        }
    }
    let j = solve_intertwiner(&e_mod, &hull, &constraints)?
        .ok_or_else(|| Error::Invalid("no extension of the socle map into the hull".into()))?;

    // ι : H → A with ι ∘ j = inclusion of E.
    let mut constraints = Vec::new();
    for c in 0..e.dim() {
        constraints.push((j.transpose().row(c).to_vec(), e.basis().row(c).to_vec()));
    }
    let iota = solve_intertwiner(&hull, ambient, &constraints)?
        .ok_or_else(|| Error::Invalid("hull does not map into the ambient module".into()))?;
    let image = Subspace::span(&iota.transpose());
    if image.dim() != hull.dim {
        return Err(Error::Invalid("hull map into the ambient module is not injective".into()));
    }
    Ok(InjectiveHull {
        hull,
        summands,
        multiplicities,
        from_submodule: j,
        into_ambient: iota,
        image,
    })
}

/// Converts coordinates relative to `soc`'s reduced basis into ambient coordinates.
fn soc_mod_vector(soc: &Subspace, coords: &[u32]) -> Vec<u32> {
    let p = soc.p();
    let mut v = vec![0u32; soc.ambient_dim()];
    for (i, &c) in coords.iter().enumerate() {
        if c == 0 {
            continue;
        }
        for (k, x) in v.iter_mut().enumerate() {
            *x = fp::add(*x, fp::mul(c, soc.basis().get(i, k), p), p);
        }
    }
    v
}

/// Equivariant complement of an injective submodule `x`, via a projection onto it.
pub fn injective_complement(m: &GroupModule, x: &Subspace) -> Result<Subspace> {
    if x.dim() == m.dim {
        return Ok(Subspace::zero(m.p, m.dim));
    }
    if x.dim() == 0 {
        return Ok(Subspace::full(m.p, m.dim));
    }
    let xm = m.submodule(x)?;
    let constraints: Vec<(Vec<u32>, Vec<u32>)> = (0..x.dim())
        .map(|i| {
            let mut e = vec![0u32; x.dim()];
            e[i] = 1;
            (x.basis().row(i).to_vec(), e)
        })
        .collect();
    let proj = solve_intertwiner(m, &xm, &constraints)?
        .ok_or_else(|| Error::Hypothesis("submodule is not a direct summand".into()))?;
    Ok(Subspace::span(&proj.kernel()))
}

#[derive(Clone, Debug)]
pub struct FreeSummandSplit {
    pub m: Subspace,
    pub n: Subspace,
    pub q: Subspace,
    pub q_rank: usize,
    /// Image of the injective hull of E.
    pub hull_image: Subspace,
    /// Projective piece added to the hull image to form M.
    pub p_part: Subspace,
}

/// Splits a free module as `M ⊕ N ⊕ Q` with `E ⊆ M` and `Q` free of the
/// largest rank the complement of `hull(E) ⊕ N` allows.
pub fn free_summand_split(ambient: &GroupModule, e: &Subspace, n: &Subspace) -> Result<FreeSummandSplit> {
    let p = ambient.p;
    if !ambient.is_submodule(e) || !ambient.is_submodule(n) {
        return invalid("E and N must be submodules");
    }
    let soc_e = socle(ambient)?.intersect(e);
    if soc_e.intersect(n).dim() != 0 {
        return Err(Error::Hypothesis("the socle of E meets N".into()));
    }
    let n_complement = injective_complement(ambient, n)?;
    if n.dim() > 0 && !is_free(&ambient.submodule(&n_complement)?)?.free {
        return Err(Error::Hypothesis("N has no free complement".into()));
    }
    let hull = injective_hull(ambient, e)?;
    let m1 = hull.image.clone();
    let x = m1.sum(n);
    if x.dim() != m1.dim() + n.dim() {
        return Err(Error::Invalid("hull of E meets N".into()));
    }
    let c = injective_complement(ambient, &x)?;
    let cm = ambient.submodule(&c)?;
    let ps = ambient.group.p_structure(p as usize)?;
    let simples = simple_modules(p, Arc::new(ps.complement.clone()))?;
    let betas = socle_multiplicities(&cm, &ps, &simples)?;
    let mut t = usize::MAX;
    for (s, &b) in simples.iter().zip(&betas) {
        t = t.min(b / (s.dim / endomorphism_dim(s)?));
    }
    let q_gens = free_generators(ambient, &c, t)?;
    let orbit: Vec<Vec<u32>> = q_gens
        .iter()
        .flat_map(|v| ambient.elems.iter().map(move |g| g.apply(v)))
        .collect();
    let q = Subspace::span_vecs(p, ambient.dim, &orbit);
    let q_in_c = Subspace::span_vecs(
        p,
        c.dim(),
        &(0..q.dim()).map(|i| c.coords(q.basis().row(i)).expect("Q inside C")).collect::<Vec<_>>(),
    );
    let p_in_c = injective_complement(&cm, &q_in_c)?;
    let p_part = Subspace::span(&p_in_c.basis().mul(c.basis()));
    let m = m1.sum(&p_part);
    if m.dim() + n.dim() + q.dim() != ambient.dim || m.sum(n).sum(&q).dim() != ambient.dim {
        return Err(Error::Invalid("pieces do not form a direct sum".into()));
    }
    Ok(FreeSummandSplit {
        m,
        n: n.clone(),
        q,
        q_rank: t,
        hull_image: m1,
        p_part,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{semidirect_product, GroupAction};

    fn s3() -> Arc<FiniteGroup> {
        let g = FiniteGroup::cyclic(3);
        let phi = FiniteGroup::cyclic(2);
        let act = GroupAction::from_generator_images(&phi, &g, &[vec![0, 2, 1]]).unwrap();
        Arc::new(semidirect_product(&g, &phi, &act).unwrap())
    }

    #[test]
    fn regular_z2_mod3_splits_into_trivial_and_sign() {
        let z2 = Arc::new(FiniteGroup::cyclic(2));
        let reg = GroupModule::regular(3, z2.clone()).unwrap();
        let dec = simple_decomposition(&reg).unwrap();
        assert_eq!(dec.len(), 2);
        assert!(dec.iter().all(|(s, m)| s.dim() == 1 && *m == 1));
        let triv = &dec[0].0;
        assert_eq!(triv.element_matrix(1).get(0, 0), 1);
        let proj = isotypic_projector(&reg, triv).unwrap();
        assert_eq!(proj.matrix, Mat::from_rows(3, 2, &[vec![2, 2], vec![2, 2]]));
    }

    #[test]
    fn regular_z3_mod2_has_a_two_dim_simple() {
        let z3 = Arc::new(FiniteGroup::cyclic(3));
        let reg = GroupModule::regular(2, z3).unwrap();
        let dec = simple_decomposition(&reg).unwrap();
        let dims: Vec<usize> = dec.iter().map(|(s, m)| s.dim() * m).collect();
        assert_eq!(dims, vec![1, 2]);
        let w = &dec[1].0;
        assert_eq!(endomorphism_dim(w).unwrap(), 2);
        let pw = isotypic_projector(&reg, w).unwrap();
        assert_eq!(pw.coefficients, vec![0, 1, 1]);
        let pt = isotypic_projector(&reg, &dec[0].0).unwrap();
        assert_eq!(pw.matrix.add(&pt.matrix), Mat::identity(2, 3));
    }

    #[test]
    fn socle_of_regular_cyclic_p_group_is_the_norm_line() {
        let z3 = Arc::new(FiniteGroup::cyclic(3));
        let reg = GroupModule::regular(3, z3).unwrap();
        let soc = socle(&reg).unwrap();
        assert_eq!(soc.dim(), 1);
        assert!(soc.contains(&[1, 1, 1]));
        assert_eq!(socle_by_enumeration(&reg), soc);
    }

    #[test]
    fn socle_of_f3_s3_is_two_dimensional() {
        let reg = GroupModule::regular(3, s3()).unwrap();
        let soc = socle(&reg).unwrap();
        assert_eq!(soc.dim(), 2);
        assert_eq!(socle_by_enumeration(&reg), soc);
    }

    #[test]
    fn pim_of_sign_for_s3() {
        let g = s3();
        let ps = g.p_structure(3).unwrap();
        let simples = simple_modules(3, Arc::new(ps.complement.clone())).unwrap();
        let sign = simples.iter().find(|s| s.element_matrix(1).get(0, 0) == 2).unwrap();
        let pim = projective_indecomposable(g.clone(), sign).unwrap();
        assert_eq!(pim.dim(), 3);
        let soc = socle(&pim).unwrap();
        assert_eq!(soc.dim(), 1);
        let inflated = GroupModule::inflate(sign, g, &ps).unwrap();
        assert!(simples_isomorphic(&pim.submodule(&soc).unwrap(), &inflated).unwrap());
    }

    #[test]
    fn freeness() {
        let g = s3();
        let reg = GroupModule::regular(3, g.clone()).unwrap();
        let cert = is_free(&reg).unwrap();
        assert!(cert.free && cert.rank == 1);
        assert!(!is_free(&GroupModule::trivial(3, g, 6).unwrap()).unwrap().free);
        let z2 = Arc::new(FiniteGroup::cyclic(2));
        let m = GroupModule::regular(2, z2.clone()).unwrap().direct_sum(&GroupModule::trivial(2, z2, 1).unwrap()).unwrap();
        assert!(!is_free(&m).unwrap().free);
    }

    #[test]
    fn hull_of_trivial_line_in_free_s3_module() {
        let g = s3();
        let amb = GroupModule::regular(3, g.clone()).unwrap().power(2).unwrap();
        let triv = amb.fixed_space(g.generators());
        let line = Subspace::span(&Mat::from_rows(3, 12, &[triv.basis().row(0).to_vec()]));
        let hull = injective_hull(&amb, &line).unwrap();
        assert_eq!(hull.hull.dim(), 3);
        assert!(hull.image.contains_space(&line));
    }

    #[test]
    fn split_of_z2_mod3_example() {
        let z2 = Arc::new(FiniteGroup::cyclic(2));
        let amb = GroupModule::regular(3, z2).unwrap().power(2).unwrap();
        let e = Subspace::span_vecs(3, 4, &[vec![1, 1, 0, 0]]);
        let n = Subspace::span_vecs(3, 4, &[vec![0, 0, 1, 0], vec![0, 0, 0, 1]]);
        let out = free_summand_split(&amb, &e, &n).unwrap();
        assert_eq!(out.q_rank, 0);
        assert_eq!(out.m.dim(), 2);
        assert!(out.m.contains_space(&e));
    }
}
