//! Rank-2 subgroups of elementary abelian groups, congruence plans for a
//! generator pair, exponent tables over a free Φ-set of labels, and the
//! second-exterior-power surjectivity criterion.

use crate::error::{guard, invalid, Error, Result};
use crate::fp;
use crate::groups::FiniteGroup;
use crate::linalg::{Mat, Subspace};
use crate::modrep::IsotypicProjector;
use crate::par;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Largest ambient size `p^m` accepted by the enumeration.
pub const MAX_ENUMERATED_AMBIENT: u128 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementaryAbelian {
    pub p: u32,
    pub rank: usize,
}

impl ElementaryAbelian {
    pub fn new(p: u32, rank: usize) -> Result<Self> {
        if !fp::is_prime(p as u64) {
            return invalid(format!("{p} is not prime"));
        }
        if rank == 0 {
            return invalid("rank must be positive");
        }
        Ok(ElementaryAbelian { p, rank })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupFamily {
    pub ambient: ElementaryAbelian,
    /// Generator rows of each member.
    pub members: Vec<Mat>,
}

impl SubgroupFamily {
    pub fn new(ambient: ElementaryAbelian, members: Vec<Mat>) -> Result<Self> {
        for (k, m) in members.iter().enumerate() {
            if m.p() != ambient.p || m.cols() != ambient.rank {
                return invalid(format!("member {k} does not live in the ambient group"));
            }
            if m.rank() != m.rows() {
                return invalid(format!("member {k} has dependent generators"));
            }
        }
        Ok(SubgroupFamily { ambient, members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member_space(&self, k: usize) -> Subspace {
        Subspace::span(&self.members[k])
    }

    /// Applies `v ↦ v·g` to every generator.
    pub fn transform(&self, g: &Mat) -> Result<Self> {
        if !g.is_invertible() || g.rows() != self.ambient.rank {
            return invalid("change of basis must be invertible on the ambient group");
        }
        Self::new(self.ambient, self.members.iter().map(|m| m.mul(g)).collect())
    }
}

/// `T = (p^{2n} − 1)(p^{2n} − p) / ((p² − 1)(p² − p))`, the number of
/// 2-dimensional subspaces of F_p^{2n}.
pub fn count_rank2_subgroups(p: u64, n: u32) -> Result<u128> {
    if !fp::is_prime(p) {
        return invalid(format!("{p} is not prime"));
    }
    let overflow = || Error::Guard {
        what: "exact subspace count".into(),
        needed: u128::MAX,
        limit: u128::MAX,
    };
    let p = p as u128;
    let q = p.checked_pow(2 * n).ok_or_else(overflow)?;
    let num = (q - 1).checked_mul(q - p).ok_or_else(overflow)?;
    let den = (p * p - 1) * (p * p - p);
    Ok(num / den)
}

/// All 2-dimensional subspaces of F_p^m in reduced echelon form, sorted
/// lexicographically by their flattened bases.
pub fn enumerate_rank2_in(p: u32, m: usize) -> Result<SubgroupFamily> {
    let ambient = ElementaryAbelian::new(p, m)?;
    guard("ambient group size", (p as u128).saturating_pow(m as u32), MAX_ENUMERATED_AMBIENT)?;
    let pivots: Vec<(usize, usize)> = (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect();
    let chunks = par::map(&pivots, |&(c1, c2)| {
        // Free entries: row 0 after c1 except c2, row 1 after c2.
        let free: Vec<(usize, usize)> = (c1 + 1..m)
            .filter(|&j| j != c2)
            .map(|j| (0, j))
            .chain((c2 + 1..m).map(|j| (1, j)))
            .collect();
        let total = (p as usize).pow(free.len() as u32);
        (0..total)
            .map(|code| {
                let mut mat = Mat::zeros(p, 2, m);
                mat.set(0, c1, 1);
                mat.set(1, c2, 1);
                let mut r = code;
                for &(i, j) in &free {
                    mat.set(i, j, (r % p as usize) as u32);
                    r /= p as usize;
                }
                mat
            })
            .collect::<Vec<_>>()
    });
    let mut members: Vec<Mat> = chunks.into_iter().flatten().collect();
    members.sort_by(|a, b| a.lex_cmp(b));
    Ok(SubgroupFamily { ambient, members })
}

/// Rank-2 subgroups of `(Z/p)^{2n}`.
pub fn enumerate_rank2_subgroups(p: u32, n: usize) -> Result<SubgroupFamily> {
    enumerate_rank2_in(p, 2 * n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseTag {
    #[serde(rename = "1a")]
    OneA,
    #[serde(rename = "1b")]
    OneB,
    #[serde(rename = "2a")]
    TwoA,
    #[serde(rename = "2b")]
    TwoB,
}

impl CaseTag {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::OneA => "1a",
            CaseTag::OneB => "1b",
            CaseTag::TwoA => "2a",
            CaseTag::TwoB => "2b",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CongruencePlan {
    pub ell: usize,
    pub case_tag: CaseTag,
    /// 1-based.
    pub i: usize,
    /// 1-based.
    pub j: usize,
    pub c: Vec<u32>,
    pub d: Vec<u32>,
    /// Exponent of the non-power symbol in each `A_k`.
    pub a_exp: Vec<u32>,
    /// Exponent of the non-power symbol in each `B_k`.
    pub b_exp: Vec<u32>,
    pub u: Vec<u32>,
    pub w: Vec<u32>,
}

impl CongruencePlan {
    /// `(a_exp, b_exp)` concatenated: the direction the plan forces next to `u`.
    pub fn direction(&self) -> Vec<u32> {
        self.a_exp.iter().chain(&self.b_exp).copied().collect()
    }
}

/// Case analysis for a pair `u = (a, b)`, `w = (x, y)` in F_p^{2n}.
///
/// Case 1 uses the least `i` with `a_i ≠ 0` and sets `(c, d) = a_i w − x_i u`;
/// case 2 uses the least `i` with `b_i ≠ 0` and `(c, d) = b_i w − y_i u`.
/// The subcase pivot is the least admissible `j`.
pub fn congruence_plan(p: u32, u: &[u32], w: &[u32], ell: usize) -> Result<CongruencePlan> {
    if u.len() != w.len() || !u.len().is_multiple_of(2) || u.is_empty() {
        return invalid("vectors must have the same even length");
    }
    let u: Vec<u32> = u.iter().map(|&x| x % p).collect();
    let w: Vec<u32> = w.iter().map(|&x| x % p).collect();
    if Mat::from_rows(p, u.len(), &[u.clone(), w.clone()]).rank() < 2 {
        return invalid("generator pair is dependent or zero");
    }
    let n = u.len() / 2;
    let (a, b) = u.split_at(n);
    let (x, y) = w.split_at(n);
    let comb = |s: u32, v: u32, t: u32, z: u32| fp::sub(fp::mul(s, v, p), fp::mul(t, z, p), p);

    let (first_case, i) = match a.iter().position(|&v| v != 0) {
        Some(i) => (true, i),
        None => (false, b.iter().position(|&v| v != 0).expect("u is nonzero")),
    };
    let (c, d): (Vec<u32>, Vec<u32>) = if first_case {
        (
            (0..n).map(|j| if j == i { 0 } else { comb(x[j], a[i], x[i], a[j]) }).collect(),
            (0..n).map(|j| comb(y[j], a[i], x[i], b[j])).collect(),
        )
    } else {
        (
            (0..n).map(|j| comb(x[j], b[i], y[i], a[j])).collect(),
            (0..n).map(|j| if j == i { 0 } else { comb(y[j], b[i], y[i], b[j]) }).collect(),
        )
    };
    let off_pivot = |v: &[u32]| (0..n).find(|&j| j != i && v[j] != 0);
    let any_pivot = |v: &[u32]| (0..n).find(|&j| v[j] != 0);
    let (case_tag, j, pivot) = if first_case {
        match off_pivot(&c) {
            Some(j) => (CaseTag::OneA, j, c[j]),
            None => {
                let j = any_pivot(&d).expect("independent pair leaves a nonzero entry");
                (CaseTag::OneB, j, d[j])
            }
        }
    } else {
        match off_pivot(&d) {
            Some(j) => (CaseTag::TwoA, j, d[j]),
            None => {
                let j = any_pivot(&c).expect("independent pair leaves a nonzero entry");
                (CaseTag::TwoB, j, c[j])
            }
        }
    };
    // Each displayed table reduces to (c, d) scaled by the pivot inverse: the
    // special rows are exactly where that quotient is 0 or 1.
    let inv = fp::inv(pivot, p);
    let a_exp = c.iter().map(|&v| fp::mul(v, inv, p)).collect();
    let b_exp = d.iter().map(|&v| fp::mul(v, inv, p)).collect();
    Ok(CongruencePlan {
        ell,
        case_tag,
        i: i + 1,
        j: j + 1,
        c,
        d,
        a_exp,
        b_exp,
        u,
        w,
    })
}

/// One plan per member, using the member's two basis rows as `(u, w)`.
pub fn plans_for_family(family: &SubgroupFamily) -> Result<Vec<CongruencePlan>> {
    let p = family.ambient.p;
    let plans = par::map_range(family.len(), |k| {
        let m = &family.members[k];
        if m.rows() != 2 {
            return invalid(format!("member {k} is not of rank 2"));
        }
        congruence_plan(p, m.row(0), m.row(1), k)
    });
    plans.into_iter().collect()
}

/// Exponent tables `s[g][ℓ]`, `t[g][ℓ]` over Φ × labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NuExponents {
    pub p: u32,
    pub s: Vec<Vec<u32>>,
    pub t: Vec<Vec<u32>>,
    /// The elements `g_1 … g_n` of Φ.
    pub g_list: Vec<usize>,
}

/// Places `(a_1..a_n)` at `g_k⁻¹(λ_ℓ)` in ν₁ and `(b_1..b_n)` in ν₂ for each
/// plan `ℓ`.
pub fn assemble_nu_exponents(plans: &[CongruencePlan], family: &SubgroupFamily, phi: &FiniteGroup, g_list: &[usize]) -> Result<NuExponents> {
    let p = family.ambient.p;
    let n = family.ambient.rank / 2;
    if plans.len() != family.len() {
        return invalid("one plan per family member is required");
    }
    if g_list.len() != n || g_list.iter().any(|&g| g >= phi.order()) {
        return invalid(format!("need {n} elements of Φ"));
    }
    let mut slots: Vec<usize> = g_list.iter().map(|&g| phi.inv(g)).collect();
    slots.sort_unstable();
    slots.dedup();
    if slots.len() != n {
        return invalid("labels collide: the chosen elements of Φ are not distinct");
    }
    let labels = family.len();
    let mut s = vec![vec![0u32; labels]; phi.order()];
    let mut t = vec![vec![0u32; labels]; phi.order()];
    for (ell, plan) in plans.iter().enumerate() {
        let span = family.member_space(ell);
        if !span.contains(&plan.u) || !span.contains(&plan.w) {
            return invalid(format!("plan {ell} does not match its family member"));
        }
        for (k, &g) in g_list.iter().enumerate() {
            let slot = phi.inv(g);
            s[slot][ell] = plan.u[k];
            t[slot][ell] = plan.u[n + k];
        }
    }
    Ok(NuExponents {
        p,
        s,
        t,
        g_list: g_list.to_vec(),
    })
}

/// Exponent pattern `(a, b)` read at `g_k⁻¹·h (λ_ℓ)`.
pub fn readback(nu: &NuExponents, phi: &FiniteGroup, h: usize, ell: usize) -> Vec<u32> {
    let n = nu.g_list.len();
    let mut out = vec![0u32; 2 * n];
    for (k, &g) in nu.g_list.iter().enumerate() {
        let slot = phi.mul(phi.inv(g), h);
        out[k] = nu.s[slot][ell];
        out[n + k] = nu.t[slot][ell];
    }
    out
}

/// Applies `Σ_h n_h h` to a table: `(h·ν)[x] = ν[h⁻¹x]`.
fn apply_group_element_sum(table: &[Vec<u32>], coeffs: &[u32], phi: &FiniteGroup, p: u32) -> Vec<Vec<u32>> {
    let labels = table.first().map_or(0, |r| r.len());
    let mut out = vec![vec![0u32; labels]; phi.order()];
    for (h, &nh) in coeffs.iter().enumerate() {
        if nh == 0 {
            continue;
        }
        let hinv = phi.inv(h);
        for (x, row) in out.iter_mut().enumerate() {
            let src = &table[phi.mul(hinv, x)];
            for (o, &v) in row.iter_mut().zip(src) {
                *o = fp::add(*o, fp::mul(nh, v, p), p);
            }
        }
    }
    out
}

/// After projecting ν₁ and ν₂, does every plan's pattern `(a, b)` still occur
/// at some conjugate label?
pub fn verify_projection_stability(nu: &NuExponents, projector: &IsotypicProjector, phi: &FiniteGroup, plans: &[CongruencePlan]) -> Result<bool> {
    if projector.coefficients.len() != phi.order() {
        return invalid("projector coefficients are not indexed by Φ");
    }
    let p = nu.p;
    let projected = NuExponents {
        p,
        s: apply_group_element_sum(&nu.s, &projector.coefficients, phi, p),
        t: apply_group_element_sum(&nu.t, &projector.coefficients, phi, p),
        g_list: nu.g_list.clone(),
    };
    let labels = nu.s.first().map_or(0, |r| r.len());
    Ok(plans.iter().all(|plan| {
        (0..phi.order()).any(|h| (0..labels).any(|ell| readback(&projected, phi, h, ell) == plan.u))
    }))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WedgeReport {
    pub surjective: bool,
    pub rank: usize,
    pub required: usize,
}

/// Coordinates of `u ∧ v` in the basis `e_i ∧ e_j`, `i < j`.
pub fn wedge(p: u32, u: &[u32], v: &[u32]) -> Vec<u32> {
    let m = u.len();
    let mut out = Vec::with_capacity(m * (m.saturating_sub(1)) / 2);
    for i in 0..m {
        for j in i + 1..m {
            out.push(fp::sub(fp::mul(u[i], v[j], p), fp::mul(u[j], v[i], p), p));
        }
    }
    out
}

/// Rank of `⊕ Λ²(D) → Λ²(ambient)` against `C(m, 2)`.
pub fn wedge_surjectivity(family: &SubgroupFamily) -> WedgeReport {
    let p = family.ambient.p;
    let m = family.ambient.rank;
    let required = m * (m - 1) / 2;
    let mut rows = Vec::new();
    for mem in &family.members {
        for a in 0..mem.rows() {
            for b in a + 1..mem.rows() {
                rows.push(wedge(p, mem.row(a), mem.row(b)));
            }
        }
    }
    let rank = if required == 0 {
        0
    } else {
        Mat::from_rows(p, required, &rows).rank()
    };
    WedgeReport {
        surjective: rank == required,
        rank,
        required,
    }
}

/// 0-based member index of `⟨τ_i, τ_{i'}⟩` (1-based `i < i'`) in the order
/// `A_{k+j} = ⟨τ_i, τ_{i+j}⟩`, `k = 2n(i−1) − (i−1)i/2`.
pub fn pair_member_index(n: usize, i: usize, i2: usize) -> usize {
    debug_assert!(1 <= i && i < i2 && i2 <= 2 * n);
    let k = 2 * n * (i - 1) - (i - 1) * i / 2;
    k + (i2 - i) - 1
}

/// The `n(2n−1)` coordinate-pair subgroups in the order above.
pub fn coordinate_pair_family(p: u32, n: usize) -> Result<SubgroupFamily> {
    let m = 2 * n;
    let ambient = ElementaryAbelian::new(p, m)?;
    let mut members = Vec::new();
    for i in 0..m {
        for i2 in i + 1..m {
            let mut g = Mat::zeros(p, 2, m);
            g.set(0, i, 1);
            g.set(1, i2, 1);
            members.push(g);
        }
    }
    SubgroupFamily::new(ambient, members)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpanningBasis {
    /// `x_1 … x_{2n}`.
    pub basis: Vec<Vec<u32>>,
    /// `(i, j, member)`: `x_i` and `x_j` both lie in that member (1-based `i`, `j`).
    pub certificates: Vec<(usize, usize, usize)>,
}

/// Intersects the members containing each `τ_i` to recover a basis and the
/// assignment of every `x_i ∧ x_j` to a member.
pub fn select_spanning_basis(family: &SubgroupFamily) -> Result<SpanningBasis> {
    let p = family.ambient.p;
    let m = family.ambient.rank;
    if !m.is_multiple_of(2) {
        return invalid("ambient rank must be even");
    }
    let n = m / 2;
    let needed = n * (2 * n - 1);
    if family.len() < needed {
        return Err(Error::Hypothesis(format!(
            "family has {} members, the pair subgroups need {needed}",
            family.len()
        )));
    }
    let basis: Vec<Vec<u32>> = if n == 1 {
        // A single member: both intersections are the whole member.
        let a1 = family.member_space(0);
        if a1.dim() != 2 {
            return Err(Error::Hypothesis("the only pair subgroup is not of rank 2".into()));
        }
        a1.basis().row_vecs()
    } else {
        let mut out = Vec::new();
        for i in 1..=m {
            let mut b = Subspace::full(p, m);
            for other in (1..=m).filter(|&o| o != i) {
                let idx = pair_member_index(n, i.min(other), i.max(other));
                b = b.intersect(&family.member_space(idx));
            }
            if b.dim() != 1 {
                return Err(Error::Hypothesis(format!(
                    "intersection B_{i} has dimension {} instead of 1",
                    b.dim()
                )));
            }
            out.push(b.basis().row(0).to_vec());
        }
        out
    };
    if Mat::from_rows(p, m, &basis).rank() != m {
        return Err(Error::Hypothesis("the recovered vectors do not form a basis".into()));
    }
    let mut certificates = Vec::new();
    for i in 1..=m {
        for j in i + 1..=m {
            let idx = if n == 1 { 0 } else { pair_member_index(n, i, j) };
            let space = family.member_space(idx);
            if !space.contains(&basis[i - 1]) || !space.contains(&basis[j - 1]) {
                return Err(Error::Hypothesis(format!("x_{i} ∧ x_{j} is not carried by member {idx}")));
            }
            certificates.push((i, j, idx));
        }
    }
    Ok(SpanningBasis { basis, certificates })
}

pub fn random_invertible<R: Rng>(p: u32, m: usize, rng: &mut R) -> Mat {
    loop {
        let data = (0..m * m).map(|_| rng.gen_range(0..p)).collect();
        let g = Mat::from_flat(p, m, m, data);
        if g.is_invertible() {
            return g;
        }
    }
}

/// Coordinate-pair family moved by a random change of basis, with up to
/// `extra` random rank-2 members appended.
pub fn random_structured_family<R: Rng>(p: u32, n: usize, extra: usize, rng: &mut R) -> Result<SubgroupFamily> {
    let base = coordinate_pair_family(p, n)?;
    let g = random_invertible(p, 2 * n, rng);
    let mut fam = base.transform(&g)?;
    let extra = rng.gen_range(0..=extra);
    for _ in 0..extra {
        fam.members.push(random_member(p, 2 * n, 2, rng));
    }
    Ok(fam)
}

fn random_member<R: Rng>(p: u32, m: usize, rank: usize, rng: &mut R) -> Mat {
    loop {
        let data = (0..rank * m).map(|_| rng.gen_range(0..p)).collect();
        let g = Mat::from_flat(p, rank, m, data);
        if g.rank() == rank {
            return g;
        }
    }
}

/// `count` random members of rank 1 or 2 in F_p^m.
pub fn random_family<R: Rng>(p: u32, m: usize, count: usize, rng: &mut R) -> Result<SubgroupFamily> {
    let members = (0..count)
        .map(|_| {
            let rank = if m >= 2 { rng.gen_range(1..=2) } else { 1 };
            random_member(p, m, rank, rng)
        })
        .collect();
    SubgroupFamily::new(ElementaryAbelian::new(p, m)?, members)
}
