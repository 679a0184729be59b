use super::congruence::{
    congruence_frattini, congruence_generators, congruence_subgroup, mat_det, mat_identity, mat_mul, mat_order, Mat2,
};
use super::ring::{generated_subring, quotient, AddSubgroup, FiniteLocalRing, RingHom};
use crate::error::{guard, invalid, Error, Result};
use crate::groups::{FiniteGroup, MAX_TABLE_ORDER};
use crate::par;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::sync::Arc;

/// Cap on the number of generator-image combinations `lift_search` tries.
pub const MAX_LIFT_SPACE: u128 = 1 << 24;

/// An explicit expression of an element as a sum of generators of
/// `(I², pI)`: each term is a product `(u)(v)` of additive generators of
/// `I`, or `p(u)`, with its multiplicity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MembershipCertificate {
    pub element: String,
    pub terms: Vec<(String, u64)>,
}

/// Writes `x` as a sum of generators of `(I², pI)`, or `None` when `x` is
/// not in it.
pub fn membership_certificate(s: &FiniteLocalRing, ideal: &AddSubgroup, x: usize) -> Option<MembershipCertificate> {
    let basis = s.additive_basis(ideal);
    let mut gens: Vec<(usize, String)> = Vec::new();
    for (i, &u) in basis.iter().enumerate() {
        for &v in &basis[i..] {
            gens.push((s.mul(u, v), format!("({})({})", s.format(u), s.format(v))));
        }
        gens.push((s.scale(s.p() as u64, u), format!("p({})", s.format(u))));
    }
    gens.retain(|(g, _)| *g != 0);
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; s.size()];
    let mut seen = vec![false; s.size()];
    seen[0] = true;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(y) = queue.pop_front() {
        for (k, (g, _)) in gens.iter().enumerate() {
            let z = s.add(y, *g);
            if !seen[z] {
                seen[z] = true;
                parent[z] = Some((y, k));
                queue.push_back(z);
            }
        }
    }
    if !seen[x] {
        return None;
    }
    let mut counts = vec![0u64; gens.len()];
    let mut cur = x;
    while let Some((prev, k)) = parent[cur] {
        counts[k] += 1;
        cur = prev;
    }
    Some(MembershipCertificate {
        element: s.format(x),
        terms: gens
            .iter()
            .zip(counts)
            .filter(|(_, c)| *c > 0)
            .map(|((_, label), c)| (label.clone(), c))
            .collect(),
    })
}

fn checked_kernel(pi: &RingHom) -> Result<AddSubgroup> {
    if !pi.is_surjective() {
        return invalid("the ring map is not surjective");
    }
    let j = pi.kernel();
    if !j.is_subset_of(pi.source.ideal()) {
        return Err(Error::Hypothesis("the kernel is not inside the distinguished ideal of the source".into()));
    }
    Ok(j)
}

/// `S/K → R` induced by `π: S → R` and the projection `q: S → S/K`, for
/// `K ⊆ ker π`.
pub(crate) fn induced(pi: &RingHom, q: &RingHom) -> Result<RingHom> {
    let map = q
        .least_preimages()
        .into_iter()
        .map(|s| pi.apply(s.expect("quotient maps are onto")))
        .collect();
    RingHom::from_map(q.target.clone(), pi.target.clone(), map)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CotangentFacts {
    /// `x ∈ (m_S², p)`, i.e. `x` is zero in the cotangent space of `S`.
    pub zero_in_source: bool,
    /// The image of `x` is zero in the cotangent space of `R`; always true
    /// for kernel elements.
    pub zero_in_target: bool,
}

pub fn cotangent_image_kernel(pi: &RingHom, x: usize) -> Result<CotangentFacts> {
    if x >= pi.source.size() || pi.apply(x) != 0 {
        return invalid("element is not in the kernel");
    }
    Ok(CotangentFacts {
        zero_in_source: pi.source.cotangent_kernel().contains(x),
        zero_in_target: pi.target.cotangent_kernel().contains(pi.apply(x)),
    })
}

/// A splitting `S ≅ R ⊕ F_p x` with `x² = 0` and `m_R x = 0`.
#[derive(Clone, Debug)]
pub struct SquareZeroWitness {
    pub witness: usize,
    /// `σ: R → S` with `π ∘ σ = id`.
    pub section: RingHom,
    /// `R[x]/(x², m_R x) → S`, bijective.
    pub iso: RingHom,
}

/// For `π: S ↠ R` with kernel `J = F_p x`, `x ∉ (m_S², p)`: lifts a
/// cotangent basis of `R` to `S` (least-index preimages) and shows the
/// subring they generate maps isomorphically onto `R`.
pub fn subring_lift(pi: &RingHom) -> Result<SquareZeroWitness> {
    let j = checked_kernel(pi)?;
    let (s, r) = (&pi.source, &pi.target);
    if j.len() != s.p() as usize {
        return Err(Error::Hypothesis(format!("kernel has {} elements, expected {}", j.len(), s.p())));
    }
    let x = j.elements()[1];
    if s.cotangent_kernel().contains(x) {
        return Err(Error::Hypothesis(format!("kernel generator {} lies in (m², p)", s.format(x))));
    }
    let kr = r.cotangent_kernel();
    let mut chosen: Vec<usize> = Vec::new();
    let mut span = kr.clone();
    let kr_basis = r.additive_basis(&kr);
    for &g in r.maximal_ideal().elements() {
        if span.len() == r.maximal_ideal().len() {
            break;
        }
        if !span.contains(g) {
            chosen.push(g);
            let mut all = kr_basis.clone();
            all.extend_from_slice(&chosen);
            span = r.additive_closure(&all);
        }
    }
    let pre = pi.least_preimages();
    let lifts: Vec<usize> = chosen.iter().map(|&g| pre[g].expect("onto")).collect();
    let sub = generated_subring(s, &lifts);
    if sub.contains(x) || sub.len() != r.size() {
        return Err(Error::Hypothesis(format!(
            "lifted subring has {} elements and {} the kernel generator",
            sub.len(),
            if sub.contains(x) { "contains" } else { "misses" }
        )));
    }
    let mut section = vec![usize::MAX; r.size()];
    for &y in sub.elements() {
        section[pi.apply(y)] = y;
    }
    if section.contains(&usize::MAX) {
        return Err(Error::Hypothesis("lifted subring does not map onto the target".into()));
    }
    let section = RingHom::from_map(r.clone(), s.clone(), section)?;
    finish_square_zero(pi, section, x)
}

/// Checks `π ∘ σ = id` and builds the isomorphism from the model ring.
fn finish_square_zero(pi: &RingHom, section: RingHom, x: usize) -> Result<SquareZeroWitness> {
    if !pi.after(&section)?.is_identity() {
        return Err(Error::Invalid("section does not compose to the identity".into()));
    }
    let r = &pi.target;
    let model = Arc::new(FiniteLocalRing::square_zero_extension(r, 1)?);
    let mut images: Vec<usize> = (0..r.rank()).map(|i| section.apply(r.basis(i))).collect();
    images.push(x);
    let iso = RingHom::from_basis_images(model, pi.source.clone(), &images)?;
    if iso.source.size() != iso.target.size() || !iso.is_injective() {
        return Err(Error::Invalid("square-zero model does not map bijectively".into()));
    }
    Ok(SquareZeroWitness { witness: x, section, iso })
}

#[derive(Clone, Debug)]
pub enum Dichotomy {
    /// `J ⊆ (I_S², p I_S)`, with a certificate for the generator of `J`.
    FrattiniContainment { certificate: MembershipCertificate },
    SquareZeroExtension(SquareZeroWitness),
}

impl Dichotomy {
    pub fn branch(&self) -> &'static str {
        match self {
            Dichotomy::FrattiniContainment { .. } => "frattini",
            Dichotomy::SquareZeroExtension(_) => "square-zero",
        }
    }
}

/// For `π: S ↠ R` whose kernel `J` has `J/m_S J` one-dimensional, decides
/// which of the two cases holds. When `m_S J ≠ 0` the question is asked of
/// `S/m_S J ↠ R`; the witness then lives in that quotient.
pub fn dichotomy(pi: &RingHom) -> Result<Dichotomy> {
    let j = checked_kernel(pi)?;
    let s = &pi.source;
    if j.is_zero() {
        return Err(Error::Hypothesis("the kernel is zero".into()));
    }
    let mj = s.ideal_product(s.maximal_ideal(), &j);
    if j.len() / mj.len() != s.p() as usize {
        return Err(Error::Hypothesis(format!("J/mJ has {} elements, expected {}", j.len() / mj.len(), s.p())));
    }
    let pi = if mj.is_zero() {
        pi.clone()
    } else {
        let q = quotient(s, &mj)?;
        induced(pi, &q)?
    };
    let s = &pi.source;
    let j = pi.kernel();
    let x = j.elements()[1];
    let k = s.frattini_ideal(s.ideal());
    if let Some(certificate) = membership_certificate(s, s.ideal(), x) {
        debug_assert!(j.is_subset_of(&k));
        return Ok(Dichotomy::FrattiniContainment { certificate });
    }
    subring_lift(&pi).map(Dichotomy::SquareZeroExtension)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoLiftCertificate {
    pub gamma_target_order: u128,
    pub gamma_source_order: u128,
    pub frattini_order: u64,
    pub kernel_in_frattini: bool,
}

/// For `J ⊆ (I_S², p I_S)` with `Γ_J ⊆ Φ(Γ_S)` checked explicitly: any
/// lift would map `Γ_R` onto `Γ_S`, impossible since `|Γ_R| < |Γ_S|`.
pub fn no_lift_certificate(pi: &RingHom) -> Result<NoLiftCertificate> {
    let j = checked_kernel(pi)?;
    let (s, r) = (&pi.source, &pi.target);
    if j.is_zero() {
        return Err(Error::Hypothesis("the kernel is zero".into()));
    }
    if !j.is_subset_of(&s.frattini_ideal(s.ideal())) {
        return Err(Error::Hypothesis("J is not contained in (I², pI)".into()));
    }
    let image: HashSet<usize> = s.ideal().elements().iter().map(|&y| pi.apply(y)).collect();
    if image.len() != r.ideal().len() || !r.ideal().elements().iter().all(|y| image.contains(y)) {
        return Err(Error::Hypothesis("the source ideal does not map onto the target ideal".into()));
    }
    let phi = congruence_frattini(s, s.ideal())?;
    let inside = congruence_generators(s, &j).iter().all(|g| phi.contains(g));
    if !inside {
        return Err(Error::Hypothesis(format!(
            "Γ_J is not inside the Frattini subgroup (order {}) although J ⊆ (I², pI)",
            phi.len()
        )));
    }
    let gamma_target_order = (r.ideal().len() as u128).pow(4);
    let gamma_source_order = (s.ideal().len() as u128).pow(4);
    debug_assert!(gamma_target_order < gamma_source_order);
    Ok(NoLiftCertificate {
        gamma_target_order,
        gamma_source_order,
        frattini_order: phi.len() as u64,
        kernel_in_frattini: true,
    })
}

/// A finite subgroup of `GL₂(R)` with its multiplication table.
#[derive(Clone, Debug)]
pub struct MatrixGroup {
    pub ring: Arc<FiniteLocalRing>,
    pub group: FiniteGroup,
    pub matrices: Vec<Mat2>,
    /// Order of the prime-to-p part the group was built from.
    pub phi_order: usize,
}

impl MatrixGroup {
    pub fn generator_matrices(&self) -> Vec<Mat2> {
        self.group.generators().iter().map(|&g| self.matrices[g]).collect()
    }
}

/// The group generated by a faithful image of `Φ̃` (order prime to `p`) and
/// `Γ_R = 1 + M₂(I_R)`. Its order must be `|I_R|⁴ · |Φ̃|`.
pub fn gamma_tilde(r: Arc<FiniteLocalRing>, phi: &FiniteGroup, embedding: &[Mat2]) -> Result<MatrixGroup> {
    if embedding.len() != phi.generators().len() {
        return invalid("one matrix per generator of Φ̃ is required");
    }
    if phi.order().is_multiple_of(r.p() as usize) {
        return Err(Error::Hypothesis(format!("|Φ̃| = {} is divisible by p", phi.order())));
    }
    if embedding.iter().any(|m| m.iter().any(|&x| x >= r.size()) || !r.is_unit(mat_det(&r, m))) {
        return invalid("embedding matrices must be invertible over the ring");
    }
    let id = mat_identity(&r);
    let images = phi
        .extend_generator_map(embedding, id, |a, b| mat_mul(&r, a, b))
        .ok_or_else(|| Error::Invalid("embedding does not respect the relations of Φ̃".into()))?;
    if images.iter().collect::<HashSet<_>>().len() != phi.order() {
        return invalid("embedding of Φ̃ is not faithful");
    }
    let mut gens = embedding.to_vec();
    gens.extend(congruence_generators(&r, r.ideal()));
    let expected = (r.ideal().len() as u128).pow(4) * phi.order() as u128;
    guard("Γ̃ order", expected, MAX_TABLE_ORDER as u128)?;
    let (group, matrices) = FiniteGroup::from_closure(id, &gens, |a, b| mat_mul(&r, a, b), MAX_TABLE_ORDER)?;
    if group.order() as u128 != expected {
        return invalid(format!("generated group has order {}, expected {expected}", group.order()));
    }
    Ok(MatrixGroup {
        ring: r,
        group,
        matrices,
        phi_order: phi.order(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LiftOutcome {
    Lift {
        generator_images: Vec<Mat2>,
        /// Image of every group element, indexed like the group.
        images: Vec<Mat2>,
    },
    NoLift {
        /// `|Γ_J|^k` for `k` generators: every correction was accounted for.
        space: u128,
        /// Corrections per generator that survived the element-order filter.
        candidates: Vec<usize>,
    },
}

/// Searches for a homomorphism `Γ̃ → GL₂(S)` reducing to `base` (given on
/// generators) under `π: S ↠ R`. Each generator image is a least-index
/// preimage times an element of `Γ_J`; combinations are tried in
/// lexicographic order, first generator most significant, and the least
/// consistent one is returned.
pub fn lift_search(gt: &MatrixGroup, pi: &RingHom, base: &[Mat2]) -> Result<LiftOutcome> {
    let (s, r) = (&pi.source, &pi.target);
    if !pi.is_surjective() {
        return invalid("the ring map is not surjective");
    }
    let g = &gt.group;
    let k = g.generators().len();
    if base.len() != k {
        return invalid("one base matrix per generator is required");
    }
    g.extend_generator_map(base, mat_identity(r), |a, b| mat_mul(r, a, b))
        .ok_or_else(|| Error::Invalid("base representation is not a homomorphism".into()))?;
    let j = pi.kernel();
    let per = (j.len() as u128).pow(4);
    guard("lift search space", per.saturating_pow(k as u32), MAX_LIFT_SPACE)?;
    let gj = congruence_subgroup(s, &j)?;
    let pre = pi.least_preimages();
    let candidates: Vec<Vec<Mat2>> = g
        .generators()
        .iter()
        .zip(base)
        .map(|(&gen, b)| {
            let lift = b.map(|y| pre[y].expect("onto"));
            let order = g.element_order(gen);
            gj.elements()
                .iter()
                .map(|c| mat_mul(s, &lift, c))
                .filter(|m| mat_order(s, m, order) == Some(order))
                .collect()
        })
        .collect();
    let counts: Vec<usize> = candidates.iter().map(Vec::len).collect();
    let space = per.pow(k as u32);
    if counts.contains(&0) || k == 0 {
        if k == 0 {
            let images = vec![mat_identity(s); g.order()];
            return Ok(LiftOutcome::Lift {
                generator_images: vec![],
                images,
            });
        }
        return Ok(LiftOutcome::NoLift {
            space,
            candidates: counts,
        });
    }
    let id = mat_identity(s);
    let found = par::min_success(counts[0], |first| {
        let mut idx = vec![0usize; k];
        idx[0] = first;
        loop {
            let images: Vec<Mat2> = (0..k).map(|i| candidates[i][idx[i]]).collect();
            if let Some(all) = g.extend_generator_map(&images, id, |a, b| mat_mul(s, a, b)) {
                return Some((images, all));
            }
            let mut pos = k - 1;
            loop {
                if pos == 0 {
                    return None;
                }
                idx[pos] += 1;
                if idx[pos] < counts[pos] {
                    break;
                }
                idx[pos] = 0;
                pos -= 1;
            }
        }
    });
    Ok(match found {
        Some((_, (generator_images, images))) => LiftOutcome::Lift {
            generator_images,
            images,
        },
        None => LiftOutcome::NoLift {
            space,
            candidates: counts,
        },
    })
}
