use super::lifting::{dichotomy, induced, no_lift_certificate, Dichotomy, MembershipCertificate, NoLiftCertificate};
use super::ring::{quotient, subring, FiniteLocalRing, RingHom};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Why a surjection has no section: at some layer the peeled kernel line
/// sits inside `(I², pI)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoLiftReport {
    /// Zero-based layer of the tower where the containment showed up.
    pub layer: usize,
    pub certificate: MembershipCertificate,
    /// The group-theoretic certificate when it could be computed.
    pub group_certificate: Option<NoLiftCertificate>,
    pub note: Option<String>,
}

#[derive(Clone, Debug)]
pub enum TowerOutcome {
    Split {
        section: RingHom,
        /// Kernel basis `x_1, …, x_n` in `S`.
        witnesses: Vec<usize>,
        /// `R[x_1..x_n]/(x_i x_j, m_R x_i) → S`, bijective.
        iso: RingHom,
    },
    NoLift(NoLiftReport),
}

fn layer_report(layer: usize, q: &RingHom, certificate: MembershipCertificate) -> NoLiftReport {
    let (group_certificate, note) = match no_lift_certificate(q) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    NoLiftReport {
        layer,
        certificate,
        group_certificate,
        note,
    }
}

/// For `π: S ↠ R` with `m_S J = 0`: peels the kernel one line at a time
/// (greedy basis order), applying the dichotomy to each `S_k ↠ S_k/(x)`.
pub fn square_zero_tower(pi: &RingHom) -> Result<TowerOutcome> {
    let s = &pi.source;
    let j = pi.kernel();
    if !s.ideal_product(s.maximal_ideal(), &j).is_zero() {
        return Err(Error::Hypothesis("m_S J is not zero".into()));
    }
    tower_from(pi, 0)
}

fn tower_from(pi: &RingHom, layer: usize) -> Result<TowerOutcome> {
    let s = &pi.source;
    let j = pi.kernel();
    if j.is_zero() {
        let section = pi.inverse()?;
        let model = Arc::new(FiniteLocalRing::square_zero_extension(&pi.target, 0)?);
        let images: Vec<usize> = (0..model.rank()).map(|i| section.apply(pi.target.basis(i))).collect();
        let iso = RingHom::from_basis_images(model, s.clone(), &images)?;
        return Ok(TowerOutcome::Split {
            section,
            witnesses: vec![],
            iso,
        });
    }
    let x1 = s.additive_basis(&j)[0];
    let line = s.additive_closure(&[x1]);
    let q = quotient(s, &line)?;
    let section1 = match dichotomy(&q)? {
        Dichotomy::FrattiniContainment { certificate } => {
            return Ok(TowerOutcome::NoLift(layer_report(layer, &q, certificate)));
        }
        Dichotomy::SquareZeroExtension(w) => w.section,
    };
    let rest = induced(pi, &q)?;
    let (tau, lower) = match tower_from(&rest, layer + 1)? {
        TowerOutcome::Split { section, witnesses, .. } => (section, witnesses),
        no => return Ok(no),
    };
    let section = section1.after(&tau)?;
    let mut witnesses = vec![x1];
    witnesses.extend(lower.iter().map(|&w| section1.apply(w)));
    let r = &pi.target;
    let model = Arc::new(FiniteLocalRing::square_zero_extension(r, witnesses.len())?);
    let mut images: Vec<usize> = (0..r.rank()).map(|i| section.apply(r.basis(i))).collect();
    images.extend_from_slice(&witnesses);
    let iso = RingHom::from_basis_images(model, s.clone(), &images)?;
    if iso.source.size() != s.size() || !iso.is_injective() {
        return Err(Error::Invalid("tower model does not map bijectively".into()));
    }
    if !pi.after(&section)?.is_identity() {
        return Err(Error::Invalid("tower section does not compose to the identity".into()));
    }
    Ok(TowerOutcome::Split {
        section,
        witnesses,
        iso,
    })
}

#[derive(Clone, Debug)]
pub enum SplitOutcome {
    Section { section: RingHom, steps: Vec<String> },
    NoLift { report: NoLiftReport, steps: Vec<String> },
}

/// A section of `π: S ↠ R`, found by induction on the size of `S`: split
/// `S/m_S J ↠ R` as a square-zero tower, pull the image back to a subring
/// `S″ ⊂ S` whose kernel is `m_S J`, and recurse.
pub fn split_surjection(pi: &RingHom) -> Result<SplitOutcome> {
    let mut steps = Vec::new();
    let out = split_inner(pi, &mut steps)?;
    Ok(match out {
        Ok(section) => {
            if !pi.after(&section)?.is_identity() {
                return Err(Error::Invalid("section does not compose to the identity".into()));
            }
            SplitOutcome::Section { section, steps }
        }
        Err(report) => SplitOutcome::NoLift { report, steps },
    })
}

fn split_inner(pi: &RingHom, steps: &mut Vec<String>) -> Result<std::result::Result<RingHom, NoLiftReport>> {
    let s = &pi.source;
    if !pi.is_surjective() {
        return Err(Error::Invalid("the ring map is not surjective".into()));
    }
    let j = pi.kernel();
    if !j.is_subset_of(s.ideal()) {
        return Err(Error::Hypothesis("the kernel is not inside the distinguished ideal of the source".into()));
    }
    if j.is_zero() {
        steps.push(format!("|S| = {}: kernel is zero", s.size()));
        return Ok(Ok(pi.inverse()?));
    }
    let mj = s.ideal_product(s.maximal_ideal(), &j);
    if mj.is_zero() {
        steps.push(format!("|S| = {}: square-zero tower on |J| = {}", s.size(), j.len()));
        return Ok(match square_zero_tower(pi)? {
            TowerOutcome::Split { section, .. } => Ok(section),
            TowerOutcome::NoLift(r) => Err(r),
        });
    }
    steps.push(format!("|S| = {}: reduce by m·J of order {}", s.size(), mj.len()));
    let q = quotient(s, &mj)?;
    let reduced = induced(pi, &q)?;
    let tau = match square_zero_tower(&reduced)? {
        TowerOutcome::Split { section, .. } => section,
        TowerOutcome::NoLift(r) => return Ok(Err(r)),
    };
    let mut image = vec![false; q.target.size()];
    for &y in tau.map() {
        image[y] = true;
    }
    let members: Vec<usize> = (0..s.size()).filter(|&x| image[q.apply(x)]).collect();
    let members = s.additive_closure(&members);
    let inc = subring(s, &members)?;
    let lower = pi.after(&inc)?;
    match split_inner(&lower, steps)? {
        Ok(rho) => Ok(Ok(inc.after(&rho)?)),
        Err(r) => Ok(Err(r)),
    }
}

/// Composition length of the distinguished ideal `I_S`.
pub fn ring_length(s: &FiniteLocalRing) -> u32 {
    s.length()
}
