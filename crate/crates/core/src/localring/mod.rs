//! Finite local rings with residue field `F_p`, surjections between them,
//! and the lifting and splitting questions for 2×2 matrix groups over them.

mod congruence;
mod lifting;
mod ring;
mod splitting;

pub use congruence::{
    congruence_frattini, congruence_generators, congruence_in_frattini, congruence_subgroup, frattini_subgroup_identity,
    mat_det, mat_identity, mat_inverse, mat_mul, mat_order, FrattiniIdentityReport, Mat2, MatrixClosure,
    MAX_CONGRUENCE_ORDER,
};
pub use lifting::{
    cotangent_image_kernel, dichotomy, gamma_tilde, lift_search, membership_certificate, no_lift_certificate,
    subring_lift, CotangentFacts, Dichotomy, LiftOutcome, MatrixGroup, MembershipCertificate, NoLiftCertificate,
    SquareZeroWitness, MAX_LIFT_SPACE,
};
pub use ring::{generated_subring, quotient, subring, AddSubgroup, FiniteLocalRing, RingHom, RingJson, RingSpec, MAX_RING_SIZE};
pub use splitting::{ring_length, split_surjection, square_zero_tower, NoLiftReport, SplitOutcome, TowerOutcome};
