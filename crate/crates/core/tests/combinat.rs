use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;
use towerforge::combinat::*;
use towerforge::groups::FiniteGroup;
use towerforge::linalg::Mat;
use towerforge::modrep::{isotypic_projector, simple_modules, GroupModule};

fn vectors(p: u32, m: usize) -> Vec<Vec<u32>> {
    (0..(p as usize).pow(m as u32))
        .map(|mut code| {
            (0..m)
                .map(|_| {
                    let c = (code % p as usize) as u32;
                    code /= p as usize;
                    c
                })
                .collect()
        })
        .collect()
}

fn span_set(p: u32, u: &[u32], v: &[u32]) -> BTreeSet<Vec<u32>> {
    let mut out = BTreeSet::new();
    for s in 0..p {
        for t in 0..p {
            out.insert(u.iter().zip(v).map(|(&a, &b)| (s * a + t * b) % p).collect());
        }
    }
    out
}

/// Distinct planes spanned by all pairs of vectors.
fn planes_by_pairs(p: u32, m: usize) -> HashSet<BTreeSet<Vec<u32>>> {
    let vs = vectors(p, m);
    let mut out = HashSet::new();
    for u in &vs {
        for v in &vs {
            let s = span_set(p, u, v);
            if s.len() == (p * p) as usize {
                out.insert(s);
            }
        }
    }
    out
}

#[test]
fn count_matches_pair_enumeration() {
    for (p, n) in [(2u32, 1usize), (2, 2), (3, 1), (3, 2), (5, 1)] {
        let oracle = planes_by_pairs(p, 2 * n).len() as u128;
        assert_eq!(count_rank2_subgroups(p as u64, n as u32).unwrap(), oracle, "p={p} n={n}");
        let fam = enumerate_rank2_subgroups(p, n).unwrap();
        assert_eq!(fam.len() as u128, oracle);
        let distinct: HashSet<BTreeSet<Vec<u32>>> =
            fam.members.iter().map(|m| span_set(p, m.row(0), m.row(1))).collect();
        assert_eq!(distinct.len(), fam.len());
    }
    assert_eq!(count_rank2_subgroups(2, 2).unwrap(), 35);
}

#[test]
fn count_bounds_pair_family() {
    for p in [2u64, 3, 5, 7] {
        for n in 1..=4u32 {
            let t = count_rank2_subgroups(p, n).unwrap();
            assert!(t >= (n * (2 * n - 1)) as u128);
        }
    }
}

/// Rank over F_p by plain Gaussian elimination.
fn rank(p: u32, rows: &[Vec<u32>]) -> usize {
    let mut rows: Vec<Vec<u32>> = rows.to_vec();
    let cols = rows.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..rows.len()).find(|&i| rows[i][c] != 0) else {
            continue;
        };
        rows.swap(r, piv);
        let inv = (1..p).find(|&x| x * rows[r][c] % p == 1).unwrap();
        for x in rows[r].iter_mut() {
            *x = *x * inv % p;
        }
        for i in 0..rows.len() {
            if i != r && rows[i][c] != 0 {
                let f = rows[i][c];
                for k in 0..cols {
                    rows[i][k] = (rows[i][k] + p * p - f * rows[r][k] % p) % p;
                }
            }
        }
        r += 1;
    }
    r
}

fn wedge_oracle_rank(fam: &SubgroupFamily) -> usize {
    let p = fam.ambient.p;
    let m = fam.ambient.rank;
    let mut rows = Vec::new();
    for mem in &fam.members {
        for a in 0..mem.rows() {
            for b in a + 1..mem.rows() {
                let (u, v) = (mem.row(a), mem.row(b));
                let mut w = Vec::new();
                for i in 0..m {
                    for j in i + 1..m {
                        w.push((u[i] * v[j] % p + p - u[j] * v[i] % p) % p);
                    }
                }
                rows.push(w);
            }
        }
    }
    rank(p, &rows)
}

#[test]
fn coordinate_family_is_surjective() {
    for p in [2u32, 3] {
        for n in 1..=3 {
            let fam = coordinate_pair_family(p, n).unwrap();
            let rep = wedge_surjectivity(&fam);
            assert_eq!(rep.rank, n * (2 * n - 1));
            assert!(rep.surjective);
            assert_eq!(wedge_oracle_rank(&fam), rep.rank);
            let sb = select_spanning_basis(&fam).unwrap();
            assert_eq!(sb.certificates.len(), n * (2 * n - 1));
        }
    }
    let rep = wedge_surjectivity(&coordinate_pair_family(2, 2).unwrap());
    assert_eq!((rep.rank, rep.required), (6, 6));
}

#[test]
fn cyclic_member_breaks_surjectivity() {
    let mut fam = coordinate_pair_family(2, 2).unwrap();
    fam.members[0] = Mat::from_rows(2, 4, &[fam.members[0].row(0).to_vec()]);
    let rep = wedge_surjectivity(&fam);
    assert!(!rep.surjective);
    assert_eq!(rep.rank, 5);
    assert!(select_spanning_basis(&fam).is_err());
}

#[test]
fn random_families_agree_with_rank_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..60 {
        let p = [2u32, 3, 5][trial % 3];
        let n = 1 + trial % 3;
        let fam = if trial % 2 == 0 {
            random_structured_family(p, n, 2, &mut rng).unwrap()
        } else {
            random_family(p, 2 * n, n * (2 * n - 1) + 1, &mut rng).unwrap()
        };
        let rep = wedge_surjectivity(&fam);
        assert_eq!(rep.rank, wedge_oracle_rank(&fam));
        if let Ok(sb) = select_spanning_basis(&fam) {
            // Certificates put every x_i ∧ x_j inside a member, so Λ² is hit.
            for &(i, j, k) in &sb.certificates {
                let space = fam.member_space(k);
                assert!(space.contains(&sb.basis[i - 1]) && space.contains(&sb.basis[j - 1]));
            }
            assert!(rep.surjective);
        }
        if trial % 2 == 0 {
            assert!(select_spanning_basis(&fam).is_ok());
        }
    }
}

#[test]
fn projection_keeps_patterns_for_cyclic_three() {
    let phi = Arc::new(FiniteGroup::cyclic(3));
    let fam = coordinate_pair_family(2, 1).unwrap();
    let plans = plans_for_family(&fam).unwrap();
    let nu = assemble_nu_exponents(&plans, &fam, &phi, &[0]).unwrap();
    assert_eq!(readback(&nu, &phi, 0, 0), plans[0].u);
    assert_eq!(readback(&nu, &phi, 1, 0), vec![0, 0]);
    let reg = GroupModule::regular(2, phi.clone()).unwrap();
    let simples = simple_modules(2, phi.clone()).unwrap();
    // Over F_2 the trivial projector is 1 + g + g² and the other is g + g²;
    // each moves the single nonzero slot onto some other label.
    for w in &simples {
        let proj = isotypic_projector(&reg, w).unwrap();
        assert!(verify_projection_stability(&nu, &proj, &phi, &plans).unwrap());
    }
}

fn pair_strategy() -> impl Strategy<Value = (u32, Vec<u32>, Vec<u32>)> {
    (prop_oneof![Just(2u32), Just(3u32), Just(5u32)], 1usize..=3).prop_flat_map(|(p, n)| {
        let v = proptest::collection::vec(0..p, 2 * n);
        (Just(p), v.clone(), v)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn plan_follows_the_case_formula((p, u, w) in pair_strategy()) {
        prop_assume!(rank(p, &[u.clone(), w.clone()]) == 2);
        let plan = congruence_plan(p, &u, &w, 0).unwrap();
        let n = u.len() / 2;
        let cd: Vec<u32> = plan.c.iter().chain(&plan.d).copied().collect();
        let i = plan.i - 1;
        let (s, t) = match plan.case_tag {
            CaseTag::OneA | CaseTag::OneB => {
                prop_assert!(u[..i].iter().all(|&x| x == 0));
                (u[i], w[i])
            }
            CaseTag::TwoA | CaseTag::TwoB => {
                prop_assert!(u[..n].iter().all(|&x| x == 0));
                prop_assert!(u[n..n + i].iter().all(|&x| x == 0));
                (u[n + i], w[n + i])
            }
        };
        prop_assert!(s != 0);
        let expect: Vec<u32> = (0..2 * n).map(|k| (s * w[k] % p + p - t * u[k] % p) % p).collect();
        prop_assert_eq!(&cd, &expect);
        prop_assert!(cd.iter().any(|&x| x != 0));
        prop_assert_eq!(span_set(p, &u, &cd), span_set(p, &u, &w));
        let dir = plan.direction();
        prop_assert_eq!(span_set(p, &u, &dir), span_set(p, &u, &w));
    }

    #[test]
    fn wedge_is_alternating_and_bilinear((p, u, w) in pair_strategy(), k in 0u32..5) {
        let k = k % p;
        prop_assert!(wedge(p, &u, &u).iter().all(|&x| x == 0));
        let uw = wedge(p, &u, &w);
        let wu = wedge(p, &w, &u);
        prop_assert!(uw.iter().zip(&wu).all(|(&a, &b)| (a + b) % p == 0));
        let scaled: Vec<u32> = u.iter().map(|&x| x * k % p).collect();
        let lhs = wedge(p, &scaled, &w);
        prop_assert!(lhs.iter().zip(&uw).all(|(&a, &b)| a == b * k % p));
    }

    #[test]
    fn transformed_family_keeps_wedge_rank(seed in any::<u64>(), p in prop_oneof![Just(2u32), Just(3u32)], n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fam = random_family(p, 2 * n, 3, &mut rng).unwrap();
        let g = random_invertible(p, 2 * n, &mut rng);
        let moved = fam.transform(&g).unwrap();
        prop_assert_eq!(wedge_surjectivity(&fam).rank, wedge_surjectivity(&moved).rank);
    }
}
