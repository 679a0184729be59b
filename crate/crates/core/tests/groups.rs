use proptest::prelude::*;
use std::collections::BTreeSet;
use towerforge::groups::*;

fn closure(g: &FiniteGroup, gens: &[usize]) -> BTreeSet<usize> {
    let mut set = BTreeSet::from([g.identity()]);
    let mut frontier = vec![g.identity()];
    while let Some(x) = frontier.pop() {
        for &s in gens {
            let y = g.mul(x, s);
            if set.insert(y) {
                frontier.push(y);
            }
        }
    }
    set
}

/// All subgroups generated by at most three elements.
fn small_subgroups(g: &FiniteGroup) -> BTreeSet<BTreeSet<usize>> {
    let n = g.order();
    let mut out = BTreeSet::new();
    for a in 0..n {
        for b in a..n {
            for c in b..n {
                out.insert(closure(g, &[a, b, c]));
            }
        }
    }
    out
}

fn min_generators(g: &FiniteGroup) -> usize {
    let n = g.order();
    if n == 1 {
        return 0;
    }
    for k in 1..=3 {
        let mut idx = vec![0usize; k];
        loop {
            if closure(g, &idx).len() == n {
                return k;
            }
            let mut pos = 0;
            loop {
                if pos == k {
                    break;
                }
                idx[pos] += 1;
                if idx[pos] < n {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == k {
                break;
            }
        }
    }
    panic!("needs more than three generators")
}

fn p_groups() -> Vec<(&'static str, usize, FiniteGroup)> {
    vec![
        ("c8", 2, FiniteGroup::cyclic(8)),
        ("c9", 3, FiniteGroup::cyclic(9)),
        ("c2^3", 2, FiniteGroup::elementary_abelian(2, 3)),
        ("c2xc4", 2, FiniteGroup::direct_product(&FiniteGroup::cyclic(2), &FiniteGroup::cyclic(4))),
        ("d8", 2, FiniteGroup::dihedral(4)),
        ("q8", 2, FiniteGroup::quaternion()),
        ("heis3", 3, FiniteGroup::heisenberg(3)),
        ("c3^2", 3, FiniteGroup::elementary_abelian(3, 2)),
    ]
}

#[test]
fn frattini_rank_is_minimal_generator_count() {
    for (name, p, g) in p_groups() {
        assert_eq!(g.frattini_rank(p).unwrap(), min_generators(&g), "{name}");
    }
}

#[test]
fn frattini_subgroup_is_intersection_of_maximal_subgroups() {
    for (name, p, g) in p_groups() {
        let subs = small_subgroups(&g);
        let maximal: Vec<&BTreeSet<usize>> = subs.iter().filter(|s| s.len() * p == g.order()).collect();
        let all: BTreeSet<usize> = (0..g.order()).collect();
        let meet = maximal.iter().fold(all, |acc, s| acc.intersection(s).copied().collect());
        let lib: BTreeSet<usize> = g.frattini_subgroup(p).unwrap().into_iter().collect();
        assert_eq!(lib, meet, "{name}");
    }
}

#[test]
fn named_group_orders() {
    assert_eq!(FiniteGroup::dihedral(4).order(), 8);
    assert_eq!(FiniteGroup::symmetric(4).order(), 24);
    assert_eq!(FiniteGroup::alternating(4).order(), 12);
    assert_eq!(FiniteGroup::heisenberg(3).order(), 27);
    assert_eq!(FiniteGroup::quaternion().center().len(), 2);
    assert_eq!(FiniteGroup::symmetric(3).center().len(), 1);
}

#[test]
fn central_filtration_under_trivial_action() {
    for (name, p, g) in p_groups() {
        let phi = FiniteGroup::cyclic(if p == 2 { 3 } else { 2 });
        let act = GroupAction::trivial(&phi, &g);
        let steps = central_filtration(&g, p, &phi, &act).unwrap();
        let mut order = g.order();
        for st in &steps {
            assert_eq!(st.group.order(), order, "{name}");
            assert_eq!(st.kernel_dim, 1, "{name}");
            assert_eq!(st.kernel.len(), p);
            order /= p;
            assert_eq!(st.quotient.order(), order);
            let center: BTreeSet<usize> = st.group.center().into_iter().collect();
            assert!(st.kernel.iter().all(|k| center.contains(k)));
        }
        assert_eq!(order, 1, "{name}");
    }
}

#[test]
fn central_filtration_with_irreducible_plane() {
    // C3 rotating the plane F_2², which is irreducible.
    let g = FiniteGroup::elementary_abelian(2, 2);
    let phi = FiniteGroup::cyclic(3);
    let gens = g.generators().to_vec();
    let (a, b) = (gens[0], gens[1]);
    let mut img = vec![0usize; 4];
    img[a] = b;
    img[b] = g.mul(a, b);
    img[g.mul(a, b)] = a;
    let act = GroupAction::from_generator_images(&phi, &g, &[img]).unwrap();
    let steps = central_filtration(&g, 2, &phi, &act).unwrap();
    assert_eq!(steps.len(), 1);
    assert_eq!(steps[0].kernel_dim, 2);
    let sd = semidirect_product(&g, &phi, &act).unwrap();
    assert_eq!(sd.order(), 12);
    assert!(matches!(isomorphism(&sd, &FiniteGroup::alternating(4)), IsoVerdict::Isomorphic(_)));
}

fn any_group() -> impl Strategy<Value = FiniteGroup> {
    prop_oneof![
        (1usize..30).prop_map(FiniteGroup::cyclic),
        (2usize..10).prop_map(FiniteGroup::dihedral),
        (3usize..5).prop_map(FiniteGroup::symmetric),
        Just(FiniteGroup::quaternion()),
        Just(FiniteGroup::heisenberg(3)),
        (1usize..4).prop_map(|m| FiniteGroup::elementary_abelian(2, m)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn element_orders_divide_group_order(g in any_group(), pick in any::<prop::sample::Index>()) {
        let a = pick.index(g.order());
        let k = g.element_order(a);
        prop_assert_eq!(g.order() % k, 0);
        prop_assert_eq!(g.pow(a, k as u64), g.identity());
        prop_assert_eq!(g.mul(a, g.inv(a)), g.identity());
    }

    #[test]
    fn normal_closure_is_normal_and_quotients_divide(g in any_group(), pick in any::<prop::sample::Index>()) {
        let a = pick.index(g.order());
        let n = g.normal_closure(&[a]);
        prop_assert!(n.contains(&a));
        prop_assert!(g.is_normal(&n));
        prop_assert_eq!(g.order() % n.len(), 0);
        let (q, proj) = g.quotient(&n).unwrap();
        prop_assert_eq!(q.order() * n.len(), g.order());
        for x in 0..g.order() {
            for y in 0..g.order() {
                prop_assert_eq!(proj[g.mul(x, y)], q.mul(proj[x], proj[y]));
            }
        }
    }

    #[test]
    fn center_commutes_with_everything(g in any_group()) {
        let z = g.center();
        for x in 0..g.order() {
            let central = (0..g.order()).all(|y| g.mul(x, y) == g.mul(y, x));
            prop_assert_eq!(z.contains(&x), central);
        }
    }

    #[test]
    fn table_round_trips_through_json(g in any_group()) {
        let back = FiniteGroup::from_json(&g.to_json()).unwrap();
        prop_assert_eq!(back.order(), g.order());
        for x in 0..g.order() {
            for y in 0..g.order() {
                prop_assert_eq!(back.mul(x, y), g.mul(x, y));
            }
        }
    }
}
