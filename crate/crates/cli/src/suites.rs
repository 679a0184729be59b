//! One function per command. Each returns checks whose verdicts come from
//! re-verifying the module's answer, not from trusting it.

use crate::report::{Check, Verdict};
use crate::{CliError, Command, RunConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::json;
use std::sync::Arc;
use std::time::Instant;
use towerforge::combinat::{self, CaseTag, SubgroupFamily};
use towerforge::fixtures;
use towerforge::groups::{self, FiniteGroup, GroupAction, GroupJson};
use towerforge::linalg::{Mat, Subspace};
use towerforge::localcond::{self, LocalExtensionDatum};
use towerforge::localring::{self, Dichotomy, FiniteLocalRing, LiftOutcome, RingHom, RingJson, SplitOutcome, TowerOutcome};
use towerforge::modrep::{self, GroupModule};

type Res<T> = Result<T, CliError>;

/// Checks in order, with the time spent producing each.
#[derive(Default)]
pub struct Recorded {
    pub checks: Vec<Check>,
    pub timings: Vec<(String, f64)>,
    last: Option<Instant>,
}

impl Recorded {
    fn push(&mut self, c: Check) {
        let now = Instant::now();
        let ms = self.last.map_or(0.0, |t| (now - t).as_secs_f64() * 1e3);
        self.last = Some(now);
        self.timings.push((c.check.clone(), ms));
        self.checks.push(c);
    }

    fn start(&mut self) {
        self.last = Some(Instant::now());
    }
}

pub fn dispatch(cfg: &RunConfig) -> Res<Recorded> {
    let mut rec = Recorded::default();
    rec.start();
    match cfg.command {
        Command::Filtration => filtration(cfg, &mut rec)?,
        Command::Projectors => projectors(cfg, &mut rec)?,
        Command::Subgroups => subgroups(cfg, &mut rec)?,
        Command::WedgeCheck => wedge_check(cfg, &mut rec)?,
        Command::CongruencePlans => congruence_plans(cfg, &mut rec)?,
        Command::RingDichotomy => ring_dichotomy(cfg, &mut rec)?,
        Command::RingSplit => ring_split(cfg, &mut rec)?,
        Command::LiftSearch => lift_search(cfg, &mut rec)?,
        Command::PropertyP => property_p(cfg, &mut rec)?,
        Command::VerifyAll => verify_all(cfg, &mut rec)?,
    }
    Ok(rec)
}

fn read_input(path: &str) -> Res<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{path}: {e}")))
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &str) -> Res<T> {
    serde_json::from_str(&read_input(path)?).map_err(|e| CliError::Input(format!("{path}: {e}")))
}

fn prime(cfg: &RunConfig, default: u32) -> Res<u32> {
    let p = cfg.p.unwrap_or(default);
    if !towerforge::fp::is_prime(p as u64) {
        return Err(CliError::Input(format!("--p {p} is not prime")));
    }
    Ok(p)
}

fn small_n(cfg: &RunConfig, default: usize) -> Res<usize> {
    let n = cfg.n.map_or(default as u64, |n| n);
    if n == 0 || n > 16 {
        return Err(CliError::Input(format!("--n {n} must lie in 1..=16")));
    }
    Ok(n as usize)
}

// ---------------------------------------------------------------- groups

#[derive(Deserialize)]
struct FiltrationInput {
    p: usize,
    group: GroupJson,
    actor: GroupJson,
    /// Image of every target element under each actor generator.
    action: Vec<Vec<usize>>,
}

struct FiltrationProblem {
    name: String,
    p: usize,
    group: FiniteGroup,
    actor: FiniteGroup,
    action: GroupAction,
}

fn default_filtrations(p: u32) -> Res<Vec<FiltrationProblem>> {
    let p = p as usize;
    let coprime = if p == 2 { 3 } else { 2 };
    let mut out = Vec::new();
    let mut trivial = |name: &str, g: FiniteGroup| {
        let actor = FiniteGroup::cyclic(coprime);
        let action = GroupAction::trivial(&actor, &g);
        out.push(FiltrationProblem {
            name: name.to_string(),
            p,
            group: g,
            actor,
            action,
        });
    };
    trivial(&format!("heisenberg({p})"), FiniteGroup::heisenberg(p));
    trivial(&format!("C{p}^3"), FiniteGroup::elementary_abelian(p, 3));
    trivial(&format!("C{}", p * p), FiniteGroup::cyclic(p * p));
    if p == 2 {
        // C3 permuting the three involutions of C2².
        let g = FiniteGroup::elementary_abelian(2, 2);
        let (a, b) = (g.generators()[0], g.generators()[1]);
        let ab = g.mul(a, b);
        let mut img = vec![g.identity(); 4];
        img[a] = b;
        img[b] = ab;
        img[ab] = a;
        let actor = FiniteGroup::cyclic(3);
        let action = GroupAction::from_generator_images(&actor, &g, &[img])?;
        out.push(FiltrationProblem {
            name: "C2^2 rotated by C3".into(),
            p,
            group: g,
            actor,
            action,
        });
    }
    Ok(out)
}

fn filtration_check(fp: &FiltrationProblem) -> Res<Check> {
    let steps = groups::central_filtration(&fp.group, fp.p, &fp.actor, &fp.action)?;
    let actor = Arc::new(fp.actor.clone());
    let mut ok = true;
    let mut expected = fp.group.order();
    let mut layers = Vec::new();
    for st in &steps {
        ok &= st.group.order() == expected;
        let center = st.group.center();
        ok &= st.kernel.iter().all(|k| center.contains(k));
        ok &= st.kernel.len() == fp.p.pow(st.kernel_dim as u32);
        let module = GroupModule::new(fp.p as u32, actor.clone(), st.kernel_dim, st.kernel_action.clone())?;
        let simple = modrep::is_simple(&module)?;
        ok &= simple;
        expected /= st.kernel.len();
        ok &= st.quotient.order() == expected;
        layers.push(json!({"order": st.group.order(), "kernel_dim": st.kernel_dim, "irreducible": simple}));
    }
    ok &= expected == 1;
    Ok(Check::new(
        "central-filtration",
        "p-group filtration by central Φ-irreducible layers",
        Verdict::from_bool(ok),
        json!({"group": fp.name, "p": fp.p, "actor_order": fp.actor.order(), "layers": layers}),
    ))
}

fn filtration(cfg: &RunConfig, rec: &mut Recorded) -> Res<()> {
    let problems = if cfg.input.is_empty() {
        default_filtrations(prime(cfg, 2)?)?
    } else {
        let mut out = Vec::new();
        for path in &cfg.input {
            let j: FiltrationInput = parse_json(path)?;
            let group = FiniteGroup::from_json(&j.group)?;
            let actor = FiniteGroup::from_json(&j.actor)?;
            let action = GroupAction::from_generator_images(&actor, &group, &j.action)?;
            out.push(FiltrationProblem {
                name: path.clone(),
                p: j.p,
                group,
                actor,
                action,
            });
        }
        out
    };
    for fp in &problems {
        cfg.guard("group order", fp.group.order() as u128)?;
        rec.push(filtration_check(fp)?);
    }
    Ok(())
}

// ---------------------------------------------------------------- modrep

fn projector_groups() -> Vec<(String, FiniteGroup)> {
    let mut v: Vec<(String, FiniteGroup)> = vec![
        ("C1".into(), FiniteGroup::trivial()),
        ("C2^2".into(), FiniteGroup::elementary_abelian(2, 2)),
        ("C2^3".into(), FiniteGroup::elementary_abelian(2, 3)),
        ("Q8".into(), FiniteGroup::quaternion()),
        ("S3".into(), FiniteGroup::symmetric(3)),
        ("A4".into(), FiniteGroup::alternating(4)),
        ("S4".into(), FiniteGroup::symmetric(4)),
    ];
    v.extend((2..=8).map(|n| (format!("C{n}"), FiniteGroup::cyclic(n))));
    v.extend((4..=6).map(|n| (format!("D{}", 2 * n), FiniteGroup::dihedral(n))));
    v
}

fn projector_check(name: &str, p: u32, phi: Arc<FiniteGroup>) -> Res<Check> {
    let reg = GroupModule::regular(p, phi.clone())?;
    let simples = modrep::simple_modules(p, phi.clone())?;
    let projs: Vec<Mat> = simples
        .iter()
        .map(|w| modrep::isotypic_projector(&reg, w).map(|x| x.matrix))
        .collect::<towerforge::Result<_>>()?;
    let d = reg.dim();
    let zero = Mat::zeros(p, d, d);
    let mut idempotent = true;
    let mut orthogonal = true;
    let mut equivariant = true;
    let mut total = zero.clone();
    for (a, pa) in projs.iter().enumerate() {
        idempotent &= pa.mul(pa) == *pa;
        for (b, pb) in projs.iter().enumerate() {
            if a != b {
                orthogonal &= pa.mul(pb) == zero;
            }
        }
        equivariant &= reg.generator_matrices().iter().all(|g| g.mul(pa) == pa.mul(g));
        total = total.add(pa);
    }
    let sums = total == Mat::identity(p, d);
    let dims: Vec<usize> = simples.iter().map(GroupModule::dim).collect();
    Ok(Check::new(
        "isotypic-projectors",
        "isotypic projectors are orthogonal idempotents summing to 1",
        Verdict::from_bool(idempotent && orthogonal && sums && equivariant),
        json!({
            "group": name, "order": phi.order(), "p": p, "simple_dims": dims,
            "idempotent": idempotent, "orthogonal": orthogonal,
            "sum_to_identity": sums, "equivariant": equivariant,
        }),
    ))
}

fn projectors(cfg: &RunConfig, rec: &mut Recorded) -> Res<()> {
    let primes: Vec<u32> = match cfg.p {
        Some(_) => vec![prime(cfg, 2)?],
        None => vec![2, 3, 5, 7],
    };
    let groups: Vec<(String, FiniteGroup)> = if cfg.input.is_empty() {
        projector_groups()
    } else {
        cfg.input
            .iter()
            .map(|path| {
                let j: GroupJson = parse_json(path)?;
                Ok((path.clone(), FiniteGroup::from_json(&j)?))
            })
            .collect::<Res<_>>()?
    };
    for (name, g) in groups {
        let g = Arc::new(g);
        for &p in &primes {
            if g.order() % p as usize == 0 {
                continue;
            }
            cfg.guard("regular module dimension", g.order() as u128)?;
            rec.push(projector_check(&name, p, g.clone())?);
        }
    }
    Ok(())
}

/// `C_n ⋊ C_m` with the generator of `C_m` acting by `x ↦ x^k`.
fn metacyclic(n: usize, m: usize, k: u64) -> Res<Arc<FiniteGroup>> {
    let g = FiniteGroup::cyclic(n);
    let phi = FiniteGroup::cyclic(m);
    let img: Vec<usize> = (0..n).map(|x| g.pow(x, k)).collect();
    let act = GroupAction::from_generator_images(&phi, &g, &[img])?;
    Ok(Arc::new(groups::semidirect_product(&g, &phi, &act)?))
}

fn module_structure_check(name: &str, p: u32, gamma: Arc<FiniteGroup>) -> Res<Check> {
    let reg = GroupModule::regular(p, gamma.clone())?;
    let ps = gamma.p_structure(p as usize)?;
    let simples = modrep::simple_modules(p, Arc::new(ps.complement.clone()))?;
    let soc = modrep::socle(&reg)?;
    // Enumeration visits every vector, so only small modules get the cross-check.
    let enumerable = (p as u128).checked_pow(reg.dim() as u32).is_some_and(|t| t <= 1 << 16);
    let socle_matches = !enumerable || soc == modrep::socle_by_enumeration(&reg);
    let mut pim_total = 0;
    for s in &simples {
        let pim = modrep::projective_indecomposable(gamma.clone(), s)?;
        pim_total += pim.dim() * s.dim() / modrep::endomorphism_dim(s)?;
    }
    let pims_fill = pim_total == gamma.order();
    let amb = reg.power(2)?;
    let free = modrep::is_free(&amb)?;
    let free_ok = free.free && free.rank == 2;
    let soc2 = modrep::socle(&amb)?;
    let e = amb.spin(&[soc2.basis().row(0).to_vec()]);
    let hull = modrep::injective_hull(&amb, &e)?;
    let hull_ok = hull.image.contains_space(&e) && soc2.intersect(&hull.image) == soc2.intersect(&e);
    let n = Subspace::zero(p, amb.dim());
    let split = modrep::free_summand_split(&amb, &e, &n)?;
    let q_dim = split.q_rank * gamma.order();
    let split_ok = split.m.contains_space(&e)
        && split.q.dim() == q_dim
        && split.m.dim() + split.q.dim() == amb.dim()
        && split.m.sum(&split.q).dim() == amb.dim();
    let ok = socle_matches && pims_fill && free_ok && hull_ok && split_ok;
    Ok(Check::new(
        "module-structure",
        "socle, projective covers, freeness and injective hulls of free modules",
        Verdict::from_bool(ok),
        json!({
            "group": name, "order": gamma.order(), "p": p,
            "socle_dim": soc.dim(), "socle_enumerated": enumerable, "socle_matches_enumeration": socle_matches,
            "projectives_fill_regular": pims_fill, "free_rank": free.rank,
            "hull_dim": hull.hull.dim(), "hull_essential": hull_ok,
            "split_dims": [split.m.dim(), split.n.dim(), split.q.dim()], "q_rank": split.q_rank,
        }),
    ))
}

fn module_structure(rec: &mut Recorded) -> Res<()> {
    let cases: Vec<(&str, u32, Arc<FiniteGroup>)> = vec![
        ("C3:C2", 3, metacyclic(3, 2, 2)?),
        ("C5:C2", 5, metacyclic(5, 2, 4)?),
        ("C5:C4", 5, metacyclic(5, 4, 2)?),
        ("C7:C3", 7, metacyclic(7, 3, 2)?),
        ("C4", 2, Arc::new(FiniteGroup::cyclic(4))),
    ];
    for (name, p, g) in cases {
        rec.push(module_structure_check(name, p, g)?);
    }
    Ok(())
}

// ---------------------------------------------------------------- combinat

fn subgroup_count_check(cfg: &RunConfig, p: u32, n: usize) -> Res<Check> {
    let count = combinat::count_rank2_subgroups(p as u64, n as u32)?;
    cfg.guard("ambient group size", (p as u128).saturating_pow(2 * n as u32))?;
    let fam = combinat::enumerate_rank2_subgroups(p, n)?;
    let distinct = fam
        .members
        .iter()
        .map(|m| m.rref().0)
        .collect::<std::collections::HashSet<_>>()
        .len();
    let enumerated = fam.len() as u128;
    let ok = enumerated == count && distinct == fam.len() && fam.members.iter().all(|m| m.rank() == 2);
    Ok(Check::new(
        "subgroup-count",
        "closed count of rank-2 subgroups of (Z/p)^2n",
        Verdict::from_bool(ok),
        json!({"p": p, "n": n, "count": count.to_string(), "enumerated": enumerated.to_string()}),
    ))
}

fn pair_bound_check(primes: &[u64], ns: std::ops::RangeInclusive<u32>) -> Res<Check> {
    let mut rows = Vec::new();
    let mut ok = true;
    for &p in primes {
        for n in ns.clone() {
            let t = combinat::count_rank2_subgroups(p, n)?;
            let need = (n * (2 * n - 1)) as u128;
            ok &= t >= need;
            rows.push(json!([p, n, t.to_string(), need.to_string()]));
        }
    }
    Ok(Check::new(
        "pair-family-bound",
        "enough rank-2 subgroups for the coordinate pair family",
        Verdict::from_bool(ok),
        json!({"rows": rows}),
    ))
}

fn subgroups(cfg: &RunConfig, rec: &mut Recorded) -> Res<()> {
    let p = prime(cfg, 2)?;
    let n = small_n(cfg, 2)?;
    rec.push(subgroup_count_check(cfg, p, n)?);
    rec.push(pair_bound_check(&[p as u64], n as u32..=n as u32)?);
    Ok(())
}

/// Rank over F_p by elimination on plain vectors.
fn rank_mod_p(p: u32, rows: &[Vec<u32>]) -> usize {
    let mut rows = rows.to_vec();
    let cols = rows.first().map_or(0, Vec::len);
    let (p, mut r) = (p as u64, 0);
    for c in 0..cols {
        let Some(piv) = (r..rows.len()).find(|&i| rows[i][c] != 0) else {
            continue;
        };
        rows.swap(r, piv);
        let inv = towerforge::fp::pow_mod(rows[r][c] as u64, p - 2, p);
        let pivot: Vec<u64> = rows[r].iter().map(|&x| x as u64 * inv % p).collect();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row[c] != 0 {
                let f = row[c] as u64;
                for (x, &y) in row.iter_mut().zip(&pivot) {
                    *x = ((*x as u64 + p * p - f * y) % p) as u32;
                }
            }
        }
        rows[r] = pivot.into_iter().map(|x| x as u32).collect();
        r += 1;
    }
    r
}

fn wedge_rows(fam: &SubgroupFamily) -> Vec<Vec<u32>> {
    let p = fam.ambient.p;
    fam.members
        .iter()
        .flat_map(|m| {
            (0..m.rows()).flat_map(move |a| (a + 1..m.rows()).map(move |b| combinat::wedge(p, m.row(a), m.row(b))))
        })
        .collect()
}

/// Certificate and rank oracle on one family. Returns (certified, surjective, oracle rank).
fn wedge_verdicts(fam: &SubgroupFamily) -> (bool, bool, usize) {
    let rep = combinat::wedge_surjectivity(fam);
    let oracle = rank_mod_p(fam.ambient.p, &wedge_rows(fam));
    let certified = match combinat::select_spanning_basis(fam) {
        Ok(sb) => sb.certificates.iter().all(|&(i, j, k)| {
            let s = fam.member_space(k);
            s.contains(&sb.basis[i - 1]) && s.contains(&sb.basis[j - 1])
        }),
        Err(_) => false,
    };
    (certified, rep.surjective && rep.rank == oracle, oracle)
}

pub fn wedge_suite(p: u32, n: usize, families: usize, seed: u64) -> Res<Vec<Check>> {
    let mut out = Vec::new();
    let coord = combinat::coordinate_pair_family(2, 2)?;
    let (cert, surj, rank) = wedge_verdicts(&coord);
    out.push(Check::new(
        "wedge-coordinate-family",
        "coordinate pair family in (Z/2)^4 has surjective wedge map",
        Verdict::from_bool(cert && surj && rank == 6),
        json!({"certified": cert, "surjective": surj, "rank": rank}),
    ));
    let mut cyclic = coord.clone();
    cyclic.members[0] = Mat::from_rows(2, 4, &[coord.members[0].row(0).to_vec()]);
    let (cert, surj, rank) = wedge_verdicts(&cyclic);
    out.push(Check::new(
        "wedge-cyclic-counterexample",
        "a cyclic member breaks wedge surjectivity",
        Verdict::from_bool(!cert && !surj && rank == 5),
        json!({"certified": cert, "surjective": surj, "rank": rank}),
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut certified, mut surjective, mut disagreements, mut structured_missed) = (0, 0, 0, 0);
    for k in 0..families {
        let structured = k % 2 == 0;
        let fam = if structured {
            combinat::random_structured_family(p, n, 2, &mut rng)?
        } else {
            combinat::random_family(p, 2 * n, n * (2 * n - 1) + 1, &mut rng)?
        };
        let (cert, surj, _) = wedge_verdicts(&fam);
        certified += cert as usize;
        surjective += surj as usize;
        disagreements += (cert && !surj) as usize;
        structured_missed += (structured && !cert) as usize;
    }
    out.push(Check::new(
        "wedge-random-agreement",
        "spanning-basis certificates imply full wedge rank",
        Verdict::from_bool(disagreements == 0 && structured_missed == 0),
        json!({
            "p": p, "n": n, "families": families, "certified": certified,
            "surjective": surjective, "disagreements": disagreements,
            "structured_without_certificate": structured_missed,
        }),
    ));
    Ok(out)
}

fn wedge_check(cfg: &RunConfig, rec: &mut Recorded) -> Res<()> {
    let p = prime(cfg, 2)?;
    let n = small_n(cfg, 2)?;
    cfg.guard("wedge coordinates", (2 * n * (2 * n - 1) / 2) as u128)?;
    for c in wedge_suite(p, n, 100, cfg.seed)? {
        rec.push(c);
    }
    Ok(())
}

/// Recomputes `(c, d)` from the case rule and checks the plan against it.
fn plan_is_correct(p: u32, plan: &combinat::CongruencePlan) -> bool {
    let (u, w) = (&plan.u, &plan.w);
    let n = u.len() / 2;
    let i = plan.i - 1;
    let (s, t) = match plan.case_tag {
        CaseTag::OneA | CaseTag::OneB => {
            if u[..i].iter().any(|&x| x != 0) {
                return false;
            }
            (u[i], w[i])
        }
        CaseTag::TwoA | CaseTag::TwoB => {
            if u[..n + i].iter().any(|&x| x != 0) {
                return false;
            }
            (u[n + i], w[n + i])
        }
    };
    let pm = p as u64;
    let expect: Vec<u32> = (0..2 * n)
        .map(|k| ((s as u64 * w[k] as u64 + pm * pm - t as u64 * u[k] as u64) % pm) as u32)
        .collect();
    let cd: Vec<u32> = plan.c.iter().chain(&plan.d).copied().collect();
    let same_plane = rank_mod_p(p, &[u.clone(), w.clone()]) == 2
        && rank_mod_p(p, &[u.clone(), w.clone(), cd.clone()]) == 2
        && rank_mod_p(p, &[u.clone(), cd.clone()]) == 2;
    s != 0 && cd == expect && cd.iter().any(|&x| x != 0) && same_plane
}

pub fn random_plan_check(pairs: usize, seed: u64) -> Res<Check> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut cases = std::collections::BTreeMap::<&str, usize>::new();
    let mut done = 0;
    while done < pairs {
        let p = [2u32, 3, 5][rng.gen_range(0..3)];
        let n = rng.gen_range(1..=3usize);
        let u: Vec<u32> = (0..2 * n).map(|_| rng.gen_range(0..p)).collect();
        let w: Vec<u32> = (0..2 * n).map(|_| rng.gen_range(0..p)).collect();
        if rank_mod_p(p, &[u.clone(), w.clone()]) < 2 {
            continue;
        }
        let plan = combinat::congruence_plan(p, &u, &w, done)?;
        *cases.entry(plan.case_tag.as_str()).or_default() += 1;
        failures += !plan_is_correct(p, &plan) as usize;
        done += 1;
    }
    Ok(Check::new(
        "congruence-plan-random",
        "plan vector is the case combination and spans the same plane",
        Verdict::from_bool(failures == 0),
        json!({"pairs": pairs, "failures": failures, "cases": cases}),
    ))
}

fn plan_table_checks(cfg: &RunConfig, fam: &SubgroupFamily, label: &str) -> Res<Vec<Check>> {
    let p = fam.ambient.p;
    let plans = combinat::plans_for_family(fam)?;
    let failures = plans.iter().filter(|pl| !plan_is_correct(p, pl)).count();
    let table = serde_json::to_value(&plans).expect("plans serialize");
    let mut out = vec![Check::new(
        "congruence-plan-table",
        "plan vector is the case combination and spans the same plane",
        Verdict::from_bool(failures == 0),
        json!({"family": label, "p": p, "members": fam.len(), "failures": failures, "plans": table}),
    )];
    // Labels g_1..g_n of a cyclic Φ of order prime to p.
    let n = fam.ambient.rank / 2;
    let mut order = n.max(2);
    while order.is_multiple_of(p as usize) {
        order += 1;
    }
    cfg.guard("label table size", (order * fam.len()) as u128)?;
    let phi = Arc::new(FiniteGroup::cyclic(order));
    let g_list: Vec<usize> = (0..n).collect();
    let nu = combinat::assemble_nu_exponents(&plans, fam, &phi, &g_list)?;
    let recovered = plans
        .iter()
        .enumerate()
        .all(|(ell, pl)| combinat::readback(&nu, &phi, phi.identity(), ell) == pl.u);
    let reg = GroupModule::regular(p, phi.clone())?;
    let mut stable = Vec::new();
    for w in modrep::simple_modules(p, phi.clone())? {
        let proj = modrep::isotypic_projector(&reg, &w)?;
        stable.push(combinat::verify_projection_stability(&nu, &proj, &phi, &plans)?);
    }
    out.push(Check::new(
        "exponent-readback",
        "exponent tables return each plan's generator at its label",
        Verdict::from_bool(recovered),
        json!({"phi_order": order, "labels": fam.len(), "stable_under_projection": stable}),
    ));
    Ok(out)
}

fn congruence_plans(cfg: &RunConfig, rec: &mut Recorded) -> Res<()> {
    if cfg.input.is_empty() {
        let p = prime(cfg, 2)?;
        let n = small_n(cfg, 2)?;
        cfg.guard("ambient group size", (p as u128).saturating_pow(2 * n as u32))?;
        let fam = combinat::enumerate_rank2_subgroups(p, n)?;
        for c in plan_table_checks(cfg, &fam, &format!("all rank-2 subgroups, p={p} n={n}"))? {
            rec.push(c);
        }
        rec.push(random_plan_check(1000, cfg.seed)?);
    } else {
        for path in &cfg.input {
            let fam: SubgroupFamily = parse_json(path)?;
            let fam = SubgroupFamily::new(fam.ambient, fam.members)?;
            for c in plan_table_checks(cfg, &fam, path)? {
                rec.push(c);
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- localring

fn load_ring_json(spec: &str) -> Res<RingJson> {
    match spec.strip_prefix("fixture:") {
        Some(name) => Ok(fixtures::ring_json(name)?),
        None => parse_json(spec),
    }
}

fn surjection(cfg: &RunConfig, spec: &str) -> Res<RingHom> {
    let j = load_ring_json(spec)?;
    let size = j
        .orders
        .clone()
        .unwrap_or_else(|| vec![j.e; j.rank])
        .iter()
        .fold(1u128, |acc, &o| acc.saturating_mul((j.p as u128).saturating_pow(o)));
    cfg.guard("ring size", size)?;
    Ok(fixtures::surjection_from_json(&j)?)
}

fn inputs_or(cfg: &RunConfig, default: &str) -> Vec<String> {
    if cfg.input.is_empty() {
        vec![default.to_string()]
    } else {
        cfg.input.clone()
    }
}

fn formatted(s: &FiniteLocalRing, xs: &[usize]) -> Vec<String> {
    xs.iter().map(|&x| s.format(x)).collect()
}

/// `π': S/m_S J ↠ R` as an explicit map, for checking witnesses that live in
/// the reduced source.
fn reduced_map(pi: &RingHom) -> Res<(RingHom, Vec<usize>)> {
    let s = &pi.source;
    let mj = s.ideal_product(s.maximal_ideal(), &pi.kernel());
    let q = localring::quotient(s, &mj)?;
    let mut map = vec![0usize; q.target.size()];
    for x in 0..s.size() {
        map[q.apply(x)] = pi.apply(x);
    }
    let reduced = RingHom::from_map(q.target.clone(), pi.target.clone(), map.clone())?;
    Ok((reduced, map))
}

pub fn dichotomy_check(label: &str, pi: &RingHom) -> Res<Check> {
    let s = &pi.source;
    let kernel = pi.kernel();
    let mj = s.ideal_product(s.maximal_ideal(), &kernel);
    let d = localring::dichotomy(pi)?;
    let mut details = json!({
        "ring": label,
        "branch": d.branch(),
        "source_size": s.size(),
        "target_size": pi.target.size(),
        "kernel": formatted(s, kernel.elements()),
        "m_kernel_order": mj.len(),
    });
    let ok = match &d {
        Dichotomy::FrattiniContainment { certificate } => {
            let k = s.ideal_sum(&s.frattini_ideal(s.ideal()), &mj);
            details["certificate"] = serde_json::to_value(certificate).expect("serializes");
            match localring::no_lift_certificate(pi) {
                Ok(c) => details["group_certificate"] = serde_json::to_value(c).expect("serializes"),
                Err(e) => details["group_certificate_note"] = json!(e.to_string()),
            }
            kernel.is_subset_of(&k)
        }
        Dichotomy::SquareZeroExtension(w) => {
            let (reduced, map) = reduced_map(pi)?;
            let r = &pi.target;
            let composes = (0..r.size()).all(|y| map[w.section.apply(y)] == y);
            let bijective = w.iso.is_injective() && w.iso.is_surjective();
            let outside = !reduced.source.cotangent_kernel().contains(w.witness);
            details["witness"] = json!(reduced.source.format(w.witness));
            details["section_basis"] =
                json!((0..r.rank()).map(|i| reduced.source.format(w.section.apply(r.basis(i)))).collect::<Vec<_>>());
            composes && bijective && outside && reduced.apply(w.witness) == 0
        }
    };
    Ok(Check::new(
        "ring-dichotomy",
        "a one-dimensional kernel is Frattini or splits square-zero",
        Verdict::from_bool(ok),
        details,
    ))
}

fn ring_dichotomy(cfg: &RunConfig, rec: &mut Recorded) -> Res<()> {
    for spec in inputs_or(cfg, "fixture:f2_y3") {
        let pi = surjection(cfg, &spec)?;
        rec.push(dichotomy_check(&spec, &pi)?);
    }
    Ok(())
}

pub fn split_checks(label: &str, pi: &RingHom) -> Res<Vec<Check>> {
    let s = &pi.source;
    let out = localring::split_surjection(pi)?;
    let kernel = pi.kernel();
    let (ok, mut details) = match &out {
        SplitOutcome::Section { section, steps } => {
            let r = &pi.target;
            let composes = (0..r.size()).all(|y| pi.apply(section.apply(y)) == y);
            let products = (0..r.rank()).all(|i| {
                (0..r.rank()).all(|j| {
                    let (a, b) = (r.basis(i), r.basis(j));
                    section.apply(r.mul(a, b)) == s.mul(section.apply(a), section.apply(b))
                })
            });
            let images: Vec<String> = (0..r.rank()).map(|i| s.format(section.apply(r.basis(i)))).collect();
            (
                composes && products,
                json!({"outcome": "section", "steps": steps, "section_basis": images}),
            )
        }
        SplitOutcome::NoLift { report, steps } => (
            kernel.is_subset_of(s.ideal()),
            json!({"outcome": "no-lift", "steps": steps, "report": serde_json::to_value(report).expect("serializes")}),
        ),
    };
    details["ring"] = json!(label);
    let mut checks = vec![Check::new(
        "split-surjection",
        "a surjection of local rings has a section or a Frattini obstruction",
        Verdict::from_bool(ok),
        details,
    )];
    let ls = localring::ring_length(s);
    let lr = localring::ring_length(&pi.target);
    let lj = s.ideal_length(&kernel);
    checks.push(Check::new(
        "length-additivity",
        "length of the source is length of the target plus length of the kernel",
        Verdict::from_bool(ls == lr + lj),
        json!({"ring": label, "source": ls, "target": lr, "kernel": lj}),
    ));
    Ok(checks)
}

fn ring_split(cfg: &RunConfig, rec: &mut Recorded) -> Res<()> {
    for spec in inputs_or(cfg, "fixture:z4_x") {
        let pi = surjection(cfg, &spec)?;
        for c in split_checks(&spec, &pi)? {
            rec.push(c);
        }
    }
    Ok(())
}

pub fn lift_checks(cfg: &RunConfig, label: &str, pi: &RingHom) -> Res<Vec<Check>> {
    let res = fixtures::residual_image(pi.target.p())?;
    let per = (pi.kernel().len() as u128).saturating_pow(4);
    let gens = res.group.generators().len() + 4 * pi.target.additive_basis(pi.target.ideal()).len();
    cfg.guard("lift search space", per.saturating_pow(gens as u32))?;
    let gt = fixtures::gamma_tilde_fixture(pi.target.clone())?;
    let base = gt.generator_matrices();
    let outcome = localring::lift_search(&gt, pi, &base)?;
    let s = &pi.source;
    let g = &gt.group;
    let (ok, found, mut details) = match &outcome {
        LiftOutcome::Lift { images, .. } => {
            let reduces = (0..g.order()).all(|a| images[a].map(|y| pi.apply(y)) == gt.matrices[a]);
            let hom = (0..g.order())
                .all(|a| (0..g.order()).all(|b| images[g.mul(a, b)] == localring::mat_mul(s, &images[a], &images[b])));
            (reduces && hom, true, json!({"outcome": "lift"}))
        }
        LiftOutcome::NoLift { space, candidates } => (
            candidates.len() == gens,
            false,
            json!({"outcome": "no-lift", "space": space.to_string(), "candidates": candidates}),
        ),
    };
    details["ring"] = json!(label);
    details["group_order"] = json!(g.order());
    let mut checks = vec![Check::new(
        "lift-search",
        "exhaustive search for a lift of the residual representation",
        Verdict::from_bool(ok),
        details,
    )];
    let kernel = pi.kernel();
    let mj = s.ideal_product(s.maximal_ideal(), &kernel);
    if kernel.len() / mj.len() == s.p() as usize {
        let branch = localring::dichotomy(pi)?.branch();
        // A section composes with the base representation; a Frattini
        // kernel leaves nothing to lift when the group containment holds.
        let containment = localring::no_lift_certificate(pi).is_ok();
        let consistent = match branch {
            "square-zero" => found,
            _ => !containment || !found,
        };
        checks.push(Check::new(
            "lift-vs-dichotomy",
            "lift exists exactly on the split branch",
            Verdict::from_bool(consistent),
            json!({"ring": label, "branch": branch, "lift": found, "group_containment": containment}),
        ));
    }
    Ok(checks)
}

fn lift_search(cfg: &RunConfig, rec: &mut Recorded) -> Res<()> {
    for spec in inputs_or(cfg, "fixture:f2_y3") {
        let pi = surjection(cfg, &spec)?;
        for c in lift_checks(cfg, &spec, &pi)? {
            rec.push(c);
        }
    }
    Ok(())
}

pub fn frattini_checks(name: &str, s: &FiniteLocalRing) -> Res<Vec<Check>> {
    let rep = localring::frattini_subgroup_identity(s, s.ideal())?;
    let details = serde_json::to_value(&rep).expect("serializes");
    let mut d1 = details.clone();
    d1["ring"] = json!(name);
    let mut d2 = details;
    d2["ring"] = json!(name);
    Ok(vec![
        Check::new(
            "frattini-containment",
            "Frattini subgroup of the congruence group lies in the (I², pI) level",
            Verdict::from_bool(rep.contained),
            d1,
        ),
        Check::new(
            "frattini-identity",
            "Frattini subgroup of the congruence group equals the (I², pI) level",
            Verdict::from_bool(rep.holds),
            d2,
        ),
    ])
}

fn partitions(n: usize, max: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for k in (1..=n.min(max)).rev() {
        for mut rest in partitions(n - k, k) {
            rest.insert(0, k);
            out.push(rest);
        }
    }
    out
}

/// Every quotient of a monomial ring of dimension ≤ 4 by a socle line.
pub fn monomial_instances(p: u32) -> Res<Vec<(String, RingHom)>> {
    let mut out = Vec::new();
    for n in 1..=4 {
        for shape in partitions(n, n) {
            let s = Arc::new(FiniteLocalRing::monomial_quotient(p, &shape)?);
            let soc = s.socle();
            for &x in soc.elements() {
                if x == 0 || !s.maximal_ideal().contains(x) {
                    continue;
                }
                if s.coords(x).into_iter().find(|&c| c != 0) != Some(1) {
                    continue;
                }
                let pi = localring::quotient(&s, &s.additive_closure(&[x]))?;
                out.push((format!("F_{p} shape {shape:?} mod {}", s.format(x)), pi));
            }
        }
    }
    Ok(out)
}

fn dichotomy_family_check(p: u32) -> Res<Check> {
    let instances = monomial_instances(p)?;
    let (mut frattini, mut split, mut failed) = (0, 0, Vec::new());
    for (label, pi) in &instances {
        let c = dichotomy_check(label, pi)?;
        if c.details["branch"] == "frattini" {
            frattini += 1;
        } else {
            split += 1;
        }
        if c.verdict != Verdict::Pass {
            failed.push(label.clone());
        }
    }
    Ok(Check::new(
        "dichotomy-family",
        "a one-dimensional kernel is Frattini or splits square-zero",
        Verdict::from_bool(failed.is_empty()),
        json!({"p": p, "instances": instances.len(), "frattini": frattini, "square_zero": split, "failed": failed}),
    ))
}

/// `R ⊕ F_p x_1 ⊕ … ⊕ F_p x_layers ↠ R`.
pub fn tower(r: &Arc<FiniteLocalRing>, layers: usize) -> Res<RingHom> {
    let s = FiniteLocalRing::square_zero_extension(r, layers)?;
    let mut images: Vec<usize> = (0..r.rank()).map(|i| r.basis(i)).collect();
    images.extend(std::iter::repeat_n(0, layers));
    Ok(RingHom::from_basis_images(Arc::new(s), r.clone(), &images)?)
}

fn tower_check(label: &str, pi: &RingHom, layers: usize) -> Res<Check> {
    let r = &pi.target;
    let ok = match localring::square_zero_tower(pi)? {
        TowerOutcome::Split { section, witnesses, iso } => {
            witnesses.len() == layers
                && (0..r.size()).all(|y| pi.apply(section.apply(y)) == y)
                && iso.is_injective()
                && iso.is_surjective()
        }
        TowerOutcome::NoLift(_) => false,
    };
    // Peel one layer at a time and check the length drops by one each time.
    let mut per_layer = Vec::new();
    for k in 0..=layers {
        per_layer.push(localring::ring_length(&FiniteLocalRing::square_zero_extension(r, k)?));
    }
    let additive = per_layer.windows(2).all(|w| w[1] == w[0] + 1);
    Ok(Check::new(
        "square-zero-tower",
        "square-zero towers split layer by layer",
        Verdict::from_bool(ok && additive),
        json!({"ring": label, "layers": layers, "lengths": per_layer}),
    ))
}

// ---------------------------------------------------------------- localcond

#[derive(Deserialize)]
struct DatumInput {
    e: u64,
    q: u64,
    #[serde(default)]
    tame: Option<bool>,
    #[serde(default)]
    n: Option<u64>,
}

fn datum(e: u64, q: u64, tame: Option<bool>, n: Option<u64>) -> Res<LocalExtensionDatum> {
    Ok(LocalExtensionDatum::new(e, q, tame.unwrap_or(true), n.unwrap_or(1))?)
}

pub fn property_p_check(d: &LocalExtensionDatum) -> Res<Check> {
    let holds = localcond::property_p(d)?;
    let criterion = match localcond::tame_solvability_criterion(d) {
        Ok(b) => json!(b),
        Err(towerforge::Error::NotApplicable(_)) => json!("not-applicable"),
        Err(e) => return Err(e.into()),
    };
    Ok(Check::new(
        "property-p",
        "unramified, or tame with e dividing q - 1",
        Verdict::from_bool(holds),
        json!({
            "e": d.e, "q": d.q, "tame": d.tame, "n": d.n, "property_p": holds,
            "n_prime": localcond::n_prime(d.e, d.n), "tame_solvability": criterion,
        }),
    ))
}

fn property_p(cfg: &RunConfig, rec: &mut Recorded) -> Res<()> {
    let mut data = Vec::new();
    if let (Some(e), Some(q)) = (cfg.e, cfg.q) {
        data.push(datum(e, q, cfg.tame, cfg.n)?);
    } else if cfg.e.is_some() || cfg.q.is_some() {
        return Err(CliError::Input("property-p needs both --e and --q".into()));
    }
    for path in &cfg.input {
        let list: Vec<DatumInput> = parse_json(path)?;
        for d in list {
            data.push(datum(d.e, d.q, d.tame, d.n)?);
        }
    }
    if data.is_empty() {
        return Err(CliError::Input("property-p needs --e and --q or an --input list".into()));
    }
    for d in &data {
        rec.push(property_p_check(d)?);
    }
    Ok(())
}

/// Property P against a direct count of roots of unity in `F_q^×`, for prime `q`.
fn property_p_scan() -> Res<Check> {
    let (mut checked, mut holds, mut failures) = (0, 0, 0);
    for q in (2..200u64).filter(|&q| towerforge::fp::is_prime(q)) {
        for e in (1..40u64).filter(|e| e % q != 0) {
            let roots = (1..q).filter(|&x| towerforge::fp::pow_mod(x, e, q) == 1).count() as u64;
            let d = LocalExtensionDatum::new(e, q, true, 1)?;
            let p = localcond::property_p(&d)?;
            holds += p as usize;
            failures += (p != (roots == e)) as usize;
            checked += 1;
        }
    }
    Ok(Check::new(
        "property-p-scan",
        "property P holds exactly when F_q contains the e-th roots of unity",
        Verdict::from_bool(failures == 0),
        json!({"data": checked, "holds": holds, "failures": failures}),
    ))
}

fn base_change_check() -> Res<Check> {
    let mut checked = 0;
    let mut failures = 0;
    for q in 2..=1000u64 {
        let Some((p, _)) = towerforge::fp::prime_power(q) else { continue };
        for e in (1..=100u64).filter(|e| e % p != 0 && (q - 1) % e == 0) {
            let d = LocalExtensionDatum::new(e, q, true, 1)?;
            for growth in [1u64, 2, 3] {
                let up = localcond::property_p_base_change(&d, growth)?;
                failures += !localcond::property_p(&up)? as usize;
                checked += 1;
            }
        }
    }
    Ok(Check::new(
        "property-p-base-change",
        "property P survives growth of the residue field",
        Verdict::from_bool(failures == 0),
        json!({"data": checked, "failures": failures}),
    ))
}

// ---------------------------------------------------------------- verify-all

fn verify_all(cfg: &RunConfig, rec: &mut Recorded) -> Res<()> {
    for (p, n) in [(2, 1), (2, 2), (3, 1), (3, 2), (5, 1)] {
        rec.push(subgroup_count_check(cfg, p, n)?);
    }
    rec.push(pair_bound_check(&[2, 3, 5, 7], 1..=4)?);
    for p in [2, 3] {
        for fp in default_filtrations(p)? {
            rec.push(filtration_check(&fp)?);
        }
    }
    for (name, g) in projector_groups() {
        let g = Arc::new(g);
        for p in [2u32, 3, 5, 7] {
            if g.order() % p as usize != 0 {
                rec.push(projector_check(&name, p, g.clone())?);
            }
        }
    }
    module_structure(rec)?;
    for c in wedge_suite(2, 2, 50, cfg.seed)? {
        rec.push(c);
    }
    for c in wedge_suite(3, 3, 50, cfg.seed.wrapping_add(1))? {
        rec.push(c);
    }
    for (p, n) in [(2, 2), (3, 1)] {
        let fam = combinat::enumerate_rank2_subgroups(p, n)?;
        for c in plan_table_checks(cfg, &fam, &format!("all rank-2 subgroups, p={p} n={n}"))? {
            rec.push(c);
        }
    }
    rec.push(random_plan_check(1000, cfg.seed)?);
    for name in fixtures::ring_names() {
        let s = fixtures::ring(name)?;
        for c in frattini_checks(name, &s)? {
            rec.push(c);
        }
    }
    for p in [2, 3] {
        rec.push(dichotomy_family_check(p)?);
    }
    for name in fixtures::ring_names() {
        let j = fixtures::ring_json(name)?;
        if j.kernel_gens.is_none() {
            continue;
        }
        let label = format!("fixture:{name}");
        let pi = fixtures::surjection_from_json(&j)?;
        rec.push(dichotomy_check(&label, &pi)?);
        for c in split_checks(&label, &pi)? {
            rec.push(c);
        }
    }
    let f2 = surjection(cfg, "fixture:f2_y3")?;
    for c in lift_checks(cfg, "fixture:f2_y3", &f2)? {
        rec.push(c);
    }
    for name in ["f2_y2", "f3_y2", "z9"] {
        let r = Arc::new(fixtures::ring(name)?);
        let pi = tower(&r, 3)?;
        rec.push(tower_check(name, &pi, 3)?);
        for c in split_checks(&format!("{name} + 3 square-zero layers"), &pi)? {
            rec.push(c);
        }
    }
    rec.push(property_p_scan()?);
    rec.push(base_change_check()?);
    Ok(())
}
