//! Finite groups given by full multiplication tables.
//!
//! Elements are indices `0..order`. Tables up to a few thousand elements are
//! cheap enough that every structural question (center, commutators,
//! Frattini subgroup, quotients) is answered by direct scans and closures.

use crate::error::{invalid, Error, Result};
use crate::fp;
use crate::linalg::{Mat, Subspace};
use crate::modrep::{self, GroupModule};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet, VecDeque};
use std::hash::Hash;
use std::sync::Arc;

/// Upper bound on table sizes accepted from callers.
pub const MAX_TABLE_ORDER: usize = 4096;

pub use crate::localring::gamma_tilde;

/// Brute-force isomorphism search is only attempted up to this order.
pub const MAX_ISO_ORDER: usize = 100;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    order: usize,
    table: Vec<u32>,
    identity: usize,
    inverse: Vec<u32>,
    labels: Option<Vec<String>>,
    generators: Vec<usize>,
    semidirect: Option<Arc<SemidirectData>>,
}

/// Remembers how a group was assembled as `G ⋊ Φ`. The element `(g, φ)` has
/// index `g * |Φ| + φ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemidirectData {
    pub normal: FiniteGroup,
    pub complement: FiniteGroup,
    pub action: GroupAction,
}

/// An action of `actor` on `target` by automorphisms: `act[φ][g]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupAction {
    actor_order: usize,
    target_order: usize,
    act: Vec<Vec<u32>>,
}

/// JSON shape of a group file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupJson {
    pub order: usize,
    pub mul: Vec<Vec<usize>>,
    pub generators: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl FiniteGroup {
    /// Validates a multiplication table and wraps it.
    pub fn from_table(mul: Vec<Vec<usize>>, generators: Vec<usize>, labels: Option<Vec<String>>) -> Result<Self> {
        let n = mul.len();
        if n == 0 {
            return invalid("empty multiplication table");
        }
        if n > MAX_TABLE_ORDER {
            return Err(Error::Guard {
                what: "group order".into(),
                needed: n as u128,
                limit: MAX_TABLE_ORDER as u128,
            });
        }
        let mut table = Vec::with_capacity(n * n);
        for row in &mul {
            if row.len() != n {
                return invalid("multiplication table is not square");
            }
            for &x in row {
                if x >= n {
                    return invalid(format!("table entry {x} out of range"));
                }
                table.push(x as u32);
            }
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return invalid("label count differs from group order");
            }
        }
        let g = Self::from_flat_unchecked(n, table, generators, labels)?;
        g.check_associative()?;
        g.check_generates()?;
        Ok(g)
    }

    /// Builds the group without the associativity scan; identity and
    /// inverses are still located and checked.
    fn from_flat_unchecked(n: usize, table: Vec<u32>, generators: Vec<usize>, labels: Option<Vec<String>>) -> Result<Self> {
        let identity = (0..n)
            .find(|&e| (0..n).all(|x| table[e * n + x] as usize == x && table[x * n + e] as usize == x))
            .ok_or_else(|| Error::Invalid("no two-sided identity".into()))?;
        let mut inverse = vec![0u32; n];
        for x in 0..n {
            let y = (0..n)
                .find(|&y| table[x * n + y] as usize == identity && table[y * n + x] as usize == identity)
                .ok_or_else(|| Error::Invalid(format!("element {x} has no inverse")))?;
            inverse[x] = y as u32;
        }
        if generators.iter().any(|&g| g >= n) {
            return invalid("generator index out of range");
        }
        Ok(FiniteGroup {
            order: n,
            table,
            identity,
            inverse,
            labels,
            generators,
            semidirect: None,
        })
    }

    fn check_associative(&self) -> Result<()> {
        let n = self.order;
        // Full scan for small tables; for larger ones Light's test with the
        // generators in the middle slot, which suffices once they generate.
        let middles: Vec<usize> = if n <= 128 {
            (0..n).collect()
        } else {
            self.generators.clone()
        };
        for x in 0..n {
            for &g in &middles {
                let xg = self.mul(x, g);
                for y in 0..n {
                    if self.mul(xg, y) != self.mul(x, self.mul(g, y)) {
                        return invalid(format!("associativity fails at ({x}, {g}, {y})"));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_generates(&self) -> Result<()> {
        let closure = self.subgroup_closure(&self.generators);
        if closure.len() != self.order {
            return invalid(format!(
                "generators span a subgroup of order {} inside a group of order {}",
                closure.len(),
                self.order
            ));
        }
        Ok(())
    }

    /// The group generated by `gens` under `op`, enumerated breadth-first from
    /// the identity. Returns the group and its elements in index order.
    pub fn from_closure<T, F>(identity: T, gens: &[T], op: F, limit: usize) -> Result<(Self, Vec<T>)>
    where
        T: Clone + Eq + Hash,
        F: Fn(&T, &T) -> T,
    {
        let mut elems = vec![identity.clone()];
        let mut index: HashMap<T, usize> = HashMap::new();
        index.insert(identity, 0);
        let mut head = 0;
        while head < elems.len() {
            let x = elems[head].clone();
            head += 1;
            for g in gens {
                let y = op(&x, g);
                if !index.contains_key(&y) {
                    if elems.len() >= limit {
                        return Err(Error::Guard {
                            what: "generated group order".into(),
                            needed: (limit + 1) as u128,
                            limit: limit as u128,
                        });
                    }
                    index.insert(y.clone(), elems.len());
                    elems.push(y);
                }
            }
        }
        let n = elems.len();
        let mut table = vec![0u32; n * n];
        for (i, a) in elems.iter().enumerate() {
            for (j, b) in elems.iter().enumerate() {
                let c = op(a, b);
                table[i * n + j] = *index
                    .get(&c)
                    .ok_or_else(|| Error::Invalid("closure is not closed under the operation".into()))?
                    as u32;
            }
        }
        let generators = gens.iter().map(|g| index[g]).collect();
        let g = Self::from_flat_unchecked(n, table, generators, None)?;
        Ok((g, elems))
    }

    pub fn trivial() -> Self {
        Self::cyclic(1)
    }

    pub fn cyclic(n: usize) -> Self {
        assert!(n >= 1);
        let table = (0..n)
            .flat_map(|a| (0..n).map(move |b| ((a + b) % n) as u32))
            .collect();
        let gens = if n > 1 { vec![1] } else { vec![] };
        Self::from_flat_unchecked(n, table, gens, None).expect("cyclic group")
    }

    /// `(Z/p)^m` with elements encoded in base `p`, least significant digit first.
    pub fn elementary_abelian(p: usize, m: usize) -> Self {
        let n = p.pow(m as u32);
        let digits = |mut x: usize| {
            let mut d = vec![0; m];
            for slot in d.iter_mut() {
                *slot = x % p;
                x /= p;
            }
            d
        };
        let mut table = vec![0u32; n * n];
        for a in 0..n {
            let da = digits(a);
            for b in 0..n {
                let db = digits(b);
                let mut c = 0;
                for k in (0..m).rev() {
                    c = c * p + (da[k] + db[k]) % p;
                }
                table[a * n + b] = c as u32;
            }
        }
        let gens = (0..m).map(|k| p.pow(k as u32)).collect();
        Self::from_flat_unchecked(n, table, gens, None).expect("elementary abelian group")
    }

    pub fn direct_product(a: &FiniteGroup, b: &FiniteGroup) -> Self {
        let (na, nb) = (a.order, b.order);
        let n = na * nb;
        let mut table = vec![0u32; n * n];
        for x in 0..n {
            for y in 0..n {
                let (x1, x2) = (x / nb, x % nb);
                let (y1, y2) = (y / nb, y % nb);
                table[x * n + y] = (a.mul(x1, y1) * nb + b.mul(x2, y2)) as u32;
            }
        }
        let mut gens: Vec<usize> = a.generators.iter().map(|&g| g * nb + b.identity).collect();
        gens.extend(b.generators.iter().map(|&h| a.identity * nb + h));
        Self::from_flat_unchecked(n, table, gens, None).expect("direct product")
    }

    /// Upper unitriangular 3x3 matrices over F_p.
    pub fn heisenberg(p: usize) -> Self {
        let op = |x: &(usize, usize, usize), y: &(usize, usize, usize)| {
            ((x.0 + y.0) % p, (x.1 + y.1) % p, (x.2 + y.2 + x.0 * y.1) % p)
        };
        let (g, _) = Self::from_closure((0, 0, 0), &[(1, 0, 0), (0, 1, 0)], op, MAX_TABLE_ORDER)
            .expect("Heisenberg group");
        g
    }

    /// Group generated by permutations of `0..degree` (composition `(a*b)(i) = a(b(i))`).
    pub fn from_permutations(gens: &[Vec<usize>]) -> Result<(Self, Vec<Vec<usize>>)> {
        let degree = gens.first().map_or(0, |g| g.len());
        for g in gens {
            let mut seen = vec![false; degree];
            if g.len() != degree || g.iter().any(|&i| i >= degree || std::mem::replace(&mut seen[i], true)) {
                return invalid("not a permutation");
            }
        }
        let id: Vec<usize> = (0..degree).collect();
        let op = |a: &Vec<usize>, b: &Vec<usize>| b.iter().map(|&i| a[i]).collect::<Vec<_>>();
        Self::from_closure(id, gens, op, MAX_TABLE_ORDER)
    }

    pub fn dihedral(n: usize) -> Self {
        let rot: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
        let refl: Vec<usize> = (0..n).map(|i| (n - i) % n).collect();
        Self::from_permutations(&[rot, refl]).expect("dihedral group").0
    }

    pub fn symmetric(n: usize) -> Self {
        let mut gens = Vec::new();
        if n >= 2 {
            let mut t: Vec<usize> = (0..n).collect();
            t.swap(0, 1);
            gens.push(t);
            gens.push((0..n).map(|i| (i + 1) % n).collect());
        }
        if gens.is_empty() {
            return Self::trivial();
        }
        Self::from_permutations(&gens).expect("symmetric group").0
    }

    pub fn alternating(n: usize) -> Self {
        if n < 3 {
            return Self::trivial();
        }
        let gens: Vec<Vec<usize>> = (2..n)
            .map(|k| {
                let mut c: Vec<usize> = (0..n).collect();
                c[0] = 1;
                c[1] = k;
                c[k] = 0;
                c
            })
            .collect();
        Self::from_permutations(&gens).expect("alternating group").0
    }

    /// Quaternion group of order 8 as a subgroup of GL_2(F_3).
    pub fn quaternion() -> Self {
        let i = [0u32, 2, 1, 0];
        let j = [1u32, 1, 1, 2];
        let (g, _) = Self::from_closure([1u32, 0, 0, 1], &[i, j], |a, b| mat2_mul(a, b, 3), 64)
            .expect("quaternion group");
        g
    }

    pub fn order(&self) -> usize {
        self.order
    }
    pub fn identity(&self) -> usize {
        self.identity
    }
    pub fn generators(&self) -> &[usize] {
        &self.generators
    }
    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }
    pub fn semidirect(&self) -> Option<&SemidirectData> {
        self.semidirect.as_deref()
    }

    pub fn with_generators(mut self, generators: Vec<usize>) -> Result<Self> {
        if generators.iter().any(|&g| g >= self.order) {
            return invalid("generator index out of range");
        }
        self.generators = generators;
        self.check_generates()?;
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.order {
            return invalid("label count differs from group order");
        }
        self.labels = Some(labels);
        Ok(self)
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b] as usize
    }

    #[inline]
    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a] as usize
    }

    pub fn pow(&self, a: usize, k: u64) -> usize {
        let mut acc = self.identity;
        for _ in 0..k {
            acc = self.mul(acc, a);
        }
        acc
    }

    pub fn element_order(&self, a: usize) -> usize {
        let mut x = a;
        let mut k = 1;
        while x != self.identity {
            x = self.mul(x, a);
            k += 1;
        }
        k
    }

    /// `a b a^-1 b^-1`.
    pub fn commutator(&self, a: usize, b: usize) -> usize {
        self.mul(self.mul(a, b), self.mul(self.inv(a), self.inv(b)))
    }

    pub fn conjugate(&self, g: usize, x: usize) -> usize {
        self.mul(self.mul(g, x), self.inv(g))
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order).all(|a| (0..self.order).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    /// Elements of the subgroup generated by `gens`, sorted.
    pub fn subgroup_closure(&self, gens: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.order];
        seen[self.identity] = true;
        let mut queue = VecDeque::from([self.identity]);
        while let Some(x) = queue.pop_front() {
            for &g in gens {
                let y = self.mul(x, g);
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        (0..self.order).filter(|&i| seen[i]).collect()
    }

    /// Smallest normal subgroup containing `gens`.
    pub fn normal_closure(&self, gens: &[usize]) -> Vec<usize> {
        let mut current: Vec<usize> = gens.to_vec();
        let ambient_gens = self.generators.clone();
        loop {
            let members = self.subgroup_closure(&current);
            let mut inside = vec![false; self.order];
            members.iter().for_each(|&m| inside[m] = true);
            let mut added = false;
            for &g in ambient_gens.iter() {
                for &h in current.clone().iter() {
                    let c = self.conjugate(g, h);
                    if !inside[c] {
                        current.push(c);
                        inside[c] = true;
                        added = true;
                    }
                }
            }
            if !added {
                return members;
            }
        }
    }

    pub fn is_normal(&self, sub: &[usize]) -> bool {
        let mut inside = vec![false; self.order];
        sub.iter().for_each(|&m| inside[m] = true);
        sub.iter()
            .all(|&h| self.generators.iter().all(|&g| inside[self.conjugate(g, h)]))
    }

    pub fn is_p_group(&self, p: usize) -> bool {
        let mut n = self.order;
        while n.is_multiple_of(p) {
            n /= p;
        }
        n == 1
    }

    /// The quotient by a normal subgroup, with the projection as an index map.
    pub fn quotient(&self, normal: &[usize]) -> Result<(FiniteGroup, Vec<usize>)> {
        if !self.is_normal(normal) {
            return invalid("quotient by a non-normal subgroup");
        }
        let mut coset = vec![usize::MAX; self.order];
        let mut reps = Vec::new();
        let mut order_elems = vec![self.identity];
        order_elems.extend((0..self.order).filter(|&x| x != self.identity));
        for x in order_elems {
            if coset[x] != usize::MAX {
                continue;
            }
            let id = reps.len();
            reps.push(x);
            for &h in normal {
                coset[self.mul(x, h)] = id;
            }
        }
        let k = reps.len();
        let mut table = vec![0u32; k * k];
        for (i, &a) in reps.iter().enumerate() {
            for (j, &b) in reps.iter().enumerate() {
                table[i * k + j] = coset[self.mul(a, b)] as u32;
            }
        }
        let mut gens: Vec<usize> = self.generators.iter().map(|&g| coset[g]).filter(|&c| c != 0).collect();
        gens.dedup();
        let q = Self::from_flat_unchecked(k, table, gens, None)?;
        Ok((q, coset))
    }

    /// Sorted elements commuting with every element.
    pub fn center(&self) -> Vec<usize> {
        (0..self.order)
            .filter(|&z| self.generators.iter().all(|&g| self.mul(z, g) == self.mul(g, z)))
            .collect()
    }

    /// Central elements `z` with `z^p = 1`.
    pub fn p_torsion_of_center(&self, p: usize) -> Vec<usize> {
        self.center()
            .into_iter()
            .filter(|&z| self.pow(z, p as u64) == self.identity)
            .collect()
    }

    /// `[G, G] G^p` for a p-group, as the normal closure of commutators of
    /// generators and p-th powers of generators.
    pub fn frattini_subgroup(&self, p: usize) -> Result<Vec<usize>> {
        if !self.is_p_group(p) {
            return invalid(format!("group of order {} is not a {p}-group", self.order));
        }
        let mut seeds = Vec::new();
        for (i, &a) in self.generators.iter().enumerate() {
            seeds.push(self.pow(a, p as u64));
            for &b in &self.generators[i + 1..] {
                seeds.push(self.commutator(a, b));
            }
        }
        Ok(self.normal_closure(&seeds))
    }

    /// `d(G) = dim_{F_p} G / [G,G]G^p`.
    pub fn frattini_rank(&self, p: usize) -> Result<usize> {
        let phi = self.frattini_subgroup(p)?;
        let mut index = self.order / phi.len();
        let mut d = 0;
        while index > 1 {
            index /= p;
            d += 1;
        }
        Ok(d)
    }

    /// Cheap invariants used when exact isomorphism search is out of reach.
    pub fn fingerprint(&self, p: Option<usize>) -> GroupFingerprint {
        let mut order_profile: Vec<usize> = (0..self.order).map(|a| self.element_order(a)).collect();
        order_profile.sort_unstable();
        GroupFingerprint {
            order: self.order,
            order_profile,
            center_order: self.center().len(),
            frattini_rank: p.and_then(|p| self.frattini_rank(p).ok()),
        }
    }

    pub fn to_json(&self) -> GroupJson {
        GroupJson {
            order: self.order,
            mul: (0..self.order)
                .map(|a| (0..self.order).map(|b| self.mul(a, b)).collect())
                .collect(),
            generators: self.generators.clone(),
            labels: self.labels.clone(),
        }
    }

    pub fn from_json(j: &GroupJson) -> Result<Self> {
        if j.mul.len() != j.order {
            return invalid("order does not match the table size");
        }
        Self::from_table(j.mul.clone(), j.generators.clone(), j.labels.clone())
    }

    /// Extends images of the generators to a map on all elements, following a
    /// breadth-first spanning tree. Returns `None` if some element is reached
    /// twice with different images or an edge relation fails.
    pub fn extend_generator_map<T, F>(&self, images: &[T], identity: T, op: F) -> Option<Vec<T>>
    where
        T: Clone + PartialEq,
        F: Fn(&T, &T) -> T,
    {
        assert_eq!(images.len(), self.generators.len());
        let mut out: Vec<Option<T>> = vec![None; self.order];
        out[self.identity] = Some(identity);
        let mut queue = VecDeque::from([self.identity]);
        while let Some(x) = queue.pop_front() {
            let fx = out[x].clone().expect("visited");
            for (k, &g) in self.generators.iter().enumerate() {
                let y = self.mul(x, g);
                let fy = op(&fx, &images[k]);
                match &out[y] {
                    Some(prev) => {
                        if *prev != fy {
                            return None;
                        }
                    }
                    None => {
                        out[y] = Some(fy);
                        queue.push_back(y);
                    }
                }
            }
        }
        out.into_iter().collect()
    }

    /// The `(normal p-subgroup, complement)` view used by the representation
    /// code. Available for explicit semidirect products, p-groups, and groups
    /// of order prime to `p`.
    pub fn p_structure(&self, p: usize) -> Result<PStructure> {
        if let Some(sd) = &self.semidirect {
            if !sd.normal.is_p_group(p) || sd.complement.order % p == 0 {
                return Err(Error::Hypothesis(format!(
                    "semidirect factors of orders {} and {} do not split off a normal {p}-Sylow",
                    sd.normal.order, sd.complement.order
                )));
            }
            let m = sd.complement.order;
            let split = (0..self.order).map(|x| (x / m, x % m)).collect();
            return Ok(PStructure {
                normal_order: sd.normal.order,
                complement: sd.complement.clone(),
                split,
                normal_elems: (0..sd.normal.order).map(|g| g * m + sd.complement.identity).collect(),
                normal_gens: sd.normal.generators.iter().map(|&g| g * m + sd.complement.identity).collect(),
                complement_elems: (0..m).map(|f| sd.normal.identity * m + f).collect(),
            });
        }
        if self.is_p_group(p) {
            return Ok(PStructure {
                normal_order: self.order,
                complement: FiniteGroup::trivial(),
                split: (0..self.order).map(|x| (x, 0)).collect(),
                normal_elems: (0..self.order).collect(),
                normal_gens: self.generators.clone(),
                complement_elems: vec![self.identity],
            });
        }
        if !self.order.is_multiple_of(p) {
            return Ok(PStructure {
                normal_order: 1,
                complement: self.clone(),
                split: (0..self.order).map(|x| (0, x)).collect(),
                normal_elems: vec![self.identity],
                normal_gens: Vec::new(),
                complement_elems: (0..self.order).collect(),
            });
        }
        Err(Error::Unsupported(
            "group carries no semidirect structure with a normal Sylow subgroup".into(),
        ))
    }
}

/// `Γ = G ⋊ Φ` split into coordinates: `split[γ] = (g, φ)` with `γ = g·φ`.
#[derive(Clone, Debug)]
pub struct PStructure {
    pub normal_order: usize,
    pub complement: FiniteGroup,
    pub split: Vec<(usize, usize)>,
    pub normal_elems: Vec<usize>,
    pub normal_gens: Vec<usize>,
    pub complement_elems: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroupFingerprint {
    pub order: usize,
    pub order_profile: Vec<usize>,
    pub center_order: usize,
    pub frattini_rank: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IsoVerdict {
    /// An explicit isomorphism: `map[x]` is the image of `x`.
    Isomorphic(Vec<usize>),
    NotIsomorphic,
    /// Too large for exhaustive search, but all fingerprint invariants agree.
    FingerprintEqual,
}

/// Exhaustive search over images of the generators of `a`, for orders up to
/// [`MAX_ISO_ORDER`]; fingerprints beyond that.
pub fn isomorphism(a: &FiniteGroup, b: &FiniteGroup) -> IsoVerdict {
    if a.order != b.order {
        return IsoVerdict::NotIsomorphic;
    }
    if a.fingerprint(None) != b.fingerprint(None) {
        return IsoVerdict::NotIsomorphic;
    }
    if a.order > MAX_ISO_ORDER {
        return IsoVerdict::FingerprintEqual;
    }
    let candidates: Vec<Vec<usize>> = a
        .generators
        .iter()
        .map(|&g| {
            let o = a.element_order(g);
            (0..b.order).filter(|&h| b.element_order(h) == o).collect()
        })
        .collect();
    let mut choice = vec![0usize; candidates.len()];
    if candidates.iter().any(|c| c.is_empty()) {
        return IsoVerdict::NotIsomorphic;
    }
    loop {
        let images: Vec<usize> = choice.iter().zip(&candidates).map(|(&i, c)| c[i]).collect();
        if let Some(map) = a.extend_generator_map(&images, b.identity, |x, y| b.mul(*x, *y)) {
            let distinct: HashSet<usize> = map.iter().copied().collect();
            let hom = (0..a.order).all(|x| (0..a.order).all(|y| map[a.mul(x, y)] == b.mul(map[x], map[y])));
            if distinct.len() == a.order && hom {
                return IsoVerdict::Isomorphic(map);
            }
        }
        let mut k = 0;
        loop {
            if k == choice.len() {
                return IsoVerdict::NotIsomorphic;
            }
            choice[k] += 1;
            if choice[k] < candidates[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

impl GroupAction {
    /// Validates a full action table `act[φ][g]`.
    pub fn new(actor: &FiniteGroup, target: &FiniteGroup, act: Vec<Vec<usize>>) -> Result<Self> {
        if act.len() != actor.order || act.iter().any(|r| r.len() != target.order) {
            return invalid("action table has the wrong shape");
        }
        let act: Vec<Vec<u32>> = act
            .into_iter()
            .map(|r| r.into_iter().map(|x| x as u32).collect())
            .collect();
        let a = GroupAction {
            actor_order: actor.order,
            target_order: target.order,
            act,
        };
        a.validate(actor, target)?;
        Ok(a)
    }

    /// Builds the action from the automorphisms attached to each generator of `actor`.
    pub fn from_generator_images(actor: &FiniteGroup, target: &FiniteGroup, images: &[Vec<usize>]) -> Result<Self> {
        if images.len() != actor.generators.len() {
            return invalid("one automorphism per actor generator is required");
        }
        let id: Vec<usize> = (0..target.order).collect();
        let compose = |f: &Vec<usize>, g: &Vec<usize>| g.iter().map(|&x| f[x]).collect::<Vec<usize>>();
        let full = actor
            .extend_generator_map(images, id, compose)
            .ok_or_else(|| Error::Invalid("generator automorphisms violate the actor's relations".into()))?;
        Self::new(actor, target, full)
    }

    pub fn trivial(actor: &FiniteGroup, target: &FiniteGroup) -> Self {
        GroupAction {
            actor_order: actor.order,
            target_order: target.order,
            act: vec![(0..target.order as u32).collect(); actor.order],
        }
    }

    fn validate(&self, actor: &FiniteGroup, target: &FiniteGroup) -> Result<()> {
        for f in 0..actor.order {
            let row = &self.act[f];
            let mut seen = vec![false; target.order];
            for &x in row {
                if x as usize >= target.order || std::mem::replace(&mut seen[x as usize], true) {
                    return invalid(format!("actor element {f} does not act bijectively"));
                }
            }
            for a in 0..target.order {
                for b in 0..target.order {
                    if row[target.mul(a, b)] as usize != target.mul(row[a] as usize, row[b] as usize) {
                        return invalid(format!("actor element {f} does not act by automorphisms"));
                    }
                }
            }
        }
        for f in 0..actor.order {
            for h in 0..actor.order {
                let fh = actor.mul(f, h);
                for x in 0..target.order {
                    if self.act[fh][x] != self.act[f][self.act[h][x] as usize] {
                        return invalid("action is not a homomorphism into Aut(target)");
                    }
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn apply(&self, phi: usize, g: usize) -> usize {
        self.act[phi][g] as usize
    }

    pub fn actor_order(&self) -> usize {
        self.actor_order
    }
    pub fn target_order(&self) -> usize {
        self.target_order
    }
}

/// `G ⋊ Φ` with `(g₁,φ₁)(g₂,φ₂) = (g₁·φ₁(g₂), φ₁φ₂)`.
pub fn semidirect_product(g: &FiniteGroup, phi: &FiniteGroup, action: &GroupAction) -> Result<FiniteGroup> {
    if action.actor_order != phi.order || action.target_order != g.order {
        return invalid("action does not match the factor orders");
    }
    action.validate(phi, g)?;
    let m = phi.order;
    let n = g.order * m;
    if n > MAX_TABLE_ORDER {
        return Err(Error::Guard {
            what: "semidirect product order".into(),
            needed: n as u128,
            limit: MAX_TABLE_ORDER as u128,
        });
    }
    let mut table = vec![0u32; n * n];
    for x in 0..n {
        let (g1, f1) = (x / m, x % m);
        for y in 0..n {
            let (g2, f2) = (y / m, y % m);
            let gg = g.mul(g1, action.apply(f1, g2));
            table[x * n + y] = (gg * m + phi.mul(f1, f2)) as u32;
        }
    }
    let mut gens: Vec<usize> = g.generators.iter().map(|&a| a * m + phi.identity).collect();
    gens.extend(phi.generators.iter().map(|&f| g.identity * m + f));
    let mut out = FiniteGroup::from_flat_unchecked(n, table, gens, None)?;
    out.semidirect = Some(Arc::new(SemidirectData {
        normal: g.clone(),
        complement: phi.clone(),
        action: action.clone(),
    }));
    Ok(out)
}

/// One step `G_i → G_{i-1}` of a central filtration.
#[derive(Clone, Debug)]
pub struct FiltrationStep {
    /// The covering group `G_i`.
    pub group: FiniteGroup,
    /// The quotient `G_{i-1} = G_i / V`.
    pub quotient: FiniteGroup,
    /// Elements of `V` inside `group`.
    pub kernel: Vec<usize>,
    pub kernel_dim: usize,
    /// Action of each actor generator on `V` in the chosen F_p-basis.
    pub kernel_action: Vec<Mat>,
    /// Elements of `group` forming the chosen basis of `V`.
    pub kernel_basis: Vec<usize>,
    /// Induced action on the quotient.
    pub quotient_action: GroupAction,
}

/// Coordinates for an elementary abelian p-subgroup: a basis and the map
/// from element to coordinate vector.
struct ElementaryCoords {
    basis: Vec<usize>,
    coords: HashMap<usize, Vec<u32>>,
}

fn elementary_coords(g: &FiniteGroup, elems: &[usize], p: usize) -> ElementaryCoords {
    let mut basis: Vec<usize> = Vec::new();
    let mut span: Vec<usize> = vec![g.identity];
    for &x in elems {
        if span.contains(&x) {
            continue;
        }
        basis.push(x);
        span = g.subgroup_closure(&basis);
    }
    let k = basis.len();
    let mut coords = HashMap::new();
    let total = p.pow(k as u32);
    for code in 0..total {
        let mut c = vec![0u32; k];
        let mut r = code;
        let mut x = g.identity;
        for (i, slot) in c.iter_mut().enumerate() {
            *slot = (r % p) as u32;
            r /= p;
            x = g.mul(x, g.pow(basis[i], *slot as u64));
        }
        coords.insert(x, c);
    }
    ElementaryCoords { basis, coords }
}

/// All simple submodules of a small F_p[Φ]-module, found by enumerating
/// cyclic submodules. Returned sorted by their reduced bases.
pub(crate) fn simple_submodules_by_enumeration(p: u32, dim: usize, all_mats: &[Mat]) -> Vec<Subspace> {
    let total = (p as usize).pow(dim as u32);
    let mut cyclic: HashMap<Vec<u32>, Subspace> = HashMap::new();
    let mut distinct: Vec<Subspace> = Vec::new();
    let mut seen: HashSet<Subspace> = HashSet::new();
    for code in 1..total {
        let v = decode(code, p, dim);
        let first = v.iter().find(|&&x| x != 0).copied().unwrap_or(0);
        if first != 1 {
            continue;
        }
        let orbit: Vec<Vec<u32>> = all_mats.iter().map(|m| m.apply(&v)).collect();
        let s = Subspace::span_vecs(p, dim, &orbit);
        if seen.insert(s.clone()) {
            distinct.push(s.clone());
        }
        cyclic.insert(v, s);
    }
    let mut simple: Vec<Subspace> = distinct
        .into_iter()
        .filter(|s| {
            let k = s.dim();
            let sub_total = (p as usize).pow(k as u32);
            (1..sub_total).all(|code| {
                let c = decode(code, p, k);
                let mut v = vec![0u32; dim];
                for (i, &ci) in c.iter().enumerate() {
                    for (j, x) in v.iter_mut().enumerate() {
                        *x = fp::add(*x, fp::mul(ci, s.basis().get(i, j), p), p);
                    }
                }
                let first = v.iter().find(|&&x| x != 0).copied().unwrap_or(1);
                let inv = fp::inv(first, p);
                let v: Vec<u32> = v.iter().map(|&x| fp::mul(x, inv, p)).collect();
                cyclic.get(&v) == Some(s)
            })
        })
        .collect();
    simple.sort_by(|a, b| a.basis().lex_cmp(b.basis()));
    simple
}

pub(crate) fn decode(mut code: usize, p: u32, dim: usize) -> Vec<u32> {
    let mut v = vec![0u32; dim];
    for slot in v.iter_mut().rev() {
        *slot = (code % p as usize) as u32;
        code /= p as usize;
    }
    v
}

/// Chain `G = G_n → … → G_0 = 1` whose kernels are Φ-irreducible subspaces of
/// the p-torsion of the center. At each step the simple submodule with the
/// lexicographically least reduced basis is taken.
pub fn central_filtration(g: &FiniteGroup, p: usize, phi: &FiniteGroup, action: &GroupAction) -> Result<Vec<FiltrationStep>> {
    if !fp::is_prime(p as u64) {
        return invalid(format!("{p} is not prime"));
    }
    if !g.is_p_group(p) {
        return invalid(format!("group of order {} is not a {p}-group", g.order));
    }
    if phi.order.is_multiple_of(p) {
        return invalid(format!("actor order {} is divisible by {p}", phi.order));
    }
    action.validate(phi, g)?;
    let phi_arc = Arc::new(phi.clone());
    let mut steps = Vec::new();
    let mut current = g.clone();
    let mut act = action.clone();
    while current.order > 1 {
        let z = current.p_torsion_of_center(p);
        let ec = elementary_coords(&current, &z, p);
        let k = ec.basis.len();
        let pp = p as u32;
        let matrix_of = |f: usize| {
            let mut m = Mat::zeros(pp, k, k);
            for (j, &b) in ec.basis.iter().enumerate() {
                let img = act.apply(f, b);
                for (i, &c) in ec.coords[&img].iter().enumerate() {
                    m.set(i, j, c);
                }
            }
            m
        };
        let all_mats: Vec<Mat> = (0..phi.order).map(matrix_of).collect();
        let simple = simple_submodules_by_enumeration(pp, k, &all_mats);
        let chosen = simple
            .into_iter()
            .next()
            .ok_or_else(|| Error::Invalid("p-torsion of the center has no simple submodule".into()))?;
        let kernel_action: Vec<Mat> = phi.generators.iter().map(|&f| chosen.restrict(&all_mats[f])).collect();
        let kmod = GroupModule::new(pp, phi_arc.clone(), chosen.dim(), kernel_action.clone())?;
        if !modrep::is_simple(&kmod)? {
            return Err(Error::Invalid("chosen kernel failed the irreducibility test".into()));
        }
        let to_elem = |v: &[u32]| {
            let mut x = current.identity;
            for (i, &c) in v.iter().enumerate() {
                x = current.mul(x, current.pow(ec.basis[i], c as u64));
            }
            x
        };
        let kernel_basis: Vec<usize> = (0..chosen.dim()).map(|i| to_elem(chosen.basis().row(i))).collect();
        let kernel = current.subgroup_closure(&kernel_basis);
        let (q, proj) = current.quotient(&kernel)?;
        let mut reps = vec![usize::MAX; q.order];
        for x in 0..current.order {
            if reps[proj[x]] == usize::MAX {
                reps[proj[x]] = x;
            }
        }
        let qact_table: Vec<Vec<usize>> = (0..phi.order)
            .map(|f| reps.iter().map(|&r| proj[act.apply(f, r)]).collect())
            .collect();
        let qact = GroupAction::new(phi, &q, qact_table)?;
        steps.push(FiltrationStep {
            group: current.clone(),
            quotient: q.clone(),
            kernel_dim: chosen.dim(),
            kernel,
            kernel_action,
            kernel_basis,
            quotient_action: qact.clone(),
        });
        current = q;
        act = qact;
    }
    Ok(steps)
}

/// Product of 2x2 matrices `[a, b, c, d]` over Z/m.
pub fn mat2_mul(x: &[u32; 4], y: &[u32; 4], m: u32) -> [u32; 4] {
    let m = m as u64;
    let f = |a: u32, b: u32, c: u32, d: u32| ((a as u64 * b as u64 + c as u64 * d as u64) % m) as u32;
    [
        f(x[0], y[0], x[1], y[2]),
        f(x[0], y[1], x[1], y[3]),
        f(x[2], y[0], x[3], y[2]),
        f(x[2], y[1], x[3], y[3]),
    ]
}

//GT pub use crate::localring::gamma_tilde;

#[cfg(test)]
mod tests {
    use super::*;

    fn inversion_action(n: usize) -> (FiniteGroup, FiniteGroup, GroupAction) {
        let g = FiniteGroup::cyclic(n);
        let phi = FiniteGroup::cyclic(2);
        let neg: Vec<usize> = (0..n).map(|x| (n - x) % n).collect();
        let act = GroupAction::from_generator_images(&phi, &g, &[neg]).unwrap();
        (g, phi, act)
    }

    #[test]
    fn trivial_complement_gives_the_group_back() {
        let g = FiniteGroup::cyclic(3);
        let t = FiniteGroup::trivial();
        let sd = semidirect_product(&g, &t, &GroupAction::trivial(&t, &g)).unwrap();
        assert_eq!(sd.order(), 3);
        assert!(matches!(isomorphism(&sd, &g), IsoVerdict::Isomorphic(_)));
    }

    #[test]
    fn inversion_gives_s3() {
        let (g, phi, act) = inversion_action(3);
        let s3 = semidirect_product(&g, &phi, &act).unwrap();
        assert_eq!(s3.order(), 6);
        assert!(!s3.is_abelian());
        assert_eq!(s3.center(), vec![s3.identity()]);
    }

    #[test]
    fn rejects_non_automorphism() {
        let g = FiniteGroup::cyclic(3);
        let phi = FiniteGroup::cyclic(2);
        let bad = vec![vec![0, 1, 2], vec![0, 0, 2]];
        assert!(GroupAction::new(&phi, &g, bad).is_err());
    }

    #[test]
    fn center_and_torsion() {
        let h = FiniteGroup::heisenberg(3);
        assert_eq!(h.order(), 27);
        assert_eq!(h.center().len(), 3);
        assert_eq!(h.frattini_rank(3).unwrap(), 2);
        let z9 = FiniteGroup::cyclic(9);
        assert_eq!(z9.p_torsion_of_center(3).len(), 3);
        assert_eq!(FiniteGroup::elementary_abelian(3, 2).p_torsion_of_center(3).len(), 9);
        assert_eq!(FiniteGroup::cyclic(2).p_torsion_of_center(3), vec![0]);
    }

    #[test]
    fn frattini_ranks() {
        assert_eq!(FiniteGroup::cyclic(4).frattini_rank(2).unwrap(), 1);
        assert_eq!(FiniteGroup::elementary_abelian(5, 3).frattini_rank(5).unwrap(), 3);
        assert!(FiniteGroup::cyclic(6).frattini_rank(2).is_err());
    }

    #[test]
    fn filtration_of_cyclic_p_squared() {
        let g = FiniteGroup::cyclic(9);
        let t = FiniteGroup::trivial();
        let steps = central_filtration(&g, 3, &t, &GroupAction::trivial(&t, &g)).unwrap();
        assert_eq!(steps.len(), 2);
        assert!(steps.iter().all(|s| s.kernel_dim == 1));
    }

    #[test]
    fn quotient_of_s3_by_a3() {
        let (g, phi, act) = inversion_action(3);
        let s3 = semidirect_product(&g, &phi, &act).unwrap();
        let a3 = s3.subgroup_closure(&[s3.generators()[0]]);
        let (q, proj) = s3.quotient(&a3).unwrap();
        assert_eq!(q.order(), 2);
        assert_eq!(proj[s3.identity()], q.identity());
    }

    #[test]
    fn json_roundtrip() {
        let g = FiniteGroup::dihedral(4);
        let back = FiniteGroup::from_json(&g.to_json()).unwrap();
        assert_eq!(back.order(), 8);
        assert!(matches!(isomorphism(&g, &back), IsoVerdict::Isomorphic(_)));
    }

    #[test]
    fn quaternion_is_not_dihedral() {
        let q = FiniteGroup::quaternion();
        assert_eq!(q.order(), 8);
        assert_eq!(isomorphism(&q, &FiniteGroup::dihedral(4)), IsoVerdict::NotIsomorphic);
    }
}
