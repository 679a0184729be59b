use crate::error::{guard, invalid, Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

/// Rings are enumerated element by element, so their size is capped.
pub const MAX_RING_SIZE: usize = 1 << 16;
/// Rings up to this size get a cached multiplication table.
const TABLE_LIMIT: usize = 1024;

/// On-disk form of a ring: structure constants `structure[i][j][k]`, the
/// coefficient of `b_k` in `b_i b_j`. `orders[i]` is the exponent of the
/// additive order of `b_i` (default `e`). `ideal_gens` generate the ideal
/// `I` (default: the maximal ideal) and `kernel_gens`, when present, name a
/// kernel for commands that need a surjection.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct RingJson {
    pub p: u32,
    pub e: u32,
    pub rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
    pub structure: Vec<Vec<Vec<u64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orders: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ideal_gens: Option<Vec<Vec<u64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_gens: Option<Vec<Vec<u64>>>,
}

/// An additive subgroup of a ring, stored as a membership mask plus the
/// sorted member list. Ideals and subrings both use it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AddSubgroup {
    mask: Vec<bool>,
    elems: Vec<usize>,
}

impl AddSubgroup {
    // Always contains zero.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.elems.len()
    }
    pub fn is_zero(&self) -> bool {
        self.elems.len() == 1
    }
    pub fn contains(&self, x: usize) -> bool {
        self.mask[x]
    }
    pub fn elements(&self) -> &[usize] {
        &self.elems
    }
    pub fn is_subset_of(&self, other: &AddSubgroup) -> bool {
        self.elems.iter().all(|&x| other.mask[x])
    }
}

/// A commutative finite local ring with residue field `F_p`, together with a
/// chosen ideal `I` such that `S/I` is cyclic and generated by `1`.
///
/// The additive group is `⊕ Z/p^{e_i}` on the basis `b_i`; elements are
/// mixed-radix indices of their coordinate vectors, with `b_0` least
/// significant. Index 0 is zero.
#[derive(Clone)]
pub struct FiniteLocalRing {
    p: u32,
    e: u32,
    orders: Vec<u32>,
    moduli: Vec<u64>,
    strides: Vec<usize>,
    names: Vec<String>,
    structure: Vec<u64>,
    size: usize,
    unit: usize,
    table: Option<Vec<u32>>,
    maximal: AddSubgroup,
    ideal: AddSubgroup,
}

impl fmt::Debug for FiniteLocalRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteLocalRing")
            .field("p", &self.p)
            .field("orders", &self.orders)
            .field("names", &self.names)
            .field("size", &self.size)
            .finish()
    }
}

pub struct RingSpec {
    pub p: u32,
    pub e: u32,
    pub orders: Vec<u32>,
    pub names: Vec<String>,
    /// Flat `rank³` constants.
    pub structure: Vec<u64>,
    pub unit: Vec<u64>,
    /// `None` means the maximal ideal.
    pub ideal_gens: Option<Vec<Vec<u64>>>,
}

impl FiniteLocalRing {
    pub fn new(spec: RingSpec) -> Result<Self> {
        let RingSpec {
            p,
            e,
            orders,
            names,
            structure,
            unit,
            ideal_gens,
        } = spec;
        if !crate::fp::is_prime(p as u64) {
            return invalid(format!("p = {p} is not prime"));
        }
        let rank = orders.len();
        if rank == 0 {
            return invalid("a ring needs at least one basis element");
        }
        if names.len() != rank || unit.len() != rank || structure.len() != rank * rank * rank {
            return invalid("basis names, unit and structure constants disagree with the rank");
        }
        if orders.iter().any(|&o| o == 0 || o > e) {
            return invalid(format!("basis orders must lie in 1..={e}"));
        }
        let moduli: Vec<u64> = orders.iter().map(|&o| (p as u64).pow(o)).collect();
        let mut size: u128 = 1;
        let mut strides = Vec::with_capacity(rank);
        for &m in &moduli {
            strides.push(size as usize);
            size *= m as u128;
            guard("ring size", size, MAX_RING_SIZE as u128)?;
        }
        let size = size as usize;
        let structure: Vec<u64> = structure
            .iter()
            .enumerate()
            .map(|(idx, &c)| c % moduli[idx % rank])
            .collect();
        let mut ring = FiniteLocalRing {
            p,
            e,
            orders,
            moduli,
            strides,
            names,
            structure,
            size,
            unit: 0,
            table: None,
            maximal: AddSubgroup {
                mask: vec![],
                elems: vec![],
            },
            ideal: AddSubgroup {
                mask: vec![],
                elems: vec![],
            },
        };
        ring.unit = ring.index(&unit);
        ring.check_constants()?;
        if size <= TABLE_LIMIT {
            let mut table = vec![0u32; size * size];
            for a in 0..size {
                for b in a..size {
                    let c = ring.mul_by_coords(a, b) as u32;
                    table[a * size + b] = c;
                    table[b * size + a] = c;
                }
            }
            ring.table = Some(table);
        }
        ring.maximal = ring.find_maximal_ideal()?;
        ring.ideal = match ideal_gens {
            None => ring.maximal.clone(),
            Some(gens) => {
                let gens: Vec<usize> = gens
                    .iter()
                    .map(|g| {
                        if g.len() != rank {
                            invalid("ideal generator has the wrong length")
                        } else {
                            Ok(ring.index(g))
                        }
                    })
                    .collect::<Result<_>>()?;
                ring.ideal_generated(&gens)
            }
        };
        ring.check_ideal()?;
        Ok(ring)
    }

    pub fn from_json(j: &RingJson) -> Result<Self> {
        let rank = j.rank;
        if j.structure.len() != rank || j.structure.iter().any(|row| row.len() != rank || row.iter().any(|c| c.len() != rank)) {
            return invalid(format!("structure constants must be {rank}×{rank}×{rank}"));
        }
        let orders = j.orders.clone().unwrap_or_else(|| vec![j.e; rank]);
        if orders.len() != rank {
            return invalid("orders has the wrong length");
        }
        let names = j
            .names
            .clone()
            .unwrap_or_else(|| (0..rank).map(|i| if i == 0 { "1".to_string() } else { format!("b{i}") }).collect());
        let mut unit = vec![0u64; rank];
        match &j.unit {
            Some(u) => unit.clone_from(u),
            None => unit[0] = 1,
        }
        let mut structure = Vec::with_capacity(rank * rank * rank);
        for row in &j.structure {
            for cell in row {
                structure.extend_from_slice(cell);
            }
        }
        Self::new(RingSpec {
            p: j.p,
            e: j.e,
            orders,
            names,
            structure,
            unit,
            ideal_gens: j.ideal_gens.clone(),
        })
    }

    pub fn to_json(&self) -> RingJson {
        let r = self.rank();
        let structure = (0..r)
            .map(|i| (0..r).map(|j| (0..r).map(|k| self.constant(i, j, k)).collect()).collect())
            .collect();
        let ideal_gens = self.additive_basis(&self.ideal).iter().map(|&x| self.coords(x)).collect();
        RingJson {
            p: self.p,
            e: self.e,
            rank: r,
            names: Some(self.names.clone()),
            structure,
            orders: Some(self.orders.clone()),
            unit: Some(self.coords(self.unit)),
            ideal_gens: Some(ideal_gens),
            kernel_gens: None,
        }
    }

    /// `Z/p^e`, with `I = (p)`.
    pub fn truncated_integers(p: u32, e: u32) -> Result<Self> {
        Self::new(RingSpec {
            p,
            e,
            orders: vec![e],
            names: vec!["1".into()],
            structure: vec![1],
            unit: vec![1],
            ideal_gens: None,
        })
    }

    /// `F_p[x, y]` modulo the monomial ideal whose standard monomials are
    /// `x^a y^b` with `a < row_lengths[b]`. Row lengths must be weakly
    /// decreasing and positive.
    pub fn monomial_quotient(p: u32, row_lengths: &[usize]) -> Result<Self> {
        if row_lengths.is_empty() || row_lengths.contains(&0) || row_lengths.windows(2).any(|w| w[0] < w[1]) {
            return invalid("row lengths must be positive and weakly decreasing");
        }
        let monomials: Vec<(usize, usize)> = row_lengths
            .iter()
            .enumerate()
            .flat_map(|(b, &len)| (0..len).map(move |a| (a, b)))
            .collect();
        let rank = monomials.len();
        let lookup: HashMap<(usize, usize), usize> = monomials.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        let mut structure = vec![0u64; rank * rank * rank];
        for (i, &(a1, b1)) in monomials.iter().enumerate() {
            for (j, &(a2, b2)) in monomials.iter().enumerate() {
                if let Some(&k) = lookup.get(&(a1 + a2, b1 + b2)) {
                    structure[(i * rank + j) * rank + k] = 1;
                }
            }
        }
        let names = monomials.iter().map(|&(a, b)| monomial_name(a, b)).collect();
        let mut unit = vec![0u64; rank];
        unit[0] = 1;
        Self::new(RingSpec {
            p,
            e: 1,
            orders: vec![1; rank],
            names,
            structure,
            unit,
            ideal_gens: None,
        })
    }

    /// `F_p[y]/(y^k)`.
    pub fn truncated_polynomial(p: u32, k: usize) -> Result<Self> {
        Self::monomial_quotient(p, &[k])
    }

    /// `R ⊕ F_p x_1 ⊕ … ⊕ F_p x_n` with `x_i x_j = 0` and `m_R x_i = 0`,
    /// i.e. `R[x_1..x_n]/(x_i x_j, m_R x_i)`. The new `I` is `I_R + (x_i)`.
    pub fn square_zero_extension(r: &FiniteLocalRing, n: usize) -> Result<Self> {
        let rr = r.rank();
        let rank = rr + n;
        let mut structure = vec![0u64; rank * rank * rank];
        for i in 0..rr {
            for j in 0..rr {
                for k in 0..rr {
                    structure[(i * rank + j) * rank + k] = r.constant(i, j, k);
                }
            }
        }
        for i in 0..rr {
            let eps = r.residue(r.basis(i)) as u64;
            for x in rr..rank {
                structure[(i * rank + x) * rank + x] = eps;
                structure[(x * rank + i) * rank + x] = eps;
            }
        }
        let mut orders = r.orders.clone();
        orders.extend(std::iter::repeat_n(1, n));
        let mut names = r.names.clone();
        let base = if n == 1 { vec!["x".to_string()] } else { (1..=n).map(|k| format!("x{k}")).collect() };
        for name in base {
            let mut name = name;
            while names.contains(&name) {
                name.push('\'');
            }
            names.push(name);
        }
        let mut unit = r.coords(r.unit);
        unit.extend(std::iter::repeat_n(0, n));
        let mut ideal_gens: Vec<Vec<u64>> = r
            .additive_basis(&r.ideal)
            .iter()
            .map(|&g| {
                let mut c = r.coords(g);
                c.extend(std::iter::repeat_n(0, n));
                c
            })
            .collect();
        for x in rr..rank {
            let mut c = vec![0u64; rank];
            c[x] = 1;
            ideal_gens.push(c);
        }
        Self::new(RingSpec {
            p: r.p,
            e: r.e,
            orders,
            names,
            structure,
            unit,
            ideal_gens: Some(ideal_gens),
        })
    }

    fn check_constants(&self) -> Result<()> {
        let r = self.rank();
        for i in 0..r {
            for j in 0..r {
                for k in 0..r {
                    if self.constant(i, j, k) != self.constant(j, i, k) {
                        return invalid(format!("b{i}·b{j} ≠ b{j}·b{i}"));
                    }
                    // p^{e_i} b_i = 0 forces p^{e_i} (b_i b_j) = 0.
                    if !(self.moduli[i] as u128 * self.constant(i, j, k) as u128).is_multiple_of(self.moduli[k] as u128) {
                        return invalid(format!("b{i}·b{j} has a b{k} coefficient incompatible with the order of b{i}"));
                    }
                }
            }
        }
        for i in 0..r {
            let bi = self.basis(i);
            if self.mul_by_coords(self.unit, bi) != bi {
                return invalid(format!("the unit does not fix b{i}"));
            }
            for j in 0..r {
                let bij = self.mul_by_coords(bi, self.basis(j));
                for k in 0..r {
                    let bk = self.basis(k);
                    if self.mul_by_coords(bij, bk) != self.mul_by_coords(bi, self.mul_by_coords(self.basis(j), bk)) {
                        return invalid(format!("associativity fails on (b{i}, b{j}, b{k})"));
                    }
                }
            }
        }
        Ok(())
    }

    fn find_maximal_ideal(&self) -> Result<AddSubgroup> {
        let steps = usize::BITS - self.size.leading_zeros();
        let nilpotent: Vec<usize> = (0..self.size)
            .filter(|&x| {
                let mut y = x;
                for _ in 0..steps {
                    y = self.mul(y, y);
                }
                y == 0
            })
            .collect();
        let m = self.additive_closure(&nilpotent);
        if m.len() != nilpotent.len() {
            return invalid("nilpotent elements are not closed under addition: the ring is not local");
        }
        if m.len() * self.p as usize != self.size {
            return invalid(format!(
                "residue field has {} elements, expected {}",
                self.size / m.len(),
                self.p
            ));
        }
        Ok(m)
    }

    fn check_ideal(&self) -> Result<()> {
        if !self.ideal.is_subset_of(&self.maximal) {
            return invalid("the ideal I is not contained in the maximal ideal");
        }
        let index = self.size / self.ideal.len();
        let mut k = 1;
        let mut x = self.unit;
        while !self.ideal.contains(x) {
            x = self.add(x, self.unit);
            k += 1;
        }
        if k != index {
            return invalid(format!("S/I has order {index} but 1 has order {k} in it, so S/I is not cyclic on 1"));
        }
        Ok(())
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn e(&self) -> u32 {
        self.e
    }
    pub fn rank(&self) -> usize {
        self.orders.len()
    }
    pub fn size(&self) -> usize {
        self.size
    }
    pub fn orders(&self) -> &[u32] {
        &self.orders
    }
    pub fn names(&self) -> &[String] {
        &self.names
    }
    pub fn one(&self) -> usize {
        self.unit
    }
    pub fn maximal_ideal(&self) -> &AddSubgroup {
        &self.maximal
    }
    /// The distinguished ideal `I`.
    pub fn ideal(&self) -> &AddSubgroup {
        &self.ideal
    }
    pub fn constant(&self, i: usize, j: usize, k: usize) -> u64 {
        let r = self.rank();
        self.structure[(i * r + j) * r + k]
    }
    pub fn basis(&self, i: usize) -> usize {
        self.strides[i]
    }

    pub fn coords(&self, x: usize) -> Vec<u64> {
        self.moduli
            .iter()
            .zip(&self.strides)
            .map(|(&m, &s)| ((x / s) as u64) % m)
            .collect()
    }

    pub fn index(&self, coords: &[u64]) -> usize {
        coords
            .iter()
            .zip(self.moduli.iter().zip(&self.strides))
            .map(|(&c, (&m, &s))| (c % m) as usize * s)
            .sum()
    }

    pub fn add(&self, x: usize, y: usize) -> usize {
        let mut out = 0;
        for (&m, &s) in self.moduli.iter().zip(&self.strides) {
            let a = (x / s) as u64 % m;
            let b = (y / s) as u64 % m;
            out += ((a + b) % m) as usize * s;
        }
        out
    }

    pub fn neg(&self, x: usize) -> usize {
        let mut out = 0;
        for (&m, &s) in self.moduli.iter().zip(&self.strides) {
            let a = (x / s) as u64 % m;
            out += ((m - a) % m) as usize * s;
        }
        out
    }

    pub fn sub(&self, x: usize, y: usize) -> usize {
        self.add(x, self.neg(y))
    }

    pub fn scale(&self, k: u64, x: usize) -> usize {
        let mut out = 0;
        for (&m, &s) in self.moduli.iter().zip(&self.strides) {
            let a = (x / s) as u64 % m;
            out += ((a as u128 * k as u128) % m as u128) as usize * s;
        }
        out
    }

    /// `k · 1`.
    pub fn from_int(&self, k: u64) -> usize {
        self.scale(k, self.unit)
    }

    pub fn mul(&self, x: usize, y: usize) -> usize {
        match &self.table {
            Some(t) => t[x * self.size + y] as usize,
            None => self.mul_by_coords(x, y),
        }
    }

    fn mul_by_coords(&self, x: usize, y: usize) -> usize {
        let r = self.rank();
        let a = self.coords(x);
        let b = self.coords(y);
        let mut acc = vec![0u128; r];
        for i in 0..r {
            if a[i] == 0 {
                continue;
            }
            for j in 0..r {
                if b[j] == 0 {
                    continue;
                }
                let ab = a[i] as u128 * b[j] as u128;
                let row = &self.structure[(i * r + j) * r..(i * r + j + 1) * r];
                for k in 0..r {
                    if row[k] != 0 {
                        acc[k] = (acc[k] + ab * row[k] as u128) % self.moduli[k] as u128;
                    }
                }
            }
        }
        let c: Vec<u64> = acc.into_iter().map(|v| v as u64).collect();
        self.index(&c)
    }

    pub fn pow(&self, x: usize, mut k: u64) -> usize {
        let mut base = x;
        let mut acc = self.unit;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            k >>= 1;
        }
        acc
    }

    pub fn is_unit(&self, x: usize) -> bool {
        !self.maximal.contains(x)
    }

    /// Inverse of a unit, via `u^{|S^×| - 1}`.
    pub fn inverse(&self, x: usize) -> Option<usize> {
        self.is_unit(x)
            .then(|| self.pow(x, (self.size - self.maximal.len()) as u64 - 1))
    }

    /// Image in the residue field `F_p`.
    pub fn residue(&self, x: usize) -> u32 {
        (0..self.p)
            .find(|&c| self.maximal.contains(self.sub(x, self.from_int(c as u64))))
            .expect("residue field is F_p")
    }

    /// Additive order of `x`.
    pub fn additive_order(&self, x: usize) -> u64 {
        let mut k = 1;
        let mut y = x;
        while y != 0 {
            y = self.add(y, x);
            k += 1;
        }
        k
    }

    pub fn format(&self, x: usize) -> String {
        let c = self.coords(x);
        let terms: Vec<String> = c
            .iter()
            .zip(&self.names)
            .filter(|(&ci, _)| ci != 0)
            .map(|(&ci, name)| match (ci, name.as_str()) {
                (_, "1") => ci.to_string(),
                (1, _) => name.clone(),
                _ => format!("{ci}{name}"),
            })
            .collect();
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join("+")
        }
    }

    pub fn additive_closure(&self, gens: &[usize]) -> AddSubgroup {
        let mut mask = vec![false; self.size];
        mask[0] = true;
        let mut elems = vec![0usize];
        let mut head = 0;
        while head < elems.len() {
            let x = elems[head];
            head += 1;
            for &g in gens {
                let y = self.add(x, g);
                if !mask[y] {
                    mask[y] = true;
                    elems.push(y);
                }
            }
        }
        elems.sort_unstable();
        AddSubgroup { mask, elems }
    }

    pub fn zero_subgroup(&self) -> AddSubgroup {
        self.additive_closure(&[])
    }

    pub fn whole(&self) -> AddSubgroup {
        AddSubgroup {
            mask: vec![true; self.size],
            elems: (0..self.size).collect(),
        }
    }

    pub fn ideal_generated(&self, gens: &[usize]) -> AddSubgroup {
        let products: Vec<usize> = gens
            .iter()
            .flat_map(|&g| (0..self.rank()).map(move |i| (g, i)))
            .map(|(g, i)| self.mul(g, self.basis(i)))
            .collect();
        self.additive_closure(&products)
    }

    pub fn ideal_sum(&self, a: &AddSubgroup, b: &AddSubgroup) -> AddSubgroup {
        let mut gens = self.additive_basis(a);
        gens.extend(self.additive_basis(b));
        self.additive_closure(&gens)
    }

    pub fn ideal_product(&self, a: &AddSubgroup, b: &AddSubgroup) -> AddSubgroup {
        let ga = self.additive_basis(a);
        let gb = self.additive_basis(b);
        let prods: Vec<usize> = ga.iter().flat_map(|&x| gb.iter().map(move |&y| (x, y))).map(|(x, y)| self.mul(x, y)).collect();
        self.ideal_generated(&prods)
    }

    pub fn ideal_scale(&self, k: u64, a: &AddSubgroup) -> AddSubgroup {
        let gens: Vec<usize> = self.additive_basis(a).iter().map(|&x| self.scale(k, x)).collect();
        self.additive_closure(&gens)
    }

    /// `(I², pI)` for an ideal `I`.
    pub fn frattini_ideal(&self, i: &AddSubgroup) -> AddSubgroup {
        let sq = self.ideal_product(i, i);
        let pi = self.ideal_scale(self.p as u64, i);
        self.ideal_sum(&sq, &pi)
    }

    /// `(m², p)`: the kernel of `m → m/(m², p)`, the cotangent space.
    pub fn cotangent_kernel(&self) -> AddSubgroup {
        let m = &self.maximal;
        let sq = self.ideal_product(m, m);
        let p = self.ideal_generated(&[self.from_int(self.p as u64)]);
        self.ideal_sum(&sq, &p)
    }

    /// Annihilator of `m`.
    pub fn socle(&self) -> AddSubgroup {
        let mb = self.additive_basis(&self.maximal);
        let elems: Vec<usize> = (0..self.size).filter(|&x| mb.iter().all(|&m| self.mul(m, x) == 0)).collect();
        self.additive_closure(&elems)
    }

    /// Greedy generating set: members in index order that are not yet in
    /// the span of the earlier choices.
    pub fn additive_basis(&self, a: &AddSubgroup) -> Vec<usize> {
        let mut chosen = Vec::new();
        let mut span = self.zero_subgroup();
        for &x in &a.elems {
            if span.len() == a.len() {
                break;
            }
            if !span.contains(x) {
                chosen.push(x);
                span = self.additive_closure(&chosen);
            }
        }
        chosen
    }

    /// Composition length of `I` as a module: every composition factor is
    /// `F_p`, so it is `log_p |I|`. Computed along the m-adic filtration.
    pub fn ideal_length(&self, i: &AddSubgroup) -> u32 {
        let mut total = 0;
        let mut cur = i.clone();
        while !cur.is_zero() {
            let next = self.ideal_product(&self.maximal, &cur);
            let quot = cur.len() / next.len();
            total += log_p(quot, self.p as usize);
            cur = next;
        }
        total
    }

    /// Length of `I` (the distinguished ideal).
    pub fn length(&self) -> u32 {
        self.ideal_length(&self.ideal)
    }
}

fn log_p(mut n: usize, p: usize) -> u32 {
    let mut k = 0;
    while n > 1 {
        n /= p;
        k += 1;
    }
    k
}

fn monomial_name(a: usize, b: usize) -> String {
    let part = |v: &str, k: usize| match k {
        0 => String::new(),
        1 => v.to_string(),
        _ => format!("{v}^{k}"),
    };
    match (a, b) {
        (0, 0) => "1".into(),
        _ => format!("{}{}", part("x", a), part("y", b)),
    }
}

/// A unital ring homomorphism, stored as the full element map.
#[derive(Clone, Debug)]
pub struct RingHom {
    pub source: Arc<FiniteLocalRing>,
    pub target: Arc<FiniteLocalRing>,
    map: Vec<usize>,
}

impl RingHom {
    /// Extends `images` (one per basis element of `source`) additively and
    /// checks that the result is a unital ring homomorphism.
    pub fn from_basis_images(source: Arc<FiniteLocalRing>, target: Arc<FiniteLocalRing>, images: &[usize]) -> Result<Self> {
        if images.len() != source.rank() || images.iter().any(|&y| y >= target.size()) {
            return invalid("one image per basis element is required");
        }
        for (i, &y) in images.iter().enumerate() {
            if target.scale(source.moduli[i], y) != 0 {
                return invalid(format!("image of b{i} has too large an additive order"));
            }
        }
        let map = (0..source.size())
            .map(|x| {
                source
                    .coords(x)
                    .iter()
                    .zip(images)
                    .fold(0, |acc, (&c, &y)| target.add(acc, target.scale(c, y)))
            })
            .collect();
        let h = RingHom { source, target, map };
        h.check_multiplicative()?;
        Ok(h)
    }

    /// Wraps a full element map, checking additivity and multiplicativity.
    pub fn from_map(source: Arc<FiniteLocalRing>, target: Arc<FiniteLocalRing>, map: Vec<usize>) -> Result<Self> {
        if map.len() != source.size() || map.iter().any(|&y| y >= target.size()) {
            return invalid("element map has the wrong shape");
        }
        for x in 0..source.size() {
            for i in 0..source.rank() {
                let b = source.basis(i);
                if map[source.add(x, b)] != target.add(map[x], map[b]) {
                    return invalid("element map is not additive");
                }
            }
        }
        let h = RingHom { source, target, map };
        h.check_multiplicative()?;
        Ok(h)
    }

    fn check_multiplicative(&self) -> Result<()> {
        let (s, t) = (&self.source, &self.target);
        if self.map[s.one()] != t.one() {
            return invalid("map does not send 1 to 1");
        }
        for i in 0..s.rank() {
            for j in i..s.rank() {
                let (bi, bj) = (s.basis(i), s.basis(j));
                if self.map[s.mul(bi, bj)] != t.mul(self.map[bi], self.map[bj]) {
                    return invalid(format!("map is not multiplicative on (b{i}, b{j})"));
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, x: usize) -> usize {
        self.map[x]
    }
    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn kernel(&self) -> AddSubgroup {
        let elems: Vec<usize> = (0..self.source.size()).filter(|&x| self.map[x] == 0).collect();
        self.source.additive_closure(&elems)
    }

    pub fn is_surjective(&self) -> bool {
        let mut hit = vec![false; self.target.size()];
        for &y in &self.map {
            hit[y] = true;
        }
        hit.into_iter().all(|b| b)
    }

    pub fn is_injective(&self) -> bool {
        self.kernel().is_zero()
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &RingHom) -> Result<RingHom> {
        if !Arc::ptr_eq(&first.target, &self.source) && first.target.to_json() != self.source.to_json() {
            return invalid("composition of maps between different rings");
        }
        Ok(RingHom {
            source: first.source.clone(),
            target: self.target.clone(),
            map: first.map.iter().map(|&y| self.map[y]).collect(),
        })
    }

    pub fn is_identity(&self) -> bool {
        self.source.size() == self.target.size() && self.map.iter().enumerate().all(|(x, &y)| x == y)
    }

    /// Least-index preimage of every target element (`None` off the image).
    pub fn least_preimages(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.target.size()];
        for (x, &y) in self.map.iter().enumerate() {
            if out[y].is_none() {
                out[y] = Some(x);
            }
        }
        out
    }

    /// Inverse of a bijective homomorphism.
    pub fn inverse(&self) -> Result<RingHom> {
        if self.source.size() != self.target.size() || !self.is_injective() {
            return Err(Error::Hypothesis("map is not bijective".into()));
        }
        let map = self.least_preimages().into_iter().map(|x| x.expect("bijective")).collect();
        Ok(RingHom {
            source: self.target.clone(),
            target: self.source.clone(),
            map,
        })
    }
}

/// Splits the abelian p-group `a / j` into cyclic factors: repeatedly take a
/// least-index element of maximal order modulo the part found so far, then
/// shift it by that part so its order does not drop. Returns representatives
/// in `a`, their exponents, and the coordinates of every coset.
struct Decomposition {
    reps: Vec<usize>,
    exps: Vec<u32>,
    /// `key[x]` is the least element of `x + j` for `x ∈ a`.
    key: Vec<usize>,
    coords: HashMap<usize, Vec<u64>>,
}

fn decompose(ring: &FiniteLocalRing, a: &AddSubgroup, j: &AddSubgroup) -> Decomposition {
    let p = ring.p as u64;
    let mut key = vec![usize::MAX; ring.size()];
    for &x in a.elements() {
        if key[x] == usize::MAX {
            let coset: Vec<usize> = j.elements().iter().map(|&y| ring.add(x, y)).collect();
            let least = *coset.iter().min().expect("nonempty");
            for y in coset {
                key[y] = least;
            }
        }
    }
    let target = a.len() / j.len();
    let mut coords: HashMap<usize, Vec<u64>> = HashMap::from([(key[0], vec![])]);
    let mut reps: Vec<usize> = Vec::new();
    let mut exps: Vec<u32> = Vec::new();
    while coords.len() < target {
        // Order of x modulo the current part H.
        let order_mod = |x: usize| -> (u32, usize) {
            let mut k = 0;
            let mut y = x;
            while !coords.contains_key(&key[y]) {
                y = ring.scale(p, y);
                k += 1;
            }
            (k, y)
        };
        let mut best: Option<(u32, usize, usize)> = None;
        for &x in a.elements() {
            let (k, y) = order_mod(x);
            if best.is_none_or(|(bk, _, _)| k > bk) {
                best = Some((k, x, y));
            }
        }
        let (k, x, y) = best.expect("a nontrivial quotient has an element of positive order");
        let pk = p.pow(k);
        let c = coords[&key[y]].clone();
        let mut adjusted = x;
        for (i, &ci) in c.iter().enumerate() {
            debug_assert_eq!(ci % pk, 0);
            adjusted = ring.sub(adjusted, ring.scale(ci / pk, reps[i]));
        }
        let old: Vec<(usize, Vec<u64>)> = coords.iter().map(|(&k, v)| (k, v.clone())).collect();
        let mut step = 0usize;
        for t in 0..pk {
            for (h, hc) in &old {
                let z = ring.add(*h, step);
                let mut zc = hc.clone();
                zc.resize(reps.len(), 0);
                zc.push(t);
                coords.insert(key[z], zc);
            }
            step = ring.add(step, adjusted);
        }
        reps.push(adjusted);
        exps.push(k);
    }
    for v in coords.values_mut() {
        v.resize(reps.len(), 0);
    }
    Decomposition { reps, exps, key, coords }
}

fn ring_from_decomposition(ring: &FiniteLocalRing, d: &Decomposition, ideal_elems: &[usize]) -> Result<FiniteLocalRing> {
    let rank = d.reps.len();
    let coords_of = |x: usize| -> Result<Vec<u64>> {
        d.coords
            .get(&d.key[x])
            .cloned()
            .ok_or_else(|| Error::Invalid("product leaves the additive subgroup".into()))
    };
    let mut structure = vec![0u64; rank * rank * rank];
    for i in 0..rank {
        for j in 0..rank {
            let c = coords_of(ring.mul(d.reps[i], d.reps[j]))?;
            for k in 0..rank {
                structure[(i * rank + j) * rank + k] = c[k];
            }
        }
    }
    let names = d.reps.iter().map(|&x| ring.format(x)).collect();
    let unit = coords_of(ring.one())?;
    let ideal_gens = ideal_elems.iter().map(|&x| coords_of(x)).collect::<Result<Vec<_>>>()?;
    FiniteLocalRing::new(RingSpec {
        p: ring.p,
        e: d.exps.iter().copied().max().unwrap_or(1).max(1),
        orders: d.exps.clone(),
        names,
        structure,
        unit,
        ideal_gens: Some(ideal_gens),
    })
}

/// `S/J` with the projection `S → S/J`. `I` of the quotient is the image
/// of `I_S`.
pub fn quotient(s: &Arc<FiniteLocalRing>, j: &AddSubgroup) -> Result<RingHom> {
    if j.len() == s.size() {
        return invalid("quotient by the whole ring");
    }
    if s.ideal_generated(j.elements()).len() != j.len() {
        return invalid("kernel generators do not form an ideal");
    }
    let d = decompose(s, &s.whole(), j);
    let ideal = s.additive_basis(s.ideal());
    let q = Arc::new(ring_from_decomposition(s, &d, &ideal)?);
    let map = (0..s.size()).map(|x| q.index(&d.coords[&d.key[x]])).collect();
    RingHom::from_map(s.clone(), q, map)
}

/// The subring with the given elements, as a ring of its own together with
/// the inclusion. `I` of the subring is `I_S ∩ subring`.
pub fn subring(s: &Arc<FiniteLocalRing>, members: &AddSubgroup) -> Result<RingHom> {
    if !members.contains(s.one()) {
        return invalid("a subring contains 1");
    }
    let zero = s.zero_subgroup();
    let d = decompose(s, members, &zero);
    let ideal: Vec<usize> = members.elements().iter().copied().filter(|&x| s.ideal().contains(x)).collect();
    let sub = Arc::new(ring_from_decomposition(s, &d, &ideal)?);
    let images: Vec<usize> = d.reps.clone();
    let inc = RingHom::from_basis_images(sub, s.clone(), &images)?;
    if !inc.is_injective() {
        return Err(Error::Invalid("subring inclusion is not injective".into()));
    }
    Ok(inc)
}

/// Smallest subring containing `gens`.
pub fn generated_subring(s: &FiniteLocalRing, gens: &[usize]) -> AddSubgroup {
    let mut add_gens: Vec<usize> = vec![s.one()];
    add_gens.extend_from_slice(gens);
    let mut cur = s.additive_closure(&add_gens);
    loop {
        let basis = s.additive_basis(&cur);
        let mut extra = basis.clone();
        for (i, &a) in basis.iter().enumerate() {
            for &b in &basis[i..] {
                extra.push(s.mul(a, b));
            }
        }
        let next = s.additive_closure(&extra);
        if next.len() == cur.len() {
            return cur;
        }
        cur = next;
    }
}
