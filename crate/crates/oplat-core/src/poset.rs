//! Completion of finite partially ordered sets by complemented subsets
//! (cuts), plus comparability-driven monotone extension of partial maps.
//!
//! Subsets are u32 bitmasks, which caps the poset size at 32; the public
//! builder enforces a configurable bound (default 16).

use crate::error::{Error, Result};

pub type Mask = u32;

pub const DEFAULT_COMPLETION_BOUND: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinitePoset {
    size: usize,
    leq: Vec<bool>,
}

impl FinitePoset {
    /// Builds from a full relation table, validating the order axioms.
    pub fn new(size: usize, leq: Vec<bool>) -> Result<Self> {
        if size == 0 || size > 32 {
            return Err(Error::InvalidInput(format!("poset size {size} out of range")));
        }
        if leq.len() != size * size {
            return Err(Error::DimensionMismatch("relation table size".into()));
        }
        let p = FinitePoset { size, leq };
        for i in 0..size {
            if !p.leq(i, i) {
                return Err(Error::InvalidInput(format!("relation not reflexive at {i}")));
            }
            for j in 0..size {
                if i != j && p.leq(i, j) && p.leq(j, i) {
                    return Err(Error::InvalidInput(format!(
                        "relation not antisymmetric at ({i},{j})"
                    )));
                }
                for k in 0..size {
                    if p.leq(i, j) && p.leq(j, k) && !p.leq(i, k) {
                        return Err(Error::InvalidInput(format!(
                            "relation not transitive at ({i},{j},{k})"
                        )));
                    }
                }
            }
        }
        Ok(p)
    }

    /// Builds from covering pairs i <= j, taking the reflexive-transitive
    /// closure first.
    pub fn from_pairs(size: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if size == 0 || size > 32 {
            return Err(Error::InvalidInput(format!("poset size {size} out of range")));
        }
        let mut leq = vec![false; size * size];
        for i in 0..size {
            leq[i * size + i] = true;
        }
        for &(i, j) in pairs {
            if i >= size || j >= size {
                return Err(Error::InvalidInput(format!("pair ({i},{j}) out of range")));
            }
            leq[i * size + j] = true;
        }
        // Warshall closure.
        for k in 0..size {
            for i in 0..size {
                if leq[i * size + k] {
                    for j in 0..size {
                        if leq[k * size + j] {
                            leq[i * size + j] = true;
                        }
                    }
                }
            }
        }
        Self::new(size, leq)
    }

    pub fn chain(n: usize) -> Self {
        let pairs: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        Self::from_pairs(n, &pairs).expect("chain is a poset")
    }

    pub fn antichain(n: usize) -> Self {
        Self::from_pairs(n, &[]).expect("antichain is a poset")
    }

    /// 0 < 1,2 < 3.
    pub fn diamond() -> Self {
        Self::from_pairs(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).expect("diamond is a poset")
    }

    /// Zigzag fence a0 < b0 > a1 < b1 > ... of the given total size.
    pub fn fence(n: usize) -> Self {
        let mut pairs = Vec::new();
        for i in 0..n.saturating_sub(1) {
            if i % 2 == 0 {
                pairs.push((i, i + 1));
            } else {
                pairs.push((i + 1, i));
            }
        }
        Self::from_pairs(n, &pairs).expect("fence is a poset")
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.leq[i * self.size + j]
    }

    pub fn full_mask(&self) -> Mask {
        if self.size == 32 {
            !0
        } else {
            (1u32 << self.size) - 1
        }
    }

    /// All elements below every member of `c`; the empty set maps to the
    /// whole set.
    pub fn lower_complement(&self, c: Mask) -> Mask {
        let mut out = self.full_mask();
        for j in 0..self.size {
            if c & (1 << j) != 0 {
                let mut below = 0u32;
                for i in 0..self.size {
                    if self.leq(i, j) {
                        below |= 1 << i;
                    }
                }
                out &= below;
            }
        }
        out
    }

    /// All elements above every member of `c`; the empty set maps to the
    /// whole set.
    pub fn upper_complement(&self, c: Mask) -> Mask {
        let mut out = self.full_mask();
        for j in 0..self.size {
            if c & (1 << j) != 0 {
                let mut above = 0u32;
                for i in 0..self.size {
                    if self.leq(j, i) {
                        above |= 1 << i;
                    }
                }
                out &= above;
            }
        }
        out
    }

    fn principal_up(&self, j: usize) -> Mask {
        self.upper_complement(1 << j)
    }

    /// Canonical form of the relation under all relabelings (used for
    /// isomorphism-class enumeration at small sizes).
    pub fn canonical_key(&self) -> Vec<bool> {
        let n = self.size;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best: Option<Vec<bool>> = None;
        permute(&mut perm, 0, &mut |p| {
            let mut key = vec![false; n * n];
            for i in 0..n {
                for j in 0..n {
                    key[p[i] * n + p[j]] = self.leq(i, j);
                }
            }
            match &best {
                Some(b) if *b <= key => {}
                _ => best = Some(key),
            }
        });
        best.unwrap()
    }
}

fn permute(perm: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == perm.len() {
        f(perm);
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute(perm, k + 1, f);
        perm.swap(k, i);
    }
}

/// A complemented subset pair: the upper set is the upper complement of the
/// lower set and vice versa.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Cut {
    pub upper: Mask,
    pub lower: Mask,
}

/// The completion lattice: all cuts with meet/join tables. Cuts are ordered
/// by reverse inclusion of upper sets.
#[derive(Debug, Clone)]
pub struct CompletionLattice {
    pub poset: FinitePoset,
    pub cuts: Vec<Cut>,
    pub meet: Vec<Vec<usize>>,
    pub join: Vec<Vec<usize>>,
    pub top: usize,
    pub bottom: usize,
    /// Index of the cut generated by each source element.
    pub embed: Vec<usize>,
}

impl CompletionLattice {
    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    /// Order on cuts: larger means smaller upper set.
    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.cuts[b].upper & !self.cuts[a].upper == 0
    }

    pub fn meet_of(&self, a: usize, b: usize) -> usize {
        self.meet[a][b]
    }

    pub fn join_of(&self, a: usize, b: usize) -> usize {
        self.join[a][b]
    }

    pub fn meet_all(&self, items: impl IntoIterator<Item = usize>) -> usize {
        items
            .into_iter()
            .fold(self.top, |acc, i| self.meet[acc][i])
    }

    pub fn join_all(&self, items: impl IntoIterator<Item = usize>) -> usize {
        items
            .into_iter()
            .fold(self.bottom, |acc, i| self.join[acc][i])
    }

    /// The lattice axioms plus bounds, checked exhaustively.
    pub fn verify_lattice_axioms(&self) -> Result<()> {
        let n = self.len();
        for a in 0..n {
            if self.meet[a][a] != a || self.join[a][a] != a {
                return Err(Error::InvalidInput(format!("idempotence fails at {a}")));
            }
            if !self.leq(self.bottom, a) || !self.leq(a, self.top) {
                return Err(Error::InvalidInput(format!("bounds fail at {a}")));
            }
            for b in 0..n {
                if self.meet[a][b] != self.meet[b][a] || self.join[a][b] != self.join[b][a] {
                    return Err(Error::InvalidInput(format!(
                        "commutativity fails at ({a},{b})"
                    )));
                }
                let m = self.meet[a][b];
                if !self.leq(m, a) || !self.leq(m, b) {
                    return Err(Error::InvalidInput(format!("meet bound fails ({a},{b})")));
                }
                let j = self.join[a][b];
                if !self.leq(a, j) || !self.leq(b, j) {
                    return Err(Error::InvalidInput(format!("join bound fails ({a},{b})")));
                }
                if self.join[a][self.meet[a][b]] != a || self.meet[a][self.join[a][b]] != a {
                    return Err(Error::InvalidInput(format!("absorption fails ({a},{b})")));
                }
                for c in 0..n {
                    if self.meet[self.meet[a][b]][c] != self.meet[a][self.meet[b][c]]
                        || self.join[self.join[a][b]][c] != self.join[a][self.join[b][c]]
                    {
                        return Err(Error::InvalidInput(format!(
                            "associativity fails ({a},{b},{c})"
                        )));
                    }
                    // meets and joins are actual infima/suprema
                    if self.leq(c, a) && self.leq(c, b) && !self.leq(c, m) {
                        return Err(Error::InvalidInput(format!(
                            "meet not maximal lower bound ({a},{b},{c})"
                        )));
                    }
                }
            }
        }
        // order-embedding of the source poset
        for i in 0..self.poset.size() {
            for j in 0..self.poset.size() {
                let li = self.embed[i];
                let lj = self.embed[j];
                if self.poset.leq(i, j) != self.leq(li, lj) {
                    return Err(Error::InvalidInput(format!(
                        "embedding not order isomorphic at ({i},{j})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// True when the source poset maps onto the completion order
    /// isomorphically; the completion of a complete lattice reproduces it.
    pub fn embedding_is_onto(&self) -> bool {
        let mut seen = vec![false; self.len()];
        for &e in &self.embed {
            seen[e] = true;
        }
        seen.iter().all(|&s| s)
    }

    /// Verifies that completing the completion reproduces it. Small lattices
    /// are literally rebuilt; beyond the mask width the check uses the
    /// equivalent principal-intersection property (every intersection of
    /// principal up-sets in a complete lattice is principal over the join).
    pub fn verify_idempotent(&self) -> Result<()> {
        let size = self.len();
        if size <= 32 {
            let mut leq = vec![false; size * size];
            for a in 0..size {
                for b in 0..size {
                    leq[a * size + b] = self.leq(a, b);
                }
            }
            let lp = FinitePoset::new(size, leq)?;
            let l2 = build_completion(&lp, 1 << 16)?;
            if l2.len() != size || !l2.embedding_is_onto() {
                return Err(Error::InvalidInput(format!(
                    "completion of the completion has {} cuts, expected {size}",
                    l2.len()
                )));
            }
            return Ok(());
        }
        for a in 0..size {
            for b in 0..size {
                let j = self.join[a][b];
                for c in 0..size {
                    let in_both = self.leq(a, c) && self.leq(b, c);
                    if in_both != self.leq(j, c) {
                        return Err(Error::InvalidInput(format!(
                            "principal intersection fails at ({a},{b},{c})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Enumerates all cuts and builds the meet/join tables.
///
/// Cut upper sets are exactly the intersections of principal up-sets
/// (including the empty intersection, the whole set), so a worklist closure
/// under pairwise intersection enumerates them without scanning all subsets.
pub fn build_completion(s: &FinitePoset, bound: usize) -> Result<CompletionLattice> {
    if s.size() > bound {
        return Err(Error::InvalidInput(format!(
            "poset size {} exceeds completion bound {bound}",
            s.size()
        )));
    }
    let mut uppers: Vec<Mask> = vec![s.full_mask()];
    let gens: Vec<Mask> = (0..s.size()).map(|j| s.principal_up(j)).collect();
    for &g in &gens {
        if !uppers.contains(&g) {
            uppers.push(g);
        }
    }
    let mut idx = 0;
    while idx < uppers.len() {
        let u = uppers[idx];
        for &g in &gens {
            let v = u & g;
            if !uppers.contains(&v) {
                uppers.push(v);
            }
        }
        idx += 1;
    }
    uppers.sort_unstable();
    let cuts: Vec<Cut> = uppers
        .iter()
        .map(|&u| Cut {
            upper: u,
            lower: s.lower_complement(u),
        })
        .collect();
    let find = |u: Mask| -> usize {
        uppers.binary_search(&u).expect("closed under the operations")
    };
    let n = cuts.len();
    let mut meet = vec![vec![0usize; n]; n];
    let mut join = vec![vec![0usize; n]; n];
    for a in 0..n {
        for b in 0..n {
            // meet: upper complement of the intersection of lower sets
            meet[a][b] = find(s.upper_complement(cuts[a].lower & cuts[b].lower));
            // join: intersection of upper sets
            join[a][b] = find(cuts[a].upper & cuts[b].upper);
        }
    }
    let bottom = find(s.full_mask());
    let top = (0..n)
        .fold(bottom, |acc, i| join[acc][i]);
    let embed: Vec<usize> = (0..s.size()).map(|j| find(s.principal_up(j))).collect();
    Ok(CompletionLattice {
        poset: s.clone(),
        cuts,
        meet,
        join,
        top,
        bottom,
        embed,
    })
}

/// Monotone extension of a partial map into a completion lattice: the
/// supremum of the images of dominated elements, clamped by the infimum of
/// the images of dominating elements.
///
/// `f[i]` gives the image cut index for elements of the sub-poset; `None`
/// marks elements outside the domain. Optional comparability witnesses
/// `r_plus`/`r_minus` are validated for monotonicity when supplied.
pub fn extend_monotone(
    s: &FinitePoset,
    l: &CompletionLattice,
    f: &[Option<usize>],
    r_plus: Option<&[f64]>,
    r_minus: Option<&[f64]>,
) -> Result<Vec<usize>> {
    if f.len() != s.size() {
        return Err(Error::DimensionMismatch("partial map length".into()));
    }
    for witness in [r_plus, r_minus].into_iter().flatten() {
        if witness.len() != s.size() {
            return Err(Error::DimensionMismatch("comparability witness length".into()));
        }
        for i in 0..s.size() {
            for j in 0..s.size() {
                if s.leq(i, j) && witness[i] > witness[j] + 1e-12 {
                    return Err(Error::InvalidInput(
                        "comparability witness is not monotone".into(),
                    ));
                }
            }
        }
    }
    // f must be monotone on its domain.
    for i in 0..s.size() {
        for j in 0..s.size() {
            if let (Some(fi), Some(fj)) = (f[i], f[j]) {
                if s.leq(i, j) && !l.leq(fi, fj) {
                    return Err(Error::InvalidInput(format!(
                        "partial map is not monotone at ({i},{j})"
                    )));
                }
            }
        }
    }
    let mut out = Vec::with_capacity(s.size());
    for i in 0..s.size() {
        let below = l.join_all(
            (0..s.size()).filter(|&t| s.leq(t, i)).filter_map(|t| f[t]),
        );
        let above = l.meet_all(
            (0..s.size()).filter(|&t| s.leq(i, t)).filter_map(|t| f[t]),
        );
        out.push(l.meet_of(below, above));
    }
    // The result extends f and is monotone by construction; verify anyway.
    for i in 0..s.size() {
        if let Some(fi) = f[i] {
            if out[i] != fi {
                return Err(Error::InvalidInput(format!(
                    "extension disagrees with the map at {i}"
                )));
            }
        }
        for j in 0..s.size() {
            if s.leq(i, j) && !l.leq(out[i], out[j]) {
                return Err(Error::InvalidInput(format!(
                    "extension is not monotone at ({i},{j})"
                )));
            }
        }
    }
    Ok(out)
}

/// Enumerates one representative per isomorphism class of posets with `n`
/// elements (brute force over relation masks; feasible up to n = 5).
pub fn enumerate_posets(n: usize) -> Vec<FinitePoset> {
    assert!(n >= 1 && n <= 5, "brute-force enumeration is desk-scale only");
    let strict_pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let np = strict_pairs.len();
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << np) {
        let mut leq = vec![false; n * n];
        for i in 0..n {
            leq[i * n + i] = true;
        }
        for (b, &(i, j)) in strict_pairs.iter().enumerate() {
            if mask & (1 << b) != 0 {
                leq[i * n + j] = true;
            }
        }
        // quick antisymmetry / transitivity screens before constructing
        let mut ok = true;
        'outer: for i in 0..n {
            for j in 0..n {
                if i != j && leq[i * n + j] && leq[j * n + i] {
                    ok = false;
                    break 'outer;
                }
                for k in 0..n {
                    if leq[i * n + j] && leq[j * n + k] && !leq[i * n + k] {
                        ok = false;
                        break 'outer;
                    }
                }
            }
        }
        if !ok {
            continue;
        }
        let p = FinitePoset { size: n, leq };
        if seen.insert(p.canonical_key()) {
            out.push(p);
        }
    }
    out
}

/// Seeded random poset: the transitive closure of a random covering pair set.
pub fn random_poset(n: usize, rng: &mut impl rand::Rng) -> FinitePoset {
    loop {
        let npairs = rng.random_range(0..2 * n);
        let pairs: Vec<(usize, usize)> = (0..npairs)
            .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
            .filter(|(a, b)| a != b)
            .collect();
        if let Ok(s) = FinitePoset::from_pairs(n, &pairs) {
            return s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(bits: &[usize]) -> Mask {
        bits.iter().fold(0, |m, &b| m | (1 << b))
    }

    #[test]
    fn complement_examples() {
        // chain 0 < 1 < 2 (spec's 1 < 2 < 3 relabeled from zero)
        let s = FinitePoset::chain(3);
        assert_eq!(s.lower_complement(mask(&[1, 2])), mask(&[0, 1]));
        // empty set maps to the whole set
        assert_eq!(s.lower_complement(0), s.full_mask());
        assert_eq!(s.upper_complement(0), s.full_mask());
        // antichain {a,b}: lower complement of {a} is {a}
        let a = FinitePoset::antichain(2);
        assert_eq!(a.lower_complement(mask(&[0])), mask(&[0]));
    }

    #[test]
    fn complement_brute_force_oracle() {
        // oracle: direct scan over elements
        let posets = [FinitePoset::chain(4), FinitePoset::diamond(), FinitePoset::fence(5)];
        for s in &posets {
            for c in 0..=s.full_mask() {
                let mut expect = 0u32;
                for b in 0..s.size() {
                    if (0..s.size()).all(|j| c & (1 << j) == 0 || s.leq(b, j)) {
                        expect |= 1 << b;
                    }
                }
                assert_eq!(s.lower_complement(c), expect);
            }
        }
    }

    #[test]
    fn galois_property() {
        let s = FinitePoset::diamond();
        for c in 0..=s.full_mask() {
            for d in 0..=s.full_mask() {
                if c & !d == 0 {
                    // C subset of D implies lower(D) subset of lower(C)
                    assert_eq!(s.lower_complement(d) & !s.lower_complement(c), 0);
                }
            }
            // triple complement equals single complement
            let lc = s.lower_complement(c);
            let ulc = s.upper_complement(lc);
            assert_eq!(s.lower_complement(ulc), lc);
        }
    }

    #[test]
    fn completion_examples() {
        // two-element antichain with no bounds gives the four-element Boolean lattice
        let a = FinitePoset::antichain(2);
        let l = build_completion(&a, DEFAULT_COMPLETION_BOUND).unwrap();
        assert_eq!(l.len(), 4);
        l.verify_lattice_axioms().unwrap();

        // three-chain completes to itself
        let c = FinitePoset::chain(3);
        let lc = build_completion(&c, DEFAULT_COMPLETION_BOUND).unwrap();
        assert_eq!(lc.len(), 3);
        assert!(lc.embedding_is_onto());
        lc.verify_lattice_axioms().unwrap();

        // a complete lattice (the diamond) is reproduced
        let d = FinitePoset::diamond();
        let ld = build_completion(&d, DEFAULT_COMPLETION_BOUND).unwrap();
        assert_eq!(ld.len(), 4);
        assert!(ld.embedding_is_onto());

        // bound enforced
        assert!(build_completion(&FinitePoset::chain(5), 4).is_err());
    }

    #[test]
    fn completion_idempotent_small() {
        for n in 1..=4 {
            for s in enumerate_posets(n) {
                let l1 = build_completion(&s, 32).unwrap();
                l1.verify_lattice_axioms().unwrap();
                // completion of the completion (as a poset) is order isomorphic to it
                let size = l1.len();
                let mut leq = vec![false; size * size];
                for a in 0..size {
                    for b in 0..size {
                        leq[a * size + b] = l1.leq(a, b);
                    }
                }
                let lposet = FinitePoset::new(size, leq).unwrap();
                let l2 = build_completion(&lposet, 32).unwrap();
                assert_eq!(l2.len(), l1.len(), "idempotence fails for {s:?}");
                assert!(l2.embedding_is_onto());
            }
        }
    }

    #[test]
    fn extension_examples() {
        // full-domain map returns itself
        let s = FinitePoset::chain(3);
        let l = build_completion(&s, 16).unwrap();
        let f: Vec<Option<usize>> = l.embed.iter().map(|&e| Some(e)).collect();
        let ext = extend_monotone(&s, &l, &f, None, None).unwrap();
        assert_eq!(ext, l.embed);

        // diamond: bottom and top pinned to themselves, middles end up between
        let d = FinitePoset::diamond();
        let ld = build_completion(&d, 16).unwrap();
        let mut f = vec![None; 4];
        f[0] = Some(ld.embed[0]);
        f[3] = Some(ld.embed[3]);
        let ext = extend_monotone(&d, &ld, &f, None, None).unwrap();
        for mid in [1usize, 2] {
            assert!(ld.leq(ld.embed[0], ext[mid]));
            assert!(ld.leq(ext[mid], ld.embed[3]));
        }

        // one chain of a fence extends monotonically (exhaustive over maps)
        let fence = FinitePoset::fence(4);
        let lf = build_completion(&fence, 16).unwrap();
        for img0 in 0..lf.len() {
            for img1 in 0..lf.len() {
                if !lf.leq(img0, img1) {
                    continue;
                }
                let mut f = vec![None; 4];
                f[0] = Some(img0);
                f[1] = Some(img1);
                let ext = extend_monotone(&fence, &lf, &f, None, None).unwrap();
                assert_eq!(ext[0], img0);
                assert_eq!(ext[1], img1);
            }
        }
    }

    #[test]
    fn extension_rejects_nonmonotone() {
        let s = FinitePoset::chain(2);
        let l = build_completion(&s, 16).unwrap();
        let f = vec![Some(l.embed[1]), Some(l.embed[0])];
        assert!(extend_monotone(&s, &l, &f, None, None).is_err());
        // bad witness
        let g = vec![Some(l.embed[0]), Some(l.embed[1])];
        assert!(extend_monotone(&s, &l, &g, Some(&[1.0, 0.0]), None).is_err());
    }

    #[test]
    fn poset_enumeration_counts() {
        // numbers of posets on n unlabeled points
        assert_eq!(enumerate_posets(1).len(), 1);
        assert_eq!(enumerate_posets(2).len(), 2);
        assert_eq!(enumerate_posets(3).len(), 5);
        assert_eq!(enumerate_posets(4).len(), 16);
        assert_eq!(enumerate_posets(5).len(), 63);
    }

    #[test]
    fn random_poset_sampler_is_valid() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let s = random_poset(7, &mut rng);
            assert_eq!(s.size(), 7);
        }
    }
}
