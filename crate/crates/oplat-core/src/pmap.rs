//! Maps determined by their values on projections: table representation,
//! extension through chain decompositions, decoration checking, Schwarz
//! suites, coherent-lift cross sections, signatures, projection filters, and
//! the two obstruction harnesses (tensor retraction and winding number).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;

use crate::algebra::{
    chain_decomposition, AlgebraHandle, HermitianElement, ProjectionElement, StateFunctional,
};
use crate::error::{Error, Result};
use crate::projection::{vee, wedge_exact};

/// A map on a finite projection family (closed under complement) together
/// with its unit image and the decoration set it claims.
#[derive(Debug, Clone)]
pub struct PMapTable {
    pub domain_algebra: AlgebraHandle,
    pub codomain_algebra: AlgebraHandle,
    pub domain: Vec<ProjectionElement>,
    pub values: Vec<ProjectionElement>,
    pub unit_image: ProjectionElement,
    pub decorations_claimed: Vec<Decoration>,
}

impl PMapTable {
    pub fn new(
        domain_algebra: AlgebraHandle,
        codomain_algebra: AlgebraHandle,
        domain: Vec<ProjectionElement>,
        values: Vec<ProjectionElement>,
    ) -> Result<Self> {
        if domain.len() != values.len() || domain.is_empty() {
            return Err(Error::InvalidInput("domain/value length mismatch".into()));
        }
        let table = PMapTable {
            domain_algebra,
            codomain_algebra,
            domain,
            values,
            unit_image: ProjectionElement::one(codomain_algebra),
            decorations_claimed: Vec::new(),
        };
        table.validate()?;
        Ok(table)
    }

    fn validate(&self) -> Result<()> {
        // zero maps to zero, the unit must be present, monotonicity on the
        // stored family, closure under complements
        let zero_idx = self
            .find(&ProjectionElement::zero(self.domain_algebra))
            .ok_or_else(|| Error::InvalidInput("domain must contain 0".into()))?;
        if self.values[zero_idx].rank != 0 {
            return Err(Error::InvalidInput("the map must send 0 to 0".into()));
        }
        self.find(&ProjectionElement::one(self.domain_algebra))
            .ok_or_else(|| Error::InvalidInput("domain must contain 1".into()))?;
        for (i, p) in self.domain.iter().enumerate() {
            if self.find(&p.complement()).is_none() {
                return Err(Error::InvalidInput(
                    "domain must be closed under complements".into(),
                ));
            }
            for (j, q) in self.domain.iter().enumerate() {
                if p.leq(q) && !self.values[i].leq(&self.values[j]) {
                    return Err(Error::InvalidInput(format!(
                        "table is not monotone at pair ({i},{j})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The table with the unit image replaced (for non-unital sections).
    pub fn with_unit_image(mut self, unit: ProjectionElement) -> Self {
        self.unit_image = unit;
        self
    }

    pub fn identity(algebra: AlgebraHandle, family: Vec<ProjectionElement>) -> Result<Self> {
        Self::new(algebra, algebra, family.clone(), family)
    }

    pub fn find(&self, p: &ProjectionElement) -> Option<usize> {
        self.domain.iter().position(|d| d.approx_eq(p, 1e-7))
    }

    pub fn value_of(&self, p: &ProjectionElement) -> Result<&ProjectionElement> {
        self.find(p)
            .map(|i| &self.values[i])
            .ok_or_else(|| Error::InvalidInput("projection not in the table domain".into()))
    }
}

/// sigma(x) = sum_k alpha_k s(p_k) through the chain decomposition of a
/// positive element whose chain projections lie in the table domain.
pub fn extend_pmap(s: &PMapTable, x: &HermitianElement) -> Result<HermitianElement> {
    let chain = chain_decomposition(x)?;
    let mut out = HermitianElement::zero(s.codomain_algebra);
    for (alpha, p) in &chain {
        let v = s.value_of(p)?;
        out = out.add(&v.base.scale(*alpha))?;
    }
    Ok(out)
}

/// Homogeneized extension to self-adjoint elements via the minimal positive
/// decomposition.
pub fn extend_pmap_selfadjoint(s: &PMapTable, x: &HermitianElement) -> Result<HermitianElement> {
    let plus = extend_pmap(s, &x.positive_part())?;
    let minus = extend_pmap(s, &x.negative_part())?;
    plus.sub(&minus)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decoration {
    /// orthogonal pairs map to orthogonal pairs
    O,
    /// coorthogonal pairs map to coorthogonal pairs
    Co,
    /// complements map to complements
    C,
    /// commuting pairs map to commuting pairs
    A,
    /// wedges of commuting pairs are preserved
    AWedge,
    /// vees of commuting pairs are preserved
    AVee,
    /// the mixed condition on commuting minus-signed pairs
    Ax,
    /// vees of minus-signed pairs landing in the minus class are preserved
    Xx,
}

/// Explicit data for the signed decorations: the minus-class flags and the
/// construction-time order, supplied by the caller (never synthesized).
#[derive(Debug, Clone, Default)]
pub struct DecorationContext {
    pub minus: Vec<bool>,
    pub order: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct DecorationReport {
    pub decoration: Decoration,
    pub checked: usize,
    pub failures: Vec<DecorationFailure>,
}

#[derive(Debug, Clone)]
pub struct DecorationFailure {
    pub pair: (usize, usize),
    pub detail: String,
}

impl DecorationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks one decoration on the listed index pairs, reporting witnesses for
/// every violation. The ax/xx checks also verify the derived decoration `a`
/// on the same pairs.
pub fn check_decoration(
    s: &PMapTable,
    decoration: Decoration,
    pairs: &[(usize, usize)],
    ctx: &DecorationContext,
) -> Result<DecorationReport> {
    let mut failures = Vec::new();
    let mut checked = 0usize;
    let val = |i: usize| -> &ProjectionElement { &s.values[i] };
    for &(i, j) in pairs {
        if i >= s.domain.len() || j >= s.domain.len() {
            return Err(Error::InvalidInput("pair index out of range".into()));
        }
        let p = &s.domain[i];
        let q = &s.domain[j];
        checked += 1;
        match decoration {
            Decoration::O => {
                if p.orthogonal_to(q) && !val(i).orthogonal_to(val(j)) {
                    failures.push(DecorationFailure {
                        pair: (i, j),
                        detail: "orthogonal pair maps to a non-orthogonal pair".into(),
                    });
                }
            }
            Decoration::Co => {
                let co = p.commutes_with(q)
                    && vee(p, q)?.rank == s.domain_algebra.dim();
                if co {
                    let imgs_co = val(i).commutes_with(val(j))
                        && vee(val(i), val(j))?
                            .approx_eq(&s.unit_image, 1e-7);
                    if !imgs_co {
                        failures.push(DecorationFailure {
                            pair: (i, j),
                            detail: "coorthogonal pair not preserved".into(),
                        });
                    }
                }
            }
            Decoration::C => {
                if p.approx_eq(&q.complement(), 1e-7) {
                    let expect = s.unit_image.base.sub(&val(j).base)?;
                    if val(i).base.distance(&expect) > 1e-7 {
                        failures.push(DecorationFailure {
                            pair: (i, j),
                            detail: "complementary pair not preserved".into(),
                        });
                    }
                }
            }
            Decoration::A => {
                if p.commutes_with(q) && !val(i).commutes_with(val(j)) {
                    failures.push(DecorationFailure {
                        pair: (i, j),
                        detail: "commuting pair maps to a non-commuting pair".into(),
                    });
                }
            }
            Decoration::AWedge => {
                if p.commutes_with(q) {
                    let lhs = s.value_of(&wedge_exact(p, q)?)?;
                    let rhs = wedge_exact(val(i), val(j))?;
                    if !lhs.approx_eq(&rhs, 1e-7) {
                        failures.push(DecorationFailure {
                            pair: (i, j),
                            detail: "wedge of a commuting pair not preserved".into(),
                        });
                    }
                }
            }
            Decoration::AVee => {
                if p.commutes_with(q) {
                    let lhs = s.value_of(&vee(p, q)?)?;
                    let rhs = vee(val(i), val(j))?;
                    if !lhs.approx_eq(&rhs, 1e-7) {
                        failures.push(DecorationFailure {
                            pair: (i, j),
                            detail: "vee of a commuting pair not preserved".into(),
                        });
                    }
                }
            }
            Decoration::Ax => {
                if ctx.minus.len() != s.domain.len() {
                    return Err(Error::InvalidInput(
                        "ax check requires the signed context".into(),
                    ));
                }
                let ordered = ctx.order.contains(&(i, j));
                if ordered && ctx.minus[i] && ctx.minus[j] && p.commutes_with(q) {
                    // s(e v f^c) = s(e) v s(f^c)  iff  s(e^c ^ f) = s(e^c) ^ s(f)
                    let fc = q.complement();
                    let lhs_elem = s.value_of(&vee(p, &fc)?)?;
                    let lhs_ok = lhs_elem.approx_eq(&vee(val(i), s.value_of(&fc)?)?, 1e-7);
                    let ec = p.complement();
                    let rhs_elem = s.value_of(&wedge_exact(&ec, q)?)?;
                    let rhs_ok =
                        rhs_elem.approx_eq(&wedge_exact(s.value_of(&ec)?, val(j))?, 1e-7);
                    if lhs_ok != rhs_ok {
                        failures.push(DecorationFailure {
                            pair: (i, j),
                            detail: "mixed condition sides disagree".into(),
                        });
                    }
                    // derived decoration a
                    if !val(i).commutes_with(val(j)) {
                        failures.push(DecorationFailure {
                            pair: (i, j),
                            detail: "derived commutation fails".into(),
                        });
                    }
                }
            }
            Decoration::Xx => {
                if ctx.minus.len() != s.domain.len() {
                    return Err(Error::InvalidInput(
                        "xx check requires the signed context".into(),
                    ));
                }
                let join = vee(p, q)?;
                let join_idx = s
                    .find(&join)
                    .ok_or_else(|| Error::InvalidInput("vee missing from domain".into()))?;
                if ctx.minus[i] && ctx.minus[j] && ctx.minus[join_idx] {
                    let rhs = vee(val(i), val(j))?;
                    if !s.values[join_idx].approx_eq(&rhs, 1e-7) {
                        failures.push(DecorationFailure {
                            pair: (i, j),
                            detail: "vee inside the minus class not preserved".into(),
                        });
                    }
                    if p.commutes_with(q) && !val(i).commutes_with(val(j)) {
                        failures.push(DecorationFailure {
                            pair: (i, j),
                            detail: "derived commutation fails".into(),
                        });
                    }
                }
            }
        }
    }
    Ok(DecorationReport {
        decoration,
        checked,
        failures,
    })
}

#[derive(Debug, Clone)]
pub struct SchwarzSuiteRow {
    pub margin: f64,
    pub reversed_margin: f64,
}

#[derive(Debug, Clone)]
pub struct SchwarzSuiteReport {
    pub rows: Vec<SchwarzSuiteRow>,
}

impl SchwarzSuiteReport {
    /// Least margin of sigma(x^2) - sigma(x)^2 over the instances.
    pub fn min_margin(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.margin)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_reversed_margin(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.reversed_margin)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates the Schwarz inequality margins sigma(x^2) >= sigma(x)^2 for the
/// homogeneized extension on the given self-adjoint instances. The reversed
/// margin tracks the convex-type inequality. Decorations the table claims are
/// verified on all domain pairs first.
pub fn schwarz_suite(s: &PMapTable, instances: &[HermitianElement]) -> Result<SchwarzSuiteReport> {
    if !s.decorations_claimed.is_empty() {
        let pairs: Vec<(usize, usize)> = (0..s.domain.len())
            .flat_map(|i| (0..s.domain.len()).map(move |j| (i, j)))
            .collect();
        let ctx = DecorationContext::default();
        for d in &s.decorations_claimed {
            let rep = check_decoration(s, *d, &pairs, &ctx)?;
            if !rep.passed() {
                return Err(Error::InvalidInput(format!(
                    "claimed decoration {d:?} fails on {} pairs",
                    rep.failures.len()
                )));
            }
        }
    }
    let mut rows = Vec::with_capacity(instances.len());
    for x in instances {
        let sq = crate::algebra::func_calc(x, crate::algebra::FuncKind::Square)?;
        let lhs = extend_pmap(s, &sq)?;
        let sx = extend_pmap_selfadjoint(s, x)?;
        let sx2 = HermitianElement::from_matrix(
            sx.algebra,
            {
                let m = sx.to_matrix();
                &m * &m
            },
        )
        .or_else(|_| {
            // commutative codomain
            let t = sx.as_tuple()?;
            HermitianElement::from_tuple(sx.algebra, t.iter().map(|v| v * v).collect())
        })?;
        let diff = lhs.sub(&sx2)?;
        rows.push(SchwarzSuiteRow {
            margin: diff.min_eigenvalue(),
            reversed_margin: diff.scale(-1.0).min_eigenvalue(),
        });
    }
    Ok(SchwarzSuiteReport { rows })
}

// ---------------------------------------------------------------------------
// Coherent lift cross sections for quotients of finite commutative algebras
// ---------------------------------------------------------------------------

/// A surjection of finite commutative algebras described by the partition of
/// the big spectrum into classes indexed by the small spectrum.
#[derive(Debug, Clone)]
pub struct QuotientSpec {
    /// class_of[i] = the small-spectrum point carrying big point i.
    pub class_of: Vec<usize>,
    pub classes: usize,
}

impl QuotientSpec {
    pub fn new(class_of: Vec<usize>, classes: usize) -> Result<Self> {
        let mut seen = vec![false; classes];
        for &c in &class_of {
            if c >= classes {
                return Err(Error::InvalidInput("class index out of range".into()));
            }
            seen[c] = true;
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::InvalidInput("class map is not surjective".into()));
        }
        Ok(QuotientSpec {
            class_of,
            classes,
        })
    }

    pub fn big_size(&self) -> usize {
        self.class_of.len()
    }

    /// Minimal representative of each class.
    pub fn representatives(&self) -> Vec<usize> {
        let mut reps = vec![usize::MAX; self.classes];
        for (i, &c) in self.class_of.iter().enumerate() {
            if reps[c] == usize::MAX {
                reps[c] = i;
            }
        }
        reps
    }

    /// q on projections: a subset of the big spectrum maps to the set of
    /// classes whose representative it contains.
    pub fn q_mask(&self, big_mask: u64) -> u64 {
        let reps = self.representatives();
        let mut out = 0u64;
        for (cls, &r) in reps.iter().enumerate() {
            if big_mask & (1 << r) != 0 {
                out |= 1 << cls;
            }
        }
        out
    }

    /// Canonical pullback section: the union of the classes in the subset.
    pub fn pullback_mask(&self, small_mask: u64) -> u64 {
        let mut out = 0u64;
        for (i, &c) in self.class_of.iter().enumerate() {
            if small_mask & (1 << c) != 0 {
                out |= 1 << i;
            }
        }
        out
    }
}

fn mask_projection(alg: AlgebraHandle, mask: u64) -> ProjectionElement {
    let m = alg.dim();
    let v: Vec<f64> = (0..m)
        .map(|i| if mask & (1 << i) != 0 { 1.0 } else { 0.0 })
        .collect();
    ProjectionElement::new(HermitianElement::from_tuple(alg, v).expect("tuple"))
        .expect("indicator projection")
}

/// Constructs a monotone complemented cross section of the quotient on the
/// full codomain projection lattice, coherent with wedges and vees, by the
/// inductive clamp-and-correct procedure. Preimages are seeded-random so the
/// correction passes are actually exercised; the result is verified
/// exhaustively.
pub fn coherent_lift(spec: &QuotientSpec, seed: u64) -> Result<PMapTable> {
    let ky = spec.classes;
    let kx = spec.big_size();
    if ky > 16 || kx > 16 {
        return Err(Error::InvalidInput("coherent lift is desk-scale only".into()));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let full_y: u64 = (1 << ky) - 1;
    let full_x: u64 = (1 << kx) - 1;
    let reps = spec.representatives();
    let nonreps: Vec<usize> = (0..kx).filter(|i| !reps.contains(i)).collect();

    for _attempt in 0..24 {
        if let Ok(table) = coherent_lift_attempt(spec, full_y, full_x, &nonreps, &mut rng) {
            return Ok(table);
        }
    }
    // The canonical pullback is itself a homomorphism section; fall back to
    // it only if every randomized attempt failed verification.
    let mut assign = vec![0u64; 1 << ky];
    for m in 0..=full_y {
        assign[m as usize] = spec.pullback_mask(m);
    }
    build_lift_table(spec, &assign)
}

fn coherent_lift_attempt(
    spec: &QuotientSpec,
    full_y: u64,
    full_x: u64,
    nonreps: &[usize],
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<PMapTable> {
    let ky = spec.classes;
    let n = (1usize << ky) as u64;
    let mut assigned = vec![false; n as usize];
    let mut s = vec![0u64; n as usize];
    s[0] = 0;
    s[full_y as usize] = full_x;
    assigned[0] = true;
    assigned[full_y as usize] = true;
    // complement-paired enumeration, atoms first
    let mut order: Vec<u64> = (1..full_y).collect();
    order.sort_by_key(|&m| (m.count_ones(), m));
    for &e in &order {
        if assigned[e as usize] {
            continue;
        }
        let below = |s: &Vec<u64>, assigned: &Vec<bool>, e: u64| -> u64 {
            let mut acc = 0u64;
            for g in 0..n {
                if assigned[g as usize] && g & !e == 0 {
                    acc |= s[g as usize];
                }
            }
            acc
        };
        let above = |s: &Vec<u64>, assigned: &Vec<bool>, e: u64| -> u64 {
            let mut acc = full_x;
            for g in 0..n {
                if assigned[g as usize] && e & !g == 0 {
                    acc &= s[g as usize];
                }
            }
            acc
        };
        let lo = below(&s, &assigned, e);
        let hi = above(&s, &assigned, e);
        // random preimage: representatives of e plus a random batch of
        // non-representative points
        let mut pre = spec.pullback_mask(e) & {
            let mut keep = full_x;
            for &i in nonreps {
                if rng.random_bool(0.5) {
                    keep &= !(1 << i);
                }
            }
            keep
        };
        for &i in nonreps {
            if rng.random_bool(0.25) {
                pre |= 1 << i;
            }
        }
        let mut z = (lo | pre) & hi;
        // correction passes: enforce wedge/vee coherence against assigned
        // elements
        for _pass in 0..4 * ky {
            let mut changed = false;
            for g in 0..n {
                if !assigned[g as usize] {
                    continue;
                }
                let meet = e & g;
                if assigned[meet as usize] {
                    let want = s[meet as usize];
                    if z & s[g as usize] != want {
                        let nz = (z & !s[g as usize]) | want;
                        if nz != z {
                            z = nz;
                            changed = true;
                        }
                    }
                }
                let join = e | g;
                if assigned[join as usize] {
                    let want = s[join as usize];
                    if z | s[g as usize] != want {
                        let nz = ((z | (want & !(z | s[g as usize]))) & hi) & want;
                        if nz != z {
                            z = nz;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if spec.q_mask(z) != e {
            return Err(Error::InvalidInput("cross-section property lost".into()));
        }
        s[e as usize] = z;
        s[(full_y ^ e) as usize] = full_x ^ z;
        assigned[e as usize] = true;
        assigned[(full_y ^ e) as usize] = true;
    }
    // exhaustive verification: section, monotone, complemented, lattice map
    for e in 0..n {
        if spec.q_mask(s[e as usize]) != e {
            return Err(Error::InvalidInput("not a section".into()));
        }
        if s[(full_y ^ e) as usize] != full_x ^ s[e as usize] {
            return Err(Error::InvalidInput("not complemented".into()));
        }
        for f in 0..n {
            if e & !f == 0 && s[e as usize] & !s[f as usize] != 0 {
                return Err(Error::InvalidInput("not monotone".into()));
            }
            if s[(e & f) as usize] != s[e as usize] & s[f as usize] {
                return Err(Error::InvalidInput("wedge not preserved".into()));
            }
            if s[(e | f) as usize] != s[e as usize] | s[f as usize] {
                return Err(Error::InvalidInput("vee not preserved".into()));
            }
        }
    }
    build_lift_table(spec, &s)
}

fn build_lift_table(spec: &QuotientSpec, assign: &[u64]) -> Result<PMapTable> {
    let dom_alg = AlgebraHandle::commutative(spec.classes);
    let cod_alg = AlgebraHandle::commutative(spec.big_size());
    let mut domain = Vec::with_capacity(assign.len());
    let mut values = Vec::with_capacity(assign.len());
    for (m, &img) in assign.iter().enumerate() {
        domain.push(mask_projection(dom_alg, m as u64));
        values.push(mask_projection(cod_alg, img));
    }
    PMapTable::new(dom_alg, cod_alg, domain, values)
}

/// Verifies q(s(e)) = e on every codomain projection.
pub fn verify_section(spec: &QuotientSpec, table: &PMapTable) -> Result<bool> {
    let ky = spec.classes;
    for m in 0u64..(1 << ky) {
        let p = mask_projection(table.domain_algebra, m);
        let v = table.value_of(&p)?;
        let vm = v
            .base
            .as_tuple()?
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > 0.5)
            .fold(0u64, |acc, (i, _)| acc | (1 << i));
        if spec.q_mask(vm) != m {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Signatures
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Minus,
    Plus,
}

/// A complement-compatible two-coloring of projections: a reference pure
/// state with threshold one half, with lexicographic tie-breaking by further
/// reference states.
#[derive(Debug, Clone)]
pub struct Signature {
    pub reference: StateFunctional,
    pub tie_breaks: Vec<StateFunctional>,
}

impl Signature {
    pub fn new(reference: StateFunctional, tie_breaks: Vec<StateFunctional>) -> Self {
        Signature {
            reference,
            tie_breaks,
        }
    }

    pub fn random(dim: usize, rng: &mut impl Rng) -> Result<Self> {
        let draw = |rng: &mut dyn FnMut() -> f64| -> Result<StateFunctional> {
            StateFunctional::vector(DVector::from_fn(dim, |_, _| {
                Complex64::new(rng(), rng())
            }))
        };
        let mut f = || rng.random_range(-1.0..1.0);
        let reference = draw(&mut f)?;
        let tie = draw(&mut f)?;
        Ok(Signature::new(reference, vec![tie]))
    }

    /// Classification; errors when every reference ties at the threshold.
    pub fn classify(&self, p: &ProjectionElement) -> Result<Sign> {
        const TIE: f64 = 1e-9;
        for rho in std::iter::once(&self.reference).chain(self.tie_breaks.iter()) {
            let v = rho.eval(&p.base)?;
            if v > 0.5 + TIE {
                return Ok(Sign::Plus);
            }
            if v < 0.5 - TIE {
                return Ok(Sign::Minus);
            }
        }
        Err(Error::InvalidInput(
            "degenerate signature: all references tie".into(),
        ))
    }
}

/// Outcome of a polar-condition probe.
#[derive(Debug, Clone)]
pub enum PolarProbe {
    PolarOnFamily { pairs_checked: usize },
    Violation {
        e: ProjectionElement,
        f: ProjectionElement,
    },
}

/// Checks the polar condition on the given orthogonal pairs: when the sum
/// lands in the plus class, one of the summands must.
pub fn signature_probe(
    sig: &Signature,
    pairs: &[(ProjectionElement, ProjectionElement)],
) -> Result<PolarProbe> {
    let mut checked = 0usize;
    for (e, f) in pairs {
        if !e.orthogonal_to(f) {
            return Err(Error::InvalidInput("probe pair is not orthogonal".into()));
        }
        let sum = ProjectionElement::new(e.base.add(&f.base)?)?;
        checked += 1;
        if sig.classify(&sum)? == Sign::Plus
            && sig.classify(e)? == Sign::Minus
            && sig.classify(f)? == Sign::Minus
        {
            return Ok(PolarProbe::Violation {
                e: e.clone(),
                f: f.clone(),
            });
        }
    }
    Ok(PolarProbe::PolarOnFamily {
        pairs_checked: checked,
    })
}

/// Randomized search for a polar violation over rank-one orthogonal pairs.
pub fn search_polar_violation(
    sig: &Signature,
    dim: usize,
    samples: usize,
    seed: u64,
) -> Result<Option<(ProjectionElement, ProjectionElement)>> {
    let alg = AlgebraHandle::matrix(dim);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let raw = DMatrix::from_fn(dim, 2, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let qr = raw.qr();
        let q = qr.q();
        let v1: DVector<Complex64> = q.column(0).into();
        let v2: DVector<Complex64> = q.column(1).into();
        let e = ProjectionElement::from_span(alg, &DMatrix::from_columns(&[v1.column(0)]))?;
        let f = ProjectionElement::from_span(alg, &DMatrix::from_columns(&[v2.column(0)]))?;
        if let PolarProbe::Violation { e, f } = signature_probe(sig, &[(e, f)])? {
            return Ok(Some((e, f)));
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Finite lattices, projection filters and quotients
// ---------------------------------------------------------------------------

/// An explicit finite complemented lattice of projections with full tables.
#[derive(Debug, Clone)]
pub struct FiniteLattice {
    pub algebra: AlgebraHandle,
    pub elements: Vec<ProjectionElement>,
    pub meet: Vec<Vec<usize>>,
    pub join: Vec<Vec<usize>>,
    pub compl: Vec<usize>,
    pub top: usize,
    pub bottom: usize,
}

impl FiniteLattice {
    /// The Boolean lattice of subsets of a k-point spectrum.
    pub fn boolean(k: usize) -> Result<Self> {
        if k > 16 {
            return Err(Error::InvalidInput("boolean lattice too large".into()));
        }
        let alg = AlgebraHandle::commutative(k);
        let n = 1usize << k;
        let elements: Vec<ProjectionElement> =
            (0..n).map(|m| mask_projection(alg, m as u64)).collect();
        let meet = (0..n)
            .map(|a| (0..n).map(|b| a & b).collect())
            .collect();
        let join = (0..n)
            .map(|a| (0..n).map(|b| a | b).collect())
            .collect();
        let compl = (0..n).map(|a| (n - 1) ^ a).collect();
        Ok(FiniteLattice {
            algebra: alg,
            elements,
            meet,
            join,
            compl,
            top: n - 1,
            bottom: 0,
        })
    }

    /// Builds the tables from an explicit projection list, verifying closure.
    pub fn from_projections(
        algebra: AlgebraHandle,
        elements: Vec<ProjectionElement>,
    ) -> Result<Self> {
        let n = elements.len();
        let find = |p: &ProjectionElement| -> Result<usize> {
            elements
                .iter()
                .position(|e| e.approx_eq(p, 1e-7))
                .ok_or_else(|| Error::InvalidInput("lattice not closed".into()))
        };
        let mut meet = vec![vec![0; n]; n];
        let mut join = vec![vec![0; n]; n];
        let mut compl = vec![0; n];
        for i in 0..n {
            compl[i] = find(&elements[i].complement())?;
            for j in 0..n {
                meet[i][j] = find(&wedge_exact(&elements[i], &elements[j])?)?;
                join[i][j] = find(&vee(&elements[i], &elements[j])?)?;
            }
        }
        let bottom = find(&ProjectionElement::zero(algebra))?;
        let top = find(&ProjectionElement::one(algebra))?;
        Ok(FiniteLattice {
            algebra,
            elements,
            meet,
            join,
            compl,
            top,
            bottom,
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.meet[a][b] == a
    }

    /// Atoms: minimal nonzero elements.
    pub fn atoms(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&a| {
                a != self.bottom
                    && (0..self.len())
                        .all(|b| b == a || b == self.bottom || !self.leq(b, a))
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ProjectionFilter {
    pub members: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct FilterReport {
    pub is_filter: bool,
    pub is_ideal: bool,
    pub is_ultra: bool,
    pub quotient: QuotientLattice,
}

#[derive(Debug, Clone)]
pub struct QuotientLattice {
    /// class index of each lattice element
    pub class_of: Vec<usize>,
    pub classes: usize,
    pub meet_compatible: bool,
    pub complement_compatible: bool,
}

/// Verifies the filter axioms, classifies ideal/ultra behavior, and computes
/// the quotient modulo the induced equivalence (p ~ p v f^c, p ~ p ^ f).
pub fn filter_ops(lattice: &FiniteLattice, filter: &ProjectionFilter) -> Result<FilterReport> {
    let n = lattice.len();
    let in_filter = {
        let mut flags = vec![false; n];
        for &m in &filter.members {
            if m >= n {
                return Err(Error::InvalidInput("filter member out of range".into()));
            }
            flags[m] = true;
        }
        flags
    };
    let mut is_filter = true;
    for e in 0..n {
        if !in_filter[e] {
            continue;
        }
        if in_filter[lattice.compl[e]] {
            is_filter = false;
        }
        for f in 0..n {
            if lattice.leq(e, f) && !in_filter[f] {
                is_filter = false;
            }
            if in_filter[f] && !in_filter[lattice.meet[e][f]] {
                is_filter = false;
            }
        }
    }
    if !is_filter {
        return Err(Error::InvalidInput("not a projection filter".into()));
    }
    // ideal: f in F implies f_p = f^p + f^(p^c) in F for every p
    let mut is_ideal = true;
    for f in 0..n {
        if !in_filter[f] {
            continue;
        }
        for p in 0..n {
            let fp = lattice.join[lattice.meet[f][p]][lattice.meet[f][lattice.compl[p]]];
            if !in_filter[fp] {
                is_ideal = false;
            }
        }
    }
    let is_ultra = (0..n).all(|p| in_filter[p] || in_filter[lattice.compl[p]]);
    // quotient: union-find over the generated simple equivalences
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for p in 0..n {
        for f in 0..n {
            if !in_filter[f] {
                continue;
            }
            for target in [
                lattice.join[p][lattice.compl[f]],
                lattice.meet[p][f],
            ] {
                let (a, b) = (root(&mut parent, p), root(&mut parent, target));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut class_ids = Vec::new();
    let mut class_of = vec![0usize; n];
    for p in 0..n {
        let r = root(&mut parent, p);
        let id = match class_ids.iter().position(|&c| c == r) {
            Some(i) => i,
            None => {
                class_ids.push(r);
                class_ids.len() - 1
            }
        };
        class_of[p] = id;
    }
    // compatibility with the operations
    let mut meet_compatible = true;
    let mut complement_compatible = true;
    for p in 0..n {
        for p2 in 0..n {
            if class_of[p] != class_of[p2] {
                continue;
            }
            if class_of[lattice.compl[p]] != class_of[lattice.compl[p2]] {
                complement_compatible = false;
            }
            for q in 0..n {
                if class_of[lattice.meet[p][q]] != class_of[lattice.meet[p2][q]] {
                    meet_compatible = false;
                }
            }
        }
    }
    Ok(FilterReport {
        is_filter,
        is_ideal,
        is_ultra,
        quotient: QuotientLattice {
            class_of,
            classes: class_ids.len(),
            meet_compatible,
            complement_compatible,
        },
    })
}

// ---------------------------------------------------------------------------
// The tensor retraction obstruction
// ---------------------------------------------------------------------------

/// Tensor data for the retraction obstruction in M_2 (x) M_k.
#[derive(Debug, Clone)]
pub struct GammaContext {
    pub k: usize,
    pub algebra: AlgebraHandle,
    /// Symmetry in the second factor.
    pub v_symmetry: DMatrix<Complex64>,
    /// The conjugating unitary producing the candidate basis.
    pub conjugator: DMatrix<Complex64>,
}

pub const GAMMA_DEFAULT_SEED: u64 = 0xC0FFEE;

impl GammaContext {
    /// Seeded context: random symmetry in the second factor and a mixing
    /// rotation in the first.
    pub fn seeded(k: usize, seed: u64) -> Result<Self> {
        if !(2..=4).contains(&k) {
            return Err(Error::InvalidInput("k must lie in 2..=4".into()));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = 2 * k;
        let algebra = AlgebraHandle::matrix(n);
        // random symmetry: 1 - 2 r for a random rank floor(k/2) projection
        let span = DMatrix::from_fn(k, k / 2, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let proj = ProjectionElement::from_span(AlgebraHandle::matrix(k), &span)?;
        let v_symmetry =
            DMatrix::<Complex64>::identity(k, k) - proj.base.to_matrix().scale(2.0);
        // mixing unitary in the first factor
        let raw = DMatrix::from_fn(2, 2, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let g = raw.qr().q();
        let f = kron2(&DMatrix::from_row_slice(2, 2, &[
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]), &DMatrix::identity(k, k))
            + kron2(&DMatrix::from_row_slice(2, 2, &[
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ]), &v_symmetry);
        let conjugator = &f * kron2(&g, &DMatrix::identity(k, k));
        Ok(GammaContext {
            k,
            algebra,
            v_symmetry,
            conjugator,
        })
    }

    /// Context with the identity symmetry: the dominating values coincide and
    /// no forcing can occur.
    pub fn commuting(k: usize) -> Result<Self> {
        let mut ctx = Self::seeded(k, GAMMA_DEFAULT_SEED)?;
        ctx.v_symmetry = DMatrix::identity(k, k);
        let f = DMatrix::<Complex64>::identity(2 * k, 2 * k);
        ctx.conjugator = f;
        Ok(ctx)
    }
}

fn kron2(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Splits a unit vector in C^2 (x) C^k along a rank-one direction eta of the
/// first factor: w = eta (x) a + eta_perp (x) b.
fn split_along(
    w: &DVector<Complex64>,
    eta: &DVector<Complex64>,
    eta_perp: &DVector<Complex64>,
    k: usize,
) -> (DVector<Complex64>, DVector<Complex64>) {
    let mut a = DVector::<Complex64>::zeros(k);
    let mut b = DVector::<Complex64>::zeros(k);
    for m in 0..k {
        for i in 0..2 {
            a[m] += eta[i].conj() * w[i * k + m];
            b[m] += eta_perp[i].conj() * w[i * k + m];
        }
    }
    (a, b)
}

/// One certified domination: a two-dimensional product-sum projection from
/// the sublattice dominating the candidate, together with the value any
/// monotone extension of the retraction is forced below.
#[derive(Debug, Clone)]
pub struct DominationCertificate {
    pub dominator: ProjectionElement,
    pub retract_value: ProjectionElement,
}

#[derive(Debug, Clone)]
pub struct ForcedProjection {
    pub projection: ProjectionElement,
    pub certificates: Vec<DominationCertificate>,
    /// Distance between the two distinct retract values.
    pub value_gap: f64,
}

#[derive(Debug, Clone)]
pub struct ObstructionWitness {
    pub k: usize,
    pub parts: Vec<ForcedProjection>,
}

/// Outcome of a single candidate evaluation.
#[derive(Debug, Clone)]
pub enum GammaOutcome {
    /// The candidate lies in the product sublattice: the retraction value is
    /// returned.
    InLattice(ProjectionElement),
    /// Two distinct dominating values force any monotone extension to zero.
    Forced(ForcedProjection),
    /// All dominating values agree: no forcing from this family.
    NoForcing,
}

/// Evaluates the forcing family on the rank-one projection with range vector
/// `w` (assumed unit).
pub fn gamma_force_probe(
    ctx: &GammaContext,
    sig: &Signature,
    w: &DVector<Complex64>,
) -> Result<GammaOutcome> {
    let k = ctx.k;
    let alg_k = AlgebraHandle::matrix(k);
    let alg2 = AlgebraHandle::matrix(2);
    let r = ProjectionElement::from_span(ctx.algebra, &DMatrix::from_columns(&[w.column(0)]))?;
    // candidate first-factor directions
    let mut etas: Vec<(DVector<Complex64>, DVector<Complex64>)> = Vec::new();
    let e0 = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
    let e1 = DVector::from_vec(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
    etas.push((e0.clone(), e1.clone()));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    etas.push((
        DVector::from_vec(vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)]),
        DVector::from_vec(vec![Complex64::new(s, 0.0), Complex64::new(-s, 0.0)]),
    ));
    etas.push((
        DVector::from_vec(vec![Complex64::new(s, 0.0), Complex64::new(0.0, s)]),
        DVector::from_vec(vec![Complex64::new(s, 0.0), Complex64::new(0.0, -s)]),
    ));
    let mut values: Vec<ProjectionElement> = Vec::new();
    let mut certs: Vec<DominationCertificate> = Vec::new();
    for (eta, eta_perp) in &etas {
        let (a, b) = split_along(w, eta, eta_perp, k);
        if a.norm() < 1e-9 || b.norm() < 1e-9 {
            // product-aligned: the candidate lies in the sublattice for this
            // direction
            let (dir, vec) = if a.norm() >= 1e-9 {
                (eta, a)
            } else {
                (eta_perp, b)
            };
            let p2 = ProjectionElement::from_span(
                alg2,
                &DMatrix::from_columns(&[dir.column(0)]),
            )?;
            let qk = ProjectionElement::from_span(
                alg_k,
                &DMatrix::from_columns(&[vec.column(0)]),
            )?;
            let tau = sig.classify(&p2)?;
            let value = if tau == Sign::Plus {
                qk
            } else {
                ProjectionElement::zero(alg_k)
            };
            return Ok(GammaOutcome::InLattice(value));
        }
        let ah = ProjectionElement::from_span(alg_k, &DMatrix::from_columns(&[a.column(0)]))?;
        let bh = ProjectionElement::from_span(alg_k, &DMatrix::from_columns(&[b.column(0)]))?;
        let p2 = ProjectionElement::from_span(alg2, &DMatrix::from_columns(&[eta.column(0)]))?;
        let p2c = ProjectionElement::from_span(
            alg2,
            &DMatrix::from_columns(&[eta_perp.column(0)]),
        )?;
        let dom = kron2(&p2.base.to_matrix(), &ah.base.to_matrix())
            + kron2(&p2c.base.to_matrix(), &bh.base.to_matrix());
        let dom = ProjectionElement::new(HermitianElement::from_matrix(ctx.algebra, dom)?)?;
        // certified domination
        let gap = dom.base.sub(&r.base)?.min_eigenvalue();
        if gap < -1e-8 {
            return Err(Error::WitnessFailure(format!(
                "dominator fails by {gap:.3e}"
            )));
        }
        let tau = sig.classify(&p2)?;
        let value = if tau == Sign::Plus { ah } else { bh };
        certs.push(DominationCertificate {
            dominator: dom,
            retract_value: value.clone(),
        });
        values.push(value);
    }
    // two distinct values force the candidate to zero
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            let gap = values[i].base.distance(&values[j].base);
            if gap > 1e-6 {
                let meet = wedge_exact(&values[i], &values[j])?;
                if meet.rank == 0 {
                    return Ok(GammaOutcome::Forced(ForcedProjection {
                        projection: r,
                        certificates: vec![certs[i].clone(), certs[j].clone()],
                        value_gap: gap,
                    }));
                }
            }
        }
    }
    Ok(GammaOutcome::NoForcing)
}

/// Outcome of the full decomposition attempt.
#[derive(Debug, Clone)]
pub enum GammaWitnessOutcome {
    Witness(ObstructionWitness),
    /// Some candidate failed to force (the family's values agreed, or the
    /// candidate fell back into the sublattice).
    NoForcing { candidate: usize },
}

/// Full obstruction attempt against a given context: an orthogonal
/// decomposition of the identity by forced-to-zero minimal projections.
pub fn gamma_with_context(
    ctx: &GammaContext,
    sig: &Signature,
) -> Result<GammaWitnessOutcome> {
    let k = ctx.k;
    let n = 2 * k;
    let mut parts = Vec::with_capacity(n);
    for i in 0..2usize {
        for a in 0..k {
            let mut base = DVector::<Complex64>::zeros(n);
            base[i * k + a] = Complex64::new(1.0, 0.0);
            let w = &ctx.conjugator * base;
            match gamma_force_probe(ctx, sig, &w)? {
                GammaOutcome::Forced(fp) => parts.push(fp),
                GammaOutcome::InLattice(_) | GammaOutcome::NoForcing => {
                    return Ok(GammaWitnessOutcome::NoForcing {
                        candidate: i * k + a,
                    })
                }
            }
        }
    }
    // verify orthogonality and completeness of the decomposition
    let alg = ctx.algebra;
    let mut sum = HermitianElement::zero(alg);
    for (i, p) in parts.iter().enumerate() {
        sum = sum.add(&p.projection.base)?;
        for q in parts.iter().skip(i + 1) {
            if !p.projection.orthogonal_to(&q.projection) {
                return Err(Error::WitnessFailure("parts are not orthogonal".into()));
            }
        }
    }
    if sum.distance(&HermitianElement::identity(alg)) > 1e-7 {
        return Err(Error::WitnessFailure("parts do not sum to one".into()));
    }
    Ok(GammaWitnessOutcome::Witness(ObstructionWitness { k, parts }))
}

/// Builds a verified obstruction witness, re-randomizing the conjugators on
/// degenerate signatures or missed forcings.
pub fn gamma_counterexample(
    k: usize,
    sig: &Signature,
    seed: u64,
) -> Result<ObstructionWitness> {
    let mut attempt_seed = seed;
    for _ in 0..24 {
        let ctx = GammaContext::seeded(k, attempt_seed)?;
        if let Ok(GammaWitnessOutcome::Witness(w)) = gamma_with_context(&ctx, sig) {
            return Ok(w);
        }
        attempt_seed = attempt_seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1);
    }
    Err(Error::WitnessFailure(
        "no forcing decomposition found across re-randomized conjugators".into(),
    ))
}

// ---------------------------------------------------------------------------
// The winding-number obstruction
// ---------------------------------------------------------------------------

/// Winding number of a trigonometric polynomial around zero, by argument
/// accumulation on a dense grid. A nonzero winding certifies that the symbol
/// has no unitary lift along the shift-extension quotient (nonzero index).
pub fn winding_obstruction(coeffs: &[(i64, Complex64)]) -> Result<i64> {
    if coeffs.is_empty() {
        return Err(Error::InvalidInput("empty symbol".into()));
    }
    const GRID: usize = 1 << 16;
    let eval = |theta: f64| -> Complex64 {
        coeffs
            .iter()
            .map(|(k, c)| c * Complex64::new(0.0, *k as f64 * theta).exp())
            .sum()
    };
    let mut min_abs = f64::INFINITY;
    let mut max_abs: f64 = 0.0;
    let mut total = 0.0f64;
    let mut prev = eval(0.0);
    for i in 1..=GRID {
        let theta = 2.0 * std::f64::consts::PI * i as f64 / GRID as f64;
        let cur = eval(theta);
        min_abs = min_abs.min(cur.norm());
        max_abs = max_abs.max(cur.norm());
        // argument increment of cur relative to prev, in (-pi, pi]
        let ratio = cur / prev;
        total += ratio.arg();
        prev = cur;
    }
    if min_abs <= 1e-7 * max_abs.max(1.0) {
        return Err(Error::InvalidInput(
            "symbol vanishes on the circle within grid tolerance".into(),
        ));
    }
    let winding = total / (2.0 * std::f64::consts::PI);
    let rounded = winding.round();
    if (winding - rounded).abs() > 0.01 {
        return Err(Error::InvalidInput(format!(
            "winding {winding} is not close to an integer"
        )));
    }
    Ok(rounded as i64)
}
