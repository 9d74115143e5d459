//! Lattice completions over finite-dimensional algebras: basic/antibasic
//! elements as finite generating sets, the domination equivalence, arithmetic,
//! lattice operations, norms, complements, the quotient map onto the pointwise
//! completion, state representations, lifts, and restriction maps.
//!
//! Equivalence classes are never canonicalized globally; operations act on
//! representatives and all assertions go through the pointwise image or
//! s-probes. Commutative-kind order decisions are exact (linear feasibility);
//! matrix-kind decisions use a configurable probe family and are labeled
//! probe-certified.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;

use crate::algebra::{
    is_positive, AlgebraHandle, AlgebraKind, HermitianElement, StateFunctional,
};
use crate::error::{Error, Result};
use crate::feasibility::{self, Cmp, LinearProgram, LpOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Certainty {
    Exact,
    ProbeCertified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// Formal infimum of the generator set.
    Basic,
    /// Formal supremum of the generator set.
    Antibasic,
}

/// An equivalence-class representative: a finite generating list with a
/// polarity flag.
#[derive(Debug, Clone)]
pub struct BasicElement {
    pub algebra: AlgebraHandle,
    pub generators: Vec<HermitianElement>,
    pub polarity: Polarity,
}

impl BasicElement {
    pub fn new(
        algebra: AlgebraHandle,
        generators: Vec<HermitianElement>,
        polarity: Polarity,
    ) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidInput("empty generating set".into()));
        }
        for g in &generators {
            if g.algebra != algebra {
                return Err(Error::AlgebraMismatch("generator algebra".into()));
            }
        }
        Ok(BasicElement {
            algebra,
            generators,
            polarity,
        })
    }

    pub fn basic(algebra: AlgebraHandle, generators: Vec<HermitianElement>) -> Result<Self> {
        Self::new(algebra, generators, Polarity::Basic)
    }

    pub fn antibasic(algebra: AlgebraHandle, generators: Vec<HermitianElement>) -> Result<Self> {
        Self::new(algebra, generators, Polarity::Antibasic)
    }

    pub fn singleton(x: HermitianElement, polarity: Polarity) -> Self {
        BasicElement {
            algebra: x.algebra,
            generators: vec![x],
            polarity,
        }
    }

    pub fn zero(algebra: AlgebraHandle) -> Self {
        Self::singleton(HermitianElement::zero(algebra), Polarity::Basic)
    }

    pub fn unit(algebra: AlgebraHandle) -> Self {
        Self::singleton(HermitianElement::identity(algebra), Polarity::Basic)
    }

    /// s_rho: the infimum (resp. supremum) of the state over the convex hull
    /// of the generators, attained at a generator.
    pub fn s_at(&self, rho: &StateFunctional) -> Result<f64> {
        let mut vals = self.generators.iter().map(|g| rho.eval(g));
        let first = vals.next().expect("nonempty")?;
        let mut acc = first;
        for v in vals {
            let v = v?;
            acc = match self.polarity {
                Polarity::Basic => acc.min(v),
                Polarity::Antibasic => acc.max(v),
            };
        }
        Ok(acc)
    }

    /// Pointwise image over the spectrum (commutative kind only).
    pub fn pi(&self) -> Result<L1Image> {
        let m = match self.algebra.kind {
            AlgebraKind::Commutative(m) => m,
            AlgebraKind::Matrix(_) => {
                return Err(Error::KindMismatch {
                    expected: "commutative",
                })
            }
        };
        let mut values = self.generators[0].as_tuple()?.to_vec();
        for g in &self.generators[1..] {
            let t = g.as_tuple()?;
            for i in 0..m {
                values[i] = match self.polarity {
                    Polarity::Basic => values[i].min(t[i]),
                    Polarity::Antibasic => values[i].max(t[i]),
                };
            }
        }
        Ok(L1Image {
            algebra: self.algebra,
            values,
        })
    }

    /// A basic element is positive exactly when every generator is.
    pub fn is_positive(&self) -> bool {
        self.generators.iter().all(is_positive)
    }

    /// Minkowski sum of generator sets.
    pub fn minkowski(&self, other: &Self) -> Result<Self> {
        if self.polarity != other.polarity {
            return Err(Error::InvalidInput("polarity mismatch in sum".into()));
        }
        let mut generators = Vec::with_capacity(self.generators.len() * other.generators.len());
        for a in &self.generators {
            for b in &other.generators {
                generators.push(a.add(b)?);
            }
        }
        BasicElement::new(self.algebra, dedup(generators, self.algebra), self.polarity)
    }

    pub fn scale(&self, alpha: f64) -> Result<Self> {
        if alpha < 0.0 {
            return Err(Error::InvalidInput(
                "negative scale on a polarity class; negate and swap instead".into(),
            ));
        }
        BasicElement::new(
            self.algebra,
            self.generators.iter().map(|g| g.scale(alpha)).collect(),
            self.polarity,
        )
    }

    pub fn shift(&self, alpha: f64) -> Self {
        BasicElement {
            algebra: self.algebra,
            generators: self.generators.iter().map(|g| g.shift(alpha)).collect(),
            polarity: self.polarity,
        }
    }

    /// Union of generator sets: the infimum (resp. supremum) of the two
    /// classes, valid for equal polarity.
    pub fn union(&self, other: &Self) -> Result<Self> {
        if self.polarity != other.polarity {
            return Err(Error::InvalidInput("polarity mismatch in union".into()));
        }
        let mut generators = self.generators.clone();
        generators.extend(other.generators.iter().cloned());
        BasicElement::new(self.algebra, dedup(generators, self.algebra), self.polarity)
    }

    /// Adds the pairwise midpoints of the generators. Convex combinations of
    /// generators stay inside the class, so this returns an equivalent
    /// representative with a richer generating set.
    pub fn augment_midpoints(&self) -> Self {
        let mut gens = self.generators.clone();
        for i in 0..self.generators.len() {
            for j in (i + 1)..self.generators.len() {
                gens.push(
                    self.generators[i]
                        .add(&self.generators[j])
                        .expect("same algebra")
                        .scale(0.5),
                );
            }
        }
        BasicElement {
            algebra: self.algebra,
            generators: dedup(gens, self.algebra),
            polarity: self.polarity,
        }
    }

    /// Largest operator norm among the generators.
    pub fn generator_norm_bound(&self) -> f64 {
        self.generators
            .iter()
            .fold(0.0f64, |acc, g| acc.max(g.operator_norm()))
    }
}

fn dedup(gens: Vec<HermitianElement>, algebra: AlgebraHandle) -> Vec<HermitianElement> {
    let tol = algebra.tolerance.max(1e-12);
    let mut out: Vec<HermitianElement> = Vec::with_capacity(gens.len());
    for g in gens {
        if !out.iter().any(|h| h.approx_eq(&g, tol)) {
            out.push(g);
        }
    }
    out
}

/// Difference representation: positive part minus negative part, both of
/// basic polarity.
#[derive(Debug, Clone)]
pub struct LatticeElement {
    pub positive: BasicElement,
    pub negative: BasicElement,
}

impl LatticeElement {
    pub fn new(positive: BasicElement, negative: BasicElement) -> Result<Self> {
        if positive.polarity != Polarity::Basic || negative.polarity != Polarity::Basic {
            return Err(Error::InvalidInput(
                "difference representation requires basic parts".into(),
            ));
        }
        if positive.algebra != negative.algebra {
            return Err(Error::AlgebraMismatch("difference parts".into()));
        }
        Ok(LatticeElement { positive, negative })
    }

    pub fn algebra(&self) -> AlgebraHandle {
        self.positive.algebra
    }

    pub fn from_basic(c: BasicElement) -> Result<Self> {
        match c.polarity {
            Polarity::Basic => {
                let zero = BasicElement::zero(c.algebra);
                LatticeElement::new(c, zero)
            }
            Polarity::Antibasic => {
                // sup{gens} = R - inf{R - gens}
                let r = c.generator_norm_bound() + 1.0;
                let alg = c.algebra;
                let flipped: Vec<HermitianElement> = c
                    .generators
                    .iter()
                    .map(|g| HermitianElement::scalar(alg, r).sub(g).expect("same algebra"))
                    .collect();
                LatticeElement::new(
                    BasicElement::singleton(HermitianElement::scalar(alg, r), Polarity::Basic),
                    BasicElement::basic(alg, flipped)?,
                )
            }
        }
    }

    /// Canonical image of a single self-adjoint element.
    pub fn from_element(x: &HermitianElement) -> Self {
        let lam = x.min_eigenvalue();
        let r = if lam < 0.0 { -lam } else { 0.0 };
        let alg = x.algebra;
        LatticeElement {
            positive: BasicElement::singleton(x.shift(r), Polarity::Basic),
            negative: BasicElement::singleton(HermitianElement::scalar(alg, r), Polarity::Basic),
        }
    }

    pub fn zero(algebra: AlgebraHandle) -> Self {
        LatticeElement {
            positive: BasicElement::zero(algebra),
            negative: BasicElement::zero(algebra),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        LatticeElement::new(
            self.positive.minkowski(&other.positive)?,
            self.negative.minkowski(&other.negative)?,
        )
    }

    pub fn neg(&self) -> Self {
        LatticeElement {
            positive: self.negative.clone(),
            negative: self.positive.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn scale(&self, alpha: f64) -> Result<Self> {
        LatticeElement::new(self.positive.scale(alpha)?, self.negative.scale(alpha)?)
    }

    /// s_rho, linear in the element.
    pub fn s_at(&self, rho: &StateFunctional) -> Result<f64> {
        Ok(self.positive.s_at(rho)? - self.negative.s_at(rho)?)
    }

    pub fn pi(&self) -> Result<L1Image> {
        let p = self.positive.pi()?;
        let n = self.negative.pi()?;
        p.sub(&n)
    }
}

/// The pointwise completion image for the commutative kind: a real tuple over
/// the spectrum. For finite spectra this space is itself the completed
/// lattice, so its operations are plain pointwise arithmetic.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct L1Image {
    pub algebra: AlgebraHandle,
    pub values: Vec<f64>,
}

impl L1Image {
    pub fn new(algebra: AlgebraHandle, values: Vec<f64>) -> Result<Self> {
        match algebra.kind {
            AlgebraKind::Commutative(m) if m == values.len() => {
                Ok(L1Image { algebra, values })
            }
            AlgebraKind::Commutative(_) => {
                Err(Error::DimensionMismatch("image length".into()))
            }
            AlgebraKind::Matrix(_) => Err(Error::KindMismatch {
                expected: "commutative",
            }),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.algebra != other.algebra {
            return Err(Error::AlgebraMismatch("image sum".into()));
        }
        Ok(L1Image {
            algebra: self.algebra,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, alpha: f64) -> Self {
        L1Image {
            algebra: self.algebra,
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn meet(&self, other: &Self) -> Result<Self> {
        if self.algebra != other.algebra {
            return Err(Error::AlgebraMismatch("image meet".into()));
        }
        Ok(L1Image {
            algebra: self.algebra,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.min(*b))
                .collect(),
        })
    }

    pub fn join(&self, other: &Self) -> Result<Self> {
        if self.algebra != other.algebra {
            return Err(Error::AlgebraMismatch("image join".into()));
        }
        Ok(L1Image {
            algebra: self.algebra,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.max(*b))
                .collect(),
        })
    }

    pub fn positive_part(&self) -> Self {
        L1Image {
            algebra: self.algebra,
            values: self.values.iter().map(|v| v.max(0.0)).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn leq(&self, other: &Self, tol: f64) -> bool {
        self.values
            .iter()
            .zip(&other.values)
            .all(|(a, b)| *a <= b + tol)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.values
            .iter()
            .zip(&other.values)
            .all(|(a, b)| (a - b).abs() <= tol)
    }

    pub fn as_element(&self) -> HermitianElement {
        HermitianElement::from_tuple(self.algebra, self.values.clone())
            .expect("image is a tuple over its own algebra")
    }

    /// The point evaluation, linear and unital.
    pub fn at(&self, i: usize) -> f64 {
        self.values[i]
    }
}

/// Probe family for matrix-kind order decisions: eigenvector states of all
/// generators plus seeded random pure states. Commutative families are the
/// full point-state family and therefore exact.
#[derive(Debug, Clone)]
pub struct ProbeFamily {
    pub states: Vec<StateFunctional>,
    pub certainty: Certainty,
}

impl ProbeFamily {
    pub fn exact_points(algebra: AlgebraHandle) -> Result<Self> {
        match algebra.kind {
            AlgebraKind::Commutative(m) => Ok(ProbeFamily {
                states: (0..m).map(StateFunctional::point).collect(),
                certainty: Certainty::Exact,
            }),
            AlgebraKind::Matrix(_) => Err(Error::KindMismatch {
                expected: "commutative",
            }),
        }
    }

    pub fn for_elements(
        algebra: AlgebraHandle,
        elements: &[&BasicElement],
        random_pure: usize,
        seed: u64,
    ) -> Self {
        match algebra.kind {
            AlgebraKind::Commutative(_) => {
                Self::exact_points(algebra).expect("commutative kind")
            }
            AlgebraKind::Matrix(n) => {
                let mut states = Vec::new();
                for e in elements {
                    for g in &e.generators {
                        let eig = g.eigen();
                        for c in 0..n {
                            let xi: DVector<Complex64> = eig.vectors.column(c).into();
                            if let Ok(s) = StateFunctional::vector(xi) {
                                states.push(s);
                            }
                        }
                    }
                }
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..random_pure {
                    let xi = DVector::from_fn(n, |_, _| {
                        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                    });
                    if let Ok(s) = StateFunctional::vector(xi) {
                        states.push(s);
                    }
                }
                ProbeFamily {
                    states,
                    certainty: Certainty::ProbeCertified,
                }
            }
        }
    }
}

/// Default number of random pure probe states for matrix-kind decisions.
pub const DEFAULT_RANDOM_PROBES: usize = 64;

fn gen_tuples(e: &BasicElement) -> Result<Vec<&[f64]>> {
    e.generators.iter().map(|g| g.as_tuple()).collect()
}

/// c >= d in the basic order: every generator of c dominates a convex
/// combination of d's generators. Exact for the commutative kind; probe-level
/// for matrices.
pub fn basic_geq(
    c: &BasicElement,
    d: &BasicElement,
    probes: &ProbeFamily,
) -> Result<(bool, Certainty)> {
    if c.algebra != d.algebra {
        return Err(Error::AlgebraMismatch("basic order".into()));
    }
    if c.polarity != d.polarity {
        return Err(Error::InvalidInput("polarity mismatch in order".into()));
    }
    let tol = c.algebra.tolerance.max(1e-12);
    match c.algebra.kind {
        AlgebraKind::Commutative(_) => {
            let (hi, lo) = match c.polarity {
                Polarity::Basic => (c, d),
                // suprema: c >= d when every generator of d lies below a
                // convex combination of c's generators
                Polarity::Antibasic => (d, c),
            };
            let lo_t = gen_tuples(lo)?;
            let lo_refs: Vec<&[f64]> = lo_t.to_vec();
            for g in &hi.generators {
                let t = g.as_tuple()?;
                let ok = match c.polarity {
                    Polarity::Basic => {
                        feasibility::dominates_convex_combination(t, &lo_refs, tol)
                    }
                    Polarity::Antibasic => {
                        feasibility::dominated_by_convex_combination(t, &lo_refs, tol)
                    }
                };
                if !ok {
                    return Ok((false, Certainty::Exact));
                }
            }
            Ok((true, Certainty::Exact))
        }
        AlgebraKind::Matrix(_) => {
            for rho in &probes.states {
                if c.s_at(rho)? < d.s_at(rho)? - 1e-8 {
                    return Ok((false, Certainty::ProbeCertified));
                }
            }
            Ok((true, Certainty::ProbeCertified))
        }
    }
}

/// The domination equivalence: both directions of `basic_geq`.
pub fn equivalent(
    c: &BasicElement,
    d: &BasicElement,
    probes: &ProbeFamily,
) -> Result<(bool, Certainty)> {
    let (ge, cert1) = basic_geq(c, d, probes)?;
    if !ge {
        return Ok((false, cert1));
    }
    let (le, cert2) = basic_geq(d, c, probes)?;
    let cert = if cert1 == Certainty::Exact && cert2 == Certainty::Exact {
        Certainty::Exact
    } else {
        Certainty::ProbeCertified
    };
    Ok((le, cert))
}

/// a <= b as lattice elements: positivity of the rearranged difference.
pub fn lattice_leq(
    a: &LatticeElement,
    b: &LatticeElement,
    probes: &ProbeFamily,
) -> Result<(bool, Certainty)> {
    let lhs = b.positive.minkowski(&a.negative)?;
    let rhs = a.positive.minkowski(&b.negative)?;
    basic_geq(&lhs, &rhs, probes)
}

pub fn lattice_equivalent(
    a: &LatticeElement,
    b: &LatticeElement,
    probes: &ProbeFamily,
) -> Result<(bool, Certainty)> {
    let (le, c1) = lattice_leq(a, b, probes)?;
    if !le {
        return Ok((false, c1));
    }
    let (ge, c2) = lattice_leq(b, a, probes)?;
    let cert = if c1 == Certainty::Exact && c2 == Certainty::Exact {
        Certainty::Exact
    } else {
        Certainty::ProbeCertified
    };
    Ok((ge, cert))
}

/// Maximal element below both inputs, realized by generator-set union after
/// the exact dominating shift by the negative parts.
pub fn wedge(a: &LatticeElement, b: &LatticeElement) -> Result<LatticeElement> {
    let shift = a.negative.minkowski(&b.negative)?;
    let s1 = a.positive.minkowski(&b.negative)?;
    let s2 = b.positive.minkowski(&a.negative)?;
    LatticeElement::new(s1.union(&s2)?, shift)
}

/// Minimal element above both inputs (complement-dual of the wedge).
pub fn vee(a: &LatticeElement, b: &LatticeElement) -> Result<LatticeElement> {
    Ok(wedge(&a.neg(), &b.neg())?.neg())
}

/// The unique minimal positive decomposition (a `vee` against zero and its
/// mirror).
pub fn min_positive_decomposition(
    a: &LatticeElement,
) -> Result<(LatticeElement, LatticeElement)> {
    let zero = LatticeElement::zero(a.algebra());
    let plus = vee(a, &zero)?;
    let minus = wedge(a, &zero)?.neg();
    Ok((plus, minus))
}

/// Two-sided norm bound; the sides agree for the commutative kind.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct NormBound {
    pub lower: f64,
    pub upper: f64,
    pub certainty: Certainty,
}

impl NormBound {
    pub fn contains(&self, v: f64, tol: f64) -> bool {
        self.lower - tol <= v && v <= self.upper + tol
    }

    fn max(self, other: NormBound) -> NormBound {
        NormBound {
            lower: self.lower.max(other.lower),
            upper: self.upper.max(other.upper),
            certainty: if self.certainty == Certainty::Exact
                && other.certainty == Certainty::Exact
            {
                Certainty::Exact
            } else {
                Certainty::ProbeCertified
            },
        }
    }
}

/// Norm of a positive basic element: the least operator norm over the maximal
/// representative. Commutative kind exact; matrix kind bracketed by state
/// probes from below and generator norms from above.
pub fn norm_basic(c: &BasicElement, probes: &ProbeFamily) -> Result<NormBound> {
    if c.polarity != Polarity::Basic {
        return Err(Error::InvalidInput("norm is defined on basic parts".into()));
    }
    if !c.is_positive() {
        // general elements go through the decomposition path
        return norm_element(&LatticeElement::from_basic(c.clone())?, probes);
    }
    match c.algebra.kind {
        AlgebraKind::Commutative(m) => {
            // min over the convex hull of the largest coordinate
            let k = c.generators.len();
            let tuples = gen_tuples(c)?;
            let mut lp = LinearProgram::new(k + 1, true);
            lp.objective = {
                let mut o = vec![0.0; k + 1];
                o[k] = 1.0;
                o
            };
            for i in 0..m {
                let mut row: Vec<f64> = tuples.iter().map(|t| t[i]).collect();
                row.push(-1.0);
                lp.push(row, Cmp::Le, 0.0);
            }
            let mut simplex = vec![1.0; k];
            simplex.push(0.0);
            lp.push(simplex, Cmp::Eq, 1.0);
            match feasibility::minimize(&lp, 1e-9) {
                LpOutcome::Optimal { value, .. } => Ok(NormBound {
                    lower: value.max(0.0),
                    upper: value.max(0.0),
                    certainty: Certainty::Exact,
                }),
                _ => Err(Error::Infeasible("norm program".into())),
            }
        }
        AlgebraKind::Matrix(_) => {
            let mut lower = 0.0f64;
            for rho in &probes.states {
                lower = lower.max(c.s_at(rho)?);
            }
            let mut upper = f64::INFINITY;
            for g in &c.generators {
                upper = upper.min(g.operator_norm());
            }
            // midpoints of generator pairs are also upper representatives
            for i in 0..c.generators.len() {
                for j in (i + 1)..c.generators.len() {
                    let mid = c.generators[i]
                        .add(&c.generators[j])?
                        .scale(0.5);
                    upper = upper.min(mid.operator_norm());
                }
            }
            Ok(NormBound {
                lower,
                upper,
                certainty: Certainty::ProbeCertified,
            })
        }
    }
}

/// Norm of a general element: max of the part norms of the minimal positive
/// decomposition.
pub fn norm_element(a: &LatticeElement, probes: &ProbeFamily) -> Result<NormBound> {
    let (plus, minus) = min_positive_decomposition(a)?;
    let np = norm_positive(&plus, probes)?;
    let nm = norm_positive(&minus, probes)?;
    Ok(np.max(nm))
}

/// Norm of a positive element presented as a difference: the least norm over
/// its upper complement.
pub fn norm_positive(p: &LatticeElement, probes: &ProbeFamily) -> Result<NormBound> {
    match p.algebra().kind {
        AlgebraKind::Commutative(m) => {
            // min t s.t. y in the upper-complement polyhedron, y <= t 1
            let c = gen_tuples(&p.positive)?;
            let d = gen_tuples(&p.negative)?;
            let nc = c.len();
            let nd = d.len();
            // vars: y (m), lambda^j (nc per j), t
            let nv = m + nd * nc + 1;
            let mut lp = LinearProgram::new(nv, true);
            lp.objective[nv - 1] = 1.0;
            for (j, dj) in d.iter().enumerate() {
                for i in 0..m {
                    let mut row = vec![0.0; nv];
                    row[i] = 1.0;
                    for (kk, ck) in c.iter().enumerate() {
                        row[m + j * nc + kk] = -ck[i];
                    }
                    lp.push(row, Cmp::Ge, -dj[i]);
                }
                let mut row = vec![0.0; nv];
                for kk in 0..nc {
                    row[m + j * nc + kk] = 1.0;
                }
                lp.push(row, Cmp::Eq, 1.0);
            }
            for i in 0..m {
                let mut row = vec![0.0; nv];
                row[i] = 1.0;
                row[nv - 1] = -1.0;
                lp.push(row, Cmp::Le, 0.0);
            }
            match feasibility::minimize(&lp, 1e-9) {
                LpOutcome::Optimal { value, .. } => Ok(NormBound {
                    lower: value.max(0.0),
                    upper: value.max(0.0),
                    certainty: Certainty::Exact,
                }),
                _ => Err(Error::Infeasible("positive norm program".into())),
            }
        }
        AlgebraKind::Matrix(_) => {
            let mut lower = 0.0f64;
            for rho in &probes.states {
                lower = lower.max(p.s_at(rho)?);
            }
            let fam = upper_complement_family(p, 3)?;
            let mut upper = f64::INFINITY;
            for g in &fam.generators {
                upper = upper.min(g.operator_norm());
            }
            Ok(NormBound {
                lower,
                upper,
                certainty: Certainty::ProbeCertified,
            })
        }
    }
}

/// The four complements of an element, with exact polyhedral evaluators in the
/// commutative kind and PSD-verified finite witness families for matrices.
#[derive(Debug, Clone)]
pub struct Complements {
    pub upper: ComplementSide,
    pub lower: ComplementSide,
    /// (P_c)^c: basic.
    pub double_lower: LatticeElement,
    /// (P^c)_c: antibasic.
    pub double_upper: LatticeElement,
    pub certainty: Certainty,
}

/// One side of the complement pair, exposing s-evaluations.
#[derive(Debug, Clone)]
pub enum ComplementSide {
    /// Commutative upper complement: all positive tuples dominating the
    /// element; evaluated exactly by linear programming.
    UpperPoly {
        algebra: AlgebraHandle,
        c: Vec<Vec<f64>>,
        d: Vec<Vec<f64>>,
    },
    /// Commutative lower complement: all tuples dominated by the element.
    LowerPoly {
        algebra: AlgebraHandle,
        c: Vec<Vec<f64>>,
        d: Vec<Vec<f64>>,
    },
    /// Matrix-kind verified witness family (basic for upper, antibasic for
    /// lower complements).
    Family(BasicElement),
}

impl ComplementSide {
    pub fn s_at(&self, rho: &StateFunctional) -> Result<f64> {
        match self {
            ComplementSide::Family(fam) => fam.s_at(rho),
            ComplementSide::UpperPoly { algebra, c, d } => {
                let m = algebra.dim();
                let weights = state_weights(rho, m)?;
                let nc = c.len();
                let nd = d.len();
                let nv = m + nd * nc;
                let mut lp = LinearProgram::new(nv, true);
                lp.objective[..m].copy_from_slice(&weights);
                for (j, dj) in d.iter().enumerate() {
                    for i in 0..m {
                        let mut row = vec![0.0; nv];
                        row[i] = 1.0;
                        for (kk, ck) in c.iter().enumerate() {
                            row[m + j * nc + kk] = -ck[i];
                        }
                        lp.push(row, Cmp::Ge, -dj[i]);
                    }
                    let mut row = vec![0.0; nv];
                    for kk in 0..nc {
                        row[m + j * nc + kk] = 1.0;
                    }
                    lp.push(row, Cmp::Eq, 1.0);
                }
                match feasibility::minimize(&lp, 1e-9) {
                    LpOutcome::Optimal { value, .. } => Ok(value),
                    _ => Err(Error::Infeasible("upper complement evaluation".into())),
                }
            }
            ComplementSide::LowerPoly { algebra, c, d } => {
                let m = algebra.dim();
                let weights = state_weights(rho, m)?;
                let nc = c.len();
                let nd = d.len();
                // vars (all free; mu constrained nonneg explicitly): b (m), mu^i (nd per i)
                let nv = m + nc * nd;
                let mut lp = LinearProgram::new(nv, false);
                for (i, w) in weights.iter().enumerate() {
                    lp.objective[i] = -w; // maximize rho . b
                }
                for (i, ci) in c.iter().enumerate() {
                    for s in 0..m {
                        let mut row = vec![0.0; nv];
                        row[s] = -1.0;
                        for (kk, dk) in d.iter().enumerate() {
                            row[m + i * nd + kk] = -dk[s];
                        }
                        lp.push(row, Cmp::Ge, -ci[s]);
                    }
                    let mut row = vec![0.0; nv];
                    for kk in 0..nd {
                        row[m + i * nd + kk] = 1.0;
                    }
                    lp.push(row, Cmp::Eq, 1.0);
                }
                for v in m..nv {
                    let mut row = vec![0.0; nv];
                    row[v] = 1.0;
                    lp.push(row, Cmp::Ge, 0.0);
                }
                match feasibility::minimize(&lp, 1e-9) {
                    LpOutcome::Optimal { value, .. } => Ok(-value),
                    _ => Err(Error::Infeasible("lower complement evaluation".into())),
                }
            }
        }
    }

    /// Pointwise image (commutative kind).
    pub fn pi(&self) -> Result<L1Image> {
        match self {
            ComplementSide::Family(fam) => fam.pi(),
            ComplementSide::UpperPoly { algebra, .. }
            | ComplementSide::LowerPoly { algebra, .. } => {
                let m = algebra.dim();
                let mut values = Vec::with_capacity(m);
                for i in 0..m {
                    values.push(self.s_at(&StateFunctional::point(i))?);
                }
                L1Image::new(*algebra, values)
            }
        }
    }
}

fn state_weights(rho: &StateFunctional, m: usize) -> Result<Vec<f64>> {
    let mut w = vec![0.0; m];
    match rho {
        StateFunctional::Point { index } => {
            if *index >= m {
                return Err(Error::DimensionMismatch("point index".into()));
            }
            w[*index] = 1.0;
        }
        StateFunctional::Vector { xi } => {
            if xi.len() != m {
                return Err(Error::DimensionMismatch("state length".into()));
            }
            for i in 0..m {
                w[i] = xi[i].norm_sqr();
            }
        }
        StateFunctional::Mixture { parts } => {
            for (wt, xi) in parts {
                if xi.len() != m {
                    return Err(Error::DimensionMismatch("state length".into()));
                }
                for i in 0..m {
                    w[i] += wt * xi[i].norm_sqr();
                }
            }
        }
    }
    Ok(w)
}

/// Simplex grid over `k` coordinates with the given resolution.
fn simplex_grid(k: usize, steps: usize) -> Vec<Vec<f64>> {
    if k == 1 {
        return vec![vec![1.0]];
    }
    let mut out = Vec::new();
    let mut stack = vec![(Vec::<usize>::new(), steps)];
    while let Some((prefix, rem)) = stack.pop() {
        if prefix.len() == k - 1 {
            let mut v: Vec<f64> = prefix.iter().map(|&x| x as f64 / steps as f64).collect();
            v.push(rem as f64 / steps as f64);
            out.push(v);
            continue;
        }
        for take in 0..=rem {
            let mut p = prefix.clone();
            p.push(take);
            stack.push((p, rem - take));
        }
    }
    out
}

/// Finite PSD-verified witness family inside the upper complement of a
/// positive matrix-kind element: members sum_j (sum_i lambda_i c_i - d_j)_+.
fn upper_complement_family(p: &LatticeElement, steps: usize) -> Result<BasicElement> {
    let alg = p.algebra();
    let grid = simplex_grid(p.positive.generators.len(), steps);
    let mut members = Vec::new();
    for lambda in &grid {
        let mut combo = HermitianElement::zero(alg);
        for (i, g) in p.positive.generators.iter().enumerate() {
            combo = combo.add(&g.scale(lambda[i]))?;
        }
        let mut member = HermitianElement::zero(alg);
        for d in &p.negative.generators {
            member = member.add(&combo.sub(d)?.positive_part())?;
        }
        members.push(member);
    }
    BasicElement::basic(alg, dedup(members, alg))
}

/// Finite verified family inside the lower complement: members
/// -sum_i (sum_k mu_k d_k - c_i)_+.
fn lower_complement_family(p: &LatticeElement, steps: usize) -> Result<BasicElement> {
    let alg = p.algebra();
    let grid = simplex_grid(p.negative.generators.len(), steps);
    let mut members = Vec::new();
    for mu in &grid {
        let mut combo = HermitianElement::zero(alg);
        for (k, g) in p.negative.generators.iter().enumerate() {
            combo = combo.add(&g.scale(mu[k]))?;
        }
        let mut member = HermitianElement::zero(alg);
        for c in &p.positive.generators {
            member = member.add(&combo.sub(c)?.positive_part())?;
        }
        members.push(member.scale(-1.0));
    }
    BasicElement::antibasic(alg, dedup(members, alg))
}

/// The full complement quadruple.
pub fn complements(p: &LatticeElement) -> Result<Complements> {
    match p.algebra().kind {
        AlgebraKind::Commutative(_) => {
            let c: Vec<Vec<f64>> = p
                .positive
                .generators
                .iter()
                .map(|g| g.as_tuple().map(|t| t.to_vec()))
                .collect::<Result<_>>()?;
            let d: Vec<Vec<f64>> = p
                .negative
                .generators
                .iter()
                .map(|g| g.as_tuple().map(|t| t.to_vec()))
                .collect::<Result<_>>()?;
            let upper = ComplementSide::UpperPoly {
                algebra: p.algebra(),
                c: c.clone(),
                d: d.clone(),
            };
            let lower = ComplementSide::LowerPoly {
                algebra: p.algebra(),
                c,
                d,
            };
            // In the finite commutative case both double complements collapse
            // to the image of the clipped pointwise value.
            let clipped = p.pi()?.positive_part().as_element();
            let dl = LatticeElement::from_element(&clipped);
            Ok(Complements {
                upper,
                lower,
                double_lower: dl.clone(),
                double_upper: dl,
                certainty: Certainty::Exact,
            })
        }
        AlgebraKind::Matrix(_) => {
            let upper_fam = upper_complement_family(p, 3)?;
            let lower_fam = lower_complement_family(p, 3)?;
            let alg = p.algebra();
            // a >= every member of the lower family, a >= 0
            let mut dl_gen = HermitianElement::zero(alg);
            for b in &lower_fam.generators {
                dl_gen = dl_gen.add(&b.positive_part())?;
            }
            // b <= every member of the upper family
            let big = upper_fam.generator_norm_bound() + 1.0;
            let mut slack = HermitianElement::zero(alg);
            for y in &upper_fam.generators {
                slack = slack.add(&HermitianElement::scalar(alg, big).sub(y)?.positive_part())?;
            }
            let du_gen = HermitianElement::scalar(alg, big).sub(&slack)?;
            Ok(Complements {
                upper: ComplementSide::Family(upper_fam),
                lower: ComplementSide::Family(lower_fam),
                double_lower: LatticeElement::from_element(&dl_gen),
                double_upper: LatticeElement::from_element(&du_gen),
                certainty: Certainty::ProbeCertified,
            })
        }
    }
}

/// The quotient map onto the pointwise completion (commutative kind):
/// linear, monotone, lattice-respecting; the pointwise minimum on basic
/// representatives.
pub fn pi(a: &LatticeElement) -> Result<L1Image> {
    a.pi()
}

/// s_rho, with `r_nu` the restriction to vector states.
pub fn s_rep(a: &LatticeElement, rho: &StateFunctional) -> Result<f64> {
    a.s_at(rho)
}

/// Convex canonical section of the quotient map: singleton lift of the
/// minimal positive decomposition.
pub fn cv_lift(v: &L1Image) -> LatticeElement {
    let plus = v.positive_part();
    let minus = v.scale(-1.0).positive_part();
    LatticeElement {
        positive: BasicElement::singleton(plus.as_element(), Polarity::Basic),
        negative: BasicElement::singleton(minus.as_element(), Polarity::Basic),
    }
}

/// Concave canonical section: the lower-complement lift, realized through a
/// dominating scalar.
pub fn cc_lift(v: &L1Image) -> LatticeElement {
    let r = v.norm() + 1.0;
    let alg = v.algebra;
    let flipped = HermitianElement::from_tuple(
        alg,
        v.values.iter().map(|x| r - x).collect(),
    )
    .expect("image tuple");
    LatticeElement {
        positive: BasicElement::singleton(HermitianElement::scalar(alg, r), Polarity::Basic),
        negative: BasicElement::singleton(flipped, Polarity::Basic),
    }
}

/// Subsystem description for the restriction maps.
#[derive(Debug, Clone)]
pub enum SubsystemSpec {
    /// Commutative: a surjection of spectra; `fibers[i]` is the subsystem
    /// point carrying the i-th point of the big spectrum.
    CommutativeFibers { fibers: Vec<usize>, sub_size: usize },
    /// Matrix: the block-diagonal subalgebra of a partition of coordinates,
    /// with its pinching conditional expectation.
    MatrixBlocks { blocks: Vec<Vec<usize>> },
}

impl SubsystemSpec {
    /// Keeps the listed spectrum points; dropped points are assigned to the
    /// nearest kept point below them (or the first kept point).
    pub fn from_coordinate_subset(big: usize, kept: &[usize]) -> Result<Self> {
        if kept.is_empty() {
            return Err(Error::InvalidInput("empty coordinate subset".into()));
        }
        let mut sorted = kept.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if *sorted.last().unwrap() >= big {
            return Err(Error::InvalidInput("kept coordinate out of range".into()));
        }
        let mut fibers = Vec::with_capacity(big);
        for i in 0..big {
            let pos = match sorted.binary_search(&i) {
                Ok(p) => p,
                Err(0) => 0,
                Err(p) => p - 1,
            };
            fibers.push(pos);
        }
        Ok(SubsystemSpec::CommutativeFibers {
            fibers,
            sub_size: sorted.len(),
        })
    }

    pub fn validate(&self, algebra: AlgebraHandle) -> Result<()> {
        match (self, algebra.kind) {
            (SubsystemSpec::CommutativeFibers { fibers, sub_size }, AlgebraKind::Commutative(m)) => {
                if fibers.len() != m {
                    return Err(Error::DimensionMismatch("fiber map length".into()));
                }
                let mut seen = vec![false; *sub_size];
                for &f in fibers {
                    if f >= *sub_size {
                        return Err(Error::InvalidInput("fiber out of range".into()));
                    }
                    seen[f] = true;
                }
                if !seen.iter().all(|&s| s) {
                    return Err(Error::InvalidInput("fiber map not surjective".into()));
                }
                Ok(())
            }
            (SubsystemSpec::MatrixBlocks { blocks }, AlgebraKind::Matrix(n)) => {
                let mut seen = vec![false; n];
                for b in blocks {
                    for &i in b {
                        if i >= n || seen[i] {
                            return Err(Error::InvalidInput("blocks must partition".into()));
                        }
                        seen[i] = true;
                    }
                }
                if !seen.iter().all(|&s| s) {
                    return Err(Error::InvalidInput("blocks must cover".into()));
                }
                Ok(())
            }
            _ => Err(Error::KindMismatch {
                expected: "matching subsystem kind",
            }),
        }
    }

    pub fn sub_algebra(&self, algebra: AlgebraHandle) -> AlgebraHandle {
        match self {
            SubsystemSpec::CommutativeFibers { sub_size, .. } => {
                AlgebraHandle::commutative(*sub_size).with_tolerance(algebra.tolerance)
            }
            SubsystemSpec::MatrixBlocks { .. } => algebra,
        }
    }

    /// The inclusion of the subsystem into the big algebra.
    pub fn include(&self, x: &HermitianElement, big: AlgebraHandle) -> Result<HermitianElement> {
        match self {
            SubsystemSpec::CommutativeFibers { fibers, .. } => {
                let t = x.as_tuple()?;
                HermitianElement::from_tuple(
                    big,
                    fibers.iter().map(|&f| t[f]).collect(),
                )
            }
            SubsystemSpec::MatrixBlocks { .. } => {
                // block-diagonal elements are already members
                Ok(x.clone())
            }
        }
    }

    fn fiber_max(&self, x: &HermitianElement) -> Result<HermitianElement> {
        match self {
            SubsystemSpec::CommutativeFibers { fibers, sub_size } => {
                let t = x.as_tuple()?;
                let mut out = vec![f64::NEG_INFINITY; *sub_size];
                for (i, &f) in fibers.iter().enumerate() {
                    out[f] = out[f].max(t[i]);
                }
                HermitianElement::from_tuple(
                    AlgebraHandle::commutative(*sub_size).with_tolerance(x.algebra.tolerance),
                    out,
                )
            }
            SubsystemSpec::MatrixBlocks { blocks } => {
                let e = self.pinch(x, blocks)?;
                let off = x.sub(&e)?.operator_norm();
                Ok(e.shift(off))
            }
        }
    }

    fn fiber_min(&self, x: &HermitianElement) -> Result<HermitianElement> {
        match self {
            SubsystemSpec::CommutativeFibers { fibers, sub_size } => {
                let t = x.as_tuple()?;
                let mut out = vec![f64::INFINITY; *sub_size];
                for (i, &f) in fibers.iter().enumerate() {
                    out[f] = out[f].min(t[i]);
                }
                HermitianElement::from_tuple(
                    AlgebraHandle::commutative(*sub_size).with_tolerance(x.algebra.tolerance),
                    out,
                )
            }
            SubsystemSpec::MatrixBlocks { blocks } => {
                let e = self.pinch(x, blocks)?;
                let off = x.sub(&e)?.operator_norm();
                Ok(e.shift(-off))
            }
        }
    }

    fn pinch(&self, x: &HermitianElement, blocks: &[Vec<usize>]) -> Result<HermitianElement> {
        let m = x.as_matrix()?;
        let n = m.nrows();
        let mut member = vec![usize::MAX; n];
        for (b, blk) in blocks.iter().enumerate() {
            for &i in blk {
                member[i] = b;
            }
        }
        let pinched = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if member[i] == member[j] {
                m[(i, j)]
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        HermitianElement::from_matrix(x.algebra, pinched)
    }
}

/// Basic restriction: magnifying retraction (composite with the inclusion
/// dominates the identity).
pub fn restrict_basic(a: &LatticeElement, spec: &SubsystemSpec) -> Result<LatticeElement> {
    spec.validate(a.algebra())?;
    let sub = spec.sub_algebra(a.algebra());
    let pos: Vec<HermitianElement> = a
        .positive
        .generators
        .iter()
        .map(|g| spec.fiber_max(g))
        .collect::<Result<_>>()?;
    let neg: Vec<HermitianElement> = a
        .negative
        .generators
        .iter()
        .map(|g| spec.fiber_min(g))
        .collect::<Result<_>>()?;
    LatticeElement::new(
        BasicElement::basic(sub, dedup(pos, sub))?,
        BasicElement::basic(sub, dedup(neg, sub))?,
    )
}

/// Antibasic restriction: reducing retraction.
pub fn restrict_antibasic(a: &LatticeElement, spec: &SubsystemSpec) -> Result<LatticeElement> {
    spec.validate(a.algebra())?;
    let sub = spec.sub_algebra(a.algebra());
    let pos: Vec<HermitianElement> = a
        .positive
        .generators
        .iter()
        .map(|g| spec.fiber_min(g))
        .collect::<Result<_>>()?;
    let neg: Vec<HermitianElement> = a
        .negative
        .generators
        .iter()
        .map(|g| spec.fiber_max(g))
        .collect::<Result<_>>()?;
    LatticeElement::new(
        BasicElement::basic(sub, dedup(pos, sub))?,
        BasicElement::basic(sub, dedup(neg, sub))?,
    )
}

/// Seeded random tuple on a dyadic grid (entries k/16 with |k| <= 16 * range).
pub fn random_dyadic_tuple(
    algebra: AlgebraHandle,
    rng: &mut impl Rng,
    range: f64,
) -> HermitianElement {
    let m = algebra.dim();
    let steps = (16.0 * range) as i64;
    let values: Vec<f64> = (0..m)
        .map(|_| rng.random_range(-steps..=steps) as f64 / 16.0)
        .collect();
    HermitianElement::from_tuple(algebra, values).expect("tuple kind")
}

/// Seeded random basic-difference element with dyadic positive generators.
pub fn random_dyadic_element(
    algebra: AlgebraHandle,
    rng: &mut impl Rng,
    gens: usize,
    range: f64,
) -> LatticeElement {
    let steps = (16.0 * range) as i64;
    let m = algebra.dim();
    let mut part = |count: usize| -> BasicElement {
        let generators: Vec<HermitianElement> = (0..count)
            .map(|_| {
                let values: Vec<f64> = (0..m)
                    .map(|_| rng.random_range(0..=steps) as f64 / 16.0)
                    .collect();
                HermitianElement::from_tuple(algebra, values).expect("tuple kind")
            })
            .collect();
        BasicElement::basic(algebra, generators).expect("nonempty")
    };
    let positive = part(gens.max(1));
    let negative = part(gens.max(1));
    LatticeElement { positive, negative }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn alg2() -> AlgebraHandle {
        AlgebraHandle::commutative(2)
    }

    fn tup(alg: AlgebraHandle, v: &[f64]) -> HermitianElement {
        HermitianElement::from_tuple(alg, v.to_vec()).unwrap()
    }

    fn basic2(gens: &[&[f64]]) -> BasicElement {
        BasicElement::basic(
            alg2(),
            gens.iter().map(|g| tup(alg2(), g)).collect(),
        )
        .unwrap()
    }

    fn probes2() -> ProbeFamily {
        ProbeFamily::exact_points(alg2()).unwrap()
    }

    #[test]
    fn equivalence_examples() {
        let c = basic2(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let d = basic2(&[&[1.0, 2.0], &[2.0, 1.0], &[2.0, 2.0]]);
        let (eq, cert) = equivalent(&c, &d, &probes2()).unwrap();
        assert!(eq);
        assert_eq!(cert, Certainty::Exact);

        let e = basic2(&[&[1.0, 2.0]]);
        let f = basic2(&[&[2.0, 1.0]]);
        assert!(!equivalent(&e, &f, &probes2()).unwrap().0);

        assert!(equivalent(&c, &c, &probes2()).unwrap().0);

        // pointwise-min equality does not imply equivalence
        let g = basic2(&[&[1.0, 1.0]]);
        assert_eq!(c.pi().unwrap(), g.pi().unwrap());
        assert!(!equivalent(&c, &g, &probes2()).unwrap().0);
    }

    #[test]
    fn matrix_equivalence_is_probe_certified() {
        let alg = AlgebraHandle::matrix(2);
        let a = HermitianElement::diag(alg, &[1.0, 2.0]).unwrap();
        let b = HermitianElement::diag(alg, &[2.0, 1.0]).unwrap();
        let c = BasicElement::basic(alg, vec![a.clone(), b.clone()]).unwrap();
        // adding a dominating element keeps the class
        let d = BasicElement::basic(
            alg,
            vec![a.clone(), b, HermitianElement::diag(alg, &[2.0, 2.0]).unwrap()],
        )
        .unwrap();
        let probes = ProbeFamily::for_elements(alg, &[&c, &d], 32, 1);
        let (eq, cert) = equivalent(&c, &d, &probes).unwrap();
        assert!(eq);
        assert_eq!(cert, Certainty::ProbeCertified);
        // a genuinely different class is refuted by some probe
        let e = BasicElement::basic(alg, vec![a]).unwrap();
        assert!(!equivalent(&c, &e, &probes).unwrap().0);
    }

    #[test]
    fn addition_and_doubling() {
        let x = LatticeElement::from_basic(basic2(&[&[1.0, 0.0]])).unwrap();
        let y = LatticeElement::from_basic(basic2(&[&[0.0, 1.0]])).unwrap();
        let sum = x.add(&y).unwrap();
        assert_eq!(sum.pi().unwrap().values, vec![1.0, 1.0]);

        // 2C is equivalent to C + C
        let c = basic2(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let doubled = c.scale(2.0).unwrap();
        let summed = c.minkowski(&c).unwrap();
        assert!(equivalent(&doubled, &summed, &probes2()).unwrap().0);

        // (x - y) + (y - x) is equivalent to zero
        let a = LatticeElement::new(basic2(&[&[1.0, 0.0]]), basic2(&[&[0.0, 1.0]])).unwrap();
        let b = a.neg();
        let z = a.add(&b).unwrap();
        let zero = LatticeElement::zero(alg2());
        assert!(lattice_equivalent(&z, &zero, &probes2()).unwrap().0);
    }

    #[test]
    fn cancellation_exhaustive_small() {
        // A + E ~ B + E implies A ~ B over a 3-value grid on a 2-point spectrum
        let vals = [0.0, 0.5, 1.0];
        let mut singles = Vec::new();
        for &a in &vals {
            for &b in &vals {
                singles.push(tup(alg2(), &[a, b]));
            }
        }
        let probes = probes2();
        for a in &singles {
            for b in &singles {
                for e in &singles {
                    let ba = BasicElement::singleton(a.clone(), Polarity::Basic);
                    let bb = BasicElement::singleton(b.clone(), Polarity::Basic);
                    let be = BasicElement::singleton(e.clone(), Polarity::Basic);
                    let ae = ba.minkowski(&be).unwrap();
                    let bbe = bb.minkowski(&be).unwrap();
                    let lhs = equivalent(&ae, &bbe, &probes).unwrap().0;
                    let rhs = equivalent(&ba, &bb, &probes).unwrap().0;
                    assert_eq!(lhs, rhs, "cancellation fails");
                }
            }
        }
    }

    #[test]
    fn wedge_vee_examples() {
        let x = LatticeElement::from_basic(basic2(&[&[1.0, 2.0]])).unwrap();
        let same = wedge(&x, &x).unwrap();
        assert!(lattice_equivalent(&x, &same, &probes2()).unwrap().0);

        let y = LatticeElement::from_basic(basic2(&[&[2.0, 1.0]])).unwrap();
        assert_eq!(wedge(&x, &y).unwrap().pi().unwrap().values, vec![1.0, 1.0]);
        assert_eq!(vee(&x, &y).unwrap().pi().unwrap().values, vec![2.0, 2.0]);
    }

    #[test]
    fn matrix_wedge_probe_order() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(47);
        let alg = AlgebraHandle::matrix(3);
        for trial in 0..50 {
            let raw = |rng: &mut rand_chacha::ChaCha8Rng| {
                let m = nalgebra::DMatrix::from_fn(3, 3, |_, _| {
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                });
                HermitianElement::from_matrix(alg, (&m + m.adjoint()).scale(0.5)).unwrap()
            };
            let a = LatticeElement::from_element(&raw(&mut rng));
            let b = LatticeElement::from_element(&raw(&mut rng));
            let w = wedge(&a, &b).unwrap();
            let v = vee(&a, &b).unwrap();
            let probes = ProbeFamily::for_elements(
                alg,
                &[&a.positive, &b.positive, &w.positive],
                32,
                trial as u64,
            );
            assert!(lattice_leq(&w, &a, &probes).unwrap().0);
            assert!(lattice_leq(&w, &b, &probes).unwrap().0);
            assert!(lattice_leq(&a, &v, &probes).unwrap().0);
            assert!(lattice_leq(&b, &v, &probes).unwrap().0);
            // the wedge dominates the shifted common minorant
            let shift = a.positive.generator_norm_bound() + b.positive.generator_norm_bound();
            let below = a
                .add(&LatticeElement::from_element(&HermitianElement::scalar(
                    alg, -shift,
                )))
                .unwrap();
            assert!(lattice_leq(&below, &w, &probes).unwrap().0);
        }
    }

    #[test]
    fn min_positive_decomposition_examples() {
        let alg = alg2();
        let a = LatticeElement::from_element(&tup(alg, &[1.0, -1.0]));
        let (plus, minus) = min_positive_decomposition(&a).unwrap();
        assert_eq!(plus.pi().unwrap().values, vec![1.0, 0.0]);
        assert_eq!(minus.pi().unwrap().values, vec![0.0, 1.0]);

        // positive element: negative part is trivial
        let p = LatticeElement::from_element(&tup(alg, &[1.0, 2.0]));
        let (_, pm) = min_positive_decomposition(&p).unwrap();
        assert!(lattice_equivalent(&pm, &LatticeElement::zero(alg), &probes2())
            .unwrap()
            .0);
    }

    #[test]
    fn decomposition_minimality_random() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let alg = AlgebraHandle::commutative(3);
        for _ in 0..100 {
            let a = random_dyadic_element(alg, &mut rng, 2, 2.0);
            let (plus, minus) = min_positive_decomposition(&a).unwrap();
            // the parts land on the clipped pointwise values
            let pi_a = a.pi().unwrap();
            assert!(plus.pi().unwrap().approx_eq(&pi_a.positive_part(), 1e-9));
            assert!(minus
                .pi()
                .unwrap()
                .approx_eq(&pi_a.scale(-1.0).positive_part(), 1e-9));
            // any positive decomposition a = p - q dominates the minimal one
            let bump = random_dyadic_element(alg, &mut rng, 1, 1.0);
            let (r, _) = min_positive_decomposition(&bump).unwrap();
            let p = plus.add(&r).unwrap();
            assert!(plus.pi().unwrap().leq(&p.pi().unwrap(), 1e-9));
        }
    }

    #[test]
    fn norm_examples() {
        let c = basic2(&[&[1.0, 2.0]]);
        let n = norm_basic(&c, &probes2()).unwrap();
        assert_relative_eq!(n.lower, 2.0, epsilon = 1e-8);
        assert_relative_eq!(n.upper, 2.0, epsilon = 1e-8);

        let unit = BasicElement::unit(alg2());
        let nu = norm_basic(&unit, &probes2()).unwrap();
        assert_relative_eq!(nu.lower, 1.0, epsilon = 1e-8);

        // the norm takes convex combinations into account
        let two = basic2(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let n2 = norm_basic(&two, &probes2()).unwrap();
        assert_relative_eq!(n2.lower, 1.5, epsilon = 1e-8);
    }

    #[test]
    fn embedding_is_isometric_commutative() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let alg = AlgebraHandle::commutative(4);
        let probes = ProbeFamily::exact_points(alg).unwrap();
        for _ in 0..250 {
            let x = random_dyadic_tuple(alg, &mut rng, 3.0);
            let image = LatticeElement::from_element(&x);
            let n = norm_element(&image, &probes).unwrap();
            let expect = x.operator_norm();
            assert!(n.contains(expect, 1e-7), "expected {expect}, got {n:?}");
            assert!((n.upper - n.lower).abs() <= 1e-7);
        }
    }

    #[test]
    fn embedding_is_isometric_matrix() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        for trial in 0..250 {
            let dim = 2 + trial % 3;
            let alg = AlgebraHandle::matrix(dim);
            let raw = nalgebra::DMatrix::from_fn(dim, dim, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let x =
                HermitianElement::from_matrix(alg, (&raw + raw.adjoint()).scale(0.5)).unwrap();
            let image = LatticeElement::from_element(&x);
            let probes = ProbeFamily::for_elements(
                alg,
                &[&image.positive, &image.negative],
                16,
                trial as u64,
            );
            let n = norm_element(&image, &probes).unwrap();
            assert!(
                n.contains(x.operator_norm(), 1e-6),
                "norm interval {n:?} misses {}",
                x.operator_norm()
            );
        }
    }

    #[test]
    fn complements_examples() {
        // basic singleton: upper complement is the element itself
        let x = tup(alg2(), &[1.0, 2.0]);
        let p = LatticeElement::from_element(&x);
        let comp = complements(&p).unwrap();
        assert_eq!(comp.certainty, Certainty::Exact);
        let pi_up = comp.upper.pi().unwrap();
        assert!(pi_up.approx_eq(&p.pi().unwrap(), 1e-8));
        let pi_low = comp.lower.pi().unwrap();
        assert!(pi_low.approx_eq(&p.pi().unwrap(), 1e-8));

        // a difference with a two-generator negative part
        let p2 = LatticeElement::new(
            basic2(&[&[2.0, 2.0]]),
            basic2(&[&[1.0, 0.0], &[0.0, 1.0]]),
        )
        .unwrap();
        let comp2 = complements(&p2).unwrap();
        let up = comp2.upper.pi().unwrap();
        let base = p2.pi().unwrap();
        for i in 0..2 {
            assert!(up.at(i) >= base.at(i) - 1e-8);
        }
    }

    #[test]
    fn complement_chain_random() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let alg = AlgebraHandle::commutative(3);
        for _ in 0..200 {
            let a = random_dyadic_element(alg, &mut rng, 2, 2.0);
            let comp = complements(&a).unwrap();
            for i in 0..3 {
                let rho = StateFunctional::point(i);
                let low = comp.lower.s_at(&rho).unwrap();
                let dl = comp.double_lower.s_at(&rho).unwrap();
                let du = comp.double_upper.s_at(&rho).unwrap();
                let up = comp.upper.s_at(&rho).unwrap();
                assert!(low <= du + 1e-7, "P_c <= P^cc fails");
                assert!(du <= dl + 1e-7, "P^cc <= P_cc fails");
                assert!(dl <= up + 1e-7, "P_cc <= P^c fails");
            }
        }
    }

    #[test]
    fn pi_examples_and_lattice_map() {
        let c = basic2(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert_eq!(c.pi().unwrap().values, vec![1.0, 1.0]);

        let x = tup(alg2(), &[0.5, -1.5]);
        let image = LatticeElement::from_element(&x);
        assert_eq!(image.pi().unwrap().values, vec![0.5, -1.5]);

        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let alg = AlgebraHandle::commutative(3);
        for _ in 0..500 {
            let a = random_dyadic_element(alg, &mut rng, 2, 2.0);
            let b = random_dyadic_element(alg, &mut rng, 2, 2.0);
            // linearity (exact on the dyadic grid)
            assert_eq!(
                a.add(&b).unwrap().pi().unwrap().values,
                a.pi().unwrap().add(&b.pi().unwrap()).unwrap().values
            );
            // lattice map
            assert_eq!(
                wedge(&a, &b).unwrap().pi().unwrap().values,
                a.pi().unwrap().meet(&b.pi().unwrap()).unwrap().values
            );
            assert_eq!(
                vee(&a, &b).unwrap().pi().unwrap().values,
                a.pi().unwrap().join(&b.pi().unwrap()).unwrap().values
            );
        }
    }

    #[test]
    fn s_rep_examples() {
        let alg = AlgebraHandle::matrix(2);
        let c = BasicElement::basic(
            alg,
            vec![
                HermitianElement::diag(alg, &[1.0, 2.0]).unwrap(),
                HermitianElement::diag(alg, &[2.0, 1.0]).unwrap(),
            ],
        )
        .unwrap();
        let mixed = StateFunctional::maximally_mixed(2);
        assert_relative_eq!(c.s_at(&mixed).unwrap(), 1.5, epsilon = 1e-10);

        let x = HermitianElement::diag(alg, &[3.0, -1.0]).unwrap();
        let s = BasicElement::singleton(x.clone(), Polarity::Basic);
        let rho = StateFunctional::vector_real(&[1.0, 0.0]).unwrap();
        assert_relative_eq!(s.s_at(&rho).unwrap(), rho.eval(&x).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn s_rep_additive_random() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let alg = AlgebraHandle::commutative(3);
        let probes = ProbeFamily::exact_points(alg).unwrap();
        for _ in 0..200 {
            let a = random_dyadic_element(alg, &mut rng, 2, 2.0);
            let b = random_dyadic_element(alg, &mut rng, 2, 2.0);
            let sum = a.add(&b).unwrap();
            for rho in &probes.states {
                assert_relative_eq!(
                    sum.s_at(rho).unwrap(),
                    a.s_at(rho).unwrap() + b.s_at(rho).unwrap(),
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn lift_examples() {
        let alg = alg2();
        let v = L1Image::new(alg, vec![1.5, -0.5]).unwrap();
        let cv = cv_lift(&v);
        let cc = cc_lift(&v);
        assert!(cv.pi().unwrap().approx_eq(&v, 1e-12));
        assert!(cc.pi().unwrap().approx_eq(&v, 1e-12));

        // constant one lifts to the unit on both sides
        let one = L1Image::new(alg, vec![1.0, 1.0]).unwrap();
        let u = LatticeElement::from_basic(BasicElement::unit(alg)).unwrap();
        let probes = probes2();
        assert!(lattice_equivalent(&cv_lift(&one), &u, &probes).unwrap().0);
        assert!(lattice_equivalent(&cc_lift(&one), &u, &probes).unwrap().0);

        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let w = L1Image::new(
                alg,
                vec![
                    rng.random_range(-32..32) as f64 / 16.0,
                    rng.random_range(-32..32) as f64 / 16.0,
                ],
            )
            .unwrap();
            // cc <= cv in the pointwise order of s-representations
            for i in 0..2 {
                let rho = StateFunctional::point(i);
                assert!(
                    cc_lift(&w).s_at(&rho).unwrap() <= cv_lift(&w).s_at(&rho).unwrap() + 1e-9
                );
            }
        }
    }

    #[test]
    fn restriction_examples() {
        let big = AlgebraHandle::commutative(3);
        let spec = SubsystemSpec::from_coordinate_subset(3, &[0, 1]).unwrap();

        // element already in the subsystem image: exact retraction
        let small = AlgebraHandle::commutative(2);
        let x = tup(small, &[0.5, 2.0]);
        let included = spec.include(&x, big).unwrap();
        let image = LatticeElement::from_element(&included);
        let back = restrict_basic(&image, &spec).unwrap();
        assert!(back.pi().unwrap().approx_eq(
            &LatticeElement::from_element(&x).pi().unwrap(),
            1e-9
        ));

        // the antibasic restriction drops to the fiber minimum
        let c = LatticeElement::from_basic(
            BasicElement::basic(big, vec![tup(big, &[1.0, 2.0, 5.0])]).unwrap(),
        )
        .unwrap();
        let r = restrict_antibasic(&c, &spec).unwrap();
        assert_eq!(r.pi().unwrap().values, vec![1.0, 2.0]);

        // magnifying / reducing
        let rb = restrict_basic(&c, &spec).unwrap();
        assert_eq!(rb.pi().unwrap().values, vec![1.0, 5.0]);
    }

    #[test]
    fn restriction_order_random() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(37);
        let big = AlgebraHandle::commutative(4);
        let spec = SubsystemSpec::from_coordinate_subset(4, &[0, 2]).unwrap();
        for _ in 0..300 {
            let a = random_dyadic_element(big, &mut rng, 2, 2.0);
            let b = random_dyadic_element(big, &mut rng, 2, 2.0);
            let rbar = restrict_antibasic(&a, &spec).unwrap();
            let runder = restrict_basic(&a, &spec).unwrap();
            // rbar <= runder pointwise
            assert!(rbar
                .pi()
                .unwrap()
                .leq(&runder.pi().unwrap(), 1e-9));
            // mixed subadditivity: rbar(a+b) <= runder(a) + rbar(b)
            let lhs = restrict_antibasic(&a.add(&b).unwrap(), &spec).unwrap();
            let rhs = runder.add(&restrict_antibasic(&b, &spec).unwrap()).unwrap();
            assert!(lhs.pi().unwrap().leq(&rhs.pi().unwrap(), 1e-9));
        }
    }

    #[test]
    fn matrix_restriction_properties() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let alg = AlgebraHandle::matrix(4);
        let spec = SubsystemSpec::MatrixBlocks {
            blocks: vec![vec![0, 1], vec![2, 3]],
        };
        for trial in 0..50 {
            let raw = nalgebra::DMatrix::from_fn(4, 4, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let x = HermitianElement::from_matrix(alg, (&raw + raw.adjoint()).scale(0.5)).unwrap();
            let image = LatticeElement::from_element(&x);
            let up = restrict_basic(&image, &spec).unwrap();
            let down = restrict_antibasic(&image, &spec).unwrap();
            let probes =
                ProbeFamily::for_elements(alg, &[&image.positive], 24, 100 + trial as u64);
            // magnifying: inclusion of the basic restriction dominates the element
            let (ok_up, _) = lattice_leq(&image, &up, &probes).unwrap();
            assert!(ok_up, "basic restriction must magnify");
            let (ok_down, _) = lattice_leq(&down, &image, &probes).unwrap();
            assert!(ok_down, "antibasic restriction must reduce");
        }
    }
}
