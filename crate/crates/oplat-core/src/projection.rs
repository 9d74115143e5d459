//! Projection-lattice algorithms on matrix algebras: meet and join by exact
//! range intersection and by alternating products, minimal/maximal commuting
//! bounds, and structural predicates with violation witnesses.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::algebra::{AlgebraHandle, AlgebraKind, HermitianElement, ProjectionElement};
use crate::error::{Error, Result};

/// Exact meet: the orthogonal projection onto the intersection of ranges,
/// computed from the null space of (2 - p - q).
pub fn wedge_exact(p: &ProjectionElement, q: &ProjectionElement) -> Result<ProjectionElement> {
    let alg = p.base.algebra;
    if alg != q.base.algebra {
        return Err(Error::AlgebraMismatch("wedge operands".into()));
    }
    match alg.kind {
        AlgebraKind::Commutative(_) => {
            let a = p.base.as_tuple()?;
            let b = q.base.as_tuple()?;
            let v: Vec<f64> = a.iter().zip(b).map(|(x, y)| x.min(*y)).collect();
            ProjectionElement::new(HermitianElement::from_tuple(alg, v)?)
        }
        AlgebraKind::Matrix(n) => {
            let two = HermitianElement::scalar(alg, 2.0);
            let gap = two.sub(&p.base)?.sub(&q.base)?;
            let eig = gap.eigen();
            // reproducible kernel threshold
            let thr = 1e3 * f64::EPSILON * n as f64;
            let cols: Vec<usize> = eig
                .values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v.abs() <= thr.max(1e-9))
                .map(|(i, _)| i)
                .collect();
            let mut span = DMatrix::<Complex64>::zeros(n, cols.len());
            for (c, &i) in cols.iter().enumerate() {
                span.set_column(c, &eig.vectors.column(i));
            }
            ProjectionElement::from_span(alg, &span)
        }
    }
}

/// De Morgan dual of the meet.
pub fn vee(p: &ProjectionElement, q: &ProjectionElement) -> Result<ProjectionElement> {
    Ok(wedge_exact(&p.complement(), &q.complement())?.complement())
}

#[derive(Debug, Clone)]
pub struct IterativeWedge {
    pub projection: ProjectionElement,
    pub iterations: usize,
    pub final_gap: f64,
}

/// Alternating-product meet: iterates x_{n+1} = p q x_n from x_0 = p until
/// successive iterates agree within `tol`, then rounds the spectrum to {0,1}
/// (guarding against eigenvalues stuck strictly between the rounding bands).
pub fn wedge_iterative(
    p: &ProjectionElement,
    q: &ProjectionElement,
    tol: f64,
    max_iter: usize,
) -> Result<IterativeWedge> {
    let alg = p.base.algebra;
    if alg != q.base.algebra {
        return Err(Error::AlgebraMismatch("wedge operands".into()));
    }
    if alg.is_commutative() {
        return Ok(IterativeWedge {
            projection: wedge_exact(p, q)?,
            iterations: 1,
            final_gap: 0.0,
        });
    }
    let pm = p.base.to_matrix();
    let qm = q.base.to_matrix();
    let mut x = pm.clone();
    let mut iterations = 0;
    let mut gap = f64::INFINITY;
    while iterations < max_iter {
        let next = &pm * &qm * &x;
        let next = (&next + next.adjoint()).scale(0.5);
        iterations += 1;
        gap = (&next - &x).norm();
        x = next;
        if gap <= tol {
            break;
        }
    }
    if gap > tol {
        return Err(Error::MaxIterExceeded {
            limit: max_iter,
            gap,
        });
    }
    // Round the spectrum; the alternating-product limit clusters at {0,1},
    // so a value inside the guard band marks a stalled iteration.
    const ROUNDING_BAND: f64 = 1e-4;
    let h = HermitianElement::from_matrix(alg, x)?;
    let eig = h.eigen();
    let band = tol.max(ROUNDING_BAND);
    let mut rounded = Vec::with_capacity(eig.values.len());
    for &v in &eig.values {
        if v >= 1.0 - band {
            rounded.push(1.0);
        } else if v <= band {
            rounded.push(0.0);
        } else {
            return Err(Error::InvalidInput(format!(
                "iterate eigenvalue {v} lies in the rounding gap"
            )));
        }
    }
    let projection = ProjectionElement::new(eig.recompose(alg, &rounded))?;
    Ok(IterativeWedge {
        projection,
        iterations,
        final_gap: gap,
    })
}

/// The maximal commuting minorant e_f and the minimal commuting majorant e^f
/// of e with respect to f.
pub fn commuting_bounds(
    e: &ProjectionElement,
    f: &ProjectionElement,
) -> Result<(ProjectionElement, ProjectionElement)> {
    let below = sum_orthogonal(
        &wedge_exact(e, f)?,
        &wedge_exact(e, &f.complement())?,
    )?;
    let ec = e.complement();
    let above = sum_orthogonal(
        &wedge_exact(&ec, f)?,
        &wedge_exact(&ec, &f.complement())?,
    )?
    .complement();
    Ok((below, above))
}

fn sum_orthogonal(a: &ProjectionElement, b: &ProjectionElement) -> Result<ProjectionElement> {
    ProjectionElement::new(a.base.add(&b.base)?)
}

/// Iterated commuting bounds against a multiplet: cycles the single-f
/// operator until stationary. Monotone projection sequences in M_n are
/// stationary after at most n strict steps.
pub fn commuting_bounds_multi(
    e: &ProjectionElement,
    family: &[ProjectionElement],
) -> Result<(ProjectionElement, ProjectionElement)> {
    let n = e.base.algebra.dim();
    let mut upper = e.clone();
    let mut steps = 0usize;
    loop {
        let mut changed = false;
        for f in family {
            let (_, up) = commuting_bounds(&upper, f)?;
            if !up.approx_eq(&upper, 1e-8) {
                upper = up;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        steps += 1;
        if steps > n + 1 {
            return Err(Error::MaxIterExceeded {
                limit: n + 1,
                gap: f64::NAN,
            });
        }
    }
    // e_F = ((e^c)^F)^c
    let mut lower_c = e.complement();
    let mut steps_l = 0usize;
    loop {
        let mut changed = false;
        for f in family {
            let (_, up) = commuting_bounds(&lower_c, f)?;
            if !up.approx_eq(&lower_c, 1e-8) {
                lower_c = up;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        steps_l += 1;
        if steps_l > n + 1 {
            return Err(Error::MaxIterExceeded {
                limit: n + 1,
                gap: f64::NAN,
            });
        }
    }
    Ok((lower_c.complement(), upper))
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct PairPredicates {
    pub orthogonal: bool,
    pub coorthogonal: bool,
    pub commuting: bool,
}

pub fn predicates(p: &ProjectionElement, q: &ProjectionElement) -> Result<PairPredicates> {
    let commuting = p.commutes_with(q);
    let orthogonal = p.orthogonal_to(q);
    let join = vee(p, q)?;
    let coorthogonal = commuting && join.rank == p.base.algebra.dim();
    Ok(PairPredicates {
        orthogonal,
        coorthogonal,
        commuting,
    })
}

/// Outcome of a lattice-law probe: either the law holds on the triple or the
/// two sides differ and are reported as witnesses.
#[derive(Debug, Clone)]
pub enum LawProbe {
    Holds,
    Violated {
        lhs: ProjectionElement,
        rhs: ProjectionElement,
        gap: f64,
    },
}

impl LawProbe {
    pub fn holds(&self) -> bool {
        matches!(self, LawProbe::Holds)
    }
}

fn law_probe(lhs: ProjectionElement, rhs: ProjectionElement) -> LawProbe {
    let gap = lhs.base.distance(&rhs.base);
    if gap <= 1e-8 {
        LawProbe::Holds
    } else {
        LawProbe::Violated { lhs, rhs, gap }
    }
}

/// (e v f) ^ g versus e v (f ^ g), for e <= g.
pub fn modularity_probe(
    e: &ProjectionElement,
    f: &ProjectionElement,
    g: &ProjectionElement,
) -> Result<LawProbe> {
    if !e.leq(g) {
        return Err(Error::InvalidInput("modularity probe requires e <= g".into()));
    }
    let lhs = wedge_exact(&vee(e, f)?, g)?;
    let rhs = vee(e, &wedge_exact(f, g)?)?;
    Ok(law_probe(lhs, rhs))
}

/// (e v f) ^ g versus (e ^ g) v (f ^ g).
pub fn distributivity_probe(
    e: &ProjectionElement,
    f: &ProjectionElement,
    g: &ProjectionElement,
) -> Result<LawProbe> {
    let lhs = wedge_exact(&vee(e, f)?, g)?;
    let rhs = vee(&wedge_exact(e, g)?, &wedge_exact(f, g)?)?;
    Ok(law_probe(lhs, rhs))
}

/// Rank-one projection onto a real-angle rotation of the first basis vector
/// in the plane of the first two coordinates.
pub fn angle_projection(alg: AlgebraHandle, theta: f64) -> Result<ProjectionElement> {
    let n = alg.dim();
    if n < 2 {
        return Err(Error::InvalidInput("need dimension >= 2".into()));
    }
    let mut v = DMatrix::<Complex64>::zeros(n, 1);
    v[(0, 0)] = Complex64::new(theta.cos(), 0.0);
    v[(1, 0)] = Complex64::new(theta.sin(), 0.0);
    ProjectionElement::from_span(alg, &v)
}

/// Seeded random projection of the given rank.
pub fn random_projection(
    alg: AlgebraHandle,
    rank: usize,
    rng: &mut impl rand::Rng,
) -> Result<ProjectionElement> {
    let n = alg.dim();
    let span = DMatrix::from_fn(n, rank.min(n), |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    ProjectionElement::from_span(alg, &span)
}

/// Principal angles between two projections: the arccosines of the singular
/// values of the product of range bases.
pub fn principal_angles(p: &ProjectionElement, q: &ProjectionElement) -> Vec<f64> {
    if p.rank == 0 || q.rank == 0 {
        return Vec::new();
    }
    let m = p.range_basis.adjoint() * &q.range_basis;
    let svd = m.svd(false, false);
    let mut angles: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|s| s.min(1.0).max(-1.0).acos())
        .collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    angles
}
