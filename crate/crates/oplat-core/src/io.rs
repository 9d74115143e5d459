//! Interchange formats. Matrices travel as row-major [re, im] pairs and
//! tuples as plain value lists, so files round-trip bit-exactly.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::algebra::{AlgebraHandle, AlgebraKind, ElementData, HermitianElement};
use crate::error::{Error, Result};
use crate::lattice::{BasicElement, LatticeElement, Polarity};
use crate::pmap::PMapTable;
use crate::poset::{CompletionLattice, FinitePoset};

pub fn element_to_json(x: &HermitianElement) -> Value {
    match &x.data {
        ElementData::Tuple(v) => json!({
            "spectrum": v.len(),
            "values": v,
        }),
        ElementData::Matrix(m) => {
            // nalgebra iterates column-major; emit row-major
            let n = m.nrows();
            let mut row_major = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let z = m[(i, j)];
                    row_major.push([z.re, z.im]);
                }
            }
            json!({
                "dim": n,
                "entries": row_major,
            })
        }
    }
}

pub fn element_from_json(v: &Value, tolerance: f64) -> Result<HermitianElement> {
    if let Some(values) = v.get("values") {
        let vals: Vec<f64> = serde_json::from_value(values.clone())?;
        let spectrum = v
            .get("spectrum")
            .and_then(Value::as_u64)
            .unwrap_or(vals.len() as u64) as usize;
        if spectrum != vals.len() {
            return Err(Error::DimensionMismatch("spectrum/value length".into()));
        }
        let alg = AlgebraHandle::commutative(spectrum).with_tolerance(tolerance);
        return HermitianElement::from_tuple(alg, vals);
    }
    let dim = v
        .get("dim")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::InvalidInput("missing dim".into()))? as usize;
    let entries: Vec<[f64; 2]> = serde_json::from_value(
        v.get("entries")
            .cloned()
            .ok_or_else(|| Error::InvalidInput("missing entries".into()))?,
    )?;
    if entries.len() != dim * dim {
        return Err(Error::DimensionMismatch("entry count".into()));
    }
    let m = DMatrix::from_fn(dim, dim, |i, j| {
        let [re, im] = entries[i * dim + j];
        Complex64::new(re, im)
    });
    let alg = AlgebraHandle::matrix(dim).with_tolerance(tolerance);
    HermitianElement::from_matrix(alg, m)
}

pub fn algebra_to_json(alg: &AlgebraHandle) -> Value {
    match alg.kind {
        AlgebraKind::Commutative(m) => json!({
            "kind": "commutative",
            "size": m,
            "tolerance": alg.tolerance,
        }),
        AlgebraKind::Matrix(n) => json!({
            "kind": "matrix",
            "size": n,
            "tolerance": alg.tolerance,
        }),
    }
}

pub fn algebra_from_json(v: &Value) -> Result<AlgebraHandle> {
    let kind = v
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::InvalidInput("missing algebra kind".into()))?;
    let size = v
        .get("size")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::InvalidInput("missing algebra size".into()))? as usize;
    let tol = v
        .get("tolerance")
        .and_then(Value::as_f64)
        .unwrap_or(crate::algebra::DEFAULT_TOLERANCE);
    match kind {
        "commutative" => Ok(AlgebraHandle::commutative(size).with_tolerance(tol)),
        "matrix" => Ok(AlgebraHandle::matrix(size).with_tolerance(tol)),
        other => Err(Error::InvalidInput(format!("unknown algebra kind {other}"))),
    }
}

pub fn basic_to_json(b: &BasicElement) -> Value {
    json!({
        "algebra": algebra_to_json(&b.algebra),
        "polarity": match b.polarity {
            Polarity::Basic => "basic",
            Polarity::Antibasic => "antibasic",
        },
        "generators": b.generators.iter().map(element_to_json).collect::<Vec<_>>(),
    })
}

pub fn basic_from_json(v: &Value) -> Result<BasicElement> {
    let algebra = algebra_from_json(
        v.get("algebra")
            .ok_or_else(|| Error::InvalidInput("missing algebra".into()))?,
    )?;
    let polarity = match v.get("polarity").and_then(Value::as_str) {
        Some("basic") | None => Polarity::Basic,
        Some("antibasic") => Polarity::Antibasic,
        Some(other) => {
            return Err(Error::InvalidInput(format!("unknown polarity {other}")))
        }
    };
    let generators = v
        .get("generators")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::InvalidInput("missing generators".into()))?
        .iter()
        .map(|g| element_from_json(g, algebra.tolerance))
        .collect::<Result<Vec<_>>>()?;
    BasicElement::new(algebra, generators, polarity)
}

pub fn lattice_element_to_json(a: &LatticeElement) -> Value {
    json!({
        "positive": basic_to_json(&a.positive),
        "negative": basic_to_json(&a.negative),
    })
}

pub fn lattice_element_from_json(v: &Value) -> Result<LatticeElement> {
    let positive = basic_from_json(
        v.get("positive")
            .ok_or_else(|| Error::InvalidInput("missing positive part".into()))?,
    )?;
    let negative = basic_from_json(
        v.get("negative")
            .ok_or_else(|| Error::InvalidInput("missing negative part".into()))?,
    )?;
    LatticeElement::new(positive, negative)
}

pub fn poset_to_json(s: &FinitePoset) -> Value {
    let mut pairs = Vec::new();
    for i in 0..s.size() {
        for j in 0..s.size() {
            if i != j && s.leq(i, j) {
                pairs.push(vec![i, j]);
            }
        }
    }
    json!({ "size": s.size(), "pairs": pairs })
}

pub fn poset_from_json(v: &Value) -> Result<FinitePoset> {
    let size = v
        .get("size")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::InvalidInput("missing poset size".into()))? as usize;
    let pairs: Vec<(usize, usize)> = serde_json::from_value(
        v.get("pairs")
            .cloned()
            .ok_or_else(|| Error::InvalidInput("missing pairs".into()))?,
    )?;
    FinitePoset::from_pairs(size, &pairs)
}

pub fn completion_to_json(l: &CompletionLattice) -> Value {
    json!({
        "poset": poset_to_json(&l.poset),
        "cuts": l.cuts.iter().map(|c| json!({"upper": c.upper, "lower": c.lower})).collect::<Vec<_>>(),
        "meet": l.meet,
        "join": l.join,
        "top": l.top,
        "bottom": l.bottom,
        "embedding": l.embed,
    })
}

pub fn pmap_table_to_json(t: &PMapTable) -> Value {
    json!({
        "domain_algebra": algebra_to_json(&t.domain_algebra),
        "codomain_algebra": algebra_to_json(&t.codomain_algebra),
        "domain": t.domain.iter().map(|p| element_to_json(&p.base)).collect::<Vec<_>>(),
        "values": t.values.iter().map(|p| element_to_json(&p.base)).collect::<Vec<_>>(),
        "unit_image": element_to_json(&t.unit_image.base),
    })
}

pub fn pmap_table_from_json(v: &Value) -> Result<PMapTable> {
    use crate::algebra::ProjectionElement;
    let domain_algebra = algebra_from_json(
        v.get("domain_algebra")
            .ok_or_else(|| Error::InvalidInput("missing domain algebra".into()))?,
    )?;
    let codomain_algebra = algebra_from_json(
        v.get("codomain_algebra")
            .ok_or_else(|| Error::InvalidInput("missing codomain algebra".into()))?,
    )?;
    let parse_projs = |key: &str, tol: f64| -> Result<Vec<ProjectionElement>> {
        v.get(key)
            .and_then(Value::as_array)
            .ok_or_else(|| Error::InvalidInput(format!("missing {key}")))?
            .iter()
            .map(|e| ProjectionElement::new(element_from_json(e, tol)?))
            .collect()
    };
    let domain = parse_projs("domain", domain_algebra.tolerance)?;
    let values = parse_projs("values", codomain_algebra.tolerance)?;
    let mut table = PMapTable::new(domain_algebra, codomain_algebra, domain, values)?;
    if let Some(u) = v.get("unit_image") {
        table = table.with_unit_image(ProjectionElement::new(element_from_json(
            u,
            codomain_algebra.tolerance,
        )?)?);
    }
    Ok(table)
}

/// Full witness emission for the tensor retraction obstruction: every matrix
/// and the forcing chain of dominating values.
pub fn obstruction_witness_to_json(w: &crate::pmap::ObstructionWitness) -> Value {
    json!({
        "k": w.k,
        "parts": w.parts.iter().map(|p| json!({
            "projection": element_to_json(&p.projection.base),
            "value_gap": p.value_gap,
            "forcing_chain": p.certificates.iter().map(|c| json!({
                "dominator": element_to_json(&c.dominator.base),
                "retract_value": element_to_json(&c.retract_value.base),
            })).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

/// Hex digest prefix used as a stable instance identifier in reports.
pub fn instance_hash(v: &Value) -> String {
    use sha2::{Digest, Sha256};
    let canonical = serde_json::to_string(v).unwrap_or_default();
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let digest = hasher.finalize();
    digest
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_roundtrip_bit_exact() {
        let alg = AlgebraHandle::matrix(2);
        let m = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(0.1 + 0.2, 0.0),
            Complex64::new(1.0 / 3.0, -0.7),
            Complex64::new(1.0 / 3.0, 0.7),
            Complex64::new(-2.5, 0.0),
        ]);
        let x = HermitianElement::from_matrix(alg, m).unwrap();
        let j = element_to_json(&x);
        let back = element_from_json(&j, alg.tolerance).unwrap();
        assert_eq!(
            serde_json::to_string(&j).unwrap(),
            serde_json::to_string(&element_to_json(&back)).unwrap()
        );
        assert!(back.approx_eq(&x, 0.0));
    }

    #[test]
    fn tuple_roundtrip() {
        let alg = AlgebraHandle::commutative(3);
        let x = HermitianElement::from_tuple(alg, vec![0.1, -2.0, 1.0 / 7.0]).unwrap();
        let back = element_from_json(&element_to_json(&x), alg.tolerance).unwrap();
        assert!(back.approx_eq(&x, 0.0));
    }

    #[test]
    fn basic_element_roundtrip() {
        let alg = AlgebraHandle::commutative(2);
        let b = BasicElement::basic(
            alg,
            vec![
                HermitianElement::from_tuple(alg, vec![1.0, 2.0]).unwrap(),
                HermitianElement::from_tuple(alg, vec![2.0, 1.0]).unwrap(),
            ],
        )
        .unwrap();
        let back = basic_from_json(&basic_to_json(&b)).unwrap();
        assert_eq!(back.generators.len(), 2);
        assert_eq!(back.polarity, Polarity::Basic);
    }

    #[test]
    fn poset_roundtrip() {
        let s = FinitePoset::diamond();
        let back = poset_from_json(&poset_to_json(&s)).unwrap();
        assert_eq!(&back, &s);
    }

    #[test]
    fn hash_stability() {
        let v = serde_json::json!({"a": 1, "b": [1.5, 2.5]});
        assert_eq!(instance_hash(&v), instance_hash(&v.clone()));
        assert_eq!(instance_hash(&v).len(), 16);
    }
}
