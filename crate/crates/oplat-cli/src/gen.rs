//! Seeded instance generators, emitted in the module interchange formats.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use oplat_core::algebra::{AlgebraHandle, HermitianElement};
use oplat_core::error::{Error, Result};
use oplat_core::io;
use oplat_core::pmap::PMapTable;
use oplat_core::projection::{angle_projection, principal_angles};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    BasicElement,
    ProjectionPair,
    PmapTable,
    Hermitian,
    Poset,
    Completion,
}

impl std::str::FromStr for InstanceKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "basic-element" => Ok(InstanceKind::BasicElement),
            "projection-pair" => Ok(InstanceKind::ProjectionPair),
            "pmap-table" => Ok(InstanceKind::PmapTable),
            "hermitian" => Ok(InstanceKind::Hermitian),
            "poset" => Ok(InstanceKind::Poset),
            "completion" => Ok(InstanceKind::Completion),
            other => Err(format!("unknown instance kind {other}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenParams {
    pub spectrum: usize,
    pub gens: usize,
    pub dim: usize,
    pub angle: f64,
    pub lattice: usize,
    pub size: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            spectrum: 3,
            gens: 2,
            dim: 4,
            angle: 0.3,
            lattice: 3,
            size: 5,
        }
    }
}

pub fn gen_instance(kind: InstanceKind, params: &GenParams, seed: u64) -> Result<Value> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        InstanceKind::BasicElement => {
            if params.spectrum == 0 || params.gens == 0 {
                return Err(Error::InvalidInput("spectrum and gens must be positive".into()));
            }
            let alg = AlgebraHandle::commutative(params.spectrum);
            let gens: Vec<Value> = (0..params.gens)
                .map(|_| {
                    let v: Vec<f64> = (0..params.spectrum)
                        .map(|_| rng.random_range(0..64) as f64 / 16.0)
                        .collect();
                    io::element_to_json(
                        &HermitianElement::from_tuple(alg, v).expect("tuple"),
                    )
                })
                .collect();
            Ok(json!({
                "algebra": io::algebra_to_json(&alg),
                "polarity": "basic",
                "generators": gens,
            }))
        }
        InstanceKind::ProjectionPair => {
            let alg = AlgebraHandle::matrix(params.dim);
            let p = angle_projection(alg, 0.0)?;
            let q = angle_projection(alg, params.angle)?;
            // conjugate by a random unitary so the pair is generic in its
            // orbit while keeping the requested principal angle
            let raw = DMatrix::from_fn(params.dim, params.dim, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let u = raw.qr().q();
            let conj = |x: &HermitianElement| -> Result<HermitianElement> {
                HermitianElement::from_matrix(alg, &u * x.to_matrix() * u.adjoint())
            };
            let pc = oplat_core::algebra::ProjectionElement::new(conj(&p.base)?)?;
            let qc = oplat_core::algebra::ProjectionElement::new(conj(&q.base)?)?;
            let angles = principal_angles(&pc, &qc);
            let measured = angles
                .iter()
                .find(|a| **a > 1e-9)
                .copied()
                .unwrap_or(0.0);
            if (measured - params.angle).abs() > 1e-8 {
                return Err(Error::InvalidInput(format!(
                    "constructed angle {measured} differs from requested {}",
                    params.angle
                )));
            }
            Ok(json!({
                "p": io::element_to_json(&pc.base),
                "q": io::element_to_json(&qc.base),
                "principal_angle": measured,
            }))
        }
        InstanceKind::PmapTable => {
            let k = params.lattice;
            if k == 0 || k > 6 {
                return Err(Error::InvalidInput("lattice order must lie in 1..=6".into()));
            }
            let alg = AlgebraHandle::commutative(k);
            let masks: Vec<u64> = (0..(1u64 << k)).collect();
            let proj = |m: u64| -> HermitianElement {
                let v: Vec<f64> = (0..k)
                    .map(|i| if m & (1 << i) != 0 { 1.0 } else { 0.0 })
                    .collect();
                HermitianElement::from_tuple(alg, v).expect("tuple")
            };
            // monotone values: send each atom to a random subset, extend by joins
            let atom_images: Vec<u64> = (0..k)
                .map(|_| rng.random_range(0..(1u64 << k)))
                .collect();
            let value_mask = |m: u64| -> u64 {
                let mut acc = 0u64;
                for (i, img) in atom_images.iter().enumerate() {
                    if m & (1 << i) != 0 {
                        acc |= img;
                    }
                }
                if m == (1 << k) - 1 {
                    (1 << k) - 1
                } else {
                    acc
                }
            };
            use oplat_core::algebra::ProjectionElement;
            let domain: Vec<ProjectionElement> = masks
                .iter()
                .map(|&m| ProjectionElement::new(proj(m)).expect("projection"))
                .collect();
            let values: Vec<ProjectionElement> = masks
                .iter()
                .map(|&m| ProjectionElement::new(proj(value_mask(m))).expect("projection"))
                .collect();
            // exhaustive monotonicity check before emission
            let table = PMapTable::new(alg, alg, domain, values)?;
            Ok(io::pmap_table_to_json(&table))
        }
        InstanceKind::Hermitian => {
            let alg = AlgebraHandle::matrix(params.dim);
            let raw = DMatrix::from_fn(params.dim, params.dim, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let x = HermitianElement::from_matrix(alg, (&raw + raw.adjoint()).scale(0.5))?;
            Ok(io::element_to_json(&x))
        }
        InstanceKind::Poset => {
            let n = params.size;
            if n == 0 || n > 16 {
                return Err(Error::InvalidInput("poset size must lie in 1..=16".into()));
            }
            Ok(io::poset_to_json(&oplat_core::poset::random_poset(n, &mut rng)))
        }
        InstanceKind::Completion => {
            let n = params.size;
            if n == 0 || n > 16 {
                return Err(Error::InvalidInput("poset size must lie in 1..=16".into()));
            }
            let s = oplat_core::poset::random_poset(n, &mut rng);
            let l = oplat_core::poset::build_completion(&s, 16)?;
            Ok(io::completion_to_json(&l))
        }
    }
}
