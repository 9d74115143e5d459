//! The verification suites: deterministic seeded batteries over every module,
//! emitting one record per check family.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use oplat_core::algebra::{
    chain_decomposition, func_calc, AlgebraHandle, FuncKind, HermitianElement,
    ProjectionElement, StateFunctional,
};
use oplat_core::error::Result;
use oplat_core::io;
use oplat_core::jordan::{
    self, eval_square_interval, lemma2_state_check, quadratic_cloud_at,
    schwarz22_check, sqr_single, sqrt_general_at, square_general_at, CloudType, GapWeight,
    GridConfig, PositiveMapTable,
};
use oplat_core::lattice::{
    cc_lift, cv_lift, complements, min_positive_decomposition, norm_element,
    random_dyadic_element, random_dyadic_tuple, restrict_antibasic, restrict_basic, vee as lvee,
    wedge as lwedge, BasicElement, Certainty, LatticeElement, ProbeFamily, SubsystemSpec,
};
use oplat_core::pmap::{
    coherent_lift, extend_pmap, filter_ops, gamma_counterexample, search_polar_violation,
    signature_probe, verify_section, winding_obstruction, FiniteLattice, PMapTable, PolarProbe,
    ProjectionFilter, QuotientSpec, Signature, GAMMA_DEFAULT_SEED,
};
use oplat_core::poset::{build_completion, enumerate_posets, extend_monotone, random_poset, FinitePoset};
use oplat_core::projection::{
    angle_projection, commuting_bounds, distributivity_probe, predicates, random_projection,
    vee as pvee, wedge_exact, wedge_iterative,
};

use crate::report::{CheckRecord, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteName {
    Lattice,
    Jordan,
    Projections,
    Pmap,
    Poset,
    All,
}

impl std::str::FromStr for SuiteName {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "lattice" => Ok(SuiteName::Lattice),
            "jordan" => Ok(SuiteName::Jordan),
            "projections" => Ok(SuiteName::Projections),
            "pmap" => Ok(SuiteName::Pmap),
            "poset" => Ok(SuiteName::Poset),
            "all" => Ok(SuiteName::All),
            other => Err(format!("unknown suite {other}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub seed: u64,
    pub tolerance: f64,
    /// Caps the per-family instance counts; zero keeps the defaults.
    pub count: usize,
    /// Caps matrix dimensions and poset sizes.
    pub max_dim: usize,
    pub timestamp: String,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 0,
            tolerance: 1e-10,
            count: 0,
            max_dim: 6,
            timestamp: "unset".into(),
        }
    }
}

impl SuiteConfig {
    fn n(&self, base: usize) -> usize {
        if self.count == 0 {
            base
        } else {
            base.min(self.count)
        }
    }

    fn dim(&self, base: usize) -> usize {
        base.min(self.max_dim).max(2)
    }
}

fn record(
    id: &str,
    op: &str,
    instance: serde_json::Value,
    pass: bool,
    certainty: Certainty,
    tolerance: f64,
    detail: String,
) -> CheckRecord {
    CheckRecord::new(
        id,
        op,
        io::instance_hash(&instance),
        pass,
        certainty,
        tolerance,
        detail,
    )
}

fn random_hermitian(alg: AlgebraHandle, rng: &mut ChaCha8Rng) -> HermitianElement {
    let n = alg.dim();
    let raw = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    HermitianElement::from_matrix(alg, (&raw + raw.adjoint()).scale(0.5)).expect("hermitian")
}

fn random_psd(alg: AlgebraHandle, rng: &mut ChaCha8Rng) -> HermitianElement {
    let n = alg.dim();
    let raw = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    HermitianElement::from_matrix(alg, &raw * raw.adjoint()).expect("psd")
}

fn random_pure(dim: usize, rng: &mut ChaCha8Rng) -> StateFunctional {
    StateFunctional::vector(DVector::from_fn(dim, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }))
    .expect("nonzero")
}

// ---------------------------------------------------------------------------
// poset suite
// ---------------------------------------------------------------------------

pub fn poset_suite(cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x01);
    let mut out = Vec::new();

    // Galois property and triple-complement stability, exhaustive to size 5.
    let mut galois_ok = true;
    let mut checked = 0usize;
    for n in 1..=cfg.dim(5).min(5) {
        for s in enumerate_posets(n) {
            for c in 0..=s.full_mask() {
                let lc = s.lower_complement(c);
                let ulc = s.upper_complement(lc);
                if s.lower_complement(ulc) != lc {
                    galois_ok = false;
                }
                checked += 1;
            }
        }
    }
    out.push(record(
        "poset-galois-triple-complement",
        "lower_complement",
        json!({"sizes": "1..=5"}),
        galois_ok,
        Certainty::Exact,
        0.0,
        format!("{checked} subset closures checked"),
    ));

    // Lattice axioms and idempotence: exhaustive classes on small sizes,
    // sampled posets for 6..=8.
    let mut axioms_ok = true;
    let mut idem_ok = true;
    let mut classes = 0usize;
    let exhaustive_max = if cfg.count == 0 {
        5
    } else if cfg.count < 10 {
        3
    } else {
        4
    };
    for n in 1..=exhaustive_max {
        for s in enumerate_posets(n) {
            let l = build_completion(&s, 32)?;
            classes += 1;
            if l.verify_lattice_axioms().is_err() {
                axioms_ok = false;
            }
            if l.verify_idempotent().is_err() {
                idem_ok = false;
            }
        }
    }
    let mut sampled = 0usize;
    for n in 6..=cfg.dim(8).max(6) {
        for _ in 0..cfg.n(12) {
            let s = random_poset(n, &mut rng);
            let l = build_completion(&s, 32)?;
            sampled += 1;
            if l.verify_lattice_axioms().is_err() {
                axioms_ok = false;
            }
            if l.verify_idempotent().is_err() {
                idem_ok = false;
            }
        }
    }
    out.push(record(
        "poset-completion-lattice-axioms",
        "build_completion",
        json!({"exhaustive_classes": classes, "sampled": sampled}),
        axioms_ok,
        Certainty::Exact,
        0.0,
        format!("{classes} classes exhaustive, {sampled} sampled posets"),
    ));
    out.push(record(
        "poset-completion-idempotence",
        "build_completion",
        json!({"exhaustive_classes": classes, "sampled": sampled}),
        idem_ok,
        Certainty::Exact,
        0.0,
        "completion of a completion reproduces it".into(),
    ));

    // Monotone extension existence: exhaustive maps to size 4, sampled 5..6.
    let mut ext_ok = true;
    let mut ext_checked = 0usize;
    let ext_exhaustive_max = if cfg.count != 0 && cfg.count < 10 { 3 } else { 4 };
    for n in 1..=ext_exhaustive_max {
        for s in enumerate_posets(n) {
            let l = build_completion(&s, 32)?;
            for domain_mask in 0u32..(1 << n) {
                let members: Vec<usize> =
                    (0..n).filter(|i| domain_mask & (1 << i) != 0).collect();
                // enumerate monotone maps by DFS
                let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
                while let Some(prefix) = stack.pop() {
                    if prefix.len() == members.len() {
                        let mut f = vec![None; n];
                        for (k, &m) in members.iter().enumerate() {
                            f[m] = Some(prefix[k]);
                        }
                        ext_checked += 1;
                        if extend_monotone(&s, &l, &f, None, None).is_err() {
                            ext_ok = false;
                        }
                        continue;
                    }
                    let next_m = members[prefix.len()];
                    'cand: for cand in 0..l.len() {
                        for (k, &m) in members.iter().enumerate().take(prefix.len()) {
                            if s.leq(m, next_m) && !l.leq(prefix[k], cand) {
                                continue 'cand;
                            }
                            if s.leq(next_m, m) && !l.leq(cand, prefix[k]) {
                                continue 'cand;
                            }
                        }
                        let mut p = prefix.clone();
                        p.push(cand);
                        stack.push(p);
                    }
                }
            }
        }
    }
    for n in 5..=6usize {
        let sources: Vec<FinitePoset> = if n == 5 && cfg.count == 0 {
            enumerate_posets(5)
        } else {
            (0..cfg.n(16)).map(|_| random_poset(n, &mut rng)).collect()
        };
        for s in sources {
            let l = build_completion(&s, 32)?;
            for _ in 0..cfg.n(8) {
                let mut f = vec![None; n];
                // random monotone partial map: greedy assignment
                for i in 0..n {
                    if rng.random_bool(0.5) {
                        continue;
                    }
                    let mut lo = l.bottom;
                    let mut hi = l.top;
                    for j in 0..n {
                        if let Some(fj) = f[j] {
                            if s.leq(j, i) {
                                lo = l.join_of(lo, fj);
                            }
                            if s.leq(i, j) {
                                hi = l.meet_of(hi, fj);
                            }
                        }
                    }
                    if !l.leq(lo, hi) {
                        continue;
                    }
                    // pick a random element between lo and hi
                    let candidates: Vec<usize> = (0..l.len())
                        .filter(|&c| l.leq(lo, c) && l.leq(c, hi))
                        .collect();
                    f[i] = Some(candidates[rng.random_range(0..candidates.len())]);
                }
                ext_checked += 1;
                if extend_monotone(&s, &l, &f, None, None).is_err() {
                    ext_ok = false;
                }
            }
        }
    }
    out.push(record(
        "poset-monotone-extension-exists",
        "extend_monotone",
        json!({"maps": ext_checked}),
        ext_ok,
        Certainty::Exact,
        0.0,
        format!("{ext_checked} partial maps extended"),
    ));
    Ok(out)
}

// ---------------------------------------------------------------------------
// lattice suite
// ---------------------------------------------------------------------------

pub fn lattice_suite(cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x02);
    let mut out = Vec::new();
    let alg = AlgebraHandle::commutative(3).with_tolerance(cfg.tolerance);

    // quotient map: linear, monotone, lattice-preserving (exact dyadic)
    let mut ok = true;
    let n_inst = cfg.n(500);
    for _ in 0..n_inst {
        let a = random_dyadic_element(alg, &mut rng, 2, 2.0);
        let b = random_dyadic_element(alg, &mut rng, 2, 2.0);
        let pa = a.pi()?;
        let pb = b.pi()?;
        if a.add(&b)?.pi()?.values != pa.add(&pb)?.values {
            ok = false;
        }
        if lwedge(&a, &b)?.pi()?.values != pa.meet(&pb)?.values {
            ok = false;
        }
        if lvee(&a, &b)?.pi()?.values != pa.join(&pb)?.values {
            ok = false;
        }
        // monotone: a <= a + positive
        let bump = random_dyadic_element(alg, &mut rng, 1, 1.0);
        let (bp, _) = min_positive_decomposition(&bump)?;
        let bigger = a.add(&bp)?;
        if !pa.leq(&bigger.pi()?, 0.0) {
            ok = false;
        }
    }
    out.push(record(
        "lattice-quotient-linear-monotone-lattice",
        "pi",
        json!({"instances": n_inst}),
        ok,
        Certainty::Exact,
        0.0,
        format!("{n_inst} dyadic instances, exact equality"),
    ));

    // cancellation on the exhaustive small grid
    let vals = [0.0, 0.5, 1.0];
    let alg2 = AlgebraHandle::commutative(2).with_tolerance(cfg.tolerance);
    let probes2 = ProbeFamily::exact_points(alg2)?;
    let mut cancel_ok = true;
    let mut cancel_count = 0usize;
    let singles: Vec<HermitianElement> = vals
        .iter()
        .flat_map(|&x| {
            vals.iter()
                .map(move |&y| HermitianElement::from_tuple(alg2, vec![x, y]).expect("tuple"))
        })
        .collect();
    for a in &singles {
        for b in &singles {
            for e in &singles {
                use oplat_core::lattice::{equivalent, Polarity};
                let ba = BasicElement::singleton(a.clone(), Polarity::Basic);
                let bb = BasicElement::singleton(b.clone(), Polarity::Basic);
                let be = BasicElement::singleton(e.clone(), Polarity::Basic);
                let lhs = equivalent(&ba.minkowski(&be)?, &bb.minkowski(&be)?, &probes2)?.0;
                let rhs = equivalent(&ba, &bb, &probes2)?.0;
                if lhs != rhs {
                    cancel_ok = false;
                }
                cancel_count += 1;
            }
        }
    }
    out.push(record(
        "lattice-cancellation",
        "add",
        json!({"grid": "3-value, 2-point spectrum"}),
        cancel_ok,
        Certainty::Exact,
        0.0,
        format!("{cancel_count} exhaustive triples"),
    ));

    // isometry of the embedding, both kinds
    let mut iso_ok = true;
    let n_iso = cfg.n(250);
    let probes_c = ProbeFamily::exact_points(alg)?;
    for _ in 0..n_iso {
        let x = random_dyadic_tuple(alg, &mut rng, 3.0);
        let nb = norm_element(&LatticeElement::from_element(&x), &probes_c)?;
        if !nb.contains(x.operator_norm(), 1e-7) {
            iso_ok = false;
        }
    }
    for t in 0..n_iso {
        let dim = cfg.dim(2 + t % 3);
        let malg = AlgebraHandle::matrix(dim).with_tolerance(cfg.tolerance);
        let x = random_hermitian(malg, &mut rng);
        let image = LatticeElement::from_element(&x);
        let probes =
            ProbeFamily::for_elements(malg, &[&image.positive, &image.negative], 16, cfg.seed ^ t as u64);
        let nb = norm_element(&image, &probes)?;
        if !nb.contains(x.operator_norm(), 1e-6) {
            iso_ok = false;
        }
    }
    out.push(record(
        "lattice-embedding-isometric",
        "norm",
        json!({"instances": 2 * n_iso}),
        iso_ok,
        Certainty::ProbeCertified,
        1e-6,
        format!("{n_iso} commutative exact, {n_iso} matrix interval"),
    ));

    // complement chain on random commutative instances
    let mut chain_ok = true;
    let n_chain = cfg.n(200);
    for _ in 0..n_chain {
        let a = random_dyadic_element(alg, &mut rng, 2, 2.0);
        let comp = complements(&a)?;
        for i in 0..3 {
            let rho = StateFunctional::point(i);
            let low = comp.lower.s_at(&rho)?;
            let du = comp.double_upper.s_at(&rho)?;
            let dl = comp.double_lower.s_at(&rho)?;
            let up = comp.upper.s_at(&rho)?;
            if !(low <= du + 1e-7 && du <= dl + 1e-7 && dl <= up + 1e-7) {
                chain_ok = false;
            }
        }
    }
    out.push(record(
        "lattice-complement-chain",
        "complements",
        json!({"instances": n_chain}),
        chain_ok,
        Certainty::Exact,
        1e-7,
        format!("{n_chain} instances, four-term chain"),
    ));

    // section property of the lifts and their order
    let mut lift_ok = true;
    let n_lift = cfg.n(200);
    for _ in 0..n_lift {
        let v = oplat_core::lattice::L1Image::new(
            alg,
            (0..3)
                .map(|_| rng.random_range(-32..32) as f64 / 16.0)
                .collect(),
        )?;
        if !cv_lift(&v).pi()?.approx_eq(&v, 0.0) || !cc_lift(&v).pi()?.approx_eq(&v, 0.0) {
            lift_ok = false;
        }
        for i in 0..3 {
            let rho = StateFunctional::point(i);
            if cc_lift(&v).s_at(&rho)? > cv_lift(&v).s_at(&rho)? + 1e-9 {
                lift_ok = false;
            }
        }
    }
    out.push(record(
        "lattice-lift-sections",
        "cv_lift",
        json!({"instances": n_lift}),
        lift_ok,
        Certainty::Exact,
        1e-9,
        "section property and lift order".into(),
    ));

    // restrictions: order, retraction, mixed subadditivity
    let big = AlgebraHandle::commutative(4).with_tolerance(cfg.tolerance);
    let spec = SubsystemSpec::from_coordinate_subset(4, &[0, 2])?;
    let mut restr_ok = true;
    let n_restr = cfg.n(300);
    for _ in 0..n_restr {
        let a = random_dyadic_element(big, &mut rng, 2, 2.0);
        let b = random_dyadic_element(big, &mut rng, 2, 2.0);
        let rbar_a = restrict_antibasic(&a, &spec)?;
        let runder_a = restrict_basic(&a, &spec)?;
        if !rbar_a.pi()?.leq(&runder_a.pi()?, 1e-9) {
            restr_ok = false;
        }
        let lhs = restrict_antibasic(&a.add(&b)?, &spec)?;
        let rhs = runder_a.add(&restrict_antibasic(&b, &spec)?)?;
        if !lhs.pi()?.leq(&rhs.pi()?, 1e-9) {
            restr_ok = false;
        }
    }
    out.push(record(
        "lattice-restriction-order",
        "restrict_basic",
        json!({"instances": n_restr}),
        restr_ok,
        Certainty::Exact,
        1e-9,
        "reducing below magnifying, mixed subadditivity".into(),
    ));
    Ok(out)
}

// ---------------------------------------------------------------------------
// jordan suite
// ---------------------------------------------------------------------------

pub fn jordan_suite(cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x03);
    let mut out = Vec::new();
    let grid = GridConfig::default();
    let eps = 1e-6;

    // certified square brackets at pure states
    let mut width_ok = true;
    let mut lower_exact = true;
    let n_sq = cfg.n(200);
    let mut widest: Option<serde_json::Value> = None;
    let mut widest_w = -1.0f64;
    for t in 0..n_sq {
        let dim = cfg.dim(3 + t % 4);
        let malg = AlgebraHandle::matrix(dim).with_tolerance(cfg.tolerance);
        let c = BasicElement::basic(
            malg,
            vec![random_psd(malg, &mut rng), random_psd(malg, &mut rng)],
        )?;
        let rho = random_pure(dim, &mut rng);
        let iv = eval_square_interval(&c, &rho, eps)?;
        if iv.width() > 4.0 * eps * (c.generator_norm_bound() + eps) {
            width_ok = false;
        }
        if iv.width() > widest_w {
            widest_w = iv.width();
            widest = Some(json!({
                "interval": [iv.lower, iv.upper],
                "witness": io::element_to_json(&iv.witness),
                "eps": iv.epsilon,
            }));
        }
        let s = c.s_at(&rho)?;
        if (iv.lower - s * s).abs() > 0.0 {
            lower_exact = false;
        }
    }
    let mut bracket_record = record(
        "jordan-square-bracket-width",
        "eval_square_interval",
        json!({"instances": n_sq, "eps": eps}),
        width_ok,
        Certainty::Exact,
        4.0 * eps,
        format!("{n_sq} pure-state brackets"),
    );
    if let Some(data) = widest {
        bracket_record = bracket_record.with_data(json!({"widest_bracket": data}));
    }
    out.push(bracket_record);
    out.push(record(
        "jordan-square-bracket-lower-exact",
        "eval_square_interval",
        json!({"instances": n_sq}),
        lower_exact,
        Certainty::Exact,
        0.0,
        "lower bound equals the squared minimal generator value".into(),
    ));

    // commutative exactness of the square and root
    let calg = AlgebraHandle::commutative(3).with_tolerance(cfg.tolerance);
    let mut sq_ok = true;
    let mut rt_ok = true;
    let n_comm = cfg.n(200);
    for _ in 0..n_comm {
        let a = random_dyadic_element(calg, &mut rng, 2, 1.0);
        let img = a.pi()?;
        for i in 0..3 {
            let rho = StateFunctional::point(i);
            let v = square_general_at(&a, &rho, &grid)?;
            if (v - img.values[i] * img.values[i]).abs() > 1e-8 {
                sq_ok = false;
            }
        }
        // positive shift for the root
        let shift = img.values.iter().cloned().fold(0.0f64, f64::min);
        let p = a.add(&LatticeElement::from_element(&HermitianElement::scalar(
            calg, -shift,
        )))?;
        let pi_p = p.pi()?;
        for i in 0..3 {
            let rho = StateFunctional::point(i);
            let v = sqrt_general_at(&p, &rho, &grid)?;
            if v > pi_p.values[i].max(0.0).sqrt() + 1e-8 {
                rt_ok = false;
            }
        }
    }
    out.push(record(
        "jordan-square-drops-to-pointwise",
        "square_general_at",
        json!({"instances": n_comm}),
        sq_ok,
        Certainty::Exact,
        1e-8,
        format!("{n_comm} commutative instances"),
    ));
    out.push(record(
        "jordan-root-below-pointwise-root",
        "sqrt_general_at",
        json!({"instances": n_comm}),
        rt_ok,
        Certainty::Exact,
        1e-8,
        format!("{n_comm} commutative instances"),
    ));

    // quadratic clouds
    let mut cloud_comm_ok = true;
    let mut cloud_mat_ok = true;
    let n_cloud = cfg.n(100);
    for _ in 0..n_cloud {
        let mk = |rng: &mut ChaCha8Rng| {
            let v: Vec<f64> = (0..3)
                .map(|_| rng.random_range(0..32) as f64 / 16.0)
                .collect();
            BasicElement::basic(
                calg,
                vec![HermitianElement::from_tuple(calg, v).expect("tuple")],
            )
            .expect("basic")
        };
        let (c, d, e) = (mk(&mut rng), mk(&mut rng), mk(&mut rng));
        for kind in [CloudType::First, CloudType::Second] {
            for i in 0..3 {
                let v = quadratic_cloud_at(&c, &d, &e, &StateFunctional::point(i), kind, eps)?;
                if v.lower != 0.0 || v.upper != 0.0 {
                    cloud_comm_ok = false;
                }
            }
        }
    }
    let m3 = AlgebraHandle::matrix(3).with_tolerance(cfg.tolerance);
    for _ in 0..n_cloud {
        let c = BasicElement::basic(m3, vec![random_psd(m3, &mut rng)])?;
        let d = BasicElement::basic(m3, vec![random_psd(m3, &mut rng)])?;
        let e = BasicElement::basic(m3, vec![random_psd(m3, &mut rng)])?;
        let rho = random_pure(3, &mut rng);
        for kind in [CloudType::First, CloudType::Second] {
            let v = quadratic_cloud_at(&c, &d, &e, &rho, kind, eps)?;
            if !v.contains(0.0, 1e-9) || v.midpoint().abs() > 1e-4 {
                cloud_mat_ok = false;
            }
        }
    }
    out.push(record(
        "jordan-clouds-vanish-commutative",
        "quadratic_cloud_at",
        json!({"instances": n_cloud}),
        cloud_comm_ok,
        Certainty::Exact,
        0.0,
        "exactly zero on the dyadic grid".into(),
    ));
    out.push(record(
        "jordan-clouds-bracket-zero-matrix",
        "quadratic_cloud_at",
        json!({"instances": n_cloud}),
        cloud_mat_ok,
        Certainty::ProbeCertified,
        1e-4,
        "pure-state brackets contain zero".into(),
    ));

    // single-element squaring family gaps
    let mut single_ok = true;
    let n_single = cfg.n(200);
    let r_max = 1e6;
    for t in 0..n_single {
        let x = if t % 2 == 0 {
            random_hermitian(
                AlgebraHandle::matrix(cfg.dim(3)).with_tolerance(cfg.tolerance),
                &mut rng,
            )
        } else {
            random_dyadic_tuple(calg, &mut rng, 2.0)
        };
        let (iterate, gap) = sqr_single(&x, r_max);
        let plus_sq = func_calc(&x.positive_part(), FuncKind::Square)?;
        let bound = x.negative_part().operator_norm().powi(2) / r_max;
        if iterate.distance(&plus_sq) > bound + 1e-12 || gap > bound + 1e-12 {
            single_ok = false;
        }
    }
    out.push(record(
        "jordan-single-square-gap",
        "sqr_single",
        json!({"instances": n_single, "r_max": r_max}),
        single_ok,
        Certainty::Exact,
        1e-6,
        "gap bounded by the negative-part norm over R".into(),
    ));

    // block witness vanishing side
    let m4 = AlgebraHandle::matrix(4).with_tolerance(cfg.tolerance);
    let mut side_ok = true;
    let n_side = cfg.n(100);
    for _ in 0..n_side {
        let a = random_hermitian(m4, &mut rng);
        let rho = random_pure(4, &mut rng);
        let rep = lemma2_state_check(&a, &rho)?;
        if rep.state_value_of_square > 1e-8 {
            side_ok = false;
        }
    }
    out.push(record(
        "jordan-vanishing-side-witness",
        "lemma2_state_check",
        json!({"instances": n_side}),
        side_ok,
        Certainty::Exact,
        1e-8,
        format!("{n_side} block witnesses"),
    ));

    // asymptotic gap traces
    let r_grid: Vec<f64> = (0..17)
        .map(|i| 10f64.powf(i as f64 * 4.0 / 16.0))
        .collect();
    let mut trace_ok = true;
    let n_trace = cfg.n(50);
    for _ in 0..n_trace {
        let g = random_psd(m3, &mut rng);
        let g = g.scale(1.0 / g.operator_norm().max(1.0));
        let c = BasicElement::basic(m3, vec![g])?;
        let states = vec![random_pure(3, &mut rng)];
        for w in [GapWeight::Const, GapWeight::Sqrt] {
            let tr = jordan::lemma5_asymptotics(&c, w, &r_grid, &states)?;
            if !(tr.decreasing_beyond(1e2, 0.05) && tr.final_gap() <= 1e-3) {
                trace_ok = false;
            }
        }
    }
    // the identity weight keeps a spread-spectrum gap alive
    let spread = BasicElement::basic(
        m3,
        vec![HermitianElement::diag(m3, &[0.0, 1.0, 2.0])?],
    )?;
    let even = StateFunctional::vector_real(&[1.0, 1.0, 1.0])?;
    let ti = jordan::lemma5_asymptotics(&spread, GapWeight::Id, &r_grid, &[even])?;
    let id_ok = ti.min_gap_beyond(1e2) >= 1e-2;
    out.push(record(
        "jordan-gap-trace-vanishing-weights",
        "lemma5_asymptotics",
        json!({"instances": n_trace}),
        trace_ok,
        Certainty::Exact,
        1e-3,
        "const and sqrt weights decrease and vanish".into(),
    ));
    out.push(record(
        "jordan-gap-trace-identity-weight",
        "lemma5_asymptotics",
        json!({"instance": "spread spectrum"}),
        id_ok,
        Certainty::Exact,
        1e-2,
        format!("identity-weight gap floor {:.3e}", ti.min_gap_beyond(1e2)),
    ));

    // Schwarz inequality for documented map families
    let mut schwarz_ok = true;
    let n_schwarz = cfg.n(200);
    let id_map = PositiveMapTable::identity(calg)?;
    let restr = PositiveMapTable::restriction(calg, &[0, 2])?;
    let m2 = AlgebraHandle::matrix(2).with_tolerance(cfg.tolerance);
    let st = PositiveMapTable::from_state(m2, &random_pure(2, &mut rng))?;
    let comp = PositiveMapTable::diagonal_compression(m2)?;
    for _ in 0..n_schwarz {
        let a: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x0 = HermitianElement::from_tuple(calg, a)?;
        let x1 = HermitianElement::from_tuple(calg, b)?;
        for phi in [&id_map, &restr] {
            if !schwarz22_check(phi, &x0, &x1, 1e-9)?.holds {
                schwarz_ok = false;
            }
        }
        let y0 = random_hermitian(m2, &mut rng);
        let y1 = random_hermitian(m2, &mut rng);
        for phi in [&st, &comp] {
            if !schwarz22_check(phi, &y0, &y1, 1e-9)?.holds {
                schwarz_ok = false;
            }
        }
    }
    out.push(record(
        "jordan-schwarz-for-positive-maps",
        "schwarz22_check",
        json!({"instances": n_schwarz}),
        schwarz_ok,
        Certainty::Exact,
        1e-9,
        "identity, restriction, state and compression families".into(),
    ));
    Ok(out)
}

// ---------------------------------------------------------------------------
// projections suite
// ---------------------------------------------------------------------------

pub fn projections_suite(cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x04);
    let mut out = Vec::new();

    let mut wedge_ok = true;
    let mut worst = 0.0f64;
    let per_dim = cfg.n(500);
    let dmax = cfg.dim(8);
    for dim in 2..=dmax {
        let alg = AlgebraHandle::matrix(dim).with_tolerance(cfg.tolerance);
        for _ in 0..per_dim {
            let p = random_projection(alg, 1 + rng.random_range(0..dim.max(2) - 1), &mut rng)?;
            let q = random_projection(alg, 1 + rng.random_range(0..dim.max(2) - 1), &mut rng)?;
            let exact = wedge_exact(&p, &q)?;
            let iter = wedge_iterative(&p, &q, 1e-11, 2_000_000)?;
            let gap = iter.projection.base.distance(&exact.base);
            worst = worst.max(gap);
            if gap > 1e-8 {
                wedge_ok = false;
            }
        }
    }
    out.push(record(
        "projections-alternating-product-oracle",
        "wedge_iterative",
        json!({"per_dim": per_dim, "dims": format!("2..={dmax}")}),
        wedge_ok,
        Certainty::Exact,
        1e-8,
        format!("worst oracle gap {worst:.3e}"),
    ));

    // De Morgan and maximal-lower-bound
    let mut dm_ok = true;
    let mut mlb_ok = true;
    let n_dm = cfg.n(200);
    let alg4 = AlgebraHandle::matrix(4).with_tolerance(cfg.tolerance);
    for _ in 0..n_dm {
        let p = random_projection(alg4, rng.random_range(1..4), &mut rng)?;
        let q = random_projection(alg4, rng.random_range(1..4), &mut rng)?;
        let lhs = pvee(&p, &q)?;
        let rhs = wedge_exact(&p.complement(), &q.complement())?.complement();
        if lhs.base.distance(&rhs.base) > 1e-9 {
            dm_ok = false;
        }
        let z = random_projection(alg4, 1, &mut rng)?;
        let pz = pvee(&z, &p)?;
        let qz = pvee(&z, &q)?;
        if !z.leq(&wedge_exact(&pz, &qz)?) {
            mlb_ok = false;
        }
    }
    out.push(record(
        "projections-de-morgan",
        "vee",
        json!({"instances": n_dm}),
        dm_ok,
        Certainty::Exact,
        1e-9,
        "join equals the complement-dual meet".into(),
    ));
    out.push(record(
        "projections-wedge-maximal-lower-bound",
        "wedge_exact",
        json!({"instances": n_dm}),
        mlb_ok,
        Certainty::Exact,
        0.0,
        "common minorants lie below the meet".into(),
    ));

    // iteration counts on angle pairs
    let m2 = AlgebraHandle::matrix(2).with_tolerance(cfg.tolerance);
    let mut angle_ok = true;
    for t in 1..=cfg.n(20) {
        let theta = 0.15 + 1.2 * (t as f64 / 20.0);
        let a = angle_projection(m2, 0.0)?;
        let b = angle_projection(m2, theta)?;
        let tol = 1e-9;
        let it = wedge_iterative(&a, &b, tol, 50_000)?;
        let rate = theta.cos().powi(2);
        let bound = (tol.ln() / rate.ln()).ceil() as usize + 1;
        if it.iterations > bound {
            angle_ok = false;
        }
    }
    out.push(record(
        "projections-angle-convergence-rate",
        "wedge_iterative",
        json!({"angles": cfg.n(20)}),
        angle_ok,
        Certainty::Exact,
        1e-9,
        "iteration counts within the squared-cosine rate bound".into(),
    ));

    // commuting bounds and structural predicates
    let mut cb_ok = true;
    let n_cb = cfg.n(100);
    for _ in 0..n_cb {
        let e = random_projection(alg4, rng.random_range(1..4), &mut rng)?;
        let f = random_projection(alg4, rng.random_range(1..4), &mut rng)?;
        let (lo, hi) = commuting_bounds(&e, &f)?;
        if !(lo.commutes_with(&f) && hi.commutes_with(&f) && lo.leq(&e) && e.leq(&hi)) {
            cb_ok = false;
        }
        if e.commutes_with(&f) && !(lo.approx_eq(&e, 1e-7) && hi.approx_eq(&e, 1e-7)) {
            cb_ok = false;
        }
    }
    out.push(record(
        "projections-commuting-bounds",
        "commuting_bounds",
        json!({"instances": n_cb}),
        cb_ok,
        Certainty::Exact,
        1e-7,
        "bounds commute, sandwich, and collapse on commuting pairs".into(),
    ));

    let p = angle_projection(m2, 0.3)?;
    let q = angle_projection(m2, 1.1)?;
    let g = angle_projection(m2, 2.0)?;
    let dist_violated = !distributivity_probe(&p, &q, &g)?.holds();
    let pr = predicates(&p, &p.complement())?;
    out.push(record(
        "projections-predicates-and-laws",
        "predicates",
        json!({"instance": "angle triple"}),
        dist_violated && pr.orthogonal && pr.coorthogonal,
        Certainty::Exact,
        1e-8,
        "generic triple violates distributivity; complement pair coorthogonal".into(),
    ));
    Ok(out)
}

// ---------------------------------------------------------------------------
// pmap suite
// ---------------------------------------------------------------------------

pub fn pmap_suite(cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x05);
    let mut out = Vec::new();

    // reconstruction and the square identity
    let alg = AlgebraHandle::matrix(3).with_tolerance(cfg.tolerance);
    let family: Vec<ProjectionElement> = (0u64..8)
        .map(|m| {
            let v: Vec<f64> = (0..3)
                .map(|i| if m & (1 << i) != 0 { 1.0 } else { 0.0 })
                .collect();
            ProjectionElement::new(HermitianElement::diag(alg, &v).expect("diag"))
                .expect("projection")
        })
        .collect();
    let table = PMapTable::identity(alg, family)?;
    let mut recon_ok = true;
    let mut square_ok = true;
    let n_rec = cfg.n(300);
    for _ in 0..n_rec {
        let v: Vec<f64> = (0..3)
            .map(|_| rng.random_range(0..8) as f64 / 2.0)
            .collect();
        let x = HermitianElement::diag(alg, &v)?;
        let sx = extend_pmap(&table, &x)?;
        if sx.distance(&x) > 1e-10 {
            recon_ok = false;
        }
        // rebuild from the chain restriction
        let chain = chain_decomposition(&x)?;
        let mut rebuilt = HermitianElement::zero(alg);
        for (coeff, p) in &chain {
            rebuilt = rebuilt.add(&table.value_of(p)?.base.scale(*coeff))?;
        }
        if rebuilt.distance(&sx) > 1e-10 {
            recon_ok = false;
        }
        let xsq = func_calc(&x, FuncKind::Square)?;
        let lhs = extend_pmap(&table, &xsq)?;
        let m = sx.to_matrix();
        let rhs = HermitianElement::from_matrix(alg, &m * &m)?;
        if lhs.distance(&rhs) > 1e-10 {
            square_ok = false;
        }
    }
    out.push(record(
        "pmap-chain-reconstruction",
        "extend_pmap",
        json!({"instances": n_rec}),
        recon_ok,
        Certainty::Exact,
        1e-10,
        "rebuilding from the projection restriction reproduces the map".into(),
    ));
    out.push(record(
        "pmap-square-identity",
        "extend_pmap",
        json!({"instances": n_rec}),
        square_ok,
        Certainty::Exact,
        1e-10,
        "sigma(x^2) equals sigma(x)^2 on chains".into(),
    ));

    // coherent lifts over seeded surjections
    let mut lift_ok = true;
    let mut lifts = 0usize;
    for trial in 0..cfg.n(20) {
        let kx = 3 + (trial % 4);
        let ky = 2 + trial % (kx - 1);
        let mut class_of: Vec<usize> = (0..kx)
            .map(|i| if i < ky { i } else { rng.random_range(0..ky) })
            .collect();
        for i in 0..kx {
            let j = rng.random_range(0..kx);
            class_of.swap(i, j);
        }
        for c in 0..ky {
            if !class_of.contains(&c) {
                class_of[c % kx] = c;
            }
        }
        let Ok(spec) = QuotientSpec::new(class_of, ky) else {
            continue;
        };
        let lifted = coherent_lift(&spec, cfg.seed ^ (trial as u64 + 1))?;
        lifts += 1;
        if !verify_section(&spec, &lifted)? {
            lift_ok = false;
        }
        let n = lifted.domain.len();
        for i in 0..n {
            for j in 0..n {
                let pw = wedge_exact(&lifted.domain[i], &lifted.domain[j])?;
                let vw = wedge_exact(&lifted.values[i], &lifted.values[j])?;
                if !lifted.value_of(&pw)?.approx_eq(&vw, 1e-8) {
                    lift_ok = false;
                }
            }
        }
    }
    out.push(record(
        "pmap-coherent-lift-sections",
        "coherent_lift",
        json!({"surjections": lifts}),
        lift_ok,
        Certainty::Exact,
        1e-8,
        format!("{lifts} seeded surjections, exhaustive projection checks"),
    ));

    // signature probes
    let sig2 = Signature::random(2, &mut rng)?;
    let m2 = AlgebraHandle::matrix(2).with_tolerance(cfg.tolerance);
    let mut pairs = Vec::new();
    for _ in 0..cfg.n(10_000) {
        let raw = DMatrix::from_fn(2, 2, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let qmat = raw.qr().q();
        let v1: DVector<Complex64> = qmat.column(0).into();
        let e = ProjectionElement::from_span(m2, &DMatrix::from_columns(&[v1.column(0)]))?;
        pairs.push((e.clone(), e.complement()));
    }
    let m2_polar = matches!(
        signature_probe(&sig2, &pairs)?,
        PolarProbe::PolarOnFamily { .. }
    );
    out.push(record(
        "pmap-signature-polar-m2",
        "signature_probe",
        json!({"samples": pairs.len()}),
        m2_polar,
        Certainty::Exact,
        0.0,
        format!("{} orthogonal pairs with zero violations", pairs.len()),
    ));
    let sig3 = Signature::random(3, &mut rng)?;
    let violation =
        search_polar_violation(&sig3, 3, cfg.n(100_000).max(2000), cfg.seed ^ 0x51)?;
    out.push(record(
        "pmap-signature-violation-m3",
        "signature_probe",
        json!({"samples": cfg.n(100_000)}),
        violation.is_some(),
        Certainty::Exact,
        0.0,
        "orthogonal pair summing into the plus class with both parts minus".into(),
    ));

    // filters
    let lat = FiniteLattice::boolean(3)?;
    let atom = lat.atoms()[0];
    let members: Vec<usize> = (0..lat.len()).filter(|&p| lat.leq(atom, p)).collect();
    let rep = filter_ops(&lat, &ProjectionFilter { members })?;
    out.push(record(
        "pmap-ultrafilter-quotient",
        "filter_ops",
        json!({"lattice": "boolean-3"}),
        rep.is_filter
            && rep.is_ultra
            && rep.is_ideal
            && rep.quotient.classes == 2
            && rep.quotient.meet_compatible
            && rep.quotient.complement_compatible,
        Certainty::Exact,
        0.0,
        "principal ultrafilter collapses the lattice to two classes".into(),
    ));

    // tensor retraction obstruction
    let sig_gamma = Signature::random(2, &mut rng)?;
    let witness = gamma_counterexample(2, &sig_gamma, GAMMA_DEFAULT_SEED);
    let gamma_ok = match &witness {
        Ok(w) => {
            w.parts.len() == 4
                && w.parts.iter().all(|p| {
                    p.certificates.len() == 2 && p.value_gap > 1e-6 && p.projection.rank == 1
                })
        }
        Err(_) => false,
    };
    let mut gamma_record = record(
        "pmap-tensor-retraction-obstruction",
        "gamma_counterexample",
        json!({"k": 2}),
        gamma_ok,
        Certainty::Exact,
        1e-6,
        "four orthogonal forced-zero minimal projections summing to one".into(),
    );
    if let Ok(w) = &witness {
        gamma_record = gamma_record.with_data(io::obstruction_witness_to_json(w));
    }
    out.push(gamma_record);

    // winding obstruction
    let one = Complex64::new(1.0, 0.0);
    let w1 = winding_obstruction(&[(1, one)])? == 1;
    let w2 = winding_obstruction(&[(2, one), (0, Complex64::new(0.5, 0.0))])? == 2;
    let w0 = winding_obstruction(&[(0, one)])? == 0;
    out.push(record(
        "pmap-winding-obstruction",
        "winding_obstruction",
        json!({"symbols": ["z", "z^2+0.5", "1"]}),
        w1 && w2 && w0,
        Certainty::Exact,
        0.01,
        "winding numbers 1, 2, 0".into(),
    ));
    Ok(out)
}

/// Runs the named suite (or all of them) and assembles the report.
pub fn run_suite(name: SuiteName, cfg: &SuiteConfig) -> Result<Report> {
    let mut checks = Vec::new();
    let suites: Vec<SuiteName> = match name {
        SuiteName::All => vec![
            SuiteName::Poset,
            SuiteName::Lattice,
            SuiteName::Jordan,
            SuiteName::Projections,
            SuiteName::Pmap,
        ],
        single => vec![single],
    };
    for s in suites {
        let mut batch = match s {
            SuiteName::Poset => poset_suite(cfg)?,
            SuiteName::Lattice => lattice_suite(cfg)?,
            SuiteName::Jordan => jordan_suite(cfg)?,
            SuiteName::Projections => projections_suite(cfg)?,
            SuiteName::Pmap => pmap_suite(cfg)?,
            SuiteName::All => unreachable!(),
        };
        checks.append(&mut batch);
    }
    let label = match name {
        SuiteName::Lattice => "lattice",
        SuiteName::Jordan => "jordan",
        SuiteName::Projections => "projections",
        SuiteName::Pmap => "pmap",
        SuiteName::Poset => "poset",
        SuiteName::All => "all",
    };
    Ok(Report::new(label, cfg.seed, cfg.timestamp.clone(), checks))
}
