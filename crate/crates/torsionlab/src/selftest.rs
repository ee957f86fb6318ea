//! Seeded property suites with a machine-readable report, shared by the
//! command line and the integration tests.

use serde::{Deserialize, Serialize};

use crate::assembly::{
    symmetric_space_torsion, torsion_at, trivially_acting_subgroup, weyl_group,
    SymmetricSpaceFamily, TorusElement, TorusModel,
};
use crate::chain::{
    hat_torsion, hodge_contraction, torsion_acyclic, torsion_with_cohomology,
    torsion_with_contraction, CohomologyMetric, Contraction,
};
use crate::cw::{build_circle, torsion_cw};
use crate::error::Result;
use crate::group::{restrict_class_function, FiniteGroup, Subgroup};
use crate::linalg::{CMatrix, C64};
use crate::random::{
    random_acyclic_complex, random_complex_with_cohomology, random_equivariant_map,
    random_filtered_complex, random_invariant_metric,
};
use crate::schema::SCHEMA_VERSION;
use crate::spectral::spectral_decomposition;
use crate::zeta::{psi_scalar, ZetaAccuracy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub passed: usize,
    pub failed: usize,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelfTestReport {
    pub schema_version: u32,
    pub seed: u64,
    pub ok: bool,
    pub suites: Vec<SuiteReport>,
}

pub const SUITES: [&str; 7] =
    ["contraction", "metric", "restriction", "spectral", "circle", "section", "symmetric"];

struct Recorder {
    report: SuiteReport,
}

impl Recorder {
    fn new(name: &str) -> Recorder {
        Recorder { report: SuiteReport { name: name.into(), passed: 0, failed: 0, failures: Vec::new() } }
    }

    fn check(&mut self, label: &str, outcome: Result<bool>) {
        match outcome {
            Ok(true) => self.report.passed += 1,
            Ok(false) => {
                self.report.failed += 1;
                self.report.failures.push(label.to_string());
            }
            Err(e) => {
                self.report.failed += 1;
                self.report.failures.push(format!("{label}: {e}"));
            }
        }
    }
}

fn sample_groups() -> Vec<FiniteGroup> {
    vec![
        FiniteGroup::trivial().unwrap(),
        FiniteGroup::cyclic(2).unwrap(),
        FiniteGroup::cyclic(3).unwrap(),
        FiniteGroup::cyclic(4).unwrap(),
        FiniteGroup::symmetric(3).unwrap(),
    ]
}

/// Two contractions of the same acyclic complex give the same torsion.
fn suite_contraction(seed: u64) -> SuiteReport {
    let mut rec = Recorder::new("contraction");
    let groups = sample_groups();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..20usize {
        let g = &groups[trial % groups.len()];
        let label = format!("trial {trial}");
        let outcome = (|| {
            let cx = random_acyclic_complex(g, 0, &[3, 2, 3], rng.gen())?;
            let kappa = hodge_contraction(&cx)?;
            let rho = torsion_with_contraction(&cx, &kappa)?;
            // a second contraction differing by a null-homotopic correction
            let mut kappas = Vec::new();
            let mut rng2 = rand::rngs::StdRng::seed_from_u64(seed ^ (trial as u64) << 8);
            let mut xi = |p: i64| -> CMatrix {
                if cx.dim(p) == 0 || cx.dim(p - 2) == 0 {
                    CMatrix::zeros(cx.dim(p - 2), cx.dim(p))
                } else {
                    random_equivariant_map(
                        &cx.module(p).unwrap().rep,
                        &cx.module(p - 2).unwrap().rep,
                        &mut rng2,
                    )
                    .scale(0.2)
                }
            };
            let xis: Vec<CMatrix> =
                (cx.degree_min()..=cx.degree_max() + 1).map(&mut xi).collect();
            let xi_at = |p: i64| -> CMatrix {
                let idx = p - cx.degree_min();
                if idx < 0 || idx as usize >= xis.len() {
                    CMatrix::zeros(cx.dim(p - 2), cx.dim(p))
                } else {
                    xis[idx as usize].clone()
                }
            };
            for p in (cx.degree_min() + 1)..=cx.degree_max() {
                let corrected = kappa.kappa(&cx, p) + cx.diff_matrix(p - 2) * xi_at(p)
                    - xi_at(p + 1) * cx.diff_matrix(p);
                kappas.push(corrected);
            }
            let kappa2 = Contraction::from_parts(cx.degree_min(), kappas);
            let rho2 = torsion_with_contraction(&cx, &kappa2)?;
            Ok(rho.sub(&rho2).max_abs() <= 1e-8)
        })();
        rec.check(&label, outcome);
    }
    rec.report
}

/// The hat representative does not depend on the cohomology metric.
fn suite_metric(seed: u64) -> SuiteReport {
    let mut rec = Recorder::new("metric");
    let groups = sample_groups();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..10usize {
        let g = &groups[trial % groups.len()];
        let label = format!("trial {trial}");
        let outcome = (|| {
            let cx = random_complex_with_cohomology(g, 0, &[2, 2], &[1, 1, 1], rng.gen())?;
            let mu1 = random_invariant_metric(&cx, rng.gen())?;
            let mu2 = random_invariant_metric(&cx, rng.gen())?;
            let gamma0 = trivially_acting_subgroup(&cx)?;
            let h1 = hat_torsion(&cx, &mu1, &gamma0)?;
            let h2 = hat_torsion(&cx, &mu2, &gamma0)?;
            Ok(h1.sub(&h2).max_abs() <= 1e-8)
        })();
        rec.check(&label, outcome);
    }
    rec.report
}

/// Torsion commutes with restriction to subgroups.
fn suite_restriction(seed: u64) -> SuiteReport {
    let mut rec = Recorder::new("restriction");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (i, g) in [FiniteGroup::cyclic(4).unwrap(), FiniteGroup::cyclic(6).unwrap(), FiniteGroup::symmetric(3).unwrap()]
        .iter()
        .enumerate()
    {
        let cx = match random_acyclic_complex(g, 0, &[2, 2], rng.gen()) {
            Ok(c) => c,
            Err(e) => {
                rec.check(&format!("group {i}"), Err(e));
                continue;
            }
        };
        for h in 0..g.order() {
            let label = format!("group {i}, subgroup of {h}");
            let outcome = (|| {
                let sub = Subgroup::generated(g, &[h])?;
                let rho = torsion_acyclic(&cx)?;
                let restricted = torsion_acyclic(&cx.restrict(&sub)?)?;
                Ok(restrict_class_function(&rho, &sub)?.sub(&restricted).max_abs() <= 1e-9)
            })();
            rec.check(&label, outcome);
        }
    }
    rec.report
}

/// The three-term decomposition reproduces the total torsion.
fn suite_spectral(seed: u64) -> SuiteReport {
    let mut rec = Recorder::new("spectral");
    let groups =
        [FiniteGroup::trivial().unwrap(), FiniteGroup::cyclic(2).unwrap(), FiniteGroup::cyclic(3).unwrap()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..10usize {
        let g = &groups[trial % groups.len()];
        let label = format!("trial {trial}");
        let outcome = (|| {
            let fc = random_filtered_complex(g, 1 + trial % 3, rng.gen())?;
            let mu = random_invariant_metric(fc.complex(), rng.gen())?;
            let graded: Vec<CohomologyMetric> = (0..fc.pieces())
                .map(|p| random_invariant_metric(&fc.graded_piece(p)?, rng.gen()))
                .collect::<Result<_>>()?;
            let dec = spectral_decomposition(&fc, &mu, &graded)?;
            let rho = torsion_with_cohomology(fc.complex(), &mu)?;
            Ok(dec.total.sub(&rho).max_abs() <= 1e-8 * (1.0 + rho.max_abs()))
        })();
        rec.check(&label, outcome);
    }
    rec.report
}

/// Combinatorial circle torsion against the zeta-regularized values.
fn suite_circle(_seed: u64) -> SuiteReport {
    let mut rec = Recorder::new("circle");
    let acc = ZetaAccuracy::new(1e-10).unwrap();
    for &a in &[0.1, 0.3, 0.5, 0.7] {
        let label = format!("holonomy {a}");
        let outcome = (|| {
            let u = CMatrix::from_element(1, 1, C64::new(0.0, 2.0 * std::f64::consts::PI * a).exp());
            let (x, f) = build_circle(1, 0, &u, &CMatrix::identity(1, 1))?;
            let c = crate::cw::cochain_complex(&x, &f)?;
            let rho = torsion_acyclic(&c)?;
            let analytic = psi_scalar(C64::new(1.0, 0.0), a, 0.0, &acc)?;
            let dev = (rho.eval(0) * crate::ANALYTIC_OVER_COMBINATORIAL - analytic).norm();
            let closed = 2.0 * (2.0 * (std::f64::consts::PI * a).sin()).ln();
            Ok(dev <= 1e-7 && (analytic.re - closed).abs() <= 1e-8)
        })();
        rec.check(&label, outcome);
    }
    // a nontrivial rotation: generator values against the trace formula
    let outcome = (|| {
        let u = CMatrix::from_element(1, 1, C64::new(-1.0, 0.0));
        let (x, f) = build_circle(2, 1, &u, &CMatrix::identity(1, 1))?;
        let rho = torsion_cw(&x, &f, &CohomologyMetric::standard(&crate::cw::cochain_complex(&x, &f)?))?;
        let acc = ZetaAccuracy::new(1e-10).unwrap();
        let expected = psi_scalar(C64::new(1.0, 0.0), 0.5, 0.5, &acc)?;
        Ok((rho.eval(1) * crate::ANALYTIC_OVER_COMBINATORIAL - expected).norm() <= 1e-7)
    })();
    rec.check("half rotation", outcome);
    rec.report
}

/// Evaluation through overgroups is consistent (section property).
fn suite_section(_seed: u64) -> SuiteReport {
    let mut rec = Recorder::new("section");
    for (a, w) in [(0.3, 0i64), (0.0, 1)] {
        let model = TorusModel::Circle { a: vec![a], winding: vec![w] };
        for t in [
            TorusElement::new(&[(1, 2)]).unwrap(),
            TorusElement::new(&[(1, 3)]).unwrap(),
            TorusElement::new(&[(1, 4)]).unwrap(),
        ] {
            let label = format!("a={a} w={w} order {}", t.order());
            let outcome = (|| {
                let base = torsion_at(&model, &t, 1)?;
                for mult in 2..=4usize {
                    if (torsion_at(&model, &t, mult)? - base).norm() > 1e-9 {
                        return Ok(false);
                    }
                }
                Ok(true)
            })();
            rec.check(&label, outcome);
        }
    }
    rec.report
}

/// Weyl-sum properties of the symmetric-space evaluation.
fn suite_symmetric(_seed: u64) -> SuiteReport {
    let mut rec = Recorder::new("symmetric");
    let acc = ZetaAccuracy::new(1e-10).unwrap();
    for m in 2..=4usize {
        let label = format!("Weyl order m={m}");
        let outcome = (|| {
            let data = weyl_group(&SymmetricSpaceFamily::SoEven { m, p: 1 })?;
            let fact: usize = (1..=m).product();
            Ok(data.elements.len() == (1 << (m - 1)) * fact)
        })();
        rec.check(&label, outcome);
    }
    let outcome = (|| {
        let family = SymmetricSpaceFamily::OtherOdd { rank_g: 3, rank_k: 3 };
        let t = TorusElement::new(&[(1, 3), (1, 3), (1, 3)])?;
        Ok(symmetric_space_torsion(&family, &t, &acc)? == 0.0)
    })();
    rec.check("rank-degenerate vanishing", outcome);
    let outcome = (|| {
        // sphere: Weyl value vs the direct cell model, constant difference
        let family = SymmetricSpaceFamily::SoEven { m: 2, p: 1 };
        let model = TorusModel::JoinOfCircles;
        let mut diffs = Vec::new();
        for t in [
            TorusElement::new(&[(1, 2), (0, 1)])?,
            TorusElement::new(&[(1, 3), (0, 1)])?,
            TorusElement::new(&[(1, 4), (0, 1)])?,
        ] {
            let weyl = symmetric_space_torsion(&family, &t, &acc)?;
            let direct = torsion_at(&model, &t, 1)? * crate::ANALYTIC_OVER_COMBINATORIAL;
            diffs.push(weyl - direct.re);
        }
        let spread = diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - diffs.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(spread <= 1e-6)
    })();
    rec.check("sphere cross-check", outcome);
    rec.report
}

/// Runs the selected suites (all when `names` is `None`) with a fixed seed.
pub fn run(seed: u64, names: Option<&[&str]>) -> Result<SelfTestReport> {
    let wanted: Vec<&str> = match names {
        None => SUITES.to_vec(),
        Some(list) => {
            for n in list {
                if !SUITES.contains(n) {
                    return Err(crate::error::Error::Contract(format!(
                        "unknown suite {n}; available: {}",
                        SUITES.join(", ")
                    )));
                }
            }
            list.to_vec()
        }
    };
    let mut suites = Vec::new();
    for name in wanted {
        let report = match name {
            "contraction" => suite_contraction(seed),
            "metric" => suite_metric(seed.wrapping_add(1)),
            "restriction" => suite_restriction(seed.wrapping_add(2)),
            "spectral" => suite_spectral(seed.wrapping_add(3)),
            "circle" => suite_circle(seed.wrapping_add(4)),
            "section" => suite_section(seed.wrapping_add(5)),
            "symmetric" => suite_symmetric(seed.wrapping_add(6)),
            _ => unreachable!(),
        };
        suites.push(report);
    }
    let ok = suites.iter().all(|s| s.failed == 0);
    Ok(SelfTestReport { schema_version: SCHEMA_VERSION, seed, ok, suites })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_seed_passes_everything() {
        let report = run(0, None).unwrap();
        assert!(report.ok, "{:?}", report.suites.iter().filter(|s| s.failed > 0).collect::<Vec<_>>());
        assert_eq!(report.suites.len(), SUITES.len());
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let a = run(7, Some(&["contraction", "metric"])).unwrap();
        let b = run(7, Some(&["contraction", "metric"])).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn suite_subset_and_unknown_names() {
        let r = run(1, Some(&["spectral"])).unwrap();
        assert_eq!(r.suites.len(), 1);
        assert_eq!(r.suites[0].name, "spectral");
        assert!(run(1, Some(&["nonsense"])).is_err());
    }
}
