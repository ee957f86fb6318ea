//! Versioned JSON serialization of groups, class functions, complexes, and
//! filtrations, plus the value records emitted by the command line tools.
//!
//! Every document carries a `schema_version` field; readers reject unknown
//! versions.  Matrices serialize as row-major nested arrays of `[re, im]`
//! pairs so that files are readable and diffable.

use serde::{Deserialize, Serialize};

use crate::chain::{CohomologyMetric, GammaComplex, GammaModule};
use crate::error::{Error, Result};
use crate::group::{ClassFunction, FiniteGroup, UnitaryRep};
use crate::linalg::{CMatrix, C64};
use crate::spectral::FilteredComplex;

pub const SCHEMA_VERSION: u32 = 1;

fn check_version(version: u32, what: &str) -> Result<()> {
    if version != SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "{what}: unsupported schema_version {version}, expected {SCHEMA_VERSION}"
        )));
    }
    Ok(())
}

/// Row-major complex matrix entries, each as `[re, im]`.
pub type MatrixEntries = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_entries(m: &CMatrix) -> MatrixEntries {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

/// Parses a matrix with the expected shape; an empty entry list denotes a
/// matrix with `rows * cols = 0`.
pub fn matrix_from_entries(entries: &MatrixEntries, rows: usize, cols: usize) -> Result<CMatrix> {
    if rows == 0 || cols == 0 {
        if entries.iter().any(|r| !r.is_empty()) {
            return Err(Error::Schema("nonempty entries for an empty matrix".into()));
        }
        return Ok(CMatrix::zeros(rows, cols));
    }
    if entries.len() != rows || entries.iter().any(|r| r.len() != cols) {
        return Err(Error::Schema(format!("matrix entries are not {rows} x {cols}")));
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| C64::new(entries[i][j][0], entries[i][j][1])))
}

/// A finite group: either a full Cayley table or permutation generators.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupSchema {
    pub schema_version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cayley: Option<Vec<Vec<usize>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perm_generators: Option<Vec<Vec<usize>>>,
}

pub fn group_to_schema(group: &FiniteGroup) -> GroupSchema {
    GroupSchema {
        schema_version: SCHEMA_VERSION,
        order: Some(group.order()),
        cayley: Some(group.cayley().to_vec()),
        perm_generators: None,
    }
}

pub fn group_from_schema(s: &GroupSchema) -> Result<FiniteGroup> {
    check_version(s.schema_version, "group")?;
    match (&s.cayley, &s.perm_generators) {
        (Some(cayley), None) => {
            if let Some(order) = s.order {
                if order != cayley.len() {
                    return Err(Error::Schema("declared order does not match the Cayley table".into()));
                }
            }
            FiniteGroup::from_cayley(cayley.clone())
        }
        (None, Some(gens)) => FiniteGroup::from_perm_generators(gens),
        _ => Err(Error::Schema("group needs exactly one of cayley or perm_generators".into())),
    }
}

/// A class function, one complex value per conjugacy class.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassFunctionSchema {
    pub schema_version: u32,
    pub class_reps: Vec<usize>,
    pub values: Vec<[f64; 2]>,
}

pub fn class_function_to_schema(f: &ClassFunction) -> ClassFunctionSchema {
    ClassFunctionSchema {
        schema_version: SCHEMA_VERSION,
        class_reps: f.group().class_reps(),
        values: f.class_values().iter().map(|v| [v.re, v.im]).collect(),
    }
}

pub fn class_function_from_schema(s: &ClassFunctionSchema, group: &FiniteGroup) -> Result<ClassFunction> {
    check_version(s.schema_version, "class function")?;
    if s.class_reps != group.class_reps() || s.values.len() != group.class_count() {
        return Err(Error::Schema("class data does not match the group".into()));
    }
    ClassFunction::new(group, s.values.iter().map(|v| C64::new(v[0], v[1])).collect())
}

/// A cochain complex of unitary modules: per-degree dimensions, per-degree
/// group action, differentials to the next degree, and an optional metric
/// on cohomology (one Gram matrix per degree).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComplexSchema {
    pub schema_version: u32,
    pub group: GroupSchema,
    pub degree_min: i64,
    pub dims: Vec<usize>,
    /// `action[d][g]`: operator of group element `g` in degree `degree_min + d`.
    pub action: Vec<Vec<MatrixEntries>>,
    /// `differentials[d]`: map from degree `degree_min + d` to the next.
    pub differentials: Vec<MatrixEntries>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<MatrixEntries>>,
}

pub fn complex_to_schema(c: &GammaComplex, mu: Option<&CohomologyMetric>) -> ComplexSchema {
    let group = c.group();
    let degs: Vec<i64> = (c.degree_min()..=c.degree_max()).collect();
    ComplexSchema {
        schema_version: SCHEMA_VERSION,
        group: group_to_schema(group),
        degree_min: c.degree_min(),
        dims: degs.iter().map(|&n| c.dim(n)).collect(),
        action: degs
            .iter()
            .map(|&n| {
                (0..group.order())
                    .map(|g| matrix_to_entries(c.module(n).unwrap().rep.op(g)))
                    .collect()
            })
            .collect(),
        differentials: degs[..degs.len() - 1]
            .iter()
            .map(|&n| matrix_to_entries(&c.diff_matrix(n)))
            .collect(),
        metric: mu.map(|mu| {
            degs.iter()
                .map(|&n| matrix_to_entries(mu.gram(n).unwrap_or(&CMatrix::zeros(0, 0))))
                .collect()
        }),
    }
}

pub fn complex_from_schema(s: &ComplexSchema) -> Result<(GammaComplex, Option<CohomologyMetric>)> {
    check_version(s.schema_version, "complex")?;
    let group = group_from_schema(&s.group)?;
    let degs = s.dims.len();
    if degs == 0 {
        return Err(Error::Schema("complex needs at least one degree".into()));
    }
    if s.action.len() != degs {
        return Err(Error::Schema("one action list per degree required".into()));
    }
    if s.differentials.len() + 1 != degs {
        return Err(Error::Schema("one differential per consecutive degree pair required".into()));
    }
    let mut spaces = Vec::with_capacity(degs);
    for (d, ops) in s.action.iter().enumerate() {
        if ops.len() != group.order() {
            return Err(Error::Schema(format!("degree {d} needs one operator per group element")));
        }
        let ops: Vec<CMatrix> = ops
            .iter()
            .map(|m| matrix_from_entries(m, s.dims[d], s.dims[d]))
            .collect::<Result<_>>()?;
        spaces.push(GammaModule::new(UnitaryRep::new(&group, ops)?));
    }
    let diffs: Vec<CMatrix> = s
        .differentials
        .iter()
        .enumerate()
        .map(|(d, m)| matrix_from_entries(m, s.dims[d + 1], s.dims[d]))
        .collect::<Result<_>>()?;
    let c = GammaComplex::new(&group, s.degree_min, spaces, diffs)?;
    let mu = match &s.metric {
        None => None,
        Some(grams) => {
            if grams.len() != degs {
                return Err(Error::Schema("one Gram matrix per degree required".into()));
            }
            let grams: Vec<CMatrix> = grams
                .iter()
                .enumerate()
                .map(|(d, m)| {
                    let k = c.harmonic_basis(s.degree_min + d as i64).ncols();
                    matrix_from_entries(m, k, k)
                })
                .collect::<Result<_>>()?;
            Some(CohomologyMetric::new(s.degree_min, grams)?)
        }
    };
    Ok((c, mu))
}

/// A filtration of a complex by invariant subcomplexes: spanning sets of
/// the proper levels, outermost first, one matrix per degree.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FilteredComplexSchema {
    pub schema_version: u32,
    pub complex: ComplexSchema,
    /// `levels[j][d]`: columns spanning level `j+1` in degree `degree_min + d`.
    pub levels: Vec<Vec<MatrixEntries>>,
}

pub fn filtered_from_schema(s: &FilteredComplexSchema) -> Result<(FilteredComplex, Option<CohomologyMetric>)> {
    check_version(s.schema_version, "filtration")?;
    let (c, mu) = complex_from_schema(&s.complex)?;
    let degs = s.complex.dims.len();
    let mut levels = Vec::with_capacity(s.levels.len());
    for (j, lvl) in s.levels.iter().enumerate() {
        if lvl.len() != degs {
            return Err(Error::Schema(format!("filtration level {j} needs one span per degree")));
        }
        let spans: Vec<CMatrix> = lvl
            .iter()
            .enumerate()
            .map(|(d, m)| {
                let cols = m.first().map_or(0, |r| r.len());
                matrix_from_entries(m, if cols == 0 { 0 } else { s.complex.dims[d] }, cols)
                    .and_then(|mm| {
                        if cols == 0 {
                            Ok(CMatrix::zeros(s.complex.dims[d], 0))
                        } else {
                            Ok(mm)
                        }
                    })
            })
            .collect::<Result<_>>()?;
        levels.push(spans);
    }
    Ok((FilteredComplex::new(c, levels)?, mu))
}

pub fn filtered_to_schema(fc: &FilteredComplex, mu: Option<&CohomologyMetric>) -> FilteredComplexSchema {
    let c = fc.complex();
    FilteredComplexSchema {
        schema_version: SCHEMA_VERSION,
        complex: complex_to_schema(c, mu),
        levels: (1..fc.pieces())
            .map(|p| {
                (c.degree_min()..=c.degree_max())
                    .map(|n| matrix_to_entries(&fc.basis(p, n)))
                    .collect()
            })
            .collect(),
    }
}

/// A single evaluated number: the torus element it was evaluated at, the
/// value, the evaluation branch, and the normalization in force.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValueRecord {
    pub schema_version: u32,
    /// Torus coordinates as `[numerator, denominator]` pairs.
    pub t: Vec<[i64; 2]>,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_im: Option<f64>,
    pub branch: String,
    pub normalization: String,
}

impl ValueRecord {
    pub fn new(t: Vec<[i64; 2]>, value: C64, branch: &str, normalization: &str) -> Self {
        ValueRecord {
            schema_version: SCHEMA_VERSION,
            t,
            value: value.re,
            value_im: if value.im.abs() > 1e-12 { Some(value.im) } else { None },
            branch: branch.to_string(),
            normalization: normalization.to_string(),
        }
    }
}
