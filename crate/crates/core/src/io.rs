//! Instance files, analysis reports and benchmark rows.
//!
//! Rational entries travel as strings (`"p/q"`, `"p/q+r/s i"`) so no float
//! rounding creeps in through JSON; float entries are `[re, im]` pairs.

use std::time::Instant;

use num_complex::Complex64;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::certify::{certify, verify_chain, CertificateChain, CertifyError};
use crate::gen::shift_and_kill;
use crate::index::{dim_sequence, index_report, theorem_bound, DimSequence, IndexReport};
use crate::matspace::{AnySpace, Backend, Field, GaussRational, Matrix, MatrixSpace, SpaceError};

pub const SCHEMA: &str = "spanlab/1";
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    /// Gaussian rationals written as strings.
    Rational,
    /// Strings or `[re, im]` pairs.
    Complex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Text(String),
    Pair([f64; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub d: usize,
    pub field: FieldKind,
    pub generators: Vec<Vec<Vec<Entry>>>,
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("malformed instance JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema `{0}`")]
    Schema(String),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::Invalid(msg.into()))
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let file: InstanceFile = serde_json::from_str(text)?;
        file.validate()?;
        Ok(file)
    }

    fn validate(&self) -> Result<(), ParseError> {
        if let Some(s) = &self.schema {
            if s != SCHEMA {
                return Err(ParseError::Schema(s.clone()));
            }
        }
        if self.d == 0 {
            return invalid("d must be positive");
        }
        if self.generators.is_empty() {
            return invalid("at least one generator is required");
        }
        for (g, grid) in self.generators.iter().enumerate() {
            if grid.len() != self.d || grid.iter().any(|row| row.len() != self.d) {
                return invalid(format!("generator {g} is not {0}×{0}", self.d));
            }
            for entry in grid.iter().flatten() {
                match entry {
                    Entry::Text(t) => {
                        t.parse::<GaussRational>().map_err(|e| ParseError::Invalid(e.to_string()))?;
                    }
                    Entry::Pair(_) if self.field == FieldKind::Rational => {
                        return invalid("rational instances take string entries");
                    }
                    Entry::Pair(p) if !p.iter().all(|x| x.is_finite()) => return invalid("non-finite entry"),
                    Entry::Pair(_) => {}
                }
            }
        }
        Ok(())
    }

    pub fn from_exact(generators: &[Matrix<GaussRational>]) -> Self {
        let d = generators.first().map_or(0, Matrix::rows);
        let generators = generators
            .iter()
            .map(|m| m.to_rows().into_iter().map(|r| r.iter().map(|x| Entry::Text(x.to_string())).collect()).collect())
            .collect();
        InstanceFile { schema: Some(SCHEMA.into()), d, field: FieldKind::Rational, generators }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    /// Exact when every entry is a string, float otherwise.
    pub fn default_backend(&self) -> Backend {
        let all_text = self.generators.iter().flatten().flatten().all(|e| matches!(e, Entry::Text(_)));
        if all_text {
            Backend::Exact
        } else {
            Backend::Float
        }
    }

    /// Generators as listed, in the requested backend (the default when
    /// `None`). Float entries become the exact binary value they hold.
    pub fn raw_generators(&self, backend: Option<Backend>) -> Result<AnyGenerators, ParseError> {
        Ok(match backend.unwrap_or_else(|| self.default_backend()) {
            Backend::Exact => AnyGenerators::Exact(self.matrices(|e| match e {
                Entry::Text(t) => t.parse().map_err(|e: crate::matspace::ParseScalarError| e.to_string()),
                Entry::Pair([re, im]) => Ok(GaussRational::new(exact(*re)?, exact(*im)?)),
            })?),
            Backend::Float => AnyGenerators::Float(self.matrices(|e| match e {
                Entry::Text(t) => t.parse::<GaussRational>().map(|x| x.to_c64()).map_err(|e| e.to_string()),
                Entry::Pair([re, im]) => Ok(Complex64::new(*re, *im)),
            })?),
        })
    }

    /// The span of [`InstanceFile::raw_generators`].
    pub fn space(&self, backend: Option<Backend>) -> Result<AnySpace, ParseError> {
        Ok(match self.raw_generators(backend)? {
            AnyGenerators::Exact(g) => AnySpace::Exact(MatrixSpace::canonical_basis(&g)?),
            AnyGenerators::Float(g) => AnySpace::Float(MatrixSpace::canonical_basis(&g)?),
        })
    }

    fn matrices<F: Field>(&self, conv: impl Fn(&Entry) -> Result<F, String>) -> Result<Vec<Matrix<F>>, ParseError> {
        self.generators
            .iter()
            .map(|grid| {
                let rows = grid
                    .iter()
                    .map(|row| row.iter().map(&conv).collect::<Result<Vec<F>, _>>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(ParseError::Invalid)?;
                Matrix::from_rows(rows).map_err(|e| ParseError::Invalid(e.to_string()))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnyGenerators {
    Exact(Vec<Matrix<GaussRational>>),
    Float(Vec<Matrix<Complex64>>),
}

fn exact(x: f64) -> Result<BigRational, String> {
    BigRational::from_float(x).ok_or_else(|| format!("non-finite entry {x}"))
}

/// A certificate in the backend it was computed in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "backend", content = "chain")]
pub enum AnyCertificate {
    Exact(CertificateChain<GaussRational>),
    Float(CertificateChain<Complex64>),
}

impl AnyCertificate {
    pub fn is_primitive(&self) -> bool {
        match self {
            AnyCertificate::Exact(c) => c.is_primitive(),
            AnyCertificate::Float(c) => c.is_primitive(),
        }
    }

    pub fn claimed_index_bound(&self) -> Option<usize> {
        match self {
            AnyCertificate::Exact(c) => c.claimed_index_bound,
            AnyCertificate::Float(c) => c.claimed_index_bound,
        }
    }

    /// Rechecks the certificate against `space`. A backend mismatch is a
    /// rejection.
    pub fn verify(&self, space: &AnySpace) -> Result<(), String> {
        match (self, space) {
            (AnyCertificate::Exact(c), AnySpace::Exact(l)) => verify_chain(l, c).map_err(|r| r.to_string()),
            (AnyCertificate::Float(c), AnySpace::Float(l)) => verify_chain(l, c).map_err(|r| r.to_string()),
            _ => Err("certificate backend differs from the instance backend".into()),
        }
    }
}

/// The certify section of a report. The chain is only emitted after it has
/// been verified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum CertifySection {
    Certified { certificate: Box<AnyCertificate> },
    /// `L^D = 0`, so no certificate is possible.
    NilpotentSpace,
    /// The engine's own certificate did not pass verification.
    Rejected { reason: String },
    Failed { error: String },
}

/// Wall-clock times in microseconds. Everything else in a report is
/// deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub analyze_micros: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certify_micros: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema: String,
    pub engine_version: String,
    pub backend: Backend,
    pub d: usize,
    pub space_dim: usize,
    pub dim_sequence: DimSequence,
    pub index: IndexReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certify: Option<CertifySection>,
    pub timing: Timing,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn micros(t: Instant) -> u64 {
    u64::try_from(t.elapsed().as_micros()).unwrap_or(u64::MAX)
}

fn analyze_in<F: Field>(l: &MatrixSpace<F>, k_max: Option<usize>) -> (DimSequence, IndexReport) {
    let k = k_max.unwrap_or_else(|| theorem_bound(l.d()) as usize).max(1);
    (dim_sequence(l, k), index_report(l))
}

/// Dimension sequence to `k_max` (default: the theorem bound) and the
/// index report.
pub fn analyze(space: &AnySpace, k_max: Option<usize>) -> Report {
    let start = Instant::now();
    let (seq, index) = match space {
        AnySpace::Exact(l) => analyze_in(l, k_max),
        AnySpace::Float(l) => analyze_in(l, k_max),
    };
    Report {
        schema: SCHEMA.into(),
        engine_version: ENGINE_VERSION.into(),
        backend: space.backend(),
        d: space.d(),
        space_dim: space.dim(),
        dim_sequence: seq,
        index,
        certify: None,
        timing: Timing { analyze_micros: micros(start), certify_micros: None },
    }
}

fn certify_in<F: Field>(l: &MatrixSpace<F>, wrap: fn(CertificateChain<F>) -> AnyCertificate) -> CertifySection {
    match certify(l) {
        Ok(chain) => match verify_chain(l, &chain) {
            Ok(()) => CertifySection::Certified { certificate: Box::new(wrap(chain)) },
            Err(r) => CertifySection::Rejected { reason: r.to_string() },
        },
        Err(CertifyError::NilpotentSpace) => CertifySection::NilpotentSpace,
        Err(e) => CertifySection::Failed { error: e.to_string() },
    }
}

/// [`analyze`] plus a verified certificate.
pub fn analyze_and_certify(space: &AnySpace, k_max: Option<usize>) -> Report {
    let mut report = analyze(space, k_max);
    let start = Instant::now();
    report.certify = Some(match space {
        AnySpace::Exact(l) => certify_in(l, AnyCertificate::Exact),
        AnySpace::Float(l) => certify_in(l, AnyCertificate::Float),
    });
    report.timing.certify_micros = Some(micros(start));
    report
}

/// One line of the scaling benchmark.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchRow {
    pub d: usize,
    pub bound: u64,
    pub millis: u64,
    /// Largest basis held while forming `L^bound`.
    pub max_basis: usize,
}

/// Times `L^K` for `L = span{cyclic shift, E11}` and `K = theorem_bound(d)`.
pub fn bench_row(d: usize) -> BenchRow {
    let l = MatrixSpace::canonical_basis(&shift_and_kill(d)).expect("nonzero generators");
    let bound = theorem_bound(d);
    let start = Instant::now();
    let (power, max_basis) = l.power_with_peak(bound as usize);
    let millis = u64::try_from(start.elapsed().as_millis()).unwrap_or(u64::MAX);
    debug_assert!(power.is_full());
    BenchRow { d, bound, millis, max_basis }
}
