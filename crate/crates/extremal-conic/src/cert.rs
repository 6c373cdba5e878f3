//! The certificate file format (`extremal-conic/cert-v1`).
//!
//! Certificates are self-contained JSON documents: rational numbers are
//! `{"num": "...", "den": "..."}` decimal-string pairs (no integer-width
//! limits), and re-verification works from the file alone with purely
//! rational arithmetic. Parsing is strict: canonical integer strings,
//! reduced fractions, positive denominators, and no unknown fields, so
//! any altered digit changes the parsed value and fails re-verification.

use crate::graphs::Graph;
use crate::lasserre::DualCertificateFinite;
use crate::rational::{int_from_canonical, int_to_string, Rat};
use crate::verify::{
    certify_trivariate, certify_univariate, BoxBudget, BoxTranscript, Certificate,
    CertificateData, LdltWitness, RatMatrix, SturmTranscript, VerificationTranscript,
};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA: &str = "extremal-conic/cert-v1";

#[derive(Debug, Error)]
pub enum CertError {
    #[error("malformed certificate JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema `{0}`")]
    Schema(String),
    #[error("unsupported problem `{0}`")]
    Problem(String),
    #[error("non-canonical rational `{num}/{den}`")]
    BadRational { num: String, den: String },
    #[error("re-verification failed: {0}")]
    Failed(String),
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct RatJson {
    pub num: String,
    pub den: String,
}

impl RatJson {
    pub fn from_rat(x: &Rat) -> RatJson {
        RatJson {
            num: int_to_string(x.numer()),
            den: int_to_string(x.denom()),
        }
    }

    /// Strict parse: canonical integers, positive denominator, reduced.
    pub fn to_rat(&self) -> Result<Rat, CertError> {
        let bad = || CertError::BadRational {
            num: self.num.clone(),
            den: self.den.clone(),
        };
        let num = int_from_canonical(&self.num).ok_or_else(bad)?;
        let den = int_from_canonical(&self.den).ok_or_else(bad)?;
        if !den.is_positive() {
            return Err(bad());
        }
        if num.gcd(&den) != BigInt::one() && !(num.is_zero() && den.is_one()) {
            return Err(bad());
        }
        Ok(Rat::new(num, den))
    }
}

fn int_json(x: &BigInt) -> String {
    int_to_string(x)
}

fn parse_int(s: &str) -> Result<BigInt, CertError> {
    int_from_canonical(s).ok_or_else(|| CertError::BadRational {
        num: s.to_string(),
        den: "1".to_string(),
    })
}

fn matrix_to_json(m: &RatMatrix) -> Vec<Vec<RatJson>> {
    m.iter()
        .map(|row| row.iter().map(RatJson::from_rat).collect())
        .collect()
}

fn matrix_from_json(m: &[Vec<RatJson>]) -> Result<RatMatrix, CertError> {
    m.iter()
        .map(|row| row.iter().map(RatJson::to_rat).collect())
        .collect()
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct WitnessJson {
    pub perm: Vec<usize>,
    pub lower: Vec<Vec<RatJson>>,
    pub diag: Vec<RatJson>,
}

impl WitnessJson {
    fn from_witness(w: &LdltWitness) -> WitnessJson {
        WitnessJson {
            perm: w.perm.clone(),
            lower: matrix_to_json(&w.lower),
            diag: w.diag.iter().map(RatJson::from_rat).collect(),
        }
    }

    fn to_witness(&self) -> Result<LdltWitness, CertError> {
        Ok(LdltWitness {
            perm: self.perm.clone(),
            lower: matrix_from_json(&self.lower)?,
            diag: self
                .diag
                .iter()
                .map(RatJson::to_rat)
                .collect::<Result<_, _>>()?,
        })
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct SturmJson {
    pub distinct_roots: usize,
    pub sample_points: usize,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct BoxJson {
    pub budget: u64,
    pub boxes_processed: u64,
    pub discharged_outside: u64,
    pub discharged_nonpositive: u64,
    pub discharged_symmetry: u64,
    pub max_depth: u32,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct TranscriptJson {
    pub integer_bound: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge_constraint: Option<SturmJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region_constraint: Option<BoxJson>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct VerificationJson {
    pub method: String,
    pub transcript: TranscriptJson,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct CertFile {
    pub schema: String,
    pub problem: String,
    pub n: u32,
    pub d: u32,
    pub certified_bound: RatJson,
    pub data: serde_json::Value,
    pub verification: VerificationJson,
    pub version: String,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
struct LpData {
    f: Vec<RatJson>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
struct ThreePointData {
    blocks: Vec<Vec<Vec<RatJson>>>,
    psd_witnesses: Vec<WitnessJson>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
struct GraphJson {
    vertex_count: usize,
    edges: Vec<(u32, u32)>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
struct GraphDualData {
    step: u32,
    graph: GraphJson,
    matrix: Vec<Vec<RatJson>>,
    psd_witness: WitnessJson,
}

fn verification_json(cert: &Certificate) -> VerificationJson {
    VerificationJson {
        method: cert.verification.method.clone(),
        transcript: TranscriptJson {
            integer_bound: int_json(&cert.certified_integer_bound),
            edge_constraint: cert.verification.edge_constraint.as_ref().map(|s| SturmJson {
                distinct_roots: s.distinct_roots,
                sample_points: s.sample_points,
            }),
            region_constraint: cert.verification.region_constraint.as_ref().map(|b| BoxJson {
                budget: b.budget,
                boxes_processed: b.boxes_processed,
                discharged_outside: b.discharged_outside,
                discharged_nonpositive: b.discharged_nonpositive,
                discharged_symmetry: b.discharged_symmetry,
                max_depth: b.max_depth,
            }),
        },
    }
}

/// Serialize a bound certificate to the pinned JSON format.
pub fn certificate_to_json(cert: &Certificate) -> String {
    let data = match &cert.data {
        CertificateData::LpCoefficients { f } => serde_json::to_value(LpData {
            f: f.iter().map(RatJson::from_rat).collect(),
        })
        .unwrap(),
        CertificateData::ThreePointBlocks {
            blocks,
            psd_witnesses,
        } => serde_json::to_value(ThreePointData {
            blocks: blocks.iter().map(|b| matrix_to_json(b)).collect(),
            psd_witnesses: psd_witnesses.iter().map(WitnessJson::from_witness).collect(),
        })
        .unwrap(),
    };
    let file = CertFile {
        schema: SCHEMA.to_string(),
        problem: cert.problem.clone(),
        n: cert.n,
        d: cert.d,
        certified_bound: RatJson::from_rat(&cert.certified_bound),
        data,
        verification: verification_json(cert),
        version: cert.version.clone(),
    };
    serde_json::to_string_pretty(&file).unwrap() + "\n"
}

/// Serialize a finite-graph dual certificate, embedding the graph so the
/// file re-verifies standalone.
pub fn graph_certificate_to_json(cert: &DualCertificateFinite, g: &Graph) -> String {
    let file = CertFile {
        schema: SCHEMA.to_string(),
        problem: "graph-lasserre-dual".to_string(),
        n: g.vertex_count() as u32,
        d: cert.t,
        certified_bound: RatJson::from_rat(&cert.bound),
        data: serde_json::to_value(GraphDualData {
            step: cert.t,
            graph: GraphJson {
                vertex_count: g.vertex_count(),
                edges: g.edges().to_vec(),
            },
            matrix: matrix_to_json(&cert.matrix),
            psd_witness: WitnessJson::from_witness(&cert.psd_witness),
        })
        .unwrap(),
        verification: VerificationJson {
            method: "exact-ldlt+sum-conditions".to_string(),
            transcript: TranscriptJson {
                integer_bound: int_json(&cert.certified_alpha),
                edge_constraint: None,
                region_constraint: None,
            },
        },
        version: crate::VERSION.to_string(),
    };
    serde_json::to_string_pretty(&file).unwrap() + "\n"
}

/// Summary of a successful re-verification.
#[derive(Clone, Debug)]
pub struct VerifiedSummary {
    pub problem: String,
    pub n: u32,
    pub d: u32,
    pub certified_bound: Rat,
    pub certified_integer_bound: BigInt,
}

/// Re-verify a certificate from its JSON text alone: exact rational
/// arithmetic only, no recomputation of the original solve. Every stored
/// field is cross-checked against the re-derived proof.
pub fn verify_certificate_json(text: &str) -> Result<VerifiedSummary, CertError> {
    let file: CertFile = serde_json::from_str(text)?;
    if file.schema != SCHEMA {
        return Err(CertError::Schema(file.schema));
    }
    let bound = file.certified_bound.to_rat()?;
    let stored_integer = parse_int(&file.verification.transcript.integer_bound)?;
    match file.problem.as_str() {
        "kissing-lp" => {
            let data: LpData = serde_json::from_value(file.data.clone())?;
            let f: Vec<Rat> = data
                .f
                .iter()
                .map(RatJson::to_rat)
                .collect::<Result<_, _>>()?;
            let cert = certify_univariate(&f, file.n, file.d)
                .map_err(|e| CertError::Failed(e.to_string()))?;
            check_bounds(&cert.certified_bound, &cert.certified_integer_bound, &bound, &stored_integer)?;
            let stored_sturm = file
                .verification
                .transcript
                .edge_constraint
                .as_ref()
                .ok_or_else(|| CertError::Failed("missing Sturm transcript".into()))?;
            let rerun = cert.verification.edge_constraint.as_ref().unwrap();
            if rerun
                != &(SturmTranscript {
                    distinct_roots: stored_sturm.distinct_roots,
                    sample_points: stored_sturm.sample_points,
                })
            {
                return Err(CertError::Failed("Sturm transcript mismatch".into()));
            }
            Ok(summary(&file, bound, stored_integer))
        }
        "kissing-three-point" => {
            let data: ThreePointData = serde_json::from_value(file.data.clone())?;
            let blocks: Vec<RatMatrix> = data
                .blocks
                .iter()
                .map(|b| matrix_from_json(b))
                .collect::<Result<_, _>>()?;
            // Stored witnesses must reconstruct the stored blocks exactly.
            if data.psd_witnesses.len() != blocks.len() {
                return Err(CertError::Failed("witness count mismatch".into()));
            }
            for (k, (wj, b)) in data.psd_witnesses.iter().zip(&blocks).enumerate() {
                let w = wj.to_witness()?;
                if !w.verify(b) {
                    return Err(CertError::Failed(format!(
                        "stored PSD witness {k} does not reconstruct its block"
                    )));
                }
            }
            let stored_box = file
                .verification
                .transcript
                .region_constraint
                .as_ref()
                .ok_or_else(|| CertError::Failed("missing box transcript".into()))?;
            let budget = BoxBudget {
                max_boxes: stored_box.budget,
                max_depth: 56,
            };
            let cert = certify_trivariate(&blocks, file.n, file.d, budget)
                .map_err(|e| CertError::Failed(e.to_string()))?;
            check_bounds(&cert.certified_bound, &cert.certified_integer_bound, &bound, &stored_integer)?;
            let rerun_box = cert.verification.region_constraint.as_ref().unwrap();
            let stored_box_t = BoxTranscript {
                budget: stored_box.budget,
                boxes_processed: stored_box.boxes_processed,
                discharged_outside: stored_box.discharged_outside,
                discharged_nonpositive: stored_box.discharged_nonpositive,
                discharged_symmetry: stored_box.discharged_symmetry,
                max_depth: stored_box.max_depth,
            };
            if rerun_box != &stored_box_t {
                return Err(CertError::Failed("box transcript mismatch".into()));
            }
            Ok(summary(&file, bound, stored_integer))
        }
        "graph-lasserre-dual" => {
            let data: GraphDualData = serde_json::from_value(file.data.clone())?;
            let g = Graph::new(data.graph.vertex_count, &data.graph.edges)
                .map_err(|e| CertError::Failed(e.to_string()))?;
            if data.step != file.d || g.vertex_count() as u32 != file.n {
                return Err(CertError::Failed("header fields disagree with data".into()));
            }
            let sets_t = crate::lasserre::enumerate_independent_sets(&g, data.step)
                .map_err(|e| CertError::Failed(e.to_string()))?;
            let cert = DualCertificateFinite {
                t: data.step,
                sets_t,
                matrix: matrix_from_json(&data.matrix)?,
                psd_witness: data.psd_witness.to_witness()?,
                bound: bound.clone(),
                certified_alpha: stored_integer.clone(),
            };
            cert.verify(&g).map_err(CertError::Failed)?;
            Ok(summary(&file, bound, stored_integer))
        }
        other => Err(CertError::Problem(other.to_string())),
    }
}

fn check_bounds(
    recomputed: &Rat,
    recomputed_int: &BigInt,
    stored: &Rat,
    stored_int: &BigInt,
) -> Result<(), CertError> {
    if recomputed != stored {
        return Err(CertError::Failed(
            "stored bound differs from the objective recomputed from the data".into(),
        ));
    }
    if recomputed_int != stored_int {
        return Err(CertError::Failed(
            "stored integer bound differs from the floor of the bound".into(),
        ));
    }
    Ok(())
}

fn summary(file: &CertFile, bound: Rat, integer: BigInt) -> VerifiedSummary {
    VerifiedSummary {
        problem: file.problem.clone(),
        n: file.n,
        d: file.d,
        certified_bound: bound,
        certified_integer_bound: integer,
    }
}

/// Build the verification transcript type used by [`Certificate`] from the
/// parsed JSON form (used in tests).
pub fn transcript_from_json(v: &VerificationJson) -> VerificationTranscript {
    VerificationTranscript {
        method: v.method.clone(),
        edge_constraint: v.transcript.edge_constraint.as_ref().map(|s| SturmTranscript {
            distinct_roots: s.distinct_roots,
            sample_points: s.sample_points,
        }),
        region_constraint: v.transcript.region_constraint.as_ref().map(|b| BoxTranscript {
            budget: b.budget,
            boxes_processed: b.boxes_processed,
            discharged_outside: b.discharged_outside,
            discharged_nonpositive: b.discharged_nonpositive,
            discharged_symmetry: b.discharged_symmetry,
            max_depth: b.max_depth,
        }),
    }
}
