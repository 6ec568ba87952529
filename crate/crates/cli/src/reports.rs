//! Report types that exist only at the command line.

use serde::{Deserialize, Serialize};

use walshlab::khintchine::{ConstantsReport, SampleRecord};
use walshlab::norms::NormSpec;
use walshlab::projection::{BasisConstantReport, IdentityCheck, Perturbation};
use walshlab::DistributionTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Status::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalshEvalReport {
    pub order: u32,
    pub indices: Vec<u64>,
    pub coeffs: Vec<f64>,
    /// Value on each cell `I^n_j`, `j = 0..2^n`.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaReport {
    pub order: u32,
    pub entries: Vec<Vec<i8>>,
    pub symmetric: bool,
    pub orthogonal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub spec: NormSpec,
    pub indices: Vec<u64>,
    pub coeffs: Vec<f64>,
    pub order: u32,
    pub norm: f64,
    pub l2: f64,
    pub ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOutput {
    #[serde(flatten)]
    pub report: ConstantsReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_sample: Option<Vec<SampleRecord>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquidistributionReport {
    pub check: String,
    pub equal: bool,
    pub status: Status,
    pub indices: Vec<u64>,
    pub coeffs: Vec<f64>,
    pub walsh_table: DistributionTable,
    pub rademacher_table: DistributionTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaCheckReport {
    pub check: String,
    pub order: u32,
    pub symmetric: bool,
    pub orthogonal: bool,
    pub status: Status,
    /// `max |θθᵀ - 2^n I|` over all entries.
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XorCheckReport {
    pub check: String,
    pub order: u32,
    pub pairs_checked: u64,
    pub failures: u64,
    pub status: Status,
    /// `max |w_i w_j - w_{i⊕j}|` over all pairs and cells.
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragingCheckReport {
    pub check: String,
    pub order: u32,
    pub selected: Vec<u64>,
    pub exact: bool,
    pub status: Status,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectReport {
    pub order: u32,
    pub selected: Vec<u64>,
    pub perturbation: Vec<Perturbation>,
    pub spec: NormSpec,
    pub samples: usize,
    pub seed: u64,
    pub identity: IdentityCheck,
    pub status: Status,
    pub max_residual: f64,
    /// Sampled lower bound for `‖P_n‖`.
    pub p_norm_lower_bound: f64,
    /// Sampled lower bound for `‖Q_n‖`.
    pub q_norm_lower_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_constant: Option<BasisConstantReport>,
    pub note: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emit;

    fn round_trip<T>(report: &T)
    where
        T: Serialize + for<'de> Deserialize<'de> + PartialEq + std::fmt::Debug,
    {
        let bytes = emit::json(report).unwrap();
        let back: T = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(&back, report);
    }

    #[test]
    fn reports_round_trip() {
        round_trip(&NormReport {
            spec: "local:0/2,3/2|mp:2".parse().unwrap(),
            indices: vec![1, 2],
            coeffs: vec![0.1, 1.0 / 3.0],
            order: 2,
            norm: std::f64::consts::PI,
            l2: 0.35136418446315326,
            ratio: 8.941,
            note: Some("n".into()),
        });
        round_trip(&ThetaCheckReport {
            check: "theta".into(),
            order: 3,
            symmetric: true,
            orthogonal: true,
            status: Status::Pass,
            max_residual: 0.0,
        });
        let scan = walshlab::khintchine::scan_constants(
            &NormSpec::lp(3.0).unwrap(),
            1.5,
            3,
            20,
            4,
            walshlab::khintchine::SearchMode::Random,
        )
        .unwrap();
        let per_sample = walshlab::khintchine::scan_samples(&scan.spec, 1.5, 3, 20, 4)
            .unwrap()
            .into_iter()
            .map(|mut r| {
                r.coeffs.clear();
                r.indices.clear();
                r
            })
            .collect();
        round_trip(&ScanOutput {
            report: scan,
            per_sample: Some(per_sample),
        });
    }
}
