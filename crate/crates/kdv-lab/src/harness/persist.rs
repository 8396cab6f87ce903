//! On-disk layout of ensemble runs: per-trajectory CSV observation tables
//! with JSON sidecars, plus a run-level `manifest.json`. Reports regenerate
//! byte-identically from these files alone.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::fourier::fmt_float;
use crate::kdv::TrajectoryRecord;

/// Observation table of one trajectory: the persisted subset of a
/// [`TrajectoryRecord`].
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationTable {
    pub t: Vec<f64>,
    pub tau: Vec<f64>,
    pub norm0: Vec<f64>,
    pub norm1: Vec<f64>,
    pub norm2: Vec<f64>,
    pub j0: Vec<f64>,
    pub j1: Vec<f64>,
    pub j2: Vec<f64>,
    pub actions: Vec<Vec<f64>>,
    pub angles: Vec<Vec<f64>>,
    pub m_obs: usize,
}

impl From<&TrajectoryRecord> for ObservationTable {
    fn from(rec: &TrajectoryRecord) -> Self {
        ObservationTable {
            t: rec.t.clone(),
            tau: rec.tau.clone(),
            norm0: rec.norm0.clone(),
            norm1: rec.norm1.clone(),
            norm2: rec.norm2.clone(),
            j0: rec.j0.clone(),
            j1: rec.j1.clone(),
            j2: rec.j2.clone(),
            actions: rec.actions.clone(),
            angles: rec.angles.clone(),
            m_obs: rec.m_obs,
        }
    }
}

impl ObservationTable {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut header = String::from("t,tau,norm0,norm1,norm2,J0,J1,J2");
        for k in 1..=self.m_obs {
            header.push_str(&format!(",I_{k}"));
        }
        for k in 1..=self.m_obs {
            header.push_str(&format!(",phi_{k}"));
        }
        header.push('\n');
        let mut out = header;
        for i in 0..self.t.len() {
            let mut row = vec![
                fmt_float(self.t[i]),
                fmt_float(self.tau[i]),
                fmt_float(self.norm0[i]),
                fmt_float(self.norm1[i]),
                fmt_float(self.norm2[i]),
                fmt_float(self.j0[i]),
                fmt_float(self.j1[i]),
                fmt_float(self.j2[i]),
            ];
            for k in 0..self.m_obs {
                row.push(fmt_float(self.actions[i][k]));
            }
            for k in 0..self.m_obs {
                row.push(fmt_float(self.angles[i][k]));
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, path_for_errors: &str) -> Result<Self, HarnessError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| HarnessError::Parse {
            path: path_for_errors.to_string(),
            detail: "empty file".into(),
        })?;
        let cols: Vec<&str> = header.split(',').collect();
        let fixed = ["t", "tau", "norm0", "norm1", "norm2", "J0", "J1", "J2"];
        if cols.len() < fixed.len() || cols[..fixed.len()] != fixed {
            return Err(HarnessError::Parse {
                path: path_for_errors.to_string(),
                detail: format!("unexpected header `{header}`"),
            });
        }
        let m_obs = cols[fixed.len()..]
            .iter()
            .filter(|c| c.starts_with("I_"))
            .count();
        let expected_cols = fixed.len() + 2 * m_obs;
        if cols.len() != expected_cols {
            return Err(HarnessError::Parse {
                path: path_for_errors.to_string(),
                detail: format!("expected {expected_cols} columns, found {}", cols.len()),
            });
        }

        let mut table = ObservationTable {
            t: Vec::new(),
            tau: Vec::new(),
            norm0: Vec::new(),
            norm1: Vec::new(),
            norm2: Vec::new(),
            j0: Vec::new(),
            j1: Vec::new(),
            j2: Vec::new(),
            actions: Vec::new(),
            angles: Vec::new(),
            m_obs,
        };
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let vals: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
            let vals = vals.map_err(|e| HarnessError::Parse {
                path: path_for_errors.to_string(),
                detail: format!("line {}: {e}", lineno + 2),
            })?;
            if vals.len() != expected_cols {
                return Err(HarnessError::Parse {
                    path: path_for_errors.to_string(),
                    detail: format!("line {}: wrong column count", lineno + 2),
                });
            }
            table.t.push(vals[0]);
            table.tau.push(vals[1]);
            table.norm0.push(vals[2]);
            table.norm1.push(vals[3]);
            table.norm2.push(vals[4]);
            table.j0.push(vals[5]);
            table.j1.push(vals[6]);
            table.j2.push(vals[7]);
            table.actions.push(vals[8..8 + m_obs].to_vec());
            table.angles.push(vals[8 + m_obs..].to_vec());
        }
        Ok(table)
    }
}

/// JSON sidecar written next to each trajectory CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectorySidecar {
    pub nu: f64,
    pub trajectory_index: usize,
    pub seed_stream: u64,
    pub master_seed: u64,
    pub config_hash: String,
    /// Burn-in length in original time prepended before the observations.
    pub burn_in_t: f64,
    pub undefined_angles: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_window_mean_norm1_sq: Option<f64>,
    /// Full run configuration, embedded for standalone trajectories;
    /// ensemble members defer to the run manifest instead.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<crate::harness::RunConfig>,
    /// Conservation drift report, appended by `verify-conservation`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conservation: Option<crate::conserved::ConservationReport>,
}

/// One derived constant with its provenance line, echoed into every run
/// manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerivedConstant {
    pub value: f64,
    pub provenance: String,
}

pub fn derived_constants() -> Vec<(String, DerivedConstant)> {
    vec![
        (
            "gap_action_constant".into(),
            DerivedConstant {
                value: crate::hill::GAP_ACTION_CONSTANT,
                provenance: "least-squares regression of linearized actions against gap^2/k on \
                             single-mode potentials a*cos(kx), a in {0.01..0.05}, k in {1,2,3}"
                    .into(),
            },
        ),
        (
            "j1_cubic_coeff".into(),
            DerivedConstant {
                value: crate::conserved::J1_CUBIC_COEFF,
                provenance: "drift least-squares fit over random smooth initial data under the \
                             integrated flow; verified algebraically on two-mode polynomials"
                    .into(),
            },
        ),
        (
            "j2_cross_coeff".into(),
            DerivedConstant {
                value: crate::conserved::J2_CROSS_COEFF,
                provenance: "same derivation as j1_cubic_coeff".into(),
            },
        ),
        (
            "j2_quartic_coeff".into(),
            DerivedConstant {
                value: crate::conserved::J2_QUARTIC_COEFF,
                provenance: "same derivation as j1_cubic_coeff".into(),
            },
        ),
    ]
}

/// FNV-1a hash of the canonical config JSON, hex encoded. Identifies runs;
/// not cryptographic.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    format!("{h:016x}")
}

pub fn write_string(path: &Path, content: &str) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent.display().to_string(), e))?;
    }
    fs::write(path, content).map_err(|e| HarnessError::io(path.display().to_string(), e))
}

pub fn read_string(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| HarnessError::io(path.display().to_string(), e))
}

pub fn nu_dir_name(nu: f64) -> String {
    format!("nu_{nu:.6}")
}

pub fn trajectory_paths(run_dir: &Path, nu: f64, index: usize) -> (PathBuf, PathBuf) {
    let dir = run_dir.join(nu_dir_name(nu));
    (
        dir.join(format!("traj_{index:05}.csv")),
        dir.join(format!("traj_{index:05}.json")),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observation_csv_round_trip() {
        let table = ObservationTable {
            t: vec![0.0, 0.5],
            tau: vec![0.0, 0.05],
            norm0: vec![1.0, 0.9],
            norm1: vec![1.5, 1.4],
            norm2: vec![2.0, 2.2],
            j0: vec![1.0, 1.0],
            j1: vec![2.25, 2.25],
            j2: vec![4.0, 4.1],
            actions: vec![vec![0.5, 0.1], vec![0.45, 0.12]],
            angles: vec![vec![0.0, 1.0], vec![f64::NAN, 2.0]],
            m_obs: 2,
        };
        let csv = table.to_csv();
        let back = ObservationTable::from_csv(&csv, "test").unwrap();
        assert_eq!(back.m_obs, 2);
        assert_eq!(back.t, table.t);
        assert_eq!(back.actions, table.actions);
        assert!(back.angles[1][0].is_nan());
        assert_eq!(back.angles[1][1], 2.0);
        // writing again is byte-identical
        assert_eq!(back.to_csv(), csv);
    }

    #[test]
    fn fnv_hash_is_stable() {
        assert_eq!(fnv1a_hex(b""), "cbf29ce484222325");
        assert_eq!(fnv1a_hex(b"kdv"), fnv1a_hex(b"kdv"));
        assert_ne!(fnv1a_hex(b"kdv"), fnv1a_hex(b"vdk"));
    }
}
