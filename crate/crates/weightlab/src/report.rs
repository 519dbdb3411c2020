//! Machine-readable run reports: a schema-versioned JSON document plus flat
//! CSV side tables for plotting. Reports are deterministic: field order is
//! fixed by the struct layout, collections are sorted at build time, and no
//! wall-clock data enters unless explicitly stamped.

use crate::error::Result;
use crate::geometry::Cube;
use crate::sawyer::{CfiRow, GoodLambdaTable};
use crate::tails::{ConstantEstimate, TheoremConstants};
use crate::util::LineFit;
use crate::verify::{SweepTable, Verdict};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

/// Echo of the run parameters; identical config + seed gives byte-identical
/// reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub dimension: usize,
    pub resolution: usize,
    pub depth: u32,
    pub p_list: Vec<f64>,
    pub q_list: Vec<f64>,
    pub s_list: Vec<f64>,
    pub tol: f64,
    pub slack: f64,
    pub seed: u64,
    pub weights: Vec<String>,
    pub random_weights: usize,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dimension != 1 && self.dimension != 2 {
            return Err(crate::error::Error::BadDimension(self.dimension));
        }
        if !self.resolution.is_power_of_two() {
            return Err(crate::error::Error::InvalidConfig(format!(
                "resolution must be a power of two, got {}",
                self.resolution
            )));
        }
        if self.depth > 14 {
            return Err(crate::error::Error::DepthOverMax { depth: self.depth, max: 14 });
        }
        Ok(())
    }
}

/// One estimator output, traceable through `op` and the inputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantRecord {
    pub op: String,
    pub weight_id: String,
    pub p: Option<f64>,
    pub s: Option<f64>,
    pub estimate: ConstantEstimate,
}

/// One theorem verdict, traceable through `op`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub op: String,
    pub weight_id: String,
    pub params: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct Tables {
    pub theorem_constants: Vec<TheoremConstants>,
    pub sweep: Option<SweepTable>,
    pub cfi: Vec<CfiRow>,
    pub good_lambda: Vec<GoodLambdaTable>,
    pub decay_fits: Vec<(String, Option<LineFit>)>,
}

/// The full report document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub generated_by: String,
    /// absent by default so that equal configs give byte-identical files
    pub timestamp: Option<String>,
    pub config: RunConfig,
    pub constants: Vec<ConstantRecord>,
    pub verdicts: Vec<VerdictRecord>,
    pub tables: Tables,
}

impl Report {
    pub fn new(config: RunConfig) -> Report {
        Report {
            schema_version: SCHEMA_VERSION,
            generated_by: format!("weightlab {}", env!("CARGO_PKG_VERSION")),
            timestamp: None,
            config,
            constants: Vec::new(),
            verdicts: Vec::new(),
            tables: Tables::default(),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.verdict.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_json()?.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }

    /// Flat CSV side tables next to `stem`: constants, verdicts, and any
    /// populated experiment tables.
    pub fn write_csv(&self, stem: &Path) -> Result<Vec<std::path::PathBuf>> {
        let mut written = Vec::new();
        let with_suffix = |suffix: &str| -> std::path::PathBuf {
            let mut name = stem
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "report".into());
            name.push('_');
            name.push_str(suffix);
            name.push_str(".csv");
            stem.with_file_name(name)
        };

        if !self.constants.is_empty() {
            let path = with_suffix("constants");
            let mut f = std::fs::File::create(&path)?;
            writeln!(f, "op,weight,p,s,value,upper,family_size,skipped,argmax_center,argmax_half_side")?;
            for c in &self.constants {
                writeln!(
                    f,
                    "{},{},{},{},{:?},{:?},{},{},{:?},{:?}",
                    c.op,
                    csv_quote(&c.weight_id),
                    opt(c.p),
                    opt(c.s),
                    c.estimate.value,
                    c.estimate.upper,
                    c.estimate.family_size,
                    c.estimate.skipped,
                    c.estimate.argmax_cube.center()[0],
                    c.estimate.argmax_cube.half_side(),
                )?;
            }
            written.push(path);
        }

        if !self.verdicts.is_empty() {
            let path = with_suffix("verdicts");
            let mut f = std::fs::File::create(&path)?;
            writeln!(f, "op,weight,params,passed,worst_margin,tests_run,skipped,guard_flagged")?;
            for v in &self.verdicts {
                writeln!(
                    f,
                    "{},{},{},{},{:?},{},{},{}",
                    v.op,
                    csv_quote(&v.weight_id),
                    csv_quote(&v.params),
                    v.verdict.passed,
                    v.verdict.worst_margin,
                    v.verdict.tests_run,
                    v.verdict.skipped,
                    v.verdict.guard_flagged,
                )?;
            }
            written.push(path);
        }

        if let Some(sweep) = &self.tables.sweep {
            let path = with_suffix("sweep");
            let mut f = std::fs::File::create(&path)?;
            writeln!(f, "eps,cp_lower,cp_upper,ratio_to_eps")?;
            for r in &sweep.rows {
                writeln!(f, "{:?},{:?},{:?},{:?}", r.eps, r.cp_lower, r.cp_upper, r.ratio_to_eps)?;
            }
            written.push(path);
        }

        if !self.tables.cfi.is_empty() {
            let path = with_suffix("cfi");
            let mut f = std::fs::File::create(&path)?;
            writeln!(f, "weight,signal,p,q,ratio,phi_bound,exponent_factor,cq_estimate,degenerate")?;
            for r in &self.tables.cfi {
                writeln!(
                    f,
                    "{},{},{:?},{:?},{:?},{:?},{:?},{:?},{}",
                    csv_quote(&r.weight_id),
                    csv_quote(&r.signal_id),
                    r.p,
                    r.q,
                    r.ratio,
                    r.phi_bound,
                    r.exponent_factor,
                    r.cq_estimate,
                    r.degenerate,
                )?;
            }
            written.push(path);
        }

        if !self.tables.good_lambda.is_empty() {
            let path = with_suffix("goodlambda");
            let mut f = std::fs::File::create(&path)?;
            writeln!(f, "signal,weight,k,gamma,fraction,weighted_fraction")?;
            for t in &self.tables.good_lambda {
                for r in &t.rows {
                    writeln!(
                        f,
                        "{},{},{},{:?},{:?},{:?}",
                        csv_quote(&t.signal_id),
                        csv_quote(&t.weight_id),
                        r.k,
                        r.gamma,
                        r.fraction,
                        r.weighted_fraction,
                    )?;
                }
            }
            written.push(path);
        }

        Ok(written)
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// Ambient box helper shared by the CLI and tests: centered at the origin
/// with half-side 2 by default.
pub fn default_ambient(dimension: usize) -> Result<Cube> {
    if dimension == 1 {
        Cube::interval(-2.0, 2.0)
    } else {
        Cube::square(0.0, 0.0, 2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip_and_determinism() {
        let cfg = RunConfig {
            command: "verify all".into(),
            dimension: 1,
            resolution: 256,
            depth: 4,
            p_list: vec![2.0],
            q_list: vec![],
            s_list: vec![],
            tol: 1e-9,
            slack: 1e-8,
            seed: 7,
            weights: vec!["constant".into()],
            random_weights: 0,
        };
        cfg.validate().unwrap();
        let r1 = Report::new(cfg.clone());
        let r2 = Report::new(cfg);
        assert_eq!(r1.to_json().unwrap(), r2.to_json().unwrap());
        assert!(r1.timestamp.is_none());
    }

    #[test]
    fn config_validation() {
        let mut cfg = RunConfig {
            command: "x".into(),
            dimension: 1,
            resolution: 100,
            depth: 4,
            p_list: vec![],
            q_list: vec![],
            s_list: vec![],
            tol: 1e-9,
            slack: 1e-8,
            seed: 0,
            weights: vec![],
            random_weights: 0,
        };
        assert!(cfg.validate().is_err(), "non power-of-two resolution");
        cfg.resolution = 128;
        cfg.depth = 15;
        assert!(cfg.validate().is_err(), "depth over maximum");
        cfg.depth = 8;
        assert!(cfg.validate().is_ok());
    }
}
