use std::path::Path;

use serde::{Deserialize, Serialize};

use se2lcs::flow::{PiecewiseControl, Segment};
use se2lcs::{Error, Interval, Mat2, Result, SystemSpec, Vec2};

/// Drift matrix as `{ "lambda": λ, "mu": μ }` or as `[[a, b], [c, d]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    LambdaMu { lambda: f64, mu: f64 },
    Full([[f64; 2]; 2]),
}

/// On-disk system description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub alpha: f64,
    pub xi: [f64; 2],
    #[serde(rename = "A", alias = "a")]
    pub a: MatrixSpec,
    pub eta1: [f64; 2],
    pub omega: [f64; 2],
}

impl SpecFile {
    pub fn into_spec(self) -> Result<SystemSpec> {
        let a = match self.a {
            MatrixSpec::LambdaMu { lambda, mu } => Mat2::from_lambda_mu(lambda, mu),
            MatrixSpec::Full(m) => Mat2::new(m[0][0], m[0][1], m[1][0], m[1][1]),
        };
        SystemSpec::new(
            self.alpha,
            Vec2::new(self.xi[0], self.xi[1]),
            a,
            Vec2::new(self.eta1[0], self.eta1[1]),
            Interval::new(self.omega[0], self.omega[1])?,
        )
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))
}

pub fn parse_spec(text: &str) -> Result<SystemSpec> {
    let file: SpecFile = serde_json::from_str(text)
        .map_err(|e| Error::InvalidArgument(format!("spec file: {e}")))?;
    file.into_spec()
}

pub fn load_spec(path: &Path) -> Result<SystemSpec> {
    parse_spec(&read(path)?).map_err(|e| match e {
        Error::InvalidArgument(msg) => Error::InvalidArgument(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ControlFile {
    segments: Vec<Segment>,
}

pub fn parse_control(text: &str) -> Result<PiecewiseControl> {
    let file: ControlFile = serde_json::from_str(text)
        .map_err(|e| Error::InvalidArgument(format!("control file: {e}")))?;
    PiecewiseControl::new(file.segments)
}

pub fn load_control(path: &Path) -> Result<PiecewiseControl> {
    parse_control(&read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_matrix_forms() {
        let a = parse_spec(
            r#"{"alpha": 1, "xi": [1, 0], "A": {"lambda": 1, "mu": 2}, "eta1": [0, 1], "omega": [-1, 1]}"#,
        )
        .unwrap();
        let b = parse_spec(
            r#"{"alpha": 1, "xi": [1, 0], "A": [[1, -2], [2, 1]], "eta1": [0, 1], "omega": [-1, 1]}"#,
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.lambda_mu(), (1.0, 2.0));
    }

    #[test]
    fn rejects_invalid_specs() {
        let bad_omega = r#"{"alpha": 1, "xi": [1, 0], "A": {"lambda": 1, "mu": 0}, "eta1": [0, 1], "omega": [1, -1]}"#;
        assert!(matches!(parse_spec(bad_omega), Err(Error::InvalidInterval { .. })));
        let skew = r#"{"alpha": 1, "xi": [1, 0], "A": [[1, 0], [0, 2]], "eta1": [0, 1], "omega": [-1, 1]}"#;
        assert!(matches!(parse_spec(skew), Err(Error::NonCommuting { .. })));
        let err = parse_spec("{\n  \"alpha\": 1,\n  \"xi\": [1]\n}").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn control_file() {
        let c = parse_control(r#"{"segments": [{"duration": 1.5, "u": 0.2}, {"duration": 0.5, "u": -1}]}"#).unwrap();
        assert_eq!(c.segments.len(), 2);
        assert!(parse_control(r#"{"segments": [{"duration": 0, "u": 0.2}]}"#).is_err());
    }
}
