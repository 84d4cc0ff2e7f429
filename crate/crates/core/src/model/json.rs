use super::{validate_instance, HydroConfig, Instance, RiskSpec, ValidationReport};
use serde_path_to_error::Segment;
use std::path::Path;
use thiserror::Error;

/// Failure to load an instance file. Each variant maps to a distinct exit
/// category in the command-line runner.
#[derive(Debug, Error)]
pub enum InstanceFileError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema violation at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("invalid instance:\n{0}")]
    Validation(ValidationReport),
}

impl InstanceFileError {
    /// Stable machine-readable error class.
    pub fn code(&self) -> &'static str {
        match self {
            Self::Io { .. } => "io",
            Self::Parse { .. } => "parse",
            Self::Schema { .. } => "schema",
            Self::Validation(_) => "validation",
        }
    }
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{key}")),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Range checks on individual fields that serde's typing cannot express.
fn check_ranges(inst: &Instance) -> Result<(), InstanceFileError> {
    let schema = |pointer: String, message: String| Err(InstanceFileError::Schema { pointer, message });
    for (s, st) in inst.stages.iter().enumerate() {
        match &st.risk {
            RiskSpec::MeanAvar { alpha, beta } => {
                if !(*alpha > 0.0 && *alpha <= 1.0) {
                    return schema(format!("/stages/{s}/risk/alpha"), format!("alpha must lie in (0, 1], got {alpha}"));
                }
                if !(*beta >= 0.0 && *beta <= 1.0) {
                    return schema(format!("/stages/{s}/risk/beta"), format!("beta must lie in [0, 1], got {beta}"));
                }
            }
            RiskSpec::Polyhedral { vertices } => {
                for (k, q) in vertices.iter().enumerate() {
                    if let Some(i) = q.iter().position(|v| !(*v >= 0.0)) {
                        return schema(
                            format!("/stages/{s}/risk/vertices/{k}/{i}"),
                            format!("vertex weights must be nonnegative, got {}", q[i]),
                        );
                    }
                }
            }
        }
        if !(st.lipschitz >= 0.0) {
            return schema(format!("/stages/{s}/lipschitz"), format!("must be nonnegative, got {}", st.lipschitz));
        }
        for (name, v) in [("xbar", &st.xbar), ("ybar", &st.ybar)] {
            if let Some(i) = v.iter().position(|b| !(*b >= 0.0)) {
                return schema(format!("/stages/{s}/{name}/{i}"), format!("must be nonnegative, got {}", v[i]));
            }
        }
        for (j, r) in st.realizations.iter().enumerate() {
            if !(r.p >= 0.0 && r.p <= 1.0) {
                return schema(format!("/stages/{s}/realizations/{j}/p"), format!("must lie in [0, 1], got {}", r.p));
            }
        }
    }
    Ok(())
}

fn deserialize_with_pointer<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, InstanceFileError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = match serde_path_to_error::deserialize(&mut de) {
        Ok(v) => v,
        Err(e) => {
            let ptr = pointer(e.path());
            let inner = e.into_inner();
            return Err(if inner.is_syntax() || inner.is_eof() || inner.is_io() {
                InstanceFileError::Parse {
                    line: inner.line(),
                    column: inner.column(),
                    message: inner.to_string(),
                }
            } else {
                InstanceFileError::Schema {
                    pointer: ptr,
                    message: inner.to_string(),
                }
            });
        }
    };
    if let Err(e) = de.end() {
        return Err(InstanceFileError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        });
    }
    Ok(value)
}

fn read_file(path: &Path) -> Result<String, InstanceFileError> {
    std::fs::read_to_string(path).map_err(|source| InstanceFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses an instance from JSON text, then applies schema range checks and
/// full validation.
pub fn instance_from_json(text: &str) -> Result<Instance, InstanceFileError> {
    let inst: Instance = deserialize_with_pointer(text)?;
    check_ranges(&inst)?;
    let report = validate_instance(&inst);
    if !report.is_ok() {
        return Err(InstanceFileError::Validation(report));
    }
    Ok(inst)
}

pub fn parse_instance_file(path: impl AsRef<Path>) -> Result<Instance, InstanceFileError> {
    instance_from_json(&read_file(path.as_ref())?)
}

/// Reads a hydrothermal configuration. Semantic checks happen when the
/// instance is built.
pub fn parse_hydro_config_file(path: impl AsRef<Path>) -> Result<HydroConfig, InstanceFileError> {
    deserialize_with_pointer(&read_file(path.as_ref())?)
}

pub fn hydro_config_to_json(config: &HydroConfig) -> String {
    let mut s = serde_json::to_string_pretty(config).expect("config serialization cannot fail");
    s.push('\n');
    s
}

/// Canonical pretty-printed JSON. Field order is fixed, so
/// `instance_to_json(instance_from_json(s))` is stable under repetition.
pub fn instance_to_json(inst: &Instance) -> String {
    let mut s = serde_json::to_string_pretty(inst).expect("instance serialization cannot fail");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tiny_defer;

    #[test]
    fn round_trip_is_byte_identical() {
        let text = instance_to_json(&tiny_defer(0.5, 0.5));
        let back = instance_from_json(&text).unwrap();
        assert_eq!(back, tiny_defer(0.5, 0.5));
        assert_eq!(instance_to_json(&back), text);
    }

    #[test]
    fn alpha_out_of_range_names_pointer() {
        let text = instance_to_json(&tiny_defer(0.5, 0.5)).replacen("\"alpha\": 0.5", "\"alpha\": 1.5", 2);
        match instance_from_json(&text) {
            Err(InstanceFileError::Schema { pointer, .. }) => assert_eq!(pointer, "/stages/0/risk/alpha"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_type_names_pointer() {
        let text = instance_to_json(&tiny_defer(0.5, 0.5)).replacen("\"lipschitz\": 2.0", "\"lipschitz\": \"two\"", 1);
        match instance_from_json(&text) {
            Err(InstanceFileError::Schema { pointer, .. }) => assert_eq!(pointer, "/stages/1/lipschitz"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_text_is_parse_error() {
        let text = instance_to_json(&tiny_defer(0.5, 0.5));
        assert!(matches!(instance_from_json(&text[..40]), Err(InstanceFileError::Parse { .. })));
    }

    #[test]
    fn bad_probabilities_are_validation_error() {
        let mut inst = tiny_defer(0.5, 0.5);
        inst.stages[1].realizations[0].p = 0.6;
        inst.stages[1].realizations[1].p = 0.6;
        match instance_from_json(&instance_to_json(&inst)) {
            Err(InstanceFileError::Validation(rep)) => {
                assert!(rep.to_string().contains("probabilities sum to 1.2 at stage 2"))
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
