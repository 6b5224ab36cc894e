//! Instance files: JSON with every number written as an exact fraction.
//!
//! ```json
//! {
//!   "format": "lmmf-instance",
//!   "version": 1,
//!   "agents":  [{"id": "a1", "endowment": "1"}],
//!   "objects": [{"id": "b1", "supply": "5/2"}],
//!   "demands": [{"agent": "a1", "object": "b1", "demand": "1/3"}]
//! }
//! ```
//!
//! Numbers may be JSON integers or strings holding an integer or `p/q`.
//! Serialization always writes strings. Demands are sparse; explicit zeros
//! are accepted and dropped.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use lmmf::{Instance, Rational};
use num_bigint::BigInt;
use num_traits::Zero;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value};

use crate::CliError;

pub const FORMAT_NAME: &str = "lmmf-instance";
pub const FORMAT_VERSION: u64 = 1;

/// Parses `"p"`, `"-p"` or `"p/q"` exactly.
pub fn parse_rational(text: &str) -> Result<Rational, String> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let parse = |s: &str| {
        BigInt::from_str(s).map_err(|_| format!("`{text}` is not an integer or a fraction p/q"))
    };
    let (num, den) = (parse(num)?, parse(den)?);
    if den.is_zero() {
        return Err(format!("`{text}` has a zero denominator"));
    }
    Ok(Rational::new(num, den))
}

/// `"p/q"` in lowest terms, or `"p"` for integers.
pub fn format_rational(value: &Rational) -> String {
    value.to_string()
}

/// A rational that serializes as a fraction string and deserializes from a
/// string or a JSON integer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Frac(pub Rational);

impl From<Rational> for Frac {
    fn from(value: Rational) -> Self {
        Frac(value)
    }
}

impl fmt::Display for Frac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Frac {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for Frac {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct FracVisitor;
        impl Visitor<'_> for FracVisitor {
            type Value = Frac;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an integer or a fraction string \"p/q\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Frac, E> {
                parse_rational(v).map(Frac).map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Frac, E> {
                Ok(Frac(Rational::from_integer(v.into())))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Frac, E> {
                Ok(Frac(Rational::from_integer(v.into())))
            }
        }
        deserializer.deserialize_any(FracVisitor)
    }
}

fn parse_error(path: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Parse {
        location: path.into(),
        message: message.into(),
    }
}

fn number(value: Option<&Value>, path: &str) -> Result<Rational, CliError> {
    match value {
        None => Err(parse_error(path, "missing")),
        Some(Value::String(s)) => parse_rational(s).map_err(|m| parse_error(path, m)),
        Some(Value::Number(n)) if n.is_i64() || n.is_u64() => {
            parse_rational(&n.to_string()).map_err(|m| parse_error(path, m))
        }
        Some(Value::Number(_)) => Err(parse_error(
            path,
            "floating-point numbers are not allowed; write an exact fraction string \"p/q\"",
        )),
        Some(other) => Err(parse_error(path, format!("expected a number, found {other}"))),
    }
}

fn string<'a>(value: Option<&'a Value>, path: &str) -> Result<&'a str, CliError> {
    match value {
        Some(Value::String(s)) => Ok(s),
        None => Err(parse_error(path, "missing")),
        Some(other) => Err(parse_error(path, format!("expected a string, found {other}"))),
    }
}

fn list<'a>(root: &'a Map<String, Value>, key: &str) -> Result<&'a [Value], CliError> {
    match root.get(key) {
        Some(Value::Array(items)) => Ok(items),
        None => Err(parse_error(key, "missing")),
        Some(_) => Err(parse_error(key, "expected a list")),
    }
}

fn record<'a>(value: &'a Value, path: &str) -> Result<&'a Map<String, Value>, CliError> {
    value
        .as_object()
        .ok_or_else(|| parse_error(path, "expected an object"))
}

/// Parses and validates an instance document.
pub fn parse_instance(text: &str) -> Result<Instance<Rational>, CliError> {
    let root: Value = serde_json::from_str(text).map_err(|e| {
        parse_error(format!("line {}, column {}", e.line(), e.column()), e.to_string())
    })?;
    let root = record(&root, "document")?;
    let format = string(root.get("format"), "format")?;
    if format != FORMAT_NAME {
        return Err(parse_error("format", format!("expected `{FORMAT_NAME}`, found `{format}`")));
    }
    match root.get("version").and_then(Value::as_u64) {
        Some(FORMAT_VERSION) => {}
        Some(v) => return Err(parse_error("version", format!("unsupported version {v}"))),
        None => return Err(parse_error("version", "missing or not an integer")),
    }

    let mut agents = Vec::new();
    for (i, item) in list(root, "agents")?.iter().enumerate() {
        let path = format!("agents[{i}]");
        let fields = record(item, &path)?;
        let id = string(fields.get("id"), &format!("{path}.id"))?;
        let e = number(fields.get("endowment"), &format!("{path}.endowment"))?;
        agents.push((id.to_string(), e));
    }
    let mut objects = Vec::new();
    for (i, item) in list(root, "objects")?.iter().enumerate() {
        let path = format!("objects[{i}]");
        let fields = record(item, &path)?;
        let id = string(fields.get("id"), &format!("{path}.id"))?;
        let s = number(fields.get("supply"), &format!("{path}.supply"))?;
        objects.push((id.to_string(), s));
    }

    let mut instance = Instance::new(agents, objects);
    let mut seen = std::collections::HashSet::new();
    for (i, item) in list(root, "demands")?.iter().enumerate() {
        let path = format!("demands[{i}]");
        let fields = record(item, &path)?;
        let agent = string(fields.get("agent"), &format!("{path}.agent"))?;
        let object = string(fields.get("object"), &format!("{path}.object"))?;
        let d = number(fields.get("demand"), &format!("{path}.demand"))?;
        let a = instance
            .agent_index(agent)
            .ok_or_else(|| parse_error(format!("{path}.agent"), format!("unknown agent `{agent}`")))?;
        let b = instance
            .object_index(object)
            .ok_or_else(|| parse_error(format!("{path}.object"), format!("unknown object `{object}`")))?;
        if !seen.insert((a, b)) {
            return Err(parse_error(path, format!("duplicate demand for ({agent}, {object})")));
        }
        instance.set_demand(a, b, d);
    }
    let report = instance.validate();
    if !report.is_valid() {
        return Err(CliError::Invalid(
            report
                .violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; "),
        ));
    }
    Ok(instance)
}

/// Pretty JSON with agents, objects and demands in instance order.
pub fn serialize_instance(instance: &Instance<Rational>) -> String {
    let agents: Vec<Value> = (0..instance.num_agents())
        .map(|a| json!({"id": instance.agent_id(a), "endowment": format_rational(instance.endowment(a))}))
        .collect();
    let objects: Vec<Value> = (0..instance.num_objects())
        .map(|b| json!({"id": instance.object_id(b), "supply": format_rational(instance.supply(b))}))
        .collect();
    let demands: Vec<Value> = (0..instance.num_agents())
        .flat_map(|a| {
            instance.demand_row(a).iter().map(move |(b, d)| {
                json!({
                    "agent": instance.agent_id(a),
                    "object": instance.object_id(*b),
                    "demand": format_rational(d),
                })
            })
        })
        .collect();
    let doc = json!({
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "agents": agents,
        "objects": objects,
        "demands": demands,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("JSON values always serialize");
    text.push('\n');
    text
}

pub fn read_instance(path: &Path) -> Result<Instance<Rational>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_instance(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lmmf::families;

    #[test]
    fn fractions() {
        assert_eq!(parse_rational("3/2").unwrap(), Rational::new(3.into(), 2.into()));
        assert_eq!(parse_rational("6/4").unwrap(), Rational::new(3.into(), 2.into()));
        assert_eq!(parse_rational("-2").unwrap(), Rational::from_integer((-2).into()));
        assert!(parse_rational("1/0").unwrap_err().contains("zero denominator"));
        assert!(parse_rational("0.5").is_err());
        assert!(parse_rational("").is_err());
        assert_eq!(format_rational(&parse_rational("4/2").unwrap()), "2");
    }

    #[test]
    fn round_trip_is_exact() {
        for inst in [
            families::half_sharing::<Rational>(3),
            families::maximin_si_manipulation(),
            families::random(&Default::default(), 11),
        ] {
            let text = serialize_instance(&inst);
            assert_eq!(parse_instance(&text).unwrap(), inst);
        }
    }

    #[test]
    fn zero_denominator_names_field() {
        let text = r#"{"format":"lmmf-instance","version":1,
            "agents":[{"id":"a1","endowment":"1/0"}],"objects":[],"demands":[]}"#;
        match parse_instance(text).unwrap_err() {
            CliError::Parse { location, .. } => assert_eq!(location, "agents[0].endowment"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_ids_and_floats_rejected() {
        let text = r#"{"format":"lmmf-instance","version":1,
            "agents":[{"id":"a1","endowment":1}],"objects":[{"id":"b1","supply":2}],
            "demands":[{"agent":"a1","object":"b9","demand":"1"}]}"#;
        let err = parse_instance(text).unwrap_err();
        assert!(err.to_string().contains("demands[0].object"), "{err}");
        let text = r#"{"format":"lmmf-instance","version":1,
            "agents":[{"id":"a1","endowment":0.5}],"objects":[],"demands":[]}"#;
        assert!(parse_instance(text).unwrap_err().to_string().contains("agents[0].endowment"));
    }

    #[test]
    fn integers_and_explicit_zeros_accepted() {
        let text = r#"{"format":"lmmf-instance","version":1,
            "agents":[{"id":"a1","endowment":1}],"objects":[{"id":"b1","supply":"2"}],
            "demands":[{"agent":"a1","object":"b1","demand":0}]}"#;
        let inst = parse_instance(text).unwrap();
        assert!(inst.demand_row(0).is_empty());
    }

    #[test]
    fn invalid_values_reported() {
        let text = r#"{"format":"lmmf-instance","version":1,
            "agents":[{"id":"a1","endowment":"0"}],"objects":[],"demands":[]}"#;
        let err = parse_instance(text).unwrap_err();
        assert!(matches!(err, CliError::Invalid(_)));
        assert!(err.to_string().contains("strictly positive"));
    }

    #[test]
    fn frac_serde() {
        let f: Vec<Frac> = serde_json::from_str(r#"["3/2", 4]"#).unwrap();
        assert_eq!(serde_json::to_string(&f).unwrap(), r#"["3/2","4"]"#);
    }
}
