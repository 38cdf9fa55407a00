//! Runtime value operations for the action language.
//!
//! Values reuse the bundle's literal type [`CValue`]. Semantics mirror the
//! static type rules: `Int` widens to `Float` in mixed arithmetic and
//! comparison, `+` concatenates strings, logic is `Bool`-only. Division or
//! modulo by zero is a runtime fault that halts the instance.

use crate::compile::CValue;
use crate::model::{BinOp, ScalarType};

/// A runtime evaluation fault. Becomes an `error` trace event and halts
/// the faulting instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Fault(pub String);

pub type VResult = Result<CValue, Fault>;

fn fault<T>(msg: impl Into<String>) -> Result<T, Fault> {
    Err(Fault(msg.into()))
}

/// Render a value the way `print` and trace text fields show it.
pub fn render(v: &CValue) -> String {
    match v {
        CValue::Int(i) => i.to_string(),
        CValue::Float(f) => format!("{f:?}"),
        CValue::Bool(b) => b.to_string(),
        CValue::Str(s) => s.clone(),
    }
}

/// JSON form used in trace events: plain JSON scalars.
pub fn to_json(v: &CValue) -> serde_json::Value {
    match v {
        CValue::Int(i) => serde_json::Value::from(*i),
        CValue::Float(f) => serde_json::Value::from(*f),
        CValue::Bool(b) => serde_json::Value::from(*b),
        CValue::Str(s) => serde_json::Value::from(s.as_str()),
    }
}

pub fn truthy(v: &CValue) -> Result<bool, Fault> {
    match v {
        CValue::Bool(b) => Ok(*b),
        other => fault(format!("expected Bool, got {}", render(other))),
    }
}

fn as_f64(v: &CValue) -> Option<f64> {
    match v {
        CValue::Int(i) => Some(*i as f64),
        CValue::Float(f) => Some(*f),
        _ => None,
    }
}

pub fn neg(v: &CValue) -> VResult {
    match v {
        CValue::Int(i) => Ok(CValue::Int(-i)),
        CValue::Float(f) => Ok(CValue::Float(-f)),
        other => fault(format!("cannot negate {}", render(other))),
    }
}

pub fn not(v: &CValue) -> VResult {
    Ok(CValue::Bool(!truthy(v)?))
}

pub fn binary(op: BinOp, a: &CValue, b: &CValue) -> VResult {
    use BinOp::*;
    match op {
        Add => match (a, b) {
            (CValue::Str(x), CValue::Str(y)) => Ok(CValue::Str(format!("{x}{y}"))),
            (CValue::Int(x), CValue::Int(y)) => Ok(CValue::Int(x.wrapping_add(*y))),
            _ => num_op(a, b, "+", |x, y| Ok(x + y)),
        },
        Sub => match (a, b) {
            (CValue::Int(x), CValue::Int(y)) => Ok(CValue::Int(x.wrapping_sub(*y))),
            _ => num_op(a, b, "-", |x, y| Ok(x - y)),
        },
        Mul => match (a, b) {
            (CValue::Int(x), CValue::Int(y)) => Ok(CValue::Int(x.wrapping_mul(*y))),
            _ => num_op(a, b, "*", |x, y| Ok(x * y)),
        },
        Div => match (a, b) {
            (CValue::Int(_), CValue::Int(0)) => fault("division by zero"),
            (CValue::Int(x), CValue::Int(y)) => Ok(CValue::Int(x.wrapping_div(*y))),
            _ => num_op(a, b, "/", |x, y| {
                if y == 0.0 {
                    fault("division by zero")
                } else {
                    Ok(x / y)
                }
            }),
        },
        Mod => match (a, b) {
            (CValue::Int(_), CValue::Int(0)) => fault("modulo by zero"),
            (CValue::Int(x), CValue::Int(y)) => Ok(CValue::Int(x.wrapping_rem(*y))),
            _ => num_op(a, b, "%", |x, y| {
                if y == 0.0 {
                    fault("modulo by zero")
                } else {
                    Ok(x % y)
                }
            }),
        },
        Eq => Ok(CValue::Bool(val_eq(a, b)?)),
        Ne => Ok(CValue::Bool(!val_eq(a, b)?)),
        Lt | Le | Gt | Ge => {
            let (x, y) = match (as_f64(a), as_f64(b)) {
                (Some(x), Some(y)) => (x, y),
                _ => {
                    return fault(format!(
                        "comparison '{}' needs numeric operands",
                        op.symbol()
                    ))
                }
            };
            let r = match op {
                Lt => x < y,
                Le => x <= y,
                Gt => x > y,
                _ => x >= y,
            };
            Ok(CValue::Bool(r))
        }
        And => Ok(CValue::Bool(truthy(a)? && truthy(b)?)),
        Or => Ok(CValue::Bool(truthy(a)? || truthy(b)?)),
    }
}

fn val_eq(a: &CValue, b: &CValue) -> Result<bool, Fault> {
    match (a, b) {
        (CValue::Bool(x), CValue::Bool(y)) => Ok(x == y),
        (CValue::Str(x), CValue::Str(y)) => Ok(x == y),
        _ => match (as_f64(a), as_f64(b)) {
            (Some(x), Some(y)) => Ok(x == y),
            _ => fault(format!("cannot compare {} with {}", render(a), render(b))),
        },
    }
}

fn num_op(
    a: &CValue,
    b: &CValue,
    sym: &str,
    f: impl FnOnce(f64, f64) -> Result<f64, Fault>,
) -> VResult {
    match (as_f64(a), as_f64(b)) {
        (Some(x), Some(y)) => Ok(CValue::Float(f(x, y)?)),
        _ => fault(format!(
            "operator '{sym}' cannot combine {} and {}",
            render(a),
            render(b)
        )),
    }
}

/// Coerce a value into a property slot of the given declared type
/// (`Int` → `Float` widening only; used for assignment and message args).
pub fn coerce(v: CValue, ty: ScalarType) -> Result<CValue, Fault> {
    match (&v, ty) {
        (CValue::Int(_), ScalarType::Int | ScalarType::Timestamp)
        | (CValue::Float(_), ScalarType::Float)
        | (CValue::Bool(_), ScalarType::Bool)
        | (CValue::Str(_), ScalarType::String) => Ok(v),
        (CValue::Int(i), ScalarType::Float) => Ok(CValue::Float(*i as f64)),
        _ => fault(format!(
            "value {} does not fit type {}",
            render(&v),
            ty.keyword()
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn int_arithmetic_stays_int() {
        assert_eq!(
            binary(BinOp::Add, &CValue::Int(2), &CValue::Int(3)).unwrap(),
            CValue::Int(5)
        );
        assert_eq!(
            binary(BinOp::Div, &CValue::Int(7), &CValue::Int(2)).unwrap(),
            CValue::Int(3)
        );
    }

    #[test]
    fn mixed_arithmetic_widens() {
        assert_eq!(
            binary(BinOp::Mul, &CValue::Int(2), &CValue::Float(1.5)).unwrap(),
            CValue::Float(3.0)
        );
    }

    #[test]
    fn string_concat() {
        assert_eq!(
            binary(BinOp::Add, &CValue::Str("a".into()), &CValue::Str("b".into())).unwrap(),
            CValue::Str("ab".into())
        );
    }

    #[test]
    fn division_by_zero_faults() {
        assert!(binary(BinOp::Div, &CValue::Int(1), &CValue::Int(0)).is_err());
        assert!(binary(BinOp::Mod, &CValue::Float(1.0), &CValue::Float(0.0)).is_err());
    }

    #[test]
    fn comparisons_cross_numeric() {
        assert_eq!(
            binary(BinOp::Eq, &CValue::Int(2), &CValue::Float(2.0)).unwrap(),
            CValue::Bool(true)
        );
        assert_eq!(
            binary(BinOp::Lt, &CValue::Int(1), &CValue::Float(1.5)).unwrap(),
            CValue::Bool(true)
        );
    }
}
