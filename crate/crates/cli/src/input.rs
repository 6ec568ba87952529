//! Parsing of list-valued flags and the order cap.

use std::fs;
use std::str::FromStr;

use walshlab::norms::NormSpec;
use walshlab::projection::Perturbation;
use walshlab::MAX_ORDER;

use crate::Failure;

pub const MAX_ORDER_ENV: &str = "WALSHLAB_MAX_ORDER";

/// Comma- or whitespace-separated values, inline or from a file given as `@path`.
pub fn list<T>(raw: &str, what: &str) -> Result<Vec<T>, Failure>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    let text = match raw.strip_prefix('@') {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| Failure::Io(format!("reading {what} from {path}: {e}")))?,
        None => raw.to_string(),
    };
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>()
                .map_err(|e| Failure::Usage(format!("bad {what} entry {t:?}: {e}")))
        })
        .collect()
}

pub fn spec(raw: &str) -> Result<NormSpec, Failure> {
    raw.parse()
        .map_err(|e| Failure::Usage(format!("bad --spec {raw:?}: {e}")))
}

/// `row:column:coeff` triples separated by commas.
pub fn perturbations(raw: &str) -> Result<Vec<Perturbation>, Failure> {
    list::<String>(raw, "perturbation")?
        .iter()
        .map(|item| {
            let parts: Vec<&str> = item.split(':').collect();
            let bad = || Failure::Usage(format!("perturbation {item:?} is not row:column:coeff"));
            if parts.len() != 3 {
                return Err(bad());
            }
            Ok(Perturbation {
                row: parts[0].parse().map_err(|_| bad())?,
                column: parts[1].parse().map_err(|_| bad())?,
                coeff: parts[2].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// The order cap: `WALSHLAB_MAX_ORDER` if set, never above the library maximum.
pub fn max_order() -> Result<u32, Failure> {
    match std::env::var(MAX_ORDER_ENV) {
        Err(_) => Ok(MAX_ORDER),
        Ok(raw) => {
            let cap: u32 = raw.trim().parse().map_err(|_| {
                Failure::Usage(format!("{MAX_ORDER_ENV}={raw:?} is not an integer"))
            })?;
            if cap > MAX_ORDER {
                return Err(Failure::Usage(format!(
                    "{MAX_ORDER_ENV}={cap} exceeds the supported maximum {MAX_ORDER}"
                )));
            }
            Ok(cap)
        }
    }
}

pub fn check_order(order: u32) -> Result<(), Failure> {
    let cap = max_order()?;
    if order > cap {
        return Err(Failure::Usage(format!(
            "order {order} exceeds the order cap {cap}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists() {
        assert_eq!(list::<u64>("1,3, 6", "indices").unwrap(), vec![1, 3, 6]);
        assert_eq!(list::<f64>("1 -2.5", "coeffs").unwrap(), vec![1.0, -2.5]);
        assert!(matches!(
            list::<u64>("1,x", "indices"),
            Err(Failure::Usage(_))
        ));
        assert!(matches!(
            list::<u64>("@/nonexistent/file", "indices"),
            Err(Failure::Io(_))
        ));
    }

    #[test]
    fn perturbation_triples() {
        let p = perturbations("1:3:2.0,2:5:-0.5").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!((p[1].row, p[1].column, p[1].coeff), (2, 5, -0.5));
        assert!(perturbations("1:3").is_err());
    }
}
