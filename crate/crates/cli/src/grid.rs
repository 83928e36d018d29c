use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

/// Inclusive `start:stop:step` range. A bare number is a one-point grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    raw: String,
    points: Vec<f64>,
}

/// Grid points are rounded to this many decimals so `0.1 * 3` prints as 0.3.
const DECIMALS: i32 = 10;
const MAX_POINTS: usize = 1_000_000;

fn round(x: f64) -> f64 {
    let scale = 10f64.powi(DECIMALS);
    (x * scale).round() / scale
}

impl Grid {
    pub fn points(&self) -> &[f64] {
        &self.points
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |p: &str| -> Result<f64, String> {
            let v: f64 = p.parse().map_err(|_| format!("`{p}` is not a number"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("`{p}` is not finite"))
            }
        };
        let points = match parts.as_slice() {
            [one] => vec![num(one)?],
            [start, stop, step] => {
                let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
                if step <= 0.0 {
                    return Err(format!("step {step} must be positive"));
                }
                if stop < start {
                    return Err(format!("stop {stop} is below start {start}"));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                if count > MAX_POINTS {
                    return Err(format!("grid has {count} points (max {MAX_POINTS})"));
                }
                (0..count).map(|k| round(start + k as f64 * step)).collect()
            }
            _ => return Err(format!("`{s}` is not start:stop:step")),
        };
        Ok(Self {
            raw: s.to_string(),
            points,
        })
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

impl Serialize for Grid {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inclusive_and_rounded() {
        let g: Grid = "0.26:0.48:0.02".parse().unwrap();
        assert_eq!(g.points().len(), 12);
        assert_eq!(g.points()[1], 0.28);
        assert_eq!(*g.points().last().unwrap(), 0.48);
        let one: Grid = "0.3".parse().unwrap();
        assert_eq!(one.points(), &[0.3]);
    }

    #[test]
    fn rejects_bad_grids() {
        for bad in ["0.1:0.2", "0.3:0.1:0.1", "0.1:0.2:0", "a:b:c", "0.1:0.2:0.1:3", "nan"] {
            assert!(bad.parse::<Grid>().is_err(), "{bad}");
        }
    }
}
