//! Point sets accepted by `pvar fit`: plain `x,y` columns (with an optional
//! `p` label) or an increments table grouped by `p`.

use pvar_core::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub p: f64,
    pub points: Vec<(f64, f64)>,
    /// Inverse CI widths, when the input carries intervals.
    pub weights: Option<Vec<f64>>,
}

fn bad(reason: impl Into<String>) -> Error {
    Error::Config {
        key: "input".into(),
        reason: reason.into(),
    }
}

pub fn parse(text: &str, default_p: f64) -> Result<Vec<PointSet>, Error> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| bad("empty file"))?
        .split(',')
        .map(str::trim)
        .collect();
    let col = |name: &str| header.iter().position(|h| *h == name);
    let (xc, yc, pc, ci) = match (
        col("x"),
        col("y"),
        col("delta_tau"),
        col("mean_abs_incr_pow"),
    ) {
        (Some(x), Some(y), _, _) => (x, y, col("p"), None),
        (_, _, Some(x), Some(y)) => (
            x,
            y,
            Some(col("p").ok_or_else(|| bad("increments table without a `p` column"))?),
            col("ci_low").zip(col("ci_high")),
        ),
        _ => {
            return Err(bad(format!(
                "expected columns `x,y` or `p,delta_tau,mean_abs_incr_pow`, got `{}`",
                header.join(",")
            )))
        }
    };
    let mut sets: Vec<PointSet> = Vec::new();
    for (no, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let num = |c: usize| -> Result<f64, Error> {
            let s = fields
                .get(c)
                .ok_or_else(|| bad(format!("row {}: missing column `{}`", no + 2, header[c])))?;
            s.parse()
                .map_err(|_| bad(format!("row {}: `{s}` is not a number", no + 2)))
        };
        let p = match pc {
            Some(c) => num(c)?,
            None => default_p,
        };
        let point = (num(xc)?, num(yc)?);
        let weight = match ci {
            Some((lo, hi)) => {
                let w = num(hi)? - num(lo)?;
                Some(if w > 0.0 { 1.0 / w } else { 1.0 })
            }
            None => None,
        };
        let idx = match sets
            .iter()
            .position(|s| s.p == p || (s.p.is_nan() && p.is_nan()))
        {
            Some(i) => i,
            None => {
                sets.push(PointSet {
                    p,
                    points: Vec::new(),
                    weights: weight.map(|_| Vec::new()),
                });
                sets.len() - 1
            }
        };
        sets[idx].points.push(point);
        if let (Some(ws), Some(w)) = (sets[idx].weights.as_mut(), weight) {
            ws.push(w);
        }
    }
    if sets.is_empty() {
        return Err(bad("no data rows"));
    }
    Ok(sets)
}
