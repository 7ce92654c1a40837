//! Free-format MPS dump of a [`LinearProgram`].
//!
//! Rows are named `R<i>`, columns `C<j>`, the objective row `COST`. Range rows
//! are written as `L` rows with a `RANGES` entry. Numbers use Rust's shortest
//! round-trip formatting; range lower bounds come back as `rhs - range`.

use std::fmt::Write as _;

use super::{LinearProgram, LpError, Relation, Sense};

pub fn write_mps(lp: &LinearProgram, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME {name}");
    let _ = writeln!(out, "OBJSENSE");
    let _ = writeln!(
        out,
        "    {}",
        match lp.sense() {
            Sense::Minimize => "MIN",
            Sense::Maximize => "MAX",
        }
    );
    let _ = writeln!(out, "ROWS");
    let _ = writeln!(out, " N  COST");
    for (i, row) in lp.rows().iter().enumerate() {
        let tag = match row.relation {
            Relation::Le | Relation::Range(_) => "L",
            Relation::Ge => "G",
            Relation::Eq => "E",
        };
        let _ = writeln!(out, " {tag}  R{i}");
    }

    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.num_vars()];
    for (i, row) in lp.rows().iter().enumerate() {
        for &(j, a) in &row.coeffs {
            by_col[j].push((i, a));
        }
    }
    let _ = writeln!(out, "COLUMNS");
    for (j, entries) in by_col.iter().enumerate() {
        let c = lp.cost()[j];
        if c != 0.0 || entries.is_empty() {
            let _ = writeln!(out, "    C{j}  COST  {c:?}");
        }
        for &(i, a) in entries {
            let _ = writeln!(out, "    C{j}  R{i}  {a:?}");
        }
    }
    let _ = writeln!(out, "RHS");
    for (i, row) in lp.rows().iter().enumerate() {
        if row.rhs != 0.0 {
            let _ = writeln!(out, "    RHS  R{i}  {:?}", row.rhs);
        }
    }
    let ranges: Vec<(usize, f64)> = lp
        .rows()
        .iter()
        .enumerate()
        .filter_map(|(i, row)| match row.relation {
            Relation::Range(lo) => Some((i, row.rhs - lo)),
            _ => None,
        })
        .collect();
    if !ranges.is_empty() {
        let _ = writeln!(out, "RANGES");
        for (i, r) in ranges {
            let _ = writeln!(out, "    RNG  R{i}  {r:?}");
        }
    }
    let _ = writeln!(out, "BOUNDS");
    for j in 0..lp.num_vars() {
        let (lo, hi) = (lp.lower()[j], lp.upper()[j]);
        if lo == hi {
            let _ = writeln!(out, " FX BND  C{j}  {lo:?}");
            continue;
        }
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " FR BND  C{j}");
            }
            (false, true) => {
                let _ = writeln!(out, " MI BND  C{j}");
                let _ = writeln!(out, " UP BND  C{j}  {hi:?}");
            }
            (true, hi_finite) => {
                if lo != 0.0 {
                    let _ = writeln!(out, " LO BND  C{j}  {lo:?}");
                }
                if hi_finite {
                    let _ = writeln!(out, " UP BND  C{j}  {hi:?}");
                }
            }
        }
    }
    let _ = writeln!(out, "ENDATA");
    out
}

/// Reads back a dump produced by [`write_mps`].
pub fn read_mps(text: &str) -> Result<LinearProgram, LpError> {
    let bad = |line: usize, msg: &str| LpError::Invalid(format!("mps line {}: {msg}", line + 1));
    let index = |tok: &str, prefix: char, line: usize| -> Result<usize, LpError> {
        tok.strip_prefix(prefix)
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| bad(line, &format!("unexpected name {tok}")))
    };
    let num = |tok: &str, line: usize| -> Result<f64, LpError> {
        tok.parse::<f64>().map_err(|_| bad(line, &format!("bad number {tok}")))
    };

    let mut sense = Sense::Minimize;
    let mut kinds: Vec<char> = Vec::new();
    let mut cols: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut range: Vec<Option<f64>> = Vec::new();
    let mut lower: Vec<f64> = Vec::new();
    let mut upper: Vec<f64> = Vec::new();
    let mut section = "";

    let ensure_col = |cols: &mut Vec<(f64, Vec<(usize, f64)>)>, j: usize| {
        while cols.len() <= j {
            cols.push((0.0, Vec::new()));
        }
    };

    for (ln, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        if !raw.starts_with(' ') {
            let mut toks = raw.split_whitespace();
            section = match toks.next().unwrap_or("") {
                "NAME" => "NAME",
                "OBJSENSE" => "OBJSENSE",
                "ROWS" => "ROWS",
                "COLUMNS" => "COLUMNS",
                "RHS" => "RHS",
                "RANGES" => "RANGES",
                "BOUNDS" => "BOUNDS",
                "ENDATA" => break,
                other => return Err(bad(ln, &format!("unknown section {other}"))),
            };
            continue;
        }
        let toks: Vec<&str> = raw.split_whitespace().collect();
        match section {
            "OBJSENSE" => {
                sense = match toks[0] {
                    "MAX" => Sense::Maximize,
                    _ => Sense::Minimize,
                }
            }
            "ROWS" => {
                if toks[1] == "COST" {
                    continue;
                }
                let i = index(toks[1], 'R', ln)?;
                if i != kinds.len() {
                    return Err(bad(ln, "rows out of order"));
                }
                kinds.push(toks[0].chars().next().unwrap_or('L'));
                rhs.push(0.0);
                range.push(None);
            }
            "COLUMNS" => {
                if toks.len() != 3 {
                    return Err(bad(ln, "expected column, row, value"));
                }
                let j = index(toks[0], 'C', ln)?;
                ensure_col(&mut cols, j);
                let v = num(toks[2], ln)?;
                if toks[1] == "COST" {
                    cols[j].0 = v;
                } else {
                    let i = index(toks[1], 'R', ln)?;
                    cols[j].1.push((i, v));
                }
            }
            "RHS" => {
                let i = index(toks[1], 'R', ln)?;
                rhs[i] = num(toks[2], ln)?;
            }
            "RANGES" => {
                let i = index(toks[1], 'R', ln)?;
                range[i] = Some(num(toks[2], ln)?);
            }
            "BOUNDS" => {
                let j = index(toks[2], 'C', ln)?;
                ensure_col(&mut cols, j);
                while lower.len() < cols.len() {
                    lower.push(0.0);
                    upper.push(f64::INFINITY);
                }
                match toks[0] {
                    "FX" => {
                        let v = num(toks[3], ln)?;
                        lower[j] = v;
                        upper[j] = v;
                    }
                    "FR" => {
                        lower[j] = f64::NEG_INFINITY;
                        upper[j] = f64::INFINITY;
                    }
                    "MI" => lower[j] = f64::NEG_INFINITY,
                    "LO" => lower[j] = num(toks[3], ln)?,
                    "UP" => upper[j] = num(toks[3], ln)?,
                    other => return Err(bad(ln, &format!("unknown bound type {other}"))),
                }
            }
            _ => {}
        }
    }

    let n = cols.len();
    while lower.len() < n {
        lower.push(0.0);
        upper.push(f64::INFINITY);
    }
    let mut lp = LinearProgram::new(sense);
    let mut row_coeffs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); kinds.len()];
    for (j, (c, entries)) in cols.iter().enumerate() {
        lp.add_var(*c, lower[j], upper[j]);
        for &(i, a) in entries {
            row_coeffs
                .get_mut(i)
                .ok_or_else(|| LpError::Invalid(format!("unknown row R{i}")))?
                .push((j, a));
        }
    }
    for (i, coeffs) in row_coeffs.into_iter().enumerate() {
        let relation = match (kinds[i], range[i]) {
            ('L', Some(r)) => Relation::Range(rhs[i] - r.abs()),
            ('L', None) => Relation::Le,
            ('G', _) => Relation::Ge,
            ('E', _) => Relation::Eq,
            (k, _) => return Err(LpError::Invalid(format!("unknown row kind {k}"))),
        };
        lp.add_row(coeffs, relation, rhs[i]);
    }
    Ok(lp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_keeps_every_row_kind() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let a = lp.add_var(1.5, 0.0, 4.0);
        let b = lp.add_var(-2.0, f64::NEG_INFINITY, f64::INFINITY);
        let c = lp.add_var(0.25, -1.0, f64::INFINITY);
        lp.add_row(vec![(a, 1.0), (b, 1.0)], Relation::Le, 3.0);
        lp.add_row(vec![(b, 1.0), (c, -1.0)], Relation::Ge, -2.0);
        lp.add_row(vec![(a, 1.0), (c, 1.0)], Relation::Eq, 1.0);
        lp.add_row(vec![(a, 2.0), (b, 0.5)], Relation::Range(-1.0), 7.0);
        let text = write_mps(&lp, "rt");
        let back = read_mps(&text).unwrap();
        assert_eq!(back.sense(), lp.sense());
        assert_eq!(back.cost(), lp.cost());
        assert_eq!(back.lower(), lp.lower());
        assert_eq!(back.upper(), lp.upper());
        assert_eq!(back.rows(), lp.rows());
    }

    #[test]
    fn garbage_is_rejected() {
        assert!(read_mps("NAME x\nROWS\n Q bad\nENDATA\n").is_err());
    }
}
