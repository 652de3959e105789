//! CSV ingestion and trajectory output.
//!
//! Input format is `n,value` with 1-based contiguous indices. Trajectory
//! output is `n,x` for plain solves and `n,x,y,diff,R` for constructions;
//! the same file feeds `verify --seq-file`.

use std::fs;
use std::path::Path;

use asympair::seq::TailModel;
use asympair::Error;

pub fn parse_tail(text: &str) -> Result<TailModel, Error> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s == "unknown" {
        return Ok(TailModel::Unknown);
    }
    let bad = |msg: &str| Error::InvalidParameter(format!("tail `{text}`: {msg}"));
    let (head, rest) = s
        .split_once('(')
        .ok_or_else(|| bad("expected kind(params)"))?;
    let inner = rest.strip_suffix(')').ok_or_else(|| bad("missing `)`"))?;
    let nums: Vec<&str> = inner.split(',').collect();
    let f = |v: &str| -> Result<f64, Error> {
        v.parse().map_err(|_| bad(&format!("bad number `{v}`")))
    };
    match (head, nums.as_slice()) {
        ("geometric", [c, r]) => TailModel::geometric(f(c)?, f(r)?),
        ("geo", [r]) => TailModel::geometric(1.0, f(r)?),
        ("power", [c, s]) => TailModel::power(f(c)?, f(s)?),
        ("finite", [p]) => {
            let p: u64 = p.parse().map_err(|_| bad("finite(p) needs an integer"))?;
            TailModel::finite(p)
        }
        _ => Err(bad(
            "expected geometric(C,rho), power(C,s), finite(p) or unknown",
        )),
    }
}

fn read_rows(path: &Path) -> Result<Vec<Vec<String>>, Error> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::InvalidParameter(format!("cannot read {}: {e}", path.display()))
    })?;
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(|c| c.trim().to_string()).collect())
        .collect())
}

fn check_contiguous(rows: &[Vec<String>], path: &Path) -> Result<(), Error> {
    for (i, row) in rows.iter().enumerate() {
        let n: u64 = row[0].parse().map_err(|_| {
            Error::Parse {
                line: i as u32 + 2,
                col: 1,
                message: format!("bad index `{}` in {}", row[0], path.display()),
            }
        })?;
        if n != i as u64 + 1 {
            return Err(Error::Parse {
                line: i as u32 + 2,
                col: 1,
                message: format!("indices must be 1-based and contiguous; got {n} at row {}", i + 1),
            });
        }
    }
    Ok(())
}

/// Read an `n,value` file into its value column.
pub fn read_value_csv(path: &Path) -> Result<Vec<f64>, Error> {
    let rows = read_rows(path)?;
    let Some((header, data)) = rows.split_first() else {
        return Err(Error::InvalidParameter(format!("{} is empty", path.display())));
    };
    if header.len() < 2 || header[0] != "n" || header[1] != "value" {
        return Err(Error::Parse {
            line: 1,
            col: 1,
            message: format!("{} must start with the header `n,value`", path.display()),
        });
    }
    check_contiguous(data, path)?;
    data.iter()
        .enumerate()
        .map(|(i, row)| {
            row[1].parse().map_err(|_| Error::Parse {
                line: i as u32 + 2,
                col: 2,
                message: format!("bad value `{}`", row[1]),
            })
        })
        .collect()
}

/// Read the x and y columns of a trajectory file (`n,x,y[,...]`).
pub fn read_traj_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>), Error> {
    let rows = read_rows(path)?;
    let Some((header, data)) = rows.split_first() else {
        return Err(Error::InvalidParameter(format!("{} is empty", path.display())));
    };
    if header.len() < 3 || header[0] != "n" || header[1] != "x" || header[2] != "y" {
        return Err(Error::Parse {
            line: 1,
            col: 1,
            message: format!("{} must start with the header `n,x,y`", path.display()),
        });
    }
    check_contiguous(data, path)?;
    let mut xs = Vec::with_capacity(data.len());
    let mut ys = Vec::with_capacity(data.len());
    for (i, row) in data.iter().enumerate() {
        let parse = |v: &str, col: u32| -> Result<f64, Error> {
            v.parse().map_err(|_| Error::Parse {
                line: i as u32 + 2,
                col,
                message: format!("bad value `{v}`"),
            })
        };
        xs.push(parse(&row[1], 2)?);
        ys.push(parse(&row[2], 3)?);
    }
    Ok((xs, ys))
}

pub fn write_solve_csv(path: &Path, start: u64, xs: &[f64]) -> Result<(), Error> {
    let mut out = String::from("n,x\n");
    for (i, x) in xs.iter().enumerate() {
        out.push_str(&format!("{},{}\n", start + i as u64, x));
    }
    fs::write(path, out)
        .map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", path.display())))
}

pub fn write_construct_csv(
    path: &Path,
    xs: &[f64],
    ys: &[f64],
    radii: &[f64],
) -> Result<(), Error> {
    let mut out = String::from("n,x,y,diff,R\n");
    for i in 0..xs.len() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            i + 1,
            xs[i],
            ys[i],
            xs[i] - ys[i],
            radii[i]
        ));
    }
    fs::write(path, out)
        .map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", path.display())))
}
