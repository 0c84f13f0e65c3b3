//! Sparse SDPA text interchange (".dat-s").
//!
//! The exported problem must be in real symmetric cone form (run
//! [`crate::embed_complex`] first): PSD blocks only, no free scalars. Our
//! maximize form sits in the file's dual slot, the usual convention for
//! block-form SDP collections:
//!
//! ```text
//! maximize <F_0, Y>   subject to   <F_i, Y> = c_i,   Y >= 0
//! ```
//!
//! File layout, in order: `m` (number of constraints), `nblocks`, the block
//! structure line, the vector `c_1 .. c_m`, then one quintuple
//! `matno blkno i j value` per nonzero upper-triangle entry, where `matno` 0
//! is the objective matrix F_0 and `matno` k >= 1 is the k-th constraint
//! matrix. Indices are 1-based. Lines starting with `"` or `*` are comments.
//! Values are written with Rust's shortest round-trip float formatting, so a
//! write/read cycle reproduces every coefficient exactly.

use std::fs;
use std::path::Path;

use crate::SdpError;
use crate::problem::{LinearExpr, SdpProblem, c64};

pub fn export_sdpa(problem: &SdpProblem, path: &Path) -> Result<(), SdpError> {
    problem.validate()?;
    if !problem.is_real() {
        return Err(SdpError::Malformed(
            "SDPA export requires a real problem; apply embed_complex first".into(),
        ));
    }
    if !problem.free_scalars.is_empty() {
        return Err(SdpError::Malformed(
            "SDPA export requires pure cone form; apply embed_complex to lower free scalars".into(),
        ));
    }
    let m = problem.num_constraints();
    let mut out = String::new();
    out.push_str(&format!("{m}\n"));
    out.push_str(&format!("{}\n", problem.blocks.len()));
    let structure: Vec<String> = problem.blocks.iter().map(|b| b.dim.to_string()).collect();
    out.push_str(&format!("{}\n", structure.join(" ")));
    let rhs: Vec<String> = problem
        .constraints
        .iter()
        .map(|c| format!("{}", c.rhs))
        .collect();
    out.push_str(&format!("{}\n", rhs.join(" ")));

    let emit = |matno: usize, expr: &LinearExpr, out: &mut String| {
        let mut entries: Vec<(usize, usize, usize, f64)> = Vec::new();
        for (b, map) in &expr.blocks {
            for &(i, j, c) in map {
                if c.re != 0.0 {
                    entries.push((*b + 1, i + 1, j + 1, c.re));
                }
            }
        }
        entries.sort_by_key(|&(b, i, j, _)| (b, i, j));
        for (b, i, j, v) in entries {
            out.push_str(&format!("{matno} {b} {i} {j} {v}\n"));
        }
    };
    emit(0, &problem.objective, &mut out);
    for (k, con) in problem.constraints.iter().enumerate() {
        emit(k + 1, &con.expr, &mut out);
    }
    fs::write(path, out).map_err(|e| SdpError::Io(format!("{}: {e}", path.display())))
}

pub fn import_sdpa(path: &Path) -> Result<SdpProblem, SdpError> {
    let text =
        fs::read_to_string(path).map_err(|e| SdpError::Io(format!("{}: {e}", path.display())))?;
    let mut problem = SdpProblem::new();
    let parse_err = |line_no: usize, msg: &str| -> SdpError {
        SdpError::Parse {
            line: line_no,
            message: msg.to_string(),
        }
    };

    // logical lines: skip comments and blanks, keep line numbers for errors
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('"') && !l.starts_with('*'));

    let (ln_m, m_line) = lines.next().ok_or(parse_err(0, "missing constraint count"))?;
    let m: usize = first_token(m_line)
        .parse()
        .map_err(|_| parse_err(ln_m, "invalid constraint count"))?;
    let (ln_nb, nb_line) = lines.next().ok_or(parse_err(ln_m, "missing block count"))?;
    let nblocks: usize = first_token(nb_line)
        .parse()
        .map_err(|_| parse_err(ln_nb, "invalid block count"))?;
    let (ln_bs, bs_line) = lines.next().ok_or(parse_err(ln_nb, "missing block structure"))?;
    let sizes: Vec<i64> = bs_line
        .split(|c: char| c.is_whitespace() || c == ',' || c == '(' || c == ')' || c == '{' || c == '}')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<i64>().map_err(|_| parse_err(ln_bs, "invalid block size")))
        .collect::<Result<_, _>>()?;
    if sizes.len() != nblocks {
        return Err(parse_err(ln_bs, "block structure length does not match block count"));
    }
    // diagonal blocks (negative sizes) become runs of 1x1 blocks so the cone
    // semantics are preserved exactly
    let mut entry_block: Vec<usize> = Vec::new(); // file block -> first internal block
    let mut diag: Vec<bool> = Vec::new();
    for (k, &s) in sizes.iter().enumerate() {
        entry_block.push(problem.blocks.len());
        if s >= 0 {
            problem.add_block(&format!("block_{}", k + 1), s as usize);
            diag.push(false);
        } else {
            for d in 0..(-s) as usize {
                problem.add_block(&format!("block_{}_d{}", k + 1, d + 1), 1);
            }
            diag.push(true);
        }
    }
    // blank lines are filtered, so an m = 0 file carries no rhs line at all
    let rhs: Vec<f64> = if m == 0 {
        Vec::new()
    } else {
        let (ln_c, c_line) =
            lines.next().ok_or(parse_err(ln_bs, "missing right-hand-side vector"))?;
        let v: Vec<f64> = c_line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|_| parse_err(ln_c, "invalid right-hand side")))
            .collect::<Result<_, _>>()?;
        if v.len() != m {
            return Err(parse_err(ln_c, "right-hand-side length does not match constraint count"));
        }
        v
    };

    let mut objective = LinearExpr::default();
    let mut con_exprs: Vec<LinearExpr> = (0..m).map(|_| LinearExpr::default()).collect();
    for (ln, line) in lines {
        let toks: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .collect();
        if toks.len() != 5 {
            return Err(parse_err(ln, "expected `matno blkno i j value`"));
        }
        let matno: usize = toks[0].parse().map_err(|_| parse_err(ln, "invalid matrix number"))?;
        let blkno: usize = toks[1].parse().map_err(|_| parse_err(ln, "invalid block number"))?;
        let i: usize = toks[2].parse().map_err(|_| parse_err(ln, "invalid row index"))?;
        let j: usize = toks[3].parse().map_err(|_| parse_err(ln, "invalid column index"))?;
        let v: f64 = toks[4].parse().map_err(|_| parse_err(ln, "invalid value"))?;
        if matno > m || blkno == 0 || blkno > nblocks || i == 0 || j == 0 {
            return Err(parse_err(ln, "index out of range"));
        }
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let (block, ei, ej) = if diag[blkno - 1] {
            if i != j {
                return Err(parse_err(ln, "off-diagonal entry in a diagonal block"));
            }
            (entry_block[blkno - 1] + i - 1, 0, 0)
        } else {
            (entry_block[blkno - 1], i - 1, j - 1)
        };
        if ej >= problem.blocks[block].dim {
            return Err(parse_err(ln, "entry outside block dimension"));
        }
        let target = if matno == 0 {
            &mut objective
        } else {
            &mut con_exprs[matno - 1]
        };
        target.add_block_entry(block, ei, ej, c64(v));
    }
    problem.objective = objective;
    for (k, expr) in con_exprs.into_iter().enumerate() {
        problem.add_constraint(&format!("row_{}", k + 1), expr, rhs[k]);
    }
    problem.validate()?;
    Ok(problem)
}

fn first_token(line: &str) -> &str {
    line.split_whitespace().next().unwrap_or("")
}
