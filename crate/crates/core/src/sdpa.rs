//! SDPA sparse format (`*.dat-s`) export/import and an external-solver
//! bridge for cross-validation.
//!
//! The exported file encodes the problem in the standard SDPA pairing
//!
//! ```text
//! min c^T x   s.t.   X = sum_i x_i F_i - F_0  >= 0  (block diagonal)
//! ```
//!
//! with our scalar variables as `x`, one entry line `matno block row col
//! value` per coefficient (1-indexed, upper triangle). PSD blocks map
//! directly; each linear equality `a . y = r` becomes a pair of adjacent rows
//! `+a - r` / `-a + r` in one trailing diagonal block, which any SDPA reader
//! accepts and which this reader folds back into equalities, giving a
//! bit-exact round trip (floats are printed in shortest-roundtrip form).

use std::io::Write as _;
use std::path::Path;
use std::process::Command;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::sdp::svec::{svec_from, svec_index, svec_len, SQRT2};
use crate::sdp::{
    BlockEntry, FarkasRay, FeasibleWitness, LinearEquality, PsdBlockMap, Residuals, SdpOutcome,
    SdpProblem, SdpStatus,
};

/// Render a problem in SDPA sparse format.
pub fn write_sdpa(problem: &SdpProblem) -> String {
    let mut out = String::new();
    out.push_str("* homsieve moment relaxation, SDPA sparse export\n");
    let num_eq = problem.equalities.len();
    let nblocks = problem.blocks.len() + usize::from(num_eq > 0);
    out.push_str(&format!("{}\n", problem.num_vars));
    out.push_str(&format!("{nblocks}\n"));
    let mut sizes: Vec<String> = problem.blocks.iter().map(|b| b.dim.to_string()).collect();
    if num_eq > 0 {
        sizes.push(format!("-{}", 2 * num_eq));
    }
    out.push_str(&sizes.join(" "));
    out.push('\n');
    let objective: Vec<String> = if problem.objective.is_empty() {
        vec!["0".to_string(); problem.num_vars]
    } else {
        problem.objective.iter().map(|v| format!("{v}")).collect()
    };
    out.push_str(&objective.join(" "));
    out.push('\n');

    for (bi, block) in problem.blocks.iter().enumerate() {
        for e in &block.entries {
            out.push_str(&format!(
                "{} {} {} {} {}\n",
                e.var + 1,
                bi + 1,
                e.row + 1,
                e.col + 1,
                e.coef
            ));
        }
    }
    if num_eq > 0 {
        let eq_block = problem.blocks.len() + 1;
        for (k, eq) in problem.equalities.iter().enumerate() {
            let plus_row = 2 * k + 1;
            let minus_row = 2 * k + 2;
            for &(var, coef) in &eq.terms {
                out.push_str(&format!(
                    "{} {eq_block} {plus_row} {plus_row} {}\n",
                    var + 1,
                    coef
                ));
                out.push_str(&format!(
                    "{} {eq_block} {minus_row} {minus_row} {}\n",
                    var + 1,
                    -coef
                ));
            }
            if eq.rhs != 0.0 {
                out.push_str(&format!("0 {eq_block} {plus_row} {plus_row} {}\n", eq.rhs));
                out.push_str(&format!(
                    "0 {eq_block} {minus_row} {minus_row} {}\n",
                    -eq.rhs
                ));
            }
        }
    }
    out
}

pub fn write_sdpa_file(problem: &SdpProblem, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(write_sdpa(problem).as_bytes())?;
    Ok(())
}

struct RawEntry {
    mat: usize,
    block: usize,
    row: usize,
    col: usize,
    value: f64,
    line: usize,
}

/// Parse a problem from SDPA sparse format. Only the subset produced by
/// [`write_sdpa`] is accepted: homogeneous PSD blocks and one optional
/// trailing diagonal block whose rows pair up as exact +/- equality images.
pub fn read_sdpa(text: &str) -> Result<SdpProblem> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('*') && !l.starts_with('"'));

    let mut next = |what: &str| -> Result<(usize, &str)> {
        lines.next().ok_or_else(|| Error::SdpaParse {
            line: 0,
            msg: format!("missing {what}"),
        })
    };

    let (line_no, m_line) = next("variable count")?;
    let num_vars: usize = m_line
        .split_whitespace()
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::SdpaParse {
            line: line_no,
            msg: "bad variable count".into(),
        })?;

    let (line_no, nb_line) = next("block count")?;
    let nblocks: usize = nb_line
        .split_whitespace()
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::SdpaParse {
            line: line_no,
            msg: "bad block count".into(),
        })?;

    let (line_no, bs_line) = next("block structure")?;
    let bs_clean = bs_line.replace(['(', ')', '{', '}', ','], " ");
    let sizes: Vec<i64> = bs_clean
        .split_whitespace()
        .map(|t| t.parse::<i64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::SdpaParse {
            line: line_no,
            msg: format!("bad block structure: {e}"),
        })?;
    if sizes.len() != nblocks {
        return Err(Error::SdpaParse {
            line: line_no,
            msg: format!("expected {nblocks} block sizes, found {}", sizes.len()),
        });
    }

    let (line_no, c_line) = next("objective vector")?;
    let c_clean = c_line.replace(['(', ')', '{', '}', ','], " ");
    let objective: Vec<f64> = c_clean
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::SdpaParse {
            line: line_no,
            msg: format!("bad objective: {e}"),
        })?;
    if objective.len() != num_vars {
        return Err(Error::SdpaParse {
            line: line_no,
            msg: format!(
                "expected {num_vars} objective values, found {}",
                objective.len()
            ),
        });
    }

    let mut entries: Vec<RawEntry> = Vec::new();
    for (line, text) in lines {
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::SdpaParse {
                line,
                msg: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let parse_idx = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::SdpaParse {
                line,
                msg: format!("bad index `{s}`"),
            })
        };
        entries.push(RawEntry {
            mat: parse_idx(fields[0])?,
            block: parse_idx(fields[1])?,
            row: parse_idx(fields[2])?,
            col: parse_idx(fields[3])?,
            value: fields[4].parse().map_err(|_| Error::SdpaParse {
                line,
                msg: format!("bad value `{}`", fields[4]),
            })?,
            line,
        });
    }

    // The trailing diagonal block, if any, holds the equality encoding.
    let eq_block_index = match sizes.last() {
        Some(&s) if s < 0 => Some(nblocks - 1),
        _ => None,
    };
    for (i, &s) in sizes.iter().enumerate() {
        if s < 0 && Some(i) != eq_block_index {
            return Err(Error::SdpaParse {
                line: 0,
                msg: format!(
                    "diagonal block {} is only supported in the trailing position",
                    i + 1
                ),
            });
        }
        if s == 0 {
            return Err(Error::SdpaParse {
                line: 0,
                msg: format!("block {} has size 0", i + 1),
            });
        }
    }

    let mut blocks: Vec<PsdBlockMap> = sizes
        .iter()
        .enumerate()
        .filter(|&(i, &s)| s > 0 && Some(i) != eq_block_index)
        .map(|(i, &s)| PsdBlockMap {
            label: format!("block{}", i + 1),
            dim: s as usize,
            entries: Vec::new(),
        })
        .collect();

    let eq_rows = eq_block_index.map(|i| (-sizes[i]) as usize).unwrap_or(0);
    if eq_rows % 2 != 0 {
        return Err(Error::SdpaParse {
            line: 0,
            msg: format!("equality block has odd size {eq_rows}"),
        });
    }
    // Per diagonal row: variable coefficients and the constant from F_0.
    let mut rows: Vec<(std::collections::BTreeMap<usize, f64>, f64)> =
        vec![(Default::default(), 0.0); eq_rows];

    for e in entries {
        if e.block == 0 || e.block > nblocks {
            return Err(Error::SdpaParse {
                line: e.line,
                msg: format!("block {} out of range", e.block),
            });
        }
        if e.mat > num_vars {
            return Err(Error::SdpaParse {
                line: e.line,
                msg: format!("matrix index {} out of range", e.mat),
            });
        }
        if Some(e.block - 1) == eq_block_index {
            if e.row != e.col {
                return Err(Error::SdpaParse {
                    line: e.line,
                    msg: "off-diagonal entry in a diagonal block".into(),
                });
            }
            if e.row == 0 || e.row > eq_rows {
                return Err(Error::SdpaParse {
                    line: e.line,
                    msg: format!("row {} out of range", e.row),
                });
            }
            let slot = &mut rows[e.row - 1];
            if e.mat == 0 {
                // F_0 enters with a minus sign: X = sum x_i F_i - F_0, so the
                // stored value already is the equality right-hand side.
                slot.1 = e.value;
            } else {
                *slot.0.entry(e.mat - 1).or_insert(0.0) += e.value;
            }
        } else {
            if e.mat == 0 {
                return Err(Error::SdpaParse {
                    line: e.line,
                    msg: "constant (F_0) entries are only supported in the equality block".into(),
                });
            }
            if e.row > e.col {
                return Err(Error::SdpaParse {
                    line: e.line,
                    msg: "entries must lie in the upper triangle".into(),
                });
            }
            let bi = sizes[..e.block - 1].iter().filter(|&&s| s > 0).count();
            let dim = blocks[bi].dim;
            if e.col > dim {
                return Err(Error::SdpaParse {
                    line: e.line,
                    msg: format!("entry ({}, {}) outside block of dim {dim}", e.row, e.col),
                });
            }
            blocks[bi].entries.push(BlockEntry {
                row: e.row - 1,
                col: e.col - 1,
                var: e.mat - 1,
                coef: e.value,
            });
        }
    }

    // Fold the paired diagonal rows back into equalities.
    let mut equalities = Vec::with_capacity(eq_rows / 2);
    for k in 0..eq_rows / 2 {
        let (plus, plus_rhs) = &rows[2 * k];
        let (minus, minus_rhs) = &rows[2 * k + 1];
        let paired = plus.len() == minus.len()
            && plus.iter().all(|(v, c)| minus.get(v) == Some(&-c))
            && *minus_rhs == -*plus_rhs;
        if !paired {
            return Err(Error::SdpaParse {
                line: 0,
                msg: format!(
                    "diagonal rows {} and {} do not pair into an equality",
                    2 * k + 1,
                    2 * k + 2
                ),
            });
        }
        equalities.push(LinearEquality {
            terms: plus.iter().map(|(&v, &c)| (v, c)).collect(),
            rhs: *plus_rhs,
        });
    }

    let objective = if objective.iter().all(|&v| v == 0.0) {
        vec![]
    } else {
        objective
    };
    let problem = SdpProblem {
        num_vars,
        blocks,
        equalities,
        objective,
    };
    problem.validate()?;
    Ok(problem)
}

pub fn read_sdpa_file(path: &Path) -> Result<SdpProblem> {
    let text = std::fs::read_to_string(path)?;
    read_sdpa(&text)
}

/// Solve through an external CSDP-compatible binary (`command in.dat-s
/// out.sol`; exit 0 = solved, 2 = the variable-side problem is infeasible).
/// Used for cross-validation only.
pub fn solve_via_export(problem: &SdpProblem, command: &str) -> Result<SdpOutcome> {
    problem.validate()?;
    let dir = std::env::temp_dir().join(format!(
        "homsieve-sdpa-{}-{}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or(0)
    ));
    std::fs::create_dir_all(&dir)?;
    let problem_path = dir.join("problem.dat-s");
    let solution_path = dir.join("problem.sol");
    write_sdpa_file(problem, &problem_path)?;

    let output = Command::new(command)
        .arg(&problem_path)
        .arg(&solution_path)
        .output()
        .map_err(|e| Error::ExternalSolver(format!("failed to launch `{command}`: {e}")))?;
    let code = output.status.code().unwrap_or(-1);

    let nan = Residuals {
        primal: f64::NAN,
        dual: f64::NAN,
        gap: f64::NAN,
    };
    let outcome = match code {
        0 => {
            let witness = parse_solution_witness(&solution_path, problem)?;
            SdpOutcome {
                status: SdpStatus::Feasible(witness),
                iterations: 0,
                residuals: nan,
            }
        }
        2 => {
            let ray = parse_solution_ray(&solution_path, problem)?;
            SdpOutcome {
                status: SdpStatus::Infeasible(ray),
                iterations: 0,
                residuals: nan,
            }
        }
        1 => SdpOutcome {
            status: SdpStatus::Unknown {
                reason: "external solver reported the constraint side infeasible".into(),
            },
            iterations: 0,
            residuals: nan,
        },
        other => {
            let stderr = String::from_utf8_lossy(&output.stderr);
            return Err(Error::ExternalSolver(format!(
                "`{command}` exited with code {other}: {}",
                stderr.trim()
            )));
        }
    };
    let _ = std::fs::remove_dir_all(&dir);
    Ok(outcome)
}

/// First line of a CSDP-style solution file: the variable vector.
fn parse_solution_vector(path: &Path, num_vars: usize) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::ExternalSolver(format!("cannot read solution file: {e}")))?;
    let first = text
        .lines()
        .next()
        .ok_or_else(|| Error::ExternalSolver("empty solution file".into()))?;
    let y: Vec<f64> = first
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::ExternalSolver(format!("bad solution vector: {e}")))?;
    if y.len() != num_vars {
        return Err(Error::ExternalSolver(format!(
            "solution vector has {} entries, expected {num_vars}",
            y.len()
        )));
    }
    Ok(y)
}

fn parse_solution_witness(path: &Path, problem: &SdpProblem) -> Result<FeasibleWitness> {
    let y = parse_solution_vector(path, problem.num_vars)?;
    let mut slacks = Vec::with_capacity(problem.blocks.len());
    for b in &problem.blocks {
        let mat = b.evaluate(&y);
        let mut packed = vec![0.0; svec_len(b.dim)];
        svec_from(&mat, &mut packed);
        slacks.push(packed);
    }
    Ok(FeasibleWitness {
        y,
        block_slacks: slacks,
    })
}

/// Certificate entries (matrix 2, the constraint-side matrix) from a solution
/// file written for an infeasible instance.
fn parse_solution_ray(path: &Path, problem: &SdpProblem) -> Result<FarkasRay> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::ExternalSolver(format!("cannot read solution file: {e}")))?;
    let num_psd = problem.blocks.len();
    let num_eq = problem.equalities.len();
    let mut grams: Vec<Mat> = problem
        .blocks
        .iter()
        .map(|b| Mat::zeros(b.dim, b.dim))
        .collect();
    let mut diag = vec![0.0f64; 2 * num_eq];
    for (idx, line) in text.lines().enumerate().skip(1) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(bad_sol(idx, line));
        }
        let mat: usize = fields[0].parse().map_err(|_| bad_sol(idx, line))?;
        if mat != 2 {
            continue;
        }
        let block: usize = fields[1].parse().map_err(|_| bad_sol(idx, line))?;
        let row: usize = fields[2].parse().map_err(|_| bad_sol(idx, line))?;
        let col: usize = fields[3].parse().map_err(|_| bad_sol(idx, line))?;
        let value: f64 = fields[4].parse().map_err(|_| bad_sol(idx, line))?;
        if block == 0 || row == 0 || col == 0 {
            return Err(bad_sol(idx, line));
        }
        if block <= num_psd {
            let g = &mut grams[block - 1];
            if row > g.rows() || col > g.rows() {
                return Err(bad_sol(idx, line));
            }
            g[(row - 1, col - 1)] = value;
            g[(col - 1, row - 1)] = value;
        } else if block == num_psd + 1 && num_eq > 0 && row == col && row <= 2 * num_eq {
            diag[row - 1] = value;
        } else {
            return Err(bad_sol(idx, line));
        }
    }

    let eq_multipliers: Vec<f64> = (0..num_eq).map(|k| diag[2 * k] - diag[2 * k + 1]).collect();
    let block_duals: Vec<Vec<f64>> = grams
        .iter()
        .map(|g| {
            let mut packed = vec![0.0; svec_len(g.rows())];
            svec_from(g, &mut packed);
            packed
        })
        .collect();

    let margin: f64 = problem
        .equalities
        .iter()
        .zip(&eq_multipliers)
        .map(|(eq, l)| eq.rhs * l)
        .sum();
    if margin <= 0.0 || margin.is_nan() {
        return Err(Error::ExternalSolver(format!(
            "certificate margin {margin:.3e} is not positive"
        )));
    }
    // Normalize to margin 1 and measure the ray residual.
    let scale = 1.0 / margin;
    let eq_multipliers: Vec<f64> = eq_multipliers.iter().map(|v| v * scale).collect();
    let block_duals: Vec<Vec<f64>> = block_duals
        .iter()
        .map(|b| b.iter().map(|v| v * scale).collect())
        .collect();

    let mut lhs = vec![0.0f64; problem.num_vars];
    for (eq, l) in problem.equalities.iter().zip(&eq_multipliers) {
        for &(v, c) in &eq.terms {
            lhs[v] += c * l;
        }
    }
    for (b, dual) in problem.blocks.iter().zip(&block_duals) {
        for e in &b.entries {
            let s = if e.row == e.col { 1.0 } else { SQRT2 };
            lhs[e.var] += s * e.coef * dual[svec_index(e.row, e.col)];
        }
    }
    let residual = lhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    Ok(FarkasRay {
        eq_multipliers,
        block_duals,
        margin: 1.0,
        residual,
    })
}

fn bad_sol(idx: usize, line: &str) -> Error {
    Error::ExternalSolver(format!("malformed solution line {}: `{line}`", idx + 1))
}
