//! Ruge-Stuben coarsening of hidden-node triples.
//!
//! The coupling matrix between hidden nodes is a weighted sum of the Gram
//! blocks of the Jacobian columns of each per-node variable kind
//! (`v`, every `w_j`, `b`), so that a node is kept or dropped together with
//! all of its weights. The bias `d` takes no part in the coarsening and is
//! copied unchanged between levels.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};

/// Symmetric `r x r` coupling between hidden nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    a: DMatrix<f64>,
}

impl CouplingMatrix {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(Error::InvalidArgument(format!(
                "coupling matrix must be square and non-empty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("coupling matrix has non-finite entries".into()));
        }
        Ok(Self { a })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn size(&self) -> usize {
        self.a.nrows()
    }
}

/// How each Gram block is normalized before summation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlockNorm {
    /// Infinity norm of the Gram block `F_x^T F_x`.
    #[default]
    Gram,
    /// Infinity norm of the Jacobian block `F_x` itself.
    Jacobian,
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|row| row.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Builds the node coupling matrix from a Jacobian whose columns follow the
/// layout `[block_0 | ... | block_{K-1} | d]` with blocks of width `hidden`.
/// Blocks with zero norm are skipped.
pub fn build_coupling_matrix(jac: &DMatrix<f64>, hidden: usize, norm: BlockNorm) -> Result<CouplingMatrix> {
    let n = jac.ncols();
    if hidden == 0 || n < hidden + 1 || (n - 1) % hidden != 0 {
        return Err(Error::InvalidArgument(format!(
            "jacobian with {n} columns does not match blocks of width {hidden} plus a scalar"
        )));
    }
    let blocks = (n - 1) / hidden;
    let mut a = DMatrix::zeros(hidden, hidden);
    for k in 0..blocks {
        let cols = jac.columns(k * hidden, hidden);
        let gram = cols.tr_mul(&cols);
        let scale = match norm {
            BlockNorm::Gram => inf_norm(&gram),
            BlockNorm::Jacobian => inf_norm(&cols.into_owned()),
        };
        if scale > 0.0 {
            a += gram / scale;
        }
    }
    // Symmetrize away rounding.
    let a = (&a + a.transpose()) * 0.5;
    CouplingMatrix::new(a)
}

/// Partition of `0..r` into coarse and fine variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splitting {
    pub coarse: Vec<usize>,
    pub fine: Vec<usize>,
}

impl Splitting {
    pub fn is_coarse(&self, i: usize) -> bool {
        self.coarse.binary_search(&i).is_ok()
    }

    fn from_flags(is_c: &[bool]) -> Self {
        let (mut coarse, mut fine) = (Vec::new(), Vec::new());
        for (i, &c) in is_c.iter().enumerate() {
            if c {
                coarse.push(i);
            } else {
                fine.push(i);
            }
        }
        Self { coarse, fine }
    }
}

/// Strong negative dependencies `S_i` of every row.
pub fn strong_negative_couplings(a: &DMatrix<f64>, threshold: f64) -> Vec<Vec<usize>> {
    let r = a.nrows();
    (0..r)
        .map(|i| {
            let max_neg = (0..r)
                .filter(|&k| k != i && a[(i, k)] < 0.0)
                .map(|k| -a[(i, k)])
                .fold(0.0, f64::max);
            if max_neg == 0.0 {
                return Vec::new();
            }
            (0..r)
                .filter(|&j| j != i && a[(i, j)] < 0.0 && -a[(i, j)] >= threshold * max_neg)
                .collect()
        })
        .collect()
}

/// Strong positive couplings of row `i`: `a_ij >= threshold * max_{k != i} |a_ik|`.
fn strong_positive_couplings(a: &DMatrix<f64>, i: usize, threshold: f64) -> Vec<usize> {
    let r = a.nrows();
    let max_abs = (0..r).filter(|&k| k != i).map(|k| a[(i, k)].abs()).fold(0.0, f64::max);
    if max_abs == 0.0 {
        return Vec::new();
    }
    (0..r)
        .filter(|&j| j != i && a[(i, j)] > 0.0 && a[(i, j)] >= threshold * max_abs)
        .collect()
}

/// Classical Ruge-Stuben C/F splitting.
///
/// First pass over strong negative couplings in order of decreasing measure
/// `|{j : i in S_j}|` (ties to the lowest index); second, single pass that
/// promotes to C the largest strong positive F/F neighbour of each F row.
pub fn ruge_stuben_split(a: &CouplingMatrix, strength: f64) -> Result<Splitting> {
    if !(strength > 0.0 && strength < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "strength threshold must lie in (0,1), got {strength}"
        )));
    }
    let m = a.matrix();
    let r = a.size();
    let s = strong_negative_couplings(m, strength);
    let mut influences: Vec<Vec<usize>> = vec![Vec::new(); r];
    for (i, si) in s.iter().enumerate() {
        for &j in si {
            influences[j].push(i);
        }
    }

    #[derive(Clone, Copy, PartialEq)]
    enum State {
        Unassigned,
        C,
        F,
    }
    let mut state = vec![State::Unassigned; r];
    let mut measure: Vec<usize> = influences.iter().map(Vec::len).collect();

    loop {
        // Highest measure, lowest index.
        let mut pick = None;
        for i in 0..r {
            if state[i] == State::Unassigned && pick.map_or(true, |p: usize| measure[i] > measure[p]) {
                pick = Some(i);
            }
        }
        let Some(i) = pick else { break };
        state[i] = State::C;
        for &j in &influences[i] {
            if state[j] != State::Unassigned {
                continue;
            }
            state[j] = State::F;
            for &k in &s[j] {
                if state[k] == State::Unassigned {
                    measure[k] += 1;
                }
            }
        }
        for &j in &s[i] {
            if state[j] == State::Unassigned {
                measure[j] = measure[j].saturating_sub(1);
            }
        }
    }

    let mut is_c: Vec<bool> = state.iter().map(|&st| st == State::C).collect();
    for i in 0..r {
        if is_c[i] {
            continue;
        }
        let best = strong_positive_couplings(m, i, strength)
            .into_iter()
            .filter(|&j| !is_c[j])
            .fold(None, |best: Option<usize>, j| match best {
                Some(b) if m[(i, b)] >= m[(i, j)] => Some(b),
                _ => Some(j),
            });
        if let Some(j) = best {
            is_c[j] = true;
        }
    }
    Ok(Splitting::from_flags(&is_c))
}

/// Prolongation and restriction between `r` fine and `r_c` coarse nodes.
///
/// `P = interp / p_scale` and `R = interp^T / r_scale`, where `interp` is
/// the unscaled interpolation (`C` rows are unit rows) and the scales are
/// the infinity norms of `interp` and `interp^T`. Hence
/// `(p_scale / r_scale) P = R^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferOperators {
    interp: DMatrix<f64>,
    prolongation: DMatrix<f64>,
    restriction: DMatrix<f64>,
    coarse: Vec<usize>,
    p_scale: f64,
    r_scale: f64,
}

impl TransferOperators {
    /// Scales the interpolation by the infinity norms of `P` and `R = P^T`.
    pub fn from_interpolation(interp: DMatrix<f64>, coarse: Vec<usize>) -> Result<Self> {
        check_len("coarse set", interp.ncols(), coarse.len())?;
        let p_scale = inf_norm(&interp);
        let rt = interp.transpose();
        let r_scale = inf_norm(&rt);
        if !(p_scale > 0.0 && r_scale > 0.0) {
            return Err(Error::Numerical("interpolation operator is zero".into()));
        }
        Ok(Self {
            prolongation: &interp / p_scale,
            restriction: rt / r_scale,
            interp,
            coarse,
            p_scale,
            r_scale,
        })
    }

    /// No coarsening: `P = R = I`.
    pub fn identity(hidden: usize) -> Self {
        Self::from_interpolation(DMatrix::identity(hidden, hidden), (0..hidden).collect())
            .expect("identity is a valid interpolation")
    }

    pub fn fine_size(&self) -> usize {
        self.prolongation.nrows()
    }

    pub fn coarse_size(&self) -> usize {
        self.prolongation.ncols()
    }

    pub fn coarse_indices(&self) -> &[usize] {
        &self.coarse
    }

    pub fn prolongation(&self) -> &DMatrix<f64> {
        &self.prolongation
    }

    pub fn restriction(&self) -> &DMatrix<f64> {
        &self.restriction
    }

    /// Interpolation before norm scaling.
    pub fn unscaled_interpolation(&self) -> &DMatrix<f64> {
        &self.interp
    }

    pub fn p_scale(&self) -> f64 {
        self.p_scale
    }

    pub fn r_scale(&self) -> f64 {
        self.r_scale
    }

    /// `sigma` in `sigma P = R^T`.
    pub fn sigma(&self) -> f64 {
        self.p_scale / self.r_scale
    }

    /// Infinity norm of `R` (1 after scaling).
    pub fn restriction_norm(&self) -> f64 {
        inf_norm(&self.restriction)
    }
}

/// Builds `P = [I; Delta]` (in original index order) from the splitting.
///
/// An F row without strongly coupled C neighbours, or with zero diagonal,
/// is promoted to C and the operator rebuilt. When an F row has no strong
/// positive C neighbour its positive couplings are added to `a_ii`.
pub fn build_interpolation(a: &CouplingMatrix, split: &Splitting, strength: f64) -> Result<(TransferOperators, Splitting)> {
    let m = a.matrix();
    let r = a.size();
    let s = strong_negative_couplings(m, strength);
    let mut is_c = vec![false; r];
    for &c in &split.coarse {
        if c >= r {
            return Err(Error::InvalidArgument(format!("coarse index {c} out of range")));
        }
        is_c[c] = true;
    }
    if split.coarse.len() + split.fine.len() != r {
        return Err(Error::InvalidArgument("splitting does not partition the variables".into()));
    }

    loop {
        let split = Splitting::from_flags(&is_c);
        let col_of: Vec<Option<usize>> = {
            let mut v = vec![None; r];
            for (k, &c) in split.coarse.iter().enumerate() {
                v[c] = Some(k);
            }
            v
        };
        let mut interp = DMatrix::zeros(r, split.coarse.len());
        let mut promote = Vec::new();
        for i in 0..r {
            if let Some(k) = col_of[i] {
                interp[(i, k)] = 1.0;
                continue;
            }
            let mut aii = m[(i, i)];
            let neg: Vec<usize> = s[i].iter().copied().filter(|&k| is_c[k]).collect();
            let pos: Vec<usize> = strong_positive_couplings(m, i, strength)
                .into_iter()
                .filter(|&k| is_c[k])
                .collect();
            if aii == 0.0 || (neg.is_empty() && pos.is_empty()) {
                promote.push(i);
                continue;
            }
            let (mut sum_neg, mut sum_pos) = (0.0, 0.0);
            for j in (0..r).filter(|&j| j != i) {
                let x = m[(i, j)];
                if x < 0.0 {
                    sum_neg += x;
                } else {
                    sum_pos += x;
                }
            }
            // Without positive interpolatory neighbours the positive
            // couplings are lumped into the diagonal.
            if pos.is_empty() {
                aii += sum_pos;
            }
            if !neg.is_empty() {
                let alpha = sum_neg / neg.iter().map(|&k| m[(i, k)]).sum::<f64>();
                for &k in &neg {
                    interp[(i, col_of[k].unwrap())] = -alpha * m[(i, k)] / aii;
                }
            }
            if !pos.is_empty() {
                let beta = sum_pos / pos.iter().map(|&k| m[(i, k)]).sum::<f64>();
                for &k in &pos {
                    interp[(i, col_of[k].unwrap())] = -beta * m[(i, k)] / aii;
                }
            }
        }
        if promote.is_empty() {
            let ops = TransferOperators::from_interpolation(interp, split.coarse.clone())?;
            return Ok((ops, split));
        }
        for i in promote {
            is_c[i] = true;
        }
    }
}

/// Coupling matrix, splitting and operators from a Jacobian in one call.
pub fn coarsen_from_jacobian(
    jac: &DMatrix<f64>,
    hidden: usize,
    strength: f64,
    norm: BlockNorm,
) -> Result<(CouplingMatrix, Splitting, TransferOperators)> {
    let a = build_coupling_matrix(jac, hidden, norm)?;
    let first = ruge_stuben_split(&a, strength)?;
    let (ops, split) = build_interpolation(&a, &first, strength)?;
    Ok((a, split, ops))
}

/// Direction of a blockwise transfer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Restrict,
    Prolong,
}

/// Applies `R` or `P` to every per-node block of `x` and copies the
/// trailing scalar (`d`) unchanged.
pub fn apply_blockwise(ops: &TransferOperators, x: &DVector<f64>, direction: Direction) -> Result<DVector<f64>> {
    let (op, from, to) = match direction {
        Direction::Restrict => (&ops.restriction, ops.fine_size(), ops.coarse_size()),
        Direction::Prolong => (&ops.prolongation, ops.coarse_size(), ops.fine_size()),
    };
    let len = x.len();
    if len < from + 1 || (len - 1) % from != 0 {
        return Err(Error::InvalidArgument(format!(
            "vector of length {len} does not match blocks of width {from} plus a scalar"
        )));
    }
    let blocks = (len - 1) / from;
    let mut out = DVector::zeros(blocks * to + 1);
    for k in 0..blocks {
        let block = x.rows(k * from, from);
        out.rows_mut(k * to, to).copy_from(&(op * block));
    }
    out[blocks * to] = x[len - 1];
    Ok(out)
}

/// Plain-text dump of the coupling matrix, the splitting and `P`.
pub fn write_inspection<W: Write>(
    mut out: W,
    a: &CouplingMatrix,
    split: &Splitting,
    ops: &TransferOperators,
) -> io::Result<()> {
    let write_matrix = |out: &mut W, name: &str, m: &DMatrix<f64>| -> io::Result<()> {
        writeln!(out, "# {name} {} {}", m.nrows(), m.ncols())?;
        for row in m.row_iter() {
            let line: Vec<String> = row.iter().map(|x| format!("{x:.6e}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    };
    write_matrix(&mut out, "A", a.matrix())?;
    let join = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
    writeln!(out, "# C {}", split.coarse.len())?;
    writeln!(out, "{}", join(&split.coarse))?;
    writeln!(out, "# F {}", split.fine.len())?;
    writeln!(out, "{}", join(&split.fine))?;
    writeln!(out, "# p_scale {:.17e} r_scale {:.17e}", ops.p_scale(), ops.r_scale())?;
    write_matrix(&mut out, "P", ops.prolongation())
}
