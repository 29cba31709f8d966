use super::dense::{self, Block, CAP};
use super::DiscreteOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum FactorFailure {
    /// A scalar pivot of the unpivoted elimination was not positive.
    NonpositivePivot,
    /// A pivot block was singular or non-finite.
    Singular,
}

/// Block LU (no inter-block pivoting) of `α·I − β·L` for a block
/// tridiagonal operator, with the two fill sequences of the cyclic case.
pub struct BlockLu {
    n: usize,
    nodes: usize,
    periodic: bool,
    /// `P_i⁻¹`, one `n × n` block per node.
    pinv: Vec<f64>,
    /// Sub/super-diagonal couplings of `α·I − β·L` (diagonal blocks, per stage).
    al: Vec<f64>,
    au: Vec<f64>,
    /// Cyclic fill: column block `F_i = (i, N-1)` and row block `G_i = (N-1, i)`.
    fill_col: Vec<f64>,
    fill_row: Vec<f64>,
}

impl BlockLu {
    /// Factors `α·I − β·L`. With `require_positive`, fails as soon as a
    /// scalar pivot of the unpivoted elimination is not positive.
    pub(crate) fn factor(
        op: &DiscreteOperator,
        alpha: f64,
        beta: f64,
        require_positive: bool,
    ) -> Result<Self, FactorFailure> {
        let n = op.stages;
        let nn = n * n;
        let nodes = op.nodes;
        let periodic = op.periodic;
        let al: Vec<f64> = op.lower.iter().map(|c| -beta * c).collect();
        let au: Vec<f64> = op.upper.iter().map(|c| -beta * c).collect();
        let mut lu = Self {
            n,
            nodes,
            periodic,
            pinv: vec![0.0; nodes * nn],
            al,
            au,
            fill_col: Vec::new(),
            fill_row: Vec::new(),
        };
        let block_a = |i: usize, out: &mut [f64]| {
            for k in 0..nn {
                out[k] = -beta * op.diag[i * nn + k];
            }
            for s in 0..n {
                out[s * n + s] += alpha;
            }
        };
        let mut p: Block = [0.0; CAP];
        let chain = if periodic { nodes - 1 } else { nodes };
        for i in 0..chain {
            block_a(i, &mut p);
            if i > 0 {
                let prev = &lu.pinv[(i - 1) * nn..i * nn];
                for j in 0..n {
                    let l = lu.al[i * n + j];
                    if l == 0.0 {
                        continue;
                    }
                    for k in 0..n {
                        p[j * n + k] -= l * prev[j * n + k] * lu.au[(i - 1) * n + k];
                    }
                }
            }
            lu.accept_pivot(&p, i, require_positive)?;
        }
        if periodic {
            lu.factor_cyclic_tail(&block_a, require_positive)?;
        }
        Ok(lu)
    }

    fn accept_pivot(&mut self, p: &[f64], i: usize, require_positive: bool) -> Result<(), FactorFailure> {
        let n = self.n;
        let nn = n * n;
        if require_positive && !dense::pivots_positive(p, n) {
            return Err(FactorFailure::NonpositivePivot);
        }
        if !dense::invert(p, n, &mut self.pinv[i * nn..(i + 1) * nn]) {
            return Err(FactorFailure::Singular);
        }
        Ok(())
    }

    fn factor_cyclic_tail(
        &mut self,
        block_a: &dyn Fn(usize, &mut [f64]),
        require_positive: bool,
    ) -> Result<(), FactorFailure> {
        let n = self.n;
        let nn = n * n;
        let last = self.nodes - 1;
        let mut fill_col = vec![0.0; last * nn];
        let mut fill_row = vec![0.0; last * nn];
        for s in 0..n {
            fill_col[s * n + s] = self.al[s];
            fill_row[s * n + s] = self.au[last * n + s];
        }
        let mut tmp: Block = [0.0; CAP];
        let mut sum: Block = [0.0; CAP];
        for i in 0..last {
            let pinv = &self.pinv[i * nn..(i + 1) * nn];
            let f = &fill_col[i * nn..(i + 1) * nn];
            let g = &fill_row[i * nn..(i + 1) * nn];
            // sum += G_i P_i⁻¹ F_i
            let mut gp: Block = [0.0; CAP];
            dense::mul(g, pinv, n, &mut gp);
            dense::mul(&gp, f, n, &mut tmp);
            for k in 0..nn {
                sum[k] += tmp[k];
            }
            if i + 1 == last {
                break;
            }
            let next = i + 1;
            // F_{i+1} = A(i+1, N-1) − al_{i+1} P_i⁻¹ F_i
            let mut pf: Block = [0.0; CAP];
            dense::mul(pinv, f, n, &mut pf);
            let mut new_f: Block = [0.0; CAP];
            let mut new_g: Block = [0.0; CAP];
            for j in 0..n {
                for k in 0..n {
                    new_f[j * n + k] = -self.al[next * n + j] * pf[j * n + k];
                    // G_{i+1} = A(N-1, i+1) − G_i P_i⁻¹ au_i
                    new_g[j * n + k] = -gp[j * n + k] * self.au[i * n + k];
                }
            }
            if next == last - 1 {
                for s in 0..n {
                    new_f[s * n + s] += self.au[next * n + s];
                    new_g[s * n + s] += self.al[last * n + s];
                }
            }
            fill_col[next * nn..(next + 1) * nn].copy_from_slice(&new_f[..nn]);
            fill_row[next * nn..(next + 1) * nn].copy_from_slice(&new_g[..nn]);
        }
        let mut p: Block = [0.0; CAP];
        block_a(last, &mut p);
        for k in 0..nn {
            p[k] -= sum[k];
        }
        self.fill_col = fill_col;
        self.fill_row = fill_row;
        self.accept_pivot(&p, last, require_positive)
    }

    /// Solves `(α·I − β·L) x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let nn = n * n;
        let nodes = self.nodes;
        let mut y = b.to_vec();
        let mut t = [0.0; super::dense::CAP];
        let chain = if self.periodic { nodes - 1 } else { nodes };
        // forward: y_i −= al_i P_{i-1}⁻¹ y_{i-1}
        for i in 1..chain {
            let (head, tail) = y.split_at_mut(i * n);
            dense::mul_vec(&self.pinv[(i - 1) * nn..i * nn], &head[(i - 1) * n..], n, &mut t);
            for s in 0..n {
                tail[s] -= self.al[i * n + s] * t[s];
            }
        }
        if self.periodic {
            let last = nodes - 1;
            let mut acc = vec![0.0; n];
            let mut u = [0.0; super::dense::CAP];
            for i in 0..last {
                dense::mul_vec(&self.pinv[i * nn..(i + 1) * nn], &y[i * n..(i + 1) * n], n, &mut t);
                dense::mul_vec(&self.fill_row[i * nn..(i + 1) * nn], &t, n, &mut u);
                for s in 0..n {
                    acc[s] += u[s];
                }
            }
            for s in 0..n {
                y[last * n + s] -= acc[s];
            }
        }
        let mut x = vec![0.0; nodes * n];
        let tail_start = chain - 1;
        if self.periodic {
            let last = nodes - 1;
            dense::mul_vec(&self.pinv[last * nn..], &y[last * n..], n, &mut t);
            x[last * n..].copy_from_slice(&t[..n]);
        }
        let mut r = vec![0.0; n];
        let mut u = [0.0; super::dense::CAP];
        for i in (0..chain).rev() {
            r.copy_from_slice(&y[i * n..(i + 1) * n]);
            let has_next_in_chain = i < tail_start;
            if has_next_in_chain {
                for s in 0..n {
                    r[s] -= self.au[i * n + s] * x[(i + 1) * n + s];
                }
            }
            if self.periodic {
                let last = nodes - 1;
                dense::mul_vec(&self.fill_col[i * nn..(i + 1) * nn], &x[last * n..], n, &mut u);
                for s in 0..n {
                    r[s] -= u[s];
                }
            }
            dense::mul_vec(&self.pinv[i * nn..(i + 1) * nn], &r, n, &mut t);
            x[i * n..(i + 1) * n].copy_from_slice(&t[..n]);
        }
        x
    }
}
