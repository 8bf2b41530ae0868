//! Primal-dual interior-point method for block-diagonal real LMIs.
//!
//! Standard pair, with `A_k` sparse symmetric and all matrices block diagonal:
//!
//! ```text
//! (P)  max tr(C X)   s.t. tr(A_k X) = b_k,  X ⪰ 0
//! (D)  min b·z       s.t. S = Σ z_k A_k - C ⪰ 0
//! ```
//!
//! Search direction is HKM with a Mehrotra predictor-corrector; the method
//! starts from an infeasible point.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};

use crate::linalg;

/// One nonzero of a sparse symmetric coefficient matrix, both triangles stored.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Entry {
    pub blk: usize,
    pub r: usize,
    pub c: usize,
    pub v: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct StdForm {
    pub dims: Vec<usize>,
    pub c: Vec<DMatrix<f64>>,
    pub a: Vec<Vec<Entry>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmOutcome {
    pub converged: bool,
    pub x: Vec<DMatrix<f64>>,
    pub z: Vec<f64>,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub primal_infeas: f64,
    pub dual_infeas: f64,
    pub iterations: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct IpmSettings {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iters: usize,
}

const STEP_FRACTION: f64 = 0.95;

/// `(dX, dz, dS)`.
type Direction = (Vec<DMatrix<f64>>, DVector<f64>, Vec<DMatrix<f64>>);
/// Predictor `(dX, dS)` for the second-order correction.
type Predictor<'a> = (&'a [DMatrix<f64>], &'a [DMatrix<f64>]);

impl StdForm {
    fn a_op(&self, x: &[DMatrix<f64>]) -> DVector<f64> {
        DVector::from_iterator(
            self.a.len(),
            self.a.iter().map(|ak| ak.iter().map(|e| e.v * x[e.blk][(e.r, e.c)]).sum::<f64>()),
        )
    }

    fn a_adj(&self, z: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (k, ak) in self.a.iter().enumerate() {
            let zk = z[k];
            if zk == 0.0 {
                continue;
            }
            for e in ak {
                out[e.blk][(e.r, e.c)] += zk * e.v;
            }
        }
        out
    }

    fn schur(&self, x: &[DMatrix<f64>], sinv: &[DMatrix<f64>]) -> DMatrix<f64> {
        let m = self.a.len();
        let mut mat = DMatrix::zeros(m, m);
        // Column j: G = X A_j S^{-1}, then M_ij = Σ_{e∈A_i} v_e G[c_e, r_e].
        let mut g: Vec<DMatrix<f64>> = self.dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        let mut touched = vec![false; self.dims.len()];
        for (j, aj) in self.a.iter().enumerate() {
            touched.iter_mut().for_each(|t| *t = false);
            for e in aj {
                touched[e.blk] = true;
            }
            for (b, gb) in g.iter_mut().enumerate() {
                if !touched[b] {
                    continue;
                }
                let n = self.dims[b];
                let mut xa = DMatrix::<f64>::zeros(n, n);
                let mut cols = Vec::new();
                for e in aj.iter().filter(|e| e.blk == b) {
                    let src = x[b].column(e.r).clone_owned();
                    xa.column_mut(e.c).axpy(e.v, &src, 1.0);
                    cols.push(e.c);
                }
                cols.sort_unstable();
                cols.dedup();
                gb.fill(0.0);
                for &col in &cols {
                    let xc = xa.column(col).clone_owned();
                    let srow = sinv[b].row(col).clone_owned();
                    gb.ger(1.0, &xc, &srow.transpose(), 1.0);
                }
            }
            for (i, ai) in self.a.iter().enumerate() {
                let mut s = 0.0;
                for e in ai {
                    if touched[e.blk] {
                        s += e.v * g[e.blk][(e.c, e.r)];
                    }
                }
                mat[(i, j)] = s;
            }
        }
        let t = mat.transpose();
        (mat + t).scale(0.5)
    }
}

fn dot(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn frob(a: &[DMatrix<f64>]) -> f64 {
    a.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t).scale(0.5)
}

/// Largest `α` with `X + α dX ⪰ 0`, or infinity.
fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> Option<f64> {
    let chol = Cholesky::new(x.clone())?;
    let l = chol.l();
    let y = l.solve_lower_triangular(dx)?;
    let w = l.solve_lower_triangular(&y.transpose())?;
    let (ev, _) = linalg::symmetric_eigen(&sym(w)).ok()?;
    let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    Some(if min < 0.0 { -1.0 / min } else { f64::INFINITY })
}

fn block_step(x: &[DMatrix<f64>], dx: &[DMatrix<f64>]) -> Option<f64> {
    let mut a = f64::INFINITY;
    for (xb, db) in x.iter().zip(dx) {
        a = a.min(max_step(xb, db)?);
    }
    Some(a)
}

enum Factor {
    Cholesky(Cholesky<f64, Dyn>),
    Lu(LU<f64, Dyn, Dyn>),
}

impl Factor {
    /// Cholesky, retried with a tiny diagonal shift, then LU.
    fn spd(m: DMatrix<f64>) -> Self {
        let scale = (0..m.nrows()).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(1.0);
        if let Some(ch) = Cholesky::new(m.clone()) {
            return Factor::Cholesky(ch);
        }
        let mut reg = m.clone();
        for i in 0..m.nrows() {
            reg[(i, i)] += 1e-13 * scale;
        }
        match Cholesky::new(reg) {
            Some(ch) => Factor::Cholesky(ch),
            None => Factor::Lu(LU::new(m)),
        }
    }

    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        match self {
            Factor::Cholesky(ch) => Some(ch.solve(rhs)),
            Factor::Lu(lu) => lu.solve(rhs),
        }
    }
}

pub(crate) fn solve(p: &StdForm, set: &IpmSettings) -> IpmOutcome {
    let n_total: usize = p.dims.iter().sum();
    let m = p.a.len();
    let b = DVector::from_column_slice(&p.b);
    let c_norm = frob(&p.c);
    let b_norm = b.norm();
    let sqrt_n = (n_total as f64).sqrt();
    let a_norms: Vec<f64> = p.a.iter().map(|ak| ak.iter().map(|e| e.v * e.v).sum::<f64>().sqrt()).collect();
    let mut xi = 10.0f64.max(sqrt_n);
    let mut eta = 10.0f64.max(sqrt_n).max(c_norm);
    for (bk, &an) in p.b.iter().zip(&a_norms) {
        xi = xi.max(sqrt_n * (1.0 + bk.abs()) / (1.0 + an));
        eta = eta.max(an);
    }
    let mut x: Vec<DMatrix<f64>> = p.dims.iter().map(|&n| DMatrix::identity(n, n).scale(xi)).collect();
    let mut s: Vec<DMatrix<f64>> = p.dims.iter().map(|&n| DMatrix::identity(n, n).scale(eta)).collect();
    let mut z = DVector::zeros(m);

    let mut out = IpmOutcome {
        converged: false,
        x: Vec::new(),
        z: Vec::new(),
        primal_obj: 0.0,
        dual_obj: 0.0,
        primal_infeas: f64::INFINITY,
        dual_infeas: f64::INFINITY,
        iterations: 0,
        message: String::new(),
    };

    for iter in 0..=set.max_iters {
        let rp = &b - p.a_op(&x);
        let aty = p.a_adj(&z);
        let rd: Vec<DMatrix<f64>> = (0..p.dims.len()).map(|k| &aty[k] - &s[k] - &p.c[k]).collect();
        let pobj = dot(&p.c, &x);
        let dobj = b.dot(&z);
        let pinf = rp.norm() / (1.0 + b_norm);
        let dinf = frob(&rd) / (1.0 + c_norm);
        let gap = dot(&x, &s);
        out.primal_obj = pobj;
        out.dual_obj = dobj;
        out.primal_infeas = pinf;
        out.dual_infeas = dinf;
        out.iterations = iter;
        let obj_gap = (dobj - pobj).abs().max(gap.abs());
        if pinf <= set.feas_tol && dinf <= set.feas_tol && obj_gap <= set.gap_tol * (1.0 + dobj.abs()) {
            out.converged = true;
            out.message = "converged".into();
            break;
        }
        if iter == set.max_iters {
            out.message = format!("iteration cap reached (gap {obj_gap:.3e}, pinf {pinf:.3e}, dinf {dinf:.3e})");
            break;
        }
        if !(pobj.is_finite() && dobj.is_finite()) || x.iter().chain(&s).any(|m| m.norm() > 1e14) {
            out.message = "iterates diverged".into();
            break;
        }
        let mu = gap / n_total as f64;

        let mut sinv = Vec::with_capacity(s.len());
        let mut ok = true;
        for sb in &s {
            match Cholesky::new(sb.clone()) {
                Some(ch) => sinv.push(ch.inverse()),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            out.message = "dual slack lost definiteness".into();
            break;
        }
        let schur = Factor::spd(p.schur(&x, &sinv));

        let direction = |mu_t: f64, corr: Option<Predictor>| -> Option<Direction> {
            let h: Vec<DMatrix<f64>> = (0..p.dims.len())
                .map(|k| {
                    let mut hk = sinv[k].scale(mu_t) - &x[k] - &x[k] * &rd[k] * &sinv[k];
                    if let Some((dxp, dsp)) = corr {
                        hk -= &dxp[k] * &dsp[k] * &sinv[k];
                    }
                    hk
                })
                .collect();
            let rhs = p.a_op(&h) - &rp;
            let dz = schur.solve(&rhs)?;
            let atdz = p.a_adj(&dz);
            let ds: Vec<DMatrix<f64>> = (0..p.dims.len()).map(|k| &atdz[k] + &rd[k]).collect();
            let dx: Vec<DMatrix<f64>> = (0..p.dims.len())
                .map(|k| sym(&h[k] - &x[k] * &atdz[k] * &sinv[k]))
                .collect();
            Some((dx, dz, ds))
        };

        let Some((dxp, _, dsp)) = direction(0.0, None) else {
            out.message = "Schur complement solve failed".into();
            break;
        };
        let (Some(ap), Some(ad)) = (block_step(&x, &dxp), block_step(&s, &dsp)) else {
            out.message = "step length computation failed".into();
            break;
        };
        let ap = (STEP_FRACTION * ap).min(1.0);
        let ad = (STEP_FRACTION * ad).min(1.0);
        let xn: Vec<DMatrix<f64>> = x.iter().zip(&dxp).map(|(a, d)| a + d.scale(ap)).collect();
        let sn: Vec<DMatrix<f64>> = s.iter().zip(&dsp).map(|(a, d)| a + d.scale(ad)).collect();
        let sigma = (dot(&xn, &sn) / gap).clamp(0.0, 1.0).powi(3);

        let Some((dx, dz, ds)) = direction(sigma * mu, Some((&dxp, &dsp))) else {
            out.message = "Schur complement solve failed".into();
            break;
        };
        let (Some(ap), Some(ad)) = (block_step(&x, &dx), block_step(&s, &ds)) else {
            out.message = "step length computation failed".into();
            break;
        };
        let ap = (STEP_FRACTION * ap).min(1.0);
        let ad = (STEP_FRACTION * ad).min(1.0);
        if ap < 1e-12 && ad < 1e-12 {
            out.message = "step length collapsed".into();
            break;
        }
        for k in 0..x.len() {
            x[k] += dx[k].scale(ap);
            s[k] += ds[k].scale(ad);
        }
        z += dz.scale(ad);
    }
    out.x = x;
    out.z = z.iter().cloned().collect();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> IpmSettings {
        IpmSettings {
            gap_tol: 1e-9,
            feas_tol: 1e-10,
            max_iters: 100,
        }
    }

    #[test]
    fn scalar_lp() {
        // min z s.t. z - 3 >= 0  ->  3
        let p = StdForm {
            dims: vec![1],
            c: vec![DMatrix::from_element(1, 1, 3.0)],
            a: vec![vec![Entry { blk: 0, r: 0, c: 0, v: 1.0 }]],
            b: vec![1.0],
        };
        let o = solve(&p, &settings());
        assert!(o.converged, "{}", o.message);
        assert!((o.dual_obj - 3.0).abs() < 1e-8);
    }

    #[test]
    fn max_eigenvalue_of_symmetric_matrix() {
        // min t s.t. t I - C >= 0 with C = [[2,1],[1,0]] -> 1 + √2
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 0.0]);
        let p = StdForm {
            dims: vec![2],
            c: vec![c],
            a: vec![vec![
                Entry { blk: 0, r: 0, c: 0, v: 1.0 },
                Entry { blk: 0, r: 1, c: 1, v: 1.0 },
            ]],
            b: vec![1.0],
        };
        let o = solve(&p, &settings());
        assert!(o.converged, "{}", o.message);
        assert!((o.dual_obj - (1.0 + 2f64.sqrt())).abs() < 1e-8);
        assert!((o.primal_obj - o.dual_obj).abs() < 1e-8);
    }
}
