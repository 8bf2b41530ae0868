//! Measurement descriptions: the trapped-ion qubit/qutrit sets and the
//! threshold-detector polarization model with its imperfection channels.
//!
//! Two-mode Fock space truncated at `n_max` photons is laid out block by block:
//! block `n` starts at `n(n+1)/2` and lists `|k, n-k>` for `k = n, …, 0`, where
//! `k` counts photons in the mode measured by detector 0.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, C64, ONE, ZERO};
use crate::maps::ProcessMap;
use crate::observables::{Normalization, ObservableSet};
use crate::operator::{DensityMatrix, HermitianOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    X,
    Y,
    Z,
}

pub const BASES: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

impl Basis {
    /// Eigenvectors of `σ_β` for `+1` and `-1`.
    pub fn eigenvectors(self) -> (DVector<C64>, DVector<C64>) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Basis::Z => (
                DVector::from_vec(vec![ONE, ZERO]),
                DVector::from_vec(vec![ZERO, ONE]),
            ),
            Basis::X => (
                DVector::from_vec(vec![c(s, 0.0), c(s, 0.0)]),
                DVector::from_vec(vec![c(s, 0.0), c(-s, 0.0)]),
            ),
            Basis::Y => (
                DVector::from_vec(vec![c(s, 0.0), c(0.0, s)]),
                DVector::from_vec(vec![c(s, 0.0), c(0.0, -s)]),
            ),
        }
    }

    pub fn pauli(self) -> DMatrix<C64> {
        match self {
            Basis::X => linalg::pauli_x(),
            Basis::Y => linalg::pauli_y(),
            Basis::Z => linalg::pauli_z(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Basis::X => "x",
            Basis::Y => "y",
            Basis::Z => "z",
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Basis::X),
            "y" | "Y" => Ok(Basis::Y),
            "z" | "Z" => Ok(Basis::Z),
            other => Err(Error::InvalidBasis(other.to_string())),
        }
    }
}

/// First index of photon-number block `n`.
pub fn fock_offset(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Dimension of the two-mode space with at most `n_max` photons.
pub fn fock_dim(n_max: usize) -> usize {
    fock_offset(n_max + 1)
}

/// Index of `|k, l>`.
pub fn fock_index(k: usize, l: usize) -> usize {
    let n = k + l;
    fock_offset(n) + l
}

/// `(k, l)` occupation numbers of a flat index.
pub fn fock_occupations(idx: usize) -> (usize, usize) {
    let mut n = 0;
    while fock_offset(n + 1) <= idx {
        n += 1;
    }
    let l = idx - fock_offset(n);
    (n - l, l)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Isometry `C^{n+1} -> Sym((C^2)^{⊗n})` onto normalized Dicke states.
///
/// Column `c` is the uniform superposition of `n`-bit strings with `c` ones.
pub fn symmetric_embedding(n: usize) -> Result<DMatrix<C64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("symmetric embedding needs n >= 1".into()));
    }
    let rows = 1usize << n;
    let mut v = DMatrix::zeros(rows, n + 1);
    for r in 0..rows {
        let ones = r.count_ones() as usize;
        v[(r, ones)] = c(1.0 / binomial(n, ones).sqrt(), 0.0);
    }
    Ok(v)
}

fn kron_power(v: &DVector<C64>, n: usize) -> DVector<C64> {
    let mut out = DVector::from_element(1, ONE);
    for _ in 0..n {
        out = out.kronecker(v);
    }
    out
}

/// `|n,0>_β` and `|0,n>_β` as vectors in the `(n+1)`-dim photon block.
pub fn extremal_states(n: usize, beta: Basis) -> Result<(DVector<C64>, DVector<C64>)> {
    let v = symmetric_embedding(n)?;
    let (plus, minus) = beta.eigenvectors();
    Ok((v.adjoint() * kron_power(&plus, n), v.adjoint() * kron_power(&minus, n)))
}

/// `|β+><β+|^{⊗n} - |β-><β-|^{⊗n}` on `n` qubits.
pub fn qubit_difference_operator(n: usize, beta: Basis) -> DMatrix<C64> {
    let (plus, minus) = beta.eigenvectors();
    linalg::projector(&kron_power(&plus, n)) - linalg::projector(&kron_power(&minus, n))
}

/// The permutation sum `2^{1-n} Σ_{j odd} Σ_S σ_β^{(S)}`, one term per odd-size
/// subset `S` of the `n` qubits.
pub fn permutation_expansion(n: usize, beta: Basis) -> DMatrix<C64> {
    let d = 1usize << n;
    let mut out = DMatrix::zeros(d, d);
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() % 2 == 1 {
            out += string_operator(n, mask, beta);
        }
    }
    out.scale(1.0 / (1u64 << (n - 1)) as f64)
}

/// `σ_β` on the qubits in `mask` (bit `i` = qubit `i`, qubit 0 most significant), identity elsewhere.
pub fn string_operator(n: usize, mask: u32, beta: Basis) -> DMatrix<C64> {
    let mut out = DMatrix::from_element(1, 1, ONE);
    for i in 0..n {
        let f = if mask & (1 << i) != 0 {
            beta.pauli()
        } else {
            linalg::identity(2)
        };
        out = out.kronecker(&f);
    }
    out
}

type BlockPick = fn(&ClickBlocks) -> DMatrix<C64>;

/// Raw outcome blocks of one basis on the `n`-photon block.
#[derive(Debug, Clone)]
pub struct ClickBlocks {
    pub vacuum: DMatrix<C64>,
    pub zero: DMatrix<C64>,
    pub one: DMatrix<C64>,
    pub double: DMatrix<C64>,
}

/// `{M_vac, M_0, M_1, M_d}` on the `n`-photon block.
pub fn click_operators(n: usize, beta: Basis) -> Result<ClickBlocks> {
    let d = n + 1;
    if n == 0 {
        return Ok(ClickBlocks {
            vacuum: linalg::identity(1),
            zero: DMatrix::zeros(1, 1),
            one: DMatrix::zeros(1, 1),
            double: DMatrix::zeros(1, 1),
        });
    }
    let (s0, s1) = extremal_states(n, beta)?;
    let zero = linalg::projector(&s0);
    let one = linalg::projector(&s1);
    let double = linalg::identity(d) - &zero - &one;
    Ok(ClickBlocks {
        vacuum: DMatrix::zeros(d, d),
        zero,
        one,
        double,
    })
}

/// `F^n_β = |n,0><n,0|_β - |0,n><0,n|_β` on the `n`-photon block.
pub fn difference_block(n: usize, beta: Basis) -> Result<DMatrix<C64>> {
    let b = click_operators(n, beta)?;
    Ok(b.zero - b.one)
}

/// Difference operators `F_β` on the truncated Fock space.
pub fn difference_operators(n_max: usize, beta: Basis) -> Result<HermitianOperator> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let d = fock_dim(n_max);
    let mut m = DMatrix::zeros(d, d);
    for n in 1..=n_max {
        let off = fock_offset(n);
        m.view_mut((off, off), (n + 1, n + 1)).copy_from(&difference_block(n, beta)?);
    }
    HermitianOperator::from_hermitian_part(vec![d], &m)
}

fn block_diag(n_max: usize, f: impl Fn(&ClickBlocks) -> DMatrix<C64>, beta: Basis) -> Result<DMatrix<C64>> {
    let d = fock_dim(n_max);
    let mut m = DMatrix::zeros(d, d);
    for n in 0..=n_max {
        let off = fock_offset(n);
        let blocks = click_operators(n, beta)?;
        m.view_mut((off, off), (n + 1, n + 1)).copy_from(&f(&blocks));
    }
    Ok(m)
}

/// Raw four-outcome POVM per basis: labels `vac_β, 0_β, 1_β, d_β` for β = x, y, z.
pub fn raw_click_povm(n_max: usize) -> Result<ObservableSet> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let d = fock_dim(n_max);
    let mut ops = Vec::with_capacity(12);
    let mut labels = Vec::with_capacity(12);
    for beta in BASES {
        let parts: [(&str, BlockPick); 4] = [
            ("vac", |b| b.vacuum.clone()),
            ("0", |b| b.zero.clone()),
            ("1", |b| b.one.clone()),
            ("d", |b| b.double.clone()),
        ];
        for (name, f) in parts {
            ops.push(HermitianOperator::from_hermitian_part(vec![d], &block_diag(n_max, f, beta)?)?);
            labels.push(format!("{name}_{beta}"));
        }
    }
    ObservableSet::new(ops, labels, Normalization::Povm(vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7], vec![8, 9, 10, 11]]))
}

fn three_outcome_groups() -> Normalization {
    Normalization::Povm(vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8]])
}

/// Assigns each double click to outcome 0 or 1 with probability ½:
/// `F_i = M_i + ½ M_d`.
pub fn reassign_double_clicks(raw: &ObservableSet) -> Result<ObservableSet> {
    if raw.len() != 12 {
        return Err(Error::InvalidArgument(format!(
            "expected the 12-outcome raw POVM, got {} operators",
            raw.len()
        )));
    }
    let mut ops = Vec::with_capacity(9);
    let mut labels = Vec::with_capacity(9);
    for (g, beta) in BASES.iter().enumerate() {
        let o = &raw.operators()[4 * g..4 * g + 4];
        let half_d = o[3].scale(0.5);
        ops.push(o[0].clone());
        ops.push(o[1].add(&half_d)?);
        ops.push(o[2].add(&half_d)?);
        labels.extend([format!("vac_{beta}"), format!("0_{beta}"), format!("1_{beta}")]);
    }
    ObservableSet::new(ops, labels, three_outcome_groups())
}

/// Full observables `F_{i,β}` of the ideal detector, vacuum first in each basis.
pub fn full_click_operators(n_max: usize) -> Result<ObservableSet> {
    reassign_double_clicks(&raw_click_povm(n_max)?)
}

/// Single-photon targets `T_{i,β}` on vacuum ⊕ qubit, reconstructed in the
/// block-diagonal algebra.
pub fn target_click_operators() -> Result<ObservableSet> {
    full_click_operators(1)?.with_sectors(vec![vec![0], vec![1, 2]])
}

/// Independent dark counts with probability `p_dark` per detector, applied to
/// the raw four-outcome POVM.
pub fn dark_count_postprocess(raw: &ObservableSet, p_dark: f64) -> Result<ObservableSet> {
    if !(0.0..1.0).contains(&p_dark) {
        return Err(Error::ParameterOutOfRange {
            name: "p_dark",
            value: p_dark,
            range: "[0, 1)",
        });
    }
    if raw.len() != 12 {
        return Err(Error::InvalidArgument(format!(
            "expected the 12-outcome raw POVM, got {} operators",
            raw.len()
        )));
    }
    let p = p_dark;
    let q = 1.0 - p;
    let mut ops = Vec::with_capacity(12);
    for g in 0..3 {
        let o = &raw.operators()[4 * g..4 * g + 4];
        let (vac, zero, one, dbl) = (&o[0], &o[1], &o[2], &o[3]);
        ops.push(vac.scale(q * q));
        ops.push(zero.scale(q).add(&vac.scale(p * q))?);
        ops.push(one.scale(q).add(&vac.scale(p * q))?);
        ops.push(dbl.add(&zero.scale(p))?.add(&one.scale(p))?.add(&vac.scale(p * p))?);
    }
    ObservableSet::new(ops, raw.labels().to_vec(), raw.normalization().clone())
}

/// Two-mode pure loss with transmissivity `eta` on the `≤ n_max` sector.
/// Loss never raises photon number, so the truncated channel is exactly CPTP.
pub fn loss_channel(n_max: usize, eta: f64) -> Result<ProcessMap> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::ParameterOutOfRange {
            name: "eta",
            value: eta,
            range: "[0, 1]",
        });
    }
    let d = fock_dim(n_max);
    let amp = |n: usize, a: usize| -> f64 {
        binomial(n, a) * eta.powi((n - a) as i32) * (1.0 - eta).powi(a as i32)
    };
    let mut kraus = Vec::new();
    for a in 0..=n_max {
        for b in 0..=(n_max - a) {
            let mut k = DMatrix::zeros(d, d);
            let mut nonzero = false;
            for idx in 0..d {
                let (kk, ll) = fock_occupations(idx);
                if kk < a || ll < b {
                    continue;
                }
                let w = amp(kk, a) * amp(ll, b);
                if w > 0.0 {
                    k[(fock_index(kk - a, ll - b), idx)] = c(w.sqrt(), 0.0);
                    nonzero = true;
                }
            }
            if nonzero {
                kraus.push(k);
            }
        }
    }
    ProcessMap::from_kraus(vec![d], vec![d], &kraus)
}

fn depolarizing_amplitudes(q: f64) -> [f64; 4] {
    let a0 = (1.0 - 0.75 * q).max(0.0).sqrt();
    let a = (0.25 * q).sqrt();
    [a0, a, a, a]
}

fn pauli(s: usize) -> DMatrix<C64> {
    match s {
        0 => linalg::identity(2),
        1 => linalg::pauli_x(),
        2 => linalg::pauli_y(),
        _ => linalg::pauli_z(),
    }
}

/// For each `s ∈ {0..3}^n` (first qubit most significant digit), `V^† (⊗ a_{s_i} σ_{s_i}) V`.
fn symmetric_kraus_blocks(n: usize, q: f64) -> Result<Vec<DMatrix<C64>>> {
    let v = symmetric_embedding(n)?;
    let amps = depolarizing_amplitudes(q);
    let count = 4usize.pow(n as u32);
    let mut out = Vec::with_capacity(count);
    for s in 0..count {
        let mut k = DMatrix::from_element(1, 1, ONE);
        let mut rest = s;
        let mut digits = vec![0; n];
        for slot in digits.iter_mut().rev() {
            *slot = rest % 4;
            rest /= 4;
        }
        for &si in &digits {
            k = k.kronecker(&pauli(si).scale(amps[si]));
        }
        out.push(v.adjoint() * k * &v);
    }
    Ok(out)
}

/// Probability that per-photon depolarizing keeps an `n`-photon state in the
/// symmetric subspace; state independent.
pub fn misalignment_symmetric_probability(n: usize, q: f64) -> Result<f64> {
    if n == 0 {
        return Ok(1.0);
    }
    let blocks = symmetric_kraus_blocks(n, q)?;
    let mut sum = DMatrix::<C64>::zeros(n + 1, n + 1);
    for b in &blocks {
        sum += b.adjoint() * b;
    }
    let c_n = sum[(0, 0)].re;
    let dev = linalg::max_abs_entry(&(&sum - linalg::identity(n + 1).scale(c_n)));
    if dev > 1e-10 {
        return Err(Error::Solver(format!(
            "symmetric retention operator not proportional to identity (deviation {dev:e})"
        )));
    }
    Ok(c_n)
}

/// Per-photon depolarizing with parameter `q` (Bloch vectors shrink by `1-q`),
/// conditioned on staying in the symmetric subspace and renormalized per block.
pub fn misalignment_channel(n_max: usize, q: f64) -> Result<ProcessMap> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::ParameterOutOfRange {
            name: "q",
            value: q,
            range: "[0, 1]",
        });
    }
    let d = fock_dim(n_max);
    let amps = depolarizing_amplitudes(q);
    let mut per_block = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n == 0 {
            per_block.push(vec![linalg::identity(1)]);
            continue;
        }
        let c_n = misalignment_symmetric_probability(n, q)?;
        let blocks = symmetric_kraus_blocks(n, q)?;
        per_block.push(blocks.into_iter().map(|b| b.unscale(c_n.sqrt())).collect());
    }
    let count = 4usize.pow(n_max as u32);
    let mut kraus = Vec::with_capacity(count);
    for s in 0..count {
        let mut digits = vec![0; n_max];
        let mut rest = s;
        for slot in digits.iter_mut().rev() {
            *slot = rest % 4;
            rest /= 4;
        }
        let mut g = DMatrix::zeros(d, d);
        let mut any = false;
        for n in 0..=n_max {
            // block n uses the first n digits; the remaining ones only weight it
            let prefix = digits[..n].iter().fold(0, |acc, &x| acc * 4 + x);
            let tail: f64 = digits[n..].iter().map(|&x| amps[x]).product();
            if tail == 0.0 {
                continue;
            }
            let off = fock_offset(n);
            let blk = per_block[n][prefix].scale(tail);
            if linalg::max_abs_entry(&blk) > 0.0 {
                any = true;
            }
            g.view_mut((off, off), (n + 1, n + 1)).copy_from(&blk);
        }
        if any {
            kraus.push(g);
        }
    }
    ProcessMap::from_kraus(vec![d], vec![d], &kraus)
}

/// Detector imperfection parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Imperfections {
    pub eta: f64,
    pub p_dark: f64,
    pub q: f64,
}

impl Default for Imperfections {
    fn default() -> Self {
        Self {
            eta: 1.0,
            p_dark: 0.0,
            q: 0.0,
        }
    }
}

impl Imperfections {
    pub fn is_ideal(&self) -> bool {
        self.eta == 1.0 && self.p_dark == 0.0 && self.q == 0.0
    }
}

/// Full polarization observables on the truncated Fock space, block diagonal in
/// photon number.
#[derive(Debug, Clone)]
pub struct PhotonBlockModel {
    pub n_max: usize,
    pub imperfections: Imperfections,
    full: ObservableSet,
    /// Symmetric-subspace retention probability per block under misalignment.
    pub symmetric_retention: Vec<f64>,
}

impl PhotonBlockModel {
    pub fn ideal(n_max: usize) -> Result<Self> {
        Self::new(n_max, Imperfections::default())
    }

    /// Builds `F'' = L^†(D^†(dark(F)))` for loss `L` and misalignment `D`.
    pub fn new(n_max: usize, imp: Imperfections) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::InvalidArgument("n_max must be at least 1".into()));
        }
        let raw = dark_count_postprocess(&raw_click_povm(n_max)?, imp.p_dark)?;
        let mut full = reassign_double_clicks(&raw)?;
        let mut retention = vec![1.0; n_max + 1];
        if imp.q != 0.0 {
            let mis = misalignment_channel(n_max, imp.q)?.adjoint();
            full = map_set(&full, &mis)?;
            for (n, r) in retention.iter_mut().enumerate() {
                *r = misalignment_symmetric_probability(n, imp.q)?;
            }
        } else if !(0.0..=1.0).contains(&imp.q) {
            return Err(Error::ParameterOutOfRange {
                name: "q",
                value: imp.q,
                range: "[0, 1]",
            });
        }
        if imp.eta != 1.0 {
            let loss = loss_channel(n_max, imp.eta)?.adjoint();
            full = map_set(&full, &loss)?;
        }
        Ok(Self {
            n_max,
            imperfections: imp,
            full,
            symmetric_retention: retention,
        })
    }

    /// Wraps an arbitrary block-diagonal nine-operator set.
    pub fn from_full_set(n_max: usize, full: ObservableSet) -> Result<Self> {
        if full.len() != 9 || full.dim() != fock_dim(n_max) {
            return Err(Error::InvalidArgument(format!(
                "expected 9 operators on dimension {}",
                fock_dim(n_max)
            )));
        }
        let model = Self {
            n_max,
            imperfections: Imperfections::default(),
            full,
            symmetric_retention: vec![1.0; n_max + 1],
        };
        let dev = model.block_diagonal_deviation();
        if dev > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "operators couple different photon numbers (deviation {dev:e})"
            )));
        }
        Ok(model)
    }

    pub fn full_set(&self) -> &ObservableSet {
        &self.full
    }

    pub fn dim(&self) -> usize {
        fock_dim(self.n_max)
    }

    /// Operator `i ∈ {vac, 0, 1}` of basis `beta`.
    pub fn operator(&self, beta: Basis, i: usize) -> &HermitianOperator {
        let g = BASES.iter().position(|&b| b == beta).expect("basis listed");
        &self.full.operators()[3 * g + i]
    }

    fn block(m: &DMatrix<C64>, n: usize) -> DMatrix<C64> {
        let off = fock_offset(n);
        m.view((off, off), (n + 1, n + 1)).into_owned()
    }

    /// Vacuum-outcome operator on block `n`.
    pub fn vacuum_block(&self, n: usize) -> DMatrix<C64> {
        Self::block(self.operator(Basis::Z, 0).matrix(), n)
    }

    /// `F_{0,β} - F_{1,β}` on block `n`.
    pub fn difference_block(&self, beta: Basis, n: usize) -> DMatrix<C64> {
        let d = self.operator(beta, 1).matrix() - self.operator(beta, 2).matrix();
        Self::block(&d, n)
    }

    /// Largest entry coupling different photon-number blocks.
    pub fn block_diagonal_deviation(&self) -> f64 {
        let d = self.dim();
        let mut dev = 0.0f64;
        for op in self.full.operators() {
            for r in 0..d {
                for col in 0..d {
                    let (k1, l1) = fock_occupations(r);
                    let (k2, l2) = fock_occupations(col);
                    if k1 + l1 != k2 + l2 {
                        dev = dev.max(op.matrix()[(r, col)].norm());
                    }
                }
            }
        }
        dev
    }

    /// Largest difference between the vacuum operators of different bases.
    pub fn vacuum_consistency(&self) -> f64 {
        let z = self.operator(Basis::Z, 0);
        BASES
            .iter()
            .map(|&b| self.operator(b, 0).max_abs_diff(z))
            .fold(0.0, f64::max)
    }
}

/// Applies a map (in the Heisenberg picture) to every member of a set.
pub fn map_set(set: &ObservableSet, m: &ProcessMap) -> Result<ObservableSet> {
    let ops = set
        .operators()
        .iter()
        .map(|o| m.apply(o))
        .collect::<Result<Vec<_>>>()?;
    ObservableSet::new(ops, set.labels().to_vec(), set.normalization().clone())
}

/// Rejects states with weight above the truncation; returns the state on the
/// `≤ n_max` space.
pub fn truncate_state(amplitudes: &[(usize, usize, C64)], n_max: usize) -> Result<DVector<C64>> {
    let excess: f64 = amplitudes
        .iter()
        .filter(|(k, l, _)| k + l > n_max)
        .map(|(_, _, a)| a.norm_sqr())
        .sum();
    if excess > 0.0 {
        return Err(Error::TruncationExceeded { weight: excess, n_max });
    }
    let mut v = DVector::zeros(fock_dim(n_max));
    for &(k, l, a) in amplitudes {
        v[fock_index(k, l)] += a;
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IonModel {
    Qubit,
    Qutrit,
}

/// Projectors `|0><0|, |x+><x+|, |y+><y+|` for side A (qubit) and side B
/// (qubit, or embedded in a qutrit whose third level is unobserved).
pub fn ion_trap_sets(model: IonModel) -> Result<(ObservableSet, ObservableSet)> {
    let vecs = [Basis::Z, Basis::X, Basis::Y].map(|b| b.eigenvectors().0);
    let make = |d: usize| -> Result<ObservableSet> {
        let ops = vecs
            .iter()
            .map(|u| {
                let mut v = DVector::zeros(d);
                v.rows_mut(0, 2).copy_from(u);
                HermitianOperator::from_hermitian_part(vec![d], &linalg::projector(&v))
            })
            .collect::<Result<Vec<_>>>()?;
        ObservableSet::new(ops, vec!["0".into(), "x+".into(), "y+".into()], Normalization::UnitTrace)
    };
    let a = make(2)?;
    let b = match model {
        IonModel::Qubit => make(2)?,
        IonModel::Qutrit => make(3)?,
    };
    Ok((a, b))
}

/// `(|01> + |10>)/√2`.
pub fn psi_plus() -> DVector<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DVector::from_vec(vec![ZERO, c(s, 0.0), c(s, 0.0), ZERO])
}

/// `(1-p)|ψ+><ψ+| + p I/4`.
pub fn werner_state(p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ParameterOutOfRange {
            name: "p",
            value: p,
            range: "[0, 1]",
        });
    }
    let pure = DensityMatrix::pure(vec![2, 2], &psi_plus())?;
    pure.mix(&DensityMatrix::maximally_mixed(vec![2, 2]), p)
}

/// `|00><00| + |11><11| - |x+x+><x+x+| - |x-x-><x-x-| + |y+y+><y+y+| + |y-y-><y-y-|`.
pub fn standard_witness() -> HermitianOperator {
    let mut m = DMatrix::zeros(4, 4);
    let terms = [(Basis::Z, 1.0), (Basis::X, -1.0), (Basis::Y, 1.0)];
    for (b, sign) in terms {
        let (p, q) = b.eigenvectors();
        for v in [&p, &q] {
            m += linalg::projector(&v.kronecker(v)).scale(sign);
        }
    }
    HermitianOperator::from_hermitian_part(vec![2, 2], &m).expect("4x4 witness")
}

/// `Π = |0><0| + |1><1|` on the qutrit.
pub fn qutrit_projection() -> DMatrix<C64> {
    let mut p = DMatrix::zeros(3, 3);
    p[(0, 0)] = ONE;
    p[(1, 1)] = ONE;
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &DMatrix<C64>, b: &DMatrix<C64>, tol: f64) -> bool {
        linalg::max_abs_entry(&(a - b)) <= tol
    }

    #[test]
    fn fock_layout() {
        assert_eq!(fock_dim(4), 15);
        assert_eq!(fock_dim(5), 21);
        assert_eq!(fock_index(2, 0), 3);
        assert_eq!(fock_index(0, 2), 5);
        for idx in 0..21 {
            let (k, l) = fock_occupations(idx);
            assert_eq!(fock_index(k, l), idx);
        }
    }

    #[test]
    fn embedding_examples() {
        assert!(close(&symmetric_embedding(1).unwrap(), &linalg::identity(2), 0.0));
        let v2 = symmetric_embedding(2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(v2[(0, 0)], ONE);
        assert!((v2[(1, 1)].re - s).abs() < 1e-15 && (v2[(2, 1)].re - s).abs() < 1e-15);
        assert_eq!(v2[(3, 2)], ONE);
        for n in 1..=5 {
            let v = symmetric_embedding(n).unwrap();
            assert!(close(&(v.adjoint() * &v), &linalg::identity(n + 1), 1e-12));
        }
        let v3 = symmetric_embedding(3).unwrap();
        assert!(v3.column(1).dotc(&v3.column(0)).norm() < 1e-15);
    }

    #[test]
    fn click_examples() {
        let b1 = click_operators(1, Basis::X).unwrap();
        assert!(linalg::max_abs_entry(&b1.double) < 1e-15);
        let b2 = click_operators(2, Basis::Z).unwrap();
        let mut expect = DMatrix::zeros(3, 3);
        expect[(1, 1)] = ONE;
        assert!(close(&b2.double, &expect, 1e-15));
        for n in 0..=5 {
            for beta in BASES {
                let b = click_operators(n, beta).unwrap();
                let sum = &b.vacuum + &b.zero + &b.one + &b.double;
                assert!(close(&sum, &linalg::identity(n + 1), 1e-12));
            }
        }
        assert!(matches!("w".parse::<Basis>(), Err(Error::InvalidBasis(_))));
    }

    #[test]
    fn full_operator_examples() {
        let f = full_click_operators(2).unwrap();
        // single-photon block of F_{0,z} projects onto |1,0> = |0>
        let f0z = f.operators()[7].matrix();
        assert_eq!(f.labels()[7], "0_z");
        assert!((f0z[(1, 1)] - ONE).norm() < 1e-15 && f0z[(2, 2)].norm() < 1e-15);
        let blk = f0z.view((3, 3), (3, 3)).into_owned();
        let expect = DMatrix::from_diagonal(&DVector::from_vec(vec![ONE, c(0.5, 0.0), ZERO]));
        assert!(close(&blk, &expect, 1e-15));
        // vacuum projector
        assert_eq!(f.operators()[6].matrix()[(0, 0)], ONE);
    }

    #[test]
    fn difference_examples() {
        for beta in BASES {
            assert!(close(&difference_block(1, beta).unwrap(), &beta.pauli(), 1e-15));
        }
        let d2 = difference_block(2, Basis::Z).unwrap();
        let expect = DMatrix::from_diagonal(&DVector::from_vec(vec![ONE, ZERO, -ONE]));
        assert!(close(&d2, &expect, 1e-15));
        for n in 1..=4 {
            for beta in BASES {
                let v = symmetric_embedding(n).unwrap();
                let qubit = qubit_difference_operator(n, beta);
                assert!(close(&qubit, &permutation_expansion(n, beta), 1e-12));
                let photon = v.adjoint() * &qubit * &v;
                assert!(close(&photon, &difference_block(n, beta).unwrap(), 1e-12));
            }
        }
    }

    #[test]
    fn target_set() {
        let t = target_click_operators().unwrap();
        assert!(t.is_tomographically_complete());
        assert_eq!(t.dim(), 3);
        for (g, beta) in BASES.iter().enumerate() {
            let d = t.operators()[3 * g + 1].sub(&t.operators()[3 * g + 2]).unwrap();
            let q = d.matrix().view((1, 1), (2, 2)).into_owned();
            assert!(close(&q, &beta.pauli(), 1e-15));
        }
    }

    #[test]
    fn loss_examples() {
        let id = loss_channel(3, 1.0).unwrap();
        assert!(close(id.choi(), ProcessMap::identity(10).choi(), 1e-14));
        assert!(id.is_trace_preserving());
        let zero = loss_channel(3, 0.0).unwrap();
        let rho = HermitianOperator::identity(vec![10]).scale(0.1);
        let out = zero.apply(&rho).unwrap();
        assert!((out.matrix()[(0, 0)].re - 1.0).abs() < 1e-14);
        let l = loss_channel(2, 0.7).unwrap();
        assert!(l.is_trace_preserving());
        let mut one = DMatrix::zeros(6, 6);
        one[(1, 1)] = ONE;
        let out = l.apply_matrix(&one);
        assert!((out[(1, 1)].re - 0.7).abs() < 1e-14 && (out[(0, 0)].re - 0.3).abs() < 1e-14);
        assert!(loss_channel(2, 1.5).is_err());
    }

    #[test]
    fn dark_count_examples() {
        let raw = raw_click_povm(2).unwrap();
        let same = dark_count_postprocess(&raw, 0.0).unwrap();
        for (a, b) in raw.operators().iter().zip(same.operators()) {
            assert!(a.max_abs_diff(b) < 1e-15);
        }
        let p = 0.1;
        let dc = dark_count_postprocess(&raw, p).unwrap();
        assert!((dc.operators()[0].matrix()[(0, 0)].re - 0.81).abs() < 1e-15);
        assert!(dark_count_postprocess(&raw, 1.0).is_err());
    }

    #[test]
    fn misalignment_examples() {
        let id = misalignment_channel(3, 0.0).unwrap();
        assert!(close(id.choi(), ProcessMap::identity(10).choi(), 1e-12));
        let full = misalignment_channel(1, 1.0).unwrap();
        let mut zero = DMatrix::zeros(3, 3);
        zero[(1, 1)] = ONE;
        let out = full.apply_matrix(&zero);
        assert!((out[(1, 1)].re - 0.5).abs() < 1e-14 && (out[(2, 2)].re - 0.5).abs() < 1e-14);
        let half = misalignment_channel(1, 0.5).unwrap();
        let (plus, _) = Basis::X.eigenvectors();
        let mut v = DVector::zeros(3);
        v.rows_mut(1, 2).copy_from(&plus);
        let out = half.apply_matrix(&linalg::projector(&v));
        let q = out.view((1, 1), (2, 2)).into_owned();
        let bloch_x = linalg::trace_product(&q, &linalg::pauli_x()).re;
        assert!((bloch_x - 0.5).abs() < 1e-14);
        for q in [0.1, 0.5, 1.0] {
            let m = misalignment_channel(4, q).unwrap();
            assert!(m.is_trace_preserving());
            assert!(m.min_choi_eigenvalue().unwrap() > -1e-10);
        }
        assert!(misalignment_symmetric_probability(2, 0.3).unwrap() < 1.0);
    }

    #[test]
    fn imperfect_models_are_povms() {
        for &(eta, p_dark, q) in &[(0.8, 0.0, 0.0), (1.0, 0.05, 0.0), (1.0, 0.0, 0.2), (0.6, 0.02, 0.1)] {
            let m = PhotonBlockModel::new(3, Imperfections { eta, p_dark, q }).unwrap();
            assert!(m.full_set().is_povm());
            assert!(m.block_diagonal_deviation() < 1e-12);
            assert!(m.vacuum_consistency() < 1e-12);
        }
    }

    #[test]
    fn ion_trap_examples() {
        let (a, b) = ion_trap_sets(IonModel::Qutrit).unwrap();
        for op in a.operators() {
            assert!((op.trace() - 1.0).abs() < 1e-15);
        }
        for op in b.operators() {
            assert_eq!(op.dim(), 3);
            assert!(op.matrix().column(2).norm() == 0.0);
        }
        let (a, b) = ion_trap_sets(IonModel::Qubit).unwrap();
        let ab = a.tensor(&b).unwrap();
        let e = ab.expectations(werner_state(1.0).unwrap().op()).unwrap();
        assert!(e.iter().all(|x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn werner_and_witness() {
        let w1 = werner_state(1.0).unwrap();
        assert!(w1.op().max_abs_diff(&HermitianOperator::identity(vec![2, 2]).scale(0.25)) < 1e-15);
        assert!((werner_state(0.0).unwrap().purity() - 1.0).abs() < 1e-14);
        let w = standard_witness();
        assert!((w.inner(w1.op()).unwrap() - 0.5).abs() < 1e-14);
        assert!(werner_state(1.2).is_err());
    }

    #[test]
    fn truncation_rejected() {
        let amps = [(1, 0, ONE), (2, 1, c(0.1, 0.0))];
        assert!(matches!(truncate_state(&amps, 2), Err(Error::TruncationExceeded { .. })));
        assert!(truncate_state(&amps, 3).is_ok());
    }
}
