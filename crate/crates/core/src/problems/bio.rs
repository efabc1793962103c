//! Moiety-conserved steady states of mass-action reaction networks.
//!
//! With `x = ln c`, forward/reverse stoichiometry `F`, `R` (species x
//! reactions), log rate constants `k = [ln kf; ln kr]`, `N = R - F`, a row
//! basis `Nbar` of `N` and a left null space basis `L` of `N`, the residual is
//!
//! ```text
//! h(x) = [ Nbar (exp(ln kf + F^T x) - exp(ln kr + R^T x)) ]
//!        [ L exp(x) - l0                                  ]
//! ```
//!
//! which has `rank(N) + (m - rank(N)) = m` components.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result, Violation};
use crate::problem::NlsProblem;
use crate::problems::stoich::{left_nullspace, positive_conservation_vector, reduce_rows};

/// Largest exponent accepted before declaring overflow.
pub const MAX_EXPONENT: f64 = 700.0;

/// Integer matrix stored as a list of `(row, value)` entries per column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseIntMatrix {
    nrows: usize,
    ncols: usize,
    cols: Vec<Vec<(usize, i64)>>,
}

impl SparseIntMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            cols: vec![Vec::new(); ncols],
        }
    }

    /// Builds from `(row, col, value)` triplets; zeros are dropped and
    /// repeated positions are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, i64)]) -> Result<Self> {
        let mut m = Self::zeros(nrows, ncols);
        for &(i, j, v) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::Dimension(format!(
                    "entry ({i}, {j}) outside a {nrows}x{ncols} matrix"
                )));
            }
            m.add(i, j, v);
        }
        Ok(m)
    }

    pub fn from_dense(rows: &[&[i64]]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m.add(i, j, v);
            }
        }
        m
    }

    fn add(&mut self, i: usize, j: usize, v: i64) {
        let col = &mut self.cols[j];
        match col.binary_search_by_key(&i, |e| e.0) {
            Ok(pos) => {
                col[pos].1 += v;
                if col[pos].1 == 0 {
                    col.remove(pos);
                }
            }
            Err(pos) if v != 0 => col.insert(pos, (i, v)),
            Err(_) => {}
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn col(&self, j: usize) -> &[(usize, i64)] {
        &self.cols[j]
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        let col = &self.cols[j];
        col.binary_search_by_key(&i, |e| e.0).map_or(0, |p| col[p].1)
    }

    /// `(row, col, value)` in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, i64)> + '_ {
        self.cols
            .iter()
            .enumerate()
            .flat_map(|(j, c)| c.iter().map(move |&(i, v)| (i, j, v)))
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] = v as f64;
        }
        d
    }

    fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (i, j, v) in other.triplets() {
            out.add(i, j, -v);
        }
        out
    }
}

/// How the moiety totals `l0` are given.
#[derive(Debug, Clone, PartialEq)]
pub enum MoietyTotals {
    Direct(DVector<f64>),
    /// Positive concentrations `c0`; `l0 = L c0`.
    FromConcentrations(DVector<f64>),
}

#[derive(Debug, Clone)]
pub struct BioNetwork {
    name: String,
    f: SparseIntMatrix,
    r: SparseIntMatrix,
    k: DVector<f64>,
    l0: DVector<f64>,
    c0: Option<DVector<f64>>,
    /// Net stoichiometry `R - F`.
    net: SparseIntMatrix,
    /// Rows of `N` forming `Nbar`.
    basis_rows: Vec<usize>,
    /// `position[i]` is the row of `Nbar` holding row `i` of `N`.
    position: Vec<Option<usize>>,
    l: DMatrix<f64>,
    conservation: Option<DVector<f64>>,
    warnings: Vec<String>,
}

impl BioNetwork {
    /// Builds and validates a network. All invariant violations are
    /// collected and returned together.
    pub fn new(
        name: impl Into<String>,
        f: SparseIntMatrix,
        r: SparseIntMatrix,
        k: DVector<f64>,
        totals: MoietyTotals,
    ) -> Result<Self> {
        let name = name.into();
        let mut bad = Vec::new();
        let mut violation = |invariant: &'static str, detail: String| bad.push(Violation { invariant, detail });

        if (f.nrows(), f.ncols()) != (r.nrows(), r.ncols()) {
            violation(
                "F and R dimensions",
                format!("F is {}x{}, R is {}x{}", f.nrows(), f.ncols(), r.nrows(), r.ncols()),
            );
            return Err(Error::Validation(bad));
        }
        let (m, n) = (f.nrows(), f.ncols());
        if m == 0 || n == 0 {
            violation("nonempty network", format!("{m} species, {n} reactions"));
            return Err(Error::Validation(bad));
        }
        for (label, mat) in [("F nonnegative", &f), ("R nonnegative", &r)] {
            for (i, j, v) in mat.triplets().filter(|e| e.2 < 0) {
                violation(label, format!("entry ({}, {}) = {v}", i + 1, j + 1));
            }
        }
        for i in 0..m {
            let used = (0..n).any(|j| f.get(i, j) != 0 || r.get(i, j) != 0);
            if !used {
                violation("species participation", format!("species {} appears in no reaction", i + 1));
            }
        }
        let net = r.sub(&f);
        for j in 0..n {
            let c = net.col(j).len();
            if c < 2 {
                violation(
                    "column cardinality",
                    format!("column {} of R - F has {c} nonzero(s), at least two required", j + 1),
                );
            }
        }
        if k.len() != 2 * n {
            violation("k length", format!("k has {} entries, expected 2n = {}", k.len(), 2 * n));
        } else if let Some(i) = k.iter().position(|v| !v.is_finite()) {
            violation("k finite", format!("k[{}] = {}", i + 1, k[i]));
        }

        let dense = net.to_dense();
        let basis = reduce_rows(&dense);
        let rank = basis.rank();
        let l = left_nullspace(&dense);
        if rank + l.nrows() != m {
            violation(
                "rank consistency",
                format!("rank {rank} + nullity {} != {m} species", l.nrows()),
            );
        }

        let (l0, c0) = match totals {
            MoietyTotals::Direct(l0) => (l0, None),
            MoietyTotals::FromConcentrations(c0) => {
                if c0.len() != m {
                    violation("c0 length", format!("c0 has {} entries, expected {m}", c0.len()));
                    (DVector::zeros(l.nrows()), None)
                } else {
                    if let Some(i) = c0.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
                        violation("c0 positive", format!("c0[{}] = {}", i + 1, c0[i]));
                    }
                    (&l * &c0, Some(c0))
                }
            }
        };
        if l0.len() != l.nrows() {
            violation(
                "l0 length",
                format!("l0 has {} entries, expected m - rank = {}", l0.len(), l.nrows()),
            );
        } else if c0.is_none() {
            // Moieties of an arbitrary basis can have signed totals when
            // derived from c0, so positivity is only required of given l0.
            if let Some(i) = l0.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
                violation("l0 positive", format!("l0[{}] = {}", i + 1, l0[i]));
            }
        }
        if !bad.is_empty() {
            return Err(Error::Validation(bad));
        }

        let mut warnings = Vec::new();
        if l.nrows() == 0 {
            warnings.push("N has full row rank: no moiety conservation constraints".to_string());
        }
        let conservation = positive_conservation_vector(&l, 10_000);
        if conservation.is_none() {
            warnings.push("no strictly positive conserved vector found (mass conservation)".to_string());
        }
        let mut fr = f.to_dense();
        fr = fr.resize_horizontally(2 * n, 0.0);
        fr.view_mut((0, n), (m, n)).copy_from(&r.to_dense());
        let rank_fr = reduce_rows(&fr).rank();
        if rank_fr < m {
            warnings.push(format!("rank([F, R]) = {rank_fr} < {m} species (kinetic consistency)"));
        }
        for w in &warnings {
            log::warn!("{name}: {w}");
        }

        let mut position = vec![None; m];
        for (p, &i) in basis.rows.iter().enumerate() {
            position[i] = Some(p);
        }
        Ok(Self {
            name,
            f,
            r,
            k,
            l0,
            c0,
            net,
            basis_rows: basis.rows,
            position,
            l,
            conservation,
            warnings,
        })
    }

    pub fn species(&self) -> usize {
        self.f.nrows()
    }

    pub fn reactions(&self) -> usize {
        self.f.ncols()
    }

    pub fn rank(&self) -> usize {
        self.basis_rows.len()
    }

    pub fn forward(&self) -> &SparseIntMatrix {
        &self.f
    }

    pub fn reverse(&self) -> &SparseIntMatrix {
        &self.r
    }

    pub fn net(&self) -> &SparseIntMatrix {
        &self.net
    }

    pub fn log_rates(&self) -> &DVector<f64> {
        &self.k
    }

    pub fn moiety_totals(&self) -> &DVector<f64> {
        &self.l0
    }

    pub fn initial_concentrations(&self) -> Option<&DVector<f64>> {
        self.c0.as_ref()
    }

    pub fn basis_rows(&self) -> &[usize] {
        &self.basis_rows
    }

    /// `Nbar` as a dense `rank x reactions` matrix.
    pub fn nbar(&self) -> DMatrix<f64> {
        self.net.to_dense().select_rows(self.basis_rows.iter())
    }

    pub fn moieties(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn conservation_vector(&self) -> Option<&DVector<f64>> {
        self.conservation.as_ref()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Forward and reverse reaction rates at `x = ln c`.
    pub fn rates(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        let n = self.reactions();
        let rate = |mat: &SparseIntMatrix, offset: usize, which: &str| -> Result<DVector<f64>> {
            let mut v = DVector::zeros(n);
            for j in 0..n {
                let arg = self.k[offset + j] + mat.col(j).iter().map(|&(i, s)| s as f64 * x[i]).sum::<f64>();
                if !(arg <= MAX_EXPONENT) {
                    return Err(Error::breakdown(
                        format!("{}: {which} rate exponent of reaction {j} is {arg:e}", self.name),
                        x.as_slice(),
                    ));
                }
                v[j] = arg.exp();
            }
            Ok(v)
        };
        Ok((rate(&self.f, 0, "forward")?, rate(&self.r, n, "reverse")?))
    }

    fn concentrations(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if let Some(i) = x.iter().position(|v| !(*v <= MAX_EXPONENT)) {
            return Err(Error::breakdown(
                format!("{}: concentration exponent of species {i} is {:e}", self.name, x[i]),
                x.as_slice(),
            ));
        }
        Ok(x.map(f64::exp))
    }

    /// `N (v_f - v_r)` with the full net stoichiometry.
    pub fn full_flux_balance(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let (vf, vr) = self.rates(x)?;
        let mut out = DVector::zeros(self.species());
        for j in 0..self.reactions() {
            let v = vf[j] - vr[j];
            for &(i, s) in self.net.col(j) {
                out[i] += s as f64 * v;
            }
        }
        Ok(out)
    }
}

impl NlsProblem for BioNetwork {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim_x(&self) -> usize {
        self.species()
    }

    fn dim_h(&self) -> usize {
        self.species()
    }

    fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let (vf, vr) = self.rates(x)?;
        let rank = self.rank();
        let mut h = DVector::zeros(self.species());
        for j in 0..self.reactions() {
            let v = vf[j] - vr[j];
            for &(i, s) in self.net.col(j) {
                if let Some(p) = self.position[i] {
                    h[p] += s as f64 * v;
                }
            }
        }
        let c = self.concentrations(x)?;
        let moiety = &self.l * c - &self.l0;
        h.rows_mut(rank, moiety.len()).copy_from(&moiety);
        Ok(h)
    }

    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let (vf, vr) = self.rates(x)?;
        let m = self.species();
        let rank = self.rank();
        let mut jac = DMatrix::zeros(m, m);
        // d(v_f - v_r)_j / dx = vf_j F[:, j]^T - vr_j R[:, j]^T
        for j in 0..self.reactions() {
            for &(a, s) in self.net.col(j) {
                let Some(p) = self.position[a] else { continue };
                let s = s as f64;
                for &(i, fij) in self.f.col(j) {
                    jac[(p, i)] += s * vf[j] * fij as f64;
                }
                for &(i, rij) in self.r.col(j) {
                    jac[(p, i)] -= s * vr[j] * rij as f64;
                }
            }
        }
        let c = self.concentrations(x)?;
        for (row, l_row) in self.l.row_iter().enumerate() {
            for i in 0..m {
                jac[(rank + row, i)] = l_row[i] * c[i];
            }
        }
        Ok(jac)
    }
}

/// Linear chain `S1 <=> S2 <=> ... <=> Sm` with unit rate constants and
/// moiety totals from `c0`.
pub fn chain_network(name: &str, species: usize, c0: DVector<f64>) -> Result<BioNetwork> {
    let n = species.saturating_sub(1);
    let mut f = Vec::new();
    let mut r = Vec::new();
    for j in 0..n {
        f.push((j, j, 1));
        r.push((j + 1, j, 1));
    }
    BioNetwork::new(
        name,
        SparseIntMatrix::from_triplets(species, n, &f)?,
        SparseIntMatrix::from_triplets(species, n, &r)?,
        DVector::zeros(2 * n),
        MoietyTotals::FromConcentrations(c0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab(l0: f64) -> BioNetwork {
        BioNetwork::new(
            "ab",
            SparseIntMatrix::from_dense(&[&[1], &[0]]),
            SparseIntMatrix::from_dense(&[&[0], &[1]]),
            DVector::zeros(2),
            MoietyTotals::Direct(DVector::from_element(1, l0)),
        )
        .unwrap()
    }

    #[test]
    fn symmetric_steady_state() {
        let net = ab(2.0);
        assert_eq!(net.rank(), 1);
        assert_eq!(net.residual(&DVector::zeros(2)).unwrap(), DVector::zeros(2));
    }

    #[test]
    fn residual_by_hand() {
        let net = ab(2.0);
        let h = net.residual(&DVector::from_vec(vec![2f64.ln(), 0.0])).unwrap();
        assert!((h[0] + 1.0).abs() < 1e-15);
        assert!((h[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn jacobian_by_hand() {
        let net = ab(2.0);
        let j = net.jacobian(&DVector::zeros(2)).unwrap();
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, 1.0]));
    }

    #[test]
    fn moieties_annihilate_full_flux() {
        let net = chain_network("chain", 4, DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        for x in [vec![0.3, -0.2, 1.1, 0.0], vec![-2.0, 2.0, 0.5, -0.7]] {
            let v = net.full_flux_balance(&DVector::from_vec(x)).unwrap();
            assert!((net.moieties() * v).amax() <= 1e-9);
        }
    }

    #[test]
    fn overflow_is_a_breakdown() {
        let net = ab(2.0);
        let err = net.residual(&DVector::from_vec(vec![800.0, 0.0])).unwrap_err();
        match err {
            Error::NumericalBreakdown { context, .. } => assert!(context.contains("reaction 0")),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn negative_entry_is_named() {
        let err = BioNetwork::new(
            "bad",
            SparseIntMatrix::from_dense(&[&[1], &[-1]]),
            SparseIntMatrix::from_dense(&[&[0], &[1]]),
            DVector::zeros(2),
            MoietyTotals::Direct(DVector::from_element(1, 1.0)),
        )
        .unwrap_err();
        let Error::Validation(v) = err else { panic!() };
        assert!(v.iter().any(|v| v.invariant == "F nonnegative" && v.detail.contains("(2, 1)")));
    }

    #[test]
    fn single_species_column_rejected() {
        let err = BioNetwork::new(
            "bad",
            SparseIntMatrix::from_dense(&[&[1, 1], &[0, 0]]),
            SparseIntMatrix::from_dense(&[&[0, 2], &[1, 0]]),
            DVector::zeros(4),
            MoietyTotals::Direct(DVector::from_element(1, 1.0)),
        )
        .unwrap_err();
        let Error::Validation(v) = err else { panic!() };
        assert!(v.iter().any(|v| v.invariant == "column cardinality" && v.detail.contains("column 2")));
    }

    #[test]
    fn totals_from_concentrations() {
        let net = chain_network("chain3", 3, DVector::from_element(3, 1.0)).unwrap();
        assert_eq!(net.rank(), 2);
        assert_eq!(net.moieties().nrows(), 1);
        // l0 = L c0 with L proportional to (1, 1, 1)
        let l = net.moieties().row(0);
        assert!((net.moiety_totals()[0] - (l[0] + l[1] + l[2])).abs() < 1e-12);
        assert!(net.conservation_vector().is_some());
        assert!(net.warnings().is_empty(), "{:?}", net.warnings());
    }

    #[test]
    fn jacobian_shape() {
        let net = chain_network("chain5", 5, DVector::from_element(5, 1.0)).unwrap();
        let j = net.jacobian(&DVector::zeros(5)).unwrap();
        assert_eq!(j.shape(), (5, 5));
    }
}
