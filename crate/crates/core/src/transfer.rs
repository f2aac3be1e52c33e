//! Fine/coarse grid transfer and the cell-average observation operator.

use crate::grid::{Field, GridError, GridSpec};

/// How a coarse cell value is computed from its fine children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RestrictionRule {
    /// Exact volume-weighted mean of all `r × r` children.
    #[default]
    CellAverage,
    /// Mean of the four children sitting in the corners of the coarse cell.
    /// Cheaper, not mean-preserving; kept for comparison runs.
    CornerPoints,
}

/// A fine grid paired with a coarser grid whose cells are exact unions of
/// `ratio × ratio` fine cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferPair {
    fine: GridSpec,
    coarse: GridSpec,
    ratio: usize,
}

impl TransferPair {
    pub fn new(fine: GridSpec, coarse: GridSpec) -> Result<Self, GridError> {
        if fine.length() != coarse.length() {
            return Err(GridError::DomainMismatch {
                fine: fine.length(),
                coarse: coarse.length(),
            });
        }
        if !fine.nx().is_multiple_of(coarse.nx()) {
            return Err(GridError::NotDivisible {
                fine: fine.nx(),
                coarse: coarse.nx(),
            });
        }
        Ok(Self {
            fine,
            coarse,
            ratio: fine.nx() / coarse.nx(),
        })
    }

    pub fn fine(&self) -> &GridSpec {
        &self.fine
    }

    pub fn coarse(&self) -> &GridSpec {
        &self.coarse
    }

    pub fn ratio(&self) -> usize {
        self.ratio
    }

    /// Observation resolution `H`.
    pub fn coarse_h(&self) -> f64 {
        self.coarse.h()
    }

    pub(crate) fn restrict_slice(&self, fine: &[f64], coarse: &mut [f64], rule: RestrictionRule) {
        let r = self.ratio;
        let nf = self.fine.nx();
        let nc = self.coarse.nx();
        match rule {
            RestrictionRule::CellAverage => {
                let weight = 1.0 / (r * r) as f64;
                for cj in 0..nc {
                    for ci in 0..nc {
                        let mut sum = 0.0;
                        for dj in 0..r {
                            let row = (cj * r + dj) * nf + ci * r;
                            sum += fine[row..row + r].iter().sum::<f64>();
                        }
                        coarse[cj * nc + ci] = sum * weight;
                    }
                }
            }
            RestrictionRule::CornerPoints => {
                let last = r - 1;
                for cj in 0..nc {
                    for ci in 0..nc {
                        let (i0, j0) = (ci * r, cj * r);
                        let at = |di: usize, dj: usize| fine[(j0 + dj) * nf + i0 + di];
                        coarse[cj * nc + ci] = 0.25 * (at(0, 0) + at(last, 0) + at(0, last) + at(last, last));
                    }
                }
            }
        }
    }

    pub(crate) fn prolong_slice(&self, coarse: &[f64], fine: &mut [f64]) {
        let r = self.ratio;
        let nf = self.fine.nx();
        let nc = self.coarse.nx();
        for j in 0..nf {
            let crow = (j / r) * nc;
            let frow = j * nf;
            for i in 0..nf {
                fine[frow + i] = coarse[crow + i / r];
            }
        }
    }

    /// `prolong(restrict(fine))` into `out`, using `coarse` as scratch.
    pub(crate) fn observe_slice(&self, fine: &[f64], coarse: &mut [f64], out: &mut [f64]) {
        self.restrict_slice(fine, coarse, RestrictionRule::CellAverage);
        self.prolong_slice(coarse, out);
    }
}

/// Averages a fine field onto the coarse grid.
pub fn restrict(f: &Field, pair: &TransferPair) -> Result<Field, GridError> {
    restrict_with(f, pair, RestrictionRule::CellAverage)
}

pub fn restrict_with(f: &Field, pair: &TransferPair, rule: RestrictionRule) -> Result<Field, GridError> {
    pair.fine.ensure_same(f.grid())?;
    let mut out = vec![0.0; pair.coarse.cell_count()];
    pair.restrict_slice(f.values(), &mut out, rule);
    Ok(Field::from_raw(pair.coarse, out))
}

/// Piecewise-constant injection: every fine cell takes its parent's value.
pub fn prolong(c: &Field, pair: &TransferPair) -> Result<Field, GridError> {
    pair.coarse.ensure_same(c.grid())?;
    let mut out = vec![0.0; pair.fine.cell_count()];
    pair.prolong_slice(c.values(), &mut out);
    Ok(Field::from_raw(pair.fine, out))
}

/// Cell-average interpolant onto the coarse cells, represented on the fine grid.
pub fn observe(f: &Field, pair: &TransferPair) -> Result<Field, GridError> {
    pair.fine.ensure_same(f.grid())?;
    let mut coarse = vec![0.0; pair.coarse.cell_count()];
    let mut out = vec![0.0; pair.fine.cell_count()];
    pair.observe_slice(f.values(), &mut coarse, &mut out);
    Ok(Field::from_raw(pair.fine, out))
}
