//! A quantity defined on the populated worker state space.
//!
//! Five blocks, one per labor market status. Prejudiced-sector blocks carry no
//! race dimension: black workers are never matched with `p` firms, so those
//! states hold neither mass nor policies.

use ndarray::{Array2, Array3};

/// One `f64` per populated `(e, R, s, a)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    /// Employed at a non-prejudiced firm, `[race, s, a]`.
    pub emp_np: Array3<f64>,
    /// Employed at a prejudiced firm (white only), `[s, a]`.
    pub emp_p: Array2<f64>,
    /// Unemployed, benefit-eligible, last employer non-prejudiced, `[race, s, a]`.
    pub ui_np: Array3<f64>,
    /// Unemployed, benefit-eligible, last employer prejudiced (white only), `[s, a]`.
    pub ui_p: Array2<f64>,
    /// Unemployed, ineligible for benefits, `[race, s, a]`.
    pub un: Array3<f64>,
}

impl StateField {
    pub fn zeros(n_s: usize, n_a: usize) -> StateField {
        StateField {
            emp_np: Array3::zeros((2, n_s, n_a)),
            emp_p: Array2::zeros((n_s, n_a)),
            ui_np: Array3::zeros((2, n_s, n_a)),
            ui_p: Array2::zeros((n_s, n_a)),
            un: Array3::zeros((2, n_s, n_a)),
        }
    }

    pub fn n_s(&self) -> usize {
        self.emp_np.shape()[1]
    }

    pub fn n_a(&self) -> usize {
        self.emp_np.shape()[2]
    }

    /// Sup-norm distance across every populated cell.
    pub fn sup_diff(&self, other: &StateField) -> f64 {
        let mut d: f64 = 0.0;
        for (a, b) in self.iter_blocks().zip(other.iter_blocks()) {
            for (x, y) in a.iter().zip(b.iter()) {
                d = d.max((x - y).abs());
            }
        }
        d
    }

    /// L1 distance across every populated cell.
    pub fn l1_diff(&self, other: &StateField) -> f64 {
        let mut d = 0.0;
        for (a, b) in self.iter_blocks().zip(other.iter_blocks()) {
            for (x, y) in a.iter().zip(b.iter()) {
                d += (x - y).abs();
            }
        }
        d
    }

    /// Sum over every populated cell.
    pub fn total(&self) -> f64 {
        self.iter_blocks().map(|b| b.iter().sum::<f64>()).sum()
    }

    pub fn fill(&mut self, v: f64) {
        for b in self.iter_blocks_mut() {
            b.fill(v);
        }
    }

    pub fn iter_blocks(&self) -> impl Iterator<Item = &[f64]> {
        [
            self.emp_np.as_slice().unwrap(),
            self.emp_p.as_slice().unwrap(),
            self.ui_np.as_slice().unwrap(),
            self.ui_p.as_slice().unwrap(),
            self.un.as_slice().unwrap(),
        ]
        .into_iter()
    }

    pub fn iter_blocks_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        [
            self.emp_np.as_slice_mut().unwrap(),
            self.emp_p.as_slice_mut().unwrap(),
            self.ui_np.as_slice_mut().unwrap(),
            self.ui_p.as_slice_mut().unwrap(),
            self.un.as_slice_mut().unwrap(),
        ]
        .into_iter()
    }

    /// Every populated cell is finite.
    pub fn all_finite(&self) -> bool {
        self.iter_blocks().all(|b| b.iter().all(|x| x.is_finite()))
    }
}

/// Contiguous `(s, a)` row of a `[race, s, a]` array.
#[inline]
pub fn row3(arr: &Array3<f64>, r: usize, s: usize) -> &[f64] {
    let (_, n_s, n_a) = arr.dim();
    let flat = arr.as_slice().expect("standard layout");
    &flat[(r * n_s + s) * n_a..(r * n_s + s) * n_a + n_a]
}

/// Contiguous `a` row of an `[s, a]` array.
#[inline]
pub fn row2(arr: &Array2<f64>, s: usize) -> &[f64] {
    let (_, n_a) = arr.dim();
    let flat = arr.as_slice().expect("standard layout");
    &flat[s * n_a..s * n_a + n_a]
}
