//! Independent reference solver for the integration tests.
//!
//! Formulates the grid with every DER current, every bus voltage and the PCC
//! voltage as unknowns (2(n+1)+1 of them) and solves it with a hand-written
//! Gaussian elimination. Shares nothing with the library's solvers beyond
//! the input types.

#![allow(dead_code)]

use gridcompute::{ControlProgram, GridSpec};

/// DER currents and bus voltages from the reference solve.
pub struct Reference {
    pub i: Vec<f64>,
    pub v: Vec<f64>,
    pub v_pcc: f64,
}

impl Reference {
    pub fn i_out_down(&self, grid: &GridSpec) -> f64 {
        let d = grid.n_upstream();
        (self.v_pcc - self.v[d]) / grid.downstream.r_line
    }
}

fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        assert!(a[pivot][col].abs() > 1e-300, "reference system is singular");
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            let pivot_row = a[col].clone();
            for (x, p) in a[row].iter_mut().zip(&pivot_row).skip(col) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

pub fn reference_solve(grid: &GridSpec, program: &ControlProgram) -> Reference {
    let m = grid.n_upstream() + 1;
    let size = 2 * m + 1;
    let (cur, volt, pcc) = (|k: usize| k, |k: usize| m + k, 2 * m);
    let mut a = vec![vec![0.0; size]; size];
    let mut b = vec![0.0; size];
    let ders: Vec<_> = grid.upstream.iter().chain([&grid.downstream]).collect();
    let mut row = 0;

    // droop: V_k - (R_d + ΔR) i_k = V_ref + V_sec + ΔV_ref
    for (k, der) in ders.iter().enumerate() {
        a[row][volt(k)] = 1.0;
        a[row][cur(k)] = -(der.r_droop + program.delta_r[k]);
        b[row] = der.v_ref + program.v_sec[k] + program.dv_ref.get(k).copied().unwrap_or(0.0);
        row += 1;
    }
    // upstream lines: (V_k - V_pcc)/r_k = i_k - V_k/R_load
    for (k, der) in ders[..m - 1].iter().enumerate() {
        a[row][volt(k)] = 1.0 / der.r_line + 1.0 / der.r_load;
        a[row][pcc] = -1.0 / der.r_line;
        a[row][cur(k)] = -1.0;
        row += 1;
    }
    // downstream line: (V_pcc - V_5)/r_5 = -i_5 + V_5/R_load
    let d = m - 1;
    let down = ders[d];
    a[row][pcc] = 1.0 / down.r_line;
    a[row][volt(d)] = -1.0 / down.r_line - 1.0 / down.r_load;
    a[row][cur(d)] = 1.0;
    row += 1;
    // PCC: Σ (i_k - V_k/R_load) = -i_5 + V_5/R_load
    for (k, der) in ders.iter().enumerate() {
        a[row][cur(k)] = 1.0;
        a[row][volt(k)] = -1.0 / der.r_load;
    }

    let x = gauss(a, b);
    Reference {
        i: x[..m].to_vec(),
        v: x[m..2 * m].to_vec(),
        v_pcc: x[pcc],
    }
}

/// Relative gap with an absolute floor of one unit.
pub fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
