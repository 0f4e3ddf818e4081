//! Steady state of a programmed grid, computed two independent ways.
//!
//! [`solve_nodal`] assembles the droop and KCL equations as a dense linear
//! system in the bus voltages and the PCC voltage. [`closed_form_downstream`]
//! evaluates the star-network elimination directly. The two must agree; the
//! test suites hold them to 1e-9.

use nalgebra::{DMatrix, DVector};

use crate::grid::{validate, ControlProgram, DerSpec, GridSpec, OperatingPoint};
use crate::{Error, Result};

/// Pivots smaller than this fraction of the largest matrix entry are treated as zero.
const PIVOT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveSettings {
    /// Largest scaled circuit-law residual accepted at a solution.
    pub residual_tol: f64,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self { residual_tol: 1e-9 }
    }
}

impl SolveSettings {
    pub fn with_tolerance(residual_tol: f64) -> Result<Self> {
        if residual_tol > 0.0 && residual_tol.is_finite() {
            Ok(Self { residual_tol })
        } else {
            Err(Error::Config(format!(
                "residual tolerance must be positive, got {residual_tol}"
            )))
        }
    }
}

/// `λ = 1 - (R_d + ΔR) / R_load`.
pub fn lambda_of(der: &DerSpec, delta_r: f64) -> f64 {
    der.lambda(delta_r)
}

/// Solves the full nodal system and checks every circuit law at the result.
///
/// Unknowns are the `n + 1` bus voltages followed by the PCC voltage. Each
/// DER contributes its droop law with the DER current expressed through the
/// line and load currents; the last row is KCL at the PCC.
pub fn solve_nodal(
    grid: &GridSpec,
    program: &ControlProgram,
    settings: &SolveSettings,
) -> Result<OperatingPoint> {
    validate(grid, program).into_result()?;
    let n = grid.n_upstream();
    let d = grid.downstream_index();
    let pcc = n + 1;
    let size = n + 2;
    let references = program.effective_references(grid);

    let mut a = DMatrix::<f64>::zeros(size, size);
    let mut b = DVector::<f64>::zeros(size);

    // V_k - R_k·[(V_k - V_pcc)/r_k + V_k/R_load,k] = E_k
    for (k, der) in grid.upstream.iter().enumerate() {
        let droop = der.effective_droop(program.delta_r[k]);
        a[(k, k)] = 1.0 - droop / der.r_line - droop / der.r_load;
        a[(k, pcc)] = droop / der.r_line;
        b[k] = references[k];
    }
    // V_5 - R_5·[(V_5 - V_pcc)/r_5 + V_5/R_load,5] = E_5
    let down = &grid.downstream;
    let droop = down.effective_droop(program.delta_r[d]);
    a[(d, d)] = 1.0 - droop / down.r_line - droop / down.r_load;
    a[(d, pcc)] = droop / down.r_line;
    b[d] = references[d];
    // Σ (V_k - V_pcc)/r_k = (V_pcc - V_5)/r_5
    let mut diag = 0.0;
    for (k, der) in grid.ders().enumerate() {
        a[(pcc, k)] = 1.0 / der.r_line;
        diag -= 1.0 / der.r_line;
    }
    a[(pcc, pcc)] = diag;

    let scale = a.amax();
    let lu = a.lu();
    let u = lu.u();
    if let Some((pivot, magnitude)) = (0..size)
        .map(|p| (p, u[(p, p)].abs()))
        .find(|&(_, m)| m.is_nan() || m <= PIVOT_TOL * scale)
    {
        return Err(Error::Singular { pivot, magnitude });
    }
    let x = lu.solve(&b).ok_or(Error::Singular {
        pivot: size - 1,
        magnitude: 0.0,
    })?;

    let v: Vec<f64> = x.iter().take(n + 1).copied().collect();
    let v_pcc = x[pcc];
    let i_in: Vec<f64> = grid
        .upstream
        .iter()
        .zip(&v)
        .map(|(der, vk)| (vk - v_pcc) / der.r_line)
        .collect();
    let i_out_down = (v_pcc - v[d]) / down.r_line;
    let mut i: Vec<f64> = grid
        .upstream
        .iter()
        .zip(&v)
        .zip(&i_in)
        .map(|((der, vk), inj)| inj + vk / der.r_load)
        .collect();
    i.push(-i_out_down + v[d] / down.r_load);

    let point = OperatingPoint {
        v,
        i,
        i_in,
        i_out_down,
        v_pcc,
    };
    let residuals = point.residuals(grid, program);
    if let Some((check, residual)) = residuals.first_violation(settings.residual_tol) {
        return Err(Error::Inconsistent {
            check: check.to_string(),
            residual,
            tolerance: settings.residual_tol,
        });
    }
    Ok(point)
}

/// Downstream currents from the closed-form star elimination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DownstreamCurrents {
    /// Current delivered from the PCC toward the downstream bus, A.
    pub i_out_down: f64,
    /// Output current of the downstream DER, A.
    pub i_down: f64,
}

/// Per-bus terms shared by the closed-form current and the admittance formula.
#[derive(Debug, Clone)]
pub(crate) struct StarTerms {
    /// `r_k·λ_k - (R_d,k + ΔR_k)` per upstream bus.
    pub denominators: Vec<f64>,
    /// `λ_k` per DER, downstream last.
    pub lambdas: Vec<f64>,
    /// `1 + Σ λ_k/d_k · d_5/λ_5`.
    pub output_scaling: f64,
}

impl StarTerms {
    pub(crate) fn new(grid: &GridSpec, program: &ControlProgram) -> Result<Self> {
        validate(grid, program).into_result()?;
        let d = grid.downstream_index();
        let lambdas: Vec<f64> = grid
            .ders()
            .zip(&program.delta_r)
            .map(|(der, &dr)| der.lambda(dr))
            .collect();
        let denominators: Vec<f64> = grid
            .upstream
            .iter()
            .zip(&program.delta_r)
            .map(|(der, &dr)| der.weight_denominator(dr))
            .collect();
        let offset: f64 = lambdas
            .iter()
            .zip(&denominators)
            .map(|(l, dk)| l / dk)
            .sum();
        let down_denominator = grid.downstream.weight_denominator(program.delta_r[d]);
        let coupling = offset * down_denominator / lambdas[d];
        let output_scaling = 1.0 + coupling;
        let floor = crate::grid::SINGULARITY_TOL * (1.0 + coupling.abs());
        if output_scaling.is_nan() || output_scaling.abs() <= floor {
            return Err(Error::ClosedFormSingular(output_scaling));
        }
        Ok(Self {
            denominators,
            lambdas,
            output_scaling,
        })
    }
}

/// Evaluates the star-network closed form for the current leaving the PCC
/// toward the downstream bus, then the downstream DER current.
///
/// With `E_k = V_ref,k + ΔV_ref,k + V_sec,k` and `d_k = r_k·λ_k - (R_d,k + ΔR_k)`:
///
/// ```text
///            Σ E_k/d_k  -  Σ λ_k/d_k · E_5/λ_5
/// i_out = ---------------------------------------
///             1 + Σ λ_k/d_k · d_5/λ_5
///
/// i_5   = (E_5/R_load,5 - i_out) / λ_5
/// ```
pub fn closed_form_downstream(
    grid: &GridSpec,
    program: &ControlProgram,
) -> Result<DownstreamCurrents> {
    let terms = StarTerms::new(grid, program)?;
    let references = program.effective_references(grid);
    let d = grid.downstream_index();
    let lambda_down = terms.lambdas[d];
    let e_down = references[d];

    let input_scaling: f64 = references[..d]
        .iter()
        .zip(&terms.denominators)
        .map(|(e, dk)| e / dk)
        .sum();
    let inherent_offset: f64 = terms.lambdas[..d]
        .iter()
        .zip(&terms.denominators)
        .map(|(l, dk)| l / dk)
        .sum();

    let i_out_down =
        (input_scaling - inherent_offset * e_down / lambda_down) / terms.output_scaling;
    let i_down = (-i_out_down + e_down / grid.downstream.r_load) / lambda_down;
    Ok(DownstreamCurrents { i_out_down, i_down })
}

/// Change of every DER current caused by the program's input steps,
/// relative to the same program with all inputs at zero.
pub fn delta_currents(
    grid: &GridSpec,
    program: &ControlProgram,
    settings: &SolveSettings,
) -> Result<Vec<f64>> {
    let stepped = solve_nodal(grid, program, settings)?;
    let rest = solve_nodal(grid, &program.without_inputs(), settings)?;
    Ok(stepped.i.iter().zip(&rest.i).map(|(a, b)| a - b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::canonical_grid;

    const BASELINE_V: f64 = 315.318503539;
    const BASELINE_I: f64 = 3.18503538928;

    #[test]
    fn lambda_examples() {
        let der = DerSpec::new(315.0, 0.1, 0.67, 99.0);
        assert!((lambda_of(&der, 0.0) - 0.998990).abs() < 1e-6);
        assert_eq!(lambda_of(&der, -0.1), 1.0);
        assert!((lambda_of(&der, 0.4688) - 0.994254).abs() < 1e-6);
    }

    #[test]
    fn canonical_baseline_is_symmetric() {
        let grid = canonical_grid();
        let point = solve_nodal(
            &grid,
            &ControlProgram::zero(&grid),
            &SolveSettings::default(),
        )
        .unwrap();
        for k in 0..5 {
            assert!((point.v[k] - BASELINE_V).abs() < 1e-4);
            assert!((point.i[k] - BASELINE_I).abs() < 1e-6);
        }
        assert!((point.v_pcc - BASELINE_V).abs() < 1e-4);
        assert!(point.i_in.iter().all(|x| x.abs() < 1e-9));
        assert!(point.i_out_down.abs() < 1e-9);
    }

    #[test]
    fn identical_buses_carry_no_line_current() {
        let der = DerSpec::new(400.0, 0.3, 0.2, 40.0);
        let grid = GridSpec::new(vec![der; 6], der);
        let point = solve_nodal(
            &grid,
            &ControlProgram::zero(&grid),
            &SolveSettings::default(),
        )
        .unwrap();
        assert!(point.i_in.iter().all(|x| x.abs() < 1e-9));
        assert!(point.i_out_down.abs() < 1e-9);
    }

    #[test]
    fn closed_form_matches_baseline() {
        let grid = canonical_grid();
        let c = closed_form_downstream(&grid, &ControlProgram::zero(&grid)).unwrap();
        assert!(c.i_out_down.abs() < 1e-9);
        assert!((c.i_down - BASELINE_I).abs() < 1e-6);
    }

    #[test]
    fn closed_form_matches_nodal_with_all_inputs_on() {
        let grid = canonical_grid();
        let program = ControlProgram::zero(&grid).with_inputs(vec![1.0; 4]);
        let c = closed_form_downstream(&grid, &program).unwrap();
        let p = solve_nodal(&grid, &program, &SolveSettings::default()).unwrap();
        assert!((c.i_out_down - p.i_out_down).abs() <= 1e-9 * p.i_out_down.abs());
        assert!((c.i_down - p.i[4]).abs() <= 1e-9 * p.i[4].abs());
        // independent high-precision solve
        assert!((p.i[4] - 1.49610551933684).abs() < 1e-10);
        assert!((p.i_out_down - 1.68722388017765).abs() < 1e-10);
    }

    #[test]
    fn zero_inputs_give_zero_deltas() {
        let grid = canonical_grid();
        let mut program = ControlProgram::zero(&grid);
        program.delta_r[1] = 0.3;
        program.v_sec[3] = -2.0;
        let di = delta_currents(&grid, &program, &SolveSettings::default()).unwrap();
        assert_eq!(di, vec![0.0; 5]);
    }

    #[test]
    fn invalid_program_is_rejected_before_solving() {
        let grid = canonical_grid();
        let mut program = ControlProgram::zero(&grid);
        program.delta_r[2] = 98.9;
        assert!(matches!(
            solve_nodal(&grid, &program, &SolveSettings::default()),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            closed_form_downstream(&grid, &program),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn cancelling_output_scaling_is_singular() {
        // one upstream bus: 1 + λ_1/d_1 · d_2/λ_2 = 0 when d_2 = -d_1 at λ = 1
        let up = DerSpec::new(315.0, 0.0, 0.5, 1e300);
        let down = DerSpec::new(315.0, 0.0, 0.5, 1e300);
        let grid = GridSpec::new(vec![up], down);
        let mut program = ControlProgram::zero(&grid);
        program.delta_r[1] = 1.0;
        assert!(matches!(
            closed_form_downstream(&grid, &program),
            Err(Error::ClosedFormSingular(_))
        ));
        assert!(matches!(
            solve_nodal(&grid, &program, &SolveSettings::default()),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn tolerance_must_be_positive() {
        assert!(SolveSettings::with_tolerance(0.0).is_err());
        assert!(SolveSettings::with_tolerance(f64::NAN).is_err());
        assert_eq!(
            SolveSettings::with_tolerance(1e-6).unwrap().residual_tol,
            1e-6
        );
    }
}
