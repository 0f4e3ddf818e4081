//! Value types for the star-topology DC microgrid, its programmable control
//! layer and solved operating points.
//!
//! Buses are addressed by zero-based position: `0..n` are the upstream
//! (input) DERs, position `n` is the downstream (output) DER. Human-facing
//! messages print one-based node numbers so that the canonical grid reads as
//! nodes 1-4 upstream and node 5 downstream.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Smallest admissible magnitude for a droop/load factor or a weight denominator.
pub const SINGULARITY_TOL: f64 = 1e-9;

/// Electrical parameters of one bus: a droop-controlled DER, its local load
/// and the line that ties the bus to the point of common coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerSpec {
    /// Nominal voltage reference, V.
    pub v_ref: f64,
    /// Default droop gain (virtual resistance), Ω.
    pub r_droop: f64,
    /// Line resistance to the PCC, Ω.
    pub r_line: f64,
    /// Local load resistance, Ω.
    pub r_load: f64,
}

impl DerSpec {
    pub const fn new(v_ref: f64, r_droop: f64, r_line: f64, r_load: f64) -> Self {
        Self {
            v_ref,
            r_droop,
            r_line,
            r_load,
        }
    }

    /// Droop gain after applying an offset.
    pub fn effective_droop(&self, delta_r: f64) -> f64 {
        self.r_droop + delta_r
    }

    /// `1 - (R_d + ΔR) / R_load`, the factor that folds the local load into
    /// the droop law.
    pub fn lambda(&self, delta_r: f64) -> f64 {
        1.0 - self.effective_droop(delta_r) / self.r_load
    }

    /// `r·λ - (R_d + ΔR)`. The reciprocal is the bus's programmable input
    /// scaling, i.e. its computational weight up to a common factor.
    pub fn weight_denominator(&self, delta_r: f64) -> f64 {
        self.r_line * self.lambda(delta_r) - self.effective_droop(delta_r)
    }

    fn violations(&self, index: usize, out: &mut Vec<Violation>) {
        let checks = [
            ("v_ref", self.v_ref, self.v_ref > 0.0),
            ("r_droop", self.r_droop, self.r_droop >= 0.0),
            ("r_line", self.r_line, self.r_line > 0.0),
            ("r_load", self.r_load, self.r_load > 0.0),
        ];
        for (field, value, ok) in checks {
            if !ok || !value.is_finite() {
                out.push(Violation::Parameter {
                    index,
                    field,
                    value,
                });
            }
        }
    }
}

/// A star network of `n` upstream DERs and one downstream DER meeting at the PCC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub upstream: Vec<DerSpec>,
    pub downstream: DerSpec,
}

impl GridSpec {
    pub fn new(upstream: Vec<DerSpec>, downstream: DerSpec) -> Self {
        Self {
            upstream,
            downstream,
        }
    }

    /// Number of upstream (input) DERs.
    pub fn n_upstream(&self) -> usize {
        self.upstream.len()
    }

    /// Total number of DERs, upstream plus downstream.
    pub fn n_ders(&self) -> usize {
        self.upstream.len() + 1
    }

    /// Position of the downstream DER in per-DER vectors.
    pub fn downstream_index(&self) -> usize {
        self.upstream.len()
    }

    pub fn der(&self, index: usize) -> &DerSpec {
        if index == self.upstream.len() {
            &self.downstream
        } else {
            &self.upstream[index]
        }
    }

    /// All DERs in per-DER vector order.
    pub fn ders(&self) -> impl Iterator<Item = &DerSpec> {
        self.upstream
            .iter()
            .chain(std::iter::once(&self.downstream))
    }
}

/// The 5-bus reference microgrid: 315 V references, 0.1 Ω droop gains and
/// 99 Ω loads everywhere, line resistances 0.67, 0.49, 0.83, 0.03 and 0.81 Ω.
pub fn canonical_grid() -> GridSpec {
    const R_LINE: [f64; 5] = [0.67, 0.49, 0.83, 0.03, 0.81];
    let der = |r_line| DerSpec::new(315.0, 0.1, r_line, 99.0);
    GridSpec::new(
        R_LINE[..4].iter().copied().map(der).collect(),
        der(R_LINE[4]),
    )
}

/// The programmable layer: droop-gain offsets, secondary reference offsets
/// and the data-carrying reference steps on the upstream DERs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlProgram {
    /// ΔR_d per DER (length n + 1), Ω.
    pub delta_r: Vec<f64>,
    /// V_sec per DER (length n + 1), V.
    pub v_sec: Vec<f64>,
    /// ΔV_ref per upstream DER (length n), V.
    pub dv_ref: Vec<f64>,
}

impl ControlProgram {
    /// The unprogrammed controller: every offset and input is zero.
    pub fn zero(grid: &GridSpec) -> Self {
        let n = grid.n_upstream();
        Self {
            delta_r: vec![0.0; n + 1],
            v_sec: vec![0.0; n + 1],
            dv_ref: vec![0.0; n],
        }
    }

    /// Same offsets, different input vector.
    pub fn with_inputs(&self, dv_ref: Vec<f64>) -> Self {
        Self {
            delta_r: self.delta_r.clone(),
            v_sec: self.v_sec.clone(),
            dv_ref,
        }
    }

    /// Same offsets, all inputs at zero.
    pub fn without_inputs(&self) -> Self {
        self.with_inputs(vec![0.0; self.dv_ref.len()])
    }

    /// Effective reference voltage `V_ref + ΔV_ref + V_sec` of every DER.
    pub(crate) fn effective_references(&self, grid: &GridSpec) -> Vec<f64> {
        grid.ders()
            .enumerate()
            .map(|(k, der)| der.v_ref + self.v_sec[k] + self.dv_ref.get(k).copied().unwrap_or(0.0))
            .collect()
    }
}

/// One reason a grid/program pair cannot be solved.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// A program vector does not match the grid's dimensions.
    Dimension {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    /// The grid has no upstream DERs.
    EmptyGrid,
    /// A DER parameter is out of range or not finite.
    Parameter {
        index: usize,
        field: &'static str,
        value: f64,
    },
    /// A program entry is not finite.
    NonFinite { field: &'static str, index: usize },
    /// The droop gain cancels the local load (`λ ≈ 0`).
    LambdaNearZero { index: usize, lambda: f64 },
    /// An upstream weight denominator `r·λ - (R_d + ΔR)` vanishes.
    DenominatorNearZero { index: usize, denominator: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Dimension {
                field,
                expected,
                found,
            } => write!(
                f,
                "dimension mismatch: {field} has {found} entries, expected {expected}"
            ),
            Violation::EmptyGrid => write!(f, "grid has no upstream DERs"),
            Violation::Parameter {
                index,
                field,
                value,
            } => write!(f, "node {}: {field} = {value} is out of range", index + 1),
            Violation::NonFinite { field, index } => {
                write!(f, "node {}: {field} is not finite", index + 1)
            }
            Violation::LambdaNearZero { index, lambda } => {
                write!(f, "node {}: λ ≈ 0 ({lambda:e})", index + 1)
            }
            Violation::DenominatorNearZero { index, denominator } => write!(
                f,
                "node {}: weight denominator ≈ 0 ({denominator:e})",
                index + 1
            ),
        }
    }
}

/// Outcome of [`validate`]; empty means the pair is solvable.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> crate::Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(crate::Error::Invalid(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every parameter and program invariant and lists each violation.
///
/// Never fails: dimension mismatches are reported as violations, and the
/// per-node checks that need the mismatched vector are skipped.
pub fn validate(grid: &GridSpec, program: &ControlProgram) -> ValidationReport {
    let mut violations = Vec::new();
    let n = grid.n_upstream();
    if n == 0 {
        violations.push(Violation::EmptyGrid);
    }
    for (k, der) in grid.ders().enumerate() {
        der.violations(k, &mut violations);
    }

    let dims = [
        ("delta_r", program.delta_r.len(), n + 1),
        ("v_sec", program.v_sec.len(), n + 1),
        ("dv_ref", program.dv_ref.len(), n),
    ];
    let mut dims_ok = true;
    for (field, found, expected) in dims {
        if found != expected {
            dims_ok = false;
            violations.push(Violation::Dimension {
                field,
                expected,
                found,
            });
        }
    }
    if !dims_ok {
        return ValidationReport { violations };
    }

    for (field, values) in [
        ("delta_r", &program.delta_r),
        ("v_sec", &program.v_sec),
        ("dv_ref", &program.dv_ref),
    ] {
        for (index, value) in values.iter().enumerate() {
            if !value.is_finite() {
                violations.push(Violation::NonFinite { field, index });
            }
        }
    }

    for (k, der) in grid.ders().enumerate() {
        let delta_r = program.delta_r[k];
        let lambda = der.lambda(delta_r);
        if lambda.abs() <= SINGULARITY_TOL {
            violations.push(Violation::LambdaNearZero { index: k, lambda });
        }
        if k < n {
            let denominator = der.weight_denominator(delta_r);
            if denominator.abs() <= SINGULARITY_TOL {
                violations.push(Violation::DenominatorNearZero {
                    index: k,
                    denominator,
                });
            }
        }
    }
    ValidationReport { violations }
}

/// A solved steady state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// Bus voltage of every DER, V.
    pub v: Vec<f64>,
    /// Output current of every DER, A.
    pub i: Vec<f64>,
    /// Net injection of each upstream bus into the network, A.
    pub i_in: Vec<f64>,
    /// Current delivered from the PCC toward the downstream bus, A.
    pub i_out_down: f64,
    /// Voltage at the point of common coupling, V.
    pub v_pcc: f64,
}

/// Scaled residuals of the circuit laws at an operating point.
///
/// Each entry is the worst absolute residual divided by `max(1, |scale|)`,
/// where the scale is the magnitude of the quantity the law produces.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    pub kcl: f64,
    pub ohm: f64,
    pub droop: f64,
    pub load: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.kcl.max(self.ohm).max(self.droop).max(self.load)
    }

    /// The first law whose residual exceeds `tol`.
    pub fn first_violation(&self, tol: f64) -> Option<(&'static str, f64)> {
        [
            ("KCL at PCC", self.kcl),
            ("line Ohm law", self.ohm),
            ("droop law", self.droop),
            ("load bookkeeping", self.load),
        ]
        .into_iter()
        .find(|&(_, r)| r.is_nan() || r > tol)
    }
}

fn scaled(residual: f64, scale: f64) -> f64 {
    residual.abs() / scale.abs().max(1.0)
}

impl OperatingPoint {
    /// Evaluates every circuit law at this point for the given grid and program.
    pub fn residuals(&self, grid: &GridSpec, program: &ControlProgram) -> Residuals {
        let d = grid.downstream_index();
        let references = program.effective_references(grid);

        let injected: f64 = self.i_in.iter().sum();
        let kcl = scaled(injected - self.i_out_down, self.i_out_down);

        let mut ohm = 0.0_f64;
        let mut load = 0.0_f64;
        for (k, der) in grid.upstream.iter().enumerate() {
            let line = (self.v[k] - self.v_pcc) / der.r_line;
            ohm = ohm.max(scaled(line - self.i_in[k], self.i_in[k]));
            let net = self.i[k] - self.v[k] / der.r_load;
            load = load.max(scaled(net - self.i_in[k], self.i_in[k]));
        }
        let down = &grid.downstream;
        let line = (self.v_pcc - self.v[d]) / down.r_line;
        ohm = ohm.max(scaled(line - self.i_out_down, self.i_out_down));
        let net = -self.i[d] + self.v[d] / down.r_load;
        load = load.max(scaled(net - self.i_out_down, self.i_out_down));

        let mut droop = 0.0_f64;
        for (k, reference) in references.iter().enumerate() {
            let der = grid.der(k);
            let command = reference + der.effective_droop(program.delta_r[k]) * self.i[k];
            droop = droop.max(scaled(self.v[k] - command, self.v[k]));
        }

        Residuals {
            kcl,
            ohm,
            droop,
            load,
        }
    }
}
