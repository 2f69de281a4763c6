//! Experiment configuration: a single TOML file with flat key/value
//! sections. No environment variables are consulted; everything an audit
//! needs is in the file (plus the CLI seed override), so artifacts are
//! reproducible from the config echo alone. Every key has a default, so a
//! config only states what it changes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use hjrep_core::hamiltonian::{builtin, ModelParams, ModelRef};
use hjrep_core::value::TerminalCost;

fn d_seed() -> u64 { 0 }
fn d_g() -> String { "quadratic".into() }
fn d_horizon() -> f64 { 1.0 }
fn d_x_radius() -> f64 { 2.0 }
fn d_mesh_n() -> usize { 64 }
fn d_fd_nx() -> usize { 64 }
fn d_fd_pad() -> f64 { 2.0 }
fn d_t_min() -> f64 { 0.0 }
fn d_t_max() -> f64 { 1.0 }
fn d_t_count() -> usize { 9 }
fn d_x_min() -> f64 { -2.0 }
fn d_x_max() -> f64 { 2.0 }
fn d_x_count() -> usize { 9 }
fn d_x_values() -> Vec<f64> { vec![0.5, -0.5, 1.0, -1.0, 2.0, -2.0] }
fn d_v_count() -> usize { 41 }
fn d_conj_tol() -> f64 { 1e-6 }
fn d_lipschitz_samples() -> usize { 10_000 }
fn d_extra_samples() -> usize { 1_000 }
fn d_extra_s_max() -> f64 { 5.0 }
fn d_growth_samples() -> usize { 1_000 }
fn d_residual_count() -> usize { 50 }
fn d_residual_step() -> f64 { 1e-3 }
fn d_residual_tol() -> f64 { 1e-3 }
fn d_residual_p_max() -> f64 { 3.0 }
fn d_regularity_pairs() -> usize { 1_000 }
fn d_regularity_m() -> f64 { 1.0 }
fn d_invariance_trajectories() -> usize { 100 }
fn d_invariance_box() -> f64 { 0.0 }
fn d_shifts() -> Vec<f64> { vec![1.0, 0.5, 0.25, 0.125] }
fn d_stability_tol() -> f64 { 1e-3 }
fn d_equivariance_tol() -> f64 { 1e-6 }
fn d_rel_var_ctrl() -> f64 { 0.02 }
fn d_abs_var_fd() -> f64 { 5e-2 }
fn d_starts() -> usize { 16 }
fn d_max_sweeps() -> usize { 240 }

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub run: RunSection,
    pub model: ModelSection,
    #[serde(default)]
    pub terminal: TerminalSection,
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub grids: GridSection,
    #[serde(default)]
    pub conjugate_table: ConjugateTableSection,
    #[serde(default)]
    pub audits: AuditSection,
    #[serde(default)]
    pub solver: SolverSection,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "d_seed")]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<String>,
}

// No deny_unknown_fields here: the flattened parameter map absorbs the
// model-specific keys (`c`, `delta`, `b0`, ...).
#[derive(Debug, Clone, Deserialize, Default)]
pub struct ModelSection {
    pub name: String,
    /// Base model for wrappers such as `shifted`.
    #[serde(default)]
    pub base: Option<String>,
    /// Numeric model parameters (`c`, `delta`, `b0`, ...).
    #[serde(flatten)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalSection {
    #[serde(default = "d_g")]
    pub g: String,
    #[serde(default)]
    pub constant: Option<f64>,
    #[serde(default)]
    pub knots: Option<Vec<(f64, f64)>>,
}

impl Default for TerminalSection {
    fn default() -> Self {
        TerminalSection { g: d_g(), constant: None, knots: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    #[serde(default = "d_horizon")]
    pub horizon: f64,
    #[serde(default = "d_x_radius")]
    pub x_radius: f64,
}

impl Default for ProblemSection {
    fn default() -> Self {
        ProblemSection { horizon: d_horizon(), x_radius: d_x_radius() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "d_mesh_n")]
    pub mesh_n: usize,
    #[serde(default = "d_fd_nx")]
    pub fd_nx: usize,
    #[serde(default = "d_fd_pad")]
    pub fd_pad: f64,
    #[serde(default = "d_t_min")]
    pub instance_t_min: f64,
    #[serde(default = "d_t_max")]
    pub instance_t_max: f64,
    #[serde(default = "d_t_count")]
    pub instance_t_count: usize,
    #[serde(default = "d_x_min")]
    pub instance_x_min: f64,
    #[serde(default = "d_x_max")]
    pub instance_x_max: f64,
    #[serde(default = "d_x_count")]
    pub instance_x_count: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            mesh_n: d_mesh_n(),
            fd_nx: d_fd_nx(),
            fd_pad: d_fd_pad(),
            instance_t_min: d_t_min(),
            instance_t_max: d_t_max(),
            instance_t_count: d_t_count(),
            instance_x_min: d_x_min(),
            instance_x_max: d_x_max(),
            instance_x_count: d_x_count(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugateTableSection {
    #[serde(default = "d_x_values")]
    pub x_values: Vec<f64>,
    #[serde(default = "d_v_count")]
    pub v_count: usize,
    #[serde(default = "d_conj_tol")]
    pub tol: f64,
}

impl Default for ConjugateTableSection {
    fn default() -> Self {
        ConjugateTableSection { x_values: d_x_values(), v_count: d_v_count(), tol: d_conj_tol() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSection {
    #[serde(default = "d_lipschitz_samples")]
    pub lipschitz_samples: usize,
    #[serde(default = "d_extra_samples")]
    pub extra_samples: usize,
    #[serde(default = "d_extra_s_max")]
    pub extra_s_max: f64,
    #[serde(default = "d_growth_samples")]
    pub growth_samples: usize,
    #[serde(default = "d_residual_count")]
    pub residual_x_count: usize,
    #[serde(default = "d_residual_count")]
    pub residual_p_count: usize,
    #[serde(default = "d_residual_step")]
    pub residual_step: f64,
    /// Half-width of the dual-variable grid; keep inside the model's dual
    /// range (window-clamped models only represent H on the window's
    /// subgradient range).
    #[serde(default = "d_residual_p_max")]
    pub residual_p_max: f64,
    #[serde(default = "d_residual_tol")]
    pub residual_tol: f64,
    #[serde(default = "d_regularity_pairs")]
    pub regularity_pairs: usize,
    #[serde(default = "d_regularity_m")]
    pub regularity_m: f64,
    #[serde(default = "d_invariance_trajectories")]
    pub invariance_trajectories: usize,
    /// Control-sample box for invariance trajectories; 0 = derive from the
    /// representation audit box.
    #[serde(default = "d_invariance_box")]
    pub invariance_box: f64,
    #[serde(default = "d_shifts")]
    pub stability_shifts: Vec<f64>,
    #[serde(default = "d_stability_tol")]
    pub stability_tol: f64,
    #[serde(default = "d_equivariance_tol")]
    pub equivariance_tol: f64,
    #[serde(default = "d_rel_var_ctrl")]
    pub rel_var_ctrl: f64,
    #[serde(default = "d_abs_var_fd")]
    pub abs_var_fd: f64,
}

impl Default for AuditSection {
    fn default() -> Self {
        AuditSection {
            lipschitz_samples: d_lipschitz_samples(),
            extra_samples: d_extra_samples(),
            extra_s_max: d_extra_s_max(),
            growth_samples: d_growth_samples(),
            residual_x_count: d_residual_count(),
            residual_p_count: d_residual_count(),
            residual_step: d_residual_step(),
            residual_p_max: d_residual_p_max(),
            residual_tol: d_residual_tol(),
            regularity_pairs: d_regularity_pairs(),
            regularity_m: d_regularity_m(),
            invariance_trajectories: d_invariance_trajectories(),
            invariance_box: d_invariance_box(),
            stability_shifts: d_shifts(),
            stability_tol: d_stability_tol(),
            equivariance_tol: d_equivariance_tol(),
            rel_var_ctrl: d_rel_var_ctrl(),
            abs_var_fd: d_abs_var_fd(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "d_starts")]
    pub starts: usize,
    #[serde(default = "d_max_sweeps")]
    pub max_sweeps: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection { starts: d_starts(), max_sweeps: d_max_sweeps() }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<(Config, String), String> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let cfg: Config = toml::from_str(&raw).map_err(|e| format!("config parse error: {e}"))?;
        cfg.validate()?;
        Ok((cfg, raw))
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.problem.horizon <= 0.0 {
            return Err("problem.horizon must be > 0".into());
        }
        if self.problem.x_radius <= 0.0 {
            return Err("problem.x_radius must be > 0".into());
        }
        if self.grids.mesh_n < 2 || self.grids.fd_nx < 2 {
            return Err("grid sizes must be >= 2".into());
        }
        if self.grids.instance_t_count == 0 || self.grids.instance_x_count == 0 {
            return Err("instance grid is empty".into());
        }
        let tols = [
            self.conjugate_table.tol,
            self.audits.residual_tol,
            self.audits.stability_tol,
            self.audits.equivariance_tol,
            self.audits.rel_var_ctrl,
            self.audits.abs_var_fd,
        ];
        if tols.iter().any(|t| *t <= 0.0) {
            return Err("all tolerances must be > 0".into());
        }
        if self.audits.residual_step <= 0.0 {
            return Err("audits.residual_step must be > 0".into());
        }
        Ok(())
    }

    pub fn model(&self) -> Result<ModelRef, String> {
        let params = ModelParams {
            values: self.model.params.clone(),
            base: self.model.base.clone(),
        };
        builtin(&self.model.name, &params).map_err(|e| e.to_string())
    }

    pub fn terminal_cost(&self) -> Result<TerminalCost, String> {
        TerminalCost::from_name(
            &self.terminal.g,
            self.terminal.constant,
            self.terminal.knots.clone(),
        )
        .map_err(|e| e.to_string())
    }

    /// Uniform instance grid (`t0`, `x0`) pairs.
    pub fn instance_grid(&self) -> Vec<(f64, f64)> {
        let g = &self.grids;
        let lin = |lo: f64, hi: f64, n: usize, k: usize| {
            if n <= 1 {
                lo
            } else {
                lo + (hi - lo) * (k as f64) / ((n - 1) as f64)
            }
        };
        let mut out = Vec::with_capacity(g.instance_t_count * g.instance_x_count);
        for it in 0..g.instance_t_count {
            for ix in 0..g.instance_x_count {
                out.push((
                    lin(g.instance_t_min, g.instance_t_max, g.instance_t_count, it),
                    lin(g.instance_x_min, g.instance_x_max, g.instance_x_count, ix),
                ));
            }
        }
        out
    }
}
