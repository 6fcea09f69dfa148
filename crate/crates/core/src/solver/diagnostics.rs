//! Per-strip diagnostics: a tree of stages, one node per refinement level,
//! with the Newton iteration history inside each node.

use super::SolverState;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationDiag {
    pub residual: f64,
    pub energy: f64,
    pub step_scale: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagNode {
    pub label: String,
    pub degrees: (usize, usize),
    pub dofs: usize,
    pub w_start: f64,
    pub w_end: f64,
    /// W change across this node (w_end - w_start).
    pub delta_w: f64,
    /// Geometry change introduced by the refinement that opened this stage.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refine_geometry_delta: Option<f64>,
    pub iterations: Vec<IterationDiag>,
    pub children: Vec<DiagNode>,
}

impl DiagNode {
    pub fn root(strip_index: usize, area: f64) -> DiagNode {
        DiagNode {
            label: format!("strip {strip_index} (area {area:.6e})"),
            degrees: (0, 0),
            dofs: 0,
            w_start: 0.0,
            w_end: 0.0,
            delta_w: 0.0,
            refine_geometry_delta: None,
            iterations: Vec::new(),
            children: Vec::new(),
        }
    }

    pub fn stage(label: &str, st: &SolverState) -> DiagNode {
        DiagNode {
            label: label.to_string(),
            degrees: st.manifold().degrees(),
            dofs: st.ndof(),
            w_start: st.strain_energy(),
            w_end: 0.0,
            delta_w: 0.0,
            refine_geometry_delta: None,
            iterations: Vec::new(),
            children: Vec::new(),
        }
    }

    pub fn finish(&mut self, st: &SolverState) {
        self.w_end = st.strain_energy();
        self.delta_w = self.w_end - self.w_start;
        if self.degrees == (0, 0) {
            self.degrees = st.manifold().degrees();
            self.dofs = st.ndof();
        }
    }

    /// Converged energies of the stages in order (leaf stages of the tree).
    pub fn stage_energies(&self) -> Vec<f64> {
        self.children.iter().map(|c| c.w_end).collect()
    }

    pub fn total_iterations(&self) -> usize {
        self.iterations.len() + self.children.iter().map(|c| c.total_iterations()).sum::<usize>()
    }
}
