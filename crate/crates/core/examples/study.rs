use std::collections::BTreeMap;
use std::sync::Arc;
use stripweave_core::elasticity::ElasticityParams;
use stripweave_core::geometry::StripDomain;
use stripweave_core::solver::*;
use stripweave_core::surface::SurfaceDefinition;

fn main() {
    let s = Arc::new(SurfaceDefinition::builtin("paraboloid", &BTreeMap::new()).unwrap());
    let params = ElasticityParams::default();
    for beta in [0.25_f64, 0.125] {
        let hb = 0.0125 * beta;
        let strip = StripDomain::new(s.clone(), (-1.0, 1.0), 0.05, hb, 0).unwrap();
        let opts = SolveOptions { spans1: 8, h_bisections: 3, natural_rounds: 0, max_iter: 400, ..SolveOptions::default() };
        let t0 = std::time::Instant::now();
        match solve_embedding(&strip, &params, &opts) {
            Ok((m, diag)) => {
                let st = SolverState::new(strip.clone(), params, m, PinMode::Rigid3, QuadratureSpec::default()).unwrap();
                print!("beta={beta} OK W={:.6e} t={:.2}s stages:", st.strain_energy(), t0.elapsed().as_secs_f64());
                for c in &diag.children { print!(" {}={}", c.label, c.iterations.len()); }
                println!();
            }
            Err(e) => println!("beta={beta} FAIL {e}"),
        }
    }
}
