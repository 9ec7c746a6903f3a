//! Reference solutions from two independent fine-step integrations.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rok_core::stepper::integrate_fixed;
use rok_core::{BasisVariant, ProblemSpec64, Vector64};

use crate::config::{JvpSpec, KrylovDim};
use crate::error::{BenchError, BenchResult};
use crate::solver::Solver;

/// Largest relative gap accepted between the two reference solvers.
pub const AGREEMENT_LIMIT: f64 = 1e-10;

/// Largest dimension for which dense-Jacobian references are used.
pub const DENSE_REFERENCE_MAX_DIM: usize = 200;

#[derive(Clone, Debug, PartialEq)]
pub struct Reference {
    pub y: Vector64,
    /// `||y_a - y_b||_inf / ||y_a||_inf` between the two solvers.
    pub gap: f64,
    pub description: String,
}

/// Two solver setups and their step counts for a problem.
pub fn reference_plan(problem: &ProblemSpec64) -> [(Solver, usize); 2] {
    let sys = problem.system.as_ref();
    let has_jac = sys.jacobian(problem.t_span.0, &problem.y0).is_some();
    let exact = JvpSpec::Exact;
    let t1 = BasisVariant::Type1;
    if has_jac && sys.dim() <= DENSE_REFERENCE_MAX_DIM {
        [
            (Solver::new("rok4a", KrylovDim::Full, exact, t1).expect("known method"), 8000),
            (Solver::new("ros4", KrylovDim::Full, exact, t1).expect("known method"), 8000),
        ]
    } else {
        [
            (Solver::rk4(), 8000),
            (Solver::new("rok4a", KrylovDim::Dim(16), exact, t1).expect("known method"), 4000),
        ]
    }
}

pub fn relative_gap(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

fn compute(problem: &ProblemSpec64) -> BenchResult<Reference> {
    let sys = problem.system.as_ref();
    let (t0, tf) = problem.t_span;
    let mut out = Vec::new();
    let mut names = Vec::new();
    for (solver, n) in reference_plan(problem) {
        let run = integrate_fixed(t0, tf, &problem.y0, n, |t, y, h| solver.step(sys, t, y, h))?;
        out.push(run.y);
        names.push(format!("{}x{}", solver.name(), n));
    }
    let gap = relative_gap(&out[0], &out[1]);
    let limit = AGREEMENT_LIMIT;
    if !(gap <= limit) {
        return Err(BenchError::ReferenceDisagreement { gap, limit });
    }
    Ok(Reference {
        y: out.swap_remove(0),
        gap,
        description: names.join("+"),
    })
}

fn cache() -> &'static Mutex<HashMap<String, Arc<Reference>>> {
    static CACHE: OnceLock<Mutex<HashMap<String, Arc<Reference>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Reference at `t_span.1`, computed once per problem and dimension per process.
pub fn reference_solution(problem: &ProblemSpec64) -> BenchResult<Arc<Reference>> {
    let key = format!("{}:{}", problem.name, problem.system.dim());
    if let Some(r) = cache().lock().expect("reference cache").get(&key) {
        return Ok(r.clone());
    }
    let r = Arc::new(compute(problem)?);
    cache().lock().expect("reference cache").insert(key, r.clone());
    Ok(r)
}
