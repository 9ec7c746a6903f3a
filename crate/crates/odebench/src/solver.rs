//! Step functions selected by method name, Krylov dimension and jvp mode.

use rok_core::stepper::{classical_rosenbrock_step, rk4_step, rok_step};
use rok_core::tableau::by_name;
use rok_core::{ArnoldiOptions, BasisVariant, JacobianChoice, OdeSystem, RokConfig, StepResult, Tableau64};

use crate::config::{JvpSpec, KrylovDim};
use crate::error::{BenchError, BenchResult};

#[derive(Clone, Debug)]
enum Kind {
    Full(Tableau64),
    Krylov(RokConfig<f64>),
    Rk4,
}

/// A configured one-step method.
#[derive(Clone, Debug)]
pub struct Solver {
    name: String,
    kind: Kind,
}

impl Solver {
    /// `method` is a tableau name or `rk4`.
    pub fn new(method: &str, krylov_dim: KrylovDim, jvp: JvpSpec, basis: BasisVariant) -> BenchResult<Self> {
        if method.eq_ignore_ascii_case("rk4") {
            return Ok(Self::rk4());
        }
        let tableau = by_name::<f64>(method).ok_or_else(|| BenchError::UnknownMethod(method.to_string()))?;
        let kind = match krylov_dim {
            KrylovDim::Full => Kind::Full(tableau),
            KrylovDim::Dim(m) => {
                let opts = ArnoldiOptions::new(m).with_jvp_mode(jvp.mode());
                opts.validate()?;
                Kind::Krylov(RokConfig::new(tableau, opts).with_basis(basis))
            }
        };
        Ok(Self {
            name: method.to_ascii_lowercase(),
            kind,
        })
    }

    pub fn rk4() -> Self {
        Self {
            name: "rk4".into(),
            kind: Kind::Rk4,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Order of the embedded estimate, `None` for methods without one.
    pub fn embedded_order(&self) -> Option<u32> {
        match &self.kind {
            Kind::Full(t) => Some(t.embedded_order),
            Kind::Krylov(c) => Some(c.tableau.embedded_order),
            Kind::Rk4 => None,
        }
    }

    pub fn step(&self, sys: &dyn OdeSystem<f64>, t: f64, y: &[f64], h: f64) -> rok_core::Result<StepResult<f64>> {
        match &self.kind {
            Kind::Full(tab) => classical_rosenbrock_step(sys, t, y, h, tab, &JacobianChoice::FullExact),
            Kind::Krylov(cfg) => rok_step(sys, t, y, h, cfg),
            Kind::Rk4 => rk4_step(sys, t, y, h),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rok_core::problems::lorenz96;

    #[test]
    fn unknown_method() {
        let e = Solver::new("euler9", KrylovDim::Full, JvpSpec::Exact, BasisVariant::Type1).unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn full_and_krylov_with_m_n_agree() {
        let p = lorenz96::<f64>(40, 8.0);
        let full = Solver::new("rok4a", KrylovDim::Full, JvpSpec::Exact, BasisVariant::Type1).unwrap();
        let kry = Solver::new("rok4a", KrylovDim::Dim(40), JvpSpec::Exact, BasisVariant::Type1).unwrap();
        let a = full.step(p.system.as_ref(), 0.0, &p.y0, 0.01).unwrap();
        let b = kry.step(p.system.as_ref(), 0.0, &p.y0, 0.01).unwrap();
        assert!(a.y_next.sub(&b.y_next).norm_inf() <= 1e-12 * a.y_next.norm_inf());
        assert_eq!(full.embedded_order(), Some(3));
        assert_eq!(Solver::rk4().embedded_order(), None);
    }
}
