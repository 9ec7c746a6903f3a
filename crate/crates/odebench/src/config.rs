//! Run configuration and its canonical text form.

use std::fmt;
use std::str::FromStr;

use rok_core::{BasisVariant, JvpMode};

use crate::error::{BenchError, BenchResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const DEFAULT_STEPS: [usize; 5] = [20, 40, 80, 160, 320];
pub const DEFAULT_TOLS: [f64; 7] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];
/// Fixed finite-difference increment for the low-accuracy jvp study. Basis
/// vectors have unit norm, so on large grids each component moves by about
/// `delta / sqrt(N)`.
pub const DEFAULT_LOW_ACCURACY_DELTA: f64 = 2.0;
/// Finer ladder for the low-accuracy study, where the reduced order only
/// dominates once the fourth-order term has decayed.
pub const LOW_ACCURACY_STEPS: [usize; 6] = [40, 80, 160, 320, 640, 1280];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KrylovDim {
    /// Exact dense Jacobian, no projection.
    Full,
    Dim(usize),
}

impl FromStr for KrylovDim {
    type Err = BenchError;

    fn from_str(s: &str) -> BenchResult<Self> {
        if s.eq_ignore_ascii_case("full") {
            return Ok(KrylovDim::Full);
        }
        match s.parse::<usize>() {
            Ok(m) if m > 0 => Ok(KrylovDim::Dim(m)),
            _ => Err(BenchError::Usage(format!("--krylov-dim expects a positive integer or `full`, got `{s}`"))),
        }
    }
}

impl fmt::Display for KrylovDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KrylovDim::Full => f.write_str("full"),
            KrylovDim::Dim(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JvpSpec {
    Exact,
    Fd,
    FdFixed(f64),
}

impl JvpSpec {
    pub fn mode(&self) -> JvpMode<f64> {
        match *self {
            JvpSpec::Exact => JvpMode::Exact,
            JvpSpec::Fd => JvpMode::fd(),
            JvpSpec::FdFixed(d) => JvpMode::fd_fixed(d).expect("validated on parse"),
        }
    }
}

impl FromStr for JvpSpec {
    type Err = BenchError;

    fn from_str(s: &str) -> BenchResult<Self> {
        let bad = || BenchError::Usage(format!("--jvp expects exact, fd or fd-fixed:DELTA, got `{s}`"));
        match s {
            "exact" => Ok(JvpSpec::Exact),
            "fd" => Ok(JvpSpec::Fd),
            _ => {
                let d = s.strip_prefix("fd-fixed:").ok_or_else(bad)?;
                let d: f64 = d.parse().map_err(|_| bad())?;
                if d > 0.0 && d.is_finite() {
                    Ok(JvpSpec::FdFixed(d))
                } else {
                    Err(bad())
                }
            }
        }
    }
}

impl fmt::Display for JvpSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JvpSpec::Exact => f.write_str("exact"),
            JvpSpec::Fd => f.write_str("fd"),
            JvpSpec::FdFixed(d) => write!(f, "fd-fixed:{d:e}"),
        }
    }
}

pub fn parse_basis(s: &str) -> BenchResult<BasisVariant> {
    match s {
        "type1" => Ok(BasisVariant::Type1),
        "type2" => Ok(BasisVariant::Type2),
        _ => Err(BenchError::Usage(format!("--basis expects type1 or type2, got `{s}`"))),
    }
}

pub fn basis_name(b: BasisVariant) -> &'static str {
    match b {
        BasisVariant::Type1 => "type1",
        BasisVariant::Type2 => "type2",
    }
}

/// Comma-separated list, e.g. `20,40,80`.
pub fn parse_list<T: FromStr>(flag: &str, s: &str) -> BenchResult<Vec<T>> {
    let items: Result<Vec<T>, _> = s.split(',').map(|p| p.trim().parse::<T>()).collect();
    match items {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(BenchError::Usage(format!("{flag} expects a comma-separated list, got `{s}`"))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub problem: String,
    pub method: String,
    pub krylov_dim: KrylovDim,
    pub jvp: JvpSpec,
    pub basis: BasisVariant,
    pub steps: Vec<usize>,
    pub tols: Vec<f64>,
    /// `None` means `atol = tol` for each tolerance in the sweep.
    pub atol: Option<f64>,
    /// `None` means `rtol = tol` for each tolerance in the sweep.
    pub rtol: Option<f64>,
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: "converge".into(),
            problem: "lorenz96".into(),
            method: "rok4a".into(),
            krylov_dim: KrylovDim::Dim(4),
            jvp: JvpSpec::Exact,
            basis: BasisVariant::Type1,
            steps: DEFAULT_STEPS.to_vec(),
            tols: DEFAULT_TOLS.to_vec(),
            atol: None,
            rtol: None,
            threads: 1,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> BenchResult<()> {
        if self.steps.contains(&0) {
            return Err(BenchError::Usage("step counts must be positive".into()));
        }
        if self.tols.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(BenchError::Usage("tolerances must be positive".into()));
        }
        for (flag, v) in [("--atol", self.atol), ("--rtol", self.rtol)] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(BenchError::Usage(format!("{flag} must be non-negative")));
                }
            }
        }
        if self.threads == 0 {
            return Err(BenchError::Usage("--threads must be at least 1".into()));
        }
        Ok(())
    }

    /// Single-line echo of every field plus the library version.
    pub fn canonical(&self) -> String {
        let join = |v: Vec<String>| v.join("/");
        let opt = |v: Option<f64>| v.map_or("tol".to_string(), |x| format!("{x:e}"));
        format!(
            "odebench={} command={} problem={} method={} krylov-dim={} jvp={} basis={} steps={} tols={} atol={} rtol={} threads={}",
            VERSION,
            self.command,
            self.problem,
            self.method,
            self.krylov_dim,
            self.jvp,
            basis_name(self.basis),
            join(self.steps.iter().map(|s| s.to_string()).collect()),
            join(self.tols.iter().map(|t| format!("{t:e}")).collect()),
            opt(self.atol),
            opt(self.rtol),
            self.threads,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn krylov_dim_parsing() {
        assert_eq!("full".parse::<KrylovDim>().unwrap(), KrylovDim::Full);
        assert_eq!("8".parse::<KrylovDim>().unwrap(), KrylovDim::Dim(8));
        assert!("0".parse::<KrylovDim>().is_err());
        assert!("x".parse::<KrylovDim>().is_err());
    }

    #[test]
    fn jvp_parsing() {
        assert_eq!("exact".parse::<JvpSpec>().unwrap(), JvpSpec::Exact);
        assert_eq!("fd".parse::<JvpSpec>().unwrap(), JvpSpec::Fd);
        assert_eq!("fd-fixed:0.1".parse::<JvpSpec>().unwrap(), JvpSpec::FdFixed(0.1));
        assert!("fd-fixed:-1".parse::<JvpSpec>().is_err());
        assert!("fd-fixed:".parse::<JvpSpec>().is_err());
        assert!("newton".parse::<JvpSpec>().is_err());
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list::<usize>("--steps", "20,40, 80").unwrap(), vec![20, 40, 80]);
        assert!(parse_list::<usize>("--steps", "20,x").is_err());
        assert_eq!(parse_list::<f64>("--tols", "1e-2,1e-4").unwrap(), vec![1e-2, 1e-4]);
    }

    #[test]
    fn canonical_string_echoes_fields() {
        let c = RunConfig {
            jvp: JvpSpec::FdFixed(0.1),
            krylov_dim: KrylovDim::Full,
            ..RunConfig::default()
        };
        let s = c.canonical();
        assert!(s.starts_with(&format!("odebench={VERSION} ")));
        for part in ["problem=lorenz96", "method=rok4a", "krylov-dim=full", "jvp=fd-fixed:1e-1", "steps=20/40/80/160/320"] {
            assert!(s.contains(part), "{s} lacks {part}");
        }
        assert!(!s.contains(','));
    }

    #[test]
    fn validation() {
        assert!(RunConfig::default().validate().is_ok());
        let bad = RunConfig {
            steps: vec![10, 0],
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
