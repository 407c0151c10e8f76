//! Stored reference values and the procedures that recompute them.
//!
//! `fixtures/fixtures.json` holds one record per value. [`check`] recomputes every
//! record through the library and reports the ones that drifted past their
//! tolerance. [`regenerate`] also returns the freshly computed file; stored
//! values are only replaced by an explicit [`write`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::certificates::{
    consistency_pair, discretization_cert, find_eta_star, lyapunov_constants, regret_bound, settling_bound,
    LyapunovConstants,
};
use crate::flows::{g_turning_point, FxtsParams, MomentumParams};
use crate::harness::{discretization_setup, settling_params, write_json};
use crate::problems::{quadratic, rosenbrock, QuadraticSpec};
use crate::{Error, Objective, Result, Vector};

pub const FIXTURE_VERSION: u32 = 1;

/// How a stored value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Closed-form expression evaluated in floating point.
    ClosedForm,
    /// Iterative computation (search, root finding, simulation).
    NumericalOracle,
    /// A published reference number reproduced by the procedure.
    PublishedValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub id: String,
    pub description: String,
    pub procedure: String,
    pub values: Vec<f64>,
    /// Absolute tolerance per value.
    pub tolerance: f64,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureFile {
    pub version: u32,
    pub fixtures: Vec<Fixture>,
}

/// A stored value that no longer matches its recomputation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mismatch {
    pub id: String,
    pub stored: Vec<f64>,
    pub computed: Vec<f64>,
    pub tolerance: f64,
}

struct Recipe {
    id: &'static str,
    description: &'static str,
    procedure: &'static str,
    tolerance: f64,
    source: Source,
    compute: fn() -> Result<Vec<f64>>,
}

fn constants(params: FxtsParams, mu: f64) -> Result<LyapunovConstants> {
    lyapunov_constants(&params, mu)
}

fn rosenbrock_params() -> FxtsParams {
    FxtsParams {
        c1: 1.25,
        c2: 1.25,
        p1: 20.0,
        p2: 1.98,
    }
}

const RECIPES: &[Recipe] = &[
    Recipe {
        id: "rosenbrock_gradient_at_start",
        description: "Rosenbrock gradient at (0.3, 0.8)",
        procedure: "analytic gradient (-2(1-x) - 400x(y-x^2), 200(y-x^2))",
        tolerance: 1e-12,
        source: Source::ClosedForm,
        compute: || Ok(rosenbrock().gradient(&Vector::from_vec(vec![0.3, 0.8])).iter().copied().collect()),
    },
    Recipe {
        id: "settling_bound_half_modulus",
        description: "fixed-time bound for c = (1, 1), p = (4, 1.5) on a quadratic with mu = 0.5",
        procedure: "p = c1(2mu)^alpha, q = c2(2mu)^beta, T = 1/(p(1-alpha)) + 1/(q(beta-1))",
        tolerance: 1e-12,
        source: Source::ClosedForm,
        compute: || Ok(vec![settling_bound(&constants(settling_params(), 0.5)?)]),
    },
    Recipe {
        id: "settling_bound_identity",
        description: "same bound on the identity quadratic, mu = 1",
        procedure: "as settling_bound_half_modulus with mu = 1",
        tolerance: 1e-12,
        source: Source::ClosedForm,
        compute: || Ok(vec![settling_bound(&constants(settling_params(), 1.0)?)]),
    },
    Recipe {
        id: "settling_bound_rosenbrock",
        description: "fixed-time bound for c = (1.25, 1.25), p = (20, 1.98) at mu = 0.1",
        procedure: "as settling_bound_half_modulus",
        tolerance: 1e-9,
        source: Source::ClosedForm,
        compute: || Ok(vec![settling_bound(&constants(rosenbrock_params(), 0.1)?)]),
    },
    Recipe {
        id: "regret_l2_unit_constants",
        description: "second regret term for p = q = 1, alpha = 2/3, beta = 3/2, V0 = 2",
        procedure: "l2 = V0 (1 - (1 + q V0^(beta-1) (beta-1) T2)^((beta-2)/(beta-1))) / (q V0^(beta-1) (2-beta))",
        tolerance: 1e-12,
        source: Source::ClosedForm,
        compute: || {
            let c = LyapunovConstants {
                p: 1.0,
                q: 1.0,
                alpha: 2.0 / 3.0,
                beta: 1.5,
            };
            Ok(vec![regret_bound(&c, 2.0)?.l2])
        },
    },
    Recipe {
        id: "consistent_pair_p2_1_75",
        description: "p1 and xi paired with p2 = 1.75",
        procedure: "xi = 1/(2-p2), p1 = 2 + 1/(xi-2)",
        tolerance: 1e-12,
        source: Source::ClosedForm,
        compute: || {
            let (p1, xi) = consistency_pair(1.75)?;
            Ok(vec![p1, xi])
        },
    },
    Recipe {
        id: "k_star_half_modulus",
        description: "switching index for c = (1, 1), p = (2.5, 1.75), mu = 0.5, eta = 0.01, eps = 1e-3",
        procedure: "k* = ceil(xi pi / (2 eta sqrt(pq)))",
        tolerance: 0.0,
        source: Source::ClosedForm,
        compute: || {
            let (params, obj) = discretization_setup();
            let mu = obj.pl_modulus().ok_or(Error::MissingMetadata("pl_modulus"))?;
            Ok(vec![discretization_cert(&params, mu, 0.01, 1e-3)?.k_star as f64])
        },
    },
    Recipe {
        id: "eta_star_identity",
        description: "largest grid step keeping 50 seeded runs inside the envelope on the identity quadratic",
        procedure: "grid [0.2, 0.1, 0.05, 0.02, 0.01], eps = 1e-3, seed 0, radius log-uniform in [0.1, 100]",
        tolerance: 0.0,
        source: Source::NumericalOracle,
        compute: || {
            let q = quadratic(&QuadraticSpec::identity(2), Vector::zeros(2))?;
            let (params, _) = discretization_setup();
            Ok(vec![find_eta_star(&q, &params, 1e-3, &[0.2, 0.1, 0.05, 0.02, 0.01])?])
        },
    },
    Recipe {
        id: "rosenbrock_momentum_lambda",
        description: "momentum-flow gain from momentum 0.18 and lr 1e-3",
        procedure: "lambda = (1 - momentum) / lr",
        tolerance: 1e-9,
        source: Source::PublishedValue,
        compute: || Ok(vec![MomentumParams::from_momentum(20.0, 1.98, 0.18, 1e-3)?.lambda]),
    },
    Recipe {
        id: "g_turning_point",
        description: "minimizer of g_{p,q} for p = 2.1, q = 1.98",
        procedure: "((p-2)(q-1)/((2-q)(p-1)))^((p-1)(q-1)/(p-q))",
        tolerance: 1e-6,
        source: Source::ClosedForm,
        compute: || {
            g_turning_point(2.1, 1.98)
                .map(|s| vec![s])
                .ok_or_else(|| Error::Domain("no turning point".into()))
        },
    },
];

/// Default location of the fixture file inside the crate.
pub fn default_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join("fixtures.json")
}

/// Recompute every fixture from the library.
pub fn compute_all() -> Result<FixtureFile> {
    let fixtures = RECIPES
        .iter()
        .map(|r| {
            Ok(Fixture {
                id: r.id.to_string(),
                description: r.description.to_string(),
                procedure: r.procedure.to_string(),
                values: (r.compute)()?,
                tolerance: r.tolerance,
                source: r.source,
            })
        })
        .collect::<Result<_>>()?;
    Ok(FixtureFile {
        version: FIXTURE_VERSION,
        fixtures,
    })
}

pub fn load(path: &Path) -> Result<FixtureFile> {
    let file: FixtureFile = serde_json::from_slice(&std::fs::read(path)?)?;
    if file.version != FIXTURE_VERSION {
        return Err(Error::Config(vec![format!(
            "fixture file version {} (expected {FIXTURE_VERSION})",
            file.version
        )]));
    }
    Ok(file)
}

/// Write a fixture file (typically the output of [`compute_all`]) to `path`.
pub fn write(path: &Path, file: &FixtureFile) -> Result<()> {
    write_json(path, file)
}

/// Recompute every fixture and diff the result against the file at `stored`.
///
/// Nothing is written; a reviewed regeneration is saved with [`write`].
pub fn regenerate(stored: &Path) -> Result<(FixtureFile, Vec<Mismatch>)> {
    let mismatches = check(&load(stored)?)?;
    Ok((compute_all()?, mismatches))
}

/// Compare stored values against recomputation; stored ids without a recipe are errors.
pub fn check(stored: &FixtureFile) -> Result<Vec<Mismatch>> {
    let mut out = Vec::new();
    for fixture in &stored.fixtures {
        let recipe = RECIPES
            .iter()
            .find(|r| r.id == fixture.id)
            .ok_or_else(|| Error::Config(vec![format!("unknown fixture `{}`", fixture.id)]))?;
        let computed = (recipe.compute)()?;
        let ok = computed.len() == fixture.values.len()
            && computed
                .iter()
                .zip(&fixture.values)
                .all(|(c, s)| (c - s).abs() <= fixture.tolerance);
        if !ok {
            out.push(Mismatch {
                id: fixture.id.clone(),
                stored: fixture.values.clone(),
                computed,
                tolerance: fixture.tolerance,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_unique() {
        let mut ids: Vec<_> = RECIPES.iter().map(|r| r.id).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), RECIPES.len());
    }

    #[test]
    fn stored_file_matches() {
        let stored = load(&default_path()).unwrap();
        assert_eq!(stored.fixtures.len(), RECIPES.len());
        let bad = check(&stored).unwrap();
        assert!(bad.is_empty(), "{bad:?}");
    }

    #[test]
    fn regenerated_file_matches_stored() {
        let (fresh, bad) = regenerate(&default_path()).unwrap();
        assert!(bad.is_empty());
        assert_eq!(fresh, load(&default_path()).unwrap());
    }

    #[test]
    fn drift_detected() {
        let mut stored = load(&default_path()).unwrap();
        stored.fixtures[0].values[0] += 1.0;
        assert_eq!(check(&stored).unwrap().len(), 1);
    }
}
