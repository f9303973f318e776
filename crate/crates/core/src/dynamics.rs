//! The simulation side: the map zoo evaluated in double precision, the
//! Cantor-ladder and escape-time observables, and seeded orbit-ensemble
//! generation.
//!
//! Orbits are advanced in `f64`; the EI estimates downstream are statistical,
//! not shadowing-sensitive, so this matches the precision regime of the
//! simulations being reproduced. Branch domains are right-closed at their
//! left endpoint and results are clamped to `[0,1]` against rounding drift.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::AffineMap;
use crate::ifs;
use crate::theory::rational_to_f64;

/// Default ladder/escape cap standing in for `φ = ∞` on the Cantor set.
pub const DEFAULT_OBSERVABLE_CAP: u32 = 100;

/// Identifier of a map in the zoo.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapId {
    /// `T(x) = m*x mod 1`
    MxMod1(u32),
    /// `3x` on the left third, full middle branch, five slope-15 branches on
    /// the right third
    MixedLinear,
    /// Two convex quadratic full branches
    Nonlinear,
    /// `T(x) = 1/x - floor(1/x)`
    Gauss,
    /// `T(x) = x + π/3 mod 1`
    Rotation,
    /// The three-branch map compatible with the survivor set of
    /// `g(x) = 6x(1-x)`
    QuadraticCompatible,
}

impl fmt::Display for MapId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapId::MxMod1(m) => write!(f, "mx_mod1:{m}"),
            MapId::MixedLinear => write!(f, "mixed_linear"),
            MapId::Nonlinear => write!(f, "nonlinear"),
            MapId::Gauss => write!(f, "gauss"),
            MapId::Rotation => write!(f, "rotation"),
            MapId::QuadraticCompatible => write!(f, "quadratic_compatible"),
        }
    }
}

impl FromStr for MapId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(m) = s.strip_prefix("mx_mod1:") {
            let m: u32 = m
                .parse()
                .map_err(|_| Error::Invalid(format!("bad multiplier in `{s}`")))?;
            if m < 2 {
                return Err(Error::Invalid("mx_mod1 needs m >= 2".into()));
            }
            return Ok(MapId::MxMod1(m));
        }
        match s {
            "mixed_linear" => Ok(MapId::MixedLinear),
            "nonlinear" => Ok(MapId::Nonlinear),
            "gauss" => Ok(MapId::Gauss),
            "rotation" => Ok(MapId::Rotation),
            "quadratic_compatible" => Ok(MapId::QuadraticCompatible),
            _ => Err(Error::UnsupportedMap(s.to_string())),
        }
    }
}

impl MapId {
    /// Whether Lebesgue measure is invariant; non-invariant maps get a
    /// burn-in by default so recorded orbits approximate the invariant
    /// density.
    pub fn preserves_lebesgue(&self) -> bool {
        matches!(
            self,
            MapId::MxMod1(_) | MapId::MixedLinear | MapId::Rotation
        )
    }

    pub fn default_burnin(&self) -> u32 {
        if self.preserves_lebesgue() {
            0
        } else {
            1000
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum BranchKind {
    Affine { slope: f64, intercept: f64 },
    Quadratic { a: f64, b: f64, c: f64 },
    Gauss,
    Rotation { angle: f64 },
}

#[derive(Debug, Clone, Copy)]
struct Branch {
    lo: f64,
    kind: BranchKind,
}

/// A float-evaluable piecewise map of `[0,1]`.
#[derive(Debug, Clone)]
pub struct PiecewiseMap {
    id: String,
    branches: Vec<Branch>,
}

impl PiecewiseMap {
    pub fn from_map_id(id: &MapId) -> Self {
        let branches = match id {
            MapId::MxMod1(m) => (0..*m)
                .map(|k| Branch {
                    lo: k as f64 / *m as f64,
                    kind: BranchKind::Affine {
                        slope: *m as f64,
                        intercept: -(k as f64),
                    },
                })
                .collect(),
            MapId::MixedLinear => {
                let mut branches = vec![
                    Branch {
                        lo: 0.0,
                        kind: BranchKind::Affine {
                            slope: 3.0,
                            intercept: 0.0,
                        },
                    },
                    Branch {
                        lo: 1.0 / 3.0,
                        kind: BranchKind::Affine {
                            slope: 3.0,
                            intercept: -1.0,
                        },
                    },
                ];
                for j in 0..5 {
                    branches.push(Branch {
                        lo: (10 + j) as f64 / 15.0,
                        kind: BranchKind::Affine {
                            slope: 15.0,
                            intercept: -((10 + j) as f64),
                        },
                    });
                }
                branches
            }
            MapId::Nonlinear => vec![
                // (4/3) x (x + 1)
                Branch {
                    lo: 0.0,
                    kind: BranchKind::Quadratic {
                        a: 4.0 / 3.0,
                        b: 4.0 / 3.0,
                        c: 0.0,
                    },
                },
                // (4/3)(x - 1/2)(x + 1/2) = (4/3)x^2 - 1/3
                Branch {
                    lo: 0.5,
                    kind: BranchKind::Quadratic {
                        a: 4.0 / 3.0,
                        b: 0.0,
                        c: -1.0 / 3.0,
                    },
                },
            ],
            MapId::Gauss => vec![Branch {
                lo: 0.0,
                kind: BranchKind::Gauss,
            }],
            MapId::Rotation => vec![Branch {
                lo: 0.0,
                kind: BranchKind::Rotation {
                    angle: std::f64::consts::PI / 3.0,
                },
            }],
            MapId::QuadraticCompatible => {
                let sqrt3 = 3f64.sqrt();
                let left = (3.0 - sqrt3) / 6.0;
                let right = (3.0 + sqrt3) / 6.0;
                vec![
                    Branch {
                        lo: 0.0,
                        kind: BranchKind::Quadratic {
                            a: -6.0,
                            b: 6.0,
                            c: 0.0,
                        },
                    },
                    Branch {
                        lo: left,
                        kind: BranchKind::Affine {
                            slope: sqrt3,
                            intercept: -left * sqrt3,
                        },
                    },
                    Branch {
                        lo: right,
                        kind: BranchKind::Quadratic {
                            a: -6.0,
                            b: 6.0,
                            c: 0.0,
                        },
                    },
                ]
            }
        };
        PiecewiseMap {
            id: id.to_string(),
            branches,
        }
    }

    /// Float mirror of an exact piecewise-affine map.
    pub fn from_exact(map: &AffineMap) -> Self {
        let branches = map
            .branches()
            .iter()
            .map(|b| Branch {
                lo: rational_to_f64(b.domain.lo()),
                kind: BranchKind::Affine {
                    slope: rational_to_f64(&b.slope),
                    intercept: rational_to_f64(&b.intercept),
                },
            })
            .collect();
        PiecewiseMap {
            id: map.id().to_string(),
            branches,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// One application of the map. Branch domains are right-closed at their
    /// left endpoint; the result is clamped to `[0,1]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("{x} outside [0,1]")));
        }
        let idx = self
            .branches
            .partition_point(|b| b.lo <= x)
            .saturating_sub(1);
        let y = match self.branches[idx].kind {
            BranchKind::Affine { slope, intercept } => slope * x + intercept,
            BranchKind::Quadratic { a, b, c } => a * x * x + b * x + c,
            BranchKind::Gauss => {
                if x == 0.0 {
                    0.0
                } else {
                    let inv = 1.0 / x;
                    inv - inv.floor()
                }
            }
            BranchKind::Rotation { angle } => (x + angle).rem_euclid(1.0),
        };
        Ok(y.clamp(0.0, 1.0))
    }
}

/// `g(x) = 6x(1-x)`, the quadratic generator of the survivor Cantor set.
pub fn logistic6(x: f64) -> f64 {
    6.0 * x * (1.0 - x)
}

/// The step index of the ternary-Cantor gap containing `x`, computed by
/// iterated ternary zoom; `cap` stands in for `φ = ∞` on the Cantor set.
pub fn ternary_ladder(x: f64, cap: u32) -> u32 {
    debug_assert!(cap >= 1);
    let mut y = x;
    for level in 1..=cap {
        if y > 1.0 / 3.0 && y < 2.0 / 3.0 {
            return level;
        }
        y = if y <= 1.0 / 3.0 {
            3.0 * y
        } else {
            3.0 * y - 2.0
        };
    }
    cap
}

/// Least `j <= cap` with `g^j(x) ∉ [0,1]`, else `cap`.
pub fn escape_time(g: impl Fn(f64) -> f64, x: f64, cap: u32) -> u32 {
    let mut y = x;
    for j in 1..=cap {
        y = g(y);
        if !(0.0..=1.0).contains(&y) {
            return j;
        }
    }
    cap
}

/// Observable evaluated along orbits; integer "ladder levels" with a cap
/// sentinel for points that never leave the target Cantor set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Ladder { cap: u32 },
    Escape { cap: u32 },
}

impl Observable {
    pub fn eval(&self, x: f64) -> u32 {
        match *self {
            Observable::Ladder { cap } => ternary_ladder(x, cap),
            Observable::Escape { cap } => ifs::quadratic_survivor_observable(x, cap),
        }
    }

    pub fn cap(&self) -> u32 {
        match *self {
            Observable::Ladder { cap } | Observable::Escape { cap } => cap,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Observable::Ladder { .. } => "ladder",
            Observable::Escape { .. } => "escape",
        }
    }

    pub fn parse(s: &str, cap: u32) -> Result<Self> {
        match s {
            "ladder" => Ok(Observable::Ladder { cap }),
            "escape" => Ok(Observable::Escape { cap }),
            _ => Err(Error::Invalid(format!(
                "unknown observable `{s}` (expected ladder|escape)"
            ))),
        }
    }
}

/// Provenance of one orbit's series.
#[derive(Debug, Clone)]
pub struct SeriesOrigin {
    pub map_id: String,
    pub seed: u64,
    pub orbit_index: u32,
    pub x0: f64,
}

/// Levels of one orbit: `levels[i] = φ(T^i(x0))`.
#[derive(Debug, Clone)]
pub struct ObservableSeries {
    pub levels: Vec<u32>,
    pub origin: SeriesOrigin,
}

impl ObservableSeries {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

/// `ℓ` uniform variates on `[0,1)` from ChaCha8 seeded with `seed`;
/// bit-reproducible for equal seeds.
pub fn sample_initial_points(ell: u32, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..ell).map(|_| rng.gen::<f64>()).collect()
}

/// Observable levels along one orbit, after `burnin` unrecorded steps.
pub fn generate_series(
    map: &PiecewiseMap,
    observable: Observable,
    n: usize,
    x0: f64,
    burnin: u32,
) -> Result<Vec<u32>> {
    if n == 0 {
        return Err(Error::Domain("series length must be at least 1".into()));
    }
    let mut x = x0;
    for _ in 0..burnin {
        x = map.eval(x)?;
    }
    let mut levels = Vec::with_capacity(n);
    for _ in 0..n {
        levels.push(observable.eval(x));
        x = map.eval(x)?;
    }
    Ok(levels)
}

/// A seeded ensemble of `ell` orbits of length `n`. Orbits are generated in
/// parallel but indexed deterministically, so results are identical at any
/// thread count.
pub fn generate_ensemble(
    map: &PiecewiseMap,
    observable: Observable,
    n: usize,
    ell: u32,
    seed: u64,
    burnin: u32,
) -> Result<Vec<ObservableSeries>> {
    let points = sample_initial_points(ell, seed);
    points
        .par_iter()
        .enumerate()
        .map(|(i, &x0)| {
            let levels = generate_series(map, observable, n, x0, burnin)?;
            Ok(ObservableSeries {
                levels,
                origin: SeriesOrigin {
                    map_id: map.id().to_string(),
                    seed,
                    orbit_index: i as u32,
                    x0,
                },
            })
        })
        .collect()
}
