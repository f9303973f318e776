//! Exact extremal-index machinery: O'Brien's ratio `θ = μ(A_{q,L})/μ(U_L)`,
//! the gap schedules `q_n` and normalising times `w_n`, closed-form EI
//! values, and the covering-count diagnostics for
//! `C ∩ T^{-q}(C)`.
//!
//! `A_{q,L} = U ∩ T^{-1}(U^c) ∩ … ∩ T^{-q}(U^c)` is computed by refining the
//! components of `U` through the branch cylinders of `T^j`: each surviving
//! piece carries the affine restriction of `T^j`, so the whole computation
//! stays inside exact rational arithmetic and never materialises the
//! (exponentially large) full preimages `T^{-j}(U^c)`.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::dynamics::MapId;
use crate::error::{Error, Result};
use crate::exact::{
    cantor_approx, fmt_rat, preimage_mod1_within, AffineMap, Caps, IntervalSet, Rational,
    SetBuilder,
};

/// Exact O'Brien ratio at a finite level: `theta = mu_a / mu_u`.
#[derive(Debug, Clone)]
pub struct TheoryResult {
    pub map_id: String,
    /// Threshold index: `U = C_level` (or `Λ_level`).
    pub level: u32,
    /// Gap parameter `q` of the cluster-terminating event.
    pub q: u32,
    pub mu_u: Rational,
    pub mu_a: Rational,
    pub theta: Rational,
}

impl TheoryResult {
    /// `1 - theta`, the clustering excess.
    pub fn one_minus_theta(&self) -> Rational {
        Rational::one() - &self.theta
    }
}

/// Normalising schedule for one threshold index.
#[derive(Debug, Clone)]
pub struct Schedule {
    pub n: u32,
    /// Threshold index (Cantor level of the exceedance set).
    pub level: u32,
    pub q: u32,
    /// `w = floor(tau * (3/2)^level)`.
    pub w: BigInt,
    pub tau: Rational,
}

impl Schedule {
    /// Schedule for `m*x mod 1` with `m` not a power of 3: threshold index
    /// `n`, `q_n` the least `q` with `m^q >= 3^n`.
    pub fn incompatible(m: u32, n: u32, tau: &Rational) -> Result<Schedule> {
        let q = q_schedule(m, n)?;
        Ok(Schedule {
            n,
            level: n,
            q,
            w: w_schedule(tau, n),
            tau: tau.clone(),
        })
    }

    /// Schedule for `m = 3^k`: threshold index `n+k-1` and
    /// `q = floor((n+k-1)/k)`.
    pub fn compatible(k: u32, n: u32, tau: &Rational) -> Result<Schedule> {
        if k == 0 || n == 0 {
            return Err(Error::Domain("need k >= 1 and n >= 1".into()));
        }
        let level = n + k - 1;
        Ok(Schedule {
            n,
            level,
            q: level / k,
            w: w_schedule(tau, level),
            tau: tau.clone(),
        })
    }
}

/// Returns `k` when `m = 3^k` (with `k >= 0`), `None` otherwise.
pub fn power_of_three_exponent(m: u32) -> Option<u32> {
    let mut m = m;
    let mut k = 0;
    while m.is_multiple_of(3) {
        m /= 3;
        k += 1;
    }
    (m == 1).then_some(k)
}

/// The least integer `q >= 1` with `m^q >= 3^n`, i.e. `⌈n log3 / log m⌉`,
/// decided by exact integer power comparison. Rejects `m = 3^k`, where the
/// compatible-case schedule `⌊(n+k-1)/k⌋` applies instead.
pub fn q_schedule(m: u32, n: u32) -> Result<u32> {
    if m < 2 {
        return Err(Error::Domain(format!("need m >= 2, got {m}")));
    }
    if n < 1 {
        return Err(Error::Domain(format!("need n >= 1, got {n}")));
    }
    if power_of_three_exponent(m).is_some() {
        return Err(Error::Domain(format!(
            "m = {m} is a power of 3; use the compatible-case schedule floor((n+k-1)/k)"
        )));
    }
    let target = BigInt::from(3).pow(n);
    let base = BigInt::from(m);
    let mut power = base.clone();
    let mut q = 1u32;
    while power < target {
        power *= &base;
        q += 1;
    }
    Ok(q)
}

/// `w = floor(tau * (3/2)^level)` by exact integer arithmetic.
pub fn w_schedule(tau: &Rational, level: u32) -> BigInt {
    let ratio = Rational::new(BigInt::from(3).pow(level), BigInt::from(2).pow(level));
    (tau * ratio).floor().to_integer()
}

/// Closed-form EI for the maps the theory settles: 1 when `m` is not a power
/// of 3, `1 - 2^k/3^k` when `m = 3^k`, and `2/3` for the mixed linear map.
/// For survivor sets of a general IFS see `ifs::theoretical_ei`.
pub fn theoretical_ei(map: &MapId) -> Result<Rational> {
    match map {
        MapId::MxMod1(m) => match power_of_three_exponent(*m) {
            Some(k) => {
                Ok(Rational::one() - Rational::new(BigInt::from(2).pow(k), BigInt::from(3).pow(k)))
            }
            None => Ok(Rational::one()),
        },
        MapId::MixedLinear => Ok(Rational::new(BigInt::from(2), BigInt::from(3))),
        other => Err(Error::NoClosedForm(other.to_string())),
    }
}

/// A sub-piece of `U` on which `T^j` is a single affine map.
struct Piece {
    lo: Rational,
    hi: Rational,
    slope: Rational,
    intercept: Rational,
}

/// The exact cluster-terminating event
/// `A_{q} = U ∩ T^{-1}(U^c) ∩ … ∩ T^{-q}(U^c)` as an interval set.
pub fn cluster_terminator_set(
    map: &AffineMap,
    u_set: &IntervalSet,
    q: u32,
    caps: &Caps,
) -> Result<IntervalSet> {
    if q == 0 || u_set.is_empty() {
        return Ok(u_set.clone());
    }
    let u_comp = u_set.complement_in_unit();
    let mut pieces: Vec<Piece> = u_set
        .intervals()
        .iter()
        .map(|iv| Piece {
            lo: iv.lo().clone(),
            hi: iv.hi().clone(),
            slope: Rational::one(),
            intercept: Rational::zero(),
        })
        .collect();

    for _step in 1..=q {
        let mut next: Vec<Piece> = Vec::new();
        for p in &pieces {
            let y0 = &p.slope * &p.lo + &p.intercept;
            let y1 = &p.slope * &p.hi + &p.intercept;
            let (ylo, yhi) = if y0 <= y1 { (y0, y1) } else { (y1, y0) };
            let branches = map.branches();
            let start = branches.partition_point(|b| *b.domain.hi() <= ylo);
            for br in &branches[start..] {
                if *br.domain.lo() >= yhi {
                    break;
                }
                let seg_lo = ylo.clone().max(br.domain.lo().clone());
                let seg_hi = yhi.clone().min(br.domain.hi().clone());
                if seg_lo >= seg_hi {
                    continue;
                }
                // T^{step} restricted to this cylinder
                let slope = &br.slope * &p.slope;
                let intercept = &br.slope * &p.intercept + &br.intercept;
                let z0 = &br.slope * &seg_lo + &br.intercept;
                let z1 = &br.slope * &seg_hi + &br.intercept;
                let (zlo, zhi) = if z0 <= z1 { (z0, z1) } else { (z1, z0) };
                // survivors of this step: T^{step}(x) must fall in U^c
                let ucs = u_comp.intervals();
                let st = ucs.partition_point(|c| *c.hi() <= zlo);
                for c in &ucs[st..] {
                    if *c.lo() >= zhi {
                        break;
                    }
                    let wlo = zlo.clone().max(c.lo().clone());
                    let whi = zhi.clone().min(c.hi().clone());
                    if wlo >= whi {
                        continue;
                    }
                    let x0 = (&wlo - &intercept) / &slope;
                    let x1 = (&whi - &intercept) / &slope;
                    caps.check_denom(&x0)?;
                    let (lo, hi) = if x0 <= x1 { (x0, x1) } else { (x1, x0) };
                    next.push(Piece {
                        lo,
                        hi,
                        slope: slope.clone(),
                        intercept: intercept.clone(),
                    });
                }
            }
        }
        caps.check_intervals(next.len())?;
        next.sort_by(|a, b| a.lo.cmp(&b.lo));
        pieces = next;
        if pieces.is_empty() {
            break;
        }
    }

    let mut b = SetBuilder::default();
    for p in pieces {
        b.push(p.lo, p.hi);
    }
    Ok(b.finish())
}

/// O'Brien's ratio with an explicit exceedance set `U`.
pub fn obrien_theta_with(
    map: &AffineMap,
    u_set: &IntervalSet,
    level: u32,
    q: u32,
    caps: &Caps,
) -> Result<TheoryResult> {
    let mu_u = u_set.measure();
    if mu_u.is_zero() {
        return Err(Error::Domain("exceedance set has measure zero".into()));
    }
    let a = cluster_terminator_set(map, u_set, q, caps)?;
    let mu_a = a.measure();
    let theta = &mu_a / &mu_u;
    debug_assert!(!theta.is_negative() && theta <= Rational::one());
    Ok(TheoryResult {
        map_id: map.id().to_string(),
        level,
        q,
        mu_u,
        mu_a,
        theta,
    })
}

/// O'Brien's ratio with `U = C_level` (the Cantor-ladder exceedance set).
pub fn obrien_theta(map: &AffineMap, level: u32, q: u32, caps: &Caps) -> Result<TheoryResult> {
    let u = cantor_approx(level, caps)?;
    obrien_theta_with(map, &u, level, q, caps)
}

/// Exact measure of `C_n ∩ T^{-q}(C_n)` for `T = m*x mod 1`.
pub fn cantor_self_intersection_measure(m: u32, q: u32, n: u32, caps: &Caps) -> Result<Rational> {
    let cn = cantor_approx(n, caps)?;
    Ok(preimage_mod1_within(&cn, m, q, &cn, caps)?.measure())
}

/// Covering counts of §-diagnostics: `N*` counts the components of `C_n`
/// whose interior meets `C_n ∩ T^{-q}(C_n)`; the refined count replaces both
/// intersectands by depth `d >= n`. Interior meets are decided with full
/// closed-set semantics (single-point touches inside the interior count).
pub fn covering_counts(m: u32, q: u32, n: u32, d: u32, caps: &Caps) -> Result<(u64, u64)> {
    if d < n {
        return Err(Error::Domain(format!("refine depth {d} below level {n}")));
    }
    let base = cantor_approx(n, caps)?;
    let n_star = interior_meet_count(&base, n, m, q, caps)?;
    let n_refined = if d == n {
        n_star
    } else {
        interior_meet_count(&base, d, m, q, caps)?
    };
    Ok((n_star, n_refined))
}

/// Counts components `I` of `base` with
/// `int(I) ∩ C_depth ∩ T^{-q}(C_depth) != ∅` using exact closed-pair tests.
fn interior_meet_count(base: &IntervalSet, depth: u32, m: u32, q: u32, caps: &Caps) -> Result<u64> {
    let deep = cantor_approx(depth, caps)?;
    let scale = Rational::from_integer(BigInt::from(m).pow(q));
    let deep_ivs = deep.intervals();
    let mut count = 0u64;
    for window in base.intervals() {
        // components of C_depth meeting the window (they nest inside it)
        let start = deep_ivs.partition_point(|iv| iv.hi() < window.lo());
        let mut left = Vec::new();
        for iv in &deep_ivs[start..] {
            if iv.lo() > window.hi() {
                break;
            }
            left.push((iv.lo().clone(), iv.hi().clone()));
        }
        // components of T^{-q}(C_depth) overlapping the window (closed)
        let mut right = Vec::new();
        let k_min = ((window.lo() * &scale).ceil() - Rational::one()).max(Rational::zero());
        let k_max = ((window.hi() * &scale).floor()).min(&scale - Rational::one());
        let mut k = k_min;
        while k <= k_max {
            let local_lo = window.lo() * &scale - &k;
            let local_hi = window.hi() * &scale - &k;
            let st = deep_ivs.partition_point(|iv| *iv.hi() < local_lo);
            for iv in &deep_ivs[st..] {
                if *iv.lo() > local_hi {
                    break;
                }
                right.push(((iv.lo() + &k) / &scale, (iv.hi() + &k) / &scale));
            }
            k += Rational::one();
        }
        if pair_meets_interior(&left, &right, window.lo(), window.hi()) {
            count += 1;
        }
    }
    Ok(count)
}

/// Whether some closed pair `a ∈ left`, `b ∈ right` intersects strictly
/// inside `(lo, hi)`. Both lists are sorted by left endpoint.
fn pair_meets_interior(
    left: &[(Rational, Rational)],
    right: &[(Rational, Rational)],
    lo: &Rational,
    hi: &Rational,
) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < left.len() && j < right.len() {
        let a = &left[i];
        let b = &right[j];
        let x0 = (&a.0).max(&b.0);
        let x1 = (&a.1).min(&b.1);
        if x0 <= x1 && x1 > lo && x0 < hi {
            return true;
        }
        if a.1 <= b.1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    false
}

/// Least-squares slope of `log N` against `n log 3`: a box-dimension
/// estimate from covering counts.
pub fn dim_estimate_from_counts(counts: &[(u32, u64)]) -> Result<f64> {
    if counts.len() < 2 {
        return Err(Error::Domain("need at least two count pairs".into()));
    }
    let ln3 = 3f64.ln();
    let mut pts = Vec::with_capacity(counts.len());
    for &(n, c) in counts {
        if c == 0 {
            return Err(Error::Domain("zero covering count has no logarithm".into()));
        }
        pts.push((n as f64 * ln3, (c as f64).ln()));
    }
    let xbar = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in &pts {
        sxx += (x - xbar) * (x - xbar);
        sxy += (x - xbar) * (y - ybar);
    }
    if sxx == 0.0 {
        return Err(Error::Domain("need at least two distinct levels".into()));
    }
    Ok(sxy / sxx)
}

/// CSV row for a [`TheoryResult`]: `level,q,mu_U,mu_A,theta` with rationals
/// printed as `p/q`.
pub fn theory_csv_row(r: &TheoryResult) -> String {
    format!(
        "{},{},{},{},{}",
        r.level,
        r.q,
        fmt_rat(&r.mu_u),
        fmt_rat(&r.mu_a),
        fmt_rat(&r.theta)
    )
}

/// Decimal approximation of a rational to 12 significant digits.
pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
