//! Exact rational arithmetic on finite unions of closed subintervals of `[0,1]`.
//!
//! Sets are kept in a canonical form: components are sorted, pairwise
//! disjoint, non-degenerate, and adjacent components sharing an endpoint are
//! merged. Complements are stored as their closure. Both conventions only
//! move Lebesgue-null sets around, so every measure computed here is exact;
//! closed-set touching (needed e.g. by the Digraph-IFS vertex filter) is
//! recovered through [`IntervalSet::touches`] instead of degenerate
//! components.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational number; endpoints are always in lowest terms.
pub type Rational = num_rational::BigRational;

/// Shorthand for a small rational constant.
pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Formats a rational as `p/q` even when the denominator is 1.
pub fn fmt_rat(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses a rational from `p/q` (or a bare integer `p`).
pub fn parse_rat(s: &str) -> Result<Rational> {
    let bad = || Error::Invalid(format!("malformed rational `{s}`"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(Error::Invalid(format!("zero denominator in `{s}`")));
            }
            Ok(Rational::new(n, d))
        }
        None => {
            let n: BigInt = s.trim().parse().map_err(|_| bad())?;
            Ok(Rational::from_integer(n))
        }
    }
}

/// Resource caps for the exact pipeline. Exceeding a cap is a clean
/// [`Error::ResourceLimit`], never silent truncation.
#[derive(Debug, Clone)]
pub struct Caps {
    /// Deepest Cantor/survivor approximation level.
    pub max_cantor_level: u32,
    /// Bit-length cap on endpoint denominators (they grow like `3^n m^q`).
    pub max_denom_bits: u64,
    /// Budget on the number of interval components an operation may produce.
    pub max_intervals: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_cantor_level: 20,
            max_denom_bits: 4096,
            max_intervals: 20_000_000,
        }
    }
}

impl Caps {
    pub(crate) fn check_level(&self, n: u32) -> Result<()> {
        if n > self.max_cantor_level {
            return Err(Error::ResourceLimit(format!(
                "level {n} exceeds cap {}",
                self.max_cantor_level
            )));
        }
        Ok(())
    }

    pub(crate) fn check_intervals(&self, count: usize) -> Result<()> {
        if count > self.max_intervals {
            return Err(Error::ResourceLimit(format!(
                "{count} intervals exceed budget {}",
                self.max_intervals
            )));
        }
        Ok(())
    }

    pub(crate) fn check_denom(&self, r: &Rational) -> Result<()> {
        let bits = r.denom().bits();
        if bits > self.max_denom_bits {
            return Err(Error::ResourceLimit(format!(
                "denominator of {} bits exceeds cap {}",
                bits, self.max_denom_bits
            )));
        }
        Ok(())
    }
}

/// A closed interval `[lo, hi]` with exact rational endpoints, `lo <= hi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalInterval {
    lo: Rational,
    hi: Rational,
}

impl RationalInterval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        if lo > hi {
            return Err(Error::Invalid(format!(
                "interval endpoints out of order: {} > {}",
                fmt_rat(&lo),
                fmt_rat(&hi)
            )));
        }
        Ok(RationalInterval { lo, hi })
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn length(&self) -> Rational {
        &self.hi - &self.lo
    }
}

/// A finite union of closed rational intervals in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntervalSet {
    intervals: Vec<RationalInterval>,
}

/// Accumulates intervals arriving in ascending `lo` order, merging touching
/// or overlapping neighbours and dropping degenerate ones.
#[derive(Default)]
pub(crate) struct SetBuilder {
    out: Vec<RationalInterval>,
}

impl SetBuilder {
    pub(crate) fn push(&mut self, lo: Rational, hi: Rational) {
        if lo >= hi {
            return;
        }
        if let Some(last) = self.out.last_mut() {
            debug_assert!(lo >= last.lo);
            if lo <= last.hi {
                if hi > last.hi {
                    last.hi = hi;
                }
                return;
            }
        }
        self.out.push(RationalInterval { lo, hi });
    }

    pub(crate) fn finish(self) -> IntervalSet {
        IntervalSet {
            intervals: self.out,
        }
    }
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet {
            intervals: Vec::new(),
        }
    }

    /// The unit interval `[0,1]`.
    pub fn unit() -> Self {
        IntervalSet {
            intervals: vec![RationalInterval {
                lo: Rational::zero(),
                hi: Rational::one(),
            }],
        }
    }

    /// Builds a canonical set from arbitrary endpoint pairs. Pairs with
    /// `lo > hi` are rejected; degenerate pairs are dropped.
    pub fn from_endpoints(pairs: Vec<(Rational, Rational)>) -> Result<Self> {
        let mut ivs = Vec::with_capacity(pairs.len());
        for (lo, hi) in pairs {
            ivs.push(RationalInterval::new(lo, hi)?);
        }
        ivs.sort_by(|a, b| a.lo.cmp(&b.lo));
        let mut b = SetBuilder::default();
        for iv in ivs {
            b.push(iv.lo, iv.hi);
        }
        Ok(b.finish())
    }

    pub fn intervals(&self) -> &[RationalInterval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Number of maximal intervals (connected components).
    pub fn component_count(&self) -> usize {
        self.intervals.len()
    }

    /// Exact Lebesgue measure.
    pub fn measure(&self) -> Rational {
        let mut total = Rational::zero();
        for iv in &self.intervals {
            total += iv.length();
        }
        total
    }

    /// Point membership (closed intervals).
    pub fn contains(&self, x: &Rational) -> bool {
        let idx = self.intervals.partition_point(|iv| iv.hi < *x);
        self.intervals.get(idx).is_some_and(|iv| iv.lo <= *x)
    }

    /// Set union.
    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut b = SetBuilder::default();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() || j < other.intervals.len() {
            let take_left = match (self.intervals.get(i), other.intervals.get(j)) {
                (Some(a), Some(c)) => a.lo <= c.lo,
                (Some(_), None) => true,
                _ => false,
            };
            let iv = if take_left {
                i += 1;
                &self.intervals[i - 1]
            } else {
                j += 1;
                &other.intervals[j - 1]
            };
            b.push(iv.lo.clone(), iv.hi.clone());
        }
        b.finish()
    }

    /// Set intersection. Components meeting in a single point are dropped
    /// (see the canonical-form note in the module docs); use
    /// [`IntervalSet::touches`] when closed-set non-emptiness is the question.
    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut b = SetBuilder::default();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let a = &self.intervals[i];
            let c = &other.intervals[j];
            let lo = if a.lo >= c.lo { &a.lo } else { &c.lo };
            let hi = if a.hi <= c.hi { &a.hi } else { &c.hi };
            if lo < hi {
                b.push(lo.clone(), hi.clone());
            }
            if a.hi <= c.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        b.finish()
    }

    /// Closure of the complement within `[0,1]`. The operand must be a
    /// subset of `[0,1]`.
    pub fn complement_in_unit(&self) -> IntervalSet {
        let mut b = SetBuilder::default();
        let mut prev = Rational::zero();
        for iv in &self.intervals {
            debug_assert!(iv.lo >= Rational::zero() && iv.hi <= Rational::one());
            b.push(prev, iv.lo.clone());
            prev = iv.hi.clone();
        }
        b.push(prev, Rational::one());
        b.finish()
    }

    /// Closure of `self \ other` for subsets of `[0,1]`.
    pub fn difference(&self, other: &IntervalSet) -> IntervalSet {
        self.intersect(&other.complement_in_unit())
    }

    /// Whether the closed sets intersect, including single-point touching.
    pub fn touches(&self, other: &IntervalSet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let a = &self.intervals[i];
            let c = &other.intervals[j];
            if a.lo <= c.hi && c.lo <= a.hi {
                return true;
            }
            if a.hi < c.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        false
    }

    /// Whether every component of `self` lies inside a component of `other`.
    pub fn is_subset(&self, other: &IntervalSet) -> bool {
        let mut j = 0;
        for a in &self.intervals {
            while j < other.intervals.len() && other.intervals[j].hi < a.lo {
                j += 1;
            }
            match other.intervals.get(j) {
                Some(c) if c.lo <= a.lo && a.hi <= c.hi => {}
                _ => return false,
            }
        }
        true
    }

    /// The image under `x -> slope*x + intercept`, `slope != 0`.
    pub fn affine_image(&self, slope: &Rational, intercept: &Rational) -> Result<IntervalSet> {
        if slope.is_zero() {
            return Err(Error::Invalid("affine image with zero slope".into()));
        }
        let mut pairs: Vec<RationalInterval> = self
            .intervals
            .iter()
            .map(|iv| {
                let a = slope * &iv.lo + intercept;
                let b = slope * &iv.hi + intercept;
                if slope.is_positive() {
                    RationalInterval { lo: a, hi: b }
                } else {
                    RationalInterval { lo: b, hi: a }
                }
            })
            .collect();
        if slope.is_negative() {
            pairs.reverse();
        }
        let mut b = SetBuilder::default();
        for iv in pairs {
            b.push(iv.lo, iv.hi);
        }
        Ok(b.finish())
    }

    /// One component per line, `lo_num/lo_den hi_num/hi_den`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for iv in &self.intervals {
            s.push_str(&fmt_rat(&iv.lo));
            s.push(' ');
            s.push_str(&fmt_rat(&iv.hi));
            s.push('\n');
        }
        s
    }

    /// Parses the [`IntervalSet::to_text`] format (blank lines and `#`
    /// comments allowed) and normalizes.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (lo, hi) = match (parts.next(), parts.next(), parts.next()) {
                (Some(lo), Some(hi), None) => (lo, hi),
                _ => {
                    return Err(Error::Invalid(format!(
                        "expected `lo hi` per line, got `{line}`"
                    )))
                }
            };
            pairs.push((parse_rat(lo)?, parse_rat(hi)?));
        }
        IntervalSet::from_endpoints(pairs)
    }
}

/// The `n`-th ternary Cantor approximation: `2^n` closed intervals of length
/// `3^{-n}` obtained by removing middle thirds.
pub fn cantor_approx(n: u32, caps: &Caps) -> Result<IntervalSet> {
    caps.check_level(n)?;
    caps.check_intervals(1usize << n.min(62))?;
    let third = rat(1, 3);
    let mut current = vec![(Rational::zero(), Rational::one())];
    for _ in 0..n {
        let mut next = Vec::with_capacity(current.len() * 2);
        for (lo, hi) in &current {
            let len3 = (hi - lo) * &third;
            next.push((lo.clone(), lo + &len3));
            next.push((hi - &len3, hi.clone()));
        }
        current = next;
    }
    let mut b = SetBuilder::default();
    for (lo, hi) in current {
        b.push(lo, hi);
    }
    Ok(b.finish())
}

/// Exact preimage `T^{-j}(a)` for `T(x) = m*x mod 1`: the union of the
/// `m^j` contracted translates `(a + k)/m^j`, `0 <= k < m^j`. Measure is
/// preserved. Requires `a ⊆ [0,1]`.
pub fn preimage_mod1_affine(a: &IntervalSet, m: u32, j: u32, caps: &Caps) -> Result<IntervalSet> {
    if m < 2 || j < 1 {
        return Err(Error::Domain(format!(
            "need m >= 2 and j >= 1, got m={m}, j={j}"
        )));
    }
    let scale = BigInt::from(m).pow(j);
    let copies = scale.to_usize().unwrap_or(usize::MAX);
    caps.check_intervals(copies.saturating_mul(a.component_count().max(1)))?;
    let scale = Rational::from_integer(scale);
    let mut b = SetBuilder::default();
    let mut k = Rational::zero();
    while k < scale {
        for iv in a.intervals() {
            let lo = (iv.lo() + &k) / &scale;
            let hi = (iv.hi() + &k) / &scale;
            caps.check_denom(&lo)?;
            b.push(lo, hi);
        }
        k += Rational::one();
    }
    Ok(b.finish())
}

/// `T^{-j}(a) ∩ window` for `T(x) = m*x mod 1`, computed without
/// materialising the full preimage: only the translates overlapping each
/// window component are visited.
pub fn preimage_mod1_within(
    a: &IntervalSet,
    m: u32,
    j: u32,
    window: &IntervalSet,
    caps: &Caps,
) -> Result<IntervalSet> {
    if m < 2 || j < 1 {
        return Err(Error::Domain(format!(
            "need m >= 2 and j >= 1, got m={m}, j={j}"
        )));
    }
    let scale = Rational::from_integer(BigInt::from(m).pow(j));
    let mut b = SetBuilder::default();
    let mut produced = 0usize;
    for w in window.intervals() {
        // translate indices k with [k, k+1]/m^j meeting [w.lo, w.hi]
        let k_min = {
            let t = (w.lo() * &scale).ceil() - Rational::one();
            t.max(Rational::zero())
        };
        let k_max = {
            let t = (w.hi() * &scale).floor();
            t.min(&scale - Rational::one())
        };
        let mut k = k_min;
        while k <= k_max {
            // pull the window back through x -> (x + k)/m^j
            let local_lo = w.lo() * &scale - &k;
            let local_hi = w.hi() * &scale - &k;
            let ivs = a.intervals();
            let start = ivs.partition_point(|iv| *iv.hi() < local_lo);
            for iv in &ivs[start..] {
                if *iv.lo() > local_hi {
                    break;
                }
                let lo = iv.lo().clone().max(local_lo.clone());
                let hi = iv.hi().clone().min(local_hi.clone());
                if lo < hi {
                    let out_lo = (lo + &k) / &scale;
                    let out_hi = (hi + &k) / &scale;
                    caps.check_denom(&out_lo)?;
                    produced += 1;
                    caps.check_intervals(produced)?;
                    b.push(out_lo, out_hi);
                }
            }
            k += Rational::one();
        }
    }
    Ok(b.finish())
}

/// One affine branch of an exact piecewise map: `x -> slope*x + intercept`
/// on `domain`.
#[derive(Debug, Clone)]
pub struct AffineBranch {
    pub domain: RationalInterval,
    pub slope: Rational,
    pub intercept: Rational,
}

impl AffineBranch {
    /// Image of the branch domain.
    pub fn image(&self) -> RationalInterval {
        let a = &self.slope * self.domain.lo() + &self.intercept;
        let b = &self.slope * self.domain.hi() + &self.intercept;
        if a <= b {
            RationalInterval { lo: a, hi: b }
        } else {
            RationalInterval { lo: b, hi: a }
        }
    }
}

/// An exact piecewise-affine self-map of `[0,1]`: branch domains tile
/// `[0,1]`, each branch is monotone with rational coefficients and maps its
/// domain into `[0,1]`. Branch domains are right-closed at their left
/// endpoint for evaluation.
#[derive(Debug, Clone)]
pub struct AffineMap {
    id: String,
    branches: Vec<AffineBranch>,
}

impl AffineMap {
    pub fn new(id: impl Into<String>, branches: Vec<AffineBranch>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::Invalid(
                "a piecewise map needs at least one branch".into(),
            ));
        }
        let mut prev = Rational::zero();
        for br in &branches {
            if *br.domain.lo() != prev {
                return Err(Error::Invalid(format!(
                    "branch domains must tile [0,1]; gap or overlap at {}",
                    fmt_rat(br.domain.lo())
                )));
            }
            if br.slope.is_zero() {
                return Err(Error::Invalid("zero-slope branch".into()));
            }
            let img = br.image();
            if *img.lo() < Rational::zero() || *img.hi() > Rational::one() {
                return Err(Error::Invalid("branch image leaves [0,1]".into()));
            }
            prev = br.domain.hi().clone();
        }
        if prev != Rational::one() {
            return Err(Error::Invalid("branch domains must end at 1".into()));
        }
        Ok(AffineMap {
            id: id.into(),
            branches,
        })
    }

    /// `T(x) = m*x mod 1` written as `m` full affine branches.
    pub fn mx_mod1(m: u32) -> Result<Self> {
        if m < 2 {
            return Err(Error::Domain(format!("mx_mod1 needs m >= 2, got {m}")));
        }
        let mm = rat(m as i64, 1);
        let branches = (0..m)
            .map(|k| AffineBranch {
                domain: RationalInterval {
                    lo: rat(k as i64, m as i64),
                    hi: rat(k as i64 + 1, m as i64),
                },
                slope: mm.clone(),
                intercept: rat(-(k as i64), 1),
            })
            .collect();
        AffineMap::new(format!("mx_mod1:{m}"), branches)
    }

    /// The mixed linear map: `3x` on `[0,1/3]`, the full branch `3x-1` on
    /// `[1/3,2/3]`, and five slope-15 branches sending the equal fifths of
    /// `[2/3,1]` onto `[0,1]`. Branch reciprocal slopes sum to 1, so
    /// Lebesgue measure is invariant.
    pub fn mixed_linear() -> Self {
        let mut branches = vec![
            AffineBranch {
                domain: RationalInterval {
                    lo: rat(0, 1),
                    hi: rat(1, 3),
                },
                slope: rat(3, 1),
                intercept: rat(0, 1),
            },
            AffineBranch {
                domain: RationalInterval {
                    lo: rat(1, 3),
                    hi: rat(2, 3),
                },
                slope: rat(3, 1),
                intercept: rat(-1, 1),
            },
        ];
        for jj in 0..5i64 {
            branches.push(AffineBranch {
                domain: RationalInterval {
                    lo: rat(10 + jj, 15),
                    hi: rat(11 + jj, 15),
                },
                slope: rat(15, 1),
                intercept: rat(-(10 + jj), 1),
            });
        }
        AffineMap::new("mixed_linear", branches).expect("mixed map branches tile [0,1]")
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn branches(&self) -> &[AffineBranch] {
        &self.branches
    }

    /// Index of the branch owning `x` (right-closed at the left endpoint;
    /// `x = 1` belongs to the last branch).
    pub fn branch_index(&self, x: &Rational) -> Result<usize> {
        if *x < Rational::zero() || *x > Rational::one() {
            return Err(Error::Domain(format!("{} outside [0,1]", fmt_rat(x))));
        }
        let idx = self.branches.partition_point(|b| *b.domain.lo() <= *x);
        Ok(idx.saturating_sub(1))
    }

    /// Exact evaluation of the map.
    pub fn eval_rational(&self, x: &Rational) -> Result<Rational> {
        let br = &self.branches[self.branch_index(x)?];
        Ok(&br.slope * x + &br.intercept)
    }
}

/// Exact preimage `T^{-1}(a)` under an exact piecewise-affine map: the union
/// of the per-branch affine preimages of `a` clipped to each branch image.
pub fn preimage_piecewise_affine(
    a: &IntervalSet,
    map: &AffineMap,
    caps: &Caps,
) -> Result<IntervalSet> {
    let mut pairs = Vec::new();
    for br in map.branches() {
        let img = br.image();
        let img_set = IntervalSet {
            intervals: vec![img.clone()],
        };
        let visible = a.intersect(&img_set);
        caps.check_intervals(pairs.len() + visible.component_count())?;
        for iv in visible.intervals() {
            let x0 = (iv.lo() - &br.intercept) / &br.slope;
            let x1 = (iv.hi() - &br.intercept) / &br.slope;
            caps.check_denom(&x0)?;
            let (lo, hi) = if x0 <= x1 { (x0, x1) } else { (x1, x0) };
            pairs.push((lo, hi));
        }
    }
    IntervalSet::from_endpoints(pairs)
}
