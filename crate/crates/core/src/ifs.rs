//! Dynamically defined Cantor sets: affine IFS attractors, their survivor
//! approximations `Λ_n`, the compatible full-branch expanding map, the
//! finite-level EI ratio `μ(Λ_{n+k-1} \ Λ_{n+2k-1}) / μ(Λ_{n+k-1})`, and the
//! float-only quadratic survivor system.
//!
//! The quadratic system `g(x) = 6x(1-x)` has irrational branch points
//! `(3 ± √3)/6`, so it is served exclusively by the simulation path; the
//! exact pipeline handles affine IFS with rational coefficients.

use num_traits::{One, Zero};

use crate::dynamics;
use crate::error::{Error, Result};
use crate::exact::{
    fmt_rat, parse_rat, AffineBranch, AffineMap, Caps, IntervalSet, Rational, RationalInterval,
    SetBuilder,
};

/// One normalised contraction `f(x) = ratio*x + offset` with image
/// `J = [offset, offset + ratio]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IfsContraction {
    pub ratio: Rational,
    pub offset: Rational,
}

impl IfsContraction {
    fn image(&self) -> (Rational, Rational) {
        (self.offset.clone(), &self.offset + &self.ratio)
    }
}

/// A regular finite family of increasing affine contractions of `[0,1]`
/// with pairwise disjoint images, sorted by image position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineIfs {
    contractions: Vec<IfsContraction>,
}

impl AffineIfs {
    pub fn new(mut contractions: Vec<IfsContraction>) -> Result<Self> {
        if contractions.is_empty() {
            return Err(Error::Invalid(
                "an IFS needs at least one contraction".into(),
            ));
        }
        contractions.sort_by(|a, b| a.offset.cmp(&b.offset));
        let mut prev_hi: Option<Rational> = None;
        for c in &contractions {
            if c.ratio <= Rational::zero() || c.ratio >= Rational::one() {
                return Err(Error::Invalid(format!(
                    "contraction ratio {} outside (0,1)",
                    fmt_rat(&c.ratio)
                )));
            }
            let (lo, hi) = c.image();
            if lo < Rational::zero() || hi > Rational::one() {
                return Err(Error::Invalid("contraction image leaves [0,1]".into()));
            }
            if let Some(prev) = prev_hi {
                if lo <= prev {
                    return Err(Error::Invalid(
                        "contraction images must be pairwise disjoint".into(),
                    ));
                }
            }
            prev_hi = Some(hi);
        }
        Ok(AffineIfs { contractions })
    }

    /// The ternary-Cantor IFS `{x/3, x/3 + 2/3}`.
    pub fn ternary() -> Self {
        AffineIfs::new(vec![
            IfsContraction {
                ratio: Rational::new(1.into(), 3.into()),
                offset: Rational::zero(),
            },
            IfsContraction {
                ratio: Rational::new(1.into(), 3.into()),
                offset: Rational::new(2.into(), 3.into()),
            },
        ])
        .expect("ternary IFS is valid")
    }

    /// Parses the contraction-file format: one contraction per line,
    /// `lambda_num/lambda_den offset_num/offset_den`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut contractions = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (l, o) = match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(o), None) => (l, o),
                _ => {
                    return Err(Error::Invalid(format!(
                        "expected `lambda offset` per line, got `{line}`"
                    )))
                }
            };
            contractions.push(IfsContraction {
                ratio: parse_rat(l)?,
                offset: parse_rat(o)?,
            });
        }
        AffineIfs::new(contractions)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.contractions {
            s.push_str(&fmt_rat(&c.ratio));
            s.push(' ');
            s.push_str(&fmt_rat(&c.offset));
            s.push('\n');
        }
        s
    }

    pub fn contractions(&self) -> &[IfsContraction] {
        &self.contractions
    }

    /// `Σ λ_i`; `μ(Λ_n) = (Σ λ_i)^n` because the level-`n` words have
    /// pairwise disjoint images.
    pub fn ratio_sum(&self) -> Rational {
        let mut s = Rational::zero();
        for c in &self.contractions {
            s += &c.ratio;
        }
        s
    }

    /// One refinement step: `Λ_{n+1} = ∪_i f_i(Λ_n)` (the preimage of `Λ_n`
    /// under the expanding generator, restricted to `[0,1]`).
    fn refine(&self, current: &IntervalSet, caps: &Caps) -> Result<IntervalSet> {
        caps.check_intervals(
            current
                .component_count()
                .saturating_mul(self.contractions.len()),
        )?;
        let mut b = SetBuilder::default();
        for c in &self.contractions {
            let image = current.affine_image(&c.ratio, &c.offset)?;
            for iv in image.intervals() {
                caps.check_denom(iv.lo())?;
                b.push(iv.lo().clone(), iv.hi().clone());
            }
        }
        Ok(b.finish())
    }

    /// The `n`-th survivor approximation `Λ_n`: the union of `f_w([0,1])`
    /// over all words `w` of length `n`.
    pub fn survivor_approx(&self, n: u32, caps: &Caps) -> Result<IntervalSet> {
        caps.check_level(n)?;
        let mut current = IntervalSet::unit();
        for _ in 0..n {
            current = self.refine(&current, caps)?;
        }
        Ok(current)
    }

    /// The compatible full-branch expanding map `F`: the inverse of `f_i` on
    /// each image `J_i`, and an increasing linear surjection onto `[0,1]` on
    /// every gap.
    pub fn compatible_map(&self) -> Result<AffineMap> {
        let mut branches = Vec::new();
        let push_gap =
            |lo: Rational, hi: Rational, branches: &mut Vec<AffineBranch>| -> Result<()> {
                if lo < hi {
                    let len = &hi - &lo;
                    let slope = Rational::one() / &len;
                    let intercept = -&lo / &len;
                    branches.push(AffineBranch {
                        domain: RationalInterval::new(lo, hi)?,
                        slope,
                        intercept,
                    });
                }
                Ok(())
            };
        let mut cursor = Rational::zero();
        for c in &self.contractions {
            let (jlo, jhi) = c.image();
            push_gap(cursor, jlo.clone(), &mut branches)?;
            // F|J = f^{-1}: x -> (x - offset)/ratio
            branches.push(AffineBranch {
                domain: RationalInterval::new(jlo, jhi.clone())?,
                slope: Rational::one() / &c.ratio,
                intercept: -&c.offset / &c.ratio,
            });
            cursor = jhi;
        }
        push_gap(cursor, Rational::one(), &mut branches)?;
        AffineMap::new("ifs_compatible", branches)
    }

    /// The finite-level EI ratio
    /// `μ(Λ_{n+k-1} \ Λ_{n+2k-1}) / μ(Λ_{n+k-1})`, exactly.
    pub fn general_theta(&self, k: u32, n: u32, caps: &Caps) -> Result<Rational> {
        if k == 0 || n == 0 {
            return Err(Error::Domain("need k >= 1 and n >= 1".into()));
        }
        let mut levels = SurvivorLevels::new(self.clone());
        let outer = levels.level(n + k - 1, caps)?.measure();
        let inner = levels.level(n + 2 * k - 1, caps)?.measure();
        if outer.is_zero() {
            return Err(Error::Domain("survivor level has measure zero".into()));
        }
        Ok((&outer - inner) / outer)
    }

    /// The limit EI of the compatible system iterated `k` times:
    /// `1 - (Σ λ_i)^k` (the finite-level ratio is already constant in `n`).
    pub fn theoretical_ei(&self, k: u32) -> Rational {
        let s = self.ratio_sum();
        let mut p = Rational::one();
        for _ in 0..k {
            p *= &s;
        }
        Rational::one() - p
    }
}

/// Survivor levels `Λ_0 ⊇ Λ_1 ⊇ …` of one IFS, cached as they are first
/// requested; each level is immutable once built.
#[derive(Debug, Clone)]
pub struct SurvivorLevels {
    ifs: AffineIfs,
    levels: Vec<IntervalSet>,
}

impl SurvivorLevels {
    pub fn new(ifs: AffineIfs) -> Self {
        SurvivorLevels {
            ifs,
            levels: vec![IntervalSet::unit()],
        }
    }

    pub fn ifs(&self) -> &AffineIfs {
        &self.ifs
    }

    pub fn level(&mut self, n: u32, caps: &Caps) -> Result<&IntervalSet> {
        caps.check_level(n)?;
        while self.levels.len() <= n as usize {
            let next = self
                .ifs
                .refine(self.levels.last().expect("level 0 present"), caps)?;
            self.levels.push(next);
        }
        Ok(&self.levels[n as usize])
    }
}

/// Escape time of `x` under `g(x) = 6x(1-x)`, the observable maximised on
/// the quadratic survivor set.
pub fn quadratic_survivor_observable(x: f64, cap: u32) -> u32 {
    dynamics::escape_time(dynamics::logistic6, x, cap)
}

/// The three-branch map compatible with the quadratic survivor set: `g` on
/// both outer branches, an increasing linear surjection of the middle gap
/// `[(3-√3)/6, (3+√3)/6)` onto `[0,1)`.
pub fn quadratic_compatible_map(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("{x} outside [0,1]")));
    }
    let sqrt3 = 3f64.sqrt();
    let left = (3.0 - sqrt3) / 6.0;
    let right = (3.0 + sqrt3) / 6.0;
    let y = if x < left || x >= right {
        dynamics::logistic6(x)
    } else {
        (x - left) * sqrt3
    };
    Ok(y.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{cantor_approx, rat};

    fn caps() -> Caps {
        Caps::default()
    }

    fn quarter_ifs() -> AffineIfs {
        AffineIfs::new(vec![
            IfsContraction {
                ratio: rat(1, 4),
                offset: rat(0, 1),
            },
            IfsContraction {
                ratio: rat(1, 4),
                offset: rat(3, 4),
            },
        ])
        .unwrap()
    }

    #[test]
    fn ternary_survivors_are_cantor_levels() {
        let ifs = AffineIfs::ternary();
        for n in 0..=6u32 {
            assert_eq!(
                ifs.survivor_approx(n, &caps()).unwrap(),
                cantor_approx(n, &caps()).unwrap()
            );
        }
    }

    #[test]
    fn survivor_level_zero_is_unit() {
        assert_eq!(
            quarter_ifs().survivor_approx(0, &caps()).unwrap(),
            IntervalSet::unit()
        );
    }

    #[test]
    fn quarter_ifs_first_level() {
        let l1 = quarter_ifs().survivor_approx(1, &caps()).unwrap();
        let expected =
            IntervalSet::from_endpoints(vec![(rat(0, 1), rat(1, 4)), (rat(3, 4), rat(1, 1))])
                .unwrap();
        assert_eq!(l1, expected);
        assert_eq!(l1.measure(), rat(1, 2));
    }

    #[test]
    fn survivor_measure_formula() {
        let caps = caps();
        let uneven = AffineIfs::new(vec![
            IfsContraction {
                ratio: rat(1, 4),
                offset: rat(0, 1),
            },
            IfsContraction {
                ratio: rat(1, 3),
                offset: rat(1, 2),
            },
        ])
        .unwrap();
        for ifs in [quarter_ifs(), uneven] {
            let s = ifs.ratio_sum();
            let mut expected = Rational::one();
            for n in 0..=6u32 {
                assert_eq!(ifs.survivor_approx(n, &caps).unwrap().measure(), expected);
                expected *= &s;
            }
        }
    }

    #[test]
    fn cached_levels_match_direct_construction() {
        let caps = caps();
        let mut cache = SurvivorLevels::new(quarter_ifs());
        for n in [3u32, 1, 5, 0, 4] {
            assert_eq!(
                cache.level(n, &caps).unwrap(),
                &quarter_ifs().survivor_approx(n, &caps).unwrap()
            );
        }
    }

    #[test]
    fn survivors_nest() {
        let caps = caps();
        let ifs = quarter_ifs();
        for n in 0..5u32 {
            let outer = ifs.survivor_approx(n, &caps).unwrap();
            let inner = ifs.survivor_approx(n + 1, &caps).unwrap();
            assert!(inner.is_subset(&outer));
        }
    }

    #[test]
    fn ternary_compatible_map_is_3x_mod1() {
        let f = AffineIfs::ternary().compatible_map().unwrap();
        let reference = AffineMap::mx_mod1(3).unwrap();
        assert_eq!(f.branches().len(), 3);
        for (a, b) in f.branches().iter().zip(reference.branches()) {
            assert_eq!(a.domain, b.domain);
            assert_eq!(a.slope, b.slope);
            assert_eq!(a.intercept, b.intercept);
        }
    }

    #[test]
    fn quarter_compatible_map_slopes() {
        let f = quarter_ifs().compatible_map().unwrap();
        let slopes: Vec<Rational> = f.branches().iter().map(|b| b.slope.clone()).collect();
        assert_eq!(slopes, vec![rat(4, 1), rat(2, 1), rat(4, 1)]);
    }

    #[test]
    fn compatible_map_inverts_contractions() {
        let ifs = quarter_ifs();
        let f = ifs.compatible_map().unwrap();
        for c in ifs.contractions() {
            for i in 0..1000i64 {
                let x = rat(i, 1000);
                let fx = &c.ratio * &x + &c.offset;
                assert_eq!(f.eval_rational(&fx).unwrap(), x);
            }
        }
    }

    #[test]
    fn general_theta_examples() {
        let caps = caps();
        let ternary = AffineIfs::ternary();
        for n in 1..=5u32 {
            assert_eq!(ternary.general_theta(1, n, &caps).unwrap(), rat(1, 3));
        }
        for n in 1..=4u32 {
            assert_eq!(ternary.general_theta(2, n, &caps).unwrap(), rat(5, 9));
        }
        for n in 1..=6u32 {
            assert_eq!(quarter_ifs().general_theta(1, n, &caps).unwrap(), rat(1, 2));
        }
    }

    #[test]
    fn theoretical_ei_matches_ratio_sum() {
        assert_eq!(AffineIfs::ternary().theoretical_ei(1), rat(1, 3));
        assert_eq!(AffineIfs::ternary().theoretical_ei(2), rat(5, 9));
        assert_eq!(quarter_ifs().theoretical_ei(1), rat(1, 2));
    }

    #[test]
    fn disjointness_is_enforced() {
        let overlapping = AffineIfs::new(vec![
            IfsContraction {
                ratio: rat(1, 2),
                offset: rat(0, 1),
            },
            IfsContraction {
                ratio: rat(1, 2),
                offset: rat(1, 2),
            },
        ]);
        assert!(overlapping.is_err());
    }

    #[test]
    fn spec_file_round_trip() {
        let text = "1/3 0/1\n1/3 2/3\n";
        let ifs = AffineIfs::parse(text).unwrap();
        assert_eq!(ifs, AffineIfs::ternary());
        assert_eq!(ifs.to_text(), text);
    }

    #[test]
    fn quadratic_compatible_examples() {
        assert_eq!(quadratic_compatible_map(0.0).unwrap(), 0.0);
        assert!((quadratic_compatible_map(0.5).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(quadratic_compatible_map(1.0).unwrap(), 0.0);
        assert!(quadratic_compatible_map(1.5).is_err());
    }

    #[test]
    fn quadratic_compatible_agrees_with_g_on_outer_branches() {
        let sqrt3 = 3f64.sqrt();
        let left = (3.0 - sqrt3) / 6.0;
        let right = (3.0 + sqrt3) / 6.0;
        let mut tested = 0;
        for i in 0..1000 {
            let x = i as f64 / 1000.0;
            if x < left || x >= right {
                let want = dynamics::logistic6(x).clamp(0.0, 1.0);
                let got = quadratic_compatible_map(x).unwrap();
                assert!((want - got).abs() < 2f64.powi(-50));
                tested += 1;
            }
        }
        assert!(tested > 400);
    }

    #[test]
    fn quadratic_observable_matches_escape_time() {
        for (x, want) in [(0.5, 1u32), (0.0, 100), (0.1, 2)] {
            assert_eq!(quadratic_survivor_observable(x, 100), want);
        }
    }
}
