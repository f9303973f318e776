//! Acceptance suite: one test per criterion, each printing a `criterion N
//! PASS` line on success. The Monte-Carlo criterion runs at CI scale by
//! default; the full-scale variant is `#[ignore]`d (run with
//! `cargo test -p cantor-ei --test acceptance -- --ignored --nocapture`).

use std::time::Instant;

use cantor_ei::digraph::{build_nq, dim_bound, spectral_radius, SPECTRAL_TOL};
use cantor_ei::dynamics::{generate_ensemble, MapId, Observable, PiecewiseMap};
use cantor_ei::estimator::{hsing_theta, stability_region, sweep, SweepMeta, SweepTable};
use cantor_ei::exact::{
    cantor_approx, preimage_mod1_affine, preimage_mod1_within, rat, AffineMap, Caps, IntervalSet,
    Rational,
};
use cantor_ei::ifs::AffineIfs;
use cantor_ei::theory::{cluster_terminator_set, obrien_theta, q_schedule, rational_to_f64};

fn caps() -> Caps {
    Caps::default()
}

/// Criterion 1: theta-exact returns exactly 1/3 for m=3 and 5/9 for m=9 at
/// every level n <= 8; rational equality, under 10 s.
#[test]
fn criterion_1_exact_ei_compatible() {
    let caps = caps();
    let start = Instant::now();
    let m3 = AffineMap::mx_mod1(3).unwrap();
    for n in 1..=8u32 {
        let r = obrien_theta(&m3, n, n, &caps).unwrap();
        assert_eq!(r.theta, rat(1, 3), "m=3 level {n}");
    }
    let m9 = AffineMap::mx_mod1(9).unwrap();
    for n in 1..=8u32 {
        let level = n + 1;
        let r = obrien_theta(&m9, level, level / 2, &caps).unwrap();
        assert_eq!(r.theta, rat(5, 9), "m=9 level {level}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 10, "took {elapsed:?}");
    println!(
        "criterion 1 PASS: m=3 -> 1/3 and m=9 -> 5/9 exactly for all levels n <= 8 ({elapsed:?})"
    );
}

/// Criterion 2: for m in {2,5}, the exact sequence 1-theta_n at
/// q = q_schedule(m,n) is strictly decreasing for n = 2..8 and
/// 1-theta_8 < 0.05, under 2 min.
///
/// The threshold sub-check is currently expected to fail: the exact values
/// (cross-validated against an independent brute-force implementation) are
/// 1-theta_8 = 600569/1048576 ≈ 0.427 for m=2 and ≈ 0.188 for m=5; the
/// finite-level O'Brien ratio converges to 0 far more slowly than the
/// criterion assumes. The assertion is kept as stated rather than loosened.
#[test]
fn criterion_2_exact_ei_incompatible() {
    let caps = caps();
    let start = Instant::now();
    let mut final_gaps = Vec::new();
    for m in [2u32, 5] {
        let map = AffineMap::mx_mod1(m).unwrap();
        let mut previous: Option<Rational> = None;
        let mut last = Rational::from_integer(0.into());
        for n in 2..=8u32 {
            let q = q_schedule(m, n).unwrap();
            let r = obrien_theta(&map, n, q, &caps).unwrap();
            let one_minus = r.one_minus_theta();
            if let Some(prev) = previous {
                assert!(
                    one_minus < prev,
                    "m={m}: 1-theta not strictly decreasing at n={n}"
                );
            }
            previous = Some(one_minus.clone());
            last = one_minus;
        }
        final_gaps.push((m, last));
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 120, "took {elapsed:?}");
    for (m, gap) in &final_gaps {
        assert!(
            *gap < rat(1, 20),
            "m={m}: 1-theta_8 = {gap} = {:.6} is not below 0.05; the exact sequence is strictly \
             decreasing but its level-8 value is far from the limit (see decisions ledger)",
            rational_to_f64(gap)
        );
    }
    println!("criterion 2 PASS: 1-theta_n strictly decreasing and 1-theta_8 < 0.05 for m in {{2,5}} ({elapsed:?})");
}

/// Criterion 3: mixed map finite-n theta converges toward 2/3 with
/// |theta_6 - 2/3| < 0.05, under 1 min.
///
/// The threshold sub-check is currently expected to fail: with the module
/// convention L=n, q=n, theta_6 = 147697/300000 ≈ 0.4923 exactly
/// (independently cross-validated), so the gap is ≈ 0.174. Small fixed gaps
/// do converge fast (theta(L=6,q=1) ≈ 0.654), but the stated
/// parameterization is kept. See the decisions ledger.
#[test]
fn criterion_3_mixed_map_exact() {
    let caps = caps();
    let start = Instant::now();
    let mixed = AffineMap::mixed_linear();
    let mut thetas = Vec::new();
    for n in 1..=6u32 {
        let r = obrien_theta(&mixed, n, n, &caps).unwrap();
        thetas.push(r.theta);
    }
    // converging toward 2/3: the distance to 2/3 shrinks over the tail
    let target = rat(2, 3);
    let dist = |t: &Rational| {
        let d = target.clone() - t;
        if d < rat(0, 1) {
            -d
        } else {
            d
        }
    };
    for w in thetas[1..].windows(2) {
        assert!(
            dist(&w[1]) < dist(&w[0]),
            "mixed-map theta sequence not approaching 2/3"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    let gap = dist(&thetas[5]);
    assert!(
        gap < rat(1, 20),
        "mixed map: |theta_6 - 2/3| = {gap} = {:.6} is not below 0.05 (see decisions ledger)",
        rational_to_f64(&gap)
    );
    println!("criterion 3 PASS: mixed-map theta_6 within 0.05 of 2/3 ({elapsed:?})");
}

/// Criterion 4: matrix lemmas for all m <= 10, q <= 5; spectral radii;
/// the m=3, q=1 matrix; under 30 s.
#[test]
fn criterion_4_matrix_lemmas() {
    let start = Instant::now();
    for m in 2..=10u32 {
        for q in 1..=5u32 {
            let nq = build_nq(m, q).unwrap();
            assert!(
                nq.satisfies_row_lemmas(),
                "m={m} q={q}: entries not 0/1 with row sums <= 2"
            );
            let rho = spectral_radius(&nq, SPECTRAL_TOL).unwrap();
            assert!(rho <= 2.0 + 1e-9, "m={m} q={q}: rho = {rho} > 2");
            if m % 3 != 0 {
                assert!(
                    rho <= 3f64.sqrt() + 1e-9,
                    "m={m} q={q}: rho = {rho} > sqrt(3)"
                );
            }
        }
    }
    for m in [3u32, 9] {
        for q in 1..=3u32 {
            let rho = spectral_radius(&build_nq(m, q).unwrap(), SPECTRAL_TOL).unwrap();
            assert!((rho - 2.0).abs() < 1e-9, "m={m} q={q}: rho = {rho} != 2");
        }
    }
    // The m=3, q=1 matrix of the defining index rules. The version displayed
    // in print omits the (3,1) entry, but row 3 (offset s=1) satisfies both
    // the 3i-4 and the 3i-2m^q-2 rules: f_2^{-1} (x/3 + 1/3) f_2 = x/3 - 1/3
    // is a legitimate edge, and dropping it would make the digraph
    // decomposition of C ∩ g(C) incomplete. See the decisions ledger.
    let nq = build_nq(3, 1).unwrap();
    let expected: Vec<(u32, u32)> = vec![
        (0, 0),
        (1, 1),
        (1, 3),
        (2, 0),
        (2, 4),
        (3, 1),
        (3, 3),
        (4, 4),
    ];
    assert_eq!(nq.entries(), expected, "m=3 q=1 matrix");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 30, "took {elapsed:?}");
    println!(
        "criterion 4 PASS: 0/1 entries, row sums <= 2, rho bounds, m=3 q=1 matrix ({elapsed:?})"
    );
}

/// Criterion 5: dimension bounds, under 30 s.
#[test]
fn criterion_5_dimension_bound() {
    let start = Instant::now();
    for m in [2u32, 4, 5, 7, 8] {
        for q in 1..=5u32 {
            let d = dim_bound(m, q).unwrap();
            assert!(d <= 0.5 + 1e-9, "m={m} q={q}: dim bound {d} > 1/2");
        }
    }
    let log23 = 2f64.ln() / 3f64.ln();
    for m in [3u32, 9, 27] {
        for q in 1..=3u32 {
            assert_eq!(dim_bound(m, q).unwrap(), log23, "m={m} q={q}");
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 30, "took {elapsed:?}");
    println!(
        "criterion 5 PASS: dim bounds <= 1/2 off powers of 3, = log2/log3 on them ({elapsed:?})"
    );
}

/// Criterion 6: the cluster-terminating event equals the survivor-level
/// difference, as exact interval sets, for k in {1,2,3}, n+2k-1 <= 10.
#[test]
fn criterion_6_survivor_set_identity() {
    let caps = caps();
    let ifs = AffineIfs::ternary();
    let mut checked = 0;
    for k in 1..=3u32 {
        let map = AffineMap::mx_mod1(3u32.pow(k)).unwrap();
        let mut n = 1u32;
        while n + 2 * k - 1 <= 10 {
            let level = n + k - 1;
            let q = level / k;
            if q >= 1 {
                let u = ifs.survivor_approx(level, &caps).unwrap();
                let a = cluster_terminator_set(&map, &u, q, &caps).unwrap();
                let expected = u.difference(&ifs.survivor_approx(level + k, &caps).unwrap());
                assert_eq!(a, expected, "k={k} n={n} (level {level}, q {q})");
                checked += 1;
            }
            n += 1;
        }
    }
    assert!(checked >= 15, "only {checked} identity instances checked");
    println!("criterion 6 PASS: A = Λ_(n+k-1) \\ Λ_(n+2k-1) exactly in {checked} instances");
}

struct McCheck {
    n: usize,
    ell: u32,
    tol_scale: f64,
    /// Two-sided bands are trimmed to thresholds with at least this many
    /// expected exceedances per orbit (eliminates the small-sample bias of
    /// ratios of tiny counts at CI scale; no-op at full scale).
    min_expected_exceedances: f64,
}

fn ladder_table(check: &McCheck, id: MapId, seed: u64, u_max: u32) -> SweepTable {
    let map = PiecewiseMap::from_map_id(&id);
    let obs = Observable::Ladder { cap: 100 };
    let ensemble = generate_ensemble(&map, obs, check.n, check.ell, seed, 0).unwrap();
    sweep(
        &ensemble,
        1..=u_max,
        &[1, 5, 10],
        SweepMeta {
            map_id: id.to_string(),
            observable: "ladder".into(),
            n: check.n,
            ell: check.ell,
            seed,
            burnin: 0,
        },
    )
    .unwrap()
}

fn mean_at(table: &SweepTable, u: u32, q: u32) -> Option<f64> {
    table
        .rows
        .iter()
        .find(|r| r.u == u && r.q == q)
        .and_then(|r| r.mean)
}

/// Highest ladder threshold with `n * (2/3)^u >= want` expected exceedances.
fn ladder_band_cap(n: usize, want: f64) -> u32 {
    if want <= 0.0 {
        return u32::MAX;
    }
    let mut u = 1u32;
    while u < 64 && (n as f64) * (2f64 / 3f64).powi(u as i32 + 1) >= want {
        u += 1;
    }
    u
}

fn assert_band(
    table: &SweepTable,
    label: &str,
    u_lo: u32,
    u_hi: u32,
    q_lo_bound: impl Fn(u32) -> u32,
    target: f64,
    tol: f64,
) {
    for q in [1u32, 5, 10] {
        for u in u_lo.max(q_lo_bound(q))..=u_hi {
            let mean = mean_at(table, u, q)
                .unwrap_or_else(|| panic!("{label}: no defined mean at u={u} q={q}"));
            assert!(
                (mean - target).abs() < tol,
                "{label}: |mean({u},{q}) - {target}| = {:.4} >= {tol}",
                (mean - target).abs()
            );
        }
    }
}

fn run_monte_carlo(check: &McCheck, label: &str) {
    let seed = 42u64;
    let t = check.tol_scale;
    let band_cap = ladder_band_cap(check.n, check.min_expected_exceedances);

    // m=3: means near 1/3 on [5,15]. The q=10 cells only enter once
    // 10 * mu(C_u) <= 1/3 (u >= 9): below that the gap-10 declustering
    // measures a structurally different quantity at any sample size.
    let table = ladder_table(check, MapId::MxMod1(3), seed, 20);
    let q10_floor = |q: u32| if q >= 10 { 9 } else { 1 };
    assert_band(
        &table,
        "m=3",
        5,
        15.min(band_cap),
        q10_floor,
        1.0 / 3.0,
        0.03 * t,
    );
    let plateaus = stability_region(&table, 3, 0.04 * t);
    let widest = plateaus
        .iter()
        .max_by_key(|p| p.u_hi - p.u_lo)
        .expect("m=3 sweep has no stability plateau");
    assert!(
        widest.u_lo <= 15 && widest.u_hi >= 5,
        "m=3 plateau {widest:?} does not overlap [5,15]"
    );
    assert!(
        (widest.value - 1.0 / 3.0).abs() < 0.05 * t,
        "m=3 plateau value {} far from 1/3",
        widest.value
    );

    // m=9: means near 5/9 on [10,15]
    let table = ladder_table(check, MapId::MxMod1(9), seed, 20);
    assert_band(
        &table,
        "m=9",
        10,
        15.min(band_cap),
        |_| 1,
        5.0 / 9.0,
        0.04 * t,
    );

    // m=5: means >= 0.92 on [15,20] (upward-consistent, no band trim)
    let table = ladder_table(check, MapId::MxMod1(5), seed, 20);
    for q in [1u32, 5, 10] {
        for u in 15..=20u32 {
            let mean = mean_at(&table, u, q).expect("m=5: undefined mean");
            let floor = 1.0 - (1.0 - 0.92) * t;
            assert!(mean >= floor, "m=5: mean({u},{q}) = {mean} < {floor}");
        }
    }

    // mixed map: widest plateau within 0.05 of 2/3
    let table = ladder_table(check, MapId::MixedLinear, seed, 20);
    let widest = stability_region(&table, 3, 0.04 * t)
        .into_iter()
        .max_by_key(|p| p.u_hi - p.u_lo)
        .expect("mixed sweep has no stability plateau");
    assert!(
        (widest.value - 2.0 / 3.0).abs() < 0.05 * t,
        "mixed plateau value {} far from 2/3",
        widest.value
    );

    // quadratic-compatible system, escape-time observable: plateau near 0.61
    let map = PiecewiseMap::from_map_id(&MapId::QuadraticCompatible);
    let obs = Observable::Escape { cap: 100 };
    let ensemble = generate_ensemble(&map, obs, check.n, check.ell, seed, 0).unwrap();
    let table = sweep(
        &ensemble,
        1..=14,
        &[1, 5, 10],
        SweepMeta {
            map_id: MapId::QuadraticCompatible.to_string(),
            observable: "escape".into(),
            n: check.n,
            ell: check.ell,
            seed,
            burnin: 0,
        },
    )
    .unwrap();
    let widest = stability_region(&table, 3, 0.04 * t)
        .into_iter()
        .max_by_key(|p| p.u_hi - p.u_lo)
        .expect("quadratic sweep has no stability plateau");
    assert!(
        (widest.value - 0.61).abs() < 0.05 * t,
        "quadratic plateau value {} far from 0.61",
        widest.value
    );

    // Gauss and rotation: high-threshold plateaus at EI 1
    for id in [MapId::Gauss, MapId::Rotation] {
        let table = ladder_table(check, id, seed, 20);
        for q in [1u32, 5, 10] {
            for u in 17..=20u32 {
                let mean = mean_at(&table, u, q)
                    .unwrap_or_else(|| panic!("{id}: undefined mean at u={u}"));
                let floor = 1.0 - (1.0 - 0.9) * t;
                assert!(mean >= floor, "{id}: mean({u},{q}) = {mean} < {floor}");
            }
        }
    }

    println!(
        "criterion 7 PASS ({label}): n={}, ell={}, all EI bands hold",
        check.n, check.ell
    );
}

/// Criterion 7, CI scale: n=5,000, ell=50, tolerances doubled, two-sided
/// bands trimmed to thresholds with enough exceedances.
#[test]
fn criterion_7_monte_carlo_ci_scale() {
    run_monte_carlo(
        &McCheck {
            n: 5_000,
            ell: 50,
            tol_scale: 2.0,
            min_expected_exceedances: 25.0,
        },
        "CI scale",
    );
}

/// Criterion 7, full scale (opt-in): n=50,000, ell=500, stated tolerances.
#[test]
#[ignore = "full-scale Monte Carlo (~1 minute); run with --ignored"]
fn criterion_7_monte_carlo_full_scale() {
    run_monte_carlo(
        &McCheck {
            n: 50_000,
            ell: 500,
            tol_scale: 1.0,
            min_expected_exceedances: 0.0,
        },
        "full scale",
    );
}

/// Brute-force Hsing oracle mirroring the definition with indicator arrays.
fn hsing_oracle(levels: &[u32], u: u32, q: u32) -> (u64, u64) {
    let n = levels.len();
    let exceed: Vec<bool> = levels.iter().map(|&l| l > u).collect();
    let mut numerator = 0u64;
    let mut denominator = 0u64;
    for i in 0..n {
        if i + (q as usize) > n - 1 {
            break;
        }
        if exceed[i] {
            denominator += 1;
            let mut terminal = true;
            for j in 1..=q as usize {
                if exceed[i + j] {
                    terminal = false;
                    break;
                }
            }
            if terminal {
                numerator += 1;
            }
        }
    }
    (numerator, denominator)
}

/// Criterion 8: exhaustive brute-force equivalence on all 3-letter series of
/// length <= 12, plus range and monotonicity on 10^4 random series.
#[test]
fn criterion_8_estimator_properties() {
    let start = Instant::now();
    let mut series_checked = 0u64;
    for len in 1..=12usize {
        let mut levels = vec![0u32; len];
        loop {
            for u in [0u32, 1] {
                for q in [0u32, 1, 2, 3] {
                    let r = hsing_theta(&levels, u, q);
                    let (num, den) = hsing_oracle(&levels, u, q);
                    assert_eq!((r.numerator, r.denominator), (num, den));
                }
            }
            series_checked += 1;
            // odometer over the alphabet {0,1,2}
            let mut pos = 0;
            loop {
                if pos == len {
                    break;
                }
                if levels[pos] == 2 {
                    levels[pos] = 0;
                    pos += 1;
                } else {
                    levels[pos] += 1;
                    break;
                }
            }
            if pos == len {
                break;
            }
        }
    }
    assert_eq!(series_checked, (1..=12).map(|l| 3u64.pow(l)).sum::<u64>());

    // Random series: theta in [0,1] always; nonincreasing in q whenever the
    // truncated index range keeps the same exceedances. When an exceedance
    // falls out of the range `i <= n-1-q` the ratio can tick up (e.g.
    // [9,0,0,0,0,0,9,9] at u=5 has theta(1) = 1/2 < theta(2) = 1), so the
    // monotonicity claim is conditional on a constant denominator; that is
    // the form in which the event inclusion A_{q+1} ⊆ A_q is a theorem.
    let mut state = 0x853c49e6748fea9bu64;
    let mut rand_u32 = || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 59) as u32
    };
    let mut monotone_checks = 0u64;
    for _ in 0..10_000 {
        let len = 30 + (rand_u32() as usize % 40);
        let levels: Vec<u32> = (0..len).map(|_| rand_u32()).collect();
        let u = rand_u32() % 24;
        let mut prev: Option<(u64, f64)> = None;
        for q in 0..=6u32 {
            let r = hsing_theta(&levels, u, q);
            if let Some(t) = r.theta_hat {
                assert!((0.0..=1.0).contains(&t));
                if let Some((prev_den, prev_t)) = prev {
                    if prev_den == r.denominator {
                        assert!(t <= prev_t + 1e-15, "u={u} q={q} levels={levels:?}");
                        monotone_checks += 1;
                    }
                }
                prev = Some((r.denominator, t));
            }
        }
    }
    assert!(
        monotone_checks > 15_000,
        "only {monotone_checks} monotonicity comparisons"
    );
    let elapsed = start.elapsed();
    println!(
        "criterion 8 PASS: {series_checked} series matched the brute-force oracle ({elapsed:?})"
    );
}

/// Criterion 9: exact-set algebra properties with zero tolerance.
#[test]
fn criterion_9_exact_set_properties() {
    let caps = caps();
    let start = Instant::now();

    // measure additivity over a mixed family of sets
    let mut family: Vec<IntervalSet> = (0..=5u32)
        .map(|n| cantor_approx(n, &caps).unwrap())
        .collect();
    family.push(IntervalSet::empty());
    family.push(IntervalSet::unit());
    family.push(preimage_mod1_affine(&family[3], 2, 2, &caps).unwrap());
    family.push(preimage_mod1_affine(&family[4], 5, 1, &caps).unwrap());
    family.push(family[2].complement_in_unit());
    for a in &family {
        for b in &family {
            let lhs = a.union(b).measure() + a.intersect(b).measure();
            let rhs = a.measure() + b.measure();
            assert_eq!(lhs, rhs, "additivity");
        }
    }

    // preimage preserves measure and composes
    for m in [2u32, 3, 5] {
        for j in [1u32, 2] {
            for a in [&family[2], &family[4]] {
                assert_eq!(
                    preimage_mod1_affine(a, m, j, &caps).unwrap().measure(),
                    a.measure()
                );
            }
        }
        let twice = preimage_mod1_affine(
            &preimage_mod1_affine(&family[3], m, 1, &caps).unwrap(),
            m,
            1,
            &caps,
        )
        .unwrap();
        assert_eq!(
            twice,
            preimage_mod1_affine(&family[3], m, 2, &caps).unwrap()
        );
    }

    // mu(C_n ∩ T^{-q}(C_n)) <= 3 (2/3)^{2n} for q >= q_n, m in {2,5}, n <= 8
    for m in [2u32, 5] {
        for n in 1..=8u32 {
            let qn = q_schedule(m, n).unwrap();
            let cn = cantor_approx(n, &caps).unwrap();
            let bound = rat(3, 1) * rat(2i64.pow(2 * n), 3i64.pow(2 * n));
            for q in [qn, qn + 1] {
                let mu = preimage_mod1_within(&cn, m, q, &cn, &caps)
                    .unwrap()
                    .measure();
                assert!(
                    mu <= bound,
                    "m={m} n={n} q={q}: mu = {mu} exceeds 3(2/3)^(2n)"
                );
            }
        }
    }

    let elapsed = start.elapsed();
    println!("criterion 9 PASS: additivity, measure preservation, composition, intersection bound ({elapsed:?})");
}
