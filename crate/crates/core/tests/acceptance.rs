//! Acceptance suite: one test per acceptance criterion. Each test prints
//! its own pass/fail line through the harness; they share a lock so that
//! wall-clock pins are not distorted by parallel contention for the
//! process-global prime field.

use std::collections::HashSet;
use std::path::PathBuf;
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ffrec::bench::{self, RunReport};
use ffrec::driver::{reconstruct, DriverOptions, ReconstructionJob};
use ffrec::expr::Expression;
use ffrec::ffield::{nth_prime, prime_scope, FieldElement};
use ffrec::polyint::{
    dense_newton_interpolate, solve_shifted_vandermonde, zippel_interpolate,
    MultiIndex, SparsePolynomial, ZippelOptions,
};
use ffrec::ratint::{interpolate_rational, solve_linear, FirstPrimeOptions, ThieleState};
use ffrec::ratrec::{crt_pair, mqrr, mqrr_default_tolerance, wang_rr, ModularImage};

/// Serializes the criteria: the ambient prime is process-global state and
/// the timed criteria must not wait for it mid-measurement.
static CRITERIA: Mutex<()> = Mutex::new(());

fn lock() -> std::sync::MutexGuard<'static, ()> {
    CRITERIA.lock().unwrap_or_else(|e| e.into_inner())
}

fn fe(n: u64) -> FieldElement {
    FieldElement::new(n)
}

fn zvars(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

// ---------------------------------------------------------------------------
// Criterion 1: bivariate worked example, bit-exact stage values
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_worked_example_bit_exact() {
    let _g = lock();
    let start = Instant::now();

    // single-prime interpolation with pinned prime, anchors, and shift
    {
        let _s = prime_scope(509);
        let f = |z: &[FieldElement]| {
            (fe(3) * z[0] + fe(7) * z[1]) / (z[0] + z[1] + fe(4) * z[0] * z[1])
        };
        let opts = FirstPrimeOptions {
            shift: vec![fe(4), fe(1)],
            anchors: Some(vec![fe(1), fe(10)]),
            seed: 7,
        };
        let outcome = interpolate_rational(f, 2, &opts).unwrap();
        assert_eq!(outcome.thiele_num, vec![fe(316), fe(464)]);
        assert_eq!(outcome.thiele_den, vec![fe(1), fe(178), fe(317)]);
        let top = outcome.top_num_unhomogenized.unwrap();
        assert_eq!(top.to_string_with(&zvars(&["z2"])), "291+170*z2");
        assert_eq!(outcome.corrected_num_constant, Some(FieldElement::ZERO));
        assert_eq!(outcome.probes, 12);
    }

    // full driver run over Q with the same pinned shift/anchors
    let options = DriverOptions {
        seed: 7,
        fixed_shift: Some(vec![4, 1]),
        fixed_anchors: Some(vec![1, 10]),
        ..DriverOptions::default()
    };
    let job = ReconstructionJob::new(0, 2, None);
    let bb = |z: &[FieldElement]| {
        vec![(fe(3) * z[0] + fe(7) * z[1]) / (z[0] + z[1] + fe(4) * z[0] * z[1])]
    };
    let out = reconstruct(std::slice::from_ref(&job), &bb, &options).unwrap();
    assert_eq!(
        out[0].function.render(&zvars(&["z1", "z2"])),
        "(3*z1+7*z2)/(z1+z2+4*z1*z2)"
    );
    assert!(out[0].verified);

    assert!(start.elapsed().as_secs_f64() < 1.0, "criterion 1 exceeded 1 s");
}

// ---------------------------------------------------------------------------
// Criterion 2: sparse-interpolation worked example probe counts
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_sparse_interpolation_probe_counts() {
    let _g = lock();
    let start = Instant::now();
    let _s = prime_scope(9223372036854775783);

    // 3 z1^5 + 7 z1 z2^4 + 11 z1 z2 z3^3 + 13 z2^5
    let f = |z: &[FieldElement]| {
        fe(3) * z[0].pow(5)
            + fe(7) * z[0] * z[1].pow(4)
            + fe(11) * z[0] * z[1] * z[2].pow(3)
            + fe(13) * z[1].pow(5)
    };
    let mut expect = SparsePolynomial::zero(3);
    expect.add_term(MultiIndex(vec![5, 0, 0]), fe(3));
    expect.add_term(MultiIndex(vec![1, 4, 0]), fe(7));
    expect.add_term(MultiIndex(vec![1, 1, 3]), fe(11));
    expect.add_term(MultiIndex(vec![0, 5, 0]), fe(13));
    let anchors = vec![fe(29), fe(37), fe(41)];

    let (poly, probes) =
        zippel_interpolate(f, 3, anchors.clone(), ZippelOptions::default()).unwrap();
    assert_eq!(poly, expect);
    assert!(
        (24..=28).contains(&probes),
        "temporary-pruning probes = {probes}, expected 26 +/- 2"
    );

    let bounded = ZippelOptions {
        degree_bound: Some(5),
        ..ZippelOptions::default()
    };
    let (poly, probes) = zippel_interpolate(f, 3, anchors, bounded).unwrap();
    assert_eq!(poly, expect);
    assert!(
        (18..=22).contains(&probes),
        "permanent-pruning probes = {probes}, expected 20 +/- 2"
    );

    let (poly, probes) = dense_newton_interpolate(f, 3, &[None, None, None], 1).unwrap();
    assert_eq!(poly, expect);
    assert_eq!(probes, 245, "unbounded dense reference probe count");

    let (poly, probes) = dense_newton_interpolate(f, 3, &[Some(5), Some(5), None], 1).unwrap();
    assert_eq!(poly, expect);
    assert_eq!(probes, 180, "bounded dense reference probe count");

    assert!(start.elapsed().as_secs_f64() < 1.0, "criterion 2 exceeded 1 s");
}

// ---------------------------------------------------------------------------
// Criteria 3 & 4: benchmark suite (shared run)
// ---------------------------------------------------------------------------

struct BenchConfig {
    name: &'static str,
    scan: bool,
    reorder: Option<&'static [&'static str]>,
    /// Reference probe count for this configuration.
    reference: usize,
}

struct BenchOutcome {
    config: BenchConfig,
    report: RunReport,
}

const F1_ORDER: &[&str] = &[
    "z20", "z1", "z2", "z3", "z4", "z5", "z6", "z7", "z8", "z9", "z10", "z11", "z12", "z13",
    "z14", "z15", "z16", "z17", "z18", "z19",
];
const F4_ORDER: &[&str] = &["z3", "z2", "z1", "z4", "z5"];

fn bench_configs() -> Vec<BenchConfig> {
    let c = |name, scan, reorder, reference| BenchConfig {
        name,
        scan,
        reorder,
        reference,
    };
    vec![
        c("f1", false, None, 87138),
        c("f1", true, None, 84569),
        c("f1", false, Some(F1_ORDER), 41628),
        c("f1", true, Some(F1_ORDER), 22617),
        c("f2", false, None, 162683),
        c("f2", true, None, 155231),
        c("f3", false, None, 332894),
        c("f3", true, None, 320801),
        c("f4", false, None, 139512),
        c("f4", true, None, 137295),
        c("f4", false, Some(F4_ORDER), 54212),
        c("f4", true, Some(F4_ORDER), 34349),
    ]
}

fn bench_save_dir() -> PathBuf {
    std::env::temp_dir().join(format!("ffrec-acceptance-{}", std::process::id()))
}

/// Tag used to persist the plain f2 run so criterion 8 can resume it.
const F2_TAG: &str = "f2acc";

struct BenchSuite {
    outcomes: Vec<BenchOutcome>,
    total_wall: f64,
}

static BENCH: OnceLock<BenchSuite> = OnceLock::new();

fn bench_suite() -> &'static BenchSuite {
    BENCH.get_or_init(|| {
        let dir = bench_save_dir();
        let _ = std::fs::remove_dir_all(&dir);
        let start = Instant::now();
        let mut outcomes = Vec::new();
        for config in bench_configs() {
            let spec = bench::spec(config.name).unwrap();
            let vars = match config.reorder {
                None => spec.vars.clone(),
                Some(order) => bench::permute_vars(&spec.vars, &zvars(order)).unwrap(),
            };
            let options = DriverOptions {
                scan: config.scan,
                seed: 1,
                save_dir: dir.clone(),
                ..DriverOptions::default()
            };
            let tag = (config.name == "f2" && !config.scan && config.reorder.is_none())
                .then(|| F2_TAG.to_string());
            let report = bench::run_expression(&spec.text, &vars, &options, tag, true)
                .unwrap_or_else(|e| panic!("{} failed: {e}", config.name));
            eprintln!(
                "[bench] {} scan={} reorder={} probes={} primes={} wall_ms={} matched={:?}",
                config.name,
                config.scan,
                config.reorder.is_some(),
                report.probes,
                report.primes,
                report.wall_ms,
                report.matched
            );
            outcomes.push(BenchOutcome { config, report });
        }
        BenchSuite {
            outcomes,
            total_wall: start.elapsed().as_secs_f64(),
        }
    })
}

#[test]
fn criterion_3_benchmark_suite_exactness() {
    let _g = lock();
    let suite = bench_suite();
    for o in &suite.outcomes {
        assert!(
            o.report.verified,
            "{} (scan={}, reorder={}) not verified",
            o.config.name,
            o.config.scan,
            o.config.reorder.is_some()
        );
        assert_eq!(
            o.report.matched,
            Some(true),
            "{} (scan={}, reorder={}) not coefficient-exact",
            o.config.name,
            o.config.scan,
            o.config.reorder.is_some()
        );
    }
    assert!(
        suite.total_wall <= 600.0,
        "benchmark suite took {:.1} s, budget 600 s",
        suite.total_wall
    );
}

#[test]
fn criterion_4_benchmark_probe_counts() {
    let _g = lock();
    let suite = bench_suite();
    let mut f2_default = 0usize;
    let mut f3_default = 0usize;
    for o in &suite.outcomes {
        let probes = o.report.probes;
        let reference = o.config.reference;
        assert!(
            probes * 2 >= reference && probes <= reference * 2,
            "{} (scan={}, reorder={}): {} probes vs reference {}, outside factor 2",
            o.config.name,
            o.config.scan,
            o.config.reorder.is_some(),
            probes,
            reference
        );
        match o.config.name {
            "f2" => assert_eq!(o.report.primes, 4, "f2 must use exactly 4 primes"),
            "f3" => assert_eq!(o.report.primes, 5, "f3 must use exactly 5 primes"),
            _ => {}
        }
        if !o.config.scan && o.config.reorder.is_none() {
            match o.config.name {
                "f2" => f2_default = probes,
                "f3" => f3_default = probes,
                _ => {}
            }
        }
    }
    let ratio = f3_default as f64 / f2_default as f64;
    assert!(
        (1.5..=2.5).contains(&ratio),
        "f3/f2 probe ratio {ratio:.2} outside [1.5, 2.5]"
    );
}

// ---------------------------------------------------------------------------
// Criterion 5: rational reconstruction round trip
// ---------------------------------------------------------------------------

fn isqrt_u64(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).map_or(true, |s| s > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).map_or(false, |s| s <= n) {
        r += 1;
    }
    r
}

#[test]
fn criterion_5_rational_round_trip() {
    let _g = lock();
    let m = nth_prime(0);
    let bound = isqrt_u64(m / 2);
    let _s = prime_scope(m);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let m_big = BigUint::from(m);
    for _ in 0..10_000 {
        let n: i64 = rng.gen_range(-(bound as i64)..=bound as i64);
        let d: u64 = rng.gen_range(1..=bound);
        let residue = FieldElement::from_bigint(&BigInt::from(n)) / fe(d);
        let img = ModularImage::new(BigUint::from(residue.val()), m_big.clone());
        let got = wang_rr(&img).expect("round trip must succeed");
        assert_eq!(got, BigRational::new(BigInt::from(n), BigInt::from(d)));
    }
}

// ---------------------------------------------------------------------------
// Criterion 6: maximal-quotient false-positive calibration
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_maximal_quotient_calibration() {
    let _g = lock();
    let m = BigUint::from(nth_prime(0)) * BigUint::from(nth_prime(1));
    let t_bound = mqrr_default_tolerance(&m); // quotient tolerance with c = 10
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let mut successes = 0usize;
    let total = 100_000usize;
    for _ in 0..total {
        let hi: u64 = rng.gen();
        let lo: u64 = rng.gen();
        let residue = ((BigUint::from(hi) << 64) | BigUint::from(lo)) % &m;
        let img = ModularImage::new(residue, m.clone());
        if mqrr(&img, &t_bound).is_some() {
            successes += 1;
        }
    }
    let rate = successes as f64 / total as f64;
    assert!(
        (0.002..=0.05).contains(&rate),
        "maximal-quotient success rate {:.3}% outside [0.2%, 5%]",
        rate * 100.0
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: oracle equivalences (five randomized suites, 1000 cases each)
// ---------------------------------------------------------------------------

const CASES: usize = 1000;

fn random_fe(rng: &mut ChaCha8Rng, p: u64) -> FieldElement {
    fe(rng.gen_range(0..p))
}

fn random_nonzero_fe(rng: &mut ChaCha8Rng, p: u64) -> FieldElement {
    fe(rng.gen_range(1..p))
}

/// Suite: the quadratic-time shifted-Vandermonde solver agrees with plain
/// Gaussian elimination on the defining system.
fn suite_vandermonde_vs_gauss(p: u64) {
    let _s = prime_scope(p);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0701);
    for case in 0..CASES {
        let t = rng.gen_range(1..=50usize);
        let mut v: Vec<FieldElement> = Vec::with_capacity(t);
        let mut seen = HashSet::new();
        while v.len() < t {
            let x = random_nonzero_fe(&mut rng, p);
            if seen.insert(x.val()) {
                v.push(x);
            }
        }
        let truth: Vec<FieldElement> = (0..t).map(|_| random_fe(&mut rng, p)).collect();
        let probes: Vec<FieldElement> = (1..=t as u64)
            .map(|k| {
                v.iter()
                    .zip(&truth)
                    .fold(FieldElement::ZERO, |acc, (&vi, &ci)| acc + ci * vi.pow(k))
            })
            .collect();
        let fast = solve_shifted_vandermonde(&v, &probes)
            .unwrap_or_else(|e| panic!("case {case}: fast solver failed: {e}"));
        let matrix: Vec<Vec<FieldElement>> = (1..=t as u64)
            .map(|k| v.iter().map(|vi| vi.pow(k)).collect())
            .collect();
        let slow = solve_linear(matrix, probes)
            .unwrap_or_else(|e| panic!("case {case}: elimination failed: {e}"));
        assert_eq!(fast, slow, "case {case}: solvers disagree");
        assert_eq!(fast, truth, "case {case}: wrong solution");
    }
}

/// Suite: sparse interpolation agrees with the dense recursive reference on
/// random sparse polynomials (n <= 5, total degree <= 10, <= 20 terms).
fn suite_sparse_vs_dense(p: u64) {
    let _s = prime_scope(p);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0702);
    for case in 0..CASES {
        let n = rng.gen_range(1..=5usize);
        let terms = rng.gen_range(1..=20usize);
        // resample until the dense reference cost is reasonable; halve the
        // degree budget if a draw keeps missing
        let mut max_total = 10u32;
        let poly = loop {
            let mut poly = SparsePolynomial::zero(n);
            let mut used = HashSet::new();
            for _ in 0..terms {
                let d = rng.gen_range(0..=max_total);
                let mut idx = vec![0u32; n];
                for _ in 0..d {
                    idx[rng.gen_range(0..n)] += 1;
                }
                if used.insert(idx.clone()) {
                    poly.add_term(MultiIndex(idx), random_nonzero_fe(&mut rng, p));
                }
            }
            let mut cost = 1u64;
            for var in 0..n {
                let dmax = poly
                    .terms
                    .keys()
                    .map(|m| m.0[var])
                    .max()
                    .unwrap_or(0) as u64;
                cost *= dmax + 2;
            }
            if cost <= 3000 {
                break poly;
            }
            max_total = (max_total / 2).max(1);
        };
        let f = |z: &[FieldElement]| poly.evaluate(z);
        let anchors: Vec<FieldElement> =
            (0..n).map(|_| random_nonzero_fe(&mut rng, p)).collect();
        let (sparse, _) = zippel_interpolate(f, n, anchors, ZippelOptions::default())
            .unwrap_or_else(|e| panic!("case {case}: sparse interpolation failed: {e}"));
        let (dense, _) = dense_newton_interpolate(f, n, &vec![None; n], 1)
            .unwrap_or_else(|e| panic!("case {case}: dense interpolation failed: {e}"));
        assert_eq!(sparse, dense, "case {case}: interpolations disagree");
        assert_eq!(sparse, poly, "case {case}: wrong polynomial");
    }
}

/// Suite: the continued-fraction interpolant reproduces the black box at 20
/// fresh points.
fn suite_continued_fraction_vs_black_box(p: u64) {
    let _s = prime_scope(p);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0703);
    let eval = |coeffs: &[FieldElement], t: FieldElement| {
        coeffs
            .iter()
            .rev()
            .fold(FieldElement::ZERO, |acc, &c| acc * t + c)
    };
    'case: for case in 0..CASES {
        let dn = rng.gen_range(0..=8usize);
        let dd = rng.gen_range(0..=8usize);
        let mut num: Vec<FieldElement> = (0..=dn).map(|_| random_fe(&mut rng, p)).collect();
        *num.last_mut().unwrap() = random_nonzero_fe(&mut rng, p);
        let mut den: Vec<FieldElement> = (0..=dd).map(|_| random_fe(&mut rng, p)).collect();
        *den.last_mut().unwrap() = random_nonzero_fe(&mut rng, p);
        'attempt: for attempt in 0..10 {
            let mut st = ThieleState::new();
            let mut used = HashSet::new();
            loop {
                let t = random_nonzero_fe(&mut rng, p);
                if !used.insert(t.val()) || eval(&den, t).is_zero() {
                    continue;
                }
                match st.feed(t, eval(&num, t) / eval(&den, t)) {
                    Ok(true) => break,
                    Ok(false) => {}
                    Err(_) if attempt < 9 => continue 'attempt,
                    Err(e) => panic!("case {case}: interpolation failed: {e}"),
                }
            }
            let mut fresh = 0;
            while fresh < 20 {
                let t = random_nonzero_fe(&mut rng, p);
                if !used.insert(t.val()) || eval(&den, t).is_zero() {
                    continue;
                }
                if let Some(tau) = st.evaluate(t) {
                    assert_eq!(
                        tau,
                        eval(&num, t) / eval(&den, t),
                        "case {case}: interpolant disagrees with black box"
                    );
                    fresh += 1;
                }
            }
            continue 'case;
        }
        unreachable!();
    }
}

/// Suite: pairwise residue combination is correct against arbitrary-precision
/// arithmetic and associative.
fn suite_crt_pair_and_associativity() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0704);
    for case in 0..CASES {
        let mut idx = HashSet::new();
        while idx.len() < 3 {
            idx.insert(rng.gen_range(0..100usize));
        }
        let primes: Vec<BigUint> = idx.iter().map(|&i| BigUint::from(nth_prime(i))).collect();
        let residues: Vec<BigUint> = idx
            .iter()
            .map(|&i| BigUint::from(rng.gen_range(0..nth_prime(i))))
            .collect();
        let (r01, m01) = crt_pair((&residues[0], &primes[0]), (&residues[1], &primes[1]));
        assert_eq!(m01, &primes[0] * &primes[1], "case {case}: wrong modulus");
        assert!(r01 < m01, "case {case}: residue out of range");
        assert_eq!(&r01 % &primes[0], residues[0], "case {case}: lost residue 0");
        assert_eq!(&r01 % &primes[1], residues[1], "case {case}: lost residue 1");
        let left = crt_pair((&r01, &m01), (&residues[2], &primes[2]));
        let (r12, m12) = crt_pair((&residues[1], &primes[1]), (&residues[2], &primes[2]));
        let right = crt_pair((&residues[0], &primes[0]), (&r12, &m12));
        assert_eq!(left, right, "case {case}: combination is not associative");
    }
}

/// Builds a random expression string over z1..zk, returning the text.
fn random_expression(rng: &mut ChaCha8Rng, n_vars: usize, depth: u32) -> String {
    if depth == 0 || rng.gen_range(0..5) == 0 {
        return if rng.gen_bool(0.5) {
            format!("z{}", rng.gen_range(1..=n_vars))
        } else {
            // literals beyond 64 bits exercise arbitrary precision
            let a: u64 = rng.gen();
            let b: u64 = rng.gen();
            format!("{}", (BigUint::from(a) << 64) | BigUint::from(b))
        };
    }
    let a = random_expression(rng, n_vars, depth - 1);
    match rng.gen_range(0..6) {
        0 => format!("({a}+{})", random_expression(rng, n_vars, depth - 1)),
        1 => format!("({a}-{})", random_expression(rng, n_vars, depth - 1)),
        2 => format!("({a}*{})", random_expression(rng, n_vars, depth - 1)),
        3 => format!("({a}/{})", random_expression(rng, n_vars, depth - 1)),
        4 => format!("(-{a})"),
        _ => format!("({a})^{}", rng.gen_range(0..=4u32)),
    }
}

/// Suite: the field evaluator agrees with exact big-rational evaluation
/// reduced mod p whenever the exact value is defined.
fn suite_expression_vs_big_rational(p: u64) {
    let _s = prime_scope(p);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0705);
    let vars = zvars(&["z1", "z2", "z3"]);
    for case in 0..CASES {
        let text = random_expression(&mut rng, vars.len(), 3);
        let expr = Expression::parse(&text, &vars)
            .unwrap_or_else(|e| panic!("case {case}: generated text failed to parse: {e}"));
        let values: Vec<u64> = (0..vars.len()).map(|_| rng.gen_range(0..p)).collect();
        let point_fe: Vec<FieldElement> = values.iter().map(|&v| fe(v)).collect();
        let point_q: Vec<BigRational> = values
            .iter()
            .map(|&v| BigRational::from_integer(BigInt::from(v)))
            .collect();
        let Some(exact) = expr.evaluate_rational(&point_q) else {
            continue; // exact division by zero: no defined reference value
        };
        let den = FieldElement::from_bigint(exact.denom());
        if den.is_zero() {
            continue; // denominator divisible by p: not reducible mod p
        }
        let expected = FieldElement::from_bigint(exact.numer()) / den;
        assert_eq!(
            expr.evaluate(&point_fe),
            expected,
            "case {case}: evaluator disagrees on {text}"
        );
    }
}

#[test]
fn criterion_7_oracle_equivalences() {
    let _g = lock();
    let p = nth_prime(0);
    suite_vandermonde_vs_gauss(p);
    suite_sparse_vs_dense(p);
    suite_continued_fraction_vs_black_box(p);
    suite_crt_pair_and_associativity();
    suite_expression_vs_big_rational(p);
}

// ---------------------------------------------------------------------------
// Criterion 8: persistence determinism on f2
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_persistence_determinism() {
    let _g = lock();
    // the plain f2 benchmark run was tagged and saved its per-prime state
    let suite = bench_suite();
    let full = suite
        .outcomes
        .iter()
        .find(|o| o.config.name == "f2" && !o.config.scan && o.config.reorder.is_none())
        .unwrap();

    let spec = bench::spec("f2").unwrap();
    let expr = Expression::parse(&spec.text, &spec.vars).unwrap();
    let bb = |point: &[FieldElement]| vec![expr.evaluate(point)];
    let options = DriverOptions {
        seed: 1,
        save_dir: bench_save_dir(),
        ..DriverOptions::default()
    };
    // resume from the state written after the first prime field
    let state = bench_save_dir().join(format!("{F2_TAG}_1.txt"));
    let job = ReconstructionJob::resume(&state, 0)
        .unwrap_or_else(|e| panic!("resume from {state:?} failed: {e}"));
    let out = reconstruct(std::slice::from_ref(&job), &bb, &options).unwrap();
    let resumed = out[0].function.render(&spec.vars);
    assert_eq!(
        resumed, full.report.function,
        "resumed output differs from the uninterrupted run"
    );
    assert_eq!(
        out[0].probes, full.report.probes,
        "resumed probe count differs from the uninterrupted run"
    );
    assert_eq!(out[0].primes, full.report.primes);
    assert!(out[0].verified);
    let _ = std::fs::remove_dir_all(bench_save_dir());
}
