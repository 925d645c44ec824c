//! Acceptance suite: one PASS/FAIL line per criterion, with details
//! indented beneath. Exits nonzero on a FAIL only when ACCEPTANCE_STRICT
//! is set, so the workspace test run reports rather than aborts.

use std::time::Instant;

use ccr_cli::config::{ParamGrid, RunConfig, TableKind, TimingConfig};
use ccr_cli::tables::run_epe_table;
use ccr_cli::timing::run_timing;
use ccr_cli::workload::workload_estimate;
use ccr_core::exposure::{
    capital_requirement, ee_profile, eee, BscMode, BucketGrid, CreditParams, ProfileOptions,
};
use ccr_core::local_time::{
    bm_local_time_atom, bm_local_time_density, gbm_expected_local_time, tanaka_meyer_residual,
    BmLocalTimeQuery, LocalTimeQuadrature,
};
use ccr_core::market_model::{bs_call, bs_put, std_normal_cdf, MarketParams};
use ccr_core::pricing::{price_bsc, price_bsd_at_zero, price_lt, AccumulatorContract, Method};
use ccr_core::quadrature::{integrate, try_integrate, Tolerance};
use ccr_core::simulation::{simulate_paths, SimulationConfig};
use ccr_core::Axis;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

// Pinned tolerances.
const FV_BSD_ABS: f64 = 5e-5;
const FV_BSC_ABS: f64 = 1e-4;
const FV_LT_DELTA: f64 = 0.02;
const FV_LT_DELTA_LOW_VOL: f64 = 0.005;
const EPE_REL: f64 = 0.005;
const EPE_COHERENCE_PCT: f64 = 0.07;
const MC_SIGMAS: f64 = 3.0;
const EPE_PATHS: usize = 2000;
const TIMING_PATHS: usize = 500;
const TIMING_REPETITIONS: usize = 5;
const LT_BSD_RATIO: f64 = 0.7;
const MASS_TOL: f64 = 1e-8;
const OCCUPATION_REL: f64 = 1e-3;
const ORIGIN_TOL: f64 = 1e-10;
const PARITY_TOL: f64 = 1e-10;
const KS_CRITICAL_1PCT: f64 = 1.6276;
const TANAKA_PATHS: usize = 100_000;
const TANAKA_STEPS: usize = 2000;
const OCC_PATHS: usize = 100_000;
const OCC_STEPS_AT_SPOT: usize = 10_000;
const OCC_STEPS: usize = 2000;

// (r, K, vol, BSD, BSC)
const FAIR_VALUES: [(f64, f64, f64, f64, f64); 8] = [
    (0.01, 0.9, 0.15, 0.0961, 0.0961),
    (0.01, 0.9, 0.25, 0.0783, 0.0784),
    (0.01, 1.0, 0.15, -0.0323, -0.0322),
    (0.01, 1.0, 0.25, -0.0587, -0.0585),
    (0.02, 0.9, 0.15, 0.1008, 0.1008),
    (0.02, 0.9, 0.25, 0.0837, 0.0837),
    (0.02, 1.0, 0.15, -0.0248, -0.0247),
    (0.02, 1.0, 0.25, -0.0509, -0.0508),
];

// (K, vol, r, BSD, BSC, LT), in the row order of the exposure grid
const EPE_REFERENCE: [(f64, f64, f64, f64, f64, f64); 18] = [
    (4.78, 0.15, 0.01, 0.9303454395, 0.9303714275, 0.9303781163),
    (4.78, 0.2, 0.01, 0.9049015095, 0.9049413280, 0.9048279190),
    (4.78, 0.3, 0.01, 0.8251642939, 0.8251928714, 0.8247838254),
    (3.75, 0.15, 0.01, 1.9686102762, 1.9686111645, 1.9686848833),
    (3.75, 0.2, 0.01, 1.9675941521, 1.9676004514, 1.9676336107),
    (3.75, 0.3, 0.01, 1.9547899122, 1.9548275248, 1.9547735333),
    (2.98, 0.15, 0.01, 2.7348505526, 2.7348507540, 2.7349168463),
    (2.98, 0.2, 0.01, 2.7348375084, 2.7348378657, 2.7348585689),
    (2.98, 0.3, 0.01, 2.7336498018, 2.7336570672, 2.7336545073),
    (4.78, 0.15, 0.02, 0.9556220367, 0.9556450742, 0.9558308683),
    (4.78, 0.2, 0.02, 0.9318141129, 0.9318494415, 0.9318254905),
    (4.78, 0.3, 0.02, 0.8548444479, 0.8548671968, 0.8542861489),
    (3.75, 0.15, 0.02, 1.9871484085, 1.9871500602, 1.9873803563),
    (3.75, 0.2, 0.02, 1.9862637277, 1.9862700504, 1.9864841609),
    (3.75, 0.3, 0.02, 1.9743416072, 1.9743766907, 1.9744396571),
    (2.98, 0.15, 0.02, 2.7496039372, 2.7496047313, 2.7497784936),
    (2.98, 0.2, 0.02, 2.7495932160, 2.7495941376, 2.7497625846),
    (2.98, 0.3, 0.02, 2.7485174039, 2.7485245347, 2.748661624),
];

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn new(summary: &str) -> Self {
        Self {
            pass: true,
            summary: summary.to_string(),
            details: Vec::new(),
        }
    }

    /// Records one sub-check.
    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.details
            .push(format!("{} {line}", if ok { "ok  " } else { "MISS" }));
    }

    fn note(&mut self, line: impl Into<String>) {
        self.details.push(format!("     {}", line.into()));
    }
}

fn fair_value_table() -> Outcome {
    let mut o =
        Outcome::new("fair values: BSD ±5e-5, BSC ±1e-4, |Δ(LT,BSD)| ≤ 2% (σ=0.15 rows ≤ 0.5%)");
    let quad = LocalTimeQuadrature::default();
    for &(r, k, vol, bsd_ref, bsc_ref) in &FAIR_VALUES {
        let m = MarketParams::risk_neutral(1.0, r, vol).unwrap();
        let c = AccumulatorContract::new(k, 1.0, 250).unwrap();
        let bsd = price_bsd_at_zero(&m, &c).unwrap();
        let bsc = price_bsc(&m, &c, 0.0, 40).unwrap();
        let lt = price_lt(&m, &c, 0.0, &quad).unwrap();
        let delta = (lt - bsd) / bsd;
        let bound = if vol == 0.15 {
            FV_LT_DELTA_LOW_VOL
        } else {
            FV_LT_DELTA
        };
        let ok = (bsd - bsd_ref).abs() <= FV_BSD_ABS
            && (bsc - bsc_ref).abs() <= FV_BSC_ABS
            && delta.abs() <= bound;
        o.check(
            ok,
            format!(
                "(r={r}, K={k}, σ={vol}) BSD {bsd:.6} [{bsd_ref}] BSC {bsc:.6} [{bsc_ref}] LT {lt:.6} Δ(LT,BSD) {:+.3}%",
                100.0 * delta
            ),
        );
    }
    o
}

fn epe_table() -> (Outcome, ccr_cli::RunReport) {
    let mut o = Outcome::new(
        "EPE: LT, BSC within 0.5% of reference; |Δ(BSC,LT)| ≤ 0.07%; BSD within 3 SE at 2000 paths",
    );
    let cfg = RunConfig {
        sim: SimulationConfig {
            n_paths: EPE_PATHS,
            ..Default::default()
        },
        ..Default::default()
    };
    let rep = run_epe_table(&cfg).unwrap();
    let (mut det_ok, mut bsd_ok) = (true, true);
    for (i, &(k, vol, r, bsd_ref, bsc_ref, lt_ref)) in EPE_REFERENCE.iter().enumerate() {
        let got = |c| rep.value(i, c).unwrap();
        let (bsd, se, bsc, lt) = (got("bsd"), got("bsd_std_error"), got("bsc"), got("lt"));
        let coherence = got("delta_bsc_lt_pct");
        let rel_lt = (lt - lt_ref) / lt_ref;
        let rel_bsc = (bsc - bsc_ref) / bsc_ref;
        let z = (bsd - bsd_ref) / se;
        let det = rel_lt.abs() <= EPE_REL
            && rel_bsc.abs() <= EPE_REL
            && coherence.abs() <= EPE_COHERENCE_PCT;
        let mc = z.abs() <= MC_SIGMAS;
        det_ok &= det;
        bsd_ok &= mc;
        o.check(
            det && mc,
            format!(
                "({k}, {vol}, {r}) LT {lt:.10} ({:+.4}%) BSC {bsc:.10} ({:+.4}%) Δ(BSC,LT) {coherence:+.5}% \
                 BSD {bsd:.6} ± {se:.6} z={z:+.2}",
                100.0 * rel_lt,
                100.0 * rel_bsc
            ),
        );
    }
    o.note(format!(
        "deterministic routes (LT, BSC, coherence): {}",
        if det_ok {
            "all within tolerance"
        } else {
            "OUT OF TOLERANCE"
        }
    ));
    o.note(format!(
        "discrete route within 3 SE: {}",
        if bsd_ok {
            "all rows"
        } else {
            "no, see z column"
        }
    ));
    if !bsd_ok {
        o.note(
            "the discrete route averages the positive part per path before averaging over paths;",
        );
        o.note(
            "where a sizeable share of paths carries negative MtM (K=4.78, σ≥0.2) that exceeds the",
        );
        o.note("positive part of the mean, which is what the reference column tracks (see bsd_of_mean_mtm).");
    }
    (o, rep)
}

fn timing() -> Outcome {
    let mut o = Outcome::new("timing: median LT < BSD < BSC over 5 repetitions and LT/BSD ≤ 0.7");
    let cfg = RunConfig {
        table: TableKind::Timing,
        timing: TimingConfig {
            warmup: 1,
            repetitions: TIMING_REPETITIONS,
            n_paths: Some(TIMING_PATHS),
        },
        ..Default::default()
    };
    let rep = run_timing(&cfg).unwrap();
    let median = |m: Method| {
        let row = rep
            .rows
            .iter()
            .position(|r| r.cells[0] == ccr_cli::report::Cell::Text(m.label().into()))
            .unwrap();
        rep.value(row, "median_seconds").unwrap()
    };
    let (lt, bsd, bsc) = (median(Method::Lt), median(Method::Bsd), median(Method::Bsc));
    o.check(
        lt < bsd && bsd < bsc,
        format!("medians LT {lt:.4}s BSD {bsd:.4}s BSC {bsc:.4}s"),
    );
    o.check(
        lt / bsd <= LT_BSD_RATIO,
        format!("LT/BSD = {:.4}", lt / bsd),
    );
    o.note(format!(
        "{TIMING_PATHS} paths, grid (4.78, 0.15, 0.01), BSC pathwise on 40 fixings per day; absolute times are machine dependent"
    ));
    o
}

fn workload() -> Outcome {
    let mut o = Outcome::new("workload: PT = 4e8, RT = 5.2e9");
    let (pt, rt) = workload_estimate(10_000, 2000, 20, 13).unwrap();
    o.check(
        pt == 400_000_000 && rt == 5_200_000_000,
        format!("PT = {pt}, RT = {rt}"),
    );
    o
}

fn bm_moment(level: f64, t: f64, power: i32) -> f64 {
    let spec = Tolerance::new(1e-14, 1e-13, 200).on(0.0, 40.0 * t.sqrt());
    let f = |y: f64| {
        y.powi(power)
            * bm_local_time_density(&BmLocalTimeQuery {
                level,
                horizon: t,
                time_at_level: y,
            })
            .unwrap()
    };
    integrate(f, &spec).unwrap().value
}

fn properties() -> Outcome {
    let mut o = Outcome::new("property suites");
    let mut rng = ChaCha20Rng::seed_from_u64(2024);

    let worst = (0..100)
        .map(|_| {
            let a = rng.random_range(-3.0..3.0);
            let t = rng.random_range(0.05..5.0);
            (bm_moment(a, t, 0) + bm_local_time_atom(a, t).unwrap() - 1.0).abs()
        })
        .fold(0.0, f64::max);
    o.check(
        worst <= MASS_TOL,
        format!("local-time mass: worst |mass - 1| = {worst:.2e} over 100 (a, t)"),
    );

    for t in [0.5_f64, 1.0, 2.0] {
        let w = 12.0 * t.sqrt();
        let spec = Tolerance::new(1e-10, 1e-10, 200).on(-w, w);
        let total = try_integrate(|a| Ok(bm_moment(a, t, 1)), Axis::X, &spec, &[0.0])
            .unwrap()
            .value;
        o.check(
            ((total - t) / t).abs() <= OCCUPATION_REL,
            format!("occupation identity t={t}: ∫∫ y g dy da = {total:.10}"),
        );
    }

    let origin = bm_moment(0.0, 1.0, 1);
    let target = (2.0 / std::f64::consts::PI).sqrt();
    o.check(
        (origin - target).abs() <= ORIGIN_TOL,
        format!("E[L_1(0)] = {origin:.12} vs sqrt(2/pi) = {target:.12}"),
    );

    for (i, a) in [-1.0, 0.0, 0.5].into_iter().enumerate() {
        let s = tanaka_meyer_residual(a, 1.0, TANAKA_PATHS, TANAKA_STEPS, 77 + i as u64).unwrap();
        o.check(
            s.mean.abs() <= MC_SIGMAS * s.std_error,
            format!(
                "Tanaka–Meyer a={a}: residual {:+.2e} ± {:.2e} ({TANAKA_PATHS} paths, {TANAKA_STEPS} steps)",
                s.mean, s.std_error
            ),
        );
    }

    let parity = (0..1000)
        .map(|_| {
            let s = rng.random_range(0.1..10.0);
            let k = s * rng.random_range(0.5..1.5);
            let r = rng.random_range(-0.02..0.1);
            let v = rng.random_range(0.05..0.8);
            let tau = rng.random_range(0.0..3.0);
            let m = MarketParams::risk_neutral(s, r, v).unwrap();
            (bs_call(&m, k, tau).unwrap()
                - bs_put(&m, k, tau).unwrap()
                - (s - k * (-r * tau).exp()))
            .abs()
        })
        .fold(0.0, f64::max);
    o.check(
        parity <= PARITY_TOL,
        format!("put–call parity: worst residual {parity:.2e} over 1000 points"),
    );

    let zero_rho = capital_requirement(&CreditParams {
        ead: 1.0,
        lgd: 0.45,
        pd: 0.01,
        rho: 0.0,
        maturity_coeff: 1.0,
    })
    .unwrap();
    o.check(zero_rho == 0.0, format!("capital at ρ=0: {zero_rho}"));

    let eee_ok = (0..1000).all(|_| {
        let n = rng.random_range(1..60);
        let ee: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let brute: Vec<f64> = (0..n)
            .map(|k| ee[..=k].iter().cloned().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        eee(&ee) == brute
    });
    o.check(
        eee_ok,
        "EEE equals the brute-force prefix maximum on 1000 random vectors".into(),
    );

    let grid = BucketGrid::uniform(10, 1.0).unwrap();
    let sim = SimulationConfig {
        n_paths: 200,
        ..Default::default()
    };
    let mut profiles = 0;
    let mut envelope_ok = true;
    for &(k, vol, r, ..) in &EPE_REFERENCE {
        let m = MarketParams::risk_neutral(5.7, r, vol).unwrap();
        let c = AccumulatorContract::new(k, 1.0, 250).unwrap();
        for method in Method::ALL {
            let p = ee_profile(method, &m, &c, &grid, &sim, &ProfileOptions::default()).unwrap();
            envelope_ok &= p.eepe >= p.epe && p.eee.iter().zip(&p.ee).all(|(a, b)| a >= b);
            profiles += 1;
        }
        let opts = ProfileOptions {
            bsc_mode: BscMode::Pathwise,
            fixings_per_day: 2,
            ..Default::default()
        };
        let p = ee_profile(Method::Bsc, &m, &c, &grid, &sim, &opts).unwrap();
        envelope_ok &= p.eepe >= p.epe;
        profiles += 1;
    }
    o.check(
        envelope_ok,
        format!("EEPE ≥ EPE on {profiles} generated profiles"),
    );

    let (s0, r, vol) = (5.7, 0.01, 0.2);
    let m = MarketParams::risk_neutral(s0, r, vol).unwrap();
    let cfg = SimulationConfig {
        n_paths: 10_000,
        ..Default::default()
    };
    let mut st: Vec<f64> = simulate_paths(&m, &cfg)
        .unwrap()
        .paths()
        .map(|p| p[p.len() - 1])
        .collect();
    st.sort_by(f64::total_cmp);
    let n = st.len() as f64;
    let d = st
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = std_normal_cdf(((x / s0).ln() - (r - 0.5 * vol * vol)) / vol);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let critical = KS_CRITICAL_1PCT / n.sqrt();
    o.check(
        d < critical,
        format!("KS on 10^4 terminal prices: D = {d:.5} < {critical:.5}"),
    );

    let dump = || {
        let mut buf = Vec::new();
        simulate_paths(
            &m,
            &SimulationConfig {
                n_paths: 100,
                ..cfg
            },
        )
        .unwrap()
        .write_csv(&mut buf)
        .unwrap();
        buf
    };
    let mut rerun = Vec::new();
    let cfg2 = RunConfig {
        grid: Some(ParamGrid {
            strikes: vec![4.78],
            vols: vec![0.3],
            rates: vec![0.02],
        }),
        sim: SimulationConfig {
            n_paths: 100,
            ..Default::default()
        },
        ..Default::default()
    };
    for _ in 0..2 {
        let mut buf = Vec::new();
        run_epe_table(&cfg2).unwrap().write_csv(&mut buf).unwrap();
        rerun.push(buf);
    }
    o.check(
        dump() == dump() && rerun[0] == rerun[1],
        "fixed-seed reruns are byte-identical (paths CSV, EPE table CSV)".into(),
    );
    o
}

/// `(1/2ε)` band occupation around `level` along exact GBM steps,
/// Richardson-combined over bands ε and 2ε, with trapezoid time weights.
fn occupation_oracle(
    level: f64,
    m: &MarketParams,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> (f64, f64) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let dt = 1.0 / n_steps as f64;
    let drift = (m.rate - 0.5 * m.vol * m.vol) * dt;
    let sd = m.vol * dt.sqrt();
    let eps = level * m.vol * dt.sqrt();
    let weight = |s: f64, w: f64| {
        let d = (s - level).abs();
        let near = if d <= eps { w / (2.0 * eps) } else { 0.0 };
        let wide = if d <= 2.0 * eps { w / (4.0 * eps) } else { 0.0 };
        2.0 * near - wide
    };
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..n_paths {
        let mut x = m.spot.ln();
        let mut occ = weight(m.spot, 0.5 * dt);
        for k in 1..=n_steps {
            let z: f64 = rng.sample(StandardNormal);
            x += drift + sd * z;
            occ += weight(x.exp(), if k == n_steps { 0.5 * dt } else { dt });
        }
        s1 += occ;
        s2 += occ * occ;
    }
    let n = n_paths as f64;
    let mean = s1 / n;
    (mean, ((s2 / n - mean * mean) / (n - 1.0)).sqrt())
}

fn occupation(epe_report: &ccr_cli::RunReport) -> Outcome {
    let mut o = Outcome::new(
        "ε-occupation oracle at 5 (level, σ, r) points within 3 SE; convention in metadata",
    );
    let quad = LocalTimeQuadrature::default();
    let points = [
        (5.7, 0.2, 0.01, OCC_STEPS_AT_SPOT),
        (4.78, 0.15, 0.01, OCC_STEPS),
        (6.2, 0.2, 0.02, OCC_STEPS),
        (5.0, 0.3, 0.02, OCC_STEPS),
        (6.5, 0.3, 0.05, OCC_STEPS),
    ];
    for (i, &(level, vol, r, steps)) in points.iter().enumerate() {
        let m = MarketParams::risk_neutral(5.7, r, vol).unwrap();
        let exact = gbm_expected_local_time(level, 1.0, &m, &quad).unwrap();
        let (mc, se) = occupation_oracle(level, &m, OCC_PATHS, steps, 500 + i as u64);
        o.check(
            (exact - mc).abs() <= MC_SIGMAS * se,
            format!(
                "(x={level}, σ={vol}, r={r}) E[L_1(x)] = {exact:.6}, occupation {mc:.6} ± {se:.6} ({:+.2} SE, {steps} steps)",
                (mc - exact) / se
            ),
        );
    }
    let meta = epe_report.metadata.get("local_time_normalization");
    o.check(
        meta.is_some_and(|v| v.as_str().is_some_and(|s| s.contains("factor 1.0"))),
        format!(
            "run metadata local_time_normalization = {}",
            meta.map(|v| v.to_string()).unwrap_or_default()
        ),
    );
    o
}

fn main() {
    let start = Instant::now();
    let mut outcomes = Vec::new();
    let mut run = |n: usize, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let out = f();
        for d in &out.details {
            println!("    {d}");
        }
        println!(
            "[{n}] {} {} ({:.1}s)",
            if out.pass { "PASS" } else { "FAIL" },
            out.summary,
            t.elapsed().as_secs_f64()
        );
        outcomes.push(out.pass);
    };
    run(1, &mut fair_value_table);
    let mut epe_report = None;
    run(2, &mut || {
        let (o, rep) = epe_table();
        epe_report = Some(rep);
        o
    });
    let epe_report = epe_report.unwrap();
    run(3, &mut timing);
    run(4, &mut workload);
    run(5, &mut properties);
    run(6, &mut || occupation(&epe_report));
    let failed = outcomes.iter().filter(|p| !**p).count();
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        outcomes.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
