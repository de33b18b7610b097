// Copyright 2026 The thermocorr Authors
// SPDX-License-Identifier: Apache-2.0

//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermocorr::bath::BathModel;
use thermocorr::corrections::{upsilon_mean_force, DiagonalEquation, KossakowskiSpec, MeanForceForm};
use thermocorr::generators::{build_davies_generator, steady_state_of_generator};
use thermocorr::linalg::{c64, CMat};
use thermocorr::operators::HermitianOperator;
use thermocorr::oracle::TruncatedBath;
use thermocorr::perturbative::{fourth_order_solve_tls, g40_direct_limit, g40_tls, FourTupleSet, TlsTables};
use thermocorr::quadrature::QuadratureConfig;
use thermocorr::system::OpenSystem;
use thermocorr::validation::{self, linspace};
use thermocorr_cli::config::RunConfig;
use thermocorr_cli::tasks::{run_corrections, RunOptions};

type Outcome = Result<String, String>;

const R: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn spin_boson_bath(beta: f64) -> BathModel {
    BathModel::ohmic(beta, 1.0, 50.0 / beta).expect("valid bath")
}

fn grid() -> Vec<f64> {
    linspace(-4.5, 4.5, 10)
}

fn require(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sci(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn dual_form() -> Outcome {
    let c = validation::dual_form(&spin_boson_bath(1.0), &grid(), &QuadratureConfig::default()).map_err(err)?;
    require(c.passed(), format!("worst error/bound {:.3e} (≤ 1)", c.measured))
}

fn steady_state_equals_mean_force() -> Outcome {
    let [mf, sec] = validation::steady_equals_mean_force(&spin_boson_bath(1.0), &grid(), &QuadratureConfig::default()).map_err(err)?;
    require(
        mf.passed() && sec.passed(),
        format!("|Υ_st − Υ_mf| ≤ {:.3e} (tol 1e-7); secular |Υ_st − Υ_dyn| ≤ {:.3e} (tol 1e-10)", mf.measured, sec.measured),
    )
}

fn random_three_level(bath: BathModel) -> thermocorr::Result<OpenSystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_260_415);
    let mut levels: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..2.5)).collect();
    levels.sort_by(f64::total_cmp);
    let h0 = CMat::from_fn(3, 3, |i, j| if i == j { c64(levels[i], 0.0) } else { c64(0.0, 0.0) });
    let mut a = CMat::zeros(3, 3);
    for i in 0..3 {
        a[(i, i)] = c64(rng.gen_range(-1.0..1.0), 0.0);
        for j in i + 1..3 {
            let z = c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            a[(i, j)] = z;
            a[(j, i)] = z.conj();
        }
    }
    OpenSystem::new(HermitianOperator::new(h0)?, vec![(HermitianOperator::new(a)?, 0)], vec![bath])
}

fn second_order_residual() -> Outcome {
    let cfg = QuadratureConfig::default();
    let tls = OpenSystem::tls(1.0, (R, 0.0, R), spin_boson_bath(1.0)).map_err(err)?;
    let a = validation::second_order("tls", &tls, &KossakowskiSpec::Redfield, &cfg).map_err(err)?;
    let three = random_three_level(BathModel::ohmic(1.0, 1.0, 10.0).map_err(err)?).map_err(err)?;
    let b = validation::second_order("three_level", &three, &KossakowskiSpec::Redfield, &cfg).map_err(err)?;
    require(
        a.passed() && b.passed(),
        format!("relative residual TLS {:.3e}, random 3-level {:.3e} (tol 1e-8)", a.measured, b.measured),
    )
}

fn fourth_order() -> Outcome {
    let cfg = QuadratureConfig::default();
    let mut notes = Vec::new();
    let mut ok = true;

    let tables = TlsTables::new(&spin_boson_bath(1.0), 1.0, &cfg).map_err(err)?;
    let set = FourTupleSet::build(&tables.system().spectral, 0).map_err(err)?;
    let diag = |w: f64| c64(if w > 0.0 { 0.3 } else if w < 0.0 { -0.7 } else { 0.1 }, 0.0);
    let seven = tables.g22_sum(&set.tuples[..7], diag).map_err(err)?;
    let scale = set.tuples[..7]
        .iter()
        .map(|t| tables.g22_sum(std::slice::from_ref(t), diag).map(|v| v.norm()))
        .collect::<thermocorr::Result<Vec<_>>>()
        .map_err(err)?
        .into_iter()
        .fold(0.0, f64::max);
    ok &= seven.norm() <= 1e-10 * scale;
    notes.push(format!("seven-tuple |Σg22|/scale {:.2e}", seven.norm() / scale));

    let (up, down) = fourth_order_solve_tls(&spin_boson_bath(1.0), 1.0, DiagonalEquation::Redfield, &cfg).map_err(err)?;
    let redfield = up.norm().max(down.norm());
    ok &= redfield <= 1e-12;
    notes.push(format!("Redfield diagonal {redfield:.1e}"));

    let tight = QuadratureConfig::tight();
    let mut worst = 0.0f64;
    for beta in [0.5, 1.0, 2.0] {
        let bath = spin_boson_bath(beta);
        let (up, down) = fourth_order_solve_tls(&bath, 1.0, DiagonalEquation::Cumulant, &tight).map_err(err)?;
        for (w, st) in [(1.0, up), (-1.0, down)] {
            let mf = upsilon_mean_force(&bath, w, w, MeanForceForm::Kernel, &tight).map_err(err)?;
            let s = bath.measure().lamb_shift(w, &tight).map_err(err)?;
            let rel = (mf - st - s).norm() / mf.norm();
            worst = worst.max(rel);
        }
    }
    ok &= worst <= 1e-6;
    notes.push(format!("cumulant Υ_mf − Υ_st − S rel {worst:.1e}"));

    let bath = BathModel::ohmic(1.0, 1.0, 5.0).map_err(err)?;
    let q = QuadratureConfig {
        abs_tol: 1e-10,
        rel_tol: 1e-7,
        max_subdivisions: 400_000,
        ..QuadratureConfig::default()
    };
    let closed = g40_tls(&bath, 1.0, &q).map_err(err)?;
    let direct = g40_direct_limit(&bath, 1.0, [1.0, -1.0, 1.0, -1.0], 4.0, 1e-5, &q).map_err(err)?;
    let rel = (direct - closed).norm() / closed.abs();
    ok &= rel <= 1e-4;
    notes.push(format!("g40 closed vs direct rel {rel:.1e}"));

    require(ok, notes.join("; "))
}

fn cumulant_cptp() -> Outcome {
    let sys = OpenSystem::tls(1.0, (R, 0.0, R), spin_boson_bath(1.0)).map_err(err)?;
    let (trace, choi) = validation::cumulant_cptp(&sys, &[0.02, 0.1], &[0.5, 5.0, 50.0], &QuadratureConfig::default()).map_err(err)?;
    require(
        trace <= 1e-12 && choi >= -1e-10,
        format!("trace defect {trace:.1e} (≤ 1e-12), min Choi eigenvalue {choi:.3e} (≥ −1e-10)"),
    )
}

fn cumulant_generator_gap() -> Outcome {
    let sys = OpenSystem::tls(1.0, (R, 0.0, R), spin_boson_bath(1.0)).map_err(err)?;
    let (slope, gaps) = validation::cumulant_redfield_gap(&sys, 2.0, &[1e-1, 3e-2, 1e-2], &QuadratureConfig::default()).map_err(err)?;
    require((slope - 4.0).abs() <= 0.3, format!("slope {slope:.3} (4 ± 0.3), gaps [{}]", sci(&gaps)))
}

fn exact_oracle() -> Outcome {
    let start = Instant::now();
    let bath = TruncatedBath::new(validation::oracle_modes(), 7).map_err(err)?;
    let (slope, res) = validation::oracle_mean_force_residuals(
        &HermitianOperator::tls_hamiltonian(1.0),
        &HermitianOperator::pauli_vector(R, 0.0, R),
        &bath,
        1.0,
        &[0.02, 0.05, 0.1],
        &QuadratureConfig::default(),
    )
    .map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    require(
        (slope - 4.0).abs() <= 0.3 && secs <= 300.0,
        format!("slope {slope:.3} (4 ± 0.3), residuals [{}], {secs:.1} s", sci(&res)),
    )
}

fn coherence_reconciliation() -> Outcome {
    let cfg = QuadratureConfig::default();
    let sys = OpenSystem::tls(1.0, (R, 0.0, R), spin_boson_bath(1.0)).map_err(err)?;
    let mut errors = Vec::new();
    let mut notes = Vec::new();
    for lambda in [0.1, 0.05, 0.02] {
        let mf = validation::coherence(&sys, validation::mean_force_state(&sys, lambda, &cfg).map_err(err)?.matrix()).map_err(err)?;
        let t = validation::relaxation_time(&sys, lambda, 10.0).map_err(err)?;
        let rho = validation::cumulant_state(&sys, lambda, t, 40.0, &cfg).map_err(err)?;
        let cum = validation::coherence(&sys, rho.matrix()).map_err(err)?;
        let rel = (cum - mf).abs() / mf;
        errors.push(rel);
        notes.push(format!("λ={lambda}: cumulant {cum:.3e} vs mean-force {mf:.3e} (rel {rel:.3})"));
    }
    let davies = build_davies_generator(&sys, 0.05, &cfg)
        .and_then(|l| steady_state_of_generator(&l))
        .and_then(|r| validation::coherence(&sys, r.matrix()))
        .map_err(err)?;
    notes.push(format!("Davies {davies:.1e}"));
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    require(errors[1] <= 0.1 && monotone && davies <= 1e-10, notes.join("; "))
}

fn figure_table() -> Outcome {
    let dir = std::env::temp_dir().join(format!("thermocorr-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(err)?;
    let out = dir.join("corrections.csv");
    let config_path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/corrections_tls.json");
    let config = RunConfig::from_path(&config_path).map_err(err)?;
    let opts = RunOptions {
        out: Some(out.clone()),
        ..RunOptions::default()
    };
    run_corrections(&config, &opts).map_err(err)?;
    let text = std::fs::read_to_string(&out).map_err(err)?;
    let _ = std::fs::remove_dir_all(&dir);

    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let mut rows: Vec<(f64, String, String, f64, f64)> = Vec::new();
    for rec in rdr.records() {
        let r = rec.map_err(err)?;
        if !r[5].is_empty() {
            return Err(format!("row error: {}", &r[5]));
        }
        let num = |i: usize| r[i].parse::<f64>().map_err(err);
        rows.push((num(0)?, r[1].to_string(), r[2].to_string(), num(3)?, num(4)?));
    }
    let pick = |x: f64, name: &str, kind: &str| {
        rows.iter()
            .find(|r| r.0 == x && r.1 == name && r.2 == kind)
            .map(|r| (r.3, r.4))
            .ok_or_else(|| format!("missing row {x} {name} {kind}"))
    };
    let scale = rows.iter().map(|r| r.3.abs().max(r.4.abs())).fold(0.0, f64::max);
    let xs: Vec<f64> = {
        let mut v: Vec<f64> = rows.iter().map(|r| r.0).collect();
        v.dedup();
        v
    };
    let beta = config.beta;
    let m = spin_boson_bath(beta).measure();
    let (mut im_st, mut im_dyn_min, mut diag_red, mut offset) = (0.0f64, f64::INFINITY, 0.0f64, 0.0f64);
    for &x in &xs {
        for kind in ["mf", "st-redfield", "st-cumulant"] {
            im_st = im_st.max(pick(x, "offdiag_im", kind)?.1.abs());
        }
        im_dyn_min = im_dyn_min.min(pick(x, "offdiag_im", "dyn")?.1.abs());
        diag_red = diag_red.max(pick(x, "diag_diff", "st-redfield")?.0.abs());
        let w = x / beta;
        let s_diff = m.lamb_shift(w, &QuadratureConfig::default()).map_err(err)? - m.lamb_shift(-w, &QuadratureConfig::default()).map_err(err)?;
        let expected = -beta * s_diff / 1.0;
        let got = pick(x, "diag_diff", "st-cumulant")?.0 - pick(x, "diag_diff", "mf")?.0;
        offset = offset.max((got - expected).abs());
    }
    let detail = format!(
        "{} rows; mf/st Im offdiag ≤ {:.1e}·scale, min dyn Im {:.2e}; st-redfield diag_diff ≤ {diag_red:.1e}; st-cumulant offset error {offset:.1e}",
        rows.len(),
        im_st / scale,
        im_dyn_min
    );
    require(
        rows.len() == 240 && im_st <= 1e-10 * scale && im_dyn_min > 1e-10 * scale && diag_red == 0.0 && offset <= 1e-6,
        detail,
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("dual-form mean-force coefficients", dual_form),
        ("steady-state off-diagonals equal mean-force and dynamical", steady_state_equals_mean_force),
        ("second-order stationarity residual", second_order_residual),
        ("fourth-order two-level diagonal", fourth_order),
        ("cumulant map is CPTP", cumulant_cptp),
        ("cumulant generator approaches Redfield as λ⁴", cumulant_generator_gap),
        ("exact-bath oracle scales as λ⁴", exact_oracle),
        ("long-time cumulant coherence matches mean-force", coherence_reconciliation),
        ("two-level coefficient table structure", figure_table),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("CRITERION {} {name}: PASS [{secs:.1} s] {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("CRITERION {} {name}: FAIL [{secs:.1} s] {d}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
