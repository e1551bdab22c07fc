//! Acceptance suite: one test per criterion, each printing a pass line
//! (visible with --nocapture) and failing loudly otherwise.

use rand::Rng;

use qmetro_bounds::bounds::{accuracy_profile_analysis, forbidden_region, AccuracyProfile};
use qmetro_bounds::estimation::{
    rmse_report, Distribution, Estimator, EstimatorMap, Povm, PovmScope, Strategy,
};
use qmetro_bounds::kappa::{cr_prefactor_sup, optimize_kappa, KappaMode};
use qmetro_bounds::lemma::{random_instance, verify_chain, Generated};
use qmetro_bounds::linalg::ComplexMatrix;
use qmetro_bounds::montecarlo::{compliance, simulate, ComplianceVerdict, TrialConfig};
use qmetro_bounds::qstate::{evolve, fidelity, joint_fidelity, Generator, QuantumState};
use qmetro_bounds::rng::{substream, tags};
use qmetro_bounds::speed_limit::{qsl_min_separation, AlphaModel};

use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, TAU};

fn qubit_strategy(nu: u32) -> Strategy {
    let probe = QuantumState::two_level_superposition(2, 0, 1).unwrap();
    let gen = Generator::new(ComplexMatrix::from_real(2, 2, &[0.0, 0.0, 0.0, 1.0])).unwrap();
    let s = FRAC_1_SQRT_2;
    let plus = vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)];
    let minus = vec![Complex64::new(s, 0.0), Complex64::new(-s, 0.0)];
    let povm = Povm::projective(&[plus, minus], vec!["plus".into(), "minus".into()]).unwrap();
    Strategy::new(
        probe,
        gen,
        povm,
        Estimator::CountInversion {
            outcome: 0,
            frequency: 1.0,
        },
        nu,
        PovmScope::PerCopyProduct,
    )
    .unwrap()
}

#[test]
fn criterion_1_kappa_optimization() {
    let start = std::time::Instant::now();
    let m = AlphaModel::default();
    let unb = optimize_kappa(KappaMode::Unbiased, &m).unwrap();
    assert!(
        (unb.kappa - 0.0875).abs() <= 0.0005,
        "kappa = {}",
        unb.kappa
    );
    assert!(
        (unb.lambda_star - 4.22).abs() <= 0.05,
        "lambda* = {}",
        unb.lambda_star
    );
    let bia = optimize_kappa(KappaMode::Biased, &m).unwrap();
    assert!(
        (bia.kappa - 0.0715).abs() <= 0.0005,
        "kappa = {}",
        bia.kappa
    );
    assert!(
        (bia.lambda_star - 4.7).abs() <= 0.1,
        "lambda* = {}",
        bia.lambda_star
    );
    assert!(start.elapsed().as_secs_f64() < 1.0);
    println!("criterion 1 (kappa optimization): PASS");
}

#[test]
fn criterion_2_cramer_rao_prefactor() {
    let start = std::time::Instant::now();
    let (sup, _) = cr_prefactor_sup();
    assert!(sup < 1.0);
    assert!((sup - 0.1404).abs() <= 0.0005, "sup = {sup}");
    assert!(start.elapsed().as_secs_f64() < 1.0);
    println!("criterion 2 (Cramer-Rao prefactor below one): PASS");
}

#[test]
fn criterion_3_bound_crossover() {
    let start = std::time::Instant::now();
    let k = optimize_kappa(KappaMode::Unbiased, &AlphaModel::default()).unwrap();
    let fr = forbidden_region(1..=50, 0.1, 4.0, &k).unwrap();
    let closed_form = (k.kappa * 4.0 / 0.1).powi(2);
    assert!((fr.nu_star - closed_form).abs() <= 1e-9);
    assert!((fr.nu_star - 12.25).abs() <= 0.01, "nu* = {}", fr.nu_star);
    for r in &fr.reports {
        if (r.nu as f64) < fr.nu_star {
            assert!(r.ev_bound > r.cr_bound, "nu = {}", r.nu);
        } else {
            assert!(r.cr_bound >= r.ev_bound, "nu = {}", r.nu);
        }
    }
    assert!(start.elapsed().as_secs_f64() < 1.0);
    println!("criterion 3 (figure-1 crossover nu* = 12.25): PASS");
}

#[test]
fn criterion_4_lemma_suite() {
    let start = std::time::Instant::now();
    let total = 10_000u64;
    let mut accepted = 0u64;
    for i in 0..total {
        let mut meta = substream(0xacce_97ed, tags::INSTANCE, i);
        let dim = meta.gen_range(2..=4usize);
        let outcomes = meta.gen_range(2..=8usize);
        let lambda = 1.1 + meta.gen::<f64>() * 8.9;
        match random_instance(dim, outcomes, lambda, i).unwrap() {
            Generated::Rejected { .. } => continue,
            Generated::Instance(inst) => {
                accepted += 1;
                let report = verify_chain(&inst)
                    .unwrap_or_else(|e| panic!("instance {i}: precondition lost: {e}"));
                assert!(
                    report.all_steps_hold,
                    "instance {i} (dim {dim}, {outcomes} outcomes, lambda {lambda}): {:#?}",
                    report.margins
                );
                let inv_l2 = 1.0 / (lambda * lambda);
                assert!(report.inlier_mass_x <= inv_l2 + 1e-9);
                assert!(report.outlier_mass_xp <= inv_l2 + 1e-9);
                assert!(report.classical_fidelity_bound <= 4.0 * inv_l2 + 1e-9);
                let fq = report.quantum_fidelity.expect("states attached");
                assert!(fq <= report.classical_fidelity_bound + 1e-9);
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(accepted >= 1000, "only {accepted} instances accepted");
    assert!(elapsed < 60.0, "took {elapsed:.1}s");
    println!(
        "criterion 4 (lemma chain, {accepted}/{total} accepted, zero violations, {elapsed:.1}s): PASS"
    );
}

#[test]
fn criterion_5_fidelity_multiplicativity() {
    let start = std::time::Instant::now();
    for i in 0..1000u64 {
        let mut rng = substream(0xf1de, tags::INSTANCE, i);
        let mut random_density = |dim: usize| {
            let g = ComplexMatrix::from_entries(
                dim,
                dim,
                (0..dim * dim)
                    .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                    .collect(),
            );
            let m = g.mul(&g.adjoint());
            let tr = m.trace().re;
            QuantumState::new(m.scale(Complex64::new(1.0 / tr, 0.0))).unwrap()
        };
        let a = random_density(2);
        let b = random_density(2);
        let fj = joint_fidelity(&a, &b, 2).unwrap();
        let explicit = fidelity(
            &QuantumState::new(a.rho().kron(a.rho())).unwrap(),
            &QuantumState::new(b.rho().kron(b.rho())).unwrap(),
        )
        .unwrap();
        assert!(
            (fj - explicit).abs() <= 1e-9,
            "pair {i}: {fj} vs explicit {explicit}"
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "took {elapsed:.1}s");
    println!("criterion 5 (joint fidelity vs explicit Kronecker): PASS");
}

#[test]
fn criterion_6_qubit_speed_limit() {
    let start = std::time::Instant::now();
    let probe = QuantumState::two_level_superposition(2, 0, 1).unwrap();
    let gen = Generator::new(ComplexMatrix::from_real(2, 2, &[0.0, 0.0, 0.0, 1.0])).unwrap();
    let model = AlphaModel::default();
    let (gap, delta_h) = (0.5, 0.5);
    for nu in [1u32, 2, 4, 8] {
        for k in 1..=100 {
            let t = TAU * k as f64 / 100.0;
            let moved = evolve(&probe, &gen, t).unwrap();
            let f = joint_fidelity(&probe, &moved, nu).unwrap();
            let min_sep = qsl_min_separation(f, nu, gap, delta_h, &model).unwrap();
            assert!(
                min_sep <= t + 1e-6,
                "nu = {nu}, t = {t}: bound {min_sep} exceeds separation"
            );
        }
    }
    assert!(start.elapsed().as_secs_f64() < 5.0);
    println!("criterion 6 (qubit speed-limit grid, zero violations): PASS");
}

#[test]
fn criterion_7_monte_carlo_compliance() {
    let start = std::time::Instant::now();
    let kappa = optimize_kappa(KappaMode::Unbiased, &AlphaModel::default()).unwrap();
    let mut scaled_at_100 = 0.0;
    for nu in 1..=100u32 {
        let strategy = qubit_strategy(nu);
        let report = simulate(&TrialConfig {
            strategy,
            x_true: FRAC_PI_2,
            trials: 10_000,
            seed: 0x51bb + nu as u64,
        })
        .unwrap();
        // gap = <H> - E0 = 0.5, so ev_bound = 2*kappa/nu
        let region = forbidden_region(nu..=nu, 0.5, 0.5, &kappa).unwrap();
        let verdict = compliance(&report, &region.reports[0], 3.0);
        assert_ne!(verdict, ComplianceVerdict::Violation, "nu = {nu}");
        assert!((region.reports[0].ev_bound - 2.0 * kappa.kappa / nu as f64).abs() <= 1e-12);
        if nu == 100 {
            scaled_at_100 = (nu as f64).sqrt() * report.delta_x_hat;
        }
    }
    assert!(
        (0.9..=1.1).contains(&scaled_at_100),
        "sqrt(nu)*rmse = {scaled_at_100}"
    );
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 300.0, "took {elapsed:.1}s");
    println!("criterion 7 (Monte Carlo sweep nu = 1..100, zero violations, {elapsed:.1}s): PASS");
}

#[test]
fn criterion_8_superlinear_exclusion() {
    let k = optimize_kappa(KappaMode::Unbiased, &AlphaModel::default()).unwrap();
    let linear = AccuracyProfile::PowerLaw {
        coefficient: 1.0,
        gamma: 1.0,
    };
    assert!(accuracy_profile_analysis(&linear, 1.0, 1.0, 1..=500, &k)
        .unwrap()
        .is_empty());
    let superlinear = AccuracyProfile::PowerLaw {
        coefficient: 1.0,
        gamma: 1.5,
    };
    let flagged = accuracy_profile_analysis(&superlinear, 1.0, 1.0, 1..=200, &k).unwrap();
    assert_eq!(flagged.first().copied(), Some(131));
    assert!(flagged.windows(2).all(|w| w[1] == w[0] + 1));
    println!("criterion 8 (superlinear scaling excluded from nu = 131): PASS");
}

#[test]
fn criterion_9_rmse_identity() {
    let start = std::time::Instant::now();
    for i in 0..10_000u64 {
        let mut rng = substream(0x8a5e, tags::INSTANCE, i);
        let n = rng.gen_range(2..=8usize);
        let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-6).collect();
        let total: f64 = raw.iter().sum();
        let labels: Vec<String> = (0..n).map(|j| format!("o{j}")).collect();
        let dist =
            Distribution::new(labels.clone(), raw.iter().map(|r| r / total).collect()).unwrap();
        let est = EstimatorMap::from_pairs(
            labels
                .into_iter()
                .map(|l| (l, (rng.gen::<f64>() - 0.5) * 2.0 * PI)),
        );
        let x_true = (rng.gen::<f64>() - 0.5) * 2.0 * PI;
        let r = rmse_report(&dist, &est, x_true).unwrap();
        let lhs = r.delta_x * r.delta_x;
        let rhs = r.small_delta_x * r.small_delta_x + r.bias * r.bias;
        assert!((lhs - rhs).abs() <= 1e-12, "pair {i}: {lhs} vs {rhs}");
    }
    assert!(start.elapsed().as_secs_f64() < 30.0);
    println!("criterion 9 (RMSE decomposition identity): PASS");
}
