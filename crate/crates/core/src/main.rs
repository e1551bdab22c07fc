use std::fs;
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::Rng;

use qmetro_bounds::bounds::forbidden_region;
use qmetro_bounds::kappa::{optimize_kappa, KappaMode, KappaResult};
use qmetro_bounds::lemma::{random_instance, verify_chain, Generated};
use qmetro_bounds::linalg::ComplexMatrix;
use qmetro_bounds::montecarlo::{compliance, simulate, ComplianceVerdict, TrialConfig};
use qmetro_bounds::qstate::{fidelity, joint_fidelity, resource_summary, QuantumState};
use qmetro_bounds::rng::{substream, tags};
use qmetro_bounds::scenario::{build_scenario, ScenarioSpec};
use qmetro_bounds::speed_limit::{qsl_min_separation, AlphaModel, AlphaTable};

#[derive(Parser)]
#[command(
    name = "qmb",
    version,
    about = "precision-bound calculations and verification suites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Unbiased,
    Biased,
}

impl From<ModeArg> for KappaMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Unbiased => KappaMode::Unbiased,
            ModeArg::Biased => KappaMode::Biased,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Optimize the bound prefactor kappa over lambda
    Kappa {
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// CSV table of exact alpha(F) values; default is the beta^2 model
        #[arg(long)]
        alpha_table: Option<PathBuf>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// CSV sweep of both lower bounds over nu, with the crossover nu*
    BoundsPlot {
        #[arg(long)]
        gap: f64,
        #[arg(long)]
        delta_h: f64,
        #[arg(long)]
        nu_max: u32,
        #[arg(long, value_enum, default_value = "unbiased")]
        kappa_mode: ModeArg,
        #[arg(long)]
        alpha_table: Option<PathBuf>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Minimum parameter separation from the quantum speed limit
    Qsl {
        #[arg(long)]
        fidelity: f64,
        #[arg(long)]
        nu: u32,
        #[arg(long)]
        gap: f64,
        #[arg(long)]
        delta_h: f64,
        #[arg(long)]
        alpha_table: Option<PathBuf>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo estimation experiment with a bound-compliance verdict
    Simulate {
        /// Scenario JSON file
        #[arg(long)]
        scenario: PathBuf,
        /// True parameter value
        #[arg(long)]
        x: f64,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 3.0)]
        sigma_slack: f64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Batch verification of the Tchebychev/fidelity lemma chain
    VerifyLemma {
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 4)]
        outcomes: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Cross-check fidelity multiplicativity on random state pairs
    VerifyFidelity {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        nu: u32,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

/// Rounds to 12 significant digits so re-runs give byte-identical output.
fn r12(v: f64) -> f64 {
    format!("{v:.11e}").parse().unwrap()
}

fn fmt12(v: f64) -> String {
    format!("{v:.11e}")
}

fn load_alpha_model(path: &Option<PathBuf>) -> Result<AlphaModel, String> {
    match path {
        None => Ok(AlphaModel::default()),
        Some(p) => {
            let file =
                fs::File::open(p).map_err(|e| format!("cannot open {}: {e}", p.display()))?;
            let table = AlphaTable::from_csv(BufReader::new(file))
                .map_err(|e| format!("bad alpha table {}: {e}", p.display()))?;
            Ok(AlphaModel::LookupTable(table))
        }
    }
}

fn emit(text: &str, output: &Option<PathBuf>) -> Result<(), String> {
    match output {
        None => {
            println!("{text}");
            Ok(())
        }
        Some(p) => fs::write(p, format!("{text}\n"))
            .map_err(|e| format!("cannot write {}: {e}", p.display())),
    }
}

fn csv_header(cmdline: &str, kappa: &KappaResult) -> String {
    format!(
        "# qmb {} | cmd: {} | kappa={} | lambda_star={} | mode={} | alpha_model={}",
        env!("CARGO_PKG_VERSION"),
        cmdline,
        fmt12(kappa.kappa),
        fmt12(kappa.lambda_star),
        kappa.mode,
        kappa.alpha_model_id,
    )
}

fn random_density(dim: usize, rng: &mut impl Rng) -> QuantumState {
    let g = ComplexMatrix::from_entries(
        dim,
        dim,
        (0..dim * dim)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect(),
    );
    let m = g.mul(&g.adjoint());
    let tr = m.trace().re;
    QuantumState::new(m.scale(Complex64::new(1.0 / tr, 0.0))).expect("construction is PSD")
}

fn run(cli: Cli) -> Result<u8, String> {
    match cli.command {
        Command::Kappa {
            mode,
            alpha_table,
            output,
        } => {
            let model = load_alpha_model(&alpha_table)?;
            let result = optimize_kappa(mode.into(), &model).map_err(|e| e.to_string())?;
            let report = serde_json::json!({
                "kappa": r12(result.kappa),
                "lambda_star": r12(result.lambda_star),
                "mode": result.mode,
                "alpha_model": result.alpha_model_id,
            });
            emit(&serde_json::to_string_pretty(&report).unwrap(), &output)?;
            Ok(0)
        }
        Command::BoundsPlot {
            gap,
            delta_h,
            nu_max,
            kappa_mode,
            alpha_table,
            output,
        } => {
            if gap <= 0.0 || delta_h <= 0.0 || nu_max == 0 {
                return Err("gap, delta-h, and nu-max must be positive".into());
            }
            let model = load_alpha_model(&alpha_table)?;
            let kappa = optimize_kappa(kappa_mode.into(), &model).map_err(|e| e.to_string())?;
            let region =
                forbidden_region(1..=nu_max, gap, delta_h, &kappa).map_err(|e| e.to_string())?;
            let cmdline = format!(
                "bounds-plot --gap {gap} --delta-h {delta_h} --nu-max {nu_max} --kappa-mode {}",
                kappa.mode
            );
            let mut lines = vec![
                csv_header(&cmdline, &kappa),
                format!("# nu_star={}", fmt12(region.nu_star)),
                "nu,cr_bound,ev_bound,envelope".to_string(),
            ];
            for r in &region.reports {
                lines.push(format!(
                    "{},{},{},{}",
                    r.nu,
                    fmt12(r.cr_bound),
                    fmt12(r.ev_bound),
                    fmt12(r.envelope)
                ));
            }
            emit(&lines.join("\n"), &output)?;
            Ok(0)
        }
        Command::Qsl {
            fidelity: f,
            nu,
            gap,
            delta_h,
            alpha_table,
            output,
        } => {
            let model = load_alpha_model(&alpha_table)?;
            let sep = qsl_min_separation(f, nu, gap, delta_h, &model).map_err(|e| e.to_string())?;
            let report = serde_json::json!({
                "fidelity": r12(f),
                "nu": nu,
                "gap": r12(gap),
                "delta_h": r12(delta_h),
                "min_separation": r12(sep),
                "alpha_model": model.label(),
            });
            emit(&serde_json::to_string_pretty(&report).unwrap(), &output)?;
            Ok(0)
        }
        Command::Simulate {
            scenario,
            x,
            trials,
            seed,
            sigma_slack,
            output,
        } => {
            let text = fs::read_to_string(&scenario)
                .map_err(|e| format!("cannot read {}: {e}", scenario.display()))?;
            let spec: ScenarioSpec =
                serde_json::from_str(&text).map_err(|e| format!("bad scenario JSON: {e}"))?;
            let strategy = build_scenario(&spec).map_err(|e| e.to_string())?;
            let nu = strategy.nu;
            let resources = resource_summary(
                &strategy.probe,
                &strategy.gen,
                qmetro_bounds::qstate::DEFAULT_SUPPORT_TOL,
            )
            .map_err(|e| e.to_string())?;
            let model = AlphaModel::default();
            let kappa = optimize_kappa(KappaMode::Unbiased, &model).map_err(|e| e.to_string())?;
            let region = forbidden_region(nu..=nu, resources.gap, resources.var_h.sqrt(), &kappa)
                .map_err(|e| e.to_string())?;
            let bound = &region.reports[0];
            let report = simulate(&TrialConfig {
                strategy,
                x_true: x,
                trials,
                seed,
            })
            .map_err(|e| e.to_string())?;
            let verdict = compliance(&report, bound, sigma_slack);
            let out = serde_json::json!({
                "scenario": spec,
                "x_true": r12(x),
                "trials": trials,
                "seed": seed,
                "sigma_slack": r12(sigma_slack),
                "delta_x_hat": r12(report.delta_x_hat),
                "std_error": r12(report.std_error),
                "ev_bound": r12(bound.ev_bound),
                "cr_bound": r12(bound.cr_bound),
                "envelope": r12(bound.envelope),
                "kappa": r12(kappa.kappa),
                "alpha_model": kappa.alpha_model_id,
                "verdict": verdict.to_string(),
            });
            emit(&serde_json::to_string_pretty(&out).unwrap(), &output)?;
            Ok(if verdict == ComplianceVerdict::Violation {
                1
            } else {
                0
            })
        }
        Command::VerifyLemma {
            trials,
            seed,
            dim,
            lambda,
            outcomes,
            output,
        } => {
            if !(2..=8).contains(&dim) || outcomes < 2 || lambda <= 1.0 {
                return Err("need dim in 2..=8, outcomes >= 2, lambda > 1".into());
            }
            let mut accepted = 0u64;
            let mut rejected = 0u64;
            let mut violations = Vec::new();
            for i in 0..trials {
                match random_instance(dim, outcomes, lambda, seed.wrapping_add(i))
                    .map_err(|e| e.to_string())?
                {
                    Generated::Rejected { .. } => rejected += 1,
                    Generated::Instance(inst) => {
                        accepted += 1;
                        let report = verify_chain(&inst).map_err(|e| e.to_string())?;
                        if !report.all_steps_hold {
                            violations.push(serde_json::json!({
                                "instance": i,
                                "margins": report.margins,
                            }));
                        }
                    }
                }
            }
            let ok = violations.is_empty();
            let out = serde_json::json!({
                "trials": trials,
                "dim": dim,
                "outcomes": outcomes,
                "lambda": r12(lambda),
                "seed": seed,
                "accepted": accepted,
                "rejected": rejected,
                "violations": violations,
                "all_hold": ok,
            });
            emit(&serde_json::to_string_pretty(&out).unwrap(), &output)?;
            Ok(if ok { 0 } else { 1 })
        }
        Command::VerifyFidelity {
            dim,
            nu,
            seed,
            trials,
            output,
        } => {
            if dim < 2 || nu == 0 {
                return Err("need dim >= 2 and nu >= 1".into());
            }
            let mut max_mult_err: f64 = 0.0;
            let mut max_kron_err: f64 = 0.0;
            let joint_dim = (dim as u128).checked_pow(nu).unwrap_or(u128::MAX);
            let explicit = joint_dim <= 64;
            for i in 0..trials {
                let mut rng = substream(seed, tags::INSTANCE, i);
                let a = random_density(dim, &mut rng);
                let b = random_density(dim, &mut rng);
                let f1 = fidelity(&a, &b).map_err(|e| e.to_string())?;
                let fj = joint_fidelity(&a, &b, nu).map_err(|e| e.to_string())?;
                max_mult_err = max_mult_err.max((fj - f1.powi(nu as i32)).abs());
                if explicit {
                    let mut ka = a.rho().clone();
                    let mut kb = b.rho().clone();
                    for _ in 1..nu {
                        ka = ka.kron(a.rho());
                        kb = kb.kron(b.rho());
                    }
                    let fa = fidelity(
                        &QuantumState::new(ka).map_err(|e| e.to_string())?,
                        &QuantumState::new(kb).map_err(|e| e.to_string())?,
                    )
                    .map_err(|e| e.to_string())?;
                    max_kron_err = max_kron_err.max((fj - fa).abs());
                }
            }
            let ok = max_mult_err <= 1e-12 && max_kron_err <= 1e-9;
            let out = serde_json::json!({
                "dim": dim,
                "nu": nu,
                "trials": trials,
                "seed": seed,
                "max_multiplicativity_error": r12(max_mult_err),
                "explicit_kron_checked": explicit,
                "max_kron_error": r12(max_kron_err),
                "all_hold": ok,
            });
            emit(&serde_json::to_string_pretty(&out).unwrap(), &output)?;
            Ok(if ok { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
