//! Command-line front end: single trajectories, Hill actions for stored
//! fields, conservation checks, averaged-coefficient tables, fast-slow
//! versus averaged comparisons, stationary ensembles, and statistical
//! reports. Identical config and seed produce byte-identical CSV outputs.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use kdv_lab::averaging::{
    self, AveragingSystem, ClosedFormAveraged, QuadratureConfig, SystemSpec,
};
use kdv_lab::error::HarnessError;
use kdv_lab::fourier::{fmt_float, SpectralField};
use kdv_lab::harness::{
    energy_balance_csv, energy_balance_report, load_ensemble, persist, run_ensemble,
    theorem_a_report, theorem_b_report, RunConfig,
};
use kdv_lab::kdv::{integrate_path, ObserverConfig, Scheme, SdeStepperConfig};
use kdv_lab::{conserved, hill, stats};

#[derive(Parser)]
#[command(
    name = "kdv-lab",
    version,
    about = "Damped-driven stochastic KdV laboratory: spectral solver, Hill actions, slow-fast averaging"
)]
struct Cli {
    /// JSON run configuration (mirrors the RunConfig structure field for
    /// field); defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one damped-driven trajectory and persist it.
    SimulateKdv {
        /// Damping parameter; defaults to the first ladder value.
        #[arg(long)]
        nu: Option<f64>,
        /// Horizon in original time; defaults to (burn_in + t_slow)/nu.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Band edges, gaps, and both action estimates for a stored field CSV.
    HillActions {
        /// Field CSV (`s,amplitude`); a JSON sidecar `{K, N}` with the same
        /// stem must sit next to it unless --k/--n are given.
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k_spec: Option<usize>,
        #[arg(long)]
        m_trunc: Option<usize>,
    },
    /// Conservation drift report for a stored trajectory CSV.
    VerifyConservation {
        #[arg(long)]
        traj: PathBuf,
    },
    /// Averaged drift/covariance/square-root table for a catalog system.
    AverageSystem {
        /// Catalog name (`rotating-ou`, `twist`) or path to a JSON system
        /// spec.
        #[arg(long)]
        system: String,
        /// Comma-separated action vector.
        #[arg(long)]
        actions: String,
        #[arg(long, default_value_t = 32)]
        nodes: usize,
    },
    /// Fast-slow ensembles across the nu ladder against the averaged
    /// equation, plus the drift-defect table.
    WhithamCompare {
        #[arg(long)]
        system: String,
        /// Trajectories per ladder point; defaults to the config ensemble.
        #[arg(long)]
        ensemble: Option<usize>,
        /// Slow-time horizon.
        #[arg(long, default_value_t = 1.0)]
        t_slow: f64,
        /// Comma-separated initial actions; defaults to all ones.
        #[arg(long)]
        i0: Option<String>,
    },
    /// Run the configured SPDE ladder with burn-in, persist all
    /// trajectories, and emit the stationary energy-balance table.
    StationaryStats,
    /// Statistical reports over a persisted run directory.
    Report {
        #[command(subcommand)]
        kind: ReportKind,
    },
}

#[derive(Subcommand)]
enum ReportKind {
    /// Action-law convergence distances and small-action tables.
    TheoremA {
        /// Persisted run directory; defaults to the configured out_dir.
        #[arg(long)]
        run: Option<PathBuf>,
    },
    /// Angle uniformity and action-angle independence tables.
    TheoremB {
        #[arg(long)]
        run: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, HarnessError> {
    let mut config = match &cli.config {
        Some(path) => serde_json::from_str(&persist::read_string(path)?)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let config = load_config(&cli)?;
    match &cli.command {
        Command::SimulateKdv { nu, t } => simulate_kdv(&config, *nu, *t),
        Command::HillActions {
            field,
            k,
            n,
            k_spec,
            m_trunc,
        } => hill_actions(&config, field, *k, *n, *k_spec, *m_trunc),
        Command::VerifyConservation { traj } => verify_conservation(traj),
        Command::AverageSystem {
            system,
            actions,
            nodes,
        } => average_system(&config, system, actions, *nodes),
        Command::WhithamCompare {
            system,
            ensemble,
            t_slow,
            i0,
        } => whitham_compare(&config, system, *ensemble, *t_slow, i0.as_deref()),
        Command::StationaryStats => stationary_stats(&config),
        Command::Report { kind } => match kind {
            ReportKind::TheoremA { run } => report_theorem_a(&config, run.as_deref()),
            ReportKind::TheoremB { run } => report_theorem_b(&config, run.as_deref()),
        },
    }
}

fn simulate_kdv(config: &RunConfig, nu: Option<f64>, t: Option<f64>) -> Result<(), HarnessError> {
    let nu = nu.unwrap_or(config.nu_ladder[0]);
    let t_final = t.unwrap_or((config.burn_in_slow + config.t_slow) / nu);
    let sde = SdeStepperConfig {
        dt: config.effective_dt(),
        scheme: Scheme::ImexExponential,
        nu,
    };
    let spec = config.noise_spec();
    let u0 = config.initial_field()?;
    let observers = ObserverConfig::with_hill_actions(
        config.n_checkpoints.max(1),
        config.m_obs,
        config.k_spec,
        config.m_trunc,
    );
    let mut rng = ChaCha12Rng::seed_from_u64(config.master_seed);
    let record = integrate_path(&u0, t_final, &sde, &spec, &mut rng, &observers)?;

    let csv_path = config.out_dir.join("trajectory.csv");
    persist::write_string(&csv_path, &record.to_csv())?;
    let sidecar = persist::TrajectorySidecar {
        nu,
        trajectory_index: 0,
        seed_stream: 0,
        master_seed: config.master_seed,
        config_hash: config.config_hash(),
        burn_in_t: 0.0,
        undefined_angles: record.undefined_angles,
        energy_window_mean_norm1_sq: record.energy_window_mean_norm1_sq,
        config: Some({
            // the file's own location is not part of its provenance
            let mut echoed = config.clone();
            echoed.out_dir = PathBuf::new();
            echoed
        }),
        conservation: None,
    };
    persist::write_string(
        &config.out_dir.join("trajectory.json"),
        &serde_json::to_string_pretty(&sidecar)?,
    )?;
    println!(
        "wrote {} ({} observations, nu = {nu}, t = {t_final})",
        csv_path.display(),
        record.t.len()
    );
    Ok(())
}

fn hill_actions(
    config: &RunConfig,
    field_path: &Path,
    k: Option<usize>,
    n: Option<usize>,
    k_spec: Option<usize>,
    m_trunc: Option<usize>,
) -> Result<(), HarnessError> {
    let (k_max, n_grid) = match (k, n) {
        (Some(k), Some(n)) => (k, n),
        _ => {
            let sidecar_path = field_path.with_extension("json");
            let sidecar: serde_json::Value =
                serde_json::from_str(&persist::read_string(&sidecar_path)?)?;
            let get = |key: &str| -> Result<usize, HarnessError> {
                sidecar[key]
                    .as_u64()
                    .map(|v| v as usize)
                    .ok_or_else(|| HarnessError::Parse {
                        path: sidecar_path.display().to_string(),
                        detail: format!("missing integer field `{key}`"),
                    })
            };
            (
                match k {
                    Some(k) => k,
                    None => get("K")?,
                },
                match n {
                    Some(n) => n,
                    None => get("N")?,
                },
            )
        }
    };
    let field = SpectralField::from_csv(&persist::read_string(field_path)?, k_max, n_grid)?;
    let k_spec = k_spec.unwrap_or(config.k_spec);
    let m_trunc = m_trunc.unwrap_or(config.m_trunc).max(4 * k_spec);

    let spectrum = hill::band_edges(&field, k_spec, m_trunc)?;
    let gap_actions = hill::actions_from_gaps(&spectrum);
    let m_lin = k_spec.min(field.k_max());
    let lin_actions = hill::linearized_actions(&field, m_lin)?;
    let angles = hill::linearized_angles(&field, m_lin, hill::DEFAULT_ANGLE_FLOOR)?;

    let mut out = String::from("k,lambda_lo,lambda_hi,gap,action_gap,action_lin,angle\n");
    for idx in 0..k_spec {
        let angle = if idx < m_lin && angles.angle_defined[idx] {
            angles.angles[idx]
        } else {
            f64::NAN
        };
        let action_lin = if idx < m_lin {
            lin_actions.actions[idx]
        } else {
            f64::NAN
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            idx + 1,
            fmt_float(spectrum.edges[2 * idx + 1]),
            fmt_float(spectrum.edges[2 * idx + 2]),
            fmt_float(spectrum.gaps[idx]),
            fmt_float(gap_actions.actions[idx]),
            fmt_float(action_lin),
            fmt_float(angle),
        ));
    }
    let out_path = config.out_dir.join("hill_actions.csv");
    persist::write_string(&out_path, &out)?;
    println!("wrote {}", out_path.display());
    print!("{out}");
    Ok(())
}

fn verify_conservation(traj_path: &Path) -> Result<(), HarnessError> {
    use kdv_lab::conserved::{ConservationReport, FunctionalDrift};
    let table = persist::ObservationTable::from_csv(
        &persist::read_string(traj_path)?,
        &traj_path.display().to_string(),
    )?;
    let series: [(&str, &Vec<f64>); 3] = [("J0", &table.j0), ("J1", &table.j1), ("J2", &table.j2)];
    let drifts = series
        .iter()
        .map(|(name, values)| {
            let j_init = values.first().copied().unwrap_or(0.0);
            let denom = j_init.abs().max(1e-300);
            let mut max_drift = 0.0;
            let mut at_time = table.t.first().copied().unwrap_or(0.0);
            for (i, &v) in values.iter().enumerate() {
                let d = (v - j_init).abs() / denom;
                if d > max_drift {
                    max_drift = d;
                    at_time = table.t[i];
                }
            }
            FunctionalDrift {
                name: (*name).to_string(),
                max_relative_drift: max_drift,
                at_time,
            }
        })
        .collect();
    let report = ConservationReport { drifts };
    for drift in &report.drifts {
        println!(
            "{}: max relative drift {} at t = {}",
            drift.name,
            fmt_float(drift.max_relative_drift),
            fmt_float(drift.at_time)
        );
    }
    let sidecar_path = traj_path.with_extension("json");
    if sidecar_path.exists() {
        let mut sidecar: persist::TrajectorySidecar =
            serde_json::from_str(&persist::read_string(&sidecar_path)?)?;
        sidecar.conservation = Some(report);
        persist::write_string(&sidecar_path, &serde_json::to_string_pretty(&sidecar)?)?;
        println!("appended conservation report to {}", sidecar_path.display());
    }
    Ok(())
}

fn resolve_system(name_or_path: &str) -> Result<Box<dyn AveragingSystem>, HarnessError> {
    if let Some(spec) = SystemSpec::by_name(name_or_path) {
        return Ok(spec.build()?);
    }
    let path = Path::new(name_or_path);
    if path.exists() {
        let spec: SystemSpec = serde_json::from_str(&persist::read_string(path)?)?;
        return Ok(spec.build()?);
    }
    Err(HarnessError::InvalidConfig(format!(
        "unknown system `{name_or_path}` (catalog: rotating-ou, twist; or a JSON spec path)"
    )))
}

fn parse_vector(text: &str) -> Result<Vec<f64>, HarnessError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| HarnessError::InvalidConfig(format!("bad number `{s}`: {e}")))
        })
        .collect()
}

fn average_system(
    config: &RunConfig,
    system: &str,
    actions_text: &str,
    nodes: usize,
) -> Result<(), HarnessError> {
    let sys = resolve_system(system)?;
    let actions = parse_vector(actions_text)?;
    let quad = QuadratureConfig {
        nodes_per_angle: nodes,
        ..QuadratureConfig::default()
    };
    let coeffs = averaging::averaged_coefficients(sys.as_ref(), &actions, &quad)?;
    let m = actions.len();
    let mut header = Vec::new();
    for k in 1..=m {
        header.push(format!("I_{k}"));
    }
    for k in 1..=m {
        header.push(format!("avgF_{k}"));
    }
    for i in 1..=m {
        for j in 1..=m {
            header.push(format!("avgA_{i}{j}"));
        }
    }
    for i in 1..=m {
        for j in 1..=m {
            header.push(format!("sigma0_{i}{j}"));
        }
    }
    let mut row = Vec::new();
    row.extend(actions.iter().map(|v| fmt_float(*v)));
    row.extend(coeffs.drift.iter().map(|v| fmt_float(*v)));
    for i in 0..m {
        for j in 0..m {
            row.push(fmt_float(coeffs.covariance[(i, j)]));
        }
    }
    for i in 0..m {
        for j in 0..m {
            row.push(fmt_float(coeffs.sqrt_covariance[(i, j)]));
        }
    }
    let out = format!("{}\n{}\n", header.join(","), row.join(","));
    let out_path = config.out_dir.join("averaged_coefficients.csv");
    persist::write_string(&out_path, &out)?;
    println!("wrote {}", out_path.display());
    print!("{out}");
    Ok(())
}

fn whitham_compare(
    config: &RunConfig,
    system: &str,
    ensemble: Option<usize>,
    t_slow: f64,
    i0_text: Option<&str>,
) -> Result<(), HarnessError> {
    let sys = resolve_system(system)?;
    let m = sys.slow_dim();
    let ensemble = ensemble.unwrap_or(config.ensemble).max(2);
    let i0 = match i0_text {
        Some(text) => {
            let v = parse_vector(text)?;
            if v.len() != m {
                return Err(HarnessError::InvalidConfig(format!(
                    "i0 has {} entries, system has {m} slow modes",
                    v.len()
                )));
            }
            v
        }
        None => vec![1.0; m],
    };
    let phi0 = vec![0.0; m];
    let quad = QuadratureConfig::default();

    let mut defect_csv = String::from("nu,component,defect,std_error\n");
    let mut dist_csv = String::from("nu,mode,ks_vs_whitham,critical_1pct\n");

    let coeffs = ClosedFormAveraged::new(sys.as_ref());
    for (nu_idx, &nu) in config.nu_ladder.iter().enumerate() {
        let dt = nu / 20.0;
        let paths: Vec<_> = (0..ensemble)
            .into_par_iter()
            .map(|traj| {
                let mut rng = ChaCha12Rng::seed_from_u64(config.master_seed);
                rng.set_stream(((nu_idx as u64) << 32) | traj as u64);
                averaging::simulate_fast_slow(
                    sys.as_ref(),
                    nu,
                    &i0,
                    &phi0,
                    t_slow,
                    dt,
                    &mut rng,
                    1,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;

        let defect = averaging::khasminskii_defect(&paths, sys.as_ref(), &quad);
        for k in 0..m {
            defect_csv.push_str(&format!(
                "{},{},{},{}\n",
                fmt_float(nu),
                k + 1,
                fmt_float(defect.per_component[k]),
                fmt_float(defect.std_error[k]),
            ));
        }

        if let Some(provider) = &coeffs {
            let whitham_dt = config.nu_ladder.last().copied().unwrap_or(nu) / 20.0;
            let whitham_finals: Vec<Vec<f64>> = (0..ensemble)
                .into_par_iter()
                .map(|traj| {
                    let mut rng = ChaCha12Rng::seed_from_u64(config.master_seed);
                    rng.set_stream((1u64 << 48) | ((nu_idx as u64) << 32) | traj as u64);
                    averaging::simulate_whitham(
                        provider,
                        &i0,
                        t_slow,
                        whitham_dt,
                        &mut rng,
                        usize::MAX,
                    )
                    .map(|p| p.final_actions().to_vec())
                })
                .collect::<Result<Vec<_>, _>>()?;
            let fast_finals: Vec<Vec<f64>> =
                paths.iter().map(|p| p.final_actions().to_vec()).collect();
            for mode in 0..m {
                let a: Vec<f64> = fast_finals.iter().map(|v| v[mode]).collect();
                let b: Vec<f64> = whitham_finals.iter().map(|v| v[mode]).collect();
                let ks = stats::ks_two_sample(&a, &b)?;
                dist_csv.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt_float(nu),
                    mode + 1,
                    fmt_float(ks),
                    fmt_float(stats::ks_two_sample_critical(a.len(), b.len(), 0.01)),
                ));
            }
        }
    }

    let defect_path = config.out_dir.join("defect.csv");
    persist::write_string(&defect_path, &defect_csv)?;
    let dist_path = config.out_dir.join("whitham_distance.csv");
    persist::write_string(&dist_path, &dist_csv)?;
    println!("wrote {}", defect_path.display());
    println!("wrote {}", dist_path.display());
    print!("{defect_csv}");
    Ok(())
}

fn stationary_stats(config: &RunConfig) -> Result<(), HarnessError> {
    let record = run_ensemble(config)?;
    let rows = energy_balance_report(&record);
    let csv = energy_balance_csv(&rows);
    let out_path = config.out_dir.join("energy_balance.csv");
    persist::write_string(&out_path, &csv)?;
    println!("wrote {}", out_path.display());
    print!("{csv}");
    let spec = config.noise_spec();
    println!(
        "B_0 = {} over the truncated range",
        fmt_float(conserved::noise_constant(&spec, 0))
    );
    Ok(())
}

fn report_theorem_a(config: &RunConfig, run: Option<&Path>) -> Result<(), HarnessError> {
    let run_dir = run.unwrap_or(&config.out_dir);
    let record = load_ensemble(run_dir)?;
    let report = theorem_a_report(&record)?;
    let d_path = run_dir.join("theorem_a_distances.csv");
    persist::write_string(&d_path, &report.distances_csv())?;
    let s_path = run_dir.join("theorem_a_small_action.csv");
    persist::write_string(&s_path, &report.small_action_csv())?;
    println!("wrote {}", d_path.display());
    println!("wrote {}", s_path.display());
    print!("{}", report.distances_csv());
    Ok(())
}

fn report_theorem_b(config: &RunConfig, run: Option<&Path>) -> Result<(), HarnessError> {
    let run_dir = run.unwrap_or(&config.out_dir);
    let record = load_ensemble(run_dir)?;
    let report = theorem_b_report(&record)?;
    let u_path = run_dir.join("theorem_b_uniformity.csv");
    persist::write_string(&u_path, &report.uniformity_csv())?;
    let i_path = run_dir.join("theorem_b_independence.csv");
    persist::write_string(&i_path, &report.independence_csv())?;
    println!("wrote {}", u_path.display());
    println!("wrote {}", i_path.display());
    print!("{}", report.uniformity_csv());
    Ok(())
}
