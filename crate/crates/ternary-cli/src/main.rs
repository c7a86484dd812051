use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ternary::energy::{calibrate_sigma, InteractionMatrix, SurfaceTensions, TripleWell};
use ternary::experiment::{self, ExperimentSpec};
use ternary::sharp::{self, MassPair};
use ternary::{coreshell, io, lattice, morphology};

#[derive(Parser)]
#[command(name = "ternary", about = "Ternary nonlocal phase-field experiments and sharp-interface theory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Make energy increases fatal.
    #[arg(long)]
    strict: bool,
    /// Grid resolution.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the gradient flow for a preset or config and analyze the result.
    Simulate {
        /// Preset name (ignored when --config is given).
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Side of the random initial blocks, in grid cells.
        #[arg(long)]
        block: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Morphology report for a snapshot file.
    Analyze {
        snapshot: PathBuf,
        #[arg(long, default_value_t = experiment::PRESET_EPSILON)]
        epsilon: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Optimal droplet splits in the first sharp limit, one CSV row per mass pair.
    Sharp {
        #[command(flatten)]
        model: SharpModel,
        /// Also list critical masses of the two-droplet coexistence problem.
        #[arg(long)]
        critical: bool,
    },
    /// Second-order self-energy and core placement, one CSV row per mass pair.
    Coreshell {
        #[command(flatten)]
        model: SharpModel,
    },
    /// Relax droplet positions and dump the configuration as JSON.
    Lattice {
        /// Number of equal droplets.
        #[arg(long, default_value_t = 7)]
        count: usize,
        /// Per-droplet masses.
        #[arg(long, default_value_t = 0.01)]
        m1: f64,
        #[arg(long, default_value_t = 0.005)]
        m2: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 1.0])]
        sigma: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [300.0, 0.0, 900.0])]
        gamma: Vec<f64>,
        /// Scales at which to report the bridging energy.
        #[arg(long, value_delimiter = ',')]
        eta: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Surface tensions induced by the well for the given target tensions.
    Calibrate {
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1.0, 1.0])]
        sigma: Vec<f64>,
    },
    /// Print a preset as TOML, or list presets.
    Preset {
        name: Option<String>,
    },
    /// Run one experiment per value of a parameter.
    Sweep {
        #[arg(long)]
        preset: Option<String>,
        /// Parameter path such as sigma.s02 or seed.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone)]
struct SharpModel {
    /// Total species-1 masses, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    m1: Vec<f64>,
    /// Total species-2 masses, paired with --m1 by position.
    #[arg(long, value_delimiter = ',', required = true)]
    m2: Vec<f64>,
    /// s01,s02,s12
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 1.0])]
    sigma: Vec<f64>,
    /// Rescaled interaction G11,G12,G22.
    #[arg(long, value_delimiter = ',', default_values_t = [300.0, 0.0, 900.0])]
    gamma: Vec<f64>,
}

fn triple(v: &[f64], what: &str) -> Result<[f64; 3]> {
    match v {
        [a, b, c] => Ok([*a, *b, *c]),
        _ => bail!("--{what} takes three comma-separated values, got {}", v.len()),
    }
}

fn tensions(v: &[f64]) -> Result<SurfaceTensions> {
    let [a, b, c] = triple(v, "sigma")?;
    Ok(SurfaceTensions::new(a, b, c)?)
}

fn interaction(v: &[f64]) -> Result<InteractionMatrix> {
    let [a, b, c] = triple(v, "gamma")?;
    Ok(InteractionMatrix::new(a, b, c)?)
}

fn mass_pairs(m: &SharpModel) -> Result<Vec<(f64, f64)>> {
    if m.m1.len() != m.m2.len() {
        bail!("--m1 and --m2 need the same number of values");
    }
    Ok(m.m1.iter().copied().zip(m.m2.iter().copied()).collect())
}

fn load_spec(preset: Option<&str>, common: &Common) -> Result<ExperimentSpec> {
    let mut spec = match (&common.config, preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            experiment::spec_from_toml(&text)?
        }
        (None, Some(p)) => experiment::preset(p)?,
        (None, None) => bail!("give --preset or --config"),
    };
    if let Some(s) = common.seed {
        spec.flow.seed = s;
    }
    if let Some(n) = common.grid {
        spec.n = n;
    }
    if let Some(k) = common.steps {
        spec.flow.max_steps = k;
    }
    if common.strict {
        spec.flow.strict = true;
        spec.checks.strict_energy = true;
    }
    Ok(spec)
}

fn print_outcome(o: &experiment::ExperimentOutcome) {
    let last = o.run.energies.last().expect("initial record");
    println!(
        "{}: {} after {} steps ({:.1} s), energy {:.6e}, {} components",
        o.name,
        o.run.reason.as_str(),
        last.step,
        o.run.wall_seconds,
        last.total,
        o.morphology.components.len()
    );
    for c in &o.morphology.components {
        println!(
            "  {:<24} masses ({:.4}, {:.4}) lengths ({:.3}, {:.3}, {:.3}) offset {:?} junctions {}",
            c.tag.name(),
            c.masses[0],
            c.masses[1],
            c.lengths[0],
            c.lengths[1],
            c.lengths[2],
            c.offset_ratio.map(|r| (r * 100.0).round() / 100.0),
            c.junctions.len()
        );
        for j in &c.junctions {
            println!("    angles {:.1} {:.1} {:.1}", j[0].to_degrees(), j[1].to_degrees(), j[2].to_degrees());
        }
    }
    for a in &o.assertions {
        println!("  [{}] {}: {}", if a.passed { "pass" } else { "FAIL" }, a.name, a.detail);
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate {
            preset,
            dt,
            epsilon,
            block,
            common,
        } => {
            let mut spec = load_spec(preset.as_deref(), &common)?;
            if let Some(dt) = dt {
                spec.flow.dt = dt;
            }
            if let Some(e) = epsilon {
                spec.params.epsilon = e;
            }
            if let Some(b) = block {
                spec.init = ternary::flow::InitMode::Blocks { block: b };
            }
            let o = experiment::run_experiment(&spec, common.out.as_deref())?;
            print_outcome(&o);
            Ok(o.passed)
        }
        Command::Analyze {
            snapshot,
            epsilon,
            common,
        } => {
            let u = io::read_density(&snapshot)?;
            let rep = morphology::analyze(&u, epsilon, &morphology::ClassifyThresholds::default());
            let json = serde_json::to_string_pretty(&rep)?;
            write_or_print(common.out.as_deref(), "morphology.json", &json)?;
            Ok(true)
        }
        Command::Sharp { model, critical } => {
            let (s, g) = (tensions(&model.sigma)?, interaction(&model.gamma)?);
            println!("{}", sharp::EBAR_CSV_HEADER);
            for (a, b) in mass_pairs(&model)? {
                let r = sharp::ebar0(a, b, &s, &g)?;
                println!("{}", sharp::ebar0_csv_row([a, b], &s, &g, &r));
            }
            if critical {
                for (a, b) in mass_pairs(&model)? {
                    let c = sharp::coexistence_critical_masses(a, b, &s, &g)?;
                    println!("# critical M=({a},{b}) f1 {:?} f2 {:?}", c.f1_roots, c.f2_roots);
                }
            }
            Ok(true)
        }
        Command::Coreshell { model } => {
            let (s, g) = (tensions(&model.sigma)?, interaction(&model.gamma)?);
            println!("{}", coreshell::F0_CSV_HEADER);
            for (a, b) in mass_pairs(&model)? {
                let m = MassPair::new(a, b)?;
                println!("{}", coreshell::f0_csv_row(m, &g, &coreshell::f0(m, &s, &g)?));
            }
            Ok(true)
        }
        Command::Lattice {
            count,
            m1,
            m2,
            sigma,
            gamma,
            eta,
            common,
        } => {
            let (s, g) = (tensions(&sigma)?, interaction(&gamma)?);
            let m = MassPair::new(m1, m2)?;
            let c = lattice::DropletConfig::random_equal(count, m, common.seed.unwrap_or(0), &s, &g)?;
            let rate = lattice::default_rate(&c);
            let (c, report) = lattice::optimize_positions(&c, &g, common.steps.unwrap_or(20_000), rate)?;
            let ebar: f64 = c.droplets.iter().map(|d| sharp::e0(d.mass, &s, &g)).sum::<Result<f64, _>>()?;
            let scales = eta
                .iter()
                .map(|&e| lattice::sharp_e_eta_and_remainder(&c, e, &s, &g, ebar).map(|r| (e, r)))
                .collect::<Result<Vec<_>, _>>()?;
            let json = serde_json::json!({
                "configuration": lattice::dump(&c, &s, &g)?,
                "descent": report,
                "scales": scales.iter().map(|(e, r)| serde_json::json!({"eta": e, "energy": r})).collect::<Vec<_>>(),
            });
            write_or_print(common.out.as_deref(), "lattice.json", &serde_json::to_string_pretty(&json)?)?;
            Ok(true)
        }
        Command::Calibrate { sigma } => {
            let target = tensions(&sigma)?;
            let got = calibrate_sigma(&TripleWell::for_tensions(&target))?;
            println!("pair,target,calibrated,relative_error");
            for (name, a, b) in [("s01", target.s01, got.s01), ("s02", target.s02, got.s02), ("s12", target.s12, got.s12)] {
                println!("{name},{a},{b:.6},{:.3e}", (b - a) / a);
            }
            Ok(got.satisfies_triangle(1e-12))
        }
        Command::Preset { name } => {
            match name {
                Some(n) => println!("{}", experiment::spec_to_toml(&experiment::preset(&n)?)?),
                None => experiment::PRESETS.iter().for_each(|p| println!("{p}")),
            }
            Ok(true)
        }
        Command::Sweep {
            preset,
            param,
            values,
            common,
        } => {
            let spec = load_spec(preset.as_deref(), &common)?;
            let rows = experiment::sweep(&spec, &param, &values, common.out.as_deref())?;
            print!("{}", experiment::sweep_csv(&param, &rows));
            Ok(rows.iter().all(|r| r.passed))
        }
    }
}

fn write_or_print(out: Option<&Path>, file: &str, text: &str) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(file), text)?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    if let Some(t) = experiment::thread_cap() {
        // Ignored if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
