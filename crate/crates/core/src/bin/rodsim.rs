use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rod_contact::analysis::{average_difference, propulsive_force, window_average};
use rod_contact::config::SimConfig;
use rod_contact::driver::run;
use rod_contact::io::{read_forces, read_trajectory};
use rod_contact::Error;

#[derive(Parser)]
#[command(name = "rodsim", version, about = "Flagella bundling with implicit frictional contact")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation from a TOML config.
    Run {
        config: PathBuf,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        stride: Option<usize>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        num_flagella: Option<usize>,
    },
    /// Normalized average difference between two trajectories.
    Diff {
        traj_a: PathBuf,
        traj_b: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Rod radius h used for normalization [m].
        #[arg(long, default_value_t = 1.0e-3)]
        radius: f64,
    },
    /// Normalized propulsive force from a run directory.
    Propulsion {
        run_dir: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Start of the averaging window [s].
        #[arg(long, default_value_t = 0.0)]
        from: f64,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } => 2,
        Error::Io(_) | Error::MissingForceLog(_) | Error::ShapeMismatch(_) => 4,
        _ => 3,
    }
}

fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<(), Error> {
    let mut text = String::from(header);
    text.push('\n');
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn execute(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Run {
            config,
            duration,
            out_dir,
            stride,
            mu,
            num_flagella,
        } => {
            let mut cfg = SimConfig::load(&config)?;
            if let Some(v) = duration {
                cfg.output.duration = v;
            }
            if let Some(v) = out_dir {
                cfg.output.out_dir = v;
            }
            if let Some(v) = stride {
                cfg.output.stride = v;
            }
            if let Some(v) = mu {
                cfg.friction.mu = v;
            }
            if let Some(v) = num_flagella {
                cfg.scenario.num_flagella = v;
            }
            cfg.validate()?;
            let dir = cfg.output.out_dir.clone();
            let out = run(&cfg, Some(&dir))?;
            let m = &out.metrics;
            println!(
                "steps {} aipts {:.3} atpts {:.2} ms contact steps {} (aipts {:.3}) sim end {:.4} s",
                m.steps, m.aipts, m.atpts_ms, m.contact_steps, m.aipts_contact, m.sim_end_s
            );
            if m.aborted {
                eprintln!("aborted: Newton failed on {} consecutive steps", rod_contact::driver::ABORT_AFTER);
                return Ok(3);
            }
            Ok(0)
        }
        Command::Diff {
            traj_a,
            traj_b,
            output,
            radius,
        } => {
            let a = read_trajectory(&traj_a)?;
            let b = read_trajectory(&traj_b)?;
            let e = average_difference(&a, &b, radius)?;
            write_csv(&output, "time,e_bar", e.iter().map(|(t, v)| format!("{t:.16e},{v:.16e}")))?;
            Ok(0)
        }
        Command::Propulsion { run_dir, output, from } => {
            let cfg = SimConfig::load(&run_dir.join("config.toml"))?;
            let forces = read_forces(&run_dir.join("forces.csv"))?;
            let m = cfg.material_params();
            let series = propulsive_force(&forces, m.bending_stiffness(), m.radius);
            write_csv(
                &output,
                "time,fp,fp_bar",
                series.iter().map(|(t, f, fb)| format!("{t:.16e},{f:.16e},{fb:.16e}")),
            )?;
            match window_average(&series, from) {
                Some(avg) => println!("mean normalized propulsive force {avg:.6e}"),
                None => println!("no records after t = {from}"),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
