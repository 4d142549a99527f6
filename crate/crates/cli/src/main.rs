use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use xthm::benchmarks::{run_benchmark, NAMES};
use xthm::config::{dump_config, field_by_name, load_config, RunConfig};
use xthm::error::Error;
use xthm::mesh::build_structured_grid;
use xthm::output::{Probe, ProbeCsv, SifCsv};
use xthm::runner::{run, RunOptions};

#[derive(Parser)]
#[command(name = "xthm", version, about = "2D XFEM thermo-hydro-mechanical solver")]
#[command(after_help = "Exit codes: 0 success, 1 solver failure, 2 configuration error, 3 benchmark FAIL.")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a configuration file, writing probes, SIFs, VTK and the convergence log.
    Run {
        config: PathBuf,
        /// Output directory (overrides output.dir).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run a canned benchmark (or "all") and print PASS/FAIL per metric.
    Benchmark {
        /// Benchmark name; omit to list the available ones.
        name: Option<String>,
        /// Directory for benchmark outputs (one subdirectory per benchmark).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run a configuration and print field values at points as CSV.
    Probe {
        config: PathBuf,
        /// Point "x,y" in metres; repeatable.
        #[arg(long = "at", required = true, value_parser = parse_point)]
        at: Vec<[f64; 2]>,
        /// Comma separated fields (ux, uy, p, T).
        #[arg(long, default_value = "ux,uy,p,T", value_delimiter = ',')]
        fields: Vec<String>,
        /// Write to a file instead of stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run a configuration and print stress intensity factors of every active tip as CSV.
    Sif {
        config: PathBuf,
        /// Reference temperature difference for the normalized F_I column.
        #[arg(long)]
        theta0: Option<f64>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Write a mesh in the native text format, from a configuration or a structured grid.
    MeshGen {
        /// Configuration whose [mesh] section is built.
        #[arg(long, conflicts_with_all = ["nx", "ny", "width", "height"])]
        config: Option<PathBuf>,
        #[arg(long, requires_all = ["ny", "width", "height"])]
        nx: Option<usize>,
        #[arg(long)]
        ny: Option<usize>,
        #[arg(long)]
        width: Option<f64>,
        #[arg(long)]
        height: Option<f64>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Parse and check a configuration without solving.
    ValidateConfig {
        config: PathBuf,
        /// Print the normalized configuration (SI units).
        #[arg(long)]
        dump: bool,
    },
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let v: Vec<&str> = s.split(',').collect();
    if v.len() != 2 {
        return Err(format!("expected x,y, got '{s}'"));
    }
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}"));
    Ok([num(v[0])?, num(v[1])?])
}

/// Failure with its exit code.
struct Fail(u8, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        let code = if matches!(e, Error::Config(_)) { 2 } else { 1 };
        Fail(code, e.to_string())
    }
}

fn config_at(path: &Path) -> Result<RunConfig, Fail> {
    let cfg = load_config(path).map_err(|e| match e {
        Error::Io(io) => Fail(2, format!("{}: {io}", path.display())),
        e => Fail::from(e),
    })?;
    cfg.model_spec()?;
    Ok(cfg)
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Fail> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Fail(1, format!("{}: {e}", p.display())))?)),
        None => Box::new(std::io::stdout()),
    })
}

fn execute(cmd: Cmd) -> Result<(), Fail> {
    match cmd {
        Cmd::Run { config, out } => {
            let cfg = config_at(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output.dir.clone());
            let o = run(
                &cfg,
                &RunOptions {
                    dir: Some(dir.clone()),
                    sifs: false,
                },
            )?;
            println!("{} outputs written to {}", o.states.len(), dir.display());
            if let Some(s) = o.stopped {
                println!("stopped: {s}");
            }
        }
        Cmd::Benchmark { name, out } => {
            let Some(name) = name else {
                for n in NAMES {
                    println!("{n}");
                }
                return Ok(());
            };
            let names: Vec<&str> = if name == "all" { NAMES.to_vec() } else { vec![name.as_str()] };
            let mut ok = true;
            for n in names {
                let dir = out.as_ref().map(|d| d.join(n));
                let rep = run_benchmark(n, dir.as_deref())?;
                println!("{rep}");
                ok &= rep.passed();
            }
            if !ok {
                return Err(Fail(3, "benchmark FAIL".into()));
            }
        }
        Cmd::Probe { config, at, fields, out } => {
            let cfg = config_at(&config)?;
            let fs = fields
                .iter()
                .map(|f| field_by_name(f).ok_or_else(|| Fail(2, format!("unknown field '{f}'"))))
                .collect::<Result<Vec<_>, _>>()?;
            let o = run(&cfg, &RunOptions::default())?;
            let probes = at
                .iter()
                .enumerate()
                .map(|(i, &x)| Probe::new(&o.model, &format!("P{}", i + 1), x, &fs))
                .collect::<Result<Vec<_>, _>>()?;
            let mut csv = ProbeCsv::new(&o.model, probes, sink(&out)?)?;
            for s in &o.states {
                csv.row(&o.model, s)?;
            }
        }
        Cmd::Sif { config, theta0, out } => {
            let mut cfg = config_at(&config)?;
            if let Some(t) = theta0 {
                cfg.output.sif_theta0 = Some(xthm::config::Q(t));
            }
            let o = run(
                &cfg,
                &RunOptions {
                    dir: None,
                    sifs: true,
                },
            )?;
            let mut csv = SifCsv::new(sink(&out)?)?;
            for r in &o.tips {
                csv.row(r.t, r.crack, r.tip, &r.sif, r.f_i, r.theta_c)?;
            }
        }
        Cmd::MeshGen {
            config,
            nx,
            ny,
            width,
            height,
            out,
        } => {
            let mesh = match (config, nx, ny, width, height) {
                (Some(c), ..) => config_at(&c)?.build_mesh()?,
                (None, Some(nx), Some(ny), Some(w), Some(h)) => build_structured_grid(nx, ny, w, h, [0.0, 0.0])?,
                _ => return Err(Fail(2, "give --config or all of --nx --ny --width --height".into())),
            };
            std::fs::write(&out, mesh.to_text()).map_err(|e| Fail(1, format!("{}: {e}", out.display())))?;
            println!("{} nodes, {} elements -> {}", mesh.nodes.len(), mesh.elements.len(), out.display());
        }
        Cmd::ValidateConfig { config, dump } => {
            let cfg = config_at(&config)?;
            if dump {
                print!("{}", dump_config(&cfg)?);
            } else {
                println!("ok");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail(code, msg)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}
