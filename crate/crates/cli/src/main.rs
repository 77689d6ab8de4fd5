use std::path::{Path, PathBuf};
use std::process::ExitCode;

use afree_cli::config::Method;
use afree_cli::run::{self, EXIT_INPUT};
use afree_cli::RunConfig;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "afree", version, about = "Principal symbols, wave cones and blow-up checks for A-free measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cone method for `wavecone`.
    #[arg(long, global = true, value_enum)]
    method: Option<Method>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write ε-tables as CSV next to the report.
    #[arg(long, global = true)]
    csv: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Parse and echo the operator.
    Parse,
    /// Principal part, homogeneity weights and manifolds.
    Symbol,
    /// Intersection wave cones.
    Wavecone,
    /// Weak-form residual of Aμ.
    CheckAfree,
    /// Uniform-singularity certificates at the configured points.
    CheckSingularity,
    /// Normalized blow-up sequences with a bump test function.
    Blowup,
    /// Full theorem verification.
    Verify,
}

fn write_outputs(report: &run::RunReport, out: Option<&Path>, csv: bool) -> std::io::Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, report.to_json() + "\n")?;
            print!("{}", report.summary());
        }
        None => println!("{}", report.to_json()),
    }
    if csv {
        let (dir, stem) = match out {
            Some(p) => (
                p.parent().map(Path::to_path_buf).unwrap_or_default(),
                p.file_stem().map_or("afree".into(), |s| s.to_string_lossy().into_owned()),
            ),
            None => (PathBuf::new(), "afree".to_string()),
        };
        for t in &report.tables {
            std::fs::write(dir.join(format!("{stem}.{}.csv", t.name)), &t.content)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("AFREE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let Some(path) = cli.config.as_deref() else {
        eprintln!("error: --config is required");
        return ExitCode::from(EXIT_INPUT as u8);
    };
    let mut config = match RunConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT as u8);
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(method) = cli.method {
        config.method = method;
    }
    let report = match cli.command {
        Command::Parse => run::cmd_parse(&config),
        Command::Symbol => run::cmd_symbol(&config),
        Command::Wavecone => run::cmd_wavecone(&config, config.method),
        Command::CheckAfree => run::cmd_check_afree(&config),
        Command::CheckSingularity => run::cmd_check_singularity(&config),
        Command::Blowup => run::cmd_blowup(&config),
        Command::Verify => run::cmd_verify(&config),
    };
    if let Err(e) = write_outputs(&report, cli.out.as_deref(), cli.csv) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(EXIT_INPUT as u8);
    }
    // The summary printed alongside --out already names the error.
    if let (Some(e), None) = (&report.error, &cli.out) {
        eprintln!("error ({}): {}", e.kind, e.message);
    }
    ExitCode::from(report.exit_code as u8)
}
