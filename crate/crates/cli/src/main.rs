use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use dropdecomp::scenario::{run, Scenario};
use dropdecomp::{exit_code, Error};

#[derive(Parser)]
#[command(name = "dropdecomp", version, about = "Run a dropdecomp scenario and write its certificate")]
struct Cli {
    #[command(subcommand)]
    op: Op,
}

#[derive(Subcommand)]
enum Op {
    /// Decompose a homomorphism out of I_k over a 2-complex.
    #[command(name = "decompose-i")]
    DecomposeI(RunArgs),
    /// Push a spectrum off the triangles onto the 1-skeleton.
    Skeletonize(RunArgs),
    /// Perturb a spectrum over a graph to be pointwise distinct.
    Distinct(RunArgs),
    /// Build cluster projection fields around base paths.
    Cluster(RunArgs),
    /// Check a candidate decomposition clause by clause.
    #[command(name = "verify-ii")]
    VerifyIi(RunArgs),
    /// Emit fixture data for a generator recipe.
    Generate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory; defaults to the scenario's `output` or `dropdecomp-out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the numerical tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

impl Op {
    fn split(self) -> (&'static str, RunArgs) {
        match self {
            Op::DecomposeI(a) => ("decompose-i", a),
            Op::Skeletonize(a) => ("skeletonize", a),
            Op::Distinct(a) => ("distinct", a),
            Op::Cluster(a) => ("cluster", a),
            Op::VerifyIi(a) => ("verify-ii", a),
            Op::Generate(a) => ("generate", a),
        }
    }
}

fn execute(name: &str, args: RunArgs) -> Result<i32, Error> {
    let mut scenario = Scenario::load(&args.scenario)?;
    let op = scenario.resolve_operation(Some(name))?;
    if let Some(seed) = args.seed {
        scenario.seed = Some(seed);
    }
    if let Some(tol) = args.tol {
        scenario.tolerances.tol = tol;
    }
    let out = match (&args.out, &scenario.output) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => scenario.base_dir.join(o),
        (None, None) => PathBuf::from("dropdecomp-out"),
    };
    let report = run(&scenario, op)?;
    report.write(&out)?;
    println!(
        "{} {} payload {} -> {}",
        op.as_str(),
        if report.pass { "PASS" } else { "FAIL" },
        report.payload_hash,
        out.display()
    );
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::InvalidSubcommand => 3,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (name, args) = cli.op.split();
    let code = match execute(name, args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
