use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pseudobiharmonic::catalog::{Family, Grid};
use pseudobiharmonic::report::{exit_code, run, Command, Format, RunConfig};

#[derive(Parser)]
#[command(name = "pseudobiharmonic", version, about = "Numerical checks for pseudo-biharmonic immersions of CR spheres")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Point-sampled verdicts and hypothesis defects at one parameter.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        param: f64,
        /// Check the Riemannian bitension instead of the pseudo one.
        #[arg(long)]
        riemannian: bool,
    },
    /// Scan a parameter interval and locate zero-crossings.
    Scan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        min: f64,
        #[arg(long)]
        max: f64,
        #[arg(long)]
        steps: usize,
    },
    /// Closed-form parameter loci.
    Predicates {
        #[command(flatten)]
        common: Common,
    },
    /// Structural identity suite at sample points.
    Identities {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        param: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    SmallSphere,
    TakagiA1,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    h1: Option<f64>,
    #[arg(long)]
    h2: Option<f64>,
    #[arg(long)]
    lap_h1: Option<f64>,
    #[arg(long)]
    lap_h2: Option<f64>,
    #[arg(long)]
    tol_bitension: Option<f64>,
    #[arg(long)]
    tol_condition: Option<f64>,
    #[arg(long)]
    tol_defect: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

impl Common {
    fn config(&self, command: Command) -> RunConfig {
        let family = match self.family {
            FamilyArg::SmallSphere => Family::SmallSphere,
            FamilyArg::TakagiA1 => Family::TakagiA1,
        };
        let mut c = RunConfig::new(command, family, self.n);
        c.points = self.points.unwrap_or(c.points);
        c.seed = self.seed.unwrap_or(c.seed);
        c.h1 = self.h1.unwrap_or(c.h1);
        c.h2 = self.h2.unwrap_or(c.h2);
        c.lap_h1 = self.lap_h1.unwrap_or(c.lap_h1);
        c.lap_h2 = self.lap_h2.unwrap_or(c.lap_h2);
        c.tol_bitension = self.tol_bitension.unwrap_or(c.tol_bitension);
        c.tol_condition = self.tol_condition.unwrap_or(c.tol_condition);
        c.tol_defect = self.tol_defect.unwrap_or(c.tol_defect);
        c.out = self.out.clone();
        c.format = match self.format {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        };
        c
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let config = match cli.command {
        Cmd::Verify { common, param, riemannian } => {
            let mut c = common.config(Command::Verify);
            c.param = Some(param);
            c.riemannian = riemannian;
            c
        }
        Cmd::Scan { common, min, max, steps } => {
            let mut c = common.config(Command::Scan);
            c.grid = Some(Grid { min, max, steps });
            c
        }
        Cmd::Predicates { common } => common.config(Command::Predicates),
        Cmd::Identities { common, param } => {
            let mut c = common.config(Command::Identities);
            c.param = Some(param);
            c
        }
    };
    let report = match run(&config).and_then(|r| r.emit().map(|_| r)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    eprintln!("{} of {} checks passed", report.summary.passed, report.summary.total);
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
