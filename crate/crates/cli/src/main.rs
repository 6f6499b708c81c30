use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nilcyc_cli::sysfile::{parse_point, parse_schedule, parse_seeds};
use nilcyc_cli::{
    center_verify, classify, demo_polynomials, load_system, lyapunov, parse_window, portrait, read_file,
    resultant_demo, unfold, CliError, Numerics, PortraitArgs, Report,
};
use nilcyc_core::centers::ConditionId;
use nilcyc_core::exactalg::{parse_rational, MPoly, Rational};
use num_traits::Zero;

#[derive(Parser)]
#[command(name = "nilcyc", version, about = "Nilpotent centers and crossing limit cycles of switching cubic systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct NumericFlags {
    /// Number of displacement coefficients.
    #[arg(long, default_value_t = 8)]
    order: usize,
    /// Working precision in bits (default: $NILCYC_PRECISION_BITS or 256).
    #[arg(long)]
    precision: Option<u32>,
    /// Scaling parameter samples, comma separated rationals.
    #[arg(long, value_delimiter = ',', value_parser = rational_arg)]
    eps: Vec<Rational>,
}

impl NumericFlags {
    fn numerics(&self) -> Result<Numerics, CliError> {
        Numerics::new(self.order, self.precision, self.eps.clone())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Classify a nilpotent singular point on y = 0 in both halves.
    Classify {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, default_value = "1,0", allow_hyphen_values = true)]
        point: String,
        #[arg(long, default_value_t = 8)]
        order: usize,
    },
    /// Displacement coefficients V_1..V_order.
    Lyapunov {
        #[arg(long)]
        system: PathBuf,
        #[command(flatten)]
        numeric: NumericFlags,
        /// Linear trace added after rescaling ([z2cubic] systems).
        #[arg(long, value_parser = rational_arg, allow_hyphen_values = true)]
        delta: Option<Rational>,
    },
    /// Certify that (1, 0) is a bi-center under one of the conditions I..VI.
    CenterVerify {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        condition: Option<ConditionId>,
        #[command(flatten)]
        numeric: NumericFlags,
    },
    /// Exact resultant of two polynomials; `v6` is the built-in example.
    ResultantDemo {
        name: Option<String>,
        #[arg(long, requires_all = ["b", "var"], conflicts_with = "name")]
        a: Option<String>,
        #[arg(long)]
        b: Option<String>,
        #[arg(long)]
        var: Option<String>,
    },
    /// Crossing limit cycles from a perturbation schedule.
    Unfold {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        condition: Option<ConditionId>,
        #[arg(long)]
        schedule: PathBuf,
        #[command(flatten)]
        numeric: NumericFlags,
        #[arg(long, default_value = "1/4", value_parser = rational_arg)]
        rho_max: Rational,
    },
    /// SVG phase portrait.
    Portrait {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, default_value = "-2.5,2.5,-1.5,1.5", allow_hyphen_values = true)]
        window: String,
        /// File with one `x, y` start per line; default is a grid.
        #[arg(long)]
        seeds: Option<PathBuf>,
        #[arg(long, default_value_t = 6)]
        grid: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 60.0)]
        t_end: f64,
    },
}

fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s.trim()).map_err(|e| e.to_string())
}

fn poly_arg(flag: &str, s: &str) -> Result<MPoly, CliError> {
    s.parse().map_err(|e: nilcyc_core::exactalg::ParseError| CliError::Parse {
        file: flag.to_string(),
        line: e.line,
        column: e.column,
        message: e.message,
    })
}

fn run(command: Command) -> Result<Report, CliError> {
    match command {
        Command::Classify { system, point, order } => classify(&load_system(&system)?, parse_point(&point)?, order),
        Command::Lyapunov { system, numeric, delta } => {
            let spec = load_system(&system)?;
            let mut num = numeric.numerics()?;
            if num.eps.is_empty() && matches!(spec, nilcyc_cli::sysfile::SystemSpec::Z2 { .. }) {
                num.eps = vec![Rational::new(1.into(), 10.into())];
            }
            lyapunov(&spec, &num, &delta.unwrap_or_else(Rational::zero))
        }
        Command::CenterVerify { system, condition, numeric } => {
            center_verify(&load_system(&system)?, condition, &numeric.numerics()?)
        }
        Command::ResultantDemo { name, a, b, var } => match (name, a, b, var) {
            (_, Some(a), Some(b), Some(var)) => resultant_demo(&poly_arg("--a", &a)?, &poly_arg("--b", &b)?, &var),
            (name, ..) => {
                let name = name.unwrap_or_else(|| "v6".into());
                let (a, b, var) = demo_polynomials(&name)
                    .ok_or_else(|| CliError::Precondition(format!("unknown demo {name:?} (known: v6)")))?;
                resultant_demo(&a, &b, var)
            }
        },
        Command::Unfold { system, condition, schedule, numeric, rho_max } => {
            let spec = load_system(&system)?;
            let stages = parse_schedule(&schedule.display().to_string(), &read_file(&schedule)?)?;
            unfold(&spec, condition, &stages, &numeric.numerics()?, &rho_max)
        }
        Command::Portrait { system, window, seeds, grid, tol, t_end } => {
            let spec = load_system(&system)?;
            let seeds = match seeds {
                Some(p) => Some(parse_seeds(&p.display().to_string(), &read_file(&p)?)?),
                None => None,
            };
            portrait(&spec, &PortraitArgs { window: parse_window(&window)?, seeds, grid, tol, t_end })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli.command).and_then(|report| {
        let text = report.render();
        match &cli.output {
            Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
