use clap::{Args, Parser, Subcommand, ValueEnum};
use detrep::cli::{
    self, render_solve_text, OutputFormat, PolyInput, RunConfig, EXIT_INPUT_ERROR,
};

#[derive(Parser)]
#[command(
    name = "detrep",
    about = "Monic symmetric determinantal representations of multivariate polynomials",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct PolyArgs {
    /// Polynomial as a JSON file in the canonical format
    #[arg(long, conflicts_with = "expr")]
    input: Option<String>,
    /// Polynomial as an expression over x1..xn (e.g. "1 + 2*x1*x2^2")
    #[arg(long)]
    expr: Option<String>,
    /// Number of variables (default: highest index appearing in --expr)
    #[arg(long)]
    nvars: Option<usize>,
}

impl PolyArgs {
    fn to_input(&self) -> Result<PolyInput, String> {
        match (&self.input, &self.expr) {
            (Some(path), None) => Ok(PolyInput::File(path.clone())),
            (None, Some(text)) => {
                Ok(PolyInput::Expr { text: text.clone(), nvars: self.nvars })
            }
            _ => Err("pass exactly one of --input FILE or --expr STR".to_string()),
        }
    }
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Seed for the Newton multistart sampler
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Verification tolerance (relative to the largest coefficient)
    #[arg(long, default_value_t = 1e-8)]
    tol_verify: f64,
    /// Number of Newton starts (default: 200 per unknown pair)
    #[arg(long)]
    newton_starts: Option<usize>,
    /// Divide the input by its constant term when it is positive and not 1
    #[arg(long)]
    normalize: bool,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report to a file instead of stdout
    #[arg(long)]
    output: Option<String>,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Json,
    Text,
}

impl CommonOpts {
    fn run_config(&self) -> RunConfig {
        RunConfig {
            seed: self.seed,
            tol_verify: self.tol_verify,
            newton_starts: self.newton_starts,
            normalize_constant: self.normalize,
            format: match self.format {
                Format::Json => OutputFormat::Json,
                Format::Text => OutputFormat::Text,
            },
            ..RunConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute all size-d representations f = det(I + x1 D1 + sum x_i A_i)
    Solve {
        #[command(flatten)]
        poly: PolyArgs,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Check a representation against a polynomial and print the residual
    Verify {
        #[command(flatten)]
        poly: PolyArgs,
        /// Representation JSON file ({"d", "D1", "A", ...})
        #[arg(long)]
        rep: String,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Evaluate a generalized mixed discriminant of a matrix tuple
    Gmd {
        /// JSON file: {"order": d, "matrices": [[[...]]], "multiplicities": [...]}
        #[arg(long)]
        matrices: String,
    },
    /// Check the necessary condition: all axis restrictions have real roots
    RzCheck {
        #[command(flatten)]
        poly: PolyArgs,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Emit a random determinantal polynomial and its generating tuple
    Random {
        /// Degree (= matrix order), 1..=6
        #[arg(long)]
        degree: usize,
        /// Number of variables, 1..=6
        #[arg(long)]
        nvars: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        output: Option<String>,
    },
}

fn emit(text: String, output: &Option<String>) {
    match output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: cannot write {path}: {e}");
                std::process::exit(EXIT_INPUT_ERROR);
            }
        }
        None => println!("{text}"),
    }
}

fn fail(msg: impl std::fmt::Display) -> ! {
    eprintln!("error: {msg}");
    std::process::exit(EXIT_INPUT_ERROR);
}

fn main() {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve { poly, opts } => {
            let input = poly.to_input().unwrap_or_else(|e| fail(e));
            let config = opts.run_config();
            let (out, code) = cli::cmd_solve(&input, &config).unwrap_or_else(|e| fail(e));
            let text = match opts.format {
                Format::Json => serde_json::to_string_pretty(&out).unwrap(),
                Format::Text => render_solve_text(&out),
            };
            emit(text, &opts.output);
            std::process::exit(code);
        }
        Command::Verify { poly, rep, opts } => {
            let input = poly.to_input().unwrap_or_else(|e| fail(e));
            let config = opts.run_config();
            let (out, code) = cli::cmd_verify(&input, &rep, &config).unwrap_or_else(|e| fail(e));
            let text = match opts.format {
                Format::Json => serde_json::to_string_pretty(&out).unwrap(),
                Format::Text => format!(
                    "max coefficient residual: {:.6e} (tolerance {:.3e}) -> {}",
                    out.residual,
                    out.tolerance,
                    if out.ok { "ok" } else { "FAIL" }
                ),
            };
            emit(text, &opts.output);
            std::process::exit(code);
        }
        Command::Gmd { matrices } => {
            let value = cli::cmd_gmd(&matrices).unwrap_or_else(|e| fail(e));
            println!("{value}");
        }
        Command::RzCheck { poly, opts } => {
            let input = poly.to_input().unwrap_or_else(|e| fail(e));
            let config = opts.run_config();
            let (lines, code) = cli::cmd_rz_check(&input, &config).unwrap_or_else(|e| fail(e));
            emit(lines.join("\n"), &opts.output);
            std::process::exit(code);
        }
        Command::Random { degree, nvars, seed, format, output } => {
            let out = cli::cmd_random(degree, nvars, seed).unwrap_or_else(|e| fail(e));
            let text = match format {
                Format::Json => serde_json::to_string_pretty(&out).unwrap(),
                Format::Text => format!(
                    "f = {}\nrepresentation: {}",
                    out.polynomial,
                    serde_json::to_string(&out.representation).unwrap()
                ),
            };
            emit(text, &output);
        }
    }
}
