//! Command-line front end: one subcommand per reproducible table or
//! experiment. Data goes to `--out` (or stdout), diagnostics to stderr.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use num_rational::Rational64;
use serde_json::json;

use chsh_commit::analysis::{max_gain_objective, max_pr_control_objective, ns_vertices, ThresholdSchedule};
use chsh_commit::devices::{alice_cheat_pair, bob_cheat_pair, classical_pair, honest_pair, pr_pair, DeviceSpec};
use chsh_commit::montecarlo::{azuma_empirical, run_experiment, with_jobs, ExperimentSpec, Scenario};
use chsh_commit::protocol::{run, AliceStrategy, BobStrategy, ProtocolConfig, RevealTarget, Variant};
use chsh_commit::report::{bound_csv, bound_rows, curve_csv, curve_points, to_json, Format};
use chsh_commit::{Bit, DevicePair};

#[derive(Parser, Debug)]
#[command(name = "chsh-commit", version, about = "Device-independent bit commitment from sequential CHSH tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Master seed.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Monte Carlo trials (histories for `azuma`).
    #[arg(long, global = true, default_value_t = 100_000)]
    trials: u64,
    /// Output file; standard output if absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<Format>,
    /// Worker threads for Monte Carlo subcommands.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[arg(long, global = true, value_parser = parse_variant)]
    variant: Option<Variant>,
    /// N: a single value, or for `bound` a comma list whose items may be
    /// decade ranges such as `1e3:1e8`.
    #[arg(long = "N", global = true)]
    n: Option<String>,
    /// CHSH threshold I_th.
    #[arg(long, global = true)]
    ith: Option<f64>,
    #[arg(long = "ith-schedule", global = true, value_enum, default_value_t = ScheduleArg::Caption)]
    ith_schedule: ScheduleArg,
    /// Werner visibility v of honest boxes.
    #[arg(long, global = true)]
    noise: Option<f64>,
    /// Cheat angle in [0, pi/4].
    #[arg(long, global = true)]
    theta: Option<f64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    k: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = AliceArg::Honest)]
    alice: AliceArg,
    /// Committed bit (honest Alice) or reveal target (cheating Alice;
    /// uniform if absent).
    #[arg(long, global = true, value_parser = parse_bit)]
    bit: Option<Bit>,
    #[arg(long, global = true, value_enum, default_value_t = BobArg::Honest)]
    bob: BobArg,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Asymptotic control curve: CSV `I,control`.
    Curve {
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Finite-N upper bound on Alice's control: CSV `N,I_th,bound,epsilon_star`.
    Bound,
    /// One protocol run; prints the transcript as JSON.
    Simulate,
    /// Monte Carlo estimate for a named scenario.
    Montecarlo {
        #[arg(long)]
        scenario: String,
    },
    /// Empirical Azuma tail for honest boxes against exp(-k eps^2 / 2D^2).
    Azuma,
    /// Maxima of the two cheating objectives over the no-signaling polytope.
    Polytope {
        #[arg(value_enum)]
        what: Option<PolytopeItem>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ScheduleArg {
    Caption,
    Body,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum AliceArg {
    Honest,
    Cheat,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BobArg {
    Honest,
    GainDeterministic,
    GainDeviceDependent,
    GuessUniform,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
#[value(rename_all = "snake_case")]
enum PolytopeItem {
    GainMax,
    PrControlMax,
    Vertices,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: chsh_commit::protocol::ProtocolError| e.to_string())
}

fn parse_bit(s: &str) -> Result<Bit, String> {
    match s {
        "0" => Ok(Bit::ZERO),
        "1" => Ok(Bit::ONE),
        _ => Err(format!("'{s}' is not a bit")),
    }
}

/// Integer literal or exact power of ten in scientific notation (`1e6`).
fn parse_count(s: &str) -> Result<u64> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let x: f64 = s.parse().map_err(|_| anyhow!("'{s}' is not a count"))?;
    if x.fract() != 0.0 || !(1.0..=1e18).contains(&x) {
        bail!("'{s}' is not a positive integer");
    }
    Ok(x as u64)
}

fn parse_n_list(spec: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item.split_once(':') {
            Some((lo, hi)) => {
                let (lo, hi) = (parse_count(lo)?, parse_count(hi)?);
                if lo > hi {
                    bail!("empty range '{item}'");
                }
                let mut n = lo;
                while n <= hi {
                    out.push(n);
                    n = n.checked_mul(10).ok_or_else(|| anyhow!("range '{item}' overflows"))?;
                }
            }
            None => out.push(parse_count(item)?),
        }
    }
    if out.is_empty() {
        bail!("--N list is empty");
    }
    Ok(out)
}

impl Cli {
    fn format(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn single_n(&self, default: u64) -> Result<u64> {
        match &self.n {
            None => Ok(default),
            Some(s) => parse_count(s).with_context(|| "--N expects a single value here"),
        }
    }

    fn variant(&self) -> Variant {
        self.variant.unwrap_or(Variant::Main)
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes())?;
                stdout.flush()?;
                Ok(())
            }
        }
    }
}

fn cmd_curve(cli: &Cli, points: usize) -> Result<String> {
    if points < 2 {
        bail!("--points must be at least 2");
    }
    let pts = curve_points(points);
    Ok(match cli.format(Format::Csv) {
        Format::Csv => curve_csv(&pts),
        Format::Json => to_json(&pts)?,
    })
}

fn cmd_bound(cli: &Cli) -> Result<String> {
    let ns = parse_n_list(cli.n.as_deref().unwrap_or("2,1e1:1e8"))?;
    if let Some(&bad) = ns.iter().find(|&&n| n < 2) {
        bail!("N must exceed 1, got {bad}");
    }
    let schedule = match cli.ith_schedule {
        ScheduleArg::Caption => ThresholdSchedule::Caption,
        ScheduleArg::Body => ThresholdSchedule::Body,
    };
    let rows = bound_rows(&ns, schedule)?;
    Ok(match cli.format(Format::Csv) {
        Format::Csv => bound_csv(&rows),
        Format::Json => to_json(&rows)?,
    })
}

fn cmd_simulate(cli: &Cli) -> Result<String> {
    if cli.format == Some(Format::Csv) {
        bail!("simulate emits JSON only");
    }
    let variant = cli.variant();
    let n = cli.single_n(10)?;
    let config = ProtocolConfig::new(variant, n, cli.ith.unwrap_or(2.0), cli.seed);
    config.validate()?;
    let alice = match cli.alice {
        AliceArg::Honest => AliceStrategy::honest(cli.bit.unwrap_or(Bit::ZERO)),
        AliceArg::Cheat => AliceStrategy::cheat(cli.bit.map_or(RevealTarget::Random, RevealTarget::Fixed)),
    };
    let bob = match cli.bob {
        BobArg::Honest => BobStrategy::Honest,
        BobArg::GainDeterministic => BobStrategy::GainCheatDeterministic,
        BobArg::GainDeviceDependent => BobStrategy::GainCheatDeviceDependent,
        BobArg::GuessUniform => BobStrategy::GuessUniform,
    };
    let theta = cli.theta.unwrap_or(std::f64::consts::FRAC_PI_4);
    let noise = cli.noise.unwrap_or(1.0);
    let count = if variant == Variant::LargeOffice { n + 1 } else { 1 };
    let mut pairs: Vec<Box<dyn DevicePair>> = Vec::new();
    for i in 0..count {
        // Device seeds are kept apart from the parties' generator.
        let seed = cli.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i + 1);
        let pair: Box<dyn DevicePair> = match (variant, cli.alice, bob) {
            (Variant::Pr, AliceArg::Cheat, _) => Box::new(classical_pair(&[Bit::ZERO; 4], &[Bit::ZERO; 4])?),
            (Variant::Pr, _, _) => Box::new(pr_pair(seed)),
            (_, AliceArg::Cheat, _) => Box::new(alice_cheat_pair(theta, seed)?),
            (_, _, BobStrategy::GainCheatDeterministic) => Box::new(bob_cheat_pair()),
            _ => Box::new(honest_pair(noise, seed)?),
        };
        pairs.push(pair);
    }
    let transcript = run(&config, &mut pairs, &alice, bob)?;
    Ok(to_json(&transcript)?)
}

fn cmd_montecarlo(cli: &Cli, scenario: &str) -> Result<String> {
    let scenario: Scenario = scenario.parse()?;
    let mut spec = ExperimentSpec::new(scenario, cli.trials, cli.seed);
    spec.n = cli.single_n(spec.n)?;
    spec.variant = cli.variant();
    if let Some(v) = cli.ith {
        spec.i_threshold = v;
    }
    if let Some(v) = cli.noise {
        spec.noise_v = v;
    }
    if let Some(v) = cli.theta {
        spec.theta = v;
    }
    if let Some(v) = cli.epsilon {
        spec.epsilon = v;
    }
    if let Some(v) = cli.k {
        spec.k = v;
    }
    let result = with_jobs(cli.jobs, || run_experiment(&spec))??;
    Ok(match cli.format(Format::Json) {
        Format::Json => to_json(&result)?,
        Format::Csv => {
            let reference = result.analytic_reference.map_or(String::new(), |r| r.to_string());
            format!(
                "scenario,trials,mean,stderr,ci99_lo,ci99_hi,analytic_reference\n{},{},{},{},{},{},{}\n",
                result.scenario, result.trials, result.mean, result.stderr, result.ci99.0, result.ci99.1, reference
            )
        }
    })
}

fn cmd_azuma(cli: &Cli) -> Result<String> {
    if cli.format == Some(Format::Csv) {
        bail!("azuma emits JSON only");
    }
    let k = cli.k.unwrap_or(100);
    let epsilon = cli.epsilon.unwrap_or(1.0);
    let noise = cli.noise.unwrap_or(1.0);
    let device = DeviceSpec::Honest { noise_v: noise };
    let cell = with_jobs(cli.jobs, || azuma_empirical(&device, k, epsilon, cli.trials, cli.seed))??;
    Ok(to_json(&json!({
        "k": cell.k,
        "epsilon": cell.epsilon,
        "noise_v": noise,
        "histories": cell.tail.trials,
        "tail": cell.tail,
        "bound": cell.bound,
        "within_bound": cell.tail.mean <= cell.bound + 3.0 * cell.tail.stderr,
    }))?)
}

fn rational_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn cmd_polytope(cli: &Cli, what: Option<PolytopeItem>) -> Result<String> {
    if cli.format == Some(Format::Csv) {
        bail!("polytope emits JSON only");
    }
    let gain = rational_to_f64(max_gain_objective::<Rational64>().0);
    let control = rational_to_f64(max_pr_control_objective::<Rational64>().0);
    let vertices = ns_vertices::<Rational64>().len();
    let value = match what {
        None => json!({ "gain_max": gain, "pr_control_max": control, "vertices": vertices }),
        Some(PolytopeItem::GainMax) => json!({ "gain_max": gain }),
        Some(PolytopeItem::PrControlMax) => json!({ "pr_control_max": control }),
        Some(PolytopeItem::Vertices) => json!({ "vertices": vertices }),
    };
    Ok(to_json(&value)?)
}

fn execute(cli: &Cli) -> Result<()> {
    let text = match &cli.command {
        Command::Curve { points } => cmd_curve(cli, *points)?,
        Command::Bound => cmd_bound(cli)?,
        Command::Simulate => cmd_simulate(cli)?,
        Command::Montecarlo { scenario } => cmd_montecarlo(cli, scenario)?,
        Command::Azuma => cmd_azuma(cli)?,
        Command::Polytope { what } => cmd_polytope(cli, *what)?,
    };
    cli.emit(&text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
