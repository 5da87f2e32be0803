use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use treebias::render::{self, Format, Table};
use treebias_core::analytic::{self, SplitSummary};
use treebias_core::dgp::DgpName;
use treebias_core::enumeration::{self, EnumerationOptions, OrderingPattern, TieBreak};
use treebias_core::simulation::{self, AppendixConfig, SinglePositiveConfig, DEFAULT_SEED};
use treebias_core::Error;

#[derive(Parser)]
#[command(name = "treebias", version, about = "Prevalence bias of decision trees on imbalanced data")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Markdown, global = true)]
    format: Format,
    /// Decimal places (default depends on the command; 3 for tables).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..=17))]
    precision: Option<u16>,
    /// Write the rendered output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One predictor, one positive case.
    Theorem1 {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        exact: bool,
    },
    /// Several predictors, one positive case, tree on a single predictor.
    Theorem2 {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        p: usize,
        #[arg(long)]
        exact: bool,
    },
    /// Expected prevalence given one split (j = n - i).
    Theorem3 {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        i: usize,
        #[arg(long)]
        a: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        exact: bool,
    },
    /// Derivative of the expected positive-region size in the predictor count.
    Derivative {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
    },
    /// Small-sample bias of the logistic intercept.
    InterceptBias {
        #[arg(long)]
        n: usize,
        /// Mean success probability.
        #[arg(long)]
        pi: f64,
    },
    /// Analytic single-positive table.
    Table1 {
        #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 30, 40, 50])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        p: usize,
    },
    /// Average the split-conditional estimate over every ordering.
    Enumerate(EnumerateArgs),
    /// Pure-chain and secondary-extreme estimates for one ordering.
    Chain {
        /// e.g. 0110001000
        #[arg(long)]
        pattern: String,
        #[arg(long, default_value_t = 3)]
        p_total: usize,
    },
    /// Monte Carlo experiments.
    Simulate {
        #[command(subcommand)]
        experiment: Experiment,
    },
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long, required_unless_present = "grid")]
    n: Option<usize>,
    #[arg(long, required_unless_present = "grid")]
    m: Option<usize>,
    /// Every n in 3..=max-n with m in 1..=ceil(n/2 - 1).
    #[arg(long, conflicts_with_all = ["n", "m"])]
    grid: bool,
    #[arg(long, default_value_t = 25)]
    max_n: usize,
    #[arg(long, env = "TREEBIAS_WORKERS")]
    workers: Option<usize>,
    /// Also accumulate in exact rational arithmetic.
    #[arg(long)]
    exact: bool,
    /// Break entropy ties toward the largest left size.
    #[arg(long)]
    rightmost: bool,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, env = "TREEBIAS_WORKERS")]
    workers: Option<usize>,
    /// Use the published sample sizes.
    #[arg(long)]
    paper_scale: bool,
    /// Directory for `<experiment>.md` and `<experiment>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Experiment {
    /// Single positive case, uniform predictors.
    #[command(name = "single_positive", alias = "single-positive")]
    SinglePositive {
        #[command(flatten)]
        sim: SimArgs,
        /// Iterations per n (default 20000, or 500000 with --paper-scale).
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 30, 40, 50])]
        n_values: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        p: usize,
    },
    /// Logit model with Normal or lognormal predictors.
    Appendix {
        #[command(flatten)]
        sim: SimArgs,
        /// normal_a1 or lognormal_a1; both when omitted.
        #[arg(long, value_delimiter = ',')]
        dgp: Vec<String>,
        /// Imbalance settings; the published ones per dgp when omitted.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        b: Vec<f64>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        n_train: Option<usize>,
        #[arg(long)]
        n_test: Option<usize>,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::ContractViolation(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.output {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_table(cli: &Cli, table: &Table) -> Result<(), Failure> {
    emit(cli, &table.render(cli.format)?)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let precision = |default: usize| cli.precision.map_or(default, usize::from);
    match &cli.command {
        Command::Theorem1 { n, exact } => {
            let b = analytic::theorem1_breakdown(*n)?;
            let mut t = render::breakdown(&b, precision(3));
            if *exact {
                let e = analytic::theorem1_breakdown_exact(*n as u64)?;
                t.push(vec!["ratio_exact".into(), e.ratio_to_true.to_string()]);
            }
            emit_table(cli, &t)
        }
        Command::Theorem2 { n, p, exact } => {
            let b = analytic::theorem2_breakdown(*n, *p)?;
            let mut t = render::breakdown(&b, precision(3));
            t.push(vec![
                "type1_ratio".into(),
                render::fixed(*n as f64 * b.e_size_extreme, precision(3)),
            ]);
            t.push(vec![
                "type2_ratio".into(),
                render::fixed(*n as f64 * b.e_size_not_extreme, precision(3)),
            ]);
            if *exact {
                let e = analytic::theorem2_breakdown_exact(*n as u64, *p as u64)?;
                t.push(vec!["ratio_exact".into(), e.ratio_to_true.to_string()]);
            }
            emit_table(cli, &t)
        }
        Command::Theorem3 { n, i, a, k, exact } => {
            let s = SplitSummary::new(*n, *i, *a, *k)?;
            let v = analytic::theorem3_expected_prevalence(&s)?;
            let m = s.m() as f64 / *n as f64;
            let mut t = render::key_values(
                &[("expected_prevalence", v), ("true_prevalence", m), ("ratio", v / m)],
                precision(4),
            );
            if *exact {
                let e = analytic::theorem3_expected_prevalence_exact(&s)?;
                t.push(vec!["expected_prevalence_exact".into(), e.to_string()]);
            }
            emit_table(cli, &t)
        }
        Command::Derivative { n, p } => {
            let d = analytic::theorem2_derivative_in_p(*n, *p)?;
            let e = analytic::expected_positive_region(*n, *p)?;
            emit_table(
                cli,
                &render::key_values(&[("expected_positive_region", e), ("derivative", d)], precision(6)),
            )
        }
        Command::InterceptBias { n, pi } => {
            let bias = analytic::logistic_intercept_bias(*n, *pi)?;
            // Probability implied when the true log-odds is 0 and the estimate is shifted by the bias.
            let shifted = treebias_core::dgp::inverse_logit(bias);
            emit_table(
                cli,
                &render::key_values(&[("intercept_bias", bias), ("shifted_half", shifted)], precision(3)),
            )
        }
        Command::Table1 { n, p } => {
            let rows = simulation::summarize_table1(n, *p)?;
            emit_table(cli, &render::table1(&rows, precision(3), cli.format))
        }
        Command::Enumerate(args) => enumerate(cli, args, precision(3)),
        Command::Chain { pattern, p_total } => {
            let pat = OrderingPattern::parse(pattern)?;
            let split = enumeration::split_for_ordering(&pat);
            let first = analytic::theorem3_expected_prevalence(&split)?;
            let pure = enumeration::pure_chain_expected_prevalence(&pat);
            let c = enumeration::chain_with_secondary_extreme(&pat, *p_total)?;
            emit_table(cli, &render::chain(&c, pure, first, precision(4)))
        }
        Command::Simulate { experiment } => simulate(cli, experiment, precision(3)),
    }
}

fn enumerate(cli: &Cli, args: &EnumerateArgs, precision: usize) -> Result<(), Failure> {
    let pairs = if args.grid {
        enumeration::table3_grid(args.max_n)
    } else {
        vec![(args.n.expect("required by clap"), args.m.expect("required by clap"))]
    };
    let opts = EnumerationOptions {
        workers: args.workers,
        tie_break: if args.rightmost { TieBreak::Rightmost } else { TieBreak::Leftmost },
        exact: args.exact,
    };
    let results = pairs
        .iter()
        .map(|&(n, m)| enumeration::enumerate_with(n, m, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    emit_table(cli, &render::enumeration(&results, precision, cli.format))
}

fn write_pair(dir: &Path, stem: &str, markdown: &Table, csv: &Table) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
    for (ext, text) in [("md", markdown.to_markdown()), ("csv", csv.to_csv()?)] {
        let path = dir.join(format!("{stem}.{ext}"));
        fs::write(&path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn simulate(cli: &Cli, experiment: &Experiment, precision: usize) -> Result<(), Failure> {
    match experiment {
        Experiment::SinglePositive {
            sim,
            iterations,
            n_values,
            p,
        } => {
            let default_iters = if sim.paper_scale {
                simulation::PAPER_ITERATIONS
            } else {
                simulation::DESK_ITERATIONS
            };
            let config = SinglePositiveConfig {
                n_values: n_values.clone(),
                p: *p,
                iterations: iterations.unwrap_or(default_iters),
                master_seed: sim.seed,
                workers: sim.workers,
            };
            let report = simulation::run_single_positive_experiment(&config)?;
            eprintln!("single_positive: {:.1}s", report.wall_time.as_secs_f64());
            let md = render::single_positive(&report, precision, Format::Markdown);
            let csv = render::single_positive(&report, precision, Format::Csv);
            if let Some(dir) = &sim.out {
                write_pair(dir, "single_positive", &md, &csv)?;
            }
            emit_table(cli, if cli.format == Format::Csv { &csv } else { &md })
        }
        Experiment::Appendix {
            sim,
            dgp,
            b,
            runs,
            n_train,
            n_test,
        } => {
            let dgps: Vec<DgpName> = if dgp.is_empty() {
                vec![DgpName::NormalA1, DgpName::LognormalA1]
            } else {
                dgp.iter().map(|s| s.parse()).collect::<Result<_, _>>()?
            };
            let started = std::time::Instant::now();
            let mut rows = Vec::new();
            for name in dgps {
                let base = if sim.paper_scale {
                    AppendixConfig::paper_scale(name)
                } else {
                    AppendixConfig::desk(name)
                };
                let config = AppendixConfig {
                    b_values: if b.is_empty() { base.b_values.clone() } else { b.clone() },
                    runs: runs.unwrap_or(base.runs),
                    n_train: n_train.unwrap_or(base.n_train),
                    n_test: n_test.unwrap_or(base.n_test),
                    master_seed: sim.seed,
                    workers: sim.workers,
                    ..base
                };
                rows.extend(simulation::run_appendix_experiment(&config)?);
            }
            eprintln!("appendix: {:.1}s", started.elapsed().as_secs_f64());
            let md = render::appendix(&rows, precision, Format::Markdown);
            let csv = render::appendix(&rows, precision, Format::Csv);
            if let Some(dir) = &sim.out {
                write_pair(dir, "appendix", &md, &csv)?;
            }
            emit_table(cli, if cli.format == Format::Csv { &csv } else { &md })
        }
    }
}
