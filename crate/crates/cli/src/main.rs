use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use curvinv::canon::canonicalize_lincomb;
use curvinv::database::{self, store, BuildConfig, RuleMode};
use curvinv::exprio;
use curvinv::monomial::Case;
use curvinv::oracle::{check_rules, curvature_jet, Evaluator, PolyMetric};
use curvinv::relations::Step;
use curvinv::Error;

#[derive(Parser)]
#[command(name = "curvinv", version, about = "Scalar invariants of the Riemann tensor")]
struct Cli {
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the canonical form of an expression.
    Canon {
        #[arg(allow_hyphen_values = true)]
        expr: String,
    },
    /// Rewrite an expression over the independent invariants of a database.
    Simplify {
        #[arg(allow_hyphen_values = true)]
        expr: String,
        #[arg(long, default_value = "db")]
        db: PathBuf,
    },
    /// Build tables and rules for all orders up to MAX_LAMBDA.
    Build {
        max_lambda: usize,
        /// Also build dual cases up to MAX_LAMBDA (otherwise only as far as
        /// the ε-product step needs).
        #[arg(long)]
        dual: bool,
        #[arg(long, default_value_t = 4)]
        dimension: usize,
        /// Sign of the metric determinant: -1 Lorentzian, 1 Riemannian.
        #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
        signature: i32,
        #[arg(long, default_value = "expanded")]
        mode: RuleMode,
        #[arg(long, default_value_t = curvinv::enumerate::DEFAULT_SLOT_LIMIT)]
        slot_limit: usize,
        #[arg(long, default_value = "db")]
        out: PathBuf,
        /// Suppress progress lines.
        #[arg(long, short)]
        quiet: bool,
    },
    /// Independent invariants of one case after a step.
    Counts {
        /// Derivative orders, e.g. `0,1,3`.
        #[arg(long)]
        case: String,
        /// canon, invars, cyclic, bianchi, commute, 4d (dimdep) or duals.
        #[arg(long)]
        step: String,
        #[arg(long)]
        dual: bool,
        #[arg(long, default_value = "db")]
        db: PathBuf,
    },
    /// Evaluate every stored rule on random metrics.
    Verify {
        #[arg(long, default_value = "db")]
        db: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2])]
        seeds: Vec<u64>,
        /// Derivative depth of the curvature jet; deeper rules are skipped.
        #[arg(long, default_value_t = 2)]
        max_deriv: usize,
    },
}

enum Failure {
    Lib(Error),
    Verify(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Malformed(_) => 2,
        Error::Unsupported(_) | Error::MissingCase(_) | Error::ResourceLimit(..) => 3,
        _ => 1,
    }
}

fn parse_case(text: &str, dual: bool) -> Result<Case, Error> {
    let lambdas = text
        .trim_matches(|c| c == '{' || c == '}')
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<u8>()
                .map_err(|_| Error::Malformed(format!("bad derivative order '{s}' in case")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Case::new(&lambdas, dual)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let json = cli.json;
    match cli.command {
        Command::Canon { expr } => {
            let terms = canonicalize_lincomb(&exprio::parse(&expr)?);
            let text = exprio::print_comb(&terms);
            if json {
                let list: Vec<_> = terms
                    .iter()
                    .map(|(c, m)| json!({"coeff": c.to_string(), "case": m.case().to_string(), "monomial": exprio::print_monomial(m)}))
                    .collect();
                println!("{}", json!({"result": text, "terms": list}));
            } else {
                println!("{text}");
            }
        }
        Command::Simplify { expr, db } => {
            let terms = exprio::parse(&expr)?;
            let db = database::load(&db)?;
            let (x, passes) = db.simplify(&terms)?;
            let text = db.print(&x)?;
            if json {
                let list = x
                    .iter()
                    .rev()
                    .map(|(v, c)| Ok(json!({"coeff": c.to_string(), "var": v.to_string(), "expr": db.print_var(v)?})))
                    .collect::<Result<Vec<_>, Error>>()?;
                println!(
                    "{}",
                    json!({"result": text, "ids": x.to_string(), "terms": list, "iterations": passes})
                );
            } else {
                println!("{text}");
                eprintln!("iterations: {passes}");
            }
        }
        Command::Build {
            max_lambda,
            dual,
            dimension,
            signature,
            mode,
            slot_limit,
            out,
            quiet,
        } => {
            let config = BuildConfig {
                max_order: max_lambda,
                dual_max_order: dual.then_some(max_lambda),
                dimension,
                signature,
                mode,
                slot_limit,
            };
            let mut progress = |s: &str| {
                if !quiet {
                    eprintln!("{s}");
                }
            };
            let db = store::build_into(&config, &out, &mut progress)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&db.counts.values().collect::<Vec<_>>()).expect("counts serialize"));
            } else {
                println!("case\tcanon\tinvars\tcyclic\tbianchi\tcommute\t4d\tduals");
                for c in db.counts.values() {
                    let duals = c.duals.map_or("-".to_string(), |d| d.to_string());
                    println!(
                        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                        c.case, c.canon, c.invars, c.cyclic, c.bianchi, c.commute, c.dimdep, duals
                    );
                }
            }
        }
        Command::Counts { case, step, dual, db } => {
            let case = parse_case(&case, dual)?;
            let manifest = store::read_manifest(&db)?;
            let key = case.to_string();
            let row = manifest
                .counts
                .iter()
                .find(|c| c.case == key)
                .ok_or(Error::MissingCase(case))?;
            let n = match step.to_ascii_lowercase().as_str() {
                "canon" => row.canon,
                "invars" => row.invars,
                other => {
                    let step: Step = other.parse()?;
                    row.after(step).ok_or_else(|| {
                        Error::Unsupported(format!("step {step} does not apply to {case}"))
                    })?
                }
            };
            if json {
                println!("{}", json!({"case": key, "step": step, "count": n}));
            } else {
                println!("{n}");
            }
        }
        Command::Verify { db, seeds, max_deriv } => {
            let db = database::load(&db)?;
            if db.config.dimension < 4 {
                return Err(Error::Unsupported(format!(
                    "the oracle works in 4 dimensions; a dimension-{} database cannot be checked",
                    db.config.dimension
                ))
                .into());
            }
            let lorentzian = db.config.signature < 0;
            let mut bad = Vec::new();
            let mut reports = Vec::new();
            for &seed in &seeds {
                let g = PolyMetric::random(seed, max_deriv + 2, lorentzian);
                let mut eval = Evaluator::new(curvature_jet(&g, max_deriv)?);
                let r = check_rules(&mut eval, &db, max_deriv)?;
                if !json {
                    println!(
                        "seed {seed}: {} rules checked, {} skipped, {} nonzero",
                        r.checked,
                        r.skipped,
                        r.failures.len()
                    );
                }
                bad.extend(r.failures.iter().map(|id| format!("seed {seed}: rule for {id}")));
                reports.push(json!({
                    "seed": seed,
                    "checked": r.checked,
                    "skipped": r.skipped,
                    "failures": r.failures.iter().map(|id| id.to_string()).collect::<Vec<_>>(),
                }));
            }
            if json {
                println!("{}", json!({"ok": bad.is_empty(), "seeds": reports}));
            }
            if !bad.is_empty() {
                return Err(Failure::Verify(bad.join("\n")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Verify(msg)) => {
            eprintln!("verification failed:\n{msg}");
            ExitCode::from(4)
        }
    }
}
