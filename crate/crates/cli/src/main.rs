//! `muspark`: parse, check, run and verify µSPARK programs.

mod report;

use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use muspark::borrowck::{analyze, CheckerConfig, Mutation, PermUpdates};
use muspark::interp::{self, Outcome, RunConfig, Trace};
use muspark::oracle::{fuzz_soundness, lockstep_verify, FuzzConfig, VerifyConfig};
use muspark::syntax::pretty_print;
use muspark::{check_program, parse_source, Diagnostic, Program};

use report::{run_body, Body, Report, Snapshot};

#[derive(Parser)]
#[command(name = "muspark", version, about = "Parser, alias checker and interpreter for µSPARK")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Output {
    /// Print a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Never use ANSI colors.
    #[arg(long, global = true)]
    no_color: bool,
}

#[derive(Args, Clone)]
struct CheckerArgs {
    /// Inject a checker defect (for testing the oracle).
    #[arg(long)]
    mutation: Option<Mutation>,
    /// Apply move and borrow updates as written instead of only restricting.
    #[arg(long)]
    literal_updates: bool,
}

impl CheckerArgs {
    fn config(&self) -> CheckerConfig {
        CheckerConfig {
            mutation: self.mutation,
            updates: if self.literal_updates { PermUpdates::Literal } else { PermUpdates::Meet },
            ..Default::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse a file and print it back.
    Parse { file: PathBuf, #[command(flatten)] out: Output },
    /// Parse and typecheck.
    Typecheck { file: PathBuf, #[command(flatten)] out: Output },
    /// Parse, typecheck and run the permission checker.
    Check {
        file: PathBuf,
        /// Print the permission environment at every program point.
        #[arg(long)]
        dump_perms: bool,
        #[command(flatten)]
        checker: CheckerArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Execute a program with a fixed vector of branch choices.
    Run {
        file: PathBuf,
        /// Branch choices as a string of 0 and 1, consumed left to right.
        #[arg(long, default_value = "")]
        choices: String,
        #[arg(long, default_value_t = 10_000)]
        steps: u64,
        /// Print memory at every checkpoint.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Run every execution up to a choice depth and check aliasing against the checker.
    Verify {
        file: PathBuf,
        #[arg(long, default_value_t = 12)]
        depth: usize,
        #[arg(long, default_value_t = 10_000)]
        steps: u64,
        #[command(flatten)]
        checker: CheckerArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Generate programs and verify the accepted ones.
    Fuzz {
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, env = "MUSPARK_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 12)]
        depth: usize,
        #[arg(long, default_value_t = 10_000)]
        steps: u64,
        /// Stop at the first violation.
        #[arg(long)]
        first: bool,
        #[arg(long)]
        no_shrink: bool,
        #[command(flatten)]
        checker: CheckerArgs,
        #[command(flatten)]
        out: Output,
    },
}

/// Failure that maps to exit code 2.
struct Usage(String);

fn read(file: &Path) -> Result<String, Usage> {
    std::fs::read_to_string(file).map_err(|e| Usage(format!("cannot read {}: {e}", file.display())))
}

fn parse(src: &str) -> Result<Program, Diagnostic> {
    parse_source(src).map_err(|e| Diagnostic::from_parse_error(&e))
}

struct Printer {
    color: bool,
}

impl Printer {
    fn new(out: &Output) -> Self {
        Printer { color: !out.no_color && std::io::stdout().is_terminal() }
    }

    fn diag(&self, file: &Path, d: &Diagnostic) {
        let head = format!("error[{}]", d.rule);
        let head = if self.color { format!("\x1b[1;31m{head}\x1b[0m") } else { head };
        println!("{}:{}: {head}: {}", file.display(), d.location, d.message);
    }

    fn verdict(&self, ok: bool, text: &str) {
        let text = match (self.color, ok) {
            (false, _) => text.to_string(),
            (true, true) => format!("\x1b[32m{text}\x1b[0m"),
            (true, false) => format!("\x1b[31m{text}\x1b[0m"),
        };
        println!("{text}");
    }
}

fn emit_json(report: &Report) {
    println!("{}", serde_json::to_string_pretty(report).expect("reports serialize"));
}

fn diagnostics_report(cmd: &str, file: &Path, out: &Output, diags: Vec<Diagnostic>, snapshots: Vec<Snapshot>, ast: Option<String>) -> u8 {
    let accepted = diags.is_empty();
    if out.json {
        let body = Body::Diagnostics { accepted, diagnostics: diags, snapshots, ast };
        emit_json(&Report::new(cmd, Some(&file.display().to_string()), body));
    } else {
        let p = Printer::new(out);
        if let Some(ast) = ast {
            // Parse output is source text, so it can be fed back in.
            print!("{ast}");
            return 0;
        }
        for s in &snapshots {
            println!("[{}]", s.point);
            for line in &s.perms {
                println!("  {line}");
            }
        }
        for d in &diags {
            p.diag(file, d);
        }
        if accepted {
            p.verdict(true, &format!("{}: ok", file.display()));
        } else {
            p.verdict(false, &format!("{}: {} error(s)", file.display(), diags.len()));
        }
    }
    u8::from(!accepted)
}

fn execute(cmd: Command) -> Result<u8, Usage> {
    match cmd {
        Command::Parse { file, out } => {
            let src = read(&file)?;
            Ok(match parse(&src) {
                Ok(p) => diagnostics_report("parse", &file, &out, Vec::new(), Vec::new(), Some(pretty_print(&p))),
                Err(d) => diagnostics_report("parse", &file, &out, vec![d], Vec::new(), None),
            })
        }
        Command::Typecheck { file, out } => {
            let src = read(&file)?;
            let diags = match parse(&src) {
                Ok(p) => {
                    let mut d = muspark::syntax::check_legality(&p);
                    d.extend(check_program(&p).diagnostics);
                    d
                }
                Err(d) => vec![d],
            };
            Ok(diagnostics_report("typecheck", &file, &out, diags, Vec::new(), None))
        }
        Command::Check { file, dump_perms, checker, out } => {
            let src = read(&file)?;
            let program = match parse(&src) {
                Ok(p) => p,
                Err(d) => return Ok(diagnostics_report("check", &file, &out, vec![d], Vec::new(), None)),
            };
            let a = analyze(&program, &checker.config());
            let snapshots = if dump_perms {
                a.report
                    .snapshots
                    .iter()
                    .map(|(point, env)| Snapshot { point: point.to_string(), perms: env.dump_lines() })
                    .collect()
            } else {
                Vec::new()
            };
            Ok(diagnostics_report("check", &file, &out, a.report.diagnostics, snapshots, None))
        }
        Command::Run { file, choices, steps, trace, out } => {
            let src = read(&file)?;
            let choices = parse_choices(&choices)?;
            let program = parse(&src).map_err(|d| Usage(format!("{}: {d}", file.display())))?;
            let checked = check_program(&program);
            let mut errors = muspark::syntax::check_legality(&program);
            errors.extend(checked.diagnostics.iter().cloned());
            if let Some(d) = errors.first() {
                return Err(Usage(format!("{}: cannot run an ill-formed program: {d}", file.display())));
            }
            let cfg = RunConfig { step_budget: steps, ..Default::default() };
            let mut t = Trace::default();
            let result = interp::run(&checked, &choices, &cfg, &mut t);
            let dump = trace.then(|| t.dump());
            let code = u8::from(result.outcome != Outcome::Completed);
            if out.json {
                emit_json(&Report::new("run", Some(&file.display().to_string()), run_body(&result, dump)));
            } else {
                if let Some(d) = dump {
                    print!("{d}");
                }
                print!("{}", interp::dump_frame(&result.final_frame));
                let p = Printer::new(&out);
                match &result.outcome {
                    Outcome::Completed => p.verdict(true, &format!("completed in {} steps", result.steps)),
                    Outcome::Stopped(s) => p.verdict(false, &format!("stopped: {s}")),
                }
            }
            Ok(code)
        }
        Command::Verify { file, depth, steps, checker, out } => {
            let src = read(&file)?;
            let program = parse(&src).map_err(|d| Usage(format!("{}: {d}", file.display())))?;
            let a = analyze(&program, &checker.config());
            if !a.checked.is_well_typed() {
                return Err(Usage(format!("{}: program is ill-typed", file.display())));
            }
            let cfg = VerifyConfig { depth, run: RunConfig { step_budget: steps, ..Default::default() }, ..Default::default() };
            let r = lockstep_verify(&a, &cfg);
            let code = u8::from(!r.is_clean());
            if out.json {
                emit_json(&Report::new("verify", Some(&file.display().to_string()), Body::Verify(r)));
            } else {
                let p = Printer::new(&out);
                if !r.applicable {
                    p.verdict(true, &format!("{}: not applicable, the checker rejects the program", file.display()));
                    return Ok(0);
                }
                for v in &r.violations {
                    println!("{v}");
                }
                let summary = format!(
                    "{} execution(s): {} completed, {} truncated, {} null dereference(s), {} violation(s)",
                    r.executions,
                    r.completed,
                    r.truncated,
                    r.null_dereferences,
                    r.violations.len()
                );
                p.verdict(r.is_clean(), &summary);
            }
            Ok(code)
        }
        Command::Fuzz { count, seed, depth, steps, first, no_shrink, checker, out } => {
            let mut cfg = FuzzConfig { stop_at_first: first, shrink: !no_shrink, ..Default::default() };
            cfg.gen.checker = checker.config();
            cfg.verify.depth = depth;
            cfg.verify.run.step_budget = steps;
            let mut r = fuzz_soundness(count, seed, &cfg);
            let code = u8::from(!r.is_clean());
            if out.json {
                // Timing is the only part of the report that is not a function of the inputs.
                r.elapsed_ms = 0;
                emit_json(&Report::new("fuzz", None, Body::Fuzz(r)));
            } else {
                for f in &r.findings {
                    println!("program {} (seed {}): {}", f.index, f.seed, f.violation);
                    println!("{}", f.shrunk_source.as_deref().unwrap_or(&f.source));
                }
                let p = Printer::new(&out);
                p.verdict(
                    r.is_clean(),
                    &format!(
                        "{} programs: {} accepted, {} rejected, {} executions, {} truncated, {} violation(s)",
                        r.programs, r.accepted, r.rejected, r.executions, r.truncated, r.violations
                    ),
                );
            }
            Ok(code)
        }
    }
}

fn parse_choices(s: &str) -> Result<Vec<bool>, Usage> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Usage(format!("--choices takes only 0 and 1, found `{c}`"))),
        })
        .collect()
}

fn main() -> ExitCode {
    // Exit quietly when stdout is a closed pipe (`muspark ... | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Usage(msg)) => {
            eprintln!("muspark: {msg}");
            ExitCode::from(2)
        }
    }
}
