use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use ordconv::algebra::{ap_norm_with, gelfand_transform, lp_norm_with, order_convolve, AlgebraParams};
use ordconv::dsl::parse_function;
use ordconv::multiplier::{classify_with, witness_search, ClassifyOptions, Verdict};
use ordconv::oracle::QuadConfig;
use ordconv::random::DEFAULT_SEED;
use ordconv::scalar::{parse_rational, rational_to_f64};
use ordconv::scenario::{parse_params, run_scenario};
use ordconv::{Error, ExactFn, Extended, Rational};

/// Order-convolution algebra toolkit: evaluation, convolution, norms and
/// multiplier classification for piecewise power-log functions.
#[derive(Parser, Debug)]
#[command(name = "ordconv", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Emit a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Relative tolerance for quadrature.
    #[arg(long, global = true, default_value_t = ordconv::oracle::DEFAULT_REL_TOL)]
    tol: f64,
    /// Seed for randomized scenarios.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads for parallel sections.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a function at a point.
    Eval {
        #[arg(long = "fn")]
        function: String,
        #[arg(long)]
        at: String,
    },
    /// Order convolution f * g.
    Convolve {
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
    },
    /// Gelfand transform: the antiderivative from 0.
    Transform {
        #[arg(long = "fn")]
        function: String,
    },
    /// L_p norm, or the A_p norm with --ap.
    Norm {
        #[arg(long = "fn")]
        function: String,
        #[arg(long)]
        p: String,
        #[arg(long)]
        ap: bool,
    },
    /// Classify M_phi as an (A_r, A_p) multiplier.
    Classify {
        #[arg(long)]
        phi: String,
        #[arg(long)]
        r: String,
        #[arg(long)]
        p: String,
        /// Skip the operator-norm lower bound.
        #[arg(long)]
        no_lower_bound: bool,
    },
    /// Search for f in A_r with phi f^ outside L_p.
    Witness {
        #[arg(long)]
        phi: String,
        #[arg(long)]
        r: String,
        #[arg(long)]
        p: String,
    },
    /// Run a built-in check.
    Scenario {
        #[arg(long)]
        id: String,
        /// Overrides as key=value pairs separated by commas.
        #[arg(long, default_value = "")]
        params: String,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Eval { .. } => "eval",
            Command::Convolve { .. } => "convolve",
            Command::Transform { .. } => "transform",
            Command::Norm { .. } => "norm",
            Command::Classify { .. } => "classify",
            Command::Witness { .. } => "witness",
            Command::Scenario { .. } => "scenario",
        }
    }
}

struct Outcome {
    report: Value,
    text: String,
    code: u8,
}

fn parse_fn(flag: &str, text: &str) -> Result<ExactFn, Error> {
    parse_function(text).map_err(|e| Error::InvalidParameter(format!("--{flag}: {e}")))
}

fn parse_ext(flag: &str, text: &str) -> Result<Extended, Error> {
    text.parse()
        .map_err(|e| Error::InvalidParameter(format!("--{flag}: {e}")))
}

fn fn_value(f: &ExactFn) -> Value {
    json!({ "dsl": f.to_string(), "json": f })
}

fn run(cmd: &Command, g: &Global) -> Result<Outcome, Error> {
    let cfg = QuadConfig {
        rel_tol: g.tol,
        ..QuadConfig::default()
    };
    let ok = |report: Value, text: String| Outcome { report, text, code: 0 };
    match cmd {
        Command::Eval { function, at } => {
            let f = parse_fn("fn", function)?;
            let x: Rational = parse_rational(at)?;
            if x <= Rational::from_integer(0.into()) {
                return Err(Error::InvalidParameter("--at must be positive".into()));
            }
            let approx = f.evaluate(rational_to_f64(&x));
            let exact = f.evaluate_exact(&x).ok().map(|q| q.to_string());
            let text = match &exact {
                Some(q) => format!("f({x}) = {q} ~ {approx}"),
                None => format!("f({x}) ~ {approx}"),
            };
            Ok(ok(
                json!({ "fn": fn_value(&f), "at": x.to_string(), "value": approx, "exact": exact }),
                text,
            ))
        }
        Command::Convolve { f, g: gs } => {
            let (f, h) = (parse_fn("f", f)?, parse_fn("g", gs)?);
            let out = order_convolve(&f, &h)?;
            Ok(ok(
                json!({ "f": fn_value(&f), "g": fn_value(&h), "result": fn_value(&out) }),
                format!("f * g = {out}"),
            ))
        }
        Command::Transform { function } => {
            let f = parse_fn("fn", function)?;
            let out = gelfand_transform(&f)?;
            Ok(ok(
                json!({ "fn": fn_value(&f), "result": fn_value(&out) }),
                format!("f^ = {out}"),
            ))
        }
        Command::Norm { function, p, ap } => {
            let f = parse_fn("fn", function)?;
            let pe = parse_ext("p", p)?;
            let n = if *ap {
                ap_norm_with(&f, &pe, &cfg)?
            } else {
                lp_norm_with(&f, &pe, &cfg)
            };
            let mut report = serde_json::to_value(&n).map_err(internal)?;
            let obj = report.as_object_mut().expect("norm serializes as a map");
            obj.insert("fn".into(), fn_value(&f));
            obj.insert("p".into(), json!(pe.to_string()));
            obj.insert("ap".into(), json!(ap));
            let label = if *ap {
                format!("|||f|||_{pe}")
            } else {
                format!("||f||_{pe}")
            };
            let text = match &n.divergence {
                Some(d) => format!("{label} = inf ({d})"),
                None => format!("{label} = {} ({:?}, error <= {:e})", n.value, n.method, n.error_bound),
            };
            Ok(ok(report, text))
        }
        Command::Classify {
            phi,
            r,
            p,
            no_lower_bound,
        } => {
            let phi = parse_fn("phi", phi)?;
            let params = AlgebraParams::new(parse_ext("r", r)?, parse_ext("p", p)?)?;
            let opts = ClassifyOptions {
                pool: None,
                lower_bound: !no_lower_bound,
            };
            let rep = classify_with(&phi, &params, &opts)?;
            let mut text = format!("verdict: {:?} (r = {}, p = {})\n", rep.verdict, params.r, params.p);
            for c in rep.conditions() {
                text.push_str(&format!(
                    "  [{:?}] {} ({:?}): {}\n",
                    c.status, c.name, c.kind, c.evidence.text
                ));
            }
            if let Some(w) = &rep.witness {
                text.push_str(&format!(
                    "  witness alpha = {}: phi f^ fails at {}\n",
                    w.alpha, w.failure
                ));
            }
            if let Some(u) = rep.norm_upper_bound {
                text.push_str(&format!("  ||M_phi|| <= {u}\n"));
            }
            if let Some(l) = rep.norm_lower_bound {
                text.push_str(&format!("  ||M_phi|| >= {l}\n"));
            }
            let code = if rep.verdict == Verdict::Undetermined { 2 } else { 0 };
            let mut report = serde_json::to_value(&rep).map_err(internal)?;
            report
                .as_object_mut()
                .expect("report serializes as a map")
                .insert("phi".into(), fn_value(&phi));
            Ok(Outcome {
                report,
                text: text.trim_end().to_string(),
                code,
            })
        }
        Command::Witness { phi, r, p } => {
            let phi = parse_fn("phi", phi)?;
            let params = AlgebraParams::new(parse_ext("r", r)?, parse_ext("p", p)?)?;
            let w = witness_search(&phi, &params);
            let text = match &w {
                Some(w) => format!(
                    "alpha = {}\nf = {}\nf^ = {}\nphi f^ not in L_p: {}",
                    w.alpha, w.f, w.fhat, w.failure
                ),
                None => "no witness in the f_alpha family".to_string(),
            };
            Ok(ok(
                json!({ "phi": fn_value(&phi), "params": params, "witness": w }),
                text,
            ))
        }
        Command::Scenario { id, params } => {
            let overrides = parse_params(params)?;
            let rep = run_scenario(id, &overrides, g.seed, &cfg)?;
            let mut text = format!(
                "scenario {} (seed {}): {}\n",
                rep.id,
                rep.seed,
                if rep.passed { "PASS" } else { "FAIL" }
            );
            for a in &rep.assertions {
                text.push_str(&format!(
                    "  [{}] {}: {}\n",
                    if a.passed { "PASS" } else { "FAIL" },
                    a.name,
                    a.detail
                ));
            }
            let code = if rep.passed { 0 } else { 1 };
            Ok(Outcome {
                report: serde_json::to_value(&rep).map_err(internal)?,
                text: text.trim_end().to_string(),
                code,
            })
        }
    }
}

fn internal(e: serde_json::Error) -> Error {
    Error::Internal(e.to_string())
}

fn with_command(name: &str, report: Value) -> Value {
    let mut out = Map::new();
    out.insert("command".into(), json!(name));
    match report {
        Value::Object(m) => out.extend(m),
        other => {
            out.insert("result".into(), other);
        }
    }
    Value::Object(out)
}

fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let g = &cli.global;
    if g.threads == 0 {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(1);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(g.threads).build_global() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let name = cli.command.name();
    match run(&cli.command, g) {
        Ok(out) => {
            if g.json {
                let v = with_command(name, out.report);
                emit(&serde_json::to_string_pretty(&v).expect("serializable"));
            } else {
                emit(&out.text);
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            if g.json {
                let v = json!({ "command": name, "error": e.to_string() });
                emit(&serde_json::to_string_pretty(&v).expect("serializable"));
            }
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
