use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use resurgia::borel::{g_integral, g_series, g_singularity_set, Route};
use resurgia::emsum::{
    abel_plana, direct_sum, em_classical, em_exact_with, em_log, em_transseries_with, optimal_order,
    stirling_exact, SummationReport, TransseriesOptions, DEFAULT_M_MAX,
};
use resurgia::funcs::{
    check_strip_hypothesis, parse_expr, singularities, Expr, Region, StripHypothesis,
};
use resurgia::qtop::{generating_series, ln_abs_rational, radius_probe_ln, Triple};
use resurgia::wkb::{verify_difference_equation, wkb_asymptotic_coeffs, wkb_solve};
use resurgia::{selftest, Error, Precision};

/// Exit status for malformed command lines.
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Serialize)]
#[command(name = "resurgia", version, about = "Exact Euler-Maclaurin summation and Borel kernels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Sum f(k/N) for k = 1..N with one of the exact or asymptotic formulas.
    Emsum(EmsumArgs),
    /// Evaluate the Borel kernel or list its singularities.
    #[command(subcommand)]
    Borel(BorelCommand),
    /// log(N!/N^N) from the Laplace form of Stirling's formula.
    Stirling(StirlingArgs),
    /// Solve y(x+ε) = a(x)·y(x).
    Wkb(WkbArgs),
    /// Quantum factorial sums of a triple (a, b, ε).
    Qtop(QtopArgs),
    /// Report the strip hypotheses and singularities of f.
    Check(CheckArgs),
    /// Run the acceptance suite.
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Mode {
    Exact,
    Classical,
    AbelPlana,
    Transseries,
    Log,
}

#[derive(Args, Serialize)]
struct EmsumArgs {
    /// Summand f(x); in log mode the regular part g of c·log x + g(x).
    #[arg(long = "f")]
    f: String,
    /// One or more comma-separated sizes.
    #[arg(long = "N", value_delimiter = ',', required = true)]
    n: Vec<u64>,
    #[arg(long, value_enum, default_value = "exact")]
    mode: Mode,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Highest correction order in transseries mode.
    #[arg(long, default_value_t = DEFAULT_M_MAX)]
    m_max: usize,
    /// Truncation order in classical mode (default: smallest omitted term).
    #[arg(long)]
    order: Option<usize>,
    /// Coefficient c of log x in log mode, as RE or RE,IM.
    #[arg(long, default_value = "1")]
    c: String,
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    #[arg(long)]
    csv: bool,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum BorelCommand {
    /// G_f(p) with its tail bound and the route used.
    Eval(BorelEvalArgs),
    /// Singularities of G_f within a radius, as CSV.
    Sing(BorelSingArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum RouteArg {
    Auto,
    Series,
    Integral,
}

#[derive(Args, Serialize)]
struct BorelEvalArgs {
    #[arg(long = "f")]
    f: String,
    /// RE or RE,IM.
    #[arg(long = "p", allow_hyphen_values = true)]
    p: String,
    #[arg(long, value_enum, default_value = "auto")]
    route: RouteArg,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Args, Serialize)]
struct BorelSingArgs {
    #[arg(long = "f")]
    f: String,
    #[arg(long, default_value_t = 40.0)]
    radius: f64,
}

#[derive(Args, Serialize)]
struct StirlingArgs {
    #[arg(long = "N")]
    n: u64,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Args, Serialize)]
struct WkbArgs {
    #[arg(long = "a")]
    a: String,
    /// RE or RE,IM.
    #[arg(long = "x", allow_hyphen_values = true)]
    x: String,
    #[arg(long)]
    eps: f64,
    /// Also list the formal coefficients F_0..F_K.
    #[arg(long)]
    coeffs: Option<usize>,
    /// Also report the difference-equation residual.
    #[arg(long)]
    verify: bool,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Args, Serialize)]
struct QtopArgs {
    /// Triple a,b,ε.
    #[arg(long = "t", allow_hyphen_values = true)]
    t: String,
    #[arg(long, default_value_t = 10)]
    roots: u32,
    #[arg(long, default_value_t = 20)]
    series: usize,
    /// Radius probe on the Borel-plane series.
    #[arg(long)]
    probe: bool,
    #[arg(long)]
    csv: bool,
}

#[derive(Args, Serialize)]
struct CheckArgs {
    #[arg(long = "f")]
    f: String,
}

#[derive(Args, Serialize)]
struct SelftestArgs {
    /// Comma-separated criterion numbers (default: all).
    #[arg(long, value_delimiter = ',')]
    only: Vec<u32>,
    #[arg(long, default_value_t = selftest::SEED)]
    seed: u64,
}

enum Output {
    Json(Value),
    Text(String),
}

/// A failed run, with whatever report explains it.
struct Failure {
    code: &'static str,
    message: String,
    exit: u8,
    report: Option<Value>,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let exit = if error.is_hypothesis() { 2 } else { 1 };
        let report = match &error {
            Error::Hypothesis { report, .. } => {
                Some(serde_json::to_value(report).expect("report serializes"))
            }
            _ => None,
        };
        Failure {
            code: error.code(),
            message: error.to_string(),
            exit,
            report,
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: "E_USAGE",
        message: msg.into(),
        exit: EXIT_USAGE,
        report: None,
    }
}

fn parse_complex(s: &str) -> Result<Complex64, Failure> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| usage(format!("`{s}` is not RE or RE,IM")));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(usage(format!("`{s}` is not RE or RE,IM"))),
    }
}

fn parse(src: &str) -> Result<Expr, Failure> {
    Ok(parse_expr(src)?)
}

fn check_tol(tol: f64) -> Result<(), Failure> {
    if !(tol > 0.0 && tol <= 1e-2) {
        return Err(usage(format!("tol = {tol} must lie in (0, 1e-2]")));
    }
    Ok(())
}

fn check_n(n: u64) -> Result<(), Failure> {
    if n == 0 {
        return Err(usage("N must be at least 1"));
    }
    Ok(())
}

fn c64(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn csv_rows(r: &SummationReport, out: &mut String) {
    let mut row = |term: &str, z: Complex64| {
        out.push_str(&format!("{},{},{:e},{:e}\n", r.n, term, z.re, z.im));
    };
    row("integral", r.integral_term);
    row("boundary", r.boundary_term);
    row("laplace", r.laplace_term);
    for t in &r.extra_terms {
        row(&t.name, t.value);
    }
    for c in &r.corrections {
        row(&format!("correction[{}+{}i;m={}]", c.lambda.re, c.lambda.im, c.m), c.value);
    }
    row("total", r.total);
    row("oracle", r.oracle);
    row("residual", Complex64::new(r.residual, 0.0));
}

fn emsum(a: &EmsumArgs, precision: Precision) -> Result<Output, Failure> {
    check_tol(a.tol)?;
    let f = parse(&a.f)?;
    let mut reports = vec![];
    let mut csv = String::from("N,term,value_re,value_im\n");
    for &n in &a.n {
        check_n(n)?;
        let report = match a.mode {
            Mode::Exact => em_exact_with(&f, n, a.tol, precision)?,
            Mode::Transseries => em_transseries_with(
                &f,
                n,
                a.tol,
                TransseriesOptions {
                    m_max: a.m_max,
                    precision,
                    main_only: false,
                },
            )?,
            Mode::Log => em_log(parse_complex(&a.c)?, &f, n, a.tol)?,
            Mode::Classical => {
                let order = match a.order {
                    Some(m) => m,
                    None => optimal_order(&f, n, 60)?,
                };
                let r = em_classical(&f, n, order)?;
                let oracle = direct_sum(&f, n)?;
                csv.push_str(&format!("{n},classical,{:e},{:e}\n", r.value.re, r.value.im));
                csv.push_str(&format!("{n},oracle,{:e},{:e}\n", oracle.re, oracle.im));
                reports.push(json!({
                    "N": n,
                    "value": c64(r.value),
                    "order": r.order,
                    "first_omitted": r.first_omitted,
                    "oracle": c64(oracle),
                    "residual": (r.value - oracle).norm(),
                }));
                continue;
            }
            Mode::AbelPlana => {
                let v = abel_plana(&f, n, a.tol)?;
                let oracle = direct_sum(&f, n)?;
                csv.push_str(&format!("{n},abel_plana,{:e},{:e}\n", v.re, v.im));
                csv.push_str(&format!("{n},oracle,{:e},{:e}\n", oracle.re, oracle.im));
                reports.push(json!({
                    "N": n,
                    "value": c64(v),
                    "oracle": c64(oracle),
                    "residual": (v - oracle).norm(),
                }));
                continue;
            }
        };
        csv_rows(&report, &mut csv);
        reports.push(serde_json::to_value(&report).expect("report serializes"));
    }
    if a.csv {
        return Ok(Output::Text(csv));
    }
    Ok(Output::Json(if reports.len() == 1 {
        reports.pop().expect("one report")
    } else {
        Value::Array(reports)
    }))
}

fn borel(cmd: &BorelCommand) -> Result<Output, Failure> {
    match cmd {
        BorelCommand::Eval(a) => {
            check_tol(a.tol)?;
            let f = parse(&a.f)?;
            let p = parse_complex(&a.p)?;
            let r = match a.route {
                RouteArg::Series => g_series(&f, p, a.tol)?,
                RouteArg::Integral => g_integral(&f, p, a.tol)?,
                RouteArg::Auto => match g_series(&f, p, a.tol) {
                    Ok(r) => r,
                    Err(Error::Convergence { .. }) => g_integral(&f, p, a.tol)?,
                    Err(e) => return Err(e.into()),
                },
            };
            Ok(Output::Json(json!({
                "p": c64(p),
                "value": c64(r.value),
                "tail_bound": r.tail_bound,
                "route": match r.route { Route::Series => "series", Route::Integral => "integral" },
            })))
        }
        BorelCommand::Sing(a) => {
            if !(a.radius > 0.0) {
                return Err(usage("radius must be positive"));
            }
            let set = g_singularity_set(&parse(&a.f)?, a.radius)?;
            let mut out = String::from("p_re,p_im,omega_re,omega_im,n,shifted\n");
            for s in &set.points {
                out.push_str(&format!(
                    "{:e},{:e},{:e},{:e},{},{}\n",
                    s.p.re, s.p.im, s.omega.re, s.omega.im, s.n, s.shifted
                ));
            }
            Ok(Output::Text(out))
        }
    }
}

fn stirling(a: &StirlingArgs) -> Result<Output, Failure> {
    check_tol(a.tol)?;
    check_n(a.n)?;
    let value = stirling_exact(a.n, a.tol)?;
    let fact = log_factorial(a.n) - a.n as f64 * (a.n as f64).ln();
    Ok(Output::Json(json!({
        "N": a.n,
        "value": value,
        "log_factorial_ratio": fact,
        "difference": value - fact,
    })))
}

/// `log N!` by summing logarithms.
fn log_factorial(n: u64) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

fn wkb(a: &WkbArgs) -> Result<Output, Failure> {
    check_tol(a.tol)?;
    if !(a.eps > 0.0) {
        return Err(usage("eps must be positive"));
    }
    let f = parse(&a.a)?;
    let x = parse_complex(&a.x)?;
    let sol = wkb_solve(&f, x, a.eps, a.tol)?;
    let mut out = json!({ "solution": sol });
    if let Some(k) = a.coeffs {
        out["asymptotics"] = serde_json::to_value(wkb_asymptotic_coeffs(&f, x, k)?).expect("serializes");
    }
    if a.verify {
        out["residual"] = json!(verify_difference_equation(&f, x, a.eps, a.tol)?);
    }
    Ok(Output::Json(out))
}

fn qtop(a: &QtopArgs) -> Result<Output, Failure> {
    let parts: Vec<i64> = a
        .t
        .split(',')
        .map(|s| s.trim().parse::<i64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("`{}` is not a,b,eps", a.t)))?;
    let [ta, tb, te] = parts[..] else {
        return Err(usage(format!("`{}` is not a,b,eps", a.t)));
    };
    let t = Triple::new(ta, tb, te)?;
    let data = generating_series(t, a.roots, a.series)?;
    if a.csv {
        let mut out = String::from("series,index,value_re,value_im\n");
        for (n, z) in data.l_np.iter().enumerate() {
            out.push_str(&format!("l_np,{n},{:e},{:e}\n", z.re, z.im));
        }
        for (n, c) in data.formal.coeffs.iter().enumerate() {
            out.push_str(&format!("formal,{n},{c},0\n"));
        }
        for (n, c) in data.l_p.coeffs.iter().enumerate() {
            out.push_str(&format!("l_p,{n},{c},0\n"));
        }
        return Ok(Output::Text(out));
    }
    let mut out = json!({ "data": data });
    if a.probe {
        let logs: Vec<f64> = data.l_p.coeffs.iter().map(ln_abs_rational).collect();
        out["probe"] = serde_json::to_value(radius_probe_ln(&logs)?).expect("serializes");
    }
    Ok(Output::Json(out))
}

fn check(a: &CheckArgs) -> Result<Output, Failure> {
    let f = parse(&a.f)?;
    let a1 = check_strip_hypothesis(&f, StripHypothesis::A1);
    let a2 = check_strip_hypothesis(&f, StripHypothesis::A2);
    let sing = singularities(&f, Region::strip())?;
    let out = json!({ "A1": a1, "A2": a2, "strip_singularities": sing });
    if !a2.holds {
        return Err(Failure {
            code: "E_HYPOTHESIS",
            message: format!("hypothesis A2 violated: {}", a2.summary()),
            exit: 2,
            report: Some(out),
        });
    }
    Ok(Output::Json(out))
}

fn selftest_cmd(a: &SelftestArgs) -> Result<Output, Failure> {
    let results = selftest::run(&a.only, a.seed);
    for r in &results {
        eprintln!("{}", r.line());
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    let out = json!({ "criteria": results, "failed": failed });
    if failed > 0 {
        return Err(Failure {
            code: "E_SELFTEST",
            message: format!("{failed} criteria failed"),
            exit: 1,
            report: Some(out),
        });
    }
    Ok(Output::Json(out))
}

fn envelope(cli: &Cli, precision: Precision) -> Value {
    json!({
        "tool": "resurgia",
        "version": env!("CARGO_PKG_VERSION"),
        "config": {
            "command": cli.command,
            "precision_digits": precision.digits,
        },
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let precision = Precision::from_env();
    let result = match &cli.command {
        Command::Emsum(a) => emsum(a, precision),
        Command::Borel(c) => borel(c),
        Command::Stirling(a) => stirling(a),
        Command::Wkb(a) => wkb(a),
        Command::Qtop(a) => qtop(a),
        Command::Check(a) => check(a),
        Command::Selftest(a) => selftest_cmd(a),
    };
    let mut doc = envelope(&cli, precision);
    match result {
        Ok(Output::Text(s)) => {
            print!("{s}");
            ExitCode::SUCCESS
        }
        Ok(Output::Json(v)) => {
            doc["result"] = v;
            println!("{}", serde_json::to_string_pretty(&doc).expect("serializes"));
            ExitCode::SUCCESS
        }
        Err(f) => {
            let mut err = json!({ "code": f.code, "message": f.message });
            if let Some(report) = f.report {
                err["report"] = report;
            }
            doc["error"] = err;
            println!("{}", serde_json::to_string_pretty(&doc).expect("serializes"));
            ExitCode::from(f.exit)
        }
    }
}
