use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use invofactor::algebra::{acceptable, Acceptability, Field, QuadPoly, Scalar};
use invofactor::factorize::certificate::{verify_certificate, Certificate};
use invofactor::factorize::classify::{classify3, Flavor};
use invofactor::factorize::pipeline::{factor_four, factor_three, PipelineOptions};
use invofactor::factorize::scalar::scalar_triple_2x2;
use invofactor::factorize::shift_pair::shift_pair;
use invofactor::glsearch::{census, lambda_stable_search, product_membership, Budget};
use invofactor::linalg::Mat;
use invofactor::modulestruct::build_strat_periodic;
use invofactor::opcore::{RepAut, Window, WindowSpec};
use invofactor::Error;

#[derive(Debug, Parser)]
#[command(name = "invofactor", version, about = "Factor automorphisms into quadratic factors and verify certificates")]
struct Cli {
    /// Worker threads for window checks and searches (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Factor an operator into three or four quadratic factors.
    Factor {
        #[arg(long)]
        input: PathBuf,
        /// Semicolon-separated annihilators, e.g. "t^2-1;t^2-1;t^2-1".
        #[arg(long)]
        polys: String,
        /// Expected field tag (F<p> or Q); must match the operator.
        #[arg(long)]
        field: Option<String>,
        #[arg(long, default_value_t = 32)]
        window: i64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// First pairing seed for the dominant-eigenvalue killer.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        qmax: usize,
    },
    /// Re-check a certificate against an operator.
    Verify {
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        cert: PathBuf,
        #[arg(long, default_value_t = 64)]
        window: i64,
        /// Write the full JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Decide whether a matrix is a product of factors annihilated by the given polynomials.
    Search {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        q: u64,
        #[arg(long)]
        polys: String,
        /// Matrix JSON, inline or as a file path.
        #[arg(long)]
        target: String,
        /// Search for `A ⊕ λI_q` instead, with `q ≤ qmax`.
        #[arg(long)]
        lambda: Option<String>,
        #[arg(long, default_value_t = 8)]
        qmax: usize,
    },
    /// Count products of k factors by determinant.
    Census {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        q: u64,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value = "t^2-1")]
        poly: String,
        /// Save the census file in this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Acceptability of a scalar for a triple.
    Acceptable {
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        field: String,
        #[arg(long)]
        polys: String,
    },
    /// Decide the three-factor involution/unipotent classifications.
    Classify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "involutions")]
        flavor: String,
    },
    /// Build and dump a stratification of a shift-free operator.
    Strata {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 4)]
        support: usize,
        #[arg(long, default_value_t = 2)]
        backtrack: usize,
    },
    /// Run the worked examples.
    Demo,
}

/// Command failure carrying the exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match &e {
            Error::Refused(_) | Error::NotAcceptable | Error::BuilderStuck(_) | Error::UnsupportedField(_) => 2,
            Error::VerificationFailed(_) => 3,
            Error::BudgetExceeded(_) => 4,
            _ => 1,
        };
        let message = match &e {
            Error::Refused(r) => json!({ "status": "refused", "reason": r.code(), "detail": r.detail() }).to_string(),
            Error::NotAcceptable => json!({ "status": "refused", "reason": "NotAcceptable", "detail": e.to_string() }).to_string(),
            Error::BuilderStuck(s) => json!({ "status": "refused", "reason": "BuilderStuck", "detail": s }).to_string(),
            Error::UnsupportedField(s) => json!({ "status": "refused", "reason": "UnsupportedField", "detail": s }).to_string(),
            _ => e.to_string(),
        };
        Failure { code, message }
    }
}

fn malformed(msg: impl Into<String>) -> Failure {
    Failure { code: 1, message: msg.into() }
}

type CmdResult = std::result::Result<(), Failure>;

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| malformed(format!("{}: {e}", path.display())))
}

fn load_op(path: &Path) -> std::result::Result<RepAut, Failure> {
    Ok(RepAut::from_json_str(&read(path)?)?)
}

fn parse_polys(s: &str, f: Field) -> std::result::Result<Vec<QuadPoly>, Failure> {
    Ok(s.split(';').map(str::trim).filter(|p| !p.is_empty()).map(|p| QuadPoly::parse(p, f)).collect::<Result<Vec<_>, _>>()?)
}

fn write_json(path: &Path, v: &serde_json::Value) -> CmdResult {
    let s = serde_json::to_string_pretty(v).map_err(|e| malformed(e.to_string()))?;
    fs::write(path, s).map_err(|e| malformed(format!("{}: {e}", path.display())))
}

fn window_spec(radius: i64) -> std::result::Result<WindowSpec, Failure> {
    if radius <= 0 {
        return Err(malformed("window radius must be positive"));
    }
    Ok(WindowSpec::from_radius(radius))
}

fn factor(
    input: &Path,
    polys: &str,
    field: Option<&str>,
    window: i64,
    out: Option<&Path>,
    seed: u64,
    qmax: usize,
) -> CmdResult {
    let u = load_op(input)?;
    if let Some(tag) = field {
        let expected: Field = tag.parse()?;
        if expected != u.field() {
            return Err(Error::FieldMismatch(expected.tag(), u.field().tag()).into());
        }
    }
    let ps = parse_polys(polys, u.field())?;
    let opts = PipelineOptions { qmax, seed, budget: Budget::from_env()?, window: window_spec(window)?, ..Default::default() };
    let cert = match ps.as_slice() {
        [a, b, c] => factor_three(&u, [a, b, c], &opts)?,
        [a, b, c, d] => factor_four(&u, [a, b, c, d], &opts)?,
        _ => return Err(malformed(format!("expected 3 or 4 polynomials, got {}", ps.len()))),
    };
    let v = cert.to_json()?;
    match out {
        Some(p) => write_json(p, &v)?,
        None => println!("{}", serde_json::to_string_pretty(&v).map_err(|e| malformed(e.to_string()))?),
    }
    let branch = cert.provenance.get("branch").and_then(|b| b.as_str()).unwrap_or("?");
    eprintln!(
        "factored into {} factors ({branch}); {} checks passed",
        cert.factors.len(),
        cert.report.checks.len()
    );
    Ok(())
}

fn verify(op: &Path, cert: &Path, window: i64, report_path: Option<&Path>) -> CmdResult {
    let u = load_op(op)?;
    let cert = Certificate::from_json_str(&read(cert)?)?;
    let w = Window::for_aut(&u, &window_spec(window)?);
    let report = verify_certificate(&u, &cert, &w);
    for c in &report.checks {
        let status = if c.passed() { "ok" } else { "FAIL" };
        println!("{status:4} {} ({} checked, {} failed)", c.check, c.checked, c.failed);
        if let Some(f) = c.first_failure() {
            let at = f.index.as_ref().map(|i| i.to_string()).unwrap_or_else(|| "-".into());
            println!("     first failure at {at}: {}", f.detail);
        }
    }
    if let Some(p) = report_path {
        write_json(p, &serde_json::to_value(&report).map_err(|e| malformed(e.to_string()))?)?;
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure { code: 3, message: "certificate failed verification".into() })
    }
}

fn load_matrix(s: &str) -> std::result::Result<Mat, Failure> {
    let text = if Path::new(s).exists() { read(Path::new(s))? } else { s.to_string() };
    serde_json::from_str(&text).map_err(|e| malformed(format!("target matrix: {e}")))
}

fn search(n: usize, q: u64, polys: &str, target: &str, lambda: Option<&str>, qmax: usize) -> CmdResult {
    let f = Field::prime(q)?;
    let ps = parse_polys(polys, f)?;
    let t = load_matrix(target)?;
    if t.field() != f {
        return Err(Error::FieldMismatch(f.tag(), t.field().tag()).into());
    }
    let budget = Budget::from_env()?;
    if let Some(l) = lambda {
        let lambda: Scalar = f.parse(l)?;
        let [a, b, c]: [QuadPoly; 3] = ps.try_into().map_err(|_| malformed("λ-stable search takes three polynomials"))?;
        match lambda_stable_search(&t, &lambda, &[a, b, c], qmax, &budget)? {
            Some(hit) => {
                println!("member at q = {}", hit.q);
                for (k, m) in hit.factors.iter().enumerate() {
                    println!("factor {}:\n{m}", k + 1);
                }
            }
            None => println!("not a member for any q <= {qmax}"),
        }
        return Ok(());
    }
    if t.rows() != n || t.cols() != n {
        return Err(malformed(format!("target is {}x{}, expected {n}x{n}", t.rows(), t.cols())));
    }
    match product_membership(&t, &ps, &budget)? {
        Some(w) => {
            println!("member");
            for (k, m) in w.iter().enumerate() {
                println!("factor {}:\n{m}", k + 1);
            }
        }
        None => println!("not a member"),
    }
    Ok(())
}

fn run_census(n: usize, q: u64, k: u32, poly: &str, out: Option<&Path>) -> CmdResult {
    let f = Field::prime(q)?;
    let p = QuadPoly::parse(poly, f)?;
    let c = census(n, k, &p, &Budget::from_env()?)?;
    println!("det exact cumulative");
    for d in &c.counts {
        println!("{:>3} {:>5} {:>10}", d.det, d.exact, d.cumulative);
    }
    println!("total {} {}", c.total_exact(), c.total_cumulative());
    if let Some(dir) = out {
        let path = c.save(dir)?;
        println!("saved {}", path.display());
    }
    Ok(())
}

fn run_acceptable(lambda: &str, field: &str, polys: &str) -> CmdResult {
    let f: Field = field.parse()?;
    let ps = parse_polys(polys, f)?;
    let [a, b, c] = ps.as_slice() else {
        return Err(malformed("acceptability takes three polynomials"));
    };
    match acceptable(&f.parse(lambda)?, [a, b, c])? {
        Acceptability::ProductOfRoots { witness } => {
            let w: Vec<String> = witness.iter().map(|x| x.to_string()).collect();
            println!("ProductOfRoots {}", w.join(" "));
        }
        other => println!("{}", other.name()),
    }
    Ok(())
}

fn run_classify(input: &Path, flavor: &str) -> CmdResult {
    let u = load_op(input)?;
    let d = classify3(&u, flavor.parse::<Flavor>()?)?;
    match &d.condition {
        None => println!("Product"),
        Some(c) => println!("NotProduct {c}"),
    }
    for r in &d.reasons {
        println!("  {r}");
    }
    Ok(())
}

fn run_strata(input: &Path, support: usize, backtrack: usize) -> CmdResult {
    let u = load_op(input)?;
    let s = build_strat_periodic(&u, support, backtrack)?;
    println!("{}", serde_json::to_string_pretty(&s).map_err(|e| malformed(e.to_string()))?);
    Ok(())
}

fn demo() -> CmdResult {
    let f5 = Field::prime(5)?;
    let inv = QuadPoly::parse("t^2-1", f5)?;
    println!("scalar triple, λ = 2 over F5, three t^2-1:");
    for (name, m) in ["A", "B", "C"].iter().zip(scalar_triple_2x2(&f5.from_i64(2), [&inv, &inv, &inv])?) {
        println!("{name} =\n{m}");
    }
    let f7 = Field::prime(7)?;
    let inv7 = QuadPoly::parse("t^2-1", f7)?;
    for (l, f, p) in [(1, f5, &inv), (2, f5, &inv), (3, f7, &inv7)] {
        println!("acceptable(λ = {l} over {}) = {}", f.tag(), acceptable(&f.from_i64(l), [p, p, p])?.name());
    }
    let (a, b) = shift_pair(&inv, &inv)?;
    println!("shift pair for (t^2-1, t^2-1): {} and {}", a.spec(), b.spec());
    let opts = PipelineOptions::default();
    let shift = RepAut::shift(f5);
    let cert = factor_three(&shift, [&inv, &inv, &inv], &opts)?;
    println!("shift = product of {} involutions; window report passed: {}", cert.factors.len(), cert.report.passed());
    match factor_three(&RepAut::scalar(&f7.from_i64(3))?, [&inv7, &inv7, &inv7], &opts) {
        Err(Error::Refused(r)) => println!("3·id over F7: refused ({})", r.code()),
        Ok(_) => println!("3·id over F7: unexpectedly factored"),
        Err(e) => return Err(e.into()),
    }
    for fl in Flavor::ALL {
        let d = classify3(&shift, fl)?;
        println!("classify(shift, {fl}) = {}", if d.product { "Product" } else { "NotProduct" });
    }
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global().map_err(|e| malformed(e.to_string()))?;
    }
    match cli.command {
        Command::Factor { input, polys, field, window, out, seed, qmax } => {
            factor(&input, &polys, field.as_deref(), window, out.as_deref(), seed, qmax)
        }
        Command::Verify { op, cert, window, report } => verify(&op, &cert, window, report.as_deref()),
        Command::Search { n, q, polys, target, lambda, qmax } => search(n, q, &polys, &target, lambda.as_deref(), qmax),
        Command::Census { n, q, k, poly, out } => run_census(n, q, k, &poly, out.as_deref()),
        Command::Acceptable { lambda, field, polys } => run_acceptable(&lambda, &field, &polys),
        Command::Classify { input, flavor } => run_classify(&input, &flavor),
        Command::Strata { input, support, backtrack } => run_strata(&input, support, backtrack),
        Command::Demo => demo(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if f.code == 2 {
                println!("{}", f.message);
            } else {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
