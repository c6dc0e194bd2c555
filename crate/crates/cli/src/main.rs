use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hmgibbs::gibbs::{bgi_sweep, invariance_suite};
use hmgibbs::potential::{
    finite_range_obstruction, holder_variation, periodic_potential, uniform_constants,
    PotentialEvaluation, UniformConstants,
};
use hmgibbs::tmc::enumerate_periodic;
use hmgibbs::{
    check_h1, check_h2, check_topological_markov, evaluate, expand_example, EvalMode, Error,
    ExampleId, FactorSystem, MarkovVerdict, ModelFile, PointSpec,
};

/// Hidden Markov measures under one-block factor maps: hypotheses, the
/// induced potential and Bowen–Gibbs diagnostics.
#[derive(Parser, Debug)]
#[command(name = "hmgibbs", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Primitivity, full row allowability, period positivity, factor
    /// Markov property and the uniform constants.
    Check {
        /// Model file, or `example:<id>`.
        model: String,
        /// Word length for the bounded factor search.
        #[arg(long, default_value_t = 12)]
        depth: usize,
        /// Largest period in the positivity check (default: factor size).
        #[arg(long)]
        h2_horizon: Option<usize>,
    },
    /// Evaluate the induced potential at `preperiod/period`.
    Potential {
        model: String,
        #[arg(long)]
        point: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// The potential at every periodic point by iteration and by the
    /// eigenvector formula.
    Periodic {
        model: String,
        #[arg(long, default_value_t = 4)]
        max_period: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Variation table with fitted decay rate.
    Holder {
        model: String,
        #[arg(long, default_value_t = 12)]
        n_max: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Bowen–Gibbs sweep and measure identities.
    Gibbs {
        model: String,
        #[arg(long, default_value_t = 10)]
        n_max: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Largest word length in the identity suite.
        #[arg(long, default_value_t = 8)]
        identity_n_max: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        invariance_csv: Option<PathBuf>,
    },
    /// Finite-range conditions for a two-letter factor of a full shift.
    Obstruction { model: String },
    /// Write a built-in model as JSON.
    Example {
        /// adhoc5, fullshift4, nongibbs6 or converse_false.
        id: String,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    /// Bad input: exit code 2.
    Input(String),
    /// A hypothesis or convergence requirement fails: exit code 1.
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Hypothesis(_) | Error::NoConvergence(_) => Self::Check(e.to_string()),
            _ => Self::Input(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Input(format!("{}: {e}", path.display()))
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Check {
            model,
            depth,
            h2_horizon,
        } => check(&load(&model)?, depth, h2_horizon),
        Command::Potential { model, point, tol } => potential(&load(&model)?, &point, tol),
        Command::Periodic {
            model,
            max_period,
            tol,
            csv,
        } => periodic(&load(&model)?, max_period, tol, csv.as_deref()),
        Command::Holder {
            model,
            n_max,
            tol,
            csv,
        } => holder(&load(&model)?, n_max, tol, csv.as_deref()),
        Command::Gibbs {
            model,
            n_max,
            tol,
            identity_n_max,
            csv,
            invariance_csv,
        } => gibbs(
            &load(&model)?,
            n_max,
            tol,
            identity_n_max,
            csv.as_deref(),
            invariance_csv.as_deref(),
        ),
        Command::Obstruction { model } => obstruction(&load(&model)?),
        Command::Example { id, gamma, out } => example(&id, gamma, out.as_deref()),
    }
}

fn load(spec: &str) -> Result<FactorSystem, Failure> {
    let file = match spec.strip_prefix("example:") {
        Some(id) => expand_example(id.parse::<ExampleId>()?, None)?,
        None => ModelFile::load(Path::new(spec))?,
    };
    Ok(file.factor_system()?)
}

fn render(fs: &FactorSystem, w: &[usize]) -> String {
    fs.factor().alphabet().render(w)
}

fn constants_or_reason(fs: &FactorSystem) -> Result<Result<UniformConstants, String>, Failure> {
    match uniform_constants(fs) {
        Ok(k) => Ok(Ok(k)),
        Err(Error::Hypothesis(msg)) => Ok(Err(msg)),
        Err(e) => Err(e.into()),
    }
}

fn print_constants(k: &UniformConstants) {
    println!("constants:");
    println!("  tau        {} (raw {})", num(k.tau), num(k.tau_raw));
    println!("  theta      {}", num(k.theta));
    println!("  C1         {}", num(k.c1));
    println!("  D          {}", num(k.d_const));
    println!("  C          {}", num(k.c_total));
    println!("  K_gibbs    {}", num(k.k_gibbs));
    println!("  boundary   {}", num(k.boundary));
    println!("  exponent   {}", num(k.holder_exponent()));
}

fn check(fs: &FactorSystem, depth: usize, horizon: Option<usize>) -> Outcome {
    let source = fs.model().tmc();
    let src_alpha = source.alphabet();
    println!(
        "source: {} symbols, factor: {} symbols",
        source.size(),
        fs.factor().size()
    );
    let primitive = match source.primitivity_exponent() {
        Some(e) => {
            println!("primitive: pass (exponent {e})");
            true
        }
        None => {
            println!("primitive: FAIL");
            false
        }
    };
    let h1 = check_h1(fs);
    if h1.pass {
        println!("H1: pass");
    } else {
        println!("H1: FAIL");
        for f in &h1.failures {
            println!(
                "  block {} row {}",
                render(fs, &[f.block.0, f.block.1]),
                src_alpha.label(f.row)
            );
        }
    }
    let h2 = check_h2(fs, horizon);
    println!(
        "H2 (periods <= {}, {} points): strict {}, support {}",
        h2.horizon,
        h2.witnesses.len(),
        if h2.pass { "pass" } else { "FAIL" },
        if h2.support_pass { "pass" } else { "FAIL" },
    );
    for w in &h2.witnesses {
        if !w.positive {
            let zeros = w.product.iter().filter(|&&x| x == 0.0).count();
            println!(
                "  {}: {} zero entries, {}",
                render(fs, w.point.symbols()),
                zeros,
                if w.support_positive {
                    "positive on nonzero columns"
                } else {
                    "not positive on its support"
                }
            );
        }
    }
    match check_topological_markov(fs, depth)? {
        MarkovVerdict::Certified => println!("factor Markov: certified"),
        MarkovVerdict::Refuted { witness } => {
            println!("factor Markov: refuted, {} has no preimage", render(fs, &witness))
        }
        MarkovVerdict::Undecided {
            depth,
            words_checked,
        } => println!(
            "factor Markov: undecided at depth {depth} ({words_checked} words, all with preimages)"
        ),
    }
    let certified = match constants_or_reason(fs)? {
        Ok(k) => {
            print_constants(&k);
            true
        }
        Err(reason) => {
            println!("constants: unavailable ({reason})");
            false
        }
    };
    let pass = primitive && h1.pass && h2.support_pass && certified;
    println!("verdict: {}", if pass { "pass" } else { "fail" });
    Ok(pass)
}

fn describe(e: &PotentialEvaluation) -> String {
    let mut s = String::new();
    match &e.mode {
        EvalMode::Diverged { clusters } => {
            let c: Vec<String> = clusters.iter().map(|&v| num(v)).collect();
            write!(s, "diverged, subsequence limits [{}]", c.join(", ")).unwrap();
        }
        mode => write!(
            s,
            "{} +/- {} ({})",
            num(e.value.expect("value")),
            num(e.error_radius),
            mode.name()
        )
        .unwrap(),
    }
    write!(s, ", {} terms", e.terms_used).unwrap();
    s
}

fn potential(fs: &FactorSystem, point: &str, tol: f64) -> Outcome {
    let p = PointSpec::parse(fs, fs.factor().alphabet(), point)?;
    let constants = constants_or_reason(fs)?.ok();
    let e = evaluate(fs, &p, tol, constants.as_ref())?;
    println!("point: {}", p.render(fs.factor().alphabet()));
    println!("psi: {}", describe(&e));
    Ok(true)
}

fn open_csv(path: &Path, header: &[&str]) -> Result<csv::Writer<File>, Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_failure(path, e))?;
    w.write_record(header).map_err(|e| io_failure(path, e))?;
    Ok(w)
}

fn write_rows(path: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> Result<(), Failure> {
    let Some(path) = path else { return Ok(()) };
    let mut w = open_csv(path, header)?;
    for r in rows {
        w.write_record(r).map_err(|e| io_failure(path, e))?;
    }
    w.flush().map_err(|e| io_failure(path, e))
}

/// Shortest round-trip form; scientific outside `[1e-4, 1e6)`.
fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e6).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn periodic(fs: &FactorSystem, max_period: usize, tol: f64, csv: Option<&Path>) -> Outcome {
    let constants = constants_or_reason(fs)?.ok();
    let mut rows = Vec::new();
    let mut ok = true;
    println!("point  iterate  formula  gap  radii");
    for pp in enumerate_periodic(fs.factor(), max_period) {
        let p = PointSpec::periodic(fs, pp.symbols().to_vec())?;
        let e = evaluate(fs, &p, tol, constants.as_ref())?;
        let name = render(fs, pp.symbols());
        let (formula, f_radius) = match periodic_potential(fs, &p) {
            Ok((f, _)) => (f.value, Some(f.error_radius)),
            Err(_) => (None, None),
        };
        let (gap, agree) = match (e.value, formula, f_radius) {
            (Some(a), Some(b), Some(r)) => {
                let gap = (a - b).abs();
                (Some(gap), Some(gap <= e.error_radius + r))
            }
            _ => (None, None),
        };
        ok &= agree != Some(false);
        println!(
            "{name}  {}  {}  {}  {}",
            describe(&e),
            formula.map_or("refused".to_string(), num),
            gap.map_or("-".to_string(), num),
            match agree {
                Some(true) => "within",
                Some(false) => "EXCEEDS",
                None => "-",
            }
        );
        rows.push(vec![
            name,
            e.mode.name().to_string(),
            opt(e.value),
            num(e.error_radius),
            e.terms_used.to_string(),
            opt(formula),
            opt(f_radius),
            opt(gap),
            agree.map(|a| a.to_string()).unwrap_or_default(),
        ]);
    }
    write_rows(
        csv,
        &[
            "point",
            "mode",
            "iterate",
            "iterate_radius",
            "terms",
            "formula",
            "formula_radius",
            "gap",
            "within_radii",
        ],
        &rows,
    )?;
    Ok(ok)
}

fn holder(fs: &FactorSystem, n_max: usize, tol: f64, csv: Option<&Path>) -> Outcome {
    let k = uniform_constants(fs)?;
    let report = holder_variation(fs, &k, n_max, tol)?;
    println!("n  words  var  bound  radius  within");
    let mut rows = Vec::new();
    for r in &report.rows {
        println!(
            "{}  {}  {}  {}  {}  {}",
            r.n,
            r.words,
            num(r.var),
            num(r.bound),
            num(r.radius),
            r.within_bound
        );
        rows.push(vec![
            r.n.to_string(),
            r.words.to_string(),
            num(r.var),
            num(r.bound),
            num(r.radius),
            r.within_bound.to_string(),
        ]);
    }
    write_rows(csv, &["n", "words", "var", "bound", "radius", "within_bound"], &rows)?;
    match report.fitted_rate {
        Some(rate) => println!("fitted rate: {rate} (theta {})", report.theta),
        None if report.vanishing => println!("fitted rate: none, variation vanishes for n >= 1"),
        None => println!("fitted rate: none, too few rows above the noise floor"),
    }
    println!("exponent log(1/tau): {}", report.exponent);
    let rate_ok = report.fitted_rate.is_none_or(|r| r <= report.theta);
    Ok(rate_ok && report.rows.iter().all(|r| r.within_bound))
}

fn gibbs(
    fs: &FactorSystem,
    n_max: usize,
    tol: f64,
    identity_n_max: usize,
    csv: Option<&Path>,
    invariance_csv: Option<&Path>,
) -> Outcome {
    let constants = match constants_or_reason(fs)? {
        Ok(k) => Some(k),
        Err(reason) => {
            println!("uncertified sweep: {reason}");
            None
        }
    };
    let report = bgi_sweep(fs, constants.as_ref(), n_max, tol)?;
    println!("n  cylinders  K_emp  K_cert  slack  undefined  verdict");
    let mut rows = Vec::new();
    for r in &report.rows {
        println!(
            "{}  {}  {}  {}  {}  {}  {}",
            r.n,
            r.cylinder_count,
            num(r.k_emp),
            r.k_cert.map_or("-".to_string(), num),
            num(r.slack),
            r.undefined,
            r.verdict
        );
        rows.push(vec![
            r.n.to_string(),
            r.cylinder_count.to_string(),
            num(r.k_emp),
            opt(r.k_cert),
            num(r.slack),
            r.verdict.clone(),
        ]);
    }
    write_rows(
        csv,
        &["n", "cylinder_count", "K_emp", "K_cert", "slack", "verdict"],
        &rows,
    )?;

    let suite = invariance_suite(fs, identity_n_max)?;
    let mut rows = Vec::new();
    for r in &suite.rows {
        rows.push(vec![
            r.check.to_string(),
            r.n.to_string(),
            num(r.worst_residual),
            num(r.tolerance),
            r.pass.to_string(),
        ]);
    }
    write_rows(
        invariance_csv,
        &["check", "n", "worst_residual", "tolerance", "pass"],
        &rows,
    )?;
    println!("identities (n <= {identity_n_max}):");
    for check in [
        "total_mass",
        "shift_invariance",
        "consistency",
        "g_normalization",
        "markov_identity",
    ] {
        let pass = suite.rows.iter().filter(|r| r.check == check).all(|r| r.pass);
        println!(
            "  {check}: worst {} {}",
            num(suite.worst(check)),
            if pass { "pass" } else { "FAIL" }
        );
    }
    let bgi_ok = report.rows.iter().all(|r| r.verdict != "fail");
    Ok(bgi_ok && suite.pass())
}

fn obstruction(fs: &FactorSystem) -> Outcome {
    let r = finite_range_obstruction(fs)?;
    println!(
        "shared eigenvector of M00, M11: {} (gap {})",
        r.shared_eigenvector,
        num(r.eigenvector_gap)
    );
    println!(
        "some block of rank one: {} (min relative det {})",
        r.rank_one,
        num(r.min_relative_det)
    );
    println!(
        "uniform left eigenvector: {} (column sum spread {})",
        r.uniform_left_eigenvector,
        num(r.max_column_sum_spread)
    );
    println!(
        "finite range: {}",
        if r.finite_range_excluded() {
            "excluded"
        } else {
            "not excluded"
        }
    );
    Ok(true)
}

fn example(id: &str, gamma: Option<f64>, out: Option<&Path>) -> Outcome {
    let file = expand_example(id.parse()?, gamma)?;
    let text = file.to_json();
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| io_failure(path, e))?,
        None => print!("{text}"),
    }
    Ok(true)
}
