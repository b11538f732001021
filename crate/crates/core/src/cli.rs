//! Command-line front end. Exit codes: 0 success, 1 the analysis ran and the
//! property failed, 2 bad input.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{self, EXACT_TOL, LIMIT_TOL};
use crate::error::{Error, Result};
use crate::lattice::{IndexBox, MultiIndex};
use crate::linalg::CMatrix;
use crate::modelspace::{self, ModelSpace};
use crate::operators::{matrix_unit, read_matrix_body, Encoding, ToeplitzPlan, TruncatedOperator};
use crate::random;
use crate::symbols::{blaschke_factor, TorusSymbol};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT_FALSE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Smallest operator dimension `bench-matvec` accepts.
pub const BENCH_FLOOR: usize = 256;

#[derive(Parser, Debug)]
#[command(name = "polytoep", version, about = "Multilevel Toeplitz operators on truncated Hardy spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Serialize)]
struct Output {
    /// Where to write the artifact or report (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a symbol file and report its inner certificate.
    Symbol(SymbolArgs),
    /// Build the Toeplitz matrix of a symbol on a box.
    Toeplitz(ToeplitzArgs),
    /// Shift-invariance defect of an operator file.
    CheckToeplitz(OperatorArgs),
    /// Average diagonals into a symbol.
    Recover(OperatorArgs),
    /// Toeplitz + compact split.
    Decompose(OperatorArgs),
    /// Compactness profile `c_m`.
    Compactness(OperatorArgs),
    /// Model space basis for an inner symbol.
    Modelspace(ModelArgs),
    /// Rigidity test on a model space.
    Invariance(ModelArgs),
    /// Iterated compressions of an operator on a model space.
    ModelCompactness(ModelArgs),
    /// One-variable block Toeplitz + compact split.
    BlockDecompose(OperatorArgs),
    /// Dense vs FFT matrix-vector timing.
    BenchMatvec(BenchArgs),
}

#[derive(Args, Debug, Serialize)]
struct SymbolArgs {
    /// Existing symbol file to validate and certify.
    input: Option<PathBuf>,
    /// Random symbol with `|f_i| <= SPAN`.
    #[arg(long)]
    random: bool,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long, default_value_t = 2)]
    span: usize,
    /// Monomial `z^k`, exponents comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    monomial: Option<Vec<i64>>,
    /// Blaschke factor parameter `re,im`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    blaschke: Option<Vec<f64>>,
    /// Truncation degree of the Blaschke expansion.
    #[arg(long, default_value_t = 64)]
    degree: usize,
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    #[arg(long, default_value_t = EXACT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug, Serialize)]
struct ToeplitzArgs {
    #[arg(long)]
    symbol: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    caps: Vec<usize>,
    /// Adds `W·e_0 e_0*` (first scalar slot of the origin block).
    #[arg(long)]
    add_origin: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug, Serialize)]
struct OperatorArgs {
    input: PathBuf,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    m_max: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug, Serialize)]
struct ModelArgs {
    #[arg(long)]
    theta: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    caps: Vec<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 8)]
    m_max: usize,
    /// `q × q` operator as CSV rows of interleaved `re,im` values.
    #[arg(long)]
    operator: Option<PathBuf>,
    /// Use a random operator with this seed instead of the identity.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug, Serialize)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    caps: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Entry point for the binary.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_INPUT;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Symbol(a) => symbol_cmd(a, out),
        Command::Toeplitz(a) => toeplitz_cmd(a, out),
        Command::CheckToeplitz(a) => check_toeplitz_cmd(a, out),
        Command::Recover(a) => recover_cmd(a, out),
        Command::Decompose(a) => decompose_cmd(a, out, false),
        Command::BlockDecompose(a) => decompose_cmd(a, out, true),
        Command::Compactness(a) => compactness_cmd(a, out),
        Command::Modelspace(a) => modelspace_cmd(a, out),
        Command::Invariance(a) => invariance_cmd(a, out),
        Command::ModelCompactness(a) => model_compactness_cmd(a, out),
        Command::BenchMatvec(a) => bench_cmd(a, out),
    }
}

fn verdict_code(ok: bool) -> i32 {
    if ok {
        EXIT_OK
    } else {
        EXIT_VERDICT_FALSE
    }
}

/// Writes `text` to `path`, or to `out` when no path is given.
fn emit(path: Option<&Path>, out: &mut dyn Write, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn report_json(command: &str, config: &impl Serialize, report: Value) -> Result<String> {
    let doc = json!({ "command": command, "config": config, "report": report });
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

fn read_symbol(path: &Path) -> Result<TorusSymbol> {
    let text = std::fs::read_to_string(path)?;
    TorusSymbol::from_json(&text)
}

fn load_operator(path: &Path) -> Result<TruncatedOperator> {
    TruncatedOperator::load(path)
}

fn make_box(caps: &[usize]) -> Result<IndexBox> {
    IndexBox::new(caps.to_vec()).map_err(|e| Error::format("caps", e.to_string()))
}

fn symbol_cmd(a: SymbolArgs, out: &mut dyn Write) -> Result<i32> {
    let sources = [a.input.is_some(), a.random, a.monomial.is_some(), a.blaschke.is_some()];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return Err(Error::format(
            "source",
            "give exactly one of INPUT, --random, --monomial, --blaschke",
        ));
    }
    let symbol = if let Some(path) = &a.input {
        read_symbol(path)?
    } else if a.random {
        if a.n == 0 || a.p == 0 {
            return Err(Error::format("n/p", "must be at least 1"));
        }
        random::trig_poly(&mut random::rng(a.seed), a.n, a.p, a.span)
    } else if let Some(k) = &a.monomial {
        if k.is_empty() {
            return Err(Error::format("monomial", "needs at least one exponent"));
        }
        TorusSymbol::monomial(MultiIndex(k.clone()))
    } else {
        let b = a.blaschke.as_deref().unwrap_or_default();
        if b.len() != 2 {
            return Err(Error::format("blaschke", "expected re,im"));
        }
        blaschke_factor(Complex64::new(b[0], b[1]), a.degree)?
    };
    let grid = match &a.grid {
        Some(g) if g.len() != symbol.n() => {
            return Err(Error::format("grid", format!("expected {} sizes, found {}", symbol.n(), g.len())))
        }
        Some(g) => g.clone(),
        None => symbol.default_grid(),
    };
    let inner = if symbol.is_analytic() {
        Some(symbol.is_inner(&grid, a.tol)?)
    } else {
        None
    };
    let report = json!({
        "symbol": symbol.to_file(),
        "sup_norm_estimate": symbol.sup_norm_estimate(),
        "analytic": symbol.is_analytic(),
        "inner_certificate": inner,
    });
    match &a.output.out {
        Some(path) => {
            std::fs::write(path, symbol.to_json())?;
            emit(None, out, &report_json("symbol", &a, report)?)?;
        }
        None => emit(None, out, &report_json("symbol", &a, report)?)?,
    }
    Ok(EXIT_OK)
}

fn toeplitz_cmd(a: ToeplitzArgs, out: &mut dyn Write) -> Result<i32> {
    let symbol = read_symbol(&a.symbol)?;
    if a.caps.len() != symbol.n() {
        return Err(Error::format(
            "caps",
            format!("symbol has {} variables, --caps gives {}", symbol.n(), a.caps.len()),
        ));
    }
    let domain = make_box(&a.caps)?;
    let mut op = TruncatedOperator::toeplitz(&symbol, &domain)?;
    if let Some(w) = a.add_origin {
        let z = MultiIndex::zero(domain.dim());
        op = op.add(&matrix_unit(&domain, op.p(), (&z, 0), (&z, 0))?.scale(Complex64::new(w, 0.0)))?;
    }
    let encoding = match a.output.format {
        Format::Json => Encoding::Binary,
        Format::Csv => Encoding::Csv,
    };
    match &a.output.out {
        Some(path) => op.save(path, encoding)?,
        None => op.write_to(out, encoding)?,
    }
    Ok(EXIT_OK)
}

fn check_toeplitz_cmd(a: OperatorArgs, out: &mut dyn Write) -> Result<i32> {
    let op = load_operator(&a.input)?;
    let tol = a.tol.unwrap_or(EXACT_TOL);
    let r = analysis::toeplitz_defect(&op, tol);
    let text = match a.output.format {
        Format::Json => report_json("check-toeplitz", &a, serde_json::to_value(&r)?)?,
        Format::Csv => csv(
            "direction,defect",
            r.per_direction.iter().enumerate().map(|(j, d)| format!("{j},{d:e}")),
        ),
    };
    emit(a.output.out.as_deref(), out, &text)?;
    Ok(verdict_code(r.verdict))
}

fn recover_cmd(a: OperatorArgs, out: &mut dyn Write) -> Result<i32> {
    let op = load_operator(&a.input)?;
    let tol = a.tol.unwrap_or(EXACT_TOL);
    let r = analysis::recover_symbol(&op);
    let ok = r.max_deviation <= tol;
    let text = match a.output.format {
        Format::Json => report_json(
            "recover",
            &a,
            json!({
                "symbol": r.symbol.to_file(),
                "max_deviation": r.max_deviation,
                "toeplitz": ok,
                "deviations": r.deviations,
            }),
        )?,
        Format::Csv => csv(
            "frequency,representatives,spread",
            r.deviations.iter().map(|d| {
                let f: Vec<String> = d.frequency.0.iter().map(i64::to_string).collect();
                format!("{},{},{:e}", f.join(" "), d.representatives, d.spread)
            }),
        ),
    };
    emit(a.output.out.as_deref(), out, &text)?;
    Ok(verdict_code(ok))
}

fn decompose_cmd(a: OperatorArgs, out: &mut dyn Write, block: bool) -> Result<i32> {
    let op = load_operator(&a.input)?;
    let tol = a.tol.unwrap_or(EXACT_TOL);
    let m_max = a.m_max.unwrap_or_else(|| analysis::default_m_max(op.domain()));
    let res = if block {
        analysis::feintuch_decompose_with(&op, tol, m_max)?
    } else {
        analysis::asymptotic_decompose_with(&op, tol, m_max)?
    };
    let verb = if block { "block-decompose" } else { "decompose" };
    let text = match a.output.format {
        Format::Json => report_json(verb, &a, serde_json::to_value(res.report())?)?,
        Format::Csv => {
            let mut rows: Vec<String> = res
                .remainder_profile
                .values
                .iter()
                .map(|(m, v)| format!("c,{m},{v:e}"))
                .collect();
            for s in &res.sequences {
                rows.extend(s.steps.iter().map(|st| format!("step_{},{},{:e}", s.direction, st.m, st.step_norm)));
            }
            for c in &res.cross_terms {
                rows.extend(
                    c.norms
                        .iter()
                        .map(|(m, v)| format!("cross_{}_{},{m},{v:e}", c.row_direction, c.col_direction)),
                );
            }
            csv("series,m,value", rows)
        }
    };
    emit(a.output.out.as_deref(), out, &text)?;
    Ok(verdict_code(res.verdict))
}

fn compactness_cmd(a: OperatorArgs, out: &mut dyn Write) -> Result<i32> {
    let op = load_operator(&a.input)?;
    let tol = a.tol.unwrap_or(LIMIT_TOL);
    let m_max = a.m_max.unwrap_or(op.domain().min_cap() + 1);
    let prof = analysis::compactness_profile(&op, m_max, tol)?;
    let text = match a.output.format {
        Format::Json => report_json("compactness", &a, serde_json::to_value(&prof)?)?,
        Format::Csv => csv("m,c_m", prof.values.iter().map(|(m, v)| format!("{m},{v:e}"))),
    };
    emit(a.output.out.as_deref(), out, &text)?;
    Ok(verdict_code(prof.verdict))
}

fn build_model(a: &ModelArgs, default_tol: f64) -> Result<(ModelSpace, f64)> {
    let theta = read_symbol(&a.theta)?;
    if a.caps.len() != theta.n() {
        return Err(Error::format(
            "caps",
            format!("symbol has {} variables, --caps gives {}", theta.n(), a.caps.len()),
        ));
    }
    let tol = a.tol.unwrap_or(default_tol);
    let ms = modelspace::model_basis(&theta, &make_box(&a.caps)?, tol)?;
    Ok((ms, tol))
}

fn modelspace_cmd(a: ModelArgs, out: &mut dyn Write) -> Result<i32> {
    let (ms, _) = build_model(&a, EXACT_TOL)?;
    if let Some(path) = &a.output.out {
        let enc = match a.output.format {
            Format::Json => Encoding::Binary,
            Format::Csv => Encoding::Csv,
        };
        ms.save(path, enc)?;
    }
    let text = report_json("modelspace", &a, serde_json::to_value(ms.summary())?)?;
    emit(None, out, &text)?;
    Ok(EXIT_OK)
}

fn model_operator(a: &ModelArgs, q: usize) -> Result<CMatrix> {
    if let Some(path) = &a.operator {
        let f = std::fs::File::open(path)?;
        read_matrix_body(&mut std::io::BufReader::new(f), q, q, Encoding::Csv)
            .map_err(|e| Error::format("operator", e.to_string()))
    } else if let Some(seed) = a.seed {
        Ok(random::matrix(&mut random::rng(seed), q, q))
    } else {
        Ok(CMatrix::identity(q, q))
    }
}

fn invariance_cmd(a: ModelArgs, out: &mut dyn Write) -> Result<i32> {
    let (ms, _) = build_model(&a, EXACT_TOL)?;
    let tol = a.tol.unwrap_or(1e-8);
    let kernel = modelspace::invariance_kernel(&ms, tol)?;
    let residual = if a.operator.is_some() || a.seed.is_some() {
        Some(modelspace::invariance_residual(&ms, &model_operator(&a, ms.q)?)?)
    } else {
        None
    };
    let text = report_json(
        "invariance",
        &a,
        json!({ "model": ms.summary(), "kernel": kernel, "residual": residual }),
    )?;
    emit(a.output.out.as_deref(), out, &text)?;
    Ok(verdict_code(kernel.kernel_dim == 0))
}

fn model_compactness_cmd(a: ModelArgs, out: &mut dyn Write) -> Result<i32> {
    let (ms, _) = build_model(&a, EXACT_TOL)?;
    let tol = a.tol.unwrap_or(LIMIT_TOL);
    let t = model_operator(&a, ms.q)?;
    let r = modelspace::model_compactness_test(&ms, &t, a.m_max, tol)?;
    let text = match a.output.format {
        Format::Json => report_json("model-compactness", &a, json!({ "model": ms.summary(), "test": r }))?,
        Format::Csv => csv(
            "direction,m,norm",
            r.norms
                .iter()
                .enumerate()
                .flat_map(|(i, seq)| seq.iter().map(move |(m, v)| format!("{i},{m},{v:e}"))),
        ),
    };
    emit(a.output.out.as_deref(), out, &text)?;
    Ok(verdict_code(r.verdict))
}

#[derive(Clone, Debug, Serialize)]
pub struct MatvecTiming {
    pub n: usize,
    /// Median seconds per product.
    pub dense_time: f64,
    pub fast_time: f64,
    /// `max |fast − dense| / max |dense|` over all trials.
    pub residual: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Times dense and FFT products of a random Toeplitz matrix on `caps`.
pub fn bench_matvec(caps: &[usize], p: usize, trials: usize, seed: u64) -> Result<MatvecTiming> {
    let domain = IndexBox::new(caps.to_vec())?;
    if trials == 0 {
        return Err(Error::Invalid("trials must be at least 1".into()));
    }
    let mut rng = random::rng(seed);
    let span = caps.iter().copied().min().unwrap_or(0).min(3);
    let symbol = random::trig_poly(&mut rng, domain.dim(), p, span);
    let op = TruncatedOperator::toeplitz(&symbol, &domain)?;
    let plan = ToeplitzPlan::new(&op)?;
    let mut dense_times = Vec::with_capacity(trials);
    let mut fast_times = Vec::with_capacity(trials);
    let mut residual: f64 = 0.0;
    for _ in 0..trials {
        let v = random::vector(&mut rng, op.dim());
        let t0 = Instant::now();
        let dense = op.matrix() * &v;
        dense_times.push(t0.elapsed().as_secs_f64());
        let t0 = Instant::now();
        let fast = plan.apply(&v)?;
        fast_times.push(t0.elapsed().as_secs_f64());
        let scale = dense.iter().fold(0.0_f64, |m, z| m.max(z.norm())).max(f64::MIN_POSITIVE);
        let diff = dense.iter().zip(fast.iter()).fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()));
        residual = residual.max(diff / scale);
    }
    Ok(MatvecTiming {
        n: op.dim(),
        dense_time: median(dense_times),
        fast_time: median(fast_times),
        residual,
    })
}

fn bench_cmd(a: BenchArgs, out: &mut dyn Write) -> Result<i32> {
    let domain = make_box(&a.caps)?;
    if a.p == 0 {
        return Err(Error::format("p", "must be at least 1"));
    }
    if domain.len() * a.p < BENCH_FLOOR {
        return Err(Error::format(
            "caps",
            format!("operator dimension {} is below the benchmark floor {BENCH_FLOOR}", domain.len() * a.p),
        ));
    }
    let t = bench_matvec(&a.caps, a.p, a.trials, a.seed)?;
    let text = csv(
        "N,dense_time,fast_time,residual",
        [format!("{},{:e},{:e},{:e}", t.n, t.dense_time, t.fast_time, t.residual)],
    );
    emit(a.out.as_deref(), out, &text)?;
    Ok(verdict_code(t.residual <= EXACT_TOL))
}
