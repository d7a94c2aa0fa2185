use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use spanlab::gen::{generate, search_nilpotent_generators, search_nonmonotone, Family, GenError, InstanceSpec};
use spanlab::index::dim_sequence;
use spanlab::io::{self, AnyCertificate, CertifySection, InstanceFile, Report};
use spanlab::matspace::{set_float_tolerance, AnySpace, Backend, Field, Matrix, MatrixSpace};
use spanlab::oracle::{brute_force_dim, OracleBudget, OracleError};

const EXIT_MISMATCH: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_BACKEND: u8 = 3;
const EXIT_VERIFY: u8 = 4;
const EXIT_BUDGET: u8 = 5;

#[derive(Parser)]
#[command(name = "spanlab", version, about = "Span powers and primitivity certificates for matrix spaces")]
struct Cli {
    /// Worker threads (default: all cores). Affects wall time only.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Exact,
    Float,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Exact => Backend::Exact,
            BackendArg::Float => Backend::Float,
        }
    }
}

#[derive(Args)]
struct EngineOpts {
    /// Last power in the dimension sequence (default: the theorem bound).
    #[arg(long)]
    kmax: Option<usize>,
    /// Relative tolerance of the float backend.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Overrides the backend chosen from the entries.
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Write the output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Phenomenon {
    Nonmonotone,
    NilpotentGenerators,
}

#[derive(Subcommand)]
enum Command {
    /// Dimension sequence, primitivity, Wielandt and Paz indices.
    Analyze {
        instance: PathBuf,
        #[command(flatten)]
        opts: EngineOpts,
    },
    /// Analysis plus a verified primitivity certificate.
    Certify {
        instance: PathBuf,
        /// Only recheck this certificate (a report or a bare certificate).
        #[arg(long, value_name = "CERTIFICATE")]
        verify_only: Option<PathBuf>,
        #[command(flatten)]
        opts: EngineOpts,
    },
    /// Compare the engine against brute-force word enumeration.
    OracleCheck {
        instance: PathBuf,
        #[arg(long, default_value_t = 6)]
        kmax: usize,
        /// Largest number of words enumerated at one length.
        #[arg(long, default_value_t = OracleBudget::default().max_words)]
        budget: u64,
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        /// Adds one to the engine's last dimension (negative control).
        #[arg(long, hide = true)]
        perturb: bool,
    },
    /// Write an instance file for a generated family.
    Gen {
        #[arg(long)]
        family: String,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search random instances for a phenomenon.
    Search {
        #[arg(long, value_enum)]
        phenomenon: Phenomenon,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time L^K for shift_and_kill(D), D = dmin..=dmax, as CSV.
    Bench {
        #[arg(long, default_value_t = 2)]
        dmin: usize,
        #[arg(long, default_value_t = 8)]
        dmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn fail<T>(code: u8, message: impl Into<String>) -> Result<T, Failure> {
    Err(Failure { code, message: message.into() })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).or_else(|e| fail(EXIT_BACKEND, format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{}", text.trim_end()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => fail(EXIT_BACKEND, format!("stdout: {e}")),
                _ => Ok(()),
            }
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).or_else(|e| fail(EXIT_PARSE, format!("cannot read {}: {e}", path.display())))
}

fn load(path: &Path, backend: Option<BackendArg>) -> Result<(InstanceFile, AnySpace), Failure> {
    let file = InstanceFile::parse(&read(path)?).or_else(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))?;
    let space = file.space(backend.map(Backend::from)).or_else(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))?;
    Ok((file, space))
}

fn apply_tolerance(tol: Option<f64>) -> Result<(), Failure> {
    match tol {
        Some(t) if !(t.is_finite() && t > 0.0) => fail(EXIT_PARSE, format!("tolerance must be positive, got {t}")),
        Some(t) => {
            set_float_tolerance(t);
            Ok(())
        }
        None => Ok(()),
    }
}

fn analyze(instance: &Path, opts: &EngineOpts) -> Result<(), Failure> {
    apply_tolerance(opts.tolerance)?;
    let (_, space) = load(instance, opts.backend)?;
    emit(opts.out.as_deref(), &io::analyze(&space, opts.kmax).to_json())
}

fn certify(instance: &Path, verify_only: Option<&Path>, opts: &EngineOpts) -> Result<(), Failure> {
    apply_tolerance(opts.tolerance)?;
    let (_, space) = load(instance, opts.backend)?;
    if let Some(cert_path) = verify_only {
        let text = read(cert_path)?;
        let cert = match Report::parse(&text) {
            Ok(Report { certify: Some(CertifySection::Certified { certificate }), .. }) => *certificate,
            Ok(_) => return fail(EXIT_VERIFY, "report carries no certificate"),
            Err(_) => serde_json::from_str::<AnyCertificate>(&text)
                .or_else(|e| fail(EXIT_PARSE, format!("{}: {e}", cert_path.display())))?,
        };
        return match cert.verify(&space) {
            Ok(()) => {
                emit(None, "certificate verified")
            }
            Err(r) => fail(EXIT_VERIFY, format!("certificate rejected: {r}")),
        };
    }
    let report = io::analyze_and_certify(&space, opts.kmax);
    emit(opts.out.as_deref(), &report.to_json())?;
    match &report.certify {
        Some(CertifySection::Rejected { reason }) => fail(EXIT_VERIFY, format!("certificate rejected: {reason}")),
        Some(CertifySection::Failed { error }) => fail(EXIT_BACKEND, error.clone()),
        _ => Ok(()),
    }
}

fn oracle_table<F: Field>(
    gens: &[Matrix<F>],
    k_max: usize,
    budget: &OracleBudget,
    perturb: bool,
) -> Result<bool, Failure> {
    let l = MatrixSpace::canonical_basis(gens).or_else(|e| fail(EXIT_PARSE, e.to_string()))?;
    let seq = dim_sequence(&l, k_max);
    let mut table = String::from("k\tengine\toracle\tresult\n");
    let mut all = true;
    for (k, engine) in seq.dims {
        let engine = if perturb && k == k_max { engine + 1 } else { engine };
        let oracle = brute_force_dim(gens, k, budget).or_else(|e| match e {
            OracleError::BudgetExceeded { .. } => fail(EXIT_BUDGET, e.to_string()),
            OracleError::NoGenerators => fail(EXIT_PARSE, e.to_string()),
        })?;
        let ok = engine == oracle;
        all &= ok;
        table.push_str(&format!("{k}\t{engine}\t{oracle}\t{}\n", if ok { "pass" } else { "FAIL" }));
    }
    emit(None, &table)?;
    Ok(all)
}

fn oracle_check(
    instance: &Path,
    k_max: usize,
    max_words: u64,
    backend: Option<BackendArg>,
    perturb: bool,
) -> Result<(), Failure> {
    if k_max == 0 {
        return fail(EXIT_PARSE, "kmax must be positive");
    }
    let file = InstanceFile::parse(&read(instance)?).or_else(|e| fail(EXIT_PARSE, e.to_string()))?;
    let budget = OracleBudget { max_words, k_max };
    // The raw generator list, not a basis: the oracle enumerates words in
    // the generators as given.
    let raw = file.raw_generators(backend.map(Backend::from)).or_else(|e| fail(EXIT_PARSE, e.to_string()))?;
    let n = file.generators.len() as u64;
    let words = n.checked_pow(u32::try_from(k_max).unwrap_or(u32::MAX)).unwrap_or(u64::MAX);
    if words > max_words {
        return fail(EXIT_BUDGET, format!("{words} words at length {k_max} exceed the budget of {max_words}"));
    }
    let all = match raw {
        io::AnyGenerators::Exact(g) => oracle_table(&g, k_max, &budget, perturb)?,
        io::AnyGenerators::Float(g) => oracle_table(&g, k_max, &budget, perturb)?,
    };
    if all {
        Ok(())
    } else {
        fail(EXIT_MISMATCH, "engine and oracle disagree")
    }
}

fn gen(family: &str, d: usize, n: usize, seed: u64, out: Option<&Path>) -> Result<(), Failure> {
    let invalid = |e: GenError| Failure { code: EXIT_PARSE, message: e.to_string() };
    let family: Family = family.parse().map_err(invalid)?;
    let gens = generate(&InstanceSpec::new(family, d, n, seed)).map_err(invalid)?;
    emit(out, &InstanceFile::from_exact(&gens).to_json())
}

#[derive(Serialize)]
struct SearchHit {
    /// First `j` with `dim L^{j+1} < dim L^j`, for the nonmonotone search.
    #[serde(skip_serializing_if = "Option::is_none")]
    drop_at: Option<usize>,
    dims: Vec<usize>,
    instance: InstanceFile,
}

fn search(phenomenon: Phenomenon, d: usize, trials: usize, seed: u64, out: Option<&Path>) -> Result<(), Failure> {
    if d == 0 {
        return fail(EXIT_PARSE, "invalid instance spec: d must be positive");
    }
    let dims = |l: &MatrixSpace<_>| dim_sequence(l, 2 * d + 1).dims.into_iter().map(|(_, v)| v).collect();
    let hits: Vec<SearchHit> = match phenomenon {
        Phenomenon::Nonmonotone => search_nonmonotone(d, trials, seed)
            .into_iter()
            .map(|(l, j)| SearchHit { drop_at: Some(j), dims: dims(&l), instance: InstanceFile::from_exact(&l.basis()) })
            .collect(),
        Phenomenon::NilpotentGenerators => {
            if d < 2 {
                return fail(EXIT_PARSE, "invalid instance spec: nilpotent generators need d ≥ 2");
            }
            search_nilpotent_generators(d, trials, seed)
                .into_iter()
                .map(|h| SearchHit {
                    drop_at: None,
                    dims: dims(&h.space),
                    instance: InstanceFile::from_exact(&h.generators),
                })
                .collect()
        }
    };
    eprintln!("{} hits in {trials} trials", hits.len());
    emit(out, &serde_json::to_string_pretty(&hits).expect("hits serialize"))
}

fn bench(dmin: usize, dmax: usize, out: Option<&Path>) -> Result<(), Failure> {
    if dmin == 0 || dmin > dmax {
        return fail(EXIT_PARSE, format!("invalid range {dmin}..={dmax}"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for d in dmin..=dmax {
        let row = io::bench_row(d);
        eprintln!("d={d} bound={} {} ms", row.bound, row.millis);
        w.serialize(&row).or_else(|e| fail(EXIT_BACKEND, e.to_string()))?;
    }
    let bytes = w.into_inner().or_else(|e| fail(EXIT_BACKEND, e.to_string()))?;
    emit(out, &String::from_utf8(bytes).expect("csv is utf-8"))
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .or_else(|e| fail(EXIT_BACKEND, e.to_string()))?;
    }
    match cli.command {
        Command::Analyze { instance, opts } => analyze(&instance, &opts),
        Command::Certify { instance, verify_only, opts } => certify(&instance, verify_only.as_deref(), &opts),
        Command::OracleCheck { instance, kmax, budget, backend, perturb } => {
            oracle_check(&instance, kmax, budget, backend, perturb)
        }
        Command::Gen { family, d, n, seed, out } => gen(&family, d, n, seed, out.as_deref()),
        Command::Search { phenomenon, d, trials, seed, out } => search(phenomenon, d, trials, seed, out.as_deref()),
        Command::Bench { dmin, dmax, out } => bench(dmin, dmax, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("spanlab: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
