//! Command-line front end for the `valgebra` binary.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::dynamics::{
    dynamical_degree_empirical, invariant_valuation, log_concavity_report, vanishing_check, SubspaceBody,
};
use crate::error::{Error, Result};
use crate::geometry::random::random_full_polytope;
use crate::geometry::{Polytope, ReferenceBody};
use crate::io;
use crate::minkowski::{
    multistart_solution_set, stationarity_residual, test_bodies, variational_minimize, MinkowskiSolution,
    SolverConfig,
};
use crate::mixed_volume::mixed_volume;
use crate::scalar::{ArithmeticMode, Rational, Scalar};
use crate::valuation::{ConvMode, Valuation};
use crate::verify::run_suite;

#[derive(Debug, Parser)]
#[command(name = "valgebra", version, about = "Mixed volumes, valuations, dynamical degrees and Minkowski-type problems")]
struct Cli {
    /// JSON file whose keys mirror the flags; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Arith {
    Float,
    Exact,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Shape {
    Simplex,
    Box,
}

#[derive(Debug, Args)]
struct Common {
    /// Arithmetic mode.
    #[arg(long, value_enum)]
    arith: Option<Arith>,
    /// Shorthand for `--arith exact`.
    #[arg(long)]
    exact: bool,
    /// Convolution coefficient: unit or paper.
    #[arg(long = "conv-mode", default_value = "unit")]
    conv_mode: ConvMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn mode(&self) -> ArithmeticMode {
        match (self.exact, self.arith) {
            (true, _) | (_, Some(Arith::Exact)) => ArithmeticMode::Exact,
            _ => ArithmeticMode::Float,
        }
    }

    fn float_only(&self, what: &str) -> Result<()> {
        if self.mode() == ArithmeticMode::Exact {
            return Err(Error::Precondition(format!("{what} runs in float arithmetic only")));
        }
        Ok(())
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mixed volume of n bodies in dimension n.
    MixedVolume {
        #[arg(long, value_delimiter = ',', required = true)]
        bodies: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Convolution of two valuations.
    Convolve {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        /// Also evaluate the result on this body.
        #[arg(long)]
        eval: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Cone norm, P-norm bounds and positivity certificate.
    Norms {
        #[arg(long)]
        valuation: PathBuf,
        /// cube, ball, ball:<m> or a body file.
        #[arg(long, default_value = "cube")]
        reference: String,
        #[arg(long, default_value_t = 200)]
        budget: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Degree sequence of the iterates of a linear map.
    Dyndeg {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        codeg: usize,
        #[arg(long, default_value_t = 30)]
        kmax: u32,
        /// Reference body; the unit cube when absent.
        #[arg(long)]
        body: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Invariant valuation of a linear map and its residual.
    Invariants {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        codeg: usize,
        /// Polygon resolution for rotation planes.
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        #[arg(long, value_enum, default_value = "simplex")]
        shape: Shape,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Convolution of two invariant valuations against a reference body.
    Vanishing {
        #[arg(long)]
        matrix: PathBuf,
        /// Degree index i.
        #[arg(long)]
        degree: usize,
        /// Shift s.
        #[arg(long, default_value_t = 1)]
        shift: usize,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        #[arg(long, default_value = "cube")]
        reference: String,
        #[command(flatten)]
        common: Common,
    },
    /// Variational solver for psi(N, B[i-1]) = c V(B[n-1], N).
    Minkowski {
        #[arg(long)]
        valuation: PathBuf,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        fan: Option<usize>,
        #[arg(long, default_value_t = 8)]
        starts: usize,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Number of random test bodies for the residuals.
        #[arg(long, default_value_t = 20)]
        tests: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Seeded battery of invariant checks.
    VerifySuite {
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        dims: Vec<usize>,
        #[command(flatten)]
        common: Common,
    },
}

/// Inserts the flags of a `--config` file right after the subcommand, so
/// that later command-line flags override them.
fn expand_config(argv: Vec<String>) -> Result<Vec<String>> {
    let mut path = None;
    let mut rest = Vec::with_capacity(argv.len());
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().ok_or_else(|| Error::Parse("--config needs a file".into()))?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let given: Vec<&str> = rest
        .iter()
        .filter_map(|a| a.strip_prefix("--").map(|f| f.split('=').next().unwrap_or(f)))
        .collect();
    let mut extra = Vec::new();
    let mut keep = true;
    for tok in io::config_to_args(&io::read_json(&path)?)? {
        if let Some(f) = tok.strip_prefix("--") {
            keep = !given.contains(&f);
        }
        if keep {
            extra.push(tok);
        }
    }
    // position of the subcommand: first non-flag after the program name
    let at = rest.iter().skip(1).position(|a| !a.starts_with('-')).map(|p| p + 2).unwrap_or(rest.len());
    let mut out = rest[..at.min(rest.len())].to_vec();
    out.extend(extra);
    out.extend_from_slice(&rest[at.min(rest.len())..]);
    Ok(out)
}

fn meta(command: &str, reference: &str, mode: ArithmeticMode, common: &Common) -> Value {
    json!({
        "command": command,
        "reference": reference,
        "arithmetic": mode.to_string(),
        "conv_mode": common.conv_mode.to_string(),
        "seed": common.seed,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.out {
        Some(p) => io::write_text(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| Error::Io(e.to_string()))
        }
    }
}

fn emit_json(common: &Common, v: &Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    emit(common, &s)
}

fn file_id(p: &Path) -> String {
    format!("file:{}", p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default())
}

fn reference<S: Scalar>(name: &str, n: usize) -> Result<ReferenceBody<S>> {
    if name.ends_with(".json") {
        let body = io::parse_body(&io::read_json(name)?)?;
        return io::reference_from_body(&file_id(Path::new(name)), body, true);
    }
    io::named_reference(name, n)
}

fn mixed_volume_cmd<S: Scalar>(paths: &[PathBuf], common: &Common) -> Result<()> {
    let bodies: Vec<Polytope<S>> = paths.iter().map(|p| io::parse_body(&io::read_json(p)?)).collect::<Result<_>>()?;
    let refs: Vec<&Polytope<S>> = bodies.iter().collect();
    let v = mixed_volume(&refs)?;
    if common.out.is_some() {
        return emit_json(common, &json!({"meta": meta("mixed-volume", "none", S::MODE, common), "value": v.to_json()}));
    }
    // comment lines carry the metadata; the last line is the bare value
    println!("# command: mixed-volume");
    println!("# reference: none");
    println!("# arithmetic: {}", S::MODE);
    println!("# conv_mode: {}", common.conv_mode);
    println!("{v}");
    Ok(())
}

fn convolve_cmd<S: Scalar>(left: &Path, right: &Path, eval: Option<&Path>, common: &Common) -> Result<()> {
    let a: Valuation<S> = io::parse_valuation(&io::read_json(left)?)?;
    let b: Valuation<S> = io::parse_valuation(&io::read_json(right)?)?;
    let c = a.convolve(&b, common.conv_mode)?;
    let value = match eval {
        Some(p) => Some(c.evaluate(&io::parse_body(&io::read_json(p)?)?)?),
        None if c.degree() == 0 => Some(c.constant()?),
        None => None,
    };
    emit_json(
        common,
        &json!({
            "meta": meta("convolve", "none", S::MODE, common),
            "result": io::valuation_to_json(&c),
            "value": value.map(|v| v.to_json()),
        }),
    )
}

fn norms_cmd<S: Scalar>(path: &Path, refname: &str, budget: usize, common: &Common) -> Result<()> {
    let phi: Valuation<S> = io::parse_valuation(&io::read_json(path)?)?;
    let b: ReferenceBody<S> = reference(refname, phi.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    let cone = phi.cone_norm(&b)?;
    let upper = phi.p_norm_upper(&b)?;
    let est = if phi.degree() > 0 { Some(phi.p_norm_estimate(&b, budget, &mut rng)?) } else { None };
    let cert = if phi.is_positive() && phi.degree() > 0 {
        phi.certify_strict_positivity(&b, &[]).ok().map(|c| c.epsilon)
    } else {
        None
    };
    emit_json(
        common,
        &json!({
            "meta": meta("norms", &b.id, S::MODE, common),
            "reference_volume": b.volume().to_f64(),
            "cone_norm": cone.to_json(),
            "p_norm_lower": est.as_ref().map(|e| e.lower_bound),
            "p_norm_upper": upper,
            "samples": est.as_ref().map(|e| e.samples).unwrap_or(0),
            "strict_positivity_epsilon": cert,
        }),
    )
}

fn dyndeg_cmd<S: Scalar>(matrix: &Path, codeg: usize, kmax: u32, body: Option<&Path>, common: &Common) -> Result<()> {
    let g = io::parse_matrix::<S>(&io::read_json(matrix)?)?;
    let n = g.dim();
    let b: ReferenceBody<S> = match body {
        Some(p) => io::reference_from_body(&file_id(p), io::parse_body(&io::read_json(p)?)?, false)?,
        None => {
            let unit = Polytope::<S>::unit_cube(n);
            io::reference_from_body(&format!("unit-cube-d{n}"), unit, false)?
        }
    };
    let report = dynamical_degree_empirical(&g, codeg, &b, kmax)?;
    let m = [
        ("command", "dyndeg".to_string()),
        ("reference", b.id.clone()),
        ("arithmetic", S::MODE.to_string()),
        ("conv_mode", common.conv_mode.to_string()),
        ("seed", common.seed.to_string()),
    ];
    emit(common, &report.to_csv(&m))
}

fn invariants_cmd(
    matrix: &Path,
    codeg: usize,
    resolution: usize,
    shape: Shape,
    samples: usize,
    common: &Common,
) -> Result<()> {
    common.float_only("invariants")?;
    let g = io::parse_matrix::<f64>(&io::read_json(matrix)?)?;
    let n = g.dim();
    let shape = match shape {
        Shape::Simplex => SubspaceBody::Simplex,
        Shape::Box => SubspaceBody::Box,
    };
    let inv = invariant_valuation(&g, codeg, resolution, shape)?;
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    let bodies: Vec<Polytope<f64>> = (0..samples).map(|_| random_full_polytope(&mut rng, n, n + 2)).collect();
    let residual = inv.residual(&g, &bodies)?;
    let orbit = match inv.polygon {
        Some(_) => Some(inv.orbit_residual(&g, &bodies, 64)?),
        None => None,
    };
    emit_json(
        common,
        &json!({
            "meta": meta("invariants", "none", ArithmeticMode::Float, common),
            "codegree": codeg,
            "eigenvalue": inv.d,
            "moduli": g.moduli(),
            "subspace": inv.subspace,
            "polygon_resolution": inv.polygon,
            "valuation": io::valuation_to_json(&inv.phi),
            "residual": residual,
            "orbit_residual": orbit,
            "samples": samples,
        }),
    )
}

fn vanishing_cmd(matrix: &Path, i: usize, s: usize, resolution: usize, refname: &str, common: &Common) -> Result<()> {
    common.float_only("vanishing")?;
    let g = io::parse_matrix::<f64>(&io::read_json(matrix)?)?;
    let b: ReferenceBody<f64> = reference(refname, g.dim())?;
    let lc = log_concavity_report(&g)?;
    let rep = vanishing_check(&g, i, s, &b, resolution)?;
    emit_json(
        common,
        &json!({
            "meta": meta("vanishing", &b.id, ArithmeticMode::Float, common),
            "degrees": lc.degrees,
            "report": rep,
        }),
    )
}

fn solution_json(sol: &MinkowskiSolution) -> Value {
    json!({
        "B": io::body_to_json(&sol.body),
        "c": sol.c,
        "volume": sol.volume,
        "converged": sol.converged,
        "iterations": sol.iterations,
        "support": sol.support,
        "certificate_epsilon": sol.certificate_epsilon,
        "clip_radius": sol.clip_radius,
    })
}

#[allow(clippy::too_many_arguments)]
fn minkowski_cmd(
    path: &Path,
    dim: Option<usize>,
    fan: Option<usize>,
    starts: usize,
    max_iters: Option<usize>,
    tests: usize,
    common: &Common,
) -> Result<()> {
    common.float_only("minkowski")?;
    let psi: Valuation<f64> = io::parse_valuation(&io::read_json(path)?)?;
    let n = psi.dim();
    if let Some(d) = dim {
        if d != n {
            return Err(Error::DimensionMismatch { expected: d, found: n });
        }
    }
    let mut cfg = SolverConfig::for_dim(n);
    if let Some(f) = fan {
        cfg.fan = f;
    }
    if let Some(m) = max_iters {
        cfg.max_iters = m;
    }
    cfg.starts = starts;
    cfg.seed = common.seed;
    let (best, multistart) = if starts > 1 {
        let set = multistart_solution_set(&psi, &cfg)?;
        let best = set
            .solutions
            .iter()
            .enumerate()
            .min_by(|a, b| (!a.1.converged, a.1.c).partial_cmp(&(!b.1.converged, b.1.c)).expect("finite"))
            .map(|(k, _)| k)
            .expect("at least one start");
        let summary = json!({
            "starts": set.solutions.len(),
            "converged": set.solutions.iter().filter(|s| s.converged).count(),
            "diameter": set.diameter,
            "distances": set.distances,
            "within_clip": set.within_clip,
            "c_values": set.solutions.iter().map(|s| s.c).collect::<Vec<_>>(),
        });
        (set.solutions[best].clone(), Some(summary))
    } else {
        (variational_minimize(&psi, &cfg)?, None)
    };
    let mut nb = test_bodies(n, tests, common.seed);
    nb.push(best.body.clone());
    let st = stationarity_residual(&psi, &best.body, &nb)?;
    let refid = crate::minkowski::solver_reference(n, &cfg)?.id;
    let mut out = json!({
        "meta": meta("minkowski", &refid, ArithmeticMode::Float, common),
        "config": cfg,
        "residuals": st,
        "trace": best.trace,
        "multistart": multistart,
    });
    if let (Value::Object(o), Value::Object(s)) = (&mut out, solution_json(&best)) {
        o.extend(s);
    }
    emit_json(common, &out)?;
    if !best.converged {
        return Err(Error::NoConvergence(format!(
            "best run stopped after {} iterations without meeting the tolerances; partial solution written",
            best.iterations
        )));
    }
    Ok(())
}

fn verify_cmd(dims: &[usize], common: &Common) -> Result<bool> {
    let report = run_suite(common.seed, dims)?;
    let text = report.to_text();
    if common.out.is_some() {
        emit(common, &text)?;
    }
    print!("{text}");
    Ok(report.all_passed())
}

fn dispatch(cli: Cli) -> Result<i32> {
    macro_rules! by_mode {
        ($common:expr, $f:ident ( $($arg:expr),* )) => {
            match $common.mode() {
                ArithmeticMode::Float => $f::<f64>($($arg),*),
                ArithmeticMode::Exact => $f::<Rational>($($arg),*),
            }
        };
    }
    match &cli.command {
        Command::MixedVolume { bodies, common } => by_mode!(common, mixed_volume_cmd(bodies, common))?,
        Command::Convolve { left, right, eval, common } => {
            by_mode!(common, convolve_cmd(left, right, eval.as_deref(), common))?
        }
        Command::Norms { valuation, reference, budget, common } => {
            by_mode!(common, norms_cmd(valuation, reference, *budget, common))?
        }
        Command::Dyndeg { matrix, codeg, kmax, body, common } => {
            by_mode!(common, dyndeg_cmd(matrix, *codeg, *kmax, body.as_deref(), common))?
        }
        Command::Invariants { matrix, codeg, resolution, shape, samples, common } => {
            invariants_cmd(matrix, *codeg, *resolution, *shape, *samples, common)?
        }
        Command::Vanishing { matrix, degree, shift, resolution, reference, common } => {
            vanishing_cmd(matrix, *degree, *shift, *resolution, reference, common)?
        }
        Command::Minkowski { valuation, dim, fan, starts, max_iters, tests, common } => {
            minkowski_cmd(valuation, *dim, *fan, *starts, *max_iters, *tests, common)?
        }
        Command::VerifySuite { dims, common } => {
            return Ok(if verify_cmd(dims, common)? { 0 } else { 1 });
        }
    }
    Ok(0)
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code: 2 malformed input, 3 precondition
/// violation, 4 non-convergence, 5 refused hypothesis, 1 failed checks.
pub fn run_command(argv: Vec<String>) -> i32 {
    crate::init_thread_pool();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
