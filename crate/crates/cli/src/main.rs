//! Command-line front-end: graph/matrix ingestion, command dispatch,
//! canonical JSON reporting.
//!
//! Exit codes: 0 success, 1 domain error (structured JSON on stderr),
//! 2 usage error. Deterministic given identical inputs and --seed.

mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conekit::cones;
use conekit::graphs::{self, Family, Graph};
use conekit::linalg::SymMatrix;
use conekit::ncpoly;
use conekit::qrelax::{self, QCone, Role, StairOpts, Variant};
use conekit::theta::{theta_of, ThetaVariant};
use serde_json::{json, Value};
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "conekit",
    version,
    about = "Conic bounds for graph parameters and matrix cone membership"
)]
struct Cli {
    /// solver tolerance (also via CONEKIT_TOL)
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// iteration cap (also via CONEKIT_MAX_ITERS)
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// seed echoed into reports and used by randomized refuters
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// worker threads for independent staircase probes (sweep mode)
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// include wall-clock timing in the report (breaks byte-identical
    /// reproducibility of the output)
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Theta numbers of a graph
    Theta(ThetaArgs),
    /// Staircase bounds from the quantum-parameter relaxations
    Qbound(QboundArgs),
    /// Matrix cone membership with certificates
    Membership(MembershipArgs),
    /// Tracial module hierarchy
    Hierarchy(HierarchyArgs),
    /// Exact small-scale oracles
    Exact(ExactArgs),
    /// Witness construction and validation
    Witness(WitnessArgs),
    /// Graph generation (DIMACS output)
    Gen(GenArgs),
}

#[derive(Args)]
struct ThetaArgs {
    /// graph: DIMACS file (.col) or generator URI gen:family:params
    #[arg(long)]
    graph: String,
    #[arg(long, value_enum)]
    variant: ThetaVariantArg,
    /// compute on the complement instead
    #[arg(long)]
    complement: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ThetaVariantArg {
    Theta,
    Prime,
    Plus,
}

#[derive(Args)]
struct QboundArgs {
    #[arg(value_enum)]
    role: RoleArg,
    #[arg(long)]
    graph: String,
    #[arg(long, value_enum, default_value = "dnn")]
    cone: ConeArg,
    #[arg(long, value_enum, default_value = "full")]
    variant: VariantArg,
    /// use the symmetry-reduced programs
    #[arg(long)]
    reduce: bool,
    /// verify the whole staircase instead of binary search
    #[arg(long)]
    sweep: bool,
    /// solve the aggregated program over a t range
    #[arg(long)]
    aggregate: bool,
    /// t range "a..b" for --aggregate
    #[arg(long, value_name = "A..B")]
    t_range: Option<String>,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum RoleArg {
    Stab,
    Chrom,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConeArg {
    Psd,
    Dnn,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Full,
    Relaxed,
}

#[derive(Args)]
struct MembershipArgs {
    /// matrix text file (.txt: first line n, then n rows)
    #[arg(long)]
    matrix: String,
    #[arg(long, value_enum)]
    cone: MemConeArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum MemConeArg {
    Cp,
    Cspsd,
    Dnn,
    Dnnstar,
    Cop0,
    Cop1,
}

#[derive(Args)]
struct HierarchyArgs {
    #[command(subcommand)]
    which: HierarchyCmd,
}

#[derive(Subcommand)]
enum HierarchyCmd {
    /// graph parameter from the aggregated dual over the truncated module
    Psi {
        #[arg(long)]
        graph: String,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 2)]
        level: usize,
        #[arg(long, value_name = "A..B")]
        t_range: Option<String>,
    },
    /// membership of a matrix in the level-k module relaxation
    Knc {
        #[arg(long)]
        matrix: String,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 2)]
        level: usize,
    },
}

#[derive(Args)]
struct ExactArgs {
    #[arg(value_enum)]
    which: ExactWhich,
    #[arg(long)]
    graph: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExactWhich {
    Alpha,
    Chi,
    Chif,
}

#[derive(Args)]
struct WitnessArgs {
    #[command(subcommand)]
    which: WitnessCmd,
}

#[derive(Subcommand)]
enum WitnessCmd {
    /// validate a witness file (JSON) against a program spec
    Validate {
        #[arg(long)]
        graph: String,
        #[arg(long, value_enum)]
        role: RoleArg,
        #[arg(long)]
        t: usize,
        #[arg(long, value_enum, default_value = "dnn")]
        cone: ConeArg,
        #[arg(long, value_enum, default_value = "full")]
        variant: VariantArg,
        #[arg(long)]
        file: String,
    },
    /// build a coloring witness and print it as JSON
    FromColoring {
        #[arg(long)]
        graph: String,
        /// comma-separated colors per vertex, 0-based
        #[arg(long)]
        colors: String,
        #[arg(long)]
        t: usize,
    },
}

#[derive(Args)]
struct GenArgs {
    /// generator URI, e.g. gen:kneser:5,2
    #[arg(long)]
    graph: String,
}

struct LoadedGraph {
    graph: Graph,
    source: String,
}

fn load_graph(arg: &str) -> Result<LoadedGraph, String> {
    if let Some(uri) = arg.strip_prefix("gen:") {
        let fam = Family::parse(uri).map_err(|e| e.to_string())?;
        let g = graphs::generate(&fam).map_err(|e| e.to_string())?;
        Ok(LoadedGraph { graph: g, source: arg.to_string() })
    } else {
        let text = std::fs::read_to_string(arg).map_err(|e| format!("{arg}: {e}"))?;
        let g = graphs::parse_dimacs(&text).map_err(|e| e.to_string())?;
        Ok(LoadedGraph { graph: g, source: text })
    }
}

fn load_matrix(arg: &str) -> Result<(SymMatrix, String), String> {
    let text = std::fs::read_to_string(arg).map_err(|e| format!("{arg}: {e}"))?;
    let m = SymMatrix::from_text(&text).map_err(|e| e.to_string())?;
    Ok((m, text))
}

fn parse_range(s: &str, n: usize) -> Result<Vec<usize>, String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("bad range {s:?}, expected a..b"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad range start {a:?}"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad range end {b:?}"))?;
    if a < 1 || b > n || a > b {
        return Err(format!("range {a}..{b} outside [1, {n}]"));
    }
    Ok((a..=b).collect())
}

fn main() {
    let cli = Cli::parse();
    // flags become the process-wide solver defaults (the library reads
    // the CONEKIT_* overrides when building its options)
    if let Some(tol) = cli.tol.or_else(env_tol) {
        if !(1e-12..=1e-2).contains(&tol) {
            emit_error("tolerance outside [1e-12, 1e-2]");
            std::process::exit(2);
        }
        std::env::set_var("CONEKIT_TOL", format!("{tol:e}"));
    }
    if let Some(it) = cli.max_iters {
        std::env::set_var("CONEKIT_MAX_ITERS", it.to_string());
    }
    let started = Instant::now();
    match run(&cli) {
        Ok(mut doc) => {
            doc["timing_ms"] = if cli.timing {
                Value::from(started.elapsed().as_millis() as u64)
            } else {
                Value::Null
            };
            doc["tool_version"] = Value::from(env!("CARGO_PKG_VERSION"));
            doc["seed"] = Value::from(cli.seed);
            match report::canonical(&doc) {
                Ok(s) => println!("{s}"),
                Err(e) => {
                    emit_error(&e);
                    std::process::exit(1);
                }
            }
        }
        Err(e) => {
            emit_error(&e);
            std::process::exit(1);
        }
    }
}

fn env_tol() -> Option<f64> {
    std::env::var("CONEKIT_TOL").ok().and_then(|s| s.parse().ok())
}

fn emit_error(msg: &str) {
    let doc = json!({ "error": msg });
    eprintln!("{}", report::canonical(&doc).unwrap_or_else(|_| format!("{{\"error\":\"{msg}\"}}")));
}

fn run(cli: &Cli) -> Result<Value, String> {
    match &cli.command {
        Command::Theta(a) => cmd_theta(a),
        Command::Qbound(a) => cmd_qbound(a, cli.jobs),
        Command::Membership(a) => cmd_membership(a),
        Command::Hierarchy(a) => cmd_hierarchy(a),
        Command::Exact(a) => cmd_exact(a),
        Command::Witness(a) => cmd_witness(a),
        Command::Gen(a) => cmd_gen(a),
    }
}

fn base_report(command: &str, source: &str) -> Value {
    json!({
        "command": command,
        "inputs": { "source": source, "digest": report::digest(source) },
    })
}

fn cmd_theta(a: &ThetaArgs) -> Result<Value, String> {
    let loaded = load_graph(&a.graph)?;
    let g = if a.complement { graphs::complement(&loaded.graph) } else { loaded.graph.clone() };
    let variant = match a.variant {
        ThetaVariantArg::Theta => ThetaVariant::Theta,
        ThetaVariantArg::Prime => ThetaVariant::Prime,
        ThetaVariantArg::Plus => ThetaVariant::Plus,
    };
    let r = theta_of(&g, variant).map_err(|e| e.to_string())?;
    let mut doc = base_report("theta", &loaded.source);
    doc["result"] = json!({
        "value": report::num(r.value)?,
        "dual_value": report::num(r.dual_value)?,
        "status": format!("{:?}", r.status),
    });
    doc["residuals"] = json!({
        "primal_eq": report::num(r.report.primal_eq_inf)?,
        "dual_eq": report::num(r.report.dual_eq_inf)?,
        "gap_rel": report::num(r.report.gap_rel)?,
        "x_cone_min": report::num(r.report.x_cone_min)?,
    });
    Ok(doc)
}

fn cmd_qbound(a: &QboundArgs, jobs: usize) -> Result<Value, String> {
    let loaded = load_graph(&a.graph)?;
    let g = &loaded.graph;
    let cone = match a.cone {
        ConeArg::Psd => QCone::Psd,
        ConeArg::Dnn => QCone::Dnn,
    };
    let variant = match a.variant {
        VariantArg::Full => Variant::Full,
        VariantArg::Relaxed => Variant::Relaxed,
    };
    let role = match a.role {
        RoleArg::Stab => Role::Stab,
        RoleArg::Chrom => Role::Chrom,
    };
    let mut doc = base_report("qbound", &loaded.source);

    if a.aggregate {
        let range = match &a.t_range {
            Some(s) => parse_range(s, g.n())?,
            None => (1..=g.n()).collect(),
        };
        if a.role != RoleArg::Chrom {
            return Err("the aggregated program is the chromatic one; use `qbound chrom --aggregate`".into());
        }
        let primal = qrelax::aggregated_chrom(g, &range).map_err(|e| e.to_string())?;
        let dual = qrelax::aggregated_chrom_dual(g, &range).map_err(|e| e.to_string())?;
        doc["result"] = json!({
            "aggregated_value": report::num(primal.value)?,
            "aggregated_dual_value": report::num(dual.value)?,
            "rounded": primal.rounded,
        });
        doc["residuals"] = json!({
            "gap_abs": report::num((primal.value - dual.value).abs())?,
            "primal_status": format!("{:?}", primal.outcome.status),
            "dual_status": format!("{:?}", dual.outcome.status),
        });
        return Ok(doc);
    }

    let opts = StairOpts { sweep: a.sweep, reduced: a.reduce, ..StairOpts::default() };
    let value = if a.sweep && jobs > 1 {
        sweep_parallel(g, role, cone, variant, &opts, jobs)?
    } else {
        match role {
            Role::Stab => {
                qrelax::max_stab_t_with(g, cone, variant, &opts).map_err(|e| e.to_string())?
            }
            Role::Chrom => {
                qrelax::min_chrom_t_with(g, cone, variant, &opts).map_err(|e| e.to_string())?
            }
        }
    };
    doc["result"] = json!({ "t": value });
    doc["residuals"] = json!({ "mode": if a.sweep { "sweep" } else { "binary-search" } });
    Ok(doc)
}

/// Probe every t concurrently (bounded by `jobs`) and reduce; only
/// used in sweep mode where the probes are independent.
fn sweep_parallel(
    g: &Graph,
    role: Role,
    cone: QCone,
    variant: Variant,
    opts: &StairOpts,
    jobs: usize,
) -> Result<usize, String> {
    let n = g.n();
    let mut results: Vec<Option<bool>> = vec![None; n];
    let mut t = 1usize;
    while t <= n {
        let hi = (t + jobs - 1).min(n);
        let chunk: Vec<Option<bool>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (t..=hi)
                .map(|tt| {
                    let g = g.clone();
                    let reduced = opts.reduced && tt >= 2;
                    let tol = opts.tol;
                    scope.spawn(move || {
                        let spec = qrelax::QProgramSpec {
                            graph: g,
                            t: tt,
                            role,
                            variant,
                            cone,
                            reduced,
                        };
                        qrelax::feasible_at(&spec, tol).map_err(|e| e.to_string())
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("probe thread panicked"))
                .collect::<Vec<_>>()
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
        for (k, r) in chunk.into_iter().enumerate() {
            results[t - 1 + k] = r;
        }
        t = hi + 1;
    }

    match role {
        Role::Stab => {
            let mut best = 0;
            for (k, r) in results.iter().enumerate() {
                match r {
                    Some(true) => best = k + 1,
                    Some(false) => break,
                    None => return Err(format!("undecided at t = {}", k + 1)),
                }
            }
            Ok(best)
        }
        Role::Chrom => {
            for (k, r) in results.iter().enumerate() {
                match r {
                    Some(true) => return Ok(k + 1),
                    Some(false) => continue,
                    None => return Err(format!("undecided at t = {}", k + 1)),
                }
            }
            Ok(n)
        }
    }
}

fn verdict_json(v: &cones::MembershipVerdict, revalidated: bool) -> Result<Value, String> {
    Ok(json!({
        "kind": format!("{:?}", v.kind),
        "reason": v.reason,
        "revalidated": revalidated,
        "certificate": serde_json::to_value(&v.certificate).map_err(|e| e.to_string())?,
    }))
}

fn cmd_membership(a: &MembershipArgs) -> Result<Value, String> {
    let (m, text) = load_matrix(&a.matrix)?;
    let verdict = match a.cone {
        MemConeArg::Cp => cones::cp_membership(&m).map_err(|e| e.to_string())?,
        MemConeArg::Cspsd => cones::cspsd_membership(&m).map_err(|e| e.to_string())?,
        MemConeArg::Dnn => cones::dnn_membership(&m).map_err(|e| e.to_string())?,
        MemConeArg::Dnnstar => cones::dnn_dual_membership(&m).map_err(|e| e.to_string())?,
        MemConeArg::Cop0 => cones::copositive_parrilo(&m, 0).map_err(|e| e.to_string())?,
        MemConeArg::Cop1 => cones::copositive_parrilo(&m, 1).map_err(|e| e.to_string())?,
    };
    let ok = verdict.revalidate(&m);
    let mut doc = base_report("membership", &text);
    doc["result"] = verdict_json(&verdict, ok)?;
    Ok(doc)
}

fn cmd_hierarchy(a: &HierarchyArgs) -> Result<Value, String> {
    match &a.which {
        HierarchyCmd::Psi { graph, eps, level, t_range } => {
            let loaded = load_graph(graph)?;
            let range = match t_range {
                Some(s) => parse_range(s, loaded.graph.n())?,
                None => (1..=loaded.graph.n()).collect(),
            };
            let out =
                ncpoly::psi_eps_k(&loaded.graph, *eps, *level, &range).map_err(|e| e.to_string())?;
            let mut doc = base_report("hierarchy psi", &loaded.source);
            doc["result"] = json!({
                "value": report::num(out.value)?,
                "status": format!("{:?}", out.status),
                "nvars": out.nvars,
                "gram_basis": out.basis,
                "eps": report::num(*eps)?,
                "level": level,
            });
            Ok(doc)
        }
        HierarchyCmd::Knc { matrix, eps, level } => {
            let (m, text) = load_matrix(matrix)?;
            let verdict = ncpoly::knc_membership(&m, *eps, *level).map_err(|e| e.to_string())?;
            let ok = verdict.revalidate(&m);
            let mut doc = base_report("hierarchy knc", &text);
            doc["result"] = verdict_json(&verdict, ok)?;
            // class table indexing the certificate: canonical word reps
            let table = ncpoly::ClassTable::build(m.dim(), *level);
            doc["result"]["class_table"] =
                serde_json::to_value(&table.classes).map_err(|e| e.to_string())?;
            Ok(doc)
        }
    }
}

fn cmd_exact(a: &ExactArgs) -> Result<Value, String> {
    let loaded = load_graph(&a.graph)?;
    let g = &loaded.graph;
    let mut doc = base_report("exact", &loaded.source);
    doc["result"] = match a.which {
        ExactWhich::Alpha => json!({ "alpha": graphs::exact_alpha(g).map_err(|e| e.to_string())? }),
        ExactWhich::Chi => json!({ "chi": graphs::exact_chi(g).map_err(|e| e.to_string())? }),
        ExactWhich::Chif => {
            let r = graphs::exact_chi_f(g).map_err(|e| e.to_string())?;
            json!({ "chi_f": format!("{r}"), "num": r.num, "den": r.den })
        }
    };
    Ok(doc)
}

fn cmd_witness(a: &WitnessArgs) -> Result<Value, String> {
    match &a.which {
        WitnessCmd::Validate { graph, role, t, cone, variant, file } => {
            let loaded = load_graph(graph)?;
            let text = std::fs::read_to_string(file).map_err(|e| format!("{file}: {e}"))?;
            let witness: qrelax::QWitness = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            let spec = qrelax::QProgramSpec::new(
                loaded.graph.clone(),
                *t,
                match role {
                    RoleArg::Stab => Role::Stab,
                    RoleArg::Chrom => Role::Chrom,
                },
                match variant {
                    VariantArg::Full => Variant::Full,
                    VariantArg::Relaxed => Variant::Relaxed,
                },
                match cone {
                    ConeArg::Psd => QCone::Psd,
                    ConeArg::Dnn => QCone::Dnn,
                },
            );
            let rep = qrelax::validate_witness(&witness, &spec).map_err(|e| e.to_string())?;
            let mut doc = base_report("witness validate", &loaded.source);
            doc["result"] = json!({
                "pass": rep.pass,
                "max_residual": report::num(rep.max_residual)?,
                "worst_constraint": rep.worst_constraint,
                "cone_min": report::num(rep.cone_min)?,
            });
            Ok(doc)
        }
        WitnessCmd::FromColoring { graph, colors, t } => {
            let loaded = load_graph(graph)?;
            let coloring: Vec<usize> = colors
                .split(',')
                .map(|s| s.trim().parse::<usize>().map_err(|_| format!("bad color {s:?}")))
                .collect::<Result<_, _>>()?;
            let w = qrelax::witness_from_coloring(&loaded.graph, &coloring, *t)
                .map_err(|e| e.to_string())?;
            let mut doc = base_report("witness from-coloring", &loaded.source);
            doc["result"] = json!({ "witness": serde_json::to_value(&w).map_err(|e| e.to_string())? });
            Ok(doc)
        }
    }
}

fn cmd_gen(a: &GenArgs) -> Result<Value, String> {
    let loaded = load_graph(&a.graph)?;
    let mut doc = base_report("gen", &a.graph);
    doc["result"] = json!({
        "n": loaded.graph.n(),
        "m": loaded.graph.edge_count(),
        "dimacs": loaded.graph.to_dimacs(),
    });
    Ok(doc)
}
