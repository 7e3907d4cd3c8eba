//! Command-line surface: run generators, ray constructions, the half-grid
//! pipelines, the example demonstrations, and independent certificate
//! verification.
//!
//! Exit codes: 0 success/verified, 1 construction failure (with a retry
//! hint), 2 verification refuted, 3 usage error.

mod demo;
mod plot;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use coarsegrid_core::cert::{
    check_certificate, Certificate, FamilyFile, GraphDescriptor, Mode, RayFile, Verdict,
    SCHEMA_VERSION,
};
use coarsegrid_core::error::{Error, Result};
use coarsegrid_core::family::annulus_ray_family;
use coarsegrid_core::generators::GeneratorSpec;
use coarsegrid_core::graph::{GraphHandle, Window};
use coarsegrid_core::pipeline::{pipeline_halfgrid, Source, DEFAULT_SPARE};
use coarsegrid_core::ray::{geodesic_ray, invariant_double_ray};
use coarsegrid_core::vertex::VertexId;

#[derive(Parser)]
#[command(name = "coarsegrid", version, about = "Fat half-grid minor models in lazily generated graphs", disable_help_subcommand = true)]
struct Cli {
    /// Recorded in emitted files; all algorithms are deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GraphArgs {
    /// Generator spec, e.g. grid2d, hexhalfgrid, example42:K=3, cycle_spokes:n=24
    #[arg(long, default_value = "grid2d")]
    graph: String,
    /// Explicit edge-list file ("u v" per line); used with --graph explicit
    #[arg(long)]
    edges: Option<String>,
    /// Window basepoint token (defaults to the generator's canonical one)
    #[arg(long)]
    base: Option<String>,
    /// Window radius in graph-distance units
    #[arg(long)]
    radius: Option<u32>,
}

impl GraphArgs {
    fn spec(&self) -> Result<GeneratorSpec> {
        if self.graph == "explicit" {
            let path = self.edges.as_ref().ok_or_else(|| {
                Error::InvalidParameter {
                    generator: "explicit".into(),
                    detail: "--edges FILE required".into(),
                }
            })?;
            let text = std::fs::read_to_string(path)?;
            GeneratorSpec::explicit_from_lines(&text)
        } else {
            GeneratorSpec::parse_compact(&self.graph)
        }
    }

    fn instantiate(&self, default_radius: u32) -> Result<GraphHandle> {
        let spec = self.spec()?;
        let basepoint = match &self.base {
            Some(b) => VertexId::parse(b)?,
            None => spec.default_basepoint(),
        };
        let radius = self.radius.unwrap_or(default_radius);
        GraphHandle::instantiate(spec, Window { basepoint, radius })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Materialize a window and dump its vertices and edges
    Generate {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        out: Option<String>,
        /// Write a PNG rendering of the window
        #[arg(long)]
        plot: Option<String>,
    },
    /// Construct rays: a geodesic ray, or an invariant double ray
    Rays {
        #[command(flatten)]
        graph: GraphArgs,
        /// Build the lexicographically least geodesic ray from the basepoint
        #[arg(long, conflicts_with = "invariant")]
        geodesic: bool,
        /// Build the invariant double ray of --auto
        #[arg(long)]
        invariant: bool,
        /// Automorphism id (e.g. translate:1,0 or rot:8)
        #[arg(long)]
        auto: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Build a pairwise-separated ray family along an automorphism
    Family {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        auto: Option<String>,
        #[arg(long, default_value_t = 4)]
        count: u32,
        #[arg(long)]
        out: Option<String>,
    },
    /// Run the half-grid construction and emit a certificate
    Halfgrid {
        #[command(flatten)]
        graph: GraphArgs,
        /// kfat or ultrafat
        #[arg(long)]
        mode: String,
        /// Fatness target for kfat mode
        #[arg(long, short = 'K')]
        k: Option<u32>,
        #[arg(long, default_value_t = 4)]
        rows: u32,
        #[arg(long, default_value_t = 4)]
        cols: u32,
        /// Ray family file (JSON); defaults to generator automorphism data
        #[arg(long)]
        family: Option<String>,
        /// Automorphism id for auto mode
        #[arg(long)]
        auto: Option<String>,
        /// Spare connector candidates per hexagonal edge
        #[arg(long, default_value_t = DEFAULT_SPARE)]
        spare: u32,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        plot: Option<String>,
    },
    /// Re-verify a certificate from scratch
    Check { path: String },
    /// Run a measured demonstration on the example generators
    Demo {
        /// example41, example42, or tightness
        #[arg(long)]
        id: String,
        #[arg(long, short = 'K', default_value_t = 3)]
        k: u64,
        /// Clique truncation for example41
        #[arg(long, default_value_t = 6)]
        n: u64,
        #[arg(long)]
        radius: Option<u32>,
    },
}

fn write_or_print(out: &Option<String>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn json_pretty<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Generate { graph, out, plot } => {
            let g = graph.instantiate(8)?;
            let mut edges = Vec::new();
            for i in 0..g.vertex_count() as u32 {
                for &j in g.adj_row(i) {
                    if j > i {
                        edges.push((g.vid(i).token(), g.vid(j).token()));
                    }
                }
            }
            #[derive(serde::Serialize)]
            struct Dump {
                schema_version: String,
                seed: u64,
                graph: GraphDescriptor,
                vertices: Vec<String>,
                edges: Vec<(String, String)>,
            }
            let dump = Dump {
                schema_version: SCHEMA_VERSION.into(),
                seed: cli.seed,
                graph: GraphDescriptor::new(g.spec(), g.window()),
                vertices: g.vertices().iter().map(|v| v.token()).collect(),
                edges,
            };
            write_or_print(&out, &json_pretty(&dump)?)?;
            if let Some(p) = plot {
                plot::plot_window(&g, None, &p)?;
            }
            eprintln!("window: {} vertices", g.vertex_count());
            Ok(0)
        }
        Command::Rays { graph, geodesic, invariant, auto, out } => {
            let g = graph.instantiate(32)?;
            if invariant {
                let id = auto.ok_or_else(|| Error::UnknownAutomorphism("--auto required".into()))?;
                let phi = g.spec().automorphism(&id)?;
                let (dr, m) = invariant_double_ray(&g, &phi)?;
                #[derive(serde::Serialize)]
                struct Out {
                    schema_version: String,
                    automorphism: String,
                    invariance_power: i64,
                    double_ray: coarsegrid_core::ray::DoubleRay,
                }
                write_or_print(
                    &out,
                    &json_pretty(&Out {
                        schema_version: SCHEMA_VERSION.into(),
                        automorphism: id,
                        invariance_power: m,
                        double_ray: dr,
                    })?,
                )?;
                return Ok(0);
            }
            let _ = geodesic; // the default
            let ray = geodesic_ray(&g, &g.window().basepoint.clone())?;
            let file = RayFile { schema_version: SCHEMA_VERSION.into(), ray };
            write_or_print(&out, &json_pretty(&file)?)?;
            Ok(0)
        }
        Command::Family { graph, auto, count, out } => {
            let g = graph.instantiate(48)?;
            let phi = match auto {
                Some(id) => g.spec().automorphism(&id)?,
                None => g
                    .spec()
                    .default_auto()
                    .ok_or_else(|| Error::UnknownAutomorphism("no registered automorphism".into()))?,
            };
            let (dr, _) = invariant_double_ray(&g, &phi)?;
            let fam = annulus_ray_family(&g, &dr, &phi, count, None)?;
            let file = FamilyFile::from_family(&fam.family);
            write_or_print(&out, &json_pretty(&file)?)?;
            eprintln!(
                "family: {} rays, annulus levels {:?}",
                fam.family.rays.len(),
                fam.levels.iter().map(|l| (l.inner, l.outer)).collect::<Vec<_>>()
            );
            Ok(0)
        }
        Command::Halfgrid { graph, mode, k, rows, cols, family, auto, spare, out, plot } => {
            let mode = match mode.as_str() {
                "kfat" => Mode::Kfat {
                    k: k.ok_or_else(|| Error::PremiseViolated("--K required for kfat".into()))?,
                },
                "ultrafat" => Mode::Ultrafat,
                other => {
                    return Err(Error::PremiseViolated(format!("unknown mode `{other}`")));
                }
            };
            let default_radius = match mode {
                Mode::Kfat { .. } => 200,
                Mode::Ultrafat => 1000,
            };
            let g = graph.instantiate(default_radius)?;
            let source = match family {
                Some(path) => {
                    let text = std::fs::read_to_string(path)?;
                    let file: FamilyFile =
                        serde_json::from_str(&text).map_err(|e| Error::Schema(e.to_string()))?;
                    Source::Family(file.to_family())
                }
                None => Source::Auto { automorphism: auto },
            };
            let t0 = Instant::now();
            let cert = pipeline_halfgrid(&g, mode, rows, cols, source, spare, cli.seed)?;
            let elapsed = t0.elapsed();
            let summary = match (&cert.mode, &cert.verification) {
                (Mode::Kfat { k }, v) => format!(
                    "K-fat: {k} (achieved {:?})",
                    v.fatness.as_ref().and_then(|f| f.achieved)
                ),
                (Mode::Ultrafat, v) => {
                    format!("ultra-fat to level {}", v.ultrafat_level.unwrap_or(0))
                }
            };
            write_or_print(&out, &cert.to_json()?)?;
            if let Some(p) = plot {
                plot::plot_window(&g, Some(&cert.model), &p)?;
            }
            eprintln!("{summary}; wall time {elapsed:.2?}");
            Ok(0)
        }
        Command::Check { path } => {
            let text = std::fs::read_to_string(path)?;
            let cert = Certificate::from_json(&text)?;
            match check_certificate(&cert)? {
                Verdict::Verified => {
                    println!("verified");
                    Ok(0)
                }
                Verdict::Refuted { witness } => {
                    println!("refuted: {witness}");
                    Ok(2)
                }
                Verdict::Indeterminate { reason } => {
                    println!("indeterminate: {reason}");
                    Ok(1)
                }
            }
        }
        Command::Demo { id, k, n, radius } => {
            let report = match id.as_str() {
                "example42" => demo::demo_example42(k, radius.unwrap_or(40))?,
                "example41" => demo::demo_example41(n, radius.unwrap_or(16))?,
                "tightness" => demo::demo_tightness(k, radius.unwrap_or(40))?,
                other => {
                    return Err(Error::PremiseViolated(format!("unknown demo `{other}`")));
                }
            };
            println!("demo {}", report.id);
            for row in &report.rows {
                println!("  [{}] {} -- {}", row.verdict, row.claim, row.measured);
            }
            Ok(if report.all_pass { 0 } else { 2 })
        }
    }
}

fn classify(err: &Error) -> i32 {
    match err {
        Error::Schema(_)
        | Error::Json(_)
        | Error::Io(_)
        | Error::BadToken(_)
        | Error::UnknownGenerator(_)
        | Error::InvalidParameter { .. }
        | Error::UnknownAutomorphism(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are not usage errors
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(classify(&e) as u8)
        }
    }
}
