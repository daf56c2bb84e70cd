use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hyperiso_core::field::{ExtractionConfig, Mode, Placement, ToxelField};
use hyperiso_core::io::{self, IoError};
use hyperiso_core::pipeline::extract_mesh;
use hyperiso_core::slicing::slice;
use hyperiso_core::sweep::sweep;
use hyperiso_core::synth::{self, FieldLaw, Shape, SynthSpec};
use hyperiso_core::tessellation::{validate, TetMesh4};
use hyperiso_core::topology::{generate_table, reconstruct_geometry, PathTable, SITE7_ANCHORS};

const WORKERS_ENV: &str = "STEVE_WORKERS";

#[derive(Parser)]
#[command(
    name = "hyperiso",
    version,
    about = "Extract and slice iso-hypersurfaces of 4D toxel grids"
)]
struct Cli {
    /// Worker threads; defaults to $STEVE_WORKERS, then to the core count.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract the closed tet mesh of {f >= isovalue} into a .st4 file.
    Extract(ExtractArgs),
    /// Cut a .st4 mesh at constant times and write OBJ or PLY files.
    Slice(SliceArgs),
    /// Check that a .st4 mesh is closed and consistently oriented.
    Validate {
        #[arg(long)]
        mesh: PathBuf,
        /// Tets with volume at or below this count as degenerate.
        #[arg(long, default_value_t = 0.0)]
        tolerance: f64,
    },
    /// Generate the 192-path table from the cell geometry.
    GenTable {
        /// Compare against the transcribed table and fail on any mismatch.
        #[arg(long)]
        verify: bool,
    },
    /// Sweep all 2^16 cell patterns and print cycle and section histograms.
    EnumerateCell {
        /// Random value assignments per ambiguous pattern in MIXED mode.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a synthetic test volume.
    Synth(SynthArgs),
    /// Print counts, bounding box and components of a mesh or volume.
    Info {
        #[arg(long, conflicts_with = "input", required_unless_present = "input")]
        mesh: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
        /// Isovalue for the active-toxel count of a volume.
        #[arg(long)]
        isovalue: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Connect,
    Disconnect,
    Mixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlacementArg {
    Midpoint,
    Interpolate,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Obj,
    Ply,
}

#[derive(Args)]
struct ExtractArgs {
    /// Volume header.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    isovalue: f64,
    #[arg(long, value_enum, default_value = "mixed")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "interpolate")]
    placement: PlacementArg,
    /// Clamp of the interpolation parameter away from the toxel centers.
    #[arg(long, default_value_t = ExtractionConfig::DEFAULT_CLAMP)]
    clamp: f64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct SliceArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Slice times, comma separated.
    #[arg(
        long = "t",
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    times: Vec<f64>,
    #[arg(long, value_enum, default_value = "obj")]
    format: FormatArg,
    /// Output files are `<prefix>_<index>.<format>`.
    #[arg(long)]
    out_prefix: String,
}

#[derive(Args)]
struct SynthArgs {
    #[command(subcommand)]
    shape: ShapeArg,
    /// Grid size nx,ny,nz,nt.
    #[arg(long, value_delimiter = ',', num_args = 1, global = true)]
    dims: Vec<usize>,
    /// Store the indicator of the shape instead of its signed distance.
    #[arg(long, global = true)]
    indicator: bool,
    /// Header path; blobs are written next to it.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ShapeArg {
    Hypersphere {
        /// x,y,z,t in grid units; defaults to the grid center.
        #[arg(long, value_delimiter = ',')]
        center: Vec<f64>,
        #[arg(long)]
        radius: f64,
    },
    Dumbbell {
        /// x,y,z of the first ball.
        #[arg(long, value_delimiter = ',')]
        a: Vec<f64>,
        /// x,y,z of the second ball.
        #[arg(long, value_delimiter = ',')]
        b: Vec<f64>,
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        neck_radius: f64,
        /// Time at which the neck vanishes.
        #[arg(long)]
        pinch_time: f64,
    },
    SingleToxel {
        /// x,y,z,t grid index.
        #[arg(long, value_delimiter = ',')]
        index: Vec<usize>,
    },
    IsoSlab {
        /// Active for t <= split.
        #[arg(long)]
        split: f64,
    },
}

/// A failed command: exit status plus a stable kind for the error line.
struct Failure {
    exit: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn new(exit: u8, kind: &'static str, message: impl Display) -> Self {
        Failure {
            exit,
            kind,
            message: message.to_string(),
        }
    }

    fn usage(message: impl Display) -> Self {
        Failure::new(2, "usage", message)
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        let exit = if e.is_io() { 3 } else { 4 };
        Failure::new(exit, e.code(), e)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            report(&Failure::usage(e.kind()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            report(&f);
            ExitCode::from(f.exit)
        }
    }
}

fn report(f: &Failure) {
    let message = f.message.replace('\n', " ");
    eprintln!("error: code={} kind={} message={message:?}", f.exit, f.kind);
}

fn worker_count(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            Failure::usage(format!("{WORKERS_ENV} must be a worker count, got `{v}`"))
        }),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Outcome {
    let mut pool = rayon::ThreadPoolBuilder::new();
    match worker_count(cli.workers)? {
        Some(0) => return Err(Failure::usage("worker count must be positive")),
        Some(n) => pool = pool.num_threads(n),
        None => {}
    }
    let pool = pool.build().map_err(|e| Failure::new(1, "threads", e))?;
    pool.install(|| dispatch(cli.command))
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Extract(a) => extract(a),
        Command::Slice(a) => slice_cmd(a),
        Command::Validate { mesh, tolerance } => validate_cmd(&mesh, tolerance),
        Command::GenTable { verify } => gen_table(verify),
        Command::EnumerateCell { samples, seed } => enumerate(samples, seed),
        Command::Synth(a) => synth_cmd(a),
        Command::Info {
            mesh,
            input,
            isovalue,
        } => match (mesh, input) {
            (Some(m), _) => info_mesh(&m),
            (None, Some(i)) => info_volume(&i, isovalue),
            (None, None) => Err(Failure::usage("info needs --mesh or --input")),
        },
    }
}

fn extract(a: ExtractArgs) -> Outcome {
    let field = io::load_volume(&a.input)?;
    let mut config = ExtractionConfig::new(a.isovalue)
        .with_mode(match a.mode {
            ModeArg::Connect => Mode::Connect,
            ModeArg::Disconnect => Mode::Disconnect,
            ModeArg::Mixed => Mode::Mixed,
        })
        .with_placement(match a.placement {
            PlacementArg::Midpoint => Placement::Midpoint,
            PlacementArg::Interpolate => Placement::Interpolate,
        });
    if !(a.clamp >= 0.0 && a.clamp < 0.5) {
        return Err(Failure::usage(format!(
            "clamp must lie in [0, 0.5), got {}",
            a.clamp
        )));
    }
    config.clamp = a.clamp;
    if !a.isovalue.is_finite() {
        return Err(Failure::usage("isovalue must be finite"));
    }
    let mesh = extract_mesh(&field, &config).map_err(|e| Failure::new(5, "extraction", e))?;
    io::save_st4(&mesh, &a.output)?;
    println!(
        "wrote {} ({} points, {} tets)",
        a.output.display(),
        mesh.vertices.len(),
        mesh.tets.len()
    );
    Ok(())
}

fn slice_cmd(a: SliceArgs) -> Outcome {
    let mesh = io::load_st4(&a.mesh)?;
    let ext = match a.format {
        FormatArg::Obj => "obj",
        FormatArg::Ply => "ply",
    };
    for (i, &t) in a.times.iter().enumerate() {
        if !t.is_finite() {
            return Err(Failure::usage(format!(
                "slice time must be finite, got {t}"
            )));
        }
        let s = slice(&mesh, t);
        if let Err(e) = s.check_closed() {
            return Err(Failure::new(5, "open-slice", format!("t = {t}: {e}")));
        }
        let path = PathBuf::from(format!("{}_{i:04}.{ext}", a.out_prefix));
        let text = match a.format {
            FormatArg::Obj => io::render_obj(&s),
            FormatArg::Ply => io::render_ply(&s),
        };
        io::write_file(&path, text)?;
        println!(
            "t={t} {} ({} vertices, {} triangles, {} components)",
            path.display(),
            s.positions.len(),
            s.triangles.len(),
            s.components()
        );
    }
    Ok(())
}

fn validate_cmd(path: &Path, tolerance: f64) -> Outcome {
    let mesh = io::load_st4(path)?;
    let r = validate(&mesh, tolerance);
    println!(
        "points {} edges {} triangles {} tets {} components {} euler {}",
        r.vertices,
        r.edges,
        r.triangles,
        r.tets,
        r.components.len(),
        r.euler()
    );
    for f in r.failures.iter().take(20) {
        println!("failure {f:?}");
    }
    if r.passed() {
        println!("PASS");
        Ok(())
    } else {
        Err(Failure::new(
            5,
            "validation",
            format!("{} failures", r.failures.len()),
        ))
    }
}

fn gen_table(verify: bool) -> Outcome {
    let transcribed = PathTable::transcribed();
    let geom = reconstruct_geometry(transcribed, &SITE7_ANCHORS)
        .map_err(|e| Failure::new(5, "geometry", e))?;
    let generated = generate_table(&geom).map_err(|e| Failure::new(5, "generate", e))?;
    print!("{}", generated.to_text());
    if verify {
        let diff = transcribed.diff(&generated);
        let total = transcribed.path_count();
        for m in &diff {
            println!(
                "mismatch {}{} path {}: expected {} found {}",
                m.center,
                m.orientation.symbol(),
                m.index + 1,
                m.expected,
                m.found
            );
        }
        println!("{}/{} paths match", total - diff.len(), total);
        if !diff.is_empty() {
            return Err(Failure::new(
                5,
                "table-mismatch",
                format!("{} paths differ", diff.len()),
            ));
        }
    }
    Ok(())
}

fn enumerate(samples: usize, seed: u64) -> Outcome {
    let r = sweep(samples, seed);
    println!(
        "evaluations {} extractions {}",
        r.evaluations, r.extractions
    );
    println!("cycle lengths:");
    for (len, n) in &r.cycle_lengths {
        println!("  {len:>2} {n}");
    }
    println!("sections per cell:");
    for (k, n) in &r.sections_per_cell {
        println!("  {k:>2} {n}");
    }
    for f in r.failures.iter().take(20) {
        println!(
            "failure pattern {:#06x} {:?} connect {:#x}: {}",
            f.bits, f.mode, f.connect, f.message
        );
    }
    if r.passed() {
        Ok(())
    } else {
        Err(Failure::new(
            5,
            "sweep",
            format!("{} failing cells", r.failures.len()),
        ))
    }
}

fn array<T: Copy, const N: usize>(v: &[T], name: &str) -> Result<[T; N], Failure> {
    v.try_into().map_err(|_| {
        Failure::usage(format!(
            "--{name} needs {N} comma-separated values, got {}",
            v.len()
        ))
    })
}

fn synth_cmd(a: SynthArgs) -> Outcome {
    let dims: [usize; 4] = array(&a.dims, "dims")?;
    let shape = match a.shape {
        ShapeArg::Hypersphere { center, radius } => Shape::Hypersphere {
            center: if center.is_empty() {
                dims.map(|n| (n as f64 - 1.0) / 2.0)
            } else {
                array(&center, "center")?
            },
            radius,
        },
        ShapeArg::Dumbbell {
            a: ca,
            b: cb,
            radius,
            neck_radius,
            pinch_time,
        } => Shape::Dumbbell {
            centers: [array(&ca, "a")?, array(&cb, "b")?],
            radii: [radius; 2],
            neck_radius,
            pinch_time,
        },
        ShapeArg::SingleToxel { index } => Shape::SingleToxel {
            index: array(&index, "index")?,
        },
        ShapeArg::IsoSlab { split } => Shape::IsoSlab { split },
    };
    let law = if a.indicator {
        FieldLaw::Indicator
    } else {
        FieldLaw::SignedDistance
    };
    let spec = SynthSpec::new(shape, dims).with_law(law);
    let field = synth::synth(&spec).map_err(|e| Failure::usage(e))?;
    let output = a
        .output
        .ok_or_else(|| Failure::usage("synth needs --output"))?;
    io::save_volume(&field, &output)?;
    println!(
        "wrote {} (isovalue {})",
        output.display(),
        synth::default_isovalue(&spec)
    );
    Ok(())
}

fn bbox(points: impl Iterator<Item = [f64; 4]>) -> Option<([f64; 4], [f64; 4])> {
    points.fold(None, |acc, p| {
        let (mut lo, mut hi) = acc.unwrap_or((p, p));
        for k in 0..4 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
        Some((lo, hi))
    })
}

fn info_mesh(path: &Path) -> Outcome {
    let mesh: TetMesh4 = io::load_st4(path)?;
    let r = validate(&mesh, 0.0);
    println!("points {}", mesh.vertices.len());
    println!("tets {}", mesh.tets.len());
    println!("triangles {}", r.triangles);
    println!("components {}", r.components.len());
    println!("attributes {}", mesh.attr_names.join(" "));
    if let Some((lo, hi)) = bbox(mesh.vertices.iter().map(|v| v.pos)) {
        println!("bbox {lo:?} {hi:?}");
    }
    println!("closed {}", r.passed());
    Ok(())
}

fn info_volume(path: &Path, isovalue: Option<f64>) -> Outcome {
    let field: ToxelField = io::load_volume(path)?;
    let (lo, hi) = field
        .scalar()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let d = field.dims();
    println!("dims {} {} {} {}", d[0], d[1], d[2], d[3]);
    println!("spacing {:?}", field.spacing());
    println!("origin {:?}", field.origin());
    println!("range {lo} {hi}");
    let names: Vec<&str> = field
        .aux_channels()
        .iter()
        .map(|c| c.name.as_str())
        .collect();
    println!("aux {}", names.join(" "));
    let corner = |c: [usize; 4]| field.world(c.map(|x| x as f64));
    if let Some(b) = bbox([corner([0; 4]), corner(d.map(|n| n - 1))].into_iter()) {
        println!("bbox {:?} {:?}", b.0, b.1);
    }
    if let Some(iso) = isovalue {
        println!("active {}", field.active_count(&ExtractionConfig::new(iso)));
    }
    Ok(())
}
