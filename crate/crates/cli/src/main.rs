use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context as _, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use skewrg::analytic::{ts_affine_compose, TaylorSeries};
use skewrg::cocycle::{lyapunov_averaged, rotation_lift, rotation_sign_count, OrbitStart, SkewProduct};
use skewrg::config::{Config, OutputFormat};
use skewrg::curves::{critical_curve, CurveOptions};
use skewrg::limit::{fix_normalization, limit_products, verify_scaling_limit, FixedPointPair};
use skewrg::rg::{iterate, pair_from_skew, LChoice, Normalization, RgOptions};
use skewrg::suite::{run_check, Context, Suite};
use skewrg::zeros::{default_super_window, gaps, ZeroOrbit};
use skewrg::GoldenNumber;

#[derive(Parser)]
#[command(name = "skewrg", version, about = "Golden-mean renormalization of skew products over circle rotations")]
struct Cli {
    /// key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write results here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lyapunov exponent of the almost Mathieu cocycle
    Lyapunov(AmArgs),
    /// Rotation number of the almost Mathieu cocycle
    Rotation {
        #[command(flatten)]
        am: AmArgs,
        #[arg(long, value_enum, default_value_t = Method::Signs)]
        method: Method,
        /// Orbit start x; the default centres the orbit
        #[arg(long, allow_hyphen_values = true)]
        start: Option<f64>,
    },
    /// Renormalization of analytic pairs
    Rg {
        #[command(subcommand)]
        cmd: RgCmd,
    },
    /// Exact zero-set dynamics
    Zeros {
        #[command(subcommand)]
        cmd: ZerosCmd,
    },
    /// Universal limit functions
    Limitfn {
        #[command(subcommand)]
        cmd: LimitCmd,
    },
    /// Critical curve epsilon(delta)
    Curve {
        #[command(subcommand)]
        cmd: CurveCmd,
    },
    /// Run acceptance checks
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Series utilities
    Analytic {
        #[command(subcommand)]
        cmd: AnalyticCmd,
    },
}

#[derive(Args)]
struct AmArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long, allow_hyphen_values = true)]
    energy: f64,
    #[arg(long, default_value_t = 46368)]
    iters: u64,
    #[arg(long, default_value_t = 1)]
    samples: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Signs,
    Lift,
}

#[derive(Subcommand)]
enum RgCmd {
    /// Iterate R_3n on the scaled almost Mathieu pair
    Iterate {
        #[arg(long)]
        delta: f64,
        #[arg(long, allow_hyphen_values = true)]
        epsilon: f64,
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long, default_value_t = 4)]
        steps: u32,
        #[arg(long = "L", default_value = "S")]
        l_choice: String,
        #[arg(long, default_value = "norm")]
        norm: String,
    },
}

#[derive(Subcommand)]
enum ZerosCmd {
    /// Iterate the zero maps from the seed {rho} + Z
    Run {
        #[arg(long)]
        rho: String,
        #[arg(long, default_value_t = 10)]
        steps: u64,
        /// Half-width of the reported window
        #[arg(long, default_value = "1/2")]
        window: String,
    },
}

#[derive(Subcommand)]
enum LimitCmd {
    /// Build and normalize b and a for a periodic rotation number
    Build {
        #[arg(long, default_value = "1/4")]
        rho: String,
        /// Number of period blocks; the zero window is alpha^(-3n t)/2
        #[arg(long, default_value_t = 3)]
        blocks: u64,
    },
    /// Compare renormalized almost Mathieu factors with the limit functions
    Verify {
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        #[arg(long, default_value_t = 6)]
        kmax: u32,
        #[arg(long, default_value_t = 0.5)]
        window: f64,
        #[arg(long, default_value = "1/4")]
        rho: String,
        #[arg(long, default_value_t = 11)]
        samples: usize,
        /// Limit functions from `limitfn build`; rebuilt when absent
        #[arg(long = "fn")]
        function: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CurveCmd {
    /// epsilon(delta) on a grid start:stop:step
    Find {
        #[arg(long)]
        rho: String,
        #[arg(long = "delta-grid")]
        delta_grid: String,
        /// Bracket width; falls back to tol.curve from the config
        #[arg(long)]
        tol: Option<f64>,
    },
}

#[derive(Subcommand)]
enum AnalyticCmd {
    /// Weighted l1 norm of a series {"radius", "coeffs"}
    Norm {
        #[arg(long)]
        input: PathBuf,
    },
    /// Series of x -> f(scale x + shift) on a disk of the given radius
    Compose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        scale: f64,
        #[arg(long, allow_hyphen_values = true)]
        shift: f64,
        #[arg(long)]
        radius: f64,
    },
}

struct Io {
    out: Option<PathBuf>,
    config: Config,
}

impl Io {
    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                let mut so = std::io::stdout().lock();
                so.write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }

    fn json<T: Serialize>(&self, v: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        self.emit(&s)
    }

    fn csv<T: Serialize>(&self, rows: &[T]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow!("{e}"))?;
        self.emit(&String::from_utf8(bytes)?)
    }

    fn table<T: Serialize>(&self, rows: &[T]) -> Result<()> {
        match self.config.output_format {
            OutputFormat::Json => self.json(&rows),
            OutputFormat::Csv => self.csv(rows),
        }
    }
}

fn golden(s: &str) -> Result<GoldenNumber> {
    s.parse().map_err(|e| anyhow!("{s:?}: {e}"))
}

fn grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| anyhow!("bad grid {text:?}")))
        .collect::<Result<_>>()?;
    let (a, b, h) = match parts[..] {
        [a] => (a, a, 1.0),
        [a, b, h] => (a, b, h),
        _ => bail!("grid must be start:stop:step"),
    };
    if h.is_nan() || h <= 0.0 || b < a {
        bail!("grid must be start:stop:step with step > 0");
    }
    let count = ((b - a) / h + 1e-9).floor() as usize;
    // drop the float noise of a + h·i so grid values print as typed
    Ok((0..=count).map(|i| ((a + h * i as f64) * 1e12).round() / 1e12).collect())
}

fn read_series(p: &Path) -> Result<TaylorSeries> {
    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    let s: TaylorSeries = serde_json::from_str(&text)?;
    Ok(s)
}

fn am_record(args: &AmArgs, value: f64, half: f64, extra: serde_json::Value) -> serde_json::Value {
    json!({
        "params": {
            "lambda": args.lambda, "energy": args.energy, "t": skewrg::golden::ALPHA / 2.0,
            "iters": args.iters, "samples": args.samples, "extra": extra
        },
        "value": value,
        "N": args.iters,
        "convergence_gap": (value - half).abs(),
    })
}

#[derive(Serialize)]
struct CurveRow {
    delta: f64,
    epsilon: f64,
    residual: f64,
    plateau_width: f64,
}

#[derive(Serialize)]
struct ZeroStep {
    step: u64,
    #[serde(rename = "A")]
    a: skewrg::zeros::ZeroSet,
    #[serde(rename = "B")]
    b: skewrg::zeros::ZeroSet,
    gaps_a: Vec<GoldenNumber>,
    gaps_b: Vec<GoldenNumber>,
}

fn load_fixed_point(p: &Path) -> Result<FixedPointPair> {
    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    let mut fp: FixedPointPair = serde_json::from_str(&text)?;
    fp.b.refresh();
    fp.a.refresh();
    Ok(fp)
}

fn build_fixed_point(rho: &GoldenNumber, blocks: u64) -> Result<FixedPointPair> {
    let n = skewrg::curves::period_of(rho)?;
    let (b, a) = limit_products(rho, n as u64, blocks)?;
    Ok(fix_normalization(b, a, n)?)
}

/// Ok(true) when everything requested succeeded.
fn run(cli: Cli) -> Result<bool> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if config.threads > 0 {
        // a second initialization only happens in tests; keep the existing pool then
        let _ = rayon::ThreadPoolBuilder::new().num_threads(config.threads).build_global();
    }
    let io = Io { out: cli.out, config };
    match cli.command {
        Command::Lyapunov(args) => {
            if args.iters == 0 {
                bail!("--iters must be positive");
            }
            let g = SkewProduct::am(args.lambda, args.energy);
            let v = lyapunov_averaged(&g, args.iters, args.samples)?;
            let h = lyapunov_averaged(&g, (args.iters / 2).max(1), args.samples)?;
            io.json(&am_record(&args, v, h, json!(null)))?;
        }
        Command::Rotation { am, method, start } => {
            if am.iters == 0 {
                bail!("--iters must be positive");
            }
            let g = SkewProduct::am(am.lambda, am.energy);
            let st = start.map_or(OrbitStart::Centered, OrbitStart::At);
            let measure = |n: u64| -> Result<f64> {
                Ok(match method {
                    Method::Signs => rotation_sign_count(&g, n, [1.0, 0.0], st)?.value(),
                    Method::Lift => rotation_lift(&g, n, [1.0, 0.0], st)?,
                })
            };
            let v = measure(am.iters)?;
            let h = measure((am.iters / 2).max(1))?;
            let m = match method {
                Method::Signs => "signs",
                Method::Lift => "lift",
            };
            io.json(&am_record(&am, v, h, json!({ "method": m })))?;
        }
        Command::Rg { cmd: RgCmd::Iterate { delta, epsilon, n, steps, l_choice, norm } } => {
            let opts = RgOptions {
                n,
                l_choice: l_choice.parse::<LChoice>()?,
                normalization: norm.parse::<Normalization>()?,
                target_b0: 1.0,
            };
            opts.validate()?;
            let g = SkewProduct::scaled_am(delta, epsilon);
            let p0 = pair_from_skew(&g, io.config.truncation_degree, io.config.radii)?;
            let (recs, _) = iterate(&p0, steps, &opts)?;
            io.table(&recs)?;
        }
        Command::Zeros { cmd: ZerosCmd::Run { rho, steps, window: r } } => {
            let rho = golden(&rho)?;
            let r = golden(&r)?;
            let two = GoldenNumber::from_int(2);
            let w = std::cmp::max(default_super_window(), r.clone() + two);
            let mut orbit = ZeroOrbit::new(&rho, &w)?;
            let mut out = Vec::new();
            for step in 0..=steps {
                let (a, b) = orbit.windowed(&r);
                let ga = if a.len() >= 2 { gaps(&a)? } else { Vec::new() };
                let gb = if b.len() >= 2 { gaps(&b)? } else { Vec::new() };
                out.push(ZeroStep { step, a, b, gaps_a: ga, gaps_b: gb });
                if step < steps {
                    orbit.advance();
                }
            }
            io.json(&out)?;
        }
        Command::Limitfn { cmd: LimitCmd::Build { rho, blocks } } => {
            let fp = build_fixed_point(&golden(&rho)?, blocks)?;
            io.json(&fp)?;
        }
        Command::Limitfn { cmd: LimitCmd::Verify { delta, kmax, window: r, rho, samples, function } } => {
            let rho = golden(&rho)?;
            let fp = match function {
                Some(p) => load_fixed_point(&p)?,
                None => build_fixed_point(&rho, 3)?,
            };
            let opts = CurveOptions { delta_max: io.config.delta_max, ..Default::default() };
            let eps = critical_curve(&rho, delta, 1e-15, &opts)?.epsilon;
            let g = SkewProduct::am(1.0 / delta, eps / delta);
            let ks: Vec<u32> = (0..=kmax).step_by(2).collect();
            let rep = verify_scaling_limit(&g, &fp, &ks, r, samples, skewrg::golden::fib_u64(30))?;
            match io.config.output_format {
                OutputFormat::Json => io.json(&rep)?,
                OutputFormat::Csv => io.csv(&rep.rows)?,
            }
        }
        Command::Curve { cmd: CurveCmd::Find { rho, delta_grid, tol } } => {
            let rho = golden(&rho)?;
            let tol = tol.unwrap_or_else(|| io.config.tol("curve", 1e-6));
            let deltas = grid(&delta_grid)?;
            let opts = CurveOptions { delta_max: io.config.delta_max, ..Default::default() };
            let results: Vec<_> = deltas.par_iter().map(|&d| (d, critical_curve(&rho, d, tol, &opts))).collect();
            let mut rows = Vec::new();
            let mut ok = true;
            for (d, r) in results {
                match r {
                    Ok(p) => rows.push(CurveRow {
                        delta: p.delta,
                        epsilon: p.epsilon,
                        residual: p.residual,
                        plateau_width: p.plateau_width,
                    }),
                    Err(e) => {
                        eprintln!("delta = {d}: {e}");
                        ok = false;
                    }
                }
            }
            io.csv(&rows)?;
            return Ok(ok);
        }
        Command::Verify { suite } => {
            let suite: Suite = suite.parse()?;
            let ctx = Context::new();
            let checks: Vec<_> = suite.criteria().into_iter().map(|id| run_check(id, &ctx)).collect();
            for c in &checks {
                eprintln!("{c}");
            }
            io.json(&checks)?;
            return Ok(checks.iter().all(|c| c.pass));
        }
        Command::Analytic { cmd: AnalyticCmd::Norm { input } } => {
            let s = read_series(&input)?;
            io.json(&json!({ "radius": s.radius, "degree": s.degree(), "norm": s.norm(), "tail_fraction": s.tail_fraction() }))?;
        }
        Command::Analytic { cmd: AnalyticCmd::Compose { input, scale, shift, radius } } => {
            let s = read_series(&input)?;
            io.json(&ts_affine_compose(&s, scale, shift, radius)?)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
