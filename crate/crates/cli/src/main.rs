use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use latrem_core::detlab::{construct, DetCalibration};
use latrem_core::exponents::{rational_string, to_f64, ExponentTable, Omega};
use latrem_core::expsum::{run_process, BOptions, ExpSumInstance};
use latrem_core::fourier::fourier_eval;
use latrem_core::geometry::{self, ConvexBody, Rotation};
use latrem_core::harness::{experiment, geometric_grid, haar_rotation, summary_path, ExperimentConfig};
use latrem_core::lattice::{count_points, remainder};
use latrem_core::poisson::{sandwich_bounds, schedule_parameters, smoothed_count, split_sums, SumOptions};

#[derive(Parser)]
#[command(name = "latrem", version, about = "Lattice-point remainders of rotated convex bodies")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exponent table as CSV (name, exact_rational, decimal).
    Exponents {
        #[arg(long)]
        d: u32,
        #[arg(long, default_value = "infinity")]
        omega: String,
    },
    /// Support function, gradient, Hessian or curvature at a direction.
    Geometry {
        #[arg(long)]
        body: String,
        #[arg(long)]
        d: Option<usize>,
        /// support | gradient | hessian | curvature | point
        #[arg(long)]
        op: String,
        #[arg(long)]
        xi: String,
        #[arg(long, default_value = "identity")]
        rotation: String,
    },
    /// Exact number of lattice points in `tθB`.
    Count {
        #[arg(long)]
        body: String,
        #[arg(long)]
        d: Option<usize>,
        /// identity | seed:N | matrix:FILE
        #[arg(long, default_value = "identity")]
        rotation: String,
        #[arg(long)]
        t: f64,
    },
    /// Remainders over a geometric t-grid `a:b:n`.
    RemainderScan {
        #[arg(long)]
        body: String,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, default_value = "identity")]
        rotation: String,
        #[arg(long = "t-grid")]
        t_grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Direct Fourier transform of the indicator against its main term.
    FourierEval {
        #[arg(long)]
        body: String,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, default_value = "identity")]
        rotation: String,
        #[arg(long)]
        xi: String,
        /// Linear grid `a:b:n`.
        #[arg(long = "lambda-grid")]
        lambda_grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mollified spectral estimate split at a curvature threshold.
    PoissonEstimate {
        #[arg(long)]
        body: String,
        #[arg(long)]
        d: Option<usize>,
        /// Haar rotation seed.
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value = "infinity")]
        omega: String,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lattice-vector witness with a large mixed-derivative determinant.
    Detlab {
        #[arg(long)]
        body: String,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, default_value = "identity")]
        rotation: String,
        #[arg(long)]
        xi: String,
        #[arg(long, default_value_t = 1)]
        q: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Differencing and Poisson steps on a supersphere support phase.
    Expsum {
        /// supersphere-support:OMEGA
        #[arg(long)]
        phase: String,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        q: u32,
        #[arg(long = "T")]
        t: f64,
        #[arg(long)]
        mstar: f64,
        #[arg(long)]
        k: f64,
        #[arg(long = "h-weyl", default_value_t = 4)]
        h_weyl: usize,
        #[arg(long, default_value_t = 1)]
        order: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan and fit driven by a key=value config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad number '{x}'")))
        .collect()
}

fn parse_grid(s: &str) -> Result<(f64, f64, usize)> {
    let f: Vec<&str> = s.split(':').collect();
    if f.len() != 3 {
        bail!("grid must be a:b:n, got '{s}'");
    }
    Ok((f[0].parse()?, f[1].parse()?, f[2].parse()?))
}

fn parse_body(spec: &str, d: Option<usize>, xi: Option<&[f64]>) -> Result<ConvexBody> {
    let d = d.or_else(|| xi.map(|x| x.len()));
    Ok(ConvexBody::parse(spec, d)?)
}

fn parse_rotation(spec: &str, d: usize) -> Result<Rotation> {
    let spec = spec.trim();
    if spec == "identity" {
        return Ok(Rotation::identity(d));
    }
    if let Some(n) = spec.strip_prefix("seed:") {
        return Ok(haar_rotation(n.trim().parse().context("bad rotation seed")?, d)?);
    }
    if let Some(path) = spec.strip_prefix("matrix:") {
        let text = fs::read_to_string(path.trim()).with_context(|| format!("reading {path}"))?;
        let rows: Vec<Vec<f64>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.split([',', ' ', '\t']).filter(|x| !x.is_empty()).map(|x| x.parse::<f64>()).collect())
            .collect::<std::result::Result<_, _>>()
            .context("bad matrix entry")?;
        let r = Rotation::from_rows(&rows, 1e-9)?;
        if r.dim() != d {
            bail!("rotation is {}x{}, body has d = {d}", r.dim(), r.dim());
        }
        return Ok(r);
    }
    bail!("rotation must be identity, seed:N or matrix:FILE")
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Exponents { d, omega } => {
            let omega: Omega = omega.parse()?;
            let table = ExponentTable::new(d, omega)?;
            let mut s = String::from("name,exact_rational,decimal\n");
            for (name, q) in table.rows()? {
                writeln!(s, "{name},{},{}", rational_string(&q), to_f64(&q))?;
            }
            emit(None, &s)
        }
        Cmd::Geometry { body, d, op, xi, rotation } => {
            let xi = parse_list(&xi)?;
            let body = parse_body(&body, d, Some(&xi))?;
            let rot = parse_rotation(&rotation, body.dim())?;
            let v = match op.as_str() {
                "support" => serde_json::json!({ "support": geometry::support(&body, &rot, &xi)? }),
                "gradient" | "hessian" => {
                    let (g, h) = geometry::support_grad_hessian(&body, &rot, &xi)?;
                    serde_json::json!({ "gradient": g, "hessian": h })
                }
                "curvature" => serde_json::json!({ "K": geometry::curvature_at_direction(&body, &rot, &xi)? }),
                "point" => serde_json::to_value(geometry::inverse_gauss(&body, &rot, &xi)?)?,
                other => bail!("unknown op '{other}' (support, gradient, hessian, curvature, point)"),
            };
            println!("{}", serde_json::to_string_pretty(&v)?);
            Ok(())
        }
        Cmd::Count { body, d, rotation, t } => {
            let body = parse_body(&body, d, None)?;
            let rot = parse_rotation(&rotation, body.dim())?;
            println!("{}", count_points(&body, &rot, t)?);
            Ok(())
        }
        Cmd::RemainderScan { body, d, rotation, t_grid, out } => {
            let body = parse_body(&body, d, None)?;
            let rot = parse_rotation(&rotation, body.dim())?;
            let (a, b, n) = parse_grid(&t_grid)?;
            if !(a > 0.0 && b >= a && n >= 1) {
                bail!("t-grid needs 0 < a <= b and n >= 1");
            }
            let seed = rotation.strip_prefix("seed:").unwrap_or("");
            let mut s = String::from("seed,t,count,volume_term,remainder\n");
            for t in geometric_grid(a, b, n) {
                let r = remainder(&body, &rot, t)?;
                writeln!(s, "{seed},{},{},{},{}", f(t), r.count, f(r.volume_term), f(r.remainder))?;
            }
            emit(out.as_deref(), &s)
        }
        Cmd::FourierEval { body, d, rotation, xi, lambda_grid, out } => {
            let xi = parse_list(&xi)?;
            let body = parse_body(&body, d, Some(&xi))?;
            let rot = parse_rotation(&rotation, body.dim())?;
            let (a, b, n) = parse_grid(&lambda_grid)?;
            if n == 0 {
                bail!("lambda grid needs n >= 1");
            }
            let mut s = String::from("lambda,re_direct,im_direct,re_main,im_main,discrepancy\n");
            for k in 0..n {
                let lam = if n == 1 { a } else { a + (b - a) * k as f64 / (n - 1) as f64 };
                let e = fourier_eval(&body, &rot, &xi, lam)?;
                writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    f(lam),
                    f(e.direct.re),
                    f(e.direct.im),
                    f(e.main_term.re),
                    f(e.main_term.im),
                    f(e.discrepancy)
                )?;
            }
            emit(out.as_deref(), &s)
        }
        Cmd::PoissonEstimate { body, d, seed, t, omega, epsilon, delta, out } => {
            let body = parse_body(&body, d, None)?;
            let dim = body.dim();
            let rot = haar_rotation(seed, dim)?;
            let omega: Omega = omega.parse()?;
            let (eps0, delta0) = schedule_parameters(dim as u32, omega, t, true)?;
            let eps = epsilon.unwrap_or(eps0);
            let delta = delta.unwrap_or(delta0);
            let est = split_sums(&body, &rot, t, eps, delta, SumOptions::default())?;
            let (spatial, lower, upper) = if dim == 2 {
                let vol = latrem_core::lattice::volume(&body)?.value * t * t;
                let sw = sandwich_bounds(&body, &rot, t, eps)?;
                (f(smoothed_count(&body, &rot, t, eps)? - vol), f(sw.lower), f(sw.upper))
            } else {
                (String::new(), String::new(), String::new())
            };
            let mut s = String::from("t,epsilon,delta,re_sumI,re_sumII,spectral,spatial,lower,upper\n");
            writeln!(
                s,
                "{},{},{},{},{},{},{spatial},{lower},{upper}",
                f(t),
                f(eps),
                f(delta),
                f(est.sum_i.re),
                f(est.sum_ii.re),
                f(est.spectral_sum.re)
            )?;
            emit(out.as_deref(), &s)
        }
        Cmd::Detlab { body, d, rotation, xi, q, out } => {
            let xi = parse_list(&xi)?;
            let body = parse_body(&body, d, Some(&xi))?;
            let rot = parse_rotation(&rotation, body.dim())?;
            let w = construct(&body, &rot, &xi, q, &DetCalibration::default_for(body.dim()))?;
            emit(out.as_deref(), &(serde_json::to_string_pretty(&w)? + "\n"))
        }
        Cmd::Expsum { phase, d, q, t, mstar, k, h_weyl, order, out } => {
            let omega: u32 = phase
                .strip_prefix("supersphere-support:")
                .context("phase must be supersphere-support:OMEGA")?
                .trim()
                .parse()
                .context("bad phase type")?;
            let inst = ExpSumInstance::supersphere_support(d, omega, q, t, mstar, k)?;
            let opts = BOptions { order, ..BOptions::default() };
            let trace = run_process(&inst, h_weyl, &opts)?;
            emit(out.as_deref(), &(serde_json::to_string_pretty(&trace)? + "\n"))
        }
        Cmd::Experiment { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let summary = experiment(&cfg)?;
            if let Some(out) = &cfg.out {
                eprintln!("wrote {} and {}", out.display(), summary_path(out).display());
            }
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
