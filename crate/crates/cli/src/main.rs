use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ringmod::condenser::{capacity_with, check_lemma1_bound, Condenser};
use ringmod::criteria::{
    check_divergence_criterion, check_fmo, check_loewner_bound, check_ls_criterion, default_ladder,
    run_equicontinuity_experiment, theorem1_growth_check, DivergenceVerdict, EquicontinuityOptions, LsVerdict,
    OscillationVerdict, PsiFamily,
};
use ringmod::curves::{generate_annulus_family_with_step, DiscreteCurve};
use ringmod::geometry::config::ChartConfig;
use ringmod::geometry::{GeodesicAnnulus, GridDomain, MetricChart};
use ringmod::modulus::{annulus_modulus_oracle, compute_modulus_with, Sampling, SolverOptions};
use ringmod::ringmap::{verify_ring_inequality, MappingSpec, QField};

const PASS: u8 = 0;
const FAIL: u8 = 2;
const INCONCLUSIVE: u8 = 3;

#[derive(Parser)]
#[command(name = "ringmod", version, about = "p-modulus, capacity and ring-mapping checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ChartArgs {
    /// Chart/Q configuration file (TOML); a Euclidean chart when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dimension of the default Euclidean chart.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Half-width of the default Euclidean chart box.
    #[arg(long, default_value_t = 3.0)]
    half: f64,
    /// Center point, comma separated; the origin by default.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// Q as a number or an expression in x, y, z, r; overrides the config.
    #[arg(long)]
    q: Option<String>,
    /// CSV report path; stdout by default.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SampleArgs {
    #[arg(long, default_value_t = 4096)]
    curves: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Grid cells per axis; the dimension default when absent.
    #[arg(long)]
    res: Option<usize>,
    /// Relative duality-gap tolerance of the modulus solver.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
}

impl SampleArgs {
    fn sampling(&self) -> Sampling {
        let mut s = Sampling::new(self.curves, self.seed);
        s.resolution = self.res;
        s.solver = SolverOptions {
            history_every: 0,
            ..SolverOptions::default().with_gap_tol(self.tol)
        };
        s
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MapArg {
    Identity,
    Stretch,
    Analytic,
}

#[derive(Args, Clone)]
struct MapArgs {
    #[arg(long, value_enum, default_value = "identity")]
    map: MapArg,
    /// Radial stretch exponent in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Component expressions of an analytic map, separated by `;`.
    #[arg(long)]
    components: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PsiArg {
    LogPower,
    Reciprocal,
}

#[derive(Subcommand)]
enum Command {
    /// Modulus of the curves joining the boundary spheres of a ring.
    Modulus {
        #[command(flatten)]
        chart: ChartArgs,
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        r1: f64,
        #[arg(long, default_value_t = std::f64::consts::E)]
        r2: f64,
    },
    /// p-capacity of the ball condenser (B(x0, eps0), B(x0, eps)).
    Capacity {
        #[command(flatten)]
        chart: ChartArgs,
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        eps0: f64,
    },
    /// Ring (p,Q)-inequality for a test mapping, one CSV row per radial profile.
    VerifyRing {
        #[command(flatten)]
        chart: ChartArgs,
        #[command(flatten)]
        sample: SampleArgs,
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        r1: f64,
        #[arg(long, default_value_t = std::f64::consts::E)]
        r2: f64,
    },
    /// Capacity bound cap_p f(E) <= F / I^p over a list of inner radii.
    Lemma1 {
        #[command(flatten)]
        chart: ChartArgs,
        #[command(flatten)]
        sample: SampleArgs,
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 0.1)]
        eps0: f64,
        /// Inner radii, comma separated.
        #[arg(long, default_value = "0.01,0.001")]
        eps: String,
        #[arg(long, value_enum, default_value = "log-power")]
        psi: PsiArg,
    },
    /// Mean oscillation of Q over shrinking balls.
    CheckFmo {
        #[command(flatten)]
        chart: ChartArgs,
        #[arg(long, default_value_t = 0.5)]
        eps0: f64,
        #[arg(long, default_value_t = 12)]
        rungs: usize,
        #[arg(long, default_value_t = 128)]
        res: usize,
    },
    /// Divergence of the integral of dr / (r^{(n-1)/(p-1)} q(r)^{1/(p-1)}).
    CheckDivergence {
        #[command(flatten)]
        chart: ChartArgs,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value_t = 24)]
        rungs: usize,
    },
    /// L^s integrability route with the Hölder split.
    CheckLs {
        #[command(flatten)]
        chart: ChartArgs,
        #[arg(long, default_value_t = 1.5)]
        p: f64,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 0.5)]
        eps0: f64,
        #[arg(long, default_value_t = 12)]
        rungs: usize,
        #[arg(long, default_value_t = 256)]
        res: usize,
    },
    /// Growth of F(eps) against log log(1/eps) and I^p for the log-power psi.
    Theorem1Growth {
        #[command(flatten)]
        chart: ChartArgs,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 0.1)]
        eps0: f64,
        /// Radii, comma separated.
        #[arg(long, default_value = "1e-2,1e-3,1e-4,1e-5,1e-6,1e-7")]
        eps: String,
    },
    /// Modulus of continuity of a radial-stretch family under a Q budget.
    Equicontinuity {
        #[command(flatten)]
        chart: ChartArgs,
        #[command(flatten)]
        sample: SampleArgs,
        /// Stretch exponents, comma separated.
        #[arg(long, default_value = "0.3,0.5,0.8,1.0")]
        alphas: String,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value = "0.1,0.01,0.001")]
        eps: String,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Declared lower bound on diam K_f.
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
    },
    /// Empirical Loewner constant over segment pairs in B(x0, R).
    Loewner {
        #[command(flatten)]
        chart: ChartArgs,
        #[command(flatten)]
        sample: SampleArgs,
        /// Segment pair `a;b|c;d` with comma-separated points; repeatable.
        #[arg(long = "pair", required = true, allow_hyphen_values = true)]
        pairs: Vec<String>,
        #[arg(long, default_value_t = 2.0)]
        radius: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
}

fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad number `{t}`")))
        .collect()
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    parse_point(s)
}

struct Setup {
    chart: MetricChart,
    x0: Vec<f64>,
    q: QField,
}

impl ChartArgs {
    fn setup(&self) -> Result<Setup> {
        let (chart, cfg_q) = match &self.config {
            Some(path) => {
                let cfg = ChartConfig::load(path).with_context(|| format!("reading {}", path.display()))?;
                (cfg.build_chart()?, Some(QField::from_config(&cfg)?))
            }
            None => (MetricChart::euclidean(self.dim, self.half), None),
        };
        let n = chart.dim();
        let x0 = match &self.x0 {
            Some(s) => parse_point(s)?,
            None => vec![0.0; n],
        };
        if x0.len() != n {
            bail!("center has {} coordinates for a {n}-dimensional chart", x0.len());
        }
        let q = match &self.q {
            Some(s) => match s.parse::<f64>() {
                Ok(v) => QField::constant(v)?,
                Err(_) => QField::from_expr(s, n)?,
            },
            None => match cfg_q {
                Some(q) => q,
                None => QField::constant(1.0)?,
            },
        };
        Ok(Setup { chart, x0, q })
    }

    fn writer(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
            None => Box::new(io::stdout()),
        })
    }
}

impl MapArgs {
    fn build(&self, chart: &MetricChart, x0: &[f64]) -> Result<MappingSpec> {
        Ok(match self.map {
            MapArg::Identity => MappingSpec::identity(chart, x0)?,
            MapArg::Stretch => MappingSpec::radial_stretch(chart, x0, self.alpha)?,
            MapArg::Analytic => {
                let src = self.components.as_deref().context("--map analytic needs --components")?;
                let parts: Vec<&str> = src.split(';').map(str::trim).collect();
                MappingSpec::user_analytic(chart, chart, x0, &parts)?
            }
        })
    }
}

fn verdict(ok: bool) -> u8 {
    if ok {
        PASS
    } else {
        FAIL
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Modulus { chart, sample, p, r1, r2 } => {
            let s = chart.setup()?;
            let sampling = sample.sampling();
            let ann = GeodesicAnnulus::new(&s.chart, &s.x0, r1, r2)?;
            let (lo, hi) = ann.bounding_box()?;
            let grid = sampling.grid_around_box(&s.chart, &lo, &hi)?;
            let fam = generate_annulus_family_with_step(&ann, sample.curves, sample.seed, 0.5 * grid.lattice().min_spacing())?;
            let opts = SolverOptions {
                history_every: 1,
                ..sampling.solver.clone()
            };
            let r = compute_modulus_with(&fam, p, &grid, &opts)?;
            r.write_report_csv(chart.writer()?)?;
            let oracle = if s.chart.is_euclidean() {
                annulus_modulus_oracle(s.chart.dim(), p, r1, r2).map(|o| format!(", oracle {o:.6}")).unwrap_or_default()
            } else {
                String::new()
            };
            eprintln!(
                "modulus {:.6} (dual {:.6}, gap {:.2e}, {} iterations{oracle})",
                r.value, r.dual_value, r.duality_gap, r.iterations
            );
            Ok(verdict(r.converged))
        }
        Command::Capacity { chart, sample, p, eps, eps0 } => {
            let s = chart.setup()?;
            let cond = Condenser::new(&s.chart, &s.x0, eps, eps0)?;
            let sampling = sample.sampling();
            let grid = GridDomain::around(&s.chart, &s.x0, eps0, sampling.resolution_for(s.chart.dim()))?;
            let opts = SolverOptions {
                history_every: 1,
                ..sampling.solver.clone()
            };
            let r = capacity_with(&cond, p, &grid, sample.curves, sample.seed, &opts)?;
            r.write_report_csv(chart.writer()?)?;
            eprintln!("capacity {:.6} (gap {:.2e}, {} iterations)", r.value, r.duality_gap, r.iterations);
            Ok(verdict(r.converged))
        }
        Command::VerifyRing { chart, sample, map, p, r1, r2 } => {
            let s = chart.setup()?;
            let f = map.build(&s.chart, &s.x0)?;
            let r = verify_ring_inequality(&f, &s.x0, &s.q, p, r1, r2, &[], None, &sample.sampling())?;
            r.write_csv(chart.writer()?)?;
            eprintln!(
                "ring inequality for {} with Q = {}: {} (extremal LHS/RHS {:.4})",
                r.map,
                s.q.label(),
                if r.pass { "pass" } else { "fail" },
                r.extremal().ratio
            );
            Ok(verdict(r.pass))
        }
        Command::Lemma1 { chart, sample, map, p, eps0, eps, psi } => {
            let s = chart.setup()?;
            let f = map.build(&s.chart, &s.x0)?;
            let eps = parse_list(&eps)?;
            let inner = eps.iter().cloned().fold(f64::INFINITY, f64::min);
            let cond = Condenser::new(&s.chart, &s.x0, inner, eps0)?;
            let n = s.chart.dim();
            let psi = match psi {
                PsiArg::LogPower => PsiFamily::log_power(n, p),
                PsiArg::Reciprocal => PsiFamily::reciprocal(n, p),
            };
            let r = check_lemma1_bound(&f, &cond, &s.q, p, &psi, &eps, &sample.sampling())?;
            r.write_csv(chart.writer()?)?;
            eprintln!(
                "capacity bound for {}: {}{}",
                r.map,
                if r.pass { "pass" } else { "fail" },
                if r.degenerate_q { " (Q vanishes: degenerate bound)" } else { "" }
            );
            Ok(verdict(r.pass))
        }
        Command::CheckFmo { chart, eps0, rungs, res } => {
            let s = chart.setup()?;
            let grid = GridDomain::around(&s.chart, &s.x0, eps0, res)?;
            let r = check_fmo(&s.q, &s.x0, &grid, &default_ladder(eps0, rungs))?;
            r.write_csv(chart.writer()?)?;
            eprintln!("mean oscillation verdict: {:?} (slope {:.3})", r.verdict, r.slope);
            Ok(match r.verdict {
                OscillationVerdict::Fmo => PASS,
                OscillationVerdict::NotFmo => FAIL,
                OscillationVerdict::Inconclusive => INCONCLUSIVE,
            })
        }
        Command::CheckDivergence { chart, p, delta, rungs } => {
            let s = chart.setup()?;
            let r = check_divergence_criterion(&s.q, &s.x0, p, delta, &default_ladder(0.5 * delta, rungs), &s.chart)?;
            r.write_csv(chart.writer()?)?;
            eprintln!("divergence verdict: {:?}", r.verdict);
            Ok(match r.verdict {
                DivergenceVerdict::Divergent => PASS,
                DivergenceVerdict::Convergent => FAIL,
                DivergenceVerdict::Inconclusive => INCONCLUSIVE,
            })
        }
        Command::CheckLs { chart, p, s: exp, eps0, rungs, res } => {
            let s = chart.setup()?;
            let sampling = Sampling::default().with_resolution(res);
            let r = check_ls_criterion(&s.q, &s.x0, p, exp, eps0, &default_ladder(0.5 * eps0, rungs), &s.chart, &sampling)?;
            r.write_csv(chart.writer()?)?;
            eprintln!("L^s verdict: {:?} (norm {:.6})", r.verdict, r.q_norm);
            Ok(match r.verdict {
                LsVerdict::Pass => PASS,
                LsVerdict::Fail => FAIL,
                LsVerdict::NotApplicable => INCONCLUSIVE,
            })
        }
        Command::Theorem1Growth { chart, p, eps0, eps } => {
            let s = chart.setup()?;
            let r = theorem1_growth_check(&s.q, &s.x0, p, eps0, &parse_list(&eps)?, &s.chart)?;
            r.write_csv(chart.writer()?)?;
            eprintln!(
                "growth check: {} (log log spread {:.3}, F/I^p decreasing: {})",
                if r.pass { "pass" } else { "fail" },
                r.loglog_spread,
                r.ratio_decreasing
            );
            Ok(verdict(r.pass))
        }
        Command::Equicontinuity { chart, sample, alphas, p, eps, sigma, delta } => {
            let s = chart.setup()?;
            let family = parse_list(&alphas)?
                .into_iter()
                .map(|a| MappingSpec::radial_stretch(&s.chart, &s.x0, a))
                .collect::<ringmod::Result<Vec<_>>>()?;
            let opts = EquicontinuityOptions {
                sigma,
                declared_delta: delta,
                sampling: sample.sampling(),
                ..EquicontinuityOptions::default()
            };
            let r = run_equicontinuity_experiment(&family, &s.q, &s.x0, p, &parse_list(&eps)?, &opts)?;
            r.write_csv(chart.writer()?)?;
            for m in r.maps.iter().filter(|m| !m.included) {
                eprintln!("excluded {}: minimal Q {:.4} over budget {:.4}", m.map, m.minimal_q, m.budget);
            }
            eprintln!(
                "equicontinuity: {} (sup omega decreasing: {}, declared diam K_f >= {})",
                if r.pass { "pass" } else { "fail" },
                r.decreasing,
                r.declared_delta
            );
            Ok(verdict(r.pass))
        }
        Command::Loewner { chart, sample, pairs, radius, p } => {
            let s = chart.setup()?;
            let pairs = pairs
                .iter()
                .map(|spec| {
                    let (e, f) = spec.split_once('|').context("pair must be `a;b|c;d`")?;
                    let seg = |t: &str| -> Result<DiscreteCurve> {
                        let (a, b) = t.split_once(';').context("segment must be `a;b`")?;
                        Ok(DiscreteCurve::from_points(&[parse_point(a)?, parse_point(b)?])?)
                    };
                    Ok((seg(e)?, seg(f)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let r = check_loewner_bound(&pairs, &s.x0, radius, p, &s.chart, &sample.sampling())?;
            r.write_csv(chart.writer()?)?;
            eprintln!(
                "Loewner constant 1/C = {:.6}, rescaling spread {:.3}: {}",
                r.inverse_constant,
                r.rescale_spread,
                if r.pass { "pass" } else { "fail" }
            );
            Ok(verdict(r.pass))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
