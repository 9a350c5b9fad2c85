#![allow(clippy::neg_cmp_op_on_partial_ord)]

use clap::{Args, Parser, Subcommand, ValueEnum};
use lsikit::flows::{
    heat_renyi_monitor, identity_rows, interior_times, is_non_increasing, trace_functionals, FlowState, GaussianMixture, HermiteSeries, Identity,
};
use lsikit::functionals::{report_with, w2_distance_1d, ReportOptions};
use lsikit::ineq::{entry_checks, run_battery, standard_battery, to_csv, BatteryEntry, BatteryOptions, BatterySummary, Slack};
use lsikit::manifold::{h1_seminorm_distance_to_manifold, l2_distance_to_manifold};
use lsikit::probes::{default_bump, make_example1, make_prop42, make_tangent, Mode, ProbeFunction, ProbeSpec};
use lsikit::{Error, Result};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_PASS: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_DIVERGENT: u8 = 2;
const EXIT_FAIL: u8 = 3;
const MIN_TOL: f64 = 1e-15;
const IDENTITY_TOL: f64 = 1e-4;
const MONITOR_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "lsikit", version, about = "Log-Sobolev functionals, bound checks, counterexample sweeps and flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Functional report of one probe
    Report {
        #[command(flatten)]
        probe: ProbeArgs,
        /// quadrature tolerance
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Bound checks on the standard battery, or on one probe when a probe is given
    Verify {
        #[command(flatten)]
        probe: ProbeArgs,
        /// fixed tolerance replacing the default 1e-7 + 10 × quadrature error
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Deficit and distances along a counterexample sweep
    Counterexample {
        #[arg(long, value_enum)]
        family: SweepFamily,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// sequence indices
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        /// tangent amplitudes
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Trace of E, I, R (and G in the heat frame) along a mixture flow
    Flow {
        #[arg(long, value_enum, default_value_t = Frame::Ou)]
        frame: Frame,
        /// component weight,mean,variance; repeatable
        #[arg(long = "component", value_parser = parse_triple)]
        components: Vec<(f64, f64, f64)>,
        /// equal-weight bumps at ±mean with the given variance: mean,variance
        #[arg(long, value_parser = parse_pair, conflicts_with = "components")]
        two_bump: Option<(f64, f64)>,
        #[arg(long, value_enum, default_value_t = FlowMethod::Mixture)]
        method: FlowMethod,
        /// Hermite truncation order
        #[arg(long, default_value_t = 64)]
        order: usize,
        #[arg(long, default_value_t = 2.0)]
        t_max: f64,
        /// number of trace times, evenly spaced on [0, t_max]
        #[arg(long, default_value_t = 21)]
        points: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args, Default)]
struct ProbeArgs {
    /// JSON probe spec file
    #[arg(long, conflicts_with = "family")]
    spec: Option<PathBuf>,
    /// constant, optimizer, tangent, hermite, gaussian_density, euclid_gaussian, bump, example1, example2, prop42, gns_optimizer
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    b: Option<Vec<f64>>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    var: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    amplitude: Option<f64>,
}

#[derive(Args)]
struct OutputArgs {
    /// output file; standard output when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepFamily {
    Prop42,
    Example1,
    Tangent,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Frame {
    Ou,
    Heat,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FlowMethod {
    Mixture,
    Hermite,
}

fn parse_numbers(s: &str, len: usize) -> std::result::Result<Vec<f64>, String> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x}: {e}"))).collect::<std::result::Result<_, _>>()?;
    if v.len() != len {
        return Err(format!("expected {len} comma-separated numbers"));
    }
    Ok(v)
}

fn parse_triple(s: &str) -> std::result::Result<(f64, f64, f64), String> {
    let v = parse_numbers(s, 3)?;
    Ok((v[0], v[1], v[2]))
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let v = parse_numbers(s, 2)?;
    Ok((v[0], v[1]))
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl ProbeArgs {
    fn given(&self) -> bool {
        self.spec.is_some() || self.family.is_some()
    }

    fn spec(&self) -> Result<ProbeSpec> {
        if let Some(path) = &self.spec {
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            return ProbeSpec::from_json(&text);
        }
        let family = self.family.as_deref().ok_or_else(|| usage("a probe needs --family or --spec"))?;
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| usage(format!("--family {family} needs --{name}")));
        let d = self.d.unwrap_or(1);
        Ok(match family {
            "constant" => ProbeSpec::Constant { d },
            "optimizer" => ProbeSpec::Optimizer { b: self.b.clone().ok_or_else(|| usage("--family optimizer needs --b"))? },
            "tangent" => ProbeSpec::Tangent { eps: need(self.eps, "eps")?, d },
            "hermite" => ProbeSpec::Hermite { k: self.k.ok_or_else(|| usage("--family hermite needs --k"))? },
            "gaussian_density" => ProbeSpec::GaussianDensity { var: need(self.var, "var")?, d },
            "euclid_gaussian" => ProbeSpec::EuclidGaussian { var: self.var.unwrap_or(1.0), d },
            "bump" => ProbeSpec::Bump,
            "example1" => ProbeSpec::Example1 { n: self.n.ok_or_else(|| usage("--family example1 needs --n"))? },
            "example2" => ProbeSpec::Example2 { a: need(self.a, "a")?, d },
            "prop42" => ProbeSpec::Prop42 { a: self.a.unwrap_or(1.0), n: self.n.ok_or_else(|| usage("--family prop42 needs --n"))? },
            "gns_optimizer" => ProbeSpec::GnsOptimizer { p: need(self.p, "p")?, amplitude: need(self.amplitude, "amplitude")? },
            other => return Err(usage(format!("unknown family {other}"))),
        })
    }

    fn build(&self) -> Result<ProbeFunction> {
        self.spec()?.build()
    }
}

impl OutputArgs {
    fn format(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => std::fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.11e}")
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

fn cmd_report(probe: &ProbeArgs, tol: Option<f64>, out: &OutputArgs) -> Result<u8> {
    let p = probe.build()?;
    let mut opts = ReportOptions::default();
    if let Some(t) = tol {
        if !(t >= MIN_TOL) || !t.is_finite() {
            return Err(usage(format!("tolerance {t} is below {MIN_TOL:e}")));
        }
        opts.tol = t;
    }
    let r = report_with(&p, &opts)?;
    let text = match out.format(Format::Json) {
        Format::Json => to_json(&r),
        Format::Csv => {
            let rows: Vec<Vec<String>> = [
                ("l2_norm2", r.l2_norm2),
                ("fisher", r.fisher),
                ("entropy", r.entropy),
                ("entropy_raw", r.entropy_raw),
                ("abs_entropy", r.abs_entropy),
                ("entropy_below_one", r.entropy_below_one),
                ("second_moment", r.second_moment),
                ("deficit", r.deficit),
                ("negative_mass", r.negative_mass),
            ]
            .iter()
            .map(|(k, e)| vec![k.to_string(), num(e.value), num(e.error), e.converged.to_string()])
            .collect();
            csv_text(&["field", "value", "error", "converged"], &rows)
        }
    };
    out.emit(&text)?;
    for f in &r.divergent {
        eprintln!("divergent: {f}");
    }
    Ok(if r.divergent.is_empty() { EXIT_PASS } else { EXIT_DIVERGENT })
}

fn cmd_verify(probe: &ProbeArgs, tol: Option<f64>, out: &OutputArgs) -> Result<u8> {
    let mut opts = BatteryOptions::default();
    if let Some(t) = tol {
        if !(t >= MIN_TOL) || !t.is_finite() {
            return Err(usage(format!("tolerance {t} is below {MIN_TOL:e}")));
        }
        opts.slack = Slack::fixed(t);
    }
    let summary = if probe.given() {
        let p = probe.build()?;
        let compact = p.support().is_some();
        BatterySummary::from_checks(entry_checks(&BatteryEntry { probe: p, compact }, opts.slack)?)
    } else {
        run_battery(&standard_battery()?, &opts)?
    };
    let text = match out.format(Format::Csv) {
        Format::Csv => to_csv(&summary.checks),
        Format::Json => to_json(&summary),
    };
    out.emit(&text)?;
    eprintln!("{} checks: {} pass, {} fail, {} skipped", summary.total, summary.passed, summary.failed, summary.skipped);
    for c in summary.checks.iter().filter(|c| c.is_failure()) {
        eprintln!("fail: {} {} margin {:e}", c.name, c.probe, c.margin);
    }
    Ok(if summary.all_passed() { EXIT_PASS } else { EXIT_FAIL })
}

#[derive(Serialize)]
struct SweepRow {
    param: f64,
    delta: f64,
    second_moment: f64,
    l2_distance2: Option<f64>,
    h1_distance2: Option<f64>,
    w2_squared: Option<f64>,
    divergent: bool,
}

fn sweep_row(param: f64, p: &ProbeFunction) -> Result<SweepRow> {
    let r = report_with(p, &ReportOptions::default())?;
    let gaussian_line = p.mode == Mode::Gaussian && p.dim == 1;
    let (l2, h1, w2) = if gaussian_line {
        (Some(l2_distance_to_manifold(p)?.distance2), Some(h1_seminorm_distance_to_manifold(p)?.distance2), Some(w2_distance_1d(p)?.powi(2)))
    } else {
        (None, None, None)
    };
    Ok(SweepRow {
        param,
        delta: r.deficit.value,
        second_moment: r.second_moment.value,
        l2_distance2: l2,
        h1_distance2: h1,
        w2_squared: w2,
        divergent: !r.divergent.is_empty(),
    })
}

fn cmd_counterexample(family: SweepFamily, a: f64, n: &[usize], eps: &[f64], out: &OutputArgs) -> Result<u8> {
    let (name, probes): (&str, Vec<(f64, ProbeFunction)>) = match family {
        SweepFamily::Prop42 => {
            let ns = if n.is_empty() { vec![10, 20, 40] } else { n.to_vec() };
            ("n", ns.into_iter().map(|k| Ok((k as f64, make_prop42(a, k)?))).collect::<Result<_>>()?)
        }
        SweepFamily::Example1 => {
            let base = default_bump()?;
            let ns = if n.is_empty() { vec![1, 2, 4, 8] } else { n.to_vec() };
            ("n", ns.into_iter().map(|k| Ok((k as f64, make_example1(&base, k)?))).collect::<Result<_>>()?)
        }
        SweepFamily::Tangent => {
            let es = if eps.is_empty() { vec![0.02, 0.04, 0.06, 0.08, 0.1] } else { eps.to_vec() };
            ("eps", es.into_iter().map(|e| Ok((e, make_tangent(e, 1)?))).collect::<Result<_>>()?)
        }
    };
    let rows: Vec<SweepRow> = probes.iter().map(|(x, p)| sweep_row(*x, p)).collect::<Result<_>>()?;
    let text = match out.format(Format::Csv) {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let param = if name == "n" { format!("{}", r.param as usize) } else { num(r.param) };
                    vec![param, num(r.delta), num(r.second_moment), opt(r.l2_distance2), opt(r.h1_distance2), opt(r.w2_squared)]
                })
                .collect();
            csv_text(&[name, "delta", "second_moment", "l2_distance2", "h1_distance2", "w2_squared"], &body)
        }
    };
    out.emit(&text)?;
    Ok(if rows.iter().any(|r| r.divergent) { EXIT_DIVERGENT } else { EXIT_PASS })
}

#[allow(clippy::too_many_arguments)]
fn cmd_flow(
    frame: Frame,
    components: &[(f64, f64, f64)],
    two_bump: Option<(f64, f64)>,
    method: FlowMethod,
    order: usize,
    t_max: f64,
    points: usize,
    out: &OutputArgs,
) -> Result<u8> {
    if points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    if !(t_max > 0.1) || !t_max.is_finite() {
        return Err(usage("--t-max must exceed 0.1"));
    }
    let mode = match frame {
        Frame::Ou => Mode::Gaussian,
        Frame::Heat => Mode::Euclidean,
    };
    let mix = match (two_bump, components.is_empty()) {
        (Some((m, v)), _) => GaussianMixture::two_bump(mode, m, v)?,
        (None, false) => GaussianMixture::from_triples(mode, components)?,
        (None, true) => return Err(usage("flow needs --component or --two-bump")),
    };
    let state = match method {
        FlowMethod::Mixture => FlowState::Mixture(mix.clone()),
        FlowMethod::Hermite => FlowState::Hermite(HermiteSeries::from_mixture(&mix, order)?),
    };
    let times: Vec<f64> = (0..points).map(|i| t_max * i as f64 / (points - 1) as f64).collect();
    let trace = match frame {
        Frame::Ou => trace_functionals(&state, &times)?,
        Frame::Heat => heat_renyi_monitor(&mix, &times)?,
    };
    let text = match out.format(Format::Csv) {
        Format::Csv => trace.to_csv(),
        Format::Json => to_json(&trace),
    };
    out.emit(&text)?;
    let passed = match frame {
        Frame::Ou => {
            let rows = identity_rows(&state, Identity::EntropyDecay, &interior_times(t_max, 10))?;
            let mut ok = true;
            for r in &rows {
                let pass = r.rel_err <= IDENTITY_TOL;
                ok &= pass;
                eprintln!("dE/dt = -4I at t={:.4}: rel err {:.2e} {}", r.t, r.rel_err, if pass { "pass" } else { "fail" });
            }
            ok
        }
        Frame::Heat => {
            let ok = is_non_increasing(&trace.monitor(), MONITOR_TOL);
            eprintln!("G non-increasing: {}", if ok { "pass" } else { "fail" });
            ok
        }
    };
    Ok(if passed { EXIT_PASS } else { EXIT_FAIL })
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Report { probe, tol, out } => cmd_report(&probe, tol, &out),
        Command::Verify { probe, tol, out } => cmd_verify(&probe, tol, &out),
        Command::Counterexample { family, a, n, eps, out } => cmd_counterexample(family, a, &n, &eps, &out),
        Command::Flow { frame, components, two_bump, method, order, t_max, points, out } => {
            cmd_flow(frame, &components, two_bump, method, order, t_max, points, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
