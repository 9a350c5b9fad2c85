use super::checks::*;
use super::{optimal_lambda, BoundCheck, BoundParams, Slack, Status, Subject};
use crate::error::Result;
use crate::functionals::{euclid_to_gauss, gauss_to_euclid};
use crate::probes::*;
use rayon::prelude::*;
use serde::Serialize;

/// A probe in the battery.
#[derive(Clone, Debug)]
pub struct BatteryEntry {
    pub probe: ProbeFunction,
    /// run the compact-support checks (compact-support entropy bound)
    pub compact: bool,
}

impl BatteryEntry {
    fn new(probe: ProbeFunction) -> Self {
        let compact = probe.support().is_some();
        Self { probe, compact }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BatteryOptions {
    pub slack: Slack,
}

#[derive(Clone, Debug, Serialize)]
pub struct BatterySummary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub checks: Vec<BoundCheck>,
}

impl BatterySummary {
    pub fn from_checks(checks: Vec<BoundCheck>) -> Self {
        let count = |s: Status| checks.iter().filter(|c| c.status == s).count();
        Self { total: checks.len(), passed: count(Status::Pass), failed: count(Status::Fail), skipped: count(Status::Skipped), checks }
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

/// Constant, optimizers, tangents, dilated bumps, the two-tail sequence, narrow Gaussians and mean-zero probes.
pub fn standard_battery() -> Result<Vec<BatteryEntry>> {
    let mut probes = vec![make_constant_one(1)?, make_constant_one(3)?];
    for b in [0.0, 0.5, 1.0] {
        probes.push(make_gaussian_optimizer(&[b])?);
    }
    for eps in [0.01, 0.1, 0.5] {
        probes.push(make_tangent(eps, 1)?);
    }
    for a in [1.0, 2.0] {
        for n in [10, 20, 40] {
            probes.push(make_prop42(a, n)?);
        }
    }
    probes.push(make_gaussian_density(0.5, 1)?);
    probes.push(make_gaussian_density(0.8, 2)?);
    probes.push(make_hermite(1)?);
    probes.push(make_hermite(2)?);
    let base = default_bump()?;
    for n in [1, 2, 4] {
        probes.push(make_example1(&base, n)?);
    }
    let sqrt_gamma = make_constant_one(1)?.to_euclidean()?;
    probes.push(sqrt_gamma.dilate(2f64.sqrt())?);
    probes.push(sqrt_gamma);
    probes.push(gauss_to_euclid(&make_gaussian_optimizer(&[0.5])?)?);
    Ok(probes.into_iter().map(BatteryEntry::new).collect())
}

fn gaussian_checks(s: &Subject, slack: Slack) -> Result<Vec<BoundCheck>> {
    let p = BoundParams { slack, ..BoundParams::new(s.report.dim) };
    let mut out = vec![
        check_lsi(s, LsiForm::G, &p)?,
        check_ckp(s, &p)?,
        check_improved_gaussian(s, &p)?,
        check_stab0(s, &p)?,
        check_cor_stab(s, &p)?,
        check_cor_stab_sharp(s, &p)?,
        check_cor24(s, &p)?,
        check_moment_bound(s, &p)?,
    ];
    for q in [1.0, 1.5] {
        out.push(check_beckner(s, q, &p)?);
    }
    Ok(out)
}

fn euclidean_checks(s: &Subject, compact: bool, slack: Slack) -> Result<Vec<BoundCheck>> {
    let mut p = BoundParams { slack, ..BoundParams::new(s.report.dim) };
    let mut out = vec![check_lsi(s, LsiForm::E, &p)?, check_lsi(s, LsiForm::S, &p)?];
    p.lambda = optimal_lambda(&s.report)?;
    out.push(check_lsi(s, LsiForm::ELambda, &p)?);
    out.push(check_stab_e(s, &p)?);
    out.push(check_prop2(s, &p)?);
    if compact && s.report.dim == 1 {
        out.push(check_prop1(s, &p)?);
        out.push(check_prop1_sharp(s, &p)?);
    }
    Ok(out)
}

fn tag(mut checks: Vec<BoundCheck>, suffix: &str) -> Vec<BoundCheck> {
    for c in &mut checks {
        c.probe = format!("{}{suffix}", c.probe);
    }
    checks
}

/// Every check for one probe, in its own mode and in the other mode.
pub fn entry_checks(entry: &BatteryEntry, slack: Slack) -> Result<Vec<BoundCheck>> {
    let s = Subject::new(entry.probe.clone())?;
    match entry.probe.mode {
        Mode::Gaussian => {
            let mut out = gaussian_checks(&s, slack)?;
            let u = Subject::new(gauss_to_euclid(&entry.probe)?)?;
            out.extend(tag(euclidean_checks(&u, false, slack)?, " [u=v√γ]"));
            Ok(out)
        }
        Mode::Euclidean => {
            let mut out = euclidean_checks(&s, entry.compact, slack)?;
            let lambda = optimal_lambda(&s.report)?;
            let v = Subject::new(euclid_to_gauss(&entry.probe, lambda)?)?;
            out.extend(tag(gaussian_checks(&v, slack)?, &format!(" [λ={lambda:.6}]")));
            Ok(out)
        }
    }
}

/// Runs the battery in parallel; rows keep the battery order.
pub fn run_battery(entries: &[BatteryEntry], opts: &BatteryOptions) -> Result<BatterySummary> {
    let rows: Vec<Vec<BoundCheck>> = entries.par_iter().map(|e| entry_checks(e, opts.slack)).collect::<Result<_>>()?;
    Ok(BatterySummary::from_checks(rows.into_iter().flatten().collect()))
}

fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.11e}")
    }
}

/// name, probe, lhs, relation, rhs, margin, tolerance, status
pub fn to_csv(checks: &[BoundCheck]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "probe", "lhs", "relation", "rhs", "margin", "tolerance", "status"]).expect("in-memory write");
    for c in checks {
        w.write_record([
            c.name.clone(),
            c.probe.clone(),
            num(c.lhs),
            c.relation.symbol().into(),
            num(c.rhs),
            num(c.margin),
            num(c.tolerance),
            c.status.name().into(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}
