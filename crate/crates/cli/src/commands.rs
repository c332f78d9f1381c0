use clap::{Args, Subcommand};
use serde_json::{json, Value};
use sle_wedge::conformal::{fit_c, wedge_map_table, SlitMap, WedgeRay};
use sle_wedge::estimate::loglog_fit;
use sle_wedge::exponents::{
    alpha_from_rho, wedge_gamma, RestrictionExponent, SleParameterPair, WedgeAngle,
};
use sle_wedge::loewner::{mc_trial_trace, mc_wedge_avoidance_with, FlowConfig, SleParams};
use sle_wedge::saw::{
    enumerate_walks_with_limit, pivot_sample, ratio_exponent_series, WedgeMask, ENUMERATION_GUARD,
};
use sle_wedge::verify::{self, Level, Options};

use crate::config::{Config, Num};
use crate::error::CliError;
use crate::manifest::RunOutput;

pub const DEFAULT_SEED: u64 = 20_240_601;

fn nums(v: &[Num]) -> Vec<f64> {
    v.iter().map(|n| n.0).collect()
}

fn list_of_nums(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|x| x.parse::<Num>().map(|n| n.0).map_err(CliError::Usage))
        .collect()
}

fn replay_num(out: &mut Vec<String>, flag: &str, v: f64) {
    out.extend([format!("--{flag}"), v.to_string()]);
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct WedgeMapArgs {
    /// Wedge angle as a fraction of π
    #[arg(long)]
    pub theta: Option<Num>,
    /// Map parameters R, comma separated; overrides the log grid
    #[arg(long = "r-grid", value_delimiter = ',')]
    pub r_grid: Option<Vec<Num>>,
    #[arg(long = "r-min")]
    pub r_min: Option<Num>,
    #[arg(long = "r-max")]
    pub r_max: Option<Num>,
    /// Number of log-spaced sizes between r-min and r-max
    #[arg(long)]
    pub points: Option<usize>,
    /// Restriction exponent used for the predicted probability
    #[arg(long)]
    pub alpha: Option<Num>,
}

pub fn wedge_map(a: &WedgeMapArgs, cfg: &Config) -> Result<RunOutput, CliError> {
    const S: &str = "wedge-map";
    let theta = cfg.pick(a.theta, S, "theta", Num(0.5))?.0;
    let alpha = cfg.pick(a.alpha, S, "alpha", Num(0.625))?.0;
    let grid = match &a.r_grid {
        Some(g) => nums(g),
        None => match cfg.get::<String>(S, "r-grid")? {
            Some(s) if a.r_min.is_none() && a.r_max.is_none() && a.points.is_none() => {
                list_of_nums(&s)?
            }
            _ => {
                let lo = cfg.pick(a.r_min, S, "r-min", Num(1.0))?.0;
                let hi = cfg.pick(a.r_max, S, "r-max", Num(1e6))?.0;
                let m = cfg.pick(a.points, S, "points", 10)?;
                if !(lo > 0.0 && hi >= lo) || m == 0 {
                    return Err(CliError::Usage(
                        "need 0 < r-min <= r-max and points >= 1".into(),
                    ));
                }
                if m == 1 {
                    vec![lo]
                } else {
                    (0..m)
                        .map(|i| lo * (hi / lo).powf(i as f64 / (m - 1) as f64))
                        .collect()
                }
            }
        },
    };
    if grid.is_empty() {
        return Err(CliError::Usage("empty R grid".into()));
    }
    let angle = WedgeAngle::new(theta)?;
    let rows = wedge_map_table(angle, &grid, RestrictionExponent::new(alpha)?)?;
    let mut csv = String::from("R,z0,phi_prime_zero,predicted_p\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.r, r.z0, r.phi_prime_zero, r.predicted_p
        ));
    }
    let expected = (1.0 - theta) / theta;
    let fit = match fit_c(angle, &grid) {
        Ok(f) => {
            eprintln!("c_hat = {:.6} (expected (1-θ)/θ = {expected:.6})", f.c_hat);
            json!({ "c_hat": f.c_hat, "k_hat": f.k_hat, "c_expected": expected, "fit": f.fit })
        }
        Err(e) => json!({ "c_hat": null, "c_expected": expected, "note": e.to_string() }),
    };
    let mut replay = vec![S.to_string()];
    replay_num(&mut replay, "theta", theta);
    replay_num(&mut replay, "alpha", alpha);
    replay.extend([
        "--r-grid".to_string(),
        grid.iter()
            .map(|r| r.to_string())
            .collect::<Vec<_>>()
            .join(","),
    ]);
    Ok(RunOutput {
        command: S.into(),
        params: json!({ "theta": theta, "alpha": alpha, "r_grid": grid }),
        seeds: vec![],
        replay,
        files: vec![("wedge_map.csv".into(), csv)],
        results: fit,
    })
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct SleAvoidArgs {
    #[arg(long)]
    pub kappa: Option<Num>,
    #[arg(long)]
    pub rho: Option<Num>,
    /// Wedge angle as a fraction of π
    #[arg(long)]
    pub theta: Option<Num>,
    /// Slit-map parameter R; the ray is the slit of that map
    #[arg(long = "R", conflicts_with = "length")]
    pub r: Option<Num>,
    /// Ray length from 1 along angle θπ, instead of --R
    #[arg(long)]
    pub length: Option<Num>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Starting driving value; the force point starts at 0
    #[arg(long = "start-a")]
    pub start_a: Option<Num>,
    #[arg(long = "stop-radius")]
    pub stop_radius: Option<Num>,
    #[arg(long = "max-time")]
    pub max_time: Option<Num>,
    /// Fixed-grid step of the run contract; the flow itself adapts its steps
    #[arg(long)]
    pub dt: Option<Num>,
    #[arg(long = "rel-step")]
    pub rel_step: Option<Num>,
    #[arg(long = "ray-points")]
    pub ray_points: Option<usize>,
    /// Also write the trace of this trial as CSV (needs --out)
    #[arg(long = "dump-trace")]
    pub dump_trace: Option<u64>,
}

pub fn sle_avoid(a: &SleAvoidArgs, cfg: &Config, workers: usize) -> Result<RunOutput, CliError> {
    const S: &str = "sle-avoid";
    let kappa = cfg.pick(a.kappa, S, "kappa", Num(8.0 / 3.0))?.0;
    let rho = cfg.pick(a.rho, S, "rho", Num(0.0))?.0;
    let theta = cfg.pick(a.theta, S, "theta", Num(0.5))?.0;
    let trials = cfg.pick(a.trials, S, "trials", 10_000)?;
    if trials == 0 {
        return Err(CliError::Usage("trials must be positive".into()));
    }
    let seed = cfg.seed(a.seed, S, DEFAULT_SEED)?;
    let start_a = cfg.pick(a.start_a, S, "start-a", Num(0.0))?.0;
    let max_time = cfg.pick(a.max_time, S, "max-time", Num(1e4))?.0;
    let rel_step = cfg
        .pick(
            a.rel_step,
            S,
            "rel-step",
            Num(FlowConfig::default().rel_step),
        )?
        .0;
    let ray_points = cfg.pick(
        a.ray_points,
        S,
        "ray-points",
        FlowConfig::default().ray_points,
    )?;
    let angle = WedgeAngle::new(theta)?;
    let length = match (a.length, a.r) {
        (Some(l), _) => Some(l.0),
        (None, Some(_)) => None,
        (None, None) => cfg.get::<Num>(S, "length")?.map(|l| l.0),
    };
    let (ray, map_r) = match length {
        Some(l) => {
            let ray = WedgeRay::new(angle, l)?;
            let map = SlitMap::from_ray(&ray)?;
            (ray, map.r())
        }
        None => {
            let r = cfg.pick(a.r, S, "R", Num(1.0))?.0;
            (SlitMap::new(angle, r)?.slit(), r)
        }
    };
    let stop_radius = cfg
        .pick(
            a.stop_radius,
            S,
            "stop-radius",
            Num(10.0 * ray.length().max(1.0)),
        )?
        .0;
    let dt = cfg
        .pick(a.dt, S, "dt", Num(SleParams::design_dt(kappa, 1.0)))?
        .0;
    let pair = SleParameterPair::new(kappa, rho)?;
    let params = SleParams::new(pair, start_a, dt, max_time, stop_radius, seed)?;
    let flow = FlowConfig {
        rel_step,
        ray_points,
        workers,
        ..FlowConfig::default()
    };
    if a.dump_trace.is_some_and(|t| t >= trials) {
        return Err(CliError::Usage(format!(
            "--dump-trace must name a trial below {trials}"
        )));
    }
    let est = mc_wedge_avoidance_with(&params, &ray, trials, &flow)?;
    if let Some(w) = &est.warning {
        eprintln!("warning: {w}");
    }
    // Φ'(0)^α is the avoidance probability of a restriction measure started
    // at the base of the wedge, which needs κ = 8/3 and no offset.
    let restriction = (kappa - 8.0 / 3.0).abs() < 1e-12 && start_a == 0.0;
    let (alpha, predicted, note) = if restriction {
        let alpha = alpha_from_rho(rho)?;
        let map = SlitMap::new(angle, map_r)?;
        (
            Some(alpha.value()),
            Some(map.phi_prime_zero()?.powf(alpha.value())),
            None,
        )
    } else {
        (
            None,
            None,
            Some("no exact prediction: needs kappa = 8/3 and start-a = 0"),
        )
    };
    let z = predicted.map(|p| {
        if est.std_err > 0.0 {
            (est.p_hat - p) / est.std_err
        } else {
            f64::NAN
        }
    });
    let result = json!({
        "estimate": est,
        "map_R": map_r,
        "alpha": alpha,
        "predicted_p": predicted,
        "z_score": z.filter(|z| z.is_finite()),
        "note": note,
    });
    let mut files = vec![(
        "sle_avoid.json".to_string(),
        serde_json::to_string_pretty(&result)? + "\n",
    )];
    if let Some(k) = a.dump_trace {
        let (rec, trace) = mc_trial_trace(&params, &ray, &flow, k);
        let mut csv = String::from("t,re,im\n");
        for (t, z) in trace.times.iter().zip(&trace.points) {
            csv.push_str(&format!("{t},{},{}\n", z.re, z.im));
        }
        eprintln!(
            "trial {k}: hit = {}, {} steps",
            rec.outcome.hit, rec.outcome.steps
        );
        files.push((format!("trace_{k}.csv"), csv));
    }
    let mut replay = vec![S.to_string()];
    for (flag, v) in [
        ("kappa", kappa),
        ("rho", rho),
        ("theta", theta),
        ("length", ray.length()),
        ("start-a", start_a),
        ("stop-radius", stop_radius),
        ("max-time", max_time),
        ("dt", dt),
        ("rel-step", rel_step),
    ] {
        replay_num(&mut replay, flag, v);
    }
    replay.extend([
        "--trials".into(),
        trials.to_string(),
        "--seed".into(),
        seed.to_string(),
        "--ray-points".into(),
        ray_points.to_string(),
    ]);
    if let Some(k) = a.dump_trace {
        replay.extend(["--dump-trace".into(), k.to_string()]);
    }
    Ok(RunOutput {
        command: S.into(),
        params: json!({ "sle": params, "ray": est.ray, "map_R": map_r, "flow": flow }),
        seeds: vec![seed],
        replay,
        files,
        results: json!({
            "trials": est.trials,
            "hits": est.hits,
            "p_hat": est.p_hat,
            "std_err": est.std_err,
            "truncated": est.truncated,
            "mean_steps": est.mean_steps,
            "predicted_p": predicted,
            "z_score": z.filter(|z| z.is_finite()),
            "stopping_rule": "a trace leaving |z| > stop_radius without meeting the ray counts as avoiding it; later returns are not followed",
        }),
    })
}

#[derive(Debug, Clone, Subcommand)]
pub enum SawCommand {
    /// Exact counts C_0..C_nmax of walks from the apex
    Enumerate {
        #[arg(long)]
        mask: Option<WedgeMask>,
        #[arg(long)]
        nmax: Option<usize>,
        /// Lift the enumeration size guard
        #[arg(long)]
        force: bool,
    },
    /// Local exponents of C_N(a) / C_N(b)
    Ratio {
        #[arg(long)]
        a: Option<WedgeMask>,
        #[arg(long)]
        b: Option<WedgeMask>,
        #[arg(long)]
        nmax: Option<usize>,
        #[arg(long)]
        force: bool,
    },
    /// Mean squared end-to-end distance from the pivot chain
    Pivot {
        #[arg(long)]
        mask: Option<WedgeMask>,
        /// Walk lengths, comma separated; two or more also fit 2ν
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        /// Pivot attempts per length, in units of the length
        #[arg(long)]
        sweeps: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn limit(force: bool) -> usize {
    if force {
        usize::MAX
    } else {
        ENUMERATION_GUARD
    }
}

pub fn saw(c: &SawCommand, cfg: &Config) -> Result<RunOutput, CliError> {
    const S: &str = "saw";
    match c {
        SawCommand::Enumerate { mask, nmax, force } => {
            let mask = cfg.pick(*mask, S, "mask", WedgeMask::FullPlane)?;
            let nmax = cfg.pick(*nmax, S, "nmax", 10)?;
            let table = enumerate_walks_with_limit(mask, nmax, limit(*force))?;
            let mut replay = vec![
                S.into(),
                "enumerate".into(),
                "--mask".into(),
                mask.name().into(),
            ];
            replay.extend(["--nmax".into(), nmax.to_string()]);
            if *force {
                replay.push("--force".into());
            }
            Ok(RunOutput {
                command: "saw enumerate".into(),
                params: json!({ "mask": mask, "nmax": nmax }),
                seeds: vec![],
                replay,
                files: vec![("counts.csv".into(), table.to_csv())],
                results: json!({ "c_nmax": table.counts[nmax].to_string() }),
            })
        }
        SawCommand::Ratio { a, b, nmax, force } => {
            let a = cfg.pick(*a, S, "a", WedgeMask::Quarter)?;
            let b = cfg.pick(*b, S, "b", WedgeMask::HalfPlane)?;
            let nmax = cfg.pick(*nmax, S, "nmax", 24)?;
            let ta = enumerate_walks_with_limit(a, nmax, limit(*force))?;
            let tb = enumerate_walks_with_limit(b, nmax, limit(*force))?;
            let series = ratio_exponent_series(&ta, &tb)?;
            let predicted = match (a.theta(), b.theta()) {
                (Some(x), Some(y)) => Some(
                    wedge_gamma(1, WedgeAngle::new(x)?)?.value()
                        - wedge_gamma(1, WedgeAngle::new(y)?)?.value(),
                ),
                _ => None,
            };
            eprintln!(
                "extrapolated slope {:.4}; predicted {:?}",
                series.extrapolated, predicted
            );
            let result =
                json!({ "a": a, "b": b, "nmax": nmax, "series": series, "predicted": predicted });
            let mut replay = vec![
                S.into(),
                "ratio".into(),
                "--a".into(),
                a.name().into(),
                "--b".into(),
            ];
            replay.extend([b.name().into(), "--nmax".into(), nmax.to_string()]);
            if *force {
                replay.push("--force".into());
            }
            Ok(RunOutput {
                command: "saw ratio".into(),
                params: json!({ "a": a, "b": b, "nmax": nmax }),
                seeds: vec![],
                replay,
                files: vec![
                    (
                        "ratio.json".into(),
                        serde_json::to_string_pretty(&result)? + "\n",
                    ),
                    (format!("counts_{}.csv", a.name()), ta.to_csv()),
                    (format!("counts_{}.csv", b.name()), tb.to_csv()),
                ],
                results: json!({ "extrapolated": series.extrapolated, "predicted": predicted }),
            })
        }
        SawCommand::Pivot {
            mask,
            n,
            sweeps,
            seed,
        } => {
            let mask = cfg.pick(*mask, S, "mask", WedgeMask::FullPlane)?;
            let ns = match n {
                Some(ns) => ns.clone(),
                None => match cfg.get::<String>(S, "n")? {
                    Some(s) => s
                        .split(',')
                        .map(|x| {
                            x.trim()
                                .parse()
                                .map_err(|_| CliError::Usage(format!("bad length {x:?}")))
                        })
                        .collect::<Result<_, _>>()?,
                    None => vec![250, 500, 1000, 2000],
                },
            };
            if ns.is_empty() {
                return Err(CliError::Usage("no walk lengths".into()));
            }
            let sweeps = cfg.pick(*sweeps, S, "sweeps", 100)?;
            let seed = cfg.seed(*seed, S, DEFAULT_SEED)?;
            let seeds: Vec<u64> = (0..ns.len() as u64).map(|k| seed.wrapping_add(k)).collect();
            let runs = ns
                .iter()
                .zip(&seeds)
                .map(|(&n, &s)| pivot_sample(mask, n, sweeps, s))
                .collect::<sle_wedge::Result<Vec<_>>>()?;
            let fit = if ns.len() >= 2 {
                let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
                let ys: Vec<f64> = runs.iter().map(|r| r.mean_r2).collect();
                let f = loglog_fit(&xs, &ys)?;
                eprintln!("2nu = {:.4} ± {:.4}", f.slope, f.slope_std_err);
                Some(f)
            } else {
                None
            };
            let result = json!({ "runs": runs, "two_nu_fit": fit });
            let mut replay = vec![
                S.into(),
                "pivot".into(),
                "--mask".into(),
                mask.name().into(),
                "--n".into(),
            ];
            replay.push(
                ns.iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
            replay.extend([
                "--sweeps".into(),
                sweeps.to_string(),
                "--seed".into(),
                seed.to_string(),
            ]);
            Ok(RunOutput {
                command: "saw pivot".into(),
                params: json!({ "mask": mask, "n": ns, "sweeps": sweeps, "seed": seed }),
                seeds,
                replay,
                files: vec![(
                    "pivot.json".into(),
                    serde_json::to_string_pretty(&result)? + "\n",
                )],
                results: json!({ "two_nu": fit.map(|f| f.slope), "two_nu_std_err": fit.map(|f| f.slope_std_err) }),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum VerifyLevel {
    Quick,
    Full,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub level: VerifyLevel,
    /// Print the report as JSON instead of one line per criterion
    #[arg(long)]
    pub json: bool,
    #[arg(long = "tamper-hiding-sign", hide = true)]
    pub tamper_hiding_sign: bool,
}

/// Runs the suite; the report comes back even when criteria fail.
pub fn verify(a: &VerifyArgs) -> Result<(RunOutput, bool), CliError> {
    let level = match a.level {
        VerifyLevel::Quick => Level::Quick,
        VerifyLevel::Full => Level::Full,
    };
    let options = Options {
        tamper_hiding_sign: a.tamper_hiding_sign,
    };
    let mut criteria = Vec::new();
    for &id in level.criteria() {
        let r = verify::criterion(id, options);
        eprintln!("{} ({:.1}s)", r.line(), r.seconds);
        criteria.push(r);
    }
    let all_passed = criteria.iter().all(|c| c.passed);
    let report = verify::VerifyReport {
        level,
        criteria,
        all_passed,
    };
    let text = if a.json {
        serde_json::to_string_pretty(&report)? + "\n"
    } else {
        report.criteria.iter().map(|c| c.line() + "\n").collect()
    };
    let mut replay = vec![
        "verify".to_string(),
        format!("{:?}", a.level).to_lowercase(),
    ];
    if a.json {
        replay.push("--json".into());
    }
    if a.tamper_hiding_sign {
        replay.push("--tamper-hiding-sign".into());
    }
    let results: Value = json!({
        "all_passed": report.all_passed,
        "criteria": report.criteria.iter().map(|c| json!({
            "id": c.id, "name": c.name, "passed": c.passed,
            "measured": c.measured, "target": c.target, "detail": c.detail, "seconds": c.seconds,
        })).collect::<Vec<_>>(),
    });
    let file = if a.json { "verify.json" } else { "verify.txt" };
    Ok((
        RunOutput {
            command: "verify".into(),
            params: json!({ "level": level, "tamper_hiding_sign": a.tamper_hiding_sign }),
            seeds: vec![],
            replay,
            files: vec![(file.into(), text)],
            results,
        },
        all_passed,
    ))
}
