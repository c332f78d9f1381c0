//! `exponent NAME --param value ...`: one evaluation, or a table along one
//! swept parameter. Polynomial laws also evaluate exactly with `--exact`.

use std::fmt::Display;

use clap::Args;
use serde_json::json;
use sle_wedge::exponents::{
    alpha_from_rho, avoiding_chain, avoiding_chain_row, bessel_dimension, conditioned_rho,
    halfplane_counting_exponent, hiding_sigma, hiding_tilde, intersection_sigma,
    mutual_avoidance_sigma, rho_from_alpha, saw_mutual_avoidance_n_exponent, sle_fractal_dimension,
    wedge_confinement_n_exponent, wedge_gamma, wedge_hiding_exponent, wedge_ray_exponent,
    RestrictionExponent, SleParameterPair, WedgeAngle,
};
use sle_wedge::{Field, Rational};

use crate::config::Num;
use crate::error::CliError;
use crate::manifest::RunOutput;

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct ExponentArgs {
    /// Formula name; `list` prints them all
    pub name: String,
    #[arg(long)]
    pub kappa: Option<String>,
    #[arg(long)]
    pub rho: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    /// Wedge angle as a fraction of π
    #[arg(long)]
    pub theta: Option<String>,
    /// Number of curves or walks
    #[arg(long)]
    pub n: Option<u32>,
    /// One grid axis: `name=start:stop:count`, or `n=first:last`
    #[arg(long)]
    pub sweep: Option<String>,
    /// Evaluate in exact rational arithmetic (polynomial laws only)
    #[arg(long)]
    pub exact: bool,
}

struct Formula {
    name: &'static str,
    needs: &'static [&'static str],
    optional: &'static [&'static str],
    outputs: &'static [&'static str],
    exact: bool,
    about: &'static str,
}

const FORMULAS: &[Formula] = &[
    Formula {
        name: "fractal-dimension",
        needs: &["kappa"],
        optional: &[],
        outputs: &["dimension"],
        exact: true,
        about: "min(2, 1 + κ/8)",
    },
    Formula {
        name: "bessel-dimension",
        needs: &["kappa", "rho"],
        optional: &[],
        outputs: &["d"],
        exact: true,
        about: "1 + 2(ρ+2)/κ",
    },
    Formula {
        name: "alpha-from-rho",
        needs: &["rho"],
        optional: &[],
        outputs: &["alpha"],
        exact: true,
        about: "(ρ+2)(3ρ+10)/32",
    },
    Formula {
        name: "rho-from-alpha",
        needs: &["alpha"],
        optional: &[],
        outputs: &["rho"],
        exact: false,
        about: "(−8 + 2√(1+24α))/3",
    },
    Formula {
        name: "conditioned-rho",
        needs: &["kappa", "rho", "alpha"],
        optional: &[],
        outputs: &["rho"],
        exact: false,
        about: "ρ of SLE(κ,ρ) conditioned to avoid an α-restriction sample",
    },
    Formula {
        name: "intersection-sigma",
        needs: &["kappa", "rho", "alpha"],
        optional: &[],
        outputs: &["sigma"],
        exact: false,
        about: "non-intersection exponent in a",
    },
    Formula {
        name: "hiding-sigma",
        needs: &["alpha", "beta"],
        optional: &[],
        outputs: &["sigma"],
        exact: false,
        about: "hiding exponent in a",
    },
    Formula {
        name: "hiding-tilde",
        needs: &["alpha", "beta"],
        optional: &[],
        outputs: &["rho_tilde", "alpha_tilde"],
        exact: false,
        about: "ρ̃ and α̃ of the hiding pair",
    },
    Formula {
        name: "avoiding-chain",
        needs: &["n"],
        optional: &["kappa"],
        outputs: &["n", "rho_n", "alpha_n"],
        exact: false,
        about: "ρ_k, α_k for k = 1..n by recursion (κ defaults to 8/3)",
    },
    Formula {
        name: "avoiding-chain-row",
        needs: &["n"],
        optional: &[],
        outputs: &["rho_n", "alpha_n"],
        exact: true,
        about: "closed form 2(n−1), n(3n+2)/8",
    },
    Formula {
        name: "mutual-avoidance-sigma",
        needs: &["n"],
        optional: &[],
        outputs: &["sigma"],
        exact: true,
        about: "3n(n−1)/8",
    },
    Formula {
        name: "halfplane-counting",
        needs: &["n"],
        optional: &[],
        outputs: &["gamma"],
        exact: true,
        about: "3n(5−6n)/64",
    },
    Formula {
        name: "saw-mutual-avoidance",
        needs: &["n"],
        optional: &[],
        outputs: &["exponent"],
        exact: true,
        about: "9n(1−n)/32",
    },
    Formula {
        name: "wedge-ray",
        needs: &["alpha", "theta"],
        optional: &[],
        outputs: &["exponent"],
        exact: true,
        about: "α(1−θ)/θ",
    },
    Formula {
        name: "wedge-confinement",
        needs: &["n", "theta"],
        optional: &[],
        outputs: &["exponent"],
        exact: true,
        about: "−3n(3n+2)/32 · (1−θ)/θ",
    },
    Formula {
        name: "wedge-gamma",
        needs: &["n", "theta"],
        optional: &[],
        outputs: &["gamma"],
        exact: true,
        about: "27n/64 − 3n(3n+2)/(32θ)",
    },
    Formula {
        name: "wedge-hiding",
        needs: &["alpha", "beta", "theta"],
        optional: &[],
        outputs: &["exponent"],
        exact: false,
        about: "hiding exponent in a wedge",
    },
];

pub fn listing() -> String {
    let mut s = String::from("name,params,exact,description\n");
    for f in FORMULAS {
        let mut params: Vec<String> = f.needs.iter().map(|p| p.to_string()).collect();
        params.extend(f.optional.iter().map(|p| format!("[{p}]")));
        s.push_str(&format!(
            "{},{},{},\"{}\"\n",
            f.name,
            params.join(" "),
            f.exact,
            f.about
        ));
    }
    s
}

const REALS: [&str; 5] = ["kappa", "rho", "alpha", "beta", "theta"];

fn raw<'a>(a: &'a ExponentArgs, key: &str) -> Option<&'a str> {
    match key {
        "kappa" => a.kappa.as_deref(),
        "rho" => a.rho.as_deref(),
        "alpha" => a.alpha.as_deref(),
        "beta" => a.beta.as_deref(),
        "theta" => a.theta.as_deref(),
        _ => None,
    }
}

/// Exact value of `p/q` or a terminating decimal.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let (p, q) = (parse_rational(p)?, parse_rational(q)?);
        return (q != Rational::from_integer(0)).then(|| p / q);
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, dec) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && dec.is_empty()
        || !(int.chars().chain(dec.chars()).all(|c| c.is_ascii_digit()))
    {
        return None;
    }
    let digits: i64 = format!("{int}{dec}").parse().ok()?;
    let den = 10i64.checked_pow(dec.len() as u32)?;
    let v = Rational::new(digits, den);
    Some(if neg { -v } else { v })
}

/// Parameter values at one grid point.
#[derive(Debug, Clone, Copy)]
struct Point<T> {
    kappa: Option<T>,
    rho: Option<T>,
    alpha: Option<T>,
    beta: Option<T>,
    theta: Option<T>,
    n: Option<u32>,
}

impl<T: Copy> Point<T> {
    fn set(&mut self, key: &str, v: T) {
        match key {
            "kappa" => self.kappa = Some(v),
            "rho" => self.rho = Some(v),
            "alpha" => self.alpha = Some(v),
            "beta" => self.beta = Some(v),
            "theta" => self.theta = Some(v),
            _ => unreachable!("not a real parameter: {key}"),
        }
    }
}

type Rows<T> = Vec<Vec<T>>;

fn ra<T: Field>(v: Option<T>) -> sle_wedge::Result<RestrictionExponent<T>> {
    RestrictionExponent::new(v.unwrap())
}

fn wedge<T: Field>(v: Option<T>) -> sle_wedge::Result<WedgeAngle<T>> {
    WedgeAngle::new(v.unwrap())
}

fn eval_field<T: Field>(name: &str, p: &Point<T>) -> Option<sle_wedge::Result<Rows<T>>> {
    let one = |v: sle_wedge::Result<T>| v.map(|x| vec![vec![x]]);
    let n = p.n.unwrap_or(0);
    Some(match name {
        "fractal-dimension" => one(sle_fractal_dimension(p.kappa.unwrap())),
        "bessel-dimension" => {
            one(SleParameterPair::new(p.kappa.unwrap(), p.rho.unwrap()).map(bessel_dimension))
        }
        "alpha-from-rho" => one(alpha_from_rho(p.rho.unwrap()).map(|a| a.value())),
        "avoiding-chain-row" => avoiding_chain_row::<T>(n).map(|r| vec![vec![r.rho_n, r.alpha_n]]),
        "mutual-avoidance-sigma" => one(mutual_avoidance_sigma::<T>(n).map(|e| e.value())),
        "halfplane-counting" => one(halfplane_counting_exponent::<T>(n).map(|e| e.value())),
        "saw-mutual-avoidance" => one(saw_mutual_avoidance_n_exponent::<T>(n).map(|e| e.value())),
        "wedge-ray" => {
            one(ra(p.alpha).and_then(|a| Ok(wedge_ray_exponent(a, wedge(p.theta)?).value())))
        }
        "wedge-confinement" => one(wedge(p.theta)
            .and_then(|t| wedge_confinement_n_exponent(n, t))
            .map(|e| e.value())),
        "wedge-gamma" => one(wedge(p.theta)
            .and_then(|t| wedge_gamma(n, t))
            .map(|e| e.value())),
        _ => return None,
    })
}

fn eval_f64(name: &str, p: &Point<f64>) -> sle_wedge::Result<Rows<f64>> {
    if let Some(r) = eval_field(name, p) {
        return r;
    }
    let one = |v: sle_wedge::Result<f64>| v.map(|x| vec![vec![x]]);
    match name {
        "rho-from-alpha" => one(ra(p.alpha).and_then(rho_from_alpha)),
        "conditioned-rho" => {
            let pair = SleParameterPair::new(p.kappa.unwrap(), p.rho.unwrap())?;
            one(ra(p.alpha).map(|a| conditioned_rho(pair, a)))
        }
        "intersection-sigma" => {
            let pair = SleParameterPair::new(p.kappa.unwrap(), p.rho.unwrap())?;
            one(ra(p.alpha).map(|a| intersection_sigma(pair, a).value()))
        }
        "hiding-sigma" => one(hiding_sigma(ra(p.alpha)?, ra(p.beta)?).map(|e| e.value())),
        "hiding-tilde" => hiding_tilde(ra(p.alpha)?, ra(p.beta)?)
            .map(|h| vec![vec![h.rho_tilde, h.alpha_tilde.value()]]),
        "avoiding-chain" => {
            avoiding_chain(p.n.unwrap(), p.kappa.unwrap_or(8.0 / 3.0)).map(|rows| {
                rows.iter()
                    .map(|r| vec![r.n as f64, r.rho_n, r.alpha_n])
                    .collect()
            })
        }
        "wedge-hiding" => one(
            wedge_hiding_exponent(ra(p.alpha)?, ra(p.beta)?, wedge(p.theta)?).map(|e| e.value()),
        ),
        _ => unreachable!("formula table and evaluator disagree on {name}"),
    }
}

enum Axis<T> {
    Real(&'static str, Vec<T>),
    Count(Vec<u32>),
}

fn parse_sweep<T: Copy>(
    sweep: &str,
    f: &Formula,
    parse: &dyn Fn(&str) -> Option<T>,
    lerp: &dyn Fn(T, T, usize, usize) -> T,
) -> Result<Axis<T>, CliError> {
    let usage = |m: &str| CliError::Usage(format!("--sweep {sweep:?}: {m}"));
    let (key, range) = sweep
        .split_once('=')
        .ok_or_else(|| usage("expected name=start:stop[:count]"))?;
    let key = key.trim();
    if !f.needs.contains(&key) && !f.optional.contains(&key) {
        return Err(usage(&format!("{} does not take {key}", f.name)));
    }
    let parts: Vec<&str> = range.split(':').collect();
    if key == "n" {
        let (a, b) = match parts.as_slice() {
            [a, b] => (a.trim().parse::<u32>(), b.trim().parse::<u32>()),
            _ => return Err(usage("expected n=first:last")),
        };
        let (a, b) = (
            a.map_err(|_| usage("bad integer"))?,
            b.map_err(|_| usage("bad integer"))?,
        );
        if a > b {
            return Err(usage("first exceeds last"));
        }
        return Ok(Axis::Count((a..=b).collect()));
    }
    let [a, b, count] = parts.as_slice() else {
        return Err(usage("expected name=start:stop:count"));
    };
    let (a, b) = (
        parse(a).ok_or_else(|| usage("bad start"))?,
        parse(b).ok_or_else(|| usage("bad stop"))?,
    );
    let count: usize = count.trim().parse().map_err(|_| usage("bad count"))?;
    if count < 2 {
        return Err(usage("count must be at least 2"));
    }
    let key = REALS
        .iter()
        .find(|k| **k == key)
        .copied()
        .expect("checked above");
    Ok(Axis::Real(
        key,
        (0..count).map(|i| lerp(a, b, i, count - 1)).collect(),
    ))
}

fn run_typed<T: Copy + Display>(
    a: &ExponentArgs,
    f: &Formula,
    parse: &dyn Fn(&str) -> Option<T>,
    lerp: &dyn Fn(T, T, usize, usize) -> T,
    eval: &dyn Fn(&Point<T>) -> sle_wedge::Result<Rows<T>>,
) -> Result<(String, usize), CliError> {
    let mut base = Point {
        kappa: None,
        rho: None,
        alpha: None,
        beta: None,
        theta: None,
        n: a.n,
    };
    for key in REALS {
        if let Some(s) = raw(a, key) {
            let v = parse(s)
                .ok_or_else(|| CliError::Usage(format!("--{key} {s:?} is not a number")))?;
            base.set(key, v);
        }
    }
    let axis = a
        .sweep
        .as_deref()
        .map(|s| parse_sweep(s, f, parse, lerp))
        .transpose()?;
    let swept = match &axis {
        Some(Axis::Real(k, _)) => Some(*k),
        Some(Axis::Count(_)) => Some("n"),
        None => None,
    };
    if swept.is_some() && f.name == "avoiding-chain" {
        return Err(CliError::Usage(
            "avoiding-chain already returns a table; it cannot be swept".into(),
        ));
    }
    let given = |k: &str| {
        if k == "n" {
            a.n.is_some()
        } else {
            raw(a, k).is_some()
        }
    };
    if let Some(k) = swept {
        if given(k) {
            return Err(CliError::Usage(format!("--{k} is both given and swept")));
        }
    }
    for k in f.needs {
        if !given(k) && swept != Some(*k) {
            return Err(CliError::Usage(format!("{} needs --{k}", f.name)));
        }
    }
    for k in REALS.iter().chain(["n"].iter()) {
        if given(k) && !f.needs.contains(k) && !f.optional.contains(k) {
            return Err(CliError::Usage(format!("{} does not take --{k}", f.name)));
        }
    }
    let points: Vec<(Option<String>, Point<T>)> = match axis {
        None => vec![(None, base)],
        Some(Axis::Real(k, vals)) => vals
            .into_iter()
            .map(|v| {
                let mut p = base;
                p.set(k, v);
                (Some(v.to_string()), p)
            })
            .collect(),
        Some(Axis::Count(ns)) => ns
            .into_iter()
            .map(|n| (Some(n.to_string()), Point { n: Some(n), ..base }))
            .collect(),
    };
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (label, p) in &points {
        for row in eval(p)? {
            let mut cells: Vec<String> = label.iter().cloned().collect();
            cells.extend(row.iter().map(|v| v.to_string()));
            rows.push(cells);
        }
    }
    if swept.is_none() && rows.len() == 1 && rows[0].len() == 1 {
        return Ok((format!("{}\n", rows[0][0]), 1));
    }
    let mut header: Vec<&str> = swept.into_iter().collect();
    header.extend(f.outputs);
    let mut out = header.join(",") + "\n";
    for r in &rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    Ok((out, rows.len()))
}

pub fn run(a: &ExponentArgs) -> Result<RunOutput, CliError> {
    if a.name == "list" {
        return Ok(output(a, listing(), 0));
    }
    let f = FORMULAS.iter().find(|f| f.name == a.name).ok_or_else(|| {
        let names: Vec<&str> = FORMULAS.iter().map(|f| f.name).collect();
        CliError::Usage(format!(
            "unknown formula {:?}; known: {}",
            a.name,
            names.join(", ")
        ))
    })?;
    let (text, rows) = if a.exact {
        if !f.exact {
            return Err(CliError::Usage(format!(
                "{} involves roots and has no exact form",
                f.name
            )));
        }
        run_typed::<Rational>(
            a,
            f,
            &parse_rational,
            &|x, y, i, m| x + (y - x) * Rational::new(i as i64, m as i64),
            &|p| eval_field(f.name, p).expect("exact formulas are field formulas"),
        )?
    } else {
        run_typed::<f64>(
            a,
            f,
            &|s| s.parse::<Num>().ok().map(|n| n.0),
            &|x, y, i, m| x + (y - x) * i as f64 / m as f64,
            &|p| eval_f64(f.name, p),
        )?
    };
    Ok(output(a, text, rows))
}

fn output(a: &ExponentArgs, text: String, rows: usize) -> RunOutput {
    let mut replay = vec!["exponent".to_string(), a.name.clone()];
    for key in REALS {
        if let Some(v) = raw(a, key) {
            replay.extend([format!("--{key}"), v.to_string()]);
        }
    }
    if let Some(n) = a.n {
        replay.extend(["--n".into(), n.to_string()]);
    }
    if let Some(s) = &a.sweep {
        replay.extend(["--sweep".into(), s.clone()]);
    }
    if a.exact {
        replay.push("--exact".into());
    }
    let file = if text.contains(',') {
        "exponent.csv"
    } else {
        "exponent.txt"
    };
    RunOutput {
        command: "exponent".into(),
        params: json!({
            "name": a.name, "kappa": a.kappa, "rho": a.rho, "alpha": a.alpha, "beta": a.beta,
            "theta": a.theta, "n": a.n, "sweep": a.sweep, "exact": a.exact,
        }),
        seeds: vec![],
        replay,
        files: vec![(file.into(), text)],
        results: json!({ "rows": rows }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_parse_exactly() {
        assert_eq!(parse_rational("0.625"), Some(Rational::new(5, 8)));
        assert_eq!(parse_rational("-3/64"), Some(Rational::new(-3, 64)));
        assert_eq!(parse_rational("1/3"), Some(Rational::new(1, 3)));
        assert_eq!(parse_rational("2"), Some(Rational::from_integer(2)));
        assert_eq!(parse_rational(".5"), Some(Rational::new(1, 2)));
        assert_eq!(parse_rational("1e3"), None);
        assert_eq!(parse_rational("1/0"), None);
    }

    #[test]
    fn every_formula_evaluates_in_f64() {
        let p = Point {
            kappa: Some(8.0 / 3.0),
            rho: Some(0.0),
            alpha: Some(0.625),
            beta: Some(0.625),
            theta: Some(0.5),
            n: Some(2),
        };
        for f in FORMULAS {
            let rows = eval_f64(f.name, &p).unwrap();
            assert_eq!(rows[0].len(), f.outputs.len(), "{}", f.name);
            assert_eq!(eval_field(f.name, &p).is_some(), f.exact, "{}", f.name);
        }
    }
}
