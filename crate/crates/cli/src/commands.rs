use std::fs;
use std::path::Path;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use serde_json::{json, Value};

use freeprob::cumulants::{moments_to_cumulants, Lattice, MomentSequence};
use freeprob::freeconv::{
    free_convolve_analytic, free_convolve_moments, select_flow_parametrization, semicircle_flow_residual,
    AnalyticOptions,
};
use freeprob::measures::NamedLaw;
use freeprob::partitions::Permutation;
use freeprob::rmt::{
    classical_locations, default_weingarten_order, freeness_experiment, mc_word_moment, parse_word, weingarten_series,
    wick_trace_moment, EnsembleKind, EnsembleSpec, ExperimentKind,
};
use freeprob::walks::{kesten_green_with_order, kesten_loops, polya_diagnostic, return_probabilities};
use freeprob::{Error, Rational, Result};

use crate::args::*;
use crate::report::{self, complex, csv_float, csv_row, float, floats, integer, rational, rationals, Report};

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn no_csv(command: &str) -> Result<Report> {
    Err(invalid(format!("{command} has no CSV output; use --format json")))
}

/// Parses `p/q`, integers and plain decimals exactly; anything else goes
/// through `f64`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || invalid(format!("cannot read {s:?} as a number"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q == BigInt::from(0) {
            return Err(invalid(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(p, q));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Ok(BigRational::from_integer(n));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if !frac.is_empty() && frac.chars().all(|c| c.is_ascii_digit()) {
            let negative = int.starts_with('-');
            let digits = format!("{}{frac}", int.trim_start_matches(['-', '+']));
            let num: BigInt = digits.parse().map_err(|_| bad())?;
            let den = num_traits::pow(BigInt::from(10), frac.len());
            let r = BigRational::new(num, den);
            return Ok(if negative { -r } else { r });
        }
    }
    let x: f64 = s.parse().map_err(|_| bad())?;
    BigRational::from_float(x).ok_or_else(bad)
}

fn read_moment_file(path: &Path) -> Result<MomentSequence> {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let values = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(parse_rational)
        .collect::<Result<Vec<_>>>()?;
    MomentSequence::new(values)
}

fn parse_complex(s: &str) -> Result<Complex64> {
    let parts: Vec<&str> = s.split(',').collect();
    let num = |p: &str| p.trim().parse::<f64>().map_err(|_| invalid(format!("bad complex number {s:?}")));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(invalid(format!("complex numbers are written re,im; got {s:?}"))),
    }
}

fn parse_law(s: &str) -> Result<NamedLaw> {
    s.parse()
}

pub fn cumulants(a: &CumulantsArgs, format: Format) -> Result<Report> {
    if format == Format::Csv {
        return no_csv("cumulants");
    }
    let m = match (&a.moments, &a.moments_file, &a.law) {
        (Some(list), None, None) => MomentSequence::new(list.iter().map(|s| parse_rational(s)).collect::<Result<_>>()?)?,
        (None, Some(path), None) => read_moment_file(path)?,
        (None, None, Some(law)) => parse_law(law)?
            .exact_moments(a.order)?
            .ok_or_else(|| invalid(format!("{law} has no exact moment sequence")))?,
        _ => return Err(invalid("give exactly one of --moments, --moments-file, --law")),
    };
    let classical = moments_to_cumulants(&m, Lattice::Classical);
    let free = moments_to_cumulants(&m, Lattice::Free);
    Ok(Report {
        result: json!({
            "moments": rationals(m.values()),
            "classical_cumulants": rationals(classical.values()),
            "free_cumulants": rationals(free.values()),
            "provenance": "exact",
        }),
        diagnostics: json!({}),
        csv: None,
    })
}

pub fn freeconv(a: &FreeconvArgs, format: Format) -> Result<Report> {
    if a.order == 0 {
        return Err(invalid("--order must be at least 1"));
    }
    let law_x = a.law_x.as_deref().map(parse_law).transpose()?;
    let law_y = a.law_y.as_deref().map(parse_law).transpose()?;
    let side = |law: &Option<NamedLaw>, file: &Option<std::path::PathBuf>, name: &str| -> Result<MomentSequence> {
        match (law, file) {
            (Some(l), _) => l
                .exact_moments(a.order)?
                .ok_or_else(|| invalid(format!("{l} has no exact moment sequence; use --route analytic"))),
            (None, Some(path)) => Ok(read_moment_file(path)?),
            (None, None) => Err(invalid(format!("give --law-{name} or --moments-{name}"))),
        }
    };
    let mut result = serde_json::Map::new();
    let mut diagnostics = serde_json::Map::new();
    let mut csv = None;

    if matches!(a.route, Route::Moment | Route::Both) {
        let mx = side(&law_x, &a.moments_x, "x")?;
        let my = side(&law_y, &a.moments_y, "y")?;
        let order = a.order.min(mx.len()).min(my.len());
        let m = free_convolve_moments(&mx.truncate(order), &my.truncate(order))?;
        result.insert(
            "moment_route".into(),
            json!({ "moments": rationals(m.values()), "provenance": "exact" }),
        );
    }
    if matches!(a.route, Route::Analytic | Route::Both) {
        let (Some(lx), Some(ly)) = (&law_x, &law_y) else {
            return Err(invalid("the analytic route needs --law-x and --law-y"));
        };
        let support = match &a.support {
            None => None,
            Some(s) => {
                let z = parse_complex(s)?;
                Some((z.re, z.im))
            }
        };
        let opts = AnalyticOptions {
            grid_size: a.grid_size,
            eps: a.eps,
            moments: a.order,
            support,
        };
        let res = free_convolve_analytic(lx, ly, &opts)?;
        let mut entry = json!({ "moments": floats(&res.moments), "provenance": "quadrature" });
        if let Some(m) = &res.measure {
            entry["measure"] = report::measure(m);
            csv = Some(m.to_csv());
        }
        result.insert("analytic_route".into(), entry);
        diagnostics.insert("continuation_residual".into(), float(res.diagnostics.continuation_residual));
        diagnostics.insert("functional_residual".into(), float(res.diagnostics.functional_residual));
    }
    if format == Format::Csv && csv.is_none() {
        return Err(invalid("CSV output is the density grid of the analytic route"));
    }
    Ok(Report {
        result: Value::Object(result),
        diagnostics: Value::Object(diagnostics),
        csv,
    })
}

pub fn kesten(a: &KestenArgs, format: Format) -> Result<Report> {
    if format == Format::Csv {
        return no_csv("kesten");
    }
    let loops = kesten_loops(a.d, a.nmax)?;
    let probs = return_probabilities(&loops)?;
    let mut result = json!({
        "loops": Value::Array(loops.values.iter().map(integer).collect()),
        "return_probabilities": rationals(&probs.values),
        "first_returns": rationals(&probs.first_returns),
        "provenance": "exact",
    });
    let mut diagnostics = json!({});
    if a.nmax >= 8 && a.d >= 2 {
        diagnostics["decay_base"] = float(freeprob::walks::decay_base(&loops)?);
        diagnostics["decay_base_expected"] = float(((2 * a.d - 1) as f64).sqrt() / a.d as f64);
    }
    if let Some(z) = &a.z {
        let g = kesten_green_with_order(a.d, parse_complex(z)?, a.nmax.max(8))?;
        result["generating_function"] = json!({
            "z": complex(parse_complex(z)?),
            "series": complex(g.series_value),
            "closed_form": complex(g.corrected_formula_value),
            "closed_form_denominator_1_minus_16z2": complex(g.naive_formula_value),
            "provenance": "exact",
        });
    }
    Ok(Report {
        result,
        diagnostics,
        csv: None,
    })
}

pub fn polya(a: &PolyaArgs, format: Format) -> Result<Report> {
    if format == Format::Csv {
        return no_csv("polya");
    }
    let p = polya_diagnostic(a.d, a.nmax)?;
    Ok(Report {
        result: json!({
            "partial_sum": float(p.partial_sum),
            "fitted_exponent": float(p.fitted_exponent),
            "return_probability": float(p.return_probability),
            "provenance": "quadrature",
        }),
        diagnostics: json!({ "expected_exponent": float(-(a.d as f64) / 2.0) }),
        csv: None,
    })
}

pub fn flow(a: &FlowArgs) -> Result<Report> {
    let law = parse_law(&a.law)?;
    let z = parse_complex(&a.z)?;
    if a.h.is_empty() {
        return Err(invalid("give at least one step --h"));
    }
    let selection = select_flow_parametrization(a.r, z, a.h.iter().cloned().fold(f64::INFINITY, f64::min))?;
    let mut rows = Vec::new();
    let mut csv = csv_row(&["h".into(), "residual".into(), "ratio".into()]);
    let mut prev: Option<f64> = None;
    for &h in &a.h {
        let r = semicircle_flow_residual(&law, a.r, z, h, selection.chosen)?.norm();
        let ratio = prev.map(|p| p / r);
        rows.push(json!({ "h": float(h), "residual": float(r), "ratio": ratio.map_or(Value::Null, float) }));
        csv.push_str(&csv_row(&[csv_float(h), csv_float(r), ratio.map_or(String::new(), csv_float)]));
        prev = Some(r);
    }
    Ok(Report {
        result: json!({
            "parametrization": format!("{:?}", selection.chosen).to_lowercase(),
            "residuals": rows,
            "provenance": "quadrature",
        }),
        diagnostics: json!({
            "radius_residual": float(selection.radius_residual),
            "variance_residual": float(selection.variance_residual),
        }),
        csv: Some(csv),
    })
}

fn estimate(e: &freeprob::rmt::MCEstimate) -> Value {
    json!({
        "mean": complex(e.mean),
        "stderr": float(e.stderr),
        "trials": e.trials,
        "provenance": "monte-carlo",
    })
}

pub fn rmt(a: &RmtArgs, seed: u64, workers: usize) -> Result<Report> {
    if let Some(word) = &a.word {
        let letters = parse_word(word)?;
        let specs = a
            .ensembles
            .iter()
            .map(|name| {
                let kind = match name.trim() {
                    "gue" => EnsembleKind::Gue,
                    "ginibre" => EnsembleKind::Ginibre,
                    "cue" => EnsembleKind::Cue,
                    other => return Err(invalid(format!("unknown ensemble {other:?}"))),
                };
                EnsembleSpec::new(kind, a.n, seed)
            })
            .collect::<Result<Vec<_>>>()?;
        let e = mc_word_moment(&specs, &letters, a.trials, workers)?;
        let mut csv = csv_row(&["word".into(), "mean_re".into(), "mean_im".into(), "stderr".into()]);
        csv.push_str(&csv_row(&[word.clone(), csv_float(e.mean.re), csv_float(e.mean.im), csv_float(e.stderr)]));
        return Ok(Report {
            result: json!({ "word": word, "estimate": estimate(&e) }),
            diagnostics: json!({}),
            csv: Some(csv),
        });
    }
    let kind = match a.kind {
        ExperimentName::GueGue => ExperimentKind::GueGue,
        ExperimentName::RotatedDiagonal => ExperimentKind::RotatedDiagonal,
        ExperimentName::GueDeterministic => {
            let law = parse_law(&a.law)?;
            ExperimentKind::GueDeterministic(classical_locations(&law.make(2001)?, a.n))
        }
    };
    let rep = freeness_experiment(&kind, a.n, a.trials, a.degree, seed, workers)?;
    let mut csv = csv_row(&["label", "mean", "stderr", "predicted", "z_score"].map(String::from));
    let rows: Vec<Value> = rep
        .rows
        .iter()
        .map(|r| {
            csv.push_str(&csv_row(&[
                r.label.clone(),
                csv_float(r.empirical.mean.re),
                csv_float(r.empirical.stderr),
                csv_float(r.predicted),
                csv_float(r.z_score),
            ]));
            json!({
                "label": r.label,
                "empirical": estimate(&r.empirical),
                "predicted": float(r.predicted),
                "z_score": float(r.z_score),
            })
        })
        .collect();
    Ok(Report {
        result: json!({ "moments": rows }),
        diagnostics: json!({ "max_abs_z": float(rep.max_abs_z()) }),
        csv: Some(csv),
    })
}

pub fn wick(a: &WickArgs, format: Format) -> Result<Report> {
    if format == Format::Csv {
        return no_csv("wick");
    }
    let e = wick_trace_moment(a.n)?;
    let mut result = json!({
        "expansion": e.to_string(),
        "coefficients": Value::Array(e.coefficients.iter().map(integer).collect()),
        "pairings": integer(e.total()),
        "provenance": "exact",
    });
    if let Some(dim) = a.dim {
        if dim == 0 {
            return Err(invalid("--dim must be positive"));
        }
        result["value"] = rational(&e.evaluate(dim));
    }
    Ok(Report {
        result,
        diagnostics: json!({}),
        csv: None,
    })
}

fn parse_permutation(s: &str, size: Option<usize>) -> Result<Permutation> {
    let s = s.trim();
    if s.starts_with('(') {
        let cycles: Vec<Vec<usize>> = s
            .split(')')
            .map(|c| c.trim().trim_start_matches('('))
            .filter(|c| !c.trim().is_empty())
            .map(|c| {
                c.split([' ', ','])
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse::<usize>().map_err(|_| invalid(format!("bad cycle entry {t:?}"))))
                    .collect()
            })
            .collect::<Result<_>>()?;
        let max = cycles.iter().flatten().copied().max().unwrap_or(0);
        let n = size.unwrap_or(max);
        let refs: Vec<&[usize]> = cycles.iter().map(Vec::as_slice).collect();
        Permutation::from_cycles(n, &refs)
    } else {
        let images = s
            .split([',', ' '])
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<usize>().map_err(|_| invalid(format!("bad image {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if size.is_some_and(|n| n != images.len()) {
            return Err(invalid("--size disagrees with the number of images"));
        }
        Permutation::from_images(&images)
    }
}

pub fn weingarten(a: &WeingartenArgs, format: Format) -> Result<Report> {
    if format == Format::Csv {
        return no_csv("weingarten");
    }
    let pi = parse_permutation(&a.perm, a.size)?;
    let order = a.order.unwrap_or_else(|| default_weingarten_order(&pi));
    let w = weingarten_series(&pi, order)?;
    let values = a
        .dim
        .iter()
        .map(|&dim| {
            let v = w.evaluate(dim)?;
            Ok(json!({
                "N": dim,
                "truncated": float(v.truncated),
                "tail_bound": float(v.tail_bound),
                "resummed": v.resummed.as_ref().map_or(Value::Null, rational),
                "provenance": if v.resummed.is_some() { "exact" } else { "quadrature" },
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Report {
        result: json!({
            "permutation": pi.to_string(),
            "n": w.n,
            "coefficients": Value::Array(w.coefficients.iter().map(integer).collect()),
            "leading": integer(&w.leading),
            "values": values,
            "provenance": "exact",
        }),
        diagnostics: json!({ "truncation": w.truncation }),
        csv: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn rationals_parse_exactly() {
        assert_eq!(parse_rational("3/6").unwrap(), q(1, 2));
        assert_eq!(parse_rational("-0.125").unwrap(), q(-1, 8));
        assert_eq!(parse_rational("0.1").unwrap(), q(1, 10));
        assert_eq!(parse_rational(" 42 ").unwrap(), q(42, 1));
        assert_eq!(parse_rational("1e-1").unwrap(), BigRational::from_float(0.1).unwrap());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn permutations_parse() {
        let swap = parse_permutation("(1 2)", None).unwrap();
        assert_eq!(swap, parse_permutation("2,1", None).unwrap());
        assert_eq!(parse_permutation("(1 2)", Some(4)).unwrap().n(), 4);
        assert!(parse_permutation("1,1", None).is_err());
        assert!(parse_permutation("2,1", Some(3)).is_err());
    }

    #[test]
    fn complex_parse() {
        assert_eq!(parse_complex("0,2").unwrap(), Complex64::new(0.0, 2.0));
        assert_eq!(parse_complex("-1.5").unwrap(), Complex64::new(-1.5, 0.0));
        assert!(parse_complex("1,2,3").is_err());
    }
}
