//! Command-line front end. `run` parses arguments, dispatches to the library
//! and writes JSON or CSV; it returns the process exit code.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::asymptotics::asymptotic_fit;
use crate::chart::{make_family_chart, parse_family, Background, Family};
use crate::config::{OutputFormat, RunConfig};
use crate::energy::energy;
use crate::error::{Error, Result};
use crate::families::{boundedness_scan, find_critical_points, ProductFamily};
use crate::obstruction::obstruction_norms;
use crate::variation::{jacobi_spectrum, Surface};
use crate::verify::{run_suite, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "willmore", version, about = "Conformally invariant energy of 4-dimensional submanifolds")]
struct Cli {
    /// `key = value` file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output format: json or csv.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Seed for randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Energy of a built-in family chart.
    Energy {
        #[arg(long)]
        family: String,
        /// Comma-separated `key=value` family parameters.
        #[arg(long, default_value = "")]
        params: String,
        /// euclidean or sphere; defaults to the family's own background.
        #[arg(long)]
        background: Option<String>,
        #[arg(long)]
        res: Option<usize>,
    },
    /// Closed-form energy along `t₁` (other ratios fixed at 1), as CSV.
    Scan {
        #[arg(long)]
        family: String,
        /// `lo:hi`
        #[arg(long)]
        range: String,
        #[arg(long, default_value_t = 200)]
        steps: usize,
    },
    /// Critical points of a product-of-spheres family.
    Critical {
        #[arg(long)]
        family: String,
    },
    /// Sup and L² norms of the obstruction field.
    Obstruction {
        #[arg(long)]
        family: String,
        #[arg(long, default_value = "")]
        params: String,
        #[arg(long)]
        res: Option<usize>,
    },
    /// Jacobi spectrum of the round S⁴ or of S²×S².
    Spectrum {
        #[arg(long)]
        surface: String,
        #[arg(long, default_value_t = 3)]
        jmax: u32,
    },
    /// Leading a⁴ coefficient of the dilated anchor ring energy.
    Asymptotics {
        #[arg(long, default_value = "20,40,80,160")]
        a_list: String,
    },
    /// Runs the acceptance criteria.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

fn load_config(cli: &Cli, res: Option<usize>) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(f) = &cli.format {
        cfg.format = f.parse()?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = res {
        cfg.resolution = r;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Rescales product-sphere radii onto the unit sphere.
fn normalize(family: Family) -> Family {
    match family {
        Family::ProductSpheres { dims, radii } => {
            let n = radii.iter().map(|r| r * r).sum::<f64>().sqrt();
            let radii = if n > 0.0 && n.is_finite() { radii.iter().map(|r| r / n).collect() } else { radii };
            Family::ProductSpheres { dims, radii }
        }
        other => other,
    }
}

fn resolve_background(family: &Family, requested: Option<&str>) -> Result<Background> {
    let natural = family.natural_background();
    let ok = match requested {
        None => true,
        Some("euclidean") => !natural.is_sphere(),
        Some("sphere") => natural.is_sphere(),
        Some(other) => return Err(Error::Config(format!("unknown background '{other}' (expected euclidean or sphere)"))),
    };
    if ok {
        Ok(natural)
    } else {
        Err(Error::Config(format!("{} lives in the {} background", family.tag(), natural.name())))
    }
}

fn csv_header(out: &mut dyn Write, pairs: &[(&str, String)]) -> std::io::Result<()> {
    for (k, v) in pairs {
        writeln!(out, "# {k}={v}")?;
    }
    Ok(())
}

fn params_string(p: &BTreeMap<String, f64>) -> String {
    p.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

fn emit_json(out: &mut dyn Write, v: &impl Serialize) -> Result<()> {
    let s = serde_json::to_string_pretty(v).map_err(|e| Error::Config(e.to_string()))?;
    writeln!(out, "{s}").map_err(io)
}

fn io(e: std::io::Error) -> Error {
    Error::Config(format!("write failed: {e}"))
}

fn cmd_energy(out: &mut dyn Write, cfg: &RunConfig, tag: &str, params: &str, background: Option<&str>) -> Result<()> {
    let family = normalize(parse_family(tag, params)?);
    let bg = resolve_background(&family, background)?;
    let chart = make_family_chart(family.clone())?;
    let r = energy(&chart, bg, cfg.resolution)?;
    match cfg.format {
        OutputFormat::Json => emit_json(
            out,
            &json!({
                "family": tag,
                "params": family.params(),
                "background": bg.name(),
                "resolution": r.resolution,
                "E": r.e,
                "Ebar": r.ebar,
                "area": r.area,
                "est_error": r.est_error,
            }),
        ),
        OutputFormat::Csv => {
            csv_header(
                out,
                &[
                    ("family", tag.to_string()),
                    ("params", params_string(&family.params())),
                    ("background", bg.name().to_string()),
                    ("resolution", r.resolution.to_string()),
                ],
            )
            .map_err(io)?;
            writeln!(out, "E,Ebar,area,est_error").map_err(io)?;
            let ebar = r.ebar.map_or(String::new(), |v| v.to_string());
            writeln!(out, "{},{},{},{}", r.e, ebar, r.area, r.est_error).map_err(io)
        }
    }
}

fn cmd_scan(out: &mut dyn Write, tag: &str, range: &str, steps: usize) -> Result<()> {
    let family = ProductFamily::from_tag(tag)?;
    let (lo, hi) = range
        .split_once(':')
        .and_then(|(a, b)| Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?)))
        .ok_or_else(|| Error::Config(format!("range must look like lo:hi, got '{range}'")))?;
    let scan = boundedness_scan(family, lo, hi, steps)?;
    csv_header(
        out,
        &[
            ("family", tag.to_string()),
            ("range", format!("{lo}:{hi}")),
            ("steps", steps.to_string()),
            ("quantity", "Ebar".to_string()),
            ("min", scan.min.to_string()),
            ("max", scan.max.to_string()),
        ],
    )
    .map_err(io)?;
    let cols: Vec<String> = (1..=family.arity()).map(|i| format!("t{i}")).collect();
    writeln!(out, "{},Ebar", cols.join(",")).map_err(io)?;
    for (t, e) in &scan.rows {
        let ts: Vec<String> = t.iter().map(f64::to_string).collect();
        writeln!(out, "{},{e}", ts.join(",")).map_err(io)?;
    }
    Ok(())
}

fn cmd_critical(out: &mut dyn Write, cfg: &RunConfig, tag: &str) -> Result<()> {
    let family = ProductFamily::from_tag(tag)?;
    let points = find_critical_points(family);
    match cfg.format {
        OutputFormat::Json => emit_json(out, &points),
        OutputFormat::Csv => {
            csv_header(out, &[("family", tag.to_string()), ("quantity", "Ebar".to_string())]).map_err(io)?;
            writeln!(out, "t,radii_squared,Ebar,classification").map_err(io)?;
            for p in &points {
                let j = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(";");
                writeln!(out, "{},{},{},{}", j(&p.t), j(&p.radii_squared), p.ebar, p.classification.as_str()).map_err(io)?;
            }
            Ok(())
        }
    }
}

fn cmd_obstruction(out: &mut dyn Write, cfg: &RunConfig, tag: &str, params: &str) -> Result<()> {
    let family = normalize(parse_family(tag, params)?);
    let chart = make_family_chart(family.clone())?;
    let bg = chart.natural_background();
    let n = obstruction_norms(&chart, bg, cfg.resolution)?;
    match cfg.format {
        OutputFormat::Json => emit_json(
            out,
            &json!({
                "family": tag,
                "params": family.params(),
                "background": bg.name(),
                "resolution": cfg.resolution,
                "sup": n.sup,
                "l2": n.l2,
                "scaled_sup": n.scaled_sup,
                "vanishes": n.scaled_sup < cfg.obstruction_rel,
                "term_sups": n.term_sups,
                "nodes": n.nodes,
            }),
        ),
        OutputFormat::Csv => {
            csv_header(out, &[("family", tag.to_string()), ("params", params_string(&family.params())), ("resolution", cfg.resolution.to_string())])
                .map_err(io)?;
            writeln!(out, "sup,l2,scaled_sup,nodes").map_err(io)?;
            writeln!(out, "{},{},{},{}", n.sup, n.l2, n.scaled_sup, n.nodes).map_err(io)
        }
    }
}

fn cmd_spectrum(out: &mut dyn Write, cfg: &RunConfig, surface: &str, jmax: u32) -> Result<()> {
    let table = jacobi_spectrum(Surface::from_tag(surface)?, jmax)?;
    match cfg.format {
        OutputFormat::Json => emit_json(out, &table),
        OutputFormat::Csv => {
            csv_header(
                out,
                &[
                    ("surface", surface.to_string()),
                    ("jmax", jmax.to_string()),
                    ("killing_dim", table.killing_dim.to_string()),
                    ("conformal_dim", table.conformal_dim.to_string()),
                    ("j_kernel_dim", table.j_kernel_dim.to_string()),
                ],
            )
            .map_err(io)?;
            writeln!(out, "lambda,mult,cJ").map_err(io)?;
            for r in &table.rows {
                writeln!(out, "{},{},{}", r.lambda, r.mult, r.cj).map_err(io)?;
            }
            Ok(())
        }
    }
}

fn cmd_asymptotics(out: &mut dyn Write, cfg: &RunConfig, a_list: &str) -> Result<()> {
    let a: Vec<f64> = a_list
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad dilation factor '{s}'"))))
        .collect::<Result<_>>()?;
    let scan = asymptotic_fit(&a)?;
    match cfg.format {
        OutputFormat::Json => emit_json(
            out,
            &json!({
                "a": scan.a,
                "Ebar": scan.ebar,
                "coefficient": scan.coefficient,
                "target": scan.target,
                "rel_error": (scan.coefficient - scan.target).abs() / scan.target,
            }),
        ),
        OutputFormat::Csv => {
            csv_header(out, &[("coefficient", scan.coefficient.to_string()), ("target", scan.target.to_string())]).map_err(io)?;
            writeln!(out, "a,Ebar").map_err(io)?;
            for (a, e) in scan.a.iter().zip(&scan.ebar) {
                writeln!(out, "{a},{e}").map_err(io)?;
            }
            Ok(())
        }
    }
}

fn cmd_verify(out: &mut dyn Write, cfg: &RunConfig, suite: &str) -> Result<bool> {
    let suite: Suite = suite.parse()?;
    let results = run_suite(suite, cfg);
    for r in &results {
        writeln!(out, "{}", r.line()).map_err(io)?;
    }
    let passed = results.iter().filter(|r| r.pass).count();
    writeln!(out, "{passed}/{} criteria passed", results.len()).map_err(io)?;
    Ok(passed == results.len())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let res = match &cli.command {
        Command::Energy { res, .. } | Command::Obstruction { res, .. } => *res,
        _ => None,
    };
    let cfg = match load_config(&cli, res) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let outcome = match &cli.command {
        Command::Energy { family, params, background, .. } => cmd_energy(out, &cfg, family, params, background.as_deref()).map(|_| true),
        Command::Scan { family, range, steps } => cmd_scan(out, family, range, *steps).map(|_| true),
        Command::Critical { family } => cmd_critical(out, &cfg, family).map(|_| true),
        Command::Obstruction { family, params, .. } => cmd_obstruction(out, &cfg, family, params).map(|_| true),
        Command::Spectrum { surface, jmax } => cmd_spectrum(out, &cfg, surface, *jmax).map(|_| true),
        Command::Asymptotics { a_list } => cmd_asymptotics(out, &cfg, a_list).map(|_| true),
        Command::Verify { suite } => cmd_verify(out, &cfg, suite),
    };
    match outcome {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("willmore").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn energy_json_schema() {
        let (code, out, _) =
            call(&["energy", "--family", "s2xs2", "--params", "r1=0.70710678,r2=0.70710678", "--background", "sphere", "--res", "16"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        for key in ["family", "params", "background", "resolution", "E", "Ebar", "area", "est_error"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let ebar = v["Ebar"].as_f64().unwrap();
        assert!((ebar / (192.0 * std::f64::consts::PI.powi(2)) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn argument_errors_exit_2() {
        assert_eq!(call(&["energy"]).0, 2);
        assert_eq!(call(&["energy", "--family", "nope"]).0, 2);
        assert_eq!(call(&["energy", "--family", "s4", "--background", "sphere"]).0, 2);
        assert_eq!(call(&["energy", "--family", "s4", "--res", "4"]).0, 2);
        assert_eq!(call(&["scan", "--family", "s2xs2", "--range", "1-2"]).0, 2);
        assert_eq!(call(&["bogus"]).0, 2);
    }

    #[test]
    fn scan_csv_layout() {
        let (code, out, _) = call(&["scan", "--family", "s1s1s2", "--range", "0.5:2", "--steps", "4"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert!(lines.iter().take_while(|l| l.starts_with("# ")).all(|l| l.contains('=')));
        let body: Vec<&str> = lines.iter().copied().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body[0], "t1,t2,Ebar");
        assert_eq!(body.len(), 5);
    }

    #[test]
    fn output_is_deterministic() {
        let args = ["energy", "--family", "anchor", "--params", "j=2,k=2,R=1.5,r=1", "--res", "12"];
        assert_eq!(call(&args).1, call(&args).1);
    }
}
