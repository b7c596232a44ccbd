//! `qtype`: the command-line front end. Parses group/complex/manifest files,
//! dispatches the core computations, and emits deterministic reports.
//!
//! Output modes: plain text (`key = value` lines, with the classifier's
//! decision also printed bare) or, with `--structured`, the versioned report
//! format that round-trips through [`qtype_core::formats::Report`].
//!
//! Exit codes: 0 on success, 1 when the computed answer is a flagged
//! negative (a `NOT_HOMEOMORPHIC` decision), 2 on any input error.

use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use qtype_core::classify::{decide_dinfty, CompareMode, Decision, Manifest};
use qtype_core::formats::{render_matrix, Document, Report};
use qtype_core::forms::b_map;
use qtype_core::gamma::gamma;
use qtype_core::groupring::{Character, FactorKind, FreeWord, GroupSpec};
use qtype_core::lattices::{aug_ideal, free_module, twisted_integers, BasedLattice};
use qtype_core::manifolds::{
    builtin, euler_char, hyperbolic_k, k_invariant, pi2, solve_s, stable_pi2,
    standard_form_coefficient, Decomposition, PD3Symbol, ZPiComplex,
};
use qtype_core::resolutions::{canonical_relators, fox_complex, homology_twisted};
use qtype_core::Error;

#[derive(Parser)]
#[command(name = "qtype", version, about = "Exact quadratic 2-type computations")]
struct Cli {
    /// Emit the versioned machine-readable report instead of plain text.
    #[arg(long, global = true)]
    structured: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Twisted group homology from the standard resolution.
    Resolve {
        /// Group: factor grammar (C2*C2, ZxC2, Dinf, ...) or FILE#NAME.
        group: String,
        /// Resolution depth; the table covers degrees below it.
        #[arg(long, default_value_t = 5)]
        depth: usize,
        /// Twisting character, e.g. "t=+1,T=-1"; omitted generators are +1.
        #[arg(long)]
        twist: Option<String>,
        /// Report a single degree instead of the whole table.
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Whitehead Gamma of a module: coinvariants and the B-map kernel.
    Gamma {
        /// Group: factor grammar or FILE#NAME.
        group: String,
        /// Module: "ideal", "free:N", or "diag:+-..." (order-two group).
        #[arg(long)]
        module: String,
        /// Ball truncation radius for infinite groups.
        #[arg(short = 'L', long = "ball", default_value_t = 3)]
        l: usize,
        /// Character twisting the ideal and the coinvariants.
        #[arg(long)]
        twist: Option<String>,
    },
    /// k-invariant of a chain-complex model: pi2 fingerprint, raw and
    /// hyperbolic-basis k-invariant, and the mod-4 residue.
    Kinv {
        /// Complex: builtin:E, builtin:F, FILE#NAME, or a one-complex FILE.
        complex: String,
    },
    /// Stable isomorphism class of pi2 from the group decomposition.
    Pi2 {
        /// Group: factor grammar or FILE#NAME.
        group: String,
        /// Fundamental-class bits, one per ZxC2 factor, e.g. "10".
        #[arg(long, default_value = "")]
        fclass: String,
        /// Orientation character w.
        #[arg(long)]
        twist: Option<String>,
    },
    /// Euler characteristic bookkeeping: convert between chi and the free
    /// rank s of the stable pi2 class.
    Euler {
        /// Torsion-free group: factor grammar or FILE#NAME.
        group: String,
        /// Aspherical summands as NAME:BETA1, repeatable.
        #[arg(long = "aspherical")]
        aspherical: Vec<String>,
        /// Euler characteristic; computes s.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "s")]
        chi: Option<i64>,
        /// Free rank; computes chi.
        #[arg(long, allow_hyphen_values = true)]
        s: Option<i64>,
        /// Orientation character w.
        #[arg(long)]
        twist: Option<String>,
    },
    /// Decide homeomorphism of two declared manifests over D-infinity.
    Classify {
        /// First manifest: FILE#NAME or a one-manifest FILE.
        m1: String,
        /// Second manifest.
        m2: String,
        /// Allow composing with the factor-swapping outer automorphism.
        #[arg(long)]
        unbased: bool,
    },
    /// Fox-calculus chain complex of a group's canonical presentation.
    Fox {
        /// Group: factor grammar or FILE#NAME.
        presentation: String,
    },
}

/// A finished computation: the report, an optional bare trailing line for
/// text mode, and whether the outcome is a flagged negative.
struct Outcome {
    report: Report,
    bare_tail: Option<String>,
    flagged: bool,
}

impl Outcome {
    fn plain(report: Report) -> Outcome {
        Outcome { report, bare_tail: None, flagged: false }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.cmd) {
        Ok(out) => {
            if cli.structured {
                print!("{}", out.report.render());
            } else {
                for (k, v) in out.report.fields() {
                    println!("{} = {}", k, v);
                }
                if let Some(line) = &out.bare_tail {
                    println!("{}", line);
                }
            }
            if out.flagged {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(msg) => {
            eprintln!("error: {}", msg);
            ExitCode::from(2)
        }
    }
}

fn run(cmd: &Cmd) -> Result<Outcome, String> {
    match cmd {
        Cmd::Resolve { group, depth, twist, degree } => resolve(group, *depth, twist, *degree),
        Cmd::Gamma { group, module, l, twist } => gamma_cmd(group, module, *l, twist),
        Cmd::Kinv { complex } => kinv_cmd(complex),
        Cmd::Pi2 { group, fclass, twist } => pi2_cmd(group, fclass, twist),
        Cmd::Euler { group, aspherical, chi, s, twist } => {
            euler_cmd(group, aspherical, *chi, *s, twist)
        }
        Cmd::Classify { m1, m2, unbased } => classify_cmd(m1, m2, *unbased),
        Cmd::Fox { presentation } => fox_cmd(presentation),
    }
}

// ---------------------------------------------------------------------------
// Input addressing.
// ---------------------------------------------------------------------------

fn position_error(path: &str, e: Error) -> String {
    match e {
        Error::Parse { line, col, msg } => format!("{}:{}:{}: {}", path, line, col, msg),
        other => format!("{}: {}", path, other),
    }
}

fn load_document(path: &str) -> Result<Document, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {}", path, e))?;
    Document::parse(&text).map_err(|e| position_error(path, e))
}

fn split_ref(arg: &str) -> (&str, Option<&str>) {
    match arg.rsplit_once('#') {
        Some((path, name)) => (path, Some(name)),
        None => (arg, None),
    }
}

fn load_complex(arg: &str) -> Result<(String, ZPiComplex), String> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        return Ok((name.to_string(), builtin(name).map_err(|e| e.to_string())?));
    }
    let (path, name) = split_ref(arg);
    let doc = load_document(path)?;
    let complexes: Vec<&str> = doc
        .items()
        .iter()
        .filter_map(|i| match i {
            qtype_core::formats::Item::Complex { name, .. } => Some(name.as_str()),
            _ => None,
        })
        .collect();
    let name = match name {
        Some(n) => n.to_string(),
        None if complexes.len() == 1 => complexes[0].to_string(),
        None => {
            return Err(format!(
                "{}: expected exactly one complex section, found {:?}; use {}#NAME",
                path, complexes, path
            ))
        }
    };
    match doc.complex(&name) {
        Some(c) => Ok((name, c.clone())),
        None => Err(format!("{}: no complex section named {:?} (found {:?})", path, name, complexes)),
    }
}

fn load_manifest(arg: &str) -> Result<Manifest, String> {
    let (path, name) = split_ref(arg);
    let doc = load_document(path)?;
    let manifests: Vec<&str> = doc
        .items()
        .iter()
        .filter_map(|i| match i {
            qtype_core::formats::Item::Manifest(m) => Some(m.name.as_str()),
            _ => None,
        })
        .collect();
    let name = match name {
        Some(n) => n.to_string(),
        None if manifests.len() == 1 => manifests[0].to_string(),
        None => {
            return Err(format!(
                "{}: expected exactly one manifest section, found {:?}; use {}#NAME",
                path, manifests, path
            ))
        }
    };
    doc.manifest(&name).cloned().ok_or_else(|| {
        format!("{}: no manifest section named {:?} (found {:?})", path, name, manifests)
    })
}

fn load_group(arg: &str) -> Result<Arc<GroupSpec>, String> {
    if let Some((path, name)) = arg.rsplit_once('#') {
        let doc = load_document(path)?;
        return doc
            .group(name)
            .cloned()
            .ok_or_else(|| format!("{}: no group section named {:?}", path, name));
    }
    GroupSpec::parse(arg).map_err(|e| format!("group {:?}: {}", arg, e))
}

fn parse_twist(group: &Arc<GroupSpec>, twist: &Option<String>) -> Result<Character, String> {
    match twist {
        None => Ok(Character::trivial(group)),
        Some(text) => Character::parse(group, text).map_err(|e| format!("--twist: {}", e)),
    }
}

// ---------------------------------------------------------------------------
// Subcommands.
// ---------------------------------------------------------------------------

fn resolve(
    group: &str,
    depth: usize,
    twist: &Option<String>,
    degree: Option<usize>,
) -> Result<Outcome, String> {
    if depth < 2 {
        return Err("--depth must be at least 2".into());
    }
    let g = load_group(group)?;
    let w = parse_twist(&g, twist)?;
    let mut report = Report::new("resolve");
    report.push("group", g.describe());
    report.push("twist", w.describe());
    let degrees: Vec<usize> = match degree {
        Some(k) => vec![k],
        None => (0..depth).collect(),
    };
    for k in degrees {
        let h = homology_twisted(&g, &w, k).map_err(|e| e.to_string())?;
        report.push(format!("H{}", k), h);
    }
    Ok(Outcome::plain(report))
}

fn parse_module(
    group: &Arc<GroupSpec>,
    spec: &str,
    w: &Character,
    l: usize,
) -> Result<BasedLattice, String> {
    if spec == "ideal" {
        return Ok(aug_ideal(group, w, l));
    }
    if let Some(n) = spec.strip_prefix("free:") {
        let n: usize = n.parse().map_err(|_| format!("--module: bad rank in {:?}", spec))?;
        return Ok(free_module(group, n, l));
    }
    if let Some(signs) = spec.strip_prefix("diag:") {
        let mut acc: Option<BasedLattice> = None;
        for c in signs.chars() {
            let sign = match c {
                '+' => 1,
                '-' => -1,
                other => return Err(format!("--module: bad sign {:?} in {:?}", other, spec)),
            };
            let ch = Character::new(group, vec![sign; group.gen_count()])
                .map_err(|e| format!("--module: {}", e))?;
            let part = twisted_integers(group, &ch);
            acc = Some(match acc {
                None => part,
                Some(prev) => prev.direct_sum(&part).map_err(|e| e.to_string())?,
            });
        }
        return acc.ok_or_else(|| "--module: diag needs at least one sign".into());
    }
    Err(format!("--module: unknown spec {:?} (expected ideal, free:N, or diag:...)", spec))
}

fn gamma_cmd(
    group: &str,
    module: &str,
    l: usize,
    twist: &Option<String>,
) -> Result<Outcome, String> {
    if l < 1 {
        return Err("--ball must be at least 1".into());
    }
    let g = load_group(group)?;
    let w = parse_twist(&g, twist)?;
    let a = parse_module(&g, module, &w, l)?;
    let gm = gamma(&a).map_err(|e| e.to_string())?;
    let bm = b_map(&a, &w).map_err(|e| e.to_string())?;
    let mut report = Report::new("gamma");
    report.push("group", g.describe());
    report.push("module", module);
    report.push("L", l);
    report.push("twist", w.describe());
    report.push("rank", a.rank());
    report.push("gamma_rank", gm.rank());
    report.push("truncated", a.is_truncated());
    report.push("coinvariants", &bm.domain);
    report.push("bmap_kernel", &bm.kernel);
    if let Some(warning) = &bm.warning {
        report.push("bmap_warning", warning);
    }
    Ok(Outcome::plain(report))
}

fn kinv_cmd(complex: &str) -> Result<Outcome, String> {
    let (name, c) = load_complex(complex)?;
    let mut report = Report::new("kinv");
    report.push("complex", name);
    report.push("group", c.group().describe());
    let fp = pi2(&c).map_err(|e| e.to_string())?;
    report.push("pi2", fp);
    let raw = k_invariant(&c).map_err(|e| e.to_string())?;
    report.push("k_raw", &raw);
    if let Some(form) = c.form() {
        let n = standard_form_coefficient(form).map_err(|e| e.to_string())?;
        let (residue, k) = hyperbolic_k(&c).map_err(|e| e.to_string())?;
        report.push("n", n);
        report.push("k", k);
        report.push("residue", residue);
    }
    Ok(Outcome::plain(report))
}

fn pi2_cmd(group: &str, fclass: &str, twist: &Option<String>) -> Result<Outcome, String> {
    let g = load_group(group)?;
    let w = parse_twist(&g, twist)?;
    let bits = fclass
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(format!("--fclass: bad bit {:?} (expected 0 or 1)", other)),
        })
        .collect::<Result<Vec<bool>, String>>()?;
    let decomp = Decomposition::new(&g, Vec::new());
    let class = stable_pi2(&decomp, &w, &bits).map_err(|e| e.to_string())?;
    let mut report = Report::new("pi2");
    report.push("group", g.describe());
    report.push("twist", w.describe());
    report.push("fclass", fclass);
    report.push("class", class);
    Ok(Outcome::plain(report))
}

fn parse_aspherical(spec: &str) -> Result<PD3Symbol, String> {
    let (name, beta1) = spec
        .split_once(':')
        .ok_or_else(|| format!("--aspherical: expected NAME:BETA1, got {:?}", spec))?;
    let beta1: usize =
        beta1.parse().map_err(|_| format!("--aspherical: bad beta1 in {:?}", spec))?;
    Ok(PD3Symbol::aspherical(name, beta1))
}

fn euler_cmd(
    group: &str,
    aspherical: &[String],
    chi: Option<i64>,
    s: Option<i64>,
    twist: &Option<String>,
) -> Result<Outcome, String> {
    let g = load_group(group)?;
    let w = parse_twist(&g, twist)?;
    let symbols =
        aspherical.iter().map(|a| parse_aspherical(a)).collect::<Result<Vec<_>, String>>()?;
    let decomp = Decomposition::new(&g, symbols);
    let (chi, s) = match (chi, s) {
        (Some(chi), None) => (chi, solve_s(chi, &decomp, &w).map_err(|e| e.to_string())?),
        (None, Some(s)) => (euler_char(s, &decomp, &w).map_err(|e| e.to_string())?, s),
        _ => return Err("exactly one of --chi or --s is required".into()),
    };
    let r = g.factors().iter().filter(|f| f.kind == FactorKind::Infinite).count();
    let mut report = Report::new("euler");
    report.push("group", g.describe());
    report.push("m", decomp.pd3().len());
    report.push("r", r);
    report.push("chi", chi);
    report.push("s", s);
    Ok(Outcome::plain(report))
}

fn classify_cmd(m1: &str, m2: &str, unbased: bool) -> Result<Outcome, String> {
    let a = load_manifest(m1)?;
    let b = load_manifest(m2)?;
    let mode = if unbased { CompareMode::Unbased } else { CompareMode::Based };
    let decision = decide_dinfty(&a, &b, mode).map_err(|e| e.to_string())?;
    let mut report = Report::new("classify");
    report.push("m1", &a.name);
    report.push("m2", &b.name);
    report.push("mode", if unbased { "unbased" } else { "based" });
    report.push("decision", &decision);
    Ok(Outcome {
        flagged: matches!(decision, Decision::NotHomeomorphic(_)),
        bare_tail: Some(decision.to_string()),
        report,
    })
}

fn render_free_word(g: &Arc<GroupSpec>, w: &FreeWord) -> String {
    if w.0.is_empty() {
        return "1".into();
    }
    w.0.iter()
        .map(|(gen, exp)| {
            let name = &g.gens()[*gen].1;
            if exp == &1.into() {
                name.clone()
            } else {
                format!("{}^{}", name, exp)
            }
        })
        .collect::<Vec<_>>()
        .join("*")
}

fn fox_cmd(presentation: &str) -> Result<Outcome, String> {
    let g = load_group(presentation)?;
    let relators = canonical_relators(&g);
    let fx = fox_complex(&g, &relators).map_err(|e| e.to_string())?;
    let mut report = Report::new("fox");
    report.push("group", g.describe());
    report.push("generators", g.gen_count());
    for (i, r) in relators.iter().enumerate() {
        report.push(format!("relator{}", i), render_free_word(&g, r));
    }
    report.push("d1", render_matrix(&fx.d1));
    report.push("d2", render_matrix(&fx.d2));
    Ok(Outcome::plain(report))
}
