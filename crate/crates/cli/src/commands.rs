use std::path::Path;

use serde_json::{json, Value};
use sl_krein::bdm::{bdm_compose_check, bdm_eval, bdm_grid, bdm_via_fractional, herglotz_probe};
use sl_krein::boundary::{matrix_to_wire, ABPair, BcDoc, CanonicalBC};
use sl_krein::problem::{preset, Problem, ProblemDoc, PRESETS};
use sl_krein::propagate::DEFAULT_TOL;
use sl_krein::shift::{ssf_boundary, ssf_counting, TraceFormula};
use sl_krein::spectra::eigenvalues;
use sl_krein::spectra::green::green_direct;
use sl_krein::spectra::krein::{krein_correction, krein_resolvent_check, specialized_residual};
use sl_krein::spectra::kvn::kvn_extension;
use sl_krein::verify::{run_criterion, run_suite, CriterionReport, Suite};
use sl_krein::vonneumann::{vn_unitary_canonical, vn_unitary_general};
use sl_krein::{CMat2, C};

use crate::args::{Basis, BdmCheck, Cli, Command, Parametrization};
use crate::error::CliError;
use crate::io::{float, Table};

/// Result data of a command, with a property violation reported after it is written.
pub struct Outcome {
    pub json: Value,
    pub table: Option<Table>,
    pub violation: Option<String>,
}

impl Outcome {
    fn new(json: Value, table: Table) -> Self {
        Outcome { json, table: Some(table), violation: None }
    }

    fn json_only(json: Value) -> Self {
        Outcome { json, table: None, violation: None }
    }

    fn violated_if(mut self, failed: bool, message: impl FnOnce() -> String) -> Self {
        if failed {
            self.violation = Some(message());
        }
        self
    }
}

/// Problem from a JSON file, or from a preset name (with or without `.json`).
pub fn load_problem(spec: &str) -> Result<Problem, CliError> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{spec}: {e}")))?;
        let doc: ProblemDoc = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{spec}: {e}")))?;
        return Ok(Problem::try_from(doc)?);
    }
    let name = spec.strip_suffix(".json").unwrap_or(spec);
    let name = Path::new(name).file_name().and_then(|n| n.to_str()).unwrap_or(name);
    if PRESETS.contains(&name) {
        return Ok(preset(name)?);
    }
    Err(CliError::Input(format!("`{spec}` is neither a readable problem file nor a preset ({})", PRESETS.join(", "))))
}

/// A boundary condition document from a name, inline JSON or `@file`.
pub fn parse_bc(spec: &str) -> Result<BcDoc, CliError> {
    let text = if let Some(file) = spec.strip_prefix('@') {
        std::fs::read_to_string(file).map_err(|e| CliError::Input(format!("{file}: {e}")))?
    } else {
        spec.to_string()
    };
    let trimmed = text.trim();
    if trimmed.starts_with('{') {
        serde_json::from_str(trimmed).map_err(|e| CliError::Input(format!("boundary condition `{trimmed}`: {e}")))
    } else {
        Ok(BcDoc::named(&trimmed.to_lowercase()))
    }
}

pub fn parse_z(spec: &str) -> Result<C, CliError> {
    let z: C = spec
        .trim()
        .replace(' ', "")
        .parse()
        .map_err(|_| CliError::Input(format!("`{spec}` is not a complex number (examples: -1, 2+2i, 0+1i)")))?;
    if z.is_finite() {
        Ok(z)
    } else {
        Err(CliError::Input(format!("`{spec}` is not finite")))
    }
}

fn parse_zs(specs: &[String]) -> Result<Vec<C>, CliError> {
    specs.iter().map(|s| parse_z(s)).collect()
}

fn pair(z: C) -> [f64; 2] {
    [z.re, z.im]
}

struct Context<'a> {
    problem: Option<&'a Problem>,
    tol: f64,
}

impl Context<'_> {
    fn problem(&self) -> Result<&Problem, CliError> {
        self.problem.ok_or_else(|| CliError::Input("this command needs -p/--problem".into()))
    }

    fn bc(&self, spec: &str) -> Result<ABPair, CliError> {
        Ok(self.bc_doc(spec)?.1)
    }

    /// The condition with the document echoed in output; `kvn` echoes its coupled form.
    fn bc_doc(&self, spec: &str) -> Result<(BcDoc, ABPair), CliError> {
        let doc = parse_bc(spec)?;
        if doc.is_kvn() {
            let kvn = kvn_extension(self.problem()?, self.tol)?;
            Ok((BcDoc::from_canonical(&CanonicalBC::Coupled(kvn)), kvn.to_ab()))
        } else {
            let ab = doc.to_ab()?;
            Ok((doc, ab))
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let problem = cli.problem.as_deref().map(load_problem).transpose()?;
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Input(format!("--tol must be positive, got {t}")));
        }
    }
    let ctx = Context { problem: problem.as_ref(), tol: cli.tol.unwrap_or(DEFAULT_TOL) };
    match &cli.command {
        Command::Eigs { bc, window } => eigs(&ctx, bc, (window[0], window[1])),
        Command::Bdm { from, to, z, check, via, max_residual } => {
            bdm(&ctx, from, to, &parse_zs(z)?, *check, via, *max_residual)
        }
        Command::Green { bc, z, x, xp } => green(&ctx, bc, parse_z(z)?, x, xp),
        Command::Ssf { from, to, lmax, lambda, epsilon } => ssf(&ctx, from, to, *lmax, lambda, *epsilon),
        Command::Trace { from, to, z, n_eigs, max_residual } => {
            trace(&ctx, from, to, &parse_zs(z)?, *n_eigs, *max_residual)
        }
        Command::Krein { target, reference, z, max_residual } => {
            krein(&ctx, target, reference, &parse_zs(z)?, *max_residual)
        }
        Command::Convert { bc, to } => convert(&ctx, bc, *to),
        Command::Vn { bc, reference, basis, max_residual } => vn(&ctx, bc, reference.as_deref(), *basis, *max_residual),
        Command::Verify { suite, criterion } => verify(suite, criterion, cli.tol),
    }
}

fn eigs(ctx: &Context, bc: &str, window: (f64, f64)) -> Result<Outcome, CliError> {
    if !(window.0 < window.1) {
        return Err(CliError::Input(format!("empty window ({}, {})", window.0, window.1)));
    }
    let (doc, ab) = ctx.bc_doc(bc)?;
    let s = eigenvalues(ctx.problem()?, &ab, window, ctx.tol)?;
    let mut table = Table::new(&["lambda", "multiplicity"]);
    for e in &s.eigenvalues {
        table.push(vec![float(e.lambda), e.mult.to_string()]);
    }
    let json = json!({
        "bc": doc,
        "window": [window.0, window.1],
        "eigenvalues": s.eigenvalues,
        "count": s.count(),
        "contour_count": s.contour_count,
    });
    Ok(Outcome::new(json, table))
}

fn bdm(
    ctx: &Context,
    from: &str,
    to: &str,
    zs: &[C],
    check: Option<BdmCheck>,
    via: &str,
    max_residual: f64,
) -> Result<Outcome, CliError> {
    let p = ctx.problem()?;
    let ((from_doc, from), (to_doc, to)) = (ctx.bc_doc(from)?, ctx.bc_doc(to)?);
    let tol = ctx.tol;
    match check {
        None => {
            let values = bdm_grid(p, &from, &to, zs, tol).into_iter().collect::<Result<Vec<_>, _>>()?;
            let mut table = Table::new(&[
                "z_re", "z_im", "l11_re", "l11_im", "l12_re", "l12_im", "l21_re", "l21_im", "l22_re", "l22_im",
            ]);
            for v in &values {
                let mut row = vec![float(v.z.re), float(v.z.im)];
                row.extend(matrix_to_wire(&v.m).iter().flatten().map(|&x| float(x)));
                table.push(row);
            }
            let json = json!({
                "from": from_doc,
                "to": to_doc,
                "values": values.iter().map(|v| json!({"z": pair(v.z), "lambda": matrix_to_wire(&v.m)})).collect::<Vec<_>>(),
            });
            Ok(Outcome::new(json, table))
        }
        Some(BdmCheck::Herglotz) => {
            let mut table = Table::new(&["z_re", "z_im", "min_eig", "max_eig"]);
            let mut lowest = f64::INFINITY;
            for &z in zs {
                let (lo, hi) = herglotz_probe(p, &from, &to, z, tol)?;
                lowest = lowest.min(lo);
                table.push(vec![float(z.re), float(z.im), float(lo), float(hi)]);
            }
            let json = json!({"check": "herglotz", "min_eig": lowest, "points": zs.len()});
            Ok(Outcome::new(json, table)
                .violated_if(!(lowest > 0.0), || format!("min eig Im(Lambda S*) = {lowest:e} is not positive")))
        }
        Some(BdmCheck::Group) => {
            let via = ctx.bc(via)?;
            let mut table = Table::new(&["z_re", "z_im", "identity", "inverse", "composition"]);
            let mut worst: f64 = 0.0;
            for &z in zs {
                let id = bdm_eval(p, &from, &from, z, tol)?.m.dist(&CMat2::identity());
                let inv = bdm_compose_check(p, &from, &to, &from, z, tol)?;
                let comp = bdm_compose_check(p, &from, &via, &to, z, tol)?;
                worst = worst.max(id).max(inv).max(comp);
                table.push(vec![float(z.re), float(z.im), float(id), float(inv), float(comp)]);
            }
            let json = json!({"check": "group", "max_residual": worst, "points": zs.len()});
            Ok(Outcome::new(json, table)
                .violated_if(!(worst < max_residual), || format!("group residual {worst:e} exceeds {max_residual:e}")))
        }
        Some(BdmCheck::Fractional) => {
            let mut table = Table::new(&["z_re", "z_im", "relative_difference"]);
            let mut worst: f64 = 0.0;
            for &z in zs {
                let direct = bdm_eval(p, &from, &to, z, tol)?.m;
                let frac = bdm_via_fractional(p, &from, &to, z, tol)?.m;
                let r = direct.dist(&frac) / direct.max_norm().max(1.0);
                worst = worst.max(r);
                table.push(vec![float(z.re), float(z.im), float(r)]);
            }
            let json = json!({"check": "fractional", "max_residual": worst, "points": zs.len()});
            Ok(Outcome::new(json, table).violated_if(!(worst < max_residual), || {
                format!("fractional path differs by {worst:e}, above {max_residual:e}")
            }))
        }
    }
}

fn green(ctx: &Context, bc: &str, z: C, xs: &[f64], xps: &[f64]) -> Result<Outcome, CliError> {
    let p = ctx.problem()?;
    let (doc, ab) = ctx.bc_doc(bc)?;
    for &x in xs.iter().chain(xps) {
        if !(p.a() <= x && x <= p.b()) {
            return Err(CliError::Input(format!("point {x} is outside [{}, {}]", p.a(), p.b())));
        }
    }
    let mut table = Table::new(&["x", "xp", "re", "im"]);
    let mut values = Vec::new();
    for &x in xs {
        for &xp in xps {
            let g = green_direct(p, &ab, z, x, xp, ctx.tol)?;
            table.push(vec![float(x), float(xp), float(g.re), float(g.im)]);
            values.push(json!({"x": x, "xp": xp, "g": pair(g)}));
        }
    }
    let json = json!({"bc": doc, "z": pair(z), "values": values});
    Ok(Outcome::new(json, table))
}

fn ssf(ctx: &Context, from: &str, to: &str, lmax: f64, lambdas: &[f64], epsilon: f64) -> Result<Outcome, CliError> {
    let p = ctx.problem()?;
    let ((from_doc, from), (to_doc, to)) = (ctx.bc_doc(from)?, ctx.bc_doc(to)?);
    let xi = ssf_counting(p, &from, &to, lmax, ctx.tol)?;
    let jumps: Vec<Value> = xi.jumps.iter().map(|j| json!({"at": j.at, "value": j.to})).collect();
    let mut json = json!({
        "from": from_doc,
        "to": to_doc,
        "lmax": lmax,
        "base": xi.base,
        "jumps": jumps,
    });
    if lambdas.is_empty() {
        let mut table = Table::new(&["at", "value"]);
        for j in &xi.jumps {
            table.push(vec![float(j.at), j.to.to_string()]);
        }
        return Ok(Outcome::new(json, table));
    }
    let b = ssf_boundary(p, &from, &to, lambdas, epsilon, ctx.tol)?;
    let rounded = b.rounded()?;
    let mut table = Table::new(&["lambda", "counting", "boundary", "rounded"]);
    let mut disagree = Vec::new();
    for ((&l, &v), &r) in lambdas.iter().zip(&b.values).zip(&rounded) {
        let count = xi.value(l);
        if r != count {
            disagree.push(l);
        }
        table.push(vec![float(l), count.to_string(), float(v), r.to_string()]);
    }
    json["boundary"] = json!({
        "lambda": lambdas,
        "values": b.values,
        "rounded": rounded,
        "epsilon": epsilon,
        "eta": b.eta,
    });
    Ok(Outcome::new(json, table).violated_if(!disagree.is_empty(), || {
        format!("boundary and counting routes disagree at lambda = {disagree:?}")
    }))
}

fn trace(ctx: &Context, from: &str, to: &str, zs: &[C], n_eigs: usize, max_residual: f64) -> Result<Outcome, CliError> {
    let p = ctx.problem()?;
    let ((from_doc, from), (to_doc, to)) = (ctx.bc_doc(from)?, ctx.bc_doc(to)?);
    let tf = TraceFormula::new(p, &from, &to, n_eigs, max_residual)?;
    let checks = zs.iter().map(|&z| tf.check(z)).collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["z_re", "z_im", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "residual", "tail_estimate"]);
    let mut worst: f64 = 0.0;
    for c in &checks {
        worst = worst.max(c.residual);
        table.push(
            [c.z[0], c.z[1], c.lhs[0], c.lhs[1], c.rhs[0], c.rhs[1], c.residual, c.tail_estimate]
                .iter()
                .map(|&v| float(v))
                .collect(),
        );
    }
    let json = json!({"from": from_doc, "to": to_doc, "n_eigs": n_eigs, "checks": checks, "max_residual": worst});
    Ok(Outcome::new(json, table)
        .violated_if(!(worst < max_residual), || format!("trace residual {worst:e} exceeds {max_residual:e}")))
}

fn krein(ctx: &Context, target: &str, reference: &str, zs: &[C], max_residual: f64) -> Result<Outcome, CliError> {
    let p = ctx.problem()?;
    let ((target_doc, target), (reference_doc, reference)) = (ctx.bc_doc(target)?, ctx.bc_doc(reference)?);
    let trials: [fn(f64) -> C; 3] =
        [|_| C::new(1.0, 0.0), |x| C::new(x, 0.0), |x| C::new((3.0 * x).sin() + x * x, 0.0)];
    let refs: Vec<&(dyn Fn(f64) -> C + Sync)> = trials.iter().map(|f| f as &(dyn Fn(f64) -> C + Sync)).collect();
    let canonical = if reference.equivalent(&ABPair::dirichlet()) { Some(target.canonicalize()?) } else { None };
    let mut table = Table::new(&["z_re", "z_im", "correction", "residual", "specialized_residual"]);
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &z in zs {
        let kind = krein_correction(p, &target, &reference, z, ctx.tol)?.kind();
        let r = krein_resolvent_check(p, &target, &reference, z, &refs, ctx.tol)?;
        let special = canonical.map(|c| specialized_residual(p, &c, z, ctx.tol)).transpose()?;
        worst = worst.max(r).max(special.unwrap_or(0.0));
        table.push(vec![float(z.re), float(z.im), kind.into(), float(r), special.map_or(String::new(), float)]);
        rows.push(json!({"z": pair(z), "correction": kind, "residual": r, "specialized_residual": special}));
    }
    let json = json!({
        "target": target_doc,
        "reference": reference_doc,
        "points": rows,
        "max_residual": worst,
    });
    Ok(Outcome::new(json, table)
        .violated_if(!(worst < max_residual), || format!("Krein residual {worst:e} exceeds {max_residual:e}")))
}

fn convert(ctx: &Context, bc: &str, to: Parametrization) -> Result<Outcome, CliError> {
    let ab = ctx.bc(bc)?;
    let unitary = ab.to_unitary();
    let doc = match to {
        Parametrization::Ab => BcDoc::from_ab(&ab),
        Parametrization::Dn => BcDoc::from_dn(&ab.to_dn()),
        Parametrization::Unitary => BcDoc::from_unitary(&unitary),
        Parametrization::Canonical => BcDoc::from_canonical(&ab.canonicalize()?),
    };
    // The converted document must denote the same extension.
    let back = doc.to_ab()?.to_unitary();
    let drift = back.matrix().dist(unitary.matrix());
    let json = json!({"bc": doc, "U": matrix_to_wire(unitary.matrix()), "round_trip_error": drift});
    Ok(Outcome::json_only(json)
        .violated_if(!(drift < 1e-10), || format!("conversion changed the unitary by {drift:e}")))
}

fn vn(ctx: &Context, bc: &str, reference: Option<&str>, basis: Basis, max_residual: f64) -> Result<Outcome, CliError> {
    let p = ctx.problem()?;
    let ab = ctx.bc(bc)?;
    let v = match reference {
        None => vn_unitary_canonical(p, &ab.canonicalize()?, ctx.tol)?,
        Some(r) => {
            let general = vn_unitary_general(p, &ab, &ctx.bc(r)?, ctx.tol)?;
            match basis {
                Basis::Gamma => general,
                Basis::Pair => general.to_pair_basis(p, ctx.tol)?,
            }
        }
    };
    if v.condition > 1e10 {
        eprintln!("warning: the inverted trace matrix has condition number {:e}", v.condition);
    }
    let residual = v.isometry_residual();
    let json = serde_json::to_value(v).map_err(|e| CliError::Numeric(e.to_string()))?;
    Ok(Outcome::json_only(json)
        .violated_if(!(residual < max_residual), || format!("isometry residual {residual:e} exceeds {max_residual:e}")))
}

fn verify(suite: &str, criteria: &[u8], tighten: Option<f64>) -> Result<Outcome, CliError> {
    let suite = Suite::parse(suite)?;
    let reports: Vec<CriterionReport> = if criteria.is_empty() {
        run_suite(suite, tighten)
    } else {
        criteria.iter().map(|&id| run_criterion(id, tighten)).collect::<Result<_, _>>()?
    };
    let failed: Vec<u8> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    let mut table = Table::new(&["criterion", "title", "passed", "seconds"]);
    for r in &reports {
        table.push(vec![r.id.to_string(), r.title.into(), r.passed.to_string(), format!("{:.3}", r.seconds)]);
    }
    let json = json!({"passed": failed.is_empty(), "criteria": reports, "failed": failed});
    Ok(Outcome::new(json, table).violated_if(!failed.is_empty(), || {
        let ids: Vec<String> = failed.iter().map(|i| i.to_string()).collect();
        format!("failed criteria: {}", ids.join(", "))
    }))
}
