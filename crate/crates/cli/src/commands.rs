use std::fs::File;
use std::io::{self, BufWriter, Write};

use blockgs::krylov::{
    leja_order, sstep_gmres, BasisKind, BasisPolicy, ColumnScaling, CsrMatrix, DenseOperator,
    GmresOptions, GmresOutcome, GmresStatus, LinearOperator, DEFAULT_TOL,
};
use blockgs::testbed::{
    gen_nonsymmetric, kappa_sweep, read_matrix_market, write_matrix_market_array, MatrixClass,
    MatrixClassParams, SWEEP_COLUMNS,
};
use blockgs::{OrthoVariant, VariantTag};
use nalgebra::DVector;

use crate::config::{parse_float_list, parse_kappa_grid, parse_variant_list, RunConfig};
use crate::error::{CliError, CliResult};

pub const DEFAULT_M: usize = 200;
pub const DEFAULT_P: usize = 10;
pub const DEFAULT_S: usize = 5;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_GRID: &str = "1e1..1e15:8";
pub const DEFAULT_GMRES_S: usize = 2;

pub const HISTORY_COLUMNS: [&str; 8] = [
    "variant",
    "s",
    "block",
    "iteration",
    "step",
    "backward_error",
    "ls_residual",
    "sync_total",
];

fn open_output(cfg: &RunConfig) -> CliResult<Box<dyn Write>> {
    match cfg.raw("output") {
        Some(path) if path != "-" => {
            let f = File::create(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        _ => Ok(Box::new(io::stdout().lock())),
    }
}

fn class_params(cfg: &RunConfig, class: MatrixClass, kappa: f64) -> CliResult<MatrixClassParams> {
    Ok(MatrixClassParams {
        class,
        m: cfg.get("m", DEFAULT_M)?,
        p: cfg.get("p", DEFAULT_P)?,
        s: cfg.get("s", DEFAULT_S)?,
        kappa_target: kappa,
        rng_seed: cfg.get("seed", DEFAULT_SEED)?,
    })
}

/// Factor one generated matrix per grid point with every requested variant.
pub fn qr_sweep(cfg: &RunConfig) -> CliResult<()> {
    let class: MatrixClass = cfg.require("class")?.parse()?;
    let base = class_params(cfg, class, 1.0)?;
    let variants = parse_variant_list(cfg.raw("variants").unwrap_or("all"))?
        .into_iter()
        .map(|t| cfg.variant(t))
        .collect::<CliResult<Vec<_>>>()?;
    let grid = parse_kappa_grid(cfg.raw("kappa").unwrap_or(DEFAULT_GRID))?;
    let result = kappa_sweep(&base, &variants, &grid)?;

    let mut w = csv::Writer::from_writer(open_output(cfg)?);
    w.write_record(SWEEP_COLUMNS)?;
    for row in &result.rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

fn load_operator(cfg: &RunConfig) -> CliResult<Box<dyn LinearOperator>> {
    match (cfg.raw("matrix"), cfg.raw("n")) {
        (Some(_), Some(_)) => Err(CliError::Usage("give either 'matrix' or 'n', not both".into())),
        (Some(path), None) => {
            let mm = read_matrix_market(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
            let a: CsrMatrix = mm.matrix;
            if a.nrows() != a.ncols() {
                return Err(CliError::Usage(format!(
                    "{path}: matrix is {}x{}, not square",
                    a.nrows(),
                    a.ncols()
                )));
            }
            Ok(Box::new(a))
        }
        (None, Some(_)) => {
            let n: usize = cfg.get("n", 0)?;
            let a = gen_nonsymmetric(n, cfg.get("seed", DEFAULT_SEED)?)?;
            Ok(Box::new(DenseOperator::new(a)?))
        }
        (None, None) => Err(CliError::Usage("gmres needs 'matrix' or 'n'".into())),
    }
}

fn basis_policy(cfg: &RunConfig) -> CliResult<BasisPolicy> {
    let kind = match cfg.raw("basis").map(|b| b.trim().to_ascii_lowercase()).as_deref() {
        None | Some("monomial") => {
            if cfg.raw("shifts").is_some() {
                return Err(CliError::Usage("'shifts' needs basis=newton".into()));
            }
            BasisKind::Monomial
        }
        Some("newton") => {
            let shifts = parse_float_list("shifts", cfg.require("shifts")?)?;
            BasisKind::Newton {
                shifts: leja_order(&shifts),
            }
        }
        Some(other) => return Err(CliError::Usage(format!("unknown basis '{other}'"))),
    };
    Ok(BasisPolicy {
        kind,
        scaling: ColumnScaling::Unit,
    })
}

/// The one-line summary: backward error, iterations and sync points.
pub fn summary_line(variant: &OrthoVariant, s: usize, out: &GmresOutcome) -> String {
    let mut line = format!(
        "variant={} s={s} status={} backward_error={:e} iterations={}",
        variant.tag(),
        out.status.label(),
        out.backward_error,
        out.iterations(),
    );
    if variant.tag() == VariantTag::Adaptive {
        let (one, two) = out.state.phase_iterations(s);
        line.push_str(&format!(" ({one}+{two})"));
    }
    line.push_str(&format!(" syncs={}", out.state.syncs()));
    if variant.tag() == VariantTag::Adaptive {
        match out.state.switch_step {
            Some(d) => line.push_str(&format!(" switch_block={d}")),
            None => line.push_str(" switch_block=none"),
        }
    }
    line
}

/// Solve `A x = 1` from `x0 = 0` and write the per-block history.
pub fn gmres(cfg: &RunConfig) -> CliResult<()> {
    let a = load_operator(cfg)?;
    let tag: VariantTag = cfg.raw("variant").unwrap_or("ADAPTIVE").parse()?;
    let variant = cfg.variant(tag)?;
    let s = cfg.get("s", DEFAULT_GMRES_S)?;
    let mut opts = GmresOptions::new(s, variant);
    opts.tol = cfg.get("tol", DEFAULT_TOL)?;
    opts.max_iterations = cfg.get_opt("max_iter")?;
    opts.basis = basis_policy(cfg)?;

    let n = a.dim();
    let out = sstep_gmres(a.as_ref(), &DVector::from_element(n, 1.0), &DVector::zeros(n), &opts)?;

    let mut w = csv::Writer::from_writer(open_output(cfg)?);
    w.write_record(HISTORY_COLUMNS)?;
    for h in &out.state.history {
        w.write_record([
            tag.to_string(),
            s.to_string(),
            h.block.to_string(),
            h.iteration.to_string(),
            h.step.to_string(),
            format!("{:e}", h.backward_error),
            format!("{:e}", h.ls_residual),
            h.syncs.to_string(),
        ])?;
    }
    w.flush()?;
    drop(w);

    let line = summary_line(&variant, s, &out);
    match cfg.raw("output") {
        Some(p) if p != "-" => println!("{line}"),
        _ => eprintln!("{line}"),
    }
    match out.status {
        GmresStatus::Halted { reason } => Err(CliError::Numerical(reason)),
        _ => Ok(()),
    }
}

/// Write a generated matrix in Matrix Market array format.
///
/// `class=nonsymmetric` writes the square GMRES test operator of order `m`.
pub fn matgen(cfg: &RunConfig) -> CliResult<()> {
    let class = cfg.require("class")?;
    let x = if class.trim().eq_ignore_ascii_case("nonsymmetric") {
        gen_nonsymmetric(cfg.get("m", DEFAULT_M)?, cfg.get("seed", DEFAULT_SEED)?)?
    } else {
        let kappa = cfg.get("kappa", 1e8)?;
        class_params(cfg, class.parse()?, kappa)?.generate()?
    };
    let mut out = open_output(cfg)?;
    write_matrix_market_array(&mut out, &x)?;
    out.flush()?;
    Ok(())
}
