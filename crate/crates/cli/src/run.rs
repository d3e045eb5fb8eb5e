use serde_json::{json, Map, Value};

use bcheun::oracle::{fd_eigensolve, RadialGrid};
use bcheun::quantize::{
    constraint_polynomial, normalize, solve_b_roots, solve_family_capped, wavefunction,
    QuasiExactSolution, DEFAULT_DEGREE_CAP,
};
use bcheun::verify::{oracle_check_on, run_all};
use bcheun::{turning_points, PhysicalSystem};

use crate::config::{Command, Format, RunConfig};
use crate::table::{Cell, Table};
use crate::CliError;

const BETA_NOTE: &str = "each row is a different potential: beta is fixed by the quasi-exactness \
                         condition, so rows do not share a Hamiltonian";

/// Everything a run produces. `failure` is set when the run completed but a
/// verification check did not pass; the table is still worth writing.
#[derive(Debug, Clone)]
pub struct Report {
    pub config: RunConfig,
    pub table: Table,
    pub diagnostics: Map<String, Value>,
    pub warnings: Vec<String>,
    pub failure: Option<CliError>,
}

impl Report {
    fn new(config: &RunConfig, table: Table) -> Self {
        Self {
            config: config.clone(),
            table,
            diagnostics: Map::new(),
            warnings: Vec::new(),
            failure: None,
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.table.to_csv(),
            Format::Json => {
                let mut diagnostics = self.diagnostics.clone();
                if !self.warnings.is_empty() {
                    diagnostics.insert("warnings".into(), json!(self.warnings));
                }
                let doc = json!({
                    "config": self.config,
                    "results": self.table.to_json_rows(),
                    "diagnostics": diagnostics,
                });
                let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
                s.push('\n');
                s
            }
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    let mut report = match cfg.command {
        Command::Spectrum => spectrum(cfg)?,
        Command::Wavefunction => wavefunction_table(cfg)?,
        Command::TurningPoints => turning_point_table(cfg)?,
        Command::Verify => verify_suite(cfg),
    };
    if cfg.degree_cap > DEFAULT_DEGREE_CAP {
        report.warnings.push(format!(
            "degree cap raised to {}; constraint coefficients grow quickly past {DEFAULT_DEGREE_CAP}",
            cfg.degree_cap
        ));
    }
    Ok(report)
}

/// Auto-sized grid for the solution's own potential, with any user overrides.
fn grid_for(cfg: &RunConfig, sys: &PhysicalSystem, epsilon: f64) -> Result<RadialGrid, CliError> {
    let auto = RadialGrid::auto(sys, epsilon, cfg.grid_points)?;
    RadialGrid::new(
        cfg.r_min.unwrap_or(auto.r_min),
        cfg.r_max.unwrap_or(auto.r_max),
        cfg.grid_points,
    )
    .map_err(|e| CliError::Config(format!("grid: {e}")))
}

fn family(cfg: &RunConfig, n: usize, l: u32) -> Result<Vec<QuasiExactSolution>, CliError> {
    Ok(solve_family_capped(n, l, cfg.alpha, cfg.k, cfg.degree_cap)?)
}

fn spectrum(cfg: &RunConfig) -> Result<Report, CliError> {
    let mut header = vec![
        "n",
        "l",
        "branch",
        "b",
        "beta",
        "epsilon",
        "constraint_residual",
        "ode_residual",
    ];
    if cfg.verify {
        header.push("oracle_gap");
    }
    let mut table = Table::new(header);
    let mut families = Vec::new();
    let mut worst_gap = 0.0_f64;
    let mut failures = Vec::new();
    let kappa = cfg.k.sqrt().sqrt();

    for n in cfg.n.iter() {
        for l in cfg.l.iter() {
            let n = n as usize;
            let sols = family(cfg, n, l)?;
            let roots = solve_b_roots(&constraint_polynomial(n, l, cfg.alpha / kappa))?;
            families.push(json!({
                "n": n,
                "l": l,
                "real_roots": sols.len(),
                "complex_discarded": roots.complex_discarded,
            }));
            for (branch, sol) in sols.iter().enumerate() {
                let mut row = vec![
                    Cell::from(n),
                    Cell::from(l),
                    Cell::from(branch),
                    Cell::from(sol.b_root),
                    Cell::from(sol.beta),
                    Cell::from(sol.epsilon),
                    Cell::from(sol.residuals.constraint),
                    Cell::from(sol.residuals.ode_sup),
                ];
                if cfg.verify {
                    let grid = grid_for(cfg, &sol.system(), sol.epsilon)?;
                    let m = oracle_check_on(sol, &grid)?;
                    worst_gap = worst_gap.max(m.relative_gap);
                    if !(m.relative_gap <= cfg.tol) {
                        failures.push(format!(
                            "n={n} l={l} branch={branch}: oracle gap {:.3e} > {:.1e}",
                            m.relative_gap, cfg.tol
                        ));
                    }
                    row.push(Cell::from(m.relative_gap));
                }
                table.push(row);
            }
        }
    }

    let mut report = Report::new(cfg, table);
    report.diagnostics.insert("note".into(), json!(BETA_NOTE));
    report
        .diagnostics
        .insert("families".into(), Value::Array(families));
    if cfg.verify {
        report
            .diagnostics
            .insert("worst_oracle_gap".into(), json!(worst_gap));
    }
    if !failures.is_empty() {
        report.failure = Some(CliError::Verification(failures.join("; ")));
    }
    Ok(report)
}

fn wavefunction_table(cfg: &RunConfig) -> Result<Report, CliError> {
    let n = cfg.n.start as usize;
    let l = cfg.l.start;
    let sols = family(cfg, n, l)?;
    let sol = sols.get(cfg.branch).ok_or_else(|| {
        CliError::Config(format!(
            "branch {} requested but n={n} l={l} has {} real roots",
            cfg.branch,
            sols.len()
        ))
    })?;
    let sys = sol.system();
    let grid = grid_for(cfg, &sys, sol.epsilon)?;

    let fd = fd_eigensolve(&sys, &grid, n + 3)?;
    let index = (0..fd.energies.len())
        .min_by(|&i, &j| {
            (fd.energies[i] - sol.epsilon)
                .abs()
                .total_cmp(&(fd.energies[j] - sol.epsilon).abs())
        })
        .unwrap_or(0);
    let oracle_energy = fd.energies[index];
    let gap = (oracle_energy - sol.epsilon).abs() / sol.epsilon.abs().max(1.0);

    let radii = grid.interior();
    let poly = normalize(&wavefunction(sol, &radii)?)?;
    let mut table = Table::new(vec![
        "r",
        "radial_polynomial",
        "radial_oracle",
        "difference",
    ]);
    let mut max_diff = 0.0_f64;
    for ((&r, &(_, rp)), &f) in radii.iter().zip(&poly).zip(&fd.vectors[index]) {
        let ro = f / r;
        let diff = rp - ro;
        max_diff = max_diff.max(diff.abs());
        table.push(vec![
            Cell::from(r),
            Cell::from(rp),
            Cell::from(ro),
            Cell::from(diff),
        ]);
    }

    let mut report = Report::new(cfg, table);
    let d = &mut report.diagnostics;
    d.insert("note".into(), json!(BETA_NOTE));
    d.insert("b".into(), json!(sol.b_root));
    d.insert("beta".into(), json!(sol.beta));
    d.insert("epsilon".into(), json!(sol.epsilon));
    d.insert("heun_coefficients".into(), json!(sol.heun_coefficients));
    d.insert("oracle_index".into(), json!(index));
    d.insert("oracle_energy".into(), json!(oracle_energy));
    d.insert("oracle_gap".into(), json!(gap));
    d.insert("oracle_node_count".into(), json!(fd.node_counts[index]));
    d.insert("max_abs_difference".into(), json!(max_diff));
    d.insert("grid".into(), json!(grid));
    if cfg.verify && !(gap <= cfg.tol) {
        report.failure = Some(CliError::Verification(format!(
            "oracle gap {gap:.3e} > {:.1e}",
            cfg.tol
        )));
    }
    Ok(report)
}

fn turning_point_table(cfg: &RunConfig) -> Result<Report, CliError> {
    let (beta, epsilon) = match (cfg.beta, cfg.epsilon) {
        (Some(b), Some(e)) => (b, e),
        _ => {
            return Err(CliError::Config(
                "turning-points needs --beta and --epsilon".into(),
            ))
        }
    };
    let sys = PhysicalSystem::new(cfg.alpha, beta, cfg.k, cfg.l.start)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let tp = turning_points(&sys, epsilon)?;

    // root i shares a row with the i-th symmetric-function residual
    let mut table = Table::new(vec!["index", "re", "im", "real", "vieta_residual"]);
    for (i, z) in tp.roots.iter().enumerate() {
        table.push(vec![
            Cell::from(i),
            Cell::from(z.re),
            Cell::from(z.im),
            Cell::from(i < tp.real_count),
            Cell::from(tp.vieta_residuals[i]),
        ]);
    }
    let worst = tp.vieta_residuals.iter().cloned().fold(0.0, f64::max);

    let mut report = Report::new(cfg, table);
    report
        .diagnostics
        .insert("real_count".into(), json!(tp.real_count));
    report
        .diagnostics
        .insert("outer_turning_point".into(), json!(tp.outer()));
    report
        .diagnostics
        .insert("worst_vieta_residual".into(), json!(worst));
    if cfg.verify && !(worst <= cfg.tol) {
        report.failure = Some(CliError::Verification(format!(
            "Vieta residual {worst:.3e} > {:.1e}",
            cfg.tol
        )));
    }
    Ok(report)
}

fn verify_suite(cfg: &RunConfig) -> Report {
    let reports = run_all();
    let mut table = Table::new(vec!["criterion", "passed", "worst", "tolerance"]);
    let mut details = Map::new();
    for r in &reports {
        table.push(vec![
            Cell::Int(r.id as u64),
            Cell::from(r.passed),
            Cell::from(r.worst),
            Cell::from(r.tolerance),
        ]);
        details.insert(
            r.id.to_string(),
            json!({ "title": r.title, "detail": r.detail }),
        );
    }
    let lines: Vec<String> = reports.iter().map(|r| r.line()).collect();
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.id.to_string())
        .collect();

    let mut report = Report::new(cfg, table);
    report
        .diagnostics
        .insert("criteria".into(), Value::Object(details));
    report.diagnostics.insert("summary".into(), json!(lines));
    if !failed.is_empty() {
        report.failure = Some(CliError::Verification(format!(
            "criteria {} failed",
            failed.join(", ")
        )));
    }
    report
}
