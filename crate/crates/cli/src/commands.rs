//! The four subcommands.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use furry_core::decoupling::{
    projection_series, riesz_projection_series, ContourSpec, DecouplingBundle, ProjectionMethod,
    SpectralFrame,
};
use furry_core::dirac::{
    self, build_channel_grid, c_gamma, check_dgamma_bound, d_gamma, kato_margin,
    schroedinger_s_levels, sommerfeld_energy, system_residuals, ChannelOperators,
    OneParticleSystem,
};
use furry_core::furry::{assemble_furry, convergence_rows, ConvergenceReport, FurrySystem};
use furry_core::linalg::{self, c, CMat, Complex64};
use furry_core::pair::{build_pair_interaction, slater_1s, PairInteraction, RadialGridSpec};
use furry_core::Error as CoreError;

use crate::config::{ConfigError, RunConfig};
use crate::report::{convergence_table, metadata, Cell, ReportError, Table};

/// Unitarity and intertwining residual allowed for `U_γ`.
pub const UNITARITY_TOL: f64 = 1e-10;
/// Relative error of the discrete ground state against the Sommerfeld value.
pub const SOMMERFELD_TOL: f64 = 1e-3;
/// Bound states compared per coupling, lowest first.
pub const SOMMERFELD_LEVELS: usize = 3;
pub const HYDROGEN_TOL: f64 = 1e-4;
pub const SLATER_TOL: f64 = 1e-4;
pub const SLATER_CHARGES: [f64; 3] = [0.1, 0.2, 0.3];
pub const TOY_TOL: f64 = 1e-12;
pub const CONSTANT_TOL: f64 = 1e-5;

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("nothing to do: gamma_list is empty")]
    NothingToDo,
    #[error("validation failed: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

impl CommandError {
    /// 0 ok, 1 validation failure, 2 config error, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Validation(_) => 1,
            CommandError::Config(_) | CommandError::NothingToDo => 2,
            CommandError::Core(CoreError::InvalidInput(_) | CoreError::DimensionCap { .. }) => 2,
            CommandError::Core(_) | CommandError::Report(_) => 3,
        }
    }
}

pub type CommandResult<T> = Result<T, CommandError>;

/// Lowest principal quantum number of the channel.
pub fn lowest_principal(kappa: i32) -> u32 {
    if kappa < 0 {
        kappa.unsigned_abs()
    } else {
        kappa as u32 + 1
    }
}

fn require_gammas(cfg: &RunConfig) -> CommandResult<()> {
    if cfg.gamma_list.is_empty() {
        return Err(CommandError::NothingToDo);
    }
    Ok(())
}

fn channel(cfg: &RunConfig) -> CommandResult<ChannelOperators> {
    let grid = build_channel_grid(cfg.kappa, cfg.n, cfg.map_scale)?;
    Ok(ChannelOperators::new(&grid))
}

/// Rejects tensor spaces over the cap before anything is allocated.
fn check_dimension(cfg: &RunConfig) -> CommandResult<()> {
    let furry = cfg.furry();
    match furry.tensor_dim() {
        Some(dim) if dim <= furry.dim_cap => Ok(()),
        dim => Err(CoreError::DimensionCap {
            dim: dim.unwrap_or(usize::MAX),
            cap: furry.dim_cap,
        }
        .into()),
    }
}

fn gamma_cell(gamma: Option<f64>) -> Cell {
    gamma
        .map(Cell::Real)
        .unwrap_or_else(|| Cell::Text(String::new()))
}

// ---------------------------------------------------------------- validate

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub gamma: Option<f64>,
    pub value: f64,
    pub threshold: f64,
    /// `true`: pass iff `value <= threshold`; `false`: pass iff `value >= threshold`.
    pub upper: bool,
    /// Hard checks decide the exit status; soft ones only warn.
    pub hard: bool,
    pub note: String,
}

impl Check {
    fn at_most(name: &str, gamma: Option<f64>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            gamma,
            value,
            threshold,
            upper: true,
            hard: true,
            note: String::new(),
        }
    }

    fn at_least(name: &str, gamma: Option<f64>, value: f64, threshold: f64) -> Self {
        Self {
            upper: false,
            ..Self::at_most(name, gamma, value, threshold)
        }
    }

    fn soft(mut self) -> Self {
        self.hard = false;
        self
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    fn failed(name: &str, gamma: Option<f64>, err: impl std::fmt::Display) -> Self {
        Self::at_most(name, gamma, f64::NAN, 0.0).note(err.to_string())
    }

    pub fn passed(&self) -> bool {
        match self.upper {
            true => self.value <= self.threshold,
            false => self.value >= self.threshold,
        }
    }

    pub fn describe(&self) -> String {
        let at = self
            .gamma
            .map(|g| format!(" at gamma={g}"))
            .unwrap_or_default();
        let op = if self.upper { "<=" } else { ">=" };
        let mut s = format!(
            "{}{at}: {:.6e} (need {op} {:.3e})",
            self.name, self.value, self.threshold
        );
        if !self.note.is_empty() {
            s.push_str(&format!("; {}", self.note));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| c.hard && !c.passed())
    }

    /// Error naming the first failing hard check.
    pub fn verdict(&self) -> CommandResult<()> {
        match self.first_failure() {
            Some(check) => Err(CommandError::Validation(check.describe())),
            None => Ok(()),
        }
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "check",
            "gamma",
            "value",
            "threshold",
            "comparison",
            "hard",
            "pass",
            "note",
        ]);
        for ch in &self.checks {
            t.push(vec![
                ch.name.as_str().into(),
                gamma_cell(ch.gamma),
                ch.value.into(),
                ch.threshold.into(),
                (if ch.upper { "<=" } else { ">=" }).into(),
                ch.hard.into(),
                ch.passed().into(),
                ch.note.as_str().into(),
            ]);
        }
        t
    }
}

/// Runs every oracle and writes `validation.{csv,json}`; the exit status
/// comes from [`ValidationReport::verdict`].
pub fn cmd_validate(cfg: &RunConfig, out: &Path) -> CommandResult<ValidationReport> {
    let report = validation_checks(cfg)?;
    report
        .table()
        .write(out, "validation", &metadata(cfg, "validate"))?;
    Ok(report)
}

pub fn validation_checks(cfg: &RunConfig) -> CommandResult<ValidationReport> {
    let ops = channel(cfg)?;
    let tol = cfg.tolerances();
    let n_min = lowest_principal(cfg.kappa);
    let mut checks = Vec::new();

    let mut systems = Vec::new();
    for &gamma in &cfg.gamma_list {
        match ops.assemble(gamma) {
            Ok(sys) => systems.push(sys),
            Err(e) => checks.push(Check::failed("assemble", Some(gamma), e)),
        }
    }

    for sys in &systems {
        let g = Some(sys.gamma);
        let positive = sys.positive_eigenvalues();
        for level in 0..SOMMERFELD_LEVELS {
            let name = format!("sommerfeld_level_{}", level + 1);
            let exact = sommerfeld_energy(sys.gamma, n_min + level as u32, cfg.kappa);
            match (exact, positive.get(level)) {
                (Ok(exact), Some(&discrete)) => checks.push(
                    Check::at_most(&name, g, ((discrete - exact) / exact).abs(), SOMMERFELD_TOL).note(format!(
                        "discrete {discrete:.10} vs exact {exact:.10}; grid under-resolved if this fails"
                    )),
                ),
                (Err(e), _) => checks.push(Check::failed(&name, g, e)),
                (_, None) => checks.push(Check::failed(&name, g, "too few positive eigenvalues")),
            }
        }
    }

    let hydrogen_q = 0.5;
    let levels = schroedinger_s_levels(&ops.grid, hydrogen_q);
    for (i, &level) in levels.iter().take(2).enumerate() {
        let n_pr = (i + 1) as f64;
        let exact = -hydrogen_q * hydrogen_q / (2.0 * n_pr * n_pr);
        checks.push(
            Check::at_most(
                &format!("hydrogen_level_{}", i + 1),
                None,
                (level - exact).abs(),
                HYDROGEN_TOL,
            )
            .note(format!("Schroedinger l=0 with charge {hydrogen_q}")),
        );
    }

    let v_norm = linalg::spectral_norm(&ops.v);
    checks.push(Check::at_least(
        "kato",
        None,
        kato_margin(&ops.abs_d0, &ops.v),
        -tol.tol_diag * v_norm,
    ));

    for sys in &systems {
        let g = Some(sys.gamma);
        let res = system_residuals(sys);
        checks.push(Check::at_most("unitarity", g, res.unitarity, UNITARITY_TOL));
        checks.push(Check::at_most(
            "intertwining",
            g,
            res.intertwining,
            UNITARITY_TOL,
        ));
        checks.push(Check::at_least(
            "gap",
            g,
            sys.gap,
            (1.0 - sys.gamma * sys.gamma).sqrt() - tol.tol_gap,
        ));
        match check_dgamma_bound(sys) {
            Ok(margin) => checks.push(Check::at_least("dgamma_bound", g, margin, -tol.tol_diag)),
            Err(e) => checks.push(Check::failed("dgamma_bound", g, e)),
        }
        checks.push(Check::at_most("commutator", g, res.commutator, UNITARITY_TOL).soft());
    }

    match build_pair_interaction(&ops.grid, RadialGridSpec::default()) {
        Ok(pair) => {
            for q in SLATER_CHARGES {
                match slater_1s(&pair, &ops.grid, q) {
                    Ok(j) => checks.push(
                        Check::at_most("slater_1s", None, (j - 5.0 * q / 8.0).abs(), SLATER_TOL)
                            .note(format!("charge {q}")),
                    ),
                    Err(e) => checks.push(Check::failed("slater_1s", None, e)),
                }
            }
        }
        Err(e) => checks.push(Check::failed("slater_1s", None, e)),
    }

    checks.extend(toy_checks(cfg));

    let gc = dirac::GAMMA_CRITICAL;
    checks.push(Check::at_most(
        "c_gamma_critical",
        None,
        (c_gamma(gc)? - 0.52785).abs(),
        CONSTANT_TOL,
    ));
    checks.push(Check::at_most(
        "d_gamma_critical",
        None,
        (d_gamma(gc)? - 0.22724).abs(),
        CONSTANT_TOL,
    ));

    let (unitarity, intertwining) = random_intertwining(cfg.seed);
    checks.push(
        Check::at_most("random_unitarity", None, unitarity, UNITARITY_TOL)
            .note(format!("seed {}", cfg.seed)),
    );
    checks.push(
        Check::at_most("random_intertwining", None, intertwining, UNITARITY_TOL)
            .note(format!("seed {}", cfg.seed)),
    );

    Ok(ValidationReport { checks })
}

/// `D_0 = diag(1, -1)`, `V = σ_x`.
pub fn toy_operators() -> (CMat, CMat) {
    let d0 = linalg::diag(&[1.0, -1.0]);
    let mut v = linalg::zeros(2);
    v[(0, 1)] = c(1.0);
    v[(1, 0)] = c(1.0);
    (d0, v)
}

/// Low-order coefficients against their closed forms and the contour route
/// (configured `m_nodes`, `margin`) against the residue route.
fn toy_checks(cfg: &RunConfig) -> Vec<Check> {
    let (d0, v) = toy_operators();
    let frame = SpectralFrame::from_hermitian(&d0);
    let mut checks = Vec::new();
    let residue = match projection_series(&frame, &v, cfg.series_order.max(2)) {
        Ok(p) => p,
        Err(e) => return vec![Check::failed("toy_coefficients", None, e)],
    };
    checks.push(Check::at_most(
        "toy_p1",
        None,
        (residue.coeff(1) - &v * c(0.5)).camax(),
        TOY_TOL,
    ));
    checks.push(Check::at_most(
        "toy_p2",
        None,
        (residue.coeff(2) + &d0 * c(0.25)).camax(),
        TOY_TOL,
    ));
    let contour = ContourSpec::enclosing_positive(&frame.eigenvalues, cfg.margin, cfg.m_nodes)
        .and_then(|spec| riesz_projection_series(&frame, &v, &spec, residue.order()));
    match contour.and_then(|p| p.max_abs_diff(&residue)) {
        Ok(diff) => checks.push(
            Check::at_most("toy_contour_vs_residue", None, diff, UNITARITY_TOL)
                .note(format!("m_nodes {} margin {}", cfg.m_nodes, cfg.margin)),
        ),
        Err(e) => checks.push(Check::failed("toy_contour_vs_residue", None, e)),
    }
    checks
}

/// `U_γ` of a random gapped Hermitian pair; returns (unitarity, intertwining).
pub fn random_intertwining(seed: u64) -> (f64, f64) {
    let dim = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d0 = linalg::diag(
        &(0..dim)
            .map(|i| {
                if i % 2 == 0 {
                    1.0 + i as f64
                } else {
                    -1.0 - i as f64
                }
            })
            .collect::<Vec<_>>(),
    );
    let mut v = CMat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..=i {
            let re: f64 = rng.gen_range(-1.0..1.0);
            let im: f64 = if i == j {
                0.0
            } else {
                rng.gen_range(-1.0..1.0)
            };
            v[(i, j)] = Complex64::new(re, im);
            v[(j, i)] = Complex64::new(re, -im);
        }
    }
    let projector = |m: &CMat| {
        let eig = linalg::HermitianEigen::new(m);
        let pos = eig.select(|_, x| x > 0.0);
        linalg::matmul(&pos, &pos.adjoint())
    };
    let p0 = projector(&d0);
    let pg = projector(&(&d0 + &v * c(0.3)));
    let u = match dirac::exact_u_gamma(&p0, &pg) {
        Ok(u) => u,
        Err(_) => return (f64::INFINITY, f64::INFINITY),
    };
    let unitarity =
        linalg::spectral_norm(&(linalg::matmul(&u, &u.adjoint()) - linalg::identity(dim)));
    let intertwining = linalg::spectral_norm(&(linalg::matmul(&u, &pg) - linalg::matmul(&p0, &u)));
    (unitarity, intertwining)
}

// ------------------------------------------------------------ one-particle

#[derive(Debug, Clone)]
pub struct OneParticleRow {
    pub gamma: f64,
    pub ground_state: f64,
    pub sommerfeld: f64,
    pub relative_error: f64,
    pub gap: f64,
    pub unitarity: f64,
    pub intertwining: f64,
    pub projector_distance: f64,
    pub commutator: f64,
    pub kato_margin: f64,
    pub dgamma_margin: f64,
    pub c_gamma: f64,
    pub d_gamma: f64,
}

fn one_particle_row(
    sys: &OneParticleSystem,
    kappa: i32,
    kato: f64,
) -> CommandResult<OneParticleRow> {
    let res = system_residuals(sys);
    let ground = sys.positive_eigenvalues()[0];
    let exact = sommerfeld_energy(sys.gamma, lowest_principal(kappa), kappa)?;
    Ok(OneParticleRow {
        gamma: sys.gamma,
        ground_state: ground,
        sommerfeld: exact,
        relative_error: ((ground - exact) / exact).abs(),
        gap: sys.gap,
        unitarity: res.unitarity,
        intertwining: res.intertwining,
        projector_distance: res.projector_distance,
        commutator: res.commutator,
        kato_margin: kato,
        dgamma_margin: check_dgamma_bound(sys)?,
        c_gamma: c_gamma(sys.gamma)?,
        d_gamma: d_gamma(sys.gamma)?,
    })
}

/// Summary per coupling plus one full spectrum table per coupling
/// (`spectrum_<i>.csv`, `i` the position in `gamma_list`).
pub fn cmd_one_particle(cfg: &RunConfig, out: &Path) -> CommandResult<Vec<OneParticleRow>> {
    require_gammas(cfg)?;
    let ops = channel(cfg)?;
    let kato = kato_margin(&ops.abs_d0, &ops.v);
    let meta = metadata(cfg, "one-particle");
    let mut rows = Vec::new();
    let mut summary = Table::new(&[
        "gamma",
        "ground_state",
        "sommerfeld",
        "relative_error",
        "gap",
        "unitarity",
        "intertwining",
        "projector_distance",
        "commutator",
        "kato_margin",
        "dgamma_margin",
        "c_gamma",
        "d_gamma",
    ]);
    for (i, &gamma) in cfg.gamma_list.iter().enumerate() {
        let sys = ops.assemble(gamma)?;
        let row = one_particle_row(&sys, cfg.kappa, kato)?;
        summary.push(vec![
            row.gamma.into(),
            row.ground_state.into(),
            row.sommerfeld.into(),
            row.relative_error.into(),
            row.gap.into(),
            row.unitarity.into(),
            row.intertwining.into(),
            row.projector_distance.into(),
            row.commutator.into(),
            row.kato_margin.into(),
            row.dgamma_margin.into(),
            row.c_gamma.into(),
            row.d_gamma.into(),
        ]);
        let mut spectrum = Table::new(&["gamma", "index", "eigenvalue"]);
        for (j, &x) in sys.spectrum.values.iter().enumerate() {
            spectrum.push(vec![gamma.into(), j.into(), x.into()]);
        }
        spectrum.write(out, &format!("spectrum_{i}"), &meta)?;
        rows.push(row);
    }
    summary.write(out, "one_particle", &meta)?;
    Ok(rows)
}

// ---------------------------------------------------------------- converge

/// Grid-level objects shared by the N-particle commands.
pub struct Shared {
    pub ops: ChannelOperators,
    pub bundle: DecouplingBundle,
    pub pair: PairInteraction,
}

pub fn shared(cfg: &RunConfig) -> CommandResult<Shared> {
    let ops = channel(cfg)?;
    let bundle = DecouplingBundle::build(&ops, ProjectionMethod::Residue, cfg.series_order)?;
    let pair = build_pair_interaction(&ops.grid, RadialGridSpec::default())?;
    Ok(Shared { ops, bundle, pair })
}

#[derive(Debug, Clone)]
pub struct ConvergeOutput {
    pub reports: Vec<ConvergenceReport>,
    pub warnings: Vec<String>,
}

/// Convergence tables for `N = 1` and, when configured, `N = n_particles`
/// (`converge_n<N>.{csv,json}`).
pub fn cmd_converge(cfg: &RunConfig, out: &Path) -> CommandResult<ConvergeOutput> {
    require_gammas(cfg)?;
    check_dimension(cfg)?;
    let shared = shared(cfg)?;
    let mut counts = vec![1];
    if cfg.n_particles > 1 {
        counts.push(cfg.n_particles);
    }
    let mut gammas = cfg.gamma_list.clone();
    gammas.sort_by(f64::total_cmp);
    gammas.dedup();

    let mut reports = Vec::new();
    let mut warnings = Vec::new();
    for n_particles in counts {
        let furry = furry_core::furry::FurryConfig {
            n_particles,
            ..cfg.furry()
        };
        let mut rows = Vec::new();
        let mut per_gamma = Vec::new();
        for &gamma in &gammas {
            let sys = shared.ops.assemble(gamma)?;
            let fs = assemble_furry(&sys, &shared.bundle, &shared.pair, &furry)?;
            if fs.series_truncated {
                warnings.push(format!(
                    "N={n_particles} gamma={gamma}: interaction series truncated at order {}",
                    cfg.series_order
                ));
            }
            let block = convergence_rows(&fs, cfg.series_order)?;
            let ratio = block.first().map(|r| r.fitted_ratio).unwrap_or(0.0);
            per_gamma.push(serde_json::json!({
                "gamma": gamma,
                "series_truncated": fs.series_truncated,
                "implied_radius": if ratio > 0.0 { gamma / ratio } else { f64::INFINITY }.to_string(),
            }));
            rows.extend(block);
        }
        let report = ConvergenceReport {
            n_particles,
            n_plus: cfg.n_plus,
            rows,
        };
        let mut meta = metadata(cfg, "converge");
        meta["n_particles"] = n_particles.into();
        meta["series_order"] = cfg.series_order.into();
        meta["per_gamma"] = per_gamma.into();
        convergence_table(&report).write(out, &format!("converge_n{n_particles}"), &meta)?;
        reports.push(report);
    }
    Ok(ConvergeOutput { reports, warnings })
}

// ------------------------------------------------------------------- nbody

#[derive(Debug, Clone)]
pub struct NbodyDiagnostics {
    pub gamma: f64,
    pub dim: usize,
    pub unitary_equivalence: f64,
    pub permutation: f64,
    pub positivity_margin: f64,
    pub form_bound: f64,
    pub form_bound_limit: f64,
    pub kinetic_weight: f64,
    pub kinetic_weight_limit: f64,
    pub series_hermiticity: f64,
    pub basis_off_block: f64,
    pub series_truncated: bool,
}

#[derive(Debug, Clone)]
pub struct NbodyOutput {
    pub diagnostics: Vec<NbodyDiagnostics>,
    /// Exact Furry spectrum per coupling.
    pub spectra: Vec<Vec<f64>>,
    /// Lowest eigenvalue of the order-`k` truncation, per coupling.
    pub series_lowest: Vec<Vec<f64>>,
}

fn diagnostics(fs: &FurrySystem) -> CommandResult<NbodyDiagnostics> {
    let form_bound = match fs.config.n_particles {
        1 => 0.0,
        _ => fs.check_form_bound()?,
    };
    Ok(NbodyDiagnostics {
        gamma: fs.gamma(),
        dim: fs.dim(),
        unitary_equivalence: fs.unitary_equivalence_residual(),
        permutation: fs.permutation_residual(),
        positivity_margin: fs.positivity_margin(),
        form_bound,
        form_bound_limit: fs.form_bound_constant()?,
        kinetic_weight: fs.check_kinetic_weight_bound()?,
        kinetic_weight_limit: 1.0 / d_gamma(fs.gamma())?,
        series_hermiticity: fs.series_hermiticity(),
        basis_off_block: fs.basis_off_block(),
        series_truncated: fs.series_truncated,
    })
}

/// Exact spectra (`nbody_spectrum_<i>`), lowest eigenvalue of every
/// truncation (`nbody_series_<i>`), inequality diagnostics (`nbody`) and the
/// radial round trip of every retained state (`nbody_roundtrip`).
pub fn cmd_nbody(cfg: &RunConfig, out: &Path) -> CommandResult<NbodyOutput> {
    require_gammas(cfg)?;
    check_dimension(cfg)?;
    let shared = shared(cfg)?;
    let furry = cfg.furry();
    let meta = metadata(cfg, "nbody");
    let mut output = NbodyOutput {
        diagnostics: Vec::new(),
        spectra: Vec::new(),
        series_lowest: Vec::new(),
    };
    let mut diag_table = Table::new(&[
        "gamma",
        "dim",
        "unitary_equivalence",
        "permutation",
        "positivity_margin",
        "form_bound",
        "form_bound_limit",
        "kinetic_weight",
        "kinetic_weight_limit",
        "series_hermiticity",
        "basis_off_block",
        "series_truncated",
    ]);
    let mut roundtrip = Table::new(&["gamma", "state", "energy", "roundtrip_error"]);
    for (i, &gamma) in cfg.gamma_list.iter().enumerate() {
        let sys = shared.ops.assemble(gamma)?;
        let fs = assemble_furry(&sys, &shared.bundle, &shared.pair, &furry)?;
        let d = diagnostics(&fs)?;
        diag_table.push(vec![
            d.gamma.into(),
            d.dim.into(),
            d.unitary_equivalence.into(),
            d.permutation.into(),
            d.positivity_margin.into(),
            d.form_bound.into(),
            d.form_bound_limit.into(),
            d.kinetic_weight.into(),
            d.kinetic_weight_limit.into(),
            d.series_hermiticity.into(),
            d.basis_off_block.into(),
            d.series_truncated.into(),
        ]);

        let exact = linalg::hermitian_eigenvalues(&fs.h_furry_exact);
        let diag = linalg::hermitian_eigenvalues(&fs.h_diag_exact);
        let mut spectrum = Table::new(&["gamma", "index", "furry", "block_diagonal"]);
        for (j, (a, b)) in exact.iter().zip(&diag).enumerate() {
            spectrum.push(vec![gamma.into(), j.into(), (*a).into(), (*b).into()]);
        }
        spectrum.write(out, &format!("nbody_spectrum_{i}"), &meta)?;

        let lowest: Vec<f64> = (0..=cfg.series_order)
            .map(|k| {
                linalg::lambda_min(&linalg::hermitian_part(
                    &fs.h_diag_series.partial_sum(gamma, k),
                ))
            })
            .collect();
        let mut series = Table::new(&["gamma", "k", "lowest_eigenvalue", "error"]);
        for (k, &x) in lowest.iter().enumerate() {
            series.push(vec![
                gamma.into(),
                k.into(),
                x.into(),
                (x - diag[0]).abs().into(),
            ]);
        }
        series.write(out, &format!("nbody_series_{i}"), &meta)?;

        for (j, &energy) in fs.basis.energies.iter().enumerate() {
            let column = fs.basis.states.columns(j, 1).into_owned();
            let err = shared.pair.roundtrip_error(&column)?;
            roundtrip.push(vec![gamma.into(), j.into(), energy.into(), err.into()]);
        }

        output.diagnostics.push(d);
        output.spectra.push(exact);
        output.series_lowest.push(lowest);
    }
    diag_table.write(out, "nbody", &meta)?;
    roundtrip.write(out, "nbody_roundtrip", &meta)?;
    Ok(output)
}
