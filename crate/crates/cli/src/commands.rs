use std::f64::consts::PI;
use std::path::PathBuf;

use birkhoff::analysis::{
    almost_orthogonality_ratio, eigen_groups, expansion_experiment, projector, projector_norm_scaling, projectors, ExpansionOptions,
    OrthogonalityRatio, ProjectorRecord, ScalingReport,
};
use birkhoff::config::Defaults;
use birkhoff::greens::{verify_limit, ConvergenceReport, GreenKernel};
use birkhoff::model::{parse_spec, BvpDocument, Coefficient};
use birkhoff::problem::Problem;
use birkhoff::regularity::{plucker, plucker_relation, RegularityClass};
use birkhoff::spectrum::{bisector_point, find_cvs, sparseness_audit, CharacteristicValue, SearchRegion, SectorGeometry, SparsenessReport, Spectrum};
use birkhoff::{BvpError, Complex64};
use serde::Serialize;

use crate::output::{self, num, Format, Rendered};
use crate::{Cli, Command, Failure, InputFunction, SpecArg};

/// Options shared by every subcommand after validation.
struct RunConfig {
    defaults: Defaults,
    seed: u64,
    epsilon: f64,
    delta: f64,
}

impl RunConfig {
    fn new(cli: &Cli, n: usize) -> Result<Self, Failure> {
        let mut defaults = Defaults::default();
        if let Some(t) = cli.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Failure::Usage(format!("--tol must be positive, got {t}")));
            }
            defaults.merge_tol = t;
        }
        let epsilon = cli.epsilon.unwrap_or_else(|| defaults.epsilon(n));
        if !(epsilon > 0.0 && epsilon < PI / (2.0 * n as f64)) {
            return Err(Failure::Usage(format!("--epsilon must lie in (0, pi/(2n)) = (0, {:.6}), got {epsilon}", PI / (2.0 * n as f64))));
        }
        let delta = cli.delta.unwrap_or(defaults.delta);
        if !(delta > 0.0 && delta < 1.0 / 3.0) {
            return Err(Failure::Usage(format!("--delta must lie in (0, 1/3), got {delta}")));
        }
        Ok(RunConfig {
            seed: cli.seed.unwrap_or(defaults.seed),
            defaults,
            epsilon,
            delta,
        })
    }
}

fn load(cli: &Cli, arg: &SpecArg) -> Result<Problem, Failure> {
    let path: &PathBuf = arg
        .path
        .as_ref()
        .or(cli.spec.as_ref())
        .ok_or_else(|| Failure::Usage("no problem document given (pass SPEC or --spec)".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Spec(format!("{}: {e}", path.display())))?;
    let spec = parse_spec(&text).map_err(|e| Failure::Spec(format!("{}: {e}", path.display())))?;
    Ok(Problem::new(spec)?)
}

fn region(r_min: f64, r_max: f64, sectors: Vec<u8>) -> Result<SearchRegion, Failure> {
    if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
        return Err(Failure::Usage(format!("need 0 < rmin < rmax, got [{r_min}, {r_max}]")));
    }
    Ok(SearchRegion { r_min, r_max, sectors })
}

/// Sector `S_nu` holding `rho`, taken modulo the period `2 pi / n`.
fn sector_of(rho: Complex64, n: usize) -> u8 {
    let period = 2.0 * PI / n as f64;
    if rho.arg().rem_euclid(period) < PI / n as f64 {
        0
    } else {
        1
    }
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let command = cli
        .command
        .as_ref()
        .ok_or_else(|| Failure::Usage("no subcommand given; see --help".into()))?;
    let rendered = match command {
        Command::Classify { spec } => {
            let p = load(cli, spec)?;
            classify(&p, cli.format.unwrap_or(Format::Json))?
        }
        Command::Spectrum { spec, rmin, rmax, sector } => {
            let p = load(cli, spec)?;
            let cfg = RunConfig::new(cli, p.order())?;
            let s = find_cvs(&p, &region(*rmin, *rmax, sector.sectors())?, &cfg.defaults.root_options())?;
            spectrum(&s, cli.format.unwrap_or(Format::Json))?
        }
        Command::Green { spec, rho, grid } => {
            let p = load(cli, spec)?;
            green(&p, *rho, *grid, cli.format.unwrap_or(Format::Csv))?
        }
        Command::McmLimit { spec, sector, rmin, rmax, points } => {
            let p = load(cli, spec)?;
            mcm_limit(&p, sector.sectors(), *rmin, *rmax, *points, cli.format.unwrap_or(Format::Json))?
        }
        Command::Projectors { spec, rmax, group_tol } => {
            let p = load(cli, spec)?;
            let cfg = RunConfig::new(cli, p.order())?;
            let s = find_cvs(&p, &region(0.5, *rmax, vec![0, 1])?, &cfg.defaults.root_options())?;
            let recs = projectors(&p, &s.cvs, *group_tol, &cfg.defaults.projector_options())?;
            projector_table(&recs, cli.format.unwrap_or(Format::Json))?
        }
        Command::Expand {
            spec,
            input_function,
            values,
            ks,
            paired,
            partial_sums,
            rmax,
        } => {
            let p = load(cli, spec)?;
            let cfg = RunConfig::new(cli, p.order())?;
            let f = input(*input_function, values)?;
            let s = find_cvs(&p, &region(0.5, *rmax, vec![0, 1])?, &cfg.defaults.root_options())?;
            let opts = ExpansionOptions {
                ks: ks.clone(),
                paired: *paired,
                partial_sums: *partial_sums,
                projector: cfg.defaults.projector_options(),
                ..Default::default()
            };
            let rep = expansion_experiment(&p, &s.cvs, &|x| f.eval(x), &opts)?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Json => output::json(&rep)?,
                Format::Csv => output::csv(
                    &["k", "paired", "gram_condition", "partial_sum_error"],
                    rep.rows.iter().map(|r| {
                        vec![
                            r.k.to_string(),
                            rep.paired.to_string(),
                            num(r.gram_condition),
                            r.partial_sum_error.map(num).unwrap_or_default(),
                        ]
                    }),
                )?,
            }
        }
        Command::Report { spec, rmax, projectors } => {
            let p = load(cli, spec)?;
            let cfg = RunConfig::new(cli, p.order())?;
            if cli.format == Some(Format::Csv) {
                return Err(Failure::Usage("report is only available as JSON".into()));
            }
            output::json(&report(&p, &cfg, *rmax, *projectors)?)?
        }
    };
    output::emit(cli.out.as_deref(), rendered)
}

fn input(kind: InputFunction, values: &str) -> Result<Coefficient, Failure> {
    let pairs: Vec<[f64; 2]> = serde_json::from_str(values).map_err(|e| Failure::Usage(format!("--values: {e}")))?;
    let v: Vec<Complex64> = pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect();
    match kind {
        InputFunction::Poly => Ok(Coefficient::Poly(v)),
        InputFunction::Samples if v.len() >= 2 => Ok(Coefficient::Samples(v)),
        InputFunction::Samples => Err(Failure::Usage("--values: samples need at least two values".into())),
    }
}

#[derive(Debug, Serialize)]
struct PluckerCheck {
    coordinates: [Complex64; 6],
    relation: Complex64,
}

#[derive(Debug, Serialize)]
struct Classification {
    label: String,
    order: usize,
    class: RegularityClass,
    theta: [Complex64; 2],
    f_coeffs: Option<[Complex64; 3]>,
    f_roots: Vec<Complex64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    plucker: Option<PluckerCheck>,
}

fn classification(p: &Problem) -> Classification {
    let r = p.regularity();
    let plucker = plucker(&p.spec().boundary).ok().map(|c| PluckerCheck {
        relation: plucker_relation(&c),
        coordinates: c,
    });
    Classification {
        label: p.label().to_string(),
        order: p.order(),
        class: r.klass,
        theta: [r.theta0, r.theta1],
        f_coeffs: r.f_coeffs,
        f_roots: r.f_roots.clone(),
        plucker,
    }
}

fn classify(p: &Problem, format: Format) -> Result<Rendered, Failure> {
    let c = classification(p);
    match format {
        Format::Json => output::json(&c),
        Format::Csv => output::csv(
            &["label", "order", "class", "theta0_re", "theta0_im", "theta1_re", "theta1_im"],
            [vec![
                c.label.clone(),
                c.order.to_string(),
                c.class.short().to_string(),
                num(c.theta[0].re),
                num(c.theta[0].im),
                num(c.theta[1].re),
                num(c.theta[1].im),
            ]],
        ),
    }
}

fn cv_row(v: &CharacteristicValue) -> Vec<String> {
    vec![
        num(v.rho.re),
        num(v.rho.im),
        num(v.lambda.re),
        num(v.lambda.im),
        v.multiplicity.to_string(),
        num(v.residual),
        v.sector.to_string(),
    ]
}

fn spectrum(s: &Spectrum, format: Format) -> Result<Rendered, Failure> {
    match format {
        Format::Json => output::json(s),
        Format::Csv => output::csv(
            &["rho_re", "rho_im", "lambda_re", "lambda_im", "multiplicity", "residual", "sector"],
            s.cvs.iter().map(cv_row),
        ),
    }
}

#[derive(Debug, Serialize)]
struct GreenGrid {
    rho: Complex64,
    sector: u8,
    grid: Vec<f64>,
    /// `values[i][j] = G(grid[i], grid[j])`
    values: Vec<Vec<Complex64>>,
}

fn green(p: &Problem, rho: Complex64, m: usize, format: Format) -> Result<Rendered, Failure> {
    if m < 2 {
        return Err(Failure::Usage(format!("--grid must be at least 2, got {m}")));
    }
    let nu = sector_of(rho, p.order());
    let k = GreenKernel::new(p, rho, nu)?;
    let grid: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
    let values = grid
        .iter()
        .map(|&x| grid.iter().map(|&xi| k.eval(x, xi)).collect::<birkhoff::Result<Vec<_>>>())
        .collect::<birkhoff::Result<Vec<_>>>()?;
    match format {
        Format::Json => output::json(&GreenGrid { rho, sector: nu, grid, values }),
        Format::Csv => {
            let mut rows = Vec::with_capacity(m * m);
            for (i, &x) in grid.iter().enumerate() {
                for (j, &xi) in grid.iter().enumerate() {
                    rows.push(vec![num(x), num(xi), num(values[i][j].re), num(values[i][j].im)]);
                }
            }
            output::csv(&["x", "xi", "re", "im"], rows)
        }
    }
}

/// `count` points on the bisector of `S_nu`, geometrically spaced in `[r_min, r_max]`.
fn bisector_sweep(n: usize, nu: u8, r_min: f64, r_max: f64, count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|i| {
            let t = if count == 1 { 0.0 } else { i as f64 / (count - 1) as f64 };
            bisector_point(n, nu, r_min * (r_max / r_min).powf(t))
        })
        .collect()
}

fn mcm_limit(p: &Problem, sectors: Vec<u8>, r_min: f64, r_max: f64, points: usize, format: Format) -> Result<Rendered, Failure> {
    if !(r_min > 0.0 && r_max > r_min) || points < 2 {
        return Err(Failure::Usage("need 0 < rmin < rmax and at least two points".into()));
    }
    let reports = sectors
        .iter()
        .map(|&nu| verify_limit(p, nu, &bisector_sweep(p.order(), nu, r_min, r_max, points)))
        .collect::<birkhoff::Result<Vec<ConvergenceReport>>>()?;
    match format {
        Format::Json if reports.len() == 1 => output::json(&reports[0]),
        Format::Json => output::json(&reports),
        Format::Csv => output::csv(
            &["sector", "rho_re", "rho_im", "mcm_error", "char_error", "mcm_frobenius", "min_sv_mcm", "min_sv_char"],
            reports.iter().flat_map(|r| {
                r.rows.iter().map(move |row| {
                    vec![
                        r.nu.to_string(),
                        num(row.rho[0]),
                        num(row.rho[1]),
                        num(row.mcm_error),
                        num(row.char_error),
                        num(row.mcm_frobenius),
                        num(row.min_sv_mcm),
                        num(row.min_sv_char),
                    ]
                })
            }),
        ),
    }
}

fn projector_table(recs: &[ProjectorRecord], format: Format) -> Result<Rendered, Failure> {
    match format {
        Format::Json => output::json(&recs),
        Format::Csv => output::csv(
            &["m", "lambda_re", "lambda_im", "rho_re", "rho_im", "radius", "rank", "norm", "ratio", "idempotency"],
            recs.iter().map(|r| {
                vec![
                    r.m.to_string(),
                    num(r.lambda_m.re),
                    num(r.lambda_m.im),
                    num(r.rho_m.re),
                    num(r.rho_m.im),
                    num(r.radius),
                    r.rank.to_string(),
                    num(r.norm),
                    num(r.ratio),
                    num(r.idempotency),
                ]
            }),
        ),
    }
}

/// A report section that may not apply to the problem at hand.
#[derive(Debug, Serialize)]
struct Section<T> {
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    skipped: Option<String>,
}

impl<T> Section<T> {
    fn ok(v: T) -> Self {
        Section { value: Some(v), skipped: None }
    }

    fn skipped(why: String) -> Self {
        Section { value: None, skipped: Some(why) }
    }
}

#[derive(Debug, Serialize)]
struct SpectrumSummary {
    r_min: f64,
    r_max: f64,
    count: usize,
    total_multiplicity: usize,
    max_residual: f64,
    multiple: Vec<CharacteristicValue>,
    cvs: Vec<CharacteristicValue>,
}

#[derive(Debug, Serialize)]
struct ScalingSection {
    records: Vec<ProjectorRecord>,
    scaling: Section<ScalingReport>,
}

#[derive(Debug, Serialize)]
struct Report {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    epsilon: f64,
    delta: f64,
    spec: BvpDocument,
    regularity: Classification,
    spectrum: SpectrumSummary,
    convergence: Section<ConvergenceReport>,
    sparseness: Vec<SparsenessReport>,
    orthogonality: Vec<OrthogonalityRatio>,
    projectors: ScalingSection,
}

fn report(p: &Problem, cfg: &RunConfig, r_max: f64, max_groups: usize) -> Result<Report, Failure> {
    let n = p.order();
    let s = find_cvs(p, &region(0.5, r_max, vec![0, 1])?, &cfg.defaults.root_options())?;
    let rhos: Vec<Complex64> = s.cvs.iter().map(|v| v.rho).collect();

    let convergence = match verify_limit(p, 0, &bisector_sweep(n, 0, 20.0, 200.0, 6)) {
        Ok(r) => Section::ok(r),
        Err(e @ BvpError::IrregularLimit) => Section::skipped(e.to_string()),
        Err(e) => return Err(e.into()),
    };

    let sparseness = (0..=1u8)
        .map(|nu| SectorGeometry::new(n, nu, cfg.epsilon, cfg.delta).map(|g| sparseness_audit(&rhos, &g, cfg.defaults.merge_tol)))
        .collect::<birkhoff::Result<Vec<_>>>()?;

    let orthogonality = [10.0, 30.0, 100.0]
        .iter()
        .map(|&r| {
            p.fss(bisector_point(n, 0, r), 0)
                .map(|fs| almost_orthogonality_ratio(&fs, cfg.defaults.orthogonality_trials, cfg.seed))
        })
        .collect::<birkhoff::Result<Vec<_>>>()?;

    let groups = eigen_groups(&s.cvs, 1.5);
    let records = groups
        .iter()
        .take(max_groups)
        .enumerate()
        .map(|(m, g)| projector(p, &s.cvs, g, m + 1, &cfg.defaults.projector_options()).map(|r| r.0))
        .collect::<birkhoff::Result<Vec<_>>>()?;
    let scaling = match projector_norm_scaling(&records) {
        _ if records.is_empty() => Section::skipped("no characteristic values in the searched annulus".into()),
        Ok(r) => Section::ok(r),
        Err(e @ BvpError::MultipleEigenvalue(_)) => Section::skipped(e.to_string()),
        Err(e) => return Err(e.into()),
    };

    Ok(Report {
        tool: "birkhoff",
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        epsilon: cfg.epsilon,
        delta: cfg.delta,
        spec: p.spec().to_document(),
        regularity: classification(p),
        spectrum: SpectrumSummary {
            r_min: s.region.r_min,
            r_max: s.region.r_max,
            count: s.cvs.len(),
            total_multiplicity: s.total_multiplicity(),
            max_residual: s.max_residual,
            multiple: s.cvs.iter().filter(|v| v.multiplicity > 1).copied().collect(),
            cvs: s.cvs.clone(),
        },
        convergence,
        sparseness,
        orthogonality,
        projectors: ScalingSection { records, scaling },
    })
}
