use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::champagne::ShellConfig;
use crate::criteria::{
    aikawa_sum, aikawa_wiener_ratio, classify_avoidability, empirical_constants, thm2_integral, wiener_dyadic_sum,
    AggregateVerdict, AikawaSum, BoundaryGrid, DyadicSum, EmpiricalConstants, Thm2Result, VerdictTag,
};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::simulate::{summarize, HitEstimate, OutcomeTag, Simulator};
use crate::whitney::{LevelCount, SandwichReport, WhitneyDecomposition};

use super::config::RunConfig;
use super::manifest::RunManifest;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

pub const BUBBLES_FILE: &str = "bubbles.csv";

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn prepare(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct GenerateSummary {
    pub bubbles: usize,
    pub shells: usize,
    pub ratio_sup: f64,
}

fn write_shells_csv(sc: &ShellConfig, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["shell", "t", "radius", "count"])?;
    for (i, (t, r)) in sc.t.iter().zip(&sc.ranges).enumerate() {
        let radius = sc.config.bubbles().get(r.start).map_or(f64::NAN, |b| b.radius);
        w.write_record([
            (i + 1).to_string(),
            format!("{t:?}"),
            format!("{radius:?}"),
            r.len().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `bubbles.csv`, `shells.csv` and the `generate` manifest section.
pub fn cmd_generate(cfg: &RunConfig, out: &Path) -> Result<GenerateSummary> {
    prepare(out)?;
    let sc = cfg.generate_shells()?;
    let mut w = create(&out.join(BUBBLES_FILE))?;
    sc.config.write_csv(&mut w)?;
    w.flush()?;
    write_shells_csv(&sc, &out.join("shells.csv"))?;
    let summary = GenerateSummary {
        bubbles: sc.config.len(),
        shells: sc.t.len(),
        ratio_sup: sc.config.ratio_sup(),
    };
    let mut m = RunManifest::open(out, cfg);
    m.set_section("generate", &summary)?;
    m.write(out)?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct WhitneySummary {
    pub max_level: i32,
    pub cubes: usize,
    pub coverage_threshold: f64,
    pub sandwich: SandwichReport,
    pub sandwich_passed: bool,
    pub levels: Vec<LevelCount>,
}

fn whitney_summary(dec: &WhitneyDecomposition) -> WhitneySummary {
    let sandwich = dec.check_sandwich();
    WhitneySummary {
        max_level: dec.max_level(),
        cubes: dec.len(),
        coverage_threshold: dec.coverage_threshold(),
        sandwich_passed: sandwich.passed(),
        sandwich,
        levels: dec.level_counts(),
    }
}

pub fn cmd_whitney(cfg: &RunConfig, out: &Path) -> Result<WhitneySummary> {
    prepare(out)?;
    let crit = cfg.require_criteria()?;
    let dec = WhitneyDecomposition::decompose(&cfg.build_domain()?, crit.max_level)?;
    let mut w = create(&out.join("whitney.csv"))?;
    dec.write_csv(&mut w)?;
    w.flush()?;
    let summary = whitney_summary(&dec);
    let mut m = RunManifest::open(out, cfg);
    m.set_section("whitney", &summary)?;
    m.write(out)?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct PointSummary {
    pub index: usize,
    pub z: Point,
    pub weight: f64,
    pub tag: VerdictTag,
    pub series_total: f64,
    pub shell_ratio_range: Option<(f64, f64)>,
    pub evidence: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriteriaReport {
    pub aggregate: AggregateVerdict,
    pub separation: f64,
    pub notes: Vec<String>,
    pub tail_model: Option<String>,
    pub points: Vec<PointSummary>,
    pub thm2: Option<Thm2Result>,
    pub trace_point: Point,
    pub aikawa: AikawaSum,
    pub wiener: DyadicSum,
    pub aikawa_wiener_ratio: f64,
    pub empirical_constants: EmpiricalConstants,
    pub whitney: WhitneySummary,
}

#[derive(Clone, Debug, Serialize)]
struct CriteriaSection<'a> {
    aggregate: AggregateVerdict,
    separation: f64,
    grid_points: usize,
    bubbles: usize,
    thm2_verdict: Option<VerdictTag>,
    empirical_constants: &'a EmpiricalConstants,
    aikawa_wiener_ratio: f64,
    whitney_cubes: usize,
}

pub fn cmd_criteria(cfg: &RunConfig, out: &Path, format: OutputFormat) -> Result<CriteriaReport> {
    prepare(out)?;
    let crit = cfg.require_criteria()?;
    let config = cfg.bubbles()?;
    let domain = config.domain().clone();
    let consts = &cfg.constants;
    let grid = BoundaryGrid::new(&domain, crit.grid_points)?;
    let tail = cfg.tail_model();
    let class = classify_avoidability(&config, consts, &grid, tail.as_ref())?;
    let thm2 = match (cfg.profile, tail.is_some()) {
        (Some(phi), true) => Some(thm2_integral(&phi, &cfg.weight, domain.dim(), consts.alpha, crit.t0)?),
        _ => None,
    };
    let dec = WhitneyDecomposition::decompose(&domain, crit.max_level)?;
    let z0 = grid.points[0].clone();
    let aikawa = aikawa_sum(&dec, &config, &z0, consts)?;
    let wiener = wiener_dyadic_sum(&dec, &config, &z0, consts, crit.n_max)?;
    let empirical = empirical_constants(&dec, &config, &z0, consts)?;

    let mut w = csv::Writer::from_writer(create(&out.join("shell_sums.csv"))?);
    w.write_record(["z_index", "shell", "sum"])?;
    for p in &class.points {
        for (i, s) in p.shell_sums.iter().enumerate() {
            w.write_record([p.index.to_string(), (i + 1).to_string(), format!("{s:?}")])?;
        }
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(create(&out.join("aikawa_levels.csv"))?);
    w.write_record(["level", "lower", "upper", "cumulative_lower", "cumulative_upper"])?;
    for l in &aikawa.levels {
        w.write_record([
            l.level.to_string(),
            format!("{:?}", l.contribution.lower),
            format!("{:?}", l.contribution.upper),
            format!("{:?}", l.cumulative.lower),
            format!("{:?}", l.cumulative.upper),
        ])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(create(&out.join("wiener_shells.csv"))?);
    w.write_record(["n", "bubbles", "truncated", "lower", "upper", "cumulative_lower", "cumulative_upper"])?;
    for s in &wiener.shells {
        w.write_record([
            s.n.to_string(),
            s.bubbles.to_string(),
            s.truncated.to_string(),
            format!("{:?}", s.contribution.lower),
            format!("{:?}", s.contribution.upper),
            format!("{:?}", s.cumulative.lower),
            format!("{:?}", s.cumulative.upper),
        ])?;
    }
    w.flush()?;

    let points: Vec<PointSummary> = class
        .points
        .iter()
        .map(|p| PointSummary {
            index: p.index,
            z: p.z.clone(),
            weight: p.weight,
            tag: p.verdict.tag,
            series_total: p.series_total,
            shell_ratio_range: p.shell_ratio_range,
            evidence: p.verdict.evidence.clone(),
        })
        .collect();
    let report = CriteriaReport {
        aggregate: class.aggregate,
        separation: class.separation,
        notes: class.notes,
        tail_model: tail.map(|t| t.describe()),
        points,
        thm2,
        trace_point: z0,
        aikawa_wiener_ratio: aikawa_wiener_ratio(&aikawa, &wiener),
        aikawa,
        wiener,
        empirical_constants: empirical,
        whitney: whitney_summary(&dec),
    };
    match format {
        OutputFormat::Json => write_json(&out.join("verdicts.json"), &report)?,
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(create(&out.join("verdicts.csv"))?);
            let d = domain.dim();
            let mut header = vec!["z_index".to_string()];
            header.extend((1..=d).map(|i| format!("z_{i}")));
            header.extend(["weight", "verdict", "series_total"].map(String::from));
            w.write_record(&header)?;
            for p in &report.points {
                let mut row = vec![p.index.to_string()];
                row.extend(p.z.coords().iter().map(|c| format!("{c:?}")));
                row.extend([format!("{:?}", p.weight), format!("{:?}", p.tag), format!("{:?}", p.series_total)]);
                w.write_record(&row)?;
            }
            w.flush()?;
        }
    }
    let mut m = RunManifest::open(out, cfg);
    m.set_section(
        "criteria",
        CriteriaSection {
            aggregate: report.aggregate,
            separation: report.separation,
            grid_points: grid.len(),
            bubbles: config.len(),
            thm2_verdict: report.thm2.as_ref().map(|t| t.verdict.tag),
            empirical_constants: &report.empirical_constants,
            aikawa_wiener_ratio: report.aikawa_wiener_ratio,
            whitney_cubes: report.whitney.cubes,
        },
    )?;
    m.write(out)?;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct StepBin {
    /// Steps in `[2^bin, 2^(bin+1))`; bin 0 also holds zero steps.
    pub bin: u32,
    pub hits: u64,
    pub boundary: u64,
    pub timeouts: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationReport {
    pub estimate: HitEstimate,
    pub x0: Point,
    pub bubbles: usize,
    pub histogram: Vec<StepBin>,
    pub note: String,
}

pub fn cmd_simulate(cfg: &RunConfig, out: &Path, format: OutputFormat) -> Result<SimulationReport> {
    prepare(out)?;
    let spec = cfg.require_sim()?;
    let params = cfg.sim_params(spec);
    let config = cfg.bubbles()?;
    let domain = config.domain();
    let x0 = spec
        .x0
        .as_ref()
        .map_or_else(|| domain.center().clone(), |c| Point::from_slice(c));
    let sim = Simulator::new(&config, &params)?;
    let outcomes = sim.outcomes(&x0)?;
    let estimate = summarize(&outcomes, &params);
    let mut histogram: Vec<StepBin> = Vec::new();
    for o in &outcomes {
        let steps = o.steps(params.max_steps);
        let bin = if steps == 0 { 0 } else { steps.ilog2() };
        while histogram.len() <= bin as usize {
            histogram.push(StepBin {
                bin: histogram.len() as u32,
                hits: 0,
                boundary: 0,
                timeouts: 0,
            });
        }
        let b = &mut histogram[bin as usize];
        match o.tag {
            OutcomeTag::HitBubble { .. } => b.hits += 1,
            OutcomeTag::ReachedBoundary { .. } => b.boundary += 1,
            OutcomeTag::Timeout => b.timeouts += 1,
        }
    }
    if spec.trajectories_csv {
        let d = domain.dim();
        let mut w = csv::Writer::from_writer(create(&out.join("trajectories.csv"))?);
        let mut header: Vec<String> = ["traj", "outcome", "bubble", "steps"].map(String::from).to_vec();
        header.extend((1..=d).map(|i| format!("x_{i}")));
        w.write_record(&header)?;
        for (t, o) in outcomes.iter().enumerate() {
            let (kind, k) = match o.tag {
                OutcomeTag::HitBubble { k, .. } => ("hit", k.to_string()),
                OutcomeTag::ReachedBoundary { .. } => ("boundary", String::new()),
                OutcomeTag::Timeout => ("timeout", String::new()),
            };
            let mut row = vec![t.to_string(), kind.into(), k, o.steps(params.max_steps).to_string()];
            row.extend(o.final_point.coords().iter().map(|c| format!("{c:?}")));
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    let report = SimulationReport {
        estimate,
        x0,
        bubbles: config.len(),
        histogram,
        note: "jump-suppression chain approximation; lifetime detected as distance to boundary below boundary_eps"
            .into(),
    };
    match format {
        OutputFormat::Json => write_json(&out.join("estimate.json"), &report)?,
        OutputFormat::Csv => {
            let e = &report.estimate;
            let mut w = csv::Writer::from_writer(create(&out.join("estimate.csv"))?);
            w.write_record(["p_hat", "ci_low", "ci_high", "n", "hits", "boundary", "timeouts", "timeout_fraction"])?;
            w.write_record([
                format!("{:?}", e.p_hat),
                format!("{:?}", e.ci_low),
                format!("{:?}", e.ci_high),
                e.n.to_string(),
                e.hits.to_string(),
                e.boundary.to_string(),
                e.timeouts.to_string(),
                format!("{:?}", e.timeout_fraction),
            ])?;
            w.flush()?;
        }
    }
    let mut m = RunManifest::open(out, cfg);
    m.set_section("simulate", &report.estimate)?;
    m.write(out)?;
    Ok(report)
}

/// Outcome of [`cmd_report`]: rows written and skipped runs.
#[derive(Clone, Debug, Default)]
pub struct ReportSummary {
    pub rows: usize,
    pub warnings: Vec<String>,
}

pub const REPORT_HEADER: [&str; 10] = [
    "run",
    "config_hash",
    "profile_kind",
    "profile_param",
    "weight",
    "verdict",
    "p_hat",
    "ci_low",
    "ci_high",
    "timeout_fraction",
];

fn section_f64(m: &RunManifest, section: &str, key: &str) -> String {
    m.sections
        .get(section)
        .and_then(|s| s.get(key))
        .and_then(|v| v.as_f64())
        .map_or_else(String::new, |v| format!("{v:?}"))
}

/// One row per run directory with a readable manifest of the current format.
pub fn cmd_report(runs: &[PathBuf], out_file: &Path) -> Result<ReportSummary> {
    if let Some(parent) = out_file.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let mut summary = ReportSummary::default();
    let mut w = csv::Writer::from_writer(create(out_file)?);
    w.write_record(REPORT_HEADER)?;
    for dir in runs {
        let m = match RunManifest::read(dir) {
            Ok(m) => m,
            Err(e) => {
                summary
                    .warnings
                    .push(format!("skipping {}: no readable manifest ({e})", dir.display()));
                continue;
            }
        };
        if m.format_version != super::config::FORMAT_VERSION {
            summary.warnings.push(format!(
                "skipping {}: format_version {} does not match {}",
                dir.display(),
                m.format_version,
                super::config::FORMAT_VERSION
            ));
            continue;
        }
        let (kind, param) = m
            .profile
            .map_or((String::new(), String::new()), |p| {
                let (k, v) = p.parameter();
                (k.to_string(), format!("{v:?}"))
            });
        let verdict = m
            .sections
            .get("criteria")
            .and_then(|s| s.get("aggregate"))
            .and_then(|v| v.as_str())
            .unwrap_or("")
            .to_string();
        w.write_record([
            dir.display().to_string(),
            m.config_hash.clone(),
            kind,
            param,
            m.weight.describe(),
            verdict,
            section_f64(&m, "simulate", "p_hat"),
            section_f64(&m, "simulate", "ci_low"),
            section_f64(&m, "simulate", "ci_high"),
            section_f64(&m, "simulate", "timeout_fraction"),
        ])?;
        summary.rows += 1;
    }
    w.flush()?;
    Ok(summary)
}

/// Exit code for an error: 2 for invalid configuration, 3 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter { .. } | Error::Json(_) => 2,
        _ => 3,
    }
}
