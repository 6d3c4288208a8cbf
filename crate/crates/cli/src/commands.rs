//! One function per experiment subcommand. Each returns its artifacts in
//! memory; nothing is written until the whole computation succeeded.

use anyhow::{Context, Result};
use crystal_fpp::estimate::{
    convex_hull, direction_point, estimate_shape, estimate_time_constant, format_direction, lattice_hash, lifting_inequality_check,
    monotonicity_experiment, norm_property_report, positivity_scan, BatchOptions, Direction, EstimateOptions, LiftingMode,
    LiftingOptions, MonotonicityOptions, PositivityOptions, Provenance, ShapeEstimate, ShapeOptions, ShapeRegime,
};
use crystal_fpp::fpp::SeedPlan;
use crystal_fpp::lattice::{edge_connectivity_estimate, write_lattice, CrystalLattice, LatticeVertex};
use crystal_fpp::quotient::{build_quotient, smith_normal_form, verify_covering, verify_diagram, QuotientData};
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, LiftMode};
use crate::svg::{render_shape_svg, Overlay, RenderOptions};

/// Version tag written as the first line of every detail CSV; bump it when
/// a column changes.
pub const CSV_VERSION: &str = "# crystal-fpp detail v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Lattice,
    Quotient,
    Mu,
    Shape,
    Monotonicity,
    LiftCheck,
    Positivity,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Lattice => "lattice",
            Command::Quotient => "quotient",
            Command::Mu => "mu",
            Command::Shape => "shape",
            Command::Monotonicity => "monotonicity",
            Command::LiftCheck => "lift-check",
            Command::Positivity => "positivity",
        }
    }
}

/// Results of one run: the verdict, summary lines and named output files.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub passed: bool,
    pub summary: Vec<(String, String)>,
    pub provenance: Vec<(String, String)>,
    pub files: Vec<(String, String)>,
}

impl Artifacts {
    fn line(&mut self, key: impl Into<String>, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }

    fn provenance_line(&mut self, key: impl Into<String>, value: impl ToString) {
        self.provenance.push((key.into(), value.to_string()));
    }

    fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    fn record(&mut self, p: &Provenance) {
        self.provenance_line("lattice_hash", &p.lattice_hash);
        self.provenance_line("distribution", &p.distribution);
        self.provenance_line("base_seed", p.base_seed);
        self.provenance_line("lanes", format!("{:?}", p.lanes));
        if let Some(k) = p.k_max {
            self.provenance_line("k_max", k);
        }
        self.provenance_line("replicas", p.replicas);
        self.provenance_line("windows", p.windows.join(" "));
        self.provenance_line("boundary_flags", p.boundary_flags);
        if let Some(l) = p.edge_connectivity {
            self.provenance_line("edge_connectivity", l);
        }
        self.provenance_line("moment_witness", &p.moment_witness);
    }
}

fn csv_document(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let body = String::from_utf8(w.into_inner().context("flushing CSV")?)?;
    Ok(format!("{CSV_VERSION}\n{body}"))
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn unit_direction(d: usize, axis: usize, sign: i64) -> Direction {
    (0..d).map(|i| Rational64::from_integer(if i == axis { sign } else { 0 })).collect()
}

fn join<T: ToString>(xs: &[T], sep: &str) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(sep)
}

fn edge_rows(lattice: &CrystalLattice, quotient: Option<&QuotientData>) -> Result<Vec<Vec<String>>> {
    let base = lattice.base();
    (0..base.half_edge_count())
        .map(|e| {
            let mut row = vec![e.to_string(), base.origin(e).to_string(), base.terminus(e).to_string(), join(lattice.voltage(e), " ")];
            if let Some(qd) = quotient {
                row.push(join(&qd.q.mul_vec(lattice.voltage(e))?, " "));
            }
            Ok(row)
        })
        .collect()
}

pub fn execute(command: Command, exp: &Experiment) -> Result<Artifacts> {
    let mut out = match command {
        Command::Lattice => lattice(exp),
        Command::Quotient => quotient(exp),
        Command::Mu => mu(exp),
        Command::Shape => shape(exp),
        Command::Monotonicity => monotonicity(exp),
        Command::LiftCheck => lift_check(exp),
        Command::Positivity => positivity(exp),
    }?;
    out.provenance.insert(0, ("lattice".into(), exp.lattice_name.clone()));
    Ok(out)
}

fn lattice(exp: &Experiment) -> Result<Artifacts> {
    let (l, r) = (&exp.lattice, &exp.realization);
    let mut out = Artifacts { passed: true, ..Default::default() };
    out.line("dimension", l.dim());
    out.line("base_vertices", l.base().vertex_count());
    out.line("base_edges", l.base().orbit_count());
    out.line("min_spacing", r.min_spacing());
    let conn = edge_connectivity_estimate(l, r, 3)?;
    out.line("edge_connectivity", format!("{} (window radius {}, {} pairs)", conn.value, conn.radius, conn.pairs_checked));
    out.provenance_line("lattice_hash", lattice_hash(l, r));
    out.file("lattice.txt", write_lattice(l, r));
    out.file("detail.csv", csv_document(&["half_edge", "origin", "terminus", "voltage"], edge_rows(l, None)?)?);
    Ok(out)
}

fn quotient(exp: &Experiment) -> Result<Artifacts> {
    let (l, r) = (&exp.lattice, &exp.realization);
    let kernel = exp.kernel()?;
    let qd = build_quotient(l, r, kernel)?;
    let snf = smith_normal_form(kernel.basis())?;
    let diagram = verify_diagram(&qd, 3, 1e-12)?;
    let covering = verify_covering(&qd, 3)?;
    let mut out = Artifacts { passed: diagram.passed && covering, ..Default::default() };
    out.line("quotient_dimension", qd.dim());
    out.line("kernel_invariant_factors", format!("{:?}", snf.invariant_factors()));
    out.line("quotient_map", format!("{:?}", (0..qd.q.rows()).map(|i| qd.q.row(i).to_vec()).collect::<Vec<_>>()));
    out.line(
        "projection",
        format!("{:?}", (0..qd.projection.nrows()).map(|i| qd.projection.row(i).iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>()),
    );
    out.line("diagram_max_deviation", format!("{:e} over {} vertices (radius 3, tolerance 1e-12)", diagram.max_deviation, diagram.vertices_checked));
    out.line("covering_local_bijection", covering);
    out.provenance_line("lattice_hash", lattice_hash(l, r));
    out.provenance_line("quotient_lattice_hash", lattice_hash(&qd.quotient_lattice, &qd.quotient_realization));
    out.file("quotient.txt", write_lattice(&qd.quotient_lattice, &qd.quotient_realization));
    out.file("detail.csv", csv_document(&["half_edge", "origin", "terminus", "voltage", "quotient_voltage"], edge_rows(l, Some(&qd))?)?);
    Ok(out)
}

fn mu(exp: &Experiment) -> Result<Artifacts> {
    let dist = exp.distribution()?;
    let dirs = exp.directions.clone().unwrap_or_else(|| vec![unit_direction(exp.lattice.dim(), 0, 1)]);
    // every direction is run out to the same Euclidean distance, so finite-size
    // bias cancels in the norm comparisons
    let length = |c: &Direction| direction_point(&exp.realization, c).iter().map(|x| x * x).sum::<f64>().sqrt();
    let longest = dirs.iter().map(length).fold(0.0, f64::max);
    let mut estimates = Vec::new();
    for (j, c) in dirs.iter().enumerate() {
        let k = if length(c) > 0.0 { ((exp.k_max as f64 * longest / length(c)).round() as u64).max(1) } else { exp.k_max };
        let opts = EstimateOptions::new(k, exp.replicas, SeedPlan::new(exp.base_seed, j as u32));
        estimates.push(estimate_time_constant(&exp.lattice, &exp.realization, dist, c, &opts).with_context(|| format!("direction {}", format_direction(c)))?);
    }
    let mut out = Artifacts { passed: true, ..Default::default() };
    for e in &estimates {
        out.line(format!("mu({})", format_direction(&e.direction)), format!("{} +- {} (k = {}, N = {})", e.point_estimate, e.std_error, e.k_max, e.denominator));
    }
    let report = if estimates.len() > 1 {
        let report = norm_property_report(&estimates, exp.std_errors)?;
        for c in &report.checks {
            out.line("norm_check", format!("{} {} (gap {:e}, slack {:e})", if c.passed { "pass" } else { "FAIL" }, c.description, c.gap, c.slack));
        }
        out.passed = report.passed;
        Some(report)
    } else {
        None
    };
    let mut lanes = Vec::new();
    let mut windows = Vec::new();
    for e in &estimates {
        lanes.extend(e.provenance.lanes.iter().copied());
        windows.extend(e.provenance.windows.iter().cloned());
    }
    let flags = estimates.iter().map(|e| e.provenance.boundary_flags).sum();
    out.record(&Provenance { lanes, windows, boundary_flags: flags, ..estimates[0].provenance.clone() });
    let rows = estimates.iter().flat_map(|e| {
        e.samples.iter().enumerate().map(move |(i, s)| {
            vec![format_direction(&e.direction), i.to_string(), e.k_max.to_string(), e.denominator.to_string(), s.to_string()]
        })
    });
    out.file("detail.csv", csv_document(&["direction", "replica", "k_max", "denominator", "scaled_time"], rows)?);
    #[derive(Serialize)]
    struct MuJson<'a> {
        estimates: &'a [crystal_fpp::estimate::TimeConstantEstimate],
        norm_report: Option<crystal_fpp::estimate::NormReport>,
    }
    out.file("mu.json", json(&MuJson { estimates: &estimates, norm_report: report })?);
    Ok(out)
}

/// `shape.json`: the estimate and, when a kernel is configured, the quotient
/// shape carried into the plane by `P^T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeDocument {
    pub shape: ShapeEstimate,
    pub overlay: Option<Overlay>,
}

fn shape(exp: &Experiment) -> Result<Artifacts> {
    let dist = exp.distribution()?;
    let mut opts = ShapeOptions::new(exp.n_dirs, exp.k_max, exp.replicas, SeedPlan::new(exp.base_seed, 0));
    opts.max_denominator = exp.max_denominator;
    opts.zero_threshold = exp.zero_threshold;
    let shape = estimate_shape(&exp.lattice, &exp.realization, dist, &opts)?;
    let mut out = Artifacts { passed: true, ..Default::default() };
    out.line("directions", shape.radial.len());
    match shape.regime {
        ShapeRegime::Bounded => out.line("regime", "bounded"),
        ShapeRegime::Unbounded { threshold } => out.line("regime", format!("unbounded: every mu estimate is below {threshold}")),
    }
    if let Some(hull) = &shape.polytope {
        out.line("hull_vertices", hull.len());
    }
    for r in &shape.radial {
        out.line(format!("mu({})", format_direction(&r.direction)), format!("{} +- {}", r.mu, r.mu_std_error));
    }
    out.record(&shape.provenance);

    let overlay = match (&exp.kernel, exp.lattice.dim()) {
        (Some(kernel), 2) => {
            let qd = build_quotient(&exp.lattice, &exp.realization, kernel)?;
            // the quotient uses lanes after those of the cover
            let mut qopts = opts;
            qopts.seed = SeedPlan::new(exp.base_seed, exp.n_dirs as u32);
            let qshape = estimate_shape(&qd.quotient_lattice, &qd.quotient_realization, dist, &qopts)?;
            let embedded: Option<Vec<[f64; 2]>> = qshape
                .radial
                .iter()
                .map(|r| r.boundary_point.as_ref().map(|b| {
                    let p = qd.embed_point(b);
                    [p[0], p[1]]
                }))
                .collect();
            embedded.map(|pts| {
                let points = if qd.dim() == 2 { convex_hull(&pts) } else { pts };
                Overlay { label: format!("quotient shape ({}-dimensional)", qd.dim()), points }
            })
        }
        _ => None,
    };
    let doc = ShapeDocument { shape, overlay };
    if doc.shape.dim == 2 && doc.shape.polytope.is_some() {
        let options = RenderOptions { label: format!("shape of {}", exp.lattice_name), overlay: doc.overlay.clone(), ..Default::default() };
        out.file("shape.svg", render_shape_svg(&doc.shape, &options)?);
    }
    let rows = doc.shape.radial.iter().flat_map(|r| {
        r.samples.iter().enumerate().map(move |(i, s)| vec![format_direction(&r.direction), i.to_string(), s.to_string()])
    });
    out.file("detail.csv", csv_document(&["direction", "replica", "scaled_time"], rows)?);
    out.file("shape.json", json(&doc)?);
    Ok(out)
}

fn monotonicity(exp: &Experiment) -> Result<Artifacts> {
    let dist = exp.distribution()?;
    let kernel = exp.kernel()?;
    let d = exp.lattice.dim();
    let dirs = match &exp.directions {
        Some(ds) => ds.clone(),
        None => {
            // ±e_i, skipping axes inside the kernel
            let qd = build_quotient(&exp.lattice, &exp.realization, kernel)?;
            (0..d)
                .filter(|&i| (0..qd.dim()).any(|r| qd.q.get(r, i) != 0))
                .flat_map(|i| [unit_direction(d, i, 1), unit_direction(d, i, -1)])
                .collect()
        }
    };
    let opts = MonotonicityOptions { k_max: exp.k_max, base_seed: exp.base_seed, batch: BatchOptions::new(exp.replicas), tol_std_errors: exp.std_errors };
    let report = monotonicity_experiment(&exp.lattice, &exp.realization, kernel, dist, &dirs, &opts)?;
    let mut out = Artifacts { passed: report.passed, ..Default::default() };
    out.line("quotient_dimension", report.quotient_dim);
    for v in &report.directions {
        out.line(
            format!("direction({})", format_direction(&v.direction)),
            format!(
                "{} mu_A = {} +- {} <= mu1({}) = {} +- {} + slack {:e}",
                if v.passed { "pass" } else { "FAIL" },
                v.affine.point_estimate,
                v.affine.std_error,
                format_direction(&v.quotient_direction),
                v.quotient.point_estimate,
                v.quotient.std_error,
                v.slack
            ),
        );
    }
    if let Some(p) = &report.polytope {
        out.line("polytope_containment", format!("{} (max violation {:e})", if p.passed { "pass" } else { "not within 1e-9" }, p.max_violation));
    }
    let first = &report.directions[0];
    let mut prov = first.affine.provenance.clone();
    prov.lanes = report.directions.iter().flat_map(|v| [v.affine.provenance.lanes[0], v.quotient.provenance.lanes[0]]).collect();
    prov.windows = report.directions.iter().flat_map(|v| v.affine.provenance.windows.iter().chain(&v.quotient.provenance.windows).cloned()).collect();
    prov.boundary_flags = report.directions.iter().map(|v| v.affine.provenance.boundary_flags + v.quotient.provenance.boundary_flags).sum();
    out.record(&prov);
    out.provenance_line("quotient_lattice_hash", &report.quotient_lattice_hash);
    let rows = report.directions.iter().flat_map(|v| {
        let dir = format_direction(&v.direction);
        let quotient = v.quotient.samples.iter().enumerate().map({
            let dir = dir.clone();
            move |(i, s)| vec![dir.clone(), "quotient".to_string(), i.to_string(), s.to_string()]
        });
        let affine = v.affine.samples.iter().enumerate().map(move |(i, s)| vec![dir.clone(), "affine".to_string(), i.to_string(), s.to_string()]);
        quotient.chain(affine).collect::<Vec<_>>()
    });
    out.file("detail.csv", csv_document(&["direction", "side", "replica", "scaled_time"], rows)?);
    out.file("monotonicity.json", json(&report)?);
    Ok(out)
}

fn lift_check(exp: &Experiment) -> Result<Artifacts> {
    let dist = exp.distribution()?;
    let kernel = exp.kernel()?;
    let d1 = exp.lattice.dim() - kernel.rank();
    let index = exp.x1.clone().unwrap_or_else(|| (0..d1).map(|i| i64::from(i == 0)).collect());
    let x1 = LatticeVertex { base: exp.x1_base, index };
    let mode = match exp.mode {
        LiftMode::Exhaustive => LiftingMode::Exhaustive { budget: u128::from(exp.budget) },
        LiftMode::MonteCarlo => LiftingMode::MonteCarlo { replicas: exp.replicas, base_seed: exp.base_seed, tol_std_errors: exp.std_errors },
    };
    let options = LiftingOptions { mode, sub_radius: exp.sub_radius, ..LiftingOptions::exhaustive(0) };
    let report = lifting_inequality_check(&exp.lattice, &exp.realization, kernel, dist, &x1, &exp.t_grid, &options)?;
    let mut out = Artifacts { passed: report.passed, ..Default::default() };
    out.line("mode", &report.mode);
    out.line("scope", &report.scope);
    out.line("x1", format!("base {} index {:?}", report.x1.base, report.x1.index));
    out.line("windows", format!("quotient radius {} ({} edges), cover radius {} ({} edges), {} lifts", report.sub_radius, report.quotient_orbits, report.cover_radius, report.cover_orbits, report.fiber_size));
    if let Some(n) = report.configurations {
        out.line("configurations", n);
    }
    for row in &report.rows {
        let lhs = row.lhs_exact.clone().unwrap_or_else(|| row.lhs.to_string());
        let rhs = row.rhs_exact.clone().unwrap_or_else(|| row.rhs.to_string());
        out.line(format!("t = {}", row.t), format!("{} LHS {lhs} >= RHS {rhs} (slack {:e})", if row.passed { "pass" } else { "FAIL" }, row.slack));
    }
    out.provenance_line("lattice_hash", &report.lattice_hash);
    out.provenance_line("distribution", &report.distribution);
    out.provenance_line("base_seed", exp.base_seed);
    if let Some(n) = report.replicas {
        out.provenance_line("replicas", n);
        out.provenance_line("lanes", "[1, 0] (quotient, cover)");
    }
    let rows = report.rows.iter().map(|r| {
        vec![
            r.t.to_string(),
            r.lhs.to_string(),
            r.rhs.to_string(),
            r.lhs_exact.clone().unwrap_or_default(),
            r.rhs_exact.clone().unwrap_or_default(),
            r.slack.to_string(),
            r.passed.to_string(),
        ]
    });
    out.file("detail.csv", csv_document(&["t", "lhs", "rhs", "lhs_exact", "rhs_exact", "slack", "passed"], rows)?);
    out.file("lift.json", json(&report)?);
    Ok(out)
}

fn positivity(exp: &Experiment) -> Result<Artifacts> {
    let x = exp.directions.as_ref().and_then(|d| d.first().cloned()).unwrap_or_else(|| unit_direction(exp.lattice.dim(), 0, 1));
    let opts = PositivityOptions {
        k_max: exp.k_max,
        base_seed: exp.base_seed,
        batch: BatchOptions::new(exp.replicas),
        tol_std_errors: exp.std_errors,
        zero_threshold: exp.zero_threshold,
    };
    let report = positivity_scan(&exp.lattice, &exp.realization, &exp.p_grid, &x, &opts)?;
    let mut out = Artifacts { passed: report.passed, ..Default::default() };
    out.line("direction", format_direction(&x));
    for r in &report.rows {
        out.line(format!("mu(p = {})", r.p), format!("{} +- {}{}", r.estimate.point_estimate, r.estimate.std_error, if r.increase { " (increase beyond slack)" } else { "" }));
    }
    out.line("nonincreasing", report.nonincreasing);
    out.line("zero_range", format!("{:?} (threshold {})", report.zero_range, report.zero_threshold));
    let mut prov = report.rows[0].estimate.provenance.clone();
    prov.distribution = format!("bernoulli over p in {:?}", report.rows.iter().map(|r| r.p).collect::<Vec<_>>());
    prov.lanes = report.rows.iter().flat_map(|r| r.estimate.provenance.lanes.clone()).collect();
    prov.windows = report.rows.iter().flat_map(|r| r.estimate.provenance.windows.clone()).collect();
    prov.boundary_flags = report.rows.iter().map(|r| r.estimate.provenance.boundary_flags).sum();
    out.record(&prov);
    let rows = report.rows.iter().flat_map(|r| r.estimate.samples.iter().enumerate().map(move |(i, s)| vec![r.p.to_string(), i.to_string(), s.to_string()]));
    out.file("detail.csv", csv_document(&["p", "replica", "scaled_time"], rows)?);
    out.file("positivity.json", json(&report)?);
    Ok(out)
}
