use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::time::Instant;

use serde_json::{json, Value};
use symcdg::experiments::{self, SequenceKind};
use symcdg::fourier::{self, Thresholds};
use symcdg::table::{Cell, Table};
use symcdg::walk::{self, occupation_counts, simulate_walk};
use symcdg::{Error, IncrementPreset, Modulus, ProcessParams};

use crate::{Cli, Command, Format, IncrementsArg, ProcessArgs, WhichArg};

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Invariant(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) | CliError::Invariant(s) | CliError::Io(s) => f.write_str(s),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvariantViolation(_) => CliError::Invariant(e.to_string()),
            Error::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

/// A finished table plus anything worth echoing in JSON output.
struct Report {
    table: Table,
    seed: Option<u64>,
    summary: Value,
}

impl Report {
    fn new(table: Table) -> Self {
        Report {
            table,
            seed: None,
            summary: Value::Null,
        }
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let started = Instant::now();
    let report = pool.install(|| dispatch(&cli.command))?;
    let elapsed = started.elapsed();

    let out: Box<dyn Write> = match &cli.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    emit(cli, &report, elapsed.as_secs_f64() * 1e3, out)
}

fn emit(cli: &Cli, report: &Report, wall_ms: f64, mut out: impl Write) -> CliResult<()> {
    match cli.format {
        Format::Csv => report.table.write_csv(&mut out)?,
        Format::Json => {
            let doc = json!({
                "config": cli,
                "metadata": {
                    "seed": report.seed,
                    "threads": cli.threads,
                    "wall_time_ms": wall_ms,
                    "version": env!("CARGO_PKG_VERSION"),
                },
                "summary": report.summary,
                "columns": report.table.header,
                "rows": report.table.records(),
            });
            serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| CliError::Io(e.to_string()))?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn modulus(p: u64) -> CliResult<Modulus> {
    Modulus::new(p).map_err(|e| CliError::Usage(e.to_string()))
}

fn params(p: u64, args: &ProcessArgs) -> CliResult<ProcessParams> {
    let preset = match args.increments {
        IncrementsArg::Trinary => IncrementPreset::Trinary,
        IncrementsArg::Binary => IncrementPreset::Binary,
    };
    Ok(ProcessParams::new(
        modulus(p)?,
        args.multiplier,
        args.forward_prob,
        preset.increments(),
    )?)
}

fn check_epsilon(epsilon: f64) -> CliResult<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(CliError::Usage(format!("epsilon {epsilon} outside (0, 1)")));
    }
    Ok(())
}

fn grid_or_default(grid: &Option<Vec<u64>>) -> CliResult<Vec<u64>> {
    let grid = grid
        .clone()
        .unwrap_or_else(|| experiments::DEFAULT_GRID.to_vec());
    for &p in &grid {
        modulus(p)?;
    }
    Ok(grid)
}

fn push(table: &mut Table, row: Vec<Cell>) -> CliResult<()> {
    Ok(table.push(row)?)
}

fn dispatch(command: &Command) -> CliResult<Report> {
    match command {
        Command::Evolve {
            p,
            n,
            with_bound,
            process,
        } => evolve(*p, *n, *with_bound, process),
        Command::MixingTime {
            p,
            p_grid,
            epsilon,
            process,
        } => mixing_time(*p, p_grid, *epsilon, process),
        Command::Scaling {
            p_grid,
            epsilon,
            process,
        } => scaling(p_grid, *epsilon, process),
        Command::Conditional {
            p,
            n,
            which,
            seed,
            seeds,
            beta,
            process,
        } => conditional(*p, *n, *which, *seed, *seeds, *beta, process),
        Command::LowerBound {
            p,
            n,
            shift,
            half_width,
            process,
        } => lower_bound(*p, *n, *shift, *half_width, process),
        Command::Census {
            p,
            start,
            length,
            decay,
            beta,
            n,
            seed,
        } => census(*p, *start, *length, *decay, *beta, *n, *seed),
        Command::WalkLaws {
            j,
            two_n,
            samples,
            seed,
        } => walk_laws(*j, *two_n, *samples, *seed),
        Command::Cutoff { p, floor, process } => cutoff(*p, *floor, process),
        Command::CompareFixed { p_grid, epsilon } => compare_fixed(p_grid, *epsilon),
        Command::Sample {
            p,
            n,
            samples,
            seed,
            process,
        } => sample(*p, *n, *samples, *seed, process),
    }
}

fn evolve(p: u64, n: u64, with_bound: bool, process: &ProcessArgs) -> CliResult<Report> {
    let params = params(p, process)?;
    let mut header = vec!["n", "tv"];
    if with_bound {
        header.push("ub_bound");
    }
    let mut table = Table::new(header);
    let mut ev = symcdg::process::Evolver::new(&params);
    let mut previous = ev.tv();
    loop {
        let tv = ev.tv();
        if tv > previous + symcdg::curve::MONOTONE_TOLERANCE {
            return Err(CliError::Invariant(format!(
                "TV increased to {tv} at n={}",
                ev.steps()
            )));
        }
        previous = tv;
        let mut row = vec![ev.steps().into(), tv.into()];
        if with_bound {
            let bound = ev.distribution().ub_lemma_bound();
            if tv * tv > bound + 1e-12 {
                return Err(CliError::Invariant(format!(
                    "TV² = {} above Fourier bound {bound} at n={}",
                    tv * tv,
                    ev.steps()
                )));
            }
            row.push(bound.into());
        }
        push(&mut table, row)?;
        if ev.steps() == n {
            break;
        }
        ev.step();
    }
    Ok(Report::new(table))
}

fn mixing_time(
    p: Option<u64>,
    p_grid: &Option<Vec<u64>>,
    epsilon: f64,
    process: &ProcessArgs,
) -> CliResult<Report> {
    check_epsilon(epsilon)?;
    let grid = match p {
        Some(p) => vec![p],
        None => grid_or_default(p_grid)?,
    };
    let params: Vec<ProcessParams> = grid
        .iter()
        .map(|&p| params(p, process))
        .collect::<CliResult<_>>()?;
    use rayon::prelude::*;
    let results: Vec<_> = params
        .par_iter()
        .map(|pr| experiments::mixing_time(pr, epsilon))
        .collect::<Result<_, _>>()?;
    let mut table = Table::new(["p", "n_star", "tv_at", "tv_before"]);
    for (p, t) in grid.iter().zip(results) {
        let before = t.tv_before.map_or(Cell::Text(String::new()), Cell::Float);
        push(&mut table, vec![(*p).into(), t.n_star.into(), t.tv_at.into(), before])?;
    }
    Ok(Report::new(table))
}

fn scaling_table(rows: &[(String, experiments::ScalingRow)], with_process: bool) -> CliResult<Table> {
    let mut header = Vec::new();
    if with_process {
        header.push("process");
    }
    header.extend(["p", "n_star", "log2p", "ratio_sq", "ratio_loglog"]);
    let mut table = Table::new(header);
    for (name, r) in rows {
        let mut row: Vec<Cell> = Vec::new();
        if with_process {
            row.push(name.as_str().into());
        }
        row.extend([
            r.p.into(),
            r.n_star.into(),
            r.log2p.into(),
            r.ratio_sq.into(),
            r.ratio_loglog.into(),
        ]);
        push(&mut table, row)?;
    }
    Ok(table)
}

fn scaling(p_grid: &Option<Vec<u64>>, epsilon: f64, process: &ProcessArgs) -> CliResult<Report> {
    check_epsilon(epsilon)?;
    let grid = grid_or_default(p_grid)?;
    let rows = experiments::scaling_experiment(&grid, epsilon, |m| {
        params(m.p(), process).map_err(|e| Error::InvalidParams(e.to_string()))
    })?;
    let named: Vec<_> = rows.into_iter().map(|r| (String::new(), r)).collect();
    Ok(Report::new(scaling_table(&named, false)?))
}

fn compare_fixed(p_grid: &Option<Vec<u64>>, epsilon: f64) -> CliResult<Report> {
    check_epsilon(epsilon)?;
    let grid = grid_or_default(p_grid)?;
    let sym = experiments::scaling_experiment(&grid, epsilon, |m| Ok(ProcessParams::symmetric(m)))?;
    let fixed =
        experiments::scaling_experiment(&grid, epsilon, |m| Ok(ProcessParams::fixed_doubling(m)))?;
    let named: Vec<_> = sym
        .into_iter()
        .map(|r| ("symmetric".to_string(), r))
        .chain(fixed.into_iter().map(|r| ("fixed".to_string(), r)))
        .collect();
    Ok(Report::new(scaling_table(&named, true)?))
}

#[allow(clippy::too_many_arguments)]
fn conditional(
    p: u64,
    n: u64,
    which: WhichArg,
    seed: u64,
    seeds: u64,
    beta: f64,
    process: &ProcessArgs,
) -> CliResult<Report> {
    let params = params(p, process)?;
    let reports = match which {
        WhichArg::Alternating => vec![experiments::conditional_experiment(
            &params,
            n,
            SequenceKind::Alternating,
            beta,
        )?],
        WhichArg::AllForward => vec![experiments::conditional_experiment(
            &params,
            n,
            SequenceKind::AllForward,
            beta,
        )?],
        WhichArg::Random => experiments::conditional_sweep(&params, n, seed, seeds.max(1), beta)?,
    };
    let mut table = Table::new([
        "kind", "seed", "p", "n", "tv", "ub_bound", "walk_min", "walk_max", "walk_range", "s1",
        "s2", "unresolved",
    ]);
    for r in &reports {
        let (kind, seed_cell): (&str, Cell) = match r.kind {
            SequenceKind::Alternating => ("alternating", "".into()),
            SequenceKind::AllForward => ("all-forward", "".into()),
            SequenceKind::Random(s) => ("random", s.into()),
        };
        let counts: [Cell; 3] = match &r.census {
            Some(c) => [
                c.s1.into(),
                c.s2.values().sum::<u64>().into(),
                c.unresolved.into(),
            ],
            None => ["".into(), "".into(), "".into()],
        };
        let mut row: Vec<Cell> = vec![
            kind.into(),
            seed_cell,
            r.p.into(),
            r.n.into(),
            r.tv.into(),
            r.ub_bound.into(),
            r.extremes.min.into(),
            r.extremes.max.into(),
            r.extremes.range.into(),
        ];
        row.extend(counts);
        push(&mut table, row)?;
    }
    let mixed = reports.iter().filter(|r| r.tv < 0.25).count();
    let mut report = Report::new(table);
    report.seed = (which == WhichArg::Random).then_some(seed);
    report.summary = json!({
        "runs": reports.len(),
        "fraction_tv_below_quarter": mixed as f64 / reports.len() as f64,
        "thresholds": Thresholds::with_beta(params.modulus(), beta),
    });
    Ok(report)
}

fn lower_bound(
    p: u64,
    n: Option<u64>,
    shift: Option<i64>,
    half_width: Option<u64>,
    process: &ProcessArgs,
) -> CliResult<Report> {
    let params = params(p, process)?;
    let (dn, ds, dw) = experiments::lower_bound_defaults(params.modulus());
    let w = half_width.unwrap_or(dw);
    if 2 * w >= p {
        return Err(CliError::Usage(format!(
            "half width {w} must be below p/2"
        )));
    }
    let lb = experiments::lower_bound_check(&params, n.unwrap_or(dn), shift.unwrap_or(ds), w)?;
    let mut table = Table::new([
        "p",
        "n",
        "shift",
        "half_width",
        "interval_mass",
        "tv_lower_bound",
        "exact_tv",
    ]);
    push(
        &mut table,
        vec![
            lb.p.into(),
            lb.n.into(),
            lb.shift.into(),
            lb.half_width.into(),
            lb.interval_mass.into(),
            lb.tv_lower_bound.into(),
            lb.exact_tv.into(),
        ],
    )?;
    Ok(Report::new(table))
}

fn census(
    p: u64,
    start: u64,
    length: Option<usize>,
    decay: f64,
    beta: f64,
    n: Option<u64>,
    seed: u64,
) -> CliResult<Report> {
    let m = modulus(p)?;
    let l = m.log2();
    let length = length.unwrap_or(l.ceil() as usize + 2);
    let alt = fourier::alternation_census(m, start, length, decay, beta)?;
    let steps = n.unwrap_or((4.0 * l * l).ceil() as u64).max(1);
    let path = simulate_walk((steps - 1) as usize, seed);
    let occupation = occupation_counts(&path, (l * l).floor() as usize);
    let thresholds = Thresholds::with_beta(m, beta);
    let classes = fourier::classification_census(m, &occupation, steps, &thresholds)?;

    let mut table = Table::new(["section", "key", "value"]);
    for (a, &count) in alt.histogram.iter().enumerate() {
        push(&mut table, vec!["alternations".into(), a.into(), count.into()])?;
    }
    push(
        &mut table,
        vec!["summary".into(), "weighted_sum".into(), alt.weighted_sum.into()],
    )?;
    push(
        &mut table,
        vec!["summary".into(), "majorant".into(), alt.majorant.into()],
    )?;
    push(&mut table, vec!["class".into(), "S1".into(), classes.s1.into()])?;
    for (b, &count) in &classes.s2 {
        push(
            &mut table,
            vec!["class".into(), format!("S2_{b}").into(), count.into()],
        )?;
    }
    push(
        &mut table,
        vec!["class".into(), "unresolved".into(), classes.unresolved.into()],
    )?;
    push(
        &mut table,
        vec![
            "walk".into(),
            "sparse_levels".into(),
            classes.sparse_levels.into(),
        ],
    )?;
    let mut report = Report::new(table);
    report.seed = Some(seed);
    report.summary = json!({ "thresholds": thresholds, "window_length": length, "walk_steps": steps });
    Ok(report)
}

fn walk_laws(j: u64, two_n: u64, samples: u64, seed: u64) -> CliResult<Report> {
    if two_n % 2 != 0 {
        return Err(CliError::Usage(format!("--two-n {two_n} must be even")));
    }
    let empirical: Option<Vec<u64>> = (samples > 0).then(|| {
        use rayon::prelude::*;
        let maxima: Vec<i64> = (0..samples)
            .into_par_iter()
            .map(|i| {
                let path = walk::simulate_walk_indexed(j as usize, seed, i);
                path.extremes(j as usize).map(|e| e.max).unwrap_or(0)
            })
            .collect();
        let mut counts = vec![0u64; j as usize + 1];
        for m in maxima {
            counts[m as usize] += 1;
        }
        counts
    });
    let mut table = Table::new(["law", "steps", "index", "exact", "probability", "empirical"]);
    for level in 0..=j as i64 {
        let exact = walk::max_law(j, level);
        let emp = empirical
            .as_ref()
            .map_or(Cell::Text(String::new()), |c| {
                Cell::Float(c[level as usize] as f64 / samples as f64)
            });
        push(
            &mut table,
            vec![
                "max".into(),
                j.into(),
                level.into(),
                exact.to_string().into(),
                to_f64(&exact).into(),
                emp,
            ],
        )?;
    }
    for r in 0..=two_n / 2 {
        let exact = walk::returns_law(r, two_n)?;
        push(
            &mut table,
            vec![
                "returns".into(),
                two_n.into(),
                r.into(),
                exact.to_string().into(),
                to_f64(&exact).into(),
                "".into(),
            ],
        )?;
    }
    let mut report = Report::new(table);
    report.seed = (samples > 0).then_some(seed);
    Ok(report)
}

fn to_f64(r: &num_rational::BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

fn cutoff(p: u64, floor: f64, process: &ProcessArgs) -> CliResult<Report> {
    check_epsilon(floor)?;
    let params = params(p, process)?;
    let prof = experiments::cutoff_profile(&params, floor)?;
    let mut table = Table::new(["n", "tv"]);
    for pt in &prof.curve.points {
        push(&mut table, vec![pt.n.into(), pt.tv.into()])?;
    }
    eprintln!(
        "p={p}: n(0.9)={} n(0.5)={} n(0.1)={} normalized window={:.4}",
        prof.n_90, prof.n_50, prof.n_10, prof.normalized_window
    );
    let mut report = Report::new(table);
    report.summary = json!({
        "n_90": prof.n_90,
        "n_50": prof.n_50,
        "n_10": prof.n_10,
        "normalized_window": prof.normalized_window,
    });
    Ok(report)
}

fn sample(p: u64, n: u64, samples: u64, seed: u64, process: &ProcessArgs) -> CliResult<Report> {
    if samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    let params = params(p, process)?;
    let r = symcdg::process::monte_carlo_check(&params, n, samples, seed)?;
    let mut table = Table::new([
        "p",
        "n",
        "samples",
        "seed",
        "empirical_tv",
        "exact_tv",
        "sampling_tv",
        "error_bound",
    ]);
    push(
        &mut table,
        vec![
            r.p.into(),
            r.n.into(),
            r.samples.into(),
            r.seed.into(),
            r.empirical_tv_to_uniform.into(),
            r.exact_tv_to_uniform.into(),
            r.sampling_tv.into(),
            r.error_bound.into(),
        ],
    )?;
    let mut report = Report::new(table);
    report.seed = Some(seed);
    Ok(report)
}
