use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anisogreen::bench::{random_points, run_bench, write_bench_csv, BenchConfig};
use anisogreen::evaluator::{evaluate_batch, sample_sphere, write_plot_files, SphereGrid};
use anisogreen::expansion::{
    build_tables, build_tables_timed, load_table_for, save_table, table_file_name, CoeffTable, MultiIndex,
    DEFAULT_MAX_ORDER,
};
use anisogreen::materials::{builtin, zener_family, ExtendedTensor, MaterialConstants, BUILTIN_NAMES};
use anisogreen::reference::{contour_field, error_over_sphere};
use anisogreen::Error;
use anyhow::{bail, Context, Result};

use crate::{BenchArgs, BuildArgs, Cli, Command, EvalArgs, MaterialsAction, PlotArgs, SweepArgs, TABLES_ENV};

pub fn run(cli: Cli) -> Result<()> {
    let env = Env {
        tables_dir: cli.tables_dir,
        allow_high_order: cli.allow_high_order,
    };
    match cli.command {
        Command::Build(a) => build(&env, a),
        Command::Eval(a) => eval(&env, a),
        Command::Sweep(a) => sweep(&env, a),
        Command::Bench(a) => bench(a),
        Command::Plot(a) => plot(&env, a),
        Command::Materials { action } => materials(action),
    }
}

struct Env {
    tables_dir: PathBuf,
    allow_high_order: bool,
}

impl Env {
    fn check_order(&self, order: u32) -> Result<()> {
        if order > DEFAULT_MAX_ORDER && !self.allow_high_order {
            bail!("derivative order {order} exceeds {DEFAULT_MAX_ORDER}; pass --allow-high-order to build it anyway");
        }
        Ok(())
    }

    fn table_path(&self, mi: MultiIndex) -> PathBuf {
        self.tables_dir.join(table_file_name(mi))
    }
}

/// A path to an existing file (or anything ending in `.json`) is read as a
/// material file; everything else is a built-in name.
fn load_material(source: &str) -> Result<MaterialConstants> {
    let path = Path::new(source);
    if path.is_file() || source.to_ascii_lowercase().ends_with(".json") {
        MaterialConstants::from_json_file(path).with_context(|| format!("reading material file {}", path.display()))
    } else {
        Ok(builtin(source)?)
    }
}

fn extended(source: &str) -> Result<ExtendedTensor> {
    let mat = load_material(source)?;
    mat.extend().with_context(|| format!("material '{}'", mat.name))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn parse_grid(text: &str) -> Result<(usize, usize)> {
    let parsed = text
        .split_once(['x', 'X'])
        .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
    parsed.with_context(|| format!("grid must look like 24x48, got '{text}'"))
}

fn parse_component(text: &str, n: usize) -> Result<(usize, usize)> {
    let (i, j): (usize, usize) = text
        .split_once(',')
        .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
        .with_context(|| format!("component must look like 1,1, got '{text}'"))?;
    if !(1..=n).contains(&i) || !(1..=n).contains(&j) {
        bail!("component ({i},{j}) is outside 1..={n}");
    }
    Ok((i - 1, j - 1))
}

fn table_of(tables: Vec<CoeffTable>, mi: MultiIndex) -> CoeffTable {
    tables.into_iter().find(|t| t.multi_index() == mi).expect("build covers every multi-index up to its order")
}

fn build(env: &Env, a: BuildArgs) -> Result<()> {
    env.check_order(a.order)?;
    let ext = extended(&a.material.material)?;
    std::fs::create_dir_all(&env.tables_dir).with_context(|| format!("creating {}", env.tables_dir.display()))?;
    let tables = build_tables_timed(&ext, a.l, a.order, a.quad_degree)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{:<22} {:>6} {:>9} {:>12}", "table", "order", "entries", "seconds")?;
    for (t, elapsed) in &tables {
        let name = table_file_name(t.multi_index());
        save_table(t, env.tables_dir.join(&name)).with_context(|| format!("writing {name}"))?;
        writeln!(out, "{name:<22} {:>6} {:>9} {:>12.6}", t.order(), t.entries().len(), elapsed.as_secs_f64())?;
    }
    writeln!(
        out,
        "tables written: {} (material {}, L = {}) in {}",
        tables.len(),
        ext.material_hash().to_hex().get(..12).unwrap_or_default(),
        a.l,
        env.tables_dir.display()
    )?;
    Ok(())
}

fn read_points(path: &Path) -> Result<Vec<[f64; 3]>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut points = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let fields: Vec<f64> = match record.iter().map(str::parse).collect::<std::result::Result<_, _>>() {
            Ok(v) => v,
            Err(_) if row == 0 => continue, // header
            Err(_) => bail!("{}: row {} is not numeric", path.display(), row + 1),
        };
        if fields.len() != 3 {
            bail!("{}: row {} has {} columns, expected x,y,z", path.display(), row + 1, fields.len());
        }
        points.push([fields[0], fields[1], fields[2]]);
    }
    Ok(points)
}

fn eval(env: &Env, a: EvalArgs) -> Result<()> {
    let ext = extended(&a.material.material)?;
    let path = env.table_path(a.multi_index);
    if !path.is_file() {
        bail!(
            "no table {} (run `anisogreen build` with --order {} or set --tables-dir / {TABLES_ENV})",
            path.display(),
            a.multi_index.order()
        );
    }
    let mut table = load_table_for(&path, &ext).with_context(|| format!("loading {}", path.display()))?;
    if let Some(l) = a.l {
        if l > table.degree() {
            bail!("--L {l} exceeds the stored degree {}", table.degree());
        }
        table = table.truncated(l);
    }
    let points = match (&a.points, a.random) {
        (Some(p), _) => read_points(p)?,
        (None, Some(n)) => random_points(n, a.seed),
        (None, None) => bail!("give --points <csv> or --random <count>"),
    };
    let values = evaluate_batch(&table, &points).map_err(|e| match e {
        Error::ZeroDistance { index: Some(i) } => {
            anyhow::Error::new(e).context(format!("point row {} is the source point (0,0,0)", i + 1))
        }
        e => e.into(),
    })?;
    let mut out = output(a.out.as_deref())?;
    writeln!(out, "point,x,y,z,i,j,value,imag_residual")?;
    let n = table.field_dim();
    for (k, (p, v)) in points.iter().zip(&values).enumerate() {
        for i in 0..n {
            for j in 0..n {
                writeln!(
                    out,
                    "{},{:.16e},{:.16e},{:.16e},{},{},{:.16e},{:.16e}",
                    k + 1,
                    p[0],
                    p[1],
                    p[2],
                    i + 1,
                    j + 1,
                    v.matrix[(i, j)],
                    v.imag_residual
                )?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn sweep(env: &Env, a: SweepArgs) -> Result<()> {
    let mi = a.multi_index;
    env.check_order(mi.order())?;
    let (nt, np) = parse_grid(&a.grid)?;
    let grid = SphereGrid::new(nt, np)?;
    let mut out = output(a.out.as_deref())?;
    if let Some(ratios) = &a.zener {
        writeln!(out, "A,L,i,j,e_S1")?;
        for &ratio in ratios {
            let ext = zener_family(ratio)?.extend()?;
            let t = table_of(build_tables(&ext, a.l, mi.order(), a.quad_degree)?, mi);
            let reference = contour_field(&ext, &grid, mi, a.nodes)?;
            let report = error_over_sphere(&sample_sphere(&t, nt, np)?, &reference, a.l, "contour")?;
            let mut rows = Vec::new();
            report.write_csv(&mut rows, false)?;
            for line in String::from_utf8(rows)?.lines() {
                writeln!(out, "{ratio},{line}")?;
            }
        }
    } else {
        let source = a.material.as_deref().context("--material is required unless --zener is given")?;
        if a.l_list.is_empty() || a.l_list.windows(2).any(|w| w[1] <= w[0]) {
            bail!("--L-list must be strictly ascending, got {:?}", a.l_list);
        }
        let ext = extended(source)?;
        let top = *a.l_list.last().unwrap();
        let t = table_of(build_tables(&ext, top, mi.order(), a.quad_degree)?, mi);
        let reference = contour_field(&ext, &grid, mi, a.nodes)?;
        for (k, &l) in a.l_list.iter().enumerate() {
            let field = sample_sphere(&t.truncated(l), nt, np)?;
            error_over_sphere(&field, &reference, l, "contour")?.write_csv(&mut out, k == 0)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let ext = extended(&a.material.material)?;
    let cfg = BenchConfig {
        truncations: a.l_list,
        node_counts: a.nodes,
        points: a.samples,
        seed: a.seed,
        warmup: a.warmup,
        min_time: std::time::Duration::from_millis(a.min_time_ms),
    };
    let rows = run_bench(&ext, &cfg)?;
    for r in rows.iter().filter(|r| r.build_seconds > 0.0) {
        eprintln!("table build at L = {}: {:.6} s (not included in ns_per_point)", r.parameter, r.build_seconds);
    }
    let mut out = output(a.out.as_deref())?;
    write_bench_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn plot(env: &Env, a: PlotArgs) -> Result<()> {
    let mi = a.multi_index;
    env.check_order(mi.order())?;
    let ext = extended(&a.material.material)?;
    let (i, j) = parse_component(&a.component, ext.field_dim())?;
    let (nt, np) = parse_grid(&a.grid)?;
    let path = env.table_path(mi);
    // a stored table is reused when it reaches the requested truncation
    let stored = if path.is_file() {
        Some(load_table_for(&path, &ext).with_context(|| format!("loading {}", path.display()))?)
    } else {
        None
    };
    let table = match stored {
        Some(t) if t.degree() >= a.l => t.truncated(a.l),
        _ => table_of(build_tables(&ext, a.l, mi.order(), None)?, mi),
    };
    let field = sample_sphere(&table, nt, np)?;
    write_plot_files(&table, &field, i, j, &a.out, a.obj.as_deref())?;
    Ok(())
}

fn materials(action: MaterialsAction) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match action {
        MaterialsAction::List => {
            for name in BUILTIN_NAMES {
                let dim = if name.contains('(') { 3 } else { builtin(name)?.field_dim };
                writeln!(out, "{name:<20} N = {dim}")?;
            }
        }
        MaterialsAction::Show { name, json } => {
            let mat = load_material(&name)?;
            if json {
                writeln!(out, "{}", mat.to_json_string()?)?;
            } else {
                write!(out, "{}", mat.describe())?;
            }
        }
    }
    Ok(())
}
