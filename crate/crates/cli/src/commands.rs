use std::path::Path;

use anyhow::{Context, Result};
use deltasketch::data::{load_csv, Manifest};
use deltasketch::nn::param_count;
use deltasketch::oracle::{MAX_EXACT_PARAMS, MAX_EXACT_ROWS};
use deltasketch::protocol::{prepare_repeat, run_exact, run_id, run_method, Method, MethodOutcome, ProtocolConfig};
use deltasketch::{Dataset, Error, Metrics};

use crate::config::RunConfig;
use crate::output::{mean, num, seconds, table};

struct Loaded {
    name: String,
    ds: Dataset,
}

fn load(cfg: &RunConfig) -> Result<Loaded> {
    let (name, (ds, report)) = match &cfg.target {
        Some(target) => {
            let path = Path::new(&cfg.dataset);
            let name = path
                .file_stem()
                .map_or(cfg.dataset.clone(), |s| s.to_string_lossy().into_owned());
            (name, load_csv(path, target)?)
        }
        None => {
            let manifest = Manifest::load(&cfg.manifest)?;
            (cfg.dataset.clone(), manifest.load_dataset(&cfg.dataset)?)
        }
    };
    eprintln!(
        "{name}: {} rows, {} features, target `{}`",
        ds.len(),
        ds.n_features(),
        ds.target_name
    );
    if report.dropped_rows > 0 {
        eprintln!("{name}: dropped {} incomplete rows", report.dropped_rows);
    }
    Ok(Loaded { name, ds })
}

/// Refuses the exact method before any training happens.
fn check_gate(ds: &Dataset, pcfg: &ProtocolConfig) -> Result<(), Error> {
    let p = param_count(&pcfg.arch.layer_sizes(ds.n_features()));
    let n = ds.len() - pcfg.split.split(ds.len(), 0)?.test.len();
    if p > MAX_EXACT_PARAMS || n > MAX_EXACT_ROWS {
        return Err(Error::SizeGate { rows: n, params: p });
    }
    Ok(())
}

fn prepare_dir(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))
}

fn metric_cells(m: &Metrics) -> [String; 3] {
    let r = if m.r_degenerate { f64::NAN } else { m.r };
    [num(m.p_cov), num(r), num(m.w_sd)]
}

fn r_value(m: &Metrics) -> f64 {
    if m.r_degenerate {
        f64::NAN
    } else {
        m.r
    }
}

fn all_failed(failures: Vec<(usize, Error)>) -> anyhow::Error {
    let n = failures.len();
    let (rep, err) = failures.into_iter().next().expect("at least one failure");
    anyhow::Error::new(err).context(format!("all {n} runs failed; first failure in repeat {rep}"))
}

fn notes(failures: &[(usize, Error)]) -> Vec<String> {
    failures
        .iter()
        .map(|(rep, e)| format!("repeat {rep} failed: {e}"))
        .collect()
}

fn write_intervals(cfg: &RunConfig, path: &Path, test_idx: &[usize], y: &[f64], out: &MethodOutcome) -> Result<()> {
    let mut t = table(
        path,
        cfg,
        "evaluate",
        &[],
        &["index", "y_true", "center", "lower", "upper"],
    )?;
    for ((i, yt), r) in test_idx.iter().zip(y).zip(&out.intervals) {
        t.write_record([i.to_string(), num(*yt), num(r.center), num(r.lower), num(r.upper)])?;
    }
    t.flush()?;
    Ok(())
}

pub fn evaluate(cfg: &RunConfig) -> Result<()> {
    let data = load(cfg)?;
    let pcfg = cfg.protocol();
    let method = cfg.method();
    if method == Method::Exact {
        check_gate(&data.ds, &pcfg)?;
    }
    prepare_dir(cfg)?;
    let label = method.name();

    let mut done = Vec::new();
    let mut failures = Vec::new();
    for rep in 0..cfg.repeats {
        let result = prepare_repeat(&data.ds, &pcfg, rep).and_then(|prep| run_method(&prep, method, cfg.alpha));
        match result {
            Ok(out) => {
                let m = &out.metrics;
                eprintln!(
                    "[{}/{}] {label}: p_cov {:.3}  r {:.3}  w_sd {:.3}",
                    rep + 1,
                    cfg.repeats,
                    m.p_cov,
                    r_value(m),
                    m.w_sd
                );
                let test_idx = pcfg.split.split(data.ds.len(), rep)?.test;
                let path = cfg.out.join(format!("intervals_{label}_{rep:03}.csv"));
                write_intervals(cfg, &path, &test_idx, &data.ds.subset(&test_idx).y, &out)?;
                done.push((rep, out));
            }
            Err(e) => {
                eprintln!("[{}/{}] {label}: failed: {e}", rep + 1, cfg.repeats);
                failures.push((rep, e));
            }
        }
    }

    let path = cfg.out.join("metrics.csv");
    let mut t = table(
        &path,
        cfg,
        "evaluate",
        &notes(&failures),
        &["dataset", "method", "repeat", "p_cov", "r", "w_sd", "wall_seconds"],
    )?;
    for (rep, out) in &done {
        let [p, r, w] = metric_cells(&out.metrics);
        t.write_record([
            data.name.clone(),
            label.into(),
            rep.to_string(),
            p,
            r,
            w,
            seconds(cfg, out.wall_seconds),
        ])?;
    }
    if !done.is_empty() {
        t.write_record([
            data.name.clone(),
            label.into(),
            "mean".into(),
            num(mean(done.iter().map(|(_, o)| o.metrics.p_cov))),
            num(mean(done.iter().map(|(_, o)| r_value(&o.metrics)))),
            num(mean(done.iter().map(|(_, o)| o.metrics.w_sd))),
            seconds(cfg, mean(done.iter().map(|(_, o)| o.wall_seconds))),
        ])?;
    }
    t.flush()?;
    eprintln!("wrote {}", path.display());
    if done.is_empty() {
        return Err(all_failed(failures));
    }
    Ok(())
}

pub fn compare_exact(cfg: &RunConfig) -> Result<()> {
    let data = load(cfg)?;
    let pcfg = cfg.protocol();
    check_gate(&data.ds, &pcfg)?;
    prepare_dir(cfg)?;

    let mut done = Vec::new();
    let mut failures = Vec::new();
    for rep in 0..cfg.repeats {
        let result = prepare_repeat(&data.ds, &pcfg, rep).and_then(|prep| {
            let (id, _) = run_id(&prep, cfg.rank, cfg.complement, cfg.alpha)?;
            let (exact, _) = run_exact(&prep, cfg.alpha)?;
            Ok((id, exact))
        });
        match result {
            Ok((id, exact)) => {
                eprintln!(
                    "[{}/{}] p_cov id {:.3} exact {:.3}  w_sd id {:.3} exact {:.3}",
                    rep + 1,
                    cfg.repeats,
                    id.metrics.p_cov,
                    exact.metrics.p_cov,
                    id.metrics.w_sd,
                    exact.metrics.w_sd
                );
                done.push((rep, id, exact));
            }
            Err(e) => {
                eprintln!("[{}/{}] failed: {e}", rep + 1, cfg.repeats);
                failures.push((rep, e));
            }
        }
    }

    let path = cfg.out.join("compare.csv");
    let mut t = table(
        &path,
        cfg,
        "compare-exact",
        &notes(&failures),
        &[
            "dataset",
            "repeat",
            "id_p_cov",
            "id_r",
            "id_w_sd",
            "id_p_star",
            "id_seconds",
            "exact_p_cov",
            "exact_r",
            "exact_w_sd",
            "exact_p_star",
            "exact_seconds",
            "max_rel_half_width_diff",
        ],
    )?;
    let gap = |id: &MethodOutcome, ex: &MethodOutcome| {
        id.intervals
            .iter()
            .zip(&ex.intervals)
            .map(|(a, b)| (a.half_width - b.half_width).abs() / b.half_width.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    };
    let row = |rep: String, id: [f64; 5], ex: [f64; 5], g: f64| {
        vec![
            data.name.clone(),
            rep,
            num(id[0]),
            num(id[1]),
            num(id[2]),
            num(id[3]),
            seconds(cfg, id[4]),
            num(ex[0]),
            num(ex[1]),
            num(ex[2]),
            num(ex[3]),
            seconds(cfg, ex[4]),
            num(g),
        ]
    };
    let cells = |o: &MethodOutcome| {
        [
            o.metrics.p_cov,
            r_value(&o.metrics),
            o.metrics.w_sd,
            o.p_star,
            o.wall_seconds,
        ]
    };
    for (rep, id, ex) in &done {
        t.write_record(row(rep.to_string(), cells(id), cells(ex), gap(id, ex)))?;
    }
    if !done.is_empty() {
        let avg = |f: &dyn Fn(&MethodOutcome) -> f64, pick_id: bool| {
            mean(done.iter().map(|(_, id, ex)| f(if pick_id { id } else { ex })))
        };
        let fields: [&dyn Fn(&MethodOutcome) -> f64; 5] = [
            &|o| o.metrics.p_cov,
            &|o| r_value(&o.metrics),
            &|o| o.metrics.w_sd,
            &|o| o.p_star,
            &|o| o.wall_seconds,
        ];
        let id_mean = fields.map(|f| avg(f, true));
        let ex_mean = fields.map(|f| avg(f, false));
        let g = done.iter().map(|(_, id, ex)| gap(id, ex)).fold(0.0, f64::max);
        t.write_record(row("mean".into(), id_mean, ex_mean, g))?;
    }
    t.flush()?;
    eprintln!("wrote {}", path.display());
    if done.is_empty() {
        return Err(all_failed(failures));
    }
    Ok(())
}

pub fn spectrum(cfg: &RunConfig) -> Result<()> {
    let data = load(cfg)?;
    let pcfg = cfg.protocol();
    check_gate(&data.ds, &pcfg)?;
    prepare_dir(cfg)?;
    let prep = prepare_repeat(&data.ds, &pcfg, cfg.repeat)?;
    let s = deltasketch::protocol::spectrum(&prep, cfg.rank)?;

    let path = cfg.out.join("spectrum.csv");
    let mut t = table(
        &path,
        cfg,
        "spectrum",
        &[],
        &[
            "index",
            "exact_singular_value",
            "sketch_singular_value",
            "exact_cov_eigenvalue",
            "sketch_cov_eigenvalue",
        ],
    )?;
    let cell = |v: &[f64], i: usize| v.get(i).map_or(String::new(), |x| num(*x));
    let len = [&s.exact_sv, &s.sketch_sv, &s.exact_cov, &s.sketch_cov]
        .iter()
        .map(|v| v.len())
        .max()
        .unwrap_or(0);
    for i in 0..len {
        t.write_record([
            i.to_string(),
            cell(&s.exact_sv, i),
            cell(&s.sketch_sv, i),
            cell(&s.exact_cov, i),
            cell(&s.sketch_cov, i),
        ])?;
    }
    t.flush()?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub fn sweep_rank(cfg: &RunConfig) -> Result<()> {
    if cfg.ranks.is_empty() {
        return Err(Error::Config("no ranks given (--ranks)".into()).into());
    }
    let data = load(cfg)?;
    let pcfg = cfg.protocol();
    prepare_dir(cfg)?;

    let mut done: Vec<(usize, usize, MethodOutcome)> = Vec::new();
    let mut failures = Vec::new();
    for rep in 0..cfg.repeats {
        let prep = match prepare_repeat(&data.ds, &pcfg, rep) {
            Ok(p) => p,
            Err(e) => {
                eprintln!("[{}/{}] training failed: {e}", rep + 1, cfg.repeats);
                failures.push((rep, e));
                continue;
            }
        };
        for &k in &cfg.ranks {
            match run_id(&prep, k, cfg.complement, cfg.alpha) {
                Ok((out, _)) => {
                    eprintln!(
                        "[{}/{}] k {k}: p_cov {:.3}  w_sd {:.3}",
                        rep + 1,
                        cfg.repeats,
                        out.metrics.p_cov,
                        out.metrics.w_sd
                    );
                    done.push((k, rep, out));
                }
                Err(e) => {
                    eprintln!("[{}/{}] k {k}: failed: {e}", rep + 1, cfg.repeats);
                    failures.push((rep, e));
                }
            }
        }
    }

    let path = cfg.out.join("sweep.csv");
    let mut t = table(
        &path,
        cfg,
        "sweep-rank",
        &notes(&failures),
        &[
            "dataset",
            "method",
            "rank",
            "repeat",
            "p_cov",
            "r",
            "w_sd",
            "p_star",
            "wall_seconds",
        ],
    )?;
    for (k, rep, out) in &done {
        let [p, r, w] = metric_cells(&out.metrics);
        t.write_record([
            data.name.clone(),
            "id".into(),
            k.to_string(),
            rep.to_string(),
            p,
            r,
            w,
            num(out.p_star),
            seconds(cfg, out.wall_seconds),
        ])?;
    }
    for &k in &cfg.ranks {
        let at_k: Vec<&MethodOutcome> = done.iter().filter(|d| d.0 == k).map(|d| &d.2).collect();
        if at_k.is_empty() {
            continue;
        }
        t.write_record([
            data.name.clone(),
            "id".into(),
            k.to_string(),
            "mean".into(),
            num(mean(at_k.iter().map(|o| o.metrics.p_cov))),
            num(mean(at_k.iter().map(|o| r_value(&o.metrics)))),
            num(mean(at_k.iter().map(|o| o.metrics.w_sd))),
            num(mean(at_k.iter().map(|o| o.p_star))),
            seconds(cfg, mean(at_k.iter().map(|o| o.wall_seconds))),
        ])?;
    }
    t.flush()?;
    eprintln!("wrote {}", path.display());
    if done.is_empty() {
        return Err(all_failed(failures));
    }
    Ok(())
}
