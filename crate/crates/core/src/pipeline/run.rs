use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Experiment, ExperimentConfig, PipelineError};
use crate::channel::IdsChannelParams;
use crate::galois::Symbol;

/// Version of the CSV/JSON result schema.
pub const RESULTS_VERSION: u32 = 1;

/// Fewest bit errors a noisy grid point may report without `allow_rare`.
const MIN_ERRORS: u64 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub p_ins: f64,
    pub p_del: f64,
    pub p_sub: f64,
    pub copies: String,
    pub trials: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub symbols: u64,
    pub symbol_errors: u64,
    pub ser: f64,
    /// Trials whose decoder failed; every scored symbol of such a trial counts as wrong.
    pub failures: u64,
    pub seed: u64,
    pub wall_time_s: f64,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    schema_version: u32,
    p_ins: f64,
    p_del: f64,
    p_sub: f64,
    copies: &'a str,
    trials: u64,
    bits: u64,
    bit_errors: u64,
    ber: f64,
    symbols: u64,
    symbol_errors: u64,
    ser: f64,
    failures: u64,
    seed: u64,
}

impl<'a> From<&'a ResultRow> for CsvRow<'a> {
    fn from(r: &'a ResultRow) -> Self {
        CsvRow {
            schema_version: RESULTS_VERSION,
            p_ins: r.p_ins,
            p_del: r.p_del,
            p_sub: r.p_sub,
            copies: &r.copies,
            trials: r.trials,
            bits: r.bits,
            bit_errors: r.bit_errors,
            ber: r.ber,
            symbols: r.symbols,
            symbol_errors: r.symbol_errors,
            ser: r.ser,
            failures: r.failures,
            seed: r.seed,
        }
    }
}

/// Per-position symbol error rates at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionHistogram {
    pub p_ins: f64,
    pub p_del: f64,
    pub p_sub: f64,
    pub trials: u64,
    pub errors: Vec<u64>,
    pub ser: Vec<f64>,
    /// Inner position of each scored position (marker codes only).
    pub inner_position: Option<Vec<usize>>,
    pub marker_distance: Option<Vec<usize>>,
    /// Mean over trials of the per-trial symbol error rate.
    pub mean_ser: f64,
    /// Standard error of `mean_ser`.
    pub mean_ser_stderr: f64,
}

#[derive(Debug, Clone)]
struct Acc {
    bits: u64,
    bit_errors: u64,
    symbols: u64,
    symbol_errors: u64,
    failures: u64,
    sq_symbol_errors: u128,
    per_pos: Vec<u64>,
}

impl Acc {
    fn new(positions: usize) -> Self {
        Acc {
            bits: 0,
            bit_errors: 0,
            symbols: 0,
            symbol_errors: 0,
            failures: 0,
            sq_symbol_errors: 0,
            per_pos: vec![0; positions],
        }
    }

    fn merge(mut self, o: Acc) -> Acc {
        self.bits += o.bits;
        self.bit_errors += o.bit_errors;
        self.symbols += o.symbols;
        self.symbol_errors += o.symbol_errors;
        self.failures += o.failures;
        self.sq_symbol_errors += o.sq_symbol_errors;
        if self.per_pos.len() == o.per_pos.len() {
            for (a, b) in self.per_pos.iter_mut().zip(&o.per_pos) {
                *a += b;
            }
        }
        self
    }

    fn add(&mut self, reference: &[Symbol], estimate: Option<&[Symbol]>, bits_per_symbol: u32) {
        let n = reference.len() as u64;
        self.bits += n * bits_per_symbol as u64;
        self.symbols += n;
        let mut sym_err = 0u64;
        match estimate {
            None => {
                self.failures += 1;
                self.bit_errors += n * bits_per_symbol as u64;
                sym_err = n;
                self.per_pos.iter_mut().for_each(|c| *c += 1);
            }
            Some(est) => {
                for (i, (a, b)) in reference.iter().zip(est).enumerate() {
                    let diff = (a.0 ^ b.0).count_ones() as u64;
                    if diff > 0 {
                        self.bit_errors += diff;
                        sym_err += 1;
                        if let Some(c) = self.per_pos.get_mut(i) {
                            *c += 1;
                        }
                    }
                }
            }
        }
        self.symbol_errors += sym_err;
        self.sq_symbol_errors += (sym_err as u128) * (sym_err as u128);
    }
}

fn is_noiseless(ch: &IdsChannelParams) -> bool {
    ch.p_ins == 0.0 && ch.p_del == 0.0 && ch.p_sub == 0.0
}

fn pool(cfg: &ExperimentConfig) -> Result<rayon::ThreadPool, PipelineError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        b = b.num_threads(t);
    }
    b.build().map_err(|e| PipelineError::Pool(e.to_string()))
}

fn scored_len(exp: &Experiment) -> usize {
    match exp.scored_inner_positions() {
        Some(p) => p.len(),
        None => exp.n_out,
    }
}

fn run_point(
    exp: &Experiment,
    idx: usize,
    hist: bool,
) -> Result<(ResultRow, Option<PositionHistogram>), PipelineError> {
    let ch = exp.points[idx];
    let win = exp.window(&ch)?;
    let bps = exp.field.bits_per_symbol();
    let positions = if hist { scored_len(exp) } else { 0 };
    let started = Instant::now();
    let acc = (0..exp.cfg.trials)
        .into_par_iter()
        .try_fold(
            || Acc::new(positions),
            |mut acc, t| {
                let mut rng = exp.rng(idx, t);
                let sample = exp.sample(&ch, &mut rng)?;
                let scored = exp.score(&sample, &ch, &win)?;
                acc.add(&scored.reference, scored.estimate.as_deref(), bps);
                Ok::<_, PipelineError>(acc)
            },
        )
        .try_reduce(|| Acc::new(positions), |a, b| Ok(a.merge(b)))?;
    let wall = started.elapsed().as_secs_f64();
    let label = format!("p_ins={} p_del={} p_sub={}", ch.p_ins, ch.p_del, ch.p_sub);
    if !exp.cfg.allow_rare && !is_noiseless(&ch) && acc.bit_errors < MIN_ERRORS {
        return Err(PipelineError::RareEvent {
            point: label,
            errors: acc.bit_errors,
            trials: exp.cfg.trials,
        });
    }
    let trials = exp.cfg.trials;
    let row = ResultRow {
        p_ins: ch.p_ins,
        p_del: ch.p_del,
        p_sub: ch.p_sub,
        copies: exp.cfg.copies.label(),
        trials,
        bits: acc.bits,
        bit_errors: acc.bit_errors,
        ber: acc.bit_errors as f64 / acc.bits as f64,
        symbols: acc.symbols,
        symbol_errors: acc.symbol_errors,
        ser: acc.symbol_errors as f64 / acc.symbols as f64,
        failures: acc.failures,
        seed: exp.cfg.seed,
        wall_time_s: wall,
    };
    let histogram = hist.then(|| {
        let n = positions as f64;
        let t = trials as f64;
        let mean = acc.symbol_errors as f64 / (n * t);
        let second = acc.sq_symbol_errors as f64 / (n * n * t);
        let var = if trials > 1 {
            (second - mean * mean).max(0.0) * t / (t - 1.0)
        } else {
            0.0
        };
        let inner_position = exp.scored_inner_positions();
        let layout = exp.layout();
        let marker_distance = inner_position.as_ref().zip(layout).and_then(|(pos, l)| {
            pos.iter()
                .map(|&p| l.distance_to_marker(p))
                .collect::<Option<Vec<_>>>()
        });
        PositionHistogram {
            p_ins: ch.p_ins,
            p_del: ch.p_del,
            p_sub: ch.p_sub,
            trials,
            ser: acc.per_pos.iter().map(|&e| e as f64 / t).collect(),
            errors: acc.per_pos,
            inner_position,
            marker_distance,
            mean_ser: mean,
            mean_ser_stderr: (var / t).sqrt(),
        }
    });
    Ok((row, histogram))
}

fn run_all(
    cfg: &ExperimentConfig,
    hist: bool,
) -> Result<Vec<(ResultRow, Option<PositionHistogram>)>, PipelineError> {
    let exp = Experiment::build(cfg)?;
    let pool = pool(cfg)?;
    pool.install(|| {
        (0..exp.points.len())
            .map(|i| run_point(&exp, i, hist))
            .collect()
    })
}

/// Runs every grid point. Writes `<output>.csv` and `<output>.json` (plus
/// `<output>.hist.csv` when the histogram flag is set) if an output prefix
/// is configured.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, PipelineError> {
    let out = run_all(cfg, cfg.histogram)?;
    let rows: Vec<ResultRow> = out.iter().map(|(r, _)| r.clone()).collect();
    if let Some(prefix) = &cfg.output {
        let prefix = cfg.resolve(prefix);
        write_results(cfg, &rows, &prefix)?;
        if cfg.histogram {
            let hists: Vec<PositionHistogram> = out.into_iter().filter_map(|(_, h)| h).collect();
            write_histogram_csv(&hists, &with_suffix(&prefix, "hist.csv"))?;
        }
    }
    Ok(rows)
}

/// Result rows together with per-position error counts, for any codeword
/// source. Writes nothing.
pub fn run_with_histograms(
    cfg: &ExperimentConfig,
) -> Result<Vec<(ResultRow, PositionHistogram)>, PipelineError> {
    Ok(run_all(cfg, true)?
        .into_iter()
        .map(|(r, h)| (r, h.expect("histogram requested")))
        .collect())
}

/// Per-position symbol error rates for a configuration that fixes the
/// transmitted codeword.
pub fn per_position_histogram(
    cfg: &ExperimentConfig,
) -> Result<Vec<PositionHistogram>, PipelineError> {
    if cfg.codeword.is_none() {
        return Err(PipelineError::Config {
            field: "codeword".into(),
            msg: "histogram mode needs a fixed codeword".into(),
        });
    }
    Ok(run_all(cfg, true)?
        .into_iter()
        .filter_map(|(_, h)| h)
        .collect())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn out_err(path: &Path, e: impl ToString) -> PipelineError {
    PipelineError::Output {
        path: path.to_path_buf(),
        msg: e.to_string(),
    }
}

#[derive(Serialize)]
struct JsonResults<'a> {
    schema_version: u32,
    config: &'a ExperimentConfig,
    rows: &'a [ResultRow],
}

/// CSV without wall time (reproducible byte for byte) and JSON with wall
/// time and the full config.
pub fn write_results(
    cfg: &ExperimentConfig,
    rows: &[ResultRow],
    prefix: &Path,
) -> Result<(), PipelineError> {
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| out_err(dir, e))?;
    }
    let csv_path = with_suffix(prefix, "csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| out_err(&csv_path, e))?;
    for r in rows {
        w.serialize(CsvRow::from(r))
            .map_err(|e| out_err(&csv_path, e))?;
    }
    w.flush().map_err(|e| out_err(&csv_path, e))?;
    let json_path = with_suffix(prefix, "json");
    let doc = JsonResults {
        schema_version: RESULTS_VERSION,
        config: cfg,
        rows,
    };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| out_err(&json_path, e))?;
    std::fs::write(&json_path, text).map_err(|e| out_err(&json_path, e))
}

#[derive(Serialize)]
struct HistRow {
    schema_version: u32,
    p_ins: f64,
    p_del: f64,
    p_sub: f64,
    position: usize,
    inner_position: Option<usize>,
    marker_distance: Option<usize>,
    trials: u64,
    errors: u64,
    ser: f64,
}

pub fn write_histogram_csv(hists: &[PositionHistogram], path: &Path) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| out_err(path, e))?;
    for h in hists {
        for (i, (&errors, &ser)) in h.errors.iter().zip(&h.ser).enumerate() {
            w.serialize(HistRow {
                schema_version: RESULTS_VERSION,
                p_ins: h.p_ins,
                p_del: h.p_del,
                p_sub: h.p_sub,
                position: i,
                inner_position: h.inner_position.as_ref().map(|v| v[i]),
                marker_distance: h.marker_distance.as_ref().map(|v| v[i]),
                trials: h.trials,
                errors,
                ser,
            })
            .map_err(|e| out_err(path, e))?;
        }
    }
    w.flush().map_err(|e| out_err(path, e))
}
