use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Experiment, ExperimentConfig, InnerCode, PipelineError};
use crate::bcjr::{marker_priors, DriftWindow, PosteriorMatrix};
use crate::features::dataset::{
    CodeIds, DatasetHeader, DatasetItem, DatasetWriter, Manifest, NamedMask, Segment, StreamSpec,
};
use crate::features::{
    build_aggregated_window, build_cross_masks, build_ecct_features, build_multicopy_batch,
    build_state_window, build_symbol_window_with, Axis, FeatureTensor, TensorLayout, WindowOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// Symbol window of one copy; target the inner codeword.
    Marker,
    /// Padded multi-copy symbol windows with pad flags.
    MarkerMulti,
    /// Symbol and state windows; target inner bits, outer bits and the termination zeros.
    Conv,
    /// Magnitude and bipolar syndrome of BCJR outputs; target the multiplicative noise.
    Ecct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetOptions {
    pub dir: PathBuf,
    pub name: String,
    pub count: usize,
    /// Inferred from the config when absent.
    pub kind: Option<DatasetKind>,
    /// Binary marker datasets: sum the window over symbols.
    pub aggregated: bool,
    pub drop_emission_factor: bool,
}

const CHUNK: usize = 256;

fn infer_kind(exp: &Experiment) -> DatasetKind {
    match exp.inner {
        InnerCode::Conv { .. } => DatasetKind::Conv,
        InnerCode::Marker { .. } if exp.cfg.copies.bounds().1 > 1 => DatasetKind::MarkerMulti,
        InnerCode::Marker { .. } => DatasetKind::Marker,
    }
}

fn shape_err(msg: &str) -> PipelineError {
    PipelineError::Config {
        field: "dataset".into(),
        msg: msg.into(),
    }
}

fn column(name: &str, tokens: usize) -> TensorLayout {
    TensorLayout {
        token_axis: Axis::new(name, tokens),
        feature_axes: vec![Axis::new("value", 1)],
    }
}

fn window_stream(
    exp: &Experiment,
    win: &DriftWindow,
    q: usize,
    tokens: usize,
    aggregated: bool,
) -> TensorLayout {
    let mut feature_axes = vec![Axis::new("drift", win.width())];
    if !aggregated {
        feature_axes.push(Axis::new("symbol", q));
    }
    let token = match exp.cfg.copies.bounds().1 {
        1 => "position",
        _ => "copy_position",
    };
    TensorLayout {
        token_axis: Axis::new(token, tokens),
        feature_axes,
    }
}

/// Produces `opts.count` training items from the configured pipeline and
/// writes them with the dataset writer. Item `i` uses grid point
/// `i % points` and trial index `i`, the same seeding as the harness.
pub fn generate_training_set(
    cfg: &ExperimentConfig,
    opts: &DatasetOptions,
) -> Result<Manifest, PipelineError> {
    let exp = Experiment::build(cfg)?;
    let kind = opts.kind.unwrap_or_else(|| infer_kind(&exp));
    let q = exp.field.order();
    // one window for the whole file: the widest over the grid
    let win = exp
        .points
        .iter()
        .map(|ch| exp.window(ch))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .max_by_key(DriftWindow::width)
        .expect("non-empty grid");
    let (m_min, m_max) = cfg.copies.bounds();
    let n_in = exp.n_in;
    let n_out = exp.n_out;
    let mut streams = Vec::new();
    let mut targets = Vec::new();
    let mut flags = Vec::new();
    let mut masks = Vec::new();
    let marker = matches!(exp.inner, InnerCode::Marker { .. });
    if opts.aggregated && q != 2 {
        return Err(shape_err("aggregated windows need a binary alphabet"));
    }
    match kind {
        DatasetKind::Marker | DatasetKind::MarkerMulti => {
            if !marker {
                return Err(shape_err("marker datasets need a marker inner code"));
            }
            let tokens = if kind == DatasetKind::Marker {
                n_in
            } else {
                m_max * n_in
            };
            if kind == DatasetKind::Marker && m_max != 1 {
                return Err(shape_err("single-copy dataset needs copies = 1"));
            }
            streams.push(StreamSpec {
                name: "window".into(),
                layout: window_stream(&exp, &win, q, tokens, opts.aggregated),
            });
            targets.push(Segment::new("inner", n_in));
            if kind == DatasetKind::MarkerMulti {
                flags.push(Segment::new("pad", tokens));
            }
        }
        DatasetKind::Conv => {
            let InnerCode::Conv { spec, .. } = &exp.inner else {
                return Err(shape_err("conv datasets need a convolutional inner code"));
            };
            if m_max != 1 {
                return Err(shape_err("conv datasets are single-copy"));
            }
            let sections = n_out + spec.memory;
            streams.push(StreamSpec {
                name: "symbol_window".into(),
                layout: window_stream(&exp, &win, 2, n_in, false),
            });
            streams.push(StreamSpec {
                name: "state_window".into(),
                layout: TensorLayout {
                    token_axis: Axis::new("section", sections),
                    feature_axes: vec![
                        Axis::new("drift", win.width()),
                        Axis::new("state_output", 1 << spec.n_c()),
                    ],
                },
            });
            targets.push(Segment::new("inner", n_in));
            targets.push(Segment::new("outer", n_out));
            targets.push(Segment::new("termination", spec.memory));
            let (gt, g) = build_cross_masks(spec, n_out);
            masks.push(NamedMask::new("codeword_to_section", &gt));
            masks.push(NamedMask::new("section_to_codeword", &g));
        }
        DatasetKind::Ecct => {
            let code = exp.outer.as_ref().filter(|c| c.field().order() == 2);
            let Some(code) = code else {
                return Err(shape_err("ECCT datasets need a binary outer code"));
            };
            if !marker {
                return Err(shape_err("ECCT datasets are built on marker BCJR outputs"));
            }
            let checks = code.parity_check().rows();
            streams.push(StreamSpec {
                name: "ecct_input".into(),
                layout: column("magnitude_then_syndrome", n_out + checks),
            });
            streams.push(StreamSpec {
                name: "x_phi".into(),
                layout: column("outer_position", n_out),
            });
            targets.push(Segment::new("noise", n_out));
        }
    }
    let header = DatasetHeader {
        kind: serde_json::to_value(kind)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default(),
        field_order: q as u32,
        streams,
        targets,
        flags,
        masks,
        channels: exp.points.clone(),
        seed: cfg.seed,
        codes: CodeIds {
            outer: exp.outer_id(),
            inner: exp.inner_id(),
        },
        extra: serde_json::json!({
            "window": { "d_min": win.d_min, "d_max": win.d_max },
            "copies": { "min": m_min, "max": m_max },
            "pad_value": 1.0 / q as f64,
            "aggregated": opts.aggregated,
            "drop_emission_factor": opts.drop_emission_factor,
            "state_output_bit_order": "bit l of the pattern index is coded bit l of the section",
            "copy_index": "token t belongs to copy t / n_in",
            "drift_factor": cfg.drift_factor,
        }),
    };
    let wopts = WindowOptions {
        drop_emission_factor: opts.drop_emission_factor,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    let mut writer = DatasetWriter::create(&opts.dir, &opts.name, header)?;
    let n_points = exp.points.len();
    let make = |i: usize| -> Result<DatasetItem, PipelineError> {
        let point = i % n_points;
        let ch = exp.points[point];
        let mut rng = exp.rng(point, i as u64);
        let s = exp.sample(&ch, &mut rng)?;
        let (features, targets, flags) = match kind {
            DatasetKind::Marker | DatasetKind::MarkerMulti => {
                let priors = marker_priors::<f64>(exp.layout().expect("marker"), q);
                let mut windows = Vec::with_capacity(s.received.len());
                for r in &s.received {
                    windows.push(if opts.aggregated {
                        build_aggregated_window(r, &priors, &ch, &win)?
                    } else {
                        build_symbol_window_with(r, &priors, &ch, &win, wopts)?
                    });
                }
                let targets = s.inner.iter().map(|x| x.0).collect();
                if kind == DatasetKind::Marker {
                    (vec![windows[0].to_f32()], targets, Vec::new())
                } else {
                    let b = build_multicopy_batch(&windows, m_min, m_max)?;
                    (
                        vec![b.tensor.to_f32()],
                        targets,
                        b.pad.iter().map(|&p| u8::from(p)).collect(),
                    )
                }
            }
            DatasetKind::Conv => {
                let InnerCode::Conv { spec, offset } = &exp.inner else {
                    unreachable!()
                };
                let r = &s.received[0];
                let sym: FeatureTensor<f64> = build_symbol_window_with(
                    r,
                    &PosteriorMatrix::uniform(n_in, 2),
                    &ch,
                    &win,
                    wopts,
                )?;
                let state: FeatureTensor<f64> = build_state_window(r, spec, offset, &ch, &win)?;
                let mut t: Vec<u8> = s.inner.iter().map(|x| x.0).collect();
                t.extend(s.outer.iter().map(|x| x.0));
                t.extend(std::iter::repeat_n(0, spec.memory));
                (vec![sym.to_f32(), state.to_f32()], t, Vec::new())
            }
            DatasetKind::Ecct => {
                let code = exp.outer.as_ref().expect("checked");
                let layout = exp.layout().expect("marker");
                let post = exp
                    .marker_posteriors(&s, &ch, &win)?
                    .map(|p| p.select_rows(&layout.data_positions))
                    .unwrap_or_else(|| PosteriorMatrix::uniform(n_out, 2));
                let f = build_ecct_features(code, &post, Some(&s.outer))?;
                let input = f.input().into_iter().map(|v| v as f32).collect();
                let x_phi = f.x_phi.iter().map(|&v| v as f32).collect();
                (
                    vec![input, x_phi],
                    f.target_noise.expect("true codeword given"),
                    Vec::new(),
                )
            }
        };
        Ok(DatasetItem {
            trial: i as u64,
            point: point as u32,
            features,
            targets,
            flags,
        })
    };
    let mut start = 0;
    while start < opts.count {
        let end = (start + CHUNK).min(opts.count);
        let items: Vec<DatasetItem> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(make)
                .collect::<Result<_, _>>()
        })?;
        for it in &items {
            writer.push(it)?;
        }
        start = end;
    }
    Ok(writer.finish()?)
}
