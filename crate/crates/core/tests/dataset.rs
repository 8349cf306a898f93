use idscodec_core::channel::{trial_rng, IdsChannelParams};
use idscodec_core::features::dataset::*;
use idscodec_core::features::{build_cross_masks, Axis, TensorLayout};
use idscodec_core::inner::ConvCodeSpec;
use idscodec_core::pipeline::{
    generate_training_set, DatasetKind, DatasetOptions, ExperimentConfig,
};
use rand::Rng;

fn header(tokens: usize, drift: usize, q: usize) -> DatasetHeader {
    let (gt, g) = build_cross_masks(&ConvCodeSpec::g57(), 3);
    DatasetHeader {
        kind: "marker_multi".into(),
        field_order: q as u32,
        streams: vec![
            StreamSpec {
                name: "window".into(),
                layout: TensorLayout {
                    token_axis: Axis::new("position", tokens),
                    feature_axes: vec![Axis::new("drift", drift), Axis::new("symbol", q)],
                },
            },
            StreamSpec {
                name: "extra".into(),
                layout: TensorLayout {
                    token_axis: Axis::new("t", 3),
                    feature_axes: vec![Axis::new("value", 1)],
                },
            },
        ],
        targets: vec![Segment::new("inner", tokens)],
        flags: vec![Segment::new("pad", tokens)],
        masks: vec![NamedMask::new("a", &gt), NamedMask::new("b", &g)],
        channels: vec![IdsChannelParams::new(0.01, 0.01, 0.012, 2).unwrap()],
        seed: 0xfeed,
        codes: CodeIds {
            outer: "test".into(),
            inner: "marker-001-6".into(),
        },
        extra: serde_json::json!({"note": 1}),
    }
}

fn random_item(h: &DatasetHeader, i: u64) -> DatasetItem {
    let mut rng = trial_rng(77, i);
    DatasetItem {
        trial: rng.gen(),
        point: rng.gen(),
        features: h
            .streams
            .iter()
            .map(|s| (0..s.floats()).map(|_| rng.gen::<f32>()).collect())
            .collect(),
        targets: (0..h.target_len()).map(|_| rng.gen()).collect(),
        flags: (0..h.flag_len()).map(|_| rng.gen_range(0..2)).collect(),
    }
}

#[test]
fn round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let h = header(20, 5, 4);
    let items: Vec<DatasetItem> = (0..1000).map(|i| random_item(&h, i)).collect();
    let mut w = DatasetWriter::create(dir.path(), "rt", h.clone()).unwrap();
    for it in &items {
        w.push(it).unwrap();
    }
    let m = w.finish().unwrap();
    assert_eq!(m.count, 1000);
    assert_eq!(m.version, DATASET_VERSION);
    assert_eq!(m.feature_bytes_per_item, (20 * 5 * 4 + 3) * 4);
    let (m2, back) = read_dataset(dir.path(), "rt").unwrap();
    assert_eq!(m2, m);
    assert_eq!(m2.header.seed, 0xfeed);
    assert_eq!(back.len(), items.len());
    for (a, b) in items.iter().zip(&back) {
        assert_eq!(a.trial, b.trial);
        assert_eq!(a.point, b.point);
        assert_eq!(a.targets, b.targets);
        assert_eq!(a.flags, b.flags);
        for (fa, fb) in a.features.iter().zip(&b.features) {
            assert!(fa.iter().zip(fb).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
    let (gt, _) = build_cross_masks(&ConvCodeSpec::g57(), 3);
    assert_eq!(m2.header.masks[0].mask().unwrap(), gt);
    let paths = dataset_paths(dir.path(), "rt");
    assert_eq!(
        std::fs::metadata(&paths.features).unwrap().len(),
        1000 * ((20 * 5 * 4 + 3) * 4) as u64
    );
    assert_eq!(
        std::fs::metadata(&paths.targets).unwrap().len(),
        1000 * (12 + 20 + 20) as u64
    );
}

#[test]
fn blob_size_is_tokens_times_features_times_four() {
    let dir = tempfile::tempdir().unwrap();
    let mut h = header(144, 11, 2);
    h.streams.truncate(1);
    let mut w = DatasetWriter::create(dir.path(), "one", h.clone()).unwrap();
    w.push(&random_item(&h, 0)).unwrap();
    w.finish().unwrap();
    let len = std::fs::metadata(dataset_paths(dir.path(), "one").features)
        .unwrap()
        .len();
    assert_eq!(len, 144 * 22 * 4);
}

#[test]
fn heterogeneous_items_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let h = header(8, 3, 2);
    let mut w = DatasetWriter::create(dir.path(), "bad", h.clone()).unwrap();
    let mut it = random_item(&h, 1);
    it.features[0].pop();
    assert!(matches!(
        w.push(&it),
        Err(DatasetError::Shape { item: 0, .. })
    ));
    let mut it = random_item(&h, 2);
    it.targets.push(0);
    assert!(matches!(w.push(&it), Err(DatasetError::Shape { .. })));
    let mut it = random_item(&h, 3);
    it.features.pop();
    assert!(matches!(w.push(&it), Err(DatasetError::Shape { .. })));
}

#[test]
fn truncated_blobs_and_versions_are_detected() {
    let dir = tempfile::tempdir().unwrap();
    let h = header(8, 3, 2);
    let mut w = DatasetWriter::create(dir.path(), "t", h.clone()).unwrap();
    for i in 0..3 {
        w.push(&random_item(&h, i)).unwrap();
    }
    w.finish().unwrap();
    let p = dataset_paths(dir.path(), "t");
    let bytes = std::fs::read(&p.features).unwrap();
    std::fs::write(&p.features, &bytes[..bytes.len() - 4]).unwrap();
    assert!(matches!(
        read_dataset(dir.path(), "t"),
        Err(DatasetError::Size { .. })
    ));
    let text = std::fs::read_to_string(&p.manifest)
        .unwrap()
        .replace("\"version\": 1", "\"version\": 99");
    std::fs::write(&p.manifest, text).unwrap();
    assert!(matches!(
        read_manifest(&p.manifest),
        Err(DatasetError::Version(99))
    ));
    assert!(matches!(
        read_dataset(dir.path(), "missing"),
        Err(DatasetError::Io { .. })
    ));
}

fn cfg(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).unwrap()
}

fn opts(dir: &std::path::Path, count: usize, kind: Option<DatasetKind>) -> DatasetOptions {
    DatasetOptions {
        dir: dir.to_path_buf(),
        name: "ds".into(),
        count,
        kind,
        aggregated: false,
        drop_emission_factor: false,
    }
}

#[test]
fn marker_training_set() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(
        r#"{"outer":{"type":"builtin","name":"mackay_96_48"},"inner":{"type":"marker","marker":"001","interval":6},
        "channel":{"p":[0.01,0.03],"p_sub":0.0},"seed":11,"decoder":{"inner":"bcjr"}}"#,
    );
    let m = generate_training_set(&c, &opts(dir.path(), 1000, None)).unwrap();
    assert_eq!(m.count, 1000);
    assert_eq!(m.header.kind, "marker");
    assert_eq!(m.header.target_len(), 144);
    assert_eq!(m.header.seed, 11);
    assert_eq!(m.header.channels.len(), 2);
    let (_, items) = read_dataset(dir.path(), "ds").unwrap();
    let s = &m.header.streams[0];
    assert_eq!(s.layout.token_axis.size, 144);
    assert_eq!(s.layout.feature_axes.last().unwrap().size, 2);
    for (i, it) in items.iter().enumerate() {
        assert_eq!(it.point as usize, i % 2);
        assert_eq!(it.trial, i as u64);
        assert!(it.features[0].iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(it.targets.iter().all(|&b| b < 2));
        // markers 001 after every six data bits
        assert_eq!(&it.targets[6..9], &[0, 0, 1]);
    }
    // regeneration is deterministic
    let dir2 = tempfile::tempdir().unwrap();
    generate_training_set(&c, &opts(dir2.path(), 1000, None)).unwrap();
    let p1 = dataset_paths(dir.path(), "ds");
    let p2 = dataset_paths(dir2.path(), "ds");
    assert_eq!(
        std::fs::read(p1.features).unwrap(),
        std::fs::read(p2.features).unwrap()
    );
    assert_eq!(
        std::fs::read(p1.targets).unwrap(),
        std::fs::read(p2.targets).unwrap()
    );
}

#[test]
fn conv_training_set_targets_and_masks() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(
        r#"{"outer":{"type":"uncoded","n":96,"q":2},"inner":{"type":"conv","polys":"5,7","offset_seed":5},
        "channel":{"p":[0.01],"p_sub":0.012},"decoder":{"inner":"bcjr_conv"}}"#,
    );
    let m = generate_training_set(&c, &opts(dir.path(), 20, None)).unwrap();
    assert_eq!(m.header.kind, "conv");
    assert_eq!(m.header.target_len(), 294);
    assert_eq!(m.header.streams[0].layout.token_axis.size, 196);
    assert_eq!(m.header.streams[1].layout.token_axis.size, 98);
    assert_eq!(m.header.streams[1].layout.feature_axes[1].size, 4);
    assert_eq!((m.header.masks[0].rows, m.header.masks[0].cols), (196, 98));
    assert_eq!((m.header.masks[1].rows, m.header.masks[1].cols), (98, 196));
    let (_, items) = read_dataset(dir.path(), "ds").unwrap();
    for it in &items {
        assert_eq!(&it.targets[292..], &[0, 0]);
    }
}

#[test]
fn multicopy_and_ecct_training_sets() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(
        r#"{"outer":{"type":"builtin","name":"mackay_96_48"},"inner":{"type":"marker","marker":"001","interval":6},
        "channel":{"p":[0.01],"p_sub":0.0},"copies":[1,3],"decoder":{"inner":"bcjr_joint"}}"#,
    );
    let m = generate_training_set(&c, &opts(dir.path(), 30, None)).unwrap();
    assert_eq!(m.header.kind, "marker_multi");
    assert_eq!(m.header.flag_len(), 3 * 144);
    let (_, items) = read_dataset(dir.path(), "ds").unwrap();
    let mut seen = [false; 3];
    for it in &items {
        let real = it.flags.iter().filter(|&&f| f == 0).count();
        assert_eq!(real % 144, 0);
        seen[real / 144 - 1] = true;
        assert!(
            it.flags[..real].iter().all(|&f| f == 0) && it.flags[real..].iter().all(|&f| f == 1)
        );
    }
    assert!(seen.iter().all(|&s| s));

    let c = cfg(
        r#"{"outer":{"type":"builtin","name":"mackay_96_48"},"inner":{"type":"marker","marker":"001","interval":6},
        "channel":{"p":[0.01],"p_sub":0.0},"decoder":{"inner":"bcjr"}}"#,
    );
    let m = generate_training_set(
        &c,
        &DatasetOptions {
            name: "ecct".into(),
            ..opts(dir.path(), 10, Some(DatasetKind::Ecct))
        },
    )
    .unwrap();
    assert_eq!(m.header.streams[0].layout.token_axis.size, 96 + 48);
    assert_eq!(m.header.target_len(), 96);
    let (_, items) = read_dataset(dir.path(), "ecct").unwrap();
    for it in &items {
        let syn = &it.features[0][96..];
        assert!(syn.iter().all(|&v| v == 1.0 || v == -1.0));
        assert!(it.features[0][..96]
            .iter()
            .all(|&v| (0.0..=1.0).contains(&v)));
    }
}

#[test]
fn dataset_kind_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(
        r#"{"outer":{"type":"uncoded","n":12,"q":4},"inner":{"type":"marker","marker":"32","interval":6},
        "channel":{"p":[0.01],"p_sub":0.0},"decoder":{"inner":"bcjr"}}"#,
    );
    let e = generate_training_set(&c, &opts(dir.path(), 2, Some(DatasetKind::Conv))).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    let e = generate_training_set(
        &c,
        &DatasetOptions {
            aggregated: true,
            ..opts(dir.path(), 2, None)
        },
    )
    .unwrap_err();
    assert_eq!(e.exit_code(), 2);
}
