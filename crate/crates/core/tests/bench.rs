use std::sync::OnceLock;

use igprm_core::bench::{
    aggregate_rows, measure_runtime, read_rows_csv, run_ablation, run_benchmark, svg_document, write_rows_csv,
    AblationConfig, AblationCosts, BenchConfig, BenchError, Method, Row, PALETTE,
};
use igprm_core::costnet::{Model, NetSpec};
use igprm_core::dataset::{build_dataset, Dataset, DatasetConfig, SplitCounts};
use igprm_core::envgen::{CellClass, EnvKind, EnvironmentMap};
use igprm_core::grid::Point;
use igprm_core::instructions::SplitTag;
use igprm_core::planner::{plan, PlannerParams};

fn dataset() -> &'static Dataset {
    static DS: OnceLock<Dataset> = OnceLock::new();
    DS.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let cfg = DatasetConfig {
            counts: SplitCounts {
                train: 1,
                val: 1,
                test: 8,
            },
            seed: 3,
            ..DatasetConfig::default()
        };
        build_dataset(&cfg, &dir.path().join("ds")).unwrap()
    })
}

fn model() -> &'static Model {
    static M: OnceLock<Model> = OnceLock::new();
    M.get_or_init(|| Model::random(NetSpec::new(16).unwrap(), 1))
}

fn without_clock(rows: &[Row]) -> Vec<Row> {
    rows.iter()
        .cloned()
        .map(|mut r| {
            r.wall_clock_ms = 0.0;
            r
        })
        .collect()
}

#[test]
fn grid_shape() {
    let cfg = BenchConfig {
        methods: vec![Method::IgprmOracle, Method::PrmBaseline],
        ..BenchConfig::default()
    };
    let r = run_benchmark(dataset(), None, &cfg).unwrap();
    assert_eq!(r.rows.len(), 8 * 2 * 3);
    for split in [SplitTag::TestKnown, SplitTag::TestUnknown] {
        assert_eq!(r.aggregates.iter().filter(|a| a.split == split).count(), 6);
    }
    assert!(r.aggregate(Method::IgprmOracle, 150, SplitTag::TestKnown).is_some());
}

#[test]
fn empty_and_missing_inputs() {
    let cfg = BenchConfig {
        trials_per_instance: 0,
        methods: vec![Method::PrmBaseline],
        ..BenchConfig::default()
    };
    assert!(matches!(run_benchmark(dataset(), None, &cfg), Err(BenchError::EmptyReport(_))));
    assert!(matches!(
        run_benchmark(dataset(), None, &BenchConfig::default()),
        Err(BenchError::MissingWeights)
    ));
}

#[test]
fn deterministic_and_baseline_ignores_weights() {
    let cfg = BenchConfig {
        node_counts: vec![50, 150],
        seed: 9,
        ..BenchConfig::default()
    };
    let a = run_benchmark(dataset(), Some(model()), &cfg).unwrap();
    let b = run_benchmark(dataset(), Some(model()), &cfg).unwrap();
    assert_eq!(without_clock(&a.rows), without_clock(&b.rows));

    let baseline_only = BenchConfig {
        methods: vec![Method::PrmBaseline],
        ..cfg.clone()
    };
    let c = run_benchmark(dataset(), None, &baseline_only).unwrap();
    let from_a: Vec<Row> = a.rows.iter().filter(|r| r.method == Method::PrmBaseline).cloned().collect();
    assert_eq!(without_clock(&from_a), without_clock(&c.rows));
}

#[test]
fn aggregates_match_csv_recomputation() {
    let cfg = BenchConfig {
        methods: vec![Method::IgprmOracle, Method::PrmBaseline],
        trials_per_instance: 2,
        ..BenchConfig::default()
    };
    let r = run_benchmark(dataset(), None, &cfg).unwrap();
    let mut buf = Vec::new();
    write_rows_csv(&r.rows, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with(
        "instance_id,method,n_nodes,success,spl_term,dtw,produced_length,hidden_cost,wall_clock_ms,"
    ));
    let back = read_rows_csv(buf.as_slice()).unwrap();
    assert_eq!(back, r.rows);
    let again = aggregate_rows(&back);
    for (x, y) in again.iter().zip(&r.aggregates) {
        assert_eq!((x.method, x.n_nodes, x.split, x.runs), (y.method, y.n_nodes, y.split, y.runs));
        assert!((x.mean_spl - y.mean_spl).abs() < 1e-12);
        assert!((x.success_rate - y.success_rate).abs() < 1e-12);
    }
}

#[test]
fn ablation_grid_and_oracle_flatness() {
    let cfg = AblationConfig::default();
    let rows = run_ablation(dataset(), AblationCosts::Oracle, &cfg).unwrap();
    assert_eq!(rows.len(), 5 * 2);
    for split in [SplitTag::TestKnown, SplitTag::TestUnknown] {
        let cell: Vec<_> = rows.iter().filter(|r| r.split == split).collect();
        assert!(cell.iter().all(|r| r.mean_spl == cell[0].mean_spl && r.mean_dtw == cell[0].mean_dtw));
    }

    let models = [8, 16]
        .into_iter()
        .map(|d| (d, Model::random(NetSpec::new(d).unwrap(), d as u64)))
        .collect();
    let cfg = AblationConfig {
        dims: vec![8, 16],
        ..AblationConfig::default()
    };
    let rows = run_ablation(dataset(), AblationCosts::Models(&models), &cfg).unwrap();
    assert_eq!(rows.len(), 4);
    let cfg = AblationConfig {
        dims: vec![32],
        ..AblationConfig::default()
    };
    assert!(matches!(
        run_ablation(dataset(), AblationCosts::Models(&models), &cfg),
        Err(BenchError::MissingWeights)
    ));
}

#[test]
fn runtime_single_shot() {
    let inst = &dataset().instances[0];
    let emb = vec![0.1f32; 16];
    let r = measure_runtime(inst, &emb, model(), 300, 1, 0).unwrap();
    assert_eq!(r.repeats, 1);
    assert!(r.predict_ms > 0.0 && r.plan_ms > 0.0);
    assert!(measure_runtime(inst, &emb, model(), 300, 0, 0).is_err());
}

fn svg_root(doc: &str) -> roxmltree::Document<'_> {
    roxmltree::Document::parse(doc).expect("well-formed XML")
}

#[test]
fn svg_is_well_formed_with_legend_colours() {
    let inst = &dataset().instances[0];
    let res = plan(&inst.env, &inst.gt_cost, inst.start, inst.goal, &PlannerParams::with_nodes(60, 1)).unwrap();
    let path = res.path.as_ref().map(|p| p.points.as_slice());
    let doc = svg_document(&inst.env, Some(&res.roadmap), path, inst.start, inst.goal);
    let xml = svg_root(&doc);
    let fills: Vec<&str> = xml.descendants().filter_map(|n| n.attribute("fill")).collect();
    assert!(fills.contains(&PALETTE.wall));
    assert!(fills.contains(&PALETTE.start) && fills.contains(&PALETTE.goal));
    let lines = xml.descendants().filter(|n| n.has_tag_name("line")).count();
    assert_eq!(lines, res.roadmap.edges().len());
    let roadmap = xml.descendants().find(|n| n.attribute("id") == Some("roadmap")).unwrap();
    assert_eq!(roadmap.attribute("stroke"), Some(PALETTE.edge));
    if path.is_some() {
        let pl = xml.descendants().find(|n| n.attribute("id") == Some("path")).unwrap();
        assert_eq!(pl.attribute("stroke"), Some(PALETTE.path));
    }
}

#[test]
fn svg_empty_roadmap_has_only_obstacles_and_markers() {
    let mut env = EnvironmentMap::filled(16, 16, CellClass::Free, EnvKind::Indoor).unwrap();
    env.set(3, 3, CellClass::StepLow);
    env.set(4, 3, CellClass::StepHigh);
    env.set(5, 3, CellClass::Wall);
    let doc = svg_document(&env, None, None, Point::new(0.5, 0.5), Point::new(15.5, 15.5));
    let xml = svg_root(&doc);
    assert_eq!(xml.descendants().filter(|n| n.has_tag_name("line")).count(), 0);
    assert_eq!(xml.descendants().filter(|n| n.has_tag_name("polyline")).count(), 0);
    let fills: Vec<&str> = xml.descendants().filter_map(|n| n.attribute("fill")).collect();
    for c in [PALETTE.wall, PALETTE.step_low, PALETTE.step_high, PALETTE.start, PALETTE.goal] {
        assert!(fills.contains(&c), "{c}");
    }
    assert_eq!(xml.descendants().filter(|n| n.has_tag_name("circle")).count(), 2);
}
