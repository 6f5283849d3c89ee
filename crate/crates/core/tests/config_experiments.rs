use semiheat_core::config::*;
use semiheat_core::experiments::*;
use semiheat_core::fowler::{Stability, Topology};
use semiheat_core::shooting::Classification;

const Q7: &str = "[potential]\nn = 3\nfamily = \"pure_power\"\nq = [7.0]\n";

fn parse(text: &str, overrides: &[&str]) -> Result<RunConfig, ConfigError> {
    let owned: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    RunConfig::parse(text, &owned)
}

#[test]
fn defaults_fill_every_section() {
    let cfg = parse(Q7, &[]).unwrap();
    assert_eq!(cfg.experiment.barrier, BarrierChoice::GroundStatePair);
    assert_eq!(cfg.output.series_stride, 1);
    assert_eq!(cfg.grid.r_max, 1e3);
    assert_eq!(cfg.spec().unwrap().n(), 3);
}

#[test]
fn overrides_reach_nested_keys() {
    let cfg = parse(
        Q7,
        &["grid.r_max=50", "experiment.barrier=fast_decay_pair", "experiment.alphas=[0.5, 3]", "evolve.fate.decay_floor=1e-6"],
    )
    .unwrap();
    assert_eq!(cfg.grid.r_max, 50.0);
    assert_eq!(cfg.experiment.barrier, BarrierChoice::FastDecayPair);
    assert_eq!(cfg.experiment.alphas, vec![0.5, 3.0]);
    assert_eq!(cfg.evolve.fate.decay_floor, 1e-6);
    // An override also replaces the potential.
    let q5 = parse(Q7, &["potential.q=[5.0]"]).unwrap();
    assert_eq!(q5.spec().unwrap(), semiheat_core::potential::PotentialSpec::pure_power(3, 5.0).unwrap());
}

#[test]
fn malformed_overrides() {
    assert!(matches!(parse(Q7, &["grid.r_max"]), Err(ConfigError::Override(_))));
    assert!(matches!(parse(Q7, &["grid..r_max=3"]), Err(ConfigError::Override(_))));
    assert!(matches!(parse(Q7, &["potential.n.x=3"]), Err(ConfigError::OverridePath { .. })));
    assert!(matches!(parse(Q7, &["grid.bogus=3"]), Err(ConfigError::Syntax(_))));
}

#[test]
fn values_are_validated() {
    let cases: [(&str, &str); 7] = [
        ("grid.h0=-1", "grid"),
        ("solver.rtol=0", "solver"),
        ("weight.nu=0.5", "weight"),
        ("evolve.t_end=0", "evolve"),
        ("experiment.alphas=[]", "experiment.alphas"),
        ("experiment.alpha_pair=[1.0, 1.0]", "experiment.alpha_pair"),
        ("output.series_stride=0", "output.series_stride"),
    ];
    for (item, field) in cases {
        match parse(Q7, &[item]) {
            Err(ConfigError::Value { field: f, .. }) => assert_eq!(f, field, "{item}"),
            other => panic!("{item}: {other:?}"),
        }
    }
    assert!(matches!(parse("[potential]\nn = 2\nfamily = \"pure_power\"\nq = [7.0]\n", &[]), Err(ConfigError::Potential(_))));
    assert!(matches!(parse("not toml [", &[]), Err(ConfigError::Syntax(_))));
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            RunConfig::load(&path, &[]).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 5);
    assert!(matches!(RunConfig::load("no/such/file.toml".as_ref(), &[]), Err(ConfigError::Read { .. })));
}

#[test]
fn exponents_table_for_n12() {
    let cfg = parse("[potential]\nn = 12\nfamily = \"pure_power\"\nq = [5.0]\n", &[]).unwrap();
    let report = exponents(&cfg.spec().unwrap()).unwrap();
    let table = report.table();
    assert!(table.contains("sigma^*    3.926650"), "{table}");
    assert!(table.contains("node l >=  4.926650"), "{table}");
    assert!(table.lines().all(|l| l.len() >= 12));

    let n3 = exponents(&parse(Q7, &[]).unwrap().spec().unwrap()).unwrap();
    assert!(n3.table().contains("sigma^*    inf"));
    assert!(n3.table().contains("2_*        4.000000"));
}

#[test]
fn sweep_classifies_each_height() {
    let cfg = parse(Q7, &[]).unwrap();
    let spec = cfg.spec().unwrap();
    let row = classify_alpha(&spec, 1.0, &cfg.solver).unwrap();
    assert_eq!(row.classification, Classification::GroundStateSlow);
    assert!(row.slow_decay_constant.is_some());

    let q5 = parse(Q7, &["potential.q=[5.0]"]).unwrap();
    let row = classify_alpha(&q5.spec().unwrap(), 1.0, &q5.solver).unwrap();
    assert!(matches!(row.classification, Classification::Crossing { .. }));
}

#[test]
fn q7_portrait() {
    let cfg = parse(Q7, &[]).unwrap();
    let bundle = portrait(&cfg.spec().unwrap(), &cfg).unwrap();
    assert_eq!(bundle.frame_l, 7.0);
    assert!(bundle.fixed_points.iter().all(|f| f.info.stability == Stability::StableFocus));
    assert!(bundle.has_topology(Topology::FigureEight));
    assert!(bundle.has_topology(Topology::Empty));
    let labels: Vec<&str> = bundle.trajectories.iter().map(|t| t.label.as_str()).collect();
    assert!(labels.contains(&"regular_alpha_1") && labels.contains(&"singular"), "{labels:?}");
}

#[test]
fn q5_portrait() {
    let cfg = parse(Q7, &["potential.q=[5.0]"]).unwrap();
    let bundle = portrait(&cfg.spec().unwrap(), &cfg).unwrap();
    assert!(bundle.fixed_points.iter().all(|f| f.info.stability == Stability::UnstableFocus));
}

#[test]
fn barrier_families_from_config() {
    let cfg = parse(Q7, &["experiment.alpha_pair=[1.0, 1.1]"]).unwrap();
    let set = build_barriers(&cfg.spec().unwrap(), &cfg).unwrap();
    assert_eq!(set.len(), 2);
    assert!(barrier_report(&set, (cfg.solver.r_min, cfg.solver.r_max)).passes);

    let chi = parse(Q7, &["potential.q=[5.0]", "experiment.barrier=slow_decay_upper"]).unwrap();
    assert_eq!(build_barriers(&chi.spec().unwrap(), &chi).unwrap().len(), 1);
    let fast_q5 = parse(Q7, &["potential.q=[5.0]", "experiment.barrier=fast_decay_pair"]).unwrap();
    assert!(build_barriers(&fast_q5.spec().unwrap(), &fast_q5).is_err());
}

#[test]
fn dichotomy_jobs_cover_both_grids() {
    let cfg = parse(Q7, &["experiment.alpha_pair=[1.0, 1.1]", "grid.r_max=100"]).unwrap();
    let (set, jobs) = dichotomy_jobs(&cfg.spec().unwrap(), &cfg).unwrap();
    assert_eq!(set.len(), 2);
    let labels: Vec<&str> = jobs.iter().map(|j| j.label.as_str()).collect();
    assert_eq!(labels, ["upper", "lower", "upper_doubled", "lower_doubled"]);
    assert_eq!(jobs[2].grid.r_max, 200.0);
    assert_eq!(jobs[0].expected, Some(Expectation::DecayMonotone));
    assert_eq!(jobs[1].expected, Some(Expectation::BlowUp));
}

#[test]
fn fujita_expectations() {
    let expect = |q: f64, amplitude: f64| {
        let cfg = parse(Q7, &[&format!("potential.q=[{q}]"), &format!("experiment.amplitude={amplitude}"), "experiment.fujita_r_max=20"]).unwrap();
        fujita_job(&cfg.spec().unwrap(), &cfg).unwrap().expected
    };
    assert_eq!(expect(2.6, 0.1), Some(Expectation::BlowUp));
    assert_eq!(expect(8.0 / 3.0, 0.1), Some(Expectation::BlowUp));
    assert_eq!(expect(4.0, 0.1), Some(Expectation::Decayed));
    assert_eq!(expect(4.0, 0.0), Some(Expectation::Steady));
}

#[test]
fn zero_data_is_steady() {
    let cfg = parse(Q7, &["experiment.amplitude=0", "experiment.fujita_r_max=20", "evolve.t_end=5"]).unwrap();
    let job = fujita_job(&cfg.spec().unwrap(), &cfg).unwrap();
    assert!(job.initial.iter().all(|v| *v == 0.0));
    let outcome = job.run().unwrap();
    assert_eq!(outcome.met(), Some(true), "{:?}", outcome.result.fate);
}
