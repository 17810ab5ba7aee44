use kfw::bench::BenchmarkSpec;
use kfw::solver::{Algorithm, SolverConfig};
use kfw::subsolver::LineSearchMode;
use kfw_cli::config::{
    parse_config, BenchProblem, OutputConfig, ProblemConfig, ProblemSource, RunConfig, Scale,
    SolverEntry,
};
use proptest::prelude::*;
use std::path::PathBuf;

#[test]
fn minimal_config_fills_defaults() {
    let cfg = parse_config("problem.name = lasso\nsolver.algorithm = kfw\nsolver.k = 20\n").unwrap();
    let ProblemSource::Bench(b) = &cfg.problem.source else {
        panic!("built-in problem expected")
    };
    assert_eq!(b.name, "lasso");
    assert_eq!(b.scale, Scale::Desk);
    assert_eq!(b.seed, 0);
    assert!(b.overrides.is_empty());
    assert_eq!(b.spec().unwrap(), BenchmarkSpec::desk("lasso", 0).unwrap());
    assert_eq!(cfg.problem.lipschitz, None);

    assert_eq!(cfg.solvers.len(), 1);
    assert_eq!(cfg.solvers[0].label, "kfw_k20");
    let expected = SolverConfig {
        algorithm: Algorithm::Kfw,
        k: 20,
        ..SolverConfig::default()
    };
    assert_eq!(cfg.solvers[0].config, expected);
    assert_eq!(expected.max_iter, 1000);
    assert_eq!(expected.rel_change_tol, 1e-6);
    assert_eq!(cfg.output, OutputConfig::default());
}

#[test]
fn non_numeric_k_is_a_type_error_naming_the_key() {
    let errs = parse_config("problem.name = lasso\nsolver.algorithm = kfw\nsolver.k = abc\n").unwrap_err();
    assert_eq!(errs.len(), 1);
    assert_eq!(errs[0].key, "solver.k");
    assert_eq!(errs[0].line, 3);
    assert!(errs[0].message.contains("'abc'"), "{}", errs[0].message);
    assert!(errs[0].to_string().starts_with("line 3: solver.k:"));
}

#[test]
fn all_errors_are_collected_with_lines() {
    let text = "\
problem.name = lasso
problem.colour = red
solver[0].algorithm = newton
solver[0].max_iter = -1
output.jobs = 0
output.certify = maybe
bogus = 1
no equals sign
";
    let errs = parse_config(text).unwrap_err();
    let found: Vec<(usize, &str)> = errs.iter().map(|e| (e.line, e.key.as_str())).collect();
    assert_eq!(
        found,
        [
            (8, "no equals sign"),
            (7, "bogus"),
            (2, "problem.colour"),
            (3, "solver[0].algorithm"),
            (4, "solver[0].max_iter"),
            (5, "output.jobs"),
            (6, "output.certify"),
        ]
    );
}

#[test]
fn missing_required_fields_are_reported() {
    let errs = parse_config("solver[0].k = 3\n").unwrap_err();
    let keys: Vec<&str> = errs.iter().map(|e| e.key.as_str()).collect();
    assert_eq!(keys, ["problem.name", "solver[0].algorithm"]);
    assert!(errs.iter().all(|e| e.line == 0));
}

#[test]
fn text_round_trip_of_a_hand_written_config() {
    let text = "\
problem.name = group_lasso
problem.scale = paper
problem.seed = 9
problem.noise = 0.001
problem.lipschitz = 2.5e3
solver[0].algorithm = fw
solver[1].algorithm = kfw_adaptive
solver[1].k_max = 64
solver[1].line_search = bisection
solver[2].algorithm = lkfw
solver[2].memory = 7
solver[2].label = lk
output.dir = /tmp/somewhere
output.jobs = 3
";
    let cfg = parse_config(text).unwrap();
    let again = parse_config(&cfg.to_text()).unwrap();
    assert_eq!(again, cfg);
    assert_eq!(again.to_text(), cfg.to_text());
}

fn real() -> impl Strategy<Value = f64> {
    prop_oneof![
        Just(0.0),
        1e-12f64..1.0,
        (0.0f64..1.0).prop_map(|v| v * 1e-300),
        (1.0f64..1e6).prop_map(|v| 1.0 / v),
    ]
}

fn bench() -> impl Strategy<Value = BenchProblem> {
    (
        prop::sample::select(BenchmarkSpec::NAMES.to_vec()),
        any::<bool>(),
        any::<u64>(),
        prop::collection::vec((any::<prop::sample::Index>(), 1usize..500, real()), 0..4),
    )
        .prop_map(|(name, paper, seed, picks)| {
            let spec = BenchmarkSpec::desk(name, 0).unwrap();
            let params = spec.params();
            let mut overrides: Vec<(String, String)> = Vec::new();
            for (ix, count, r) in picks {
                let (key, current) = ix.get(&params);
                if key == &"seed" || overrides.iter().any(|(k, _)| k == key) {
                    continue;
                }
                let value = if current.parse::<usize>().is_ok() {
                    count.to_string()
                } else {
                    format!("{r:?}")
                };
                overrides.push((key.to_string(), value));
            }
            BenchProblem {
                name: name.to_string(),
                scale: if paper { Scale::Paper } else { Scale::Desk },
                seed,
                overrides,
            }
        })
}

fn solver() -> impl Strategy<Value = SolverConfig> {
    (
        prop::sample::select(Algorithm::ALL.to_vec()),
        1usize..200,
        0usize..5000,
        (real(), real()),
        1.01f64..8.0,
        (prop::option::of(1usize..300), prop::option::of(0usize..30)),
        any::<u64>(),
        any::<bool>(),
        (1usize..50_000, 1e-14f64..1e-2, 1e-14f64..1e-2),
    )
        .prop_map(|(algorithm, k, max_iter, (rel, gap), factor, (k_max, memory), seed, bisect, apg)| {
            let mut c = SolverConfig::new(algorithm, k);
            c.max_iter = max_iter;
            c.rel_change_tol = rel;
            c.fw_gap_tol = gap;
            c.adaptive_factor = factor;
            c.k_max = k_max;
            c.memory = memory;
            c.seed = seed;
            if bisect {
                c.line_search = LineSearchMode::Bisection;
            }
            c.apg.max_inner = apg.0;
            c.apg.rel_tol = apg.1;
            c.apg.step_tol = apg.2;
            c
        })
}

fn run_config() -> impl Strategy<Value = RunConfig> {
    (
        bench(),
        prop::option::of(1e-3f64..1e6),
        prop::collection::vec(solver(), 1..5),
        (1usize..16, any::<bool>(), real(), 0usize..1000, "[a-z][a-z0-9_/]{0,12}"),
    )
        .prop_map(|(bench, lipschitz, solvers, (jobs, certify, rank_tol, samples, dir))| RunConfig {
            problem: ProblemConfig {
                source: ProblemSource::Bench(bench),
                lipschitz,
            },
            solvers: solvers
                .into_iter()
                .enumerate()
                .map(|(i, config)| SolverEntry {
                    label: format!("{}_{i}", config.algorithm),
                    config,
                })
                .collect(),
            output: OutputConfig {
                dir: PathBuf::from(dir),
                jobs,
                certify,
                rank_tol,
                growth_samples: samples,
            },
        })
}

proptest! {
    #[test]
    fn serialized_configs_reparse_to_equal_configs(cfg in run_config()) {
        let text = cfg.to_text();
        let parsed = parse_config(&text);
        prop_assert!(parsed.is_ok(), "{:?}\n{}", parsed.err(), text);
        let parsed = parsed.unwrap();
        prop_assert_eq!(&parsed, &cfg);
        prop_assert_eq!(parse_config(&parsed.to_text()).unwrap(), parsed);
    }
}
