use std::path::Path;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use relsyn::cegis::{verify, Overrides, SynthesisProblem, Verdict};
use relsyn::dsl::parse_program;
use relsyn::exec::ExecMode;
use relsyn::fta::{build_contexts, BuildConfig};
use relsyn::lang::{Interpretation, Symbol};
use relsyn::Value;

const MODES: [(&str, ExecMode); 2] = [
    ("parallel", ExecMode::Parallel),
    ("sequential", ExecMode::Sequential),
];

fn base64() -> (SynthesisProblem, Interpretation) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks/base64.spec");
    let problem = SynthesisProblem::load(&path, &Overrides::default()).expect("base64 spec");
    let programs = [
        (
            "encode",
            "padToMultiple(enc64(reshape(encUTF8(codePoint(x)),6)),4,'=')",
        ),
        (
            "decode",
            "asUnicode(decUTF8(invReshape(dec64(removePad(x,'=')),6)))",
        ),
    ];
    let interp = programs
        .iter()
        .map(|(f, text)| {
            let t = problem
                .targets
                .iter()
                .find(|t| t.name.as_str() == *f)
                .expect("declared");
            (
                Symbol::new(f),
                parse_program(text, &t.grammar).expect("program parses"),
            )
        })
        .collect();
    (problem, interp)
}

fn bench_verify(c: &mut Criterion) {
    let (problem, interp) = base64();
    let mut group = c.benchmark_group("verify_base64");
    group.sample_size(10);
    for (name, mode) in MODES {
        let config = relsyn::cegis::SynthesisConfig {
            exec: mode,
            ..problem.config.clone()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| assert!(verify(&interp, &problem.spec, &config) == Verdict::Valid))
        });
    }
    group.finish();
}

fn bench_fta(c: &mut Criterion) {
    let (problem, _) = base64();
    let encoder = problem
        .targets
        .iter()
        .find(|t| t.name.as_str() == "encode")
        .expect("declared");
    let inputs: Vec<Vec<Value>> = ["", "M", "Ma", "Man", "\u{00E9}", "ab+"]
        .iter()
        .map(|s| vec![Value::Str(Arc::from(*s))])
        .collect();
    let mut group = c.benchmark_group("fta_encoder");
    group.sample_size(10);
    for (name, mode) in MODES {
        let cfg = BuildConfig {
            depth_bound: encoder.depth_bound,
            exec: mode,
            ..BuildConfig::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                build_contexts(encoder.grammar.clone(), inputs.clone(), &cfg)
                    .expect("within ceiling")
                    .state_count()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_verify, bench_fta);
criterion_main!(benches);
