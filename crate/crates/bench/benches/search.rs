use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use conflictbn::format::{emit_network, read_network};
use conflictbn::{run_anytime, top_m_worlds, QueryFormula, SearchParams, Strategy};
use conflictbn_bench::{double_error, single_error};

const STRATEGIES: [Strategy; 2] = [Strategy::BestFirst, Strategy::IterativeDeepening];

fn top5_by_size(c: &mut Criterion) {
    let mut group = c.benchmark_group("top5_single_error");
    group.sample_size(20);
    for n in [16, 32, 64] {
        let (adder, obs) = single_error(n, n / 2);
        for strategy in STRATEGIES {
            let params = SearchParams::default().with_strategy(strategy);
            group.bench_with_input(BenchmarkId::new(strategy.to_string(), n), &n, |b, _| {
                b.iter(|| top_m_worlds(&adder.network, &obs, 5, &params).unwrap())
            });
        }
    }
    group.finish();
}

fn conflicts_on_off(c: &mut Criterion) {
    let mut group = c.benchmark_group("top5_conflicts_64bit_k48");
    group.sample_size(10);
    let (adder, obs) = single_error(64, 48);
    for on in [true, false] {
        let params = SearchParams::default()
            .with_strategy(Strategy::IterativeDeepening)
            .with_conflicts(on);
        group.bench_function(if on { "on" } else { "off" }, |b| {
            b.iter(|| top_m_worlds(&adder.network, &obs, 5, &params).unwrap())
        });
    }
    group.finish();
}

fn double_fault(c: &mut Criterion) {
    let (adder, obs) = double_error(32, 10, 22);
    let params = SearchParams::default();
    c.bench_function("top25_double_error_32bit", |b| {
        b.iter(|| top_m_worlds(&adder.network, &obs, 25, &params).unwrap())
    });
}

fn anytime_posterior(c: &mut Criterion) {
    let (adder, obs) = single_error(100, 50);
    let query = QueryFormula::parse("x2ok_50=stuck1", &adder.network).unwrap();
    let mut params = SearchParams::default();
    params.stop.max_error = Some(0.005);
    let mut group = c.benchmark_group("posterior_100bit");
    group.sample_size(10);
    group.bench_function("max_error_0.005", |b| {
        b.iter(|| run_anytime(&adder.network, &obs, &query, &params, |_| {}).unwrap())
    });
    group.finish();
}

fn parse_network(c: &mut Criterion) {
    let (adder, _) = single_error(100, 50);
    let text = emit_network(&adder.network);
    c.bench_function("parse_100bit_adder", |b| {
        b.iter(|| read_network(black_box(&text)).unwrap())
    });
}

criterion_group!(
    benches,
    top5_by_size,
    conflicts_on_off,
    double_fault,
    anytime_posterior,
    parse_network
);
criterion_main!(benches);
