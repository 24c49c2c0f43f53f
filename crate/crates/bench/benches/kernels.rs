use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use noisy_rnn::data::image_to_stroke;
use noisy_rnn::nn::batch::{backward_batch, forward_batch, infer_batch};
use noisy_rnn::tensor::matvec;
use noisy_rnn::{Arch, Matrix, NoiseRng, Vector};
use noisy_rnn_bench::{inputs, model, ring_image};

fn bench_matvec(c: &mut Criterion) {
    let mut group = c.benchmark_group("matvec");
    for (rows, cols) in [(128, 156), (512, 156), (512, 130)] {
        let mut rng = NoiseRng::new(1, 1);
        let w = Matrix::<f32>::from_fn(rows, cols, |_, _| rng.uniform::<f32>() - 0.5);
        let x = Vector::from((0..cols).map(|_| rng.uniform::<f32>()).collect::<Vec<_>>());
        group.throughput(Throughput::Elements((rows * cols) as u64));
        group.bench_function(BenchmarkId::from_parameter(format!("{rows}x{cols}")), |b| {
            b.iter(|| matvec(black_box(&w), black_box(&x)).unwrap())
        });
    }
    group.finish();
}

fn bench_gaussian(c: &mut Criterion) {
    let mut group = c.benchmark_group("gaussian");
    // One LSTM-rows pass worth of noise: 4 gates × 128 × 28 steps + 10.
    let n = 4 * 128 * 28 + 10;
    let mut out = vec![0.0f32; n];
    let mut rng = NoiseRng::new(3, 3);
    group.throughput(Throughput::Elements(n as u64));
    group.bench_function("lstm_rows_pass", |b| {
        b.iter(|| rng.fill_gaussian(&mut out, 1.0))
    });
    group.finish();
}

fn bench_batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("batch");
    group.sample_size(10);
    let batch = 128;
    for arch in Arch::ALL {
        let m = model(arch);
        let data = inputs(arch, batch);
        let refs: Vec<&[f32]> = data.iter().map(Vec::as_slice).collect();
        let labels: Vec<u8> = (0..batch).map(|i| (i % 10) as u8).collect();
        group.throughput(Throughput::Elements(batch as u64));
        group.bench_function(BenchmarkId::new("infer_noisy", arch), |b| {
            b.iter(|| {
                let mut rngs: Vec<NoiseRng> =
                    (0..batch).map(|i| NoiseRng::new(5, i as u64)).collect();
                infer_batch(&m, &refs, 1.0, Some(&mut rngs)).unwrap()
            })
        });
        group.bench_function(BenchmarkId::new("train_step", arch), |b| {
            b.iter(|| {
                let mut rngs: Vec<NoiseRng> =
                    (0..batch).map(|i| NoiseRng::new(5, i as u64)).collect();
                let trace = forward_batch(&m, &refs, 1.0, Some(&mut rngs)).unwrap();
                backward_batch(&m, &trace, &labels).unwrap()
            })
        });
    }
    group.finish();
}

fn bench_stroke(c: &mut Criterion) {
    let img = ring_image();
    c.bench_function("image_to_stroke", |b| {
        b.iter(|| image_to_stroke(black_box(&img)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_matvec,
    bench_gaussian,
    bench_batch,
    bench_stroke
);
criterion_main!(benches);
