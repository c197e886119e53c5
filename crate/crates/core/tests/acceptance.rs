//! Exit criteria. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use swarm_forecast::cli;
use swarm_forecast::experiments::{
    accuracy_percent, build_objective, predict_horizon, relative_error, train_swarm_hybrid, ExperimentConfig,
    ForecastModel, HybridConfig, Trainer,
};
use swarm_forecast::nn::{backprop, init_params, mse_loss, NetworkParams, Sample, Topology};
use swarm_forecast::sample::{sample_series, SAMPLE_CSV};
use swarm_forecast::swarm::{inertia_weight, pso_iteration, sphere, Objective, PSOConfig, Swarm, Variant};
use swarm_forecast::timeseries::{split_train_test, NormalizationParams, TimeSeries, YearMonth};

type Check = Result<String, String>;
type Trace = (Vec<f64>, Vec<f64>);
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn split_sample() -> (TimeSeries, TimeSeries) {
    split_train_test(&sample_series(), "2015-01".parse().unwrap()).unwrap()
}

fn metric_fidelity() -> Check {
    let table1 = [(36.82, 36.18, 1.739), (36.87, 35.86, 2.734), (36.84, 36.49, 0.947), (35.16, 36.19, -2.930)];
    let mut worst_re: f64 = 0.0;
    for (t, p, expected) in table1 {
        let got = relative_error(t, p).map_err(|e| e.to_string())?;
        worst_re = worst_re.max((got - expected).abs());
        ensure((got - expected).abs() <= 0.01, format!("relative_error({t}, {p}) = {got:.4}, expected {expected}"))?;
    }
    let table4 = [(36.22, 36.10, 99.7), (36.67, 36.76, 99.8), (34.23, 34.03, 99.4), (36.36, 36.86, 98.6), (35.38, 35.34, 99.9)];
    let mut worst_acc: f64 = 0.0;
    for (t, p, expected) in table4 {
        let got = accuracy_percent(t, p).map_err(|e| e.to_string())?;
        worst_acc = worst_acc.max((got - expected).abs());
        ensure((got - expected).abs() <= 0.05, format!("accuracy_percent({t}, {p}) = {got:.4}, expected {expected}"))?;
    }
    Ok(format!("max |dev| relative_error {worst_re:.4} pp, accuracy {worst_acc:.4} pp"))
}

fn inertia_schedule() -> Check {
    let cfg = PSOConfig { omega0: 0.9, sigma: 0.8, k_max: 1000, ..PSOConfig::default() };
    ensure(inertia_weight(0, &cfg) == 0.9, format!("w(0) = {}", inertia_weight(0, &cfg)))?;
    let end = inertia_weight(1000, &cfg);
    ensure((end - 0.55805).abs() <= 1e-5, format!("w(k_max) = {end}"))?;
    for k in 0..1000 {
        ensure(inertia_weight(k + 1, &cfg) < inertia_weight(k, &cfg), format!("not decreasing at k={k}"))?;
    }
    Ok(format!("w(0) = 0.9, w(1000) = {end:.6}, strictly decreasing"))
}

fn gradient_correctness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let topo = Topology::new(rng.gen_range(1..=6), rng.gen_range(1..=4), rng.gen_range(1..=2)).unwrap();
        let params = init_params(topo, rng.gen(), 1.0).unwrap();
        let data: Vec<Sample> = (0..5)
            .map(|_| Sample {
                inputs: (0..topo.input_len).map(|_| rng.gen_range(0.0..1.0)).collect(),
                targets: (0..topo.output_len).map(|_| rng.gen_range(0.0..1.0)).collect(),
            })
            .collect();
        let analytic = backprop(&params, &data).unwrap();
        let flat = params.flatten();
        for (i, &a) in analytic.0.as_slice().iter().enumerate() {
            let shifted = |delta: f64| {
                let mut v = flat.clone();
                v[i] += delta;
                mse_loss(&NetworkParams::unflatten(topo, v).unwrap(), &data).unwrap()
            };
            let numeric = (shifted(step) - shifted(-step)) / (2.0 * step);
            let scale = a.abs().max(numeric.abs());
            let dev = if scale == 0.0 { 0.0 } else { (a - numeric).abs() / scale };
            worst = worst.max(dev);
        }
    }
    ensure(worst < 1e-6, format!("max relative deviation {worst:e}"))?;
    Ok(format!("max relative deviation {worst:.2e} over 100 instances"))
}

/// Runs `iterations` sweeps checking every invariant after each one, and
/// returns the trace plus the final best position for determinism checks.
fn checked_run(objective: &dyn Objective, cfg: &PSOConfig, variant: Variant, iterations: usize) -> Result<Trace, String> {
    let mut swarm = Swarm::init(objective, cfg).map_err(|e| e.to_string())?;
    let cap = cfg.velocity_cap();
    let mut trace = vec![swarm.global_best_fitness];
    for k in 0..iterations {
        pso_iteration(&mut swarm, objective, cfg, variant).map_err(|e| e.to_string())?;
        let prev = *trace.last().unwrap();
        ensure(swarm.global_best_fitness <= prev, format!("{variant} seed {} k={k}: best rose", cfg.seed))?;
        for p in &swarm.particles {
            ensure(
                p.position.iter().all(|z| (cfg.z_min..=cfg.z_max).contains(z)),
                format!("{variant} seed {}: position outside box", cfg.seed),
            )?;
            ensure(p.velocity.iter().all(|v| v.abs() <= cap), format!("{variant} seed {}: |v| > cap", cfg.seed))?;
        }
        trace.push(swarm.global_best_fitness);
    }
    Ok((trace, swarm.global_best))
}

fn optimizer_invariants() -> Check {
    let (train, _) = split_sample();
    let exp = ExperimentConfig::default();
    let dataset = exp.training_set(&train).unwrap();
    let nn_objective = build_objective(exp.topology().unwrap(), &dataset).unwrap();
    let sphere10 = sphere(10);
    let objectives: [(&str, &dyn Objective); 2] = [("sphere", &sphere10), ("network", &nn_objective)];
    let mut runs = 0;
    for (name, objective) in objectives {
        for variant in [Variant::Vanilla, Variant::Inertia, Variant::Mpso] {
            for seed in 0..10 {
                let cfg = PSOConfig { seed, target_fitness: 0.0, ..PSOConfig::default() };
                let first = checked_run(objective, &cfg, variant, 200).map_err(|e| format!("{name}: {e}"))?;
                let second = checked_run(objective, &cfg, variant, 200).map_err(|e| format!("{name}: {e}"))?;
                ensure(first == second, format!("{name} {variant} seed {seed}: runs differ"))?;
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} runs x 200 sweeps: monotone, bounded, bit-identical on repeat"))
}

fn swarm_only() -> HybridConfig {
    HybridConfig { bp_refine: false, ..HybridConfig::default() }
}

fn mpso_dominance() -> Check {
    let (train, _) = split_sample();
    let exp = ExperimentConfig { hybrid: swarm_only(), ..ExperimentConfig::default() };
    let dataset = exp.training_set(&train).unwrap();
    let topo = exp.topology().unwrap();
    let mut wins = 0;
    let (mut it_mpso, mut it_pso) = (Vec::new(), Vec::new());
    for seed in 0..10 {
        let pso = train_swarm_hybrid(&dataset, topo, &exp.hybrid, Variant::Inertia, seed).map_err(|e| e.to_string())?;
        let mpso = train_swarm_hybrid(&dataset, topo, &exp.hybrid, Variant::Mpso, seed).map_err(|e| e.to_string())?;
        if mpso.trained.final_fitness <= pso.trained.final_fitness {
            wins += 1;
        }
        it_pso.push(pso.trained.iterations_used as f64);
        it_mpso.push(mpso.trained.iterations_used as f64);
    }
    let (m_mpso, m_pso) = (swarm_forecast::experiments::median(&it_mpso), swarm_forecast::experiments::median(&it_pso));
    ensure(wins >= 7, format!("MPSO-BP <= PSO-BP on only {wins}/10 seeds"))?;
    ensure(m_mpso <= m_pso, format!("median iterations MPSO-BP {m_mpso} > PSO-BP {m_pso}"))?;
    Ok(format!("MPSO-BP <= PSO-BP on {wins}/10 seeds; median iterations {m_mpso} vs {m_pso}"))
}

fn end_to_end() -> Check {
    let (train, test) = split_sample();
    ensure(train.len() == 48 && test.len() == 12, "sample split is not 48/12")?;
    let exp = ExperimentConfig { hybrid: swarm_only(), ..ExperimentConfig::default() };
    let dataset = exp.training_set(&train).unwrap();
    let topo = exp.topology().unwrap();
    let mut reached = 0;
    let mut last_model = None;
    for seed in 0..10 {
        let run = train_swarm_hybrid(&dataset, topo, &exp.hybrid, Variant::Mpso, seed).map_err(|e| e.to_string())?;
        if run.trained.reached_target && run.trained.iterations_used <= 1000 {
            reached += 1;
        }
        last_model = Some(run.trained.model);
    }
    ensure(reached >= 8, format!("target reached on {reached}/10 seeds"))?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = dir.path().join("sample.csv");
    let model = dir.path().join("model.json");
    std::fs::write(&data, SAMPLE_CSV).unwrap();
    std::fs::write(&model, last_model.unwrap().to_json()).unwrap();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let args = ["swarm-forecast", "eval", "--model", model.to_str().unwrap(), "--data", data.to_str().unwrap(), "--split", "2015-01"];
    let code = cli::run(args, &mut out, &mut err);
    ensure(code == 0, format!("eval exited {code}: {}", String::from_utf8_lossy(&err)))?;

    let csv = std::fs::read_to_string(dir.path().join("predictions.csv")).unwrap();
    let rows: Vec<(f64, f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect();
    ensure(rows.len() == 12, format!("{} rows", rows.len()))?;
    let n = rows.len() as f64;
    let mse = rows.iter().map(|(t, p, _)| (t - p).powi(2)).sum::<f64>() / n;
    let avg = rows.iter().map(|r| r.2.abs()).sum::<f64>() / n;
    let max = rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    ensure(json["mse"].as_f64() == Some(mse), "mse differs from recomputation")?;
    ensure(json["average_relative_error"].as_f64() == Some(avg), "average differs from recomputation")?;
    ensure(json["max_relative_error"].as_f64() == Some(max), "max differs from recomputation")?;
    let table = String::from_utf8(out).unwrap();
    ensure(table.lines().filter(|l| l.starts_with("2015-")).count() == 12, "table does not have 12 month rows")?;
    Ok(format!("target reached on {reached}/10 seeds; 12-row report, aggregates recomputed exactly (avg {avg:.4}%)"))
}

fn horizon_consistency() -> Check {
    let series = sample_series();
    let topo = Topology::default();
    let model = ForecastModel {
        params: init_params(topo, 12, 1.0).unwrap(),
        normalization: NormalizationParams::new(34.23, 36.87).unwrap(),
        window_len: 12,
        trainer: Trainer::MpsoBp,
        seed: 12,
    };
    let full = predict_horizon(&model, &series, 12).map_err(|e| e.to_string())?;
    let first = predict_horizon(&model, &series, 6).map_err(|e| e.to_string())?;
    let extended = series.extended(&first.iter().map(|p| p.predicted).collect::<Vec<_>>()).map_err(|e| e.to_string())?;
    let second = predict_horizon(&model, &extended, 6).map_err(|e| e.to_string())?;
    let composed: Vec<_> = first.into_iter().chain(second).collect();
    ensure(full == composed, "12-step forecast differs from 6 + 6")?;
    ensure(full.len() == 12, "not 12 points")?;
    let start: YearMonth = "2016-01".parse().unwrap();
    ensure(full.iter().enumerate().all(|(i, p)| p.month == start.offset(i as i64)), "months not consecutive")?;
    Ok("horizon 12 == 6 then 6 (exact); 2016-01..2016-12".into())
}

fn round_trips() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let topo = Topology::new(rng.gen_range(1..=12), rng.gen_range(1..=8), rng.gen_range(1..=3)).unwrap();
        let p = init_params(topo, rng.gen(), 5.0).unwrap();
        let back = NetworkParams::unflatten(topo, p.flatten()).unwrap();
        ensure(back == p && back.flatten() == p.flatten(), "flatten/unflatten not a bijection")?;

        let lo = rng.gen_range(1.0..100.0);
        let norm = NormalizationParams::new(lo, lo + rng.gen_range(0.01..50.0)).unwrap();
        let v = rng.gen_range(norm.min..=norm.max);
        let rt = norm.denormalize(norm.normalize(v));
        ensure((rt - v).abs() <= 1e-12 * v.abs(), format!("normalize round trip {v} -> {rt}"))?;

        let model = ForecastModel {
            params: NetworkParams::unflatten(Topology::new(topo.input_len, topo.hidden_len, 1).unwrap(), {
                let t = Topology::new(topo.input_len, topo.hidden_len, 1).unwrap();
                (0..t.dim()).map(|_| rng.gen_range(-1e3..1e3) * rng.gen::<f64>()).collect()
            })
            .unwrap(),
            normalization: norm,
            window_len: topo.input_len,
            trainer: Trainer::ALL[rng.gen_range(0..3)],
            seed: rng.gen(),
        };
        let text = model.to_json();
        let parsed = ForecastModel::from_json(&text).map_err(|e| e.to_string())?;
        ensure(parsed == model && parsed.to_json() == text, "model file does not round-trip")?;
    }
    Ok("200 random cases each: flatten bijection, scaling inverse <= 1e-12, model file identity".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("AC1 metric fidelity", metric_fidelity),
        ("AC2 inertia schedule", inertia_schedule),
        ("AC3 gradient correctness", gradient_correctness),
        ("AC4 optimizer invariants", optimizer_invariants),
        ("AC5 MPSO dominance", mpso_dominance),
        ("AC6 desk-scale end-to-end", end_to_end),
        ("AC7 horizon consistency", horizon_consistency),
        ("AC8 round trips", round_trips),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail} ({secs:.2}s)"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail} ({secs:.2}s)");
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", 8 - failed, 8);
    if failed > 0 {
        std::process::exit(1);
    }
}
