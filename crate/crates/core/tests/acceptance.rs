//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (run with `--nocapture` to see them). Oracles here are
//! deliberately independent re-implementations of whatever they check.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use swarmsel_core::classify::{fitness, loocv_accuracy_1nn, Evaluator, FitnessSpec};
use swarmsel_core::dataset::{Dataset, FeatureMask, LabelColumn};
use swarmsel_core::igfilter::{class_entropy, discretize_equal_width, info_gain, rank_and_filter};
use swarmsel_core::pipeline::{
    generate_synthetic, run_filter_stage, run_wrapper_stage, ExperimentConfig, IgConfig, Method,
};
use swarmsel_core::swarm::{
    init_swarm, regenerate_gbest_and, run as swarm_run, sigmoid, update_bests, update_position,
    update_velocity, SwarmParams, Variant,
};
use swarmsel_core::{GaParams, TraceRow};

fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize, k: usize) -> Dataset {
    use rand::seq::SliceRandom;
    let values: Vec<f64> = (0..n * d).map(|_| rng.gen::<f64>()).collect();
    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    labels.shuffle(rng);
    Dataset::new(
        values,
        d,
        labels,
        (0..d).map(|j| format!("f{j}")).collect(),
        (0..k).map(|c| format!("c{c}")).collect(),
    )
    .unwrap()
}

#[test]
fn c1_entropy_oracle_values() {
    let mut labels = vec![0usize; 9];
    labels.extend(vec![1usize; 5]);
    let h = class_entropy(&labels).unwrap();
    assert!((h - 0.940286).abs() <= 1e-6, "class entropy {h}");

    // the 5/4/5 partition with per-bin class counts (2,3) / (4,0) / (3,2)
    let mut bins = Vec::new();
    let mut part_labels = Vec::new();
    for (bin, pos, neg) in [(0usize, 2usize, 3usize), (1, 4, 0), (2, 3, 2)] {
        bins.extend(std::iter::repeat_n(bin, pos + neg));
        part_labels.extend(std::iter::repeat_n(0usize, pos));
        part_labels.extend(std::iter::repeat_n(1usize, neg));
    }
    let col = swarmsel_core::DiscretizedColumn::new(bins, 3).unwrap();
    let gain = info_gain(&col, &part_labels).unwrap();
    assert!((gain - 0.246750).abs() <= 1e-6, "info gain {gain}");
    println!("criterion 1 (entropy oracle): PASS — Info(S)={h:.6}, Gain={gain:.6}");
}

// Independent re-derivation of the gain from first principles, grouping
// by bin value with hash maps instead of count matrices.
fn naive_entropy(labels: &[usize]) -> f64 {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    let n = labels.len() as f64;
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn naive_gain(bins: &[usize], labels: &[usize]) -> f64 {
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for (&b, &l) in bins.iter().zip(labels) {
        groups.entry(b).or_default().push(l);
    }
    let n = labels.len() as f64;
    let conditional: f64 = groups
        .values()
        .map(|subset| subset.len() as f64 / n * naive_entropy(subset))
        .sum();
    naive_entropy(labels) - conditional
}

#[test]
fn c2_information_gain_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut checked = 0usize;
    for _ in 0..100 {
        let n = rng.gen_range(4..=20);
        let d = rng.gen_range(1..=8);
        let k = rng.gen_range(2..=3.min(n));
        let v = rng.gen_range(1..=4);
        let dataset = random_dataset(&mut rng, n, d, k);
        let ranking = rank_and_filter(&dataset, v, 0.0).unwrap();
        for j in 0..d {
            let col = discretize_equal_width(&dataset.column(j), v).unwrap();
            let expected = naive_gain(col.bin_ids(), dataset.labels()).max(0.0);
            let got = ranking.gains()[j];
            assert!(
                (got - expected).abs() <= 1e-12,
                "gain mismatch feature {j}: {got} vs {expected}"
            );
            checked += 1;
        }
    }
    println!("criterion 2 (IG brute-force equivalence): PASS — {checked} gains within 1e-12");
}

#[test]
fn c3_loocv_matches_rebuild_oracle_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for trial in 0..50 {
        let n = rng.gen_range(4..=30);
        let d = rng.gen_range(1..=10);
        let k = rng.gen_range(2..=3.min(n));
        let dataset = random_dataset(&mut rng, n, d, k);

        // oracle: rebuild the raw training matrix for every held-out sample
        let mut correct = 0usize;
        for held in 0..n {
            let mut train: Vec<(usize, Vec<f64>)> = Vec::new();
            for i in 0..n {
                if i != held {
                    train.push((dataset.labels()[i], dataset.row(i).to_vec()));
                }
            }
            let query = dataset.row(held);
            let mut best_d2 = f64::INFINITY;
            let mut best_label = usize::MAX;
            for (label, x) in &train {
                let d2: f64 = x
                    .iter()
                    .zip(query)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if d2 < best_d2 {
                    best_d2 = d2;
                    best_label = *label;
                }
            }
            if best_label == dataset.labels()[held] {
                correct += 1;
            }
        }
        let oracle = correct as f64 / n as f64;
        let got = loocv_accuracy_1nn(&dataset).unwrap();
        assert_eq!(got, oracle, "trial {trial}: {got} vs oracle {oracle}");
    }
    println!("criterion 3 (LOOCV oracle equivalence): PASS — 50 datasets, exact match");
}

#[test]
fn c4_velocity_and_sigmoid_unit_checks() {
    let params = SwarmParams::default();
    // identity: x = pbest = gbest makes both pull terms vanish
    let position = FeatureMask::from_bits(vec![true, false, true, false]);
    let particle = swarmsel_core::Particle {
        pbest_position: position.clone(),
        position: position.clone(),
        velocity: vec![2.0, -3.0, 0.5, -6.0],
        pbest_fitness: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let v = update_velocity(&particle, &position, &params, &mut rng);
    assert_eq!(v, particle.velocity, "identity case must be w * v_old with w=1");

    // clamp: saturated inertia plus positive pulls stays at +vmax
    let pulled = swarmsel_core::Particle {
        position: FeatureMask::zeros(1),
        pbest_position: FeatureMask::ones(1),
        velocity: vec![6.0],
        pbest_fitness: 0.0,
    };
    let v = update_velocity(&pulled, &FeatureMask::ones(1), &params, &mut rng);
    assert_eq!(v[0], 6.0);

    assert_eq!(sigmoid(0.0), 0.5);
    assert!((sigmoid(6.0) - 0.997527).abs() <= 1e-6);

    // empirical bit frequency at v = 0 over 10,000 draws
    let zero_v = swarmsel_core::Particle {
        position: FeatureMask::zeros(100),
        pbest_position: FeatureMask::zeros(100),
        velocity: vec![0.0; 100],
        pbest_fitness: 0.0,
    };
    let mut draw_rng = ChaCha8Rng::seed_from_u64(44);
    let mut ones = 0usize;
    for _ in 0..100 {
        ones += update_position(&zero_v, &mut draw_rng).popcount();
    }
    let fraction = ones as f64 / 10_000.0;
    assert!(
        (0.48..=0.52).contains(&fraction),
        "bit frequency {fraction}"
    );
    println!(
        "criterion 4 (velocity/sigmoid checks): PASS — S(0)=0.5, S(6)~0.997527, freq={fraction:.4}"
    );
}

#[test]
fn c5_ibpso_trigger_and_regeneration() {
    let frozen = |_: &FeatureMask| 0.5;

    // the trigger fires exactly every stagnation_limit iterations
    let params = SwarmParams {
        particles: 6,
        max_iter: 12,
        variant: Variant::Ibpso,
        ..SwarmParams::default()
    };
    let run = swarm_run(10, params, 2024, frozen).unwrap();
    let regen_iters: Vec<usize> = run
        .trace
        .iter()
        .filter(|r| r.regenerated)
        .map(|r| r.iteration)
        .collect();
    assert_eq!(regen_iters, vec![3, 6, 9, 12]);

    // bit-for-bit: a non-degenerate regeneration is the AND of all pbests
    let mut state = init_swarm(5, params, 7, &frozen).unwrap();
    let planted = ["10110", "10011", "10010", "11010", "10110", "10011"];
    for (p, bits) in state.particles.iter_mut().zip(planted) {
        p.pbest_position = FeatureMask::from_bits(bits.chars().map(|c| c == '1').collect());
    }
    state.stagnation_counter = 3;
    regenerate_gbest_and(&mut state, &frozen).unwrap();
    assert_eq!(state.gbest_position.to_bitstring(), "10010");

    // mid-run check, driving the loop by hand with an external rng
    let mut state = init_swarm(
        8,
        SwarmParams {
            particles: 2,
            variant: Variant::Ibpso,
            ..SwarmParams::default()
        },
        11,
        &frozen,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut non_degenerate = 0usize;
    for _ in 1..=30 {
        for i in 0..state.particles.len() {
            state.particles[i].velocity =
                update_velocity(&state.particles[i], &state.gbest_position, &state.params, &mut rng);
            state.particles[i].position = update_position(&state.particles[i], &mut rng);
        }
        let fits: Vec<f64> = state.particles.iter().map(|p| frozen(&p.position)).collect();
        update_bests(&mut state, &fits).unwrap();
        if state.stagnation_counter >= state.params.stagnation_limit {
            let mut expected = state.particles[0].pbest_position.clone();
            for p in &state.particles[1..] {
                expected = expected.and(&p.pbest_position);
            }
            regenerate_gbest_and(&mut state, &frozen).unwrap();
            if expected.popcount() > 0 {
                assert_eq!(state.gbest_position, expected, "AND mismatch");
                non_degenerate += 1;
            }
        }
    }
    assert!(non_degenerate > 0, "no non-degenerate regeneration observed");

    // BPSO never regenerates
    let bpso = SwarmParams {
        particles: 6,
        max_iter: 12,
        variant: Variant::Bpso,
        ..SwarmParams::default()
    };
    let run = swarm_run(10, bpso, 2024, frozen).unwrap();
    assert!(run.trace.iter().all(|r| !r.regenerated));
    println!(
        "criterion 5 (IBPSO trigger/regeneration): PASS — fired at {regen_iters:?}, \
         {non_degenerate} non-degenerate AND regenerations verified"
    );
}

fn median_f64(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn assert_monotone(trace: &[TraceRow], what: &str) {
    for w in trace.windows(2) {
        assert!(
            w[1].best_ever_fitness >= w[0].best_ever_fitness,
            "best_ever_fitness decreased in {what}"
        );
    }
}

#[test]
fn c6_planted_feature_recovery() {
    let seeds: Vec<u64> = (1..=10).collect();
    let mut ig_successes = 0usize;
    let mut ibpso_acc = Vec::new();
    let mut ibpso_count = Vec::new();
    let mut bpso_count = Vec::new();

    for &seed in &seeds {
        let synth = generate_synthetic(60, 190, 10, 3, 0.9, seed).unwrap();
        let scaled = synth.dataset.min_max_scale();

        // (a) every planted feature selected and ranked above all noise
        let ranking = rank_and_filter(&scaled, 10, 0.0).unwrap();
        let gains = ranking.gains();
        let all_selected = synth
            .informative
            .iter()
            .all(|j| ranking.selected().contains(j));
        let min_planted = synth
            .informative
            .iter()
            .map(|&j| gains[j])
            .fold(f64::INFINITY, f64::min);
        let max_noise = (0..scaled.n_features())
            .filter(|j| !synth.informative.contains(j))
            .map(|j| gains[j])
            .fold(f64::NEG_INFINITY, f64::max);
        if all_selected && min_planted > max_noise {
            ig_successes += 1;
        }

        // (b)/(c) hybrid wrappers on the filtered space
        let stage = run_filter_stage(&scaled, &IgConfig::default()).unwrap();
        for (method, accs, counts) in [
            (
                Method::IgIbpso,
                Some(&mut ibpso_acc),
                &mut ibpso_count,
            ),
            (Method::IgBpso, None, &mut bpso_count),
        ] {
            let outcome = run_wrapper_stage(
                &stage.reduced,
                method,
                &FitnessSpec::default(),
                SwarmParams::default(),
                GaParams::default(),
                seed,
            )
            .unwrap();
            assert_monotone(outcome.trace.as_ref().unwrap(), method.name());
            if let Some(accs) = accs {
                accs.push(outcome.fitness);
            }
            counts.push(outcome.mask.popcount() as f64);
        }
    }

    assert!(
        ig_successes >= 9,
        "(a) planted features recovered in only {ig_successes}/10 seeds"
    );
    let acc_median = median_f64(ibpso_acc);
    assert!(
        acc_median >= 0.95,
        "(b) IG+IBPSO median accuracy {acc_median}"
    );
    let ibpso_median = median_f64(ibpso_count);
    assert!(
        ibpso_median <= 20.0,
        "(b) IG+IBPSO median selected count {ibpso_median}"
    );
    let bpso_median = median_f64(bpso_count);
    assert!(
        ibpso_median <= bpso_median,
        "(c) IG+IBPSO median {ibpso_median} vs IG+BPSO median {bpso_median}"
    );
    println!(
        "criterion 6 (planted-feature recovery): PASS — IG {ig_successes}/10, \
         IG+IBPSO median acc {acc_median:.3} with median {ibpso_median} features, \
         IG+BPSO median {bpso_median} features"
    );
}

#[test]
fn c7_optional_reference_datasets() {
    let Ok(dir) = std::env::var("SWARMSEL_MICROARRAY_DIR") else {
        println!(
            "criterion 7 (reference datasets): SKIP — set SWARMSEL_MICROARRAY_DIR to a directory \
             with Leukemia1.csv and DLBCL.csv to enable"
        );
        return;
    };
    for name in ["Leukemia1", "DLBCL"] {
        let path = std::path::Path::new(&dir).join(format!("{name}.csv"));
        let raw = Dataset::load_csv(&path, &LabelColumn::default())
            .unwrap_or_else(|e| panic!("cannot load {}: {e}", path.display()));
        let scaled = raw.min_max_scale();
        let (stage, _) =
            swarmsel_core::pipeline::run_filter_stage_with_fallback(&scaled, &IgConfig::default())
                .unwrap();
        let mut best_acc = 0.0f64;
        let mut best_count = usize::MAX;
        for seed in 1..=10u64 {
            let outcome = run_wrapper_stage(
                &stage.reduced,
                Method::IgIbpso,
                &FitnessSpec::default(),
                SwarmParams::default(),
                GaParams::default(),
                seed,
            )
            .unwrap();
            if outcome.fitness > best_acc
                || (outcome.fitness == best_acc && outcome.mask.popcount() < best_count)
            {
                best_acc = outcome.fitness;
                best_count = outcome.mask.popcount();
            }
        }
        assert!(
            best_acc >= 0.95,
            "{name}: best-of-10 LOOCV accuracy {best_acc}"
        );
        assert!(
            best_count < raw.n_features(),
            "{name}: no reduction ({best_count} features)"
        );
        println!(
            "criterion 7 ({name}): PASS — best accuracy {best_acc:.4} with {best_count} of {} features",
            raw.n_features()
        );
    }
}

#[test]
fn c8_reports_identical_across_thread_counts() {
    let synth = generate_synthetic(40, 25, 5, 2, 0.9, 3).unwrap();
    let knn_cfg = ExperimentConfig {
        dataset_path: "synthetic.csv".into(),
        label_column: LabelColumn::default(),
        method: Method::IgIbpso,
        fitness: FitnessSpec::default(),
        ig: IgConfig::default(),
        swarm: SwarmParams {
            particles: 10,
            max_iter: 25,
            ..SwarmParams::default()
        },
        ga: GaParams::default(),
        seeds: vec![1, 2],
        output_dir: std::env::temp_dir(),
    };
    let svm_cfg = ExperimentConfig {
        method: Method::Ig,
        fitness: FitnessSpec {
            evaluator: Evaluator::SvmOvrKfold,
            k_folds: 5,
            ..FitnessSpec::default()
        },
        ..knn_cfg.clone()
    };

    let mut bodies: Vec<String> = Vec::new();
    for threads in [1usize, 4] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let body = pool.install(|| {
            let a = swarmsel_core::pipeline::run_experiment_on(&synth.dataset, "synthetic", &knn_cfg)
                .unwrap();
            let b = swarmsel_core::pipeline::run_experiment_on(&synth.dataset, "synthetic", &svm_cfg)
                .unwrap();
            format!("{}{}", a.report.to_csv(false), b.report.to_csv(false))
        });
        bodies.push(body);
    }
    assert_eq!(bodies[0], bodies[1], "report bodies differ across thread counts");
    // and across repeated runs in the same pool
    let again = {
        let a = swarmsel_core::pipeline::run_experiment_on(&synth.dataset, "synthetic", &knn_cfg)
            .unwrap();
        let b = swarmsel_core::pipeline::run_experiment_on(&synth.dataset, "synthetic", &svm_cfg)
            .unwrap();
        format!("{}{}", a.report.to_csv(false), b.report.to_csv(false))
    };
    assert_eq!(bodies[0], again, "report bodies differ across repeated runs");
    println!("criterion 8 (determinism): PASS — byte-identical bodies at 1 and 4 threads");
}

#[test]
fn c9_best_ever_fitness_is_monotone_in_every_trace() {
    let synth = generate_synthetic(30, 20, 4, 2, 0.9, 17).unwrap();
    let scaled = synth.dataset.min_max_scale();
    let spec = FitnessSpec::default();
    let objective = |mask: &FeatureMask| fitness(&scaled, mask, &spec).unwrap();

    let mut traces = 0usize;
    for variant in [Variant::Bpso, Variant::Ibpso] {
        for seed in 0..5u64 {
            let params = SwarmParams {
                particles: 12,
                max_iter: 40,
                variant,
                ..SwarmParams::default()
            };
            let run = swarm_run(scaled.n_features(), params, seed, objective).unwrap();
            assert_monotone(&run.trace, "swarm");
            traces += 1;
        }
    }
    for seed in 0..5u64 {
        let params = GaParams {
            population: 12,
            max_generations: 40,
            rng_seed: seed,
            ..GaParams::default()
        };
        let run = swarmsel_core::gasearch::run_ga(scaled.n_features(), params, objective).unwrap();
        assert_monotone(&run.trace, "ga");
        traces += 1;
    }
    println!("criterion 9 (monotone best-ever): PASS — {traces} traces checked");
}
