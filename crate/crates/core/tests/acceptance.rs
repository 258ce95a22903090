//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::process::Command;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use riskcbr::augment::{balance, AugmentConfig, AugmentMethod};
use riskcbr::casebase::{build_casebase, case_rank, enumerate_cases, CaseBase, PersonalCaseBase};
use riskcbr::cbr::{retrieve, reuse, revise, Query, Rationale};
use riskcbr::correlation::cramers_v;
use riskcbr::cushion::{bin_cushion_time, compute_cushion_time, VideoFrameSpan};
use riskcbr::ffm::{
    ffm_loss, ffm_loss_gradient, ffm_raw_score, ffm_train, sigmoid, FfmModel, TrainConfig,
};
use riskcbr::kmodes::{kmodes_fit, kmodes_runs, CategoricalPoint};
use riskcbr::schema::{NUM_CASE_VARS, PREMISE_POSITIONS};
use riskcbr::synth::{planted_label, synth_generate, SynthSpec};
use riskcbr::{default_schema, EventCase, EventDataset, Premise, Solution};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------- oracles

/// Masked one-hot pairwise sum over all 53 features.
fn brute_force_score(m: &FfmModel, codes: &[u8; NUM_CASE_VARS]) -> f64 {
    let cards = m.schema().case_cardinalities();
    let n = cards.iter().map(|&c| c as usize).sum::<usize>();
    let d = m.embed_dim();
    let mut field_of = Vec::with_capacity(n);
    for (f, &c) in cards.iter().enumerate() {
        field_of.extend(std::iter::repeat_n(f, c as usize));
    }
    let mut x = vec![0.0; n];
    let mut start = 0;
    for (f, &c) in cards.iter().enumerate() {
        x[start + codes[f] as usize] = 1.0;
        start += c as usize;
    }
    let v = |i: usize, field: usize, k: usize| m.v[(i * NUM_CASE_VARS + field) * d + k];
    let mut s = m.w0;
    s += m.w.iter().zip(&x).map(|(w, xi)| w * xi).sum::<f64>();
    for i in 0..n {
        for j in (i + 1)..n {
            if x[i] * x[j] == 0.0 {
                continue;
            }
            let mut dot = 0.0;
            for k in 0..d {
                dot += v(i, field_of[j], k) * v(j, field_of[i], k);
            }
            s += x[i] * x[j] * dot;
        }
    }
    s
}

fn random_model(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> FfmModel {
    let mut m = FfmModel::zeros(&default_schema(), d);
    m.w0 = rng.gen_range(-scale..scale);
    for x in m.w.iter_mut().chain(m.v.iter_mut()) {
        *x = rng.gen_range(-scale..scale);
    }
    m
}

fn random_codes(rng: &mut ChaCha8Rng) -> [u8; NUM_CASE_VARS] {
    let cards = default_schema().case_cardinalities();
    let mut c = [0u8; NUM_CASE_VARS];
    for (x, &k) in c.iter_mut().zip(&cards) {
        *x = rng.gen_range(0..k);
    }
    c
}

/// Stratified split holding out `frac` of each class.
fn stratified_split(ds: &EventDataset, frac: f64, seed: u64) -> (EventDataset, EventDataset) {
    let labels = ds.labels().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test = Vec::new();
    let mut train = Vec::new();
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n_test = (idx.len() as f64 * frac).round() as usize;
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (ds.subset(&train), ds.subset(&test))
}

/// AUC by pair counting and F1 at 0.5, against the given labels.
fn auc_f1(probs: &[f64], truth: &[bool]) -> (f64, f64) {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &pi) in probs.iter().enumerate() {
        if !truth[i] {
            continue;
        }
        for (j, &pj) in probs.iter().enumerate() {
            if truth[j] {
                continue;
            }
            den += 1.0;
            num += if pi > pj {
                1.0
            } else if pi == pj {
                0.5
            } else {
                0.0
            };
        }
    }
    let (mut tp, mut fp, mut fneg) = (0.0, 0.0, 0.0);
    for (&p, &y) in probs.iter().zip(truth) {
        match (p >= 0.5, y) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fneg += 1.0,
            _ => {}
        }
    }
    let f1 = if tp == 0.0 {
        0.0
    } else {
        2.0 * tp / (2.0 * tp + fp + fneg)
    };
    (num / den, f1)
}

// ---------------------------------------------------------------- criteria

fn c1_enumeration() -> Outcome {
    let t = Instant::now();
    let schema = default_schema();
    let cards = schema.case_cardinalities();
    let total = schema.case_space_size() as usize;
    let mut seen = vec![false; total];
    let mut count = 0usize;
    let mut dup = 0usize;
    for c in enumerate_cases(&schema) {
        let r = case_rank(&c.codes(), &cards) as usize;
        if std::mem::replace(&mut seen[r], true) {
            dup += 1;
        }
        count += 1;
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        count == 1_034_880 && dup == 0 && secs < 5.0,
        format!("count={count} duplicates={dup} time={secs:.2}s"),
    )
}

fn c2_ffm_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let d = rng.gen_range(1..=8);
        let m = random_model(&mut rng, d, 1.0);
        let codes = random_codes(&mut rng);
        let fast = ffm_raw_score(&m, &EventCase::from_codes(codes)).unwrap();
        worst = worst.max((fast - brute_force_score(&m, &codes)).abs());
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-10 && secs < 10.0,
        format!("max|diff|={worst:.3e} time={secs:.2}s"),
    )
}

fn c3_gradient_check() -> Outcome {
    const H: f64 = 1e-5;
    // denominators below this are treated as this
    const FLOOR: f64 = 1e-6;
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut params = 0usize;
    for _ in 0..50 {
        let d = rng.gen_range(1..=8);
        let m = random_model(&mut rng, d, 0.5);
        let lambda = rng.gen_range(0.001..0.1);
        let rows = (0..6)
            .map(|_| EventCase::from_codes(random_codes(&mut rng)).with_label(rng.gen_range(0..2)))
            .collect();
        let ds = EventDataset::new(default_schema(), rows).unwrap();
        let g = ffm_loss_gradient(&m, &ds, lambda).unwrap();
        let numeric = |set: &dyn Fn(&mut FfmModel, f64)| {
            let mut p = m.clone();
            set(&mut p, H);
            let up = ffm_loss(&p, &ds, lambda).unwrap();
            let mut q = m.clone();
            set(&mut q, -H);
            let down = ffm_loss(&q, &ds, lambda).unwrap();
            (up - down) / (2.0 * H)
        };
        let mut check = |analytic: f64, numeric: f64| {
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR);
            worst = worst.max(rel);
            params += 1;
        };
        check(g.w0, numeric(&|p, h| p.w0 += h));
        for i in 0..m.w.len() {
            check(g.w[i], numeric(&|p, h| p.w[i] += h));
        }
        for i in 0..m.v.len() {
            check(g.v[i], numeric(&|p, h| p.v[i] += h));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-4 && secs < 60.0,
        format!("params={params} max_rel_err={worst:.3e} (floor {FLOOR:e}) time={secs:.2}s"),
    )
}

struct Held {
    clean_auc: f64,
    clean_f1: f64,
    noisy_auc: f64,
    noisy_f1: f64,
    counts: (usize, usize),
}

fn synthetic_run(method: AugmentMethod) -> Held {
    let ds = synth_generate(&SynthSpec {
        n_rows: 2000,
        noise: 0.05,
        seed: 4,
    })
    .unwrap();
    let (train, test) = stratified_split(&ds, 0.2, 4);
    let balanced = balance(
        &train,
        &AugmentConfig {
            method,
            seed: 4,
            ..AugmentConfig::default()
        },
    )
    .unwrap();
    let counts = balanced.class_counts().unwrap();
    let (model, _) = ffm_train(
        &balanced,
        &TrainConfig {
            seed: 4,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    let probs: Vec<f64> = test
        .rows
        .iter()
        .map(|r| sigmoid(model.score_codes(&r.codes())))
        .collect();
    let clean: Vec<bool> = test.rows.iter().map(|r| planted_label(r) == 1).collect();
    let noisy: Vec<bool> = test.rows.iter().map(|r| r.e_s == Some(1)).collect();
    let (clean_auc, clean_f1) = auc_f1(&probs, &clean);
    let (noisy_auc, noisy_f1) = auc_f1(&probs, &noisy);
    Held {
        clean_auc,
        clean_f1,
        noisy_auc,
        noisy_f1,
        counts,
    }
}

fn c4_end_to_end(smoten: &Held, secs: f64) -> Outcome {
    outcome(
        smoten.clean_auc >= 0.95 && smoten.clean_f1 >= 0.90 && secs < 120.0,
        format!(
            "planted-label auc={:.4} f1={:.4}; noisy-label auc={:.4} f1={:.4}; time={secs:.2}s",
            smoten.clean_auc, smoten.clean_f1, smoten.noisy_auc, smoten.noisy_f1
        ),
    )
}

fn c5_augmentation_parity(smoten: &Held, random: &Held) -> Outcome {
    let equal = smoten.counts.0 == smoten.counts.1 && random.counts.0 == random.counts.1;
    outcome(
        equal && smoten.clean_f1 >= random.clean_f1 - 0.05,
        format!(
            "smoten counts={:?} f1={:.4}; random counts={:?} f1={:.4}",
            smoten.counts, smoten.clean_f1, random.counts, random.clean_f1
        ),
    )
}

fn mode_cost(points: &[&CategoricalPoint]) -> u64 {
    let dim = points[0].0.len();
    let mut cost = 0;
    for j in 0..dim {
        let mut counts = [0u64; 256];
        for p in points {
            counts[p.0[j] as usize] += 1;
        }
        cost += points.len() as u64 - counts.iter().max().unwrap();
    }
    cost
}

fn exhaustive_two_cluster_optimum(points: &[CategoricalPoint]) -> u64 {
    let n = points.len();
    let mut best = u64::MAX;
    for mask in 1..(1u32 << n) - 1 {
        let (a, b): (Vec<_>, Vec<_>) = (0..n).partition(|&i| mask & (1 << i) != 0);
        let pa: Vec<&CategoricalPoint> = a.iter().map(|&i| &points[i]).collect();
        let pb: Vec<&CategoricalPoint> = b.iter().map(|&i| &points[i]).collect();
        best = best.min(mode_cost(&pa) + mode_cost(&pb));
    }
    best
}

fn c6_kmodes() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut optimal = 0;
    let mut runs = 0;
    let mut monotone = 0;
    for inst in 0..10 {
        let points: Vec<CategoricalPoint> = loop {
            let p: Vec<CategoricalPoint> = (0..6)
                .map(|_| CategoricalPoint((0..3).map(|_| rng.gen_range(0..3)).collect()))
                .collect();
            if p.iter().collect::<BTreeSet<_>>().len() >= 2 {
                break p;
            }
        };
        let fit = kmodes_fit(&points, 2, inst, 10).unwrap();
        if fit.cost == exhaustive_two_cluster_optimum(&points) {
            optimal += 1;
        }
        for r in kmodes_runs(&points, 2, inst, 10).unwrap() {
            runs += 1;
            if r.cost_history.windows(2).all(|w| w[1] <= w[0]) {
                monotone += 1;
            }
        }
    }
    outcome(
        optimal >= 9 && monotone == runs,
        format!("optimal={optimal}/10 monotone_runs={monotone}/{runs}"),
    )
}

/// Brute-force retrieval straight from the model's parameter vector.
fn oracle_retrieve(
    m: &FfmModel,
    cb: &CaseBase,
    q: &Premise,
    tau: f64,
    top_k: usize,
) -> Vec<(Premise, f64)> {
    let d = m.embed_dim();
    let cards = m.schema().case_cardinalities();
    let mut offsets = [0usize; NUM_CASE_VARS];
    for f in 1..NUM_CASE_VARS {
        offsets[f] = offsets[f - 1] + cards[f - 1] as usize;
    }
    let embedding = |field: usize, code: u8| -> Vec<f64> {
        let feature = offsets[field] + code as usize;
        m.v[feature * NUM_CASE_VARS * d..(feature + 1) * NUM_CASE_VARS * d].to_vec()
    };
    let cosine = |a: &[f64], b: &[f64]| {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            (dot / (na * nb)).clamp(-1.0, 1.0)
        }
    };
    // per-variable code × code cosine tables
    let tables: Vec<Vec<Vec<f64>>> = PREMISE_POSITIONS
        .iter()
        .map(|&pos| {
            let n = cards[pos];
            (0..n)
                .map(|a| {
                    (0..n)
                        .map(|b| {
                            if a == b {
                                1.0
                            } else {
                                cosine(&embedding(pos, a), &embedding(pos, b))
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut hits: Vec<(Premise, f64)> = cb
        .groups()
        .keys()
        .map(|p| {
            let mut s = 0.0;
            for k in 0..5 {
                s += tables[k][q.0[k] as usize][p.0[k] as usize];
            }
            (*p, s / 5.0)
        })
        .filter(|(_, s)| *s >= tau)
        .collect();
    hits.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    hits.truncate(top_k);
    hits
}

fn synthetic_model(seed: u64, rows: usize, epochs: usize) -> FfmModel {
    let ds = synth_generate(&SynthSpec {
        n_rows: rows,
        noise: 0.05,
        seed,
    })
    .unwrap();
    let balanced = balance(
        &ds,
        &AugmentConfig {
            seed,
            ..AugmentConfig::default()
        },
    )
    .unwrap();
    ffm_train(
        &balanced,
        &TrainConfig {
            epochs,
            seed,
            ..TrainConfig::default()
        },
    )
    .unwrap()
    .0
}

fn c7_retrieval_oracle(model: &FfmModel, cb: &CaseBase) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pcards = default_schema().premise_cardinalities();
    let mut matched = 0;
    let mut hits = 0;
    for _ in 0..1000 {
        let mut p = [0u8; 5];
        for (x, &c) in p.iter_mut().zip(&pcards) {
            *x = rng.gen_range(0..c);
        }
        let mut q = Query::new(Premise(p));
        q.tau = rng.gen_range(0.3..1.0);
        q.top_k = rng.gen_range(1..300);
        let got: Vec<(Premise, f64)> = retrieve(cb, model, &q)
            .unwrap()
            .into_iter()
            .map(|g| (g.premise, g.similarity))
            .collect();
        let want = oracle_retrieve(model, cb, &q.premise, q.tau, q.top_k);
        hits += got.len();
        if got == want {
            matched += 1;
        }
    }
    outcome(
        matched == 1000,
        format!("exact={matched}/1000 groups_compared={hits}"),
    )
}

fn c8_cbr_structure(cb: &CaseBase, model: &FfmModel) -> Outcome {
    let schema = default_schema();
    let mut ok = 0;
    let mut notes = Vec::new();
    let mut premises = cb.groups().keys().copied();
    let mut scripted = 0;
    while scripted < 3 {
        let Some(premise) = premises.next() else {
            break;
        };
        let mut q = Query::new(premise);
        q.tau = 0.9;
        let general = reuse(&retrieve(cb, model, &q).unwrap());
        if general.len() < 3 {
            continue;
        }
        let driver = format!("scripted{scripted}");
        let mut pcb = PersonalCaseBase::new(driver.clone());
        let p = premise.0;
        let history =
            |s: Solution| EventCase::from_codes([p[0], p[1], p[2], s.d_r, s.c_t, p[3], p[4]]);
        let general_set: BTreeSet<Solution> = general.iter().map(|c| c.solution).collect();
        match scripted {
            // exact history on two candidates plus one solution outside the set
            0 => {
                for c in &general[1..3] {
                    pcb.add(
                        history(c.solution).with_label(0).with_driver(&driver),
                        &schema,
                    )
                    .unwrap();
                }
                if let Some(outside) = (0..7)
                    .flat_map(|d| (0..4).map(move |c| Solution::new(d, c)))
                    .find(|s| !general_set.contains(s))
                {
                    pcb.add(history(outside).with_label(0).with_driver(&driver), &schema)
                        .unwrap();
                }
            }
            // a maneuver the candidates use, with a cushion bin they do not
            1 => {
                let d_r = general.last().unwrap().solution.d_r;
                let free_bin = (0..4).find(|&c| !general_set.contains(&Solution::new(d_r, c)));
                let fallback = general
                    .iter()
                    .map(|c| c.solution.d_r)
                    .find(|&d| (0..4).any(|c| !general_set.contains(&Solution::new(d, c))));
                let (d_r, c_t) = match free_bin {
                    Some(c) => (d_r, c),
                    None => match fallback {
                        Some(d) => (
                            d,
                            (0..4)
                                .find(|&c| !general_set.contains(&Solution::new(d, c)))
                                .unwrap(),
                        ),
                        None => {
                            continue;
                        }
                    },
                };
                pcb.add(
                    history(Solution::new(d_r, c_t))
                        .with_label(0)
                        .with_driver(&driver),
                    &schema,
                )
                .unwrap();
            }
            // exact history over two maneuvers, the top one excluded
            _ => {
                let top = general[0].solution;
                let Some(other) = general
                    .iter()
                    .map(|c| c.solution)
                    .find(|s| s.d_r != top.d_r)
                else {
                    continue;
                };
                for s in [top, other] {
                    pcb.add(history(s).with_label(0).with_driver(&driver), &schema)
                        .unwrap();
                }
                q.excluded_maneuvers.insert(top.d_r);
            }
        }
        q.driver_id = Some(driver);
        let rec = revise(&general, Some(&pcb), &q).unwrap();
        let personal: BTreeSet<Solution> = rec.personalized.iter().map(|c| c.solution).collect();
        let pass = !personal.is_empty()
            && personal.len() < general_set.len()
            && personal.is_subset(&general_set)
            && rec.rationale != Rationale::General
            && !q.excluded_maneuvers.contains(&rec.adopted.solution.d_r)
            && rec
                .personalized
                .iter()
                .all(|c| !q.excluded_maneuvers.contains(&c.solution.d_r));
        notes.push(format!(
            "q{scripted}: general={} personalized={} {}",
            general_set.len(),
            personal.len(),
            rec.rationale.as_str()
        ));
        if pass {
            ok += 1;
        }
        scripted += 1;
    }
    outcome(ok == 3, format!("{ok}/3 [{}]", notes.join("; ")))
}

fn c9_cramers_v() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a: Vec<u8> = (0..10_000).map(|_| rng.gen_range(0..5)).collect();
    let self_v = cramers_v(&a, &a).unwrap();
    let x: Vec<u8> = (0..10_000).map(|_| rng.gen_range(0..4)).collect();
    let y: Vec<u8> = (0..10_000).map(|_| rng.gen_range(0..6)).collect();
    let indep = cramers_v(&x, &y).unwrap();
    let b: Vec<u8> = (0..1000).map(|_| rng.gen_range(0..2)).collect();
    let nb: Vec<u8> = b.iter().map(|v| 1 - v).collect();
    let perfect = cramers_v(&b, &nb).unwrap();
    outcome(
        self_v == 1.0 && indep < 0.05 && (perfect - 1.0).abs() <= 1e-12,
        format!("self={self_v} independent={indep:.4} perfect_2x2={perfect}"),
    )
}

fn c10_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_riskcbr");
    let root = tempfile::tempdir().unwrap();
    let run = |name: &str| -> std::result::Result<std::path::PathBuf, String> {
        let dir = root.path().join(name);
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("pipeline.conf"), "seed = 10\npaths.dir = work\n").unwrap();
        let out = Command::new(bin)
            .arg("--config")
            .arg(dir.join("pipeline.conf"))
            .arg("--out")
            .arg(dir.join("report.txt"))
            .arg("pipeline")
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).into_owned());
        }
        Ok(dir)
    };
    let (a, b) = match (run("a"), run("b")) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return outcome(false, format!("pipeline failed: {e}")),
    };
    let files = [
        "report.txt",
        "work/events.csv",
        "work/balanced.csv",
        "work/model.ffm",
        "work/casebase.csv",
        "work/casebase.rcb",
        "work/metrics.txt",
        "work/personal/driver07.csv",
    ];
    let same: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| {
            let x = std::fs::read(a.join(f));
            x.is_ok() && x.ok() == std::fs::read(b.join(f)).ok()
        })
        .collect();
    outcome(
        same.len() == files.len(),
        format!("identical {}/{} artifacts", same.len(), files.len()),
    )
}

fn c11_cushion() -> Outcome {
    // (f_start, f_end, rate, seconds, bin)
    let table: [(u64, u64, f64, f64, u8); 20] = [
        (0, 0, 7.5, 0.0, 0),
        (0, 6999, 1000.0, 6.999, 0),
        (0, 7000, 1000.0, 7.0, 1),
        (0, 13999, 1000.0, 13.999, 1),
        (0, 14000, 1000.0, 14.0, 2),
        (0, 19999, 1000.0, 19.999, 2),
        (0, 20000, 1000.0, 20.0, 3),
        (0, 100000, 1000.0, 100.0, 3),
        (100, 100, 7.5, 0.0, 0),
        (30, 82, 7.5, 52.0 / 7.5, 0),
        (30, 82 + 1, 7.5, 53.0 / 7.5, 1),
        (0, 105, 7.5, 14.0, 2),
        (0, 104, 7.5, 104.0 / 7.5, 1),
        (0, 150, 7.5, 20.0, 3),
        (0, 149, 7.5, 149.0 / 7.5, 2),
        (0, 750, 7.5, 100.0, 3),
        (12, 12 + 52, 7.5, 52.0 / 7.5, 0),
        (5, 215, 15.0, 14.0, 2),
        (5, 109, 15.0, 104.0 / 15.0, 0),
        (1000, 1105, 15.0, 7.0, 1),
    ];
    let mut bad = Vec::new();
    for (i, &(s, e, rate, secs, bin)) in table.iter().enumerate() {
        let t = compute_cushion_time(VideoFrameSpan::new(s, e, rate)).unwrap();
        if t != secs || bin_cushion_time(t).unwrap() != bin {
            bad.push(i);
        }
    }
    for (secs, bin) in [
        (0.0, 0),
        (6.999, 0),
        (7.0, 1),
        (13.999, 1),
        (14.0, 2),
        (19.999, 2),
        (20.0, 3),
        (100.0, 3),
    ] {
        if bin_cushion_time(secs).unwrap() != bin {
            bad.push(100);
        }
    }
    outcome(bad.is_empty(), format!("rows=20 mismatches={bad:?}"))
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    results.push((1, "enumeration exactness", c1_enumeration()));
    results.push((2, "FFM forward oracle", c2_ffm_oracle()));
    results.push((3, "gradient check", c3_gradient_check()));
    let t = Instant::now();
    let smoten = synthetic_run(AugmentMethod::Smoten);
    let secs = t.elapsed().as_secs_f64();
    let random = synthetic_run(AugmentMethod::Random);
    results.push((4, "synthetic end-to-end", c4_end_to_end(&smoten, secs)));
    results.push((
        5,
        "augmentation parity",
        c5_augmentation_parity(&smoten, &random),
    ));
    results.push((6, "k-modes toy optimality", c6_kmodes()));
    let model = synthetic_model(7, 1000, 30);
    let cb = build_casebase(&model, &default_schema()).unwrap();
    results.push((7, "retrieval oracle", c7_retrieval_oracle(&model, &cb)));
    results.push((8, "CBR structure", c8_cbr_structure(&cb, &model)));
    results.push((9, "Cramer's V", c9_cramers_v()));
    results.push((10, "pipeline determinism", c10_determinism()));
    results.push((11, "cushion-time protocol", c11_cushion()));

    let mut failed = 0;
    for (n, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("criterion {n:>2} {tag} {name}: {}", o.detail);
    }
    println!(
        "acceptance: {}/{} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
