//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p fairvec --test acceptance`; set `FAIRVEC_GLOVE_PATH` to a
//! GloVe text file to enable the real-data check.

mod common;

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use fairvec::debias::conceptor::{apply_negated, compute_conceptor, conceptor_debias, correlation_matrix};
use fairvec::debias::hard::hard_debias;
use fairvec::debias::softweat::{apply_plan, softweat_debias, SoftWeatConfig};
use fairvec::embedding::{load_glove_text, load_word2vec_binary, save_glove_text, save_word2vec_binary};
use fairvec::metrics::{mac, weat, weat_all_pairs, WordSet};
use fairvec::rnsb::{
    kl_from_uniform, loss_gradient, one_tailed_t_test, regularized_log_loss, rnsb, RnsbConfig, SentimentLexicon,
};
use fairvec::synthetic::{planted_bias, random_store, PlantedBiasConfig};
use fairvec::{BiasLexicon, EmbeddingFormat, EmbeddingStore};
use nalgebra::SymmetricEigen;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn set(v: &[Vec<f64>]) -> WordSet<'_> {
    WordSet::anonymous("w", slices(v))
}

fn groups(r: &mut ChaCha8Rng, d: usize, sizes: [usize; 4]) -> [Vec<Vec<f64>>; 4] {
    sizes.map(|n| (0..n).map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect()).collect())
}

fn weat_d(g: &[Vec<Vec<f64>>; 4]) -> fairvec::Result<fairvec::metrics::WeatResult> {
    weat(&set(&g[0]), &set(&g[1]), &set(&g[2]), &set(&g[3]))
}

fn mac_of(g: &[Vec<Vec<f64>>; 4]) -> f64 {
    mac(&[set(&g[0]), set(&g[1])], &[set(&g[2]), set(&g[3])]).unwrap().mac
}

fn oracle_equivalence() -> Check {
    let mut r = rng(1001);
    let mut refused = 0;
    for i in 0..200 {
        let d = r.random_range(2..8);
        let sizes = [r.random_range(1..3), r.random_range(1..3), r.random_range(1..4), r.random_range(1..4)];
        let g = groups(&mut r, d, sizes);
        let (stat, es) = oracle_weat(&g[0], &g[1], &g[2], &g[3]);
        match weat_d(&g) {
            Ok(w) => {
                ensure((w.statistic - stat).abs() < 1e-9, || format!("instance {i}: statistic {} vs {stat}", w.statistic))?;
                ensure((w.effect_size - es).abs() < 1e-9, || format!("instance {i}: effect size {} vs {es}", w.effect_size))?;
            }
            Err(_) => {
                refused += 1;
                ensure(!es.is_finite() || es.abs() > 1e6, || format!("instance {i}: refused finite effect size {es}"))?;
            }
        }
        let o = oracle_mac(&[g[0].clone(), g[1].clone()], &[g[2].clone(), g[3].clone()]);
        ensure((mac_of(&g) - o).abs() < 1e-9, || format!("instance {i}: MAC differs"))?;
    }
    Ok(format!("200 instances, {refused} zero-spread refusals"))
}

fn invariance() -> Check {
    let mut r = rng(1002);
    let mut worst_rot: f64 = 0.0;
    for i in 0..100 {
        let d = 6;
        let g = groups(&mut r, d, [3, 3, 3, 3]);
        let base = weat_d(&g).map_err(|e| e.to_string())?;
        let base_mac = mac_of(&g);

        let swap_t = weat_d(&[g[1].clone(), g[0].clone(), g[2].clone(), g[3].clone()]).unwrap();
        ensure(swap_t.effect_size == -base.effect_size, || format!("instance {i}: T swap not exact"))?;
        let swap_a = weat_d(&[g[0].clone(), g[1].clone(), g[3].clone(), g[2].clone()]).unwrap();
        ensure(
            (swap_a.effect_size + base.effect_size).abs() < 1e-12 && (swap_a.statistic + base.statistic).abs() < 1e-12,
            || format!("instance {i}: A swap"),
        )?;

        let scaled = g.clone().map(|s| {
            s.into_iter()
                .map(|v| {
                    let c = r.random_range(0.01..100.0);
                    v.into_iter().map(|x| x * c).collect()
                })
                .collect()
        });
        let ws = weat_d(&scaled).unwrap();
        ensure(
            (ws.effect_size - base.effect_size).abs() < 1e-9
                && (ws.statistic - base.statistic).abs() < 1e-9
                && (mac_of(&scaled) - base_mac).abs() < 1e-9,
            || format!("instance {i}: scaling"),
        )?;

        let q = random_orthogonal(&mut r, d);
        let rotated = g.clone().map(|s| s.iter().map(|v| rotate(&q, v)).collect());
        let wr = weat_d(&rotated).unwrap();
        let diff = (wr.effect_size - base.effect_size)
            .abs()
            .max((wr.statistic - base.statistic).abs())
            .max((mac_of(&rotated) - base_mac).abs());
        worst_rot = worst_rot.max(diff);
        ensure(diff < 1e-6, || format!("instance {i}: rotation changed metrics by {diff:e}"))?;
    }
    Ok(format!("100 instances, worst rotation drift {worst_rot:.1e}"))
}

fn hard_debias_properties() -> Check {
    let base = PlantedBiasConfig::default();
    let fixed = 3 * base.targets_per_subclass + 3 * base.equality_sets + 2 * base.attribute_words + 2 * base.sentiment_words;
    let corpus = planted_bias(&PlantedBiasConfig {
        filler_words: 2000 - fixed,
        seed: 7,
        ..base
    })
    .map_err(|e| e.to_string())?;
    ensure(corpus.store.len() == 2000 && corpus.store.dim() == 50, || "unexpected store shape".into())?;
    let lex = corpus.lexicon.resolve(&corpus.store).map_err(|e| e.to_string())?;
    let out = hard_debias(&corpus.store, &lex, None).map_err(|e| e.to_string())?;
    let identity: HashSet<usize> = lex.identity_indices().into_iter().collect();
    let neutral: Vec<usize> = (0..out.store.len()).filter(|i| !identity.contains(i)).collect();
    let mut worst_proj: f64 = 0.0;
    for &i in &neutral {
        worst_proj = out.subspace.project(out.store.row(i)).iter().fold(worst_proj, |m, x| m.max(x.abs()));
    }
    ensure(worst_proj < 1e-8, || format!("neutral projection {worst_proj:e}"))?;

    let mut r = rng(1003);
    let probe: Vec<usize> = sample(&mut r, neutral.len(), 100).into_iter().map(|i| neutral[i]).collect();
    let mut worst_eq: f64 = 0.0;
    for s in &lex.equality_sets {
        for t in s {
            worst_eq = worst_eq.max((norm(out.store.row(t.index)) - 1.0).abs());
        }
        for &w in &probe {
            let c0 = oracle_cos(out.store.row(s[0].index), out.store.row(w));
            for t in &s[1..] {
                worst_eq = worst_eq.max((oracle_cos(out.store.row(t.index), out.store.row(w)) - c0).abs());
            }
        }
    }
    ensure(worst_eq < 1e-6, || format!("equality sets off by {worst_eq:e}"))?;
    Ok(format!("projection {worst_proj:.1e}, equality drift {worst_eq:.1e}"))
}

fn conceptor_properties() -> Check {
    for seed in 0..10 {
        let mut r = rng(1004 + seed);
        let x = gaussians(&mut r, 8, 12);
        let rm = correlation_matrix(&slices(&x), false).map_err(|e| e.to_string())?;
        let mut previous: Option<Vec<f64>> = None;
        for alpha in [0.1, 1.0, 10.0, 100.0] {
            let c = compute_conceptor(&rm, alpha).map_err(|e| e.to_string())?;
            let eig = SymmetricEigen::new(c.matrix.clone()).eigenvalues;
            ensure(eig.iter().all(|&e| (-1e-8..1.0).contains(&e)), || format!("seed {seed}: eigenvalues {eig}"))?;
            if let Some(prev) = &previous {
                ensure(prev.iter().zip(&c.eigenvalues).all(|(a, b)| *a <= b + 1e-12), || format!("seed {seed}: not monotone in alpha"))?;
            }
            previous = Some(c.eigenvalues.clone());
            let store = EmbeddingStore::from_rows(12, gaussians(&mut r, 30, 12).into_iter().enumerate().map(|(i, v)| (format!("w{i}"), v)))
                .map_err(|e| e.to_string())?;
            let out = apply_negated(&store, &c).map_err(|e| e.to_string())?;
            for i in 0..store.len() {
                ensure(norm(out.row(i)) <= norm(store.row(i)) + 1e-12, || format!("seed {seed}: expansion at row {i}"))?;
            }
        }
    }
    let store = random_store(1000, 50, 1005);
    let bias: Vec<&[f64]> = (0..40).map(|i| store.row(i)).collect();
    let c = compute_conceptor(&correlation_matrix(&bias, false).map_err(|e| e.to_string())?, 1e-6).map_err(|e| e.to_string())?;
    let out = apply_negated(&store, &c).map_err(|e| e.to_string())?;
    let drift = (0..store.len()).map(|i| max_abs_diff(out.row(i), store.row(i))).fold(0.0, f64::max);
    ensure(drift < 1e-4, || format!("alpha 1e-6 moved a component by {drift:e}"))?;
    Ok(format!("10 matrices x 4 apertures, tiny-aperture drift {drift:.1e}"))
}

fn planted_pipeline() -> Check {
    let corpus = planted_bias(&PlantedBiasConfig::default()).map_err(|e| e.to_string())?;
    let lex = corpus.lexicon.resolve(&corpus.store).map_err(|e| e.to_string())?;
    let weat_of = |s: &EmbeddingStore| weat_all_pairs(s, &lex).map(|w| w.aggregate).map_err(|e| e.to_string());
    let base = weat_of(&corpus.store)?;
    let hard = weat_of(&hard_debias(&corpus.store, &lex, None).map_err(|e| e.to_string())?.store)?;
    let conc = weat_of(&conceptor_debias(&corpus.store, &lex, 10.0, false).map_err(|e| e.to_string())?.0)?;
    let soft = weat_of(
        &softweat_debias(&corpus.store, &lex, &SoftWeatConfig { lambda: 1.0, ..SoftWeatConfig::default() })
            .map_err(|e| e.to_string())?
            .store,
    )?;
    let summary = format!(
        "baseline {base:.3}, hard {hard:.2e}, conceptor -{:.1}%, softweat -{:.1}%",
        100.0 * (1.0 - conc / base),
        100.0 * (1.0 - soft / base)
    );
    ensure(base >= 0.8, || format!("baseline too weak: {summary}"))?;
    ensure(hard < 0.05, || summary.clone())?;
    ensure(conc <= 0.2 * base, || summary.clone())?;
    ensure(soft <= 0.5 * base, || summary.clone())?;
    Ok(summary)
}

fn rnsb_pipeline() -> Check {
    let mut r = rng(1006);
    for i in 0..20 {
        let d = r.random_range(2..8);
        let n = r.random_range(4..15);
        let x = gaussians(&mut r, n, d);
        let y: Vec<f64> = (0..n).map(|_| f64::from(u8::from(r.random_bool(0.5)))).collect();
        let w = gaussian(&mut r, d);
        let b: f64 = r.random_range(-1.0..1.0);
        let xs = slices(&x);
        let (gw, gb) = loss_gradient(&w, b, &xs, &y, 1e-3);
        let h = 1e-6;
        let loss = |w: &[f64], b: f64| regularized_log_loss(w, b, &xs, &y, 1e-3);
        for j in 0..=d {
            let (fd, g) = if j < d {
                let mut p = w.clone();
                let mut m = w.clone();
                p[j] += h;
                m[j] -= h;
                ((loss(&p, b) - loss(&m, b)) / (2.0 * h), gw[j])
            } else {
                ((loss(&w, b + h) - loss(&w, b - h)) / (2.0 * h), gb)
            };
            ensure((fd - g).abs() <= 1e-5 * g.abs().max(1e-3), || format!("instance {i}: gradient {g} vs {fd}"))?;
        }
    }
    ensure(kl_from_uniform(&[1.0 / 3.0; 3]).ok() == Some(0.0), || "KL(U||U) is not exactly 0".into())?;
    let kl = kl_from_uniform(&[0.5, 0.25, 0.25]).map_err(|e| e.to_string())?;
    ensure((kl - 0.0588916).abs() <= 1e-6, || format!("KL {kl}"))?;

    let mut wins = 0;
    for rep in 0..20 {
        let base = PlantedBiasConfig { seed: 100 + rep, ..PlantedBiasConfig::default() };
        let plain = planted_bias(&base).map_err(|e| e.to_string())?;
        let shifted = planted_bias(&PlantedBiasConfig { sentiment_shift: 0.6, ..base }).map_err(|e| e.to_string())?;
        let config = RnsbConfig { base_seed: rep * 1000, ..RnsbConfig::default() };
        let lex = plain.lexicon.resolve(&plain.store).map_err(|e| e.to_string())?;
        let a = rnsb(&plain.store, &lex, &plain.sentiment, &config).map_err(|e| e.to_string())?.kl;
        let b = rnsb(&shifted.store, &lex, &shifted.sentiment, &config).map_err(|e| e.to_string())?.kl;
        wins += usize::from(b > a);
    }
    ensure(wins >= 19, || format!("shifted store won {wins}/20"))?;
    Ok(format!("gradient ok on 20 instances, KL {kl:.7}, shifted store won {wins}/20"))
}

fn softweat_contracts() -> Check {
    let bits = |s: &EmbeddingStore, i: usize| s.row(i).iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    for seed in 0..3 {
        let corpus = planted_bias(&PlantedBiasConfig { seed: 200 + seed, ..PlantedBiasConfig::default() }).map_err(|e| e.to_string())?;
        let (store, lex) = (&corpus.store, corpus.lexicon.resolve(&corpus.store).map_err(|e| e.to_string())?);
        let zero = softweat_debias(store, &lex, &SoftWeatConfig { lambda: 0.0, ..SoftWeatConfig::default() }).map_err(|e| e.to_string())?;
        ensure((0..store.len()).all(|i| bits(&zero.store, i) == bits(store, i)), || format!("seed {seed}: lambda 0 changed bytes"))?;

        let out = softweat_debias(store, &lex, &SoftWeatConfig { lambda: 1.0, ..SoftWeatConfig::default() }).map_err(|e| e.to_string())?;
        let expanded: HashSet<usize> = out.plans.iter().flat_map(|p| p.expanded_indices.iter().copied()).collect();
        ensure(
            (0..store.len()).filter(|i| !expanded.contains(i)).all(|i| bits(&out.store, i) == bits(store, i)),
            || format!("seed {seed}: a non-expanded vector moved"),
        )?;
        for plan in &out.plans {
            if let Some(best) = plan.chosen {
                let min = plan.candidates.iter().map(|c| c.score).fold(f64::INFINITY, f64::min);
                ensure(plan.candidates[best].score == min, || format!("seed {seed}: chosen candidate is not the argmin"))?;
            }
        }
        let full = out.plans.iter().fold(store.clone(), |s, p| apply_plan(&s, p, 1.0));
        for lambda in [0.2, 0.5, 0.8] {
            let at = out.plans.iter().fold(store.clone(), |s, p| apply_plan(&s, p, lambda));
            for i in 0..store.len() {
                let expect: Vec<f64> = store.row(i).iter().zip(full.row(i)).map(|(x, f)| x + lambda * (f - x)).collect();
                ensure(max_abs_diff(at.row(i), &expect) < 1e-9, || format!("seed {seed}: not affine at lambda {lambda}"))?;
            }
        }
    }
    Ok("3 planted stores".into())
}

fn welch_reference() -> Check {
    let mut worst: f64 = 0.0;
    for (a, b, t, _, p) in WELCH_REFERENCE {
        let r = one_tailed_t_test(a, b).map_err(|e| e.to_string())?;
        worst = worst.max((r.t - t).abs()).max((r.p - p).abs());
    }
    ensure(worst <= 1e-6, || format!("max deviation {worst:e}"))?;
    Ok(format!("10 pairs, max deviation {worst:.1e}"))
}

fn format_round_trips() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut r = rng(1009);
    for k in 0..20 {
        let d = r.random_range(1..40);
        let n = r.random_range(1..60);
        let rows: Vec<(String, Vec<f64>)> = (0..n)
            .map(|i| (format!("w{k}_{i}_é"), (0..d).map(|_| f64::from(r.random_range(-100.0f32..100.0))).collect()))
            .collect();
        let store = EmbeddingStore::from_rows(d, rows).map_err(|e| e.to_string())?;
        let bin = dir.path().join(format!("{k}.bin"));
        let txt = dir.path().join(format!("{k}.txt"));
        save_word2vec_binary(&store, &bin).map_err(|e| e.to_string())?;
        save_glove_text(&store, &txt).map_err(|e| e.to_string())?;
        let b = load_word2vec_binary(&bin, None).map_err(|e| e.to_string())?;
        let t = load_glove_text(&txt, None).map_err(|e| e.to_string())?;
        ensure(b.words() == store.words() && t.words() == store.words(), || format!("store {k}: vocabulary changed"))?;
        for i in 0..n {
            ensure(
                b.row(i).iter().zip(store.row(i)).all(|(x, y)| x.to_bits() == y.to_bits()),
                || format!("store {k}: binary row {i} not bit-exact"),
            )?;
            ensure(
                t.row(i).iter().zip(store.row(i)).all(|(x, y)| (x - y).abs() <= 1e-5 * y.abs().max(1.0)),
                || format!("store {k}: text row {i} outside tolerance"),
            )?;
        }
    }
    Ok("20 stores".into())
}

fn real_glove() -> Option<Check> {
    let path = std::env::var_os("FAIRVEC_GLOVE_PATH")?;
    Some((|| {
        let store = fairvec::embedding::load(&path, EmbeddingFormat::GloveText, Some(50_000)).map_err(|e| e.to_string())?;
        let lex = BiasLexicon::religion().resolve(&store).map_err(|e| e.to_string())?;
        let k = rnsb(&store, &lex, &SentimentLexicon::bundled(), &RnsbConfig::default()).map_err(|e| e.to_string())?.kl;
        let normalized = store.normalize_all();
        let before = weat_all_pairs(&normalized, &lex).map_err(|e| e.to_string())?.aggregate;
        let after = weat_all_pairs(&hard_debias(&store, &lex, None).map_err(|e| e.to_string())?.store, &lex)
            .map_err(|e| e.to_string())?
            .aggregate;
        let summary = format!("RNSB {k:.4}, WEAT {before:.4} -> {after:.4}");
        ensure((0.1..=0.45).contains(&k), || summary.clone())?;
        ensure(after <= 0.1 * before, || summary.clone())?;
        Ok(summary)
    })())
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Check); 9] = [
        ("oracle equivalence", 10, oracle_equivalence),
        ("metric invariance", 10, invariance),
        ("hard debias properties", 30, hard_debias_properties),
        ("conceptor properties", 10, conceptor_properties),
        ("planted bias end to end", 60, planted_pipeline),
        ("rnsb pipeline", 60, rnsb_pipeline),
        ("softweat contracts", 30, softweat_contracts),
        ("welch reference", 1, welch_reference),
        ("format round trips", 1, format_round_trips),
    ];
    let mut failed = 0;
    for (n, (name, limit, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = result.and_then(|m| {
            ensure(elapsed <= Duration::from_secs(limit), || format!("{m}; took {elapsed:.2?}, limit {limit}s")).map(|_| m)
        });
        match result {
            Ok(m) => println!("PASS {:>2} {name}: {m} ({elapsed:.2?})", n + 1),
            Err(m) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {m}", n + 1);
            }
        }
    }
    let start = Instant::now();
    match real_glove() {
        None => println!("SKIP 10 real glove: FAIRVEC_GLOVE_PATH not set"),
        Some(Ok(m)) => println!("PASS 10 real glove: {m} ({:.2?})", start.elapsed()),
        Some(Err(m)) => {
            failed += 1;
            println!("FAIL 10 real glove: {m}");
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
