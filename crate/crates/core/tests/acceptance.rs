//! End-to-end acceptance run on the synthetic two-style corpus. Prints one
//! PASS/FAIL line per criterion and fails if any criterion fails.

use std::f64::consts::{LN_2, PI};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use lombard_vc::audio::{
    active_mask, compute_ltas, mel_spectrogram, mix_at_snr, read_wav, speech_shaped_noise, AnalysisConfig,
    NoiseCondition, Waveform,
};
use lombard_vc::corpus::{split_speakers, synth_toy_corpus, synth_toy_utterance, train_val_split, Manifest, SplitSpec, Style, ToyCorpusConfig};
use lombard_vc::enhance::ssdrc;
use lombard_vc::features::{estimate_f0, mgc_from_spectrum, AcousticFrameFeatures, F0Config, MgcConfig};
use lombard_vc::intelligibility::{evaluate_condition, SiibConfig, Utterance};
use lombard_vc::nn::Mat;
use lombard_vc::pipeline::{
    prepare, run_conversion, run_enhance, run_eval, save_classifier, save_vc, train_classifier_stage, train_vc_stage,
    write_experiment_report, EvalRequest, ExperimentConfig, SystemSource,
};
use lombard_vc::rng::{normal, seeded};
use lombard_vc::vc::{
    classify_style, forward_reconstruct, kl_loss, l1_reconstruction_loss, style_reconstruction_loss, Batch,
    ConditioningMode, MelNorm, ModelConfig, SpeakerEmbedding, SpeakerTable, StyleClassifier, TrainingExample, VcModel,
};
use lombard_vc::corpus::PhonemeVocab;

type Check = (bool, String);

fn toy_set(style: Style) -> Vec<Utterance> {
    (0..20)
        .map(|i| Utterance { id: format!("u{i:02}"), waveform: synth_toy_utterance(42, i % 4, style, i).unwrap().0 })
        .collect()
}

fn mean_siib(clean: &[Utterance], processed: &[Utterance], snr: f64, seed: u64, ltas: &lombard_vc::audio::Ltas) -> Vec<f64> {
    let row = evaluate_condition("s", clean, processed, &NoiseCondition::speech_shaped(snr, seed), ltas, &SiibConfig::default())
        .unwrap();
    row.scores.iter().map(|s| s.1).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn c1_loss_oracles() -> Check {
    let m = |rows: usize, cols: usize, v: f64| Mat::from_elem((rows, cols), v);
    let kl = |mu: f64, lv: f64| 0.5 * (mu * mu + lv.exp() - lv - 1.0);
    let cases = [
        ("kl(0,0)", kl_loss(&m(3, 8, 0.0), &m(3, 8, 0.0)).unwrap(), 0.0),
        ("kl(1,0)", kl_loss(&m(3, 8, 1.0), &m(3, 8, 0.0)).unwrap(), 0.5),
        ("kl(0,ln2)", kl_loss(&m(3, 8, 0.0), &m(3, 8, LN_2)).unwrap(), kl(0.0, LN_2)),
        ("bce(0.5,lombard)", style_reconstruction_loss(0.5, Style::Lombard), LN_2),
        ("bce(0.5,neutral)", style_reconstruction_loss(0.5, Style::Neutral), LN_2),
        ("l1(+0.25)", l1_reconstruction_loss(&m(4, 80, 1.25), &m(4, 80, 1.0)).unwrap(), 0.25),
        ("l1(-3)", l1_reconstruction_loss(&m(4, 80, -2.0), &m(4, 80, 1.0)).unwrap(), 3.0),
        ("l1(0)", l1_reconstruction_loss(&m(4, 80, 7.0), &m(4, 80, 7.0)).unwrap(), 0.0),
    ];
    let worst = cases.iter().map(|c| (c.1 - c.2).abs()).fold(0.0, f64::max);
    let kl_ln2 = cases[2].1;
    (
        worst <= 1e-9 && (kl_ln2 - 0.1534).abs() < 5e-5,
        format!("worst abs error {worst:.1e} over {} cases, kl(0,ln2) = {kl_ln2:.6}", cases.len()),
    )
}

fn random_example(id: &str, spk: &str, style: Style, frames: usize, vocab: usize, seed: u64) -> TrainingExample {
    let mut rng = seeded(seed);
    let mel = Mat::from_shape_simple_fn((frames, 80), || normal(&mut rng) - 4.0);
    let phonemes = (0..frames).map(|t| (t / 5 + seed as usize) % vocab).collect();
    let frames_f = (0..frames).map(|_| [normal(&mut rng), 1.0, normal(&mut rng), normal(&mut rng)]).collect();
    TrainingExample {
        utt_id: id.into(),
        speaker_id: spk.into(),
        style,
        mel,
        phonemes,
        features: AcousticFrameFeatures { frames: frames_f, normalization: [5.0, 0.2, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0] },
    }
}

fn c2_gradient_checks() -> Check {
    let vocab = PhonemeVocab::new(["aa", "iy", "s", "uw"]);
    let mut model = VcModel::new(ModelConfig::default(), ConditioningMode::F0Mgc, vocab, MelNorm::identity(80), 11);
    let mut clf = StyleClassifier::new(MelNorm::identity(80), 12);
    let mut rng = seeded(13);
    for name in ["clf.out.w", "clf.out.b"] {
        let id = clf.params.id(name).unwrap();
        clf.params.value_mut(id).mapv_inplace(|_| 0.5 * normal(&mut rng));
    }
    clf.freeze();
    let mut speakers = SpeakerTable::new();
    for spk in ["a", "b"] {
        let v = (0..64).map(|_| normal(&mut rng)).collect();
        speakers.insert(spk.into(), SpeakerEmbedding::new(spk, v).unwrap());
    }
    let exs = [
        random_example("x", "a", Style::Lombard, 21, 5, 1),
        random_example("y", "b", Style::Neutral, 16, 5, 2),
    ];
    let items: Vec<_> = exs.iter().map(|e| (e, 0, e.frames())).collect();
    let batch = Batch::assemble(&items, &model.norm, model.mode, &speakers).unwrap();
    let eps = model.sample_eps(&batch, &mut rng);
    let eval = |m: &VcModel, term: usize| {
        let l = forward_reconstruct(m, &batch, Some(&clf), Some(&eps), 1e-3, 1.0).losses;
        [l.l_rec, l.l_kl, l.l_s.unwrap()][term]
    };
    let f = forward_reconstruct(&model, &batch, Some(&clf), Some(&eps), 1e-3, 1.0);
    let terms = [f.l_rec, f.l_kl, f.l_s.unwrap()];
    let mut summary = Vec::new();
    let mut ok = true;
    for (term, &var) in terms.iter().enumerate() {
        let grads = f.graph.backward(var, &model.params);
        // the two largest-gradient entries of every tensor the term reaches
        let mut probes = Vec::new();
        for (id, g) in grads.iter().enumerate() {
            let Some(g) = g else { continue };
            let mut entries: Vec<((usize, usize), f64)> = g.indexed_iter().map(|(ix, v)| (ix, *v)).collect();
            entries.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
            probes.extend(entries.iter().take(2).filter(|e| e.1.abs() > 1e-8).map(|e| (id, e.0, e.1)));
        }
        let mut worst = 0.0f64;
        for &(id, ix, analytic) in &probes {
            let h = 1e-5;
            let orig = model.params.value(id)[ix];
            model.params.value_mut(id)[ix] = orig + h;
            let up = eval(&model, term);
            model.params.value_mut(id)[ix] = orig - h;
            let down = eval(&model, term);
            model.params.value_mut(id)[ix] = orig;
            let fd = (up - down) / (2.0 * h);
            worst = worst.max((analytic - fd).abs() / analytic.abs().max(fd.abs()));
        }
        ok &= probes.len() >= 5 && worst <= 1e-3;
        summary.push(format!("{}: {} probes, worst rel err {worst:.1e}", ["l_rec", "l_kl", "l_s"][term], probes.len()));
    }
    (ok, summary.join("; "))
}

fn c3_snr_monotonic() -> Check {
    let utts = toy_set(Style::Neutral);
    let ltas = compute_ltas(&utts.iter().map(|u| u.waveform.clone()).collect::<Vec<_>>(), &AnalysisConfig::default()).unwrap();
    let snrs = [0.0, -1.0, -3.0, -6.0, -9.0];
    let mut ok = true;
    let mut lines = Vec::new();
    for seed in 1..=5 {
        let means: Vec<f64> = snrs.iter().map(|&s| mean(&mean_siib(&utts, &utts, s, seed, &ltas))).collect();
        ok &= means.windows(2).all(|w| w[1] < w[0]);
        lines.push(format!("seed {seed}: {}", means.iter().map(|m| format!("{m:.1}")).collect::<Vec<_>>().join(" > ")));
    }
    (ok, lines.join("; "))
}

fn c4_ssdrc_direction() -> Check {
    let clean = toy_set(Style::Neutral);
    let enh: Vec<Utterance> =
        clean.iter().map(|u| Utterance { id: u.id.clone(), waveform: ssdrc(&u.waveform).unwrap() }).collect();
    let ltas = compute_ltas(&clean.iter().map(|u| u.waveform.clone()).collect::<Vec<_>>(), &AnalysisConfig::default()).unwrap();
    let base = mean_siib(&clean, &clean, -1.0, 1, &ltas);
    let boosted = mean_siib(&clean, &enh, -1.0, 1, &ltas);
    let wins = base.iter().zip(&boosted).filter(|(a, b)| b > a).count();
    (
        wins * 10 >= 9 * base.len(),
        format!("ssdrc better on {wins}/{} at -1 dB (mean {:.2} vs {:.2})", base.len(), mean(&boosted), mean(&base)),
    )
}

fn c5_lombard_direction() -> Check {
    let neutral = toy_set(Style::Neutral);
    let lombard = toy_set(Style::Lombard);
    let all: Vec<Waveform> = neutral.iter().chain(&lombard).map(|u| u.waveform.clone()).collect();
    let ltas = compute_ltas(&all, &AnalysisConfig::default()).unwrap();
    let mut ok = true;
    let mut lines = Vec::new();
    for snr in [-1.0, -3.0] {
        let n = mean(&mean_siib(&neutral, &neutral, snr, 1, &ltas));
        let l = mean(&mean_siib(&lombard, &lombard, snr, 1, &ltas));
        ok &= l > n;
        lines.push(format!("{snr} dB: lombard {l:.2} vs neutral {n:.2}"));
    }
    (ok, lines.join("; "))
}

/// Toy corpus and configuration shared by the training criteria.
struct TrainingSetup {
    manifest: Manifest,
    cfg: ExperimentConfig,
    dir: PathBuf,
}

fn training_setup(root: &Path) -> TrainingSetup {
    let dir = root.join("corpus");
    let manifest =
        synth_toy_corpus(&ToyCorpusConfig { speakers: 4, utterances_per_style: 20 }, 42, &dir).unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.targets = vec!["s4".into()];
    cfg.val_fraction = 0.25;
    cfg.seed = 3;
    (cfg.classifier_steps, cfg.vc_steps, cfg.joint_steps) = (500, 1500, 500);
    TrainingSetup { manifest, cfg, dir: root.to_path_buf() }
}

fn c6_classifier(s: &TrainingSetup, clf_path: &Path) -> Check {
    let a = AnalysisConfig::default();
    let out = train_classifier_stage(&s.manifest, &s.cfg, &a).unwrap();
    save_classifier(clf_path, &out, &s.cfg).unwrap();
    let unseen = s.manifest.filter(|r| r.speaker_id == "s4").unwrap();
    let unseen_acc = out.classifier.accuracy(&prepare(&unseen, &a, None, None).unwrap().examples);
    let held = out.heldout_accuracy.unwrap_or(0.0);
    (
        held >= 0.95 && out.losses.len() <= 500 && out.losses.last() < out.losses.first(),
        format!(
            "held-out accuracy {held:.3} after {} steps (bce {:.4} -> {:.4}); unseen speaker {unseen_acc:.3}",
            out.losses.len(),
            out.losses[0],
            out.losses.last().unwrap()
        ),
    )
}

fn c7_c8_training(s: &TrainingSetup, clf_path: &Path) -> (Check, Check) {
    let a = AnalysisConfig::default();
    let clf = lombard_vc::pipeline::load_classifier(clf_path).unwrap();
    let before = clf.params.clone();
    let ckpt_before = fs::read(clf_path).unwrap();

    let (train, _) = split_speakers(&s.manifest, &SplitSpec { targets: s.cfg.targets.clone() }).unwrap();
    let (_, val) = train_val_split(&train, s.cfg.val_fraction, s.cfg.seed).unwrap();
    let sources = val.unwrap().filter(|r| r.style == Style::Lombard).unwrap();

    let mut style_scores = Vec::new();
    let mut descent = (false, String::new());
    for style_loss in [true, false] {
        let mut cfg = s.cfg.clone();
        cfg.style_loss = style_loss;
        let t = Instant::now();
        let out = train_vc_stage(&s.manifest, &cfg, &a, Some(&clf), None).unwrap();
        let tag = if style_loss { "with_ls" } else { "without_ls" };
        let ckpt = s.dir.join(format!("vc_{tag}.ckpt"));
        save_vc(&ckpt, &out, &cfg).unwrap();
        if style_loss {
            let n = out.log.records.len();
            let start = out.log.moving_average(50, 50, |l| l.l_rec).unwrap();
            let end = out.log.moving_average(n, 50, |l| l.l_rec).unwrap();
            let frozen = clf.params == before && fs::read(clf_path).unwrap() == ckpt_before;
            descent = (
                n <= 2000 && end <= 0.5 * start && frozen,
                format!(
                    "{n} steps in {:.0} s: l_rec MA50 {start:.4} -> {end:.4} (ratio {:.3}); classifier unchanged: {frozen}",
                    t.elapsed().as_secs_f64(),
                    end / start
                ),
            );
        }
        let conv_dir = s.dir.join(format!("conv_{tag}"));
        let files = run_conversion(&sources, &ckpt, "s4", &conv_dir, &cfg, &a, None).unwrap();
        let probs: Vec<f64> = files
            .iter()
            .map(|f| classify_style(&mel_spectrogram(&read_wav(f).unwrap(), &a).unwrap(), &clf))
            .collect();
        style_scores.push(mean(&probs));
    }
    let (with, without) = (style_scores[0], style_scores[1]);
    (
        descent,
        (with >= without, format!("mean P(lombard) of converted Lombard sources: with L_s {with:.6}, without {without:.6}")),
    )
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

/// Runs every stage with a tiny budget under `root` and returns the
/// artifacts that must not depend on the run: (relative path, bytes).
fn mini_pipeline(root: &Path) -> Vec<(String, Vec<u8>)> {
    let a = AnalysisConfig::default();
    let corpus = root.join("corpus");
    let m = synth_toy_corpus(&ToyCorpusConfig { speakers: 3, utterances_per_style: 3 }, 5, &corpus).unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.targets = vec!["s3".into()];
    cfg.val_fraction = 0.0;
    (cfg.classifier_steps, cfg.vc_steps, cfg.joint_steps, cfg.batch_size) = (10, 8, 4, 4);
    cfg.griffin_lim_iters = 8;
    cfg.conditioning = ConditioningMode::F0Mgc;
    cfg.style_loss = true;
    let clf = train_classifier_stage(&m, &cfg, &a).unwrap();
    save_classifier(&root.join("clf.ckpt"), &clf, &cfg).unwrap();
    let vc = train_vc_stage(&m, &cfg, &a, Some(&clf.classifier), None).unwrap();
    save_vc(&root.join("vc.ckpt"), &vc, &cfg).unwrap();
    let sources = m.filter(|r| r.speaker_id != "s3").unwrap();
    run_conversion(&sources, &root.join("vc.ckpt"), "s3", &root.join("conv"), &cfg, &a, None).unwrap();
    run_enhance(&sources, &root.join("enh"), &cfg).unwrap();
    m.write_tsv(root.join("manifest.tsv")).unwrap();
    let report = run_eval(&EvalRequest {
        clean: Some(SystemSource::Manifest(root.join("manifest.tsv"), None)),
        systems: vec![
            ("ssdrc".into(), SystemSource::Dir(root.join("enh"))),
            ("natural".into(), SystemSource::Manifest(root.join("manifest.tsv"), None)),
        ],
        snrs: vec![-1.0],
        seed: 9,
        force: false,
    });
    // enhancement covers only the sources, so the ids differ from the references
    assert!(report.is_err());
    let clean_src = m.filter(|r| r.speaker_id != "s3").unwrap();
    clean_src.write_tsv(root.join("sources.tsv")).unwrap();
    let report = run_eval(&EvalRequest {
        clean: Some(SystemSource::Manifest(root.join("sources.tsv"), None)),
        systems: vec![
            ("ssdrc".into(), SystemSource::Dir(root.join("enh"))),
            ("natural".into(), SystemSource::Manifest(root.join("sources.tsv"), None)),
        ],
        snrs: vec![-3.0, -1.0],
        seed: 9,
        force: false,
    })
    .unwrap();
    write_experiment_report(&root.join("report.tsv"), &report).unwrap();
    let conv_report = run_eval(&EvalRequest {
        clean: None,
        systems: vec![("vc".into(), SystemSource::Dir(root.join("conv")))],
        snrs: vec![-1.0],
        seed: 9,
        force: false,
    })
    .unwrap();
    write_experiment_report(&root.join("conv_report.tsv"), &conv_report).unwrap();
    files_under(root)
        .into_iter()
        .filter(|p| {
            let name = p.file_name().unwrap().to_string_lossy();
            // manifests and provenance embed absolute paths; the report sidecar a timestamp
            !(name.ends_with("manifest.tsv") || name == "sources.tsv" || name == "system.json" || name.ends_with(".meta.json"))
        })
        .map(|p| (p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap()))
        .collect()
}

fn c9_determinism(root: &Path) -> Check {
    let a = mini_pipeline(&root.join("run_a"));
    let b = mini_pipeline(&root.join("run_b"));
    let names_a: Vec<&str> = a.iter().map(|x| x.0.as_str()).collect();
    let names_b: Vec<&str> = b.iter().map(|x| x.0.as_str()).collect();
    let differing: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x.1 != y.1).map(|(x, _)| x.0.as_str()).collect();
    let kinds = ["corpus/", "clf.ckpt", "vc.ckpt", "vc.ckpt.log.tsv", "conv/", "enh/", "report.tsv", "report.table.tsv"];
    let covered = kinds.iter().all(|k| names_a.iter().any(|n| n.starts_with(k)));
    (
        names_a == names_b && differing.is_empty() && covered,
        format!("{} artifacts compared byte for byte, {} differ {:?}", a.len(), differing.len(), differing),
    )
}

fn c10_signal_checks() -> Check {
    let mut notes = Vec::new();
    let mut ok = true;
    let cfg = AnalysisConfig::default();
    let speech: Vec<Waveform> = (0..4).map(|i| synth_toy_utterance(7, i, Style::Neutral, i).unwrap().0).collect();
    let ltas = compute_ltas(&speech, &cfg).unwrap();

    // achieved SNR over the speech's active samples
    let mut worst = 0.0f64;
    for (i, s) in speech.iter().enumerate() {
        let noise = speech_shaped_noise(&ltas, s.duration_s() + 0.3, 100 + i as u64, s.sample_rate()).unwrap();
        for snr in [0.0, -1.0, -3.0, -6.0, -9.0, 5.0] {
            let mix = mix_at_snr(s, &noise, snr).unwrap();
            let mask = active_mask(s.samples()).unwrap();
            let (mut ps, mut pn) = (0.0, 0.0);
            for ((x, y), m) in s.samples().iter().zip(mix.samples()).zip(&mask) {
                if *m {
                    ps += x * x;
                    pn += (y - x) * (y - x);
                }
            }
            worst = worst.max((10.0 * (ps / pn).log10() - snr).abs());
        }
    }
    ok &= worst <= 0.01;
    notes.push(format!("SNR error {worst:.1e} dB"));

    // noise spectrum against its target, bands above 1% of the peak
    let noise = speech_shaped_noise(&ltas, 20.0, 3, 16000).unwrap();
    let got = compute_ltas(std::slice::from_ref(&noise), &cfg).unwrap();
    let peak = ltas.bands().iter().cloned().fold(0.0, f64::max);
    let diff: Vec<f64> = (0..ltas.bands().len())
        .filter(|&k| ltas.bands()[k] > 0.01 * peak)
        .map(|k| 20.0 * (got.bands()[k] / ltas.bands()[k]).log10())
        .collect();
    let offset = mean(&diff);
    let band_err = diff.iter().map(|d| (d - offset).abs()).fold(0.0, f64::max);
    ok &= band_err <= 2.0;
    notes.push(format!("LTAS worst band {band_err:.2} dB"));

    let mut f0_err = 0.0f64;
    for hz in [90.0, 120.0, 180.0, 250.0, 330.0] {
        let w = Waveform::new((0..16000).map(|n| 0.3 * (2.0 * PI * hz * n as f64 / 16000.0).sin()).collect(), 16000).unwrap();
        let mut errs: Vec<f64> = estimate_f0(&w, &cfg, &F0Config::default()).voiced().map(|f| (f - hz).abs()).collect();
        errs.sort_by(f64::total_cmp);
        f0_err = f0_err.max(errs.get(errs.len() / 2).copied().unwrap_or(f64::INFINITY));
    }
    ok &= f0_err < 2.0;
    notes.push(format!("worst median f0 error {f0_err:.3} Hz"));

    let mut rng = seeded(21);
    let x = Waveform::new((0..16000).map(|_| 0.1 * normal(&mut rng)).collect(), 16000).unwrap();
    let base = mgc_from_spectrum(&x, &cfg, &MgcConfig::default());
    let (mut c0_err, mut rest) = (0.0f64, 0.0f64);
    for g in [0.25, 2.0, 3.5] {
        let y = mgc_from_spectrum(&x.scaled(g), &cfg, &MgcConfig::default());
        for (a, b) in base.coeffs.iter().zip(&y.coeffs) {
            c0_err = c0_err.max((b[0] - a[0] - f64::ln(g)).abs());
            rest = rest.max(a[1..].iter().zip(&b[1..]).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max));
        }
    }
    ok &= c0_err <= 0.01 && rest <= 1e-6;
    notes.push(format!("mgc0 shift error {c0_err:.1e}, other coefficients moved {rest:.1e}"));
    (ok, notes.join("; "))
}

fn run(id: usize, name: &str, f: impl FnOnce() -> Check) -> bool {
    let t = Instant::now();
    let (pass, detail) = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        (false, format!("panicked: {}", msg.unwrap_or_default()))
    });
    println!(
        "criterion {id:>2} {} {name} ({:.1} s): {detail}",
        if pass { "PASS" } else { "FAIL" },
        t.elapsed().as_secs_f64()
    );
    pass
}

#[test]
fn acceptance() {
    let tmp = tempfile::tempdir().unwrap();
    let setup = training_setup(tmp.path());
    let clf_path = tmp.path().join("classifier.ckpt");
    let mut results = vec![
        run(1, "loss oracles", c1_loss_oracles),
        run(2, "gradient checks", c2_gradient_checks),
        run(3, "SNR monotonicity", c3_snr_monotonic),
        run(4, "SSDRC direction", c4_ssdrc_direction),
        run(5, "Lombard direction", c5_lombard_direction),
        run(6, "style classifier", || c6_classifier(&setup, &clf_path)),
    ];
    let mut c8 = None;
    results.push(run(7, "VC training descent", || {
        let (c7, second) = c7_c8_training(&setup, &clf_path);
        c8 = Some(second);
        c7
    }));
    results.push(run(8, "style preservation", || {
        c8.take().unwrap_or((false, "not run: training failed".into()))
    }));
    results.push(run(9, "determinism", || c9_determinism(&tmp.path().join("det"))));
    results.push(run(10, "signal checks", c10_signal_checks));
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, p)| !**p).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
