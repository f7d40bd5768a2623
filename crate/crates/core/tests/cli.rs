use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lvc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lvc")).args(args).output().expect("run lvc")
}

fn ok(args: &[&str]) -> String {
    let out = lvc(args);
    assert!(out.status.success(), "lvc {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    lvc(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn full_cli_round() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let corpus = d.join("corpus");
    ok(&["synth-corpus", "--out", s(&corpus), "--speakers", "3", "--utterances", "3", "--seed", "4"]);
    let manifest = corpus.join("manifest.tsv");
    let m = s(&manifest);

    let analysis = ok(&["analyze", "--manifest", m]);
    let f0_line = analysis.lines().find(|l| l.starts_with("f0_hz")).unwrap();
    assert!(f0_line.split('\t').nth(3).unwrap().starts_with('+'), "{analysis}");

    let cfg = d.join("run.conf");
    fs::write(
        &cfg,
        "classifier_steps = 10\nvc_steps = 6\njoint_steps = 4\nbatch_size = 4\ntargets = s3\n\
         val_fraction = 0\ngriffin_lim_iters = 4\n",
    )
    .unwrap();
    let c = s(&cfg);

    let clf = d.join("clf.ckpt");
    ok(&["train-classifier", "--manifest", m, "--out", s(&clf), "--config", c]);
    assert_eq!(fs::read_to_string(d.join("clf.ckpt.loss.tsv")).unwrap().lines().count(), 11);

    // the style loss needs a classifier
    let vc = d.join("vc.ckpt");
    assert_eq!(code(&["train", "--manifest", m, "--out", s(&vc), "--config", c, "--style-loss", "on"]), 2);
    assert!(!vc.exists());

    ok(&["train", "--manifest", m, "--out", s(&vc), "--config", c, "--conditioning", "f0", "--style-loss", "on", "--classifier", s(&clf)]);
    let log = fs::read_to_string(d.join("vc.ckpt.log.tsv")).unwrap();
    assert!(log.starts_with("step\tl_rec\tl_kl\tl_s\ttotal\n"));
    assert_eq!(log.lines().count(), 11);

    let base = d.join("base.ckpt");
    ok(&["train", "--manifest", m, "--out", s(&base), "--config", c, "--style-loss", "off"]);
    assert!(fs::read_to_string(d.join("base.ckpt.log.tsv")).unwrap().starts_with("step\tl_rec\tl_kl\ttotal\n"));

    let feats = d.join("feats");
    ok(&["extract", "--manifest", m, "--out", s(&feats)]);
    assert!(feats.join("embeddings.tsv").exists());
    assert_eq!(fs::read_dir(&feats).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "feat")).count(), 18);
    let from_dump = d.join("dump.ckpt");
    ok(&["train", "--manifest", m, "--out", s(&from_dump), "--config", c, "--conditioning", "f0", "--features", s(&feats)]);
    // a dump directory missing the utterances is rejected before training
    let empty = d.join("empty");
    fs::create_dir_all(&empty).unwrap();
    assert_eq!(code(&["train", "--manifest", m, "--out", s(&d.join("x.ckpt")), "--config", c, "--conditioning", "mgc", "--features", s(&empty)]), 2);

    let conv = d.join("conv");
    ok(&["convert", "--manifest", m, "--checkpoint", s(&vc), "--target", "s3", "--out", s(&conv), "--config", c, "--style", "lombard"]);
    let mut names: Vec<String> = fs::read_dir(&conv)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".wav"))
        .collect();
    names.sort();
    assert_eq!(names.len(), 6);
    assert!(names.iter().all(|n| n.ends_with("__to__s3.wav")));
    for n in &names {
        let utt = n.trim_end_matches("__to__s3.wav");
        let spk = utt.split('_').next().unwrap();
        let src = hound::WavReader::open(corpus.join(spk).join("lombard").join(format!("{utt}.wav"))).unwrap().duration();
        let out = hound::WavReader::open(conv.join(n)).unwrap().duration();
        assert!(src.abs_diff(out) <= 200, "{n}: {src} vs {out}");
    }
    assert_eq!(code(&["convert", "--manifest", m, "--checkpoint", s(&vc), "--target", "s9", "--out", s(&d.join("c2"))]), 2);

    let enh = d.join("enh");
    ok(&["enhance", "--manifest", m, "--out", s(&enh), "--config", c]);
    let report = d.join("report.tsv");
    let table = ok(&[
        "eval", "--clean", m, "--system", &format!("ssdrc={}", s(&enh)), "--system", &format!("plain={m}"),
        "--snr", "-1", "--snr", "-3", "--out", s(&report), "--config", c,
    ]);
    let rows = fs::read_to_string(&report).unwrap();
    assert_eq!(rows.lines().count(), 5);
    let systems: Vec<(&str, &str)> = rows.lines().skip(1).map(|l| {
        let mut f = l.split('\t');
        (f.next().unwrap(), f.next().unwrap())
    }).collect();
    assert_eq!(systems, [("plain", "-3"), ("plain", "-1"), ("ssdrc", "-3"), ("ssdrc", "-1")]);
    assert!(table.contains(" ("), "{table}");
    assert!(d.join("report.table.tsv").exists() && d.join("report.meta.json").exists());

    // systems made under another configuration are refused unless forced
    let other_cfg = d.join("other.conf");
    fs::write(&other_cfg, "drc.ratio = 3\n").unwrap();
    let enh2 = d.join("enh2");
    ok(&["enhance", "--manifest", m, "--out", s(&enh2), "--config", s(&other_cfg)]);
    let mixed_out = d.join("mixed.tsv");
    let mixed = ["eval", "--system", &format!("a={}", s(&enh)), "--system", &format!("b={}", s(&enh2)), "--snr", "-1", "--out", s(&mixed_out)];
    assert_eq!(code(&mixed), 2);
    let mut forced = mixed.to_vec();
    forced.push("--force");
    ok(&forced);

    // ids that do not line up with the references abort the evaluation
    let lombard_only = format!("{m}@lombard");
    assert_eq!(code(&["eval", "--clean", m, "--system", &format!("l={lombard_only}"), "--out", s(&d.join("bad.tsv"))]), 2);
}

#[test]
fn input_errors_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.conf");
    fs::write(&cfg, "colour = blue\n").unwrap();
    let m = tmp.path().join("missing.tsv");
    assert_eq!(code(&["enhance", "--manifest", s(&m), "--out", s(tmp.path()), "--config", s(&cfg)]), 2);
    assert_eq!(code(&["analyze", "--manifest", s(&m)]), 3);
    assert_eq!(code(&["train", "--manifest", s(&m), "--out", "x", "--conditioning", "pitch"]), 2);
    let bad_manifest = tmp.path().join("bad.tsv");
    fs::write(&bad_manifest, "not a manifest\n").unwrap();
    assert_eq!(code(&["analyze", "--manifest", s(&bad_manifest)]), 3);
}
