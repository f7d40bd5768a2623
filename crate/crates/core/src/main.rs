use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use lombard_vc::audio::AnalysisConfig;
use lombard_vc::corpus::{build_manifest, synth_toy_corpus, Manifest, Style, ToyCorpusConfig};
use lombard_vc::features::lombard_contrast;
use lombard_vc::pipeline::{
    extract, format_table, load_classifier, run_conversion, run_enhance, run_eval, save_classifier, save_vc,
    train_classifier_stage, train_vc_stage, write_experiment_report, EvalRequest, ExperimentConfig, SystemSource,
};
use lombard_vc::vc::ConditioningMode;
use lombard_vc::{Error, Result};

#[derive(Parser)]
#[command(name = "lvc", version, about = "Lombard-style voice conversion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Cond {
    None,
    F0,
    Mgc,
    F0mgc,
}

impl From<Cond> for ConditioningMode {
    fn from(c: Cond) -> Self {
        match c {
            Cond::None => ConditioningMode::None,
            Cond::F0 => ConditioningMode::F0,
            Cond::Mgc => ConditioningMode::Mgc,
            Cond::F0mgc => ConditioningMode::F0Mgc,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic two-style corpus and its manifest.
    SynthCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        speakers: usize,
        #[arg(long, default_value_t = 10)]
        utterances: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Scan `<root>/<speaker>/<style>/*.wav` into a manifest.
    Manifest {
        #[arg(long)]
        root: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump conditioning features, speaker embeddings and the vocabulary.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the Lombard/neutral style classifier.
    TrainClassifier {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Train a conversion model.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        conditioning: Option<Cond>,
        #[arg(long, value_enum)]
        style_loss: Option<Toggle>,
        /// Style classifier checkpoint, required with the style loss.
        #[arg(long)]
        classifier: Option<PathBuf>,
        /// Directory of extracted `.feat` dumps to condition on.
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Convert manifest utterances into a target speaker's voice.
    Convert {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        style: Option<Style>,
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Apply spectral shaping and dynamic range compression.
    Enhance {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        style: Option<Style>,
    },
    /// Score systems in speech-shaped noise and write a report.
    Eval {
        /// `name=DIR`, `name=manifest.tsv` or `name=manifest.tsv@style`.
        #[arg(long = "system", required = true)]
        systems: Vec<String>,
        /// Shared clean references; otherwise each system is its own reference.
        #[arg(long)]
        clean: Option<String>,
        #[arg(long = "snr", allow_negative_numbers = true)]
        snrs: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Report f0 and spectral contrasts between Lombard and neutral speech.
    Analyze {
        #[arg(long)]
        manifest: PathBuf,
    },
}

fn config(path: Option<&Path>) -> Result<ExperimentConfig> {
    path.map_or_else(|| Ok(ExperimentConfig::default()), ExperimentConfig::load)
}

fn manifest(path: &Path, style: Option<Style>) -> Result<Manifest> {
    let m = Manifest::read_tsv(path)?;
    match style {
        Some(s) => m.filter(|r| r.style == s),
        None => Ok(m),
    }
}

fn run(cmd: Command) -> Result<()> {
    let analysis = AnalysisConfig::default();
    match cmd {
        Command::SynthCorpus { out, speakers, utterances, seed } => {
            let m = synth_toy_corpus(&ToyCorpusConfig { speakers, utterances_per_style: utterances }, seed, &out)?;
            m.write_tsv(out.join("manifest.tsv"))?;
            println!("{} utterances from {} speakers in {}", m.len(), m.speakers().count(), out.display());
        }
        Command::Manifest { root, out } => {
            let m = build_manifest(&root)?;
            m.write_tsv(&out)?;
            println!("{} utterances", m.len());
        }
        Command::Extract { manifest: mp, out } => {
            let p = extract(&manifest(&mp, None)?, &out, &analysis)?;
            println!("{} utterances, {} speakers, {} phonemes", p.examples.len(), p.speakers.len(), p.vocab.len());
        }
        Command::TrainClassifier { manifest: mp, out, config: c } => {
            let cfg = config(c.as_deref())?;
            let o = train_classifier_stage(&manifest(&mp, None)?, &cfg, &analysis)?;
            save_classifier(&out, &o, &cfg)?;
            println!("train accuracy {:.4}", o.train_accuracy);
            match o.heldout_accuracy {
                Some(a) => println!("held-out accuracy {a:.4}"),
                None => println!("held-out accuracy n/a"),
            }
        }
        Command::Train { manifest: mp, out, config: c, conditioning, style_loss, classifier, features } => {
            let mut cfg = config(c.as_deref())?;
            if let Some(m) = conditioning {
                cfg.conditioning = m.into();
            }
            if let Some(t) = style_loss {
                cfg.style_loss = matches!(t, Toggle::On);
            }
            let clf = classifier.as_deref().map(load_classifier).transpose()?;
            let o = train_vc_stage(&manifest(&mp, None)?, &cfg, &analysis, clf.as_ref(), features.as_deref())?;
            save_vc(&out, &o, &cfg)?;
            let last = o.log.records.last().map(|r| r.losses.l_rec).unwrap_or(f64::NAN);
            println!("{} steps, final l_rec {last:.4}", o.log.records.len());
        }
        Command::Convert { manifest: mp, checkpoint, target, out, config: c, style, features } => {
            let cfg = config(c.as_deref())?;
            let files = run_conversion(&manifest(&mp, style)?, &checkpoint, &target, &out, &cfg, &analysis, features.as_deref())?;
            println!("{} files in {}", files.len(), out.display());
        }
        Command::Enhance { manifest: mp, out, config: c, style } => {
            let cfg = config(c.as_deref())?;
            let files = run_enhance(&manifest(&mp, style)?, &out, &cfg)?;
            println!("{} files in {}", files.len(), out.display());
        }
        Command::Eval { systems, clean, snrs, seed, out, config: c, force } => {
            let cfg = config(c.as_deref())?;
            let systems = systems
                .iter()
                .map(|s| {
                    let (name, src) =
                        s.split_once('=').ok_or_else(|| Error::invalid(format!("expected name=source, got '{s}'")))?;
                    Ok((name.to_string(), SystemSource::parse(src)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let req = EvalRequest {
                clean: clean.as_deref().map(SystemSource::parse).transpose()?,
                systems,
                snrs: if snrs.is_empty() { cfg.snrs.clone() } else { snrs },
                seed: seed.unwrap_or(cfg.noise_seed),
                force,
            };
            let report = run_eval(&req)?;
            write_experiment_report(&out, &report)?;
            print!("{}", format_table(&report.rows));
        }
        Command::Analyze { manifest: mp } => {
            let s = lombard_contrast(&manifest(&mp, None)?, Style::Lombard, Style::Neutral, &analysis)?;
            println!("quantity\tlombard\tneutral\tdelta");
            for (name, a, b, d) in [
                ("f0_hz", s.a.f0_hz.mean, s.b.f0_hz.mean, s.delta_f0_hz),
                ("mgc0", s.a.mgc0.mean, s.b.mgc0.mean, s.delta_mgc0),
                ("mgc1", s.a.mgc1.mean, s.b.mgc1.mean, s.delta_mgc1),
            ] {
                println!("{name}\t{a:.4}\t{b:.4}\t{d:+.4}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
