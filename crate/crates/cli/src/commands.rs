use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use vpidm::container::{write_records, TensorRecord};
use vpidm::diffusion::{sample_marginal, ModelContext, ScoreModelRegistry};
use vpidm::metrics::{self, si_sdr, MetricReport, UtteranceMetrics};
use vpidm::sampler::{euler_forward, reverse_trajectory, summarize_path, SamplerGrid, StepSummary};
use vpidm::schedule::{tabulate, ScheduleRow};
use vpidm::signal::{load_wav, save_wav, scale, unscale, ChannelPolicy, SampleFormat, Waveform};
use vpidm::{ScheduleKind, SpectroTensor, Time};

use crate::config::{stem, RunConfig};
use crate::{CliError, Export, Format, WavEncoding};

#[derive(Clone, Debug, Args)]
pub struct AudioOptions {
    /// Average multichannel input to mono instead of rejecting it.
    #[arg(long)]
    downmix: bool,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn load(path: &Path, audio: &AudioOptions) -> Result<Waveform, CliError> {
    let policy = if audio.downmix {
        ChannelPolicy::Downmix
    } else {
        ChannelPolicy::Reject
    };
    load_wav(path, policy).map_err(|e| match CliError::from(e) {
        CliError::Io(m) => io_err(path, m),
        other => other,
    })
}

fn load_pair(audio: &AudioOptions, clean: &Path, noisy: &Path) -> Result<(Waveform, Waveform), CliError> {
    let c = load(clean, audio)?;
    let n = load(noisy, audio)?;
    if c.sample_rate() != n.sample_rate() {
        return Err(CliError::Io(format!(
            "sample rates differ: {} Hz ({}) vs {} Hz ({})",
            c.sample_rate(),
            clean.display(),
            n.sample_rate(),
            noisy.display()
        )));
    }
    if c.len() != n.len() {
        return Err(vpidm::Error::LengthMismatch {
            left: c.len(),
            right: n.len(),
        }
        .into());
    }
    Ok((c, n))
}

/// STFT followed by amplitude compression.
fn analyze(cfg: &RunConfig, w: &Waveform) -> Result<SpectroTensor, CliError> {
    let spec = cfg.stft()?.forward(w)?;
    Ok(scale(&spec, &cfg.scaling()?))
}

fn write_text(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| io_err(p, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn write_sptn(path: &Path, records: &[TensorRecord]) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    write_records(std::io::BufWriter::new(file), records).map_err(|e| io_err(path, e))
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Numerical(e.to_string()))
}

fn steps_csv(rows: &[StepSummary]) -> String {
    let mut out = String::from("k,t,norm,mean,max_abs\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{},{}\n", r.k, r.t, r.norm, r.mean, r.max_abs));
    }
    out
}

pub fn schedule_dump(cfg: &RunConfig, points: usize, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    let s = cfg.schedule()?;
    let rows = tabulate(&s, points).map_err(CliError::config)?;
    let text = match format {
        Format::Csv => {
            let mut text = String::from("t,beta,alpha,lambda,big_g,small_g\n");
            for r in &rows {
                text.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.t, r.beta, r.alpha, r.lambda, r.big_g, r.small_g
                ));
            }
            text
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Dump<'a> {
                schedule: &'a str,
                config: &'a RunConfig,
                rows: &'a [ScheduleRow],
            }
            to_json(&Dump {
                schedule: s.name(),
                config: cfg,
                rows: &rows,
            })?
        }
    };
    write_text(out, &text)
}

pub fn simulate_forward(
    cfg: &RunConfig,
    audio: &AudioOptions,
    clean: &Path,
    noisy: &Path,
    out_dir: &Path,
    times: &[f64],
    export: Export,
) -> Result<(), CliError> {
    let times = times
        .iter()
        .map(|&t| Time::new(t).map_err(CliError::config))
        .collect::<Result<Vec<_>, _>>()?;
    let s = cfg.schedule()?;
    let grid = cfg.grid()?;
    let (c, n) = load_pair(audio, clean, noisy)?;
    let x0 = analyze(cfg, &c)?;
    let y = analyze(cfg, &n)?;
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut records = vec![
        TensorRecord {
            label: "x0".into(),
            t: 0.0,
            tensor: x0.clone(),
        },
        TensorRecord {
            label: "y".into(),
            t: 0.0,
            tensor: y.clone(),
        },
    ];
    for &t in &times {
        let (xt, _) = sample_marginal(&x0, &y, &s, t, &mut rng)?;
        records.push(TensorRecord {
            label: "state".into(),
            t: t.get(),
            tensor: xt,
        });
    }
    let mut csv = String::from("label,t,norm,mean,max_abs\n");
    for r in &records {
        let x = &r.tensor;
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.label,
            r.t,
            x.norm(),
            x.iter().sum::<f64>() / x.len() as f64,
            x.max_abs()
        ));
    }
    write_sptn(&out_dir.join("states.sptn"), &records)?;
    write_text(Some(&out_dir.join("states.csv")), &csv)?;

    if export != Export::None {
        let path = euler_forward(&x0, &y, &s, &grid, &mut rng)?;
        let summary = summarize_path(&path, &grid, false)?;
        write_text(Some(&out_dir.join("euler.csv")), &steps_csv(&summary))?;
        if export == Export::Full {
            let records: Vec<TensorRecord> = path
                .into_iter()
                .zip(&summary)
                .map(|(tensor, row)| TensorRecord {
                    label: format!("euler/{}", row.k),
                    t: row.t,
                    tensor,
                })
                .collect();
            write_sptn(&out_dir.join("euler.sptn"), &records)?;
        }
    }
    Ok(())
}

pub struct EnhanceJob {
    pub clean: Vec<PathBuf>,
    pub noisy: Vec<PathBuf>,
    pub noise: Vec<PathBuf>,
    pub out: PathBuf,
    pub metrics: Option<PathBuf>,
    pub model: String,
    pub wav_format: WavEncoding,
    pub export: Export,
}

struct Enhanced {
    metrics: UtteranceMetrics,
    input_si_sdr: f64,
}

pub fn enhance_oracle(cfg: &RunConfig, audio: &AudioOptions, job: EnhanceJob) -> Result<(), CliError> {
    eprintln!(
        "vpidm: VALIDATION ONLY: the {:?} score model is given the clean reference; this is not blind enhancement",
        job.model
    );
    if job.clean.len() != job.noisy.len() || !(job.noise.is_empty() || job.noise.len() == job.clean.len()) {
        return Err(CliError::Config(format!(
            "need matching file counts: {} clean, {} noisy, {} noise",
            job.clean.len(),
            job.noisy.len(),
            job.noise.len()
        )));
    }
    let registry = ScoreModelRegistry::with_builtins();
    if !registry.names().any(|n| n == job.model) {
        let known: Vec<&str> = registry.names().collect();
        return Err(CliError::Config(format!(
            "unknown score model {:?}; registered: {}",
            job.model,
            known.join(", ")
        )));
    }
    let s = cfg.schedule()?;
    let grid = cfg.grid()?;
    cfg.stft()?;
    cfg.scaling()?;

    let single = job.clean.len() == 1;
    let outputs: Vec<PathBuf> = if single {
        vec![job.out.clone()]
    } else {
        fs::create_dir_all(&job.out).map_err(|e| io_err(&job.out, e))?;
        job.noisy
            .iter()
            .map(|p| job.out.join(format!("{}.wav", stem(p))))
            .collect()
    };
    let metrics_path = job.metrics.clone().unwrap_or_else(|| {
        if single {
            job.out.with_extension("csv")
        } else {
            job.out.join("metrics.csv")
        }
    });

    let results = cfg.thread_pool()?.install(|| {
        (0..job.clean.len())
            .into_par_iter()
            .map(|i| enhance_one(cfg, audio, &job, &registry, &s, &grid, i, &outputs[i]))
            .collect::<Result<Vec<_>, _>>()
    })?;

    let mut report = MetricReport::default();
    for r in results {
        println!(
            "{}: SI-SDR {:.2} dB -> {:.2} dB{}",
            r.metrics.utterance_id,
            r.input_si_sdr,
            r.metrics.si_sdr.value,
            if r.metrics.si_sdr.infinite { " (exact)" } else { "" }
        );
        report.push(r.metrics);
    }
    write_text(Some(&metrics_path), &report.to_csv())
}

#[allow(clippy::too_many_arguments)]
fn enhance_one(
    cfg: &RunConfig,
    audio: &AudioOptions,
    job: &EnhanceJob,
    registry: &ScoreModelRegistry,
    s: &ScheduleKind,
    grid: &SamplerGrid,
    index: usize,
    out: &Path,
) -> Result<Enhanced, CliError> {
    let (clean, noisy) = load_pair(audio, &job.clean[index], &job.noisy[index])?;
    let noise: Vec<f64> = match job.noise.get(index) {
        Some(p) => {
            let w = load(p, audio)?;
            if w.len() != clean.len() {
                return Err(vpidm::Error::LengthMismatch {
                    left: clean.len(),
                    right: w.len(),
                }
                .into());
            }
            w.into_samples()
        }
        None => noisy.samples().iter().zip(clean.samples()).map(|(n, c)| n - c).collect(),
    };
    let x0 = analyze(cfg, &clean)?;
    let y = analyze(cfg, &noisy)?;
    let model = registry.build(
        &job.model,
        &ModelContext {
            schedule: s,
            clean: Some(&x0),
        },
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let result = reverse_trajectory(
        &y,
        s,
        grid,
        model.as_ref(),
        cfg.discretization.into(),
        job.export != Export::None,
        &mut rng,
    )?;
    let spec = unscale(&result.estimate, &cfg.scaling()?);
    let estimate = cfg.stft()?.inverse(&spec, clean.len(), clean.sample_rate())?;
    let format = match job.wav_format {
        WavEncoding::Float32 => SampleFormat::Float32,
        WavEncoding::Pcm16 => SampleFormat::Pcm16,
    };
    save_wav(out, &estimate, format).map_err(|e| io_err(out, e))?;

    if let Some(path) = result.path {
        let summary = summarize_path(&path, grid, true)?;
        write_text(Some(&out.with_extension("trajectory.csv")), &steps_csv(&summary))?;
        if job.export == Export::Full {
            let records: Vec<TensorRecord> = path
                .into_iter()
                .zip(&summary)
                .map(|(tensor, row)| TensorRecord {
                    label: format!("reverse/{}", row.k),
                    t: row.t,
                    tensor,
                })
                .collect();
            write_sptn(&out.with_extension("trajectory.sptn"), &records)?;
        }
    }

    let id = stem(&job.noisy[index]);
    Ok(Enhanced {
        metrics: UtteranceMetrics::compute(id, estimate.samples(), clean.samples(), &noise)?,
        input_si_sdr: si_sdr(noisy.samples(), clean.samples())?,
    })
}

pub fn ie_report(
    cfg: &RunConfig,
    audio: &AudioOptions,
    clean: &Path,
    noisy: &Path,
    format: Format,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let schedules = [ScheduleKind::Vp(cfg.vp()?), ScheduleKind::Ve(cfg.ve()?)];
    let (c, n) = load_pair(audio, clean, noisy)?;
    let report = metrics::ie_report(&analyze(cfg, &c)?, &analyze(cfg, &n)?, &schedules)?;
    let text = match format {
        Format::Csv => report.to_csv(),
        Format::Json => to_json(&report)?,
    };
    write_text(out, &text)
}
