use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::json;

use encdi::entropy::{kl_entropy, mi_score, mutual_information_parts, EntropyMode, EntropyOptions};
use encdi::gmm::{CovarianceKind, GmmFitConfig};
use encdi::inference::{run_dataset_inference_with, InferenceOptions};
use encdi::obfuscate::{apply_obfuscation, ObfuscationKind, ObfuscationSpec, PadMode};
use encdi::preprocess::PipelineOptions;
use encdi::repio::{read_representations, write_representations, FileFormat};
use encdi::similarity::{pair_histogram, similarity_report, SimilarityOptions};
use encdi::synth::{generate_world, random_baseline, write_world, StealMap, SyntheticWorldConfig};
use encdi::{Error, Representations, Result};

use crate::report::{emit, to_value, RunManifest};
use crate::{
    CovFlag, EntropyArgs, InferArgs, ObfKindFlag, ObfuscateArgs, PadModeFlag, SimilarityArgs, StealMapFlag,
    SynthGenArgs,
};

fn load(path: &Path) -> Result<Representations> {
    read_representations(path)
}

pub fn synth_gen(args: &SynthGenArgs) -> Result<()> {
    let config = SyntheticWorldConfig {
        dim: args.dim,
        n_clusters: args.clusters,
        n_p1: args.n_p1,
        n_p2: args.n_p2,
        n_n: args.n_n,
        gap_rho: args.rho,
        steal_noise: args.steal_noise,
        steal_map: match args.steal_map {
            StealMapFlag::Orthogonal => StealMap::Orthogonal,
            StealMapFlag::RandomLinear => StealMap::RandomLinear,
            StealMapFlag::Identity => StealMap::Identity,
        },
        seed: args.seed,
    };
    let world = generate_world::<f64>(&config)?;
    let written = write_world(&world, &args.out)?;
    let manifest = RunManifest::new("synth-gen", &to_value(&config), &[], args.seed);
    emit(&manifest, "world", json!({ "out": args.out.display().to_string(), "files": written.files }), None)
}

pub fn infer(args: &InferArgs) -> Result<()> {
    let p1 = load(&args.p1)?;
    let p2 = load(&args.p2)?;
    let n = load(&args.n)?;
    let defaults = GmmFitConfig::for_dim(p2.dim());
    let gmm = GmmFitConfig {
        k: args.k.unwrap_or(defaults.k),
        covariance_kind: match args.cov {
            Some(CovFlag::Diag) => CovarianceKind::Diagonal,
            Some(CovFlag::Full) => CovarianceKind::Full,
            None => defaults.covariance_kind,
        },
        max_iters: args.max_iters,
        n_init: args.n_init,
        seed: args.seed,
        ..defaults
    };
    let options = InferenceOptions {
        gmm,
        alpha: args.alpha,
        pipeline: PipelineOptions { standardize: args.standardize, ..PipelineOptions::default() },
    };
    let verdict = run_dataset_inference_with(&p1, &p2, &n, &options)?;
    if let Some(path) = &args.audit {
        let text = serde_json::to_string_pretty(&verdict.audit).expect("audit serializes");
        fs::write(path, text + "\n")?;
    }
    let params = json!({ "options": options, "label": args.label });
    let manifest = RunManifest::new("infer", &params, &[&args.p1, &args.p2, &args.n], args.seed);
    emit(&manifest, "verdict", to_value(&verdict.record(&args.label)), args.out.as_ref())
}

pub fn similarity(args: &SimilarityArgs) -> Result<()> {
    let a = load(&args.a)?;
    let b = load(&args.b)?;
    let options = SimilarityOptions { raw: args.raw };
    let r = similarity_report(&a, &b, &options)?;
    if let Some(path) = &args.histogram {
        let h = pair_histogram(&r.per_pair_cosine, args.bins, Some((0.0, 1.0)))?;
        h.write_csv(BufWriter::new(fs::File::create(path)?))?;
    }
    if let Some(path) = &args.per_pair {
        let mut w = BufWriter::new(fs::File::create(path)?);
        writeln!(w, "pair,cosine,l2_score")?;
        for (i, (c, s)) in r.per_pair_cosine.iter().zip(&r.per_pair_l2_score).enumerate() {
            writeln!(w, "{i},{c},{s}")?;
        }
        w.flush()?;
    }
    let body = json!({
        "cosine_score": r.cosine_score,
        "cosine_stderr": r.cosine_stderr,
        "l2_score": r.l2_score,
        "l2_score_stderr": r.l2_score_stderr,
        "l1_mean": r.l1_mean,
        "l1_stderr": r.l1_stderr,
        "l2_mean": r.l2_mean,
        "l2_stderr": r.l2_stderr,
        "linf_mean": r.linf_mean,
        "linf_stderr": r.linf_stderr,
        "n_pairs": r.n_pairs,
    });
    let params = json!({ "options": options, "bins": args.bins });
    let manifest = RunManifest::new("similarity", &params, &[&args.a, &args.b], 0);
    emit(&manifest, "similarity", body, args.out.as_ref())
}

pub fn entropy(args: &EntropyArgs) -> Result<()> {
    let options = EntropyOptions {
        mode: if args.raw { EntropyMode::Raw } else { EntropyMode::Normalized },
        drop_constant_columns: !args.keep_constant_columns,
    };
    let sets = args.inputs.iter().map(|p| load(p)).collect::<Result<Vec<_>>>()?;
    let mut inputs: Vec<&Path> = args.inputs.iter().map(|p| p.as_path()).collect();
    let params = json!({
        "options": options,
        "mi_score": args.mi_score,
        "generated_baseline": args.mi_score && args.baseline.is_none(),
    });
    let (key, body) = match (sets.as_slice(), args.mi_score) {
        ([a], false) => ("entropy", to_value(&kl_entropy(a, &options)?)),
        ([_], true) => {
            return Err(Error::BadConfig("--mi-score needs a victim and a suspect set".into()));
        }
        ([a, b], false) => ("mutual_information", to_value(&mutual_information_parts(a, b, &options)?)),
        ([victim, suspect], true) => {
            let baseline = match &args.baseline {
                Some(path) => {
                    inputs.push(path);
                    load(path)?
                }
                None => random_baseline(victim.n_rows(), victim.dim(), args.seed)?,
            };
            ("mi_score", to_value(&mi_score(victim, suspect, &baseline, &options)?))
        }
        _ => unreachable!("clap limits inputs to one or two paths"),
    };
    let manifest = RunManifest::new("entropy", &params, &inputs, args.seed);
    emit(&manifest, key, body, args.out.as_ref())
}

pub fn obfuscate(args: &ObfuscateArgs) -> Result<()> {
    let input = load(&args.input)?;
    let spec = match args.kind {
        ObfKindFlag::Shuffle => ObfuscationSpec::shuffle(args.seed),
        ObfKindFlag::Pad => {
            let target = args.pad_dim.ok_or_else(|| Error::BadSpec("--pad-dim is required for pad".into()))?;
            let mode = match args.pad_mode {
                PadModeFlag::Append => PadMode::Append,
                PadModeFlag::RandomPositions => PadMode::RandomPositions,
            };
            ObfuscationSpec::pad(target, mode, args.seed)
        }
        ObfKindFlag::Transform => ObfuscationSpec::transform(args.scale, args.offset),
    };
    let out = apply_obfuscation(&input, &spec)?;
    write_representations(&out, &args.out, FileFormat::Binary)?;
    let manifest = RunManifest::new("obfuscate", &to_value(&spec), &[&args.input], args.seed);
    let body = json!({
        "spec": spec,
        "out": args.out.display().to_string(),
        "n_rows": out.n_rows(),
        "dim_in": input.dim(),
        "dim_out": out.dim(),
        "kind": match spec.kind {
            ObfuscationKind::Shuffle => "shuffle",
            ObfuscationKind::Pad => "pad",
            ObfuscationKind::Transform => "transform",
        },
    });
    emit(&manifest, "obfuscation", body, None)
}
