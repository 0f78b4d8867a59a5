use std::path::PathBuf;

use anyhow::{bail, Context, Result};

use crate::config::Global;
use crate::io::read_text;
use crate::manifest::{sha256, Manifest, Mismatch, Status};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Manifest written by an earlier run.
    manifest: PathBuf,
}

pub fn run(global: &Global, args: &Args) -> Result<Status> {
    let text = read_text(&args.manifest)?;
    let m: Manifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", args.manifest.display()))?;
    for input in &m.inputs {
        let now = std::fs::read(&input.path).with_context(|| format!("reading input {}", input.path.display()))?;
        if sha256(&now) != input.sha256 {
            bail!("input {} changed since the recorded run", input.path.display());
        }
    }
    let source_out = args.manifest.parent().map(PathBuf::from).unwrap_or_default();
    if std::path::absolute(&source_out)? == std::path::absolute(&global.out)? {
        bail!("replay needs an --out directory different from the recorded one");
    }
    let replay = Global { out: global.out.clone(), seed: m.seed, threads: global.threads, file: None };
    let opts = m.options.clone();
    let status = match m.command.as_str() {
        "simulate" => {
            let o: super::simulate::Options = serde_json::from_value(opts)?;
            super::drive(&replay, "simulate", &o, Vec::new(), super::simulate::execute)
        }
        "synth" => {
            let o: super::synth::Options = serde_json::from_value(opts)?;
            let inputs = o.model_curves.iter().cloned().collect();
            super::drive(&replay, "synth", &o, inputs, super::synth::execute)
        }
        "peaks" => {
            let o: super::peaks::Options = serde_json::from_value(opts)?;
            let inputs = super::peaks::inputs(&o);
            super::drive(&replay, "peaks", &o, inputs, super::peaks::execute)
        }
        "fit" => {
            let o: super::fit::Options = serde_json::from_value(opts)?;
            let inputs = super::fit::inputs(&o);
            super::drive(&replay, "fit", &o, inputs, super::fit::execute)
        }
        "phi0" => {
            let o: super::phi0::Options = serde_json::from_value(opts)?;
            let inputs = super::phi0::inputs(&o)?;
            super::drive(&replay, "phi0", &o, inputs, super::phi0::execute)
        }
        other => bail!("manifest records unknown command {other:?}"),
    };
    // A failed original is reproduced when the replay fails the same way.
    let code = match &status {
        Ok(Status::Success) => 0,
        Ok(Status::NotConverged) => 3,
        Err(e) => crate::manifest::exit_code(e),
    };
    if code != m.exit_code {
        return Err(Mismatch(format!("exit code {code}, recorded {}", m.exit_code)).into());
    }
    let mut differing = Vec::new();
    for o in &m.outputs {
        let path = global.out.join(&o.path);
        match std::fs::read(&path) {
            Ok(bytes) if sha256(&bytes) == o.sha256 => {}
            _ => differing.push(o.path.display().to_string()),
        }
    }
    if !differing.is_empty() {
        return Err(Mismatch(format!("outputs differ: {}", differing.join(", "))).into());
    }
    println!("replayed {}: {} output(s) byte-identical", m.command, m.outputs.len());
    Ok(Status::Success)
}
