use crate::cli::{load_checkpoint, save_checkpoint, write_manifest, CliError};
use crate::model::average_checkpoints;
use clap::Args;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Args, Clone, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct AverageArgs {
    /// Checkpoints to average (at least one)
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output checkpoint path
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_average(args: &AverageArgs) -> Result<(), CliError> {
    if args.inputs.is_empty() {
        return Err(CliError::Usage("average needs at least one checkpoint".into()));
    }
    let mut loaded = Vec::with_capacity(args.inputs.len());
    for p in &args.inputs {
        loaded.push(load_checkpoint(p)?);
    }
    let mean = average_checkpoints(&loaded)?;
    save_checkpoint(&args.out, &mean)?;
    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            write_manifest(dir, "average", args, 0)?;
        }
    }
    Ok(())
}
