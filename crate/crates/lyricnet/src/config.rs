//! Flat `key = value` run configuration.
//!
//! One setting per line, `#` starts a comment, unknown or repeated keys are
//! errors. [`print_config`] dumps every key, so its output parses back to the
//! same configuration.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use lyricnet_core::fusion::PipelineConfig;
use lyricnet_core::loss::Loss;

use crate::error::{Error, Result};

pub fn print_config(c: &PipelineConfig) -> String {
    let (loss, a1, a2) = match c.lyrics_loss {
        Loss::Mse => ("mse", 0.5, 0.1),
        Loss::Directional { alpha1, alpha2 } => ("directional", alpha1, alpha2),
    };
    let opt = |v: Option<usize>, none: &str| v.map_or(none.to_string(), |v| v.to_string());
    let mut s = String::new();
    let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
    kv("model", c.model.to_string());
    kv("modality_mask", c.modality_mask.to_string());
    kv("lyrics_activation", c.lyrics_activation.to_string());
    kv("lyrics_loss", loss.into());
    kv("lyrics_alpha1", a1.to_string());
    kv("lyrics_alpha2", a2.to_string());
    kv("bottleneck_divisor", c.bottleneck_divisor.to_string());
    kv("ae_epochs", c.ae.epochs.to_string());
    kv("ae_learning_rate", c.ae.learning_rate.to_string());
    kv("ae_batch_size", c.ae.batch_size.to_string());
    kv("ae_val_fraction", c.ae.val_fraction.to_string());
    kv("ae_patience", opt(c.ae.patience, "none"));
    kv("fusion_dropout", c.fusion_dropout.to_string());
    kv("fusion_min_width", c.fusion_min_width.to_string());
    kv("fusion_lr", c.fusion_lr.to_string());
    kv("fusion_epochs", c.fusion_epochs.to_string());
    kv("fusion_batch", c.fusion_batch.to_string());
    kv("fusion_patience", opt(c.fusion_patience, "none"));
    kv("seed", c.seed.to_string());
    kv("scv_k", c.scv_k.to_string());
    kv("strat_bins", c.strat_bins.to_string());
    kv("max_folds", opt(c.max_folds, "all"));
    kv("baseline_stylometrics", c.baseline_stylometrics.to_string());
    s
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Usage(format!("invalid value `{value}` for `{key}`: {e}")))
}

fn parse_opt(key: &str, value: &str, none: &str) -> Result<Option<usize>> {
    if value.eq_ignore_ascii_case(none) {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

/// Applies one setting.
pub fn set(c: &mut PipelineConfig, key: &str, value: &str) -> Result<()> {
    let v = value.trim();
    match key.trim() {
        "model" => c.model = parse(key, v)?,
        "modality_mask" => c.modality_mask = parse(key, v)?,
        "lyrics_activation" => c.lyrics_activation = parse(key, v)?,
        "lyrics_loss" => {
            c.lyrics_loss = match v.to_ascii_lowercase().as_str() {
                "mse" => Loss::Mse,
                "directional" => match c.lyrics_loss {
                    d @ Loss::Directional { .. } => d,
                    Loss::Mse => Loss::DIRECTIONAL_DEFAULT,
                },
                _ => {
                    return Err(Error::Usage(format!(
                        "lyrics_loss must be mse or directional, got `{v}`"
                    )))
                }
            }
        }
        "lyrics_alpha1" | "lyrics_alpha2" => {
            let x: f32 = parse(key, v)?;
            // ignored under plain MSE
            if let Loss::Directional { alpha1, alpha2 } = &mut c.lyrics_loss {
                *(if key.ends_with('1') { alpha1 } else { alpha2 }) = x;
            }
        }
        "bottleneck_divisor" => c.bottleneck_divisor = parse(key, v)?,
        "ae_epochs" => c.ae.epochs = parse(key, v)?,
        "ae_learning_rate" => c.ae.learning_rate = parse(key, v)?,
        "ae_batch_size" => c.ae.batch_size = parse(key, v)?,
        "ae_val_fraction" => c.ae.val_fraction = parse(key, v)?,
        "ae_patience" => c.ae.patience = parse_opt(key, v, "none")?,
        "fusion_dropout" => c.fusion_dropout = parse(key, v)?,
        "fusion_min_width" => c.fusion_min_width = parse(key, v)?,
        "fusion_lr" => c.fusion_lr = parse(key, v)?,
        "fusion_epochs" => c.fusion_epochs = parse(key, v)?,
        "fusion_batch" => c.fusion_batch = parse(key, v)?,
        "fusion_patience" => c.fusion_patience = parse_opt(key, v, "none")?,
        "seed" => c.seed = parse(key, v)?,
        "scv_k" => c.scv_k = parse(key, v)?,
        "strat_bins" => c.strat_bins = parse(key, v)?,
        "max_folds" => c.max_folds = parse_opt(key, v, "all")?,
        "baseline_stylometrics" => c.baseline_stylometrics = parse(key, v)?,
        other => return Err(Error::Usage(format!("unknown config key `{other}`"))),
    }
    Ok(())
}

/// Parses settings on top of `base`. The loss kind is applied before its weights,
/// wherever they appear in the text.
pub fn parse_config(text: &str, base: PipelineConfig) -> Result<PipelineConfig> {
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("config line {}: expected `key = value`", i + 1)))?;
        let k = k.trim();
        if !seen.insert(k.to_string()) {
            return Err(Error::Usage(format!("config line {}: `{k}` set twice", i + 1)));
        }
        entries.push((i + 1, k, v));
    }
    entries.sort_by_key(|(_, k, _)| k.starts_with("lyrics_alpha"));
    let mut c = base;
    for (line, k, v) in entries {
        set(&mut c, k, v).map_err(|e| Error::Usage(format!("config line {line}: {e}")))?;
    }
    c.validate().map_err(|e| Error::Usage(format!("config: {e}")))?;
    Ok(c)
}

pub fn load_config(path: &Path, base: PipelineConfig) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, base)
}
