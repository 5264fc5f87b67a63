use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::seed;

/// One record in every five goes to the held-out test set (an 80/20 split).
pub const TEST_FRACTION_DENOMINATOR: usize = 5;

/// Deterministic held-out test set plus stratified k-fold assignment of the
/// remaining ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub k: usize,
    pub strat_bins: usize,
    pub fold_of: BTreeMap<String, usize>,
    pub test_ids: BTreeSet<String>,
}

impl SplitPlan {
    pub fn fold_ids(&self, fold: usize) -> BTreeSet<&str> {
        self.fold_of
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    /// Ids of every fold except `val_fold`.
    pub fn train_ids(&self, val_fold: usize) -> BTreeSet<&str> {
        self.fold_of
            .iter()
            .filter(|(_, &f)| f != val_fold)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0; self.k];
        for &f in self.fold_of.values() {
            sizes[f] += 1;
        }
        sizes
    }

    /// Content hash of the plan, stable across runs and platforms.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("seed={};k={};bins={}\n", self.seed, self.k, self.strat_bins));
        for (id, f) in &self.fold_of {
            h.update(format!("{id}\t{f}\n"));
        }
        for id in &self.test_ids {
            h.update(format!("{id}\ttest\n"));
        }
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Equal-width bin of a normalised target on `[0, 1]`.
pub fn strat_bin(target: f32, bins: usize) -> usize {
    let b = (target.clamp(0.0, 1.0) * bins as f32) as usize;
    b.min(bins - 1)
}

/// Carves a stratified 20% test set, then deals the remaining ids into `k`
/// stratified folds.
///
/// Within each target bin, members are ordered by id and shuffled with `seed`.
/// The bins are then walked in order as one sequence: every fifth member is
/// set aside for test, and the rest are dealt round-robin into folds. Dealing
/// runs continuously across bins, so each bin's members land in consecutive
/// folds and per-bin fold counts differ by at most one.
pub fn stratified_kfold<S: AsRef<str>>(
    ids: &[S],
    targets: &[f32],
    k: usize,
    bins: usize,
    seed: u64,
) -> Result<SplitPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    if bins == 0 {
        return Err(Error::InvalidArgument(
            "at least one stratification bin is required".into(),
        ));
    }
    if ids.len() != targets.len() {
        return Err(Error::shape(
            None,
            format!("{} ids but {} targets", ids.len(), targets.len()),
        ));
    }
    let mut per_bin: Vec<Vec<(&str, usize)>> = (0..bins).map(|_| Vec::new()).collect();
    let mut seen = BTreeSet::new();
    for (i, (id, &t)) in ids.iter().zip(targets).enumerate() {
        let id = id.as_ref();
        if !seen.insert(id) {
            return Err(Error::InvalidArgument(format!("duplicate id `{id}`")));
        }
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("target for `{id}` is not finite")));
        }
        per_bin[strat_bin(t, bins)].push((id, i));
    }

    for (bin, members) in per_bin.iter().enumerate() {
        if !members.is_empty() && members.len() < k {
            return Err(Error::SparseStratum {
                bin,
                count: members.len(),
                k,
            });
        }
    }

    let mut rng = seed::rng(seed::derive(seed, "split"));
    for members in per_bin.iter_mut() {
        members.sort_unstable();
        members.shuffle(&mut rng);
    }

    let mut test_ids = BTreeSet::new();
    let mut remainder: Vec<Vec<&str>> = Vec::with_capacity(bins);
    let mut position = 0usize;
    for members in &per_bin {
        let mut rest = Vec::with_capacity(members.len());
        for &(id, _) in members {
            if position.is_multiple_of(TEST_FRACTION_DENOMINATOR) {
                test_ids.insert(String::from(id));
            } else {
                rest.push(id);
            }
            position += 1;
        }
        remainder.push(rest);
    }

    let mut fold_of = BTreeMap::new();
    let mut dealt = 0usize;
    for rest in &remainder {
        for &id in rest {
            fold_of.insert(String::from(id), dealt % k);
            dealt += 1;
        }
    }

    Ok(SplitPlan {
        seed,
        k,
        strat_bins: bins,
        fold_of,
        test_ids,
    })
}
