//! Dataset directories: `train.txt`, `test.txt`, `users.ids`, `items.ids`
//! and a key=value `manifest.txt`, plus `graph.txt` for synthetic data.

use std::path::Path;

use cfrank::config::RunConfig;
use cfrank::data::{load_ratings, load_ratings_with, FeedbackMode, IdMap, IdMaps, RatingsMatrix, UnknownIds};
use cfrank::graph::Graph;

use crate::error::Result;
use crate::settings::{create, open};

pub struct Dataset {
    pub train: RatingsMatrix,
    pub test: Option<RatingsMatrix>,
    pub ids: IdMaps,
}

pub fn save(dir: &Path, train: &RatingsMatrix, test: &RatingsMatrix, ids: &IdMaps, manifest: &RunConfig) -> Result<()> {
    train.write(create(&dir.join("train.txt"))?, Some(ids))?;
    test.write(create(&dir.join("test.txt"))?, Some(ids))?;
    ids.users.write(create(&dir.join("users.ids"))?)?;
    ids.items.write(create(&dir.join("items.ids"))?)?;
    manifest.write(create(&dir.join("manifest.txt"))?)?;
    Ok(())
}

pub fn identity_ids(n_users: usize, n_items: usize) -> IdMaps {
    IdMaps {
        users: IdMap::from_sorted(0..n_users as u64),
        items: IdMap::from_sorted(0..n_items as u64),
    }
}

/// Loads a dataset directory. The mode comes from `mode`, else the manifest,
/// else explicit. Without id files the train file defines the ids and test
/// lines with unseen ids are skipped.
pub fn load(dir: &Path, mode: Option<FeedbackMode>) -> Result<Dataset> {
    let manifest_path = dir.join("manifest.txt");
    let manifest = if manifest_path.exists() {
        RunConfig::read(open(&manifest_path)?)?
    } else {
        RunConfig::new()
    };
    let mode = match mode {
        Some(m) => m,
        None => manifest.parse("mode")?.unwrap_or(FeedbackMode::Explicit),
    };
    let (users_path, items_path) = (dir.join("users.ids"), dir.join("items.ids"));
    let (train, ids) = if users_path.exists() && items_path.exists() {
        let ids = IdMaps {
            users: IdMap::read(open(&users_path)?)?,
            items: IdMap::read(open(&items_path)?)?,
        };
        let (train, _) = load_ratings_with(open(&dir.join("train.txt"))?, mode, &ids, UnknownIds::Error)?;
        (train, ids)
    } else {
        load_ratings(open(&dir.join("train.txt"))?, mode)?
    };
    let test_path = dir.join("test.txt");
    let test = if test_path.exists() {
        let (test, skipped) = load_ratings_with(open(&test_path)?, mode, &ids, UnknownIds::Skip)?;
        if skipped > 0 {
            log::warn!("skipped {skipped} test lines with ids unseen in training");
        }
        Some(test)
    } else {
        None
    };
    log::info!(
        "loaded {} ({mode}): {} users, {} items, {} train ratings",
        dir.display(),
        train.n_users(),
        train.n_items(),
        train.nnz()
    );
    Ok(Dataset { train, test, ids })
}

pub fn load_graph(path: &Path, ids: Option<&IdMap>) -> Result<Graph> {
    Ok(Graph::read(open(path)?, ids)?)
}
