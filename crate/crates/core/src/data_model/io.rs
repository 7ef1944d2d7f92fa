//! Cohort directory format.
//!
//! ```text
//! users.jsonl          one user per line, posts referenced by id
//! posts.jsonl          one post per line, embeddings inline
//! edges.csv            src,dst (src follows dst)
//! lexicons/<name>.tsv  word<TAB>weight
//! split.csv            user_id,split
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{
    CohortDataset, Gender, Lexicon, Location, PostRecord, SocialEdge, Split, StressPeriod, UserId,
    UserRecord,
};
use crate::error::{Error, Result};

pub const USERS_FILE: &str = "users.jsonl";
pub const POSTS_FILE: &str = "posts.jsonl";
pub const EDGES_FILE: &str = "edges.csv";
pub const SPLIT_FILE: &str = "split.csv";
pub const LEXICON_DIR: &str = "lexicons";

#[derive(Serialize, Deserialize)]
struct UserRow {
    user_id: UserId,
    gender: Gender,
    age_years: Option<i64>,
    location: Location,
    post_ids: Vec<String>,
    stress_periods: Vec<StressRow>,
    disorder_flag: bool,
    attempt_flag: bool,
    following_count: u64,
    follower_count: u64,
    interact_count: u64,
    label: usize,
}

// Validation of periods happens in `CohortDataset::new`, so rows deserialize
// into a plain mirror first.
#[derive(Serialize, Deserialize)]
struct StressRow {
    start_day: NaiveDate,
    end_day: NaiveDate,
    level: u8,
    category: super::StressCategory,
}

#[derive(Serialize, Deserialize)]
struct EdgeRow {
    src: String,
    dst: String,
}

#[derive(Serialize, Deserialize)]
struct SplitRow {
    user_id: String,
    split: Split,
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(&line).map_err(|e| {
            Error::format(path.display().to_string(), format!("line {}: {e}", lineno + 1))
        })?;
        rows.push(row);
    }
    Ok(rows)
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    reader
        .deserialize()
        .map(|row| row.map_err(|e| Error::format(path.display().to_string(), e.to_string())))
        .collect()
}

/// Load and cross-link a cohort directory.
pub fn load_cohort(dir: impl AsRef<Path>) -> Result<CohortDataset> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.to_path_buf()));
    }
    let user_rows: Vec<UserRow> = read_jsonl(&dir.join(USERS_FILE))?;
    let post_rows: Vec<PostRecord> = read_jsonl(&dir.join(POSTS_FILE))?;
    let edge_rows: Vec<EdgeRow> = read_csv(&dir.join(EDGES_FILE))?;
    let split_rows: Vec<SplitRow> = read_csv(&dir.join(SPLIT_FILE))?;

    let lex_dir = dir.join(LEXICON_DIR);
    let mut lexicons = BTreeMap::new();
    let mut entries: Vec<_> = fs::read_dir(&lex_dir)
        .map_err(|e| Error::io(&lex_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "tsv"))
        .collect();
    entries.sort();
    for path in entries {
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let lexicon = Lexicon::from_tsv(&name, &read_to_string(&path)?, &path.display().to_string())?;
        lexicons.insert(name, lexicon);
    }

    let user_ids: HashMap<&str, usize> = user_rows
        .iter()
        .enumerate()
        .map(|(i, u)| (u.user_id.as_str(), i))
        .collect();
    let mut posts_by_id: HashMap<String, PostRecord> = HashMap::with_capacity(post_rows.len());
    for post in post_rows {
        if !user_ids.contains_key(post.user_id.as_str()) {
            return Err(Error::Integrity(format!(
                "post '{}' references unknown user '{}'",
                post.post_id, post.user_id
            )));
        }
        post.validate()?;
        if posts_by_id.contains_key(&post.post_id) {
            return Err(Error::Integrity(format!("duplicate post id '{}'", post.post_id)));
        }
        posts_by_id.insert(post.post_id.clone(), post);
    }

    let mut users = Vec::with_capacity(user_rows.len());
    for row in user_rows {
        let mut posts = Vec::with_capacity(row.post_ids.len());
        for id in &row.post_ids {
            let post = posts_by_id.remove(id).ok_or_else(|| {
                Error::Integrity(format!("user '{}' references unknown post '{id}'", row.user_id))
            })?;
            if post.user_id != row.user_id {
                return Err(Error::Integrity(format!(
                    "post '{id}' belongs to '{}' but is listed by '{}'",
                    post.user_id, row.user_id
                )));
            }
            posts.push(post);
        }
        posts.sort_by_key(|p| p.timestamp);
        users.push(UserRecord {
            user_id: row.user_id,
            gender: row.gender,
            age_years: row.age_years,
            location: row.location,
            posts,
            stress_periods: row
                .stress_periods
                .into_iter()
                .map(|s| StressPeriod {
                    start_day: s.start_day,
                    end_day: s.end_day,
                    level: s.level,
                    category: s.category,
                })
                .collect(),
            disorder_flag: row.disorder_flag,
            attempt_flag: row.attempt_flag,
            following_count: row.following_count,
            follower_count: row.follower_count,
            interact_count: row.interact_count,
            label: row.label,
        });
    }
    if let Some(orphan) = posts_by_id.keys().min() {
        return Err(Error::Integrity(format!(
            "post '{orphan}' is not listed by its user '{}'",
            posts_by_id[orphan].user_id
        )));
    }

    let edges = edge_rows
        .into_iter()
        .map(|e| SocialEdge { src: e.src, dst: e.dst })
        .collect();
    let split = split_rows.into_iter().map(|r| (r.user_id, r.split)).collect();
    CohortDataset::new(users, edges, lexicons, split)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?))
}

fn json_line<T: Serialize>(out: &mut impl Write, value: &T, path: &Path) -> Result<()> {
    serde_json::to_writer(&mut *out, value)
        .map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
    out.write_all(b"\n").map_err(|e| Error::io(path, e))
}

/// Write `dataset` in the cohort directory format, creating `dir` if needed.
pub fn save_cohort(dataset: &CohortDataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let lex_dir = dir.join(LEXICON_DIR);
    fs::create_dir_all(&lex_dir).map_err(|e| Error::io(&lex_dir, e))?;

    let users_path = dir.join(USERS_FILE);
    let posts_path = dir.join(POSTS_FILE);
    let mut users_out = create(&users_path)?;
    let mut posts_out = create(&posts_path)?;
    for user in &dataset.users {
        let row = UserRow {
            user_id: user.user_id.clone(),
            gender: user.gender,
            age_years: user.age_years,
            location: user.location,
            post_ids: user.posts.iter().map(|p| p.post_id.clone()).collect(),
            stress_periods: user
                .stress_periods
                .iter()
                .map(|s| StressRow {
                    start_day: s.start_day,
                    end_day: s.end_day,
                    level: s.level,
                    category: s.category,
                })
                .collect(),
            disorder_flag: user.disorder_flag,
            attempt_flag: user.attempt_flag,
            following_count: user.following_count,
            follower_count: user.follower_count,
            interact_count: user.interact_count,
            label: user.label,
        };
        json_line(&mut users_out, &row, &users_path)?;
        for post in &user.posts {
            json_line(&mut posts_out, post, &posts_path)?;
        }
    }
    users_out.flush().map_err(|e| Error::io(&users_path, e))?;
    posts_out.flush().map_err(|e| Error::io(&posts_path, e))?;

    let edges_path = dir.join(EDGES_FILE);
    let mut writer = csv::Writer::from_writer(create(&edges_path)?);
    writer
        .write_record(["src", "dst"])
        .and_then(|_| {
            dataset
                .edges
                .iter()
                .try_for_each(|e| writer.write_record([&e.src, &e.dst]))
        })
        .and_then(|_| writer.flush().map_err(Into::into))
        .map_err(|e| Error::format(edges_path.display().to_string(), e.to_string()))?;

    let split_path = dir.join(SPLIT_FILE);
    let mut writer = csv::Writer::from_writer(create(&split_path)?);
    writer
        .write_record(["user_id", "split"])
        .and_then(|_| {
            dataset
                .users
                .iter()
                .try_for_each(|u| writer.write_record([u.user_id.as_str(), dataset.split[&u.user_id].as_str()]))
        })
        .and_then(|_| writer.flush().map_err(Into::into))
        .map_err(|e| Error::format(split_path.display().to_string(), e.to_string()))?;

    for (name, lexicon) in &dataset.lexicons {
        let path = lex_dir.join(format!("{name}.tsv"));
        fs::write(&path, lexicon.to_tsv()).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
