use std::fs::File;
use std::path::{Path, PathBuf};

use cascade_core::event_model::io::{read_adoptions, read_follows, ReadOptions, RowIssue, RowPolicy};
use cascade_core::event_model::snapshot;
use cascade_core::time::TimeUnit;
use cascade_core::{build_dataset, BuildOptions};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{CliError, CliResult, Context};
use crate::report::{digest_file, Outcome};

/// Dropped rows listed individually in the report; the count is always exact.
const LISTED_DROPS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestParams {
    pub adoptions: PathBuf,
    #[serde(default)]
    pub follows: Option<PathBuf>,
    pub out: PathBuf,
    #[serde(default)]
    pub reverse_edges: bool,
    #[serde(default)]
    pub mutual_only: bool,
    /// Fail on the first bad row instead of dropping it.
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub time_unit: TimeUnit,
    /// Overwrite whatever is at `out`.
    #[serde(default)]
    pub force: bool,
}

#[derive(Serialize)]
struct Dropped<'a> {
    file: &'a str,
    line: u64,
    reason: &'a str,
}

fn listed<'a>(file: &'a str, issues: &'a [RowIssue]) -> impl Iterator<Item = Dropped<'a>> + 'a {
    issues.iter().map(move |i| Dropped {
        file,
        line: i.line,
        reason: &i.reason,
    })
}

fn check_overwrite(out: &Path, force: bool) -> CliResult<()> {
    if force || !out.exists() {
        return Ok(());
    }
    let existing = File::open(out).at(out)?;
    match snapshot::peek_version(existing).at(out)? {
        Some(snapshot::VERSION) => Ok(()),
        Some(found) => Err(CliError::Data(format!(
            "{}: existing snapshot has version {found}, this build writes version {}; pass --force to overwrite",
            out.display(),
            snapshot::VERSION
        ))),
        None => Err(CliError::Data(format!(
            "{}: existing file is not a snapshot; pass --force to overwrite",
            out.display()
        ))),
    }
}

pub fn ingest(p: &IngestParams) -> CliResult<Outcome> {
    check_overwrite(&p.out, p.force)?;
    let options = ReadOptions {
        time_unit: p.time_unit,
        policy: if p.strict { RowPolicy::Strict } else { RowPolicy::Lenient },
    };

    let mut inputs = vec![digest_file(&p.adoptions)?];
    let adoptions = read_adoptions(File::open(&p.adoptions).at(&p.adoptions)?, options).at(&p.adoptions)?;
    let follows = match &p.follows {
        Some(path) => {
            inputs.push(digest_file(path)?);
            Some(read_follows(File::open(path).at(path)?, options).at(path)?)
        }
        None => None,
    };

    let adoption_path = p.adoptions.display().to_string();
    let follow_path = p.follows.as_ref().map(|f| f.display().to_string()).unwrap_or_default();
    let follow_issues = follows.as_ref().map(|f| f.dropped.as_slice()).unwrap_or_default();
    let dropped: Vec<Dropped> = listed(&adoption_path, &adoptions.dropped)
        .chain(listed(&follow_path, follow_issues))
        .collect();
    let dropped_rows = dropped.len();
    let dropped_listing = serde_json::to_value(&dropped[..dropped_rows.min(LISTED_DROPS)])?;

    let (follow_total, follow_rows) = match follows {
        Some(f) => (f.total_rows, f.rows),
        None => (0, Vec::new()),
    };
    let build = BuildOptions {
        reverse_edges: p.reverse_edges,
        mutual_only: p.mutual_only,
    };
    let (d, built) = build_dataset(adoptions.rows, follow_rows, build)?;
    snapshot::save(&d, &p.out).at(&p.out)?;
    let written = digest_file(&p.out)?;

    let mut warnings = Vec::new();
    if built.self_loops_dropped > 0 {
        warnings.push(format!("{} self-loop follow edge(s) dropped", built.self_loops_dropped));
    }
    if built.duplicate_edges_merged > 0 {
        warnings.push(format!("{} duplicate follow edge(s) merged", built.duplicate_edges_merged));
    }
    if built.non_mutual_dropped > 0 {
        warnings.push(format!("{} non-reciprocated follow edge(s) dropped", built.non_mutual_dropped));
    }
    if dropped_rows > 0 {
        warnings.push(format!("{dropped_rows} unreadable row(s) dropped"));
    }

    Ok(Outcome {
        inputs,
        config: serde_json::to_value(p)?,
        result: json!({
            "adoption_rows": adoptions.total_rows,
            "follow_rows": follow_total,
            "dropped_rows": dropped_rows,
            "dropped": dropped_listing,
            "counts": d.counts(),
            "build": built,
            "warnings": warnings,
            "snapshot": {
                "path": written.path,
                "sha256": written.sha256,
                "bytes": written.bytes,
                "version": snapshot::VERSION,
            },
        }),
    })
}
