//! Ranking files: UTF-8 CSV with a header naming `id`, `group` and an
//! optional `score` column.

use std::path::Path;

use fairtopk::{PopulationSpec, Ranking};
use sha2::{Digest, Sha256};

use crate::error::{io_error, CliError, CliResult};

/// How rows become ranking positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OrderPolicy {
    /// Row order is rank order, first row on top.
    #[default]
    AsGiven,
    /// Descending score; equal scores keep file order.
    ByScore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub id: String,
    pub protected: bool,
    pub score: Option<f64>,
}

/// A parsed ranking file, rows already in rank order.
#[derive(Debug, Clone)]
pub struct RankingFile {
    pub rows: Vec<Row>,
    pub has_score: bool,
    /// Lowercase hex SHA-256 of the raw file bytes.
    pub digest: String,
}

impl RankingFile {
    pub fn ranking(&self) -> CliResult<Ranking> {
        Ok(Ranking::with_ids(
            self.rows.iter().map(|r| r.protected).collect(),
            self.rows.iter().map(|r| r.id.clone()).collect(),
        )?)
    }

    pub fn population(&self) -> CliResult<PopulationSpec> {
        let n_p = self.rows.iter().filter(|r| r.protected).count();
        Ok(PopulationSpec::new(self.rows.len(), n_p)?)
    }
}

pub fn ingest(path: &Path, order: OrderPolicy) -> CliResult<RankingFile> {
    let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
    parse(&bytes, order)
}

/// Parses file contents. Row numbers in errors count data rows from 1.
pub fn parse(bytes: &[u8], order: OrderPolicy) -> CliResult<RankingFile> {
    let digest = hex::encode(Sha256::digest(bytes));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let id_col = column("id").ok_or_else(|| CliError::Input("header has no `id` column".into()))?;
    let group_col =
        column("group").ok_or_else(|| CliError::Input("header has no `group` column".into()))?;
    let score_col = column("score");
    if order == OrderPolicy::ByScore && score_col.is_none() {
        return Err(CliError::Input(
            "ordering by score needs a `score` column".into(),
        ));
    }

    let mut rows = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let field = |col: usize| record.get(col).unwrap_or("");
        let bad = |message: String| CliError::Row { row, message };

        let id = field(id_col);
        if id.is_empty() {
            return Err(bad("empty id".into()));
        }
        if !seen.insert(id.to_string()) {
            return Err(bad(format!("duplicate id {id:?}")));
        }
        let protected = match field(group_col) {
            "1" => true,
            "0" => false,
            other => return Err(bad(format!("group must be 0 or 1, got {other:?}"))),
        };
        let score = match score_col.map(field) {
            None => None,
            Some("") => return Err(bad("missing score".into())),
            Some(s) => match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Some(v),
                _ => return Err(bad(format!("score is not a finite number: {s:?}"))),
            },
        };
        rows.push(Row {
            id: id.to_string(),
            protected,
            score,
        });
    }
    if rows.is_empty() {
        return Err(CliError::Input("file has no data rows".into()));
    }
    if order == OrderPolicy::ByScore {
        // stable, so ties keep file order
        rows.sort_by(|a, b| b.score.unwrap().total_cmp(&a.score.unwrap()));
    }
    Ok(RankingFile {
        rows,
        has_score: score_col.is_some(),
        digest,
    })
}

/// Writes rows in the given order with the same columns as the input.
pub fn write_rows<W: std::io::Write>(out: W, rows: &[&Row], has_score: bool) -> CliResult<()> {
    let mut writer = csv::Writer::from_writer(out);
    if has_score {
        writer.write_record(["id", "group", "score"])?;
    } else {
        writer.write_record(["id", "group"])?;
    }
    for row in rows {
        let group = if row.protected { "1" } else { "0" };
        match row.score {
            Some(s) if has_score => {
                writer.write_record([row.id.as_str(), group, &s.to_string()])?
            }
            _ => writer.write_record([row.id.as_str(), group])?,
        }
    }
    writer.flush().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(())
}
