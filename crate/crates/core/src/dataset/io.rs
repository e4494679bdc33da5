use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::scale::RatingScale;
use super::table::{Catalog, RatingTable};
use crate::error::{Error, Result};

/// On-disk layout of a rating file. All formats are headerless, one rating
/// per line; extra trailing columns (timestamps) are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatingFormat {
    /// `user,item,rating`
    Csv,
    /// `user<TAB>item<TAB>rating`
    Tsv,
    /// `user::item::rating`, as shipped by MovieLens 1M.
    Dat,
}

impl RatingFormat {
    fn separator(self) -> &'static str {
        match self {
            RatingFormat::Csv => ",",
            RatingFormat::Tsv => "\t",
            RatingFormat::Dat => "::",
        }
    }
}

impl FromStr for RatingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(RatingFormat::Csv),
            "tsv" | "tab" => Ok(RatingFormat::Tsv),
            "dat" => Ok(RatingFormat::Dat),
            other => Err(Error::InvalidArgument(format!("unknown rating format '{other}'"))),
        }
    }
}

/// What to do when a `(user, item)` pair appears twice.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DuplicatePolicy {
    #[default]
    Reject,
    LastWins,
}

pub fn load_ratings(
    path: impl AsRef<Path>,
    format: RatingFormat,
    scale: &RatingScale,
    duplicates: DuplicatePolicy,
) -> Result<RatingTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_ratings(file, path, format, scale, duplicates)
}

/// Parses ratings from any reader; `origin` is only used in error messages.
pub fn read_ratings(
    reader: impl Read,
    origin: &Path,
    format: RatingFormat,
    scale: &RatingScale,
    duplicates: DuplicatePolicy,
) -> Result<RatingTable> {
    let sep = format.separator();
    let mut catalog = Catalog::new();
    let mut triples = Vec::new();
    let mut seen: HashMap<(u32, u32), (usize, usize)> = HashMap::new();

    for (n, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = n + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(sep);
        let (user, item, value) = match (fields.next(), fields.next(), fields.next()) {
            (Some(u), Some(i), Some(r)) => (u.trim(), i.trim(), r.trim()),
            _ => {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: lineno,
                    message: format!("expected user{sep}item{sep}rating, got '{line}'"),
                })
            }
        };
        if user.is_empty() || item.is_empty() {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: lineno,
                message: "empty user or item id".into(),
            });
        }
        let rating: f64 = value.parse().map_err(|_| Error::Parse {
            path: origin.to_path_buf(),
            line: lineno,
            message: format!("rating '{value}' is not a number"),
        })?;
        if !scale.contains(rating) {
            return Err(Error::Validation {
                path: origin.to_path_buf(),
                line: lineno,
                message: format!("rating {rating} is outside scale {scale}"),
            });
        }
        let u = catalog.intern_user(user);
        let i = catalog.intern_item(item);
        match seen.get(&(u.0, i.0)) {
            Some(&(slot, first_line)) => match duplicates {
                DuplicatePolicy::Reject => {
                    return Err(Error::Validation {
                        path: origin.to_path_buf(),
                        line: lineno,
                        message: format!(
                            "duplicate rating for ({user}, {item}), first seen on line {first_line}"
                        ),
                    })
                }
                DuplicatePolicy::LastWins => triples[slot] = (u, i, rating),
            },
            None => {
                seen.insert((u.0, i.0), (triples.len(), lineno));
                triples.push((u, i, rating));
            }
        }
    }

    RatingTable::from_triples(Arc::new(catalog), scale.clone(), triples)
}

/// Writes ratings in `format`, user-major. Values are written in Rust's
/// shortest round-trip representation.
pub fn write_ratings(table: &RatingTable, path: impl AsRef<Path>, format: RatingFormat) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_ratings_to(table, &mut out, format).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_ratings_to(table: &RatingTable, out: &mut impl Write, format: RatingFormat) -> std::io::Result<()> {
    let sep = format.separator();
    let cat = table.catalog();
    for (u, i, r) in table.ratings() {
        writeln!(out, "{}{sep}{}{sep}{}", cat.user_name(u), cat.item_name(i), r)?;
    }
    Ok(())
}
