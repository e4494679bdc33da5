use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::EmbeddingModel;
use crate::dataset::Catalog;
use crate::error::{Error, Result};

pub const USER_EMBEDDINGS_FILE: &str = "user_embeddings.csv";
pub const ITEM_EMBEDDINGS_FILE: &str = "item_embeddings.csv";
pub const MODEL_PARAMS_FILE: &str = "model.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Params {
    dim: usize,
    weight: f64,
    bias: f64,
}

/// Writes rows as `entity_id,v_0,...,v_{d-1}`.
pub fn write_embeddings<'a, W: Write>(
    writer: W,
    dim: usize,
    rows: impl IntoIterator<Item = (&'a str, &'a [f64])>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["entity_id".to_string()];
    header.extend((0..dim).map(|k| format!("v_{k}")));
    w.write_record(&header)?;
    for (id, v) in rows {
        let mut rec = vec![id.to_string()];
        rec.extend(v.iter().map(|x| format!("{x:e}")));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<embeddings>", e))?;
    Ok(())
}

/// Reads `entity_id,v_0,...` rows; the dimension comes from the header.
pub fn read_embeddings<R: Read>(reader: R, origin: &Path) -> Result<(usize, Vec<(String, Vec<f64>)>)> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let dim = r.headers()?.len().saturating_sub(1);
    if dim == 0 {
        return Err(Error::Parse {
            path: origin.into(),
            line: 1,
            message: "header has no vector columns".into(),
        });
    }
    let mut rows = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        if rec.len() != dim + 1 {
            return Err(Error::Parse {
                path: origin.into(),
                line,
                message: format!("expected {} fields, found {}", dim + 1, rec.len()),
            });
        }
        let v = rec
            .iter()
            .skip(1)
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                path: origin.into(),
                line,
                message: e.to_string(),
            })?;
        rows.push((rec[0].to_string(), v));
    }
    Ok((dim, rows))
}

/// Saves a model as two embedding CSVs keyed by external ids plus a small
/// parameter file.
pub fn save_model(dir: &Path, model: &EmbeddingModel, catalog: &Catalog) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let d = model.dim();
    let users = (0..model.num_users()).map(|u| (catalog.user_name(crate::dataset::UserId(u as u32)), &model.users[u * d..(u + 1) * d]));
    let path = dir.join(USER_EMBEDDINGS_FILE);
    write_embeddings(fs::File::create(&path).map_err(|e| Error::io(&path, e))?, d, users)?;
    let items = (0..model.num_items()).map(|i| (catalog.item_name(crate::dataset::ItemId(i as u32)), &model.items[i * d..(i + 1) * d]));
    let path = dir.join(ITEM_EMBEDDINGS_FILE);
    write_embeddings(fs::File::create(&path).map_err(|e| Error::io(&path, e))?, d, items)?;
    let params = Params {
        dim: d,
        weight: model.weight,
        bias: model.bias,
    };
    let path = dir.join(MODEL_PARAMS_FILE);
    fs::write(&path, serde_json::to_string_pretty(&params)?).map_err(|e| Error::io(&path, e))?;
    Ok(())
}

/// Loads a model saved by [`save_model`] (or produced externally) against a
/// catalog. Every catalog entity must have a row; unknown ids are rejected.
/// Without a parameter file the weight is 1 and the bias 0.
pub fn load_model(dir: &Path, catalog: &Catalog) -> Result<EmbeddingModel> {
    let params_path = dir.join(MODEL_PARAMS_FILE);
    let params = match fs::read_to_string(&params_path) {
        Ok(s) => Some(serde_json::from_str::<Params>(&s)?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(Error::io(&params_path, e)),
    };
    let load = |file: &str, n: usize, lookup: &dyn Fn(&str) -> Option<usize>| -> Result<(usize, Vec<f64>)> {
        let path = dir.join(file);
        let f = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        let (dim, rows) = read_embeddings(f, &path)?;
        let mut out = vec![f64::NAN; n * dim];
        for (line, (id, v)) in rows.into_iter().enumerate() {
            let idx = lookup(&id).ok_or_else(|| Error::Validation {
                path: path.clone(),
                line: line + 2,
                message: format!("unknown entity {id:?}"),
            })?;
            out[idx * dim..(idx + 1) * dim].copy_from_slice(&v);
        }
        if out.iter().any(|x| x.is_nan()) {
            return Err(Error::Validation {
                path,
                line: 0,
                message: "some catalog entities have no embedding row".into(),
            });
        }
        Ok((dim, out))
    };
    let (du, users) = load(USER_EMBEDDINGS_FILE, catalog.num_users(), &|s| catalog.user(s).map(|u| u.index()))?;
    let (di, items) = load(ITEM_EMBEDDINGS_FILE, catalog.num_items(), &|s| catalog.item(s).map(|i| i.index()))?;
    if du != di || params.is_some_and(|p| p.dim != du) {
        return Err(Error::Mismatch(format!("embedding dimensions disagree ({du} vs {di})")));
    }
    let (weight, bias) = params.map_or((1.0, 0.0), |p| (p.weight, p.bias));
    EmbeddingModel::from_parts(du, users, items, weight, bias)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_through_directory() {
        let t = crate::dataset::synth_dataset(&Default::default()).unwrap();
        let m = super::super::train(
            &t,
            &super::super::TrainConfig {
                epochs: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_model(dir.path(), &m, t.catalog()).unwrap();
        let back = load_model(dir.path(), t.catalog()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn ragged_row_is_a_parse_error() {
        let csv = "entity_id,v_0,v_1\na,1,2\nb,1\n";
        let err = read_embeddings(csv.as_bytes(), Path::new("x.csv")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }) || matches!(err, Error::Csv(_)));
    }
}
