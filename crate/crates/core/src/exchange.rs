//! Binary exchange files shared with the model adapter.
//!
//! A matrix file is one JSON header line terminated by `\n`, followed by a
//! raw block of `f32` little-endian values in row-major order. A sidecar
//! `.refs` file lists one reference per line: image references in column
//! order for activation dumps, row keys for embedding files.
//!
//! ```text
//! <dir>/<layer>.bin    {"layer":"layer1","neurons":64,"images":1980,"encoding":"f32 little-endian row-major",...}\n<raw>
//! <dir>/<layer>.refs   stroop-black-blue-brown-0000\n...
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::activation::ActivationMatrix;
use crate::error::{Error, Result};

pub const VALUE_ENCODING: &str = "f32 little-endian row-major";
pub const DATA_EXT: &str = "bin";
pub const REFS_EXT: &str = "refs";
/// Optional file in an activation directory fixing the layer order.
pub const LAYER_ORDER_FILE: &str = "layers.txt";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivationHeader {
    pub layer: String,
    pub neurons: usize,
    pub images: usize,
    pub encoding: String,
    /// Provenance written by the producer (model identifier, preprocessing
    /// hash, adapter version, ...).
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingHeader {
    pub count: usize,
    pub dim: usize,
    pub encoding: String,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

/// Rows of unit vectors with their keys, as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingFile {
    pub header: EmbeddingHeader,
    pub keys: Vec<String>,
    pub rows: Vec<Vec<f32>>,
}

fn sidecar(data: &Path) -> PathBuf {
    data.with_extension(REFS_EXT)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp-write");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn encode<H: Serialize>(header: &H, values: impl Iterator<Item = f32>) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec(header)?;
    bytes.push(b'\n');
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    Ok(bytes)
}

fn write_refs(path: &Path, refs: &[String]) -> Result<()> {
    if let Some(bad) = refs.iter().find(|r| r.contains('\n') || r.is_empty()) {
        return Err(Error::exchange(path, format!("invalid reference {bad:?}")));
    }
    let mut text = refs.join("\n");
    if !refs.is_empty() {
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

fn read_refs(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(str::to_string).collect())
}

/// Splits a data file into its header line and decoded values.
fn decode<H: for<'de> Deserialize<'de>>(
    path: &Path,
    expected: impl Fn(&H) -> usize,
) -> Result<(H, Vec<f32>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::exchange(path, "missing header line"))?;
    let header: H = serde_json::from_slice(&bytes[..nl])
        .map_err(|e| Error::exchange(path, format!("bad header: {e}")))?;
    let raw = &bytes[nl + 1..];
    let n = expected(&header);
    if raw.len() != n * 4 {
        return Err(Error::exchange(
            path,
            format!(
                "binary block holds {} bytes, header implies {}",
                raw.len(),
                n * 4
            ),
        ));
    }
    let values = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok((header, values))
}

fn check_encoding(path: &Path, encoding: &str) -> Result<()> {
    if encoding != VALUE_ENCODING {
        return Err(Error::exchange(
            path,
            format!("unsupported value encoding {encoding:?}"),
        ));
    }
    Ok(())
}

/// File name stem for a layer; path separators are not allowed in layer names.
fn layer_stem(layer: &str) -> Result<&str> {
    if layer.is_empty() || layer.contains(['/', '\\', '\n']) {
        return Err(Error::Activation(format!("invalid layer name {layer:?}")));
    }
    Ok(layer)
}

pub fn activation_path(dir: &Path, layer: &str) -> Result<PathBuf> {
    Ok(dir.join(format!("{}.{DATA_EXT}", layer_stem(layer)?)))
}

pub fn write_activation_dump(
    dir: &Path,
    matrix: &ActivationMatrix,
    extra: BTreeMap<String, Value>,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = activation_path(dir, matrix.layer())?;
    let header = ActivationHeader {
        layer: matrix.layer().to_string(),
        neurons: matrix.neurons(),
        images: matrix.images(),
        encoding: VALUE_ENCODING.to_string(),
        extra,
    };
    write_refs(&sidecar(&path), matrix.image_refs())?;
    write_atomic(&path, &encode(&header, matrix.values().iter().copied())?)
}

pub fn read_activation_file(path: &Path) -> Result<(ActivationHeader, ActivationMatrix)> {
    let (header, values) = decode::<ActivationHeader>(path, |h| h.neurons * h.images)?;
    check_encoding(path, &header.encoding)?;
    let refs_path = sidecar(path);
    let refs = read_refs(&refs_path)?;
    if refs.len() != header.images {
        return Err(Error::exchange(
            &refs_path,
            format!("{} references for {} images", refs.len(), header.images),
        ));
    }
    let matrix = ActivationMatrix::new(
        header.layer.clone(),
        header.neurons,
        header.images,
        values,
        refs,
    )
    .map_err(|e| Error::exchange(path, e.to_string()))?;
    Ok((header, matrix))
}

pub fn read_activation_dump(
    dir: &Path,
    layer: &str,
) -> Result<(ActivationHeader, ActivationMatrix)> {
    read_activation_file(&activation_path(dir, layer)?)
}

/// Layers available in an activation directory: the order listed in
/// `layers.txt` when present, otherwise every `*.bin` file sorted by name.
pub fn list_layers(dir: &Path) -> Result<Vec<String>> {
    let order = dir.join(LAYER_ORDER_FILE);
    if order.exists() {
        return Ok(read_refs(&order)?
            .into_iter()
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty())
            .collect());
    }
    let mut layers = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == DATA_EXT) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                layers.push(stem.to_string());
            }
        }
    }
    layers.sort();
    if layers.is_empty() {
        return Err(Error::exchange(dir, "no activation dumps found"));
    }
    Ok(layers)
}

pub fn write_embeddings(
    path: &Path,
    keys: &[String],
    rows: &[Vec<f32>],
    extra: BTreeMap<String, Value>,
) -> Result<()> {
    if keys.len() != rows.len() {
        return Err(Error::exchange(
            path,
            format!("{} keys for {} rows", keys.len(), rows.len()),
        ));
    }
    let dim = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::exchange(path, "rows differ in dimension"));
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let header = EmbeddingHeader {
        count: rows.len(),
        dim,
        encoding: VALUE_ENCODING.to_string(),
        extra,
    };
    write_refs(&sidecar(path), keys)?;
    write_atomic(path, &encode(&header, rows.iter().flatten().copied())?)
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingFile> {
    let (header, values) = decode::<EmbeddingHeader>(path, |h| h.count * h.dim)?;
    check_encoding(path, &header.encoding)?;
    let keys_path = sidecar(path);
    let keys = read_refs(&keys_path)?;
    if keys.len() != header.count {
        return Err(Error::exchange(
            &keys_path,
            format!("{} keys for {} rows", keys.len(), header.count),
        ));
    }
    if header.dim == 0 && header.count > 0 {
        return Err(Error::exchange(path, "zero-dimensional embeddings"));
    }
    let rows = if header.dim == 0 {
        Vec::new()
    } else {
        values
            .chunks_exact(header.dim)
            .map(<[f32]>::to_vec)
            .collect()
    };
    Ok(EmbeddingFile { header, keys, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn activation_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let values = vec![0.0, 1.5, f32::MIN_POSITIVE, 3.25e7, 0.1, 7.0];
        let refs: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        let m = ActivationMatrix::new("layer1.0", 2, 3, values.clone(), refs).unwrap();
        let mut extra = BTreeMap::new();
        extra.insert("model".to_string(), Value::from("RN50"));
        write_activation_dump(dir.path(), &m, extra).unwrap();
        let (h, back) = read_activation_dump(dir.path(), "layer1.0").unwrap();
        assert_eq!(back, m);
        assert_eq!(h.extra["model"], "RN50");
        let bits: Vec<u32> = back.values().iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits, values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert_eq!(
            list_layers(dir.path()).unwrap(),
            vec!["layer1.0".to_string()]
        );
    }

    #[test]
    fn header_is_a_single_json_line() {
        let dir = tempfile::tempdir().unwrap();
        let m = ActivationMatrix::new("l", 1, 1, vec![2.0], vec!["x".into()]).unwrap();
        write_activation_dump(dir.path(), &m, BTreeMap::new()).unwrap();
        let bytes = fs::read(dir.path().join("l.bin")).unwrap();
        let nl = bytes.iter().position(|&b| b == b'\n').unwrap();
        let header: Value = serde_json::from_slice(&bytes[..nl]).unwrap();
        assert_eq!(header["encoding"], VALUE_ENCODING);
        assert_eq!(header["neurons"], 1);
        assert_eq!(&bytes[nl + 1..], &2.0f32.to_le_bytes());
        assert_eq!(
            fs::read_to_string(dir.path().join("l.refs")).unwrap(),
            "x\n"
        );
    }

    #[test]
    fn truncated_block_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let m =
            ActivationMatrix::new("l", 1, 2, vec![2.0, 1.0], vec!["x".into(), "y".into()]).unwrap();
        write_activation_dump(dir.path(), &m, BTreeMap::new()).unwrap();
        let path = dir.path().join("l.bin");
        let mut bytes = fs::read(&path).unwrap();
        bytes.pop();
        fs::write(&path, bytes).unwrap();
        let err = read_activation_dump(dir.path(), "l")
            .unwrap_err()
            .to_string();
        assert!(err.contains("binary block"), "{err}");
    }

    #[test]
    fn refs_count_must_match() {
        let dir = tempfile::tempdir().unwrap();
        let m =
            ActivationMatrix::new("l", 1, 2, vec![2.0, 1.0], vec!["x".into(), "y".into()]).unwrap();
        write_activation_dump(dir.path(), &m, BTreeMap::new()).unwrap();
        fs::write(dir.path().join("l.refs"), "x\n").unwrap();
        assert!(read_activation_dump(dir.path(), "l").is_err());
    }

    #[test]
    fn layer_order_file_wins() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["b", "a"] {
            let m = ActivationMatrix::new(name, 1, 1, vec![1.0], vec!["x".into()]).unwrap();
            write_activation_dump(dir.path(), &m, BTreeMap::new()).unwrap();
        }
        assert_eq!(list_layers(dir.path()).unwrap(), vec!["a", "b"]);
        fs::write(dir.path().join(LAYER_ORDER_FILE), "b\na\n").unwrap();
        assert_eq!(list_layers(dir.path()).unwrap(), vec!["b", "a"]);
        assert!(activation_path(dir.path(), "../x").is_err());
    }

    #[test]
    fn embeddings_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("images.bin");
        let keys: Vec<String> = vec!["r1".into(), "r2".into()];
        let rows = vec![vec![0.6, 0.8, 0.0], vec![0.0, 0.0, 1.0]];
        write_embeddings(&path, &keys, &rows, BTreeMap::new()).unwrap();
        let back = read_embeddings(&path).unwrap();
        assert_eq!(back.keys, keys);
        assert_eq!(back.rows, rows);
        assert_eq!(back.header.dim, 3);
        assert!(write_embeddings(&path, &keys, &rows[..1], BTreeMap::new()).is_err());
    }
}
