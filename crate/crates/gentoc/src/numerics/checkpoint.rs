use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{GentocError, Result};

use super::param::ParamBundle;

const HEADER: &[u8] = b"GENTOC-CKPT-1\n";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

/// Checkpoint manifest: model kind, its JSON config, the vocabulary, an
/// optional closed label set, and the parameter table in buffer order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub kind: String,
    pub config: serde_json::Value,
    pub vocab: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub params: Vec<ParamSpec>,
}

/// Layout: header line, `u64` little-endian manifest byte length, manifest
/// JSON, then raw little-endian `f32` buffers in manifest order.
pub fn save_checkpoint(path: &Path, manifest: &CheckpointManifest, bundle: &ParamBundle) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(HEADER)?;
    let json = serde_json::to_vec(manifest)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for spec in &manifest.params {
        let idx = bundle
            .lookup(&spec.name)
            .ok_or_else(|| GentocError::Checkpoint(format!("missing parameter {:?}", spec.name)))?;
        let p = bundle.get(idx);
        if (p.rows, p.cols) != (spec.rows, spec.cols) {
            return Err(GentocError::Checkpoint(format!(
                "parameter {:?} shape {}x{} does not match manifest {}x{}",
                spec.name, p.rows, p.cols, spec.rows, spec.cols
            )));
        }
        for &x in &p.value {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(CheckpointManifest, ParamBundle)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; HEADER.len()];
    r.read_exact(&mut header)
        .map_err(|_| GentocError::Checkpoint(format!("{}: truncated header", path.display())))?;
    if header != HEADER {
        return Err(GentocError::Checkpoint(format!(
            "{}: bad header, expected GENTOC-CKPT-1",
            path.display()
        )));
    }
    let mut len8 = [0u8; 8];
    r.read_exact(&mut len8)?;
    let mut json = vec![0u8; u64::from_le_bytes(len8) as usize];
    r.read_exact(&mut json)?;
    let manifest: CheckpointManifest = serde_json::from_slice(&json)?;
    let mut bundle = ParamBundle::new();
    let mut buf4 = [0u8; 4];
    for spec in &manifest.params {
        let n = spec.rows * spec.cols;
        let mut value = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut buf4).map_err(|_| {
                GentocError::Checkpoint(format!("{}: truncated buffer for {:?}", path.display(), spec.name))
            })?;
            value.push(f32::from_le_bytes(buf4));
        }
        bundle.add_raw(&spec.name, spec.rows, spec.cols, value)?;
    }
    Ok((manifest, bundle))
}

#[cfg(test)]
mod tests {
    use super::super::param::{Init, ParamBundle};
    use super::super::seeded_rng;
    use super::*;

    fn sample() -> (CheckpointManifest, ParamBundle) {
        let mut rng = seeded_rng(5);
        let mut b = ParamBundle::new();
        b.add("w", 2, 3, Init::Xavier, &mut rng).unwrap();
        b.add("bias", 1, 3, Init::Normal(0.1), &mut rng).unwrap();
        let manifest = CheckpointManifest {
            kind: "tocve".into(),
            config: serde_json::json!({"d_model": 8}),
            vocab: vec!["<pad>".into(), "<unk>".into()],
            labels: Some(vec!["no".into(), "yes".into()]),
            params: b
                .iter()
                .map(|p| ParamSpec { name: p.name.clone(), rows: p.rows, cols: p.cols })
                .collect(),
        };
        (manifest, b)
    }

    #[test]
    fn round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let (manifest, bundle) = sample();
        save_checkpoint(&path, &manifest, &bundle).unwrap();
        let (m2, b2) = load_checkpoint(&path).unwrap();
        assert_eq!(m2.kind, manifest.kind);
        assert_eq!(m2.vocab, manifest.vocab);
        assert_eq!(m2.labels, manifest.labels);
        for p in bundle.iter() {
            let q = b2.get(b2.lookup(&p.name).unwrap());
            assert_eq!(p.value, q.value);
            assert_eq!((p.rows, p.cols), (q.rows, q.cols));
        }
    }

    #[test]
    fn bad_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ckpt");
        std::fs::write(&path, b"NOT-A-CKPT\n\0\0\0\0\0\0\0\0").unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(err.to_string().contains("header"), "{err}");
    }

    #[test]
    fn truncated_buffer_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.ckpt");
        let (manifest, bundle) = sample();
        save_checkpoint(&path, &manifest, &bundle).unwrap();
        let data = std::fs::read(&path).unwrap();
        std::fs::write(&path, &data[..data.len() - 5]).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
    }

    #[test]
    fn manifest_shape_mismatch_on_save_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.ckpt");
        let (mut manifest, bundle) = sample();
        manifest.params[0].rows = 9;
        assert!(save_checkpoint(&path, &manifest, &bundle).is_err());
    }
}
