//! Neuron profile files and crop-box side files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::analysis::{CropIndex, NeuronProfile};
use super::matrix::CropBox;
use crate::error::{Error, Result};

pub const PROFILES_FORMAT: &str = "colorprobe-profiles/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfilesHeader {
    pub format: String,
    pub layers: Vec<String>,
    pub stroop_manifest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_manifest: Option<String>,
    pub topk: usize,
    pub theta_high: f64,
    pub alpha_threshold: f64,
    pub palette_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub profiles: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfilesFile {
    pub header: ProfilesHeader,
    pub profiles: Vec<NeuronProfile>,
}

impl ProfilesFile {
    pub fn to_ndjson(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serialize");
        out.push('\n');
        for p in &self.profiles {
            out.push_str(&serde_json::to_string(p).expect("profile serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_ndjson(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: ProfilesHeader = serde_json::from_str(
            lines
                .next()
                .ok_or_else(|| Error::Activation("empty profiles file".into()))?,
        )?;
        if header.format != PROFILES_FORMAT {
            return Err(Error::Activation(format!(
                "unsupported profiles format {:?}",
                header.format
            )));
        }
        let profiles = lines
            .map(serde_json::from_str)
            .collect::<std::result::Result<Vec<NeuronProfile>, _>>()?;
        Ok(ProfilesFile { header, profiles })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_ndjson(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_ndjson()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Serialize, Deserialize)]
struct CropLine {
    layer: String,
    neuron: usize,
    image: String,
    #[serde(rename = "box")]
    bbox: [u32; 4],
}

/// Parses crop boxes, one JSON object per line:
/// `{"layer":"layer4","neuron":3,"image":"<ref>","box":[x0,y0,x1,y1]}`.
pub fn parse_crop_index(text: &str) -> Result<CropIndex> {
    let mut out = CropIndex::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let c: CropLine = serde_json::from_str(line)
            .map_err(|e| Error::Activation(format!("crop line {}: {e}", i + 1)))?;
        let [x0, y0, x1, y1] = c.bbox;
        if x1 <= x0 || y1 <= y0 {
            return Err(Error::Activation(format!("crop line {}: empty box", i + 1)));
        }
        out.insert((c.layer, c.neuron, c.image), CropBox(c.bbox));
    }
    Ok(out)
}

pub fn load_crop_index(path: &Path) -> Result<CropIndex> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_crop_index(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crop_lines() {
        let idx = parse_crop_index(
            "{\"layer\":\"l\",\"neuron\":3,\"image\":\"a\",\"box\":[0,0,10,12]}\n\n",
        )
        .unwrap();
        assert_eq!(
            idx[&("l".to_string(), 3, "a".to_string())],
            CropBox([0, 0, 10, 12])
        );
        assert!(parse_crop_index(
            "{\"layer\":\"l\",\"neuron\":3,\"image\":\"a\",\"box\":[5,0,5,12]}"
        )
        .is_err());
    }

    #[test]
    fn wrong_format_rejected() {
        let text = "{\"format\":\"other\",\"layers\":[],\"stroop_manifest\":\"m\",\"topk\":1,\"theta_high\":0.5,\"alpha_threshold\":0.25,\"palette_hash\":\"x\",\"profiles\":0}\n";
        assert!(ProfilesFile::from_ndjson(text).is_err());
        let ok = text.replace("other", PROFILES_FORMAT);
        assert!(ProfilesFile::from_ndjson(&ok).unwrap().profiles.is_empty());
    }
}
