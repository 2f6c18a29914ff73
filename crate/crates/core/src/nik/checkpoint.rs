//! Model checkpoints: one `NDA1` file per tensor plus a TOML manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FeatureEncoding, SirenModel};
use crate::error::{Error, Result};
use crate::kspace::{read_nda, write_nda, NdArray};
use crate::numcore::RealTensor;
use crate::scalar::Real;

pub const MANIFEST_FILE: &str = "model.toml";
const FORMAT: &str = "siren-checkpoint/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerEntry {
    pub weight: String,
    pub bias: String,
    pub shape: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub omega0: f64,
    pub seed: u64,
    pub n_coils: usize,
    pub output_scale: f64,
    pub sigma_k: f64,
    pub sigma_t: f64,
    /// `n_freqs × 3` frequency matrix file.
    pub encoding: String,
    pub layers: Vec<LayerEntry>,
}

fn to_nda<T: Real>(t: &RealTensor<T>) -> Result<NdArray> {
    NdArray::f64(t.shape().to_vec(), t.data().iter().map(|x| x.as_f64()).collect())
}

pub fn save_checkpoint<T: Real>(model: &SirenModel<T>, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let freqs = model.encoding().freqs();
    let b = NdArray::f64(vec![freqs.len(), 3], freqs.iter().flatten().copied().collect())?;
    write_nda(dir.join("encoding.nda"), &b)?;
    let mut layers = Vec::new();
    for (l, pair) in model.params().chunks_exact(2).enumerate() {
        let (i, o) = pair[0].dims2()?;
        let entry = LayerEntry {
            weight: format!("layer{l}_weight.nda"),
            bias: format!("layer{l}_bias.nda"),
            shape: [i, o],
        };
        write_nda(dir.join(&entry.weight), &to_nda(&pair[0])?)?;
        write_nda(dir.join(&entry.bias), &to_nda(&pair[1])?)?;
        layers.push(entry);
    }
    let (sigma_k, sigma_t) = model.encoding().sigmas();
    let manifest = Manifest {
        format: FORMAT.into(),
        omega0: model.omega0(),
        seed: model.seed(),
        n_coils: model.n_coils(),
        output_scale: model.output_scale,
        sigma_k,
        sigma_t,
        encoding: "encoding.nda".into(),
        layers,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Manifest(e.to_string()))?;
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn load_checkpoint<T: Real>(dir: impl AsRef<Path>) -> Result<SirenModel<T>> {
    let dir = dir.as_ref();
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let manifest: Manifest = toml::from_str(&text).map_err(|e| Error::Manifest(e.to_string()))?;
    if manifest.format != FORMAT {
        return Err(Error::Manifest(format!("unsupported format {:?}", manifest.format)));
    }
    let b = read_nda(dir.join(&manifest.encoding))?;
    if b.dims().len() != 2 || b.dims()[1] != 3 {
        return Err(Error::Manifest(format!("encoding matrix has dims {:?}", b.dims())));
    }
    let freqs = b.into_f64()?.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    let encoding = FeatureEncoding::from_matrix(freqs, manifest.sigma_k, manifest.sigma_t)?;
    let mut params = Vec::new();
    for layer in &manifest.layers {
        let w = read_nda(dir.join(&layer.weight))?;
        if w.dims() != layer.shape {
            return Err(Error::Manifest(format!("{} has dims {:?}, manifest says {:?}", layer.weight, w.dims(), layer.shape)));
        }
        let bias = read_nda(dir.join(&layer.bias))?;
        params.push(RealTensor::new(w.dims().to_vec(), w.into_f64()?.into_iter().map(T::lit).collect())?);
        params.push(RealTensor::new(bias.dims().to_vec(), bias.into_f64()?.into_iter().map(T::lit).collect())?);
    }
    SirenModel::from_parts(
        encoding,
        params,
        manifest.omega0,
        manifest.n_coils,
        manifest.seed,
        manifest.output_scale,
    )
}
