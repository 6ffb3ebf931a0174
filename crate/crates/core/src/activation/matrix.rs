use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatially max-pooled activations of one layer: neurons × images, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivationMatrix {
    layer: String,
    neurons: usize,
    images: usize,
    values: Vec<f32>,
    image_refs: Vec<String>,
}

impl ActivationMatrix {
    pub fn new(
        layer: impl Into<String>,
        neurons: usize,
        images: usize,
        values: Vec<f32>,
        image_refs: Vec<String>,
    ) -> Result<Self> {
        let layer = layer.into();
        if values.len() != neurons * images {
            return Err(Error::Activation(format!(
                "layer {layer}: {} values for a {neurons}x{images} grid",
                values.len()
            )));
        }
        if image_refs.len() != images {
            return Err(Error::Activation(format!(
                "layer {layer}: {} image references for {images} images",
                image_refs.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Activation(format!(
                "layer {layer}: neuron {} image {} has activation {}; expected finite and >= 0",
                pos / images.max(1),
                pos % images.max(1),
                values[pos]
            )));
        }
        Ok(ActivationMatrix {
            layer,
            neurons,
            images,
            values,
            image_refs,
        })
    }

    pub fn layer(&self) -> &str {
        &self.layer
    }

    pub fn neurons(&self) -> usize {
        self.neurons
    }

    pub fn images(&self) -> usize {
        self.images
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn image_refs(&self) -> &[String] {
        &self.image_refs
    }

    pub fn row(&self, neuron: usize) -> &[f32] {
        &self.values[neuron * self.images..(neuron + 1) * self.images]
    }

    pub fn get(&self, neuron: usize, image: usize) -> f64 {
        self.values[neuron * self.images + image] as f64
    }
}

/// Receptive-field crop box in source-image pixels, `[x0, y0, x1, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropBox(pub [u32; 4]);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopKEntry {
    /// Column index in the activation matrix.
    pub image: usize,
    pub activation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crop: Option<CropBox>,
}

/// The highest-activating images of one neuron, best first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopKSet {
    pub neuron: usize,
    pub entries: Vec<TopKEntry>,
    /// Set when fewer than the requested `k` images were available.
    pub truncated: bool,
}

impl TopKSet {
    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.activation)
    }

    pub fn max(&self) -> f64 {
        self.entries.first().map_or(0.0, |e| e.activation)
    }
}

/// Top `k` images of `neuron` over all columns; ties go to the lower index.
pub fn top_k(matrix: &ActivationMatrix, neuron: usize, k: usize) -> Result<TopKSet> {
    let all: Vec<usize> = (0..matrix.images()).collect();
    top_k_among(matrix, neuron, &all, k)
}

/// Top `k` among the given columns.
pub fn top_k_among(
    matrix: &ActivationMatrix,
    neuron: usize,
    columns: &[usize],
    k: usize,
) -> Result<TopKSet> {
    if k == 0 {
        return Err(Error::Activation("k must be at least 1".into()));
    }
    if neuron >= matrix.neurons() {
        return Err(Error::Activation(format!(
            "neuron {neuron} out of range for layer {} ({} neurons)",
            matrix.layer(),
            matrix.neurons()
        )));
    }
    if let Some(&c) = columns.iter().find(|&&c| c >= matrix.images()) {
        return Err(Error::Activation(format!("column {c} out of range")));
    }
    let row = matrix.row(neuron);
    let mut scored: Vec<(f32, usize)> = columns.iter().map(|&c| (row[c], c)).collect();
    let order = |a: &(f32, usize), b: &(f32, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
    let take = k.min(scored.len());
    if take < scored.len() {
        scored.select_nth_unstable_by(take, order);
        scored.truncate(take);
    }
    scored.sort_unstable_by(order);
    Ok(TopKSet {
        neuron,
        entries: scored
            .into_iter()
            .map(|(a, image)| TopKEntry {
                image,
                activation: a as f64,
                crop: None,
            })
            .collect(),
        truncated: take < k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matrix(neurons: usize, images: usize, values: Vec<f32>) -> ActivationMatrix {
        let refs = (0..images).map(|i| format!("img{i}")).collect();
        ActivationMatrix::new("l", neurons, images, values, refs).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        let refs = vec!["a".to_string()];
        assert!(ActivationMatrix::new("l", 1, 1, vec![], refs.clone()).is_err());
        assert!(ActivationMatrix::new("l", 1, 1, vec![-1.0], refs.clone()).is_err());
        assert!(ActivationMatrix::new("l", 1, 1, vec![f32::NAN], refs.clone()).is_err());
        assert!(ActivationMatrix::new("l", 1, 2, vec![0.0, 1.0], refs).is_err());
    }

    #[test]
    fn top_one_of_three() {
        let m = matrix(1, 3, vec![0.2, 0.9, 0.1]);
        let t = top_k(&m, 0, 1).unwrap();
        assert_eq!(t.entries.len(), 1);
        assert_eq!(t.entries[0].image, 1);
        assert!(!t.truncated);
    }

    #[test]
    fn k_equal_to_image_count_sorts_everything() {
        let m = matrix(1, 4, vec![0.2, 0.9, 0.1, 0.9]);
        let t = top_k(&m, 0, 4).unwrap();
        let order: Vec<usize> = t.entries.iter().map(|e| e.image).collect();
        assert_eq!(order, vec![1, 3, 0, 2]);
    }

    #[test]
    fn oversized_k_is_truncated_with_flag() {
        let m = matrix(1, 2, vec![0.2, 0.9]);
        let t = top_k(&m, 0, 5).unwrap();
        assert_eq!(t.entries.len(), 2);
        assert!(t.truncated);
        assert!(top_k(&m, 0, 0).is_err());
        assert!(top_k(&m, 1, 1).is_err());
    }

    fn full_sort_oracle(row: &[f32], k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..row.len()).collect();
        // stable sort on descending value keeps ascending index among ties
        idx.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap());
        idx.truncate(k);
        idx
    }

    #[test]
    fn random_20x50_matches_full_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let values: Vec<f32> = (0..20 * 50)
            .map(|_| rng.random_range(0..8) as f32 / 4.0)
            .collect();
        let m = matrix(20, 50, values);
        for n in 0..20 {
            for k in [1, 7, 50] {
                let got: Vec<usize> = top_k(&m, n, k)
                    .unwrap()
                    .entries
                    .iter()
                    .map(|e| e.image)
                    .collect();
                assert_eq!(got, full_sort_oracle(m.row(n), k));
            }
        }
    }

    proptest! {
        #[test]
        fn top_k_is_full_sort_prefix(
            neurons in 1usize..8,
            images in 1usize..200,
            k in 1usize..64,
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<f32> = (0..neurons * images).map(|_| rng.random_range(0..16) as f32).collect();
            let m = matrix(neurons, images, values);
            for n in 0..neurons {
                let t = top_k(&m, n, k).unwrap();
                let got: Vec<usize> = t.entries.iter().map(|e| e.image).collect();
                prop_assert_eq!(got, full_sort_oracle(m.row(n), k));
                prop_assert!(t.entries.windows(2).all(|w| w[0].activation >= w[1].activation));
            }
        }
    }
}
