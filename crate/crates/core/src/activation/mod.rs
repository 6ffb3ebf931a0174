//! Neuron-level analyses over activation dumps: top-K mining, color
//! selectivity, color-label frequencies, neuron features, hue statistics and
//! the neuron taxonomy.

mod analysis;
mod classify;
mod matrix;
mod profiles;
mod selectivity;

pub use analysis::{
    analyze_layer, hue_histogram, AnalysisConfig, ColumnRoles, CropIndex, FeatureSource,
    NeuronProfile, StroopLabels, ThumbnailSource, FEATURE_SIDE,
};
pub use classify::{
    classify_neuron, layer_type_distribution, ClassifierInputs, LayerDistribution, NeuronType,
    Thresholds, TypeBucket, ACTIVE_RATIO,
};
pub use matrix::{top_k, top_k_among, ActivationMatrix, CropBox, TopKEntry, TopKSet};
pub use profiles::{
    load_crop_index, parse_crop_index, ProfilesFile, ProfilesHeader, PROFILES_FORMAT,
};
pub use selectivity::{
    color_label_selectivity, color_selectivity_index, dominant_hue, neuron_feature, pearson,
    pearson_histograms, HueHistogram, LabelFrequencies, MIN_FEATURE_SATURATION,
};
