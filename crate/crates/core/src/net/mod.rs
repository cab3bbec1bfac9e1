//! The edge-embedding network: a 4-layer CNN with a grouped final projection,
//! plus the pair-input proxy network used for cost comparisons, parameter
//! initialization, and analytic parameter/MAC accounting.
//!
//! Pieces are embedded relative to one of their edges: the piece is rotated
//! so the edge of interest faces right (left role) or left (right role), and
//! left-role inputs are horizontally mirrored so a single network serves both
//! roles. A twin mode keeps two separate networks instead, for comparison.

mod embed;
mod kernels;
mod stack;

pub use embed::{embed_edges, pair_input, piece_to_input, pose_piece, EdgeEmbeddingSet, EdgeRole};
pub use kernels::Workspace;
pub use stack::{
    embed_backward, embed_forward, embed_forward_cached, pair_backward, pair_forward,
    pair_forward_cached, EmbedCache,
};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Real, Result};

pub const CONV_LAYERS: usize = 4;
pub const KERNEL: usize = 3;

/// Which subnet an input runs through. With a single shared network both
/// sides resolve to the same parameters; in twin mode `Left` selects the
/// second network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Right,
    Left,
}

/// Architecture of the embedding network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    /// Piece size S; must be divisible by 4 (two 2x2 poolings).
    pub piece_size: usize,
    /// Input channels (3 for RGB).
    pub channels_in: usize,
    /// Output channels of the four convolution layers.
    pub conv_channels: [usize; 4],
    /// Embedding dimension d.
    pub embedding_dim: usize,
    /// Number of projection groups G; must divide both d and the last
    /// convolution's channel count.
    pub groups: usize,
    /// Use separate left/right networks instead of flip sharing.
    pub twin: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            piece_size: 28,
            channels_in: 3,
            conv_channels: [64, 128, 256, 512],
            embedding_dim: 320,
            groups: 8,
            twin: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.piece_size == 0 || self.piece_size % 4 != 0 {
            return Err(Error::InvalidConfig(format!(
                "piece size {} must be a positive multiple of 4",
                self.piece_size
            )));
        }
        if self.channels_in == 0 || self.conv_channels.iter().any(|&c| c == 0) {
            return Err(Error::InvalidConfig("zero channel count".into()));
        }
        if self.embedding_dim == 0 || self.groups == 0 {
            return Err(Error::InvalidConfig("zero embedding dim or groups".into()));
        }
        if self.embedding_dim % self.groups != 0 {
            return Err(Error::InvalidConfig(format!(
                "groups {} must divide embedding dim {}",
                self.groups, self.embedding_dim
            )));
        }
        if self.conv_channels[3] % self.groups != 0 {
            return Err(Error::InvalidConfig(format!(
                "groups {} must divide final conv channels {}",
                self.groups, self.conv_channels[3]
            )));
        }
        Ok(())
    }

    /// Spatial size of the final feature map (S / 4).
    pub fn spatial_out(&self) -> usize {
        self.piece_size / 4
    }

    /// Flattened input length of one projection group.
    pub fn group_input(&self) -> usize {
        (self.conv_channels[3] / self.groups) * self.spatial_out() * self.spatial_out()
    }

    fn conv_dims(&self) -> [(usize, usize); CONV_LAYERS] {
        let c = self.conv_channels;
        [
            (self.channels_in, c[0]),
            (c[0], c[1]),
            (c[1], c[2]),
            (c[2], c[3]),
        ]
    }

    /// Parameter tensors of one subnet, in serialization order.
    fn subnet_tensors(&self, prefix: &str) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        for (i, (cin, cout)) in self.conv_dims().into_iter().enumerate() {
            out.push((format!("{prefix}conv{}.weight", i + 1), alloc::vec![cout, cin, KERNEL, KERNEL]));
            out.push((format!("{prefix}conv{}.bias", i + 1), alloc::vec![cout]));
        }
        let dg = self.embedding_dim / self.groups;
        for g in 0..self.groups {
            out.push((format!("{prefix}proj.{g}.weight"), alloc::vec![dg, self.group_input()]));
            out.push((format!("{prefix}proj.{g}.bias"), alloc::vec![dg]));
        }
        out
    }

    /// The deterministic flat parameter layout (doubled in twin mode).
    pub fn layout(&self) -> ParamLayout {
        let mut tensors = Vec::new();
        if self.twin {
            tensors.extend(self.subnet_tensors("right."));
            tensors.extend(self.subnet_tensors("left."));
        } else {
            tensors.extend(self.subnet_tensors(""));
        }
        ParamLayout::from_shapes(tensors)
    }

    /// Total parameter count: convolutions plus the grouped projection
    /// (`C_o * S_o^2 * d / G + d`), doubled in twin mode.
    pub fn param_count(&self) -> usize {
        self.layout().total
    }

    /// Multiply-accumulates for one embedding forward pass (bias adds and
    /// pooling excluded).
    pub fn macs_per_embedding(&self) -> u64 {
        let s = self.piece_size as u64;
        let dims = self.conv_dims();
        let spatial = [s * s, s * s, s * s / 4, s * s / 16];
        let conv: u64 = dims
            .iter()
            .zip(spatial)
            .map(|(&(cin, cout), sp)| sp * (cin * cout) as u64 * (KERNEL * KERNEL) as u64)
            .sum();
        let proj = (self.embedding_dim * self.conv_channels[3]) as u64
            * (self.spatial_out() * self.spatial_out()) as u64
            / self.groups as u64;
        conv + proj
    }

    /// MACs to score one pair from scratch: two embedding passes.
    pub fn macs_per_pair(&self) -> u64 {
        2 * self.macs_per_embedding()
    }

    /// MACs for all pairwise scores of an N-piece puzzle in embedding mode:
    /// 8N embedding passes (4 rotations x 2 roles per piece); the 16N^2
    /// distance evaluations are negligible by comparison and excluded.
    pub fn macs_per_puzzle_embedding(&self, n: usize) -> u64 {
        8 * n as u64 * self.macs_per_embedding()
    }

    /// The pair-input proxy network with the same backbone.
    pub fn pair_proxy(&self) -> PairNetConfig {
        PairNetConfig {
            piece_size: self.piece_size,
            channels_in: self.channels_in,
            conv_channels: self.conv_channels,
        }
    }
}

/// Architecture of the end-to-end pair scoring proxy: the same convolution
/// stack applied to a horizontally concatenated `S x 2S` pair, with a single
/// linear output unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairNetConfig {
    pub piece_size: usize,
    pub channels_in: usize,
    pub conv_channels: [usize; 4],
}

impl PairNetConfig {
    pub fn validate(&self) -> Result<()> {
        ModelConfig {
            piece_size: self.piece_size,
            channels_in: self.channels_in,
            conv_channels: self.conv_channels,
            embedding_dim: 1,
            groups: 1,
            twin: false,
        }
        .validate()
    }

    /// Flattened length of the final feature map (`C_o * S_o * 2 S_o`).
    pub fn head_input(&self) -> usize {
        let so = self.piece_size / 4;
        self.conv_channels[3] * so * (2 * so)
    }

    pub fn layout(&self) -> ParamLayout {
        let mut tensors = Vec::new();
        let dims = [
            (self.channels_in, self.conv_channels[0]),
            (self.conv_channels[0], self.conv_channels[1]),
            (self.conv_channels[1], self.conv_channels[2]),
            (self.conv_channels[2], self.conv_channels[3]),
        ];
        for (i, (cin, cout)) in dims.into_iter().enumerate() {
            tensors.push((format!("conv{}.weight", i + 1), alloc::vec![cout, cin, KERNEL, KERNEL]));
            tensors.push((format!("conv{}.bias", i + 1), alloc::vec![cout]));
        }
        tensors.push(("head.weight".into(), alloc::vec![1, self.head_input()]));
        tensors.push(("head.bias".into(), alloc::vec![1]));
        ParamLayout::from_shapes(tensors)
    }

    pub fn param_count(&self) -> usize {
        self.layout().total
    }

    /// MACs for one pair forward pass.
    pub fn macs_per_pair(&self) -> u64 {
        let s = self.piece_size as u64;
        let area = 2 * s * s;
        let dims = [
            (self.channels_in, self.conv_channels[0]),
            (self.conv_channels[0], self.conv_channels[1]),
            (self.conv_channels[1], self.conv_channels[2]),
            (self.conv_channels[2], self.conv_channels[3]),
        ];
        let spatial = [area, area, area / 4, area / 16];
        let conv: u64 = dims
            .iter()
            .zip(spatial)
            .map(|(&(cin, cout), sp)| sp * (cin * cout) as u64 * (KERNEL * KERNEL) as u64)
            .sum();
        conv + self.head_input() as u64
    }

    /// MACs for an N-piece puzzle scored end to end: the paper-style
    /// `16 N^2` pair count.
    pub fn macs_per_puzzle(&self, n: usize) -> u64 {
        16 * (n as u64) * (n as u64) * self.macs_per_pair()
    }
}

/// One named tensor inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Fan-in for He initialization: everything but the leading output dim.
    fn fan_in(&self) -> usize {
        self.shape.iter().skip(1).product()
    }

    fn is_bias(&self) -> bool {
        self.shape.len() == 1
    }
}

/// Deterministic flat serialization order of all parameter tensors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    pub tensors: Vec<TensorSpec>,
    pub total: usize,
}

impl ParamLayout {
    fn from_shapes(shapes: Vec<(String, Vec<usize>)>) -> Self {
        let mut tensors = Vec::with_capacity(shapes.len());
        let mut offset = 0;
        for (name, shape) in shapes {
            let len: usize = shape.iter().product();
            tensors.push(TensorSpec { name, shape, offset });
            offset += len;
        }
        ParamLayout { tensors, total: offset }
    }

    pub fn find(&self, name: &str) -> Option<&TensorSpec> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn range(&self, name: &str) -> Result<core::ops::Range<usize>> {
        let t = self
            .find(name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown tensor {name}")))?;
        Ok(t.offset..t.offset + t.len())
    }
}

/// All weights of an embedding network as one flat vector in layout order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<F> {
    config: ModelConfig,
    layout: ParamLayout,
    pub data: Vec<F>,
}

impl<F: Real> ModelParams<F> {
    /// He-style fan-in-scaled uniform initialization, biases zero,
    /// deterministic per seed.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let layout = config.layout();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = he_uniform_fill(&layout, &mut rng);
        Ok(Self { config, layout, data })
    }

    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let layout = config.layout();
        let data = alloc::vec![F::zero(); layout.total];
        Ok(Self { config, layout, data })
    }

    /// Wraps an existing flat vector (checkpoint loading).
    pub fn from_flat(config: ModelConfig, data: Vec<F>) -> Result<Self> {
        config.validate()?;
        let layout = config.layout();
        if data.len() != layout.total {
            return Err(Error::DataMismatch(format!(
                "parameter vector has {} values, layout needs {}",
                data.len(),
                layout.total
            )));
        }
        Ok(Self { config, layout, data })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn tensor(&self, name: &str) -> Result<&[F]> {
        Ok(&self.data[self.layout.range(name)?])
    }

    pub fn tensor_mut(&mut self, name: &str) -> Result<&mut [F]> {
        let r = self.layout.range(name)?;
        Ok(&mut self.data[r])
    }

    /// Converts the element type (used by the f64 gradient checks).
    pub fn cast<G: Real>(&self) -> ModelParams<G> {
        ModelParams {
            config: self.config.clone(),
            layout: self.layout.clone(),
            data: self.data.iter().map(|&v| G::of_f64(v.as_f64())).collect(),
        }
    }

    /// Name prefix of the subnet serving `side`.
    pub(crate) fn side_prefix(&self, side: Side) -> &'static str {
        if self.config.twin {
            match side {
                Side::Right => "right.",
                Side::Left => "left.",
            }
        } else {
            ""
        }
    }
}

/// Parameters of the pair-input proxy network.
#[derive(Debug, Clone, PartialEq)]
pub struct PairNetParams<F> {
    config: PairNetConfig,
    layout: ParamLayout,
    pub data: Vec<F>,
}

impl<F: Real> PairNetParams<F> {
    pub fn init(config: PairNetConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let layout = config.layout();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = he_uniform_fill(&layout, &mut rng);
        Ok(Self { config, layout, data })
    }

    pub fn from_flat(config: PairNetConfig, data: Vec<F>) -> Result<Self> {
        config.validate()?;
        let layout = config.layout();
        if data.len() != layout.total {
            return Err(Error::DataMismatch(format!(
                "parameter vector has {} values, layout needs {}",
                data.len(),
                layout.total
            )));
        }
        Ok(Self { config, layout, data })
    }

    pub fn config(&self) -> &PairNetConfig {
        &self.config
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn tensor(&self, name: &str) -> Result<&[F]> {
        Ok(&self.data[self.layout.range(name)?])
    }
}

fn he_uniform_fill<F: Real>(layout: &ParamLayout, rng: &mut ChaCha8Rng) -> Vec<F> {
    let mut data = alloc::vec![F::zero(); layout.total];
    for t in &layout.tensors {
        if t.is_bias() {
            continue;
        }
        let bound = (6.0 / t.fan_in() as f64).sqrt();
        for v in &mut data[t.offset..t.offset + t.len()] {
            let u: f64 = rng.gen::<f64>();
            *v = F::of_f64((2.0 * u - 1.0) * bound);
        }
    }
    data
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(d: usize, g: usize, twin: bool) -> ModelConfig {
        ModelConfig {
            embedding_dim: d,
            groups: g,
            twin,
            ..ModelConfig::default()
        }
    }

    /// Independent closed-form parameter count: per conv layer
    /// `out*(in*9 + 1)`, per projection group `(d/G)*((Co/G)*So^2 + 1)`.
    fn oracle_param_count(c: &ModelConfig) -> usize {
        let chans = [
            c.channels_in,
            c.conv_channels[0],
            c.conv_channels[1],
            c.conv_channels[2],
            c.conv_channels[3],
        ];
        let conv: usize = (0..4).map(|i| chans[i + 1] * (chans[i] * 9 + 1)).sum();
        let so = c.piece_size / 4;
        let per_group = (c.embedding_dim / c.groups)
            * ((c.conv_channels[3] / c.groups) * so * so + 1);
        let single = conv + c.groups * per_group;
        if c.twin {
            2 * single
        } else {
            single
        }
    }

    #[test]
    fn param_count_matches_oracle_for_published_configs() {
        for (d, g, twin, expect) in [
            (320, 1, false, 9_579_456usize),
            (320, 16, false, 2_053_056),
            (40, 1, true, 5_109_072),
        ] {
            let c = cfg(d, g, twin);
            assert_eq!(c.param_count(), oracle_param_count(&c));
            assert_eq!(c.param_count(), expect, "d={d} G={g} twin={twin}");
        }
    }

    #[test]
    fn grouping_divides_projection_parameters() {
        let base = cfg(320, 1, false).param_count();
        let conv_only = 1_550_976usize;
        let mut last = usize::MAX;
        for g in [1usize, 2, 4, 8, 16] {
            let total = cfg(320, g, false).param_count();
            let proj = total - conv_only;
            assert_eq!(proj, (base - conv_only - 320) / g + 320);
            assert!(total < last);
            last = total;
        }
    }

    #[test]
    fn macs_match_published_table() {
        let c = cfg(320, 16, false);
        assert_eq!(c.macs_per_embedding(), 175_264_768);
        // Rounds to the published 0.35 GMAC per pair.
        let per_pair_g = c.macs_per_pair() as f64 / 1e9;
        assert!((per_pair_g - 0.35).abs() < 0.005, "{per_pair_g}");
        // Embedding-mode puzzle coefficient rounds to 1.4N GMACs.
        let per_puzzle_coeff = c.macs_per_puzzle_embedding(1) as f64 / 1e9;
        assert!((per_puzzle_coeff - 1.4).abs() < 0.05, "{per_puzzle_coeff}");

        let e2e = c.pair_proxy();
        assert_eq!(e2e.macs_per_pair(), 349_576_192);
        assert_eq!(e2e.param_count(), 1_601_153);
        let e2e_coeff = e2e.macs_per_puzzle(1) as f64 / 16.0 / 1e9 * 16.0;
        assert!((e2e_coeff - 5.6).abs() < 0.05, "{e2e_coeff}");
    }

    #[test]
    fn puzzle_macs_scaling_ratios_are_exact() {
        let c = ModelConfig::default();
        for n in [16usize, 100, 400] {
            assert_eq!(
                c.macs_per_puzzle_embedding(2 * n),
                2 * c.macs_per_puzzle_embedding(n)
            );
            assert_eq!(
                c.pair_proxy().macs_per_puzzle(2 * n),
                4 * c.pair_proxy().macs_per_puzzle(n)
            );
        }
    }

    #[test]
    fn init_is_deterministic_and_biases_are_zero() {
        let c = ModelConfig {
            conv_channels: [4, 4, 8, 8],
            embedding_dim: 16,
            groups: 2,
            ..ModelConfig::default()
        };
        let a: ModelParams<f32> = ModelParams::init(c.clone(), 7).unwrap();
        let b: ModelParams<f32> = ModelParams::init(c.clone(), 7).unwrap();
        assert_eq!(a.data, b.data);
        let other: ModelParams<f32> = ModelParams::init(c.clone(), 8).unwrap();
        assert_ne!(a.data, other.data);
        for g in 0..2 {
            let bias = a.tensor(&format!("proj.{g}.bias")).unwrap();
            assert!(bias.iter().all(|&v| v == 0.0));
        }
        for l in 1..=4 {
            let bias = a.tensor(&format!("conv{l}.bias")).unwrap();
            assert!(bias.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = ModelConfig::default();
        c.groups = 7; // does not divide 320
        assert!(c.validate().is_err());
        let mut c = ModelConfig::default();
        c.piece_size = 30;
        assert!(c.validate().is_err());
        let mut c = ModelConfig::default();
        c.groups = 3; // divides neither 320 nor 512
        assert!(c.validate().is_err());
    }

    #[test]
    fn twin_layout_doubles_and_prefixes() {
        let c = cfg(40, 1, true);
        let layout = c.layout();
        assert!(layout.find("right.conv1.weight").is_some());
        assert!(layout.find("left.proj.0.bias").is_some());
        assert_eq!(layout.total, 2 * cfg(40, 1, false).layout().total);
    }
}
