//! NN architecture search space: supernet skeletons, choice blocks, and the
//! mapping from an architecture to accelerator workloads.
//!
//! Each choice block is a ShuffleNet-style unit operating on half the
//! block's channels; the searchable part is the depthwise kernel size (3, 5
//! or 7) or the extended x-block (three dw3 stages). Channel shuffles and
//! elementwise ops are not modeled as workloads; convolutions dominate.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::accel::LayerWorkload;

/// The four candidate operators per choice block, in encoding order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChoiceId {
    C3,
    C5,
    C7,
    Cx,
}

pub const CHOICE_COUNT: usize = 4;
pub const CHOICES: [ChoiceId; CHOICE_COUNT] = [ChoiceId::C3, ChoiceId::C5, ChoiceId::C7, ChoiceId::Cx];

impl ChoiceId {
    pub fn index(self) -> usize {
        match self {
            ChoiceId::C3 => 0,
            ChoiceId::C5 => 1,
            ChoiceId::C7 => 2,
            ChoiceId::Cx => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        CHOICES.get(i).copied()
    }

    pub fn as_char(self) -> char {
        match self {
            ChoiceId::C3 => '3',
            ChoiceId::C5 => '5',
            ChoiceId::C7 => '7',
            ChoiceId::Cx => 'x',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            '3' => Some(ChoiceId::C3),
            '5' => Some(ChoiceId::C5),
            '7' => Some(ChoiceId::C7),
            'x' => Some(ChoiceId::Cx),
            _ => None,
        }
    }
}

/// Which supernet skeleton to search over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetId {
    Imagenet,
    Cifar10,
}

impl std::str::FromStr for DatasetId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "imagenet" => Ok(DatasetId::Imagenet),
            "cifar10" => Ok(DatasetId::Cifar10),
            other => Err(format!("unknown dataset id {other:?} (expected imagenet|cifar10)")),
        }
    }
}

/// One sequence of identical choice blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSpec {
    pub out_channels: u32,
    pub repeat: u32,
    /// Stride of the first block in the sequence; the rest use stride 1.
    pub stride: u32,
}

/// Supernet skeleton: stem conv, choice-block stages, head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupernetSpec {
    pub dataset: DatasetId,
    pub input_res: u32,
    pub input_channels: u32,
    pub stem_channels: u32,
    pub stem_stride: u32,
    pub stages: Vec<StageSpec>,
    /// Optional 1x1 conv before global pooling.
    pub head_conv_channels: Option<u32>,
    pub num_classes: u32,
}

/// The supernet table for a dataset.
pub fn supernet(dataset: DatasetId) -> SupernetSpec {
    match dataset {
        DatasetId::Imagenet => SupernetSpec {
            dataset,
            input_res: 224,
            input_channels: 3,
            stem_channels: 16,
            stem_stride: 2,
            stages: vec![
                StageSpec { out_channels: 64, repeat: 4, stride: 2 },
                StageSpec { out_channels: 160, repeat: 4, stride: 2 },
                StageSpec { out_channels: 320, repeat: 8, stride: 2 },
                StageSpec { out_channels: 640, repeat: 4, stride: 2 },
            ],
            head_conv_channels: Some(1024),
            num_classes: 1000,
        },
        DatasetId::Cifar10 => SupernetSpec {
            dataset,
            input_res: 32,
            input_channels: 3,
            stem_channels: 64,
            stem_stride: 1,
            stages: vec![
                StageSpec { out_channels: 256, repeat: 4, stride: 2 },
                StageSpec { out_channels: 640, repeat: 4, stride: 2 },
                StageSpec { out_channels: 1280, repeat: 1, stride: 2 },
            ],
            head_conv_channels: None,
            num_classes: 10,
        },
    }
}

impl SupernetSpec {
    /// Number of choice blocks L.
    pub fn num_blocks(&self) -> usize {
        self.stages.iter().map(|s| s.repeat as usize).sum()
    }

    /// Length of the flattened architecture one-hot (4L).
    pub fn onehot_len(&self) -> usize {
        CHOICE_COUNT * self.num_blocks()
    }

    /// Number of distinct architectures (4^L).
    pub fn arch_count(&self) -> u64 {
        (CHOICE_COUNT as u64).pow(self.num_blocks() as u32)
    }

    /// Every workload any architecture in this space can produce; useful
    /// for precomputing cost tables.
    pub fn all_workloads(&self) -> Vec<LayerWorkload> {
        let mut out = Vec::new();
        let mut push = |w: LayerWorkload| {
            if !out.contains(&w) {
                out.push(w);
            }
        };
        for w in self.fixed_workloads() {
            push(w);
        }
        for block in 0..self.num_blocks() {
            for choice in CHOICES {
                for w in self.block_workloads(block, choice) {
                    push(w);
                }
            }
        }
        out
    }

    /// Stem and head convs shared by every architecture.
    fn fixed_workloads(&self) -> Vec<LayerWorkload> {
        let mut out = vec![LayerWorkload::conv(
            self.input_res,
            self.input_res,
            self.input_channels,
            self.stem_channels,
            3,
            self.stem_stride,
        )];
        let (res, ch) = self.final_feature_map();
        if let Some(head) = self.head_conv_channels {
            out.push(LayerWorkload::conv(res, res, ch, head, 1, 1));
            // classifier as a 1x1 conv on the pooled map
            out.push(LayerWorkload::conv(1, 1, head, self.num_classes, 1, 1));
        } else {
            out.push(LayerWorkload::conv(1, 1, ch, self.num_classes, 1, 1));
        }
        out
    }

    /// (input resolution, input channels) seen by choice block `index`.
    fn block_input(&self, index: usize) -> (u32, u32) {
        let mut res = self.input_res.div_ceil(self.stem_stride);
        let mut ch = self.stem_channels;
        let mut remaining = index;
        for stage in &self.stages {
            for r in 0..stage.repeat as usize {
                if remaining == 0 {
                    return (res, ch);
                }
                let stride = if r == 0 { stage.stride } else { 1 };
                res = res.div_ceil(stride);
                ch = stage.out_channels;
                remaining -= 1;
            }
        }
        panic!("block index {index} out of range");
    }

    fn block_stage(&self, index: usize) -> (&StageSpec, bool) {
        let mut remaining = index;
        for stage in &self.stages {
            if remaining < stage.repeat as usize {
                return (stage, remaining == 0);
            }
            remaining -= stage.repeat as usize;
        }
        panic!("block index {index} out of range");
    }

    fn final_feature_map(&self) -> (u32, u32) {
        let mut res = self.input_res.div_ceil(self.stem_stride);
        for stage in &self.stages {
            res = res.div_ceil(stage.stride);
        }
        let ch = self.stages.last().expect("at least one stage").out_channels;
        (res, ch)
    }

    /// Convs of one choice block. The branch runs on half the channels:
    /// pointwise in, depthwise (carrying the block stride), pointwise out;
    /// the x-block repeats the dw3+pointwise pair three times.
    fn block_workloads(&self, index: usize, choice: ChoiceId) -> Vec<LayerWorkload> {
        let (res, in_ch) = self.block_input(index);
        let (stage, first) = self.block_stage(index);
        let stride = if first { stage.stride } else { 1 };
        let in_half = in_ch / 2;
        let mid = stage.out_channels / 2;
        let out_res = res.div_ceil(stride);
        match choice {
            ChoiceId::C3 | ChoiceId::C5 | ChoiceId::C7 => {
                let k = match choice {
                    ChoiceId::C3 => 3,
                    ChoiceId::C5 => 5,
                    _ => 7,
                };
                vec![
                    LayerWorkload::conv(res, res, in_half, mid, 1, 1),
                    LayerWorkload::depthwise(res, res, mid, k, stride),
                    LayerWorkload::conv(out_res, out_res, mid, mid, 1, 1),
                ]
            }
            ChoiceId::Cx => {
                vec![
                    LayerWorkload::conv(res, res, in_half, mid, 1, 1),
                    LayerWorkload::depthwise(res, res, mid, 3, stride),
                    LayerWorkload::conv(out_res, out_res, mid, mid, 1, 1),
                    LayerWorkload::depthwise(out_res, out_res, mid, 3, 1),
                    LayerWorkload::conv(out_res, out_res, mid, mid, 1, 1),
                    LayerWorkload::depthwise(out_res, out_res, mid, 3, 1),
                    LayerWorkload::conv(out_res, out_res, mid, mid, 1, 1),
                ]
            }
        }
    }
}

/// A discrete architecture: one choice per block.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Architecture {
    pub choices: Vec<ChoiceId>,
}

impl Architecture {
    pub fn uniform(choice: ChoiceId, len: usize) -> Self {
        Architecture { choices: vec![choice; len] }
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    /// Block-major, choice-minor one-hot of length 4L.
    pub fn encode_onehot(&self) -> Vec<f64> {
        let mut v = vec![0.0; CHOICE_COUNT * self.choices.len()];
        for (block, c) in self.choices.iter().enumerate() {
            v[block * CHOICE_COUNT + c.index()] = 1.0;
        }
        v
    }

    /// Per-block argmax over any real vector of length 4L.
    pub fn decode_onehot(v: &[f64]) -> Self {
        assert_eq!(v.len() % CHOICE_COUNT, 0, "length must be a multiple of 4");
        let choices = v
            .chunks(CHOICE_COUNT)
            .map(|row| {
                let best = row
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(i, _)| i)
                    .unwrap();
                ChoiceId::from_index(best).unwrap()
            })
            .collect();
        Architecture { choices }
    }

    /// Full network workload list for this architecture on `spec`.
    pub fn workloads(&self, spec: &SupernetSpec) -> Vec<LayerWorkload> {
        workloads_of(self, spec)
    }
}

/// Expand an architecture into its per-layer conv workloads: stem, each
/// block's convs, head.
pub fn workloads_of(arch: &Architecture, spec: &SupernetSpec) -> Vec<LayerWorkload> {
    assert_eq!(
        arch.len(),
        spec.num_blocks(),
        "architecture length must match the supernet"
    );
    let fixed = spec.fixed_workloads();
    let mut out = vec![fixed[0]];
    for (block, &choice) in arch.choices.iter().enumerate() {
        out.extend(spec.block_workloads(block, choice));
    }
    out.extend(fixed[1..].iter().copied());
    out
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.choices {
            write!(f, "{}", c.as_char())?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let choices: Result<Vec<_>, _> = s
            .chars()
            .map(|c| ChoiceId::from_char(c).ok_or_else(|| format!("bad choice char {c:?}")))
            .collect();
        Ok(Architecture { choices: choices? })
    }
}

impl From<Architecture> for String {
    fn from(a: Architecture) -> String {
        a.to_string()
    }
}

impl TryFrom<String> for Architecture {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

/// Continuous relaxation: per-block logits with a row-wise softmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchDistribution {
    /// L rows of 4 logits.
    pub logits: Vec<[f64; CHOICE_COUNT]>,
}

impl ArchDistribution {
    pub fn uniform(len: usize) -> Self {
        ArchDistribution { logits: vec![[0.0; CHOICE_COUNT]; len] }
    }

    pub fn len(&self) -> usize {
        self.logits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logits.is_empty()
    }

    /// Row-wise softmax, max-subtracted for stability.
    pub fn probs(&self) -> Vec<[f64; CHOICE_COUNT]> {
        self.logits
            .iter()
            .map(|row| {
                let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = row.iter().map(|&x| (x - m).exp()).collect();
                let z: f64 = exps.iter().sum();
                let mut out = [0.0; CHOICE_COUNT];
                for (o, e) in out.iter_mut().zip(&exps) {
                    *o = e / z;
                }
                out
            })
            .collect()
    }

    /// Flattened sigma(alpha) of length 4L; the continuous counterpart of
    /// [`Architecture::encode_onehot`].
    pub fn probs_flat(&self) -> Vec<f64> {
        self.probs().into_iter().flatten().collect()
    }

    /// Draw each block's choice independently from its softmax row.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Architecture {
        let choices = self
            .probs()
            .into_iter()
            .map(|row| {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (i, p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return ChoiceId::from_index(i).unwrap();
                    }
                }
                ChoiceId::Cx // u landed in the rounding tail
            })
            .collect();
        Architecture { choices }
    }

    /// Argmax discretization.
    pub fn argmax(&self) -> Architecture {
        let choices = self
            .logits
            .iter()
            .map(|row| {
                let best = row
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(i, _)| i)
                    .unwrap();
                ChoiceId::from_index(best).unwrap()
            })
            .collect();
        Architecture { choices }
    }
}

/// Uniformly random architecture.
pub fn random_architecture<R: Rng>(rng: &mut R, len: usize) -> Architecture {
    let choices = (0..len)
        .map(|_| ChoiceId::from_index(rng.random_range(0..CHOICE_COUNT)).unwrap())
        .collect();
    Architecture { choices }
}
