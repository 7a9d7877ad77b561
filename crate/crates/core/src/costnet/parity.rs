//! Forward-pass fixtures written by the trainer: an input, an embedding and
//! the trainer's own output, stored in the same container as weights.

use std::path::Path;

use super::format::{Container, Descriptor, Tensor};
use super::net::{Model, DEFAULT_WIDTHS};
use super::CostNetError;
use crate::envgen::ChannelStack;

const INPUT: &str = "parity_input";
const EMBEDDING: &str = "parity_embedding";
const OUTPUT: &str = "parity_output";

#[derive(Debug, Clone, PartialEq)]
pub struct ParityFixture {
    /// Four occupancy planes.
    pub input: ChannelStack,
    pub embedding: Vec<f32>,
    /// Sigmoid output, `H*W` row-major.
    pub output: Vec<f32>,
}

/// Drops leading singleton (batch) axes.
fn squeeze(dims: &[usize], keep: usize) -> &[usize] {
    let mut d = dims;
    while d.len() > keep && d[0] == 1 {
        d = &d[1..];
    }
    d
}

fn tensor<'a>(c: &'a Container, name: &str) -> Result<&'a Tensor, CostNetError> {
    c.get(name).ok_or_else(|| CostNetError::MissingTensor(name.into()))
}

impl ParityFixture {
    pub fn from_container(c: &Container) -> Result<Self, CostNetError> {
        let inp = tensor(c, INPUT)?;
        let emb = tensor(c, EMBEDDING)?;
        let out = tensor(c, OUTPUT)?;
        let (h, w) = match squeeze(&inp.dims, 3) {
            &[4, h, w] => (h, w),
            d => {
                return Err(CostNetError::ShapeMismatch {
                    tensor: INPUT.into(),
                    expected: vec![4, 0, 0],
                    found: d.to_vec(),
                })
            }
        };
        if squeeze(&emb.dims, 1).len() != 1 {
            return Err(CostNetError::ShapeMismatch {
                tensor: EMBEDDING.into(),
                expected: vec![c.descriptor.k],
                found: emb.dims.clone(),
            });
        }
        if squeeze(&out.dims, 2) != [h, w] {
            return Err(CostNetError::ShapeMismatch {
                tensor: OUTPUT.into(),
                expected: vec![h, w],
                found: out.dims.clone(),
            });
        }
        Ok(Self {
            input: ChannelStack {
                channels: 4,
                height: h,
                width: w,
                data: inp.data.clone(),
            },
            embedding: emb.data.clone(),
            output: out.data.clone(),
        })
    }

    pub fn to_container(&self) -> Container {
        let (h, w) = (self.input.height, self.input.width);
        Container {
            descriptor: Descriptor {
                k: self.embedding.len(),
                widths: DEFAULT_WIDTHS.to_vec(),
                tensor_order: vec![INPUT.into(), EMBEDDING.into(), OUTPUT.into()],
            },
            tensors: vec![
                Tensor::new(INPUT, vec![4, h, w], self.input.data.clone()),
                Tensor::new(EMBEDDING, vec![self.embedding.len()], self.embedding.clone()),
                Tensor::new(OUTPUT, vec![h, w], self.output.clone()),
            ],
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, CostNetError> {
        Self::from_container(&Container::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), CostNetError> {
        self.to_container().write(path)
    }

    /// Max absolute difference between `model`'s forward pass and the
    /// stored output.
    pub fn max_abs_error(&self, model: &Model) -> Result<f32, CostNetError> {
        let out = model.forward(&model.stack_input(&self.input, &self.embedding)?)?;
        Ok(out
            .iter()
            .zip(&self.output)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costnet::NetSpec;

    fn fixture(model: &Model) -> ParityFixture {
        let input = ChannelStack {
            channels: 4,
            height: 8,
            width: 12,
            data: (0..4 * 96).map(|i| ((i * 7) % 5) as f32 / 4.0).collect(),
        };
        let embedding = vec![0.5, -0.25];
        let output = model.forward(&model.stack_input(&input, &embedding).unwrap()).unwrap();
        ParityFixture { input, embedding, output }
    }

    #[test]
    fn round_trip_and_self_parity() {
        let m = Model::random(NetSpec::new(2).unwrap(), 3);
        let f = fixture(&m);
        let back = ParityFixture::from_container(&Container::from_bytes(&f.to_container().to_bytes()).unwrap()).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.max_abs_error(&m).unwrap(), 0.0);
        let other = Model::random(NetSpec::new(2).unwrap(), 4);
        assert!(back.max_abs_error(&other).unwrap() > 1e-3);
    }

    #[test]
    fn batch_axes_accepted() {
        let m = Model::random(NetSpec::new(2).unwrap(), 3);
        let mut c = fixture(&m).to_container();
        c.tensors[0].dims.insert(0, 1);
        c.tensors[1].dims.insert(0, 1);
        c.tensors[2].dims.splice(0..0, [1, 1]);
        let f = ParityFixture::from_container(&c).unwrap();
        assert_eq!((f.input.height, f.input.width), (8, 12));
    }

    #[test]
    fn missing_output_rejected() {
        let mut c = fixture(&Model::zeros(NetSpec::new(2).unwrap())).to_container();
        c.tensors.pop();
        assert!(matches!(ParityFixture::from_container(&c), Err(CostNetError::MissingTensor(_))));
    }
}
