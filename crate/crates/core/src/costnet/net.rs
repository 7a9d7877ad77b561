use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::format::{Container, Descriptor, Tensor};
use super::CostNetError;
use crate::envgen::{ChannelStack, CostMap};

pub const DEFAULT_K: usize = 16;
pub const DEFAULT_WIDTHS: [usize; 3] = [32, 64, 128];

/// Occupancy one-hot planes ahead of the embedding planes.
const MAP_CHANNELS: usize = 4;

/// Output is clamped this far inside (0, 1) so downstream code never sees
/// an exact 0 or 1 from a saturated sigmoid.
const OUTPUT_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetSpec {
    pub k: usize,
    pub widths: [usize; 3],
}

impl NetSpec {
    pub fn new(k: usize) -> Result<Self, CostNetError> {
        Self::with_widths(k, DEFAULT_WIDTHS)
    }

    pub fn with_widths(k: usize, widths: [usize; 3]) -> Result<Self, CostNetError> {
        if k == 0 {
            return Err(CostNetError::InvalidSpec("k must be positive".into()));
        }
        if widths.contains(&0) {
            return Err(CostNetError::InvalidSpec("widths must be positive".into()));
        }
        Ok(Self { k, widths })
    }

    pub fn in_channels(&self) -> usize {
        MAP_CHANNELS + self.k
    }

    /// `(name, out_ch, in_ch, kernel)` for every conv in forward order.
    pub fn layers(&self) -> Vec<(&'static str, usize, usize, usize)> {
        let [a, b, c] = self.widths;
        vec![
            ("enc1.conv1", a, self.in_channels(), 3),
            ("enc1.conv2", a, a, 3),
            ("enc2.conv1", b, a, 3),
            ("enc2.conv2", b, b, 3),
            ("mid.conv1", c, b, 3),
            ("mid.conv2", c, c, 3),
            ("dec1.conv1", b, c + b, 3),
            ("dec1.conv2", b, b, 3),
            ("dec0.conv1", a, b + a, 3),
            ("dec0.conv2", a, a, 3),
            ("head", 1, a, 1),
        ]
    }

    /// Tensor names and shapes in file order: weight then bias per layer.
    pub fn tensor_shapes(&self) -> Vec<(String, Vec<usize>)> {
        self.layers()
            .into_iter()
            .flat_map(|(name, o, i, k)| {
                [
                    (format!("{name}.weight"), vec![o, i, k, k]),
                    (format!("{name}.bias"), vec![o]),
                ]
            })
            .collect()
    }

    pub fn descriptor(&self) -> Descriptor {
        Descriptor {
            k: self.k,
            widths: self.widths.to_vec(),
            tensor_order: self.tensor_shapes().into_iter().map(|(n, _)| n).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv {
    pub out_ch: usize,
    pub in_ch: usize,
    pub kernel: usize,
    /// Row-major `[out, in, kh, kw]`.
    pub weight: Vec<f32>,
    pub bias: Vec<f32>,
}

impl Conv {
    fn zeros(out_ch: usize, in_ch: usize, kernel: usize) -> Self {
        Self {
            out_ch,
            in_ch,
            kernel,
            weight: vec![0.0; out_ch * in_ch * kernel * kernel],
            bias: vec![0.0; out_ch],
        }
    }
}

/// An immutable set of weights validated against a [`NetSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    spec: NetSpec,
    convs: Vec<Conv>,
}

impl Model {
    pub fn zeros(spec: NetSpec) -> Self {
        let convs = spec.layers().into_iter().map(|(_, o, i, k)| Conv::zeros(o, i, k)).collect();
        Self { spec, convs }
    }

    /// He-uniform weights and small uniform biases.
    pub fn random(spec: NetSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Self::zeros(spec);
        for c in &mut m.convs {
            let bound = (6.0 / (c.in_ch * c.kernel * c.kernel) as f32).sqrt();
            c.weight.iter_mut().for_each(|w| *w = rng.random_range(-bound..bound));
            c.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.1..0.1));
        }
        m
    }

    pub fn spec(&self) -> NetSpec {
        self.spec
    }

    pub fn k(&self) -> usize {
        self.spec.k
    }

    pub fn convs(&self) -> &[Conv] {
        &self.convs
    }

    pub fn from_container(c: &Container) -> Result<Self, CostNetError> {
        let d = &c.descriptor;
        let widths: [usize; 3] = d
            .widths
            .as_slice()
            .try_into()
            .map_err(|_| CostNetError::Descriptor(format!("expected 3 widths, found {}", d.widths.len())))?;
        let spec = NetSpec::with_widths(d.k, widths)?;
        let shapes = spec.tensor_shapes();
        if let Some(extra) = c.tensors.iter().find(|t| !shapes.iter().any(|(n, _)| *n == t.name)) {
            return Err(CostNetError::Descriptor(format!("unexpected tensor {}", extra.name)));
        }
        let mut model = Self::zeros(spec);
        for ((name, shape), slot) in shapes
            .into_iter()
            .zip((0..model.convs.len()).flat_map(|i| [(i, true), (i, false)]))
        {
            let t = c.get(&name).ok_or_else(|| CostNetError::MissingTensor(name.clone()))?;
            if t.dims != shape {
                return Err(CostNetError::ShapeMismatch {
                    tensor: name,
                    expected: shape,
                    found: t.dims.clone(),
                });
            }
            let conv = &mut model.convs[slot.0];
            if slot.1 {
                conv.weight.copy_from_slice(&t.data);
            } else {
                conv.bias.copy_from_slice(&t.data);
            }
        }
        Ok(model)
    }

    pub fn to_container(&self) -> Container {
        let tensors = self
            .spec
            .tensor_shapes()
            .into_iter()
            .zip(self.convs.iter().flat_map(|c| [&c.weight, &c.bias]))
            .map(|((name, dims), data)| Tensor::new(name, dims, data.clone()))
            .collect();
        Container {
            descriptor: self.spec.descriptor(),
            tensors,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CostNetError> {
        self.to_container().write(path)
    }

    /// Raw sigmoid output (`H*W`, row-major) for a full `(4+k) x H x W` input.
    pub fn forward(&self, input: &ChannelStack) -> Result<Vec<f32>, CostNetError> {
        check_input(input.channels, self.spec.in_channels(), input.height, input.width)?;
        let x = Feat {
            c: input.channels,
            h: input.height,
            w: input.width,
            data: input.data.clone(),
        };
        let cv = &self.convs;
        let e1 = conv(&conv(&x, &cv[0], true), &cv[1], true);
        let e2 = conv(&conv(&maxpool2(&e1), &cv[2], true), &cv[3], true);
        let m = conv(&conv(&maxpool2(&e2), &cv[4], true), &cv[5], true);
        let d1 = conv(&conv(&concat(&upsample2(&m), &e2), &cv[6], true), &cv[7], true);
        let d0 = conv(&conv(&concat(&upsample2(&d1), &e1), &cv[8], true), &cv[9], true);
        let logits = conv(&d0, &cv[10], false);
        Ok(logits.data.into_iter().map(|z| 1.0 / (1.0 + (-z).exp())).collect())
    }

    /// Builds the `(4+k)` input from occupancy planes and an embedding.
    pub fn stack_input(&self, channels: &ChannelStack, embedding: &[f32]) -> Result<ChannelStack, CostNetError> {
        check_input(channels.channels, MAP_CHANNELS, channels.height, channels.width)?;
        if embedding.len() != self.spec.k {
            return Err(CostNetError::DimensionMismatch {
                what: "embedding length",
                expected: self.spec.k,
                found: embedding.len(),
            });
        }
        let plane = channels.height * channels.width;
        let mut data = Vec::with_capacity((MAP_CHANNELS + self.spec.k) * plane);
        data.extend_from_slice(&channels.data);
        for &e in embedding {
            data.extend(std::iter::repeat_n(e, plane));
        }
        Ok(ChannelStack {
            channels: MAP_CHANNELS + self.spec.k,
            height: channels.height,
            width: channels.width,
            data,
        })
    }
}

fn check_input(found: usize, expected: usize, h: usize, w: usize) -> Result<(), CostNetError> {
    if found != expected {
        return Err(CostNetError::DimensionMismatch {
            what: "input channels",
            expected,
            found,
        });
    }
    for (what, v) in [("input height", h), ("input width", w)] {
        if v == 0 || v % 4 != 0 {
            return Err(CostNetError::DimensionMismatch {
                what,
                expected: (v / 4 + 1) * 4,
                found: v,
            });
        }
    }
    Ok(())
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<Model, CostNetError> {
    Model::from_container(&Container::read(path)?)
}

/// Predicted cost map for an occupancy stack and instruction embedding.
/// Start and goal play no part.
pub fn predict(model: &Model, channels: &ChannelStack, embedding: &[f32]) -> Result<CostMap, CostNetError> {
    let input = model.stack_input(channels, embedding)?;
    let out = model.forward(&input)?;
    let values = out
        .into_iter()
        .map(|v| (v as f64).clamp(OUTPUT_MARGIN, 1.0 - OUTPUT_MARGIN))
        .collect();
    Ok(CostMap::new(channels.width, channels.height, values).expect("sigmoid output lies in (0, 1)"))
}

struct Feat {
    c: usize,
    h: usize,
    w: usize,
    data: Vec<f32>,
}

/// Zero-padded "same" convolution. Each output row accumulates
/// `weight * shifted input row`, which the compiler vectorises.
fn conv(x: &Feat, l: &Conv, relu: bool) -> Feat {
    let (h, w, k) = (x.h, x.w, l.kernel);
    let pad = k / 2;
    let (ph, pw) = (h + 2 * pad, w + 2 * pad);
    let mut padded = vec![0.0f32; x.c * ph * pw];
    for c in 0..x.c {
        for y in 0..h {
            let src = &x.data[(c * h + y) * w..][..w];
            padded[(c * ph + y + pad) * pw + pad..][..w].copy_from_slice(src);
        }
    }
    let plane = h * w;
    let mut out = vec![0.0f32; l.out_ch * plane];
    for (o, dst) in out.chunks_exact_mut(plane).enumerate() {
        dst.fill(l.bias[o]);
        for i in 0..l.in_ch {
            let src = &padded[i * ph * pw..][..ph * pw];
            let wk = &l.weight[(o * l.in_ch + i) * k * k..][..k * k];
            for ky in 0..k {
                for kx in 0..k {
                    let wv = wk[ky * k + kx];
                    if wv == 0.0 {
                        continue;
                    }
                    for y in 0..h {
                        let s = &src[(y + ky) * pw + kx..][..w];
                        let d = &mut dst[y * w..][..w];
                        for (d, s) in d.iter_mut().zip(s) {
                            *d += wv * s;
                        }
                    }
                }
            }
        }
        if relu {
            dst.iter_mut().for_each(|v| *v = v.max(0.0));
        }
    }
    Feat {
        c: l.out_ch,
        h,
        w,
        data: out,
    }
}

fn maxpool2(x: &Feat) -> Feat {
    let (h, w) = (x.h / 2, x.w / 2);
    let mut data = Vec::with_capacity(x.c * h * w);
    for c in 0..x.c {
        let p = &x.data[c * x.h * x.w..];
        for y in 0..h {
            for xx in 0..w {
                let at = |dy: usize, dx: usize| p[(2 * y + dy) * x.w + 2 * xx + dx];
                data.push(at(0, 0).max(at(0, 1)).max(at(1, 0)).max(at(1, 1)));
            }
        }
    }
    Feat { c: x.c, h, w, data }
}

fn upsample2(x: &Feat) -> Feat {
    let (h, w) = (x.h * 2, x.w * 2);
    let mut data = Vec::with_capacity(x.c * h * w);
    for c in 0..x.c {
        let p = &x.data[c * x.h * x.w..];
        for y in 0..h {
            data.extend((0..w).map(|xx| p[(y / 2) * x.w + xx / 2]));
        }
    }
    Feat { c: x.c, h, w, data }
}

fn concat(a: &Feat, b: &Feat) -> Feat {
    debug_assert_eq!((a.h, a.w), (b.h, b.w));
    let mut data = Vec::with_capacity(a.data.len() + b.data.len());
    data.extend_from_slice(&a.data);
    data.extend_from_slice(&b.data);
    Feat {
        c: a.c + b.c,
        h: a.h,
        w: a.w,
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// One-hot planes with a wall row, a step column and one low step.
    fn occupancy(n: usize) -> ChannelStack {
        let plane = n * n;
        let mut data = vec![0.0f32; 4 * plane];
        for y in 0..n {
            for x in 0..n {
                let class = if y == n / 3 {
                    1
                } else if x == n / 2 {
                    3
                } else if (x, y) == (1, 1) {
                    2
                } else {
                    0
                };
                data[class * plane + y * n + x] = 1.0;
            }
        }
        ChannelStack {
            channels: 4,
            height: n,
            width: n,
            data,
        }
    }

    #[test]
    fn tensor_enumeration() {
        let spec = NetSpec::new(16).unwrap();
        let shapes = spec.tensor_shapes();
        assert_eq!(shapes.len(), 22);
        assert_eq!(shapes[0], ("enc1.conv1.weight".into(), vec![32, 20, 3, 3]));
        assert_eq!(shapes[12], ("dec1.conv1.weight".into(), vec![64, 192, 3, 3]));
        assert_eq!(shapes[16], ("dec0.conv1.weight".into(), vec![32, 96, 3, 3]));
        assert_eq!(shapes[20], ("head.weight".into(), vec![1, 32, 1, 1]));
        assert_eq!(shapes[21], ("head.bias".into(), vec![1]));
    }

    #[test]
    fn zero_weights_give_one_half() {
        let m = Model::zeros(NetSpec::new(8).unwrap());
        let out = predict(&m, &occupancy(16), &[0.3; 8]).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn output_shape_and_range() {
        let m = Model::random(NetSpec::new(4).unwrap(), 1);
        for n in [4, 8, 20] {
            let out = predict(&m, &occupancy(n), &[1.0, -1.0, 0.5, 2.0]).unwrap();
            assert_eq!((out.width(), out.height()), (n, n));
            assert!(out.values().iter().all(|&v| v > 0.0 && v < 1.0));
        }
    }

    #[test]
    fn saturated_logits_stay_inside_unit_interval() {
        let mut m = Model::zeros(NetSpec::new(1).unwrap());
        m.convs[10].bias[0] = 500.0;
        let out = predict(&m, &occupancy(8), &[0.0]).unwrap();
        assert!(out.values().iter().all(|&v| v < 1.0));
        m.convs[10].bias[0] = -500.0;
        let out = predict(&m, &occupancy(8), &[0.0]).unwrap();
        assert!(out.values().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn input_validation() {
        let m = Model::zeros(NetSpec::new(2).unwrap());
        assert!(matches!(
            predict(&m, &occupancy(8), &[0.0; 3]),
            Err(CostNetError::DimensionMismatch { expected: 2, found: 3, .. })
        ));
        assert!(matches!(
            predict(&m, &occupancy(10), &[0.0; 2]),
            Err(CostNetError::DimensionMismatch { what: "input height", .. })
        ));
    }

    #[test]
    fn deterministic_bits() {
        let m = Model::random(NetSpec::new(3).unwrap(), 9);
        let a = predict(&m, &occupancy(16), &[0.1, 0.2, 0.3]).unwrap();
        let b = predict(&m, &occupancy(16), &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn container_round_trip() {
        let m = Model::random(NetSpec::new(8).unwrap(), 4);
        let back = Model::from_container(&Container::from_bytes(&m.to_container().to_bytes()).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn wrong_out_channels_names_tensor() {
        let mut c = Model::random(NetSpec::new(8).unwrap(), 4).to_container();
        let t = c.tensors.iter_mut().find(|t| t.name == "enc2.conv1.weight").unwrap();
        t.dims[0] = 63;
        t.data.truncate(63 * 32 * 9);
        match Model::from_container(&c) {
            Err(CostNetError::ShapeMismatch { tensor, expected, found }) => {
                assert_eq!(tensor, "enc2.conv1.weight");
                assert_eq!(expected[0], 64);
                assert_eq!(found[0], 63);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_tensor_reported() {
        let mut c = Model::zeros(NetSpec::new(2).unwrap()).to_container();
        c.tensors.retain(|t| t.name != "head.bias");
        c.descriptor.tensor_order.retain(|n| n != "head.bias");
        assert!(matches!(Model::from_container(&c), Err(CostNetError::MissingTensor(n)) if n == "head.bias"));
    }
}
