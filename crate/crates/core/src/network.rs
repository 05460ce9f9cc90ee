//! One- and two-hidden-layer ReLU networks: forward pass, quadratic loss,
//! exact gradients (σ′(0) = 0), the tangent-features matrix Φ, the exact
//! Hessian ΦΦᵀ/n at interpolating minima, and per-neuron atom normalization.
//!
//! Parameter layout is part of the public contract so Hessian indices stay
//! interpretable: vec(W1) column-major by neuron (neuron i occupies entries
//! i·d .. i·d+d), then b1, then w2, then b2. Two-layer nets extend the same
//! scheme layer by layer.

use crate::dataset::Dataset;
use crate::linalg::{top_singular_triple, DenseMatrix, LinalgError, DEFAULT_EIG_MAX_ITER, DEFAULT_EIG_TOL};
use std::io::{Read as _, Write as _};
use std::path::Path;
use thiserror::Error;

#[inline]
fn relu(t: f64) -> f64 {
    if t > 0.0 {
        t
    } else {
        0.0
    }
}

/// Shallow network parameters θ = (W1, b1, w2, b2); `w1[i]` is the i-th
/// column w_i of the d×k matrix W1.
#[derive(Debug, Clone, PartialEq)]
pub struct ShallowParams {
    pub d: usize,
    pub k: usize,
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl ShallowParams {
    pub fn zeros(d: usize, k: usize) -> Self {
        ShallowParams {
            d,
            k,
            w1: vec![vec![0.0; d]; k],
            b1: vec![0.0; k],
            w2: vec![0.0; k],
            b2: 0.0,
        }
    }

    pub fn param_count(&self) -> usize {
        (self.d + 2) * self.k + 1
    }

    /// Flattens to the documented layout.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for wi in &self.w1 {
            out.extend_from_slice(wi);
        }
        out.extend_from_slice(&self.b1);
        out.extend_from_slice(&self.w2);
        out.push(self.b2);
        out
    }

    pub fn from_flat(d: usize, k: usize, flat: &[f64]) -> Self {
        assert_eq!(flat.len(), (d + 2) * k + 1, "flat parameter count");
        let w1 = (0..k).map(|i| flat[i * d..(i + 1) * d].to_vec()).collect();
        let b1 = flat[k * d..k * d + k].to_vec();
        let w2 = flat[k * d + k..k * d + 2 * k].to_vec();
        ShallowParams {
            d,
            k,
            w1,
            b1,
            w2,
            b2: flat[(d + 2) * k],
        }
    }

    /// Flat index of neuron i's first W1 entry.
    pub fn w1_index(&self, i: usize) -> usize {
        i * self.d
    }

    /// Flat index of b1[i].
    pub fn b1_index(&self, i: usize) -> usize {
        self.k * self.d + i
    }

    /// Flat index of w2[i].
    pub fn w2_index(&self, i: usize) -> usize {
        self.k * self.d + self.k + i
    }
}

/// Two-hidden-layer parameters; `w2[m]` holds layer-2 neuron m's weights
/// over the k1 layer-1 outputs, `w3` the output weights over k2 units.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerParams {
    pub d: usize,
    pub k1: usize,
    pub k2: usize,
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: f64,
}

impl TwoLayerParams {
    pub fn param_count(&self) -> usize {
        self.k1 * self.d + self.k1 + self.k2 * self.k1 + self.k2 + self.k2 + 1
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for wi in &self.w1 {
            out.extend_from_slice(wi);
        }
        out.extend_from_slice(&self.b1);
        for wm in &self.w2 {
            out.extend_from_slice(wm);
        }
        out.extend_from_slice(&self.b2);
        out.extend_from_slice(&self.w3);
        out.push(self.b3);
        out
    }

    pub fn from_flat(d: usize, k1: usize, k2: usize, flat: &[f64]) -> Self {
        let expect = k1 * d + k1 + k2 * k1 + k2 + k2 + 1;
        assert_eq!(flat.len(), expect, "flat parameter count");
        let mut o = 0;
        let w1 = (0..k1)
            .map(|i| {
                let s = flat[o + i * d..o + (i + 1) * d].to_vec();
                s
            })
            .collect();
        o += k1 * d;
        let b1 = flat[o..o + k1].to_vec();
        o += k1;
        let w2 = (0..k2)
            .map(|m| flat[o + m * k1..o + (m + 1) * k1].to_vec())
            .collect();
        o += k2 * k1;
        let b2 = flat[o..o + k2].to_vec();
        o += k2;
        let w3 = flat[o..o + k2].to_vec();
        o += k2;
        TwoLayerParams {
            d,
            k1,
            k2,
            w1,
            b1,
            w2,
            b2,
            w3,
            b3: flat[o],
        }
    }
}

/// Normalized neuron (a, v̄, b̄): signed mass a = w⁽²⁾‖w⁽¹⁾‖, direction
/// v̄ = w⁽¹⁾/‖w⁽¹⁾‖, offset b̄ = −b⁽¹⁾/‖w⁽¹⁾‖. The Dirac atoms of the
/// network's second Radon derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronAtom {
    pub a: f64,
    pub v_bar: Vec<f64>,
    pub b_bar: f64,
}

/// Tangent features Φ (one column per sample, ((d+2)k+1 rows) plus the
/// activation table; column j is ∇_θ f(x_j). Last row is all ones (∂f/∂b2).
#[derive(Debug, Clone)]
pub struct TangentFeatures {
    pub d: usize,
    pub k: usize,
    pub phi: DenseMatrix,
    pub active: Vec<Vec<bool>>,
}

pub fn forward_shallow(p: &ShallowParams, x: &[f64]) -> f64 {
    assert_eq!(x.len(), p.d, "input dimension");
    let mut out = p.b2;
    for i in 0..p.k {
        let pre: f64 = p.w1[i].iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + p.b1[i];
        out += p.w2[i] * relu(pre);
    }
    out
}

/// Quadratic loss (1/2n)Σ(f(x_j) − y_j)².
pub fn loss(p: &ShallowParams, ds: &Dataset) -> f64 {
    let mut s = 0.0;
    for j in 0..ds.n {
        let r = forward_shallow(p, &ds.xs[j]) - ds.ys[j];
        s += r * r;
    }
    s / (2.0 * ds.n as f64)
}

/// Batch-averaged loss gradient in the flat layout; σ′(0) = 0.
pub fn grad_loss_batch(p: &ShallowParams, ds: &Dataset, batch: &[usize]) -> Vec<f64> {
    assert!(!batch.is_empty(), "empty batch");
    let mut g = vec![0.0; p.param_count()];
    let inv = 1.0 / batch.len() as f64;
    for &j in batch {
        let x = &ds.xs[j];
        let mut out = p.b2;
        let mut pres = vec![0.0; p.k];
        for i in 0..p.k {
            let pre: f64 = p.w1[i].iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + p.b1[i];
            pres[i] = pre;
            out += p.w2[i] * relu(pre);
        }
        let r = (out - ds.ys[j]) * inv;
        for i in 0..p.k {
            if pres[i] > 0.0 {
                let base = p.w1_index(i);
                let c = r * p.w2[i];
                for l in 0..p.d {
                    g[base + l] += c * x[l];
                }
                g[p.b1_index(i)] += c;
                g[p.w2_index(i)] += r * pres[i];
            }
        }
        g[(p.d + 2) * p.k] += r;
    }
    g
}

/// Full-dataset loss gradient.
pub fn grad_loss(p: &ShallowParams, ds: &Dataset) -> Vec<f64> {
    let all: Vec<usize> = (0..ds.n).collect();
    grad_loss_batch(p, ds, &all)
}

/// Per-sample gradient columns ∇_θ f(x_j) with the activation table.
pub fn tangent_features(p: &ShallowParams, ds: &Dataset) -> TangentFeatures {
    let rows = p.param_count();
    let mut phi = DenseMatrix::zeros(rows, ds.n);
    let mut active = vec![vec![false; p.k]; ds.n];
    for j in 0..ds.n {
        let x = &ds.xs[j];
        for i in 0..p.k {
            let pre: f64 = p.w1[i].iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + p.b1[i];
            if pre > 0.0 {
                active[j][i] = true;
                let base = p.w1_index(i);
                for l in 0..p.d {
                    phi.set(base + l, j, p.w2[i] * x[l]);
                }
                phi.set(p.b1_index(i), j, p.w2[i]);
                phi.set(p.w2_index(i), j, pre);
            }
        }
        phi.set(rows - 1, j, 1.0);
    }
    TangentFeatures {
        d: p.d,
        k: p.k,
        phi,
        active,
    }
}

/// Exact Hessian ΦΦᵀ/n of the loss at an interpolating minimum (the residual
/// term vanishes there). Away from a minimum this is the Gauss–Newton matrix.
pub fn hessian_at_minimum(tf: &TangentFeatures) -> DenseMatrix {
    let p = tf.phi.rows;
    let n = tf.phi.cols;
    let inv = 1.0 / n as f64;
    let mut h = DenseMatrix::zeros(p, p);
    for j in 0..n {
        for a in 0..p {
            let fa = tf.phi.get(a, j);
            if fa == 0.0 {
                continue;
            }
            for b in a..p {
                let val = h.get(a, b) + fa * tf.phi.get(b, j) * inv;
                h.set(a, b, val);
            }
        }
    }
    for a in 0..p {
        for b in (a + 1)..p {
            let val = h.get(a, b);
            h.set(b, a, val);
        }
    }
    h
}

/// λmax(ΦΦᵀ/n) together with its unit eigenvector, computed through the top
/// singular triple of Φ so only the smaller Gram matrix is decomposed.
pub fn tangent_top_pair(tf: &TangentFeatures) -> Result<(f64, Vec<f64>), LinalgError> {
    let (sigma, u, _v) = top_singular_triple(&tf.phi, DEFAULT_EIG_TOL, DEFAULT_EIG_MAX_ITER)?;
    Ok((sigma * sigma / tf.phi.cols as f64, u))
}

/// Sharpness λmax(∇²L) at an interpolating minimum; ≥ 1 for this model class
/// because the all-ones b2 row of Φ already contributes a unit direction.
pub fn sharpness(p: &ShallowParams, ds: &Dataset) -> Result<f64, LinalgError> {
    let tf = tangent_features(p, ds);
    Ok(tangent_top_pair(&tf)?.0)
}

pub fn forward_two_layer(p: &TwoLayerParams, x: &[f64]) -> f64 {
    assert_eq!(x.len(), p.d, "input dimension");
    let mut h1 = vec![0.0; p.k1];
    for i in 0..p.k1 {
        let pre: f64 = p.w1[i].iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + p.b1[i];
        h1[i] = relu(pre);
    }
    let mut out = p.b3;
    for m in 0..p.k2 {
        let pre: f64 = p.w2[m].iter().zip(&h1).map(|(w, v)| w * v).sum::<f64>() + p.b2[m];
        out += p.w3[m] * relu(pre);
    }
    out
}

pub fn loss_two_layer(p: &TwoLayerParams, ds: &Dataset) -> f64 {
    let mut s = 0.0;
    for j in 0..ds.n {
        let r = forward_two_layer(p, &ds.xs[j]) - ds.ys[j];
        s += r * r;
    }
    s / (2.0 * ds.n as f64)
}

/// Per-sample gradient of the network output (not the loss), flat layout.
fn two_layer_output_grad(p: &TwoLayerParams, x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; p.param_count()];
    let mut z1 = vec![0.0; p.k1];
    let mut h1 = vec![0.0; p.k1];
    for i in 0..p.k1 {
        z1[i] = p.w1[i].iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + p.b1[i];
        h1[i] = relu(z1[i]);
    }
    let mut z2 = vec![0.0; p.k2];
    for m in 0..p.k2 {
        z2[m] = p.w2[m].iter().zip(&h1).map(|(w, v)| w * v).sum::<f64>() + p.b2[m];
    }
    let o_b1 = p.k1 * p.d;
    let o_w2 = o_b1 + p.k1;
    let o_b2 = o_w2 + p.k2 * p.k1;
    let o_w3 = o_b2 + p.k2;
    let o_b3 = o_w3 + p.k2;

    let mut delta1 = vec![0.0; p.k1];
    for m in 0..p.k2 {
        g[o_w3 + m] = relu(z2[m]);
        if z2[m] > 0.0 {
            let d2 = p.w3[m];
            for i in 0..p.k1 {
                g[o_w2 + m * p.k1 + i] = d2 * h1[i];
                if z1[i] > 0.0 {
                    delta1[i] += d2 * p.w2[m][i];
                }
            }
            g[o_b2 + m] = d2;
        }
    }
    for i in 0..p.k1 {
        if delta1[i] != 0.0 {
            for l in 0..p.d {
                g[i * p.d + l] = delta1[i] * x[l];
            }
            g[o_b1 + i] = delta1[i];
        }
    }
    g[o_b3] = 1.0;
    g
}

/// Batch-averaged loss gradient for the two-layer net; σ′(0) = 0 in both
/// ReLU layers.
pub fn grad_loss_two_layer(p: &TwoLayerParams, ds: &Dataset, batch: &[usize]) -> Vec<f64> {
    assert!(!batch.is_empty(), "empty batch");
    let mut g = vec![0.0; p.param_count()];
    let inv = 1.0 / batch.len() as f64;
    for &j in batch {
        let gj = two_layer_output_grad(p, &ds.xs[j]);
        let r = (forward_two_layer(p, &ds.xs[j]) - ds.ys[j]) * inv;
        for (acc, gi) in g.iter_mut().zip(&gj) {
            *acc += r * gi;
        }
    }
    g
}

/// λmax(ΦΦᵀ/n) for the two-layer net at an interpolating minimum.
pub fn sharpness_two_layer(p: &TwoLayerParams, ds: &Dataset) -> Result<f64, LinalgError> {
    let rows = p.param_count();
    let mut phi = DenseMatrix::zeros(rows, ds.n);
    for j in 0..ds.n {
        let gj = two_layer_output_grad(p, &ds.xs[j]);
        for (r, val) in gj.into_iter().enumerate() {
            phi.set(r, j, val);
        }
    }
    let (sigma, _u, _v) =
        top_singular_triple(&phi, DEFAULT_EIG_TOL, DEFAULT_EIG_MAX_ITER)?;
    Ok(sigma * sigma / ds.n as f64)
}

/// Drops neurons with ‖w⁽¹⁾‖ ≤ 1e-12 (a zero-direction neuron contributes a
/// constant, not a Dirac atom) and normalizes the rest. No merging.
pub fn neuron_atoms(p: &ShallowParams) -> Vec<NeuronAtom> {
    const DROP_TOL: f64 = 1e-12;
    let mut out = Vec::with_capacity(p.k);
    for i in 0..p.k {
        let nw = p.w1[i].iter().map(|w| w * w).sum::<f64>().sqrt();
        if nw <= DROP_TOL {
            continue;
        }
        out.push(NeuronAtom {
            a: p.w2[i] * nw,
            v_bar: p.w1[i].iter().map(|w| w / nw).collect(),
            b_bar: -p.b1[i] / nw,
        });
    }
    out
}

/// Default tolerance for atom merging, applied to 1 − v̄_iᵀv̄_j and |b̄_i − b̄_j|.
pub const DEFAULT_MERGE_TOL: f64 = 1e-9;

/// Normalized atoms with coinciding (v̄, b̄) merged by summing signed masses.
/// Exactly cancelling groups disappear, so two identical neurons with
/// opposite mass leave no atom.
pub fn normalize_atoms(p: &ShallowParams, merge_tol: f64) -> Vec<NeuronAtom> {
    merge_atoms(&neuron_atoms(p), merge_tol)
}

/// Greedy first-fit merge of atoms whose directions and offsets coincide
/// within `tol`.
pub fn merge_atoms(atoms: &[NeuronAtom], tol: f64) -> Vec<NeuronAtom> {
    let mut groups: Vec<NeuronAtom> = Vec::new();
    for atom in atoms {
        let mut merged = false;
        for g in groups.iter_mut() {
            let cos: f64 = g.v_bar.iter().zip(&atom.v_bar).map(|(a, b)| a * b).sum();
            if 1.0 - cos <= tol && (g.b_bar - atom.b_bar).abs() <= tol {
                g.a += atom.a;
                merged = true;
                break;
            }
        }
        if !merged {
            groups.push(atom.clone());
        }
    }
    groups.retain(|g| g.a != 0.0);
    groups
}

/// Homogeneity rescaling: (w1_i, b1_i) → c_i⁻¹(w1_i, b1_i), w2_i → c_i·w2_i.
/// Leaves the network function and its atoms unchanged for c_i > 0.
pub fn rescale_neurons(p: &ShallowParams, c: &[f64]) -> ShallowParams {
    assert_eq!(c.len(), p.k, "one scale per neuron");
    assert!(c.iter().all(|&ci| ci > 0.0), "scales must be positive");
    let mut q = p.clone();
    for i in 0..p.k {
        for l in 0..p.d {
            q.w1[i][l] = p.w1[i][l] / c[i];
        }
        q.b1[i] = p.b1[i] / c[i];
        q.w2[i] = p.w2[i] * c[i];
    }
    q
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"RNCK";
const CHECKPOINT_VERSION: u32 = 1;
const KIND_SHALLOW: u32 = 1;
const KIND_TWO_LAYER: u32 = 2;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint header: {0}")]
    BadHeader(String),
    #[error("checkpoint payload: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
}

fn write_header(out: &mut Vec<u8>, kind: u32, dims: &[u32]) {
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&kind.to_le_bytes());
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for d in dims {
        out.extend_from_slice(&d.to_le_bytes());
    }
}

fn read_header(bytes: &[u8]) -> Result<(u32, Vec<u32>, usize), CheckpointError> {
    if bytes.len() < 16 {
        return Err(CheckpointError::Truncated {
            needed: 16,
            available: bytes.len(),
        });
    }
    if &bytes[0..4] != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadHeader(format!(
            "magic {:?}",
            &bytes[0..4]
        )));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::BadHeader(format!(
            "unsupported version {version}"
        )));
    }
    let kind = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let ndims = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let dims_end = 16 + 4 * ndims;
    if bytes.len() < dims_end {
        return Err(CheckpointError::Truncated {
            needed: dims_end,
            available: bytes.len(),
        });
    }
    let dims = (0..ndims)
        .map(|i| u32::from_le_bytes(bytes[16 + 4 * i..20 + 4 * i].try_into().unwrap()))
        .collect();
    Ok((kind, dims, dims_end))
}

fn write_floats(out: &mut Vec<u8>, xs: &[f64]) {
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

fn read_floats(bytes: &[u8], count: usize) -> Result<Vec<f64>, CheckpointError> {
    if bytes.len() < 8 * count {
        return Err(CheckpointError::Truncated {
            needed: 8 * count,
            available: bytes.len(),
        });
    }
    Ok((0..count)
        .map(|i| f64::from_le_bytes(bytes[8 * i..8 * i + 8].try_into().unwrap()))
        .collect())
}

/// Serializes shallow parameters: versioned header, dims (d, k), then the
/// flat layout as little-endian f64.
pub fn shallow_to_bytes(p: &ShallowParams) -> Vec<u8> {
    let mut out = Vec::new();
    write_header(&mut out, KIND_SHALLOW, &[p.d as u32, p.k as u32]);
    write_floats(&mut out, &p.to_flat());
    out
}

pub fn shallow_from_bytes(bytes: &[u8]) -> Result<ShallowParams, CheckpointError> {
    let (kind, dims, offset) = read_header(bytes)?;
    if kind != KIND_SHALLOW || dims.len() != 2 {
        return Err(CheckpointError::BadHeader(format!(
            "kind {kind}, dims {dims:?}: not a shallow checkpoint"
        )));
    }
    let (d, k) = (dims[0] as usize, dims[1] as usize);
    let flat = read_floats(&bytes[offset..], (d + 2) * k + 1)?;
    Ok(ShallowParams::from_flat(d, k, &flat))
}

pub fn two_layer_to_bytes(p: &TwoLayerParams) -> Vec<u8> {
    let mut out = Vec::new();
    write_header(
        &mut out,
        KIND_TWO_LAYER,
        &[p.d as u32, p.k1 as u32, p.k2 as u32],
    );
    write_floats(&mut out, &p.to_flat());
    out
}

pub fn two_layer_from_bytes(bytes: &[u8]) -> Result<TwoLayerParams, CheckpointError> {
    let (kind, dims, offset) = read_header(bytes)?;
    if kind != KIND_TWO_LAYER || dims.len() != 3 {
        return Err(CheckpointError::BadHeader(format!(
            "kind {kind}, dims {dims:?}: not a two-layer checkpoint"
        )));
    }
    let (d, k1, k2) = (dims[0] as usize, dims[1] as usize, dims[2] as usize);
    let count = k1 * d + k1 + k2 * k1 + k2 + k2 + 1;
    let flat = read_floats(&bytes[offset..], count)?;
    Ok(TwoLayerParams::from_flat(d, k1, k2, &flat))
}

pub fn save_shallow(p: &ShallowParams, path: &Path) -> Result<(), CheckpointError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&shallow_to_bytes(p))?;
    Ok(())
}

pub fn load_shallow(path: &Path) -> Result<ShallowParams, CheckpointError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    shallow_from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;

    fn single_neuron(w: f64, b: f64, out_w: f64) -> ShallowParams {
        ShallowParams {
            d: 1,
            k: 1,
            w1: vec![vec![w]],
            b1: vec![b],
            w2: vec![out_w],
            b2: 0.0,
        }
    }

    #[test]
    fn forward_identity_neuron() {
        let p = single_neuron(1.0, 0.0, 1.0);
        assert_eq!(forward_shallow(&p, &[2.0]), 2.0);
        assert_eq!(forward_shallow(&p, &[-1.0]), 0.0);
    }

    #[test]
    fn loss_zero_net_constant_targets() {
        let p = ShallowParams::zeros(2, 3);
        let ds = Dataset::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![2.0, 2.0]);
        assert_eq!(loss(&p, &ds), 2.0);
    }

    #[test]
    fn loss_zero_at_interpolation() {
        let p = single_neuron(1.0, 0.5, 2.0);
        let xs = vec![vec![0.3], vec![-0.2], vec![1.7]];
        let ys: Vec<f64> = xs.iter().map(|x| forward_shallow(&p, x)).collect();
        let ds = Dataset::new(xs, ys);
        assert_eq!(loss(&p, &ds), 0.0);
        assert!(grad_loss(&p, &ds).iter().all(|&g| g == 0.0));
    }

    #[test]
    fn gradient_single_sample_closed_form() {
        // One active neuron: ∇f = (w2·x, w2, pre, 1); ∇L = residual·∇f.
        let p = single_neuron(1.5, 0.25, -2.0);
        let x = 0.75;
        let pre = 1.5 * x + 0.25;
        let f = -2.0 * pre;
        let y = 1.0;
        let r = f - y;
        let ds = Dataset::new(vec![vec![x]], vec![y]);
        let g = grad_loss(&p, &ds);
        let expect = [r * -2.0 * x, r * -2.0, r * pre, r];
        for (got, want) in g.iter().zip(expect) {
            assert!((got - want).abs() < 1e-14, "grad {g:?} vs {expect:?}");
        }
    }

    #[test]
    fn tangent_last_row_ones_and_inactive_rows_zero() {
        let p = ShallowParams {
            d: 2,
            k: 2,
            w1: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            b1: vec![0.0, -10.0],
            w2: vec![1.0, 1.0],
            b2: 0.0,
        };
        let ds = Dataset::new(vec![vec![1.0, 1.0], vec![2.0, 0.5]], vec![0.0, 0.0]);
        let tf = tangent_features(&p, &ds);
        for j in 0..2 {
            assert_eq!(tf.phi.get(tf.phi.rows - 1, j), 1.0);
            // Neuron 1 never activates (b1 = -10): all its rows stay zero.
            assert_eq!(tf.phi.get(p.w1_index(1), j), 0.0);
            assert_eq!(tf.phi.get(p.b1_index(1), j), 0.0);
            assert_eq!(tf.phi.get(p.w2_index(1), j), 0.0);
            assert!(!tf.active[j][1]);
        }
    }

    #[test]
    fn hessian_single_column_outer_product() {
        let p = single_neuron(1.0, 0.0, 1.0);
        let ds = Dataset::new(vec![vec![2.0]], vec![2.0]);
        let tf = tangent_features(&p, &ds);
        let h = hessian_at_minimum(&tf);
        let c: Vec<f64> = (0..tf.phi.rows).map(|r| tf.phi.get(r, 0)).collect();
        for a in 0..h.rows {
            for b in 0..h.cols {
                assert!((h.get(a, b) - c[a] * c[b]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sharpness_bias_only_net_is_one() {
        let p = ShallowParams::zeros(1, 0);
        let p = ShallowParams { b2: 5.0, ..p };
        let ds = Dataset::new(vec![vec![0.1], vec![0.9]], vec![5.0, 5.0]);
        let s = sharpness(&p, &ds).unwrap();
        assert!((s - 1.0).abs() < 1e-12, "sharpness {s}");
    }

    #[test]
    fn atoms_example() {
        let p = ShallowParams {
            d: 2,
            k: 1,
            w1: vec![vec![3.0, 4.0]],
            b1: vec![-5.0],
            w2: vec![2.0],
            b2: 0.0,
        };
        let atoms = neuron_atoms(&p);
        assert_eq!(atoms.len(), 1);
        assert!((atoms[0].a - 10.0).abs() < 1e-15);
        assert!((atoms[0].v_bar[0] - 0.6).abs() < 1e-15);
        assert!((atoms[0].v_bar[1] - 0.8).abs() < 1e-15);
        assert!((atoms[0].b_bar - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_direction_neuron_dropped() {
        let p = ShallowParams {
            d: 2,
            k: 1,
            w1: vec![vec![0.0, 0.0]],
            b1: vec![1.0],
            w2: vec![3.0],
            b2: 0.0,
        };
        assert!(neuron_atoms(&p).is_empty());
    }

    #[test]
    fn opposite_identical_neurons_cancel_under_merge() {
        let p = ShallowParams {
            d: 2,
            k: 2,
            w1: vec![vec![1.0, 0.0], vec![1.0, 0.0]],
            b1: vec![-0.5, -0.5],
            w2: vec![1.0, -1.0],
            b2: 0.0,
        };
        let merged = normalize_atoms(&p, DEFAULT_MERGE_TOL);
        assert!(merged.is_empty(), "merged {merged:?}");
        let unmerged = neuron_atoms(&p);
        assert_eq!(unmerged.len(), 2);
        let s_unmerged: f64 = unmerged.iter().map(|a| a.a.abs()).sum();
        assert!(s_unmerged > 0.0);
    }

    #[test]
    fn two_layer_pyramid_like_forward() {
        // -σ(x) - σ(-x) + 1 through the second layer realizes σ(1 - |x|).
        let p = TwoLayerParams {
            d: 1,
            k1: 2,
            k2: 1,
            w1: vec![vec![1.0], vec![-1.0]],
            b1: vec![0.0, 0.0],
            w2: vec![vec![-1.0, -1.0]],
            b2: vec![1.0],
            w3: vec![1.0],
            b3: 0.0,
        };
        assert_eq!(forward_two_layer(&p, &[0.0]), 1.0);
        assert_eq!(forward_two_layer(&p, &[1.0]), 0.0);
        assert_eq!(forward_two_layer(&p, &[0.5]), 0.5);
        assert_eq!(forward_two_layer(&p, &[-2.0]), 0.0);
    }

    #[test]
    fn two_layer_zero_output_layer_constant() {
        let p = TwoLayerParams {
            d: 2,
            k1: 3,
            k2: 2,
            w1: vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            b1: vec![0.1, 0.2, 0.3],
            w2: vec![vec![0.0; 3], vec![0.0; 3]],
            b2: vec![-1.0, -2.0],
            w3: vec![1.0, 1.0],
            b3: 0.7,
        };
        let ds = Dataset::new(vec![vec![1.0, 2.0], vec![-1.0, 0.5]], vec![0.7, 0.7]);
        let g = grad_loss_two_layer(&p, &ds, &[0, 1]);
        // Layer-2 preactivations are negative, so nothing flows below b3;
        // residuals are zero anyway.
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rescaling_preserves_forward_and_atoms() {
        let p = ShallowParams {
            d: 2,
            k: 2,
            w1: vec![vec![0.5, -1.0], vec![2.0, 0.3]],
            b1: vec![0.2, -0.7],
            w2: vec![1.5, -0.4],
            b2: 0.1,
        };
        let q = rescale_neurons(&p, &[3.0, 0.25]);
        for x in [[0.0, 0.0], [1.0, -2.0], [-0.3, 0.8]] {
            let a = forward_shallow(&p, &x);
            let b = forward_shallow(&q, &x);
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
        }
        let ap = neuron_atoms(&p);
        let aq = neuron_atoms(&q);
        for (u, v) in ap.iter().zip(&aq) {
            assert!((u.a - v.a).abs() < 1e-12);
            assert!((u.b_bar - v.b_bar).abs() < 1e-12);
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let p = ShallowParams {
            d: 3,
            k: 2,
            w1: vec![vec![0.1, -0.2, 0.3], vec![1.0, 2.0, -3.0]],
            b1: vec![0.5, -0.5],
            w2: vec![2.0, -1.0],
            b2: 0.25,
        };
        let bytes = shallow_to_bytes(&p);
        assert_eq!(shallow_from_bytes(&bytes).unwrap(), p);
        let t = TwoLayerParams {
            d: 2,
            k1: 2,
            k2: 1,
            w1: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            b1: vec![0.0, 0.0],
            w2: vec![vec![-1.0, -1.0]],
            b2: vec![1.0],
            w3: vec![1.0],
            b3: 0.0,
        };
        let bytes = two_layer_to_bytes(&t);
        assert_eq!(two_layer_from_bytes(&bytes).unwrap(), t);
    }

    #[test]
    fn checkpoint_bad_magic_rejected() {
        let p = ShallowParams::zeros(1, 1);
        let mut bytes = shallow_to_bytes(&p);
        bytes[0] = b'X';
        assert!(matches!(
            shallow_from_bytes(&bytes),
            Err(CheckpointError::BadHeader(_))
        ));
    }
}
