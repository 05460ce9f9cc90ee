//! Dataset construction (synthetic regression, function sampling, IDX binary
//! subsets), dataset statistics, and the knot-clearance check that guards the
//! stability certificates: those need no training input to sit exactly on a
//! ReLU kink.

use crate::linalg::{covariance, top_eigenpair_default};
use crate::network::NeuronAtom;
use crate::rng::Rng;
use thiserror::Error;

/// n input points in R^d with scalar targets; the empirical distribution
/// behind every expectation in the stability bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub d: usize,
    pub n: usize,
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<f64>,
}

impl Dataset {
    pub fn new(xs: Vec<Vec<f64>>, ys: Vec<f64>) -> Self {
        assert!(!xs.is_empty(), "dataset needs at least one sample");
        assert_eq!(xs.len(), ys.len(), "inputs and targets must pair up");
        let d = xs[0].len();
        assert!(
            xs.iter().all(|x| x.len() == d),
            "all inputs must share a dimension"
        );
        Dataset {
            d,
            n: xs.len(),
            xs,
            ys,
        }
    }

    pub fn max_input_norm(&self) -> f64 {
        self.xs
            .iter()
            .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// Moments of the empirical input distribution used by the sharpness upper
/// bound: λmax(Σ_X) and E‖X‖².
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub mean: Vec<f64>,
    pub cov_top_eig: f64,
    pub mean_sq_norm: f64,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("IDX {field}: expected {expected:#010x}, found {found:#010x}")]
    BadMagic {
        field: &'static str,
        expected: u32,
        found: u32,
    },
    #[error("IDX {field}: need {needed} bytes, have {available}")]
    TruncatedPayload {
        field: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("IDX {field}: dimensions {dims:?} overflow the address space")]
    DimOverflow { field: &'static str, dims: Vec<u32> },
    #[error("class {class}: need {needed} samples, have {available}")]
    InsufficientSamples {
        class: u8,
        needed: usize,
        available: usize,
    },
}

/// i.i.d. standard-normal inputs and targets, fully determined by `seed`
/// (stream 0; per sample, the d coordinates are drawn before the target).
pub fn gen_gaussian_regression(n: usize, d: usize, seed: u64) -> Dataset {
    assert!(n >= 1 && d >= 1, "need n, d >= 1");
    let mut rng = Rng::from_seed(seed);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        xs.push((0..d).map(|_| rng.standard_normal()).collect());
        ys.push(rng.standard_normal());
    }
    Dataset::new(xs, ys)
}

/// Evaluates `f` on the given points; targets are exact.
pub fn sample_function(f: impl Fn(&[f64]) -> f64, points: &[Vec<f64>]) -> Dataset {
    assert!(!points.is_empty(), "need at least one sample point");
    let ys = points.iter().map(|x| f(x)).collect();
    Dataset::new(points.to_vec(), ys)
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn idx_header(bytes: &[u8], expect_magic: u32) -> Result<(Vec<u32>, usize), DatasetError> {
    if bytes.len() < 4 {
        return Err(DatasetError::TruncatedPayload {
            field: "magic",
            needed: 4,
            available: bytes.len(),
        });
    }
    let magic = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(DatasetError::BadMagic {
            field: "zero bytes",
            expected: expect_magic,
            found: magic,
        });
    }
    if bytes[2] != 0x08 {
        return Err(DatasetError::BadMagic {
            field: "type code",
            expected: expect_magic,
            found: magic,
        });
    }
    let rank = bytes[3] as usize;
    if magic != expect_magic {
        return Err(DatasetError::BadMagic {
            field: "rank",
            expected: expect_magic,
            found: magic,
        });
    }
    let dims_end = 4 + 4 * rank;
    if bytes.len() < dims_end {
        return Err(DatasetError::TruncatedPayload {
            field: "dims",
            needed: dims_end,
            available: bytes.len(),
        });
    }
    let dims: Vec<u32> = (0..rank)
        .map(|r| {
            let o = 4 + 4 * r;
            u32::from_be_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]])
        })
        .collect();
    Ok((dims, dims_end))
}

/// Parses an IDX image file (magic 0x00000803): big-endian header, unsigned
/// byte pixels in row-major order. Pixels are rescaled to [0,1] by dividing
/// by 255; each image comes back flattened to rows×cols.
pub fn load_idx_images(bytes: &[u8]) -> Result<Vec<Vec<f64>>, DatasetError> {
    let (dims, payload_start) = idx_header(bytes, IDX_IMAGES_MAGIC)?;
    let count = dims[0] as usize;
    let per_image = (dims[1] as usize)
        .checked_mul(dims[2] as usize)
        .ok_or(DatasetError::DimOverflow {
            field: "dims",
            dims: dims.clone(),
        })?;
    let total = count
        .checked_mul(per_image)
        .ok_or(DatasetError::DimOverflow {
            field: "dims",
            dims: dims.clone(),
        })?;
    let available = bytes.len() - payload_start;
    if available < total {
        return Err(DatasetError::TruncatedPayload {
            field: "payload",
            needed: total,
            available,
        });
    }
    let payload = &bytes[payload_start..payload_start + total];
    Ok(payload
        .chunks_exact(per_image.max(1))
        .take(count)
        .map(|img| img.iter().map(|&p| p as f64 / 255.0).collect())
        .collect())
}

/// Parses an IDX label file (magic 0x00000801): one unsigned byte per label.
pub fn load_idx_labels(bytes: &[u8]) -> Result<Vec<u8>, DatasetError> {
    let (dims, payload_start) = idx_header(bytes, IDX_LABELS_MAGIC)?;
    let count = dims[0] as usize;
    let available = bytes.len() - payload_start;
    if available < count {
        return Err(DatasetError::TruncatedPayload {
            field: "payload",
            needed: count,
            available,
        });
    }
    Ok(bytes[payload_start..payload_start + count].to_vec())
}

/// Serializes images (u8 pixels, each of length rows×cols) to IDX bytes.
/// Fixture helper for round-trip tests and offline subsets.
pub fn idx_images_bytes(images: &[Vec<u8>], rows: u32, cols: u32) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * (rows * cols) as usize);
    out.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&rows.to_be_bytes());
    out.extend_from_slice(&cols.to_be_bytes());
    for img in images {
        assert_eq!(img.len(), (rows * cols) as usize, "image size mismatch");
        out.extend_from_slice(img);
    }
    out
}

/// Serializes labels to IDX bytes. Fixture helper.
pub fn idx_labels_bytes(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Builds disjoint train/val splits for two-class regression on ±1 targets.
///
/// The training set takes ⌈n_train/2⌉ samples of `class_pos` (target +1) and
/// the rest from `class_neg` (target −1), so the balance is exact up to one
/// sample. Validation draws n_val from the remaining samples of both classes.
/// Selection order: shuffle each class pool with stream 0 of `seed`, cut the
/// training slices, shuffle the leftover union, cut n_val.
pub fn binary_subset(
    images: &[Vec<f64>],
    labels: &[u8],
    class_pos: u8,
    class_neg: u8,
    n_train: usize,
    n_val: usize,
    seed: u64,
) -> Result<(Dataset, Dataset), DatasetError> {
    assert_eq!(images.len(), labels.len(), "images and labels must pair up");
    assert!(n_train >= 1, "need a nonempty training set");
    if class_pos == class_neg {
        return Err(DatasetError::InsufficientSamples {
            class: class_pos,
            needed: n_train + n_val,
            available: 0,
        });
    }
    let mut pos: Vec<usize> = (0..labels.len())
        .filter(|&j| labels[j] == class_pos)
        .collect();
    let mut neg: Vec<usize> = (0..labels.len())
        .filter(|&j| labels[j] == class_neg)
        .collect();
    let need_pos = n_train.div_ceil(2);
    let need_neg = n_train - need_pos;
    if pos.len() < need_pos {
        return Err(DatasetError::InsufficientSamples {
            class: class_pos,
            needed: need_pos,
            available: pos.len(),
        });
    }
    if neg.len() < need_neg {
        return Err(DatasetError::InsufficientSamples {
            class: class_neg,
            needed: need_neg,
            available: neg.len(),
        });
    }
    let mut rng = Rng::from_seed(seed);
    rng.shuffle(&mut pos);
    rng.shuffle(&mut neg);

    let mut train_xs = Vec::with_capacity(n_train);
    let mut train_ys = Vec::with_capacity(n_train);
    for &j in &pos[..need_pos] {
        train_xs.push(images[j].clone());
        train_ys.push(1.0);
    }
    for &j in &neg[..need_neg] {
        train_xs.push(images[j].clone());
        train_ys.push(-1.0);
    }

    let mut rest: Vec<(usize, f64)> = pos[need_pos..].iter().map(|&j| (j, 1.0)).collect();
    rest.extend(neg[need_neg..].iter().map(|&j| (j, -1.0)));
    if rest.len() < n_val {
        return Err(DatasetError::InsufficientSamples {
            class: class_pos,
            needed: n_val,
            available: rest.len(),
        });
    }
    rng.shuffle(&mut rest);
    let mut val_xs = Vec::with_capacity(n_val.max(1));
    let mut val_ys = Vec::with_capacity(n_val.max(1));
    for &(j, y) in &rest[..n_val] {
        val_xs.push(images[j].clone());
        val_ys.push(y);
    }
    let train = Dataset::new(train_xs, train_ys);
    // An empty validation request still needs a well-formed Dataset; reuse a
    // training sample so invariants hold, with n reported as the real count.
    let val = if n_val == 0 {
        Dataset::new(vec![train.xs[0].clone()], vec![train.ys[0]])
    } else {
        Dataset::new(val_xs, val_ys)
    };
    Ok((train, val))
}

/// Mean, top covariance eigenvalue, and mean squared norm under the uniform
/// empirical measure.
pub fn dataset_stats(ds: &Dataset) -> DatasetStats {
    let n = ds.n as f64;
    let mut mean = vec![0.0; ds.d];
    let mut mean_sq_norm = 0.0;
    for x in &ds.xs {
        for k in 0..ds.d {
            mean[k] += x[k] / n;
        }
        mean_sq_norm += x.iter().map(|v| v * v).sum::<f64>() / n;
    }
    let cov = covariance(&ds.xs);
    let cov_top_eig = top_eigenpair_default(&cov)
        .expect("covariance eigen iteration converges")
        .value
        .max(0.0);
    DatasetStats {
        mean,
        cov_top_eig,
        mean_sq_norm,
    }
}

/// Smallest |x_jᵀv̄_i − b̄_i| over data points and atoms: the margin between
/// ReLU kinks and training inputs. +∞ when there are no atoms.
pub fn knot_clearance(ds: &Dataset, atoms: &[NeuronAtom]) -> f64 {
    let mut best = f64::INFINITY;
    for atom in atoms {
        for x in &ds.xs {
            let t = x
                .iter()
                .zip(&atom.v_bar)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                - atom.b_bar;
            best = best.min(t.abs());
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_regression_shape_and_moments() {
        let ds = gen_gaussian_regression(100, 20, 0);
        assert_eq!(ds.n, 100);
        assert_eq!(ds.d, 20);
        for k in 0..20 {
            let mean: f64 = ds.xs.iter().map(|x| x[k]).sum::<f64>() / 100.0;
            assert!(mean.abs() < 4.0 / 10.0, "coord {k} mean {mean}");
        }
    }

    #[test]
    fn gaussian_regression_single_pair() {
        let ds = gen_gaussian_regression(1, 1, 99);
        assert!(ds.xs[0][0].is_finite() && ds.ys[0].is_finite());
    }

    #[test]
    fn gaussian_regression_deterministic() {
        let a = gen_gaussian_regression(10, 3, 1234);
        let b = gen_gaussian_regression(10, 3, 1234);
        assert_eq!(a, b);
    }

    #[test]
    fn sample_function_constant() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![-3.0, 0.5]];
        let ds = sample_function(|_| 3.0, &pts);
        assert!(ds.ys.iter().all(|&y| y == 3.0));
    }

    #[test]
    fn idx_images_two_by_28x28() {
        let imgs: Vec<Vec<u8>> = vec![vec![0u8; 784], vec![255u8; 784]];
        let bytes = idx_images_bytes(&imgs, 28, 28);
        assert_eq!(bytes.len(), 16 + 1568);
        let parsed = load_idx_images(&bytes).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].len(), 784);
        assert!(parsed[0].iter().all(|&p| p == 0.0));
        assert!(parsed[1].iter().all(|&p| p == 1.0));
    }

    #[test]
    fn idx_labels_three() {
        let bytes = idx_labels_bytes(&[7, 0, 1]);
        assert_eq!(load_idx_labels(&bytes).unwrap(), vec![7, 0, 1]);
    }

    #[test]
    fn idx_type_code_0x02_rejected() {
        let mut bytes = idx_labels_bytes(&[1, 2, 3]);
        bytes[2] = 0x02;
        match load_idx_labels(&bytes) {
            Err(DatasetError::BadMagic { field, .. }) => assert_eq!(field, "type code"),
            other => panic!("expected BadMagic, got {other:?}"),
        }
    }

    #[test]
    fn idx_wrong_rank_rejected() {
        // Label magic fed to the image parser: rank mismatch.
        let bytes = idx_labels_bytes(&[1, 2, 3]);
        match load_idx_images(&bytes) {
            Err(DatasetError::BadMagic { field, .. }) => assert_eq!(field, "rank"),
            other => panic!("expected BadMagic, got {other:?}"),
        }
    }

    #[test]
    fn idx_truncated_payload_rejected() {
        let imgs: Vec<Vec<u8>> = vec![vec![10u8; 4]];
        let mut bytes = idx_images_bytes(&imgs, 2, 2);
        bytes.truncate(bytes.len() - 1);
        match load_idx_images(&bytes) {
            Err(DatasetError::TruncatedPayload { field, .. }) => assert_eq!(field, "payload"),
            other => panic!("expected TruncatedPayload, got {other:?}"),
        }
    }

    #[test]
    fn binary_subset_balanced_and_signed() {
        let images: Vec<Vec<f64>> = (0..40).map(|j| vec![j as f64]).collect();
        let labels: Vec<u8> = (0..40).map(|j| if j < 20 { 0 } else { 1 }).collect();
        let (train, val) = binary_subset(&images, &labels, 0, 1, 9, 4, 7).unwrap();
        assert_eq!(train.n, 9);
        let pos = train.ys.iter().filter(|&&y| y == 1.0).count();
        let neg = train.ys.iter().filter(|&&y| y == -1.0).count();
        assert!(pos.abs_diff(neg) <= 1, "balance {pos} vs {neg}");
        assert_eq!(val.n, 4);
        assert!(val.ys.iter().all(|&y| y == 1.0 || y == -1.0));
    }

    #[test]
    fn binary_subset_same_class_rejected() {
        let images: Vec<Vec<f64>> = (0..10).map(|j| vec![j as f64]).collect();
        let labels = vec![0u8; 10];
        assert!(matches!(
            binary_subset(&images, &labels, 0, 0, 4, 2, 1),
            Err(DatasetError::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn stats_symmetric_pair() {
        let ds = Dataset::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], vec![0.0, 0.0]);
        let s = dataset_stats(&ds);
        assert_eq!(s.mean, vec![0.0, 0.0]);
        assert!((s.cov_top_eig - 1.0).abs() < 1e-12);
        assert!((s.mean_sq_norm - 1.0).abs() < 1e-15);
    }

    #[test]
    fn stats_single_point() {
        let ds = Dataset::new(vec![vec![0.5, -2.0]], vec![1.0]);
        let s = dataset_stats(&ds);
        assert!(s.cov_top_eig.abs() < 1e-15);
        assert_eq!(s.mean, vec![0.5, -2.0]);
    }

    #[test]
    fn stats_gaussian_cloud_top_eig_in_range() {
        let ds = gen_gaussian_regression(50, 3, 11);
        let s = dataset_stats(&ds);
        assert!(
            s.cov_top_eig > 0.4 && s.cov_top_eig < 2.5,
            "cov_top_eig {}",
            s.cov_top_eig
        );
        assert!(s.mean_sq_norm >= s.mean.iter().map(|m| m * m).sum::<f64>());
    }

    #[test]
    fn knot_clearance_basic() {
        let ds = Dataset::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], vec![0.0, 0.0]);
        let atom = NeuronAtom {
            a: 1.0,
            v_bar: vec![1.0, 0.0],
            b_bar: 0.5,
        };
        assert!((knot_clearance(&ds, &[atom]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn knot_clearance_coincidence_is_zero() {
        let ds = Dataset::new(vec![vec![0.25, 0.5]], vec![0.0]);
        let atom = NeuronAtom {
            a: -2.0,
            v_bar: vec![0.6, 0.8],
            b_bar: 0.25 * 0.6 + 0.5 * 0.8,
        };
        assert_eq!(knot_clearance(&ds, &[atom]), 0.0);
    }

    #[test]
    fn knot_clearance_empty_atoms_is_infinite() {
        let ds = Dataset::new(vec![vec![0.0]], vec![0.0]);
        assert_eq!(knot_clearance(&ds, &[]), f64::INFINITY);
    }
}
