//! Synthetic encoder worlds.
//!
//! Inputs are points of a latent mixture: each input has a cluster label and
//! a standard normal offset. The victim encoder maps an input to
//! `center[label] + scale * offset`, where `scale` is `gap_rho` on the
//! victim's training splits (P1, P2) and 1 on held-out data (N). A stolen
//! encoder sees the victim's outputs through a fixed linear map plus
//! Gaussian noise. An independent encoder shares only the inputs' cluster
//! labels: it has its own centers, its own offsets and no gap.
//!
//! Each (role, split) draws from its own named random stream, so a world is
//! bit-identical for a given seed regardless of generation order.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::orthonormalize_columns;
use crate::repio::{write_representations, FileFormat, RepresentationSet, SplitLabel};
use crate::rng::{substream, StreamRng};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StealMap {
    /// Rotation drawn by orthonormalizing a Gaussian matrix.
    #[default]
    Orthogonal,
    /// Gaussian matrix with entries of variance `1 / dim`.
    RandomLinear,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticWorldConfig {
    pub dim: usize,
    pub n_clusters: usize,
    pub n_p1: usize,
    pub n_p2: usize,
    pub n_n: usize,
    /// Within-cluster spread of training points relative to held-out ones.
    pub gap_rho: f64,
    /// Standard deviation of the noise added by the stolen map.
    pub steal_noise: f64,
    pub steal_map: StealMap,
    pub seed: u64,
}

impl Default for SyntheticWorldConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            n_clusters: 8,
            n_p1: 2000,
            n_p2: 2000,
            n_n: 2000,
            gap_rho: 0.9,
            steal_noise: 0.1,
            steal_map: StealMap::Orthogonal,
            seed: 0,
        }
    }
}

impl SyntheticWorldConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::BadConfig(m));
        if self.dim == 0 {
            return bad("dim must be at least 1".into());
        }
        if self.n_clusters == 0 {
            return bad("n_clusters must be at least 1".into());
        }
        for (name, n) in [("n_p1", self.n_p1), ("n_p2", self.n_p2), ("n_n", self.n_n)] {
            if n < 2 {
                return bad(format!("{name} must be at least 2, got {n}"));
            }
        }
        if !(self.gap_rho > 0.0 && self.gap_rho <= 1.0) {
            return bad(format!("gap_rho must lie in (0, 1], got {}", self.gap_rho));
        }
        if !(self.steal_noise >= 0.0 && self.steal_noise.is_finite()) {
            return bad(format!("steal_noise must be finite and non-negative, got {}", self.steal_noise));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderRole {
    Victim,
    Stolen,
    Independent,
}

impl EncoderRole {
    pub const ALL: [EncoderRole; 3] = [EncoderRole::Victim, EncoderRole::Stolen, EncoderRole::Independent];

    pub fn name(self) -> &'static str {
        match self {
            EncoderRole::Victim => "victim",
            EncoderRole::Stolen => "stolen",
            EncoderRole::Independent => "independent",
        }
    }
}

/// The three splits one encoder produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSets<T: Scalar> {
    pub p1: RepresentationSet<T>,
    pub p2: RepresentationSet<T>,
    pub n: RepresentationSet<T>,
}

impl<T: Scalar> SplitSets<T> {
    pub fn iter(&self) -> impl Iterator<Item = (SplitLabel, &RepresentationSet<T>)> {
        [(SplitLabel::P1, &self.p1), (SplitLabel::P2, &self.p2), (SplitLabel::N, &self.n)].into_iter()
    }

    fn map(&self, mut f: impl FnMut(&str, &RepresentationSet<T>) -> Result<RepresentationSet<T>>) -> Result<Self> {
        Ok(Self { p1: f("p1", &self.p1)?, p2: f("p2", &self.p2)?, n: f("n", &self.n)? })
    }
}

/// What the generator knows and the detectors are meant to recover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Victim cluster centers, `n_clusters x dim` row-major.
    pub victim_centers: Vec<f64>,
    pub independent_centers: Vec<f64>,
    /// Stolen map, `dim x dim` row-major; stolen row = map * victim row + noise.
    pub steal_matrix: Vec<f64>,
    pub gap_rho: f64,
    pub labels_p1: Vec<usize>,
    pub labels_p2: Vec<usize>,
    pub labels_n: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorld<T: Scalar> {
    pub config: SyntheticWorldConfig,
    pub victim: SplitSets<T>,
    pub stolen: SplitSets<T>,
    pub independent: SplitSets<T>,
    pub ground_truth: GroundTruth,
}

impl<T: Scalar> SyntheticWorld<T> {
    pub fn role(&self, role: EncoderRole) -> &SplitSets<T> {
        match role {
            EncoderRole::Victim => &self.victim,
            EncoderRole::Stolen => &self.stolen,
            EncoderRole::Independent => &self.independent,
        }
    }
}

fn normal(rng: &mut StreamRng) -> f64 {
    rng.sample(StandardNormal)
}

/// `k` points uniform on the sphere of radius `sqrt(dim)`.
fn sphere_centers(k: usize, dim: usize, rng: &mut StreamRng) -> Vec<f64> {
    let radius = (dim as f64).sqrt();
    let mut out = Vec::with_capacity(k * dim);
    for _ in 0..k {
        let v: Vec<f64> = (0..dim).map(|_| normal(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        out.extend(v.iter().map(|x| x * radius / norm));
    }
    out
}

fn cluster_rows<T: Scalar>(
    centers: &[f64],
    labels: &[usize],
    dim: usize,
    scale: f64,
    rng: &mut StreamRng,
) -> Result<RepresentationSet<T>> {
    let mut data = Vec::with_capacity(labels.len() * dim);
    for &l in labels {
        let c = &centers[l * dim..(l + 1) * dim];
        data.extend(c.iter().map(|&m| T::of(m + scale * normal(rng))));
    }
    RepresentationSet::new(data, labels.len(), dim)
}

/// The `dim x dim` matrix of a stealing map, drawn from `rng`.
pub fn steal_matrix(kind: StealMap, dim: usize, rng: &mut StreamRng) -> Vec<f64> {
    match kind {
        StealMap::Identity => {
            let mut m = vec![0.0; dim * dim];
            for i in 0..dim {
                m[i * dim + i] = 1.0;
            }
            m
        }
        StealMap::Orthogonal => {
            let mut m: Vec<f64> = (0..dim * dim).map(|_| normal(rng)).collect();
            orthonormalize_columns(&mut m, dim);
            m
        }
        StealMap::RandomLinear => {
            let s = 1.0 / (dim as f64).sqrt();
            (0..dim * dim).map(|_| s * normal(rng)).collect()
        }
    }
}

fn apply_map<T: Scalar>(
    victim: &RepresentationSet<T>,
    matrix: &[f64],
    noise: f64,
    rng: &mut StreamRng,
) -> Result<RepresentationSet<T>> {
    let d = victim.dim();
    let mut data = Vec::with_capacity(victim.data().len());
    let mut x = vec![0.0; d];
    for row in victim.rows() {
        for (xi, v) in x.iter_mut().zip(row) {
            *xi = v.as_f64();
        }
        for i in 0..d {
            let mi = &matrix[i * d..(i + 1) * d];
            let y: f64 = mi.iter().zip(&x).map(|(a, b)| a * b).sum();
            let eps = if noise > 0.0 { noise * normal(rng) } else { 0.0 };
            data.push(T::of(y + eps));
        }
    }
    RepresentationSet::new(data, victim.n_rows(), d)
}

/// Emulates a stolen encoder: every row `x` becomes `M x + e` with
/// `e ~ N(0, noise^2 I)` and `M` drawn from `seed`.
pub fn emulate_stealing<T: Scalar>(
    victim_reps: &RepresentationSet<T>,
    map_kind: StealMap,
    noise: f64,
    seed: u64,
) -> Result<RepresentationSet<T>> {
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::BadConfig(format!("noise must be finite and non-negative, got {noise}")));
    }
    let m = steal_matrix(map_kind, victim_reps.dim(), &mut substream(seed, "steal-map"));
    let out = apply_map(victim_reps, &m, noise, &mut substream(seed, "steal-noise"))?;
    Ok(out.with_labels("stolen", victim_reps.split_label.clone()))
}

/// Representations of a randomly initialized encoder: rows independent of
/// the inputs, i.i.d. standard normal.
pub fn random_baseline<T: Scalar>(n_rows: usize, dim: usize, seed: u64) -> Result<RepresentationSet<T>> {
    let mut rng = substream(seed, "random-baseline");
    let data = (0..n_rows * dim).map(|_| T::of(normal(&mut rng))).collect();
    Ok(RepresentationSet::new(data, n_rows, dim)?.with_labels("random", SplitLabel::Other("baseline".into())))
}

pub fn generate_world<T: Scalar>(config: &SyntheticWorldConfig) -> Result<SyntheticWorld<T>> {
    config.validate()?;
    let seed = config.seed;
    let (d, k) = (config.dim, config.n_clusters);
    let victim_centers = sphere_centers(k, d, &mut substream(seed, "victim-centers"));
    let independent_centers = sphere_centers(k, d, &mut substream(seed, "independent-centers"));
    let labels = |name: &str, n: usize| -> Vec<usize> {
        let mut rng = substream(seed, &format!("labels-{name}"));
        (0..n).map(|_| rng.random_range(0..k)).collect()
    };
    let labels_p1 = labels("p1", config.n_p1);
    let labels_p2 = labels("p2", config.n_p2);
    let labels_n = labels("n", config.n_n);

    let rho = config.gap_rho;
    let split = |role: &str, name: &str, centers: &[f64], labels: &[usize], scale: f64, tag: SplitLabel| {
        let mut rng = substream(seed, &format!("{role}-{name}"));
        cluster_rows::<T>(centers, labels, d, scale, &mut rng).map(|s| s.with_labels(role, tag))
    };
    let victim = SplitSets {
        p1: split("victim", "p1", &victim_centers, &labels_p1, rho, SplitLabel::P1)?,
        p2: split("victim", "p2", &victim_centers, &labels_p2, rho, SplitLabel::P2)?,
        n: split("victim", "n", &victim_centers, &labels_n, 1.0, SplitLabel::N)?,
    };
    let independent = SplitSets {
        p1: split("independent", "p1", &independent_centers, &labels_p1, 1.0, SplitLabel::P1)?,
        p2: split("independent", "p2", &independent_centers, &labels_p2, 1.0, SplitLabel::P2)?,
        n: split("independent", "n", &independent_centers, &labels_n, 1.0, SplitLabel::N)?,
    };
    let matrix = steal_matrix(config.steal_map, d, &mut substream(seed, "steal-map"));
    let stolen = victim.map(|name, v| {
        let mut rng = substream(seed, &format!("steal-noise-{name}"));
        Ok(apply_map(v, &matrix, config.steal_noise, &mut rng)?.with_labels("stolen", v.split_label.clone()))
    })?;

    Ok(SyntheticWorld {
        config: config.clone(),
        victim,
        stolen,
        independent,
        ground_truth: GroundTruth {
            victim_centers,
            independent_centers,
            steal_matrix: matrix,
            gap_rho: rho,
            labels_p1,
            labels_p2,
            labels_n,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldFile {
    pub role: EncoderRole,
    pub split: String,
    pub path: String,
    pub n_rows: usize,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldManifest {
    pub config: SyntheticWorldConfig,
    pub files: Vec<WorldFile>,
}

/// File name used for one (role, split) pair, e.g. `stolen_p2.repr`.
pub fn world_file_name(role: EncoderRole, split: &SplitLabel) -> String {
    format!("{}_{}.repr", role.name(), split.to_string().to_lowercase())
}

/// Writes nine REPR files and `manifest.json` into `dir`, creating it if
/// needed. Paths in the manifest are relative to `dir`.
pub fn write_world<T: Scalar>(world: &SyntheticWorld<T>, dir: impl AsRef<Path>) -> Result<WorldManifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for role in EncoderRole::ALL {
        for (split, set) in world.role(role).iter() {
            let name = world_file_name(role, &split);
            write_representations(set, dir.join(&name), FileFormat::Binary)?;
            files.push(WorldFile { role, split: split.to_string(), path: name, n_rows: set.n_rows(), dim: set.dim() });
        }
    }
    let manifest = WorldManifest { config: world.config.clone(), files };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::BadConfig(e.to_string()))?;
    fs::write(dir.join("manifest.json"), json + "\n")?;
    Ok(manifest)
}
