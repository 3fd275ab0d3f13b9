//! Image-transport benchmark harness: synthetic foreground-square images,
//! IDX image ingestion, l1 pixel-distance costs, and head-to-head
//! convergence traces for the two projectors at equal update budgets.
//!
//! All randomness is drawn from `ChaCha8Rng` seeded with the caller's 64-bit
//! seed, in a fixed documented order, so runs are reproducible.

use std::io::Read;
use std::time::Instant;

use byteorder::{BigEndian, ReadBytesExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::approxot::ProjectorKind;
use crate::error::{Error, Result};
use crate::greenkhorn::GreenkhornState;
use crate::kernel::{log_gibbs_kernel, ScaledKernel};
use crate::matrix::{CostMatrix, Mat};
use crate::measures::Marginal;
use crate::rounding::round_to_polytope;
use crate::sinkhorn::SinkhornState;

/// IDX magic number for unsigned-byte rank-3 tensors (image files).
pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;

/// Grayscale image as nonnegative per-pixel mass, row-major.
#[derive(Clone, Debug)]
pub struct GrayscaleImage {
    width: usize,
    height: usize,
    intensities: Vec<f64>,
}

impl GrayscaleImage {
    pub fn new(width: usize, height: usize, intensities: Vec<f64>) -> Result<Self> {
        if intensities.len() != width * height {
            return Err(Error::DimensionMismatch {
                context: "GrayscaleImage::new",
                expected: width * height,
                actual: intensities.len(),
            });
        }
        for (index, &v) in intensities.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::DomainError {
                    context: "GrayscaleImage::new",
                    index,
                    value: v,
                    requirement: "nonnegative and finite",
                });
            }
        }
        Ok(GrayscaleImage {
            width,
            height,
            intensities,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn total_mass(&self) -> f64 {
        self.intensities.iter().sum()
    }

    /// Adds `noise` to every zero-intensity pixel (pre-normalization
    /// background treatment).
    pub fn with_background_noise(mut self, noise: f64) -> Self {
        for v in &mut self.intensities {
            if *v == 0.0 {
                *v = noise;
            }
        }
        self
    }

    /// Rescales to unit total mass.
    pub fn normalized(&self) -> Result<GrayscaleImage> {
        let total = self.total_mass();
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::DegenerateInput {
                context: "GrayscaleImage::normalized",
                detail: format!("total mass {total}"),
            });
        }
        GrayscaleImage::new(
            self.width,
            self.height,
            self.intensities.iter().map(|v| v / total).collect(),
        )
    }

    /// Unit-mass pixel distribution over row-major pixel indices.
    pub fn to_marginal(&self) -> Result<Marginal> {
        let total = self.total_mass();
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::DegenerateInput {
                context: "GrayscaleImage::to_marginal",
                detail: format!("total mass {total}"),
            });
        }
        Marginal::normalized(self.intensities.iter().map(|v| v / total).collect())
    }
}

/// Synthetic benchmark image: background pixels drawn uniformly from [0, 1],
/// a randomly placed square (side `round(m sqrt(fg_fraction))`, clipped to
/// [1, m]) overwritten with draws from [0, 50], then the whole image
/// normalized to unit mass.
///
/// Draw order for a given seed: all m*m background intensities (row-major),
/// then the side*side foreground intensities (row-major), then the square's
/// top coordinate, then its left coordinate.
pub fn synth_image(m: usize, fg_fraction: f64, seed: u64) -> Result<GrayscaleImage> {
    if m < 2 {
        return Err(Error::InvalidParameter {
            name: "m",
            value: m as f64,
            requirement: "at least 2",
        });
    }
    if !(fg_fraction > 0.0 && fg_fraction <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "fg_fraction",
            value: fg_fraction,
            requirement: "in (0, 1]",
        });
    }
    let side = ((m as f64 * fg_fraction.sqrt()).round() as usize).clamp(1, m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut intensities: Vec<f64> = (0..m * m).map(|_| rng.gen::<f64>()).collect();
    let foreground: Vec<f64> = (0..side * side).map(|_| rng.gen::<f64>() * 50.0).collect();
    let top = rng.gen_range(0..=m - side);
    let left = rng.gen_range(0..=m - side);
    for di in 0..side {
        for dj in 0..side {
            intensities[(top + di) * m + (left + dj)] = foreground[di * side + dj];
        }
    }
    GrayscaleImage::new(m, m, intensities)?.normalized()
}

/// Cost matrix of l1 distances between pixel locations of an m x m grid
/// under row-major indexing; `||C||_inf = 2(m - 1)`.
pub fn l1_cost_matrix(m: usize) -> Result<CostMatrix> {
    if m < 1 {
        return Err(Error::InvalidParameter {
            name: "m",
            value: m as f64,
            requirement: "at least 1",
        });
    }
    let n = m * m;
    let mut entries = Mat::zeros(n, n);
    for p in 0..n {
        let (i1, j1) = (p / m, p % m);
        for q in 0..n {
            let (i2, j2) = (q / m, q % m);
            entries[(p, q)] = (i1 as f64 - i2 as f64).abs() + (j1 as f64 - j2 as f64).abs();
        }
    }
    CostMatrix::new(entries)
}

/// Which images to pull out of an IDX file.
#[derive(Clone, Copy, Debug)]
pub enum IdxSelection<'a> {
    All,
    First(usize),
    Indices(&'a [usize]),
}

/// Parses an IDX3 unsigned-byte image file (big-endian magic 0x00000803,
/// then image/row/column counts, then raw pixels). When `background_noise`
/// is set, that amount is added to every zero-intensity pixel before any
/// later normalization.
pub fn load_idx_images<R: Read>(
    mut reader: R,
    selection: IdxSelection<'_>,
    background_noise: Option<f64>,
) -> Result<Vec<GrayscaleImage>> {
    let eof = |e: std::io::Error| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format("truncated IDX file".into())
        } else {
            Error::Io(e)
        }
    };
    let magic = reader.read_u32::<BigEndian>().map_err(eof)?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "bad IDX magic {magic:#010x}, expected {IDX_IMAGE_MAGIC:#010x} (image file)"
        )));
    }
    let count = reader.read_u32::<BigEndian>().map_err(eof)? as usize;
    let rows = reader.read_u32::<BigEndian>().map_err(eof)? as usize;
    let cols = reader.read_u32::<BigEndian>().map_err(eof)? as usize;
    let pixels = rows * cols;

    let wanted: Vec<usize> = match selection {
        IdxSelection::All => (0..count).collect(),
        IdxSelection::First(k) => (0..k.min(count)).collect(),
        IdxSelection::Indices(idx) => {
            for &i in idx {
                if i >= count {
                    return Err(Error::Format(format!(
                        "image index {i} out of range; file holds {count}"
                    )));
                }
            }
            idx.to_vec()
        }
    };
    let max_wanted = wanted.iter().copied().max();

    let mut raw: Vec<Vec<u8>> = Vec::new();
    let mut buf = vec![0u8; pixels];
    if let Some(max_idx) = max_wanted {
        for _ in 0..=max_idx {
            reader.read_exact(&mut buf).map_err(eof)?;
            raw.push(buf.clone());
        }
    }

    wanted
        .into_iter()
        .map(|i| {
            let intensities: Vec<f64> = raw[i].iter().map(|&b| b as f64).collect();
            let image = GrayscaleImage::new(cols, rows, intensities)?;
            Ok(match background_noise {
                Some(noise) => image.with_background_noise(noise),
                None => image,
            })
        })
        .collect()
}

pub fn load_idx_images_path(
    path: impl AsRef<std::path::Path>,
    selection: IdxSelection<'_>,
    background_noise: Option<f64>,
) -> Result<Vec<GrayscaleImage>> {
    load_idx_images(
        std::io::BufReader::new(std::fs::File::open(path)?),
        selection,
        background_noise,
    )
}

/// One measurement of one projector on one instance.
#[derive(Clone, Debug, Serialize)]
pub struct BenchRecord {
    pub instance_id: String,
    pub projector: ProjectorKind,
    /// Row/column updates consumed; a full Sinkhorn pass counts as n.
    pub updates: u64,
    /// Marginal violation of the unrounded iterate.
    pub dist: f64,
    /// `<round(B), C>` when rounding at checkpoints is enabled.
    pub rounded_objective: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Clone, Debug)]
pub struct HeadToHeadConfig {
    pub eta: f64,
    pub update_budget: u64,
    /// Requested measurement points in update units; they are snapped to
    /// full-pass multiples of n so both projectors are compared at identical
    /// budgets.
    pub checkpoints: Vec<u64>,
    pub round_objective: bool,
    /// Worker threads for the instance loop (None: rayon default).
    pub threads: Option<usize>,
}

impl HeadToHeadConfig {
    pub fn new(eta: f64, update_budget: u64) -> Self {
        HeadToHeadConfig {
            eta,
            update_budget,
            checkpoints: Vec::new(),
            round_objective: false,
            threads: None,
        }
    }
}

fn snap_checkpoints(requested: &[u64], budget: u64, n: u64) -> Vec<u64> {
    let snap = |v: u64| -> u64 {
        let passes = (v as f64 / n as f64).round() as u64;
        passes * n
    };
    let budget = snap(budget).max(n);
    let mut points: Vec<u64> = requested
        .iter()
        .map(|&v| snap(v).min(budget))
        .chain(std::iter::once(budget))
        .collect();
    points.sort_unstable();
    points.dedup();
    points
}

/// Runs both projectors from the same Gibbs kernel `exp(-eta C)` on every
/// pair, recording the marginal violation at each checkpoint. Instances run
/// in parallel; output order is deterministic (by pair, Sinkhorn first).
pub fn run_head_to_head(
    pairs: &[(Marginal, Marginal)],
    cost: &CostMatrix,
    cfg: &HeadToHeadConfig,
) -> Result<Vec<BenchRecord>> {
    let n = cost.n() as u64;
    let log_a = log_gibbs_kernel(cost, cfg.eta)?;
    let checkpoints = snap_checkpoints(&cfg.checkpoints, cfg.update_budget, n);

    let run_all = || -> Result<Vec<Vec<BenchRecord>>> {
        pairs
            .par_iter()
            .enumerate()
            .map(|(idx, (r, c))| run_instance(idx, r, c, cost, &log_a, &checkpoints, cfg))
            .collect()
    };

    let nested = match cfg.threads {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::InternalInvariant(format!("thread pool: {e}")))?;
            pool.install(run_all)?
        }
        None => run_all()?,
    };
    Ok(nested.into_iter().flatten().collect())
}

fn run_instance(
    idx: usize,
    r: &Marginal,
    c: &Marginal,
    cost: &CostMatrix,
    log_a: &Mat,
    checkpoints: &[u64],
    cfg: &HeadToHeadConfig,
) -> Result<Vec<BenchRecord>> {
    let instance_id = format!("pair{idx:03}");
    let n = cost.n() as u64;
    let mut records = Vec::with_capacity(checkpoints.len() * 2);

    let maybe_round = |kernel: &ScaledKernel| -> Result<Option<f64>> {
        if !cfg.round_objective {
            return Ok(None);
        }
        let plan = round_to_polytope(&kernel.realize(), r, c)?;
        Ok(Some(plan.entries().dot(cost.entries())?))
    };

    let start = Instant::now();
    let kernel = ScaledKernel::from_log_matrix(log_a.clone())?;
    let mut sink = SinkhornState::new(kernel, r.clone(), c.clone())?;
    for &cp in checkpoints {
        while sink.iterations() * n < cp {
            sink.advance()?;
        }
        records.push(BenchRecord {
            instance_id: instance_id.clone(),
            projector: ProjectorKind::Sinkhorn,
            updates: sink.iterations() * n,
            dist: sink.dist(),
            rounded_objective: maybe_round(sink.kernel())?,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }

    let start = Instant::now();
    let kernel = ScaledKernel::from_log_matrix(log_a.clone())?;
    let mut green = GreenkhornState::new(kernel, r.clone(), c.clone())?;
    for &cp in checkpoints {
        while green.iterations() < cp {
            green.advance()?;
        }
        records.push(BenchRecord {
            instance_id: instance_id.clone(),
            projector: ProjectorKind::Greenkhorn,
            updates: green.iterations(),
            dist: green.dist(),
            rounded_objective: maybe_round(green.kernel())?,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }

    Ok(records)
}

/// Competitive-ratio statistics at one update budget:
/// `ln(dist_sinkhorn / dist_greenkhorn)` across instances.
#[derive(Clone, Debug, Serialize)]
pub struct RatioStats {
    pub updates: u64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub instances: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchSummary {
    pub schema: u32,
    pub pairs: usize,
    pub eta: f64,
    pub update_budget: u64,
    pub competitive_ratio: Vec<RatioStats>,
    /// Median ratio at the final (largest) checkpoint.
    pub final_median_ratio: Option<f64>,
}

fn median(sorted: &[f64]) -> f64 {
    let k = sorted.len();
    if k % 2 == 1 {
        sorted[k / 2]
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
    }
}

/// Aggregates head-to-head records into per-checkpoint ratio statistics.
pub fn summarize(records: &[BenchRecord], eta: f64, update_budget: u64) -> BenchSummary {
    use std::collections::BTreeMap;
    // (updates -> instance -> dist) per projector
    let mut sink: BTreeMap<u64, BTreeMap<&str, f64>> = BTreeMap::new();
    let mut green: BTreeMap<u64, BTreeMap<&str, f64>> = BTreeMap::new();
    let mut instances: std::collections::BTreeSet<&str> = Default::default();
    for rec in records {
        instances.insert(&rec.instance_id);
        let bucket = match rec.projector {
            ProjectorKind::Sinkhorn => &mut sink,
            ProjectorKind::Greenkhorn => &mut green,
        };
        bucket
            .entry(rec.updates)
            .or_default()
            .insert(&rec.instance_id, rec.dist);
    }
    let mut competitive_ratio = Vec::new();
    for (&updates, sink_dists) in &sink {
        let Some(green_dists) = green.get(&updates) else {
            continue;
        };
        let mut ratios: Vec<f64> = sink_dists
            .iter()
            .filter_map(|(id, &ds)| {
                green_dists.get(id).map(|&dg| {
                    ds.max(f64::MIN_POSITIVE).ln() - dg.max(f64::MIN_POSITIVE).ln()
                })
            })
            .collect();
        if ratios.is_empty() {
            continue;
        }
        ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
        competitive_ratio.push(RatioStats {
            updates,
            min: ratios[0],
            median: median(&ratios),
            max: *ratios.last().unwrap(),
            instances: ratios.len(),
        });
    }
    let final_median_ratio = competitive_ratio.last().map(|s| s.median);
    BenchSummary {
        schema: 1,
        pairs: instances.len(),
        eta,
        update_budget,
        competitive_ratio,
        final_median_ratio,
    }
}

/// CSV rendering with the fixed header
/// `instance_id,projector,updates,dist,objective,wall_ms`.
pub fn records_to_csv(records: &[BenchRecord]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("instance_id,projector,updates,dist,objective,wall_ms\n");
    for rec in records {
        let objective = rec
            .rounded_objective
            .map(|o| o.to_string())
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.3}",
            rec.instance_id, rec.projector, rec.updates, rec.dist, objective, rec.wall_ms
        );
    }
    out
}
