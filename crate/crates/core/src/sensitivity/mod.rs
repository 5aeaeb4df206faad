//! Variance-based (Sobol) sensitivity analysis with Saltelli sampling.

mod sobol;

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use sobol::{SobolSequence, MAX_DIM};

use crate::distances::PointCloud;
use crate::exec::Executor;
use crate::rng::{derive_seed, domain, StreamKey};
use crate::simulator::Simulator;
use crate::{Error, Result};

/// Box of parameter bounds explored by the analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpace {
    pub names: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParamSpace {
    pub fn new(names: Vec<String>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let s = ParamSpace {
            names,
            lower,
            upper,
        };
        s.validate()?;
        Ok(s)
    }

    /// Growth-model bounds `p_bra ∈ [0.003, 0.01]`, `R ∈ [0.4e-3, 1.2e-3]`,
    /// `v ∈ [30, 100]`.
    pub fn growth_default() -> Self {
        ParamSpace {
            names: ["p_bra", "R", "v"].iter().map(|s| s.to_string()).collect(),
            lower: alloc::vec![0.003, 0.4e-3, 30.0],
            upper: alloc::vec![0.01, 1.2e-3, 100.0],
        }
    }

    pub fn unit(dim: usize) -> Self {
        ParamSpace {
            names: (1..=dim).map(|i| alloc::format!("x{i}")).collect(),
            lower: alloc::vec![0.0; dim],
            upper: alloc::vec![1.0; dim],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.names.len() != self.lower.len() || self.lower.len() != self.upper.len() {
            return Err(Error::config(
                "parameter names and bounds must have equal length",
            ));
        }
        if self.names.is_empty() || 2 * self.names.len() > MAX_DIM {
            return Err(Error::config(alloc::format!(
                "parameter count must be in 1..={}",
                MAX_DIM / 2
            )));
        }
        for (j, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::config(alloc::format!(
                    "bounds for {} must satisfy lo < hi",
                    self.names[j]
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    fn scale(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .map(|((u, lo), hi)| lo + (hi - lo) * u)
            .collect()
    }
}

/// Saltelli design. Rows come in blocks of `2D + 2` per base index:
/// `A, AB_1..AB_D, BA_1..BA_D, B`, where `AB_i` is `A` with column `i`
/// from `B` and `BA_i` the converse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaltelliDesign {
    pub n_base: usize,
    pub dim: usize,
    /// Set when the requested base count was rounded up to a power of two.
    pub requested: Option<usize>,
    pub rows: Vec<Vec<f64>>,
}

impl SaltelliDesign {
    pub fn block(&self) -> usize {
        2 * self.dim + 2
    }
}

/// Builds the design from a `2D`-dimensional Sobol sequence, skipping its
/// origin. `n_base` is rounded up to a power of two.
pub fn saltelli_sample(space: &ParamSpace, n_base: usize) -> Result<SaltelliDesign> {
    space.validate()?;
    if n_base == 0 {
        return Err(Error::config("base sample count must be >= 1"));
    }
    let n = n_base.next_power_of_two();
    let requested = (n != n_base).then_some(n_base);
    let d = space.dim();
    let mut seq = SobolSequence::new(2 * d)?;
    seq.next_point();
    let mut rows = Vec::with_capacity(n * (2 * d + 2));
    for _ in 0..n {
        let p = seq.next_point();
        let (a, b) = p.split_at(d);
        rows.push(space.scale(a));
        for i in 0..d {
            let mut ab = a.to_vec();
            ab[i] = b[i];
            rows.push(space.scale(&ab));
        }
        for i in 0..d {
            let mut ba = b.to_vec();
            ba[i] = a[i];
            rows.push(space.scale(&ba));
        }
        rows.push(space.scale(b));
    }
    Ok(SaltelliDesign {
        n_base: n,
        dim: d,
        requested,
        rows,
    })
}

/// Mean QoI vector over `replicates` simulations at `theta`.
pub fn model_expectation<S: Simulator + ?Sized>(
    sim: &S,
    theta: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if replicates == 0 {
        return Err(Error::config("replicates must be >= 1"));
    }
    column_means(&sim.simulate(theta, replicates, seed)?)
}

fn column_means(c: &PointCloud) -> Result<Vec<f64>> {
    if c.is_empty() {
        return Err(Error::NotEnoughSamples { needed: 1, got: 0 });
    }
    Ok((0..c.dim())
        .map(|j| crate::stats::mean(&c.column(j)))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolEntry {
    pub parameter: String,
    pub qoi: String,
    /// `None` when the QoI has zero variance over the design.
    pub s1: Option<f64>,
    pub s1_ci: Option<f64>,
    pub s_tot: Option<f64>,
    pub s_tot_ci: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolResult {
    pub n_base: usize,
    pub entries: Vec<SobolEntry>,
    pub first_order_estimator: String,
    pub total_estimator: String,
    pub ci_method: String,
}

impl SobolResult {
    pub fn get(&self, parameter: &str, qoi: &str) -> Option<&SobolEntry> {
        self.entries
            .iter()
            .find(|e| e.parameter == parameter && e.qoi == qoi)
    }
}

/// `(S1, S_tot)` per parameter from the selected base indices, or `None`
/// for zero output variance.
fn estimate(y: &[f64], block: usize, d: usize, base: &[usize]) -> Option<Vec<(f64, f64)>> {
    let n = base.len() as f64;
    let fa = |j: usize| y[j * block];
    let fb = |j: usize| y[j * block + block - 1];
    let fab = |j: usize, i: usize| y[j * block + 1 + i];
    let mean = base.iter().map(|&j| fa(j) + fb(j)).sum::<f64>() / (2.0 * n);
    let var = base
        .iter()
        .map(|&j| (fa(j) - mean) * (fa(j) - mean) + (fb(j) - mean) * (fb(j) - mean))
        .sum::<f64>()
        / (2.0 * n);
    if !(var > 1e-300 * (1.0 + mean * mean)) {
        return None;
    }
    Some(
        (0..d)
            .map(|i| {
                let s1 = base
                    .iter()
                    .map(|&j| (fb(j) - mean) * (fab(j, i) - fa(j)))
                    .sum::<f64>()
                    / n
                    / var;
                let st = base
                    .iter()
                    .map(|&j| (fa(j) - fab(j, i)) * (fa(j) - fab(j, i)))
                    .sum::<f64>()
                    / (2.0 * n)
                    / var;
                (s1, st)
            })
            .collect(),
    )
}

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// First-order (Saltelli 2010, with `f_B` centered so the estimate is
/// shift invariant) and total (Jansen) indices with 95%
/// bootstrap half-widths over base indices. `outputs[k]` is the QoI
/// vector of design row `k`.
pub fn sobol_indices(
    design: &SaltelliDesign,
    outputs: &[Vec<f64>],
    names: &[String],
    qoi_labels: &[String],
    seed: u64,
) -> Result<SobolResult> {
    let (d, block, n) = (design.dim, design.block(), design.n_base);
    if outputs.len() != n * block {
        return Err(Error::DimensionMismatch {
            left: outputs.len(),
            right: n * block,
        });
    }
    if names.len() != d {
        return Err(Error::DimensionMismatch {
            left: names.len(),
            right: d,
        });
    }
    let q = qoi_labels.len();
    if outputs.iter().any(|o| o.len() != q) {
        return Err(Error::config("output rows must have one value per QoI"));
    }
    if outputs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("model outputs"));
    }
    let all: Vec<usize> = (0..n).collect();
    let key = StreamKey::new(seed, domain::BOOTSTRAP);
    let mut entries = Vec::with_capacity(d * q);
    for (qi, label) in qoi_labels.iter().enumerate() {
        let y: Vec<f64> = outputs.iter().map(|o| o[qi]).collect();
        let point = estimate(&y, block, d, &all);
        let mut rng = key.stream(qi as u32, 0);
        let mut boot: Vec<Vec<(f64, f64)>> = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
        if point.is_some() {
            let mut idx = alloc::vec![0usize; n];
            for _ in 0..BOOTSTRAP_RESAMPLES {
                for v in idx.iter_mut() {
                    *v = rng.random_range(0..n);
                }
                if let Some(e) = estimate(&y, block, d, &idx) {
                    boot.push(e);
                }
            }
        }
        for (pi, name) in names.iter().enumerate() {
            let half_width = |pick: fn(&(f64, f64)) -> f64| {
                let xs: Vec<f64> = boot.iter().map(|b| pick(&b[pi])).collect();
                (xs.len() > 1).then(|| 1.96 * crate::stats::sample_std_dev(&xs))
            };
            entries.push(SobolEntry {
                parameter: name.clone(),
                qoi: label.clone(),
                s1: point.as_ref().map(|p| p[pi].0),
                s1_ci: point.as_ref().and(half_width(|e| e.0)),
                s_tot: point.as_ref().map(|p| p[pi].1),
                s_tot_ci: point.as_ref().and(half_width(|e| e.1)),
            });
        }
    }
    Ok(SobolResult {
        n_base: n,
        entries,
        first_order_estimator: "saltelli-2010".to_string(),
        total_estimator: "jansen".to_string(),
        ci_method: alloc::format!("bootstrap-{BOOTSTRAP_RESAMPLES}-over-base-indices"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaOutput {
    pub design: SaltelliDesign,
    /// Expected QoIs per design row.
    pub outputs: Vec<Vec<f64>>,
    pub qoi_labels: Vec<String>,
    pub result: SobolResult,
}

/// How simulation seeds are assigned to design rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedScheme {
    /// Every row of a base block reuses the block's seed (common random
    /// numbers), so `f_A - f_AB_i` reflects the parameter change rather
    /// than replicate noise.
    #[default]
    PerBaseIndex,
    /// Independent seed per design row.
    PerRow,
}

impl SeedScheme {
    pub fn row_seed(self, seed: u64, row: usize, block: usize) -> u64 {
        match self {
            SeedScheme::PerBaseIndex => derive_seed(seed, &[(row / block) as u64]),
            SeedScheme::PerRow => derive_seed(seed, &[row as u64]),
        }
    }
}

/// Samples the design, evaluates `E[QoI]` per row and estimates the
/// indices.
pub fn run_sa<S, E>(
    sim: &S,
    space: &ParamSpace,
    n_base: usize,
    replicates: usize,
    seed: u64,
    scheme: SeedScheme,
    exec: &E,
) -> Result<SaOutput>
where
    S: Simulator + ?Sized,
    E: Executor,
{
    if sim.dim_theta() != space.dim() {
        return Err(Error::DimensionMismatch {
            left: space.dim(),
            right: sim.dim_theta(),
        });
    }
    let design = saltelli_sample(space, n_base)?;
    let outputs: Result<Vec<Vec<f64>>> = exec
        .map(design.rows.len(), |k| {
            model_expectation(
                sim,
                &design.rows[k],
                replicates,
                scheme.row_seed(seed, k, design.block()),
            )
        })
        .into_iter()
        .collect();
    let outputs = outputs?;
    let qoi_labels = sim.qoi_labels();
    let result = sobol_indices(&design, &outputs, &space.names, &qoi_labels, seed)?;
    Ok(SaOutput {
        design,
        outputs,
        qoi_labels,
        result,
    })
}

/// Ishigami function `sin x1 + a sin² x2 + b x3⁴ sin x1`, inputs on
/// `[-π, π]³`. Deterministic; the seed is ignored.
#[derive(Debug, Clone, Copy)]
pub struct Ishigami {
    pub a: f64,
    pub b: f64,
}

impl Default for Ishigami {
    fn default() -> Self {
        Ishigami { a: 7.0, b: 0.1 }
    }
}

impl Ishigami {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let s2 = libm::sin(x[1]);
        libm::sin(x[0]) + self.a * s2 * s2 + self.b * libm::pow(x[2], 4.0) * libm::sin(x[0])
    }

    pub fn space() -> ParamSpace {
        let pi = core::f64::consts::PI;
        ParamSpace {
            names: ["x1", "x2", "x3"].iter().map(|s| s.to_string()).collect(),
            lower: alloc::vec![-pi; 3],
            upper: alloc::vec![pi; 3],
        }
    }

    /// Analytic first-order indices.
    pub fn first_order(&self) -> [f64; 3] {
        let pi4 = libm::pow(core::f64::consts::PI, 4.0);
        let v1 = 0.5 * (1.0 + self.b * pi4 / 5.0) * (1.0 + self.b * pi4 / 5.0);
        let v2 = self.a * self.a / 8.0;
        let v13 = self.b * self.b * pi4 * pi4 * (1.0 / 18.0 - 1.0 / 50.0);
        let v = v1 + v2 + v13;
        [v1 / v, v2 / v, 0.0]
    }
}

impl Simulator for Ishigami {
    fn dim_theta(&self) -> usize {
        3
    }

    fn qoi_labels(&self) -> Vec<String> {
        alloc::vec!["Y".to_string()]
    }

    fn simulate(&self, theta: &[f64], n: usize, _seed: u64) -> Result<PointCloud> {
        if theta.len() != 3 {
            return Err(Error::DimensionMismatch {
                left: theta.len(),
                right: 3,
            });
        }
        PointCloud::new(1, alloc::vec![self.eval(theta); n])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;

    #[test]
    fn design_sizes() {
        let s = ParamSpace::unit(3);
        let d = saltelli_sample(&s, 4).unwrap();
        assert_eq!(d.rows.len(), 32);
        assert_eq!(d.requested, None);
        let d = saltelli_sample(&ParamSpace::unit(1), 2).unwrap();
        assert_eq!(d.rows.len(), 8);
        let d = saltelli_sample(&ParamSpace::unit(2), 3).unwrap();
        assert_eq!(d.n_base, 4);
        assert_eq!(d.requested, Some(3));
        assert!(d.rows.iter().flatten().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn block_layout() {
        let d = saltelli_sample(&ParamSpace::unit(2), 4).unwrap();
        for blk in d.rows.chunks(6) {
            let (a, b) = (&blk[0], &blk[5]);
            assert_eq!(blk[1], [b[0], a[1]]);
            assert_eq!(blk[2], [a[0], b[1]]);
            assert_eq!(blk[3], [a[0], b[1]]);
            assert_eq!(blk[4], [b[0], a[1]]);
        }
    }

    #[test]
    fn ishigami_analytic() {
        let s = Ishigami::default().first_order();
        assert!((s[0] - 0.3139).abs() < 1e-4);
        assert!((s[1] - 0.4424).abs() < 1e-4);
    }

    struct FirstCoordinate;

    impl Simulator for FirstCoordinate {
        fn dim_theta(&self) -> usize {
            3
        }
        fn qoi_labels(&self) -> Vec<String> {
            alloc::vec!["y".to_string(), "c".to_string()]
        }
        fn simulate(&self, theta: &[f64], n: usize, _: u64) -> Result<PointCloud> {
            PointCloud::new(2, [theta[0], 5.0].repeat(n))
        }
    }

    #[test]
    fn single_variable_function() {
        let out = run_sa(
            &FirstCoordinate,
            &ParamSpace::unit(3),
            1024,
            1,
            0,
            SeedScheme::PerRow,
            &Sequential,
        )
        .unwrap();
        let r = &out.result;
        let e = r.get("x1", "y").unwrap();
        assert!((e.s1.unwrap() - 1.0).abs() < 0.05);
        assert!((e.s_tot.unwrap() - 1.0).abs() < 0.05);
        for p in ["x2", "x3"] {
            let e = r.get(p, "y").unwrap();
            assert!(e.s1.unwrap().abs() < 0.05);
            assert!(e.s_tot.unwrap().abs() < 0.05);
        }
        let c = r.get("x1", "c").unwrap();
        assert_eq!(c.s1, None);
        assert_eq!(c.s_tot_ci, None);
    }

    #[test]
    fn affine_rescaling_invariance() {
        let d = saltelli_sample(&Ishigami::space(), 64).unwrap();
        let f = Ishigami::default();
        let y: Vec<Vec<f64>> = d
            .rows
            .iter()
            .map(|r| alloc::vec![f.eval(r), 3.0 * f.eval(r) - 7.0])
            .collect();
        let names = Ishigami::space().names;
        let r = sobol_indices(&d, &y, &names, &["a".to_string(), "b".to_string()], 1).unwrap();
        for p in &names {
            let (a, b) = (r.get(p, "a").unwrap(), r.get(p, "b").unwrap());
            assert!((a.s1.unwrap() - b.s1.unwrap()).abs() < 1e-9);
            assert!((a.s_tot.unwrap() - b.s_tot.unwrap()).abs() < 1e-9);
        }
    }
}
