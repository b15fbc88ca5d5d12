//! Two-sample discriminant tests and α-threshold feature selection.
//!
//! Numeric features are tested with the Mann-Whitney U test (exact
//! permutation distribution for small samples, tie-corrected normal
//! approximation otherwise); boolean features with a 2×2 chi-square test of
//! independence, reporting the phi coefficient as effect size.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnKind, Dataset};
use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.01;

/// Pooled sample size up to which `Auto` uses the exact distribution.
pub const EXACT_MAX_N: usize = 16;

/// Exact enumeration counts fit in `u128` up to this pooled size.
const EXACT_HARD_LIMIT: usize = 120;

/// 1-based ranks; ties share the mean of the ranks they occupy.
pub fn rank_with_ties(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = midrank;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MwuMode {
    #[default]
    Auto,
    Exact,
    Approx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MwuMethod {
    Exact,
    NormalApproximation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitneyResult {
    /// U statistic of the first sample.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub method: MwuMethod,
    /// Every value in both samples is identical; `p` is 1 by convention.
    pub degenerate: bool,
}

fn check_sample(s: &[f64], which: &str) -> Result<()> {
    if s.is_empty() {
        return Err(Error::InvalidInput(format!("{which} sample is empty")));
    }
    if let Some(i) = s.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteInput { row: i, col: 0 });
    }
    Ok(())
}

/// Two-sided Mann-Whitney U test.
pub fn mann_whitney_u(a: &[f64], b: &[f64], mode: MwuMode) -> Result<MannWhitneyResult> {
    check_sample(a, "first")?;
    check_sample(b, "second")?;
    let (n1, n2) = (a.len(), b.len());
    let n = n1 + n2;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = rank_with_ties(&pooled);
    let r1: f64 = ranks[..n1].iter().sum();
    let u = r1 - (n1 * (n1 + 1)) as f64 / 2.0;

    let use_exact = match mode {
        MwuMode::Exact => true,
        MwuMode::Approx => false,
        MwuMode::Auto => n <= EXACT_MAX_N,
    };
    let method = if use_exact {
        MwuMethod::Exact
    } else {
        MwuMethod::NormalApproximation
    };

    if pooled.iter().all(|&x| x == pooled[0]) {
        return Ok(MannWhitneyResult {
            u,
            p: 1.0,
            method,
            degenerate: true,
        });
    }

    let p = if use_exact {
        if n > EXACT_HARD_LIMIT {
            return Err(Error::InvalidInput(format!(
                "exact Mann-Whitney supports at most {EXACT_HARD_LIMIT} pooled values, got {n}"
            )));
        }
        exact_p(&ranks, n1)
    } else {
        approx_p(u, n1, n2, &pooled)
    };
    Ok(MannWhitneyResult {
        u,
        p,
        method,
        degenerate: false,
    })
}

/// Permutation p-value over all C(n, n1) assignments of the pooled midranks,
/// counted with a subset-sum table on doubled ranks (integers).
fn exact_p(ranks: &[f64], n1: usize) -> f64 {
    let n = ranks.len();
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    // ways[j][s]: subsets of size j with doubled rank sum s
    let mut ways = vec![vec![0u128; max_sum + 1]; n1 + 1];
    ways[0][0] = 1;
    for &d in &doubled {
        for j in (1..=n1).rev() {
            let (lo, hi) = ways.split_at_mut(j);
            let prev = &lo[j - 1];
            let cur = &mut hi[0];
            for s in (d..=max_sum).rev() {
                if prev[s - d] != 0 {
                    cur[s] += prev[s - d];
                }
            }
        }
    }
    let offset = n1 * (n1 + 1); // doubled n1(n1+1)/2
    let center = n1 * (n - n1); // doubled n1*n2/2
    let observed: usize = doubled[..n1].iter().sum();
    let dev = |s: usize| (s as i64 - offset as i64 - center as i64).unsigned_abs();
    let obs_dev = dev(observed);
    let (mut extreme, mut total) = (0u128, 0u128);
    for (s, &w) in ways[n1].iter().enumerate() {
        if w == 0 {
            continue;
        }
        total += w;
        if dev(s) >= obs_dev {
            extreme += w;
        }
    }
    (extreme as f64 / total as f64).min(1.0)
}

/// Normal approximation with tie-corrected variance and continuity correction.
fn approx_p(u: f64, n1: usize, n2: usize, pooled: &[f64]) -> f64 {
    let n = (n1 + n2) as f64;
    let mut sorted = pooled.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let var = n1f * n2f / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let mean = n1f * n2f / 2.0;
    let num = ((u - mean).abs() - 0.5).max(0.0);
    let z = num / var.sqrt();
    statrs::function::erf::erfc(z / std::f64::consts::SQRT_2).min(1.0)
}

/// Upper tail of the chi-square distribution with one degree of freedom.
pub fn chi_square_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    statrs::function::erf::erfc((x / 2.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub chi2: f64,
    pub phi: f64,
    pub p: f64,
    pub dof: u32,
}

/// Chi-square test of independence on `[[a, b], [c, d]]`.
///
/// `phi` always uses the uncorrected statistic; `yates` only affects `chi2` and `p`.
pub fn chi_square_2x2(table: [[u64; 2]; 2], yates: bool) -> Result<ChiSquareResult> {
    let [[a, b], [c, d]] = table;
    let margins = [a + b, c + d, a + c, b + d];
    if margins.contains(&0) {
        return Err(Error::ZeroMargin);
    }
    let n = (a + b + c + d) as f64;
    let det = (a as i128 * d as i128 - b as i128 * c as i128).unsigned_abs() as f64;
    let denom: f64 = margins.iter().map(|&m| m as f64).product();
    let corrected = if yates { (det - n / 2.0).max(0.0) } else { det };
    let chi2 = n * corrected * corrected / denom;
    let phi = det / denom.sqrt();
    Ok(ChiSquareResult {
        chi2,
        phi,
        p: chi_square_sf(chi2),
        dof: 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub alpha: f64,
    pub yates: bool,
    pub mwu_mode: MwuMode,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            alpha: DEFAULT_ALPHA,
            yates: false,
            mwu_mode: MwuMode::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTest {
    pub name: String,
    pub kind: ColumnKind,
    /// U for numeric features, chi-square for boolean ones.
    pub statistic: f64,
    /// Phi coefficient (boolean features only).
    pub phi: Option<f64>,
    pub p: f64,
    pub significant: bool,
    /// The test could not discriminate at all (constant feature).
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub alpha: f64,
    pub yates: bool,
    pub features: Vec<FeatureTest>,
}

impl SelectionReport {
    pub fn selected(&self) -> Vec<&str> {
        self.features
            .iter()
            .filter(|f| f.significant)
            .map(|f| f.name.as_str())
            .collect()
    }
}

fn test_feature(ds: &Dataset, idx: usize, labels: &[u8], cfg: &SelectionConfig) -> Result<FeatureTest> {
    let col = &ds.columns()[idx];
    let values: Vec<f64> = ds.rows().iter().map(|r| r[idx].as_f64().unwrap()).collect();
    let (mut benign, mut injection) = (Vec::new(), Vec::new());
    for (&v, &l) in values.iter().zip(labels) {
        if l == 1 { &mut injection } else { &mut benign }.push(v);
    }
    let (statistic, phi, p, degenerate) = match col.kind {
        ColumnKind::Numeric => {
            let r = mann_whitney_u(&benign, &injection, cfg.mwu_mode)?;
            (r.u, None, r.p, r.degenerate)
        }
        ColumnKind::Boolean => {
            let count = |s: &[f64], v: f64| s.iter().filter(|&&x| x == v).count() as u64;
            let table = [
                [count(&benign, 0.0), count(&benign, 1.0)],
                [count(&injection, 0.0), count(&injection, 1.0)],
            ];
            match chi_square_2x2(table, cfg.yates) {
                Ok(r) => (r.chi2, Some(r.phi), r.p, false),
                Err(Error::ZeroMargin) => (0.0, Some(0.0), 1.0, true),
                Err(e) => return Err(e),
            }
        }
        _ => unreachable!("only feature columns are tested"),
    };
    Ok(FeatureTest {
        name: col.name.clone(),
        kind: col.kind,
        statistic,
        phi,
        p,
        significant: p < cfg.alpha,
        degenerate,
    })
}

/// Test every numeric and boolean column against the label and keep those with `p < alpha`.
pub fn select_features(ds: &Dataset, cfg: &SelectionConfig) -> Result<(SelectionReport, Dataset)> {
    let (benign, injection) = ds.label_counts();
    if benign == 0 || injection == 0 {
        return Err(Error::SingleClass(format!(
            " ({benign} benign, {injection} injection rows)"
        )));
    }
    let feature_idx: Vec<usize> = (0..ds.columns().len())
        .filter(|&i| ds.columns()[i].kind.is_feature())
        .collect();
    if feature_idx.is_empty() {
        return Err(Error::InvalidInput("dataset has no numeric or boolean features".into()));
    }
    let labels = ds.labels();
    let features = feature_idx
        .par_iter()
        .map(|&i| test_feature(ds, i, &labels, cfg))
        .collect::<Result<Vec<_>>>()?;
    let report = SelectionReport {
        alpha: cfg.alpha,
        yates: cfg.yates,
        features,
    };
    let reduced = ds.select_columns(&report.selected());
    Ok((report, reduced))
}

fn verdict(b: bool) -> &'static str {
    if b {
        "True"
    } else {
        "False"
    }
}

/// Markdown tables: numeric features (U, p) then boolean features (phi, p).
pub fn selection_markdown(report: &SelectionReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "## Mann-Whitney U tests (numeric features)\n");
    let _ = writeln!(
        out,
        "| Variable | U Statistic | P-Value | Significant at {} |",
        report.alpha
    );
    let _ = writeln!(out, "|---|---|---|---|");
    for f in report.features.iter().filter(|f| f.kind == ColumnKind::Numeric) {
        let _ = writeln!(
            out,
            "| {} | {:.1} | {:.6e} | {} |",
            f.name,
            f.statistic,
            f.p,
            verdict(f.significant)
        );
    }
    let _ = writeln!(out, "\n## Chi-square tests (boolean features)\n");
    let _ = writeln!(
        out,
        "| Variable | Chi-Square | Phi Value | P-Value | Significant at {} |",
        report.alpha
    );
    let _ = writeln!(out, "|---|---|---|---|---|");
    for f in report.features.iter().filter(|f| f.kind == ColumnKind::Boolean) {
        let _ = writeln!(
            out,
            "| {} | {:.6} | {:.6} | {:.6e} | {} |",
            f.name,
            f.statistic,
            f.phi.unwrap_or(0.0),
            f.p,
            verdict(f.significant)
        );
    }
    out
}

pub fn selection_csv(report: &SelectionReport) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["variable", "kind", "statistic", "phi", "p_value", "significant"])
        .expect("in-memory write");
    for f in &report.features {
        w.write_record([
            f.name.clone(),
            f.kind.to_string(),
            format!("{}", f.statistic),
            f.phi.map(|p| format!("{p}")).unwrap_or_default(),
            format!("{}", f.p),
            verdict(f.significant).to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}
