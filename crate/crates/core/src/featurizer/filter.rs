//! Redundant-feature filtering by Theil's U (categorical) and Pearson's r (numeric).

use std::collections::HashMap;
use std::hash::Hash;

use super::schema::{FeatureKind, FeatureRecord, FeatureSchema, Value};
use crate::error::{Error, Result};

/// Categorical features implied by another one above this U are dropped.
pub const THEILS_U_THRESHOLD: f64 = 0.98;
/// Numeric features correlated with an earlier one above this |r| are dropped.
pub const PEARSON_THRESHOLD: f64 = 0.95;

fn entropy<K: Eq + Hash>(counts: &HashMap<K, usize>, n: f64) -> f64 {
    // summed in sorted order so the result does not depend on hash order
    let mut cs: Vec<usize> = counts.values().copied().collect();
    cs.sort_unstable();
    cs.into_iter()
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Uncertainty coefficient `U(y|x) = (H(y) - H(y|x)) / H(y)`, natural log.
/// Defined as 1 when `y` is constant.
pub fn theils_u<X, Y>(x: &[X], y: &[Y]) -> Result<f64>
where
    X: Eq + Hash,
    Y: Eq + Hash,
{
    if x.len() != y.len() {
        return Err(Error::Invalid(format!(
            "theils_u: series lengths differ ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::Empty("series"));
    }
    let n = x.len() as f64;
    let mut y_counts: HashMap<&Y, usize> = HashMap::new();
    let mut x_counts: HashMap<&X, usize> = HashMap::new();
    let mut joint: HashMap<(&X, &Y), usize> = HashMap::new();
    for (a, b) in x.iter().zip(y) {
        *y_counts.entry(b).or_default() += 1;
        *x_counts.entry(a).or_default() += 1;
        *joint.entry((a, b)).or_default() += 1;
    }
    let h_y = entropy(&y_counts, n);
    if h_y == 0.0 {
        return Ok(1.0);
    }
    // H(y|x) = H(x,y) - H(x)
    let h_y_given_x = entropy(&joint, n) - entropy(&x_counts, n);
    Ok(((h_y - h_y_given_x) / h_y).clamp(0.0, 1.0))
}

/// Pearson correlation; `None` when either series is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    if a.len() != b.len() || a.is_empty() {
        return None;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some(sab / (saa.sqrt() * sbb.sqrt()))
}

/// Pearson r with the constant-column convention: two constants correlate
/// perfectly, a constant against a varying column not at all.
fn pearson_or_convention(a: &[f64], b: &[f64]) -> f64 {
    match pearson(a, b) {
        Some(r) => r,
        None => {
            let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
            if constant(a) && constant(b) {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Drops categorical features predictable from another surviving one
/// (`U(A|B) > 0.98` drops A) and numeric features strongly correlated with an
/// earlier surviving one (`|r| > 0.95` drops the later). Features are visited
/// in schema order and dropped features are never reconsidered.
pub fn filter_redundant(matrix: &[FeatureRecord], schema: &FeatureSchema) -> Result<FeatureSchema> {
    if matrix.is_empty() {
        return Err(Error::Empty("feature matrix"));
    }
    let column = |j: usize| -> Vec<Value> { matrix.iter().map(|r| r.values[j]).collect() };
    let mut cats: Vec<(usize, Vec<u32>)> = Vec::new();
    let mut nums: Vec<(usize, Vec<f64>)> = Vec::new();
    for (j, e) in schema.entries.iter().enumerate() {
        let col = column(j);
        match e.kind {
            FeatureKind::Categorical => cats.push((
                j,
                col.iter()
                    .map(|v| match v {
                        Value::Cat(c) => *c,
                        Value::Num(x) => *x as u32,
                    })
                    .collect(),
            )),
            FeatureKind::Numeric => nums.push((j, col.iter().map(|v| v.as_f64()).collect())),
        }
    }

    let mut dropped = vec![false; schema.len()];
    for a in 0..cats.len() {
        for b in 0..cats.len() {
            if a == b || dropped[cats[b].0] {
                continue;
            }
            if theils_u(&cats[b].1, &cats[a].1)? > THEILS_U_THRESHOLD {
                dropped[cats[a].0] = true;
                break;
            }
        }
    }
    for a in 0..nums.len() {
        if dropped[nums[a].0] {
            continue;
        }
        for b in a + 1..nums.len() {
            if dropped[nums[b].0] {
                continue;
            }
            if pearson_or_convention(&nums[a].1, &nums[b].1).abs() > PEARSON_THRESHOLD {
                dropped[nums[b].0] = true;
            }
        }
    }
    let keep: Vec<usize> = (0..schema.len()).filter(|&j| !dropped[j]).collect();
    Ok(schema.restrict(&keep))
}
