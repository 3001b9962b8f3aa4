use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, OneHotEncoding};
use super::ensemble::{fit_trees, GbtModel, TreeEnsemble, TreeFit, TreeKind, TreeParams};
use super::linear::{fit_linear, LinearFit, LinearOptions, LinearTask, LogisticModel, RidgeModel};
use super::mlp::{fit_mlp, MlpModel, MlpParams};
use crate::error::{Error, Result};
use crate::featurizer::FeatureRecord;
use crate::persist;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logistic,
    Ridge,
    Tree,
    Forest,
    ExtraTrees,
    Gbt,
    Mlp,
}

impl From<TreeKind> for ModelKind {
    fn from(k: TreeKind) -> Self {
        match k {
            TreeKind::Tree => ModelKind::Tree,
            TreeKind::Forest => ModelKind::Forest,
            TreeKind::ExtraTrees => ModelKind::ExtraTrees,
            TreeKind::Gbt => ModelKind::Gbt,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModelParams {
    /// Fixed output, used when training labels are all identical.
    Constant(Vec<f64>),
    Logistic(LogisticModel),
    Ridge(RidgeModel),
    Trees(TreeEnsemble),
    Gbt(GbtModel),
    Mlp(MlpModel),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub fingerprint: u64,
    pub classes: Vec<String>,
    pub encoding: OneHotEncoding,
    pub params: ModelParams,
}

const ARTIFACT_KIND: &str = "model";

impl TrainedModel {
    fn check(&self, record: &FeatureRecord) -> Result<()> {
        if record.fingerprint != self.fingerprint {
            return Err(Error::FingerprintMismatch {
                expected: self.fingerprint,
                found: record.fingerprint,
            });
        }
        Ok(())
    }

    pub fn is_regression(&self) -> bool {
        match &self.params {
            ModelParams::Ridge(_) => true,
            ModelParams::Trees(t) => t.regression,
            ModelParams::Constant(_) => self.classes.is_empty(),
            _ => false,
        }
    }

    /// Class probabilities in `classes` order.
    pub fn predict_proba(&self, record: &FeatureRecord) -> Result<Vec<f64>> {
        self.check(record)?;
        if self.is_regression() {
            return Err(Error::Invalid("regression model has no class probabilities".into()));
        }
        Ok(match &self.params {
            ModelParams::Constant(p) => p.clone(),
            ModelParams::Logistic(m) => m.predict_sparse(&self.encoding.encode_sparse(record)),
            ModelParams::Trees(t) => t.predict(&record.values),
            ModelParams::Gbt(g) => g.predict(&record.values),
            ModelParams::Mlp(m) => m.predict(&record.values),
            ModelParams::Ridge(_) => unreachable!(),
        })
    }

    pub fn predict_value(&self, record: &FeatureRecord) -> Result<f64> {
        self.check(record)?;
        match &self.params {
            ModelParams::Ridge(m) => Ok(m.predict_sparse(&self.encoding.encode_sparse(record))),
            ModelParams::Trees(t) if t.regression => Ok(t.predict(&record.values)[0]),
            ModelParams::Constant(v) if self.classes.is_empty() => Ok(v[0]),
            _ => Err(Error::Invalid("classifier has no real-valued output".into())),
        }
    }

    /// Index of the most probable class (first on ties).
    pub fn predict_class(&self, record: &FeatureRecord) -> Result<usize> {
        Ok(argmax(&self.predict_proba(record)?))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        persist::encode_artifact(ARTIFACT_KIND, self.fingerprint, self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (fp, model): (u64, TrainedModel) = persist::decode_artifact(bytes, ARTIFACT_KIND)?;
        if fp != model.fingerprint {
            return Err(Error::InvalidModel("header fingerprint disagrees with payload".into()));
        }
        Ok(model)
    }
}

pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

fn wrap(ds: &Dataset, kind: ModelKind, params: ModelParams) -> TrainedModel {
    TrainedModel {
        kind,
        fingerprint: ds.fingerprint(),
        classes: ds.classes.clone(),
        encoding: ds.encoding.clone(),
        params,
    }
}

pub fn train_linear(ds: &Dataset, task: LinearTask, reg_grid: &[f64]) -> Result<TrainedModel> {
    train_linear_with(ds, task, reg_grid, &LinearOptions::default())
}

pub fn train_linear_with(ds: &Dataset, task: LinearTask, reg_grid: &[f64], opts: &LinearOptions) -> Result<TrainedModel> {
    let kind = match task {
        LinearTask::Logistic => ModelKind::Logistic,
        LinearTask::Ridge => ModelKind::Ridge,
    };
    let params = match fit_linear(ds, task, reg_grid, opts)? {
        LinearFit::Constant(p) => ModelParams::Constant(p),
        LinearFit::Logistic(m) => ModelParams::Logistic(m),
        LinearFit::Ridge(m) => ModelParams::Ridge(m),
    };
    Ok(wrap(ds, kind, params))
}

pub fn predict_linear(model: &TrainedModel, record: &FeatureRecord) -> Result<Vec<f64>> {
    match model.kind {
        ModelKind::Ridge => Ok(vec![model.predict_value(record)?]),
        _ => model.predict_proba(record),
    }
}

pub fn train_tree_ensemble(ds: &Dataset, kind: TreeKind, params: &TreeParams) -> Result<TrainedModel> {
    let p = match fit_trees(ds, kind, params)? {
        TreeFit::Constant(p) => ModelParams::Constant(p),
        TreeFit::Trees(t) => ModelParams::Trees(t),
        TreeFit::Gbt(g) => ModelParams::Gbt(g),
    };
    Ok(wrap(ds, kind.into(), p))
}

pub fn predict_tree_ensemble(model: &TrainedModel, record: &FeatureRecord) -> Result<Vec<f64>> {
    model.predict_proba(record)
}

pub fn train_mlp(ds: &Dataset, params: &MlpParams) -> Result<TrainedModel> {
    let labels = ds.class_labels()?;
    if !labels.is_empty() && labels.iter().all(|&c| c == labels[0]) {
        let mut p = vec![0.0; ds.classes.len()];
        p[labels[0]] = 1.0;
        return Ok(wrap(ds, ModelKind::Mlp, ModelParams::Constant(p)));
    }
    let m = fit_mlp(ds, params)?;
    Ok(wrap(ds, ModelKind::Mlp, ModelParams::Mlp(m)))
}
