//! JSON file formats. Complex numbers are `[re, im]` pairs and every tensor is
//! flattened row-major with the output coordinate slowest, then the arguments
//! left to right.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebra::{from_pair, pair, Algebra, AlgebraSpec};
use crate::error::{Error, Result};
use crate::fock::{ModelFlavor, RvModel};
use crate::series::{Jet, MultilinearMap};
use crate::transforms::{Diagnostics, MomentData, TransformResult};

type Tensor = Vec<[f64; 2]>;

#[derive(Serialize, Deserialize)]
struct JetFile {
    algebra: AlgebraSpec,
    degree: usize,
    terms: Vec<Tensor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diagnostics: Option<Diagnostics>,
}

#[derive(Serialize, Deserialize)]
struct MomentFile {
    algebra: AlgebraSpec,
    order: usize,
    moments: Vec<Tensor>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum FlavorTag {
    S,
    R,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    index: usize,
    flavor: FlavorTag,
    coeffs: Vec<Tensor>,
}

fn flatten(m: &MultilinearMap) -> Tensor {
    m.coeffs().iter().map(|&z| pair(z)).collect()
}

fn unflatten(alg: &Algebra, order: usize, t: &Tensor) -> Result<MultilinearMap> {
    MultilinearMap::new(alg.dim(), order, t.iter().map(|&p| from_pair(p)).collect())
        .map_err(|e| Error::Format(format!("tensor of order {order}: {e}")))
}

fn check_count(what: &str, declared: usize, found: usize) -> Result<()> {
    if declared != found {
        return Err(Error::Format(format!("{what} declares {declared} but lists {found}")));
    }
    Ok(())
}

pub fn jet_to_json(jet: &Jet, diagnostics: Option<&Diagnostics>) -> String {
    let file = JetFile {
        algebra: jet.algebra().spec(),
        degree: jet.degree(),
        terms: jet.terms().iter().map(flatten).collect(),
        diagnostics: diagnostics.copied(),
    };
    serde_json::to_string_pretty(&file).expect("jets serialize")
}

pub fn jet_from_json(text: &str) -> Result<Jet> {
    let file: JetFile = serde_json::from_str(text)?;
    let alg = Algebra::create(&file.algebra)?;
    check_count("jet degree", file.degree + 1, file.terms.len())?;
    let terms = file
        .terms
        .iter()
        .enumerate()
        .map(|(n, t)| unflatten(&alg, n, t))
        .collect::<Result<Vec<_>>>()?;
    Jet::new(&alg, terms)
}

pub fn transform_to_json(result: &TransformResult) -> String {
    jet_to_json(&result.jet, Some(&result.diagnostics))
}

pub fn moments_to_json(m: &MomentData) -> String {
    let file = MomentFile {
        algebra: m.algebra().spec(),
        order: m.order(),
        moments: m.moments().iter().map(flatten).collect(),
    };
    serde_json::to_string_pretty(&file).expect("moments serialize")
}

/// Parses moment data; the result is not yet checked for bimodularity.
pub fn moments_from_json(text: &str) -> Result<MomentData> {
    let file: MomentFile = serde_json::from_str(text)?;
    let alg = Algebra::create(&file.algebra)?;
    check_count("moment order", file.order, file.moments.len())?;
    let moments = file
        .moments
        .iter()
        .enumerate()
        .map(|(n, t)| unflatten(&alg, n + 1, t))
        .collect::<Result<Vec<_>>>()?;
    MomentData::new(&alg, moments)
}

pub fn model_to_json(model: &RvModel) -> String {
    let file = ModelFile {
        index: model.index(),
        flavor: match model.flavor() {
            ModelFlavor::S => FlavorTag::S,
            ModelFlavor::R => FlavorTag::R,
        },
        coeffs: model.coeffs().iter().map(flatten).collect(),
    };
    serde_json::to_string_pretty(&file).expect("models serialize")
}

/// Models carry no algebra in their file; the caller supplies it.
pub fn model_from_json(alg: &Algebra, text: &str) -> Result<RvModel> {
    let file: ModelFile = serde_json::from_str(text)?;
    let coeffs = file
        .coeffs
        .iter()
        .enumerate()
        .map(|(n, t)| unflatten(alg, n, t))
        .collect::<Result<Vec<_>>>()?;
    let flavor = match file.flavor {
        FlavorTag::S => ModelFlavor::S,
        FlavorTag::R => ModelFlavor::R,
    };
    RvModel::new(alg, file.index, flavor, coeffs)
}

pub fn read_moments(path: &Path) -> Result<MomentData> {
    moments_from_json(&fs::read_to_string(path)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    Ok(fs::write(path, text)?)
}
