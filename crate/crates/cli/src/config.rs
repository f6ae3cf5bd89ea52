//! Flat key=value experiment configuration with dotted sections, e.g.
//! `plant.mass = 0.5`. Unset keys fall back to the built-in
//! mass-spring-damper experiment. Serialization round-trips exactly
//! (floats are written in shortest form), so a resolved config file
//! reproduces a run bit for bit.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pradp_core::lq::{tustin_discretize, CostSpec, PlantModel};
use pradp_core::nalgebra::{DMatrix, DVector};
use pradp_core::reference::{BasisFamily, BasisKind};
use pradp_core::sim::ExoSystem;

use crate::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum PlantSource {
    MassSpringDamper { mass: f64, spring: f64, damper: f64 },
    Explicit { a: DMatrix<f64>, b: DMatrix<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub plant: PlantSource,
    pub sample_time: f64,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub gamma: f64,
    pub basis: BasisKind,
    pub knot_spacing: usize,
    pub exo_f: DMatrix<f64>,
    pub exo_r0: DVector<f64>,
    pub noise_std: f64,
    pub seed: u64,
    pub train_samples: usize,
    pub e_w: f64,
    pub max_iter: usize,
    pub k_sine: usize,
    pub k_total: usize,
    /// Reference samples for the evaluation run; built-in deviation
    /// curve when unset.
    pub test_samples_csv: Option<PathBuf>,
    /// Train from a stored dataset instead of collecting fresh data.
    pub train_dataset_csv: Option<PathBuf>,
    pub x0: DVector<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            plant: PlantSource::MassSpringDamper {
                mass: 0.5,
                spring: 0.1,
                damper: 0.1,
            },
            sample_time: 0.1,
            q: DMatrix::from_row_slice(2, 2, &[100.0, 0.0, 0.0, 0.0]),
            r: DMatrix::from_element(1, 1, 1.0),
            gamma: 0.9,
            basis: BasisKind::CubicPoly,
            knot_spacing: 25,
            exo_f: DMatrix::from_row_slice(2, 2, &[0.9988, 0.05, -0.05, 0.9988]),
            exo_r0: DVector::from_column_slice(&[0.0, 1.0]),
            noise_std: 1.0,
            seed: 0,
            train_samples: 500,
            e_w: 1e-5,
            max_iter: 100,
            k_sine: 250,
            k_total: 500,
            test_samples_csv: None,
            train_dataset_csv: None,
            x0: DVector::from_column_slice(&[0.0, 0.0]),
        }
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn fmt_matrix(m: &DMatrix<f64>) -> String {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| fmt_f64(m[(i, j)]))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn fmt_vector(v: &DVector<f64>) -> String {
    v.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(",")
}

fn parse_matrix(text: &str, key: &str) -> CliResult<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|cell| parse_f64(cell, key))
                .collect::<CliResult<Vec<f64>>>()
        })
        .collect::<CliResult<Vec<_>>>()?;
    let nrows = rows.len();
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::Validation(format!(
            "{key}: expected 'a,b;c,d' style matrix, got '{text}'"
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn parse_vector(text: &str, key: &str) -> CliResult<DVector<f64>> {
    let values = text
        .split(',')
        .map(|cell| parse_f64(cell, key))
        .collect::<CliResult<Vec<f64>>>()?;
    Ok(DVector::from_vec(values))
}

fn parse_f64(text: &str, key: &str) -> CliResult<f64> {
    text.trim()
        .parse::<f64>()
        .map_err(|_| CliError::Validation(format!("{key}: cannot parse '{text}' as a number")))
}

fn parse_usize(text: &str, key: &str) -> CliResult<usize> {
    text.trim()
        .parse::<usize>()
        .map_err(|_| CliError::Validation(format!("{key}: cannot parse '{text}' as an integer")))
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str_contents(&text)
    }

    pub fn from_str_contents(text: &str) -> CliResult<Self> {
        let mut pairs = BTreeMap::new();
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Validation(format!("line {}: expected 'key = value'", line_no + 1))
            })?;
            pairs.insert(key.trim().to_string(), value.trim().to_string());
        }

        let mut cfg = ExperimentConfig::default();
        let mut explicit_a: Option<DMatrix<f64>> = None;
        let mut explicit_b: Option<DMatrix<f64>> = None;
        let mut msd = (0.5f64, 0.1f64, 0.1f64);

        for (key, value) in &pairs {
            match key.as_str() {
                "plant.mass" => msd.0 = parse_f64(value, key)?,
                "plant.spring" => msd.1 = parse_f64(value, key)?,
                "plant.damper" => msd.2 = parse_f64(value, key)?,
                "plant.sample_time" => cfg.sample_time = parse_f64(value, key)?,
                "plant.a" => explicit_a = Some(parse_matrix(value, key)?),
                "plant.b" => explicit_b = Some(parse_matrix(value, key)?),
                "cost.q" => cfg.q = parse_matrix(value, key)?,
                "cost.r" => cfg.r = parse_matrix(value, key)?,
                "cost.gamma" => cfg.gamma = parse_f64(value, key)?,
                "basis.family" => {
                    cfg.basis = match value.as_str() {
                        "cubic" => BasisKind::CubicPoly,
                        "linear" => BasisKind::Linear,
                        "zoh" => BasisKind::ZeroOrderHold,
                        other => {
                            return Err(CliError::Validation(format!(
                                "basis.family: unknown family '{other}' (cubic|linear|zoh)"
                            )))
                        }
                    }
                }
                "reference.knot_spacing" => cfg.knot_spacing = parse_usize(value, key)?,
                "exo.f_ref" => cfg.exo_f = parse_matrix(value, key)?,
                "exo.r0" => cfg.exo_r0 = parse_vector(value, key)?,
                "excitation.samples" => cfg.train_samples = parse_usize(value, key)?,
                "excitation.noise_std" => cfg.noise_std = parse_f64(value, key)?,
                "excitation.seed" => {
                    cfg.seed = value.trim().parse::<u64>().map_err(|_| {
                        CliError::Validation(format!("{key}: cannot parse '{value}' as u64"))
                    })?
                }
                "lspi.e_w" => cfg.e_w = parse_f64(value, key)?,
                "lspi.max_iter" => cfg.max_iter = parse_usize(value, key)?,
                "test.k_sine" => cfg.k_sine = parse_usize(value, key)?,
                "test.k_total" => cfg.k_total = parse_usize(value, key)?,
                "test.samples_csv" => cfg.test_samples_csv = Some(PathBuf::from(value)),
                "train.dataset_csv" => cfg.train_dataset_csv = Some(PathBuf::from(value)),
                "rollout.x0" => cfg.x0 = parse_vector(value, key)?,
                other => {
                    return Err(CliError::Validation(format!("unknown config key '{other}'")))
                }
            }
        }

        cfg.plant = match (explicit_a, explicit_b) {
            (Some(a), Some(b)) => PlantSource::Explicit { a, b },
            (None, None) => PlantSource::MassSpringDamper {
                mass: msd.0,
                spring: msd.1,
                damper: msd.2,
            },
            _ => {
                return Err(CliError::Validation(
                    "plant.a and plant.b must be given together".into(),
                ))
            }
        };
        Ok(cfg)
    }

    /// Render the full resolved configuration; parsing the result yields
    /// an identical config.
    pub fn to_ini(&self) -> String {
        let mut out = String::new();
        match &self.plant {
            PlantSource::MassSpringDamper {
                mass,
                spring,
                damper,
            } => {
                out.push_str(&format!("plant.mass = {}\n", fmt_f64(*mass)));
                out.push_str(&format!("plant.spring = {}\n", fmt_f64(*spring)));
                out.push_str(&format!("plant.damper = {}\n", fmt_f64(*damper)));
            }
            PlantSource::Explicit { a, b } => {
                out.push_str(&format!("plant.a = {}\n", fmt_matrix(a)));
                out.push_str(&format!("plant.b = {}\n", fmt_matrix(b)));
            }
        }
        out.push_str(&format!("plant.sample_time = {}\n", fmt_f64(self.sample_time)));
        out.push_str(&format!("cost.q = {}\n", fmt_matrix(&self.q)));
        out.push_str(&format!("cost.r = {}\n", fmt_matrix(&self.r)));
        out.push_str(&format!("cost.gamma = {}\n", fmt_f64(self.gamma)));
        out.push_str(&format!("basis.family = {}\n", self.basis.name()));
        out.push_str(&format!("reference.knot_spacing = {}\n", self.knot_spacing));
        out.push_str(&format!("exo.f_ref = {}\n", fmt_matrix(&self.exo_f)));
        out.push_str(&format!("exo.r0 = {}\n", fmt_vector(&self.exo_r0)));
        out.push_str(&format!("excitation.samples = {}\n", self.train_samples));
        out.push_str(&format!("excitation.noise_std = {}\n", fmt_f64(self.noise_std)));
        out.push_str(&format!("excitation.seed = {}\n", self.seed));
        out.push_str(&format!("lspi.e_w = {}\n", fmt_f64(self.e_w)));
        out.push_str(&format!("lspi.max_iter = {}\n", self.max_iter));
        out.push_str(&format!("test.k_sine = {}\n", self.k_sine));
        out.push_str(&format!("test.k_total = {}\n", self.k_total));
        if let Some(path) = &self.test_samples_csv {
            out.push_str(&format!("test.samples_csv = {}\n", path.display()));
        }
        if let Some(path) = &self.train_dataset_csv {
            out.push_str(&format!("train.dataset_csv = {}\n", path.display()));
        }
        out.push_str(&format!("rollout.x0 = {}\n", fmt_vector(&self.x0)));
        out
    }

    pub fn to_plant(&self) -> CliResult<PlantModel> {
        match &self.plant {
            PlantSource::MassSpringDamper {
                mass,
                spring,
                damper,
            } => Ok(tustin_discretize(*mass, *spring, *damper, self.sample_time)?),
            PlantSource::Explicit { a, b } => Ok(PlantModel::new(a.clone(), b.clone())?),
        }
    }

    pub fn to_cost(&self) -> CliResult<CostSpec> {
        Ok(CostSpec::new(self.q.clone(), self.r.clone(), self.gamma)?)
    }

    pub fn to_family(&self) -> CliResult<BasisFamily> {
        Ok(BasisFamily::new(self.basis, self.sample_time)?)
    }

    pub fn to_exo(&self) -> CliResult<ExoSystem> {
        Ok(ExoSystem::new(self.exo_f.clone(), self.exo_r0.clone())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_ini() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_ini();
        let parsed = ExperimentConfig::from_str_contents(&text).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn round_trip_preserves_awkward_floats() {
        let mut cfg = ExperimentConfig::default();
        cfg.e_w = 1.0000000000000002e-5;
        cfg.gamma = 0.1 + 0.2; // 0.30000000000000004
        cfg.noise_std = f64::MIN_POSITIVE;
        let parsed = ExperimentConfig::from_str_contents(&cfg.to_ini()).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn explicit_plant_requires_both_matrices() {
        let err = ExperimentConfig::from_str_contents("plant.a = 1,0;0,1\n").unwrap_err();
        assert!(matches!(err, CliError::Validation(_)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_str_contents("plant.weight = 1\n").unwrap_err();
        assert!(matches!(err, CliError::Validation(_)));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# comment\n\nexcitation.seed = 7\n";
        let cfg = ExperimentConfig::from_str_contents(text).unwrap();
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn gamma_at_or_above_one_fails_validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.gamma = 1.0;
        assert!(matches!(cfg.to_cost(), Err(CliError::Validation(_))));
    }
}
