use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::dopants::{draw_dopants, DopantSample};
use super::realize::{realize_fields, DopantModel};
use super::StochasticError;
use crate::fem::{
    evaluate_qoi, gummel_iterate, BoundaryData, Discretization, GummelOptions, PhysicalParams, QoiKind, SolutionFields,
    Timings,
};
use crate::mesh::{build_device_mesh, DeviceGeometry};

/// Everything needed to turn a seed and a mesh size into a QoI value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceModel {
    pub geometry: DeviceGeometry,
    pub physics: PhysicalParams,
    pub dopants: DopantModel,
    pub qoi: QoiKind,
    pub gummel_tol: f64,
    pub gummel_max_iters: usize,
}

impl Default for DeviceModel {
    fn default() -> Self {
        Self {
            geometry: DeviceGeometry::default(),
            physics: PhysicalParams::default(),
            dopants: DopantModel::default(),
            qoi: QoiKind::default(),
            gummel_tol: 1e-8,
            gummel_max_iters: 200,
        }
    }
}

impl DeviceModel {
    pub fn validate(&self) -> Result<(), StochasticError> {
        self.geometry.validate().map_err(|e| StochasticError::Config(e.to_string()))?;
        self.physics.validate().map_err(|e| StochasticError::Config(e.to_string()))?;
        self.dopants.validate()?;
        if let QoiKind::ContactFlux(name) = &self.qoi {
            if !self.geometry.contacts.iter().any(|c| &c.name == name) {
                return Err(StochasticError::Config(format!("unknown contact '{name}' in qoi")));
            }
        }
        if !(self.gummel_tol > 0.0) || self.gummel_max_iters == 0 {
            return Err(StochasticError::Config("Gummel tolerance and iteration limit must be positive".into()));
        }
        Ok(())
    }

    pub fn gummel_options(&self) -> GummelOptions {
        GummelOptions { tol: self.gummel_tol, max_iters: self.gummel_max_iters, ..Default::default() }
    }

    pub fn draw(&self, seed: u64) -> Result<DopantSample, StochasticError> {
        draw_dopants(seed, &self.geometry, self.physics.c_dop, self.dopants.depth, self.physics.dopant_sign)
    }
}

/// A mesh level with its sample-independent data.
#[derive(Debug)]
pub struct Level {
    pub h_target: f64,
    pub disc: Discretization,
    pub bc: BoundaryData,
}

impl Level {
    pub fn new(model: &DeviceModel, h_target: f64) -> Result<Self, StochasticError> {
        let mesh = build_device_mesh(&model.geometry, h_target).map_err(|e| StochasticError::Config(e.to_string()))?;
        let bc = BoundaryData::from_mesh(&mesh, &model.physics);
        Ok(Self { h_target, disc: Discretization::new(mesh), bc })
    }

    pub fn solve(&self, model: &DeviceModel, sample: &DopantSample) -> Result<SolutionFields, StochasticError> {
        let fields = realize_fields(sample, &self.disc, &model.physics, &model.dopants)?;
        gummel_iterate(&self.disc, &fields, &model.physics, &self.bc, &model.gummel_options())
            .map_err(|source| StochasticError::Solve { h: self.h_target, seed: sample.seed, source })
    }

    pub fn qoi(&self, model: &DeviceModel, fields: &SolutionFields, seed: u64) -> Result<f64, StochasticError> {
        evaluate_qoi(fields, &self.disc, &model.physics, &self.bc, &model.qoi)
            .map_err(|source| StochasticError::Solve { h: self.h_target, seed, source })
    }
}

/// The same random event evaluated on two consecutive levels.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledSample {
    pub sample: DopantSample,
    pub fine_level: usize,
    pub coarse_level: usize,
}

/// Solves one event on both meshes; the two solves share no mutable state.
pub fn coupled_solve(
    coupled: &CoupledSample,
    fine: &Level,
    coarse: &Level,
    model: &DeviceModel,
) -> Result<(f64, f64), StochasticError> {
    let tag = |level: usize| move |e: StochasticError| StochasticError::Level { level, source: Box::new(e) };
    let f = fine.solve(model, &coupled.sample).map_err(tag(coupled.fine_level))?;
    let qf = fine.qoi(model, &f, coupled.sample.seed).map_err(tag(coupled.fine_level))?;
    let c = coarse.solve(model, &coupled.sample).map_err(tag(coupled.coarse_level))?;
    let qc = coarse.qoi(model, &c, coupled.sample.seed).map_err(tag(coupled.coarse_level))?;
    Ok((qf, qc))
}

/// Result of one device solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub qoi: f64,
    pub h: f64,
    pub dopants: usize,
    pub gummel_iterations: usize,
    pub newton_iterations: usize,
    pub violations: usize,
    pub timings: Timings,
}

/// Thread-safe sampler with a per-mesh-size cache of levels.
type LevelSlot = Arc<OnceLock<Result<Arc<Level>, StochasticError>>>;

#[derive(Debug)]
pub struct DeviceSampler {
    model: DeviceModel,
    levels: Mutex<HashMap<u64, LevelSlot>>,
}

impl DeviceSampler {
    pub fn new(model: DeviceModel) -> Result<Self, StochasticError> {
        model.validate()?;
        Ok(Self { model, levels: Mutex::new(HashMap::new()) })
    }

    pub fn model(&self) -> &DeviceModel {
        &self.model
    }

    pub fn level(&self, h_target: f64) -> Result<Arc<Level>, StochasticError> {
        let cell = {
            let mut map = self.levels.lock().expect("level cache poisoned");
            map.entry(h_target.to_bits()).or_default().clone()
        };
        cell.get_or_init(|| Level::new(&self.model, h_target).map(Arc::new)).clone()
    }

    pub fn solve(&self, h_target: f64, seed: u64) -> Result<SampleOutcome, StochasticError> {
        let level = self.level(h_target)?;
        let sample = self.model.draw(seed)?;
        let fields = level.solve(&self.model, &sample)?;
        let qoi = level.qoi(&self.model, &fields, seed)?;
        Ok(SampleOutcome {
            qoi,
            h: level.disc.mesh().h(),
            dopants: sample.count,
            gummel_iterations: fields.iterations,
            newton_iterations: fields.newton_iterations,
            violations: fields.violations.len(),
            timings: fields.timings,
        })
    }
}

impl crate::estimators::Sampler for DeviceSampler {
    fn sample(&self, h: f64, seed: u64) -> Result<f64, String> {
        self.solve(h, seed).map(|o| o.qoi).map_err(|e| e.to_string())
    }
}
