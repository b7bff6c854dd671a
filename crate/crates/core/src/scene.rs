//! JSON scene descriptions for the simulator.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{EnergyModel, Simulator};
use crate::error::{Error, Result};
use crate::geometry::obj::read_obj;
use crate::geometry::{MeshBuilder, MeshState, Vec3};
use crate::twoway::ResolveConfig;

/// One object of a scene. Paths are relative to the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneMesh {
    pub path: PathBuf,
    #[serde(default, rename = "static")]
    pub is_static: bool,
    /// Areal density (kg/m^2), linear density for strands, mass for particles.
    #[serde(default = "default_density")]
    pub density: f64,
    #[serde(default)]
    pub velocity: [f64; 3],
}

fn default_density() -> f64 {
    0.2
}

fn default_frames() -> usize {
    10
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub meshes: Vec<SceneMesh>,
    #[serde(default)]
    pub model: EnergyModel,
    #[serde(default)]
    pub resolve: ResolveConfig,
    #[serde(default = "default_frames")]
    pub frames: usize,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Directory the relative paths resolve against; set by [`SceneConfig::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl SceneConfig {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: SceneConfig = serde_json::from_str(text)?;
        cfg.base_dir = base_dir.into();
        cfg.model.validate()?;
        cfg.resolve.validate()?;
        if cfg.meshes.is_empty() {
            return Err(Error::Config("scene has no meshes".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve_path(&self.output_dir)
    }

    pub fn build_mesh(&self) -> Result<MeshState> {
        let mut b = MeshBuilder::new();
        for m in &self.meshes {
            let path = self.resolve_path(&m.path);
            if !path.exists() {
                return Err(Error::Config(format!("mesh file {} does not exist", path.display())));
            }
            let obj = read_obj(&path)?;
            let base = b.add(&obj.positions, &obj.triangles, &obj.segments, m.density, m.is_static)?;
            if !m.is_static {
                b.set_velocity(base..base + obj.positions.len(), Vec3::from(m.velocity));
            }
        }
        b.build()
    }

    pub fn simulator(&self) -> Result<Simulator> {
        Simulator::new(self.build_mesh()?, self.model.clone(), self.resolve.clone())
    }
}
