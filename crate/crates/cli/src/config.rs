use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use diamag_core::fem::{EigenOptions, ElementOrder};
use diamag_core::geometry::{BoundaryCurve, CurveSpec, RadialShape};
use diamag_core::spectral::{MeshChoice, PotentialChoice};
use diamag_core::supercond::{GlOptions, Hc3Options};

/// Invalid or unreadable run configuration; maps to exit status 2.
#[derive(Debug, Error)]
#[error("config error: {0}")]
pub struct ConfigError(pub String);

fn bad(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Field or coupling grid: an explicit list, or `{start, stop, step}` with
/// both ends included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Value(f64),
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Grid {
    pub fn range(start: f64, stop: f64, step: f64) -> Self {
        Grid::Range { start, stop, step }
    }

    pub fn values(&self, what: &str) -> anyhow::Result<Vec<f64>> {
        let v = match self {
            Grid::Value(x) => vec![*x],
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, step } => {
                if ![start, stop, step].iter().all(|x| x.is_finite()) || *step <= 0.0 || stop < start {
                    return Err(bad(format!("{what}: range needs step > 0 and stop >= start")));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=n).map(|i| start + i as f64 * step).collect()
            }
        };
        if v.is_empty() {
            return Err(bad(format!("{what} is empty")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(bad(format!("{what} contains non-finite values")));
        }
        Ok(v)
    }
}

/// Builtin domain or a Fourier curve file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainSpec {
    Builtin(Builtin),
    File { curve_file: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builtin", rename_all = "snake_case", deny_unknown_fields)]
pub enum Builtin {
    Disc {
        #[serde(default = "one")]
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    Star {
        lobes: u32,
        amplitude: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec::Builtin(Builtin::Disc { radius: 1.0 })
    }
}

impl DomainSpec {
    pub fn name(&self) -> String {
        match self {
            DomainSpec::Builtin(Builtin::Disc { .. }) => "disc".into(),
            DomainSpec::Builtin(Builtin::Ellipse { .. }) => "ellipse".into(),
            DomainSpec::Builtin(Builtin::Star { .. }) => "star".into(),
            DomainSpec::File { curve_file } => curve_file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "curve".into()),
        }
    }

    pub fn shape(&self) -> anyhow::Result<RadialShape> {
        Ok(match self {
            DomainSpec::Builtin(Builtin::Disc { radius }) => RadialShape::disc(*radius),
            DomainSpec::Builtin(Builtin::Ellipse { a, b }) => RadialShape::ellipse(*a, *b),
            DomainSpec::Builtin(Builtin::Star { lobes, amplitude }) => RadialShape::star(*lobes, *amplitude),
            DomainSpec::File { curve_file } => {
                let spec = CurveSpec::read(curve_file).map_err(|e| bad(format!("curve file {}: {e}", curve_file.display())))?;
                spec.shape()?
            }
        })
    }

    /// Radius when the domain is a builtin disc.
    pub fn disc_radius(&self) -> Option<f64> {
        match self {
            DomainSpec::Builtin(Builtin::Disc { radius }) => Some(*radius),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegennesConfig {
    pub dt: f64,
    #[serde(rename = "T_max")]
    pub t_max: f64,
    pub tol_xi: f64,
    pub xi_start: f64,
    pub xi_stop: f64,
    pub xi_step: f64,
}

impl Default for DegennesConfig {
    fn default() -> Self {
        Self {
            dt: diamag_core::degennes::DEFAULT_DT,
            t_max: diamag_core::degennes::DEFAULT_T_MAX,
            tol_xi: 1e-7,
            xi_start: 0.0,
            xi_stop: 2.0,
            xi_step: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hc3Solver {
    #[default]
    Fem,
    /// Radial oracle; builtin discs only.
    Disc,
}

/// One JSON file per run. Every field is optional; subcommands fill in their
/// own defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSpec,
    /// Boundary samples of the curve.
    pub resolution: Option<usize>,
    pub mesh: Option<MeshChoice>,
    pub order: ElementOrder,
    pub potential: PotentialChoice,
    #[serde(rename = "B")]
    pub b: Option<f64>,
    #[serde(rename = "B_grid")]
    pub b_grid: Option<Grid>,
    pub kappa: Option<Grid>,
    #[serde(rename = "H_grid")]
    pub h_grid: Option<Grid>,
    /// Field window of the two-term fit; default the upper half of the grid.
    pub fit_window: Option<(f64, f64)>,
    /// Finite-difference cross-check of the sweep derivative.
    pub fd: bool,
    pub fd_step: Option<f64>,
    /// Localization diagnostics per field of a sweep.
    pub localization: Option<bool>,
    /// Distance from the curvature maxima beyond which tail mass is counted.
    pub eps0: Option<f64>,
    pub degennes: DegennesConfig,
    pub eigen: EigenOptions,
    pub hc3: Hc3Options,
    pub hc3_solver: Hc3Solver,
    pub gl: GlOptions,
    /// Amplitude of the random initial order parameter of GL scans.
    pub gl_init_amplitude: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub const DEFAULT_RESOLUTION: usize = 256;

    /// Reads a config file; relative curve paths are resolved against its directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        if let DomainSpec::File { curve_file } = &mut cfg.domain {
            if curve_file.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                *curve_file = base.join(&*curve_file);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if let DomainSpec::File { curve_file } = &self.domain {
            if !curve_file.is_file() {
                return Err(bad(format!("curve file {} does not exist", curve_file.display())));
            }
        }
        for (name, grid) in [("B_grid", &self.b_grid), ("kappa", &self.kappa), ("H_grid", &self.h_grid)] {
            if let Some(g) = grid {
                g.values(name)?;
            }
        }
        if let Some(r) = self.resolution {
            if r < 16 {
                return Err(bad(format!("resolution {r} is below 16")));
            }
        }
        Ok(())
    }

    pub fn curve(&self) -> anyhow::Result<BoundaryCurve> {
        Ok(BoundaryCurve::new(self.domain.shape()?, self.resolution.unwrap_or(Self::DEFAULT_RESOLUTION))?)
    }

    pub fn grid(&self, grid: &Option<Grid>, name: &str, default: Grid) -> anyhow::Result<Vec<f64>> {
        grid.as_ref().unwrap_or(&default).values(name)
    }

    pub fn eigen_options(&self, seed: u64) -> EigenOptions {
        self.eigen.with_seed(seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_includes_both_ends() {
        let v = Grid::range(1.0, 2.0, 0.25).values("g").unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!(*v.last().unwrap(), 2.0);
    }

    #[test]
    fn grid_forms() {
        let g: Grid = serde_json::from_str("3.5").unwrap();
        assert_eq!(g.values("g").unwrap(), vec![3.5]);
        let g: Grid = serde_json::from_str("[1, 2]").unwrap();
        assert_eq!(g.values("g").unwrap(), vec![1.0, 2.0]);
        let g: Grid = serde_json::from_str(r#"{"start": 0, "stop": 1, "step": 0.5}"#).unwrap();
        assert_eq!(g.values("g").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(Grid::List(vec![]).values("g").is_err());
    }

    #[test]
    fn parses_full_config() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{
                "domain": {"builtin": "ellipse", "a": 1.5, "b": 1.0},
                "mesh": {"kind": "reference_at", "b": 20, "refine": 1},
                "potential": {"kind": "standard"},
                "B_grid": {"start": 5, "stop": 20, "step": 5},
                "kappa": [4, 8],
                "eigen": {"tol": 1e-9},
                "seed": 7
            }"#,
        )
        .unwrap();
        assert_eq!(cfg.domain.name(), "ellipse");
        assert_eq!(cfg.potential, PotentialChoice::Standard);
        assert_eq!(cfg.eigen.tol, 1e-9);
        assert_eq!(cfg.eigen.krylov_dim, EigenOptions::default().krylov_dim);
        assert_eq!(cfg.seed, Some(7));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"B_grd": [1]}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"domain": {"builtin": "square"}}"#).is_err());
    }

    #[test]
    fn missing_curve_file_is_invalid() {
        let cfg = RunConfig { domain: DomainSpec::File { curve_file: "/nonexistent/curve.json".into() }, ..Default::default() };
        assert!(cfg.validate().unwrap_err().downcast_ref::<ConfigError>().is_some());
    }
}
