//! Material fields, isotropic sources, and the registry of built-in
//! benchmark configurations.
//!
//! Discontinuous coefficients are sampled pointwise. Box regions are open
//! sets: a sample landing exactly on a box edge takes the surrounding
//! (high-scattering) value. Source boxes are closed so the source covers its
//! whole block.

use crate::error::{Error, Result};
use crate::geometry::SpatialGrid;
use serde::{Deserialize, Serialize};

/// Axis-aligned box with a field value, used for piecewise-constant layouts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldBox {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub value: f64,
    /// Closed boxes include their edges; open boxes leave edge samples to the
    /// surrounding material.
    #[serde(default)]
    pub closed: bool,
}

impl FieldBox {
    fn contains(&self, x: f64, y: f64) -> bool {
        if self.closed {
            x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
        } else {
            x > self.x0 && x < self.x1 && y > self.y0 && y < self.y1
        }
    }
}

/// Scalar field over (x, y): either a named analytic formula or a
/// piecewise-constant box layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarField {
    Constant { value: f64 },
    /// `amplitude * exp(-rate * (x^2 + y^2))`
    Gaussian { amplitude: f64, rate: f64 },
    /// Radial blend `(outer - inner) * r^4 (r^2 - 2)^2 + inner` for r <= 1,
    /// `outer` outside the unit disc. Smoothly joins `inner` at the center to
    /// `outer` at r = 1.
    RadialBlend { inner: f64, outer: f64 },
    Boxes {
        default: f64,
        boxes: Vec<FieldBox>,
    },
}

impl ScalarField {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            ScalarField::Constant { value } => *value,
            ScalarField::Gaussian { amplitude, rate } => {
                amplitude * (-rate * (x * x + y * y)).exp()
            }
            ScalarField::RadialBlend { inner, outer } => {
                let r2 = x * x + y * y;
                if r2 <= 1.0 {
                    (outer - inner) * r2 * r2 * (r2 - 2.0) * (r2 - 2.0) + inner
                } else {
                    *outer
                }
            }
            ScalarField::Boxes { default, boxes } => boxes
                .iter()
                .find(|b| b.contains(x, y))
                .map(|b| b.value)
                .unwrap_or(*default),
        }
    }
}

/// Cross sections, source and domain of one transport problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: String,
    pub domain: Domain,
    pub sigma_s: ScalarField,
    pub sigma_a: ScalarField,
    pub source: ScalarField,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Domain {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

pub const BUILTIN_NAMES: [&str; 5] = [
    "diffusion",
    "transport",
    "variable_scattering",
    "pin_cell",
    "lattice",
];

impl ProblemSpec {
    pub fn sigma_s(&self, x: f64, y: f64) -> f64 {
        self.sigma_s.eval(x, y)
    }

    pub fn sigma_a(&self, x: f64, y: f64) -> f64 {
        self.sigma_a.eval(x, y)
    }

    pub fn sigma_t(&self, x: f64, y: f64) -> f64 {
        self.sigma_s(x, y) + self.sigma_a(x, y)
    }

    pub fn source(&self, x: f64, y: f64) -> f64 {
        self.source.eval(x, y)
    }

    pub fn grid(&self, nx: usize, ny: usize) -> Result<SpatialGrid> {
        SpatialGrid::new(
            (self.domain.x0, self.domain.x1),
            (self.domain.y0, self.domain.y1),
            nx,
            ny,
        )
    }

    /// Returns one of the built-in benchmark configurations.
    pub fn builtin(name: &str) -> Result<ProblemSpec> {
        let unit = Domain {
            x0: -1.0,
            x1: 1.0,
            y0: -1.0,
            y1: 1.0,
        };
        let gaussian = ScalarField::Gaussian {
            amplitude: 1.0,
            rate: 100.0,
        };
        let zero = ScalarField::Constant { value: 0.0 };
        match name {
            "diffusion" => Ok(ProblemSpec {
                name: name.into(),
                domain: unit,
                sigma_s: ScalarField::Constant { value: 100.0 },
                sigma_a: zero,
                source: gaussian,
            }),
            "transport" => Ok(ProblemSpec {
                name: name.into(),
                domain: unit,
                sigma_s: ScalarField::Constant { value: 1.0 },
                sigma_a: zero,
                source: gaussian,
            }),
            "variable_scattering" => Ok(ProblemSpec {
                name: name.into(),
                domain: unit,
                sigma_s: ScalarField::RadialBlend {
                    inner: 1.0,
                    outer: 100.0,
                },
                sigma_a: zero,
                source: gaussian,
            }),
            "pin_cell" => Ok(ProblemSpec {
                name: name.into(),
                domain: unit,
                sigma_s: ScalarField::Boxes {
                    default: 100.0,
                    boxes: vec![FieldBox {
                        x0: -0.5,
                        x1: 0.5,
                        y0: -0.5,
                        y1: 0.5,
                        value: 1.0,
                        closed: false,
                    }],
                },
                sigma_a: zero,
                source: gaussian,
            }),
            "lattice" => Ok(Self::lattice()),
            other => Err(Error::UnknownProblem(other.into())),
        }
    }

    /// Checkerboard lattice on [0, 5]^2 with unit blocks: cells (i, j) with
    /// i + j odd are pure absorbers (sigma_a = 100), the rest pure scattering
    /// (sigma_s = 1), and a constant unit source occupies the center block
    /// [2, 3]^2. The same layout ships as `configs/lattice.toml`.
    fn lattice() -> ProblemSpec {
        let mut absorber = Vec::new();
        for i in 0..5usize {
            for j in 0..5usize {
                if (i + j) % 2 == 1 {
                    absorber.push((i as f64, j as f64));
                }
            }
        }
        let abs_boxes = |value: f64| -> Vec<FieldBox> {
            absorber
                .iter()
                .map(|&(x, y)| FieldBox {
                    x0: x,
                    x1: x + 1.0,
                    y0: y,
                    y1: y + 1.0,
                    value,
                    closed: false,
                })
                .collect()
        };
        ProblemSpec {
            name: "lattice".into(),
            domain: Domain {
                x0: 0.0,
                x1: 5.0,
                y0: 0.0,
                y1: 5.0,
            },
            sigma_s: ScalarField::Boxes {
                default: 1.0,
                boxes: abs_boxes(0.0),
            },
            sigma_a: ScalarField::Boxes {
                default: 0.0,
                boxes: abs_boxes(100.0),
            },
            source: ScalarField::Boxes {
                default: 0.0,
                boxes: vec![FieldBox {
                    x0: 2.0,
                    x1: 3.0,
                    y0: 2.0,
                    y1: 3.0,
                    value: 1.0,
                    closed: true,
                }],
            },
        }
    }

    pub fn from_toml_str(s: &str) -> Result<ProblemSpec> {
        toml::from_str(s).map_err(|e| Error::Config(format!("problem file: {e}")))
    }

    pub fn from_path(path: &std::path::Path) -> Result<ProblemSpec> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

/// Pointwise material samples on one grid: values at grid points and at the
/// half points used by the flux stencils.
#[derive(Debug, Clone)]
pub struct MaterialSamples {
    pub nx: usize,
    pub ny: usize,
    /// (nx + 1) * (ny + 1), x-fastest.
    pub sigma_t_nodes: Vec<f64>,
    /// Samples at (i + 1/2, j): nx * (ny + 1), x-fastest.
    pub sigma_t_half_x: Vec<f64>,
    /// Samples at (i, j + 1/2): (nx + 1) * ny, x-fastest.
    pub sigma_t_half_y: Vec<f64>,
    pub sigma_s_nodes: Vec<f64>,
    pub sigma_a_nodes: Vec<f64>,
    pub source_nodes: Vec<f64>,
}

impl MaterialSamples {
    pub fn sigma_t_node(&self, ix: usize, iy: usize) -> f64 {
        self.sigma_t_nodes[ix + (self.nx + 1) * iy]
    }

    pub fn sigma_t_half_x(&self, ix: usize, iy: usize) -> f64 {
        // sample at (x_{ix + 1/2}, y_{iy})
        self.sigma_t_half_x[ix + self.nx * iy]
    }

    pub fn sigma_t_half_y(&self, ix: usize, iy: usize) -> f64 {
        // sample at (x_{ix}, y_{iy + 1/2})
        self.sigma_t_half_y[ix + (self.nx + 1) * iy]
    }

    pub fn node(&self, field: &[f64], ix: usize, iy: usize) -> f64 {
        field[ix + (self.nx + 1) * iy]
    }
}

/// Evaluates the cross sections and source pointwise on the grid, failing if
/// any total cross section sample is not strictly positive (the second-order
/// form divides by sigma_t).
pub fn sample_materials(spec: &ProblemSpec, grid: &SpatialGrid) -> Result<MaterialSamples> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut sigma_t_nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut sigma_s_nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut sigma_a_nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut source_nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    let check = |st: f64, x: f64, y: f64| -> Result<f64> {
        if st <= 0.0 {
            Err(Error::InvalidMaterial(format!(
                "sigma_t = {st} at ({x}, {y}); second-order form needs sigma_t > 0"
            )))
        } else {
            Ok(st)
        }
    };
    for iy in 0..=ny {
        for ix in 0..=nx {
            let (x, y) = (grid.x(ix), grid.y(iy));
            let ss = spec.sigma_s(x, y);
            let sa = spec.sigma_a(x, y);
            if ss < 0.0 || sa < 0.0 {
                return Err(Error::InvalidMaterial(format!(
                    "negative cross section at ({x}, {y})"
                )));
            }
            sigma_t_nodes.push(check(ss + sa, x, y)?);
            sigma_s_nodes.push(ss);
            sigma_a_nodes.push(sa);
            source_nodes.push(spec.source(x, y));
        }
    }
    let mut sigma_t_half_x = Vec::with_capacity(nx * (ny + 1));
    for iy in 0..=ny {
        for ix in 0..nx {
            let (x, y) = (grid.x_at(ix as f64 + 0.5), grid.y(iy));
            sigma_t_half_x.push(check(spec.sigma_t(x, y), x, y)?);
        }
    }
    let mut sigma_t_half_y = Vec::with_capacity((nx + 1) * ny);
    for iy in 0..ny {
        for ix in 0..=nx {
            let (x, y) = (grid.x(ix), grid.y_at(iy as f64 + 0.5));
            sigma_t_half_y.push(check(spec.sigma_t(x, y), x, y)?);
        }
    }
    Ok(MaterialSamples {
        nx,
        ny,
        sigma_t_nodes,
        sigma_t_half_x,
        sigma_t_half_y,
        sigma_s_nodes,
        sigma_a_nodes,
        source_nodes,
    })
}
