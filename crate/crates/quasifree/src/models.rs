//! Catalog of concrete systems, each compiled into a thermal context ready
//! for the check suites: free fields on flat space-time, Bose-gas
//! dispersions with an optional condensate, the harmonic crystal on a lattice
//! torus, and the wedge (boost) system.

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gauss::GaussLegendre;
use crate::spectral::{apply_function, GeneratorModel, MatrixModel, QuadratureModel, TestVector};
use crate::thermal::{Beta, ThermalContext};

/// Which process a flat-space context describes; the weight enters the
/// spectral measure as 1/omega(p) (field) or omega(p) (momentum).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessWeight {
    Field,
    Momentum,
}

/// Radial quadrature knobs: node count and momentum cutoff. The default
/// cutoff keeps the Gaussian-profile integrand tail below 1e-12 of the
/// integral for profile widths up to a = 2.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    pub n_nodes: usize,
    pub p_max: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            n_nodes: 256,
            p_max: 14.0,
        }
    }
}

/// Bose-matter dispersion relations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoseDispersion {
    /// p^2 + mu, mu > 0.
    Standard { mu: f64 },
    /// sqrt(p^2 + m^2), m > 0.
    Semirelativistic { mass: f64 },
    /// p^2; gapless, admissible only together with a condensate.
    Critical,
}

impl BoseDispersion {
    pub fn eval(&self, p: f64) -> f64 {
        match self {
            BoseDispersion::Standard { mu } => p * p + mu,
            BoseDispersion::Semirelativistic { mass } => (p * p + mass * mass).sqrt(),
            BoseDispersion::Critical => p * p,
        }
    }

    pub fn gap(&self) -> f64 {
        match self {
            BoseDispersion::Standard { mu } => *mu,
            BoseDispersion::Semirelativistic { mass } => *mass,
            BoseDispersion::Critical => 0.0,
        }
    }
}

/// Surface area of the unit sphere in R^d: 2 pi^{d/2} / Gamma(d/2).
pub fn unit_sphere_area(d: usize) -> f64 {
    // Gamma at integer and half-integer arguments by the recurrence.
    fn gamma_half(two_x: usize) -> f64 {
        match two_x {
            1 => std::f64::consts::PI.sqrt(),
            2 => 1.0,
            n => (n as f64 / 2.0 - 1.0) * gamma_half(n - 2),
        }
    }
    2.0 * std::f64::consts::PI.powf(d as f64 / 2.0) / gamma_half(d)
}

fn radial_quadrature(
    space_dim: usize,
    quad: QuadratureConfig,
    dispersion: impl Fn(f64) -> f64,
    kernel_weight: impl Fn(f64) -> f64,
) -> Result<QuadratureModel> {
    if space_dim == 0 {
        return Err(Error::ModelBuild("space dimension must be positive".into()));
    }
    if quad.n_nodes < 2 {
        return Err(Error::ModelBuild("need at least two quadrature nodes".into()));
    }
    if quad.p_max.is_nan() || quad.p_max <= 0.0 {
        return Err(Error::ModelBuild("momentum cutoff must be positive".into()));
    }
    let rule = GaussLegendre::new(quad.n_nodes);
    let (nodes, gl_weights) = rule.rescaled(0.0, quad.p_max);
    let area = unit_sphere_area(space_dim);
    let mut weights = Vec::with_capacity(nodes.len());
    let mut eigenvalues = Vec::with_capacity(nodes.len());
    for (&p, &w) in nodes.iter().zip(&gl_weights) {
        weights.push(w * area * p.powi(space_dim as i32 - 1) * kernel_weight(p));
        eigenvalues.push(dispersion(p));
    }
    QuadratureModel::new(space_dim, nodes, weights, eigenvalues)
}

/// Flat space-time with mass m > 0: dispersion omega(p) = sqrt(p^2 + m^2),
/// spectral measure weighted by 1/omega (field process) or omega (momentum
/// process).
pub fn build_minkowski(
    space_dim: usize,
    mass: f64,
    weight: ProcessWeight,
    quad: QuadratureConfig,
    beta: Beta,
) -> Result<ThermalContext> {
    if mass.is_nan() || mass <= 0.0 {
        return Err(Error::ModelBuild(format!("mass must be positive, got {mass}")));
    }
    let omega = move |p: f64| (p * p + mass * mass).sqrt();
    let model = radial_quadrature(space_dim, quad, omega, |p| match weight {
        ProcessWeight::Field => 1.0 / omega(p),
        ProcessWeight::Momentum => omega(p),
    })?;
    Ok(ThermalContext::new(GeneratorModel::Quadrature(model), beta))
}

/// Bose matter with the given dispersion; `condensate >= 0` adds the
/// time-constant zero-momentum mode. A gapless dispersion without a
/// condensate is rejected.
pub fn build_bose_gas(
    space_dim: usize,
    dispersion: BoseDispersion,
    condensate: f64,
    quad: QuadratureConfig,
    beta: Beta,
) -> Result<ThermalContext> {
    if condensate < 0.0 {
        return Err(Error::ModelBuild(format!(
            "condensate weight must be nonnegative, got {condensate}"
        )));
    }
    let gap = dispersion.gap();
    if gap <= 0.0 && condensate == 0.0 {
        return Err(Error::GaplessDispersion { gap });
    }
    if gap < 0.0 {
        return Err(Error::GaplessDispersion { gap });
    }
    let model = radial_quadrature(space_dim, quad, |p| dispersion.eval(p), |_| 1.0)?;
    Ok(ThermalContext::new(GeneratorModel::Quadrature(model), beta).with_condensate(condensate))
}

/// Coupling of the harmonic crystal.
#[derive(Debug, Clone)]
pub enum CrystalCoupling {
    /// A = 0: independent periodized Ornstein-Uhlenbeck sites.
    Decoupled,
    /// A = strength * (discrete Laplacian on the lattice torus).
    Laplacian { strength: f64 },
    /// Explicit real symmetric PSD matrix on the sites.
    Matrix(DMatrix<f64>),
}

/// Nearest-neighbor Laplacian on the side^dim torus (positive semi-definite).
pub fn torus_laplacian(side: usize, dim: usize, strength: f64) -> DMatrix<f64> {
    let sites = side.pow(dim as u32);
    let mut a = DMatrix::zeros(sites, sites);
    let stride = |axis: usize| side.pow(axis as u32);
    for site in 0..sites {
        for axis in 0..dim {
            let s = stride(axis);
            let coord = (site / s) % side;
            for step in [1usize, side - 1] {
                let neighbor = site - coord * s + ((coord + step) % side) * s;
                a[(site, site)] += strength;
                a[(site, neighbor)] -= strength;
            }
        }
    }
    a
}

/// Harmonic crystal on the side^dim torus: h = 1/2 + A with A the coupling.
pub fn build_crystal(
    side: usize,
    dim: usize,
    coupling: CrystalCoupling,
    beta: Beta,
) -> Result<ThermalContext> {
    if side < 1 || dim < 1 {
        return Err(Error::ModelBuild(format!(
            "lattice needs side >= 1 and dim >= 1, got side {side}, dim {dim}"
        )));
    }
    let sites = side.pow(dim as u32);
    let a = match coupling {
        CrystalCoupling::Decoupled => DMatrix::zeros(sites, sites),
        CrystalCoupling::Laplacian { strength } => {
            if strength < 0.0 {
                return Err(Error::NonPsdCoupling {
                    min_eigenvalue: -2.0 * dim as f64 * strength.abs(),
                });
            }
            torus_laplacian(side, dim, strength)
        }
        CrystalCoupling::Matrix(a) => {
            if a.nrows() != sites || a.ncols() != sites {
                return Err(Error::DimensionMismatch {
                    expected: sites,
                    got: a.nrows(),
                });
            }
            a
        }
    };
    let scale = a.amax().max(1.0);
    let eig = nalgebra::SymmetricEigen::new(0.5 * (&a + a.transpose()));
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-10 * scale {
        return Err(Error::NonPsdCoupling {
            min_eigenvalue: min,
        });
    }
    let h = DMatrix::identity(sites, sites) * 0.5 + a;
    let model = MatrixModel::eigendecompose(h)?;
    Ok(ThermalContext::new(GeneratorModel::Matrix(model), beta))
}

/// Default inverse temperature of the wedge system.
pub const RINDLER_BETA: f64 = 2.0 * std::f64::consts::PI;

/// The boost generator on the wedge: A = -d^2/dx^2 + e^{2x} m^2 discretized
/// by central differences with Dirichlet ends on [-half_width, half_width];
/// the model generator is h = A^{1/2}. Defaults to beta = 2 pi.
pub fn build_rindler(
    mass: f64,
    half_width: f64,
    grid_points: usize,
    beta: Option<Beta>,
) -> Result<ThermalContext> {
    if !mass.is_finite() || mass <= 0.0 || !half_width.is_finite() || half_width <= 0.0 {
        return Err(Error::ModelBuild(
            "wedge model needs positive mass and half width".into(),
        ));
    }
    if grid_points < 3 {
        return Err(Error::ModelBuild(format!(
            "need at least 3 grid points, got {grid_points}"
        )));
    }
    let a = rindler_operator(mass, half_width, grid_points);
    let a_model = MatrixModel::eigendecompose(a)?;
    let sqrt_eigs: Vec<f64> = a_model.eigenvalues().iter().map(|v| v.sqrt()).collect();
    let model = MatrixModel::from_eigensystem(sqrt_eigs, a_model.eigenvectors().clone())?;
    let beta = beta.unwrap_or(Beta::Finite(RINDLER_BETA));
    Ok(ThermalContext::new(GeneratorModel::Matrix(model), beta))
}

/// The discretized wedge operator A itself (exposed for refinement studies).
pub fn rindler_operator(mass: f64, half_width: f64, grid_points: usize) -> DMatrix<f64> {
    let dx = 2.0 * half_width / (grid_points as f64 + 1.0);
    let mut a = DMatrix::zeros(grid_points, grid_points);
    for j in 0..grid_points {
        let x = -half_width + (j as f64 + 1.0) * dx;
        a[(j, j)] = 2.0 / (dx * dx) + (2.0 * x).exp() * mass * mass;
        if j + 1 < grid_points {
            a[(j, j + 1)] = -1.0 / (dx * dx);
            a[(j + 1, j)] = -1.0 / (dx * dx);
        }
    }
    a
}

/// Boost-process indexing: folds the extra A^{-1/2} kernel weight into the
/// test vector by applying h^{-1/2}, so plain kernels of the returned vector
/// carry the wedge covariance weight.
pub fn boost_index(ctx: &ThermalContext, f: &TestVector) -> Result<TestVector> {
    apply_function(&ctx.model, |l| 1.0 / l.sqrt(), f)
}

/// Centered Gaussian test profile e^{-a |x|^2} for quadrature models: the
/// radial transform is scale (2a)^{-d/2} e^{-p^2/(4a)}.
pub fn gaussian_profile(model: &GeneratorModel, a: f64, scale: f64) -> Result<TestVector> {
    let q = match model {
        GeneratorModel::Quadrature(q) => q,
        GeneratorModel::Matrix(_) => return Err(Error::MatrixModelUnsupported),
    };
    if a.is_nan() || a <= 0.0 {
        return Err(Error::ModelBuild(format!("profile width must be positive, got {a}")));
    }
    let norm = scale * (2.0 * a).powf(-(q.space_dim() as f64) / 2.0);
    let mut v = TestVector::new(
        q.nodes()
            .iter()
            .map(|&p| num_complex::Complex64::new(norm * (-p * p / (4.0 * a)).exp(), 0.0))
            .collect(),
    );
    v.zero_moment = num_complex::Complex64::new(norm, 0.0);
    Ok(v)
}

/// Catalog variants with their parameters, as ingested from config.
#[derive(Debug, Clone)]
pub enum ModelVariant {
    Minkowski {
        space_dim: usize,
        mass: f64,
        weight: ProcessWeight,
        quad: QuadratureConfig,
    },
    BoseGas {
        space_dim: usize,
        dispersion: BoseDispersion,
        condensate: f64,
        quad: QuadratureConfig,
    },
    HarmonicCrystal {
        side: usize,
        space_dim: usize,
        coupling_strength: f64,
    },
    Rindler {
        mass: f64,
        half_width: f64,
        grid_points: usize,
    },
}

/// A catalog model plus inverse temperature; `build` compiles it into a
/// context and `content_hash` digests the parameters for report metadata.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub variant: ModelVariant,
    pub beta: Beta,
}

impl ModelConfig {
    pub fn build(&self) -> Result<ThermalContext> {
        match &self.variant {
            ModelVariant::Minkowski {
                space_dim,
                mass,
                weight,
                quad,
            } => build_minkowski(*space_dim, *mass, *weight, *quad, self.beta),
            ModelVariant::BoseGas {
                space_dim,
                dispersion,
                condensate,
                quad,
            } => build_bose_gas(*space_dim, *dispersion, *condensate, *quad, self.beta),
            ModelVariant::HarmonicCrystal {
                side,
                space_dim,
                coupling_strength,
            } => {
                let coupling = if *coupling_strength == 0.0 {
                    CrystalCoupling::Decoupled
                } else {
                    CrystalCoupling::Laplacian {
                        strength: *coupling_strength,
                    }
                };
                build_crystal(*side, *space_dim, coupling, self.beta)
            }
            ModelVariant::Rindler {
                mass,
                half_width,
                grid_points,
            } => build_rindler(*mass, *half_width, *grid_points, Some(self.beta)),
        }
    }

    /// Canonical parameter string, the input of the content hash.
    pub fn canonical(&self) -> String {
        let body = match &self.variant {
            ModelVariant::Minkowski {
                space_dim,
                mass,
                weight,
                quad,
            } => format!(
                "minkowski;d={space_dim};m={mass:.17e};weight={};nodes={};pmax={:.17e}",
                match weight {
                    ProcessWeight::Field => "field",
                    ProcessWeight::Momentum => "momentum",
                },
                quad.n_nodes,
                quad.p_max
            ),
            ModelVariant::BoseGas {
                space_dim,
                dispersion,
                condensate,
                quad,
            } => format!(
                "bose_gas;d={space_dim};dispersion={};c={condensate:.17e};nodes={};pmax={:.17e}",
                match dispersion {
                    BoseDispersion::Standard { mu } => format!("standard(mu={mu:.17e})"),
                    BoseDispersion::Semirelativistic { mass } =>
                        format!("semirelativistic(m={mass:.17e})"),
                    BoseDispersion::Critical => "critical".to_string(),
                },
                quad.n_nodes,
                quad.p_max
            ),
            ModelVariant::HarmonicCrystal {
                side,
                space_dim,
                coupling_strength,
            } => format!(
                "harmonic_crystal;side={side};d={space_dim};coupling={coupling_strength:.17e}"
            ),
            ModelVariant::Rindler {
                mass,
                half_width,
                grid_points,
            } => format!(
                "rindler;m={mass:.17e};half_width={half_width:.17e};grid={grid_points}"
            ),
        };
        format!("{body};beta={}", self.beta)
    }

    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        let mut hex = String::with_capacity(16);
        for byte in digest.iter().take(8) {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }

    pub fn variant_name(&self) -> &'static str {
        match self.variant {
            ModelVariant::Minkowski { .. } => "minkowski",
            ModelVariant::BoseGas { .. } => "bose_gas",
            ModelVariant::HarmonicCrystal { .. } => "harmonic_crystal",
            ModelVariant::Rindler { .. } => "rindler",
        }
    }
}
