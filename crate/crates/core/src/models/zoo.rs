//! Concrete coefficient models.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use super::{CoefficientModel, Frame, Kernel, MeasureDependence, Statistic};
use crate::error::{Error, Result};
use crate::measures::norm_sq;

/// Gradient of a potential, `x -> grad V(x)`.
pub type VectorField = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// Two-point kernel `(x, z) -> grad_x W(x, z)`.
pub type PairKernel = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;
/// Bounded scalar kernel `(x, z) -> b(x, z)`.
pub type BoundedKernel = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

fn identity_diffusion(scale: f64, dim: usize, out: &mut [f64]) {
    out.fill(0.0);
    for i in 0..dim {
        out[i * dim + i] = scale;
    }
}

// ---------------------------------------------------------------------------
// Cubic drift with moment feedback.

struct Cubic;

impl Kernel for Cubic {
    fn drift(&self, _t: f64, x: &[f64], mu: &Frame, out: &mut [f64]) {
        out[0] = -x[0] * x[0] * x[0] * mu.summary()[0];
    }

    fn diffusion(&self, _t: f64, x: &[f64], _mu: &Frame, out: &mut [f64]) {
        out[0] = x[0];
    }
}

/// `dX = -X^3 mu(|.|^p) dt + X dW` in one dimension.
///
/// `kappa` defaults to `max(12, 4p)`, the smallest order for which the growth
/// bound `|b|^2 <= K (1 + |x|^kappa + mu(|.|^kappa))` holds.
pub fn model_cubic(p: f64) -> Result<CoefficientModel> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param("p", "must be >= 1"));
    }
    Ok(CoefficientModel::custom(
        "cubic",
        1,
        1,
        (4.0 * p).max(12.0),
        MeasureDependence::Summary(vec![Statistic::AbsMoment(p)]),
        Arc::new(Cubic),
    )
    .with_params([("p", p)]))
}

// ---------------------------------------------------------------------------
// Linear mean-field model with closed-form moments.

struct Linear {
    a: f64,
    c: f64,
    s: f64,
}

impl Kernel for Linear {
    fn drift(&self, _t: f64, x: &[f64], mu: &Frame, out: &mut [f64]) {
        let mean = if self.c != 0.0 { mu.summary()[0] } else { 0.0 };
        out[0] = self.a * x[0] + self.c * mean;
    }

    fn diffusion(&self, _t: f64, _x: &[f64], _mu: &Frame, out: &mut [f64]) {
        out[0] = self.s;
    }
}

/// `dX = (a X + c E[X]) dt + s dW`. The mean solves `m' = (a + c) m` and the
/// second moment `q' = 2 a q + 2 c m^2 + s^2`.
pub fn model_linear_meanfield(a: f64, c: f64, s: f64) -> CoefficientModel {
    let dependence = if c != 0.0 {
        MeasureDependence::Summary(vec![Statistic::Mean])
    } else {
        MeasureDependence::None
    };
    CoefficientModel::custom("linear_meanfield", 1, 1, 2.0, dependence, Arc::new(Linear { a, c, s }))
        .with_params([("a", a), ("c", c), ("s", s)])
}

// ---------------------------------------------------------------------------
// Granular media: confinement plus convolution with an interaction potential.

/// Interaction gradient `grad W` for the granular model.
#[derive(Clone)]
pub enum Interaction {
    /// `grad W(x) = slope * x + offset`; the convolution reduces to the mean.
    Affine { slope: f64, offset: Vec<f64> },
    /// General gradient, averaged over the atoms.
    Gradient(VectorField),
}

struct Granular {
    dim: usize,
    grad_v: VectorField,
    interaction: Interaction,
    noise: f64,
}

impl Kernel for Granular {
    fn drift(&self, _t: f64, x: &[f64], mu: &Frame, out: &mut [f64]) {
        (self.grad_v)(x, out);
        match &self.interaction {
            Interaction::Affine { slope, offset } => {
                for i in 0..self.dim {
                    let centred = if *slope != 0.0 {
                        slope * (x[i] - mu.summary()[i])
                    } else {
                        0.0
                    };
                    out[i] = -out[i] - centred - offset[i];
                }
            }
            Interaction::Gradient(grad_w) => {
                let mut diff = vec![0.0; self.dim];
                let mut g = vec![0.0; self.dim];
                let mut acc = vec![0.0; self.dim];
                for (w, z) in mu.atoms().atoms() {
                    for ((d, xi), zi) in diff.iter_mut().zip(x).zip(z) {
                        *d = xi - zi;
                    }
                    grad_w(&diff, &mut g);
                    for (a, gi) in acc.iter_mut().zip(&g) {
                        *a += w * gi;
                    }
                }
                for (o, a) in out.iter_mut().zip(&acc) {
                    *o = -*o - a;
                }
            }
        }
    }

    fn diffusion(&self, _t: f64, _x: &[f64], _mu: &Frame, out: &mut [f64]) {
        identity_diffusion(self.noise, self.dim, out);
    }
}

/// `dX = [-grad V(X) - (grad W * mu)(X)] dt + sqrt(2) noise_scale dB`.
pub fn model_granular(
    dim: usize,
    grad_v: VectorField,
    interaction: Interaction,
    noise_scale: f64,
) -> Result<CoefficientModel> {
    if dim == 0 {
        return Err(Error::param("dim", "must be at least 1"));
    }
    let dependence = match &interaction {
        Interaction::Affine { slope, offset } => {
            if offset.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: offset.len(),
                });
            }
            if *slope != 0.0 {
                MeasureDependence::Summary(vec![Statistic::Mean])
            } else {
                MeasureDependence::None
            }
        }
        Interaction::Gradient(_) => MeasureDependence::Atoms,
    };
    Ok(CoefficientModel::custom(
        "granular",
        dim,
        dim,
        2.0,
        dependence,
        Arc::new(Granular {
            dim,
            grad_v,
            interaction,
            noise: SQRT_2 * noise_scale,
        }),
    )
    .with_params([("noise_scale", noise_scale)]))
}

/// Curie-Weiss lattice model: `V(x) = beta (x^4/4 - x^2/2)`, `W(x) = -beta K x`.
pub fn curie_weiss(beta: f64, coupling: f64, noise_scale: f64) -> CoefficientModel {
    let grad_v: VectorField = Arc::new(move |x, out| out[0] = beta * (x[0] * x[0] * x[0] - x[0]));
    let interaction = Interaction::Affine {
        slope: 0.0,
        offset: vec![-beta * coupling],
    };
    let mut model = model_granular(1, grad_v, interaction, noise_scale)
        .expect("curie-weiss preset is one-dimensional");
    model.id = "curie_weiss".into();
    model
        .with_params([("beta", beta), ("k", coupling)])
        .with_kappa(6.0)
}

// ---------------------------------------------------------------------------
// Plasma-type interaction with a two-point kernel.

enum PlasmaInteraction {
    CuckerSmale { beta: f64 },
    General(PairKernel),
}

struct Plasma {
    dim: usize,
    grad_v: VectorField,
    interaction: PlasmaInteraction,
}

impl Kernel for Plasma {
    fn drift(&self, _t: f64, x: &[f64], mu: &Frame, out: &mut [f64]) {
        (self.grad_v)(x, out);
        match &self.interaction {
            PlasmaInteraction::CuckerSmale { beta } => {
                // Linear in z: the atom average is the mean.
                let damp = (1.0 + norm_sq(x)).powf(*beta);
                for (o, m) in out.iter_mut().zip(mu.summary()) {
                    *o = -*o - m / damp;
                }
            }
            PlasmaInteraction::General(kernel) => {
                let mut g = vec![0.0; self.dim];
                let mut acc = vec![0.0; self.dim];
                for (w, z) in mu.atoms().atoms() {
                    kernel(x, z, &mut g);
                    for (a, gi) in acc.iter_mut().zip(&g) {
                        *a += w * gi;
                    }
                }
                for (o, a) in out.iter_mut().zip(&acc) {
                    *o = -*o - a;
                }
            }
        }
    }

    fn diffusion(&self, _t: f64, _x: &[f64], _mu: &Frame, out: &mut [f64]) {
        identity_diffusion(SQRT_2, self.dim, out);
    }
}

/// `dX = [-grad V(X) - int grad_x W(X, z) mu(dz)] dt + sqrt(2) dB`.
pub fn model_plasma(dim: usize, grad_v: VectorField, grad_x_w: PairKernel) -> Result<CoefficientModel> {
    if dim == 0 {
        return Err(Error::param("dim", "must be at least 1"));
    }
    Ok(CoefficientModel::custom(
        "plasma",
        dim,
        dim,
        2.0,
        MeasureDependence::Atoms,
        Arc::new(Plasma {
            dim,
            grad_v,
            interaction: PlasmaInteraction::General(grad_x_w),
        }),
    ))
}

/// Cucker-Smale kernel `grad_x W(x, z) = z / (1 + |x|^2)^beta` with
/// confinement `grad V(x) = confinement * x`.
pub fn cucker_smale(beta: f64, dim: usize, confinement: f64) -> Result<CoefficientModel> {
    if !(beta >= 0.0) {
        return Err(Error::param("beta", "must be >= 0"));
    }
    if dim == 0 {
        return Err(Error::param("dim", "must be at least 1"));
    }
    let grad_v: VectorField = Arc::new(move |x, out| {
        for (o, xi) in out.iter_mut().zip(x) {
            *o = confinement * xi;
        }
    });
    Ok(CoefficientModel::custom(
        "cucker_smale",
        dim,
        dim,
        2.0,
        MeasureDependence::Summary(vec![Statistic::Mean]),
        Arc::new(Plasma {
            dim,
            grad_v,
            interaction: PlasmaInteraction::CuckerSmale { beta },
        }),
    )
    .with_params([("beta", beta), ("dim", dim as f64), ("confinement", confinement)]))
}

// ---------------------------------------------------------------------------
// Kinetic (position, velocity) system.

struct Kinetic {
    half: usize,
    grad_u: VectorField,
    grad_w: VectorField,
}

impl Kernel for Kinetic {
    fn drift(&self, _t: f64, state: &[f64], mu: &Frame, out: &mut [f64]) {
        let d = self.half;
        let (x, v) = state.split_at(d);
        let (pos_out, vel_out) = out.split_at_mut(d);
        pos_out.copy_from_slice(v);
        (self.grad_u)(x, vel_out);
        let mut diff = vec![0.0; d];
        let mut g = vec![0.0; d];
        let mut acc = vec![0.0; d];
        for (w, atom) in mu.atoms().atoms() {
            for ((df, xi), yi) in diff.iter_mut().zip(x).zip(&atom[..d]) {
                *df = xi - yi;
            }
            (self.grad_w)(&diff, &mut g);
            for (a, gi) in acc.iter_mut().zip(&g) {
                *a += w * gi;
            }
        }
        for ((o, vi), a) in vel_out.iter_mut().zip(v).zip(&acc) {
            *o = -vi - *o - a;
        }
    }

    fn diffusion(&self, _t: f64, _x: &[f64], _mu: &Frame, out: &mut [f64]) {
        let d = self.half;
        out.fill(0.0);
        for i in 0..d {
            out[(d + i) * d + i] = SQRT_2;
        }
    }
}

/// `dX = V dt`, `dV = [-V - grad U(X) - (grad W * mu_X)(X)] dt + sqrt(2) dB`
/// on the state `(X, V)` of dimension `total_dim = 2d`. The measure argument
/// is read through the position block of each atom.
pub fn model_kinetic(
    total_dim: usize,
    grad_u: VectorField,
    grad_w: VectorField,
) -> Result<CoefficientModel> {
    if total_dim == 0 || total_dim % 2 != 0 {
        return Err(Error::param(
            "dim",
            format!("kinetic state dimension must be even and positive, got {total_dim}"),
        ));
    }
    let half = total_dim / 2;
    Ok(CoefficientModel::custom(
        "kinetic",
        total_dim,
        half,
        2.0,
        MeasureDependence::Atoms,
        Arc::new(Kinetic { half, grad_u, grad_w }),
    ))
}

/// D'Orsogna potential `W(x) = -C1 e^{-|x|^2/l1^2} + C2 e^{-|x|^2/l2^2}`, `U = 0`,
/// with position dimension `dim`.
pub fn dorsogna(c1: f64, c2: f64, l1: f64, l2: f64, dim: usize) -> Result<CoefficientModel> {
    if !(l1 > 0.0 && l2 > 0.0) {
        return Err(Error::param("l1/l2", "length scales must be positive"));
    }
    let grad_w: VectorField = Arc::new(move |x, out| {
        let r2 = norm_sq(x);
        let factor = 2.0 * c1 / (l1 * l1) * (-r2 / (l1 * l1)).exp()
            - 2.0 * c2 / (l2 * l2) * (-r2 / (l2 * l2)).exp();
        for (o, xi) in out.iter_mut().zip(x) {
            *o = factor * xi;
        }
    });
    let grad_u: VectorField = Arc::new(|_, out| out.fill(0.0));
    let mut model = model_kinetic(2 * dim, grad_u, grad_w)?;
    model.id = "dorsogna".into();
    Ok(model.with_params([
        ("c1", c1),
        ("c2", c2),
        ("l1", l1),
        ("l2", l2),
        ("dim", dim as f64),
    ]))
}

// ---------------------------------------------------------------------------
// Bounded interaction with sine diffusion.

struct BoundedSin {
    btilde: BoundedKernel,
}

impl Kernel for BoundedSin {
    fn drift(&self, _t: f64, x: &[f64], mu: &Frame, out: &mut [f64]) {
        out[0] = mu
            .atoms()
            .atoms()
            .map(|(w, z)| w * (self.btilde)(x[0], z[0]))
            .sum();
    }

    fn diffusion(&self, _t: f64, x: &[f64], _mu: &Frame, out: &mut [f64]) {
        out[0] = x[0].sin();
    }
}

/// `dX = int b(X, z) mu(dz) dt + sin(X) dW` for a kernel bounded by `bound`.
pub fn model_bounded_sin(btilde: BoundedKernel, bound: f64) -> Result<CoefficientModel> {
    if !(bound >= 0.0 && bound.is_finite()) {
        return Err(Error::param("bound", "must be finite and nonnegative"));
    }
    Ok(CoefficientModel::custom(
        "bounded_sin",
        1,
        1,
        2.0,
        MeasureDependence::Atoms,
        Arc::new(BoundedSin { btilde }),
    )
    .with_params([("bound", bound)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::ParticleEnsemble;

    fn eval(model: &CoefficientModel, x: &[f64], atoms: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mu = ParticleEnsemble::uniform(model.dim(), atoms.to_vec()).unwrap();
        model.eval(0.0, x, &model.frame(&mu))
    }

    #[test]
    fn cubic_examples() {
        let m = model_cubic(1.0).unwrap();
        assert_eq!(eval(&m, &[1.0], &[2.0]), (vec![-2.0], vec![1.0]));
        assert_eq!(eval(&m, &[0.0], &[5.0, -1.0]), (vec![0.0], vec![0.0]));
        let m2 = model_cubic(2.0).unwrap();
        assert_eq!(eval(&m2, &[2.0], &[0.0, 2.0]).0, vec![-16.0]);
        assert!(model_cubic(0.5).is_err());
    }

    #[test]
    fn curie_weiss_examples() {
        let m = curie_weiss(1.0, 1.0, 1.0);
        assert_eq!(eval(&m, &[0.0], &[0.0]).0, vec![1.0]);
        assert_eq!(eval(&m, &[1.0], &[1.0]).0, vec![1.0]);
        assert_eq!(eval(&m, &[1.0], &[1.0]).1, vec![SQRT_2]);
    }

    #[test]
    fn zero_granular_is_pure_noise() {
        let zero: VectorField = Arc::new(|_, out| out.fill(0.0));
        let m = model_granular(2, zero.clone(), Interaction::Gradient(zero), 1.0).unwrap();
        let (b, s) = eval(&m, &[0.3, -2.0], &[1.0, 1.0, 4.0, 0.0]);
        assert_eq!(b, vec![0.0, 0.0]);
        assert_eq!(s, vec![SQRT_2, 0.0, 0.0, SQRT_2]);
    }

    #[test]
    fn cucker_smale_examples() {
        let m0 = cucker_smale(0.0, 1, 0.0).unwrap();
        assert_eq!(eval(&m0, &[7.0], &[3.0]).0, vec![-3.0]);
        assert_eq!(eval(&m0, &[7.0], &[-1.0, 1.0]).0, vec![0.0]);
        let m1 = cucker_smale(1.0, 1, 0.0).unwrap();
        assert_eq!(eval(&m1, &[1.0], &[2.0]).0, vec![-1.0]);
    }

    #[test]
    fn general_plasma_matches_cucker_smale_preset() {
        let beta = 0.7;
        let kernel: PairKernel = Arc::new(move |x: &[f64], z: &[f64], out: &mut [f64]| {
            let damp = (1.0 + norm_sq(x)).powf(beta);
            for (o, zi) in out.iter_mut().zip(z) {
                *o = zi / damp;
            }
        });
        let zero: VectorField = Arc::new(|_, out| out.fill(0.0));
        let general = model_plasma(2, zero, kernel).unwrap();
        let preset = cucker_smale(beta, 2, 0.0).unwrap();
        let atoms = [0.5, 1.0, -2.0, 0.25, 3.0, 3.0];
        let a = eval(&general, &[0.4, -0.9], &atoms).0;
        let b = eval(&preset, &[0.4, -0.9], &atoms).0;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn kinetic_examples() {
        let zero: VectorField = Arc::new(|_, out| out.fill(0.0));
        let m = model_kinetic(2, zero.clone(), zero).unwrap();
        let (b, s) = eval(&m, &[0.0, 1.0], &[5.0, 5.0]);
        assert_eq!(b, vec![1.0, -1.0]);
        assert_eq!(s, vec![0.0, SQRT_2]);
        let zero: VectorField = Arc::new(|_, out| out.fill(0.0));
        assert!(model_kinetic(3, zero.clone(), zero).is_err());

        let d = dorsogna(1.0, 0.5, 1.0, 0.5, 1).unwrap();
        // All atoms at the particle's position: no interaction.
        assert_eq!(eval(&d, &[0.7, 0.2], &[0.7, 9.0, 0.7, -3.0]).0, vec![0.2, -0.2]);
        let d1 = dorsogna(1.0, 0.0, 1.0, 1.0, 1).unwrap();
        let v = 0.3;
        let b = eval(&d1, &[1.0, v], &[0.0, 0.0]).0;
        assert!((b[1] - (-v - 2.0 * (-1.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn bounded_sin_examples() {
        let zero = model_bounded_sin(Arc::new(|_, _| 0.0), 0.0).unwrap();
        assert_eq!(eval(&zero, &[0.0], &[1.0]), (vec![0.0], vec![0.0]));
        let tanh = model_bounded_sin(Arc::new(|_, z: f64| z.tanh()), 1.0).unwrap();
        assert_eq!(eval(&tanh, &[2.0], &[0.0]).0, vec![0.0]);
        let s = eval(&tanh, &[std::f64::consts::FRAC_PI_2], &[0.0]).1[0];
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn linear_meanfield_frame() {
        let m = model_linear_meanfield(-1.0, 0.5, 0.3);
        assert_eq!(eval(&m, &[2.0], &[1.0, 3.0]), (vec![-1.0], vec![0.3]));
        assert!(model_linear_meanfield(-1.0, 0.0, 0.3).is_measure_independent());
    }

    #[test]
    fn noise_factor_scales_diffusion_only() {
        let m = curie_weiss(1.0, 1.0, 1.0).with_noise_factor(0.5);
        let (b, s) = eval(&m, &[0.0], &[0.0]);
        assert_eq!(b, vec![1.0]);
        assert_eq!(s, vec![SQRT_2 * 0.5]);
    }
}
