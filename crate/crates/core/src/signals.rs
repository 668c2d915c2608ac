//! Regressor and observation-noise generators.
//!
//! All randomness is counter based: the draw for sensor `i` at step `k` of a
//! given stream kind comes from a ChaCha8 generator keyed by
//! `sub_seed(master, i, kind)` and positioned on stream `k`. Two generators
//! built from the same master seed therefore agree draw for draw regardless of
//! the order in which they are advanced, and the regressor (`xi`) and noise
//! (`eps`) streams never share key material.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg;

/// Any produced regressor component beyond this magnitude is an overflow.
pub const REGRESSOR_LIMIT: f64 = 1e150;

/// How many standard deviations of `xi` the pre-run growth bound allows for.
const GROWTH_BOUND_SIGMAS: f64 = 10.0;

pub mod seeding {
    //! `sub_seed(master, sensor, kind) = mix(mix(mix(master) ^ tag(kind)) ^ sensor)`
    //! with `mix` the SplitMix64 finalizer. Run `r` of an experiment uses
    //! `run_seed(master, r) = mix(master ^ mix(r + 0x5EED))` as its master.

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum StreamKind {
        /// Scalar inputs `xi` driving a state-space regressor model.
        StateInput,
        /// Components of i.i.d. Gaussian regressors.
        IidRegressor,
        /// Observation noise `eps`.
        ObservationNoise,
    }

    impl StreamKind {
        pub const fn tag(self) -> u64 {
            match self {
                StreamKind::StateInput => 0x7869_5f69_6e70_7574,
                StreamKind::IidRegressor => 0x7068_695f_6969_6421,
                StreamKind::ObservationNoise => 0x6570_735f_6e6f_6973,
            }
        }
    }

    pub const fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub const fn sub_seed(master: u64, sensor: usize, kind: StreamKind) -> u64 {
        mix(mix(mix(master) ^ kind.tag()) ^ sensor as u64)
    }

    pub const fn run_seed(master: u64, run: usize) -> u64 {
        mix(master ^ mix(run as u64 + 0x5EED))
    }

    /// Generator for the draws of `(sensor, kind)` at step `k`.
    pub fn step_rng(master: u64, sensor: usize, kind: StreamKind, k: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(master, sensor, kind));
        rng.set_stream(k as u64);
        rng
    }
}

use seeding::{step_rng, StreamKind};

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// `u_k = A u_{k-1} + B xi_k`, `phi_k = C u_k` for one sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceRegressorModel {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DMatrix<f64>,
    pub xi_std: f64,
}

impl StateSpaceRegressorModel {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: DMatrix<f64>, xi_std: f64) -> Result<Self> {
        let m = a.nrows();
        if m == 0 || a.ncols() != m || b.len() != m || c.nrows() != m || c.ncols() != m {
            return Err(Error::Dimension(format!(
                "state-space model needs A, C m x m and B of length m; got A {}x{}, B {}, C {}x{}",
                a.nrows(),
                a.ncols(),
                b.len(),
                c.nrows(),
                c.ncols()
            )));
        }
        if !(xi_std >= 0.0 && xi_std.is_finite()) {
            return Err(Error::Invalid(format!("xi_std must be >= 0, got {xi_std}")));
        }
        Ok(Self { a, b, c, xi_std })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Advances the hidden state with input `xi` and returns the regressor.
    pub fn advance(&self, u: &mut DVector<f64>, xi: f64) -> DVector<f64> {
        let next = &self.a * &*u + &self.b * xi;
        *u = next;
        &self.c * &*u
    }

    /// Natural log of a high-probability bound on `max_k ||phi_k||` over
    /// `steps` steps, allowing `|xi| <= 10 xi_std`.
    pub fn log_magnitude_bound(&self, steps: usize) -> Result<f64> {
        if self.xi_std == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let g = linalg::spectral_norm(&self.a)?;
        let (nb, nc) = (self.b.norm(), linalg::spectral_norm(&self.c)?);
        if nb == 0.0 || nc == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        // sum_{l < steps} g^l
        let log_geometric = if g > 1.0 {
            steps as f64 * g.ln() - (g - 1.0).ln()
        } else {
            (steps as f64).ln()
        };
        Ok(nc.ln() + nb.ln() + (GROWTH_BOUND_SIGMAS * self.xi_std).ln() + log_geometric)
    }
}

/// The shipped ensemble: sensor `i` (1-based) excites direction
/// `j = ((i - 1) mod m) + 1` only, with `A = growth I`, `B = e_j` and
/// `C = e_j e_j^T`.
pub fn example1_model(n: usize, m: usize, growth: f64, xi_std: f64) -> Result<Vec<StateSpaceRegressorModel>> {
    if n == 0 || m == 0 {
        return Err(Error::Invalid("example model needs n >= 1 and m >= 1".into()));
    }
    (0..n)
        .map(|i| {
            let j = example1_direction(i, m);
            let a = DMatrix::identity(m, m) * growth;
            let mut b = DVector::zeros(m);
            b[j] = 1.0;
            let mut c = DMatrix::zeros(m, m);
            c[(j, j)] = 1.0;
            StateSpaceRegressorModel::new(a, b, c, xi_std)
        })
        .collect()
}

/// 0-based excited coordinate of 0-based sensor `i`.
pub fn example1_direction(i: usize, m: usize) -> usize {
    i % m
}

#[derive(Debug, Clone)]
enum Source {
    StateSpace { models: Vec<StateSpaceRegressorModel>, states: Vec<DVector<f64>> },
    IidGaussian { std: f64 },
    Constant { vectors: Vec<DVector<f64>> },
    Replay { rows: Vec<Vec<DVector<f64>>> },
}

/// Produces `phi^1_k .. phi^n_k` for `k = 1, 2, ...` in order.
#[derive(Debug, Clone)]
pub struct RegressorStream {
    n: usize,
    m: usize,
    seed: u64,
    source: Source,
    next_k: usize,
    draws: usize,
}

impl RegressorStream {
    /// State-space regressors with hidden states starting at zero.
    pub fn state_space(models: Vec<StateSpaceRegressorModel>, seed: u64) -> Result<Self> {
        let m = models.first().map(|mdl| mdl.dim()).ok_or_else(|| Error::Invalid("no sensors".into()))?;
        if models.iter().any(|mdl| mdl.dim() != m) {
            return Err(Error::Dimension("all sensors must share the regressor dimension".into()));
        }
        let states = vec![DVector::zeros(m); models.len()];
        Ok(Self::with_source(models.len(), m, seed, Source::StateSpace { models, states }))
    }

    pub fn iid_gaussian(n: usize, m: usize, std: f64, seed: u64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Invalid("need n >= 1 and m >= 1".into()));
        }
        if !(std >= 0.0 && std.is_finite()) {
            return Err(Error::Invalid(format!("regressor std must be >= 0, got {std}")));
        }
        Ok(Self::with_source(n, m, seed, Source::IidGaussian { std }))
    }

    /// The same vector for each sensor at every step.
    pub fn constant(vectors: Vec<DVector<f64>>) -> Result<Self> {
        let m = vectors.first().map(|v| v.len()).ok_or_else(|| Error::Invalid("no sensors".into()))?;
        if m == 0 || vectors.iter().any(|v| v.len() != m) {
            return Err(Error::Dimension("constant regressors must share a positive dimension".into()));
        }
        if vectors.iter().flat_map(|v| v.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("constant regressor".into()));
        }
        Ok(Self::with_source(vectors.len(), m, 0, Source::Constant { vectors }))
    }

    /// Replays recorded regressors; `rows[k-1][i]` is `phi^i_k`.
    pub fn replay(rows: Vec<Vec<DVector<f64>>>) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::Invalid("empty replay".into()))?;
        let n = first.len();
        let m = first.first().map(|v| v.len()).unwrap_or(0);
        if n == 0 || m == 0 || rows.iter().any(|r| r.len() != n || r.iter().any(|v| v.len() != m)) {
            return Err(Error::Dimension("replay rows must all be n vectors of length m".into()));
        }
        Ok(Self::with_source(n, m, 0, Source::Replay { rows }))
    }

    fn with_source(n: usize, m: usize, seed: u64, source: Source) -> Self {
        Self { n, m, seed, source, next_k: 1, draws: 0 }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of regressor vectors produced so far.
    pub fn draws(&self) -> usize {
        self.draws
    }

    /// Step the next call to [`step`](Self::step) must ask for.
    pub fn next_step(&self) -> usize {
        self.next_k
    }

    /// Regressors of step `k`. Steps must be requested as `1, 2, 3, ...`.
    pub fn step(&mut self, k: usize) -> Result<Vec<DVector<f64>>> {
        if k != self.next_k {
            return Err(Error::Invalid(format!(
                "regressor stream expected step {}, got {k}",
                self.next_k
            )));
        }
        let (n, m, seed) = (self.n, self.m, self.seed);
        let out: Vec<DVector<f64>> = match &mut self.source {
            Source::StateSpace { models, states } => models
                .iter()
                .zip(states.iter_mut())
                .enumerate()
                .map(|(i, (model, u))| {
                    let xi = if model.xi_std == 0.0 {
                        0.0
                    } else {
                        model.xi_std * standard_normal(&mut step_rng(seed, i, StreamKind::StateInput, k))
                    };
                    model.advance(u, xi)
                })
                .collect(),
            Source::IidGaussian { std } => (0..n)
                .map(|i| {
                    let mut rng = step_rng(seed, i, StreamKind::IidRegressor, k);
                    DVector::from_fn(m, |_, _| *std * standard_normal(&mut rng))
                })
                .collect(),
            Source::Constant { vectors } => vectors.clone(),
            Source::Replay { rows } => rows
                .get(k - 1)
                .cloned()
                .ok_or_else(|| Error::Invalid(format!("replay has only {} steps, asked for {k}", rows.len())))?,
        };
        for (i, phi) in out.iter().enumerate() {
            if phi.iter().any(|x| !x.is_finite() || x.abs() > REGRESSOR_LIMIT) {
                return Err(Error::HorizonOverflow { sensor: i + 1, step: k, limit: REGRESSOR_LIMIT });
            }
        }
        self.next_k += 1;
        self.draws += out.len();
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    GaussianIid,
    Zero,
}

/// Observation noise. `epsilon_exponent` records the growth exponent of the
/// conditional second-moment bound `E(|Xi_{k+1}|^2 | F_k) <= c0 |R_k|^eps`;
/// it is 0 for the i.i.d. generator and is carried for reporting only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub std: f64,
    pub epsilon_exponent: f64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, std: f64, epsilon_exponent: f64) -> Result<Self> {
        if !(std >= 0.0 && std.is_finite()) {
            return Err(Error::Invalid(format!("noise std must be >= 0, got {std}")));
        }
        if !(0.0..1.0).contains(&epsilon_exponent) {
            return Err(Error::Invalid(format!(
                "noise epsilon exponent must lie in [0, 1), got {epsilon_exponent}"
            )));
        }
        Ok(Self { kind, std, epsilon_exponent })
    }

    pub fn gaussian(std: f64) -> Result<Self> {
        Self::new(NoiseKind::GaussianIid, std, 0.0)
    }

    pub fn zero() -> Self {
        Self { kind: NoiseKind::Zero, std: 0.0, epsilon_exponent: 0.0 }
    }
}

/// Noise draws `eps^1 .. eps^n` for step `k`. A pure function of
/// `(model, seed, k, n)`.
pub fn sample_noise(model: &NoiseModel, seed: u64, k: usize, n: usize) -> Vec<f64> {
    match model.kind {
        NoiseKind::Zero => vec![0.0; n],
        NoiseKind::GaussianIid if model.std == 0.0 => vec![0.0; n],
        NoiseKind::GaussianIid => (0..n)
            .map(|i| model.std * standard_normal(&mut step_rng(seed, i, StreamKind::ObservationNoise, k)))
            .collect(),
    }
}

/// Counts draws on top of [`sample_noise`].
#[derive(Debug, Clone)]
pub struct NoiseSource {
    model: NoiseModel,
    seed: u64,
    draws: usize,
}

impl NoiseSource {
    pub fn new(model: NoiseModel, seed: u64) -> Self {
        Self { model, seed, draws: 0 }
    }

    pub fn sample(&mut self, k: usize, n: usize) -> Vec<f64> {
        self.draws += n;
        sample_noise(&self.model, self.seed, k, n)
    }

    pub fn draws(&self) -> usize {
        self.draws
    }

    pub fn model(&self) -> &NoiseModel {
        &self.model
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_direction_model() -> StateSpaceRegressorModel {
        example1_model(1, 3, 1.2, 0.3).unwrap().remove(0)
    }

    #[test]
    fn direction_assignment_wraps() {
        let models = example1_model(28, 10, 1.2, 0.3).unwrap();
        for (i, model) in models.iter().enumerate() {
            let j = i % 10;
            assert_eq!(model.b[j], 1.0);
            assert_eq!(model.b.sum(), 1.0);
            assert_eq!(model.c[(j, j)], 1.0);
            assert_eq!(model.c.sum(), 1.0);
            assert_eq!(model.a, DMatrix::identity(10, 10) * 1.2);
        }
        // sensors 21..28 cover directions 1..8
        assert_eq!(example1_direction(20, 10), 0);
        assert_eq!(example1_direction(27, 10), 7);
    }

    #[test]
    fn hand_recursion_two_steps() {
        let model = single_direction_model();
        let mut u = DVector::zeros(3);
        let phi1 = model.advance(&mut u, 1.0);
        assert_eq!(phi1, DVector::from_vec(vec![1.0, 0.0, 0.0]));
        let phi2 = model.advance(&mut u, 0.0);
        assert_eq!(phi2, DVector::from_vec(vec![1.2, 0.0, 0.0]));
    }

    #[test]
    fn zero_growth_gives_white_regressor() {
        let models = example1_model(1, 1, 0.0, 0.3).unwrap();
        let seed = 11;
        let mut stream = RegressorStream::state_space(models, seed).unwrap();
        for k in 1..=20 {
            let phi = stream.step(k).unwrap();
            let mut rng = step_rng(seed, 0, StreamKind::StateInput, k);
            let xi = 0.3 * standard_normal(&mut rng);
            assert_eq!(phi[0][0], xi);
        }
    }

    #[test]
    fn zero_input_stays_zero() {
        let models = example1_model(2, 2, 1.2, 0.0).unwrap();
        let mut stream = RegressorStream::state_space(models, 5).unwrap();
        for k in 1..=100 {
            assert!(stream.step(k).unwrap().iter().all(|v| v.iter().all(|&x| x == 0.0)));
        }
    }

    #[test]
    fn steps_must_be_contiguous() {
        let mut stream = RegressorStream::iid_gaussian(2, 2, 1.0, 1).unwrap();
        assert!(stream.step(2).is_err());
        stream.step(1).unwrap();
        assert!(stream.step(1).is_err());
        assert_eq!(stream.draws(), 2);
    }

    #[test]
    fn overflow_is_reported() {
        let models = example1_model(2, 1, 1e10, 1.0).unwrap();
        let mut stream = RegressorStream::state_space(models, 3).unwrap();
        let err = (1..=100).map(|k| stream.step(k)).find_map(|r| r.err()).unwrap();
        match err {
            Error::HorizonOverflow { step, .. } => assert!(step > 1 && step < 100),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn growth_bound_brackets_example_horizon() {
        let model = example1_model(1, 10, 1.2, 0.3).unwrap().remove(0);
        let limit = REGRESSOR_LIMIT.ln();
        assert!(model.log_magnitude_bound(600).unwrap() < limit);
        assert!(model.log_magnitude_bound(2500).unwrap() > limit);
    }

    #[test]
    fn noise_zero_kinds() {
        assert_eq!(sample_noise(&NoiseModel::zero(), 1, 3, 4), vec![0.0; 4]);
        let g0 = NoiseModel::gaussian(0.0).unwrap();
        assert_eq!(sample_noise(&g0, 1, 3, 4), vec![0.0; 4]);
    }

    #[test]
    fn noise_moments() {
        let model = NoiseModel::gaussian(1.2).unwrap();
        let n = 100;
        let samples: Vec<f64> = (1..=1000).flat_map(|k| sample_noise(&model, 99, k, n)).collect();
        let len = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / len;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (len - 1.0);
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var.sqrt() - 1.2).abs() < 0.02, "std {}", var.sqrt());
    }

    #[test]
    fn noise_model_validation() {
        assert!(NoiseModel::new(NoiseKind::GaussianIid, -1.0, 0.0).is_err());
        assert!(NoiseModel::new(NoiseKind::GaussianIid, 1.0, 1.0).is_err());
        assert!(NoiseModel::new(NoiseKind::GaussianIid, 1.0, 0.5).is_ok());
    }

    #[test]
    fn noise_and_regressor_streams_use_distinct_keys() {
        for i in 0..5 {
            assert_ne!(
                seeding::sub_seed(7, i, StreamKind::StateInput),
                seeding::sub_seed(7, i, StreamKind::ObservationNoise)
            );
        }
    }

    #[test]
    fn replay_reproduces_rows() {
        let rows = vec![
            vec![DVector::from_vec(vec![1.0, 2.0])],
            vec![DVector::from_vec(vec![3.0, 4.0])],
        ];
        let mut stream = RegressorStream::replay(rows.clone()).unwrap();
        assert_eq!(stream.step(1).unwrap(), rows[0]);
        assert_eq!(stream.step(2).unwrap(), rows[1]);
        assert!(stream.step(3).is_err());
    }
}
