//! Time evolution of the KdV equation
//! eta_t + eta_x + (3 eps/2) eta eta_x + (eps/6) eta_xxx = 0
//! with exponential integrators that treat the stiff linear dispersion
//! exactly, plus the analytic solitary-wave reference solution.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{KdvError, Result};
use crate::spectral::{Field, Grid};
use crate::thresholds;

/// Scaling parameters of the nondimensional model. The inverse relative
/// wavenumber mu is tied to epsilon so the Stokes number is one; only
/// epsilon enters the equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    epsilon: f64,
}

impl Params {
    /// Production constructor: requires 0 < epsilon <= 0.5.
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 0.5) || !epsilon.is_finite() {
            return Err(KdvError::InvalidParam(format!(
                "epsilon = {epsilon} out of range (0, 0.5]"
            )));
        }
        Ok(Params { epsilon })
    }

    /// Test-only limit epsilon = 0: pure advection, used for linear sanity
    /// checks. Not reachable from any configuration file.
    #[doc(hidden)]
    pub fn advection_test_only() -> Self {
        Params { epsilon: 0.0 }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// mu = epsilon by the Stokes-number-one convention.
    pub fn mu(&self) -> f64 {
        self.epsilon
    }

    /// Stokes number S = epsilon / mu, fixed to 1.
    pub fn stokes(&self) -> f64 {
        1.0
    }
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Exponential time differencing RK4 (default).
    #[default]
    Etdrk4,
    /// Integrating-factor RK4, kept as a cross-check.
    Ifrk4,
}

/// Everything needed to run one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub params: Params,
    pub grid: Grid,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub snapshot_stride: usize,
}

impl SolverConfig {
    /// Validate the configuration for a production run. Rejects dt outside
    /// the stability guidance rather than silently clamping it.
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(KdvError::Config(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(KdvError::Config(format!(
                "t_end = {} must be non-negative",
                self.t_end
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(KdvError::Config("snapshot_stride must be >= 1".into()));
        }
        let limit = stability_limit(&self.grid, &self.params);
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(KdvError::Config(format!(
                "dt = {} exceeds the stability guidance {:.6} for this grid \
                 (dt <= min({}, {} * {} / max|omega|))",
                self.dt,
                limit,
                thresholds::DT_MAX,
                thresholds::DT_SAFETY,
                thresholds::RK4_IMAG_STABILITY,
            )));
        }
        if self.t_end > 0.0 {
            let steps = self.t_end / self.dt;
            if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
                return Err(KdvError::Config(format!(
                    "t_end = {} is not an integer number of steps at dt = {}",
                    self.t_end, self.dt
                )));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Largest time step admitted by the documented guidance
/// dt <= min(0.01, 0.5 * 2.8 / max|omega(k)|) with the linear dispersion
/// relation omega(k) = k - (eps/6) k^3 evaluated on the grid's wavenumber
/// table (Nyquist excluded, matching the derivative operator).
pub fn stability_limit(grid: &Grid, params: &Params) -> f64 {
    let eps = params.epsilon();
    let n = grid.n();
    let mut max_omega = 0.0f64;
    for (j, &k) in grid.wavenumbers().iter().enumerate() {
        if j == n / 2 {
            continue;
        }
        let omega = k - eps / 6.0 * k.powi(3);
        max_omega = max_omega.max(omega.abs());
    }
    if max_omega == 0.0 {
        thresholds::DT_MAX
    } else {
        thresholds::DT_MAX.min(thresholds::DT_SAFETY * thresholds::RK4_IMAG_STABILITY / max_omega)
    }
}

/// Right-hand side eta_t = -eta_x - (3 eps/2) eta eta_x - (eps/6) eta_xxx
/// with the nonlinear product dealiased by the two-thirds rule.
pub fn kdv_rhs(eta: &Field, params: &Params) -> Result<Field> {
    if !eta.is_finite() {
        return Err(KdvError::NonFinite("kdv_rhs input".into()));
    }
    let eps = params.epsilon();
    let e1 = eta.derivative(1)?;
    let e3 = eta.derivative(3)?;
    let advect = eta.mul(&e1).dealias();
    Ok(e1
        .scale(-1.0)
        .sub(&advect.scale(1.5 * eps))
        .sub(&e3.scale(eps / 6.0)))
}

/// Speed of the solitary wave of amplitude `a`: c = 1 + eps a / 2.
pub fn solitary_speed(amplitude: f64, params: &Params) -> f64 {
    1.0 + params.epsilon() * amplitude / 2.0
}

/// Width parameter of the solitary wave: K = sqrt(3 a) / 2.
pub fn solitary_width(amplitude: f64) -> f64 {
    (3.0 * amplitude).sqrt() / 2.0
}

/// Solitary-wave shape a sech^2(K (x - center)) wrapped periodically.
/// The shape depends only on the amplitude, not on epsilon; epsilon enters
/// through the propagation speed alone.
///
/// Errors when the domain is too small for the requested amplitude: the
/// profile must decay below 1e-12 of its peak at half-domain distance.
pub fn solitary_profile(amplitude: f64, center: f64, grid: &Grid) -> Result<Field> {
    if !(amplitude > 0.0) || !amplitude.is_finite() {
        return Err(KdvError::InvalidParam(format!(
            "solitary amplitude {amplitude} must be positive"
        )));
    }
    let k = solitary_width(amplitude);
    let l = grid.length();
    let edge = 1.0 / (k * l / 2.0).cosh().powi(2);
    if edge > thresholds::SOLITARY_EDGE_DECAY {
        return Err(KdvError::TailGuard {
            time: 0.0,
            ratio: edge,
            limit: thresholds::SOLITARY_EDGE_DECAY,
        });
    }
    Ok(Field::from_fn(grid, |x| {
        let mut xi = (x - center) % l;
        if xi > l / 2.0 {
            xi -= l;
        } else if xi < -l / 2.0 {
            xi += l;
        }
        amplitude / (k * xi).cosh().powi(2)
    }))
}

/// Analytic solitary wave a sech^2(K (x - x0 - c t)) wrapped periodically,
/// with c = 1 + eps a / 2.
pub fn solitary_wave(
    amplitude: f64,
    params: &Params,
    x0: f64,
    t: f64,
    grid: &Grid,
) -> Result<Field> {
    let c = solitary_speed(amplitude, params);
    solitary_profile(amplitude, x0 + c * t, grid)
}

/// Ratio of the largest |eta| in the 5% edge bands to the overall peak.
/// Validates the whole-line surrogate: the solution must stay negligible
/// near the periodic seam. A spatially uniform state is exactly periodic
/// and carries no wrap-around information, so it reports zero.
pub fn edge_band_ratio(eta: &Field) -> f64 {
    let n = eta.len();
    let band = ((n as f64 * thresholds::TAIL_BAND_FRACTION) as usize).max(1);
    let vals = eta.values();
    let (min, max) = vals.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let peak = max.abs().max(min.abs());
    if peak == 0.0 || max - min <= 1e-13 * peak.max(1.0) {
        return 0.0;
    }
    let edge = vals[..band]
        .iter()
        .chain(&vals[n - band..])
        .fold(0.0f64, |a, v| a.max(v.abs()));
    edge / peak
}

fn check_tail_guard(eta: &Field, time: f64) -> Result<()> {
    let ratio = edge_band_ratio(eta);
    if ratio > thresholds::TAIL_GUARD_REL {
        return Err(KdvError::TailGuard {
            time,
            ratio,
            limit: thresholds::TAIL_GUARD_REL,
        });
    }
    Ok(())
}

/// Linear symbol L(k) = i (eps k^3 / 6 - k); Nyquist zeroed (both terms are
/// odd-order derivatives).
fn linear_symbol(grid: &Grid, params: &Params) -> Vec<Complex64> {
    let eps = params.epsilon();
    let n = grid.n();
    grid.wavenumbers()
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            if j == n / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, eps * k.powi(3) / 6.0 - k)
            }
        })
        .collect()
}

/// Mean of `f` over a radius-1 circle centered at `z`, using `M` points on
/// the full circle. Used for the phi-function coefficients where direct
/// evaluation cancels catastrophically near z = 0. The full circle (not the
/// half circle sometimes seen with real symbols) is required here because
/// the dispersion symbol is imaginary.
fn contour_mean(z: Complex64, f: impl Fn(Complex64) -> Complex64) -> Complex64 {
    const M: usize = 32;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..M {
        let theta = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / M as f64;
        acc += f(z + Complex64::from_polar(1.0, theta));
    }
    acc / M as f64
}

fn phi_q(z: Complex64) -> Complex64 {
    ((z / 2.0).exp() - 1.0) / z
}

fn phi_f1(z: Complex64) -> Complex64 {
    (-4.0 - z + z.exp() * (4.0 - 3.0 * z + z * z)) / (z * z * z)
}

fn phi_f2(z: Complex64) -> Complex64 {
    (2.0 + z + z.exp() * (z - 2.0)) / (z * z * z)
}

fn phi_f3(z: Complex64) -> Complex64 {
    (-4.0 - 3.0 * z - z * z + z.exp() * (4.0 - z)) / (z * z * z)
}

fn etd_coefficient(z: Complex64, f: impl Fn(Complex64) -> Complex64) -> Complex64 {
    if z.norm() >= 1.0 {
        f(z)
    } else {
        contour_mean(z, f)
    }
}

struct Etdrk4 {
    e: Vec<Complex64>,
    e2: Vec<Complex64>,
    q: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
}

impl Etdrk4 {
    fn new(grid: &Grid, params: &Params, dt: f64) -> Self {
        let sym = linear_symbol(grid, params);
        let n = sym.len();
        let mut e = Vec::with_capacity(n);
        let mut e2 = Vec::with_capacity(n);
        let mut q = Vec::with_capacity(n);
        let mut f1 = Vec::with_capacity(n);
        let mut f2 = Vec::with_capacity(n);
        let mut f3 = Vec::with_capacity(n);
        for s in sym {
            let z = s * dt;
            e.push(z.exp());
            e2.push((z / 2.0).exp());
            q.push(etd_coefficient(z, phi_q) * dt);
            f1.push(etd_coefficient(z, phi_f1) * dt);
            f2.push(etd_coefficient(z, phi_f2) * dt);
            f3.push(etd_coefficient(z, phi_f3) * dt);
        }
        Etdrk4 {
            e,
            e2,
            q,
            f1,
            f2,
            f3,
        }
    }
}

struct Ifrk4 {
    e: Vec<Complex64>,
    e2: Vec<Complex64>,
    dt: f64,
}

impl Ifrk4 {
    fn new(grid: &Grid, params: &Params, dt: f64) -> Self {
        let sym = linear_symbol(grid, params);
        Ifrk4 {
            e: sym.iter().map(|s| (s * dt).exp()).collect(),
            e2: sym.iter().map(|s| (s * dt / 2.0).exp()).collect(),
            dt,
        }
    }
}

/// Spectral state plus scratch buffers for the nonlinear evaluation.
struct ModeState {
    grid: Grid,
    eps: f64,
    /// i k with the Nyquist zeroed, for the conservative form of the
    /// nonlinearity: N(v) = -(3 eps / 4) i k dealias(FFT(v^2)).
    ik: Vec<Complex64>,
    dealias_keep: Vec<bool>,
}

impl ModeState {
    fn new(grid: &Grid, params: &Params) -> Self {
        let n = grid.n();
        let cutoff = n as f64 / 3.0;
        let ik = grid
            .wavenumbers()
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                if j == n / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, k)
                }
            })
            .collect();
        let dealias_keep = (0..n)
            .map(|j| {
                let m = if j <= n / 2 { j } else { n - j };
                m as f64 <= cutoff
            })
            .collect();
        ModeState {
            grid: grid.clone(),
            eps: params.epsilon(),
            ik,
            dealias_keep,
        }
    }

    fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        self.grid.forward(values)
    }

    fn to_values(&self, modes: &[Complex64]) -> Vec<f64> {
        self.grid.inverse_real(modes.to_vec())
    }

    /// Nonlinear term in mode space; also reports the physical peak of the
    /// stage field so the caller can detect blow-up without extra work.
    fn nonlinear(&self, modes: &[Complex64]) -> (Vec<Complex64>, f64) {
        let v = self.to_values(modes);
        let mut peak = 0.0f64;
        let squared: Vec<f64> = v
            .iter()
            .map(|&x| {
                peak = peak.max(x.abs());
                x * x
            })
            .collect();
        let mut sq_modes = self.forward(&squared);
        for (j, m) in sq_modes.iter_mut().enumerate() {
            if self.dealias_keep[j] {
                *m *= self.ik[j] * (-0.75 * self.eps);
            } else {
                *m = Complex64::new(0.0, 0.0);
            }
        }
        (sq_modes, peak)
    }
}

fn step_etdrk4(coef: &Etdrk4, state: &ModeState, v: &mut [Complex64]) -> f64 {
    let n = v.len();
    let (nv, peak) = state.nonlinear(v);
    let mut a = vec![Complex64::default(); n];
    for j in 0..n {
        a[j] = coef.e2[j] * v[j] + coef.q[j] * nv[j];
    }
    let (na, _) = state.nonlinear(&a);
    let mut b = vec![Complex64::default(); n];
    for j in 0..n {
        b[j] = coef.e2[j] * v[j] + coef.q[j] * na[j];
    }
    let (nb, _) = state.nonlinear(&b);
    let mut c = vec![Complex64::default(); n];
    for j in 0..n {
        c[j] = coef.e2[j] * a[j] + coef.q[j] * (2.0 * nb[j] - nv[j]);
    }
    let (nc, _) = state.nonlinear(&c);
    for j in 0..n {
        v[j] = coef.e[j] * v[j]
            + coef.f1[j] * nv[j]
            + 2.0 * coef.f2[j] * (na[j] + nb[j])
            + coef.f3[j] * nc[j];
    }
    peak
}

fn step_ifrk4(coef: &Ifrk4, state: &ModeState, v: &mut [Complex64]) -> f64 {
    let n = v.len();
    let h = coef.dt;
    let (nv, peak) = state.nonlinear(v);
    let mut stage = vec![Complex64::default(); n];
    for j in 0..n {
        stage[j] = coef.e2[j] * (v[j] + 0.5 * h * nv[j]);
    }
    let (nb, _) = state.nonlinear(&stage);
    for j in 0..n {
        stage[j] = coef.e2[j] * v[j] + 0.5 * h * nb[j];
    }
    let (nc, _) = state.nonlinear(&stage);
    for j in 0..n {
        stage[j] = coef.e[j] * v[j] + coef.e2[j] * h * nc[j];
    }
    let (nd, _) = state.nonlinear(&stage);
    for j in 0..n {
        v[j] = coef.e[j] * v[j]
            + (coef.e[j] * h * nv[j] + 2.0 * coef.e2[j] * h * (nb[j] + nc[j]) + h * nd[j]) / 6.0;
    }
    peak
}

enum Stepper {
    Etd(Etdrk4),
    If(Ifrk4),
}

impl Stepper {
    fn new(config: &SolverConfig, dt: f64) -> Self {
        match config.scheme {
            Scheme::Etdrk4 => Stepper::Etd(Etdrk4::new(&config.grid, &config.params, dt)),
            Scheme::Ifrk4 => Stepper::If(Ifrk4::new(&config.grid, &config.params, dt)),
        }
    }

    fn step(&self, state: &ModeState, v: &mut [Complex64]) -> f64 {
        match self {
            Stepper::Etd(c) => step_etdrk4(c, state, v),
            Stepper::If(c) => step_ifrk4(c, state, v),
        }
    }
}

/// Advance `eta` by `steps` time steps of size `config.dt`.
///
/// The stability guidance on dt is a documented precondition enforced by
/// [`SolverConfig::validate`] on the configuration path, not here; callers
/// such as step-refinement studies may exceed it deliberately. A negative
/// dt runs the flow backwards (used by reversibility checks).
pub fn advance(eta: &Field, config: &SolverConfig, steps: usize) -> Result<Field> {
    if !eta.is_finite() {
        return Err(KdvError::NonFinite("advance initial data".into()));
    }
    if config.dt == 0.0 || !config.dt.is_finite() {
        return Err(KdvError::Config(format!("dt = {} must be nonzero", config.dt)));
    }
    let state = ModeState::new(&config.grid, &config.params);
    let stepper = Stepper::new(config, config.dt);
    let mut modes = state.forward(eta.values());
    for step in 0..steps {
        let peak = stepper.step(&state, &mut modes);
        if !peak.is_finite() || peak > thresholds::BLOWUP_LIMIT {
            return Err(KdvError::Blowup {
                step,
                time: step as f64 * config.dt,
                magnitude: peak,
            });
        }
    }
    let values = state.to_values(&modes);
    if !values.iter().all(|v| v.is_finite()) {
        return Err(KdvError::Blowup {
            step: steps,
            time: steps as f64 * config.dt,
            magnitude: f64::NAN,
        });
    }
    Field::from_values(&config.grid, values)
}

/// Snapshots of eta along a simulated trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: SolverConfig,
    times: Vec<f64>,
    states: Vec<Field>,
    /// H^k norms of the initial data for k = 0..=6 (regularity gate),
    /// recorded for the run manifest.
    initial_sobolev: [f64; 7],
}

impl Trajectory {
    /// Assemble a trajectory from explicit snapshots, validating the
    /// invariants: times start at zero and strictly increase, every state
    /// is finite and lives on the solver grid.
    pub fn new(config: SolverConfig, times: Vec<f64>, states: Vec<Field>) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() {
            return Err(KdvError::InvalidParam(
                "trajectory needs matching, non-empty times and states".into(),
            ));
        }
        if times[0] != 0.0 {
            return Err(KdvError::InvalidParam(
                "trajectory must start at t = 0".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(KdvError::InvalidParam(
                "trajectory times must strictly increase".into(),
            ));
        }
        for (t, s) in times.iter().zip(&states) {
            if s.grid() != &config.grid {
                return Err(KdvError::Config("snapshot grid mismatch".into()));
            }
            if !s.is_finite() {
                return Err(KdvError::NonFinite(format!("snapshot at t = {t}")));
            }
        }
        let mut initial_sobolev = [0.0; 7];
        for (k, slot) in initial_sobolev.iter_mut().enumerate() {
            *slot = states[0].sobolev_norm(k)?;
        }
        Ok(Trajectory {
            config,
            times,
            states,
            initial_sobolev,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Field] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial_sobolev(&self) -> &[f64; 7] {
        &self.initial_sobolev
    }

    pub fn snapshots(&self) -> impl Iterator<Item = (f64, &Field)> {
        self.times.iter().copied().zip(self.states.iter())
    }
}

/// Run the configured trajectory, storing a snapshot every
/// `snapshot_stride` steps (the final state is always included).
///
/// Enforces the full configuration contract: positive dt within the
/// stability guidance, the initial-data regularity gate, and the tail-mass
/// guard on every stored snapshot.
pub fn simulate(eta0: &Field, config: &SolverConfig) -> Result<Trajectory> {
    config.validate()?;
    if eta0.grid() != &config.grid {
        return Err(KdvError::Config(
            "initial data grid does not match solver grid".into(),
        ));
    }
    if !eta0.is_finite() {
        return Err(KdvError::NonFinite("simulate initial data".into()));
    }
    let mut initial_sobolev = [0.0; 7];
    for (k, slot) in initial_sobolev.iter_mut().enumerate() {
        let norm = eta0.sobolev_norm(k)?;
        if !norm.is_finite() {
            return Err(KdvError::NonFinite(format!("H^{k} norm of initial data")));
        }
        *slot = norm;
    }
    check_tail_guard(eta0, 0.0)?;

    let total_steps = config.steps();
    let state = ModeState::new(&config.grid, &config.params);
    let stepper = Stepper::new(config, config.dt);
    let mut modes = state.forward(eta0.values());
    let mut times = vec![0.0];
    let mut states = vec![eta0.clone()];
    let mut step = 0usize;
    while step < total_steps {
        let block = config.snapshot_stride.min(total_steps - step);
        for _ in 0..block {
            let peak = stepper.step(&state, &mut modes);
            step += 1;
            if !peak.is_finite() || peak > thresholds::BLOWUP_LIMIT {
                return Err(KdvError::Blowup {
                    step,
                    time: step as f64 * config.dt,
                    magnitude: peak,
                });
            }
        }
        let time = step as f64 * config.dt;
        let snapshot = Field::from_values(&config.grid, state.to_values(&modes))
            .map_err(|_| KdvError::Blowup {
                step,
                time,
                magnitude: f64::NAN,
            })?;
        check_tail_guard(&snapshot, time)?;
        times.push(time);
        states.push(snapshot);
    }
    Ok(Trajectory {
        config: config.clone(),
        times,
        states,
        initial_sobolev,
    })
}
