//! Two-point-measurement work statistics and fluctuation theorems.

use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::evolution::{bath_propagator, mapped_propagator, propagate, step_unitary, uncoupled_propagator, TimeGrid};
use crate::models::CoupledModel;
use crate::operators::{conjugate, exp_from_eigen, kron, HermitianEigen, Operator};
use crate::thermo::{gibbs, log_partition, run_protocol, Dynamics, ThermoConfig, ThermoSeries};

/// Relative merge tolerance for work values, in units of the spectral range.
pub const MERGE_REL_TOL: f64 = 1e-9;
/// Probabilities below this are not compared in the Crooks ratio.
pub const CROOKS_FLOOR: f64 = 1e-12;
/// Unmatched bins above this probability are reported as support mismatches.
pub const SUPPORT_FLOOR: f64 = 1e-10;
/// Transition probabilities |⟨m|U|n⟩|² at or below this are roundoff and dropped.
pub const TRANSITION_FLOOR: f64 = 1e-28;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorkBin {
    pub work: f64,
    pub probability: f64,
}

/// Discrete work distribution, sorted by work, with near-equal values merged.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkDistribution {
    bins: Vec<WorkBin>,
    merge_tol: f64,
}

impl WorkDistribution {
    /// Bins (work, probability) pairs; values closer than `merge_tol` to a
    /// neighbour share a bin, located at the probability-weighted mean.
    pub fn from_pairs(mut pairs: Vec<(f64, f64)>, merge_tol: f64) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut bins: Vec<WorkBin> = Vec::new();
        let mut acc: Option<(f64, f64, f64)> = None; // last w, Σp, Σpw
        let flush = |(_, p, pw): (f64, f64, f64), bins: &mut Vec<WorkBin>| {
            if p > 0.0 {
                bins.push(WorkBin { work: pw / p, probability: p });
            }
        };
        for (w, p) in pairs {
            let p = p.max(0.0);
            acc = match acc {
                Some((last, sp, spw)) if w - last <= merge_tol => Some((w, sp + p, spw + p * w)),
                Some(done) => {
                    flush(done, &mut bins);
                    Some((w, p, p * w))
                }
                None => Some((w, p, p * w)),
            };
        }
        if let Some(done) = acc {
            flush(done, &mut bins);
        }
        Self { bins, merge_tol }
    }

    /// All probability at a single work value.
    pub fn point(work: f64) -> Self {
        Self { bins: vec![WorkBin { work, probability: 1.0 }], merge_tol: 0.0 }
    }

    pub fn bins(&self) -> &[WorkBin] {
        &self.bins
    }

    pub fn merge_tol(&self) -> f64 {
        self.merge_tol
    }

    pub fn total_probability(&self) -> f64 {
        self.bins.iter().map(|b| b.probability).sum()
    }

    pub fn mean(&self) -> f64 {
        self.bins.iter().map(|b| b.probability * b.work).sum()
    }

    /// Probability of the bin within `tol` of `work`, if any.
    pub fn probability_at(&self, work: f64, tol: f64) -> Option<f64> {
        let idx = self.bins.partition_point(|b| b.work < work - tol);
        self.bins.get(idx).filter(|b| (b.work - work).abs() <= tol).map(|b| b.probability)
    }

    /// Total variation distance after aligning bins within the larger merge tolerance.
    pub fn total_variation(&self, other: &WorkDistribution) -> f64 {
        let tol = self.merge_tol.max(other.merge_tol);
        let mut tagged: Vec<(f64, f64)> = self.bins.iter().map(|b| (b.work, b.probability)).collect();
        tagged.extend(other.bins.iter().map(|b| (b.work, -b.probability)));
        tagged.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut distance = 0.0;
        let mut net = 0.0f64;
        let mut last = f64::NEG_INFINITY;
        for (w, signed) in tagged {
            if w - last > tol {
                distance += net.abs();
                net = 0.0;
            }
            net += signed;
            last = w;
        }
        0.5 * (distance + net.abs())
    }
}

/// Σ p e^{−βw}.
pub fn jarzynski(dist: &WorkDistribution, beta: f64) -> f64 {
    dist.bins.iter().map(|b| b.probability * (-beta * b.work).exp()).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharacteristicSample {
    pub u: c64,
    pub theta: c64,
}

/// Σ p e^{iuw}; complex `u` gives exponential moments.
pub fn characteristic_function(dist: &WorkDistribution, u: c64) -> CharacteristicSample {
    let theta = dist.bins.iter().map(|b| (c64::new(0.0, 1.0) * u * b.work).exp() * b.probability).sum();
    CharacteristicSample { u, theta }
}

fn spectral_merge_tol(a: &HermitianEigen, b: &HermitianEigen) -> f64 {
    let lo = a.min().min(b.min());
    let hi = a.max().max(b.max());
    MERGE_REL_TOL * (hi - lo)
}

/// Groups indices of (nearly) equal eigenvalues.
fn degenerate_blocks(eig: &HermitianEigen, tol: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..eig.dim()).collect();
    order.sort_by(|&i, &j| eig.values[i].total_cmp(&eig.values[j]));
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match blocks.last_mut() {
            Some(block) if eig.values[i] - eig.values[*block.last().unwrap()] <= tol => block.push(i),
            _ => blocks.push(vec![i]),
        }
    }
    blocks
}

/// Initial populations or a full initial state, in the initial eigenbasis.
enum Prepared<'a> {
    Populations(&'a [f64]),
    Dense(Mat<c64>),
}

fn transition_pairs(
    initial: &HermitianEigen,
    final_: &HermitianEigen,
    unitary: &Operator,
    prepared: Prepared<'_>,
    block_tol: f64,
) -> Vec<(f64, f64)> {
    let amplitudes = &(final_.vectors.adjoint() * unitary.entries()) * initial.vectors.as_ref();
    let n = initial.dim();
    let m = final_.dim();
    let mut pairs = Vec::with_capacity(n * m);
    match prepared {
        Prepared::Populations(weights) => {
            for k in 0..n {
                if weights[k] == 0.0 {
                    continue;
                }
                for j in 0..m {
                    let transition = amplitudes[(j, k)].norm_sqr();
                    if transition > TRANSITION_FLOOR {
                        pairs.push((final_.values[j] - initial.values[k], transition * weights[k]));
                    }
                }
            }
        }
        Prepared::Dense(state) => {
            for block in degenerate_blocks(initial, block_tol) {
                let energy = block.iter().map(|&k| initial.values[k]).sum::<f64>() / block.len() as f64;
                for j in 0..m {
                    if block.iter().all(|&k| amplitudes[(j, k)].norm_sqr() <= TRANSITION_FLOOR) {
                        continue;
                    }
                    let mut p = c64::new(0.0, 0.0);
                    for &k in &block {
                        for &l in &block {
                            p += amplitudes[(j, k)] * state[(k, l)] * amplitudes[(j, l)].conj();
                        }
                    }
                    pairs.push((final_.values[j] - energy, p.re));
                }
            }
        }
    }
    pairs
}

fn gibbs_populations(eig: &HermitianEigen, beta: f64) -> Vec<f64> {
    let ground = eig.min();
    let weights: Vec<f64> = eig.values.iter().map(|&e| (-beta * (e - ground)).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Two-point-measurement distribution for a Gibbs state of `h_initial`.
pub fn tpm_distribution(h_initial: &Operator, h_final: &Operator, u: &Operator, beta: f64) -> Result<WorkDistribution> {
    tpm_from_eigen(&h_initial.eigh()?, &h_final.eigh()?, u, beta)
}

pub fn tpm_from_eigen(initial: &HermitianEigen, final_: &HermitianEigen, u: &Operator, beta: f64) -> Result<WorkDistribution> {
    check_dims(initial, final_, u)?;
    let weights = gibbs_populations(initial, beta);
    let tol = spectral_merge_tol(initial, final_);
    Ok(WorkDistribution::from_pairs(transition_pairs(initial, final_, u, Prepared::Populations(&weights), tol), tol))
}

/// Two-point-measurement distribution for an arbitrary initial state, which is
/// dephased onto the eigenspaces of `h_initial` by the first measurement.
pub fn tpm_distribution_from_state(
    initial: &HermitianEigen,
    final_: &HermitianEigen,
    u: &Operator,
    rho: &Operator,
) -> Result<WorkDistribution> {
    check_dims(initial, final_, u)?;
    let v = initial.vectors.as_ref();
    let state = &(v.adjoint() * rho.entries()) * v;
    let tol = spectral_merge_tol(initial, final_);
    Ok(WorkDistribution::from_pairs(transition_pairs(initial, final_, u, Prepared::Dense(state), tol), tol))
}

fn check_dims(initial: &HermitianEigen, final_: &HermitianEigen, u: &Operator) -> Result<()> {
    for d in [initial.dim(), final_.dim()] {
        if d != u.dim() {
            return Err(Error::DimensionMismatch { expected: u.dim(), found: d });
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reverse,
}

/// How the coupled propagator is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Propagation {
    /// Midpoint propagation of the coupled Hamiltonian.
    Direct,
    /// `e^{igG} (U_s ⊗ U_b) e^{−igG}` with the factors propagated separately.
    ThreeStage,
}

/// Measurement bases and propagator of one protocol, shared by forward and
/// reverse statistics.
#[derive(Clone, Debug)]
pub struct WorkProtocol {
    pub initial: HermitianEigen,
    pub final_: HermitianEigen,
    pub unitary: Operator,
    pub beta: f64,
    /// ln[Z_s(τ')/Z_s(0)].
    pub log_system_ratio: f64,
}

impl WorkProtocol {
    pub fn new(
        model: &dyn CoupledModel,
        tau_prime: f64,
        n_steps: usize,
        beta: f64,
        propagation: Propagation,
    ) -> Result<Self> {
        let unitary = coupled_unitary(model, tau_prime, n_steps, propagation)?;
        let initial = model.total_hamiltonian(0.0)?.eigh()?;
        let final_ = if tau_prime == 0.0 { initial.clone() } else { model.total_hamiltonian(tau_prime)?.eigh()? };
        let log_system_ratio = system_log_ratio(model, beta, tau_prime)?;
        Ok(Self { initial, final_, unitary, beta, log_system_ratio })
    }

    /// Same statistics in the uncoupled picture: bare Hamiltonians and the uncoupled propagator.
    pub fn uncoupled(model: &dyn CoupledModel, tau_prime: f64, n_steps: usize, beta: f64) -> Result<Self> {
        let unitary = if tau_prime == 0.0 {
            Operator::identity(model.layout().total())
        } else {
            uncoupled_propagator(model, TimeGrid::new(0.0, tau_prime, n_steps)?)?
        };
        Ok(Self {
            initial: uncoupled_eigen(model, 0.0)?,
            final_: uncoupled_eigen(model, tau_prime)?,
            unitary,
            beta,
            log_system_ratio: system_log_ratio(model, beta, tau_prime)?,
        })
    }

    pub fn system_ratio(&self) -> f64 {
        self.log_system_ratio.exp()
    }

    pub fn forward(&self) -> Result<WorkDistribution> {
        tpm_from_eigen(&self.initial, &self.final_, &self.unitary, self.beta)
    }

    /// Starts in equilibrium at the final Hamiltonian and runs the exact adjoint.
    pub fn reverse(&self) -> Result<WorkDistribution> {
        tpm_from_eigen(&self.final_, &self.initial, &self.unitary.adjoint(), self.beta)
    }

    pub fn distribution(&self, direction: Direction) -> Result<WorkDistribution> {
        match direction {
            Direction::Forward => self.forward(),
            Direction::Reverse => self.reverse(),
        }
    }

    /// Tr[U^† e^{iuH_f} U e^{−(β+iu)H_i}] / Tr e^{−βH_i}, by matrix products.
    pub fn direct_theta(&self, u: c64) -> CharacteristicSample {
        let i = c64::new(0.0, 1.0);
        let ground = self.initial.min();
        let shifted = HermitianEigen {
            values: self.initial.values.iter().map(|e| e - ground).collect(),
            vectors: self.initial.vectors.clone(),
        };
        let z: f64 = shifted.values.iter().map(|e| (-self.beta * e).exp()).sum();
        // the phase e^{−iuE_0} of the shift is restored below
        let weight = exp_from_eigen(&shifted, -(c64::new(self.beta, 0.0) + i * u));
        let probe = exp_from_eigen(&self.final_, i * u);
        let evolved = conjugate(&self.unitary.adjoint(), &probe).expect("dimensions agree");
        let theta = evolved.trace_product(&weight).expect("dimensions agree") * (-i * u * ground).exp() / z;
        CharacteristicSample { u, theta }
    }
}

fn coupled_unitary(model: &dyn CoupledModel, tau_prime: f64, n_steps: usize, propagation: Propagation) -> Result<Operator> {
    if tau_prime == 0.0 {
        return Ok(Operator::identity(model.layout().total()));
    }
    let grid = TimeGrid::new(0.0, tau_prime, n_steps)?;
    match propagation {
        Propagation::Direct => Ok(propagate(|t| model.total_hamiltonian(t), grid)?.unitary),
        Propagation::ThreeStage => mapped_propagator(model, grid),
    }
}

/// Eigensystem of the uncoupled Hamiltonian, assembled from system and bath spectra.
pub fn uncoupled_eigen(model: &dyn CoupledModel, t: f64) -> Result<HermitianEigen> {
    let s = model.system_hamiltonian(t)?.eigh()?;
    let b = model.bath_hamiltonian().eigh()?;
    let values = s.values.iter().flat_map(|&es| b.values.iter().map(move |&eb| es + eb)).collect();
    Ok(HermitianEigen { values, vectors: s.vectors.as_ref().kron(b.vectors.as_ref()) })
}

fn system_log_ratio(model: &dyn CoupledModel, beta: f64, tau_prime: f64) -> Result<f64> {
    Ok(log_partition(&model.system_hamiltonian(tau_prime)?, beta)?
        - log_partition(&model.system_hamiltonian(0.0)?, beta)?)
}

/// Work statistics measured with the coupled Hamiltonian at both ends.
pub fn strong_coupling_distribution(
    model: &dyn CoupledModel,
    tau_prime: f64,
    n_steps: usize,
    beta: f64,
    direction: Direction,
    propagation: Propagation,
) -> Result<WorkDistribution> {
    WorkProtocol::new(model, tau_prime, n_steps, beta, propagation)?.distribution(direction)
}

/// Work statistics of the uncoupled problem.
pub fn uncoupled_distribution(
    model: &dyn CoupledModel,
    tau_prime: f64,
    n_steps: usize,
    beta: f64,
    direction: Direction,
) -> Result<WorkDistribution> {
    WorkProtocol::uncoupled(model, tau_prime, n_steps, beta)?.distribution(direction)
}

pub fn direct_theta(
    model: &dyn CoupledModel,
    tau_prime: f64,
    n_steps: usize,
    beta: f64,
    u: c64,
) -> Result<CharacteristicSample> {
    Ok(WorkProtocol::new(model, tau_prime, n_steps, beta, Propagation::Direct)?.direct_theta(u))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrooksRow {
    pub work: f64,
    pub forward: f64,
    /// Reverse probability at −work; zero when no reverse bin matches.
    pub reverse: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `None` when either probability is below the comparison floor.
    pub rel_err: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrooksReport {
    pub rows: Vec<CrooksRow>,
    pub max_rel_err: f64,
    /// Work values carrying probability on one side only.
    pub support_mismatch: Vec<f64>,
}

impl CrooksReport {
    pub fn has_support_mismatch(&self) -> bool {
        !self.support_mismatch.is_empty()
    }
}

/// Compares p_F(w)/p_R(−w) with (Z_s(τ')/Z_s(0)) e^{βw} bin by bin.
pub fn crooks_report(forward: &WorkDistribution, reverse: &WorkDistribution, system_ratio: f64, beta: f64) -> CrooksReport {
    let tol = 10.0 * forward.merge_tol().max(reverse.merge_tol());
    let mut rows = Vec::with_capacity(forward.bins().len());
    let mut support_mismatch = Vec::new();
    let mut max_rel_err = 0.0f64;
    for bin in forward.bins() {
        let matched = reverse.probability_at(-bin.work, tol);
        let p_rev = matched.unwrap_or(0.0);
        let rhs = system_ratio * (beta * bin.work).exp();
        let lhs = if p_rev > 0.0 { bin.probability / p_rev } else { f64::INFINITY };
        let rel_err = if bin.probability > CROOKS_FLOOR && p_rev > CROOKS_FLOOR {
            let e = (bin.probability / (p_rev * rhs) - 1.0).abs();
            max_rel_err = max_rel_err.max(e);
            Some(e)
        } else {
            None
        };
        if matched.is_none() && bin.probability > SUPPORT_FLOOR {
            support_mismatch.push(bin.work);
        }
        rows.push(CrooksRow { work: bin.work, forward: bin.probability, reverse: p_rev, lhs, rhs, rel_err });
    }
    for bin in reverse.bins() {
        if bin.probability > SUPPORT_FLOOR && forward.probability_at(-bin.work, tol).is_none() {
            support_mismatch.push(-bin.work);
        }
    }
    CrooksReport { rows, max_rel_err, support_mismatch }
}

#[derive(Clone, Copy, Debug)]
pub struct NaiveOptions {
    pub dynamics: Dynamics,
    /// Number of times, besides the final one, at which the bare-energy TPM average is evaluated.
    pub tpm_samples: usize,
}

impl Default for NaiveOptions {
    fn default() -> Self {
        Self { dynamics: Dynamics::Mapped, tpm_samples: 64 }
    }
}

/// Weak-coupling work statistics under the true coupled dynamics.
#[derive(Clone, Debug)]
pub struct NaiveStatistics {
    pub times: Vec<f64>,
    /// `e^{−β W_w(t)}` from the ensemble-averaged weak work.
    pub scalar: Vec<f64>,
    /// `Z_s(t)/Z_s(0)` on the same nodes.
    pub free_energy_ratio: Vec<f64>,
    pub scalar_deviation: Vec<f64>,
    pub tpm_times: Vec<f64>,
    /// `⟨e^{−βw}⟩` from bare-energy two-point measurements.
    pub tpm: Vec<f64>,
    pub tpm_deviation: Vec<f64>,
    /// Bare-energy work distribution at the end of the protocol.
    pub tpm_final: WorkDistribution,
    /// The thermodynamic run the scalar reading was taken from.
    pub thermo: ThermoSeries,
}

impl NaiveStatistics {
    pub fn delta_max_scalar(&self) -> f64 {
        self.scalar_deviation.iter().copied().fold(0.0, f64::max)
    }

    pub fn delta_max_tpm(&self) -> f64 {
        self.tpm_deviation.iter().copied().fold(0.0, f64::max)
    }
}

fn sample_indices(n_steps: usize, samples: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (1..=samples).map(|k| ((k * n_steps) as f64 / samples as f64).round() as usize).collect();
    idx.push(n_steps);
    idx.retain(|&i| i >= 1 && i <= n_steps);
    idx.sort_unstable();
    idx.dedup();
    idx
}

/// Both readings of the naive weak-coupling Jarzynski average, compared with
/// `Z_s(t)/Z_s(0)` along the protocol.
pub fn naive_weak_statistics(
    model: &dyn CoupledModel,
    tau_prime: f64,
    n_steps: usize,
    beta: f64,
    options: NaiveOptions,
) -> Result<NaiveStatistics> {
    let cfg = ThermoConfig::new(beta, tau_prime, n_steps).with_dynamics(options.dynamics);
    let series = run_protocol(model, &cfg)?;
    let times: Vec<f64> = series.records.iter().map(|r| r.t).collect();
    let scalar = series.naive_exponential();
    let f0 = series.records[0].free_energy;
    let free_energy_ratio: Vec<f64> =
        series.records.iter().map(|r| (-beta * (r.free_energy - f0)).exp()).collect();
    let scalar_deviation = series.naive_deviation();

    let layout = model.layout();
    let coupled_state = gibbs(&model.total_hamiltonian(0.0)?, beta)?.state;
    let initial = uncoupled_eigen(model, 0.0)?;
    let block_tol = spectral_merge_tol(&initial, &initial);

    // dephase in the bare eigenbasis and fold in e^{β(E_n − c)}
    let c_sys = {
        let e = model.system_hamiltonian(0.0)?.eigh()?;
        0.5 * (e.min() + e.max())
    };
    let bath_eigen = model.bath_hamiltonian().eigh()?;
    let c_bath = 0.5 * (bath_eigen.min() + bath_eigen.max());
    let shift = c_sys + c_bath;
    let v = initial.vectors.as_ref();
    let rotated = &(v.adjoint() * coupled_state.entries()) * v;
    let dim = layout.total();
    let mut block_of = vec![0usize; dim];
    for (b, block) in degenerate_blocks(&initial, block_tol).iter().enumerate() {
        for &k in block {
            block_of[k] = b;
        }
    }
    let boosted = Mat::from_fn(dim, dim, |k, l| {
        if block_of[k] == block_of[l] {
            rotated[(k, l)] * (0.5 * beta * ((initial.values[k] - shift) + (initial.values[l] - shift))).exp()
        } else {
            c64::new(0.0, 0.0)
        }
    });
    let prepared = Operator::new(&(v * boosted.as_ref()) * v.adjoint())?.hermitian_part();
    let bath_weight = bath_eigen.map_real(|e| (-beta * (e - c_bath)).exp());

    let grid = TimeGrid::new(0.0, tau_prime, n_steps)?;
    let samples = sample_indices(n_steps, options.tpm_samples);
    let mut tpm_times = Vec::with_capacity(samples.len());
    let mut tpm = Vec::with_capacity(samples.len());
    let mut tpm_deviation = Vec::with_capacity(samples.len());
    let mut final_unitary = None;

    let mut propagator = match options.dynamics {
        Dynamics::Direct => Operator::identity(dim),
        Dynamics::Mapped => Operator::identity(layout.system),
    };
    let mut next_sample = samples.iter().peekable();
    for i in 0..n_steps {
        let t = grid.midpoint(i);
        let step = match options.dynamics {
            Dynamics::Direct => step_unitary(&model.total_hamiltonian(t)?, grid.dt())?,
            Dynamics::Mapped => step_unitary(&model.system_hamiltonian(t)?, grid.dt())?,
        };
        propagator = step.matmul(&propagator)?;
        if next_sample.peek() != Some(&&(i + 1)) {
            continue;
        }
        next_sample.next();
        let node = grid.node(i + 1);
        let unitary = match options.dynamics {
            Dynamics::Direct => propagator.clone(),
            Dynamics::Mapped => conjugate(model.mapping(), &kron(&propagator, &bath_propagator(model, node)?))?,
        };
        let system_weight = model.system_hamiltonian(node)?.eigh()?.map_real(|e| (-beta * (e - c_sys)).exp());
        let weight = kron(&system_weight, &bath_weight);
        let average = conjugate(&unitary, &prepared)?.expectation(&weight)?;
        let ratio = free_energy_ratio[i + 1];
        tpm_times.push(node);
        tpm.push(average);
        tpm_deviation.push((average - ratio).abs());
        if i + 1 == n_steps {
            final_unitary = Some(unitary);
        }
    }
    let final_unitary = final_unitary.expect("final node is always sampled");
    let final_eigen = uncoupled_eigen(model, tau_prime)?;
    let tpm_final = tpm_distribution_from_state(&initial, &final_eigen, &final_unitary, &coupled_state)?;

    Ok(NaiveStatistics {
        times,
        scalar,
        free_energy_ratio,
        scalar_deviation,
        tpm_times,
        tpm,
        tpm_deviation,
        tpm_final,
        thermo: series,
    })
}
