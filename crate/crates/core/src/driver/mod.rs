//! Multi-prime orchestration: runs per-function reconstruction jobs across
//! the prime table with a worker pool for probe evaluation, races rational
//! reconstruction per coefficient, verifies candidates in untouched fields,
//! and persists progress per prime.

mod job;
mod later;
mod state;

pub use job::{PhaseStatus, ReconstructionJob};

use std::path::PathBuf;

use num_rational::BigRational;
use thiserror::Error;

use crate::ffield::{nth_prime, prime_scope, FieldElement, PRIME_TABLE_SIZE};
use crate::ratint::{ProbeOrder, RatError, RationalFunction};

/// Numerical black box: evaluates every target function at a probe point.
/// Output length and ordering must be identical across all calls and primes.
pub trait BlackBox: Sync {
    fn evaluate(&self, point: &[FieldElement]) -> Vec<FieldElement>;
    /// Notification hook called after the ambient prime switches.
    fn prime_changed(&self) {}
}

impl<F> BlackBox for F
where
    F: Fn(&[FieldElement]) -> Vec<FieldElement> + Sync,
{
    fn evaluate(&self, point: &[FieldElement]) -> Vec<FieldElement> {
        self(point)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verbosity {
    Silent,
    Important,
    Chatty,
}

#[derive(Clone, Debug)]
pub struct DriverOptions {
    pub threads: usize,
    pub scan: bool,
    pub save_dir: PathBuf,
    pub seed: u64,
    pub verbosity: Verbosity,
    /// Test hooks: pin the first-prime shift/anchors instead of drawing them.
    pub fixed_shift: Option<Vec<u64>>,
    pub fixed_anchors: Option<Vec<u64>>,
}

impl Default for DriverOptions {
    fn default() -> Self {
        DriverOptions {
            threads: 1,
            scan: false,
            save_dir: PathBuf::from("./ff_save"),
            seed: 1,
            verbosity: Verbosity::Silent,
            fixed_shift: None,
            fixed_anchors: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("prime table exhausted before acceptance ({0})")]
    PrimesExhausted(String),
    #[error(transparent)]
    Rat(#[from] RatError),
    #[error("persistence error: {0}")]
    State(String),
}

/// Final result of one reconstructed function.
#[derive(Clone, Debug)]
pub struct ReconstructionOutcome {
    pub function: RationalFunction<BigRational>,
    /// Exact number of black-box invocations spent on this function.
    pub probes: usize,
    /// Number of prime fields touched, including the verification field.
    pub primes: usize,
    pub verified: bool,
    pub tag: Option<String>,
    pub seed: u64,
}

/// Reconstructs every job's function over Q by iterating the prime table
/// until each candidate is verified in a field untouched by its
/// interpolation.
pub fn reconstruct<B: BlackBox>(
    jobs: &[ReconstructionJob],
    black_box: &B,
    options: &DriverOptions,
) -> Result<Vec<ReconstructionOutcome>, DriverError> {
    for prime_idx in 0..PRIME_TABLE_SIZE {
        if jobs.iter().all(|j| j.is_done()) {
            break;
        }
        // the scope guard is the prime-transition barrier: no probes are in
        // flight while it is taken or released
        let _scope = prime_scope(nth_prime(prime_idx));
        black_box.prime_changed();
        if options.verbosity >= Verbosity::Chatty {
            eprintln!("[driver] entering prime field {}", prime_idx);
        }
        for reconstruction_job in jobs.iter().filter(|j| !j.is_done()) {
            run_job_prime(reconstruction_job, black_box, prime_idx, options)?;
        }
    }
    if let Some(j) = jobs.iter().find(|j| !j.is_done()) {
        return Err(DriverError::PrimesExhausted(format!(
            "job {} still unsettled after {} primes",
            j.index(),
            PRIME_TABLE_SIZE
        )));
    }
    Ok(jobs
        .iter()
        .map(|j| j.outcome().expect("done job has an outcome"))
        .collect())
}

fn run_job_prime<B: BlackBox>(
    job: &ReconstructionJob,
    black_box: &B,
    prime_idx: usize,
    options: &DriverOptions,
) -> Result<(), DriverError> {
    job.begin_prime(prime_idx, options)?;
    loop {
        match job.interpolate()? {
            PhaseStatus::PrimeComplete | PhaseStatus::Finished => return Ok(()),
            PhaseStatus::Busy => unreachable!("single-threaded driver loop"),
            PhaseStatus::NeedsProbes => {
                let pending = job.pending_probes();
                let component = job.index();
                let values = evaluate_batch(black_box, &pending, options.threads, component);
                job.add_probes(values.len());
                for (order, value) in values {
                    job.feed(&order, value);
                }
            }
        }
    }
}

/// Evaluates a batch of probe points, splitting across a scoped worker pool
/// when it pays off; results keep the request order.
fn evaluate_batch<B: BlackBox>(
    black_box: &B,
    points: &[(ProbeOrder, Vec<FieldElement>)],
    threads: usize,
    component: usize,
) -> Vec<(ProbeOrder, FieldElement)> {
    let eval_one = |(order, point): &(ProbeOrder, Vec<FieldElement>)| {
        let out = black_box.evaluate(point);
        (order.clone(), out[component])
    };
    if threads <= 1 || points.len() < 4 {
        return points.iter().map(eval_one).collect();
    }
    let chunk = points.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = points
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(eval_one).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("probe worker panicked"))
            .collect()
    })
}
