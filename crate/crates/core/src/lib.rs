//! Feature subset selection with a kernelized fuzzy-rough separability
//! criterion and a memetic (binary differential evolution + tabu search)
//! optimizer, plus reference optimizers, an exhaustive oracle and a k-NN
//! evaluation harness.

pub mod baselines;
pub mod criterion;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod fitness;
pub mod mask;
pub mod memetic;
pub mod oracle;
pub mod trace;

pub use criterion::{gc, CriterionValue, KernelConfig};
pub use dataset::{Dataset, SynthSpec};
pub use error::{Error, Result};
pub use fitness::{Fitness, KfrsFitness};
pub use mask::FeatureMask;
pub use memetic::{run_ma, MAConfig};
pub use trace::{GenerationRecord, RunLog, SelectionResult, Termination};
