//! # topogap
//!
//! Estimate a trained network's test performance without a test set.
//!
//! The pipeline runs in stages, each exposed as its own module:
//!
//! * [`metric`] - load node activations and build the Pearson correlation
//!   metric space, converted to a distance matrix.
//! * [`filtration`] - Vietoris-Rips filtration up to dimension 2.
//! * [`homology`] - Z/2 persistent homology (dimensions 0 and 1), Betti curves
//!   and a brute-force rank oracle.
//! * [`summaries`] - life and midlife of the dimension-1 diagram.
//! * [`gap`] - linear regression from (life, midlife) to the train/test
//!   performance gap, test-performance estimates and cross-validation.
//! * [`earlystop`] - stopping rule on the Betti-curve peak scale.
//!
//! ```
//! use topogap::filtration::vietoris_rips;
//! use topogap::homology::persistent_homology;
//! use topogap::metric::DistanceMatrix;
//! use topogap::summaries::{summarize, InfiniteBarPolicy};
//!
//! let s = 2f64.sqrt();
//! let dist = DistanceMatrix::from_rows(vec![
//!     vec![0.0, 1.0, s, 1.0],
//!     vec![1.0, 0.0, 1.0, s],
//!     vec![s, 1.0, 0.0, 1.0],
//!     vec![1.0, s, 1.0, 0.0],
//! ])
//! .unwrap();
//! let complex = vietoris_rips(&dist, 1.5, 2).unwrap();
//! let (_h0, h1) = persistent_homology(&complex);
//! let summary = summarize(&h1, InfiniteBarPolicy::Exclude).unwrap();
//! assert!((summary.life - (s - 1.0)).abs() < 1e-12);
//! ```

#![allow(clippy::needless_range_loop)]

pub mod earlystop;
pub mod error;
pub mod filtration;
pub mod format;
pub mod gap;
pub mod homology;
pub mod metric;
pub mod summaries;

pub use error::{Error, ErrorKind, Result};
