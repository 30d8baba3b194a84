//! # hloc
//!
//! Time-dependent local Hurst exponent of a price series, estimated by
//! detrended fluctuation analysis on a sliding observation window, plus the
//! crash-warning rules built on top of it.
//!
//! - [`dfa`]: fluctuation function and log-log Hurst fit on one window
//! - [`track`]: sliding estimation and weekly/monthly moving averages
//! - [`signals`]: sell/buy conditions, trend lines, crash corrections
//! - [`synth`]: exact-covariance fractional Brownian motion and crash fixtures
//! - [`io`]: CSV formats
//! - [`cli`]: the `hloc` command line
//!
//! ```
//! use hloc::{dfa::DfaConfig, synth::{fbm_price_series, FbmSpec}, track::sliding_hurst};
//!
//! let series = fbm_price_series(&FbmSpec::new(0.5, 400, 7), 100.0).unwrap();
//! let track = sliding_hurst(&series, &DfaConfig::new(215)).unwrap();
//! assert_eq!(track.len(), 400 - 215 + 1);
//! ```

pub mod cli;
pub mod dfa;
pub mod error;
pub mod io;
pub mod regression;
pub mod series;
pub mod signals;
pub mod synth;
pub mod track;

pub use dfa::{Coverage, DfaConfig, FluctuationCurve, HurstEstimate, ObservationWindow};
pub use error::{HlocError, Result};
pub use series::PriceSeries;
pub use signals::{CrashEvent, SignalThresholds, SignalVerdict, TrendFit, Verdict};
pub use synth::{DropSchedule, FbmSpec};
pub use track::{HurstTrack, TrackEntry};
