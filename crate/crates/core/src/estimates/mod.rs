//! Empirical harness for the functional inequalities: both sides are evaluated
//! on seeded families and the ratios are tracked under grid refinement.

pub mod bilinear;
pub mod convolution;
pub mod family;
pub mod leibniz;
pub mod modal;
pub mod report;
pub mod scaling;
pub mod strichartz;

pub use family::{Atom, AtomSampler, FamilyKind, TestFamily, TestFunction, XProfile};
pub use report::{loglog_slope, EstimateReport, RatioStats, SampleRatio};
