//! Evidential threat-correlation engine.
//!
//! Combines uncertain reports about a pair of observed threats — locations,
//! movement feasibility, sensor coverage, typical separations — under
//! Dempster-Shafer belief calculus, and classifies the second threat as the
//! first unchanged, the first after movement, or a different threat.
//! Conflict among the reports is not silently renormalized away: it is
//! measured, attributed to the arguments responsible, and resolved either
//! by discrediting a specific argument (after an evidential test) or by
//! across-the-board discounting.
//!
//! Module layout:
//! - [`mass`]: generic mass functions, Dempster's rule, discounting
//! - [`bitset`]: small finite frames used as a combination kernel
//! - [`frame`]: the geometric frame of discernment (disc pairs with a
//!   distance constraint, in same-threat and different-threat sections)
//! - [`evidence`]: argument construction from tabular inputs
//! - [`resolver`]: conflict attribution and the three-pass resolution loop
//! - [`route`]: plausibility-weighted danger fields and route choice
//! - [`scenario`]: the scenario file format and pipeline orchestration

pub mod bitset;
pub mod evidence;
pub mod frame;
pub mod mass;
pub mod resolver;
pub mod route;
pub mod scenario;

pub use evidence::{
    build_coverage_bel, build_location_bel, build_movement_bel, build_separation_bel, Argument,
    ArgumentRole, BandRow, ContourRow, EvidenceError, LocationCoordinate, ToulminInfo,
};
pub use frame::{Disc, DistanceBand, Hypothesis, PairConstraint, Point, ThreatElement};
pub use mass::{
    CombinationResult, Element, MassError, MassFunction, SetRelation, MASS_TOLERANCE,
    NEGLIGIBLE_MASS,
};
pub use resolver::{
    resolve, CoarseReport, ConflictAttribution, DiscreditingFactor, PresenceBelief, Resolution,
    ResolutionTrace, ResolveOptions, ResolverError, SelectedTest, Test, TraceStep,
};
pub use route::{select_route, DangerModel, Route, RouteError};
pub use scenario::{
    load_scenario, parse_scenario, run, OutputFormat, RouteChoice, RunError, RunOptions,
    RunOutput, ScenarioError, ScenarioFile,
};
