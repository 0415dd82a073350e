//! Direct-demand modeling of metro station ridership.
//!
//! The library covers the full station-level workflow: loading station,
//! track, POI, population-raster, and ridership tables; quantifying network
//! structure through degree and betweenness centrality; building a 500 m
//! pedestrian-catchment feature matrix; fitting OLS models with full
//! inferential output; backward-stepwise variable elimination by AIC;
//! influence diagnostics with a transportation-hub dummy; and k-fold
//! cross-validated R-square. The `pipeline` module drives everything from a
//! single JSON config and writes a deterministic report bundle per
//! dependent variable.
//!
//! # Module map
//!
//! - [`ingest`] - input tables and ridership aggregation
//! - [`network`] - metro graph and centrality measures
//! - [`features`] - catchment features and the explanatory-variable matrix
//! - [`regress`] - OLS with standard errors, p-values, AIC
//! - [`select`] - backward-stepwise AIC selection and cross-validation
//! - [`diagnostics`] - leverage, studentized residuals, Cook's distance
//! - [`report`] - JSON/text report rendering
//! - [`pipeline`] - config-driven end-to-end runs

pub mod diagnostics;
pub mod error;
pub mod features;
pub mod geo;
pub mod ingest;
pub mod network;
pub mod pipeline;
pub mod regress;
pub mod report;
pub mod select;

mod dist;
mod linalg;

pub use error::{Error, Result};
pub use features::{CatchmentSpec, FeatureMatrix, Transform};
pub use ingest::{
    EdgeList, PoiCategory, PoiTable, PopulationGrid, ResponseKind, RidershipRecords,
    RidershipSummary, Station, StationTable, WeekdaySet,
};
pub use network::{CentralityKind, CentralityVector, MetroGraph};
pub use pipeline::{run_features, run_pipeline, validate_config, PipelineConfig, RunSummary};
pub use regress::{fit_ols, predict, AicVariant, DesignMatrix, OlsFit};
pub use select::{backward_stepwise, cross_validated_r2, CvResult, SelectionTrace};
