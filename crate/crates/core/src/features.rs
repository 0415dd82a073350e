//! Explanatory-variable construction: pedestrian-catchment POI counts,
//! catchment population, days since opening, network variables, and the
//! transportation-hub dummy, assembled into one matrix with a row per
//! station.
//!
//! Catchment membership is inclusive: a point (POI or raster cell center)
//! at exactly the radius counts as inside. Raster membership uses cell
//! centers, not area-weighted clipping.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{haversine_km, haversine_m, LatLon, EARTH_RADIUS_KM};
use crate::ingest::{fmt_f64, PoiCategory, PoiTable, PopulationGrid, ResponseKind, RidershipSummary, Station, StationTable};
use crate::network::CentralityVector;
use crate::regress::DesignMatrix;

/// Canonical column order of the explanatory-variable matrix.
pub const COLUMN_NAMES: [&str; 15] = [
    "Residence",
    "Hotel",
    "Shopping",
    "School",
    "Office",
    "Bank",
    "Bus",
    "Hospital",
    "University",
    "Pop",
    "Days_open",
    "Dis_to_center",
    "Degree",
    "Betweenness",
    "Trans_hub",
];

/// Pedestrian catchment area: everything within `radius_m` of a station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatchmentSpec {
    pub radius_m: f64,
}

impl Default for CatchmentSpec {
    fn default() -> Self {
        CatchmentSpec { radius_m: 500.0 }
    }
}

impl CatchmentSpec {
    pub fn new(radius_m: f64) -> Result<Self> {
        if !(radius_m > 0.0) {
            return Err(Error::Data(format!("catchment radius must be positive, got {radius_m}")));
        }
        Ok(CatchmentSpec { radius_m })
    }
}

/// Per-column transformation state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Identity,
    Log1p,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureColumn {
    pub name: String,
    pub values: Vec<f64>,
    pub transform: Transform,
}

/// One row per station, named columns, with per-column transform tags.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    station_ids: Vec<String>,
    columns: Vec<FeatureColumn>,
}

/// Min/mean/max of one column, the layout of the variable-summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSummary {
    pub name: String,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl FeatureMatrix {
    pub fn new(station_ids: Vec<String>, columns: Vec<FeatureColumn>) -> Result<Self> {
        let n = station_ids.len();
        let mut seen = std::collections::HashSet::new();
        for c in &columns {
            if c.values.len() != n {
                return Err(Error::Data(format!(
                    "column '{}' has {} values for {} stations",
                    c.name,
                    c.values.len(),
                    n
                )));
            }
            if c.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("column '{}' contains a non-finite cell", c.name)));
            }
            if !seen.insert(c.name.clone()) {
                return Err(Error::Data(format!("duplicate column name '{}'", c.name)));
            }
        }
        Ok(FeatureMatrix { station_ids, columns })
    }

    pub fn n_stations(&self) -> usize {
        self.station_ids.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn station_ids(&self) -> &[String] {
        &self.station_ids
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column(&self, name: &str) -> Option<&FeatureColumn> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub(crate) fn set_column_values(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        let n = self.n_stations();
        if values.len() != n {
            return Err(Error::Data(format!("column '{name}': expected {n} values, got {}", values.len())));
        }
        match self.columns.iter_mut().find(|c| c.name == name) {
            Some(c) => {
                c.values = values;
                Ok(())
            }
            None => Err(Error::Data(format!("no column named '{name}'"))),
        }
    }

    /// Min/mean/max per column, in column order.
    pub fn summary(&self) -> Vec<ColumnSummary> {
        self.columns
            .iter()
            .map(|c| {
                let min = c.values.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = c.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mean = c.values.iter().sum::<f64>() / c.values.len() as f64;
                ColumnSummary { name: c.name.clone(), min, mean, max }
            })
            .collect()
    }

    /// Design matrix (intercept plus the named columns, in the given order)
    /// for regression against a response.
    pub fn design(&self, variables: &[String]) -> Result<DesignMatrix> {
        let mut names = Vec::with_capacity(variables.len());
        let mut cols = Vec::with_capacity(variables.len());
        for v in variables {
            let c = self
                .column(v)
                .ok_or_else(|| Error::Data(format!("no column named '{v}'")))?;
            names.push(c.name.clone());
            cols.push(c.values.clone());
        }
        DesignMatrix::with_intercept(names, cols)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .from_path(path)
            .map_err(|e| Error::parse(path, None, e.to_string()))?;
        let mut header = vec!["station_id".to_string()];
        header.extend(self.columns.iter().map(|c| c.name.clone()));
        w.write_record(&header).map_err(|e| Error::parse(path, None, e.to_string()))?;
        for (i, id) in self.station_ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend(self.columns.iter().map(|c| fmt_f64(c.values[i])));
            w.write_record(&rec).map_err(|e| Error::parse(path, None, e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Io { path: path.into(), source: e })
    }

    pub fn save_summary_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .from_path(path)
            .map_err(|e| Error::parse(path, None, e.to_string()))?;
        w.write_record(["column", "min", "mean", "max"])
            .map_err(|e| Error::parse(path, None, e.to_string()))?;
        for s in self.summary() {
            w.write_record([s.name.as_str(), &fmt_f64(s.min), &fmt_f64(s.mean), &fmt_f64(s.max)])
                .map_err(|e| Error::parse(path, None, e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Io { path: path.into(), source: e })
    }
}

/// POI counts per category within the catchment (inclusive boundary).
/// Every category is present in the result, zero when absent.
pub fn catchment_count(
    station: &Station,
    pois: &PoiTable,
    spec: &CatchmentSpec,
) -> BTreeMap<PoiCategory, u64> {
    let mut counts: BTreeMap<PoiCategory, u64> = PoiCategory::ALL.iter().map(|&c| (c, 0)).collect();
    let pos = station.position();
    for poi in &pois.rows {
        if haversine_m(pos, poi.position()) <= spec.radius_m {
            *counts.get_mut(&poi.category).unwrap() += 1;
        }
    }
    counts
}

/// Result of summing raster population over a catchment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatchmentPopulation {
    pub sum: f64,
    /// No-data cells whose centers fell inside the catchment; they
    /// contribute 0 to `sum`.
    pub nodata_cells: usize,
    /// Station position lay outside the raster extent; `sum` is 0.
    pub outside_extent: bool,
}

/// Sum of raster values over cells whose center lies within the catchment.
pub fn population_in_catchment(
    station: &Station,
    grid: &PopulationGrid,
    spec: &CatchmentSpec,
) -> CatchmentPopulation {
    let pos = station.position();
    let lat_max = grid.origin.lat + grid.nrows as f64 * grid.cell_size;
    let lon_max = grid.origin.lon + grid.ncols as f64 * grid.cell_size;
    if pos.lat < grid.origin.lat || pos.lat > lat_max || pos.lon < grid.origin.lon || pos.lon > lon_max {
        return CatchmentPopulation { sum: 0.0, nodata_cells: 0, outside_extent: true };
    }

    // Bounding box of candidate cells.
    let radius_km = spec.radius_m / 1000.0;
    let dlat = (radius_km / EARTH_RADIUS_KM).to_degrees();
    let cos_lat = pos.lat.to_radians().cos().max(1e-12);
    let dlon = (radius_km / (EARTH_RADIUS_KM * cos_lat)).to_degrees().min(180.0);

    let col_lo = (((pos.lon - dlon - grid.origin.lon) / grid.cell_size).floor().max(0.0)) as usize;
    let col_hi = ((((pos.lon + dlon - grid.origin.lon) / grid.cell_size).ceil() as i64).max(0) as usize)
        .min(grid.ncols);
    // Row 0 is the northernmost row.
    let row_of_lat = |lat: f64| grid.nrows as f64 - (lat - grid.origin.lat) / grid.cell_size;
    let row_lo = (row_of_lat(pos.lat + dlat).floor().max(0.0)) as usize;
    let row_hi = ((row_of_lat(pos.lat - dlat).ceil() as i64).max(0) as usize).min(grid.nrows);

    let mut sum = 0.0;
    let mut nodata_cells = 0;
    for r in row_lo..row_hi {
        for c in col_lo..col_hi {
            if haversine_m(pos, grid.cell_center(r, c)) <= spec.radius_m {
                let v = grid.value(r, c);
                if grid.is_nodata(v) {
                    nodata_cells += 1;
                } else {
                    sum += v;
                }
            }
        }
    }
    CatchmentPopulation { sum, nodata_cells, outside_extent: false }
}

/// Whole days from the station opening to the reference date.
pub fn days_since_opening(station: &Station, reference_date: NaiveDate) -> Result<i64> {
    let days = (reference_date - station.opened_date).num_days();
    if days < 0 {
        return Err(Error::Data(format!(
            "station '{}' opened {} after the reference date {}",
            station.station_id, station.opened_date, reference_date
        )));
    }
    Ok(days)
}

/// Feature matrix plus non-fatal observations gathered while assembling it.
#[derive(Debug, Clone)]
pub struct FeatureAssembly {
    pub matrix: FeatureMatrix,
    pub warnings: Vec<String>,
}

/// Assemble the full explanatory-variable matrix: one row per station, the
/// fifteen canonical columns, identity transforms.
#[allow(clippy::too_many_arguments)]
pub fn assemble_feature_matrix(
    stations: &StationTable,
    pois: &PoiTable,
    grid: &PopulationGrid,
    degree: &CentralityVector,
    betweenness: &CentralityVector,
    center: LatLon,
    spec: &CatchmentSpec,
    reference_date: NaiveDate,
) -> Result<FeatureAssembly> {
    let n = stations.len();
    let mut cols: BTreeMap<&str, Vec<f64>> =
        COLUMN_NAMES.iter().map(|&name| (name, Vec::with_capacity(n))).collect();
    let mut warnings = Vec::new();
    let mut nodata_cells_total = 0usize;

    for s in &stations.rows {
        let counts = catchment_count(s, pois, spec);
        for (cat, count) in &counts {
            cols.get_mut(cat.column_name()).unwrap().push(*count as f64);
        }

        let pop = population_in_catchment(s, grid, spec);
        if pop.outside_extent {
            warnings.push(format!(
                "station '{}' lies outside the population raster extent; Pop set to 0",
                s.station_id
            ));
        }
        nodata_cells_total += pop.nodata_cells;
        cols.get_mut("Pop").unwrap().push(pop.sum);

        cols.get_mut("Days_open").unwrap().push(days_since_opening(s, reference_date)? as f64);
        cols.get_mut("Dis_to_center").unwrap().push(haversine_km(s.position(), center));

        let deg = degree
            .get(&s.station_id)
            .ok_or_else(|| Error::Data(format!("degree centrality missing station '{}'", s.station_id)))?;
        let bet = betweenness
            .get(&s.station_id)
            .ok_or_else(|| Error::Data(format!("betweenness centrality missing station '{}'", s.station_id)))?;
        cols.get_mut("Degree").unwrap().push(deg);
        cols.get_mut("Betweenness").unwrap().push(bet);
        cols.get_mut("Trans_hub").unwrap().push(if s.is_hub { 1.0 } else { 0.0 });
    }

    if nodata_cells_total > 0 {
        warnings.push(format!(
            "{nodata_cells_total} no-data raster cells fell inside catchments and contributed 0"
        ));
    }

    let columns = COLUMN_NAMES
        .iter()
        .map(|&name| FeatureColumn {
            name: name.to_string(),
            values: cols.remove(name).unwrap(),
            transform: Transform::Identity,
        })
        .collect();
    let matrix = FeatureMatrix::new(stations.ids(), columns)?;
    Ok(FeatureAssembly { matrix, warnings })
}

/// Apply per-column transformations, returning a tagged copy. Columns not
/// named keep their values and tags.
pub fn transform(matrix: &FeatureMatrix, choices: &BTreeMap<String, Transform>) -> Result<FeatureMatrix> {
    for name in choices.keys() {
        if matrix.column(name).is_none() {
            return Err(Error::Data(format!("transform names unknown column '{name}'")));
        }
    }
    let columns = matrix
        .columns
        .iter()
        .map(|c| -> Result<FeatureColumn> {
            match choices.get(&c.name) {
                None | Some(Transform::Identity) => Ok(c.clone()),
                Some(Transform::Log1p) => {
                    if c.transform != Transform::Identity {
                        return Err(Error::Data(format!(
                            "column '{}' is already transformed ({:?})",
                            c.name, c.transform
                        )));
                    }
                    if let Some(v) = c.values.iter().find(|&&v| v < 0.0) {
                        return Err(Error::Data(format!(
                            "log1p on column '{}' with negative value {v}",
                            c.name
                        )));
                    }
                    Ok(FeatureColumn {
                        name: c.name.clone(),
                        values: c.values.iter().map(|v| v.ln_1p()).collect(),
                        transform: Transform::Log1p,
                    })
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    FeatureMatrix::new(matrix.station_ids.clone(), columns)
}

/// One cell pairing of the scatterplot-matrix export.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterRow {
    pub var_x: String,
    pub var_y: String,
    pub station_id: String,
    pub x: f64,
    pub y: f64,
}

/// Long-format pairwise data over all variables (feature columns followed
/// by the six responses): one row per (var_x, var_y, station).
pub fn scatterplot_matrix_data(
    matrix: &FeatureMatrix,
    responses: &RidershipSummary,
) -> Result<Vec<ScatterRow>> {
    let mut names: Vec<String> = matrix.column_names();
    let mut series: Vec<Vec<f64>> = matrix.columns.iter().map(|c| c.values.clone()).collect();
    for kind in ResponseKind::ALL {
        let mut vals = Vec::with_capacity(matrix.n_stations());
        for id in &matrix.station_ids {
            let r = responses
                .get(id)
                .ok_or_else(|| Error::Data(format!("no ridership summary for station '{id}'")))?;
            vals.push(kind.value(r));
        }
        names.push(kind.name().to_string());
        series.push(vals);
    }

    let mut rows = Vec::with_capacity(names.len() * names.len() * matrix.n_stations());
    for (xi, xname) in names.iter().enumerate() {
        for (yi, yname) in names.iter().enumerate() {
            for (si, id) in matrix.station_ids.iter().enumerate() {
                rows.push(ScatterRow {
                    var_x: xname.clone(),
                    var_y: yname.clone(),
                    station_id: id.clone(),
                    x: series[xi][si],
                    y: series[yi][si],
                });
            }
        }
    }
    Ok(rows)
}

pub fn save_scatter_csv(rows: &[ScatterRow], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .from_path(path)
        .map_err(|e| Error::parse(path, None, e.to_string()))?;
    w.write_record(["var_x", "var_y", "station_id", "x", "y"])
        .map_err(|e| Error::parse(path, None, e.to_string()))?;
    for r in rows {
        w.write_record([r.var_x.as_str(), r.var_y.as_str(), r.station_id.as_str(), &fmt_f64(r.x), &fmt_f64(r.y)])
            .map_err(|e| Error::parse(path, None, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Io { path: path.into(), source: e })
}
