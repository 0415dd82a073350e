//! Input tables: stations, track segments, POIs, population raster, and
//! ridership records, plus aggregation of ridership into the six dependent
//! variables (weekday/weekend boarding, alighting, and their sum).
//!
//! All loaders validate against their schema and report the offending
//! 1-based data row on failure. Loaded tables are immutable; loaders are
//! independent of each other except `load_edges`, which needs the station
//! table for referential checks.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::LatLon;

// ---------------------------------------------------------------------------
// Stations

#[derive(Debug, Clone, PartialEq)]
pub struct Station {
    pub station_id: String,
    pub name: String,
    pub lat: f64,
    pub lon: f64,
    pub opened_date: NaiveDate,
    pub is_hub: bool,
}

impl Station {
    pub fn position(&self) -> LatLon {
        LatLon::new(self.lat, self.lon)
    }
}

/// The unit of observation: one row per station, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct StationTable {
    pub rows: Vec<Station>,
}

impl StationTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.rows.iter().map(|s| s.station_id.clone()).collect()
    }

    pub fn index_of(&self, station_id: &str) -> Option<usize> {
        self.rows.iter().position(|s| s.station_id == station_id)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = csv_writer(path)?;
        write_record(&mut w, path, &["station_id", "name", "lat", "lon", "opened_date", "is_hub"])?;
        for s in &self.rows {
            write_record(
                &mut w,
                path,
                &[
                    s.station_id.as_str(),
                    s.name.as_str(),
                    &fmt_f64(s.lat),
                    &fmt_f64(s.lon),
                    &s.opened_date.format("%Y-%m-%d").to_string(),
                    if s.is_hub { "1" } else { "0" },
                ],
            )?;
        }
        w.flush().map_err(|e| Error::Io { path: path.into(), source: e })
    }
}

const STATION_HEADER: [&str; 6] = ["station_id", "name", "lat", "lon", "opened_date", "is_hub"];

pub fn load_stations(path: &Path) -> Result<StationTable> {
    let mut rdr = csv_reader(path)?;
    check_header(&mut rdr, path, &STATION_HEADER)?;

    let mut rows = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::parse(path, Some(row), e.to_string()))?;
        expect_fields(path, row, &rec, STATION_HEADER.len())?;

        let station_id = rec[0].trim().to_string();
        if station_id.is_empty() {
            return Err(Error::parse(path, Some(row), "field station_id: empty"));
        }
        if !seen.insert(station_id.clone()) {
            return Err(Error::parse(path, Some(row), format!("duplicate station_id '{station_id}'")));
        }
        let lat = parse_f64(path, row, "lat", &rec[2])?;
        let lon = parse_f64(path, row, "lon", &rec[3])?;
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::parse(path, Some(row), format!("field lat: {lat} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(Error::parse(path, Some(row), format!("field lon: {lon} outside [-180, 180]")));
        }
        let opened_date = parse_date(path, row, "opened_date", &rec[4])?;
        let is_hub = match rec[5].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::parse(path, Some(row), format!("field is_hub: '{other}' is not 0 or 1")))
            }
        };
        rows.push(Station {
            station_id,
            name: rec[1].to_string(),
            lat,
            lon,
            opened_date,
            is_hub,
        });
    }
    if rows.is_empty() {
        return Err(Error::parse(path, None, "no stations"));
    }
    Ok(StationTable { rows })
}

// ---------------------------------------------------------------------------
// Edges

/// Undirected physical track segments between stations.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeList {
    pub segments: Vec<(String, String)>,
}

impl EdgeList {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = csv_writer(path)?;
        write_record(&mut w, path, &["from_id", "to_id"])?;
        for (a, b) in &self.segments {
            write_record(&mut w, path, &[a.as_str(), b.as_str()])?;
        }
        w.flush().map_err(|e| Error::Io { path: path.into(), source: e })
    }
}

pub fn load_edges(path: &Path, stations: &StationTable) -> Result<EdgeList> {
    let known: HashSet<&str> = stations.rows.iter().map(|s| s.station_id.as_str()).collect();
    let mut rdr = csv_reader(path)?;
    check_header(&mut rdr, path, &["from_id", "to_id"])?;

    let mut segments = Vec::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::parse(path, Some(row), e.to_string()))?;
        expect_fields(path, row, &rec, 2)?;
        let from = rec[0].trim().to_string();
        let to = rec[1].trim().to_string();
        for id in [&from, &to] {
            if !known.contains(id.as_str()) {
                return Err(Error::parse(path, Some(row), format!("edge references unknown station '{id}'")));
            }
        }
        if from == to {
            return Err(Error::parse(path, Some(row), format!("self-loop at station '{from}'")));
        }
        let key = if from <= to { (from.clone(), to.clone()) } else { (to.clone(), from.clone()) };
        if !seen.insert(key) {
            return Err(Error::parse(path, Some(row), format!("duplicate segment {from}-{to}")));
        }
        segments.push((from, to));
    }
    Ok(EdgeList { segments })
}

// ---------------------------------------------------------------------------
// POIs

/// Point-of-interest categories; `BusStation` doubles as the intermodal
/// accessibility variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoiCategory {
    Residence,
    Hotel,
    Shopping,
    School,
    Office,
    Bank,
    Hospital,
    University,
    BusStation,
}

impl PoiCategory {
    pub const ALL: [PoiCategory; 9] = [
        PoiCategory::Residence,
        PoiCategory::Hotel,
        PoiCategory::Shopping,
        PoiCategory::School,
        PoiCategory::Office,
        PoiCategory::Bank,
        PoiCategory::Hospital,
        PoiCategory::University,
        PoiCategory::BusStation,
    ];

    pub fn parse(s: &str) -> Option<PoiCategory> {
        Some(match s {
            "residence" => PoiCategory::Residence,
            "hotel" => PoiCategory::Hotel,
            "shopping" => PoiCategory::Shopping,
            "school" => PoiCategory::School,
            "office" => PoiCategory::Office,
            "bank" => PoiCategory::Bank,
            "hospital" => PoiCategory::Hospital,
            "university" => PoiCategory::University,
            "bus_station" => PoiCategory::BusStation,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PoiCategory::Residence => "residence",
            PoiCategory::Hotel => "hotel",
            PoiCategory::Shopping => "shopping",
            PoiCategory::School => "school",
            PoiCategory::Office => "office",
            PoiCategory::Bank => "bank",
            PoiCategory::Hospital => "hospital",
            PoiCategory::University => "university",
            PoiCategory::BusStation => "bus_station",
        }
    }

    /// Name of the explanatory-variable column this category feeds.
    pub fn column_name(self) -> &'static str {
        match self {
            PoiCategory::Residence => "Residence",
            PoiCategory::Hotel => "Hotel",
            PoiCategory::Shopping => "Shopping",
            PoiCategory::School => "School",
            PoiCategory::Office => "Office",
            PoiCategory::Bank => "Bank",
            PoiCategory::Hospital => "Hospital",
            PoiCategory::University => "University",
            PoiCategory::BusStation => "Bus",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Poi {
    pub poi_id: String,
    pub category: PoiCategory,
    pub lat: f64,
    pub lon: f64,
}

impl Poi {
    pub fn position(&self) -> LatLon {
        LatLon::new(self.lat, self.lon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoiTable {
    pub rows: Vec<Poi>,
}

impl PoiTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = csv_writer(path)?;
        write_record(&mut w, path, &["poi_id", "category", "lat", "lon"])?;
        for p in &self.rows {
            write_record(
                &mut w,
                path,
                &[p.poi_id.as_str(), p.category.as_str(), &fmt_f64(p.lat), &fmt_f64(p.lon)],
            )?;
        }
        w.flush().map_err(|e| Error::Io { path: path.into(), source: e })
    }
}

pub fn load_pois(path: &Path) -> Result<PoiTable> {
    let mut rdr = csv_reader(path)?;
    check_header(&mut rdr, path, &["poi_id", "category", "lat", "lon"])?;

    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::parse(path, Some(row), e.to_string()))?;
        expect_fields(path, row, &rec, 4)?;
        let category = PoiCategory::parse(rec[1].trim()).ok_or_else(|| {
            Error::parse(path, Some(row), format!("field category: unknown category '{}'", &rec[1]))
        })?;
        let lat = parse_f64(path, row, "lat", &rec[2])?;
        let lon = parse_f64(path, row, "lon", &rec[3])?;
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::parse(path, Some(row), format!("coordinates ({lat}, {lon}) out of range")));
        }
        rows.push(Poi { poi_id: rec[0].to_string(), category, lat, lon });
    }
    Ok(PoiTable { rows })
}

// ---------------------------------------------------------------------------
// Population raster (ESRI ASCII grid)

/// Gridded population counts. Values are stored in file order: row 0 is the
/// northernmost row. `origin` is the lower-left corner of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationGrid {
    pub origin: LatLon,
    pub cell_size: f64,
    pub nrows: usize,
    pub ncols: usize,
    pub values: Vec<f64>,
    pub nodata: Option<f64>,
}

impl PopulationGrid {
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.ncols + col]
    }

    pub fn is_nodata(&self, v: f64) -> bool {
        self.nodata.map_or(false, |nd| v == nd)
    }

    /// Center coordinates of cell (row, col); row 0 is the northernmost row.
    pub fn cell_center(&self, row: usize, col: usize) -> LatLon {
        LatLon::new(
            self.origin.lat + (self.nrows as f64 - row as f64 - 0.5) * self.cell_size,
            self.origin.lon + (col as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(&format!("ncols {}\n", self.ncols));
        out.push_str(&format!("nrows {}\n", self.nrows));
        out.push_str(&format!("xllcorner {}\n", fmt_f64(self.origin.lon)));
        out.push_str(&format!("yllcorner {}\n", fmt_f64(self.origin.lat)));
        out.push_str(&format!("cellsize {}\n", fmt_f64(self.cell_size)));
        if let Some(nd) = self.nodata {
            out.push_str(&format!("nodata_value {}\n", fmt_f64(nd)));
        }
        for r in 0..self.nrows {
            let row: Vec<String> = (0..self.ncols).map(|c| fmt_f64(self.value(r, c))).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::Io { path: path.into(), source: e })
    }
}

pub fn load_population_grid(path: &Path) -> Result<PopulationGrid> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.into(), source: e })?;

    let mut ncols: Option<usize> = None;
    let mut nrows: Option<usize> = None;
    let mut xll: Option<(f64, bool)> = None; // (value, is_center)
    let mut yll: Option<(f64, bool)> = None;
    let mut cell_size: Option<f64> = None;
    let mut nodata: Option<f64> = None;
    let mut values: Vec<f64> = Vec::new();

    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let first = toks.next().unwrap();
        if first.chars().next().map_or(false, |c| c.is_ascii_alphabetic()) {
            let key = first.to_ascii_lowercase();
            let val = toks
                .next()
                .ok_or_else(|| Error::parse(path, None, format!("header '{key}' missing value")))?;
            match key.as_str() {
                "ncols" => ncols = Some(parse_usize(path, &key, val)?),
                "nrows" => nrows = Some(parse_usize(path, &key, val)?),
                "xllcorner" => xll = Some((parse_header_f64(path, &key, val)?, false)),
                "xllcenter" => xll = Some((parse_header_f64(path, &key, val)?, true)),
                "yllcorner" => yll = Some((parse_header_f64(path, &key, val)?, false)),
                "yllcenter" => yll = Some((parse_header_f64(path, &key, val)?, true)),
                "cellsize" => cell_size = Some(parse_header_f64(path, &key, val)?),
                "nodata_value" => nodata = Some(parse_header_f64(path, &key, val)?),
                other => return Err(Error::parse(path, None, format!("unknown header '{other}'"))),
            }
        } else {
            for tok in line.split_whitespace() {
                values.push(
                    tok.parse::<f64>()
                        .map_err(|_| Error::parse(path, None, format!("invalid grid value '{tok}'")))?,
                );
            }
        }
    }

    let ncols = ncols.ok_or_else(|| Error::parse(path, None, "missing header 'ncols'"))?;
    let nrows = nrows.ok_or_else(|| Error::parse(path, None, "missing header 'nrows'"))?;
    let (x, x_center) = xll.ok_or_else(|| Error::parse(path, None, "missing header 'xllcorner'"))?;
    let (y, y_center) = yll.ok_or_else(|| Error::parse(path, None, "missing header 'yllcorner'"))?;
    let cell_size = cell_size.ok_or_else(|| Error::parse(path, None, "missing header 'cellsize'"))?;

    if nrows < 1 || ncols < 1 {
        return Err(Error::parse(path, None, format!("grid must be at least 1x1, got {nrows}x{ncols}")));
    }
    if cell_size <= 0.0 {
        return Err(Error::parse(path, None, format!("cellsize must be positive, got {cell_size}")));
    }
    if values.len() != nrows * ncols {
        return Err(Error::parse(
            path,
            None,
            format!("grid dimension mismatch: expected {}x{} = {} values, found {}", nrows, ncols, nrows * ncols, values.len()),
        ));
    }
    for &v in &values {
        if v < 0.0 && Some(v) != nodata {
            return Err(Error::parse(path, None, format!("negative grid value {v} is not the no-data sentinel")));
        }
    }

    let origin = LatLon::new(
        if y_center { y - cell_size / 2.0 } else { y },
        if x_center { x - cell_size / 2.0 } else { x },
    );
    Ok(PopulationGrid { origin, cell_size, nrows, ncols, values, nodata })
}

// ---------------------------------------------------------------------------
// Ridership

#[derive(Debug, Clone, PartialEq)]
pub struct RidershipRecord {
    pub station_id: String,
    pub date: NaiveDate,
    pub boardings: u64,
    pub alightings: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidershipRecords {
    pub rows: Vec<RidershipRecord>,
}

impl RidershipRecords {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = csv_writer(path)?;
        write_record(&mut w, path, &["station_id", "date", "boardings", "alightings"])?;
        for r in &self.rows {
            write_record(
                &mut w,
                path,
                &[
                    r.station_id.as_str(),
                    &r.date.format("%Y-%m-%d").to_string(),
                    &r.boardings.to_string(),
                    &r.alightings.to_string(),
                ],
            )?;
        }
        w.flush().map_err(|e| Error::Io { path: path.into(), source: e })
    }
}

pub fn load_ridership(path: &Path) -> Result<RidershipRecords> {
    let mut rdr = csv_reader(path)?;
    check_header(&mut rdr, path, &["station_id", "date", "boardings", "alightings"])?;

    let mut rows = Vec::new();
    let mut seen: HashSet<(String, NaiveDate)> = HashSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::parse(path, Some(row), e.to_string()))?;
        expect_fields(path, row, &rec, 4)?;
        let station_id = rec[0].trim().to_string();
        let date = parse_date(path, row, "date", &rec[1])?;
        if !seen.insert((station_id.clone(), date)) {
            return Err(Error::parse(path, Some(row), format!("duplicate record for ({station_id}, {date})")));
        }
        let boardings = parse_count(path, row, "boardings", &rec[2])?;
        let alightings = parse_count(path, row, "alightings", &rec[3])?;
        rows.push(RidershipRecord { station_id, date, boardings, alightings });
    }
    Ok(RidershipRecords { rows })
}

// ---------------------------------------------------------------------------
// Weekday set and aggregation

/// The set of days-of-week counted as weekdays; the complement is the
/// weekend. Defaults to Monday through Friday.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeekdaySet([bool; 7]);

impl Default for WeekdaySet {
    fn default() -> Self {
        WeekdaySet([true, true, true, true, true, false, false])
    }
}

impl WeekdaySet {
    pub const DAY_NAMES: [&'static str; 7] = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];

    pub fn from_names(names: &[String]) -> Result<Self> {
        let mut days = [false; 7];
        for n in names {
            let idx = Self::DAY_NAMES
                .iter()
                .position(|d| d.eq_ignore_ascii_case(n))
                .ok_or_else(|| Error::Data(format!("unknown weekday name '{n}'")))?;
            days[idx] = true;
        }
        Ok(WeekdaySet(days))
    }

    pub fn names(&self) -> Vec<String> {
        Self::DAY_NAMES
            .iter()
            .enumerate()
            .filter(|(i, _)| self.0[*i])
            .map(|(_, n)| n.to_string())
            .collect()
    }

    pub fn contains(&self, day: Weekday) -> bool {
        self.0[day.num_days_from_monday() as usize]
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&d| d).count()
    }
}

/// Per-station average daily counts over weekday and weekend dates.
#[derive(Debug, Clone, PartialEq)]
pub struct StationRidership {
    pub station_id: String,
    pub weekday_boarding: f64,
    pub weekday_alighting: f64,
    pub weekday_ridership: f64,
    pub weekend_boarding: f64,
    pub weekend_alighting: f64,
    pub weekend_ridership: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidershipSummary {
    pub rows: Vec<StationRidership>,
}

/// The six dependent variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseKind {
    WeekdayRidership,
    WeekdayBoarding,
    WeekdayAlighting,
    WeekendRidership,
    WeekendBoarding,
    WeekendAlighting,
}

impl ResponseKind {
    pub const ALL: [ResponseKind; 6] = [
        ResponseKind::WeekdayRidership,
        ResponseKind::WeekdayBoarding,
        ResponseKind::WeekdayAlighting,
        ResponseKind::WeekendRidership,
        ResponseKind::WeekendBoarding,
        ResponseKind::WeekendAlighting,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ResponseKind::WeekdayRidership => "Weekday_ridership",
            ResponseKind::WeekdayBoarding => "Weekday_boarding",
            ResponseKind::WeekdayAlighting => "Weekday_alighting",
            ResponseKind::WeekendRidership => "Weekend_ridership",
            ResponseKind::WeekendBoarding => "Weekend_boarding",
            ResponseKind::WeekendAlighting => "Weekend_alighting",
        }
    }

    pub fn value(self, row: &StationRidership) -> f64 {
        match self {
            ResponseKind::WeekdayRidership => row.weekday_ridership,
            ResponseKind::WeekdayBoarding => row.weekday_boarding,
            ResponseKind::WeekdayAlighting => row.weekday_alighting,
            ResponseKind::WeekendRidership => row.weekend_ridership,
            ResponseKind::WeekendBoarding => row.weekend_boarding,
            ResponseKind::WeekendAlighting => row.weekend_alighting,
        }
    }
}

impl RidershipSummary {
    pub fn get(&self, station_id: &str) -> Option<&StationRidership> {
        self.rows.iter().find(|r| r.station_id == station_id)
    }

    /// Response vector aligned to the station table's row order.
    pub fn response(&self, stations: &StationTable, kind: ResponseKind) -> Result<Vec<f64>> {
        let by_id: HashMap<&str, &StationRidership> =
            self.rows.iter().map(|r| (r.station_id.as_str(), r)).collect();
        stations
            .rows
            .iter()
            .map(|s| {
                by_id
                    .get(s.station_id.as_str())
                    .map(|r| kind.value(r))
                    .ok_or_else(|| Error::Data(format!("no ridership summary for station '{}'", s.station_id)))
            })
            .collect()
    }
}

/// Average the daily records into per-station weekday and weekend means.
/// Stations appear in order of first appearance in the records.
pub fn aggregate_ridership(records: &RidershipRecords, weekday_set: &WeekdaySet) -> Result<RidershipSummary> {
    if weekday_set.count() == 0 || weekday_set.count() == 7 {
        return Err(Error::Data(
            "weekday set must be a proper non-empty subset of the week".to_string(),
        ));
    }

    struct Acc {
        wd_board: f64,
        wd_alight: f64,
        wd_days: usize,
        we_board: f64,
        we_alight: f64,
        we_days: usize,
    }

    let mut order: Vec<String> = Vec::new();
    let mut acc: HashMap<String, Acc> = HashMap::new();
    for r in &records.rows {
        let e = acc.entry(r.station_id.clone()).or_insert_with(|| {
            order.push(r.station_id.clone());
            Acc { wd_board: 0.0, wd_alight: 0.0, wd_days: 0, we_board: 0.0, we_alight: 0.0, we_days: 0 }
        });
        if weekday_set.contains(r.date.weekday()) {
            e.wd_board += r.boardings as f64;
            e.wd_alight += r.alightings as f64;
            e.wd_days += 1;
        } else {
            e.we_board += r.boardings as f64;
            e.we_alight += r.alightings as f64;
            e.we_days += 1;
        }
    }

    let mut rows = Vec::with_capacity(order.len());
    for id in order {
        let a = &acc[&id];
        if a.wd_days == 0 {
            return Err(Error::Data(format!("station '{id}' has no weekday records")));
        }
        if a.we_days == 0 {
            return Err(Error::Data(format!("station '{id}' has no weekend records")));
        }
        let weekday_boarding = a.wd_board / a.wd_days as f64;
        let weekday_alighting = a.wd_alight / a.wd_days as f64;
        let weekend_boarding = a.we_board / a.we_days as f64;
        let weekend_alighting = a.we_alight / a.we_days as f64;
        rows.push(StationRidership {
            station_id: id,
            weekday_boarding,
            weekday_alighting,
            weekday_ridership: weekday_boarding + weekday_alighting,
            weekend_boarding,
            weekend_alighting,
            weekend_ridership: weekend_boarding + weekend_alighting,
        });
    }
    Ok(RidershipSummary { rows })
}

// ---------------------------------------------------------------------------
// Shared parsing helpers

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io { path: path.into(), source: io },
            other => Error::parse(path, None, format!("{other:?}")),
        })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new()
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io { path: path.into(), source: io },
            other => Error::parse(path, None, format!("{other:?}")),
        })
}

fn write_record(w: &mut csv::Writer<std::fs::File>, path: &Path, fields: &[&str]) -> Result<()> {
    w.write_record(fields)
        .map_err(|e| Error::parse(path, None, format!("write failed: {e}")))
}

fn check_header(rdr: &mut csv::Reader<std::fs::File>, path: &Path, expected: &[&str]) -> Result<()> {
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(path, None, e.to_string()))?;
    let got: Vec<&str> = headers.iter().map(|h| h.trim()).collect();
    if got != expected {
        return Err(Error::parse(
            path,
            None,
            format!("header mismatch: expected {expected:?}, got {got:?}"),
        ));
    }
    Ok(())
}

fn expect_fields(path: &Path, row: usize, rec: &csv::StringRecord, n: usize) -> Result<()> {
    if rec.len() != n {
        return Err(Error::parse(path, Some(row), format!("expected {n} fields, got {}", rec.len())));
    }
    Ok(())
}

fn parse_f64(path: &Path, row: usize, field: &str, raw: &str) -> Result<f64> {
    let v = raw
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(path, Some(row), format!("field {field}: invalid number '{raw}'")))?;
    if !v.is_finite() {
        return Err(Error::parse(path, Some(row), format!("field {field}: non-finite value '{raw}'")));
    }
    Ok(v)
}

fn parse_count(path: &Path, row: usize, field: &str, raw: &str) -> Result<u64> {
    raw.trim()
        .parse::<u64>()
        .map_err(|_| Error::parse(path, Some(row), format!("field {field}: invalid non-negative count '{raw}'")))
}

fn parse_date(path: &Path, row: usize, field: &str, raw: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(raw.trim(), "%Y-%m-%d")
        .map_err(|_| Error::parse(path, Some(row), format!("field {field}: invalid ISO date '{raw}'")))
}

fn parse_usize(path: &Path, key: &str, raw: &str) -> Result<usize> {
    raw.parse::<usize>()
        .map_err(|_| Error::parse(path, None, format!("header '{key}': invalid value '{raw}'")))
}

fn parse_header_f64(path: &Path, key: &str, raw: &str) -> Result<f64> {
    raw.parse::<f64>()
        .map_err(|_| Error::parse(path, None, format!("header '{key}': invalid value '{raw}'")))
}

/// Shortest f64 representation that round-trips exactly.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(dir: &tempfile::TempDir, name: &str, content: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        let mut f = std::fs::File::create(&p).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        p
    }

    fn station_csv(n: usize) -> String {
        let mut s = String::from("station_id,name,lat,lon,opened_date,is_hub\n");
        for i in 0..n {
            s.push_str(&format!("S{i:03},Station {i},25.0{},121.5{},2008-01-0{},0\n", i % 10, i % 10, i % 9 + 1));
        }
        s
    }

    #[test]
    fn loads_valid_station_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "stations.csv", &station_csv(108));
        let t = load_stations(&p).unwrap();
        assert_eq!(t.len(), 108);
        assert_eq!(t.rows[0].station_id, "S000");
    }

    #[test]
    fn header_only_is_no_stations() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "stations.csv", "station_id,name,lat,lon,opened_date,is_hub\n");
        let err = load_stations(&p).unwrap_err();
        assert!(err.to_string().contains("no stations"), "{err}");
    }

    #[test]
    fn latitude_bound_violation_names_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            &dir,
            "stations.csv",
            "station_id,name,lat,lon,opened_date,is_hub\nA,A,25.0,121.5,2008-01-01,0\nB,B,91.0,121.5,2008-01-01,0\n",
        );
        let err = load_stations(&p).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2") && msg.contains("lat"), "{msg}");
    }

    #[test]
    fn duplicate_station_id_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            &dir,
            "stations.csv",
            "station_id,name,lat,lon,opened_date,is_hub\nA,A,25.0,121.5,2008-01-01,0\nA,B,25.1,121.5,2008-01-01,1\n",
        );
        let err = load_stations(&p).unwrap_err();
        assert!(err.to_string().contains("duplicate station_id"), "{err}");
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_stations(Path::new("/definitely/not/here.csv")).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(matches!(err, Error::Io { .. }));
    }

    fn two_stations(dir: &tempfile::TempDir) -> StationTable {
        let p = write_tmp(
            dir,
            "st.csv",
            "station_id,name,lat,lon,opened_date,is_hub\nA,A,25.0,121.5,2008-01-01,0\nB,B,25.1,121.6,2008-01-01,0\n",
        );
        load_stations(&p).unwrap()
    }

    #[test]
    fn edge_with_unknown_station_is_referential_error() {
        let dir = tempfile::tempdir().unwrap();
        let stations = two_stations(&dir);
        let p = write_tmp(&dir, "edges.csv", "from_id,to_id\nA,C\n");
        let err = load_edges(&p, &stations).unwrap_err();
        assert!(err.to_string().contains("unknown station 'C'"), "{err}");
    }

    #[test]
    fn self_loop_and_duplicate_segment_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let stations = two_stations(&dir);
        let p = write_tmp(&dir, "edges.csv", "from_id,to_id\nA,A\n");
        assert!(load_edges(&p, &stations).unwrap_err().to_string().contains("self-loop"));
        let p = write_tmp(&dir, "edges2.csv", "from_id,to_id\nA,B\nB,A\n");
        assert!(load_edges(&p, &stations).unwrap_err().to_string().contains("duplicate segment"));
    }

    #[test]
    fn grid_dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            &dir,
            "pop.asc",
            "ncols 2\nnrows 2\nxllcorner 121.0\nyllcorner 25.0\ncellsize 0.01\n1 2 3\n",
        );
        let err = load_population_grid(&p).unwrap_err();
        assert!(err.to_string().contains("dimension mismatch"), "{err}");
    }

    #[test]
    fn grid_cell_centers_follow_esri_convention() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            &dir,
            "pop.asc",
            "ncols 2\nnrows 2\nxllcorner 121.0\nyllcorner 25.0\ncellsize 0.5\n1 2\n3 4\n",
        );
        let g = load_population_grid(&p).unwrap();
        // Top-left value 1 sits in the northernmost row.
        assert_eq!(g.value(0, 0), 1.0);
        let c = g.cell_center(0, 0);
        assert!((c.lat - 25.75).abs() < 1e-12 && (c.lon - 121.25).abs() < 1e-12);
        let c = g.cell_center(1, 1);
        assert!((c.lat - 25.25).abs() < 1e-12 && (c.lon - 121.75).abs() < 1e-12);
    }

    #[test]
    fn ridership_week_has_seven_dates_per_station() {
        let dir = tempfile::tempdir().unwrap();
        let mut csv = String::from("station_id,date,boardings,alightings\n");
        for s in ["A", "B"] {
            for d in 12..=18 {
                csv.push_str(&format!("{s},2015-10-{d},100,90\n"));
            }
        }
        let p = write_tmp(&dir, "r.csv", &csv);
        let r = load_ridership(&p).unwrap();
        assert_eq!(r.len(), 14);
        let dates: HashSet<NaiveDate> =
            r.rows.iter().filter(|x| x.station_id == "A").map(|x| x.date).collect();
        assert_eq!(dates.len(), 7);
    }

    #[test]
    fn aggregate_constant_weekday_and_split_weekend() {
        let mut rows = Vec::new();
        for d in 12..=16 {
            rows.push(RidershipRecord {
                station_id: "A".into(),
                date: NaiveDate::from_ymd_opt(2015, 10, d).unwrap(),
                boardings: 10,
                alightings: 0,
            });
        }
        for (d, b) in [(17, 4u64), (18, 6u64)] {
            rows.push(RidershipRecord {
                station_id: "A".into(),
                date: NaiveDate::from_ymd_opt(2015, 10, d).unwrap(),
                boardings: b,
                alightings: 0,
            });
        }
        let summary = aggregate_ridership(&RidershipRecords { rows }, &WeekdaySet::default()).unwrap();
        let a = summary.get("A").unwrap();
        assert_eq!(a.weekday_boarding, 10.0);
        assert_eq!(a.weekend_boarding, 5.0);
        assert_eq!(a.weekday_ridership, a.weekday_boarding + a.weekday_alighting);
    }

    #[test]
    fn aggregate_matches_naive_second_pass() {
        // Synthetic 3-station week with pseudo-random counts.
        let mut rows = Vec::new();
        let mut x: u64 = 12345;
        for s in ["A", "B", "C"] {
            for d in 12..=18 {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let b = x >> 33;
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let a = x >> 33;
                rows.push(RidershipRecord {
                    station_id: s.into(),
                    date: NaiveDate::from_ymd_opt(2015, 10, d).unwrap(),
                    boardings: b % 10_000,
                    alightings: a % 10_000,
                });
            }
        }
        let records = RidershipRecords { rows };
        let summary = aggregate_ridership(&records, &WeekdaySet::default()).unwrap();

        // Naive second pass: collect per-day totals, average directly.
        for st in ["A", "B", "C"] {
            let weekdays: Vec<&RidershipRecord> = records
                .rows
                .iter()
                .filter(|r| r.station_id == st && r.date.weekday().num_days_from_monday() < 5)
                .collect();
            let naive_wd_board: f64 =
                weekdays.iter().map(|r| r.boardings as f64).sum::<f64>() / weekdays.len() as f64;
            let got = summary.get(st).unwrap();
            assert!((got.weekday_boarding - naive_wd_board).abs() < 1e-9);
            // Bound: min daily total <= mean <= max daily total.
            let totals: Vec<f64> = weekdays.iter().map(|r| (r.boardings + r.alightings) as f64).collect();
            let min = totals.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = totals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(min <= got.weekday_ridership && got.weekday_ridership <= max);
        }
    }

    #[test]
    fn aggregate_errors_when_weekend_missing() {
        let rows = vec![RidershipRecord {
            station_id: "A".into(),
            date: NaiveDate::from_ymd_opt(2015, 10, 12).unwrap(),
            boardings: 1,
            alightings: 1,
        }];
        let err = aggregate_ridership(&RidershipRecords { rows }, &WeekdaySet::default()).unwrap_err();
        assert!(err.to_string().contains("'A'") && err.to_string().contains("weekend"), "{err}");
    }

    #[test]
    fn aggregation_is_permutation_invariant() {
        let mut rows = Vec::new();
        for s in ["A", "B"] {
            for d in 12..=18 {
                rows.push(RidershipRecord {
                    station_id: s.into(),
                    date: NaiveDate::from_ymd_opt(2015, 10, d).unwrap(),
                    boardings: (d as u64) * 7,
                    alightings: (d as u64) * 3,
                });
            }
        }
        let fwd = aggregate_ridership(&RidershipRecords { rows: rows.clone() }, &WeekdaySet::default()).unwrap();
        rows.reverse();
        let rev = aggregate_ridership(&RidershipRecords { rows }, &WeekdaySet::default()).unwrap();
        for r in &fwd.rows {
            assert_eq!(Some(r), rev.get(&r.station_id));
        }
    }

    #[test]
    fn loaders_round_trip_losslessly() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            &dir,
            "stations.csv",
            "station_id,name,lat,lon,opened_date,is_hub\nA,\"Main, Central\",25.047123456789,121.51701,1996-03-28,1\nB,North,25.1,121.6,2015-09-19,0\n",
        );
        let t = load_stations(&p).unwrap();
        let p2 = dir.path().join("roundtrip.csv");
        t.save(&p2).unwrap();
        let t2 = load_stations(&p2).unwrap();
        assert_eq!(t, t2);

        let gp = write_tmp(
            &dir,
            "pop.asc",
            "ncols 3\nnrows 2\nxllcorner 121.4005\nyllcorner 24.99\ncellsize 0.002\nnodata_value -9999\n1.5 0 -9999\n2 3 4.25\n",
        );
        let g = load_population_grid(&gp).unwrap();
        let gp2 = dir.path().join("pop2.asc");
        g.save(&gp2).unwrap();
        assert_eq!(g, load_population_grid(&gp2).unwrap());
    }
}
