//! Synthetic fixture generators shared by the benchmarks.

use ridership_core::{DesignMatrix, EdgeList, MetroGraph, Station, StationTable};

/// splitmix64; benches need stable inputs, not statistical quality.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Random design matrix with `n` rows and `k` uniform predictors.
pub fn random_design(rng: &mut Rng, n: usize, k: usize) -> (DesignMatrix, Vec<f64>) {
    let cols: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.uniform() * 10.0).collect()).collect();
    let names: Vec<String> = (0..k).map(|i| format!("x{i}")).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let signal: f64 = cols.iter().enumerate().map(|(j, c)| (j as f64 + 1.0) * c[i]).sum();
            signal + rng.uniform()
        })
        .collect();
    (DesignMatrix::with_intercept(names, cols).expect("valid design"), y)
}

/// A 108-station, 5-line style graph: five chains joined at shared transfer
/// stations.
pub fn synthetic_metro_graph() -> MetroGraph {
    let stations = StationTable {
        rows: (0..108)
            .map(|i| Station {
                station_id: format!("S{i:03}"),
                name: format!("Station {i}"),
                lat: 24.95 + 0.002 * (i % 12) as f64,
                lon: 121.40 + 0.002 * (i / 12) as f64,
                opened_date: chrono::NaiveDate::from_ymd_opt(2008, 1, 1).unwrap(),
                is_hub: i == 54,
            })
            .collect(),
    };
    let mut segments = Vec::new();
    // Five chains of ~21 stations, plus cross links through the middle.
    for line in 0..5 {
        let start = line * 21;
        let end = ((line + 1) * 21).min(107);
        for i in start..end {
            segments.push((format!("S{i:03}"), format!("S{:03}", i + 1)));
        }
    }
    for line in 1..5 {
        segments.push((format!("S{:03}", 54), format!("S{:03}", line * 21 + 3)));
    }
    let edges = EdgeList { segments };
    ridership_core::network::build_graph(&stations, &edges)
}
