//! Network-structure variables: degree centrality, betweenness centrality,
//! and great-circle distance to the city center.
//!
//! The metro graph is held as a symmetric arc set (every undirected segment
//! contributes both directions). Degree centrality is (in + out)/(n-1) on
//! that arc set, i.e. twice the undirected degree over n-1; this is the one
//! simple convention whose extremes land on 2/107 and 8/107 for a 108-node
//! network with terminal and 4-way transfer stations. Betweenness sums
//! sigma_st(v)/sigma_st over ordered pairs and is normalized by (n-1)(n-2).

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::geo::{haversine_km, LatLon};
use crate::ingest::{EdgeList, StationTable};

/// Station adjacency; immutable after construction.
#[derive(Debug, Clone)]
pub struct MetroGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    adj: Vec<Vec<usize>>,
}

/// Kind of centrality a vector holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CentralityKind {
    Degree,
    Betweenness,
}

impl CentralityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CentralityKind::Degree => "degree",
            CentralityKind::Betweenness => "betweenness",
        }
    }
}

/// One value per station, in graph (= station table) order.
#[derive(Debug, Clone)]
pub struct CentralityVector {
    pub kind: CentralityKind,
    pub normalization: String,
    ids: Vec<String>,
    values: Vec<f64>,
}

impl CentralityVector {
    pub fn get(&self, station_id: &str) -> Option<f64> {
        self.ids.iter().position(|i| i == station_id).map(|i| self.values[i])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.ids.iter().map(|s| s.as_str()).zip(self.values.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Build the symmetric graph over all stations. Isolated stations are
/// permitted; `MetroGraph::isolated` reports them.
pub fn build_graph(stations: &StationTable, edges: &EdgeList) -> MetroGraph {
    let ids = stations.ids();
    let index: HashMap<String, usize> =
        ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
    let mut adj = vec![Vec::new(); ids.len()];
    for (from, to) in &edges.segments {
        // Referential integrity is validated at ingest.
        let u = index[from];
        let v = index[to];
        adj[u].push(v);
        adj[v].push(u);
    }
    for nbrs in &mut adj {
        nbrs.sort_unstable();
    }
    MetroGraph { ids, index, adj }
}

impl MetroGraph {
    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    /// Total arc count (twice the undirected segment count).
    pub fn arc_count(&self) -> usize {
        self.adj.iter().map(|a| a.len()).sum()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, station_id: &str) -> Option<usize> {
        self.index.get(station_id).copied()
    }

    pub fn neighbors(&self, idx: usize) -> &[usize] {
        &self.adj[idx]
    }

    /// Stations with no incident segments.
    pub fn isolated(&self) -> Vec<String> {
        self.ids
            .iter()
            .zip(&self.adj)
            .filter(|(_, a)| a.is_empty())
            .map(|(id, _)| id.clone())
            .collect()
    }
}

/// Normalized degree centrality: (in-degree + out-degree)/(n-1).
pub fn degree_centrality(graph: &MetroGraph) -> Result<CentralityVector> {
    let n = graph.node_count();
    if n < 2 {
        return Err(Error::Numeric(format!(
            "degree centrality needs at least 2 stations, got {n}"
        )));
    }
    let values = graph
        .adj
        .iter()
        .map(|nbrs| 2.0 * nbrs.len() as f64 / (n as f64 - 1.0))
        .collect();
    Ok(CentralityVector {
        kind: CentralityKind::Degree,
        normalization: "(in+out)/(n-1) on the symmetric arc set".to_string(),
        ids: graph.ids.clone(),
        values,
    })
}

/// Normalized betweenness centrality by per-source breadth-first dependency
/// accumulation (Brandes) on unweighted shortest paths, over ordered pairs,
/// normalized by (n-1)(n-2). Unreachable pairs contribute zero.
pub fn betweenness_centrality(graph: &MetroGraph) -> Result<CentralityVector> {
    let n = graph.node_count();
    if n < 3 {
        return Err(Error::Numeric(format!(
            "betweenness centrality needs at least 3 stations, got {n}"
        )));
    }

    let mut score = vec![0.0_f64; n];
    let mut stack: Vec<usize> = Vec::with_capacity(n);
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0_f64; n];
    let mut dist = vec![-1_i64; n];
    let mut delta = vec![0.0_f64; n];
    let mut queue: VecDeque<usize> = VecDeque::with_capacity(n);

    for s in 0..n {
        stack.clear();
        queue.clear();
        for v in 0..n {
            pred[v].clear();
            sigma[v] = 0.0;
            dist[v] = -1;
            delta[v] = 0.0;
        }
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);

        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in &graph.adj[v] {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    pred[w].push(v);
                }
            }
        }

        while let Some(w) = stack.pop() {
            for &v in &pred[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                score[w] += delta[w];
            }
        }
    }

    let norm = ((n - 1) * (n - 2)) as f64;
    for v in &mut score {
        *v /= norm;
    }
    Ok(CentralityVector {
        kind: CentralityKind::Betweenness,
        normalization: "ordered-pair dependency sum / ((n-1)(n-2))".to_string(),
        ids: graph.ids.clone(),
        values: score,
    })
}

/// Haversine distance from every station to the city center, in kilometers,
/// keyed by station id in table order.
pub fn distance_to_center(stations: &StationTable, center: LatLon) -> Vec<(String, f64)> {
    stations
        .rows
        .iter()
        .map(|s| (s.station_id.clone(), haversine_km(s.position(), center)))
        .collect()
}
