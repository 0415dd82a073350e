//! Independent oracles shared by the integration suites. Everything here is
//! deliberately written from scratch: explicit normal equations instead of
//! QR, path enumeration and matrix powers instead of dependency
//! accumulation, and a re-implemented fold loop. None of it calls into the
//! implementation paths it checks.

#![allow(dead_code)]

/// splitmix64 + Box-Muller, reimplemented here so test fixtures never depend
/// on the library's generator.
pub struct TestRng {
    state: u64,
    spare_normal: Option<f64>,
}

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng { state: seed, spare_normal: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn usize_below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform().max(1e-300);
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

// ---------------------------------------------------------------------------
// Normal-equations OLS oracle

pub struct OracleFit {
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub tss: f64,
    pub r2: f64,
    pub f: f64,
    pub sigma2: f64,
    pub hat: Vec<f64>,
}

/// Gauss-Jordan inversion with partial pivoting.
pub fn invert(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(i == j)).collect()).collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        assert!(p.abs() > 0.0, "oracle: singular matrix");
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..n {
            if i != col {
                let f = a[i][col];
                for j in 0..n {
                    a[i][j] -= f * a[col][j];
                    inv[i][j] -= f * inv[col][j];
                }
            }
        }
    }
    inv
}

/// OLS by explicit (X^T X)^{-1} X^T y. `x_cols` must already include the
/// intercept column of ones as column 0.
pub fn ols_normal_equations(x_cols: &[Vec<f64>], y: &[f64]) -> OracleFit {
    let p = x_cols.len();
    let n = y.len();
    let mut xtx = vec![vec![0.0; p]; p];
    for a in 0..p {
        for b in 0..p {
            xtx[a][b] = x_cols[a].iter().zip(&x_cols[b]).map(|(u, v)| u * v).sum();
        }
    }
    let xtx_inv = invert(xtx);
    let xty: Vec<f64> = x_cols.iter().map(|c| c.iter().zip(y).map(|(u, v)| u * v).sum()).collect();
    let beta: Vec<f64> = (0..p).map(|i| (0..p).map(|j| xtx_inv[i][j] * xty[j]).sum()).collect();

    let fitted: Vec<f64> = (0..n).map(|i| (0..p).map(|j| x_cols[j][i] * beta[j]).sum()).collect();
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let df = n - p;
    let sigma2 = rss / df as f64;
    let se: Vec<f64> = (0..p).map(|j| (sigma2 * xtx_inv[j][j]).sqrt()).collect();
    let r2 = 1.0 - rss / tss;
    let k = p - 1;
    let f = if k > 0 { ((tss - rss) / k as f64) / sigma2 } else { f64::NAN };
    let hat: Vec<f64> = (0..n)
        .map(|i| {
            let xi: Vec<f64> = (0..p).map(|j| x_cols[j][i]).collect();
            let mut h = 0.0;
            for a in 0..p {
                for b in 0..p {
                    h += xi[a] * xtx_inv[a][b] * xi[b];
                }
            }
            h
        })
        .collect();
    OracleFit { beta, se, fitted, residuals, rss, tss, r2, f, sigma2, hat }
}

/// Profile AIC, coded independently of the library.
pub fn profile_aic(n: usize, rss: f64, k: usize) -> f64 {
    n as f64 * (rss / n as f64).ln() + 2.0 * (k as f64 + 1.0)
}

// ---------------------------------------------------------------------------
// Betweenness oracles

/// Enumerate every simple path between every ordered pair by depth-first
/// search; count shortest paths through each interior node. Exact rational
/// arithmetic is avoided by accumulating sigma ratios in f64 at tiny sizes.
pub fn betweenness_by_path_enumeration(adj: &[Vec<usize>]) -> Vec<f64> {
    let n = adj.len();
    let mut score = vec![0.0; n];
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            let mut paths: Vec<Vec<usize>> = Vec::new();
            let mut stack = vec![s];
            let mut visited = vec![false; n];
            visited[s] = true;
            dfs_paths(adj, s, t, &mut stack, &mut visited, &mut paths);
            let shortest = paths.iter().map(|p| p.len()).min();
            let Some(len) = shortest else { continue };
            let shortest_paths: Vec<&Vec<usize>> = paths.iter().filter(|p| p.len() == len).collect();
            let sigma = shortest_paths.len() as f64;
            for v in 0..n {
                if v == s || v == t {
                    continue;
                }
                let through = shortest_paths.iter().filter(|p| p.contains(&v)).count() as f64;
                score[v] += through / sigma;
            }
        }
    }
    let norm = ((n - 1) * (n - 2)) as f64;
    score.iter().map(|v| v / norm).collect()
}

fn dfs_paths(
    adj: &[Vec<usize>],
    current: usize,
    target: usize,
    stack: &mut Vec<usize>,
    visited: &mut Vec<bool>,
    out: &mut Vec<Vec<usize>>,
) {
    if current == target {
        out.push(stack.clone());
        return;
    }
    for &next in &adj[current] {
        if !visited[next] {
            visited[next] = true;
            stack.push(next);
            dfs_paths(adj, next, target, stack, visited, out);
            stack.pop();
            visited[next] = false;
        }
    }
}

/// Second oracle route: shortest-path counts from adjacency-matrix powers
/// (a length-d(s,t) walk cannot revisit a vertex, so A^d counts geodesics),
/// with distances from Floyd-Warshall.
pub fn betweenness_by_matrix_powers(adj: &[Vec<usize>]) -> Vec<f64> {
    let n = adj.len();
    const INF: i64 = i64::MAX / 4;
    let mut dist = vec![vec![INF; n]; n];
    let mut a = vec![vec![0u128; n]; n];
    for u in 0..n {
        dist[u][u] = 0;
        for &v in &adj[u] {
            dist[u][v] = 1;
            a[u][v] = 1;
        }
    }
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                if dist[i][m] + dist[m][j] < dist[i][j] {
                    dist[i][j] = dist[i][m] + dist[m][j];
                }
            }
        }
    }

    // powers[m] = A^(m+1)
    let mut powers: Vec<Vec<Vec<u128>>> = vec![a.clone()];
    for _ in 1..n {
        let prev = powers.last().unwrap();
        let mut next = vec![vec![0u128; n]; n];
        for i in 0..n {
            for m in 0..n {
                if prev[i][m] == 0 {
                    continue;
                }
                for j in 0..n {
                    next[i][j] += prev[i][m] * a[m][j];
                }
            }
        }
        powers.push(next);
    }
    let sigma = |u: usize, v: usize| -> u128 {
        if u == v {
            return 1;
        }
        let d = dist[u][v];
        if d >= INF {
            0
        } else {
            powers[(d - 1) as usize][u][v]
        }
    };

    let mut score = vec![0.0; n];
    for s in 0..n {
        for t in 0..n {
            if s == t || dist[s][t] >= INF {
                continue;
            }
            let st = sigma(s, t);
            for v in 0..n {
                if v == s || v == t {
                    continue;
                }
                if dist[s][v] + dist[v][t] == dist[s][t] {
                    score[v] += (sigma(s, v) * sigma(v, t)) as f64 / st as f64;
                }
            }
        }
    }
    let norm = ((n - 1) * (n - 2)) as f64;
    score.iter().map(|v| v / norm).collect()
}

/// Random undirected graph on n nodes, resampled until connected.
pub fn random_connected_graph(rng: &mut TestRng, n: usize) -> Vec<Vec<usize>> {
    loop {
        let mut adj = vec![Vec::new(); n];
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.uniform() < 0.45 {
                    edges.push((u, v));
                }
            }
        }
        for &(u, v) in &edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        if is_connected(&adj) {
            return adj;
        }
    }
}

pub fn is_connected(adj: &[Vec<usize>]) -> bool {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

// ---------------------------------------------------------------------------
// Naive greedy stepwise oracle

pub struct OracleStep {
    pub removed: Option<String>,
    pub candidates: Vec<(String, f64)>,
}

/// Backward stepwise re-implemented naively over the normal-equations fit:
/// at each step refit every single-variable removal, take the strict
/// minimum (first on ties), stop when nothing improves.
pub fn stepwise_oracle(names: &[String], cols: &[Vec<f64>], y: &[f64]) -> (Vec<OracleStep>, Vec<String>) {
    let n = y.len();
    let mut names: Vec<String> = names.to_vec();
    let mut cols: Vec<Vec<f64>> = cols.to_vec();
    let mut steps = Vec::new();
    loop {
        let mut with_intercept = vec![vec![1.0; n]];
        with_intercept.extend(cols.iter().cloned());
        let current = ols_normal_equations(&with_intercept, y);
        let current_aic = profile_aic(n, current.rss, cols.len());

        let mut candidates = Vec::new();
        let mut best: Option<(usize, f64)> = None;
        for drop in 0..cols.len() {
            let mut xs = vec![vec![1.0; n]];
            for (j, c) in cols.iter().enumerate() {
                if j != drop {
                    xs.push(c.clone());
                }
            }
            let fit = ols_normal_equations(&xs, y);
            let aic = profile_aic(n, fit.rss, cols.len() - 1);
            candidates.push((names[drop].clone(), aic));
            if best.map_or(true, |(_, b)| aic < b) {
                best = Some((drop, aic));
            }
        }
        match best {
            Some((idx, aic)) if aic < current_aic => {
                steps.push(OracleStep { removed: Some(names[idx].clone()), candidates });
                names.remove(idx);
                cols.remove(idx);
            }
            _ => {
                steps.push(OracleStep { removed: None, candidates });
                return (steps, names);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Leave-one-out Cook's distance oracle

/// D_i from its definition: refit with row i deleted, compare all fitted
/// values. `x_cols` includes the intercept column.
pub fn cooks_distance_loo(x_cols: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let p = x_cols.len();
    let full = ols_normal_equations(x_cols, y);
    (0..n)
        .map(|i| {
            let keep: Vec<usize> = (0..n).filter(|&r| r != i).collect();
            let sub_cols: Vec<Vec<f64>> =
                x_cols.iter().map(|c| keep.iter().map(|&r| c[r]).collect()).collect();
            let sub_y: Vec<f64> = keep.iter().map(|&r| y[r]).collect();
            let sub = ols_normal_equations(&sub_cols, &sub_y);
            let mut num = 0.0;
            for j in 0..n {
                let yhat_loo: f64 = (0..p).map(|c| x_cols[c][j] * sub.beta[c]).sum();
                num += (full.fitted[j] - yhat_loo) * (full.fitted[j] - yhat_loo);
            }
            num / (p as f64 * full.sigma2)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Independent cross-validation loop

/// Fisher-Yates with splitmix64, written again from the documented spec of
/// the fold split.
pub fn shuffle_oracle(n: usize, seed: u64) -> Vec<usize> {
    let mut state = seed;
    let mut next = move || -> u64 {
        state = state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    };
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = (next() % (i as u64 + 1)) as usize;
        idx.swap(i, j);
    }
    idx
}

/// cv R^2 via the re-implemented fold loop over the normal-equations fit.
/// `cols` excludes the intercept.
pub fn cv_r2_oracle(cols: &[Vec<f64>], y: &[f64], k: usize, seed: u64) -> f64 {
    let n = y.len();
    let order = shuffle_oracle(n, seed);
    let base = n / k;
    let extra = n % k;
    let mut bounds = vec![0usize];
    for f in 0..k {
        bounds.push(bounds[f] + base + usize::from(f < extra));
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let mut sse = 0.0;
    for f in 0..k {
        let test = &order[bounds[f]..bounds[f + 1]];
        let train: Vec<usize> =
            order[..bounds[f]].iter().chain(&order[bounds[f + 1]..]).copied().collect();
        let mut x_train = vec![vec![1.0; train.len()]];
        for c in cols {
            x_train.push(train.iter().map(|&r| c[r]).collect());
        }
        let y_train: Vec<f64> = train.iter().map(|&r| y[r]).collect();
        let fit = ols_normal_equations(&x_train, &y_train);
        for &row in test {
            let mut pred = fit.beta[0];
            for (j, c) in cols.iter().enumerate() {
                pred += fit.beta[j + 1] * c[row];
            }
            let e = y[row] - pred;
            sse += e * e;
        }
    }
    1.0 - sse / tss
}

// ---------------------------------------------------------------------------
// Instance generators

/// Random regression instance: k uniform predictor columns, response with a
/// planted linear signal plus noise.
pub fn random_instance(rng: &mut TestRng, n: usize, k: usize) -> (Vec<String>, Vec<Vec<f64>>, Vec<f64>) {
    let cols: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.range(-3.0, 3.0)).collect()).collect();
    let names: Vec<String> = (0..k).map(|i| format!("x{i}")).collect();
    let coefs: Vec<f64> = (0..k).map(|_| rng.range(-2.0, 2.0)).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let signal: f64 = cols.iter().zip(&coefs).map(|(c, b)| b * c[i]).sum();
            1.5 + signal + rng.normal() * 0.5
        })
        .collect();
    (names, cols, y)
}
