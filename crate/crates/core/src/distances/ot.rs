//! Exact optimal transport between uniform empirical measures.

use alloc::vec;
use alloc::vec::Vec;

/// Minimum-cost perfect matching on a dense `n × n` cost matrix
/// (shortest augmenting path with potentials). Returns the column
/// assigned to each row.
pub fn assignment(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n);
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![inf; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        minv.fill(inf);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let row = &cost[(i0 - 1) * n..i0 * n];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = row[j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut cols = vec![0usize; n];
    for j in 1..=n {
        cols[p[j] - 1] = j - 1;
    }
    cols
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Optimal transport cost `Σ π_ij c_ij` between uniform measures on `n`
/// sources and `m` sinks, `cost` being `n × m` row-major. Solved as an
/// integer min-cost flow (supply `m/g` per source, demand `n/g` per sink)
/// by successive shortest paths with Dijkstra on reduced costs.
pub fn transport_cost(cost: &[f64], n: usize, m: usize) -> f64 {
    assert_eq!(cost.len(), n * m);
    if n == 0 || m == 0 {
        return 0.0;
    }
    let g = gcd(n, m);
    let supply = (m / g) as u64;
    let demand = (n / g) as u64;
    let total = supply * n as u64;

    // Node layout: sources 0..n, sinks n..n+m, terminal n+m.
    // The super-source is implicit: every source with spare supply starts
    // at distance 0 (its potential is kept at 0 too).
    let nodes = n + m + 1;
    let t = n + m;
    let mut flow = vec![0u64; n * m];
    let mut sup_left = vec![supply; n];
    let mut dem_left = vec![demand; m];
    let mut pot = vec![0.0f64; nodes];
    let mut dist = vec![f64::INFINITY; nodes];
    let mut prev = vec![usize::MAX; nodes];
    let mut done = vec![false; nodes];
    let mut sent = 0u64;

    while sent < total {
        dist.fill(f64::INFINITY);
        prev.fill(usize::MAX);
        done.fill(false);
        // Sources with spare supply keep potential 0 throughout.
        for i in 0..n {
            if sup_left[i] > 0 {
                dist[i] = 0.0;
            }
        }
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for k in 0..nodes {
                if !done[k] && dist[k] < best {
                    best = dist[k];
                    u = k;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u == t {
                break;
            }
            if u < n {
                let row = &cost[u * m..(u + 1) * m];
                for j in 0..m {
                    let y = n + j;
                    if done[y] {
                        continue;
                    }
                    let w = (row[j] + pot[u] - pot[y]).max(0.0);
                    if best + w < dist[y] {
                        dist[y] = best + w;
                        prev[y] = u;
                    }
                }
            } else {
                let j = u - n;
                if dem_left[j] > 0 && !done[t] {
                    let w = (pot[u] - pot[t]).max(0.0);
                    if best + w < dist[t] {
                        dist[t] = best + w;
                        prev[t] = u;
                    }
                }
                for i in 0..n {
                    if flow[i * m + j] > 0 && !done[i] {
                        let w = (-cost[i * m + j] + pot[u] - pot[i]).max(0.0);
                        if best + w < dist[i] {
                            dist[i] = best + w;
                            prev[i] = u;
                        }
                    }
                }
            }
        }
        debug_assert!(dist[t].is_finite());
        let cap = dist[t];
        for k in 0..nodes {
            pot[k] += if done[k] { dist[k] } else { cap };
        }

        // Walk back from the terminal to find the bottleneck.
        let last = prev[t];
        let mut amount = dem_left[last - n];
        let mut node = last;
        loop {
            let from = prev[node];
            if from == usize::MAX {
                amount = amount.min(sup_left[node]);
                break;
            }
            if node < n {
                // sink -> source edge undoes flow on (node, from)
                amount = amount.min(flow[node * m + (from - n)]);
            }
            node = from;
        }
        dem_left[last - n] -= amount;
        let mut node = last;
        loop {
            let from = prev[node];
            if from == usize::MAX {
                sup_left[node] -= amount;
                break;
            }
            if node < n {
                flow[node * m + (from - n)] -= amount;
            } else {
                flow[from * m + (node - n)] += amount;
            }
            node = from;
        }
        sent += amount;
    }

    let mut acc = 0.0;
    for (f, c) in flow.iter().zip(cost) {
        if *f > 0 {
            acc += *f as f64 * c;
        }
    }
    acc / total as f64
}

/// `W_p^p` between two 1-D empirical measures by quantile coupling.
pub fn wasserstein_1d_pow(xs: &[f64], ys: &[f64], p: f64) -> f64 {
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    wasserstein_1d_pow_sorted(&a, &b, p)
}

pub fn wasserstein_1d_pow_sorted(a: &[f64], b: &[f64], p: f64) -> f64 {
    let (n, m) = (a.len(), b.len());
    if n == m {
        return a.iter().zip(b).map(|(x, y)| pow_abs(x - y, p)).sum::<f64>() / n as f64;
    }
    // Merge the two step quantile functions on a common grid of
    // breakpoints k/n and l/m, using integer numerators over n*m.
    let (nm, mut i, mut j) = (n * m, 0usize, 0usize);
    let (mut pos, mut acc) = (0usize, 0.0);
    while pos < nm {
        let next = ((i + 1) * m).min((j + 1) * n);
        acc += (next - pos) as f64 * pow_abs(a[i] - b[j], p);
        pos = next;
        if pos == (i + 1) * m {
            i += 1;
        }
        if pos == (j + 1) * n {
            j += 1;
        }
    }
    acc / nm as f64
}

pub(crate) fn pow_abs(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 2.0 {
        a * a
    } else if p == 1.0 {
        a
    } else {
        libm::pow(a, p)
    }
}
