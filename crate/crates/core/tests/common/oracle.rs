//! Brute-force reference implementations. Nothing here calls into the
//! embedders or the solution checker; they only read the graphs.

#![allow(dead_code, clippy::needless_range_loop)]

use devine_core::network::{PhysicalNetwork, Vnr};

/// Residual bandwidth (milli-units) per physical node pair.
fn link_table(net: &PhysicalNetwork) -> Vec<Vec<Option<(usize, i64)>>> {
    let n = net.node_count();
    let mut table = vec![vec![None; n]; n];
    for (id, l) in net.links().iter().enumerate() {
        let (a, b) = l.endpoints;
        table[a][b] = Some((id, l.bandwidth_residual.milli()));
        table[b][a] = Some((id, l.bandwidth_residual.milli()));
    }
    table
}

/// Every simple path from `from` to `to` (including `[from]` when equal).
pub fn simple_paths(net: &PhysicalNetwork, from: usize, to: usize) -> Vec<Vec<usize>> {
    let table = link_table(net);
    let mut out = Vec::new();
    let mut path = vec![from];
    fn walk(table: &[Vec<Option<(usize, i64)>>], to: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let last = *path.last().unwrap();
        if last == to {
            out.push(path.clone());
            return;
        }
        for next in 0..table.len() {
            if table[last][next].is_some() && !path.contains(&next) {
                path.push(next);
                walk(table, to, path, out);
                path.pop();
            }
        }
    }
    walk(&table, to, &mut path, &mut out);
    out
}

/// Shortest, then lexicographically smallest, simple path whose every
/// link has at least `demand_milli` available, of at most `max_hops`.
pub fn best_path(
    net: &PhysicalNetwork,
    from: usize,
    to: usize,
    demand_milli: i64,
    max_hops: usize,
) -> Option<Vec<usize>> {
    let table = link_table(net);
    simple_paths(net, from, to)
        .into_iter()
        .filter(|p| p.len() - 1 <= max_hops)
        .filter(|p| p.windows(2).all(|w| table[w[0]][w[1]].unwrap().1 >= demand_milli))
        .min_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)))
}

/// True when some node mapping plus some choice of simple paths satisfies
/// every node and link capacity. Path length is unbounded.
pub fn exhaustive_feasible(net: &PhysicalNetwork, vnr: &Vnr, injective: bool) -> bool {
    let n = net.node_count();
    let k = vnr.node_count();
    let table = link_table(net);
    let mut mapping = vec![0usize; k];
    let total = n.pow(k as u32);
    for code in 0..total {
        let mut c = code;
        for slot in mapping.iter_mut() {
            *slot = c % n;
            c /= n;
        }
        if injective {
            let mut sorted = mapping.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != k {
                continue;
            }
        }
        // node capacities, summed per host
        let mut used = vec![[0i64; 3]; n];
        for (v, &p) in mapping.iter().enumerate() {
            let d = vnr.nodes[v].demand;
            used[p][0] += d.cpu.milli();
            used[p][1] += d.memory.milli();
            used[p][2] += d.gpu.milli();
        }
        let fits = (0..n).all(|p| {
            let r = net.node(p).residual;
            used[p][0] <= r.cpu.milli() && used[p][1] <= r.memory.milli() && used[p][2] <= r.gpu.milli()
        });
        if !fits {
            continue;
        }
        let options: Vec<Vec<Vec<usize>>> =
            vnr.links.iter().map(|l| simple_paths(net, mapping[l.endpoints.0], mapping[l.endpoints.1])).collect();
        if any_path_choice_fits(&options, vnr, &table, 0, &mut vec![0i64; net.link_count()]) {
            return true;
        }
    }
    false
}

fn any_path_choice_fits(
    options: &[Vec<Vec<usize>>],
    vnr: &Vnr,
    table: &[Vec<Option<(usize, i64)>>],
    i: usize,
    load: &mut Vec<i64>,
) -> bool {
    if i == options.len() {
        return true;
    }
    let bw = vnr.links[i].bandwidth.milli();
    for path in &options[i] {
        let hops: Vec<(usize, i64)> = path.windows(2).map(|w| table[w[0]][w[1]].unwrap()).collect();
        if hops.iter().all(|&(id, cap)| load[id] + bw <= cap) {
            for &(id, _) in &hops {
                load[id] += bw;
            }
            let ok = any_path_choice_fits(options, vnr, table, i + 1, load);
            for &(id, _) in &hops {
                load[id] -= bw;
            }
            if ok {
                return true;
            }
        }
    }
    false
}

/// Dense damped fixed point solved directly: (I - d T) r = (1 - d) c.
pub fn rank_by_linear_solve(capacity: &[f64], edges: &[(usize, usize, f64)], damping: f64) -> Vec<f64> {
    let n = capacity.len();
    let total: f64 = capacity.iter().sum();
    let c: Vec<f64> = capacity.iter().map(|x| x / total).collect();
    let mut weight = vec![0.0; n];
    for &(a, b, w) in edges {
        weight[a] += w;
        weight[b] += w;
    }
    let mut t = vec![vec![0.0; n]; n];
    for &(a, b, w) in edges {
        t[b][a] += w / weight[a];
        t[a][b] += w / weight[b];
    }
    for j in 0..n {
        if weight[j] == 0.0 {
            t[j][j] = 1.0;
        }
    }
    // augmented matrix [I - dT | (1-d)c], Gauss-Jordan with partial pivoting
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| if i == j { 1.0 } else { 0.0 } - damping * t[i][j]).collect();
            row.push((1.0 - damping) * c[i]);
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        for x in m[col].iter_mut() {
            *x /= p;
        }
        for row in 0..n {
            if row != col {
                let f = m[row][col];
                for j in 0..=n {
                    m[row][j] -= f * m[col][j];
                }
            }
        }
    }
    m.iter().map(|row| row[n]).collect()
}
