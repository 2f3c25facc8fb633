//! Slow reference implementations used to check the metrics.
#![allow(dead_code)]

pub fn d2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

pub fn chamfer(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    let directed = |x: &[[f64; 3]], y: &[[f64; 3]]| {
        let mut total = 0.0;
        for p in x {
            let mut best = f64::INFINITY;
            for q in y {
                best = best.min(d2(p, q));
            }
            total += best;
        }
        total / x.len() as f64
    };
    directed(a, b) + directed(b, a)
}

pub fn hausdorff(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    let mut worst: f64 = 0.0;
    for (x, y) in [(a, b), (b, a)] {
        for p in x {
            let mut best = f64::INFINITY;
            for q in y {
                best = best.min(d2(p, q).sqrt());
            }
            worst = worst.max(best);
        }
    }
    worst
}

/// Minimum mean matched distance over all n! bijections (Heap's algorithm).
pub fn emd_factorial(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    let n = a.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let cost = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| d2(&a[i], &b[j]).sqrt()).sum::<f64>();
    let mut best = cost(&perm);
    let mut c = vec![0; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(cost(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best / n as f64
}

/// Optimal matching cost by successive shortest paths with Bellman-Ford on
/// the residual bipartite graph.
pub fn emd_min_cost_flow(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    let n = a.len();
    let w = |i: usize, j: usize| d2(&a[i], &b[j]).sqrt();
    let mut match_b: Vec<Option<usize>> = vec![None; n];
    let mut match_a: Vec<Option<usize>> = vec![None; n];
    for _ in 0..n {
        // Nodes: 0..n are a-side, n..2n are b-side.
        let mut dist = vec![f64::INFINITY; 2 * n];
        let mut prev = vec![usize::MAX; 2 * n];
        for i in 0..n {
            if match_a[i].is_none() {
                dist[i] = 0.0;
            }
        }
        for _ in 0..2 * n {
            let mut changed = false;
            for i in 0..n {
                if dist[i].is_infinite() {
                    continue;
                }
                for j in 0..n {
                    if match_a[i] == Some(j) {
                        continue;
                    }
                    let nd = dist[i] + w(i, j);
                    if nd < dist[n + j] - 1e-12 {
                        dist[n + j] = nd;
                        prev[n + j] = i;
                        changed = true;
                    }
                }
            }
            for j in 0..n {
                if let Some(i) = match_b[j] {
                    let nd = dist[n + j] - w(i, j);
                    if nd < dist[i] - 1e-12 {
                        dist[i] = nd;
                        prev[i] = n + j;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let end = (0..n)
            .filter(|&j| match_b[j].is_none())
            .min_by(|&x, &y| dist[n + x].total_cmp(&dist[n + y]))
            .unwrap();
        let mut node = n + end;
        loop {
            let i = prev[node];
            let j = node - n;
            match_b[j] = Some(i);
            let old = match_a[i].replace(j);
            match old {
                Some(_) => node = prev[i],
                None => break,
            }
        }
    }
    (0..n).map(|i| w(i, match_a[i].unwrap())).sum::<f64>() / n as f64
}

pub fn rand_index(x: &[u32], y: &[u32]) -> f64 {
    let n = x.len();
    let mut agree = 0u64;
    let mut total = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            total += 1;
            if (x[i] == x[j]) == (y[i] == y[j]) {
                agree += 1;
            }
        }
    }
    agree as f64 / total as f64
}

fn distinct(x: &[u32]) -> Vec<u32> {
    let mut v = x.to_vec();
    v.sort();
    v.dedup();
    v
}

/// Conditional-entropy form: H(X|Y) + H(Y|X).
pub fn variation_of_information(x: &[u32], y: &[u32]) -> f64 {
    let n = x.len() as f64;
    let cond = |x: &[u32], y: &[u32]| {
        let mut h = 0.0;
        for b in distinct(y) {
            let ny = y.iter().filter(|&&v| v == b).count() as f64;
            for a in distinct(x) {
                let nxy = x.iter().zip(y).filter(|(&u, &v)| u == a && v == b).count() as f64;
                if nxy > 0.0 {
                    h -= nxy / n * (nxy / ny).ln();
                }
            }
        }
        h
    };
    cond(x, y) + cond(y, x)
}

pub fn segmentation_covering(x: &[u32], y: &[u32]) -> f64 {
    let n = x.len();
    let mut total = 0.0;
    for a in distinct(x) {
        let r: Vec<bool> = x.iter().map(|&v| v == a).collect();
        let size = r.iter().filter(|&&v| v).count();
        let mut best: f64 = 0.0;
        for b in distinct(y) {
            let s: Vec<bool> = y.iter().map(|&v| v == b).collect();
            let inter = (0..n).filter(|&i| r[i] && s[i]).count();
            let union = (0..n).filter(|&i| r[i] || s[i]).count();
            best = best.max(inter as f64 / union as f64);
        }
        total += size as f64 / n as f64 * best;
    }
    total
}

pub type VoxelCase = (Vec<[f64; 3]>, Vec<[f64; 3]>, f64);

/// Grid cases counted by hand: (points a, points b, expected IoU) on a 32³
/// grid where cell k along an axis covers [−1 + k/16, −1 + (k+1)/16).
pub fn hand_voxel_cases() -> Vec<VoxelCase> {
    let c = |i: f64, j: f64, k: f64| [-1.0 + (i + 0.5) / 16.0, -1.0 + (j + 0.5) / 16.0, -1.0 + (k + 0.5) / 16.0];
    vec![
        // Cells {0,1,2} vs {2,3} along x: overlap 1, union 4.
        (
            vec![c(0., 0., 0.), c(1., 0., 0.), c(2., 0., 0.)],
            vec![c(2., 0., 0.), c(3., 0., 0.)],
            0.25,
        ),
        // Two points in one cell versus one corner point at +1 (last cell):
        // {(0,0,0)} ∪ {(31,31,31)} vs {(31,31,31)}: 1/2.
        (
            vec![c(0., 0., 0.), [0.999, 0.999, 0.999], [1.0, 1.0, 1.0]],
            vec![[1.0, 1.0, 1.0]],
            0.5,
        ),
        // Opposite octants share nothing.
        (vec![[0.5, 0.5, 0.5]], vec![[-0.5, -0.5, -0.5]], 0.0),
    ]
}

/// Distance from a local-frame point to the surface of the standard
/// primitive of class index `class` (0 box, 1 cylinder along z, 2 sphere).
pub fn standard_surface_distance(class: usize, p: &[f64; 3]) -> f64 {
    match class {
        0 => {
            let a = p.map(f64::abs);
            let m = a[0].max(a[1]).max(a[2]);
            if m <= 1.0 {
                1.0 - m
            } else {
                a.iter().map(|x| (x - 1.0).max(0.0).powi(2)).sum::<f64>().sqrt()
            }
        }
        1 => {
            let side = p[0].hypot(p[1]) - 1.0;
            let cap = p[2].abs() - 1.0;
            if side <= 0.0 && cap <= 0.0 {
                (-side).min(-cap)
            } else {
                (side.max(0.0).powi(2) + cap.max(0.0).powi(2)).sqrt()
            }
        }
        2 => ((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - 1.0).abs(),
        _ => panic!("unknown class {class}"),
    }
}
