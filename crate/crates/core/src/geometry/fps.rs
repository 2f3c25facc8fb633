/// Greedy farthest-point subsampling. Returns indices into `points`, starting
/// from `start`; when `count >= points.len()` every index is returned in
/// order.
pub fn farthest_point_sample(points: &[[f64; 3]], count: usize, start: usize) -> Vec<usize> {
    if count >= points.len() {
        return (0..points.len()).collect();
    }
    if count == 0 {
        return Vec::new();
    }
    let dist2 = |a: &[f64; 3], b: &[f64; 3]| {
        (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
    };
    let mut chosen = Vec::with_capacity(count);
    let mut nearest = vec![f64::INFINITY; points.len()];
    let mut current = start % points.len();
    for _ in 0..count {
        chosen.push(current);
        let anchor = points[current];
        let mut best = (0, f64::NEG_INFINITY);
        for (i, p) in points.iter().enumerate() {
            let d = dist2(p, &anchor);
            if d < nearest[i] {
                nearest[i] = d;
            }
            if nearest[i] > best.1 {
                best = (i, nearest[i]);
            }
        }
        current = best.0;
    }
    chosen
}
