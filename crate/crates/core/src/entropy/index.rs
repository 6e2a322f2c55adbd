use std::collections::HashMap;

use crate::sphere::UnitVector3;

/// Bucket grid over the cube [-1, 1]³ holding points of S². Range and
/// nearest-neighbour queries work in chord distance, which is monotone in the
/// geodesic distance.
pub struct SphereIndex {
    width: f64,
    order: Vec<u32>,
    cells: HashMap<[i32; 3], (u32, u32)>,
    points: Vec<[f64; 3]>,
}

impl SphereIndex {
    pub fn new(points: &[UnitVector3], cell_width: f64) -> Self {
        let width = cell_width.clamp(1e-6, 2.0);
        let pts: Vec<[f64; 3]> = points.iter().map(|u| u.as_array()).collect();
        let key = |p: &[f64; 3]| p.map(|c| ((c + 1.0) / width).floor() as i32);
        let mut order: Vec<u32> = (0..pts.len() as u32).collect();
        order.sort_by_key(|&i| key(&pts[i as usize]));
        let mut cells = HashMap::new();
        let mut s = 0;
        while s < order.len() {
            let k = key(&pts[order[s] as usize]);
            let mut e = s + 1;
            while e < order.len() && key(&pts[order[e] as usize]) == k {
                e += 1;
            }
            cells.insert(k, (s as u32, e as u32));
            s = e;
        }
        SphereIndex {
            width,
            order,
            cells,
            points: pts,
        }
    }

    /// Cell width giving roughly `per_cell` points per occupied surface cell.
    pub fn width_for(n: usize, per_cell: f64) -> f64 {
        (4.0 * std::f64::consts::PI * per_cell / n.max(1) as f64).sqrt()
    }

    fn key(&self, p: [f64; 3]) -> [i32; 3] {
        p.map(|c| ((c + 1.0) / self.width).floor() as i32)
    }

    fn cell(&self, k: [i32; 3]) -> &[u32] {
        match self.cells.get(&k) {
            Some(&(s, e)) => &self.order[s as usize..e as usize],
            None => &[],
        }
    }

    /// Calls `visit(j)` for every point within chord distance `chord` of `q`
    /// (possibly also some slightly farther; callers filter exactly).
    pub fn for_each_within(&self, q: [f64; 3], chord: f64, mut visit: impl FnMut(usize)) {
        let lo = self.key(q.map(|c| c - chord));
        let hi = self.key(q.map(|c| c + chord));
        for a in lo[0]..=hi[0] {
            for b in lo[1]..=hi[1] {
                for c in lo[2]..=hi[2] {
                    for &j in self.cell([a, b, c]) {
                        visit(j as usize);
                    }
                }
            }
        }
    }

    /// Index of the point with the largest inner product with `q`, skipping
    /// `exclude`. Returns `None` when the index holds no other point.
    pub fn nearest(&self, q: [f64; 3], exclude: Option<usize>) -> Option<usize> {
        let k = self.key(q);
        let max_ring = (2.0 / self.width).ceil() as i32 + 1;
        let mut best: Option<(f64, usize)> = None;
        for s in 0..=max_ring {
            for a in -s..=s {
                for b in -s..=s {
                    for c in -s..=s {
                        if a.abs().max(b.abs()).max(c.abs()) != s {
                            continue;
                        }
                        for &j in self.cell([k[0] + a, k[1] + b, k[2] + c]) {
                            let j = j as usize;
                            if Some(j) == exclude {
                                continue;
                            }
                            let p = self.points[j];
                            let d = q[0] * p[0] + q[1] * p[1] + q[2] * p[2];
                            match best {
                                Some((bd, bj)) if bd > d || (bd == d && bj < j) => {}
                                _ => best = Some((d, j)),
                            }
                        }
                    }
                }
            }
            if let Some((d, _)) = best {
                // every unvisited point is at chord distance >= s * width
                let chord = (2.0 - 2.0 * d).max(0.0).sqrt();
                if chord <= s as f64 * self.width {
                    break;
                }
            }
        }
        best.map(|(_, j)| j)
    }
}
