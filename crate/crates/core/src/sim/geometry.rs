use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::SimError;

/// Position in km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist2(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn norm2(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }
}

/// Square simulation window centred at the origin, with a central disk in
/// which statistics are collected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    side_km: f64,
    observation_radius_km: f64,
}

impl Default for Region {
    /// 10 km × 10 km window, 1 km observation disk.
    fn default() -> Self {
        Self {
            side_km: 10.0,
            observation_radius_km: 1.0,
        }
    }
}

impl Region {
    pub fn new(side_km: f64, observation_radius_km: f64) -> Result<Self, SimError> {
        if !(side_km > 0.0 && side_km.is_finite()) {
            return Err(SimError::InvalidRegion("side must be positive and finite"));
        }
        if !(observation_radius_km > 0.0 && observation_radius_km < side_km / 2.0) {
            return Err(SimError::InvalidRegion(
                "observation disk must lie strictly inside the window",
            ));
        }
        Ok(Self {
            side_km,
            observation_radius_km,
        })
    }

    /// Window of the given area [km²] with the default observation disk.
    pub fn with_area(area_km2: f64) -> Result<Self, SimError> {
        Self::new(area_km2.sqrt(), 1.0)
    }

    pub fn side(&self) -> f64 {
        self.side_km
    }

    pub fn half_side(&self) -> f64 {
        0.5 * self.side_km
    }

    pub fn area(&self) -> f64 {
        self.side_km * self.side_km
    }

    pub fn observation_radius(&self) -> f64 {
        self.observation_radius_km
    }

    pub fn is_observed(&self, p: &Point) -> bool {
        p.norm2() <= self.observation_radius_km * self.observation_radius_km
    }

    pub fn contains(&self, p: &Point) -> bool {
        let h = self.half_side();
        p.x.abs() <= h && p.y.abs() <= h
    }
}

/// Homogeneous PPP of the given intensity [points/km²] on the window.
pub fn sample_ppp<R: Rng + ?Sized>(intensity: f64, region: &Region, rng: &mut R) -> Vec<Point> {
    assert!(
        intensity >= 0.0 && intensity.is_finite(),
        "intensity must be finite and nonnegative"
    );
    let mean = intensity * region.area();
    if mean == 0.0 {
        return Vec::new();
    }
    let count = Poisson::new(mean)
        .expect("positive finite mean")
        .sample(rng) as usize;
    let h = region.half_side();
    (0..count)
        .map(|_| Point::new(rng.random_range(-h..h), rng.random_range(-h..h)))
        .collect()
}

/// Uniform bucket grid over the window for nearest-neighbour queries.
#[derive(Debug, Clone)]
pub struct GridIndex {
    lo: f64,
    cell: f64,
    n: usize,
    starts: Vec<u32>,
    items: Vec<u32>,
    points: Vec<Point>,
}

impl GridIndex {
    /// Builds the index with about two points per cell.
    pub fn build(points: &[Point], region: &Region) -> Self {
        let side = region.side();
        let n = ((points.len() as f64 / 2.0).sqrt().ceil() as usize).clamp(1, 2048);
        let cell = side / n as f64;
        let lo = -region.half_side();
        let mut counts = vec![0u32; n * n + 1];
        let keys: Vec<usize> = points
            .iter()
            .map(|p| {
                let (i, j) = Self::cell_of(lo, cell, n, p);
                j * n + i
            })
            .collect();
        for &k in &keys {
            counts[k + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; points.len()];
        for (idx, &k) in keys.iter().enumerate() {
            items[fill[k] as usize] = idx as u32;
            fill[k] += 1;
        }
        Self {
            lo,
            cell,
            n,
            starts: counts,
            items,
            points: points.to_vec(),
        }
    }

    fn cell_of(lo: f64, cell: f64, n: usize, p: &Point) -> (usize, usize) {
        let clamp = |v: f64| (((v - lo) / cell).floor().max(0.0) as usize).min(n - 1);
        (clamp(p.x), clamp(p.y))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the nearest point; ties go to the lowest index.
    pub fn nearest(&self, q: &Point) -> Option<usize> {
        if self.points.is_empty() {
            return None;
        }
        let (ci, cj) = Self::cell_of(self.lo, self.cell, self.n, q);
        let mut best: Option<(f64, usize)> = None;
        let n = self.n as isize;
        for ring in 0..self.n as isize {
            let (ci, cj) = (ci as isize, cj as isize);
            for j in (cj - ring).max(0)..=(cj + ring).min(n - 1) {
                let on_edge_row = j == cj - ring || j == cj + ring;
                let step = if on_edge_row { 1 } else { (2 * ring).max(1) };
                let mut i = ci - ring;
                while i <= ci + ring {
                    if i >= 0 && i < n {
                        let k = (j * n + i) as usize;
                        for &idx in
                            &self.items[self.starts[k] as usize..self.starts[k + 1] as usize]
                        {
                            let idx = idx as usize;
                            let d2 = self.points[idx].dist2(q);
                            let better = match best {
                                None => true,
                                Some((bd, bi)) => d2 < bd || (d2 == bd && idx < bi),
                            };
                            if better {
                                best = Some((d2, idx));
                            }
                        }
                    }
                    i += step;
                }
            }
            if let Some((bd, _)) = best {
                // Cells beyond this ring are at least `ring · cell` away.
                let reach = ring as f64 * self.cell;
                if bd < reach * reach {
                    break;
                }
            }
        }
        best.map(|(_, i)| i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn brute_nearest(points: &[Point], q: &Point) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (i, p) in points.iter().enumerate() {
            let d = p.dist2(q);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
        best.map(|(_, i)| i)
    }

    #[test]
    fn region_validation() {
        assert!(Region::new(10.0, 5.0).is_err());
        assert!(Region::new(-1.0, 0.5).is_err());
        let r = Region::default();
        assert_eq!(r.area(), 100.0);
        assert!(r.is_observed(&Point::new(0.6, 0.8)));
        assert!(!r.is_observed(&Point::new(0.8, 0.8)));
    }

    #[test]
    fn empty_process() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_ppp(0.0, &Region::default(), &mut rng).is_empty());
    }

    #[test]
    fn poisson_mean_count() {
        let region = Region::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trials = 200;
        let total: usize = (0..trials)
            .map(|_| sample_ppp(10.0, &region, &mut rng).len())
            .sum();
        let mean = total as f64 / trials as f64;
        assert!((mean - 1000.0).abs() < 3.0 * (1000.0f64).sqrt() / (trials as f64).sqrt());
        let pts = sample_ppp(10.0, &region, &mut rng);
        assert!(pts.iter().all(|p| region.contains(p)));
    }

    #[test]
    fn seeded_determinism() {
        let region = Region::default();
        let a = sample_ppp(5.0, &region, &mut ChaCha8Rng::seed_from_u64(3));
        let b = sample_ppp(5.0, &region, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }

    #[test]
    fn nearest_matches_brute_force() {
        let region = Region::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for intensity in [0.05, 1.0, 20.0] {
            let pts = sample_ppp(intensity, &region, &mut rng);
            let grid = GridIndex::build(&pts, &region);
            let queries = sample_ppp(2.0, &region, &mut rng);
            for q in &queries {
                assert_eq!(grid.nearest(q), brute_nearest(&pts, q));
            }
        }
    }

    #[test]
    fn tie_breaks_by_lowest_index() {
        let region = Region::default();
        let pts = vec![
            Point::new(1.0, 0.0),
            Point::new(-1.0, 0.0),
            Point::new(0.0, 1.0),
        ];
        let grid = GridIndex::build(&pts, &region);
        assert_eq!(grid.nearest(&Point::ORIGIN), Some(0));
        let pts = vec![
            Point::new(3.0, 3.0),
            Point::new(0.0, -1.0),
            Point::new(0.0, 1.0),
        ];
        let grid = GridIndex::build(&pts, &region);
        assert_eq!(grid.nearest(&Point::ORIGIN), Some(1));
        assert_eq!(GridIndex::build(&[], &region).nearest(&Point::ORIGIN), None);
    }
}
