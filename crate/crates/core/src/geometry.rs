//! Network realizations: a Poisson field of base stations on a square window,
//! one user per cell placed uniformly in the BS's Voronoi cell, and the
//! user-to-BS path-loss table.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};

/// Per-BS budget of rejection-sampling draws when placing a user.
pub const REJECTION_BUDGET: usize = 1_000_000;

const MAX_PPP_ATTEMPTS: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Square simulation window `[0, side)²`, optionally with wrap-around edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub side: f64,
    pub wraparound: bool,
}

impl Window {
    pub fn torus(side: f64) -> Result<Self> {
        Self::new(side, true)
    }

    pub fn new(side: f64, wraparound: bool) -> Result<Self> {
        if side > 0.0 && side.is_finite() {
            Ok(Self { side, wraparound })
        } else {
            Err(Error::Config(format!(
                "window side must be positive, got {side}"
            )))
        }
    }

    pub fn area(&self) -> f64 {
        self.side * self.side
    }

    /// Displacement `q − p`, reduced to the nearest image on a torus.
    pub fn displacement(&self, p: Point, q: Point) -> (f64, f64) {
        let mut dx = q.x - p.x;
        let mut dy = q.y - p.y;
        if self.wraparound {
            let w = self.side;
            dx -= w * (dx / w).round();
            dy -= w * (dy / w).round();
        }
        (dx, dy)
    }

    pub fn distance_sq(&self, p: Point, q: Point) -> f64 {
        let (dx, dy) = self.displacement(p, q);
        dx * dx + dy * dy
    }

    fn wrap(&self, v: f64) -> f64 {
        let r = v.rem_euclid(self.side);
        // rem_euclid can round up to exactly `side`.
        if r >= self.side {
            0.0
        } else {
            r
        }
    }
}

/// Distance between two points under the window's metric (per-coordinate
/// differences reduced to `[−W/2, W/2]` when wrapping).
pub fn torus_distance(p: Point, q: Point, window: &Window) -> f64 {
    window.distance_sq(p, q).sqrt()
}

/// Homogeneous PPP of the given intensity on the window. Draws with fewer than
/// two points are discarded and redrawn.
pub fn sample_ppp<R: Rng + ?Sized>(
    intensity: f64,
    window: &Window,
    rng: &mut R,
) -> Result<Vec<Point>> {
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(Error::Config(format!(
            "intensity must be positive, got {intensity}"
        )));
    }
    let mean = intensity * window.area();
    let count_law = Poisson::new(mean)
        .map_err(|e| Error::Config(format!("cannot draw Poisson({mean}): {e}")))?;
    for _ in 0..MAX_PPP_ATTEMPTS {
        let count = count_law.sample(rng) as usize;
        if count < 2 {
            continue;
        }
        return Ok((0..count)
            .map(|_| {
                Point::new(
                    rng.random::<f64>() * window.side,
                    rng.random::<f64>() * window.side,
                )
            })
            .collect());
    }
    Err(Error::Config(format!(
        "no realization with at least two base stations in {MAX_PPP_ATTEMPTS} draws \
         (mean count {mean})"
    )))
}

/// Index of the base station closest to `p`.
pub fn nearest_bs(p: Point, bs_points: &[Point], window: &Window) -> usize {
    bs_points
        .iter()
        .enumerate()
        .map(|(k, &b)| (k, window.distance_sq(p, b)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k)
        .expect("at least one base station")
}

fn strictly_nearest(p: Point, target: usize, bs_points: &[Point], window: &Window) -> bool {
    let own = window.distance_sq(p, bs_points[target]);
    own > 0.0
        && bs_points
            .iter()
            .enumerate()
            .all(|(k, &b)| k == target || window.distance_sq(p, b) > own)
}

/// Radius of a disc around BS `i` that contains its whole Voronoi cell, or
/// `None` if no such disc is certified.
///
/// If every 60° sector around the BS holds another BS, a point farther than
/// the largest per-sector nearest distance is closer to that sector's BS.
fn cell_bounding_radius(i: usize, bs_points: &[Point], window: &Window) -> Option<f64> {
    let mut nearest = [f64::INFINITY; 6];
    let centre = bs_points[i];
    for (k, &b) in bs_points.iter().enumerate() {
        if k == i {
            continue;
        }
        let (dx, dy) = window.displacement(centre, b);
        let angle = dy.atan2(dx).rem_euclid(2.0 * PI);
        let sector = ((angle / (PI / 3.0)) as usize).min(5);
        nearest[sector] = nearest[sector].min((dx * dx + dy * dy).sqrt());
    }
    let radius = nearest.iter().copied().fold(0.0, f64::max);
    let fits = if window.wraparound {
        2.0 * radius < window.side
    } else {
        true
    };
    (radius.is_finite() && fits).then_some(radius)
}

/// One user per BS, uniform on the BS's Voronoi cell.
///
/// Rejection sampling from a box that provably contains the cell, falling back
/// to the whole window when no bound is certified.
pub fn place_users<R: Rng + ?Sized>(
    bs_points: &[Point],
    window: &Window,
    rng: &mut R,
) -> Result<Vec<Point>> {
    if bs_points.len() < 2 {
        return Err(Error::Config(format!(
            "user placement needs at least two base stations, got {}",
            bs_points.len()
        )));
    }
    let w = window.side;
    (0..bs_points.len())
        .map(|i| {
            let centre = bs_points[i];
            let radius = cell_bounding_radius(i, bs_points, window);
            let (x_range, y_range) = match radius {
                Some(r) if window.wraparound => {
                    ((centre.x - r, centre.x + r), (centre.y - r, centre.y + r))
                }
                Some(r) => (
                    ((centre.x - r).max(0.0), (centre.x + r).min(w)),
                    ((centre.y - r).max(0.0), (centre.y + r).min(w)),
                ),
                None => ((0.0, w), (0.0, w)),
            };
            for _ in 0..REJECTION_BUDGET {
                let x = x_range.0 + rng.random::<f64>() * (x_range.1 - x_range.0);
                let y = y_range.0 + rng.random::<f64>() * (y_range.1 - y_range.0);
                let candidate = if window.wraparound {
                    Point::new(window.wrap(x), window.wrap(y))
                } else {
                    Point::new(x, y)
                };
                if strictly_nearest(candidate, i, bs_points, window) {
                    return Ok(candidate);
                }
            }
            Err(Error::RejectionBudget {
                bs: i,
                budget: REJECTION_BUDGET,
                radius: radius.unwrap_or(w),
            })
        })
        .collect()
}

/// Dense table of `|X_k − Y_i|^(−α)`, row `i` = user, column `k` = BS.
#[derive(Debug, Clone, PartialEq)]
pub struct PathlossMatrix {
    n: usize,
    values: Vec<f64>,
}

impl PathlossMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, user: usize, bs: usize) -> f64 {
        self.values[user * self.n + bs]
    }

    #[inline]
    pub fn row(&self, user: usize) -> &[f64] {
        &self.values[user * self.n..(user + 1) * self.n]
    }
}

pub fn build_pathloss(
    bs_points: &[Point],
    user_points: &[Point],
    alpha: f64,
    window: &Window,
) -> Result<PathlossMatrix> {
    if !(alpha > 2.0 && alpha.is_finite()) {
        return Err(Error::Config(format!(
            "path-loss exponent must be > 2, got {alpha}"
        )));
    }
    if bs_points.len() != user_points.len() {
        return Err(Error::Config(format!(
            "{} base stations but {} users",
            bs_points.len(),
            user_points.len()
        )));
    }
    let n = bs_points.len();
    let half_alpha = -0.5 * alpha;
    let mut values = Vec::with_capacity(n * n);
    for (i, &u) in user_points.iter().enumerate() {
        for (k, &b) in bs_points.iter().enumerate() {
            let d2 = window.distance_sq(u, b);
            if d2 == 0.0 {
                return Err(Error::Degenerate(format!(
                    "user {i} coincides with base station {k}"
                )));
            }
            values.push(d2.powf(half_alpha));
        }
    }
    Ok(PathlossMatrix { n, values })
}

/// One immutable network snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    pub bs_points: Vec<Point>,
    pub user_points: Vec<Point>,
    /// Serving distance `D_i` of each pair.
    pub link_distance: Vec<f64>,
    pub pathloss: PathlossMatrix,
    pub window: Window,
    pub alpha: f64,
}

impl NetworkRealization {
    /// Draws a PPP of BSs, places one user per cell and tabulates path loss.
    pub fn generate<R: Rng + ?Sized>(
        intensity: f64,
        window: Window,
        alpha: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let bs_points = sample_ppp(intensity, &window, rng)?;
        let user_points = place_users(&bs_points, &window, rng)?;
        Self::from_points(bs_points, user_points, window, alpha)
    }

    /// Builds a realization from explicit positions; user `i` is served by BS `i`.
    pub fn from_points(
        bs_points: Vec<Point>,
        user_points: Vec<Point>,
        window: Window,
        alpha: f64,
    ) -> Result<Self> {
        let pathloss = build_pathloss(&bs_points, &user_points, alpha, &window)?;
        let link_distance = bs_points
            .iter()
            .zip(&user_points)
            .map(|(&b, &u)| torus_distance(b, u, &window))
            .collect();
        Ok(Self {
            bs_points,
            user_points,
            link_distance,
            pathloss,
            window,
            alpha,
        })
    }

    pub fn pairs(&self) -> usize {
        self.bs_points.len()
    }

    /// Whether every user's nearest BS is its serving BS.
    pub fn association_holds(&self) -> bool {
        self.user_points
            .iter()
            .enumerate()
            .all(|(i, &u)| nearest_bs(u, &self.bs_points, &self.window) == i)
    }

    /// CSV dump: `bs_id,bs_x,bs_y,user_x,user_y,D`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bs_id,bs_x,bs_y,user_x,user_y,D")?;
        for i in 0..self.pairs() {
            let b = self.bs_points[i];
            let u = self.user_points[i];
            writeln!(
                out,
                "{i},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}",
                b.x, b.y, u.x, u.y, self.link_distance[i]
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    #[test]
    fn torus_distance_examples() {
        let w = Window::torus(60.0).unwrap();
        let o = Point::new(0.0, 0.0);
        assert_eq!(torus_distance(o, o, &w), 0.0);
        assert!((torus_distance(o, Point::new(59.0, 0.0), &w) - 1.0).abs() < 1e-12);
        let far = torus_distance(o, Point::new(30.0, 30.0), &w);
        assert!((far - 30.0 * 2f64.sqrt()).abs() < 1e-12);

        let flat = Window::new(60.0, false).unwrap();
        assert_eq!(torus_distance(o, Point::new(59.0, 0.0), &flat), 59.0);
    }

    #[test]
    fn pathloss_examples() {
        let w = Window::torus(100.0).unwrap();
        let bs = vec![Point::new(0.0, 0.0), Point::new(50.0, 50.0)];
        let users = vec![Point::new(1.0, 0.0), Point::new(52.0, 50.0)];
        let pl = build_pathloss(&bs, &users, 4.0, &w).unwrap();
        assert!((pl.get(0, 0) - 1.0).abs() < 1e-15);
        assert!((pl.get(1, 1) - 1.0 / 16.0).abs() < 1e-15);
        assert!(pl.row(0).iter().all(|v| v.is_finite() && *v > 0.0));
        assert!(build_pathloss(&bs, &users, 2.0, &w).is_err());
        assert!(matches!(
            build_pathloss(&bs, &bs, 3.0, &w),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn ppp_is_deterministic_per_stream() {
        let w = Window::torus(20.0).unwrap();
        let a = sample_ppp(1.0, &w, &mut stream(11, Purpose::Realization, 0, 0)).unwrap();
        let b = sample_ppp(1.0, &w, &mut stream(11, Purpose::Realization, 0, 0)).unwrap();
        assert_eq!(a, b);
        assert!(a
            .iter()
            .all(|p| (0.0..20.0).contains(&p.x) && (0.0..20.0).contains(&p.y)));
    }

    #[test]
    fn ppp_rejects_bad_intensity() {
        let w = Window::torus(20.0).unwrap();
        let mut rng = stream(1, Purpose::Realization, 0, 0);
        assert!(sample_ppp(0.0, &w, &mut rng).is_err());
        assert!(sample_ppp(f64::NAN, &w, &mut rng).is_err());
    }

    #[test]
    fn users_are_in_their_cells() {
        for wrap in [true, false] {
            let w = Window::new(20.0, wrap).unwrap();
            let mut rng = stream(5, Purpose::Realization, 0, 0);
            let net = NetworkRealization::generate(1.0, w, 3.0, &mut rng).unwrap();
            assert!(net.association_holds());
            assert_eq!(net.link_distance.len(), net.pairs());
            for i in 0..net.pairs() {
                let d = net.link_distance[i];
                assert!((net.pathloss.get(i, i) - d.powf(-3.0)).abs() <= 1e-12 * d.powf(-3.0));
            }
        }
    }

    #[test]
    fn two_station_torus_falls_back_to_window_sampling() {
        let w = Window::torus(10.0).unwrap();
        let bs = vec![Point::new(2.5, 5.0), Point::new(7.5, 5.0)];
        assert!(cell_bounding_radius(0, &bs, &w).is_none());
        let mut rng = stream(3, Purpose::Realization, 0, 0);
        let users = place_users(&bs, &w, &mut rng).unwrap();
        assert_eq!(nearest_bs(users[0], &bs, &w), 0);
        assert_eq!(nearest_bs(users[1], &bs, &w), 1);
    }

    #[test]
    fn single_station_is_rejected() {
        let w = Window::torus(10.0).unwrap();
        let mut rng = stream(3, Purpose::Realization, 0, 0);
        assert!(place_users(&[Point::new(1.0, 1.0)], &w, &mut rng).is_err());
    }

    #[test]
    fn csv_dump_has_one_row_per_pair() {
        let w = Window::torus(10.0).unwrap();
        let mut rng = stream(9, Purpose::Realization, 0, 0);
        let net = NetworkRealization::generate(1.0, w, 4.0, &mut rng).unwrap();
        let mut buf = Vec::new();
        net.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), net.pairs() + 1);
        assert!(text.starts_with("bs_id,bs_x,bs_y,user_x,user_y,D\n"));
    }
}
