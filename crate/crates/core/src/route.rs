//! Route choice over a plausibility-weighted danger field built from the
//! resolved location beliefs and the coarse classification.

use thiserror::Error;

use crate::evidence::{Argument, ArgumentRole};
use crate::frame::Point;
use crate::resolver::CoarseReport;

#[derive(Debug, Error)]
pub enum RouteError {
    #[error("no candidate routes")]
    NoCandidates,
    #[error("route {0} is invalid: {1}")]
    InvalidRoute(String, String),
}

/// A candidate polyline route.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub id: String,
    pub waypoints: Vec<Point>,
}

impl Route {
    pub fn new(id: impl Into<String>, waypoints: Vec<Point>) -> Result<Self, RouteError> {
        let id = id.into();
        if waypoints.len() < 2 {
            return Err(RouteError::InvalidRoute(id, "needs at least two waypoints".into()));
        }
        for pair in waypoints.windows(2) {
            if pair[0] == pair[1] {
                return Err(RouteError::InvalidRoute(
                    id,
                    "consecutive waypoints must be distinct".into(),
                ));
            }
        }
        Ok(Self { id, waypoints })
    }

    pub fn length(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|pair| pair[0].distance_to(&pair[1]))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DangerModel {
    /// Radius around a threat site inside which exposure is lethal.
    pub lethal_radius: f64,
    /// Arc-length interval between danger samples along a route.
    pub sample_step: f64,
}

impl Default for DangerModel {
    fn default() -> Self {
        Self {
            lethal_radius: 10.0,
            sample_step: 1.0,
        }
    }
}

/// Danger at a point: for each localization, the plausibility that the
/// threat lies within lethal radius of the point, weighted by how
/// plausible it is that a threat is at that localization at all (first
/// localization by Pl(U)+Pl(M), second by Pl(M)+Pl(D)).
pub fn danger_at(
    point: &Point,
    arguments: &[Argument],
    coarse: &CoarseReport,
    model: &DangerModel,
) -> f64 {
    let mut danger = 0.0;
    for arg in arguments {
        let weight = match arg.role {
            ArgumentRole::FirstLocation => coarse.pl_unchanged + coarse.pl_moved,
            ArgumentRole::SecondLocation => coarse.pl_moved + coarse.pl_different,
            _ => continue,
        };
        let mut plausibility = 0.0;
        for (element, mass) in arg.discounted().entries() {
            let disc = element
                .same_section()
                .or(element.diff_section())
                .map(|pc| match arg.role {
                    ArgumentRole::FirstLocation => pc.first,
                    _ => pc.second,
                });
            if let Some(disc) = disc {
                if disc.intersects_ball(point, model.lethal_radius) {
                    plausibility += mass;
                }
            }
        }
        danger += weight * plausibility;
    }
    danger
}

/// Worst-case exposure along the route: the maximum of `danger_at` over
/// arc-length samples (waypoints are always sampled).
pub fn route_danger(
    route: &Route,
    arguments: &[Argument],
    coarse: &CoarseReport,
    model: &DangerModel,
) -> f64 {
    let mut worst = 0.0f64;
    for pair in route.waypoints.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let length = a.distance_to(&b);
        let samples = (length / model.sample_step).ceil() as usize;
        for i in 0..=samples {
            let t = i as f64 / samples as f64;
            let p = Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
            worst = worst.max(danger_at(&p, arguments, coarse, model));
        }
    }
    worst
}

/// Least-danger candidate; ties break toward shorter total length, then
/// lexicographic id.
pub fn select_route<'a>(
    candidates: &'a [Route],
    arguments: &[Argument],
    coarse: &CoarseReport,
    model: &DangerModel,
) -> Result<(&'a Route, f64), RouteError> {
    let mut best: Option<(&Route, f64, f64)> = None;
    for route in candidates {
        let danger = route_danger(route, arguments, coarse, model);
        let length = route.length();
        let better = match &best {
            None => true,
            Some((best_route, best_danger, best_length)) => {
                danger < *best_danger
                    || (danger == *best_danger
                        && (length < *best_length
                            || (length == *best_length && route.id < best_route.id)))
            }
        };
        if better {
            best = Some((route, danger, length));
        }
    }
    best.map(|(r, d, _)| (r, d)).ok_or(RouteError::NoCandidates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evidence::{build_coverage_bel, build_location_bel, ContourRow, LocationCoordinate};
    use crate::resolver::coarse_report;

    fn location_args() -> Vec<Argument> {
        let rows = vec![
            ContourRow { radius: 5.0, mass: 0.6 },
            ContourRow { radius: 20.0, mass: 0.4 },
        ];
        vec![
            build_location_bel("a", LocationCoordinate::First, Point::new(0.0, 0.0), &rows)
                .unwrap(),
            build_location_bel("b", LocationCoordinate::Second, Point::new(100.0, 0.0), &rows)
                .unwrap(),
        ]
    }

    #[test]
    fn danger_vanishes_far_from_all_contours() {
        let args = location_args();
        let coarse = coarse_report(&args).unwrap();
        let model = DangerModel::default();
        // Farther than lethal radius + largest contour from both centers.
        let far = Point::new(500.0, 500.0);
        assert_eq!(danger_at(&far, &args, &coarse, &model), 0.0);
        // At a center, all that argument's contours contain the point.
        let at_center = Point::new(0.0, 0.0);
        let expected = (coarse.pl_unchanged + coarse.pl_moved) * 1.0;
        assert!((danger_at(&at_center, &args, &coarse, &model) - expected).abs() < 1e-12);
    }

    #[test]
    fn vacuous_location_contributes_its_full_weight_everywhere() {
        let mut args = location_args();
        args[1].set_discount_rate(1.0);
        let coarse = coarse_report(&args).unwrap();
        let model = DangerModel::default();
        let far = Point::new(500.0, 500.0);
        let expected = coarse.pl_moved + coarse.pl_different;
        assert!((danger_at(&far, &args, &coarse, &model) - expected).abs() < 1e-12);
    }

    #[test]
    fn route_selection_prefers_low_danger_then_length_then_id() {
        let args = location_args();
        let coarse = coarse_report(&args).unwrap();
        let model = DangerModel {
            lethal_radius: 10.0,
            sample_step: 1.0,
        };
        let through = Route::new(
            "direct",
            vec![Point::new(-50.0, 0.0), Point::new(150.0, 0.0)],
        )
        .unwrap();
        let detour = Route::new(
            "detour",
            vec![
                Point::new(-50.0, 0.0),
                Point::new(50.0, 300.0),
                Point::new(150.0, 0.0),
            ],
        )
        .unwrap();
        let candidates = vec![through.clone(), detour.clone()];
        let (chosen, danger) = select_route(&candidates, &args, &coarse, &model).unwrap();
        assert_eq!(chosen.id, "detour");
        assert_eq!(danger, 0.0);

        // Permutation invariance.
        let flipped = vec![detour, through];
        let (chosen2, _) = select_route(&flipped, &args, &coarse, &model).unwrap();
        assert_eq!(chosen2.id, "detour");

        // With two use-cases tied on danger, the shorter route wins; with
        // identical geometry, the lexicographically smaller id wins.
        let a = Route::new("zeta", vec![Point::new(500.0, 0.0), Point::new(500.0, 10.0)]).unwrap();
        let b = Route::new("alpha", vec![Point::new(500.0, 0.0), Point::new(500.0, 10.0)]).unwrap();
        let pair = [a, b];
        let (tie, _) = select_route(&pair, &args, &coarse, &model).unwrap();
        assert_eq!(tie.id, "alpha");
    }

    #[test]
    fn zero_field_picks_shortest() {
        let args = vec![build_coverage_bel("cov", 0.5).unwrap()];
        let coarse = coarse_report(&args).unwrap();
        let model = DangerModel::default();
        let short = Route::new("s", vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)]).unwrap();
        let long = Route::new("l", vec![Point::new(0.0, 0.0), Point::new(9.0, 0.0)]).unwrap();
        let pair = [long, short];
        let (chosen, _) = select_route(&pair, &args, &coarse, &model).unwrap();
        assert_eq!(chosen.id, "s");
    }

    #[test]
    fn route_validation() {
        assert!(Route::new("r", vec![Point::new(0.0, 0.0)]).is_err());
        assert!(Route::new("r", vec![Point::new(0.0, 0.0), Point::new(0.0, 0.0)]).is_err());
    }
}
