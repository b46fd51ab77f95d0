//! User-to-UAV assignment.
//!
//! Each user is assigned to at most one covering UAV. Among the UAVs whose
//! disk contains the user, the one with the highest resolution wins; ties go
//! to the nearest UAV and then to the lowest UAV index.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::geometry::{distance, Position};

/// A UAV as seen by the assignment rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coverer {
    pub position: Position,
    pub radius: f64,
    pub pixels: u32,
    /// Operating agent or non-malfunctioned non-agent.
    pub active: bool,
}

/// Binary assignment matrix stored column-wise: `assignment[n]` is the UAV
/// row holding user `n`, if any. Column sums are therefore at most one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationMatrix {
    uavs: usize,
    assignment: Vec<Option<usize>>,
}

impl AssociationMatrix {
    pub fn empty(uavs: usize, users: usize) -> Self {
        Self {
            uavs,
            assignment: vec![None; users],
        }
    }

    pub fn uavs(&self) -> usize {
        self.uavs
    }

    pub fn users(&self) -> usize {
        self.assignment.len()
    }

    pub fn assigned_uav(&self, user: usize) -> Option<usize> {
        self.assignment[user]
    }

    /// `c[m][n]`.
    pub fn get(&self, uav: usize, user: usize) -> bool {
        self.assignment[user] == Some(uav)
    }

    /// Users assigned to UAV row `uav`.
    pub fn row_count(&self, uav: usize) -> usize {
        self.assignment.iter().filter(|a| **a == Some(uav)).count()
    }

    /// Users assigned to any of the first `rows` UAV rows.
    pub fn count_in_rows(&self, rows: usize) -> usize {
        self.assignment
            .iter()
            .filter(|a| matches!(a, Some(m) if *m < rows))
            .count()
    }

    pub fn assigned_count(&self) -> usize {
        self.assignment.iter().filter(|a| a.is_some()).count()
    }

    pub fn unassigned_count(&self) -> usize {
        self.users() - self.assigned_count()
    }

    /// Per-row user counts.
    pub fn row_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.uavs];
        for m in self.assignment.iter().flatten() {
            counts[*m] += 1;
        }
        counts
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let mut c = vec![vec![0u8; self.users()]; self.uavs];
        for (n, m) in self.assignment.iter().enumerate() {
            if let Some(m) = m {
                c[*m][n] = 1;
            }
        }
        c
    }
}

/// Assign every user to its best covering UAV.
pub fn associate(coverers: &[Coverer], users: &[Position]) -> AssociationMatrix {
    let mut matrix = AssociationMatrix::empty(coverers.len(), users.len());
    for (n, user) in users.iter().enumerate() {
        let mut best: Option<(usize, u32, f64)> = None;
        for (m, uav) in coverers.iter().enumerate() {
            if !uav.active {
                continue;
            }
            let d = distance(uav.position, *user);
            if d > uav.radius {
                continue;
            }
            let better = match best {
                None => true,
                Some((_, pixels, dist)) => uav.pixels > pixels || (uav.pixels == pixels && d < dist),
            };
            if better {
                best = Some((m, uav.pixels, d));
            }
        }
        matrix.assignment[n] = best.map(|(m, _, _)| m);
    }
    matrix
}

/// Fraction of all users assigned to some UAV.
pub fn support_rate(matrix: &AssociationMatrix, users: usize) -> f64 {
    if users == 0 {
        return 0.0;
    }
    matrix.assigned_count() as f64 / users as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn coverer(x: f64, y: f64, radius: f64, pixels: u32) -> Coverer {
        Coverer {
            position: Position::new(x, y),
            radius,
            pixels,
            active: true,
        }
    }

    /// Enumerate every admissible assignment of one user (C1: at most one
    /// UAV, coverage only) and pick the rule's winner by explicit ranking.
    fn brute_force(coverers: &[Coverer], users: &[Position]) -> Vec<Option<usize>> {
        users
            .iter()
            .map(|u| {
                let candidates: Vec<usize> = (0..coverers.len())
                    .filter(|&m| coverers[m].active && distance(coverers[m].position, *u) <= coverers[m].radius)
                    .collect();
                let top = candidates.iter().map(|&m| coverers[m].pixels).max()?;
                let at_top: Vec<usize> = candidates.into_iter().filter(|&m| coverers[m].pixels == top).collect();
                let nearest = at_top
                    .iter()
                    .map(|&m| distance(coverers[m].position, *u))
                    .fold(f64::INFINITY, f64::min);
                at_top
                    .into_iter()
                    .filter(|&m| distance(coverers[m].position, *u) == nearest)
                    .min()
            })
            .collect()
    }

    #[test]
    fn examples() {
        let uavs = [coverer(0.0, 0.0, 10.0, 1080), coverer(4.0, 0.0, 5.0, 2160)];
        let users = [Position::new(100.0, 100.0), Position::new(-8.0, 0.0), Position::new(3.0, 0.0)];
        let c = associate(&uavs, &users);
        assert_eq!(c.assigned_uav(0), None);
        assert_eq!(c.assigned_uav(1), Some(0));
        assert_eq!(c.assigned_uav(2), Some(1));
        assert_eq!(c.to_dense(), vec![vec![0, 1, 0], vec![0, 0, 1]]);
        assert!((support_rate(&c, 3) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ties_break_by_distance_then_index() {
        let uavs = [coverer(0.0, 0.0, 10.0, 720), coverer(2.0, 0.0, 10.0, 720), coverer(2.0, 0.0, 10.0, 720)];
        let c = associate(&uavs, &[Position::new(3.0, 0.0)]);
        assert_eq!(c.assigned_uav(0), Some(1));
    }

    #[test]
    fn inactive_uavs_cover_nothing() {
        let mut u = coverer(0.0, 0.0, 10.0, 720);
        u.active = false;
        let c = associate(&[u], &[Position::new(0.0, 0.0)]);
        assert_eq!(c.assigned_count(), 0);
    }

    #[test]
    fn support_rate_counts() {
        let mut m = AssociationMatrix::empty(2, 25);
        assert_eq!(support_rate(&m, 25), 0.0);
        for n in 0..15 {
            m.assignment[n] = Some(n % 2);
        }
        assert!((support_rate(&m, 25) - 0.6).abs() < 1e-15);
        for n in 0..25 {
            m.assignment[n] = Some(0);
        }
        assert_eq!(support_rate(&m, 25), 1.0);
    }

    fn small_instance() -> impl Strategy<Value = (Vec<Coverer>, Vec<Position>)> {
        let uav = (0.0f64..10.0, 0.0f64..10.0, 1.0f64..6.0, 0usize..3, proptest::bool::weighted(0.85)).prop_map(
            |(x, y, r, level, active)| Coverer {
                position: Position::new(x.round(), y.round()),
                radius: r.round(),
                pixels: [720, 1080, 2160][level],
                active,
            },
        );
        let user = (0.0f64..10.0, 0.0f64..10.0).prop_map(|(x, y)| Position::new(x.round(), y.round()));
        (proptest::collection::vec(uav, 3), proptest::collection::vec(user, 5))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]
        #[test]
        fn matches_brute_force((uavs, users) in small_instance()) {
            let c = associate(&uavs, &users);
            let expected = brute_force(&uavs, &users);
            for n in 0..users.len() {
                prop_assert_eq!(c.assigned_uav(n), expected[n]);
                let column: u8 = c.to_dense().iter().map(|row| row[n]).sum();
                prop_assert!(column <= 1);
            }
        }

        #[test]
        fn deactivating_a_uav_never_reduces_unassigned((uavs, users) in small_instance(), victim in 0usize..3) {
            let before = associate(&uavs, &users).unassigned_count();
            let mut failed = uavs.clone();
            failed[victim].active = false;
            let after = associate(&failed, &users).unassigned_count();
            prop_assert!(after >= before);
        }
    }
}
