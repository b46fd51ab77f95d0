use serde::{Deserialize, Serialize};

use crate::geometry::{Field, Position, ResolutionLevel, ResolutionSet};

/// The ten discrete UAV actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    MoveXPlus,
    MoveXMinus,
    MoveYPlus,
    MoveYMinus,
    MoveDiagPP,
    MoveDiagPM,
    MoveDiagMP,
    MoveDiagMM,
    ResolutionUp,
    ResolutionDown,
}

impl Action {
    pub const COUNT: usize = 10;

    pub const ALL: [Action; Self::COUNT] = [
        Action::MoveXPlus,
        Action::MoveXMinus,
        Action::MoveYPlus,
        Action::MoveYMinus,
        Action::MoveDiagPP,
        Action::MoveDiagPM,
        Action::MoveDiagMP,
        Action::MoveDiagMM,
        Action::ResolutionUp,
        Action::ResolutionDown,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Action> {
        Self::ALL.get(index).copied()
    }

    pub fn is_move(self) -> bool {
        !matches!(self, Action::ResolutionUp | Action::ResolutionDown)
    }

    /// Displacement for move actions: `axis` on one axis or `diagonal` on both.
    pub fn displacement(self, axis: f64, diagonal: f64) -> (f64, f64) {
        match self {
            Action::MoveXPlus => (axis, 0.0),
            Action::MoveXMinus => (-axis, 0.0),
            Action::MoveYPlus => (0.0, axis),
            Action::MoveYMinus => (0.0, -axis),
            Action::MoveDiagPP => (diagonal, diagonal),
            Action::MoveDiagPM => (diagonal, -diagonal),
            Action::MoveDiagMP => (-diagonal, diagonal),
            Action::MoveDiagMM => (-diagonal, -diagonal),
            Action::ResolutionUp | Action::ResolutionDown => (0.0, 0.0),
        }
    }
}

/// Apply one action to a UAV pose. Positions clamp to the field and the
/// resolution index clamps to the ends of the set.
pub fn apply_action(
    position: Position,
    level: ResolutionLevel,
    action: Action,
    axis_step: f64,
    diagonal_step: f64,
    field: Field,
    resolutions: &ResolutionSet,
) -> (Position, ResolutionLevel) {
    match action {
        Action::ResolutionUp => (position, resolutions.shift(level, true)),
        Action::ResolutionDown => (position, resolutions.shift(level, false)),
        _ => {
            let (dx, dy) = action.displacement(axis_step, diagonal_step);
            (field.clamp(position.offset(dx, dy)), level)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn set() -> ResolutionSet {
        ResolutionSet::new(vec![720, 1080, 2160], 600.0).unwrap()
    }

    #[test]
    fn ten_actions_round_trip_index() {
        assert_eq!(Action::ALL.len(), 10);
        for (i, a) in Action::ALL.iter().enumerate() {
            assert_eq!(a.index(), i);
            assert_eq!(Action::from_index(i), Some(*a));
        }
        assert_eq!(Action::from_index(10), None);
        assert_eq!(Action::ALL.iter().filter(|a| a.is_move()).count(), 8);
    }

    #[test]
    fn examples() {
        let field = Field::square(2400.0);
        let s = set();
        let (p, _) = apply_action(Position::new(1000.0, 1000.0), s.lowest(), Action::MoveXPlus, 333.0, 236.0, field, &s);
        assert_eq!(p, Position::new(1333.0, 1000.0));
        let (p, _) = apply_action(Position::new(2300.0, 1000.0), s.lowest(), Action::MoveXPlus, 333.0, 236.0, field, &s);
        assert_eq!(p, Position::new(2400.0, 1000.0));
        let (p, l) = apply_action(Position::new(5.0, 5.0), s.highest(), Action::ResolutionUp, 333.0, 236.0, field, &s);
        assert_eq!((p, l), (Position::new(5.0, 5.0), s.highest()));
        let (p, _) = apply_action(Position::new(100.0, 100.0), s.lowest(), Action::MoveDiagMM, 333.0, 236.0, field, &s);
        assert_eq!(p, Position::new(0.0, 0.0));
        let (_, l) = apply_action(Position::new(5.0, 5.0), s.lowest(), Action::ResolutionDown, 333.0, 236.0, field, &s);
        assert_eq!(l, s.lowest());
    }
}
