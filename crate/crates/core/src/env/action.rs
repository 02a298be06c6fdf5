use crate::orbit::Move;
use serde::{Deserialize, Serialize};

/// The six agent actions, numbered as in the episode algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    DontMove = 0,
    RequestUser = 1,
    MoveLeft = 2,
    MoveRight = 3,
    MoveForward = 4,
    MoveBackward = 5,
}

impl Action {
    pub const COUNT: usize = 6;
    pub const ALL: [Action; 6] = [
        Action::DontMove,
        Action::RequestUser,
        Action::MoveLeft,
        Action::MoveRight,
        Action::MoveForward,
        Action::MoveBackward,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: usize) -> Option<Action> {
        Self::ALL.get(id).copied()
    }

    pub fn movement(self) -> Option<Move> {
        match self {
            Action::MoveLeft => Some(Move::Left),
            Action::MoveRight => Some(Move::Right),
            Action::MoveForward => Some(Move::Forward),
            Action::MoveBackward => Some(Move::Backward),
            Action::DontMove | Action::RequestUser => None,
        }
    }

    pub fn is_motion(self) -> bool {
        self.movement().is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for (i, a) in Action::ALL.iter().enumerate() {
            assert_eq!(a.id() as usize, i);
            assert_eq!(Action::from_id(i), Some(*a));
        }
        assert_eq!(Action::from_id(6), None);
        assert_eq!(Action::ALL.iter().filter(|a| a.is_motion()).count(), 4);
    }
}
