//! Point-to-point channels seen by each error event.
//!
//! When only user 1 is in error, user 2's codeword is absorbed into the
//! channel: the input is `x₁` and the output is the pair `(x₂, y)`,
//! flattened `x₂`-major, `y`-minor (index `x₂·|Y| + y`). The user-2 event is
//! symmetric with output index `x₁·|Y| + y`. When both users are in error
//! the input is the pair `(x₁, x₂)` (index `x₁·|X₂| + x₂`) drawn from the
//! product distribution and the output is `y`.

use crate::gallager::{GallagerError, PointToPointChannel};
use crate::model::{ClassPair, ErrorType, InputDistributionBank, MacChannel, User};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChannelError {
    #[error("user {user} input distribution has {found} symbols, channel expects {expected}")]
    AlphabetMismatch { user: u8, expected: usize, found: usize },
    #[error(transparent)]
    Gallager(#[from] GallagerError),
}

/// Input distribution and channel for one error event.
#[derive(Debug, Clone, PartialEq)]
pub struct Superchannel {
    pub input: Vec<f64>,
    pub channel: PointToPointChannel,
}

/// Builds the point-to-point channel and input law for error type `tau`
/// with codeword distributions `Q_{1,i₁}` and `Q_{2,i₂}`.
pub fn superchannel(
    tau: ErrorType,
    mac: &MacChannel,
    bank: &InputDistributionBank,
    classes: ClassPair,
) -> Result<Superchannel, ChannelError> {
    let q1 = bank.get(User::One, classes.user1);
    let q2 = bank.get(User::Two, classes.user2);
    superchannel_for(tau, mac, q1, q2)
}

/// [`superchannel`] with the two input distributions given directly.
pub fn superchannel_for(
    tau: ErrorType,
    mac: &MacChannel,
    q1: &[f64],
    q2: &[f64],
) -> Result<Superchannel, ChannelError> {
    let (nx1, nx2, ny) = mac.dims();
    for (user, q, n) in [(1u8, q1, nx1), (2u8, q2, nx2)] {
        if q.len() != n {
            return Err(ChannelError::AlphabetMismatch { user, expected: n, found: q.len() });
        }
    }
    let sc = match tau {
        ErrorType::User1 => {
            let mut w = Vec::with_capacity(nx1 * nx2 * ny);
            for x1 in 0..nx1 {
                for (x2, &p2) in q2.iter().enumerate() {
                    w.extend(mac.row(x1, x2).iter().map(|v| p2 * v));
                }
            }
            Superchannel { input: q1.to_vec(), channel: PointToPointChannel::new(nx1, nx2 * ny, w)? }
        }
        ErrorType::User2 => {
            let mut w = Vec::with_capacity(nx1 * nx2 * ny);
            for x2 in 0..nx2 {
                for (x1, &p1) in q1.iter().enumerate() {
                    w.extend(mac.row(x1, x2).iter().map(|v| p1 * v));
                }
            }
            Superchannel { input: q2.to_vec(), channel: PointToPointChannel::new(nx2, nx1 * ny, w)? }
        }
        ErrorType::Both => {
            let mut input = Vec::with_capacity(nx1 * nx2);
            let mut w = Vec::with_capacity(nx1 * nx2 * ny);
            for (x1, &p1) in q1.iter().enumerate() {
                for (x2, &p2) in q2.iter().enumerate() {
                    input.push(p1 * p2);
                    w.extend_from_slice(mac.row(x1, x2));
                }
            }
            Superchannel { input, channel: PointToPointChannel::new(nx1 * nx2, ny, w)? }
        }
    };
    Ok(sc)
}
