//! Simultaneous per-type second-price clearing and the feedback each bidder
//! is allowed to see.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{RngStream, SimTime};

pub type BidderId = usize;
pub type TypeIndex = usize;

/// A sealed offer for one unit of one service type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bid {
    pub request_id: u64,
    pub bidder: BidderId,
    pub service_type: TypeIndex,
    pub price: f64,
    pub resource_estimate: f64,
    pub deadline: SimTime,
    pub rebid_count: u32,
    /// When the underlying request was created; breaks admission-order ties.
    pub created: SimTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeClearing {
    pub slots: u32,
    /// Winning bidders, highest price first; tied prices keep the order of the
    /// random boundary draw.
    pub winners: Vec<BidderId>,
    pub payment: f64,
    pub bid_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuctionOutcome {
    pub round_time: SimTime,
    pub per_type: BTreeMap<TypeIndex, TypeClearing>,
}

impl AuctionOutcome {
    pub fn won(&self, bidder: BidderId, service_type: TypeIndex) -> bool {
        self.per_type
            .get(&service_type)
            .is_some_and(|c| c.winners.contains(&bidder))
    }

    pub fn payment(&self, service_type: TypeIndex) -> Option<f64> {
        self.per_type.get(&service_type).map(|c| c.payment)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AuctionError {
    #[error("bidder {bidder} bid twice for type {service_type} in one round")]
    DuplicateBid {
        bidder: BidderId,
        service_type: TypeIndex,
    },
    #[error("bid from bidder {0} has a negative or non-finite price")]
    InvalidPrice(BidderId),
    #[error("unknown bidder {0}")]
    UnknownBidder(BidderId),
}

/// Clears every service type independently: the `n_k` highest prices win and
/// all winners pay the `(n_k+1)`-th highest price, or 0 when there are at
/// most `n_k` bids. Equal prices straddling the last slot are resolved by a
/// uniform random draw. Types missing from `slots` get no slots.
pub fn clear_auction(
    round_time: SimTime,
    bids: &[Bid],
    slots: &BTreeMap<TypeIndex, u32>,
    rng: &mut RngStream,
) -> Result<AuctionOutcome, AuctionError> {
    let mut by_type: BTreeMap<TypeIndex, Vec<&Bid>> = BTreeMap::new();
    for bid in bids {
        if !(bid.price >= 0.0 && bid.price.is_finite()) {
            return Err(AuctionError::InvalidPrice(bid.bidder));
        }
        let group = by_type.entry(bid.service_type).or_default();
        if group.iter().any(|b| b.bidder == bid.bidder) {
            return Err(AuctionError::DuplicateBid {
                bidder: bid.bidder,
                service_type: bid.service_type,
            });
        }
        group.push(bid);
    }

    let mut per_type = BTreeMap::new();
    for (k, mut group) in by_type {
        let n = slots.get(&k).copied().unwrap_or(0);
        group.sort_by(|a, b| b.price.total_cmp(&a.price));
        let nu = n as usize;
        let (winners, payment) = if group.len() <= nu {
            (group.iter().map(|b| b.bidder).collect(), 0.0)
        } else if nu == 0 {
            (Vec::new(), group[0].price)
        } else {
            let boundary = group[nu - 1].price;
            let mut winners: Vec<BidderId> = group
                .iter()
                .take_while(|b| b.price > boundary)
                .map(|b| b.bidder)
                .collect();
            let mut tied: Vec<BidderId> = group
                .iter()
                .filter(|b| b.price == boundary)
                .map(|b| b.bidder)
                .collect();
            tied.shuffle(rng);
            let room = nu - winners.len();
            winners.extend(tied.into_iter().take(room));
            (winners, group[nu].price)
        };
        per_type.insert(
            k,
            TypeClearing {
                slots: n,
                winners,
                payment,
                bid_count: group.len(),
            },
        );
    }
    Ok(AuctionOutcome {
        round_time,
        per_type,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeFeedback {
    pub service_type: TypeIndex,
    pub won: bool,
    pub price: f64,
}

/// Everything a bidder learns from one round: its own outcomes with the
/// type's payment, and the system utilization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackSignal {
    pub outcomes: Vec<TypeFeedback>,
    pub utilization: f64,
}

/// Feedback for `bidder` given the bids it placed this round. `roster_size`
/// is the number of registered bidders.
pub fn feedback_for(
    outcome: &AuctionOutcome,
    bidder: BidderId,
    roster_size: usize,
    own_bid_types: &[TypeIndex],
    utilization: f64,
) -> Result<FeedbackSignal, AuctionError> {
    if bidder >= roster_size {
        return Err(AuctionError::UnknownBidder(bidder));
    }
    let outcomes = own_bid_types
        .iter()
        .map(|&k| TypeFeedback {
            service_type: k,
            won: outcome.won(bidder, k),
            price: outcome.payment(k).unwrap_or(0.0),
        })
        .collect();
    Ok(FeedbackSignal {
        outcomes,
        utilization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::derive_stream;

    fn bid(bidder: BidderId, k: TypeIndex, price: f64) -> Bid {
        Bid {
            request_id: bidder as u64,
            bidder,
            service_type: k,
            price,
            resource_estimate: 3.0,
            deadline: SimTime::from_ms(50),
            rebid_count: 0,
            created: SimTime::ZERO,
        }
    }

    fn clear(bids: &[Bid], n: u32) -> TypeClearing {
        let mut rng = derive_stream(1, "auction");
        let slots = BTreeMap::from([(0, n)]);
        clear_auction(SimTime::ZERO, bids, &slots, &mut rng).unwrap().per_type[&0].clone()
    }

    #[test]
    fn second_price_examples() {
        let bids = [bid(0, 0, 5.0), bid(1, 0, 3.0), bid(2, 0, 2.0)];
        let one = clear(&bids, 1);
        assert_eq!((one.winners, one.payment), (vec![0], 3.0));
        let two = clear(&bids, 2);
        assert_eq!((two.winners, two.payment), (vec![0, 1], 2.0));
        let three = clear(&bids[..2], 3);
        assert_eq!((three.winners, three.payment), (vec![0, 1], 0.0));
    }

    #[test]
    fn zero_slots_pay_highest_price() {
        let c = clear(&[bid(0, 0, 5.0), bid(1, 0, 3.0)], 0);
        assert!(c.winners.is_empty());
        assert_eq!(c.payment, 5.0);
    }

    #[test]
    fn boundary_ties_are_a_fair_draw() {
        let bids = [bid(0, 0, 4.0), bid(1, 0, 4.0)];
        let slots = BTreeMap::from([(0, 1)]);
        let mut a_wins = 0;
        for seed in 0..10_000 {
            let mut rng = derive_stream(seed, "auction");
            let out = clear_auction(SimTime::ZERO, &bids, &slots, &mut rng).unwrap();
            let c = &out.per_type[&0];
            assert_eq!(c.payment, 4.0);
            a_wins += usize::from(c.winners == [0]);
        }
        let frac = a_wins as f64 / 10_000.0;
        assert!((frac - 0.5).abs() < 0.03, "{frac}");
    }

    #[test]
    fn duplicate_bid_rejected() {
        let mut rng = derive_stream(1, "auction");
        let err = clear_auction(
            SimTime::ZERO,
            &[bid(0, 0, 1.0), bid(0, 0, 2.0)],
            &BTreeMap::new(),
            &mut rng,
        )
        .unwrap_err();
        assert_eq!(err, AuctionError::DuplicateBid { bidder: 0, service_type: 0 });
    }

    #[test]
    fn feedback_examples() {
        let bids = [bid(0, 0, 5.0), bid(1, 0, 3.0)];
        let mut rng = derive_stream(1, "auction");
        let out = clear_auction(SimTime::ZERO, &bids, &BTreeMap::from([(0, 1)]), &mut rng).unwrap();
        let w = feedback_for(&out, 0, 3, &[0], 0.4).unwrap();
        assert_eq!(w.outcomes, vec![TypeFeedback { service_type: 0, won: true, price: 3.0 }]);
        let l = feedback_for(&out, 1, 3, &[0], 0.4).unwrap();
        assert_eq!(l.outcomes, vec![TypeFeedback { service_type: 0, won: false, price: 3.0 }]);
        let idle = feedback_for(&out, 2, 3, &[], 0.4).unwrap();
        assert!(idle.outcomes.is_empty());
        assert_eq!(idle.utilization, 0.4);
        assert_eq!(feedback_for(&out, 3, 3, &[], 0.4), Err(AuctionError::UnknownBidder(3)));
    }
}
