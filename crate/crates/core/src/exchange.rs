//! Per-step resource exchange: requests, bids and allocation.
//!
//! Every step the kernel collects requests from facilities that need
//! material and bids from facilities that hold it, then asks an
//! [`Allocator`] which transfers happen. The exchange keeps no state
//! between steps.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::material::Mass;

pub type FacilityId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Commodity {
    FreshLwrFuel,
    FreshSfrFuel,
    SpentLwrFuel,
    SpentSfrFuel,
    SeparatedFissile,
    SeparatedUranium,
    Waste,
    #[serde(rename = "DU")]
    DepletedUranium,
}

impl Commodity {
    pub fn name(self) -> &'static str {
        match self {
            Commodity::FreshLwrFuel => "fresh-lwr-fuel",
            Commodity::FreshSfrFuel => "fresh-sfr-fuel",
            Commodity::SpentLwrFuel => "spent-lwr-fuel",
            Commodity::SpentSfrFuel => "spent-sfr-fuel",
            Commodity::SeparatedFissile => "separated-fissile",
            Commodity::SeparatedUranium => "separated-uranium",
            Commodity::Waste => "waste",
            Commodity::DepletedUranium => "DU",
        }
    }
}

impl fmt::Display for Commodity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ExchangeError {
    #[error("request quantity must be positive")]
    EmptyRequest,
    #[error("lot size must be positive")]
    EmptyLot,
    #[error("bid {bid} references unknown request {request}")]
    UnknownRequest { bid: usize, request: usize },
    #[error("lots needed must be at least 1, got {0}")]
    NoLotsNeeded(u32),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Request {
    pub requester: FacilityId,
    pub commodity: Commodity,
    pub quantity: Mass,
    /// Whether any amount may be delivered; otherwise only multiples of
    /// `lot_size`.
    pub divisible: bool,
    pub lot_size: Mass,
    pub preference: f64,
}

impl Request {
    /// A request that can be filled by any amount up to `quantity`.
    pub fn divisible(requester: FacilityId, commodity: Commodity, quantity: Mass) -> Result<Self, ExchangeError> {
        if quantity.is_zero() {
            return Err(ExchangeError::EmptyRequest);
        }
        Ok(Self { requester, commodity, quantity, divisible: true, lot_size: quantity, preference: 1.0 })
    }

    /// A request for `lots` lots of `lot_size`, fillable in whole lots.
    pub fn lots(requester: FacilityId, commodity: Commodity, lot_size: Mass, lots: u32) -> Result<Self, ExchangeError> {
        if lot_size.is_zero() {
            return Err(ExchangeError::EmptyLot);
        }
        if lots == 0 {
            return Err(ExchangeError::EmptyRequest);
        }
        Ok(Self {
            requester,
            commodity,
            quantity: lot_size.times(u64::from(lots)),
            divisible: false,
            lot_size,
            preference: 1.0,
        })
    }

    pub fn with_preference(mut self, preference: f64) -> Self {
        self.preference = preference;
        self
    }
}

/// An offer against one request. `request` indexes the request list
/// passed to the allocator.
#[derive(Clone, Debug, PartialEq)]
pub struct Bid {
    pub supplier: FacilityId,
    pub request: usize,
    pub available: Mass,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation {
    pub supplier: FacilityId,
    pub requester: FacilityId,
    pub request: usize,
    pub commodity: Commodity,
    pub mass: Mass,
}

/// Resolves one step's requests and bids into transfers.
pub trait Allocator {
    fn resolve(
        &self,
        requests: &[Request],
        bids: &[Bid],
        supplier_caps: &BTreeMap<FacilityId, Mass>,
    ) -> Result<Vec<Allocation>, ExchangeError>;
}

/// Serves requests one at a time in descending preference order,
/// filling each from its bids as far as supply allows.
///
/// Ties break by requester id, then by submission order.
#[derive(Clone, Copy, Debug, Default)]
pub struct GreedyAllocator;

impl Allocator for GreedyAllocator {
    fn resolve(
        &self,
        requests: &[Request],
        bids: &[Bid],
        supplier_caps: &BTreeMap<FacilityId, Mass>,
    ) -> Result<Vec<Allocation>, ExchangeError> {
        let mut bids_for: Vec<Vec<usize>> = vec![Vec::new(); requests.len()];
        for (i, bid) in bids.iter().enumerate() {
            bids_for
                .get_mut(bid.request)
                .ok_or(ExchangeError::UnknownRequest { bid: i, request: bid.request })?
                .push(i);
        }

        let mut order: Vec<usize> = (0..requests.len()).collect();
        order.sort_by(|&a, &b| service_order(&requests[a], a, &requests[b], b));

        let mut cap_left = supplier_caps.clone();
        let mut allocations = Vec::new();
        for idx in order {
            let req = &requests[idx];
            let mut remaining = req.quantity;
            for &b in &bids_for[idx] {
                if remaining.is_zero() {
                    break;
                }
                let bid = &bids[b];
                let cap = cap_left.get(&bid.supplier).copied().unwrap_or(Mass::MAX);
                let mut amount = remaining.min(bid.available).min(cap);
                if !req.divisible {
                    amount = amount.floor_to(req.lot_size);
                }
                if amount.is_zero() {
                    continue;
                }
                remaining = remaining.saturating_sub(amount);
                if let Some(c) = cap_left.get_mut(&bid.supplier) {
                    *c = c.saturating_sub(amount);
                }
                allocations.push(Allocation {
                    supplier: bid.supplier,
                    requester: req.requester,
                    request: idx,
                    commodity: req.commodity,
                    mass: amount,
                });
            }
        }
        Ok(allocations)
    }
}

fn service_order(a: &Request, ai: usize, b: &Request, bi: usize) -> Ordering {
    b.preference
        .total_cmp(&a.preference)
        .then(a.requester.cmp(&b.requester))
        .then(ai.cmp(&bi))
}

/// Convenience wrapper around [`GreedyAllocator`].
pub fn resolve(
    requests: &[Request],
    bids: &[Bid],
    supplier_caps: &BTreeMap<FacilityId, Mass>,
) -> Result<Vec<Allocation>, ExchangeError> {
    GreedyAllocator.resolve(requests, bids, supplier_caps)
}

/// Request preference that favours requesters needing fewer lots to
/// reach a full core. Strictly decreasing in `lots_needed`.
pub fn fuel_sharing_preference(base_pref: f64, lots_needed: u32) -> Result<f64, ExchangeError> {
    if lots_needed < 1 {
        return Err(ExchangeError::NoLotsNeeded(lots_needed));
    }
    Ok(base_pref - f64::from(lots_needed - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kg(x: f64) -> Mass {
        Mass::from_kg(x)
    }

    fn caps(pairs: &[(FacilityId, f64)]) -> BTreeMap<FacilityId, Mass> {
        pairs.iter().map(|&(id, k)| (id, kg(k))).collect()
    }

    #[test]
    fn unconstrained_fill() {
        let reqs = vec![Request::divisible(1, Commodity::FreshLwrFuel, kg(10.0)).unwrap()];
        let bids = vec![Bid { supplier: 9, request: 0, available: kg(25.0) }];
        let out = resolve(&reqs, &bids, &caps(&[(9, 25.0)])).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].mass, kg(10.0));
        assert_eq!((out[0].supplier, out[0].requester), (9, 1));
    }

    #[test]
    fn no_bids_no_allocations() {
        let reqs = vec![Request::divisible(1, Commodity::FreshLwrFuel, kg(10.0)).unwrap()];
        assert!(resolve(&reqs, &[], &BTreeMap::new()).unwrap().is_empty());
    }

    #[test]
    fn preference_order_leaves_big_requester_short() {
        let lot = kg(8_025.0);
        let reqs = vec![
            Request::lots(1, Commodity::FreshSfrFuel, lot, 3).unwrap().with_preference(1.0),
            Request::lots(2, Commodity::FreshSfrFuel, lot, 1).unwrap().with_preference(2.0),
        ];
        let bids = vec![
            Bid { supplier: 7, request: 0, available: lot.times(2) },
            Bid { supplier: 7, request: 1, available: lot.times(2) },
        ];
        let out = resolve(&reqs, &bids, &caps(&[(7, 16_050.0)])).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!((out[0].requester, out[0].mass), (2, lot));
        assert_eq!((out[1].requester, out[1].mass), (1, lot));
    }

    #[test]
    fn ties_break_by_requester_then_submission() {
        let reqs = vec![
            Request::divisible(5, Commodity::DepletedUranium, kg(4.0)).unwrap(),
            Request::divisible(3, Commodity::DepletedUranium, kg(4.0)).unwrap(),
            Request::divisible(3, Commodity::DepletedUranium, kg(4.0)).unwrap(),
        ];
        let bids: Vec<Bid> = (0..3).map(|r| Bid { supplier: 0, request: r, available: kg(10.0) }).collect();
        let out = resolve(&reqs, &bids, &caps(&[(0, 10.0)])).unwrap();
        let got: Vec<(usize, Mass)> = out.iter().map(|a| (a.request, a.mass)).collect();
        assert_eq!(got, vec![(1, kg(4.0)), (2, kg(4.0)), (0, kg(2.0))]);
    }

    #[test]
    fn indivisible_requests_fill_in_lot_multiples() {
        let reqs = vec![Request::lots(1, Commodity::FreshSfrFuel, kg(3.0), 4).unwrap()];
        let bids = vec![Bid { supplier: 0, request: 0, available: kg(10.0) }];
        let out = resolve(&reqs, &bids, &BTreeMap::new()).unwrap();
        assert_eq!(out[0].mass, kg(9.0));
    }

    #[test]
    fn supplier_cap_is_shared_across_requests() {
        let reqs: Vec<Request> =
            (0..3).map(|r| Request::divisible(r, Commodity::SeparatedFissile, kg(5.0)).unwrap()).collect();
        let bids: Vec<Bid> = (0..3).map(|r| Bid { supplier: 9, request: r, available: kg(100.0) }).collect();
        let out = resolve(&reqs, &bids, &caps(&[(9, 12.0)])).unwrap();
        let total: Mass = out.iter().map(|a| a.mass).sum();
        assert_eq!(total, kg(12.0));
    }

    #[test]
    fn unknown_request_is_rejected() {
        let bids = vec![Bid { supplier: 0, request: 3, available: kg(1.0) }];
        assert_eq!(
            resolve(&[], &bids, &BTreeMap::new()),
            Err(ExchangeError::UnknownRequest { bid: 0, request: 3 })
        );
    }

    #[test]
    fn sharing_preference_ordering() {
        assert_eq!(fuel_sharing_preference(1.0, 1).unwrap(), 1.0);
        let p = |n| fuel_sharing_preference(1.0, n).unwrap();
        assert!(p(3) < p(2) && p(2) < p(1));
        assert_eq!(fuel_sharing_preference(1.0, 0), Err(ExchangeError::NoLotsNeeded(0)));
    }

    #[test]
    fn request_constructors_validate() {
        assert_eq!(Request::divisible(0, Commodity::Waste, Mass::ZERO), Err(ExchangeError::EmptyRequest));
        assert_eq!(Request::lots(0, Commodity::Waste, Mass::ZERO, 2), Err(ExchangeError::EmptyLot));
    }
}
