//! Day-ahead energy and reserve scheduling on a DC network with deployment
//! scenarios for reserve deliverability.
//!
//! The crate is organised bottom-up:
//!
//! * [`lp`]: row-form linear programs and a dense revised simplex.
//! * [`grid`]: buses, lines, generators and the PTDF matrix.
//! * [`forecast`]: forecast-error scenarios, reserve requirements and the
//!   box-and-slab uncertainty set.
//! * [`scheduling`]: the day-ahead, master and real-time dispatch problems.
//! * [`robust`]: extreme and column-and-constraint generated deployment
//!   scenarios, the alternating-direction adversary and vertex enumeration.
//! * [`evalsim`]: out-of-sample Monte-Carlo evaluation of the methods.

pub mod evalsim;
pub mod forecast;
pub mod grid;
pub mod lp;
pub mod robust;
pub mod scheduling;

#[cfg(test)]
mod testutil;
