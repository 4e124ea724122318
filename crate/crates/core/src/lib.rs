#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod calibration;
pub mod epidemic;
pub mod equity;
pub mod forecast;
pub mod harness;
pub mod lp;
pub mod optimizer;
pub mod oracle;
pub mod scenario;
