pub mod ackley;
pub mod common;
pub mod escape;
pub mod fetch;
pub mod sample;
pub mod schedules;
pub mod theory;
pub mod train;
