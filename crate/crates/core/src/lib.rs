pub mod cli;
pub mod exact;
pub mod iet;
pub mod induction;
pub mod log_puiseux;
pub mod numerics;
pub mod ode;
pub mod orbit;
pub mod quad;
pub mod roof;
pub mod saddle;
pub mod weakmix;
