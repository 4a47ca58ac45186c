pub mod chain;
pub mod imh;
pub mod pm;
pub mod rate;
pub mod verify;
