#![allow(dead_code)]

pub mod filters;
pub mod golden;
pub mod oracles;
pub mod replay;
pub mod scripted;
