pub mod bench;
pub mod estimate;
pub mod generate;
pub mod recover;
pub mod reproduce;
