pub mod contribution;
pub mod convert;
pub mod crop;
pub mod eval;
pub mod exam;
pub mod features;
pub mod sanity;
pub mod similarity;
pub mod stats;
pub mod validate;
pub mod viz;
