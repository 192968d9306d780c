pub mod ff;
pub mod laurent;
pub mod group;
pub mod tree;
pub mod linalg;
pub mod meataxe;
pub mod rep;
pub mod hecke;
pub mod free;
pub mod oracle;
