pub mod linprog;
pub mod geometry;
pub mod bounds;
pub mod neural;
pub mod envmodel;
pub mod refine;
pub mod imdp;
pub mod oracle;
pub mod config;
pub mod plot;
