//! Gyration stability of the projective planes `CP2`, `HP2` and `OP2`.
//!
//! The question whether two twistings give homotopy equivalent gyrations is
//! reduced to exact arithmetic in homotopy groups of spheres:
//!
//! * [`abelian`]: finitely generated abelian groups, subgroups and orbit
//!   partitions;
//! * [`expr`]: symbolic composites, suspensions and Whitehead products;
//! * [`reldb`]: the text format and validator for groups, relations,
//!   parameters and cases, plus the shipped dataset;
//! * [`normalize`]: rewriting expressions to coordinates using the database;
//! * [`gyration`]: attaching maps, the equivalence criterion, and
//!   classification;
//! * [`cli`]: the command-line front end.

pub mod abelian;
pub mod cli;
pub mod expr;
pub mod gyration;
pub mod normalize;
pub mod reldb;
