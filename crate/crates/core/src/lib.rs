#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod collocation;
pub mod error;
pub mod experiments;
pub mod laguerre;
pub mod linalg;
pub mod mlf;
pub mod oracle;
pub mod petrov_galerkin;
pub mod quadrature;
pub mod special;
