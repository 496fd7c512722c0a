pub mod closures;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod fft;
pub mod filtering;
pub mod grid;
pub mod group;
pub mod io;
pub mod par;
pub mod pipeline;
pub mod projection;
pub mod simulation;
pub mod spectral;
pub mod tensor3;
pub mod tensor_basis;
