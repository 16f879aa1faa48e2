pub mod quadrature;
pub mod bernstein;
pub mod transcription;
pub mod problems;
pub mod assessment;
