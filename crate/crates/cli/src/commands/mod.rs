pub mod augment;
pub mod eval;
pub mod synth;
pub mod track;
