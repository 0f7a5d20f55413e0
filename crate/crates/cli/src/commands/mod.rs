pub mod binarize;
pub mod evaluate;
pub mod pair;
pub mod synth;

mod run;
