pub mod automaton;
pub mod bisim;
pub mod compose;
pub mod format;
pub mod geometry;
pub mod language;
pub mod models;
pub mod polar;
pub mod project;
pub mod random;
pub mod sim;
pub mod synthesis;
