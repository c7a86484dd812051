pub mod coreshell;
pub mod energy;
pub mod ewald;
pub mod experiment;
pub mod flow;
pub mod grid;
pub mod io;
pub mod lattice;
pub mod morphology;
pub mod sharp;
