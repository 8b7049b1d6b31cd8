pub mod matlib;
pub mod model;
pub mod lyapriccati;
pub mod cases;
pub mod lmi;
pub mod gcsc;
pub mod pareto;
pub mod sim;
