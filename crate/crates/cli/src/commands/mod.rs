pub mod cubic;
pub mod lista;
pub mod linear;
pub mod memcheck;
pub mod ode;
pub mod rings;
