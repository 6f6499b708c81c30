//! Nilpotent singular points, center conditions and crossing limit cycles
//! for Z2-equivariant piecewise-smooth cubic systems.

pub mod bifurc;
pub mod bigfloat;
pub mod centers;
pub mod exactalg;
pub mod lyapunov;
pub mod nilclass;
pub mod portrait;
pub mod sysmodel;
