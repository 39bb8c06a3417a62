//! The two-oscillator LC network: `A` a unit rotation generator, `B = e_1`,
//! impulses every quarter period, two agents with unit mutual coupling.

use alloc::vec;

use crate::deadbeat::AgentSystem;
use crate::graph::CouplingGraph;
use crate::matlib::Mat;

pub const LC_PERIOD: f64 = core::f64::consts::FRAC_PI_2;

pub fn lc_system() -> AgentSystem {
    AgentSystem::new(
        Mat::from_rows(&[[0.0, -1.0], [1.0, 0.0]]),
        Mat::column(&[1.0, 0.0]),
        LC_PERIOD,
    )
    .expect("valid LC system")
}

pub fn lc_graph() -> CouplingGraph {
    CouplingGraph::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).expect("valid LC graph")
}
