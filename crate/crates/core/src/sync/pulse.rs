use crate::matlib::{Mat, C64};

/// Fixed RK4 step count across the pulse.
pub const PULSE_STEPS: usize = 1000;

/// Integrates `y' = p_ε(t) M y` across `[-ε, ε]`, where `p_ε = 1/(2ε)` on
/// that interval, starting from `y0`, and returns `y(ε)`.
///
/// Reference for the jump map: as the pulse narrows the result stays at
/// `e^M y0`, which is what a Dirac impulse `δ(t) M y` does to the state.
pub fn dirac_pulse_oracle(m: &Mat, eps: f64, y0: &Mat) -> Mat {
    assert!(eps > 0.0, "pulse half-width must be positive");
    assert!(m.is_square() && y0.rows() == m.rows() && y0.cols() == 1);
    let h = 2.0 * eps / PULSE_STEPS as f64;
    let height = 1.0 / (2.0 * eps);
    let rhs = |y: &Mat| (m * y).scale_real(height);
    let mut y = y0.clone();
    for _ in 0..PULSE_STEPS {
        let k1 = rhs(&y);
        let k2 = rhs(&(&y + &k1.scale_real(h / 2.0)));
        let k3 = rhs(&(&y + &k2.scale_real(h / 2.0)));
        let k4 = rhs(&(&y + &k3.scale_real(h)));
        let incr = &(&(&k1 + &k2.scale_real(2.0)) + &k3.scale_real(2.0)) + &k4;
        y = &y + &incr.scale(C64::new(h / 6.0, 0.0));
    }
    y
}
