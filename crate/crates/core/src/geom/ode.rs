//! Fixed-step classical Runge–Kutta (RK4).

use nalgebra::SVector;

/// Number of uniform steps covering `duration` with step at most `h`, and the
/// step actually used.
pub fn uniform_steps(duration: f64, h: f64) -> (usize, f64) {
    if duration == 0.0 {
        return (0, 0.0);
    }
    let n = (duration.abs() / h).ceil().max(1.0) as usize;
    (n, duration / n as f64)
}

/// One RK4 step of `y' = f(t, y)`.
pub fn rk4_step<const N: usize, F>(f: &mut F, t: f64, y: &SVector<f64, N>, h: f64) -> SVector<f64, N>
where
    F: FnMut(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &(y + k1 * (0.5 * h)));
    let k3 = f(t + 0.5 * h, &(y + k2 * (0.5 * h)));
    let k4 = f(t + h, &(y + k3 * h));
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Integrate from `t0` over `duration` (may be negative) and return the end state.
pub fn rk4_solve<const N: usize, F>(mut f: F, t0: f64, y0: SVector<f64, N>, duration: f64, h: f64) -> SVector<f64, N>
where
    F: FnMut(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    let (n, step) = uniform_steps(duration, h);
    let mut y = y0;
    for i in 0..n {
        y = rk4_step(&mut f, t0 + i as f64 * step, &y, step);
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;

    #[test]
    fn exponential_growth() {
        let y = rk4_solve(|_, y: &SVector<f64, 1>| *y, 0.0, SVector::<f64, 1>::new(1.0), 1.0, 0.01);
        assert!((y[0] - std::f64::consts::E).abs() < 1e-9);
    }

    #[test]
    fn fourth_order_on_harmonic_oscillator() {
        let f = |_: f64, y: &Vector2<f64>| Vector2::new(y[1], -y[0]);
        let err = |h: f64| {
            let y = rk4_solve(f, 0.0, Vector2::new(1.0, 0.0), 3.0, h);
            (y[0] - 3.0_f64.cos()).abs()
        };
        let ratio = (err(0.1) / err(0.05)).log2();
        assert!((ratio - 4.0).abs() < 0.3, "observed order {ratio}");
    }

    #[test]
    fn backward_integration_inverts_forward() {
        let f = |t: f64, y: &Vector2<f64>| Vector2::new(y[1] * t.cos(), -y[0]);
        let y1 = rk4_solve(f, 0.0, Vector2::new(0.3, -1.0), 2.0, 1e-3);
        let y0 = rk4_solve(f, 2.0, y1, -2.0, 1e-3);
        assert!((y0 - Vector2::new(0.3, -1.0)).amax() < 1e-10);
    }

    #[test]
    fn step_count() {
        assert_eq!(uniform_steps(1.0, 0.3), (4, 0.25));
        assert_eq!(uniform_steps(0.0, 0.1).0, 0);
        assert_eq!(uniform_steps(-1.0, 0.5), (2, -0.5));
    }
}
