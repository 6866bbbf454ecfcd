//! Fixed-step classical Runge-Kutta for linear systems on flat vectors.

/// Scratch buffers for [`Rk4::step`], sized once per system.
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(len: usize) -> Self {
        Rk4 {
            k1: vec![0.0; len],
            k2: vec![0.0; len],
            k3: vec![0.0; len],
            k4: vec![0.0; len],
            tmp: vec![0.0; len],
        }
    }

    /// Advances `y` by one step of size `h` for the autonomous system
    /// `y' = rhs(y)`. `rhs` writes the derivative into its second argument.
    pub fn step<F>(&mut self, y: &mut [f64], h: f64, mut rhs: F)
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let n = y.len();
        debug_assert_eq!(n, self.k1.len());
        rhs(y, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k1[i];
        }
        rhs(&self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k2[i];
        }
        rhs(&self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = y[i] + h * self.k3[i];
        }
        rhs(&self.tmp, &mut self.k4);
        for i in 0..n {
            y[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Splits `[0, t]` into the smallest number of equal steps not exceeding
/// `max_step`. Returns `(steps, h)`; `t == 0` yields zero steps.
pub fn uniform_steps(t: f64, max_step: f64) -> (usize, f64) {
    if t <= 0.0 {
        return (0, 0.0);
    }
    let steps = (t / max_step - 1e-9).ceil().max(1.0) as usize;
    (steps, t / steps as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_fourth_order() {
        let solve = |h: f64| {
            let (steps, h) = uniform_steps(1.0, h);
            let mut y = vec![1.0];
            let mut rk = Rk4::new(1);
            for _ in 0..steps {
                rk.step(&mut y, h, |u, du| du[0] = -u[0]);
            }
            (y[0] - (-1.0f64).exp()).abs()
        };
        let ratio = solve(0.1) / solve(0.05);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn steps_cover_interval() {
        assert_eq!(uniform_steps(1.0, 0.25), (4, 0.25));
        assert_eq!(uniform_steps(0.0, 0.1), (0, 0.0));
        let (n, h) = uniform_steps(1.0, 0.3);
        assert_eq!(n, 4);
        assert!((h * n as f64 - 1.0).abs() < 1e-15);
    }
}
