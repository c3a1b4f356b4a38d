//! Derivative-free Nelder–Mead simplex descent.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop once `f_worst - f_best <= ftol * max(|f_best|, |f_worst|)`.
    pub ftol: f64,
    /// Or once every vertex lies within `xtol` (max-norm) of the best one.
    pub xtol: f64,
    pub initial_step: f64,
    /// Rebuild the simplex around the best vertex until a run stops improving.
    pub max_rebuilds: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            ftol: 1e-10,
            xtol: 1e-10,
            initial_step: 0.25,
            max_rebuilds: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ALPHA: f64 = 1.0;
const GAMMA: f64 = 2.0;
const RHO: f64 = 0.5;
const SIGMA: f64 = 0.5;

/// Minimizes `f` from `x0`. Non-finite objective values are treated as `+inf`.
///
/// The termination tests only compare objective values with each other, so a
/// run on `c * f` for a power-of-two `c` follows exactly the same path.
pub fn nelder_mead(f: &impl Fn(&[f64]) -> f64, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult {
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut best_x = x0.to_vec();
    let mut best_v = eval(x0);
    let mut used = 0;
    let mut converged = false;

    for _ in 0..=opts.max_rebuilds {
        if used >= opts.max_iterations {
            break;
        }
        let step = if used == 0 {
            opts.initial_step
        } else {
            // polishing restarts use a smaller simplex
            opts.initial_step * 0.1
        };
        let run = single_run(&eval, &best_x, best_v, step, opts, opts.max_iterations - used);
        used += run.iterations;
        converged = run.converged;
        let improved = run.value < best_v
            && (best_v.is_infinite() || best_v - run.value > opts.ftol * best_v.abs());
        if run.value <= best_v {
            best_x = run.x;
            best_v = run.value;
        }
        if !improved || !run.converged {
            break;
        }
    }
    NelderMeadResult {
        x: best_x,
        value: best_v,
        iterations: used,
        converged,
    }
}

fn single_run(
    eval: &impl Fn(&[f64]) -> f64,
    x0: &[f64],
    f0: f64,
    step: f64,
    opts: &NelderMeadOptions,
    budget: usize,
) -> NelderMeadResult {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut values: Vec<f64> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    values.push(f0);
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if v[i].abs() > 1.0 { step * v[i].abs() } else { step };
        values.push(eval(&v));
        simplex.push(v);
    }

    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < budget {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let best = order[0];
        let worst = order[n];
        let second = order[n - 1];

        let spread = values[worst] - values[best];
        let scale = values[worst].abs().max(values[best].abs());
        let f_done = spread <= opts.ftol * scale;
        let size = simplex
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[best]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if f_done || size <= opts.xtol {
            converged = true;
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= n as f64);

        let along = |out: &mut Vec<f64>, coef: f64, from: &[f64]| {
            for ((o, c), w) in out.iter_mut().zip(&centroid).zip(from) {
                *o = c + coef * (c - w);
            }
        };

        along(&mut trial, ALPHA, &simplex[worst]);
        let fr = eval(&trial);
        if fr < values[best] {
            along(&mut trial2, GAMMA, &simplex[worst]);
            let fe = eval(&trial2);
            if fe < fr {
                simplex[worst].copy_from_slice(&trial2);
                values[worst] = fe;
            } else {
                simplex[worst].copy_from_slice(&trial);
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second] {
            simplex[worst].copy_from_slice(&trial);
            values[worst] = fr;
            continue;
        }
        if fr < values[worst] {
            // outside contraction
            along(&mut trial2, RHO, &simplex[worst]);
            let fc = eval(&trial2);
            if fc <= fr {
                simplex[worst].copy_from_slice(&trial2);
                values[worst] = fc;
                continue;
            }
        } else {
            // inside contraction
            along(&mut trial2, -RHO, &simplex[worst]);
            let fc = eval(&trial2);
            if fc < values[worst] {
                simplex[worst].copy_from_slice(&trial2);
                values[worst] = fc;
                continue;
            }
        }
        // shrink toward the best vertex
        let anchor = simplex[best].clone();
        for i in 0..=n {
            if i == best {
                continue;
            }
            for (x, a) in simplex[i].iter_mut().zip(&anchor) {
                *x = a + SIGMA * (*x - a);
            }
            values[i] = eval(&simplex[i]);
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)))
        .unwrap();
    NelderMeadResult {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let target = [0.3, -1.2, 2.5, 0.0];
        let f = |x: &[f64]| x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let r = nelder_mead(&f, &[1.0, 1.0, 0.0, 0.0], &NelderMeadOptions::default());
        assert!(r.converged);
        for (a, b) in r.x.iter().zip(&target) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(&f, &[-1.2, 1.0], &NelderMeadOptions::default());
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r);
    }

    #[test]
    fn scale_invariant_path() {
        let f = |x: &[f64]| (x[0] - 0.4).powi(2) + 3.0 * (x[1] + 0.1).powi(4) + x[0] * x[1];
        let g = |x: &[f64]| 4.0 * f(x);
        let opts = NelderMeadOptions::default();
        let a = nelder_mead(&f, &[1.0, 1.0], &opts);
        let b = nelder_mead(&g, &[1.0, 1.0], &opts);
        assert_eq!(a.x, b.x);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn iteration_cap_reports_no_convergence() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let opts = NelderMeadOptions {
            max_iterations: 3,
            ..Default::default()
        };
        let r = nelder_mead(&f, &[5.0; 6], &opts);
        assert!(!r.converged);
        assert!(r.iterations <= 3);
    }

    #[test]
    fn nan_is_rejected() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 1.0).powi(2) };
        let r = nelder_mead(&f, &[0.5], &NelderMeadOptions::default());
        assert!((r.x[0] - 1.0).abs() < 1e-5);
    }
}
