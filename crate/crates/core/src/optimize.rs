//! Derivative-free Nelder–Mead simplex minimizer with deterministic restarts.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop when the simplex spread in objective value drops below
    /// `f_abs + f_rel·|f_best|` and its diameter below `x_tol`.
    pub f_abs: f64,
    pub f_rel: f64,
    pub x_tol: f64,
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iter: 4000,
            f_abs: 1e-20,
            f_rel: 1e-14,
            x_tol: 1e-10,
            initial_step: 0.25,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0` with the standard reflection/expansion/contraction/
/// shrink moves (coefficients 1, 2, ½, ½). Non-finite values count as +∞.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let dim = x0.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut p = x0.to_vec();
        p[i] += opts.initial_step;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| eval(p)).collect();

    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let best = values[0];
        let worst = values[dim];
        let spread = worst - best;
        let diameter = simplex[1..]
            .iter()
            .map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread.is_finite() && spread <= opts.f_abs + opts.f_rel * best.abs() && diameter <= opts.x_tol {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|p| p[j]).sum::<f64>() / dim as f64)
            .collect();
        let toward = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = toward(1.0);
        let f_r = eval(&reflected);
        if f_r < values[0] {
            let expanded = toward(2.0);
            let f_e = eval(&expanded);
            if f_e < f_r {
                simplex[dim] = expanded;
                values[dim] = f_e;
            } else {
                simplex[dim] = reflected;
                values[dim] = f_r;
            }
            continue;
        }
        if f_r < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = f_r;
            continue;
        }
        let (candidate, f_c) = if f_r < values[dim] {
            let c = toward(0.5);
            let v = eval(&c);
            (c, v)
        } else {
            let c = toward(-0.5);
            let v = eval(&c);
            (c, v)
        };
        if f_c < values[dim].min(f_r) {
            simplex[dim] = candidate;
            values[dim] = f_c;
            continue;
        }
        // shrink toward the best vertex
        for i in 1..=dim {
            let p: Vec<f64> = simplex[i]
                .iter()
                .zip(&simplex[0])
                .map(|(x, b)| b + 0.5 * (x - b))
                .collect();
            values[i] = eval(&p);
            simplex[i] = p;
        }
    }
    let best = (0..=dim)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("nonempty simplex");
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

/// Runs [`nelder_mead`] from `x0`, then restarts from each of `restarts`
/// deterministic perturbations of the incumbent, keeping the best result.
pub fn minimize_with_restarts<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    restarts: usize,
    opts: &NelderMeadOptions,
) -> Minimum {
    let mut best = nelder_mead(&mut f, x0, opts);
    for r in 0..restarts {
        // alternate-sign offsets of shrinking size around the incumbent
        let scale = 0.5 / (1.0 + r as f64);
        let start: Vec<f64> = best
            .x
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let sign = if (j + r) % 2 == 0 { 1.0 } else { -1.0 };
                v + sign * scale
            })
            .collect();
        let run = nelder_mead(&mut f, &start, opts);
        let better = run.value < best.value;
        let converged = best.converged || run.converged;
        if better {
            best = run;
        }
        best.converged = converged;
    }
    best
}
