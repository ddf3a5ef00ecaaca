//! Box-constrained Nelder-Mead simplex minimisation.
//!
//! Trial points are clamped into the box, so the objective is only ever
//! evaluated at feasible parameters.

/// Tuning knobs for [`minimize_bounded`].
#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    /// Budget of objective evaluations, shared by the restart.
    pub max_evals: usize,
    /// Initial simplex edge per coordinate. Empty means 10% of the box width.
    pub initial_step: Vec<f64>,
    /// Convergence on simplex size, relative to the initial step.
    pub x_tol: f64,
    /// Convergence on the spread of objective values (absolute + relative).
    pub f_tol: f64,
    /// Restart once from a fresh simplex around the best point.
    pub restart: bool,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 2000,
            initial_step: Vec::new(),
            x_tol: 1e-6,
            f_tol: 1e-10,
            restart: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    /// False when the evaluation budget ran out before the tolerances were met.
    pub converged: bool,
}

fn clamp_into(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

/// Minimises `f` over the box `[lo, hi]` starting from `x0`.
pub fn minimize_bounded<F>(mut f: F, x0: &[f64], lo: &[f64], hi: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert!(lo.len() == n && hi.len() == n, "bounds must match x0");
    assert!(lo.iter().zip(hi).all(|(l, h)| l <= h), "lower bound above upper bound");
    let steps: Vec<f64> = if opts.initial_step.len() == n {
        opts.initial_step.clone()
    } else {
        lo.iter().zip(hi).map(|(l, h)| 0.1 * (h - l)).collect()
    };
    let mut start = x0.to_vec();
    clamp_into(&mut start, lo, hi);

    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut best = run(&mut eval, &mut evals, &start, lo, hi, &steps, opts);
    if opts.restart && evals < opts.max_evals {
        let again = run(&mut eval, &mut evals, &best.0, lo, hi, &steps, opts);
        if again.1 < best.1 {
            best = again;
        } else {
            best.2 = best.2 && again.2;
        }
    }
    Minimum {
        x: best.0,
        value: best.1,
        evals,
        converged: best.2,
    }
}

fn run<E>(
    eval: &mut E,
    evals: &mut usize,
    start: &[f64],
    lo: &[f64],
    hi: &[f64],
    steps: &[f64],
    opts: &NelderMeadOptions,
) -> (Vec<f64>, f64, bool)
where
    E: FnMut(&[f64], &mut usize) -> f64,
{
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for k in 0..n {
        let mut p = start.to_vec();
        let s = if steps[k] > 0.0 { steps[k] } else { 1e-3 };
        p[k] += s;
        if p[k] > hi[k] {
            p[k] = start[k] - s;
        }
        clamp_into(&mut p, lo, hi);
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| eval(p, evals)).collect();

    let scale: Vec<f64> = steps.iter().map(|s| s.abs().max(1e-300)).collect();
    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let f_spread = values[n] - values[0];
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&simplex[0]).zip(&scale).map(|((a, b), s)| (a - b).abs() / s))
            .fold(0.0, f64::max);
        if (f_spread <= opts.f_tol * (1.0 + values[0].abs()) && x_spread <= opts.x_tol.sqrt())
            || x_spread <= opts.x_tol
        {
            converged = true;
            break;
        }
        if *evals + 2 > opts.max_evals {
            break;
        }

        let mut centroid = vec![0.0; n];
        for p in &simplex[..n] {
            for k in 0..n {
                centroid[k] += p[k] / n as f64;
            }
        }
        let along = |t: f64| {
            let mut p: Vec<f64> = (0..n).map(|k| centroid[k] + t * (simplex[n][k] - centroid[k])).collect();
            clamp_into(&mut p, lo, hi);
            p
        };

        let xr = along(-1.0);
        let fr = eval(&xr, evals);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = eval(&xe, evals);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(-0.5);
            let fc = eval(&xc, evals);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = eval(&xc, evals);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        // shrink towards the best vertex
        let best = simplex[0].clone();
        for i in 1..=n {
            for (v, b) in simplex[i].iter_mut().zip(&best) {
                *v = b + 0.5 * (*v - b);
            }
            values[i] = eval(&simplex[i], evals);
        }
    }
    let i = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    (simplex[i].clone(), values[i], converged)
}
