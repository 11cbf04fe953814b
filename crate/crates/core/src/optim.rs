//! Derivative-free local minimization.

/// Result of a Nelder–Mead run.
#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Nelder–Mead simplex search from `x0` with initial edge lengths `step`.
/// Stops when the spread of simplex values drops below
/// `tol·|f_best| + 1e-300` or after `max_evals` evaluations.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: &[f64], tol: f64, max_evals: usize) -> Minimum {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step[i];
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
    let mut evals = n + 1;
    let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect() };
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        let (best, worst) = (values[0], values[n]);
        let size = (1..=n)
            .map(|i| simplex[i].iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if worst - best <= tol * best.abs() + 1e-300 || evals >= max_evals || size < 1e-14 {
            return Minimum { x: simplex[0].clone(), value: best, evaluations: evals };
        }
        let mut centroid = vec![0.0; n];
        for x in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let reflected = combine(&centroid, &simplex[n], -1.0);
        let fr = f(&reflected);
        evals += 1;
        if fr < values[0] {
            let expanded = combine(&centroid, &simplex[n], -2.0);
            let fe = f(&expanded);
            evals += 1;
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
        } else {
            let (target, ft) = if fr < values[n] { (reflected, fr) } else { (simplex[n].clone(), values[n]) };
            let contracted = combine(&centroid, &target, 0.5);
            let fc = f(&contracted);
            evals += 1;
            if fc < ft {
                simplex[n] = contracted;
                values[n] = fc;
            } else {
                for i in 1..=n {
                    simplex[i] = combine(&simplex[0], &simplex[i], 0.5);
                    values[i] = f(&simplex[i]);
                }
                evals += n;
            }
        }
    }
}
