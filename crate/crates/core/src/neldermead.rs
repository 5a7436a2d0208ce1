//! Small Nelder-Mead simplex minimizer with optional box clamping.

/// Per-coordinate `[lo, hi]` bounds.
pub type Bounds<const N: usize> = [(f64, f64); N];

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Convergence threshold on the spread of function values and on the simplex diameter.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            tol: 1e-9,
            max_iters: 400,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexResult<const N: usize> {
    pub x: [f64; N],
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

fn clamp<const N: usize>(mut x: [f64; N], bounds: Option<&Bounds<N>>) -> [f64; N] {
    if let Some(b) = bounds {
        for (xi, (lo, hi)) in x.iter_mut().zip(b.iter()) {
            *xi = xi.clamp(*lo, *hi);
        }
    }
    x
}

fn affine<const N: usize>(base: &[f64; N], dir: &[f64; N], t: f64) -> [f64; N] {
    let mut out = *base;
    for i in 0..N {
        out[i] = base[i] + t * (dir[i] - base[i]);
    }
    out
}

/// Minimizes `f` from `x0`. Trial points are clamped into `bounds` when given.
pub fn minimize<const N: usize, F>(
    mut f: F,
    x0: [f64; N],
    bounds: Option<&Bounds<N>>,
    opts: &SimplexOptions,
) -> SimplexResult<N>
where
    F: FnMut(&[f64; N]) -> f64,
{
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64; N]| {
        evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let x0 = clamp(x0, bounds);
    let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    simplex.push((x0, eval(&x0)));
    for i in 0..N {
        let mut x = x0;
        let mut step = opts.initial_step;
        if let Some(b) = bounds {
            // step inward when the forward vertex would leave the box
            if x[i] + step > b[i].1 {
                step = -step;
            }
        }
        x[i] += step;
        let x = clamp(x, bounds);
        simplex.push((x, eval(&x)));
    }

    let mut iterations = 0;
    while iterations < opts.max_iters {
        simplex.sort_by(|p, q| p.1.total_cmp(&q.1));
        let best = simplex[0].1;
        let worst = simplex[N].1;
        let spread = if worst.is_finite() {
            worst - best
        } else {
            f64::INFINITY
        };
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(simplex[0].0.iter())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= opts.tol && diameter <= opts.tol.sqrt() {
            break;
        }
        if diameter <= 1e-14 {
            break;
        }
        iterations += 1;

        let mut centroid = [0.0; N];
        for (x, _) in &simplex[..N] {
            for i in 0..N {
                centroid[i] += x[i] / N as f64;
            }
        }
        let worst_x = simplex[N].0;

        let reflected = clamp(affine(&centroid, &worst_x, -1.0), bounds);
        let fr = eval(&reflected);
        if fr < simplex[0].1 {
            let expanded = clamp(affine(&centroid, &worst_x, -2.0), bounds);
            let fe = eval(&expanded);
            simplex[N] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
            continue;
        }
        if fr < simplex[N - 1].1 {
            simplex[N] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < simplex[N].1 {
            let c = clamp(affine(&centroid, &reflected, 0.5), bounds);
            (c, eval(&c))
        } else {
            let c = clamp(affine(&centroid, &worst_x, 0.5), bounds);
            (c, eval(&c))
        };
        if fc < simplex[N].1.min(fr) {
            simplex[N] = (contracted, fc);
            continue;
        }
        let best_x = simplex[0].0;
        for vertex in simplex.iter_mut().skip(1) {
            let x = clamp(affine(&best_x, &vertex.0, 0.5), bounds);
            *vertex = (x, eval(&x));
        }
    }

    simplex.sort_by(|p, q| p.1.total_cmp(&q.1));
    SimplexResult {
        x: simplex[0].0,
        value: simplex[0].1,
        iterations,
        evaluations,
    }
}
