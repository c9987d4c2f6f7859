//! Scalar minimization and root finding.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimum of `f` on `[lo, hi]` to abscissa tolerance `tol`.
/// Returns `(x, f(x))` at the best point visited.
pub fn golden_section<F, E>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64), E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

/// Bisection for a sign change of `g` on `[lo, hi]`; `g(lo)` and `g(hi)` must differ in sign.
pub fn bisect<F, E>(mut g: F, lo: f64, hi: f64, tol: f64) -> Result<Option<f64>, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let (mut a, mut b) = (lo, hi);
    let mut ga = g(a)?;
    let gb = g(b)?;
    if ga == 0.0 {
        return Ok(Some(a));
    }
    if gb == 0.0 {
        return Ok(Some(b));
    }
    if ga.signum() == gb.signum() {
        return Ok(None);
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol || m == a || m == b {
            break;
        }
        let gm = g(m)?;
        if gm == 0.0 {
            return Ok(Some(m));
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    Ok(Some(0.5 * (a + b)))
}

/// Indices of strict interior local minima of a sampled sequence.
pub fn local_minima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] < values[i - 1] && values[i] <= values[i + 1])
        .collect()
}

/// Outcome of [`lbfgs`].
#[derive(Clone, Debug)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value every 50 iterations.
    pub trace: Vec<f64>,
}

/// Limited-memory BFGS with Armijo backtracking.
///
/// `fg` returns the objective and its gradient; `norm` measures the gradient
/// for the stopping test `norm(g) <= tol`.
pub fn lbfgs<F, N>(fg: F, norm: N, x0: Vec<f64>, memory: usize, tol: f64, max_iter: usize) -> LbfgsResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
    N: Fn(&[f64]) -> f64,
{
    lbfgs_preconditioned(fg, norm, None::<fn(&[f64]) -> Vec<f64>>, x0, memory, tol, max_iter)
}

/// [`lbfgs`] with `precond` (an approximate inverse Hessian) as the initial
/// matrix of the two-loop recursion.
pub fn lbfgs_preconditioned<F, N, P>(
    mut fg: F,
    norm: N,
    precond: Option<P>,
    x0: Vec<f64>,
    memory: usize,
    tol: f64,
    max_iter: usize,
) -> LbfgsResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
    N: Fn(&[f64]) -> f64,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    let mut x = x0;
    let (mut f, mut g) = fg(&x);
    let mut s_hist: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)> = Default::default();
    let mut trace = vec![f];
    let mut gn = norm(&g);
    let mut it = 0;
    let mut stalled = 0;
    while it < max_iter && gn > tol {
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(s_hist.len());
        for (s, y, rho) in s_hist.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        match &precond {
            Some(p) => q = p(&q),
            None => {
                let gamma = s_hist
                    .back()
                    .map(|(s, y, _)| dot(s, y) / dot(y, y))
                    .unwrap_or_else(|| 1.0 / dot(&g, &g).sqrt().max(1e-300));
                q.iter_mut().for_each(|v| *v *= gamma);
            }
        }
        for ((s, y, rho), a) in s_hist.iter().zip(alphas.iter().rev()) {
            let bcoef = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - bcoef) * si);
        }
        let mut dir: Vec<f64> = q.into_iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            s_hist.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&g, &dir);
            let scale = 1.0 / dot(&g, &g).sqrt().max(1e-300);
            dir.iter_mut().for_each(|v| *v *= scale);
            slope *= scale;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let (fnew, gnew) = fg(&xn);
            if fnew.is_finite() && fnew <= f + 1e-4 * step * slope {
                accepted = Some((xn, fnew, gnew));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            // no descent along the quasi-Newton direction: restart once, then stop
            if s_hist.is_empty() {
                break;
            }
            s_hist.clear();
            continue;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if s_hist.len() == memory {
                s_hist.pop_front();
            }
            s_hist.push_back((s, y, 1.0 / sy));
        }
        if (f - fnew).abs() <= f64::EPSILON * f.abs().max(1e-300) {
            stalled += 1;
        } else {
            stalled = 0;
        }
        x = xn;
        f = fnew;
        g = gnew;
        gn = norm(&g);
        it += 1;
        if it % 50 == 0 {
            trace.push(f);
        }
        if stalled >= 20 {
            break;
        }
    }
    trace.push(f);
    LbfgsResult {
        converged: gn <= tol,
        x,
        value: f,
        gradient_norm: gn,
        iterations: it,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, fx) = golden_section::<_, Infallible>(|x| Ok((x - 0.3).powi(2)), -2.0, 2.0, 1e-10).unwrap();
        assert!((x - 0.3).abs() < 1e-9);
        assert!(fx < 1e-18);
    }

    #[test]
    fn bisect_finds_root() {
        let r = bisect::<_, Infallible>(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-14).unwrap().unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect::<_, Infallible>(|x| Ok(x * x + 1.0), 0.0, 2.0, 1e-14).unwrap().is_none());
    }

    #[test]
    fn lbfgs_minimizes_rosenbrock() {
        let fg = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            (f, g)
        };
        let norm = |g: &[f64]| g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let r = lbfgs(fg, norm, vec![-1.2, 1.0], 8, 1e-10, 1000);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-8 && (r.x[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn local_minima_detects_two_wells() {
        let v: Vec<f64> = (0..41).map(|i| ((i as f64 - 20.0) / 5.0).powi(2) * ((i as f64 - 20.0) / 5.0).cos()).collect();
        assert!(local_minima(&v).len() >= 2);
    }
}
