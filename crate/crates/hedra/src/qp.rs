//! Dense convex quadratic programming with inequality constraints.
//!
//! Solves minimize ½·xᵀHx + gᵀx subject to G·x ≥ b for strictly positive
//! definite H by a dual active-set method: start at the unconstrained
//! minimum (dual feasible by construction), repeatedly pick the most
//! violated constraint and take the step that adds it to the active set,
//! dropping blocking constraints whose multipliers would turn negative.
//! Each step keeps the iterate optimal for its active set, so the first
//! primal feasible iterate is the solution. Infeasibility surfaces as an
//! unbounded dual ray.
//!
//! The problem is Jacobi-scaled (unit Hessian diagonal, unit constraint
//! rows) before solving; factorizations are recomputed per step, which is
//! fine at the problem sizes this crate produces (tens of variables).

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct QpOptions {
    /// Hard cap on active-set changes; 0 picks 100·(variables+constraints+1).
    pub max_iterations: usize,
    /// A constraint counts as satisfied when its scaled slack is above
    /// minus this.
    pub feasibility_tolerance: f64,
}

impl Default for QpOptions {
    fn default() -> Self {
        QpOptions {
            max_iterations: 0,
            feasibility_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Lagrange multipliers per constraint (zero if inactive), for the
    /// original unscaled problem.
    pub multipliers: Vec<f64>,
    /// Indices of constraints active at the solution, ascending.
    pub active: Vec<usize>,
    pub iterations: usize,
}

/// Minimizes ½·xᵀHx + gᵀx subject to constraints·x ≥ bounds.
///
/// `hessian` must be symmetric positive definite. Errors with
/// [`Error::Infeasible`] when the constraints admit no point at all and
/// [`Error::NonConvergence`] if the active set cycles past the iteration cap.
pub fn solve_qp(
    hessian: &DMatrix<f64>,
    gradient: &DVector<f64>,
    constraints: &DMatrix<f64>,
    bounds: &DVector<f64>,
    options: &QpOptions,
) -> Result<QpSolution> {
    let t = hessian.nrows();
    let c = constraints.nrows();
    if hessian.ncols() != t {
        return Err(Error::DimensionMismatch {
            what: "hessian columns",
            expected: t,
            got: hessian.ncols(),
        });
    }
    if gradient.len() != t {
        return Err(Error::DimensionMismatch {
            what: "gradient length",
            expected: t,
            got: gradient.len(),
        });
    }
    if c > 0 && constraints.ncols() != t {
        return Err(Error::DimensionMismatch {
            what: "constraint columns",
            expected: t,
            got: constraints.ncols(),
        });
    }
    if bounds.len() != c {
        return Err(Error::DimensionMismatch {
            what: "constraint bounds length",
            expected: c,
            got: bounds.len(),
        });
    }
    let finite = hessian.iter().chain(gradient.iter()).all(|v| v.is_finite())
        && constraints.iter().chain(bounds.iter()).all(|v| v.is_finite());
    if !finite {
        return Err(Error::Numerical("non-finite value in QP data".into()));
    }
    let feas_tol = options.feasibility_tolerance;

    // Degenerate variable count: feasibility is just sign checks on bounds.
    if t == 0 {
        for i in 0..c {
            if bounds[i] > feas_tol {
                return Err(Error::Infeasible(format!(
                    "constraint {i} bounds an empty variable space away from zero"
                )));
            }
        }
        return Ok(QpSolution {
            x: DVector::zeros(0),
            multipliers: vec![0.0; c],
            active: vec![],
            iterations: 0,
        });
    }

    // Jacobi scaling: unit Hessian diagonal.
    let mut d = DVector::zeros(t);
    for i in 0..t {
        let hii = hessian[(i, i)];
        if !(hii > 0.0) {
            return Err(Error::Numerical(format!(
                "hessian diagonal entry {i} is not positive ({hii}); the problem is not strictly convex"
            )));
        }
        d[i] = 1.0 / hii.sqrt();
    }
    let mut hs = DMatrix::zeros(t, t);
    for i in 0..t {
        for j in 0..t {
            hs[(i, j)] = d[i] * hessian[(i, j)] * d[j];
        }
    }
    // Force exact symmetry so the factorization sees what the math means.
    for i in 0..t {
        for j in (i + 1)..t {
            let avg = 0.5 * (hs[(i, j)] + hs[(j, i)]);
            hs[(i, j)] = avg;
            hs[(j, i)] = avg;
        }
    }
    let gs = DVector::from_fn(t, |i, _| d[i] * gradient[i]);

    // Scaled, row-normalized constraints. Zero rows are resolved here.
    let mut rows = DMatrix::zeros(c, t);
    let mut bs = DVector::zeros(c);
    let mut skip = vec![false; c];
    let mut row_norm = vec![1.0f64; c];
    for i in 0..c {
        let mut norm2 = 0.0;
        for j in 0..t {
            let v = constraints[(i, j)] * d[j];
            rows[(i, j)] = v;
            norm2 += v * v;
        }
        let norm = norm2.sqrt();
        if norm <= 1e-300 {
            if bounds[i] > feas_tol {
                return Err(Error::Infeasible(format!(
                    "constraint {i} has a zero row but a positive bound"
                )));
            }
            skip[i] = true;
            continue;
        }
        row_norm[i] = norm;
        for j in 0..t {
            rows[(i, j)] /= norm;
        }
        bs[i] = bounds[i] / norm;
    }

    let chol = Cholesky::new(hs.clone()).ok_or_else(|| {
        Error::Numerical("hessian is not positive definite".into())
    })?;

    let mut x = -chol.solve(&gs);
    let mut active: Vec<usize> = Vec::new();
    let mut mult: Vec<f64> = Vec::new();
    let mut in_active = vec![false; c];

    let max_iter = if options.max_iterations == 0 {
        100 * (t + c + 1)
    } else {
        options.max_iterations
    };
    let mut iterations = 0usize;

    loop {
        // Most violated inactive constraint, lowest index on ties.
        let mut worst = f64::INFINITY;
        let mut pick = None;
        for i in 0..c {
            if skip[i] || in_active[i] {
                continue;
            }
            let slack = rows.row(i).dot(&x.transpose()) - bs[i];
            if slack < worst {
                worst = slack;
                pick = Some(i);
            }
        }
        let p = match pick {
            Some(p) if worst < -feas_tol => p,
            _ => break,
        };
        let n_plus = rows.row(p).transpose().into_owned();
        let mut u_plus = 0.0;

        // Step toward satisfying p, dropping blockers as needed.
        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(Error::NonConvergence {
                    iterations,
                    residual: (-worst).max(0.0),
                    last: None,
                });
            }
            let hinv_n = chol.solve(&n_plus);
            let w = active.len();
            let (z, r) = if w == 0 {
                (hinv_n.clone(), DVector::zeros(0))
            } else {
                // r solves (G_W H⁻¹ G_Wᵀ) r = G_W H⁻¹ n⁺,
                // z = H⁻¹ (n⁺ − G_Wᵀ r).
                let mut gw = DMatrix::zeros(w, t);
                for (row_i, &ci) in active.iter().enumerate() {
                    gw.row_mut(row_i).copy_from(&rows.row(ci));
                }
                let mut m = DMatrix::zeros(w, w);
                let mut hinv_gw_t = DMatrix::zeros(t, w);
                for row_i in 0..w {
                    let col = chol.solve(&gw.row(row_i).transpose());
                    hinv_gw_t.set_column(row_i, &col);
                }
                for a in 0..w {
                    for b in 0..w {
                        m[(a, b)] = gw.row(a).dot(&hinv_gw_t.column(b).transpose());
                    }
                }
                let rhs = &gw * &hinv_n;
                let r = m.lu().solve(&rhs).ok_or_else(|| {
                    Error::Numerical(
                        "active constraint set became linearly dependent".into(),
                    )
                })?;
                let z = &hinv_n - &hinv_gw_t * &r;
                (z, r)
            };

            let zhz = n_plus.dot(&z); // equals zᵀHz, nonnegative
            let slack_p = n_plus.dot(&x) - bs[p];

            // Longest dual step before some multiplier hits zero.
            let mut t2 = f64::INFINITY;
            let mut drop_idx = None;
            for (k, &rk) in r.iter().enumerate() {
                if rk > 1e-13 {
                    let ratio = mult[k] / rk;
                    if ratio < t2 {
                        t2 = ratio;
                        drop_idx = Some(k);
                    }
                }
            }

            if zhz <= 1e-13 {
                // No primal progress possible along this constraint.
                let Some(k) = drop_idx else {
                    return Err(Error::Infeasible(format!(
                        "constraint {p} cannot be satisfied together with the \
                         current active set; the constraints are inconsistent"
                    )));
                };
                for (idx, rk) in r.iter().enumerate() {
                    mult[idx] -= t2 * rk;
                }
                u_plus += t2;
                let dropped = active.remove(k);
                mult.remove(k);
                in_active[dropped] = false;
                continue;
            }

            let t1 = -slack_p / zhz;
            let step = t1.min(t2);
            if !step.is_finite() {
                return Err(Error::Numerical("unbounded QP step".into()));
            }
            x += &z * step;
            for (idx, rk) in r.iter().enumerate() {
                mult[idx] -= step * rk;
            }
            u_plus += step;

            if t2 < t1 {
                let k = drop_idx.expect("finite t2 implies a blocking index");
                let dropped = active.remove(k);
                mult.remove(k);
                in_active[dropped] = false;
                continue;
            }
            active.push(p);
            mult.push(u_plus);
            in_active[p] = true;
            break;
        }
    }

    // Unscale: x = D·x_s, multipliers divide by the row norms.
    let x_out = DVector::from_fn(t, |i, _| d[i] * x[i]);
    let mut multipliers = vec![0.0; c];
    for (idx, &ci) in active.iter().enumerate() {
        multipliers[ci] = mult[idx] / row_norm[ci];
    }
    let mut active_sorted = active.clone();
    active_sorted.sort_unstable();
    Ok(QpSolution {
        x: x_out,
        multipliers,
        active: active_sorted,
        iterations,
    })
}
