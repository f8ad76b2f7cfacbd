//! Evaluation of expression trees over any [`Scalar`] arithmetic, plus the
//! derivative front-ends built on dual numbers.

use super::{EvalError, Expr, Func, Point, VarSet};
use crate::dual::{Dual, Scalar};

/// Value and exact first derivatives of an expression at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub value: f64,
    /// One entry per state variable, in declaration order.
    pub du: Vec<f64>,
    /// Partial with respect to time.
    pub dt: f64,
}

/// Exact second-derivative data at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondDerivs {
    /// State-state block, symmetric `n x n`.
    pub uu: Vec<Vec<f64>>,
    /// Mixed state-time partials, length `n`.
    pub ut: Vec<f64>,
    /// Pure time second partial.
    pub tt: f64,
}

pub(crate) fn eval_scalar<T: Scalar>(
    e: &Expr,
    vs: &VarSet,
    values: &[T],
    time_value: T,
) -> Result<T, EvalError> {
    match e {
        Expr::Num(v) => Ok(T::from_f64(*v)),
        Expr::Var(name) => {
            if let Some(i) = vs.index_of(name) {
                Ok(values[i])
            } else if name == vs.time() {
                Ok(time_value)
            } else {
                Err(EvalError::Unbound(name.clone()))
            }
        }
        Expr::Neg(a) => Ok(eval_scalar(a, vs, values, time_value)?.neg()),
        Expr::Add(a, b) => Ok(eval_scalar(a, vs, values, time_value)?
            .add(eval_scalar(b, vs, values, time_value)?)),
        Expr::Sub(a, b) => Ok(eval_scalar(a, vs, values, time_value)?
            .sub(eval_scalar(b, vs, values, time_value)?)),
        Expr::Mul(a, b) => Ok(eval_scalar(a, vs, values, time_value)?
            .mul(eval_scalar(b, vs, values, time_value)?)),
        Expr::Div(a, b) => {
            eval_scalar(a, vs, values, time_value)?.div(eval_scalar(b, vs, values, time_value)?)
        }
        Expr::Pow(a, b) => {
            let base = eval_scalar(a, vs, values, time_value)?;
            let exponent = eval_scalar(b, vs, values, time_value)?;
            let v = exponent.value();
            if exponent.has_zero_derivative() && v.fract() == 0.0 && v.abs() <= i32::MAX as f64 {
                base.powi(v as i32)
            } else {
                base.pow(exponent)
            }
        }
        Expr::Fun(f, a) => {
            let x = eval_scalar(a, vs, values, time_value)?;
            match f {
                Func::Exp => Ok(x.exp()),
                Func::Log => x.ln(),
                Func::Sin => Ok(x.sin()),
                Func::Cos => Ok(x.cos()),
                Func::Sinh => Ok(x.sinh()),
                Func::Cosh => Ok(x.cosh()),
                Func::Tanh => Ok(x.tanh()),
                Func::Sqrt => x.sqrt(),
                Func::Abs => x.abs(),
            }
        }
    }
}

fn check_dim(vs: &VarSet, pt: &Point) -> Result<(), EvalError> {
    if pt.u.len() != vs.n() {
        return Err(EvalError::Dimension {
            expected: vs.n(),
            got: pt.u.len(),
        });
    }
    Ok(())
}

fn finite(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

pub(crate) fn eval(e: &Expr, vs: &VarSet, pt: &Point) -> Result<f64, EvalError> {
    check_dim(vs, pt)?;
    finite(eval_scalar(e, vs, &pt.u, pt.t)?)
}

pub(crate) fn gradient(e: &Expr, vs: &VarSet, pt: &Point) -> Result<Gradient, EvalError> {
    check_dim(vs, pt)?;
    let n = vs.n();
    let mut du = Vec::with_capacity(n);
    let mut value = 0.0;
    // One seeded pass per coordinate; trees are small enough that this
    // beats a vector-valued tangent in both simplicity and locality.
    for i in 0..=n {
        let seeds: Vec<Dual<f64>> = pt
            .u
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                if k == i {
                    Dual::seeded(v)
                } else {
                    Dual::constant(v)
                }
            })
            .collect();
        let time = if i == n {
            Dual::seeded(pt.t)
        } else {
            Dual::constant(pt.t)
        };
        let r = eval_scalar(e, vs, &seeds, time)?;
        if i == 0 || n == 0 {
            value = finite(r.value())?;
        }
        if i < n {
            du.push(finite(r.eps)?);
        } else {
            return Ok(Gradient {
                value,
                du,
                dt: finite(r.eps)?,
            });
        }
    }
    unreachable!()
}

type DD = Dual<Dual<f64>>;

/// Second partial along coordinates `i` and `j` of the extended list
/// `(u_0 .. u_{n-1}, t)`.
fn second_entry(e: &Expr, vs: &VarSet, pt: &Point, i: usize, j: usize) -> Result<f64, EvalError> {
    let n = vs.n();
    let seed = |k: usize, v: f64| -> DD {
        let inner = if k == j {
            Dual::seeded(v)
        } else {
            Dual::constant(v)
        };
        let outer_eps = Dual::constant(if k == i { 1.0 } else { 0.0 });
        Dual::new(inner, outer_eps)
    };
    let values: Vec<DD> = pt.u.iter().enumerate().map(|(k, &v)| seed(k, v)).collect();
    let time = seed(n, pt.t);
    let r = eval_scalar(e, vs, &values, time)?;
    finite(r.eps.eps)
}

pub(crate) fn hessian(e: &Expr, vs: &VarSet, pt: &Point) -> Result<Vec<Vec<f64>>, EvalError> {
    check_dim(vs, pt)?;
    let n = vs.n();
    let mut h = vec![vec![0.0; n]; n];
    let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            pairs.push((i, j, second_entry(e, vs, pt, i, j)?));
        }
    }
    for (i, j, v) in pairs {
        h[i][j] = v;
        h[j][i] = v;
    }
    Ok(h)
}

pub(crate) fn second_derivatives(
    e: &Expr,
    vs: &VarSet,
    pt: &Point,
) -> Result<SecondDerivs, EvalError> {
    let uu = hessian(e, vs, pt)?;
    let n = vs.n();
    let mut ut = Vec::with_capacity(n);
    for i in 0..n {
        ut.push(second_entry(e, vs, pt, i, n)?);
    }
    let tt = second_entry(e, vs, pt, n, n)?;
    Ok(SecondDerivs { uu, ut, tt })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vs(names: &[&str]) -> VarSet {
        VarSet::new(names.to_vec(), "t").unwrap()
    }

    fn parse(text: &str, v: &VarSet) -> Expr {
        v.parse(text).unwrap()
    }

    #[test]
    fn arithmetic_value() {
        let v = vs(&["y", "z"]);
        let e = parse("z - 2*y^2", &v);
        let val = e.eval(&v, &Point::new(vec![1.0, 3.0], 0.0)).unwrap();
        assert_eq!(val, 1.0);
    }

    #[test]
    fn exp_identity() {
        let v = vs(&["x"]);
        let e = parse("exp(x)", &v);
        assert_eq!(e.eval(&v, &Point::new(vec![0.0], 0.0)).unwrap(), 1.0);
    }

    #[test]
    fn log_of_negative_is_domain_error() {
        let v = vs(&["x"]);
        let e = parse("log(x)", &v);
        assert!(matches!(
            e.eval(&v, &Point::new(vec![-1.0], 0.0)),
            Err(EvalError::Domain(_))
        ));
    }

    #[test]
    fn division_by_zero() {
        let v = vs(&["x"]);
        let e = parse("1/x", &v);
        assert!(e.eval(&v, &Point::new(vec![0.0], 0.0)).is_err());
    }

    #[test]
    fn gradient_power_rule() {
        let v = vs(&["x"]);
        let e = parse("x^2", &v);
        let g = e.gradient(&v, &Point::new(vec![3.0], 0.0)).unwrap();
        assert_eq!(g.du[0], 6.0);
        assert_eq!(g.dt, 0.0);
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let v = vs(&["x", "y"]);
        let e = parse("3.5", &v);
        let g = e.gradient(&v, &Point::new(vec![1.0, 2.0], 0.5)).unwrap();
        assert_eq!(g.du, vec![0.0, 0.0]);
        assert_eq!(g.dt, 0.0);
    }

    #[test]
    fn toda_gradient_at_origin() {
        // dH/dq at q = p = 0 for H with exp(q1+q2) + exp(q1-q2) terms.
        let v = vs(&["q1", "q2", "p1", "p2"]);
        let e = parse("0.5*p1^2 + 0.5*p2^2 + exp(q1 + q2) + exp(q1 - q2)", &v);
        let pt = Point::new(vec![0.0; 4], 0.0);
        let g = e.gradient(&v, &pt).unwrap();
        assert_eq!(g.du[0], 2.0);
        assert_eq!(g.du[1], 0.0);
        // Cross-check against central finite differences.
        for i in 0..4 {
            let h = 1e-6;
            let mut up = pt.clone();
            up.u[i] += h;
            let mut dn = pt.clone();
            dn.u[i] -= h;
            let fd = (e.eval(&v, &up).unwrap() - e.eval(&v, &dn).unwrap()) / (2.0 * h);
            assert!((g.du[i] - fd).abs() <= 1e-6, "component {i}");
        }
    }

    #[test]
    fn hessian_of_bilinear() {
        let v = vs(&["x", "y"]);
        let e = parse("x*y", &v);
        let h = e.hessian(&v, &Point::new(vec![0.7, -1.3], 0.0)).unwrap();
        assert_eq!(h, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn hessian_of_exponential() {
        let v = vs(&["q1", "q2"]);
        let e = parse("exp(q1 + q2)", &v);
        let h = e.hessian(&v, &Point::new(vec![0.0, 0.0], 0.0)).unwrap();
        assert_eq!(h, vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn second_derivatives_mixed_time() {
        // d2/du dt of t*x^2 = 2x
        let v = vs(&["x"]);
        let e = parse("t*x^2", &v);
        let sd = e
            .second_derivatives(&v, &Point::new(vec![3.0], 0.7))
            .unwrap();
        assert_eq!(sd.ut[0], 6.0);
        assert_eq!(sd.tt, 0.0);
        assert_eq!(sd.uu[0][0], 2.0 * 0.7);
    }

    #[test]
    fn hessian_matches_finite_differences() {
        // Time-dependent first integral of the 3D fixture, against a central
        // finite-difference Hessian.
        let v = vs(&["x", "y", "z"]);
        let e = parse("exp(2*t)*(x^2 + y^2 - z/2)", &v);
        let pt = Point::new(vec![0.7, 1.2, 0.4], 0.3);
        let h = e.hessian(&v, &pt).unwrap();
        let step = 1e-4;
        for (i, row) in h.iter().enumerate() {
            for (j, entry) in row.iter().enumerate() {
                let mut pp = pt.clone();
                pp.u[i] += step;
                pp.u[j] += step;
                let mut pm = pt.clone();
                pm.u[i] += step;
                pm.u[j] -= step;
                let mut mp = pt.clone();
                mp.u[i] -= step;
                mp.u[j] += step;
                let mut mm = pt.clone();
                mm.u[i] -= step;
                mm.u[j] -= step;
                let fd = (e.eval(&v, &pp).unwrap() - e.eval(&v, &pm).unwrap()
                    - e.eval(&v, &mp).unwrap()
                    + e.eval(&v, &mm).unwrap())
                    / (4.0 * step * step);
                assert!((entry - fd).abs() <= 1e-5, "({i},{j}): {entry} vs {fd}");
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let v = vs(&["x", "y"]);
        let e = parse("x", &v);
        assert!(matches!(
            e.eval(&v, &Point::new(vec![1.0], 0.0)),
            Err(EvalError::Dimension {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn abs_gradient_away_from_zero() {
        let v = vs(&["x"]);
        let e = parse("abs(x)", &v);
        let g = e.gradient(&v, &Point::new(vec![-2.0], 0.0)).unwrap();
        assert_eq!(g.du[0], -1.0);
        assert!(e.gradient(&v, &Point::new(vec![0.0], 0.0)).is_err());
        assert_eq!(e.eval(&v, &Point::new(vec![0.0], 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn overflow_is_nonfinite() {
        let v = vs(&["x"]);
        let e = parse("exp(exp(x))", &v);
        assert!(matches!(
            e.eval(&v, &Point::new(vec![100.0], 0.0)),
            Err(EvalError::NonFinite)
        ));
    }
}
