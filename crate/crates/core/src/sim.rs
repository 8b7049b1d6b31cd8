//! Fixed-step closed-loop simulation, quadrature costs and trajectory CSV.

use std::fmt::Write as _;

use thiserror::Error;

use crate::matlib::{self, MatError, Matrix, Vector};

pub const DEFAULT_STEP: f64 = 1e-3;
/// Required decay `‖x(T)‖ ≤ TAIL_RATIO·‖x0‖` before a quadrature cost is trusted.
pub const TAIL_RATIO: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid step/horizon: h = {h}, T = {t_final}")]
    InvalidStep { h: f64, t_final: f64 },
    #[error("horizon too short: ‖x(T)‖/‖x0‖ = {ratio:e}")]
    TailTooLarge { ratio: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("malformed trajectory CSV at line {line}: {reason}")]
    Csv { line: usize, reason: String },
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Uniformly sampled closed-loop trajectory with inputs `u = Fx`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub step: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    pub inputs: Vec<Vector>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &Vector {
        self.states.last().expect("trajectories are non-empty")
    }

    /// Header `t,x1,...,xn,u1,...,um`; 17 significant digits per value.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, |x| x.len());
        let m = self.inputs.first().map_or(0, |u| u.len());
        let mut s = String::from("t");
        for i in 1..=n {
            write!(s, ",x{i}").unwrap();
        }
        for i in 1..=m {
            write!(s, ",u{i}").unwrap();
        }
        s.push('\n');
        for ((t, x), u) in self.times.iter().zip(&self.states).zip(&self.inputs) {
            write!(s, "{t:.16e}").unwrap();
            for v in x.iter().chain(u.iter()) {
                write!(s, ",{v:.16e}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, SimError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(SimError::Csv {
            line: 1,
            reason: "empty file".into(),
        })?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.first() != Some(&"t") {
            return Err(SimError::Csv {
                line: 1,
                reason: "first column must be t".into(),
            });
        }
        let n = cols.iter().filter(|c| c.starts_with('x')).count();
        let m = cols.iter().filter(|c| c.starts_with('u')).count();
        if n + m + 1 != cols.len() {
            return Err(SimError::Csv {
                line: 1,
                reason: "unexpected column name".into(),
            });
        }
        let mut traj = Trajectory {
            step: 0.0,
            times: Vec::new(),
            states: Vec::new(),
            inputs: Vec::new(),
        };
        for (k, line) in lines.enumerate() {
            let vals = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| SimError::Csv {
                    line: k + 2,
                    reason: e.to_string(),
                })?;
            if vals.len() != cols.len() {
                return Err(SimError::Csv {
                    line: k + 2,
                    reason: format!("{} values, expected {}", vals.len(), cols.len()),
                });
            }
            traj.times.push(vals[0]);
            traj.states.push(Vector::from_column_slice(&vals[1..=n]));
            traj.inputs.push(Vector::from_column_slice(&vals[n + 1..]));
        }
        if traj.times.len() >= 2 {
            traj.step = traj.times[1] - traj.times[0];
        }
        Ok(traj)
    }
}

/// Classical fourth-order Runge–Kutta on `ẋ = A_cl x` with `u = Fx` recorded.
///
/// For a linear time-invariant field one RK4 step is the fixed matrix
/// `I + hA + (hA)²/2 + (hA)³/6 + (hA)⁴/24`, which is applied directly.
pub fn simulate(
    a_cl: &Matrix,
    f: &Matrix,
    x0: &Vector,
    t_final: f64,
    h: f64,
) -> Result<Trajectory, SimError> {
    let n = a_cl.nrows();
    if a_cl.ncols() != n || x0.len() != n || f.ncols() != n {
        return Err(SimError::Dimension("A_cl, F and x0 must agree".into()));
    }
    if !(h > 0.0 && h.is_finite() && t_final >= h && t_final.is_finite()) {
        return Err(SimError::InvalidStep { h, t_final });
    }
    let steps = (t_final / h * (1.0 + 1e-12)).floor() as usize;
    let ha = a_cl * h;
    let ha2 = &ha * &ha;
    let ha3 = &ha2 * &ha;
    let ha4 = &ha3 * &ha;
    let phi = Matrix::identity(n, n) + &ha + ha2 / 2.0 + ha3 / 6.0 + ha4 / 24.0;
    let mut traj = Trajectory {
        step: h,
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        inputs: Vec::with_capacity(steps + 1),
    };
    let mut x = x0.clone();
    for k in 0..=steps {
        traj.times.push(k as f64 * h);
        traj.inputs.push(f * &x);
        traj.states.push(x.clone());
        if k < steps {
            x = &phi * &x;
        }
    }
    Ok(traj)
}

/// Step `min(h_max, 0.1/ρ(A_cl))`.
pub fn stable_step(a_cl: &Matrix, h_max: f64) -> Result<f64, SimError> {
    let rho = matlib::spectral_radius(a_cl)?;
    Ok(if rho > 0.0 { h_max.min(0.1 / rho) } else { h_max })
}

/// Simulates with horizon doubling until the tail criterion holds.
pub fn simulate_to_tail(
    a_cl: &Matrix,
    f: &Matrix,
    x0: &Vector,
    t_start: f64,
    h: f64,
) -> Result<Trajectory, SimError> {
    let mut t = t_start.max(h);
    let x0n = x0.norm();
    loop {
        let traj = simulate(a_cl, f, x0, t, h)?;
        if x0n == 0.0 || traj.final_state().norm() <= TAIL_RATIO * x0n {
            return Ok(traj);
        }
        if t > 1e6 {
            let ratio = traj.final_state().norm() / x0n;
            return Err(SimError::TailTooLarge { ratio });
        }
        t *= 2.0;
    }
}

/// Composite Simpson quadrature of `x'Wx` (3/8 rule on the last three
/// intervals when the interval count is odd).
pub fn quadrature_cost(traj: &Trajectory, w: &Matrix) -> Result<f64, SimError> {
    if traj.is_empty() {
        return Ok(0.0);
    }
    let x0n = traj.states[0].norm();
    let xt = traj.final_state().norm();
    if xt > TAIL_RATIO * x0n {
        return Err(SimError::TailTooLarge {
            ratio: if x0n > 0.0 { xt / x0n } else { f64::INFINITY },
        });
    }
    if x0n == 0.0 {
        return Ok(0.0);
    }
    let vals: Vec<f64> = traj.states.iter().map(|x| matlib::quad_form(w, x)).collect();
    let h = traj.step;
    let intervals = vals.len() - 1;
    let simpson = |v: &[f64]| -> f64 {
        let k = v.len() - 1;
        let mut s = v[0] + v[k];
        for (i, x) in v.iter().enumerate().take(k).skip(1) {
            s += if i % 2 == 1 { 4.0 * x } else { 2.0 * x };
        }
        s * h / 3.0
    };
    Ok(match intervals {
        0 => 0.0,
        1 => 0.5 * h * (vals[0] + vals[1]),
        _ if intervals.is_multiple_of(2) => simpson(&vals),
        _ => {
            let k = intervals - 3;
            let head = if k > 0 { simpson(&vals[..=k]) } else { 0.0 };
            head + 3.0 * h / 8.0 * (vals[k] + 3.0 * vals[k + 1] + 3.0 * vals[k + 2] + vals[k + 3])
        }
    })
}
