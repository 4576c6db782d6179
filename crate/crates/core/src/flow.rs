//! Vector fields and fixed-step trajectory integration.
//!
//! Built-in fields cover the systems the rest of the crate is tested on; user
//! fields are polynomial tables parsed from a small text format. Integration
//! is classical fixed-step fourth-order Runge-Kutta with the final step
//! shortened to land on the requested horizon exactly.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("unknown builtin system `{0}`")]
    UnknownBuiltin(String),
    #[error("builtin `{name}` is {expected}-dimensional, requested {got}")]
    BuiltinDimension { name: String, expected: usize, got: usize },
    #[error("integration blew up at step {step} (non-finite state)")]
    Blowup { step: usize },
    #[error("invalid integration parameters: h={h}, t={t}")]
    BadStep { h: f64, t: f64 },
    #[error("polynomial parse error at line {line}: {message}")]
    PolyParse { line: usize, message: String },
}

/// One monomial of a polynomial component: `coef * prod_i x_i^{exponents[i]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyTerm {
    pub coef: f64,
    pub exponents: Vec<u32>,
}

/// Polynomial vector field given per-component as a list of monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyField {
    pub dim: usize,
    pub components: Vec<Vec<PolyTerm>>,
}

/// A vector field on `R^m`: a named builtin or a polynomial table.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorField {
    /// `ẋ = -(r-1)² x - y, ẏ = -(r-1)² y + x` with `r² = x²+y²`; in polar
    /// coordinates `ṙ = -r(r-1)², θ̇ = 1`. Equilibrium at the origin,
    /// invariant unit circle, attractor = closed unit disk.
    CircleAttractor,
    /// `ẋ = x - x³, ẏ = -y`. Sinks at (±1,0), saddle at the origin,
    /// attractor = [-1,1] × {0}.
    DoubleWell,
    /// `ẋ_i = -x_i` in every coordinate.
    LinearSink { dim: usize },
    /// The zero field; every point is an equilibrium.
    ZeroField { dim: usize },
    Polynomial(PolyField),
}

pub const BUILTIN_NAMES: [&str; 4] = ["circle-attractor", "double-well", "linear-sink", "zero-field"];

impl VectorField {
    pub fn builtin(name: &str, dim: usize) -> Result<Self, FlowError> {
        match name {
            "circle-attractor" => {
                if dim != 2 {
                    return Err(FlowError::BuiltinDimension { name: name.into(), expected: 2, got: dim });
                }
                Ok(Self::CircleAttractor)
            }
            "double-well" => {
                if dim != 2 {
                    return Err(FlowError::BuiltinDimension { name: name.into(), expected: 2, got: dim });
                }
                Ok(Self::DoubleWell)
            }
            "linear-sink" => Ok(Self::LinearSink { dim }),
            "zero-field" => Ok(Self::ZeroField { dim }),
            other => Err(FlowError::UnknownBuiltin(other.into())),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::CircleAttractor | Self::DoubleWell => 2,
            Self::LinearSink { dim } | Self::ZeroField { dim } => *dim,
            Self::Polynomial(p) => p.dim,
        }
    }

    /// Evaluate the field at `x` into `out`.
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        match self {
            Self::CircleAttractor => {
                let r2 = x[0] * x[0] + x[1] * x[1];
                let r = r2.sqrt();
                let s = (r - 1.0) * (r - 1.0);
                out[0] = -s * x[0] - x[1];
                out[1] = -s * x[1] + x[0];
            }
            Self::DoubleWell => {
                out[0] = x[0] - x[0] * x[0] * x[0];
                out[1] = -x[1];
            }
            Self::LinearSink { .. } => {
                for i in 0..x.len() {
                    out[i] = -x[i];
                }
            }
            Self::ZeroField { .. } => out.fill(0.0),
            Self::Polynomial(p) => {
                for (i, terms) in p.components.iter().enumerate() {
                    let mut acc = 0.0;
                    for t in terms {
                        let mut v = t.coef;
                        for (xi, &e) in x.iter().zip(&t.exponents) {
                            v *= xi.powi(e as i32);
                        }
                        acc += v;
                    }
                    out[i] = acc;
                }
            }
        }
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::CircleAttractor => write!(f, "circle-attractor"),
            Self::DoubleWell => write!(f, "double-well"),
            Self::LinearSink { dim } => write!(f, "linear-sink({dim})"),
            Self::ZeroField { dim } => write!(f, "zero-field({dim})"),
            Self::Polynomial(p) => write!(f, "polynomial({}d)", p.dim),
        }
    }
}

impl PolyField {
    /// Parse the text format:
    ///
    /// ```text
    /// dim 2
    /// component 0
    /// 1.0 1 0
    /// -1.0 3 0
    /// component 1
    /// -1.0 0 1
    /// ```
    ///
    /// Each term line is `coef e1 e2 ... em`; blank lines and `#` comments are
    /// skipped.
    pub fn parse(text: &str) -> Result<Self, FlowError> {
        let mut dim: Option<usize> = None;
        let mut components: Vec<Vec<PolyTerm>> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("dim") {
                let d: usize = rest.trim().parse().map_err(|_| FlowError::PolyParse {
                    line: line_no,
                    message: format!("bad dimension `{}`", rest.trim()),
                })?;
                dim = Some(d);
                continue;
            }
            if let Some(rest) = line.strip_prefix("component") {
                let c: usize = rest.trim().parse().map_err(|_| FlowError::PolyParse {
                    line: line_no,
                    message: format!("bad component index `{}`", rest.trim()),
                })?;
                if c != components.len() {
                    return Err(FlowError::PolyParse {
                        line: line_no,
                        message: format!("component {c} out of order (expected {})", components.len()),
                    });
                }
                components.push(Vec::new());
                continue;
            }
            let d = dim.ok_or_else(|| FlowError::PolyParse { line: line_no, message: "missing `dim` header".into() })?;
            if components.is_empty() {
                return Err(FlowError::PolyParse { line: line_no, message: "term before any `component` line".into() });
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != d + 1 {
                return Err(FlowError::PolyParse {
                    line: line_no,
                    message: format!("expected coef + {d} exponents, got {} tokens", toks.len()),
                });
            }
            let coef: f64 = toks[0]
                .parse()
                .map_err(|_| FlowError::PolyParse { line: line_no, message: format!("bad coefficient `{}`", toks[0]) })?;
            let exponents = toks[1..]
                .iter()
                .map(|t| {
                    t.parse::<u32>()
                        .map_err(|_| FlowError::PolyParse { line: line_no, message: format!("bad exponent `{t}`") })
                })
                .collect::<Result<Vec<u32>, _>>()?;
            components.last_mut().unwrap().push(PolyTerm { coef, exponents });
        }
        let dim = dim.ok_or(FlowError::PolyParse { line: 0, message: "missing `dim` header".into() })?;
        if components.len() != dim {
            return Err(FlowError::PolyParse {
                line: 0,
                message: format!("{} components for dimension {dim}", components.len()),
            });
        }
        Ok(Self { dim, components })
    }
}

/// Samples of a trajectory at `t = 0, h, 2h, ...`; if the horizon is not a
/// multiple of `h` the final sample sits at the horizon itself.
#[derive(Debug, Clone)]
pub struct Trajectory {
    dim: usize,
    step: f64,
    duration: f64,
    samples: Vec<f64>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn len(&self) -> usize {
        self.samples.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    pub fn time(&self, i: usize) -> f64 {
        if i + 1 == self.len() {
            self.duration
        } else {
            i as f64 * self.step
        }
    }

    pub fn last(&self) -> &[f64] {
        self.sample(self.len() - 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.chunks_exact(self.dim)
    }
}

/// One RK4 step of size `h` from `x` written into `out`.
pub fn rk4_step(field: &VectorField, x: &[f64], h: f64, out: &mut [f64]) {
    let dim = x.len();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];

    field.eval(x, &mut k1);
    for i in 0..dim {
        tmp[i] = x[i] + 0.5 * h * k1[i];
    }
    field.eval(&tmp, &mut k2);
    for i in 0..dim {
        tmp[i] = x[i] + 0.5 * h * k2[i];
    }
    field.eval(&tmp, &mut k3);
    for i in 0..dim {
        tmp[i] = x[i] + h * k3[i];
    }
    field.eval(&tmp, &mut k4);
    for i in 0..dim {
        out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Integrate from `x0` over `[0, t]` with fixed step `h`.
///
/// Produces `ceil(t/h) + 1` samples; the last step is shortened so the final
/// sample lands on `t` exactly. Fails with the offending step index if the
/// state stops being finite.
pub fn integrate(field: &VectorField, x0: &[f64], h: f64, t: f64) -> Result<Trajectory, FlowError> {
    if !(h > 0.0) || !(t > 0.0) || h > t * (1.0 + 1e-12) {
        return Err(FlowError::BadStep { h, t });
    }
    let dim = field.dim();
    debug_assert_eq!(x0.len(), dim);

    // Number of full h-steps; a fractional remainder becomes one short step.
    let ratio = t / h;
    let mut full = ratio.floor() as usize;
    let mut remainder = t - full as f64 * h;
    if remainder <= h * 1e-9 {
        remainder = 0.0;
    } else if remainder >= h * (1.0 - 1e-9) {
        full += 1;
        remainder = 0.0;
    }
    let steps = full + usize::from(remainder > 0.0);

    let mut samples = Vec::with_capacity((steps + 1) * dim);
    samples.extend_from_slice(x0);
    let mut x = x0.to_vec();
    let mut next = vec![0.0; dim];
    for s in 0..steps {
        let hs = if s < full { h } else { remainder };
        rk4_step(field, &x, hs, &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(FlowError::Blowup { step: s });
        }
        samples.extend_from_slice(&next);
        std::mem::swap(&mut x, &mut next);
    }
    Ok(Trajectory { dim, step: h, duration: t, samples })
}

/// The time-`tau` flow map: the endpoint of [`integrate`] over `[0, tau]`.
pub fn flow_map(field: &VectorField, x: &[f64], tau: f64, h: f64) -> Result<Vec<f64>, FlowError> {
    Ok(integrate(field, x, h, tau)?.last().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_builtin_fields() {
        let mut out = [0.0; 2];
        VectorField::DoubleWell.eval(&[0.5, 0.2], &mut out);
        assert_eq!(out, [0.375, -0.2]);

        VectorField::ZeroField { dim: 2 }.eval(&[3.0, -1.0], &mut out);
        assert_eq!(out, [0.0, 0.0]);

        VectorField::CircleAttractor.eval(&[1.0, 0.0], &mut out);
        assert!((out[0] - 0.0).abs() < 1e-15 && (out[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn polynomial_matches_builtin() {
        let text = "dim 2\ncomponent 0\n1.0 1 0\n-1.0 3 0\ncomponent 1\n-1.0 0 1\n";
        let poly = VectorField::Polynomial(PolyField::parse(text).unwrap());
        let mut a = [0.0; 2];
        let mut b = [0.0; 2];
        for p in [[0.3, -0.7], [1.5, 2.0], [-0.2, 0.1]] {
            poly.eval(&p, &mut a);
            VectorField::DoubleWell.eval(&p, &mut b);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn polynomial_parse_errors_carry_lines() {
        let err = PolyField::parse("dim 2\ncomponent 0\n1.0 1\n").unwrap_err();
        match err {
            FlowError::PolyParse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn integrate_double_well_against_closed_form() {
        // u = x² satisfies the logistic equation, so
        // x(t)² = x0² e^{2t} / (1 - x0² + x0² e^{2t}).
        let x0 = 0.5f64;
        let t = 1.0f64;
        let u0 = x0 * x0;
        let exact = (u0 * (2.0 * t).exp() / (1.0 - u0 + u0 * (2.0 * t).exp())).sqrt();
        let traj = integrate(&VectorField::DoubleWell, &[x0, 0.0], 1e-3, t).unwrap();
        assert!((traj.last()[0] - exact).abs() <= 1e-6, "{} vs {}", traj.last()[0], exact);
        assert_eq!(traj.len(), 1001);
    }

    #[test]
    fn integrate_linear_sink_against_closed_form() {
        let t = std::f64::consts::LN_2;
        let traj = integrate(&VectorField::LinearSink { dim: 2 }, &[1.0, 1.0], 1e-3, t).unwrap();
        assert!((traj.last()[0] - 0.5).abs() <= 1e-8);
        assert!((traj.last()[1] - 0.5).abs() <= 1e-8);
    }

    #[test]
    fn integrate_zero_field_is_constant() {
        let traj = integrate(&VectorField::ZeroField { dim: 2 }, &[0.3, -0.4], 0.1, 1.0).unwrap();
        for s in traj.iter() {
            assert_eq!(s, &[0.3, -0.4]);
        }
    }

    #[test]
    fn integration_blowup_reports_step() {
        // ẋ = 1 + x² blows up in finite time.
        let field = VectorField::Polynomial(
            PolyField::parse("dim 1\ncomponent 0\n1.0 0\n1.0 2\n").unwrap(),
        );
        let err = integrate(&field, &[1.0], 0.05, 10.0).unwrap_err();
        assert!(matches!(err, FlowError::Blowup { .. }), "{err:?}");
    }

    #[test]
    fn flow_map_circle_quarter_turn() {
        let y = flow_map(&VectorField::CircleAttractor, &[1.0, 0.0], std::f64::consts::FRAC_PI_2, 1e-3).unwrap();
        assert!((y[0] - 0.0).abs() <= 1e-5 && (y[1] - 1.0).abs() <= 1e-5, "{y:?}");
    }

    #[test]
    fn flow_map_linear_sink_quartering() {
        let y = flow_map(&VectorField::LinearSink { dim: 2 }, &[2.0, 0.0], (4.0f64).ln(), 1e-3).unwrap();
        assert!((y[0] - 0.5).abs() <= 1e-8 && y[1].abs() <= 1e-12);
    }
}
