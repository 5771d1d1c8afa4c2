//! Per-pair force kernels.
//!
//! Every kernel reduces to a scalar coefficient applied to a basis vector:
//! the other endpoint `z_other` for the sigmoid model, the difference
//! `z_u - z_other` for the distance-based models. The trainer uses the
//! coefficient form directly so a whole neighbor run can be accumulated into
//! one register-resident row; the vector-returning functions below exist
//! for callers that want one pair at a time.
//!
//! Gradients are oriented for descent: `z_u <- z_u - eta * grad` pulls
//! neighbors together and pushes negative samples apart for every model.

use std::fmt;
use std::str::FromStr;

use num_traits::Float;

use crate::error::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_REPULSION_CAP: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ForceKind {
    Sigmoid,
    TDist,
    FruchtermanReingold,
    ForceAtlas,
    LinLog,
}

impl ForceKind {
    pub const ALL: [ForceKind; 5] = [
        ForceKind::Sigmoid,
        ForceKind::TDist,
        ForceKind::FruchtermanReingold,
        ForceKind::ForceAtlas,
        ForceKind::LinLog,
    ];

    /// Distance-based models act along `z_u - z_other`.
    pub fn is_distance_based(self) -> bool {
        !matches!(self, ForceKind::Sigmoid)
    }

    /// Only sigmoid and Student-t have an explicit loss.
    pub fn has_loss(self) -> bool {
        matches!(self, ForceKind::Sigmoid | ForceKind::TDist)
    }

    pub fn name(self) -> &'static str {
        match self {
            ForceKind::Sigmoid => "sigmoid",
            ForceKind::TDist => "tdist",
            ForceKind::FruchtermanReingold => "fr",
            ForceKind::ForceAtlas => "fa",
            ForceKind::LinLog => "linlog",
        }
    }
}

impl fmt::Display for ForceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ForceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sigmoid" => Ok(ForceKind::Sigmoid),
            "tdist" | "t" => Ok(ForceKind::TDist),
            "fr" | "fruchterman-reingold" => Ok(ForceKind::FruchtermanReingold),
            "fa" | "forceatlas" => Ok(ForceKind::ForceAtlas),
            "linlog" | "ll" => Ok(ForceKind::LinLog),
            other => Err(Error::InvalidArgument(format!(
                "unknown force model {other:?}"
            ))),
        }
    }
}

/// A force model plus its singularity clamp and repulsion cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceModel {
    pub kind: ForceKind,
    pub epsilon: f64,
    /// Maximum magnitude of a single repulsive pair gradient.
    pub repulsion_cap: Option<f64>,
}

impl ForceModel {
    pub fn new(kind: ForceKind) -> Self {
        ForceModel {
            kind,
            epsilon: DEFAULT_EPSILON,
            repulsion_cap: Some(DEFAULT_REPULSION_CAP),
        }
    }

    pub fn uncapped(kind: ForceKind) -> Self {
        ForceModel {
            repulsion_cap: None,
            ..ForceModel::new(kind)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        if let Some(cap) = self.repulsion_cap {
            if cap.is_nan() || cap <= 0.0 {
                return Err(Error::InvalidArgument(
                    "repulsion cap must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// Coefficient of the attractive pair gradient.
    ///
    /// `x` is the dot product `<z_u, z_other>` for sigmoid and the distance
    /// `||z_u - z_other||` for every other model.
    #[inline]
    pub fn attractive_coef<T: Float>(&self, x: T, _other_norm: T) -> Coef<T> {
        let eps = T::from(self.epsilon).unwrap();
        let two = T::one() + T::one();
        match self.kind {
            ForceKind::Sigmoid => Coef::Basis(sigmoid(x) - T::one()),
            ForceKind::TDist => Coef::Basis(two * x / (T::one() + x * x) / x.max(eps)),
            // Descent orientation is the negation of the tabulated force value.
            ForceKind::FruchtermanReingold => Coef::Basis(x * x / x.max(eps)),
            ForceKind::ForceAtlas => Coef::Basis(x / x.max(eps)),
            ForceKind::LinLog => Coef::Basis(x.ln_1p() / x.max(eps)),
        }
    }

    /// Coefficient of the repulsive pair gradient, cap applied.
    ///
    /// `other_norm` is `||z_other||` and is only read by the sigmoid model.
    #[inline]
    pub fn repulsive_coef<T: Float>(&self, x: T, other_norm: T) -> Coef<T> {
        let eps = T::from(self.epsilon).unwrap();
        let cap = self.repulsion_cap.map(|c| T::from(c).unwrap());
        let two = T::one() + T::one();
        if self.kind == ForceKind::Sigmoid {
            let mut c = sigmoid(x);
            if let Some(cap) = cap {
                let mag = c * other_norm;
                if mag > cap {
                    c = c * (cap / mag);
                }
            }
            return Coef::Basis(c);
        }
        // Signed magnitude along the unit vector from z_other to z_u,
        // evaluated at the clamped distance.
        let r = x.max(eps);
        let mut scalar = match self.kind {
            ForceKind::TDist => -two / (r * (T::one() + r * r)),
            _ => -(T::one() / r),
        };
        if let Some(cap) = cap {
            if scalar.abs() > cap {
                scalar = -cap;
            }
        }
        if x > T::zero() {
            Coef::Basis(scalar / x)
        } else {
            Coef::Fallback(scalar)
        }
    }

    /// Descent gradient of one pair, for any model.
    pub fn pair_gradient<T: Float>(
        &self,
        z_u: &[T],
        z_other: &[T],
        attractive: bool,
    ) -> PairGradient<T> {
        assert_eq!(z_u.len(), z_other.len(), "embedding dimension mismatch");
        let (x, norm) = if self.kind.is_distance_based() {
            (distance(z_u, z_other), T::zero())
        } else {
            (dot(z_u, z_other), dot(z_other, z_other).sqrt())
        };
        let coef = if attractive {
            self.attractive_coef(x, norm)
        } else {
            self.repulsive_coef(x, norm)
        };
        let mut delta = vec![T::zero(); z_u.len()];
        coef.accumulate(self.kind, z_u, z_other, &mut delta);
        PairGradient { delta }
    }
}

/// How a pair gradient is formed from its endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coef<T> {
    /// `c * z_other` (sigmoid) or `c * (z_u - z_other)` (distance models).
    Basis(T),
    /// Coincident endpoints: `c` times the fixed unit diagonal `1/sqrt(d)`.
    Fallback(T),
}

impl<T: Float> Coef<T> {
    #[inline]
    pub fn accumulate(self, kind: ForceKind, z_u: &[T], z_other: &[T], acc: &mut [T]) {
        match self {
            Coef::Basis(c) if kind.is_distance_based() => {
                for ((a, &p), &q) in acc.iter_mut().zip(z_u).zip(z_other) {
                    *a = *a + c * (p - q);
                }
            }
            Coef::Basis(c) => {
                for (a, &q) in acc.iter_mut().zip(z_other) {
                    *a = *a + c * q;
                }
            }
            Coef::Fallback(c) => {
                let step = c / T::from(acc.len()).unwrap().sqrt();
                for a in acc.iter_mut() {
                    *a = *a + step;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient<T> {
    pub delta: Vec<T>,
}

impl<T: Float> PairGradient<T> {
    pub fn norm(&self) -> T {
        dot(&self.delta, &self.delta).sqrt()
    }
}

#[inline]
pub fn dot<T: Float>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

#[inline]
pub fn distance<T: Float>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |s, (&x, &y)| {
            let d = x - y;
            s + d * d
        })
        .sqrt()
}

/// Logistic function, evaluated on the branch that cannot overflow.
#[inline]
pub fn sigmoid<T: Float>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus<T: Float>(x: T) -> T {
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

pub fn attractive_grad_sigmoid<T: Float>(z_u: &[T], z_v: &[T]) -> PairGradient<T> {
    ForceModel::uncapped(ForceKind::Sigmoid).pair_gradient(z_u, z_v, true)
}

pub fn repulsive_grad_sigmoid<T: Float>(z_u: &[T], z_w: &[T], cap: Option<f64>) -> PairGradient<T> {
    let model = ForceModel {
        repulsion_cap: cap,
        ..ForceModel::new(ForceKind::Sigmoid)
    };
    model.pair_gradient(z_u, z_w, false)
}

pub fn attractive_grad_tdist<T: Float>(z_u: &[T], z_v: &[T], epsilon: f64) -> PairGradient<T> {
    let model = ForceModel {
        epsilon,
        ..ForceModel::uncapped(ForceKind::TDist)
    };
    model.pair_gradient(z_u, z_v, true)
}

pub fn repulsive_grad_tdist<T: Float>(
    z_u: &[T],
    z_w: &[T],
    epsilon: f64,
    cap: Option<f64>,
) -> PairGradient<T> {
    let model = ForceModel {
        epsilon,
        repulsion_cap: cap,
        kind: ForceKind::TDist,
    };
    model.pair_gradient(z_u, z_w, false)
}

/// Tabulated spring-electrical value for Fruchterman-Reingold, ForceAtlas
/// and LinLog: `scalar * (z_u - z_other) / max(r, eps)` with attractive
/// scalars `-r^2`, `-r`, `-ln(1 + r)` and repulsive scalar `1 / max(r, eps)`.
///
/// These values point along the force acting on `u`; the descent gradient
/// used by training ([`ForceModel::pair_gradient`]) is their negation.
///
/// Panics for sigmoid and Student-t models or on a dimension mismatch.
pub fn pair_grad_table2<T: Float>(
    model: &ForceModel,
    z_u: &[T],
    z_other: &[T],
    attractive: bool,
) -> PairGradient<T> {
    assert!(
        model.kind.is_distance_based() && model.kind != ForceKind::TDist,
        "{} is not a tabulated spring-electrical model",
        model.kind
    );
    let mut g = model.pair_gradient(z_u, z_other, attractive);
    for x in &mut g.delta {
        *x = -*x;
    }
    g
}

/// Per-pair loss term, for monitoring only.
///
/// Sigmoid: `ln(1 + e^{-<z_u,z_v>})` attractive, `-ln(e^{-x} / (1 + e^{-x}))`
/// repulsive. Student-t: `ln(1 + t^2)` attractive, `-ln(t^2 / (1 + t^2))`
/// repulsive with `t` clamped below by epsilon.
pub fn pair_loss<T: Float>(
    model: &ForceModel,
    z_u: &[T],
    z_v: &[T],
    attractive: bool,
) -> Result<T> {
    assert_eq!(z_u.len(), z_v.len(), "embedding dimension mismatch");
    let x = match model.kind {
        ForceKind::Sigmoid => dot(z_u, z_v),
        _ => distance(z_u, z_v),
    };
    model.loss_from_stat(x, attractive)
}

impl ForceModel {
    /// Pair loss from the same statistic the coefficient functions take.
    #[inline]
    pub fn loss_from_stat<T: Float>(&self, x: T, attractive: bool) -> Result<T> {
        match self.kind {
            ForceKind::Sigmoid => Ok(if attractive {
                softplus(-x)
            } else {
                softplus(x)
            }),
            ForceKind::TDist if attractive => Ok((x * x).ln_1p()),
            ForceKind::TDist => {
                let t = x.max(T::from(self.epsilon).unwrap());
                Ok((T::one() / (t * t)).ln_1p())
            }
            other => Err(Error::Unsupported(format!("{other} has no defined loss"))),
        }
    }
}
