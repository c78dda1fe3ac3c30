use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};

/// Angular factor `b(cos θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngularFactor {
    AbsCos,
    /// Piecewise-linear table over increasing `cos θ` nodes spanning `[-1, 1]`.
    Tabulated { cos: Vec<f64>, values: Vec<f64> },
}

impl AngularFactor {
    pub fn eval(&self, z: f64) -> f64 {
        match self {
            AngularFactor::AbsCos => z.abs(),
            AngularFactor::Tabulated { cos, values } => {
                let z = z.clamp(cos[0], cos[cos.len() - 1]);
                let i = cos.partition_point(|c| *c <= z).clamp(1, cos.len() - 1);
                let t = (z - cos[i - 1]) / (cos[i] - cos[i - 1]);
                values[i - 1] + t * (values[i] - values[i - 1])
            }
        }
    }

    fn validate_table(&self) -> Result<()> {
        if let AngularFactor::Tabulated { cos, values } = self {
            let ok = cos.len() >= 2
                && cos.len() == values.len()
                && cos.windows(2).all(|w| w[1] > w[0])
                && (cos[0] + 1.0).abs() < 1e-12
                && (cos[cos.len() - 1] - 1.0).abs() < 1e-12;
            if !ok {
                return Err(LabError::Domain("tabulated b needs increasing nodes spanning [-1, 1]".into()));
            }
        }
        Ok(())
    }
}

/// `B(u − v, ω) = |u − v|^γ b(cos θ)` with `0 ≤ b(z) ≤ C_cut |z|`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionKernel {
    gamma: f64,
    b: AngularFactor,
    c_cut: f64,
}

impl CollisionKernel {
    pub fn new(gamma: f64, b: AngularFactor, c_cut: f64) -> Result<Self> {
        if gamma > 0.0 {
            return Err(LabError::UnsupportedKernel(format!("hard potential γ = {gamma} > 0")));
        }
        if !(-0.5..=0.0).contains(&gamma) {
            return Err(LabError::Domain(format!("γ = {gamma} outside [-1/2, 0]")));
        }
        if !(c_cut.is_finite() && c_cut > 0.0) {
            return Err(LabError::Domain(format!("C_cut = {c_cut} must be positive")));
        }
        b.validate_table()?;
        let n = 20_000;
        for i in 0..=n {
            let z = -1.0 + 2.0 * i as f64 / n as f64;
            let bz = b.eval(z);
            if !(bz >= 0.0 && bz <= c_cut * z.abs() + 1e-14) {
                return Err(LabError::Domain(format!("b({z}) = {bz} violates 0 <= b <= C_cut|z|")));
            }
        }
        Ok(Self { gamma, b, c_cut })
    }

    /// `γ` with `b = |cos θ|`, `C_cut = 1`.
    pub fn abs_cos(gamma: f64) -> Result<Self> {
        Self::new(gamma, AngularFactor::AbsCos, 1.0)
    }

    pub fn from_spec(spec: &KernelSpec) -> Result<Self> {
        Self::new(spec.gamma, spec.b.clone(), spec.c_cut)
    }

    pub fn spec(&self) -> KernelSpec {
        KernelSpec { gamma: self.gamma, b: self.b.clone(), c_cut: self.c_cut }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn c_cut(&self) -> f64 {
        self.c_cut
    }
    pub fn angular(&self) -> &AngularFactor {
        &self.b
    }
    pub fn b(&self, z: f64) -> f64 {
        self.b.eval(z)
    }
    /// `b(z) + b(-z)`: `ω` and `-ω` give the same collision, so rules fold onto `cos θ > 0`.
    pub(crate) fn b_folded(&self, z: f64) -> f64 {
        self.b.eval(z) + self.b.eval(-z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub gamma: f64,
    #[serde(default = "abs_cos")]
    pub b: AngularFactor,
    #[serde(rename = "C_cut", default = "one")]
    pub c_cut: f64,
}

fn abs_cos() -> AngularFactor {
    AngularFactor::AbsCos
}
fn one() -> f64 {
    1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_hard_and_out_of_range() {
        assert!(matches!(CollisionKernel::abs_cos(0.5), Err(LabError::UnsupportedKernel(_))));
        assert!(matches!(CollisionKernel::abs_cos(-0.75), Err(LabError::Domain(_))));
        assert!(CollisionKernel::abs_cos(-0.5).is_ok());
    }

    #[test]
    fn cutoff_bound_is_checked() {
        let table = AngularFactor::Tabulated { cos: vec![-1.0, 0.0, 1.0], values: vec![1.0, 0.1, 1.0] };
        assert!(CollisionKernel::new(0.0, table, 1.0).is_err());
        let table = AngularFactor::Tabulated { cos: vec![-1.0, 0.0, 1.0], values: vec![0.5, 0.0, 0.5] };
        let k = CollisionKernel::new(0.0, table, 1.0).unwrap();
        assert!((k.b(0.5) - 0.25).abs() < 1e-15);
        assert!((k.b_folded(0.5) - 0.5).abs() < 1e-15);
    }
}
