use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorFamily {
    Normal,
    Laplace,
    Cauchy,
    /// Non-centred: weight = z * exp(eta) * scale with z ~ N(0, 1) and
    /// exp(eta) ~ Half-Cauchy(0, 1).
    Horseshoe,
}

/// Independent prior on every weight and bias. `scale` is the standard
/// deviation for Normal, the diversity for Laplace, the half-width for Cauchy
/// and the fixed global scale for Horseshoe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub family: PriorFamily,
    pub location: f64,
    pub scale: f64,
}

impl PriorSpec {
    pub const fn new(family: PriorFamily, location: f64, scale: f64) -> Self {
        Self { family, location, scale }
    }

    /// The six priors compared by the pipeline.
    pub fn shipped() -> [PriorSpec; 6] {
        use PriorFamily::*;
        [
            Self::new(Normal, 0.0, 1.0),
            Self::new(Normal, 0.0, 10.0),
            Self::new(Laplace, 0.0, 1.0),
            Self::new(Cauchy, 0.0, 1.0),
            Self::new(Cauchy, 0.0, 2.5),
            Self::new(Horseshoe, 0.0, 1.0),
        ]
    }

    pub fn is_valid(&self) -> bool {
        self.scale.is_finite() && self.scale > 0.0 && self.location.is_finite()
    }

    /// Display label such as `Normal(0,10)` or `Horseshoe(1)`.
    pub fn label(&self) -> String {
        let name = match self.family {
            PriorFamily::Normal => "Normal",
            PriorFamily::Laplace => "Laplace",
            PriorFamily::Cauchy => "Cauchy",
            PriorFamily::Horseshoe => "Horseshoe",
        };
        match self.family {
            PriorFamily::Horseshoe => format!("{name}({})", self.scale),
            _ => format!("{name}({},{})", self.location, self.scale),
        }
    }

    /// File-name friendly key such as `normal_0_10` or `cauchy_0_2.5`.
    pub fn key(&self) -> String {
        let name = format!("{:?}", self.family).to_lowercase();
        match self.family {
            PriorFamily::Horseshoe => format!("{name}_{}", self.scale),
            _ => format!("{name}_{}_{}", self.location, self.scale),
        }
    }

    /// Accepts [`label`](Self::label), [`key`](Self::key) or colon-separated
    /// (`normal:0:1`) spellings, case-insensitively.
    pub fn parse(text: &str) -> Option<Self> {
        let t: String = text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| if c == ':' { '_' } else { c })
            .collect::<String>()
            .to_lowercase();
        let (name, args) = match t.split_once('(') {
            Some((n, rest)) => (n.to_string(), rest.strip_suffix(')')?.replace(',', "_")),
            None => {
                let (n, rest) = t.split_once('_')?;
                (n.to_string(), rest.to_string())
            }
        };
        let nums: Vec<f64> = args.split('_').map(str::parse).collect::<Result<_, _>>().ok()?;
        let family = match name.as_str() {
            "normal" => PriorFamily::Normal,
            "laplace" => PriorFamily::Laplace,
            "cauchy" => PriorFamily::Cauchy,
            "horseshoe" => PriorFamily::Horseshoe,
            _ => return None,
        };
        let spec = match (family, nums.as_slice()) {
            (PriorFamily::Horseshoe, [s]) => Self::new(family, 0.0, *s),
            (PriorFamily::Horseshoe, _) => return None,
            (_, [l, s]) => Self::new(family, *l, *s),
            _ => return None,
        };
        spec.is_valid().then_some(spec)
    }

    /// Number of unconstrained coordinates per network parameter.
    pub fn coords_per_param(&self) -> usize {
        if self.family == PriorFamily::Horseshoe {
            2
        } else {
            1
        }
    }

    /// Log density of one weight and its derivative, for the single-coordinate
    /// families.
    pub fn log_density(&self, w: f64) -> (f64, f64) {
        let u = w - self.location;
        let s = self.scale;
        match self.family {
            PriorFamily::Normal => (-0.5 * (u / s).powi(2) - s.ln() - 0.5 * (2.0 * PI).ln(), -u / (s * s)),
            PriorFamily::Laplace => {
                let sign = if u > 0.0 {
                    1.0
                } else if u < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                (-u.abs() / s - (2.0 * s).ln(), -sign / s)
            }
            PriorFamily::Cauchy => (-(PI * s).ln() - (u / s).powi(2).ln_1p(), -2.0 * u / (s * s + u * u)),
            PriorFamily::Horseshoe => panic!("horseshoe uses log_density_horseshoe"),
        }
    }
}

/// Horseshoe term for one (z, eta) pair: log N(z|0,1) + log HalfCauchy(e^eta)
/// + eta, with its gradient in (z, eta).
pub fn log_density_horseshoe(z: f64, eta: f64) -> (f64, f64, f64) {
    let lambda2 = (2.0 * eta).exp();
    let lp = -0.5 * z * z - 0.5 * (2.0 * PI).ln() + (2.0 / PI).ln() - lambda2.ln_1p() + eta;
    let d_eta = if lambda2.is_infinite() { -1.0 } else { 1.0 - 2.0 * lambda2 / (1.0 + lambda2) };
    (lp, -z, d_eta)
}
