//! Built-in test potentials: `gaussian:A,σ,z0` is `A exp(−|z − z0|²/σ²)`
//! and `gauss2:A1,σ1,z1,A2,σ2,z2` the sum of two such bumps. Amplitudes and
//! centres are complex literals such as `0.3`, `0.2-0.1i`.

use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use mnv_core::{ComplexField, Grid};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub amplitude: Complex64,
    pub width: f64,
    pub centre: Complex64,
}

impl Bump {
    pub fn at(&self, z: Complex64) -> Complex64 {
        self.amplitude * (-(z - self.centre).norm_sqr() / (self.width * self.width)).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    pub bumps: Vec<Bump>,
}

fn complex(s: &str) -> anyhow::Result<Complex64> {
    Complex64::from_str(s.trim()).map_err(|_| anyhow!("not a complex number: {s:?}"))
}

impl FromStr for Potential {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let (kind, rest) = s.split_once(':').ok_or_else(|| anyhow!("expected kind:params, got {s:?}"))?;
        let parts: Vec<&str> = rest.split(',').collect();
        let want = match kind.trim() {
            "gaussian" => 3,
            "gauss2" => 6,
            other => bail!("unknown potential kind {other:?} (expected gaussian or gauss2)"),
        };
        if parts.len() != want {
            bail!("{kind} takes {want} parameters, got {}", parts.len());
        }
        let bumps = parts
            .chunks(3)
            .map(|p| {
                let width: f64 = p[1].trim().parse().context("width")?;
                if !(width > 0.0) {
                    bail!("width must be positive");
                }
                Ok(Bump { amplitude: complex(p[0])?, width, centre: complex(p[2])? })
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        Ok(Potential { bumps })
    }
}

impl Potential {
    pub fn gaussian(amplitude: f64) -> Self {
        Potential {
            bumps: vec![Bump { amplitude: Complex64::new(amplitude, 0.0), width: 1.0, centre: Complex64::new(0.0, 0.0) }],
        }
    }

    pub fn sample(&self, grid: Grid) -> ComplexField {
        ComplexField::from_fn(grid, |z| self.bumps.iter().map(|b| b.at(z)).sum())
    }
}
