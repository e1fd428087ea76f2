use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::imaging::{BayerPattern, MAX_BIT_DEPTH, MIN_BIT_DEPTH};
use crate::lccm::ColorMatrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DemosaicMethod {
    #[default]
    Bilinear,
}

impl FromStr for DemosaicMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bilinear" => Ok(DemosaicMethod::Bilinear),
            other => Err(Error::Parameter(format!("unknown demosaic method `{other}`"))),
        }
    }
}

/// Parameters of the five-stage camera pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct IspParams<T> {
    pub wb_gains: [T; 3],
    pub brightness_gain: T,
    /// Row sums equal 1 and bias is zero, so neutral gray is preserved.
    pub ccm: ColorMatrix<T>,
    pub gamma: T,
    pub pattern: BayerPattern,
    pub demosaic: DemosaicMethod,
    /// Bit depth stamped on raw frames produced by the inverse pipeline.
    pub bit_depth: u8,
}

/// Default teacher color matrix. Rows sum to one.
pub const TEACHER_CCM: [[f64; 3]; 3] = [[1.70, -0.55, -0.15], [-0.25, 1.45, -0.20], [0.05, -0.60, 1.55]];

impl<T: Scalar> Default for IspParams<T> {
    /// The synthetic teacher: gamma 2.2, white balance (2.0, 1.0, 1.6), brightness 1.1,
    /// [`TEACHER_CCM`], RGGB at 12 bits.
    fn default() -> Self {
        Self {
            wb_gains: [T::lit(2.0), T::lit(1.0), T::lit(1.6)],
            brightness_gain: T::lit(1.1),
            ccm: ColorMatrix::new(TEACHER_CCM.map(|r| r.map(T::lit)), [T::zero(); 3]),
            gamma: T::lit(2.2),
            pattern: BayerPattern::Rggb,
            demosaic: DemosaicMethod::Bilinear,
            bit_depth: 12,
        }
    }
}

impl<T: Scalar> IspParams<T> {
    /// Every stage is the identity.
    pub fn neutral() -> Self {
        Self {
            wb_gains: [T::one(); 3],
            brightness_gain: T::one(),
            ccm: ColorMatrix::identity(),
            gamma: T::one(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} must be positive and finite, got {v}")))
            }
        };
        for (c, &g) in self.wb_gains.iter().enumerate() {
            positive(&format!("wb gain {c}"), g)?;
        }
        positive("brightness gain", self.brightness_gain)?;
        positive("gamma", self.gamma)?;
        self.ccm.ensure_finite()?;
        if self.ccm.bias.iter().any(|&b| b != T::zero()) {
            return Err(Error::Parameter("ISP color matrix must have zero bias".into()));
        }
        for (r, row) in self.ccm.weights.iter().enumerate() {
            let sum = row[0] + row[1] + row[2];
            if (sum - T::one()).abs() > T::lit(1e-6) {
                return Err(Error::Parameter(format!(
                    "ISP color matrix row {r} sums to {sum}, not 1"
                )));
            }
        }
        let det = self.ccm.determinant();
        if !(det.abs() > T::lit(1e-9)) {
            return Err(Error::Singular { det: det.as_f64() });
        }
        if !(MIN_BIT_DEPTH..=MAX_BIT_DEPTH).contains(&self.bit_depth) {
            return Err(Error::Parameter(format!(
                "bit depth {} outside [8, 24]",
                self.bit_depth
            )));
        }
        Ok(())
    }

    /// `key = value` lines; `#` starts a comment.
    pub fn to_config_string(&self) -> String {
        let w = &self.ccm.weights;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "wb_gains = {} {} {}",
            self.wb_gains[0], self.wb_gains[1], self.wb_gains[2]
        );
        let _ = writeln!(s, "brightness_gain = {}", self.brightness_gain);
        let _ = writeln!(
            s,
            "ccm = {} {} {} {} {} {} {} {} {}",
            w[0][0], w[0][1], w[0][2], w[1][0], w[1][1], w[1][2], w[2][0], w[2][1], w[2][2]
        );
        let _ = writeln!(s, "gamma = {}", self.gamma);
        let _ = writeln!(s, "pattern = {}", self.pattern);
        let _ = writeln!(s, "demosaic = bilinear");
        let _ = writeln!(s, "bit_depth = {}", self.bit_depth);
        s
    }

    /// Parses the config format. Keys left out keep their [`Default`] value; unknown keys
    /// are rejected. The result is validated.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut p = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let nums = || -> Result<Vec<T>> {
                value
                    .split_whitespace()
                    .map(|t| {
                        t.parse::<f64>()
                            .map(T::lit)
                            .map_err(|_| Error::Format(format!("line {}: `{t}` is not a number", lineno + 1)))
                    })
                    .collect()
            };
            let exactly = |v: Vec<T>, n: usize| -> Result<Vec<T>> {
                if v.len() == n {
                    Ok(v)
                } else {
                    Err(Error::Format(format!(
                        "line {}: `{key}` takes {n} values, got {}",
                        lineno + 1,
                        v.len()
                    )))
                }
            };
            match key {
                "wb_gains" => {
                    let v = exactly(nums()?, 3)?;
                    p.wb_gains = [v[0], v[1], v[2]];
                }
                "brightness_gain" => p.brightness_gain = exactly(nums()?, 1)?[0],
                "ccm" => {
                    let v = exactly(nums()?, 9)?;
                    p.ccm = ColorMatrix::new(
                        [[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]],
                        [T::zero(); 3],
                    );
                }
                "gamma" => p.gamma = exactly(nums()?, 1)?[0],
                "pattern" => p.pattern = value.parse()?,
                "demosaic" => p.demosaic = value.parse()?,
                "bit_depth" => {
                    p.bit_depth = value
                        .parse()
                        .map_err(|_| Error::Format(format!("line {}: bad bit depth `{value}`", lineno + 1)))?
                }
                other => return Err(Error::Format(format!("line {}: unknown key `{other}`", lineno + 1))),
            }
        }
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_config_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_config_string()).map_err(|e| Error::io(path, e))
    }

    /// The affine part of the inverse pipeline (inverse CCM, inverse brightness, inverse
    /// white balance) as one color matrix. With gamma 1 this is the whole RGB-domain inverse.
    pub fn inverse_affine(&self) -> Result<ColorMatrix<T>> {
        let gains = [0, 1, 2].map(|c| T::one() / (self.wb_gains[c] * self.brightness_gain));
        Ok(self.ccm.inverse()?.then(&ColorMatrix::diagonal(gains)))
    }
}
