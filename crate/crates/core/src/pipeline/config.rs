//! Pipeline configuration and its `key = value` text form.

use serde::{Deserialize, Serialize};

use crate::contours::ContourParams;
use crate::corners::GlcpParams;
use crate::denoise::{DenoiserSpec, GaussianKernelSpec, NlMeansParams};
use crate::detectors::CannyConfig;
use crate::error::{Error, Result};
use crate::imageio::ScaleConfig;
use crate::linking::LinkConfig;
use crate::scoring::ScoreConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub scale: ScaleConfig,
    pub denoiser: DenoiserSpec,
    pub canny: CannyConfig,
    pub contour: ContourParams,
    pub glcp: GlcpParams,
    pub link: LinkConfig,
    pub score: ScoreConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            scale: ScaleConfig::default(),
            denoiser: DenoiserSpec::nl_means_default(),
            canny: CannyConfig::default(),
            contour: ContourParams::default(),
            glcp: GlcpParams::default(),
            link: LinkConfig::default(),
            score: ScoreConfig::default(),
        }
    }
}

/// Keys accepted by [`PipelineConfig::set`].
pub const CONFIG_KEYS: &[&str] = &[
    "factor",
    "offset",
    "denoiser",
    "gaussian_size",
    "gaussian_sigma",
    "nlm_patch",
    "nlm_search",
    "nlm_h",
    "nlm_sigma",
    "low",
    "high",
    "gap_fill",
    "min_length",
    "loop_t",
    "r",
    "theta_obtuse",
    "smooth_sigma",
    "gap_link",
    "phi_line",
    "phi_loop",
    "et",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::param(format!("bad value '{value}' for {key}")))
}

/// Lowercases and maps '-' to '_' so `loop-T` and `loop_t` are one key.
pub fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.scale.validate()?;
        self.denoiser.validate()?;
        self.canny.validate()?;
        self.contour.validate()?;
        self.glcp.validate()?;
        self.link.validate()?;
        self.score.validate()
    }

    fn nl_means_mut(&mut self) -> &mut NlMeansParams {
        if !matches!(self.denoiser, DenoiserSpec::NlMeans(_)) {
            self.denoiser = DenoiserSpec::nl_means_default();
        }
        match &mut self.denoiser {
            DenoiserSpec::NlMeans(p) => p,
            _ => unreachable!(),
        }
    }

    fn sampled_gaussian_mut(&mut self) -> (&mut usize, &mut f64) {
        if !matches!(self.denoiser, DenoiserSpec::Gaussian(GaussianKernelSpec::Sampled { .. })) {
            self.denoiser = DenoiserSpec::Gaussian(GaussianKernelSpec::Sampled { size: 5, sigma: 1.4 });
        }
        match &mut self.denoiser {
            DenoiserSpec::Gaussian(GaussianKernelSpec::Sampled { size, sigma }) => (size, sigma),
            _ => unreachable!(),
        }
    }

    /// Sets one parameter by name. Denoiser parameter keys switch the
    /// denoiser to the matching kind when needed.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = normalize_key(key);
        let value = value.trim();
        match key.as_str() {
            "factor" => self.scale.factor = parse(&key, value)?,
            "offset" => self.scale.offset = parse(&key, value)?,
            "denoiser" => {
                self.denoiser = match value.to_ascii_lowercase().as_str() {
                    "none" => DenoiserSpec::None,
                    "gaussian" => DenoiserSpec::gaussian_default(),
                    "nlmeans" | "nl_means" | "nl-means" => DenoiserSpec::nl_means_default(),
                    other => return Err(Error::param(format!("unknown denoiser '{other}'"))),
                }
            }
            "gaussian_size" => *self.sampled_gaussian_mut().0 = parse(&key, value)?,
            "gaussian_sigma" => *self.sampled_gaussian_mut().1 = parse(&key, value)?,
            "nlm_patch" => self.nl_means_mut().patch = parse(&key, value)?,
            "nlm_search" => self.nl_means_mut().search = parse(&key, value)?,
            "nlm_h" => self.nl_means_mut().h = parse(&key, value)?,
            "nlm_sigma" => self.nl_means_mut().sigma_noise = parse(&key, value)?,
            "low" => self.canny.low = parse(&key, value)?,
            "high" => self.canny.high = parse(&key, value)?,
            "gap_fill" => self.contour.gap_fill_radius = parse(&key, value)?,
            "min_length" => self.contour.min_length = parse(&key, value)?,
            "loop_t" => self.contour.loop_threshold = parse(&key, value)?,
            "r" => self.glcp.r = parse(&key, value)?,
            "theta_obtuse" => self.glcp.theta_obtuse = parse(&key, value)?,
            "smooth_sigma" => self.glcp.smooth_sigma = parse(&key, value)?,
            "gap_link" => self.link.gap_link = parse(&key, value)?,
            "phi_line" => self.score.phi_line = parse(&key, value)?,
            "phi_loop" => self.score.phi_loop = parse(&key, value)?,
            "et" => self.score.et = parse(&key, value)?,
            _ => return Err(Error::param(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::param(format!("line {}: expected key = value", lineno + 1)));
            };
            self.set(k, v)
                .map_err(|e| Error::param(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn text_overrides() {
        let cfg = PipelineConfig::from_text("# comment\net = 5\nLoop-T = 2.5  # inline\n\ndenoiser = gaussian\n").unwrap();
        assert_eq!(cfg.score.et, 5);
        assert_eq!(cfg.contour.loop_threshold, 2.5);
        assert_eq!(cfg.denoiser, DenoiserSpec::gaussian_default());
    }

    #[test]
    fn denoiser_params_switch_kind() {
        let mut cfg = PipelineConfig::default();
        cfg.set("denoiser", "none").unwrap();
        cfg.set("nlm_h", "4").unwrap();
        assert_eq!(cfg.denoiser, DenoiserSpec::NlMeans(NlMeansParams::new(7, 21, 4.0)));
        cfg.set("gaussian_sigma", "2").unwrap();
        assert_eq!(cfg.denoiser, DenoiserSpec::Gaussian(GaussianKernelSpec::Sampled { size: 5, sigma: 2.0 }));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(PipelineConfig::from_text("et 5").is_err());
        assert!(PipelineConfig::from_text("bogus = 1").is_err());
        assert!(PipelineConfig::from_text("et = many").is_err());
        assert!(PipelineConfig::from_text("et = 0").is_err());
        assert!(PipelineConfig::from_text("low = 0.5\nhigh = 0.2").is_err());
    }

    #[test]
    fn every_key_is_settable() {
        for key in CONFIG_KEYS {
            let mut cfg = PipelineConfig::default();
            let value = if *key == "denoiser" { "none" } else { "3" };
            cfg.set(key, value).unwrap();
        }
    }

    #[test]
    fn json_round_trip() {
        let cfg = PipelineConfig::default();
        let s = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<PipelineConfig>(&s).unwrap(), cfg);
    }
}
