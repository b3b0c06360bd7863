//! Tracker configuration: flat `key = value` text with `#` comments.
//! Unknown keys are rejected, every field is bounds-checked, and
//! serialize -> parse round-trips exactly.

use crate::error::ConfigError;

/// All tracker tunables with their default values.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    /// Bhattacharyya gate: pairs with color distance at or above this
    /// score zero. In (0, 1).
    pub color_threshold: f64,
    /// Lowe ratio for descriptor matching. In (0, 1).
    pub match_ratio: f64,
    /// Extra score demanded from pairs that carry keypoint matches.
    pub score_margin: f64,
    /// Motion gate slack as a multiple of the superpixel diameter.
    pub motion_slack_factor: f64,
    /// Occlusion fires when strictly more than this many background
    /// keypoints match inside the estimated box.
    pub occlusion_threshold: usize,
    /// Appearance interpolation rate (histograms, keypoints). In (0, 1].
    pub appearance_rate: f64,
    /// Vote vector interpolation rate. In (0, 1].
    pub vote_rate: f64,
    /// Persistence learning rate. In (0, 1].
    pub persistence_rate: f64,
    /// Persistence assigned to newly inserted parts and keypoints.
    pub min_persistence: f64,
    /// Structure radius as a multiple of the superpixel diameter.
    pub structure_radius_factor: f64,
    /// Target number of superpixels tiling the initial box.
    pub superpixels_per_box: f64,
    /// Model capacity as a multiple of the initial part count.
    pub model_capacity_factor: f64,
    /// Foreground keypoint pool cap.
    pub fg_pool_cap: usize,
    /// Background keypoint pool cap.
    pub bg_pool_cap: usize,
    /// SLIC compactness.
    pub compactness: f64,
    /// Fraction of a superpixel's pixels that must fall inside the initial
    /// box for it to seed the model. In (0, 1].
    pub foreground_overlap: f64,
    /// Restrict per-frame segmentation and detection to a 3x box window
    /// around the last center instead of the whole frame.
    pub search_window: bool,
    /// Detector budget per frame.
    pub max_keypoints: usize,
    /// Optional cap on the predictive factor; unbounded when absent.
    pub predictive_cap: Option<f64>,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            color_threshold: 0.7,
            match_ratio: 0.75,
            score_margin: 1.0,
            motion_slack_factor: 4.0,
            occlusion_threshold: 3,
            appearance_rate: 0.1,
            vote_rate: 0.1,
            persistence_rate: 0.1,
            min_persistence: 0.1,
            structure_radius_factor: 2.0,
            superpixels_per_box: 30.0,
            model_capacity_factor: 3.0,
            fg_pool_cap: 1000,
            bg_pool_cap: 1000,
            compactness: 10.0,
            foreground_overlap: 0.6,
            search_window: false,
            max_keypoints: 2000,
            predictive_cap: None,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn open_unit(field: &str, v: f64) -> Result<(), ConfigError> {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(ConfigError::new(field, format!("must be in (0, 1), got {v}")))
            }
        }
        fn half_open_unit(field: &str, v: f64) -> Result<(), ConfigError> {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(ConfigError::new(field, format!("must be in (0, 1], got {v}")))
            }
        }
        fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::new(field, format!("must be positive, got {v}")))
            }
        }

        open_unit("color_threshold", self.color_threshold)?;
        open_unit("match_ratio", self.match_ratio)?;
        if !(self.score_margin >= 0.0 && self.score_margin.is_finite()) {
            return Err(ConfigError::new(
                "score_margin",
                format!("must be non-negative, got {}", self.score_margin),
            ));
        }
        positive("motion_slack_factor", self.motion_slack_factor)?;
        half_open_unit("appearance_rate", self.appearance_rate)?;
        half_open_unit("vote_rate", self.vote_rate)?;
        half_open_unit("persistence_rate", self.persistence_rate)?;
        half_open_unit("min_persistence", self.min_persistence)?;
        positive("structure_radius_factor", self.structure_radius_factor)?;
        positive("superpixels_per_box", self.superpixels_per_box)?;
        if self.model_capacity_factor < 1.0 || !self.model_capacity_factor.is_finite() {
            return Err(ConfigError::new(
                "model_capacity_factor",
                format!("must be at least 1, got {}", self.model_capacity_factor),
            ));
        }
        if self.fg_pool_cap < 1 {
            return Err(ConfigError::new("fg_pool_cap", "must be at least 1"));
        }
        if self.bg_pool_cap < 1 {
            return Err(ConfigError::new("bg_pool_cap", "must be at least 1"));
        }
        positive("compactness", self.compactness)?;
        half_open_unit("foreground_overlap", self.foreground_overlap)?;
        if self.max_keypoints < 1 {
            return Err(ConfigError::new("max_keypoints", "must be at least 1"));
        }
        if let Some(cap) = self.predictive_cap {
            if cap < 1.0 || !cap.is_finite() {
                return Err(ConfigError::new(
                    "predictive_cap",
                    format!("must be at least 1 or `none`, got {cap}"),
                ));
            }
        }
        Ok(())
    }

    /// Parses the flat text format. Later assignments override earlier
    /// ones; every key must be known.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = TrackerConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError::new(
                    "<line>",
                    format!("line {}: expected `key = value`, got `{raw}`", lineno + 1),
                )
            })?;
            let key = key.trim();
            let value = value.trim();
            config.set(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn float(key: &str, value: &str) -> Result<f64, ConfigError> {
            value
                .parse()
                .map_err(|_| ConfigError::new(key, format!("expected a number, got `{value}`")))
        }
        fn count(key: &str, value: &str) -> Result<usize, ConfigError> {
            value
                .parse()
                .map_err(|_| ConfigError::new(key, format!("expected a count, got `{value}`")))
        }
        match key {
            "color_threshold" => self.color_threshold = float(key, value)?,
            "match_ratio" => self.match_ratio = float(key, value)?,
            "score_margin" => self.score_margin = float(key, value)?,
            "motion_slack_factor" => self.motion_slack_factor = float(key, value)?,
            "occlusion_threshold" => self.occlusion_threshold = count(key, value)?,
            "appearance_rate" => self.appearance_rate = float(key, value)?,
            "vote_rate" => self.vote_rate = float(key, value)?,
            "persistence_rate" => self.persistence_rate = float(key, value)?,
            "min_persistence" => self.min_persistence = float(key, value)?,
            "structure_radius_factor" => self.structure_radius_factor = float(key, value)?,
            "superpixels_per_box" => self.superpixels_per_box = float(key, value)?,
            "model_capacity_factor" => self.model_capacity_factor = float(key, value)?,
            "fg_pool_cap" => self.fg_pool_cap = count(key, value)?,
            "bg_pool_cap" => self.bg_pool_cap = count(key, value)?,
            "compactness" => self.compactness = float(key, value)?,
            "foreground_overlap" => self.foreground_overlap = float(key, value)?,
            "search_window" => {
                self.search_window = match value {
                    "true" => true,
                    "false" => false,
                    _ => {
                        return Err(ConfigError::new(
                            key,
                            format!("expected true or false, got `{value}`"),
                        ))
                    }
                }
            }
            "max_keypoints" => self.max_keypoints = count(key, value)?,
            "predictive_cap" => {
                self.predictive_cap = if value == "none" {
                    None
                } else {
                    Some(float(key, value)?)
                }
            }
            _ => return Err(ConfigError::new(key, "unknown key")),
        }
        Ok(())
    }

    pub fn serialize(&self) -> String {
        let mut out = String::from("# tracker configuration\n");
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("color_threshold", self.color_threshold.to_string());
        kv("match_ratio", self.match_ratio.to_string());
        kv("score_margin", self.score_margin.to_string());
        kv("motion_slack_factor", self.motion_slack_factor.to_string());
        kv("occlusion_threshold", self.occlusion_threshold.to_string());
        kv("appearance_rate", self.appearance_rate.to_string());
        kv("vote_rate", self.vote_rate.to_string());
        kv("persistence_rate", self.persistence_rate.to_string());
        kv("min_persistence", self.min_persistence.to_string());
        kv("structure_radius_factor", self.structure_radius_factor.to_string());
        kv("superpixels_per_box", self.superpixels_per_box.to_string());
        kv("model_capacity_factor", self.model_capacity_factor.to_string());
        kv("fg_pool_cap", self.fg_pool_cap.to_string());
        kv("bg_pool_cap", self.bg_pool_cap.to_string());
        kv("compactness", self.compactness.to_string());
        kv("foreground_overlap", self.foreground_overlap.to_string());
        kv("search_window", self.search_window.to_string());
        kv("max_keypoints", self.max_keypoints.to_string());
        kv(
            "predictive_cap",
            self.predictive_cap.map_or("none".to_string(), |c| c.to_string()),
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN_DEFAULTS: &str = "\
# tracker configuration
color_threshold = 0.7
match_ratio = 0.75
score_margin = 1
motion_slack_factor = 4
occlusion_threshold = 3
appearance_rate = 0.1
vote_rate = 0.1
persistence_rate = 0.1
min_persistence = 0.1
structure_radius_factor = 2
superpixels_per_box = 30
model_capacity_factor = 3
fg_pool_cap = 1000
bg_pool_cap = 1000
compactness = 10
foreground_overlap = 0.6
search_window = false
max_keypoints = 2000
predictive_cap = none
";

    #[test]
    fn defaults_match_golden_file() {
        assert_eq!(TrackerConfig::default().serialize(), GOLDEN_DEFAULTS);
        assert!(TrackerConfig::default().validate().is_ok());
    }

    #[test]
    fn round_trip_is_identity() {
        let config = TrackerConfig {
            color_threshold: 0.65,
            occlusion_threshold: 5,
            search_window: true,
            predictive_cap: Some(50.0),
            ..TrackerConfig::default()
        };
        let parsed = TrackerConfig::parse(&config.serialize()).unwrap();
        assert_eq!(parsed, config);
        // And once more through text.
        assert_eq!(parsed.serialize(), config.serialize());
    }

    #[test]
    fn empty_input_yields_defaults() {
        assert_eq!(TrackerConfig::parse("").unwrap(), TrackerConfig::default());
        assert_eq!(
            TrackerConfig::parse("# just a comment\n\n").unwrap(),
            TrackerConfig::default()
        );
    }

    #[test]
    fn out_of_range_value_names_field_and_bound() {
        let err = TrackerConfig::parse("color_threshold = 1.5").unwrap_err();
        assert_eq!(err.field, "color_threshold");
        assert!(err.message.contains("(0, 1)"), "message: {}", err.message);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = TrackerConfig::parse("colour_threshold = 0.7").unwrap_err();
        assert_eq!(err.field, "colour_threshold");
        assert!(err.message.contains("unknown"));
    }

    #[test]
    fn malformed_line_is_rejected() {
        let err = TrackerConfig::parse("color_threshold 0.7").unwrap_err();
        assert!(err.message.contains("key = value"));
    }

    #[test]
    fn comments_and_overrides_apply() {
        let text = "color_threshold = 0.5 # gate\ncolor_threshold = 0.6\n";
        let c = TrackerConfig::parse(text).unwrap();
        assert_eq!(c.color_threshold, 0.6);
    }
}
