//! Scalar-to-color mapping through piecewise-linear colormaps.

use std::sync::OnceLock;

use serde::Serialize;

pub type Rgb = [u8; 3];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColormapSpec {
    pub name: String,
    /// `(t, rgb)` sorted by `t`, first at 0 and last at 1.
    pub stops: Vec<(f64, Rgb)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ColormapError {
    #[error("colormap needs at least two control points")]
    TooFewStops,
    #[error("control points must be sorted and span [0, 1]")]
    BadPositions,
}

impl ColormapSpec {
    pub fn new(name: impl Into<String>, stops: Vec<(f64, Rgb)>) -> Result<Self, ColormapError> {
        if stops.len() < 2 {
            return Err(ColormapError::TooFewStops);
        }
        let sorted = stops.windows(2).all(|w| w[0].0 <= w[1].0);
        if !sorted || stops[0].0 != 0.0 || stops[stops.len() - 1].0 != 1.0 {
            return Err(ColormapError::BadPositions);
        }
        Ok(Self { name: name.into(), stops })
    }

    /// Evenly spaced stops from `#rrggbb` strings.
    fn from_hex(name: &str, hex: &[&str]) -> Self {
        let last = (hex.len() - 1) as f64;
        let stops = hex
            .iter()
            .enumerate()
            .map(|(i, h)| {
                let v = u32::from_str_radix(h.trim_start_matches('#'), 16).expect("valid hex color");
                (i as f64 / last, [(v >> 16) as u8, (v >> 8) as u8, v as u8])
            })
            .collect();
        Self::new(name, stops).expect("built-in colormap is valid")
    }
}

/// Piecewise-linear interpolation; `v` is clamped to [0, 1] and NaN maps
/// to the first color.
pub fn map_color(v: f64, cmap: &ColormapSpec) -> Rgb {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    let stops = &cmap.stops;
    let hi = stops.iter().position(|(t, _)| *t >= v).unwrap_or(stops.len() - 1);
    if hi == 0 {
        return stops[0].1;
    }
    let (t0, c0) = stops[hi - 1];
    let (t1, c1) = stops[hi];
    let w = if t1 > t0 { (v - t0) / (t1 - t0) } else { 1.0 };
    std::array::from_fn(|i| {
        let x = f64::from(c0[i]) + w * (f64::from(c1[i]) - f64::from(c0[i]));
        x.round().clamp(0.0, 255.0) as u8
    })
}

pub fn builtin_colormaps() -> &'static [ColormapSpec] {
    static REGISTRY: OnceLock<Vec<ColormapSpec>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        vec![
            ColormapSpec::from_hex("grayscale", &["#000000", "#ffffff"]),
            ColormapSpec::from_hex(
                "viridis",
                &["#440154", "#482878", "#3e4989", "#31688e", "#26828e", "#1f9e89", "#35b779", "#6ece58", "#b5de2b", "#fde725"],
            ),
            ColormapSpec::from_hex(
                "plasma",
                &["#0d0887", "#46039f", "#7201a8", "#9c179e", "#bd3786", "#d8576b", "#ed7953", "#fb9f3a", "#fdca26", "#f0f921"],
            ),
            ColormapSpec::from_hex(
                "inferno",
                &["#000004", "#1b0c41", "#4a0c6b", "#781c6d", "#a52c60", "#cf4446", "#ed6925", "#fb9b06", "#f7d13d", "#fcffa4"],
            ),
            ColormapSpec::from_hex(
                "magma",
                &["#000004", "#180f3d", "#440f76", "#721f81", "#9e2f7f", "#cd4071", "#f1605d", "#fd9668", "#feca8d", "#fcfdbf"],
            ),
            ColormapSpec::from_hex(
                "cividis",
                &["#00224e", "#123570", "#3b496c", "#575d6d", "#707173", "#8a8779", "#a69d75", "#c4b56c", "#e4cf5b", "#fee838"],
            ),
            ColormapSpec::from_hex("rainbow", &["#0000ff", "#00ffff", "#00ff00", "#ffff00", "#ff0000"]),
            ColormapSpec::from_hex("jet", &["#00007f", "#0000ff", "#007fff", "#00ffff", "#7fff7f", "#ffff00", "#ff7f00", "#ff0000", "#7f0000"]),
            ColormapSpec::from_hex("coolwarm", &["#3b4cc0", "#7b9ff9", "#c0d4f5", "#dddddd", "#f2cbb7", "#ee8468", "#b40426"]),
            ColormapSpec::from_hex(
                "rdbu",
                &["#67001f", "#b2182b", "#d6604d", "#f4a582", "#fddbc7", "#f7f7f7", "#d1e5f0", "#92c5de", "#4393c3", "#2166ac", "#053061"],
            ),
            ColormapSpec::from_hex("hot", &["#0b0000", "#ff0000", "#ffff00", "#ffffff"]),
            ColormapSpec::from_hex("blues", &["#f7fbff", "#c6dbef", "#6baed6", "#2171b5", "#08306b"]),
        ]
    })
}

pub fn colormap(name: &str) -> Option<&'static ColormapSpec> {
    builtin_colormaps().iter().find(|c| c.name == name)
}
