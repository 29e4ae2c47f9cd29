//! Compression of per-interval series into twelve statistical measures each.

mod decompose;
mod measures;

use serde::{Deserialize, Serialize};

pub use decompose::{centered_moving_average, decompose, stl_strengths, Decomposition};
pub use measures::{
    acf1, crossing_points, flat_spots, linearity_curvature, lumpiness, mean_var, spectral_entropy,
    spikiness,
};

use crate::registry::{MEASURE_COUNT, TS_ARITY};
use crate::scalar::Scalar;
use crate::tsbuild::TimeSeriesPanel;

/// Measure names in canonical order.
pub const MEASURE_NAMES: [&str; MEASURE_COUNT] = [
    "mean",
    "var",
    "acf1",
    "linearity",
    "curvature",
    "trend",
    "season",
    "entropy",
    "lumpiness",
    "spikiness",
    "fspots",
    "cpoints",
];

/// Window width for lumpiness.
pub const LUMPINESS_WIDTH: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureSet<F> {
    pub mean: F,
    pub var: F,
    pub acf1: F,
    pub linearity: F,
    pub curvature: F,
    pub trend: F,
    pub season: F,
    pub entropy: F,
    pub lumpiness: F,
    pub spikiness: F,
    pub fspots: usize,
    pub cpoints: usize,
}

impl<F: Scalar> MeasureSet<F> {
    /// All twelve measures of one series. Lumpiness and spikiness are computed on the
    /// decomposition remainder.
    pub fn of(x: &[F], period: usize) -> Self {
        let (mean, var) = mean_var(x);
        let (linearity, curvature) = linearity_curvature(x);
        let d = decompose(x, period);
        let (trend, season) = decompose::strengths_of(x, &d);
        MeasureSet {
            mean,
            var,
            acf1: acf1(x),
            linearity,
            curvature,
            trend,
            season,
            entropy: spectral_entropy(x),
            lumpiness: lumpiness(&d.remainder, LUMPINESS_WIDTH),
            spikiness: measures::spikiness_of_remainder(&d.remainder),
            fspots: flat_spots(x),
            cpoints: crossing_points(x),
        }
    }

    pub fn to_array(&self) -> [F; MEASURE_COUNT] {
        [
            self.mean,
            self.var,
            self.acf1,
            self.linearity,
            self.curvature,
            self.trend,
            self.season,
            self.entropy,
            self.lumpiness,
            self.spikiness,
            F::from_usize_lossy(self.fspots),
            F::from_usize_lossy(self.cpoints),
        ]
    }
}

/// `43 x 12` values, series-major, measure-minor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsFeatureBlock<F> {
    pub values: Vec<F>,
}

/// Applies every measure to every series of the panel.
pub fn compress_panel<F: Scalar>(panel: &TimeSeriesPanel<F>, period: usize) -> TsFeatureBlock<F> {
    let mut values = Vec::with_capacity(TS_ARITY);
    for series in &panel.series {
        values.extend(MeasureSet::of(series, period).to_array());
    }
    debug_assert_eq!(values.len(), TS_ARITY);
    TsFeatureBlock { values }
}
