use std::collections::BTreeMap;
use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{invalid, Result};

/// Second trace sampled on the inner boundary of the band. Samples are
/// grouped in segments (one per side of the domain); `t` is the
/// tangential coordinate along the segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub segment: usize,
    pub t: f64,
    pub value: f64,
}

/// Boundary location, in the same coordinates as [`TraceSample`], at which
/// an extended value is needed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceTarget {
    pub segment: usize,
    pub t: f64,
}

/// Extends inner-band samples to the boundary.
pub trait TraceExtension: Send + Sync + Debug {
    fn name(&self) -> &'static str;
    /// One value per target. `samples` is never empty.
    fn extend(&self, samples: &[TraceSample], targets: &[TraceTarget]) -> Vec<f64>;
}

fn segment_samples(samples: &[TraceSample], segment: usize) -> Vec<TraceSample> {
    let mut own: Vec<TraceSample> = samples
        .iter()
        .filter(|s| s.segment == segment)
        .copied()
        .collect();
    if own.is_empty() {
        own = samples.to_vec();
    }
    own.sort_by(|a, b| a.t.total_cmp(&b.t));
    own
}

/// Value of the sample closest along the segment.
#[derive(Debug, Clone, Copy, Default)]
pub struct NearestInnerSample;

impl TraceExtension for NearestInnerSample {
    fn name(&self) -> &'static str {
        "nearest-inner-sample"
    }

    fn extend(&self, samples: &[TraceSample], targets: &[TraceTarget]) -> Vec<f64> {
        targets
            .iter()
            .map(|tg| {
                let own = segment_samples(samples, tg.segment);
                own.iter()
                    .min_by(|a, b| (a.t - tg.t).abs().total_cmp(&(b.t - tg.t).abs()))
                    .map(|s| s.value)
                    .unwrap_or(f64::NAN)
            })
            .collect()
    }
}

/// Piecewise linear interpolation of the samples along the segment,
/// constant beyond the first and last sample. Each boundary point takes the
/// value at the foot of its inward normal.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearAlongNormal;

impl TraceExtension for LinearAlongNormal {
    fn name(&self) -> &'static str {
        "linear-along-normal"
    }

    fn extend(&self, samples: &[TraceSample], targets: &[TraceTarget]) -> Vec<f64> {
        targets
            .iter()
            .map(|tg| {
                let own = segment_samples(samples, tg.segment);
                let (first, last) = (own[0], own[own.len() - 1]);
                if tg.t <= first.t {
                    return first.value;
                }
                if tg.t >= last.t {
                    return last.value;
                }
                let k = own.partition_point(|s| s.t <= tg.t);
                let (a, b) = (own[k - 1], own[k]);
                if b.t == a.t {
                    return a.value;
                }
                let w = (tg.t - a.t) / (b.t - a.t);
                (1.0 - w) * a.value + w * b.value
            })
            .collect()
    }
}

/// The largest sample everywhere.
#[derive(Debug, Clone, Copy, Default)]
pub struct MaxConstant;

impl TraceExtension for MaxConstant {
    fn name(&self) -> &'static str {
        "max-constant"
    }

    fn extend(&self, samples: &[TraceSample], targets: &[TraceTarget]) -> Vec<f64> {
        let m = samples
            .iter()
            .fold(f64::NEG_INFINITY, |m, s| m.max(s.value));
        vec![m; targets.len()]
    }
}

pub struct ExtensionRegistry {
    modes: BTreeMap<&'static str, Arc<dyn TraceExtension>>,
}

impl Default for ExtensionRegistry {
    fn default() -> Self {
        let mut r = ExtensionRegistry {
            modes: BTreeMap::new(),
        };
        r.register(Arc::new(NearestInnerSample));
        r.register(Arc::new(LinearAlongNormal));
        r.register(Arc::new(MaxConstant));
        r
    }
}

impl ExtensionRegistry {
    pub fn register(&mut self, mode: Arc<dyn TraceExtension>) {
        self.modes.insert(mode.name(), mode);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.modes.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn TraceExtension>> {
        match self.modes.get(name) {
            Some(m) => Ok(m.clone()),
            None => invalid(format!(
                "unknown extension mode {name:?}; available: {}",
                self.names().join(", ")
            )),
        }
    }
}
