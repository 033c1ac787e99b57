use super::sample::{Sample, N_CHANNELS};
use crate::error::{Error, Result};
use crate::kv::{self, KvMap};

/// Inclusive value range of one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    fn empty() -> Self {
        Self {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    fn include(&mut self, v: f64) {
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }

    /// Maps `[min, max]` onto `[0, 1]`; a degenerate range maps everything to 0.
    pub fn apply(&self, v: f64) -> f64 {
        let span = self.span();
        if span > 0.0 {
            (v - self.min) / span
        } else {
            0.0
        }
    }

    pub fn invert(&self, v: f64) -> f64 {
        self.min + v * self.span()
    }
}

/// Per-channel min-max scaling fitted on training samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub x: [Range; N_CHANNELS],
    pub y: Range,
}

impl Normalizer {
    pub fn fit<'a>(samples: impl IntoIterator<Item = &'a Sample>) -> Result<Self> {
        let mut x = [Range::empty(); N_CHANNELS];
        let mut y = Range::empty();
        let mut count = 0usize;
        for s in samples {
            let n = s.y.len();
            if s.x.len() != N_CHANNELS * n {
                return Err(Error::Contract(format!(
                    "sample of case {} has {} features for {n} pixels",
                    s.case_id,
                    s.x.len()
                )));
            }
            for (c, r) in x.iter_mut().enumerate() {
                s.x[c * n..(c + 1) * n].iter().for_each(|&v| r.include(v as f64));
            }
            s.y.iter().for_each(|&v| y.include(v as f64));
            count += 1;
        }
        if count == 0 {
            return Err(Error::Contract("cannot fit a normalizer on an empty training set".into()));
        }
        let n = Self { x, y };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |r: &Range| r.min.is_finite() && r.max.is_finite() && r.min <= r.max;
        if self.x.iter().all(ok) && ok(&self.y) {
            Ok(())
        } else {
            Err(Error::Numerical("normalizer statistics are not finite".into()))
        }
    }

    /// Normalizes a `[5 × pixels]` feature block in place.
    pub fn apply_x(&self, x: &mut [f32]) {
        let n = x.len() / N_CHANNELS;
        for (c, chunk) in x.chunks_mut(n).enumerate() {
            self.apply_x_channel(c, chunk);
        }
    }

    /// Normalizes the pixels of channel `c` in place.
    pub fn apply_x_channel(&self, c: usize, values: &mut [f32]) {
        let r = self.x[c];
        values.iter_mut().for_each(|v| *v = r.apply(*v as f64) as f32);
    }

    pub fn apply_y(&self, y: &mut [f32]) {
        y.iter_mut().for_each(|v| *v = self.y.apply(*v as f64) as f32);
    }

    pub fn invert_y(&self, y: &mut [f32]) {
        y.iter_mut().for_each(|v| *v = self.y.invert(*v as f64) as f32);
    }

    /// Returns a normalized copy of a sample.
    pub fn normalized(&self, s: &Sample) -> Sample {
        let mut out = s.clone();
        self.apply_x(&mut out.x);
        self.apply_y(&mut out.y);
        out
    }

    /// Writes the statistics under `prefix`, using shortest round-trip decimal text.
    pub fn to_kv(&self, prefix: &str, map: &mut KvMap) {
        for (c, r) in self.x.iter().enumerate() {
            map.insert(format!("{prefix}x{c}.min"), r.min.to_string());
            map.insert(format!("{prefix}x{c}.max"), r.max.to_string());
        }
        map.insert(format!("{prefix}y.min"), self.y.min.to_string());
        map.insert(format!("{prefix}y.max"), self.y.max.to_string());
    }

    pub fn from_kv(prefix: &str, map: &KvMap) -> Result<Self> {
        let range = |name: &str| -> Result<Range> {
            Ok(Range {
                min: kv::get(map, &format!("{prefix}{name}.min"))?,
                max: kv::get(map, &format!("{prefix}{name}.max"))?,
            })
        };
        let mut x = [Range::empty(); N_CHANNELS];
        for (c, r) in x.iter_mut().enumerate() {
            *r = range(&format!("x{c}"))?;
        }
        let n = Self { x, y: range("y")? };
        n.validate()?;
        Ok(n)
    }
}
