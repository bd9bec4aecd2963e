//! First-order discrete-time high-pass and low-pass filters.
//!
//! Both are backward-Euler discretizations of the continuous prototypes
//! `s / (s + wc)` and `wc / (s + wc)`:
//!
//! ```text
//! high-pass: y[t] = a * (y[t-1] + x[t] - x[t-1]),   a = 1 / (1 + wc*dt)
//! low-pass:  y[t] = y[t-1] + g * (x[t] - y[t-1]),   g = wc*dt / (1 + wc*dt)
//! ```
//!
//! The high-pass starts with a zero output on its first sample; the low-pass
//! passes its first sample straight through.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    HighPass,
    LowPass,
}

/// Memory of a single first-order filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterState {
    kind: FilterKind,
    cutoff: f64,
    dt: f64,
    prev_input: f64,
    prev_output: f64,
    initialized: bool,
}

impl FilterState {
    pub fn new(kind: FilterKind, cutoff: f64, dt: f64) -> Result<Self> {
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::InvalidParam(format!("filter cutoff must be > 0, got {cutoff}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParam(format!("filter dt must be > 0, got {dt}")));
        }
        Ok(Self {
            kind,
            cutoff,
            dt,
            prev_input: 0.0,
            prev_output: 0.0,
            initialized: false,
        })
    }

    pub fn high_pass(cutoff: f64, dt: f64) -> Result<Self> {
        Self::new(FilterKind::HighPass, cutoff, dt)
    }

    pub fn low_pass(cutoff: f64, dt: f64) -> Result<Self> {
        Self::new(FilterKind::LowPass, cutoff, dt)
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    pub fn prev_output(&self) -> f64 {
        self.prev_output
    }

    /// Pole of the recurrence: `a` for the high-pass, `1 - g` for the low-pass.
    pub fn pole(&self) -> f64 {
        1.0 / (1.0 + self.cutoff * self.dt)
    }

    /// Forget all memory; the next sample is treated as the first one.
    pub fn reset(&mut self) {
        self.prev_input = 0.0;
        self.prev_output = 0.0;
        self.initialized = false;
    }

    /// Advance by one sample according to the filter kind.
    pub fn step(&mut self, x: f64) -> Result<f64> {
        match self.kind {
            FilterKind::HighPass => highpass_step(self, x),
            FilterKind::LowPass => lowpass_step(self, x),
        }
    }
}

/// One high-pass sample. Errors on a non-finite input or a low-pass state.
pub fn highpass_step(f: &mut FilterState, x: f64) -> Result<f64> {
    if f.kind != FilterKind::HighPass {
        return Err(Error::InvalidParam("highpass_step on a low-pass filter".into()));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite { context: "high-pass input", value: x });
    }
    if !f.initialized {
        f.prev_input = x;
        f.prev_output = 0.0;
        f.initialized = true;
        return Ok(0.0);
    }
    let a = f.pole();
    let y = a * (f.prev_output + x - f.prev_input);
    f.prev_input = x;
    f.prev_output = y;
    Ok(y)
}

/// One low-pass sample. Errors on a non-finite input or a high-pass state.
pub fn lowpass_step(f: &mut FilterState, x: f64) -> Result<f64> {
    if f.kind != FilterKind::LowPass {
        return Err(Error::InvalidParam("lowpass_step on a high-pass filter".into()));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite { context: "low-pass input", value: x });
    }
    if !f.initialized {
        f.prev_input = x;
        f.prev_output = x;
        f.initialized = true;
        return Ok(x);
    }
    let wd = f.cutoff * f.dt;
    let g = wd / (1.0 + wd);
    let y = f.prev_output + g * (x - f.prev_output);
    f.prev_input = x;
    f.prev_output = y;
    Ok(y)
}
