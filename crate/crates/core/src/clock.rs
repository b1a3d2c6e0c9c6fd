use crate::error::{Error, Result};

/// Discrete step counter with scale `n`; time is `t = i / n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimClock {
    step: u64,
    n: u64,
    horizon: u64,
}

impl SimClock {
    pub fn new(n: u64, horizon: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("clock scale n must be positive".into()));
        }
        Ok(Self { step: 0, n, horizon })
    }

    /// Clock positioned at `step`, for evaluating envelopes at arbitrary times.
    pub fn at(n: u64, step: u64, horizon: u64) -> Result<Self> {
        let mut clock = Self::new(n, horizon)?;
        if step > horizon {
            return Err(Error::Config(format!("step {step} beyond horizon {horizon}")));
        }
        clock.step = step;
        Ok(clock)
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn t(&self) -> f64 {
        self.step as f64 / self.n as f64
    }

    pub fn t_at(&self, step: u64) -> f64 {
        step as f64 / self.n as f64
    }

    pub fn advance(&mut self) -> Result<()> {
        if self.step >= self.horizon {
            return Err(Error::Config(format!("clock horizon {} exceeded", self.horizon)));
        }
        self.step += 1;
        Ok(())
    }
}
