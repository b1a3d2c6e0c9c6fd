/// One recorded sample of a tracked variable, with its envelope band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub step: u64,
    pub value: f64,
    /// `scale * x(t)`.
    pub reference: f64,
    pub lo: f64,
    pub hi: f64,
    /// Exact conditional drift `E[value(step + 1) - value(step) | state]`, when known.
    pub drift: Option<f64>,
}

/// Per-step history of one tracked variable.
///
/// Every step must be observed in order. Steps that are multiples of the
/// stride are stored; `seal` stores the final step regardless. With
/// stride 1 the stored history has no gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedSeries {
    id: String,
    stride: u64,
    points: Vec<SeriesPoint>,
    last: Option<SeriesPoint>,
}

impl TrackedSeries {
    pub fn new(id: impl Into<String>, stride: u64) -> Self {
        Self {
            id: id.into(),
            stride: stride.max(1),
            points: Vec::new(),
            last: None,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn stride(&self) -> u64 {
        self.stride
    }

    pub fn points(&self) -> &[SeriesPoint] {
        &self.points
    }

    pub fn last_value(&self) -> Option<f64> {
        self.last.map(|p| p.value)
    }

    pub fn last_step(&self) -> Option<u64> {
        self.last.map(|p| p.step)
    }

    pub fn last_point(&self) -> Option<&SeriesPoint> {
        self.last.as_ref()
    }

    /// Value-only observation (reference and band left at zero).
    pub fn record(&mut self, step: u64, value: f64) {
        self.observe(SeriesPoint {
            step,
            value,
            reference: 0.0,
            lo: 0.0,
            hi: 0.0,
            drift: None,
        });
    }

    #[inline]
    pub fn observe(&mut self, point: SeriesPoint) {
        debug_assert!(
            match self.last {
                Some(prev) => point.step == prev.step + 1,
                None => point.step == 0,
            },
            "series {} observed out of order",
            self.id
        );
        if point.step.is_multiple_of(self.stride) {
            self.points.push(point);
        }
        self.last = Some(point);
    }

    /// Stores the most recent observation if the stride skipped it.
    pub fn seal(&mut self) {
        if let Some(last) = self.last {
            if self.points.last().map(|p| p.step) != Some(last.step) {
                self.points.push(last);
            }
        }
    }

    /// True when the stored history covers every step from 0 to the last.
    pub fn is_contiguous(&self) -> bool {
        self.points.iter().enumerate().all(|(i, p)| p.step == i as u64)
            && self.last_step().is_none_or(|s| s + 1 == self.points.len() as u64)
    }
}
