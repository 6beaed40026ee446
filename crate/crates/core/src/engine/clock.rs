use crate::time::{Duration, SimTime};

/// Integer tick counter. Time is always `tick * dt`, never accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationClock {
    pub tick: u64,
    pub dt: Duration,
    pub update_interval: Duration,
    pub end: SimTime,
}

impl SimulationClock {
    pub fn new(dt: Duration, update_interval: Duration, end: Duration) -> Self {
        SimulationClock {
            tick: 0,
            dt,
            update_interval,
            end: SimTime::ZERO.add(end),
        }
    }

    pub fn now(&self) -> SimTime {
        SimTime::from_millis(self.tick * self.dt.millis())
    }

    pub fn total_ticks(&self) -> u64 {
        self.end.millis() / self.dt.millis()
    }

    pub fn finished(&self) -> bool {
        self.tick >= self.total_ticks()
    }

    pub fn advance(&mut self) -> SimTime {
        self.tick += 1;
        self.now()
    }

    /// Whether the RSSI window spans a whole number of ticks.
    pub fn aligned(&self) -> bool {
        self.update_interval.millis() % self.dt.millis() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_drift_over_long_runs() {
        let mut c = SimulationClock::new(
            Duration::from_millis(100),
            Duration::from_millis(250),
            Duration::from_millis(7_200_000),
        );
        assert_eq!(c.total_ticks(), 72_000);
        assert!(!c.aligned());
        while !c.finished() {
            c.advance();
        }
        assert_eq!(c.now(), c.end);
    }
}
