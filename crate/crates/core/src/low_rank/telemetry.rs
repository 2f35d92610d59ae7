use std::fmt::Write;

/// Per-round counters of a maintainer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Telemetry {
    entries: Vec<(usize, &'static str, u64)>,
}

impl Telemetry {
    pub fn record(&mut self, round: usize, name: &'static str, value: u64) {
        self.entries.push((round, name, value));
    }

    pub fn get(&self, round: usize, name: &str) -> Option<u64> {
        self.entries.iter().find(|e| e.0 == round && e.1 == name).map(|e| e.2)
    }

    /// Sum of a counter over all rounds.
    pub fn total(&self, name: &str) -> u64 {
        self.entries.iter().filter(|e| e.1 == name).map(|e| e.2).sum()
    }

    /// Flat `round,counter,value` lines.
    pub fn report(&self) -> String {
        let mut s = String::from("round,counter,value\n");
        for (r, n, v) in &self.entries {
            let _ = writeln!(s, "{r},{n},{v}");
        }
        s
    }
}
