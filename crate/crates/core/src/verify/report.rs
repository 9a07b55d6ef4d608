use serde::Serialize;

/// Outcome of one numerical check.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub check: String,
    pub passed: bool,
    /// The check's preconditions were not met; `passed` is then true.
    pub skipped: bool,
    pub tolerance: f64,
    pub measured: Vec<(String, f64)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub artifacts: Vec<String>,
}

impl VerificationReport {
    pub fn new(check: &str, tolerance: f64) -> Self {
        Self {
            check: check.to_string(),
            passed: true,
            skipped: false,
            tolerance,
            measured: Vec::new(),
            header: Vec::new(),
            rows: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn measure(&mut self, name: &str, value: f64) {
        self.measured.push((name.to_string(), value));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.measured.iter().find(|(k, _)| k == name).map(|&(_, v)| v)
    }

    pub fn skip(mut self, why: &str) -> Self {
        self.skipped = true;
        self.passed = true;
        self.header = vec!["skipped".into()];
        self.rows = vec![vec![why.to_string()]];
        self
    }

    /// Table rows if any, otherwise one `name,value` row per measurement.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if self.rows.is_empty() {
            out.push_str("name,value\n");
            for (k, v) in &self.measured {
                out.push_str(&format!("{k},{v:e}\n"));
            }
        } else {
            out.push_str(&self.header.join(","));
            out.push('\n');
            for r in &self.rows {
                out.push_str(&r.join(","));
                out.push('\n');
            }
        }
        out
    }

    pub fn summary(&self) -> String {
        let status = if self.skipped {
            "SKIP"
        } else if self.passed {
            "PASS"
        } else {
            "FAIL"
        };
        let parts: Vec<String> = self
            .measured
            .iter()
            .map(|(k, v)| format!("{k}={v:.4e}"))
            .collect();
        format!("{status} {} (tol {:.1e}) {}", self.check, self.tolerance, parts.join(" "))
    }
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 1.5 * v - 2.0).collect();
        let (a, b) = linear_fit(&x, &y);
        assert!((a - 1.5).abs() < 1e-14 && (b + 2.0).abs() < 1e-14);
    }

    #[test]
    fn csv_falls_back_to_measurements() {
        let mut r = VerificationReport::new("x", 1e-6);
        r.measure("a", 2.0);
        assert_eq!(r.to_csv(), "name,value\na,2e0\n");
        assert!(r.summary().starts_with("PASS x"));
        let s = r.clone().skip("nothing to do");
        assert!(s.skipped && s.passed);
    }
}
