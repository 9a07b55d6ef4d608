use serde::Serialize;

/// Which functional a report describes; they combine the kinetic parts
/// differently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergyKind {
    /// `K(U,U) + 2 K(U, complement) + P(U)`.
    Localized,
    /// `K(D, everything) + P(D)` over one fundamental domain.
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub kind: EnergyKind,
    pub kinetic_same: f64,
    pub kinetic_cross: f64,
    pub potential: f64,
    pub total: f64,
    pub tail_error: f64,
}

impl EnergyReport {
    pub fn new(
        kind: EnergyKind,
        kinetic_same: f64,
        kinetic_cross: f64,
        potential: f64,
        tail_error: f64,
    ) -> Self {
        let total = Self::combine(kind, kinetic_same, kinetic_cross, potential);
        Self {
            kind,
            kinetic_same,
            kinetic_cross,
            potential,
            total,
            tail_error,
        }
    }

    fn combine(kind: EnergyKind, same: f64, cross: f64, potential: f64) -> f64 {
        match kind {
            EnergyKind::Localized => same + 2.0 * cross + potential,
            EnergyKind::Periodic => same + cross + potential,
        }
    }

    /// True when the stored total agrees with its parts and nothing is negative.
    pub fn is_consistent(&self) -> bool {
        let t = Self::combine(self.kind, self.kinetic_same, self.kinetic_cross, self.potential);
        let parts_ok = [self.kinetic_same, self.kinetic_cross, self.potential, self.tail_error]
            .iter()
            .all(|&v| v >= -1e-12 * self.total.abs().max(1.0));
        parts_ok && (t - self.total).abs() <= 1e-12 * t.abs().max(1.0)
    }

    pub const CSV_HEADER: &'static str = "label,kinetic_same,kinetic_cross,potential,total,tail_error";

    pub fn csv_row(&self, label: &str) -> String {
        format!(
            "{label},{:e},{:e},{:e},{:e},{:e}",
            self.kinetic_same, self.kinetic_cross, self.potential, self.total, self.tail_error
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totals_follow_kind() {
        let l = EnergyReport::new(EnergyKind::Localized, 1.0, 2.0, 3.0, 0.0);
        assert_eq!(l.total, 8.0);
        let p = EnergyReport::new(EnergyKind::Periodic, 1.0, 2.0, 3.0, 0.0);
        assert_eq!(p.total, 6.0);
        assert!(l.is_consistent() && p.is_consistent());
        let mut bad = p.clone();
        bad.total = 7.0;
        assert!(!bad.is_consistent());
        assert_eq!(p.csv_row("x"), "x,1e0,2e0,3e0,6e0,0e0");
    }
}
