use std::fmt;

/// One of the 11 letter grades, A (highest) through F (lowest).
///
/// Variants are declared in ascending order so the derived `Ord`
/// matches the numeric order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Grade {
    F,
    D,
    DPlus,
    CMinus,
    C,
    CPlus,
    BMinus,
    B,
    BPlus,
    AMinus,
    A,
}

impl Grade {
    /// All grades in ascending numeric order.
    pub const ALL: [Grade; 11] = [
        Grade::F,
        Grade::D,
        Grade::DPlus,
        Grade::CMinus,
        Grade::C,
        Grade::CPlus,
        Grade::BMinus,
        Grade::B,
        Grade::BPlus,
        Grade::AMinus,
        Grade::A,
    ];

    /// Numeric grade on the 4-point scale. The letter<->numeric mapping is a
    /// bijection over the 11-value table.
    pub fn numeric(self) -> f64 {
        match self {
            Grade::A => 4.0,
            Grade::AMinus => 3.667,
            Grade::BPlus => 3.333,
            Grade::B => 3.0,
            Grade::BMinus => 2.667,
            Grade::CPlus => 2.333,
            Grade::C => 2.0,
            Grade::CMinus => 1.667,
            Grade::DPlus => 1.333,
            Grade::D => 1.0,
            Grade::F => 0.0,
        }
    }

    pub fn letter(self) -> &'static str {
        match self {
            Grade::A => "A",
            Grade::AMinus => "A-",
            Grade::BPlus => "B+",
            Grade::B => "B",
            Grade::BMinus => "B-",
            Grade::CPlus => "C+",
            Grade::C => "C",
            Grade::CMinus => "C-",
            Grade::DPlus => "D+",
            Grade::D => "D",
            Grade::F => "F",
        }
    }

    pub fn from_letter(s: &str) -> Option<Grade> {
        match s.trim() {
            "A" => Some(Grade::A),
            "A-" => Some(Grade::AMinus),
            "B+" => Some(Grade::BPlus),
            "B" => Some(Grade::B),
            "B-" => Some(Grade::BMinus),
            "C+" => Some(Grade::CPlus),
            "C" => Some(Grade::C),
            "C-" => Some(Grade::CMinus),
            "D+" => Some(Grade::DPlus),
            "D" => Some(Grade::D),
            "F" => Some(Grade::F),
            _ => None,
        }
    }

    /// Inverse of [`Grade::numeric`]; exact match against the table.
    pub fn from_numeric(x: f64) -> Option<Grade> {
        Grade::ALL.iter().copied().find(|g| g.numeric() == x)
    }

    /// Nearest letter grade to an arbitrary numeric value; ties resolve to
    /// the higher grade.
    pub fn nearest(x: f64) -> Grade {
        let mut best = Grade::F;
        let mut best_dist = f64::INFINITY;
        for g in Grade::ALL {
            let d = (g.numeric() - x).abs();
            if d < best_dist || (d == best_dist && g > best) {
                best = g;
                best_dist = d;
            }
        }
        best
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.letter())
    }
}
