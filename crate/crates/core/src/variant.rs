use std::fmt;

use crate::error::{Error, Result};

/// Which subsequent-course outcomes a model consumes during training.
///
/// `Plus` uses only the good courses, `PlusMinus` uses good and bad courses
/// with opposite signs, and `PlusPlus` uses both without distinction
/// (the grade-unaware variation).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Plus,
    PlusMinus,
    PlusPlus,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Plus, Variant::PlusMinus, Variant::PlusPlus];

    /// Stable name used in config files and model file names.
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Plus => "plus",
            Variant::PlusMinus => "plusminus",
            Variant::PlusPlus => "plusplus",
        }
    }

    /// Conventional suffix used in reports, e.g. `svd(+-)`.
    pub fn suffix(self) -> &'static str {
        match self {
            Variant::Plus => "(+)",
            Variant::PlusMinus => "(+-)",
            Variant::PlusPlus => "(++)",
        }
    }

    pub fn parse(s: &str) -> Result<Variant> {
        match s.trim() {
            "plus" | "+" => Ok(Variant::Plus),
            "plusminus" | "+-" => Ok(Variant::PlusMinus),
            "plusplus" | "++" => Ok(Variant::PlusPlus),
            other => Err(Error::Config(format!(
                "unknown variant {other:?} (expected plus, plusminus or plusplus)"
            ))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
