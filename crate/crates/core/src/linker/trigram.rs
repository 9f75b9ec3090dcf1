use serde::{Deserialize, Serialize};

/// Whether index keys and queries keep their letter case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CaseMode {
    #[default]
    Preserve,
    Fold,
}

impl CaseMode {
    pub fn tag(self) -> u8 {
        match self {
            CaseMode::Preserve => 0,
            CaseMode::Fold => 1,
        }
    }

    pub fn from_tag(t: u8) -> Option<Self> {
        match t {
            0 => Some(CaseMode::Preserve),
            1 => Some(CaseMode::Fold),
            _ => None,
        }
    }

    pub fn folds(self) -> bool {
        self == CaseMode::Fold
    }

    pub fn apply(self, s: &str) -> String {
        match self {
            CaseMode::Preserve => s.to_string(),
            CaseMode::Fold => s.to_lowercase(),
        }
    }
}

impl std::fmt::Display for CaseMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CaseMode::Preserve => "preserve",
            CaseMode::Fold => "fold",
        })
    }
}

/// Character trigrams of `^s$`, in order, with repeats.
pub fn trigrams(s: &str, case_mode: CaseMode) -> Vec<String> {
    let s = case_mode.apply(s);
    if s.is_empty() {
        return Vec::new();
    }
    let chars: Vec<char> = std::iter::once('^')
        .chain(s.chars())
        .chain(std::iter::once('$'))
        .collect();
    chars.windows(3).map(|w| w.iter().collect()).collect()
}
