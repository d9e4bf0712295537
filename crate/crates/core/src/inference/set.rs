use core::fmt;

/// The possible shapes of the score confidence set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConfidenceSet {
    FiniteInterval {
        lo: f64,
        hi: f64,
    },
    /// `(-inf, left_hi] U [right_lo, inf)`.
    TwoRays {
        left_hi: f64,
        right_lo: f64,
    },
    EmptySet,
    WholeLine,
    /// `(-inf, hi]`.
    LeftRay {
        hi: f64,
    },
    /// `[lo, inf)`.
    RightRay {
        lo: f64,
    },
    Point(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SetTag {
    FiniteInterval,
    TwoRays,
    EmptySet,
    WholeLine,
    LeftRay,
    RightRay,
    Point,
}

impl SetTag {
    pub const ALL: [SetTag; 7] = [
        SetTag::FiniteInterval,
        SetTag::TwoRays,
        SetTag::EmptySet,
        SetTag::WholeLine,
        SetTag::LeftRay,
        SetTag::RightRay,
        SetTag::Point,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SetTag::FiniteInterval => "finite_interval",
            SetTag::TwoRays => "two_rays",
            SetTag::EmptySet => "empty",
            SetTag::WholeLine => "whole_line",
            SetTag::LeftRay => "left_ray",
            SetTag::RightRay => "right_ray",
            SetTag::Point => "point",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        SetTag::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

impl fmt::Display for SetTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl ConfidenceSet {
    pub fn tag(&self) -> SetTag {
        match self {
            ConfidenceSet::FiniteInterval { .. } => SetTag::FiniteInterval,
            ConfidenceSet::TwoRays { .. } => SetTag::TwoRays,
            ConfidenceSet::EmptySet => SetTag::EmptySet,
            ConfidenceSet::WholeLine => SetTag::WholeLine,
            ConfidenceSet::LeftRay { .. } => SetTag::LeftRay,
            ConfidenceSet::RightRay { .. } => SetTag::RightRay,
            ConfidenceSet::Point(_) => SetTag::Point,
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            ConfidenceSet::FiniteInterval { lo, hi } => hi - lo,
            ConfidenceSet::EmptySet | ConfidenceSet::Point(_) => 0.0,
            _ => f64::INFINITY,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.diameter().is_finite()
    }

    pub fn contains(&self, theta: f64) -> bool {
        match *self {
            ConfidenceSet::FiniteInterval { lo, hi } => lo <= theta && theta <= hi,
            ConfidenceSet::TwoRays { left_hi, right_lo } => theta <= left_hi || theta >= right_lo,
            ConfidenceSet::EmptySet => false,
            ConfidenceSet::WholeLine => true,
            ConfidenceSet::LeftRay { hi } => theta <= hi,
            ConfidenceSet::RightRay { lo } => theta >= lo,
            ConfidenceSet::Point(v) => theta == v,
        }
    }

    /// `(lower, upper)` columns for tabular output. For two rays these are the
    /// inner endpoints `left_hi`, `right_lo`; missing ends are `-inf`/`+inf`;
    /// the empty set is `(NaN, NaN)`.
    pub fn endpoints(&self) -> (f64, f64) {
        match *self {
            ConfidenceSet::FiniteInterval { lo, hi } => (lo, hi),
            ConfidenceSet::TwoRays { left_hi, right_lo } => (left_hi, right_lo),
            ConfidenceSet::EmptySet => (f64::NAN, f64::NAN),
            ConfidenceSet::WholeLine => (f64::NEG_INFINITY, f64::INFINITY),
            ConfidenceSet::LeftRay { hi } => (f64::NEG_INFINITY, hi),
            ConfidenceSet::RightRay { lo } => (lo, f64::INFINITY),
            ConfidenceSet::Point(v) => (v, v),
        }
    }

    /// Rebuild a set from its tag and [`endpoints`](Self::endpoints).
    pub fn from_parts(tag: SetTag, lo: f64, hi: f64) -> Self {
        match tag {
            SetTag::FiniteInterval => ConfidenceSet::FiniteInterval { lo, hi },
            SetTag::TwoRays => ConfidenceSet::TwoRays {
                left_hi: lo,
                right_lo: hi,
            },
            SetTag::EmptySet => ConfidenceSet::EmptySet,
            SetTag::WholeLine => ConfidenceSet::WholeLine,
            SetTag::LeftRay => ConfidenceSet::LeftRay { hi },
            SetTag::RightRay => ConfidenceSet::RightRay { lo },
            SetTag::Point => ConfidenceSet::Point(lo),
        }
    }
}

impl fmt::Display for ConfidenceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ConfidenceSet::FiniteInterval { lo, hi } => write!(f, "[{lo}, {hi}]"),
            ConfidenceSet::TwoRays { left_hi, right_lo } => {
                write!(f, "(-inf, {left_hi}] U [{right_lo}, inf)")
            }
            ConfidenceSet::EmptySet => f.write_str("{}"),
            ConfidenceSet::WholeLine => f.write_str("(-inf, inf)"),
            ConfidenceSet::LeftRay { hi } => write!(f, "(-inf, {hi}]"),
            ConfidenceSet::RightRay { lo } => write!(f, "[{lo}, inf)"),
            ConfidenceSet::Point(v) => write!(f, "{{{v}}}"),
        }
    }
}
