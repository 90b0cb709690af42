//! The action table.

use std::fmt;

macro_rules! actions {
    ($($variant:ident => $name:literal, $params:literal;)*) => {
        /// One entry of the action table.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Action {
            $($variant,)*
        }

        impl Action {
            pub const ALL: [Action; 45] = [$(Action::$variant,)*];

            /// Rule token spelling.
            pub fn name(self) -> &'static str {
                match self {
                    $(Action::$variant => $name,)*
                }
            }

            /// Number of parameters the action takes.
            pub fn arity(self) -> usize {
                match self {
                    $(Action::$variant => $params,)*
                }
            }
        }
    };
}

actions! {
    Constant => "ConstantRule", 0;
    Power => "PowerRule", 0;
    Exp => "ExpRule", 0;
    ConstantTimes => "ConstantTimesRule", 1;
    Reciprocal => "ReciprocalRule", 0;
    NestedPow => "NestedPowRule", 0;
    Arcsin => "ArcsinRule", 0;
    Arcsinh => "ArcsinhRule", 0;
    Sin => "SinRule", 0;
    Cos => "CosRule", 0;
    SecTan => "SecTanRule", 0;
    CscCot => "CscCotRule", 0;
    Sec2 => "Sec2Rule", 0;
    Csc2 => "Csc2Rule", 0;
    Sinh => "SinhRule", 0;
    Cosh => "CoshRule", 0;
    Arctan => "ArctanRule", 0;
    ReciprocalSqrtQuadratic => "ReciprocalSqrtQuadraticRule", 0;
    Ci => "CiRule", 0;
    Ei => "EiRule", 0;
    UpperGamma => "UpperGammaRule", 0;
    Add => "AddRule", 0;
    U => "URule", 2;
    Parts => "PartsRule", 2;
    PartialFractions => "PartialFractionsRule", 0;
    Cancel => "CancelRule", 0;
    Expand => "ExpandRule", 0;
    Tan1 => "Tan1Rule", 0;
    Cot1 => "Cot1Rule", 0;
    Cos1 => "Cos1Rule", 0;
    Sec1 => "Sec1Rule", 0;
    Csc1 => "Csc1Rule", 0;
    Tanh1 => "Tanh1Rule", 0;
    Coth1 => "Coth1Rule", 0;
    Sech1 => "Sech1Rule", 0;
    Csch1 => "Csch1Rule", 0;
    TrigExpand => "TrigExpandRule", 0;
    SinCosEven => "SinCosEvenRule", 0;
    SinOddCos => "SinOddCosRule", 0;
    CosOddSin => "CosOddSinRule", 0;
    SecEvenTan => "SecEvenTanRule", 0;
    TanOddSec => "TanOddSecRule", 0;
    Tan2 => "Tan2Rule", 0;
    CotCscEven => "CotCscEvenRule", 0;
    CotOddCsc => "CotOddCscRule", 0;
}

impl Action {
    /// Parse a rule token. The `...Method` spellings are accepted as
    /// aliases, as is `UMethod` for `URule`.
    pub fn from_name(s: &str) -> Option<Action> {
        if let Some(a) = Action::ALL.into_iter().find(|a| a.name() == s) {
            return Some(a);
        }
        let stem = s.strip_suffix("Method")?;
        Action::ALL
            .into_iter()
            .find(|a| a.name().strip_suffix("Rule") == Some(stem))
    }

    /// Table-lookup rules that close an integral directly.
    pub fn is_table(self) -> bool {
        (self as usize) <= (Action::UpperGamma as usize) && self != Action::ConstantTimes
    }

    /// Rules that rewrite a function node rather than an integral.
    pub fn targets_function(self) -> bool {
        use Action::*;
        matches!(
            self,
            Tan1 | Cot1 | Cos1 | Sec1 | Csc1 | Tanh1 | Coth1 | Sech1 | Csch1 | TrigExpand
        )
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
