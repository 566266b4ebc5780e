use super::{NliBackend, ProbSimplex3};
use crate::text::normalized_token_set;
use crate::Result;

pub const OVERLAP_STUB_ID: &str = "stub:overlap";

/// Deterministic stand-in classifier: entailment iff at least half of the
/// hypothesis tokens occur in the premise, neutral otherwise.
///
/// With overlap `r`, an entailed pair gets `p(E) = (1 + r) / 2`; a neutral
/// pair gets `p(N) = (2 - r) / 2`. The remaining mass is split 2:1 between the
/// other two labels.
#[derive(Clone, Copy, Debug, Default)]
pub struct OverlapStub;

/// Fraction of distinct hypothesis tokens present in the premise.
pub fn token_overlap(premise: &str, hypothesis: &str) -> f64 {
    let h = normalized_token_set(hypothesis);
    if h.is_empty() {
        return 0.0;
    }
    let p = normalized_token_set(premise);
    h.iter().filter(|t| p.contains(*t)).count() as f64 / h.len() as f64
}

impl NliBackend for OverlapStub {
    fn backend_id(&self) -> &str {
        OVERLAP_STUB_ID
    }

    fn predict(&self, premise: &str, hypothesis: &str) -> Result<ProbSimplex3> {
        let r = token_overlap(premise, hypothesis);
        let (c, n, e) = if r >= 0.5 {
            let e = (1.0 + r) / 2.0;
            let rest = 1.0 - e;
            (rest / 3.0, rest * 2.0 / 3.0, e)
        } else {
            let n = (2.0 - r) / 2.0;
            let rest = 1.0 - n;
            (rest / 3.0, n, rest * 2.0 / 3.0)
        };
        ProbSimplex3::new(c, n, e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nli::{ClassifierHandle, NliLabel};

    #[test]
    fn overlap_fraction() {
        assert_eq!(token_overlap("I like dogs.", "i like cats"), 2.0 / 3.0);
        assert_eq!(token_overlap("abc", ""), 0.0);
    }

    // Hand evaluation of overlap >= 0.5 on ten pairs.
    #[test]
    fn ten_pair_fixture_matches_hand_labels() {
        use NliLabel::{Entailment as E, Neutral as N};
        let cases = [
            ("i like dogs", "i like dogs", E),              // 3/3
            ("i like dogs", "i hate cats", N),              // 1/3
            ("my mom is great", "my mom", E),               // 2/2
            ("my mom is great", "my dad", E),               // 1/2
            ("we went hiking", "i love swimming", N),       // 0/3
            ("i study law in school", "i study law", E),    // 3/3
            ("i study law in school", "i teach math", N),   // 1/3
            ("red cars are fast", "blue cars are slow", E), // 2/4
            ("red cars are fast", "green bikes rule ok", N),// 0/4
            ("tea", "tea or coffee please", N),             // 1/4
        ];
        let h = ClassifierHandle::overlap_stub();
        for (p, hyp, want) in cases {
            assert_eq!(h.predict_label(p, hyp).unwrap(), want, "{p} / {hyp}");
        }
    }

    #[test]
    fn confidence_levels() {
        let h = ClassifierHandle::overlap_stub();
        let full = h.classify("i like dogs", "i like dogs").unwrap();
        assert_eq!(full.entailment(), 1.0);
        let half = h.classify("my mom is great", "my dad").unwrap();
        assert!((half.entailment() - 0.75).abs() < 1e-12);
    }
}
