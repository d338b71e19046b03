//! Protocol-semantics audit of a finished game transcript.

mod align;
mod curve;
mod inconsistency;
mod similarity;

pub use align::{align_attributes, greedy_assign, AlignmentMap, ALIGNMENT_TIE_RULE};
pub use curve::{success_curve, CurveSource};
pub use inconsistency::{inconsistency_of_sets, referential_inconsistency, ActivationSets, AttributeRi, RiReport};
pub use similarity::{category_order, gold_similarity, load_categories, SimilarityReport};
