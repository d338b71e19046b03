//! Scenes of (referent, context) objects with gold-attribute annotations.
//!
//! Synthetic Shapes scenes are generated here; real-image scenes enter
//! through [`load_feature_file`].

mod io;
mod scene;
mod schema;
mod shapes;
mod split;

pub use io::{load_feature_file, save_feature_file, save_text_file, FEATURE_FILE_MAGIC, FEATURE_FILE_VERSION};
pub use scene::{gold_attributes, AttributeSet, ObjectId, ObjectSpec, Scene, SceneSet, Split};
pub use schema::{AttributeGroup, AttributeSchema};
pub use shapes::{attributes_of, generate_shapes, FeatureMode, ShapesConfig};
pub use split::split;
