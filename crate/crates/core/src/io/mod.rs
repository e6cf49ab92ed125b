//! Reading and writing models: JSON descriptions, CSV samples and OBJ meshes.

mod description;
mod mesh;

pub use description::{
    from_document, parse_description, parse_plan, serialize_description, to_document,
    DescriptionError, Document, Model, PlanDoc, PlanFile, PolesDoc, QuadricDoc, QuadricInfo,
    SegmentDoc, SegmentPlanDoc, SpaceDoc,
};
pub use mesh::{sample_curve, samples_to_csv, tessellate_surface, CurveSample, Mesh};
