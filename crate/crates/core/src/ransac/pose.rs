use super::{estimate_fundamental, EpipolarModel, EstimationError, RansacConfig};
use crate::geometry::{
    compose_essential, decompose_essential, select_cheirality, CameraModel, Correspondence, GeometryError,
    RelativePose,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PoseEstimate {
    pub pose: RelativePose,
    pub model: EpipolarModel,
    /// Inliers triangulated in front of both cameras under the chosen pose.
    pub cheirality_passing: usize,
}

/// Full stereo chain: robust `F`, then `E = Kj^T F Ki`, then the cheirality vote
/// over the inliers in normalized coordinates.
pub fn estimate_pose_from_matches(
    matches: &[Correspondence],
    cam_i: &CameraModel,
    cam_j: &CameraModel,
    cfg: &RansacConfig,
) -> Result<PoseEstimate, EstimationError> {
    let model = estimate_fundamental(matches, cfg)?;
    let e = compose_essential(&model.f, cam_i, cam_j)?;
    let candidates = decompose_essential(&e);
    let points: Vec<_> = model
        .inliers()
        .filter_map(|k| {
            let c = &matches[k];
            Some((cam_i.normalize(&c.xi)?, cam_j.normalize(&c.xj)?))
        })
        .collect();
    let choice = select_cheirality(&candidates, &points).map_err(|e| match e {
        GeometryError::CheiralityUndecidable => EstimationError::EstimationFailed,
        other => EstimationError::Geometry(other),
    })?;
    Ok(PoseEstimate { pose: choice.pose, model, cheirality_passing: choice.passing })
}
