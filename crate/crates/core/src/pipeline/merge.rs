use crate::clicks::Click;
use crate::raster::{component_at, mask_xor, BinaryMask, Connectivity, RasterError};

/// Selective merge of a refined mask into the previous one.
///
/// With an empty previous mask the refined mask is taken whole. Otherwise
/// only the disagreement component (`refined xor previous`) under the last
/// click is copied from `refined`; everything else keeps `previous`. If the
/// click pixel did not change, the refined mask is taken whole.
pub fn variance_merge(
    refined: &BinaryMask,
    previous: &BinaryMask,
    last_click: &Click,
    connectivity: Connectivity,
) -> Result<BinaryMask, RasterError> {
    let diff = mask_xor(refined, previous)?;
    if previous.is_blank() {
        return Ok(refined.clone());
    }
    let Some(component) = component_at(&diff, last_click.y, last_click.x, connectivity) else {
        return Ok(refined.clone());
    };
    let mut merged = previous.clone();
    for &(y, x) in component.pixels() {
        merged.set(y, x, refined.get(y, x));
    }
    Ok(merged)
}
