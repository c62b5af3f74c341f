use crate::raster::{
    bounding_box, component_containing, connected_components, expand_rect, largest_component,
    mask_xor, BinaryMask, Connectivity, Dims, RasterError, Rect,
};

/// Side length of the fallback square, as a fraction of the object's longer side.
pub const SQUARE_FRACTION: f64 = 0.4;
/// Disagreement boxes smaller than this fraction of the object box trigger the square.
pub const SMALL_CORRECTION_RATIO: f64 = 1.0 / 3.0;

/// Which rule produced the Local Patch before expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchBranch {
    /// No previous mask: the coarse mask's bounding box.
    CoarseBox,
    /// Square around the click for a small correction.
    ClickSquare,
    /// Bounding box of the disagreement component.
    Disagreement,
}

/// Local Patch selection.
///
/// `D = M_c xor M_p`. With an empty `M_p` the patch is the bounding box of
/// `M_c`. Otherwise take the component of `D` holding the click (the largest
/// component of `D` if the click is not in `D`); when its box covers less than
/// a third of `M_c`'s box area, use a square of side `0.4 · max(h, w)` of
/// `M_c`'s box centered on the click instead. The result is scaled by `gamma`
/// and clipped to `region`.
///
/// Degenerate inputs: an empty `D` falls back to the bounding box of `M_c`;
/// an empty `M_c` (where a box is needed) is replaced by `region`, which turns
/// the first branch into a square around the click.
pub fn select_local_patch(
    coarse: &BinaryMask,
    previous: &BinaryMask,
    region: Rect,
    click: (usize, usize),
    gamma: f64,
    connectivity: Connectivity,
) -> Result<Rect, RasterError> {
    select_local_patch_traced(coarse, previous, region, click, gamma, connectivity).map(|(r, _)| r)
}

/// As [`select_local_patch`], also reporting which branch fired.
pub fn select_local_patch_traced(
    coarse: &BinaryMask,
    previous: &BinaryMask,
    region: Rect,
    click: (usize, usize),
    gamma: f64,
    connectivity: Connectivity,
) -> Result<(Rect, PatchBranch), RasterError> {
    let dims = coarse.dims();
    let diff = mask_xor(coarse, previous)?;
    let coarse_box = bounding_box(coarse);

    let (rect, branch) = if previous.is_blank() {
        match coarse_box {
            Some(b) => (b, PatchBranch::CoarseBox),
            None => (square_around(click, region, dims), PatchBranch::ClickSquare),
        }
    } else {
        let components = connected_components(&diff, connectivity);
        let chosen = component_containing(&components, click.0, click.1)
            .or_else(|| largest_component(&components));
        match chosen {
            None => match coarse_box {
                Some(b) => (b, PatchBranch::CoarseBox),
                None => (square_around(click, region, dims), PatchBranch::ClickSquare),
            },
            Some(component) => {
                let diff_box = component.bbox();
                let object_box = coarse_box.unwrap_or(region);
                let ratio = diff_box.area() as f64 / object_box.area() as f64;
                if ratio < SMALL_CORRECTION_RATIO {
                    (square_around(click, object_box, dims), PatchBranch::ClickSquare)
                } else {
                    (diff_box, PatchBranch::Disagreement)
                }
            }
        }
    };
    Ok((expand_rect(rect, gamma, region), branch))
}

/// Square centered on the click with side `0.4 · max(h, w)` of `reference`,
/// clipped to the image.
fn square_around(click: (usize, usize), reference: Rect, dims: Dims) -> Rect {
    let longest = reference.height().max(reference.width());
    let side = ((SQUARE_FRACTION * longest as f64).round() as i64).max(1);
    let half = side / 2;
    let clip = |center: usize, limit: usize| {
        let lo = center as i64 - half;
        let hi = lo + side;
        (lo.max(0) as usize, (hi.min(limit as i64)) as usize)
    };
    let (y1, y2) = clip(click.0, dims.height);
    let (x1, x2) = clip(click.1, dims.width);
    Rect::new(y1, y2, x1, x2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(d: Dims, r: Rect) -> BinaryMask {
        BinaryMask::from_fn(d, |y, x| r.contains(y, x))
    }

    #[test]
    fn empty_previous_uses_coarse_box() {
        let d = Dims::new(32, 32);
        let coarse = block(d, Rect::new(4, 10, 4, 10));
        let (r, b) = select_local_patch_traced(
            &coarse,
            &BinaryMask::new(d),
            d.full_rect(),
            (5, 5),
            1.0,
            Connectivity::Four,
        )
        .unwrap();
        assert_eq!(r, Rect::new(4, 10, 4, 10));
        assert_eq!(b, PatchBranch::CoarseBox);
    }

    #[test]
    fn small_hole_gives_square_around_click() {
        let d = Dims::new(32, 32);
        let coarse = block(d, Rect::new(0, 30, 0, 30));
        let mut previous = coarse.clone();
        for y in 10..13 {
            for x in 10..13 {
                previous.set(y, x, false);
            }
        }
        let (r, b) = select_local_patch_traced(
            &coarse,
            &previous,
            d.full_rect(),
            (11, 11),
            1.0,
            Connectivity::Four,
        )
        .unwrap();
        assert_eq!(b, PatchBranch::ClickSquare);
        assert_eq!(r, Rect::new(5, 17, 5, 17));
    }

    #[test]
    fn large_disagreement_uses_its_box() {
        let d = Dims::new(40, 40);
        // M_c box 24x20 = 480; D blob 20x15 = 300
        let coarse = block(d, Rect::new(2, 26, 3, 23));
        let previous = BinaryMask::from_fn(d, |y, x| {
            Rect::new(2, 26, 3, 23).contains(y, x) && !Rect::new(4, 24, 5, 20).contains(y, x)
        });
        let (r, b) = select_local_patch_traced(
            &coarse,
            &previous,
            d.full_rect(),
            (10, 10),
            1.0,
            Connectivity::Four,
        )
        .unwrap();
        assert_eq!(b, PatchBranch::Disagreement);
        assert_eq!(r, Rect::new(4, 24, 5, 20));
    }

    #[test]
    fn click_outside_diff_falls_back_to_largest_component() {
        let d = Dims::new(40, 40);
        let coarse = block(d, Rect::new(0, 20, 0, 20));
        let previous = BinaryMask::from_fn(d, |y, x| y < 20 && x < 20 && !(y < 12 && x < 12));
        let (r, _) = select_local_patch_traced(
            &coarse,
            &previous,
            d.full_rect(),
            (30, 30),
            1.0,
            Connectivity::Four,
        )
        .unwrap();
        assert_eq!(r, Rect::new(0, 12, 0, 12));
    }

    #[test]
    fn everything_empty_squares_on_region() {
        let d = Dims::new(50, 50);
        let region = Rect::new(0, 50, 0, 40);
        let r = select_local_patch(
            &BinaryMask::new(d),
            &BinaryMask::new(d),
            region,
            (25, 20),
            1.0,
            Connectivity::Four,
        )
        .unwrap();
        // side 0.4 * 50 = 20
        assert_eq!(r, Rect::new(15, 35, 10, 30));
    }

    #[test]
    fn result_clipped_to_region() {
        let d = Dims::new(32, 32);
        let coarse = block(d, Rect::new(4, 20, 4, 20));
        let region = Rect::new(6, 18, 6, 18);
        let r = select_local_patch(
            &coarse,
            &BinaryMask::new(d),
            region,
            (10, 10),
            1.4,
            Connectivity::Four,
        )
        .unwrap();
        assert!(region.contains_rect(&r));
    }

    #[test]
    fn mismatched_dims_error() {
        let r = select_local_patch(
            &BinaryMask::new(Dims::new(4, 4)),
            &BinaryMask::new(Dims::new(4, 5)),
            Rect::new(0, 4, 0, 4),
            (0, 0),
            1.0,
            Connectivity::Four,
        );
        assert!(r.is_err());
    }
}
