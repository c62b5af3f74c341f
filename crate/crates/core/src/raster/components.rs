use serde::{Deserialize, Serialize};

use super::{BinaryMask, Dims, Rect};

/// Pixel adjacency used for component analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    #[default]
    Four,
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];
        const EIGHT: [(isize, isize); 8] = [
            (-1, -1),
            (-1, 0),
            (-1, 1),
            (0, -1),
            (0, 1),
            (1, -1),
            (1, 0),
            (1, 1),
        ];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

/// A connected set of foreground pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    /// `(y, x)` pairs in row-major order.
    pixels: Vec<(usize, usize)>,
    bbox: Rect,
}

impl Component {
    fn from_sorted(pixels: Vec<(usize, usize)>) -> Self {
        debug_assert!(!pixels.is_empty());
        let mut bbox = Rect::pixel(pixels[0].0, pixels[0].1);
        for &(y, x) in &pixels {
            bbox = bbox.union(&Rect::pixel(y, x));
        }
        Self { pixels, bbox }
    }

    pub fn area(&self) -> usize {
        self.pixels.len()
    }

    pub fn bbox(&self) -> Rect {
        self.bbox
    }

    pub fn pixels(&self) -> &[(usize, usize)] {
        &self.pixels
    }

    pub fn contains(&self, y: usize, x: usize) -> bool {
        self.bbox.contains(y, x) && self.pixels.binary_search(&(y, x)).is_ok()
    }

    /// The component rasterized onto a blank mask of the given dims.
    pub fn to_mask(&self, dims: Dims) -> BinaryMask {
        let mut mask = BinaryMask::new(dims);
        for &(y, x) in &self.pixels {
            mask.set(y, x, true);
        }
        mask
    }
}

/// Label every foreground component.
///
/// Components come back ordered by the top-left corner of their bounding box
/// (row-major), ties broken by first pixel in scan order.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> Vec<Component> {
    let dims = mask.dims();
    let data = mask.as_slice();
    let mut labels = vec![0u32; dims.len()];
    let mut next = 0u32;
    let mut stack = Vec::new();

    for start in 0..data.len() {
        if !data[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (y, x) = ((i / dims.width) as isize, (i % dims.width) as isize);
            for &(dy, dx) in connectivity.offsets() {
                let (ny, nx) = (y + dy, x + dx);
                if ny < 0 || nx < 0 || ny >= dims.height as isize || nx >= dims.width as isize {
                    continue;
                }
                let j = ny as usize * dims.width + nx as usize;
                if data[j] && labels[j] == 0 {
                    labels[j] = next;
                    stack.push(j);
                }
            }
        }
    }

    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::new(); next as usize];
    for (i, &label) in labels.iter().enumerate() {
        if label != 0 {
            groups[label as usize - 1].push((i / dims.width, i % dims.width));
        }
    }
    let mut components: Vec<Component> = groups.into_iter().map(Component::from_sorted).collect();
    // stable: equal corners keep scan order
    components.sort_by_key(|c| (c.bbox.y1, c.bbox.x1));
    components
}

/// The component whose pixel set contains `(y, x)`.
pub fn component_containing(components: &[Component], y: usize, x: usize) -> Option<&Component> {
    components.iter().find(|c| c.contains(y, x))
}

/// Largest component by area; ties go to the earliest in list order.
pub fn largest_component(components: &[Component]) -> Option<&Component> {
    components
        .iter()
        .enumerate()
        .max_by_key(|&(i, c)| (c.area(), std::cmp::Reverse(i)))
        .map(|(_, c)| c)
}

/// Flood fill from a single seed; `None` if the seed is background.
pub fn component_at(
    mask: &BinaryMask,
    y: usize,
    x: usize,
    connectivity: Connectivity,
) -> Option<Component> {
    let dims = mask.dims();
    if !dims.contains(y, x) || !mask.get(y, x) {
        return None;
    }
    let data = mask.as_slice();
    let mut seen = vec![false; dims.len()];
    let mut stack = vec![y * dims.width + x];
    seen[y * dims.width + x] = true;
    let mut members = Vec::new();
    while let Some(i) = stack.pop() {
        members.push(i);
        let (cy, cx) = ((i / dims.width) as isize, (i % dims.width) as isize);
        for &(dy, dx) in connectivity.offsets() {
            let (ny, nx) = (cy + dy, cx + dx);
            if ny < 0 || nx < 0 || ny >= dims.height as isize || nx >= dims.width as isize {
                continue;
            }
            let j = ny as usize * dims.width + nx as usize;
            if data[j] && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    members.sort_unstable();
    Some(Component::from_sorted(
        members
            .into_iter()
            .map(|i| (i / dims.width, i % dims.width))
            .collect(),
    ))
}
