use super::BBox;

const NODE_CAPACITY: usize = 16;

#[derive(Debug, Clone)]
struct Node {
    bbox: BBox,
    /// Indices into the next level down, or into `items` for leaves.
    children: Vec<usize>,
}

/// Static R-tree over bounding boxes, bulk loaded with Sort-Tile-Recursive.
#[derive(Debug, Clone, Default)]
pub struct BBoxIndex<T> {
    items: Vec<(BBox, T)>,
    /// `levels[0]` are the leaves; the last level holds the root.
    levels: Vec<Vec<Node>>,
}

fn str_pack(boxes: &[BBox]) -> Vec<Node> {
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    let n_nodes = boxes.len().div_ceil(NODE_CAPACITY);
    let n_slices = (n_nodes as f64).sqrt().ceil().max(1.0) as usize;
    let per_slice = n_slices * NODE_CAPACITY;
    order.sort_by(|&a, &b| boxes[a].center().x.total_cmp(&boxes[b].center().x).then(a.cmp(&b)));
    let mut nodes = Vec::with_capacity(n_nodes);
    for slice in order.chunks_mut(per_slice) {
        slice.sort_by(|&a, &b| boxes[a].center().y.total_cmp(&boxes[b].center().y).then(a.cmp(&b)));
        for group in slice.chunks(NODE_CAPACITY) {
            let bbox = group[1..]
                .iter()
                .fold(boxes[group[0]], |acc, &i| acc.union(&boxes[i]));
            nodes.push(Node {
                bbox,
                children: group.to_vec(),
            });
        }
    }
    nodes
}

impl<T> BBoxIndex<T> {
    pub fn new(items: Vec<(BBox, T)>) -> Self {
        let mut levels = Vec::new();
        if !items.is_empty() {
            let boxes: Vec<BBox> = items.iter().map(|(b, _)| *b).collect();
            let mut level = str_pack(&boxes);
            loop {
                let done = level.len() == 1;
                let boxes: Vec<BBox> = level.iter().map(|n| n.bbox).collect();
                levels.push(level);
                if done {
                    break;
                }
                level = str_pack(&boxes);
            }
        }
        Self { items, levels }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[(BBox, T)] {
        &self.items
    }

    /// Positions of all items whose box intersects `query`, ascending.
    pub fn query(&self, query: &BBox) -> Vec<usize> {
        let mut out = Vec::new();
        let Some(top) = self.levels.last() else {
            return out;
        };
        let mut stack: Vec<(usize, usize)> = (0..top.len()).map(|i| (self.levels.len() - 1, i)).collect();
        while let Some((depth, i)) = stack.pop() {
            let node = &self.levels[depth][i];
            if !node.bbox.intersects(query) {
                continue;
            }
            for &c in &node.children {
                if depth == 0 {
                    if self.items[c].0.intersects(query) {
                        out.push(c);
                    }
                } else {
                    stack.push((depth - 1, c));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Items whose box intersects `query`, in insertion order.
    pub fn search<'a>(&'a self, query: &BBox) -> impl Iterator<Item = &'a T> + 'a {
        self.query(query).into_iter().map(move |i| &self.items[i].1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_linear_scan() {
        let items: Vec<(BBox, usize)> = (0..500)
            .map(|i| {
                let x = (i * 37 % 101) as f64 * 10.0;
                let y = (i * 53 % 97) as f64 * 10.0;
                (BBox::new(x, y, x + 15.0, y + 5.0), i)
            })
            .collect();
        let index = BBoxIndex::new(items.clone());
        for q in [
            BBox::new(0.0, 0.0, 50.0, 50.0),
            BBox::new(300.0, 200.0, 700.0, 260.0),
            BBox::new(-10.0, -10.0, -1.0, -1.0),
            BBox::new(0.0, 0.0, 2000.0, 2000.0),
        ] {
            let want: Vec<usize> = items
                .iter()
                .enumerate()
                .filter(|(_, (b, _))| b.intersects(&q))
                .map(|(i, _)| i)
                .collect();
            assert_eq!(index.query(&q), want);
        }
    }

    #[test]
    fn empty_index() {
        let index: BBoxIndex<()> = BBoxIndex::new(vec![]);
        assert!(index.query(&BBox::new(0.0, 0.0, 1.0, 1.0)).is_empty());
    }
}
