/// Four-ary min-heap of `(key, site index)` with lazy deletion.
///
/// Entries compare by key, then by index, so the pop order is fully
/// determined by the contents.
#[derive(Default)]
pub(crate) struct QuadHeap {
    items: Vec<(f64, u32)>,
}

#[inline(always)]
fn less(a: &(f64, u32), b: &(f64, u32)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

impl QuadHeap {
    pub fn with_capacity(n: usize) -> Self {
        QuadHeap {
            items: Vec::with_capacity(n),
        }
    }

    #[inline]
    pub fn push(&mut self, key: f64, idx: u32) {
        let mut pos = self.items.len();
        self.items.push((key, idx));
        let item = (key, idx);
        while pos > 0 {
            let parent = (pos - 1) / 4;
            if less(&item, &self.items[parent]) {
                self.items[pos] = self.items[parent];
                pos = parent;
            } else {
                break;
            }
        }
        self.items[pos] = item;
    }

    #[inline]
    pub fn pop(&mut self) -> Option<(f64, u32)> {
        let n = self.items.len();
        if n == 0 {
            return None;
        }
        let top = self.items[0];
        let last = self.items.pop().expect("nonempty");
        if n == 1 {
            return Some(top);
        }
        let len = n - 1;
        let mut pos = 0;
        loop {
            let first = 4 * pos + 1;
            if first >= len {
                break;
            }
            let end = (first + 4).min(len);
            let mut best = first;
            for c in first + 1..end {
                if less(&self.items[c], &self.items[best]) {
                    best = c;
                }
            }
            if less(&self.items[best], &last) {
                self.items[pos] = self.items[best];
                pos = best;
            } else {
                break;
            }
        }
        self.items[pos] = last;
        Some(top)
    }

    #[cfg(test)]
    pub fn len(&self) -> usize {
        self.items.len()
    }
}
