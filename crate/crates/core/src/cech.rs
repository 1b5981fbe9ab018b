//! Čech complex construction: a spatial grid accelerates 2r-neighbor
//! queries, ordered clique expansion enumerates candidate simplices, and a
//! geodesic minimal-enclosing-ball test filters every candidate of dimension
//! two and above (closed-ball convention: radius <= r is in).

use crate::error::{Error, Result};
use crate::manifold::{ManifoldKind, ManifoldModel};
use crate::sampler::PointCloud;
use std::collections::HashMap;
use std::io::{BufRead, Write};

/// Uniform grid over the manifold's coordinate space. Queries return a
/// superset of all points within `cell` of the query point; torus axes wrap,
/// sphere points are indexed through their ambient bounding box (chord
/// distance is a lower bound on geodesic distance, so the superset property
/// carries over).
pub struct SpatialGrid {
    cell: f64,
    counts: Vec<usize>,
    wrap: bool,
    origin: f64,
    dense: Option<Vec<Vec<u32>>>,
    sparse: Option<HashMap<u64, Vec<u32>>>,
}

const DENSE_CELL_CAP: usize = 1 << 22;

impl SpatialGrid {
    /// Builds a grid whose cell size is at least `cell_min` (the intended
    /// query radius).
    pub fn build(m: &ManifoldModel, pts: &[&[f64]], cell_min: f64) -> Self {
        assert!(cell_min > 0.0);
        let storage_dim = m.ambient_dim();
        let (wrap, origin, extent) = match m.kind {
            ManifoldKind::Torus => (true, 0.0, m.scale),
            ManifoldKind::Sphere => (false, -m.scale, 2.0 * m.scale),
        };
        let per_axis = ((extent / cell_min).floor() as usize).max(1);
        let cell = extent / per_axis as f64;
        let counts = vec![per_axis; storage_dim];
        let total: usize = counts.iter().product::<usize>();
        let mut grid = SpatialGrid {
            cell,
            counts,
            wrap,
            origin,
            dense: if total <= DENSE_CELL_CAP { Some(vec![Vec::new(); total]) } else { None },
            sparse: if total <= DENSE_CELL_CAP { None } else { Some(HashMap::new()) },
        };
        for (i, p) in pts.iter().enumerate() {
            let key = grid.key_of(p);
            grid.bucket_mut(key).push(i as u32);
        }
        grid
    }

    pub fn from_cloud(cloud: &PointCloud, cell_min: f64) -> Self {
        let pts: Vec<&[f64]> = cloud.iter_points().collect();
        Self::build(&cloud.manifold, &pts, cell_min)
    }

    /// Cell size actually used (>= the requested query radius).
    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    #[inline]
    fn axis_index(&self, x: f64, axis: usize) -> usize {
        let i = ((x - self.origin) / self.cell).floor() as i64;
        i.clamp(0, self.counts[axis] as i64 - 1) as usize
    }

    fn key_of(&self, p: &[f64]) -> u64 {
        let mut key = 0u64;
        for (axis, &x) in p.iter().enumerate() {
            key = key * self.counts[axis] as u64 + self.axis_index(x, axis) as u64;
        }
        key
    }

    fn bucket_mut(&mut self, key: u64) -> &mut Vec<u32> {
        match (&mut self.dense, &mut self.sparse) {
            (Some(d), _) => &mut d[key as usize],
            (_, Some(s)) => s.entry(key).or_default(),
            _ => unreachable!(),
        }
    }

    fn bucket(&self, key: u64) -> Option<&[u32]> {
        match (&self.dense, &self.sparse) {
            (Some(d), _) => Some(d[key as usize].as_slice()),
            (_, Some(s)) => s.get(&key).map(|v| v.as_slice()),
            _ => unreachable!(),
        }
    }

    /// Appends every point index whose cell is within one cell of `p`'s cell
    /// (a superset of all points within `cell` of `p`).
    pub fn neighbors_into(&self, p: &[f64], out: &mut Vec<u32>) {
        out.clear();
        let dims = p.len();
        let mut base = vec![0i64; dims];
        for (axis, &x) in p.iter().enumerate() {
            base[axis] = self.axis_index(x, axis) as i64;
        }
        let mut offset = vec![-1i64; dims];
        'outer: loop {
            let mut key = 0u64;
            let mut valid = true;
            for axis in 0..dims {
                let n = self.counts[axis] as i64;
                let mut c = base[axis] + offset[axis];
                if self.wrap {
                    c = c.rem_euclid(n);
                } else if c < 0 || c >= n {
                    valid = false;
                    break;
                }
                key = key * n as u64 + c as u64;
            }
            if valid {
                if let Some(b) = self.bucket(key) {
                    out.extend_from_slice(b);
                }
            }
            let mut a = 0;
            loop {
                offset[a] += 1;
                if offset[a] <= 1 {
                    break;
                }
                offset[a] = -1;
                a += 1;
                if a == dims {
                    break 'outer;
                }
            }
        }
        // Wrapped axes with fewer than 3 cells would visit a cell twice.
        if self.wrap && self.counts.iter().any(|&c| c < 3) {
            out.sort_unstable();
            out.dedup();
        }
    }
}

/// The Čech complex at one radius: per-dimension simplex lists in flat,
/// lexicographically sorted storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CechComplex {
    pub r: f64,
    pub dim_cap: usize,
    pub cloud_ref: String,
    dims: Vec<SimplexList>,
}

/// All simplices of one dimension, vertex tuples concatenated.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimplexList {
    arity: usize,
    flat: Vec<u32>,
}

impl SimplexList {
    fn new(arity: usize) -> Self {
        SimplexList { arity, flat: Vec::new() }
    }

    pub fn len(&self) -> usize {
        if self.arity == 0 {
            0
        } else {
            self.flat.len() / self.arity
        }
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> &[u32] {
        &self.flat[i * self.arity..(i + 1) * self.arity]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.flat.chunks_exact(self.arity.max(1))
    }

    fn push(&mut self, verts: &[u32]) {
        debug_assert_eq!(verts.len(), self.arity);
        self.flat.extend_from_slice(verts);
    }

    /// Binary search in the lexicographic order; the construction emits
    /// simplices sorted, so this is valid on built complexes.
    pub fn position(&self, verts: &[u32]) -> Option<usize> {
        let n = self.len();
        let (mut lo, mut hi) = (0usize, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.get(mid).cmp(verts) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    /// Packs the vertex tuples into sorted u64 keys (16 bits per vertex)
    /// when arity <= 4 and all indices fit; lexicographic tuple order then
    /// equals numeric key order, so lookups become plain u64 searches.
    pub(crate) fn packed_keys(&self) -> Option<Vec<u64>> {
        if self.arity == 0 || self.arity > 4 {
            return None;
        }
        let mut keys = Vec::with_capacity(self.len());
        for s in self.iter() {
            keys.push(pack_key(s)?);
        }
        Some(keys)
    }
}

/// Key packing for simplices of up to four vertices below 2^16.
#[inline]
pub(crate) fn pack_key(verts: &[u32]) -> Option<u64> {
    if verts.len() > 4 {
        return None;
    }
    let mut key = 0u64;
    for &v in verts {
        if v >= 1 << 16 {
            return None;
        }
        key = (key << 16) | v as u64;
    }
    // Left-align so shorter tuples cannot collide with longer ones and the
    // numeric order matches the lexicographic order within one arity.
    Some(key << (16 * (4 - verts.len())))
}

impl CechComplex {
    /// Face counts per dimension, trailing empty dimensions trimmed.
    pub fn f_vector(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self.dims.iter().map(|s| s.len()).collect();
        while f.last() == Some(&0) {
            f.pop();
        }
        f
    }

    /// Euler characteristic from the f-vector.
    pub fn euler_from_f(&self) -> i64 {
        self.f_vector()
            .iter()
            .enumerate()
            .map(|(k, &c)| if k % 2 == 0 { c as i64 } else { -(c as i64) })
            .sum()
    }

    pub fn max_built_dim(&self) -> usize {
        self.f_vector().len().saturating_sub(1)
    }

    pub fn num_simplices(&self, dim: usize) -> usize {
        self.dims.get(dim).map_or(0, |s| s.len())
    }

    pub fn simplices(&self, dim: usize) -> &SimplexList {
        static EMPTY: SimplexList = SimplexList { arity: 0, flat: Vec::new() };
        self.dims.get(dim).unwrap_or(&EMPTY)
    }

    pub fn total_simplices(&self) -> usize {
        self.dims.iter().map(|s| s.len()).sum()
    }

    /// Builds a complex from explicit vertex tuples (tests, CLI input).
    /// Tuples are sorted internally; face closure is not enforced here.
    pub fn from_simplices(r: f64, dim_cap: usize, simplices: &[Vec<u32>]) -> Result<Self> {
        let mut dims: Vec<SimplexList> =
            (0..=dim_cap).map(|d| SimplexList::new(d + 1)).collect();
        let mut grouped: Vec<Vec<Vec<u32>>> = vec![Vec::new(); dim_cap + 1];
        for s in simplices {
            if s.is_empty() {
                return Err(Error::InvalidComplex("empty simplex".into()));
            }
            let mut t = s.clone();
            t.sort_unstable();
            t.dedup();
            if t.len() != s.len() {
                return Err(Error::InvalidComplex(format!("repeated vertex in {s:?}")));
            }
            if t.len() > dim_cap + 1 {
                return Err(Error::InvalidComplex(format!(
                    "simplex dimension {} above cap {dim_cap}",
                    t.len() - 1
                )));
            }
            grouped[t.len() - 1].push(t);
        }
        for (d, mut g) in grouped.into_iter().enumerate() {
            g.sort();
            g.dedup();
            for t in g {
                dims[d].push(&t);
            }
        }
        Ok(CechComplex { r, dim_cap, cloud_ref: String::new(), dims })
    }

    /// Exact face-closure check (every face of every stored simplex stored).
    pub fn is_face_closed(&self) -> bool {
        for d in 1..self.dims.len() {
            let lower = &self.dims[d - 1];
            let mut face = vec![0u32; d];
            for s in self.dims[d].iter() {
                for drop in 0..=d {
                    let mut w = 0;
                    for (i, &v) in s.iter().enumerate() {
                        if i != drop {
                            face[w] = v;
                            w += 1;
                        }
                    }
                    if lower.position(&face).is_none() {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Text serialization: one line per simplex, space-separated vertex
    /// indices, dimension-ascending and lexicographic within dimension.
    pub fn write_text<W: Write>(&self, w: &mut W) -> Result<()> {
        for list in &self.dims {
            for s in list.iter() {
                let line: Vec<String> = s.iter().map(|v| v.to_string()).collect();
                writeln!(w, "{}", line.join(" "))?;
            }
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut simplices = Vec::new();
        let mut max_dim = 0;
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let verts: std::result::Result<Vec<u32>, _> =
                line.split_whitespace().map(|t| t.parse::<u32>()).collect();
            let verts = verts.map_err(|e| Error::InvalidInput(format!("complex line: {e}")))?;
            max_dim = max_dim.max(verts.len().saturating_sub(1));
            simplices.push(verts);
        }
        Self::from_simplices(0.0, max_dim, &simplices)
    }
}

/// Higher-indexed neighbor lists of the `radius`-neighbor graph (sorted).
pub(crate) fn adjacency_high(cloud: &PointCloud, radius: f64) -> Vec<Vec<u32>> {
    let m = &cloud.manifold;
    let n = cloud.len();
    let mut adj_high: Vec<Vec<u32>> = vec![Vec::new(); n];
    if n == 0 {
        return adj_high;
    }
    let grid = SpatialGrid::from_cloud(cloud, radius);
    let mut scratch = Vec::new();
    for i in 0..n {
        let p = cloud.point(i);
        grid.neighbors_into(p, &mut scratch);
        let hi = &mut adj_high[i];
        for &j in &scratch {
            if (j as usize) > i && m.distance(p, cloud.point(j as usize)) <= radius {
                hi.push(j);
            }
        }
        hi.sort_unstable();
    }
    adj_high
}

/// Visits every clique of exactly `size` vertices in the graph given by
/// higher-indexed adjacency lists, in lexicographic order.
pub(crate) fn for_each_clique<F: FnMut(&[u32])>(adj_high: &[Vec<u32>], size: usize, mut f: F) {
    if size == 0 {
        return;
    }
    let mut simplex: Vec<u32> = Vec::with_capacity(size);
    let mut arena: Vec<u32> = Vec::new();
    for v in 0..adj_high.len() as u32 {
        simplex.push(v);
        if size == 1 {
            f(&simplex);
        } else {
            arena.extend_from_slice(&adj_high[v as usize]);
            clique_walk(adj_high, size, &mut simplex, &mut arena, 0, &mut f);
            arena.clear();
        }
        simplex.pop();
    }
}

fn clique_walk<F: FnMut(&[u32])>(
    adj_high: &[Vec<u32>],
    size: usize,
    simplex: &mut Vec<u32>,
    arena: &mut Vec<u32>,
    cand_start: usize,
    f: &mut F,
) {
    let cand_end = arena.len();
    let mut idx = cand_start;
    while idx < cand_end {
        let u = arena[idx];
        idx += 1;
        simplex.push(u);
        if simplex.len() == size {
            f(simplex);
        } else {
            let start = arena.len();
            let ulist = &adj_high[u as usize];
            let (mut a, mut b) = (idx, 0usize);
            while a < cand_end && b < ulist.len() {
                match arena[a].cmp(&ulist[b]) {
                    std::cmp::Ordering::Less => a += 1,
                    std::cmp::Ordering::Greater => b += 1,
                    std::cmp::Ordering::Equal => {
                        let val = arena[a];
                        arena.push(val);
                        a += 1;
                        b += 1;
                    }
                }
            }
            clique_walk(adj_high, size, simplex, arena, start, f);
            arena.truncate(start);
        }
        simplex.pop();
    }
}

/// Streams the top-dimension boundary columns without materializing the
/// simplex list. Each stored top simplex is the lexicographic prefix of the
/// candidates it spawns; candidate extension vertices and the row indices
/// of all non-prefix faces come from one synchronized walk over
/// "subfacet lists": for every (top-1)-face, the sorted list of
/// (extension vertex, top-simplex row) completions. Returns the number of
/// streamed simplices.
pub(crate) fn stream_top_boundary<F: FnMut(&[u32])>(
    cloud: &PointCloud,
    cx: &CechComplex,
    mut sink: F,
) -> Result<usize> {
    let m = &cloud.manifold;
    let top = cx.max_built_dim();
    let list = cx.simplices(top);
    if list.is_empty() {
        return Ok(0);
    }
    let nf = top + 1; // vertices per stored top simplex
    let lower = cx.simplices(top.wrapping_sub(1));
    if top == 0 {
        // Extending vertices: candidates are all higher vertices within 2r.
        let adj = adjacency_high(cloud, 2.0 * cx.r);
        let mut count = 0;
        for (i, s) in list.iter().enumerate() {
            for &u in &adj[s[0] as usize] {
                count += 1;
                sink(&[i as u32, u]);
            }
        }
        return Ok(count);
    }
    let keys = lower.packed_keys();
    let face_id = |face: &[u32]| -> Result<u32> {
        let row = match &keys {
            Some(ks) => pack_key(face).and_then(|key| ks.binary_search(&key).ok()),
            None => lower.position(face),
        };
        Ok(row.ok_or_else(|| {
            Error::InvalidComplex(format!("missing streamed face {face:?}"))
        })? as u32)
    };

    // Subfacet lists: for each (top-1)-face f of a stored top simplex s,
    // record (dropped vertex, index of s). Scanning s in lex order fills
    // every list in increasing dropped-vertex order.
    let mut subface_ids = vec![0u32; list.len() * nf];
    let mut counts = vec![0u32; lower.len()];
    let mut face = vec![0u32; top.max(1)];
    for (i, s) in list.iter().enumerate() {
        for drop in 0..nf {
            let mut w = 0;
            for (j, &v) in s.iter().enumerate() {
                if j != drop {
                    face[w] = v;
                    w += 1;
                }
            }
            let id = face_id(&face)?;
            subface_ids[i * nf + drop] = id;
            counts[id as usize] += 1;
        }
    }
    let mut offsets = vec![0usize; lower.len() + 1];
    for i in 0..lower.len() {
        offsets[i + 1] = offsets[i] + counts[i] as usize;
    }
    // (dropped vertex, top-simplex row) pairs per subfacet, sorted by the
    // dropped vertex because the top list is lexicographic.
    let mut entries: Vec<(u32, u32)> = vec![(0, 0); list.len() * nf];
    let mut cursor = offsets.clone();
    for (i, s) in list.iter().enumerate() {
        for drop in 0..nf {
            let id = subface_ids[i * nf + drop] as usize;
            entries[cursor[id]] = (s[drop], i as u32);
            cursor[id] += 1;
        }
    }
    drop(counts);

    // Walk grouped by leading face: the streamed simplex [u, s] (u below
    // every vertex of s) has its lexicographically largest face equal to s,
    // so within the reduction the first member of each group lands a fresh
    // pivot with a pristine short column, which keeps later merge chains
    // short. Candidates u < min(s) are the common low completions of the
    // subfacets of s; the synchronized pointers also yield the face rows of
    // [u, s] with no searches.
    let mut count = 0usize;
    let mut pts: Vec<&[f64]> = Vec::with_capacity(nf + 1);
    let mut col: Vec<u32> = Vec::with_capacity(nf + 2);
    let mut ptr = vec![0usize; nf];
    let mut ends = vec![0usize; nf];
    for (i, s) in list.iter().enumerate() {
        let first = s[0];
        // Pointer j walks the completion list of the face dropping vertex j;
        // only the head segment with completions below min(s) is relevant.
        let mut skip = false;
        for j in 0..nf {
            let id = subface_ids[i * nf + j] as usize;
            let (lo, hi) = (offsets[id], offsets[id + 1]);
            if lo == hi || entries[lo].0 >= first {
                skip = true;
                break;
            }
            ptr[j] = lo;
            ends[j] = hi;
        }
        if skip {
            continue;
        }
        pts.clear();
        pts.push(cloud.point(0)); // placeholder for the extension vertex
        pts.extend(s.iter().map(|&v| cloud.point(v as usize)));
        'walk: loop {
            // Largest current head; all pointers must reach it.
            let mut u = 0u32;
            for j in 0..nf {
                u = u.max(entries[ptr[j]].0);
            }
            if u >= first {
                break;
            }
            for j in 0..nf {
                while entries[ptr[j]].0 < u {
                    ptr[j] += 1;
                    if ptr[j] == ends[j] {
                        break 'walk;
                    }
                }
                if entries[ptr[j]].0 > u {
                    continue 'walk;
                }
            }
            // All subfacet lists contain u: every face of [u, s] except s
            // itself is stored; run the simplex test.
            pts[0] = cloud.point(u as usize);
            if m.miniball_radius_leq(&pts, cx.r) {
                count += 1;
                col.clear();
                for j in 0..nf {
                    col.push(entries[ptr[j]].1);
                }
                col.push(i as u32);
                col.sort_unstable();
                sink(&col);
            }
            for j in 0..nf {
                ptr[j] += 1;
                if ptr[j] == ends[j] {
                    break 'walk;
                }
            }
        }
    }
    Ok(count)
}

/// Builds the Čech complex of `cloud` at radius `r`, retaining simplices of
/// dimension at most `dim_cap`.
pub fn build_complex(cloud: &PointCloud, r: f64, dim_cap: usize) -> Result<CechComplex> {
    let m = &cloud.manifold;
    if !(r > 0.0) || r > m.convexity_radius() {
        return Err(Error::OutOfRegime(format!(
            "filtration radius {r} outside (0, {}]",
            m.convexity_radius()
        )));
    }
    let n = cloud.len();
    let mut dims: Vec<SimplexList> = (0..=dim_cap).map(|d| SimplexList::new(d + 1)).collect();
    for v in 0..n {
        dims[0].push(&[v as u32]);
    }
    if dim_cap == 0 || n == 0 {
        return Ok(CechComplex { r, dim_cap, cloud_ref: cloud.id(), dims });
    }

    // Higher-indexed 2r-neighbors per vertex (edge criterion is exact:
    // a pair's miniball radius is half its distance).
    let adj_high = adjacency_high(cloud, 2.0 * r);

    // Ordered clique expansion: extend each simplex by higher-indexed common
    // neighbors only, so every simplex is emitted once, in lex order. The
    // miniball filter prunes exactly (it is monotone under vertex insertion).
    let mut simplex: Vec<u32> = Vec::with_capacity(dim_cap + 1);
    let mut pts: Vec<&[f64]> = Vec::with_capacity(dim_cap + 1);
    let mut arena: Vec<u32> = Vec::new();
    for v in 0..n as u32 {
        simplex.push(v);
        pts.push(cloud.point(v as usize));
        let start = arena.len();
        arena.extend_from_slice(&adj_high[v as usize]);
        expand(
            cloud, m, r, dim_cap, &adj_high, &mut simplex, &mut pts, &mut arena, start,
            &mut dims,
        );
        arena.truncate(start);
        simplex.pop();
        pts.pop();
    }
    Ok(CechComplex { r, dim_cap, cloud_ref: cloud.id(), dims })
}

#[allow(clippy::too_many_arguments)]
fn expand<'c>(
    cloud: &'c PointCloud,
    m: &ManifoldModel,
    r: f64,
    dim_cap: usize,
    adj_high: &[Vec<u32>],
    simplex: &mut Vec<u32>,
    pts: &mut Vec<&'c [f64]>,
    arena: &mut Vec<u32>,
    cand_start: usize,
    dims: &mut [SimplexList],
) {
    if simplex.len() == dim_cap + 1 {
        return;
    }
    let cand_end = arena.len();
    let mut idx = cand_start;
    while idx < cand_end {
        let u = arena[idx];
        idx += 1;
        simplex.push(u);
        pts.push(cloud.point(u as usize));
        let keep = simplex.len() == 2 || m.miniball_radius_leq(pts, r);
        if keep {
            dims[simplex.len() - 1].push(simplex);
            // Intersect the remaining candidates with u's neighbor list.
            let start = arena.len();
            let ulist = &adj_high[u as usize];
            let (mut a, mut b) = (idx, 0usize);
            while a < cand_end && b < ulist.len() {
                match arena[a].cmp(&ulist[b]) {
                    std::cmp::Ordering::Less => a += 1,
                    std::cmp::Ordering::Greater => b += 1,
                    std::cmp::Ordering::Equal => {
                        let val = arena[a];
                        arena.push(val);
                        a += 1;
                        b += 1;
                    }
                }
            }
            expand(cloud, m, r, dim_cap, adj_high, simplex, pts, arena, start, dims);
            arena.truncate(start);
        }
        simplex.pop();
        pts.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::ManifoldModel;
    use crate::sampler::{poisson_process, PointCloud};

    fn t2() -> ManifoldModel {
        ManifoldModel::torus(2, 1.0).unwrap()
    }

    fn equilateral_cloud(side: f64) -> PointCloud {
        let h = side * 3f64.sqrt() / 2.0;
        PointCloud::from_points(
            t2(),
            &[vec![0.2, 0.2], vec![0.2 + side, 0.2], vec![0.2 + side / 2.0, 0.2 + h]],
        )
        .unwrap()
    }

    #[test]
    fn equilateral_triple_straddles_circumradius() {
        // Circumradius of an equilateral side-0.1 triple is 0.1/sqrt(3) ~ 0.05774.
        let cloud = equilateral_cloud(0.1);
        let cx = build_complex(&cloud, 0.055, 3).unwrap();
        assert_eq!(cx.f_vector(), vec![3, 3]);
        let cx = build_complex(&cloud, 0.06, 3).unwrap();
        assert_eq!(cx.f_vector(), vec![3, 3, 1]);
    }

    #[test]
    fn empty_cloud_empty_complex() {
        let cloud = PointCloud::from_points(t2(), &[]).unwrap();
        let cx = build_complex(&cloud, 0.1, 2).unwrap();
        assert_eq!(cx.f_vector(), Vec::<usize>::new());
        assert_eq!(cx.euler_from_f(), 0);
    }

    #[test]
    fn two_isolated_points() {
        let cloud =
            PointCloud::from_points(t2(), &[vec![0.1, 0.1], vec![0.6, 0.6]]).unwrap();
        let cx = build_complex(&cloud, 0.05, 2).unwrap();
        assert_eq!(cx.f_vector(), vec![2]);
    }

    #[test]
    fn edge_criterion_is_distance() {
        let m = t2();
        let cloud =
            PointCloud::from_points(m, &[vec![0.1, 0.1], vec![0.3, 0.1]]).unwrap();
        // distance = 0.2: edge iff 2r >= 0.2 (closed convention).
        let cx = build_complex(&cloud, 0.1, 1).unwrap();
        assert_eq!(cx.f_vector(), vec![2, 1]);
        let cx = build_complex(&cloud, 0.09999, 1).unwrap();
        assert_eq!(cx.f_vector(), vec![2]);
    }

    #[test]
    fn rejects_out_of_regime_radius() {
        let cloud = equilateral_cloud(0.1);
        assert!(build_complex(&cloud, 0.3, 2).is_err());
        assert!(build_complex(&cloud, 0.0, 2).is_err());
    }

    #[test]
    fn face_closure_and_sorted_output() {
        let cloud = poisson_process(&t2(), 120.0, 31).unwrap();
        let cx = build_complex(&cloud, 0.07, 3).unwrap();
        assert!(cx.is_face_closed());
        for d in 0..=cx.max_built_dim() {
            let list = cx.simplices(d);
            for i in 1..list.len() {
                assert!(list.get(i - 1) < list.get(i), "not lex-sorted at dim {d}");
            }
            for s in list.iter() {
                for w in s.windows(2) {
                    assert!(w[0] < w[1], "vertex tuple not strictly increasing");
                }
            }
        }
    }

    #[test]
    fn monotone_in_radius() {
        let cloud = poisson_process(&t2(), 80.0, 37).unwrap();
        let small = build_complex(&cloud, 0.05, 3).unwrap();
        let large = build_complex(&cloud, 0.08, 3).unwrap();
        for d in 0..=small.max_built_dim() {
            for s in small.simplices(d).iter() {
                assert!(large.simplices(d).position(s).is_some());
            }
        }
    }

    #[test]
    fn matches_bruteforce_small_clouds() {
        use crate::oracle::brute_force_complex;
        let m = t2();
        let s2 = ManifoldModel::sphere(2, 1.0).unwrap();
        for seed in 0..20u64 {
            for mm in [m, s2] {
                let cloud = poisson_process(&mm, 15.0, 1000 + seed).unwrap();
                if cloud.len() > 25 {
                    continue;
                }
                let r = mm.convexity_radius() * (0.1 + 0.8 * (seed as f64 / 20.0));
                let cx = build_complex(&cloud, r, 3).unwrap();
                let oracle = brute_force_complex(&cloud, r, 3).unwrap();
                assert_eq!(cx.f_vector(), oracle.f_vector(), "seed {seed}");
                for d in 0..=cx.max_built_dim() {
                    assert_eq!(
                        cx.simplices(d).iter().collect::<Vec<_>>(),
                        oracle.simplices(d).iter().collect::<Vec<_>>()
                    );
                }
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let cloud = equilateral_cloud(0.1);
        let cx = build_complex(&cloud, 0.06, 3).unwrap();
        let mut buf = Vec::new();
        cx.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "0\n1\n2\n0 1\n0 2\n1 2\n0 1 2\n");
        let back = CechComplex::read_text(&buf[..]).unwrap();
        assert_eq!(back.f_vector(), cx.f_vector());
    }

    #[test]
    fn grid_superset_property() {
        let cloud = poisson_process(&t2(), 300.0, 41).unwrap();
        let grid = SpatialGrid::from_cloud(&cloud, 0.11);
        let mut out = Vec::new();
        for i in 0..cloud.len().min(50) {
            grid.neighbors_into(cloud.point(i), &mut out);
            let got: std::collections::HashSet<u32> = out.iter().copied().collect();
            for j in 0..cloud.len() {
                if t2().distance(cloud.point(i), cloud.point(j)) <= 0.11 {
                    assert!(got.contains(&(j as u32)), "missing neighbor {j} of {i}");
                }
            }
        }
    }

    #[test]
    fn grid_wraps_small_cell_counts() {
        // Cell count of 2 per axis: wrapped +/-1 offsets alias; dedup keeps
        // the superset property without double counting.
        let m = t2();
        let cloud = PointCloud::from_points(
            m,
            &[vec![0.05, 0.05], vec![0.95, 0.95], vec![0.45, 0.45]],
        )
        .unwrap();
        let grid = SpatialGrid::from_cloud(&cloud, 0.4);
        let mut out = Vec::new();
        grid.neighbors_into(cloud.point(0), &mut out);
        let got: std::collections::HashSet<u32> = out.iter().copied().collect();
        assert!(got.contains(&1), "wrapped neighbor missed");
        assert_eq!(out.len(), got.len(), "duplicated candidates");
    }
}
