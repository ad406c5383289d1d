//! Newest-vertex bisection with conformity closure.
//!
//! Closure is done on edges: the refinement edge of every marked triangle is
//! marked, and any triangle with a marked edge gets its own refinement edge
//! marked until nothing changes. Each triangle is then split once through its
//! refinement edge, and each child is split again if its refinement edge (one
//! of the parent's other two edges) is marked. Children place the new vertex
//! at local index 0 and use the opposite edge as their refinement edge.

use std::collections::HashMap;

use super::{midpoint, Mesh, MeshError};

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// How a marked triangle is subdivided before closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitRule {
    /// One bisection through the refinement edge (two children).
    Bisect,
    /// All three edges bisected (four children), the bisection analogue of
    /// regular red refinement.
    #[default]
    Full,
}

/// Refines `marked` triangles by a single newest-vertex bisection and closes
/// the result to a conforming mesh. Unrefined triangles keep their relative
/// order; refined ones are replaced in place by their children.
pub fn bisect(mesh: &Mesh, marked: &[usize]) -> Result<Mesh, MeshError> {
    refine(mesh, marked, SplitRule::Bisect)
}

/// [`bisect`] with a choice of how marked triangles are split.
pub fn refine(mesh: &Mesh, marked: &[usize], rule: SplitRule) -> Result<Mesh, MeshError> {
    let nt = mesh.n_triangles();
    if nt == 0 {
        return Err(MeshError::Empty);
    }
    if let Some(&bad) = marked.iter().find(|&&t| t >= nt) {
        return Err(MeshError::BadIndex(bad));
    }
    if marked.is_empty() {
        return Ok(mesh.clone());
    }

    let tris = mesh.triangles();
    let mut adjacent: HashMap<(usize, usize), [usize; 2]> = HashMap::with_capacity(2 * nt);
    for (t, tri) in tris.iter().enumerate() {
        for i in 0..3 {
            let k = key(tri[(i + 1) % 3], tri[(i + 2) % 3]);
            adjacent.entry(k).and_modify(|slot| slot[1] = t).or_insert([t, usize::MAX]);
        }
    }
    let ref_key = |t: usize| {
        let tri = tris[t];
        let r = mesh.refinement_edge(t);
        key(tri[(r + 1) % 3], tri[(r + 2) % 3])
    };

    let mut split: HashMap<(usize, usize), usize> = HashMap::new();
    let mut work: Vec<usize> = Vec::new();
    let mark_edge = |k: (usize, usize), split: &mut HashMap<(usize, usize), usize>, work: &mut Vec<usize>| {
        if split.insert(k, usize::MAX).is_none() {
            for &t in adjacent[&k].iter().filter(|&&t| t != usize::MAX) {
                work.push(t);
            }
        }
    };
    for &t in marked {
        match rule {
            SplitRule::Bisect => mark_edge(ref_key(t), &mut split, &mut work),
            SplitRule::Full => {
                let tri = tris[t];
                for i in 0..3 {
                    mark_edge(key(tri[(i + 1) % 3], tri[(i + 2) % 3]), &mut split, &mut work);
                }
            }
        }
    }
    while let Some(t) = work.pop() {
        let k = ref_key(t);
        if !split.contains_key(&k) {
            mark_edge(k, &mut split, &mut work);
        }
    }

    // Midpoints are numbered in triangle/local-edge order so the output does
    // not depend on hash iteration order.
    let mut vertices = mesh.vertices().to_vec();
    for tri in tris {
        for i in 0..3 {
            let (a, b) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
            if let Some(slot) = split.get_mut(&key(a, b)) {
                if *slot == usize::MAX {
                    *slot = vertices.len();
                    vertices.push(midpoint(mesh.vertex(a), mesh.vertex(b)));
                }
            }
        }
    }

    let mut triangles = Vec::with_capacity(nt + 2 * marked.len());
    let mut refinement_edge = Vec::with_capacity(triangles.capacity());
    let mut generation = Vec::with_capacity(triangles.capacity());
    let mut in_region = Vec::with_capacity(triangles.capacity());
    for (t, tri) in tris.iter().enumerate() {
        let r = mesh.refinement_edge(t);
        let (o, p, q) = (tri[r], tri[(r + 1) % 3], tri[(r + 2) % 3]);
        let gen = mesh.generation(t);
        let tag = mesh.in_region(t);
        let mut push = |tri: [usize; 3], gen: u32| {
            triangles.push(tri);
            refinement_edge.push(0u8);
            generation.push(gen);
            in_region.push(tag);
        };
        let Some(&m) = split.get(&key(p, q)) else {
            triangles.push(*tri);
            refinement_edge.push(r as u8);
            generation.push(gen);
            in_region.push(tag);
            continue;
        };
        // children (m, o, p) and (m, q, o); their refinement edges are (o, p) and (q, o)
        match split.get(&key(o, p)) {
            Some(&m1) => {
                push([m1, m, o], gen + 2);
                push([m1, p, m], gen + 2);
            }
            None => push([m, o, p], gen + 1),
        }
        match split.get(&key(q, o)) {
            Some(&m2) => {
                push([m2, m, q], gen + 2);
                push([m2, o, m], gen + 2);
            }
            None => push([m, q, o], gen + 1),
        }
    }
    Ok(Mesh::from_parts(vertices, triangles, refinement_edge, generation, in_region, mesh.region()))
}
