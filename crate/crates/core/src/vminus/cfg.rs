//! Control-flow edges, reachability, and dominators.

use std::collections::{BTreeMap, BTreeSet};

use crate::term::Name;

use super::VFunction;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown block label `{0}`")]
pub struct UnknownLabel(pub Name);

/// Distinct successor labels in terminator order.
pub fn successors(f: &VFunction, l: &Name) -> Result<Vec<Name>, UnknownLabel> {
    let b = f.block(l).ok_or_else(|| UnknownLabel(l.clone()))?;
    let mut out: Vec<Name> = Vec::new();
    for t in b.terminator.targets() {
        if !out.contains(t) {
            out.push(t.clone());
        }
    }
    Ok(out)
}

/// Distinct labels of blocks that branch to `l`, in block order.
pub fn predecessors(f: &VFunction, l: &Name) -> Result<Vec<Name>, UnknownLabel> {
    if f.block(l).is_none() {
        return Err(UnknownLabel(l.clone()));
    }
    Ok(f.blocks
        .iter()
        .filter(|b| b.terminator.targets().contains(&l))
        .map(|b| b.label.clone())
        .collect())
}

/// Successor indices per block; edges to missing labels are dropped.
pub(crate) fn successor_indices(f: &VFunction) -> Vec<Vec<usize>> {
    f.blocks
        .iter()
        .map(|b| {
            let mut out: Vec<usize> = Vec::new();
            for t in b.terminator.targets() {
                if let Some(i) = f.block_index(t) {
                    if !out.contains(&i) {
                        out.push(i);
                    }
                }
            }
            out
        })
        .collect()
}

/// Labels reachable from the entry, in block order.
pub fn reachable_blocks(f: &VFunction) -> Vec<Name> {
    let succ = successor_indices(f);
    let mut seen = vec![false; f.blocks.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &succ[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    f.blocks
        .iter()
        .zip(seen)
        .filter(|(_, s)| *s)
        .map(|(b, _)| b.label.clone())
        .collect()
}

/// Immediate dominators of the blocks reachable from the entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomTree {
    pub entry: Name,
    /// Absent for the entry and for unreachable blocks.
    pub idom: BTreeMap<Name, Name>,
    /// Reachable labels in block order.
    pub reachable: Vec<Name>,
}

impl DomTree {
    pub fn idom(&self, l: &Name) -> Option<&Name> {
        self.idom.get(l)
    }

    pub fn is_reachable(&self, l: &Name) -> bool {
        self.reachable.contains(l)
    }

    /// Dominator-tree children of `l`, in block order.
    pub fn children(&self, l: &Name) -> Vec<Name> {
        self.reachable
            .iter()
            .filter(|c| self.idom.get(*c) == Some(l))
            .cloned()
            .collect()
    }

    /// Reflexive dominance; false whenever `b` is unreachable.
    pub fn dominates(&self, a: &Name, b: &Name) -> bool {
        if !self.is_reachable(b) {
            return false;
        }
        let mut cur = b;
        loop {
            if cur == a {
                return true;
            }
            match self.idom.get(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
    }

    /// Every dominator of `l`, itself included.
    pub fn dominators_of(&self, l: &Name) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        if !self.is_reachable(l) {
            return out;
        }
        let mut cur = l.clone();
        loop {
            out.insert(cur.clone());
            match self.idom.get(&cur) {
                Some(p) => cur = p.clone(),
                None => return out,
            }
        }
    }
}

/// Lengauer–Tarjan with path compression.
pub fn compute_dominators(f: &VFunction) -> DomTree {
    let n = f.blocks.len();
    let succ = successor_indices(f);
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (v, ws) in succ.iter().enumerate() {
        for &w in ws {
            pred[w].push(v);
        }
    }

    // Depth-first numbering from the entry; `dfnum[v] == NONE` means unreached.
    const NONE: usize = usize::MAX;
    let mut dfnum = vec![NONE; n];
    let mut vertex: Vec<usize> = Vec::new();
    let mut parent = vec![NONE; n];
    let mut stack = vec![(0usize, NONE)];
    while let Some((v, p)) = stack.pop() {
        if dfnum[v] != NONE {
            continue;
        }
        dfnum[v] = vertex.len();
        vertex.push(v);
        parent[v] = p;
        for &w in succ[v].iter().rev() {
            if dfnum[w] == NONE {
                stack.push((w, v));
            }
        }
    }

    let mut semi: Vec<usize> = dfnum.clone();
    let mut ancestor = vec![NONE; n];
    let mut label: Vec<usize> = (0..n).collect();
    let mut idom = vec![NONE; n];
    let mut bucket: Vec<Vec<usize>> = vec![Vec::new(); n];

    fn compress(v: usize, ancestor: &mut [usize], label: &mut [usize], semi: &[usize]) {
        let a = ancestor[v];
        if ancestor[a] != usize::MAX {
            compress(a, ancestor, label, semi);
            if semi[label[a]] < semi[label[v]] {
                label[v] = label[a];
            }
            ancestor[v] = ancestor[a];
        }
    }
    fn eval(v: usize, ancestor: &mut [usize], label: &mut [usize], semi: &[usize]) -> usize {
        if ancestor[v] == usize::MAX {
            v
        } else {
            compress(v, ancestor, label, semi);
            label[v]
        }
    }

    for &w in vertex.iter().skip(1).rev() {
        for &v in &pred[w] {
            if dfnum[v] == NONE {
                continue;
            }
            let u = eval(v, &mut ancestor, &mut label, &semi);
            if semi[u] < semi[w] {
                semi[w] = semi[u];
            }
        }
        bucket[vertex[semi[w]]].push(w);
        let p = parent[w];
        ancestor[w] = p;
        for v in std::mem::take(&mut bucket[p]) {
            let u = eval(v, &mut ancestor, &mut label, &semi);
            idom[v] = if semi[u] < semi[v] { u } else { p };
        }
    }
    for &w in vertex.iter().skip(1) {
        if idom[w] != vertex[semi[w]] {
            idom[w] = idom[idom[w]];
        }
    }

    let name = |i: usize| f.blocks[i].label.clone();
    let mut reachable: Vec<usize> = vertex.clone();
    reachable.sort_unstable();
    DomTree {
        entry: name(0),
        idom: vertex.iter().skip(1).map(|&w| (name(w), name(idom[w]))).collect(),
        reachable: reachable.into_iter().map(name).collect(),
    }
}
