use petgraph::unionfind::UnionFind;

use super::{parse_common, parse_floats, write_floats, Estimator};
use crate::dataset::SparseDataset;
use crate::error::{Error, Result};
use crate::query::Literal;

/// One edge of the dependence forest with its pairwise joint.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeEdge {
    pub a: usize,
    pub b: usize,
    /// `joint[x_a][x_b]`.
    pub joint: [[f64; 2]; 2],
    /// Mutual information in nats.
    pub mi: f64,
}

/// Maximum-mutual-information spanning forest over the attributes.
#[derive(Clone, Debug)]
pub struct ChowLiuTree {
    marginal: Vec<f64>,
    n: usize,
    edges: Vec<TreeEdge>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl PartialEq for ChowLiuTree {
    fn eq(&self, other: &Self) -> bool {
        self.marginal == other.marginal && self.n == other.n && self.edges == other.edges
    }
}

/// Mutual information of a 2x2 joint, with 0 log 0 = 0.
pub fn mutual_information(joint: &[[f64; 2]; 2]) -> f64 {
    let pa = [joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]];
    let pb = [joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]];
    let mut mi = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let p = joint[x][y];
            if p > 0.0 {
                mi += p * (p / (pa[x] * pb[y])).ln();
            }
        }
    }
    mi
}

impl ChowLiuTree {
    pub fn build(data: &SparseDataset) -> Result<Self> {
        Self::build_with(data, false)
    }

    /// `laplace` applies add-one smoothing to every 2x2 table (and the
    /// matching `+2 / +4` smoothing to the node marginals).
    pub fn build_with(data: &SparseDataset, laplace: bool) -> Result<Self> {
        let (k, n) = (data.k(), data.n());
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut single = vec![0u64; k];
        let mut pair = vec![0u64; k * k];
        for row in data.rows() {
            for (i, &a) in row.iter().enumerate() {
                single[a] += 1;
                for &b in &row[i + 1..] {
                    pair[a * k + b] += 1;
                }
            }
        }
        let (add_cell, add_total) = if laplace { (1.0, 4.0) } else { (0.0, 0.0) };
        let denom = n as f64 + add_total;
        let marginal: Vec<f64> = single.iter().map(|&c| (c as f64 + 2.0 * add_cell) / denom).collect();

        let mut candidates = Vec::with_capacity(k * (k.saturating_sub(1)) / 2);
        for a in 0..k {
            for b in a + 1..k {
                let c11 = pair[a * k + b];
                let counts = [
                    [n as u64 + c11 - single[a] - single[b], single[b] - c11],
                    [single[a] - c11, c11],
                ];
                let joint = counts.map(|row| row.map(|c| (c as f64 + add_cell) / denom));
                let mi = mutual_information(&joint);
                candidates.push(TreeEdge { a, b, joint, mi });
            }
        }
        // Heaviest first; ties by (a, b).
        candidates.sort_by(|x, y| y.mi.total_cmp(&x.mi).then((x.a, x.b).cmp(&(y.a, y.b))));

        let mut forest = UnionFind::new(k);
        let mut edges = Vec::new();
        for e in candidates {
            if e.mi <= 0.0 || edges.len() + 1 == k {
                break;
            }
            if forest.union(e.a, e.b) {
                edges.push(e);
            }
        }
        Ok(Self::from_parts(marginal, n, edges))
    }

    fn from_parts(marginal: Vec<f64>, n: usize, edges: Vec<TreeEdge>) -> Self {
        let mut adjacency = vec![Vec::new(); marginal.len()];
        for (i, e) in edges.iter().enumerate() {
            adjacency[e.a].push((e.b, i));
            adjacency[e.b].push((e.a, i));
        }
        ChowLiuTree {
            marginal,
            n,
            edges,
            adjacency,
        }
    }

    pub fn marginal(&self) -> &[f64] {
        &self.marginal
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[TreeEdge] {
        &self.edges
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.mi).sum()
    }

    /// `k` marginals plus one free parameter per edge.
    pub fn free_params(&self) -> u64 {
        (self.marginal.len() + self.edges.len()) as u64
    }

    /// `k` marginals plus the four cells of every stored edge table.
    pub fn stored_params(&self) -> u64 {
        (self.marginal.len() + 4 * self.edges.len()) as u64
    }

    fn node_prob(&self, v: usize, x: usize) -> f64 {
        if x == 1 {
            self.marginal[v]
        } else {
            1.0 - self.marginal[v]
        }
    }

    /// `P(x_child | x_parent)` along edge `e`.
    fn conditional(&self, e: usize, parent: usize, x_parent: usize, x_child: usize) -> f64 {
        let edge = &self.edges[e];
        let joint = if edge.a == parent {
            edge.joint[x_parent][x_child]
        } else {
            edge.joint[x_child][x_parent]
        };
        let p = self.node_prob(parent, x_parent);
        if p > 0.0 {
            joint / p
        } else {
            0.0
        }
    }

    /// Message from the subtree rooted at `v` (entered from `parent` via
    /// `edge`), indexed by the parent's value. `None` when the subtree holds
    /// no query variable, in which case it sums out to 1.
    fn message(
        &self,
        v: usize,
        from: Option<(usize, usize)>,
        fixed: &[Option<bool>],
        visited: &mut [bool],
    ) -> Option<[f64; 2]> {
        visited[v] = true;
        let mut local = [1.0, 1.0];
        let mut relevant = fixed[v].is_some();
        for &(w, e) in &self.adjacency[v] {
            if from.is_some_and(|(p, _)| p == w) {
                continue;
            }
            if let Some(m) = self.message(w, Some((v, e)), fixed, visited) {
                relevant = true;
                local[0] *= m[0];
                local[1] *= m[1];
            }
        }
        if !relevant {
            return None;
        }
        let allowed: &[usize] = match fixed[v] {
            Some(true) => &[1],
            Some(false) => &[0],
            None => &[0, 1],
        };
        Some(match from {
            None => {
                let total = allowed.iter().map(|&x| self.node_prob(v, x) * local[x]).sum();
                [total, total]
            }
            Some((parent, e)) => [0, 1].map(|xp| {
                allowed
                    .iter()
                    .map(|&x| self.conditional(e, parent, xp, x) * local[x])
                    .sum()
            }),
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("model=chowliu\nn={}\n", self.n);
        write_floats(&mut out, &self.marginal);
        for e in &self.edges {
            out.push_str(&format!("{} {} ", e.a, e.b));
            write_floats(&mut out, &[e.joint[1][1], e.joint[1][0], e.joint[0][1], e.joint[0][0]]);
        }
        out
    }

    pub(super) fn from_lines(lines: &[(usize, &str)]) -> Result<Self> {
        let (n, marginal) = parse_common(lines)?;
        let k = marginal.len();
        let mut edges = Vec::new();
        let mut forest = UnionFind::new(k);
        for &(line, text) in &lines[3..] {
            let mut parts = text.splitn(3, char::is_whitespace);
            let mut endpoint = || -> Result<usize> {
                let tok = parts.next().unwrap_or("");
                tok.parse::<usize>()
                    .ok()
                    .filter(|&v| v < k)
                    .ok_or_else(|| Error::parse(line, format!("bad edge endpoint {tok:?}")))
            };
            let (a, b) = (endpoint()?, endpoint()?);
            let cells = parse_floats(line, parts.next().unwrap_or(""))?;
            let [p11, p10, p01, p00] = cells[..] else {
                return Err(Error::parse(line, "edge needs i j p11 p10 p01 p00"));
            };
            if a == b || !forest.union(a, b) {
                return Err(Error::parse(line, format!("edge {a}-{b} closes a cycle")));
            }
            let joint = [[p00, p01], [p10, p11]];
            edges.push(TreeEdge {
                a,
                b,
                joint,
                mi: mutual_information(&joint),
            });
        }
        Ok(Self::from_parts(marginal, n, edges))
    }
}

impl Estimator for ChowLiuTree {
    fn conjunctive_prob(&self, literals: &[Literal]) -> f64 {
        let k = self.marginal.len();
        let mut fixed = vec![None; k];
        for l in literals {
            fixed[l.attr] = Some(l.value);
        }
        let mut visited = vec![false; k];
        let mut prob = 1.0;
        for l in literals {
            if !visited[l.attr] {
                let m = self
                    .message(l.attr, None, &fixed, &mut visited)
                    .expect("root is a query variable");
                prob *= m[0];
            }
        }
        prob
    }

    fn k(&self) -> usize {
        self.marginal.len()
    }

    fn memory_params(&self) -> u64 {
        self.stored_params()
    }
}
