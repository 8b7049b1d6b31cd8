use super::{invalid, GameDefinition, ModelError, Player};
use crate::matlib::{self, Matrix};

/// Directed communication graph. An edge `(j, i)` means agent `i` receives
/// information from agent `j`, i.e. `j` is an in-neighbor of `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    nodes: usize,
    edges: Vec<(usize, usize)>,
    in_neighbors: Vec<Vec<usize>>,
}

impl DirectedGraph {
    pub fn new(nodes: usize, edges: Vec<(usize, usize)>) -> Result<Self, ModelError> {
        if nodes == 0 {
            return Err(invalid("nodes", "graph needs at least one node"));
        }
        let mut in_neighbors = vec![Vec::new(); nodes];
        for (k, &(j, i)) in edges.iter().enumerate() {
            if j >= nodes || i >= nodes {
                return Err(invalid(
                    format!("edges[{k}]"),
                    format!("({j}, {i}) references a node outside 0..{nodes}"),
                ));
            }
            if j == i {
                return Err(invalid(format!("edges[{k}]"), "self-loop"));
            }
            if in_neighbors[i].contains(&j) {
                return Err(invalid(format!("edges[{k}]"), format!("duplicate edge ({j}, {i})")));
            }
            in_neighbors[i].push(j);
        }
        for list in &mut in_neighbors {
            list.sort_unstable();
        }
        Ok(Self {
            nodes,
            edges,
            in_neighbors,
        })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        to < self.nodes && self.in_neighbors[to].contains(&from)
    }

    /// In-neighbors of `i`, ascending.
    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.in_neighbors[i]
    }

    /// `{i} ∪ N_i`, ascending.
    pub fn information_set(&self, i: usize) -> Vec<usize> {
        let mut s = self.in_neighbors[i].clone();
        s.push(i);
        s.sort_unstable();
        s
    }
}

/// Local dynamics and input weight of one agent.
#[derive(Debug, Clone)]
pub struct AgentSpec {
    /// `A_ii` (n_i×n_i)
    pub a: Matrix,
    /// `B_ii` (n_i×m_i)
    pub b: Matrix,
    /// `R_i` (m_i×m_i)
    pub r: Matrix,
}

/// Input of agent `from` entering the dynamics of agent `to` through `b`
/// (n_to × m_from). Requires the edge `from → to`.
#[derive(Debug, Clone)]
pub struct InputCoupling {
    pub from: usize,
    pub to: usize,
    pub b: Matrix,
}

/// Placement of each agent's local states inside the stacked state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateLayout {
    offsets: Vec<usize>,
}

impl StateLayout {
    pub fn new(dims: &[usize]) -> Self {
        let mut offsets = vec![0];
        for d in dims {
            offsets.push(offsets.last().unwrap() + d);
        }
        Self { offsets }
    }

    pub fn total(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn offset(&self, agent: usize) -> usize {
        self.offsets[agent]
    }

    pub fn dim(&self, agent: usize) -> usize {
        self.offsets[agent + 1] - self.offsets[agent]
    }

    /// Global weight `e e'` with `e = x_i[k] − x_j[k]`.
    pub fn difference_weight(&self, i: usize, j: usize, k: usize) -> Matrix {
        let n = self.total();
        let mut e = Matrix::zeros(n, 1);
        e[(self.offset(i) + k, 0)] += 1.0;
        e[(self.offset(j) + k, 0)] -= 1.0;
        &e * e.transpose()
    }

    /// Global weight with `local` on agent `i`'s diagonal block.
    pub fn embed(&self, i: usize, local: &Matrix) -> Matrix {
        let n = self.total();
        let d = self.dim(i);
        let mut w = Matrix::zeros(n, n);
        w.view_mut((self.offset(i), self.offset(i)), (d, d))
            .copy_from(local);
        w
    }

    /// Rows of `I_n` picking the states of `agents` in the given order.
    pub fn selector(&self, agents: &[usize]) -> Matrix {
        let rows: usize = agents.iter().map(|&a| self.dim(a)).sum();
        let mut c = Matrix::zeros(rows, self.total());
        let mut r = 0;
        for &a in agents {
            for k in 0..self.dim(a) {
                c[(r, self.offset(a) + k)] = 1.0;
                r += 1;
            }
        }
        c
    }
}

/// Assembles a game from a communication graph.
///
/// `A = ⊕A_ii`; player `j`'s input matrix carries `B_jj` in agent `j`'s rows
/// and each coupling `B_ij` in agent `i`'s rows; `C_i` selects the states of
/// `{i} ∪ N_i` in ascending agent order. `weights[i]` is a global n×n state
/// weight that may only involve those states; `Q_i = C_i W_i C_i'`.
pub fn build_from_graph(
    graph: &DirectedGraph,
    agents: &[AgentSpec],
    couplings: &[InputCoupling],
    weights: &[Matrix],
) -> Result<GameDefinition, ModelError> {
    let count = graph.nodes();
    if agents.len() != count {
        return Err(invalid(
            "agents",
            format!("{} agents for a graph with {count} nodes", agents.len()),
        ));
    }
    if weights.len() != count {
        return Err(invalid(
            "weights",
            format!("{} weights for a graph with {count} nodes", weights.len()),
        ));
    }
    for (i, ag) in agents.iter().enumerate() {
        let ni = ag.a.nrows();
        if ag.a.ncols() != ni || ag.b.nrows() != ni {
            return Err(invalid(
                format!("agents[{i}]"),
                "A_ii must be square and B_ii must have matching rows",
            ));
        }
    }
    let layout = StateLayout::new(&agents.iter().map(|a| a.a.nrows()).collect::<Vec<_>>());
    let n = layout.total();
    let a = matlib::direct_sum(&agents.iter().map(|g| g.a.clone()).collect::<Vec<_>>())?;

    let mut bs: Vec<Matrix> = agents
        .iter()
        .enumerate()
        .map(|(j, ag)| {
            let mut b = Matrix::zeros(n, ag.b.ncols());
            b.view_mut((layout.offset(j), 0), (layout.dim(j), ag.b.ncols()))
                .copy_from(&ag.b);
            b
        })
        .collect();
    for (k, cp) in couplings.iter().enumerate() {
        let path = format!("couplings[{k}]");
        if cp.from >= count || cp.to >= count {
            return Err(invalid(path, "coupling references an unknown agent"));
        }
        if !graph.has_edge(cp.from, cp.to) {
            return Err(invalid(
                path,
                format!("no edge {} -> {} for this coupling", cp.from, cp.to),
            ));
        }
        let mj = agents[cp.from].b.ncols();
        if cp.b.shape() != (layout.dim(cp.to), mj) {
            return Err(invalid(
                path,
                format!("expected {}x{mj}", layout.dim(cp.to)),
            ));
        }
        bs[cp.from]
            .view_mut((layout.offset(cp.to), 0), (layout.dim(cp.to), mj))
            .copy_from(&cp.b);
    }

    let mut players = Vec::with_capacity(count);
    for (i, ag) in agents.iter().enumerate() {
        let c = layout.selector(&graph.information_set(i));
        let w = &weights[i];
        if w.shape() != (n, n) {
            return Err(invalid(format!("weights[{i}]"), format!("expected {n}x{n}")));
        }
        let q = &c * w * c.transpose();
        let back = c.transpose() * &q * &c;
        if (&back - w).norm() > 1e-12 * (1.0 + w.norm()) {
            return Err(invalid(
                format!("weights[{i}]"),
                "weight involves states outside the agent's information set",
            ));
        }
        players.push(Player {
            b: std::mem::replace(&mut bs[i], Matrix::zeros(0, 0)),
            c,
            q,
            r: ag.r.clone(),
        });
    }
    GameDefinition::new(a, players)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::m;

    #[test]
    fn graph_validation() {
        assert!(DirectedGraph::new(2, vec![(0, 0)]).is_err());
        assert!(DirectedGraph::new(2, vec![(0, 2)]).is_err());
        let g = DirectedGraph::new(3, vec![(2, 0), (1, 0)]).unwrap();
        assert_eq!(g.in_neighbors(0), &[1, 2]);
        assert_eq!(g.information_set(1), vec![1]);
        assert_eq!(g.information_set(0), vec![0, 1, 2]);
    }

    #[test]
    fn isolated_node_is_own_lqr_problem() {
        let g = DirectedGraph::new(1, vec![]).unwrap();
        let ag = AgentSpec {
            a: m(&[&[0.0, 1.0], &[0.0, 0.0]]),
            b: m(&[&[0.0], &[1.0]]),
            r: m(&[&[1.0]]),
        };
        let w = Matrix::identity(2, 2);
        let game = build_from_graph(&g, std::slice::from_ref(&ag), &[], std::slice::from_ref(&w)).unwrap();
        let p = &game.players()[0];
        assert_eq!(p.c, Matrix::identity(2, 2));
        assert_eq!(p.q, w);
        assert_eq!(game.a(), &ag.a);
        assert_eq!(p.b, ag.b);
    }

    #[test]
    fn coupling_requires_edge() {
        let g = DirectedGraph::new(2, vec![(0, 1)]).unwrap();
        let ag = AgentSpec {
            a: m(&[&[-1.0]]),
            b: m(&[&[1.0]]),
            r: m(&[&[1.0]]),
        };
        let layout = StateLayout::new(&[1, 1]);
        let w = vec![layout.embed(0, &m(&[&[1.0]])), layout.difference_weight(1, 0, 0)];
        let bad = InputCoupling {
            from: 1,
            to: 0,
            b: m(&[&[0.5]]),
        };
        let err = build_from_graph(&g, &[ag.clone(), ag.clone()], &[bad], &w).unwrap_err();
        assert!(err.to_string().starts_with("couplings[0]"));
        let good = InputCoupling {
            from: 0,
            to: 1,
            b: m(&[&[0.5]]),
        };
        let game = build_from_graph(&g, &[ag.clone(), ag], &[good], &w).unwrap();
        assert_eq!(game.players()[0].b, m(&[&[1.0], &[0.5]]));
        assert_eq!(game.players()[1].c, Matrix::identity(2, 2));
        assert_eq!(game.players()[1].q, m(&[&[1.0, -1.0], &[-1.0, 1.0]]));
    }

    #[test]
    fn weight_outside_information_is_rejected() {
        let g = DirectedGraph::new(2, vec![]).unwrap();
        let ag = AgentSpec {
            a: m(&[&[-1.0]]),
            b: m(&[&[1.0]]),
            r: m(&[&[1.0]]),
        };
        let layout = StateLayout::new(&[1, 1]);
        let w = vec![layout.difference_weight(0, 1, 0), layout.embed(1, &m(&[&[1.0]]))];
        let err = build_from_graph(&g, &[ag.clone(), ag], &[], &w).unwrap_err();
        assert!(err.to_string().starts_with("weights[0]"));
    }
}
