use crate::matlib::{self, Matrix, Vector};
use crate::model::{
    build_from_graph, AgentSpec, DirectedGraph, GameDefinition, InputCoupling, Player,
    StateLayout, WeightVector,
};

fn m(rows: &[&[f64]]) -> Matrix {
    matlib::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).expect("literal matrix")
}

/// Two players on `A = [[0,1],[-1,-2]]`, each observing and actuating one state.
pub fn two_player_game() -> GameDefinition {
    GameDefinition::new(
        m(&[&[0.0, 1.0], &[-1.0, -2.0]]),
        vec![
            Player {
                b: m(&[&[1.0], &[0.0]]),
                c: m(&[&[1.0, 0.0]]),
                q: m(&[&[1.0]]),
                r: m(&[&[1.0]]),
            },
            Player {
                b: m(&[&[0.0], &[1.0]]),
                c: m(&[&[0.0, 1.0]]),
                q: m(&[&[5.0]]),
                r: m(&[&[2.5]]),
            },
        ],
    )
    .expect("two-player game is valid")
}

pub fn two_player_x0() -> Vector {
    Vector::from_vec(vec![1.0, 1.2])
}

pub fn two_player_alpha() -> WeightVector {
    WeightVector::new(vec![0.9048, 0.0952]).expect("valid weights")
}

pub const TWO_PLAYER_DELTA: f64 = 1.75;

/// Published structured gain for the two-player game.
pub fn two_player_printed_gain() -> Vec<Matrix> {
    vec![m(&[&[-0.9818]]), m(&[&[-0.6643]])]
}

/// Five heterogeneous agents; agents 2 and 5 carry a position and a velocity.
pub fn five_agent_graph() -> DirectedGraph {
    DirectedGraph::new(
        5,
        vec![(0, 1), (1, 2), (2, 0), (0, 4), (0, 3), (2, 3), (3, 4)],
    )
    .expect("valid graph")
}

pub fn five_agent_game() -> GameDefinition {
    let graph = five_agent_graph();
    let one = m(&[&[1.0]]);
    let agents = vec![
        AgentSpec { a: m(&[&[0.0]]), b: one.clone(), r: one.clone() },
        AgentSpec {
            a: m(&[&[1.0, 1.0], &[1.0, 1.0]]),
            b: m(&[&[1.0, 0.0], &[0.0, -1.0]]),
            r: Matrix::identity(2, 2),
        },
        AgentSpec { a: m(&[&[1.0]]), b: one.clone(), r: one.clone() },
        AgentSpec { a: m(&[&[2.0]]), b: one.clone(), r: one.clone() },
        AgentSpec {
            a: m(&[&[0.0, 1.0], &[0.0, 0.0]]),
            b: m(&[&[0.0], &[2.0]]),
            r: one.clone(),
        },
    ];
    let couplings = vec![
        InputCoupling { from: 0, to: 1, b: m(&[&[0.3], &[0.2]]) },
        InputCoupling { from: 0, to: 3, b: m(&[&[0.1]]) },
        InputCoupling { from: 0, to: 4, b: m(&[&[0.2], &[0.0]]) },
        InputCoupling { from: 1, to: 2, b: m(&[&[0.0, 0.2]]) },
        InputCoupling { from: 2, to: 0, b: m(&[&[0.2]]) },
        InputCoupling { from: 2, to: 3, b: m(&[&[0.3]]) },
        InputCoupling { from: 3, to: 4, b: m(&[&[0.1], &[0.0]]) },
    ];
    let layout = StateLayout::new(&[1, 2, 1, 1, 2]);
    let two_state = [1usize, 4];
    let weights = (0..5)
        .map(|i| {
            let mut w = Matrix::zeros(7, 7);
            for &j in graph.in_neighbors(i) {
                w += layout.difference_weight(i, j, 0);
                if two_state.contains(&i) && two_state.contains(&j) {
                    w += layout.difference_weight(i, j, 1);
                }
            }
            w
        })
        .collect::<Vec<_>>();
    build_from_graph(&graph, &agents, &couplings, &weights).expect("five-agent game is valid")
}

pub fn five_agent_x0() -> Vector {
    Vector::from_vec(vec![-0.3, -0.5, -0.4, -0.2, -0.1, -0.3, -0.4])
}

pub const FIVE_AGENT_DELTA: f64 = 0.25;

/// Published joint gain for the five-agent game (6×7).
pub fn five_agent_printed_matrix() -> Matrix {
    m(&[
        &[-1.3392, 0.0, 0.0, 0.5544, 0.0, 0.0, 0.0],
        &[0.9748, -3.9132, -2.4520, 0.0, 0.0, 0.0, 0.0],
        &[-0.4568, 2.4189, 2.8231, 0.0, 0.0, 0.0, 0.0],
        &[0.0, 0.2554, -0.3968, -3.9270, 0.0, 0.0, 0.0],
        &[0.8975, 0.0, 0.0, 0.1809, -5.5484, 0.0, 0.0],
        &[0.7665, 0.0, 0.0, 0.0, -0.3011, -1.4171, -1.8687],
    ])
}

/// Voltage tracking weight `diag(50000, 1)`.
pub fn microgrid_q() -> Matrix {
    m(&[&[50000.0, 0.0], &[0.0, 1.0]])
}

pub const MICROGRID_R: f64 = 0.01;

pub fn microgrid_graph() -> DirectedGraph {
    DirectedGraph::new(4, vec![(0, 1), (1, 2), (0, 3)]).expect("valid graph")
}

/// Four double-integrator generators in relative coordinates
/// `x_1 = ξ_1 − ξ_0, x_2 = ξ_2 − ξ_1, x_3 = ξ_3 − ξ_2, x_4 = ξ_4 − ξ_1`.
///
/// Each player weighs only its own relative state with `Q` and its input
/// with `R`.
pub fn microgrid_game() -> GameDefinition {
    let ag = m(&[&[0.0, 1.0], &[0.0, 0.0]]);
    let bg = m(&[&[0.0], &[1.0]]);
    let agent = AgentSpec {
        a: ag,
        b: bg.clone(),
        r: m(&[&[MICROGRID_R]]),
    };
    let couplings = [(0, 1), (1, 2), (0, 3)]
        .iter()
        .map(|&(from, to)| InputCoupling { from, to, b: -&bg })
        .collect::<Vec<_>>();
    let layout = StateLayout::new(&[2; 4]);
    let q = microgrid_q();
    let weights = (0..4).map(|i| layout.embed(i, &q)).collect::<Vec<_>>();
    build_from_graph(&microgrid_graph(), &vec![agent; 4], &couplings, &weights)
        .expect("microgrid game is valid")
}

/// `ξ_i(0) = (1, 0)`, `ξ_0 = (0.95, 0)` in relative coordinates.
pub fn microgrid_x0() -> Vector {
    let mut x = Vector::zeros(8);
    x[0] = 0.05;
    x
}

pub const MICROGRID_DELTA: f64 = 1.6;

/// Published joint gain for the microgrid game (4×8).
pub fn microgrid_printed_matrix() -> Matrix {
    m(&[
        &[-2320.7, -84.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        &[-1194.4, -70.8, -2440.5, -88.0, 0.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 75.3, -22.0, -2350.9, -69.4, 0.0, 0.0],
        &[-1014.8, -56.6, 0.0, 0.0, 0.0, 0.0, -2205.0, -78.2],
    ])
}

/// Distributed cooperative baseline `−c(I_4 ⊗ K)` with `c = 1`, `K = [2236, 67.6]`.
pub fn microgrid_baseline_matrix() -> Matrix {
    -matlib::kron(&Matrix::identity(4, 4), &m(&[&[2236.0, 67.6]]))
}

/// Map from relative states to tracking errors `ξ_i − ξ_0`.
pub fn microgrid_tracking_map() -> Matrix {
    let paths: [&[usize]; 4] = [&[0], &[0, 1], &[0, 1, 2], &[0, 3]];
    let mut t = Matrix::zeros(8, 8);
    for (i, path) in paths.iter().enumerate() {
        for &b in *path {
            t.view_mut((2 * i, 2 * b), (2, 2)).fill_with_identity();
        }
    }
    t
}
