//! JSON files for games, problems, gains and graphs.
//!
//! Matrices are nested row-major arrays. Validation errors name the JSON
//! path of the offending value, e.g. `players[1].R`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    assemble_gain, invalid, DirectedGraph, GameDefinition, GcscProblem, Mode, ModelError, Player,
    StructuredGain, WeightVector, DEFAULT_EPSILON,
};
use crate::matlib::{self, Matrix, Vector};

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerFile {
    #[serde(rename = "B")]
    pub b: Rows,
    #[serde(rename = "C")]
    pub c: Rows,
    #[serde(rename = "Q")]
    pub q: Rows,
    #[serde(rename = "R")]
    pub r: Rows,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    #[serde(rename = "A")]
    pub a: Rows,
    pub players: Vec<PlayerFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub alpha: Vec<f64>,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainFile {
    pub blocks: Vec<Rows>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub nodes: usize,
    pub edges: Vec<[usize; 2]>,
}

fn matrix(rows: &Rows, path: &str) -> Result<Matrix, ModelError> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(invalid(path, "matrix must be non-empty"));
    }
    matlib::from_rows(rows).map_err(|e| invalid(path, e.to_string()))
}

fn syntax<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, ModelError> {
    serde_json::from_str(text).map_err(|e| invalid("$", e.to_string()))
}

pub fn read_text(path: &Path) -> Result<String, ModelError> {
    std::fs::read_to_string(path).map_err(|e| invalid(path.display().to_string(), e.to_string()))
}

impl GameFile {
    pub fn into_game(self) -> Result<GameDefinition, ModelError> {
        let a = matrix(&self.a, "A")?;
        let players = self
            .players
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let at = |f: &str| format!("players[{i}].{f}");
                Ok(Player {
                    b: matrix(&p.b, &at("B"))?,
                    c: matrix(&p.c, &at("C"))?,
                    q: matrix(&p.q, &at("Q"))?,
                    r: matrix(&p.r, &at("R"))?,
                })
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        GameDefinition::new(a, players)
    }
}

impl From<&GameDefinition> for GameFile {
    fn from(g: &GameDefinition) -> Self {
        Self {
            a: matlib::to_rows(g.a()),
            players: g
                .players()
                .iter()
                .map(|p| PlayerFile {
                    b: matlib::to_rows(&p.b),
                    c: matlib::to_rows(&p.c),
                    q: matlib::to_rows(&p.q),
                    r: matlib::to_rows(&p.r),
                })
                .collect(),
        }
    }
}

impl ProblemFile {
    pub fn into_problem(self, game: GameDefinition) -> Result<GcscProblem, ModelError> {
        let alpha = WeightVector::new(self.alpha)?;
        let x0 = self.x0.map(Vector::from_vec);
        let radius = match (self.radius, &x0) {
            (Some(r), _) => r,
            (None, Some(x)) if x.norm() > 0.0 => x.norm(),
            _ => return Err(invalid("radius", "required when x0 is absent or zero")),
        };
        GcscProblem::new(
            game,
            alpha,
            self.delta,
            radius,
            x0,
            self.mode,
            self.epsilon.unwrap_or(DEFAULT_EPSILON),
        )
    }
}

impl From<&GcscProblem> for ProblemFile {
    fn from(p: &GcscProblem) -> Self {
        Self {
            alpha: p.alpha.as_slice().to_vec(),
            delta: p.delta,
            radius: Some(p.radius),
            x0: p.x0.as_ref().map(|x| x.iter().copied().collect()),
            mode: p.mode,
            epsilon: Some(p.epsilon),
        }
    }
}

impl GainFile {
    pub fn into_gain(self, game: &GameDefinition) -> Result<StructuredGain, ModelError> {
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(i, b)| matrix(b, &format!("blocks[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        assemble_gain(blocks, game)
    }
}

impl From<&StructuredGain> for GainFile {
    fn from(g: &StructuredGain) -> Self {
        Self {
            blocks: g.blocks().iter().map(matlib::to_rows).collect(),
        }
    }
}

impl GraphFile {
    pub fn into_graph(self) -> Result<DirectedGraph, ModelError> {
        DirectedGraph::new(self.nodes, self.edges.into_iter().map(|[j, i]| (j, i)).collect())
    }
}

pub fn parse_game(text: &str) -> Result<GameDefinition, ModelError> {
    syntax::<GameFile>(text)?.into_game()
}

pub fn parse_problem(text: &str, game: GameDefinition) -> Result<GcscProblem, ModelError> {
    syntax::<ProblemFile>(text)?.into_problem(game)
}

pub fn parse_gain(text: &str, game: &GameDefinition) -> Result<StructuredGain, ModelError> {
    syntax::<GainFile>(text)?.into_gain(game)
}

pub fn parse_graph(text: &str) -> Result<DirectedGraph, ModelError> {
    syntax::<GraphFile>(text)?.into_graph()
}

pub fn game_to_json(game: &GameDefinition) -> String {
    serde_json::to_string_pretty(&GameFile::from(game)).expect("plain data serializes")
}

pub fn problem_to_json(problem: &GcscProblem) -> String {
    serde_json::to_string_pretty(&ProblemFile::from(problem)).expect("plain data serializes")
}

pub fn gain_to_json(gain: &StructuredGain) -> String {
    serde_json::to_string_pretty(&GainFile::from(gain)).expect("plain data serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::two_player;

    #[test]
    fn game_round_trip() {
        let g = two_player();
        let back = parse_game(&game_to_json(&g)).unwrap();
        assert_eq!(back.a(), g.a());
        assert_eq!(back.players(), g.players());
    }

    #[test]
    fn errors_name_the_path() {
        let text = r#"{"A": [[0,1],[-1,-2]], "players": [
            {"B": [[1],[0]], "C": [[1,0]], "Q": [[1]], "R": [[1]]},
            {"B": [[0],[1]], "C": [[0,1]], "Q": [[5]], "R": [[-2.5]]}]}"#;
        let err = parse_game(text).unwrap_err().to_string();
        assert!(err.starts_with("players[1].R"), "{err}");

        let ragged = r#"{"A": [[0,1],[-1]], "players": []}"#;
        assert!(parse_game(ragged).unwrap_err().to_string().starts_with("A:"));
        assert!(parse_game("{not json").unwrap_err().to_string().starts_with("$:"));
    }

    #[test]
    fn problem_and_gain() {
        let g = two_player();
        let p = parse_problem(
            r#"{"alpha": [0.9048, 0.0952], "delta": 1.75, "x0": [1, 1.2], "mode": "point"}"#,
            g.clone(),
        )
        .unwrap();
        assert_eq!(p.mode, Mode::Point);
        assert!((p.radius - (1.0f64 + 1.44).sqrt()).abs() < 1e-15);
        assert_eq!(p.epsilon, DEFAULT_EPSILON);
        let err = parse_problem(r#"{"alpha": [0.5, 0.6], "delta": 1}"#, g.clone()).unwrap_err();
        assert!(err.to_string().starts_with("alpha"));

        let gain = parse_gain(r#"{"blocks": [[[-0.9818]], [[-0.6643]]]}"#, &g).unwrap();
        let again = parse_gain(&gain_to_json(&gain), &g).unwrap();
        assert_eq!(gain, again);
        let err = parse_gain(r#"{"blocks": [[[-0.9818, 1]], [[-0.6643]]]}"#, &g).unwrap_err();
        assert!(err.to_string().starts_with("blocks[0]"));
    }

    #[test]
    fn graph_file() {
        let g = parse_graph(r#"{"nodes": 3, "edges": [[0,1],[1,2]]}"#).unwrap();
        assert_eq!(g.in_neighbors(2), &[1]);
        let err = parse_graph(r#"{"nodes": 2, "edges": [[0,5]]}"#).unwrap_err();
        assert!(err.to_string().starts_with("edges[0]"));
    }
}
