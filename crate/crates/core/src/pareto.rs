//! Weighted Riccati scans, the output-feedback Pareto condition, η1 and
//! two-player Nash bargaining over the weight simplex.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::lyapriccati::{self, SolveError};
use crate::matlib::{Matrix, Vector};
use crate::model::{self, GameDefinition, ModelError, StructuredGain, WeightVector};

/// Tolerance on the Pareto structural residual.
pub const SC1_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParetoError {
    #[error("Riccati solution violates the output structure (residual {residual:e})")]
    Sc1Violated { residual: f64 },
    #[error("no grid weight is individually rational for the disagreement point")]
    NoIndividuallyRationalPoint,
    #[error("bargaining needs exactly two players, game has {0}")]
    NotTwoPlayers(usize),
    #[error("disagreement costs must be positive")]
    BadDisagreement,
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `max_i ‖G_i R_α⁻¹ B'P (I − C_i'(C_iC_i')⁻¹C_i)‖_F`.
pub fn sc1_residual(p: &Matrix, game: &GameDefinition, alpha: &WeightVector) -> Result<f64, ParetoError> {
    let agg = model::aggregate(game, alpha)?;
    let k = lyapriccati::lqr_gain(&agg.b, &agg.r, p)?;
    Ok((0..game.num_players())
        .map(|i| (game.gain_rows(&k, i) * game.kernel_projector(i)).norm())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize)]
pub struct ParetoScanRow {
    pub alpha: WeightVector,
    pub are_residual: Option<f64>,
    pub sc1_residual: Option<f64>,
    pub passes: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParetoScan {
    pub rows: Vec<ParetoScanRow>,
    pub tol: f64,
    pub all_fail: bool,
}

impl ParetoScan {
    /// `alpha_1,...,alpha_N,are_residual,sc1_residual,passes`
    pub fn to_csv(&self) -> String {
        let n = self.rows.first().map_or(0, |r| r.alpha.len());
        let mut out: Vec<String> = (1..=n).map(|i| format!("alpha_{i}")).collect();
        out.extend(["are_residual", "sc1_residual", "passes"].map(String::from));
        let mut s = out.join(",");
        s.push('\n');
        let num = |v: Option<f64>| v.map_or_else(|| "NaN".to_string(), |x| format!("{x:.16e}"));
        for r in &self.rows {
            let mut cells: Vec<String> = r.alpha.as_slice().iter().map(|a| format!("{a}")).collect();
            cells.push(num(r.are_residual));
            cells.push(num(r.sc1_residual));
            cells.push(r.passes.to_string());
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

/// Weighted Riccati solve and Pareto structural residual per grid weight.
/// Per-row failures are recorded, not propagated.
pub fn pareto_scan(game: &GameDefinition, grid: &[WeightVector], tol: f64) -> ParetoScan {
    let rows: Vec<ParetoScanRow> = grid
        .par_iter()
        .map(|alpha| {
            let res = lyapriccati::weighted_optimal(game, alpha)
                .map_err(ParetoError::from)
                .and_then(|(sol, _)| Ok((sol.residual, sc1_residual(&sol.p, game, alpha)?)));
            match res {
                Ok((are, sc1)) => ParetoScanRow {
                    alpha: alpha.clone(),
                    are_residual: Some(are),
                    sc1_residual: Some(sc1),
                    passes: sc1 <= tol,
                    error: None,
                },
                Err(e) => ParetoScanRow {
                    alpha: alpha.clone(),
                    are_residual: None,
                    sc1_residual: None,
                    passes: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    ParetoScan {
        all_fail: !rows.iter().any(|r| r.passes),
        rows,
        tol,
    }
}

/// Blocks `F_i⋆ = −G_iR_α⁻¹B'P_αC_i'(C_iC_i')⁻¹` of the weighted-optimal gain.
pub fn output_feedback_pareto_gain(
    p: &Matrix,
    game: &GameDefinition,
    alpha: &WeightVector,
) -> Result<StructuredGain, ParetoError> {
    let residual = sc1_residual(p, game, alpha)?;
    if residual > SC1_TOL {
        return Err(ParetoError::Sc1Violated { residual });
    }
    let agg = model::aggregate(game, alpha)?;
    let k = lyapriccati::lqr_gain(&agg.b, &agg.r, p)?;
    let blocks = (0..game.num_players())
        .map(|i| game.gain_rows(&k, i) * game.output_pinv(i))
        .collect();
    Ok(model::assemble_gain(blocks, game)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status")]
pub enum Eta1 {
    Available { j_po: f64, j_opt: f64, eta1: f64 },
    Unavailable { sc1_residual: f64 },
}

/// `η1 = J_PO/J_OPT` when the weighted-optimal gain is implementable by
/// output feedback.
pub fn eta1(game: &GameDefinition, x0: &Vector, alpha: &WeightVector) -> Result<Eta1, ParetoError> {
    let (sol, _) = lyapriccati::weighted_optimal(game, alpha)?;
    let gain = match output_feedback_pareto_gain(&sol.p, game, alpha) {
        Ok(g) => g,
        Err(ParetoError::Sc1Violated { residual }) => {
            return Ok(Eta1::Unavailable {
                sc1_residual: residual,
            })
        }
        Err(e) => return Err(e),
    };
    let j_po = lyapriccati::evaluate_costs(&gain, game, alpha, x0)?.team;
    let j_opt = lyapriccati::optimal_team_cost(game, x0)?;
    Ok(Eta1::Available {
        j_po,
        j_opt,
        eta1: j_po / j_opt,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FrontierPoint {
    pub alpha: WeightVector,
    pub j1: f64,
    pub j2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Bargain {
    pub alpha: WeightVector,
    pub product: f64,
    pub j1: f64,
    pub j2: f64,
    pub frontier: Vec<FrontierPoint>,
}

/// Grid Nash bargaining over the full-information weighted-optimal frontier.
///
/// Maximizes `(d_1 − J_1(α))(d_2 − J_2(α))` over individually rational grid
/// points; ties go to the weight closest to `(0.5, 0.5)`.
pub fn nash_bargain_2p(
    game: &GameDefinition,
    x0: &Vector,
    d: (f64, f64),
    grid: &[WeightVector],
) -> Result<Bargain, ParetoError> {
    if game.num_players() != 2 {
        return Err(ParetoError::NotTwoPlayers(game.num_players()));
    }
    if !(d.0 > 0.0 && d.1 > 0.0) {
        return Err(ParetoError::BadDisagreement);
    }
    let frontier = grid
        .par_iter()
        .map(|alpha| {
            let (_, f) = lyapriccati::weighted_optimal(game, alpha)?;
            let c = lyapriccati::evaluate_costs_matrix(&f, game, alpha, x0, 1.0)?;
            Ok(FrontierPoint {
                alpha: alpha.clone(),
                j1: c.per_player[0],
                j2: c.per_player[1],
            })
        })
        .collect::<Result<Vec<_>, ParetoError>>()?;
    let mut best: Option<(f64, f64, usize)> = None;
    for (idx, pt) in frontier.iter().enumerate() {
        if pt.j1 > d.0 || pt.j2 > d.1 {
            continue;
        }
        let product = (d.0 - pt.j1) * (d.1 - pt.j2);
        let dist = (pt.alpha.as_slice()[0] - 0.5).abs();
        let better = match best {
            None => true,
            Some((bp, bd, _)) => product > bp || (product == bp && dist < bd),
        };
        if better {
            best = Some((product, dist, idx));
        }
    }
    let (product, _, idx) = best.ok_or(ParetoError::NoIndividuallyRationalPoint)?;
    let pt = &frontier[idx];
    Ok(Bargain {
        alpha: pt.alpha.clone(),
        product,
        j1: pt.j1,
        j2: pt.j2,
        frontier,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;
    use crate::model::simplex_grid;

    #[test]
    fn two_player_has_no_output_pareto_solution() {
        let g = cases::two_player_game();
        let alpha = WeightVector::uniform(2).unwrap();
        let (sol, f) = lyapriccati::weighted_optimal(&g, &alpha).unwrap();
        let r = sc1_residual(&sol.p, &g, &alpha).unwrap();
        assert!(r > 1e-6);
        assert!((r - model::structural_residual(&f, &g)).abs() < 1e-10);
        assert!(matches!(
            eta1(&g, &cases::two_player_x0(), &alpha).unwrap(),
            Eta1::Unavailable { .. }
        ));
    }

    #[test]
    fn full_information_scan_passes() {
        let g = cases::two_player_game().full_information().unwrap();
        let scan = pareto_scan(&g, &simplex_grid(2, 0.1).unwrap(), SC1_TOL);
        assert_eq!(scan.rows.len(), 9);
        assert!(scan.rows.iter().all(|r| r.passes));
        let csv = scan.to_csv();
        assert!(csv.starts_with("alpha_1,alpha_2,are_residual,sc1_residual,passes\n"));
        assert_eq!(csv.lines().count(), 10);
    }

    #[test]
    fn uniform_weights_full_information_eta1_is_one() {
        let g = cases::two_player_game().full_information().unwrap();
        let alpha = WeightVector::uniform(2).unwrap();
        match eta1(&g, &cases::two_player_x0(), &alpha).unwrap() {
            Eta1::Available { eta1, .. } => assert!((eta1 - 1.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn symmetric_bargain_and_dominated_disagreement() {
        let one = crate::matlib::from_rows(&[vec![1.0]]).unwrap();
        let p = |b: Vec<f64>| model::Player {
            b: crate::matlib::from_rows(&[vec![b[0]], vec![b[1]]]).unwrap(),
            c: Matrix::identity(2, 2),
            q: Matrix::identity(2, 2),
            r: one.clone(),
        };
        let g = GameDefinition::new(-Matrix::identity(2, 2), vec![p(vec![1.0, 0.0]), p(vec![0.0, 1.0])])
            .unwrap();
        let x0 = Vector::from_vec(vec![1.0, 1.0]);
        let grid = simplex_grid(2, 0.01).unwrap();
        let b = nash_bargain_2p(&g, &x0, (2.0, 2.0), &grid).unwrap();
        assert!((b.alpha.as_slice()[0] - 0.5).abs() < 1e-12);
        assert!(matches!(
            nash_bargain_2p(&g, &x0, (1e-3, 1e-3), &grid),
            Err(ParetoError::NoIndividuallyRationalPoint)
        ));
    }
}
