//! Case-study games and reports.

mod games;

pub use games::*;

use serde::Serialize;

use crate::gcsc::{self, Stage, SynthesisError};
use crate::lyapriccati;
use crate::matlib::{self, Matrix, Vector};
use crate::model::{self, GameDefinition, GcscProblem, WeightVector};
use crate::sim;

/// Outcome of verifying a fixed gain.
#[derive(Debug, Clone, Serialize)]
pub struct VerifySummary {
    pub certified: bool,
    pub lmi_margin: Option<f64>,
    pub reason: Option<String>,
}

/// Costs and ratios of one gain.
#[derive(Debug, Clone, Serialize)]
pub struct GainSummary {
    pub per_player: Vec<f64>,
    pub j_alpha: f64,
    pub j_gc: f64,
    pub j_opt: f64,
    pub eta2: f64,
    pub team_bound: Option<f64>,
    pub closed_loop_margin: f64,
    pub verify: VerifySummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthesisSummary {
    pub succeeded: bool,
    pub failed_stage: Option<Stage>,
    pub stage1_margin: f64,
    pub stage2_margin: Option<f64>,
    pub chosen_candidate: Option<String>,
    pub structural_residual: Option<f64>,
    pub costs: Option<GainSummary>,
    pub quadrature_j_alpha: Option<f64>,
    pub gain: Option<Vec<Vec<f64>>>,
}

/// Team cost under the tracking-error objectives for two controllers.
#[derive(Debug, Clone, Serialize)]
pub struct BaselineComparison {
    pub baseline_team_cost: f64,
    pub printed_team_cost: f64,
    pub synthesized_team_cost: Option<f64>,
}

/// Largest `|ξ_i¹(t) − ξ_r|` at the end of the plotted window.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceCheck {
    pub t: f64,
    pub baseline_error: Option<f64>,
    pub printed_error: f64,
    pub synthesized_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseStudyReport {
    pub case: String,
    pub delta: f64,
    pub alpha: Vec<f64>,
    pub x0: Vec<f64>,
    pub printed: GainSummary,
    pub synthesized: SynthesisSummary,
    pub baseline: Option<BaselineComparison>,
    pub convergence: Option<ConvergenceCheck>,
    /// `‖x(T)‖` at the end of the plotted window under the printed gain.
    pub printed_final_norm: f64,
}

impl CaseStudyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

fn summarize(f: &Matrix, problem: &GcscProblem) -> Result<GainSummary, gcsc::GcscError> {
    let game = &problem.game;
    let x0 = problem.x0.as_ref().expect("case problems are point mode");
    let costs = lyapriccati::evaluate_costs_matrix(f, game, &problem.alpha, x0, 1.0)?;
    let m = gcsc::metrics_matrix(f, game, x0, problem.delta, &problem.alpha, None)?;
    let verify = match model::structured_from_matrix(f, game) {
        Ok(gain) => match gcsc::verify(&gain, problem) {
            Ok(c) => VerifySummary {
                certified: true,
                lmi_margin: Some(c.lmi_margin),
                reason: None,
            },
            Err(r) => VerifySummary {
                certified: false,
                lmi_margin: None,
                reason: Some(r.to_string()),
            },
        },
        Err(e) => VerifySummary {
            certified: false,
            lmi_margin: None,
            reason: Some(e.to_string()),
        },
    };
    Ok(GainSummary {
        per_player: costs.per_player,
        j_alpha: costs.weighted,
        j_gc: costs.team,
        j_opt: m.j_opt,
        eta2: m.eta2,
        team_bound: m.team_bound,
        closed_loop_margin: matlib::hurwitz_margin(&lyapriccati::closed_loop(game, f))?,
        verify,
    })
}

/// `J_α` by simulating to the tail criterion and integrating.
pub fn quadrature_weighted_cost(f: &Matrix, problem: &GcscProblem) -> Result<f64, gcsc::GcscError> {
    let game = &problem.game;
    let x0 = problem.x0.as_ref().expect("case problems are point mode");
    let agg = model::aggregate(game, &problem.alpha)?;
    let w = matlib::symmetrize(&(&agg.q + f.transpose() * &agg.r * f));
    let a_cl = lyapriccati::closed_loop(game, f);
    let h = sim::stable_step(&a_cl, sim::DEFAULT_STEP)?;
    let traj = sim::simulate_to_tail(&a_cl, f, x0, 1.0, h)?;
    Ok(sim::quadrature_cost(&traj, &w)?)
}

fn synthesize_summary(problem: &GcscProblem) -> Result<SynthesisSummary, gcsc::GcscError> {
    match gcsc::synthesize(problem) {
        Ok(r) => {
            let f = r.gain.matrix();
            Ok(SynthesisSummary {
                succeeded: true,
                failed_stage: None,
                stage1_margin: r.diagnostics.stage1_margin,
                stage2_margin: r.diagnostics.stage2_margin,
                chosen_candidate: r.diagnostics.chosen.clone(),
                structural_residual: Some(model::structural_residual(f, &problem.game)),
                costs: Some(summarize(f, problem)?),
                quadrature_j_alpha: Some(quadrature_weighted_cost(f, problem)?),
                gain: Some(matlib::to_rows(f)),
            })
        }
        Err(SynthesisError::Shortfall(s)) => Ok(SynthesisSummary {
            succeeded: false,
            failed_stage: Some(s.stage),
            stage1_margin: s.diagnostics.stage1_margin,
            stage2_margin: s.diagnostics.candidates.iter().filter_map(|c| c.stage2_margin).reduce(f64::max),
            chosen_candidate: None,
            structural_residual: None,
            costs: None,
            quadrature_j_alpha: None,
            gain: None,
        }),
        Err(SynthesisError::Invalid(e)) => Err(e),
    }
}

fn final_norm(game: &GameDefinition, f: &Matrix, x0: &Vector, t: f64) -> Result<f64, gcsc::GcscError> {
    let a_cl = lyapriccati::closed_loop(game, f);
    let h = sim::stable_step(&a_cl, sim::DEFAULT_STEP)?;
    let traj = sim::simulate(&a_cl, f, x0, t, h)?;
    Ok(traj.final_state().norm())
}

fn case_problem(game: GameDefinition, alpha: WeightVector, delta: f64, x0: Vector) -> GcscProblem {
    GcscProblem::point(game, alpha, delta, x0).expect("case data is valid")
}

/// Two-player example: printed gain and synthesis at the published weights.
pub fn case_two_player() -> Result<CaseStudyReport, gcsc::GcscError> {
    let problem = case_problem(two_player_game(), two_player_alpha(), TWO_PLAYER_DELTA, two_player_x0());
    let printed = model::assemble_gain(two_player_printed_gain(), &problem.game)?;
    let f = printed.matrix().clone();
    report("two-player", &problem, &f, 10.0, None, None)
}

fn report(
    name: &str,
    problem: &GcscProblem,
    printed: &Matrix,
    window: f64,
    baseline: Option<BaselineComparison>,
    convergence: Option<ConvergenceCheck>,
) -> Result<CaseStudyReport, gcsc::GcscError> {
    let x0 = problem.x0.clone().expect("case problems are point mode");
    Ok(CaseStudyReport {
        case: name.to_string(),
        delta: problem.delta,
        alpha: problem.alpha.as_slice().to_vec(),
        x0: x0.iter().copied().collect(),
        printed: summarize(printed, problem)?,
        synthesized: synthesize_summary(problem)?,
        baseline,
        convergence,
        printed_final_norm: final_norm(&problem.game, printed, &x0, window)?,
    })
}

/// Five-agent network: printed gain, synthesis at `δ = 0.25`, uniform weights.
pub fn case_five_agent() -> Result<CaseStudyReport, gcsc::GcscError> {
    let problem = case_problem(
        five_agent_game(),
        WeightVector::uniform(5)?,
        FIVE_AGENT_DELTA,
        five_agent_x0(),
    );
    report("five-agent", &problem, &five_agent_printed_matrix(), 8.0, None, None)
}

/// `Σ_i J̄_i = x0'Yx0` with `Y` solving the Lyapunov equation for
/// `½(T'(I⊗Q)T + F'(I⊗R)F)`, `T` the map to tracking errors.
pub fn microgrid_tracking_cost(f: &Matrix) -> Result<f64, gcsc::GcscError> {
    let game = microgrid_game();
    let t = microgrid_tracking_map();
    let q = matlib::kron(&Matrix::identity(4, 4), &microgrid_q());
    let w = (t.transpose() * q * &t + f.transpose() * f * MICROGRID_R) * 0.5;
    let a_cl = lyapriccati::closed_loop(&game, f);
    Ok(lyapriccati::quadratic_cost(&a_cl, &matlib::symmetrize(&w), &microgrid_x0())?)
}

/// Largest terminal-voltage deviation from the reference at time `t`.
pub fn microgrid_voltage_error(f: &Matrix, t: f64) -> Result<f64, gcsc::GcscError> {
    let game = microgrid_game();
    let a_cl = lyapriccati::closed_loop(&game, f);
    let h = sim::stable_step(&a_cl, 1e-5)?;
    let traj = sim::simulate(&a_cl, f, &microgrid_x0(), t, h)?;
    // ξ_i − ξ_0 = (T x)_i; the voltage is its first component.
    let err = microgrid_tracking_map() * traj.final_state();
    Ok((0..4).map(|i| err[2 * i].abs()).fold(0.0, f64::max))
}

/// Microgrid: printed gain, synthesis at `δ = 1.6`, and the comparison with
/// the distributed cooperative baseline.
pub fn case_microgrid() -> Result<CaseStudyReport, gcsc::GcscError> {
    let problem = case_problem(
        microgrid_game(),
        WeightVector::uniform(4)?,
        MICROGRID_DELTA,
        microgrid_x0(),
    );
    let printed = microgrid_printed_matrix();
    let baseline_f = microgrid_baseline_matrix();
    let mut rep = report("microgrid", &problem, &printed, 0.4, None, None)?;
    let synth = rep
        .synthesized
        .gain
        .as_ref()
        .map(|rows| matlib::from_rows(rows).expect("rectangular"));
    rep.baseline = Some(BaselineComparison {
        baseline_team_cost: microgrid_tracking_cost(&baseline_f)?,
        printed_team_cost: microgrid_tracking_cost(&printed)?,
        synthesized_team_cost: synth.as_ref().map(microgrid_tracking_cost).transpose()?,
    });
    rep.convergence = Some(ConvergenceCheck {
        t: 0.4,
        baseline_error: Some(microgrid_voltage_error(&baseline_f, 0.4)?),
        printed_error: microgrid_voltage_error(&printed, 0.4)?,
        synthesized_error: synth.as_ref().map(|f| microgrid_voltage_error(f, 0.4)).transpose()?,
    });
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lyapriccati::{evaluate_costs_matrix, optimal_team_cost, quadratic_cost};
    use crate::matlib::{self, Matrix};
    use crate::model::{self, WeightVector};

    #[test]
    fn printed_gains_are_structured() {
        let g = five_agent_game();
        assert!(model::structural_residual(&five_agent_printed_matrix(), &g) < 1e-15);
        let g = microgrid_game();
        assert!(model::structural_residual(&microgrid_printed_matrix(), &g) < 1e-15);
        assert!(model::structural_residual(&microgrid_baseline_matrix(), &g) < 1e-15);
    }

    #[test]
    fn microgrid_values() {
        let g = microgrid_game();
        let x0 = microgrid_x0();
        let alpha = WeightVector::uniform(4).unwrap();
        let c = evaluate_costs_matrix(&microgrid_printed_matrix(), &g, &alpha, &x0, 1.0).unwrap();
        let opt = optimal_team_cost(&g, &x0).unwrap();
        eprintln!("{c:?} opt {opt}");
        assert!((c.weighted - 1.2972).abs() / 1.2972 < 0.02);
        let t = microgrid_tracking_map();
        let q = matlib::kron(&Matrix::identity(4, 4), &microgrid_q());
        let f = microgrid_baseline_matrix();
        let w = (t.transpose() * q * &t + f.transpose() * &f * MICROGRID_R) * 0.5;
        let a_cl = g.a() + g.b() * &f;
        let base = quadratic_cost(&a_cl, &matlib::symmetrize(&w), &x0).unwrap();
        eprintln!("baseline {base}");
        assert!((base - 9.75).abs() / 9.75 < 0.02);
    }
}
